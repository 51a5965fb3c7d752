//! The stochastic dynamics: thermostat collision rule, the discrete
//! collision chain on (boundary point, normal speed), the continuous-time
//! flow, and the suspension lift between them.
//!
//! At a collision with a scatterer at inverse temperature `beta`, the
//! normal velocity component flips sign and the tangential component is
//! redrawn from the centered Gaussian with variance `1/(2 beta)`. The
//! outgoing direction relative to the outward normal is then
//! `phi = arctan(v_t / v_perp)`, which is an exact draw from the angle
//! density `rho_{v_perp}` (substitute `w = tan(phi)`).
//!
//! Convention: states at collision instants carry the post-collision
//! (outgoing) velocity. This differs from keeping the incoming velocity
//! only on a measure-zero set of times, and every implemented statistic
//! is invariant to the choice.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{ray_direction, wrap_unchecked, BilliardTable, BoundaryPoint, Frame};
use crate::math::fp;
use crate::rng::RngStream;

/// Floor applied to the post-collision normal speed after a grazing
/// arrival, so the positive-speed invariant survives rounding. Grazing
/// steps are flagged, never censored: the slow-particle tail they feed
/// is the object of study.
pub const V_PERP_FLOOR: f64 = 1e-300;

/// Continuous-time state: a position in the billiard domain and a
/// nonzero velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
}

impl FlowState {
    #[inline]
    pub fn speed(&self) -> f64 {
        fp::hypot(self.velocity[0], self.velocity[1])
    }
}

/// Discrete-chain state: boundary point and normal speed `v_perp > 0`.
///
/// The normal speed is shared by the incoming and outgoing velocity at a
/// collision (the kick flips the sign only), so the chain state does not
/// depend on the incoming/outgoing convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionState {
    pub point: BoundaryPoint,
    pub v_perp: f64,
}

/// A point of the suspension flow: base collision state, outgoing angle,
/// and time elapsed since the collision (less than the flight time).
#[derive(Debug, Clone, Copy)]
pub struct SuspensionState {
    pub base: CollisionState,
    pub phi: f64,
    pub elapsed: f64,
}

/// Full record of one chain step, which doubles as a trace row.
#[derive(Debug, Clone, Copy)]
pub struct StepRecord {
    pub from: CollisionState,
    /// Outgoing angle at the source.
    pub phi: f64,
    pub to: CollisionState,
    /// Incoming angle phi' at the target.
    pub phi_incoming: f64,
    /// Free-flight length sigma.
    pub flight_length: f64,
    /// sigma / speed = sigma * cos(phi) / v_perp.
    pub flight_time: f64,
    /// Speed during the flight, v_perp / cos(phi).
    pub speed: f64,
    /// Near-tangential arrival (see [`crate::geometry::GRAZING_EPS`]).
    pub grazing: bool,
}

/// Draw the new tangential velocity component at a thermostat of inverse
/// temperature `beta`: exact Gaussian with mean 0 and variance
/// `1/(2 beta)`. Consumes exactly one raw draw.
#[inline]
pub fn sample_tangential(beta: f64, rng: &mut RngStream) -> f64 {
    rng.standard_normal() / fp::sqrt(2.0 * beta)
}

/// Draw the outgoing angle from the density
/// `rho_{v_perp}(phi) = sqrt(beta/pi) * (v_perp/cos^2 phi) * exp(-beta v_perp^2 tan^2 phi)`
/// as `arctan(v_t / v_perp)`. Consumes exactly one raw draw; the result
/// lies strictly inside `(-pi/2, pi/2)`.
#[inline]
pub fn sample_outgoing_angle(v_perp: f64, beta: f64, rng: &mut RngStream) -> f64 {
    fp::atan(sample_tangential(beta, rng) / v_perp)
}

/// Apply the thermostat collision rule at a boundary frame: the normal
/// component flips sign, the tangential component is resampled.
///
/// `incoming_velocity` must point into the scatterer (negative normal
/// component). Consumes exactly one raw draw.
pub fn collide(
    beta: f64,
    frame: &Frame,
    incoming_velocity: [f64; 2],
    rng: &mut RngStream,
) -> Result<[f64; 2]> {
    let n = frame.outward_normal;
    let t = frame.tangent;
    let v_n = incoming_velocity[0] * n[0] + incoming_velocity[1] * n[1];
    if !(v_n < 0.0) {
        return Err(Error::InvalidState(format!(
            "velocity does not point into the scatterer (normal component {v_n})"
        )));
    }
    let v_perp_out = -v_n;
    let v_t_out = sample_tangential(beta, rng);
    Ok([
        v_perp_out * n[0] + v_t_out * t[0],
        v_perp_out * n[1] + v_t_out * t[1],
    ])
}

/// One step of the collision chain: sample the outgoing angle at the
/// source thermostat, trace the free flight, and return the full record.
///
/// The target normal speed is `speed * cos(phi')`, which equals the
/// update `v_perp * cos(phi') / cos(phi)` by construction.
pub fn chain_step(
    table: &BilliardTable,
    state: &CollisionState,
    rng: &mut RngStream,
) -> Result<StepRecord> {
    if !(state.v_perp > 0.0) {
        return Err(Error::InvalidState(format!(
            "chain state needs v_perp > 0, got {}",
            state.v_perp
        )));
    }
    let disk = &table.disks()[state.point.disk_id];
    let frame = table.boundary_point_frame(&state.point)?;
    let phi = sample_outgoing_angle(state.v_perp, disk.beta, rng);
    step_with_angle(table, state, &frame, phi)
}

/// Deterministic remainder of a chain step once the outgoing angle is
/// fixed. Shared by the chain and the flow.
fn step_with_angle(
    table: &BilliardTable,
    state: &CollisionState,
    frame: &Frame,
    phi: f64,
) -> Result<StepRecord> {
    let dir = ray_direction(frame, phi);
    let hit = table.next_collision(frame.position, dir, Some(&state.point))?;
    let speed = state.v_perp / fp::cos(phi);
    let mut v_next = speed * fp::cos(hit.incoming_angle);
    if v_next < V_PERP_FLOOR {
        v_next = V_PERP_FLOOR;
    }
    Ok(StepRecord {
        from: *state,
        phi,
        to: CollisionState {
            point: hit.point,
            v_perp: v_next,
        },
        phi_incoming: hit.incoming_angle,
        flight_length: hit.flight_length,
        flight_time: hit.flight_length / speed,
        speed,
        grazing: hit.grazing,
    })
}

/// Reconstruct the continuous-time state from a suspension point: the
/// boundary point advanced by `speed * elapsed` along the outgoing
/// direction.
pub fn lift_to_flow(table: &BilliardTable, s: &SuspensionState) -> Result<FlowState> {
    if !(s.base.v_perp > 0.0) || !(fp::abs(s.phi) < FRAC_PI_2) || !(s.elapsed >= 0.0) {
        return Err(Error::InvalidState(
            "suspension state out of domain".into(),
        ));
    }
    let frame = table.boundary_point_frame(&s.base.point)?;
    let dir = ray_direction(&frame, s.phi);
    let speed = s.base.v_perp / fp::cos(s.phi);
    let hit = table.next_collision(frame.position, dir, Some(&s.base.point))?;
    let flight_time = hit.flight_length / speed;
    if s.elapsed >= flight_time {
        return Err(Error::InvalidState(format!(
            "elapsed {} is past the flight time {}",
            s.elapsed, flight_time
        )));
    }
    Ok(advance_from_boundary(&frame, s.phi, speed, s.elapsed))
}

/// Straight-line motion from a boundary frame; no validity check.
#[inline]
pub(crate) fn advance_from_boundary(frame: &Frame, phi: f64, speed: f64, elapsed: f64) -> FlowState {
    let dir = ray_direction(frame, phi);
    FlowState {
        position: wrap_unchecked([
            frame.position[0] + speed * elapsed * dir[0],
            frame.position[1] + speed * elapsed * dir[1],
        ]),
        velocity: [speed * dir[0], speed * dir[1]],
    }
}

/// Advance the flow by exactly `duration` time units: free flight until
/// the next collision, thermostat kick, repeat. Returns the final state
/// and the log of completed collision-to-collision steps.
pub fn flow(
    table: &BilliardTable,
    z: &FlowState,
    duration: f64,
    rng: &mut RngStream,
) -> Result<(FlowState, Vec<StepRecord>)> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::Domain(format!("bad duration {duration}")));
    }
    let speed0 = z.speed();
    if !(speed0 > 0.0) || !speed0.is_finite() {
        return Err(Error::InvalidState("flow state needs nonzero velocity".into()));
    }

    let mut log = Vec::new();
    let mut remaining = duration;
    let mut pos = crate::geometry::wrap(z.position)?;
    let mut vel = z.velocity;
    let mut speed = speed0;
    // Chain bookkeeping once the first collision has happened.
    let mut pending: Option<(CollisionState, f64, Frame)> = None;

    loop {
        let (dir, skip) = match &pending {
            Some((state, phi, frame)) => (ray_direction(frame, *phi), Some(state.point)),
            None => ([vel[0] / speed, vel[1] / speed], None),
        };
        let hit = table.next_collision(pos, dir, skip.as_ref())?;
        let t_hit = hit.flight_length / speed;
        if t_hit > remaining {
            let travelled = speed * remaining;
            let end = wrap_unchecked([pos[0] + travelled * dir[0], pos[1] + travelled * dir[1]]);
            return Ok((
                FlowState {
                    position: end,
                    velocity: [speed * dir[0], speed * dir[1]],
                },
                log,
            ));
        }

        remaining -= t_hit;
        let v_in_perp = speed * fp::cos(hit.incoming_angle);
        let mut v_perp = v_in_perp;
        if v_perp < V_PERP_FLOOR {
            v_perp = V_PERP_FLOOR;
        }
        if let Some((state, phi, _)) = pending {
            log.push(StepRecord {
                from: state,
                phi,
                to: CollisionState {
                    point: hit.point,
                    v_perp,
                },
                phi_incoming: hit.incoming_angle,
                flight_length: hit.flight_length,
                flight_time: t_hit,
                speed,
                grazing: hit.grazing,
            });
        }

        // Thermostat kick at the hit point.
        let beta = table.disks()[hit.point.disk_id].beta;
        let frame = table.boundary_point_frame(&hit.point)?;
        let v_t = sample_tangential(beta, rng);
        let phi = fp::atan(v_t / v_perp);
        let state = CollisionState {
            point: hit.point,
            v_perp,
        };
        pos = frame.position;
        speed = v_perp / fp::cos(phi);
        vel = {
            let d = ray_direction(&frame, phi);
            [speed * d[0], speed * d[1]]
        };
        pending = Some((state, phi, frame));
    }
}

/// Time to the next collision from a flow state; the state belongs to
/// the slow set `B_tau` iff the result exceeds `tau`.
pub fn residual_flight_time(table: &BilliardTable, z: &FlowState) -> Result<f64> {
    let speed = z.speed();
    if !(speed > 0.0) || !speed.is_finite() {
        return Err(Error::InvalidState("flow state needs nonzero velocity".into()));
    }
    let dir = [z.velocity[0] / speed, z.velocity[1] / speed];
    let hit = table.next_collision(z.position, dir, None)?;
    Ok(hit.flight_length / speed)
}


#[cfg(test)]
impl CollisionState {
    fn theta_bits(&self) -> u64 {
        self.point.theta.to_bits()
    }
}
