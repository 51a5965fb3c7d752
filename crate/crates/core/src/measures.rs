//! Closed-form reference laws: the outgoing-angle density, the piecewise
//! Lyapunov potential, equilibrium marginals of the invariant measures,
//! and the leading-order coefficient of the slow-particle tail.
//!
//! Equilibrium (all thermostats at the same `beta`) admits explicit
//! marginals. The collision-chain normal speed has density
//! `2 beta v exp(-beta v^2)`; the time-weighted (flow) speed has the same
//! functional form, so the kinetic energy `E = s^2/2` is exponential with
//! rate `2 beta`. The invariant mass of states that stay collision-free
//! for at least `tau` decays as `K / tau^2` with `K` computable by
//! quadrature over launch geometry.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::geometry::{ray_direction, BilliardTable};
use crate::math::fp;
use crate::rng::RngStream;

/// Default lower edge of the potential's flat middle branch.
pub const DEFAULT_V_MIN: f64 = 0.1;
/// Default upper edge of the potential's flat middle branch.
pub const DEFAULT_V_MAX: f64 = 2.0;
/// Default power-law exponent of the small-speed branch.
pub const DEFAULT_GAMMA: f64 = 1.0;

/// Parameters of the piecewise Lyapunov potential: exponential growth
/// `exp(epsilon v^2)` above `v_max`, power growth `v^-gamma` below
/// `v_min`, and the constant `a` in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub epsilon: f64,
    pub gamma: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub a: f64,
}

impl PotentialParams {
    /// Documented defaults against a table's smallest inverse
    /// temperature: `gamma = 1`, `epsilon = beta_min / 2`, the compact
    /// window `[0.1, 2.0]`, and `a` chosen as the larger of the two
    /// junction values so the constant branch is an upper envelope.
    pub fn defaults(beta_min: f64) -> Self {
        let epsilon = 0.5 * beta_min;
        let v_min = DEFAULT_V_MIN;
        let v_max = DEFAULT_V_MAX;
        let a = fp::exp(epsilon * v_max * v_max).max(fp::powf(v_min, -DEFAULT_GAMMA));
        Self {
            epsilon,
            gamma: DEFAULT_GAMMA,
            v_min,
            v_max,
            a,
        }
    }

    pub fn validate(&self, beta_min: f64) -> Result<()> {
        if !(self.epsilon > 0.0) || !(self.epsilon < beta_min) {
            return Err(Error::Domain(format!(
                "epsilon must lie in (0, beta_min = {beta_min}), got {}",
                self.epsilon
            )));
        }
        if !(self.gamma > 0.0) || !(self.gamma < 2.0) {
            return Err(Error::Domain(format!(
                "gamma must lie in (0, 2), got {}",
                self.gamma
            )));
        }
        if !(self.v_min > 0.0) || !(self.v_max > self.v_min) || !(self.a > 0.0) {
            return Err(Error::Domain(
                "potential needs 0 < v_min < v_max and a > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Leading-order prediction of the slow-set mass: `nu(B_tau) ~ K / tau^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPrediction {
    /// The coefficient `K`.
    pub coefficient: f64,
    /// Monte Carlo standard error of `K`.
    pub coefficient_se: f64,
    /// Smallest `tau` at which the estimated `O(1/tau^4)` remainder
    /// drops below 10% of the leading term (standard errors folded in
    /// conservatively).
    pub tau_validity: f64,
}

/// Density of the outgoing angle at a thermostat, for normal speed
/// `v_perp` and inverse temperature `beta`.
pub fn angle_density(phi: f64, v_perp: f64, beta: f64) -> Result<f64> {
    if !(fp::abs(phi) < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "angle density is defined on (-pi/2, pi/2), got {phi}"
        )));
    }
    if !(v_perp > 0.0) || !(beta > 0.0) {
        return Err(Error::Domain(
            "angle density needs v_perp > 0 and beta > 0".into(),
        ));
    }
    let c = fp::cos(phi);
    let t = fp::tan(phi);
    Ok(fp::sqrt(beta / PI) * v_perp / (c * c) * fp::exp(-beta * v_perp * v_perp * t * t))
}

/// The piecewise Lyapunov potential. Both junction points belong to the
/// closed middle branch and return `a`; no continuity is enforced.
pub fn potential_v(v_perp: f64, params: &PotentialParams) -> Result<f64> {
    if !(v_perp > 0.0) {
        return Err(Error::Domain(format!(
            "potential needs v_perp > 0, got {v_perp}"
        )));
    }
    Ok(if v_perp > params.v_max {
        fp::exp(params.epsilon * v_perp * v_perp)
    } else if v_perp < params.v_min {
        fp::powf(v_perp, -params.gamma)
    } else {
        params.a
    })
}

/// Equilibrium density of the collision-chain normal speed:
/// `2 beta v exp(-beta v^2)` on `(0, inf)`, uniform in the boundary
/// coordinate.
pub fn equilibrium_collision_density(v_perp: f64, beta: f64) -> f64 {
    if v_perp <= 0.0 {
        return 0.0;
    }
    2.0 * beta * v_perp * fp::exp(-beta * v_perp * v_perp)
}

/// Equilibrium density of the particle speed under the time-weighted
/// (flow) measure; same functional form as the collision marginal.
pub fn equilibrium_speed_density(s: f64, beta: f64) -> f64 {
    equilibrium_collision_density(s, beta)
}

/// Equilibrium density of the kinetic energy `E = s^2 / 2` under the
/// flow measure: exponential with rate `2 beta`.
pub fn equilibrium_energy_density(e: f64, beta: f64) -> f64 {
    if e < 0.0 {
        return 0.0;
    }
    2.0 * beta * fp::exp(-2.0 * beta * e)
}

/// Exact bin masses of the equilibrium speed/normal-speed law on given
/// histogram edges, via the antiderivative `-exp(-beta v^2)`.
/// Returns (per-bin masses, mass below the first edge, mass above the
/// last edge).
pub fn equilibrium_collision_bin_masses(beta: f64, edges: &[f64]) -> (Vec<f64>, f64, f64) {
    let cdf = |v: f64| {
        if v <= 0.0 {
            0.0
        } else {
            1.0 - fp::exp(-beta * v * v)
        }
    };
    let masses = edges
        .windows(2)
        .map(|w| cdf(w[1]) - cdf(w[0]))
        .collect();
    let under = cdf(edges[0]);
    let over = 1.0 - cdf(edges[edges.len() - 1]);
    (masses, under, over)
}

/// Estimate the tail coefficient `K` of `nu(B_tau) ~ K / tau^2` for an
/// equilibrium table by Monte Carlo quadrature over uniformly sampled
/// launch geometry (boundary arc-length, angle in `(-pi/2, pi/2)`).
///
/// Requires every scatterer at the same `beta` as passed (the closed
/// form holds in equilibrium only).
pub fn tail_prediction(
    table: &BilliardTable,
    beta: f64,
    n_quadrature: u64,
    rng: &mut RngStream,
) -> Result<TailPrediction> {
    let table_beta = table.uniform_beta()?;
    if fp::abs(table_beta - beta) > 1e-12 * fp::abs(beta) {
        return Err(Error::UnsupportedRegime(format!(
            "table beta {table_beta} does not match requested beta {beta}"
        )));
    }
    let perimeter = table.perimeter();
    tail_prediction_for(beta, n_quadrature, rng, |rng| {
        let r = rng.uniform_range(0.0, perimeter);
        let phi = rng.uniform_range(-FRAC_PI_2, FRAC_PI_2);
        let point = table.boundary_point_at_arclength(r)?;
        let frame = table.boundary_point_frame(&point)?;
        let dir = ray_direction(&frame, phi);
        let hit = table.next_collision(frame.position, dir, Some(&point))?;
        Ok((hit.flight_length, phi))
    })
}

/// Quadrature core of [`tail_prediction`], generic over the flight
/// length sampler: the sampler returns one `(sigma, phi)` draw per call.
/// Exposed so synthetic geometries (constant or scaled `sigma`) can
/// exercise the estimator directly.
pub fn tail_prediction_for(
    beta: f64,
    n_quadrature: u64,
    rng: &mut RngStream,
    mut sample: impl FnMut(&mut RngStream) -> Result<(f64, f64)>,
) -> Result<TailPrediction> {
    if n_quadrature == 0 {
        return Err(Error::Domain("tail prediction needs samples".into()));
    }
    // Accumulate moments of X = sigma^3 cos(phi), Y = sigma cos(phi),
    // W = sigma^5 cos(phi). K = (beta/3) E[X]/E[Y]; the tau^-4 remainder
    // coefficient over K is (3 beta / 10) E[W]/E[X].
    let n = n_quadrature as f64;
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    let (mut sxx, mut syy, mut sxy, mut sww) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n_quadrature {
        let (sigma, phi) = sample(rng)?;
        let c = fp::cos(phi);
        let y = sigma * c;
        let x = sigma * sigma * sigma * c;
        let w = x * sigma * sigma;
        sx += x;
        sy += y;
        sw += w;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        sww += w * w;
    }
    let mx = sx / n;
    let my = sy / n;
    let mw = sw / n;
    let var_x = (sxx / n - mx * mx).max(0.0);
    let var_y = (syy / n - my * my).max(0.0);
    let cov_xy = sxy / n - mx * my;
    let var_w = (sww / n - mw * mw).max(0.0);

    let k = beta / 3.0 * mx / my;
    // Delta method for the ratio estimator.
    let rel2 = (var_x / (mx * mx) + var_y / (my * my) - 2.0 * cov_xy / (mx * my)).max(0.0) / n;
    let se = k * fp::sqrt(rel2);

    // Remainder < 10% of the leading term at tau^2 >= 3 beta E[W]/E[X];
    // inflate by the moment standard errors for a conservative cutoff.
    let se_w = fp::sqrt(var_w / n);
    let se_x = fp::sqrt(var_x / n);
    let num = 3.0 * beta * (mw + 2.0 * se_w);
    let den = (mx - 2.0 * se_x).max(f64::MIN_POSITIVE);
    let tau_validity = fp::sqrt(num / den);

    Ok(TailPrediction {
        coefficient: k,
        coefficient_se: se,
        tau_validity,
    })
}
