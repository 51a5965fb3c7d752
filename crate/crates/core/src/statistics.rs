//! Estimators over simulated data: histograms, binned total-variation
//! distance, stationary-ensemble construction, residual-time tail curves,
//! log-log slope fits, Lyapunov drift ratios, and roof-function
//! integrability diagnostics.
//!
//! Total variation is always estimated on fixed-width binned marginals;
//! binning can only lose mass differences, so the estimate is a lower
//! bound for the true TV, which is the conservative direction for every
//! lower-bound claim made from it. Binomial fractions carry Wilson
//! intervals (Wald breaks down at the tiny tail fractions of interest).

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::dynamics::{
    advance_from_boundary, chain_step, residual_flight_time, CollisionState, FlowState, StepRecord,
};
use crate::error::{Error, Result};
use crate::geometry::{BilliardTable, BoundaryPoint};
use crate::math::fp;
use crate::measures::{potential_v, PotentialParams, DEFAULT_V_MAX, DEFAULT_V_MIN};
use crate::rng::RngStream;

/// Number of bins used for all TV estimates.
pub const TV_BINS: usize = 200;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Fixed-width binned counts with explicit out-of-range cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// Bin boundaries, strictly increasing, length = bins + 1.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.underflow + self.overflow
    }
}

/// Estimated map `tau -> nu(B_tau)` with pointwise Wilson 95% bounds.
#[derive(Debug, Clone)]
pub struct TailCurve {
    pub taus: Vec<f64>,
    pub fractions: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

/// Monte Carlo estimate of `E[V(v') | v] / V(v)` for one chain step.
#[derive(Debug, Clone, Copy)]
pub struct DriftEstimate {
    pub v_perp: f64,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: u64,
}

/// Empirical proxies for the invariant measures: chain states for the
/// collision measure and time-weighted flow states for the flow measure.
#[derive(Debug, Clone)]
pub struct StationaryEnsemble {
    /// Post-burn-in chain states (the collision-measure sample).
    pub collision_samples: Vec<CollisionState>,
    /// Flow states drawn by flight-time-weighted resampling of the
    /// chain's flight segments (the flow-measure sample).
    pub flow_samples: Vec<FlowState>,
    /// The post-burn-in step records the samples came from.
    pub steps: Vec<StepRecord>,
    pub burn_in: u64,
    pub seed: u64,
}

/// Roof-function diagnostics: sample means of the flight time and of
/// `1 / v_perp`, plus a split-half stability figure (worst of the two).
#[derive(Debug, Clone, Copy)]
pub struct RoofIntegrability {
    pub mean_flight_time: f64,
    pub mean_inv_vperp: f64,
    pub stability: f64,
}

/// Verdict of the power-law vs exponential model comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelVerdict {
    PowerBetter,
    ExpBetter,
    Inconclusive,
}

impl core::fmt::Display for ModelVerdict {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelVerdict::PowerBetter => write!(f, "PowerBetter"),
            ModelVerdict::ExpBetter => write!(f, "ExpBetter"),
            ModelVerdict::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// Bin samples into `bins` fixed-width cells on `[lo, hi)`.
pub fn histogram(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Histogram> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!("bad histogram range [{lo}, {hi})")));
    }
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
    edges[bins] = hi;
    let mut counts = alloc::vec![0u64; bins];
    let (mut underflow, mut overflow) = (0u64, 0u64);
    for &x in samples {
        if !x.is_finite() {
            return Err(Error::Domain(format!("non-finite sample {x}")));
        }
        if x < lo {
            underflow += 1;
        } else if x >= hi {
            overflow += 1;
        } else {
            let mut idx = ((x - lo) / width) as usize;
            if idx >= bins {
                idx = bins - 1; // rounding at the top edge
            }
            counts[idx] += 1;
        }
    }
    Ok(Histogram {
        edges,
        counts,
        underflow,
        overflow,
    })
}

/// Total-variation distance between two histograms on identical edges:
/// half the L1 distance between normalized bin masses, with the
/// under/overflow cells included as two extra cells.
pub fn tv_distance(h1: &Histogram, h2: &Histogram) -> Result<f64> {
    if h1.edges.len() != h2.edges.len()
        || h1
            .edges
            .iter()
            .zip(&h2.edges)
            .any(|(a, b)| a.to_bits() != b.to_bits())
    {
        return Err(Error::InvalidState("histogram edges differ".into()));
    }
    let n1 = h1.total() as f64;
    let n2 = h2.total() as f64;
    if n1 == 0.0 && n2 == 0.0 {
        return Ok(0.0);
    }
    let norm = |c: u64, n: f64| if n > 0.0 { c as f64 / n } else { 0.0 };
    let mut acc = fp::abs(norm(h1.underflow, n1) - norm(h2.underflow, n2))
        + fp::abs(norm(h1.overflow, n1) - norm(h2.overflow, n2));
    for (a, b) in h1.counts.iter().zip(&h2.counts) {
        acc += fp::abs(norm(*a, n1) - norm(*b, n2));
    }
    Ok(0.5 * acc)
}

/// Total-variation distance between a histogram and exact reference bin
/// masses (same bin layout, `masses.len() == bins`).
pub fn tv_against_masses(
    h: &Histogram,
    masses: &[f64],
    under_mass: f64,
    over_mass: f64,
) -> Result<f64> {
    if masses.len() != h.counts.len() {
        return Err(Error::InvalidState(
            "reference masses do not match histogram bins".into(),
        ));
    }
    let n = h.total() as f64;
    if n == 0.0 {
        return Err(Error::InvalidState("empty histogram".into()));
    }
    let mut acc = fp::abs(h.underflow as f64 / n - under_mass)
        + fp::abs(h.overflow as f64 / n - over_mass);
    for (c, m) in h.counts.iter().zip(masses) {
        acc += fp::abs(*c as f64 / n - m);
    }
    Ok(0.5 * acc)
}

/// Wilson 95% interval for a binomial fraction.
pub fn wilson_interval(successes: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z_95 * fp::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Nearest-rank percentile of a sorted slice, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Index of the flight segment selected by cumulative flight-time
/// weighting: the first index whose cumulative sum exceeds `u * total`.
#[inline]
pub(crate) fn pick_segment(cumulative: &[f64], u: f64) -> usize {
    let target = u * cumulative[cumulative.len() - 1];
    cumulative.partition_point(|&c| c <= target).min(cumulative.len() - 1)
}

/// Run the chain from a fixed reference state and build the empirical
/// stationary ensembles.
///
/// Collision samples are the post-burn-in chain states. Flow samples are
/// drawn by picking a flight segment with probability proportional to
/// its flight time, then a uniform elapsed time within it — exactly the
/// suspension-flow construction of the invariant flow measure. The
/// geometric ergodicity of the chain justifies a short burn-in.
pub fn stationary_sample(
    table: &BilliardTable,
    n_collisions: u64,
    n_flow: u64,
    burn_in: u64,
    rng: &mut RngStream,
) -> Result<StationaryEnsemble> {
    if n_collisions == 0 {
        return Err(Error::Domain("need at least one collision sample".into()));
    }
    let mut state = CollisionState {
        point: BoundaryPoint {
            disk_id: 0,
            theta: 0.0,
        },
        v_perp: 1.0,
    };
    for _ in 0..burn_in {
        state = chain_step(table, &state, rng)?.to;
    }
    let mut steps = Vec::with_capacity(n_collisions as usize);
    let mut collision_samples = Vec::with_capacity(n_collisions as usize);
    for _ in 0..n_collisions {
        let rec = chain_step(table, &state, rng)?;
        state = rec.to;
        collision_samples.push(rec.to);
        steps.push(rec);
    }

    let mut cumulative = Vec::with_capacity(steps.len());
    let mut acc = 0.0;
    for rec in &steps {
        acc += rec.flight_time;
        cumulative.push(acc);
    }

    let mut flow_samples = Vec::with_capacity(n_flow as usize);
    for _ in 0..n_flow {
        let idx = pick_segment(&cumulative, rng.uniform());
        let rec = &steps[idx];
        let elapsed = rng.uniform() * rec.flight_time;
        let frame = table.boundary_point_frame(&rec.from.point)?;
        flow_samples.push(advance_from_boundary(&frame, rec.phi, rec.speed, elapsed));
    }

    Ok(StationaryEnsemble {
        collision_samples,
        flow_samples,
        steps,
        burn_in,
        seed: rng.seed(),
    })
}

/// Estimate `tau -> nu(B_tau)` on a stationary flow ensemble: the
/// fraction of flow samples whose residual flight time exceeds each
/// `tau`, with Wilson 95% intervals.
pub fn tail_curve(
    ensemble: &StationaryEnsemble,
    table: &BilliardTable,
    taus: &[f64],
) -> Result<TailCurve> {
    if taus.windows(2).any(|w| w[0] >= w[1]) || taus.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::Domain(
            "taus must be non-negative and increasing".into(),
        ));
    }
    if ensemble.flow_samples.is_empty() {
        return Err(Error::InvalidState("ensemble has no flow samples".into()));
    }
    let mut residuals = Vec::with_capacity(ensemble.flow_samples.len());
    for z in &ensemble.flow_samples {
        residuals.push(residual_flight_time(table, z)?);
    }
    residuals.sort_unstable_by(f64::total_cmp);
    let n = residuals.len() as u64;
    let mut fractions = Vec::with_capacity(taus.len());
    let mut ci_low = Vec::with_capacity(taus.len());
    let mut ci_high = Vec::with_capacity(taus.len());
    for &tau in taus {
        let above = (residuals.len() - residuals.partition_point(|&r| r <= tau)) as u64;
        let (lo, hi) = wilson_interval(above, n);
        fractions.push(above as f64 / n as f64);
        ci_low.push(lo);
        ci_high.push(hi);
    }
    Ok(TailCurve {
        taus: taus.to_vec(),
        fractions,
        ci_low,
        ci_high,
    })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse = syy - slope * sxy;
    let r2 = if syy > 0.0 {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (slope, intercept, r2)
}

/// Ordinary least squares on `(log x, log y)`.
pub fn loglog_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Domain("log-log fit needs >= 3 paired points".into()));
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "log-log fit needs strictly positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|&x| fp::ln(x)).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| fp::ln(y)).collect();
    Ok(linear_fit(&lx, &ly))
}

/// Fit `log y ~ log tau` (power law) and `log y ~ tau` (exponential) and
/// compare their coefficients of determination. The 0.05 margin keeps
/// desk-scale noise from flipping the verdict.
pub fn model_compare_exp_vs_power(
    taus: &[f64],
    ys: &[f64],
) -> Result<(f64, f64, ModelVerdict)> {
    if taus.len() != ys.len() || taus.len() < 5 {
        return Err(Error::Domain(
            "model comparison needs >= 5 paired points".into(),
        ));
    }
    if taus.iter().chain(ys).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain(
            "model comparison needs strictly positive finite values".into(),
        ));
    }
    let ly: Vec<f64> = ys.iter().map(|&y| fp::ln(y)).collect();
    let lx: Vec<f64> = taus.iter().map(|&t| fp::ln(t)).collect();
    let (_, _, power_r2) = linear_fit(&lx, &ly);
    let (_, _, exp_r2) = linear_fit(taus, &ly);
    let verdict = if power_r2 > exp_r2 + 0.05 {
        ModelVerdict::PowerBetter
    } else if exp_r2 > power_r2 + 0.05 {
        ModelVerdict::ExpBetter
    } else {
        ModelVerdict::Inconclusive
    };
    Ok((power_r2, exp_r2, verdict))
}

/// Monte Carlo estimate of the one-step drift `E[V(v')] / V(v)` at a
/// fixed normal speed, launching each step from a uniformly random
/// boundary point. Normal-approximation 95% interval.
pub fn drift_ratio(
    table: &BilliardTable,
    v_perp: f64,
    params: &PotentialParams,
    n: u64,
    rng: &mut RngStream,
) -> Result<DriftEstimate> {
    if !(v_perp > 0.0) || n == 0 {
        return Err(Error::Domain("drift ratio needs v_perp > 0 and n >= 1".into()));
    }
    params.validate(table.beta_min())?;
    let v_here = potential_v(v_perp, params)?;
    let perimeter = table.perimeter();
    let (mut s1, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let r = rng.uniform_range(0.0, perimeter);
        let point = table.boundary_point_at_arclength(r)?;
        let rec = chain_step(table, &CollisionState { point, v_perp }, rng)?;
        let v_next = potential_v(rec.to.v_perp, params)?;
        s1 += v_next;
        s2 += v_next * v_next;
    }
    let nf = n as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    let half = Z_95 * fp::sqrt(var / nf);
    Ok(DriftEstimate {
        v_perp,
        ratio: mean / v_here,
        ci_low: (mean - half) / v_here,
        ci_high: (mean + half) / v_here,
        n,
    })
}

/// Sample means of the flight time and of `1 / v_perp` over the
/// collision ensemble, with a split-half stability figure.
pub fn roof_integrability(ensemble: &StationaryEnsemble) -> Result<RoofIntegrability> {
    let steps = &ensemble.steps;
    if steps.is_empty() {
        return Err(Error::InvalidState("ensemble has no steps".into()));
    }
    let n = steps.len();
    let half = n / 2;
    let mean = |vals: &mut dyn Iterator<Item = f64>| -> (f64, usize) {
        let mut acc = 0.0;
        let mut count = 0;
        for v in vals {
            acc += v;
            count += 1;
        }
        (acc / count as f64, count)
    };
    let (mean_ft, _) = mean(&mut steps.iter().map(|r| r.flight_time));
    let (mean_iv, _) = mean(&mut steps.iter().map(|r| 1.0 / r.to.v_perp));
    let split = |vals: Vec<f64>| -> f64 {
        let a: f64 = vals[..half].iter().sum::<f64>() / half.max(1) as f64;
        let b: f64 = vals[half..].iter().sum::<f64>() / (n - half) as f64;
        let all: f64 = vals.iter().sum::<f64>() / n as f64;
        fp::abs(a - b) / all
    };
    let s_ft = split(steps.iter().map(|r| r.flight_time).collect());
    let s_iv = split(steps.iter().map(|r| 1.0 / r.to.v_perp).collect());
    Ok(RoofIntegrability {
        mean_flight_time: mean_ft,
        mean_inv_vperp: mean_iv,
        stability: s_ft.max(s_iv),
    })
}

/// Fraction of chain steps, launched from uniform boundary points with
/// `v_perp ~ U[0.1, 2.0]`, that land below the threshold `v_bar`
/// (Wilson 95% interval). This probes how grazing arrivals feed the
/// slow-particle tail.
pub fn grazing_fraction(
    table: &BilliardTable,
    v_bar: f64,
    n: u64,
    rng: &mut RngStream,
) -> Result<(f64, (f64, f64))> {
    Ok(grazing_fractions(table, &[v_bar], n, rng)?.remove(0))
}

/// Multi-threshold variant of [`grazing_fraction`]: all thresholds are
/// evaluated on the same sample, so the fractions are nested exactly.
pub fn grazing_fractions(
    table: &BilliardTable,
    v_bars: &[f64],
    n: u64,
    rng: &mut RngStream,
) -> Result<Vec<(f64, (f64, f64))>> {
    if v_bars.is_empty() || v_bars.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Domain("thresholds must be positive".into()));
    }
    if n == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let perimeter = table.perimeter();
    let mut hits = alloc::vec![0u64; v_bars.len()];
    for _ in 0..n {
        let r = rng.uniform_range(0.0, perimeter);
        let v_perp = rng.uniform_range(DEFAULT_V_MIN, DEFAULT_V_MAX);
        let point = table.boundary_point_at_arclength(r)?;
        let rec = chain_step(table, &CollisionState { point, v_perp }, rng)?;
        for (k, &v_bar) in v_bars.iter().enumerate() {
            if rec.to.v_perp <= v_bar {
                hits[k] += 1;
            }
        }
    }
    Ok(hits
        .iter()
        .map(|&k| (k as f64 / n as f64, wilson_interval(k, n)))
        .collect())
}

/// Poisson-resample a histogram's cells (parametric bootstrap).
fn resample_histogram(h: &Histogram, rng: &mut RngStream) -> Histogram {
    let mut out = h.clone();
    out.underflow = poisson_approx(h.underflow as f64, rng);
    out.overflow = poisson_approx(h.overflow as f64, rng);
    for (dst, src) in out.counts.iter_mut().zip(&h.counts) {
        *dst = poisson_approx(*src as f64, rng);
    }
    out
}

fn poisson_approx(lambda: f64, rng: &mut RngStream) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    if lambda < 30.0 {
        // inversion; one uniform per draw
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = fp::exp(-lambda);
        let mut cdf = p;
        while u > cdf && k < 1000 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
        }
        k
    } else {
        let x = lambda + fp::sqrt(lambda) * rng.standard_normal();
        if x < 0.0 {
            0
        } else {
            (x + 0.5) as u64
        }
    }
}

/// Bootstrap standard error of [`tv_distance`] under Poisson cell
/// resampling of both histograms.
pub fn tv_distance_bootstrap_se(
    h1: &Histogram,
    h2: &Histogram,
    reps: u32,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut vals = Vec::with_capacity(reps as usize);
    for _ in 0..reps {
        let a = resample_histogram(h1, rng);
        let b = resample_histogram(h2, rng);
        vals.push(tv_distance(&a, &b)?);
    }
    Ok(std_dev(&vals))
}

/// Bootstrap standard error of [`tv_against_masses`] under Poisson cell
/// resampling of the histogram.
pub fn tv_against_masses_bootstrap_se(
    h: &Histogram,
    masses: &[f64],
    under_mass: f64,
    over_mass: f64,
    reps: u32,
    rng: &mut RngStream,
) -> Result<f64> {
    let mut vals = Vec::with_capacity(reps as usize);
    for _ in 0..reps {
        let a = resample_histogram(h, rng);
        if a.total() == 0 {
            continue;
        }
        vals.push(tv_against_masses(&a, masses, under_mass, over_mass)?);
    }
    Ok(std_dev(&vals))
}

fn std_dev(vals: &[f64]) -> f64 {
    if vals.len() < 2 {
        return 0.0;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    fp::sqrt(var)
}

/// Chain-step sampler shared by density goodness-of-fit tests: draws
/// `phi` from the implemented sampler for a `(v_perp, beta)` pair and
/// bins it into cells with equal probability under the closed-form
/// density, returning the Pearson chi-square statistic (bins - 1
/// degrees of freedom).
pub fn angle_sampler_chi_square(
    v_perp: f64,
    beta: f64,
    n_samples: u64,
    bins: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if bins < 2 || n_samples < 10 * bins as u64 {
        return Err(Error::Domain(
            "need >= 2 bins and >= 10 samples per bin".into(),
        ));
    }
    // Exact quantiles of the angle law: phi(p) = atan(sigma_t z_p / v_perp).
    let sigma_t = 1.0 / fp::sqrt(2.0 * beta);
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(-FRAC_PI_2);
    for k in 1..bins {
        let z = crate::math::norm_quantile(k as f64 / bins as f64);
        edges.push(fp::atan(sigma_t * z / v_perp));
    }
    edges.push(FRAC_PI_2);
    let mut counts = alloc::vec![0u64; bins];
    for _ in 0..n_samples {
        let phi = crate::dynamics::sample_outgoing_angle(v_perp, beta, rng);
        let idx = edges.partition_point(|&e| e <= phi).clamp(1, bins) - 1;
        counts[idx] += 1;
    }
    let expected = n_samples as f64 / bins as f64;
    Ok(counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::reference_table;

    #[test]
    fn histogram_basics() {
        let h = histogram(&[0.5], 0.0, 1.0, 2).unwrap();
        assert_eq!(h.counts, alloc::vec![0, 1]);
        assert_eq!((h.underflow, h.overflow), (0, 0));

        // a sample exactly at hi goes to overflow (half-open bins)
        let h = histogram(&[1.0], 0.0, 1.0, 2).unwrap();
        assert_eq!(h.overflow, 1);
        assert_eq!(h.counts, alloc::vec![0, 0]);

        let h = histogram(&[], 0.0, 1.0, 4).unwrap();
        assert_eq!(h.total(), 0);

        // counts are permutation invariant
        let a = histogram(&[0.1, 0.6, 0.3, 2.0], 0.0, 1.0, 4).unwrap();
        let b = histogram(&[2.0, 0.3, 0.1, 0.6], 0.0, 1.0, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 4);
    }

    #[test]
    fn tv_examples() {
        let h1 = histogram(&[0.25, 0.75], 0.0, 1.0, 2).unwrap();
        assert_eq!(tv_distance(&h1, &h1).unwrap(), 0.0);

        // fully disjoint supports
        let a = histogram(&[0.25, 0.25], 0.0, 1.0, 2).unwrap();
        let b = histogram(&[0.75, 0.75], 0.0, 1.0, 2).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);

        // p = (0.5, 0.5) vs q = (1, 0)
        let q = histogram(&[0.25, 0.25], 0.0, 1.0, 2).unwrap();
        assert_eq!(tv_distance(&h1, &q).unwrap(), 0.5);

        // mismatched edges are rejected
        let other = histogram(&[0.5], 0.0, 2.0, 2).unwrap();
        assert!(tv_distance(&h1, &other).is_err());
    }

    #[test]
    fn tv_is_a_metric_on_random_triples() {
        let mut rng = RngStream::new(300, 0);
        for _ in 0..20 {
            let draw = |rng: &mut RngStream| {
                let samples: Vec<f64> = (0..50).map(|_| rng.uniform()).collect();
                histogram(&samples, 0.0, 1.0, 8).unwrap()
            };
            let (a, b, c) = (draw(&mut rng), draw(&mut rng), draw(&mut rng));
            let ab = tv_distance(&a, &b).unwrap();
            let ba = tv_distance(&b, &a).unwrap();
            assert_eq!(ab, ba);
            let ac = tv_distance(&a, &c).unwrap();
            let cb = tv_distance(&c, &b).unwrap();
            assert!(ab <= ac + cb + 1e-15);
            assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn marginal_contraction() {
        // joint TV (2D bins flattened) dominates the marginal TV
        let mut rng = RngStream::new(301, 0);
        let bins = 10usize;
        let bin2d = |pts: &[(f64, f64)]| -> (Histogram, Histogram) {
            let flat: Vec<f64> = pts
                .iter()
                .map(|&(x, y)| {
                    let i = ((x * bins as f64) as usize).min(bins - 1);
                    let j = ((y * bins as f64) as usize).min(bins - 1);
                    (i * bins + j) as f64 + 0.5
                })
                .collect();
            let joint = histogram(&flat, 0.0, (bins * bins) as f64, bins * bins).unwrap();
            let xs: Vec<f64> = pts.iter().map(|&(x, _)| x).collect();
            let marginal = histogram(&xs, 0.0, 1.0, bins).unwrap();
            (joint, marginal)
        };
        for _ in 0..10 {
            let a: Vec<(f64, f64)> = (0..400).map(|_| (rng.uniform(), rng.uniform())).collect();
            let b: Vec<(f64, f64)> = (0..400)
                .map(|_| {
                    let x = rng.uniform();
                    (x * x, rng.uniform())
                })
                .collect();
            let (ja, ma) = bin2d(&a);
            let (jb, mb) = bin2d(&b);
            let tv_joint = tv_distance(&ja, &jb).unwrap();
            let tv_marg = tv_distance(&ma, &mb).unwrap();
            assert!(tv_marg <= tv_joint + 1e-12);
        }
    }

    #[test]
    fn segment_picker_weights_by_flight_time() {
        // flight times 1 and 3: probabilities 0.25 / 0.75
        let cum = alloc::vec![1.0, 4.0];
        assert_eq!(pick_segment(&cum, 0.1), 0);
        assert_eq!(pick_segment(&cum, 0.2499), 0);
        assert_eq!(pick_segment(&cum, 0.2501), 1);
        assert_eq!(pick_segment(&cum, 0.95), 1);
        // equal durations: uniform selection
        let eq = alloc::vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(pick_segment(&eq, 0.1), 0);
        assert_eq!(pick_segment(&eq, 0.3), 1);
        assert_eq!(pick_segment(&eq, 0.6), 2);
        assert_eq!(pick_segment(&eq, 0.9), 3);
    }

    #[test]
    fn stationary_sample_shapes_and_reproducibility() {
        let t = reference_table();
        let mut rng = RngStream::new(302, 0);
        let e = stationary_sample(&t, 2000, 500, 100, &mut rng).unwrap();
        assert_eq!(e.collision_samples.len(), 2000);
        assert_eq!(e.flow_samples.len(), 500);
        assert_eq!(e.burn_in, 100);
        assert!(e.collision_samples.iter().all(|s| s.v_perp > 0.0));

        let mut rng2 = RngStream::new(302, 0);
        let e2 = stationary_sample(&t, 2000, 500, 100, &mut rng2).unwrap();
        for (a, b) in e.flow_samples.iter().zip(&e2.flow_samples) {
            assert_eq!(a.position[0].to_bits(), b.position[0].to_bits());
            assert_eq!(a.velocity[1].to_bits(), b.velocity[1].to_bits());
        }
    }

    #[test]
    fn tail_curve_monotone_and_anchored() {
        let t = reference_table();
        let mut rng = RngStream::new(303, 0);
        let e = stationary_sample(&t, 20_000, 10_000, 1000, &mut rng).unwrap();
        let taus = alloc::vec![0.0, 0.5, 1.0, 2.0, 4.0, 1e9];
        let curve = tail_curve(&e, &t, &taus).unwrap();
        assert_eq!(curve.fractions[0], 1.0);
        for w in curve.fractions.windows(2) {
            assert!(w[1] <= w[0]);
        }
        // far beyond any bounded residual: empty tail
        assert_eq!(*curve.fractions.last().unwrap(), 0.0);
        for k in 0..taus.len() {
            assert!(curve.ci_low[k] <= curve.fractions[k] + 1e-15);
            assert!(curve.fractions[k] <= curve.ci_high[k] + 1e-15);
        }
    }

    #[test]
    fn loglog_fit_examples() {
        let xs = alloc::vec![1.0, 2.0, 4.0, 8.0, 16.0];
        let ys: Vec<f64> = xs.iter().map(|&x: &f64| x.powi(-2)).collect();
        let (slope, _, r2) = loglog_fit(&xs, &ys).unwrap();
        assert!((slope + 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);

        let flat = alloc::vec![3.0, 3.0, 3.0, 3.0, 3.0];
        let (slope, _, _) = loglog_fit(&xs, &flat).unwrap();
        assert_eq!(slope, 0.0);

        assert!(loglog_fit(&xs[..2], &ys[..2]).is_err());
        assert!(loglog_fit(&xs, &alloc::vec![1.0, -1.0, 1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn loglog_fit_with_noise() {
        // K/x^2 with 1% multiplicative noise recovers slope -2 +- 0.05
        let mut rng = RngStream::new(304, 0);
        let xs: Vec<f64> = (0..30).map(|i| 1.5f64.powi(i)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|&x: &f64| 3.7 * x.powi(-2) * (1.0 + 0.01 * (2.0 * rng.uniform() - 1.0)))
            .collect();
        let (slope, _, _) = loglog_fit(&xs, &ys).unwrap();
        assert!((slope + 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn model_compare_examples() {
        let taus: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let power: Vec<f64> = taus.iter().map(|&t: &f64| t.powi(-2)).collect();
        let (_, _, v) = model_compare_exp_vs_power(&taus, &power).unwrap();
        assert_eq!(v, ModelVerdict::PowerBetter);

        let expo: Vec<f64> = taus.iter().map(|&t: &f64| (-t).exp()).collect();
        let (_, _, v) = model_compare_exp_vs_power(&taus, &expo).unwrap();
        assert_eq!(v, ModelVerdict::ExpBetter);

        let mut rng = RngStream::new(305, 0);
        let noisy: Vec<f64> = taus
            .iter()
            .map(|&t: &f64| t.powi(-2) * (1.0 + 0.05 * (2.0 * rng.uniform() - 1.0)))
            .collect();
        let (_, _, v) = model_compare_exp_vs_power(&taus, &noisy).unwrap();
        assert_eq!(v, ModelVerdict::PowerBetter);
    }

    #[test]
    fn drift_ratio_constant_potential_is_exactly_one() {
        // with the middle branch covering every outcome, V == a everywhere
        let t = reference_table();
        let params = PotentialParams {
            epsilon: 0.5,
            gamma: 1.0,
            v_min: 1e-280,
            v_max: 1e280,
            a: 7.0,
        };
        let mut rng = RngStream::new(306, 0);
        let est = drift_ratio(&t, 1.0, &params, 2000, &mut rng).unwrap();
        assert_eq!(est.ratio, 1.0);
        assert_eq!(est.ci_low, 1.0);
        assert_eq!(est.ci_high, 1.0);
    }

    #[test]
    fn drift_ratio_ci_shrinks_like_sqrt_n() {
        let t = reference_table();
        let params = PotentialParams::defaults(1.0);
        let mut rng = RngStream::new(307, 0);
        let small = drift_ratio(&t, 3.0, &params, 4000, &mut rng).unwrap();
        let mut rng = RngStream::new(307, 1);
        let large = drift_ratio(&t, 3.0, &params, 16_000, &mut rng).unwrap();
        let w_small = small.ci_high - small.ci_low;
        let w_large = large.ci_high - large.ci_low;
        let shrink = w_small / w_large;
        assert!(
            (shrink - 2.0).abs() < 0.4,
            "expected ~2x shrink, got {shrink}"
        );
    }

    #[test]
    fn roof_integrability_identical_records_is_stable() {
        let t = reference_table();
        let mut rng = RngStream::new(308, 0);
        let e = stationary_sample(&t, 64, 10, 10, &mut rng).unwrap();
        let mut cloned = e.clone();
        let rec = cloned.steps[0];
        for r in cloned.steps.iter_mut() {
            *r = rec;
        }
        let roof = roof_integrability(&cloned).unwrap();
        assert_eq!(roof.stability, 0.0);
        assert!((roof.mean_flight_time - rec.flight_time).abs() < 1e-15);
    }

    #[test]
    fn grazing_fraction_vacuous_threshold_and_nesting() {
        let t = reference_table();
        let mut rng = RngStream::new(309, 0);
        let out = grazing_fractions(&t, &[0.05, 0.2, 1e12], 4000, &mut rng).unwrap();
        assert_eq!(out[2].0, 1.0); // vacuous threshold catches everything
        assert!(out[0].0 <= out[1].0); // nested events on the same sample
        for (frac, (lo, hi)) in &out {
            assert!(lo <= frac && frac <= hi);
        }
    }

    #[test]
    fn wilson_interval_contains_fraction() {
        for &(k, n) in &[(0u64, 50u64), (1, 50), (25, 50), (50, 50), (3, 1_000_000)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p + 1e-15 && p <= hi + 1e-15);
            assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }
        // Wilson lower bound stays positive for nonzero counts
        let (lo, _) = wilson_interval(5, 1_000_000);
        assert!(lo > 0.0);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 0.5), 50.0);
        assert_eq!(percentile(&v, 0.999), 100.0);
        assert_eq!(percentile(&v, 0.01), 1.0);
    }

    #[test]
    fn chi_square_accepts_the_exact_sampler() {
        // sampler vs closed-form quantiles at one desk-scale pair
        let mut rng = RngStream::new(310, 0);
        let chi2 = angle_sampler_chi_square(1.0, 1.0, 100_000, 100, &mut rng).unwrap();
        // 99 dof, 1% critical value
        assert!(chi2 < 134.642, "chi2 {chi2}");
    }
}
