//! Symmetric `2a`-stable process: exact increments, free and killed
//! Feynman–Kac estimates, and the principal Dirichlet eigenvalue from
//! survival probabilities.
//!
//! Every path draws from its own ChaCha stream `(seed, path index)`, and
//! per-path results are reduced in path order, so estimates are bit-identical
//! for any thread count.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{FracError, Result};
use crate::numeric::FractionalOrder;

/// One increment over time `dt` of the process generated by `-(-Δ)^a`:
/// `E e^{iθX} = e^{-dt|θ|^{2a}}` (Chambers–Mallows–Stuck).
pub fn sample_increment<R: Rng + ?Sized>(a: FractionalOrder, dt: f64, rng: &mut R) -> f64 {
    let alpha = a.stable_index();
    dt.powf(1.0 / alpha) * standard_stable(alpha, rng)
}

fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break PI * (u - 0.5);
        }
    };
    let w = -(1.0 - rng.random::<f64>()).ln();
    if (alpha - 1.0).abs() < 1e-15 {
        return v.tan();
    }
    (alpha * v).sin() / v.cos().powf(1.0 / alpha) * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Line,
    /// Killed on leaving the open interval.
    Interval(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableConfig {
    pub a: FractionalOrder,
    /// Coarsest step of the killed-process ladder.
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub domain: Domain,
    /// Number of halvings below `dt` simulated on coupled paths (≥ 2 for
    /// extrapolation).
    pub levels: usize,
}

pub const MIN_PATHS: usize = 1000;
pub const MAX_KILLED_DT: f64 = 1e-2;

impl StableConfig {
    pub fn new(a: FractionalOrder, n_paths: usize, seed: u64) -> Self {
        Self {
            a,
            dt: MAX_KILLED_DT,
            n_paths,
            seed,
            domain: Domain::Interval(-1.0, 1.0),
            levels: 3,
        }
    }

    fn validate(&self, killed: bool) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(FracError::InvalidInput(format!(
                "need at least {MIN_PATHS} paths, got {}",
                self.n_paths
            )));
        }
        if killed {
            if !(self.dt > 0.0 && self.dt <= MAX_KILLED_DT) {
                return Err(FracError::InvalidInput(format!(
                    "killed-process step must be in (0, {MAX_KILLED_DT}], got {}",
                    self.dt
                )));
            }
            if self.levels == 0 || self.levels > 8 {
                return Err(FracError::InvalidInput("levels must be in 1..=8".into()));
            }
            match self.domain {
                Domain::Interval(lo, hi) if lo < hi => {}
                _ => return Err(FracError::InvalidInput("killed process needs a bounded interval".into())),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    /// `sample std / √n_effective`.
    pub std_error: f64,
    pub n_effective: usize,
}

impl MCEstimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n_effective: n,
        }
    }

    /// `mean ± 3·std_error`.
    pub fn interval(&self) -> (f64, f64) {
        (self.mean - 3.0 * self.std_error, self.mean + 3.0 * self.std_error)
    }

    /// Whether `value` lies within `sigmas` standard errors.
    pub fn agrees_with(&self, value: f64, sigmas: f64) -> bool {
        (self.mean - value).abs() <= sigmas * self.std_error
    }
}

/// `E[u₀(x + X_t)]`, sampling `X_t` exactly in one step.
pub fn feynman_kac_free(
    u0: impl Fn(f64) -> f64 + Sync,
    x: f64,
    t: f64,
    cfg: &StableConfig,
) -> Result<MCEstimate> {
    cfg.validate(false)?;
    if t == 0.0 {
        return Ok(MCEstimate {
            mean: u0(x),
            std_error: 0.0,
            n_effective: cfg.n_paths,
        });
    }
    let values: Vec<f64> = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(cfg.seed, p);
            u0(x + sample_increment(cfg.a, t, &mut rng))
        })
        .collect();
    Ok(MCEstimate::from_samples(&values))
}

/// Positions at the observation times on each monitoring level of one path
/// (`None` once killed). Indexed `[level][observation]`, level 0 coarsest.
type PathRecord = Vec<Vec<Option<f64>>>;

/// Simulates coupled killed paths: the finest level draws the increments and
/// coarser levels check the interval only at every `2^k`-th fine step.
fn killed_paths(cfg: &StableConfig, start: &InitialLaw, obs_steps: &[usize]) -> Vec<PathRecord> {
    let (lo, hi) = match cfg.domain {
        Domain::Interval(lo, hi) => (lo, hi),
        Domain::Line => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let levels = cfg.levels;
    let refine = 1usize << (levels - 1);
    let dt_fine = cfg.dt / refine as f64;
    let last = obs_steps.iter().copied().max().unwrap_or(0) * refine;
    (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(cfg.seed, p);
            let x = start.sample(&mut rng);
            let mut rec = vec![vec![None; obs_steps.len()]; levels];
            let mut alive = vec![x > lo && x < hi; levels];
            let mut pos = x;
            for (l, row) in rec.iter_mut().enumerate() {
                for (o, &s) in obs_steps.iter().enumerate() {
                    if s == 0 && alive[l] {
                        row[o] = Some(pos);
                    }
                }
            }
            for m in 1..=last {
                if alive.iter().all(|a| !a) {
                    break;
                }
                pos += sample_increment(cfg.a, dt_fine, &mut rng);
                let outside = pos <= lo || pos >= hi;
                for l in 0..levels {
                    let stride = 1usize << (levels - 1 - l);
                    if m % stride != 0 || !alive[l] {
                        continue;
                    }
                    if outside {
                        alive[l] = false;
                        continue;
                    }
                    if m % refine == 0 {
                        let coarse_step = m / refine;
                        for (o, &s) in obs_steps.iter().enumerate() {
                            if s == coarse_step {
                                rec[l][o] = Some(pos);
                            }
                        }
                    }
                }
            }
            rec
        })
        .collect()
}

/// Starting position of killed paths.
#[derive(Clone)]
pub enum InitialLaw {
    Point(f64),
    /// Rejection sampling from `density` (unnormalized, `≤ bound`) on `support`.
    Density {
        density: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        support: (f64, f64),
        bound: f64,
    },
}

impl std::fmt::Debug for InitialLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Point(x) => f.debug_tuple("Point").field(x).finish(),
            Self::Density { support, bound, .. } => f
                .debug_struct("Density")
                .field("support", support)
                .field("bound", bound)
                .finish(),
        }
    }
}

impl InitialLaw {
    /// Density proportional to a nonnegative function sampled for its bound
    /// on 2001 points of `support` (with 5% headroom).
    pub fn proportional_to(density: impl Fn(f64) -> f64 + Send + Sync + 'static, support: (f64, f64)) -> Result<Self> {
        let (lo, hi) = support;
        let m = (0..=2000)
            .map(|j| density(lo + (hi - lo) * j as f64 / 2000.0))
            .fold(0.0, f64::max);
        if !(m > 0.0 && m.is_finite()) {
            return Err(FracError::InvalidInput("start density must be positive and bounded".into()));
        }
        Ok(Self::Density {
            density: Arc::new(density),
            support,
            bound: 1.05 * m,
        })
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Self::Point(x) => *x,
            Self::Density { density, support, bound } => loop {
                let x = support.0 + (support.1 - support.0) * rng.random::<f64>();
                if rng.random::<f64>() * bound < density(x) {
                    break x;
                }
            },
        }
    }
}

fn coarse_steps(t: f64, dt: f64) -> Result<usize> {
    let s = t / dt;
    let r = s.round();
    if (s - r).abs() > 1e-9 * s.max(1.0) {
        return Err(FracError::InvalidInput(format!(
            "time {t} is not a multiple of the step {dt}"
        )));
    }
    Ok(r as usize)
}

/// Estimates at each monitoring step and their extrapolation to `dt → 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DtExtrapolation {
    /// Monitoring steps, coarse to fine.
    pub dts: Vec<f64>,
    pub levels: Vec<MCEstimate>,
    /// Observed order `p` of the monitoring bias `∝ dt^p`.
    pub rate: f64,
    /// `false` when the level differences were statistically invisible and
    /// `p = 1` was assumed.
    pub rate_resolved: bool,
    pub extrapolated: MCEstimate,
    /// Size of the correction applied to the finest level.
    pub bias_estimate: f64,
}

const DEFAULT_RATE: f64 = 1.0;

/// Richardson extrapolation over coupled levels. `influence[path][level]`
/// holds per-path contributions whose means are the level estimates. The
/// standard error of the extrapolated value comes from its linearization in
/// the level means, so it accounts for the coupling and, when the rate is
/// estimated from the data, for the uncertainty of the rate.
fn extrapolate_levels(influence: &[Vec<f64>], means: &[f64], dts: &[f64]) -> DtExtrapolation {
    let nl = means.len();
    let per_level: Vec<MCEstimate> = (0..nl)
        .map(|l| {
            let col: Vec<f64> = influence.iter().map(|r| r[l]).collect();
            let mut e = MCEstimate::from_samples(&col);
            e.mean = means[l];
            e
        })
        .collect();
    if nl < 2 {
        return DtExtrapolation {
            dts: dts.to_vec(),
            levels: per_level.clone(),
            rate: DEFAULT_RATE,
            rate_resolved: false,
            extrapolated: per_level[0],
            bias_estimate: 0.0,
        };
    }
    let diff = |l: usize| {
        let col: Vec<f64> = influence.iter().map(|r| r[l] - r[l + 1]).collect();
        let mut e = MCEstimate::from_samples(&col);
        e.mean = means[l] - means[l + 1];
        e
    };
    let fine = diff(nl - 2);
    let (mut rate, mut resolved) = (DEFAULT_RATE, false);
    if nl >= 3 {
        let coarse = diff(nl - 3);
        let visible = |d: &MCEstimate| d.mean.abs() > 3.0 * d.std_error;
        if visible(&coarse) && visible(&fine) && coarse.mean * fine.mean > 0.0 {
            let p = (coarse.mean / fine.mean).log2();
            if (0.25..=3.0).contains(&p) {
                rate = p;
                resolved = true;
            }
        }
    }
    // weights on levels nl-3, nl-2, nl-1
    let weights = if resolved {
        // E = m₂ − D₂²/(D₁ − D₂) with D₁ = m₀ − m₁, D₂ = m₁ − m₂; the
        // gradient carries the uncertainty of the estimated rate
        let (d1, d2) = (means[nl - 3] - means[nl - 2], fine.mean);
        let den = (d1 - d2).powi(2);
        let g1 = d2 * d2 / den;
        let g2 = -d2 * (2.0 * d1 - d2) / den;
        [g1, g2 - g1, 1.0 - g2]
    } else {
        let r = 2f64.powf(rate);
        [0.0, -1.0 / (r - 1.0), 1.0 + 1.0 / (r - 1.0)]
    };
    let first = nl.saturating_sub(3);
    let offset = 3 - (nl - first);
    let combined: Vec<f64> = influence
        .iter()
        .map(|row| (first..nl).map(|l| weights[l - first + offset] * row[l]).sum())
        .collect();
    let mut extrapolated = MCEstimate::from_samples(&combined);
    extrapolated.mean = if resolved {
        means[nl - 1] - fine.mean * fine.mean / (means[nl - 3] - means[nl - 2] - fine.mean)
    } else {
        weights[1] * means[nl - 2] + weights[2] * means[nl - 1]
    };
    DtExtrapolation {
        dts: dts.to_vec(),
        levels: per_level,
        rate,
        rate_resolved: resolved,
        bias_estimate: extrapolated.mean - means[nl - 1],
        extrapolated,
    }
}

fn level_dts(cfg: &StableConfig) -> Vec<f64> {
    (0..cfg.levels).map(|l| cfg.dt / (1u64 << l) as f64).collect()
}

/// `E[u₀(X_t^x); τ > t]` for the process killed on leaving the interval,
/// with the exit checked at the end of each step, on every level of the
/// `dt` ladder, plus the extrapolation to continuous monitoring.
pub fn feynman_kac_killed(
    u0: impl Fn(f64) -> f64 + Sync,
    x: f64,
    t: f64,
    cfg: &StableConfig,
) -> Result<DtExtrapolation> {
    cfg.validate(true)?;
    let steps = coarse_steps(t, cfg.dt)?;
    let paths = killed_paths(cfg, &InitialLaw::Point(x), &[steps]);
    let influence: Vec<Vec<f64>> = paths
        .iter()
        .map(|rec| rec.iter().map(|lvl| lvl[0].map_or(0.0, &u0)).collect())
        .collect();
    let n = influence.len() as f64;
    let means: Vec<f64> = (0..cfg.levels)
        .map(|l| influence.iter().map(|r| r[l]).sum::<f64>() / n)
        .collect();
    Ok(extrapolate_levels(&influence, &means, &level_dts(cfg)))
}

/// Survival probabilities `P(τ > t)` from `x` at the requested times on every
/// monitoring level (`[level][time]`).
pub fn survival_curve(x: f64, times: &[f64], cfg: &StableConfig) -> Result<Vec<Vec<f64>>> {
    cfg.validate(true)?;
    let steps: Vec<usize> = times.iter().map(|&t| coarse_steps(t, cfg.dt)).collect::<Result<_>>()?;
    let paths = killed_paths(cfg, &InitialLaw::Point(x), &steps);
    let n = paths.len() as f64;
    Ok((0..cfg.levels)
        .map(|l| {
            (0..steps.len())
                .map(|o| paths.iter().filter(|r| r[l][o].is_some()).count() as f64 / n)
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueEstimate {
    pub window: (f64, f64),
    /// Survival at `(t₁, t₂)` on the finest level.
    pub survival: (f64, f64),
    pub estimate: DtExtrapolation,
}

pub const MIN_SURVIVORS: usize = 100;

/// `λ̂₁ = −(ln S(t₂) − ln S(t₁))/(t₂ − t₁)` per monitoring level,
/// extrapolated in `dt`.
///
/// From a point start, `S(t)` carries every even mode, so `spectral_gap`
/// (`λ₂ − λ₁`) guards the window: higher modes must have decayed by `e^{-1}`
/// at `t₁`. Starting from the density `∝ φ₁` instead makes `S(t) = e^{-λ₁t}`
/// exactly (orthogonality of the eigenfunctions), and the gap check is
/// skipped.
pub fn principal_eigenvalue_mc(
    cfg: &StableConfig,
    window: (f64, f64),
    spectral_gap: f64,
    start: &InitialLaw,
) -> Result<EigenvalueEstimate> {
    let (t1, t2) = window;
    if !(t1 > 0.0 && t2 >= 2.0 * t1) {
        return Err(FracError::InvalidInput(format!("window needs 0 < t₁ and t₂ ≥ 2t₁, got {window:?}")));
    }
    if matches!(start, InitialLaw::Point(_)) && spectral_gap * t1 < 1.0 {
        return Err(FracError::InvalidInput(format!(
            "t₁ = {t1} is too early for the spectral gap {spectral_gap}"
        )));
    }
    cfg.validate(true)?;
    let steps = [coarse_steps(t1, cfg.dt)?, coarse_steps(t2, cfg.dt)?];
    let paths = killed_paths(cfg, start, &steps);
    let n = paths.len();
    let nl = cfg.levels;
    let count = |l: usize, o: usize| paths.iter().filter(|r| r[l][o].is_some()).count();
    let mut means = Vec::with_capacity(nl);
    let mut surv = Vec::with_capacity(nl);
    for l in 0..nl {
        let (c1, c2) = (count(l, 0), count(l, 1));
        if c2 < MIN_SURVIVORS {
            return Err(FracError::Statistics(format!(
                "only {c2} of {n} paths survive to t₂ = {t2}"
            )));
        }
        let (s1, s2) = (c1 as f64 / n as f64, c2 as f64 / n as f64);
        means.push(-(s2.ln() - s1.ln()) / (t2 - t1));
        surv.push((s1, s2));
    }
    // delta-method influence of each path on λ̂
    let dtw = t2 - t1;
    let influence: Vec<Vec<f64>> = paths
        .iter()
        .map(|rec| {
            (0..nl)
                .map(|l| {
                    let (s1, s2) = surv[l];
                    let i1 = rec[l][0].is_some() as u8 as f64;
                    let i2 = rec[l][1].is_some() as u8 as f64;
                    -(i2 / s2 - i1 / s1) / dtw
                })
                .collect()
        })
        .collect();
    Ok(EigenvalueEstimate {
        window,
        survival: surv[nl - 1],
        estimate: extrapolate_levels(&influence, &means, &level_dts(cfg)),
    })
}
