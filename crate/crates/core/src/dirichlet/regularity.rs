use super::basis::WeightedBasis;
use super::eigen::EigenPair;
use crate::error::{FracError, Result};
use crate::numeric::{fit_power_law_fn, PowerFit};

/// Hölder quotients `sup |f(x) − f(x₀)| / |x − x₀|^β` over `x` at distance
/// `≤ d` from the anchor, for geometrically shrinking `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub beta: f64,
    pub distances: Vec<f64>,
    pub quotients: Vec<f64>,
    /// Log–log slope of the quotient against `d`.
    pub slope: f64,
    /// Quotient at the smallest `d` over the quotient at the largest.
    pub growth: f64,
    pub diverges: bool,
}

const SLOPE_THRESHOLD: f64 = -0.05;
const GROWTH_THRESHOLD: f64 = 1.5;

/// The quotient "diverges" when it grows as `d → 0` with a log–log slope of
/// at most −0.05 and by a factor of more than 1.5 over the window.
pub fn holder_divergence(
    f: impl Fn(f64) -> f64,
    anchor: f64,
    direction: f64,
    beta: f64,
    window: (f64, f64),
    count: usize,
) -> Result<HolderReport> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) || count < 4 {
        return Err(FracError::InvalidInput("Hölder window needs 0 < lo < hi and ≥ 4 levels".into()));
    }
    let dir = direction.signum();
    let f0 = f(anchor);
    let ratio = (lo / hi).powf(1.0 / (count - 1) as f64);
    let mut distances = Vec::with_capacity(count);
    let mut quotients = Vec::with_capacity(count);
    let mut d = hi;
    for _ in 0..count {
        // sup over eight sub-distances in (d/8, d]
        let q = (1..=8)
            .map(|k| {
                let s = d * k as f64 / 8.0;
                (f(anchor + dir * s) - f0).abs() / s.powf(beta)
            })
            .fold(0.0, f64::max);
        if !q.is_finite() {
            return Err(FracError::NonFinite("Hölder quotient"));
        }
        distances.push(d);
        quotients.push(q);
        d *= ratio;
    }
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .zip(&quotients)
        .map(|(d, q)| (d.ln(), q.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let slope = ls_slope(&pts);
    let growth = quotients[count - 1] / quotients[0];
    Ok(HolderReport {
        beta,
        distances,
        quotients,
        slope,
        growth,
        diverges: slope <= SLOPE_THRESHOLD && growth > GROWTH_THRESHOLD,
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub fit: PowerFit,
    /// Quotient at `β = a + 0.1`; expected to diverge.
    pub above_cap: HolderReport,
    /// Quotient at `β = a − 0.05`; expected to stay bounded.
    pub below_cap: HolderReport,
}

impl RegularityReport {
    pub fn exponent_error(&self, a: f64) -> f64 {
        (self.fit.exponent - a).abs()
    }

    pub fn cap_confirmed(&self) -> bool {
        self.above_cap.diverges && !self.below_cap.diverges
    }
}

pub const REGULARITY_FIT_WINDOW: (f64, f64) = (1e-4, 1e-2);
const HOLDER_WINDOW: (f64, f64) = (1e-8, 1e-2);

/// Boundary exponent of an eigenfunction at `x = 1` and the `C^{a+δ}` cap.
pub fn boundary_regularity_probe(basis: &WeightedBasis, phi: &EigenPair) -> Result<RegularityReport> {
    let a = basis.a().value();
    let f = |x: f64| phi.eval(basis, x);
    let fit = fit_power_law_fn(f, 1.0, -1.0, REGULARITY_FIT_WINDOW, 40)?;
    let above_cap = holder_divergence(f, 1.0, -1.0, a + 0.1, HOLDER_WINDOW, 13)?;
    let below_cap = holder_divergence(f, 1.0, -1.0, a - 0.05, HOLDER_WINDOW, 13)?;
    Ok(RegularityReport {
        fit,
        above_cap,
        below_cap,
    })
}
