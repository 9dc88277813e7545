//! Log-log least-squares power-law fits `|u| ≈ A·d^p·e^{c d}`, `d = |x - anchor|`.
//!
//! The `e^{c d}` factor absorbs the first smooth correction to the leading
//! power, so the exponent is not biased by `d^{p+1}` terms.

use nalgebra::{DMatrix, DVector};

use super::grid::SampledFunction;
use crate::error::{FracError, Result};

pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Largest relative deviation of the fitted model from `|u|`.
    pub residual: f64,
    pub fit_window: (f64, f64),
    /// First-order correction `c` in the model `A·d^p·e^{c d}`.
    pub correction: f64,
}

impl PowerFit {
    pub fn eval(&self, d: f64) -> f64 {
        self.amplitude * d.powf(self.exponent) * (self.correction * d).exp()
    }
}

fn check_window(window: (f64, f64)) -> Result<()> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(FracError::FitFailed(format!(
            "window must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

/// Fits the pairs `(d_i, u_i)`, `d_i > 0`, that fall inside `window`.
pub fn fit_power_law_points(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerFit> {
    check_window(window)?;
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(d, _)| d >= window.0 && d <= window.1)
        .collect();
    fit_points(&inside, window)
}

fn fit_points(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerFit> {
    if points.len() < MIN_FIT_POINTS {
        return Err(FracError::FitFailed(format!(
            "{} usable points in window, need {MIN_FIT_POINTS}",
            points.len()
        )));
    }
    let sign = points[0].1.signum();
    if points.iter().any(|&(_, u)| u == 0.0 || u.signum() != sign) {
        return Err(FracError::FitFailed(
            "values vanish or change sign inside the window".into(),
        ));
    }
    // ln|u| = ln A + p ln d + c d/d_max
    let d_max = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let m = points.len();
    let design = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => points[i].0.ln(),
        _ => points[i].0 / d_max,
    });
    let rhs = DVector::from_fn(m, |i, _| points[i].1.abs().ln());
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| FracError::FitFailed(e.to_string()))?;
    let (ln_amp, exponent, corr) = (coef[0], coef[1], coef[2]);
    let model = |d: f64| (ln_amp + exponent * d.ln() + corr * d / d_max).exp();
    let residual = points
        .iter()
        .map(|&(d, u)| (model(d) - u.abs()).abs() / u.abs())
        .fold(0.0, f64::max);
    if !exponent.is_finite() {
        return Err(FracError::FitFailed("degenerate abscissae".into()));
    }
    Ok(PowerFit {
        exponent,
        amplitude: sign * ln_amp.exp(),
        correction: corr / d_max,
        residual,
        fit_window: window,
    })
}

/// Power-law fit of sampled data near `anchor`, distances restricted to `window`.
///
/// Grid points are thinned to an approximately geometric sequence of
/// distances so every decade carries the same weight. Only the side(s) of
/// the anchor where the samples do not vanish identically are used; real
/// parts are fitted.
pub fn fit_power_law(
    samples: &SampledFunction,
    anchor: f64,
    window: (f64, f64),
) -> Result<PowerFit> {
    fit_sides(samples, anchor, window, None)
}

/// Like [`fit_power_law`] but using only `x = anchor + direction·d`.
pub fn fit_power_law_one_sided(
    samples: &SampledFunction,
    anchor: f64,
    direction: f64,
    window: (f64, f64),
) -> Result<PowerFit> {
    fit_sides(samples, anchor, window, Some(direction > 0.0))
}

fn fit_sides(
    samples: &SampledFunction,
    anchor: f64,
    window: (f64, f64),
    only_above: Option<bool>,
) -> Result<PowerFit> {
    check_window(window)?;
    let (lo, hi) = window;
    let grid = samples.grid();
    let mut above = Vec::new();
    let mut below = Vec::new();
    for (x, v) in grid.points().zip(samples.values()) {
        let d = (x - anchor).abs();
        if d >= lo && d <= hi {
            if x > anchor {
                above.push((d, v.re));
            } else {
                below.push((d, v.re));
            }
        }
    }
    let live = |side: &Vec<(f64, f64)>| side.iter().any(|&(_, u)| u != 0.0);
    let mut points: Vec<(f64, f64)> = Vec::new();
    if only_above != Some(false) && live(&above) {
        points.extend(&above);
    }
    if only_above != Some(true) && live(&below) {
        points.extend(&below);
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    // geometric thinning: keep the first point in each log-bin
    const BINS: usize = 64;
    if points.len() <= 2 * BINS {
        return fit_points(&points, window);
    }
    let step = (hi / lo).ln() / BINS as f64;
    let mut thinned: Vec<(f64, f64)> = Vec::with_capacity(BINS);
    let mut last_bin = usize::MAX;
    for p in points {
        let b = (((p.0 / lo).ln() / step) as usize).min(BINS - 1);
        if b != last_bin {
            thinned.push(p);
            last_bin = b;
        }
    }
    fit_points(&thinned, window)
}

/// Power-law fit of a function evaluated at `count` geometrically spaced
/// distances `d ∈ window`, at `x = anchor + direction·d`.
pub fn fit_power_law_fn(
    f: impl Fn(f64) -> f64,
    anchor: f64,
    direction: f64,
    window: (f64, f64),
    count: usize,
) -> Result<PowerFit> {
    check_window(window)?;
    let (lo, hi) = window;
    let count = count.max(MIN_FIT_POINTS);
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    let points: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let d = lo * ratio.powi(i as i32);
            (d, f(anchor + direction.signum() * d))
        })
        .collect();
    if points.iter().any(|p| !p.1.is_finite()) {
        return Err(FracError::NonFinite("fit samples"));
    }
    fit_points(&points, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::UniformGrid1D;

    #[test]
    fn exact_power_law_on_grid() {
        let grid = UniformGrid1D::new(0.0, 1.0, 20_001).unwrap();
        let u = SampledFunction::from_fn(grid, |x| x.powf(0.5)).unwrap();
        let fit = fit_power_law(&u, 0.0, (1e-3, 1e-1)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-6);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn leading_power_dominates() {
        let f = |x: f64| 3.0 * x.powf(0.7) * (1.0 + x);
        let fit = fit_power_law_fn(f, 0.0, 1.0, (1e-4, 1e-2), 32).unwrap();
        assert!((fit.exponent - 0.7).abs() < 1e-3, "{}", fit.exponent);
        let grid = UniformGrid1D::new(0.0, 0.02, 200_001).unwrap();
        let u = SampledFunction::from_fn(grid, f).unwrap();
        let fit = fit_power_law(&u, 0.0, (1e-4, 1e-2)).unwrap();
        assert!((fit.exponent - 0.7).abs() < 1e-3, "{}", fit.exponent);
    }

    #[test]
    fn negative_values_keep_their_sign() {
        let fit = fit_power_law_fn(|x| -2.0 * (1.0 - x).powf(0.25), 1.0, -1.0, (1e-6, 1e-3), 16)
            .unwrap();
        assert!((fit.exponent - 0.25).abs() < 1e-12);
        assert!((fit.amplitude + 2.0).abs() < 1e-10);
    }

    #[test]
    fn sign_change_and_sparse_windows_are_rejected() {
        let r = fit_power_law_fn(|x| x - 0.01, 0.0, 1.0, (1e-3, 1e-1), 16);
        assert!(matches!(r, Err(FracError::FitFailed(_))));
        let grid = UniformGrid1D::new(0.0, 1.0, 101).unwrap();
        let u = SampledFunction::from_fn(grid, |x| x).unwrap();
        assert!(matches!(
            fit_power_law(&u, 0.0, (1e-3, 5e-2)),
            Err(FracError::FitFailed(_))
        ));
    }

    #[test]
    fn zero_side_is_ignored() {
        // support in x <= 1, anchor at the boundary
        let grid = UniformGrid1D::new(0.0, 2.0, 200_001).unwrap();
        let u = SampledFunction::from_fn(grid, |x| if x < 1.0 { (1.0 - x).powf(0.3) } else { 0.0 })
            .unwrap();
        let fit = fit_power_law(&u, 1.0, (1e-4, 1e-2)).unwrap();
        assert!((fit.exponent - 0.3).abs() < 1e-9);
    }

    mod planted {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn recovers_planted_exponent(p in 0.1f64..0.9, amp in 0.1f64..10.0, c in -1.0f64..1.0) {
                let f = |x: f64| amp * x.powf(p) * (1.0 + c * 1e-7 * x);
                let fit = fit_power_law_fn(f, 0.0, 1.0, (1e-3, 1e-1), 24).unwrap();
                if fit.residual <= 1e-6 {
                    prop_assert!((fit.exponent - p).abs() <= 1e-3);
                }
            }
        }
    }
}
