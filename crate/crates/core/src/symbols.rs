//! Multiplier symbols of order `2a` (Riesz `|ξ|^{2a}`, Bessel `(1+ξ²)^a`),
//! the plus/minus order-reducing symbols `(1 ± iξ)^t`, and the constant of
//! the singular-integral kernel `c_{1,a} |y|^{-1-2a}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{FracError, Result};
use crate::numeric::quadrature::{gauss_jacobi, gauss_legendre, GaussRule};
use crate::numeric::special::gamma_unchecked;
use crate::numeric::FractionalOrder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    /// `|ξ|^{order}`
    Riesz,
    /// `(anchor² + ξ²)^{order/2}`
    Bessel,
    /// `(anchor + iξ)^{order}`, analytic in `Im ξ < 0`
    PlusReducer,
    /// `(anchor - iξ)^{order}`, analytic in `Im ξ > 0`
    MinusReducer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolSpec {
    pub kind: SymbolKind,
    /// `2a` for Riesz and Bessel, `t` for the reducers.
    pub order: f64,
    /// Plays the role of `⟨ξ'⟩`; always 1 on the line.
    pub anchor: f64,
}

impl SymbolSpec {
    /// `|ξ|^{2a}`, the fractional Laplacian `(-Δ)^a`.
    pub fn riesz(a: FractionalOrder) -> Self {
        Self::riesz_order(2.0 * a.value())
    }

    pub fn riesz_order(order: f64) -> Self {
        Self {
            kind: SymbolKind::Riesz,
            order,
            anchor: 1.0,
        }
    }

    /// `(1+ξ²)^{a}`, i.e. `(1-Δ)^a`.
    pub fn bessel(a: f64) -> Self {
        Self {
            kind: SymbolKind::Bessel,
            order: 2.0 * a,
            anchor: 1.0,
        }
    }

    pub fn plus(t: f64) -> Self {
        Self {
            kind: SymbolKind::PlusReducer,
            order: t,
            anchor: 1.0,
        }
    }

    pub fn minus(t: f64) -> Self {
        Self {
            kind: SymbolKind::MinusReducer,
            order: t,
            anchor: 1.0,
        }
    }

    pub fn eval(&self, xi: f64) -> Complex64 {
        eval_symbol(self, xi)
    }

    /// True for symbols with `p(-ξ) = p(ξ)`.
    pub fn is_even(&self) -> bool {
        matches!(self.kind, SymbolKind::Riesz | SymbolKind::Bessel)
    }
}

/// Evaluates the symbol at real `ξ`, principal branch for complex powers.
pub fn eval_symbol(s: &SymbolSpec, xi: f64) -> Complex64 {
    match s.kind {
        SymbolKind::Riesz => {
            if xi == 0.0 {
                if s.order > 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(1.0, 0.0)
                }
            } else {
                Complex64::new(xi.abs().powf(s.order), 0.0)
            }
        }
        SymbolKind::Bessel => {
            Complex64::new((s.anchor * s.anchor + xi * xi).powf(0.5 * s.order), 0.0)
        }
        SymbolKind::PlusReducer => Complex64::new(s.anchor, xi).powf(s.order),
        SymbolKind::MinusReducer => Complex64::new(s.anchor, -xi).powf(s.order),
    }
}

/// Standard closed form `c_{1,a} = 4^a Γ(1/2 + a) / (√π |Γ(-a)|)`.
///
/// Used only as an independent cross-check of [`estimate_normalization`].
pub fn closed_form_normalization(a: FractionalOrder) -> f64 {
    let a = a.value();
    4f64.powf(a) * gamma_unchecked(0.5 + a) / (PI.sqrt() * gamma_unchecked(-a).abs())
}

/// The homogeneous kernel `K(y) = constant·|y|^{-1-2a}` on the line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub a: FractionalOrder,
    pub constant: f64,
}

impl KernelSpec {
    pub fn new(a: FractionalOrder, constant: f64) -> Result<Self> {
        if !(constant.is_finite() && constant > 0.0) {
            return Err(FracError::InvalidInput(format!(
                "kernel constant must be positive, got {constant}"
            )));
        }
        Ok(Self { a, constant })
    }

    /// Kernel normalized by a numerically estimated constant.
    pub fn estimated(a: FractionalOrder) -> Result<Self> {
        Self::new(a, estimate_normalization(a)?)
    }

    /// Kernel normalized by the closed-form constant.
    pub fn closed_form(a: FractionalOrder) -> Self {
        Self {
            a,
            constant: closed_form_normalization(a),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.constant * y.abs().powf(-1.0 - 2.0 * self.a.value())
    }
}

/// Quadrature knobs for [`estimate_normalization_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationConfig {
    /// Radius of the analytic local expansion around `y = 0`.
    pub delta: f64,
    /// Far-field cutoff; the rest is added as an analytic tail.
    pub cutoff: f64,
    /// Gauss–Legendre orders tried in turn.
    pub orders: Vec<usize>,
    pub probe_points: Vec<f64>,
    /// Required agreement between the last two refinements.
    pub refinement_tol: f64,
    /// Required agreement between the PV and multiplier forms at the probes.
    pub match_tol: f64,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            delta: 1e-3,
            cutoff: 16.0,
            orders: vec![8, 12, 16, 24, 32],
            probe_points: vec![0.0, 0.3, 0.6],
            refinement_tol: 1e-9,
            match_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationEstimate {
    pub constant: f64,
    /// Max over probes of `|c·I(x) - M(x)| / max|M|`.
    pub mismatch: f64,
    /// Change of `c` between the last two quadrature refinements.
    pub refinement_change: f64,
}

/// Derives `c_{1,a}` by matching the unnormalized PV integral of `e^{-x²}`
/// against its multiplier evaluation at a few probe points.
pub fn estimate_normalization(a: FractionalOrder) -> Result<f64> {
    estimate_normalization_with(a, &NormalizationConfig::default()).map(|e| e.constant)
}

pub fn estimate_normalization_with(
    a: FractionalOrder,
    cfg: &NormalizationConfig,
) -> Result<NormalizationEstimate> {
    if cfg.orders.is_empty() || cfg.probe_points.is_empty() {
        return Err(FracError::InvalidInput("empty quadrature configuration".into()));
    }
    let mut previous: Option<f64> = None;
    let mut best = f64::NAN;
    let mut change = f64::INFINITY;
    let mut mismatch = f64::INFINITY;
    for &order in &cfg.orders {
        let rule = gauss_legendre(order);
        let (pv, mult): (Vec<f64>, Vec<f64>) = cfg
            .probe_points
            .iter()
            .map(|&x| {
                (
                    gaussian_pv_unnormalized(a.value(), x, &rule, cfg),
                    gaussian_multiplier(a.value(), x, order),
                )
            })
            .unzip();
        let num: f64 = pv.iter().zip(&mult).map(|(p, m)| p * m).sum();
        let den: f64 = pv.iter().map(|p| p * p).sum();
        let c = num / den;
        let scale = mult.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        mismatch = pv
            .iter()
            .zip(&mult)
            .map(|(p, m)| (c * p - m).abs() / scale)
            .fold(0.0, f64::max);
        if let Some(prev) = previous {
            change = (c - prev).abs() / c.abs();
        }
        best = c;
        previous = Some(c);
        if change <= cfg.refinement_tol && mismatch <= cfg.match_tol {
            return Ok(NormalizationEstimate {
                constant: c,
                mismatch,
                refinement_change: change,
            });
        }
    }
    Err(FracError::NotConverged {
        what: "normalization constant",
        best,
        mismatch: mismatch.max(change),
    })
}

fn gaussian(x: f64) -> f64 {
    (-x * x).exp()
}

/// `∫_0^∞ (2u(x) - u(x+y) - u(x-y)) y^{-1-2a} dy` for `u = e^{-x²}`.
fn gaussian_pv_unnormalized(a: f64, x: f64, rule: &GaussRule, cfg: &NormalizationConfig) -> f64 {
    let u = gaussian;
    let p = -1.0 - 2.0 * a;
    let g = |y: f64| 2.0 * u(x) - u(x + y) - u(x - y);

    // Local part from the even Taylor expansion g(y) ≈ -u'' y² - u'''' y⁴/12.
    let eta = 1e-3;
    let d2 = (u(x + eta) - 2.0 * u(x) + u(x - eta)) / (eta * eta);
    let e4 = 1e-2;
    let d4 = (u(x + 2.0 * e4) - 4.0 * u(x + e4) + 6.0 * u(x) - 4.0 * u(x - e4) + u(x - 2.0 * e4))
        / e4.powi(4);
    let delta = cfg.delta;
    let local = -d2 * delta.powf(2.0 - 2.0 * a) / (2.0 - 2.0 * a)
        - d4 * delta.powf(4.0 - 2.0 * a) / (12.0 * (4.0 - 2.0 * a));

    // Geometric panels from delta to 1, unit panels to the cutoff.
    let mut edges = vec![delta];
    while *edges.last().unwrap() * 2.0 < 1.0 {
        edges.push(edges.last().unwrap() * 2.0);
    }
    let mut y = 1.0;
    while y <= cfg.cutoff + 1e-12 {
        edges.push(y);
        y += 0.5;
    }
    let body: f64 = edges
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |y| g(y) * y.powf(p)))
        .sum();

    let r = *edges.last().unwrap();
    let tail = 2.0 * u(x) * r.powf(-2.0 * a) / (2.0 * a);
    local + body + tail
}

/// `(2π)^{-1} ∫ |ξ|^{2a} û(ξ) e^{ixξ} dξ` with `û(ξ) = √π e^{-ξ²/4}`.
fn gaussian_multiplier(a: f64, x: f64, order: usize) -> f64 {
    // ∫_0^∞ ξ^{2a} e^{-ξ²/4} cos(xξ) dξ / √π
    let split: f64 = 2.0;
    let near = gauss_jacobi(order, 0.0, 2.0 * a).expect("valid Jacobi parameters");
    // (1+t)^{2a} weight on [-1,1] maps to ξ^{2a} on [0, split]
    let scale = (0.5 * split).powf(2.0 * a);
    let head = scale * near.integrate(0.0, split, |xi| (-0.25 * xi * xi).exp() * (x * xi).cos());
    let gl = gauss_legendre(order);
    let mut far = 0.0;
    let mut lo = split;
    while lo < 16.0 {
        let hi = lo + 1.0;
        far += gl.integrate(lo, hi, |xi| xi.powf(2.0 * a) * (-0.25 * xi * xi).exp() * (x * xi).cos());
        lo = hi;
    }
    (head + far) / PI.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn point_values() {
        assert_eq!(eval_symbol(&SymbolSpec::riesz(order(0.5)), 2.0).re, 2.0);
        for a in [0.1, 0.5, 0.9] {
            assert_eq!(eval_symbol(&SymbolSpec::riesz(order(a)), 0.0).norm(), 0.0);
        }
        let prod = SymbolSpec::plus(0.5).eval(1.0) * SymbolSpec::minus(0.5).eval(1.0);
        assert!((prod - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(SymbolSpec::plus(0.7).eval(0.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn evenness_and_conjugate_symmetry() {
        let r = SymbolSpec::riesz(order(0.37));
        let b = SymbolSpec::bessel(0.37);
        for k in -200..=200 {
            let xi = k as f64 * 0.731;
            assert_eq!(r.eval(xi), r.eval(-xi));
            assert_eq!(b.eval(xi), b.eval(-xi));
            for t in [-1.3, -0.5, 0.25, 1.75] {
                let p = SymbolSpec::plus(t).eval(xi);
                let m = SymbolSpec::minus(t).eval(xi);
                assert!((m - p.conj()).norm() <= 1e-15 * p.norm());
            }
        }
    }

    #[test]
    fn factorization_of_bessel_symbol() {
        for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
            let (p, m, b) = (SymbolSpec::plus(a), SymbolSpec::minus(a), SymbolSpec::bessel(a));
            let mut xi = -1e3;
            while xi <= 1e3 {
                let err = (p.eval(xi) * m.eval(xi) - b.eval(xi)).norm();
                assert!(err <= 1e-13 * (1.0 + xi.abs()).powf(2.0 * a), "a={a} ξ={xi}: {err}");
                xi += 0.913;
            }
        }
    }

    #[test]
    fn strong_ellipticity() {
        for a in [0.1, 0.5, 0.9] {
            let r = SymbolSpec::riesz(order(a));
            let b = SymbolSpec::bessel(a);
            for k in 0..2000 {
                let xi = 1.0 + k as f64 * 0.5;
                assert!(r.eval(xi).re >= xi.powf(2.0 * a) * (1.0 - 1e-15));
                assert!(b.eval(xi).re >= xi.powf(2.0 * a));
            }
        }
        // reducers: Re (1 ± iξ)^t ≥ (1+ξ²)^{t/2} cos(|t|π/2) for |t| ≤ 1
        for t in [-1.0, -0.6, -0.2, 0.3, 0.8, 1.0] {
            for k in -500..=500 {
                let xi = k as f64 * 0.37;
                let bound = (1.0f64 + xi * xi).powf(0.5 * t) * (0.5 * t.abs() * PI).cos();
                for s in [SymbolSpec::plus(t), SymbolSpec::minus(t)] {
                    assert!(s.eval(xi).re >= bound - 1e-14 * bound.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn normalization_matches_closed_form() {
        let c = estimate_normalization(order(0.5)).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-7, "{c}");
        assert!((0.3181..=0.3185).contains(&c));
        for a in [0.1, 0.25, 0.75, 0.9] {
            let est = estimate_normalization_with(order(a), &NormalizationConfig::default()).unwrap();
            let exact = closed_form_normalization(order(a));
            assert!((est.constant - exact).abs() < 1e-6 * exact, "a={a}: {} vs {exact}", est.constant);
            assert!(est.mismatch <= 1e-4);
        }
    }

    #[test]
    fn closed_form_at_one_half_is_one_over_pi() {
        assert!((closed_form_normalization(order(0.5)) - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn unattainable_tolerance_reports_best_estimate() {
        let cfg = NormalizationConfig {
            orders: vec![4, 6],
            refinement_tol: 1e-16,
            ..Default::default()
        };
        match estimate_normalization_with(order(0.5), &cfg) {
            Err(FracError::NotConverged { best, .. }) => assert!((best - 1.0 / PI).abs() < 1e-2),
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn kernel_is_even_and_homogeneous() {
        let k = KernelSpec::closed_form(order(0.3));
        let deg = -1.0 - 0.6;
        for &y in &[0.1, 0.7, 3.0] {
            assert_eq!(k.eval(y), k.eval(-y));
            assert!((k.eval(2.0 * y) - 2f64.powf(deg) * k.eval(y)).abs() < 1e-14 * k.eval(y));
        }
        assert!(KernelSpec::new(order(0.3), -1.0).is_err());
    }
}
