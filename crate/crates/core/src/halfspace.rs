//! Order-reducing operators `Ξ±^t = (1 ± i∂)^t`-type multipliers on the
//! line, the factorization solver for the model Dirichlet problem
//! `r⁺(1-Δ)^a u = f` on the half-line, the transmission decomposition
//! `u = w + x₊^a·φ·e^{-x}` and weighted boundary traces.
//!
//! The default [`ReducerScheme::Causal`] realizes `1 + iξ` by the symbol of
//! the second-order backward difference `1 + (3 - 4S + S²)/(2h)`, `S` the
//! unit shift. Its powers are exact causal (resp. anti-causal) discrete
//! convolutions, so support in `x ≥ 0` is preserved to rounding and the
//! group law `Ξ^s Ξ^t = Ξ^{s+t}` holds on the grid. The symbol agrees with
//! `1 + iξ` to `O(h²ξ³)`; [`ReducerScheme::Spectral`] uses `(1 ± iξ)^t`
//! directly and only preserves support up to Gibbs-type leakage.

use num_complex::Complex64;

use crate::error::{FracError, Result};
use crate::numeric::dft::dft_forward;
use crate::numeric::{fit_power_law_one_sided, fit_power_law_points, gamma_fn, FractionalOrder, PowerFit};
use crate::numeric::{SampledFunction, UniformGrid1D};
use crate::operators::{apply_symbol_fn, MultiplierConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportSide {
    Plus,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReducerScheme {
    #[default]
    Causal,
    Spectral,
}

/// Grid on `[-l, l]` with spacing close to `h` and a node at the origin.
pub fn half_line_grid(l: f64, h: f64) -> Result<UniformGrid1D> {
    if !(l > 0.0 && h > 0.0 && h < l) {
        return Err(FracError::InvalidGrid(format!("need 0 < h < l, got h={h}, l={l}")));
    }
    let m = (l / h).round() as usize;
    UniformGrid1D::new(-(m as f64) * h, m as f64 * h, 2 * m + 1)
}

fn zero_index(grid: &UniformGrid1D) -> Result<usize> {
    let s = -grid.x_min / grid.h;
    let j = s.round();
    if (s - j).abs() > 1e-6 || j < 0.0 || j >= grid.n as f64 {
        return Err(FracError::InvalidGrid("grid has no node at x = 0".into()));
    }
    Ok(j as usize)
}

/// A sampled function on `[-L, L]` together with its support convention.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineFunction {
    sample: SampledFunction,
    support_side: SupportSide,
    leak_tol: f64,
}

impl HalfLineFunction {
    pub fn new(sample: SampledFunction, support_side: SupportSide, leak_tol: f64) -> Result<Self> {
        let j0 = zero_index(sample.grid())?;
        if support_side == SupportSide::Plus {
            let leak = sample.values()[..j0].iter().map(|v| v.norm()).fold(0.0, f64::max);
            if leak > leak_tol {
                return Err(FracError::InvalidInput(format!(
                    "support leaks into x < 0: {leak:e} > {leak_tol:e}"
                )));
            }
        }
        Ok(Self {
            sample,
            support_side,
            leak_tol,
        })
    }

    /// `f` on `x ≥ 0`, zero on `x < 0`. A non-finite value at the origin
    /// itself (e.g. `x^{a-1}`) is replaced by zero.
    pub fn plus_from_fn(grid: UniformGrid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let j0 = zero_index(&grid)?;
        let values = (0..grid.n)
            .map(|j| {
                let v = if j < j0 {
                    0.0
                } else if j == j0 {
                    let v0 = f(0.0);
                    if v0.is_finite() { v0 } else { 0.0 }
                } else {
                    f(grid.x(j))
                };
                Complex64::new(v, 0.0)
            })
            .collect();
        Self::new(SampledFunction::new(grid, values)?, SupportSide::Plus, 0.0)
    }

    pub fn sample(&self) -> &SampledFunction {
        &self.sample
    }

    pub fn support_side(&self) -> SupportSide {
        self.support_side
    }

    pub fn leak_tol(&self) -> f64 {
        self.leak_tol
    }

    pub fn grid(&self) -> &UniformGrid1D {
        self.sample.grid()
    }

    /// Index of the node at `x = 0`.
    pub fn origin(&self) -> usize {
        zero_index(self.grid()).expect("validated at construction")
    }

    /// Largest `|u(x)|` over nodes `x ≥ lo` (and `≤ hi`).
    pub fn max_abs_on(&self, lo: f64, hi: f64) -> f64 {
        let g = self.grid();
        g.points()
            .zip(self.sample.values())
            .filter(|(x, _)| *x >= lo && *x <= hi)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Symbol of `Ξ±^t` under the given scheme at spacing `h`.
pub fn reducer_symbol(side: Side, t: f64, scheme: ReducerScheme, h: f64) -> impl Fn(f64) -> Complex64 {
    let sign = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let q = (1.0 - 2.0 * h).max(0.0).sqrt();
    let (r1, r2) = (2.0 - q, 2.0 + q);
    let c = 1.0 + 1.5 / h;
    move |xi: f64| match scheme {
        ReducerScheme::Spectral => Complex64::new(1.0, sign * xi).powf(t),
        ReducerScheme::Causal => {
            // shift S = e^{-iξh} for Ξ₊, its adjoint for Ξ₋
            let z = Complex64::from_polar(1.0, -sign * xi * h);
            let one = Complex64::new(1.0, 0.0);
            c.powf(t) * (one - z / r1).powf(t) * (one - z / r2).powf(t)
        }
    }
}

/// Output of [`xi_apply`] with the measured support leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct XiApplication {
    pub output: SampledFunction,
    /// `max |output|` on `x < -2h` (Plus) or `x > 2h` (Minus).
    pub leakage: f64,
}

pub fn xi_apply(side: Side, t: f64, u: &SampledFunction) -> Result<XiApplication> {
    xi_apply_with(side, t, u, ReducerScheme::Causal)
}

pub fn xi_apply_with(
    side: Side,
    t: f64,
    u: &SampledFunction,
    scheme: ReducerScheme,
) -> Result<XiApplication> {
    if !(t.is_finite() && t.abs() <= 2.0) {
        return Err(FracError::InvalidInput(format!("reducer order must satisfy |t| ≤ 2, got {t}")));
    }
    let grid = *u.grid();
    if scheme == ReducerScheme::Causal && grid.h > 0.25 {
        return Err(FracError::InvalidGrid(format!("causal reducers need h ≤ 0.25, got {}", grid.h)));
    }
    let output = if t == 0.0 {
        crate::operators::check_edge_decay(u, 1e-10)?;
        u.clone()
    } else {
        apply_symbol_fn(reducer_symbol(side, t, scheme, grid.h), u, &MultiplierConfig::default(), true)?
    };
    let collar = 2.0 * grid.h;
    let leakage = grid
        .points()
        .zip(output.values())
        .filter(|(x, _)| match side {
            Side::Plus => *x < -collar,
            Side::Minus => *x > collar,
        })
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    Ok(XiApplication { output, leakage })
}

/// Zero every node with `x < 0`.
fn restrict_plus(u: &SampledFunction, j0: usize) -> Result<SampledFunction> {
    let mut v = u.values().to_vec();
    v[..j0].fill(Complex64::new(0.0, 0.0));
    SampledFunction::new(*u.grid(), v)
}

/// `r⁺ Ξ₋^t e⁺ f`: extend by zero, apply the anti-causal reducer, restrict
/// to `x ≥ 0`.
pub fn xi_minus_truncated(t: f64, f: &HalfLineFunction) -> Result<HalfLineFunction> {
    let j0 = f.origin();
    let ext = restrict_plus(f.sample(), j0)?;
    let applied = xi_apply(Side::Minus, t, &ext)?;
    HalfLineFunction::new(restrict_plus(&applied.output, j0)?, SupportSide::Plus, 0.0)
}

/// `r⁺ (1-Δ)^a u`, realized as `r⁺ Ξ₋^a Ξ₊^a u`.
pub fn apply_bessel_restricted(a: FractionalOrder, u: &HalfLineFunction) -> Result<HalfLineFunction> {
    let plus = xi_apply(Side::Plus, a.value(), u.sample())?;
    let both = xi_apply(Side::Minus, a.value(), &plus.output)?;
    HalfLineFunction::new(restrict_plus(&both.output, u.origin())?, SupportSide::Plus, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSolution {
    pub u: HalfLineFunction,
    /// `‖r⁺(1-Δ)^a u - f‖_∞ / ‖f‖_∞` on `x ≥ 0`.
    pub residual: f64,
    /// `max |u|` on `x < -2h`.
    pub leakage: f64,
}

/// Solves `r⁺(1-Δ)^a u = f`, `supp u ⊂ [0, ∞)` by the factorization
/// `u = Ξ₊^{-a} e⁺ r⁺ Ξ₋^{-a} e⁺ f`.
pub fn solve_model_dirichlet(a: FractionalOrder, f: &HalfLineFunction) -> Result<ModelSolution> {
    let g = xi_minus_truncated(-a.value(), f)?;
    let applied = xi_apply(Side::Plus, -a.value(), g.sample())?;
    let leak_tol = applied.leakage;
    let u = HalfLineFunction::new(applied.output, SupportSide::Plus, leak_tol)?;
    let back = apply_bessel_restricted(a, &u)?;
    let j0 = f.origin();
    let scale = f.sample().values()[j0..].iter().map(|v| v.norm()).fold(0.0, f64::max);
    let err = back.sample().values()[j0..]
        .iter()
        .zip(&f.sample().values()[j0..])
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max);
    let residual = if scale > 0.0 { err / scale } else { err };
    Ok(ModelSolution {
        u,
        residual,
        leakage: leak_tol,
    })
}

/// Geometric abscissae for boundary limits: `x_j = x₀·2^{-j}` on grid nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    /// Target for the largest abscissa; rounded to `2^{levels-1}·m·h`.
    pub x0: f64,
    pub levels: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self { x0: 0.25, levels: 6 }
    }
}

impl TraceConfig {
    /// Node offsets `m_j` (multiples of `h`) from the origin, decreasing.
    fn node_offsets(&self, h: f64) -> Vec<usize> {
        let top = 1usize << (self.levels - 1);
        let m = ((self.x0 / h) / top as f64).round().max(1.0) as usize;
        (0..self.levels).map(|j| (top >> j) * m).collect()
    }
}

/// Richardson extrapolation to `x → 0` of values at `x_j = x₀ 2^{-j}`,
/// assuming an expansion in integer powers of `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Extrapolation {
    pub value: Complex64,
    /// Finest estimate at each elimination order.
    pub levels: Vec<Complex64>,
    /// Level-to-level changes decreased (or fell below the noise floor).
    pub stable: bool,
}

pub fn richardson_to_zero(seq: &[Complex64]) -> Extrapolation {
    let n = seq.len();
    let mut prev = seq.to_vec();
    let mut diag = vec![seq[n - 1]];
    for m in 1..n {
        let factor = (1u64 << m) as f64 - 1.0;
        let next: Vec<Complex64> = (1..prev.len())
            .map(|j| prev[j] + (prev[j] - prev[j - 1]) / factor)
            .collect();
        // finest entry of each column is the best estimate at that order
        diag.push(next[next.len() - 1]);
        prev = next;
    }
    let scale = seq.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = 1e-9 * scale.max(1e-300);
    let changes: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let stable = changes
        .windows(2)
        .all(|c| c[1] <= c[0] || c[1] <= floor);
    Extrapolation {
        value: *diag.last().unwrap_or(&seq[0]),
        levels: diag,
        stable,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceValues {
    pub order_shift: u32,
    pub k: u32,
    pub value: Complex64,
}

/// Weighted boundary trace at `x = 0⁺` of `u = x^{a-M}·v`, `v` smooth.
///
/// `M = 1` uses the Γ-normalized `Γ(a+k)·∂^k v(0)`; `M = 0` returns the
/// unnormalized `∂^k v(0)` (for `k = 0` simply `lim u/x^a`).
pub fn weighted_trace(u: &HalfLineFunction, a: FractionalOrder, m: u32, k: u32) -> Result<TraceValues> {
    weighted_trace_with(u, a, m, k, &TraceConfig::default())
}

pub fn weighted_trace_with(
    u: &HalfLineFunction,
    a: FractionalOrder,
    m: u32,
    k: u32,
    cfg: &TraceConfig,
) -> Result<TraceValues> {
    if m > 1 || k > 1 {
        return Err(FracError::InvalidInput(format!("traces need M, k ∈ {{0, 1}}, got M={m}, k={k}")));
    }
    let shift = a.value() - m as f64;
    let v = boundary_quotients(u, shift, cfg)?;
    let seq: Vec<Complex64> = if k == 0 {
        v.iter().map(|p| p.1).collect()
    } else {
        // one-sided differences between consecutive abscissae x_j and x_j/2
        v.windows(2).map(|w| (w[0].1 - w[1].1) / (w[0].0 - w[1].0)).collect()
    };
    let ex = richardson_to_zero(&seq);
    if !ex.stable {
        return Err(FracError::NotConverged {
            what: "boundary trace extrapolation",
            best: ex.value.re,
            mismatch: ex.levels.windows(2).map(|w| (w[1] - w[0]).norm()).last().unwrap_or(0.0),
        });
    }
    let norm = if m == 1 { gamma_fn(a.value() + k as f64)? } else { 1.0 };
    Ok(TraceValues {
        order_shift: m,
        k,
        value: ex.value * norm,
    })
}

/// `(x_j, u(x_j)/x_j^shift)` at the trace abscissae, coarsest first.
fn boundary_quotients(u: &HalfLineFunction, shift: f64, cfg: &TraceConfig) -> Result<Vec<(f64, Complex64)>> {
    let grid = u.grid();
    let j0 = u.origin();
    let offsets = cfg.node_offsets(grid.h);
    offsets
        .iter()
        .map(|&off| {
            let j = j0 + off;
            if j >= grid.n {
                return Err(FracError::InvalidGrid("trace abscissae exceed the grid".into()));
            }
            let x = grid.x(j);
            Ok((x, u.sample().values()[j] / x.powf(shift)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionDecomposition {
    pub w: HalfLineFunction,
    pub phi: f64,
    pub a: FractionalOrder,
    /// Power-law fit of `u` at the origin.
    pub boundary_fit: PowerFit,
    /// Exponent of the regular part at the origin; `∞` if `w` vanishes
    /// there, `None` if `w` is not a clean power law.
    pub regular_exponent: Option<f64>,
    /// `max |u - w - x₊^a φ e^{-x}| / max |u|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionConfig {
    pub trace: TraceConfig,
    /// Largest admissible relative misfit of the boundary power law.
    pub fit_tol: f64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            trace: TraceConfig::default(),
            fit_tol: 0.05,
        }
    }
}

pub fn decompose_transmission(u: &HalfLineFunction, a: FractionalOrder) -> Result<TransmissionDecomposition> {
    decompose_transmission_with(u, a, &DecompositionConfig::default())
}

pub fn decompose_transmission_with(
    u: &HalfLineFunction,
    a: FractionalOrder,
    cfg: &DecompositionConfig,
) -> Result<TransmissionDecomposition> {
    if u.support_side() != SupportSide::Plus {
        return Err(FracError::InvalidInput("decomposition needs support in x ≥ 0".into()));
    }
    let grid = *u.grid();
    let offsets = cfg.trace.node_offsets(grid.h);
    let lo = offsets[offsets.len() - 1] as f64 * grid.h;
    let hi = offsets[0] as f64 * grid.h;
    let window = (lo * (1.0 - 1e-9), hi * (1.0 + 1e-9));
    let boundary_fit = fit_power_law_one_sided(u.sample(), 0.0, 1.0, window)?;
    if boundary_fit.residual > cfg.fit_tol {
        return Err(FracError::FitFailed(format!(
            "no power law at the boundary: relative misfit {:.3e}",
            boundary_fit.residual
        )));
    }
    let av = a.value();
    let phi = if boundary_fit.exponent >= av + 0.1 {
        0.0
    } else {
        let q = boundary_quotients(u, av, &cfg.trace)?;
        let ex = richardson_to_zero(&q.iter().map(|p| p.1).collect::<Vec<_>>());
        if !ex.stable {
            return Err(FracError::NotConverged {
                what: "transmission coefficient",
                best: ex.value.re,
                mismatch: ex.levels.windows(2).map(|w| (w[1] - w[0]).norm()).last().unwrap_or(0.0),
            });
        }
        ex.value.re
    };
    let singular = |x: f64| if x > 0.0 { phi * x.powf(av) * (-x).exp() } else { 0.0 };
    let w_vals: Vec<Complex64> = grid
        .points()
        .zip(u.sample().values())
        .map(|(x, v)| v - singular(x))
        .collect();
    let w = HalfLineFunction::new(SampledFunction::new(grid, w_vals)?, SupportSide::Plus, u.leak_tol())?;
    let u_scale = u.sample().max_abs();
    let residual = grid
        .points()
        .zip(u.sample().values().iter().zip(w.sample().values()))
        .map(|(x, (uv, wv))| (uv - wv - singular(x)).norm())
        .fold(0.0, f64::max)
        / u_scale.max(1e-300);
    let w_window = w.max_abs_on(window.0, window.1);
    let u_window = u.max_abs_on(window.0, window.1);
    let regular_exponent = if w_window <= 1e-10 * u_window {
        Some(f64::INFINITY)
    } else {
        fit_power_law_one_sided(w.sample(), 0.0, 1.0, window).ok().map(|f| f.exponent)
    };
    Ok(TransmissionDecomposition {
        w,
        phi,
        a,
        boundary_fit,
        regular_exponent,
        residual,
    })
}

/// Power-law fit `|û(ξ)| ≈ A ξ^p` of the DFT modulus over the frequency
/// band `band`; `p` measures smoothness (more negative is smoother).
pub fn spectral_decay(u: &SampledFunction, band: (f64, f64)) -> Result<PowerFit> {
    let spec = dft_forward(u)?;
    let points: Vec<(f64, f64)> = spec
        .frequencies
        .iter()
        .zip(&spec.coefficients)
        .filter(|(xi, _)| **xi > 0.0)
        .map(|(xi, c)| (*xi, c.norm()))
        .collect();
    fit_power_law_points(&points, band)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    fn exp_jump(grid: UniformGrid1D) -> HalfLineFunction {
        HalfLineFunction::plus_from_fn(grid, |x| (-x).exp()).unwrap()
    }

    fn rel_diff_on(u: &SampledFunction, v: &SampledFunction, lo: f64, hi: f64) -> f64 {
        let g = u.grid();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (j, x) in g.points().enumerate() {
            if x >= lo && x <= hi {
                err = err.max((u.values()[j] - v.values()[j]).norm());
                scale = scale.max(v.values()[j].norm());
            }
        }
        err / scale
    }

    #[test]
    fn zero_order_is_identity() {
        let g = half_line_grid(30.0, 0.01).unwrap();
        let f = exp_jump(g);
        for side in [Side::Plus, Side::Minus] {
            let r = xi_apply(side, 0.0, f.sample()).unwrap();
            assert_eq!(&r.output, f.sample());
        }
        let r = xi_minus_truncated(0.0, &f).unwrap();
        assert_eq!(r.sample(), f.sample());
    }

    #[test]
    fn group_law_and_support() {
        let g = half_line_grid(30.0, 0.01).unwrap();
        let f = exp_jump(g);
        for a in [0.25, 0.5, 0.75] {
            for t in [a, -a, a + 1.0, -(a + 1.0)] {
                let fwd = xi_apply(Side::Plus, t, f.sample()).unwrap();
                assert!(fwd.leakage <= 1e-6 * f.sample().max_abs(), "t={t}: {:e}", fwd.leakage);
                let back = xi_apply(Side::Plus, -t, &fwd.output).unwrap();
                assert!(rel_diff_on(&back.output, f.sample(), 2.0 * g.h, 30.0) < 1e-8);
            }
        }
    }

    #[test]
    fn edge_decay_is_enforced() {
        let g = half_line_grid(5.0, 0.01).unwrap();
        let f = exp_jump(g);
        assert!(matches!(
            xi_apply(Side::Plus, 0.5, f.sample()),
            Err(FracError::InsufficientDecay { .. })
        ));
        assert!(xi_apply(Side::Plus, 2.5, f.sample()).is_err());
    }

    #[test]
    fn spectral_scheme_leaks() {
        let g = half_line_grid(30.0, 0.01).unwrap();
        let f = exp_jump(g);
        let r = xi_apply_with(Side::Plus, 0.5, f.sample(), ReducerScheme::Spectral).unwrap();
        assert!(r.leakage > 1e-4, "{:e}", r.leakage);
    }

    #[test]
    fn delta_kernel_pair_converges() {
        // Ξ₊^{-(a+1)} δ = x₊^a e^{-x} / Γ(a+1)
        let a = 0.5;
        let gamma = gamma_fn(a + 1.0).unwrap();
        let mut errs = Vec::new();
        for h in [0.02, 0.01, 0.005] {
            let g = half_line_grid(30.0, h).unwrap();
            let j0 = zero_index(&g).unwrap();
            let mut v = vec![Complex64::new(0.0, 0.0); g.n];
            v[j0] = Complex64::new(1.0 / h, 0.0);
            let delta = SampledFunction::new(g, v).unwrap();
            let out = xi_apply(Side::Plus, -(a + 1.0), &delta).unwrap().output;
            let exact = SampledFunction::from_fn(g, |x| if x > 0.0 { x.powf(a) * (-x).exp() / gamma } else { 0.0 })
                .unwrap();
            errs.push(rel_diff_on(&out, &exact, 0.2, 3.0));
        }
        assert!(errs[1] < errs[0] && errs[2] < errs[1], "{errs:?}");
        assert!(errs[2] < 1e-2, "{errs:?}");
    }

    #[test]
    fn truncated_minus_round_trip() {
        let g = half_line_grid(30.0, 0.01).unwrap();
        let f = exp_jump(g);
        let a = 0.5;
        let there = xi_minus_truncated(a, &f).unwrap();
        let back = xi_minus_truncated(-a, &there).unwrap();
        assert!(rel_diff_on(back.sample(), f.sample(), 2.0 * g.h, 30.0) < 1e-6);
    }

    #[test]
    fn negative_order_smooths_by_a() {
        let g = half_line_grid(40.0, 0.005).unwrap();
        let f = exp_jump(g);
        let band = (5.0, 50.0);
        let p0 = spectral_decay(f.sample(), band).unwrap().exponent;
        let smoothed = xi_apply(Side::Minus, -0.5, f.sample()).unwrap().output;
        let p1 = spectral_decay(&smoothed, band).unwrap().exponent;
        assert!((p0 + 1.0).abs() < 0.05, "{p0}");
        assert!((p0 - p1 - 0.5).abs() < 0.05, "{p0} {p1}");
    }

    #[test]
    fn model_solver_round_trip() {
        let a = order(0.5);
        let g = half_line_grid(30.0, 0.005).unwrap();
        let exact = HalfLineFunction::plus_from_fn(g, |x| x.sqrt() * (-x).exp()).unwrap();
        let f = apply_bessel_restricted(a, &exact).unwrap();
        let sol = solve_model_dirichlet(a, &f).unwrap();
        assert!(rel_diff_on(sol.u.sample(), exact.sample(), 0.1, 3.0) < 1e-4);
        assert!(sol.residual < 1e-3);
    }

    #[test]
    fn model_solver_zero_data() {
        let g = half_line_grid(30.0, 0.01).unwrap();
        let f = HalfLineFunction::plus_from_fn(g, |_| 0.0).unwrap();
        let sol = solve_model_dirichlet(order(0.3), &f).unwrap();
        assert_eq!(sol.u.sample().max_abs(), 0.0);
    }

    #[test]
    fn model_solution_has_transmission_structure() {
        // for f = e^{-x} on x > 0 the exact solution is 2^{-a} x₊^a e^{-x} / Γ(1+a):
        // the regular part vanishes and only discretization error remains in w
        let a = order(0.5);
        let phi_exact = 2f64.powf(-0.5) / gamma_fn(1.5).unwrap();
        let mut w_err = Vec::new();
        for h in [1e-3, 2e-4] {
            let g = half_line_grid(30.0, h).unwrap();
            let sol = solve_model_dirichlet(a, &exp_jump(g)).unwrap();
            assert!(sol.residual < 1e-4, "{:e}", sol.residual);
            assert!(sol.leakage < 1e-12);
            let dec = decompose_transmission(&sol.u, a).unwrap();
            assert!(dec.residual < 1e-3);
            assert!(dec.regular_exponent.unwrap() > 0.5, "{:?}", dec.regular_exponent);
            w_err.push(dec.w.max_abs_on(0.1, 3.0) / sol.u.sample().max_abs());
            if h == 2e-4 {
                assert!((dec.boundary_fit.exponent - 0.5).abs() < 0.02, "{:?}", dec.boundary_fit);
                assert!((dec.phi - phi_exact).abs() < 0.02 * phi_exact, "{}", dec.phi);
            }
        }
        assert!(w_err[1] < w_err[0] / 3.0, "{w_err:?}");
    }

    #[test]
    fn decomposition_of_planted_functions() {
        let a = order(0.5);
        let g = half_line_grid(10.0, 1e-3).unwrap();
        let u = HalfLineFunction::plus_from_fn(g, |x| x.sqrt() * (-x).exp()).unwrap();
        let dec = decompose_transmission(&u, a).unwrap();
        assert!((dec.phi - 1.0).abs() < 1e-6, "{}", dec.phi);
        assert!(dec.regular_exponent.unwrap() >= 1.0);

        let u = HalfLineFunction::plus_from_fn(g, |x| x.powf(1.2)).unwrap();
        let dec = decompose_transmission(&u, a).unwrap();
        assert_eq!(dec.phi, 0.0);

        let u = HalfLineFunction::plus_from_fn(g, |x| (x - 0.02).signum() * x.sqrt()).unwrap();
        assert!(decompose_transmission(&u, a).is_err());
    }

    #[test]
    fn traces_of_planted_functions() {
        let a = order(0.5);
        let g = half_line_grid(10.0, 1e-3).unwrap();
        let u = HalfLineFunction::plus_from_fn(g, |x| x.powf(-0.5) * (-x).exp()).unwrap();
        let t0 = weighted_trace(&u, a, 1, 0).unwrap();
        assert!((t0.value.re - 1.772_453_850_905_516).abs() < 1e-6, "{}", t0.value);
        let t1 = weighted_trace(&u, a, 1, 1).unwrap();
        assert!((t1.value.re + 0.886_226_925_452_758).abs() < 1e-5, "{}", t1.value);
        let u = HalfLineFunction::plus_from_fn(g, |x| x.sqrt() * (2.0 + x)).unwrap();
        let t = weighted_trace(&u, a, 0, 0).unwrap();
        assert!((t.value.re - 2.0).abs() < 1e-10);
        assert!(weighted_trace(&u, a, 2, 0).is_err());
    }

    #[test]
    fn richardson_is_exact_on_polynomials() {
        let seq: Vec<Complex64> = (0..6)
            .map(|j| {
                let x = 0.5f64.powi(j);
                Complex64::new(3.0 - x + 2.0 * x * x - x.powi(4), 0.0)
            })
            .collect();
        let ex = richardson_to_zero(&seq);
        assert!((ex.value.re - 3.0).abs() < 1e-13);
        assert!(ex.stable);
    }
}
