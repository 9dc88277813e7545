//! Gauss rules, Jacobi polynomials and adaptive Gauss–Kronrod integration.

use nalgebra::{DMatrix, SymmetricEigen};

use super::special::ln_gamma_unchecked;
use crate::error::{FracError, Result};

/// Nodes and weights of an interpolatory rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` against the rule's weight function on `[lo, hi]`
    /// (affine change of variables; the Jacobian is included).
    pub fn integrate(&self, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }
}

/// Gauss–Legendre rule with `n` points.
pub fn gauss_legendre(n: usize) -> GaussRule {
    gauss_jacobi(n, 0.0, 0.0).expect("Legendre parameters are admissible")
}

/// Value of the Jacobi polynomial `P_n^{(α,β)}(x)` (standard normalization).
pub fn jacobi_p(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    jacobi_pair(n, alpha, beta, x).0
}

/// `(P_n(x), P_{n-1}(x))`; `P_{-1} = 0`.
fn jacobi_pair(n: usize, alpha: f64, beta: f64, x: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = 1.0;
    if n == 0 {
        return (p, p_prev);
    }
    p_prev = p;
    p = 0.5 * ((alpha + beta + 2.0) * x + (alpha - beta));
    for k in 2..=n {
        let (a1, a2, a3, a4) = recurrence_coefficients(k, alpha, beta);
        let next = ((a2 + a3 * x) * p - a4 * p_prev) / a1;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

#[inline]
fn recurrence_coefficients(k: usize, alpha: f64, beta: f64) -> (f64, f64, f64, f64) {
    let k = k as f64;
    let s = 2.0 * k + alpha + beta;
    let a1 = 2.0 * k * (k + alpha + beta) * (s - 2.0);
    let a2 = (s - 1.0) * (alpha * alpha - beta * beta);
    let a3 = (s - 2.0) * (s - 1.0) * s;
    let a4 = 2.0 * (k + alpha - 1.0) * (k + beta - 1.0) * s;
    (a1, a2, a3, a4)
}

/// Fills `out[k] = P_k^{(α,β)}(x)` for `k < out.len()`.
pub fn jacobi_p_upto(alpha: f64, beta: f64, x: f64, out: &mut [f64]) {
    let len = out.len();
    if len == 0 {
        return;
    }
    out[0] = 1.0;
    if len == 1 {
        return;
    }
    out[1] = 0.5 * ((alpha + beta + 2.0) * x + (alpha - beta));
    for k in 2..len {
        let (a1, a2, a3, a4) = recurrence_coefficients(k, alpha, beta);
        out[k] = ((a2 + a3 * x) * out[k - 1] - a4 * out[k - 2]) / a1;
    }
}

/// Derivative `d/dx P_n^{(α,β)}(x)`.
pub fn jacobi_p_derivative(n: usize, alpha: f64, beta: f64, x: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        0.5 * (n as f64 + alpha + beta + 1.0) * jacobi_pair(n - 1, alpha + 1.0, beta + 1.0, x).0
    }
}

/// `∫_{-1}^{1} (1-x)^α (1+x)^β dx`.
pub fn jacobi_weight_mass(alpha: f64, beta: f64) -> f64 {
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 + ln_gamma_unchecked(alpha + 1.0)
        + ln_gamma_unchecked(beta + 1.0)
        - ln_gamma_unchecked(alpha + beta + 2.0))
    .exp()
}

/// `∫_{-1}^{1} (1-x)^α (1+x)^β P_n^{(α,β)}(x)^2 dx`.
pub fn jacobi_norm_sq(n: usize, alpha: f64, beta: f64) -> f64 {
    if n == 0 {
        return jacobi_weight_mass(alpha, beta);
    }
    let nf = n as f64;
    ((alpha + beta + 1.0) * std::f64::consts::LN_2 - (2.0 * nf + alpha + beta + 1.0).ln()
        + ln_gamma_unchecked(nf + alpha + 1.0)
        + ln_gamma_unchecked(nf + beta + 1.0)
        - ln_gamma_unchecked(nf + alpha + beta + 1.0)
        - ln_gamma_unchecked(nf + 1.0))
    .exp()
}

/// Gauss–Jacobi rule for the weight `(1-x)^α (1+x)^β` on `[-1, 1]`.
///
/// Nodes come from the Golub–Welsch eigenproblem and are polished by Newton
/// iteration on `P_n^{(α,β)}`; weights use the closed-form expression in
/// terms of `P_n'` at the nodes.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if n == 0 {
        return Err(FracError::InvalidInput("Gauss rule needs n ≥ 1".into()));
    }
    if !(alpha > -1.0 && beta > -1.0) {
        return Err(FracError::InvalidInput(format!(
            "Jacobi parameters must exceed -1, got ({alpha}, {beta})"
        )));
    }
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + alpha + beta;
        jac[(k, k)] = if k == 0 {
            (beta - alpha) / (alpha + beta + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + alpha + beta;
            let off_sq = if k == 0 {
                4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + alpha + beta).powi(2) * (3.0 + alpha + beta))
            } else {
                4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + alpha + beta)
                    / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0))
            };
            let off = off_sq.sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    let nf = n as f64;
    let log_const = (alpha + beta + 1.0) * std::f64::consts::LN_2
        + ln_gamma_unchecked(nf + alpha + 1.0)
        + ln_gamma_unchecked(nf + beta + 1.0)
        - ln_gamma_unchecked(nf + alpha + beta + 1.0)
        - ln_gamma_unchecked(nf + 1.0);
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..4 {
            let p = jacobi_p(n, alpha, beta, *x);
            let dp = jacobi_p_derivative(n, alpha, beta, *x);
            let step = p / dp;
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let dp = jacobi_p_derivative(n, alpha, beta, *x);
        weights.push((log_const - (1.0 - *x * *x).ln() - 2.0 * dp.abs().ln()).exp());
    }
    Ok(GaussRule { nodes, weights })
}

// Kronrod 15 / Gauss 7 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let fc = f(mid);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) integration of `f` over `[lo, hi]`.
///
/// Bisects until the Kronrod–Gauss difference on every interval is below
/// `abs_tol + rel_tol·|I|` (scaled by the interval's share of the domain).
/// Returns the integral and the accumulated error estimate.
pub fn integrate_adaptive(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<(f64, f64)> {
    if lo == hi {
        return Ok((0.0, 0.0));
    }
    let (i0, e0) = gk15(&f, lo, hi);
    let mut intervals = vec![(lo, hi, i0, e0)];
    let mut total = i0;
    let mut err = e0;
    for _ in 0..2000 {
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .3.total_cmp(&b.1 .3))
            .map(|(i, _)| i)
            .expect("non-empty");
        let (a, b, iv, ev) = intervals.swap_remove(worst);
        let m = 0.5 * (a + b);
        let (il, el) = gk15(&f, a, m);
        let (ir, er) = gk15(&f, m, b);
        total += il + ir - iv;
        err += el + er - ev;
        intervals.push((a, m, il, el));
        intervals.push((m, b, ir, er));
    }
    if !total.is_finite() {
        return Err(FracError::NonFinite("adaptive integral"));
    }
    // Re-sum to shed the drift of incremental updates.
    let total: f64 = intervals.iter().map(|t| t.2).sum();
    let err: f64 = intervals.iter().map(|t| t.3).sum();
    if err > 10.0 * abs_tol.max(rel_tol * total.abs()) {
        return Err(FracError::NotConverged {
            what: "adaptive quadrature",
            best: total,
            mismatch: err,
        });
    }
    Ok((total, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(10);
        for k in 0..20 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let got = rule.integrate(-1.0, 1.0, |x| x.powi(k));
            assert!((got - exact).abs() < 1e-14, "x^{k}: {got} vs {exact}");
        }
    }

    #[test]
    fn jacobi_rule_reproduces_weighted_moments() {
        for &(al, be) in &[(0.25, 0.25), (0.5, 0.5), (-0.5, -0.5), (0.9, -0.3), (1.5, 1.5)] {
            let rule = gauss_jacobi(12, al, be).unwrap();
            let mass: f64 = rule.weights.iter().sum();
            assert!((mass - jacobi_weight_mass(al, be)).abs() < 1e-13 * mass);
            // orthogonality of P_3 and P_5 and the norm of P_4
            let ip = rule.integrate(-1.0, 1.0, |x| jacobi_p(3, al, be, x) * jacobi_p(5, al, be, x));
            assert!(ip.abs() < 1e-12);
            let n4 = rule.integrate(-1.0, 1.0, |x| jacobi_p(4, al, be, x).powi(2));
            assert!((n4 - jacobi_norm_sq(4, al, be)).abs() < 1e-12 * n4);
        }
    }

    #[test]
    fn chebyshev_nodes_are_recovered() {
        let n = 9;
        let rule = gauss_jacobi(n, -0.5, -0.5).unwrap();
        for (i, &x) in rule.nodes.iter().enumerate() {
            let expect = -((2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            assert!((x - expect).abs() < 1e-14);
        }
        for &w in &rule.weights {
            assert!((w - std::f64::consts::PI / n as f64).abs() < 1e-13);
        }
    }

    #[test]
    fn high_degree_rule_is_accurate() {
        let (al, be) = (0.3, 0.3);
        let rule = gauss_jacobi(220, al, be).unwrap();
        // ∫(1-x^2)^0.3 x^100 dx = B(101/2, 1.3)
        let exact = (crate::numeric::ln_gamma(50.5).unwrap() + crate::numeric::ln_gamma(1.3).unwrap()
            - crate::numeric::ln_gamma(51.8).unwrap())
        .exp();
        let got = rule.integrate(-1.0, 1.0, |x| x.powi(100));
        assert!((got - exact).abs() < 1e-12 * exact, "{got} vs {exact}");
    }

    #[test]
    fn upto_matches_single_evaluation() {
        let mut buf = vec![0.0; 30];
        jacobi_p_upto(0.7, 0.7, 0.31, &mut buf);
        for (k, &v) in buf.iter().enumerate() {
            assert!((v - jacobi_p(k, 0.7, 0.7, 0.31)).abs() < 1e-12 * v.abs().max(1.0));
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for n in [1usize, 4, 9] {
            let x = 0.37;
            let fd = (jacobi_p(n, 0.25, 0.25, x + h) - jacobi_p(n, 0.25, 0.25, x - h)) / (2.0 * h);
            assert!((fd - jacobi_p_derivative(n, 0.25, 0.25, x)).abs() < 1e-6);
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let (v, _) = integrate_adaptive(|x| x.powf(-0.5), 0.0, 1.0, 1e-10, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
        let (v, _) = integrate_adaptive(|x| (-x).exp(), 0.0, 3.0, 1e-14, 1e-14).unwrap();
        assert!((v - (1.0 - (-3.0f64).exp())).abs() < 1e-13);
    }
}
