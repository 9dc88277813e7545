use nalgebra::DVector;

use super::assembly::DirichletSystem;
use super::solve::StationarySolution;
use crate::error::{FracError, Result};
use crate::numeric::quadrature::gauss_jacobi;

/// One pair `(u, u′)` of the integration-by-parts check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpEntry {
    /// `∫ ((-Δ)^a u · u′' + u' · (-Δ)^a u′) dx` over `(-1, 1)`.
    pub lhs: f64,
    /// `Σ_{x₀=±1} ν(x₀) γ₀^a u(x₀) γ₀^a u′(x₀)` with outward `ν(±1) = ±1`.
    pub rhs: f64,
    /// `lhs/rhs`, absent when the boundary term vanishes.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbpReport {
    pub entries: Vec<IbpEntry>,
    pub mean_ratio: f64,
    /// `(max − min)/|mean|` over the ratios.
    pub spread: f64,
}

/// Boundary terms below this fraction of `|γ u|·|γ u′|` count as zero.
const ZERO_BOUNDARY_TOL: f64 = 1e-9;

/// Evaluates both sides of the integration-by-parts identity for each pair
/// and reports how constant their ratio is.
pub fn ibp_identity_check(
    sys: &DirichletSystem,
    pairs: &[(&StationarySolution, &StationarySolution)],
) -> Result<IbpReport> {
    let n = sys.size();
    let av = sys.a().value();
    // u' · Pu' has weight (1-x²)^{a-1} times a polynomial
    let rule = gauss_jacobi(2 * n + 16, av - 1.0, av - 1.0)?;
    let p_at = sys.operator_matrix(&rule.nodes);
    let basis = &sys.basis;
    // smooth part of ψ_k' : (1-x²)^{1-a} ψ_k'(x) = -2a x p_k + (1-x²) p_k'
    let mut dpsi = nalgebra::DMatrix::zeros(rule.len(), n);
    let (mut p, mut dp) = (vec![0.0; n], vec![0.0; n]);
    for (q, &x) in rule.nodes.iter().enumerate() {
        basis.poly_values(x, &mut p);
        basis.poly_derivatives(x, &mut dp);
        for k in 0..n {
            dpsi[(q, k)] = -2.0 * av * x * p[k] + (1.0 - x * x) * dp[k];
        }
    }
    let w = DVector::from_column_slice(&rule.weights);

    let mut entries = Vec::with_capacity(pairs.len());
    for (u, v) in pairs {
        check_basis(sys, u)?;
        check_basis(sys, v)?;
        let cu = DVector::from_column_slice(&u.coeffs);
        let cv = DVector::from_column_slice(&v.coeffs);
        let pu = &p_at * &cu;
        let pv = &p_at * &cv;
        let du = &dpsi * &cu;
        let dv = &dpsi * &cv;
        let lhs = w.dot(&(pu.component_mul(&dv) + du.component_mul(&pv)));
        let (tu_p, tu_m) = (basis.trace(&u.coeffs, 1.0), basis.trace(&u.coeffs, -1.0));
        let (tv_p, tv_m) = (basis.trace(&v.coeffs, 1.0), basis.trace(&v.coeffs, -1.0));
        let rhs = tu_p * tv_p - tu_m * tv_m;
        let scale = tu_p.abs().max(tu_m.abs()) * tv_p.abs().max(tv_m.abs());
        let ratio = (rhs.abs() > ZERO_BOUNDARY_TOL * scale && scale > 0.0).then(|| lhs / rhs);
        entries.push(IbpEntry { lhs, rhs, ratio });
    }
    let ratios: Vec<f64> = entries.iter().filter_map(|e| e.ratio).collect();
    if ratios.is_empty() {
        return Err(FracError::InvalidInput(
            "every pair has a vanishing boundary term; ratio constancy cannot be tested".into(),
        ));
    }
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(IbpReport {
        entries,
        mean_ratio,
        spread: (max - min) / mean_ratio.abs(),
    })
}

fn check_basis(sys: &DirichletSystem, u: &StationarySolution) -> Result<()> {
    if u.basis != sys.basis {
        return Err(FracError::InvalidInput("solution was computed in a different basis".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensReport {
    /// `∫ (Pu·v − u·Pv) dx`.
    pub defect: f64,
    /// `defect / (‖u‖ ‖v‖)`, `L²` norms.
    pub relative_defect: f64,
    /// Largest `|u/d^{a-1}|` of `u` and `v` at `d = 1e-10` from either endpoint.
    pub dirichlet_trace: f64,
}

/// Tolerance on the order-`(a−1)` Dirichlet traces, relative to the largest
/// boundary value of `u/d^a`.
const DIRICHLET_TRACE_TOL: f64 = 1e-6;

/// Reduced Green's formula for functions with vanishing Dirichlet traces:
/// `∫ (Pu·v − u·Pv) dx` must vanish. `u`, `v` are coefficient vectors in the
/// system's basis.
pub fn greens_reduced_check(sys: &DirichletSystem, u: &[f64], v: &[f64]) -> Result<GreensReport> {
    let n = sys.size();
    if u.len() != n || v.len() != n {
        return Err(FracError::LengthMismatch {
            expected: n,
            got: if u.len() != n { u.len() } else { v.len() },
        });
    }
    let av = sys.a().value();
    let basis = &sys.basis;
    let d = 1e-10f64;
    let mut trace: f64 = 0.0;
    let mut trace_scale: f64 = 0.0;
    for c in [u, v] {
        for x0 in [1.0, -1.0] {
            let x = x0 * (1.0 - d);
            trace = trace.max((basis.eval(c, x) / d.powf(av - 1.0)).abs());
            trace_scale = trace_scale.max(basis.trace(c, x0).abs());
        }
    }
    if trace > DIRICHLET_TRACE_TOL * trace_scale.max(f64::MIN_POSITIVE) && trace > 0.0 {
        return Err(FracError::InvalidInput(format!(
            "Dirichlet traces are not zero ({trace:e})"
        )));
    }

    let cu = DVector::from_column_slice(u);
    let cv = DVector::from_column_slice(v);
    let pu = &sys.operator_at_nodes * &cu;
    let pv = &sys.operator_at_nodes * &cv;
    let mut p = vec![0.0; n];
    let mut defect = 0.0;
    for (q, (&x, &w)) in sys.nodes.nodes.iter().zip(&sys.nodes.weights).enumerate() {
        basis.poly_values(x, &mut p);
        let su: f64 = p.iter().zip(u).map(|(a, b)| a * b).sum();
        let sv: f64 = p.iter().zip(v).map(|(a, b)| a * b).sum();
        defect += w * (pu[q] * sv - su * pv[q]);
    }
    let norm_u = (cu.transpose() * &sys.mass * &cu)[(0, 0)].sqrt();
    let norm_v = (cv.transpose() * &sys.mass * &cv)[(0, 0)].sqrt();
    let denom = norm_u * norm_v;
    Ok(GreensReport {
        defect,
        relative_defect: if denom > 0.0 { defect.abs() / denom } else { 0.0 },
        dirichlet_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{assemble, solve_stationary_fn, AssemblyConfig};
    use crate::numeric::gamma_fn;
    use crate::numeric::FractionalOrder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ibp_ratio_is_constant() {
        let a = 0.5;
        let sys = assemble(FractionalOrder::new(a).unwrap(), 16, &AssemblyConfig::default()).unwrap();
        let solve = |f: fn(f64) -> f64| solve_stationary_fn(&sys, f).unwrap();
        let one = solve(|_| 1.0);
        let x = solve(|x| x);
        let one_x = solve(|x| 1.0 + x);
        let x3 = solve(|x| x * x * x);
        let mix = solve(|x| (0.5 * x).cos() + 0.3 * x);
        let pairs = [(&one, &x), (&one_x, &x), (&one, &x3), (&mix, &one), (&one_x, &mix), (&one, &one)];
        let r = ibp_identity_check(&sys, &pairs).unwrap();
        assert!(r.spread < 0.02, "{r:?}");
        let sym = r.entries[5];
        assert!(sym.ratio.is_none());
        assert!(sym.lhs.abs() < 1e-10, "{sym:?}");
        let expected = gamma_fn(1.0 + a).unwrap().powi(2);
        assert!((r.mean_ratio.abs() - expected).abs() < 0.05 * expected, "{} vs {expected}", r.mean_ratio);
    }

    #[test]
    fn ibp_rejects_all_symmetric() {
        let sys = assemble(FractionalOrder::new(0.4).unwrap(), 8, &AssemblyConfig::default()).unwrap();
        let one = solve_stationary_fn(&sys, |_| 1.0).unwrap();
        assert!(ibp_identity_check(&sys, &[(&one, &one)]).is_err());
    }

    #[test]
    fn greens_defect_vanishes() {
        let sys = assemble(FractionalOrder::new(0.6).unwrap(), 12, &AssemblyConfig::default()).unwrap();
        let e = |k: usize| (0..12).map(|j| if j == k { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let r = greens_reduced_check(&sys, &e(0), &e(1)).unwrap();
        assert!(r.relative_defect < 1e-6, "{r:?}");
        let same = greens_reduced_check(&sys, &e(3), &e(3)).unwrap();
        assert_eq!(same.defect, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let r = greens_reduced_check(&sys, &u, &v).unwrap();
            assert!(r.relative_defect < 1e-5, "{r:?}");
        }
    }
}
