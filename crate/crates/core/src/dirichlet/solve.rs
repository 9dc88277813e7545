use nalgebra::{DMatrix, DVector};

use super::assembly::DirichletSystem;
use super::basis::WeightedBasis;
use crate::error::{FracError, Result};
use crate::numeric::quadrature::gauss_jacobi;
use crate::numeric::{SampledFunction, UniformGrid1D};

/// Galerkin solution `u_N = Σ c_k ψ_k` of `r⁺(-Δ)^a u = f`, `supp u ⊂ [-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarySolution {
    pub basis: WeightedBasis,
    pub coeffs: Vec<f64>,
    /// `max |(-Δ)^a u_N - f| / max |f|` at the outer quadrature nodes, with
    /// `(-Δ)^a u_N` re-applied by dense PV quadrature.
    pub residual: f64,
}

impl StationarySolution {
    pub fn eval(&self, x: f64) -> f64 {
        self.basis.eval(&self.coeffs, x)
    }

    /// `u/(1-x²)^a`, continuous up to the boundary.
    pub fn smooth_factor(&self, x: f64) -> f64 {
        self.basis.eval_smooth(&self.coeffs, x)
    }

    pub fn sample(&self, grid: UniformGrid1D) -> Result<SampledFunction> {
        SampledFunction::from_fn(grid, |x| self.eval(x))
    }
}

/// Solves with `f` sampled on a grid covering `[-1, 1]` (cubic interpolation).
pub fn solve_stationary(sys: &DirichletSystem, f: &SampledFunction) -> Result<StationarySolution> {
    let g = f.grid();
    if g.x_min > -1.0 || g.x_max < 1.0 {
        return Err(FracError::InvalidGrid("forcing grid must cover [-1, 1]".into()));
    }
    solve_stationary_fn(sys, |x| f.interpolate(x).re)
}

pub fn solve_stationary_fn(sys: &DirichletSystem, f: impl Fn(f64) -> f64) -> Result<StationarySolution> {
    let n = sys.size();
    let av = sys.a().value();
    let rule = gauss_jacobi(2 * n + 16, av, av)?;
    let mut p = vec![0.0; n];
    let mut rhs = DVector::zeros(n);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(x);
        if !fx.is_finite() {
            return Err(FracError::NonFinite("forcing"));
        }
        sys.basis.poly_values(x, &mut p);
        for j in 0..n {
            rhs[j] += w * fx * p[j];
        }
    }
    let coeffs = solve_spd(&sys.stiffness, &rhs)?;
    let residual = residual_at_nodes(sys, &coeffs, &f);
    Ok(StationarySolution {
        basis: sys.basis.clone(),
        coeffs,
        residual,
    })
}

pub(crate) fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| FracError::Singular("stiffness matrix is not positive definite".into()))?;
    Ok(chol.solve(b).iter().copied().collect())
}

fn residual_at_nodes(sys: &DirichletSystem, coeffs: &[f64], f: &impl Fn(f64) -> f64) -> f64 {
    let c = DVector::from_column_slice(coeffs);
    let pu = &sys.operator_at_nodes * c;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (q, &x) in sys.nodes.nodes.iter().enumerate() {
        let fx = f(x);
        err = err.max((pu[q] - fx).abs());
        scale = scale.max(fx.abs());
    }
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{assemble, AssemblyConfig, KernelConstant};
    use crate::numeric::FractionalOrder;
    use crate::operators::PvQuadrature;
    use crate::symbols::KernelSpec;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn torsion_at_one_half() {
        let sys = assemble(order(0.5), 16, &AssemblyConfig::default()).unwrap();
        let u = solve_stationary_fn(&sys, |_| 1.0).unwrap();
        assert!((u.eval(0.0) - 1.0).abs() < 1e-3, "{}", u.eval(0.0));
        for &x in &[-0.95, -0.5, 0.3, 0.8] {
            assert!((u.eval(x) - (1.0 - x * x).sqrt()).abs() < 1e-3);
        }
        assert!(u.residual < 1e-6, "{:e}", u.residual);
    }

    #[test]
    fn sampled_forcing_is_accepted() {
        let sys = assemble(order(0.5), 12, &AssemblyConfig::default()).unwrap();
        let g = UniformGrid1D::new(-1.0, 1.0, 201).unwrap();
        let f = SampledFunction::from_fn(g, |_| 1.0).unwrap();
        let u = solve_stationary(&sys, &f).unwrap();
        assert!((u.eval(0.0) - 1.0).abs() < 1e-3);
        let short = UniformGrid1D::new(-0.5, 1.0, 201).unwrap();
        let f = SampledFunction::from_fn(short, |_| 1.0).unwrap();
        assert!(solve_stationary(&sys, &f).is_err());
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let sys = assemble(order(0.4), 8, &AssemblyConfig::default()).unwrap();
        let u = solve_stationary_fn(&sys, |_| 0.0).unwrap();
        assert!(u.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn torsion_shape_at_one_quarter() {
        let a = order(0.25);
        let sys = assemble(
            a,
            16,
            &AssemblyConfig {
                kernel: KernelConstant::ClosedForm,
                ..Default::default()
            },
        )
        .unwrap();
        let u = solve_stationary_fn(&sys, |_| 1.0).unwrap();
        let c0 = u.smooth_factor(0.0);
        for &x in &[-0.99, -0.6, 0.2, 0.97] {
            assert!((u.smooth_factor(x) - c0).abs() < 1e-2 * c0);
        }
        // brute-force oracle: (-Δ)^a (1-x²)₊^a at a few points fixes the constant
        let k = KernelSpec::closed_form(a);
        let q = PvQuadrature::default();
        let t = q.apply(&k, |y| (1.0 - y * y).max(0.0).powf(0.25), 0.3, &[-1.0, 1.0], (-1.0, 1.0));
        assert!((c0 - 1.0 / t).abs() < 1e-6, "{c0} vs {}", 1.0 / t);
    }
}
