use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::assembly::{assemble, DirichletSystem};
use super::basis::WeightedBasis;
use crate::error::{FracError, Result};

/// Eigenpair of the restricted Dirichlet realization, in the weighted basis.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    /// Unit mass-norm coefficients, sign fixed by a positive smooth factor at `x = 1`.
    pub coefficients: Vec<f64>,
    /// `‖A c − λ M c‖ / (λ‖c‖)`.
    pub residual: f64,
    /// Relative change of `λ` under `N → N + 20` (0 when not checked).
    pub refinement_change: f64,
}

impl EigenPair {
    pub fn eval(&self, basis: &WeightedBasis, x: f64) -> f64 {
        basis.eval(&self.coefficients, x)
    }

    /// `+1` for even, `-1` for odd, `0` if the coefficients mix parities.
    pub fn parity(&self) -> i32 {
        let norm: f64 = self.coefficients.iter().map(|c| c * c).sum();
        let odd: f64 = self.coefficients.iter().skip(1).step_by(2).map(|c| c * c).sum();
        let even = norm - odd;
        if odd <= 1e-16 * norm {
            1
        } else if even <= 1e-16 * norm {
            -1
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub basis: WeightedBasis,
    /// Converged pairs, ascending.
    pub pairs: Vec<EigenPair>,
    /// Pairs whose eigenvalue moved by more than the tolerance under refinement.
    pub flagged: Vec<EigenPair>,
}

pub const REFINEMENT_TOL: f64 = 1e-4;

/// Lowest Ritz pairs of `(A, M)` without a refinement check.
pub fn ritz_pairs(sys: &DirichletSystem, count: usize) -> Result<Vec<EigenPair>> {
    let n = sys.size();
    if count == 0 || count > n {
        return Err(FracError::InvalidInput(format!("requested {count} eigenpairs from a size-{n} basis")));
    }
    let l = sys
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| FracError::Singular("mass matrix is not positive definite".into()))?
        .l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| FracError::Singular("mass factor is singular".into()))?;
    let c = &l_inv * &sys.stiffness * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let mut pairs = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let lambda = eig.eigenvalues[i];
        if lambda <= 0.0 {
            return Err(FracError::Singular(format!("non-positive Ritz value {lambda:e}")));
        }
        let y = eig.eigenvectors.column(i).into_owned();
        let mut v: DVector<f64> = l_inv.transpose() * y;
        let mnorm = (v.transpose() * &sys.mass * &v)[(0, 0)].sqrt();
        v /= mnorm;
        if sys.basis.eval_smooth(v.as_slice(), 1.0) < 0.0 {
            v = -v;
        }
        let residual = generalized_residual(&sys.stiffness, &sys.mass, lambda, &v);
        pairs.push(EigenPair {
            lambda,
            coefficients: v.iter().copied().collect(),
            residual,
            refinement_change: 0.0,
        });
    }
    Ok(pairs)
}

fn generalized_residual(a: &DMatrix<f64>, m: &DMatrix<f64>, lambda: f64, v: &DVector<f64>) -> f64 {
    (a * v - m * v * lambda).norm() / (lambda * v.norm())
}

/// Lowest `count ≤ N/2` eigenpairs; each is compared against a system
/// reassembled with `N + 20` basis functions and flagged if its eigenvalue
/// moves by more than [`REFINEMENT_TOL`] (relative).
pub fn eigen_solve(sys: &DirichletSystem, count: usize) -> Result<EigenReport> {
    let n = sys.size();
    if count == 0 || 2 * count > n {
        return Err(FracError::InvalidInput(format!(
            "eigen_solve needs 1 ≤ count ≤ N/2, got count {count} with N = {n}"
        )));
    }
    let coarse = ritz_pairs(sys, count)?;
    let fine_sys = assemble(sys.a(), n + 20, &sys.config)?;
    let fine = ritz_pairs(&fine_sys, count)?;
    let mut pairs = Vec::new();
    let mut flagged = Vec::new();
    for (mut p, f) in coarse.into_iter().zip(fine) {
        p.refinement_change = (p.lambda - f.lambda).abs() / f.lambda;
        if p.refinement_change <= REFINEMENT_TOL {
            pairs.push(p);
        } else {
            flagged.push(p);
        }
    }
    Ok(EigenReport {
        basis: sys.basis.clone(),
        pairs,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::AssemblyConfig;
    use crate::numeric::FractionalOrder;

    #[test]
    fn first_eigenvalue_at_one_half() {
        let a = FractionalOrder::new(0.5).unwrap();
        let sys = assemble(a, 24, &AssemblyConfig::default()).unwrap();
        let pairs = ritz_pairs(&sys, 4).unwrap();
        assert!((pairs[0].lambda - 1.1577738).abs() < 1e-5, "{}", pairs[0].lambda);
        for (k, p) in pairs.iter().enumerate() {
            assert!(p.lambda > 0.0);
            assert!(p.residual < 1e-8, "{:e}", p.residual);
            assert_eq!(p.parity(), if k % 2 == 0 { 1 } else { -1 });
        }
        assert!(pairs.windows(2).all(|w| w[0].lambda < w[1].lambda));
    }

    #[test]
    fn mass_normalized() {
        let a = FractionalOrder::new(0.3).unwrap();
        let sys = assemble(a, 10, &AssemblyConfig::default()).unwrap();
        let p = &ritz_pairs(&sys, 1).unwrap()[0];
        let v = DVector::from_column_slice(&p.coefficients);
        let m = (v.transpose() * &sys.mass * &v)[(0, 0)];
        assert!((m - 1.0).abs() < 1e-12);
        assert!(sys.basis.eval_smooth(&p.coefficients, 1.0) > 0.0);
    }

    #[test]
    fn count_is_bounded() {
        let a = FractionalOrder::new(0.5).unwrap();
        let sys = assemble(a, 6, &AssemblyConfig::default()).unwrap();
        assert!(eigen_solve(&sys, 4).is_err());
        assert!(eigen_solve(&sys, 0).is_err());
    }
}
