use crate::numeric::quadrature::{jacobi_norm_sq, jacobi_p_upto};
use crate::numeric::FractionalOrder;

/// `ψ_k(x) = (1-x²)₊^a · p_k(x)`, where `p_k = P_k^{(a,a)}/‖P_k^{(a,a)}‖` is
/// the Jacobi polynomial normalized in `L²((1-x²)^a dx)`.
///
/// Every member lies in `d^a·C^∞([-1, 1])` and vanishes outside `[-1, 1]`;
/// `ψ_k` has the parity of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBasis {
    a: FractionalOrder,
    size: usize,
    inv_norms: Vec<f64>,
    /// `1/‖P_k^{(a+1,a+1)}‖`-independent scale of `p_k'`: `(k+2a+1)/2 / ‖P_k^{(a,a)}‖`.
    deriv_scale: Vec<f64>,
}

impl WeightedBasis {
    pub fn new(a: FractionalOrder, size: usize) -> Self {
        let av = a.value();
        let inv_norms: Vec<f64> = (0..size).map(|k| 1.0 / jacobi_norm_sq(k, av, av).sqrt()).collect();
        let deriv_scale = (0..size)
            .map(|k| 0.5 * (k as f64 + 2.0 * av + 1.0) * inv_norms[k])
            .collect();
        Self {
            a,
            size,
            inv_norms,
            deriv_scale,
        }
    }

    pub fn a(&self) -> FractionalOrder {
        self.a
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `out[k] = p_k(x)` (the polynomial factor only), any `x`.
    pub fn poly_values(&self, x: f64, out: &mut [f64]) {
        let av = self.a.value();
        jacobi_p_upto(av, av, x, &mut out[..self.size]);
        for (v, s) in out.iter_mut().zip(&self.inv_norms) {
            *v *= s;
        }
    }

    /// `out[k] = p_k'(x)`.
    pub fn poly_derivatives(&self, x: f64, out: &mut [f64]) {
        let av = self.a.value();
        out[0] = 0.0;
        if self.size > 1 {
            jacobi_p_upto(av + 1.0, av + 1.0, x, &mut out[1..self.size]);
            // shift: out[k] currently holds P_{k-1}^{(a+1,a+1)}
            for k in 1..self.size {
                out[k] *= self.deriv_scale[k];
            }
        }
    }

    /// `out[k] = ψ_k(x)`, zero outside `(-1, 1)`.
    pub fn values(&self, x: f64, out: &mut [f64]) {
        if x.abs() >= 1.0 {
            out[..self.size].fill(0.0);
            return;
        }
        self.poly_values(x, out);
        let w = ((1.0 - x) * (1.0 + x)).powf(self.a.value());
        for v in out[..self.size].iter_mut() {
            *v *= w;
        }
    }

    /// `out[k] = ψ_k'(x)` for `|x| < 1`.
    pub fn derivatives(&self, x: f64, out: &mut [f64]) {
        let av = self.a.value();
        let mut p = vec![0.0; self.size];
        self.poly_values(x, &mut p);
        self.poly_derivatives(x, out);
        let d = 1.0 - x * x;
        let wm1 = d.powf(av - 1.0);
        for k in 0..self.size {
            out[k] = wm1 * (-2.0 * av * x * p[k] + d * out[k]);
        }
    }

    /// `Σ c_k ψ_k(x)`.
    pub fn eval(&self, coeffs: &[f64], x: f64) -> f64 {
        if x.abs() >= 1.0 {
            return 0.0;
        }
        ((1.0 - x) * (1.0 + x)).powf(self.a.value()) * self.eval_smooth(coeffs, x)
    }

    /// `Σ c_k p_k(x)`, the smooth factor `u/(1-x²)^a`.
    pub fn eval_smooth(&self, coeffs: &[f64], x: f64) -> f64 {
        let mut p = vec![0.0; self.size];
        self.poly_values(x, &mut p);
        p.iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// `Σ c_k ψ_k'(x)` for `|x| < 1`.
    pub fn eval_derivative(&self, coeffs: &[f64], x: f64) -> f64 {
        let mut d = vec![0.0; self.size];
        self.derivatives(x, &mut d);
        d.iter().zip(coeffs).map(|(p, c)| p * c).sum()
    }

    /// Unnormalized weighted trace `lim u/d^a` at `x₀ = ±1`, `d = dist(x, ∂Ω)`.
    pub fn trace(&self, coeffs: &[f64], x0: f64) -> f64 {
        2f64.powf(self.a.value()) * self.eval_smooth(coeffs, x0.signum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::quadrature::gauss_jacobi;

    #[test]
    fn polynomials_are_orthonormal() {
        let a = FractionalOrder::new(0.3).unwrap();
        let b = WeightedBasis::new(a, 12);
        let rule = gauss_jacobi(20, 0.3, 0.3).unwrap();
        let mut g = [[0.0; 12]; 12];
        let mut p = vec![0.0; 12];
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            b.poly_values(x, &mut p);
            for i in 0..12 {
                for j in 0..12 {
                    g[i][j] += w * p[i] * p[j];
                }
            }
        }
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12, "{i},{j}: {v}");
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let a = FractionalOrder::new(0.65).unwrap();
        let b = WeightedBasis::new(a, 9);
        let (mut d, mut up, mut dn) = (vec![0.0; 9], vec![0.0; 9], vec![0.0; 9]);
        let h = 1e-6;
        for &x in &[-0.83, -0.2, 0.0, 0.41, 0.9] {
            b.derivatives(x, &mut d);
            b.values(x + h, &mut up);
            b.values(x - h, &mut dn);
            for k in 0..9 {
                let fd = (up[k] - dn[k]) / (2.0 * h);
                assert!((d[k] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "k={k} x={x}: {} vs {fd}", d[k]);
            }
        }
    }

    #[test]
    fn parity_and_support() {
        let a = FractionalOrder::new(0.5).unwrap();
        let b = WeightedBasis::new(a, 6);
        let (mut p, mut m) = (vec![0.0; 6], vec![0.0; 6]);
        b.values(0.37, &mut p);
        b.values(-0.37, &mut m);
        for k in 0..6 {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((p[k] - s * m[k]).abs() < 1e-14);
        }
        b.values(1.0, &mut p);
        assert!(p.iter().all(|&v| v == 0.0));
    }
}
