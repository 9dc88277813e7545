use num_complex::Complex64;

use crate::error::{FracError, Result};

/// Half the order of the operator: `(-Δ)^a` has order `2a`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FractionalOrder(f64);

impl FractionalOrder {
    /// Accepts `0 < a < 1`.
    pub fn new(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 && a < 1.0 {
            Ok(Self(a))
        } else {
            Err(FracError::InvalidOrder(a))
        }
    }

    /// Accepts any finite `a > 0`, for the few operations that allow it.
    pub fn new_positive(a: f64) -> Result<Self> {
        if a.is_finite() && a > 0.0 {
            Ok(Self(a))
        } else {
            Err(FracError::InvalidOrder(a))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// The stable index `2a` of the associated Lévy process.
    #[inline]
    pub fn stable_index(self) -> f64 {
        2.0 * self.0
    }
}

impl TryFrom<f64> for FractionalOrder {
    type Error = FracError;

    fn try_from(a: f64) -> Result<Self> {
        Self::new(a)
    }
}

/// Uniform grid `x_j = x_min + j h`, `j = 0..n`.
///
/// A grid built with [`UniformGrid1D::periodic`] leaves out the right end of
/// the period, so that its `n` points tile one period of length `n h` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub h: f64,
}

impl UniformGrid1D {
    pub const MIN_POINTS: usize = 8;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(FracError::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < Self::MIN_POINTS {
            return Err(FracError::InvalidGrid(format!(
                "need at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            h: (x_max - x_min) / (n - 1) as f64,
        })
    }

    /// `n` points covering one period `[x_min, x_min + length)`.
    pub fn periodic(x_min: f64, length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(FracError::InvalidGrid(format!("bad period {length}")));
        }
        let h = length / n as f64;
        Self::new(x_min, x_min + length - h, n)
    }

    /// Grid with spacing `h` on `[x_min, x_max]`; the interval length must be
    /// an integer multiple of `h`.
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        let cells = (x_max - x_min) / h;
        let rounded = cells.round();
        if !(cells.is_finite() && (cells - rounded).abs() < 1e-9 * rounded.max(1.0)) {
            return Err(FracError::InvalidGrid(format!(
                "length {} is not a multiple of h = {h}",
                x_max - x_min
            )));
        }
        Self::new(x_min, x_max, rounded as usize + 1)
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Length of the periodic box the grid tiles under the DFT.
    pub fn period(&self) -> f64 {
        self.n as f64 * self.h
    }

    /// Index of the node closest to `x`, if `x` is within half a cell of the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let r = ((x - self.x_min) / self.h).round();
        if r < 0.0 || r > (self.n - 1) as f64 {
            None
        } else {
            Some(r as usize)
        }
    }

    /// Same spacing, `n_left` extra cells on the left and `n_right` on the right.
    pub fn extended(&self, n_left: usize, n_right: usize) -> Self {
        let x_min = self.x_min - n_left as f64 * self.h;
        let n = self.n + n_left + n_right;
        Self {
            x_min,
            x_max: x_min + (n - 1) as f64 * self.h,
            n,
            h: self.h,
        }
    }
}

/// Values of a function on a [`UniformGrid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: UniformGrid1D,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: UniformGrid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(FracError::LengthMismatch {
                expected: grid.n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(FracError::NonFinite("sampled function"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_real(grid: UniformGrid1D, values: &[f64]) -> Result<Self> {
        Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn from_fn(grid: UniformGrid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            grid,
            grid.points().map(|x| Complex64::new(f(x), 0.0)).collect(),
        )
    }

    pub fn from_complex_fn(grid: UniformGrid1D, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn zeros(grid: UniformGrid1D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n],
        }
    }

    #[inline]
    pub fn grid(&self) -> &UniformGrid1D {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest modulus among the first and last `width` samples.
    pub fn edge_magnitude(&self, width: usize) -> f64 {
        let w = width.min(self.values.len());
        self.values[..w]
            .iter()
            .chain(&self.values[self.values.len() - w..])
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Cubic Lagrange interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let g = &self.grid;
        if x < g.x_min || x > g.x_max {
            return Complex64::new(0.0, 0.0);
        }
        let s = (x - g.x_min) / g.h;
        let n = g.n;
        let j0 = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != i {
                    l *= (s - (j0 + k) as f64) / (i as f64 - k as f64);
                }
            }
            acc += self.values[j0 + i] * l;
        }
        acc
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `alpha * self + beta * other` on a common grid.
    pub fn axpby(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        if other.grid != self.grid {
            return Err(FracError::InvalidGrid("operands on different grids".into()));
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| alpha * u + beta * v)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_range_is_enforced() {
        assert!(FractionalOrder::new(0.5).is_ok());
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(FractionalOrder::new(f64::NAN).is_err());
        assert!(FractionalOrder::new_positive(1.5).is_ok());
    }

    #[test]
    fn grid_spacing_and_periodic_layout() {
        let g = UniformGrid1D::new(-1.0, 1.0, 21).unwrap();
        assert!((g.h - 0.1).abs() < 1e-15);
        let p = UniformGrid1D::periodic(0.0, 2.0 * std::f64::consts::PI, 64).unwrap();
        assert!((p.period() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!(UniformGrid1D::new(0.0, 1.0, 7).is_err());
        assert!(UniformGrid1D::new(1.0, 0.0, 64).is_err());
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = UniformGrid1D::new(0.0, 1.0, 8).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = f64::INFINITY;
        assert_eq!(
            SampledFunction::from_real(g, &v),
            Err(FracError::NonFinite("sampled function"))
        );
        assert!(matches!(
            SampledFunction::from_real(g, &v[..5]),
            Err(FracError::LengthMismatch { expected: 8, got: 5 })
        ));
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let g = UniformGrid1D::new(-1.0, 1.0, 41).unwrap();
        let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x * x;
        let u = SampledFunction::from_fn(g, f).unwrap();
        for &x in &[-0.97, -0.3, 0.0123, 0.77, 0.999] {
            assert!((u.interpolate(x).re - f(x)).abs() < 1e-13);
        }
    }
}
