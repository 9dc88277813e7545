//! Discrete Fourier transform under the convention `û(ξ) = ∫ e^{-ixξ} u(x) dx`.
//!
//! `dft_forward` returns `h Σ_j e^{-i x_j ξ_k} u_j`, a Riemann-sum
//! approximation of `û(ξ_k)` at the bins `ξ_k = 2πk / (n h)` (negative bins
//! for `k ≥ n/2`). `dft_inverse` is its exact inverse.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{SampledFunction, UniformGrid1D};
use crate::error::{FracError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    pub grid: UniformGrid1D,
    pub frequencies: Vec<f64>,
    pub coefficients: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(grid: UniformGrid1D, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != grid.n {
            return Err(FracError::LengthMismatch {
                expected: grid.n,
                got: coefficients.len(),
            });
        }
        Ok(Self {
            frequencies: frequencies(&grid),
            grid,
            coefficients,
        })
    }

    /// Multiplies every bin by `symbol(ξ)`.
    pub fn apply_symbol(&mut self, symbol: impl Fn(f64) -> Complex64) {
        for (c, &xi) in self.coefficients.iter_mut().zip(&self.frequencies) {
            *c *= symbol(xi);
        }
    }
}

/// DFT bin frequencies in FFT order.
pub fn frequencies(grid: &UniformGrid1D) -> Vec<f64> {
    let n = grid.n;
    let dxi = 2.0 * PI / grid.period();
    (0..n)
        .map(|k| {
            let kk = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
            kk * dxi
        })
        .collect()
}

pub fn dft_forward(u: &SampledFunction) -> Result<SpectralFunction> {
    let grid = *u.grid();
    let mut buf = u.values().to_vec();
    if buf.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(FracError::NonFinite("dft_forward input"));
    }
    FftPlanner::new().plan_fft_forward(grid.n).process(&mut buf);
    let freqs = frequencies(&grid);
    for (c, &xi) in buf.iter_mut().zip(&freqs) {
        *c *= Complex64::from_polar(grid.h, -grid.x_min * xi);
    }
    Ok(SpectralFunction {
        grid,
        frequencies: freqs,
        coefficients: buf,
    })
}

pub fn dft_inverse(spec: &SpectralFunction) -> Result<SampledFunction> {
    let grid = spec.grid;
    if spec.coefficients.len() != spec.frequencies.len() {
        return Err(FracError::LengthMismatch {
            expected: spec.frequencies.len(),
            got: spec.coefficients.len(),
        });
    }
    if spec.coefficients.len() != grid.n {
        return Err(FracError::LengthMismatch {
            expected: grid.n,
            got: spec.coefficients.len(),
        });
    }
    let scale = 1.0 / (grid.n as f64 * grid.h);
    let mut buf: Vec<Complex64> = spec
        .coefficients
        .iter()
        .zip(&spec.frequencies)
        .map(|(&c, &xi)| c * Complex64::from_polar(scale, grid.x_min * xi))
        .collect();
    FftPlanner::new().plan_fft_inverse(grid.n).process(&mut buf);
    SampledFunction::new(grid, buf)
}
