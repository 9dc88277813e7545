//! Shared numerical substrate: grids and sampled functions, the discrete
//! Fourier transform, special functions, quadrature rules and power-law fits.

pub mod dft;
pub mod fit;
pub mod grid;
pub mod quadrature;
pub mod special;

pub use dft::{dft_forward, dft_inverse, SpectralFunction};
pub use fit::{fit_power_law, fit_power_law_fn, fit_power_law_one_sided, fit_power_law_points, PowerFit};
pub use grid::{FractionalOrder, SampledFunction, UniformGrid1D};
pub use special::{gamma_fn, ln_gamma};
