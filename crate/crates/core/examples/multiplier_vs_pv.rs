//! Applies (-Δ)^a to a Gaussian as a Fourier multiplier and as a
//! principal-value integral, and prints where the two disagree most.

use fraclab::operators::cross_validate;
use fraclab::{FractionalOrder, SampledFunction, UniformGrid1D};

fn main() -> fraclab::Result<()> {
    let grid = UniformGrid1D::new(-10.0, 10.0, 401)?;
    let u = SampledFunction::from_fn(grid, |x| (-0.5 * x * x).exp())?;
    println!("{:>6} {:>14} {:>14}", "a", "(-Δ)^a u(0)", "discrepancy");
    for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let cv = cross_validate(FractionalOrder::new(a)?, &u, 1e-3)?;
        let mid = cv.x.len() / 2;
        println!("{a:>6} {:>14.8} {:>14.3e}", cv.multiplier[mid], cv.max_discrepancy);
    }
    Ok(())
}
