//! The causal order reducers Ξ₊^t keep functions supported in [0, ∞) there,
//! and Ξ₊^{-t} undoes Ξ₊^t.

use fraclab::halfspace::{half_line_grid, xi_apply, HalfLineFunction, Side};

fn main() -> fraclab::Result<()> {
    let h = 0.01;
    let grid = half_line_grid(30.0, h)?;
    let f = HalfLineFunction::plus_from_fn(grid, |x| (-x).exp())?;
    let scale = f.sample().max_abs();
    println!("{:>6} {:>12} {:>12}", "t", "leakage", "round trip");
    for t in [0.25, -0.25, 0.5, 1.5, -1.5] {
        let fwd = xi_apply(Side::Plus, t, f.sample())?;
        let back = xi_apply(Side::Plus, -t, &fwd.output)?;
        let trip = grid
            .points()
            .zip(back.output.values().iter().zip(f.sample().values()))
            .filter(|(x, _)| *x > 2.0 * h)
            .map(|(_, (b, e))| (b - e).norm())
            .fold(0.0, f64::max);
        println!("{t:>6} {:>12.2e} {:>12.2e}", fwd.leakage / scale, trip / scale);
    }
    Ok(())
}
