//! Solves (1-Δ)^a u = f on (0, ∞) with u = 0 on (−∞, 0) by factorization and
//! shows the x^a onset of the solution at the boundary.

use fraclab::halfspace::{half_line_grid, solve_model_dirichlet, HalfLineFunction};
use fraclab::numeric::fit_power_law_one_sided;
use fraclab::FractionalOrder;

fn main() -> fraclab::Result<()> {
    let grid = half_line_grid(30.0, 0.001)?;
    let f = HalfLineFunction::plus_from_fn(grid, |x| (-x).exp())?;
    println!("{:>5} {:>12} {:>10} {:>10}", "a", "u(1)", "exponent", "residual");
    for a in [0.25, 0.5, 0.75] {
        let sol = solve_model_dirichlet(FractionalOrder::new(a)?, &f)?;
        let fit = fit_power_law_one_sided(sol.u.sample(), 0.0, 1.0, (0.1, 1.0))?;
        let u1 = sol.u.sample().interpolate(1.0).re;
        println!("{a:>5} {u1:>12.8} {:>10.5} {:>10.2e}", fit.exponent, sol.residual);
    }
    Ok(())
}
