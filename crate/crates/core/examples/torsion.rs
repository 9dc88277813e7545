//! The torsion function: (-Δ)^{1/2} (1 − x²)_+^{1/2} = 1 on (−1, 1), checked by
//! the singular integral and by the weighted Galerkin solver.

use fraclab::dirichlet::{assemble, solve_stationary_fn, AssemblyConfig};
use fraclab::operators::apply_pv_integral;
use fraclab::symbols::KernelSpec;
use fraclab::{FractionalOrder, SampledFunction, UniformGrid1D};

fn main() -> fraclab::Result<()> {
    let a = FractionalOrder::new(0.5)?;
    let grid = UniformGrid1D::new(-1.0, 1.0, 4001)?;
    let u = SampledFunction::from_fn(grid, |x| (1.0 - x * x).max(0.0).sqrt())?;
    let xs = [-0.9, -0.5, 0.0, 0.5, 0.9];
    let pv = apply_pv_integral(&KernelSpec::estimated(a)?, &u, &xs)?;
    for (x, v) in xs.iter().zip(&pv.values) {
        println!("(-Δ)^(1/2) u({x:>4}) = {:.6}", v.re);
    }
    let sys = assemble(a, 16, &AssemblyConfig::default())?;
    let sol = solve_stationary_fn(&sys, |_| 1.0)?;
    for x in [0.0, 0.5, 0.99] {
        println!("galerkin u({x}) = {:.10}   exact {:.10}", sol.eval(x), (1.0 - x * x).sqrt());
    }
    Ok(())
}
