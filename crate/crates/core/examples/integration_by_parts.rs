//! Integration by parts for solutions of (-Δ)^a u = f on (−1, 1): the interior
//! term is a fixed multiple of the product of boundary traces, and it vanishes
//! identically when the traces do.

use fraclab::dirichlet::{assemble, greens_reduced_check, ibp_identity_check, solve_stationary_fn, AssemblyConfig};
use fraclab::FractionalOrder;

fn main() -> fraclab::Result<()> {
    let sys = assemble(FractionalOrder::new(0.5)?, 16, &AssemblyConfig::default())?;
    let one = solve_stationary_fn(&sys, |_| 1.0)?;
    let x = solve_stationary_fn(&sys, |x| x)?;
    let mix = solve_stationary_fn(&sys, |x| (0.5 * x).cos() + 0.3 * x)?;
    let r = ibp_identity_check(&sys, &[(&one, &x), (&mix, &one), (&x, &mix)])?;
    for e in &r.entries {
        println!("interior {:>12.8}  boundary {:>12.8}  ratio {:?}", e.lhs, e.rhs, e.ratio);
    }
    println!("mean ratio {:.10}, spread {:.1e}", r.mean_ratio, r.spread);

    let g = greens_reduced_check(&sys, &one.coeffs, &mix.coeffs)?;
    println!("Green's formula defect with zero traces: {:.2e}", g.relative_defect);
    Ok(())
}
