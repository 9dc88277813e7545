//! Dirichlet eigenvalues of (-Δ)^a on (−1, 1) and the boundary behaviour
//! d(x)^a of the eigenfunctions.

use fraclab::dirichlet::{assemble, boundary_regularity_probe, eigen_solve, AssemblyConfig};
use fraclab::FractionalOrder;

fn main() -> fraclab::Result<()> {
    for a in [0.25, 0.5, 0.75] {
        let sys = assemble(FractionalOrder::new(a)?, 40, &AssemblyConfig::default())?;
        let rep = eigen_solve(&sys, 4)?;
        println!("a = {a}");
        for (k, pair) in rep.pairs.iter().enumerate() {
            let r = boundary_regularity_probe(&rep.basis, pair)?;
            println!(
                "  λ{} = {:.10}  Δrefine {:.1e}  boundary exponent {:.4}  C^(a+0.1) fails: {}",
                k + 1,
                pair.lambda,
                pair.refinement_change,
                r.fit.exponent,
                r.cap_confirmed()
            );
        }
    }
    Ok(())
}
