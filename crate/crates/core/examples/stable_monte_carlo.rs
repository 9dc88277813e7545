//! Symmetric 2a-stable paths: the free Feynman–Kac formula against the
//! multiplier solution, killed paths against the heat flow, and the principal
//! Dirichlet eigenvalue from survival probabilities.

use fraclab::dirichlet::{assemble, AssemblyConfig};
use fraclab::heat::HeatSolver;
use fraclab::levy::{feynman_kac_free, feynman_kac_killed, principal_eigenvalue_mc, InitialLaw, StableConfig};
use fraclab::FractionalOrder;

fn main() -> fraclab::Result<()> {
    let a = FractionalOrder::new(0.5)?;
    let cfg = StableConfig::new(a, 50_000, 7);

    let free = feynman_kac_free(|y| y.cos(), 0.0, 1.0, &cfg)?;
    println!("E cos(X_1) = {:.5} ± {:.5}   exact {:.5}", free.mean, free.std_error, (-1.0f64).exp());

    let solver = HeatSolver::new(assemble(a, 40, &AssemblyConfig::default())?)?;
    let phi = solver.eigen.first().clone();
    let basis = solver.system.basis.clone();
    let exact = (-phi.lambda).exp() * phi.eval(&basis, 0.0);
    let (b, c) = (basis.clone(), phi.coefficients.clone());
    let killed = feynman_kac_killed(move |y| b.eval(&c, y), 0.0, 1.0, &cfg)?;
    println!(
        "killed: {:.5} ± {:.5} (rate {:.2})   exact {exact:.5}",
        killed.extrapolated.mean, killed.extrapolated.std_error, killed.rate
    );

    let (b, c) = (basis, phi.coefficients.clone());
    let start = InitialLaw::proportional_to(move |x| b.eval(&c, x).max(0.0), (-1.0, 1.0))?;
    let gap = solver.eigen.lambdas[1] - phi.lambda;
    let est = principal_eigenvalue_mc(&cfg, (0.5, 2.0), gap, &start)?;
    println!(
        "λ1 from survival: {:.4} ± {:.4}   Galerkin {:.6}",
        est.estimate.extrapolated.mean, est.estimate.extrapolated.std_error, phi.lambda
    );
    Ok(())
}
