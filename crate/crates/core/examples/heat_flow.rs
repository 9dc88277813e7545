//! Fractional heat flow on (−1, 1) with zero exterior data: modal solution,
//! first-order implicit Euler convergence and the d^a law in time.

use fraclab::dirichlet::{assemble, solve_stationary_fn, AssemblyConfig};
use fraclab::heat::{boundary_exponent_in_time, euler_convergence, Forcing, HeatConfig, HeatScheme, HeatSolver};
use fraclab::FractionalOrder;

fn main() -> fraclab::Result<()> {
    let solver = HeatSolver::new(assemble(FractionalOrder::new(0.5)?, 24, &AssemblyConfig::default())?)?;
    let u0 = solve_stationary_fn(&solver.system, |_| 1.0)?.coeffs;
    let traj = solver.evolve(&HeatConfig::new(1.0, 0.05, HeatScheme::EigenExact)?, &u0, &Forcing::none())?;
    for t in [0.0, 0.25, 0.5, 1.0] {
        let i = traj.index_near(t);
        println!("u({:.2}, 0) = {:.8}", traj.times[i], solver.system.basis.eval(&traj.states[i], 0.0));
    }

    let conv = euler_convergence(&solver, &u0, &Forcing::none(), 1.0, 0.05, 4)?;
    for (dt, e) in conv.dts.iter().zip(&conv.errors) {
        println!("implicit Euler dt = {dt:.4}  error {e:.3e}");
    }
    println!("error ratios {:?}", conv.ratios);

    let rep = boundary_exponent_in_time(&solver, &traj, &[0.1, 0.5, 1.0]);
    for (t, f) in rep.times.iter().zip(&rep.fits) {
        println!("t = {t}: boundary exponent {:?}", f.as_ref().map(|f| f.exponent));
    }
    Ok(())
}
