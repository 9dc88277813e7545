//! End-to-end acceptance checks, one line per criterion. Runs without the
//! libtest harness so the lines are always printed; exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use fraclab::dirichlet::{
    assemble, boundary_regularity_probe, eigen_solve, greens_reduced_check, ibp_identity_check, solve_stationary,
    AssemblyConfig,
};
use fraclab::halfspace::{apply_bessel_restricted, half_line_grid, solve_model_dirichlet, xi_apply, HalfLineFunction, Side};
use fraclab::heat::{
    boundary_exponent_in_time, euler_convergence, smoothness_cap_demo, time_regularity_probe, Forcing, HeatConfig,
    HeatScheme, HeatSolver,
};
use fraclab::levy::{feynman_kac_free, feynman_kac_killed, principal_eigenvalue_mc, InitialLaw, StableConfig};
use fraclab::numeric::fit_power_law_one_sided;
use fraclab::operators::{apply_pv_integral, cross_validate};
use fraclab::symbols::{estimate_normalization, KernelSpec};
use fraclab::{FractionalOrder, SampledFunction, UniformGrid1D};
use rand::{Rng, SeedableRng};

type Check = fraclab::Result<(bool, String)>;

const SEED: u64 = 2024;

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn default_assembly() -> AssemblyConfig {
    AssemblyConfig::default()
}

fn multiplier_kernel_equivalence() -> Check {
    let grid = UniformGrid1D::new(-10.0, 10.0, 401)?;
    let u = SampledFunction::from_fn(grid, |x| (-0.5 * x * x).exp())?;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let cv = cross_validate(order(a), &u, 1e-3)?;
        ok &= cv.pass && cv.max_discrepancy <= 1e-3;
        worst = worst.max(cv.max_discrepancy);
    }
    Ok((ok, format!("max relative discrepancy {worst:.2e} (≤ 1e-3)")))
}

fn normalization_constant() -> Check {
    let c = estimate_normalization(order(0.5))?;
    Ok(((0.3181..=0.3185).contains(&c), format!("c(1/2) = {c:.10} (in [0.3181, 0.3185])")))
}

fn order_reducer_contract() -> Check {
    let h = 0.01;
    let grid = half_line_grid(30.0, h)?;
    let f = HalfLineFunction::plus_from_fn(grid, |x| (-x).exp())?;
    let scale = f.sample().max_abs();
    let (mut leak, mut trip): (f64, f64) = (0.0, 0.0);
    for a in [0.25, 0.5, 0.75] {
        for t in [a, -a, a + 1.0, -(a + 1.0)] {
            let fwd = xi_apply(Side::Plus, t, f.sample())?;
            let back = xi_apply(Side::Plus, -t, &fwd.output)?;
            leak = leak.max(fwd.leakage / scale);
            let err = grid
                .points()
                .zip(back.output.values().iter().zip(f.sample().values()))
                .filter(|(x, _)| x.abs() > 2.0 * h)
                .map(|(_, (b, e))| (b - e).norm())
                .fold(0.0, f64::max);
            trip = trip.max(err / scale);
        }
    }
    Ok((
        leak <= 1e-6 && trip <= 1e-6,
        format!("leakage {leak:.2e}, round trip {trip:.2e} (both ≤ 1e-6)"),
    ))
}

fn model_dirichlet_solver() -> Check {
    let (mut trip, mut res, mut expo): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for a in [0.25, 0.5, 0.75] {
        let o = order(a);
        let grid = half_line_grid(30.0, 0.005)?;
        let exact = HalfLineFunction::plus_from_fn(grid, |x| x.powf(a) * (-x).exp())?;
        let sol = solve_model_dirichlet(o, &apply_bessel_restricted(o, &exact)?)?;
        let (mut err, mut scale): (f64, f64) = (0.0, 0.0);
        for (x, (u, e)) in grid.points().zip(sol.u.sample().values().iter().zip(exact.sample().values())) {
            if (0.1..=3.0).contains(&x) {
                err = err.max((u - e).norm());
                scale = scale.max(e.norm());
            }
        }
        trip = trip.max(err / scale);
        res = res.max(sol.residual);
        // boundary behaviour emerging from forcing that does not encode it
        let fine = half_line_grid(30.0, 0.001)?;
        let plain = solve_model_dirichlet(o, &HalfLineFunction::plus_from_fn(fine, |x| (-x).exp())?)?;
        res = res.max(plain.residual);
        let fit = fit_power_law_one_sided(plain.u.sample(), 0.0, 1.0, (0.1, 1.0))?;
        expo = expo.max((fit.exponent - a).abs());
    }
    Ok((
        trip <= 1e-4 && res <= 1e-3 && expo <= 0.02,
        format!("round trip {trip:.2e} (≤ 1e-4), residual {res:.2e} (≤ 1e-3), |exponent − a| {expo:.4} (≤ 0.02)"),
    ))
}

fn torsion_identity() -> Check {
    let a = order(0.5);
    let grid = UniformGrid1D::new(-1.0, 1.0, 4001)?;
    let u = SampledFunction::from_fn(grid, |x| (1.0 - x * x).max(0.0).sqrt())?;
    let xs: Vec<f64> = (0..=36).map(|i| -0.9 + 0.05 * i as f64).collect();
    let pv = apply_pv_integral(&KernelSpec::estimated(a)?, &u, &xs)?;
    let pv_err = pv.values.iter().map(|v| (v.re - 1.0).abs()).fold(0.0, f64::max);
    let sys = assemble(a, 16, &default_assembly())?;
    let ones = SampledFunction::from_fn(UniformGrid1D::new(-1.0, 1.0, 201)?, |_| 1.0)?;
    let u0 = solve_stationary(&sys, &ones)?.eval(0.0);
    Ok((
        pv_err <= 1e-3 && (u0 - 1.0).abs() <= 2e-3,
        format!("max |PV − 1| {pv_err:.2e} (≤ 1e-3), u(0) = {u0:.8} (1 ± 2e-3)"),
    ))
}

fn phi1_start(solver: &HeatSolver) -> fraclab::Result<InitialLaw> {
    let basis = solver.system.basis.clone();
    let c = solver.eigen.first().coefficients;
    InitialLaw::proportional_to(move |x| basis.eval(&c, x).max(0.0), (-1.0, 1.0))
}

fn eigen_stability() -> Check {
    let a = order(0.5);
    let sys = assemble(a, 60, &default_assembly())?;
    let rep = eigen_solve(&sys, 1)?;
    let Some(pair) = rep.pairs.first() else {
        return Ok((false, "λ₁ flagged as not converged under N 60 → 80".into()));
    };
    let lambda = pair.lambda;
    let change = pair.refinement_change;

    let start = Instant::now();
    let solver = HeatSolver::new(assemble(a, 40, &default_assembly())?)?;
    let gap = solver.eigen.lambdas[1] - solver.eigen.lambdas[0];
    let cfg = StableConfig::new(a, 100_000, SEED);
    let mc = principal_eigenvalue_mc(&cfg, (0.5, 2.0), gap, &phi1_start(&solver)?)?;
    let mc_time = start.elapsed().as_secs_f64();
    let e = mc.estimate.extrapolated;
    let z = (e.mean - lambda) / e.std_error;
    Ok((
        change <= 1e-4 && z.abs() <= 3.0 && mc_time < 120.0,
        format!(
            "λ₁ = {lambda:.10}, N 60→80 change {change:.1e} (≤ 1e-4); MC {:.4} ± {:.4}, z = {z:+.2} (|z| ≤ 3), MC {mc_time:.1} s",
            e.mean, e.std_error
        ),
    ))
}

fn boundary_regularity() -> Check {
    let (mut worst, mut misses, mut count) = (0.0f64, 0usize, 0usize);
    for a in [0.25, 0.5, 0.75] {
        let sys = assemble(order(a), 60, &default_assembly())?;
        let rep = eigen_solve(&sys, 4)?;
        for pair in &rep.pairs {
            let r = boundary_regularity_probe(&rep.basis, pair)?;
            worst = worst.max(r.exponent_error(a));
            misses += usize::from(!r.cap_confirmed());
            count += 1;
        }
    }
    Ok((
        worst <= 0.02 && misses == 0 && count > 0,
        format!("{count} eigenfunctions, max |exponent − a| {worst:.4} (≤ 0.02), cap detector misses {misses}"),
    ))
}

fn ibp_structure() -> Check {
    let sys = assemble(order(0.5), 16, &default_assembly())?;
    let fs: [fn(f64) -> f64; 5] = [|_| 1.0, |x| x, |x| 1.0 + x, |x| x * x * x, |x| (0.5 * x).cos() + 0.3 * x];
    let grid = UniformGrid1D::new(-1.0, 1.0, 2001)?;
    let sols = fs
        .iter()
        .map(|f| solve_stationary(&sys, &SampledFunction::from_fn(grid, f)?))
        .collect::<fraclab::Result<Vec<_>>>()?;
    let (one, x, one_x, x3, mix) = (&sols[0], &sols[1], &sols[2], &sols[3], &sols[4]);
    let pairs = [(one, x), (one_x, x), (one, x3), (mix, one), (one_x, mix), (one, one)];
    let r = ibp_identity_check(&sys, &pairs)?;
    let ratios = r.entries.iter().filter(|e| e.ratio.is_some()).count();
    let sym = r.entries[5];
    let sym_size = sym.lhs.abs().max(sym.rhs.abs());
    Ok((
        ratios >= 4 && r.spread <= 0.02 && sym_size <= 1e-6,
        format!(
            "{ratios} pairs, ratio {:.6}, spread {:.1e} (≤ 2%); symmetric pair |L|,|R| ≤ {sym_size:.1e} (≤ 1e-6)",
            r.mean_ratio, r.spread
        ),
    ))
}

fn reduced_greens_formula() -> Check {
    let n = 20;
    let sys = assemble(order(0.6), n, &default_assembly())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        worst = worst.max(greens_reduced_check(&sys, &u, &v)?.relative_defect);
    }
    Ok((worst <= 1e-5, format!("20 random pairs, max relative defect {worst:.2e} (≤ 1e-5)")))
}

fn heat_solvability() -> Check {
    let solver = HeatSolver::new(assemble(order(0.5), 24, &default_assembly())?)?;
    let none = Forcing::none();
    let phi = solver.eigen.first();
    let traj = solver.evolve(&HeatConfig::new(1.0, 0.1, HeatScheme::EigenExact)?, &phi.coefficients, &none)?;
    let mut decay: f64 = 0.0;
    for (t, c) in traj.times.iter().zip(&traj.states) {
        let e = (-phi.lambda * t).exp();
        decay = c.iter().zip(&phi.coefficients).map(|(x, y)| (x - e * y).abs()).fold(decay, f64::max);
    }

    let ones = SampledFunction::from_fn(UniformGrid1D::new(-1.0, 1.0, 201)?, |_| 1.0)?;
    let torsion = solve_stationary(&solver.system, &ones)?.coeffs;
    let conv = euler_convergence(&solver, &torsion, &none, 1.0, 0.05, 4)?;
    let first_order = conv.ratios.len() == 3 && conv.first_order(1.8, 2.2);

    let traj = solver.evolve(&HeatConfig::new(1.0, 0.01, HeatScheme::EigenExact)?, &torsion, &none)?;
    let times: Vec<f64> = (0..=9).map(|j| 0.1 + 0.1 * j as f64).collect();
    let expo = boundary_exponent_in_time(&solver, &traj, &times);
    let expo_ok = expo.all_within(0.03);

    let mut caps = Vec::new();
    for a in [0.25, 0.5] {
        let s = HeatSolver::new(assemble(order(a), 24, &default_assembly())?)?;
        caps.push(smoothness_cap_demo(&s, 1.0)?.fires());
    }

    let forcing = Forcing::separable(phi.coefficients.clone(), |s| s.powi(4) * (-s).exp());
    let zero = vec![0.0; solver.system.size()];
    let traj = solver.evolve(&HeatConfig::new(1.0, 1.0 / 400.0, HeatScheme::EigenExact)?, &zero, &forcing)?;
    let mut bounded = true;
    for k in 1..=4 {
        bounded &= time_regularity_probe(&solver, &traj, k, 0.1)?.bounded;
    }
    let ratios: Vec<String> = conv.ratios.iter().map(|r| format!("{r:.3}")).collect();
    Ok((
        decay <= 1e-10 && first_order && expo_ok && caps.iter().all(|&c| c) && bounded,
        format!(
            "decay error {decay:.1e} (≤ 1e-10); Euler ratios [{}] (1.8–2.2); |exponent − a| ≤ {:.4} on [0.1, 1] (≤ 0.03); cap fires {caps:?}; time derivatives 1–4 bounded: {bounded}",
            ratios.join(", "),
            expo.max_deviation
        ),
    ))
}

fn feynman_kac_agreement() -> Check {
    let a = order(0.5);
    let solver = HeatSolver::new(assemble(a, 40, &default_assembly())?)?;
    let phi = solver.eigen.first();
    let spectral = solver.evolve(&HeatConfig::new(1.0, 1.0, HeatScheme::EigenExact)?, &phi.coefficients, &Forcing::none())?;
    let exact = solver.system.basis.eval(spectral.final_state(), 0.0);
    let cfg = StableConfig::new(a, 100_000, SEED);
    let basis = solver.system.basis.clone();
    let c = phi.coefficients.clone();
    let killed = feynman_kac_killed(move |y| basis.eval(&c, y), 0.0, 1.0, &cfg)?;
    let k = killed.extrapolated;
    let z_killed = (k.mean - exact) / k.std_error;

    let mut z_free: f64 = 0.0;
    for fa in [0.25, 0.5, 0.75] {
        let fcfg = StableConfig::new(order(fa), 100_000, SEED + 1);
        for w in [1.0f64, 2.0] {
            for t in [0.25, 1.0] {
                let e = feynman_kac_free(|y| (w * y).cos(), 0.0, t, &fcfg)?;
                let law = (-t * w.powf(2.0 * fa)).exp();
                z_free = z_free.max(((e.mean - law) / e.std_error).abs());
            }
        }
    }
    Ok((
        z_killed.abs() <= 3.0 && z_free <= 3.0,
        format!(
            "killed {:.5} ± {:.5} vs spectral {exact:.5}, z = {z_killed:+.2}; free cosine law max |z| {z_free:.2} (both ≤ 3)",
            k.mean, k.std_error
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, f64, fn() -> Check); 11] = [
        ("multiplier–kernel equivalence", 10.0, multiplier_kernel_equivalence),
        ("normalization constant", 5.0, normalization_constant),
        ("order-reducer contract", 10.0, order_reducer_contract),
        ("model Dirichlet solver", 10.0, model_dirichlet_solver),
        ("torsion identity", 30.0, torsion_identity),
        ("eigen-solve stability", 180.0, eigen_stability),
        ("boundary regularity", 60.0, boundary_regularity),
        ("integration-by-parts structure", 60.0, ibp_structure),
        ("reduced Green's formula", 30.0, reduced_greens_formula),
        ("heat solvability and regularity", 120.0, heat_solvability),
        ("Feynman–Kac agreement", 180.0, feynman_kac_agreement),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        let (pass, detail) = match outcome {
            Ok((ok, detail)) => (ok && secs < *limit, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "criterion {:>2} {} {name}: {detail} [{secs:.1} s, limit {limit:.0} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
