//! Homogeneous-Dirichlet fractional heat flow `∂ₜu + (-Δ)^a u = f` on
//! `(-1, 1)` in the weighted Jacobi basis, by exact modal evolution and by
//! implicit Euler, with space–time regularity probes.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dirichlet::{
    assemble, boundary_regularity_probe, holder_divergence, ritz_pairs, DirichletSystem, EigenPair, HolderReport,
    RegularityReport, REFINEMENT_TOL, REGULARITY_FIT_WINDOW,
};
use crate::error::{FracError, Result};
use crate::numeric::quadrature::integrate_adaptive;
use crate::numeric::{fit_power_law_fn, PowerFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeatScheme {
    /// Modal exponentials plus adaptive Duhamel integrals.
    #[default]
    EigenExact,
    /// `(M + dt·A) c^{m+1} = M c^m + dt·M f^{m+1}`.
    ImplicitEuler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatConfig {
    pub t_final: f64,
    /// Requested step; the number of steps is `ceil(T/dt)` and the actual
    /// step `T/steps`.
    pub dt: f64,
    pub scheme: HeatScheme,
}

impl HeatConfig {
    pub fn new(t_final: f64, dt: f64, scheme: HeatScheme) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(FracError::InvalidInput(format!("final time must be positive, got {t_final}")));
        }
        if !(dt > 0.0 && dt <= t_final) {
            return Err(FracError::InvalidInput(format!("need 0 < dt ≤ T, got dt = {dt}")));
        }
        Ok(Self { t_final, dt, scheme })
    }

    pub fn steps(&self) -> usize {
        ((self.t_final / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

type TimeProfile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Forcing `f(x, t) = Σ_i g_i(t) v_i(x)` with each `v_i` given by its
/// coefficients in the system's basis.
#[derive(Clone, Default)]
pub struct Forcing {
    terms: Vec<(Vec<f64>, TimeProfile)>,
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Forcing").field("terms", &self.terms.len()).finish()
    }
}

impl Forcing {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn separable(spatial: Vec<f64>, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::none().plus(spatial, profile)
    }

    pub fn plus(mut self, spatial: Vec<f64>, profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.terms.push((spatial, Arc::new(profile)));
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn coefficients_at(&self, n: usize, t: f64) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (v, g) in &self.terms {
            let gt = g(t);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += gt * vi;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTrajectory {
    pub times: Vec<f64>,
    /// Coefficient vectors in the weighted basis.
    pub states: Vec<Vec<f64>>,
    pub scheme: HeatScheme,
    pub dt: f64,
}

impl HeatTrajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("a trajectory holds at least the initial state")
    }

    /// Index of the sample closest to `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let j = (t / self.dt).round().max(0.0) as usize;
        j.min(self.times.len() - 1)
    }
}

/// Ritz pairs of the system split into those stable under `N → N + 20`
/// (used for modal evolution) and the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub lambdas: Vec<f64>,
    /// Mass-orthonormal eigenvectors (columns), all `N` of them.
    pub vectors: DMatrix<f64>,
    pub converged: usize,
}

impl EigenBasis {
    pub fn new(sys: &DirichletSystem) -> Result<Self> {
        let n = sys.size();
        let pairs = ritz_pairs(sys, n)?;
        let fine = ritz_pairs(&assemble(sys.a(), n + 20, &sys.config)?, n)?;
        let converged = pairs
            .iter()
            .zip(&fine)
            .take_while(|(p, f)| (p.lambda - f.lambda).abs() <= REFINEMENT_TOL * f.lambda)
            .count();
        Ok(Self::from_pairs(&pairs, converged))
    }

    fn from_pairs(pairs: &[EigenPair], converged: usize) -> Self {
        let n = pairs[0].coefficients.len();
        let vectors = DMatrix::from_fn(n, pairs.len(), |i, k| pairs[k].coefficients[i]);
        Self {
            lambdas: pairs.iter().map(|p| p.lambda).collect(),
            vectors,
            converged,
        }
    }

    pub fn first(&self) -> EigenPair {
        EigenPair {
            lambda: self.lambdas[0],
            coefficients: self.vectors.column(0).iter().copied().collect(),
            residual: 0.0,
            refinement_change: 0.0,
        }
    }
}

/// Coverage of the converged eigenpairs required by modal evolution.
pub const COVERAGE_TOL: f64 = 0.999;

/// Heat solver bound to one spatial system.
#[derive(Debug, Clone)]
pub struct HeatSolver {
    pub system: DirichletSystem,
    pub eigen: EigenBasis,
}

impl HeatSolver {
    pub fn new(system: DirichletSystem) -> Result<Self> {
        let eigen = EigenBasis::new(&system)?;
        Ok(Self { system, eigen })
    }

    pub fn mass_norm(&self, c: &[f64]) -> f64 {
        let v = DVector::from_column_slice(c);
        (v.transpose() * &self.system.mass * &v)[(0, 0)].max(0.0).sqrt()
    }

    /// Fraction of `‖u‖²_M` carried by the converged eigenpairs.
    pub fn coverage(&self, u: &[f64]) -> f64 {
        let total = self.mass_norm(u).powi(2);
        if total == 0.0 {
            return 1.0;
        }
        let d = self.modal(u);
        d.iter().take(self.eigen.converged).map(|x| x * x).sum::<f64>() / total
    }

    fn modal(&self, c: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(c);
        self.eigen.vectors.transpose() * (&self.system.mass * v)
    }

    pub fn evolve(&self, cfg: &HeatConfig, u0: &[f64], f: &Forcing) -> Result<HeatTrajectory> {
        let n = self.system.size();
        if u0.len() != n {
            return Err(FracError::LengthMismatch { expected: n, got: u0.len() });
        }
        if let Some((v, _)) = f.terms.iter().find(|(v, _)| v.len() != n) {
            return Err(FracError::LengthMismatch { expected: n, got: v.len() });
        }
        match cfg.scheme {
            HeatScheme::EigenExact => self.evolve_modal(cfg, u0, f),
            HeatScheme::ImplicitEuler => self.evolve_euler(cfg, u0, f),
        }
    }

    fn evolve_modal(&self, cfg: &HeatConfig, u0: &[f64], f: &Forcing) -> Result<HeatTrajectory> {
        let need = |c: &[f64], what: &str| -> Result<()> {
            let cov = self.coverage(c);
            if cov < COVERAGE_TOL {
                return Err(FracError::InvalidInput(format!(
                    "converged eigenpairs carry only {:.4}% of the {what}",
                    100.0 * cov
                )));
            }
            Ok(())
        };
        need(u0, "initial data")?;
        for (v, _) in &f.terms {
            need(v, "forcing")?;
        }
        let d0 = self.modal(u0);
        let fmodes: Vec<DVector<f64>> = f.terms.iter().map(|(v, _)| self.modal(v)).collect();
        let steps = cfg.steps();
        let dt = cfg.t_final / steps as f64;
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        for m in 0..=steps {
            let t = m as f64 * dt;
            let mut d = DVector::zeros(self.eigen.lambdas.len());
            // every Ritz mode, so the semi-discrete system is solved exactly;
            // coverage only certifies that the data is resolved
            for j in 0..self.eigen.lambdas.len() {
                let lam = self.eigen.lambdas[j];
                let mut v = (-lam * t).exp() * d0[j];
                for ((_, g), fm) in f.terms.iter().zip(&fmodes) {
                    if fm[j] != 0.0 && t > 0.0 {
                        let (int, _) = integrate_adaptive(|s| (-lam * (t - s)).exp() * g(s), 0.0, t, 1e-14, 1e-12)?;
                        v += fm[j] * int;
                    }
                }
                d[j] = v;
            }
            let c = &self.eigen.vectors * d;
            times.push(t);
            states.push(c.iter().copied().collect());
        }
        Ok(HeatTrajectory {
            times,
            states,
            scheme: HeatScheme::EigenExact,
            dt,
        })
    }

    fn evolve_euler(&self, cfg: &HeatConfig, u0: &[f64], f: &Forcing) -> Result<HeatTrajectory> {
        let n = self.system.size();
        let steps = cfg.steps();
        let dt = cfg.t_final / steps as f64;
        let mass = &self.system.mass;
        let lhs = (mass + &self.system.stiffness * dt)
            .cholesky()
            .ok_or_else(|| FracError::Singular("M + dt·A is not positive definite".into()))?;
        let mut c = DVector::from_column_slice(u0);
        let mut times = vec![0.0];
        let mut states = vec![u0.to_vec()];
        for m in 1..=steps {
            let t = m as f64 * dt;
            let mut rhs = mass * &c;
            if !f.is_zero() {
                rhs += mass * f.coefficients_at(n, t) * dt;
            }
            c = lhs.solve(&rhs);
            times.push(t);
            states.push(c.iter().copied().collect());
        }
        Ok(HeatTrajectory {
            times,
            states,
            scheme: HeatScheme::ImplicitEuler,
            dt,
        })
    }
}

/// Implicit Euler against the modal reference at `T` over a ladder of
/// halved steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub dts: Vec<f64>,
    /// Largest coefficient error at `T`.
    pub errors: Vec<f64>,
    /// `errors[j]/errors[j+1]`.
    pub ratios: Vec<f64>,
}

impl ConvergenceReport {
    pub fn first_order(&self, lo: f64, hi: f64) -> bool {
        !self.ratios.is_empty() && self.ratios.iter().all(|r| (lo..=hi).contains(r))
    }
}

pub fn euler_convergence(
    solver: &HeatSolver,
    u0: &[f64],
    f: &Forcing,
    t_final: f64,
    dt0: f64,
    levels: usize,
) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(FracError::InvalidInput("a convergence ladder needs ≥ 2 levels".into()));
    }
    let reference = solver.evolve(&HeatConfig::new(t_final, t_final, HeatScheme::EigenExact)?, u0, f)?;
    let exact = reference.final_state();
    let mut dts = Vec::with_capacity(levels);
    let mut errors = Vec::with_capacity(levels);
    for j in 0..levels {
        let dt = dt0 / (1u64 << j) as f64;
        let traj = solver.evolve(&HeatConfig::new(t_final, dt, HeatScheme::ImplicitEuler)?, u0, f)?;
        let err = traj
            .final_state()
            .iter()
            .zip(exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        dts.push(traj.dt);
        errors.push(err);
    }
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ConvergenceReport { dts, errors, ratios })
}

/// `k`-th divided differences in time of the state, in mass norm.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeRegularityReport {
    pub order: usize,
    /// Sampling steps, coarse to fine.
    pub steps: Vec<f64>,
    /// `max_{t ≥ t₀} ‖Δ_τ^k u(t)‖_M / τ^k` for each step `τ`.
    pub maxima: Vec<f64>,
    pub growth: f64,
    pub bounded: bool,
}

/// Divided differences whose maximum grows by more than this factor under
/// the last halving count as unbounded.
const TIME_GROWTH_THRESHOLD: f64 = 1.5;
const TIME_LEVELS: usize = 4;

/// Checks that the `k`-th time derivative stays bounded on `[t₀, T]` by
/// refining the sampling step `8δt, 4δt, 2δt, δt` of the trajectory.
pub fn time_regularity_probe(
    solver: &HeatSolver,
    traj: &HeatTrajectory,
    order: usize,
    t0: f64,
) -> Result<TimeRegularityReport> {
    if order == 0 || order > 4 {
        return Err(FracError::InvalidInput(format!("time derivative order must be 1..=4, got {order}")));
    }
    let stride0 = 1usize << (TIME_LEVELS - 1);
    let first = traj.index_near(t0).max(if traj.times[traj.index_near(t0)] < t0 { 1 } else { 0 });
    let last = traj.times.len() - 1;
    if last < first + order * stride0 * 2 {
        return Err(FracError::InvalidInput(
            "trajectory too short for the requested time-derivative order".into(),
        ));
    }
    let binom: Vec<f64> = (0..=order)
        .map(|i| {
            let c = (1..=i).fold(1.0, |acc, j| acc * (order + 1 - j) as f64 / j as f64);
            if (order - i) % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .collect();
    let n = traj.states[0].len();
    let mut steps = Vec::new();
    let mut maxima = Vec::new();
    for level in 0..TIME_LEVELS {
        let stride = stride0 >> level;
        let tau = stride as f64 * traj.dt;
        let mut worst: f64 = 0.0;
        let mut m = first;
        while m + order * stride <= last {
            let mut d = vec![0.0; n];
            for (i, b) in binom.iter().enumerate() {
                for (di, s) in d.iter_mut().zip(&traj.states[m + i * stride]) {
                    *di += b * s;
                }
            }
            worst = worst.max(solver.mass_norm(&d) / tau.powi(order as i32));
            m += 1;
        }
        steps.push(tau);
        maxima.push(worst);
    }
    let growth = maxima[TIME_LEVELS - 1] / maxima[TIME_LEVELS - 2].max(f64::MIN_POSITIVE);
    Ok(TimeRegularityReport {
        order,
        steps,
        maxima,
        growth,
        bounded: growth <= TIME_GROWTH_THRESHOLD,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryExponentReport {
    pub times: Vec<f64>,
    /// `None` where the fit failed (flagged).
    pub fits: Vec<Option<PowerFit>>,
    /// Largest `|exponent − a|` over successful fits.
    pub max_deviation: f64,
}

impl BoundaryExponentReport {
    pub fn all_within(&self, tol: f64) -> bool {
        self.fits.iter().all(Option::is_some) && self.max_deviation <= tol
    }
}

/// Boundary exponent of `u(·, t)` at `x = 1` for each probe time.
pub fn boundary_exponent_in_time(
    solver: &HeatSolver,
    traj: &HeatTrajectory,
    probe_times: &[f64],
) -> BoundaryExponentReport {
    let a = solver.system.a().value();
    let basis = &solver.system.basis;
    let mut times = Vec::with_capacity(probe_times.len());
    let mut fits = Vec::with_capacity(probe_times.len());
    let mut max_deviation: f64 = 0.0;
    for &t in probe_times {
        let j = traj.index_near(t);
        let c = &traj.states[j];
        let fit = fit_power_law_fn(|x| basis.eval(c, x), 1.0, -1.0, REGULARITY_FIT_WINDOW, 40).ok();
        if let Some(f) = &fit {
            max_deviation = max_deviation.max((f.exponent - a).abs());
        }
        times.push(traj.times[j]);
        fits.push(fit);
    }
    BoundaryExponentReport {
        times,
        fits,
        max_deviation,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessCapReport {
    pub lambda1: f64,
    pub t: f64,
    /// Probe of `u(·, t) = e^{-λ₁t} φ₁`.
    pub regularity: RegularityReport,
    /// The `a + 0.1` detector on the smooth control `e^{-t}(1-x²)²`.
    pub control: HolderReport,
}

impl SmoothnessCapReport {
    pub fn fires(&self) -> bool {
        self.regularity.above_cap.diverges && !self.control.diverges
    }
}

/// For `f ≡ 0` and `u₀ = φ₁` the solution `e^{-λ₁t}φ₁` is smooth in time yet
/// exactly `C^a` at the boundary for every `t`.
pub fn smoothness_cap_demo(solver: &HeatSolver, t: f64) -> Result<SmoothnessCapReport> {
    let a = solver.system.a().value();
    let phi = solver.eigen.first();
    let decay = (-phi.lambda * t).exp();
    let u = EigenPair {
        coefficients: phi.coefficients.iter().map(|c| c * decay).collect(),
        ..phi.clone()
    };
    let regularity = boundary_regularity_probe(&solver.system.basis, &u)?;
    let control = holder_divergence(
        |x| (-t).exp() * (1.0 - x * x).max(0.0).powi(2),
        1.0,
        -1.0,
        a + 0.1,
        (1e-8, 1e-2),
        13,
    )?;
    Ok(SmoothnessCapReport {
        lambda1: phi.lambda,
        t,
        regularity,
        control,
    })
}

/// Convenience wrapper building a solver for a single evolution.
pub fn evolve(sys: &DirichletSystem, cfg: &HeatConfig, u0: &[f64], f: &Forcing) -> Result<HeatTrajectory> {
    HeatSolver::new(sys.clone())?.evolve(cfg, u0, f)
}
