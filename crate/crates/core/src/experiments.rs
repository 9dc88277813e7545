//! Batch runner behind the `fraclab` binary: JSON configuration, named
//! experiments with acceptance gates, CSV reports and a run manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dirichlet::{
    assemble, boundary_regularity_probe, eigen_solve, greens_reduced_check, ibp_identity_check, solve_stationary_fn,
    AssemblyConfig,
};
use crate::error::FracError;
use crate::halfspace::{apply_bessel_restricted, half_line_grid, solve_model_dirichlet, xi_apply, HalfLineFunction, Side};
use crate::heat::{
    boundary_exponent_in_time, euler_convergence, smoothness_cap_demo, time_regularity_probe, Forcing, HeatConfig,
    HeatScheme, HeatSolver,
};
use crate::levy::{feynman_kac_free, feynman_kac_killed, principal_eigenvalue_mc, InitialLaw, StableConfig};
use crate::numeric::{fit_power_law_one_sided, FractionalOrder, SampledFunction, UniformGrid1D};
use crate::operators::{apply_pv_integral, cross_validate};
use crate::symbols::{closed_form_normalization, estimate_normalization_with, KernelSpec, NormalizationConfig};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("malformed configuration: {0}")]
    Config(String),
    #[error("unknown experiment `{0}` (see `fraclab list`)")]
    UnknownExperiment(String),
    #[error("experiment `{experiment}`: fractional order {value} outside (0, 1)")]
    InvalidOrder { experiment: String, value: f64 },
    #[error("experiment `{experiment}`: invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        experiment: String,
        name: String,
        reason: String,
    },
    #[error("experiment `{experiment}` failed: {source}")]
    Numerical {
        experiment: String,
        #[source]
        source: FracError,
    },
    #[error("cannot write output to {path}: {reason}")]
    Output { path: PathBuf, reason: String },
}

type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiments: Vec<ExperimentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    /// Gate thresholds overriding the defaults.
    #[serde(default)]
    pub acceptance: BTreeMap<String, f64>,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

/// Static description of an experiment: parameters and gates with defaults.
#[derive(Debug, Clone, Copy)]
pub struct ExperimentInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub params: &'static [&'static str],
    pub gates: &'static [(&'static str, Comparison, f64)],
}

use Comparison::{AtLeast, AtMost};

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "cross-validate",
        description: "multiplier vs principal-value application of (-Δ)^a on a Gaussian",
        params: &["a", "half_width", "points"],
        gates: &[("max_discrepancy", AtMost, 1e-3)],
    },
    ExperimentInfo {
        name: "normalization",
        description: "numerically derived kernel constant vs the closed form",
        params: &["a"],
        gates: &[("max_rel_diff", AtMost, 6e-4)],
    },
    ExperimentInfo {
        name: "reducers",
        description: "support preservation and inverse pairs of the order-reducing operators",
        params: &["a", "h", "length"],
        gates: &[("max_leakage", AtMost, 1e-6), ("max_round_trip", AtMost, 1e-6)],
    },
    ExperimentInfo {
        name: "model-solver",
        description: "half-line Dirichlet problem for (1-Δ)^a: round trip, residual, boundary exponent",
        params: &["a", "h", "length", "fit_h"],
        gates: &[
            ("max_round_trip", AtMost, 1e-4),
            ("max_residual", AtMost, 1e-3),
            ("max_exponent_error", AtMost, 0.02),
        ],
    },
    ExperimentInfo {
        name: "torsion",
        description: "(-Δ)^{1/2}(1-x²)_+^{1/2} = 1 and the stationary solve with f = 1",
        params: &["points", "basis"],
        gates: &[("max_pv_error", AtMost, 1e-3), ("center_error", AtMost, 2e-3)],
    },
    ExperimentInfo {
        name: "eigen",
        description: "Dirichlet eigenvalues on (-1, 1) and their stability under basis refinement",
        params: &["a", "basis", "count"],
        gates: &[("lambda1_refinement", AtMost, 1e-4)],
    },
    ExperimentInfo {
        name: "regularity",
        description: "boundary exponent and C^{a+0.1} cap of Dirichlet eigenfunctions",
        params: &["a", "basis", "count"],
        gates: &[("max_exponent_error", AtMost, 0.02), ("cap_misses", AtMost, 0.0)],
    },
    ExperimentInfo {
        name: "ibp",
        description: "integration-by-parts identity: constancy of the interior/boundary ratio",
        params: &["a", "basis"],
        gates: &[("ratio_spread", AtMost, 0.02), ("symmetric_pair", AtMost, 1e-6)],
    },
    ExperimentInfo {
        name: "greens",
        description: "reduced Green's formula for functions with vanishing Dirichlet traces",
        params: &["a", "basis", "trials", "seed"],
        gates: &[("max_relative_defect", AtMost, 1e-5)],
    },
    ExperimentInfo {
        name: "heat",
        description: "fractional heat flow: modal vs implicit Euler, d^a law in time, regularity cap, time smoothness",
        params: &["a", "basis", "t_final", "dt0", "levels", "cap_orders", "probes"],
        gates: &[
            ("eigen_decay_error", AtMost, 1e-10),
            ("euler_ratio_min", AtLeast, 1.8),
            ("euler_ratio_max", AtMost, 2.2),
            ("max_exponent_error", AtMost, 0.03),
            ("cap_misses", AtMost, 0.0),
            ("unbounded_orders", AtMost, 0.0),
        ],
    },
    ExperimentInfo {
        name: "feynman-kac",
        description: "killed and free stable-process Monte Carlo vs spectral / multiplier solutions",
        params: &["a", "paths", "dt", "levels", "x", "t", "basis", "seed", "free_a", "omega", "times"],
        gates: &[("killed_z", AtMost, 3.0), ("free_max_z", AtMost, 3.0)],
    },
    ExperimentInfo {
        name: "eigen-mc",
        description: "principal Dirichlet eigenvalue from survival of the killed stable process",
        params: &["a", "paths", "dt", "levels", "window", "basis", "seed"],
        gates: &[("max_z", AtMost, 3.0)],
    },
];

pub fn find_experiment(name: &str) -> Option<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Rectangular table with a header naming every column. Cells are stored
/// already formatted (numbers with 17 significant digits).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> std::result::Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }
}

/// Full double precision in exponent notation; empty for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn text(s: &str) -> String {
    s.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateResult {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub name: String,
    pub table: Table,
    pub gates: Vec<GateResult>,
    pub elapsed_s: f64,
}

impl ExperimentReport {
    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

/// Run-wide settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunContext {
    pub seed: u64,
}

impl Default for RunContext {
    fn default() -> Self {
        Self { seed: 2024 }
    }
}

/// Typed access to one experiment's parameters.
struct Params<'a> {
    experiment: &'a str,
    map: &'a Map<String, Value>,
}

impl<'a> Params<'a> {
    fn invalid(&self, name: &str, reason: impl Into<String>) -> ExperimentError {
        ExperimentError::InvalidParameter {
            experiment: self.experiment.to_string(),
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    fn f64(&self, name: &str, default: f64) -> Result<f64> {
        match self.map.get(name) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .ok_or_else(|| self.invalid(name, format!("expected a number, got {v}"))),
        }
    }

    fn positive(&self, name: &str, default: f64) -> Result<f64> {
        let v = self.f64(name, default)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(name, format!("must be positive, got {v}")))
        }
    }

    fn usize(&self, name: &str, default: usize, min: usize, max: usize) -> Result<usize> {
        let v = match self.map.get(name) {
            None => return Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| self.invalid(name, format!("expected a non-negative integer, got {v}")))?,
        };
        if (min as u64..=max as u64).contains(&v) {
            Ok(v as usize)
        } else {
            Err(self.invalid(name, format!("must be in {min}..={max}, got {v}")))
        }
    }

    fn list(&self, name: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.map.get(name) {
            None => Ok(default.to_vec()),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| self.invalid(name, format!("expected numbers, got {v}")))
                })
                .collect(),
            Some(v) => v
                .as_f64()
                .filter(|x| x.is_finite())
                .map(|x| vec![x])
                .ok_or_else(|| self.invalid(name, format!("expected a number or a list of numbers, got {v}"))),
        }
    }

    fn order(&self, value: f64) -> Result<FractionalOrder> {
        FractionalOrder::new(value).map_err(|_| ExperimentError::InvalidOrder {
            experiment: self.experiment.to_string(),
            value,
        })
    }

    fn orders(&self, name: &str, default: &[f64]) -> Result<Vec<FractionalOrder>> {
        let list = self.list(name, default)?;
        if list.is_empty() {
            return Err(self.invalid(name, "empty list"));
        }
        list.into_iter().map(|a| self.order(a)).collect()
    }

    fn seed(&self, ctx: &RunContext) -> Result<u64> {
        match self.map.get("seed") {
            None => Ok(ctx.seed),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| self.invalid("seed", format!("expected a 64-bit unsigned integer, got {v}"))),
        }
    }
}

struct Gates<'a> {
    info: &'static ExperimentInfo,
    overrides: &'a BTreeMap<String, f64>,
    results: Vec<GateResult>,
}

impl Gates<'_> {
    fn threshold(&self, name: &str) -> f64 {
        let default = self
            .info
            .gates
            .iter()
            .find(|g| g.0 == name)
            .map(|g| g.2)
            .expect("gate declared in the registry");
        self.overrides.get(name).copied().unwrap_or(default)
    }

    fn check(&mut self, name: &str, value: f64) {
        let comparison = self.info.gates.iter().find(|g| g.0 == name).expect("declared gate").1;
        let threshold = self.threshold(name);
        let pass = match comparison {
            AtMost => value <= threshold,
            AtLeast => value >= threshold,
        };
        self.results.push(GateResult {
            name: name.to_string(),
            value,
            comparison,
            threshold,
            pass,
        });
    }
}

/// Checks name, parameter names and values, and gate names without running.
pub fn validate(spec: &ExperimentSpec) -> Result<()> {
    execute(spec, &RunContext::default(), true).map(|_| ())
}

pub fn validate_config(cfg: &Config) -> Result<()> {
    cfg.experiments.iter().try_for_each(validate)
}

pub fn run_experiment(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ExperimentReport> {
    let start = Instant::now();
    let (table, gates) = execute(spec, ctx, false)?.expect("a real run produces a report");
    Ok(ExperimentReport {
        name: spec.name.clone(),
        table,
        gates,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

type Outcome = Option<(Table, Vec<GateResult>)>;

fn execute(spec: &ExperimentSpec, ctx: &RunContext, dry_run: bool) -> Result<Outcome> {
    let info = find_experiment(&spec.name).ok_or_else(|| ExperimentError::UnknownExperiment(spec.name.clone()))?;
    let params = Params {
        experiment: info.name,
        map: &spec.params,
    };
    if let Some(k) = spec.params.keys().find(|k| !info.params.contains(&k.as_str())) {
        return Err(params.invalid(k, format!("not a parameter of this experiment (expected one of {:?})", info.params)));
    }
    if let Some(k) = spec.acceptance.keys().find(|k| !info.gates.iter().any(|g| g.0 == k.as_str())) {
        let names: Vec<_> = info.gates.iter().map(|g| g.0).collect();
        return Err(params.invalid(k, format!("not a gate of this experiment (expected one of {names:?})")));
    }
    let mut gates = Gates {
        info,
        overrides: &spec.acceptance,
        results: Vec::new(),
    };
    let numerical = |source: FracError| ExperimentError::Numerical {
        experiment: info.name.to_string(),
        source,
    };
    let table = match info.name {
        "cross-validate" => exp_cross_validate(&params, &mut gates, dry_run),
        "normalization" => exp_normalization(&params, &mut gates, dry_run),
        "reducers" => exp_reducers(&params, &mut gates, dry_run),
        "model-solver" => exp_model_solver(&params, &mut gates, dry_run),
        "torsion" => exp_torsion(&params, &mut gates, dry_run),
        "eigen" => exp_eigen(&params, &mut gates, dry_run),
        "regularity" => exp_regularity(&params, &mut gates, dry_run),
        "ibp" => exp_ibp(&params, &mut gates, dry_run),
        "greens" => exp_greens(&params, &mut gates, ctx, dry_run),
        "heat" => exp_heat(&params, &mut gates, dry_run),
        "feynman-kac" => exp_feynman_kac(&params, &mut gates, ctx, dry_run),
        "eigen-mc" => exp_eigen_mc(&params, &mut gates, ctx, dry_run),
        other => unreachable!("registry entry {other} without a runner"),
    };
    match table {
        Ok(Some(t)) => Ok(Some((t, gates.results))),
        Ok(None) => Ok(None),
        Err(Step::Config(e)) => Err(e),
        Err(Step::Numerical(e)) => Err(numerical(e)),
    }
}

/// Either a configuration problem or a numerical failure inside a runner.
enum Step {
    Config(ExperimentError),
    Numerical(FracError),
}

impl From<ExperimentError> for Step {
    fn from(e: ExperimentError) -> Self {
        Step::Config(e)
    }
}

impl From<FracError> for Step {
    fn from(e: FracError) -> Self {
        Step::Numerical(e)
    }
}

type StepResult = std::result::Result<Option<Table>, Step>;

fn exp_cross_validate(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.1, 0.25, 0.5, 0.75, 0.9])?;
    let half_width = p.positive("half_width", 10.0)?;
    let points = p.usize("points", 401, 16, 1 << 20)?;
    if dry_run {
        return Ok(None);
    }
    let tol = g.threshold("max_discrepancy");
    let grid = UniformGrid1D::new(-half_width, half_width, points)?;
    let u = SampledFunction::from_fn(grid, |x| (-0.5 * x * x).exp())?;
    let mut t = Table::new(&["a", "x", "multiplier", "pv", "discrepancy"]);
    let mut worst: f64 = 0.0;
    for a in orders {
        let cv = cross_validate(a, &u, tol)?;
        let scale = cv.multiplier.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for ((x, m), q) in cv.x.iter().zip(&cv.multiplier).zip(&cv.pv) {
            t.push(vec![num(a.value()), num(*x), num(*m), num(*q), num((m - q).abs() / scale)]);
        }
        worst = worst.max(cv.max_discrepancy);
    }
    g.check("max_discrepancy", worst);
    Ok(Some(t))
}

fn exp_normalization(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.1, 0.25, 0.5, 0.75, 0.9])?;
    if dry_run {
        return Ok(None);
    }
    let mut t = Table::new(&["a", "estimate", "closed_form", "rel_diff", "mismatch"]);
    let mut worst: f64 = 0.0;
    for a in orders {
        let est = estimate_normalization_with(a, &NormalizationConfig::default())?;
        let exact = closed_form_normalization(a);
        let rel = (est.constant - exact).abs() / exact;
        worst = worst.max(rel);
        t.push(vec![num(a.value()), num(est.constant), num(exact), num(rel), num(est.mismatch)]);
    }
    g.check("max_rel_diff", worst);
    Ok(Some(t))
}

fn exp_reducers(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.25, 0.5, 0.75])?;
    let h = p.positive("h", 0.01)?;
    let length = p.positive("length", 30.0)?;
    if h > 0.25 {
        return Err(p.invalid("h", "causal reducers need h ≤ 0.25").into());
    }
    if dry_run {
        return Ok(None);
    }
    let grid = half_line_grid(length, h)?;
    let f = HalfLineFunction::plus_from_fn(grid, |x| (-x).exp())?;
    let scale = f.sample().max_abs();
    let mut t = Table::new(&["a", "t", "leakage", "round_trip"]);
    let (mut leak, mut trip): (f64, f64) = (0.0, 0.0);
    for a in orders {
        let av = a.value();
        for order in [av, -av, av + 1.0, -(av + 1.0)] {
            let fwd = xi_apply(Side::Plus, order, f.sample())?;
            let back = xi_apply(Side::Plus, -order, &fwd.output)?;
            let err = grid
                .points()
                .zip(back.output.values().iter().zip(f.sample().values()))
                .filter(|(x, _)| x.abs() > 2.0 * h)
                .map(|(_, (b, e))| (b - e).norm())
                .fold(0.0, f64::max)
                / scale;
            let l = fwd.leakage / scale;
            leak = leak.max(l);
            trip = trip.max(err);
            t.push(vec![num(av), num(order), num(l), num(err)]);
        }
    }
    g.check("max_leakage", leak);
    g.check("max_round_trip", trip);
    Ok(Some(t))
}

fn exp_model_solver(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.5])?;
    let h = p.positive("h", 0.005)?;
    let fit_h = p.positive("fit_h", 0.001)?;
    let length = p.positive("length", 30.0)?;
    for (name, v) in [("h", h), ("fit_h", fit_h)] {
        if v > 0.25 {
            return Err(p.invalid(name, "causal reducers need a step ≤ 0.25").into());
        }
    }
    if dry_run {
        return Ok(None);
    }
    let grid = half_line_grid(length, h)?;
    let fit_grid = half_line_grid(length, fit_h)?;
    let mut t = Table::new(&["a", "h", "round_trip", "residual", "leakage", "boundary_exponent"]);
    let (mut trip, mut res, mut expo): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for a in orders {
        let av = a.value();
        // manufactured solution x^a e^{-x}
        let exact = HalfLineFunction::plus_from_fn(grid, |x| x.powf(av) * (-x).exp())?;
        let f = apply_bessel_restricted(a, &exact)?;
        let sol = solve_model_dirichlet(a, &f)?;
        let (mut err, mut scale): (f64, f64) = (0.0, 0.0);
        for (x, (u, e)) in grid.points().zip(sol.u.sample().values().iter().zip(exact.sample().values())) {
            if (0.1..=3.0).contains(&x) {
                err = err.max((u - e).norm());
                scale = scale.max(e.norm());
            }
        }
        trip = trip.max(err / scale);
        res = res.max(sol.residual);
        t.push(vec![num(av), num(h), num(err / scale), num(sol.residual), num(sol.leakage), String::new()]);
        // the x^a onset must emerge from plain forcing e^{-x}
        let f = HalfLineFunction::plus_from_fn(fit_grid, |x| (-x).exp())?;
        let sol = solve_model_dirichlet(a, &f)?;
        let fit = fit_power_law_one_sided(sol.u.sample(), 0.0, 1.0, (0.1, 1.0))?;
        res = res.max(sol.residual);
        expo = expo.max((fit.exponent - av).abs());
        t.push(vec![num(av), num(fit_h), String::new(), num(sol.residual), num(sol.leakage), num(fit.exponent)]);
    }
    g.check("max_round_trip", trip);
    g.check("max_residual", res);
    g.check("max_exponent_error", expo);
    Ok(Some(t))
}

fn exp_torsion(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let points = p.usize("points", 4001, 64, 1 << 20)?;
    let basis = p.usize("basis", 16, 1, 200)?;
    if dry_run {
        return Ok(None);
    }
    let a = FractionalOrder::new(0.5)?;
    let kernel = KernelSpec::estimated(a)?;
    let grid = UniformGrid1D::new(-1.0, 1.0, points)?;
    let u = SampledFunction::from_fn(grid, |x| (1.0 - x * x).max(0.0).sqrt())?;
    let xs: Vec<f64> = (0..=36).map(|i| -0.9 + 0.05 * i as f64).collect();
    let pv = apply_pv_integral(&kernel, &u, &xs)?;
    let mut t = Table::new(&["quantity", "x", "value", "error"]);
    let mut worst: f64 = 0.0;
    for (x, v) in xs.iter().zip(&pv.values) {
        let e = (v.re - 1.0).abs();
        worst = worst.max(e);
        t.push(vec![text("pv"), num(*x), num(v.re), num(e)]);
    }
    let sys = assemble(a, basis, &AssemblyConfig::default())?;
    let sol = solve_stationary_fn(&sys, |_| 1.0)?;
    let center = sol.eval(0.0);
    t.push(vec![text("u"), num(0.0), num(center), num((center - 1.0).abs())]);
    t.push(vec![text("residual"), num(0.0), num(sol.residual), num(sol.residual)]);
    g.check("max_pv_error", worst);
    g.check("center_error", (center - 1.0).abs());
    Ok(Some(t))
}

fn exp_eigen(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.5])?;
    let basis = p.usize("basis", 60, 2, 180)?;
    let count = p.usize("count", 4, 1, 90)?;
    if 2 * count > basis {
        return Err(p.invalid("count", "must not exceed basis/2").into());
    }
    if dry_run {
        return Ok(None);
    }
    let mut t = Table::new(&["a", "k", "lambda", "refinement_change", "residual", "parity", "converged"]);
    let mut worst: f64 = 0.0;
    for a in orders {
        let sys = assemble(a, basis, &AssemblyConfig::default())?;
        let rep = eigen_solve(&sys, count)?;
        let mut all: Vec<(bool, _)> = rep.pairs.iter().map(|p| (true, p)).collect();
        all.extend(rep.flagged.iter().map(|p| (false, p)));
        all.sort_by(|x, y| x.1.lambda.total_cmp(&y.1.lambda));
        for (k, (ok, pair)) in all.iter().enumerate() {
            t.push(vec![
                num(a.value()),
                (k + 1).to_string(),
                num(pair.lambda),
                num(pair.refinement_change),
                num(pair.residual),
                pair.parity().to_string(),
                ok.to_string(),
            ]);
        }
        worst = worst.max(all[0].1.refinement_change);
    }
    g.check("lambda1_refinement", worst);
    Ok(Some(t))
}

fn exp_regularity(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.25, 0.5, 0.75])?;
    let basis = p.usize("basis", 60, 2, 180)?;
    let count = p.usize("count", 4, 1, 90)?;
    if 2 * count > basis {
        return Err(p.invalid("count", "must not exceed basis/2").into());
    }
    if dry_run {
        return Ok(None);
    }
    let mut t = Table::new(&[
        "a",
        "k",
        "lambda",
        "exponent",
        "exponent_error",
        "cap_slope",
        "cap_fires",
        "below_cap_slope",
        "below_cap_fires",
    ]);
    let (mut worst, mut misses): (f64, usize) = (0.0, 0);
    for a in orders {
        let sys = assemble(a, basis, &AssemblyConfig::default())?;
        let rep = eigen_solve(&sys, count)?;
        for (k, pair) in rep.pairs.iter().enumerate() {
            let r = boundary_regularity_probe(&rep.basis, pair)?;
            let err = r.exponent_error(a.value());
            worst = worst.max(err);
            misses += usize::from(!r.cap_confirmed());
            t.push(vec![
                num(a.value()),
                (k + 1).to_string(),
                num(pair.lambda),
                num(r.fit.exponent),
                num(err),
                num(r.above_cap.slope),
                r.above_cap.diverges.to_string(),
                num(r.below_cap.slope),
                r.below_cap.diverges.to_string(),
            ]);
        }
        misses += rep.flagged.len();
    }
    g.check("max_exponent_error", worst);
    g.check("cap_misses", misses as f64);
    Ok(Some(t))
}

/// Forcing pairs of the integration-by-parts check; the last one is symmetric.
const IBP_PAIRS: [(&str, fn(f64) -> f64, &str, fn(f64) -> f64); 6] = [
    ("1", |_| 1.0, "x", |x| x),
    ("1+x", |x| 1.0 + x, "x", |x| x),
    ("1", |_| 1.0, "x^3", |x| x * x * x),
    ("cos(x/2)+0.3x", |x| (0.5 * x).cos() + 0.3 * x, "1", |_| 1.0),
    ("1+x", |x| 1.0 + x, "cos(x/2)+0.3x", |x| (0.5 * x).cos() + 0.3 * x),
    ("1", |_| 1.0, "1", |_| 1.0),
];

fn exp_ibp(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let a = p.order(p.f64("a", 0.5)?)?;
    let basis = p.usize("basis", 16, 2, 200)?;
    if dry_run {
        return Ok(None);
    }
    let sys = assemble(a, basis, &AssemblyConfig::default())?;
    let sols: Vec<_> = IBP_PAIRS
        .iter()
        .map(|(_, f, _, h)| Ok((solve_stationary_fn(&sys, f)?, solve_stationary_fn(&sys, h)?)))
        .collect::<std::result::Result<_, FracError>>()?;
    let refs: Vec<_> = sols.iter().map(|(u, v)| (u, v)).collect();
    let rep = ibp_identity_check(&sys, &refs)?;
    let mut t = Table::new(&["f", "f_prime", "lhs", "rhs", "ratio"]);
    for ((fu, _, fv, _), e) in IBP_PAIRS.iter().zip(&rep.entries) {
        t.push(vec![text(fu), text(fv), num(e.lhs), num(e.rhs), e.ratio.map_or(String::new(), num)]);
    }
    let sym = rep.entries.last().expect("symmetric pair");
    g.check("ratio_spread", rep.spread);
    g.check("symmetric_pair", sym.lhs.abs().max(sym.rhs.abs()));
    Ok(Some(t))
}

fn exp_greens(p: &Params, g: &mut Gates, ctx: &RunContext, dry_run: bool) -> StepResult {
    use rand::{Rng, SeedableRng};
    let a = p.order(p.f64("a", 0.6)?)?;
    let basis = p.usize("basis", 20, 2, 200)?;
    let trials = p.usize("trials", 20, 1, 10_000)?;
    let seed = p.seed(ctx)?;
    if dry_run {
        return Ok(None);
    }
    let sys = assemble(a, basis, &AssemblyConfig::default())?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let unit = |k: usize| (0..basis).map(|j| if j == k { 1.0 } else { 0.0 }).collect::<Vec<_>>();
    let mut t = Table::new(&["trial", "defect", "relative_defect", "dirichlet_trace"]);
    let mut worst: f64 = 0.0;
    for trial in 0..=trials {
        let (u, v) = if trial == 0 {
            (unit(0), unit(1))
        } else {
            let mut draw = || (0..basis).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>();
            (draw(), draw())
        };
        let r = greens_reduced_check(&sys, &u, &v)?;
        worst = worst.max(r.relative_defect);
        t.push(vec![trial.to_string(), num(r.defect), num(r.relative_defect), num(r.dirichlet_trace)]);
    }
    g.check("max_relative_defect", worst);
    Ok(Some(t))
}

fn exp_heat(p: &Params, g: &mut Gates, dry_run: bool) -> StepResult {
    let a = p.order(p.f64("a", 0.5)?)?;
    let basis = p.usize("basis", 24, 4, 180)?;
    let t_final = p.positive("t_final", 1.0)?;
    let dt0 = p.positive("dt0", 0.05)?;
    let levels = p.usize("levels", 4, 2, 12)?;
    let probes = p.usize("probes", 10, 1, 1000)?;
    let cap_orders = p.list("cap_orders", &[0.25, 0.5])?;
    let cap_orders: Vec<FractionalOrder> = cap_orders.into_iter().map(|x| p.order(x)).collect::<Result<_>>()?;
    if dt0 > t_final {
        return Err(p.invalid("dt0", "must not exceed t_final").into());
    }
    if dry_run {
        return Ok(None);
    }
    let solver = HeatSolver::new(assemble(a, basis, &AssemblyConfig::default())?)?;
    let mut t = Table::new(&["check", "a", "parameter", "value"]);
    let av = a.value();
    let none = Forcing::none();

    // eigenfunction trajectory
    let phi = solver.eigen.first();
    let steps = 10;
    let traj = solver.evolve(
        &HeatConfig::new(t_final, t_final / steps as f64, HeatScheme::EigenExact)?,
        &phi.coefficients,
        &none,
    )?;
    let mut decay_err: f64 = 0.0;
    for (time, c) in traj.times.iter().zip(&traj.states) {
        let e = (-phi.lambda * time).exp();
        let err = c.iter().zip(&phi.coefficients).map(|(x, y)| (x - e * y).abs()).fold(0.0, f64::max);
        decay_err = decay_err.max(err);
        t.push(vec![text("eigen_decay_error"), num(av), num(*time), num(err)]);
    }
    g.check("eigen_decay_error", decay_err);

    // implicit Euler against the modal reference
    let torsion = solve_stationary_fn(&solver.system, |_| 1.0)?.coeffs;
    let conv = euler_convergence(&solver, &torsion, &none, t_final, dt0, levels)?;
    for (dt, e) in conv.dts.iter().zip(&conv.errors) {
        t.push(vec![text("euler_error"), num(av), num(*dt), num(*e)]);
    }
    for (dt, r) in conv.dts.iter().zip(&conv.ratios) {
        t.push(vec![text("euler_ratio"), num(av), num(*dt), num(*r)]);
    }
    let rmin = conv.ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let rmax = conv.ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    g.check("euler_ratio_min", rmin);
    g.check("euler_ratio_max", rmax);

    // d^a law uniformly on [t₀, T], t₀ = T/10
    let t0 = 0.1 * t_final;
    let probe_dt = (t_final - t0) / probes.max(2) as f64;
    let traj = solver.evolve(&HeatConfig::new(t_final, probe_dt / 4.0, HeatScheme::EigenExact)?, &torsion, &none)?;
    let times: Vec<f64> = (0..=probes).map(|j| t0 + j as f64 * (t_final - t0) / probes as f64).collect();
    let rep = boundary_exponent_in_time(&solver, &traj, &times);
    for (time, fit) in rep.times.iter().zip(&rep.fits) {
        t.push(vec![text("boundary_exponent"), num(av), num(*time), fit.as_ref().map_or(String::new(), |f| num(f.exponent))]);
    }
    let expo_err = if rep.fits.iter().all(Option::is_some) { rep.max_deviation } else { f64::INFINITY };
    g.check("max_exponent_error", expo_err);

    // the regularity cap persists in time
    let mut misses = 0usize;
    for &ca in &cap_orders {
        let s = if ca == a {
            solver.clone()
        } else {
            HeatSolver::new(assemble(ca, basis, &AssemblyConfig::default())?)?
        };
        let r = smoothness_cap_demo(&s, t_final)?;
        misses += usize::from(!r.fires());
        t.push(vec![text("cap_slope"), num(ca.value()), num(t_final), num(r.regularity.above_cap.slope)]);
        t.push(vec![text("cap_control_slope"), num(ca.value()), num(t_final), num(r.control.slope)]);
    }
    g.check("cap_misses", misses as f64);

    // smoothness in time for smooth forcing
    let forcing = Forcing::separable(phi.coefficients.clone(), |s| s.powi(4) * (-s).exp());
    let zero = vec![0.0; solver.system.size()];
    let traj = solver.evolve(&HeatConfig::new(t_final, t_final / 400.0, HeatScheme::EigenExact)?, &zero, &forcing)?;
    let mut unbounded = 0usize;
    for order in 1..=4 {
        let r = time_regularity_probe(&solver, &traj, order, t0)?;
        unbounded += usize::from(!r.bounded);
        t.push(vec![text("time_derivative_growth"), num(av), order.to_string(), num(r.growth)]);
    }
    g.check("unbounded_orders", unbounded as f64);
    Ok(Some(t))
}

fn stable_config(p: &Params, ctx: &RunContext, a: FractionalOrder) -> Result<StableConfig> {
    Ok(StableConfig {
        dt: p.positive("dt", 0.01)?,
        levels: p.usize("levels", 3, 1, 8)?,
        ..StableConfig::new(a, p.usize("paths", 100_000, 1000, 100_000_000)?, p.seed(ctx)?)
    })
}

fn exp_feynman_kac(p: &Params, g: &mut Gates, ctx: &RunContext, dry_run: bool) -> StepResult {
    let a = p.order(p.f64("a", 0.5)?)?;
    let cfg = stable_config(p, ctx, a)?;
    let x = p.f64("x", 0.0)?;
    let time = p.positive("t", 1.0)?;
    let basis = p.usize("basis", 40, 4, 180)?;
    let free_a = p.orders("free_a", &[0.25, 0.5, 0.75])?;
    let omegas = p.list("omega", &[1.0, 2.0])?;
    let times = p.list("times", &[0.25, 1.0])?;
    if x.abs() >= 1.0 {
        return Err(p.invalid("x", "must lie in (-1, 1)").into());
    }
    if dry_run {
        return Ok(None);
    }
    let mut t = Table::new(&["check", "a", "dt", "omega", "t", "mean", "std_error", "reference", "z"]);

    let solver = HeatSolver::new(assemble(a, basis, &AssemblyConfig::default())?)?;
    let phi = solver.eigen.first();
    let traj = solver.evolve(&HeatConfig::new(time, time, HeatScheme::EigenExact)?, &phi.coefficients, &Forcing::none())?;
    let reference = solver.system.basis.eval(traj.final_state(), x);
    let basis_fn = solver.system.basis.clone();
    let coeffs = phi.coefficients.clone();
    let killed = feynman_kac_killed(move |y| basis_fn.eval(&coeffs, y), x, time, &cfg)?;
    for (dt, e) in killed.dts.iter().zip(&killed.levels) {
        t.push(vec![
            text("killed_level"),
            num(a.value()),
            num(*dt),
            String::new(),
            num(time),
            num(e.mean),
            num(e.std_error),
            num(reference),
            num((e.mean - reference) / e.std_error),
        ]);
    }
    let ext = killed.extrapolated;
    let z_killed = (ext.mean - reference).abs() / ext.std_error;
    t.push(vec![
        text("killed_extrapolated"),
        num(a.value()),
        num(0.0),
        num(killed.rate),
        num(time),
        num(ext.mean),
        num(ext.std_error),
        num(reference),
        num((ext.mean - reference) / ext.std_error),
    ]);
    g.check("killed_z", z_killed);

    let mut worst: f64 = 0.0;
    for fa in free_a {
        let fcfg = StableConfig { a: fa, ..cfg };
        for &w in &omegas {
            for &s in &times {
                let e = feynman_kac_free(|y| (w * y).cos(), 0.0, s, &fcfg)?;
                let exact = (-s * w.abs().powf(fa.stable_index())).exp();
                let z = (e.mean - exact) / e.std_error;
                worst = worst.max(z.abs());
                t.push(vec![
                    text("free_cosine"),
                    num(fa.value()),
                    String::new(),
                    num(w),
                    num(s),
                    num(e.mean),
                    num(e.std_error),
                    num(exact),
                    num(z),
                ]);
            }
        }
    }
    g.check("free_max_z", worst);
    Ok(Some(t))
}

fn exp_eigen_mc(p: &Params, g: &mut Gates, ctx: &RunContext, dry_run: bool) -> StepResult {
    let orders = p.orders("a", &[0.5])?;
    let window = p.list("window", &[0.5, 2.0])?;
    let basis = p.usize("basis", 40, 4, 180)?;
    if window.len() != 2 {
        return Err(p.invalid("window", "expected [t1, t2]").into());
    }
    let configs: Vec<StableConfig> = orders.iter().map(|&a| stable_config(p, ctx, a)).collect::<Result<_>>()?;
    if dry_run {
        return Ok(None);
    }
    let mut t = Table::new(&["a", "dt", "lambda", "std_error", "reference", "z"]);
    let mut worst: f64 = 0.0;
    for (a, cfg) in orders.iter().zip(&configs) {
        let solver = HeatSolver::new(assemble(*a, basis, &AssemblyConfig::default())?)?;
        let phi = solver.eigen.first();
        let gap = solver.eigen.lambdas[1] - phi.lambda;
        let b = solver.system.basis.clone();
        let c = phi.coefficients.clone();
        let start = InitialLaw::proportional_to(move |x| b.eval(&c, x).max(0.0), (-1.0, 1.0))?;
        let est = principal_eigenvalue_mc(cfg, (window[0], window[1]), gap, &start)?;
        let x = &est.estimate;
        for (dt, e) in x.dts.iter().zip(&x.levels) {
            t.push(vec![
                num(a.value()),
                num(*dt),
                num(e.mean),
                num(e.std_error),
                num(phi.lambda),
                num((e.mean - phi.lambda) / e.std_error),
            ]);
        }
        let z = (x.extrapolated.mean - phi.lambda) / x.extrapolated.std_error;
        worst = worst.max(z.abs());
        t.push(vec![
            num(a.value()),
            num(0.0),
            num(x.extrapolated.mean),
            num(x.extrapolated.std_error),
            num(phi.lambda),
            num(z),
        ]);
    }
    g.check("max_z", worst);
    Ok(Some(t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub name: String,
    pub csv: String,
    pub pass: bool,
    pub elapsed_s: f64,
    pub gates: Vec<GateResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// `sha256:` of the configuration file bytes.
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub pass: bool,
    pub experiments: Vec<ManifestEntry>,
}

pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Creates `dir` if needed and verifies it accepts files.
pub fn prepare_output_dir(dir: &Path) -> Result<()> {
    let fail = |reason: String| ExperimentError::Output {
        path: dir.to_path_buf(),
        reason,
    };
    fs::create_dir_all(dir).map_err(|e| fail(e.to_string()))?;
    let probe = dir.join(".fraclab-write-test");
    fs::write(&probe, b"").map_err(|e| fail(e.to_string()))?;
    fs::remove_file(&probe).map_err(|e| fail(e.to_string()))?;
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| ExperimentError::Output {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Runs every experiment of a validated configuration, writing
/// `NN-name.csv` per experiment and `manifest.json` into `out_dir`.
/// `on_report` sees each report as it completes.
pub fn run_config(
    config_bytes: &[u8],
    out_dir: &Path,
    ctx: &RunContext,
    mut on_report: impl FnMut(&ExperimentReport),
) -> Result<Manifest> {
    let text = std::str::from_utf8(config_bytes).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let cfg = Config::from_json(text)?;
    validate_config(&cfg)?;
    prepare_output_dir(out_dir)?;
    let started = unix_now();
    let mut entries = Vec::with_capacity(cfg.experiments.len());
    let mut used = HashSet::new();
    for (i, spec) in cfg.experiments.iter().enumerate() {
        let report = run_experiment(spec, ctx)?;
        let file = format!("{:02}-{}.csv", i + 1, spec.name);
        debug_assert!(used.insert(file.clone()));
        let csv = report.table.to_csv().map_err(|e| ExperimentError::Output {
            path: out_dir.join(&file),
            reason: e.to_string(),
        })?;
        write_file(&out_dir.join(&file), csv.as_bytes())?;
        on_report(&report);
        entries.push(ManifestEntry {
            name: report.name.clone(),
            csv: file,
            pass: report.pass(),
            elapsed_s: report.elapsed_s,
            gates: report.gates,
        });
    }
    let manifest = Manifest {
        tool: "fraclab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: config_hash(config_bytes),
        seed: ctx.seed,
        threads: rayon::current_num_threads(),
        started_unix_s: started,
        finished_unix_s: unix_now(),
        pass: entries.iter().all(|e| e.pass),
        experiments: entries,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join("manifest.json"), &json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(json: &str) -> ExperimentSpec {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.5), "-2.5000000000000000e0");
        assert_eq!(num(f64::NAN), "");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn validation_distinguishes_errors() {
        assert!(matches!(validate(&spec(r#"{"name":"nope"}"#)), Err(ExperimentError::UnknownExperiment(_))));
        assert!(matches!(
            validate(&spec(r#"{"name":"eigen","params":{"a":1.5}}"#)),
            Err(ExperimentError::InvalidOrder { .. })
        ));
        assert!(matches!(
            validate(&spec(r#"{"name":"eigen","params":{"basis":"many"}}"#)),
            Err(ExperimentError::InvalidParameter { .. })
        ));
        assert!(matches!(
            validate(&spec(r#"{"name":"eigen","params":{"bogus":1}}"#)),
            Err(ExperimentError::InvalidParameter { .. })
        ));
        assert!(matches!(
            validate(&spec(r#"{"name":"eigen","acceptance":{"bogus":1}}"#)),
            Err(ExperimentError::InvalidParameter { .. })
        ));
        assert!(validate(&spec(r#"{"name":"eigen","params":{"a":[0.25,0.5]},"acceptance":{"lambda1_refinement":1e-3}}"#)).is_ok());
        assert!(Config::from_json(r#"{"experiments":[],"extra":1}"#).is_err());
    }

    #[test]
    fn every_registered_experiment_validates_with_defaults() {
        for info in EXPERIMENTS {
            validate(&ExperimentSpec {
                name: info.name.into(),
                params: Map::new(),
                acceptance: BTreeMap::new(),
            })
            .unwrap();
        }
    }

    #[test]
    fn gates_use_overrides() {
        let s = spec(r#"{"name":"normalization","params":{"a":0.5},"acceptance":{"max_rel_diff":1e-30}}"#);
        let r = run_experiment(&s, &RunContext::default()).unwrap();
        assert_eq!(r.gates[0].threshold, 1e-30);
        assert!(!r.pass());
        assert_eq!(r.table.columns[0], "a");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(
            config_hash(b""),
            "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
