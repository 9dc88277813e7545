use nalgebra::DMatrix;
use rayon::prelude::*;

use super::basis::WeightedBasis;
use crate::error::{FracError, Result};
use crate::numeric::quadrature::{gauss_jacobi, gauss_legendre, GaussRule};
use crate::numeric::FractionalOrder;
use crate::operators::PvQuadrature;
use crate::symbols::KernelSpec;

pub const MAX_BASIS_SIZE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssemblyRoute {
    /// `A_jk = ⟨r⁺(-Δ)^a ψ_k, ψ_j⟩` with the PV integral evaluated densely.
    #[default]
    PrincipalValue,
    /// The energy form `½c∬(u(x)-u(y))(v(x)-v(y))|x-y|^{-1-2a}`.
    BilinearForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KernelConstant {
    /// Numerically matched PV constant (see `symbols::estimate_normalization`).
    #[default]
    Derived,
    ClosedForm,
    Given(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyConfig {
    pub route: AssemblyRoute,
    pub kernel: KernelConstant,
    /// Entry-wise Cauchy tolerance (relative to the largest entry) between
    /// successive doublings of the outer Gauss–Jacobi rule.
    pub cauchy_tol: f64,
    pub max_doublings: usize,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        Self {
            route: AssemblyRoute::PrincipalValue,
            kernel: KernelConstant::Derived,
            cauchy_tol: 1e-8,
            max_doublings: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureInfo {
    pub outer_nodes: usize,
    pub cauchy_difference: f64,
    /// `max |A - Aᵀ| / max |A|` before symmetrization.
    pub asymmetry: f64,
    /// Largest entry with odd `j + k`, relative to `max |A|`.
    pub parity_leak: f64,
}

/// Galerkin system of the restricted Dirichlet problem on `(-1, 1)`.
#[derive(Debug, Clone)]
pub struct DirichletSystem {
    pub basis: WeightedBasis,
    /// Symmetrized stiffness matrix.
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub kernel: KernelSpec,
    pub config: AssemblyConfig,
    pub quadrature: QuadratureInfo,
    /// Gauss–Jacobi `(a, a)` nodes and weights of the outer rule.
    pub nodes: GaussRule,
    /// `(-Δ)^a ψ_k` at the outer nodes (rows: nodes, columns: `k`).
    pub operator_at_nodes: DMatrix<f64>,
}

impl DirichletSystem {
    pub fn a(&self) -> FractionalOrder {
        self.basis.a()
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    /// `(-Δ)^a ψ_k(x)` for every `x` in `xs` (rows) and every `k` (columns).
    pub fn operator_matrix(&self, xs: &[f64]) -> DMatrix<f64> {
        operator_matrix(&self.basis, &self.kernel, xs)
    }
}

fn resolve_kernel(a: FractionalOrder, k: KernelConstant) -> Result<KernelSpec> {
    match k {
        KernelConstant::Derived => KernelSpec::estimated(a),
        KernelConstant::ClosedForm => Ok(KernelSpec::closed_form(a)),
        KernelConstant::Given(c) => KernelSpec::new(a, c),
    }
}

pub fn assemble(a: FractionalOrder, n: usize, cfg: &AssemblyConfig) -> Result<DirichletSystem> {
    if n == 0 || n > MAX_BASIS_SIZE {
        return Err(FracError::InvalidInput(format!(
            "basis size must be in 1..={MAX_BASIS_SIZE}, got {n}"
        )));
    }
    let kernel = resolve_kernel(a, cfg.kernel)?;
    let basis = WeightedBasis::new(a, n);
    let av = a.value();

    // outer rule doubled until the PV stiffness settles
    let mut q = n + 8;
    let mut rule = gauss_jacobi(q, av, av)?;
    let mut f = operator_matrix(&basis, &kernel, &rule.nodes);
    let mut a_pv = project(&basis, &rule, &f);
    let mut cauchy = f64::INFINITY;
    for _ in 0..cfg.max_doublings {
        let q2 = 2 * q;
        let rule2 = gauss_jacobi(q2, av, av)?;
        let f2 = operator_matrix(&basis, &kernel, &rule2.nodes);
        let a2 = project(&basis, &rule2, &f2);
        cauchy = (&a2 - &a_pv).amax() / a2.amax();
        q = q2;
        rule = rule2;
        f = f2;
        a_pv = a2;
        if cauchy < cfg.cauchy_tol {
            break;
        }
    }
    if cauchy >= cfg.cauchy_tol {
        return Err(FracError::NotConverged {
            what: "stiffness assembly",
            best: a_pv[(0, 0)],
            mismatch: cauchy,
        });
    }

    let raw = match cfg.route {
        AssemblyRoute::PrincipalValue => a_pv,
        AssemblyRoute::BilinearForm => bilinear_form_matrix(&basis, &kernel)?,
    };
    let scale = raw.amax();
    let asymmetry = (&raw - raw.transpose()).amax() / scale;
    let mut parity_leak: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            if (j + k) % 2 == 1 {
                parity_leak = parity_leak.max(raw[(j, k)].abs() / scale);
            }
        }
    }
    let stiffness = (&raw + raw.transpose()) * 0.5;
    let mass = mass_matrix(&basis)?;
    Ok(DirichletSystem {
        basis,
        stiffness,
        mass,
        kernel,
        config: cfg.clone(),
        quadrature: QuadratureInfo {
            outer_nodes: q,
            cauchy_difference: cauchy,
            asymmetry,
            parity_leak,
        },
        nodes: rule,
        operator_at_nodes: f,
    })
}

/// `(-Δ)^a ψ_k(x_i)` by dense PV quadrature, parallel over points.
pub fn operator_matrix(basis: &WeightedBasis, kernel: &KernelSpec, xs: &[f64]) -> DMatrix<f64> {
    let n = basis.size();
    let quad = PvQuadrature::for_frequency(n as f64);
    let a = kernel.a.value();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            quad.integrate_multi(a, x, &[-1.0, 1.0], (-1.0, 1.0), n, |y, out| basis.values(y, out))
                .into_iter()
                .map(|v| kernel.constant * v)
                .collect()
        })
        .collect();
    DMatrix::from_fn(xs.len(), n, |i, k| rows[i][k])
}

/// `A_jk = ∫ (-Δ)^aψ_k · ψ_j = Σ_q w_q p_j(x_q) F_qk` with the `(a, a)` rule.
fn project(basis: &WeightedBasis, rule: &GaussRule, f: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.size();
    let mut p = vec![0.0; n];
    let mut wp = DMatrix::zeros(n, rule.len());
    for (q, (&x, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        basis.poly_values(x, &mut p);
        for j in 0..n {
            wp[(j, q)] = w * p[j];
        }
    }
    wp * f
}

/// Gram matrix `∫ ψ_j ψ_k`, exact with the `(2a, 2a)` rule.
pub fn mass_matrix(basis: &WeightedBasis) -> Result<DMatrix<f64>> {
    let n = basis.size();
    let av = basis.a().value();
    let rule = gauss_jacobi(n + 2, 2.0 * av, 2.0 * av)?;
    Ok(weighted_gram(basis, &rule, |p, x, out| basis.poly_values(x, &mut out[..p])))
}

fn weighted_gram(
    basis: &WeightedBasis,
    rule: &GaussRule,
    eval: impl Fn(usize, f64, &mut [f64]),
) -> DMatrix<f64> {
    let n = basis.size();
    let mut v = vec![0.0; n];
    let mut g = DMatrix::zeros(n, n);
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        eval(n, x, &mut v);
        for j in 0..n {
            let wj = w * v[j];
            for k in 0..n {
                g[(j, k)] += wj * v[k];
            }
        }
    }
    g
}

/// Panels on `[lo, hi]` graded geometrically (ratio 1/2) towards both ends
/// down to `min_ratio·(hi - lo)`, none wider than `max_panel`.
fn graded(lo: f64, hi: f64, min_ratio: f64, max_panel: f64) -> Vec<(f64, f64)> {
    let len = hi - lo;
    let mut cuts = vec![lo, lo + 0.5 * len, hi];
    let mut w = 0.5 * len;
    while w > min_ratio * len {
        w *= 0.5;
        cuts.push(lo + w);
        cuts.push(hi - w);
    }
    cuts.sort_by(|p, q| p.total_cmp(q));
    cuts.dedup();
    let mut out = Vec::new();
    for c in cuts.windows(2) {
        let pieces = ((c[1] - c[0]) / max_panel).ceil().max(1.0) as usize;
        let step = (c[1] - c[0]) / pieces as f64;
        for i in 0..pieces {
            out.push((c[0] + i as f64 * step, c[0] + (i + 1) as f64 * step));
        }
    }
    out
}

/// Energy-form stiffness for the self-check route:
/// `c [∫_0^2 s^{-1-2a} J(s) ds + ∫ ψ_jψ_k κ]`, with
/// `J(s) = ∫_{-1}^{1-s} (ψ_j(x)-ψ_j(x+s))(ψ_k(x)-ψ_k(x+s)) dx` and the
/// exterior weight `κ(x) = ((1-x)^{-2a} + (1+x)^{-2a})/(2a)`.
pub fn bilinear_form_matrix(basis: &WeightedBasis, kernel: &KernelSpec) -> Result<DMatrix<f64>> {
    let n = basis.size();
    let av = basis.a().value();
    let gl = gauss_legendre(12);
    let max_panel = (2.0 / n as f64).min(0.1);
    let s_min_ratio = 5e-11;
    // the innermost panel [0, s_min] is handled analytically below
    let mut s_panels = graded(0.0, 2.0, s_min_ratio, max_panel);
    let s_min = s_panels.remove(0).1;
    let s_nodes: Vec<(f64, f64)> = s_panels
        .into_iter()
        .flat_map(|(lo, hi)| gl.mapped(lo, hi).collect::<Vec<_>>())
        .collect();

    let interior: DMatrix<f64> = s_nodes
        .par_iter()
        .map(|&(s, ws)| {
            let mut j = DMatrix::zeros(n, n);
            let (mut u0, mut u1) = (vec![0.0; n], vec![0.0; n]);
            let mut d = vec![0.0; n];
            for (plo, phi) in graded(-1.0, 1.0 - s, 1e-10, max_panel) {
                for (x, wx) in gl.mapped(plo, phi) {
                    basis.values(x, &mut u0);
                    basis.values(x + s, &mut u1);
                    for k in 0..n {
                        d[k] = u0[k] - u1[k];
                    }
                    for r in 0..n {
                        let dr = wx * d[r];
                        for c in 0..n {
                            j[(r, c)] += dr * d[c];
                        }
                    }
                }
            }
            j * (ws * s.powf(-1.0 - 2.0 * av))
        })
        .reduce(|| DMatrix::zeros(n, n), |p, q| p + q);

    // exterior interaction, exact with one-sided Jacobi weights
    let right = gauss_jacobi(n + 2, 0.0, 2.0 * av)?;
    let left = gauss_jacobi(n + 2, 2.0 * av, 0.0)?;
    let poly = |p: usize, x: f64, out: &mut [f64]| basis.poly_values(x, &mut out[..p]);
    let exterior = (weighted_gram(basis, &right, poly) + weighted_gram(basis, &left, poly)) / (2.0 * av);

    // J(s) ≈ s²∫ψ_j'ψ_k' below s_min when that integral exists; otherwise
    // J(s) = O(s^{1+2a}) and the dropped piece is O(s_min)
    let local = if av > 0.5 {
        let rule = gauss_jacobi(n + 4, 2.0 * av - 2.0, 2.0 * av - 2.0)?;
        let grad = weighted_gram(basis, &rule, |p, x, out| {
            // ψ_k' = (1-x²)^{a-1} q_k,  q_k = -2a x p_k + (1-x²) p_k'
            let mut pv = vec![0.0; p];
            let mut dv = vec![0.0; p];
            basis.poly_values(x, &mut pv);
            basis.poly_derivatives(x, &mut dv);
            for k in 0..p {
                out[k] = -2.0 * av * x * pv[k] + (1.0 - x * x) * dv[k];
            }
        });
        grad * (s_min.powf(2.0 - 2.0 * av) / (2.0 - 2.0 * av))
    } else {
        DMatrix::zeros(n, n)
    };
    Ok((interior + exterior + local) * kernel.constant)
}
