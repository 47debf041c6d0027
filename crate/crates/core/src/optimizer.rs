//! Preconditioned gradient descent on the bottom curve.
//!
//! Every iteration re-meshes the domain, solves state and adjoint, forms the
//! regularized gradient `DJ`, smooths it with the inverse Dirichlet Laplacian
//! and moves the curve by `−τ φ`.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjoint::solve_adjoint;
use crate::assembly::Spaces;
use crate::error::{Error, Result};
use crate::geometry::{cells_for_size, BoundaryCurve, Mesh};
use crate::shape::{directional_derivative, shape_density, GradientSample};
use crate::state::{evaluate_cost, CostBreakdown, Penalties, PhysicalParams, PicardOptions, StateSolution, StateSolver};
use crate::adjoint::AdjointSolution;

#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    /// Step size `τ`.
    pub tau: f64,
    /// Number of curve updates.
    pub max_iters: usize,
    /// Stop when `‖φ‖∞` drops below this.
    pub stop_tol: f64,
    /// Mesh size.
    pub h: f64,
    /// Curve grid intervals; `None` matches the mesh, `⌈1/h⌉`.
    pub curve_n: Option<usize>,
    pub penalties: Penalties,
    pub physical: PhysicalParams,
    pub picard: PicardOptions,
    /// Curve snapshot every this many iterations (0 disables).
    pub snapshot_stride: usize,
    pub preset: Option<u8>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            tau: 1e-3,
            max_iters: 1000,
            stop_tol: 1e-7,
            h: 0.03,
            curve_n: None,
            penalties: Penalties::default(),
            physical: PhysicalParams::default(),
            picard: PicardOptions::default(),
            snapshot_stride: 100,
            preset: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        let positive = [("tau", self.tau), ("stop_tol", self.stop_tol), ("h", self.h)];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.h > 0.5 {
            return Err(Error::config("h", format!("must not exceed 0.5, got {}", self.h)));
        }
        if matches!(self.curve_n, Some(n) if n < 2) {
            return Err(Error::config("curve_n", "needs at least 2 intervals"));
        }
        let p = &self.penalties;
        for (key, v) in [("lambda1", p.lambda1), ("lambda2", p.lambda2), ("lambda3", p.lambda3), ("nu", p.nu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be non-negative, got {v}")));
            }
        }
        if let Some(c) = self.preset {
            if !(1..=5).contains(&c) {
                return Err(Error::config("case", format!("unknown case {c}, expected 1 to 5")));
            }
        }
        Ok(())
    }

    pub fn curve_intervals(&self) -> usize {
        self.curve_n.unwrap_or_else(|| cells_for_size(self.h))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub j1: f64,
    pub curve_energy: f64,
    pub mean_sq: f64,
    pub obstacle: f64,
    pub total: f64,
    pub phi_inf: f64,
    pub picard_iters: usize,
    /// Seconds since the start of the run.
    pub wallclock_s: f64,
}

impl IterationRecord {
    pub fn new(iter: usize, cost: &CostBreakdown, phi_inf: f64, picard_iters: usize, wallclock_s: f64) -> Self {
        Self {
            iter,
            j1: cost.j1,
            curve_energy: cost.curve_energy,
            mean_sq: cost.mean_sq,
            obstacle: cost.obstacle,
            total: cost.total,
            phi_inf,
            picard_iters,
            wallclock_s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trace {
    pub config: OptimizerConfig,
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<(usize, BoundaryCurve)>,
}

/// Everything computed at one curve.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub cost: CostBreakdown,
    pub gradient: GradientSample,
    pub state: StateSolution,
    pub adjoint: AdjointSolution,
}

/// Cost of the reduced functional at `curve` (state solve only).
pub fn reduced_cost(curve: &BoundaryCurve, cfg: &OptimizerConfig) -> Result<(CostBreakdown, StateSolution)> {
    let mesh = Mesh::build(curve, cfg.h)?;
    let state = StateSolver::new(Spaces::new(mesh), cfg.physical.clone())?.solve(cfg.picard)?;
    Ok((evaluate_cost(&state, curve, &cfg.penalties), state))
}

/// Cost, state, adjoint and gradient at `curve`.
pub fn evaluate(curve: &BoundaryCurve, cfg: &OptimizerConfig) -> Result<Evaluation> {
    let mesh = Mesh::build(curve, cfg.h)?;
    let solver = StateSolver::new(Spaces::new(mesh), cfg.physical.clone())?;
    let state = solver.solve(cfg.picard)?;
    let adjoint = solve_adjoint(&solver, &state)?;
    let f = shape_density(&state, &adjoint, curve, &cfg.physical)?;
    Ok(Evaluation {
        cost: evaluate_cost(&state, curve, &cfg.penalties),
        gradient: GradientSample::new(curve, f, &cfg.penalties),
        state,
        adjoint,
    })
}

/// A failed descent, with everything recorded before the failure.
#[derive(Debug, thiserror::Error)]
#[error("descent stopped at iteration {iter}: {source}")]
pub struct DescentError {
    pub iter: usize,
    #[source]
    pub source: Error,
    pub trace: Trace,
    /// The iterate at which the failure happened.
    pub curve: BoundaryCurve,
}

/// `γ ← γ − τφ` with the endpoints kept at zero.
pub fn step(curve: &BoundaryCurve, phi: &[f64], tau: f64) -> Result<BoundaryCurve> {
    let n = curve.n_intervals();
    let mut v: Vec<f64> = curve.values().iter().zip(phi).map(|(g, p)| g - tau * p).collect();
    v[0] = 0.0;
    v[n] = 0.0;
    BoundaryCurve::new(v)
}

/// Runs the descent from `gamma0`. `observer` sees every record as it is
/// produced, with the curve when a snapshot is due; an observer error aborts.
pub fn descend_with(
    gamma0: &BoundaryCurve,
    cfg: &OptimizerConfig,
    mut observer: impl FnMut(&IterationRecord, Option<&BoundaryCurve>) -> Result<()>,
) -> std::result::Result<(BoundaryCurve, Trace), Box<DescentError>> {
    let start = Instant::now();
    let mut trace = Trace {
        config: cfg.clone(),
        records: Vec::new(),
        snapshots: Vec::new(),
    };
    let fail = |iter: usize, source: Error, trace: Trace, curve: BoundaryCurve| {
        Box::new(DescentError { iter, source, trace, curve })
    };
    if let Err(e) = cfg.validate() {
        return Err(fail(0, e, trace, gamma0.clone()));
    }
    if gamma0.n_intervals() != cfg.curve_intervals() {
        let e = Error::config(
            "curve_n",
            format!("initial curve has {} intervals, configuration expects {}", gamma0.n_intervals(), cfg.curve_intervals()),
        );
        return Err(fail(0, e, trace, gamma0.clone()));
    }

    let mut gamma = gamma0.clone();
    for iter in 0..cfg.max_iters {
        let ev = match evaluate(&gamma, cfg) {
            Ok(ev) => ev,
            Err(e) => return Err(fail(iter, e, trace, gamma)),
        };
        let phi_inf = ev.gradient.phi_inf_norm();
        let rec = IterationRecord::new(iter, &ev.cost, phi_inf, ev.state.picard_iters, start.elapsed().as_secs_f64());
        let snap = cfg.snapshot_stride > 0 && iter % cfg.snapshot_stride == 0;
        if let Err(e) = observer(&rec, snap.then_some(&gamma)) {
            return Err(fail(iter, e, trace, gamma));
        }
        trace.records.push(rec);
        if snap {
            trace.snapshots.push((iter, gamma.clone()));
        }
        if phi_inf < cfg.stop_tol {
            break;
        }
        gamma = match step(&gamma, &ev.gradient.phi, cfg.tau) {
            Ok(g) => g,
            Err(e) => return Err(fail(iter, e, trace, gamma)),
        };
    }
    Ok((gamma, trace))
}

pub fn descend(gamma0: &BoundaryCurve, cfg: &OptimizerConfig) -> std::result::Result<(BoundaryCurve, Trace), Box<DescentError>> {
    descend_with(gamma0, cfg, |_, _| Ok(()))
}

/// Initial curve of one of the five preset cases.
pub fn initial_curve(case_id: u8, n: usize) -> Result<BoundaryCurve> {
    let f: fn(f64) -> f64 = match case_id {
        1 => |_| 0.0,
        2 => |x| -0.1 * (3.0 * PI * x).sin(),
        3 => |x| -0.1 * (5.0 * PI * x).sin(),
        4 => |x| -0.01 * (7.0 * PI * x).sin(),
        5 => |x| -0.1 * (5.0 * PI * x).sin() * (-3.0 * x).exp(),
        _ => return Err(Error::config("case", format!("unknown case {case_id}, expected 1 to 5"))),
    };
    BoundaryCurve::from_fn(n, f)
}

/// Runs preset `case_id` with the settings in `cfg`.
pub fn run_case(case_id: u8, cfg: &OptimizerConfig) -> std::result::Result<(BoundaryCurve, Trace), Box<DescentError>> {
    let mut cfg = cfg.clone();
    cfg.preset = Some(case_id);
    let gamma0 = initial_curve(case_id, cfg.curve_intervals()).map_err(|e| {
        Box::new(DescentError {
            iter: 0,
            source: e,
            trace: Trace {
                config: cfg.clone(),
                records: Vec::new(),
                snapshots: Vec::new(),
            },
            curve: BoundaryCurve::flat(cfg.curve_intervals().max(1)),
        })
    })?;
    descend(&gamma0, &cfg)
}

/// Smooth random direction `Σₖ aₖ sin(kπξ)/k`, `k = 1..4`, vanishing at the
/// endpoints.
pub fn random_direction(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let v: f64 = a.iter().enumerate().map(|(k, ak)| ak * ((k + 1) as f64 * PI * x).sin() / (k + 1) as f64).sum();
            if i == 0 || i == n { 0.0 } else { v }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckRow {
    pub adjoint: f64,
    pub finite_difference: f64,
    pub rel_error: f64,
}

/// Compares `⟨DJ, h⟩` with the central difference
/// `(Ĵ(γ + s h) − Ĵ(γ − s h)) / 2s` of the total cost along `dirs` random
/// directions drawn from `seed`.
pub fn gradient_check(curve: &BoundaryCurve, cfg: &OptimizerConfig, step_size: f64, dirs: usize, seed: u64) -> Result<Vec<GradCheckRow>> {
    let ev = evaluate(curve, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = curve.n_intervals();
    let mut rows = Vec::with_capacity(dirs);
    for _ in 0..dirs {
        let h = random_direction(n, &mut rng);
        let adjoint = directional_derivative(&ev.gradient.f, curve, &cfg.penalties, &h)?;
        let shifted = |s: f64| -> Result<f64> {
            let v: Vec<f64> = curve.values().iter().zip(&h).map(|(g, d)| g + s * d).collect();
            Ok(reduced_cost(&BoundaryCurve::new(v)?, cfg)?.0.total)
        };
        let fd = (shifted(step_size)? - shifted(-step_size)?) / (2.0 * step_size);
        rows.push(GradCheckRow {
            adjoint,
            finite_difference: fd,
            rel_error: (adjoint - fd).abs() / fd.abs().max(f64::MIN_POSITIVE),
        });
    }
    Ok(rows)
}
