//! Linear adjoint system `(w, q, S)` around a converged state.
//!
//! The operator is the transpose of the linearized state operator:
//!
//! ```text
//! (1/Re) A w + (Cᵀ + Rᵀ) w − Bᵀ q + Eᵀ S        = 0
//! −B w                                          = 0   (∫q = 0)
//! −(Gr/Re²) Mₑᵀ w + (1/(Re Pr)) K S + Dᵀ S      = M (T − I)
//! ```
//!
//! with `C = b₁(v, ·, ·)`, `R = b₁(·, v, ·)`, `D = b₂(v, ·, ·)` and
//! `E = b₂(·, T, ·)`. `w` and `S` vanish on the whole boundary.

use crate::assembly::{
    b2_velocity_form, convection, mass, reaction_b1, relative_residual, FEFunction, SparseLu,
    SparseOperator, TripletBuilder,
};
use crate::error::{Error, Result};
use crate::state::{mean_temperature, StateSolution, StateSolver};

#[derive(Debug, Clone)]
pub struct AdjointSolution {
    pub w: FEFunction,
    /// Zero-mean adjoint pressure.
    pub q: FEFunction,
    pub s: FEFunction,
    /// Relative residual of the assembled monolithic system.
    pub residual_norm: f64,
    /// `‖B w‖∞`
    pub divergence: f64,
    /// Iterations used (1 for the monolithic solve).
    pub iterations: usize,
}

/// Linearized operators at a state, shared by the monolithic and the
/// fixed-point solvers.
struct Linearization {
    /// `(Cᵀ + Rᵀ)`
    transport_v: SparseOperator,
    /// `Eᵀ`, velocity rows by temperature columns.
    e_t: SparseOperator,
    /// `Dᵀ`
    transport_t: SparseOperator,
}

impl Linearization {
    fn new(solver: &StateSolver, state: &StateSolution) -> Self {
        let sp = solver.spaces();
        let c = convection(&sp.velocity, &state.v);
        let r = reaction_b1(&sp.velocity, &state.v);
        Self {
            transport_v: c.add_scaled(&r, 1.0).transpose(),
            e_t: b2_velocity_form(&sp.velocity, &sp.temperature, &state.t).transpose(),
            transport_t: convection(&sp.temperature, &state.v).transpose(),
        }
    }
}

/// `M (T − I)`, the derivative of `½‖T − I‖²` with respect to the
/// temperature coefficients (the `I` variation integrates to zero).
pub fn adjoint_source(state: &StateSolution) -> Vec<f64> {
    let ts = state.t.space();
    let i_t = mean_temperature(&state.t);
    let centered: Vec<f64> = state.t.coeffs().iter().map(|c| c - i_t).collect();
    mass(ts).matvec(&centered)
}

/// Factored monolithic adjoint operator.
pub struct AdjointSystem<'a> {
    solver: &'a StateSolver,
    matrix: SparseOperator,
    lu: SparseLu,
    mask: Vec<bool>,
}

impl std::fmt::Debug for AdjointSystem<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdjointSystem").field("dim", &self.matrix.nrows()).finish()
    }
}

impl<'a> AdjointSystem<'a> {
    pub fn new(solver: &'a StateSolver, state: &StateSolution) -> Result<Self> {
        let sp = solver.spaces();
        let (nv, np, nt) = (sp.velocity.n_dofs(), sp.pressure.n_dofs(), sp.temperature.n_dofs());
        let (o_q, o_mu, o_s) = (nv, nv + np, nv + np + 1);
        let n = o_s + nt;
        let lin = Linearization::new(solver, state);
        let params = solver.params();

        let b = solver.divergence_operator();
        let a = solver.viscous_operator();
        let k = solver.temperature_stiffness();
        let m = solver.pressure_mean();
        let mut t = TripletBuilder::with_capacity(
            n,
            n,
            a.nnz() + lin.transport_v.nnz() + 2 * b.nnz() + lin.e_t.nnz() + 2 * k.nnz() + solver.buoyancy_operator().nnz(),
        );
        t.add_block(0, 0, a, 1.0);
        t.add_block(0, 0, &lin.transport_v, 1.0);
        t.add_block_transposed(0, o_q, b, -1.0);
        t.add_block(0, o_s, &lin.e_t, 1.0);
        t.add_block(o_q, 0, b, -1.0);
        for (i, &mi) in m.iter().enumerate() {
            t.add(o_q + i, o_mu, mi);
            t.add(o_mu, o_q + i, mi);
        }
        t.add_block_transposed(o_s, 0, solver.buoyancy_operator(), -1.0);
        t.add_block(o_s, o_s, k, params.conductivity());
        t.add_block(o_s, o_s, &lin.transport_t, 1.0);

        let mut mask = vec![false; n];
        mask[..nv].copy_from_slice(&sp.velocity.boundary_mask());
        mask[o_s..].copy_from_slice(&sp.temperature.boundary_mask());
        let matrix = t.finalize().eliminate(&mask);
        let lu = SparseLu::factor(&matrix).map_err(|e| match e {
            Error::Solver(msg) => Error::Solver(format!(
                "adjoint system of size {n} (Re = {}, Gr = {}): {msg}",
                params.re, params.gr
            )),
            other => other,
        })?;
        Ok(Self { solver, matrix, lu, mask })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Solves with `source` as the right-hand side of the temperature rows.
    pub fn solve(&self, source: &[f64]) -> Result<AdjointSolution> {
        let sp = self.solver.spaces();
        let (nv, np) = (sp.velocity.n_dofs(), sp.pressure.n_dofs());
        let o_s = nv + np + 1;
        let mut rhs = vec![0.0; self.dim()];
        rhs[o_s..].copy_from_slice(source);
        for (r, &m) in rhs.iter_mut().zip(&self.mask) {
            if m {
                *r = 0.0;
            }
        }
        let x = self.lu.solve(&rhs)?;
        let residual_norm = if rhs.iter().all(|&r| r == 0.0) {
            0.0
        } else {
            relative_residual(&self.matrix, &x, &rhs)
        };
        let w = FEFunction::new(sp.velocity.clone(), x[..nv].to_vec())?;
        let divergence = inf_norm(&self.solver.divergence_operator().matvec(w.coeffs()));
        Ok(AdjointSolution {
            w,
            q: FEFunction::new(sp.pressure.clone(), x[nv..nv + np].to_vec())?,
            s: FEFunction::new(sp.temperature.clone(), x[o_s..].to_vec())?,
            residual_norm,
            divergence,
            iterations: 1,
        })
    }
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One monolithic sparse solve of the adjoint system at `state`.
pub fn solve_adjoint(solver: &StateSolver, state: &StateSolution) -> Result<AdjointSolution> {
    AdjointSystem::new(solver, state)?.solve(&adjoint_source(state))
}

/// Block Gauss-Seidel iteration: a Stokes solve for `(w, q)` with the
/// coupling terms of the previous iterate on the right, then a Poisson
/// solve for `S`. Converges in the small-data regime.
pub fn fixed_point_adjoint(
    solver: &StateSolver,
    state: &StateSolution,
    tol: f64,
    max_iter: usize,
) -> Result<AdjointSolution> {
    let sp = solver.spaces();
    let (nv, np) = (sp.velocity.n_dofs(), sp.pressure.n_dofs());
    let lin = Linearization::new(solver, state);
    let source = adjoint_source(state);
    let v_mask = sp.velocity.boundary_mask();
    let t_mask = sp.temperature.boundary_mask();
    let buoy = solver.buoyancy_operator();

    let mut w = FEFunction::zeros(sp.velocity.clone());
    let mut s = FEFunction::zeros(sp.temperature.clone());
    let mut history = Vec::new();
    for k in 1..=max_iter {
        let tw = lin.transport_v.matvec(w.coeffs());
        let es = lin.e_t.matvec(s.coeffs());
        let mut rhs = vec![0.0; nv + np + 1];
        for i in 0..nv {
            rhs[i] = if v_mask[i] { 0.0 } else { -tw[i] - es[i] };
        }
        let x = solver.stokes_lu().solve(&rhs)?;
        let w1 = FEFunction::new(sp.velocity.clone(), x[..nv].to_vec())?;
        let q1 = FEFunction::new(sp.pressure.clone(), x[nv..nv + np].to_vec())?;

        let gw = buoy.matvec_transposed(w1.coeffs());
        let ds = lin.transport_t.matvec(s.coeffs());
        let rhs_t: Vec<f64> = (0..source.len())
            .map(|i| if t_mask[i] { 0.0 } else { source[i] + gw[i] - ds[i] })
            .collect();
        let s1 = FEFunction::new(sp.temperature.clone(), solver.heat_lu().solve(&rhs_t)?)?;

        let inc = solver.increment(&w, &s, &w1, &s1);
        history.push(inc);
        w = w1;
        s = s1;
        if inc < tol {
            let divergence = inf_norm(&solver.divergence_operator().matvec(w.coeffs()));
            return Ok(AdjointSolution {
                w,
                q: q1,
                s,
                residual_norm: inc,
                divergence,
                iterations: k,
            });
        }
        if !inc.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        what: "adjoint fixed-point iteration",
        iters: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
