//! Steady Boussinesq state by fixed-point (Picard) iteration, and the cost.
//!
//! Each iteration solves a Stokes problem with the buoyancy and convection of
//! the previous iterate moved to the right-hand side, then a Poisson problem
//! for the lifted temperature `T̂ = T − T_d` with the new velocity. Both
//! matrices are factored once per mesh.

use std::fmt;
use std::sync::Arc;

use crate::assembly::{
    assemble_stokes, buoyancy, convection_vector, interpolate_td, load_vector, mean_functional,
    stiffness, Element, FEFunction, SparseLu, SparseOperator, Spaces, TripletBuilder,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Mesh};

pub type VectorSource = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
pub type ScalarSource = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;

/// Nondimensional groups and data of the Boussinesq system.
#[derive(Clone)]
pub struct PhysicalParams {
    pub re: f64,
    pub pr: f64,
    pub gr: f64,
    /// Amplitude of the temperature lift `α x₁(1 − x₁)(1 − x₂)`.
    pub alpha: f64,
    /// Body force; zero when absent.
    pub g1: Option<VectorSource>,
    /// Heat source; zero when absent.
    pub g2: Option<ScalarSource>,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            re: 1.0,
            pr: 0.7,
            gr: 1.0,
            alpha: 10.0,
            g1: None,
            g2: None,
        }
    }
}

impl fmt::Debug for PhysicalParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhysicalParams")
            .field("re", &self.re)
            .field("pr", &self.pr)
            .field("gr", &self.gr)
            .field("alpha", &self.alpha)
            .field("g1", &self.g1.is_some())
            .field("g2", &self.g2.is_some())
            .finish()
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("re", self.re), ("pr", self.pr)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        // Gr = 0 switches buoyancy off and is a legitimate limit
        if !(self.gr >= 0.0 && self.gr.is_finite()) {
            return Err(Error::config("gr", format!("must be non-negative, got {}", self.gr)));
        }
        if !self.alpha.is_finite() {
            return Err(Error::config("alpha", "must be finite"));
        }
        Ok(())
    }

    /// `Gr / Re²`
    pub fn buoyancy_factor(&self) -> f64 {
        self.gr / (self.re * self.re)
    }

    /// `1 / (Re Pr)`
    pub fn conductivity(&self) -> f64 {
        1.0 / (self.re * self.pr)
    }
}

/// Weights of the curve terms of the cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penalties {
    /// Curve energy `½λ₁ ∫ γ'²`.
    pub lambda1: f64,
    /// Volume term `½λ₂ (∫ γ)²`.
    pub lambda2: f64,
    /// Obstacle term `½λ₃ ∫ ((γ − 1 + ν)⁺)²`.
    pub lambda3: f64,
    pub nu: f64,
}

impl Default for Penalties {
    fn default() -> Self {
        Self {
            lambda1: 0.5,
            lambda2: 1.5e4,
            lambda3: 1e3,
            nu: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StateSolution {
    pub v: FEFunction,
    /// Zero-mean pressure.
    pub p: FEFunction,
    /// Lifted temperature, zero on the boundary.
    pub t_hat: FEFunction,
    /// `T̂ + T_d`
    pub t: FEFunction,
    pub picard_iters: usize,
    pub final_increment: f64,
    /// Relative increment of every iteration.
    pub increments: Vec<f64>,
    /// `‖B v‖∞` of the final velocity.
    pub divergence: f64,
}

/// Pre-factored operators of the state problem on one mesh.
pub struct StateSolver {
    spaces: Spaces,
    params: PhysicalParams,
    a_visc: SparseOperator,
    b_div: SparseOperator,
    mean: Vec<f64>,
    buoy: SparseOperator,
    /// Unit stiffness on the velocity and temperature spaces.
    k_vel: SparseOperator,
    k_temp: SparseOperator,
    v_mask: Vec<bool>,
    t_mask: Vec<bool>,
    stokes: SparseLu,
    heat: SparseLu,
    td: FEFunction,
    g1: Vec<f64>,
    g2: Vec<f64>,
}

impl fmt::Debug for StateSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSolver")
            .field("velocity_dofs", &self.spaces.velocity.n_dofs())
            .field("pressure_dofs", &self.spaces.pressure.n_dofs())
            .field("params", &self.params)
            .finish()
    }
}

/// Symmetric gauge-fixed saddle matrix
/// `[[A, −Bᵀ, 0], [−B, 0, m], [0, mᵀ, 0]]` with homogeneous Dirichlet rows
/// and columns of `A` eliminated.
pub(crate) fn saddle_matrix(a: &SparseOperator, b: &SparseOperator, m: &[f64], v_mask: &[bool]) -> SparseOperator {
    let nv = a.nrows();
    let np = b.nrows();
    let n = nv + np + 1;
    let mut t = TripletBuilder::with_capacity(n, n, a.nnz() + 2 * b.nnz() + 2 * np);
    t.add_block(0, 0, &a.eliminate(v_mask), 1.0);
    for (i, j, val) in b.iter() {
        if !v_mask[j] {
            t.add(nv + i, j, -val);
            t.add(j, nv + i, -val);
        }
    }
    for (i, &mi) in m.iter().enumerate() {
        t.add(nv + i, nv + np, mi);
        t.add(nv + np, nv + i, mi);
    }
    t.finalize()
}

fn apply_mask(rhs: &mut [f64], mask: &[bool]) {
    for (r, &m) in rhs.iter_mut().zip(mask) {
        if m {
            *r = 0.0;
        }
    }
}

fn quad_form(k: &SparseOperator, x: &[f64]) -> f64 {
    k.matvec(x).iter().zip(x).map(|(a, b)| a * b).sum()
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl StateSolver {
    pub fn new(spaces: Spaces, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        let vs = &spaces.velocity;
        let ts = &spaces.temperature;
        let (a, b_div) = assemble_stokes(vs, &spaces.pressure, params.re);
        let m = mean_functional(&spaces.pressure);
        let v_mask = vs.boundary_mask();
        let t_mask = ts.boundary_mask();
        let stokes = SparseLu::factor(&saddle_matrix(&a, &b_div, &m, &v_mask))?;

        let k_temp = stiffness(ts);
        let heat = SparseLu::factor(&k_temp.scaled(params.conductivity()).eliminate(&t_mask))?;
        let g1 = match &params.g1 {
            Some(f) => load_vector(vs, |x| f(x)),
            None => vec![0.0; vs.n_dofs()],
        };
        let g2 = match &params.g2 {
            Some(f) => load_vector(ts, |x| [f(x), 0.0]),
            None => vec![0.0; ts.n_dofs()],
        };
        Ok(Self {
            buoy: buoyancy(vs, ts, params.gr, params.re),
            k_vel: stiffness(vs),
            td: interpolate_td(ts.clone(), params.alpha),
            k_temp,
            a_visc: a,
            b_div,
            mean: m,
            v_mask,
            t_mask,
            stokes,
            heat,
            g1,
            g2,
            spaces,
            params,
        })
    }

    pub fn spaces(&self) -> &Spaces {
        &self.spaces
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn divergence_operator(&self) -> &SparseOperator {
        &self.b_div
    }

    pub fn lift(&self) -> &FEFunction {
        &self.td
    }

    /// `(1/Re)` times the vector stiffness.
    pub fn viscous_operator(&self) -> &SparseOperator {
        &self.a_visc
    }

    /// Unit stiffness of the temperature space.
    pub fn temperature_stiffness(&self) -> &SparseOperator {
        &self.k_temp
    }

    pub fn buoyancy_operator(&self) -> &SparseOperator {
        &self.buoy
    }

    pub fn pressure_mean(&self) -> &[f64] {
        &self.mean
    }

    pub(crate) fn stokes_lu(&self) -> &SparseLu {
        &self.stokes
    }

    pub(crate) fn heat_lu(&self) -> &SparseLu {
        &self.heat
    }

    /// One application of the fixed-point map to `(v, T̂)`.
    pub fn picard_step(&self, v: &FEFunction, t_hat: &FEFunction) -> Result<(FEFunction, FEFunction, FEFunction)> {
        let t_full = t_hat.axpy(1.0, &self.td);
        let nv = self.spaces.velocity.n_dofs();
        let np = self.spaces.pressure.n_dofs();

        let mut rhs = vec![0.0; nv + np + 1];
        let lift = self.buoy.matvec(t_full.coeffs());
        let conv = convection_vector(v, v);
        for i in 0..nv {
            rhs[i] = self.g1[i] + lift[i] - conv[i];
        }
        apply_mask(&mut rhs[..nv], &self.v_mask);
        let sol = self.stokes.solve(&rhs)?;
        let v_new = FEFunction::new(self.spaces.velocity.clone(), sol[..nv].to_vec())?;
        let p_new = FEFunction::new(self.spaces.pressure.clone(), sol[nv..nv + np].to_vec())?;

        let kd = self.k_temp.matvec(self.td.coeffs());
        let conv_t = convection_vector(&v_new, &t_full);
        let kappa = self.params.conductivity();
        let mut rhs_t: Vec<f64> = (0..self.g2.len())
            .map(|i| self.g2[i] - kappa * kd[i] - conv_t[i])
            .collect();
        apply_mask(&mut rhs_t, &self.t_mask);
        let t_new = FEFunction::new(self.spaces.temperature.clone(), self.heat.solve(&rhs_t)?)?;
        Ok((v_new, p_new, t_new))
    }

    /// Relative combined H¹-seminorm distance between two iterates.
    pub fn increment(&self, v0: &FEFunction, t0: &FEFunction, v1: &FEFunction, t1: &FEFunction) -> f64 {
        let dv: Vec<f64> = v1.coeffs().iter().zip(v0.coeffs()).map(|(a, b)| a - b).collect();
        let dt: Vec<f64> = t1.coeffs().iter().zip(t0.coeffs()).map(|(a, b)| a - b).collect();
        let num = quad_form(&self.k_vel, &dv) + quad_form(&self.k_temp, &dt);
        let den = quad_form(&self.k_vel, v1.coeffs()) + quad_form(&self.k_temp, t1.coeffs());
        if den <= 0.0 {
            return if num <= 0.0 { 0.0 } else { f64::INFINITY };
        }
        (num.max(0.0) / den).sqrt()
    }

    pub fn solve(&self, opts: PicardOptions) -> Result<StateSolution> {
        let mut v = FEFunction::zeros(self.spaces.velocity.clone());
        let mut t_hat = FEFunction::zeros(self.spaces.temperature.clone());
        let mut increments = Vec::new();
        for k in 1..=opts.max_iter {
            let (v1, p1, t1) = self.picard_step(&v, &t_hat)?;
            let inc = self.increment(&v, &t_hat, &v1, &t1);
            increments.push(inc);
            if !inc.is_finite() {
                break;
            }
            v = v1;
            t_hat = t1;
            if inc < opts.tol {
                let t = t_hat.axpy(1.0, &self.td);
                let divergence = inf_norm(&self.b_div.matvec(v.coeffs()));
                return Ok(StateSolution {
                    v,
                    p: p1,
                    t_hat,
                    t,
                    picard_iters: k,
                    final_increment: inc,
                    increments,
                    divergence,
                });
            }
        }
        Err(Error::NonConvergence {
            what: "Picard iteration",
            iters: increments.len(),
            last: increments.last().copied().unwrap_or(f64::NAN),
            history: increments,
        })
    }
}

/// Builds the spaces on `mesh`, factors the operators and runs the fixed-point
/// iteration from zero.
pub fn solve_state(mesh: Mesh, params: &PhysicalParams, opts: PicardOptions) -> Result<StateSolution> {
    StateSolver::new(Spaces::new(mesh), params.clone())?.solve(opts)
}

/// `I(T) = ∫ T / |Ω|`
pub fn mean_temperature(t: &FEFunction) -> f64 {
    t.integral()[0] / t.space().mesh().area()
}

/// `½ ∫ (T − c)²`
pub fn half_variance(t: &FEFunction, c: f64) -> f64 {
    let q = crate::assembly::degree5();
    let mesh = t.space().mesh();
    let mut s = 0.0;
    for tri in 0..mesh.n_triangles() {
        let area = mesh.signed_area(tri);
        for p in &q {
            let d = t.value_in(tri, p.bary)[0] - c;
            s += area * p.weight * d * d;
        }
    }
    0.5 * s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    /// `½ ‖T − I‖²`
    pub j1: f64,
    /// `∫ γ'²`
    pub curve_energy: f64,
    /// `(∫ γ)²`
    pub mean_sq: f64,
    /// `∫ ((γ − 1 + ν)⁺)²`
    pub obstacle: f64,
    pub total: f64,
    /// Mean temperature `I(T)`.
    pub i_t: f64,
}

impl CostBreakdown {
    pub fn assemble(j1: f64, i_t: f64, curve: &BoundaryCurve, pen: &Penalties) -> Self {
        let ci = curve.integrals(pen.nu);
        let mean_sq = ci.mean * ci.mean;
        let total = j1
            + 0.5 * pen.lambda1 * ci.dirichlet_energy
            + 0.5 * pen.lambda2 * mean_sq
            + 0.5 * pen.lambda3 * ci.obstacle;
        Self {
            j1,
            curve_energy: ci.dirichlet_energy,
            mean_sq,
            obstacle: ci.obstacle,
            total,
            i_t,
        }
    }
}

pub fn evaluate_cost(state: &StateSolution, curve: &BoundaryCurve, pen: &Penalties) -> CostBreakdown {
    let i_t = mean_temperature(&state.t);
    CostBreakdown::assemble(half_variance(&state.t, i_t), i_t, curve, pen)
}

/// Gradient-based element check used by tests: largest `|div v|` at the
/// quadrature points.
pub fn pointwise_divergence(v: &FEFunction) -> f64 {
    let mesh = v.space().mesh();
    let q = crate::assembly::degree5();
    let mut m: f64 = 0.0;
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        for p in &q {
            let g = v.gradient_with(&el, t, p.bary);
            m = m.max((g[0][0] + g[1][1]).abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::temperature_laplacian;
    use std::f64::consts::PI;

    fn flat_mesh(n: usize) -> Mesh {
        Mesh::with_cells(&BoundaryCurve::flat(n), n).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let params = PhysicalParams {
            alpha: 0.0,
            ..Default::default()
        };
        let s = solve_state(flat_mesh(6), &params, PicardOptions::default()).unwrap();
        assert_eq!(s.picard_iters, 1);
        assert_eq!(s.v.max_abs(), 0.0);
        assert_eq!(s.p.max_abs(), 0.0);
        assert_eq!(s.t.max_abs(), 0.0);
    }

    #[test]
    fn no_buoyancy_decouples() {
        let params = PhysicalParams {
            gr: 0.0,
            ..Default::default()
        };
        let spaces = Spaces::new(flat_mesh(8));
        let s = StateSolver::new(spaces.clone(), params.clone())
            .unwrap()
            .solve(PicardOptions::default())
            .unwrap();
        assert!(s.v.max_abs() < 1e-14);
        let ts = &spaces.temperature;
        let mask = ts.boundary_mask();
        let k = temperature_laplacian(ts, params.re, params.pr);
        let td = interpolate_td(ts.clone(), params.alpha);
        let mut rhs: Vec<f64> = k.matvec(td.coeffs()).iter().map(|v| -v).collect();
        apply_mask(&mut rhs, &mask);
        let direct = SparseLu::factor(&k.eliminate(&mask)).unwrap().solve(&rhs).unwrap();
        for (a, b) in s.t_hat.coeffs().iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(s.picard_iters <= 2);
    }

    #[test]
    fn default_parameters() {
        let s = solve_state(Mesh::build(&BoundaryCurve::flat(17), 0.06).unwrap(), &PhysicalParams::default(), PicardOptions::default()).unwrap();
        assert!(s.picard_iters <= 30, "{}", s.picard_iters);
        let inc = &s.increments;
        for k in 2..inc.len() - 1 {
            assert!(inc[k + 1] < inc[k], "{inc:?}");
        }
        assert!(s.divergence < 1e-9);
        assert!(s.t_hat.space().boundary_mask().iter().zip(s.t_hat.coeffs()).all(|(&m, &c)| !m || c == 0.0));
    }

    #[test]
    fn converged_state_is_fixed_point() {
        let c = BoundaryCurve::from_fn(10, |x| -0.1 * (3.0 * PI * x).sin()).unwrap();
        let solver = StateSolver::new(Spaces::new(Mesh::build(&c, 0.1).unwrap()), PhysicalParams::default()).unwrap();
        let opts = PicardOptions { tol: 1e-10, max_iter: 100 };
        let s = solver.solve(opts).unwrap();
        let (v1, _, t1) = solver.picard_step(&s.v, &s.t_hat).unwrap();
        assert!(solver.increment(&s.v, &s.t_hat, &v1, &t1) <= 10.0 * opts.tol);
    }

    #[test]
    fn symmetric_domain_gives_symmetric_state() {
        let c = BoundaryCurve::from_fn(12, |x| -0.1 * (3.0 * PI * x).sin()).unwrap();
        let spaces = Spaces::new(Mesh::build(&c, 1.0 / 12.0).unwrap());
        let s = StateSolver::new(spaces.clone(), PhysicalParams::default())
            .unwrap()
            .solve(PicardOptions::default())
            .unwrap();
        let mirror = spaces.temperature.mirror_nodes();
        let vs = &spaces.velocity;
        let n = vs.n_nodes();
        let (v, t) = (s.v.coeffs(), s.t.coeffs());
        for i in 0..n {
            let j = mirror[i];
            assert!((v[i] + v[j]).abs() < 1e-10, "v1 at node {i}");
            assert!((v[n + i] - v[n + j]).abs() < 1e-10, "v2 at node {i}");
            assert!((t[i] - t[j]).abs() < 1e-10, "T at node {i}");
        }
    }

    #[test]
    fn mean_temperature_examples() {
        let sp = Spaces::new(flat_mesh(4));
        let c = FEFunction::interpolate(sp.temperature.clone(), |_| 3.25);
        assert!((mean_temperature(&c) - 3.25).abs() < 1e-14);
        assert!(half_variance(&c, 3.25).abs() < 1e-28);
        let y = FEFunction::interpolate(sp.temperature.clone(), |x| x[1]);
        assert!((mean_temperature(&y) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn cost_identity() {
        let c = BoundaryCurve::new(vec![0.0, 0.95, 0.95, 0.0]).unwrap();
        let ci = c.integrals(0.1);
        let pen = Penalties::default();
        let cb = CostBreakdown::assemble(0.3, 1.0, &c, &pen);
        let expect = 0.3 + 0.25 * ci.dirichlet_energy + 0.5 * 1.5e4 * ci.mean.powi(2) + 500.0 * ci.obstacle;
        assert!((cb.total - expect).abs() < 1e-9 * expect);
        // the plateau contributes 0.05² over [1/3, 2/3] plus the trapezoid ends
        assert!((ci.obstacle - 0.05f64.powi(2) * (1.0 / 3.0 + 1.0 / 3.0)).abs() < 1e-15);
        let flat = CostBreakdown::assemble(0.7, 0.0, &BoundaryCurve::flat(5), &pen);
        assert_eq!((flat.curve_energy, flat.mean_sq, flat.obstacle, flat.total), (0.0, 0.0, 0.0, 0.7));
    }

    #[test]
    fn rejects_bad_params() {
        let p = PhysicalParams { re: 0.0, ..Default::default() };
        assert!(matches!(p.validate(), Err(Error::Config { ref key, .. }) if key == "re"));
        let p = PhysicalParams { gr: -1.0, ..Default::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn strong_forcing_reports_history() {
        let params = PhysicalParams {
            gr: 5e5,
            alpha: 50.0,
            ..Default::default()
        };
        match solve_state(flat_mesh(4), &params, PicardOptions { tol: 1e-10, max_iter: 5 }) {
            Err(Error::NonConvergence { history, iters, .. }) => assert_eq!(history.len(), iters),
            other => panic!("expected nonconvergence, got {:?}", other.map(|s| s.picard_iters)),
        }
    }
}
