//! Bilinear and trilinear forms of the Boussinesq state and adjoint systems.
//!
//! Every form is integrated with the degree-5 rule, which is exact for all
//! of them on straight-sided triangles (the trilinear ones have degree 2+1+2).

use super::quadrature::{degree5, QuadPoint};
use super::sparse::{SparseOperator, TripletBuilder};
use super::space::{basis_values, Element, FEFunction, FunctionSpace, SpaceKind};
use crate::error::{Error, Result};

type Local = [[f64; 6]; 6];

struct RefBasis {
    points: [QuadPoint; 7],
    values: [[f64; 6]; 7],
}

impl RefBasis {
    fn new(kind: SpaceKind) -> Self {
        let points = degree5();
        let values = points.map(|p| basis_values(kind, p.bary));
        Self { points, values }
    }
}

/// Assembles a form that acts on each component separately (block diagonal
/// for vector spaces).
fn assemble_componentwise(
    space: &FunctionSpace,
    mut local: impl FnMut(usize, &Element, &mut Local),
) -> SparseOperator {
    let mesh = space.mesh();
    let npc = space.kind().nodes_per_cell();
    let nc = space.components();
    let n = space.n_dofs();
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_triangles() * npc * npc * nc);
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let mut k = [[0.0; 6]; 6];
        local(t, &el, &mut k);
        let nodes = space.cell_nodes(t);
        for c in 0..nc {
            for i in 0..npc {
                for j in 0..npc {
                    b.add(space.dof(c, nodes[i]), space.dof(c, nodes[j]), k[i][j]);
                }
            }
        }
    }
    b.finalize()
}

/// `∫ ∇φ_j · ∇φ_i`
pub fn stiffness(space: &FunctionSpace) -> SparseOperator {
    let rb = RefBasis::new(space.kind());
    let npc = space.kind().nodes_per_cell();
    assemble_componentwise(space, |_, el, k| {
        for p in &rb.points {
            let g = el.basis_gradients(space.kind(), p.bary);
            let dx = el.area * p.weight;
            for i in 0..npc {
                for j in 0..npc {
                    k[i][j] += dx * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
    })
}

/// `∫ φ_j φ_i`
pub fn mass(space: &FunctionSpace) -> SparseOperator {
    let rb = RefBasis::new(space.kind());
    let npc = space.kind().nodes_per_cell();
    assemble_componentwise(space, |_, el, k| {
        for (p, phi) in rb.points.iter().zip(&rb.values) {
            let dx = el.area * p.weight;
            for i in 0..npc {
                for j in 0..npc {
                    k[i][j] += dx * phi[i] * phi[j];
                }
            }
        }
    })
}

/// Transport by `vel`: `∫ (vel·∇φ_j) φ_i`, block diagonal on vector spaces.
/// On the velocity space this is `w ↦ b₁(vel, w, ·)`, on the temperature
/// space `T ↦ b₂(vel, T, ·)`.
pub fn convection(space: &FunctionSpace, vel: &FEFunction) -> SparseOperator {
    check_velocity(vel);
    let rb = RefBasis::new(space.kind());
    let npc = space.kind().nodes_per_cell();
    assemble_componentwise(space, |t, el, k| {
        for (p, phi) in rb.points.iter().zip(&rb.values) {
            let a = vel.value_in(t, p.bary);
            let g = el.basis_gradients(space.kind(), p.bary);
            let dx = el.area * p.weight;
            for j in 0..npc {
                let adv = a[0] * g[j][0] + a[1] * g[j][1];
                for i in 0..npc {
                    k[i][j] += dx * adv * phi[i];
                }
            }
        }
    })
}

/// `w ↦ b₁(vel̄, w, ·)` on the velocity space.
pub fn convection_b1(vspace: &FunctionSpace, vbar: &FEFunction) -> SparseOperator {
    convection(vspace, vbar)
}

/// `T ↦ b₂(vel̄, T, ·)` on the temperature space.
pub fn convection_b2(tspace: &FunctionSpace, vbar: &FEFunction) -> SparseOperator {
    convection(tspace, vbar)
}

/// `w ↦ b₁(w, vbar, ·)`: entry `((a,i),(b,j)) = ∫ φ_j ∂_b vbar_a φ_i`.
pub fn reaction_b1(vspace: &FunctionSpace, vbar: &FEFunction) -> SparseOperator {
    check_velocity(vbar);
    let rb = RefBasis::new(SpaceKind::VectorP2);
    let n = vspace.n_dofs();
    let mesh = vspace.mesh();
    let mut b = TripletBuilder::with_capacity(n, n, mesh.n_triangles() * 144);
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let mut k = [[[0.0; 6]; 6]; 4];
        for (p, phi) in rb.points.iter().zip(&rb.values) {
            let g = vbar.gradient_with(&el, t, p.bary);
            let dx = el.area * p.weight;
            for (ab, kab) in k.iter_mut().enumerate() {
                let s = dx * g[ab / 2][ab % 2];
                for i in 0..6 {
                    for j in 0..6 {
                        kab[i][j] += s * phi[i] * phi[j];
                    }
                }
            }
        }
        let nodes = vspace.cell_nodes(t);
        for (ab, kab) in k.iter().enumerate() {
            for i in 0..6 {
                for j in 0..6 {
                    b.add(vspace.dof(ab / 2, nodes[i]), vspace.dof(ab % 2, nodes[j]), kab[i][j]);
                }
            }
        }
    }
    b.finalize()
}

/// `φ ↦ b₂(φ, tbar, ·)`: rows on the temperature space, columns on the
/// velocity space, entry `(i,(b,j)) = ∫ φ_j ∂_b tbar φ_i`.
pub fn b2_velocity_form(vspace: &FunctionSpace, tspace: &FunctionSpace, tbar: &FEFunction) -> SparseOperator {
    check_same_nodes(vspace, tspace);
    let rb = RefBasis::new(SpaceKind::ScalarP2);
    let mesh = tspace.mesh();
    let mut b = TripletBuilder::with_capacity(tspace.n_dofs(), vspace.n_dofs(), mesh.n_triangles() * 72);
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let mut k = [[[0.0; 6]; 6]; 2];
        for (p, phi) in rb.points.iter().zip(&rb.values) {
            let g = tbar.gradient_with(&el, t, p.bary)[0];
            let dx = el.area * p.weight;
            for (c, kc) in k.iter_mut().enumerate() {
                for i in 0..6 {
                    for j in 0..6 {
                        kc[i][j] += dx * g[c] * phi[i] * phi[j];
                    }
                }
            }
        }
        let nodes = tspace.cell_nodes(t);
        for (c, kc) in k.iter().enumerate() {
            for i in 0..6 {
                for j in 0..6 {
                    b.add(nodes[i], vspace.dof(c, nodes[j]), kc[i][j]);
                }
            }
        }
    }
    b.finalize()
}

/// Viscous block `(1/Re) ∫ ∇v : ∇φ` and divergence `(ψ_i, div φ_j)`.
pub fn assemble_stokes(vspace: &FunctionSpace, pspace: &FunctionSpace, re: f64) -> (SparseOperator, SparseOperator) {
    let a = stiffness(vspace).scaled(1.0 / re);
    let rv = RefBasis::new(SpaceKind::VectorP2);
    let rp = RefBasis::new(SpaceKind::ScalarP1);
    let mesh = vspace.mesh();
    let mut b = TripletBuilder::with_capacity(pspace.n_dofs(), vspace.n_dofs(), mesh.n_triangles() * 36);
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let mut k = [[[0.0; 6]; 3]; 2];
        for (p, psi) in rv.points.iter().zip(&rp.values) {
            let g = el.basis_gradients(SpaceKind::VectorP2, p.bary);
            let dx = el.area * p.weight;
            for (c, kc) in k.iter_mut().enumerate() {
                for i in 0..3 {
                    for j in 0..6 {
                        kc[i][j] += dx * psi[i] * g[j][c];
                    }
                }
            }
        }
        let (pn, vn) = (pspace.cell_nodes(t), vspace.cell_nodes(t));
        for (c, kc) in k.iter().enumerate() {
            for i in 0..3 {
                for j in 0..6 {
                    b.add(pn[i], vspace.dof(c, vn[j]), kc[i][j]);
                }
            }
        }
    }
    (a, b.finalize())
}

/// `(1/(Re·Pr)) ∫ ∇T · ∇φ`
pub fn temperature_laplacian(tspace: &FunctionSpace, re: f64, pr: f64) -> SparseOperator {
    stiffness(tspace).scaled(1.0 / (re * pr))
}

/// `T ↦ (Gr/Re²) (T e, φ)` with `e = (0, 1)`: rows on the velocity space,
/// columns on the temperature space.
pub fn buoyancy(vspace: &FunctionSpace, tspace: &FunctionSpace, gr: f64, re: f64) -> SparseOperator {
    check_same_nodes(vspace, tspace);
    let m = mass(tspace);
    let s = gr / (re * re);
    let mut b = TripletBuilder::with_capacity(vspace.n_dofs(), tspace.n_dofs(), m.nnz());
    for (i, j, v) in m.iter() {
        b.add(vspace.dof(1, i), j, s * v);
    }
    b.finalize()
}

/// `∫ ψ_i` on a scalar space; the pressure gauge row.
pub fn mean_functional(space: &FunctionSpace) -> Vec<f64> {
    load_vector(space, |_| [1.0, 1.0])
}

/// `∫ f_c φ_i` for every dof `(c, i)`.
pub fn load_vector(space: &FunctionSpace, f: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<f64> {
    let rb = RefBasis::new(space.kind());
    let mesh = space.mesh();
    let npc = space.kind().nodes_per_cell();
    let mut out = vec![0.0; space.n_dofs()];
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let nodes = space.cell_nodes(t);
        for (p, phi) in rb.points.iter().zip(&rb.values) {
            let fx = f(el.point(p.bary));
            let dx = el.area * p.weight;
            for c in 0..space.components() {
                for i in 0..npc {
                    out[space.dof(c, nodes[i])] += dx * fx[c] * phi[i];
                }
            }
        }
    }
    out
}

/// `∫ (vel·∇u_c) φ_i` for every dof `(c, i)` of `u`'s space; the explicit
/// convection term of the fixed-point iteration.
pub fn convection_vector(vel: &FEFunction, u: &FEFunction) -> Vec<f64> {
    check_velocity(vel);
    let space = &**u.space();
    let rb = RefBasis::new(space.kind());
    let mesh = space.mesh();
    let npc = space.kind().nodes_per_cell();
    let mut out = vec![0.0; space.n_dofs()];
    for t in 0..mesh.n_triangles() {
        let el = Element::new(mesh, t);
        let nodes = space.cell_nodes(t);
        for (p, phi) in rb.points.iter().zip(&rb.values) {
            let a = vel.value_in(t, p.bary);
            let g = u.gradient_with(&el, t, p.bary);
            let dx = el.area * p.weight;
            for c in 0..space.components() {
                let adv = dx * (a[0] * g[c][0] + a[1] * g[c][1]);
                for i in 0..npc {
                    out[space.dof(c, nodes[i])] += adv * phi[i];
                }
            }
        }
    }
    out
}

/// Boundary lift of the temperature, `α x₁(1 − x₁)(1 − x₂)`.
pub fn td(alpha: f64, x: [f64; 2]) -> f64 {
    alpha * x[0] * (1.0 - x[0]) * (1.0 - x[1])
}

/// Nodal interpolant of the temperature lift.
pub fn interpolate_td(tspace: std::sync::Arc<FunctionSpace>, alpha: f64) -> FEFunction {
    FEFunction::interpolate(tspace, |x| td(alpha, x))
}

/// Gradient of `u` at the bottom point above `xi`, taken in the triangle
/// resting on bottom edge `k`. Rows are components.
pub fn gradient_on_bottom_edge(u: &FEFunction, k: usize, xi: f64) -> [[f64; 2]; 2] {
    let mesh = u.space().mesh();
    let t = mesh.bottom_triangle(k);
    let el = Element::new(mesh, t);
    let (a, b) = (mesh.vertices[mesh.bottom_trace[k].0], mesh.vertices[mesh.bottom_trace[k + 1].0]);
    let s = (xi - a[0]) / (b[0] - a[0]);
    let x = [xi, a[1] + s * (b[1] - a[1])];
    u.gradient_with(&el, t, el.barycentric(x))
}

/// Value of `u` on the bottom boundary at `xi`.
pub fn value_on_bottom(u: &FEFunction, xi: f64) -> Result<[f64; 2]> {
    check_abscissa(xi)?;
    let mesh = u.space().mesh();
    let k = mesh.bottom_edge_at(xi);
    Ok(u.value_at_point(mesh.bottom_triangle(k), [xi, mesh.bottom_height(xi)]))
}

/// Gradient of `u` at the bottom point `(ξ, γ_h(ξ))`, evaluated in the
/// triangle adjacent to the bottom edge containing `ξ`. At a vertex
/// abscissa the edge on the left is used.
pub fn evaluate_gradient_on_bottom(u: &FEFunction, xi: f64) -> Result<[[f64; 2]; 2]> {
    check_abscissa(xi)?;
    let k = u.space().mesh().bottom_edge_at(xi);
    Ok(gradient_on_bottom_edge(u, k, xi))
}

fn check_abscissa(xi: f64) -> Result<()> {
    if (0.0..=1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::Domain(format!("abscissa {xi} outside [0, 1]")))
    }
}

fn check_velocity(vel: &FEFunction) {
    assert_eq!(vel.space().kind(), SpaceKind::VectorP2, "transport field must be a P2 velocity");
}

fn check_same_nodes(vspace: &FunctionSpace, tspace: &FunctionSpace) {
    assert!(
        std::sync::Arc::ptr_eq(vspace.mesh(), tspace.mesh()) && vspace.n_nodes() == tspace.n_nodes(),
        "velocity and temperature spaces must share the P2 node set"
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::Spaces;
    use crate::geometry::{BoundaryCurve, Mesh};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn wavy(n: usize) -> Spaces {
        let c = BoundaryCurve::from_fn(n, |x| -0.1 * (3.0 * PI * x).sin()).unwrap();
        Spaces::new(Mesh::with_cells(&c, n).unwrap())
    }

    fn unit(n: usize) -> Spaces {
        Spaces::new(Mesh::with_cells(&BoundaryCurve::flat(n), n).unwrap())
    }

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn constants_in_stiffness_kernel() {
        let s = wavy(6);
        let a = assemble_stokes(&s.velocity, &s.pressure, 1.0).0;
        let c = FEFunction::interpolate_vector(s.velocity.clone(), |_| [0.3, -1.7]);
        assert!(a.matvec(c.coeffs()).iter().all(|v| v.abs() < 1e-12));
        let k = temperature_laplacian(&s.temperature, 1.0, 0.7);
        let one = vec![1.0; s.temperature.n_dofs()];
        assert!(k.matvec(&one).iter().all(|v| v.abs() < 1e-12));
        for i in 0..a.nrows() {
            assert!(a.get(i, i) > 0.0);
        }
    }

    #[test]
    fn symmetric_operators() {
        let s = wavy(6);
        assert!(stiffness(&s.velocity).asymmetry() < 1e-13);
        assert!(mass(&s.temperature).asymmetry() < 1e-13);
        assert!(stiffness(&s.pressure).asymmetry() < 1e-13);
        let k = stiffness(&s.temperature);
        assert!(k.eliminate(&s.temperature.boundary_mask()).asymmetry() < 1e-13);
    }

    #[test]
    fn laplacian_scaling_is_entrywise() {
        let s = wavy(4);
        let k = stiffness(&s.temperature);
        let kt = temperature_laplacian(&s.temperature, 1.0, 0.7);
        for (i, j, v) in k.iter() {
            assert!((kt.get(i, j) - v / 0.7).abs() <= 1e-15 * v.abs().max(1.0));
        }
    }

    #[test]
    fn rotation_is_divergence_free() {
        let s = wavy(8);
        let (_, b) = assemble_stokes(&s.velocity, &s.pressure, 1.0);
        let rot = FEFunction::interpolate_vector(s.velocity.clone(), |x| [-(x[1] - 0.5), x[0] - 0.5]);
        assert!(b.matvec(rot.coeffs()).iter().all(|v| v.abs() < 1e-12));
        // and a compressible field is not
        let exp = FEFunction::interpolate_vector(s.velocity.clone(), |x| [x[0], 0.0]);
        let bx = b.matvec(exp.coeffs());
        let total: f64 = bx.iter().sum();
        assert!((total - s.mesh.area()).abs() < 1e-12);
    }

    #[test]
    fn b1_with_constant_transport() {
        let s = wavy(5);
        let vbar = FEFunction::interpolate_vector(s.velocity.clone(), |_| [1.0, 0.0]);
        let w = FEFunction::interpolate_vector(s.velocity.clone(), |x| [x[0], 0.0]);
        let c = convection_b1(&s.velocity, &vbar);
        let got = c.matvec(w.coeffs());
        let expect = load_vector(&s.velocity, |_| [1.0, 0.0]);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
        for (a, b) in convection_vector(&vbar, &w).iter().zip(&got) {
            assert!((a - b).abs() < 1e-14);
        }
        let zero = FEFunction::zeros(s.velocity.clone());
        assert_eq!(convection_b1(&s.velocity, &zero).max_abs(), 0.0);
    }

    #[test]
    fn b2_forms() {
        let s = wavy(5);
        let vbar = FEFunction::interpolate_vector(s.velocity.clone(), |_| [0.0, 1.0]);
        let tbar = FEFunction::interpolate(s.temperature.clone(), |x| x[1]);
        let got = convection_b2(&s.temperature, &vbar).matvec(tbar.coeffs());
        let expect = mean_functional(&s.temperature);
        for (g, e) in got.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
        // φ ↦ b₂(φ, T̄, ·) applied to vbar gives the same vector
        let e = b2_velocity_form(&s.velocity, &s.temperature, &tbar);
        let via_e = e.matvec(vbar.coeffs());
        for (g, e) in via_e.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
        let flat = FEFunction::interpolate(s.temperature.clone(), |_| 4.2);
        assert!(b2_velocity_form(&s.velocity, &s.temperature, &flat).max_abs() < 1e-12);
    }

    #[test]
    fn reaction_matches_directional_gradient() {
        let s = wavy(5);
        let vbar = FEFunction::interpolate_vector(s.velocity.clone(), |x| [x[0] * x[1], x[0] - x[1] * x[1]]);
        let w = FEFunction::interpolate_vector(s.velocity.clone(), |x| [1.0 + x[1], x[0]]);
        let phi = FEFunction::interpolate_vector(s.velocity.clone(), |x| [x[0] * x[0], 2.0 - x[1]]);
        let r = reaction_b1(&s.velocity, &vbar);
        // b₁(w, v̄, φ) = b₁ with transport w acting on v̄
        let lhs = dot(phi.coeffs(), &r.matvec(w.coeffs()));
        let rhs = dot(phi.coeffs(), &convection_vector(&w, &vbar));
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} {rhs}");
    }

    #[test]
    fn skew_symmetry_for_solenoidal_transport() {
        let s = unit(6);
        let vbar = FEFunction::interpolate_vector(s.velocity.clone(), |x| [-(x[1] - 0.5), x[0] - 0.5]);
        let c = convection_b1(&s.velocity, &vbar);
        let phi = FEFunction::interpolate_vector(s.velocity.clone(), |x| {
            let b = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
            [b, 2.0 * b]
        });
        let q = dot(phi.coeffs(), &c.matvec(phi.coeffs()));
        assert!(q.abs() < 1e-12 * phi.l2_norm_sq().max(1.0), "{q}");
    }

    #[test]
    fn buoyancy_of_unit_temperature() {
        let s = unit(4);
        let g = buoyancy(&s.velocity, &s.temperature, 1.0, 1.0);
        let one = vec![1.0; s.temperature.n_dofs()];
        let e = FEFunction::interpolate_vector(s.velocity.clone(), |_| [0.0, 1.0]);
        assert!((dot(e.coeffs(), &g.matvec(&one)) - 1.0).abs() < 1e-12);
        let g2 = buoyancy(&s.velocity, &s.temperature, 2.0, 2.0);
        assert!((dot(e.coeffs(), &g2.matvec(&one)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn temperature_lift_values() {
        assert_eq!(td(10.0, [0.5, 0.0]), 2.5);
        assert_eq!(td(3.7, [0.5, 1.0]), 0.0);
        assert!((td(10.0, [0.25, 0.5]) - 0.9375).abs() < 1e-15);
        let s = wavy(6);
        let t = interpolate_td(s.temperature.clone(), 10.0);
        let wall = s.temperature.dirichlet_mask(&[crate::geometry::BoundaryTag::Wall]);
        for (i, &m) in wall.iter().enumerate() {
            if m {
                assert_eq!(t.coeffs()[i], 0.0);
            }
        }
    }

    #[test]
    fn bottom_gradients() {
        let s = unit(5);
        let u = FEFunction::interpolate(s.temperature.clone(), |x| x[1]);
        for xi in [0.0, 0.13, 0.4, 0.77, 1.0] {
            let g = evaluate_gradient_on_bottom(&u, xi).unwrap()[0];
            assert!((g[0]).abs() < 1e-12 && (g[1] - 1.0).abs() < 1e-12);
        }
        let sq = FEFunction::interpolate(s.temperature.clone(), |x| x[0] * x[0]);
        let g = evaluate_gradient_on_bottom(&sq, 0.3).unwrap()[0];
        assert!((g[0] - 0.6).abs() < 1e-12 && g[1].abs() < 1e-12);
        let zero = FEFunction::zeros(s.velocity.clone());
        assert_eq!(evaluate_gradient_on_bottom(&zero, 0.5).unwrap(), [[0.0; 2]; 2]);
        assert!(evaluate_gradient_on_bottom(&u, 1.2).is_err());

        let w = wavy(8);
        let q = FEFunction::interpolate(w.temperature.clone(), |x| x[0] * x[1] + x[1] * x[1]);
        for xi in [0.05, 0.5, 0.61] {
            let x2 = w.mesh.bottom_height(xi);
            let g = evaluate_gradient_on_bottom(&q, xi).unwrap()[0];
            assert!((g[0] - x2).abs() < 1e-11 && (g[1] - (xi + 2.0 * x2)).abs() < 1e-11);
            assert!((value_on_bottom(&q, xi).unwrap()[0] - (xi * x2 + x2 * x2)).abs() < 1e-12);
        }
    }

    #[test]
    fn additive_over_elements() {
        let s = unit(1);
        let k = stiffness(&s.pressure);
        let mut hand = vec![vec![0.0; s.pressure.n_dofs()]; s.pressure.n_dofs()];
        for t in 0..s.mesh.n_triangles() {
            let el = Element::new(&s.mesh, t);
            let nodes = s.pressure.cell_nodes(t);
            for i in 0..3 {
                for j in 0..3 {
                    let gi = el.grad_bary[i];
                    let gj = el.grad_bary[j];
                    hand[nodes[i]][nodes[j]] += el.area * (gi[0] * gj[0] + gi[1] * gj[1]);
                }
            }
        }
        for (i, row) in hand.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((k.get(i, j) - v).abs() < 1e-14);
            }
        }
        // cotangent formula on the four right-isosceles quarters of the unit cell
        let c = 4;
        assert!((k.get(0, 0) - 1.0).abs() < 1e-14);
        assert!((k.get(c, c) - 4.0).abs() < 1e-14);
        assert!(k.get(0, 1).abs() < 1e-14);
        assert!((k.get(0, c) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn mean_functional_sums_to_area() {
        let s = wavy(6);
        let m: f64 = mean_functional(&s.pressure).iter().sum();
        assert!((m - s.mesh.area()).abs() < 1e-13);
        let m2: f64 = mean_functional(&s.temperature).iter().sum();
        assert!((m2 - s.mesh.area()).abs() < 1e-13);
        let _ = Arc::strong_count(&s.mesh);
    }
}
