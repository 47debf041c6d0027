//! Lagrange spaces on a [`Mesh`] and discrete fields living on them.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpaceKind {
    /// Continuous piecewise quadratics with two components.
    VectorP2,
    ScalarP2,
    ScalarP1,
}

impl SpaceKind {
    pub fn components(self) -> usize {
        match self {
            SpaceKind::VectorP2 => 2,
            _ => 1,
        }
    }

    pub fn nodes_per_cell(self) -> usize {
        match self {
            SpaceKind::ScalarP1 => 3,
            _ => 6,
        }
    }
}

/// Affine data of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct Element {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_bary: [[f64; 2]; 3],
}

impl Element {
    pub fn new(mesh: &Mesh, t: usize) -> Self {
        let [p0, p1, p2] = mesh.triangles[t].map(|v| mesh.vertices[v]);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_bary = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        Self {
            vertices: [p0, p1, p2],
            area: 0.5 * det,
            grad_bary,
        }
    }

    pub fn barycentric(&self, x: [f64; 2]) -> [f64; 3] {
        let p0 = self.vertices[0];
        let d = [x[0] - p0[0], x[1] - p0[1]];
        let l1 = self.grad_bary[1][0] * d[0] + self.grad_bary[1][1] * d[1];
        let l2 = self.grad_bary[2][0] * d[0] + self.grad_bary[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }

    /// Physical gradients of the local basis.
    pub fn basis_gradients(&self, kind: SpaceKind, l: [f64; 3]) -> [[f64; 2]; 6] {
        let mut out = [[0.0; 2]; 6];
        let dl = match kind {
            SpaceKind::ScalarP1 => p1_dlambda(),
            _ => p2_dlambda(l),
        };
        for (i, row) in dl.iter().enumerate().take(kind.nodes_per_cell()) {
            for (k, &c) in row.iter().enumerate() {
                out[i][0] += c * self.grad_bary[k][0];
                out[i][1] += c * self.grad_bary[k][1];
            }
        }
        out
    }
}

/// Local basis values; unused trailing entries are zero for P1.
pub fn basis_values(kind: SpaceKind, l: [f64; 3]) -> [f64; 6] {
    match kind {
        SpaceKind::ScalarP1 => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
        _ => [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ],
    }
}

fn p1_dlambda() -> [[f64; 3]; 6] {
    let mut d = [[0.0; 3]; 6];
    d[0][0] = 1.0;
    d[1][1] = 1.0;
    d[2][2] = 1.0;
    d
}

// derivative of each P2 basis function with respect to (λ0, λ1, λ2)
fn p2_dlambda(l: [f64; 3]) -> [[f64; 3]; 6] {
    [
        [4.0 * l[0] - 1.0, 0.0, 0.0],
        [0.0, 4.0 * l[1] - 1.0, 0.0],
        [0.0, 0.0, 4.0 * l[2] - 1.0],
        [4.0 * l[1], 4.0 * l[0], 0.0],
        [0.0, 4.0 * l[2], 4.0 * l[1]],
        [4.0 * l[2], 0.0, 4.0 * l[0]],
    ]
}

/// Local edges of a triangle, in the order of the P2 midpoint nodes.
pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// A conforming Lagrange space. Degrees of freedom of vector spaces are
/// blocked by component: dof `(c, node)` is `c * n_nodes + node`. Vertex
/// nodes come first and share the mesh vertex numbering.
#[derive(Debug)]
pub struct FunctionSpace {
    kind: SpaceKind,
    mesh: Arc<Mesh>,
    n_nodes: usize,
    cell_nodes: Vec<usize>,
    node_coords: Vec<[f64; 2]>,
    on_bottom: Vec<bool>,
    on_wall: Vec<bool>,
}

impl FunctionSpace {
    pub fn new(mesh: Arc<Mesh>, kind: SpaceKind) -> Self {
        let nv = mesh.n_vertices();
        let npc = kind.nodes_per_cell();
        let mut node_coords = mesh.vertices.clone();
        let mut cell_nodes = Vec::with_capacity(npc * mesh.n_triangles());
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let key = |a: usize, b: usize| (a.min(b), a.max(b));

        for tri in &mesh.triangles {
            cell_nodes.extend_from_slice(tri);
            if kind == SpaceKind::ScalarP1 {
                continue;
            }
            for [a, b] in LOCAL_EDGES {
                let (va, vb) = (tri[a], tri[b]);
                let id = *edge_ids.entry(key(va, vb)).or_insert_with(|| {
                    let (pa, pb) = (mesh.vertices[va], mesh.vertices[vb]);
                    node_coords.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    node_coords.len() - 1
                });
                cell_nodes.push(id);
            }
        }
        let n_nodes = node_coords.len();

        let mut on_bottom = vec![false; n_nodes];
        let mut on_wall = vec![false; n_nodes];
        for e in &mesh.boundary_edges {
            let flags = match e.tag {
                BoundaryTag::Bottom => &mut on_bottom,
                BoundaryTag::Wall => &mut on_wall,
            };
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
            if let Some(&m) = edge_ids.get(&key(e.vertices[0], e.vertices[1])) {
                flags[m] = true;
            }
        }
        debug_assert!(on_bottom.iter().take(nv).filter(|&&b| b).count() == mesh.bottom_trace.len());

        Self {
            kind,
            mesh,
            n_nodes,
            cell_nodes,
            node_coords,
            on_bottom,
            on_wall,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.kind.components()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.components()
    }

    #[inline]
    pub fn dof(&self, component: usize, node: usize) -> usize {
        component * self.n_nodes + node
    }

    /// Global node indices of triangle `t`, in local basis order.
    #[inline]
    pub fn cell_nodes(&self, t: usize) -> &[usize] {
        let npc = self.kind.nodes_per_cell();
        &self.cell_nodes[t * npc..(t + 1) * npc]
    }

    pub fn node_coords(&self) -> &[[f64; 2]] {
        &self.node_coords
    }

    /// Flags every dof whose node lies on a boundary edge with one of `tags`.
    pub fn dirichlet_mask(&self, tags: &[BoundaryTag]) -> Vec<bool> {
        let bottom = tags.contains(&BoundaryTag::Bottom);
        let wall = tags.contains(&BoundaryTag::Wall);
        let node_mask: Vec<bool> = (0..self.n_nodes)
            .map(|i| (bottom && self.on_bottom[i]) || (wall && self.on_wall[i]))
            .collect();
        node_mask.repeat(self.components())
    }

    /// Node index of the mirror image of every node under `x₁ ↦ 1 − x₁`.
    /// Only meaningful on meshes of symmetric curves.
    pub fn mirror_nodes(&self) -> Vec<usize> {
        let mesh = &self.mesh;
        let mut out: Vec<usize> = (0..mesh.n_vertices()).map(|v| mesh.mirror_vertex(v)).collect();
        if self.kind == SpaceKind::ScalarP1 {
            return out;
        }
        out.resize(self.n_nodes, usize::MAX);
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        let mut by_edge = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            for (e, [a, b]) in LOCAL_EDGES.iter().enumerate() {
                by_edge.insert(key(tri[*a], tri[*b]), self.cell_nodes(t)[3 + e]);
            }
        }
        for (&(a, b), &node) in &by_edge {
            out[node] = by_edge[&key(mesh.mirror_vertex(a), mesh.mirror_vertex(b))];
        }
        out
    }

    /// Mask of the whole boundary.
    pub fn boundary_mask(&self) -> Vec<bool> {
        self.dirichlet_mask(&[BoundaryTag::Bottom, BoundaryTag::Wall])
    }
}

/// Coefficients of a discrete field in a [`FunctionSpace`].
#[derive(Debug, Clone)]
pub struct FEFunction {
    space: Arc<FunctionSpace>,
    coeffs: Vec<f64>,
}

impl FEFunction {
    pub fn new(space: Arc<FunctionSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.n_dofs() {
            return Err(Error::Domain(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.n_dofs()
            )));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("coefficient {i} is not finite")));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: Arc<FunctionSpace>) -> Self {
        let n = space.n_dofs();
        Self {
            space,
            coeffs: vec![0.0; n],
        }
    }

    /// Nodal interpolant of a scalar function (every component of a vector
    /// space receives the same values).
    pub fn interpolate(space: Arc<FunctionSpace>, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::interpolate_vector(space, |x| {
            let v = f(x);
            [v, v]
        })
    }

    /// Nodal interpolant of a vector function; scalar spaces keep the first
    /// component.
    pub fn interpolate_vector(space: Arc<FunctionSpace>, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let nc = space.components();
        let mut coeffs = vec![0.0; space.n_dofs()];
        for (i, &x) in space.node_coords().iter().enumerate() {
            let v = f(x);
            for (c, &vc) in v.iter().enumerate().take(nc) {
                coeffs[space.dof(c, i)] = vc;
            }
        }
        Self { space, coeffs }
    }

    pub fn space(&self) -> &Arc<FunctionSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn with_coeffs(&self, coeffs: Vec<f64>) -> Result<Self> {
        Self::new(self.space.clone(), coeffs)
    }

    /// `self + s·other` on the same space.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.space, &other.space), "fields live on different spaces");
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + s * b)
            .collect();
        Self {
            space: self.space.clone(),
            coeffs,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Values of the components at barycentric point `l` of triangle `t`.
    pub fn value_in(&self, t: usize, l: [f64; 3]) -> [f64; 2] {
        let sp = &*self.space;
        let phi = basis_values(sp.kind, l);
        let mut out = [0.0; 2];
        for (c, o) in out.iter_mut().enumerate().take(sp.components()) {
            *o = sp
                .cell_nodes(t)
                .iter()
                .zip(&phi)
                .map(|(&n, p)| self.coeffs[sp.dof(c, n)] * p)
                .sum();
        }
        out
    }

    /// Gradients of the components (row `c` is `∇u_c`).
    pub fn gradient_in(&self, t: usize, l: [f64; 3]) -> [[f64; 2]; 2] {
        let sp = &*self.space;
        let el = Element::new(sp.mesh(), t);
        self.gradient_with(&el, t, l)
    }

    pub(crate) fn gradient_with(&self, el: &Element, t: usize, l: [f64; 3]) -> [[f64; 2]; 2] {
        let sp = &*self.space;
        let g = el.basis_gradients(sp.kind, l);
        let mut out = [[0.0; 2]; 2];
        for (c, o) in out.iter_mut().enumerate().take(sp.components()) {
            for (&n, gi) in sp.cell_nodes(t).iter().zip(&g) {
                let u = self.coeffs[sp.dof(c, n)];
                o[0] += u * gi[0];
                o[1] += u * gi[1];
            }
        }
        out
    }

    pub fn value_at_point(&self, t: usize, x: [f64; 2]) -> [f64; 2] {
        let el = Element::new(self.space.mesh(), t);
        self.value_in(t, el.barycentric(x))
    }

    /// Component-wise integral over the mesh.
    pub fn integral(&self) -> [f64; 2] {
        let q = super::quadrature::degree5();
        let mesh = self.space.mesh();
        let mut out = [0.0; 2];
        for t in 0..mesh.n_triangles() {
            let area = mesh.signed_area(t);
            for p in &q {
                let v = self.value_in(t, p.bary);
                out[0] += area * p.weight * v[0];
                out[1] += area * p.weight * v[1];
            }
        }
        out
    }

    /// `Σ_c ‖u_c‖²_{L²}`
    pub fn l2_norm_sq(&self) -> f64 {
        let q = super::quadrature::degree5();
        let mesh = self.space.mesh();
        let mut s = 0.0;
        for t in 0..mesh.n_triangles() {
            let area = mesh.signed_area(t);
            for p in &q {
                let v = self.value_in(t, p.bary);
                s += area * p.weight * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        s
    }

    /// `Σ_c ‖∇u_c‖²_{L²}`
    pub fn h1_seminorm_sq(&self) -> f64 {
        let q = super::quadrature::degree5();
        let mesh = self.space.mesh();
        let mut s = 0.0;
        for t in 0..mesh.n_triangles() {
            let el = Element::new(mesh, t);
            for p in &q {
                let g = self.gradient_with(&el, t, p.bary);
                s += el.area * p.weight * (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2));
            }
        }
        s
    }

    /// Nodal values of component `c` at the mesh vertices.
    pub fn vertex_values(&self, c: usize) -> Vec<f64> {
        let sp = &*self.space;
        (0..sp.mesh().n_vertices())
            .map(|v| self.coeffs[sp.dof(c, v)])
            .collect()
    }
}

/// Velocity, pressure and temperature spaces on one mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub mesh: Arc<Mesh>,
    pub velocity: Arc<FunctionSpace>,
    pub pressure: Arc<FunctionSpace>,
    pub temperature: Arc<FunctionSpace>,
}

impl Spaces {
    pub fn new(mesh: Mesh) -> Self {
        let mesh = Arc::new(mesh);
        Self {
            velocity: Arc::new(FunctionSpace::new(mesh.clone(), SpaceKind::VectorP2)),
            pressure: Arc::new(FunctionSpace::new(mesh.clone(), SpaceKind::ScalarP1)),
            temperature: Arc::new(FunctionSpace::new(mesh.clone(), SpaceKind::ScalarP2)),
            mesh,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryCurve;
    use std::f64::consts::PI;

    fn wavy_space(kind: SpaceKind) -> Arc<FunctionSpace> {
        let c = BoundaryCurve::from_fn(8, |x| -0.1 * (3.0 * PI * x).sin()).unwrap();
        let m = Arc::new(Mesh::build(&c, 0.125).unwrap());
        Arc::new(FunctionSpace::new(m, kind))
    }

    #[test]
    fn dof_counts() {
        let m = Arc::new(Mesh::build(&BoundaryCurve::flat(2), 0.5).unwrap());
        let p2 = FunctionSpace::new(m.clone(), SpaceKind::ScalarP2);
        // 13 vertices plus 28 edges (V − E + F = 1)
        assert_eq!(p2.n_nodes(), 13 + 28);
        let vp2 = FunctionSpace::new(m.clone(), SpaceKind::VectorP2);
        assert_eq!(vp2.n_dofs(), 2 * 41);
        let p1 = FunctionSpace::new(m, SpaceKind::ScalarP1);
        assert_eq!(p1.n_dofs(), 13);
        // boundary: 8 vertices, 8 edge midpoints
        assert_eq!(p2.boundary_mask().iter().filter(|&&b| b).count(), 16);
        assert_eq!(p2.dirichlet_mask(&[BoundaryTag::Bottom]).iter().filter(|&&b| b).count(), 5);
    }

    #[test]
    fn mask_matches_geometry() {
        let sp = wavy_space(SpaceKind::ScalarP2);
        let mask = sp.boundary_mask();
        let mesh = sp.mesh();
        for (i, x) in sp.node_coords().iter().enumerate() {
            let on_wall = x[0] == 0.0 || x[0] == 1.0 || x[1] == 1.0;
            let on_bottom = (x[1] - mesh.bottom_height(x[0])).abs() < 1e-14;
            assert_eq!(mask[i], on_wall || on_bottom, "node {i} at {x:?}");
        }
    }

    #[test]
    fn quadratic_patch() {
        let sp = wavy_space(SpaceKind::ScalarP2);
        let f = |x: [f64; 2]| 1.0 + 2.0 * x[0] - x[1] + 3.0 * x[0] * x[0] - x[0] * x[1] + 0.5 * x[1] * x[1];
        let df = |x: [f64; 2]| [2.0 + 6.0 * x[0] - x[1], -1.0 - x[0] + x[1]];
        let u = FEFunction::interpolate(sp.clone(), f);
        for t in (0..sp.mesh().n_triangles()).step_by(7) {
            for l in [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [1.0, 0.0, 0.0]] {
                let x = Element::new(sp.mesh(), t).point(l);
                assert!((u.value_in(t, l)[0] - f(x)).abs() < 1e-12);
                let g = u.gradient_in(t, l)[0];
                let e = df(x);
                assert!((g[0] - e[0]).abs() < 1e-11 && (g[1] - e[1]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn integral_of_x1_reduces_to_1d() {
        let c = BoundaryCurve::from_fn(8, |x| -0.1 * (3.0 * PI * x).sin()).unwrap();
        let sp = wavy_space(SpaceKind::ScalarP2);
        let u = FEFunction::interpolate(sp.clone(), |x| x[0]);
        // exact ∫ x₁(1 − γ_h(x₁)) for piecewise-linear γ_h
        let mut exact = 0.0;
        for k in 0..8 {
            let (a, b) = (k as f64 / 8.0, (k + 1) as f64 / 8.0);
            let (ga, gb) = (c.values()[k], c.values()[k + 1]);
            let s = (gb - ga) / (b - a);
            let g0 = ga - s * a;
            let prim = |x: f64| x * x / 2.0 - g0 * x * x / 2.0 - s * x * x * x / 3.0;
            exact += prim(b) - prim(a);
        }
        assert!((u.integral()[0] - exact).abs() < 1e-13);
    }

    #[test]
    fn barycentric_round_trip() {
        let sp = wavy_space(SpaceKind::ScalarP1);
        let el = Element::new(sp.mesh(), 5);
        let l = [0.1, 0.7, 0.2];
        let back = el.barycentric(el.point(l));
        for k in 0..3 {
            assert!((back[k] - l[k]).abs() < 1e-14);
        }
    }
}
