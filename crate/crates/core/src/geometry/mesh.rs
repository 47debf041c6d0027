//! Boundary-fitted crisscross triangulation of the container.
//!
//! The mesh is the image of a uniform `n × n` grid of the unit square under
//! the vertical shear `(x₁, s) ↦ (x₁, γ(x₁) + s(1 − γ(x₁)))`. Every cell is
//! split into four triangles through the average of its corners, which keeps
//! the vertex set symmetric under `x₁ ↦ 1 − x₁` whenever γ is.

use super::curve::BoundaryCurve;
use crate::error::{Error, Result};

/// Cells whose mapped height drops below this are rejected.
const MIN_COLUMN_HEIGHT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Bottom,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Closed loop: bottom left→right, right wall, top right→left, left wall.
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Bottom vertices ordered left→right with their abscissae.
    pub bottom_trace: Vec<(usize, f64)>,
    cells: usize,
}

/// Number of cells per side for target mesh size `h`.
pub fn cells_for_size(h: f64) -> usize {
    ((1.0 / h) - 1e-9).ceil().max(1.0) as usize
}

impl Mesh {
    /// Builds the mesh of `Ω_γ` with `⌈1/h⌉ × ⌈1/h⌉` cells.
    pub fn build(curve: &BoundaryCurve, h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 0.5) {
            return Err(Error::Domain(format!("mesh size h = {h} outside (0, 0.5]")));
        }
        Self::with_cells(curve, cells_for_size(h))
    }

    pub fn with_cells(curve: &BoundaryCurve, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mesh needs at least one cell".into()));
        }
        let nf = n as f64;
        let bottom: Vec<f64> = (0..=n).map(|i| curve.value_at(i as f64 / nf)).collect();
        for (i, &g) in bottom.iter().enumerate() {
            if 1.0 - g < MIN_COLUMN_HEIGHT {
                return Err(Error::Geometry {
                    xi: i as f64 / nf,
                    reason: format!("bottom at height {g} touches the top wall"),
                });
            }
        }

        let grid = |i: usize, j: usize| j * (n + 1) + i;
        let center = |i: usize, j: usize| (n + 1) * (n + 1) + j * n + i;

        let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
        for j in 0..=n {
            let s = j as f64 / nf;
            for (i, &g) in bottom.iter().enumerate() {
                let x2 = if j == n { 1.0 } else { g + s * (1.0 - g) };
                vertices.push([i as f64 / nf, x2]);
            }
        }
        for j in 0..n {
            for i in 0..n {
                let c = [grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1)];
                // symmetric form of the corner average keeps the mirror image exact
                let x1 = (2 * i + 1) as f64 / (2.0 * nf);
                let x2 = 0.25
                    * ((vertices[c[0]][1] + vertices[c[1]][1])
                        + (vertices[c[2]][1] + vertices[c[3]][1]));
                vertices.push([x1, x2]);
            }
        }

        let mut triangles = Vec::with_capacity(4 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v11, v01) =
                    (grid(i, j), grid(i + 1, j), grid(i + 1, j + 1), grid(i, j + 1));
                let c = center(i, j);
                triangles.push([v00, v10, c]);
                triangles.push([v10, v11, c]);
                triangles.push([v11, v01, c]);
                triangles.push([v01, v00, c]);
            }
        }

        let mut boundary_edges = Vec::with_capacity(4 * n);
        for i in 0..n {
            boundary_edges.push(BoundaryEdge {
                vertices: [grid(i, 0), grid(i + 1, 0)],
                tag: BoundaryTag::Bottom,
            });
        }
        for j in 0..n {
            boundary_edges.push(BoundaryEdge {
                vertices: [grid(n, j), grid(n, j + 1)],
                tag: BoundaryTag::Wall,
            });
        }
        for i in (0..n).rev() {
            boundary_edges.push(BoundaryEdge {
                vertices: [grid(i + 1, n), grid(i, n)],
                tag: BoundaryTag::Wall,
            });
        }
        for j in (0..n).rev() {
            boundary_edges.push(BoundaryEdge {
                vertices: [grid(0, j + 1), grid(0, j)],
                tag: BoundaryTag::Wall,
            });
        }

        let bottom_trace = (0..=n).map(|i| (grid(i, 0), i as f64 / nf)).collect();

        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
            bottom_trace,
            cells: n,
        })
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.signed_area(t)).sum()
    }

    /// Triangle resting on bottom edge `k` (edge between bottom vertices `k`, `k+1`).
    pub fn bottom_triangle(&self, k: usize) -> usize {
        4 * k
    }

    /// Bottom edge containing abscissa `xi`; vertex abscissae go to the
    /// edge on their left.
    pub fn bottom_edge_at(&self, xi: f64) -> usize {
        let n = self.cells;
        let k = (xi * n as f64).ceil() as isize - 1;
        k.clamp(0, n as isize - 1) as usize
    }

    /// Bottom edge index `k` if `xi` coincides with an interior bottom vertex
    /// abscissa, i.e. `xi` is shared by edges `k - 1` and `k`.
    pub fn bottom_vertex_at(&self, xi: f64) -> Option<usize> {
        let s = xi * self.cells as f64;
        let r = s.round();
        if (s - r).abs() < 1e-10 && r >= 1.0 && r <= self.cells as f64 - 1.0 {
            Some(r as usize)
        } else {
            None
        }
    }

    /// Slope of bottom edge `k`.
    pub fn bottom_slope(&self, k: usize) -> f64 {
        let a = self.vertices[self.bottom_trace[k].0];
        let b = self.vertices[self.bottom_trace[k + 1].0];
        (b[1] - a[1]) / (b[0] - a[0])
    }

    /// Height of the bottom at `xi` along the piecewise-linear mesh boundary.
    pub fn bottom_height(&self, xi: f64) -> f64 {
        let k = self.bottom_edge_at(xi);
        let a = self.vertices[self.bottom_trace[k].0];
        let b = self.vertices[self.bottom_trace[k + 1].0];
        let t = (xi - a[0]) / (b[0] - a[0]);
        a[1] + t * (b[1] - a[1])
    }

    /// Index of the mirror image of vertex `v` under `x₁ ↦ 1 − x₁`.
    pub fn mirror_vertex(&self, v: usize) -> usize {
        let n = self.cells;
        let ng = (n + 1) * (n + 1);
        if v < ng {
            let (j, i) = (v / (n + 1), v % (n + 1));
            j * (n + 1) + (n - i)
        } else {
            let r = v - ng;
            let (j, i) = (r / n, r % n);
            ng + j * n + (n - 1 - i)
        }
    }

    /// Boundary-vertex flags (any boundary edge touches the vertex).
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_vertices()];
        for e in &self.boundary_edges {
            flags[e.vertices[0]] = true;
            flags[e.vertices[1]] = true;
        }
        flags
    }

    /// Per-triangle region tag for export: 1 touches the bottom, 2 the walls
    /// only, 0 interior.
    pub fn region_tags(&self) -> Vec<i32> {
        let n = self.cells;
        let mut tags = vec![0; self.n_triangles()];
        for j in 0..n {
            for i in 0..n {
                let base = 4 * (j * n + i);
                if j == 0 {
                    tags[base] = 1;
                }
                if i == n - 1 {
                    tags[base + 1] = tags[base + 1].max(2);
                }
                if j == n - 1 {
                    tags[base + 2] = 2;
                }
                if i == 0 {
                    tags[base + 3] = tags[base + 3].max(2);
                }
            }
        }
        tags
    }

    /// Checks the structural invariants against the curve the mesh was built
    /// from. Returns a description of the first violation.
    pub fn check_invariants(&self, curve: &BoundaryCurve) -> std::result::Result<(), String> {
        for t in 0..self.n_triangles() {
            let a = self.signed_area(t);
            if a <= 0.0 {
                return Err(format!("triangle {t} has area {a}"));
            }
        }
        let m = self.boundary_edges.len();
        for k in 0..m {
            let next = &self.boundary_edges[(k + 1) % m];
            if self.boundary_edges[k].vertices[1] != next.vertices[0] {
                return Err(format!("boundary loop broken after edge {k}"));
            }
        }
        for e in &self.boundary_edges {
            for &v in &e.vertices {
                let [x1, x2] = self.vertices[v];
                match e.tag {
                    BoundaryTag::Bottom => {
                        let g = curve.value_at(x1);
                        if (x2 - g).abs() > 1e-12 {
                            return Err(format!("bottom vertex {v} off the curve by {}", x2 - g));
                        }
                    }
                    BoundaryTag::Wall => {
                        if !(x1 == 0.0 || x1 == 1.0 || x2 == 1.0) {
                            return Err(format!("wall vertex {v} at ({x1}, {x2})"));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
