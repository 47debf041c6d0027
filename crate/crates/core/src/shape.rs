//! Shape gradient of the reduced cost with respect to the bottom curve.
//!
//! Moving the bottom by `h(ξ)` in the `x₂` direction changes the state part
//! of the cost by `−∫ F h dξ`, where on the bottom
//!
//! ```text
//! F = (1/Re) ∂ₙv·∂ₙw + (1/(Re Pr)) ∂ₙT̂ ∂ₙS + ½ (T − I)²
//! ```
//!
//! `T̂ = T − T_d` enters the flux term because the boundary datum `T_d` is a
//! fixed function of position that travels with the moving boundary.

use crate::adjoint::AdjointSolution;
use crate::assembly::{gradient_on_bottom_edge, FEFunction};
use crate::error::{Error, Result};
use crate::geometry::{normal_from_slope, trapezoid_weights, BoundaryCurve, Mesh};
use crate::state::{mean_temperature, Penalties, PhysicalParams, StateSolution};

/// Gradient data on the curve grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub xi: Vec<f64>,
    /// Shape-gradient density.
    pub f: Vec<f64>,
    /// Regularized gradient.
    pub dj: Vec<f64>,
    /// Preconditioned direction `(−Δ)⁻¹ DJ`.
    pub phi: Vec<f64>,
}

impl GradientSample {
    pub fn new(curve: &BoundaryCurve, f: Vec<f64>, pen: &Penalties) -> Self {
        let dj = regularized_gradient(&f, curve, pen);
        let phi = precondition(&dj);
        Self {
            xi: curve.abscissae(),
            f,
            dj,
            phi,
        }
    }

    pub fn phi_inf_norm(&self) -> f64 {
        self.phi.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct Fields<'a> {
    v: &'a FEFunction,
    w: &'a FEFunction,
    t_hat: &'a FEFunction,
    s: &'a FEFunction,
    t: &'a FEFunction,
    mean: f64,
    visc: f64,
    kappa: f64,
}

impl Fields<'_> {
    fn density_on_edge(&self, mesh: &Mesh, k: usize, xi: f64) -> f64 {
        let n = normal_from_slope(mesh.bottom_slope(k));
        let dn = |g: [f64; 2]| g[0] * n[0] + g[1] * n[1];
        let gv = gradient_on_bottom_edge(self.v, k, xi);
        let gw = gradient_on_bottom_edge(self.w, k, xi);
        let gt = gradient_on_bottom_edge(self.t_hat, k, xi)[0];
        let gs = gradient_on_bottom_edge(self.s, k, xi)[0];
        let flow = dn(gv[0]) * dn(gw[0]) + dn(gv[1]) * dn(gw[1]);
        let heat = dn(gt) * dn(gs);

        let t = mesh.bottom_triangle(k);
        let a = mesh.vertices[mesh.bottom_trace[k].0];
        let b = mesh.vertices[mesh.bottom_trace[k + 1].0];
        let x2 = a[1] + (xi - a[0]) / (b[0] - a[0]) * (b[1] - a[1]);
        let temp = self.t.value_at_point(t, [xi, x2])[0] - self.mean;
        self.visc * flow + self.kappa * heat + 0.5 * temp * temp
    }
}

/// Shape-gradient density `F` at every node of the curve grid.
///
/// Gradients are taken in the triangle resting on the bottom edge below the
/// node, with that edge's outward normal. At a node shared by two bottom
/// edges the two one-sided values are averaged, which keeps `F` symmetric
/// for symmetric data. The endpoints get the one-sided value.
pub fn shape_density(
    state: &StateSolution,
    adjoint: &AdjointSolution,
    curve: &BoundaryCurve,
    params: &PhysicalParams,
) -> Result<Vec<f64>> {
    let mesh = state.t.space().mesh().clone();
    let fields = Fields {
        v: &state.v,
        w: &adjoint.w,
        t_hat: &state.t_hat,
        s: &adjoint.s,
        t: &state.t,
        mean: mean_temperature(&state.t),
        visc: 1.0 / params.re,
        kappa: params.conductivity(),
    };
    let n = curve.n_intervals();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let xi = curve.xi(i);
        let val = match mesh.bottom_vertex_at(xi) {
            Some(k) => {
                let x = k as f64 / mesh.cells_per_side() as f64;
                0.5 * (fields.density_on_edge(&mesh, k - 1, x) + fields.density_on_edge(&mesh, k, x))
            }
            None => fields.density_on_edge(&mesh, mesh.bottom_edge_at(xi), xi),
        };
        if !val.is_finite() {
            return Err(Error::Geometry {
                xi,
                reason: "non-finite shape gradient".into(),
            });
        }
        out.push(val);
    }
    Ok(out)
}

/// `DJ = −F − λ₁γ'' + λ₂ ∫γ + λ₃ (γ − 1 + ν)⁺`, nodewise.
pub fn regularized_gradient(f: &[f64], curve: &BoundaryCurve, pen: &Penalties) -> Vec<f64> {
    assert_eq!(f.len(), curve.values().len(), "density and curve lengths differ");
    let d2 = curve.second_difference();
    let mean = curve.integrals(pen.nu).mean;
    f.iter()
        .zip(&d2)
        .zip(curve.values())
        .map(|((fi, d2i), g)| -fi - pen.lambda1 * d2i + pen.lambda2 * mean + pen.lambda3 * (g - 1.0 + pen.nu).max(0.0))
        .collect()
}

/// Solves `−φ'' = rhs`, `φ(0) = φ(1) = 0` with the 3-point scheme on the
/// uniform grid of `rhs`. Endpoint entries of `rhs` are ignored.
pub fn precondition(rhs: &[f64]) -> Vec<f64> {
    let n = rhs.len().saturating_sub(1);
    let mut phi = vec![0.0; rhs.len()];
    if n < 2 {
        return phi;
    }
    // tridiagonal (−1, 2, −1)·N² on interior nodes 1..n−1, Thomas algorithm
    let h2 = 1.0 / (n * n) as f64;
    let m = n - 1;
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    for k in 0..m {
        let (diag, rhs_k) = if k == 0 {
            (2.0, rhs[1] * h2)
        } else {
            (2.0 + c[k - 1], (rhs[k + 1] * h2) + d[k - 1])
        };
        c[k] = -1.0 / diag;
        d[k] = rhs_k / diag;
    }
    phi[m] = d[m - 1];
    for k in (0..m - 1).rev() {
        phi[k + 1] = d[k] - c[k] * phi[k + 2];
    }
    phi
}

/// `⟨DJ, h⟩` under trapezoid weights, the derivative of the reduced cost in
/// direction `h`.
pub fn directional_derivative(f: &[f64], curve: &BoundaryCurve, pen: &Penalties, h: &[f64]) -> Result<f64> {
    let n = curve.n_intervals();
    if h.len() != n + 1 {
        return Err(Error::Domain(format!("direction has {} entries, expected {}", h.len(), n + 1)));
    }
    if h[0] != 0.0 || h[n] != 0.0 {
        return Err(Error::Domain("direction must vanish at both endpoints".into()));
    }
    let dj = regularized_gradient(f, curve, pen);
    Ok(trapezoid_weights(n)
        .iter()
        .zip(&dj)
        .zip(h)
        .map(|((w, d), hi)| w * d * hi)
        .sum())
}

/// Smallest value of `∫ (F + λ₁γ'')(γ − h) dξ` over the candidate curves
/// (trapezoid rule), and the scale `max |F + λ₁γ''|`.
pub fn optimality_residual(f: &[f64], curve: &BoundaryCurve, lambda1: f64, candidates: &[Vec<f64>]) -> (f64, f64) {
    let n = curve.n_intervals();
    let w = trapezoid_weights(n);
    let g: Vec<f64> = f
        .iter()
        .zip(curve.second_difference())
        .map(|(fi, d2)| fi + lambda1 * d2)
        .collect();
    // endpoints are pinned, so only interior nodes carry a condition
    let scale = g[1..n].iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    let worst = candidates
        .iter()
        .map(|h| {
            (0..=n)
                .map(|i| w[i] * g[i] * (curve.values()[i] - h[i]))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    (if candidates.is_empty() { 0.0 } else { worst }, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjoint::solve_adjoint;
    use crate::assembly::Spaces;
    use crate::state::{PicardOptions, StateSolver};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn quad_curve(n: usize) -> BoundaryCurve {
        BoundaryCurve::from_fn(n, |x| x * (1.0 - x)).unwrap()
    }

    #[test]
    fn regularized_gradient_examples() {
        let pen = Penalties::default();
        assert!(regularized_gradient(&[0.0; 9], &BoundaryCurve::flat(8), &pen).iter().all(|&v| v == 0.0));

        let c = quad_curve(10);
        let dj = regularized_gradient(&[0.0; 11], &c, &pen);
        let mean = c.integrals(0.1).mean;
        for &d in &dj[1..10] {
            assert!((d - (1.0 + 1.5e4 * mean)).abs() < 1e-9);
        }
        // trapezoid mean of ξ(1−ξ) on 10 intervals is 1/6 − 1/600
        assert!((mean - (1.0 / 6.0 - 1.0 / 600.0)).abs() < 1e-15);
        assert!((dj[5] - 2501.0).abs() < 26.0);

        let obstacle = BoundaryCurve::new(vec![0.0, 0.95, 0.0]).unwrap();
        let only3 = Penalties { lambda1: 0.0, lambda2: 0.0, ..pen };
        let dj = regularized_gradient(&[0.0; 3], &obstacle, &only3);
        assert!((dj[1] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn precondition_examples() {
        assert_eq!(precondition(&[0.0; 11]), vec![0.0; 11]);
        let phi = precondition(&[1.0; 11]);
        for (i, p) in phi.iter().enumerate() {
            let x = i as f64 / 10.0;
            assert!((p - x * (1.0 - x) / 2.0).abs() < 1e-15);
        }
        assert!((phi[5] - 0.125).abs() < 1e-15);

        let err = |n: usize| {
            let rhs: Vec<f64> = (0..=n).map(|i| (PI * i as f64 / n as f64).sin()).collect();
            precondition(&rhs)
                .iter()
                .enumerate()
                .map(|(i, p)| (p - (PI * i as f64 / n as f64).sin() / (PI * PI)).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn directional_derivative_examples() {
        let c = quad_curve(8);
        let pen = Penalties { lambda1: 0.0, lambda3: 0.0, ..Default::default() };
        let zero = vec![0.0; 9];
        assert_eq!(directional_derivative(&zero, &c, &pen, &zero).unwrap(), 0.0);
        let h: Vec<f64> = (0..=8).map(|i| ((i * (8 - i)) as f64).sqrt()).collect();
        let m = c.integrals(0.1).mean;
        let w = trapezoid_weights(8);
        let ih: f64 = w.iter().zip(&h).map(|(a, b)| a * b).sum();
        let d = directional_derivative(&zero, &c, &pen, &h).unwrap();
        assert!((d - pen.lambda2 * m * ih).abs() < 1e-9 * d.abs());
        let mut bad = h.clone();
        bad[0] = 0.1;
        assert!(directional_derivative(&zero, &c, &pen, &bad).is_err());
    }

    #[test]
    fn optimality_residual_examples() {
        let c = quad_curve(8);
        // F + λ₁γ'' = 0 when F = 2λ₁
        let f = vec![1.0; 9];
        let cands = vec![vec![0.0; 9], c.values().to_vec()];
        let (r, scale) = optimality_residual(&f, &c, 0.5, &cands);
        assert!(r.abs() < 1e-15 && scale < 1e-12);
        let (r, _) = optimality_residual(&[3.0; 9], &c, 0.5, &[c.values().to_vec()]);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn manufactured_density_on_flat_bottom() {
        let n = 8;
        let curve = BoundaryCurve::flat(n);
        let spaces = Spaces::new(Mesh::with_cells(&curve, n).unwrap());
        let params = PhysicalParams { alpha: 0.0, ..Default::default() };
        let solver = StateSolver::new(spaces.clone(), params.clone()).unwrap();
        let mut state = solver.solve(PicardOptions::default()).unwrap();
        let mut adj = solve_adjoint(&solver, &state).unwrap();
        // zero state and adjoint, constant temperature
        state.t = FEFunction::interpolate(spaces.temperature.clone(), |_| 2.0);
        let f = shape_density(&state, &adj, &curve, &params).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-14));

        // T̂ = x₂, S = (1−x₁)x₂: F = κ (−1)(−(1−x₁)) + ½(T − I)²
        let ts: Arc<_> = spaces.temperature.clone();
        state.t_hat = FEFunction::interpolate(ts.clone(), |x| x[1]);
        state.t = state.t_hat.clone();
        adj.s = FEFunction::interpolate(ts, |x| (1.0 - x[0]) * x[1]);
        let f = shape_density(&state, &adj, &curve, &params).unwrap();
        let i_t = 0.5;
        for (i, &fi) in f.iter().enumerate() {
            let x = i as f64 / n as f64;
            let expect = params.conductivity() * (1.0 - x) + 0.5 * i_t * i_t;
            assert!((fi - expect).abs() < 1e-12, "{i}: {fi} vs {expect}");
        }
    }
}
