//! The bottom curve: nodal values of a clamped function on a uniform grid of
//! `[0, 1]`, interpolated piecewise linearly.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    values: Vec<f64>,
}

/// Quadrature-type integrals of a curve used by the geometric penalty terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveIntegrals {
    /// Trapezoid rule of γ.
    pub mean: f64,
    /// ∫|γ'|² with piecewise-constant slopes.
    pub dirichlet_energy: f64,
    /// Trapezoid rule of ((γ − 1 + ν)⁺)².
    pub obstacle: f64,
}

impl BoundaryCurve {
    /// Builds a curve from nodal values `γ(i/N)`, `i = 0..=N`.
    ///
    /// Endpoints must be exactly zero, every value finite and below 1.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidCurve(format!(
                "need at least 2 nodes, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve(format!("value at node {i} is not finite")));
        }
        let n = values.len() - 1;
        if values[0] != 0.0 || values[n] != 0.0 {
            return Err(Error::InvalidCurve(format!(
                "endpoints must be clamped to 0, got {} and {}",
                values[0], values[n]
            )));
        }
        if let Some(i) = values.iter().position(|&v| v >= 1.0) {
            return Err(Error::InvalidCurve(format!(
                "value {} at xi = {} reaches the top wall",
                values[i],
                i as f64 / n as f64
            )));
        }
        Ok(Self { values })
    }

    pub fn flat(n_intervals: usize) -> Self {
        Self {
            values: vec![0.0; n_intervals.max(1) + 1],
        }
    }

    /// Samples `f` at the grid nodes. Endpoint values are pinned to zero so
    /// that e.g. `sin(kπξ)` rounding at `ξ = 1` does not violate the clamp.
    pub fn from_fn(n_intervals: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n_intervals == 0 {
            return Err(Error::InvalidCurve("need at least one interval".into()));
        }
        let mut values: Vec<f64> = (0..=n_intervals)
            .map(|i| f(i as f64 / n_intervals as f64))
            .collect();
        values[0] = 0.0;
        values[n_intervals] = 0.0;
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn xi(&self, i: usize) -> f64 {
        i as f64 / self.n_intervals() as f64
    }

    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.xi(i)).collect()
    }

    /// Index of the interval containing `xi`; nodes belong to the interval on
    /// their left (node 0 to interval 0).
    fn interval_of(&self, xi: f64) -> usize {
        let n = self.n_intervals();
        let k = (xi * n as f64).ceil() as isize - 1;
        k.clamp(0, n as isize - 1) as usize
    }

    /// Value and slope at `xi` (slope of the left interval at nodes).
    pub fn eval(&self, xi: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::Domain(format!("xi = {xi} outside [0, 1]")));
        }
        Ok(self.eval_unchecked(xi))
    }

    pub(crate) fn eval_unchecked(&self, xi: f64) -> (f64, f64) {
        let n = self.n_intervals();
        let k = self.interval_of(xi);
        let (a, b) = (self.values[k], self.values[k + 1]);
        let slope = (b - a) * n as f64;
        let t = xi * n as f64 - k as f64;
        (a + t * (b - a), slope)
    }

    /// Piecewise-linear value; the exact nodal value is returned at nodes.
    pub fn value_at(&self, xi: f64) -> f64 {
        let n = self.n_intervals() as f64;
        let s = xi * n;
        if (s - s.round()).abs() < 1e-12 {
            let i = s.round() as usize;
            if i < self.values.len() {
                return self.values[i];
            }
        }
        self.eval_unchecked(xi.clamp(0.0, 1.0)).0
    }

    /// Three-point second difference at interior nodes, zero at the clamped ends.
    pub fn second_difference(&self) -> Vec<f64> {
        let n = self.n_intervals();
        let n2 = (n * n) as f64;
        let v = &self.values;
        let mut out = vec![0.0; n + 1];
        for i in 1..n {
            out[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) * n2;
        }
        out
    }

    pub fn integrals(&self, nu: f64) -> CurveIntegrals {
        let n = self.n_intervals();
        let w = trapezoid_weights(n);
        let v = &self.values;
        let mean = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let dirichlet_energy = v
            .windows(2)
            .map(|p| (p[1] - p[0]).powi(2))
            .sum::<f64>()
            * n as f64;
        let obstacle = v
            .iter()
            .zip(&w)
            .map(|(g, wi)| wi * (g - 1.0 + nu).max(0.0).powi(2))
            .sum();
        CurveIntegrals {
            mean,
            dirichlet_energy,
            obstacle,
        }
    }

    /// Curve reflected about `ξ = 1/2`.
    pub fn mirrored(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values }
    }

    /// Largest nodal deviation from the mirrored curve.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n_intervals();
        (0..=n)
            .map(|i| (self.values[i] - self.values[n - i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Trapezoid weights of the uniform grid with `n` intervals on `[0, 1]`.
pub fn trapezoid_weights(n: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    w
}

/// Outward unit normal of the graph `x₂ = γ(x₁)` seen from above, given the slope.
pub fn normal_from_slope(slope: f64) -> [f64; 2] {
    let s = (1.0 + slope * slope).sqrt();
    [slope / s, -1.0 / s]
}

pub fn bottom_normal(curve: &BoundaryCurve, xi: f64) -> Result<[f64; 2]> {
    let (_, slope) = curve.eval(xi)?;
    Ok(normal_from_slope(slope))
}
