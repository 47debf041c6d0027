//! Symmetric quadrature on triangles in barycentric coordinates.

/// A quadrature node. Weights are normalized to sum to one, so an integral
/// over a triangle is `area * Σ w f(λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub bary: [f64; 3],
    pub weight: f64,
}

/// Seven-point rule, exact for polynomials of degree 5.
pub fn degree5() -> [QuadPoint; 7] {
    let s = 15f64.sqrt();
    let a = (6.0 - s) / 21.0;
    let b = (6.0 + s) / 21.0;
    let wa = (155.0 - s) / 1200.0;
    let wb = (155.0 + s) / 1200.0;
    let third = 1.0 / 3.0;
    [
        QuadPoint { bary: [third, third, third], weight: 0.225 },
        QuadPoint { bary: [a, a, 1.0 - 2.0 * a], weight: wa },
        QuadPoint { bary: [a, 1.0 - 2.0 * a, a], weight: wa },
        QuadPoint { bary: [1.0 - 2.0 * a, a, a], weight: wa },
        QuadPoint { bary: [b, b, 1.0 - 2.0 * b], weight: wb },
        QuadPoint { bary: [b, 1.0 - 2.0 * b, b], weight: wb },
        QuadPoint { bary: [1.0 - 2.0 * b, b, b], weight: wb },
    ]
}
