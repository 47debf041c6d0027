//! Bottom curve representation, curve calculus and the boundary-fitted mesh.

mod curve;
mod mesh;

pub use curve::{bottom_normal, normal_from_slope, trapezoid_weights, BoundaryCurve, CurveIntegrals};
pub use mesh::{cells_for_size, BoundaryEdge, BoundaryTag, Mesh};
