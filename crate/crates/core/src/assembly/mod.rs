//! Taylor-Hood spaces, quadrature and the assembled operators.

mod forms;
mod quadrature;
mod space;
mod sparse;

pub use forms::{
    assemble_stokes, b2_velocity_form, buoyancy, convection, convection_b1, convection_b2,
    convection_vector, evaluate_gradient_on_bottom, gradient_on_bottom_edge, interpolate_td,
    load_vector, mass, mean_functional, reaction_b1, stiffness, td, temperature_laplacian,
    value_on_bottom,
};
pub use quadrature::{degree5, QuadPoint};
pub use space::{basis_values, Element, FEFunction, FunctionSpace, SpaceKind, Spaces, LOCAL_EDGES};
pub use sparse::{relative_residual, SparseLu, SparseOperator, TripletBuilder};
