//! Small numerical kernels shared by the geometry modules.

pub mod ode;
pub mod quadrature;
pub mod roots;
pub mod smoothstep;
pub mod spline;

pub use smoothstep::SmoothStep;
