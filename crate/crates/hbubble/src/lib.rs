//! Numerical laboratory for parametric surfaces of prescribed mean
//! curvature ("H-bubbles"): curvature fields with exact gradients, discrete
//! surface maps on disk/sphere charts, the variational energy functionals
//! and their first variations, mountain-pass level estimation, the
//! alpha-regularized approximating problems, and blow-up rescaling
//! diagnostics.

pub mod chart;
pub mod error;
pub mod expr;
pub mod field;
pub mod numeric;
pub mod surface;
pub mod vec3;

pub use chart::Chart;
pub use field::{CurvatureField, FieldScalars};
pub use surface::{GradientField, SurfaceMap};
