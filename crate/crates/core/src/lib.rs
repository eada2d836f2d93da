//! Triangulated self-shrinkers of mean curvature flow, found as critical
//! points of the Gaussian area
//! `F(Σ) = (4π)^{-1} ∫_Σ e^{-|x|²/4}` on surfaces clipped to a ball.
//!
//! The numerical core is generic over the scalar type through [`Real`]
//! (implemented for `f32` and `f64`); the aliases below fix it to `f64`.

pub mod equivariance;
pub mod error;
pub mod evolver;
pub mod gaussmetric;
pub mod lab;
pub mod scalar;
pub mod seeds;
mod spatial;
pub mod trimesh;
pub mod vec3;

pub use error::{Error, Result};
pub use scalar::Real;
pub use vec3::{Mat3 as GenericMat3, Vec3 as GenericVec3};

pub type Vec3 = vec3::Vec3<f64>;
pub type Mat3 = vec3::Mat3<f64>;
pub type Mesh = trimesh::TriMesh<f64>;
pub type Group = equivariance::SymmetryGroup<f64>;
pub type Residual = gaussmetric::ResidualField<f64>;
