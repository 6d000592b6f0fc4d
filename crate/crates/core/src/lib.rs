//! Deterministic planar simulation core for block-built tool experiments:
//! exact geometry, quasi-static physics, heightmap rasters, chained block
//! tools, the three task scenes with scripted strategies, and the
//! tool-building MDP.
//!
//! The math layers (geometry, physics, rasters, tools) are generic over the
//! scalar; the simulation stack is pinned to the aliases below.

pub mod build;
pub mod geom;
pub mod io;
pub mod phys;
pub mod raster;
pub mod rng;
pub mod scalar;
pub mod tasks;
pub mod tool;

/// Simulation scalar. Determinism contracts (serialized states, seeds,
/// acceptance hashes) are all stated at this precision.
pub type Real = f64;

pub type Vec2 = geom::Vec2<Real>;
pub type Pose2 = geom::Pose2<Real>;
pub type Obb = geom::Obb<Real>;
pub type Circle = geom::Circle<Real>;
pub type Aabb = geom::Aabb<Real>;
pub type WorldState = phys::WorldState<Real>;
pub type StepConfig = phys::StepConfig<Real>;
pub type Viewport = raster::Viewport<Real>;
