//! Single-pass ordered upwind solver for exit-time optimal trajectory problems
//! on triangulated planar domains.
//!
//! A vehicle starting at `x` moves with speed `f(y, a)` in the unit direction
//! `a`, pays a running cost `l(y, a)` per unit time and a terminal cost `q`
//! when it first reaches the boundary. The value function `v(x)` is the
//! cheapest total cost. [`solver::solve`] computes the discrete value `U` on
//! every mesh vertex by accepting vertices in causal order and updating their
//! neighbours through semi-Lagrangian simplex updates drawn from the nearby
//! accepted front.
//!
//! Module map:
//!
//! - [`mesh`]: triangulated domain, boundary, point location.
//! - [`model`]: speed / cost / terminal-cost triple with declared bounds.
//! - [`solver`]: the ordered upwind sweep and a Gauss-Seidel fixed-point check.
//! - [`field`]: the resulting value field, interpolation, HJB residual, IO.
//! - [`trajectory`]: greedy Bellman descent and cost evaluation.
//! - [`imaging`]: PGM rasters to speed fields and arrival-time maps.
//! - [`oracle`]: dense-graph shortest path reference.
//! - [`study`]: mesh-refinement convergence tables.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod field;
pub mod imaging;
pub mod mesh;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod study;
pub mod trajectory;

mod minimize;
mod spatial;

pub use field::{FieldError, ValueField};
pub use imaging::{ImagingError, Raster};
pub use mesh::{MeshError, Point, Simplex, TriMesh};
pub use model::{Bounds, Direction, ModelError, SpeedCostModel};
pub use solver::{QueueDiscipline, SolveError, SolveOptions, Solver};
pub use trajectory::{Trajectory, TrajectoryError};
