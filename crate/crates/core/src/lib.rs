//! Risk-aware planning for a tethered visual-assistant drone.
//!
//! The crate covers the voxel workspace, tether kinematics and contact
//! simulation, the path risk model, affordance-based viewpoint quality and
//! the risk-aware planner that ties them together.

// NaN must fail these range checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod kinematics;
pub mod planner;
pub mod risk;
pub mod tether;
pub mod viewpoint;
pub mod workspace;

pub use kinematics::{CartesianPoint, GimbalCommand, KinematicsError, TetherCoords, TetherRates};
pub use planner::{Candidates, PlanError, PlanResult, Planner, RewardMode};
pub use risk::{RiskCategory, RiskConfig, RiskElement, RiskError, RiskProfile};
pub use tether::{ContactPlanner, TetherConfig, TetherError};
pub use viewpoint::{Affordance, AffordanceModel, Manifold, RewardField, TaskPose, ViewpointError};
pub use workspace::{Cell, VoxelGrid, WorkspaceError, WorldPoint};
