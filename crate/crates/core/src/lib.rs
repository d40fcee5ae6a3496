//! Gait generation and kinematic motion estimation for modular snake robots
//! climbing cylindrical poles.
//!
//! The pipeline, one module per stage:
//!
//! - [`backbone`]: pitch-varying helix keyframe curves and arc-length resampling
//! - [`diffgeo`]: numerical curvature, torsion and torsion integral
//! - [`gait`]: curvature integration into dorsal/lateral joint angles, ACL and
//!   rolling helix trajectories
//! - [`kinematics`]: forward kinematics of the module chain
//! - [`chassis`]: virtual chassis body frame from the module cloud
//! - [`contact`]: pole contacts and displacement estimation
//! - [`sim`]: all of the above for a whole gait cycle
//! - [`export`]: CSV writers
//!
//! ```
//! use aclgait::sim::{simulate, SimConfig};
//!
//! let cfg = SimConfig { n_steps: 20, cycles: 1, ..SimConfig::default() }
//!     .with_fitted_span()
//!     .unwrap();
//! let run = simulate(&cfg).unwrap();
//! assert_eq!(run.trajectory.len(), 20);
//! assert!(run.total_displacement() > 0.0);
//! ```

pub mod backbone;
pub mod chassis;
pub mod contact;
pub mod diffgeo;
pub mod export;
pub mod gait;
pub mod kinematics;
mod quadrature;
pub mod sim;

pub type Vec3 = nalgebra::Vector3<f64>;

pub use backbone::{BackboneCurve, GaitParams};
pub use chassis::VirtualChassis;
pub use contact::{ContactSet, DisplacementEstimate, Pole};
pub use diffgeo::CurvatureProfile;
pub use gait::{GaitKind, JointAngles, JointAxis, JointTrajectory, RobotConfig};
pub use kinematics::PoseChain;
pub use sim::{simulate, SimConfig, Simulation};

// The guide's snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/backbone.md")]
    mod backbone {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/gait.md")]
    mod gait {}
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/chassis.md")]
    mod chassis {}
    #[doc = include_str!("../../../book/src/contact.md")]
    mod contact {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
