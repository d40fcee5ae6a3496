//! End-to-end kinematic simulation of one gait.
//!
//! Per keyframe: joint angles, forward kinematics fitted onto the keyframe's
//! backbone (so the helix stays coaxial with the pole), virtual chassis, and
//! pole contacts. Displacement uses the joints in contact at step `t`,
//! observed at `t` and `t + 1` with axial coordinates measured from each
//! step's chassis origin.

use thiserror::Error;

use crate::backbone::GaitParams;
use crate::chassis::{self, ChassisError, VirtualChassis};
use crate::contact::{self, ContactError, ContactSet, DisplacementEstimate, Pole};
use crate::gait::{
    self, Discretization, GaitError, GaitKind, JointTrajectory, Keyframe, RobotConfig,
};
use crate::kinematics::{self, KinematicsError, PoseChain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Gait(#[from] GaitError),
    #[error("step {step}: {source}")]
    Kinematics {
        step: usize,
        source: KinematicsError,
    },
    #[error(transparent)]
    Chassis(#[from] ChassisError),
    #[error("step {step}: {source}")]
    Contact { step: usize, source: ContactError },
    #[error("invalid simulation setting `{field}`: {reason}")]
    InvalidSetting { field: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub gait: GaitKind,
    pub params: GaitParams,
    pub robot: RobotConfig,
    /// Pole radius (m). The default leaves the innermost backbone radius
    /// `radius - amp_radial` one joint radius off the pole surface.
    pub pole_radius: f64,
    pub n_steps: usize,
    pub cycles: usize,
    /// Add `2 pi r_joint` per cycle to the displacement.
    pub roll_term: bool,
    pub discretization: Discretization,
}

impl Default for SimConfig {
    fn default() -> Self {
        let params = GaitParams::default();
        let robot = RobotConfig::default();
        Self {
            gait: GaitKind::Acl,
            pole_radius: params.radius - params.amp_radial - robot.joint_radius,
            params,
            robot,
            n_steps: 220,
            cycles: 2,
            roll_term: true,
            discretization: Discretization::default(),
        }
    }
}

impl SimConfig {
    /// Same configuration with `t_max` fitted to the body length.
    pub fn with_fitted_span(mut self) -> Result<Self, SimError> {
        let params = match self.gait {
            GaitKind::Acl => self.params,
            GaitKind::Rolling => gait::rolling_params(&self.params),
        };
        self.params.t_max = gait::fit_body_span(&params, &self.robot, self.n_steps)?.t_max;
        Ok(self)
    }

    pub fn pole(&self) -> Result<Pole, SimError> {
        Pole::vertical(self.pole_radius).map_err(|e| SimError::InvalidSetting {
            field: "pole_radius",
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: JointTrajectory,
    /// One cycle of keyframes.
    pub keyframes: Vec<Keyframe>,
    /// Fitted chains for every step of every cycle.
    pub chains: Vec<PoseChain>,
    pub chassis: Vec<VirtualChassis>,
    /// Detected contacts for every step, axial coordinates from the chassis origin.
    pub contacts: Vec<ContactSet>,
    pub estimate: DisplacementEstimate,
}

impl Simulation {
    pub fn total_displacement(&self) -> f64 {
        self.estimate.rigid_body_total
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<Simulation, SimError> {
    if cfg.n_steps == 0 || cfg.cycles == 0 {
        return Err(GaitError::InvalidSchedule {
            n_steps: cfg.n_steps,
            cycles: cfg.cycles,
        }
        .into());
    }
    let pole = cfg.pole()?;
    let keyframes = match cfg.gait {
        GaitKind::Acl => {
            gait::acl_keyframes(&cfg.params, &cfg.robot, cfg.n_steps, &cfg.discretization)?
        }
        GaitKind::Rolling => {
            gait::rolling_keyframes(&cfg.params, &cfg.robot, cfg.n_steps, &cfg.discretization)?
        }
    };
    let n = keyframes.len();

    let cycle_chains = keyframes
        .iter()
        .enumerate()
        .map(|(step, k)| {
            kinematics::fit_chain(&cfg.robot, &k.angles, &k.curve)
                .map_err(|source| SimError::Kinematics { step, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let chains: Vec<PoseChain> = (0..cfg.cycles)
        .flat_map(|_| cycle_chains.iter().cloned())
        .collect();
    let chassis = chassis::chassis_trajectory(&chains)?;

    let body_pole = |step: usize| pole.recentered(&chassis[step].origin);
    let contact_err = |step| move |source| SimError::Contact { step, source };

    let cycle_contacts = (0..n)
        .map(|step| {
            contact::detect_contacts(&cycle_chains[step], &body_pole(step), step)
                .map_err(contact_err(step))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut pairs = Vec::with_capacity(n);
    for (step, set) in cycle_contacts.iter().enumerate() {
        let next = (step + 1) % n;
        let after = contact::contacts_at(&cycle_chains[next], &body_pole(next), &set.joints, next)
            .map_err(contact_err(next))?;
        pairs.push((set.clone(), after));
    }
    let cycle_pairs: Vec<_> = (0..cfg.cycles)
        .flat_map(|_| pairs.iter().cloned())
        .collect();
    let estimate = contact::estimate_tracked_displacement(
        &cycle_pairs,
        cfg.robot.joint_radius,
        cfg.cycles,
        cfg.roll_term,
    )
    .map_err(contact_err(0))?;

    let contacts = (0..cfg.cycles)
        .flat_map(|c| {
            cycle_contacts.iter().map(move |s| ContactSet {
                step: c * n + s.step,
                ..s.clone()
            })
        })
        .collect();

    let trajectory = JointTrajectory::periodic(
        keyframes.iter().map(|k| k.angles.clone()).collect(),
        cfg.params.period,
        cfg.cycles,
    );

    Ok(Simulation {
        trajectory,
        keyframes,
        chains,
        chassis,
        contacts,
        estimate,
    })
}
