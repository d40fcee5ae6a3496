//! Pole contacts and displacement estimation.
//!
//! Three assumptions make contacts well defined: contacts do not slip, they
//! occur at joints, and within every two-link stretch (three consecutive
//! joints) the joint nearest the pole axis touches the pole. If the contact
//! joints hold still in the world, the body advances by the negative of their
//! mean axial motion in the body frame:
//!
//! ```text
//! dx = -(mean x_k(t + 1) - mean x_k(t))
//! X  = sum(dx) + 2 pi r_joint        (per cycle)
//! ```

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use nalgebra::Unit;
use thiserror::Error;

use crate::kinematics::PoseChain;
use crate::Vec3;

/// Default penetration tolerance as a fraction of the pole radius.
pub const PENETRATION_FRACTION: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContactError {
    #[error("invalid pole: {0}")]
    InvalidPole(&'static str),
    #[error("joint {joint} is {depth} m inside the pole surface")]
    Penetration { joint: usize, depth: f64 },
    #[error("contact set is empty")]
    EmptyContacts,
    #[error("need at least two contact sets, got {0}")]
    TooFewSets(usize),
    #[error("joint index {0} out of range")]
    BadJoint(usize),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<ContactError>,
    },
}

/// An infinite cylinder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub origin: Vec3,
    pub direction: Unit<Vec3>,
    pub radius: f64,
    /// Allowed depth of a joint below the surface (m).
    pub penetration_tol: f64,
}

impl Pole {
    pub fn new(origin: Vec3, direction: Vec3, radius: f64) -> Result<Self, ContactError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ContactError::InvalidPole("radius must be finite and > 0"));
        }
        let direction = Unit::try_new(direction, 1e-12)
            .ok_or(ContactError::InvalidPole("axis direction must be nonzero"))?;
        Ok(Self {
            origin,
            direction,
            radius,
            penetration_tol: PENETRATION_FRACTION * radius,
        })
    }

    /// Pole along the world `z` axis through the origin.
    pub fn vertical(radius: f64) -> Result<Self, ContactError> {
        Self::new(Vec3::zeros(), Vec3::z(), radius)
    }

    pub fn axial(&self, p: &Vec3) -> f64 {
        (p - self.origin).dot(&self.direction)
    }

    /// Offset of `p` from its foot on the axis.
    fn radial(&self, p: &Vec3) -> Vec3 {
        let d = p - self.origin;
        d - self.direction.into_inner() * d.dot(&self.direction)
    }

    pub fn distance_to_axis(&self, p: &Vec3) -> f64 {
        self.radial(p).norm()
    }

    /// `p` pushed along its radial direction onto the surface.
    pub fn project_to_surface(&self, p: &Vec3) -> Vec3 {
        let r = self.radial(p);
        let n = r.norm();
        if n == 0.0 {
            return p + any_normal(&self.direction) * self.radius;
        }
        p - r + r * (self.radius / n)
    }

    /// The same cylinder with its origin slid along the axis to the foot of `p`,
    /// so axial coordinates are measured from `p`.
    pub fn recentered(&self, p: &Vec3) -> Pole {
        Pole {
            origin: self.origin + self.direction.into_inner() * self.axial(p),
            ..*self
        }
    }
}

fn any_normal(d: &Unit<Vec3>) -> Vec3 {
    let k = d.iamin();
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    d.cross(&e).normalize()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSet {
    pub step: usize,
    /// 0-based joint indices, ascending.
    pub joints: Vec<usize>,
    /// Contact points on the pole surface (m).
    pub points: Vec<Vec3>,
    /// Axial coordinates of the contact points (m).
    pub axial: Vec<f64>,
}

impl ContactSet {
    /// A set built directly from axial coordinates, for synthetic checks.
    pub fn from_axial(step: usize, axial: Vec<f64>) -> Self {
        Self {
            step,
            joints: (0..axial.len()).collect(),
            points: axial.iter().map(|&x| Vec3::new(0.0, 0.0, x)).collect(),
            axial,
        }
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn mean_axial(&self) -> Option<f64> {
        if self.axial.is_empty() {
            None
        } else {
            Some(self.axial.iter().sum::<f64>() / self.axial.len() as f64)
        }
    }
}

fn check_penetration(pole: &Pole, joint: usize, p: &Vec3) -> Result<(), ContactError> {
    let depth = pole.radius - pole.distance_to_axis(p);
    if depth > pole.penetration_tol {
        return Err(ContactError::Penetration { joint, depth });
    }
    Ok(())
}

/// Contact points of the given joints of `chain`.
pub fn contacts_at(
    chain: &PoseChain,
    pole: &Pole,
    joints: &[usize],
    step: usize,
) -> Result<ContactSet, ContactError> {
    let jp = chain.joint_points();
    let mut points = Vec::with_capacity(joints.len());
    let mut axial = Vec::with_capacity(joints.len());
    for &j in joints {
        let p = jp.get(j).ok_or(ContactError::BadJoint(j))?;
        check_penetration(pole, j, p)?;
        let c = pole.project_to_surface(p);
        axial.push(pole.axial(&c));
        points.push(c);
    }
    Ok(ContactSet {
        step,
        joints: joints.to_vec(),
        points,
        axial,
    })
}

/// Contact joints of one configuration: in every window of three consecutive
/// joints, the one closest to the pole axis (ties go to the lower index).
pub fn detect_contacts(
    chain: &PoseChain,
    pole: &Pole,
    step: usize,
) -> Result<ContactSet, ContactError> {
    let jp = chain.joint_points();
    if jp.is_empty() {
        return Err(ContactError::EmptyContacts);
    }
    for (j, p) in jp.iter().enumerate() {
        check_penetration(pole, j, p)?;
    }
    let dist: Vec<f64> = jp.iter().map(|p| pole.distance_to_axis(p)).collect();
    let width = 3.min(dist.len());
    let chosen: BTreeSet<usize> = (0..=dist.len() - width)
        .map(|start| {
            (start..start + width)
                .reduce(|best, j| if dist[j] < dist[best] { j } else { best })
                .expect("window is nonempty")
        })
        .collect();
    let joints: Vec<usize> = chosen.into_iter().collect();
    contacts_at(chain, pole, &joints, step)
}

/// Body advance between two contact observations.
pub fn step_dx(prev: &ContactSet, curr: &ContactSet) -> Result<f64, ContactError> {
    let before = prev.mean_axial().ok_or(ContactError::EmptyContacts)?;
    let after = curr.mean_axial().ok_or(ContactError::EmptyContacts)?;
    Ok(-(after - before))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementEstimate {
    pub per_step_dx: Vec<f64>,
    /// `2 pi r_joint`, or zero when the roll term is disabled (m).
    pub roll_term: f64,
    pub cycles: usize,
    pub rigid_body_total: f64,
    /// Steps whose paired contact sets share fewer than half their joints.
    pub flagged_steps: Vec<usize>,
}

impl DisplacementEstimate {
    fn from_steps(
        per_step_dx: Vec<f64>,
        r_joint: f64,
        cycles: usize,
        roll: bool,
        flagged_steps: Vec<usize>,
    ) -> Self {
        let roll_term = if roll { TAU * r_joint } else { 0.0 };
        let rigid_body_total = per_step_dx.iter().sum::<f64>() + roll_term * cycles as f64;
        Self {
            per_step_dx,
            roll_term,
            cycles,
            rigid_body_total,
            flagged_steps,
        }
    }

    pub fn sum_dx(&self) -> f64 {
        self.per_step_dx.iter().sum()
    }

    /// Sum of `dx` within each consecutive block of `steps_per_cycle` steps.
    pub fn cycle_subtotals(&self, steps_per_cycle: usize) -> Vec<f64> {
        self.per_step_dx
            .chunks(steps_per_cycle.max(1))
            .map(|c| c.iter().sum())
            .collect()
    }
}

fn shares_half(a: &ContactSet, b: &ContactSet) -> bool {
    let common = a.joints.iter().filter(|j| b.joints.contains(j)).count();
    2 * common >= a.len().max(b.len())
}

/// Displacement from an ordered list of contact sets, pairing each set with
/// the next one.
pub fn estimate_displacement(
    sets: &[ContactSet],
    r_joint: f64,
    cycles: usize,
    roll: bool,
) -> Result<DisplacementEstimate, ContactError> {
    if sets.len() < 2 {
        return Err(ContactError::TooFewSets(sets.len()));
    }
    let pairs: Vec<(ContactSet, ContactSet)> = sets
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    estimate_tracked_displacement(&pairs, r_joint, cycles, roll)
}

/// Displacement from explicit `(before, after)` observations per step.
///
/// The simulator observes the joints in contact at step `t` at both `t` and
/// `t + 1`, which is what the no-slip assumption pins to the world.
pub fn estimate_tracked_displacement(
    pairs: &[(ContactSet, ContactSet)],
    r_joint: f64,
    cycles: usize,
    roll: bool,
) -> Result<DisplacementEstimate, ContactError> {
    let mut dx = Vec::with_capacity(pairs.len());
    let mut flagged = Vec::new();
    for (k, (before, after)) in pairs.iter().enumerate() {
        let d = step_dx(before, after).map_err(|e| ContactError::AtStep {
            step: k,
            source: Box::new(e),
        })?;
        if !shares_half(before, after) {
            flagged.push(k);
        }
        dx.push(d);
    }
    Ok(DisplacementEstimate::from_steps(
        dx, r_joint, cycles, roll, flagged,
    ))
}
