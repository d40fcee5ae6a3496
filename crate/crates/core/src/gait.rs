//! Joint-angle generation by curvature integration.
//!
//! Joints alternate between dorsal and lateral axes. Joint `k` (0-based) sits
//! at arc length `(k + 1) l` and integrates curvature over the two-module
//! window `[k l, (k + 2) l]`, so the body needs a curvature profile covering
//! `[0, (n + 1) l]`.
//!
//! With `C_k = ∫ kappa cos(Psi) ds` and `S_k = ∫ kappa sin(Psi) ds` over that
//! window (`Psi` the running torsion integral) and roll offset `phi0`:
//!
//! ```text
//! dorsal  = cos(phi0) C_k - sin(phi0) S_k
//! lateral = sin(phi0) C_k + cos(phi0) S_k
//! ```

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backbone::{self, BackboneCurve, BackboneError, GaitParams};
use crate::diffgeo::{self, CurvatureProfile, DiffGeoError};
use crate::quadrature::{interpolate, trapezoid_window};

/// Relative slack added on top of `(n + 1) l` when fitting the curve span.
pub const SPAN_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaitError {
    #[error("invalid robot parameter `{field}`: {reason}")]
    InvalidRobot { field: &'static str, reason: String },
    #[error("curvature profile covers {available} m but the body needs {required} m")]
    DomainTooShort { required: f64, available: f64 },
    #[error("joint {joint} angle {value} rad exceeds the limit of {limit} rad")]
    JointLimitExceeded {
        joint: usize,
        value: f64,
        limit: f64,
    },
    #[error("n_steps and cycles must be positive (got {n_steps}, {cycles})")]
    InvalidSchedule { n_steps: usize, cycles: usize },
    #[error("sampled curvature arrays are malformed: {0}")]
    BadSamples(&'static str),
    #[error(transparent)]
    Backbone(#[from] BackboneError),
    #[error(transparent)]
    DiffGeo(#[from] DiffGeoError),
    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<GaitError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointAxis {
    Dorsal,
    Lateral,
}

impl JointAxis {
    pub fn other(self) -> Self {
        match self {
            JointAxis::Dorsal => JointAxis::Lateral,
            JointAxis::Lateral => JointAxis::Dorsal,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JointAxis::Dorsal => "dorsal",
            JointAxis::Lateral => "lateral",
        }
    }
}

/// Geometry of the modular chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotConfig {
    pub n_modules: usize,
    /// Module length `l` (m).
    pub module_length: f64,
    /// Module radius (m); the backbone sits this far off the pole surface.
    pub joint_radius: f64,
    pub first_joint_axis: JointAxis,
    /// Largest admissible `|angle|` (rad).
    pub joint_limit: f64,
}

impl Default for RobotConfig {
    /// 20 modules, `l = 0.0889 m`, `r_joint = 0.0254 m`. The module length is
    /// an implementer default, not a measured value.
    fn default() -> Self {
        Self {
            n_modules: 20,
            module_length: 0.0889,
            joint_radius: 0.0254,
            first_joint_axis: JointAxis::Dorsal,
            joint_limit: FRAC_PI_2,
        }
    }
}

impl RobotConfig {
    pub fn validate(&self) -> Result<(), GaitError> {
        if self.n_modules < 2 {
            return Err(GaitError::InvalidRobot {
                field: "n_modules",
                reason: format!("must be >= 2, got {}", self.n_modules),
            });
        }
        for (field, v) in [
            ("module_length", self.module_length),
            ("joint_radius", self.joint_radius),
            ("joint_limit", self.joint_limit),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(GaitError::InvalidRobot {
                    field,
                    reason: format!("must be finite and > 0, got {v}"),
                });
            }
        }
        Ok(())
    }

    /// Axis of joint `k` (0-based).
    pub fn axis(&self, k: usize) -> JointAxis {
        if k % 2 == 0 {
            self.first_joint_axis
        } else {
            self.first_joint_axis.other()
        }
    }

    /// Arc length the curvature profile must cover, `(n + 1) l`.
    pub fn required_length(&self) -> f64 {
        (self.n_modules + 1) as f64 * self.module_length
    }

    /// Integration window of joint `k` (0-based).
    pub fn window(&self, k: usize) -> (f64, f64) {
        let l = self.module_length;
        (k as f64 * l, (k + 2) as f64 * l)
    }
}

/// One angle per joint; joint `k` uses [`RobotConfig::axis`]`(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAngles {
    angles: Vec<f64>,
    first_axis: JointAxis,
}

impl JointAngles {
    pub fn new(angles: Vec<f64>, first_axis: JointAxis) -> Self {
        Self { angles, first_axis }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn axis(&self, k: usize) -> JointAxis {
        if k % 2 == 0 {
            self.first_axis
        } else {
            self.first_axis.other()
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (JointAxis, f64)> + '_ {
        self.angles
            .iter()
            .enumerate()
            .map(|(k, &a)| (self.axis(k), a))
    }

    pub fn max_abs(&self) -> f64 {
        self.angles.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    fn check_limit(&self, limit: f64) -> Result<(), GaitError> {
        match self
            .angles
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.abs() <= limit))
        {
            Some((joint, &value)) => Err(GaitError::JointLimitExceeded {
                joint,
                value,
                limit,
            }),
            None => Ok(()),
        }
    }
}

/// A scalar function of arc length known at increasing sample points.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    s: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(s: Vec<f64>, values: Vec<f64>) -> Result<Self, GaitError> {
        if s.len() != values.len() {
            return Err(GaitError::BadSamples("length mismatch"));
        }
        if s.len() < 2 {
            return Err(GaitError::BadSamples("need at least two samples"));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(GaitError::BadSamples("arc lengths must increase"));
        }
        Ok(Self { s, values })
    }

    /// Samples `f` on `n` uniform points over `[0, length]`.
    pub fn from_fn(length: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self, GaitError> {
        let s: Vec<f64> = (0..n).map(|k| length * k as f64 / (n - 1) as f64).collect();
        let values = s.iter().map(|&x| f(x)).collect();
        Self::new(s, values)
    }

    pub fn domain_end(&self) -> f64 {
        *self.s.last().expect("at least two samples")
    }

    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        trapezoid_window(
            &self.s,
            a,
            b,
            |k| self.values[k],
            |x| interpolate(&self.s, &self.values, x),
        )
    }
}

fn check_domain(available: f64, robot: &RobotConfig) -> Result<(), GaitError> {
    let required = robot.required_length();
    if available < required * (1.0 - 1e-12) {
        return Err(GaitError::DomainTooShort {
            required,
            available,
        });
    }
    Ok(())
}

/// Joint angles from separate dorsal and lateral curvature functions: each
/// joint integrates the curvature matching its axis over its window.
pub fn bellows_angles(
    kappa_dorsal: &SampledFunction,
    kappa_lateral: &SampledFunction,
    robot: &RobotConfig,
) -> Result<JointAngles, GaitError> {
    robot.validate()?;
    check_domain(
        kappa_dorsal.domain_end().min(kappa_lateral.domain_end()),
        robot,
    )?;
    let angles = (0..robot.n_modules)
        .map(|k| {
            let (a, b) = robot.window(k);
            match robot.axis(k) {
                JointAxis::Dorsal => kappa_dorsal.integrate(a, b),
                JointAxis::Lateral => kappa_lateral.integrate(a, b),
            }
        })
        .collect();
    Ok(JointAngles::new(angles, robot.first_joint_axis))
}

/// `(C_k, S_k)` for every joint window, with zero phase.
pub fn segment_coefficients(
    profile: &CurvatureProfile,
    robot: &RobotConfig,
) -> Result<Vec<(f64, f64)>, GaitError> {
    robot.validate()?;
    check_domain(profile.length(), robot)?;
    (0..robot.n_modules)
        .map(|k| {
            let (a, b) = robot.window(k);
            Ok(diffgeo::profile_segment_integrals(profile, a, b, 0.0)?)
        })
        .collect()
}

/// Combines window coefficients with a roll offset, without the limit check.
pub fn angles_from_coefficients(
    coeffs: &[(f64, f64)],
    robot: &RobotConfig,
    phi0: f64,
) -> JointAngles {
    let (sin, cos) = phi0.sin_cos();
    let angles = coeffs
        .iter()
        .enumerate()
        .map(|(k, &(c, s))| match robot.axis(k) {
            JointAxis::Dorsal => cos * c - sin * s,
            JointAxis::Lateral => sin * c + cos * s,
        })
        .collect();
    JointAngles::new(angles, robot.first_joint_axis)
}

/// Joint angles for one keyframe's curvature profile and roll offset `phi0`.
pub fn keyframe_angles(
    profile: &CurvatureProfile,
    robot: &RobotConfig,
    phi0: f64,
) -> Result<JointAngles, GaitError> {
    let coeffs = segment_coefficients(profile, robot)?;
    let angles = angles_from_coefficients(&coeffs, robot, phi0);
    angles.check_limit(robot.joint_limit)?;
    Ok(angles)
}

/// Sampling densities of the keyframe pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    /// Points on the uniform arc-length grid fed to the curvature stencils.
    pub profile_samples: usize,
    /// Raw samples per grid point taken before resampling; keeps the
    /// piecewise-linear resampling error well below the stencil error.
    pub oversample: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            profile_samples: 401,
            oversample: 16,
        }
    }
}

/// Everything derived from one keyframe time.
#[derive(Debug, Clone)]
pub struct Keyframe {
    pub time: f64,
    pub phi0: f64,
    pub curve: BackboneCurve,
    pub profile: CurvatureProfile,
    pub angles: JointAngles,
}

/// Backbone, uniform-`s` resampling, curvature profile and joint angles at `h`.
pub fn keyframe(
    params: &GaitParams,
    robot: &RobotConfig,
    h: f64,
    disc: &Discretization,
) -> Result<Keyframe, GaitError> {
    let raw = backbone::sample_backbone(params, h, disc.profile_samples * disc.oversample)?;
    let curve = backbone::resample_by_arclength(&raw, disc.profile_samples)?;
    let profile = diffgeo::frenet_profile(&curve)?;
    let phi0 = params.phi0(h);
    let angles = keyframe_angles(&profile, robot, phi0)?;
    Ok(Keyframe {
        time: h,
        phi0,
        curve,
        profile,
        angles,
    })
}

/// Copy of `params` whose `t_max` makes every keyframe curve just long
/// enough for the body.
pub fn fit_body_span(
    params: &GaitParams,
    robot: &RobotConfig,
    n_steps: usize,
) -> Result<GaitParams, GaitError> {
    robot.validate()?;
    if n_steps == 0 {
        return Err(GaitError::InvalidSchedule { n_steps, cycles: 1 });
    }
    let target = robot.required_length() * (1.0 + SPAN_MARGIN);
    let times = if params.amp_long == 0.0 && params.amp_radial == 0.0 {
        vec![0.0]
    } else {
        params.keyframe_times(n_steps)
    };
    let t_max = backbone::fit_t_max(params, target, &times)?;
    Ok(GaitParams { t_max, ..*params })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaitKind {
    Acl,
    Rolling,
}

impl GaitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GaitKind::Acl => "acl",
            GaitKind::Rolling => "rolling",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub step: usize,
    pub time: f64,
    pub angles: JointAngles,
}

/// Joint commands at uniformly spaced times `step * T / n_steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTrajectory {
    pub steps: Vec<TrajectoryStep>,
    pub n_steps: usize,
    pub cycles: usize,
    pub period: f64,
}

impl JointTrajectory {
    /// Repeats one cycle of angles `cycles` times.
    pub(crate) fn periodic(cycle: Vec<JointAngles>, period: f64, cycles: usize) -> Self {
        let n_steps = cycle.len();
        let dt = period / n_steps as f64;
        let steps = (0..cycles)
            .flat_map(|c| {
                cycle
                    .iter()
                    .enumerate()
                    .map(move |(j, a)| (c * n_steps + j, a))
            })
            .map(|(step, angles)| TrajectoryStep {
                step,
                time: step as f64 * dt,
                angles: angles.clone(),
            })
            .collect();
        Self {
            steps,
            n_steps,
            cycles,
            period,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn max_abs_angle(&self) -> f64 {
        self.steps
            .iter()
            .fold(0.0, |m, s| m.max(s.angles.max_abs()))
    }
}

fn check_schedule(n_steps: usize, cycles: usize) -> Result<(), GaitError> {
    if n_steps == 0 || cycles == 0 {
        return Err(GaitError::InvalidSchedule { n_steps, cycles });
    }
    Ok(())
}

/// One cycle of ACL keyframes, computed in parallel and returned in step order.
pub fn acl_keyframes(
    params: &GaitParams,
    robot: &RobotConfig,
    n_steps: usize,
    disc: &Discretization,
) -> Result<Vec<Keyframe>, GaitError> {
    check_schedule(n_steps, 1)?;
    robot.validate()?;
    params.validate()?;
    params
        .keyframe_times(n_steps)
        .into_par_iter()
        .enumerate()
        .map(|(step, h)| {
            keyframe(params, robot, h, disc).map_err(|e| GaitError::AtStep {
                step,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Rolling helix keyframes: the backbone is frozen at `h = 0` with `A_p = 0`
/// and only the roll offset advances.
pub fn rolling_keyframes(
    params: &GaitParams,
    robot: &RobotConfig,
    n_steps: usize,
    disc: &Discretization,
) -> Result<Vec<Keyframe>, GaitError> {
    check_schedule(n_steps, 1)?;
    let frozen = rolling_params(params);
    let base = keyframe(
        &GaitParams {
            phi0_init: 0.0,
            phi0_rate: 0.0,
            ..frozen
        },
        robot,
        0.0,
        disc,
    )?;
    let coeffs = segment_coefficients(&base.profile, robot)?;
    frozen
        .keyframe_times(n_steps)
        .into_iter()
        .enumerate()
        .map(|(step, h)| {
            let phi0 = frozen.phi0(h);
            let angles = angles_from_coefficients(&coeffs, robot, phi0);
            angles
                .check_limit(robot.joint_limit)
                .map_err(|e| GaitError::AtStep {
                    step,
                    source: Box::new(e),
                })?;
            Ok(Keyframe {
                time: h,
                phi0,
                curve: base.curve.clone(),
                profile: base.profile.clone(),
                angles,
            })
        })
        .collect()
}

/// `params` with the longitudinal and radial modulation removed, leaving a
/// constant helix.
pub fn rolling_params(params: &GaitParams) -> GaitParams {
    GaitParams {
        amp_long: 0.0,
        amp_radial: 0.0,
        ..*params
    }
}

/// Default roll rate of the rolling helix: one full roll per period.
pub fn rolling_phi0_rate(period: f64) -> f64 {
    TAU / period
}

/// ACL joint trajectory over `cycles` periods of `n_steps` keyframes each.
pub fn acl_trajectory(
    params: &GaitParams,
    robot: &RobotConfig,
    n_steps: usize,
    cycles: usize,
) -> Result<JointTrajectory, GaitError> {
    check_schedule(n_steps, cycles)?;
    let frames = acl_keyframes(params, robot, n_steps, &Discretization::default())?;
    Ok(JointTrajectory::periodic(
        frames.into_iter().map(|k| k.angles).collect(),
        params.period,
        cycles,
    ))
}

/// Rolling helix baseline; `amp_long` is ignored.
pub fn rolling_helix_trajectory(
    params: &GaitParams,
    robot: &RobotConfig,
    n_steps: usize,
    cycles: usize,
) -> Result<JointTrajectory, GaitError> {
    check_schedule(n_steps, cycles)?;
    let frames = rolling_keyframes(params, robot, n_steps, &Discretization::default())?;
    Ok(JointTrajectory::periodic(
        frames.into_iter().map(|k| k.angles).collect(),
        params.period,
        cycles,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn robot(n: usize, l: f64) -> RobotConfig {
        RobotConfig {
            n_modules: n,
            module_length: l,
            ..RobotConfig::default()
        }
    }

    fn constant_profile(len: f64, kappa: f64, tau: f64) -> CurvatureProfile {
        let n = 801;
        let s = (0..n).map(|k| len * k as f64 / (n - 1) as f64).collect();
        CurvatureProfile::from_samples(s, vec![kappa; n], vec![tau; n]).unwrap()
    }

    #[test]
    fn bellows_constant_dorsal_curvature() {
        let r = robot(6, 0.1);
        let kd = SampledFunction::from_fn(0.7, 71, |_| 0.8).unwrap();
        let kl = SampledFunction::from_fn(0.7, 71, |_| 0.0).unwrap();
        let a = bellows_angles(&kd, &kl, &r).unwrap();
        for (axis, v) in a.iter() {
            match axis {
                JointAxis::Dorsal => assert!((v - 2.0 * 0.1 * 0.8).abs() < 1e-14),
                JointAxis::Lateral => assert_eq!(v, 0.0),
            }
        }
        let zero = bellows_angles(&kl, &kl, &r).unwrap();
        assert!(zero.angles().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bellows_linear_curvature_first_joint() {
        // fine-grid oracle for ∫_0^1 s ds
        let oracle: f64 = {
            let n = 100_000;
            let h = 1.0 / n as f64;
            (0..n).map(|k| (k as f64 + 0.5) * h * h).sum()
        };
        assert!((oracle - 0.5).abs() < 1e-9);
        let r = robot(3, 0.5);
        let kd = SampledFunction::from_fn(2.0, 9, |s| s).unwrap();
        let kl = SampledFunction::from_fn(2.0, 9, |_| 0.0).unwrap();
        let a = bellows_angles(&kd, &kl, &r).unwrap();
        assert!((a.angles()[0] - oracle).abs() < 1e-9);
    }

    #[test]
    fn bellows_domain_too_short() {
        let r = robot(6, 0.1);
        let k = SampledFunction::from_fn(0.6, 61, |_| 1.0).unwrap();
        assert!(matches!(
            bellows_angles(&k, &k, &r),
            Err(GaitError::DomainTooShort { .. })
        ));
    }

    #[test]
    fn keyframe_angles_zero_curvature() {
        let r = robot(8, 0.1);
        let p = constant_profile(1.0, 0.0, 0.4);
        for phi in [0.0, 1.0, -2.5] {
            let a = keyframe_angles(&p, &r, phi).unwrap();
            assert!(a.angles().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn keyframe_angles_planar_swap_with_roll() {
        let (l, c) = (0.1, 1.3);
        let r = robot(8, l);
        let p = constant_profile(1.0, c, 0.0);
        let a = keyframe_angles(&p, &r, 0.0).unwrap();
        let b = keyframe_angles(&p, &r, PI / 2.0).unwrap();
        for k in 0..8 {
            let (expect_a, expect_b) = match r.axis(k) {
                JointAxis::Dorsal => (2.0 * l * c, 0.0),
                JointAxis::Lateral => (0.0, 2.0 * l * c),
            };
            assert!((a.angles()[k] - expect_a).abs() < 1e-12);
            assert!((b.angles()[k] - expect_b).abs() < 1e-12);
        }
    }

    #[test]
    fn joint_limit_is_a_hard_error() {
        let r = RobotConfig {
            joint_limit: 0.1,
            ..robot(4, 0.1)
        };
        let p = constant_profile(1.0, 2.0, 0.0);
        match keyframe_angles(&p, &r, 0.0) {
            Err(GaitError::JointLimitExceeded { joint, value, .. }) => {
                assert_eq!(joint, 0);
                assert!((value - 0.4).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn robot_validation_names_field() {
        let r = RobotConfig {
            module_length: -1.0,
            ..RobotConfig::default()
        };
        assert!(matches!(
            r.validate(),
            Err(GaitError::InvalidRobot {
                field: "module_length",
                ..
            })
        ));
    }

    #[test]
    fn alternation_follows_first_axis() {
        let r = RobotConfig {
            first_joint_axis: JointAxis::Lateral,
            ..RobotConfig::default()
        };
        assert_eq!(r.axis(0), JointAxis::Lateral);
        assert_eq!(r.axis(1), JointAxis::Dorsal);
        assert_eq!(r.axis(19), JointAxis::Dorsal);
    }

    #[test]
    fn zero_steps_rejected() {
        let p = GaitParams::default();
        assert!(matches!(
            acl_trajectory(&p, &RobotConfig::default(), 0, 1),
            Err(GaitError::InvalidSchedule { .. })
        ));
    }
}
