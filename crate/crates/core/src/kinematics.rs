//! Forward kinematics of the alternating dorsal/lateral module chain.
//!
//! Module frames have `x` along the module. A dorsal joint rotates the next
//! module about local `z` (positive angles bend toward `+y`); a lateral joint
//! rotates it about local `y` so that positive angles bend toward `+z`.

use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::backbone::BackboneCurve;
use crate::gait::{JointAngles, JointAxis, RobotConfig};
use crate::Vec3;

pub type Pose = Isometry3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("expected {expected} joint angles, got {got}")]
    SizeMismatch { expected: usize, got: usize },
}

/// World-frame poses of every module of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseChain {
    module_poses: Vec<Pose>,
    module_coms: Vec<Vec3>,
    joint_points: Vec<Vec3>,
}

impl PoseChain {
    pub fn module_poses(&self) -> &[Pose] {
        &self.module_poses
    }

    /// Module centers of mass (segment midpoints).
    pub fn module_coms(&self) -> &[Vec3] {
        &self.module_coms
    }

    /// Joint `k` sits at the far end of module `k`.
    pub fn joint_points(&self) -> &[Vec3] {
        &self.joint_points
    }

    pub fn len(&self) -> usize {
        self.module_poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.module_poses.is_empty()
    }

    /// The chain moved by the rigid transform `g`.
    pub fn transformed(&self, g: &Pose) -> PoseChain {
        let pt = |v: &Vec3| g.transform_point(&Point3::from(*v)).coords;
        PoseChain {
            module_poses: self.module_poses.iter().map(|p| g * p).collect(),
            module_coms: self.module_coms.iter().map(pt).collect(),
            joint_points: self.joint_points.iter().map(pt).collect(),
        }
    }
}

fn joint_rotation(axis: JointAxis, angle: f64) -> UnitQuaternion<f64> {
    match axis {
        JointAxis::Dorsal => UnitQuaternion::from_axis_angle(&Vector3::z_axis(), angle),
        JointAxis::Lateral => UnitQuaternion::from_axis_angle(&Vector3::y_axis(), -angle),
    }
}

/// Module poses, COMs and joint points for `angles` with module 0 at `base`.
pub fn forward_kinematics(
    robot: &RobotConfig,
    angles: &JointAngles,
    base: &Pose,
) -> Result<PoseChain, KinematicsError> {
    if angles.len() != robot.n_modules {
        return Err(KinematicsError::SizeMismatch {
            expected: robot.n_modules,
            got: angles.len(),
        });
    }
    let l = robot.module_length;
    let link = Translation3::new(l, 0.0, 0.0);
    let mid = Point3::new(0.5 * l, 0.0, 0.0);
    let tip = Point3::new(l, 0.0, 0.0);

    let n = robot.n_modules;
    let mut module_poses = Vec::with_capacity(n);
    let mut module_coms = Vec::with_capacity(n);
    let mut joint_points = Vec::with_capacity(n);
    let mut pose = *base;
    for (k, (axis, angle)) in angles.iter().enumerate() {
        module_poses.push(pose);
        module_coms.push(pose.transform_point(&mid).coords);
        joint_points.push(pose.transform_point(&tip).coords);
        if k + 1 < n {
            pose *= Isometry3::from_parts(link, joint_rotation(axis, angle));
            pose.rotation.renormalize();
        }
    }
    Ok(PoseChain {
        module_poses,
        module_coms,
        joint_points,
    })
}

/// Least-squares rigid transform taking `from[i]` onto `to[i]` (Kabsch).
pub fn best_rigid_fit(from: &[Vec3], to: &[Vec3]) -> Pose {
    let n = from.len().min(to.len()) as f64;
    let cf = from.iter().sum::<Vec3>() / n;
    let ct = to.iter().sum::<Vec3>() / n;
    let mut h = Matrix3::zeros();
    for (a, b) in from.iter().zip(to) {
        h += (a - cf) * (b - ct).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let d = (v * u.transpose()).determinant().signum();
    let r = v * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * u.transpose();
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let t = ct - rot * cf;
    Isometry3::from_parts(Translation3::from(t), rot)
}

/// Base pose that places the chain's joints (and its base point) as close as
/// possible to the curve points at arc lengths `0, l, 2l, ...`.
pub fn fit_base_pose(
    robot: &RobotConfig,
    angles: &JointAngles,
    curve: &BackboneCurve,
) -> Result<Pose, KinematicsError> {
    let local = forward_kinematics(robot, angles, &Pose::identity())?;
    let mut from = vec![Vec3::zeros()];
    from.extend_from_slice(local.joint_points());
    let to: Vec<Vec3> = (0..from.len())
        .map(|k| curve.point_at(k as f64 * robot.module_length))
        .collect();
    Ok(best_rigid_fit(&from, &to))
}

/// Forward kinematics placed by [`fit_base_pose`].
pub fn fit_chain(
    robot: &RobotConfig,
    angles: &JointAngles,
    curve: &BackboneCurve,
) -> Result<PoseChain, KinematicsError> {
    let base = fit_base_pose(robot, angles, curve)?;
    forward_kinematics(robot, angles, &base)
}

fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let w = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * w)).norm()
}

/// Largest distance from a module COM to the piecewise-linear curve.
pub fn chain_to_curve_error(chain: &PoseChain, curve: &BackboneCurve) -> f64 {
    let pts = curve.points();
    chain
        .module_coms()
        .iter()
        .map(|c| {
            pts.windows(2)
                .map(|w| point_segment_distance(c, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn robot(n: usize, l: f64) -> RobotConfig {
        RobotConfig {
            n_modules: n,
            module_length: l,
            ..RobotConfig::default()
        }
    }

    #[test]
    fn straight_chain() {
        let r = robot(5, 0.2);
        let a = JointAngles::new(vec![0.0; 5], JointAxis::Dorsal);
        let c = forward_kinematics(&r, &a, &Pose::identity()).unwrap();
        for (i, com) in c.module_coms().iter().enumerate() {
            assert!((com - Vec3::new((i as f64 + 0.5) * 0.2, 0.0, 0.0)).norm() < 1e-15);
        }
        assert!((c.joint_points()[4] - Vec3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn planar_chain_matches_turtle_geometry() {
        for n in 3..=6 {
            let theta = 0.37;
            let l = 0.15;
            let r = robot(n, l);
            let angles: Vec<f64> = (0..n)
                .map(|k| if k % 2 == 0 { theta } else { 0.0 })
                .collect();
            let c = forward_kinematics(
                &r,
                &JointAngles::new(angles.clone(), JointAxis::Dorsal),
                &Pose::identity(),
            )
            .unwrap();
            // 2D turtle: heading is the cumulative sum of preceding joint angles
            let mut pos = (0.0f64, 0.0f64);
            let mut heading = 0.0f64;
            for k in 0..n {
                let com = (
                    pos.0 + 0.5 * l * heading.cos(),
                    pos.1 + 0.5 * l * heading.sin(),
                );
                pos = (pos.0 + l * heading.cos(), pos.1 + l * heading.sin());
                let got = c.module_coms()[k];
                assert!((got.x - com.0).abs() < 1e-12 && (got.y - com.1).abs() < 1e-12);
                assert!(got.z.abs() < 1e-15);
                let j = c.joint_points()[k];
                assert!((j.x - pos.0).abs() < 1e-12 && (j.y - pos.1).abs() < 1e-12);
                heading += angles[k];
            }
        }
    }

    #[test]
    fn right_angle_joint() {
        let r = robot(2, 1.0);
        let d = forward_kinematics(
            &r,
            &JointAngles::new(vec![FRAC_PI_2, 0.0], JointAxis::Dorsal),
            &Pose::identity(),
        )
        .unwrap();
        assert!((d.joint_points()[1] - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
        let lat = forward_kinematics(
            &r,
            &JointAngles::new(vec![FRAC_PI_2, 0.0], JointAxis::Lateral),
            &Pose::identity(),
        )
        .unwrap();
        assert!((lat.joint_points()[1] - Vec3::new(1.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn size_mismatch() {
        let r = robot(4, 0.1);
        let a = JointAngles::new(vec![0.0; 3], JointAxis::Dorsal);
        assert_eq!(
            forward_kinematics(&r, &a, &Pose::identity()),
            Err(KinematicsError::SizeMismatch {
                expected: 4,
                got: 3
            })
        );
    }

    #[test]
    fn curve_error_zero_on_curve_and_offset_for_shifted_line() {
        let r = robot(4, 0.25);
        let a = JointAngles::new(vec![0.0; 4], JointAxis::Dorsal);
        let c = forward_kinematics(&r, &a, &Pose::identity()).unwrap();
        let on = BackboneCurve::from_points(
            (0..5)
                .map(|k| Vec3::new(0.25 * k as f64, 0.0, 0.0))
                .collect(),
            0.0,
        )
        .unwrap();
        assert!(chain_to_curve_error(&c, &on) < 1e-12);
        let off = BackboneCurve::from_points(
            (0..5)
                .map(|k| Vec3::new(0.25 * k as f64, 0.03, 0.0))
                .collect(),
            0.0,
        )
        .unwrap();
        assert!((chain_to_curve_error(&c, &off) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn rigid_fit_recovers_known_transform() {
        let pts: Vec<Vec3> = (0..7)
            .map(|k| {
                let t = k as f64 * 0.7;
                Vec3::new(t.cos(), t.sin(), 0.2 * t)
            })
            .collect();
        let g = Isometry3::new(Vector3::new(0.3, -1.0, 2.0), Vector3::new(0.4, -0.2, 1.1));
        let moved: Vec<Vec3> = pts
            .iter()
            .map(|p| g.transform_point(&Point3::from(*p)).coords)
            .collect();
        let fit = best_rigid_fit(&pts, &moved);
        assert!((fit.translation.vector - g.translation.vector).norm() < 1e-12);
        assert!(fit.rotation.angle_to(&g.rotation) < 1e-12);
    }
}
