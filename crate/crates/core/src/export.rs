//! CSV writers. Every number is printed with 9 significant digits so files
//! are byte-stable across runs.

use std::io::{self, Write};

use crate::backbone::BackboneCurve;
use crate::chassis::VirtualChassis;
use crate::contact::ContactSet;
use crate::diffgeo::CurvatureProfile;
use crate::gait::JointTrajectory;
use crate::kinematics::PoseChain;

/// Formats `v` with 9 significant digits, `%g` style: plain notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_owned()
}

fn row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

/// `step,time_s,joint_index,axis,angle_rad`, step-major.
pub fn write_trajectory_csv<W: Write>(w: &mut W, traj: &JointTrajectory) -> io::Result<()> {
    writeln!(w, "step,time_s,joint_index,axis,angle_rad")?;
    for st in &traj.steps {
        let time = fmt_num(st.time);
        for (k, (axis, angle)) in st.angles.iter().enumerate() {
            row(
                w,
                &[
                    st.step.to_string(),
                    time.clone(),
                    k.to_string(),
                    axis.as_str().to_owned(),
                    fmt_num(angle),
                ],
            )?;
        }
    }
    Ok(())
}

/// `h,idx,x,y,z,s` for each curve in order.
pub fn write_curves_csv<'a, W: Write>(
    w: &mut W,
    curves: impl IntoIterator<Item = &'a BackboneCurve>,
) -> io::Result<()> {
    writeln!(w, "h,idx,x,y,z,s")?;
    for c in curves {
        let h = fmt_num(c.keyframe_time());
        for (k, (p, s)) in c.points().iter().zip(c.arc_lengths()).enumerate() {
            row(
                w,
                &[
                    h.clone(),
                    k.to_string(),
                    fmt_num(p.x),
                    fmt_num(p.y),
                    fmt_num(p.z),
                    fmt_num(*s),
                ],
            )?;
        }
    }
    Ok(())
}

/// `s,kappa,tau,tau_integral`.
pub fn write_profile_csv<W: Write>(w: &mut W, profile: &CurvatureProfile) -> io::Result<()> {
    writeln!(w, "s,kappa,tau,tau_integral")?;
    for k in 0..profile.len() {
        row(
            w,
            &[
                fmt_num(profile.arc_lengths()[k]),
                fmt_num(profile.kappa()[k]),
                fmt_num(profile.tau()[k]),
                fmt_num(profile.tau_integral()[k]),
            ],
        )?;
    }
    Ok(())
}

/// `step,module_index,x,y,z,qw,qx,qy,qz` with the module frame origin.
pub fn write_poses_csv<W: Write>(w: &mut W, chains: &[PoseChain]) -> io::Result<()> {
    writeln!(w, "step,module_index,x,y,z,qw,qx,qy,qz")?;
    for (step, chain) in chains.iter().enumerate() {
        for (m, pose) in chain.module_poses().iter().enumerate() {
            let t = pose.translation.vector;
            let q = pose.rotation.quaternion();
            row(
                w,
                &[
                    step.to_string(),
                    m.to_string(),
                    fmt_num(t.x),
                    fmt_num(t.y),
                    fmt_num(t.z),
                    fmt_num(q.w),
                    fmt_num(q.i),
                    fmt_num(q.j),
                    fmt_num(q.k),
                ],
            )?;
        }
    }
    Ok(())
}

/// `step,ox,oy,oz,a00..a22,sv1,sv2,sv3` with the axes matrix row-major.
pub fn write_chassis_csv<W: Write>(w: &mut W, frames: &[VirtualChassis]) -> io::Result<()> {
    writeln!(
        w,
        "step,ox,oy,oz,a00,a01,a02,a10,a11,a12,a20,a21,a22,sv1,sv2,sv3"
    )?;
    for (step, c) in frames.iter().enumerate() {
        let mut f = vec![step.to_string()];
        f.extend(c.origin.iter().map(|v| fmt_num(*v)));
        for i in 0..3 {
            for j in 0..3 {
                f.push(fmt_num(c.axes[(i, j)]));
            }
        }
        f.extend(c.singular_values.iter().map(|v| fmt_num(*v)));
        row(w, &f)?;
    }
    Ok(())
}

/// `step,joint_index,x,y,z,axial_coord`.
pub fn write_contacts_csv<W: Write>(w: &mut W, sets: &[ContactSet]) -> io::Result<()> {
    writeln!(w, "step,joint_index,x,y,z,axial_coord")?;
    for set in sets {
        for ((j, p), a) in set.joints.iter().zip(&set.points).zip(&set.axial) {
            row(
                w,
                &[
                    set.step.to_string(),
                    j.to_string(),
                    fmt_num(p.x),
                    fmt_num(p.y),
                    fmt_num(p.z),
                    fmt_num(*a),
                ],
            )?;
        }
    }
    Ok(())
}
