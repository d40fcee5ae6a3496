//! Virtual chassis: a body frame at the mean module position whose axes are
//! the principal directions of the zero-mean module cloud.
//!
//! Singular vectors are only defined up to sign, so each axis is flipped to
//! agree with the previous frame's matching axis. Without a previous frame
//! the first axis points along `+z` (the pole axis) and the second along
//! `+y`; the third is always `axis1 x axis2`.

use nalgebra::{DMatrix, Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};
use thiserror::Error;

use crate::kinematics::PoseChain;
use crate::Vec3;

/// `sv2 / sv1` below this ratio counts as a rank-deficient cloud.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChassisError {
    #[error("no points to build a virtual chassis from")]
    Empty,
    /// The cloud is (nearly) collinear; `fallback` carries a frame whose first
    /// axis follows the line and whose other axes are an arbitrary completion.
    #[error("module positions are collinear; secondary axes are undefined")]
    DegenerateCloud { fallback: Box<VirtualChassis> },
    #[error("frame {frame}: {source}")]
    AtFrame {
        frame: usize,
        #[source]
        source: Box<ChassisError>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualChassis {
    pub origin: Vec3,
    /// Columns are the principal axes, strongest first; a proper rotation.
    pub axes: Matrix3<f64>,
    /// Descending singular values of the zero-mean position matrix.
    pub singular_values: [f64; 3],
}

impl VirtualChassis {
    pub fn pose(&self) -> Isometry3<f64> {
        let rot =
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.axes));
        Isometry3::from_parts(Translation3::from(self.origin), rot)
    }

    /// Coordinates of a world point in the chassis frame.
    pub fn to_body(&self, p: &Vec3) -> Vec3 {
        self.axes.transpose() * (p - self.origin)
    }

    /// Largest absolute angle (rad) between matching axes of two frames.
    pub fn max_axis_angle(&self, other: &VirtualChassis) -> f64 {
        (0..3)
            .map(|k| {
                let d = self.axes.column(k).dot(&other.axes.column(k));
                d.clamp(-1.0, 1.0).acos()
            })
            .fold(0.0, f64::max)
    }
}

struct Decomposition {
    origin: Vec3,
    u: DMatrix<f64>,
    sv: [f64; 3],
    v: Matrix3<f64>,
    p: DMatrix<f64>,
}

fn decompose(coms: &[Vec3]) -> Result<Decomposition, ChassisError> {
    if coms.is_empty() {
        return Err(ChassisError::Empty);
    }
    let n = coms.len();
    let origin = coms.iter().sum::<Vec3>() / n as f64;
    let p = DMatrix::from_fn(n, 3, |i, j| coms[i][j] - origin[j]);
    // pad to at least 3 rows so the thin SVD always has three right vectors
    let padded = if n < 3 {
        DMatrix::from_fn(3, 3, |i, j| if i < n { p[(i, j)] } else { 0.0 })
    } else {
        p.clone()
    };
    let svd = padded.svd(true, true);
    let u_raw = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut v = Matrix3::zeros();
    let mut u = DMatrix::zeros(n, 3);
    let mut sv = [0.0; 3];
    for (dst, &src) in order.iter().enumerate() {
        sv[dst] = svd.singular_values[src];
        v.set_column(dst, &vt.row(src).transpose());
        for i in 0..n {
            u[(i, dst)] = u_raw[(i, src)];
        }
    }
    Ok(Decomposition {
        origin,
        u,
        sv,
        v,
        p,
    })
}

/// Frobenius norm of `P - U S V^T` for the zero-mean cloud of `coms`.
pub fn svd_residual(coms: &[Vec3]) -> Result<f64, ChassisError> {
    let d = decompose(coms)?;
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&d.sv));
    let v = DMatrix::from_fn(3, 3, |i, j| d.v[(i, j)]);
    Ok((&d.p - &d.u * s * v.transpose()).norm())
}

fn largest_component_positive(v: Vec3) -> Vec3 {
    let k = v.iamax();
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

fn align(v: Vec3, reference: Vec3) -> Vec3 {
    let d = v.dot(&reference);
    if d.abs() <= 1e-12 {
        largest_component_positive(v)
    } else if d < 0.0 {
        -v
    } else {
        v
    }
}

fn any_perpendicular(a: &Vec3) -> Vec3 {
    let k = a.iamin();
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    a.cross(&e).normalize()
}

/// Body frame of one configuration. `prev` resolves the sign of each axis.
pub fn virtual_chassis(
    coms: &[Vec3],
    prev: Option<&VirtualChassis>,
) -> Result<VirtualChassis, ChassisError> {
    let d = decompose(coms)?;
    let refs = match prev {
        Some(p) => [
            p.axes.column(0).into_owned(),
            p.axes.column(1).into_owned(),
            p.axes.column(2).into_owned(),
        ],
        None => [Vec3::z(), Vec3::y(), Vec3::x()],
    };

    let degenerate = !(d.sv[1] > RANK_TOLERANCE * d.sv[0]);
    let a1 = if d.sv[0] > 0.0 {
        align(d.v.column(0).into_owned(), refs[0])
    } else {
        refs[0]
    };
    let a2 = if degenerate {
        let mut c = refs[1] - a1 * a1.dot(&refs[1]);
        if c.norm() < 1e-9 {
            c = any_perpendicular(&a1);
        }
        c.normalize()
    } else {
        align(d.v.column(1).into_owned(), refs[1])
    };
    let a3 = a1.cross(&a2);
    let chassis = VirtualChassis {
        origin: d.origin,
        axes: Matrix3::from_columns(&[a1, a2, a3]),
        singular_values: d.sv,
    };
    if degenerate {
        return Err(ChassisError::DegenerateCloud {
            fallback: Box::new(chassis),
        });
    }
    Ok(chassis)
}

/// Chassis for every chain, each frame's signs chained to the previous one.
pub fn chassis_trajectory(chains: &[PoseChain]) -> Result<Vec<VirtualChassis>, ChassisError> {
    if chains.is_empty() {
        return Err(ChassisError::Empty);
    }
    let mut out: Vec<VirtualChassis> = Vec::with_capacity(chains.len());
    for (frame, chain) in chains.iter().enumerate() {
        let c = virtual_chassis(chain.module_coms(), out.last()).map_err(|e| {
            ChassisError::AtFrame {
                frame,
                source: Box::new(e),
            }
        })?;
        out.push(c);
    }
    Ok(out)
}
