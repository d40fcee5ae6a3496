//! Numerical curvature, torsion and torsion integral of sampled curves.
//!
//! Derivatives with respect to arc length come from five-point finite
//! difference stencils on a uniform `s` grid (centered in the interior,
//! shifted at the ends). Curvature and torsion follow the Frenet identities
//!
//! ```text
//! kappa = |r' x r''| / |r'|^3
//! tau   = (r' x r'') . r''' / |r' x r''|^2
//! ```
//!
//! which do not depend on the parametrization speed, so the small mismatch
//! between chord length and true arc length does not bias them.

use thiserror::Error;

use crate::backbone::BackboneCurve;
use crate::quadrature::{cumulative_trapezoid, interpolate, trapezoid_window};
use crate::Vec3;

const STENCIL: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffGeoError {
    #[error("curvature needs at least {STENCIL} samples, got {0}")]
    TooFewSamples(usize),
    #[error("arc-length grid is not uniform (resample the curve first)")]
    NonUniformGrid,
    #[error("curve is degenerate (|r' x r''| below threshold) at sample {index}")]
    DegenerateCurve { index: usize },
    #[error("integration window [{a}, {b}] outside profile domain [0, {max}]")]
    OutOfRange { a: f64, b: f64, max: f64 },
    #[error("profile arrays differ in length")]
    LengthMismatch,
    #[error("profile arc lengths must be strictly increasing")]
    NotIncreasing,
    #[error("curvature must be non-negative, got {value} at sample {index}")]
    NegativeCurvature { index: usize, value: f64 },
}

/// What to do when `|r' x r''|` vanishes somewhere along the curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Fail with [`DiffGeoError::DegenerateCurve`] at the first singular interior sample.
    #[default]
    Strict,
    /// Hold torsion at its last well-defined value and flag the profile.
    /// A curve with no well-defined sample still fails.
    HoldTorsion,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrenetOptions {
    /// Threshold on `|r' x r''|` (SI units).
    pub eps_singular: f64,
    pub policy: SingularPolicy,
}

impl Default for FrenetOptions {
    fn default() -> Self {
        Self {
            eps_singular: 1e-9,
            policy: SingularPolicy::Strict,
        }
    }
}

/// Curvature, torsion and running torsion integral sampled along arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureProfile {
    s: Vec<f64>,
    kappa: Vec<f64>,
    tau: Vec<f64>,
    tau_integral: Vec<f64>,
    torsion_held: bool,
}

impl CurvatureProfile {
    /// Builds a profile from sampled `kappa` and `tau`; the torsion integral
    /// is the trapezoidal antiderivative of `tau`.
    pub fn from_samples(s: Vec<f64>, kappa: Vec<f64>, tau: Vec<f64>) -> Result<Self, DiffGeoError> {
        if s.len() != kappa.len() || s.len() != tau.len() {
            return Err(DiffGeoError::LengthMismatch);
        }
        if s.len() < 2 {
            return Err(DiffGeoError::TooFewSamples(s.len()));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DiffGeoError::NotIncreasing);
        }
        if let Some((index, &value)) = kappa.iter().enumerate().find(|(_, k)| !(**k >= 0.0)) {
            return Err(DiffGeoError::NegativeCurvature { index, value });
        }
        let tau_integral = cumulative_trapezoid(&s, &tau);
        Ok(Self {
            s,
            kappa,
            tau,
            tau_integral,
            torsion_held: false,
        })
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.s
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    /// Running integral of torsion, zero at `s = 0`.
    pub fn tau_integral(&self) -> &[f64] {
        &self.tau_integral
    }

    /// True when torsion was held across a near-straight stretch.
    pub fn torsion_held(&self) -> bool {
        self.torsion_held
    }

    pub fn length(&self) -> f64 {
        *self.s.last().expect("profile is never empty")
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// Finite-difference weights for derivatives `0..=order` at `z` from nodes `x`
/// (Fornberg's recursion). `w[j][k]` weighs node `j` for derivative `k`.
fn fd_weights(z: f64, x: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c
}

/// First three derivatives at every sample of a uniformly spaced sequence.
fn derivatives(points: &[Vec3], h: f64) -> Vec<[Vec3; 3]> {
    let n = points.len();
    let nodes: Vec<f64> = (0..STENCIL).map(|k| k as f64).collect();
    // weights for evaluating at each of the five stencil positions
    let tables: Vec<Vec<Vec<f64>>> = (0..STENCIL)
        .map(|c| fd_weights(c as f64, &nodes, 3))
        .collect();
    let scale = [1.0 / h, 1.0 / (h * h), 1.0 / (h * h * h)];
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(2).min(n - STENCIL);
            let w = &tables[i - start];
            let mut d = [Vec3::zeros(); 3];
            for (j, p) in points[start..start + STENCIL].iter().enumerate() {
                for (k, dk) in d.iter_mut().enumerate() {
                    *dk += p * w[j][k + 1];
                }
            }
            for (dk, sc) in d.iter_mut().zip(scale) {
                *dk *= sc;
            }
            d
        })
        .collect()
}

/// Curvature profile of a curve sampled uniformly in arc length, with default options.
pub fn frenet_profile(curve: &BackboneCurve) -> Result<CurvatureProfile, DiffGeoError> {
    frenet_profile_with(curve, &FrenetOptions::default())
}

pub fn frenet_profile_with(
    curve: &BackboneCurve,
    opts: &FrenetOptions,
) -> Result<CurvatureProfile, DiffGeoError> {
    let n = curve.len();
    if n < STENCIL {
        return Err(DiffGeoError::TooFewSamples(n));
    }
    let s = curve.arc_lengths();
    let h = curve.length() / (n - 1) as f64;
    let uniform = s.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return Err(DiffGeoError::NonUniformGrid);
    }

    let d = derivatives(curve.points(), h);
    let mut kappa = Vec::with_capacity(n);
    let mut tau: Vec<Option<f64>> = Vec::with_capacity(n);
    for (i, [d1, d2, d3]) in d.iter().enumerate() {
        let cross = d1.cross(d2);
        let cn = cross.norm();
        let speed = d1.norm();
        kappa.push(cn / (speed * speed * speed));
        if cn < opts.eps_singular {
            let interior = i > 0 && i + 1 < n;
            if interior && opts.policy == SingularPolicy::Strict {
                return Err(DiffGeoError::DegenerateCurve { index: i });
            }
            tau.push(None);
        } else {
            tau.push(Some(cross.dot(d3) / (cn * cn)));
        }
    }

    let first_defined = tau
        .iter()
        .position(Option::is_some)
        .ok_or(DiffGeoError::DegenerateCurve { index: n / 2 })?;
    let mut held = false;
    let mut last = tau[first_defined].expect("checked above");
    let tau: Vec<f64> = tau
        .into_iter()
        .map(|t| match t {
            Some(v) => {
                last = v;
                v
            }
            None => {
                held = true;
                last
            }
        })
        .collect();

    let tau_integral = cumulative_trapezoid(s, &tau);
    Ok(CurvatureProfile {
        s: s.to_vec(),
        kappa,
        tau,
        tau_integral,
        torsion_held: held,
    })
}

/// `(C, S)` = integrals over `[a, b]` of `kappa cos(Psi + phase)` and
/// `kappa sin(Psi + phase)`, where `Psi` is the running torsion integral.
pub fn profile_segment_integrals(
    profile: &CurvatureProfile,
    a: f64,
    b: f64,
    phase: f64,
) -> Result<(f64, f64), DiffGeoError> {
    let max = profile.length();
    let slack = 1e-12 * max.max(1.0);
    if !(a >= -slack && a < b && b <= max + slack) {
        return Err(DiffGeoError::OutOfRange { a, b, max });
    }
    let (a, b) = (a.max(0.0), b.min(max));
    let s = &profile.s;
    let at = |x: f64| {
        (
            interpolate(s, &profile.kappa, x),
            interpolate(s, &profile.tau_integral, x) + phase,
        )
    };
    let c = trapezoid_window(
        s,
        a,
        b,
        |k| profile.kappa[k] * (profile.tau_integral[k] + phase).cos(),
        |x| {
            let (k, psi) = at(x);
            k * psi.cos()
        },
    );
    let sn = trapezoid_window(
        s,
        a,
        b,
        |k| profile.kappa[k] * (profile.tau_integral[k] + phase).sin(),
        |x| {
            let (k, psi) = at(x);
            k * psi.sin()
        },
    );
    Ok((c, sn))
}
