//! Pitch-varying helix backbone curves.
//!
//! A keyframe of the climbing gait is a 3D curve wrapped around the pole axis
//! (the world `z` axis). The general form modulates both the radius and the
//! axial advance:
//!
//! ```text
//! x = cos(t) * (r + A_r cos(k_r t + w h))
//! y = sin(t) * (r + A_r cos(k_r t + w h))
//! z = p t + A_p sin(W t + w h)
//! ```
//!
//! where `t` is the curve parameter and `h` the keyframe time. Dropping the
//! radial term (`A_r = 0`) keeps the body on a cylinder of radius `r`; that
//! simplified form drives the gait pipeline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Vec3;

/// Smallest number of samples a backbone may carry (third-derivative stencils).
pub const MIN_SAMPLES: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackboneError {
    #[error("invalid gait parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("a backbone needs at least {MIN_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error("backbone samples {0} and {1} coincide")]
    RepeatedPoint(usize, usize),
    #[error("backbone has zero total length")]
    ZeroLength,
    #[error("cannot reach arc length {target} m within t_max <= {limit} rad")]
    SpanNotReached { target: f64, limit: f64 },
}

/// Scalars of the pitch-varying helix plus the roll phase schedule.
///
/// Field names double as the config-file keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Wrap radius `r` of the backbone around the pole axis (m).
    pub radius: f64,
    /// Base pitch coefficient `p`, `z = p t` (m/rad).
    pub pitch: f64,
    /// Radial modulation amplitude `A_r` (m).
    pub amp_radial: f64,
    /// Radial modulation frequency `k_r` (1/rad).
    pub freq_radial: f64,
    /// Longitudinal modulation amplitude `A_p` (m).
    pub amp_long: f64,
    /// Shape frequency along the body (1/rad).
    pub freq_shape: f64,
    /// Temporal frequency of the shape change (rad/s).
    pub freq_time: f64,
    /// Gait period `T` (s).
    pub period: f64,
    /// Roll phase offset at `h = 0` (rad).
    pub phi0_init: f64,
    /// Roll phase rate (rad/s).
    pub phi0_rate: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for GaitParams {
    /// Implementer-chosen defaults sized for a 20 module chain with
    /// `l = 0.0889 m`. The radial term runs in phase with the longitudinal
    /// one so the tight, flat sections of the helix are also the smallest in
    /// radius and carry the pole contacts. None of these values are measured
    /// gait settings.
    fn default() -> Self {
        let period = 22.0;
        Self {
            radius: 0.15,
            pitch: 0.10,
            amp_radial: 0.048,
            freq_radial: 1.5,
            amp_long: 0.06,
            freq_shape: 1.5,
            freq_time: std::f64::consts::TAU / period,
            period,
            phi0_init: 0.0,
            phi0_rate: 0.0,
            t_min: 0.0,
            t_max: 13.0,
        }
    }
}

impl GaitParams {
    pub fn validate(&self) -> Result<(), BackboneError> {
        let fields = [
            ("radius", self.radius),
            ("pitch", self.pitch),
            ("amp_radial", self.amp_radial),
            ("freq_radial", self.freq_radial),
            ("amp_long", self.amp_long),
            ("freq_shape", self.freq_shape),
            ("freq_time", self.freq_time),
            ("period", self.period),
            ("phi0_init", self.phi0_init),
            ("phi0_rate", self.phi0_rate),
            ("t_min", self.t_min),
            ("t_max", self.t_max),
        ];
        for (field, value) in fields {
            if !value.is_finite() {
                return Err(invalid(field, format!("must be finite, got {value}")));
            }
        }
        if self.radius <= 0.0 {
            return Err(invalid(
                "radius",
                format!("must be > 0, got {}", self.radius),
            ));
        }
        if self.period <= 0.0 {
            return Err(invalid(
                "period",
                format!("must be > 0, got {}", self.period),
            ));
        }
        if self.amp_long < 0.0 {
            return Err(invalid(
                "amp_long",
                format!("must be >= 0, got {}", self.amp_long),
            ));
        }
        if self.amp_radial < 0.0 {
            return Err(invalid(
                "amp_radial",
                format!("must be >= 0, got {}", self.amp_radial),
            ));
        }
        if self.t_max <= self.t_min {
            return Err(invalid(
                "t_max",
                format!("must exceed t_min ({}), got {}", self.t_min, self.t_max),
            ));
        }
        Ok(())
    }

    /// Roll phase offset at keyframe time `h`.
    pub fn phi0(&self, h: f64) -> f64 {
        self.phi0_init + self.phi0_rate * h
    }

    /// Keyframe times `j * T / n_steps` for `j = 0..n_steps`.
    pub fn keyframe_times(&self, n_steps: usize) -> Vec<f64> {
        let dt = self.period / n_steps as f64;
        (0..n_steps).map(|j| j as f64 * dt).collect()
    }
}

fn invalid(field: &'static str, reason: String) -> BackboneError {
    BackboneError::InvalidParam { field, reason }
}

/// Point on the backbone at curve parameter `t` and keyframe time `h`.
///
/// `simplified` drops the radial modulation, which is the same as evaluating
/// the general form with `amp_radial = 0`.
pub fn helix_point(params: &GaitParams, t: f64, h: f64, simplified: bool) -> Vec3 {
    let radial = if simplified {
        params.radius
    } else {
        params.radius + params.amp_radial * (params.freq_radial * t + params.freq_time * h).cos()
    };
    let z =
        params.pitch * t + params.amp_long * (params.freq_shape * t + params.freq_time * h).sin();
    Vec3::new(t.cos() * radial, t.sin() * radial, z)
}

/// Ordered samples of one keyframe curve with cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneCurve {
    points: Vec<Vec3>,
    s: Vec<f64>,
    keyframe_time: f64,
}

impl BackboneCurve {
    /// Builds a curve from points, measuring `s` as cumulative chord length.
    pub fn from_points(points: Vec<Vec3>, keyframe_time: f64) -> Result<Self, BackboneError> {
        if points.len() < MIN_SAMPLES {
            return Err(BackboneError::TooFewSamples(points.len()));
        }
        let mut s = Vec::with_capacity(points.len());
        s.push(0.0);
        for (k, pair) in points.windows(2).enumerate() {
            let chord = (pair[1] - pair[0]).norm();
            if chord == 0.0 {
                return Err(BackboneError::RepeatedPoint(k, k + 1));
            }
            s.push(s[k] + chord);
        }
        Ok(Self {
            points,
            s,
            keyframe_time,
        })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn arc_lengths(&self) -> &[f64] {
        &self.s
    }

    pub fn keyframe_time(&self) -> f64 {
        self.keyframe_time
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn length(&self) -> f64 {
        *self.s.last().expect("curve is never empty")
    }

    /// Position on the piecewise-linear interpolant at arc length `s`
    /// (clamped to the curve's domain).
    pub fn point_at(&self, s: f64) -> Vec3 {
        let s = s.clamp(0.0, self.length());
        let k = self
            .s
            .partition_point(|&x| x <= s)
            .clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let w = (s - s0) / (s1 - s0);
        self.points[k - 1] + (self.points[k] - self.points[k - 1]) * w
    }
}

/// Samples `n_samples` points uniformly in `t` over `[t_min, t_max]` using the
/// simplified (constant radius) equations when `amp_radial == 0`.
pub fn sample_backbone(
    params: &GaitParams,
    h: f64,
    n_samples: usize,
) -> Result<BackboneCurve, BackboneError> {
    if n_samples < MIN_SAMPLES {
        return Err(BackboneError::TooFewSamples(n_samples));
    }
    params.validate()?;
    let simplified = params.amp_radial == 0.0;
    let dt = (params.t_max - params.t_min) / (n_samples - 1) as f64;
    let points = (0..n_samples)
        .map(|k| {
            let t = if k + 1 == n_samples {
                params.t_max
            } else {
                params.t_min + k as f64 * dt
            };
            helix_point(params, t, h, simplified)
        })
        .collect();
    BackboneCurve::from_points(points, h)
}

/// Resamples a curve at `n_out` points uniformly spaced in arc length along its
/// piecewise-linear interpolant.
pub fn resample_by_arclength(
    curve: &BackboneCurve,
    n_out: usize,
) -> Result<BackboneCurve, BackboneError> {
    if n_out < MIN_SAMPLES {
        return Err(BackboneError::TooFewSamples(n_out));
    }
    let total = curve.length();
    if total <= 0.0 {
        return Err(BackboneError::ZeroLength);
    }
    let step = total / (n_out - 1) as f64;
    let mut points = Vec::with_capacity(n_out);
    let mut s = Vec::with_capacity(n_out);
    let mut seg = 1;
    for k in 0..n_out {
        let target = if k + 1 == n_out {
            total
        } else {
            k as f64 * step
        };
        while seg < curve.s.len() - 1 && curve.s[seg] < target {
            seg += 1;
        }
        let (s0, s1) = (curve.s[seg - 1], curve.s[seg]);
        let w = (target - s0) / (s1 - s0);
        let (p0, p1) = (curve.points[seg - 1], curve.points[seg]);
        points.push(if w == 0.0 {
            p0
        } else if w == 1.0 {
            p1
        } else {
            p0 + (p1 - p0) * w
        });
        s.push(target);
    }
    Ok(BackboneCurve {
        points,
        s,
        keyframe_time: curve.keyframe_time,
    })
}

/// Cumulative chord length of the simplified curve over `[t_min, t_max]`.
fn arc_length_table(params: &GaitParams, h: f64, t_max: f64, n: usize) -> Vec<f64> {
    let simplified = params.amp_radial == 0.0;
    let dt = (t_max - params.t_min) / (n - 1) as f64;
    let mut prev = helix_point(params, params.t_min, h, simplified);
    let mut acc = Vec::with_capacity(n);
    acc.push(0.0);
    for k in 1..n {
        let p = helix_point(params, params.t_min + k as f64 * dt, h, simplified);
        acc.push(acc[k - 1] + (p - prev).norm());
        prev = p;
    }
    acc
}

/// Smallest `t_max` such that every keyframe curve in `times` reaches arc
/// length `target` from `t_min`, found by bisection.
pub fn fit_t_max(params: &GaitParams, target: f64, times: &[f64]) -> Result<f64, BackboneError> {
    const TABLE: usize = 4096;
    if !(target > 0.0) {
        return Err(invalid(
            "t_max",
            format!("target arc length must be > 0, got {target}"),
        ));
    }
    let mut probe = *params;
    probe.t_max = params.t_min + 1.0;
    probe.validate()?;
    // The curve advances at least `r` per radian, so this bracket always suffices.
    let limit = params.t_min + 2.0 * target / params.radius + 1.0;
    let mut required = params.t_min;
    for &h in times {
        let table = arc_length_table(params, h, limit, TABLE);
        let dt = (limit - params.t_min) / (TABLE - 1) as f64;
        let length_at = |t: f64| {
            let x = (t - params.t_min) / dt;
            let k = (x.floor() as usize).min(TABLE - 2);
            let w = x - k as f64;
            table[k] + (table[k + 1] - table[k]) * w
        };
        if table[TABLE - 1] < target {
            return Err(BackboneError::SpanNotReached { target, limit });
        }
        let (mut lo, mut hi) = (params.t_min, limit);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if length_at(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1.0) {
                break;
            }
        }
        required = required.max(hi);
    }
    Ok(required)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    fn plain(radius: f64, pitch: f64, amp_long: f64) -> GaitParams {
        GaitParams {
            radius,
            pitch,
            amp_long,
            amp_radial: 0.0,
            freq_radial: 0.0,
            freq_shape: 3.0,
            freq_time: 0.0,
            t_min: 0.0,
            t_max: TAU,
            ..GaitParams::default()
        }
    }

    #[test]
    fn helix_point_trivial_values() {
        let p = plain(1.0, 0.0, 0.0);
        assert_eq!(helix_point(&p, 0.0, 5.0, true), Vec3::new(1.0, 0.0, 0.0));
        let q = helix_point(&p, FRAC_PI_2, 0.0, true);
        assert!((q - Vec3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn helix_point_pitch_varying_substitution() {
        let p = plain(1.0, 0.5, 0.1);
        let q = helix_point(&p, TAU, 0.0, true);
        // independent scalar evaluation: z = 0.5 * 2pi + 0.1 * sin(6pi)
        let z = 0.5 * TAU + 0.1 * (3.0 * TAU).sin();
        assert!((q - Vec3::new(1.0, 0.0, z)).norm() < 1e-12);
        assert!((q.z - PI).abs() < 1e-12);
    }

    #[test]
    fn validate_names_the_field() {
        let mut p = GaitParams::default();
        p.radius = 0.0;
        match p.validate() {
            Err(BackboneError::InvalidParam { field, .. }) => assert_eq!(field, "radius"),
            other => panic!("unexpected {other:?}"),
        }
        let mut p = GaitParams::default();
        p.t_max = p.t_min;
        assert!(matches!(
            p.validate(),
            Err(BackboneError::InvalidParam { field: "t_max", .. })
        ));
    }

    #[test]
    fn too_few_samples_rejected() {
        let p = plain(1.0, 0.0, 0.0);
        assert_eq!(
            sample_backbone(&p, 0.0, 2),
            Err(BackboneError::TooFewSamples(2))
        );
    }

    #[test]
    fn circle_arc_length() {
        let p = plain(1.0, 0.0, 0.0);
        let c = sample_backbone(&p, 0.0, 10001).unwrap();
        assert!((c.length() - TAU).abs() / TAU < 1e-5);
    }

    #[test]
    fn constant_helix_arc_length() {
        let p = plain(1.0, 1.0, 0.0);
        let c = sample_backbone(&p, 0.0, 10001).unwrap();
        let exact = TAU * 2f64.sqrt();
        assert!((c.length() - exact).abs() / exact < 1e-5);
    }

    #[test]
    fn resample_is_idempotent_on_uniform_input() {
        let p = plain(1.0, 1.0, 0.0);
        let c = sample_backbone(&p, 0.0, 200).unwrap();
        let once = resample_by_arclength(&c, 200).unwrap();
        let twice = resample_by_arclength(&once, 200).unwrap();
        for (a, b) in once.points().iter().zip(twice.points()) {
            assert!((a - b).norm() < 1e-12);
        }
        for (a, b) in c.points().iter().zip(once.points()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn resample_straight_segment() {
        let pts = [0.0, 0.1, 0.15, 0.6, 1.0]
            .iter()
            .map(|&z| Vec3::new(0.0, 0.0, z))
            .collect();
        let c = BackboneCurve::from_points(pts, 0.0).unwrap();
        let r = resample_by_arclength(&c, 5).unwrap();
        for (k, p) in r.points().iter().enumerate() {
            assert!((p.z - 0.25 * k as f64).abs() < 1e-15, "{p:?}");
        }
    }

    #[test]
    fn resampled_circle_stays_on_radius() {
        let p = plain(1.0, 0.0, 0.0);
        let c = sample_backbone(&p, 0.0, 2001).unwrap();
        let r = resample_by_arclength(&c, 1500).unwrap();
        for q in r.points() {
            assert!((q.xy().norm() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn repeated_points_rejected() {
        let pts = vec![Vec3::zeros(), Vec3::x(), Vec3::x(), Vec3::y()];
        assert_eq!(
            BackboneCurve::from_points(pts, 0.0),
            Err(BackboneError::RepeatedPoint(1, 2))
        );
    }

    #[test]
    fn fitted_span_reaches_target_for_all_keyframes() {
        let p = GaitParams::default();
        let times = p.keyframe_times(16);
        let t_max = fit_t_max(&p, 1.8, &times).unwrap();
        let fitted = GaitParams { t_max, ..p };
        let mut shortest = f64::INFINITY;
        for &h in &times {
            let c = sample_backbone(&fitted, h, 4096).unwrap();
            shortest = shortest.min(c.length());
            assert!(c.length() >= 1.8 * (1.0 - 1e-6));
        }
        assert!(shortest < 1.8 * (1.0 + 1e-3));
    }
}
