//! Run configuration.
//!
//! A config file is flat TOML whose keys are the fields of [`GaitParams`] and
//! [`RobotConfig`] plus `gait`, `pole_radius`, `n_steps`, `cycles` and
//! `roll_term`. Every key is optional:
//!
//! ```toml
//! gait = "acl"
//! radius = 0.15
//! amp_long = 0.04
//! n_modules = 20
//! module_length = 0.0889
//! ```
//!
//! Layers apply in order: built-in defaults, the file, `--override key=value`
//! pairs, then the dedicated flags (`--gait`, `--steps`, `--cycles`).
//! `t_max` is fitted to the body length when absent, and `pole_radius`
//! defaults to `radius - amp_radial - joint_radius`.

use std::fs;
use std::path::Path;

use aclgait::gait;
use aclgait::{GaitKind, GaitParams, JointAxis, RobotConfig, SimConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gait: Option<GaitKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pitch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amp_radial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_radial: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amp_long: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_shape: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub freq_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0_init: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_modules: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub module_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_joint_axis: Option<JointAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cycles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roll_term: Option<bool>,
}

/// Everything one run needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub gait: GaitKind,
    pub params: GaitParams,
    pub robot: RobotConfig,
    pub pole_radius: f64,
    pub n_steps: usize,
    pub cycles: usize,
    pub roll_term: bool,
}

impl RunSpec {
    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            gait: self.gait,
            params: self.params,
            robot: self.robot,
            pole_radius: self.pole_radius,
            n_steps: self.n_steps,
            cycles: self.cycles,
            roll_term: self.roll_term,
            ..SimConfig::default()
        }
    }

    /// The resolved spec as a config with every key set; feeding it back in
    /// reproduces this spec exactly.
    pub fn to_raw(&self) -> RawConfig {
        let p = &self.params;
        let r = &self.robot;
        RawConfig {
            gait: Some(self.gait),
            radius: Some(p.radius),
            pitch: Some(p.pitch),
            amp_radial: Some(p.amp_radial),
            freq_radial: Some(p.freq_radial),
            amp_long: Some(p.amp_long),
            freq_shape: Some(p.freq_shape),
            freq_time: Some(p.freq_time),
            period: Some(p.period),
            phi0_init: Some(p.phi0_init),
            phi0_rate: Some(p.phi0_rate),
            t_min: Some(p.t_min),
            t_max: Some(p.t_max),
            n_modules: Some(r.n_modules),
            module_length: Some(r.module_length),
            joint_radius: Some(r.joint_radius),
            first_joint_axis: Some(r.first_joint_axis),
            joint_limit: Some(r.joint_limit),
            pole_radius: Some(self.pole_radius),
            n_steps: Some(self.n_steps),
            cycles: Some(self.cycles),
            roll_term: Some(self.roll_term),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("flat config serializes")
    }
}

/// Reads a config file into a key table.
pub fn load_table(path: &Path) -> Result<Table, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    text.parse::<Table>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Applies `key=value` overrides. Values are read as TOML literals; anything
/// that does not parse (for example `acl`) is taken as a bare string.
pub fn apply_overrides<S: AsRef<str>>(table: &mut Table, overrides: &[S]) -> Result<(), CliError> {
    for item in overrides {
        let item = item.as_ref();
        let (key, value) = item.split_once('=').ok_or_else(|| {
            CliError::Config(format!("override `{item}` is not of the form key=value"))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::Config(format!(
                "override `{item}` has an empty key"
            )));
        }
        table.insert(key.to_owned(), parse_value(value.trim()));
    }
    Ok(())
}

fn parse_value(text: &str) -> Value {
    format!("v = {text}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(text.to_owned()))
}

/// Turns a key table into a validated [`RunSpec`].
pub fn resolve(table: Table) -> Result<RunSpec, CliError> {
    let raw: RawConfig = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_owned()))?;
    resolve_raw(&raw)
}

pub fn resolve_raw(raw: &RawConfig) -> Result<RunSpec, CliError> {
    let gait = raw.gait.unwrap_or(GaitKind::Acl);
    let d = GaitParams::default();
    let period = raw.period.unwrap_or(d.period);
    let default_rate = match gait {
        GaitKind::Acl => d.phi0_rate,
        GaitKind::Rolling => gait::rolling_phi0_rate(period),
    };
    let params = GaitParams {
        radius: raw.radius.unwrap_or(d.radius),
        pitch: raw.pitch.unwrap_or(d.pitch),
        amp_radial: raw.amp_radial.unwrap_or(d.amp_radial),
        freq_radial: raw.freq_radial.unwrap_or(d.freq_radial),
        amp_long: raw.amp_long.unwrap_or(d.amp_long),
        freq_shape: raw.freq_shape.unwrap_or(d.freq_shape),
        freq_time: raw.freq_time.unwrap_or(std::f64::consts::TAU / period),
        period,
        phi0_init: raw.phi0_init.unwrap_or(d.phi0_init),
        phi0_rate: raw.phi0_rate.unwrap_or(default_rate),
        t_min: raw.t_min.unwrap_or(d.t_min),
        t_max: raw.t_max.unwrap_or(d.t_max),
    };
    let dr = RobotConfig::default();
    let robot = RobotConfig {
        n_modules: raw.n_modules.unwrap_or(dr.n_modules),
        module_length: raw.module_length.unwrap_or(dr.module_length),
        joint_radius: raw.joint_radius.unwrap_or(dr.joint_radius),
        first_joint_axis: raw.first_joint_axis.unwrap_or(dr.first_joint_axis),
        joint_limit: raw.joint_limit.unwrap_or(dr.joint_limit),
    };
    params
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    robot
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let pole_radius = raw
        .pole_radius
        .unwrap_or(params.radius - params.amp_radial - robot.joint_radius);
    if !(pole_radius.is_finite() && pole_radius > 0.0) {
        return Err(CliError::Config(format!(
            "invalid `pole_radius`: must be > 0, got {pole_radius} (set it explicitly or enlarge `radius`)"
        )));
    }
    let n_steps = raw.n_steps.unwrap_or(220);
    let cycles = raw.cycles.unwrap_or(2);
    if n_steps == 0 {
        return Err(CliError::Config(
            "invalid `n_steps`: must be >= 1".to_owned(),
        ));
    }
    if cycles == 0 {
        return Err(CliError::Config(
            "invalid `cycles`: must be >= 1".to_owned(),
        ));
    }

    if gait == GaitKind::Rolling && (params.amp_long != 0.0 || params.amp_radial != 0.0) {
        log::info!(
            "rolling helix gait ignores amp_long = {} and amp_radial = {}",
            params.amp_long,
            params.amp_radial
        );
    }

    let mut spec = RunSpec {
        gait,
        params,
        robot,
        pole_radius,
        n_steps,
        cycles,
        roll_term: raw.roll_term.unwrap_or(true),
    };
    if raw.t_max.is_none() {
        let fitted = spec.sim_config().with_fitted_span()?;
        spec.params.t_max = fitted.params.t_max;
        log::debug!("fitted t_max = {}", spec.params.t_max);
    }
    Ok(spec)
}
