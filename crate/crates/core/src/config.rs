//! Scenario files.
//!
//! Scenarios are TOML with three optional sections. Every key is optional
//! except `experiment.kind` (which the CLI can also supply); unknown keys are
//! rejected. Defaults come from [`ExperimentSpec::defaults`],
//! [`SystemSpec::defaults`] and [`DisturbanceSet::preset`].
//!
//! ```toml
//! [experiment]
//! kind = "visibility_timeseries"   # drift | fringe | visibility_timeseries | verify_conditions
//! fiber_length_km = [0, 25, 75]    # a single number is accepted too
//! duration_ticks = 10000           # verify_conditions: number of random trials
//! dt_seconds = 2.16
//! disturbance_preset = "paper-like" # or "quiet"
//! seeds = [1, 2, 3]
//! sweep_samples = 16
//! record_every = 1
//!
//! [system]
//! arms = "single-mode"             # or "polarization-maintaining"
//! phi_a = 0.0
//! phi_b = 0.0
//! input_state = [1.0, 0.0, 0.0, 0.0]  # re a, im a, re b, im b
//! segment_length_km = 1.0
//!
//! [system.arm_b1]                  # arm_a1 | arm_a2 | arm_b1 | arm_b2
//! theta = 0.16
//! delta = 3.141592653589793
//! length_km = 0.002
//! common_phase = 0.0
//!
//! [disturbance.channel_birefringence]  # also arm_birefringence, arm_phase, channel_phase
//! correlation_time = 7200.0
//! diffusion_rate = 2.7777777777777779e-5
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::scenario::DISTURBANCE_KEYS;
use crate::experiment::{ArmSpec, DisturbanceSet, ExperimentKind, ExperimentSpec, OuParams, Scenario, SystemSpec};
use crate::jones::JonesVector;

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    experiment: Option<RawExperiment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    system: Option<RawSystem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    disturbance: Option<RawDisturbance>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(xs) => xs,
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    kind: Option<String>,
    fiber_length_km: Option<OneOrMany>,
    duration_ticks: Option<u64>,
    dt_seconds: Option<f64>,
    disturbance_preset: Option<String>,
    seeds: Option<Vec<u64>>,
    sweep_samples: Option<u64>,
    record_every: Option<u64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    arms: Option<String>,
    phi_a: Option<f64>,
    phi_b: Option<f64>,
    input_state: Option<[f64; 4]>,
    segment_length_km: Option<f64>,
    arm_a1: Option<RawArm>,
    arm_a2: Option<RawArm>,
    arm_b1: Option<RawArm>,
    arm_b2: Option<RawArm>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawArm {
    theta: Option<f64>,
    delta: Option<f64>,
    length_km: Option<f64>,
    common_phase: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawDisturbance {
    arm_birefringence: Option<RawOu>,
    channel_birefringence: Option<RawOu>,
    arm_phase: Option<RawOu>,
    channel_phase: Option<RawOu>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOu {
    correlation_time: Option<f64>,
    diffusion_rate: Option<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn to_usize(v: u64, key: &str) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::validation(key, "value too large"))
}

/// Parses and validates a scenario. `kind` comes from the file, or from
/// `default_kind` when the file names none; if both are present they must
/// agree.
pub fn parse_config(text: &str, default_kind: Option<ExperimentKind>) -> Result<Scenario> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::ConfigParse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().replace('\n', " "),
    })?;
    resolve(raw, default_kind)
}

fn resolve(raw: RawConfig, default_kind: Option<ExperimentKind>) -> Result<Scenario> {
    let exp = raw.experiment.unwrap_or_default();
    let kind = match (exp.kind.as_deref(), default_kind) {
        (Some(name), hint) => {
            let kind: ExperimentKind = name.parse()?;
            if let Some(h) = hint.filter(|h| *h != kind) {
                return Err(Error::validation(
                    "experiment.kind",
                    format!("config names `{kind}` but `{h}` was requested"),
                ));
            }
            kind
        }
        (None, Some(h)) => h,
        (None, None) => return Err(Error::validation("experiment.kind", "missing")),
    };

    let mut experiment = ExperimentSpec::defaults(kind);
    if let Some(v) = exp.fiber_length_km {
        experiment.fiber_length_km = v.into_vec();
    }
    if let Some(v) = exp.duration_ticks {
        experiment.duration_ticks = to_usize(v, "experiment.duration_ticks")?;
    }
    if let Some(v) = exp.dt_seconds {
        experiment.dt_seconds = v;
    }
    if let Some(v) = exp.disturbance_preset {
        experiment.disturbance_preset = v;
    }
    if let Some(v) = exp.seeds {
        experiment.seeds = v;
    }
    if let Some(v) = exp.sweep_samples {
        experiment.sweep_samples = to_usize(v, "experiment.sweep_samples")?;
    }
    if let Some(v) = exp.record_every {
        experiment.record_every = to_usize(v, "experiment.record_every")?;
    }

    let sys = raw.system.unwrap_or_default();
    let mut system = match sys.arms {
        Some(name) => SystemSpec::from_preset(&name)
            .ok_or_else(|| Error::validation("system.arms", format!("unknown arm preset `{name}`")))?,
        None => SystemSpec::defaults(kind),
    };
    if let Some(v) = sys.phi_a {
        system.phi_a = v;
    }
    if let Some(v) = sys.phi_b {
        system.phi_b = v;
    }
    if let Some([ar, ai, br, bi]) = sys.input_state {
        system.input_state = JonesVector::new(Complex64::new(ar, ai), Complex64::new(br, bi));
    }
    if let Some(v) = sys.segment_length_km {
        system.segment_length_km = v;
    }
    for (slot, raw_arm) in system.arms.iter_mut().zip([sys.arm_a1, sys.arm_a2, sys.arm_b1, sys.arm_b2]) {
        if let Some(a) = raw_arm {
            slot.theta = a.theta.unwrap_or(slot.theta);
            slot.delta = a.delta.unwrap_or(slot.delta);
            slot.length_km = a.length_km.unwrap_or(slot.length_km);
            slot.common_phase = a.common_phase.unwrap_or(slot.common_phase);
        }
    }

    let mut disturbance = DisturbanceSet::preset(&experiment.disturbance_preset).ok_or_else(|| {
        Error::validation(
            "experiment.disturbance_preset",
            format!("unknown preset `{}`", experiment.disturbance_preset),
        )
    })?;
    let dist = raw.disturbance.unwrap_or_default();
    for (key, raw_ou) in DISTURBANCE_KEYS.iter().zip([
        dist.arm_birefringence,
        dist.channel_birefringence,
        dist.arm_phase,
        dist.channel_phase,
    ]) {
        if let Some(o) = raw_ou {
            let slot = disturbance.get_mut(key).expect("known key");
            slot.correlation_time = o.correlation_time.unwrap_or(slot.correlation_time);
            slot.diffusion_rate = o.diffusion_rate.unwrap_or(slot.diffusion_rate);
        }
    }

    let scenario = Scenario { experiment, system, disturbance };
    scenario.validate()?;
    Ok(scenario)
}

fn raw_arm(a: &ArmSpec) -> RawArm {
    RawArm {
        theta: Some(a.theta),
        delta: Some(a.delta),
        length_km: Some(a.length_km),
        common_phase: Some(a.common_phase),
    }
}

fn raw_ou(p: OuParams) -> RawOu {
    RawOu { correlation_time: Some(p.correlation_time), diffusion_rate: Some(p.diffusion_rate) }
}

/// Writes every resolved field explicitly, so the output reparses to the
/// same scenario regardless of future default changes.
pub fn serialize_config(s: &Scenario) -> Result<String> {
    let e = &s.experiment;
    let sys = &s.system;
    let raw = RawConfig {
        experiment: Some(RawExperiment {
            kind: Some(e.kind.name().to_string()),
            fiber_length_km: Some(OneOrMany::Many(e.fiber_length_km.clone())),
            duration_ticks: Some(e.duration_ticks as u64),
            dt_seconds: Some(e.dt_seconds),
            disturbance_preset: Some(e.disturbance_preset.clone()),
            seeds: Some(e.seeds.clone()),
            sweep_samples: Some(e.sweep_samples as u64),
            record_every: Some(e.record_every as u64),
        }),
        system: Some(RawSystem {
            arms: Some(sys.arms_preset.clone()),
            phi_a: Some(sys.phi_a),
            phi_b: Some(sys.phi_b),
            input_state: Some([
                sys.input_state.a.re,
                sys.input_state.a.im,
                sys.input_state.b.re,
                sys.input_state.b.im,
            ]),
            segment_length_km: Some(sys.segment_length_km),
            arm_a1: Some(raw_arm(&sys.arms[0])),
            arm_a2: Some(raw_arm(&sys.arms[1])),
            arm_b1: Some(raw_arm(&sys.arms[2])),
            arm_b2: Some(raw_arm(&sys.arms[3])),
        }),
        disturbance: Some(RawDisturbance {
            arm_birefringence: Some(raw_ou(s.disturbance.arm_birefringence)),
            channel_birefringence: Some(raw_ou(s.disturbance.channel_birefringence)),
            arm_phase: Some(raw_ou(s.disturbance.arm_phase)),
            channel_phase: Some(raw_ou(s.disturbance.channel_phase)),
        }),
    };
    toml::to_string(&raw).map_err(|e| Error::validation("config", e.to_string()))
}
