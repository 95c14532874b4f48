//! Fully resolved scenario description: what to run, on which system, under
//! which disturbance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fiber::{DisturbanceKind, DisturbanceProcess, DEFAULT_SEGMENT_LENGTH_KM};
use crate::jones::JonesVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Drift,
    Fringe,
    VisibilityTimeseries,
    VerifyConditions,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::Drift,
        ExperimentKind::Fringe,
        ExperimentKind::VisibilityTimeseries,
        ExperimentKind::VerifyConditions,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Drift => "drift",
            ExperimentKind::Fringe => "fringe",
            ExperimentKind::VisibilityTimeseries => "visibility_timeseries",
            ExperimentKind::VerifyConditions => "verify_conditions",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::validation("experiment.kind", format!("unknown experiment `{s}`")))
    }
}

/// What to run. For `verify_conditions`, `duration_ticks` is the number of
/// random disturbance states tried per check.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub fiber_length_km: Vec<f64>,
    pub duration_ticks: usize,
    pub dt_seconds: f64,
    pub disturbance_preset: String,
    pub seeds: Vec<u64>,
    pub sweep_samples: usize,
    /// Record every n-th tick.
    pub record_every: usize,
}

impl ExperimentSpec {
    /// Defaults for each experiment kind.
    ///
    /// | kind | lengths (km) | ticks | dt (s) | seeds | record every |
    /// |---|---|---|---|---|---|
    /// | drift | 0.002 | 80 000 | 2.16 | 1 | 1 |
    /// | fringe | 75 | 10 000 | 2.16 | 1 | 1 |
    /// | visibility_timeseries | 0, 25, 50, 55, 75 | 10 000 | 2.16 | 1..=20 | 1 |
    /// | verify_conditions | 0 | 10 000 trials | 2.16 | 1 | 1 |
    ///
    /// All use the `paper-like` preset and 16 sweep samples. 10 000 ticks of
    /// 2.16 s span six hours.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (lengths, ticks, seeds, record_every) = match kind {
            ExperimentKind::Drift => (vec![0.002], 80_000, vec![1], 1),
            ExperimentKind::Fringe => (vec![75.0], 10_000, vec![1], 1),
            ExperimentKind::VisibilityTimeseries => {
                (vec![0.0, 25.0, 50.0, 55.0, 75.0], 10_000, (1..=20).collect(), 1)
            }
            ExperimentKind::VerifyConditions => (vec![0.0], 10_000, vec![1], 1),
        };
        Self {
            kind,
            fiber_length_km: lengths,
            duration_ticks: ticks,
            dt_seconds: 2.16,
            disturbance_preset: PAPER_LIKE.to_string(),
            seeds,
            sweep_samples: 16,
            record_every,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_ticks == 0 {
            return Err(Error::validation("experiment.duration_ticks", "must be > 0"));
        }
        if self.seeds.is_empty() {
            return Err(Error::validation("experiment.seeds", "must not be empty"));
        }
        if self.fiber_length_km.is_empty() {
            return Err(Error::validation("experiment.fiber_length_km", "must not be empty"));
        }
        if let Some(bad) = self.fiber_length_km.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::validation(
                "experiment.fiber_length_km",
                format!("lengths must be finite and >= 0, got {bad}"),
            ));
        }
        if !(self.dt_seconds.is_finite() && self.dt_seconds > 0.0) {
            return Err(Error::validation("experiment.dt_seconds", "must be > 0"));
        }
        if self.sweep_samples < crate::interferometer::MIN_SWEEP_SAMPLES {
            return Err(Error::validation(
                "experiment.sweep_samples",
                format!("must be >= {}", crate::interferometer::MIN_SWEEP_SAMPLES),
            ));
        }
        if self.record_every == 0 {
            return Err(Error::validation("experiment.record_every", "must be > 0"));
        }
        Ok(())
    }
}

/// Static description of one interferometer arm: a single lumped retarder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmSpec {
    pub theta: f64,
    pub delta: f64,
    pub length_km: f64,
    pub common_phase: f64,
}

impl ArmSpec {
    pub const fn identity() -> Self {
        Self { theta: 0.0, delta: 0.0, length_km: 0.002, common_phase: 0.0 }
    }

    pub const fn retarder(theta: f64, delta: f64) -> Self {
        Self { theta, delta, length_km: 0.002, common_phase: 0.0 }
    }
}

pub const POLARIZATION_MAINTAINING: &str = "polarization-maintaining";
pub const SINGLE_MODE: &str = "single-mode";

/// Named arm sets.
///
/// * `polarization-maintaining`: every arm the identity.
/// * `single-mode`: Alice's arms matched, Bob's B₁ a half-wave retarder at
///   0.16 rad relative to B₂. Back to back the visibility is
///   `cos(0.32) ≈ 0.95`; a scrambling channel spreads it over `[0, 1]`.
pub fn arm_preset(name: &str) -> Option<[ArmSpec; 4]> {
    match name {
        POLARIZATION_MAINTAINING => Some([ArmSpec::identity(); 4]),
        SINGLE_MODE => Some([
            ArmSpec::identity(),
            ArmSpec::identity(),
            ArmSpec::retarder(0.16, PI),
            ArmSpec::identity(),
        ]),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub arms_preset: String,
    /// A₁, A₂, B₁, B₂.
    pub arms: [ArmSpec; 4],
    pub phi_a: f64,
    pub phi_b: f64,
    pub input_state: JonesVector,
    pub segment_length_km: f64,
}

impl SystemSpec {
    pub fn from_preset(name: &str) -> Option<Self> {
        Some(Self {
            arms_preset: name.to_string(),
            arms: arm_preset(name)?,
            phi_a: 0.0,
            phi_b: 0.0,
            input_state: JonesVector::horizontal(),
            segment_length_km: DEFAULT_SEGMENT_LENGTH_KM,
        })
    }

    /// The polarization-maintaining system is checked by `verify_conditions`;
    /// the others model ordinary single-mode arms.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let preset = match kind {
            ExperimentKind::VerifyConditions => POLARIZATION_MAINTAINING,
            _ => SINGLE_MODE,
        };
        Self::from_preset(preset).expect("built-in preset")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.input_state.is_finite() && self.input_state.power() > 0.0) {
            return Err(Error::validation("system.input_state", "must have finite non-zero power"));
        }
        if !(self.segment_length_km.is_finite() && self.segment_length_km > 0.0) {
            return Err(Error::validation("system.segment_length_km", "must be > 0"));
        }
        for (arm, name) in self.arms.iter().zip(ARM_KEYS) {
            if !(arm.length_km.is_finite() && arm.length_km > 0.0) {
                return Err(Error::validation(format!("system.{name}.length_km"), "must be > 0"));
            }
            for (v, field) in [(arm.theta, "theta"), (arm.delta, "delta"), (arm.common_phase, "common_phase")] {
                if !v.is_finite() {
                    return Err(Error::validation(format!("system.{name}.{field}"), "must be finite"));
                }
            }
        }
        for (v, key) in [(self.phi_a, "system.phi_a"), (self.phi_b, "system.phi_b")] {
            if !v.is_finite() {
                return Err(Error::validation(key, "must be finite"));
            }
        }
        Ok(())
    }
}

pub const ARM_KEYS: [&str; 4] = ["arm_a1", "arm_a2", "arm_b1", "arm_b2"];

/// OU parameters before a tick length is attached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuParams {
    pub correlation_time: f64,
    pub diffusion_rate: f64,
}

impl OuParams {
    pub const fn new(correlation_time: f64, diffusion_rate: f64) -> Self {
        Self { correlation_time, diffusion_rate }
    }

    pub fn process(&self, kind: DisturbanceKind, dt: f64) -> Result<DisturbanceProcess> {
        DisturbanceProcess::new(kind, self.correlation_time, self.diffusion_rate, dt)
    }
}

pub const PAPER_LIKE: &str = "paper-like";
pub const QUIET: &str = "quiet";

/// The four disturbance classes acting on a link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisturbanceSet {
    /// Birefringence of the office arms.
    pub arm_birefringence: OuParams,
    /// Birefringence of the transmission fiber, per km.
    pub channel_birefringence: OuParams,
    /// Thermal drift of arm common phases.
    pub arm_phase: OuParams,
    /// Thermal drift of the channel common phase.
    pub channel_phase: OuParams,
}

pub const DISTURBANCE_KEYS: [&str; 4] =
    ["arm_birefringence", "channel_birefringence", "arm_phase", "channel_phase"];

impl DisturbanceSet {
    /// Named presets.
    ///
    /// `paper-like`:
    /// * channel birefringence: τ = 2 h, stationary variance 0.2 rad² per km
    ///   segment. 25 km or more scrambles polarization completely and the
    ///   visibility decorrelates in roughly `2000 s·km / L`.
    /// * arm birefringence: τ = 6 h, about 10 mrad stationary spread for a
    ///   2 m arm.
    /// * common phases: τ = 24 h, about 1.25 rad stationary spread per
    ///   section and 0.05 rad rms change per minute.
    ///
    /// `quiet`: nothing moves.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            PAPER_LIKE => Some(Self {
                arm_birefringence: OuParams::new(21_600.0, 2.3e-6),
                channel_birefringence: OuParams::new(7_200.0, 0.2 / 7_200.0),
                arm_phase: OuParams::new(86_400.0, 3.6e-5),
                channel_phase: OuParams::new(86_400.0, 3.6e-5),
            }),
            QUIET => Some(Self {
                arm_birefringence: OuParams::new(1.0, 0.0),
                channel_birefringence: OuParams::new(1.0, 0.0),
                arm_phase: OuParams::new(1.0, 0.0),
                channel_phase: OuParams::new(1.0, 0.0),
            }),
            _ => None,
        }
    }

    pub fn get(&self, key: &str) -> Option<OuParams> {
        match key {
            "arm_birefringence" => Some(self.arm_birefringence),
            "channel_birefringence" => Some(self.channel_birefringence),
            "arm_phase" => Some(self.arm_phase),
            "channel_phase" => Some(self.channel_phase),
            _ => None,
        }
    }

    pub fn get_mut(&mut self, key: &str) -> Option<&mut OuParams> {
        match key {
            "arm_birefringence" => Some(&mut self.arm_birefringence),
            "channel_birefringence" => Some(&mut self.channel_birefringence),
            "arm_phase" => Some(&mut self.arm_phase),
            "channel_phase" => Some(&mut self.channel_phase),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for key in DISTURBANCE_KEYS {
            let p = self.get(key).expect("known key");
            if !(p.correlation_time.is_finite() && p.correlation_time > 0.0) {
                return Err(Error::validation(format!("disturbance.{key}.correlation_time"), "must be > 0"));
            }
            if !(p.diffusion_rate.is_finite() && p.diffusion_rate >= 0.0) {
                return Err(Error::validation(format!("disturbance.{key}.diffusion_rate"), "must be >= 0"));
            }
        }
        Ok(())
    }

    pub fn processes(&self, dt: f64) -> Result<Processes> {
        use DisturbanceKind::*;
        Ok(Processes {
            arm_birefringence: self.arm_birefringence.process(FastBirefringence, dt)?,
            channel_birefringence: self.channel_birefringence.process(FastBirefringence, dt)?,
            arm_phase: self.arm_phase.process(SlowThermalPhase, dt)?,
            channel_phase: self.channel_phase.process(SlowThermalPhase, dt)?,
        })
    }
}

/// [`DisturbanceSet`] with the tick length attached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Processes {
    pub arm_birefringence: DisturbanceProcess,
    pub channel_birefringence: DisturbanceProcess,
    pub arm_phase: DisturbanceProcess,
    pub channel_phase: DisturbanceProcess,
}

/// Everything one run needs.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub experiment: ExperimentSpec,
    pub system: SystemSpec,
    pub disturbance: DisturbanceSet,
}

impl Scenario {
    /// All defaults for `kind`.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let experiment = ExperimentSpec::defaults(kind);
        let disturbance =
            DisturbanceSet::preset(&experiment.disturbance_preset).expect("built-in preset");
        Self { experiment, system: SystemSpec::defaults(kind), disturbance }
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment.validate()?;
        self.system.validate()?;
        self.disturbance.validate()
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Self {
        self.experiment.seeds = seeds;
        self
    }
}
