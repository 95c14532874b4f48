//! Time-series harnesses: thermal phase drift at a detector, saw-tooth
//! fringe envelopes, visibility against channel length, and the battery of
//! stability-condition checks.
//!
//! Every trial owns its generators, derived from `(seed, stream)`; trials run
//! in parallel and results are assembled in configured order, so output depends
//! only on the scenario.

pub mod scenario;
pub mod stats;

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fiber::{build_fiber, FiberElement, FiberSection, SegmentedFiber};
use crate::interferometer::{
    check_stability_conditions, complementary_power, fit_fringe, output_field, output_power,
    phase_difference, sweep_fringe, sweep_visibility, SystemConfig, DEFAULT_STABILITY_TOL,
};
use crate::jones::{haar_unitary, JonesMatrix, JonesVector};

pub use scenario::{
    arm_preset, ArmSpec, DisturbanceSet, ExperimentKind, ExperimentSpec, OuParams, Processes, Scenario,
    SystemSpec,
};

/// Tolerance, relative to input power, for the exact power identities.
pub const POWER_TOL: f64 = 1e-12;

/// Tolerance on unit visibility.
pub const VISIBILITY_TOL: f64 = 1e-9;

/// Generator streams within one trial.
mod stream {
    pub const CHANNEL_LAYOUT: u64 = 0;
    pub const CHANNEL_BIREFRINGENCE: u64 = 1;
    pub const ARM_BIREFRINGENCE: u64 = 2;
    pub const PHASE: u64 = 3;
    pub const VERIFY: u64 = 4;
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One recorded point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub tick: u64,
    pub time_seconds: f64,
    pub value: f64,
}

/// Labelled series; ticks strictly increase.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub label: String,
    pub samples: Vec<Sample>,
}

impl TimeSeries {
    pub fn new(label: impl Into<String>) -> Self {
        Self { label: label.into(), samples: Vec::new() }
    }

    pub fn push(&mut self, tick: u64, time_seconds: f64, value: f64) {
        debug_assert!(self.samples.last().is_none_or(|s| s.tick < tick));
        self.samples.push(Sample { tick, time_seconds, value });
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.value).collect()
    }
}

fn label(what: &str, length_km: f64, seed: u64) -> String {
    format!("{what}_L{length_km}km_seed{seed}")
}

/// Evolving double-M-Z link: four office arms and one channel.
#[derive(Clone, Debug)]
pub struct LinkSimulation {
    /// A₁, A₂, B₁, B₂.
    arms: [FiberSection; 4],
    channel: FiberSection,
    phi_a: f64,
    phi_b: f64,
    input_state: JonesVector,
    processes: Processes,
    channel_rng: ChaCha8Rng,
    arm_rng: ChaCha8Rng,
    phase_rng: ChaCha8Rng,
    max_defect: f64,
}

impl LinkSimulation {
    pub fn new(
        system: &SystemSpec,
        disturbance: &DisturbanceSet,
        dt: f64,
        length_km: f64,
        seed: u64,
    ) -> Result<Self> {
        let arms = system.arms.map(|a| {
            FiberSection::new(SegmentedFiber::lumped(a.length_km, a.theta, a.delta), a.common_phase)
        });
        let mut layout = trial_rng(seed, stream::CHANNEL_LAYOUT);
        let channel = FiberSection::new(build_fiber(length_km, system.segment_length_km, &mut layout)?, 0.0);
        Ok(Self {
            arms,
            channel,
            phi_a: system.phi_a,
            phi_b: system.phi_b,
            input_state: system.input_state,
            processes: disturbance.processes(dt)?,
            channel_rng: trial_rng(seed, stream::CHANNEL_BIREFRINGENCE),
            arm_rng: trial_rng(seed, stream::ARM_BIREFRINGENCE),
            phase_rng: trial_rng(seed, stream::PHASE),
            max_defect: 0.0,
        })
    }

    pub fn set_modulators(&mut self, phi_a: f64, phi_b: f64) {
        self.phi_a = phi_a;
        self.phi_b = phi_b;
    }

    /// Compiles the current state; tracks the worst unitarity defect seen.
    pub fn config(&mut self) -> SystemConfig {
        let [a1, a2, b1, b2] = &self.arms;
        let cfg = SystemConfig {
            arm_a1: a1.element(),
            arm_a2: a2.element(),
            arm_b1: b1.element(),
            arm_b2: b2.element(),
            channel: self.channel.element(),
            phi_a: self.phi_a,
            phi_b: self.phi_b,
            input_state: self.input_state,
        };
        self.max_defect = self.max_defect.max(cfg.max_unitarity_defect());
        cfg
    }

    pub fn step_birefringence(&mut self) -> Result<()> {
        self.channel
            .step_birefringence(&self.processes.channel_birefringence, &mut self.channel_rng)?;
        for arm in &mut self.arms {
            arm.step_birefringence(&self.processes.arm_birefringence, &mut self.arm_rng)?;
        }
        Ok(())
    }

    pub fn step_phases(&mut self) -> Result<()> {
        for arm in &mut self.arms {
            arm.step_phase(&self.processes.arm_phase, &mut self.phase_rng)?;
        }
        self.channel.step_phase(&self.processes.channel_phase, &mut self.phase_rng)
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.max_defect
    }
}

fn expect_kind(scenario: &Scenario, kind: ExperimentKind) -> Result<()> {
    scenario.validate()?;
    if scenario.experiment.kind != kind {
        return Err(Error::validation(
            "experiment.kind",
            format!("expected `{kind}`, got `{}`", scenario.experiment.kind),
        ));
    }
    Ok(())
}

fn trials(spec: &ExperimentSpec) -> Vec<(f64, u64)> {
    spec.fiber_length_km
        .iter()
        .flat_map(|&l| spec.seeds.iter().map(move |&s| (l, s)))
        .collect()
}

/// Series produced by a simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub series: Vec<TimeSeries>,
    pub max_unitarity_defect: f64,
}

/// Records D1 and D2 power for `ticks` ticks, asking `config_at` for the
/// system state at each tick.
pub fn trace_power<F>(ticks: usize, dt: f64, d1_label: &str, d2_label: &str, mut config_at: F) -> Result<(TimeSeries, TimeSeries)>
where
    F: FnMut(usize) -> Result<SystemConfig>,
{
    let mut d1 = TimeSeries::new(d1_label);
    let mut d2 = TimeSeries::new(d2_label);
    for tick in 0..ticks {
        let cfg = config_at(tick)?;
        let t = tick as f64 * dt;
        d1.push(tick as u64, t, output_power(&cfg));
        d2.push(tick as u64, t, complementary_power(&cfg));
    }
    Ok((d1, d2))
}

/// Detector powers with both modulators idle while only the common phases
/// drift.
pub fn run_drift(scenario: &Scenario) -> Result<RunOutput> {
    expect_kind(scenario, ExperimentKind::Drift)?;
    let spec = &scenario.experiment;
    let results: Vec<Result<(TimeSeries, TimeSeries, f64)>> = trials(spec)
        .into_par_iter()
        .map(|(length, seed)| {
            let mut sim = LinkSimulation::new(&scenario.system, &scenario.disturbance, spec.dt_seconds, length, seed)?;
            sim.set_modulators(0.0, 0.0);
            let (d1, d2) = trace_power(
                spec.duration_ticks,
                spec.dt_seconds,
                &label("d1_power", length, seed),
                &label("d2_power", length, seed),
                |tick| {
                    if tick > 0 {
                        sim.step_phases()?;
                    }
                    Ok(sim.config())
                },
            )?;
            let keep = |s: TimeSeries| TimeSeries {
                label: s.label,
                samples: s.samples.into_iter().step_by(spec.record_every).collect(),
            };
            Ok((keep(d1), keep(d2), sim.max_unitarity_defect()))
        })
        .collect();
    let mut out = RunOutput { series: Vec::new(), max_unitarity_defect: 0.0 };
    for r in results {
        let (d1, d2, defect) = r?;
        out.series.push(d1);
        out.series.push(d2);
        out.max_unitarity_defect = out.max_unitarity_defect.max(defect);
    }
    Ok(out)
}

/// Saw-tooth fringe: each tick is one modulator period sweeping `φ_B` over
/// `[0, 2π)` in `sweep_samples` steps with the fiber frozen; disturbances
/// advance between periods. Records every fringe sample and the per-period
/// envelope visibility.
pub fn run_fringe(scenario: &Scenario) -> Result<RunOutput> {
    expect_kind(scenario, ExperimentKind::Fringe)?;
    let spec = &scenario.experiment;
    let n = spec.sweep_samples;
    let results: Vec<Result<(TimeSeries, TimeSeries, f64)>> = trials(spec)
        .into_par_iter()
        .map(|(length, seed)| {
            let mut sim = LinkSimulation::new(&scenario.system, &scenario.disturbance, spec.dt_seconds, length, seed)?;
            let mut power = TimeSeries::new(label("fringe_power", length, seed));
            let mut envelope = TimeSeries::new(label("envelope_visibility", length, seed));
            for period in 0..spec.duration_ticks {
                if period > 0 {
                    sim.step_birefringence()?;
                    sim.step_phases()?;
                }
                if period % spec.record_every != 0 {
                    continue;
                }
                let cfg = sim.config();
                let samples = sweep_fringe(&cfg, n);
                let t0 = period as f64 * spec.dt_seconds;
                for (k, s) in samples.iter().enumerate() {
                    let tick = (period * n + k) as u64;
                    power.push(tick, t0 + spec.dt_seconds * k as f64 / n as f64, s.power);
                }
                let powers: Vec<f64> = samples.iter().map(|s| s.power).collect();
                let (mean, amplitude) = fit_fringe(&powers);
                envelope.push(period as u64, t0, (amplitude / mean).min(1.0));
            }
            Ok((power, envelope, sim.max_unitarity_defect()))
        })
        .collect();
    let mut out = RunOutput { series: Vec::new(), max_unitarity_defect: 0.0 };
    for r in results {
        let (power, envelope, defect) = r?;
        out.series.push(power);
        out.series.push(envelope);
        out.max_unitarity_defect = out.max_unitarity_defect.max(defect);
    }
    Ok(out)
}

/// Fluctuation summary for one `(length, seed)` visibility series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSummary {
    pub length_km: f64,
    pub seed: u64,
    pub min: f64,
    pub max: f64,
    /// `max − min`, the headline fluctuation.
    pub range: f64,
    pub std: f64,
    /// First lag where the autocorrelation falls below `1/e`, censored at the
    /// run span.
    pub decorrelation_time_s: f64,
}

impl TrialSummary {
    pub fn from_series(length_km: f64, seed: u64, values: &[f64], sample_interval_s: f64) -> Self {
        let (min, max) = stats::min_max(values);
        Self {
            length_km,
            seed,
            min,
            max,
            range: max - min,
            std: stats::std_dev(values),
            decorrelation_time_s: stats::decorrelation_lag(values) as f64 * sample_interval_s,
        }
    }

    /// Fluctuation rate, `1 / decorrelation time`.
    pub fn rate(&self) -> f64 {
        1.0 / self.decorrelation_time_s
    }
}

/// Seed-averaged summary at one length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthSummary {
    pub length_km: f64,
    pub mean_range: f64,
    pub min_range: f64,
    pub max_range: f64,
    pub mean_std: f64,
    pub mean_decorrelation_time_s: f64,
    pub mean_rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VisibilityOutput {
    pub series: Vec<TimeSeries>,
    pub trials: Vec<TrialSummary>,
    pub lengths: Vec<LengthSummary>,
    /// Spearman correlation between length and seed-averaged fluctuation
    /// rate; NaN with fewer than two distinct lengths.
    pub rate_spearman: f64,
    pub max_unitarity_defect: f64,
}

pub fn summarize_lengths(lengths: &[f64], trials: &[TrialSummary]) -> Vec<LengthSummary> {
    lengths
        .iter()
        .map(|&l| {
            let at: Vec<&TrialSummary> = trials.iter().filter(|t| t.length_km == l).collect();
            let avg = |f: &dyn Fn(&TrialSummary) -> f64| {
                at.iter().map(|t| f(t)).sum::<f64>() / at.len() as f64
            };
            LengthSummary {
                length_km: l,
                mean_range: avg(&|t| t.range),
                min_range: at.iter().map(|t| t.range).fold(f64::INFINITY, f64::min),
                max_range: at.iter().map(|t| t.range).fold(f64::NEG_INFINITY, f64::max),
                mean_std: avg(&|t| t.std),
                mean_decorrelation_time_s: avg(&|t| t.decorrelation_time_s),
                mean_rate: avg(&|t| t.rate()),
            }
        })
        .collect()
}

/// Full-system evolution with the swept visibility recorded every
/// `record_every` ticks, for every length and seed.
pub fn run_visibility_timeseries(scenario: &Scenario) -> Result<VisibilityOutput> {
    expect_kind(scenario, ExperimentKind::VisibilityTimeseries)?;
    let spec = &scenario.experiment;
    let interval = spec.dt_seconds * spec.record_every as f64;
    let results: Vec<Result<(TimeSeries, TrialSummary, f64)>> = trials(spec)
        .into_par_iter()
        .map(|(length, seed)| {
            let mut sim = LinkSimulation::new(&scenario.system, &scenario.disturbance, spec.dt_seconds, length, seed)?;
            let mut series = TimeSeries::new(label("visibility", length, seed));
            for tick in 0..spec.duration_ticks {
                if tick > 0 {
                    sim.step_birefringence()?;
                    sim.step_phases()?;
                }
                if tick % spec.record_every == 0 {
                    let v = sweep_visibility(&sim.config(), spec.sweep_samples)?;
                    series.push(tick as u64, tick as f64 * spec.dt_seconds, v);
                }
            }
            let summary = TrialSummary::from_series(length, seed, &series.values(), interval);
            Ok((series, summary, sim.max_unitarity_defect()))
        })
        .collect();
    let mut series = Vec::new();
    let mut summaries = Vec::new();
    let mut defect: f64 = 0.0;
    for r in results {
        let (s, t, d) = r?;
        series.push(s);
        summaries.push(t);
        defect = defect.max(d);
    }
    let mut distinct: Vec<f64> = Vec::new();
    for &l in &spec.fiber_length_km {
        if !distinct.contains(&l) {
            distinct.push(l);
        }
    }
    let lengths = summarize_lengths(&distinct, &summaries);
    let rate_spearman = if lengths.len() >= 2 {
        let ls: Vec<f64> = lengths.iter().map(|s| s.length_km).collect();
        let rs: Vec<f64> = lengths.iter().map(|s| s.mean_rate).collect();
        stats::spearman(&ls, &rs)
    } else {
        f64::NAN
    };
    Ok(VisibilityOutput { series, trials: summaries, lengths, rate_spearman, max_unitarity_defect: defect })
}

/// Outcome of one check in the stability battery.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// One `key=value` line per check.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "check={} result={} max_deviation={:.16e} tolerance={:.16e}",
                c.name,
                if c.passed { "pass" } else { "fail" },
                c.max_deviation,
                c.tolerance
            );
        }
        out
    }
}

/// Check names, in report order.
pub mod checks {
    pub const FIELD_POWER_EQUIVALENCE: &str = "field_power_equivalence";
    pub const ENERGY_BOUND: &str = "energy_bound";
    pub const CHANNEL_CANCELLATION: &str = "channel_cancellation";
    pub const CLOSED_FORM: &str = "closed_form";
    pub const STABILITY_EQUIVALENCE: &str = "stability_equivalence";
    pub const POLARIZATION_MAINTAINING: &str = "polarization_maintaining_case";
}

/// A random disturbance state of the configured system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyTrial {
    /// Configured arms and input, Haar channel, uniform phases.
    pub config: SystemConfig,
    /// Random unit input used for the input-independent visibility checks.
    pub probe_state: JonesVector,
}

/// The configured system at rest.
pub fn base_config(system: &SystemSpec) -> SystemConfig {
    let arm = |a: &ArmSpec| {
        FiberElement::new(SegmentedFiber::lumped(a.length_km, a.theta, a.delta).transport(), a.common_phase, a.length_km)
    };
    SystemConfig {
        arm_a1: arm(&system.arms[0]),
        arm_a2: arm(&system.arms[1]),
        arm_b1: arm(&system.arms[2]),
        arm_b2: arm(&system.arms[3]),
        channel: FiberElement::identity(),
        phi_a: system.phi_a,
        phi_b: system.phi_b,
        input_state: system.input_state,
    }
}

/// Deterministic disturbance states for the stability battery:
/// `duration_ticks` of them, from the first seed.
pub fn verify_trials(scenario: &Scenario) -> Vec<VerifyTrial> {
    let base = base_config(&scenario.system);
    let mut rng = trial_rng(scenario.experiment.seeds[0], stream::VERIFY);
    let phase = |rng: &mut ChaCha8Rng| rng.random_range(0.0..2.0 * PI);
    (0..scenario.experiment.duration_ticks)
        .map(|_| {
            let mut cfg = base;
            cfg.channel = FiberElement::new(haar_unitary(&mut rng), phase(&mut rng), 0.0);
            cfg.arm_a1.common_phase = phase(&mut rng);
            cfg.arm_a2.common_phase = phase(&mut rng);
            cfg.arm_b1.common_phase = phase(&mut rng);
            cfg.arm_b2.common_phase = phase(&mut rng);
            cfg.phi_a = phase(&mut rng);
            cfg.phi_b = phase(&mut rng);
            let probe = haar_unitary(&mut rng).apply(&JonesVector::horizontal());
            VerifyTrial { config: cfg, probe_state: probe }
        })
        .collect()
}

fn closed_form_power(cfg: &SystemConfig) -> f64 {
    cfg.input_power() * (1.0 + phase_difference(cfg).cos()) / 8.0
}

fn max_over<F: Fn(&VerifyTrial) -> f64 + Sync + Send>(trials: &[VerifyTrial], f: F) -> f64 {
    trials.par_iter().map(f).reduce(|| 0.0, f64::max)
}

fn with_arm_transports(cfg: &SystemConfig, t: JonesMatrix) -> SystemConfig {
    let mut c = *cfg;
    c.arm_a1.transport = t;
    c.arm_a2.transport = t;
    c.arm_b1.transport = t;
    c.arm_b2.transport = t;
    c
}

fn unit_visibility_deviation(cfg: &SystemConfig, probe: JonesVector, n: usize) -> f64 {
    let mut c = *cfg;
    c.input_state = probe;
    // n is validated upstream.
    (1.0 - sweep_visibility(&c, n).expect("validated sweep")).abs()
}

/// Runs the stability battery against the configured arms. Failures are
/// report entries, not errors.
pub fn run_verify_conditions(scenario: &Scenario) -> Result<VerifyReport> {
    expect_kind(scenario, ExperimentKind::VerifyConditions)?;
    let n = scenario.experiment.sweep_samples;
    let trials = verify_trials(scenario);
    let base = base_config(&scenario.system);
    let p_in = base.input_power();

    let field_dev = max_over(&trials, |t| {
        let f = output_field(&t.config);
        (output_power(&t.config) - f.power()).abs() / p_in
    });
    let energy_dev = max_over(&trials, |t| {
        let p = output_power(&t.config);
        (-p).max(p - p_in / 4.0).max(0.0) / p_in
    });
    let cancel_dev = max_over(&trials, |t| {
        let reference = t.config.with_channel(FiberElement::identity().with_phase(t.config.channel.common_phase));
        (output_power(&t.config) - output_power(&reference)).abs() / p_in
    });
    let closed_dev = max_over(&trials, |t| {
        (output_power(&t.config) - closed_form_power(&t.config)).abs() / p_in
    });

    let conditions_hold = check_stability_conditions(&base, DEFAULT_STABILITY_TOL).both();
    let unit_dev = max_over(&trials, |t| unit_visibility_deviation(&t.config, t.probe_state, n));
    let unit_visibility = unit_dev <= VISIBILITY_TOL;

    let pm_conditions = check_stability_conditions(
        &with_arm_transports(&base, JonesMatrix::IDENTITY),
        DEFAULT_STABILITY_TOL,
    )
    .both();
    let pm_vis_dev = max_over(&trials, |t| {
        unit_visibility_deviation(&with_arm_transports(&t.config, JonesMatrix::IDENTITY), t.probe_state, n)
    });
    let pm_power_dev = max_over(&trials, |t| {
        let c = with_arm_transports(&t.config, JonesMatrix::IDENTITY);
        (output_power(&c) - closed_form_power(&c)).abs() / p_in
    });

    let power_check = |name, dev: f64| CheckResult { name, passed: dev <= POWER_TOL, max_deviation: dev, tolerance: POWER_TOL };
    Ok(VerifyReport {
        checks: vec![
            power_check(checks::FIELD_POWER_EQUIVALENCE, field_dev),
            power_check(checks::ENERGY_BOUND, energy_dev),
            power_check(checks::CHANNEL_CANCELLATION, cancel_dev),
            power_check(checks::CLOSED_FORM, closed_dev),
            CheckResult {
                name: checks::STABILITY_EQUIVALENCE,
                passed: conditions_hold == unit_visibility,
                max_deviation: unit_dev,
                tolerance: VISIBILITY_TOL,
            },
            CheckResult {
                name: checks::POLARIZATION_MAINTAINING,
                passed: pm_conditions && pm_vis_dev <= VISIBILITY_TOL && pm_power_dev <= POWER_TOL,
                max_deviation: pm_vis_dev.max(pm_power_dev),
                tolerance: VISIBILITY_TOL,
            },
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{check_stability_conditions, path1_transform, path2_transform};
    use crate::jones::waveplate;
    use approx::assert_abs_diff_eq;
    use scenario::{POLARIZATION_MAINTAINING, QUIET};

    fn quiet(kind: ExperimentKind) -> Scenario {
        let mut s = Scenario::defaults(kind);
        s.experiment.disturbance_preset = QUIET.into();
        s.disturbance = DisturbanceSet::preset(QUIET).unwrap();
        s
    }

    fn short(mut s: Scenario, ticks: usize) -> Scenario {
        s.experiment.duration_ticks = ticks;
        s
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let s = Scenario::defaults(ExperimentKind::Fringe);
        assert!(matches!(
            run_drift(&s),
            Err(Error::ConfigValidation { ref key, .. }) if key == "experiment.kind"
        ));
        assert!(run_verify_conditions(&s).is_err());
    }

    #[test]
    fn drift_without_diffusion_is_constant() {
        let out = run_drift(&short(quiet(ExperimentKind::Drift), 500)).unwrap();
        for s in &out.series {
            let v = s.values();
            assert_eq!(v.len(), 500);
            assert!(v.iter().all(|x| *x == v[0]), "{}", s.label);
        }
    }

    #[test]
    fn scripted_phase_ramp_traces_a_sinusoid() {
        let omega = 2.0 * PI / 600.0;
        let dt = 2.16;
        let (d1, d2) = trace_power(1000, dt, "d1", "d2", |tick| {
            let mut cfg = SystemConfig::ideal();
            cfg.arm_a1.common_phase = omega * tick as f64 * dt;
            Ok(cfg)
        })
        .unwrap();
        for (a, b) in d1.samples.iter().zip(&d2.samples) {
            let want = (1.0 + (omega * a.time_seconds).cos()) / 8.0;
            assert_abs_diff_eq!(a.value, want, epsilon = 1e-12);
            assert_abs_diff_eq!(a.value + b.value, 0.25, epsilon = 1e-12);
        }
    }

    #[test]
    fn drift_conserves_detector_sum() {
        let s = short(Scenario::defaults(ExperimentKind::Drift), 5_000);
        let out = run_drift(&s).unwrap();
        let p = s.system.input_state.power();
        let (d1, d2) = (&out.series[0], &out.series[1]);
        assert!(d1.label.starts_with("d1_power") && d2.label.starts_with("d2_power"));
        for (a, b) in d1.samples.iter().zip(&d2.samples) {
            assert_eq!(a.tick, b.tick);
            assert!((a.value + b.value - p / 4.0).abs() <= POWER_TOL * p);
        }
    }

    #[test]
    fn drift_is_slow_per_minute_and_swings_over_days() {
        let s = Scenario::defaults(ExperimentKind::Drift).with_seeds((1..=10).collect());
        let out = run_drift(&s).unwrap();
        let p = s.system.input_state.power();
        let phase = s.disturbance.arm_phase.diffusion_rate;
        // Δ collects four independent arm phases; a minute of drift moves it
        // by about sqrt(4·D·60) rms, and D1 moves at most P/8 per radian.
        let minute = (60.0 / s.experiment.dt_seconds).round() as usize;
        let bound = p / 8.0 * 6.0 * (4.0 * phase * 60.0).sqrt();
        let base = base_config(&s.system);
        let full_swing = crate::interferometer::analytic_visibility(&base).unwrap() * p / 4.0;
        let mut ranges = Vec::new();
        for d1 in out.series.iter().filter(|s| s.label.starts_with("d1")) {
            let v = d1.values();
            let worst = v.windows(minute + 1).map(|w| (w[minute] - w[0]).abs()).fold(0.0, f64::max);
            assert!(worst <= bound, "{}: {worst} > {bound}", d1.label);
            let (lo, hi) = stats::min_max(&v);
            ranges.push(hi - lo);
        }
        assert!(stats::mean(&ranges) >= 0.5 * full_swing, "{ranges:?}");
    }

    #[test]
    fn matched_arms_keep_unit_envelope_under_channel_drift() {
        let mut s = short(Scenario::defaults(ExperimentKind::Fringe), 300);
        s.system = SystemSpec::from_preset(POLARIZATION_MAINTAINING).unwrap();
        s.disturbance.arm_birefringence.diffusion_rate = 0.0;
        let out = run_fringe(&s).unwrap();
        let env = out.series.iter().find(|s| s.label.starts_with("envelope")).unwrap();
        assert_eq!(env.samples.len(), 300);
        for v in env.values() {
            assert!((1.0 - v).abs() <= VISIBILITY_TOL, "{v}");
        }
        let power = out.series.iter().find(|s| s.label.starts_with("fringe_power")).unwrap();
        assert_eq!(power.samples.len(), 300 * s.experiment.sweep_samples);
        assert_eq!(power.samples[17].tick, 17);
    }

    #[test]
    fn quiet_fringe_envelope_is_constant() {
        let out = run_fringe(&short(quiet(ExperimentKind::Fringe), 50)).unwrap();
        let env = out.series.iter().find(|s| s.label.starts_with("envelope")).unwrap().values();
        assert!(env.iter().all(|v| *v == env[0]));
    }

    #[test]
    fn record_every_decimates() {
        let mut s = short(Scenario::defaults(ExperimentKind::VisibilityTimeseries), 100);
        s.experiment.fiber_length_km = vec![5.0];
        s.experiment.seeds = vec![3];
        s.experiment.record_every = 10;
        let out = run_visibility_timeseries(&s).unwrap();
        let ticks: Vec<u64> = out.series[0].samples.iter().map(|p| p.tick).collect();
        assert_eq!(ticks, (0..100).step_by(10).collect::<Vec<u64>>());
        assert!(out.rate_spearman.is_nan());
    }

    #[test]
    fn runs_are_reproducible() {
        let mut s = short(Scenario::defaults(ExperimentKind::VisibilityTimeseries), 400);
        s.experiment.seeds = vec![1, 2, 3];
        assert_eq!(run_visibility_timeseries(&s).unwrap(), run_visibility_timeseries(&s).unwrap());
        let f = short(Scenario::defaults(ExperimentKind::Fringe), 200);
        assert_eq!(run_fringe(&f).unwrap(), run_fringe(&f).unwrap());
        let d = short(Scenario::defaults(ExperimentKind::Drift), 2000);
        assert_eq!(run_drift(&d).unwrap(), run_drift(&d).unwrap());
    }

    #[test]
    fn visibility_series_order_follows_config() {
        let mut s = short(Scenario::defaults(ExperimentKind::VisibilityTimeseries), 50);
        s.experiment.fiber_length_km = vec![10.0, 0.0];
        s.experiment.seeds = vec![2, 1];
        let out = run_visibility_timeseries(&s).unwrap();
        let labels: Vec<&str> = out.series.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(
            labels,
            ["visibility_L10km_seed2", "visibility_L10km_seed1", "visibility_L0km_seed2", "visibility_L0km_seed1"]
        );
        assert_eq!(out.lengths.len(), 2);
        assert_eq!(out.lengths[0].length_km, 10.0);
    }

    #[test]
    fn matched_system_passes_every_check() {
        let report = run_verify_conditions(&short(Scenario::defaults(ExperimentKind::VerifyConditions), 2_000)).unwrap();
        assert!(report.all_passed(), "{}", report.to_text());
        for c in &report.checks {
            assert!(c.max_deviation < 1e-12, "{}: {}", c.name, c.max_deviation);
        }
        assert_eq!(report.to_text().lines().count(), 6);
    }

    fn with_alice_mismatch(mut s: Scenario) -> Scenario {
        s.system.arms[0] = ArmSpec::retarder(0.3, 1.1);
        s
    }

    #[test]
    fn alice_mismatch_breaks_closed_form() {
        let s = with_alice_mismatch(short(Scenario::defaults(ExperimentKind::VerifyConditions), 1_000));
        let report = run_verify_conditions(&s).unwrap();
        let closed = report.check(checks::CLOSED_FORM).unwrap();
        assert!(!closed.passed);
        assert!(!report.all_passed());

        let p = s.system.input_state.power();
        let brute = verify_trials(&s)
            .iter()
            .map(|t| {
                let (_, ph1) = path1_transform(&t.config);
                let (_, ph2) = path2_transform(&t.config);
                (output_field(&t.config).power() - p * (1.0 + (ph1 - ph2).cos()) / 8.0).abs() / p
            })
            .fold(0.0, f64::max);
        assert_abs_diff_eq!(closed.max_deviation, brute, epsilon = 1e-12);

        assert!(report.check(checks::FIELD_POWER_EQUIVALENCE).unwrap().passed);
        assert!(report.check(checks::ENERGY_BOUND).unwrap().passed);
        assert!(report.check(checks::CHANNEL_CANCELLATION).unwrap().passed);
        assert!(report.check(checks::POLARIZATION_MAINTAINING).unwrap().passed);
    }

    #[test]
    fn bob_matched_alice_mismatched_is_still_consistent() {
        let mut s = with_alice_mismatch(short(Scenario::defaults(ExperimentKind::VerifyConditions), 500));
        s.system.arms[2] = ArmSpec::retarder(0.7, 2.0);
        s.system.arms[3] = ArmSpec::retarder(0.7, 2.0);
        let stability = check_stability_conditions(&base_config(&s.system), DEFAULT_STABILITY_TOL);
        assert!(stability.bob_ok && !stability.alice_ok);
        let report = run_verify_conditions(&s).unwrap();
        let eq = report.check(checks::STABILITY_EQUIVALENCE).unwrap();
        assert!(eq.passed);
        assert!(eq.max_deviation > VISIBILITY_TOL);
        assert!(report.check(checks::CHANNEL_CANCELLATION).unwrap().passed);
    }

    #[test]
    fn single_mode_arms_lose_unit_visibility() {
        let mut s = short(Scenario::defaults(ExperimentKind::VerifyConditions), 200);
        s.system = SystemSpec::from_preset(scenario::SINGLE_MODE).unwrap();
        let report = run_verify_conditions(&s).unwrap();
        assert!(report.check(checks::STABILITY_EQUIVALENCE).unwrap().passed);
        assert!(report.check(checks::STABILITY_EQUIVALENCE).unwrap().max_deviation > 1e-3);
        assert!(report.check(checks::POLARIZATION_MAINTAINING).unwrap().passed);
    }

    #[test]
    fn verify_trials_are_deterministic_and_unitary() {
        let s = short(Scenario::defaults(ExperimentKind::VerifyConditions), 100);
        let a = verify_trials(&s);
        assert_eq!(a, verify_trials(&s));
        assert_ne!(a, verify_trials(&s.clone().with_seeds(vec![2])));
        for t in &a {
            assert!(t.config.max_unitarity_defect() < 1e-12);
            assert_abs_diff_eq!(t.probe_state.power(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lumped_arm_matches_waveplate() {
        let a = ArmSpec::retarder(0.16, PI);
        let cfg = base_config(&SystemSpec { arms: [a; 4], ..SystemSpec::defaults(ExperimentKind::Drift) });
        assert!(cfg.arm_b1.transport.frobenius_distance(&waveplate(0.16, PI)) < 1e-15);
    }

    #[test]
    fn trial_summary_fields() {
        let v = [0.2, 0.9, 0.4, 0.9];
        let t = TrialSummary::from_series(25.0, 4, &v, 2.0);
        assert_eq!((t.min, t.max), (0.2, 0.9));
        assert_abs_diff_eq!(t.range, 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(t.rate(), 1.0 / t.decorrelation_time_s);
        let l = summarize_lengths(&[25.0], &[t, TrialSummary { range: 0.1, ..t }]);
        assert_abs_diff_eq!(l[0].mean_range, 0.4, epsilon = 1e-15);
        assert_eq!((l[0].min_range, l[0].max_range), (0.1, t.range));
    }

    /// Length ordering of the fluctuation rate holds for most disjoint
    /// 20-seed sets, not just the default one. Slow: ten full runs.
    #[test]
    #[ignore]
    fn rate_ordering_is_robust_across_seed_sets() {
        let base = Scenario::defaults(ExperimentKind::VisibilityTimeseries);
        let good = (0..10u64)
            .filter(|k| {
                let s = base.clone().with_seeds((1..=20).map(|i| 1000 * (k + 1) + i).collect());
                run_visibility_timeseries(&s).unwrap().rate_spearman >= 0.9
            })
            .count();
        assert!(good >= 9, "{good}/10 seed sets ordered");
    }
}
