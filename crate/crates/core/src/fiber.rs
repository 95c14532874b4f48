//! Fiber sections and their environmental disturbance.
//!
//! A fiber is a chain of short birefringent segments, each a linear retarder
//! `(theta, delta)`. Birefringence wanders by an Ornstein–Uhlenbeck process on
//! those parameters, anchored at the values drawn when the fiber was built,
//! so unitarity of the compiled transport is structural. Common phases
//! wander by a separate, much slower OU process.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jones::{waveplate, JonesMatrix, UnitaryAccumulator};

/// Default spatial discretization of transmission fiber.
pub const DEFAULT_SEGMENT_LENGTH_KM: f64 = 1.0;

/// A fiber section as seen by the interferometer: polarization transport
/// plus a scalar common phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberElement {
    pub transport: JonesMatrix,
    /// Unwrapped; reduce mod 2π only for display.
    pub common_phase: f64,
    pub length_km: f64,
}

impl FiberElement {
    pub fn new(transport: JonesMatrix, common_phase: f64, length_km: f64) -> Self {
        Self { transport, common_phase, length_km }
    }

    /// Polarization-maintaining section with zero phase.
    pub fn identity() -> Self {
        Self::new(JonesMatrix::IDENTITY, 0.0, 0.0)
    }

    pub fn with_phase(mut self, phase: f64) -> Self {
        self.common_phase = phase;
        self
    }

    pub fn with_transport(mut self, transport: JonesMatrix) -> Self {
        self.transport = transport;
        self
    }
}

impl Default for FiberElement {
    fn default() -> Self {
        Self::identity()
    }
}

/// One birefringent segment: current retarder parameters and the rest values
/// the OU process relaxes toward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub theta: f64,
    pub delta: f64,
    pub rest_theta: f64,
    pub rest_delta: f64,
}

impl Segment {
    pub fn at_rest(theta: f64, delta: f64) -> Self {
        Self { theta, delta, rest_theta: theta, rest_delta: delta }
    }

    pub fn jones(&self) -> JonesMatrix {
        waveplate(self.theta, self.delta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentedFiber {
    /// In propagation order: light meets `segments[0]` first.
    pub segments: Vec<Segment>,
    pub segment_length_km: f64,
    pub length_km: f64,
}

impl SegmentedFiber {
    /// Fiber made of `ceil(length / segment_length)` copies of one retarder.
    pub fn uniform(length_km: f64, segment_length_km: f64, theta: f64, delta: f64) -> Result<Self> {
        let n = segment_count(length_km, segment_length_km)?;
        Ok(Self {
            segments: vec![Segment::at_rest(theta, delta); n],
            segment_length_km,
            length_km,
        })
    }

    /// A single retarder standing for a whole (short) section.
    pub fn lumped(length_km: f64, theta: f64, delta: f64) -> Self {
        Self {
            segments: vec![Segment::at_rest(theta, delta)],
            segment_length_km: length_km,
            length_km,
        }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn transport(&self) -> JonesMatrix {
        compile_transport(self)
    }
}

fn segment_count(length_km: f64, segment_length_km: f64) -> Result<usize> {
    if !(length_km.is_finite() && length_km >= 0.0) {
        return Err(Error::NegativeLength(length_km));
    }
    if !(segment_length_km.is_finite() && segment_length_km > 0.0) {
        return Err(Error::invalid("segment_length_km", format!("must be > 0, got {segment_length_km}")));
    }
    Ok((length_km / segment_length_km).ceil() as usize)
}

/// Random fiber with `ceil(length / segment_length)` segments, each with
/// `delta ~ U[0, 2π)` and `theta ~ U[0, π)`.
pub fn build_fiber<R: Rng + ?Sized>(
    length_km: f64,
    segment_length_km: f64,
    rng: &mut R,
) -> Result<SegmentedFiber> {
    let n = segment_count(length_km, segment_length_km)?;
    let segments = (0..n)
        .map(|_| {
            let delta = rng.random_range(0.0..2.0 * PI);
            let theta = rng.random_range(0.0..PI);
            Segment::at_rest(theta, delta)
        })
        .collect();
    Ok(SegmentedFiber { segments, segment_length_km, length_km })
}

/// Ordered product of segment retarders, last segment leftmost.
pub fn compile_transport(fiber: &SegmentedFiber) -> JonesMatrix {
    let mut acc = UnitaryAccumulator::new();
    for seg in &fiber.segments {
        // Retarders are exactly unitary, so projection cannot hit a singular
        // matrix.
        acc.push(&seg.jones()).expect("retarder product is unitary");
    }
    acc.finish().expect("retarder product is unitary")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    /// Bend and vibration acting on segment birefringence.
    FastBirefringence,
    /// Temperature acting on the common phase.
    SlowThermalPhase,
}

/// OU disturbance parameters for one class of fiber section.
///
/// `diffusion_rate` is rad²/s per km for birefringence, where a segment of
/// length ℓ has stationary variance `D·τ·ℓ`. For common phase it is the
/// short-time diffusion rate in rad²/s: the per-tick increment variance is
/// `D·dt` when `τ ≫ dt`, and the stationary variance is `D·τ/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DisturbanceProcess {
    pub kind: DisturbanceKind,
    pub correlation_time: f64,
    pub diffusion_rate: f64,
    pub dt: f64,
}

impl DisturbanceProcess {
    pub fn new(kind: DisturbanceKind, correlation_time: f64, diffusion_rate: f64, dt: f64) -> Result<Self> {
        if !(correlation_time.is_finite() && correlation_time > 0.0) {
            return Err(Error::invalid("correlation_time", format!("must be > 0, got {correlation_time}")));
        }
        if !(diffusion_rate.is_finite() && diffusion_rate >= 0.0) {
            return Err(Error::invalid("diffusion_rate", format!("must be >= 0, got {diffusion_rate}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        Ok(Self { kind, correlation_time, diffusion_rate, dt })
    }

    /// No disturbance at all.
    pub fn frozen(kind: DisturbanceKind, dt: f64) -> Self {
        Self { kind, correlation_time: 1.0, diffusion_rate: 0.0, dt }
    }

    pub fn is_frozen(&self) -> bool {
        self.diffusion_rate == 0.0
    }

    /// One-tick autocorrelation `e^{−dt/τ}`.
    pub fn mixing(&self) -> f64 {
        (-self.dt / self.correlation_time).exp()
    }

    /// Stationary variance of one segment's `theta` and `delta`.
    pub fn segment_variance(&self, segment_length_km: f64) -> f64 {
        self.diffusion_rate * self.correlation_time * segment_length_km
    }

    /// Stationary variance of a common phase.
    pub fn phase_variance(&self) -> f64 {
        0.5 * self.diffusion_rate * self.correlation_time
    }

    fn expect_kind(&self, kind: DisturbanceKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::invalid("kind", format!("expected {kind:?}, got {:?}", self.kind)))
        }
    }
}

/// Exact OU update over one tick: relax toward `mean` by `rho` and add noise
/// so that the stationary variance is `variance`.
#[inline]
fn ou_step<R: Rng + ?Sized>(x: f64, mean: f64, rho: f64, variance: f64, rng: &mut R) -> f64 {
    let noise: f64 = rng.sample(StandardNormal);
    mean + rho * (x - mean) + (variance * (1.0 - rho * rho)).sqrt() * noise
}

/// Advances every segment one OU tick; returns the stepped copy.
pub fn step_birefringence<R: Rng + ?Sized>(
    fiber: &SegmentedFiber,
    process: &DisturbanceProcess,
    rng: &mut R,
) -> Result<SegmentedFiber> {
    let mut out = fiber.clone();
    step_birefringence_in_place(&mut out, process, rng)?;
    Ok(out)
}

/// In-place form of [`step_birefringence`] for the simulation loops.
pub fn step_birefringence_in_place<R: Rng + ?Sized>(
    fiber: &mut SegmentedFiber,
    process: &DisturbanceProcess,
    rng: &mut R,
) -> Result<()> {
    process.expect_kind(DisturbanceKind::FastBirefringence)?;
    if process.is_frozen() {
        return Ok(());
    }
    let rho = process.mixing();
    let var = process.segment_variance(fiber.segment_length_km);
    for seg in &mut fiber.segments {
        seg.theta = ou_step(seg.theta, seg.rest_theta, rho, var, rng);
        seg.delta = ou_step(seg.delta, seg.rest_delta, rho, var, rng);
    }
    Ok(())
}

/// Advances the common phase one OU tick (mean zero); transport untouched.
pub fn step_phase_drift<R: Rng + ?Sized>(
    element: &FiberElement,
    process: &DisturbanceProcess,
    rng: &mut R,
) -> Result<FiberElement> {
    process.expect_kind(DisturbanceKind::SlowThermalPhase)?;
    let mut out = *element;
    if !process.is_frozen() {
        out.common_phase =
            ou_step(element.common_phase, 0.0, process.mixing(), process.phase_variance(), rng);
    }
    Ok(out)
}

/// A fiber section under simulation: segment state plus common phase.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberSection {
    pub fiber: SegmentedFiber,
    pub common_phase: f64,
}

impl FiberSection {
    pub fn new(fiber: SegmentedFiber, common_phase: f64) -> Self {
        Self { fiber, common_phase }
    }

    pub fn element(&self) -> FiberElement {
        FiberElement::new(compile_transport(&self.fiber), self.common_phase, self.fiber.length_km)
    }

    pub fn step_birefringence<R: Rng + ?Sized>(&mut self, p: &DisturbanceProcess, rng: &mut R) -> Result<()> {
        step_birefringence_in_place(&mut self.fiber, p, rng)
    }

    pub fn step_phase<R: Rng + ?Sized>(&mut self, p: &DisturbanceProcess, rng: &mut R) -> Result<()> {
        p.expect_kind(DisturbanceKind::SlowThermalPhase)?;
        if !p.is_frozen() {
            self.common_phase = ou_step(self.common_phase, 0.0, p.mixing(), p.phase_variance(), rng);
        }
        Ok(())
    }
}
