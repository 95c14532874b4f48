//! Optics of the double unbalanced Mach-Zehnder link.
//!
//! Alice's interferometer has arms A₁ (long) and A₂ (short, with PM_A); Bob's
//! has B₁ and B₂ (with PM_B); the channel C joins them. The two time bins
//! that overlap at Bob's output coupler travel
//!
//! ```text
//! path 1: A₁ → C → B₂ → PM_B
//! path 2: A₂ → PM_A → C → B₁
//! ```
//!
//! The four 50/50 couplers are folded into an amplitude factor of 1/4 per
//! path, so each path delivers `E_in/4` ahead of its own transport.
//! Phase modulators are pure scalar phases.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fiber::FiberElement;
use crate::jones::{JonesMatrix, JonesVector};

/// Fewest phase points accepted by [`sweep_visibility`].
pub const MIN_SWEEP_SAMPLES: usize = 16;

/// Default Frobenius tolerance for [`check_stability_conditions`].
pub const DEFAULT_STABILITY_TOL: f64 = 1e-6;

const PATH_AMPLITUDE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemConfig {
    pub arm_a1: FiberElement,
    pub arm_a2: FiberElement,
    pub arm_b1: FiberElement,
    pub arm_b2: FiberElement,
    pub channel: FiberElement,
    /// PM_A phase, radians.
    pub phi_a: f64,
    /// PM_B phase, radians.
    pub phi_b: f64,
    pub input_state: JonesVector,
}

impl SystemConfig {
    /// All sections polarization-maintaining, all phases zero, unit
    /// horizontal input.
    pub fn ideal() -> Self {
        Self {
            arm_a1: FiberElement::identity(),
            arm_a2: FiberElement::identity(),
            arm_b1: FiberElement::identity(),
            arm_b2: FiberElement::identity(),
            channel: FiberElement::identity(),
            phi_a: 0.0,
            phi_b: 0.0,
            input_state: JonesVector::horizontal(),
        }
    }

    /// `‖E_in‖²`.
    pub fn input_power(&self) -> f64 {
        self.input_state.power()
    }

    pub fn with_phi_b(mut self, phi_b: f64) -> Self {
        self.phi_b = phi_b;
        self
    }

    pub fn with_channel(mut self, channel: FiberElement) -> Self {
        self.channel = channel;
        self
    }

    /// Largest unitarity defect over the five transports.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.elements()
            .iter()
            .map(|e| e.transport.unitarity_defect())
            .fold(0.0, f64::max)
    }

    fn elements(&self) -> [&FiberElement; 5] {
        [&self.arm_a1, &self.arm_a2, &self.arm_b1, &self.arm_b2, &self.channel]
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

/// One point of a phase sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FringeSample {
    /// `φ_B − φ_A`.
    pub delta_phi: f64,
    pub power: f64,
}

/// Path 1 transport `B₂·C·A₁` and its accumulated phase `α₁+β₂+φ+φ_B`.
pub fn path1_transform(cfg: &SystemConfig) -> (JonesMatrix, f64) {
    let m = cfg.arm_b2.transport * cfg.channel.transport * cfg.arm_a1.transport;
    let phase = cfg.arm_a1.common_phase
        + cfg.arm_b2.common_phase
        + cfg.channel.common_phase
        + cfg.phi_b;
    (m, phase)
}

/// Path 2 transport `B₁·C·A₂` and its accumulated phase `α₂+β₁+φ+φ_A`.
pub fn path2_transform(cfg: &SystemConfig) -> (JonesMatrix, f64) {
    let m = cfg.arm_b1.transport * cfg.channel.transport * cfg.arm_a2.transport;
    let phase = cfg.arm_a2.common_phase
        + cfg.arm_b1.common_phase
        + cfg.channel.common_phase
        + cfg.phi_a;
    (m, phase)
}

/// Phase of path 1 relative to path 2:
/// `(α₁−α₂) + (β₂−β₁) + (φ_B−φ_A)`. The channel phase cancels.
pub fn phase_difference(cfg: &SystemConfig) -> f64 {
    (cfg.arm_a1.common_phase - cfg.arm_a2.common_phase)
        + (cfg.arm_b2.common_phase - cfg.arm_b1.common_phase)
        + (cfg.phi_b - cfg.phi_a)
}

/// Field at the monitored output: the coherent sum of both paths acting on
/// `E_in/4`.
pub fn output_field(cfg: &SystemConfig) -> JonesVector {
    let (m1, t1) = path1_transform(cfg);
    let (m2, t2) = path2_transform(cfg);
    let sum = m1.scale(Complex64::from_polar(1.0, t1)) + m2.scale(Complex64::from_polar(1.0, t2));
    sum.apply(&cfg.input_state.scale(PATH_AMPLITUDE.into()))
}

/// `M = A₁†·C†·B₂†·B₁·C·A₂`, the operator carrying all polarization
/// dependence of the fringe.
pub fn interference_operator(cfg: &SystemConfig) -> JonesMatrix {
    cfg.arm_a1.transport.adjoint()
        * cfg.channel.transport.adjoint()
        * cfg.arm_b2.transport.adjoint()
        * cfg.arm_b1.transport
        * cfg.channel.transport
        * cfg.arm_a2.transport
}

/// Output power in the expanded form
/// `P_in/8 + (1/16)·E_in†[M e^{−iΔ} + M† e^{iΔ}]E_in`
/// with `Δ` from [`phase_difference`]. Assumes unitary transports.
pub fn output_power(cfg: &SystemConfig) -> f64 {
    let e = &cfg.input_state;
    let overlap = e.inner(&interference_operator(cfg).apply(e));
    let rotated = overlap * Complex64::from_polar(1.0, -phase_difference(cfg));
    // The bracket is z + z̄ = 2·Re z.
    cfg.input_power() / 8.0 + rotated.re / 8.0
}

/// Power at the complementary detector, `P_in/4 − P_out`.
pub fn complementary_power(cfg: &SystemConfig) -> f64 {
    cfg.input_power() / 4.0 - output_power(cfg)
}

/// Fringe visibility from the interference operator: `|E†ME| / P_in`.
pub fn analytic_visibility(cfg: &SystemConfig) -> Result<f64> {
    let p = cfg.input_power();
    if p.is_nan() || p <= 0.0 {
        return Err(Error::ZeroInputPower);
    }
    let e = &cfg.input_state;
    let v = e.inner(&interference_operator(cfg).apply(e)).norm() / p;
    // Rounding can overshoot by an ulp or two.
    Ok(v.min(1.0))
}

/// Samples the fringe by stepping `φ_B` over `n` uniform points in `[0, 2π)`.
pub fn sweep_fringe(cfg: &SystemConfig, n: usize) -> Vec<FringeSample> {
    (0..n)
        .map(|k| {
            let phi_b = 2.0 * PI * k as f64 / n as f64;
            let c = cfg.with_phi_b(phi_b);
            FringeSample { delta_phi: phi_b - c.phi_a, power: output_power(&c) }
        })
        .collect()
}

/// Least-squares fit `P(x) = a + b·cos x + c·sin x` to samples taken at
/// uniform `x_k = 2πk/n`, which reduces to the first discrete Fourier
/// coefficients. Returns `(a, amplitude)`.
pub fn fit_fringe(powers: &[f64]) -> (f64, f64) {
    let n = powers.len() as f64;
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (k, p) in powers.iter().enumerate() {
        let (s, co) = (2.0 * PI * k as f64 / n).sin_cos();
        a += p;
        b += p * co;
        c += p * s;
    }
    (a / n, 2.0 * b.hypot(c) / n)
}

/// Visibility measured the way a bench does it: sweep `φ_B`, fit the
/// sinusoid, and take `(P_max − P_min)/(P_max + P_min)` of the fit.
pub fn sweep_visibility(cfg: &SystemConfig, n_samples: usize) -> Result<f64> {
    if n_samples < MIN_SWEEP_SAMPLES {
        return Err(Error::TooFewSamples { got: n_samples, min: MIN_SWEEP_SAMPLES });
    }
    let p = cfg.input_power();
    if p.is_nan() || p <= 0.0 {
        return Err(Error::ZeroInputPower);
    }
    let powers: Vec<f64> = sweep_fringe(cfg, n_samples).iter().map(|s| s.power).collect();
    let (mean, amplitude) = fit_fringe(&powers);
    let (p_max, p_min) = (mean + amplitude, mean - amplitude);
    Ok(((p_max - p_min) / (p_max + p_min)).min(1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StabilityReport {
    pub alice_ok: bool,
    pub bob_ok: bool,
}

impl StabilityReport {
    pub fn both(&self) -> bool {
        self.alice_ok && self.bob_ok
    }
}

/// Checks `A₁ = A₂` and `B₁ = B₂` in Frobenius norm. Global phase is not
/// factored out; common phases are carried separately.
pub fn check_stability_conditions(cfg: &SystemConfig, tol: f64) -> StabilityReport {
    StabilityReport {
        alice_ok: cfg.arm_a1.transport.frobenius_distance(&cfg.arm_a2.transport) <= tol,
        bob_ok: cfg.arm_b1.transport.frobenius_distance(&cfg.arm_b2.transport) <= tol,
    }
}

/// Error rate under the symmetric-error model, `(1 − V)/2`.
pub fn qber_from_visibility(v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::VisibilityOutOfRange(v));
    }
    Ok((1.0 - v) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jones::{haar_unitary, waveplate};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Independent triple product by explicit index loops.
    fn triple(x: &JonesMatrix, y: &JonesMatrix, z: &JonesMatrix) -> JonesMatrix {
        let to = |m: &JonesMatrix| [[m.m00, m.m01], [m.m10, m.m11]];
        let (x, y, z) = (to(x), to(y), to(z));
        let mut out = [[c(0.0, 0.0); 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out[i][j] += x[i][k] * y[k][l] * z[l][j];
                    }
                }
            }
        }
        JonesMatrix::new(out[0][0], out[0][1], out[1][0], out[1][1])
    }

    fn random_config(rng: &mut ChaCha8Rng) -> SystemConfig {
        let el = |rng: &mut ChaCha8Rng| {
            FiberElement::new(haar_unitary(rng), rng.random_range(-10.0..10.0), 1.0)
        };
        SystemConfig {
            arm_a1: el(rng),
            arm_a2: el(rng),
            arm_b1: el(rng),
            arm_b2: el(rng),
            channel: el(rng),
            phi_a: rng.random_range(0.0..2.0 * PI),
            phi_b: rng.random_range(0.0..2.0 * PI),
            input_state: JonesVector::new(
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ),
        }
    }

    #[test]
    fn identity_paths() {
        let cfg = SystemConfig::ideal();
        assert_eq!(path1_transform(&cfg), (JonesMatrix::IDENTITY, 0.0));
        assert_eq!(path2_transform(&cfg), (JonesMatrix::IDENTITY, 0.0));
    }

    #[test]
    fn path_phase_sums() {
        let mut cfg = SystemConfig::ideal();
        cfg.arm_a1.common_phase = 0.1;
        cfg.arm_b2.common_phase = 0.2;
        cfg.channel.common_phase = 0.3;
        cfg.phi_b = 0.4;
        assert_abs_diff_eq!(path1_transform(&cfg).1, 1.0, epsilon = 1e-15);

        let mut cfg = SystemConfig::ideal();
        cfg.arm_a2.common_phase = 0.5;
        cfg.arm_b1.common_phase = 0.25;
        cfg.channel.common_phase = 0.125;
        cfg.phi_a = 1.0;
        assert_abs_diff_eq!(path2_transform(&cfg).1, 1.875, epsilon = 1e-15);
    }

    #[test]
    fn paths_match_direct_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let cfg = random_config(&mut rng);
            let want1 = triple(&cfg.arm_b2.transport, &cfg.channel.transport, &cfg.arm_a1.transport);
            let want2 = triple(&cfg.arm_b1.transport, &cfg.channel.transport, &cfg.arm_a2.transport);
            assert!(path1_transform(&cfg).0.frobenius_distance(&want1) <= 1e-14);
            assert!(path2_transform(&cfg).0.frobenius_distance(&want2) <= 1e-14);
        }
    }

    #[test]
    fn constructive_and_destructive() {
        let cfg = SystemConfig::ideal();
        let out = output_field(&cfg);
        assert_abs_diff_eq!((out.a - c(0.5, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out.b.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(output_power(&cfg), 0.25, epsilon = 1e-15);

        let dark = cfg.with_phi_b(PI);
        assert!(output_field(&dark).power() <= 1e-30);
        assert_abs_diff_eq!(output_power(&dark), 0.0, epsilon = 1e-15);

        assert_abs_diff_eq!(output_power(&cfg.with_phi_b(PI / 2.0)), 0.125, epsilon = 1e-15);
    }

    #[test]
    fn expanded_power_matches_field_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..2000 {
            let cfg = random_config(&mut rng);
            let p_in = cfg.input_power();
            let f = output_field(&cfg);
            let by_field = f.a.norm_sqr() + f.b.norm_sqr();
            let p = output_power(&cfg);
            assert!((p - by_field).abs() <= 1e-12 * p_in);
            assert!(p >= -1e-15 && p <= p_in / 4.0 + 1e-15);
            assert_abs_diff_eq!(p + complementary_power(&cfg), p_in / 4.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn interference_operator_cases() {
        assert_eq!(interference_operator(&SystemConfig::ideal()), JonesMatrix::IDENTITY);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let mut cfg = random_config(&mut rng);
            cfg.arm_b2 = cfg.arm_b1;
            let m = interference_operator(&cfg);
            let expected = cfg.arm_a1.transport.adjoint() * cfg.arm_a2.transport;
            assert!(m.frobenius_distance(&expected) <= 1e-14);

            let cfg = random_config(&mut rng);
            let lhs = triple(
                &cfg.arm_a1.transport.adjoint(),
                &cfg.channel.transport.adjoint(),
                &cfg.arm_b2.transport.adjoint(),
            );
            let rhs = triple(&cfg.arm_b1.transport, &cfg.channel.transport, &cfg.arm_a2.transport);
            assert!(interference_operator(&cfg).frobenius_distance(&(lhs * rhs)) <= 1e-14);
        }
    }

    #[test]
    fn visibility_special_cases() {
        assert_abs_diff_eq!(analytic_visibility(&SystemConfig::ideal()).unwrap(), 1.0);
        assert_abs_diff_eq!(sweep_visibility(&SystemConfig::ideal(), 16).unwrap(), 1.0, epsilon = 1e-12);

        // M = diag(1, −1) via A₂ = diag(1, −1), everything else identity.
        let mut cfg = SystemConfig::ideal();
        cfg.arm_a2.transport = JonesMatrix::from_real(1.0, 0.0, 0.0, -1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        cfg.input_state = JonesVector::new(c(h, 0.0), c(h, 0.0));
        assert_abs_diff_eq!(analytic_visibility(&cfg).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn visibility_errors() {
        let mut cfg = SystemConfig::ideal();
        assert!(matches!(sweep_visibility(&cfg, 15), Err(Error::TooFewSamples { got: 15, .. })));
        cfg.input_state = JonesVector::new(c(0.0, 0.0), c(0.0, 0.0));
        assert!(matches!(analytic_visibility(&cfg), Err(Error::ZeroInputPower)));
        assert!(matches!(sweep_visibility(&cfg, 32), Err(Error::ZeroInputPower)));
    }

    #[test]
    fn sweep_matches_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let cfg = random_config(&mut rng);
            let a = analytic_visibility(&cfg).unwrap();
            let s = sweep_visibility(&cfg, 16).unwrap();
            assert!((a - s).abs() <= 1e-9, "{a} vs {s}");
        }
    }

    /// Brute-force extremes over a dense grid agree with the fitted ones.
    #[test]
    fn sweep_matches_dense_grid_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..20 {
            let cfg = random_config(&mut rng);
            let powers: Vec<f64> = (0..20_000)
                .map(|k| output_power(&cfg.with_phi_b(2.0 * PI * k as f64 / 20_000.0)))
                .collect();
            let max = powers.iter().cloned().fold(f64::MIN, f64::max);
            let min = powers.iter().cloned().fold(f64::MAX, f64::min);
            let dense = (max - min) / (max + min);
            assert!((dense - sweep_visibility(&cfg, 64).unwrap()).abs() <= 1e-6);
        }
    }

    #[test]
    fn matched_arms_give_unit_visibility_for_any_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let mut cfg = random_config(&mut rng);
            cfg.arm_a2.transport = cfg.arm_a1.transport;
            cfg.arm_b2.transport = cfg.arm_b1.transport;
            assert_abs_diff_eq!(sweep_visibility(&cfg, 16).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn phases_never_change_visibility() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let cfg = random_config(&mut rng);
            let v = analytic_visibility(&cfg).unwrap();
            let mut shifted = cfg;
            shifted.arm_a1.common_phase += rng.random_range(-5.0..5.0);
            shifted.arm_a2.common_phase += rng.random_range(-5.0..5.0);
            shifted.arm_b1.common_phase += rng.random_range(-5.0..5.0);
            shifted.arm_b2.common_phase += rng.random_range(-5.0..5.0);
            shifted.channel.common_phase += rng.random_range(-5.0..5.0);
            assert_abs_diff_eq!(analytic_visibility(&shifted).unwrap(), v, epsilon = 1e-13);
        }
    }

    #[test]
    fn stability_checks() {
        let r = check_stability_conditions(&SystemConfig::ideal(), DEFAULT_STABILITY_TOL);
        assert!(r.alice_ok && r.bob_ok);

        let mut cfg = SystemConfig::ideal();
        cfg.arm_a2.transport = waveplate(0.0, PI);
        assert_abs_diff_eq!(
            cfg.arm_a1.transport.frobenius_distance(&cfg.arm_a2.transport),
            2.0,
            epsilon = 1e-15
        );
        let r = check_stability_conditions(&cfg, DEFAULT_STABILITY_TOL);
        assert!(!r.alice_ok && r.bob_ok);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(&mut rng);
        let mut cfg = SystemConfig::ideal();
        cfg.arm_a1.transport = u;
        cfg.arm_a2.transport = u;
        assert!(check_stability_conditions(&cfg, DEFAULT_STABILITY_TOL).alice_ok);
    }

    #[test]
    fn qber() {
        assert_eq!(qber_from_visibility(1.0).unwrap(), 0.0);
        assert_eq!(qber_from_visibility(0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(qber_from_visibility(0.9).unwrap(), 0.05, epsilon = 1e-15);
        assert!(qber_from_visibility(1.01).is_err());
        assert!(qber_from_visibility(-0.1).is_err());
        assert!(qber_from_visibility(f64::NAN).is_err());
    }
}
