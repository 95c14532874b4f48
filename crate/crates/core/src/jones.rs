//! Jones calculus on two-component fields.
//!
//! Only the fixed 2x2 case is needed, so the arithmetic is written out by
//! hand instead of going through a general linear-algebra crate.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default tolerance on `‖M†M − I‖_F` for a matrix to count as unitary.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Number of composed factors after which an accumulated product is
/// projected back onto U(2).
pub const REUNITARIZE_EVERY: usize = 1000;

/// Unitarity defect that forces an early projection.
pub const REUNITARIZE_TRIGGER: f64 = 1e-9;

/// Both singular values below this mean the matrix carries no usable state.
const SINGULAR_THRESHOLD: f64 = 1e-6;

/// Transverse field amplitude `(a, b)` in the horizontal/vertical basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesVector {
    pub a: Complex64,
    pub b: Complex64,
}

impl JonesVector {
    pub const fn new(a: Complex64, b: Complex64) -> Self {
        Self { a, b }
    }

    /// Unit-power linear horizontal polarization.
    pub const fn horizontal() -> Self {
        Self::new(ONE, ZERO)
    }

    pub const fn vertical() -> Self {
        Self::new(ZERO, ONE)
    }

    /// `|a|² + |b|²`, with no normalization applied.
    pub fn power(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// Hermitian inner product `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.a.conj() * other.a + self.b.conj() * other.b
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self::new(self.a * k, self.b * k)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }
}

impl Add for JonesVector {
    type Output = JonesVector;

    fn add(self, rhs: JonesVector) -> JonesVector {
        JonesVector::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl fmt::Display for JonesVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.a, self.b)
    }
}

/// 2x2 complex Jones matrix, stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JonesMatrix {
    pub m00: Complex64,
    pub m01: Complex64,
    pub m10: Complex64,
    pub m11: Complex64,
}

impl JonesMatrix {
    pub const IDENTITY: JonesMatrix = JonesMatrix::new(ONE, ZERO, ZERO, ONE);

    pub const ZERO: JonesMatrix = JonesMatrix::new(ZERO, ZERO, ZERO, ZERO);

    pub const fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Self { m00, m01, m10, m11 }
    }

    pub fn from_real(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self::new(m00.into(), m01.into(), m10.into(), m11.into())
    }

    pub fn diag(d0: Complex64, d1: Complex64) -> Self {
        Self::new(d0, ZERO, ZERO, d1)
    }

    /// Real rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_real(c, -s, s, c)
    }

    /// Matrix product `self · rhs`.
    pub fn mat_mul(&self, rhs: &JonesMatrix) -> JonesMatrix {
        JonesMatrix::new(
            self.m00 * rhs.m00 + self.m01 * rhs.m10,
            self.m00 * rhs.m01 + self.m01 * rhs.m11,
            self.m10 * rhs.m00 + self.m11 * rhs.m10,
            self.m10 * rhs.m01 + self.m11 * rhs.m11,
        )
    }

    pub fn apply(&self, v: &JonesVector) -> JonesVector {
        JonesVector::new(
            self.m00 * v.a + self.m01 * v.b,
            self.m10 * v.a + self.m11 * v.b,
        )
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> JonesMatrix {
        JonesMatrix::new(
            self.m00.conj(),
            self.m10.conj(),
            self.m01.conj(),
            self.m11.conj(),
        )
    }

    pub fn scale(&self, k: Complex64) -> JonesMatrix {
        JonesMatrix::new(self.m00 * k, self.m01 * k, self.m10 * k, self.m11 * k)
    }

    pub fn det(&self) -> Complex64 {
        self.m00 * self.m11 - self.m01 * self.m10
    }

    pub fn trace(&self) -> Complex64 {
        self.m00 + self.m11
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.m00.norm_sqr() + self.m01.norm_sqr() + self.m10.norm_sqr() + self.m11.norm_sqr())
            .sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn frobenius_distance(&self, other: &JonesMatrix) -> f64 {
        (*self - *other).frobenius_norm()
    }

    /// `‖M†M − I‖_F`; zero for an exactly unitary matrix.
    pub fn unitarity_defect(&self) -> f64 {
        self.adjoint()
            .mat_mul(self)
            .frobenius_distance(&JonesMatrix::IDENTITY)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.m00.is_finite() && self.m01.is_finite() && self.m10.is_finite() && self.m11.is_finite()
    }

    /// Nearest unitary matrix in Frobenius norm (the unitary polar factor).
    ///
    /// With `M = UΣV†`, the 2x2 identity `M + e^{i arg det M}·adj(M)† =
    /// (σ₁+σ₂)·UV†` gives the polar factor without an explicit SVD.
    pub fn reunitarize(&self) -> Result<JonesMatrix> {
        let det = self.det();
        let phase = if det.norm() > 0.0 {
            det / det.norm()
        } else {
            ONE
        };
        // adj(M)† for [[a, b], [c, d]] is [[d*, -c*], [-b*, a*]].
        let cofactor = JonesMatrix::new(
            self.m11.conj(),
            -self.m10.conj(),
            -self.m01.conj(),
            self.m00.conj(),
        );
        let sum = *self + cofactor.scale(phase);
        // ‖(σ₁+σ₂)·UV†‖_F = √2·(σ₁+σ₂).
        let sv_sum = sum.frobenius_norm() / std::f64::consts::SQRT_2;
        let sv_product = det.norm();
        // σ₁,₂ are the roots of x² − (σ₁+σ₂)x + σ₁σ₂.
        let disc = (sv_sum * sv_sum - 4.0 * sv_product).max(0.0).sqrt();
        let sv_max = 0.5 * (sv_sum + disc);
        if !sv_sum.is_finite() || sv_max < SINGULAR_THRESHOLD {
            return Err(Error::SingularMatrix { largest_singular_value: sv_max });
        }
        Ok(sum.scale(Complex64::new(1.0 / sv_sum, 0.0)))
    }
}

impl Mul for JonesMatrix {
    type Output = JonesMatrix;

    fn mul(self, rhs: JonesMatrix) -> JonesMatrix {
        self.mat_mul(&rhs)
    }
}

impl Mul<JonesVector> for JonesMatrix {
    type Output = JonesVector;

    fn mul(self, rhs: JonesVector) -> JonesVector {
        self.apply(&rhs)
    }
}

impl Add for JonesMatrix {
    type Output = JonesMatrix;

    fn add(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix::new(
            self.m00 + rhs.m00,
            self.m01 + rhs.m01,
            self.m10 + rhs.m10,
            self.m11 + rhs.m11,
        )
    }
}

impl Sub for JonesMatrix {
    type Output = JonesMatrix;

    fn sub(self, rhs: JonesMatrix) -> JonesMatrix {
        JonesMatrix::new(
            self.m00 - rhs.m00,
            self.m01 - rhs.m01,
            self.m10 - rhs.m10,
            self.m11 - rhs.m11,
        )
    }
}

impl Default for JonesMatrix {
    fn default() -> Self {
        JonesMatrix::IDENTITY
    }
}

/// Linear retarder with retardance `delta` about a fast axis at `theta`:
/// `R(θ)·diag(e^{iδ/2}, e^{−iδ/2})·R(−θ)`.
pub fn waveplate(theta: f64, delta: f64) -> JonesMatrix {
    let (s2, c2) = (2.0 * theta).sin_cos();
    let (sh, ch) = (0.5 * delta).sin_cos();
    let off = Complex64::new(0.0, s2 * sh);
    JonesMatrix::new(
        Complex64::new(ch, c2 * sh),
        off,
        off,
        Complex64::new(ch, -c2 * sh),
    )
}

/// Draws a matrix from the Haar measure on U(2).
///
/// A normalized real Gaussian 4-vector is uniform on S³, which gives a
/// Haar-distributed SU(2) element; an independent uniform global phase
/// extends it to U(2).
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R) -> JonesMatrix {
    let q: [f64; 4] = loop {
        let q: [f64; 4] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2: f64 = q.iter().map(|x| x * x).sum();
        if n2 > 1e-300 {
            let n = n2.sqrt();
            break [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
        }
    };
    let alpha = Complex64::new(q[0], q[1]);
    let beta = Complex64::new(q[2], q[3]);
    let su2 = JonesMatrix::new(alpha, -beta.conj(), beta, alpha.conj());
    let phase = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
    su2.scale(phase)
}

/// Running product of unitary factors that projects back onto U(2) every
/// [`REUNITARIZE_EVERY`] factors, and on [`finish`](Self::finish) if the
/// defect exceeds [`REUNITARIZE_TRIGGER`].
///
/// Factors are applied in propagation order: after pushing `F₁, F₂, …` the
/// product is `… F₂·F₁`.
#[derive(Clone, Debug)]
pub struct UnitaryAccumulator {
    product: JonesMatrix,
    since_projection: usize,
}

impl UnitaryAccumulator {
    pub fn new() -> Self {
        Self { product: JonesMatrix::IDENTITY, since_projection: 0 }
    }

    pub fn push(&mut self, factor: &JonesMatrix) -> Result<()> {
        self.product = factor.mat_mul(&self.product);
        self.since_projection += 1;
        if self.since_projection >= REUNITARIZE_EVERY {
            self.project()?;
        }
        Ok(())
    }

    fn project(&mut self) -> Result<()> {
        self.product = self.product.reunitarize()?;
        self.since_projection = 0;
        Ok(())
    }

    /// Returns the product, projecting first if its defect exceeds the
    /// trigger.
    pub fn finish(mut self) -> Result<JonesMatrix> {
        if self.product.unitarity_defect() > REUNITARIZE_TRIGGER {
            self.project()?;
        }
        Ok(self.product)
    }

    pub fn product(&self) -> JonesMatrix {
        self.product
    }
}

impl Default for UnitaryAccumulator {
    fn default() -> Self {
        Self::new()
    }
}
