//! Single-qubit POVMs and the scalar parameters they induce on the
//! coarse-grained collective variable.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for algebraic identities on 2×2 matrices.
pub const MATRIX_TOL: f64 = 1e-12;

/// `|A_01|` at or below this is treated as exactly zero.
pub const DEGENERATE_OFF_DIAGONAL: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Complex 2×2 matrix, row-major. Entry `[i][j]` is `⟨i|M|j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const fn new(m00: Complex64, m01: Complex64, m10: Complex64, m11: Complex64) -> Self {
        Mat2([[m00, m01], [m10, m11]])
    }

    pub fn from_real(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Mat2::new(m00.into(), m01.into(), m10.into(), m11.into())
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn pauli_x() -> Self {
        Mat2::from_real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        Mat2::new(ZERO, Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0), ZERO)
    }

    pub fn pauli_z() -> Self {
        Mat2::from_real(1.0, 0.0, 0.0, -1.0)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, z: Complex64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * z, m[0][1] * z, m[1][0] * z, m[1][1] * z)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M^†|` over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        (*self - self.dagger()).max_abs()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = 0.5 * (self.0[0][1] + self.0[1][0].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(Complex64::new(s, 0.0))
    }
}

/// Validated single-qubit POVM with real outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    outcomes: Vec<f64>,
    effects: Vec<Mat2>,
}

impl Povm {
    /// Validates and builds a POVM. Checks run per effect (Hermiticity,
    /// then positivity), then outcome distinctness, then completeness.
    pub fn new(outcomes: Vec<f64>, effects: Vec<Mat2>) -> Result<Self> {
        if outcomes.len() != effects.len() {
            return Err(Error::InvalidInput(format!(
                "{} outcomes but {} effects",
                outcomes.len(),
                effects.len()
            )));
        }
        if outcomes.len() < 2 {
            return Err(Error::InvalidInput("a POVM needs at least two outcomes".into()));
        }
        for (index, (a, e)) in outcomes.iter().zip(&effects).enumerate() {
            if !a.is_finite() || !e.is_finite() {
                return Err(Error::InvalidInput(format!("non-finite entry in outcome {index}")));
            }
            let deviation = e.hermiticity_deviation();
            if deviation > MATRIX_TOL {
                return Err(Error::NotHermitian { index, deviation });
            }
            let min_eigenvalue = e.hermitian_eigenvalues()[0];
            if min_eigenvalue < -MATRIX_TOL {
                return Err(Error::NotPositive { index, min_eigenvalue });
            }
        }
        for (index, a) in outcomes.iter().enumerate() {
            if outcomes[..index].contains(a) {
                return Err(Error::DuplicateOutcome { index, value: *a });
            }
        }
        let total = effects.iter().fold(Mat2::zero(), |acc, e| acc + *e);
        let deviation = (total - Mat2::identity()).max_abs();
        if deviation > MATRIX_TOL {
            return Err(Error::NotComplete { index: effects.len() - 1, deviation });
        }
        Ok(Povm { outcomes, effects })
    }

    /// Projective ±1 spin measurement along the Bloch direction
    /// `(sin θ cos φ, sin θ sin φ, cos θ)`. Outcome `+1` is listed first.
    pub fn projective_from_bloch(theta: f64, phi_bloch: f64) -> Self {
        let n_dot_sigma = Mat2::new(
            theta.cos().into(),
            Complex64::from_polar(theta.sin(), -phi_bloch),
            Complex64::from_polar(theta.sin(), phi_bloch),
            (-theta.cos()).into(),
        );
        let plus = (Mat2::identity() + n_dot_sigma) * 0.5;
        let minus = (Mat2::identity() - n_dot_sigma) * 0.5;
        Povm { outcomes: vec![1.0, -1.0], effects: vec![plus, minus] }
    }

    pub fn sigma_x() -> Self {
        Self::projective_from_bloch(PI / 2.0, 0.0)
    }

    pub fn sigma_y() -> Self {
        Self::projective_from_bloch(PI / 2.0, PI / 2.0)
    }

    pub fn sigma_z() -> Self {
        Self::projective_from_bloch(0.0, 0.0)
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn effects(&self) -> &[Mat2] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &Mat2)> {
        self.outcomes.iter().copied().zip(&self.effects)
    }

    /// `Σ_a f(a) E_a`.
    pub fn weighted_sum(&self, mut f: impl FnMut(f64) -> Complex64) -> Mat2 {
        self.iter().fold(Mat2::zero(), |acc, (a, e)| acc + e.scale(f(a)))
    }

    /// Maps every effect through `f`, keeping the outcome labels.
    pub fn map_effects(&self, f: impl Fn(&Mat2) -> Mat2) -> Result<Self> {
        Povm::new(self.outcomes.clone(), self.effects.iter().map(f).collect())
    }

    /// Relabels outcomes `a -> u a + v`. Requires `u != 0`.
    pub fn relabel_affine(&self, u: f64, v: f64) -> Result<Self> {
        Povm::new(self.outcomes.iter().map(|a| u * a + v).collect(), self.effects.clone())
    }
}

/// Which Dicke family and centering convention the normalization follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlphaMode {
    /// `|N,k⟩` superpositions, `μ = A_00`, `φ = arg(-A_01)`.
    Half,
    /// `|2N,N+k⟩` superpositions, `μ = tr A / 2`, `φ = arg(A_01)`.
    One,
}

impl AlphaMode {
    pub fn exponent(self) -> f64 {
        match self {
            AlphaMode::Half => 0.5,
            AlphaMode::One => 1.0,
        }
    }
}

/// Scalars and matrices a POVM induces on the collective variable
/// `X = Σ_i (a_i - μ) / (τ N^α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// `Σ_a a E_a`
    pub a: Mat2,
    /// `Σ_a a² E_a`
    pub a2: Mat2,
    pub mu: f64,
    pub tau: f64,
    /// `A⁽²⁾_00 - A_00²`
    pub sigma2: f64,
    pub phi: f64,
    /// `σ²/τ² - 1`, the width of the limit Gaussian POVM squared.
    pub s2: f64,
    pub mode: AlphaMode,
}

fn moment_matrices(povm: &Povm) -> (Mat2, Mat2) {
    let a = povm.weighted_sum(|x| x.into());
    let a2 = povm.weighted_sum(|x| (x * x).into());
    (a, a2)
}

impl DerivedParams {
    pub fn derive(povm: &Povm, mode: AlphaMode) -> Result<Self> {
        let (a, _) = moment_matrices(povm);
        let tau = a.get(0, 1).norm();
        if tau <= DEGENERATE_OFF_DIAGONAL {
            return Err(Error::DegenerateOffDiagonal(tau));
        }
        let mu = match mode {
            AlphaMode::Half => a.get(0, 0).re,
            AlphaMode::One => 0.5 * a.trace().re,
        };
        Ok(Self::with_normalization(povm, mode, mu, tau))
    }

    /// Uses caller-supplied centering and scale. Needed for measurements with
    /// `A_01 = 0` (for which `φ` is reported as 0) and for the nonlinear,
    /// state-dependent centering.
    pub fn with_normalization(povm: &Povm, mode: AlphaMode, mu: f64, tau: f64) -> Self {
        let (a, a2) = moment_matrices(povm);
        let a00 = a.get(0, 0).re;
        let sigma2 = (a2.get(0, 0).re - a00 * a00).max(0.0);
        let a01 = a.get(0, 1);
        let phi = if a01.norm() <= DEGENERATE_OFF_DIAGONAL {
            0.0
        } else {
            let angle = match mode {
                AlphaMode::Half => (-a01).arg(),
                AlphaMode::One => a01.arg(),
            };
            // report in (-π, π]; a signed zero imaginary part would give -π
            if angle <= -std::f64::consts::PI { angle + 2.0 * std::f64::consts::PI } else { angle }
        };
        let s2 = (sigma2 / (tau * tau) - 1.0).max(0.0);
        DerivedParams { a, a2, mu, tau, sigma2, phi, s2, mode }
    }

    pub fn sigma_over_tau(&self) -> f64 {
        self.sigma2.sqrt() / self.tau
    }

    pub fn width(&self) -> f64 {
        self.s2.sqrt()
    }
}

pub fn validate_povm(outcomes: Vec<f64>, effects: Vec<Mat2>) -> Result<Povm> {
    Povm::new(outcomes, effects)
}

pub fn derive_params(povm: &Povm, mode: AlphaMode) -> Result<DerivedParams> {
    DerivedParams::derive(povm, mode)
}

pub fn projective_from_bloch(theta: f64, phi_bloch: f64) -> Povm {
    Povm::projective_from_bloch(theta, phi_bloch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_3;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn projector_pair_is_valid() {
        let sx = Mat2::pauli_x();
        let p = Povm::new(
            vec![1.0, -1.0],
            vec![(Mat2::identity() + sx) * 0.5, (Mat2::identity() - sx) * 0.5],
        );
        assert!(p.is_ok());
    }

    #[test]
    fn double_identity_is_incomplete() {
        let err = Povm::new(vec![1.0, -1.0], vec![Mat2::identity(), Mat2::identity()]).unwrap_err();
        assert!(matches!(err, Error::NotComplete { .. }), "{err:?}");
    }

    #[test]
    fn negative_effect_is_rejected_with_index() {
        let bad = Mat2::from_real(1.5, 0.0, 0.0, -0.5);
        let rest = Mat2::identity() - bad;
        let err = Povm::new(vec![1.0, -1.0], vec![rest, bad]).unwrap_err();
        match err {
            // `rest` = diag(-0.5, 1.5) fails first
            Error::NotPositive { index, min_eigenvalue } => {
                assert_eq!(index, 0);
                assert!(close(min_eigenvalue, -0.5, 1e-15));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_hermitian_and_duplicate() {
        let skew = Mat2::from_real(0.5, 0.2, 0.0, 0.5);
        let err = Povm::new(vec![1.0, -1.0], vec![skew, Mat2::identity() - skew]).unwrap_err();
        assert!(matches!(err, Error::NotHermitian { index: 0, .. }));

        let half = Mat2::identity() * 0.5;
        let err = Povm::new(vec![1.0, 1.0], vec![half, half]).unwrap_err();
        assert!(matches!(err, Error::DuplicateOutcome { index: 1, .. }));
    }

    #[test]
    fn bloch_constructor_hits_paulis() {
        let cases = [
            (PI / 2.0, 0.0, Mat2::pauli_x()),
            (0.0, 0.0, Mat2::pauli_z()),
            (PI / 2.0, PI / 2.0, Mat2::pauli_y()),
        ];
        for (theta, phi, pauli) in cases {
            let povm = projective_from_bloch(theta, phi);
            let a = povm.weighted_sum(|x| x.into());
            assert!((a - pauli).max_abs() < 1e-15);
            assert!(Povm::new(povm.outcomes().to_vec(), povm.effects().to_vec()).is_ok());
        }
    }

    #[test]
    fn sigma_x_params() {
        let p = derive_params(&Povm::sigma_x(), AlphaMode::Half).unwrap();
        assert!(close(p.mu, 0.0, 1e-15));
        assert!(close(p.tau, 1.0, 1e-15));
        assert!(close(p.sigma2, 1.0, 1e-15));
        assert!(close(p.s2, 0.0, 1e-15));
        assert!(close(p.phi, PI, 1e-15));
    }

    #[test]
    fn rotated_projective_params() {
        let p = derive_params(&projective_from_bloch(FRAC_PI_3, 0.0), AlphaMode::Half).unwrap();
        assert!(close(p.mu, 0.5, 1e-12));
        assert!(close(p.tau, 3f64.sqrt() / 2.0, 1e-12));
        assert!(close(p.sigma2, 0.75, 1e-12));
        assert!(close(p.s2, 0.0, 1e-10));
    }

    #[test]
    fn sigma_z_is_degenerate() {
        let err = derive_params(&Povm::sigma_z(), AlphaMode::Half).unwrap_err();
        assert!(matches!(err, Error::DegenerateOffDiagonal(_)));
    }

    #[test]
    fn one_mode_uses_half_trace_and_plain_arg() {
        let povm = projective_from_bloch(FRAC_PI_3, 0.4);
        let p = derive_params(&povm, AlphaMode::One).unwrap();
        assert!(close(p.mu, 0.0, 1e-12));
        // A_01 = sin θ e^{-iφ_bloch}
        assert!(close(p.phi, -0.4, 1e-12));
        let h = derive_params(&povm, AlphaMode::Half).unwrap();
        assert!(close(h.phi, PI - 0.4, 1e-12));
    }
}
