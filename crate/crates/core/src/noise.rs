//! Particle loss, single-particle channels and bounded classical noise.
//!
//! Loss and unital channels act on the single-particle POVM and therefore
//! only move the limit parameters `(s, φ)`. Classical noise `x → x + r`,
//! `|r| ≤ ε`, convolves the limit density.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use libm::erf;

use crate::bell::{optimize_chsh_with_tables, response_table, ResponseTable};
use crate::error::{Error, Result};
use crate::finite::{tensor_power_expectation, variable_scale, DickeSuperposition};
use crate::limit::{Domain, GridDensity};
use crate::numeric::{composite_gauss_legendre, interp_uniform_cubic, is_uniform, QuadratureRule};
use crate::operator::{DerivedParams, Mat2, Povm};

/// Widths `s²` above this are reported as divergent.
pub const DIVERGENCE_CAP: f64 = 1e12;

/// Shape of the bounded classical noise `r ∈ [-ε, ε]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseShape {
    #[default]
    Uniform,
    /// Gaussian of standard deviation `ε/2`, truncated to `[-ε, ε]`.
    TruncatedGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub loss_p: f64,
    pub depol_lambda: f64,
    pub dephase_lambda: f64,
    pub classical_eps: f64,
    pub classical_shape: NoiseShape,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec { loss_p: 1.0, depol_lambda: 0.0, dephase_lambda: 0.0, classical_eps: 0.0, classical_shape: NoiseShape::Uniform }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        check_p(self.loss_p)?;
        check_lambda(self.depol_lambda)?;
        check_lambda(self.dephase_lambda)?;
        if !(self.classical_eps >= 0.0) || !self.classical_eps.is_finite() {
            return Err(Error::InvalidInput(format!("noise bound {} must be finite and non-negative", self.classical_eps)));
        }
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidP(p));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("channel parameter {lambda} outside [0, 1]")));
    }
    Ok(())
}

fn check_width(s2: f64) -> Result<f64> {
    if !(s2 <= DIVERGENCE_CAP) {
        return Err(Error::Divergent(s2));
    }
    Ok(s2)
}

/// Loss-broadened width `s_p² = σ²/(p³τ²) - 1`, the closed form stated for
/// the lossy limit POVM.
///
/// Expanding `𝒜_p` to second order in `t` gives `σ²/(pτ²) - 1` instead; see
/// [`loss_width_received_count`], which is the width the finite-N lossy
/// statistics actually converge to.
pub fn loss_width(params: &DerivedParams, p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(params.s2);
    }
    check_width(params.sigma2 / (p * p * p * params.tau * params.tau) - 1.0)
}

/// `s_p² = σ²/(pτ²) - 1`: each received particle contributes
/// `(a - μ)/(pτ√N)`, so the linear term of `𝒜_p` is unchanged while the
/// quadratic term is divided by `p`.
pub fn loss_width_received_count(params: &DerivedParams, p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(params.s2);
    }
    check_width(params.sigma2 / (p * params.tau * params.tau) - 1.0)
}

/// `𝒜_p = Σ_a E_a (1 - p + p e^{it(a-μ)/(pτN^α)})`.
pub fn loss_char_operator(povm: &Povm, params: &DerivedParams, p: f64, scale: f64, t: f64) -> Mat2 {
    povm.weighted_sum(|a| {
        Complex64::new(1.0 - p, 0.0) + Complex64::from_polar(p, t * (a - params.mu) / (p * scale))
    })
}

/// Exact characteristic function of the loss-rescaled variable
/// `Σ_i o_i (a_i - μ) / (p τ N^α)`.
pub fn loss_char_fn_finite(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    p: f64,
    t: f64,
    alpha: f64,
) -> Result<Complex64> {
    check_p(p)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("coarse-graining level {alpha} outside [0, 1]")));
    }
    let scale = variable_scale(params, state.n_particles(), alpha);
    Ok(tensor_power_expectation(state, &loss_char_operator(povm, params, p, scale, t)))
}

/// POVM whose collective variable, with the same `(μ, τ)`, is the lossy one:
/// outcome `μ + (a - μ)/p` with effect `p E_a`, and a lost particle counted
/// as `μ` with effect `(1 - p) 1`.
pub fn lossy_povm(povm: &Povm, mu: f64, p: f64) -> Result<Povm> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(povm.clone());
    }
    let mut outcomes = Vec::with_capacity(povm.len() + 1);
    let mut effects: Vec<Mat2> = Vec::with_capacity(povm.len() + 1);
    let lost = Mat2::identity() * (1.0 - p);
    let mut merged = false;
    for (a, e) in povm.iter() {
        outcomes.push(mu + (a - mu) / p);
        if (a - mu).abs() <= 1e-12 * a.abs().max(1.0) {
            effects.push(*e * p + lost);
            merged = true;
        } else {
            effects.push(*e * p);
        }
    }
    if !merged {
        outcomes.push(mu);
        effects.push(lost);
    }
    Povm::new(outcomes, effects)
}

/// `Γ†(E) = (1-λ) E + (λ/2) tr(E) 1`.
pub fn depolarize_povm(povm: &Povm, lambda: f64) -> Result<Povm> {
    check_lambda(lambda)?;
    let out = povm.map_effects(|e| *e * (1.0 - lambda) + Mat2::identity() * (0.5 * lambda * e.trace().re));
    debug_assert!(out.is_ok());
    out
}

/// `Γ†(E) = (1-λ) E + λ Z E Z`.
pub fn dephase_povm(povm: &Povm, lambda: f64) -> Result<Povm> {
    check_lambda(lambda)?;
    let z = Mat2::pauli_z();
    let out = povm.map_effects(|e| *e * (1.0 - lambda) + (z * *e * z) * lambda);
    debug_assert!(out.is_ok());
    out
}

/// Limit parameters of a channel-transformed POVM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub sigma2: f64,
    pub tau: f64,
    pub s2: f64,
    pub phi: f64,
}

impl EffectiveParams {
    pub fn s(&self) -> f64 {
        self.s2.sqrt()
    }
}

/// Closed-form `(s′, φ′)` after depolarizing then dephasing every particle,
/// in the `α = 1/2` normalization of the transformed POVM.
///
/// Depolarizing maps `A → (1-λ)A + (λ/2) tr A`, so `τ → (1-λ)τ` and
/// `σ² → (1-λ)A⁽²⁾_00 + (λ/2) tr A⁽²⁾ - ((1-λ)A_00 + (λ/2) tr A)²`.
/// Dephasing keeps the diagonal and maps `A_01 → (1-2λ)A_01`, flipping `φ`
/// by `π` once `λ > 1/2`.
pub fn noisy_limit_params(povm: &Povm, noise: &NoiseSpec) -> Result<EffectiveParams> {
    noise.validate()?;
    let (ld, lp) = (noise.depol_lambda, noise.dephase_lambda);
    if ld == 1.0 {
        return Err(Error::SingularChannel(ld));
    }
    if lp == 0.5 {
        return Err(Error::SingularChannel(lp));
    }
    let a = povm.weighted_sum(|x| x.into());
    let a2 = povm.weighted_sum(|x| (x * x).into());
    let a01 = a.get(0, 1);
    if a01.norm() <= crate::operator::DEGENERATE_OFF_DIAGONAL {
        return Err(Error::DegenerateOffDiagonal(a01.norm()));
    }
    let (a00, a2_00) = (a.get(0, 0).re, a2.get(0, 0).re);
    let (tr_a, tr_a2) = (a.trace().re, a2.trace().re);
    let mean = (1.0 - ld) * a00 + 0.5 * ld * tr_a;
    let sigma2 = ((1.0 - ld) * a2_00 + 0.5 * ld * tr_a2 - mean * mean).max(0.0);
    let tau = (1.0 - ld) * (1.0 - 2.0 * lp).abs() * a01.norm();
    let mut phi = (-a01).arg();
    if lp > 0.5 {
        phi += PI;
    }
    phi = wrap_angle(phi);
    let s2 = check_width((sigma2 / (tau * tau) - 1.0).max(0.0))?;
    Ok(EffectiveParams { sigma2, tau, s2, phi })
}

fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Density of the bounded noise `r` on `[-ε, ε]`.
pub fn noise_density(shape: NoiseShape, eps: f64, r: f64) -> f64 {
    if r.abs() > eps {
        return 0.0;
    }
    match shape {
        NoiseShape::Uniform => 0.5 / eps,
        NoiseShape::TruncatedGaussian => {
            let sd = 0.5 * eps;
            let mass = erf(eps / (2f64.sqrt() * sd));
            (-0.5 * (r / sd).powi(2)).exp() / ((2.0 * PI).sqrt() * sd * mass)
        }
    }
}

fn noise_rule(eps: f64) -> QuadratureRule {
    composite_gauss_legendre(-eps, eps, 16, 16)
}

/// `P(x) → ∫ P(x - r) ρ(r) dr` on the grid widened by `ε` on both sides.
/// Requires a uniform real-line grid; values between nodes use 4-point
/// Lagrange interpolation and vanish outside the original grid.
pub fn convolve_classical_noise(density: &GridDensity, eps: f64, shape: NoiseShape) -> Result<GridDensity> {
    if density.domain != Domain::RealLine {
        return Err(Error::InvalidInput("classical noise applies to real-line densities".into()));
    }
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidInput(format!("noise bound {eps} must be finite and non-negative")));
    }
    if eps == 0.0 {
        return Ok(density.clone());
    }
    if !is_uniform(&density.grid) {
        return Err(Error::InvalidInput("classical noise convolution needs a uniform grid".into()));
    }
    let h = density.grid[1] - density.grid[0];
    let pad = (eps / h).ceil() as usize;
    let x0 = density.grid[0] - pad as f64 * h;
    let n = density.grid.len() + 2 * pad;
    let grid: Vec<f64> = (0..n).map(|i| x0 + i as f64 * h).collect();
    let rule = noise_rule(eps);
    let (lo, hi) = (density.grid[0], density.grid[density.grid.len() - 1]);
    let out: Vec<f64> = grid
        .par_iter()
        .map(|&x| {
            rule.integrate(|r| {
                let at = x - r;
                if at < lo || at > hi {
                    0.0
                } else {
                    noise_density(shape, eps, r) * interp_uniform_cubic(lo, h, &density.density, at).max(0.0)
                }
            })
        })
        .collect();
    GridDensity::new(grid, out, Domain::RealLine)
}

/// `E[sgn(x + n + r)]` for Gaussian smearing `n` of width `s` and bounded
/// noise `r`: the response of a sign-binned detector to a quadrature value `x`.
pub fn noisy_sign_response(x: f64, s: f64, eps: f64, shape: NoiseShape) -> f64 {
    let sq2 = 2f64.sqrt();
    if eps == 0.0 {
        return if s == 0.0 { x.signum() * (x != 0.0) as i32 as f64 } else { erf(x / (sq2 * s)) };
    }
    match (shape, s == 0.0) {
        (NoiseShape::Uniform, true) => (x / eps).clamp(-1.0, 1.0),
        (NoiseShape::Uniform, false) => {
            // antiderivative of erf(u/(√2 s))
            let big_f = |u: f64| u * erf(u / (sq2 * s)) + s * (2.0 / PI).sqrt() * (-0.5 * (u / s).powi(2)).exp();
            (big_f(x + eps) - big_f(x - eps)) / (2.0 * eps)
        }
        (NoiseShape::TruncatedGaussian, true) => {
            if x.abs() >= eps {
                x.signum()
            } else {
                let sd = 0.5 * eps;
                erf(x / (sq2 * sd)) / erf(eps / (sq2 * sd))
            }
        }
        (NoiseShape::TruncatedGaussian, false) => {
            noise_rule(eps).integrate(|r| noise_density(shape, eps, r) * erf((x + r) / (sq2 * s)))
        }
    }
}

/// Response table for [`noisy_sign_response`].
pub fn noisy_sign_table(k_max: usize, s: f64, eps: f64, shape: NoiseShape) -> ResponseTable {
    let mut cuts = vec![eps];
    if s > 0.0 {
        cuts.extend([s, 4.0 * s, 10.0 * s, eps + 4.0 * s]);
    }
    response_table(k_max, |x| noisy_sign_response(x, s, eps, shape), &cuts, 20)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub s: f64,
    pub eps: f64,
    pub chsh: f64,
    pub angles: [f64; 4],
}

/// CHSH over a `(s, ε)` grid, both parties with the same smearing and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySweep {
    /// Row-major: `ε` is the slow index.
    pub cells: Vec<SweepCell>,
    /// Per `ε`, the smallest `s` on the grid where CHSH falls to 2, linearly
    /// interpolated; `None` if the row never crosses.
    pub contour: Vec<(f64, Option<f64>)>,
    /// Whether CHSH is non-increasing in `s` along every row.
    pub monotone_in_s: bool,
}

/// CHSH of the sign-binned noisy detectors per cell. With `angles = None`
/// each cell is re-optimized; otherwise the fixed settings are used.
pub fn noisy_chsh_sweep(
    coeffs: &[Complex64],
    s_grid: &[f64],
    eps_grid: &[f64],
    shape: NoiseShape,
    angles: Option<[f64; 4]>,
) -> Result<NoisySweep> {
    crate::limit::check_coeffs(coeffs)?;
    if s_grid.iter().chain(eps_grid).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("sweep grids must be finite and non-negative".into()));
    }
    let k_max = coeffs.len() - 1;
    let cells: Vec<SweepCell> = eps_grid
        .iter()
        .flat_map(|&eps| s_grid.iter().map(move |&s| (s, eps)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(s, eps)| {
            let table = noisy_sign_table(k_max, s, eps, shape);
            let (angles, chsh) = match angles {
                Some(a) => (a, crate::bell::chsh_with_tables(coeffs, &a, &table, &table)),
                None => {
                    let opt = optimize_chsh_with_tables(coeffs, &table, &table);
                    (opt.angles, opt.value)
                }
            };
            SweepCell { s, eps, chsh, angles }
        })
        .collect();
    let ns = s_grid.len();
    let mut contour = Vec::with_capacity(eps_grid.len());
    let mut monotone_in_s = true;
    for (row, &eps) in eps_grid.iter().enumerate() {
        let r = &cells[row * ns..(row + 1) * ns];
        monotone_in_s &= r.windows(2).all(|w| w[1].s < w[0].s || w[1].chsh <= w[0].chsh + 1e-9);
        let crossing = r.windows(2).find(|w| w[0].chsh > 2.0 && w[1].chsh <= 2.0).map(|w| {
            let f = (w[0].chsh - 2.0) / (w[0].chsh - w[1].chsh);
            w[0].s + f * (w[1].s - w[0].s)
        });
        contour.push((eps, crossing));
    }
    Ok(NoisySweep { cells, contour, monotone_in_s })
}
