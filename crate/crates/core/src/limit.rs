//! Limit laws of the collective variable.
//!
//! At `α = 1/2` the variable on `Σ_k c_k |N,k⟩` converges to a quadrature of
//! a harmonic oscillator in the state `Σ_k c_k |k⟩`, optionally smeared by a
//! Gaussian of width `s`. At `α = 1` it converges to the angle of a quantum
//! rotor on `θ ∈ [0, π]`.
//!
//! Hermite polynomials use the probabilists' convention
//! `H_k(x) = (-1)^k e^{x²/2} dᵏ/dxᵏ e^{-x²/2}`, and oscillator wavefunctions are
//! `⟨x|k⟩ = (2π)^{-1/4} (k!)^{-1/2} e^{-x²/4} H_k(x)`, so that `⟨0|x̂²|0⟩ = 1`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::finite::NORM_TOL;
use crate::numeric::{
    factorial, gauss_hermite, is_uniform, linspace, simpson, trapezoid, ComplexKahan, KahanSum,
    QuadratureRule,
};

/// Gauss–Hermite order used for oscillator smearing integrals.
pub const SMEARING_NODES: usize = 200;
/// Largest density allowed at either end of a real-line grid.
pub const BOUNDARY_TOL: f64 = 1e-10;

pub(crate) fn smearing_rule() -> &'static QuadratureRule {
    static RULE: OnceLock<QuadratureRule> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(SMEARING_NODES))
}

/// Probabilists' Hermite polynomial via `H_{k+1} = x H_k - k H_{k-1}`.
pub fn hermite(k: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    match k {
        0 => h0,
        1 => h1,
        _ => {
            for j in 1..k {
                let h2 = x * h1 - j as f64 * h0;
                h0 = h1;
                h1 = h2;
            }
            h1
        }
    }
}

/// `H_n(x)/n!`, which equals Nielsen's generalized Hermite polynomial
/// `H_n(x, 1/2)`. Stable for large `n` where `H_n` alone overflows.
pub(crate) fn hermite_over_factorial(n: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if n == 0 {
        return h0;
    }
    for j in 1..n {
        let h2 = (x * h1 - h0) / (j as f64 + 1.0);
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// `⟨x|k⟩`, by the normalized recurrence
/// `ψ_{k+1} = (x ψ_k - √k ψ_{k-1}) / √(k+1)`.
pub fn oscillator_wavefunction(k: usize, x: f64) -> f64 {
    let mut out = [0.0];
    oscillator_wavefunctions_into(x, &mut out, k);
    out[0]
}

/// `⟨x|0⟩ … ⟨x|k_max⟩`.
pub fn oscillator_wavefunctions(k_max: usize, x: f64) -> Vec<f64> {
    let mut psi = vec![0.0; k_max + 1];
    let g = (2.0 * PI).powf(-0.25) * (-0.25 * x * x).exp();
    psi[0] = g;
    if k_max >= 1 {
        psi[1] = x * g;
    }
    for k in 1..k_max {
        psi[k + 1] = (x * psi[k] - (k as f64).sqrt() * psi[k - 1]) / (k as f64 + 1.0).sqrt();
    }
    psi
}

fn oscillator_wavefunctions_into(x: f64, out: &mut [f64; 1], k: usize) {
    out[0] = oscillator_wavefunctions(k, x)[k];
}

/// Which manifold a sampled density lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    RealLine,
    RotorHalfCircle,
}

/// A probability density sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub domain: Domain,
}

impl GridDensity {
    pub fn new(grid: Vec<f64>, density: Vec<f64>, domain: Domain) -> Result<Self> {
        if grid.len() != density.len() || grid.len() < 3 {
            return Err(Error::InvalidInput("grid and density must match, with at least 3 points".into()));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput("grid must be strictly increasing".into()));
        }
        Ok(GridDensity { grid, density, domain })
    }

    /// `∫ f(x) P(x) dx`: composite Simpson on uniform grids, trapezoid otherwise.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let y: Vec<f64> = self.grid.iter().zip(&self.density).map(|(&x, &p)| f(x) * p).collect();
        if is_uniform(&self.grid) {
            simpson(&y, self.grid[1] - self.grid[0])
        } else {
            trapezoid(&self.grid, &y)
        }
    }

    pub fn integral(&self) -> f64 {
        self.expectation(|_| 1.0)
    }

    pub fn moment(&self, j: i32) -> f64 {
        self.expectation(|x| x.powi(j))
    }

    pub fn trapezoid_integral(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn spacing(&self) -> f64 {
        (self.grid[self.grid.len() - 1] - self.grid[0]) / (self.grid.len() - 1) as f64
    }

    /// Tabulated CDF; see [`GridCdf`].
    pub fn cdf_table(&self) -> GridCdf {
        GridCdf::from_density(self)
    }
}

/// Cumulative integral of a [`GridDensity`], normalized to end at 1 and
/// evaluated by linear interpolation (0 below, 1 above the grid).
#[derive(Debug, Clone)]
pub struct GridCdf {
    grid: Vec<f64>,
    cumulative: Vec<f64>,
}

impl GridCdf {
    pub fn from_density(d: &GridDensity) -> Self {
        // Cumulative Simpson on pairs of intervals with a trapezoid-corrected
        // midpoint keeps the table accurate to O(h⁴) at even nodes.
        let n = d.grid.len();
        let mut cumulative = vec![0.0; n];
        let mut acc = KahanSum::new();
        for i in 1..n {
            let h = d.grid[i] - d.grid[i - 1];
            let (a, b) = (d.density[i - 1], d.density[i]);
            // trapezoid with an end correction from neighbouring slopes
            let corr = if i >= 2 && i + 1 < n {
                let d0 = (b - d.density[i - 2]) / (d.grid[i] - d.grid[i - 2]);
                let d1 = (d.density[i + 1] - a) / (d.grid[i + 1] - d.grid[i - 1]);
                -h * h / 12.0 * (d1 - d0)
            } else {
                0.0
            };
            acc.add(0.5 * h * (a + b) + corr);
            cumulative[i] = acc.value();
        }
        let total = cumulative[n - 1];
        if total > 0.0 {
            cumulative.iter_mut().for_each(|c| *c /= total);
        }
        GridCdf { grid: d.grid.clone(), cumulative }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= self.grid[self.grid.len() - 1] {
            return 1.0;
        }
        crate::numeric::interp_linear(&self.grid, &self.cumulative, x)
    }
}

/// Oscillator state `Σ_k c_k |k⟩` with the phase `φ` and width `s` of the
/// limit POVM it is measured with.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitState {
    pub coeffs: Vec<Complex64>,
    pub phi: f64,
    pub width: f64,
}

impl LimitState {
    pub fn new(coeffs: Vec<Complex64>, phi: f64, width: f64) -> Result<Self> {
        check_coeffs(&coeffs)?;
        if !(width >= 0.0) || !width.is_finite() {
            return Err(Error::InvalidInput(format!("width {width} must be finite and non-negative")));
        }
        Ok(LimitState { coeffs, phi, width })
    }

    pub fn number_state(k: usize, phi: f64, width: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); k + 1];
        coeffs[k] = Complex64::new(1.0, 0.0);
        LimitState { coeffs, phi, width }
    }

    pub fn k_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients `c_l e^{il(φ+π)}` of the measured amplitude; see
    /// [`limit_density_alpha_half`] for the angle convention.
    fn rotated(&self) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c * Complex64::from_polar(1.0, l as f64 * (self.phi + PI)))
            .collect()
    }
}

pub(crate) fn check_coeffs(coeffs: &[Complex64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("empty coefficient vector".into()));
    }
    let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidInput(format!("coefficients have squared norm {norm}")));
    }
    Ok(())
}

/// Default real-line grid `[-12-2k, 12+2k]` with 4001 points.
pub fn default_grid(k_max: usize) -> Vec<f64> {
    let half = 12.0 + 2.0 * k_max as f64;
    linspace(-half, half, 4001)
}

/// Default rotor grid `[0, π]` with 2001 points.
pub fn default_theta_grid() -> Vec<f64> {
    linspace(0.0, PI, 2001)
}

fn amplitude(rotated: &[Complex64], x: f64) -> Complex64 {
    let psi = oscillator_wavefunctions(rotated.len() - 1, x);
    let mut acc = ComplexKahan::new();
    for (c, p) in rotated.iter().zip(&psi) {
        acc.add(c * p);
    }
    acc.value()
}

/// Born density of the unsmeared quadrature at a single point.
pub fn born_density_at(state: &LimitState, x: f64) -> f64 {
    amplitude(&state.rotated(), x).norm_sqr()
}

fn density_at(rotated: &[Complex64], width: f64, x: f64) -> f64 {
    if width == 0.0 {
        return amplitude(rotated, x).norm_sqr();
    }
    let rule = smearing_rule();
    let shift = 2f64.sqrt() * width;
    let mut acc = KahanSum::new();
    for (u, w) in rule.nodes.iter().zip(&rule.weights) {
        acc.add(w * amplitude(rotated, x + shift * u).norm_sqr());
    }
    acc.value() / PI.sqrt()
}

/// Limit density at `α = 1/2`:
/// `P(x) = ∫ G_s(x - x') |Σ_l c_l e^{il(φ+π)} ⟨x'|l⟩|² dx'`.
///
/// The quadrature angle is `φ + π`. With `φ = arg(-A_01)` that is `arg(A_01)`,
/// the orientation for which this density is the Fourier transform of
/// [`limit_charfn_alpha_half`] and therefore of the finite-N law `E[e^{itX}]`.
/// Smearing uses Gauss–Hermite quadrature with [`SMEARING_NODES`] nodes.
pub fn limit_density_alpha_half(state: &LimitState, grid: &[f64]) -> Result<GridDensity> {
    let rotated = state.rotated();
    let density: Vec<f64> = grid.iter().map(|&x| density_at(&rotated, state.width, x)).collect();
    check_boundary(&density)?;
    GridDensity::new(grid.to_vec(), density, Domain::RealLine)
}

pub(crate) fn check_boundary(density: &[f64]) -> Result<()> {
    let boundary = density[0].max(density[density.len() - 1]);
    if boundary > BOUNDARY_TOL {
        return Err(Error::GridTooNarrow { boundary });
    }
    Ok(())
}

/// The same density via the closed Hermite-series form obtained from the
/// characteristic function, with `r = σ/τ = √(1+s²)`:
/// `P(x) = Σ_{kl} c̃_k* c̃_l G_r(x) Σ_q √(k!l!)/(q!(k-q)!(l-q)!) r^{-(k+l-2q)} H_{k+l-2q}(x/r)`.
pub fn limit_density_alpha_half_series(state: &LimitState, grid: &[f64]) -> Result<GridDensity> {
    let rotated = state.rotated();
    let r = (1.0 + state.width * state.width).sqrt();
    let density = grid
        .iter()
        .map(|&x| {
            let gauss = (-0.5 * (x / r).powi(2)).exp() / ((2.0 * PI).sqrt() * r);
            let mut acc = ComplexKahan::new();
            for (k, ck) in rotated.iter().enumerate() {
                for (l, cl) in rotated.iter().enumerate() {
                    let coef = ck.conj() * cl;
                    if coef == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let norm = (factorial(k as u32) * factorial(l as u32)).sqrt();
                    let mut s = KahanSum::new();
                    for q in 0..=k.min(l) {
                        let order = k + l - 2 * q;
                        // H_order/(k-q)!(l-q)! = C(order, l-q) H_order/order!
                        let binom = factorial(order as u32)
                            / (factorial((k - q) as u32) * factorial((l - q) as u32));
                        s.add(binom / factorial(q as u32) * r.powi(-(order as i32))
                            * hermite_over_factorial(order, x / r));
                    }
                    acc.add(coef * norm * s.value());
                }
            }
            acc.value().re * gauss
        })
        .collect::<Vec<_>>();
    check_boundary(&density)?;
    GridDensity::new(grid.to_vec(), density, Domain::RealLine)
}

/// Limit characteristic function
/// `χ(t) = Σ_{kl} e^{-ikφ} c_k* c_l e^{ilφ} e^{-t²r²/2} Σ_q √(k!l!)/(q!(k-q)!(l-q)!) (-it)^{k+l-2q}`
/// with `r = σ/τ ≥ 1`.
pub fn limit_charfn_alpha_half(state: &LimitState, sigma_over_tau: f64, t: f64) -> Result<Complex64> {
    if !(sigma_over_tau >= 1.0 - 1e-12) {
        return Err(Error::InvalidInput(format!("sigma/tau = {sigma_over_tau} is below 1")));
    }
    let minus_it = Complex64::new(0.0, -t);
    let mut acc = ComplexKahan::new();
    for (k, ck) in state.coeffs.iter().enumerate() {
        for (l, cl) in state.coeffs.iter().enumerate() {
            let phase = Complex64::from_polar(1.0, (l as f64 - k as f64) * state.phi);
            let coef = ck.conj() * cl * phase;
            if coef == Complex64::new(0.0, 0.0) {
                continue;
            }
            let norm = (factorial(k as u32) * factorial(l as u32)).sqrt();
            let mut poly = ComplexKahan::new();
            for q in 0..=k.min(l) {
                let denom = factorial(q as u32) * factorial((k - q) as u32) * factorial((l - q) as u32);
                poly.add(minus_it.powu((k + l - 2 * q) as u32) * (norm / denom));
            }
            acc.add(coef * poly.value());
        }
    }
    Ok(acc.value() * (-0.5 * t * t * sigma_over_tau * sigma_over_tau).exp())
}

/// Rotor density at a single angle:
/// `P(θ) = (|Σ_l c_l e^{il(φ+θ)}|² + |Σ_l c_l e^{il(φ-θ)}|²) / 2π`.
pub fn rotor_density_at(coeffs: &[Complex64], phi: f64, theta: f64) -> f64 {
    let f = |u: f64| {
        let mut acc = ComplexKahan::new();
        for (l, c) in coeffs.iter().enumerate() {
            acc.add(c * Complex64::from_polar(1.0, l as f64 * u));
        }
        acc.value().norm_sqr()
    };
    (f(phi + theta) + f(phi - theta)) / (2.0 * PI)
}

/// Limit density at `α = 1` on `θ ∈ [0, π]`, evaluated term by term from
/// `Σ_{kl} e^{-ikφ} c_k* c_l e^{ilφ} (e^{-i(k-l)θ} + e^{i(k-l)θ}) / 2π`.
pub fn limit_density_alpha_one(coeffs: &[Complex64], phi: f64, theta_grid: &[f64]) -> Result<GridDensity> {
    check_coeffs(coeffs)?;
    if theta_grid.iter().any(|t| !(0.0..=PI + 1e-12).contains(t)) {
        return Err(Error::InvalidInput("rotor grid must lie in [0, pi]".into()));
    }
    let mut density = Vec::with_capacity(theta_grid.len());
    for (index, &theta) in theta_grid.iter().enumerate() {
        let mut acc = KahanSum::new();
        for (k, ck) in coeffs.iter().enumerate() {
            for (l, cl) in coeffs.iter().enumerate() {
                let d = k as f64 - l as f64;
                let phase = Complex64::from_polar(1.0, -d * phi);
                let kernel = 2.0 * (d * theta).cos();
                acc.add((ck.conj() * cl * phase).re * kernel);
            }
        }
        let value = acc.value() / (2.0 * PI);
        if value < -1e-10 {
            return Err(Error::NegativeDensity { index, value });
        }
        density.push(value.max(0.0));
    }
    GridDensity::new(theta_grid.to_vec(), density, Domain::RotorHalfCircle)
}

/// Pushforward of the rotor density to `x = cos θ`:
/// `P(x) = P(arccos x) / √(1 - x²)`. The Jacobian is singular at `x = ±1`,
/// so the grid must stay strictly inside `(-1, 1)`.
pub fn rotor_pushforward(coeffs: &[Complex64], phi: f64, x_grid: &[f64]) -> Result<GridDensity> {
    check_coeffs(coeffs)?;
    if let Some(&x) = x_grid.iter().find(|x| x.abs() >= 1.0) {
        return Err(Error::EndpointSingular(x));
    }
    let density = x_grid
        .iter()
        .map(|&x| rotor_density_at(coeffs, phi, x.acos()) / (1.0 - x * x).sqrt())
        .collect();
    GridDensity::new(x_grid.to_vec(), density, Domain::RealLine)
}

/// Checks the Gaussian-smoothing identity for products of Hermite polynomials
/// with `α² = β² + γ²`:
///
/// `G_α(x) Σ_{s≤n} (1/s!) C(m+n-2s, n-s) (γ/α)^{m+n-2s} h_{m+n-2s}(x/α)
///   = ∫ G_β(x-x') G_γ(x') h_m(x'/γ) h_n(x'/γ) dx'`
///
/// with `h_j = H_j/j!` and `G_w` the centered normal density of width `w`.
/// The right side is integrated by Gauss–Hermite quadrature after completing
/// the square. Returns the largest absolute discrepancy over `x_grid`.
pub fn verify_hermite_lemma(m: usize, n: usize, beta: f64, gamma: f64, x_grid: &[f64]) -> f64 {
    let (m, n) = (m.max(n), m.min(n));
    let alpha = (beta * beta + gamma * gamma).sqrt();
    let gauss = |x: f64, w: f64| (-0.5 * (x / w).powi(2)).exp() / ((2.0 * PI).sqrt() * w);
    let rule = gauss_hermite(((m + n) / 2 + 8).max(32));
    // G_β(x-x') G_γ(x') = G_α(x) G_v(x' - c)
    let v = beta * gamma / alpha;

    x_grid
        .iter()
        .map(|&x| {
            let lhs: f64 = (0..=n)
                .map(|s| {
                    let order = m + n - 2 * s;
                    let binom = factorial(order as u32)
                        / (factorial((n - s) as u32) * factorial((m - s) as u32));
                    binom / factorial(s as u32)
                        * (gamma / alpha).powi(order as i32)
                        * hermite_over_factorial(order, x / alpha)
                })
                .collect::<KahanSum>()
                .value()
                * gauss(x, alpha);

            let c = gamma * gamma * x / (alpha * alpha);
            let integral = rule.integrate(|u| {
                let xp = c + 2f64.sqrt() * v * u;
                hermite_over_factorial(m, xp / gamma) * hermite_over_factorial(n, xp / gamma)
            }) / PI.sqrt();
            let rhs = gauss(x, alpha) * integral;
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hermite_values() {
        for x in [-1.3, 0.0, 0.7, 2.0] {
            assert_eq!(hermite(0, x), 1.0);
            assert_eq!(hermite(1, x), x);
            assert!((hermite(2, x) - (x * x - 1.0)).abs() < 1e-14);
        }
        assert!((hermite(3, 2.0) - 2.0).abs() < 1e-14);
        assert!((hermite_over_factorial(5, 1.7) - hermite(5, 1.7) / 120.0).abs() < 1e-14);
    }

    #[test]
    fn wavefunctions_orthonormal() {
        let rule = gauss_hermite(SMEARING_NODES);
        // ∫ψ_kψ_l dx with x = √2 u: weight e^{-u²} absorbs e^{-x²/2}
        for k in 0..=8 {
            for l in 0..=8 {
                let v = rule.integrate(|u| {
                    let x = 2f64.sqrt() * u;
                    let pk = oscillator_wavefunction(k, x);
                    let pl = oscillator_wavefunction(l, x);
                    pk * pl * (x * x / 2.0).exp() * 2f64.sqrt()
                });
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-9, "k={k} l={l} v={v}");
            }
        }
    }

    #[test]
    fn wavefunction_matches_explicit_formula() {
        for k in 0..6 {
            for x in [-2.5f64, -0.1, 1.0, 3.3] {
                let explicit = (2.0 * PI).powf(-0.25) / factorial(k as u32).sqrt()
                    * (-x * x / 4.0).exp()
                    * hermite(k, x);
                assert!((oscillator_wavefunction(k, x) - explicit).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn w_state_density() {
        let state = LimitState::new(vec![c(0.0), c(1.0)], 0.37, 0.0).unwrap();
        let d = limit_density_alpha_half(&state, &default_grid(1)).unwrap();
        for (x, p) in d.grid.iter().zip(&d.density) {
            let want = x * x * (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
            assert!((p - want).abs() < 1e-14);
        }
    }

    #[test]
    fn number_state_second_moments() {
        for k in 0..=4 {
            let d = limit_density_alpha_half(&LimitState::number_state(k, 0.0, 0.0), &default_grid(k)).unwrap();
            assert!((d.integral() - 1.0).abs() < 1e-10);
            assert!((d.moment(2) - (2 * k + 1) as f64).abs() < 1e-8);
        }
    }

    #[test]
    fn series_matches_quadrature() {
        let state = LimitState::new(vec![c(0.6), Complex64::new(0.0, 0.48), c(0.64)], 0.9, 0.7).unwrap();
        let grid = linspace(-18.0, 18.0, 361);
        let a = limit_density_alpha_half(&state, &grid).unwrap();
        let b = limit_density_alpha_half_series(&state, &grid).unwrap();
        for (p, q) in a.density.iter().zip(&b.density) {
            assert!((p - q).abs() < 1e-12, "{p} vs {q}");
        }
    }

    #[test]
    fn narrow_grid_rejected() {
        let err = limit_density_alpha_half(&LimitState::number_state(2, 0.0, 0.0), &linspace(-3.0, 3.0, 101))
            .unwrap_err();
        assert!(matches!(err, Error::GridTooNarrow { .. }));
    }

    #[test]
    fn w_charfn() {
        let state = LimitState::new(vec![c(0.0), c(1.0)], 1.1, 0.0).unwrap();
        for t in [0.0, 0.5, 1.0, 2.5] {
            let v = limit_charfn_alpha_half(&state, 1.0, t).unwrap();
            let want = (-t * t / 2.0).exp() * (1.0 - t * t);
            assert!((v - c(want)).norm() < 1e-14);
        }
    }

    #[test]
    fn rotor_examples() {
        let grid = default_theta_grid();
        let d = limit_density_alpha_one(&[c(1.0)], 0.3, &grid).unwrap();
        assert!(d.density.iter().all(|p| (p - 1.0 / PI).abs() < 1e-15));
        let r = 0.5f64.sqrt();
        let d = limit_density_alpha_one(&[c(r), c(r)], 0.0, &grid).unwrap();
        for (t, p) in d.grid.iter().zip(&d.density) {
            assert!((p - (1.0 + t.cos()) / PI).abs() < 1e-14);
        }
        assert!((d.integral() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rotor_pushforward_rejects_endpoints() {
        let err = rotor_pushforward(&[c(1.0)], 0.0, &linspace(-1.0, 1.0, 11)).unwrap_err();
        assert!(matches!(err, Error::EndpointSingular(_)));
        let d = rotor_pushforward(&[c(1.0)], 0.0, &[0.0, 0.5, 0.9]).unwrap();
        assert!((d.density[0] - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn lemma_small_cases() {
        let grid = linspace(-8.0, 8.0, 161);
        assert!(verify_hermite_lemma(0, 0, 1.0, 1.0, &grid) < 1e-10);
        assert!(verify_hermite_lemma(1, 0, 1.0, 1.0, &grid) < 1e-8);
        assert!(verify_hermite_lemma(4, 3, 0.5, 2.0, &grid) < 1e-8);
    }
}
