//! Exact finite-N statistics of the collective variable on superpositions of
//! Dicke states.
//!
//! The primary path evaluates `⟨Ψ|M^{⊗N}|Ψ⟩` in closed form on the symmetric
//! subspace and inverts the generating function on the intensity lattice with
//! a DFT. `brute_force_*` enumerate the full `2^N` Hilbert space instead and
//! serve as an independent oracle for small N.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numeric::{ln_binomial, ComplexKahan, KahanSum};
use crate::operator::{DerivedParams, Mat2, Povm};

/// Normalization tolerance for state coefficients.
pub const NORM_TOL: f64 = 1e-12;
/// Largest particle number accepted by the `2^N` oracle.
pub const BRUTE_FORCE_MAX_N: usize = 14;
/// Negative probabilities above this are rounding and get clipped.
pub const CLIP_TOL: f64 = 1e-12;

/// `Σ_k c_k |N, first + k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeSuperposition {
    n_particles: usize,
    first: usize,
    coeffs: Vec<Complex64>,
}

impl DickeSuperposition {
    /// Superposition over `|N,0⟩ … |N,d-1⟩`.
    pub fn new(n_particles: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        Self::with_offset(n_particles, 0, coeffs)
    }

    /// Superposition over `|N, first⟩ … |N, first+d-1⟩`.
    pub fn with_offset(n_particles: usize, first: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::InvalidInput("particle number must be positive".into()));
        }
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("empty coefficient vector".into()));
        }
        if first + coeffs.len() - 1 > n_particles {
            return Err(Error::InvalidInput(format!(
                "excitation {} exceeds particle number {n_particles}",
                first + coeffs.len() - 1
            )));
        }
        let norm: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidInput(format!("coefficients have squared norm {norm}")));
        }
        Ok(DickeSuperposition { n_particles, first, coeffs })
    }

    /// `Σ_k c_k |2N, N + k_min + k⟩`, the family used at full coarse-graining.
    pub fn centered(n_half: usize, k_min: i64, coeffs: Vec<Complex64>) -> Result<Self> {
        let first = n_half as i64 + k_min;
        if first < 0 {
            return Err(Error::InvalidInput(format!("excitation offset {k_min} below -N")));
        }
        Self::with_offset(2 * n_half, first as usize, coeffs)
    }

    pub fn dicke(n_particles: usize, k: usize) -> Result<Self> {
        Self::with_offset(n_particles, k, vec![Complex64::new(1.0, 0.0)])
    }

    pub fn w_state(n_particles: usize) -> Result<Self> {
        Self::dicke(n_particles, 1)
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn first_excitation(&self) -> usize {
        self.first
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    /// `(excitation number, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.first + i, c))
    }

    /// Same coefficients on a different particle number.
    pub fn with_particles(&self, n_particles: usize) -> Result<Self> {
        Self::with_offset(n_particles, self.first, self.coeffs.clone())
    }
}

/// `c = Σ exp(ln|term|) e^{i arg term}` accumulated with a common shift.
struct LogTermSum {
    terms: Vec<(f64, f64)>,
}

impl LogTermSum {
    fn new() -> Self {
        LogTermSum { terms: Vec::new() }
    }

    fn push(&mut self, log_mag: f64, phase: f64) {
        if log_mag > f64::NEG_INFINITY {
            self.terms.push((log_mag, phase));
        }
    }

    fn total(&self, extra_log: f64) -> Complex64 {
        let Some(shift) = self.terms.iter().map(|t| t.0).reduce(f64::max) else {
            return Complex64::new(0.0, 0.0);
        };
        let mut acc = ComplexKahan::new();
        for &(lm, ph) in &self.terms {
            acc.add(Complex64::from_polar((lm - shift).exp(), ph));
        }
        acc.value() * (shift + extra_log).exp()
    }
}

/// `(ln|z|^e, e·arg z)`, with `0^0 = 1` and `0^e = 0` for `e > 0`.
#[inline]
fn log_power(z: Complex64, e: u64) -> Option<(f64, f64)> {
    if e == 0 {
        return Some((0.0, 0.0));
    }
    let r = z.norm();
    if r == 0.0 {
        return None;
    }
    Some((e as f64 * r.ln(), e as f64 * z.arg()))
}

/// `⟨N,k| M^{⊗N} |N,l⟩` on the symmetric subspace.
///
/// Uses the permutation-invariant expansion
/// `√(C(N,k)/C(N,l)) Σ_q C(k,q) C(N-k,l-q) M₁₁^q M₁₀^{k-q} M₀₁^{l-q} M₀₀^{N-k-l+q}`,
/// with every term evaluated in log space so that binomials for `N ~ 10⁴`
/// never overflow.
pub fn dicke_matrix_element(m: &Mat2, n: usize, k: usize, l: usize) -> Complex64 {
    assert!(k <= n && l <= n, "Dicke index out of range");
    let (n, k, l) = (n as u64, k as u64, l as u64);
    let (m00, m01, m10, m11) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let q_lo = (k + l).saturating_sub(n);
    let q_hi = k.min(l);
    let mut sum = LogTermSum::new();
    for q in q_lo..=q_hi {
        let parts = [
            log_power(m11, q),
            log_power(m10, k - q),
            log_power(m01, l - q),
            log_power(m00, n + q - k - l),
        ];
        if parts.iter().any(Option::is_none) {
            continue;
        }
        let (mut lm, mut ph) = (ln_binomial(k, q) + ln_binomial(n - k, l - q), 0.0);
        for (a, b) in parts.into_iter().flatten() {
            lm += a;
            ph += b;
        }
        sum.push(lm, ph);
    }
    sum.total(0.5 * (ln_binomial(n, k) - ln_binomial(n, l)))
}

/// `⟨Ψ| M^{⊗N} |Ψ⟩` for a Dicke superposition.
pub fn tensor_power_expectation(state: &DickeSuperposition, m: &Mat2) -> Complex64 {
    let n = state.n_particles();
    let mut acc = ComplexKahan::new();
    for (k, ck) in state.terms() {
        if ck == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (l, cl) in state.terms() {
            if cl == Complex64::new(0.0, 0.0) {
                continue;
            }
            acc.add(ck.conj() * cl * dicke_matrix_element(m, n, k, l));
        }
    }
    acc.value()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("coarse-graining level {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// `τ N^α`, the scale dividing the centered intensity.
pub fn variable_scale(params: &DerivedParams, n: usize, alpha: f64) -> f64 {
    params.tau * (n as f64).powf(alpha)
}

/// Single-particle operator `Σ_a E_a e^{it(a-μ)/(τ N^α)}`.
pub fn local_char_operator(povm: &Povm, params: &DerivedParams, scale: f64, t: f64) -> Mat2 {
    povm.weighted_sum(|a| Complex64::from_polar(1.0, t * (a - params.mu) / scale))
}

/// Characteristic function `E[e^{itX}]` of the collective variable.
pub fn char_fn_finite(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
    t: f64,
) -> Result<Complex64> {
    check_alpha(alpha)?;
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let scale = variable_scale(params, state.n_particles(), alpha);
    Ok(tensor_power_expectation(state, &local_char_operator(povm, params, scale, t)))
}

/// Outcomes `a_j = a_min + j δ` of a commensurate POVM.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeLattice {
    pub a_min: f64,
    pub spacing: f64,
    /// Lattice index of each POVM outcome, in POVM order.
    pub index: Vec<usize>,
    pub levels: usize,
}

/// Largest number of lattice levels a single-particle outcome set may span.
pub const MAX_LATTICE_LEVELS: usize = 1024;

impl OutcomeLattice {
    pub fn detect(povm: &Povm) -> Result<Self> {
        let outcomes = povm.outcomes();
        let a_min = outcomes.iter().copied().fold(f64::INFINITY, f64::min);
        let a_max = outcomes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = a_max - a_min;
        let tol = 1e-9 * range.max(1.0);
        // Euclid with tolerance over the offsets from the minimum.
        let mut spacing = 0.0_f64;
        for &a in outcomes {
            let mut x = a - a_min;
            let mut y = spacing;
            while y > tol {
                let r = x % y;
                x = y;
                y = r;
                if y > x - tol {
                    y = 0.0;
                }
            }
            if x > tol {
                spacing = x;
            }
        }
        if spacing <= tol {
            return Err(Error::OffLattice { index: 0 });
        }
        let mut index = Vec::with_capacity(outcomes.len());
        for (i, &a) in outcomes.iter().enumerate() {
            let u = (a - a_min) / spacing;
            let j = u.round();
            if (u - j).abs() > 1e-9 * u.abs().max(1.0) {
                return Err(Error::OffLattice { index: i });
            }
            index.push(j as usize);
        }
        let levels = index.iter().copied().max().unwrap_or(0) + 1;
        if levels > MAX_LATTICE_LEVELS {
            let i = index.iter().position(|&j| j + 1 == levels).unwrap_or(0);
            return Err(Error::OffLattice { index: i });
        }
        Ok(OutcomeLattice { a_min, spacing, index, levels })
    }
}

/// Probability mass function on an increasing set of values.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePmf {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Raw moments `E[X^j]` and central moments `E[(X-m)^j]`, `j = 0..=4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub raw: [f64; 5],
    pub central: [f64; 5],
}

impl Moments {
    pub fn mean(&self) -> f64 {
        self.raw[1]
    }

    pub fn variance(&self) -> f64 {
        self.central[2]
    }

    pub fn second_moment(&self) -> f64 {
        self.raw[2]
    }
}

impl LatticePmf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().copied().collect::<KahanSum>().value()
    }

    /// `P(X ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let end = self.values.partition_point(|&v| v <= x);
        self.probs[..end].iter().copied().collect::<KahanSum>().value()
    }

    /// Running sums of the probabilities, aligned with `values`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = KahanSum::new();
        self.probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect()
    }

    pub fn moments(&self) -> Moments {
        let mut raw = [0.0; 5];
        for (j, r) in raw.iter_mut().enumerate() {
            *r = self
                .values
                .iter()
                .zip(&self.probs)
                .map(|(x, p)| p * x.powi(j as i32))
                .collect::<KahanSum>()
                .value();
        }
        let m = raw[1];
        let mut central = [0.0; 5];
        for (j, c) in central.iter_mut().enumerate() {
            *c = self
                .values
                .iter()
                .zip(&self.probs)
                .map(|(x, p)| p * (x - m).powi(j as i32))
                .collect::<KahanSum>()
                .value();
        }
        Moments { raw, central }
    }

    /// Merges entries whose values agree to `tol`.
    fn merged(mut pairs: Vec<(f64, f64)>, tol: f64) -> Self {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values: Vec<f64> = Vec::new();
        let mut probs: Vec<f64> = Vec::new();
        for (v, p) in pairs {
            match values.last() {
                Some(&last) if (v - last).abs() <= tol * v.abs().max(1.0) => {
                    *probs.last_mut().unwrap() += p;
                }
                _ => {
                    values.push(v);
                    probs.push(p);
                }
            }
        }
        LatticePmf { values, probs }
    }
}

/// Total variation distance; support points are matched to within `1e-9`.
pub fn total_variation(a: &LatticePmf, b: &LatticePmf) -> f64 {
    let mut pairs: Vec<(f64, f64)> = a.values.iter().copied().zip(a.probs.iter().copied()).collect();
    pairs.extend(b.values.iter().copied().zip(b.probs.iter().map(|p| -p)));
    let diff = LatticePmf::merged(pairs, 1e-9);
    0.5 * diff.probs.iter().map(|p| p.abs()).collect::<KahanSum>().value()
}

#[derive(Debug, Clone, Copy)]
pub struct PmfOptions {
    /// Upper bound on the number of intensity lattice points `N·(levels-1)+1`.
    pub cap: usize,
}

impl Default for PmfOptions {
    fn default() -> Self {
        PmfOptions { cap: 1 << 22 }
    }
}

/// Probability generating function node `Σ_a E_a z^{j(a)}` with `z = e^{iθ}`.
fn generating_operator(povm: &Povm, lattice: &OutcomeLattice, theta: f64) -> Mat2 {
    povm.effects()
        .iter()
        .zip(&lattice.index)
        .fold(Mat2::zero(), |acc, (e, &j)| acc + e.scale(Complex64::from_polar(1.0, theta * j as f64)))
}

/// Exact PMF of the collective variable, by inverting the generating function
/// sampled at the DFT nodes of the intensity lattice.
pub fn pmf_finite(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
) -> Result<LatticePmf> {
    pmf_finite_with(state, povm, params, alpha, PmfOptions::default())
}

pub fn pmf_finite_with(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
    options: PmfOptions,
) -> Result<LatticePmf> {
    check_alpha(alpha)?;
    let lattice = OutcomeLattice::detect(povm)?;
    let n = state.n_particles();
    let size = n
        .checked_mul(lattice.levels - 1)
        .and_then(|v| v.checked_add(1))
        .filter(|&s| s <= options.cap)
        .ok_or(Error::CapExceeded {
            what: "intensity lattice size",
            value: n.saturating_mul(lattice.levels - 1).saturating_add(1),
            cap: options.cap,
        })?;

    let mut spectrum: Vec<Complex64> = (0..size)
        .into_par_iter()
        .map(|m| {
            let theta = 2.0 * PI * m as f64 / size as f64;
            tensor_power_expectation(state, &generating_operator(povm, &lattice, theta))
        })
        .collect();

    // P(J) = (1/size) Σ_m G(ω^m) ω^{-mJ}: a forward DFT.
    let fft = FftPlanner::new().plan_fft_forward(size);
    fft.process(&mut spectrum);

    let scale = variable_scale(params, n, alpha);
    let mut probs = Vec::with_capacity(size);
    for (index, z) in spectrum.iter().enumerate() {
        let p = z / size as f64;
        if p.im.abs() > CLIP_TOL {
            return Err(Error::Numerical(format!(
                "imaginary probability {:.3e} at lattice index {index}",
                p.im
            )));
        }
        if p.re < -CLIP_TOL {
            return Err(Error::NegativeProbability { index, value: p.re });
        }
        probs.push(p.re.max(0.0));
    }
    let total = probs.iter().copied().collect::<KahanSum>().value();
    probs.iter_mut().for_each(|p| *p /= total);

    let values = (0..size)
        .map(|j| {
            let intensity = n as f64 * lattice.a_min + lattice.spacing * j as f64;
            (intensity - n as f64 * params.mu) / scale
        })
        .collect();
    Ok(LatticePmf { values, probs })
}

pub fn moments_finite(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
) -> Result<Moments> {
    Ok(pmf_finite(state, povm, params, alpha)?.moments())
}

/// `⟨Ψ| Σ_i A_i |Ψ⟩ / N`: the per-particle mean outcome. Passing it as `μ`
/// gives the state-dependent (nonlinear) centering.
pub fn mean_outcome(state: &DickeSuperposition, povm: &Povm) -> f64 {
    let a = povm.weighted_sum(|x| x.into());
    let n = state.n_particles();
    let nf = n as f64;
    let mut acc = ComplexKahan::new();
    for (k, ck) in state.terms() {
        for (l, cl) in state.terms() {
            let kf = k as f64;
            let lf = l as f64;
            let elem = if k == l {
                a.get(0, 0) * (nf - kf) + a.get(1, 1) * kf
            } else if k == l + 1 {
                a.get(1, 0) * (kf * (nf - kf + 1.0)).sqrt()
            } else if l == k + 1 {
                a.get(0, 1) * (lf * (nf - lf + 1.0)).sqrt()
            } else {
                continue;
            };
            acc.add(ck.conj() * cl * elem);
        }
    }
    acc.value().re / nf
}

/// Full `2^N` state vector; qubit `i` is bit `i` of the basis index.
pub fn state_vector(state: &DickeSuperposition) -> Result<Vec<Complex64>> {
    let n = state.n_particles();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::CapExceeded { what: "brute-force particle number", value: n, cap: BRUTE_FORCE_MAX_N });
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
    for (b, amp) in psi.iter_mut().enumerate() {
        let k = b.count_ones() as usize;
        if k >= state.first_excitation() && k < state.first_excitation() + state.dim() {
            let c = state.coeffs()[k - state.first_excitation()];
            *amp = c / ln_binomial(n as u64, k as u64).exp().sqrt();
        }
    }
    Ok(psi)
}

fn apply_single(m: &Mat2, qubit: usize, v: &mut [Complex64]) {
    let bit = 1usize << qubit;
    for b in 0..v.len() {
        if b & bit == 0 {
            let (x0, x1) = (v[b], v[b | bit]);
            v[b] = m.get(0, 0) * x0 + m.get(0, 1) * x1;
            v[b | bit] = m.get(1, 0) * x0 + m.get(1, 1) * x1;
        }
    }
}

fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = ComplexKahan::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x.conj() * y);
    }
    acc.value()
}

/// Oracle: `⟨Ψ|𝒜^{⊗N}|Ψ⟩` by applying `𝒜` to each qubit of the full state vector.
pub fn brute_force_char_fn(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
    t: f64,
) -> Result<Complex64> {
    check_alpha(alpha)?;
    let psi = state_vector(state)?;
    let scale = variable_scale(params, state.n_particles(), alpha);
    let op = local_char_operator(povm, params, scale, t);
    let mut v = psi.clone();
    for q in 0..state.n_particles() {
        apply_single(&op, q, &mut v);
    }
    Ok(inner(&psi, &v))
}

/// Oracle: sums `⟨Ψ|E_{a_1}⊗…⊗E_{a_N}|Ψ⟩` over every outcome string and
/// groups the strings by their value of the collective variable.
pub fn brute_force_pmf(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
) -> Result<LatticePmf> {
    check_alpha(alpha)?;
    let psi = state_vector(state)?;
    let n = state.n_particles();
    let mut leaves: Vec<(f64, f64)> = Vec::new();

    fn walk(
        depth: usize,
        n: usize,
        v: &[Complex64],
        intensity: f64,
        psi: &[Complex64],
        povm: &Povm,
        out: &mut Vec<(f64, f64)>,
    ) {
        if depth == n {
            out.push((intensity, inner(psi, v).re));
            return;
        }
        for (a, e) in povm.iter() {
            let mut w = v.to_vec();
            apply_single(e, depth, &mut w);
            walk(depth + 1, n, &w, intensity + a, psi, povm, out);
        }
    }
    walk(0, n, &psi, 0.0, &psi, povm, &mut leaves);

    let scale = variable_scale(params, n, alpha);
    let pairs = leaves
        .into_iter()
        .map(|(i, p)| ((i - n as f64 * params.mu) / scale, p))
        .collect();
    Ok(LatticePmf::merged(pairs, 1e-9))
}
