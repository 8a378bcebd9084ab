//! Bipartite limit correlations.
//!
//! At `α = 1/2` both parties of a Schmidt-diagonal state `Σ_k c_k |k⟩|k⟩`
//! measure `sgn(x)` of a rotated quadrature. Correlators reduce to tables
//! `J_kl = ∫ f(x) ⟨k|x⟩⟨x|l⟩ dx` of a single-party response `f`, with
//! `f = sgn` giving the sign overlaps `i_kl`. Smeared or noisy detectors only
//! change `f`.
//!
//! At `α = 1` the rotor statistics admit an explicit hidden-variable model,
//! checked here against the quantum joint.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::limit::{check_boundary, check_coeffs, oscillator_wavefunctions, smearing_rule};
use crate::numeric::{composite_gauss_legendre, is_uniform, simpson_weights, ComplexKahan, KahanSum};

/// Largest Schmidt rank accepted.
pub const MAX_SCHMIDT_RANK: usize = 16;
/// Coarse step of the CHSH angle search.
pub const CHSH_GRID_STEP: f64 = PI / 36.0;

/// Settings and state of a two-party sign-binned quadrature experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BellConfig {
    pub coeffs: Vec<Complex64>,
    /// `[φ_A, φ_A′, φ_B, φ_B′]`
    pub angles: [f64; 4],
    /// `[s_A, s_B]`
    pub widths: [f64; 2],
}

impl BellConfig {
    pub fn new(coeffs: Vec<Complex64>, angles: [f64; 4], widths: [f64; 2]) -> Result<Self> {
        check_schmidt(&coeffs)?;
        if widths.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("widths must be finite and non-negative".into()));
        }
        Ok(BellConfig { coeffs, angles, widths })
    }

    pub fn projective(coeffs: Vec<Complex64>, angles: [f64; 4]) -> Result<Self> {
        Self::new(coeffs, angles, [0.0, 0.0])
    }
}

fn check_schmidt(coeffs: &[Complex64]) -> Result<()> {
    check_coeffs(coeffs)?;
    if coeffs.len() > MAX_SCHMIDT_RANK {
        return Err(Error::CapExceeded { what: "Schmidt rank", value: coeffs.len(), cap: MAX_SCHMIDT_RANK });
    }
    Ok(())
}

/// The state `(2/√10, 1/√2, 1/√10)` with the known violation `2√10/π`.
pub fn reference_state() -> Vec<Complex64> {
    [2.0 / 10f64.sqrt(), 0.5f64.sqrt(), 1.0 / 10f64.sqrt()]
        .iter()
        .map(|&x| Complex64::new(x, 0.0))
        .collect()
}

/// Which pair of settings a correlator refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SettingPair {
    AB,
    ABPrime,
    APrimeB,
    APrimeBPrime,
}

impl SettingPair {
    pub const ALL: [SettingPair; 4] =
        [SettingPair::AB, SettingPair::ABPrime, SettingPair::APrimeB, SettingPair::APrimeBPrime];

    fn angles(self, a: &[f64; 4]) -> (f64, f64) {
        match self {
            SettingPair::AB => (a[0], a[2]),
            SettingPair::ABPrime => (a[0], a[3]),
            SettingPair::APrimeB => (a[1], a[2]),
            SettingPair::APrimeBPrime => (a[1], a[3]),
        }
    }
}

/// Symmetric table `J_kl = ∫ f(x) ⟨k|x⟩⟨x|l⟩ dx` for an odd response `f`.
/// Entries with `k + l` even vanish by parity and are stored as exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    dim: usize,
    values: Vec<f64>,
}

/// The `f = sgn` response table.
pub type SignOverlapTable = ResponseTable;

impl ResponseTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.values[k * self.dim + l]
    }

    /// Deterministic `±1` diagonal table, a classical stand-in for tests of
    /// the correlator algebra.
    pub fn classical_diagonal(signs: &[f64]) -> Self {
        let dim = signs.len();
        let mut values = vec![0.0; dim * dim];
        for (k, s) in signs.iter().enumerate() {
            values[k * dim + k] = *s;
        }
        ResponseTable { dim, values }
    }
}

/// Builds a [`ResponseTable`] for an odd response `f` by composite
/// Gauss–Legendre on `[0, L]`, `L = 14 + 2 k_max`, splitting panels at the
/// given kink locations.
pub fn response_table(
    k_max: usize,
    f: impl Fn(f64) -> f64 + Sync,
    breakpoints: &[f64],
    order: usize,
) -> ResponseTable {
    let dim = k_max + 1;
    let upper = 14.0 + 2.0 * k_max as f64;
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|b| *b > 0.0 && *b < upper).collect();
    cuts.push(0.0);
    cuts.push(upper);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let panels = (((w[1] - w[0]) / 0.25).ceil() as usize).max(2);
        let rule = composite_gauss_legendre(w[0], w[1], panels, order);
        nodes.extend(rule.nodes);
        weights.extend(rule.weights);
    }

    let rows: Vec<(Vec<f64>, f64)> = nodes
        .par_iter()
        .zip(&weights)
        .map(|(&x, &w)| (oscillator_wavefunctions(k_max, x), w * f(x)))
        .collect();
    let mut values = vec![0.0; dim * dim];
    for k in 0..dim {
        for l in (k + 1..dim).step_by(2) {
            let v = 2.0 * rows.iter().map(|(psi, w)| w * psi[k] * psi[l]).collect::<KahanSum>().value();
            values[k * dim + l] = v;
            values[l * dim + k] = v;
        }
    }
    ResponseTable { dim, values }
}

/// Sign overlaps `i_kl = ∫ sgn(x) ⟨k|x⟩⟨x|l⟩ dx`.
pub fn sign_overlap_table(k_max: usize) -> SignOverlapTable {
    response_table(k_max, |_| 1.0, &[], 20)
}

/// Sign of a quadrature after Gaussian smearing of width `s`:
/// `f(x) = erf(x / (√2 s))`.
pub fn smeared_sign_table(k_max: usize, s: f64) -> ResponseTable {
    if s == 0.0 {
        return sign_overlap_table(k_max);
    }
    let cuts = [s, 4.0 * s, 10.0 * s];
    response_table(k_max, |x| libm::erf(x / (2f64.sqrt() * s)), &cuts, 20)
}

/// `⟨f(x_A) g(x_B)⟩ = Re Σ_{kl} c_k* c_l e^{i(l-k)(φ_A+φ_B)} F_kl G_kl`.
pub fn correlator_with_tables(
    coeffs: &[Complex64],
    phi_sum: f64,
    table_a: &ResponseTable,
    table_b: &ResponseTable,
) -> f64 {
    let mut acc = KahanSum::new();
    for (k, ck) in coeffs.iter().enumerate() {
        for (l, cl) in coeffs.iter().enumerate() {
            let j = table_a.get(k, l) * table_b.get(k, l);
            if j == 0.0 {
                continue;
            }
            let phase = Complex64::from_polar(1.0, (l as f64 - k as f64) * phi_sum);
            acc.add((ck.conj() * cl * phase).re * j);
        }
    }
    acc.value()
}

fn tables_for(config: &BellConfig) -> (ResponseTable, ResponseTable) {
    let k_max = config.coeffs.len() - 1;
    (smeared_sign_table(k_max, config.widths[0]), smeared_sign_table(k_max, config.widths[1]))
}

/// Sign-binned quadrature correlator for one pair of settings. Nonzero
/// widths use the Gaussian-smeared sign response.
pub fn correlator(config: &BellConfig, pair: SettingPair) -> f64 {
    let (ta, tb) = tables_for(config);
    let (a, b) = pair.angles(&config.angles);
    correlator_with_tables(&config.coeffs, a + b, &ta, &tb)
}

/// `⟨AB⟩ + ⟨AB′⟩ + ⟨A′B⟩ − ⟨A′B′⟩` for the given tables.
pub fn chsh_with_tables(
    coeffs: &[Complex64],
    angles: &[f64; 4],
    table_a: &ResponseTable,
    table_b: &ResponseTable,
) -> f64 {
    let e = |pair: SettingPair| {
        let (a, b) = pair.angles(angles);
        correlator_with_tables(coeffs, a + b, table_a, table_b)
    };
    e(SettingPair::AB) + e(SettingPair::ABPrime) + e(SettingPair::APrimeB) - e(SettingPair::APrimeBPrime)
}

pub fn chsh_value(config: &BellConfig) -> f64 {
    let (ta, tb) = tables_for(config);
    chsh_with_tables(&config.coeffs, &config.angles, &ta, &tb)
}

/// Result of [`optimize_chsh`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChshOptimum {
    pub angles: [f64; 4],
    pub value: f64,
}

/// Maximizes the projective CHSH value over the four angles.
pub fn optimize_chsh(coeffs: &[Complex64]) -> Result<ChshOptimum> {
    check_schmidt(coeffs)?;
    let table = sign_overlap_table(coeffs.len() - 1);
    Ok(optimize_chsh_with_tables(coeffs, &table, &table))
}

/// CHSH maximization for arbitrary response tables.
///
/// Correlators depend only on `φ_A + φ_B`, so `φ_A = 0` is fixed without loss.
/// A grid over the other three angles at step π/36 (tie-break: the
/// lexicographically smallest tuple) seeds coordinate descent with
/// golden-section line searches, stopped when a sweep gains less than 1e-10.
pub fn optimize_chsh_with_tables(
    coeffs: &[Complex64],
    table_a: &ResponseTable,
    table_b: &ResponseTable,
) -> ChshOptimum {
    let steps = (2.0 * PI / CHSH_GRID_STEP).round() as usize;
    // correlator on the grid of angle sums
    let g: Vec<f64> = (0..steps)
        .map(|i| correlator_with_tables(coeffs, i as f64 * CHSH_GRID_STEP, table_a, table_b))
        .collect();
    let best = (0..steps)
        .into_par_iter()
        .map(|ap| {
            let mut best = (f64::NEG_INFINITY, [0usize; 3]);
            for b in 0..steps {
                for bp in 0..steps {
                    let v = g[b] + g[bp] + g[(ap + b) % steps] - g[(ap + bp) % steps];
                    if v > best.0 {
                        best = (v, [ap, b, bp]);
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, [0usize; 3]), |acc, x| if x.0 > acc.0 { x } else { acc });

    let objective = |a: &[f64; 4]| chsh_with_tables(coeffs, a, table_a, table_b);
    let idx = best.1;
    let mut angles = [
        0.0,
        idx[0] as f64 * CHSH_GRID_STEP,
        idx[1] as f64 * CHSH_GRID_STEP,
        idx[2] as f64 * CHSH_GRID_STEP,
    ];
    let mut value = objective(&angles);
    for _ in 0..200 {
        let before = value;
        for coord in 1..4 {
            let centre = angles[coord];
            let line = |x: f64| {
                let mut a = angles;
                a[coord] = x;
                objective(&a)
            };
            let (x, v) = golden_max(line, centre - CHSH_GRID_STEP, centre + CHSH_GRID_STEP);
            if v > value {
                angles[coord] = x;
                value = v;
            }
        }
        if value - before < 1e-10 {
            break;
        }
    }
    ChshOptimum { angles, value }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-9 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// A density on a product grid, stored row-major with `x` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGridDensity {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub density: Vec<f64>,
}

impl JointGridDensity {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.density[i * self.y.len() + j]
    }

    fn weights(grid: &[f64]) -> Vec<f64> {
        if is_uniform(grid) {
            simpson_weights(grid.len(), grid[1] - grid[0])
        } else {
            let n = grid.len();
            (0..n)
                .map(|i| {
                    let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { grid[i + 1] - grid[i] } else { 0.0 };
                    0.5 * (left + right)
                })
                .collect()
        }
    }

    /// `∫∫ f(x, y) P(x, y)` with Simpson (or trapezoid) weights per axis.
    pub fn expectation(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let (wx, wy) = (Self::weights(&self.x), Self::weights(&self.y));
        let mut acc = KahanSum::new();
        for (i, x) in self.x.iter().enumerate() {
            for (j, y) in self.y.iter().enumerate() {
                acc.add(wx[i] * wy[j] * f(*x, *y) * self.at(i, j));
            }
        }
        acc.value()
    }

    pub fn integral(&self) -> f64 {
        self.expectation(|_, _| 1.0)
    }

    /// `∫∫ sgn(x) sgn(y) P`. Each axis is split at 0, which must be a grid
    /// node, and the halves are integrated separately so the jump of the
    /// sign does not degrade the rule.
    pub fn sign_correlation(&self) -> Result<f64> {
        let split = |g: &[f64]| -> Result<(usize, Vec<f64>, Vec<f64>)> {
            let z = g
                .iter()
                .position(|v| v.abs() < 1e-12)
                .ok_or_else(|| Error::InvalidInput("sign binning needs 0 as a grid node".into()))?;
            if z == 0 || z + 1 == g.len() {
                return Err(Error::InvalidInput("0 must be an interior grid node".into()));
            }
            Ok((z, Self::weights(&g[..=z]), Self::weights(&g[z..])))
        };
        let (zx, wxl, wxr) = split(&self.x)?;
        let (zy, wyl, wyr) = split(&self.y)?;
        let mut acc = KahanSum::new();
        for (xs, wx, sx) in [(0..=zx, &wxl, -1.0), (zx..=self.x.len() - 1, &wxr, 1.0)] {
            let x0 = *xs.start();
            for i in xs {
                for (ys, wy, sy) in [(0..=zy, &wyl, -1.0), (zy..=self.y.len() - 1, &wyr, 1.0)] {
                    let y0 = *ys.start();
                    for j in ys {
                        acc.add(sx * sy * wx[i - x0] * wy[j - y0] * self.at(i, j));
                    }
                }
            }
        }
        Ok(acc.value())
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        let wy = Self::weights(&self.y);
        (0..self.x.len())
            .map(|i| (0..self.y.len()).map(|j| wy[j] * self.at(i, j)).collect::<KahanSum>().value())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let wx = Self::weights(&self.x);
        (0..self.y.len())
            .map(|j| (0..self.x.len()).map(|i| wx[i] * self.at(i, j)).collect::<KahanSum>().value())
            .collect()
    }
}

/// `⟨k|x⟩⟨x|l⟩` smeared by a Gaussian of width `s`, for all `k, l`.
fn smeared_products(dim: usize, s: f64, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; dim * dim];
    let mut add = |weight: f64, at: f64| {
        let psi = oscillator_wavefunctions(dim - 1, at);
        for k in 0..dim {
            for l in 0..dim {
                out[k * dim + l] += weight * psi[k] * psi[l];
            }
        }
    };
    if s == 0.0 {
        add(1.0, x);
    } else {
        let rule = smearing_rule();
        for (u, w) in rule.nodes.iter().zip(&rule.weights) {
            add(w / PI.sqrt(), x + 2f64.sqrt() * s * u);
        }
    }
    out
}

/// Joint limit density of `(x_A, x_B)` at settings `(φ_A, φ_B)`:
/// `P(x, y) = Σ_{kl} c̃_k* c̃_l M^A_kl(x) M^B_kl(y)` with
/// `c̃_k = c_k e^{ik(φ_A+φ_B)}` and `M_kl` the smeared products
/// `∫ G_s(x - x') ⟨k|x'⟩⟨x'|l⟩ dx'`. At zero widths this is
/// `|Σ_k c̃_k ⟨x|k⟩⟨y|k⟩|²`.
pub fn bipartite_density_alpha_half(
    config: &BellConfig,
    x_grid: &[f64],
    y_grid: &[f64],
) -> Result<JointGridDensity> {
    check_schmidt(&config.coeffs)?;
    let dim = config.coeffs.len();
    let phi_sum = config.angles[0] + config.angles[2];
    let c: Vec<Complex64> = config
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, ck)| ck * Complex64::from_polar(1.0, k as f64 * phi_sum))
        .collect();
    let coef: Vec<f64> = (0..dim * dim)
        .map(|kl| {
            let (k, l) = (kl / dim, kl % dim);
            (c[k].conj() * c[l]).re
        })
        .collect();
    let mx: Vec<Vec<f64>> = x_grid.par_iter().map(|&x| smeared_products(dim, config.widths[0], x)).collect();
    let my: Vec<Vec<f64>> = y_grid.par_iter().map(|&y| smeared_products(dim, config.widths[1], y)).collect();
    let density: Vec<f64> = mx
        .par_iter()
        .flat_map_iter(|a| {
            my.iter().map(|b| {
                let mut acc = 0.0;
                for kl in 0..dim * dim {
                    acc += coef[kl] * a[kl] * b[kl];
                }
                acc
            })
        })
        .collect();
    let joint = JointGridDensity { x: x_grid.to_vec(), y: y_grid.to_vec(), density };
    check_boundary(&joint.marginal_x())?;
    check_boundary(&joint.marginal_y())?;
    Ok(joint)
}

/// Reduced density of either party: the mixture `Σ_k |c_k|² ⟨x|k⟩²`, smeared
/// by width `s`.
pub fn bipartite_marginal(coeffs: &[Complex64], width: f64, grid: &[f64]) -> Vec<f64> {
    let dim = coeffs.len();
    grid.iter()
        .map(|&x| {
            let m = smeared_products(dim, width, x);
            (0..dim).map(|k| coeffs[k].norm_sqr() * m[k * dim + k]).sum()
        })
        .collect()
}

/// Two-party rotor state `Σ_{kl} c_kl |k⟩|l⟩`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorPairState {
    dim: usize,
    coeffs: Vec<Complex64>,
}

impl RotorPairState {
    pub fn new(dim: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || coeffs.len() != dim * dim {
            return Err(Error::InvalidInput(format!("expected {dim}x{dim} coefficients")));
        }
        if dim > MAX_SCHMIDT_RANK {
            return Err(Error::CapExceeded { what: "rotor dimension", value: dim, cap: MAX_SCHMIDT_RANK });
        }
        check_coeffs(&coeffs)?;
        Ok(RotorPairState { dim, coeffs })
    }

    pub fn product(a: &[Complex64], b: &[Complex64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidInput("factors must share a dimension".into()));
        }
        let coeffs = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
        Self::new(a.len(), coeffs)
    }

    /// Normalized complex Gaussian coefficients.
    pub fn random(dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs: Vec<Complex64> = (0..dim * dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        coeffs.iter_mut().for_each(|c| *c /= norm);
        Self::new(dim, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.coeffs[k * self.dim + l]
    }
}

/// `⟨k|U_φ† e(θ) U_φ|m⟩ = e^{i(m-k)φ} (e^{-i(k-m)θ} + e^{i(k-m)θ}) / 2π`.
fn rotor_effect(dim: usize, phi: f64, theta: f64) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); dim * dim];
    for k in 0..dim {
        for m in 0..dim {
            let d = k as f64 - m as f64;
            e[k * dim + m] = Complex64::from_polar(1.0, -d * phi) * (2.0 * (d * theta).cos() / (2.0 * PI));
        }
    }
    e
}

/// Hidden-variable density `μ(φ₁, φ₂) = |(1/2π) Σ_{kl} c_kl e^{ik(φ_A-φ₁) + il(φ_B-φ₂)}|²`.
pub fn hidden_variable_density(state: &RotorPairState, phi_a: f64, phi_b: f64, l1: f64, l2: f64) -> f64 {
    let mut acc = ComplexKahan::new();
    for k in 0..state.dim {
        for l in 0..state.dim {
            let arg = k as f64 * (phi_a - l1) + l as f64 * (phi_b - l2);
            acc.add(state.get(k, l) * Complex64::from_polar(1.0, arg));
        }
    }
    (acc.value() / (2.0 * PI)).norm_sqr()
}

/// Quantum joint, hidden-variable joint and their discrepancies.
#[derive(Debug, Clone)]
pub struct LocalModelComparison {
    pub quantum: JointGridDensity,
    pub lhv: JointGridDensity,
    pub max_abs_difference: f64,
    pub total_variation: f64,
}

/// Compares the quantum rotor joint `tr[ρ (E_A(θ_A) ⊗ E_B(θ_B))]` with the
/// hidden-variable joint `Σ_{σ_A,σ_B = ±} μ(σ_A θ_A, σ_B θ_B)`, in which each
/// hidden angle `φ_i` deterministically yields `θ = arccos(cos φ_i)`.
pub fn local_model_alpha_one(
    state: &RotorPairState,
    phi_a: f64,
    phi_b: f64,
    theta_a: &[f64],
    theta_b: &[f64],
) -> Result<LocalModelComparison> {
    for g in [theta_a, theta_b] {
        if g.iter().any(|t| !(0.0..=PI + 1e-12).contains(t)) {
            return Err(Error::InvalidInput("rotor grid must lie in [0, pi]".into()));
        }
    }
    let d = state.dim;
    let ea: Vec<Vec<Complex64>> = theta_a.iter().map(|&t| rotor_effect(d, phi_a, t)).collect();
    let eb: Vec<Vec<Complex64>> = theta_b.iter().map(|&t| rotor_effect(d, phi_b, t)).collect();
    let quantum: Vec<f64> = ea
        .par_iter()
        .flat_map_iter(|a| {
            eb.iter().map(|b| {
                let mut acc = ComplexKahan::new();
                for k in 0..d {
                    for l in 0..d {
                        let ckl = state.get(k, l).conj();
                        for kp in 0..d {
                            let ak = a[k * d + kp];
                            for lp in 0..d {
                                acc.add(ckl * state.get(kp, lp) * ak * b[l * d + lp]);
                            }
                        }
                    }
                }
                acc.value().re
            })
        })
        .collect();
    let lhv: Vec<f64> = theta_a
        .par_iter()
        .flat_map_iter(|&ta| {
            theta_b.iter().map(move |&tb| {
                let mut s = 0.0;
                for sa in [1.0, -1.0] {
                    for sb in [1.0, -1.0] {
                        s += hidden_variable_density(state, phi_a, phi_b, sa * ta, sb * tb);
                    }
                }
                s
            })
        })
        .collect();
    let quantum = JointGridDensity { x: theta_a.to_vec(), y: theta_b.to_vec(), density: quantum };
    let lhv = JointGridDensity { x: theta_a.to_vec(), y: theta_b.to_vec(), density: lhv };
    let max_abs_difference = quantum
        .density
        .iter()
        .zip(&lhv.density)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max);
    let diff = JointGridDensity {
        x: quantum.x.clone(),
        y: quantum.y.clone(),
        density: quantum.density.iter().zip(&lhv.density).map(|(p, q)| (p - q).abs()).collect(),
    };
    let total_variation = 0.5 * diff.integral();
    Ok(LocalModelComparison { quantum, lhv, max_abs_difference, total_variation })
}

/// Exact masses of the rotor joint on the cells of an `n × n` uniform
/// partition of `[0, π]²`, from the closed-form integrals of its
/// trigonometric terms.
pub fn rotor_cell_masses(state: &RotorPairState, phi_a: f64, phi_b: f64, n_cells: usize) -> Vec<f64> {
    let d = state.dim;
    let h = PI / n_cells as f64;
    // ∫_cell (e^{-i m θ} + e^{i m θ}) dθ / 2π = ∫ 2cos(mθ) / 2π
    let cell_integrals = |phi: f64| -> Vec<Vec<Complex64>> {
        (0..n_cells)
            .map(|c| {
                let (a, b) = (c as f64 * h, (c + 1) as f64 * h);
                let mut e = vec![Complex64::new(0.0, 0.0); d * d];
                for k in 0..d {
                    for m in 0..d {
                        let diff = k as f64 - m as f64;
                        let integral =
                            if diff == 0.0 { 2.0 * (b - a) } else { 2.0 * ((diff * b).sin() - (diff * a).sin()) / diff };
                        e[k * d + m] = Complex64::from_polar(1.0, -diff * phi) * (integral / (2.0 * PI));
                    }
                }
                e
            })
            .collect()
    };
    let (ia, ib) = (cell_integrals(phi_a), cell_integrals(phi_b));
    let mut masses = vec![0.0; n_cells * n_cells];
    for (i, a) in ia.iter().enumerate() {
        for (j, b) in ib.iter().enumerate() {
            let mut acc = ComplexKahan::new();
            for k in 0..d {
                for l in 0..d {
                    let ckl = state.get(k, l).conj();
                    for kp in 0..d {
                        for lp in 0..d {
                            acc.add(ckl * state.get(kp, lp) * a[k * d + kp] * b[l * d + lp]);
                        }
                    }
                }
            }
            masses[i * n_cells + j] = acc.value().re;
        }
    }
    masses
}

/// Largest CHSH value found over random settings and random local `±1`
/// binnings of the rotor outcomes into `n_cells` cells per party. For a local
/// model this never exceeds 2.
pub fn max_binned_chsh(state: &RotorPairState, n_cells: usize, n_trials: usize, seed: u64) -> f64 {
    (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let settings: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 * PI);
            let bins: Vec<Vec<f64>> = (0..4)
                .map(|_| (0..n_cells).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
                .collect();
            let corr = |a: usize, b: usize| {
                let m = rotor_cell_masses(state, settings[a], settings[b], n_cells);
                let mut acc = KahanSum::new();
                for i in 0..n_cells {
                    for j in 0..n_cells {
                        acc.add(bins[a][i] * bins[b][j] * m[i * n_cells + j]);
                    }
                }
                acc.value()
            };
            let v = corr(0, 2) + corr(0, 3) + corr(1, 2) - corr(1, 3);
            v.abs()
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;

    fn re(v: &[f64]) -> Vec<Complex64> {
        v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    }

    #[test]
    fn sign_overlaps_match_closed_forms() {
        let t = sign_overlap_table(6);
        assert!((t.get(0, 1) - (2.0 / PI).sqrt()).abs() < 1e-12);
        assert!((t.get(1, 2) - 1.0 / PI.sqrt()).abs() < 1e-12);
        assert_eq!(t.get(0, 0), 0.0);
        for k in 0..7 {
            for l in 0..7 {
                assert_eq!(t.get(k, l), t.get(l, k));
                if (k + l) % 2 == 0 {
                    assert_eq!(t.get(k, l), 0.0);
                }
            }
        }
        let fine = response_table(6, |_| 1.0, &[], 40);
        for k in 0..7 {
            for l in 0..7 {
                assert!((fine.get(k, l) - t.get(k, l)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reference_correlator_and_chsh() {
        let c = reference_state();
        let cfg = BellConfig::projective(c.clone(), [0.0, PI / 2.0, -PI / 4.0, PI / 4.0]).unwrap();
        let want = 2.0 * 10f64.sqrt() / PI;
        assert!((chsh_value(&cfg) - want).abs() < 1e-12);
        let k = 5f64.sqrt() / PI;
        for phi_sum in [0.0, 0.3, PI / 2.0, 2.0] {
            let cfg = BellConfig::projective(c.clone(), [phi_sum, 0.0, 0.0, 0.0]).unwrap();
            assert!((correlator(&cfg, SettingPair::AB) - k * phi_sum.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_has_no_correlation() {
        let cfg = BellConfig::projective(re(&[1.0]), [0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(chsh_value(&cfg), 0.0);
        assert_eq!(optimize_chsh(&re(&[1.0])).unwrap().value, 0.0);
    }

    #[test]
    fn optimizer_finds_reference_value() {
        let opt = optimize_chsh(&reference_state()).unwrap();
        assert!((opt.value - 2.0 * 10f64.sqrt() / PI).abs() < 1e-9);
    }

    #[test]
    fn classical_table_respects_local_bound() {
        let t = ResponseTable::classical_diagonal(&[1.0, -1.0, 1.0]);
        let c = re(&[0.6, 0.0, 0.8]);
        let opt = optimize_chsh_with_tables(&c, &t, &t);
        assert!(opt.value <= 2.0 + 1e-12);
    }

    #[test]
    fn smeared_table_matches_direct_integral() {
        let s = 0.7;
        let t = smeared_sign_table(3, s);
        // direct: smear the sign-binned density P(x) = ψ0ψ1 pairs
        let grid = linspace(-20.0, 20.0, 8001);
        let h = grid[1] - grid[0];
        let w = simpson_weights(grid.len(), h);
        let v: f64 = grid
            .iter()
            .zip(&w)
            .map(|(&x, &wt)| {
                let psi = oscillator_wavefunctions(3, x);
                wt * libm::erf(x / (2f64.sqrt() * s)) * psi[1] * psi[2]
            })
            .sum();
        assert!((t.get(1, 2) - v).abs() < 1e-10);
    }

    #[test]
    fn joint_density_reproduces_correlator() {
        let c = reference_state();
        let grid = linspace(-16.0, 16.0, 641);
        for phi_sum in [0.0, 1.0] {
            let cfg = BellConfig::projective(c.clone(), [phi_sum, 0.0, 0.0, 0.0]).unwrap();
            let joint = bipartite_density_alpha_half(&cfg, &grid, &grid).unwrap();
            assert!((joint.integral() - 1.0).abs() < 1e-8);
            let want = 5f64.sqrt() / PI * phi_sum.cos();
            assert!((joint.sign_correlation().unwrap() - want).abs() < 1e-6);
            let marginal = bipartite_marginal(&c, 0.0, &grid);
            for (a, b) in joint.marginal_x().iter().zip(&marginal) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rotor_models_agree() {
        let state = RotorPairState::random(3, 11).unwrap();
        let grid = linspace(0.0, PI, 61);
        let cmp = local_model_alpha_one(&state, 0.4, -1.2, &grid, &grid).unwrap();
        assert!(cmp.max_abs_difference < 1e-12);
        assert!((cmp.quantum.integral() - 1.0).abs() < 1e-6);
        let masses = rotor_cell_masses(&state, 0.4, -1.2, 7);
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(max_binned_chsh(&state, 6, 64, 3) <= 2.0 + 1e-9);
    }
}
