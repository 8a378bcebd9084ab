//! Exact Monte Carlo sampling of the collective variable, and convergence
//! statistics.
//!
//! Particles are measured one at a time. Because the state stays symmetric,
//! the unmeasured particles are described by a few amplitudes on the Dicke
//! basis `|n,k⟩`, and splitting off one particle uses
//! `|n,k⟩ = √((n-k)/n) |0⟩|n-1,k⟩ + √(k/n) |1⟩|n-1,k-1⟩`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::finite::{moments_finite, variable_scale, DickeSuperposition, LatticePmf};
use crate::operator::{DerivedParams, Mat2, Povm};

/// Largest Dicke window tracked by the sequential sampler.
pub const MAX_WINDOW: usize = 16;
/// Largest particle number accepted by the sampler.
pub const MAX_PARTICLES: usize = 1_000_000;

/// Samples of the collective variable with the seed that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub values: Vec<f64>,
    pub n_particles: usize,
    pub seed: u64,
    pub n_samples: usize,
}

/// Conditional state of the unmeasured particles, `Σ_k ψ_k |n,k⟩` on the
/// window `k < W`.
///
/// Every effect is split into rank-one pieces `E_a = Σ_j |v_aj⟩⟨v_aj|`, and
/// the sampler draws the piece rather than only the outcome. Reporting `a`
/// alone reproduces the statistics of `{E_a}` exactly, and the conditional
/// state stays pure, so it costs `O(W)` per particle instead of `O(W²)`.
#[derive(Debug, Clone)]
pub struct ReducedState {
    n: usize,
    dim: usize,
    psi: [Complex64; MAX_WINDOW],
    // branch weights √((n-k)/n) and √(k/n) for the current n
    w0: [f64; MAX_WINDOW],
    w1: [f64; MAX_WINDOW],
}

impl ReducedState {
    fn new(n: usize, amplitudes: &[Complex64]) -> Self {
        let mut psi = [Complex64::new(0.0, 0.0); MAX_WINDOW];
        psi[..amplitudes.len()].copy_from_slice(amplitudes);
        let mut s = ReducedState { n, dim: amplitudes.len(), psi, w0: [0.0; MAX_WINDOW], w1: [0.0; MAX_WINDOW] };
        s.refresh_weights();
        s
    }

    fn refresh_weights(&mut self) {
        let inv_n = 1.0 / self.n as f64;
        for k in 0..self.dim {
            self.w0[k] = (self.n.saturating_sub(k) as f64 * inv_n).sqrt();
            self.w1[k] = (k as f64 * inv_n).sqrt();
        }
    }

    pub fn remaining(&self) -> usize {
        self.n
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi[..self.dim].iter().map(|c| c.norm_sqr()).sum()
    }

    /// `(⟨v| ⊗ 1) ψ` into `out`; returns its squared norm.
    #[inline]
    fn project(&self, v: &[Complex64; 2], out: &mut [Complex64; MAX_WINDOW]) -> f64 {
        let (v0, v1) = (v[0].conj(), v[1].conj());
        let mut norm = 0.0;
        for k in 0..self.dim {
            // |n,k⟩ → √((n-k)/n) |0⟩|n-1,k⟩ + √(k/n) |1⟩|n-1,k-1⟩
            let mut amp = v0 * (self.psi[k] * self.w0[k]);
            if k + 1 < self.dim {
                amp += v1 * (self.psi[k + 1] * self.w1[k + 1]);
            }
            out[k] = amp;
            norm += amp.norm_sqr();
        }
        norm
    }

    /// Replaces `ψ` by its projection, whose squared norm is `p`. The state
    /// is left unnormalized, and rescaled only every few steps, to keep
    /// square roots and divisions off the sequential dependency chain.
    fn advance(&mut self, projected: &[Complex64; MAX_WINDOW], p: f64, step: usize) {
        self.psi[..self.dim].copy_from_slice(&projected[..self.dim]);
        if step % 32 == 31 {
            let inv = 1.0 / p.sqrt();
            for c in &mut self.psi[..self.dim] {
                *c *= inv;
            }
        }
        self.n -= 1;
        if self.n > 0 {
            self.refresh_weights();
        }
    }
}

/// `E = Σ_j |v_j⟩⟨v_j|` from the eigendecomposition of a 2×2 effect.
fn rank_one_split(e: &Mat2) -> Vec<[Complex64; 2]> {
    let (a, d) = (e.get(0, 0).re, e.get(1, 1).re);
    let b = e.get(0, 1);
    let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    let mean = 0.5 * (a + d);
    let zero = Complex64::new(0.0, 0.0);
    if b.norm() <= 1e-15 {
        return [(a, [Complex64::new(1.0, 0.0), zero]), (d, [zero, Complex64::new(1.0, 0.0)])]
            .into_iter()
            .filter(|(lambda, _)| *lambda > 1e-15)
            .map(|(lambda, u)| [u[0] * lambda.sqrt(), u[1] * lambda.sqrt()])
            .collect();
    }
    [mean + half_gap, mean - half_gap]
        .into_iter()
        .filter(|lambda| *lambda > 1e-15)
        .map(|lambda| {
            // (b, λ - a) solves the eigen-equation of [[a, b], [b*, d]]
            let raw = [b, Complex64::new(lambda - a, 0.0)];
            let scale = (lambda / (raw[0].norm_sqr() + raw[1].norm_sqr())).sqrt();
            [raw[0] * scale, raw[1] * scale]
        })
        .collect()
}

/// Window plan: amplitudes on `|N,0⟩ … |N,W-1⟩` and whether the roles of
/// `|0⟩` and `|1⟩` were swapped to make the window small.
fn plan_window(state: &DickeSuperposition) -> Result<(Vec<Complex64>, bool)> {
    let n = state.n_particles();
    let first = state.first_excitation();
    let k_max = first + state.dim() - 1;
    if k_max < MAX_WINDOW {
        let mut amp = vec![Complex64::new(0.0, 0.0); k_max + 1];
        for (k, c) in state.terms() {
            amp[k] = c;
        }
        return Ok((amp, false));
    }
    if n - first < MAX_WINDOW {
        let mut amp = vec![Complex64::new(0.0, 0.0); n - first + 1];
        for (k, c) in state.terms() {
            amp[n - k] = c;
        }
        return Ok((amp, true));
    }
    Err(Error::CapExceeded { what: "sampler Dicke window", value: k_max.min(n - first) + 1, cap: MAX_WINDOW })
}

/// Draws `n_samples` independent realizations of `X = Σ(a_i - μ)/(τ N^α)`
/// by sequential measurement. Sample `i` uses ChaCha8 stream `i` of `seed`,
/// so batches are identical for any thread count.
pub fn sample_outcomes(
    state: &DickeSuperposition,
    povm: &Povm,
    params: &DerivedParams,
    alpha: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SampleBatch> {
    let n = state.n_particles();
    if n > MAX_PARTICLES {
        return Err(Error::CapExceeded { what: "particle number", value: n, cap: MAX_PARTICLES });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("coarse-graining level {alpha} outside [0, 1]")));
    }
    let (amplitudes, flipped) = plan_window(state)?;
    let x = Mat2::pauli_x();
    // (outcome index, rank-one piece), in a fixed order
    let pieces: Vec<(usize, [Complex64; 2])> = povm
        .effects()
        .iter()
        .enumerate()
        .flat_map(|(a, e)| {
            let e = if flipped { x * *e * x } else { *e };
            rank_one_split(&e).into_iter().map(move |v| (a, v))
        })
        .collect();
    let outcomes = povm.outcomes().to_vec();
    let scale = variable_scale(params, n, alpha);
    let initial = ReducedState::new(n, &amplitudes);
    // a one-state window is |n,0⟩ throughout: particles are IID
    let iid = (amplitudes.len() == 1).then(|| {
        let mut cumulative = Vec::new();
        let mut ids = Vec::new();
        let mut acc = 0.0;
        for (a, e) in povm.effects().iter().enumerate() {
            let e = if flipped { x * *e * x } else { *e };
            let p = e.get(0, 0).re;
            if p > 0.0 {
                acc += p;
                cumulative.push(acc);
                ids.push(a);
            }
        }
        (cumulative, ids)
    });

    let values = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut state = initial.clone();
            let mut scratch = [Complex64::new(0.0, 0.0); MAX_WINDOW];
            let mut counts = vec![0u64; outcomes.len()];
            if iid.is_some() {
                let (probs, ids) = iid.as_ref().unwrap();
                for _ in 0..n {
                    let u: f64 = rng.random();
                    let j = probs.partition_point(|&c| c <= u).min(ids.len() - 1);
                    counts[ids[j]] += 1;
                }
                let intensity: f64 = counts.iter().zip(&outcomes).map(|(&c, &a)| c as f64 * a).sum();
                return (intensity - n as f64 * params.mu) / scale;
            }
            let mut norm = 1.0;
            for step in 0..n {
                // rounding drift in the norm is absorbed by the fallback below
                let u: f64 = rng.random::<f64>() * norm;
                let mut cumulative = 0.0;
                let mut drawn = None;
                for (j, (_, v)) in pieces.iter().enumerate() {
                    let p = state.project(v, &mut scratch);
                    cumulative += p;
                    if u < cumulative && p > 0.0 {
                        drawn = Some((j, p));
                        break;
                    }
                }
                let (j, p) = match drawn {
                    Some(hit) => hit,
                    None => {
                        // rounding pushed u past the last nonzero piece
                        let j = pieces
                            .iter()
                            .rposition(|(_, v)| state.project(v, &mut scratch) > 0.0)
                            .expect("conditional state has zero norm");
                        (j, state.project(&pieces[j].1, &mut scratch))
                    }
                };
                counts[pieces[j].0] += 1;
                state.advance(&scratch, p, step);
                norm = if step % 32 == 31 { 1.0 } else { p };
            }
            let intensity: f64 = counts.iter().zip(&outcomes).map(|(&c, &a)| c as f64 * a).sum();
            (intensity - n as f64 * params.mu) / scale
        })
        .collect();
    Ok(SampleBatch { values, n_particles: n, seed, n_samples })
}

/// Inverse-CDF sampling from an exact PMF, for states whose Dicke window is
/// too wide for [`sample_outcomes`]. Stream convention as there.
pub fn sample_from_pmf(pmf: &LatticePmf, n_particles: usize, n_samples: usize, seed: u64) -> SampleBatch {
    let cumulative = pmf.cumulative();
    let total = *cumulative.last().unwrap_or(&1.0);
    let values = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let u: f64 = rng.random::<f64>() * total;
            let j = cumulative.partition_point(|&c| c <= u).min(pmf.values.len() - 1);
            pmf.values[j]
        })
        .collect();
    SampleBatch { values, n_particles, seed, n_samples }
}

/// `sup_x |F_n(x) - F(x)|`, checking both sides of every jump of the
/// empirical CDF. Left limits of `cdf` are taken at the next float down.
pub fn ks_distance(values: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!values.is_empty(), "KS distance of an empty batch");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((below - cdf(v.next_down())).abs()).max((at - cdf(v)).abs());
        i = j;
    }
    d
}

pub fn ks_distance_batch(batch: &SampleBatch, cdf: impl Fn(f64) -> f64) -> f64 {
    ks_distance(&batch.values, cdf)
}

/// Pearson chi-square goodness of fit of samples to a lattice PMF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Bins samples onto the PMF support (to `1e-9`), pools cells with expected
/// count below 5, and compares against the chi-square law.
pub fn chi_square_test(values: &[f64], pmf: &LatticePmf) -> Result<ChiSquareTest> {
    let n = values.len() as f64;
    let mut observed = vec![0u64; pmf.values.len()];
    for &v in values {
        let j = pmf.values.partition_point(|&x| x < v - 1e-9 * v.abs().max(1.0));
        if j >= pmf.values.len() || (pmf.values[j] - v).abs() > 1e-9 * v.abs().max(1.0) {
            return Err(Error::InvalidInput(format!("sample {v} is off the PMF support")));
        }
        observed[j] += 1;
    }
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (o, p) in observed.iter().zip(&pmf.probs) {
        let e = p * n;
        if e >= 5.0 {
            cells.push((*o as f64, e));
        } else {
            pool_o += *o as f64;
            pool_e += e;
        }
    }
    if pool_e > 0.0 {
        if pool_e >= 5.0 || cells.is_empty() {
            cells.push((pool_o, pool_e));
        } else {
            let last = cells.last_mut().unwrap();
            last.0 += pool_o;
            last.1 += pool_e;
        }
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let law = ChiSquared::new(dof as f64).map_err(|e| Error::Numerical(e.to_string()))?;
        law.sf(statistic)
    };
    Ok(ChiSquareTest { statistic, dof, p_value })
}

/// Growth exponent `β` of `Var(I) ∝ N^{2β}`, from the least-squares slope of
/// `ln Var(I)` against `ln N`. Returns `-∞` when any variance vanishes.
pub fn scaling_exponent(
    family: impl Fn(usize) -> Result<DickeSuperposition>,
    povm: &Povm,
    params: &DerivedParams,
    ns: &[usize],
) -> Result<f64> {
    if ns.len() < 4 {
        return Err(Error::InvalidInput("need at least 4 particle numbers".into()));
    }
    let (lo, hi) = povm.outcomes().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &a| (l.min(a), h.max(a)));
    let mut points = Vec::with_capacity(ns.len());
    for &n in ns {
        let state = family(n)?;
        // α = 0 gives X = (I - Nμ)/τ
        let var_i = moments_finite(&state, povm, params, 0.0)?.variance() * params.tau * params.tau;
        // relative to the largest possible variance, (N · span)² / 4
        let ceiling = 0.25 * (n as f64 * (hi - lo)).powi(2);
        if var_i <= 1e-10 * ceiling {
            return Ok(f64::NEG_INFINITY);
        }
        points.push(((n as f64).ln(), var_i.ln()));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx / 2.0)
}
