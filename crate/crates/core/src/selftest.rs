//! Embedded invariant suite run by `macrobell selftest`.
//!
//! Each check is small enough that the whole suite finishes in a few seconds.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bell::{self, BellConfig, RotorPairState};
use crate::error::Result;
use crate::finite::{self, DickeSuperposition};
use crate::limit::{self, LimitState};
use crate::numeric::linspace;
use crate::operator::{AlphaMode, DerivedParams, Povm};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match run() {
        Ok((pass, detail)) => CheckResult { name, pass, detail },
        Err(e) => CheckResult { name, pass: false, detail: format!("error: {e}") },
    }
}

fn oracle_equivalence() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..6 {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=3usize).min(n + 1);
        let povm = Povm::projective_from_bloch(rng.random::<f64>() * PI, rng.random::<f64>() * 2.0 * PI);
        let params = DerivedParams::derive(&povm, AlphaMode::Half)?;
        let state = DickeSuperposition::new(n, crate::io::random_coeffs(d, rng.random()))?;
        let fast = finite::pmf_finite(&state, &povm, &params, 0.5)?;
        let slow = finite::brute_force_pmf(&state, &povm, &params, 0.5)?;
        worst = worst.max(finite::total_variation(&fast, &slow));
    }
    Ok((worst <= 1e-10, format!("max total variation {worst:.2e}")))
}

fn hermite_lemma() -> Result<(bool, String)> {
    let grid = linspace(-6.0, 6.0, 61);
    let mut worst = 0.0f64;
    for m in 0..=4 {
        for n in 0..=4 {
            for (b, g) in [(0.5, 1.0), (1.0, 1.0), (2.0, 0.5)] {
                worst = worst.max(limit::verify_hermite_lemma(m, n, b, g, &grid));
            }
        }
    }
    Ok((worst <= 1e-8, format!("max discrepancy {worst:.2e}")))
}

fn normalizations() -> Result<(bool, String)> {
    let sx = DerivedParams::derive(&Povm::sigma_x(), AlphaMode::Half)?;
    let w = LimitState::number_state(1, sx.phi, 0.7);
    let dens = limit::limit_density_alpha_half(&w, &limit::default_grid(1))?;
    let rotor = limit::limit_density_alpha_one(
        &[Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)],
        0.3,
        &limit::default_theta_grid(),
    )?;
    let errs = [(sx.tau - 1.0).abs(), (sx.sigma2 - 1.0).abs(), (dens.integral() - 1.0).abs(), (rotor.integral() - 1.0).abs()];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Ok((worst <= 1e-9, format!("max deviation {worst:.2e}")))
}

fn second_moments() -> Result<(bool, String)> {
    let s = 0.5;
    let mut worst = 0.0f64;
    for k in 0..=3 {
        let d = limit::limit_density_alpha_half(&LimitState::number_state(k, 0.0, s), &limit::default_grid(k))?;
        worst = worst.max((d.moment(2) - (2 * k + 1) as f64 - s * s).abs());
    }
    Ok((worst <= 1e-6, format!("max deviation {worst:.2e}")))
}

fn sign_overlaps() -> Result<(bool, String)> {
    let t = bell::sign_overlap_table(2);
    let e01 = (t.get(0, 1) - (2.0 / PI).sqrt()).abs();
    let e12 = (t.get(1, 2) - 1.0 / PI.sqrt()).abs();
    let worst = e01.max(e12);
    Ok((worst <= 1e-9, format!("i_01 error {e01:.2e}, i_12 error {e12:.2e}")))
}

fn chsh_value() -> Result<(bool, String)> {
    let config = BellConfig::projective(bell::reference_state(), [0.0, PI / 2.0, -PI / 4.0, PI / 4.0])?;
    let v = bell::chsh_value(&config);
    let err = (v - 2.0 * 10f64.sqrt() / PI).abs();
    Ok((err <= 1e-9, format!("value {v:.12}, error {err:.2e}")))
}

fn local_model() -> Result<(bool, String)> {
    let state = RotorPairState::random(3, 5)?;
    let grid = linspace(0.0, PI, 201);
    let cmp = bell::local_model_alpha_one(&state, 0.4, -1.1, &grid, &grid)?;
    let binned = bell::max_binned_chsh(&state, 4, 50, 5);
    let pass = cmp.total_variation <= 1e-8 && binned <= 2.0 + 1e-9;
    Ok((pass, format!("total variation {:.2e}, max binned CHSH {binned:.6}", cmp.total_variation)))
}

/// Runs every check, in a fixed order.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check("oracle_equivalence", oracle_equivalence),
        check("hermite_lemma", hermite_lemma),
        check("normalizations", normalizations),
        check("number_state_second_moments", second_moments),
        check("sign_overlaps", sign_overlaps),
        check("chsh_value", chsh_value),
        check("local_model", local_model),
    ]
}
