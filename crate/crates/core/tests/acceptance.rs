//! Exit criteria. Prints one PASS/FAIL line per criterion and exits nonzero
//! if any fails. Tolerances are fixed here.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use macrobell::bell::{self, BellConfig, RotorPairState};
use macrobell::finite::{self, DickeSuperposition};
use macrobell::limit::{self, LimitState};
use macrobell::noise::{self, NoiseSpec};
use macrobell::numeric::{linspace, simpson};
use macrobell::operator::{AlphaMode, DerivedParams, Povm};
use macrobell::sampler;
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sx() -> (Povm, DerivedParams) {
    let povm = Povm::sigma_x();
    let params = DerivedParams::derive(&povm, AlphaMode::Half).unwrap();
    (povm, params)
}

fn chsh_reproduction() -> Outcome {
    let start = Instant::now();
    let config = BellConfig::projective(bell::reference_state(), [0.0, PI / 2.0, -PI / 4.0, PI / 4.0]).unwrap();
    let value = bell::chsh_value(&config);
    let best = bell::optimize_chsh(&bell::reference_state()).unwrap();
    let elapsed = start.elapsed();
    let err = (value - reference_value()).abs();
    let pass = err <= 1e-9 && best.value >= reference_value() - 1e-6 && elapsed < Duration::from_secs(1);
    outcome(pass, format!("value error {err:.1e}, optimum {:.10}, {elapsed:.2?}", best.value))
}

fn sign_overlaps() -> Outcome {
    let table = bell::sign_overlap_table(10);
    let e01 = (table.get(0, 1) - (2.0 / PI).sqrt()).abs();
    let e12 = (table.get(1, 2) - 1.0 / PI.sqrt()).abs();
    let parity_zero = (0..=10).all(|k| (0..=10).filter(|l| (k + l) % 2 == 0).all(|l| table.get(k, l) == 0.0));
    outcome(e01 <= 1e-9 && e12 <= 1e-9 && parity_zero, format!("i_01 error {e01:.1e}, i_12 error {e12:.1e}, parity zeros exact: {parity_zero}"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let (mut worst_tv, mut worst_chi) = (0.0f64, 0.0f64);
    let mut r = rng(2718);
    for _ in 0..50 {
        let n = r.random_range(1..=12);
        let d = r.random_range(1..=4usize).min(n + 1);
        let povm = random_binary_povm(&mut r);
        let params = DerivedParams::derive(&povm, AlphaMode::Half).unwrap();
        let state = DickeSuperposition::new(n, random_unit(&mut r, d)).unwrap();
        let fast = finite::pmf_finite(&state, &povm, &params, 0.5).unwrap();
        let slow = finite::brute_force_pmf(&state, &povm, &params, 0.5).unwrap();
        worst_tv = worst_tv.max(finite::total_variation(&fast, &slow));
        for t in linspace(-5.0, 5.0, 21) {
            let a = finite::char_fn_finite(&state, &povm, &params, 0.5, t).unwrap();
            let b = finite::brute_force_char_fn(&state, &povm, &params, 0.5, t).unwrap();
            worst_chi = worst_chi.max((a - b).norm());
        }
    }
    let elapsed = start.elapsed();
    let pass = worst_tv <= 1e-10 && worst_chi <= 1e-10 && elapsed < Duration::from_secs(120);
    outcome(pass, format!("max total variation {worst_tv:.1e}, max char fn gap {worst_chi:.1e}, {elapsed:.2?}"))
}

fn w_state_law() -> Outcome {
    let (povm, params) = sx();
    let ts = linspace(-5.0, 5.0, 201);
    let errors: Vec<f64> = [125, 250, 500, 1000, 2000]
        .iter()
        .map(|&n| {
            let state = DickeSuperposition::w_state(n).unwrap();
            ts.iter()
                .map(|&t| {
                    let limit = (-t * t / 2.0).exp() * (1.0 - t * t);
                    (finite::char_fn_finite(&state, &povm, &params, 0.5, t).unwrap() - limit).norm()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    let pass = errors[4] <= 0.01 && monotone;
    outcome(pass, format!("max errors {:?}", errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()))
}

fn hermite_lemma() -> Outcome {
    let grid = linspace(-10.0, 10.0, 201);
    let widths = [0.5, 1.0, 2.0];
    let mut worst = 0.0f64;
    for m in 0..=6 {
        for n in 0..=m {
            for &b in &widths {
                for &g in &widths {
                    worst = worst.max(limit::verify_hermite_lemma(m, n, b, g, &grid));
                }
            }
        }
    }
    outcome(worst <= 1e-8, format!("max discrepancy {worst:.1e}"))
}

fn limit_structure() -> Outcome {
    // composition against a direct Simpson convolution of the sharp density
    let coeffs = vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)];
    let s = 0.8;
    let grid = linspace(-18.0, 18.0, 7201);
    let h = grid[1] - grid[0];
    let sharp = limit::limit_density_alpha_half(&LimitState::new(coeffs.clone(), 1.1, 0.0).unwrap(), &grid).unwrap();
    let smeared = limit::limit_density_alpha_half(&LimitState::new(coeffs, 1.1, s).unwrap(), &grid).unwrap();
    let mut composition = 0.0f64;
    for i in (0..grid.len()).step_by(30) {
        let x = grid[i];
        let g = |u: f64| (-0.5 * (u / s).powi(2)).exp() / ((2.0 * PI).sqrt() * s);
        let integrand: Vec<f64> = grid.iter().zip(&sharp.density).map(|(xp, p)| g(x - xp) * p).collect();
        composition = composition.max((simpson(&integrand, h) - smeared.density[i]).abs());
    }
    let mut moment = 0.0f64;
    for k in 0..=4 {
        for s in [0.0, 0.5, 1.0] {
            let d = limit::limit_density_alpha_half(&LimitState::number_state(k, 0.3, s), &limit::default_grid(k)).unwrap();
            moment = moment.max((d.moment(2) - (2 * k + 1) as f64 - s * s).abs());
        }
    }
    outcome(composition <= 1e-8 && moment <= 1e-6, format!("composition error {composition:.1e}, second moment error {moment:.1e}"))
}

fn loss_formula() -> Outcome {
    let (povm, params) = sx();
    let rotated = Povm::projective_from_bloch(PI / 3.0, 0.4);
    let rp = DerivedParams::derive(&rotated, AlphaMode::Half).unwrap();
    let mut closed = true;
    for q in [&params, &rp] {
        for p in [0.2, 0.5, 0.8, 1.0] {
            let want = if p == 1.0 { q.s2 } else { q.sigma2 / (p * p * p * q.tau * q.tau) - 1.0 };
            closed &= noise::loss_width(q, p).unwrap() == want;
        }
    }
    let state = DickeSuperposition::w_state(2000).unwrap();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for p in [0.5, 0.8] {
        let lossy = noise::lossy_povm(&povm, params.mu, p).unwrap();
        let m2 = finite::pmf_finite(&state, &lossy, &params, 0.5).unwrap().moments().second_moment();
        // W limit: Born second moment 3 plus the squared width
        let implied = 3.0 + noise::loss_width(&params, p).unwrap();
        let received = 3.0 + noise::loss_width_received_count(&params, p).unwrap();
        let rel = (m2 / implied - 1.0).abs();
        worst = worst.max(rel);
        detail.push(format!("p={p}: finite {m2:.4}, cubic-law limit {implied:.4} ({:.1}% off), received-count limit {received:.4}", 100.0 * rel));
    }
    outcome(closed && worst <= 0.05, format!("closed form exact: {closed}; {}", detail.join("; ")))
}

fn channel_closed_forms() -> Outcome {
    let (povm, _) = sx();
    let n = 2000;
    let w = DickeSuperposition::w_state(n).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let equal = DickeSuperposition::new(n, real(&[h, h])).unwrap();
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for (name, depol) in [("depolarizing", true), ("dephasing", false)] {
        for lambda in [0.1, 0.3] {
            let spec = if depol {
                NoiseSpec { depol_lambda: lambda, ..NoiseSpec::default() }
            } else {
                NoiseSpec { dephase_lambda: lambda, ..NoiseSpec::default() }
            };
            let eff = noise::noisy_limit_params(&povm, &spec).unwrap();
            let noisy = if depol { noise::depolarize_povm(&povm, lambda) } else { noise::dephase_povm(&povm, lambda) }.unwrap();
            let params = DerivedParams::derive(&noisy, AlphaMode::Half).unwrap();
            // width from the W-state second moment, 3 + s'²
            let s2 = finite::pmf_finite(&w, &noisy, &params, 0.5).unwrap().moments().second_moment() - 3.0;
            let width_err = (s2 / eff.s2 - 1.0).abs();
            // phase from the mean of (|0⟩ + |1⟩)/√2 against the limit law at (s', φ')
            let mean = finite::pmf_finite(&equal, &noisy, &params, 0.5).unwrap().moments().mean();
            let limit_state = LimitState::new(real(&[h, h]), eff.phi, eff.s()).unwrap();
            let limit_mean = {
                let half = 14.0 + 8.0 * eff.s();
                limit::limit_density_alpha_half(&limit_state, &linspace(-half, half, 8001)).unwrap().moment(1)
            };
            let mean_err = (mean / limit_mean - 1.0).abs();
            worst = worst.max(width_err).max(mean_err);
            detail.push(format!("{name} {lambda}: s'² {:.4} vs {s2:.4}, mean {limit_mean:.4} vs {mean:.4}", eff.s2));
        }
    }
    outcome(worst <= 0.05, format!("max relative error {:.2}%; {}", 100.0 * worst, detail.join("; ")))
}

fn alpha_one_branch() -> Outcome {
    let mut r = rng(99);
    let theta = limit::default_theta_grid();
    let mut norm = 0.0f64;
    for d in 1..=4 {
        let coeffs = random_unit(&mut r, d);
        let dens = limit::limit_density_alpha_one(&coeffs, r.random::<f64>() * 2.0 * PI, &theta).unwrap();
        norm = norm.max((dens.integral() - 1.0).abs());
    }
    let grid = linspace(0.0, PI, 201);
    let (mut tv, mut chsh) = (0.0f64, f64::NEG_INFINITY);
    for i in 0..20u64 {
        let dim = 1 + (i as usize % 4);
        let state = RotorPairState::random(dim, 1000 + i).unwrap();
        let (pa, pb) = (r.random::<f64>() * 2.0 * PI, r.random::<f64>() * 2.0 * PI);
        tv = tv.max(bell::local_model_alpha_one(&state, pa, pb, &grid, &grid).unwrap().total_variation);
        chsh = chsh.max(bell::max_binned_chsh(&state, 6, 200, 2000 + i));
    }
    let pass = norm <= 1e-9 && tv <= 1e-8 && chsh <= 2.0 + 1e-9;
    outcome(pass, format!("normalization error {norm:.1e}, max total variation {tv:.1e}, max binned CHSH {chsh:.6}"))
}

fn sampler_fidelity() -> Outcome {
    let start = Instant::now();
    // chi-square against exact PMFs, Bonferroni over the cases
    let cases = 12;
    let mut r = rng(4242);
    let mut min_p = 1.0f64;
    for case in 0..cases {
        let n = r.random_range(2..=12);
        let d = r.random_range(1..=3usize).min(n + 1);
        let povm = random_binary_povm(&mut r);
        let params = DerivedParams::derive(&povm, AlphaMode::Half).unwrap();
        let state = DickeSuperposition::new(n, random_unit(&mut r, d)).unwrap();
        let pmf = finite::pmf_finite(&state, &povm, &params, 0.5).unwrap();
        let batch = sampler::sample_outcomes(&state, &povm, &params, 0.5, 50_000, case).unwrap();
        min_p = min_p.min(sampler::chi_square_test(&batch.values, &pmf).unwrap().p_value);
    }
    let chi_ok = min_p > 1e-6 / cases as f64;

    let (povm, params) = sx();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut ks_all = Vec::new();
    for (coeffs, first) in [(real(&[1.0]), 1usize), (real(&[1.0]), 2), (real(&[h, h]), 0)] {
        let mut padded = vec![Complex64::new(0.0, 0.0); first];
        padded.extend(&coeffs);
        let ls = LimitState::new(padded, params.phi, params.width()).unwrap();
        let cdf = limit::limit_density_alpha_half(&ls, &limit::default_grid(ls.k_max())).unwrap().cdf_table();
        let state = DickeSuperposition::with_offset(800, first, coeffs).unwrap();
        let batch = sampler::sample_outcomes(&state, &povm, &params, 0.5, 100_000, 17).unwrap();
        ks_all.push(sampler::ks_distance_batch(&batch, |x| cdf.eval(x)));
    }
    let ks_ok = ks_all.iter().all(|&k| k <= 0.05);

    let state = DickeSuperposition::new(500, real(&[0.6, 0.0, 0.8])).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sampler::sample_outcomes(&state, &povm, &params, 0.5, 5_000, 3).unwrap())
    };
    let (a, b) = (run(1), run(4));
    let exact = a.values.iter().zip(&b.values).all(|(x, y)| x.to_bits() == y.to_bits());
    let elapsed = start.elapsed();
    let pass = chi_ok && ks_ok && exact && elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!("min chi-square p {min_p:.2e}, KS at N=800 {:?}, bit-exact across threads: {exact}, {elapsed:.1?}", ks_all.iter().map(|k| format!("{k:.4}")).collect::<Vec<_>>()),
    )
}

fn scaling_rule() -> Outcome {
    let (povm, params) = sx();
    let ns = [100, 200, 400, 800, 1600, 3200];
    let product = sampler::scaling_exponent(|n| DickeSuperposition::dicke(n, 0), &povm, &params, &ns).unwrap();
    let w = sampler::scaling_exponent(DickeSuperposition::w_state, &povm, &params, &ns).unwrap();
    outcome((product - 0.5).abs() <= 0.01 && (w - 0.5).abs() <= 0.01, format!("product {product:.5}, W {w:.5}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("CHSH reproduction", chsh_reproduction),
        ("sign overlaps", sign_overlaps),
        ("oracle equivalence", oracle_equivalence),
        ("W-state law", w_state_law),
        ("Hermite lemma", hermite_lemma),
        ("limit-density structure", limit_structure),
        ("loss formula", loss_formula),
        ("channel closed forms", channel_closed_forms),
        ("alpha=1 branch", alpha_one_branch),
        ("sampler fidelity", sampler_fidelity),
        ("scaling rule", scaling_rule),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        failed += !o.pass as usize;
        println!("{} criterion {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
