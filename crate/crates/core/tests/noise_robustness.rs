mod common;

use std::f64::consts::PI;

use common::*;
use macrobell::bell::{self, BellConfig, JointGridDensity};
use macrobell::finite::{self, DickeSuperposition};
use macrobell::limit::{self, LimitState};
use macrobell::noise::{self, NoiseShape};
use macrobell::numeric::{linspace, simpson};
use macrobell::operator::{AlphaMode, DerivedParams, Povm};

const ANGLES: [f64; 4] = [0.0, PI / 2.0, -PI / 4.0, PI / 4.0];

/// Convolves one axis of the joint density with the noise density by Simpson
/// over `[-ε, ε]`, whose endpoints are grid nodes.
fn smear_axis(joint: &JointGridDensity, eps: f64, shape: NoiseShape, along_x: bool) -> JointGridDensity {
    let h = joint.x[1] - joint.x[0];
    let m = (eps / h).round() as usize;
    assert!(m % 2 == 0 && ((m as f64) * h - eps).abs() < 1e-12);
    let kernel: Vec<f64> = (0..=2 * m).map(|j| noise::noise_density(shape, eps, -eps + j as f64 * h)).collect();
    let n = joint.x.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let vals: Vec<f64> = (0..=2 * m)
                .map(|q| {
                    // r = -ε + q h, sample the density at (index - r/h)
                    let shift = m as isize - q as isize;
                    let (a, b) = if along_x { (i as isize + shift, j as isize) } else { (i as isize, j as isize + shift) };
                    if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                        0.0
                    } else {
                        kernel[q] * joint.at(a as usize, b as usize)
                    }
                })
                .collect();
            out[i * n + j] = simpson(&vals, h);
        }
    }
    JointGridDensity { x: joint.x.clone(), y: joint.y.clone(), density: out }
}

fn chsh_by_density(s: f64, eps: f64, shape: NoiseShape) -> f64 {
    let grid = linspace(-12.0, 12.0, 601);
    let e = |a: f64, b: f64| {
        let config = BellConfig::new(bell::reference_state(), [a, 0.0, b, 0.0], [s, s]).unwrap();
        let mut joint = bell::bipartite_density_alpha_half(&config, &grid, &grid).unwrap();
        if eps > 0.0 {
            joint = smear_axis(&smear_axis(&joint, eps, shape, true), eps, shape, false);
        }
        joint.sign_correlation().unwrap()
    };
    let [a, ap, b, bp] = ANGLES;
    e(a, b) + e(a, bp) + e(ap, b) - e(ap, bp)
}

#[test]
fn sweep_matches_smeared_joint_density() {
    let s_grid = [0.0, 0.5];
    let eps_grid = [0.0, 0.4];
    for shape in [NoiseShape::Uniform, NoiseShape::TruncatedGaussian] {
        let sweep = noise::noisy_chsh_sweep(&bell::reference_state(), &s_grid, &eps_grid, shape, Some(ANGLES)).unwrap();
        for cell in &sweep.cells {
            let direct = chsh_by_density(cell.s, cell.eps, shape);
            assert!((cell.chsh - direct).abs() <= 1e-5, "{shape:?} s {} eps {}: {} vs {direct}", cell.s, cell.eps, cell.chsh);
        }
    }
}

#[test]
fn violation_survives_small_noise_and_decays_with_width() {
    let s_grid = linspace(0.0, 0.08, 5);
    let eps_grid = linspace(0.0, 0.08, 5);
    let sweep = noise::noisy_chsh_sweep(&bell::reference_state(), &s_grid, &eps_grid, NoiseShape::Uniform, None).unwrap();
    assert!((sweep.cells[0].chsh - reference_value()).abs() <= 1e-6);
    assert!(sweep.monotone_in_s);
    assert!(sweep.cells.iter().any(|c| c.s > 0.0 && c.eps > 0.0 && c.chsh > 2.0));
    for row in sweep.cells.chunks(s_grid.len()) {
        assert!(row.windows(2).all(|w| w[1].chsh <= w[0].chsh + 1e-9));
    }
}

#[test]
fn classical_noise_moments() {
    let grid = linspace(-12.0, 12.0, 2401);
    let d = limit::limit_density_alpha_half(&LimitState::number_state(0, 0.0, 0.0), &grid).unwrap();
    assert_eq!(noise::convolve_classical_noise(&d, 0.0, NoiseShape::Uniform).unwrap(), d);
    let eps = 0.8;
    // variance of the truncated Gaussian noise, by quadrature
    let r = linspace(-eps, eps, 2001);
    let dens: Vec<f64> = r.iter().map(|&x| x * x * noise::noise_density(NoiseShape::TruncatedGaussian, eps, x)).collect();
    let tg_var = simpson(&dens, r[1] - r[0]);
    for (shape, extra) in [(NoiseShape::Uniform, eps * eps / 3.0), (NoiseShape::TruncatedGaussian, tg_var)] {
        let out = noise::convolve_classical_noise(&d, eps, shape).unwrap();
        assert!((out.integral() - 1.0).abs() <= 1e-9);
        assert!((out.moment(2) - 1.0 - extra).abs() <= 1e-8, "{shape:?}: {}", out.moment(2));
    }
}

/// `E[X²] = -χ''(0)` by a central difference.
fn second_moment(chi: impl Fn(f64) -> f64, h: f64) -> f64 {
    -(chi(h) - 2.0 * chi(0.0) + chi(-h)) / (h * h)
}

#[test]
fn lossy_second_moment_counts_received_particles() {
    let povm = Povm::sigma_x();
    let params = DerivedParams::derive(&povm, AlphaMode::Half).unwrap();
    let state = DickeSuperposition::w_state(2000).unwrap();
    for p in [0.5, 0.8] {
        let chi = |t: f64| noise::loss_char_fn_finite(&state, &povm, &params, p, t, 0.5).unwrap().re;
        let m2 = second_moment(chi, 1e-3);
        // W limit: x² under Born density is 3, smearing adds the width squared
        let received = 3.0 + noise::loss_width_received_count(&params, p).unwrap();
        assert!((m2 / received - 1.0).abs() <= 0.02, "p {p}: {m2} vs {received}");
        // the same variable through the lossy POVM and the exact PMF
        let lossy = noise::lossy_povm(&povm, params.mu, p).unwrap();
        let pmf = finite::pmf_finite(&state, &lossy, &params, 0.5).unwrap();
        assert!((pmf.moments().second_moment() - m2).abs() <= 1e-4 * m2);
    }
    let chi1 = noise::loss_char_fn_finite(&state, &povm, &params, 1.0, 0.7, 0.5).unwrap();
    let chi = finite::char_fn_finite(&state, &povm, &params, 0.5, 0.7).unwrap();
    assert!((chi1 - chi).norm() <= 1e-12);
    assert_eq!(noise::loss_char_fn_finite(&state, &povm, &params, 0.3, 0.0, 0.5).unwrap(), c(1.0, 0.0));
}
