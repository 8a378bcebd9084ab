#![allow(dead_code)]

use macrobell::operator::{Mat2, Povm};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| c(x, 0.0)).collect()
}

pub fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..d).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|z| *z /= n);
    v
}

/// `U diag(l0, l1) U†` for a random unitary `U` built from a unit vector.
pub fn random_effect(rng: &mut ChaCha8Rng, l0: f64, l1: f64) -> Mat2 {
    let u = random_unit(rng, 2);
    let (a, b) = (u[0], u[1]);
    // columns (a, b) and (-b*, a*)
    let col = [[a, -b.conj()], [b, a.conj()]];
    let mut m = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = col[i][0] * col[j][0].conj() * l0 + col[i][1] * col[j][1].conj() * l1;
        }
    }
    Mat2(m)
}

/// Binary POVM `{E, I - E}` with random eigenvalues in [0, 1] and distinct
/// random outcomes.
pub fn random_binary_povm(rng: &mut ChaCha8Rng) -> Povm {
    let (l0, l1) = (rng.random::<f64>(), rng.random::<f64>());
    let e = random_effect(rng, l0, l1);
    let a0 = rng.random_range(-2.0..2.0);
    let a1 = a0 + rng.random_range(0.2..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    Povm::new(vec![a0, a1], vec![e, Mat2::identity() - e]).expect("valid POVM")
}

pub fn reference_value() -> f64 {
    2.0 * 10f64.sqrt() / std::f64::consts::PI
}
