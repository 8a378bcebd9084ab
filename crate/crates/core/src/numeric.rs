//! Quadrature rules, compensated summation and small numeric helpers shared
//! by the engines.

use num_complex::Complex64;


/// Neumaier-compensated accumulator for real sums.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated complex accumulator (componentwise Neumaier).
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexKahan {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahan {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().collect::<KahanSum>().value()
}

/// `ln C(n, k)`; exact-product path for small `min(k, n-k)`, log-gamma otherwise.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k <= 64 {
        let mut s = KahanSum::new();
        for i in 1..=k {
            s.add(((n - k + i) as f64 / i as f64).ln());
        }
        s.value()
    } else {
        libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    if n <= 20 {
        (2..=n).map(|i| (i as f64).ln()).sum()
    } else {
        libm::lgamma(n as f64 + 1.0)
    }
}

pub fn factorial(n: u32) -> f64 {
    (2..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Integer power by repeated squaring; `0^0 = 1`.
pub fn cpowi(z: Complex64, mut n: u64) -> Complex64 {
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base *= base;
        }
    }
    acc
}

/// Nodes and weights of an n-point rule, nodes ascending.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .collect::<KahanSum>()
            .value()
    }

    /// Affine map of a rule on [-1, 1] to [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> QuadratureRule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        QuadratureRule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }
}

/// Gauss–Hermite rule for weight `e^{-x²}` via Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> QuadratureRule {
    assert!(n >= 1);
    const PIM4: f64 = 0.751_125_544_464_942_5; // π^{-1/4}
    let nf = n as f64;
    // Golub–Welsch eigenvalues seed Newton on the orthonormal recurrence,
    // which then also yields weights with full relative accuracy.
    let jacobi = nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut seeds: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    seeds.sort_by(f64::total_cmp);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for seed in seeds {
        let mut z = seed;
        let mut pp = 1.0;
        for _ in 0..8 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let step = p1 / pp;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes.push(z);
        weights.push(2.0 / (pp * pp));
    }
    // exact symmetry
    for i in 0..n / 2 {
        let x = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        let w = 0.5 * (weights[n - 1 - i] + weights[i]);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    QuadratureRule { nodes, weights }
}

/// Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    assert!(n >= 1);
    let nf = n as f64;
    let m = n.div_ceil(2);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    QuadratureRule { nodes: x, weights: w }
}

/// Composite Gauss–Legendre on [a, b] with `panels` equal panels of `order` nodes.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, order: usize) -> QuadratureRule {
    let base = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let r = base.mapped(lo, lo + h);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    QuadratureRule { nodes, weights }
}

/// Composite Simpson weights for `n` equally spaced samples with spacing `h`.
/// An even sample count closes with a 3/8 rule on the last four points.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2);
    let mut w = vec![0.0; n];
    if n == 2 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return w;
    }
    if n == 4 {
        for (i, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[i] = 3.0 * h / 8.0 * c;
        }
        return w;
    }
    let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if n % 2 == 0 {
        let s = n - 4;
        for (j, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[s + j] += 3.0 * h / 8.0 * c;
        }
    }
    w
}

pub fn simpson(y: &[f64], h: f64) -> f64 {
    simpson_weights(y.len(), h)
        .iter()
        .zip(y)
        .map(|(w, v)| w * v)
        .collect::<KahanSum>()
        .value()
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .collect::<KahanSum>()
        .value()
}

/// Running trapezoid integral, starting at 0.
pub fn cumulative_trapezoid(x: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut acc = KahanSum::new();
    out.push(0.0);
    for i in 1..x.len() {
        acc.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
        out.push(acc.value());
    }
    out
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + i as f64 * h }).collect()
        }
    }
}

pub fn is_uniform(x: &[f64]) -> bool {
    if x.len() < 3 {
        return true;
    }
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    x.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs())
}

/// Four-point Lagrange interpolation on a uniform grid; zero outside.
pub fn interp_uniform_cubic(x0: f64, h: f64, y: &[f64], x: f64) -> f64 {
    let n = y.len();
    let u = (x - x0) / h;
    if u < -1e-12 || u > (n - 1) as f64 + 1e-12 {
        return 0.0;
    }
    let i = (u.floor() as isize).clamp(1, n as isize - 3) as usize;
    if n < 4 {
        let j = (u.round() as usize).min(n - 1);
        return y[j];
    }
    let t = u - i as f64;
    let (ym1, y0, y1, y2) = (y[i - 1], y[i], y[i + 1], y[i + 2]);
    let l_m1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let l_0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let l_1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let l_2 = (t + 1.0) * t * (t - 1.0) / 6.0;
    ym1 * l_m1 + y0 * l_0 + y1 * l_1 + y2 * l_2
}

/// Linear interpolation on an increasing grid, clamped to the end values.
pub fn interp_linear(x: &[f64], y: &[f64], at: f64) -> f64 {
    if at <= x[0] {
        return y[0];
    }
    if at >= x[x.len() - 1] {
        return y[y.len() - 1];
    }
    let i = x.partition_point(|&v| v <= at) - 1;
    let t = (at - x[i]) / (x[i + 1] - x[i]);
    y[i] + t * (y[i + 1] - y[i])
}
