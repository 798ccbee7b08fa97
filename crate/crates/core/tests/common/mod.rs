//! Brute-force oracles shared by the integration tests. Nothing here calls
//! into the library's numerics; the only library items used are the data
//! containers and the random streams that feed instance generators.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use pivotal::linear::Dataset;
use pivotal::numerics::{DrawLaw, RngStream};

pub type Matrix = Vec<Vec<f64>>;

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Bisection for an increasing function, run until the bracket stops
/// shrinking.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    assert!(f(lo) <= 0.0 && f(hi) >= 0.0, "bisection bracket has no sign change");
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

const SHIFT: usize = 1000;

/// ln Γ(x) = ln Γ(x + 30) − Σ ln(x + k), with the Stirling series at x + 30.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    let mut z = x;
    while z < 30.0 {
        shift += z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2)
        - 1.0 / (1680.0 * z * z2 * z2 * z2);
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series - shift
}

/// ψ(x) = lim {ln N − Σ_{k<N} 1/(x + k)}, truncated at N = 1000 with the
/// asymptotic tail of ψ(x + N).
pub fn digamma(x: f64) -> f64 {
    let z = x + SHIFT as f64;
    let z2 = z * z;
    let tail = z.ln() - 0.5 / z - 1.0 / (12.0 * z2) + 1.0 / (120.0 * z2 * z2)
        - 1.0 / (252.0 * z2 * z2 * z2);
    let sum: f64 = (0..SHIFT).rev().map(|k| 1.0 / (x + k as f64)).sum();
    tail - sum
}

/// ψ′(x) = Σ_{k≥0} 1/(x + k)², with the tail beyond N = 1000 bounded by its
/// Euler–Maclaurin expansion.
pub fn trigamma(x: f64) -> f64 {
    let z = x + SHIFT as f64;
    let z2 = z * z;
    let tail = 1.0 / z + 0.5 / z2 + 1.0 / (6.0 * z * z2) - 1.0 / (30.0 * z * z2 * z2)
        + 1.0 / (42.0 * z * z2 * z2 * z2);
    let sum: f64 = (0..SHIFT)
        .rev()
        .map(|k| {
            let t = x + k as f64;
            1.0 / (t * t)
        })
        .sum();
    tail + sum
}

pub fn kappa(phi: f64) -> f64 {
    ln_gamma(phi) - phi * phi.ln() + phi
}

pub fn kappa_prime(phi: f64) -> f64 {
    digamma(phi) - phi.ln()
}

pub fn kappa_second(phi: f64) -> f64 {
    trigamma(phi) - 1.0 / phi
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Φ(x) by quadrature of the density from 0.
pub fn normal_cdf(x: f64) -> f64 {
    let half = simpson(&normal_density, 0.0, x.abs(), 1e-15);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// P(k, x) by quadrature after t = s², which keeps the integrand smooth
/// for k ≥ 1/2.
pub fn lower_gamma(k: f64, x: f64) -> f64 {
    let norm = ln_gamma(k);
    let f = |s: f64| {
        if s == 0.0 {
            if k == 0.5 {
                2.0 * (-norm).exp()
            } else {
                0.0
            }
        } else {
            2.0 * ((2.0 * k - 1.0) * s.ln() - s * s - norm).exp()
        }
    };
    simpson(&f, 0.0, x.sqrt(), 1e-14)
}

pub fn chisq_density(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let h = 0.5 * df;
    ((h - 1.0) * x.ln() - 0.5 * x - h * 2f64.ln() - ln_gamma(h)).exp()
}

pub fn t_density(x: f64, df: f64) -> f64 {
    let c = ln_gamma(0.5 * (df + 1.0)) - ln_gamma(0.5 * df) - 0.5 * (df * std::f64::consts::PI).ln();
    (c - 0.5 * (df + 1.0) * (1.0 + x * x / df).ln()).exp()
}

pub fn f_density(x: f64, d1: f64, d2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_beta = ln_gamma(0.5 * d1) + ln_gamma(0.5 * d2) - ln_gamma(0.5 * (d1 + d2));
    (0.5 * d1 * (d1 / d2).ln() + (0.5 * d1 - 1.0) * x.ln()
        - 0.5 * (d1 + d2) * (1.0 + d1 * x / d2).ln()
        - ln_beta)
        .exp()
}

pub fn chisq_cdf(x: f64, df: f64) -> f64 {
    simpson(&|t| chisq_density(t, df), 0.0, x, 1e-13)
}

pub fn t_cdf(x: f64, df: f64) -> f64 {
    let half = simpson(&|t| t_density(t, df), 0.0, x.abs(), 1e-13);
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

pub fn f_cdf(x: f64, d1: f64, d2: f64) -> f64 {
    simpson(&|t| f_density(t, d1, d2), 0.0, x, 1e-13)
}

pub fn zeros(r: usize, c: usize) -> Matrix {
    vec![vec![0.0; c]; r]
}

pub fn transpose(a: &Matrix) -> Matrix {
    let mut t = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            t[j][i] = *v;
        }
    }
    t
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut c = zeros(a.len(), b[0].len());
    for i in 0..a.len() {
        for j in 0..b[0].len() {
            let mut s = 0.0;
            for k in 0..b.len() {
                s += a[i][k] * b[k][j];
            }
            c[i][j] = s;
        }
    }
    c
}

pub fn matvec(a: &Matrix, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

/// Gauss–Jordan inverse with partial pivoting.
pub fn inverse(a: &Matrix) -> Matrix {
    let n = a.len();
    let mut aug: Matrix = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for row in 0..n {
            if row != col {
                let factor = aug[row][col];
                for k in 0..2 * n {
                    aug[row][k] -= factor * aug[col][k];
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Determinant by cofactor expansion along the first row.
pub fn determinant(a: &Matrix) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    let mut total = 0.0;
    for j in 0..n {
        let minor: Matrix = a[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(k, _)| *k != j)
                    .map(|(_, v)| *v)
                    .collect()
            })
            .collect();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * a[0][j] * determinant(&minor);
    }
    total
}

pub fn rows_of(x: &DMatrix<f64>) -> Matrix {
    (0..x.nrows())
        .map(|i| (0..x.ncols()).map(|j| x[(i, j)]).collect())
        .collect()
}

pub fn means(x: &Matrix, beta: &[f64]) -> Vec<f64> {
    matvec(x, beta).into_iter().map(f64::exp).collect()
}

/// Σ log f(y_i; μ_i, φ) for gamma responses with mean μ_i and shape φ.
pub fn gamma_loglik(y: &[f64], x: &Matrix, beta: &[f64], phi: f64) -> f64 {
    let mu = means(x, beta);
    let lg = ln_gamma(phi);
    y.iter()
        .zip(&mu)
        .map(|(&yi, &mi)| phi * (phi / mi).ln() + (phi - 1.0) * yi.ln() - phi * yi / mi - lg)
        .sum()
}

/// max over φ of the log-likelihood at fixed β: a coarse grid in ln φ,
/// then golden-section search in the cells around the best node.
pub fn max_over_precision(y: &[f64], x: &Matrix, beta: &[f64]) -> (f64, f64) {
    let ll = |t: f64| gamma_loglik(y, x, beta, t.exp());
    let (lo, hi, nodes) = (-8.0, 14.0, 441);
    let step = (hi - lo) / (nodes - 1) as f64;
    let best = (0..nodes)
        .map(|i| lo + step * i as f64)
        .max_by(|a, b| ll(*a).total_cmp(&ll(*b)))
        .unwrap();
    let (mut a, mut b) = (best - step, best + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ll(c), ll(d));
    for _ in 0..200 {
        if b - a < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ll(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ll(d);
        }
    }
    let t = 0.5 * (a + b);
    (t.exp(), ll(t))
}

/// Uniform draws from a sequence of independent streams.
pub struct Draws {
    stream: RngStream,
}

impl Draws {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self {
            stream: RngStream::new(seed, stream_id),
        }
    }

    pub fn take(&mut self, law: DrawLaw, n: usize) -> Vec<f64> {
        let (v, next) = self.stream.draw(law, n).unwrap();
        self.stream = next;
        v
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.take(DrawLaw::Uniform, 1)[0]
    }

    pub fn int(&mut self, lo: usize, hi: usize) -> usize {
        let u = self.take(DrawLaw::Uniform, 1)[0];
        (lo + (u * (hi - lo + 1) as f64) as usize).min(hi)
    }
}

/// A random gamma-regression instance: intercept plus uniform covariates,
/// coefficients in (−1, 1), precision in `precision_range`.
pub struct GammaInstance {
    pub data: Dataset,
    pub rows: Matrix,
    pub y: Vec<f64>,
    pub beta: Vec<f64>,
    pub precision: f64,
}

pub fn gamma_instance(
    draws: &mut Draws,
    n: usize,
    p: usize,
    precision_range: (f64, f64),
) -> GammaInstance {
    let rows: Matrix = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..p).map(|_| draws.uniform(-1.0, 1.0)));
            r
        })
        .collect();
    let beta: Vec<f64> = (0..p).map(|_| draws.uniform(-1.0, 1.0)).collect();
    let precision = draws.uniform(precision_range.0, precision_range.1);
    let mu = means(&rows, &beta);
    let y: Vec<f64> = mu
        .iter()
        .map(|&m| {
            draws.take(
                DrawLaw::Gamma {
                    shape: precision,
                    scale: m / precision,
                },
                1,
            )[0]
        })
        .collect();
    let data = Dataset::from_rows(&y, &rows).unwrap();
    GammaInstance {
        data,
        rows,
        y,
        beta,
        precision,
    }
}

pub fn to_vector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

/// Normal-regression data y = Xβ + σε with an intercept and uniform
/// covariates.
pub fn normal_instance(draws: &mut Draws, n: usize, beta: &[f64], sigma: f64) -> Dataset {
    let p = beta.len();
    let rows: Matrix = (0..n)
        .map(|_| {
            let mut r = vec![1.0];
            r.extend((1..p).map(|_| draws.uniform(-1.0, 1.0)));
            r
        })
        .collect();
    let eps = draws.take(DrawLaw::Normal, n);
    let y: Vec<f64> = matvec(&rows, beta)
        .iter()
        .zip(&eps)
        .map(|(m, e)| m + sigma * e)
        .collect();
    Dataset::from_rows(&y, &rows).unwrap()
}
