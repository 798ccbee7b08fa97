//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite ranges are mapped onto [0, 1) by x = a + t/(1 − t); the
//! whole real line is split at zero and each half mapped the same way, so
//! one finite-interval kernel serves every case.

use super::root::Interval;
use crate::error::{Error, Result};

/// Default absolute quadrature tolerance.
pub const QUAD_TOL: f64 = 1e-8;
const MAX_SUBDIVISIONS: usize = 2000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let mut error = ((kronrod - gauss) * half).abs();
    // floor the estimate at the rounding level of the rule itself
    let rounding = 50.0 * f64::EPSILON * (kronrod * half).abs();
    if error < rounding {
        error = rounding;
    }
    Segment { a, b, value, error }
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut segments = vec![kronrod(f, a, b)];
    loop {
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        let total: f64 = segments.iter().map(|s| s.value).sum();
        if !total.is_finite() {
            return Err(Error::Accuracy {
                requested: tol,
                achieved: f64::NAN,
            });
        }
        let floor = 100.0 * f64::EPSILON * total.abs();
        if total_error <= tol.max(floor) {
            return Ok(total);
        }
        if segments.len() >= MAX_SUBDIVISIONS {
            return Err(Error::Accuracy {
                requested: tol,
                achieved: total_error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(Error::Accuracy {
                requested: tol,
                achieved: total_error,
            });
        }
        segments.push(kronrod(f, seg.a, mid));
        segments.push(kronrod(f, mid, seg.b));
    }
}

/// Integrates `f` over `domain` to absolute tolerance `tol`.
pub fn integrate<F>(f: F, domain: Interval, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let Interval { lo, hi } = domain;
    if lo.is_nan() || hi.is_nan() || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "integrate needs an ordered domain and positive tolerance (got [{lo}, {hi}], tol {tol})"
        )));
    }
    if lo == hi {
        return Ok(0.0);
    }
    if lo > hi {
        return Ok(-integrate_ordered(&f, hi, lo, tol)?);
    }
    integrate_ordered(&f, lo, hi, tol)
}

fn integrate_ordered(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(&f, lo, hi, tol),
        (true, false) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(lo + t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |t: f64| {
                let s = 1.0 - t;
                f(hi - t / s) / (s * s)
            };
            adaptive(&g, 0.0, 1.0, tol)
        }
        (false, false) => {
            let left = integrate_ordered(f, lo, 0.0, 0.5 * tol)?;
            let right = integrate_ordered(f, 0.0, hi, 0.5 * tol)?;
            Ok(left + right)
        }
    }
}
