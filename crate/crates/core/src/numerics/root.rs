//! Bracketed root finding (Brent's method) and bracket expansion.

use crate::error::{Error, Result};

/// Default absolute bracket tolerance.
pub const ROOT_TOL: f64 = 1e-10;
const MAX_BRENT_ITER: usize = 200;
const MAX_EXPANSIONS: usize = 100;

/// An interval of the real line; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidInput(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn positive() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }
}

/// Brent's method on a sign-changing bracket. The bracket may be given in
/// either order. Stops when the bracket is narrower than `tol` (plus a
/// relative machine-precision term) or `f` vanishes exactly.
pub fn find_root<F>(f: F, bracket: (f64, f64), tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = ordered(bracket);
    let f_lo = f(lo);
    let f_hi = f(hi);
    brent(&f, lo, hi, f_lo, f_hi, tol).ok_or(Error::Bracketing {
        lo,
        hi,
        f_lo,
        f_hi,
        expansions: 0,
    })
}

/// Like [`find_root`], but widens the bracket geometrically (staying inside
/// `domain`) until a sign change appears. An open domain end is approached
/// geometrically rather than evaluated.
pub fn find_root_expanding<F>(f: F, bracket: (f64, f64), tol: f64, domain: Interval) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut lo, mut hi) = ordered(bracket);
    lo = lo.max(domain.lo);
    hi = hi.min(domain.hi);
    if lo == domain.lo && domain.lo.is_finite() {
        lo = domain.lo + 0.5 * (hi - domain.lo);
    }
    if hi == domain.hi && domain.hi.is_finite() {
        hi = domain.hi - 0.5 * (domain.hi - lo);
    }
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    for expansion in 0..=MAX_EXPANSIONS {
        if let Some(root) = brent(&f, lo, hi, f_lo, f_hi, tol) {
            return Ok(root);
        }
        if expansion == MAX_EXPANSIONS {
            break;
        }
        let width = hi - lo;
        let grow_low = match (f_lo.is_finite(), f_hi.is_finite()) {
            (true, true) => f_lo.abs() < f_hi.abs(),
            (false, true) => false,
            (true, false) => true,
            (false, false) => expansion % 2 == 0,
        };
        if grow_low {
            let candidate = lo - 1.6 * width;
            lo = if candidate <= domain.lo {
                domain.lo + 0.125 * (lo - domain.lo)
            } else {
                candidate
            };
            f_lo = f(lo);
        } else {
            let candidate = hi + 1.6 * width;
            hi = if candidate >= domain.hi {
                domain.hi - 0.125 * (domain.hi - hi)
            } else {
                candidate
            };
            f_hi = f(hi);
        }
    }
    Err(Error::Bracketing {
        lo,
        hi,
        f_lo,
        f_hi,
        expansions: MAX_EXPANSIONS,
    })
}

fn ordered((a, b): (f64, f64)) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn brent<F>(f: &F, a0: f64, b0: f64, fa0: f64, fb0: f64, tol: f64) -> Option<f64>
where
    F: Fn(f64) -> f64,
{
    if !(fa0.is_finite() && fb0.is_finite()) {
        return None;
    }
    if fa0 == 0.0 {
        return Some(a0);
    }
    if fb0 == 0.0 {
        return Some(b0);
    }
    if fa0.signum() == fb0.signum() {
        return None;
    }
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_BRENT_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return None;
        }
    }
    Some(b)
}
