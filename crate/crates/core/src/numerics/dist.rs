//! Densities, distribution functions and quantiles for the reference laws
//! of the pivots: standard normal, χ², Student t and F.

use super::root::{find_root, find_root_expanding, Interval};
use super::special::{incomplete_gamma_pair, ln_gamma_unchecked, regularized_beta};
use crate::error::{domain, Result};

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;
const QUANTILE_TOL: f64 = 1e-13;

fn check_df(name: &str, df: f64) -> Result<()> {
    if !(df > 0.0) || !df.is_finite() {
        return domain(format!("{name} degrees of freedom must be finite and positive, got {df}"));
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("probability must lie in (0, 1), got {p}"));
    }
    Ok(())
}

pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
///
/// Evaluated through Φ(x) = ½·Q(½, x²/2) for x < 0, so the lower tail keeps
/// full relative accuracy.
pub fn normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return domain(format!("normal_cdf requires a finite argument, got {x}"));
    }
    Ok(normal_cdf_unchecked(x))
}

pub(crate) fn normal_cdf_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let (p, q) = incomplete_gamma_pair(0.5, 0.5 * x * x).expect("valid arguments");
    if x < 0.0 {
        0.5 * q
    } else {
        0.5 + 0.5 * p
    }
}

/// Upper tail 1 − Φ(x) without cancellation.
pub fn normal_sf(x: f64) -> Result<f64> {
    Ok(normal_cdf(-x)?)
}

/// Inverse of Φ. Rational initial guess (Acklam) refined by Halley steps.
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(normal_quantile_unchecked(p))
}

pub(crate) fn normal_quantile_unchecked(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    let mut x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        // work in whichever tail is small to avoid cancellation
        let e = if x <= 0.0 {
            normal_cdf_unchecked(x) - p
        } else {
            (1.0 - p) - normal_cdf_unchecked(-x)
        };
        let u = e * SQRT_2PI * (0.5 * x * x).exp();
        if !u.is_finite() {
            break;
        }
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

pub fn chisq_pdf(x: f64, df: f64) -> Result<f64> {
    check_df("chi-square", df)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    let k = 0.5 * df;
    if x == 0.0 {
        return Ok(if df < 2.0 {
            f64::INFINITY
        } else if df == 2.0 {
            0.5
        } else {
            0.0
        });
    }
    Ok(((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma_unchecked(k)).exp())
}

/// χ² distribution function, P(df/2, x/2).
pub fn chisq_cdf(x: f64, df: f64) -> Result<f64> {
    check_df("chi-square", df)?;
    if x.is_nan() {
        return domain("chisq_cdf argument is NaN");
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    Ok(incomplete_gamma_pair(0.5 * df, 0.5 * x)?.0)
}

/// χ² upper tail Γ(df/2, x/2)/Γ(df/2).
pub fn chisq_sf(x: f64, df: f64) -> Result<f64> {
    check_df("chi-square", df)?;
    if x.is_nan() {
        return domain("chisq_sf argument is NaN");
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    Ok(incomplete_gamma_pair(0.5 * df, 0.5 * x)?.1)
}

pub fn chisq_quantile(p: f64, df: f64) -> Result<f64> {
    check_df("chi-square", df)?;
    check_probability(p)?;
    let start = df.max(1.0);
    let f = |x: f64| {
        let (lo, hi) = incomplete_gamma_pair(0.5 * df, 0.5 * x).expect("checked");
        if p < 0.5 {
            lo - p
        } else {
            (1.0 - p) - hi
        }
    };
    find_root_expanding(f, (0.5 * start, 2.0 * start), QUANTILE_TOL, Interval::positive())
}

pub fn t_pdf(x: f64, df: f64) -> Result<f64> {
    check_df("Student t", df)?;
    let log_norm = ln_gamma_unchecked(0.5 * (df + 1.0))
        - ln_gamma_unchecked(0.5 * df)
        - 0.5 * (df * std::f64::consts::PI).ln();
    Ok((log_norm - 0.5 * (df + 1.0) * (x * x / df).ln_1p()).exp())
}

/// Student t distribution function via I_{df/(df+x²)}(df/2, ½).
pub fn t_cdf(x: f64, df: f64) -> Result<f64> {
    check_df("Student t", df)?;
    if x.is_nan() {
        return domain("t_cdf argument is NaN");
    }
    if x == 0.0 {
        return Ok(0.5);
    }
    if x.is_infinite() {
        return Ok(if x > 0.0 { 1.0 } else { 0.0 });
    }
    let tail = 0.5 * regularized_beta(0.5 * df, 0.5, df / (df + x * x))?;
    Ok(if x > 0.0 { 1.0 - tail } else { tail })
}

pub fn t_quantile(p: f64, df: f64) -> Result<f64> {
    check_df("Student t", df)?;
    check_probability(p)?;
    if p == 0.5 {
        return Ok(0.0);
    }
    // solve in the lower tail and reflect
    let lower = p.min(1.0 - p);
    let z = normal_quantile_unchecked(lower);
    let f = |x: f64| t_cdf(x, df).expect("checked") - lower;
    let q = find_root_expanding(f, (2.0 * z - 1.0, 0.0), QUANTILE_TOL, Interval::real_line())?;
    Ok(if p < 0.5 { q } else { -q })
}

pub fn f_pdf(x: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df("F numerator", df1)?;
    check_df("F denominator", df2)?;
    if x < 0.0 {
        return Ok(0.0);
    }
    if x == 0.0 {
        return Ok(if df1 < 2.0 {
            f64::INFINITY
        } else if df1 == 2.0 {
            1.0
        } else {
            0.0
        });
    }
    let (a, b) = (0.5 * df1, 0.5 * df2);
    let log_beta = ln_gamma_unchecked(a) + ln_gamma_unchecked(b) - ln_gamma_unchecked(a + b);
    let log_density = a * (df1 / df2).ln() + (a - 1.0) * x.ln()
        - (a + b) * (df1 * x / df2).ln_1p()
        - log_beta;
    Ok(log_density.exp())
}

/// F distribution function via I_{d1 x/(d1 x + d2)}(d1/2, d2/2).
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df("F numerator", df1)?;
    check_df("F denominator", df2)?;
    if x.is_nan() {
        return domain("f_cdf argument is NaN");
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    regularized_beta(0.5 * df1, 0.5 * df2, df1 * x / (df1 * x + df2))
}

pub fn f_quantile(p: f64, df1: f64, df2: f64) -> Result<f64> {
    check_df("F numerator", df1)?;
    check_df("F denominator", df2)?;
    check_probability(p)?;
    // the beta quantile is bounded, which gives a finite bracket
    let u = find_root(
        |u: f64| regularized_beta(0.5 * df1, 0.5 * df2, u).expect("checked") - p,
        (0.0, 1.0),
        1e-15,
    )?;
    Ok(df2 * u / (df1 * (1.0 - u)))
}
