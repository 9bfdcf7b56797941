//! Scalar special functions backing the distribution kernels and the
//! chi-square machinery: error function pair, normal quantile, and the
//! regularized incomplete gamma functions.
//!
//! Everything here is self-contained; accuracy targets are ~1e-15 relative
//! for erf/erfc over the ranges the likelihood visits.

/// 1/sqrt(2*pi)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// sqrt(2)
pub const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_PI: f64 = 1.772_453_850_905_516;

const SERIES_CF_SPLIT: f64 = 1.5;
const MAX_ITER: usize = 300;

/// exp(-x*x) with the rounding of x*x compensated via fma, so the tail
/// keeps close to full relative precision even for large |x|.
fn exp_neg_xsq(x: f64) -> f64 {
    let x2 = x * x;
    let err = x.mul_add(x, -x2);
    (-x2).exp() * (1.0 - err)
}

/// Maclaurin series for erf, used for |x| <= 1.5 where it is alternating
/// with modest terms.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut c = x; // (-1)^n x^(2n+1) / n!
    let mut sum = x;
    for n in 1..MAX_ITER {
        c *= -x2 / n as f64;
        let term = c / (2 * n + 1) as f64;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    2.0 / SQRT_PI * sum
}

/// Continued fraction for erfc, valid for x >= 1.5 (modified Lentz).
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0f64;
    for i in 1..MAX_ITER {
        let a = i as f64 / 2.0;
        d = x + a * d;
        if d == 0.0 {
            d = tiny;
        }
        c = x + a / c;
        if c == 0.0 {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 {
            break;
        }
    }
    exp_neg_xsq(x) / (SQRT_PI * f)
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= SERIES_CF_SPLIT {
        if x > 27.0 {
            // erfc underflows near x = 26.6
            return 0.0;
        }
        erfc_cf(x)
    } else if x <= -SERIES_CF_SPLIT {
        2.0 - erfc(-x)
    } else {
        1.0 - erf_series(x)
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    if x.abs() < SERIES_CF_SPLIT {
        erf_series(x)
    } else if x > 0.0 {
        1.0 - erfc(x)
    } else {
        erfc(-x) - 1.0
    }
}

/// Standard normal cdf.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Standard normal pdf.
pub fn norm_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * exp_neg_xsq(z / SQRT_2)
}

/// log of the standard normal survival function, accurate into the far
/// upper tail (asymptotic expansion past the erfc underflow point).
pub fn norm_log_survival(z: f64) -> f64 {
    if z > 36.0 {
        // ln[phi(z)/z * (1 - 1/z^2 + 3/z^4 - 15/z^6)]
        let zi2 = 1.0 / (z * z);
        let corr = 1.0 + zi2 * (-1.0 + zi2 * (3.0 - 15.0 * zi2));
        -0.5 * z * z - z.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + corr.ln()
    } else {
        (0.5 * erfc(z / SQRT_2)).ln()
    }
}

// Abramowitz & Stegun 26.2.23 rational start for the normal quantile.
fn norm_quantile_seed(p_tail: f64) -> f64 {
    let t = (-2.0 * p_tail.ln()).sqrt();
    t - (2.515517 + t * (0.802853 + t * 0.010328))
        / (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308)))
}

/// Standard normal quantile; rational seed polished by Newton steps on the
/// accurate cdf. Caller guarantees 0 < p < 1.
pub fn norm_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    if p == 0.5 {
        return 0.0;
    }
    let tail = p.min(1.0 - p);
    let mut x = norm_quantile_seed(tail);
    // solve norm_cdf(-x) = tail for x > 0; both sides relative-accurate
    for _ in 0..4 {
        let f = norm_cdf(-x) - tail;
        let step = f / norm_pdf(x);
        x += step;
        if step.abs() < 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    if p < 0.5 {
        -x
    } else {
        x
    }
}

/// ln(1 + exp(x)) without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// ln(expm1(u)) for u > 0 without intermediate overflow.
pub fn ln_expm1(u: f64) -> f64 {
    debug_assert!(u > 0.0);
    if u > 33.0 {
        // expm1(u) = e^u (1 - e^{-u})
        u + (-(-u).exp()).ln_1p()
    } else {
        u.exp_m1().ln()
    }
}

/// ln(-expm1(u)) = ln(1 - e^u) for u < 0.
pub fn ln_one_minus_exp(u: f64) -> f64 {
    debug_assert!(u < 0.0);
    if u < -0.693 {
        (-u.exp()).ln_1p()
    } else {
        (-u.exp_m1()).ln()
    }
}

/// log(exp(a) + exp(b)) tolerating -inf inputs.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln Gamma(n/2) via the recurrence from Gamma(1/2) and Gamma(1).
fn ln_gamma_half(n: u64) -> f64 {
    debug_assert!(n >= 1);
    let mut a;
    let mut acc;
    if n.is_multiple_of(2) {
        a = 1.0; // Gamma(1)
        acc = 0.0;
    } else {
        a = 0.5; // Gamma(1/2) = sqrt(pi)
        acc = 0.5 * std::f64::consts::PI.ln();
    }
    while a + 0.5 <= n as f64 / 2.0 {
        acc += a.ln();
        a += 1.0;
    }
    acc
}

/// Regularized lower incomplete gamma P(a, x) by series, for x < a + 1.
fn gamma_p_series(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma_a).exp()
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction, for
/// x >= a + 1 (modified Lentz).
fn gamma_q_cf(a: f64, x: f64, ln_gamma_a: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (a * x.ln() - x - ln_gamma_a).exp() * h
}

/// Chi-square survival function with `df` degrees of freedom.
pub fn chi2_survival(x: f64, df: u64) -> f64 {
    assert!(df >= 1, "chi-square needs df >= 1");
    if x <= 0.0 {
        return 1.0;
    }
    let a = df as f64 / 2.0;
    let xs = x / 2.0;
    let lg = ln_gamma_half(df);
    if xs < a + 1.0 {
        1.0 - gamma_p_series(a, xs, lg)
    } else {
        gamma_q_cf(a, xs, lg)
    }
}

/// Chi-square cdf with `df` degrees of freedom.
pub fn chi2_cdf(x: f64, df: u64) -> f64 {
    assert!(df >= 1, "chi-square needs df >= 1");
    if x <= 0.0 {
        return 0.0;
    }
    let a = df as f64 / 2.0;
    let xs = x / 2.0;
    let lg = ln_gamma_half(df);
    if xs < a + 1.0 {
        gamma_p_series(a, xs, lg)
    } else {
        1.0 - gamma_q_cf(a, xs, lg)
    }
}

/// Sum in fixed index order by pairwise reduction; deterministic regardless
/// of any upstream parallelism.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
