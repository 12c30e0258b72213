//! Scalar and small-vector numerics used across the crate.
//!
//! Everything is plain `f64` with fixed evaluation order, so results are
//! bit-stable across runs.

use std::f64::consts::PI;

/// log(exp(a) + exp(b)) without overflow.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log Σ exp(v_i) without overflow; −∞ for an empty slice.
pub fn logsumexp(values: &[f64]) -> f64 {
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        if v > hi {
            hi = v;
        }
    }
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    let mut sum = 0.0;
    for &v in values {
        sum += (v - hi).exp();
    }
    hi + sum.ln()
}

/// Numerically stable softmax, normalized to sum to one.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = logsumexp(logits);
    logits.iter().map(|&l| (l - lse).exp()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lanczos approximation of log Γ(x), accurate to ~1e-14 for x > 0.
pub fn lgamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection Γ(x)Γ(1−x) = π / sin(πx).
        return PI.ln() - (PI * x).sin().abs().ln() - lgamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// log of the surface area of the unit sphere S^{d−1} in R^d.
pub fn log_sphere_surface(dim: usize) -> f64 {
    let d = dim as f64;
    (2.0f64).ln() + (d / 2.0) * PI.ln() - lgamma(d / 2.0)
}

/// Switch point between the power series and the asymptotic expansions.
const BESSEL_ASYMPTOTIC_SWITCH: f64 = 50.0;

/// log I_ν(x) for ν ≥ 0, x ≥ 0, evaluated entirely in the log domain.
///
/// Power series below the switch point; above it, the Hankel large-argument
/// expansion for small orders and Olver's uniform large-order expansion
/// otherwise.
pub fn log_bessel_i(nu: f64, x: f64) -> f64 {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x < BESSEL_ASYMPTOTIC_SWITCH {
        log_bessel_i_series(nu, x)
    } else if nu <= 1.0 {
        log_bessel_i_hankel(nu, x)
    } else {
        log_bessel_i_uniform(nu, x)
    }
}

/// log Σ_j (x/2)^{ν+2j} / (j! Γ(ν+j+1)); terms accumulated via logaddexp.
fn log_bessel_i_series(nu: f64, x: f64) -> f64 {
    let log_half_x = (0.5 * x).ln();
    let mut log_term = -lgamma(nu + 1.0);
    let mut log_sum = log_term;
    for j in 0..500 {
        let jf = j as f64;
        log_term += 2.0 * log_half_x - (jf + 1.0).ln() - (nu + jf + 1.0).ln();
        log_sum = logaddexp(log_sum, log_term);
        if log_term < log_sum - 40.0 && jf + 1.0 > 0.5 * x {
            break;
        }
    }
    nu * log_half_x + log_sum
}

/// Large-argument expansion I_ν(x) ≈ e^x/√(2πx) Σ (−1)^k a_k(ν)/x^k.
fn log_bessel_i_hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=7 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        sum += term;
    }
    x - 0.5 * (2.0 * PI * x).ln() + sum.ln()
}

/// Olver's uniform large-order expansion of I_ν(νz) with three correction
/// terms; accurate to ~1e-6 or better on the post-switch domain.
fn log_bessel_i_uniform(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let s = (1.0 + z * z).sqrt();
    let t = 1.0 / s;
    let eta = s + (z / (1.0 + s)).ln();
    let t2 = t * t;
    let u1 = t * (3.0 - 5.0 * t2) / 24.0;
    let u2 = t2 * (81.0 + t2 * (-462.0 + t2 * 385.0)) / 1152.0;
    let u3 = t * t2 * (30_375.0 + t2 * (-369_603.0 + t2 * (765_765.0 - t2 * 425_425.0))) / 414_720.0;
    let series = 1.0 + u1 / nu + u2 / (nu * nu) + u3 / (nu * nu * nu);
    nu * eta - 0.5 * (2.0 * PI * nu).ln() - 0.25 * (1.0 + z * z).ln() + series.ln()
}
