//! Regularized incomplete gamma functions at half-integer shape.
//!
//! Every shape that occurs in this crate is `a = m / 2` for a positive integer
//! `m` (chi-square degrees of freedom, plus the even shifts of the Poisson
//! mixture), so the shape is passed as `twice_a` and `Γ(a + 1)` for small
//! shapes is an exact product.

use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;
const STIRLING_MIN: f64 = 10.0;

/// `ln Γ(a + 1) - [(a + 1/2) ln a - a + ln √(2π)]` for `a ≥ 10`.
fn stirling_correction(a: f64) -> f64 {
    // Bernoulli terms B_2k / (2k (2k-1) a^(2k-1)).
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in C.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// `Γ(a + 1)` for `a = twice_a / 2 < 10`, as a product of at most twenty factors.
fn small_gamma_plus_one(twice_a: u32) -> f64 {
    let (mut g, mut shape) = if twice_a.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = f64::from(twice_a) / 2.0 + 1.0;
    while shape < target - 0.25 {
        g *= shape;
        shape += 1.0;
    }
    g
}

/// `u - ln(1 + u)` without cancellation for small `|u|`.
fn log1pmx_neg(u: f64) -> f64 {
    if u.abs() < 0.1 {
        // u²/2 - u³/3 + u⁴/4 - ...
        let mut term = u * u;
        let mut acc = 0.0;
        let mut k = 2.0;
        loop {
            let add = term / k;
            acc += add;
            if add.abs() <= 1e-18 * acc.abs() {
                break;
            }
            term *= -u;
            k += 1.0;
        }
        acc
    } else {
        u - u.ln_1p()
    }
}

/// `ln` of the Poisson-like prefactor `y^a e^(-y) / Γ(a + 1)`.
pub(crate) fn ln_prefactor(twice_a: u32, y: f64) -> f64 {
    let a = f64::from(twice_a) / 2.0;
    if twice_a == 0 {
        return -y;
    }
    if y == 0.0 {
        return f64::NEG_INFINITY;
    }
    if a < STIRLING_MIN {
        a * y.ln() - y - small_gamma_plus_one(twice_a).ln()
    } else {
        let u = (y - a) / a;
        -a * log1pmx_neg(u) - 0.5 * (2.0 * PI * a).ln() - stirling_correction(a)
    }
}

/// `y^a e^(-y) / Γ(a + 1)`; at integer `a` this is the Poisson(y) mass at `a`.
pub(crate) fn prefactor(twice_a: u32, y: f64) -> f64 {
    ln_prefactor(twice_a, y).exp()
}

/// Series for the lower function, valid and fast for `y < a + 1`.
fn lower_series(twice_a: u32, y: f64) -> f64 {
    let a = f64::from(twice_a) / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut denom = a;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= y / denom;
        sum += term;
        if term < sum * EPS {
            break;
        }
    }
    prefactor(twice_a, y) * sum
}

/// Modified Lentz continued fraction for the upper function, `y ≥ a + 1`.
fn upper_fraction(twice_a: u32, y: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let a = f64::from(twice_a) / 2.0;
    let mut b = y + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    // y^a e^-y / Γ(a) = a · prefactor
    (ln_prefactor(twice_a, y) + a.ln()).exp() * h
}

/// Regularized lower incomplete gamma `P(a, y)`, `a = twice_a / 2 > 0`.
pub(crate) fn gamma_p(twice_a: u32, y: f64) -> f64 {
    debug_assert!(twice_a > 0);
    if y <= 0.0 {
        return 0.0;
    }
    if y.is_infinite() {
        return 1.0;
    }
    let a = f64::from(twice_a) / 2.0;
    if y < a + 1.0 {
        lower_series(twice_a, y).min(1.0)
    } else {
        1.0 - upper_fraction(twice_a, y)
    }
}

/// Regularized upper incomplete gamma `Q(a, y)`, `a = twice_a / 2 > 0`.
pub(crate) fn gamma_q(twice_a: u32, y: f64) -> f64 {
    debug_assert!(twice_a > 0);
    if y <= 0.0 {
        return 1.0;
    }
    if y.is_infinite() {
        return 0.0;
    }
    let a = f64::from(twice_a) / 2.0;
    if y < a + 1.0 {
        (1.0 - lower_series(twice_a, y)).max(0.0)
    } else {
        upper_fraction(twice_a, y)
    }
}
