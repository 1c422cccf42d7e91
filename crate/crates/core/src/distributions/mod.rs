//! Standard normal, central and noncentral chi-square: distribution
//! functions, quantiles and sampling.
//!
//! Tail probabilities are always computed in survival form so that values
//! around `1/p` for large `p` keep full relative precision. The noncentral
//! chi-square is evaluated as a Poisson(λ/2) mixture of central chi-square
//! functions with `ν + 2k` degrees of freedom, summed outward from the
//! modal Poisson index.

mod gamma;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Unaccounted Poisson mass at which the mixture series stops.
pub const MIXTURE_TOLERANCE: f64 = 1e-14;

/// Degrees of freedom and non-centrality of a chi-square law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSqParams {
    nu: u32,
    lambda: f64,
}

impl ChiSqParams {
    pub fn new(nu: u32, lambda: f64) -> Result<Self> {
        if nu < 1 {
            return Err(domain("chi-square degrees of freedom must be >= 1"));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain(format!(
                "non-centrality must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self { nu, lambda })
    }

    pub fn central(nu: u32) -> Result<Self> {
        Self::new(nu, 0.0)
    }

    pub fn nu(&self) -> u32 {
        self.nu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn is_central(&self) -> bool {
        self.lambda == 0.0
    }

    pub fn mean(&self) -> f64 {
        f64::from(self.nu) + self.lambda
    }

    pub fn variance(&self) -> f64 {
        2.0 * f64::from(self.nu) + 4.0 * self.lambda
    }
}

/// `u_p = F⁻¹(1 − 1/p)` for a central chi-square with `nu` degrees of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSequence {
    pub p: u64,
    pub value: f64,
}

impl QuantileSequence {
    pub fn new(p: u64, nu: u32) -> Result<Self> {
        if p < 2 {
            return Err(domain("quantile sequence needs p >= 2"));
        }
        let value = chisq_isf(1.0 / p as f64, ChiSqParams::central(nu)?)?;
        Ok(Self { p, value })
    }

    /// `u_p / (2 log p)`, which tends to one.
    pub fn relative_to_log(&self) -> f64 {
        self.value / (2.0 * (self.p as f64).ln())
    }
}

fn check_finite(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("expected a finite argument, got {z}")))
    }
}

fn check_open_unit(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("probability must lie in (0, 1), got {q}")))
    }
}

// ---------------------------------------------------------------------------
// Standard normal
// ---------------------------------------------------------------------------

/// `Φ(z)`.
pub fn normal_cdf(z: f64) -> Result<f64> {
    check_finite(z)?;
    Ok(0.5 * libm::erfc(-z * FRAC_1_SQRT_2))
}

/// `1 − Φ(z)`, accurate far into the upper tail.
pub fn normal_sf(z: f64) -> Result<f64> {
    check_finite(z)?;
    Ok(0.5 * libm::erfc(z * FRAC_1_SQRT_2))
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Wichura's AS 241 (PPND16) for `q ≤ 1/2`.
fn ppnd16_lower(q: f64) -> f64 {
    let d = q - 0.5;
    if d.abs() <= 0.425 {
        let r = 0.180625 - d * d;
        let num = ((((((2.509_080_928_730_122_7e3 * r + 3.343_057_558_358_813e4) * r
            + 6.726_577_092_700_87e4)
            * r
            + 4.592_195_393_154_987e4)
            * r
            + 1.373_169_376_550_946e4)
            * r
            + 1.971_590_950_306_551_3e3)
            * r
            + 1.331_416_678_917_843_8e2)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((5.226_495_278_852_545e3 * r + 2.872_908_573_572_194_3e4) * r
            + 3.930_789_580_009_271e4)
            * r
            + 2.121_379_430_158_659_7e4)
            * r
            + 5.394_196_021_424_751e3)
            * r
            + 6.871_870_074_920_579e2)
            * r
            + 4.231_333_070_160_091e1)
            * r
            + 1.0;
        return d * num / den;
    }
    let mut r = (-q.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.745_450_142_783_414e-4 * r + 2.272_384_498_926_918_4e-2) * r
            + 2.417_807_251_774_506e-1)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_6;
        let den = ((((((1.050_750_071_644_416_9e-9 * r + 5.475_938_084_995_345e-4) * r
            + 1.519_866_656_361_645_7e-2)
            * r
            + 1.481_039_764_274_800_8e-1)
            * r
            + 6.897_673_349_851e-1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.010_334_399_292_288e-7 * r + 2.711_555_568_743_487_6e-5) * r
            + 1.242_660_947_388_078_4e-3)
            * r
            + 2.653_218_952_657_612_4e-2)
            * r
            + 2.965_605_718_285_048_7e-1)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((2.044_263_103_389_939_7e-15 * r + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 1.487_536_129_085_061_5e-2)
            * r
            + 1.369_298_809_227_358e-1)
            * r
            + 5.998_322_065_558_88e-1)
            * r
            + 1.0;
        num / den
    };
    -val
}

/// `Φ⁻¹(q)`: AS 241 followed by one Newton polish against `Φ` in tail form.
pub fn normal_quantile(q: f64) -> Result<f64> {
    check_open_unit(q)?;
    if q > 0.5 {
        // 1 - q is exact for q in [1/2, 1).
        return Ok(-lower_normal_quantile(1.0 - q));
    }
    Ok(lower_normal_quantile(q))
}

/// `z` with `1 − Φ(z) = y`.
pub fn normal_isf(y: f64) -> Result<f64> {
    normal_quantile(y).map(|z| -z)
}

fn lower_normal_quantile(q: f64) -> f64 {
    let z = ppnd16_lower(q);
    let density = normal_pdf(z);
    if density > 0.0 {
        let cdf = 0.5 * libm::erfc(-z * FRAC_1_SQRT_2);
        z - (cdf - q) / density
    } else {
        z
    }
}

// ---------------------------------------------------------------------------
// Central chi-square
// ---------------------------------------------------------------------------

fn central_sf(x: f64, nu: u32) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    match nu {
        1 => libm::erfc((0.5 * x).sqrt()),
        2 => (-0.5 * x).exp(),
        _ => gamma::gamma_q(nu, 0.5 * x),
    }
}

fn central_cdf(x: f64, nu: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    match nu {
        1 => libm::erf((0.5 * x).sqrt()),
        2 => -(-0.5 * x).exp_m1(),
        _ => gamma::gamma_p(nu, 0.5 * x),
    }
}

fn central_pdf(x: f64, nu: u32) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x == 0.0 {
        return match nu {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    // x^(a-1) e^(-x/2) / (2^a Γ(a)) = a · [y^a e^-y / Γ(a+1)] / x with y = x/2
    let a = f64::from(nu) / 2.0;
    a * gamma::prefactor(nu, 0.5 * x) / x
}

// ---------------------------------------------------------------------------
// Noncentral chi-square: Poisson mixture
// ---------------------------------------------------------------------------

/// Largest `λ/2` whose mixture degrees `ν + 2k` stay inside `u32`.
const MAX_MIXTURE_MEAN: f64 = 1e9;

/// Below `ln` of half the smallest subnormal a tail rounds to zero.
const LOG_UNDERFLOW: f64 = -746.0;

/// `ln` of the Chernoff bound on `P[X ≤ x]` (`lower`) or `P[X > x]`, where
/// `E e^{sX} = e^{λs/(1-2s)} (1-2s)^{-ν/2}`. Zero when the bound is trivial.
fn log_chernoff(x: f64, params: ChiSqParams, lower: bool) -> f64 {
    let (nu, lambda) = (f64::from(params.nu), params.lambda);
    if x <= 0.0 {
        return 0.0;
    }
    // stationary point of the exponent, as u = 1 - 2s
    let u = (nu + (nu * nu + 4.0 * x * lambda).sqrt()) / (2.0 * x);
    let s = 0.5 * (1.0 - u);
    if (lower && u <= 1.0) || (!lower && u >= 1.0) {
        return 0.0;
    }
    (-s * x + lambda * s / u - 0.5 * nu * u.ln()).min(0.0)
}

/// `Some(v)` when one tail is provably below the smallest subnormal, with
/// `v` the correctly rounded upper-tail probability (0 or 1).
fn negligible_tail_sf(x: f64, params: ChiSqParams) -> Option<f64> {
    if log_chernoff(x, params, false) < LOG_UNDERFLOW {
        Some(0.0)
    } else if log_chernoff(x, params, true) < LOG_UNDERFLOW {
        Some(1.0)
    } else {
        None
    }
}

/// `Σ_k Pois(k; λ/2) · term(ν + 2k)`, summed outward from the mode until the
/// unaccounted Poisson mass drops under `tol`.
fn poisson_mixture(params: ChiSqParams, tol: f64, mut term: impl FnMut(u32) -> f64) -> Result<f64> {
    let nu = params.nu;
    let mu = 0.5 * params.lambda;
    if mu > MAX_MIXTURE_MEAN {
        return Err(domain(format!(
            "noncentrality {} is too large for the Poisson mixture at this argument",
            params.lambda
        )));
    }
    let mode = mu.floor() as u32;
    let weight_at_mode = gamma::prefactor(2 * mode, mu);

    let mut mass = weight_at_mode;
    let mut total = weight_at_mode * term(nu + 2 * mode);
    let (mut lo, mut w_lo) = (mode, weight_at_mode);
    let (mut hi, mut w_hi) = (mode, weight_at_mode);
    // Rounding in `mass` floors near 1e-16; this guard ends the walk once
    // both frontier weights are negligible even when `1 - mass` cannot
    // resolve the last ulp.
    let negligible = tol * 1e-4;
    let max_span = 100_000 + 50 * (mu.sqrt() as u32);

    while 1.0 - mass >= tol {
        let mut lower_live = false;
        if lo > 0 {
            w_lo *= f64::from(lo) / mu;
            lo -= 1;
            mass += w_lo;
            total += w_lo * term(nu + 2 * lo);
            lower_live = w_lo >= negligible;
        }
        w_hi *= mu / f64::from(hi + 1);
        hi += 1;
        mass += w_hi;
        total += w_hi * term(nu + 2 * hi);
        if !lower_live && w_hi < negligible && hi > mode + 1 {
            break;
        }
        if hi - mode > max_span {
            break;
        }
    }
    Ok(total)
}

/// Noncentral survival with an explicit truncation tolerance.
pub fn chisq_sf_with_tolerance(x: f64, params: ChiSqParams, tol: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if params.is_central() {
        return Ok(central_sf(x, params.nu));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if let Some(v) = negligible_tail_sf(x, params) {
        return Ok(v);
    }
    // Each tail is summed directly while it is the smaller one; the mixture
    // truncation then costs relative rather than absolute accuracy.
    let upper = poisson_mixture(params, tol, |df| central_sf(x, df))?;
    let v = if upper > 0.5 {
        1.0 - poisson_mixture(params, tol, |df| central_cdf(x, df))?
    } else {
        upper
    };
    Ok(v.clamp(0.0, 1.0))
}

/// `P[χ²_ν(λ) > x]`.
pub fn chisq_sf(x: f64, params: ChiSqParams) -> Result<f64> {
    chisq_sf_with_tolerance(x, params, MIXTURE_TOLERANCE)
}

/// `P[χ²_ν(λ) ≤ x]`.
pub fn chisq_cdf(x: f64, params: ChiSqParams) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if params.is_central() {
        return Ok(central_cdf(x, params.nu));
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    if let Some(v) = negligible_tail_sf(x, params) {
        return Ok(1.0 - v);
    }
    let lower = poisson_mixture(params, MIXTURE_TOLERANCE, |df| central_cdf(x, df))?;
    let v = if lower > 0.5 {
        1.0 - poisson_mixture(params, MIXTURE_TOLERANCE, |df| central_sf(x, df))?
    } else {
        lower
    };
    Ok(v.clamp(0.0, 1.0))
}

pub fn chisq_pdf(x: f64, params: ChiSqParams) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("chi-square argument must be >= 0, got {x}")));
    }
    if params.is_central() {
        return Ok(central_pdf(x, params.nu));
    }
    poisson_mixture(params, MIXTURE_TOLERANCE, |df| central_pdf(x, df))
}

// ---------------------------------------------------------------------------
// Quantiles
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

const BISECTION_RELATIVE_WIDTH: f64 = 1e-8;
const NEWTON_STEPS: usize = 5;

/// Solves `tail_probability(x) = target`, bisecting on a guaranteed bracket
/// and polishing with Newton steps.
fn solve_quantile(target: f64, params: ChiSqParams, tail: Tail) -> Result<f64> {
    let prob = |x: f64| -> Result<f64> {
        match tail {
            Tail::Lower => chisq_cdf(x, params),
            Tail::Upper => chisq_sf(x, params),
        }
    };
    // g(x) is increasing in x, with root at the quantile.
    let g = |x: f64| -> Result<f64> {
        Ok(match tail {
            Tail::Lower => prob(x)? - target,
            Tail::Upper => target - prob(x)?,
        })
    };

    let nu = f64::from(params.nu);
    let mut lo = 0.0;
    let mut hi = nu + params.lambda + 20.0 * params.variance().sqrt() + 40.0;
    while g(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(domain("quantile bracket overflowed"));
        }
    }
    while hi - lo > BISECTION_RELATIVE_WIDTH * hi && hi > f64::MIN_POSITIVE {
        let mid = 0.5 * (lo + hi);
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_STEPS {
        let density = chisq_pdf(x, params)?;
        if !(density.is_finite() && density > 0.0) {
            break;
        }
        let step = g(x)? / density;
        let next = x - step;
        // Stay inside the bisection bracket; a step out means we are at
        // rounding level already.
        if !(next >= lo && next <= hi) {
            break;
        }
        x = next;
        if step.abs() <= 4.0 * f64::EPSILON * x {
            break;
        }
    }
    Ok(x)
}

/// `F⁻¹(q)` for `q ∈ (0, 1)`.
pub fn chisq_quantile(q: f64, params: ChiSqParams) -> Result<f64> {
    check_open_unit(q)?;
    if q <= 0.5 {
        solve_quantile(q, params, Tail::Lower)
    } else {
        solve_quantile(1.0 - q, params, Tail::Upper)
    }
}

/// Inverse survival: `x` with `P[χ²_ν(λ) > x] = y`, for tail levels such as
/// `α/p` that cannot be represented as `1 − y` without losing digits.
pub fn chisq_isf(y: f64, params: ChiSqParams) -> Result<f64> {
    check_open_unit(y)?;
    if y >= 0.5 {
        solve_quantile(1.0 - y, params, Tail::Lower)
    } else {
        solve_quantile(y, params, Tail::Upper)
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// One draw of `Z₁² + … + Z²_{ν−1} + (Z_ν + √λ)²`.
pub fn sample_chisq<R: Rng + ?Sized>(params: ChiSqParams, rng: &mut R) -> f64 {
    let mut acc = 0.0;
    for _ in 1..params.nu {
        let z: f64 = rng.sample(StandardNormal);
        acc += z * z;
    }
    let z: f64 = rng.sample(StandardNormal);
    let shifted = z + params.lambda.sqrt();
    acc + shifted * shifted
}
