//! Exact-arithmetic helpers shared by the constructions.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `count / n` as an exact rational.
pub fn ratio(count: impl Into<BigUint>, n: impl Into<BigUint>) -> BigRational {
    BigRational::new(BigInt::from(count.into()), BigInt::from(n.into()))
}

pub fn rational_from_u64(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Checks `0 ≤ r ≤ 1`.
pub fn check_unit(r: &BigRational) -> Result<()> {
    if r.is_negative() || r > &BigRational::one() {
        return Err(Error::RationalRange {
            value: r.to_string(),
        });
    }
    Ok(())
}

/// `⌊r · i⌋` for `r ∈ [0, 1]`.
pub fn floor_mul(r: &BigRational, i: &BigUint) -> BigUint {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    (num * i) / den
}

/// `n!`.
pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * k)
}

/// `Σ_{i=0}^{n-1} ⌊(a·i + b) / m⌋` in O(log) steps (Euclid-like reduction).
pub fn floor_sum(n: &BigUint, m: &BigUint, a: &BigUint, b: &BigUint) -> BigUint {
    let mut ans = BigUint::zero();
    let (mut n, mut m, mut a, mut b) = (n.clone(), m.clone(), a.clone(), b.clone());
    loop {
        if n.is_zero() {
            return ans;
        }
        if a >= m {
            let q = &a / &m;
            // Σ q·i over i < n
            ans += &q * (&n * (&n - 1u32) / 2u32);
            a %= &m;
        }
        if b >= m {
            ans += &n * (&b / &m);
            b %= &m;
        }
        let y_max = &a * &n + &b;
        if y_max < m {
            return ans;
        }
        let (new_n, new_b) = y_max.div_rem(&m);
        n = new_n;
        b = new_b;
        std::mem::swap(&mut m, &mut a);
    }
}

/// Largest `i ≥ 1` with `i(i−1)/2 ≤ n`, i.e. the index of the triangular
/// block `L_i` containing `n`, and the offset of `n` within it.
pub fn triangular_block(n: &BigUint) -> (BigUint, BigUint) {
    // i = ⌊(1 + √(1 + 8n)) / 2⌋, corrected for integer-sqrt rounding
    let disc: BigUint = n * 8u32 + 1u32;
    let mut i: BigUint = (disc.sqrt() + 1u32) / 2u32;
    let start = |i: &BigUint| -> BigUint { i * (i - 1u32) / 2u32 };
    while start(&i) > *n {
        i -= 1u32;
    }
    while start(&(&i + 1u32)) <= *n {
        i += 1u32;
    }
    let offset = n - start(&i);
    (i, offset)
}

/// `i(i−1)/2`, the least element of `L_i`.
pub fn triangular_start(i: &BigUint) -> BigUint {
    if i.is_zero() {
        return BigUint::zero();
    }
    i * (i - 1u32) / 2u32
}

/// Display rendering with 15 significant digits. Display only.
pub fn format_float(r: &BigRational) -> String {
    let value = r.to_f64().unwrap_or(f64::NAN);
    format_f64(value)
}

pub fn format_f64(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (14 - magnitude).max(0) as usize;
        format!("{value:.decimals$}")
    } else {
        format!("{value:.14e}")
    }
}

/// Parses `p/q` or an integer into a reduced rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().ok()?;
    let den: BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(BigRational::new(num, den))
}

/// Exact decimal rendering of `p/q` (integers print without a denominator).
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
