//! Shared domain identifiers and exact-rational amounts.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact non-negative token quantity or USD value. Negativity is enforced at
/// the operation level, not by the type; intermediate deltas may go negative.
pub type Amount = BigRational;

/// Short asset symbol, e.g. "A", "B", "USDC".
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AssetId(pub String);

impl AssetId {
    pub fn new(symbol: &str) -> Self {
        AssetId(symbol.to_string())
    }
}

impl fmt::Display for AssetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Flat account identifier; no signatures or nonces.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccountId(pub String);

impl AccountId {
    pub fn new(id: &str) -> Self {
        AccountId(id.to_string())
    }
}

impl fmt::Display for AccountId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Unordered asset pair identifying an AMM pool.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairId(pub AssetId, pub AssetId);

impl PairId {
    /// Canonical (sorted) pair, so `PairId::new(a, b) == PairId::new(b, a)`.
    pub fn new(a: AssetId, b: AssetId) -> Self {
        if a <= b {
            PairId(a, b)
        } else {
            PairId(b, a)
        }
    }

    pub fn contains(&self, asset: &AssetId) -> bool {
        &self.0 == asset || &self.1 == asset
    }
}

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0, self.1)
    }
}

/// Monotonically increasing block index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockRef {
    pub id: u64,
}

impl BlockRef {
    pub fn new(id: u64) -> Self {
        BlockRef { id }
    }
}

/// Rational from an integer.
pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Rational from a numerator/denominator pair.
pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses a decimal string (`"10"`, `"0.001"`, `"-2.5"`, or `"p/q"`) into an
/// exact rational. Used by scenario files and report formatting.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().ok()?;
        let d: BigInt = den.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1i64, rest),
        None => (1i64, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = [int_part, frac_part].concat();
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let numer: BigInt = digits.parse().ok()?;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some(BigRational::new(BigInt::from(sign) * numer, denom))
}

/// Lossy conversion for reporting; exact values travel as strings.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders a rational as a plain decimal when the denominator is a product of
/// 2s and 5s, otherwise as `p/q`.
pub fn format_rat(r: &BigRational) -> String {
    let r = r.clone();
    if r.is_integer() {
        return r.numer().to_string();
    }
    let mut den = r.denom().clone();
    let mut scale = 0u32;
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while (&den % &two).is_zero() {
        den /= &two;
        scale += 1;
    }
    let mut fives = 0u32;
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    scale = scale.max(fives);
    if !den.is_one() || scale > 30 {
        return alloc::format!("{}/{}", r.numer(), r.denom());
    }
    let shifted = r * BigRational::from_integer(BigInt::from(10u32).pow(scale));
    debug_assert!(shifted.is_integer());
    let neg = shifted.is_negative();
    let digits = shifted.numer().abs().to_string();
    let digits = if digits.len() <= scale as usize {
        let mut padded: Vec<u8> = alloc::vec![b'0'; scale as usize + 1 - digits.len()];
        padded.extend_from_slice(digits.as_bytes());
        String::from_utf8(padded).unwrap()
    } else {
        digits
    };
    let split = digits.len() - scale as usize;
    alloc::format!(
        "{}{}.{}",
        if neg { "-" } else { "" },
        &digits[..split],
        &digits[split..]
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_id_is_order_insensitive() {
        let a = AssetId::new("A");
        let b = AssetId::new("B");
        assert_eq!(PairId::new(a.clone(), b.clone()), PairId::new(b, a));
    }

    #[test]
    fn parse_decimal_exact() {
        assert_eq!(parse_decimal("100").unwrap(), rat(100));
        assert_eq!(parse_decimal("0.001").unwrap(), ratio(1, 1000));
        assert_eq!(parse_decimal("-2.5").unwrap(), ratio(-5, 2));
        assert_eq!(parse_decimal("7/3").unwrap(), ratio(7, 3));
        assert!(parse_decimal("").is_none());
        assert!(parse_decimal("1.2.3").is_none());
        assert!(parse_decimal("1/0").is_none());
    }

    #[test]
    fn format_round_trips_decimals() {
        for s in ["100", "0.001", "-2.5", "1020.1"] {
            let r = parse_decimal(s).unwrap();
            assert_eq!(parse_decimal(&format_rat(&r)).unwrap(), r);
        }
        assert_eq!(format_rat(&ratio(1, 3)), "1/3");
    }
}
