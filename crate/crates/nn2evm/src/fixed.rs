//! Signed fixed-point arithmetic with 18 implied decimal places.
//!
//! Values are `raw / 10^18` where `raw` is a signed integer with
//! `|raw| < 2^255`, the same representation the generated contracts use for
//! their `int256` parameters. Multiplication truncates toward zero, matching
//! Solidity integer division of the full-width product by the scale.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Number of implied decimal places.
pub const DECIMALS: u32 = 18;

/// `10^18`, the implied scale.
pub fn scale() -> BigInt {
    BigInt::from(1_000_000_000_000_000_000_u64)
}

fn range_bound() -> BigInt {
    BigInt::one() << 255
}

/// A signed 18-decimal fixed-point value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fp {
    raw: BigInt,
}

impl Fp {
    /// Wraps a raw scaled integer, enforcing `|raw| < 2^255`.
    pub fn from_raw(raw: BigInt) -> Result<Self> {
        if raw.abs() >= range_bound() {
            return Err(Error::Overflow(format!("raw {raw} outside signed 256-bit range")));
        }
        Ok(Fp { raw })
    }

    /// Wraps a raw scaled integer that cannot be out of range.
    pub fn from_raw_i128(raw: i128) -> Self {
        Fp { raw: BigInt::from(raw) }
    }

    pub fn zero() -> Self {
        Fp { raw: BigInt::zero() }
    }

    /// 1.0, i.e. raw `10^18`.
    pub fn one() -> Self {
        Fp { raw: scale() }
    }

    /// Largest representable value, raw `2^255 - 1`.
    pub fn max_value() -> Self {
        Fp { raw: range_bound() - 1 }
    }

    /// Smallest representable value, raw `-(2^255 - 1)`.
    pub fn min_value() -> Self {
        Fp { raw: 1 - range_bound() }
    }

    pub fn raw(&self) -> &BigInt {
        &self.raw
    }

    pub fn into_raw(self) -> BigInt {
        self.raw
    }

    pub fn is_negative(&self) -> bool {
        self.raw.is_negative()
    }

    /// Parses a decimal string with at most 18 fractional digits, exactly.
    pub fn from_decimal(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        let mut pos = 0;
        let negative = if bytes.first() == Some(&b'-') {
            pos += 1;
            true
        } else {
            false
        };

        let int_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == int_start {
            return Err(Error::DecimalSyntax { offset: pos, msg: "expected digit".into() });
        }
        let int_part: BigInt = s[int_start..pos].parse().expect("digits");

        let mut frac_raw = BigInt::zero();
        if pos < bytes.len() && bytes[pos] == b'.' {
            pos += 1;
            let frac_start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let digits = pos - frac_start;
            if digits == 0 {
                return Err(Error::DecimalSyntax {
                    offset: pos,
                    msg: "expected fractional digit after '.'".into(),
                });
            }
            if digits > DECIMALS as usize {
                return Err(Error::Precision { digits });
            }
            let frac: BigInt = s[frac_start..pos].parse().expect("digits");
            frac_raw = frac * BigInt::from(10u32).pow(DECIMALS - digits as u32);
        }
        if pos != bytes.len() {
            return Err(Error::DecimalSyntax {
                offset: pos,
                msg: format!("unexpected character {:?}", s[pos..].chars().next().unwrap()),
            });
        }

        let mut raw = int_part * scale() + frac_raw;
        if negative {
            raw = -raw;
        }
        Fp::from_raw(raw)
    }

    /// Canonical decimal string: no trailing fractional zeros, no `-0`.
    pub fn to_decimal(&self) -> String {
        let mag = self.raw.abs();
        let (int_part, frac_part) = (mag.clone() / scale(), mag % scale());
        let sign = if self.raw.is_negative() { "-" } else { "" };
        if frac_part.is_zero() {
            return format!("{sign}{int_part}");
        }
        let frac = format!("{frac_part:018}");
        let frac = frac.trim_end_matches('0');
        format!("{sign}{int_part}.{frac}")
    }

    pub fn checked_add(&self, other: &Fp) -> Result<Fp> {
        Fp::from_raw(&self.raw + &other.raw)
    }

    pub fn checked_sub(&self, other: &Fp) -> Result<Fp> {
        Fp::from_raw(&self.raw - &other.raw)
    }

    /// Fixed-point product: full-width `a.raw * b.raw`, divided by `10^18`
    /// truncating toward zero.
    pub fn checked_mul(&self, other: &Fp) -> Result<Fp> {
        Fp::from_raw((&self.raw * &other.raw) / scale())
    }

    /// `max(0, self)`.
    pub fn relu(&self) -> Fp {
        if self.raw.is_negative() {
            Fp::zero()
        } else {
            self.clone()
        }
    }

    /// Rounds `x` half-away-from-zero to `d` decimal places and stores it at
    /// scale `10^18`, so the result raw is a multiple of `10^(18-d)`.
    pub fn quantize(x: f64, d: u32) -> Result<Fp> {
        if d > DECIMALS {
            return Err(Error::PrecisionRange(d));
        }
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("cannot quantize {x}")));
        }
        let exact = BigRational::from_float(x).expect("finite");
        let grid = BigRational::from_integer(BigInt::from(10u32).pow(d));
        let units = (exact * grid).round().to_integer();
        Fp::from_raw(units * BigInt::from(10u32).pow(DECIMALS - d))
    }
}

impl std::fmt::Display for Fp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_decimal())
    }
}

/// One recorded fixed-point operation, raw operands and raw result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpOp {
    pub kind: FpOpKind,
    pub lhs: BigInt,
    pub rhs: BigInt,
    pub out: BigInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpOpKind {
    Mul,
    Add,
}
