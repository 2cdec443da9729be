//! Fixed-precision decimal rounding.
//!
//! Rounding works on the shortest round-trip decimal representation of a
//! value, so `1.005` rounds to `1.01` at two places even though the nearest
//! binary double lies slightly below 1.005. Ties go away from zero and the
//! result is never negative zero.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ChemError;

/// Number of decimal places kept for coordinates: 1, 2, or 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Precision(u8);

impl Precision {
    pub fn new(places: u8) -> Result<Self, ChemError> {
        if (1..=3).contains(&places) {
            Ok(Precision(places))
        } else {
            Err(ChemError::InvalidPrecision(places))
        }
    }

    pub fn places(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u8> for Precision {
    type Error = ChemError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Precision::new(v)
    }
}

impl From<Precision> for u8 {
    fn from(p: Precision) -> u8 {
        p.0
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Rounds `x` to `places` decimals, half away from zero.
pub fn round_half_away(x: f64, places: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let digits = format!("{}", x.abs());
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits.as_str(), ""),
    };
    let magnitude = if frac_part.len() <= places {
        x.abs()
    } else {
        let round_up = frac_part.as_bytes()[places] >= b'5';
        let mut kept: Vec<u8> = int_part.bytes().chain(frac_part[..places].bytes()).collect();
        if round_up {
            increment_decimal(&mut kept);
        }
        let kept = String::from_utf8(kept).expect("ascii digits");
        let split = kept.len() - places;
        format!("{}.{}", &kept[..split], &kept[split..])
            .parse::<f64>()
            .expect("decimal literal")
    };
    let out = if x < 0.0 { -magnitude } else { magnitude };
    if out == 0.0 {
        0.0
    } else {
        out
    }
}

fn increment_decimal(digits: &mut Vec<u8>) {
    for d in digits.iter_mut().rev() {
        if *d == b'9' {
            *d = b'0';
        } else {
            *d += 1;
            return;
        }
    }
    digits.insert(0, b'1');
}

/// Formats `x` with exactly `places` decimals after rounding half away from zero.
pub fn format_fixed(x: f64, places: usize) -> String {
    let r = round_half_away(x, places);
    format!("{r:.places$}")
}

/// Parses a fixed-precision decimal token: optional `-`, digits, `.`, exactly `places` digits.
pub fn parse_fixed(token: &str, places: usize) -> Option<f64> {
    let body = token.strip_prefix('-').unwrap_or(token);
    let (int_part, frac_part) = body.split_once('.')?;
    if int_part.is_empty()
        || frac_part.len() != places
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let v: f64 = token.parse().ok()?;
    Some(if v == 0.0 { 0.0 } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn half_away_from_zero() {
        assert_eq!(round_half_away(1.005, 2), 1.01);
        assert_eq!(round_half_away(-1.005, 2), -1.01);
        assert_eq!(round_half_away(2.5, 0), 3.0);
        assert_eq!(round_half_away(0.9996, 3), 1.0);
        assert_eq!(round_half_away(9.995, 2), 10.0);
        assert_eq!(round_half_away(1.98, 2), 1.98);
        assert_eq!(round_half_away(1e-7, 3), 0.0);
    }

    #[test]
    fn no_negative_zero() {
        let r = round_half_away(-0.004, 2);
        assert_eq!(r, 0.0);
        assert!(r.is_sign_positive());
        assert_eq!(format_fixed(-0.004, 2), "0.00");
        assert_eq!(format_fixed(-0.0, 1), "0.0");
    }

    #[test]
    fn fixed_formatting() {
        assert_eq!(format_fixed(1.005, 2), "1.01");
        assert_eq!(format_fixed(-1.98, 2), "-1.98");
        assert_eq!(format_fixed(0.0, 3), "0.000");
        assert_eq!(format_fixed(90.0, 3), "90.000");
    }

    #[test]
    fn fixed_parsing() {
        assert_eq!(parse_fixed("-1.98", 2), Some(-1.98));
        assert_eq!(parse_fixed("1.9", 2), None);
        assert_eq!(parse_fixed(".98", 2), None);
        assert_eq!(parse_fixed("1e2", 2), None);
        assert!(parse_fixed("-0.00", 2).unwrap().is_sign_positive());
    }

    proptest! {
        #[test]
        fn rounding_is_idempotent(x in -1000.0f64..1000.0, places in 1usize..=3) {
            let r = round_half_away(x, places);
            prop_assert_eq!(round_half_away(r, places), r);
            prop_assert!((r - x).abs() <= 0.5 * 10f64.powi(-(places as i32)) + 1e-9);
        }

        #[test]
        fn format_parse_round_trip(x in -1000.0f64..1000.0, places in 1usize..=3) {
            let s = format_fixed(x, places);
            prop_assert_eq!(parse_fixed(&s, places), Some(round_half_away(x, places)));
        }
    }
}
