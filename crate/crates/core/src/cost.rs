//! Exact action costs.
//!
//! Costs are rationals so that optimality comparisons (and the explanation
//! cost budgets derived from cost gaps) never suffer from float drift.

use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};

pub type Cost = Rational64;

pub fn cost(n: i64) -> Cost {
    Cost::from_integer(n)
}

/// Parses `"10"`, `"2.5"`, `"-3"` or `"5/2"` into an exact rational.
pub fn parse_cost(text: &str) -> Option<Cost> {
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Cost::new(n, d));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 15 {
            return None;
        }
        let negative = int.starts_with('-');
        let int_part: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().ok()? };
        let denom = 10i64.checked_pow(frac.len() as u32)?;
        let frac_part: i64 = frac.parse().ok()?;
        let magnitude = int_part.abs().checked_mul(denom)?.checked_add(frac_part)?;
        let numer = if negative { -magnitude } else { magnitude };
        return Some(Cost::new(numer, denom));
    }
    text.parse::<i64>().ok().map(Cost::from_integer)
}

/// Renders a cost as an integer, a terminating decimal, or `n/d`.
pub fn format_cost(c: &Cost) -> String {
    if c.is_integer() {
        return c.numer().to_string();
    }
    match decimal(c) {
        Some(s) => s,
        None => format!("{}/{}", c.numer(), c.denom()),
    }
}

/// Decimal rendering used for PDDL output. Non-terminating expansions are
/// rounded to 12 places.
pub fn format_cost_decimal(c: &Cost) -> String {
    if c.is_integer() {
        return c.numer().to_string();
    }
    decimal(c).unwrap_or_else(|| format!("{:.12}", *c.numer() as f64 / *c.denom() as f64))
}

fn decimal(c: &Cost) -> Option<String> {
    let mut d = *c.denom();
    let mut places = 0u32;
    let (mut twos, mut fives) = (0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return None;
    }
    places = places.max(twos).max(fives);
    let scale = 10i64.checked_pow(places)?;
    let scaled = (c * Cost::from_integer(scale)).to_integer();
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.abs();
    let int = abs / scale;
    let frac = abs % scale;
    Some(format!("{sign}{int}.{frac:0width$}", width = places as usize))
}

/// Greatest common divisor of positive rationals: the largest `g` such that
/// every input is an integer multiple of `g`. Zero entries are ignored.
pub fn rational_gcd<'a>(values: impl IntoIterator<Item = &'a Cost>) -> Option<Cost> {
    let mut acc: Option<Cost> = None;
    for v in values {
        if v.is_zero() {
            continue;
        }
        let v = v.abs();
        acc = Some(match acc {
            None => v,
            Some(a) => {
                let num = (a.numer() * v.denom()).gcd(&(v.numer() * a.denom()));
                let den = a.denom() * v.denom();
                Cost::new(num, den)
            }
        });
    }
    acc
}

/// Least common multiple of the denominators; multiplying every cost by it
/// yields integers.
pub fn denominator_lcm<'a>(values: impl IntoIterator<Item = &'a Cost>) -> i64 {
    values.into_iter().fold(1i64, |acc, v| acc.lcm(v.denom()))
}

pub mod serde_cost {
    use super::{format_cost, parse_cost, Cost};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(c: &Cost, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_cost(c))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Cost, D::Error> {
        let text = String::deserialize(d)?;
        parse_cost(&text).ok_or_else(|| D::Error::custom(format!("bad cost `{text}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_and_fraction() {
        assert_eq!(parse_cost("2.5"), Some(Cost::new(5, 2)));
        assert_eq!(parse_cost("10"), Some(cost(10)));
        assert_eq!(parse_cost("5/2"), Some(Cost::new(5, 2)));
        assert_eq!(parse_cost("-0.25"), Some(Cost::new(-1, 4)));
        assert_eq!(parse_cost("abc"), None);
        assert_eq!(parse_cost("1/0"), None);
    }

    #[test]
    fn formats_round_trip() {
        for c in [cost(7), Cost::new(5, 2), Cost::new(1, 3), Cost::new(-3, 8)] {
            assert_eq!(parse_cost(&format_cost(&c)), Some(c));
        }
        assert_eq!(format_cost_decimal(&Cost::new(5, 2)), "2.5");
    }

    #[test]
    fn gcd_of_costs() {
        let cs = [cost(10), cost(20), cost(50)];
        assert_eq!(rational_gcd(&cs), Some(cost(10)));
        let cs = [Cost::new(1, 2), Cost::new(3, 4)];
        assert_eq!(rational_gcd(&cs), Some(Cost::new(1, 4)));
        assert_eq!(rational_gcd(&[cost(0)]), None);
        assert_eq!(denominator_lcm(&[Cost::new(1, 2), Cost::new(1, 3)]), 6);
    }
}
