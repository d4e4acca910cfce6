//! Exact decimal/fraction parsing for hyperparameters and rates.

use num_rational::Ratio;

pub type Rational = Ratio<i64>;

/// Parses `"3"`, `"-2"`, `"0.125"` or `"255/2"` into an exact rational.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: i64 = num.trim().parse().ok()?;
        let den: i64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    let (negative, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    if frac_part.len() > 15 {
        return None;
    }
    let den = 10i64.checked_pow(frac_part.len() as u32)?;
    let int_val: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let frac_val: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().ok()?
    };
    let num = int_val.checked_mul(den)?.checked_add(frac_val)?;
    Some(Rational::new(if negative { -num } else { num }, den))
}

pub fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `round(r * n)` with halves rounded up, for non-negative `r`.
pub fn round_half_up_mul(r: Rational, n: usize) -> i64 {
    let n = n as i64;
    (2 * r.numer() * n + r.denom()).div_euclid(2 * r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_forms() {
        assert_eq!(parse_rational("3"), Some(Rational::from_integer(3)));
        assert_eq!(parse_rational("0.1"), Some(Rational::new(1, 10)));
        assert_eq!(parse_rational("-2.50"), Some(Rational::new(-5, 2)));
        assert_eq!(parse_rational("255/2"), Some(Rational::new(255, 2)));
        assert_eq!(parse_rational(".5"), Some(Rational::new(1, 2)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
        assert_eq!(parse_rational(""), None);
        assert_eq!(parse_rational("1e3"), None);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round_half_up_mul(Rational::new(1, 10), 20), 2);
        assert_eq!(round_half_up_mul(Rational::new(1, 10), 25), 3);
        assert_eq!(round_half_up_mul(Rational::new(1, 10), 24), 2);
        assert_eq!(round_half_up_mul(Rational::new(1, 10), 4), 0);
        assert_eq!(round_half_up_mul(Rational::new(1, 10), 5), 1);
        assert_eq!(round_half_up_mul(Rational::from_integer(1), 7), 7);
        assert_eq!(round_half_up_mul(Rational::from_integer(0), 7), 0);
    }
}
