//! Decimal formatting with 15 significant digits.

/// Rounds to 15 significant digits and prints the shortest decimal that
/// reproduces the rounded value. Non-finite values print as `null`.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.14e}").parse().unwrap_or(x);
    let s = format!("{rounded:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn fifteen_digits() {
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(1.0 / 3.0), "0.333333333333333");
        assert_eq!(num(2.0), "2");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(f64::NAN), "null");
        assert_eq!(num(1.5e-20), "1.5e-20");
    }
}
