//! Diff-stable number formatting for CSV output.

/// Scientific notation with 12 significant digits: `-1.23456789012e-03`.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // Avoid printing "-0.00000000000e+00".
    let x = if x == 0.0 { 0.0 } else { x };
    let raw = format!("{x:.11e}");
    let (mantissa, exp) = raw.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Joins already-formatted fields into one CSV line without the newline.
pub fn row<I, S>(fields: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    fields.into_iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_twelve_significant_digits() {
        assert_eq!(sci(1.0), "1.00000000000e+00");
        assert_eq!(sci(-0.00123456789012345), "-1.23456789012e-03");
        assert_eq!(sci(6.02214076e23), "6.02214076000e+23");
        assert_eq!(sci(-0.0), "0.00000000000e+00");
        assert_eq!(sci(1e-300), "1.00000000000e-300");
    }

    #[test]
    fn parses_back() {
        for x in [0.1, -3.75, 1e-12, 123456.789] {
            let back: f64 = sci(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-11 * x.abs());
        }
    }
}
