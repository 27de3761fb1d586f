/// Formats `x` rounded to 12 significant digits, in the shortest form that
/// parses back to the rounded value.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::fmt12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(0.4), "0.4");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(34.0 / 15.0), "2.26666666667");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(f64::INFINITY), "inf");
        assert_eq!(fmt12(123456789012345.0), "123456789012000");
    }
}
