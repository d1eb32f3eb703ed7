//! Artifact number formatting: 12 significant digits, '.' decimal, no
//! locale, trailing zeros trimmed so equal values always print the same
//! bytes and the files diff cleanly.

/// Render with 12 significant digits: plain decimal for magnitudes in
/// [1e-4, 1e12), scientific notation outside, and a bare "0" for zero.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        trim_decimal(format!("{x:.decimals$}"))
    } else {
        let s = format!("{x:.11e}");
        match s.split_once('e') {
            Some((mantissa, exponent)) => {
                format!("{}e{exponent}", trim_decimal(mantissa.to_string()))
            }
            None => s,
        }
    }
}

fn trim_decimal(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn formats_cover_the_magnitude_ranges() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.0), "0");
        assert_eq!(sig12(0.5), "0.5");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(0.78753), "0.78753");
        assert_eq!(sig12(1.421e-1), "0.1421");
        assert_eq!(sig12(0.0001), "0.0001");
        assert_eq!(sig12(1e-5), "1e-5");
        assert_eq!(sig12(4.12143e-13), "4.12143e-13");
        assert_eq!(sig12(2.497829045623), "2.49782904562");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(1e12), "1e12");
        assert_eq!(sig12(123456789.0), "123456789");
    }

    #[test]
    fn parses_back_to_twelve_digit_accuracy() {
        for &x in &[0.787530463682802, 2.49782904562319, 3.67373797659, 1e-7, 9.9999999999e11] {
            let round: f64 = sig12(x).parse().unwrap();
            assert!((round - x).abs() <= 1e-11 * x.abs());
        }
    }
}
