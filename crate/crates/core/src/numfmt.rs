//! Numbers rendered with six significant digits, `%g` style.

/// Formats `x` with six significant digits, trimming trailing zeros.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // exponent after rounding to `digits` significant digits
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(9.0), "9");
        assert_eq!(sig6(100.0), "100");
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
        assert_eq!(sig6(2382.03), "2382.03");
        assert_eq!(sig6(934.48), "934.48");
        assert_eq!(sig6(123456789.0), "1.23457e+08");
        assert_eq!(sig6(0.000012345678), "1.23457e-05");
        assert_eq!(sig6(-0.5), "-0.5");
        assert_eq!(sig6(999999.7), "1e+06");
        assert_eq!(sig6(0.0001), "0.0001");
    }
}
