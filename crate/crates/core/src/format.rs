//! Numeric formatting for emitted CSV files.

/// Significant digits used in every numeric output CSV.
pub const OUTPUT_SIG_DIGITS: usize = 12;

/// `%.{digits}g`-style formatting: fixed notation for moderate exponents,
/// scientific otherwise, trailing zeros trimmed.
pub fn sig(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return if value.is_nan() {
            "NaN".into()
        } else if value > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    // Exponent after rounding to `digits` significant digits.
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci
        .split_once('e')
        .expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, value);
        if fixed.contains('.') {
            trim_zeros(&fixed).to_string()
        } else {
            fixed
        }
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Output-CSV formatting (12 significant digits).
pub fn num(value: f64) -> String {
    sig(value, OUTPUT_SIG_DIGITS)
}
