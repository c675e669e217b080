//! Number formatting for CSV emission: fixed significant-digit rendering
//! independent of locale and platform, so repeated runs produce identical
//! bytes.

/// Format `x` with `sig` significant digits, printf `%g` style: positional
/// notation for moderate exponents, scientific otherwise, trailing zeros
/// trimmed. NaN renders as `NaN` (the CSV marker for missing values).
pub fn fmt_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1, "sig must be >= 1");
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Round via the exact exponential formatter, then re-typeset.
    let s = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = s.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent");
    let neg = mant.starts_with('-');
    let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), sig);

    let body = if exp < -4 || exp >= sig as i32 {
        let m = trim_fraction(&insert_point(&digits, 1));
        format!("{}e{}", m, exp)
    } else if exp >= 0 {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            let mut d = digits.clone();
            d.push_str(&"0".repeat(int_len - digits.len()));
            d
        } else {
            trim_fraction(&insert_point(&digits, int_len))
        }
    } else {
        let leading = "0".repeat((-exp - 1) as usize);
        trim_fraction(&format!("0.{}{}", leading, digits))
    };
    if neg {
        format!("-{}", body)
    } else {
        body
    }
}

/// Default CSV rendering: 9 significant digits.
pub fn fmt_csv(x: f64) -> String {
    fmt_sig(x, 9)
}

fn insert_point(digits: &str, int_len: usize) -> String {
    format!("{}.{}", &digits[..int_len], &digits[int_len..])
}

fn trim_fraction(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}
