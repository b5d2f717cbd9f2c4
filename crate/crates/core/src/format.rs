//! Number formatting for CSV output.

/// Shortest decimal that round-trips to `v`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v}")
    }
}

/// `v` rounded to `digits` significant digits, printed in shortest form.
pub fn fmt_sig(v: f64, digits: usize) -> String {
    if !v.is_finite() || v == 0.0 {
        return fmt_f64(if v == 0.0 { 0.0 } else { v });
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), v)
        .parse()
        .expect("formatted float parses");
    fmt_f64(rounded)
}
