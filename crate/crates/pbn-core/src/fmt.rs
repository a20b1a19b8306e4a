//! Canonical decimal formatting used in reports and diagnostics.

/// Formats `x` with up to 15 significant digits, positional, trailing
/// zeros trimmed. `0.625` stays `0.625`, thirds become
/// `0.333333333333333`, integers print bare.
pub fn sig15(x: f64) -> String {
    sig(x, 15)
}

/// Same as [`sig15`] with a caller-chosen digit budget.
pub fn sig(x: f64, digits: usize) -> String {
    assert!(digits > 0);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    // The exponent is read back from scientific notation so powers of
    // ten near the f64 rounding boundary never come out off by one.
    let sci = format!("{:.*e}", digits - 1, x);
    let epos = sci.find('e').expect("scientific notation");
    let exp: i32 = sci[epos + 1..].parse().expect("exponent");
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let out = format!("{x:.decimals$}");
    if out.contains('.') {
        out.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        out
    }
}
