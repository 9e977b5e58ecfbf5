//! Number formatting shared by every CSV writer.

/// Formats `x` with 9 significant digits.
///
/// Plain decimal notation for magnitudes in `[1e-6, 1e15)`, scientific
/// notation otherwise. Zero (of either sign) prints as `0`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs();
    if !(1e-6..1e15).contains(&mag) {
        return format!("{x:.8e}");
    }
    let exponent = mag.log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (9.9999999996 -> 10.00000000).
    let digits = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|c| *c == '0').count();
    if digits > 9 && decimals > 0 {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}
