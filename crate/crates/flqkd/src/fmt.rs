//! Compact numeric formatting for CSV and TOML output.
//!
//! [`format_g10`] mirrors C's `printf("%.10g")`: ten significant digits,
//! trailing zeros trimmed, scientific notation only when the decimal exponent
//! falls outside [-4, 10). Keeping one canonical formatter makes output files
//! byte-stable across runs and worker counts.

/// Format with `%.10g` semantics: up to ten significant digits, fixed
/// notation for decimal exponents in [-4, 10), scientific otherwise, with
/// trailing zeros removed and a two-digit (or longer) signed exponent.
///
/// Differences from C: negative zero prints as `0`, and non-finite values
/// print as `nan`, `inf`, `-inf`.
pub fn format_g10(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_owned();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_owned() } else { "-inf".to_owned() };
    }
    if x == 0.0 {
        return "0".to_owned();
    }
    // Ten significant digits, correctly rounded by the standard formatter.
    let sci = format!("{x:.9e}");
    let (mantissa, exponent) = sci.split_once('e').expect("{:e} always has an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: Vec<u8> = mantissa.bytes().filter(u8::is_ascii_digit).collect();
    debug_assert_eq!(digits.len(), 10);
    let digits = std::str::from_utf8(&digits).expect("ascii digits").to_owned();

    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if (-4..10).contains(&exponent) {
        // Fixed notation: the decimal point sits after `exponent + 1` digits.
        let point = exponent + 1;
        if point <= 0 {
            out.push_str("0.");
            for _ in 0..-point {
                out.push('0');
            }
            out.push_str(&digits);
        } else {
            let point = point as usize;
            out.push_str(&digits[..point]);
            if point < digits.len() {
                out.push('.');
                out.push_str(&digits[point..]);
            }
        }
        if out.contains('.') {
            while out.ends_with('0') {
                out.pop();
            }
            if out.ends_with('.') {
                out.pop();
            }
        }
    } else {
        out.push_str(&digits[..1]);
        let fraction = digits[1..].trim_end_matches('0');
        if !fraction.is_empty() {
            out.push('.');
            out.push_str(fraction);
        }
        out.push('e');
        out.push(if exponent >= 0 { '+' } else { '-' });
        let magnitude = exponent.unsigned_abs();
        if magnitude < 10 {
            out.push('0');
        }
        out.push_str(&magnitude.to_string());
    }
    out
}
