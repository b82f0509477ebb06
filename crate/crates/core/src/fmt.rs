//! Number formatting shared by the CSV and JSON writers.

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Like [`sig17`], but an empty field for `None`.
pub fn sig17_opt(v: Option<f64>) -> String {
    v.map(sig17).unwrap_or_default()
}
