//! Text formatting shared by the CSV writers.

/// Shortest decimal representation that parses back to the same `f64`.
///
/// Uses Rust's `Debug` formatting, which switches to exponent notation for
/// very large or very small magnitudes (`1e-7`, `1e20`).
pub fn number(x: f64) -> String {
    format!("{x:?}")
}
