//! Number formatting shared by CSV and JSON reports.

use serde::Serializer;

/// Rounds to 15 significant digits.
pub fn round15(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.14e}").parse().unwrap_or(v)
}

/// `v` with at most 15 significant digits, in the shortest form that reads
/// back to the rounded value. Plain notation in `[1e-5, 1e15)`, exponent
/// notation outside.
pub fn fmt15(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r = round15(v);
    let a = r.abs();
    if r == 0.0 || (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

pub fn fmt15_opt(v: Option<f64>) -> String {
    v.map(fmt15).unwrap_or_default()
}

/// Serde helper: floats rounded to 15 significant digits.
pub fn ser15<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round15(*v))
}

pub fn ser15_opt<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(x) => s.serialize_f64(round15(*x)),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        assert_eq!(fmt15(0.1), "0.1");
        assert_eq!(fmt15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt15(-2.0), "-2");
        assert_eq!(fmt15(1e-20), "1e-20");
        assert_eq!(fmt15(6.02214076e23), "6.02214076e23");
        assert_eq!(fmt15(f64::INFINITY), "inf");
        assert_eq!(fmt15(std::f64::consts::PI), "3.14159265358979");
        assert_eq!(fmt15_opt(None), "");
    }
}
