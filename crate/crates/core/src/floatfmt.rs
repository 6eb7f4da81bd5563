//! Float serialization at 17 significant digits.
//!
//! 17 significant decimal digits uniquely identify every binary64 value,
//! so text artifacts written through these helpers parse back bit-exactly.

use serde::ser::{Error as _, SerializeSeq, Serializer};
use serde_json::value::RawValue;

/// Formats an `f64` with 17 significant digits (`d.dddddddddddddddde±x`).
pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn raw17<E: serde::ser::Error>(x: f64) -> Result<Box<RawValue>, E> {
    if !x.is_finite() {
        return Err(E::custom("cannot serialize non-finite float"));
    }
    RawValue::from_string(fmt17(x)).map_err(E::custom)
}

/// Serializes one float as a 17-significant-digit JSON number.
pub(crate) fn ser_f64<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw17::<S::Error>(*x)?.serialize(s)
}

/// Serializes `Option<f64>`; pair with `skip_serializing_if = "Option::is_none"`.
pub(crate) fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Serializes a float slice as a JSON array of 17-significant-digit numbers.
pub(crate) fn ser_f64_slice<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(xs.len()))?;
    for &x in xs {
        seq.serialize_element(&raw17::<S::Error>(x)?)?;
    }
    seq.end()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips_exactly() {
        for &x in &[
            0.0,
            -0.0,
            1.0,
            -1.0,
            0.1,
            std::f64::consts::PI,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            2.2250738585072014e-308,
            1.7976931348623157e308,
            -9.869604401089358e-5,
        ] {
            let back: f64 = fmt17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} reprinted as {}", fmt17(x));
        }
    }

    #[test]
    fn fmt17_is_valid_json() {
        for &x in &[1.5, -2.0e-7, 0.0] {
            let v: serde_json::Value = serde_json::from_str(&fmt17(x)).unwrap();
            assert_eq!(v.as_f64().unwrap(), x);
        }
    }
}
