//! JSON has no infinity: infinite values are written as `null` and read back
//! as `+inf`.

use serde::{Deserialize, Deserializer};

pub(crate) fn scalar<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

pub(crate) fn vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(Vec::<Option<f64>>::deserialize(d)?
        .into_iter()
        .map(|v| v.unwrap_or(f64::INFINITY))
        .collect())
}
