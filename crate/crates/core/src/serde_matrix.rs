//! Serde adapter writing `Array2` as a list of rows.

use ndarray::Array2;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<T: Serialize + Clone, S: Serializer>(m: &Array2<T>, s: S) -> Result<S::Ok, S::Error> {
    let rows: Vec<Vec<T>> = m.rows().into_iter().map(|r| r.to_vec()).collect();
    rows.serialize(s)
}

pub fn deserialize<'de, T, D>(d: D) -> Result<Array2<T>, D::Error>
where
    T: Deserialize<'de> + Clone,
    D: Deserializer<'de>,
{
    let rows: Vec<Vec<T>> = Vec::deserialize(d)?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(D::Error::custom("ragged matrix"));
    }
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
        .map_err(D::Error::custom)
}
