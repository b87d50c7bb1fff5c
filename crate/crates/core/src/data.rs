//! Functional panel container, on-disk format, and covariate standardization.
//!
//! Two delimited tables describe a dataset. The response table is wide: the
//! header row carries the observation grid, each following row holds one
//! subject's curve. An optional leading label column (non-numeric header
//! cell such as `id`) is ignored. The covariate table has named columns and
//! one row per subject, in the same order as the response table. Comma or tab
//! delimiters are detected from the header line.
//!
//! Column lists in a [`Schema`] may use the name `1` to request a synthesized
//! constant column.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Name used for a synthesized all-ones column.
pub const CONSTANT_COLUMN: &str = "1";

/// Affine map from the stored grid back to the original units:
/// `original = offset + scale * stored`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMap<T> {
    pub offset: T,
    pub scale: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnNames {
    pub x: Vec<String>,
    pub z1: String,
    pub z2: Vec<String>,
}

/// Responses on a shared grid plus scalar covariates and grouping variables.
///
/// Indices are zero-based: `x` column 0 is conventionally the intercept and
/// `z2` column 0 must be identically one.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset<T> {
    y: Array2<T>,
    grid: Vec<T>,
    x: Array2<T>,
    xtilde_cols: Vec<usize>,
    z1: Vec<T>,
    z2: Array2<T>,
    names: ColumnNames,
    grid_map: Option<GridMap<T>>,
}

fn is_all_ones<T: Real>(col: impl IntoIterator<Item = T>) -> bool {
    col.into_iter().all(|v| v == T::one())
}

fn default_names<T: Real>(x: &Array2<T>, z2: &Array2<T>) -> ColumnNames {
    let x_names = (0..x.ncols())
        .map(|k| {
            if is_all_ones(x.column(k).iter().copied()) {
                CONSTANT_COLUMN.to_string()
            } else {
                format!("x{k}")
            }
        })
        .collect();
    let z2_names = (0..z2.ncols())
        .map(|k| {
            if is_all_ones(z2.column(k).iter().copied()) {
                CONSTANT_COLUMN.to_string()
            } else {
                format!("z2_{k}")
            }
        })
        .collect();
    ColumnNames {
        x: x_names,
        z1: "z1".into(),
        z2: z2_names,
    }
}

fn check_finite<T: Real>(m: &Array2<T>, what: &str) -> Result<()> {
    for ((i, j), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::Parse {
                row: i + 1,
                column: j + 1,
                message: format!("non-finite value in {what}"),
            });
        }
    }
    Ok(())
}

impl<T: Real> FunctionalDataset<T> {
    /// Validates and canonicalizes a dataset. The grid is sorted ascending
    /// together with the response columns and, when it leaves `[0, 1]`,
    /// mapped affinely onto `[0, 1]` (the map is kept in [`Self::grid_map`]).
    pub fn new(
        y: Array2<T>,
        grid: Vec<T>,
        x: Array2<T>,
        xtilde_cols: Vec<usize>,
        z1: Vec<T>,
        z2: Array2<T>,
    ) -> Result<Self> {
        let names = default_names(&x, &z2);
        Self::with_names(y, grid, x, xtilde_cols, z1, z2, names)
    }

    pub fn with_names(
        y: Array2<T>,
        grid: Vec<T>,
        x: Array2<T>,
        xtilde_cols: Vec<usize>,
        z1: Vec<T>,
        z2: Array2<T>,
        names: ColumnNames,
    ) -> Result<Self> {
        let n = y.nrows();
        let m = y.ncols();
        if n == 0 || m == 0 {
            return Err(Error::schema("y", "response matrix is empty"));
        }
        if grid.len() != m {
            return Err(Error::schema(
                "grid",
                format!("{} grid values for {} response columns", grid.len(), m),
            ));
        }
        if x.nrows() != n {
            return Err(Error::schema("x", format!("{} rows, expected {n}", x.nrows())));
        }
        if z1.len() != n {
            return Err(Error::schema(&names.z1, format!("{} rows, expected {n}", z1.len())));
        }
        if z2.nrows() != n {
            return Err(Error::schema("z2", format!("{} rows, expected {n}", z2.nrows())));
        }
        if names.x.len() != x.ncols() || names.z2.len() != z2.ncols() {
            return Err(Error::schema("names", "column name count does not match data"));
        }
        let p = x.ncols();
        if p == 0 {
            return Err(Error::schema("x", "at least one predictor is required"));
        }
        if xtilde_cols.is_empty() || xtilde_cols.len() > p {
            return Err(Error::schema("xtilde", format!("need 1 <= d <= p = {p}")));
        }
        for (a, &c) in xtilde_cols.iter().enumerate() {
            if c >= p {
                return Err(Error::schema("xtilde", format!("column index {c} out of range")));
            }
            if xtilde_cols[..a].contains(&c) {
                return Err(Error::schema("xtilde", format!("column index {c} repeated")));
            }
        }
        check_finite(&y, "responses")?;
        check_finite(&x, "x")?;
        check_finite(&z2, "z2")?;
        if let Some(i) = z1.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: i + 1,
                column: 1,
                message: format!("non-finite value in {}", names.z1),
            });
        }
        if let Some(i) = grid.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row: 0,
                column: i + 1,
                message: "non-finite grid value".into(),
            });
        }
        if z2.ncols() == 0 || !is_all_ones(z2.column(0).iter().copied()) {
            return Err(Error::Identification(
                "first grouping column (z2) must be identically 1".into(),
            ));
        }

        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| grid[a].partial_cmp(&grid[b]).unwrap());
        let mut sorted_grid: Vec<T> = order.iter().map(|&j| grid[j]).collect();
        if let Some(w) = sorted_grid.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateGrid(w[0].as_f64()));
        }
        let y = if order.iter().enumerate().all(|(a, &b)| a == b) {
            y
        } else {
            Array2::from_shape_fn((n, m), |(i, j)| y[(i, order[j])])
        };

        let lo = sorted_grid[0];
        let hi = sorted_grid[m - 1];
        let grid_map = if lo < T::zero() || hi > T::one() {
            let scale = hi - lo;
            if scale > T::zero() {
                for s in &mut sorted_grid {
                    *s = (*s - lo) / scale;
                }
            } else {
                sorted_grid[0] = T::zero();
            }
            Some(GridMap { offset: lo, scale })
        } else {
            None
        };

        Ok(FunctionalDataset {
            y,
            grid: sorted_grid,
            x,
            xtilde_cols,
            z1,
            z2,
            names,
            grid_map,
        })
    }

    /// Same covariates, new responses on the same grid.
    pub fn with_response(&self, y: Array2<T>) -> Result<Self> {
        if y.dim() != self.y.dim() {
            return Err(Error::schema("y", "replacement responses have a different shape"));
        }
        check_finite(&y, "responses")?;
        Ok(FunctionalDataset { y, ..self.clone() })
    }

    /// The subjects at `rows`, in the given order, on the same grid.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DegenerateInput("empty subject subset".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n()) {
            return Err(Error::LengthMismatch {
                expected: self.n(),
                found: bad + 1,
            });
        }
        Ok(FunctionalDataset {
            y: self.y.select(Axis(0), rows),
            x: self.x.select(Axis(0), rows),
            z1: rows.iter().map(|&i| self.z1[i]).collect(),
            z2: self.z2.select(Axis(0), rows),
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }
    pub fn m(&self) -> usize {
        self.y.ncols()
    }
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
    pub fn d(&self) -> usize {
        self.xtilde_cols.len()
    }
    pub fn q(&self) -> usize {
        self.z2.ncols()
    }
    pub fn y(&self) -> &Array2<T> {
        &self.y
    }
    pub fn grid(&self) -> &[T] {
        &self.grid
    }
    pub fn x(&self) -> &Array2<T> {
        &self.x
    }
    pub fn xtilde_cols(&self) -> &[usize] {
        &self.xtilde_cols
    }
    pub fn z1(&self) -> &[T] {
        &self.z1
    }
    pub fn z2(&self) -> &Array2<T> {
        &self.z2
    }
    pub fn names(&self) -> &ColumnNames {
        &self.names
    }
    pub fn grid_map(&self) -> Option<GridMap<T>> {
        self.grid_map
    }

    /// x̃_i as an owned row.
    pub fn xtilde_row(&self, i: usize) -> Vec<T> {
        self.xtilde_cols.iter().map(|&c| self.x[(i, c)]).collect()
    }

    /// The full grouping vector z_i = (z1_i, z2_iᵀ)ᵀ.
    pub fn z_full(&self, i: usize) -> Vec<T> {
        std::iter::once(self.z1[i]).chain(self.z2.row(i).iter().copied()).collect()
    }

    /// Threshold index z1_i + z2_iᵀγ for every subject.
    pub fn grouping_index(&self, gamma: &[T]) -> Vec<T> {
        assert_eq!(gamma.len(), self.q());
        (0..self.n())
            .map(|i| {
                self.z2
                    .row(i)
                    .iter()
                    .zip(gamma)
                    .fold(self.z1[i], |acc, (&z, &g)| acc + z * g)
            })
            .collect()
    }

    /// Schema that reloads this dataset from files written by [`save_dataset`].
    pub fn schema(&self) -> Schema {
        Schema {
            z1: self.names.z1.clone(),
            z2: self.names.z2.clone(),
            x: self.names.x.clone(),
            xtilde: self.xtilde_cols.iter().map(|&c| self.names.x[c].clone()).collect(),
        }
    }

    fn map_column(&self, col: ColumnRef, f: impl Fn(T) -> T) -> Self {
        let mut out = self.clone();
        match col {
            ColumnRef::X(k) => out.x.column_mut(k).mapv_inplace(&f),
            ColumnRef::Z1 => out.z1.iter_mut().for_each(|v| *v = f(*v)),
            ColumnRef::Z2(k) => out.z2.column_mut(k).mapv_inplace(&f),
        }
        out
    }

    fn column_values(&self, col: ColumnRef) -> Vec<T> {
        match col {
            ColumnRef::X(k) => self.x.column(k).to_vec(),
            ColumnRef::Z1 => self.z1.clone(),
            ColumnRef::Z2(k) => self.z2.column(k).to_vec(),
        }
    }

    fn column_name(&self, col: ColumnRef) -> String {
        match col {
            ColumnRef::X(k) => self.names.x[k].clone(),
            ColumnRef::Z1 => self.names.z1.clone(),
            ColumnRef::Z2(k) => self.names.z2[k].clone(),
        }
    }
}

/// Column mapping from covariate-table headers to model roles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub z1: String,
    pub z2: Vec<String>,
    pub x: Vec<String>,
    /// Subset of `x` forming x̃.
    pub xtilde: Vec<String>,
}

fn detect_delimiter(path: &Path) -> Result<u8> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    Ok(if first.contains('\t') { b'\t' } else { b',' })
}

fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let delim = detect_delimiter(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

fn parse_cell<T: Real>(s: &str, row: usize, column: usize) -> Result<T> {
    let v: T = s.parse().map_err(|_| Error::Parse {
        row,
        column,
        message: format!("cannot parse `{s}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            column,
            message: format!("non-finite value `{s}`"),
        });
    }
    Ok(v)
}

/// Reads a dataset from a response table and a covariate table.
pub fn load_dataset<T: Real>(
    response_path: impl AsRef<Path>,
    covariate_path: impl AsRef<Path>,
    schema: &Schema,
) -> Result<FunctionalDataset<T>> {
    let (rheader, rrows) = read_table(response_path.as_ref())?;
    let skip = usize::from(rheader.first().is_some_and(|h| h.parse::<f64>().is_err()));
    let mut grid = Vec::with_capacity(rheader.len() - skip);
    for (j, h) in rheader.iter().enumerate().skip(skip) {
        grid.push(parse_cell::<T>(h, 1, j + 1)?);
    }
    let m = grid.len();
    let n = rrows.len();
    let mut y = Vec::with_capacity(n * m);
    for (i, row) in rrows.iter().enumerate() {
        if row.len() != m + skip {
            return Err(Error::schema(
                "responses",
                format!("row {} has {} cells, expected {}", i + 2, row.len(), m + skip),
            ));
        }
        for (j, cell) in row.iter().enumerate().skip(skip) {
            y.push(parse_cell::<T>(cell, i + 2, j + 1)?);
        }
    }

    let (cheader, crows) = read_table(covariate_path.as_ref())?;
    if crows.len() != n {
        return Err(Error::schema(
            "covariates",
            format!("{} covariate rows but {} response rows", crows.len(), n),
        ));
    }
    let index: BTreeMap<&str, usize> = cheader.iter().enumerate().map(|(k, h)| (h.as_str(), k)).collect();
    let column = |name: &str| -> Result<Vec<T>> {
        if name == CONSTANT_COLUMN {
            return Ok(vec![T::one(); n]);
        }
        let &k = index
            .get(name)
            .ok_or_else(|| Error::schema(name, "column not found in covariate table"))?;
        crows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row
                    .get(k)
                    .ok_or_else(|| Error::schema(name, format!("row {} is too short", i + 2)))?;
                parse_cell::<T>(cell, i + 2, k + 1)
            })
            .collect()
    };
    let matrix = |names: &[String]| -> Result<Array2<T>> {
        let mut out = Array2::zeros((n, names.len()));
        for (k, name) in names.iter().enumerate() {
            for (i, v) in column(name)?.into_iter().enumerate() {
                out[(i, k)] = v;
            }
        }
        Ok(out)
    };
    let x = matrix(&schema.x)?;
    let z2 = matrix(&schema.z2)?;
    let z1 = column(&schema.z1)?;
    let xtilde_cols = schema
        .xtilde
        .iter()
        .map(|name| {
            schema
                .x
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::schema(name, "x-tilde column is not one of the x columns"))
        })
        .collect::<Result<Vec<_>>>()?;
    let names = ColumnNames {
        x: schema.x.clone(),
        z1: schema.z1.clone(),
        z2: schema.z2.clone(),
    };
    let y = Array2::from_shape_vec((n, m), y).expect("shape checked");
    FunctionalDataset::with_names(y, grid, x, xtilde_cols, z1, z2, names)
}

/// Writes a dataset as a comma-delimited response table and covariate table.
/// Reload with `load_dataset(.., &ds.schema())`.
pub fn save_dataset<T: Real>(
    ds: &FunctionalDataset<T>,
    response_path: impl AsRef<Path>,
    covariate_path: impl AsRef<Path>,
) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(response_path)?);
    write!(w, "id")?;
    for s in ds.grid() {
        write!(w, ",{s}")?;
    }
    writeln!(w)?;
    for i in 0..ds.n() {
        write!(w, "{}", i + 1)?;
        for v in ds.y().row(i) {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;

    let mut cols: Vec<(String, Vec<T>)> = Vec::new();
    let mut push = |name: &str, values: Vec<T>| {
        if name != CONSTANT_COLUMN && !cols.iter().any(|(c, _)| c == name) {
            cols.push((name.to_string(), values));
        }
    };
    for (k, name) in ds.names.x.iter().enumerate() {
        push(name, ds.x.column(k).to_vec());
    }
    push(&ds.names.z1, ds.z1.clone());
    for (k, name) in ds.names.z2.iter().enumerate() {
        push(name, ds.z2.column(k).to_vec());
    }
    let mut w = std::io::BufWriter::new(File::create(covariate_path)?);
    writeln!(w, "{}", cols.iter().map(|(c, _)| c.as_str()).collect::<Vec<_>>().join(","))?;
    for i in 0..ds.n() {
        let row: Vec<String> = cols.iter().map(|(_, v)| v[i].to_string()).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// A covariate column addressed by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", content = "index", rename_all = "lowercase")]
pub enum ColumnRef {
    X(usize),
    Z1,
    Z2(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTransform<T> {
    pub column: ColumnRef,
    pub name: String,
    pub location: T,
    pub scale: T,
}

/// Record of a standardization, serialized as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationRecord<T> {
    pub transforms: Vec<ColumnTransform<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> StandardizationRecord<T> {
    /// Maps a standardized dataset back to original units.
    pub fn invert(&self, ds: &FunctionalDataset<T>) -> FunctionalDataset<T> {
        self.transforms.iter().rev().fold(ds.clone(), |acc, t| {
            acc.map_column(t.column, |v| v * t.scale + t.location)
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Centers and scales the selected covariate columns to mean 0 and standard
/// deviation 1, using the population (divide-by-n) convention. All-ones
/// columns are skipped with a warning entry; any other zero-variance column
/// is an error.
pub fn standardize<T: Real>(
    ds: &FunctionalDataset<T>,
    which: &[ColumnRef],
) -> Result<(FunctionalDataset<T>, StandardizationRecord<T>)> {
    let n = T::from_usize_lossy(ds.n());
    let mut out = ds.clone();
    let mut record = StandardizationRecord {
        transforms: Vec::new(),
        warnings: Vec::new(),
    };
    for &col in which {
        match col {
            ColumnRef::X(k) if k >= ds.p() => return Err(Error::schema(format!("x[{k}]"), "out of range")),
            ColumnRef::Z2(k) if k >= ds.q() => return Err(Error::schema(format!("z2[{k}]"), "out of range")),
            _ => {}
        }
        let name = ds.column_name(col);
        let values = out.column_values(col);
        if is_all_ones(values.iter().copied()) {
            record.warnings.push(format!("constant column `{name}` left unstandardized"));
            continue;
        }
        let mean = values.iter().copied().sum::<T>() / n;
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
        let sd = var.sqrt();
        if !(sd > T::zero()) {
            return Err(Error::DegenerateColumn(name));
        }
        out = out.map_column(col, |v| (v - mean) / sd);
        record.transforms.push(ColumnTransform {
            column: col,
            name,
            location: mean,
            scale: sd,
        });
    }
    Ok((out, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> FunctionalDataset<f64> {
        FunctionalDataset::new(
            array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]],
            vec![0.0, 0.5, 1.0],
            array![[1.0, 0.3], [1.0, -0.7]],
            vec![1],
            vec![0.2, -0.4],
            array![[1.0, 2.0], [1.0, 3.0]],
        )
        .unwrap()
    }

    #[test]
    fn grid_is_sorted_with_columns() {
        let ds = FunctionalDataset::new(
            array![[3.0, 1.0, 2.0]],
            vec![1.0, 0.0, 0.5],
            array![[1.0]],
            vec![0],
            vec![0.0],
            array![[1.0]],
        )
        .unwrap();
        assert_eq!(ds.grid(), &[0.0, 0.5, 1.0]);
        assert_eq!(ds.y().row(0).to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn duplicate_grid_rejected() {
        let err = FunctionalDataset::new(
            array![[1.0, 2.0, 3.0]],
            vec![0.0, 0.5, 0.5],
            array![[1.0]],
            vec![0],
            vec![0.0],
            array![[1.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateGrid(v) if v == 0.5));
    }

    #[test]
    fn grid_outside_unit_interval_is_normalized() {
        let ds = FunctionalDataset::new(
            array![[1.0, 2.0, 3.0]],
            vec![10.0, 20.0, 30.0],
            array![[1.0]],
            vec![0],
            vec![0.0],
            array![[1.0]],
        )
        .unwrap();
        assert_eq!(ds.grid(), &[0.0, 0.5, 1.0]);
        assert_eq!(ds.grid_map(), Some(GridMap { offset: 10.0, scale: 20.0 }));
    }

    #[test]
    fn identification_requires_constant_z2() {
        let err = FunctionalDataset::new(
            array![[1.0]],
            vec![0.0],
            array![[1.0]],
            vec![0],
            vec![0.0],
            array![[2.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Identification(_)));
    }

    #[test]
    fn invalid_xtilde_rejected() {
        let mk = |cols: Vec<usize>| {
            FunctionalDataset::new(array![[1.0]], vec![0.0], array![[1.0, 2.0]], cols, vec![0.0], array![[1.0]])
        };
        assert!(mk(vec![]).is_err());
        assert!(mk(vec![2]).is_err());
        assert!(mk(vec![1, 1]).is_err());
        assert!(mk(vec![0, 1]).is_ok());
    }

    #[test]
    fn non_finite_rejected_with_position() {
        let err = FunctionalDataset::new(
            array![[1.0, f64::NAN]],
            vec![0.0, 1.0],
            array![[1.0]],
            vec![0],
            vec![0.0],
            array![[1.0]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, column: 2, .. }));
    }

    #[test]
    fn standardize_population_convention() {
        let ds = FunctionalDataset::new(
            array![[0.0], [0.0], [0.0]],
            vec![0.5],
            array![[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]],
            vec![1],
            vec![0.0, 1.0, 2.0],
            array![[1.0], [1.0], [1.0]],
        )
        .unwrap();
        let (out, rec) = standardize(&ds, &[ColumnRef::X(0), ColumnRef::X(1)]).unwrap();
        let c = out.x().column(1).to_vec();
        let e = 1.5f64.sqrt();
        assert!((c[0] + e).abs() < 1e-12 && c[1].abs() < 1e-12 && (c[2] - e).abs() < 1e-12);
        assert_eq!(rec.warnings.len(), 1);
        assert_eq!(rec.transforms.len(), 1);
        let back = rec.invert(&out);
        for (a, b) in back.x().iter().zip(ds.x().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_variance_column_is_degenerate() {
        let ds = FunctionalDataset::new(
            array![[0.0], [0.0]],
            vec![0.5],
            array![[1.0, 5.0], [1.0, 5.0]],
            vec![1],
            vec![0.0, 1.0],
            array![[1.0], [1.0]],
        )
        .unwrap();
        assert!(matches!(standardize(&ds, &[ColumnRef::X(1)]), Err(Error::DegenerateColumn(_))));
    }

    #[test]
    fn record_roundtrips_through_json() {
        let ds = toy();
        let (_, rec) = standardize(&ds, &[ColumnRef::Z1, ColumnRef::Z2(1)]).unwrap();
        let back: StandardizationRecord<f64> = serde_json::from_str(&rec.to_json().unwrap()).unwrap();
        assert_eq!(back, rec);
    }
}
