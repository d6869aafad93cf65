//! Time-series ingestion, min-max scaling and fold construction.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multivariate series, stored row-major (`rows × columns`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub name: String,
    pub columns: Vec<String>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(name: impl Into<String>, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let name = name.into();
        let width = columns.len();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Ragged {
                    path: PathBuf::from(&name),
                    row: i + 1,
                    found: row.len(),
                    expected: width,
                });
            }
            values.extend_from_slice(row);
        }
        if rows.len() < 2 {
            return Err(Error::TooShort { name, rows: rows.len() });
        }
        Ok(TimeSeries { name, columns, values })
    }

    pub fn len(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.values.len() / self.columns.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        let w = self.width();
        &self.values[t * w..(t + 1) * w]
    }

    pub fn value(&self, t: usize, column: usize) -> f64 {
        self.values[t * self.width() + column]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, index: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.value(t, index)).collect()
    }

    /// Resolves column names to indices, reporting every missing one.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>> {
        let found: Option<Vec<usize>> = names.iter().map(|n| self.column_index(n)).collect();
        found.ok_or_else(|| Error::Columns { expected: names.to_vec(), found: self.columns.clone() })
    }

    fn map_columns(&self, mut f: impl FnMut(usize, f64) -> f64) -> TimeSeries {
        let w = self.width();
        let values = self.values.iter().enumerate().map(|(i, &v)| f(i % w, v)).collect();
        TimeSeries { name: self.name.clone(), columns: self.columns.clone(), values }
    }
}

/// Reads a CSV file with a header row and a purely numeric body.
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_path(path)?;
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        if rec.len() != columns.len() {
            return Err(Error::Ragged { path: path.to_path_buf(), row, found: rec.len(), expected: columns.len() });
        }
        let parsed = rec
            .iter()
            .enumerate()
            .map(|(c, field)| {
                field.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: c + 1,
                    value: field.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(parsed);
    }
    let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    TimeSeries::new(name, columns, rows)
}

pub fn write_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&series.columns)?;
    for t in 0..series.len() {
        w.write_record(series.row(t).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ColumnScale {
    pub fn apply(&self, x: f64) -> f64 {
        let range = self.max - self.min;
        if range == 0.0 {
            0.0
        } else {
            (x - self.min) / range
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }
}

/// Per-column min/max scaling to `[0, 1]`. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub columns: Vec<ColumnScale>,
}

impl Normalization {
    /// Fits min/max per column over `series`, which must share a header.
    pub fn fit<'a>(series: impl IntoIterator<Item = &'a TimeSeries>) -> Result<Self> {
        let mut columns: Vec<ColumnScale> = Vec::new();
        let mut header: Option<&Vec<String>> = None;
        for s in series {
            match header {
                None => {
                    header = Some(&s.columns);
                    columns = s
                        .columns
                        .iter()
                        .map(|n| ColumnScale { name: n.clone(), min: f64::INFINITY, max: f64::NEG_INFINITY })
                        .collect();
                }
                Some(h) if h != &s.columns => {
                    return Err(Error::Columns { expected: h.clone(), found: s.columns.clone() })
                }
                Some(_) => {}
            }
            for t in 0..s.len() {
                for (c, &v) in s.row(t).iter().enumerate() {
                    columns[c].min = columns[c].min.min(v);
                    columns[c].max = columns[c].max.max(v);
                }
            }
        }
        Ok(Normalization { columns })
    }

    fn scales_for(&self, s: &TimeSeries) -> Result<Vec<&ColumnScale>> {
        s.columns
            .iter()
            .map(|name| self.columns.iter().find(|c| &c.name == name))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Columns {
                expected: self.columns.iter().map(|c| c.name.clone()).collect(),
                found: s.columns.clone(),
            })
    }

    pub fn apply(&self, s: &TimeSeries) -> Result<TimeSeries> {
        let scales = self.scales_for(s)?;
        Ok(s.map_columns(|c, v| scales[c].apply(v)))
    }

    pub fn invert(&self, s: &TimeSeries) -> Result<TimeSeries> {
        let scales = self.scales_for(s)?;
        Ok(s.map_columns(|c, v| scales[c].invert(v)))
    }

    pub fn column(&self, name: &str) -> Option<&ColumnScale> {
        self.columns.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizeMode {
    /// Statistics from the training series of each fold.
    #[default]
    Train,
    /// Statistics from every series, matching an offline-normalized dataset.
    Global,
    None,
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(NormalizeMode::Train),
            "global" => Ok(NormalizeMode::Global),
            "none" => Ok(NormalizeMode::None),
            other => Err(Error::Config(format!("unknown normalization mode {other:?}"))),
        }
    }
}

/// A collection of series with designated input columns and one output
/// column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesSet {
    pub series: Vec<TimeSeries>,
    pub inputs: Vec<String>,
    pub output: String,
    pub normalization: Option<Normalization>,
}

impl TimeSeriesSet {
    pub fn new(series: Vec<TimeSeries>, inputs: Vec<String>, output: String) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::Config("no series supplied".into()));
        }
        if inputs.is_empty() {
            return Err(Error::Config("no input columns selected".into()));
        }
        for s in &series {
            s.resolve(&inputs)?;
            s.resolve(std::slice::from_ref(&output))?;
        }
        Ok(TimeSeriesSet { series, inputs, output, normalization: None })
    }

    pub fn names(&self) -> Vec<String> {
        self.series.iter().map(|s| s.name.clone()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> TimeSeriesSet {
        TimeSeriesSet {
            series: indices.iter().map(|&i| self.series[i].clone()).collect(),
            inputs: self.inputs.clone(),
            output: self.output.clone(),
            normalization: self.normalization.clone(),
        }
    }

    /// Scales every series with `norm` and records it.
    pub fn normalized(&self, norm: &Normalization) -> Result<TimeSeriesSet> {
        Ok(TimeSeriesSet {
            series: self.series.iter().map(|s| norm.apply(s)).collect::<Result<_>>()?,
            inputs: self.inputs.clone(),
            output: self.output.clone(),
            normalization: Some(norm.clone()),
        })
    }

    pub fn input_indices(&self, s: &TimeSeries) -> Result<Vec<usize>> {
        s.resolve(&self.inputs)
    }

    pub fn output_index(&self, s: &TimeSeries) -> Result<usize> {
        Ok(s.resolve(std::slice::from_ref(&self.output))?[0])
    }
}

/// Fits on the training part and scales both parts. `None` leaves the data
/// raw.
pub fn normalize_split(
    train: &TimeSeriesSet,
    test: &TimeSeriesSet,
    mode: NormalizeMode,
) -> Result<(TimeSeriesSet, TimeSeriesSet)> {
    let norm = match mode {
        NormalizeMode::None => return Ok((train.clone(), test.clone())),
        NormalizeMode::Train => Normalization::fit(&train.series)?,
        NormalizeMode::Global => Normalization::fit(train.series.iter().chain(&test.series))?,
    };
    Ok((train.normalized(&norm)?, test.normalized(&norm)?))
}

/// Min-max normalizes a whole set with statistics from its own series.
pub fn normalize_minmax(set: &TimeSeriesSet) -> Result<(TimeSeriesSet, Normalization)> {
    let norm = Normalization::fit(&set.series)?;
    Ok((set.normalized(&norm)?, norm))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Consecutive groups of `fold_size` series are held out in turn. A trailing
/// partial group forms its own fold.
pub fn make_folds(series_count: usize, fold_size: usize) -> Result<Vec<Fold>> {
    if fold_size == 0 {
        return Err(Error::Config("fold size must be at least 1".into()));
    }
    let all: Vec<usize> = (0..series_count).collect();
    let folds: Vec<Fold> = all
        .chunks(fold_size)
        .map(|test| Fold {
            test: test.to_vec(),
            train: all.iter().copied().filter(|i| !test.contains(i)).collect(),
        })
        .collect();
    if folds.is_empty() || folds.iter().any(|f| f.train.is_empty()) {
        return Err(Error::Config(format!(
            "{series_count} series with fold size {fold_size} leaves a fold without training data"
        )));
    }
    Ok(folds)
}

/// Writes `(t, actual, predicted, abs_error)` rows.
pub fn write_predictions(path: impl AsRef<Path>, actual: &[f64], predicted: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "actual", "predicted", "abs_error"])?;
    for (t, (a, p)) in actual.iter().zip(predicted).enumerate() {
        w.write_record([t.to_string(), a.to_string(), p.to_string(), (a - p).abs().to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &tempfile::TempDir, name: &str, body: &str) -> PathBuf {
        let p = dir.path().join(name);
        std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn loads_a_small_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "a.csv", "x,y,z\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n");
        let s = load_csv(&p).unwrap();
        assert_eq!((s.len(), s.width()), (4, 3));
        assert_eq!(s.columns, ["x", "y", "z"]);
        assert_eq!(s.row(2), [7.0, 8.0, 9.0]);
        assert_eq!(s.name, "a");
    }

    #[test]
    fn header_only_is_too_short() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "h.csv", "x,y,z\n");
        assert!(matches!(load_csv(&p), Err(Error::TooShort { rows: 0, .. })));
    }

    #[test]
    fn parse_error_cites_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("a,b,c\n");
        for r in 1..=8 {
            if r == 7 {
                body.push_str("1,abc,3\n");
            } else {
                body.push_str("1,2,3\n");
            }
        }
        let p = write(&dir, "bad.csv", &body);
        match load_csv(&p) {
            Err(Error::Parse { row: 7, column: 2, value, .. }) => assert_eq!(value, "abc"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_structural_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(&dir, "r.csv", "a,b\n1,2\n3\n4,5\n");
        assert!(matches!(load_csv(&p), Err(Error::Ragged { row: 2, found: 1, expected: 2, .. })));
    }

    #[test]
    fn minmax_scaling() {
        let s = TimeSeries::new("s", vec!["a".into(), "b".into()], vec![vec![0.0, 7.0], vec![5.0, 7.0], vec![10.0, 7.0]])
            .unwrap();
        let norm = Normalization::fit([&s]).unwrap();
        let n = norm.apply(&s).unwrap();
        assert_eq!(n.column(0), [0.0, 0.5, 1.0]);
        assert_eq!(n.column(1), [0.0, 0.0, 0.0]);
        let back = norm.invert(&n).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn train_statistics_do_not_see_test_data() {
        let mk = |name: &str, v: f64| TimeSeries::new(name, vec!["a".into()], vec![vec![0.0], vec![v]]).unwrap();
        let train = TimeSeriesSet::new(vec![mk("tr", 2.0)], vec!["a".into()], "a".into()).unwrap();
        let test = TimeSeriesSet::new(vec![mk("te", 100.0)], vec!["a".into()], "a".into()).unwrap();
        let (ntr, nte) = normalize_split(&train, &test, NormalizeMode::Train).unwrap();
        assert_eq!(ntr.series[0].column(0), [0.0, 1.0]);
        assert_eq!(nte.series[0].column(0), [0.0, 50.0]);
        let (_, nte) = normalize_split(&train, &test, NormalizeMode::Global).unwrap();
        assert_eq!(nte.series[0].column(0), [0.0, 1.0]);
    }

    #[test]
    fn fold_counts() {
        assert_eq!(make_folds(10, 2).unwrap().len(), 5);
        assert_eq!(make_folds(12, 2).unwrap().len(), 6);
        assert!(make_folds(2, 2).is_err());
        let folds = make_folds(7, 2).unwrap();
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.test.clone()).collect();
        seen.sort();
        assert_eq!(seen, (0..7).collect::<Vec<_>>());
        for f in &folds {
            assert!(f.test.iter().all(|i| !f.train.contains(i)));
            assert_eq!(f.test.len() + f.train.len(), 7);
        }
    }

    #[test]
    fn missing_columns_are_listed() {
        let s = TimeSeries::new("s", vec!["a".into()], vec![vec![0.0], vec![1.0]]).unwrap();
        match TimeSeriesSet::new(vec![s], vec!["a".into()], "zz".into()) {
            Err(Error::Columns { expected, found }) => {
                assert_eq!(expected, ["zz"]);
                assert_eq!(found, ["a"]);
            }
            other => panic!("{other:?}"),
        }
    }
}
