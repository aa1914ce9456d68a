//! UCR-style text files: one instance per row, label first, values after.

use std::fs;
use std::path::{Path, PathBuf};

use super::instance::{Dataset, TimeSeriesInstance};
use crate::error::{Error, Result};

/// A parsed row before label remapping.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub label: f64,
    pub values: Vec<f64>,
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "?" | "NaN" | "nan" | "NAN" | "NA")
}

/// Parses one tab- or comma-separated file. Missing values come back as NaN.
pub fn parse_rows(path: &Path, text: &str) -> Result<Vec<RawRow>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let sep = if line.contains('\t') { '\t' } else { ',' };
        let mut fields = line.split(sep);
        let err = |column: usize, msg: String| Error::Parse { path: path.to_path_buf(), line: line_no + 1, column, msg };
        let label_field = fields.next().unwrap_or("").trim();
        let label: f64 = label_field
            .parse()
            .ok()
            .filter(|l: &f64| l.is_finite())
            .ok_or_else(|| err(1, format!("invalid label {label_field:?}")))?;
        let mut values = Vec::new();
        for (i, field) in fields.enumerate() {
            let field = field.trim();
            if is_missing(field) {
                values.push(f64::NAN);
                continue;
            }
            let v: f64 = field.parse().map_err(|_| err(i + 2, format!("invalid value {field:?}")))?;
            if !v.is_finite() {
                return Err(err(i + 2, format!("non-finite value {field:?}")));
            }
            values.push(v);
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(err(values.len() + 1, format!("row has {} values, expected {w}", values.len())))
            }
            _ => {}
        }
        rows.push(RawRow { label, values });
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(rows)
}

/// Linear interpolation between valid neighbours; leading/trailing gaps copy the nearest valid value.
pub fn fill_missing(values: &mut [f64]) -> bool {
    let valid: Vec<usize> = (0..values.len()).filter(|&i| !values[i].is_nan()).collect();
    let (Some(&first), Some(&last)) = (valid.first(), valid.last()) else {
        return false;
    };
    for i in 0..first {
        values[i] = values[first];
    }
    for i in last + 1..values.len() {
        values[i] = values[last];
    }
    for w in valid.windows(2) {
        let (a, b) = (w[0], w[1]);
        for i in a + 1..b {
            let frac = (i - a) as f64 / (b - a) as f64;
            values[i] = values[a] + frac * (values[b] - values[a]);
        }
    }
    true
}

fn read_rows(path: &Path) -> Result<Vec<RawRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_rows(path, &text)
}

fn label_map(labels: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut distinct: Vec<f64> = labels.collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct
}

fn remap(map: &[f64], label: f64) -> usize {
    map.iter().position(|&l| l == label).expect("label present in map")
}

fn to_instances(
    path: &Path,
    channels: &[Vec<RawRow>],
    map: &[f64],
    first_id: u64,
) -> Result<Vec<TimeSeriesInstance>> {
    let n = channels[0].len();
    let c = channels.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let label = channels[0][i].label;
        let len = channels[0][i].values.len();
        let mut values = vec![0.0; len * c];
        for (k, rows) in channels.iter().enumerate() {
            let row = &rows[i];
            if row.label != label || row.values.len() != len {
                return Err(Error::InvalidData(format!(
                    "{}: row {} disagrees across channel files",
                    path.display(),
                    i + 1
                )));
            }
            let mut series = row.values.clone();
            if !fill_missing(&mut series) {
                return Err(Error::InvalidData(format!("{}: row {} has no valid values", path.display(), i + 1)));
            }
            for (t, v) in series.into_iter().enumerate() {
                values[t * c + k] = v;
            }
        }
        out.push(TimeSeriesInstance::new(first_id + i as u64, Some(remap(map, label)), len, c, values)?);
    }
    Ok(out)
}

fn build(name: String, train_path: &Path, train: Vec<Vec<RawRow>>, test: Vec<Vec<RawRow>>) -> Result<Dataset> {
    let map = label_map(train[0].iter().chain(&test[0]).map(|r| r.label));
    let train_instances = to_instances(train_path, &train, &map, 0)?;
    let test_instances = to_instances(train_path, &test, &map, train_instances.len() as u64)?;
    let ds = Dataset { name, train: train_instances, test: test_instances, n_classes: map.len(), norm: None };
    ds.validate()?;
    Ok(ds)
}

fn split_paths(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn dataset_name(prefix: &Path) -> String {
    prefix.file_name().map_or_else(|| "dataset".into(), |n| n.to_string_lossy().into_owned())
}

/// Loads `<prefix>_TRAIN.tsv` and `<prefix>_TEST.tsv` as a univariate dataset.
///
/// Labels are remapped to `0..K` following the sorted order of the original labels.
pub fn load_ucr_tsv(prefix: &Path) -> Result<Dataset> {
    let train_path = split_paths(prefix, "_TRAIN.tsv");
    let test_path = split_paths(prefix, "_TEST.tsv");
    let train = read_rows(&train_path)?;
    let test = read_rows(&test_path)?;
    build(dataset_name(prefix), &train_path, vec![train], vec![test])
}

/// Multivariate variant: one file per channel, `<prefix>_TRAIN_dim<c>.tsv` for `c = 0, 1, ...`.
pub fn load_uea_tsv(prefix: &Path) -> Result<Dataset> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0.. {
        let train_path = split_paths(prefix, &format!("_TRAIN_dim{c}.tsv"));
        if !train_path.exists() {
            break;
        }
        train.push(read_rows(&train_path)?);
        test.push(read_rows(&split_paths(prefix, &format!("_TEST_dim{c}.tsv")))?);
    }
    if train.is_empty() {
        return Err(Error::EmptyFile(split_paths(prefix, "_TRAIN_dim0.tsv")));
    }
    let first = split_paths(prefix, "_TRAIN_dim0.tsv");
    build(dataset_name(prefix), &first, train, test)
}

/// Writes a univariate split in the format `load_ucr_tsv` reads. Labels are written as indices.
pub fn write_ucr_tsv(path: &Path, instances: &[TimeSeriesInstance]) -> Result<()> {
    let mut out = String::new();
    for x in instances {
        out.push_str(&x.label.unwrap_or(0).to_string());
        for v in x.channel(0) {
            out.push('\t');
            out.push_str(&format!("{v:?}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<RawRow>> {
        parse_rows(Path::new("mem.tsv"), text)
    }

    #[test]
    fn parses_tab_row() {
        let rows = parse("1\t0.5\t0.7\n").unwrap();
        assert_eq!(rows, vec![RawRow { label: 1.0, values: vec![0.5, 0.7] }]);
    }

    #[test]
    fn parses_comma_row() {
        let rows = parse("-1,2,3\n1,4,5\n").unwrap();
        assert_eq!(rows[0].label, -1.0);
        assert_eq!(rows[1].values, vec![4.0, 5.0]);
    }

    #[test]
    fn parse_error_has_location() {
        match parse("1\t0.5\t0.7\n2\t0.1\tabc\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("unexpected {other:?}"),
        }
        match parse("x\t0.5\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (1, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file() {
        assert!(matches!(parse("\n\n"), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn interpolates_missing() {
        let mut v = vec![f64::NAN, 1.0, f64::NAN, 3.0, f64::NAN, f64::NAN];
        assert!(fill_missing(&mut v));
        assert_eq!(v, vec![1.0, 1.0, 2.0, 3.0, 3.0, 3.0]);
        let mut all = vec![f64::NAN; 3];
        assert!(!fill_missing(&mut all));
    }

    #[test]
    fn remaps_sorted_labels() {
        let map = label_map([1.0, -1.0, 1.0].into_iter());
        assert_eq!(remap(&map, -1.0), 0);
        assert_eq!(remap(&map, 1.0), 1);
    }
}
