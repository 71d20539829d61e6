//! CSV interchange for datasets.
//!
//! The format is deliberately plain: UTF-8, comma separators, no quoting. An
//! optional `# num_classes=K` comment may precede the header, the header is
//! `f0,f1,…,f{d-1}` plus a final `label` column for labeled files, and every
//! data row carries decimal numbers (`.` separator, as produced by Rust's
//! float formatter). Lines may end in LF or CRLF. Parse errors report
//! 1-based line and column positions.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

use super::LabeledDataset;

/// Parses a labeled dataset from CSV text.
///
/// `num_classes` is 1 + the largest observed label unless the comment line
/// overrides it with a larger value.
pub fn parse_dataset_csv(text: &str, domain_tag: &str) -> Result<LabeledDataset> {
    let parsed = parse_csv(text, true)?;
    let declared = parsed.declared_classes;
    let labels = parsed.labels;
    let num_classes = match declared {
        Some(k) => k,
        None => labels.iter().copied().max().map_or(0, |m| m + 1),
    };
    if num_classes < 2 {
        return Err(Error::InvalidDataset(
            "only one class present; add a `# num_classes=K` comment or a second class".into(),
        ));
    }
    LabeledDataset::new(parsed.features, labels, num_classes, domain_tag)
}

/// Parses a feature matrix from CSV text.
///
/// Accepts both unlabeled files and labeled ones; a `label` column, if
/// present, is validated and discarded.
pub fn parse_features_csv(text: &str) -> Result<Array2<f64>> {
    let parsed = parse_csv(text, false)?;
    Ok(parsed.features)
}

/// Reads a labeled dataset from a file, tagging it with the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_owned());
    parse_dataset_csv(&text, &tag)
}

/// Reads a feature matrix from a file (labeled or unlabeled CSV).
pub fn load_features(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    parse_features_csv(&std::fs::read_to_string(path)?)
}

/// Renders a dataset to CSV text. `parse_dataset_csv` recovers the features
/// and labels bitwise, because floats are written with Rust's shortest
/// round-trip formatter.
pub fn dataset_to_csv(ds: &LabeledDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# num_classes={}", ds.num_classes());
    for j in 0..ds.dim() {
        let _ = write!(out, "f{j},");
    }
    out.push_str("label\n");
    for (row, &label) in ds.features().outer_iter().zip(ds.labels()) {
        for v in row.iter() {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{label}");
    }
    out
}

/// Writes a dataset to a file in the CSV interchange format.
pub fn save_dataset(ds: &LabeledDataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, dataset_to_csv(ds))?;
    Ok(())
}

struct ParsedCsv {
    features: Array2<f64>,
    labels: Vec<usize>,
    declared_classes: Option<usize>,
}

fn parse_csv(text: &str, require_labels: bool) -> Result<ParsedCsv> {
    // keep 1-based line numbers; drop trailing blank lines only
    let mut lines: Vec<(usize, &str)> = text
        .split('\n')
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .collect();
    while lines.last().is_some_and(|(_, l)| l.is_empty()) {
        lines.pop();
    }
    let mut iter = lines.into_iter().peekable();

    let declared_classes = match iter.peek() {
        Some(&(line, l)) if l.starts_with('#') => {
            iter.next();
            Some(parse_classes_comment(line, l)?)
        }
        _ => None,
    };

    let (header_line, header) = iter
        .next()
        .ok_or_else(|| Error::csv(1, 1, "missing header row"))?;
    let (dim, has_labels) = parse_header(header_line, header)?;
    if require_labels && !has_labels {
        return Err(Error::csv(
            header_line,
            dim + 1,
            "missing `label` column in header",
        ));
    }
    let fields_per_row = dim + usize::from(has_labels);

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for (line, l) in iter {
        if l.is_empty() {
            return Err(Error::csv(line, 1, "empty row"));
        }
        let mut count = 0usize;
        for (idx, cell) in l.split(',').enumerate() {
            count += 1;
            if count > fields_per_row {
                break;
            }
            let column = idx + 1;
            if idx < dim {
                let v: f64 = cell.parse().map_err(|_| {
                    Error::csv(line, column, format!("cannot parse {cell:?} as a number"))
                })?;
                if !v.is_finite() {
                    return Err(Error::csv(
                        line,
                        column,
                        format!("non-finite feature value {cell:?}"),
                    ));
                }
                values.push(v);
            } else {
                let label: usize = cell.parse().map_err(|_| {
                    Error::csv(
                        line,
                        column,
                        format!("cannot parse {cell:?} as a class label"),
                    )
                })?;
                if let Some(k) = declared_classes {
                    if label >= k {
                        return Err(Error::csv(
                            line,
                            column,
                            format!("label {label} out of range for num_classes={k}"),
                        ));
                    }
                }
                labels.push(label);
            }
        }
        if count != fields_per_row {
            return Err(Error::csv(
                line,
                count.min(fields_per_row) + 1,
                format!("expected {fields_per_row} fields, found {count}"),
            ));
        }
        rows += 1;
    }

    if rows == 0 {
        return Err(Error::InvalidDataset("no data rows".into()));
    }
    let features = Array2::from_shape_vec((rows, dim), values)
        .expect("row-count bookkeeping guarantees the shape");
    if !require_labels {
        labels.clear();
    }
    Ok(ParsedCsv {
        features,
        labels,
        declared_classes,
    })
}

fn parse_classes_comment(line: usize, l: &str) -> Result<usize> {
    let body = l.trim_start_matches('#').trim();
    let value = body.strip_prefix("num_classes=").ok_or_else(|| {
        Error::csv(
            line,
            1,
            format!("unrecognized comment {l:?}; expected `# num_classes=K`"),
        )
    })?;
    let k: usize = value.parse().map_err(|_| {
        Error::csv(
            line,
            1,
            format!("cannot parse {value:?} as a class count"),
        )
    })?;
    if k < 2 {
        return Err(Error::csv(line, 1, "num_classes must be at least 2"));
    }
    Ok(k)
}

fn parse_header(line: usize, header: &str) -> Result<(usize, bool)> {
    let fields: Vec<&str> = header.split(',').collect();
    let has_labels = *fields.last().expect("split yields at least one field") == "label";
    let dim = fields.len() - usize::from(has_labels);
    if dim == 0 {
        return Err(Error::csv(line, 1, "header has no feature columns"));
    }
    for (idx, field) in fields[..dim].iter().enumerate() {
        let expected = format!("f{idx}");
        if *field != expected {
            return Err(Error::csv(
                line,
                idx + 1,
                format!("expected column name {expected:?}, found {field:?}"),
            ));
        }
    }
    Ok((dim, has_labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn parses_a_small_labeled_file() {
        let text = "f0,f1,label\n0.5,-1,0\n1.25,2.5,1\n-3,0.125,0\n";
        let ds = parse_dataset_csv(text, "toy").unwrap();
        assert_eq!((ds.n(), ds.dim(), ds.num_classes()), (3, 2, 2));
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.features()[[1, 1]], 2.5);
        assert_eq!(ds.domain_tag(), "toy");
    }

    #[test]
    fn comment_overrides_class_count() {
        let text = "# num_classes=5\nf0,label\n1.0,0\n2.0,1\n";
        let ds = parse_dataset_csv(text, "t").unwrap();
        assert_eq!(ds.num_classes(), 5);

        let bad = "# num_classes=2\nf0,label\n1.0,2\n";
        let err = parse_dataset_csv(bad, "t").unwrap_err();
        assert!(matches!(err, Error::Csv { line: 3, column: 2, .. }), "{err}");
    }

    #[test]
    fn nan_cell_is_rejected_with_position() {
        let text = "f0,f1,label\n0.5,NaN,0\n0.1,0.2,1\n";
        let err = parse_dataset_csv(text, "t").unwrap_err();
        match err {
            Error::Csv { line, column, message } => {
                assert_eq!((line, column), (2, 2));
                assert!(message.contains("NaN"), "{message}");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn junk_cell_names_its_position() {
        let text = "f0,f1,label\n0.5,oops,0\n";
        let err = parse_dataset_csv(text, "t").unwrap_err();
        assert!(matches!(err, Error::Csv { line: 2, column: 2, .. }), "{err}");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let short = "f0,f1,label\n0.5,0\n";
        assert!(matches!(
            parse_dataset_csv(short, "t").unwrap_err(),
            Error::Csv { line: 2, .. }
        ));
        let long = "f0,f1,label\n0.5,1.5,0,9\n";
        assert!(matches!(
            parse_dataset_csv(long, "t").unwrap_err(),
            Error::Csv { line: 2, column: 4, .. }
        ));
    }

    #[test]
    fn header_problems_are_rejected() {
        assert!(parse_dataset_csv("", "t").is_err());
        assert!(parse_dataset_csv("f0,f2,label\n1,2,0\n", "t").is_err());
        assert!(parse_dataset_csv("label\n0\n", "t").is_err());
        // unlabeled text fed to the labeled parser
        assert!(parse_dataset_csv("f0,f1\n1,2\n", "t").is_err());
        // single class without an override
        assert!(parse_dataset_csv("f0,label\n1,0\n2,0\n", "t").is_err());
        // interior empty line
        assert!(parse_dataset_csv("f0,label\n1,0\n\n2,1\n", "t").is_err());
    }

    #[test]
    fn crlf_and_missing_final_newline_are_accepted() {
        let text = "f0,label\r\n1.5,0\r\n2.5,1";
        let ds = parse_dataset_csv(text, "t").unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.features()[[1, 0]], 2.5);
    }

    #[test]
    fn feature_parser_accepts_both_layouts() {
        let unlabeled = "f0,f1\n1.0,2.0\n3.0,4.0\n";
        let x = parse_features_csv(unlabeled).unwrap();
        assert_eq!(x.dim(), (2, 2));
        let labeled = "f0,f1,label\n1.0,2.0,0\n3.0,4.0,1\n";
        let y = parse_features_csv(labeled).unwrap();
        assert_eq!(x, y);
        // the discarded label must still be a valid integer
        assert!(parse_features_csv("f0,label\n1.0,zebra\n").is_err());
    }

    #[test]
    fn round_trip_is_bitwise() {
        let awkward = array![
            [0.1f64 + 0.2, -0.0, 1e-300],
            [f64::MAX, 1.0 / 3.0, 12345.678901234567],
            [-5e-324, 2.0_f64.powi(-52), 1e16 + 1.0],
        ];
        let ds = LabeledDataset::new(awkward, vec![0, 2, 1], 3, "rt").unwrap();
        let back = parse_dataset_csv(&dataset_to_csv(&ds), "rt").unwrap();
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.num_classes(), ds.num_classes());
        for (a, b) in back.features().iter().zip(ds.features().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("toy.csv");
        let ds = LabeledDataset::new(array![[1.5, 2.5], [3.5, 4.5]], vec![1, 0], 2, "toy")
            .unwrap();
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, ds);
        assert!(load_dataset(dir.path().join("absent.csv")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_recovers_arbitrary_finite_data(
            rows in 1usize..5,
            cols in 1usize..4,
            seedling in any::<u64>(),
        ) {
            // derive deterministic but irregular values from the seed
            let mut state = seedling;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                f64::from_bits((state >> 12) | 0x3ff0000000000000) - 1.5
            };
            let features = Array2::from_shape_fn((rows, cols), |_| next());
            let labels: Vec<usize> = (0..rows).map(|i| i % 2).collect();
            let ds = LabeledDataset::new(features, labels, 2, "prop").unwrap();
            let back = parse_dataset_csv(&dataset_to_csv(&ds), "prop").unwrap();
            prop_assert_eq!(back.labels(), ds.labels());
            for (a, b) in back.features().iter().zip(ds.features().iter()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn parser_never_panics(text in "\\PC*") {
            let _ = parse_dataset_csv(&text, "fuzzish");
            let _ = parse_features_csv(&text);
        }
    }
}
