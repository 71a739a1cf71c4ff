use std::collections::BTreeMap;
use std::path::Path;

use fairkm::Dataset;

use crate::error::CliError;

/// Result of loading a CSV: the dataset plus everything needed to interpret it
/// (column names, the sorted group-label mapping, and any rejected rows).
#[derive(Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub feature_names: Vec<String>,
    /// Sorted labels; group id = index in this list.
    pub group_labels: Vec<String>,
    /// Per declared categorical feature column: the sorted value labels that
    /// were mapped to 0.0, 1.0, ... in the numeric matrix.
    pub categorical_labels: Vec<(usize, Vec<String>)>,
    /// (1-based line number, reason) for every skipped row.
    pub rejected_rows: Vec<(u64, String)>,
}

/// Load a CSV with a header row. `group_column` names the demographic column;
/// `categorical` lists feature-column indices (0-based, after removing the
/// group column) whose string values should be label-encoded instead of parsed
/// as numbers. Rows with unparseable values are skipped and reported with
/// their line numbers; a column that never parses is an error.
pub fn ingest_csv(path: &Path, group_column: &str, categorical: &[usize]) -> Result<Ingested, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let group_idx = headers
        .iter()
        .position(|h| h == group_column)
        .ok_or_else(|| {
            CliError::Input(format!(
                "group column {group_column:?} not found in header [{}]",
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != group_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let d = feature_names.len();
    if d == 0 {
        return Err(CliError::Input("no feature columns besides the group column".into()));
    }
    for &c in categorical {
        if c >= d {
            return Err(CliError::Input(format!(
                "categorical column index {c} out of range (have {d} feature columns)"
            )));
        }
    }

    // First pass: pull raw rows, dropping those that fail to parse.
    let mut rows: Vec<(Vec<f64>, Vec<Option<String>>, String)> = Vec::new();
    let mut rejected: Vec<(u64, String)> = Vec::new();
    let mut parse_failures = vec![0usize; d];
    let mut total_rows = 0usize;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        total_rows += 1;
        if record.len() != headers.len() {
            rejected.push((line, format!("expected {} fields, got {}", headers.len(), record.len())));
            continue;
        }
        let group = record[group_idx].trim().to_string();
        if group.is_empty() {
            rejected.push((line, "empty group label".into()));
            continue;
        }
        let mut nums = vec![0.0f64; d];
        let mut cats: Vec<Option<String>> = vec![None; d];
        let mut bad: Option<String> = None;
        let mut f = 0usize;
        for (i, field) in record.iter().enumerate() {
            if i == group_idx {
                continue;
            }
            if categorical.contains(&f) {
                cats[f] = Some(field.trim().to_string());
            } else {
                match field.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => nums[f] = v,
                    _ => {
                        parse_failures[f] += 1;
                        bad.get_or_insert_with(|| {
                            format!("column {:?}: unparseable value {:?}", feature_names[f], field)
                        });
                    }
                }
            }
            f += 1;
        }
        match bad {
            Some(reason) => rejected.push((line, reason)),
            None => rows.push((nums, cats, group)),
        }
    }

    if total_rows == 0 {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    for (f, &fails) in parse_failures.iter().enumerate() {
        if fails == total_rows {
            return Err(CliError::Input(format!(
                "column {:?} is not numeric on any row; declare it categorical (onehot) or drop it",
                feature_names[f]
            )));
        }
    }
    if rows.is_empty() {
        return Err(CliError::Input(format!(
            "{}: all {total_rows} rows rejected (first: line {} — {})",
            path.display(),
            rejected[0].0,
            rejected[0].1
        )));
    }

    // Deterministic label -> id maps built from the surviving rows only.
    let mut group_map: BTreeMap<String, usize> = BTreeMap::new();
    for (_, _, g) in &rows {
        let next = group_map.len();
        group_map.entry(g.clone()).or_insert(next);
    }
    let mut group_labels: Vec<String> = group_map.keys().cloned().collect();
    group_labels.sort();
    let group_id: BTreeMap<&str, usize> = group_labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();

    let mut categorical_labels: Vec<(usize, Vec<String>)> = Vec::new();
    for &c in categorical {
        let mut labels: Vec<String> = rows
            .iter()
            .filter_map(|(_, cats, _)| cats[c].clone())
            .collect();
        labels.sort();
        labels.dedup();
        categorical_labels.push((c, labels));
    }

    let mut points = Vec::with_capacity(rows.len() * d);
    let mut group_of = Vec::with_capacity(rows.len());
    for (nums, cats, g) in &rows {
        let mut row = nums.clone();
        for (c, labels) in &categorical_labels {
            let value = cats[*c].as_ref().expect("categorical value present");
            let id = labels.binary_search(value).expect("label seen in first pass");
            row[*c] = id as f64;
        }
        points.extend_from_slice(&row);
        group_of.push(group_id[g.as_str()]);
    }

    let dataset = Dataset::new(points, d, group_of)?;
    Ok(Ingested {
        dataset,
        feature_names,
        group_labels,
        categorical_labels,
        rejected_rows: rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows_two_groups() {
        let f = write_csv("x,y,race\n1.0,2.0,b\n3.0,4.0,a\n5.0,6.0,b\n");
        let ing = ingest_csv(f.path(), "race", &[]).unwrap();
        assert_eq!(ing.group_labels, vec!["a", "b"]);
        assert_eq!(ing.dataset.m(), 2);
        assert_eq!(ing.dataset.group_sizes(), &[1, 2]);
        // label "a" sorts first, so the second row is group 0
        assert_eq!(ing.dataset.group(1), 0);
        assert_eq!(ing.dataset.point(0), &[1.0, 2.0]);
    }

    #[test]
    fn header_only_is_an_error() {
        let f = write_csv("x,y,race\n");
        let err = ingest_csv(f.path(), "race", &[]).unwrap_err();
        assert!(matches!(err, CliError::Input(_)));
        assert!(err.to_string().contains("no data rows"));
    }

    #[test]
    fn missing_group_column() {
        let f = write_csv("x,y\n1,2\n");
        let err = ingest_csv(f.path(), "race", &[]).unwrap_err();
        assert!(err.to_string().contains("not found"));
    }

    #[test]
    fn bad_row_rejected_with_line_number() {
        let f = write_csv("x,race\n1.0,a\noops,a\n3.0,b\n");
        let ing = ingest_csv(f.path(), "race", &[]).unwrap();
        assert_eq!(ing.dataset.n(), 2);
        assert_eq!(ing.rejected_rows.len(), 1);
        assert_eq!(ing.rejected_rows[0].0, 3);
        assert!(ing.rejected_rows[0].1.contains("oops"));
    }

    #[test]
    fn fully_non_numeric_column_is_an_error() {
        let f = write_csv("x,color,race\n1.0,red,a\n2.0,blue,b\n");
        let err = ingest_csv(f.path(), "race", &[]).unwrap_err();
        assert!(err.to_string().contains("categorical"));
    }

    #[test]
    fn declared_categorical_column_label_encoded() {
        let f = write_csv("x,color,race\n1.0,red,a\n2.0,blue,b\n3.0,red,a\n");
        let ing = ingest_csv(f.path(), "race", &[1]).unwrap();
        assert_eq!(ing.categorical_labels, vec![(1, vec!["blue".into(), "red".into()])]);
        // blue -> 0.0, red -> 1.0
        assert_eq!(ing.dataset.point(0)[1], 1.0);
        assert_eq!(ing.dataset.point(1)[1], 0.0);
    }
}
