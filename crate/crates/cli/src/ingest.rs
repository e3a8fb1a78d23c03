//! Input parsing: VW-style text lines, CSV with namespace grouping, and the
//! per-dataset target transformation.

use std::io::Read;

use chacha_core::{Example, Feature, Namespace};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("target column `{0}` not found in header")]
    MissingTarget(String),
    #[error("row {row}, column `{column}`: cell is neither numeric nor categorical")]
    NonNumericCell { row: usize, column: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Namespace grouping and target-transformation policy.
#[derive(Clone, Debug)]
pub struct IngestPolicy {
    /// CSV feature columns are split into at most this many namespaces.
    pub max_namespaces: usize,
    /// Log-transform the target when its maximum exceeds this.
    pub log_transform_threshold: f64,
}

impl Default for IngestPolicy {
    fn default() -> Self {
        IngestPolicy {
            max_namespaces: 10,
            log_transform_threshold: 100.0,
        }
    }
}

/// Parses one VW-style text line: a leading label token, then `|ns` blocks
/// with `name:value` or bare `name` (value 1.0) features. Repeated
/// namespaces within a line are merged.
pub fn parse_vw_line(line: &str) -> Result<Example, IngestError> {
    parse_vw_line_at(line, 0)
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn parse_vw_line_at(line: &str, line_no: usize) -> Result<Example, IngestError> {
    let mut tokens = line.split_whitespace();
    let label_tok = tokens
        .next()
        .ok_or_else(|| malformed(line_no, "empty line"))?;
    if label_tok.starts_with('|') {
        return Err(malformed(line_no, "missing label"));
    }
    let label: f64 = label_tok
        .parse()
        .map_err(|_| malformed(line_no, format!("unparsable label `{label_tok}`")))?;

    let mut namespaces: Vec<Namespace> = Vec::new();
    let mut current: Option<usize> = None;
    for tok in tokens {
        if let Some(ns_key) = tok.strip_prefix('|') {
            if ns_key.is_empty() {
                return Err(malformed(line_no, "empty namespace key"));
            }
            current = Some(match namespaces.iter().position(|ns| ns.id == ns_key) {
                Some(i) => i,
                None => {
                    namespaces.push(Namespace::new(ns_key, Vec::new()));
                    namespaces.len() - 1
                }
            });
        } else {
            let idx = current.ok_or_else(|| {
                malformed(line_no, format!("feature `{tok}` before any namespace"))
            })?;
            let (name, value) = match tok.rsplit_once(':') {
                Some((name, raw)) => {
                    let value: f64 = raw.parse().map_err(|_| {
                        malformed(line_no, format!("unparsable feature value in `{tok}`"))
                    })?;
                    (name, value)
                }
                None => (tok, 1.0),
            };
            if name.is_empty() {
                return Err(malformed(line_no, format!("empty feature name in `{tok}`")));
            }
            namespaces[idx].features.push(Feature::new(name, value));
        }
    }
    Ok(Example::new(label, namespaces))
}

/// Formats an example back into the VW-style text format.
pub fn format_vw_line(example: &Example) -> String {
    let mut out = format!("{}", example.label);
    for ns in &example.namespaces {
        out.push_str(&format!(" |{}", ns.id));
        for f in &ns.features {
            out.push_str(&format!(" {}:{}", f.name, f.value));
        }
    }
    out
}

/// Parses a whole VW-format text stream.
pub fn read_vw<R: Read>(reader: R) -> Result<Vec<Example>, IngestError> {
    use std::io::BufRead;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_vw_line_at(&line, i + 1)?);
    }
    Ok(out)
}

/// Splits `n_columns` feature columns into at most `max_namespaces`
/// contiguous groups of near-equal size, earlier groups one larger when the
/// division is not exact.
pub fn group_sizes(n_columns: usize, max_namespaces: usize) -> Vec<usize> {
    let groups = max_namespaces.min(n_columns);
    if groups == 0 {
        return Vec::new();
    }
    let base = n_columns / groups;
    let rem = n_columns % groups;
    (0..groups)
        .map(|i| if i < rem { base + 1 } else { base })
        .collect()
}

/// Reads a CSV stream into examples: the target column becomes the label and
/// the remaining columns are grouped into namespaces `ns0`, `ns1`, ...
/// Numeric cells become valued features; other non-empty cells are one-hot
/// expanded as `column=value`.
pub fn csv_to_examples<R: Read>(
    reader: R,
    target_column: &str,
    policy: &IngestPolicy,
) -> Result<Vec<Example>, IngestError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| IngestError::MissingTarget(target_column.to_owned()))?;
    let feature_columns: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(i, h)| (i, h.clone()))
        .collect();

    let sizes = group_sizes(feature_columns.len(), policy.max_namespaces);
    // column index -> namespace ordinal
    let mut ns_of = Vec::with_capacity(feature_columns.len());
    for (ns, &size) in sizes.iter().enumerate() {
        ns_of.extend(std::iter::repeat_n(ns, size));
    }

    let mut out = Vec::new();
    for (row_no, record) in rdr.records().enumerate() {
        let record = record?;
        let label_raw = record.get(target_idx).unwrap_or("");
        let label: f64 = label_raw.parse().map_err(|_| IngestError::NonNumericCell {
            row: row_no + 1,
            column: target_column.to_owned(),
        })?;
        let mut namespaces: Vec<Namespace> = sizes
            .iter()
            .enumerate()
            .map(|(i, _)| Namespace::new(format!("ns{i}"), Vec::new()))
            .collect();
        for (slot, (col_idx, col_name)) in feature_columns.iter().enumerate() {
            let cell = record.get(*col_idx).unwrap_or("");
            let feature = match cell.parse::<f64>() {
                Ok(v) => Feature::new(col_name.clone(), v),
                Err(_) if !cell.trim().is_empty() => {
                    Feature::new(format!("{col_name}={cell}"), 1.0)
                }
                Err(_) => {
                    return Err(IngestError::NonNumericCell {
                        row: row_no + 1,
                        column: col_name.clone(),
                    })
                }
            };
            namespaces[ns_of[slot]].features.push(feature);
        }
        out.push(Example::new(label, namespaces));
    }
    Ok(out)
}

/// Per-dataset target transformation, decided from the full label column.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetTransform {
    pub shift: f64,
    pub log: bool,
}

impl TargetTransform {
    /// Identity when the largest label stays within the threshold; otherwise
    /// a natural-log transform, preceded by a shift making the minimum label
    /// exactly 1 when any label is nonpositive.
    pub fn decide(labels: impl IntoIterator<Item = f64>, policy: &IngestPolicy) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for y in labels {
            min = min.min(y);
            max = max.max(y);
        }
        // empty label sets leave max at -inf and take this branch
        if max <= policy.log_transform_threshold {
            return TargetTransform {
                shift: 0.0,
                log: false,
            };
        }
        let shift = if min <= 0.0 { 1.0 - min } else { 0.0 };
        TargetTransform { shift, log: true }
    }

    pub fn apply(&self, label: f64) -> f64 {
        if self.log {
            (label + self.shift).ln()
        } else {
            label
        }
    }
}

/// Applies the dataset-level target transform in place.
pub fn transform_targets(examples: &mut [Example], policy: &IngestPolicy) -> TargetTransform {
    let transform = TargetTransform::decide(examples.iter().map(|e| e.label), policy);
    for ex in examples.iter_mut() {
        ex.label = transform.apply(ex.label);
    }
    transform
}
