//! Binary-classification datasets: CSV ingestion, one-hot encoding,
//! stratified splitting and re-proportioning.
//!
//! The minority class is always mapped to [`Label::Positive`]. Every row
//! carries its origin (the row index in the dataset it was loaded from) so
//! that resampled and split datasets can be traced back to source rows;
//! synthetic rows have no origin.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Negative => Label::Positive,
            Label::Positive => Label::Negative,
        }
    }
}

/// Dense row-major matrix of encoded features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    n_cols: usize,
}

impl FeatureMatrix {
    pub fn new(data: Vec<f64>, n_cols: usize) -> Result<Self> {
        if n_cols == 0 && !data.is_empty() {
            return Err(Error::InvalidDataset("zero-width matrix with data".into()));
        }
        if n_cols > 0 && data.len() % n_cols != 0 {
            return Err(Error::InvalidDataset(format!(
                "{} values do not fill rows of width {}",
                data.len(),
                n_cols
            )));
        }
        Ok(FeatureMatrix { data, n_cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(Error::WidthMismatch {
                expected: n_cols,
                got: bad.len(),
            });
        }
        FeatureMatrix::new(rows.concat(), n_cols)
    }

    pub fn n_rows(&self) -> usize {
        if self.n_cols == 0 {
            0
        } else {
            self.data.len() / self.n_cols
        }
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_cols.max(1))
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            data,
            n_cols: self.n_cols,
        }
    }

    pub(crate) fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.n_cols);
        self.data.extend_from_slice(row);
    }
}

/// How one source CSV column maps onto encoded feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnSpec {
    Numeric { name: String },
    Categorical { name: String, levels: Vec<String> },
}

impl ColumnSpec {
    pub fn name(&self) -> &str {
        match self {
            ColumnSpec::Numeric { name } | ColumnSpec::Categorical { name, .. } => name,
        }
    }

    fn width(&self) -> usize {
        match self {
            ColumnSpec::Numeric { .. } => 1,
            ColumnSpec::Categorical { levels, .. } => levels.len(),
        }
    }
}

/// Encoding of source columns into the feature matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
}

impl FeatureSchema {
    /// All-numeric schema with the given column names.
    pub fn numeric(names: &[&str]) -> Self {
        FeatureSchema {
            columns: names
                .iter()
                .map(|n| ColumnSpec::Numeric {
                    name: n.to_string(),
                })
                .collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.columns.iter().map(ColumnSpec::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.width());
        for col in &self.columns {
            match col {
                ColumnSpec::Numeric { name } => out.push(name.clone()),
                ColumnSpec::Categorical { name, levels } => {
                    out.extend(levels.iter().map(|l| format!("{name}={l}")))
                }
            }
        }
        out
    }

    /// Encoded column ranges of every one-hot group.
    pub fn one_hot_groups(&self) -> Vec<std::ops::Range<usize>> {
        let mut groups = Vec::new();
        let mut at = 0;
        for col in &self.columns {
            let w = col.width();
            if matches!(col, ColumnSpec::Categorical { .. }) {
                groups.push(at..at + w);
            }
            at += w;
        }
        groups
    }

    /// Encode one record of raw string values, ordered as `self.columns`.
    /// Returns `None` if a value is missing or a numeric value does not parse.
    fn encode(&self, values: &[&str], out: &mut Vec<f64>) -> Option<()> {
        for (col, raw) in self.columns.iter().zip(values) {
            if is_missing(raw) {
                return None;
            }
            match col {
                ColumnSpec::Numeric { .. } => out.push(parse_number(raw)?),
                ColumnSpec::Categorical { levels, .. } => {
                    // unseen levels encode as an all-zero group
                    out.extend(levels.iter().map(|l| if l == raw { 1.0 } else { 0.0 }));
                }
            }
        }
        Some(())
    }
}

fn is_missing(raw: &str) -> bool {
    matches!(raw, "" | "NA" | "?" | "NaN" | "nan")
}

fn parse_number(raw: &str) -> Option<f64> {
    raw.parse::<f64>().ok().filter(|v| v.is_finite())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    features: FeatureMatrix,
    labels: Vec<Label>,
    origin: Vec<Option<usize>>,
    schema: FeatureSchema,
    positive_label: String,
    negative_label: String,
    provenance: String,
}

impl Dataset {
    /// Build a dataset from encoded rows. Validates the dataset invariants:
    /// at least two rows, both classes present, no missing values.
    pub fn new(
        features: FeatureMatrix,
        labels: Vec<Label>,
        schema: FeatureSchema,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n = labels.len();
        let origin = (0..n).map(Some).collect();
        let d = Dataset {
            features,
            labels,
            origin,
            schema,
            positive_label: "positive".into(),
            negative_label: "negative".into(),
            provenance: provenance.into(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Convenience constructor for all-numeric data.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let features = FeatureMatrix::from_rows(rows)?;
        let names: Vec<String> = (0..features.n_cols()).map(|j| format!("x{j}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        Dataset::new(features, labels, FeatureSchema::numeric(&refs), "memory")
    }

    pub fn with_label_names(mut self, positive: &str, negative: &str) -> Self {
        self.positive_label = positive.into();
        self.negative_label = negative.into();
        self
    }

    fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.features.n_rows() != n {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                self.features.n_rows(),
                n
            )));
        }
        if self.origin.len() != n {
            return Err(Error::InvalidDataset("origin length mismatch".into()));
        }
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need >= 2 rows, got {n}")));
        }
        if self.features.n_cols() != self.schema.width() {
            return Err(Error::InvalidDataset(format!(
                "schema width {} does not match matrix width {}",
                self.schema.width(),
                self.features.n_cols()
            )));
        }
        let pos = self.n_positive();
        if pos == 0 || pos == n {
            return Err(Error::InvalidDataset("both classes must be present".into()));
        }
        if self.features.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    /// Source-row index of every row; `None` marks a synthetic row.
    pub fn origin(&self) -> &[Option<usize>] {
        &self.origin
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.schema.feature_names()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    pub fn negative_label(&self) -> &str {
        &self.negative_label
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn indices_of(&self, label: Label) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    /// Rows at `indices` (repeats allowed), keeping origins and metadata.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let d = Dataset {
            features: self.features.select(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            origin: indices.iter().map(|&i| self.origin[i]).collect(),
            schema: self.schema.clone(),
            positive_label: self.positive_label.clone(),
            negative_label: self.negative_label.clone(),
            provenance: self.provenance.clone(),
        };
        d.validate()?;
        Ok(d)
    }

    /// Append synthetic rows (no origin).
    pub(crate) fn with_synthetic(&self, rows: &[Vec<f64>], label: Label) -> Result<Dataset> {
        let mut d = self.clone();
        for r in rows {
            d.features.push_row(r);
            d.labels.push(label);
            d.origin.push(None);
        }
        d.validate()?;
        Ok(d)
    }

    pub fn class_stats(&self) -> ClassStats {
        class_stats(self)
    }

    pub fn summary(&self) -> DatasetSummary {
        let s = self.class_stats();
        DatasetSummary {
            n: self.len(),
            n_min: s.n_min,
            n_maj: s.n_maj,
            p_min: s.p_min,
            ir: s.ir,
            features: self.feature_names(),
            positive_label: self.positive_label.clone(),
        }
    }
}

/// JSON summary emitted by `film ingest`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub n_min: usize,
    pub n_maj: usize,
    pub p_min: f64,
    pub ir: f64,
    pub features: Vec<String>,
    pub positive_label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub n_min: usize,
    pub n_maj: usize,
    pub p_min: f64,
    pub ir: f64,
}

pub fn class_stats(d: &Dataset) -> ClassStats {
    let pos = d.n_positive();
    let neg = d.len() - pos;
    let (n_min, n_maj) = (pos.min(neg), pos.max(neg));
    ClassStats {
        n_min,
        n_maj,
        p_min: n_min as f64 / (n_min + n_maj) as f64,
        ir: n_maj as f64 / n_min as f64,
    }
}

/// Minority proportion for an imbalance ratio: `1 / (IR + 1)`.
pub fn p_min_from_ir(ir: f64) -> f64 {
    1.0 / (ir + 1.0)
}

pub fn ir_from_p_min(p_min: f64) -> f64 {
    (1.0 - p_min) / p_min
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_dropped: usize,
}

/// Load a CSV with a header row. Non-numeric columns are one-hot encoded
/// (original column order, then lexicographic level order). Rows with a
/// missing value in any column are dropped and counted.
///
/// When `positive_label` is `None` the minority label becomes positive.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    positive_label: Option<&str>,
    delimiter: u8,
) -> Result<(Dataset, IngestReport)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTargetColumn(target_column.to_string()))?;

    let mut report = IngestReport::default();
    let mut kept: Vec<csv::StringRecord> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        report.rows_read += 1;
        if rec.len() != header.len() || rec.iter().any(is_missing) {
            report.rows_dropped += 1;
        } else {
            kept.push(rec);
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyAfterCleaning {
            dropped: report.rows_dropped,
        });
    }

    let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for rec in &kept {
        *label_counts.entry(&rec[target_idx]).or_default() += 1;
    }
    if label_counts.len() != 2 {
        return Err(Error::NotBinaryTarget(label_counts.len()));
    }
    let (positive, negative) = pick_positive(&label_counts, positive_label)?;

    let feature_cols: Vec<usize> = (0..header.len()).filter(|&j| j != target_idx).collect();
    let mut columns = Vec::with_capacity(feature_cols.len());
    for &j in &feature_cols {
        let numeric = kept.iter().all(|r| parse_number(&r[j]).is_some());
        let name = header[j].clone();
        if numeric {
            columns.push(ColumnSpec::Numeric { name });
        } else {
            let levels: BTreeSet<&str> = kept.iter().map(|r| &r[j]).collect();
            columns.push(ColumnSpec::Categorical {
                name,
                levels: levels.into_iter().map(str::to_string).collect(),
            });
        }
    }
    let schema = FeatureSchema { columns };

    let mut data = Vec::with_capacity(kept.len() * schema.width());
    let mut labels = Vec::with_capacity(kept.len());
    let mut values: Vec<&str> = Vec::with_capacity(feature_cols.len());
    for rec in &kept {
        values.clear();
        values.extend(feature_cols.iter().map(|&j| &rec[j]));
        schema
            .encode(&values, &mut data)
            .expect("kept rows are complete and typed");
        labels.push(if rec[target_idx] == *positive {
            Label::Positive
        } else {
            Label::Negative
        });
    }
    let width = schema.width();
    let features = FeatureMatrix::new(data, width)?;
    let d = Dataset::new(features, labels, schema, path.display().to_string())?
        .with_label_names(&positive, &negative);
    Ok((d, report))
}

fn pick_positive(counts: &BTreeMap<&str, usize>, requested: Option<&str>) -> Result<(String, String)> {
    let entries: Vec<(&str, usize)> = counts.iter().map(|(k, v)| (*k, *v)).collect();
    let total: usize = entries.iter().map(|e| e.1).sum();
    let (pos, neg) = match requested {
        Some(label) => {
            let p = entries
                .iter()
                .position(|e| e.0 == label)
                .ok_or_else(|| Error::UnknownPositiveLabel(label.to_string()))?;
            (entries[p], entries[1 - p])
        }
        // smaller class; on a tie the lexicographically larger label
        None if entries[0].1 < entries[1].1 => (entries[0], entries[1]),
        None => (entries[1], entries[0]),
    };
    if pos.1 > neg.1 {
        return Err(Error::PositiveIsMajority {
            label: pos.0.to_string(),
            count: pos.1,
            total,
        });
    }
    Ok((pos.0.to_string(), neg.0.to_string()))
}

/// Read feature rows for prediction, encoding them with a stored schema.
/// Columns are matched by name; a target column, if present, is ignored.
/// Returns the matrix and the source row index of every kept row.
pub fn load_features_csv(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    delimiter: u8,
) -> Result<(FeatureMatrix, Vec<usize>)> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let positions: Vec<usize> = schema
        .columns
        .iter()
        .map(|c| header.iter().position(|h| h == c.name()))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::WidthMismatch {
            expected: schema.columns.len(),
            got: header.len(),
        })?;

    let mut data = Vec::new();
    let mut kept = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let values: Vec<&str> = positions.iter().map(|&j| rec.get(j).unwrap_or("")).collect();
        let mark = data.len();
        if schema.encode(&values, &mut data).is_some() {
            kept.push(i);
        } else {
            data.truncate(mark);
        }
    }
    Ok((FeatureMatrix::new(data, schema.width())?, kept))
}

/// Write the encoded feature matrix and the class column (named `target`)
/// using the dataset's label names.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, target: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = d.feature_names();
    header.push(target.to_string());
    w.write_record(&header)?;
    for i in 0..d.len() {
        let mut rec: Vec<String> = d.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(match d.labels()[i] {
            Label::Positive => d.positive_label().to_string(),
            Label::Negative => d.negative_label().to_string(),
        });
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// Two spherical unit-variance Gaussians in `dims` dimensions whose means
/// differ by `separation` in every coordinate. `round(n * p_min)` rows are
/// positive; rows are in random order.
pub fn two_gaussians(n: usize, p_min: f64, dims: usize, separation: f64, seed: u64) -> Result<Dataset> {
    use rand_distr::{Distribution, StandardNormal};
    if dims == 0 || !(p_min > 0.0 && p_min < 1.0) {
        return Err(Error::InvalidDataset(format!(
            "need dims >= 1 and p_min in (0,1), got {dims} and {p_min}"
        )));
    }
    let mut rng = seed::rng(seed);
    let n_pos = (n as f64 * p_min).round() as usize;
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i < n_pos { Label::Positive } else { Label::Negative })
        .collect();
    labels.shuffle(&mut rng);
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|l| {
            let shift = if l.is_positive() { separation } else { 0.0 };
            (0..dims)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z + shift
                })
                .collect()
        })
        .collect();
    Ok(Dataset::from_rows(&rows, labels)?.with_label_names("1", "0"))
}

#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub p_holdout: f64,
}

/// Per-class shuffled index lists, minority (positive) first.
fn shuffled_classes(d: &Dataset, rng: &mut seed::Rng) -> [Vec<usize>; 2] {
    let mut pos = d.indices_of(Label::Positive);
    let mut neg = d.indices_of(Label::Negative);
    pos.shuffle(rng);
    neg.shuffle(rng);
    [pos, neg]
}

/// Stratified hold-out: `round(p_holdout * class count)` rows of each class
/// go to train, the rest to test.
pub fn stratified_holdout(d: &Dataset, p_holdout: f64, seed: u64) -> Result<SplitPair> {
    if !(p_holdout > 0.0 && p_holdout < 1.0) {
        return Err(Error::InvalidDataset(format!(
            "p_holdout must be in (0,1), got {p_holdout}"
        )));
    }
    let mut rng = seed::rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in shuffled_classes(d, &mut rng) {
        let take = (p_holdout * class.len() as f64).round() as usize;
        if take == 0 || take == class.len() {
            return Err(Error::ClassTooSmall(format!(
                "a class of {} rows leaves an empty side at p_holdout = {p_holdout}",
                class.len()
            )));
        }
        train.extend_from_slice(&class[..take]);
        test.extend_from_slice(&class[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPair {
        train: d.select(&train)?,
        test: d.select(&test)?,
        p_holdout,
    })
}

/// Stratified k-fold. The smaller class is dealt out as evenly as
/// possible; the larger class is allocated proportionally to it (largest
/// remainder) so every fold keeps the source class ratio.
pub fn stratified_kfold(d: &Dataset, k: usize, seed: u64) -> Result<Vec<SplitPair>> {
    let assignment = kfold_assignment(d, k, seed)?;
    (0..k)
        .map(|f| {
            let test: Vec<usize> = (0..d.len()).filter(|&i| assignment[i] == f).collect();
            let train: Vec<usize> = (0..d.len()).filter(|&i| assignment[i] != f).collect();
            Ok(SplitPair {
                train: d.select(&train)?,
                test: d.select(&test)?,
                p_holdout: train.len() as f64 / d.len() as f64,
            })
        })
        .collect()
}

/// Fold index of every row.
pub fn kfold_assignment(d: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::InvalidDataset(format!("k must be >= 2, got {k}")));
    }
    let mut rng = seed::rng(seed);
    let [pos, neg] = shuffled_classes(d, &mut rng);
    let (lead, rest) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
    if lead.len() < k {
        return Err(Error::ClassTooSmall(format!(
            "{} rows cannot fill {k} folds",
            lead.len()
        )));
    }

    let lead_counts: Vec<usize> = (0..k)
        .map(|f| lead.len() / k + usize::from(f < lead.len() % k))
        .collect();
    let ratio = rest.len() as f64 / lead.len() as f64;
    let targets: Vec<f64> = lead_counts.iter().map(|&a| a as f64 * ratio).collect();
    let mut rest_counts: Vec<usize> = targets.iter().map(|t| t.floor() as usize).collect();
    let mut short = rest.len() - rest_counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - rest_counts[a] as f64;
        let rb = targets[b] - rest_counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &f in order.iter().cycle() {
        if short == 0 {
            break;
        }
        rest_counts[f] += 1;
        short -= 1;
    }
    if rest_counts.contains(&0) {
        return Err(Error::ClassTooSmall(format!(
            "{} rows cannot fill {k} folds",
            rest.len()
        )));
    }

    let mut assignment = vec![usize::MAX; d.len()];
    for (rows, counts) in [(&lead, &lead_counts), (&rest, &rest_counts)] {
        let mut at = 0;
        for (f, &c) in counts.iter().enumerate() {
            for &i in &rows[at..at + c] {
                assignment[i] = f;
            }
            at += c;
        }
    }
    Ok(assignment)
}

/// Re-proportion `d` to minority proportion `p_target` by subsampling one
/// class without replacement; the other class is kept whole.
pub fn resample_to_proportion(d: &Dataset, p_target: f64, seed: u64) -> Result<Dataset> {
    if !(p_target > 0.0 && p_target < 0.5) {
        return Err(Error::UnreachableProportion {
            p_target,
            reason: "target must lie strictly between 0 and 0.5".into(),
        });
    }
    let stats = d.class_stats();
    if (p_target - stats.p_min).abs() < 1e-12 {
        return Ok(d.clone());
    }
    let mut rng = seed::rng(seed);
    let [mut pos, mut neg] = shuffled_classes(d, &mut rng);
    if p_target > stats.p_min {
        let want = (pos.len() as f64 * (1.0 - p_target) / p_target).round() as usize;
        if want < 1 {
            return Err(Error::UnreachableProportion {
                p_target,
                reason: "needs zero majority rows".into(),
            });
        }
        neg.truncate(want.min(neg.len()));
    } else {
        let want = (neg.len() as f64 * p_target / (1.0 - p_target)).round() as usize;
        if want < 1 {
            return Err(Error::UnreachableProportion {
                p_target,
                reason: "needs zero minority rows".into(),
            });
        }
        pos.truncate(want.min(pos.len()));
    }
    let mut keep: Vec<usize> = pos.into_iter().chain(neg).collect();
    keep.sort_unstable();
    d.select(&keep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionGrid {
    pub p_d: f64,
    pub targets: Vec<f64>,
}

impl ProportionGrid {
    /// `p_d` followed by the targets: the full covariate vector.
    pub fn with_original(&self) -> Vec<f64> {
        std::iter::once(self.p_d).chain(self.targets.iter().copied()).collect()
    }
}

/// Points of `linspace(lo, hi, count + 1)` with one endpoint dropped.
fn linspace_open(lo: f64, hi: f64, count: usize, drop_low: bool) -> Vec<f64> {
    let step = (hi - lo) / count as f64;
    let range = if drop_low { 1..=count } else { 0..=count - 1 };
    range
        .map(|i| if i == count { hi } else { lo + step * i as f64 })
        .collect()
}

/// Target minority proportions around `p_d`: `n/2` evenly spaced in
/// `[0.05, p_d)` and `n/2` in `(p_d, 0.4]`, or all `n` in `(p_d, 0.4]`
/// when `p_d <= 0.05`.
pub fn proportion_grid(p_d: f64, n: usize) -> Result<ProportionGrid> {
    if n < 6 || n % 2 != 0 {
        return Err(Error::BadN(n));
    }
    if p_d > 0.4 {
        return Err(Error::NotImbalanced(p_d));
    }
    if !(p_d > 0.0) || p_d >= 0.4 {
        return Err(Error::DegenerateGrid(p_d));
    }
    let targets = if p_d > 0.05 {
        let mut lower = linspace_open(0.05, p_d, n / 2, false);
        lower.extend(linspace_open(p_d, 0.4, n / 2, true));
        lower
    } else {
        linspace_open(p_d, 0.4, n, true)
    };
    Ok(ProportionGrid { p_d, targets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(pos: usize, neg: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..pos + neg).map(|i| vec![i as f64]).collect();
        let labels = (0..pos + neg)
            .map(|i| if i < pos { Label::Positive } else { Label::Negative })
            .collect();
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn class_stats_examples() {
        let s = toy(50, 50).class_stats();
        assert_eq!((s.ir, s.p_min), (1.0, 0.5));
        let s = toy(100, 300).class_stats();
        assert_eq!(s.ir, 3.0);
        assert_eq!(s.p_min, 0.25);
        assert!((p_min_from_ir(75.34) - 1.0 / 76.34).abs() < 1e-15);
        assert!((p_min_from_ir(75.34) - 0.013099).abs() < 1e-6);
    }

    #[test]
    fn dataset_rejects_single_class() {
        let err = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![Label::Negative; 2]);
        assert!(matches!(err, Err(Error::InvalidDataset(_))));
    }

    #[test]
    fn holdout_counts_and_determinism() {
        let d = toy(100, 300);
        let s = stratified_holdout(&d, 0.75, 9).unwrap();
        assert_eq!(s.train.n_positive(), 75);
        assert_eq!(s.train.len() - s.train.n_positive(), 225);
        assert_eq!(s.test.len(), 100);
        let again = stratified_holdout(&d, 0.75, 9).unwrap();
        assert_eq!(s.train.origin(), again.train.origin());
    }

    #[test]
    fn holdout_rejects_tiny_class() {
        let d = toy(1, 10);
        assert!(matches!(
            stratified_holdout(&d, 0.75, 0),
            Err(Error::ClassTooSmall(_))
        ));
    }

    #[test]
    fn kfold_examples() {
        let d = toy(10, 40);
        let folds = stratified_kfold(&d, 5, 3).unwrap();
        for f in &folds {
            assert_eq!(f.test.n_positive(), 2);
            assert_eq!(f.test.len(), 10);
        }
        let d = toy(2, 2);
        for f in stratified_kfold(&d, 2, 1).unwrap() {
            assert_eq!((f.test.n_positive(), f.test.len()), (1, 2));
        }
        assert!(matches!(
            stratified_kfold(&toy(3, 40), 5, 0),
            Err(Error::ClassTooSmall(_))
        ));
    }

    #[test]
    fn resample_examples() {
        let d = toy(100, 900);
        let r = resample_to_proportion(&d, 0.2, 1).unwrap();
        assert_eq!((r.n_positive(), r.len()), (100, 500));
        let same = resample_to_proportion(&d, 0.1, 1).unwrap();
        assert_eq!(same.origin(), d.origin());
        let d = toy(2, 1000);
        let r = resample_to_proportion(&d, 0.45, 5).unwrap();
        assert_eq!((r.n_positive(), r.len()), (2, 4));
        assert!((r.class_stats().p_min - 0.45).abs() <= 1.0 / r.len() as f64);
        let low = resample_to_proportion(&toy(100, 900), 0.05, 2).unwrap();
        // round(900 * 0.05 / 0.95) = 47
        assert_eq!((low.n_positive(), low.len()), (47, 947));
    }

    #[test]
    fn resample_unreachable() {
        let d = toy(3, 10);
        assert!(matches!(
            resample_to_proportion(&d, 0.01, 0),
            Err(Error::UnreachableProportion { .. })
        ));
    }

    #[test]
    fn grid_examples() {
        let g = proportion_grid(0.2, 6).unwrap();
        let expect = [0.05, 0.10, 0.15, 0.2 + 0.2 / 3.0, 0.2 + 0.4 / 3.0, 0.4];
        assert_eq!(g.targets.len(), 6);
        for (a, b) in g.targets.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let g = proportion_grid(0.03, 6).unwrap();
        let step = (0.4 - 0.03) / 6.0;
        for (i, t) in g.targets.iter().enumerate() {
            assert!((t - (0.03 + step * (i + 1) as f64)).abs() < 1e-12);
        }
        assert!(matches!(proportion_grid(0.45, 6), Err(Error::NotImbalanced(_))));
        assert!(matches!(proportion_grid(0.2, 7), Err(Error::BadN(7))));
        assert!(matches!(proportion_grid(0.2, 4), Err(Error::BadN(4))));
        assert!(matches!(proportion_grid(0.4, 6), Err(Error::DegenerateGrid(_))));
    }

    #[test]
    fn gaussians_round_trip_through_csv() {
        let d = two_gaussians(200, 0.15, 2, 1.0, 3).unwrap();
        assert_eq!(d.n_positive(), 30);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_csv(&d, &path, "class").unwrap();
        let (back, report) = load_csv(&path, "class", None, b',').unwrap();
        assert_eq!(report.rows_dropped, 0);
        assert_eq!(back.labels(), d.labels());
        assert_eq!(back.features(), d.features());
        assert_eq!(back.positive_label(), "1");
    }
}
