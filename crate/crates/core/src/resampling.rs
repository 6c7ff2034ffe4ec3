//! Baseline imbalance-aware approaches and the balanced subsampler shared
//! with IPIP.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, FeatureMatrix, Label};
use crate::error::{Error, Result};
use crate::learners::{check_width, train, Classifier, LearnerSpec, TrainedModel};
use crate::{persist, seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IaaKind {
    None,
    Upsample,
    Downsample,
    Smote,
    UnderBagging,
    Ipip,
}

impl IaaKind {
    pub fn name(self) -> &'static str {
        match self {
            IaaKind::None => "none",
            IaaKind::Upsample => "upsample",
            IaaKind::Downsample => "downsample",
            IaaKind::Smote => "smote",
            IaaKind::UnderBagging => "under_bagging",
            IaaKind::Ipip => "ipip",
        }
    }
}

impl fmt::Display for IaaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IaaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            IaaKind::None,
            IaaKind::Upsample,
            IaaKind::Downsample,
            IaaKind::Smote,
            IaaKind::UnderBagging,
            IaaKind::Ipip,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown technique `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaaSpec {
    pub kind: IaaKind,
    pub k_neighbors: usize,
    pub n_bags: usize,
    pub seed: u64,
}

impl IaaSpec {
    pub fn new(kind: IaaKind, seed: u64) -> Self {
        IaaSpec {
            kind,
            k_neighbors: 5,
            n_bags: 10,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 || self.n_bags == 0 {
            return Err(Error::InvalidConfig("k_neighbors and n_bags must be >= 1".into()));
        }
        Ok(())
    }
}

fn split_classes(d: &Dataset) -> (Vec<usize>, Vec<usize>) {
    (d.indices_of(Label::Positive), d.indices_of(Label::Negative))
}

/// Replicate minority rows (with replacement) until both classes have the
/// majority count. Majority rows are untouched.
pub fn upsample(d: &Dataset, seed: u64) -> Result<Dataset> {
    let (pos, neg) = split_classes(d);
    if pos.len() >= neg.len() {
        return Ok(d.clone());
    }
    let mut rng = seed::rng(seed);
    let mut keep: Vec<usize> = (0..d.len()).collect();
    keep.extend((0..neg.len() - pos.len()).map(|_| pos[rng.gen_range(0..pos.len())]));
    d.select(&keep)
}

/// Subsample majority rows without replacement down to the minority count.
pub fn downsample(d: &Dataset, seed: u64) -> Result<Dataset> {
    let (pos, mut neg) = split_classes(d);
    if pos.len() >= neg.len() {
        return Ok(d.clone());
    }
    let mut rng = seed::rng(seed);
    neg.shuffle(&mut rng);
    neg.truncate(pos.len());
    let mut keep: Vec<usize> = pos.into_iter().chain(neg).collect();
    keep.sort_unstable();
    d.select(&keep)
}

/// Provenance of one synthetic SMOTE row.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoteDraw {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

/// Point `base + lambda * (neighbor - base)`, with every one-hot group
/// rounded to the nearest valid indicator vector (its argmax column).
pub fn interpolate(
    base: &[f64],
    neighbor: &[f64],
    lambda: f64,
    one_hot: &[std::ops::Range<usize>],
) -> Vec<f64> {
    let mut x: Vec<f64> = base
        .iter()
        .zip(neighbor)
        .map(|(a, b)| a + lambda * (b - a))
        .collect();
    for g in one_hot {
        let mut arg = g.start;
        for j in g.clone() {
            if x[j] > x[arg] {
                arg = j;
            }
        }
        for j in g.clone() {
            x[j] = if j == arg { 1.0 } else { 0.0 };
        }
    }
    x
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// SMOTE. `oversample_ratio` is the number of synthetic rows as a multiple
/// of the minority count; `None` balances the classes.
pub fn smote(d: &Dataset, k_neighbors: usize, oversample_ratio: Option<f64>, seed: u64) -> Result<Dataset> {
    smote_traced(d, k_neighbors, oversample_ratio, seed).map(|(d, _)| d)
}

/// [`smote`] that also returns the draw behind every synthetic row, in the
/// order the rows were appended.
pub fn smote_traced(
    d: &Dataset,
    k_neighbors: usize,
    oversample_ratio: Option<f64>,
    seed: u64,
) -> Result<(Dataset, Vec<SmoteDraw>)> {
    let (pos, neg) = split_classes(d);
    if pos.len() < 2 {
        return Err(Error::TooFewMinority(pos.len()));
    }
    if k_neighbors == 0 || k_neighbors > pos.len() - 1 {
        return Err(Error::InvalidConfig(format!(
            "k_neighbors must be in 1..={}, got {k_neighbors}",
            pos.len() - 1
        )));
    }
    let n_new = match oversample_ratio {
        Some(r) if r >= 0.0 => (r * pos.len() as f64).round() as usize,
        Some(r) => return Err(Error::InvalidConfig(format!("negative oversample ratio {r}"))),
        None => neg.len().saturating_sub(pos.len()),
    };

    // k nearest minority neighbours of every minority row (ties by index)
    let neighbors: Vec<Vec<usize>> = pos
        .iter()
        .map(|&i| {
            let mut cand: Vec<(f64, usize)> = pos
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (sq_dist(d.row(i), d.row(j)), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k_neighbors);
            cand.into_iter().map(|c| c.1).collect()
        })
        .collect();

    let groups = d.schema().one_hot_groups();
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(n_new);
    let mut trace = Vec::with_capacity(n_new);
    for s in 0..n_new {
        let which = s % pos.len();
        let base = pos[which];
        let nn = &neighbors[which];
        let neighbor = nn[rng.gen_range(0..nn.len())];
        let lambda: f64 = rng.gen_range(0.0..=1.0);
        rows.push(interpolate(d.row(base), d.row(neighbor), lambda, &groups));
        trace.push(SmoteDraw { base, neighbor, lambda });
    }
    Ok((d.with_synthetic(&rows, Label::Positive)?, trace))
}

/// Bagged models over independent downsampled draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnderBaggingModel {
    pub members: Vec<TrainedModel>,
}

impl UnderBaggingModel {
    /// Positive-vote count per row.
    pub fn positive_votes(&self, rows: &FeatureMatrix) -> Result<Vec<usize>> {
        let mut votes = vec![0; rows.n_rows()];
        for m in &self.members {
            for (v, l) in votes.iter_mut().zip(m.predict(rows)?) {
                *v += usize::from(l.is_positive());
            }
        }
        Ok(votes)
    }

    /// Unweighted majority vote; a tie goes to the negative (majority) class.
    pub fn predict_votes(&self, rows: &FeatureMatrix) -> Result<Vec<Label>> {
        let n = self.members.len();
        Ok(self
            .positive_votes(rows)?
            .into_iter()
            .map(|v| if 2 * v > n { Label::Positive } else { Label::Negative })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        persist::to_json("under_bagging_model", self)
    }
}

impl Classifier for UnderBaggingModel {
    fn n_features(&self) -> usize {
        self.members[0].n_features
    }

    /// Mean of member probabilities.
    fn predict_proba(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        check_width(self.n_features(), rows)?;
        let mut acc = vec![0.0; rows.n_rows()];
        for m in &self.members {
            for (a, p) in acc.iter_mut().zip(m.predict_proba(rows)?) {
                *a += p;
            }
        }
        let n = self.members.len() as f64;
        Ok(acc.into_iter().map(|a| a / n).collect())
    }

    fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<Label>> {
        self.predict_votes(rows)
    }
}

/// Bag `i` downsamples with `derive(seed, 2i)` and trains with
/// `derive(seed, 2i + 1)`.
pub fn under_bagging(d: &Dataset, n_bags: usize, learner: &LearnerSpec, seed: u64) -> Result<UnderBaggingModel> {
    if n_bags == 0 {
        return Err(Error::InvalidConfig("n_bags must be >= 1".into()));
    }
    let members = (0..n_bags as u64)
        .into_par_iter()
        .map(|i| {
            let bag = downsample(d, seed::derive(seed, 2 * i))?;
            train(&learner.with_seed(seed::derive(seed, 2 * i + 1)), &bag)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UnderBaggingModel { members })
}

/// Majority rows drawn per subset for `n_min_draw` minority rows at
/// minority proportion `p_target`.
pub fn majority_draw(n_min_draw: usize, p_target: f64) -> usize {
    (n_min_draw as f64 * (1.0 - p_target) / p_target).round() as usize
}

/// `count` balanced subsets. Each draws `n_min_draw` minority rows and
/// `majority_draw(n_min_draw, p_target)` majority rows uniformly with
/// replacement; subset `i` uses seed `derive(seed, i)`.
pub fn balance_subsampling(
    d: &Dataset,
    p_target: f64,
    n_min_draw: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Dataset>> {
    let (pos, neg) = split_classes(d);
    if n_min_draw == 0 || n_min_draw > pos.len() {
        return Err(Error::BadCounts(format!(
            "minority draw {n_min_draw} not in 1..={}",
            pos.len()
        )));
    }
    if !(p_target > 0.0 && p_target <= 0.5) {
        return Err(Error::BadCounts(format!("p_target {p_target} not in (0, 0.5]")));
    }
    let n_maj = majority_draw(n_min_draw, p_target);
    (0..count as u64)
        .map(|i| {
            let mut rng = seed::rng(seed::derive(seed, i));
            let mut rows: Vec<usize> = Vec::with_capacity(n_min_draw + n_maj);
            rows.extend((0..n_min_draw).map(|_| pos[rng.gen_range(0..pos.len())]));
            rows.extend((0..n_maj).map(|_| neg[rng.gen_range(0..neg.len())]));
            d.select(&rows)
        })
        .collect()
}
