//! Random forest of CART classification trees (Gini impurity, bootstrap
//! rows per tree, random feature subset per split).

use rand::seq::index;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, Label};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_leaf_size: usize,
    /// `None` means `ceil(sqrt(p))`.
    pub features_per_split: Option<usize>,
    pub bootstrap_fraction: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 8,
            min_leaf_size: 1,
            features_per_split: None,
            bootstrap_fraction: 1.0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidHyperparameter(m.into()));
        if self.n_trees == 0 {
            return bad("n_trees must be >= 1");
        }
        if self.max_depth == 0 {
            return bad("max_depth must be >= 1");
        }
        if self.min_leaf_size == 0 {
            return bad("min_leaf_size must be >= 1");
        }
        if !(self.bootstrap_fraction > 0.0) {
            return bad("bootstrap_fraction must be > 0");
        }
        match self.features_per_split {
            Some(0) => bad("features_per_split must be >= 1"),
            Some(m) if m > n_features => Err(Error::InvalidHyperparameter(format!(
                "features_per_split {m} exceeds feature count {n_features}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn mtry(&self, n_features: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        pos: u32,
        neg: u32,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    /// Positive-class frequency of the leaf `row` lands in.
    pub fn leaf_frequency(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { pos, neg } => return *pos as f64 / (*pos + *neg) as f64,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if row[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> Vec<(u32, u32)> {
        match self {
            Node::Leaf { pos, neg } => vec![(*pos, *neg)],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Node>,
}

impl ForestModel {
    pub fn predict_proba(&self, rows: &FeatureMatrix) -> Vec<f64> {
        rows.rows()
            .map(|r| {
                self.trees.iter().map(|t| t.leaf_frequency(r)).sum::<f64>() / self.trees.len() as f64
            })
            .collect()
    }
}

/// Train a forest. Tree `i` is seeded with `derive(seed, i)`, so a larger
/// forest extends a smaller one with the same seed.
pub fn fit(params: &ForestParams, x: &FeatureMatrix, labels: &[Label], seed: u64) -> Result<ForestModel> {
    params.validate(x.n_cols())?;
    if x.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::DegenerateData("labels are constant".into()));
    }
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| grow_tree(params, x, labels, seed::derive(seed, i as u64)))
        .collect();
    Ok(ForestModel { trees })
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [Label],
    params: &'a ForestParams,
    mtry: usize,
    rng: seed::Rng,
    scratch: Vec<(f64, bool)>,
}

fn grow_tree(params: &ForestParams, x: &FeatureMatrix, y: &[Label], seed: u64) -> Node {
    let mut rng = seed::rng(seed);
    let n = x.n_rows();
    let draws = ((params.bootstrap_fraction * n as f64).round() as usize).max(1);
    let sample: Vec<usize> = (0..draws).map(|_| rng.gen_range(0..n)).collect();
    let mut g = Grower {
        x,
        y,
        params,
        mtry: params.mtry(x.n_cols()),
        rng,
        scratch: Vec::with_capacity(draws),
    };
    g.grow(sample, 0)
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Node {
        let total = rows.len();
        let pos = rows.iter().filter(|&&i| self.y[i].is_positive()).count();
        let leaf = Node::Leaf {
            pos: pos as u32,
            neg: (total - pos) as u32,
        };
        if depth >= self.params.max_depth
            || pos == 0
            || pos == total
            || total < 2 * self.params.min_leaf_size
        {
            return leaf;
        }
        let Some((feature, threshold)) = self.best_split(&rows, pos) else {
            return leaf;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&i| self.x.row(i)[feature] <= threshold);
        Node::Split {
            feature,
            threshold,
            left: Box::new(self.grow(left, depth + 1)),
            right: Box::new(self.grow(right, depth + 1)),
        }
    }

    /// Best Gini split over a random feature subset; ties keep the first
    /// candidate (feature draw order, then ascending threshold).
    fn best_split(&mut self, rows: &[usize], pos: usize) -> Option<(usize, f64)> {
        let total = rows.len();
        let parent = gini(pos, total);
        let min_leaf = self.params.min_leaf_size;
        let features = index::sample(&mut self.rng, self.x.n_cols(), self.mtry).into_vec();
        let mut best: Option<(f64, usize, f64)> = None;
        for f in features {
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&i| (self.x.row(i)[f], self.y[i].is_positive())));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 0..total - 1 {
                left_pos += usize::from(self.scratch[k].1);
                let left_n = k + 1;
                let right_n = total - left_n;
                let (lo, hi) = (self.scratch[k].0, self.scratch[k + 1].0);
                if lo == hi || left_n < min_leaf || right_n < min_leaf {
                    continue;
                }
                let child = (left_n as f64 * gini(left_pos, left_n)
                    + right_n as f64 * gini(pos - left_pos, right_n))
                    / total as f64;
                let gain = parent - child;
                if gain > 1e-12 && best.map_or(true, |b| gain > b.0) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some((gain, f, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> (FeatureMatrix, Vec<Label>) {
        let xs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y = (0..20)
            .map(|i| if i >= 12 { Label::Positive } else { Label::Negative })
            .collect();
        (FeatureMatrix::from_rows(&xs).unwrap(), y)
    }

    #[test]
    fn stump_finds_the_step() {
        let (x, y) = step_data();
        let params = ForestParams {
            n_trees: 1,
            max_depth: 1,
            ..Default::default()
        };
        let m = fit(&params, &x, &y, 4).unwrap();
        match &m.trees[0] {
            Node::Split { feature, threshold, left, right } => {
                assert_eq!(*feature, 0);
                // the only zero-impurity cut lies between 11 and 12
                assert!(*threshold >= 11.0 && *threshold < 12.0, "{threshold}");
                assert!(matches!(**left, Node::Leaf { pos: 0, .. }));
                assert!(matches!(**right, Node::Leaf { neg: 0, .. }));
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
    }

    #[test]
    fn leaf_frequency_of_mixed_leaf() {
        let t = Node::Leaf { pos: 3, neg: 1 };
        assert_eq!(t.leaf_frequency(&[0.0]), 0.75);
        let m = ForestModel { trees: vec![Node::Leaf { pos: 4, neg: 0 }; 3] };
        let x = FeatureMatrix::from_rows(&[vec![1.0], vec![-1.0]]).unwrap();
        assert_eq!(m.predict_proba(&x), vec![1.0, 1.0]);
    }

    #[test]
    fn mtry_default_and_bounds() {
        let p = ForestParams::default();
        assert_eq!(p.mtry(10), 4);
        assert_eq!(p.mtry(1), 1);
        let bad = ForestParams {
            features_per_split: Some(5),
            ..Default::default()
        };
        assert!(bad.validate(3).is_err());
    }
}
