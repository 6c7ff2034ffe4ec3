//! Base learners behind a uniform train / predict contract, and
//! Kappa-driven grid search.

pub mod forest;
pub mod logistic;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_kfold, Dataset, FeatureMatrix, Label};
use crate::error::{Error, Result};
use crate::metrics::{confusion, threshold_metrics};
use crate::persist;

pub use forest::{ForestModel, ForestParams};
pub use logistic::{LogisticModel, LogisticParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    RandomForest,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "logistic",
            LearnerKind::RandomForest => "random_forest",
        }
    }

    pub fn default_params(self) -> LearnerParams {
        match self {
            LearnerKind::Logistic => LearnerParams::Logistic(LogisticParams::default()),
            LearnerKind::RandomForest => LearnerParams::RandomForest(ForestParams::default()),
        }
    }

    /// Small default search grid for the kind.
    pub fn default_grid(self) -> HyperGrid {
        match self {
            LearnerKind::Logistic => HyperGrid::new(vec![GridAxis::new("l2_penalty", &[0.0, 1e-3, 1e-1])]),
            LearnerKind::RandomForest => HyperGrid::new(vec![
                GridAxis::new("n_trees", &[100.0]),
                GridAxis::new("max_depth", &[8.0, 16.0]),
                GridAxis::new("min_leaf_size", &[1.0, 5.0]),
            ]),
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LearnerKind::Logistic),
            "random_forest" | "forest" => Ok(LearnerKind::RandomForest),
            other => Err(Error::InvalidConfig(format!("unknown learner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnerParams {
    Logistic(LogisticParams),
    RandomForest(ForestParams),
}

impl LearnerParams {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerParams::Logistic(_) => LearnerKind::Logistic,
            LearnerParams::RandomForest(_) => LearnerKind::RandomForest,
        }
    }

    /// Set a hyperparameter by name.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidHyperparameter(format!("{name} = {v} is not a positive integer")))
            }
        };
        match self {
            LearnerParams::Logistic(p) => match name {
                "max_iterations" => p.max_iterations = count(value)?,
                "convergence_tolerance" => p.convergence_tolerance = value,
                "l2_penalty" => p.l2_penalty = value,
                _ => return Err(Error::InvalidHyperparameter(format!("logistic has no `{name}`"))),
            },
            LearnerParams::RandomForest(p) => match name {
                "n_trees" => p.n_trees = count(value)?,
                "max_depth" => p.max_depth = count(value)?,
                "min_leaf_size" => p.min_leaf_size = count(value)?,
                "features_per_split" => p.features_per_split = Some(count(value)?),
                "bootstrap_fraction" => p.bootstrap_fraction = value,
                _ => return Err(Error::InvalidHyperparameter(format!("random_forest has no `{name}`"))),
            },
        }
        Ok(())
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        match self {
            LearnerParams::Logistic(p) => p.validate(),
            LearnerParams::RandomForest(p) => p.validate(n_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub params: LearnerParams,
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(params: LearnerParams, seed: u64) -> Self {
        LearnerSpec { params, seed }
    }

    pub fn logistic(params: LogisticParams) -> Self {
        LearnerSpec::new(LearnerParams::Logistic(params), 0)
    }

    pub fn forest(params: ForestParams, seed: u64) -> Self {
        LearnerSpec::new(LearnerParams::RandomForest(params), seed)
    }

    pub fn kind(&self) -> LearnerKind {
        self.params.kind()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        LearnerSpec {
            params: self.params.clone(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelState {
    Logistic(LogisticModel),
    RandomForest(ForestModel),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    /// IRLS iterations (logistic) or trees built (forest).
    pub iterations: usize,
    pub converged: bool,
    pub gradient_fallback: bool,
    /// True when this is a class-prior model substituted for a failed fit.
    #[serde(default)]
    pub prior_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: LearnerSpec,
    pub n_features: usize,
    pub state: ModelState,
    pub summary: TrainingSummary,
}

/// Anything that scores rows with a probability of the positive class.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn predict_proba(&self, rows: &FeatureMatrix) -> Result<Vec<f64>>;

    /// Hard labels: positive iff the score is at least 0.5.
    fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<Label>> {
        Ok(self
            .predict_proba(rows)?
            .into_iter()
            .map(|s| if s >= 0.5 { Label::Positive } else { Label::Negative })
            .collect())
    }
}

pub(crate) fn check_width(expected: usize, rows: &FeatureMatrix) -> Result<()> {
    if rows.n_cols() != expected {
        return Err(Error::WidthMismatch {
            expected,
            got: rows.n_cols(),
        });
    }
    Ok(())
}

impl Classifier for TrainedModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        check_width(self.n_features, rows)?;
        Ok(match &self.state {
            ModelState::Logistic(m) => m.predict_proba(rows),
            ModelState::RandomForest(m) => m.predict_proba(rows),
        })
    }
}

impl TrainedModel {
    /// Class-prior model: constant score equal to the positive rate.
    pub fn prior(spec: LearnerSpec, n_features: usize, positive_rate: f64) -> Self {
        TrainedModel {
            spec,
            n_features,
            state: ModelState::Logistic(LogisticModel::prior(n_features, positive_rate)),
            summary: TrainingSummary {
                prior_fallback: true,
                ..Default::default()
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        persist::to_json("trained_model", self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        persist::from_json("trained_model", s)
    }
}

pub fn train(spec: &LearnerSpec, d: &Dataset) -> Result<TrainedModel> {
    fit(spec, d.features(), d.labels())
}

/// Train on a raw matrix and labels (which may be single-class, in which
/// case `DegenerateData` is returned).
pub fn fit(spec: &LearnerSpec, x: &FeatureMatrix, labels: &[Label]) -> Result<TrainedModel> {
    spec.params.validate(x.n_cols())?;
    let (state, summary) = match &spec.params {
        LearnerParams::Logistic(p) => {
            let (m, info) = logistic::fit(p, x, labels)?;
            let summary = TrainingSummary {
                iterations: info.iterations,
                converged: info.converged,
                gradient_fallback: info.gradient_fallback,
                prior_fallback: false,
            };
            (ModelState::Logistic(m), summary)
        }
        LearnerParams::RandomForest(p) => {
            let m = forest::fit(p, x, labels, spec.seed)?;
            let summary = TrainingSummary {
                iterations: m.trees.len(),
                converged: true,
                ..Default::default()
            };
            (ModelState::RandomForest(m), summary)
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        n_features: x.n_cols(),
        state,
        summary,
    })
}

pub fn predict_proba(m: &TrainedModel, rows: &FeatureMatrix) -> Result<Vec<f64>> {
    m.predict_proba(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl GridAxis {
    pub fn new(name: &str, values: &[f64]) -> Self {
        GridAxis {
            name: name.to_string(),
            values: values.to_vec(),
        }
    }
}

/// Hyperparameter axes; points enumerate in odometer order with the last
/// axis varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HyperGrid {
    pub axes: Vec<GridAxis>,
}

impl HyperGrid {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        HyperGrid { axes }
    }

    pub fn points(&self) -> Result<Vec<Vec<(String, f64)>>> {
        if self.axes.is_empty() || self.axes.iter().any(|a| a.values.is_empty()) {
            return Err(Error::EmptyGrid);
        }
        let mut out: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    axis.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push((axis.name.clone(), v));
                        p
                    })
                })
                .collect();
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub point: Vec<(String, f64)>,
    pub params: LearnerParams,
    pub fold_kappas: Vec<f64>,
    pub mean_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: LearnerSpec,
    pub best_index: usize,
    pub table: Vec<GridCell>,
}

/// Evaluate every grid point with stratified k-fold CV (mean Cohen's
/// Kappa at the 0.5 threshold). Ties go to the earliest point.
pub fn grid_search(
    base: &LearnerParams,
    grid: &HyperGrid,
    d: &Dataset,
    k: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    let points = grid.points()?;
    let folds = stratified_kfold(d, k, seed)?;
    let candidates: Vec<(Vec<(String, f64)>, LearnerParams)> = points
        .into_iter()
        .map(|point| {
            let mut params = base.clone();
            for (name, v) in &point {
                params.set(name, *v)?;
            }
            params.validate(d.n_features())?;
            Ok((point, params))
        })
        .collect::<Result<_>>()?;

    let table: Vec<GridCell> = candidates
        .into_par_iter()
        .map(|(point, params)| {
            let spec = LearnerSpec::new(params.clone(), seed);
            let fold_kappas = folds
                .iter()
                .map(|f| {
                    let m = train(&spec, &f.train)?;
                    let preds = m.predict(f.test.features())?;
                    Ok(threshold_metrics(&confusion(&preds, f.test.labels())?).kappa)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_kappa = fold_kappas.iter().sum::<f64>() / fold_kappas.len() as f64;
            Ok(GridCell {
                point,
                params,
                fold_kappas,
                mean_kappa,
            })
        })
        .collect::<Result<_>>()?;

    let mut best_index = 0;
    for (i, cell) in table.iter().enumerate() {
        if cell.mean_kappa > table[best_index].mean_kappa {
            best_index = i;
        }
    }
    Ok(GridSearchResult {
        best: LearnerSpec::new(table[best_index].params.clone(), seed),
        best_index,
        table,
    })
}
