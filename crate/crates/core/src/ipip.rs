//! IPIP: an ensemble of ensembles, each grown greedily on one balanced
//! subset of the training data. The number of subsets and the ensemble
//! size cap come from binomial coverage bounds on the minority class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{stratified_holdout, Dataset, FeatureMatrix, FeatureSchema, Label};
use crate::error::{Error, Result};
use crate::learners::{check_width, train, Classifier, LearnerSpec, TrainedModel};
use crate::metrics::{evaluate, Metric, ScoredPredictions};
use crate::resampling::balance_subsampling;
use crate::{persist, seed};

/// Smallest integer strictly above `ln(1 - alpha) / (draws * ln(1 - 1/n))`:
/// with that many subsets of `draws` uniform draws from `n` minority rows,
/// any given row is drawn at least once with probability at least `alpha`.
///
/// # Panics
/// If `alpha` is outside (0, 1), `n == 0` or `draws == 0`.
pub fn min_subsets(alpha: f64, n: usize, draws: usize) -> usize {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must be in (0,1), got {alpha}");
    assert!(n >= 1 && draws >= 1, "n and draws must be >= 1");
    let bound = (1.0 - alpha).ln() / (draws as f64 * (1.0 - 1.0 / n as f64).ln());
    bound.floor() as usize + 1
}

/// Maximum models per ensemble: [`min_subsets`] with the population equal
/// to the draw size.
pub fn max_ensemble_models(alpha: f64, n_min: usize) -> usize {
    min_subsets(alpha, n_min, n_min)
}

/// Failed attempts allowed while an ensemble holds `t` of at most `b_e`
/// models: `ceil((b_e - t) / 3)`.
pub fn tries_budget(b_e: usize, t: usize) -> usize {
    b_e.saturating_sub(t).div_ceil(3)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IpipConfig {
    pub alpha: f64,
    pub n_min_fraction: f64,
    pub p_subset: f64,
    pub p_inner: f64,
    pub p_holdout: f64,
    pub b_s_override: Option<usize>,
    pub b_e_override: Option<usize>,
    pub intra_vote_threshold: f64,
    pub inter_vote_threshold: f64,
    pub selection_metric: Metric,
}

impl Default for IpipConfig {
    fn default() -> Self {
        IpipConfig {
            alpha: 0.99,
            n_min_fraction: 0.75,
            p_subset: 0.45,
            p_inner: 0.5,
            p_holdout: 0.75,
            b_s_override: None,
            b_e_override: None,
            intra_vote_threshold: 0.75,
            inter_vote_threshold: 0.5,
            selection_metric: Metric::Kappa,
        }
    }
}

impl IpipConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(self.alpha) {
            return bad(format!("alpha must be in (0,1), got {}", self.alpha));
        }
        if !(self.n_min_fraction > 0.0 && self.n_min_fraction <= 1.0) {
            return bad(format!("n_min_fraction must be in (0,1], got {}", self.n_min_fraction));
        }
        for (name, p) in [("p_subset", self.p_subset), ("p_inner", self.p_inner)] {
            if !(p > 0.0 && p <= 0.5) {
                return bad(format!("{name} must be in (0,0.5], got {p}"));
            }
        }
        if !open(self.p_holdout) {
            return bad(format!("p_holdout must be in (0,1), got {}", self.p_holdout));
        }
        for (name, t) in [
            ("intra_vote_threshold", self.intra_vote_threshold),
            ("inter_vote_threshold", self.inter_vote_threshold),
        ] {
            if !(t > 0.0 && t <= 1.0) {
                return bad(format!("{name} must be in (0,1], got {t}"));
            }
        }
        if self.b_s_override == Some(0) || self.b_e_override == Some(0) {
            return bad("b_s/b_e overrides must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpipModel {
    pub ensembles: Vec<Vec<TrainedModel>>,
    /// Accepted performance per ensemble, one entry per member.
    pub histories: Vec<Vec<f64>>,
    pub config: IpipConfig,
    pub learner: LearnerSpec,
    pub b_s: usize,
    pub b_e: usize,
    pub n_min_draw: usize,
    pub n_features: usize,
    pub schema: FeatureSchema,
    pub positive_label: String,
    pub negative_label: String,
}

/// Rows each accepted member was trained on, parallel to
/// `IpipModel::ensembles`, plus the training side of the internal holdout.
#[derive(Debug, Clone)]
pub struct IpipTrace {
    pub holdout_train: Dataset,
    pub member_data: Vec<Vec<Dataset>>,
}

pub fn train_ipip(d: &Dataset, learner: &LearnerSpec, cfg: &IpipConfig, seed: u64) -> Result<IpipModel> {
    train_ipip_traced(d, learner, cfg, seed).map(|(m, _)| m)
}

/// Seeds: holdout `derive(seed, 0)`, subsets `derive(seed, 1)`, growth of
/// ensemble `i` from `derive(seed, 2 + i)`.
pub fn train_ipip_traced(
    d: &Dataset,
    learner: &LearnerSpec,
    cfg: &IpipConfig,
    seed: u64,
) -> Result<(IpipModel, IpipTrace)> {
    cfg.validate()?;
    if d.n_positive() < 2 {
        return Err(Error::TooFewMinority(d.n_positive()));
    }
    let split = stratified_holdout(d, cfg.p_holdout, seed::derive(seed, 0))?;
    let n_min = split.train.n_positive();
    let n_min_draw = ((cfg.n_min_fraction * n_min as f64).ceil() as usize).clamp(1, n_min);
    let b_s = cfg
        .b_s_override
        .unwrap_or_else(|| min_subsets(cfg.alpha, n_min, n_min_draw));
    let b_e = cfg
        .b_e_override
        .unwrap_or_else(|| max_ensemble_models(cfg.alpha, n_min_draw));
    let subsets = balance_subsampling(&split.train, cfg.p_subset, n_min_draw, b_s, seed::derive(seed, 1))?;
    let holdout = Holdout::new(&split.test);

    let grown = subsets
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            grow_ensemble(s, learner, cfg, b_e, n_min_draw, &holdout, seed::derive(seed, 2 + i as u64))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ensembles = Vec::with_capacity(b_s);
    let mut histories = Vec::with_capacity(b_s);
    let mut member_data = Vec::with_capacity(b_s);
    for g in grown {
        ensembles.push(g.models);
        histories.push(g.history);
        member_data.push(g.data);
    }
    let model = IpipModel {
        ensembles,
        histories,
        config: cfg.clone(),
        learner: learner.clone(),
        b_s,
        b_e,
        n_min_draw,
        n_features: d.n_features(),
        schema: d.schema().clone(),
        positive_label: d.positive_label().to_string(),
        negative_label: d.negative_label().to_string(),
    };
    let trace = IpipTrace {
        holdout_train: split.train,
        member_data,
    };
    Ok((model, trace))
}

struct Holdout<'a> {
    x: &'a FeatureMatrix,
    y: &'a [Label],
}

impl<'a> Holdout<'a> {
    fn new(d: &'a Dataset) -> Self {
        Holdout {
            x: d.features(),
            y: d.labels(),
        }
    }
}

struct Grown {
    models: Vec<TrainedModel>,
    history: Vec<f64>,
    data: Vec<Dataset>,
}

/// Per-member holdout outputs, cached so a candidate ensemble is scored
/// without re-predicting accepted members.
struct MemberOutput {
    proba: Vec<f64>,
    positive: Vec<bool>,
}

fn ensemble_performance(members: &[&MemberOutput], y: &[Label], cfg: &IpipConfig) -> Result<f64> {
    let k = members.len() as f64;
    let n = y.len();
    let mut score = vec![0.0; n];
    let mut hard = Vec::with_capacity(n);
    for r in 0..n {
        let mut neg = 0usize;
        for m in members {
            score[r] += m.proba[r];
            neg += usize::from(!m.positive[r]);
        }
        score[r] /= k;
        hard.push(intra_vote(neg, members.len(), cfg.intra_vote_threshold));
    }
    let sp = ScoredPredictions::new(score, y.to_vec())?;
    Ok(evaluate(&sp, Some(&hard))?.get(cfg.selection_metric))
}

fn intra_vote(negative_votes: usize, size: usize, threshold: f64) -> Label {
    if negative_votes as f64 / size as f64 >= threshold {
        Label::Negative
    } else {
        Label::Positive
    }
}

fn grow_ensemble(
    subset: &Dataset,
    learner: &LearnerSpec,
    cfg: &IpipConfig,
    b_e: usize,
    n_min_draw: usize,
    holdout: &Holdout<'_>,
    seed: u64,
) -> Result<Grown> {
    let mut accepted: Vec<(TrainedModel, MemberOutput, Dataset)> = Vec::new();
    let mut history = Vec::new();
    let mut first: Option<(TrainedModel, MemberOutput, Dataset, f64)> = None;
    let mut best = 0.0;
    let mut tries = 0;
    let mut draw = 0u64;
    while accepted.len() < b_e && tries < tries_budget(b_e, accepted.len()) {
        let s = seed::derive(seed, draw);
        draw += 1;
        let inner = balance_subsampling(subset, cfg.p_inner, n_min_draw, 1, seed::derive(s, 0))?
            .pop()
            .expect("one subset requested");
        let model = train(&learner.with_seed(seed::derive(s, 1)), &inner)?;
        let proba = model.predict_proba(holdout.x)?;
        let out = MemberOutput {
            positive: proba.iter().map(|&p| p >= 0.5).collect(),
            proba,
        };
        let perf = {
            let mut members: Vec<&MemberOutput> = accepted.iter().map(|a| &a.1).collect();
            members.push(&out);
            ensemble_performance(&members, holdout.y, cfg)?
        };
        if perf > best {
            best = perf;
            tries = 0;
            history.push(perf);
            accepted.push((model, out, inner));
        } else {
            tries += 1;
            if first.is_none() && accepted.is_empty() {
                first = Some((model, out, inner, perf));
            }
        }
    }
    if accepted.is_empty() {
        let (model, out, inner, perf) = first.expect("the loop runs at least once");
        history.push(perf);
        accepted.push((model, out, inner));
    }
    let (models, data) = accepted.into_iter().map(|(m, _, d)| (m, d)).unzip();
    Ok(Grown { models, history, data })
}

/// Labels with the vote tallies behind them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpipPrediction {
    pub labels: Vec<Label>,
    /// Ensembles voting for the majority (negative) class, per row.
    pub ensemble_votes: Vec<usize>,
    /// Per row, per ensemble: members voting for the majority class.
    pub model_votes: Vec<Vec<usize>>,
}

impl IpipModel {
    pub fn ensemble_sizes(&self) -> Vec<usize> {
        self.ensembles.iter().map(Vec::len).collect()
    }

    pub fn member_count(&self) -> usize {
        self.ensembles.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        persist::to_json("ipip_model", self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        persist::from_json("ipip_model", s)
    }
}

/// Two-level vote. An ensemble says negative iff at least
/// `intra_vote_threshold` of its members do; the final label is negative
/// iff at least `inter_vote_threshold` of the ensembles say negative.
pub fn predict_ipip(m: &IpipModel, rows: &FeatureMatrix) -> Result<IpipPrediction> {
    check_width(m.n_features, rows)?;
    let n = rows.n_rows();
    let mut model_votes = vec![Vec::with_capacity(m.ensembles.len()); n];
    for ens in &m.ensembles {
        let mut neg = vec![0usize; n];
        for member in ens {
            for (c, l) in neg.iter_mut().zip(member.predict(rows)?) {
                *c += usize::from(!l.is_positive());
            }
        }
        for (r, c) in neg.into_iter().enumerate() {
            model_votes[r].push(c);
        }
    }
    let cfg = &m.config;
    let mut labels = Vec::with_capacity(n);
    let mut ensemble_votes = Vec::with_capacity(n);
    for votes in &model_votes {
        let neg_ens = votes
            .iter()
            .zip(&m.ensembles)
            .filter(|(&v, e)| intra_vote(v, e.len(), cfg.intra_vote_threshold) == Label::Negative)
            .count();
        ensemble_votes.push(neg_ens);
        labels.push(intra_vote(neg_ens, m.ensembles.len(), cfg.inter_vote_threshold));
    }
    Ok(IpipPrediction {
        labels,
        ensemble_votes,
        model_votes,
    })
}

impl Classifier for IpipModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean over ensembles of the mean member probability.
    fn predict_proba(&self, rows: &FeatureMatrix) -> Result<Vec<f64>> {
        check_width(self.n_features, rows)?;
        let mut acc = vec![0.0; rows.n_rows()];
        for ens in &self.ensembles {
            let mut inner = vec![0.0; rows.n_rows()];
            for member in ens {
                for (a, p) in inner.iter_mut().zip(member.predict_proba(rows)?) {
                    *a += p;
                }
            }
            for (a, s) in acc.iter_mut().zip(inner) {
                *a += s / ens.len() as f64;
            }
        }
        let b = self.ensembles.len() as f64;
        Ok(acc.into_iter().map(|a| a / b).collect())
    }

    fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<Label>> {
        predict_ipip(self, rows).map(|p| p.labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LogisticParams;

    #[test]
    fn subset_bound_examples() {
        assert_eq!(min_subsets(0.99, 1000, 750), 7);
        assert_eq!(min_subsets(0.99, 100, 75), 7);
        assert_eq!(min_subsets(1e-9, 100, 75), 1);
    }

    #[test]
    fn ensemble_cap_examples() {
        // bound 4.602 for n_min = 750
        assert_eq!(max_ensemble_models(0.99, 750), 5);
        // bound 0.6897
        assert_eq!(max_ensemble_models(0.5, 100), 1);
        assert_eq!(max_ensemble_models(1e-9, 750), 1);
        assert_eq!(max_ensemble_models(0.99, 1), 1);
    }

    #[test]
    fn tries_budget_examples() {
        assert_eq!(tries_budget(10, 0), 4);
        assert_eq!(tries_budget(10, 10), 0);
        assert_eq!(tries_budget(9, 2), 3);
        for b in 1..30 {
            assert!((0..b).all(|t| tries_budget(b, t) >= tries_budget(b, t + 1)));
            assert_eq!(tries_budget(b, b), 0);
        }
    }

    fn constant(p: f64) -> TrainedModel {
        TrainedModel::prior(LearnerSpec::logistic(LogisticParams::default()), 1, p)
    }

    fn by_hand(ensembles: Vec<Vec<TrainedModel>>, intra: f64, inter: f64) -> IpipModel {
        let histories = ensembles.iter().map(|e| vec![0.0; e.len()]).collect();
        IpipModel {
            b_s: ensembles.len(),
            b_e: ensembles.iter().map(Vec::len).max().unwrap(),
            ensembles,
            histories,
            config: IpipConfig {
                intra_vote_threshold: intra,
                inter_vote_threshold: inter,
                ..Default::default()
            },
            learner: LearnerSpec::logistic(LogisticParams::default()),
            n_min_draw: 1,
            n_features: 1,
            schema: FeatureSchema::numeric(&["x0"]),
            positive_label: "1".into(),
            negative_label: "0".into(),
        }
    }

    fn one_row() -> FeatureMatrix {
        FeatureMatrix::from_rows(&[vec![0.0]]).unwrap()
    }

    #[test]
    fn voting_examples() {
        let m = by_hand(vec![vec![constant(0.9)]], 0.75, 0.5);
        assert_eq!(predict_ipip(&m, &one_row()).unwrap().labels, vec![Label::Positive]);

        let four = vec![constant(0.1), constant(0.2), constant(0.3), constant(0.9)];
        let m = by_hand(vec![four.clone()], 0.75, 0.5);
        let p = predict_ipip(&m, &one_row()).unwrap();
        assert_eq!((p.labels[0], p.model_votes[0].clone()), (Label::Negative, vec![3]));

        let split = vec![constant(0.1), constant(0.2), constant(0.8), constant(0.9)];
        let m = by_hand(vec![four.clone(), four, split], 0.75, 0.5);
        let p = predict_ipip(&m, &one_row()).unwrap();
        assert_eq!(p.ensemble_votes, vec![2]);
        assert_eq!(p.labels, vec![Label::Negative]);

        let m = by_hand(vec![vec![constant(0.1)], vec![constant(0.9)]], 0.5, 0.5);
        assert_eq!(predict_ipip(&m, &one_row()).unwrap().labels, vec![Label::Negative]);
    }

    #[test]
    fn width_is_checked() {
        let m = by_hand(vec![vec![constant(0.5)]], 0.75, 0.5);
        let x = FeatureMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(predict_ipip(&m, &x), Err(Error::WidthMismatch { .. })));
    }

    fn blobs(n_pos: usize, n_neg: usize, seed: u64) -> Dataset {
        use rand::Rng as _;
        let mut rng = seed::rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pos + n_neg {
            let pos = i < n_pos;
            let c = if pos { 1.5 } else { 0.0 };
            rows.push(vec![c + rng.gen_range(-1.0..1.0), c + rng.gen_range(-1.0..1.0)]);
            labels.push(if pos { Label::Positive } else { Label::Negative });
        }
        Dataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn forced_single_model() {
        let d = blobs(40, 160, 1);
        let cfg = IpipConfig {
            b_s_override: Some(1),
            b_e_override: Some(1),
            ..Default::default()
        };
        let m = train_ipip(&d, &LearnerSpec::logistic(Default::default()), &cfg, 5).unwrap();
        assert_eq!(m.ensemble_sizes(), vec![1]);
    }

    #[test]
    fn default_run_invariants() {
        let d = blobs(60, 240, 2);
        let spec = LearnerSpec::logistic(Default::default());
        let (m, trace) = train_ipip_traced(&d, &spec, &IpipConfig::default(), 9).unwrap();
        assert_eq!(m.ensembles.len(), m.b_s);
        for (e, h) in m.ensembles.iter().zip(&m.histories) {
            assert!(!e.is_empty() && e.len() <= m.b_e);
            assert_eq!(e.len(), h.len());
            assert!(h.windows(2).all(|w| w[1] > w[0]));
        }
        for data in trace.member_data.iter().flatten() {
            for (i, o) in data.origin().iter().enumerate() {
                assert_eq!(data.row(i), d.row(o.unwrap()));
            }
        }
        let again = train_ipip(&d, &spec, &IpipConfig::default(), 9).unwrap();
        assert_eq!(m.to_json().unwrap(), again.to_json().unwrap());
        let back = IpipModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.predict(d.features()).unwrap(), m.predict(d.features()).unwrap());
    }
}
