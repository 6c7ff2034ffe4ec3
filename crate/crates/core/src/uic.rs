//! Bias profiles (correlation of each metric with the minority proportion)
//! and the UIC score: a sum of metrics weighted by a Gaussian of their
//! correlation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::concordance::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricVector};
use crate::stats::pearson;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for GaussianParams {
    fn default() -> Self {
        GaussianParams { a: 1.0, b: 0.0, c: 0.25 }
    }
}

impl GaussianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.c > 0.0 && self.b.is_finite() && self.a.is_finite() && self.c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gaussian needs a > 0 and c > 0, got a = {}, c = {}",
                self.a, self.c
            )));
        }
        Ok(())
    }
}

/// `a * exp(-(r - b)^2 / (2 c^2))`; an undefined correlation weighs `a`.
pub fn gaussian_weight(r: Option<f64>, g: &GaussianParams) -> f64 {
    match r {
        None => g.a,
        Some(r) => g.a * (-(r - g.b).powi(2) / (2.0 * g.c * g.c)).exp(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasProfile {
    pub techniques: Vec<String>,
    pub metrics: Vec<Metric>,
    /// Minority proportion of every variant, the original dataset first.
    pub p_min_vector: Vec<f64>,
    /// `r[technique][metric]`; `None` where a sequence has zero variance.
    pub r: Vec<Vec<Option<f64>>>,
    /// Fold-mean metrics, `means[technique][variant]`.
    pub means: Vec<Vec<MetricVector>>,
}

impl BiasProfile {
    pub fn technique_index(&self, name: &str) -> Option<usize> {
        self.techniques.iter().position(|t| t == name)
    }

    /// Series of `metric` across variants for one technique.
    pub fn series(&self, t: usize, metric: Metric) -> Vec<f64> {
        self.means[t].iter().map(|m| m.get(metric)).collect()
    }

    /// Heatmap-ready CSV: one row per technique, one column per metric;
    /// undefined correlations are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("technique");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for (t, row) in self.techniques.iter().zip(&self.r) {
            out.push_str(t);
            for r in row {
                out.push(',');
                if let Some(r) = r {
                    out.push_str(&format!("{r:.6}"));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Correlate fold-mean metrics with `p_min_vector`, per technique. Records
/// must cover every variant `0..p_min_vector.len()` for every technique.
pub fn bias_profile(records: &[RunRecord], p_min_vector: &[f64], metrics: &[Metric]) -> Result<BiasProfile> {
    let techniques: Vec<String> = records
        .iter()
        .map(|r| r.technique.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n_var = p_min_vector.len();
    let mut grouped: BTreeMap<(&str, usize), Vec<MetricVector>> = BTreeMap::new();
    for r in records {
        if r.variant >= n_var {
            return Err(Error::IncompleteGrid(format!(
                "variant {} outside the {n_var}-point grid",
                r.variant
            )));
        }
        grouped
            .entry((r.technique.as_str(), r.variant))
            .or_default()
            .push(r.metrics.clone());
    }
    let mut means = Vec::with_capacity(techniques.len());
    let mut r = Vec::with_capacity(techniques.len());
    for t in &techniques {
        let per_variant = (0..n_var)
            .map(|v| {
                grouped
                    .get(&(t.as_str(), v))
                    .map(|fs| MetricVector::mean(fs))
                    .ok_or_else(|| Error::IncompleteGrid(format!("no records for `{t}` at variant {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let row = metrics
            .iter()
            .map(|&m| {
                let ys: Vec<f64> = per_variant.iter().map(|mv| mv.get(m)).collect();
                pearson(p_min_vector, &ys)
            })
            .collect::<Result<Vec<_>>>()?;
        means.push(per_variant);
        r.push(row);
    }
    Ok(BiasProfile {
        techniques,
        metrics: metrics.to_vec(),
        p_min_vector: p_min_vector.to_vec(),
        r,
        means,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasDistance {
    pub distance: f64,
    /// Entries left out because the correlation was undefined.
    pub undefined: usize,
}

/// Euclidean norm of the defined entries.
pub fn bias_distance(rs: &[Option<f64>]) -> BiasDistance {
    BiasDistance {
        distance: rs.iter().flatten().map(|r| r * r).sum::<f64>().sqrt(),
        undefined: rs.iter().filter(|r| r.is_none()).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueUic {
    pub weights: BTreeMap<String, f64>,
    pub correlations: BTreeMap<String, Option<f64>>,
    /// Metrics on the original dataset.
    pub metrics: BTreeMap<String, f64>,
    pub uic: f64,
    /// UIC recomputed at every variant with the same weights, correlated
    /// with the minority proportion.
    pub uic_correlation: Option<f64>,
    /// Correlation of the plain average of the metrics.
    pub mean_correlation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UicReport {
    pub gaussian: GaussianParams,
    pub techniques: BTreeMap<String, TechniqueUic>,
    /// Bias distance per metric over techniques, plus `uic` and `mean`.
    pub distances: BTreeMap<String, BiasDistance>,
    pub winner: String,
}

/// UIC per technique from its weights and its metrics on the original
/// dataset (`original[t]` aligned with `profile.techniques`). The winner is
/// the first technique with the highest UIC.
pub fn uic_score(profile: &BiasProfile, original: &[MetricVector], g: &GaussianParams) -> Result<UicReport> {
    g.validate()?;
    if original.len() != profile.techniques.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} techniques in the profile, {} metric vectors",
            profile.techniques.len(),
            original.len()
        )));
    }
    if profile.techniques.is_empty() {
        return Err(Error::DimensionMismatch("no techniques".into()));
    }
    let mut techniques = BTreeMap::new();
    let mut uic_rs = Vec::new();
    let mut mean_rs = Vec::new();
    let mut winner: Option<(f64, &str)> = None;
    for (t, name) in profile.techniques.iter().enumerate() {
        let w: Vec<f64> = profile.r[t].iter().map(|&r| gaussian_weight(r, g)).collect();
        let uic_at = |mv: &MetricVector| -> f64 {
            profile.metrics.iter().zip(&w).map(|(&m, w)| w * mv.get(m)).sum()
        };
        let mean_at =
            |mv: &MetricVector| -> f64 { profile.metrics.iter().map(|&m| mv.get(m)).sum::<f64>() / profile.metrics.len() as f64 };
        let uic = uic_at(&original[t]);
        let uic_series: Vec<f64> = profile.means[t].iter().map(uic_at).collect();
        let mean_series: Vec<f64> = profile.means[t].iter().map(mean_at).collect();
        let uic_correlation = pearson(&profile.p_min_vector, &uic_series)?;
        let mean_correlation = pearson(&profile.p_min_vector, &mean_series)?;
        uic_rs.push(uic_correlation);
        mean_rs.push(mean_correlation);
        if winner.map_or(true, |(best, _)| uic > best) {
            winner = Some((uic, name));
        }
        let names = profile.metrics.iter().map(|m| m.name().to_string());
        techniques.insert(
            name.clone(),
            TechniqueUic {
                weights: names.clone().zip(w.iter().copied()).collect(),
                correlations: names.clone().zip(profile.r[t].iter().copied()).collect(),
                metrics: names.zip(profile.metrics.iter().map(|&m| original[t].get(m))).collect(),
                uic,
                uic_correlation,
                mean_correlation,
            },
        );
    }
    let mut distances = BTreeMap::new();
    for (k, m) in profile.metrics.iter().enumerate() {
        let col: Vec<Option<f64>> = profile.r.iter().map(|row| row[k]).collect();
        distances.insert(m.name().to_string(), bias_distance(&col));
    }
    distances.insert("uic".into(), bias_distance(&uic_rs));
    distances.insert("mean".into(), bias_distance(&mean_rs));
    Ok(UicReport {
        gaussian: *g,
        techniques,
        distances,
        winner: winner.expect("non-empty").1.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn weight_examples() {
        let g = GaussianParams::default();
        assert_eq!(gaussian_weight(Some(0.0), &g), 1.0);
        close(gaussian_weight(Some(0.5), &g), (-2.0f64).exp(), 1e-12);
        let narrow = GaussianParams { c: 0.15, ..g };
        let w = gaussian_weight(Some(1.0), &narrow);
        assert!(w < 1e-9 && w > 0.0);
        assert_eq!(gaussian_weight(None, &g), 1.0);
        assert!(gaussian_weight(Some(0.6), &narrow) < gaussian_weight(Some(0.6), &g));
    }

    fn record(t: &str, variant: usize, fold: usize, value: f64) -> RunRecord {
        let mv = MetricVector {
            acc: value,
            kappa: 0.3,
            roc_auc: Some(1.0 - value),
            ..Default::default()
        };
        RunRecord {
            variant,
            p_min: 0.0,
            technique: t.into(),
            fold,
            metrics: mv,
        }
    }

    #[test]
    fn profile_examples() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let mut recs = Vec::new();
        for (v, &pv) in p.iter().enumerate() {
            // fold means equal pv
            recs.push(record("a", v, 0, pv - 0.01));
            recs.push(record("a", v, 1, pv + 0.01));
        }
        let prof = bias_profile(&recs, &p, &[Metric::Acc, Metric::Kappa, Metric::RocAuc]).unwrap();
        close(prof.r[0][0].unwrap(), 1.0, 1e-12);
        assert_eq!(prof.r[0][1], None);
        close(prof.r[0][2].unwrap(), -1.0, 1e-12);

        recs.pop();
        recs.pop();
        assert!(matches!(
            bias_profile(&recs, &p, &[Metric::Acc]),
            Err(Error::IncompleteGrid(_))
        ));
    }

    fn profile_with(r: Vec<Vec<Option<f64>>>, metrics: Vec<Metric>) -> BiasProfile {
        let n_t = r.len();
        BiasProfile {
            techniques: (0..n_t).map(|i| format!("t{i}")).collect(),
            metrics,
            p_min_vector: vec![0.1, 0.2, 0.3],
            r,
            means: vec![vec![MetricVector::default(); 3]; n_t],
        }
    }

    fn uniform(v: f64) -> MetricVector {
        MetricVector {
            acc: v,
            sens: v,
            spec: v,
            prec: v,
            recall: v,
            fpr: v,
            f1: v,
            kappa: v,
            mcc: v,
            bal_acc: v,
            gmean: v,
            roc_auc: Some(v),
            pr_auc: Some(v),
            degenerate: Default::default(),
        }
    }

    #[test]
    fn uic_examples() {
        let g = GaussianParams::default();
        let prof = profile_with(vec![vec![Some(0.0); 8]], Metric::UIC_SET.to_vec());
        let rep = uic_score(&prof, &[uniform(0.5)], &g).unwrap();
        close(rep.techniques["t0"].uic, 4.0, 1e-12);

        // weights (1, ~0) on metrics (0.9, 0.1)
        let prof = profile_with(vec![vec![Some(0.0), Some(1.0)]], vec![Metric::Acc, Metric::Kappa]);
        let mv = MetricVector {
            acc: 0.9,
            kappa: 0.1,
            ..Default::default()
        };
        let narrow = GaussianParams { c: 0.05, ..g };
        close(uic_score(&prof, &[mv], &narrow).unwrap().techniques["t0"].uic, 0.9, 1e-12);

        let prof = profile_with(vec![vec![Some(1.0); 8]], Metric::UIC_SET.to_vec());
        let c15 = GaussianParams { c: 0.15, ..g };
        assert!(uic_score(&prof, &[uniform(0.9)], &c15).unwrap().techniques["t0"].uic < 1e-8);
    }

    #[test]
    fn winner_is_scale_invariant() {
        let g = GaussianParams::default();
        let prof = profile_with(vec![vec![Some(0.1); 8], vec![Some(0.2); 8]], Metric::UIC_SET.to_vec());
        let rep = uic_score(&prof, &[uniform(0.6), uniform(0.5)], &g).unwrap();
        let scaled = uic_score(&prof, &[uniform(0.3), uniform(0.25)], &g).unwrap();
        assert_eq!(rep.winner, "t0");
        assert_eq!(rep.winner, scaled.winner);
        assert!(uic_score(&prof, &[uniform(0.6)], &g).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(bias_distance(&[Some(0.0), Some(0.0)]).distance, 0.0);
        close(bias_distance(&[Some(0.6), Some(0.8)]).distance, 1.0, 1e-15);
        let d = bias_distance(&[Some(0.6), None, Some(-0.8)]);
        close(d.distance, 1.0, 1e-15);
        assert_eq!(d.undefined, 1);
    }
}
