//! End-to-end experiment: proportion grid, re-proportioned variants,
//! (technique x learner x fold) cells, bias profile, UIC report and
//! concordance outputs.
//!
//! Every cell is seeded from the master seed and its key, so results do not
//! depend on execution order or the number of worker threads.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::concordance::{agreement_matrix, concordance_svg, discordance_ratio, AgreementMatrix, Discordance, RunRecord};
use crate::dataset::{load_csv, proportion_grid, resample_to_proportion, stratified_kfold, Dataset};
use crate::error::{Error, Result};
use crate::ipip::{predict_ipip, train_ipip, IpipConfig};
use crate::learners::{grid_search, train, Classifier, HyperGrid, LearnerKind, LearnerSpec, TrainedModel};
use crate::metrics::{evaluate, Metric, ScoredPredictions};
use crate::resampling::{downsample, smote, under_bagging, upsample, IaaKind};
use crate::seed;
use crate::uic::{bias_profile, uic_score, BiasProfile, GaussianParams, UicReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub target: String,
    #[serde(default)]
    pub positive_label: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// Overrides of the kind's default hyperparameters.
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// When present, hyperparameters are chosen by mean CV Kappa on the
    /// original dataset before any cell runs.
    #[serde(default)]
    pub grid: Option<HyperGrid>,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerConfig {
            kind,
            params: BTreeMap::new(),
            grid: None,
        }
    }

    pub fn spec(&self) -> Result<LearnerSpec> {
        let mut params = self.kind.default_params();
        for (k, v) in &self.params {
            params.set(k, *v)?;
        }
        Ok(LearnerSpec::new(params, 0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    #[serde(default = "default_techniques")]
    pub techniques: Vec<IaaKind>,
    #[serde(default = "default_learners")]
    pub learners: Vec<LearnerConfig>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub gaussian: GaussianParams,
    #[serde(default)]
    pub ipip: IpipConfig,
    #[serde(default = "default_smote_k")]
    pub smote_k: usize,
    #[serde(default = "default_n_bags")]
    pub n_bags: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; `None` uses every logical CPU.
    #[serde(default)]
    pub jobs: Option<usize>,
}

fn default_techniques() -> Vec<IaaKind> {
    vec![
        IaaKind::None,
        IaaKind::Upsample,
        IaaKind::Downsample,
        IaaKind::Smote,
        IaaKind::UnderBagging,
        IaaKind::Ipip,
    ]
}

fn default_learners() -> Vec<LearnerConfig> {
    vec![
        LearnerConfig::new(LearnerKind::Logistic),
        LearnerConfig::new(LearnerKind::RandomForest),
    ]
}

fn default_n() -> usize {
    6
}

fn default_folds() -> usize {
    5
}

fn default_smote_k() -> usize {
    5
}

fn default_n_bags() -> usize {
    10
}

fn default_out() -> PathBuf {
    PathBuf::from("film_out")
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetConfig) -> Self {
        ExperimentConfig {
            dataset,
            techniques: default_techniques(),
            learners: default_learners(),
            n: default_n(),
            folds: default_folds(),
            gaussian: GaussianParams::default(),
            ipip: IpipConfig::default(),
            smote_k: default_smote_k(),
            n_bags: default_n_bags(),
            seed: 0,
            out: default_out(),
            jobs: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }

    /// Checks everything that can be checked before the data is read.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.techniques.is_empty() || self.learners.is_empty() {
            return bad("at least one technique and one learner are required".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.techniques.iter().all(|t| seen.insert(*t)) {
            return bad("duplicate technique".into());
        }
        let mut seen = std::collections::BTreeSet::new();
        if !self.learners.iter().all(|l| seen.insert(l.kind.name())) {
            return bad("duplicate learner kind".into());
        }
        if self.n < 6 || self.n % 2 != 0 {
            return Err(Error::BadN(self.n));
        }
        if self.folds < 2 {
            return bad(format!("folds must be >= 2, got {}", self.folds));
        }
        if self.smote_k == 0 || self.n_bags == 0 {
            return bad("smote_k and n_bags must be >= 1".into());
        }
        if self.jobs == Some(0) {
            return bad("jobs must be >= 1".into());
        }
        if !self.dataset.delimiter.is_ascii() {
            return bad("delimiter must be a single ASCII character".into());
        }
        self.gaussian.validate()?;
        self.ipip.validate()?;
        for l in &self.learners {
            l.spec()?;
            if let Some(g) = &l.grid {
                g.points()?;
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON with the output directory and thread
    /// count blanked: neither affects any result.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.jobs = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantInfo {
    pub variant: usize,
    /// Requested proportion (`p_d` for the original dataset).
    pub target: f64,
    /// Minority proportion actually obtained.
    pub p_min: f64,
    pub rows: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    /// The fit failed numerically and a class-prior model stood in.
    PriorFallback,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub key: String,
    pub seed: u64,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub p_d: f64,
    pub variants: Vec<VariantInfo>,
    /// Hyperparameters used per learner after any search.
    pub learners: BTreeMap<String, LearnerSpec>,
    pub cells: Vec<CellEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerConcordance {
    pub matrix: AgreementMatrix,
    pub discordance: Discordance,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub manifest: Manifest,
    pub records: Vec<RunRecord>,
    /// Present only when every cell succeeded.
    pub reports: Option<Reports>,
}

impl ExperimentOutcome {
    pub fn failed_cells(&self) -> usize {
        self.manifest.cells.iter().filter(|c| c.status == CellStatus::Failed).count()
    }
}

#[derive(Debug, Clone)]
pub struct Reports {
    pub profile: BiasProfile,
    pub uic: UicReport,
    /// Keyed by learner name, plus `all` over every technique.
    pub concordance: BTreeMap<String, LearnerConcordance>,
}

/// Technique id of an IAA and learner pair, e.g. `smote_logistic`.
pub fn technique_id(iaa: IaaKind, learner: LearnerKind) -> String {
    format!("{}_{}", iaa.name(), learner.name())
}

/// Load the configured dataset and run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let (d, _) = load_csv(
        &cfg.dataset.path,
        &cfg.dataset.target,
        cfg.dataset.positive_label.as_deref(),
        cfg.dataset.delimiter as u8,
    )?;
    run_on_dataset(&d, cfg, Some(&cfg.out))
}

/// Run on an in-memory dataset. With `out`, files are written there and
/// finished cells found under `out/cells` are reused.
pub fn run_on_dataset(d: &Dataset, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        builder = builder.num_threads(j);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_inner(d, cfg, out))
}

struct Cell<'a> {
    key: String,
    seed: u64,
    variant: usize,
    p_min: f64,
    fold: usize,
    iaa: IaaKind,
    spec: &'a LearnerSpec,
    train: &'a Dataset,
    test: &'a Dataset,
}

#[derive(Serialize, Deserialize)]
struct CellMarker {
    config_hash: String,
    status: CellStatus,
    record: RunRecord,
}

fn run_inner(d: &Dataset, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    let master = cfg.seed;
    let hash = cfg.hash();
    let p_d = d.class_stats().p_min;
    let grid = proportion_grid(p_d, cfg.n)?;

    let mut variants = vec![d.clone()];
    let mut infos = vec![VariantInfo {
        variant: 0,
        target: p_d,
        p_min: p_d,
        rows: d.len(),
        seed: master,
    }];
    for (i, &target) in grid.targets.iter().enumerate() {
        let v = i + 1;
        let s = seed::derive_key(master, &format!("variant/{v}"));
        let dv = resample_to_proportion(d, target, s)?;
        infos.push(VariantInfo {
            variant: v,
            target,
            p_min: dv.class_stats().p_min,
            rows: dv.len(),
            seed: s,
        });
        variants.push(dv);
    }

    let mut specs: Vec<(LearnerKind, LearnerSpec)> = Vec::new();
    for l in &cfg.learners {
        let base = l.spec()?;
        let spec = match &l.grid {
            Some(g) => {
                let s = seed::derive_key(master, &format!("tune/{}", l.kind.name()));
                grid_search(&base.params, g, d, cfg.folds, s)?.best
            }
            None => base,
        };
        specs.push((l.kind, spec));
    }

    let folds = variants
        .iter()
        .enumerate()
        .map(|(v, dv)| stratified_kfold(dv, cfg.folds, seed::derive_key(master, &format!("folds/{v}"))))
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (v, fs) in folds.iter().enumerate() {
        for &iaa in &cfg.techniques {
            for (kind, spec) in &specs {
                for (f, split) in fs.iter().enumerate() {
                    let key = format!("v{v}/{}/{}/f{f}", iaa.name(), kind.name());
                    cells.push(Cell {
                        seed: seed::derive_key(master, &key),
                        key,
                        variant: v,
                        p_min: infos[v].p_min,
                        fold: f,
                        iaa,
                        spec,
                        train: &split.train,
                        test: &split.test,
                    });
                }
            }
        }
    }

    let marker_dir = out.map(|o| o.join("cells"));
    if let Some(dir) = &marker_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let results: Vec<(CellEntry, Option<RunRecord>)> = cells
        .par_iter()
        .map(|c| {
            let marker = marker_dir.as_ref().map(|dir| dir.join(format!("{}.json", c.key.replace('/', "__"))));
            if let Some(m) = marker.as_ref().and_then(|p| read_marker(p, &hash)) {
                return Ok((entry(c, m.status, None), Some(m.record)));
            }
            match run_cell(c, cfg) {
                Ok((record, status)) => {
                    if let Some(p) = &marker {
                        let m = CellMarker {
                            config_hash: hash.clone(),
                            status,
                            record: record.clone(),
                        };
                        let json = serde_json::to_string(&m)?;
                        fs::write(p, json).map_err(|e| Error::io(p, e))?;
                    }
                    Ok((entry(c, status, None), Some(record)))
                }
                Err(e) if e.is_validation() || matches!(e, Error::SingularFit(_) | Error::DegenerateData(_)) => {
                    Ok((entry(c, CellStatus::Failed, Some(e.to_string())), None))
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(results.len());
    let mut records = Vec::with_capacity(results.len());
    for (e, r) in results {
        entries.push(e);
        records.extend(r);
    }
    records.sort_by(|a, b| (a.variant, &a.technique, a.fold).cmp(&(b.variant, &b.technique, b.fold)));

    let manifest = Manifest {
        config_hash: hash,
        master_seed: master,
        config: cfg.clone(),
        p_d,
        variants: infos,
        learners: specs.iter().map(|(k, s)| (k.name().to_string(), s.clone())).collect(),
        cells: entries,
    };
    let failed = manifest.cells.iter().any(|c| c.status == CellStatus::Failed);
    let reports = if failed {
        None
    } else {
        Some(build_reports(&records, &manifest)?)
    };
    if let Some(dir) = out {
        write_json(&dir.join("records.json"), &records)?;
        write_json(&dir.join("manifest.json"), &manifest)?;
        if let Some(r) = &reports {
            write_reports(r, dir)?;
        }
    }
    Ok(ExperimentOutcome {
        manifest,
        records,
        reports,
    })
}

fn entry(c: &Cell<'_>, status: CellStatus, error: Option<String>) -> CellEntry {
    CellEntry {
        key: c.key.clone(),
        seed: c.seed,
        status,
        error,
    }
}

fn read_marker(path: &Path, hash: &str) -> Option<CellMarker> {
    let s = fs::read_to_string(path).ok()?;
    let m: CellMarker = serde_json::from_str(&s).ok()?;
    (m.config_hash == hash).then_some(m)
}

/// Train with `spec`, substituting a class-prior model if the fit breaks
/// down numerically.
fn train_or_prior(spec: &LearnerSpec, d: &Dataset) -> Result<(TrainedModel, CellStatus)> {
    match train(spec, d) {
        Ok(m) => Ok((m, CellStatus::Ok)),
        Err(Error::SingularFit(_)) => {
            let rate = d.n_positive() as f64 / d.len() as f64;
            Ok((TrainedModel::prior(spec.clone(), d.n_features(), rate), CellStatus::PriorFallback))
        }
        Err(e) => Err(e),
    }
}

fn run_cell(c: &Cell<'_>, cfg: &ExperimentConfig) -> Result<(RunRecord, CellStatus)> {
    let x = c.test.features();
    let train_seed = seed::derive(c.seed, 1);
    let data_seed = seed::derive(c.seed, 0);
    let spec = c.spec.with_seed(train_seed);
    let single = |d: &Dataset| -> Result<(Vec<f64>, Vec<crate::dataset::Label>, CellStatus)> {
        let (m, status) = train_or_prior(&spec, d)?;
        let p = m.predict_proba(x)?;
        let hard = m.predict(x)?;
        Ok((p, hard, status))
    };
    let (scores, hard, status) = match c.iaa {
        IaaKind::None => single(c.train)?,
        IaaKind::Upsample => single(&upsample(c.train, data_seed)?)?,
        IaaKind::Downsample => single(&downsample(c.train, data_seed)?)?,
        IaaKind::Smote => {
            let k = cfg.smote_k.min(c.train.n_positive().saturating_sub(1)).max(1);
            single(&smote(c.train, k, None, data_seed)?)?
        }
        IaaKind::UnderBagging => {
            let m = under_bagging(c.train, cfg.n_bags, &spec, c.seed)?;
            (m.predict_proba(x)?, m.predict(x)?, CellStatus::Ok)
        }
        IaaKind::Ipip => {
            let m = train_ipip(c.train, &spec, &cfg.ipip, c.seed)?;
            (m.predict_proba(x)?, predict_ipip(&m, x)?.labels, CellStatus::Ok)
        }
    };
    let sp = ScoredPredictions::new(scores, c.test.labels().to_vec())?;
    let metrics = evaluate(&sp, Some(&hard))?;
    let record = RunRecord {
        variant: c.variant,
        p_min: c.p_min,
        technique: technique_id(c.iaa, c.spec.kind()),
        fold: c.fold,
        metrics,
    };
    Ok((record, status))
}

/// Bias profile, UIC report and concordance matrices from complete records.
pub fn build_reports(records: &[RunRecord], manifest: &Manifest) -> Result<Reports> {
    let p_min_vector: Vec<f64> = manifest.variants.iter().map(|v| v.p_min).collect();
    let profile = bias_profile(records, &p_min_vector, &Metric::UIC_SET)?;
    let original: Vec<_> = profile.means.iter().map(|m| m[0].clone()).collect();
    let uic = uic_score(&profile, &original, &manifest.config.gaussian)?;
    let mut concordance = BTreeMap::new();
    for l in &manifest.config.learners {
        let suffix = format!("_{}", l.kind.name());
        let subset: Vec<RunRecord> = records.iter().filter(|r| r.technique.ends_with(&suffix)).cloned().collect();
        let matrix = agreement_matrix(&subset, &Metric::UIC_SET)?;
        let discordance = discordance_ratio(&matrix);
        concordance.insert(l.kind.name().to_string(), LearnerConcordance { matrix, discordance });
    }
    let matrix = agreement_matrix(records, &Metric::UIC_SET)?;
    let discordance = discordance_ratio(&matrix);
    concordance.insert("all".to_string(), LearnerConcordance { matrix, discordance });
    Ok(Reports {
        profile,
        uic,
        concordance,
    })
}

/// `uic_report.json`, `bias_profile.csv`, `concordance.json`,
/// `concordance_<learner>.svg` (and `concordance_all.svg`) and
/// `win_ratios.csv`.
pub fn write_reports(r: &Reports, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join("uic_report.json"), &r.uic)?;
    write_text(&dir.join("bias_profile.csv"), &r.profile.to_csv())?;
    write_json(&dir.join("concordance.json"), &r.concordance)?;
    let mut csv = String::from("learner,metric,technique,win_ratio\n");
    for (name, c) in &r.concordance {
        write_text(&dir.join(format!("concordance_{name}.svg")), &concordance_svg(&c.matrix))?;
        for line in c.matrix.win_ratios_csv().lines().skip(1) {
            csv.push_str(name);
            csv.push(',');
            csv.push_str(line);
            csv.push('\n');
        }
    }
    write_text(&dir.join("win_ratios.csv"), &csv)
}

/// Rebuild the reports of a finished run directory from its records and
/// manifest, optionally with different Gaussian parameters.
pub fn report_from_dir(dir: &Path, gaussian: Option<GaussianParams>) -> Result<Reports> {
    let records: Vec<RunRecord> = read_json(&dir.join("records.json"))?;
    let mut manifest: Manifest = read_json(&dir.join("manifest.json"))?;
    if let Some(g) = gaussian {
        manifest.config.gaussian = g;
    }
    build_reports(&records, &manifest)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&s)?)
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::two_gaussians;

    fn small_config(techniques: Vec<IaaKind>, learners: Vec<LearnerConfig>) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(DatasetConfig {
            path: PathBuf::from("unused.csv"),
            target: "class".into(),
            positive_label: None,
            delimiter: ',',
        });
        cfg.techniques = techniques;
        cfg.learners = learners;
        cfg.folds = 2;
        cfg.seed = 11;
        cfg.jobs = Some(1);
        cfg
    }

    #[test]
    fn cell_count_for_one_technique() {
        let d = two_gaussians(300, 0.15, 2, 1.5, 1).unwrap();
        let cfg = small_config(vec![IaaKind::None], vec![LearnerConfig::new(LearnerKind::Logistic)]);
        let out = run_on_dataset(&d, &cfg, None).unwrap();
        assert_eq!(out.manifest.cells.len(), 14);
        assert_eq!(out.records.len(), 14);
        assert_eq!(out.failed_cells(), 0);
        let reports = out.reports.unwrap();
        assert_eq!(reports.profile.p_min_vector.len(), 7);
        assert_eq!(reports.uic.winner, "none_logistic");
    }

    #[test]
    fn results_do_not_depend_on_threads() {
        let d = two_gaussians(240, 0.2, 2, 1.5, 2).unwrap();
        let forest = LearnerConfig {
            kind: LearnerKind::RandomForest,
            params: [("n_trees".to_string(), 5.0), ("max_depth".to_string(), 3.0)].into(),
            grid: None,
        };
        let mut cfg = small_config(
            vec![IaaKind::Upsample, IaaKind::UnderBagging],
            vec![LearnerConfig::new(LearnerKind::Logistic), forest],
        );
        cfg.n_bags = 3;
        let a = run_on_dataset(&d, &cfg, None).unwrap();
        cfg.jobs = Some(3);
        let b = run_on_dataset(&d, &cfg, None).unwrap();
        assert_eq!(
            serde_json::to_string(&a.records).unwrap(),
            serde_json::to_string(&b.records).unwrap()
        );
        assert_eq!(a.manifest.config_hash, b.manifest.config_hash);
    }

    #[test]
    fn balanced_data_is_rejected() {
        let d = two_gaussians(200, 0.45, 2, 1.0, 3).unwrap();
        let cfg = small_config(vec![IaaKind::None], vec![LearnerConfig::new(LearnerKind::Logistic)]);
        assert!(matches!(run_on_dataset(&d, &cfg, None), Err(Error::NotImbalanced(_))));
    }

    #[test]
    fn config_defaults_from_minimal_json() {
        let cfg = ExperimentConfig::from_json(r#"{"dataset": {"path": "d.csv", "target": "y"}}"#).unwrap();
        assert_eq!((cfg.n, cfg.folds, cfg.smote_k, cfg.n_bags), (6, 5, 5, 10));
        assert_eq!(cfg.techniques.len(), 6);
        assert_eq!(cfg.learners.len(), 2);
        assert!(ExperimentConfig::from_json(r#"{"dataset": {"path": "d.csv", "target": "y"}, "bogus": 1}"#).is_err());
        let mut odd = cfg.clone();
        odd.n = 7;
        assert!(matches!(odd.validate(), Err(Error::BadN(7))));
        let mut moved = cfg.clone();
        moved.out = PathBuf::from("elsewhere");
        moved.jobs = Some(4);
        assert_eq!(moved.hash(), cfg.hash());
    }
}
