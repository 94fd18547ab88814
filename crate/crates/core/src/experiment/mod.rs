//! End-to-end experiment runner: data, hold-out split, recommenders,
//! evaluation and report files.

mod bench;
mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{load_dataset, split_holdout, DataFormat, Dataset, Side, SyntheticConfig};
use crate::error::{Error, Result};
use crate::fairness::{GroupAttr, GroupLabels, ObjectiveWeights};
use crate::metrics::{
    bias_reduction_report, evaluate, BiasFitParams, BiasReduction, EvaluationContext, MetricsReport,
};
use crate::recommenders::{
    recommend_cf, recommend_fair_match, recommend_gale_shapley, recommend_recon, Algorithm,
    CfParams, FairMatchParams, Recommendations,
};
use crate::similarity::Scorer;

pub use bench::{log_log_slope, scaling_benchmark, BenchConfig, BenchReport, BenchRow};
pub use report::{emit_report, render_csv, render_markdown, render_report, ReportFormat};

/// Where the interactions come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated market; its seed is replaced by the experiment seed.
    Synthetic(SyntheticConfig),
    Files {
        profiles: PathBuf,
        interactions: PathBuf,
        #[serde(default)]
        format: Option<DataFormat>,
    },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticConfig::default())
    }
}

/// FAIR-MATCH settings; the list length comes from [`ExperimentConfig::k`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FairMatchSection {
    pub epsilon: f64,
    pub weights: ObjectiveWeights,
    pub pool_factor: usize,
    pub quality_floor: f64,
    pub nsw: bool,
    pub max_iters: Option<usize>,
    pub scorer: Scorer,
    pub group_attr: GroupAttr,
}

impl Default for FairMatchSection {
    fn default() -> Self {
        let p = FairMatchParams::default();
        FairMatchSection {
            epsilon: p.epsilon,
            weights: p.weights,
            pool_factor: p.pool_factor,
            quality_floor: p.quality_floor,
            nsw: p.nsw,
            max_iters: p.max_iters,
            scorer: p.scorer,
            group_attr: GroupAttr::default(),
        }
    }
}

impl FairMatchSection {
    pub fn params(&self, k: usize) -> FairMatchParams {
        FairMatchParams {
            k,
            epsilon: self.epsilon,
            weights: self.weights,
            pool_factor: self.pool_factor,
            quality_floor: self.quality_floor,
            nsw: self.nsw,
            max_iters: self.max_iters,
            scorer: self.scorer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfSection {
    pub neighbours: usize,
}

impl Default for CfSection {
    fn default() -> Self {
        CfSection {
            neighbours: CfParams::default().neighbours,
        }
    }
}

fn default_algorithms() -> Vec<Algorithm> {
    Algorithm::ALL.to_vec()
}

fn default_k() -> usize {
    10
}

fn default_split() -> f64 {
    0.2
}

fn default_side() -> Side {
    Side::A
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

/// Every knob of one run. All defaults are filled in and echoed into the
/// report, so a report alone reproduces its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_split")]
    pub split_fraction: f64,
    /// Side whose lists count for precision, recall and NDCG.
    #[serde(default = "default_side")]
    pub precision_side: Side,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub dataset: DatasetSource,
    #[serde(default)]
    pub fair_match: FairMatchSection,
    #[serde(default)]
    pub cf: CfSection,
    #[serde(default)]
    pub bias: BiasFitParams,
}

impl ExperimentConfig {
    pub fn new(seed: u64) -> Self {
        ExperimentConfig {
            seed,
            algorithms: default_algorithms(),
            k: default_k(),
            split_fraction: default_split(),
            precision_side: default_side(),
            output_dir: default_output(),
            dataset: DatasetSource::default(),
            fair_match: FairMatchSection::default(),
            cf: CfSection::default(),
            bias: BiasFitParams::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always TOML-representable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::config("select at least one algorithm"));
        }
        let mut seen = self.algorithms.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::config("algorithm listed twice"));
        }
        if self.k == 0 {
            return Err(Error::config("K must be at least 1"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::config(format!(
                "split_fraction {} outside (0, 1)",
                self.split_fraction
            )));
        }
        if !(self.bias.step > 0.0 && self.bias.step.is_finite()) {
            return Err(Error::config("bias.step must be positive"));
        }
        if let DatasetSource::Synthetic(s) = &self.dataset {
            s.validate()?;
        }
        self.fair_match.params(self.k).validate()
    }

    /// Builds or loads the dataset this config describes.
    pub fn dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::Synthetic(s) => Dataset::synthetic(&SyntheticConfig {
                seed: self.seed,
                ..s.clone()
            }),
            DatasetSource::Files {
                profiles,
                interactions,
                format,
            } => load_dataset(
                profiles,
                interactions,
                format.unwrap_or_else(|| DataFormat::from_path(profiles)),
            ),
        }
    }
}

/// Wall-clock seconds per phase, kept apart from the deterministic report.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Timings {
    pub load_secs: f64,
    pub split_secs: f64,
    pub recommend_secs: BTreeMap<Algorithm, f64>,
    pub evaluate_secs: BTreeMap<Algorithm, f64>,
    pub total_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifact {
    pub config: ExperimentConfig,
    pub dataset_digest: String,
    pub users: usize,
    pub train_edges: usize,
    pub heldout_matches: usize,
    pub reports: Vec<MetricsReport>,
    /// FAIR-MATCH against CF, when both ran.
    pub bias_reduction: Option<BiasReduction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunArtifact {
    pub fn report(&self, algorithm: Algorithm) -> Option<&MetricsReport> {
        self.reports.iter().find(|r| r.algorithm == algorithm)
    }

    /// The artifact with timings stripped; byte-stable across reruns.
    pub fn without_timings(&self) -> RunArtifact {
        RunArtifact {
            timings: None,
            ..self.clone()
        }
    }
}

/// Runs one algorithm on the training graph.
pub fn recommend(
    algorithm: Algorithm,
    dataset: &Dataset,
    train: &crate::dataset::InteractionGraph,
    labels: &GroupLabels,
    config: &ExperimentConfig,
) -> Result<Recommendations> {
    match algorithm {
        Algorithm::FairMatch => {
            Ok(
                recommend_fair_match(train, labels, &config.fair_match.params(config.k))?
                    .recommendations,
            )
        }
        Algorithm::Cf => recommend_cf(
            train,
            &CfParams {
                k: config.k,
                neighbours: config.cf.neighbours,
            },
        ),
        Algorithm::Recon => recommend_recon(dataset.profiles(), train, config.k),
        Algorithm::GaleShapley => Ok(recommend_gale_shapley(train, config.k)?.0),
    }
}

/// Generate or load, split, recommend with each algorithm, and evaluate.
/// Nothing is written to disk.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifact> {
    config.validate()?;
    let start = Instant::now();
    let mut timings = Timings::default();

    let t = Instant::now();
    let dataset = config.dataset()?;
    let graph = dataset.graph();
    let labels = GroupLabels::from_dataset(&dataset, config.fair_match.group_attr)?;
    timings.load_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let split = split_holdout(&graph, config.split_fraction, config.seed)?;
    timings.split_secs = t.elapsed().as_secs_f64();

    let ctx = EvaluationContext {
        graph: &split.train,
        heldout: &split.heldout,
        labels: &labels,
        profiles: dataset.profiles(),
        side: config.precision_side,
        bias: config.bias,
        seed: config.seed,
    };
    let mut reports = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let t = Instant::now();
        let recs = recommend(algorithm, &dataset, &split.train, &labels, config)?;
        timings
            .recommend_secs
            .insert(algorithm, t.elapsed().as_secs_f64());
        let t = Instant::now();
        reports.push(evaluate(algorithm, &recs, &ctx)?);
        timings
            .evaluate_secs
            .insert(algorithm, t.elapsed().as_secs_f64());
    }
    timings.total_secs = start.elapsed().as_secs_f64();

    let find = |a: Algorithm| reports.iter().find(|r| r.algorithm == a);
    let bias_reduction = match (find(Algorithm::Cf), find(Algorithm::FairMatch)) {
        (Some(base), Some(treated)) => Some(bias_reduction_report(base, treated)),
        _ => None,
    };
    Ok(RunArtifact {
        config: config.clone(),
        dataset_digest: dataset.digest(),
        users: dataset.len(),
        train_edges: split.train.edge_count(),
        heldout_matches: split.heldout.len(),
        reports,
        bias_reduction,
        timings: Some(timings),
    })
}

/// Writes `report.json` (no timings), `report.csv`, `report.md` and
/// `timings.json` under `dir`.
pub fn write_artifacts(artifact: &RunArtifact, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stable = artifact.without_timings();
    let mut written = Vec::new();
    for (format, name) in [
        (ReportFormat::Json, "report.json"),
        (ReportFormat::Csv, "report.csv"),
        (ReportFormat::Markdown, "report.md"),
    ] {
        let path = dir.join(name);
        emit_report(&stable, format, &path)?;
        written.push(path);
    }
    let path = dir.join("timings.json");
    let text = serde_json::to_string_pretty(&artifact.timings)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(seed);
        cfg.dataset = DatasetSource::Synthetic(SyntheticConfig {
            n: 60,
            m: 60,
            mean_contacts: 6.0,
            ..SyntheticConfig::default()
        });
        cfg
    }

    #[test]
    fn minimal_toml_fills_defaults() {
        let cfg = ExperimentConfig::from_toml_str("seed = 3\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::new(3));
        let round = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn toml_sections() {
        let text = r#"
            seed = 9
            algorithms = ["cf", "fair_match"]
            k = 5
            [dataset]
            source = "synthetic"
            n = 50
            m = 40
            [fair_match]
            epsilon = 0.2
            group_attr = { kind = "attribute", index = 1 }
            weights = { quality = 1.0, diversity = 0.0, fairness = 0.0 }
        "#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.fair_match.group_attr, GroupAttr::Attribute(1));
        assert!(matches!(&cfg.dataset, DatasetSource::Synthetic(s) if s.n == 50 && s.m == 40));
        cfg.validate().unwrap();
    }

    #[test]
    fn config_errors() {
        assert!(
            ExperimentConfig::from_toml_str("k = 3\n").is_err(),
            "seed is mandatory"
        );
        assert!(ExperimentConfig::from_toml_str("seed = 1\nbogus = 2\n").is_err());
        let mut cfg = ExperimentConfig::new(1);
        cfg.algorithms.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(1);
        cfg.k = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(1);
        cfg.algorithms = vec![Algorithm::Cf, Algorithm::Cf];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_algorithm_single_row() {
        let mut cfg = small(5);
        cfg.algorithms = vec![Algorithm::Cf];
        let art = run_experiment(&cfg).unwrap();
        assert_eq!(art.reports.len(), 1);
        assert_eq!(art.reports[0].algorithm, Algorithm::Cf);
        assert!(art.bias_reduction.is_none());
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = small(11);
        let a = run_experiment(&cfg).unwrap().without_timings();
        let b = run_experiment(&cfg).unwrap().without_timings();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.reports.len(), 4);
        assert!(a.bias_reduction.is_some());
    }
}
