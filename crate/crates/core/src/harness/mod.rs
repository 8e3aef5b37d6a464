//! Multi-run experiments: feature selection, clustering, evaluation and
//! comparison of optimizer arms.

mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::baselines::{run_gwo, run_tlbo, GwoConfig, TlboConfig};
use crate::corpus::{build_vsm, load_corpus, reduce_vsm, CorpusFormat, VectorSpace, WeightMatrix};
use crate::error::{Error, Result};
use crate::hybrid::{run_document_fs, select_global, GlobalSelection, HybridConfig};
use crate::kmeans::{run_kmeans, DEFAULT_MAX_ITER};
use crate::metrics::{evaluate, MetricsReport};
use crate::optcore::{mix_seed, MutationPolicy};
use crate::stats::{run_test, Alternative, Method};

pub use report::{
    emit_reports, read_summary, write_comparison_csv, write_run_artifacts, write_runs_csv, write_summary,
    COMPARISON_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "tlbo-gwo")]
    TlboGwo,
    #[serde(rename = "tlbo")]
    Tlbo,
    #[serde(rename = "gwo")]
    Gwo,
    #[serde(rename = "none")]
    None,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::TlboGwo, Algorithm::Tlbo, Algorithm::Gwo, Algorithm::None];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::TlboGwo => "tlbo-gwo",
            Algorithm::Tlbo => "tlbo",
            Algorithm::Gwo => "gwo",
            Algorithm::None => "none",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown algorithm '{s}' (expected tlbo-gwo, tlbo, gwo or none)")))
    }
}

/// Optimizer settings shared by all arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub iter_max: usize,
    pub pop_size: usize,
    pub p_max: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            iter_max: 500,
            pop_size: 30,
            p_max: 0.08,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub algorithm: Algorithm,
    pub iter_max: usize,
    pub pop_size: usize,
    pub p_max: f64,
    /// Cluster count; the number of distinct labels when absent.
    pub k: Option<usize>,
    pub kmeans_max_iter: usize,
    pub runs: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let search = SearchParams::default();
        Self {
            corpus: PathBuf::new(),
            format: CorpusFormat::Dirs,
            algorithm: Algorithm::TlboGwo,
            iter_max: search.iter_max,
            pop_size: search.pop_size,
            p_max: search.p_max,
            k: None,
            kmeans_max_iter: DEFAULT_MAX_ITER,
            runs: 20,
            seed: 0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))
    }

    pub fn search(&self) -> SearchParams {
        SearchParams {
            iter_max: self.iter_max,
            pop_size: self.pop_size,
            p_max: self.p_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.algorithm != Algorithm::None {
            if self.pop_size < 3 {
                return Err(Error::invalid("population size must be at least 3"));
            }
            MutationPolicy::new(self.p_max)?;
        }
        Ok(())
    }

    /// Dataset name used in reports: the corpus file or directory stem.
    pub fn dataset_name(&self) -> String {
        self.corpus
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "corpus".to_string())
    }
}

/// Seed of run `run`. The XOR with the run index is passed through a mixer
/// so that the per-document streams (a second XOR) of different runs do not
/// coincide.
pub fn run_seed(base: u64, run: usize) -> u64 {
    mix_seed(base ^ run as u64)
}

/// Corpus-level feature selection with the chosen optimizer; `None` for the
/// no-selection arm.
pub fn select_features(
    matrix: &WeightMatrix,
    algorithm: Algorithm,
    params: SearchParams,
    seed: u64,
) -> Result<Option<GlobalSelection>> {
    let selection = match algorithm {
        Algorithm::None => return Ok(None),
        Algorithm::TlboGwo => {
            let cfg = HybridConfig {
                iter_max: params.iter_max,
                pop_size: params.pop_size,
                p_max: params.p_max,
                seed,
            };
            cfg.validate()?;
            select_global(matrix, seed, |w, rng| run_document_fs(w, &cfg, rng))?
        }
        Algorithm::Tlbo => {
            let cfg = TlboConfig {
                iter_max: params.iter_max,
                pop_size: params.pop_size,
                ..TlboConfig::default()
            };
            select_global(matrix, seed, |w, rng| run_tlbo(w, &cfg, rng))?
        }
        Algorithm::Gwo => {
            let cfg = GwoConfig {
                iter_max: params.iter_max,
                pop_size: params.pop_size,
            };
            select_global(matrix, seed, |w, rng| run_gwo(w, &cfg, rng))?
        }
    };
    if selection.global_mask.count_ones() == 0 {
        return Err(Error::EmptyFeatureSpace);
    }
    Ok(Some(selection))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub run: usize,
    pub seed: u64,
    pub metrics: MetricsReport,
    pub reduction_ratio: f64,
    pub selected_features: usize,
    pub kmeans_iterations: usize,
    pub wall_ms: u128,
    /// Per-document convergence files, one per searched document.
    pub trace_files: Vec<String>,
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub selection: Option<GlobalSelection>,
    pub selected_terms: Vec<String>,
    pub assignment: Vec<usize>,
}

pub fn convergence_file_name(run: usize, doc: usize) -> String {
    format!("convergence_{run}_{doc}.csv")
}

pub fn selected_terms_file_name(run: usize) -> String {
    format!("selected_terms_{run}.txt")
}

fn cluster_count(config: &ExperimentConfig, labels: &[String]) -> usize {
    config.k.unwrap_or_else(|| {
        let mut distinct: Vec<&String> = labels.iter().collect();
        distinct.sort();
        distinct.dedup();
        distinct.len()
    })
}

/// Selection, reduction, clustering and evaluation for run `run`.
pub fn run_single(space: &VectorSpace, config: &ExperimentConfig, run: usize) -> Result<RunArtifacts> {
    let seed = run_seed(config.seed, run);
    let start = Instant::now();
    let matrix = &space.matrix;
    let selection = select_features(matrix, config.algorithm, config.search(), seed)?;
    let (reduced, selected_terms) = match &selection {
        Some(s) => (reduce_vsm(matrix, &s.global_mask)?, space.vocabulary.select(&s.global_mask)?),
        None => (matrix.clone(), space.vocabulary.terms().to_vec()),
    };
    let reduction_ratio = selection.as_ref().map_or(0.0, |s| s.reduction_ratio);
    let model = run_kmeans(&reduced, cluster_count(config, &space.labels), config.kmeans_max_iter)?;
    let metrics = evaluate(&model.assignment, &space.labels, reduction_ratio)?;
    let trace_files = selection
        .iter()
        .flat_map(|s| &s.per_document)
        .map(|d| convergence_file_name(run, matrix.doc_ids()[d.doc_index]))
        .collect();
    let report = RunReport {
        run,
        seed,
        metrics,
        reduction_ratio,
        selected_features: selected_terms.len(),
        kmeans_iterations: model.iterations_run,
        wall_ms: start.elapsed().as_millis(),
        trace_files,
    };
    log::info!(
        "{} run {run}: accuracy {:.4}, {} of {} features",
        config.algorithm,
        metrics.accuracy,
        report.selected_features,
        matrix.t()
    );
    Ok(RunArtifacts {
        report,
        selection,
        selected_terms,
        assignment: model.assignment,
    })
}

/// Settings echoed into the summary. Paths are left out so that identical
/// experiments written to different places produce identical summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySettings {
    pub algorithm: Algorithm,
    pub iter_max: usize,
    pub pop_size: usize,
    pub p_max: f64,
    pub k: usize,
    pub kmeans_max_iter: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub metrics: MetricsReport,
    pub selected_features: usize,
    pub kmeans_iterations: usize,
}

/// Aggregate over all runs; contains no timing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub settings: SummarySettings,
    pub documents: usize,
    pub t_original: usize,
    pub mean: MetricsReport,
    pub std: MetricsReport,
    pub per_run: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub reports: Vec<RunReport>,
    pub summary: Summary,
}

fn aggregate(reports: &[RunReport], f: impl Fn(&MetricsReport) -> f64) -> (f64, f64) {
    let n = reports.len() as f64;
    let mean = reports.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
    let std = if reports.len() < 2 {
        0.0
    } else {
        (reports.iter().map(|r| (f(&r.metrics) - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (mean, std)
}

pub fn summarize(space: &VectorSpace, config: &ExperimentConfig, reports: &[RunReport]) -> Summary {
    let mut mean = [0.0; 5];
    let mut std = [0.0; 5];
    for (i, measure) in MetricsReport::MEASURES.iter().enumerate() {
        (mean[i], std[i]) = aggregate(reports, |m| m.get(measure).expect("known measure"));
    }
    let report = |v: [f64; 5]| MetricsReport {
        accuracy: v[0],
        precision: v[1],
        recall: v[2],
        f_measure: v[3],
        reduction_ratio: v[4],
    };
    Summary {
        dataset: config.dataset_name(),
        settings: SummarySettings {
            algorithm: config.algorithm,
            iter_max: config.iter_max,
            pop_size: config.pop_size,
            p_max: config.p_max,
            k: cluster_count(config, &space.labels),
            kmeans_max_iter: config.kmeans_max_iter,
            runs: config.runs,
            seed: config.seed,
        },
        documents: space.matrix.n(),
        t_original: space.matrix.t(),
        mean: report(mean),
        std: report(std),
        per_run: reports
            .iter()
            .map(|r| RunRecord {
                run: r.run,
                seed: r.seed,
                metrics: r.metrics,
                selected_features: r.selected_features,
                kmeans_iterations: r.kmeans_iterations,
            })
            .collect(),
    }
}

/// Runs every configured run in order, handing each result to `sink` as soon
/// as it is complete. A failing run aborts the experiment with its index;
/// earlier runs have already reached the sink.
pub fn run_experiment_on(
    space: &VectorSpace,
    config: &ExperimentConfig,
    mut sink: impl FnMut(&RunArtifacts) -> Result<()>,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let mut reports = Vec::with_capacity(config.runs);
    for run in 0..config.runs {
        let artifacts = run_single(space, config, run)
            .and_then(|a| sink(&a).map(|_| a))
            .map_err(|e| Error::Run {
                run,
                source: Box::new(e),
            })?;
        reports.push(artifacts.report);
    }
    let summary = summarize(space, config, &reports);
    Ok(ExperimentOutcome { reports, summary })
}

pub fn load_space(config: &ExperimentConfig) -> Result<VectorSpace> {
    let docs = load_corpus(&config.corpus, config.format)?;
    build_vsm(&docs)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let space = load_space(config)?;
    run_experiment_on(&space, config, |_| Ok(()))
}

/// Full benchmark writing every artifact under `out`.
pub fn run_bench_on(space: &VectorSpace, config: &ExperimentConfig, out: &Path) -> Result<ExperimentOutcome> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let outcome = run_experiment_on(space, config, |a| write_run_artifacts(out, a, &space.matrix))?;
    write_summary(&out.join("summary.json"), &outcome.summary)?;
    write_runs_csv(&out.join("runs.csv"), &outcome.reports)?;
    Ok(outcome)
}

/// Per-run values of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSamples {
    pub name: String,
    pub runs: Vec<MetricsReport>,
}

impl From<&Summary> for ArmSamples {
    fn from(s: &Summary) -> Self {
        Self {
            name: s.settings.algorithm.name().to_string(),
            runs: s.per_run.iter().map(|r| r.metrics).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub measure: String,
    pub arm_a: String,
    pub arm_b: String,
    pub method: Method,
    pub p_value: f64,
    pub significant: bool,
}

/// Measures compared between arms.
pub const COMPARED_MEASURES: [&str; 4] = ["accuracy", "precision", "recall", "f_measure"];

pub const DEFAULT_ALPHA: f64 = 0.05;

/// One-sided tests of "proposed is greater" against every other arm.
pub fn compare_arms(
    dataset: &str,
    proposed: &ArmSamples,
    others: &[ArmSamples],
    alpha: f64,
) -> Result<Vec<ComparisonRow>> {
    if others.is_empty() {
        return Err(Error::invalid("at least two arms are needed for a comparison"));
    }
    let mut rows = Vec::with_capacity(others.len() * COMPARED_MEASURES.len() * 2);
    for other in others {
        if other.runs.len() != proposed.runs.len() {
            return Err(Error::invalid(format!(
                "arm {} has {} runs but arm {} has {}",
                other.name,
                other.runs.len(),
                proposed.name,
                proposed.runs.len()
            )));
        }
        for measure in COMPARED_MEASURES {
            let values = |arm: &ArmSamples| -> Vec<f64> {
                arm.runs.iter().map(|m| m.get(measure).expect("known measure")).collect()
            };
            let (a, b) = (values(proposed), values(other));
            for method in [Method::TTest, Method::MannWhitney] {
                let result = run_test(method, &a, &b, Alternative::Greater)?;
                rows.push(ComparisonRow {
                    dataset: dataset.to_string(),
                    measure: measure.to_string(),
                    arm_a: proposed.name.clone(),
                    arm_b: other.name.clone(),
                    method,
                    p_value: result.p_value,
                    significant: result.p_value < alpha,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawDocument;

    fn doc(id: usize, label: &str, text: &str) -> RawDocument {
        RawDocument {
            id,
            text: text.to_string(),
            label: label.to_string(),
        }
    }

    fn tiny_space() -> VectorSpace {
        let docs = vec![
            doc(0, "fruit", "apple banana cherry apple"),
            doc(1, "fruit", "banana cherry grape banana"),
            doc(2, "fruit", "apple grape cherry melon"),
            doc(3, "metal", "iron copper nickel iron"),
            doc(4, "metal", "copper nickel zinc copper"),
            doc(5, "metal", "iron zinc nickel cobalt"),
        ];
        build_vsm(&docs).unwrap()
    }

    fn quick(algorithm: Algorithm, runs: usize) -> ExperimentConfig {
        ExperimentConfig {
            algorithm,
            iter_max: 10,
            pop_size: 6,
            runs,
            seed: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn defaults() {
        let c = ExperimentConfig::default();
        assert_eq!((c.iter_max, c.pop_size, c.p_max), (500, 30, 0.08));
        assert_eq!((c.kmeans_max_iter, c.runs), (50, 20));
        assert_eq!(c.algorithm, Algorithm::TlboGwo);
    }

    #[test]
    fn config_json_with_partial_fields() {
        let c: ExperimentConfig = serde_json::from_str(r#"{"algorithm":"gwo","runs":3,"format":"csv"}"#).unwrap();
        assert_eq!(c.algorithm, Algorithm::Gwo);
        assert_eq!(c.runs, 3);
        assert_eq!(c.format, CorpusFormat::Csv);
        assert_eq!(c.iter_max, 500);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"iters":3}"#).is_err());
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_string(&a).unwrap(), format!("\"{a}\""));
        }
        assert!("pso".parse::<Algorithm>().is_err());
    }

    #[test]
    fn baseline_arm_is_single_deterministic_evaluation() {
        let space = tiny_space();
        let out = run_experiment_on(&space, &quick(Algorithm::None, 1), |_| Ok(())).unwrap();
        assert_eq!(out.reports.len(), 1);
        assert_eq!(out.reports[0].reduction_ratio, 0.0);
        assert_eq!(out.reports[0].selected_features, space.matrix.t());
        assert_eq!(out.summary.mean.accuracy, 1.0);
        assert!(out.reports[0].trace_files.is_empty());
    }

    #[test]
    fn selection_arms_run_and_repeat() {
        let space = tiny_space();
        for a in [Algorithm::TlboGwo, Algorithm::Tlbo, Algorithm::Gwo] {
            let first = run_experiment_on(&space, &quick(a, 2), |_| Ok(())).unwrap();
            let second = run_experiment_on(&space, &quick(a, 2), |_| Ok(())).unwrap();
            assert_eq!(first.summary, second.summary, "{a}");
            assert_eq!(first.reports[0].trace_files.len(), space.matrix.n());
            for r in &first.reports {
                assert!(r.reduction_ratio >= 0.0 && r.reduction_ratio < 1.0);
            }
        }
    }

    #[test]
    fn runs_use_distinct_seeds() {
        let s: Vec<u64> = (0..20).map(|r| run_seed(7, r)).collect();
        let mut d = s.clone();
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 20);
    }

    #[test]
    fn failing_run_reports_its_index_after_earlier_runs_completed() {
        let space = tiny_space();
        let mut seen = vec![];
        let err = run_experiment_on(&space, &quick(Algorithm::None, 3), |a| {
            seen.push(a.report.run);
            if a.report.run == 1 {
                Err(Error::invalid("disk full"))
            } else {
                Ok(())
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Run { run: 1, .. }));
        assert_eq!(seen, vec![0, 1]);
    }

    #[test]
    fn invalid_config_rejected() {
        let space = tiny_space();
        assert!(run_experiment_on(&space, &quick(Algorithm::None, 0), |_| Ok(())).is_err());
        let mut c = quick(Algorithm::TlboGwo, 1);
        c.p_max = 0.0;
        assert!(run_experiment_on(&space, &c, |_| Ok(())).is_err());
    }

    fn arm(name: &str, values: &[f64]) -> ArmSamples {
        ArmSamples {
            name: name.to_string(),
            runs: values
                .iter()
                .map(|&v| MetricsReport {
                    accuracy: v,
                    precision: v,
                    recall: v,
                    f_measure: v,
                    reduction_ratio: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn compare_with_itself_is_never_significant() {
        let a = arm("tlbo-gwo", &[0.5, 0.6, 0.7, 0.65, 0.55]);
        let rows = compare_arms("d", &a, std::slice::from_ref(&a), DEFAULT_ALPHA).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| !r.significant));
    }

    #[test]
    fn dominant_arm_is_significant_everywhere() {
        let hi: Vec<f64> = (0..20).map(|i| 0.8 + i as f64 * 0.005).collect();
        let lo: Vec<f64> = (0..20).map(|i| 0.4 + i as f64 * 0.005).collect();
        let rows = compare_arms(
            "d",
            &arm("tlbo-gwo", &hi),
            &[arm("tlbo", &lo), arm("gwo", &lo), arm("none", &lo)],
            DEFAULT_ALPHA,
        )
        .unwrap();
        assert_eq!(rows.len(), 3 * 4 * 2);
        assert!(rows.iter().all(|r| r.significant));
    }

    #[test]
    fn compare_rejects_mismatched_runs_and_single_arm() {
        let a = arm("a", &[0.1, 0.2, 0.3]);
        let b = arm("b", &[0.1, 0.2]);
        assert!(compare_arms("d", &a, &[b], DEFAULT_ALPHA).is_err());
        assert!(compare_arms("d", &a, &[], DEFAULT_ALPHA).is_err());
    }
}
