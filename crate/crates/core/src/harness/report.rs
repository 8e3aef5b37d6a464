use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::corpus::WeightMatrix;
use crate::error::{Error, Result};

use super::{convergence_file_name, selected_terms_file_name, ComparisonRow, ExperimentOutcome, RunArtifacts, RunReport, Summary};

pub const COMPARISON_HEADER: &str = "dataset,measure,arm_a,arm_b,method,p_value,significant@0.05";

fn write_text(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Convergence traces and the selected-term list of one run.
pub fn write_run_artifacts(out: &Path, artifacts: &RunArtifacts, matrix: &WeightMatrix) -> Result<()> {
    let run = artifacts.report.run;
    if let Some(selection) = &artifacts.selection {
        for doc in &selection.per_document {
            let path = out.join(convergence_file_name(run, matrix.doc_ids()[doc.doc_index]));
            write_text(&path, |w| {
                writeln!(w, "iter,best,mean")?;
                for (it, p) in doc.trace.iter().enumerate() {
                    writeln!(w, "{it},{},{}", p.best, p.mean)?;
                }
                Ok(())
            })?;
        }
    }
    write_text(&out.join(selected_terms_file_name(run)), |w| {
        for term in &artifacts.selected_terms {
            writeln!(w, "{term}")?;
        }
        Ok(())
    })
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))?;
    write_text(path, |w| writeln!(w, "{json}"))
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::malformed(path.display().to_string(), e.to_string()))
}

pub fn write_runs_csv(path: &Path, reports: &[RunReport]) -> Result<()> {
    write_text(path, |w| {
        writeln!(
            w,
            "run,seed,accuracy,precision,recall,f_measure,reduction_ratio,selected_features,kmeans_iterations,wall_ms"
        )?;
        for r in reports {
            let m = &r.metrics;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.run,
                r.seed,
                m.accuracy,
                m.precision,
                m.recall,
                m.f_measure,
                r.reduction_ratio,
                r.selected_features,
                r.kmeans_iterations,
                r.wall_ms
            )?;
        }
        Ok(())
    })
}

pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let malformed = |e: csv::Error| Error::malformed(path.display().to_string(), e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(malformed)?;
    w.write_record(COMPARISON_HEADER.split(',')).map_err(malformed)?;
    for r in rows {
        w.write_record([
            r.dataset.as_str(),
            r.measure.as_str(),
            r.arm_a.as_str(),
            r.arm_b.as_str(),
            r.method.name(),
            &r.p_value.to_string(),
            if r.significant { "true" } else { "false" },
        ])
        .map_err(malformed)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Summary and per-run table of a finished experiment. Per-run artifacts are
/// written by [`write_run_artifacts`] as runs complete.
pub fn emit_reports(outcome: &ExperimentOutcome, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_summary(&out.join("summary.json"), &outcome.summary)?;
    write_runs_csv(&out.join("runs.csv"), &outcome.reports)
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;
    use crate::corpus::{build_vsm, RawDocument};
    use crate::metrics::reduction_ratio;

    fn space() -> crate::corpus::VectorSpace {
        let texts = [
            ("a", "river boat water river fish"),
            ("a", "boat water sail harbour"),
            ("a", "fish river harbour net"),
            ("b", "engine piston fuel engine"),
            ("b", "fuel tank piston gear"),
            ("b", "gear engine clutch fuel"),
        ];
        let docs: Vec<RawDocument> = texts
            .iter()
            .enumerate()
            .map(|(id, (l, t))| RawDocument {
                id,
                text: t.to_string(),
                label: l.to_string(),
            })
            .collect();
        build_vsm(&docs).unwrap()
    }

    #[test]
    fn bench_files_are_consistent() {
        let space = space();
        let dir = tempfile::tempdir().unwrap();
        let config = ExperimentConfig {
            iter_max: 7,
            pop_size: 5,
            runs: 2,
            ..ExperimentConfig::default()
        };
        let outcome = run_bench_on(&space, &config, dir.path()).unwrap();

        let trace = std::fs::read_to_string(dir.path().join("convergence_1_4.csv")).unwrap();
        let lines: Vec<&str> = trace.lines().collect();
        assert_eq!(lines[0], "iter,best,mean");
        assert_eq!(lines.len(), 1 + config.iter_max + 1);

        let summary_text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
        let parsed = read_summary(&dir.path().join("summary.json")).unwrap();
        assert_eq!(parsed, outcome.summary);
        assert_eq!(serde_json::to_string_pretty(&parsed).unwrap() + "\n", summary_text);
        assert!(!summary_text.contains("wall"));

        for record in &parsed.per_run {
            let terms = std::fs::read_to_string(dir.path().join(selected_terms_file_name(record.run))).unwrap();
            let count = terms.lines().count();
            assert_eq!(count, record.selected_features);
            assert_eq!(reduction_ratio(parsed.t_original, count).unwrap(), record.metrics.reduction_ratio);
        }

        let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
        assert_eq!(runs.lines().count(), 3);
        assert!(runs.starts_with("run,seed,"));
    }

    #[test]
    fn comparison_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("comparison.csv");
        let row = ComparisonRow {
            dataset: "desk".into(),
            measure: "accuracy".into(),
            arm_a: "tlbo-gwo".into(),
            arm_b: "none".into(),
            method: crate::stats::Method::MannWhitney,
            p_value: 0.01,
            significant: true,
        };
        write_comparison_csv(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{COMPARISON_HEADER}\ndesk,accuracy,tlbo-gwo,none,mann-whitney,0.01,true\n"));
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = write_runs_csv(Path::new("/nonexistent/dir/runs.csv"), &[]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/runs.csv"));
    }
}
