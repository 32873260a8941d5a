use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use crate::error::{Error, Result};
use crate::randomization::{FiducialResult, TestResult};

/// File name of the results document inside the output directory.
pub const RESULTS_FILE: &str = "results.json";

/// Machine-readable record of one run. `config` is fully resolved, so
/// passing this document back as `--config` repeats the run exactly.
#[derive(Debug, Clone, Serialize)]
pub struct ResultsDocument {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub config: RunConfig,
    pub results: serde_json::Value,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

/// Collects sidecar files in memory; nothing is written until `finish`.
pub(crate) struct OutputDir {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputDir {
    pub(crate) fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(OutputDir { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub(crate) fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Numerical(format!("{name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("{name}: {e}")))?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub(crate) fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        self.files.push((name.to_string(), contents.as_bytes().to_vec()));
        Ok(())
    }

    /// Write every sidecar, then the results document listing them.
    pub(crate) fn finish(self, mut doc: ResultsDocument) -> Result<(PathBuf, Vec<String>)> {
        let mut names = Vec::new();
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            std::fs::write(&path, bytes).map_err(|e| write_err(&path, e))?;
            names.push(name);
        }
        doc.files = names.clone();
        let path = self.dir.join(RESULTS_FILE);
        let json = serde_json::to_string_pretty(&doc).map_err(|e| Error::Numerical(e.to_string()))?;
        std::fs::write(&path, json + "\n").map_err(|e| write_err(&path, e))?;
        Ok((path, names))
    }
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("cannot write {}: {e}", path.display()))
}

pub(crate) fn f(v: f64) -> String {
    v.to_string()
}

/// Histogram rows `bin_lower, bin_upper, count, density, observed`.
pub(crate) fn histogram_rows(test: &TestResult, bins: usize) -> Vec<Vec<String>> {
    let n = test.null_draws.len() as f64;
    test.histogram(bins)
        .into_iter()
        .map(|(lo, hi, c)| {
            let width = if hi > lo { hi - lo } else { 1.0 };
            vec![f(lo), f(hi), c.to_string(), f(c as f64 / n / width), f(test.observed)]
        })
        .collect()
}

pub(crate) const HISTOGRAM_HEADER: [&str; 5] = ["bin_lower", "bin_upper", "count", "density", "observed"];

/// Header and rows of a p-value curve: one row per grid value with the
/// projected curves and each nuisance draw's p-value.
pub(crate) fn p_curve(result: &FiducialResult) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header: Vec<String> = ["eta", "mean_p", "max_p", "min_p", "lower", "upper", "estimate"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((1..=result.nuisance.len()).map(|d| format!("p_nu{d}")));
    let rows = result
        .grid
        .iter()
        .map(|g| {
            let mut r = vec![
                f(g.eta),
                f(g.mean_p),
                f(g.max_p),
                f(g.min_p),
                f(result.lower),
                f(result.upper),
                f(result.estimate),
            ];
            r.extend(g.p_values.iter().map(|&p| f(p)));
            r
        })
        .collect();
    (header, rows)
}
