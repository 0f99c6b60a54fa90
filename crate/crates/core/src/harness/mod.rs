//! Experiment plans, batch execution and CSV/JSON reporting.
//!
//! A plan names an experiment kind, the sizes, instances per size and a
//! seed base. Every instance and every random stream is derived from the
//! seed base and the cell key, cells run on a bounded worker pool, and
//! results are written in cell-key order, so the output bytes depend only on
//! the plan.

pub mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::generate::{generate, GenConfig, GeneratedInstance, DEFAULT_RATIO};
use crate::rng::{derive_seed, RNG_ID};

pub use experiments::{
    c_smooth_experiment, compare_experiment, gap_suite_experiment, noise_experiment, sweep_experiment, trace_csv,
    trace_experiment, tune, CompareOutput, ComparisonRow, ExponentFit, SizeSummary, TraceConfig, Tuned,
};

/// Version of the CSV layouts written by this module.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("plan: {0}")]
    Plan(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Trace,
    Compare,
    #[serde(rename = "c_smooth", alias = "c-smooth")]
    CSmooth,
    Sweep,
    GapSuite,
    Noise,
}

/// How the evolving-θ schedule is chosen per size in `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Tuning {
    /// The same `θ_init = frac·π/2` and `c_Q` at every size.
    Fixed { theta_init_frac: f64, c_q: usize },
    /// `θ_init` from [`crate::mdsolver::default_theta_init`] with this `c_Q`.
    Interpolated { c_q: usize },
    /// Minimise the mean expected checks over `calibration_instances`
    /// instances drawn from seeds disjoint from the evaluated ones.
    GridSearch { theta_init_fracs: Vec<f64>, c_q_values: Vec<usize>, calibration_instances: usize },
}

impl Default for Tuning {
    fn default() -> Self {
        Tuning::GridSearch {
            theta_init_fracs: vec![0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9],
            c_q_values: vec![4, 6, 8, 12, 16, 20, 30, 45],
            calibration_instances: 4,
        }
    }
}

fn default_ratio() -> f64 {
    DEFAULT_RATIO
}
fn default_target() -> Option<usize> {
    Some(1)
}
fn default_instances() -> usize {
    50
}
fn default_classical_runs() -> usize {
    2000
}
fn default_classical_budget() -> u64 {
    100_000_000
}
fn default_order() -> String {
    "sequential".into()
}
fn default_c_q() -> usize {
    200
}
fn default_thetas() -> Vec<f64> {
    vec![0.3, 0.6, 1.4]
}
fn default_increments() -> Vec<usize> {
    vec![5, 10, 20, 40, 80, 160, 320]
}
fn default_trials() -> usize {
    10_000
}

/// A batch experiment. Kind-specific fields are ignored by other kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub kind: ExperimentKind,
    pub sizes: Vec<usize>,
    #[serde(default = "default_instances")]
    pub instances_per_size: usize,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    /// Solution counts to generate; instances cycle through the list.
    /// `null` accepts any count.
    #[serde(default = "default_target")]
    pub target_ns: Option<usize>,
    #[serde(default)]
    pub target_ns_cycle: Vec<usize>,
    #[serde(default = "default_order")]
    pub order: String,
    /// Schedule string for `trace`, e.g. `cubic:0.7pi/2,40`.
    #[serde(default)]
    pub schedule: Option<String>,
    /// Fixed angles for `c_smooth` and `gap-suite`.
    #[serde(default = "default_thetas")]
    pub thetas: Vec<f64>,
    /// Cycle count for `c_smooth` runs.
    #[serde(default = "default_c_q")]
    pub c_q: usize,
    #[serde(default)]
    pub tuning: Tuning,
    #[serde(default = "default_classical_runs")]
    pub classical_runs: usize,
    #[serde(default = "default_classical_budget")]
    pub classical_max_checks: u64,
    #[serde(default = "default_increments")]
    pub increments: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    /// Per-qubit per-cycle Pauli error rates for the `noise` Monte-Carlo runs.
    #[serde(default)]
    pub p_errors: Vec<f64>,
    #[serde(default)]
    pub spectral_mode: Option<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentPlan {
    pub fn new(kind: ExperimentKind, sizes: Vec<usize>) -> Self {
        let mut v = serde_json::json!({ "kind": kind, "sizes": sizes });
        v.as_object_mut().expect("object").remove("output_dir");
        serde_json::from_value(v).expect("defaults are valid")
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let p: ExperimentPlan = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sizes.is_empty() {
            return Err(HarnessError::Plan("no sizes".into()));
        }
        if self.instances_per_size == 0 {
            return Err(HarnessError::Plan("instances_per_size must be positive".into()));
        }
        crate::mdsolver::CheckOrderPolicy::parse(&self.order, 0).map_err(|e| HarnessError::Plan(e.to_string()))?;
        Ok(())
    }

    /// Solution count asked of instance `idx`.
    pub fn target_for(&self, idx: usize) -> Option<usize> {
        if self.target_ns_cycle.is_empty() {
            self.target_ns
        } else {
            Some(self.target_ns_cycle[idx % self.target_ns_cycle.len()])
        }
    }

    /// Seed of instance `idx` at size `n`.
    pub fn instance_seed(&self, n: usize, idx: usize) -> u64 {
        derive_seed(self.seed_base, &[n as u64, idx as u64])
    }

    /// Seed of auxiliary stream `aux` for instance `idx` at size `n`.
    pub fn stream_seed(&self, n: usize, idx: usize, aux: u64) -> u64 {
        derive_seed(self.seed_base, &[n as u64, idx as u64, aux])
    }

    pub fn instance(&self, n: usize, idx: usize) -> Result<GeneratedInstance, String> {
        let cfg = GenConfig {
            n,
            ratio: self.ratio,
            target_ns: self.target_for(idx),
            seed: self.instance_seed(n, idx),
            max_rejections: 10_000_000,
        };
        generate(&cfg).map_err(|e| e.to_string())
    }
}

/// Key of one unit of work. Results are ordered by key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub n: usize,
    pub instance: usize,
    /// Extra index, e.g. the position in a θ list.
    pub sub: usize,
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}-i{}-s{}", self.n, self.instance, self.sub)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedCell {
    pub key: String,
    pub reason: String,
}

/// Tables and side files produced by one experiment, before writing.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub csv: BTreeMap<String, Table>,
    pub json: BTreeMap<String, serde_json::Value>,
    pub failed: Vec<FailedCell>,
    pub log: Vec<String>,
    pub cells_total: usize,
}

/// An in-memory CSV table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, HarnessError> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| HarnessError::Plan(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Formats a float for CSV; non-finite values become empty cells.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

pub fn fmt_opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub csv_schema_version: u32,
    pub rng: String,
    pub plan_sha256: String,
    pub cells_total: usize,
    pub cells_failed: usize,
    pub failed_cells: Vec<FailedCell>,
    pub files: Vec<ManifestEntry>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Runs the plan's experiment on a pool of `threads` workers (0 = rayon's
/// default).
pub fn execute(plan: &ExperimentPlan, threads: usize) -> Result<Artifacts, HarnessError> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::Plan(e.to_string()))?;
    pool.install(|| match plan.kind {
        ExperimentKind::Compare => compare_experiment(plan).map(|o| o.artifacts),
        ExperimentKind::Trace => trace_experiment(plan),
        ExperimentKind::CSmooth => c_smooth_experiment(plan),
        ExperimentKind::Sweep => sweep_experiment(plan),
        ExperimentKind::GapSuite => gap_suite_experiment(plan),
        ExperimentKind::Noise => noise_experiment(plan),
    })
}

/// Writes artifacts, the plan echo, the log and the manifest into `dir`.
pub fn write_artifacts(plan: &ExperimentPlan, art: &Artifacts, dir: &Path) -> Result<Manifest, HarnessError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    let mut echo = plan.clone();
    echo.output_dir = None;
    let plan_bytes = serde_json::to_vec_pretty(&echo)?;
    files.insert("plan.json".into(), plan_bytes.clone());
    for (name, t) in &art.csv {
        files.insert(name.clone(), t.to_bytes()?);
    }
    for (name, v) in &art.json {
        files.insert(name.clone(), serde_json::to_vec_pretty(v)?);
    }
    let mut log = art.log.join("\n");
    log.push('\n');
    files.insert("log.txt".into(), log.into_bytes());
    let mut entries = vec![];
    for (name, bytes) in &files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        entries.push(ManifestEntry { path: name.clone(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
    }
    let manifest = Manifest {
        csv_schema_version: CSV_SCHEMA_VERSION,
        rng: RNG_ID.into(),
        plan_sha256: sha256_hex(&plan_bytes),
        cells_total: art.cells_total,
        cells_failed: art.failed.len(),
        failed_cells: art.failed.clone(),
        files: entries,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_vec_pretty(&manifest)?).map_err(io_err(&path))?;
    Ok(manifest)
}

/// Reads a plan file, executes it and writes everything to `out` (or the
/// plan's `output_dir`).
pub fn run_plan(plan_path: &Path, out: Option<&Path>, threads: usize) -> Result<Manifest, HarnessError> {
    let text = fs::read_to_string(plan_path).map_err(io_err(plan_path))?;
    let plan = ExperimentPlan::from_json(&text)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| plan.output_dir.clone())
        .ok_or_else(|| HarnessError::Plan("no output directory given".into()))?;
    let art = execute(&plan, threads)?;
    write_artifacts(&plan, &art, &dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_defaults_and_round_trip() {
        let p = ExperimentPlan::from_json(r#"{"kind":"compare","sizes":[12]}"#).unwrap();
        assert_eq!(p.instances_per_size, 50);
        assert_eq!(p.ratio, DEFAULT_RATIO);
        assert_eq!(p.target_ns, Some(1));
        let q = ExperimentPlan::from_json(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, q);
        assert_eq!(ExperimentPlan::new(ExperimentKind::Compare, vec![12]), p);
        assert!(ExperimentPlan::from_json(r#"{"kind":"compare","sizes":[]}"#).is_err());
        assert!(ExperimentPlan::from_json(r#"{"kind":"compare","sizes":[8],"bogus":1}"#).is_err());
        assert!(ExperimentPlan::from_json(r#"{"kind":"c_smooth","sizes":[8]}"#).is_ok());
        assert!(ExperimentPlan::from_json(r#"{"kind":"gap-suite","sizes":[8]}"#).is_ok());
    }

    #[test]
    fn seeds_depend_on_key() {
        let p = ExperimentPlan::new(ExperimentKind::Sweep, vec![8]);
        assert_ne!(p.instance_seed(8, 0), p.instance_seed(8, 1));
        assert_ne!(p.instance_seed(8, 0), p.instance_seed(9, 0));
        assert_ne!(p.stream_seed(8, 0, 1), p.stream_seed(8, 0, 2));
    }

    #[test]
    fn target_cycle() {
        let mut p = ExperimentPlan::new(ExperimentKind::GapSuite, vec![8]);
        p.target_ns_cycle = vec![0, 1, 2];
        assert_eq!((p.target_for(0), p.target_for(4)), (Some(0), Some(1)));
    }

    #[test]
    fn table_bytes() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), fmt_f64(0.5)]);
        t.push(vec![fmt_opt::<usize>(None), fmt_f64(f64::NAN)]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "a,b\n1,0.5\n,\n");
    }
}
