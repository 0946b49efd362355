//! Experiment orchestration: parameter sweeps over generated or loaded data,
//! repeated epochs per algorithm, and tidy CSV/SVG output.
//!
//! An experiment is described by an [`ExperimentSpec`], usually read from
//! JSON:
//!
//! ```json
//! {
//!   "source": { "ccm": { "n": 2000, "d": 100, "k": 5, "epsilon": 0.2 } },
//!   "algorithms": [
//!     { "name": "k-modes", "engine": "softmodes", "rounding": { "kind": "plurality" } },
//!     { "name": "softmodes", "engine": "softmodes", "rounding": { "kind": "soft", "t": 3 } },
//!     { "name": "k-means", "engine": "lloyd" }
//!   ],
//!   "epochs": 5,
//!   "axis": "k",
//!   "values": [5, 10, 20],
//!   "seed": 7
//! }
//! ```

mod plot;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, one_hot, CategoricalDataset, CsvOptions, LabelColumn};
use crate::engine::{
    run_lloyd, run_softmodes, ClusteringConfig, Parallelism, TraceRecord, DEFAULT_MAX_ITER,
};
use crate::error::{Error, Result};
use crate::generators::{generate_bbm, generate_ccm, BbmSpec, CcmSpec};
use crate::rng::{derive, purpose};
use crate::rounding::RoundingSpec;
use crate::seeding::SeedingSpec;

pub use plot::{emit_plot, render_svg, PlotKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbmParams {
    pub n: usize,
    pub d: usize,
    #[serde(default = "two")]
    pub k: usize,
    /// Diagonal probability.
    #[serde(default)]
    pub p: f64,
    /// Off-diagonal probability.
    #[serde(default)]
    pub q: f64,
    /// Full matrix; overrides `k`, `p` and `q`.
    #[serde(default)]
    pub pmatrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CcmParams {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub epsilon: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvSource {
    pub path: PathBuf,
    #[serde(default)]
    pub label_column: Option<String>,
    #[serde(default)]
    pub label_column_index: Option<usize>,
    #[serde(default = "yes")]
    pub has_header: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Bbm(BbmParams),
    Ccm(CcmParams),
    Csv(CsvSource),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum Engine {
    SoftModes { rounding: RoundingSpec },
    Lloyd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub name: String,
    #[serde(flatten)]
    pub engine: Engine,
    #[serde(default)]
    pub seeding: SeedingSpec,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}

impl AlgorithmSpec {
    pub fn softmodes(name: impl Into<String>, rounding: RoundingSpec) -> Self {
        Self {
            name: name.into(),
            engine: Engine::SoftModes { rounding },
            seeding: SeedingSpec::default(),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn lloyd(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            engine: Engine::Lloyd,
            seeding: SeedingSpec::default(),
            max_iter: DEFAULT_MAX_ITER,
        }
    }

    pub fn with_seeding(mut self, seeding: SeedingSpec) -> Self {
        self.seeding = seeding;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }
}

/// The swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Cluster count; also the generator's block count for synthetic data.
    K,
    /// Soft rounding exponent; applies to algorithms with soft rounding.
    T,
    /// Block-model diagonal probability.
    P,
    /// Block-model off-diagonal probability.
    Q,
    /// Codeword-model noise fraction.
    Rho,
    /// Iteration index: each epoch runs once up to the largest value and
    /// reports the accuracy reached at every listed iteration.
    Iteration,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::T => "t",
            Axis::P => "p",
            Axis::Q => "q",
            Axis::Rho => "rho",
            Axis::Iteration => "iteration",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub algorithms: Vec<AlgorithmSpec>,
    pub epochs: usize,
    pub axis: Axis,
    pub values: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Cluster count when it is not the swept axis. Defaults to the
    /// generator's `k`, or the label count of a CSV source.
    #[serde(default)]
    pub k: Option<usize>,
    /// Worker threads; absent means all cores.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub plot: Option<PlotKind>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if self.values.is_empty() {
            return Err(Error::config("axis values must not be empty"));
        }
        if self.algorithms.is_empty() {
            return Err(Error::config("at least one algorithm is required"));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(format!("non-finite axis value {v}")));
        }
        let integral = |v: &f64| *v >= 1.0 && v.fract() == 0.0;
        if matches!(self.axis, Axis::K | Axis::Iteration) && !self.values.iter().all(integral) {
            return Err(Error::config(format!("{} values must be positive integers", self.axis.name())));
        }
        match (&self.axis, &self.source) {
            (Axis::P | Axis::Q, DataSource::Bbm(b)) if b.pmatrix.is_some() => {
                Err(Error::config("p/q sweeps need a symmetric block model, not pmatrix"))
            }
            (Axis::P | Axis::Q, DataSource::Ccm(_) | DataSource::Csv(_)) => {
                Err(Error::config("p/q sweeps need a block-model source"))
            }
            (Axis::Rho, DataSource::Bbm(_) | DataSource::Csv(_)) => {
                Err(Error::config("rho sweeps need a codeword-model source"))
            }
            (Axis::K, DataSource::Bbm(b)) if b.pmatrix.is_some() => {
                Err(Error::config("k sweeps need a symmetric block model, not pmatrix"))
            }
            _ => Ok(()),
        }?;
        for algo in &self.algorithms {
            if algo.max_iter == 0 {
                return Err(Error::config(format!("{}: max_iter must be at least 1", algo.name)));
            }
            if let Engine::SoftModes { rounding } = &algo.engine {
                rounding.validate()?;
            }
        }
        Ok(())
    }

    fn data_seed(&self, explicit: Option<u64>) -> u64 {
        explicit.unwrap_or_else(|| derive(self.seed, &[purpose::DATASET]))
    }

    /// The dataset for one axis value. Labels are required for scoring.
    fn dataset(&self, axis_value: f64) -> Result<CategoricalDataset> {
        let ds = match &self.source {
            DataSource::Bbm(b) => {
                let seed = self.data_seed(b.seed);
                let spec = match &b.pmatrix {
                    Some(m) => BbmSpec::with_matrix(b.n, b.d, m.clone(), seed),
                    None => {
                        let (mut k, mut p, mut q) = (b.k, b.p, b.q);
                        match self.axis {
                            Axis::K => k = axis_value as usize,
                            Axis::P => p = axis_value,
                            Axis::Q => q = axis_value,
                            _ => {}
                        }
                        BbmSpec::symmetric(b.n, b.d, k, p, q, seed)
                    }
                };
                generate_bbm(&spec)?
            }
            DataSource::Ccm(c) => {
                let mut spec = CcmSpec::new(c.n, c.d, c.k, c.epsilon, c.rho, self.data_seed(c.seed));
                match self.axis {
                    Axis::K => spec.k = axis_value as usize,
                    Axis::Rho => spec.rho = axis_value,
                    _ => {}
                }
                generate_ccm(&spec)?
            }
            DataSource::Csv(c) => {
                let label = match (&c.label_column, c.label_column_index) {
                    (Some(name), _) => LabelColumn::Name(name.clone()),
                    (None, Some(i)) => LabelColumn::Index(i),
                    (None, None) => {
                        return Err(Error::config("csv source needs a label column for scoring"))
                    }
                };
                load_csv(&c.path, &CsvOptions { has_header: c.has_header, label })?
            }
        };
        if ds.labels().is_none() {
            return Err(Error::config("experiment data has no ground-truth labels"));
        }
        Ok(ds)
    }

    fn cluster_count(&self, ds: &CategoricalDataset, axis_value: f64) -> usize {
        if self.axis == Axis::K {
            return axis_value as usize;
        }
        if let Some(k) = self.k {
            return k;
        }
        match &self.source {
            DataSource::Bbm(b) => b.pmatrix.as_ref().map_or(b.k, Vec::len),
            DataSource::Ccm(c) => c.k,
            DataSource::Csv(_) => ds.label_count().unwrap_or(1),
        }
    }

    fn epoch_seed(&self, axis_idx: usize, algo_idx: usize, epoch: usize) -> u64 {
        derive(self.seed, &[purpose::EPOCH, axis_idx as u64, algo_idx as u64, epoch as u64])
    }
}

/// One row of the result table.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub axis: f64,
    pub algorithm: String,
    pub epoch: usize,
    pub accuracy: f64,
    /// Iterations executed by the run.
    pub iterations: usize,
    /// Wall-clock time of the clustering call.
    pub seconds: f64,
    pub trace: Vec<TraceRecord>,
}

/// Mean and (population) standard deviation of accuracy over epochs.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub axis: f64,
    pub algorithm: String,
    pub epochs: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub axis: Axis,
    /// Canonical order: axis value (as listed), algorithm (as listed), epoch.
    pub records: Vec<RunRecord>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl ResultTable {
    /// Per (axis value, algorithm) aggregates, in first-appearance order.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: Vec<((f64, String), Vec<f64>)> = Vec::new();
        for r in &self.records {
            match groups
                .iter_mut()
                .find(|((a, name), _)| *a == r.axis && *name == r.algorithm)
            {
                Some((_, accs)) => accs.push(r.accuracy),
                None => groups.push(((r.axis, r.algorithm.clone()), vec![r.accuracy])),
            }
        }
        groups
            .into_iter()
            .map(|((axis, algorithm), accs)| {
                let (mean, std) = mean_std(&accs);
                SummaryRow { axis, algorithm, epochs: accs.len(), mean, std }
            })
            .collect()
    }

    /// Mean accuracy of `algorithm` at `axis`, if present.
    pub fn mean_accuracy(&self, axis: f64, algorithm: &str) -> Option<f64> {
        self.summary()
            .into_iter()
            .find(|s| s.axis == axis && s.algorithm == algorithm)
            .map(|s| s.mean)
    }

    /// `axis,algorithm,epoch,accuracy,iterations`; reproducible byte-for-byte
    /// for a fixed root seed.
    pub fn write_results_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([self.axis.name(), "algorithm", "epoch", "accuracy", "iterations"])?;
        for r in &self.records {
            w.write_record([
                r.axis.to_string(),
                r.algorithm.clone(),
                r.epoch.to_string(),
                r.accuracy.to_string(),
                r.iterations.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<results writer>", e))?;
        Ok(())
    }

    /// `axis,algorithm,epoch,seconds`.
    pub fn write_timing_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([self.axis.name(), "algorithm", "epoch", "seconds"])?;
        for r in &self.records {
            w.write_record([
                r.axis.to_string(),
                r.algorithm.clone(),
                r.epoch.to_string(),
                format!("{:.6}", r.seconds),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<timing writer>", e))?;
        Ok(())
    }

    /// `axis,algorithm,epoch,iteration,objective,accuracy`.
    pub fn write_traces_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([self.axis.name(), "algorithm", "epoch", "iteration", "objective", "accuracy"])?;
        for r in &self.records {
            for t in &r.trace {
                w.write_record([
                    r.axis.to_string(),
                    r.algorithm.clone(),
                    r.epoch.to_string(),
                    t.iteration.to_string(),
                    t.objective.to_string(),
                    t.accuracy.map(|a| a.to_string()).unwrap_or_default(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<trace writer>", e))?;
        Ok(())
    }

    /// `axis,algorithm,epochs,mean,std`.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([self.axis.name(), "algorithm", "epochs", "mean", "std"])?;
        for s in self.summary() {
            w.write_record([
                s.axis.to_string(),
                s.algorithm,
                s.epochs.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<summary writer>", e))?;
        Ok(())
    }

    /// Writes `results.csv`, `timing.csv`, `traces.csv`, and `plot.svg` with
    /// its `plot.csv` summary into `dir`.
    pub fn write_outputs(&self, dir: impl AsRef<Path>, kind: PlotKind) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| {
            let path = dir.join(name);
            fs::File::create(&path)
                .map(std::io::BufWriter::new)
                .map_err(|e| Error::io(path, e))
        };
        self.write_results_csv(create("results.csv")?)?;
        self.write_timing_csv(create("timing.csv")?)?;
        self.write_traces_csv(create("traces.csv")?)?;
        emit_plot(self, kind, dir.join("plot.svg"))
    }
}

/// Accuracy reached by iteration `it`; runs that stopped earlier keep their
/// final value.
fn accuracy_at(trace: &[TraceRecord], it: usize) -> f64 {
    trace
        .iter()
        .take_while(|t| t.iteration <= it)
        .last()
        .or(trace.first())
        .and_then(|t| t.accuracy)
        .unwrap_or(0.0)
}

struct Job {
    axis_idx: usize,
    algo_idx: usize,
    epoch: usize,
}

/// Runs every (axis value, algorithm, epoch) combination.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let parallelism = match spec.threads {
        Some(t) => Parallelism::threads(t)?,
        None => Parallelism::Auto,
    };
    parallelism.install(|| run_jobs(spec))?
}

fn run_jobs(spec: &ExperimentSpec) -> Result<ResultTable> {
    let sweep_iterations = spec.axis == Axis::Iteration;
    // the iteration axis shares one dataset
    let data_points: Vec<f64> = if sweep_iterations { vec![0.0] } else { spec.values.clone() };
    let datasets = data_points
        .iter()
        .map(|&v| spec.dataset(v))
        .collect::<Result<Vec<_>>>()?;
    let needs_onehot = spec.algorithms.iter().any(|a| a.engine == Engine::Lloyd);
    let encodings: Vec<_> = if needs_onehot {
        datasets.iter().map(|ds| Some(one_hot(ds))).collect()
    } else {
        datasets.iter().map(|_| None).collect()
    };
    let iteration_cap = spec.values.iter().fold(0.0f64, |a, &b| a.max(b)) as usize;

    let jobs: Vec<Job> = (0..data_points.len())
        .flat_map(|axis_idx| {
            (0..spec.algorithms.len()).flat_map(move |algo_idx| {
                (0..spec.epochs).map(move |epoch| Job { axis_idx, algo_idx, epoch })
            })
        })
        .collect();

    let runs: Vec<Vec<(usize, RunRecord)>> = jobs
        .par_iter()
        .map(|job| -> Result<Vec<(usize, RunRecord)>> {
            let algo = &spec.algorithms[job.algo_idx];
            let ds = &datasets[job.axis_idx];
            let axis_value = data_points[job.axis_idx];
            let mut config = ClusteringConfig::new(spec.cluster_count(ds, axis_value))
                .seeding(algo.seeding)
                .max_iter(if sweep_iterations { iteration_cap } else { algo.max_iter })
                .seed(spec.epoch_seed(job.axis_idx, job.algo_idx, job.epoch));
            let started = Instant::now();
            let (trace, iterations) = match &algo.engine {
                Engine::SoftModes { rounding } => {
                    config.rounding = match (spec.axis, rounding) {
                        (Axis::T, RoundingSpec::Soft { .. }) => RoundingSpec::soft(axis_value)?,
                        _ => *rounding,
                    };
                    let r = run_softmodes(ds, &config)
                        .map_err(|e| Error::config(format!("{}: {e}", algo.name)))?;
                    (r.trace, r.iterations)
                }
                Engine::Lloyd => {
                    let x = encodings[job.axis_idx].as_ref().expect("encoded when needed");
                    let r = run_lloyd(x, &config)
                        .map_err(|e| Error::config(format!("{}: {e}", algo.name)))?;
                    (r.trace, r.iterations)
                }
            };
            let seconds = started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
            let record = |axis: f64, accuracy: f64| RunRecord {
                axis,
                algorithm: algo.name.clone(),
                epoch: job.epoch,
                accuracy,
                iterations,
                seconds,
                trace: trace.clone(),
            };
            if sweep_iterations {
                Ok(spec
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &it)| (i, record(it, accuracy_at(&trace, it as usize))))
                    .collect())
            } else {
                let acc = trace.last().and_then(|t| t.accuracy).unwrap_or(0.0);
                Ok(vec![(job.axis_idx, record(axis_value, acc))])
            }
        })
        .collect::<Result<_>>()?;

    // canonical order regardless of completion order
    let mut keyed: Vec<((usize, usize, usize), RunRecord)> = Vec::new();
    for (job, rows) in jobs.iter().zip(runs) {
        for (axis_idx, rec) in rows {
            keyed.push(((axis_idx, job.algo_idx, job.epoch), rec));
        }
    }
    keyed.sort_by_key(|(key, _)| *key);
    Ok(ResultTable {
        axis: spec.axis,
        records: keyed.into_iter().map(|(_, r)| r).collect(),
    })
}

/// Mean accuracy per algorithm keyed by axis value; convenience for checks.
pub fn mean_by_algorithm(table: &ResultTable) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in table.summary() {
        out.entry(s.algorithm).or_default().push((s.axis, s.mean));
    }
    out
}
