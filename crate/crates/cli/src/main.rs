use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use softmodes::dataset::load_label_file;
use softmodes::harness::PlotKind;
use softmodes::rng::{derive, purpose};
use softmodes::rounding::{field_grid, write_field_csv};
use softmodes::{
    confusion, evaluation, generate_bbm, generate_ccm, load_csv, one_hot, run_experiment,
    run_lloyd, run_softmodes, save_assignments, save_csv, BbmSpec, CcmSpec, ClusteringConfig,
    CsvOptions, ExperimentSpec, LabelColumn, Parallelism, RoundingSpec, SeedingSpec, TraceRecord,
};

#[derive(Parser)]
#[command(name = "softmodes", version, about = "Categorical clustering with randomized rounding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic labelled dataset as CSV.
    #[command(subcommand)]
    Generate(Generate),
    /// Cluster a CSV dataset.
    Cluster(ClusterArgs),
    /// Score predicted clusters against ground-truth labels.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Export the displacement field of a rounding function on the 2-simplex.
    Field {
        #[arg(long, value_enum, default_value = "soft")]
        rounding: RoundingKind,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value_t = 20)]
        resolution: usize,
        /// Output CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a JSON file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the worker thread count in the config.
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Generate {
    /// Boolean block model.
    Bbm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        /// k x k probability matrix as comma-separated rows; overrides k, p, q.
        #[arg(long)]
        pmatrix: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        out: PathBuf,
    },
    /// Corrupted codewords model.
    Ccm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingKind {
    Plurality,
    Uniform,
    Soft,
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineKind {
    Softmodes,
    Lloyd,
}

#[derive(Args)]
struct ClusterArgs {
    input: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "soft")]
    rounding: RoundingKind,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value = "dsample")]
    seeding: SeedingSpec,
    #[arg(long, value_enum, default_value = "softmodes")]
    engine: EngineKind,
    #[arg(long, default_value_t = softmodes::engine::DEFAULT_MAX_ITER)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    epochs: usize,
    #[arg(long)]
    threads: Option<usize>,
    /// Ground-truth column by header name.
    #[arg(long, conflicts_with = "label_col_index")]
    label_col: Option<String>,
    /// Ground-truth column by zero-based position.
    #[arg(long)]
    label_col_index: Option<usize>,
    /// The first line is data, not a header.
    #[arg(long)]
    no_header: bool,
    /// Assignment file (one cluster id per line) from the lowest-objective epoch.
    #[arg(long)]
    assignments: Option<PathBuf>,
    /// Trace CSV: epoch, iteration, objective, accuracy.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn rounding_spec(kind: RoundingKind, t: f64) -> Result<RoundingSpec> {
    Ok(match kind {
        RoundingKind::Plurality => RoundingSpec::Plurality,
        RoundingKind::Uniform => RoundingSpec::Uniform,
        RoundingKind::Soft => RoundingSpec::soft(t)?,
    })
}

fn read_pmatrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, line)| {
            line.split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("{}: row {}", path.display(), i + 1))
        })
        .collect()
}

fn generate(cmd: Generate) -> Result<()> {
    let (ds, out) = match cmd {
        Generate::Bbm { n, d, k, p, q, pmatrix, seed, out } => {
            let spec = match pmatrix {
                Some(file) => BbmSpec::with_matrix(n, d, read_pmatrix(&file)?, seed),
                None => BbmSpec::symmetric(n, d, k, p, q, seed),
            };
            (generate_bbm(&spec)?, out)
        }
        Generate::Ccm { n, d, k, eps, rho, seed, out } => {
            (generate_ccm(&CcmSpec::new(n, d, k, eps, rho, seed))?, out)
        }
    };
    save_csv(&ds, &out)?;
    eprintln!("wrote {} rows x {} attributes to {}", ds.n(), ds.d(), out.display());
    Ok(())
}

struct EpochRun {
    assignment: Vec<usize>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRecord>,
}

fn cluster(args: ClusterArgs) -> Result<()> {
    if args.epochs == 0 {
        bail!("--epochs must be at least 1");
    }
    let label = match (&args.label_col, args.label_col_index) {
        (Some(name), _) => LabelColumn::Name(name.clone()),
        (None, Some(i)) => LabelColumn::Index(i),
        (None, None) => LabelColumn::None,
    };
    let options = CsvOptions { has_header: !args.no_header, label };
    let ds = load_csv(&args.input, &options)?;
    let parallelism = match args.threads {
        Some(t) => Parallelism::threads(t)?,
        None => Parallelism::Auto,
    };
    let base = ClusteringConfig::new(args.k)
        .rounding(rounding_spec(args.rounding, args.t)?)
        .seeding(args.seeding)
        .max_iter(args.max_iter)
        .parallelism(parallelism);
    let encoded = matches!(args.engine, EngineKind::Lloyd).then(|| one_hot(&ds));

    let mut runs = Vec::with_capacity(args.epochs);
    for epoch in 0..args.epochs {
        let config = base.clone().seed(derive(args.seed, &[purpose::EPOCH, epoch as u64]));
        let run = match &encoded {
            None => {
                let r = run_softmodes(&ds, &config)?;
                let objective = r.final_objective().unwrap_or(0.0);
                EpochRun { assignment: r.assignment, objective, iterations: r.iterations, converged: r.converged, trace: r.trace }
            }
            Some(x) => {
                let r = run_lloyd(x, &config)?;
                let objective = r.final_objective().unwrap_or(0.0);
                EpochRun { assignment: r.assignment, objective, iterations: r.iterations, converged: r.converged, trace: r.trace }
            }
        };
        let accuracy = run.trace.last().and_then(|t| t.accuracy);
        println!(
            "epoch {epoch}: iterations {}{}, objective {}{}",
            run.iterations,
            if run.converged { "" } else { " (not converged)" },
            run.objective,
            accuracy.map(|a| format!(", accuracy {a:.4}")).unwrap_or_default()
        );
        runs.push(run);
    }

    let accuracies: Vec<f64> = runs.iter().filter_map(|r| r.trace.last().and_then(|t| t.accuracy)).collect();
    if accuracies.len() > 1 {
        let n = accuracies.len() as f64;
        let mean = accuracies.iter().sum::<f64>() / n;
        let std = (accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n).sqrt();
        println!("accuracy mean {mean:.4} std {std:.4} over {} epochs", accuracies.len());
    }

    if let Some(path) = &args.assignments {
        let best = runs
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| a.objective.total_cmp(&b.objective).then(i.cmp(j)))
            .map(|(_, r)| r)
            .expect("at least one epoch");
        save_assignments(&best.assignment, path)?;
    }
    if let Some(path) = &args.trace {
        let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "epoch,iteration,objective,accuracy")?;
        for (epoch, run) in runs.iter().enumerate() {
            for t in &run.trace {
                let acc = t.accuracy.map(|a| a.to_string()).unwrap_or_default();
                writeln!(w, "{epoch},{},{},{acc}", t.iteration, t.objective)?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn evaluate(pred: &Path, truth: &Path) -> Result<()> {
    let pred = load_label_file(pred)?;
    let truth = load_label_file(truth)?;
    let cm = confusion(&pred, &truth)?;
    let acc = evaluation::accuracy_from_confusion(&cm)?;
    println!("accuracy,{acc}");
    print!("{cm}");
    Ok(())
}

fn field(rounding: RoundingKind, t: f64, resolution: usize, out: Option<PathBuf>) -> Result<()> {
    let samples = field_grid(rounding_spec(rounding, t)?, resolution)?;
    match out {
        Some(path) => {
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_field_csv(&samples, BufWriter::new(file))?;
        }
        None => write_field_csv(&samples, io::stdout().lock())?,
    }
    Ok(())
}

fn experiment(config: &Path, out: &Path, threads: Option<usize>) -> Result<()> {
    let mut spec = ExperimentSpec::load(config)?;
    if threads.is_some() {
        spec.threads = threads;
    }
    let table = run_experiment(&spec).with_context(|| format!("running {}", config.display()))?;
    table.write_outputs(out, spec.plot.unwrap_or(PlotKind::Line))?;
    for s in table.summary() {
        println!("{}={} {}: {:.4} ± {:.4}", spec.axis.name(), s.axis, s.algorithm, s.mean, s.std);
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(g) => generate(g),
        Command::Cluster(args) => cluster(args),
        Command::Evaluate { pred, truth } => evaluate(&pred, &truth),
        Command::Field { rounding, t, resolution, out } => field(rounding, t, resolution, out),
        Command::Experiment { config, out, threads } => experiment(&config, &out, threads),
    }
}
