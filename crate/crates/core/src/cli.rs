//! Command-line front end.
//!
//! Every run is fully described by its flags. `reproduce N` only expands to
//! the equivalent explicit `run` or `sweep-lambda` command line, prints it,
//! and executes that.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiment::{
    compare, grid_search, run, sweep_lambda, DataSource, Granularity, Labeled, OptimizerConfig,
    ResidualCurve, RunSpec, LAMBDA_GRID,
};
use crate::ingest::{load_batch_dir, normalize_with_first, read_series_csv, BatchFileFormat};
use crate::model::ModelConfig;
use crate::optimizer::{Hyperparams, OptimizerKind};
use crate::plot::{self, Line};
use crate::series::MicroBatch;
use crate::synth::{generate, GeneratorSpec};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "OARIMA_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "oarima", version, about = "Online ARIMA optimizer experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic preset series as CSV (header `value`).
    Synth(SynthArgs),
    /// Run one or more optimizers and write residual curves (CSV + SVG).
    Run(RunArgs),
    /// Pick the learning rate with the lowest final residual per optimizer.
    GridSearch(GridArgs),
    /// Run the combined optimizer for several ramp lengths against
    /// AMSGrad, Basic and Momentum.
    SweepLambda(SweepArgs),
    /// Re-run one of the seven reference experiments.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub preset: u8,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; defaults to `synth_<preset>.csv` in the output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Bearing,
    Csv,
}

impl From<FormatArg> for BatchFileFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Bearing => BatchFileFormat::BearingSnapshot,
            FormatArg::Csv => BatchFileFormat::CsvColumn,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Single-series CSV with header `value`, scored per sample.
    #[arg(long, conflicts_with_all = ["preset", "batch_dir"])]
    pub data: Option<PathBuf>,
    /// Synthetic preset (1-3), scored per sample.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3), conflicts_with = "batch_dir")]
    pub preset: Option<u8>,
    /// Seed of the synthetic data realization.
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    /// Directory of micro-batch files, scored per batch.
    #[arg(long)]
    pub batch_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Bearing)]
    pub format: FormatArg,
    #[arg(long, default_value_t = 0)]
    pub channel: usize,
    /// Use at most this many batch files.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Train on the first batch this many times instead of the sequence.
    #[arg(long)]
    pub repeat: Option<usize>,
    /// Keep raw batch values instead of normalizing with first-batch extrema.
    #[arg(long)]
    pub no_normalize: bool,
}

impl DataArgs {
    pub fn load(&self) -> Result<DataSource> {
        if let Some(path) = &self.data {
            return Ok(DataSource::Series(read_series_csv(path)?));
        }
        if let Some(preset) = self.preset {
            let spec = GeneratorSpec::preset(preset, self.data_seed)?;
            return Ok(DataSource::Series(generate(&spec)?));
        }
        let Some(dir) = &self.batch_dir else {
            return Err(Error::Usage(
                "one of --data, --preset or --batch-dir is required".into(),
            ));
        };
        let limit = if self.repeat.is_some() { Some(1) } else { self.limit };
        let mut batches = load_batch_dir(dir, self.format.into(), self.channel, limit)?;
        if let Some(times) = self.repeat {
            if times == 0 {
                return Err(Error::Usage("--repeat must be at least 1".into()));
            }
            let first = batches.swap_remove(0);
            batches = (0..times)
                .map(|i| MicroBatch {
                    samples: first.samples.clone(),
                    batch_index: i,
                })
                .collect();
        }
        if !self.no_normalize {
            batches = normalize_with_first(&batches, -1.0, 1.0)?.0;
        }
        Ok(DataSource::Batches(batches))
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// AR window size.
    #[arg(long, default_value_t = 5)]
    pub mk: usize,
    /// Differencing order.
    #[arg(long, default_value_t = 0)]
    pub d: usize,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    pub init_lo: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub init_hi: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// First trial seed; trial k uses seed-base + k.
    #[arg(long, default_value_t = 0)]
    pub seed_base: u64,
    /// Explicit trial seeds; overrides --trials and --seed-base.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

impl ModelArgs {
    fn seeds(&self) -> Vec<u64> {
        match &self.seeds {
            Some(seeds) => seeds.clone(),
            None => RunSpec::seeds(self.seed_base, self.trials),
        }
    }

    fn config(&self) -> ModelConfig {
        ModelConfig {
            mk: self.mk,
            d: self.d,
            init_lo: self.init_lo,
            init_hi: self.init_hi,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    /// Ramp length of the combined optimizer, in steps.
    #[arg(long, default_value_t = 2000.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    #[arg(long, default_value_t = 0.9)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.9)]
    pub beta1: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
}

impl HyperArgs {
    fn hyper(&self) -> Hyperparams {
        Hyperparams {
            learning_rate: self.lr,
            momentum: self.momentum,
            rho: self.rho,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    /// File name prefix for the artifacts.
    #[arg(long, default_value = "run")]
    pub name: String,
    /// Moving-average window applied to plotted curves only (CSV is raw);
    /// defaults to 50 for per-sample curves and 1 for per-batch curves.
    #[arg(long)]
    pub smooth: Option<usize>,
}

fn parse_optimizers(names: &[String], lambda: f64) -> Result<Vec<OptimizerKind>> {
    let mut kinds = Vec::new();
    for name in names {
        if name.eq_ignore_ascii_case("all") {
            kinds.extend(OptimizerKind::all(lambda));
        } else if name.contains(':') {
            kinds.push(name.parse()?);
        } else {
            kinds.push(OptimizerKind::parse(name, lambda)?);
        }
    }
    if kinds.is_empty() {
        return Err(Error::Usage("no optimizer selected".into()));
    }
    Ok(kinds)
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Optimizers to run: comma separated names, `combined:<lambda>`, or
    /// `all`.
    #[arg(long, value_delimiter = ',', default_value = "combined")]
    pub optimizer: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[arg(long, value_delimiter = ',', default_value = "combined")]
    pub optimizer: Vec<String>,
    /// Learning rates to try.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rates: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Ramp lengths to try.
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000,2000,3000,5000,10000")]
    pub lambdas: Vec<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_parser = clap::value_parser!(u8).range(1..=7))]
    pub figure: u8,
    /// Bearing snapshot directory (experiments 4 and 5) or CSV batch
    /// directory (experiment 6).
    #[arg(long)]
    pub batch_dir: Option<PathBuf>,
    /// Batch count for experiments 5 and 6.
    #[arg(long, default_value_t = 50)]
    pub limit: usize,
    #[arg(long, default_value_t = 0)]
    pub data_seed: u64,
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    pub out_dir: PathBuf,
    /// Print the equivalent command without running it.
    #[arg(long)]
    pub dry_run: bool,
}

/// Writes `bytes` to `path` via a temporary file in the same directory and
/// an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn curve_csv(curve: &ResidualCurve) -> Vec<u8> {
    let mut buf = Vec::new();
    curve.write_csv(&mut buf).expect("writing to memory");
    buf
}

fn write_plot(out: &OutputArgs, title: &str, entries: &[Labeled]) -> Result<PathBuf> {
    let granularity = entries
        .iter()
        .find_map(|e| e.curve.as_ref().map(|c| c.granularity))
        .unwrap_or(Granularity::PerSample);
    let (x_label, default_smooth) = match granularity {
        Granularity::PerSample => ("sample", 50),
        Granularity::PerBatch => ("batch", 1),
    };
    let lines: Vec<Line<'_>> = entries
        .iter()
        .filter_map(|e| {
            e.curve.as_ref().map(|c| Line {
                label: &e.label,
                x: &c.indices,
                y: &c.mean,
            })
        })
        .collect();
    let svg = plot::render(
        title,
        x_label,
        "average residual",
        &lines,
        out.smooth.unwrap_or(default_smooth),
    );
    let path = out.out_dir.join(format!("{}.svg", out.name));
    write_atomic(&path, svg.as_bytes())?;
    Ok(path)
}

fn spec_for(model: &ModelArgs, hyper: &HyperArgs, kind: OptimizerKind) -> RunSpec {
    RunSpec::new(
        model.config(),
        OptimizerConfig {
            kind,
            hyper: hyper.hyper(),
        },
        model.seeds(),
    )
}

fn execute_run(args: &RunArgs) -> Result<Vec<PathBuf>> {
    let kinds = parse_optimizers(&args.optimizer, args.hyper.lambda)?;
    let data = args.data.load()?;
    let spec = spec_for(&args.model, &args.hyper, kinds[0]);
    let entries = if kinds.len() == 1 {
        let curve = run(&spec, &data)?;
        vec![Labeled {
            label: kinds[0].name().to_string(),
            optimizer: spec.optimizer,
            curve: Some(curve),
        }]
    } else {
        compare(&spec, &data, &kinds)?
    };
    let mut written = Vec::new();
    for entry in &entries {
        match &entry.curve {
            Some(curve) => {
                let path = args.output.out_dir.join(format!("{}_{}.csv", args.output.name, entry.label));
                write_atomic(&path, &curve_csv(curve))?;
                println!("{:>10}  final residual {}", entry.label, curve.tail_mean());
                written.push(path);
            }
            None => println!("{:>10}  diverged", entry.label),
        }
    }
    written.push(write_plot(&args.output, &args.output.name, &entries)?);
    Ok(written)
}

fn execute_grid(args: &GridArgs) -> Result<Vec<PathBuf>> {
    let kinds = parse_optimizers(&args.optimizer, args.hyper.lambda)?;
    let data = args.data.load()?;
    let mut csv = String::from("optimizer,lr,final_residual,diverged\n");
    for kind in kinds {
        let spec = spec_for(&args.model, &args.hyper, kind);
        let result = grid_search(&spec, &data, &args.rates);
        let entries = match &result {
            Ok(r) => &r.entries[..],
            Err(Error::NoStableRate) => &[][..],
            Err(_) => return result.map(|_| Vec::new()),
        };
        for e in entries {
            match e.final_residual() {
                Some(r) => csv.push_str(&format!("{},{},{},false\n", kind.name(), e.optimizer.hyper.learning_rate, r)),
                None => csv.push_str(&format!("{},{},,true\n", kind.name(), e.optimizer.hyper.learning_rate)),
            }
        }
        match result {
            Ok(r) => println!("{:>10}  best lr {}", kind.name(), r.best_rate),
            Err(e) => println!("{:>10}  {e}", kind.name()),
        }
    }
    let path = args.output.out_dir.join(format!("{}_grid.csv", args.output.name));
    write_atomic(&path, csv.as_bytes())?;
    Ok(vec![path])
}

fn execute_sweep(args: &SweepArgs) -> Result<Vec<PathBuf>> {
    let data = args.data.load()?;
    let spec = spec_for(
        &args.model,
        &args.hyper,
        OptimizerKind::Combined {
            lambda: args.hyper.lambda,
        },
    );
    let result = sweep_lambda(&spec, &data, &args.lambdas)?;
    let mut buf = Vec::new();
    result.write_csv(&mut buf).expect("writing to memory");
    let summary = args.output.out_dir.join(format!("{}_sweep.csv", args.output.name));
    write_atomic(&summary, &buf)?;
    let mut written = vec![summary];
    for entry in &result.entries {
        match entry.final_residual() {
            Some(r) => println!("{:>26}  final residual {r}", entry.label),
            None => println!("{:>26}  diverged", entry.label),
        }
        if let Some(curve) = &entry.curve {
            let path = args.output.out_dir.join(format!("{}_{}.csv", args.output.name, entry.label));
            write_atomic(&path, &curve_csv(curve))?;
            written.push(path);
        }
    }
    written.push(write_plot(&args.output, &args.output.name, &result.entries)?);
    Ok(written)
}

/// The explicit command line behind a reference experiment, without the
/// program name.
pub fn reproduce_command(args: &ReproduceArgs) -> Result<Vec<String>> {
    let out_dir = args.out_dir.display().to_string();
    let need_dir = || {
        args.batch_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .ok_or_else(|| Error::Usage(format!("experiment {} needs --batch-dir", args.figure)))
    };
    let synthetic = |preset: u8, mk: usize| -> Vec<String> {
        let mut v = vec![
            "run".to_string(),
            "--preset".into(),
            preset.to_string(),
            "--data-seed".into(),
            args.data_seed.to_string(),
            "--mk".into(),
            mk.to_string(),
            "--d".into(),
            "0".into(),
            "--lr".into(),
            "0.05".into(),
            "--lambda".into(),
            "2000".into(),
            "--trials".into(),
            "30".into(),
        ];
        v.extend(["--optimizer".into(), "all".into()]);
        v
    };
    let mut cmd: Vec<String> = match args.figure {
        1 => synthetic(1, 5),
        2 => synthetic(2, 10),
        3 => synthetic(3, 10),
        4 | 5 => {
            let mut v: Vec<String> = vec![
                "run".into(),
                "--batch-dir".into(),
                need_dir()?,
                "--format".into(),
                "bearing".into(),
                "--channel".into(),
                "0".into(),
            ];
            if args.figure == 4 {
                v.extend(["--repeat".into(), "40".into()]);
            } else {
                v.extend(["--limit".into(), args.limit.to_string()]);
            }
            v.extend(
                [
                    "--mk", "300", "--d", "0", "--lr", "0.005", "--lambda", "102400", "--trials",
                    "10", "--optimizer", "all",
                ]
                .map(String::from),
            );
            v
        }
        6 => {
            let mut v: Vec<String> = vec![
                "run".into(),
                "--batch-dir".into(),
                need_dir()?,
                "--format".into(),
                "csv".into(),
                "--limit".into(),
                args.limit.to_string(),
            ];
            v.extend(
                [
                    "--mk", "60", "--d", "1", "--lr", "0.01", "--lambda", "102400", "--trials",
                    "10", "--optimizer", "all",
                ]
                .map(String::from),
            );
            v
        }
        7 => {
            let grid: Vec<String> = LAMBDA_GRID.iter().map(|l| l.to_string()).collect();
            vec![
                "sweep-lambda".into(),
                "--preset".into(),
                "2".into(),
                "--data-seed".into(),
                args.data_seed.to_string(),
                "--mk".into(),
                "10".into(),
                "--d".into(),
                "0".into(),
                "--lr".into(),
                "0.05".into(),
                "--trials".into(),
                "30".into(),
                "--lambdas".into(),
                grid.join(","),
            ]
        }
        other => return Err(Error::Usage(format!("no experiment {other}"))),
    };
    cmd.extend([
        "--out-dir".into(),
        out_dir,
        "--name".into(),
        format!("fig{}", args.figure),
    ]);
    Ok(cmd)
}

/// Runs a parsed command and returns the files it wrote.
pub fn execute(command: &Command) -> Result<Vec<PathBuf>> {
    match command {
        Command::Synth(args) => {
            let series = generate(&GeneratorSpec::preset(args.preset, args.seed)?)?;
            let mut csv = String::from("value\n");
            for v in series.values() {
                csv.push_str(&format!("{v}\n"));
            }
            let path = match &args.out {
                Some(p) => p.clone(),
                None => PathBuf::from(std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| ".".into()))
                    .join(format!("synth_{}.csv", args.preset)),
            };
            write_atomic(&path, csv.as_bytes())?;
            Ok(vec![path])
        }
        Command::Run(args) => execute_run(args),
        Command::GridSearch(args) => execute_grid(args),
        Command::SweepLambda(args) => execute_sweep(args),
        Command::Reproduce(args) => {
            let explicit = reproduce_command(args)?;
            println!("oarima {}", explicit.join(" "));
            if args.dry_run {
                return Ok(Vec::new());
            }
            let cli = Cli::try_parse_from(std::iter::once("oarima".to_string()).chain(explicit))
                .map_err(|e| Error::Usage(e.to_string()))?;
            execute(&cli.command)
        }
    }
}
