//! Command-line entry point: dataset generators, preprocessing pipelines,
//! single experiments, volatility and complexity benches, and report
//! rendering. Exit codes: 0 success, 1 usage error, 2 runtime error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use qmlbench::anderson::generate_phase_map;
use qmlbench::bench::{
    fit_exponential, fit_power_law, qsvm_kernel_build_times, render_report, run_experiment,
    run_experiment_cross, volatility_matrix, vqc_forward_times, vqc_iteration_times,
    ExperimentReport, ExperimentSpec, RandomizeSpec, ReportFormat, VOLATILITY_FRACTIONS,
    VOLATILITY_STATES,
};
use qmlbench::classifier::{AlgoOptions, Backend, Registry};
use qmlbench::data::{
    covid_label, gen_adhoc, load_cases, load_population, load_uci, prng_apply,
    reduce_near_hyperplane, AdhocShape, CovidConfig, Direction, PrngParams, UciKind,
};
use qmlbench::svm::{train_svm, KernelSpec};
use qmlbench::{Dataset, Error};

#[derive(Parser)]
#[command(name = "qmlbench", version, about = "Quantum vs classical kernel-method benchmarks")]
struct Cli {
    /// Cap the worker-thread count for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic 20x20 grid datasets.
    Adhoc {
        #[command(subcommand)]
        command: AdhocCommand,
    },
    /// Anderson-localization phase maps.
    Anderson {
        #[command(subcommand)]
        command: AndersonCommand,
    },
    /// County-level epidemic labeling.
    Covid {
        #[command(subcommand)]
        command: CovidCommand,
    },
    /// UCI reference datasets.
    Uci {
        #[command(subcommand)]
        command: UciCommand,
    },
    /// Keep only points near a linear-SVM hyperplane.
    Reduce(ReduceArgs),
    /// Scramble (or unscramble) features with the invertible congruential map.
    Randomize(RandomizeArgs),
    /// Train one classifier and report accuracy.
    Train(TrainArgs),
    /// Benchmark suites.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Run a declarative experiment matrix from a TOML config.
    Run(RunArgs),
    /// Render saved experiment reports.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum AdhocCommand {
    /// Generate one of the four grid shapes.
    Gen {
        /// separable | alternating | random | circle
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum AndersonCommand {
    /// Scan an (E, Va) grid and classify conductor/insulator points.
    Gen {
        #[arg(long, default_value_t = -2.0)]
        e_min: f64,
        #[arg(long, default_value_t = 2.0)]
        e_max: f64,
        #[arg(long, default_value_t = 5)]
        e_steps: usize,
        #[arg(long, default_value_t = 2.0)]
        va_min: f64,
        #[arg(long, default_value_t = 30.0)]
        va_max: f64,
        #[arg(long, default_value_t = 8)]
        va_steps: usize,
        /// Comma-separated cube edge lengths, e.g. 4,6,8.
        #[arg(long, default_value = "4,6,8")]
        l: String,
        #[arg(long, default_value_t = 20)]
        configs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Labeled dataset CSV (E, Va, label).
        #[arg(long)]
        out: PathBuf,
        /// Raw per-point slopes and log-averaged conductances.
        #[arg(long)]
        raw_out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CovidCommand {
    /// Label counties safe/unsafe from cumulative case counts.
    Label {
        /// Cases table: date,county,state,fips,cases,deaths.
        #[arg(long)]
        cases: PathBuf,
        /// Population table: fips,population.
        #[arg(long)]
        population: PathBuf,
        /// Label date (YYYY-MM-DD).
        #[arg(long, default_value = "2020-05-08")]
        date: String,
        #[arg(long, default_value_t = 3)]
        window: u32,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum UciCommand {
    /// Convert a UCI file to the dataset CSV layout.
    Load {
        /// wdbc | wine
        #[arg(long)]
        kind: String,
        /// Source file; defaults to <kind>.csv under QMLBENCH_DATA_DIR.
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    data: PathBuf,
    /// Keep points within this hyperplane distance.
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RandomizeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 7919)]
    a: u64,
    #[arg(long, default_value_t = 13)]
    b: u64,
    #[arg(long, default_value_t = 104_729)]
    m: u64,
    /// Power-of-ten quantization scale.
    #[arg(long, default_value_t = 1)]
    scale: u64,
    /// forward | inverse
    #[arg(long, default_value = "forward")]
    direction: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Clone)]
struct AlgoFlags {
    /// svm-linear | svm-rbf | qsvm | vqc
    #[arg(long)]
    algo: String,
    /// local | exact-sim | shot-sim (defaults per algorithm).
    #[arg(long)]
    backend: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 2)]
    reps: usize,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    ansatz_depth: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    /// Largest feature dimension the quantum-kernel SVM accepts.
    #[arg(long, default_value_t = 3)]
    dim_limit: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    algo: AlgoFlags,
    #[arg(long)]
    data: PathBuf,
    /// Optional separate evaluation dataset (e.g. later-date labels).
    #[arg(long)]
    test_data: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    state: u64,
    #[arg(long, default_value_t = 0.33)]
    test_frac: f64,
    /// Standard-scale features before anything else.
    #[arg(long)]
    scale: bool,
    /// Project to this many principal components.
    #[arg(long)]
    pca: Option<usize>,
    /// Reduce to points within this hyperplane distance before splitting.
    #[arg(long)]
    delta: Option<f64>,
    /// Scramble features as a*x+b mod m with these comma-separated values.
    #[arg(long, value_name = "A,B,M,SCALE")]
    randomize: Option<String>,
    /// Report JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Predicted labels CSV path (defaults next to the report).
    #[arg(long)]
    predictions_out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Rerun one experiment across (state, fraction) combinations.
    Volatility {
        #[command(flatten)]
        algo: AlgoFlags,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        scale: bool,
        #[arg(long)]
        pca: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Measure runtime scaling and fit the growth law.
    Complexity {
        /// qsvm-kernel | vqc-iteration | vqc-forward
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with an [[experiment]] table per run.
    #[arg(long)]
    config: PathBuf,
    /// Directory for reports and the rendered table.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON file of saved reports.
    #[arg(long)]
    reports: PathBuf,
    /// text | csv | json
    #[arg(long, default_value = "text")]
    format: String,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap help/version requests are successes, not usage errors
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(jobs) = cli.jobs {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()
        {
            eprintln!("error: could not configure {jobs} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let usage = matches!(
                e,
                Error::QsvmDimensionLimit { .. }
                    | Error::UnknownAlgorithm(..)
                    | Error::BadTestFraction(..)
                    | Error::InvalidParameter(..)
            );
            ExitCode::from(if usage { 1 } else { 2 })
        }
    }
}

fn usage_err(msg: String) -> Error {
    Error::InvalidParameter(msg)
}

fn resolve_data_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os("QMLBENCH_DATA_DIR") {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn load_dataset(path: &Path) -> Result<Dataset, Error> {
    Dataset::read_csv(resolve_data_path(path))
}

fn write_dataset(ds: &Dataset, out: &Path) -> Result<(), Error> {
    ds.write_csv(out)?;
    println!("dataset: {}", out.display());
    Ok(())
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| usage_err(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn algo_options(flags: &AlgoFlags) -> AlgoOptions {
    AlgoOptions {
        c: flags.c,
        gamma: flags.gamma,
        reps: flags.reps,
        shots: flags.shots,
        seed: flags.seed,
        ansatz_depth: flags.ansatz_depth,
        max_iterations: flags.iterations,
        encode_range: (-1.0, 1.0),
        qsvm_dim_limit: flags.dim_limit,
    }
}

fn backend_for(flags: &AlgoFlags) -> Result<Backend, Error> {
    match &flags.backend {
        Some(s) => Backend::from_str(s).map_err(usage_err),
        None => Ok(match flags.algo.as_str() {
            "qsvm" | "vqc" => Backend::ExactSim,
            _ => Backend::Local,
        }),
    }
}

fn parse_randomize(s: &str) -> Result<RandomizeSpec, Error> {
    let parts: Vec<u64> = parse_list(s, "randomize")?;
    if parts.len() != 4 {
        return Err(usage_err(format!("--randomize wants A,B,M,SCALE, got {s:?}")));
    }
    Ok(RandomizeSpec { params: PrngParams::new(parts[0], parts[1], parts[2])?, scale: parts[3] })
}

fn spec_from_flags(args: &TrainArgs) -> Result<ExperimentSpec, Error> {
    let mut spec = ExperimentSpec::new(
        &args.algo.algo,
        backend_for(&args.algo)?,
        &args.data.display().to_string(),
    );
    spec.scale = args.scale;
    spec.pca_dim = args.pca;
    spec.reduce_delta = args.delta;
    spec.randomize = args.randomize.as_deref().map(parse_randomize).transpose()?;
    spec.test_fraction = args.test_frac;
    spec.state = args.state;
    spec.options = algo_options(&args.algo);
    spec.validate()?;
    Ok(spec)
}

fn effective_dim(ds: &Dataset, spec: &ExperimentSpec) -> usize {
    spec.pca_dim.unwrap_or_else(|| ds.dim())
}

fn write_report_files(
    report: &ExperimentReport,
    out: &Path,
    predictions_out: Option<&Path>,
) -> Result<(), Error> {
    let pred_path = predictions_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("predictions.csv"));
    let mut pred_csv = String::from("predicted,actual\n");
    for (p, t) in report.predictions.iter().zip(&report.truth) {
        pred_csv.push_str(&format!("{p},{t}\n"));
    }
    std::fs::write(&pred_path, pred_csv).map_err(|e| Error::io(pred_path.display().to_string(), e))?;

    let mut json: serde_json::Value = serde_json::to_value(report)?;
    json["predictions_path"] = serde_json::Value::String(pred_path.display().to_string());
    let text = serde_json::to_string_pretty(&json)?;
    std::fs::write(out, text).map_err(|e| Error::io(out.display().to_string(), e))?;
    println!("report: {}", out.display());
    println!("predictions: {}", pred_path.display());
    println!(
        "accuracy: {}% one_class: {}",
        qmlbench::bench::format_accuracy(report.accuracy_percent),
        report.one_class
    );
    Ok(())
}

#[derive(serde::Deserialize)]
struct RunConfig {
    #[serde(rename = "experiment")]
    experiments: Vec<ExperimentSpec>,
}

fn dispatch(command: Command) -> Result<(), Error> {
    let registry = Registry::with_defaults();
    match command {
        Command::Adhoc { command: AdhocCommand::Gen { shape, seed, out } } => {
            let shape = AdhocShape::from_str(&shape).map_err(usage_err)?;
            write_dataset(&gen_adhoc(shape, seed)?, &out)
        }
        Command::Anderson {
            command:
                AndersonCommand::Gen {
                    e_min,
                    e_max,
                    e_steps,
                    va_min,
                    va_max,
                    va_steps,
                    l,
                    configs,
                    seed,
                    out,
                    raw_out,
                },
        } => {
            let grid = |lo: f64, hi: f64, steps: usize| -> Result<Vec<f64>, Error> {
                if steps < 1 || (steps > 1 && hi <= lo) {
                    return Err(usage_err(format!("bad grid [{lo}, {hi}] x {steps}")));
                }
                Ok((0..steps)
                    .map(|i| {
                        if steps == 1 {
                            lo
                        } else {
                            lo + (hi - lo) * i as f64 / (steps - 1) as f64
                        }
                    })
                    .collect())
            };
            let l_list: Vec<usize> = parse_list(&l, "edge length")?;
            let map = generate_phase_map(
                &grid(e_min, e_max, e_steps)?,
                &grid(va_min, va_max, va_steps)?,
                &l_list,
                configs,
                seed,
            )?;
            if map.excluded > 0 {
                eprintln!("note: {} grid points excluded by the slope threshold", map.excluded);
            }
            std::fs::write(&out, map.dataset_csv()?)
                .map_err(|e| Error::io(out.display().to_string(), e))?;
            println!("dataset: {}", out.display());
            if let Some(raw) = raw_out {
                std::fs::write(&raw, map.raw_csv())
                    .map_err(|e| Error::io(raw.display().to_string(), e))?;
                println!("raw: {}", raw.display());
            }
            Ok(())
        }
        Command::Covid {
            command: CovidCommand::Label { cases, population, date, window, threshold, out },
        } => {
            let label_date = chrono::NaiveDate::parse_from_str(&date, "%Y-%m-%d")
                .map_err(|e| usage_err(format!("bad --date {date:?}: {e}")))?;
            let config = CovidConfig::new(label_date, window, threshold)?;
            let case_rows = load_cases(resolve_data_path(&cases))?;
            let pop = load_population(resolve_data_path(&population))?;
            let (ds, stats) = covid_label(&case_rows, &pop, &config)?;
            eprintln!(
                "included {} counties (excluded: {} missing dates, {} all-zero, {} non-monotone; \
                 dropped {} without population; {} rows without fips)",
                stats.included,
                stats.excluded_missing_dates,
                stats.excluded_zero_window,
                stats.excluded_non_monotone,
                stats.dropped_missing_population,
                stats.rows_without_fips
            );
            write_dataset(&ds, &out)
        }
        Command::Uci { command: UciCommand::Load { kind, path, out } } => {
            let kind = UciKind::from_str(&kind).map_err(usage_err)?;
            let default = match kind {
                UciKind::Wdbc => "wdbc.csv",
                UciKind::Wine => "wine.csv",
            };
            let source = resolve_data_path(&path.unwrap_or_else(|| PathBuf::from(default)));
            write_dataset(&load_uci(kind, source)?, &out)
        }
        Command::Reduce(args) => {
            let ds = load_dataset(&args.data)?;
            let linear = train_svm(&ds.features, &ds.labels, KernelSpec::Linear, 1.0)?;
            let (reduced, kept, dropped) = reduce_near_hyperplane(&ds, &linear, args.delta)?;
            eprintln!("kept {kept}, dropped {dropped} (delta = {})", args.delta);
            write_dataset(&reduced, &args.out)
        }
        Command::Randomize(args) => {
            let ds = load_dataset(&args.data)?;
            let params = PrngParams::new(args.a, args.b, args.m)?;
            let direction = Direction::from_str(&args.direction).map_err(usage_err)?;
            write_dataset(&prng_apply(&ds, &params, direction, args.scale)?, &args.out)
        }
        Command::Train(args) => {
            let spec = spec_from_flags(&args)?;
            let ds = load_dataset(&args.data)?;
            if spec.algorithm == "qsvm" && effective_dim(&ds, &spec) > spec.options.qsvm_dim_limit {
                return Err(Error::QsvmDimensionLimit {
                    d: effective_dim(&ds, &spec),
                    limit: spec.options.qsvm_dim_limit,
                });
            }
            let report = match &args.test_data {
                None => run_experiment(&registry, &ds, &spec)?,
                Some(test_path) => {
                    let test_ds = load_dataset(test_path)?;
                    run_experiment_cross(&registry, &ds, &test_ds, &spec)?
                }
            };
            write_report_files(&report, &args.out, args.predictions_out.as_deref())
        }
        Command::Bench { command } => match command {
            BenchCommand::Volatility { algo, data, scale, pca, out } => {
                let ds = load_dataset(&data)?;
                let mut base =
                    ExperimentSpec::new(&algo.algo, backend_for(&algo)?, &data.display().to_string());
                base.scale = scale;
                base.pca_dim = pca;
                base.options = algo_options(&algo);
                base.validate()?;
                let reports = volatility_matrix(
                    &registry,
                    &ds,
                    &base,
                    &VOLATILITY_STATES,
                    &VOLATILITY_FRACTIONS,
                )?;
                let json = serde_json::to_string_pretty(&reports)?;
                std::fs::write(&out, json).map_err(|e| Error::io(out.display().to_string(), e))?;
                println!("reports: {}", out.display());
                println!("{}", render_report(&reports, ReportFormat::TextTable)?);
                Ok(())
            }
            BenchCommand::Complexity { kind, seed, out } => {
                let fit_json = match kind.as_str() {
                    "qsvm-kernel" => {
                        let ns = [20usize, 40, 80, 160];
                        let times = qsvm_kernel_build_times(&ns, 4, seed)?;
                        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                        let fit = fit_power_law(&xs, &times)?;
                        println!("power-law exponent: {:.3}", fit.exponent);
                        serde_json::to_string_pretty(&fit)?
                    }
                    "vqc-iteration" => {
                        let ns = [25usize, 50, 100, 200];
                        let times = vqc_iteration_times(&ns, 2, seed)?;
                        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
                        let fit = fit_power_law(&xs, &times)?;
                        println!("power-law exponent: {:.3}", fit.exponent);
                        serde_json::to_string_pretty(&fit)?
                    }
                    "vqc-forward" => {
                        let dims: Vec<usize> = (2..=10).collect();
                        let times = vqc_forward_times(&dims, seed)?;
                        let xs: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
                        let (combined, pure) = fit_exponential(&xs, &times)?;
                        println!(
                            "growth base: {:.3} (pure-exponential {:.3})",
                            combined.exponent, pure.exponent
                        );
                        serde_json::to_string_pretty(&vec![combined, pure])?
                    }
                    other => {
                        return Err(usage_err(format!(
                            "unknown complexity kind {other:?} (qsvm-kernel | vqc-iteration | vqc-forward)"
                        )))
                    }
                };
                std::fs::write(&out, fit_json)
                    .map_err(|e| Error::io(out.display().to_string(), e))?;
                println!("fit: {}", out.display());
                Ok(())
            }
        },
        Command::Run(args) => {
            let text = std::fs::read_to_string(&args.config)
                .map_err(|e| Error::io(args.config.display().to_string(), e))?;
            let config: RunConfig =
                toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            if config.experiments.is_empty() {
                return Err(Error::Config("config lists no experiments".into()));
            }
            // validate the whole matrix before doing any work
            for spec in &config.experiments {
                spec.validate()?;
            }
            std::fs::create_dir_all(&args.out)
                .map_err(|e| Error::io(args.out.display().to_string(), e))?;
            let mut reports = Vec::with_capacity(config.experiments.len());
            for spec in &config.experiments {
                let ds = load_dataset(Path::new(&spec.dataset))?;
                reports.push(run_experiment(&registry, &ds, spec)?);
            }
            let json_path = args.out.join("reports.json");
            std::fs::write(&json_path, serde_json::to_string_pretty(&reports)?)
                .map_err(|e| Error::io(json_path.display().to_string(), e))?;
            let table_path = args.out.join("reports.txt");
            std::fs::write(&table_path, render_report(&reports, ReportFormat::TextTable)?)
                .map_err(|e| Error::io(table_path.display().to_string(), e))?;
            println!("reports: {}", json_path.display());
            println!("table: {}", table_path.display());
            Ok(())
        }
        Command::Report(args) => {
            let text = std::fs::read_to_string(&args.reports)
                .map_err(|e| Error::io(args.reports.display().to_string(), e))?;
            let reports: Vec<ExperimentReport> = serde_json::from_str(&text)?;
            let format = ReportFormat::from_str(&args.format).map_err(usage_err)?;
            let rendered = render_report(&reports, format)?;
            match &args.out {
                Some(path) => {
                    std::fs::write(path, rendered)
                        .map_err(|e| Error::io(path.display().to_string(), e))?;
                    println!("rendered: {}", path.display());
                }
                None => print!("{rendered}"),
            }
            Ok(())
        }
    }
}
