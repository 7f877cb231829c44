//! The `esc` command-line tool: renewal and `K_n` tables, partition sampling,
//! timing benchmarks, and the verification suite.

pub mod bench;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use esc_core::kdist::{composition_table, k_distribution, k_distribution_closed};
use esc_core::renewal::{prob_en_closed, renewal_table};
use esc_core::samplers::{
    assemble_partition, prepare, rng_from_seed, sample_partition, NaiveSampler, Partition,
    SamplerMode, DEFAULT_MAX_ATTEMPTS, DEFAULT_SEED,
};
use esc_core::verify::{self, VerifyConfig};
use esc_core::{ClusterSizeSpec, Error};
use serde_json::json;

use bench::{BenchConfig, Method};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_UNREACHABLE: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "esc", version, about = "Exchangeable Sequence of Clusters partition tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Renewal probabilities u_m = Pr[E_m] for m = 0..=n.
    Un(TableArgs),
    /// The exact law of the number of clusters K_n.
    Kdist(TableArgs),
    /// Draw partitions.
    Sample(SampleArgs),
    /// Time the sequential sampler against the rejection baseline.
    Bench(BenchArgs),
    /// Run the cross-check suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Ondemand,
    Precomputed,
}

impl From<ModeArg> for SamplerMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Ondemand => SamplerMode::OnDemand,
            ModeArg::Precomputed => SamplerMode::Precomputed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Fast,
    Naive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Fast => Method::Fast,
            MethodArg::Naive => Method::Naive,
        }
    }
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Cluster-size distribution as inline JSON or a path to a JSON file,
    /// e.g. '{"kind":"shifted_poisson","params":{"lambda":6}}'.
    #[arg(long)]
    pub spec: String,
    /// Number of items.
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, default_value_t = 1)]
    pub samples: usize,
    #[arg(long, env = "ESC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "fast")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "ondemand")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Samples drawn per trial; table construction is paid once per trial.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Trial t uses seed + t.
    #[arg(long, env = "ESC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Benchmark one method only; both by default.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long, value_enum, default_value = "ondemand")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
    pub max_attempts: u64,
    /// Include label assignment in the timed work.
    #[arg(long)]
    pub labels: bool,
    /// Run trials in parallel.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Largest n for checks done in exact arithmetic.
    #[arg(long, default_value_t = verify::DEFAULT_MAX_N)]
    pub max_n: usize,
    #[arg(long, env = "ESC_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// A failed command: message plus process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Unreachable { .. } => EXIT_UNREACHABLE,
            Error::Exhausted { .. } => 1,
            Error::InvalidParameter(_) | Error::Argument(_) | Error::Capability(_) => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Inline JSON if it looks like an object, otherwise a file path.
pub fn load_spec(arg: &str) -> Result<ClusterSizeSpec, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| usage(format!("cannot read spec {arg}: {e}")))?
    };
    Ok(ClusterSizeSpec::from_json(&text)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> CmdResult {
    let result = match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| Failure {
        code: 1,
        message: format!("write failed: {e}"),
    })
}

fn spec_value(spec: &ClusterSizeSpec) -> serde_json::Value {
    serde_json::to_value(spec).expect("spec serialization cannot fail")
}

fn cmd_un(args: &TableArgs) -> CmdResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = args.spec.n;
    let table = renewal_table(&spec, n);
    let closed: Option<Vec<f64>> = (0..=n)
        .map(|m| prob_en_closed(&spec, m).map(f64::exp))
        .collect::<Result<_, _>>()
        .ok();
    let u: Vec<f64> = (0..=n).map(|m| table.u(m)).collect();
    let text = match args.output.format {
        Format::Csv => {
            let mut s = String::from("m,u_m,log_u_m");
            if closed.is_some() {
                s.push_str(",u_m_closed");
            }
            s.push('\n');
            for m in 0..=n {
                write!(s, "{m},{},{}", u[m], table.log_u()[m]).unwrap();
                if let Some(c) = &closed {
                    write!(s, ",{}", c[m]).unwrap();
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut v = json!({
                "n": n,
                "spec": spec_value(&spec),
                "u": u,
                "log_u": table.log_u(),
            });
            if let Some(c) = closed {
                v["u_closed"] = json!(c);
            }
            format!("{v}\n")
        }
    };
    emit(&args.output.out, &text)
}

fn cmd_kdist(args: &TableArgs) -> CmdResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = args.spec.n;
    let comp = composition_table(&spec, n)?;
    let dist = k_distribution(&comp, &renewal_table(&spec, n))?;
    let closed = k_distribution_closed(&spec, n).ok();
    let text = match args.output.format {
        Format::Csv => {
            let mut s = String::from("k,prob");
            if closed.is_some() {
                s.push_str(",prob_closed");
            }
            s.push('\n');
            for k in 1..=n {
                write!(s, "{k},{}", dist.prob(k)).unwrap();
                if let Some(c) = &closed {
                    write!(s, ",{}", c.prob(k)).unwrap();
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let mut v = json!({
                "n": n,
                "spec": spec_value(&spec),
                "probs": dist.probs(),
            });
            if let Some(c) = closed {
                v["probs_closed"] = json!(c.probs());
            }
            format!("{v}\n")
        }
    };
    emit(&args.output.out, &text)
}

#[derive(serde::Serialize)]
struct PartitionLine<'a> {
    sizes: &'a [usize],
    labels: &'a [usize],
}

fn cmd_sample(args: &SampleArgs) -> CmdResult {
    let spec = load_spec(&args.spec.spec)?;
    let n = args.spec.n;
    if n == 0 {
        return Err(usage("sampling needs n >= 1"));
    }
    let mut rng = rng_from_seed(args.seed);
    let partitions: Vec<Partition> = match args.method {
        MethodArg::Fast => {
            let tables = prepare(&spec, n, args.mode.into())?;
            (0..args.samples)
                .map(|_| sample_partition(&tables, &mut rng))
                .collect()
        }
        MethodArg::Naive => {
            // Fail fast with the same message as the fast method.
            if renewal_table(&spec, n).u(n) == 0.0 {
                return Err(Error::Unreachable { n }.into());
            }
            let sampler = NaiveSampler::new(&spec, n, args.max_attempts)?;
            let mut out = Vec::with_capacity(args.samples);
            for _ in 0..args.samples {
                let draw = sampler.sample(&mut rng)?;
                out.push(assemble_partition(draw.sizes, &mut rng));
            }
            out
        }
    };
    let mut s = String::new();
    match args.output.format {
        Format::Json => {
            for p in &partitions {
                let line = PartitionLine {
                    sizes: p.sizes().sizes(),
                    labels: p.labels(),
                };
                writeln!(s, "{}", serde_json::to_string(&line).expect("serializes")).unwrap();
            }
        }
        Format::Csv => {
            s.push_str("sample,cluster,size\n");
            for (i, p) in partitions.iter().enumerate() {
                for (j, size) in p.sizes().sizes().iter().enumerate() {
                    writeln!(s, "{},{},{size}", i + 1, j + 1).unwrap();
                }
            }
        }
    }
    emit(&args.output.out, &s)
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let spec = load_spec(&args.spec.spec)?;
    if args.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if args.trials == 0 {
        return Err(usage("--trials must be positive"));
    }
    let config = BenchConfig {
        samples: args.samples,
        trials: args.trials,
        seed: args.seed,
        mode: args.mode.into(),
        max_attempts: args.max_attempts,
        methods: match args.method {
            Some(m) => vec![m.into()],
            None => vec![Method::Fast, Method::Naive],
        },
        labels: args.labels,
        parallel: args.parallel,
        ..BenchConfig::new(spec, args.spec.n)
    };
    let records = bench::run(&config)?;
    for r in records.iter().filter(|r| r.exhausted) {
        eprintln!(
            "warning: naive sampler exhausted {} attempts in trial {}",
            args.max_attempts, r.trial
        );
    }
    let mut s = String::new();
    match args.output.format {
        Format::Csv => {
            writeln!(s, "{}", bench::CSV_HEADER).unwrap();
            for r in &records {
                writeln!(s, "{}", r.csv_row()).unwrap();
            }
        }
        Format::Json => {
            for r in &records {
                writeln!(s, "{}", serde_json::to_string(r).expect("record serializes")).unwrap();
            }
        }
    }
    emit(&args.output.out, &s)
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let config = VerifyConfig {
        max_n: args.max_n,
        inject_fault: args.inject_fault,
        seed: args.seed,
    };
    if config.max_n == 0 || config.max_n > esc_core::renewal::DEFAULT_EXACT_BOUND {
        return Err(usage(format!(
            "--max-n must be in 1..={}",
            esc_core::renewal::DEFAULT_EXACT_BOUND
        )));
    }
    let report = verify::run(&config);
    emit(&args.out, &report.to_string())?;
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<_> = report.failures().map(|c| c.name).collect();
        Err(Failure {
            code: EXIT_VERIFY,
            message: format!("verification failed: {}", names.join(", ")),
        })
    }
}

pub fn execute(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Un(a) => cmd_un(a),
        Command::Kdist(a) => cmd_kdist(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

/// Parses arguments, runs the command, and maps failures to exit codes.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
