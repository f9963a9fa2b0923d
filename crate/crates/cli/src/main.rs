use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use exq::bench::{run_separation, BenchConfig};
use exq::models::json::model_to_value;
use exq::models::random::{random_fbdd, random_mlp, random_perceptron};
use exq::models::{families, parse_model, Formula};
use exq::query::{run_query, Method, QueryKind, QueryRequest};
use exq::reduce::{reduce_ssp, reduce_taut, SspInstance};
use exq::selftest::{run_selftest, Mutation, SelftestOptions};
use exq::{parse_instance, Error, FeatureSubset, Limits, Model};

#[derive(Parser)]
#[command(name = "exq", version, about = "Exact explanation queries over FBDDs, perceptrons and MLPs")]
struct Cli {
    /// Worker threads for parallel solvers (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one instance.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        instance: String,
    },
    /// Answer an explanation query.
    Query(QueryArgs),
    /// Emit a model file.
    Gen(GenArgs),
    /// Emit a hardness-reduction test vector.
    Reduce {
        #[command(subcommand)]
        problem: ReduceCommand,
    },
    /// Time the polynomial procedures against exact search on growing families.
    Bench(BenchArgs),
    /// Run the randomized invariant suites.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Inject a known fault to confirm the suites catch it.
        #[arg(long, value_enum)]
        mutate: Option<MutateArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QueryArgs {
    /// One of csr, g-csr, msr, g-msr, fn, g-fn, fr, g-fr, cc, g-cc.
    kind: String,
    #[arg(long)]
    model: PathBuf,
    /// Bitstring, feature 1 first.
    #[arg(long)]
    instance: Option<String>,
    /// Comma-separated 1-based indices, or `none`.
    #[arg(long)]
    subset: Option<String>,
    #[arg(long)]
    feature: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "auto")]
    method: String,
    /// Override every desk-scale feature bound.
    #[arg(long)]
    limit_n: Option<usize>,
    /// Wall-clock limit for exact searches.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Include elapsed time in the stats.
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    RandomFbdd,
    RandomPerceptron,
    RandomMlp,
    And,
    Xor,
    MajorityFbdd,
    MajorityPerceptron,
    PairChain,
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Node budget for random FBDDs.
    #[arg(long, default_value_t = 16)]
    nodes: usize,
    /// Weight magnitude bound for random perceptrons and MLPs.
    #[arg(long, default_value_t = 5)]
    weight_bound: i64,
    /// Hidden layer widths for random MLPs, comma-separated.
    #[arg(long, default_value = "3")]
    hidden: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// Subset sum to global sufficiency on a perceptron.
    Ssp {
        /// Comma-separated positive integers.
        #[arg(long)]
        values: String,
        #[arg(long)]
        target: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tautology to global necessity on an MLP.
    Taut {
        /// Formula over x1..xn using `!`, `&`, `|` and parentheses.
        #[arg(long)]
        formula: String,
        /// Number of variables (defaults to the largest index used).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        limit_n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 32)]
    max_n: usize,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Perceptron sizes for the local columns, comma-separated.
    #[arg(long, default_value = "10,100,1000,10000")]
    perceptron_sizes: String,
    #[arg(long, default_value_t = 40)]
    enumeration_max_n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutateArg {
    FbddGCsr,
}

enum Failure {
    Core(Error),
    Io(String),
    SelftestFailed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::SelftestFailed) => ExitCode::from(1),
        Err(Failure::Io(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            match e {
                Error::DeskScale { .. } | Error::Budget { .. } | Error::Timeout(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Eval { model, instance } => {
            let model = load_model(&model)?;
            let x = parse_instance(&instance)?;
            let label = model.evaluate(&x)?;
            emit(&json!({ "instance": x.to_string(), "output": u8::from(label) }), None)
        }
        Command::Query(args) => query(args),
        Command::Gen(args) => {
            let model = generate(&args)?;
            emit(&model_to_value(&model), args.out.as_deref())
        }
        Command::Reduce { problem } => reduce(problem),
        Command::Bench(args) => bench(args),
        Command::Selftest { seed, trials, mutate, out } => {
            let mutation = mutate.map(|MutateArg::FbddGCsr| Mutation::FbddGCsr);
            let report = run_selftest(&SelftestOptions { seed, trials, mutation })?;
            let value = serde_json::to_value(&report).map_err(|e| Failure::Io(e.to_string()))?;
            emit(&value, out.as_deref())?;
            if report.passed { Ok(()) } else { Err(Failure::SelftestFailed) }
        }
    }
}

fn query(args: QueryArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let n = model.num_features();
    let kind: QueryKind = args.kind.parse()?;
    let mut req = QueryRequest::new(kind);
    req.method = args.method.parse::<Method>()?;
    req.instance = args.instance.as_deref().map(parse_instance).transpose()?;
    req.subset = args.subset.as_deref().map(|s| FeatureSubset::parse(s, n)).transpose()?;
    req.feature = args.feature;
    req.k = args.k;
    if let Some(limit) = args.limit_n {
        req.limits = req.limits.with_feature_limit(limit);
    }
    if let Some(ms) = args.timeout_ms {
        req.limits.deadline = Some(std::time::Instant::now() + Duration::from_millis(ms));
    }
    let result = run_query(&model, &req)?;
    emit(&result.to_json(args.timing), None)
}

fn generate(args: &GenArgs) -> Result<Model, Failure> {
    let n = args.n;
    Ok(match args.family {
        Family::RandomFbdd => Model::Fbdd(random_fbdd(n, args.nodes, args.seed)?),
        Family::RandomPerceptron => Model::Perceptron(random_perceptron(n, args.weight_bound, args.seed)?),
        Family::RandomMlp => {
            let mut widths = vec![n];
            widths.extend(parse_list::<usize>(&args.hidden)?);
            widths.push(1);
            Model::Mlp(random_mlp(&widths, args.weight_bound, args.seed)?)
        }
        Family::And => Model::Fbdd(families::and_fbdd()),
        Family::Xor => Model::Fbdd(families::xor_fbdd()),
        Family::MajorityFbdd => Model::Fbdd(families::majority_fbdd(n)),
        Family::MajorityPerceptron => Model::Perceptron(families::majority_perceptron(n)),
        Family::PairChain => Model::Fbdd(families::pair_chain_fbdd(n)),
    })
}

fn reduce(problem: ReduceCommand) -> Result<(), Failure> {
    match problem {
        ReduceCommand::Ssp { values, target, out } => {
            let ssp = SspInstance::new(parse_list(&values)?, target)?;
            let v = reduce_ssp(&ssp)?;
            let value = json!({
                "model": model_to_value(&Model::Perceptron(v.model)),
                "subset": v.subset.members(),
                "expect_g_csr": v.expect_g_csr,
                "k": v.k,
                "expect_g_msr": v.expect_g_msr,
            });
            emit(&value, out.as_deref())
        }
        ReduceCommand::Taut { formula, n, limit_n, out } => {
            let psi = Formula::parse(&formula)?;
            let mut limits = Limits::default();
            if let Some(limit) = limit_n {
                limits = limits.with_feature_limit(limit);
            }
            let v = reduce_taut(&psi, n.unwrap_or(0), &limits)?;
            let value = json!({
                "formula": v.formula.to_string(),
                "model": model_to_value(&Model::Mlp(v.model)),
                "feature": v.feature,
                "expect_g_fn": v.expect_g_fn,
            });
            emit(&value, out.as_deref())
        }
    }
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let config = BenchConfig {
        max_n: args.max_n,
        timeout: Duration::from_millis(args.timeout_ms),
        perceptron_sizes: parse_list(&args.perceptron_sizes)?,
        enumeration_max_n: args.enumeration_max_n,
        seed: args.seed,
    };
    let report = run_separation(&config)?;
    match args.format {
        Format::Json => emit(&report.to_json(), args.out.as_deref()),
        Format::Csv => write_text(&report.to_csv(), args.out.as_deref()),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>, Failure> {
    text.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| Error::Parse(format!("invalid list entry {t:?}")).into()))
        .collect()
}

fn load_model(path: &Path) -> Result<Model, Failure> {
    let bytes = fs::read(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(parse_model(&bytes)?)
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let mut line = serde_json::to_string(value).map_err(|e| Failure::Io(e.to_string()))?;
    line.push('\n');
    write_text(&line, out)
}

fn write_text(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    let written = match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    written.map_err(Failure::Io)
}
