//! `sodp` — sum-of-digits parity workbench.
//!
//! Builds/loads prime caches and runs the seeded experiment battery,
//! emitting CSV with a `#` metadata header. Exit codes: 0 success,
//! 1 usage error, 2 data/runtime error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use sodp::digits::Base;
use sodp::experiments::{
    self, fit_zscore_curve, full_census, run_base_sweep, run_bias_sweep, run_chebyshev_experiment,
    run_mixed_sweep, run_mod_experiment_with, run_parity_sweep, run_product_experiment,
    DistinguisherConfig, SweepResult,
};
use sodp::prime_store::{build_primes, PrimeStore};
use sodp::report;
use sodp::sources::{SourceKind, SourceSpec};

/// Fixed default seed so fresh checkouts reproduce the reference outputs.
const DEFAULT_SEED: u64 = 0xD161_75C0DE;

const CACHE_DIR_ENV: &str = "SODP_CACHE_DIR";

#[derive(Parser)]
#[command(
    name = "sodp",
    version,
    about = "Digit-sum parity experiments over prime populations",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonOpts {
    /// Master seed for every randomized draw in the run.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cap worker threads (results are identical at any setting).
    #[arg(long)]
    threads: Option<usize>,
    /// Write output here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StoreOpts {
    /// Prime cache file; built and saved if missing. Defaults to
    /// $SODP_CACHE_DIR/primes-<count>.bin when that variable is set.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Population size: the first <count> primes.
    #[arg(long, default_value_t = 50_000_000)]
    count: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Build the first <count> primes and write the cache file.
    Sieve {
        #[command(flatten)]
        store: StoreOpts,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Exact digit-sum parity census over the whole population.
    Census {
        #[command(flatten)]
        store: StoreOpts,
        #[arg(long, default_value_t = 10)]
        base: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Seeded parity trial sweep over sample sizes.
    Sweep {
        #[command(flatten)]
        store: StoreOpts,
        /// Number source: primes, random-odd, or random-all.
        #[arg(long, default_value = "primes")]
        source: String,
        /// Comma-separated sample sizes (default: the reference grid).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 10)]
        base: u64,
        /// Range cap for random sources (default: largest stored prime).
        #[arg(long)]
        range_max: Option<u64>,
        /// Write the quadratic ln-fit of z against sample size here.
        #[arg(long)]
        fit_out: Option<PathBuf>,
        /// Write a plot-ready copy of the sweep table here.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Decide whether a source draws primes or random numbers.
    Distinguish {
        #[command(flatten)]
        store: StoreOpts,
        /// Number source: primes or random-odd.
        #[arg(long, conflicts_with = "input")]
        source: Option<String>,
        /// Read the population from a file (one integer per line) instead.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        sample_size: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 5.0)]
        threshold: f64,
        #[arg(long, default_value_t = 10)]
        base: u64,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Parity sweep over products of two uniform prime draws.
    Products {
        #[command(flatten)]
        store: StoreOpts,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Parity of products from parity-biased random pools, swept over rates.
    BiasSweep {
        #[command(flatten)]
        store: StoreOpts,
        /// Comma-separated bias rates in [0.5, 1.0].
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        #[arg(long, default_value_t = 400_000)]
        sample_size: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        range_max: Option<u64>,
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Tainted samples: random numbers with a trailing block of primes.
    Mixed {
        #[command(flatten)]
        store: StoreOpts,
        /// Comma-separated prime fractions in [0, 1].
        #[arg(long, value_delimiter = ',')]
        fractions: Option<Vec<f64>>,
        #[arg(long, default_value_t = 300_000)]
        sample_size: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        range_max: Option<u64>,
        /// Write the linear fit of z against percent primes here.
        #[arg(long)]
        fit_out: Option<PathBuf>,
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Prime sweep with residue classes mod 4 balanced.
    Chebyshev {
        #[command(flatten)]
        store: StoreOpts,
        /// Comma-separated even sample sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u64>>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Digit parity of p mod r over a primes × random-divisors cross product.
    Modexp {
        #[command(flatten)]
        store: StoreOpts,
        /// Primes are chosen from the first <pool> primes.
        #[arg(long, default_value_t = 1000)]
        pool: usize,
        /// How many of the pool primes to use.
        #[arg(long, default_value_t = 100)]
        subset: usize,
        /// How many random divisors to draw.
        #[arg(long, default_value_t = 1_000_000)]
        randoms: usize,
        #[arg(long)]
        range_max: Option<u64>,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Prime parity trials across even bases.
    Bases {
        #[command(flatten)]
        store: StoreOpts,
        /// Comma-separated even bases.
        #[arg(long, value_delimiter = ',')]
        bases: Option<Vec<u64>>,
        #[arg(long, default_value_t = 100_000)]
        sample_size: u64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: CommonOpts,
    },
}

enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sieve { store, common } => sieve(store, common),
        Command::Census {
            store,
            base,
            common,
        } => census(store, base, common),
        Command::Sweep {
            store,
            source,
            sizes,
            trials,
            base,
            range_max,
            fit_out,
            plot_data,
            common,
        } => sweep(
            store, source, sizes, trials, base, range_max, fit_out, plot_data, common,
        ),
        Command::Distinguish {
            store,
            source,
            input,
            sample_size,
            trials,
            threshold,
            base,
            common,
        } => distinguish_cmd(
            store,
            source,
            input,
            sample_size,
            trials,
            threshold,
            base,
            common,
        ),
        Command::Products {
            store,
            sizes,
            trials,
            plot_data,
            common,
        } => products(store, sizes, trials, plot_data, common),
        Command::BiasSweep {
            store,
            rates,
            sample_size,
            trials,
            range_max,
            plot_data,
            common,
        } => bias_sweep(
            store,
            rates,
            sample_size,
            trials,
            range_max,
            plot_data,
            common,
        ),
        Command::Mixed {
            store,
            fractions,
            sample_size,
            trials,
            range_max,
            fit_out,
            plot_data,
            common,
        } => mixed(
            store,
            fractions,
            sample_size,
            trials,
            range_max,
            fit_out,
            plot_data,
            common,
        ),
        Command::Chebyshev {
            store,
            sizes,
            trials,
            plot_data,
            common,
        } => chebyshev(store, sizes, trials, plot_data, common),
        Command::Modexp {
            store,
            pool,
            subset,
            randoms,
            range_max,
            common,
        } => modexp(store, pool, subset, randoms, range_max, common),
        Command::Bases {
            store,
            bases,
            sample_size,
            trials,
            plot_data,
            common,
        } => bases_cmd(store, bases, sample_size, trials, plot_data, common),
    }
}

// ------------------------------------------------------------- plumbing ----

fn init_threads(common: &CommonOpts) -> Result<(), CliError> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        // ignore the error when a pool already exists (tests call run() twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn parse_base(value: u64) -> Result<Base, CliError> {
    Base::new(value).map_err(|e| usage(e.to_string()))
}

fn check_positive(name: &str, v: u64) -> Result<(), CliError> {
    if v == 0 {
        return Err(usage(format!("--{name} must be at least 1")));
    }
    Ok(())
}

fn check_grid<T: PartialOrd + Copy + std::fmt::Display>(
    name: &str,
    values: &[T],
) -> Result<(), CliError> {
    if values.is_empty() {
        return Err(usage(format!("--{name} needs at least one value")));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage(format!(
            "--{name} values must be strictly increasing"
        )));
    }
    Ok(())
}

fn parse_source(name: &str) -> Result<SourceKind, CliError> {
    match name {
        "primes" => Ok(SourceKind::Primes),
        "random-odd" => Ok(SourceKind::RandomOdd),
        "random-all" => Ok(SourceKind::RandomAll),
        other => Err(usage(format!(
            "unknown source {other:?} (expected primes, random-odd, or random-all)"
        ))),
    }
}

fn default_cache_path(count: u64) -> Option<PathBuf> {
    std::env::var_os(CACHE_DIR_ENV)
        .map(|dir| PathBuf::from(dir).join(format!("primes-{count}.bin")))
}

/// Load the population, building (and caching, when a path is known) on miss.
/// A cache holding more primes than requested serves its leading `count`.
fn resolve_store(opts: &StoreOpts) -> Result<PrimeStore, CliError> {
    check_positive("count", opts.count).map_err(|_| usage("--count must be at least 1"))?;
    let path = opts
        .cache
        .clone()
        .or_else(|| default_cache_path(opts.count));
    if let Some(path) = &path {
        if path.exists() {
            let store = PrimeStore::load_cache(path)
                .with_context(|| format!("loading prime cache {}", path.display()))
                .map_err(CliError::Runtime)?;
            if store.count() < opts.count {
                return Err(CliError::Runtime(anyhow!(
                    "cache {} holds {} primes but --count is {}",
                    path.display(),
                    store.count(),
                    opts.count
                )));
            }
            if store.count() == opts.count {
                return Ok(store);
            }
            let truncated: Vec<u64> = store.primes()[..opts.count as usize].to_vec();
            return Ok(PrimeStore::from_primes(truncated).expect("prefix of a valid store"));
        }
    }
    let store = build_primes(opts.count).map_err(|e| CliError::Runtime(anyhow!(e)))?;
    if let Some(path) = &path {
        store
            .save_cache(path)
            .with_context(|| format!("writing prime cache {}", path.display()))
            .map_err(CliError::Runtime)?;
    }
    Ok(store)
}

/// `# sodp <command> k=v ...` — full config, no timestamps, byte-stable.
fn metadata_header(command: &str, fields: &[(&str, String)]) -> String {
    let mut line = format!("# sodp {command}");
    for (k, v) in fields {
        line.push_str(&format!(" {k}={v}"));
    }
    line.push('\n');
    line
}

fn write_text(target: Option<&Path>, text: &str) -> Result<(), CliError> {
    match target {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(CliError::Runtime),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .context("writing to standard output")
                .map_err(CliError::Runtime)
        }
    }
}

fn emit_sweep(
    header: String,
    sweep: &SweepResult,
    out: Option<&Path>,
    plot_data: Option<&Path>,
) -> Result<(), CliError> {
    let text = format!("{header}{}", report::sweep_csv(sweep));
    write_text(out, &text)?;
    if let Some(plot) = plot_data {
        write_text(Some(plot), &text)?;
    }
    Ok(())
}

fn emit_fit(header: &str, sweep: &SweepResult, fit_out: Option<&Path>) -> Result<(), CliError> {
    if let (Some(path), Some(fit)) = (fit_out, &sweep.fit) {
        let text = format!("{header}{}", report::fit_csv(fit));
        write_text(Some(path), &text)?;
    }
    Ok(())
}

fn seed_field(common: &CommonOpts) -> (&'static str, String) {
    ("seed", format!("{:#x}", common.seed))
}

fn run_err(e: experiments::ExperimentError) -> CliError {
    CliError::Runtime(anyhow!(e))
}

// ---------------------------------------------------------- subcommands ----

fn sieve(store_opts: StoreOpts, common: CommonOpts) -> Result<(), CliError> {
    init_threads(&common)?;
    check_positive("count", store_opts.count)?;
    let path = store_opts
        .cache
        .clone()
        .or_else(|| default_cache_path(store_opts.count))
        .ok_or_else(|| usage("sieve needs --cache or SODP_CACHE_DIR to know where to write"))?;
    let store = build_primes(store_opts.count).map_err(|e| CliError::Runtime(anyhow!(e)))?;
    store
        .save_cache(&path)
        .with_context(|| format!("writing prime cache {}", path.display()))
        .map_err(CliError::Runtime)?;
    let header = metadata_header(
        "sieve",
        &[
            ("count", store_opts.count.to_string()),
            ("cache", path.display().to_string()),
        ],
    );
    let body = format!("count,max_prime\n{},{}\n", store.count(), store.max_prime());
    write_text(common.out.as_deref(), &format!("{header}{body}"))
}

fn census(store_opts: StoreOpts, base: u64, common: CommonOpts) -> Result<(), CliError> {
    init_threads(&common)?;
    let base = parse_base(base)?;
    let store = resolve_store(&store_opts)?;
    let census = full_census(&store, base);
    let header = metadata_header(
        "census",
        &[
            ("count", store_opts.count.to_string()),
            ("base", base.to_string()),
        ],
    );
    write_text(
        common.out.as_deref(),
        &format!("{header}{}", report::census_csv(&census)),
    )
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    store_opts: StoreOpts,
    source: String,
    sizes: Option<Vec<u64>>,
    trials: u64,
    base: u64,
    range_max: Option<u64>,
    fit_out: Option<PathBuf>,
    plot_data: Option<PathBuf>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let base = parse_base(base)?;
    let kind = parse_source(&source)?;
    let sizes = sizes.unwrap_or_else(|| experiments::DEFAULT_SWEEP_GRID.to_vec());
    check_grid("sizes", &sizes)?;
    check_positive("trials", trials)?;
    let store = resolve_store(&store_opts)?;
    let mut spec = SourceSpec::new(kind, common.seed);
    if let Some(m) = range_max {
        spec = spec.with_range_max(m);
    }
    let mut result = run_parity_sweep(&store, &sizes, trials, &spec, base).map_err(run_err)?;
    if result.points.len() >= 4 {
        result.fit = fit_zscore_curve(&result).ok();
    }
    let header = metadata_header(
        "sweep",
        &[
            ("source", source.clone()),
            ("count", store_opts.count.to_string()),
            (
                "sizes",
                sizes
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("trials", trials.to_string()),
            ("base", base.to_string()),
            (
                "range_max",
                range_max.map_or_else(|| "auto".into(), |m| m.to_string()),
            ),
            seed_field(&common),
        ],
    );
    emit_sweep(
        header.clone(),
        &result,
        common.out.as_deref(),
        plot_data.as_deref(),
    )?;
    emit_fit(&header, &result, fit_out.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn distinguish_cmd(
    store_opts: StoreOpts,
    source: Option<String>,
    input: Option<PathBuf>,
    sample_size: u64,
    trials: u64,
    threshold: f64,
    base: u64,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let base = parse_base(base)?;
    check_positive("sample-size", sample_size)?;
    check_positive("trials", trials)?;
    if threshold <= 0.0 {
        return Err(usage("--threshold must be positive"));
    }
    let config = DistinguisherConfig {
        sample_size,
        trials,
        threshold,
        base,
    };
    let (run, source_desc) = match (&source, &input) {
        (Some(name), None) => {
            let kind = parse_source(name)?;
            let store = resolve_store(&store_opts)?;
            let spec = SourceSpec::new(kind, common.seed);
            (
                experiments::distinguish(&store, &spec, &config).map_err(run_err)?,
                name.clone(),
            )
        }
        (None, Some(path)) => {
            let values = read_number_file(path)?;
            (
                experiments::distinguish_population(&values, &config, common.seed)
                    .map_err(run_err)?,
                format!("file:{}", path.display()),
            )
        }
        _ => {
            return Err(usage(
                "distinguish needs exactly one of --source or --input FILE",
            ))
        }
    };
    let header = metadata_header(
        "distinguish",
        &[
            ("source", source_desc),
            ("sample_size", sample_size.to_string()),
            ("trials", trials.to_string()),
            ("threshold", report::fmt_f64(threshold)),
            ("base", base.to_string()),
            seed_field(&common),
        ],
    );
    write_text(
        common.out.as_deref(),
        &format!("{header}{}", report::distinguisher_csv(&run)),
    )
}

/// One nonnegative ASCII-decimal integer per line, LF endings, no blanks.
fn read_number_file(path: &Path) -> Result<Vec<u64>, CliError> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::Runtime)?;
    if text.contains('\r') {
        return Err(CliError::Runtime(anyhow!(
            "{}: expected LF line endings",
            path.display()
        )));
    }
    let mut values = Vec::new();
    let body = text.strip_suffix('\n').unwrap_or(&text);
    for (i, line) in body.split('\n').enumerate() {
        if line.is_empty() {
            return Err(CliError::Runtime(anyhow!(
                "{}:{}: blank line",
                path.display(),
                i + 1
            )));
        }
        let value: u64 = line.parse().map_err(|_| {
            CliError::Runtime(anyhow!(
                "{}:{}: not a nonnegative integer: {line:?}",
                path.display(),
                i + 1
            ))
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(CliError::Runtime(anyhow!("{}: empty file", path.display())));
    }
    Ok(values)
}

fn products(
    store_opts: StoreOpts,
    sizes: Option<Vec<u64>>,
    trials: u64,
    plot_data: Option<PathBuf>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let sizes = sizes.unwrap_or_else(|| experiments::DEFAULT_SWEEP_GRID.to_vec());
    check_grid("sizes", &sizes)?;
    check_positive("trials", trials)?;
    let store = resolve_store(&store_opts)?;
    let result = run_product_experiment(&store, &sizes, trials, common.seed).map_err(run_err)?;
    let header = metadata_header(
        "products",
        &[
            ("count", store_opts.count.to_string()),
            (
                "sizes",
                sizes
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("trials", trials.to_string()),
            seed_field(&common),
        ],
    );
    emit_sweep(header, &result, common.out.as_deref(), plot_data.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn bias_sweep(
    store_opts: StoreOpts,
    rates: Option<Vec<f64>>,
    sample_size: u64,
    trials: u64,
    range_max: Option<u64>,
    plot_data: Option<PathBuf>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let rates = rates.unwrap_or_else(|| experiments::DEFAULT_BIAS_RATES.to_vec());
    check_grid("rates", &rates)?;
    if rates.iter().any(|r| !(0.5..=1.0).contains(r)) {
        return Err(usage("--rates values must lie in [0.5, 1.0]"));
    }
    check_positive("sample-size", sample_size)?;
    check_positive("trials", trials)?;
    // the pool range defaults to the population's range; only the max matters
    let m = match range_max {
        Some(m) => m,
        None => resolve_store(&store_opts)?.max_prime(),
    };
    let result = run_bias_sweep(&rates, sample_size, trials, m, common.seed).map_err(run_err)?;
    let header = metadata_header(
        "bias-sweep",
        &[
            (
                "rates",
                rates
                    .iter()
                    .map(|r| report::fmt_f64(*r))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("sample_size", sample_size.to_string()),
            ("trials", trials.to_string()),
            ("range_max", m.to_string()),
            seed_field(&common),
        ],
    );
    emit_sweep(header, &result, common.out.as_deref(), plot_data.as_deref())
}

#[allow(clippy::too_many_arguments)]
fn mixed(
    store_opts: StoreOpts,
    fractions: Option<Vec<f64>>,
    sample_size: u64,
    trials: u64,
    range_max: Option<u64>,
    fit_out: Option<PathBuf>,
    plot_data: Option<PathBuf>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let fractions = fractions.unwrap_or_else(|| experiments::DEFAULT_PRIME_FRACTIONS.to_vec());
    check_grid("fractions", &fractions)?;
    if fractions.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(usage("--fractions values must lie in [0, 1]"));
    }
    check_positive("sample-size", sample_size)?;
    check_positive("trials", trials)?;
    let store = resolve_store(&store_opts)?;
    let m = range_max.unwrap_or_else(|| store.max_prime());
    let result = run_mixed_sweep(&store, sample_size, &fractions, trials, m, common.seed)
        .map_err(run_err)?;
    let header = metadata_header(
        "mixed",
        &[
            ("count", store_opts.count.to_string()),
            (
                "fractions",
                fractions
                    .iter()
                    .map(|x| report::fmt_f64(*x))
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("sample_size", sample_size.to_string()),
            ("trials", trials.to_string()),
            ("range_max", m.to_string()),
            seed_field(&common),
        ],
    );
    emit_sweep(
        header.clone(),
        &result,
        common.out.as_deref(),
        plot_data.as_deref(),
    )?;
    emit_fit(&header, &result, fit_out.as_deref())
}

fn chebyshev(
    store_opts: StoreOpts,
    sizes: Option<Vec<u64>>,
    trials: u64,
    plot_data: Option<PathBuf>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let sizes = sizes.unwrap_or_else(|| experiments::DEFAULT_SWEEP_GRID.to_vec());
    check_grid("sizes", &sizes)?;
    if let Some(odd) = sizes.iter().find(|&&s| s % 2 != 0) {
        return Err(usage(format!(
            "--sizes must be even for residue balancing (got {odd})"
        )));
    }
    check_positive("trials", trials)?;
    let store = resolve_store(&store_opts)?;
    let result = run_chebyshev_experiment(&store, &sizes, trials, common.seed).map_err(run_err)?;
    let header = metadata_header(
        "chebyshev",
        &[
            ("count", store_opts.count.to_string()),
            (
                "sizes",
                sizes
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("trials", trials.to_string()),
            seed_field(&common),
        ],
    );
    emit_sweep(header, &result, common.out.as_deref(), plot_data.as_deref())
}

fn modexp(
    store_opts: StoreOpts,
    pool: usize,
    subset: usize,
    randoms: usize,
    range_max: Option<u64>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    if subset == 0 || pool == 0 || randoms == 0 {
        return Err(usage("--pool, --subset, and --randoms must be at least 1"));
    }
    if subset > pool {
        return Err(usage(format!("--subset {subset} exceeds --pool {pool}")));
    }
    if pool as u64 > store_opts.count {
        return Err(usage(format!(
            "--pool {pool} exceeds --count {}",
            store_opts.count
        )));
    }
    let store = resolve_store(&store_opts)?;
    let m = range_max.unwrap_or_else(|| store.max_prime());
    let summary =
        run_mod_experiment_with(&store, pool, subset, randoms, m, common.seed).map_err(run_err)?;
    let header = metadata_header(
        "modexp",
        &[
            ("count", store_opts.count.to_string()),
            ("pool", pool.to_string()),
            ("subset", subset.to_string()),
            ("randoms", randoms.to_string()),
            ("range_max", m.to_string()),
            seed_field(&common),
        ],
    );
    let body = report::summary_csv("sample_size", summary.sample_size as f64, &summary);
    write_text(common.out.as_deref(), &format!("{header}{body}"))
}

fn bases_cmd(
    store_opts: StoreOpts,
    bases: Option<Vec<u64>>,
    sample_size: u64,
    trials: u64,
    plot_data: Option<PathBuf>,
    common: CommonOpts,
) -> Result<(), CliError> {
    init_threads(&common)?;
    let bases = bases.unwrap_or_else(|| experiments::DEFAULT_EVEN_BASES.to_vec());
    check_grid("bases", &bases)?;
    let mut parsed = Vec::with_capacity(bases.len());
    for &b in &bases {
        let base = parse_base(b)?;
        if base.is_odd() {
            return Err(usage(format!(
                "base {b} is odd: digit-sum parity is degenerate there"
            )));
        }
        parsed.push(base);
    }
    check_positive("sample-size", sample_size)?;
    check_positive("trials", trials)?;
    let store = resolve_store(&store_opts)?;
    let result =
        run_base_sweep(&store, &parsed, sample_size, trials, common.seed).map_err(run_err)?;
    let header = metadata_header(
        "bases",
        &[
            ("count", store_opts.count.to_string()),
            (
                "bases",
                bases
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            ("sample_size", sample_size.to_string()),
            ("trials", trials.to_string()),
            seed_field(&common),
        ],
    );
    emit_sweep(header, &result, common.out.as_deref(), plot_data.as_deref())
}
