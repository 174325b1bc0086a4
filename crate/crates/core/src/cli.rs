//! The `creadet` command line.
//!
//! Exit codes: 0 on success (or when `gtest` accepts the null hypothesis),
//! 2 on usage or input errors, 3 when `gtest` rejects the null hypothesis.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::creativity::{self, EvalPoints, Kernel, ModelClass, Variant, Window, WindowSpec};
use crate::format_f64;
use crate::ingest::{self, TimedStream};
use crate::markov::{self, FitOptions};
use crate::simulator::{self, Schedule, StyleCatalog, FIGURE2_EPSILONS};
use crate::stats::{self, CountVector, StatisticKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_REJECT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "creadet", version, about = "Likelihood-ratio change-point detection for event streams")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true, env = "CREADET_LOG", default_value = "warn")]
    log: String,
    /// Where the primary output goes; `-` is standard output.
    #[arg(long, global = true, default_value = "-")]
    output: String,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RuleArg {
    /// Reject when G > 2ν; the p-value is computed from G.
    G,
    /// Reject when χ² > ν; the p-value is computed from χ².
    Chi2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-way G / χ² test between two `bin,count` histogram files.
    Gtest {
        /// First histogram CSV.
        r: PathBuf,
        /// Second histogram CSV.
        s: PathBuf,
        /// Which statistic drives the p-value and decision.
        #[arg(long, value_enum, default_value = "g")]
        rule: RuleArg,
    },
    /// Fit a Markov chain to a state CSV and print it as JSON.
    Fit {
        /// State CSV (`time,state`).
        #[arg(long)]
        input: PathBuf,
        /// Additive smoothing for initial and transition counts.
        #[arg(long, default_value_t = 0.0)]
        pseudocount: f64,
    },
    /// Sample a play schedule and write it as a state CSV.
    Simulate {
        /// `paper` for the 8×300 reference schedule, or a schedule JSON file
        /// (its `seed` is replaced by --seed).
        #[arg(long, default_value = "paper")]
        schedule: String,
        /// Noise added to every chain parameter before renormalizing
        /// [default: 0, or the schedule file's `epsilon`].
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
        /// Style catalog JSON overriding or extending the built-in styles.
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Compute the creativity trace of a state CSV.
    Scan {
        /// State CSV (`time,state`).
        #[arg(long)]
        input: PathBuf,
        /// Model class fitted to each window.
        #[arg(long, default_value = "markov")]
        model: ModelClass,
        /// `pooled` (split vs one pooled model) or `future` (split vs future model).
        #[arg(long, default_value = "pooled")]
        variant: Variant,
        /// Past window: an event count or `all`.
        #[arg(long, default_value = "all")]
        kappa: Window,
        /// Future window: an event count or `all`.
        #[arg(long, default_value = "all")]
        tau: Window,
        /// Evaluation points: `all` or `offscreen`.
        #[arg(long, default_value = "offscreen")]
        eval: EvalPoints,
        /// Comma-separated smoothing widths for a multi-scale scan (multinomial only).
        #[arg(long, value_delimiter = ',')]
        sigma: Option<Vec<f64>>,
        /// Smoothing kernel for `--sigma`: `box` or `exponential`.
        #[arg(long, default_value = "box")]
        kernel: Kernel,
        /// Additive smoothing when fitting window models; required > 0 for `--variant future`.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        pseudocount: f64,
    },
    /// Reproduce the four-noise-level simulation; traces go to files, a summary to --output.
    Figure2 {
        /// Directory receiving `figure2_eps<ε>.csv`.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Quantize a touch CSV (`time,x,y,down`) into a state CSV.
    Ingest {
        /// Touch CSV.
        #[arg(long)]
        input: PathBuf,
    },
    /// Print the built-in style catalog as JSON.
    DumpStyles,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new().parse_filters(&cli.global.log).target(env_logger::Target::Stderr).try_init();
    log::info!("seed = {}", cli.global.seed);
    match execute(&cli) {
        Ok(code) => code,
        // Downstream closed the pipe (e.g. `| head`): not our error.
        Err(e) if is_broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().filter_map(|c| c.downcast_ref::<io::Error>()).any(|io| io.kind() == io::ErrorKind::BrokenPipe)
}

fn open_output(path: &str) -> anyhow::Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path).with_context(|| format!("creating {path}"))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Gtest { r, s, rule } => gtest(r, s, *rule, &g.output),
        Command::Fit { input, pseudocount } => {
            let timed = ingest::read_state_csv(input)?;
            let opts = FitOptions::with_pseudocount(*pseudocount)?;
            let model = markov::fit(&timed.stream, timed.stream.n_states(), opts)?;
            let mut out = open_output(&g.output)?;
            writeln!(out, "{}", model.to_json())?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Simulate { schedule, epsilon, catalog } => {
            let catalog = match catalog {
                Some(p) => StyleCatalog::from_json(&read_text(p)?)?,
                None => StyleCatalog::builtin(),
            };
            let mut plan =
                if schedule == "paper" { Schedule::reference(0.0, g.seed) } else { Schedule::from_json(&read_text(Path::new(schedule))?)? };
            if let Some(eps) = epsilon {
                plan.epsilon = *eps;
            }
            plan.seed = g.seed;
            let stream = simulator::run_schedule(&plan, &catalog)?;
            log::info!("simulated {} events in {} sessions", stream.len(), stream.n_sessions());
            let mut out = open_output(&g.output)?;
            ingest::write_state_csv(&ingest::index_times(stream), &mut out)?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Scan { input, model, variant, kappa, tau, eval, sigma, kernel, pseudocount } => {
            if *variant == Variant::SplitVsFuture && (pseudocount.is_nan() || *pseudocount <= 0.0) {
                bail!("--variant future requires --pseudocount > 0");
            }
            if sigma.is_some() && *model != ModelClass::Multinomial {
                bail!("--sigma requires --model multinomial");
            }
            let opts = FitOptions::with_pseudocount(*pseudocount)?;
            let timed = ingest::read_state_csv(input)?;
            let spec = WindowSpec { kappa: *kappa, tau: *tau, eval_points: *eval, variant: *variant };
            let traces = match sigma {
                Some(sigmas) => creativity::multiscale_scan(&timed.stream, &spec, sigmas, *kernel, *model, opts)?,
                None => vec![creativity::scan(&timed.stream, &spec, *model, opts)?],
            };
            let mut out = open_output(&g.output)?;
            creativity::write_traces_csv(&traces, &mut out)?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Figure2 { out_dir } => {
            std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            let results = simulator::figure2_experiment(&FIGURE2_EPSILONS, g.seed)?;
            let mut out = open_output(&g.output)?;
            writeln!(out, "epsilon,points,peak_t,peak_c_scaled,median_c_scaled,peak_to_median")?;
            for (eps, trace) in &results {
                let path = out_dir.join(figure2_file_name(*eps));
                let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                let mut w = BufWriter::new(f);
                creativity::write_traces_csv(std::slice::from_ref(trace), &mut w)?;
                w.flush()?;
                let s = simulator::summarize(trace).context("empty trace")?;
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    format_f64(*eps),
                    s.points,
                    s.peak_t,
                    format_f64(s.peak_c_scaled),
                    format_f64(s.median_c_scaled),
                    format_f64(s.peak_to_median)
                )?;
            }
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::Ingest { input } => {
            let events = ingest::read_touch_csv(input)?;
            let timed: TimedStream = ingest::quantize(&events, &Default::default())?;
            let mut out = open_output(&g.output)?;
            ingest::write_state_csv(&timed, &mut out)?;
            out.flush()?;
            Ok(EXIT_OK)
        }
        Command::DumpStyles => {
            let mut out = open_output(&g.output)?;
            writeln!(out, "{}", StyleCatalog::builtin().to_json())?;
            out.flush()?;
            Ok(EXIT_OK)
        }
    }
}

/// `figure2_eps<ε>.csv`, with ε in plain decimal (`0`, `0.00001`, ...).
pub fn figure2_file_name(eps: f64) -> String {
    format!("figure2_eps{eps}.csv")
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Reads a `bin,count` histogram; bins may be sparse and unordered.
fn read_histogram(path: &Path) -> anyhow::Result<BTreeMap<usize, f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("{}: missing column `{name}`", path.display()));
    let (bc, cc) = (col("bin")?, col("count")?);
    let mut bins = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line()).unwrap_or(0);
        let bin: usize = rec.get(bc).unwrap_or("").parse().with_context(|| format!("{} row {row}: bad bin", path.display()))?;
        let count: f64 = rec.get(cc).unwrap_or("").parse().with_context(|| format!("{} row {row}: bad count", path.display()))?;
        *bins.entry(bin).or_insert(0.0) += count;
    }
    if bins.is_empty() {
        bail!("{}: empty histogram", path.display());
    }
    Ok(bins)
}

fn gtest(r: &Path, s: &Path, rule: RuleArg, output: &str) -> anyhow::Result<i32> {
    let (hr, hs) = (read_histogram(r)?, read_histogram(s)?);
    let n = hr.keys().chain(hs.keys()).max().map_or(0, |m| m + 1);
    let dense = |h: &BTreeMap<usize, f64>| CountVector::new((0..n).map(|i| h.get(&i).copied().unwrap_or(0.0)).collect());
    let (r, s) = (dense(&hr)?, dense(&hs)?);
    let l = stats::two_way_likelihood_ratio(&r, &s)?;
    let g = stats::g_two_way(&r, &s)?;
    let chi2 = stats::chi2_two_way(&r, &s)?;
    let df = stats::degrees_of_freedom(&r, &s)?;
    let result = match rule {
        RuleArg::G => stats::decide(g, df, StatisticKind::G)?,
        RuleArg::Chi2 => stats::decide(chi2, df, StatisticKind::Chi2)?,
    };
    let mut out = open_output(output)?;
    writeln!(out, "statistic_L,statistic_G,chi2,df,p_value,reject")?;
    writeln!(out, "{},{},{},{},{},{}", format_f64(l), format_f64(g), format_f64(chi2), df, format_f64(result.p_value), result.reject_null)?;
    out.flush()?;
    Ok(if result.reject_null { EXIT_REJECT } else { EXIT_OK })
}
