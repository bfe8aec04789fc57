//! Command-line front end: single runs, sweep grids, paired scheme
//! comparisons, oracle checks and the effective default configuration.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use tsp_sim::config::{write_results, ResultRow, Scenario};
use tsp_sim::engine::{run_traced, SimConfig};
use tsp_sim::metrics::{summarize, MetricsReport};
use tsp_sim::oracle::{compare_with_sim, comparison_grid};
use tsp_sim::tsp_buffer::TspVariant;

#[derive(Parser)]
#[command(
    name = "tsp-sim",
    about = "HSDPA downlink simulator: time-space priority buffering with Iub credit flow control",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Scenario file; omitted means the built-in defaults.
    #[arg(long, env = "TSP_SIM_SCENARIO")]
    scenario: Option<PathBuf>,
    /// Results CSV path.
    #[arg(long, env = "TSP_SIM_OUT")]
    out: Option<PathBuf>,
    /// Override: run only this seed.
    #[arg(long, env = "TSP_SIM_SEED")]
    seed: Option<u64>,
    /// Worker threads for grid execution.
    #[arg(long, env = "TSP_SIM_JOBS", default_value_t = 1)]
    jobs: usize,
    /// Emit a grant trace line per credit message on stderr.
    #[arg(long, short, env = "TSP_SIM_VERBOSE", default_value_t = false)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single (variant, rate, seed) cell and print the summary block.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Buffer variant; defaults to the scenario's first listed variant.
        #[arg(long)]
        variant: Option<String>,
        /// FTP rate in kbps; defaults to the scenario's first rate.
        #[arg(long)]
        rate_kbps: Option<f64>,
        /// Directory for per-event CSV traces.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
    },
    /// Run the full scenario grid (variants x rates x seeds) to CSV.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run both variants with paired seeds and print them side by side.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Check the engine's queue mechanics against the exact chain.
    OracleCheck {
        /// Restrict the grid to buffer sizes up to this n.
        #[arg(long)]
        max_n: Option<usize>,
        /// Coarse arrival grid ({0.1,0.5}^2 instead of {0.1,0.5,0.9}^2).
        #[arg(long, default_value_t = false)]
        quick: bool,
        /// Slots of degenerate simulation per cell.
        #[arg(long, default_value_t = 10_000_000)]
        slots: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the effective default configuration.
    Defaults,
}

fn load_scenario(common: &CommonArgs) -> Result<Scenario, String> {
    let mut scenario = match &common.scenario {
        Some(path) => Scenario::load(path).map_err(|e| format!("{}: {}", path.display(), e))?,
        None => {
            let s = Scenario::default();
            s.validate().map_err(|e| e.to_string())?;
            s
        }
    };
    if let Some(seed) = common.seed {
        scenario.seeds = vec![seed];
    }
    Ok(scenario)
}

fn parse_variant(s: &str) -> Result<TspVariant, String> {
    match s {
        "original" => Ok(TspVariant::Original),
        "enhanced" => Ok(TspVariant::Enhanced),
        other => Err(format!("unknown variant `{}` (expected original|enhanced)", other)),
    }
}

/// Run every cell of the grid, fanning out across `jobs` threads. Reports
/// come back keyed, so assembly order does not matter.
fn run_grid(scenario: &Scenario, jobs: usize, verbose: bool) -> Result<Vec<ResultRow>, String> {
    let mut cells: Vec<SimConfig> = Vec::new();
    for &variant in &scenario.variants {
        for &rate in &scenario.rates_kbps {
            for &seed in &scenario.seeds {
                cells.push(scenario.sim_config(variant, rate, seed));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<ResultRow>> = Mutex::new(Vec::with_capacity(cells.len()));
    let first_error: Mutex<Option<String>> = Mutex::new(None);
    let workers = jobs.max(1).min(cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= cells.len() {
                    break;
                }
                match run_traced(&cells[idx], None, verbose) {
                    Ok(report) => results.lock().unwrap().push(ResultRow {
                        scenario: scenario.name.clone(),
                        report,
                    }),
                    Err(e) => {
                        first_error.lock().unwrap().get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().unwrap() {
        return Err(e);
    }
    Ok(results.into_inner().unwrap())
}

fn mean_of(rows: &[&MetricsReport], f: impl Fn(&MetricsReport) -> Option<f64>) -> Option<f64> {
    let values: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
    summarize(&values).map(|s| s.mean)
}

fn cmd_run(
    common: &CommonArgs,
    variant: Option<&str>,
    rate_kbps: Option<f64>,
    trace_dir: Option<&PathBuf>,
) -> Result<(), String> {
    let scenario = load_scenario(common)?;
    let variant = match variant {
        Some(v) => parse_variant(v)?,
        None => scenario.variants[0],
    };
    let rate = rate_kbps.unwrap_or(scenario.rates_kbps[0]);
    let seed = scenario.seeds[0];
    let cfg = scenario.sim_config(variant, rate, seed);
    let report = run_traced(&cfg, trace_dir.map(|p| p.as_path()), common.verbose)?;
    print!("{}", report.summary());
    if let Some(out) = &common.out {
        write_results(
            &[ResultRow { scenario: scenario.name.clone(), report }],
            out,
        )
        .map_err(|e| e.to_string())?;
        println!("results written to {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(common: &CommonArgs) -> Result<(), String> {
    let scenario = load_scenario(common)?;
    let rows = run_grid(&scenario, common.jobs, common.verbose)?;
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("results.csv"));
    write_results(&rows, &out).map_err(|e| e.to_string())?;
    println!(
        "{} runs ({} variants x {} rates x {} seeds) written to {}",
        rows.len(),
        scenario.variants.len(),
        scenario.rates_kbps.len(),
        scenario.seeds.len(),
        out.display()
    );
    Ok(())
}

fn cmd_compare(common: &CommonArgs) -> Result<(), String> {
    let mut scenario = load_scenario(common)?;
    if scenario.variants.len() < 2 {
        scenario.variants = vec![TspVariant::Original, TspVariant::Enhanced];
        scenario.validate().map_err(|e| e.to_string())?;
    }
    let rows = run_grid(&scenario, common.jobs, common.verbose)?;
    println!(
        "{:>9}  {:>12} {:>12}  {:>11} {:>11}  {:>10} {:>10}  {:>9} {:>9}",
        "rate_kbps",
        "nrt_loss(O)",
        "nrt_loss(E)",
        "thr_kbps(O)",
        "thr_kbps(E)",
        "rt_loss(O)",
        "rt_loss(E)",
        "delay(O)",
        "delay(E)"
    );
    let mut rates = scenario.rates_kbps.clone();
    rates.sort_by(f64::total_cmp);
    for &rate in &rates {
        let slice = |variant: TspVariant| -> Vec<&MetricsReport> {
            rows.iter()
                .map(|r| &r.report)
                .filter(|r| r.variant == variant && r.ftp_rate_kbps == rate)
                .collect()
        };
        let orig = slice(TspVariant::Original);
        let enh = slice(TspVariant::Enhanced);
        let fmt = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_else(|| "-".into());
        let fmt_ms = |v: Option<f64>| v.map(|x| format!("{:.3}", x * 1e3)).unwrap_or_else(|| "-".into());
        let fmt_kbps =
            |v: Option<f64>| v.map(|x| format!("{:.2}", x / 1e3)).unwrap_or_else(|| "-".into());
        println!(
            "{:>9}  {:>12} {:>12}  {:>11} {:>11}  {:>10} {:>10}  {:>9} {:>9}",
            rate,
            fmt(mean_of(&orig, |r| r.nrt_loss_prob)),
            fmt(mean_of(&enh, |r| r.nrt_loss_prob)),
            fmt_kbps(mean_of(&orig, |r| Some(r.nrt_throughput_bps))),
            fmt_kbps(mean_of(&enh, |r| Some(r.nrt_throughput_bps))),
            fmt(mean_of(&orig, |r| r.rt_loss_prob)),
            fmt(mean_of(&enh, |r| r.rt_loss_prob)),
            fmt_ms(mean_of(&orig, |r| r.rt_mean_delay_s)),
            fmt_ms(mean_of(&enh, |r| r.rt_mean_delay_s)),
        );
    }
    if let Some(out) = &common.out {
        write_results(&rows, out).map_err(|e| e.to_string())?;
        println!("per-run results written to {}", out.display());
    }
    Ok(())
}

fn cmd_oracle_check(max_n: Option<usize>, quick: bool, slots: u64, seed: u64) -> Result<(), String> {
    let grid = comparison_grid(max_n, quick);
    println!(
        "{:>3} {:>3} {:>5} {:>6}  {:>12} {:>12}  {:>12} {:>12}  {:>7} {:>7}  result",
        "n", "r", "p_rt", "p_nrt", "exact_rt", "sim_rt", "exact_nrt", "sim_nrt", "z_rt", "z_nrt"
    );
    let mut failures = 0usize;
    for (idx, model) in grid.iter().enumerate() {
        let cell = compare_with_sim(model, slots, seed.wrapping_add(idx as u64))
            .map_err(|e| e.to_string())?;
        let ok = cell.within(3.0);
        failures += usize::from(!ok);
        let opt = |v: Option<f64>| v.map(|x| format!("{:.6}", x)).unwrap_or_else(|| "-".into());
        println!(
            "{:>3} {:>3} {:>5.1} {:>6.1}  {:>12.6} {:>12} {:>12.6} {:>12}  {:>7.2} {:>7.2}  {}",
            model.n,
            model.r,
            model.p_rt,
            model.p_nrt,
            cell.exact_rt_block,
            opt(cell.sim_rt_block),
            cell.exact_nrt_drop,
            opt(cell.sim_nrt_drop),
            cell.z_rt,
            cell.z_nrt,
            if ok { "pass" } else { "FAIL" }
        );
    }
    if failures > 0 {
        return Err(format!("{} of {} cells deviate beyond 3 sigma", failures, grid.len()));
    }
    println!("all {} cells within 3 sigma", grid.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, variant, rate_kbps, trace_dir } => {
            cmd_run(common, variant.as_deref(), *rate_kbps, trace_dir.as_ref())
        }
        Command::Sweep { common } => cmd_sweep(common),
        Command::Compare { common } => cmd_compare(common),
        Command::OracleCheck { max_n, quick, slots, seed } => {
            cmd_oracle_check(*max_n, *quick, *slots, *seed)
        }
        Command::Defaults => {
            print!("{}", Scenario::default().defaults_text());
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::FAILURE
        }
    }
}
