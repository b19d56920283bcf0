//! `gbar`: solve grid-world scenarios, run benchmark suites and simulate
//! dumped strategies.
//!
//! Exit codes: 0 success (and threshold established, if one was given),
//! 1 computation error, 2 threshold not established, 3 I/O error,
//! 4 invalid input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gbar_core::abstraction::{collision_hotspots, MemberSet, Refinement};
use gbar_core::bench::{csv_table, default_sizes, run_case, suite};
use gbar_core::export::{emit_dot, emit_explicit, emit_prism_pg, emit_prism_pomdp, write_file, StrategyDump, DEFAULT_MAX_STATES};
use gbar_core::gridworld::{build_world_graphs, parse_regions, parse_scenario, Scenario, VisibilityTable};
use gbar_core::pipeline::{run_pipeline, simulate_dump, PipelineOptions};
use gbar_core::solver::DEFAULT_TOLERANCE;
use gbar_core::worldmodel::OpponentPolicy;
use gbar_core::Error;

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_ESTABLISHED: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_INVALID: u8 = 4;

#[derive(Parser)]
#[command(name = "gbar", version, about = "Game-based abstraction for partially observable grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Refine {
    None,
    OneStep,
    Regions,
}

impl From<Refine> for Refinement {
    fn from(r: Refine) -> Self {
        match r {
            Refine::None => Refinement::None,
            Refine::OneStep => Refinement::OneStep,
            Refine::Regions => Refinement::Regions,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Members {
    AllHidden,
    Reachable,
}

impl From<Members> for MemberSet {
    fn from(m: Members) -> Self {
        match m {
            Members::AllHidden => MemberSet::AllHidden,
            Members::Reachable => MemberSet::Reachable,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ExportFormat {
    Explicit,
    Dot,
    External,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Sc1,
    Sc2,
    Sc3,
    Sc4,
    Sc5,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Sc1 => "sc1",
            Suite::Sc2 => "sc2",
            Suite::Sc3 => "sc3",
            Suite::Sc4 => "sc4",
            Suite::Sc5 => "sc5",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Abstract, solve and certify one scenario.
    Solve {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "one-step")]
        refine: Refine,
        /// Which hidden opponent positions the adversary may pick.
        #[arg(long, value_enum, default_value = "all-hidden")]
        members: Members,
        /// TOML file with a `regions` array of cell lists.
        #[arg(long)]
        regions: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        /// Exit with status 2 unless the game value reaches this probability.
        #[arg(long)]
        threshold: Option<f64>,
        /// Monte-Carlo runs of the lifted strategy (0 disables).
        #[arg(long, default_value_t = 0)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the report, strategy dump and exports.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        export: Vec<ExportFormat>,
        /// Print the robot cells with the most collision probability.
        #[arg(long)]
        hotspots: Option<usize>,
    },
    /// Run a benchmark family and print a CSV table.
    Bench {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Grid sizes (sc1, sc2), obstacle counts (sc3) or corridor lengths (sc5).
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print `-` in the timing columns for reproducible output.
        #[arg(long)]
        no_timings: bool,
    },
    /// Simulate a dumped strategy on a scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        strategy: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Step limit per run; defaults to 100 times the grid diameter.
        #[arg(long)]
        horizon: Option<usize>,
    },
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display(), e))
}

fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let s = parse_scenario(&read(path)?)?;
    Ok(s)
}

fn put(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    Ok(write_file(&dir.join(name), text)?)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    scenario: &Path,
    refine: Refine,
    members: Members,
    regions: Option<&Path>,
    tol: f64,
    threshold: Option<f64>,
    runs: usize,
    seed: u64,
    out: Option<&Path>,
    export: &[ExportFormat],
    hotspots: Option<usize>,
) -> Result<u8, Error> {
    let s = load_scenario(scenario)?;
    let regions = match regions {
        Some(p) => Some(parse_regions(&read(p)?)?),
        None => None,
    };
    let opts = PipelineOptions {
        refinement: refine.into(),
        members: members.into(),
        regions,
        tolerance: tol,
        threshold,
        runs,
        seed,
        ..Default::default()
    };
    let result = run_pipeline(&s, &opts)?;
    let r = &result.report;
    println!("scenario        {}", r.scenario_digest);
    println!("refinement      {}", result.game.refinement);
    println!(
        "game            {} states, {} choices, {} transitions",
        result.size.states, result.size.choices, result.size.transitions
    );
    println!("pg_value        {:.6}", r.pg_value);
    println!("certified_value {:.6}", r.certified_value);
    println!("mdp_bound       {:.6}", r.mdp_upper_bound);
    if let Some(mc) = r.monte_carlo {
        println!("monte_carlo     {:.6} [{:.6}, {:.6}] over {} runs", mc.estimate, mc.low, mc.high, mc.runs);
    }
    if let Some(k) = hotspots {
        for (cell, mass) in collision_hotspots(&result.game, &result.graphs, &result.solution).into_iter().take(k) {
            println!("hotspot         ({},{}) {:.6}", cell.x, cell.y, mass);
        }
    }
    if let Some(dir) = out {
        put(dir, "report.toml", &result.report_toml(&opts))?;
        put(dir, "strategy.txt", &result.strategy_dump(&s).to_text())?;
        let mut game = result.game.clone();
        game.name_states(&result.graphs);
        for f in export {
            match f {
                ExportFormat::Explicit => put(dir, "game.explicit", &emit_explicit(&game.model))?,
                ExportFormat::Dot => put(dir, "game.dot", &emit_dot(&game.model, DEFAULT_MAX_STATES)?)?,
                ExportFormat::External => {
                    put(dir, "game.prism", &emit_prism_pg(&game.model)?)?;
                    let graphs = build_world_graphs(&s)?;
                    let text = emit_prism_pomdp(&s, &graphs, &VisibilityTable::new(&s), &OpponentPolicy::Uniform)?;
                    put(dir, "world.prism", &text)?;
                }
            }
        }
    } else if !export.is_empty() {
        return Err(Error::Usage("--export needs --out".into()));
    }
    Ok(match result.verdict {
        Some(true) => {
            println!("threshold       established");
            0
        }
        Some(false) => {
            println!("threshold       not established");
            EXIT_NOT_ESTABLISHED
        }
        None => 0,
    })
}

#[allow(clippy::too_many_arguments)]
fn bench(
    suite_name: Suite,
    sizes: &[usize],
    seed: u64,
    runs: usize,
    tol: f64,
    out: Option<&Path>,
    no_timings: bool,
) -> Result<u8, Error> {
    let name = suite_name.name();
    let sizes = if sizes.is_empty() { default_sizes(name) } else { sizes.to_vec() };
    let cases = suite(name, &sizes, seed)?;
    let opts = PipelineOptions {
        tolerance: tol,
        runs,
        seed,
        ..Default::default()
    };
    let rows = cases.iter().map(|c| run_case(c, &opts)).collect::<Result<Vec<_>, _>>()?;
    let table = csv_table(&rows, !no_timings);
    match out {
        Some(p) => write_file(p, &table)?,
        None => print!("{table}"),
    }
    Ok(0)
}

fn simulate(scenario: &Path, strategy: &Path, runs: usize, seed: u64, horizon: Option<usize>) -> Result<u8, Error> {
    let s = load_scenario(scenario)?;
    let dump = StrategyDump::parse(&read(strategy)?)?;
    let est = simulate_dump(&s, &dump, runs, seed, horizon)?;
    println!("estimate {:.6}", est.estimate);
    println!("wilson95 [{:.6}, {:.6}]", est.low, est.high);
    println!("runs     {} ({} reached the goal)", est.runs, est.successes);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve {
            scenario,
            refine,
            members,
            regions,
            tol,
            threshold,
            runs,
            seed,
            out,
            export,
            hotspots,
        } => solve(
            scenario,
            *refine,
            *members,
            regions.as_deref(),
            *tol,
            *threshold,
            *runs,
            *seed,
            out.as_deref(),
            export,
            *hotspots,
        ),
        Command::Bench {
            suite,
            sizes,
            seed,
            runs,
            tol,
            out,
            no_timings,
        } => bench(*suite, sizes, *seed, *runs, *tol, out.as_deref(), *no_timings),
        Command::Simulate {
            scenario,
            strategy,
            runs,
            seed,
            horizon,
        } => simulate(scenario, strategy, *runs, *seed, *horizon),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() {
                EXIT_IO
            } else if e.is_invalid_input() {
                EXIT_INVALID
            } else {
                EXIT_ERROR
            })
        }
    }
}
