//! Command-line front end.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::gp::evolve::{stream_seed, EvolutionLog, GpError, Stream};
use crate::gp::{evolve, ExprTree, GpConfig};
use crate::metrics::{self, aggregate, MetricsReport, MetricsRow, Summary};
use crate::network::{
    generate_flow, generate_grid, load_flow, load_roadnet, write_flow, write_roadnet, FlowParams, FlowSpec,
    NetworkError, RoadNetwork,
};
use crate::policy::{Baseline, PolicyError, PolicyMode, UrgencyPolicy};
use crate::sim::{run_scenario, run_with, write_trace_csv, Scenario, SimOptions, DEFAULT_HORIZON};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "TSCGP_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Parser)]
#[command(name = "tscgp", version, about = "Evolve and evaluate symmetric phase-urgency signal controllers")]
pub struct Cli {
    /// Worker threads for concurrent evaluations (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve an urgency function, one run per seed.
    Evolve(EvolveArgs),
    /// Evaluate policy files on one or more scenarios.
    Evaluate(EvaluateArgs),
    /// Run a classical controller.
    Baseline(BaselineArgs),
    /// Write a synthetic grid roadnet and flow.
    GenGrid(GenGridArgs),
    /// Summarize evolution runs under a directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Symmetric,
    Asymmetric,
}

impl From<ModeArg> for PolicyMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Symmetric => PolicyMode::Symmetric,
            ModeArg::Asymmetric => PolicyMode::Asymmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Random,
    Fixed,
    #[value(alias = "max-pressure")]
    Maxpressure,
    All,
}

/// Where a scenario comes from: a directory, explicit files, or a generated grid.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Directory holding roadnet.json and flow.json.
    #[arg(long, conflicts_with_all = ["roadnet", "grid"])]
    pub scenario: Option<PathBuf>,
    #[arg(long, requires = "flow", conflicts_with = "grid")]
    pub roadnet: Option<PathBuf>,
    #[arg(long, requires = "roadnet")]
    pub flow: Option<PathBuf>,
    /// Generated grid `ROWSxCOLS`; demand is drawn per seed.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[command(flatten)]
    pub demand: DemandArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DemandArgs {
    /// Vehicles per hour per entry road (generated grids).
    #[arg(long, default_value_t = 360.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 300.0)]
    pub lane_length: f64,
    /// Left,through,right probabilities.
    #[arg(long, value_parser = parse_probs, default_value = "0.1,0.8,0.1")]
    pub turn_probs: [f64; 3],
    /// Episode length in seconds.
    #[arg(long)]
    pub horizon: Option<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct EvolveArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// TOML file with GP parameters; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long = "seed", value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, env = OUT_ENV, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Policy file (repeatable).
    #[arg(long = "policy", required = true)]
    pub policies: Vec<PathBuf>,
    /// Extra scenario directories evaluated alongside the main one.
    #[arg(long = "also")]
    pub also: Vec<PathBuf>,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long = "seed", value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    /// Also write a per-step signal trace for each policy and scenario (first seed).
    #[arg(long)]
    pub trace: bool,
    #[arg(long, env = OUT_ENV, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(value_enum)]
    pub method: MethodArg,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long = "seed", value_delimiter = ',', default_value = "0")]
    pub seeds: Vec<u64>,
    #[arg(long, env = OUT_ENV, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GenGridArgs {
    #[arg(long, value_parser = parse_grid, default_value = "1x1")]
    pub grid: (usize, usize),
    #[command(flatten)]
    pub demand: DemandArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for roadnet.json and flow.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory searched for evolution.csv files.
    pub run: PathBuf,
    /// Where the report CSVs go (default: the run directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got {s:?}"))?;
    let r = r.trim().parse().map_err(|e| format!("rows: {e}"))?;
    let c = c.trim().parse().map_err(|e| format!("cols: {e}"))?;
    Ok((r, c))
}

fn parse_probs(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected three comma-separated probabilities, got {s:?}"))
}

/// GP parameters accepted in a config file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub population_size: Option<usize>,
    pub generations: Option<usize>,
    pub init_min_depth: Option<usize>,
    pub max_depth: Option<usize>,
    pub elitism: Option<usize>,
    pub tournament_size: Option<usize>,
    pub crossover_rate: Option<f64>,
    pub mutation_rate: Option<f64>,
    pub mode: Option<PolicyMode>,
    pub horizon: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    fn apply(&self, c: &mut GpConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(population_size, generations, init_min_depth, max_depth, elitism, tournament_size, crossover_rate, mutation_rate);
    }
}

/// A scenario source that can produce the episode for a given seed.
#[derive(Debug, Clone)]
pub struct ScenarioSource {
    pub label: String,
    pub network: RoadNetwork,
    /// Fixed demand, or `None` to draw grid demand per seed.
    pub flow: Option<FlowSpec>,
    pub params: FlowParams,
}

impl ScenarioSource {
    pub fn from_dir(dir: &Path, horizon: Option<u32>) -> Result<ScenarioSource> {
        ScenarioSource::from_files(&dir.join("roadnet.json"), &dir.join("flow.json"), horizon, dir_label(dir))
    }

    pub fn from_files(roadnet: &Path, flow: &Path, horizon: Option<u32>, label: String) -> Result<ScenarioSource> {
        let network = load_roadnet(roadnet)?;
        let flow = load_flow(flow, &network)?;
        let last = flow.events.iter().map(|e| e.spawn_time + 1).max().unwrap_or(0);
        let horizon = horizon.unwrap_or(DEFAULT_HORIZON.max(last));
        Ok(ScenarioSource {
            label,
            network,
            flow: Some(flow),
            params: FlowParams {
                horizon,
                ..FlowParams::default()
            },
        })
    }

    pub fn from_args(args: &ScenarioArgs) -> Result<ScenarioSource> {
        let d = &args.demand;
        if let Some(dir) = &args.scenario {
            ScenarioSource::from_dir(dir, d.horizon)
        } else if let (Some(r), Some(f)) = (&args.roadnet, &args.flow) {
            ScenarioSource::from_files(r, f, d.horizon, file_label(r))
        } else if let Some((rows, cols)) = args.grid {
            Ok(ScenarioSource {
                label: format!("grid{rows}x{cols}"),
                network: generate_grid(rows, cols, d.lane_length)?,
                flow: None,
                params: FlowParams {
                    horizon: d.horizon.unwrap_or(DEFAULT_HORIZON),
                    rate: d.rate,
                    turn_probs: d.turn_probs,
                },
            })
        } else {
            Err(CliError::Usage(
                "no scenario given: use --scenario DIR, --roadnet/--flow, or --grid RxC".into(),
            ))
        }
    }

    pub fn horizon(&self) -> u32 {
        self.params.horizon
    }

    pub fn scenario(&self, seed: u64) -> Result<Scenario> {
        let flow = match &self.flow {
            Some(f) => f.clone(),
            None => generate_flow(&self.network, &self.params, stream_seed(seed, Stream::Flow))?,
        };
        Ok(Scenario {
            network: self.network.clone(),
            flow,
            horizon: self.params.horizon,
        })
    }
}

fn dir_label(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn file_label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(CliError::Usage("at least one seed is required".into()));
    }
    Ok(())
}

pub fn cmd_evolve(args: &EvolveArgs) -> Result<()> {
    check_seeds(&args.seeds)?;
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let mut scen_args = args.scenario.clone();
    if scen_args.demand.horizon.is_none() {
        scen_args.demand.horizon = file.horizon;
    }
    let source = ScenarioSource::from_args(&scen_args)?;
    let mode: PolicyMode = args.mode.map(Into::into).or(file.mode).unwrap_or(PolicyMode::Symmetric);
    let mut base = GpConfig::default();
    file.apply(&mut base);
    if let Some(p) = args.pop {
        base.population_size = p;
    }
    if let Some(g) = args.gens {
        base.generations = g;
    }
    base.validate()?;

    let mut summary = Vec::new();
    for &seed in &args.seeds {
        let config = GpConfig { seed, ..base };
        let scenario = source.scenario(seed)?;
        info!("evolving seed {seed} on {} ({mode})", source.label);
        let (best, log) = evolve(&config, &scenario, mode)?;
        let policy = UrgencyPolicy::new(mode, best.tree.clone())?;
        let report = metrics::compute(&run_scenario(&scenario, &mut policy.clone()));

        let dir = args.out.join(format!("seed_{seed}"));
        write_atomic(&dir.join("evolution.csv"), &csv_bytes(|b| log.write_csv(b))?)?;
        write_atomic(&dir.join("best_policy.toml"), policy.to_file_string().as_bytes())?;
        let rows = [MetricsRow {
            label: &source.label,
            seed,
            report,
        }];
        write_atomic(&dir.join("metrics.csv"), &csv_bytes(|b| metrics::write_metrics_csv(&rows, b))?)?;
        println!(
            "seed {seed}: initial best ATT {:.2}, final best ATT {:.2}, tree size {}: {}",
            log.initial_best().unwrap_or(f64::NAN),
            report.att,
            best.tree.len(),
            best.tree
        );
        summary.push(report);
    }
    let s = aggregate(&summary).expect("at least one seed");
    print!("{}", metrics::summary_table(&[(mode.as_str(), s)]));
    Ok(())
}

fn run_policy_seeds(policy: &UrgencyPolicy, source: &ScenarioSource, seeds: &[u64]) -> Result<Vec<MetricsReport>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let scenario = source.scenario(seed)?;
            Ok(metrics::compute(&run_scenario(&scenario, &mut policy.clone())))
        })
        .collect()
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    check_seeds(&args.seeds)?;
    let mut sources = vec![ScenarioSource::from_args(&args.scenario)?];
    for dir in &args.also {
        sources.push(ScenarioSource::from_dir(dir, args.scenario.demand.horizon)?);
    }
    let mut policies = Vec::new();
    for path in &args.policies {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let policy = UrgencyPolicy::from_file_string(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        policies.push((file_label(path), policy));
    }

    let mut labels = Vec::new();
    let mut per_seed = Vec::new();
    for (pname, policy) in &policies {
        for source in &sources {
            let label = format!("{pname}@{}", source.label);
            let reports = run_policy_seeds(policy, source, &args.seeds)?;
            if args.trace {
                let scenario = source.scenario(args.seeds[0])?;
                let ep = run_with(
                    &scenario.network,
                    &scenario.flow,
                    &mut policy.clone(),
                    scenario.horizon,
                    SimOptions { trace: true },
                );
                let rows = ep.trace.unwrap_or_default();
                let path = args.out.join(format!("trace_{label}.csv"));
                write_atomic(&path, &csv_bytes(|b| write_trace_csv(&rows, b))?)?;
            }
            per_seed.push(reports);
            labels.push(label);
        }
    }
    write_results(&args.out, "evaluate", &labels, &per_seed, &args.seeds)
}

fn write_results(
    out: &Path,
    stem: &str,
    labels: &[String],
    per_seed: &[Vec<MetricsReport>],
    seeds: &[u64],
) -> Result<()> {
    let mut rows = Vec::new();
    let mut summaries: Vec<(&str, Summary)> = Vec::new();
    for (label, reports) in labels.iter().zip(per_seed) {
        for (&seed, &report) in seeds.iter().zip(reports) {
            rows.push(MetricsRow { label, seed, report });
        }
        summaries.push((label, aggregate(reports).expect("at least one seed")));
    }
    write_atomic(
        &out.join(format!("{stem}_metrics.csv")),
        &csv_bytes(|b| metrics::write_metrics_csv(&rows, b))?,
    )?;
    write_atomic(
        &out.join(format!("{stem}_summary.csv")),
        &csv_bytes(|b| metrics::write_summary_csv(&summaries, b))?,
    )?;
    print!("{}", metrics::summary_table(&summaries));
    Ok(())
}

pub fn cmd_baseline(args: &BaselineArgs) -> Result<()> {
    check_seeds(&args.seeds)?;
    let source = ScenarioSource::from_args(&args.scenario)?;
    let methods: Vec<Baseline> = match args.method {
        MethodArg::Random => vec![Baseline::Random],
        MethodArg::Fixed => vec![Baseline::Fixed],
        MethodArg::Maxpressure => vec![Baseline::MaxPressure],
        MethodArg::All => Baseline::ALL.to_vec(),
    };
    let mut labels = Vec::new();
    let mut per_seed = Vec::new();
    for method in methods {
        let reports = args
            .seeds
            .par_iter()
            .map(|&seed| {
                let scenario = source.scenario(seed)?;
                let mut controller = method.controller(stream_seed(seed, Stream::Controller));
                Ok(metrics::compute(&run_scenario(&scenario, controller.as_mut())))
            })
            .collect::<Result<Vec<_>>>()?;
        labels.push(format!("{method}@{}", source.label));
        per_seed.push(reports);
    }
    let stem = match args.method {
        MethodArg::All => "baseline".to_string(),
        _ => format!("baseline_{}", methods_stem(args.method)),
    };
    write_results(&args.out, &stem, &labels, &per_seed, &args.seeds)
}

fn methods_stem(m: MethodArg) -> &'static str {
    match m {
        MethodArg::Random => "random",
        MethodArg::Fixed => "fixed",
        MethodArg::Maxpressure => "maxpressure",
        MethodArg::All => "all",
    }
}

pub fn cmd_gen_grid(args: &GenGridArgs) -> Result<()> {
    let (rows, cols) = args.grid;
    let d = &args.demand;
    let network = generate_grid(rows, cols, d.lane_length)?;
    let params = FlowParams {
        horizon: d.horizon.unwrap_or(DEFAULT_HORIZON),
        rate: d.rate,
        turn_probs: d.turn_probs,
    };
    let flow = generate_flow(&network, &params, args.seed)?;
    write_atomic(&args.out.join("roadnet.json"), write_roadnet(&network).as_bytes())?;
    write_atomic(&args.out.join("flow.json"), write_flow(&flow, &network).as_bytes())?;
    println!(
        "wrote {rows}x{cols} grid ({} roads, {} vehicles) to {}",
        network.roads.len(),
        flow.len(),
        args.out.display()
    );
    Ok(())
}

/// Every `evolution.csv` below `dir`, in sorted path order.
pub fn find_logs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let mut entries: Vec<PathBuf> = fs::read_dir(&d)
            .map_err(io_err(&d))?
            .map(|e| e.map(|e| e.path()))
            .collect::<io::Result<_>>()
            .map_err(io_err(&d))?;
        entries.sort();
        for p in entries {
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n == "evolution.csv") {
                found.push(p);
            }
        }
    }
    found.sort();
    Ok(found)
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let logs = find_logs(&args.run)?;
    if logs.is_empty() {
        return Err(CliError::Usage(format!("no evolution.csv found under {}", args.run.display())));
    }
    let out = args.out.clone().unwrap_or_else(|| args.run.clone());

    let mut sizes = csv::Writer::from_writer(Vec::new());
    sizes.write_record(["run", "best_tree_size", "best_att", "best_tree"])?;
    let mut conv = csv::Writer::from_writer(Vec::new());
    conv.write_record(["run", "generation", "best_att", "mean_att"])?;
    let mut freq: std::collections::BTreeMap<u8, usize> = Default::default();

    for path in &logs {
        let run = path
            .parent()
            .and_then(|p| p.strip_prefix(&args.run).ok())
            .map(|p| p.display().to_string())
            .filter(|s| !s.is_empty())
            .unwrap_or_else(|| ".".into());
        let file = fs::File::open(path).map_err(io_err(path))?;
        let log = EvolutionLog::read_csv(file)?;
        let last = log
            .generations
            .last()
            .ok_or_else(|| CliError::Usage(format!("{} has no generations", path.display())))?;
        let tree = ExprTree::parse(&last.best_tree)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        for (t, n) in tree.terminal_frequencies() {
            *freq.entry(t).or_default() += n;
        }
        sizes.write_record([run.clone(), tree.len().to_string(), format!("{:.4}", last.best_att), last.best_tree.clone()])?;
        for g in &log.generations {
            conv.write_record([
                run.clone(),
                g.generation.to_string(),
                format!("{:.4}", g.best_att),
                format!("{:.4}", g.mean_att),
            ])?;
        }
        println!("{run}: best ATT {:.2}, tree size {}", last.best_att, tree.len());
    }

    let mut terms = csv::Writer::from_writer(Vec::new());
    terms.write_record(["terminal", "count", "mean_per_run"])?;
    for (t, n) in &freq {
        terms.write_record([
            crate::gp::tree::terminal_name(*t),
            n.to_string(),
            format!("{:.3}", *n as f64 / logs.len() as f64),
        ])?;
    }

    let finish = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| CliError::Usage(e.to_string()));
    write_atomic(&out.join("report_sizes.csv"), &finish(sizes)?)?;
    write_atomic(&out.join("report_convergence.csv"), &finish(conv)?)?;
    write_atomic(&out.join("report_terminals.csv"), &finish(terms)?)?;
    println!("{} runs summarized in {}", logs.len(), out.display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match &cli.command {
        Command::Evolve(a) => cmd_evolve(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::GenGrid(a) => cmd_gen_grid(a),
        Command::Report(a) => cmd_report(a),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_and_probs_parsers() {
        assert_eq!(parse_grid("2x3"), Ok((2, 3)));
        assert!(parse_grid("2-3").is_err());
        assert_eq!(parse_probs("0.2,0.6,0.2"), Ok([0.2, 0.6, 0.2]));
        assert!(parse_probs("0.5,0.5").is_err());
    }

    #[test]
    fn file_config_overrides_defaults() {
        let f: FileConfig = toml::from_str("population_size = 30\nmutation_rate = 0.05\nmode = \"asymmetric\"\n").unwrap();
        let mut c = GpConfig::default();
        f.apply(&mut c);
        assert_eq!((c.population_size, c.mutation_rate, c.generations), (30, 0.05, 51));
        assert_eq!(f.mode, Some(PolicyMode::Asymmetric));
        assert!(toml::from_str::<FileConfig>("popsize = 3\n").is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a/b.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
