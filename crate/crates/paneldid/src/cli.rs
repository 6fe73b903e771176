//! Command-line front end: `estimate`, `compare`, `theory`, `simulate`,
//! `montecarlo`, plus `run` to replay a dumped configuration.
//!
//! Exit codes: 0 on success with all outputs written, 2 on input/schema
//! problems, 3 on estimation failures. Output files are written to a
//! temporary sibling and renamed, so a failed run leaves no partial files.
//! All randomness flows from `--seed` (default 42, chosen once so that
//! omitted seeds still reproduce).

use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    compare_estimators, interaction_weighted, tw_split_sample, twfe_event_study, AsOptions,
    TwOptions, TwfeOptions,
};
use crate::hotelling;
use crate::panel::{
    read_csv_path, ClusterOn, ColumnMapping, EndpointPolicy, EventTimeDesign, FixedEffectSpec,
    PanelDataset,
};
use crate::simgen::{
    self, dgp_from_model, generate_panel, monte_carlo, DgpSpec, EstimatorKind, McSettings,
};

/// Seed used when `--seed` is omitted.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "paneldid",
    about = "Dynamic treatment effects in staggered-adoption panels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,
    /// Write the fully resolved run configuration as JSON to this path
    /// (the run still executes; `paneldid run <file>` replays it).
    #[arg(long, global = true)]
    dump_config: Option<PathBuf>,
    /// Cap internal parallelism at N threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Estimate dynamic treatment effects from a panel CSV.
    Estimate(EstimateArgs),
    /// Run all three estimators on the same input, side by side.
    Compare(CompareArgs),
    /// Sweep the competition model over beta and emit the equilibrium grid.
    Theory(TheoryArgs),
    /// Generate one synthetic panel (with its ground truth) from a DGP spec.
    Simulate(SimulateArgs),
    /// Monte Carlo validation of the estimators on a synthetic DGP.
    Montecarlo(MontecarloArgs),
    /// Replay a configuration written by --dump-config.
    Run(RunArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorChoice {
    Twfe,
    As,
    Tw,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McEstimatorChoice {
    Twfe,
    As,
    Tw,
    All,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyChoice {
    DropOutside,
    BinEndpoints,
}

impl From<PolicyChoice> for EndpointPolicy {
    fn from(p: PolicyChoice) -> Self {
        match p {
            PolicyChoice::DropOutside => EndpointPolicy::DropOutside,
            PolicyChoice::BinEndpoints => EndpointPolicy::BinEndpoints,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterChoice {
    Cluster,
    Unit,
    Group,
}

impl From<ClusterChoice> for ClusterOn {
    fn from(c: ClusterChoice) -> Self {
        match c {
            ClusterChoice::Cluster => ClusterOn::Cluster,
            ClusterChoice::Unit => ClusterOn::Unit,
            ClusterChoice::Group => ClusterOn::Group,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct InputArgs {
    /// Input panel CSV (unit,time,outcome,adoption,cluster,group,covariates).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "unit")]
    pub unit_col: String,
    #[arg(long, default_value = "time")]
    pub time_col: String,
    #[arg(long, default_value = "outcome")]
    pub outcome_col: String,
    /// Adoption-period column; an empty field means never treated.
    #[arg(long, default_value = "adoption")]
    pub adoption_col: String,
    #[arg(long, default_value = "cluster")]
    pub cluster_col: String,
    #[arg(long, default_value = "group")]
    pub group_col: String,
    /// Drop all rows at these calendar periods before estimating.
    #[arg(long = "exclude-time", value_name = "T")]
    pub exclude_times: Vec<i64>,
}

impl InputArgs {
    fn mapping(&self) -> ColumnMapping {
        ColumnMapping {
            unit: self.unit_col.clone(),
            time: self.time_col.clone(),
            outcome: self.outcome_col.clone(),
            adoption: self.adoption_col.clone(),
            cluster: self.cluster_col.clone(),
            group: self.group_col.clone(),
        }
    }

    fn load(&self) -> Result<PanelDataset> {
        let panel = read_csv_path(&self.input, &self.mapping())?;
        if self.exclude_times.is_empty() {
            Ok(panel)
        } else {
            panel.filtered(|r| !self.exclude_times.contains(&r.time))
        }
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DesignArgs {
    /// Leads K (pre-adoption periods in the window).
    #[arg(long, default_value_t = 3)]
    pub leads: u32,
    /// Lags L (post-adoption periods in the window).
    #[arg(long, default_value_t = 5)]
    pub lags: u32,
    /// Omitted relative period(s); defaults to -1. Ignored by `tw`, which
    /// estimates every period in the window.
    #[arg(long = "omit", value_name = "TAU", allow_hyphen_values = true)]
    pub omit: Vec<i64>,
    #[arg(long, value_enum, default_value_t = PolicyChoice::DropOutside)]
    pub endpoint_policy: PolicyChoice,
}

impl DesignArgs {
    fn build(&self) -> Result<EventTimeDesign> {
        let omitted: std::collections::BTreeSet<i64> = if self.omit.is_empty() {
            std::collections::BTreeSet::from([-1])
        } else {
            self.omit.iter().copied().collect()
        };
        EventTimeDesign::new(self.leads, self.lags, omitted, self.endpoint_policy.into())
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct FeArgs {
    /// Absorb group x time effects in addition to unit and time.
    #[arg(long, action = ArgAction::SetTrue)]
    pub group_time_fe: bool,
    /// Absorb unit-specific linear trends (rejected by `as`).
    #[arg(long, action = ArgAction::SetTrue)]
    pub trends: bool,
}

impl FeArgs {
    fn build(&self) -> FixedEffectSpec {
        let base = if self.group_time_fe {
            FixedEffectSpec::with_group_time()
        } else {
            FixedEffectSpec::two_way()
        };
        base.with_trends(self.trends)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct InferenceArgs {
    /// Confidence level for intervals.
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Use normal critical values instead of t with G-1 degrees of freedom.
    #[arg(long, action = ArgAction::SetTrue)]
    pub normal_ci: bool,
    /// Column to cluster standard errors on.
    #[arg(long, value_enum, default_value_t = ClusterChoice::Cluster)]
    pub cluster_on: ClusterChoice,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = EstimatorChoice::Twfe)]
    pub estimator: EstimatorChoice,
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub fe: FeArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// Covariate columns to include as controls (twfe only).
    #[arg(long = "control", value_name = "NAME")]
    pub controls: Vec<String>,
    /// Keep the earliest-treated cohort in the `as` sample.
    #[arg(long, action = ArgAction::SetTrue)]
    pub keep_first_cohort: bool,
    /// Keep calendar periods in which no cohort adopts (`as` only).
    #[arg(long, action = ArgAction::SetTrue)]
    pub keep_gap_periods: bool,
    /// Allow `as` to run with a single cohort.
    #[arg(long, action = ArgAction::SetTrue)]
    pub allow_single_cohort: bool,
    /// Second-stage variant for `tw`: one coefficient per window state.
    #[arg(long, action = ArgAction::SetTrue)]
    pub per_state_control: bool,
    /// Output prefix; writes <out>.csv and <out>.json.
    #[arg(long, default_value = "estimates")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub design: DesignArgs,
    #[command(flatten)]
    pub fe: FeArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[arg(long, action = ArgAction::SetTrue)]
    pub keep_first_cohort: bool,
    #[arg(long, action = ArgAction::SetTrue)]
    pub keep_gap_periods: bool,
    #[arg(long, action = ArgAction::SetTrue)]
    pub allow_single_cohort: bool,
    #[arg(long, default_value = "compare")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct TheoryArgs {
    /// Number of beta grid points over [0, 0.45], endpoints included.
    #[arg(long, default_value_t = 46)]
    pub grid_points: usize,
    /// Output prefix; writes <out>.csv and <out>.json.
    #[arg(long, default_value = "theory")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SpecArgs {
    /// DGP spec as JSON (see DgpSpec).
    #[arg(long, conflicts_with = "scenario")]
    pub spec: Option<PathBuf>,
    /// Built-in scenario: homogeneous, heterogeneous, anticipation.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Master seed; omitted means the documented default of 42.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Rewire the adoption-year effect through the competition model:
    /// gamma_0 = model-scale * delta_f(model-beta) on top of model-base.
    #[arg(long)]
    pub model_beta: Option<f64>,
    #[arg(long, default_value_t = 0.45)]
    pub model_scale: f64,
    #[arg(long, default_value_t = 0.0)]
    pub model_base: f64,
}

impl SpecArgs {
    fn resolve(&self) -> Result<DgpSpec> {
        let seed = self.seed.unwrap_or(DEFAULT_SEED);
        let mut spec = match (&self.spec, &self.scenario) {
            (Some(path), None) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    Error::Schema(format!("cannot read spec '{}': {e}", path.display()))
                })?;
                let mut spec: DgpSpec = serde_json::from_str(&text)
                    .map_err(|e| Error::Schema(format!("invalid DGP spec: {e}")))?;
                if let Some(s) = self.seed {
                    spec.seed = s;
                }
                spec
            }
            (None, Some(name)) => simgen::scenarios::by_name(name, seed)?,
            (None, None) => simgen::scenarios::homogeneous(seed),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        };
        if let Some(beta) = self.model_beta {
            spec = dgp_from_model(beta, self.model_base, self.model_scale, &spec)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Output prefix; writes <out>_panel.csv and <out>_truth.json.
    #[arg(long, default_value = "simulated")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct MontecarloArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = McEstimatorChoice::All)]
    pub estimator: McEstimatorChoice,
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[arg(long, default_value_t = 3)]
    pub leads: u32,
    #[arg(long, default_value_t = 5)]
    pub lags: u32,
    /// Absorb only unit and time effects (default also absorbs group x time).
    #[arg(long, action = ArgAction::SetTrue)]
    pub two_way_only: bool,
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Also write the first generated panel next to the reports.
    #[arg(long, action = ArgAction::SetTrue)]
    pub write_panel: bool,
    /// Output prefix; writes <out>_<estimator>.csv/.json per estimator.
    #[arg(long, default_value = "mc")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct RunArgs {
    /// Configuration file written by --dump-config.
    pub config: PathBuf,
}

/// Serializable mirror of a full invocation; `--dump-config` writes it and
/// `paneldid run` replays it byte-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Estimate(EstimateArgs),
    Compare(CompareArgs),
    Theory(TheoryArgs),
    Simulate(SimulateArgs),
    Montecarlo(MontecarloArgs),
}

/// Parse the process arguments and execute; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore failure: the pool can only be initialized once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let config = match cli.command {
        CommandArgs::Estimate(a) => RunConfig::Estimate(a),
        CommandArgs::Compare(a) => RunConfig::Compare(a),
        CommandArgs::Theory(a) => RunConfig::Theory(a),
        CommandArgs::Simulate(a) => RunConfig::Simulate(a),
        CommandArgs::Montecarlo(a) => RunConfig::Montecarlo(a),
        CommandArgs::Run(run_args) => match load_config(&run_args.config) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
    };
    if let Some(path) = &cli.dump_config {
        let bytes = match serde_json::to_vec_pretty(&config) {
            Ok(b) => b,
            Err(e) => {
                eprintln!("error: cannot serialize config: {e}");
                return 2;
            }
        };
        if let Err(e) = write_atomic(path, &bytes) {
            eprintln!("error: cannot write config: {e}");
            return 2;
        }
    }
    match execute(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Estimation(_) | Error::NonConvergence { .. } | Error::OutOfRegion { .. } => 3,
        _ => 2,
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Schema(format!("cannot read config '{}': {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Schema(format!("invalid config: {e}")))
}

/// Execute a resolved configuration.
pub fn execute(config: &RunConfig) -> Result<()> {
    match config {
        RunConfig::Estimate(args) => cmd_estimate(args),
        RunConfig::Compare(args) => cmd_compare(args),
        RunConfig::Theory(args) => cmd_theory(args),
        RunConfig::Simulate(args) => cmd_simulate(args),
        RunConfig::Montecarlo(args) => cmd_montecarlo(args),
    }
}

fn prefixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

// All outputs are rendered in memory first, then written; estimation
// failures therefore leave no files behind.
fn write_outputs(outputs: Vec<(PathBuf, Vec<u8>)>) -> Result<()> {
    for (path, bytes) in outputs {
        write_atomic(&path, &bytes)?;
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let panel = args.input.load()?;
    let design = args.design.build()?;
    let fe = args.fe.build();
    let level = args.inference.level;
    let cluster_on: ClusterOn = args.inference.cluster_on.into();

    let (table, extra_json): (_, serde_json::Value) = match args.estimator {
        EstimatorChoice::Twfe => {
            let opts = TwfeOptions {
                controls: args.controls.clone(),
                cluster_on,
                confidence_level: level,
                normal_ci: args.inference.normal_ci,
                ..TwfeOptions::default()
            };
            let table = twfe_event_study(&panel, &design, &fe, &opts)?;
            (table, serde_json::Value::Null)
        }
        EstimatorChoice::As => {
            let opts = AsOptions {
                exclude_first_cohort: !args.keep_first_cohort,
                exclude_no_adoption_periods: !args.keep_gap_periods,
                allow_single_cohort: args.allow_single_cohort,
                cluster_on,
                confidence_level: level,
                normal_ci: args.inference.normal_ci,
                ..AsOptions::default()
            };
            let (table, weights) = interaction_weighted(&panel, &design, &fe, &opts)?;
            (table, serde_json::to_value(&weights)?)
        }
        EstimatorChoice::Tw => {
            let opts = TwOptions {
                per_state_control: args.per_state_control,
                cluster_on,
                confidence_level: level,
                normal_ci: args.inference.normal_ci,
                ..TwOptions::default()
            };
            let (table, detail) = tw_split_sample(&panel, args.design.leads, args.design.lags, &opts)?;
            (table, serde_json::to_value(&detail)?)
        }
    };

    let mut csv_bytes = Vec::new();
    table.write_csv(&mut csv_bytes)?;
    let json = serde_json::json!({ "table": table, "extra": extra_json });
    write_outputs(vec![
        (prefixed(&args.out, ".csv"), csv_bytes),
        (prefixed(&args.out, ".json"), json_bytes(&json)?),
    ])?;
    print!("{}", table.render_text());
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let panel = args.input.load()?;
    let design = args.design.build()?;
    let fe = args.fe.build();
    let cluster_on: ClusterOn = args.inference.cluster_on.into();
    let level = args.inference.level;
    let normal_ci = args.inference.normal_ci;

    let twfe_opts = TwfeOptions {
        cluster_on,
        confidence_level: level,
        normal_ci,
        ..TwfeOptions::default()
    };
    let as_opts = AsOptions {
        exclude_first_cohort: !args.keep_first_cohort,
        exclude_no_adoption_periods: !args.keep_gap_periods,
        allow_single_cohort: args.allow_single_cohort,
        cluster_on,
        confidence_level: level,
        normal_ci,
        ..AsOptions::default()
    };
    let tw_opts =
        TwOptions { cluster_on, confidence_level: level, normal_ci, ..TwOptions::default() };

    let comparison = compare_estimators(&panel, &design, &fe, &twfe_opts, &as_opts, &tw_opts)?;

    let mut csv_bytes = Vec::new();
    comparison.write_csv(&mut csv_bytes)?;
    write_outputs(vec![
        (prefixed(&args.out, ".csv"), csv_bytes),
        (prefixed(&args.out, ".json"), json_bytes(&comparison)?),
    ])?;
    print!("{}", comparison.render_text());
    Ok(())
}

fn cmd_theory(args: &TheoryArgs) -> Result<()> {
    let rows = hotelling::theory_sweep(args.grid_points)?;
    let mut csv_bytes = Vec::new();
    {
        let mut wtr = csv::Writer::from_writer(&mut csv_bytes);
        wtr.write_record(["beta", "a_c", "b_c", "f_c", "delta_f"])?;
        for r in &rows {
            wtr.write_record([
                crate::panel::format_float(r.beta),
                crate::panel::format_float(r.a_c),
                crate::panel::format_float(r.b_c),
                crate::panel::format_float(r.f_c),
                crate::panel::format_float(r.delta_f),
            ])?;
        }
        wtr.flush()?;
    }
    let summary = serde_json::json!({
        "monopoly": hotelling::monopoly_equilibrium(),
        "violence_threshold": hotelling::violence_threshold(),
        "grid_points": args.grid_points,
        "sweep": rows,
    });
    write_outputs(vec![
        (prefixed(&args.out, ".csv"), csv_bytes),
        (prefixed(&args.out, ".json"), json_bytes(&summary)?),
    ])?;
    let m = hotelling::monopoly_equilibrium();
    println!(
        "monopoly: a = {}, f = {}; violence threshold beta = {}",
        m.a,
        m.f,
        hotelling::violence_threshold()
    );
    println!("{} grid rows written", rows.len());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    let (panel, truth) = generate_panel(&spec)?;
    let mut panel_bytes = Vec::new();
    crate::panel::write_csv(&panel, &mut panel_bytes)?;
    let truth_json = serde_json::json!({ "spec": spec, "ground_truth": truth });
    write_outputs(vec![
        (prefixed(&args.out, "_panel.csv"), panel_bytes),
        (prefixed(&args.out, "_truth.json"), json_bytes(&truth_json)?),
    ])?;
    println!(
        "generated {} rows ({} units x {} periods), seed {}",
        panel.n_rows(),
        spec.n_units,
        spec.n_periods,
        spec.seed
    );
    Ok(())
}

fn cmd_montecarlo(args: &MontecarloArgs) -> Result<()> {
    let spec = args.spec.resolve()?;
    let fe = if args.two_way_only {
        FixedEffectSpec::two_way()
    } else {
        FixedEffectSpec::with_group_time()
    };
    let settings = McSettings {
        leads: args.leads,
        lags: args.lags,
        fe,
        confidence_level: args.level,
    };
    let kinds: Vec<EstimatorKind> = match args.estimator {
        McEstimatorChoice::Twfe => vec![EstimatorKind::Twfe],
        McEstimatorChoice::As => vec![EstimatorKind::InteractionWeighted],
        McEstimatorChoice::Tw => vec![EstimatorKind::SplitSample],
        McEstimatorChoice::All => vec![
            EstimatorKind::Twfe,
            EstimatorKind::InteractionWeighted,
            EstimatorKind::SplitSample,
        ],
    };

    let mut outputs = Vec::new();
    let mut texts = Vec::new();
    for kind in kinds {
        let report = monte_carlo(&spec, kind, args.reps, &settings)?;
        let mut csv_bytes = Vec::new();
        report.write_csv(&mut csv_bytes)?;
        outputs.push((prefixed(&args.out, &format!("_{}.csv", kind.name())), csv_bytes));
        outputs
            .push((prefixed(&args.out, &format!("_{}.json", kind.name())), json_bytes(&report)?));
        texts.push(report.render_text());
    }
    if args.write_panel {
        let (panel, _) = generate_panel(&spec)?;
        let mut panel_bytes = Vec::new();
        crate::panel::write_csv(&panel, &mut panel_bytes)?;
        outputs.push((prefixed(&args.out, "_panel.csv"), panel_bytes));
    }
    write_outputs(outputs)?;
    for t in texts {
        print!("{t}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_json() {
        let cfg = RunConfig::Theory(TheoryArgs { grid_points: 46, out: PathBuf::from("t") });
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        match back {
            RunConfig::Theory(t) => assert_eq!(t.grid_points, 46),
            _ => panic!("wrong variant"),
        }
    }

    #[test]
    fn cli_parses_estimate_flags() {
        use clap::Parser;
        let cli = Cli::try_parse_from([
            "paneldid",
            "estimate",
            "--input",
            "panel.csv",
            "--estimator",
            "tw",
            "--leads",
            "2",
            "--lags",
            "4",
            "--omit",
            "-1",
            "--level",
            "0.95",
        ])
        .unwrap();
        match cli.command {
            CommandArgs::Estimate(a) => {
                assert_eq!(a.estimator, EstimatorChoice::Tw);
                assert_eq!(a.design.leads, 2);
                assert_eq!(a.design.lags, 4);
                assert_eq!(a.design.omit, vec![-1]);
                assert_eq!(a.inference.level, 0.95);
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
