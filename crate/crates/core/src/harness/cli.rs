//! Command-line surface: `simulate`, `estimate`, `experiment`, `render`,
//! plus a TOML config-file alternative to flags (`fperc config job.toml`,
//! where the file carries `command = "<name>"` and the same keys as the
//! matching subcommand's flags).

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::connectivity::Orientation;
use crate::estimators::{
    estimate_characteristic_length, estimate_crossing, estimate_four_arm, estimate_net_prob,
    estimate_one_arm, estimate_theta, EstimateRecord,
};
use crate::field::Color;
use crate::frozen::{BoundaryRule, FinalState, SizeRule};
use crate::harness::experiments::{
    exp_freeze_time_window, exp_macro_cluster, exp_origin_freeze, exp_volume_scale_scan,
    FreezeWindowParams, MacroClusterParams, OriginFreezeParams, VolumeScanParams,
};
use crate::harness::render::render_to_file;
use crate::lattice::Region;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Diam,
    Vol,
}

impl From<RuleArg> for SizeRule {
    fn from(r: RuleArg) -> SizeRule {
        match r {
            RuleArg::Diam => SizeRule::Diameter,
            RuleArg::Vol => SizeRule::Volume,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Original,
    Modified,
}

impl From<BoundaryArg> for BoundaryRule {
    fn from(b: BoundaryArg) -> BoundaryRule {
        match b {
            BoundaryArg::Original => BoundaryRule::Original,
            BoundaryArg::Modified => BoundaryRule::Modified,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorArg {
    Black,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationArg {
    Horizontal,
    Vertical,
}

#[derive(Parser, Debug)]
#[command(
    name = "fperc",
    version,
    about = "Frozen percolation on the triangular lattice: simulation, estimators, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation and write the final-state dump
    Simulate(SimulateArgs),
    /// Monte Carlo estimators (JSON record on stdout)
    Estimate {
        #[command(subcommand)]
        what: EstimateCommand,
    },
    /// Batch experiments (CSV + JSON in an output directory)
    Experiment {
        #[command(subcommand)]
        what: ExperimentCommand,
    },
    /// Render a final-state dump to a PNG image
    Render(RenderArgs),
    /// Run a job described by a TOML file instead of flags
    Config { path: PathBuf },
}

#[derive(Args, Debug, Clone, Deserialize)]
struct SimulateArgs {
    /// Cluster size rule
    #[arg(long, value_enum)]
    rule: RuleArg,
    /// Boundary rule
    #[arg(long, value_enum)]
    boundary: BoundaryArg,
    /// Size threshold
    #[arg(long = "N")]
    threshold: f64,
    /// Domain radius (sites within L-infinity distance of the origin)
    #[arg(long)]
    domain: f64,
    #[arg(long)]
    seed: u64,
    /// Output path for the binary dump
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum EstimateCommand {
    /// One-arm probability at criticality
    Pi1(Pi1Args),
    /// Four-arm probability at criticality (passage-site normalization)
    Pi4(Pi4Args),
    /// Characteristic length
    L(LengthArgs),
    /// Finite-box proxy for the infinite-cluster density
    Theta(ThetaArgs),
    /// Crossing probability of a rectangle
    Crossing(CrossingArgs),
    /// Net-event probability
    Net(NetArgs),
}

#[derive(Args, Debug, Clone, Deserialize)]
struct Pi1Args {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug, Clone, Deserialize)]
struct Pi4Args {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug, Clone, Deserialize)]
struct LengthArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 2000)]
    #[serde(default = "default_replicas_per_n")]
    replicas_per_n: u32,
    #[arg(long, default_value_t = 256)]
    #[serde(default = "default_max_n")]
    max_n: u32,
    #[arg(long)]
    seed: u64,
}

fn default_replicas_per_n() -> u32 {
    2000
}

fn default_max_n() -> u32 {
    256
}

#[derive(Args, Debug, Clone, Deserialize)]
struct ThetaArgs {
    #[arg(long)]
    p: f64,
    /// Box radius of the finite proxy
    #[arg(long)]
    radius: f64,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug, Clone, Deserialize)]
struct CrossingArgs {
    /// Rectangle width (the rectangle is [0,width] x [0,height])
    #[arg(long)]
    width: f64,
    #[arg(long)]
    height: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, value_enum, default_value_t = OrientationArg::Horizontal)]
    #[serde(default = "default_orientation")]
    orientation: OrientationArg,
    #[arg(long, value_enum, default_value_t = ColorArg::Black)]
    #[serde(default = "default_color")]
    color: ColorArg,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
}

fn default_orientation() -> OrientationArg {
    OrientationArg::Horizontal
}

fn default_color() -> ColorArg {
    ColorArg::Black
}

#[derive(Args, Debug, Clone, Deserialize)]
struct NetArgs {
    /// Mesh size
    #[arg(long)]
    m: u32,
    /// Ball radius
    #[arg(long)]
    n: u32,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum ExperimentCommand {
    /// Cluster freeze-time concentration in the near-critical window
    FreezeWindow(FreezeWindowArgs),
    /// Origin-freeze probability across the four process variants
    OriginFreeze(OriginFreezeArgs),
    /// Origin cluster diameter distribution relative to the threshold
    MacroCluster(MacroClusterArgs),
    /// Volume-rule origin-freeze scan over box radii
    VolumeScan(VolumeScanArgs),
}

#[derive(Args, Debug, Clone, Deserialize)]
struct FreezeWindowArgs {
    #[arg(long = "N")]
    threshold: f64,
    #[arg(long = "K", default_value_t = 1.0)]
    #[serde(default = "default_k")]
    k: f64,
    /// Comma-separated lambda grid
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Domain radius (default 4N)
    #[arg(long)]
    #[serde(default)]
    domain: Option<f64>,
    #[arg(long, default_value_t = 200)]
    #[serde(default = "crate::harness::cli::default_pi4_replicas")]
    pi4_replicas: u32,
}

fn default_k() -> f64 {
    1.0
}

pub(crate) fn default_pi4_replicas() -> u32 {
    200
}

#[derive(Args, Debug, Clone, Deserialize)]
struct OriginFreezeArgs {
    #[arg(long = "N")]
    threshold: f64,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    #[serde(default)]
    domain: Option<f64>,
}

#[derive(Args, Debug, Clone, Deserialize)]
struct MacroClusterArgs {
    #[arg(long = "N")]
    threshold: f64,
    #[arg(long, value_enum)]
    boundary: BoundaryArg,
    /// Comma-separated epsilon grid
    #[arg(long, value_delimiter = ',')]
    epsilons: Vec<f64>,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    #[serde(default)]
    domain: Option<f64>,
}

#[derive(Args, Debug, Clone, Deserialize)]
struct VolumeScanArgs {
    #[arg(long = "N")]
    threshold: f64,
    #[arg(long, value_enum)]
    boundary: BoundaryArg,
    /// Comma-separated box radii
    #[arg(long, value_delimiter = ',')]
    m_grid: Vec<f64>,
    #[arg(long)]
    replicas: u32,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Clone, Deserialize)]
struct RenderArgs {
    /// Final-state dump to read
    #[arg(long)]
    input: PathBuf,
    /// PNG path to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    #[serde(default = "default_scale")]
    scale: u32,
}

fn default_scale() -> u32 {
    2
}

/// TOML job descriptions mirror the subcommand flags.
#[derive(Debug, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum ConfigJob {
    Simulate(SimulateArgs),
    EstimatePi1(Pi1Args),
    EstimatePi4(Pi4Args),
    EstimateL(LengthArgs),
    EstimateTheta(ThetaArgs),
    EstimateCrossing(CrossingArgs),
    EstimateNet(NetArgs),
    ExperimentFreezeWindow(FreezeWindowArgs),
    ExperimentOriginFreeze(OriginFreezeArgs),
    ExperimentMacroCluster(MacroClusterArgs),
    ExperimentVolumeScan(VolumeScanArgs),
    Render(RenderArgs),
}

fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let config = crate::frozen::ProcessConfig {
        rule: args.rule.into(),
        boundary: args.boundary.into(),
        threshold: args.threshold,
        domain: Region::centered_box(args.domain),
        seed: args.seed,
    };
    let fin = crate::frozen::run(&config)?;
    let mut out = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    fin.dump(&mut out)?;
    use std::io::Write;
    out.flush()?;
    Ok(())
}

fn print_record(record: &EstimateRecord) -> Result<()> {
    println!("{}", serde_json::to_string(record)?);
    Ok(())
}

fn run_estimate(cmd: &EstimateCommand) -> Result<()> {
    match cmd {
        EstimateCommand::Pi1(a) => {
            let est = estimate_one_arm(a.n, a.replicas, a.seed)?;
            print_record(&EstimateRecord {
                estimand: "pi1".into(),
                params: serde_json::json!({ "n": a.n }),
                value: serde_json::json!(est.value),
                stderr: est.stderr,
                replicas: est.replicas,
                base_seed: est.base_seed,
                grid: None,
            })
        }
        EstimateCommand::Pi4(a) => {
            let est = estimate_four_arm(a.n, a.replicas, a.seed)?;
            print_record(&EstimateRecord {
                estimand: "pi4".into(),
                params: serde_json::json!({ "n": a.n }),
                value: serde_json::json!(est.value),
                stderr: est.stderr,
                replicas: est.replicas,
                base_seed: est.base_seed,
                grid: None,
            })
        }
        EstimateCommand::L(a) => {
            let est = estimate_characteristic_length(a.p, a.replicas_per_n, a.max_n, a.seed)?;
            print_record(&EstimateRecord {
                estimand: "L".into(),
                params: serde_json::json!({ "p": a.p }),
                value: serde_json::to_value(est)?,
                stderr: 0.0,
                replicas: a.replicas_per_n,
                base_seed: a.seed,
                grid: Some(serde_json::json!({
                    "kind": "dyadic-then-refined",
                    "max_n": a.max_n,
                    "replicas_per_n": a.replicas_per_n,
                })),
            })
        }
        EstimateCommand::Theta(a) => {
            let est = estimate_theta(a.p, a.radius, a.replicas, a.seed)?;
            print_record(&EstimateRecord {
                estimand: "theta".into(),
                params: serde_json::json!({ "p": a.p, "radius": a.radius }),
                value: serde_json::json!(est.value),
                stderr: est.stderr,
                replicas: est.replicas,
                base_seed: est.base_seed,
                grid: None,
            })
        }
        EstimateCommand::Crossing(a) => {
            let rect = Region::rect(0.0, a.width, 0.0, a.height);
            let orientation = match a.orientation {
                OrientationArg::Horizontal => Orientation::Horizontal,
                OrientationArg::Vertical => Orientation::Vertical,
            };
            let color = match a.color {
                ColorArg::Black => Color::Black,
                ColorArg::White => Color::White,
            };
            let est = estimate_crossing(rect, orientation, color, a.p, a.replicas, a.seed)?;
            print_record(&EstimateRecord {
                estimand: "crossing".into(),
                params: serde_json::json!({
                    "width": a.width,
                    "height": a.height,
                    "p": a.p,
                    "orientation": format!("{:?}", a.orientation),
                    "color": format!("{:?}", a.color),
                }),
                value: serde_json::json!(est.value),
                stderr: est.stderr,
                replicas: est.replicas,
                base_seed: est.base_seed,
                grid: None,
            })
        }
        EstimateCommand::Net(a) => {
            let est = estimate_net_prob(a.m, a.n, a.p, a.replicas, a.seed)?;
            print_record(&EstimateRecord {
                estimand: "net".into(),
                params: serde_json::json!({ "m": a.m, "n": a.n, "p": a.p }),
                value: serde_json::json!(est.value),
                stderr: est.stderr,
                replicas: est.replicas,
                base_seed: est.base_seed,
                grid: None,
            })
        }
    }
}

fn run_experiment(cmd: &ExperimentCommand) -> Result<()> {
    let (result, out_dir) = match cmd {
        ExperimentCommand::FreezeWindow(a) => (
            exp_freeze_time_window(&FreezeWindowParams {
                threshold: a.threshold,
                k: a.k,
                lambdas: a.lambdas.clone(),
                replicas: a.replicas,
                base_seed: a.seed,
                domain_radius: a.domain,
                pi4_replicas: a.pi4_replicas,
            })?,
            &a.out_dir,
        ),
        ExperimentCommand::OriginFreeze(a) => (
            exp_origin_freeze(&OriginFreezeParams {
                threshold: a.threshold,
                replicas: a.replicas,
                base_seed: a.seed,
                domain_radius: a.domain,
            })?,
            &a.out_dir,
        ),
        ExperimentCommand::MacroCluster(a) => (
            exp_macro_cluster(&MacroClusterParams {
                threshold: a.threshold,
                boundary: a.boundary.into(),
                epsilons: a.epsilons.clone(),
                replicas: a.replicas,
                base_seed: a.seed,
                domain_radius: a.domain,
            })?,
            &a.out_dir,
        ),
        ExperimentCommand::VolumeScan(a) => (
            exp_volume_scale_scan(&VolumeScanParams {
                threshold: a.threshold,
                boundary: a.boundary.into(),
                m_grid: a.m_grid.clone(),
                replicas: a.replicas,
                base_seed: a.seed,
            })?,
            &a.out_dir,
        ),
    };
    let paths = result.write_to_dir(out_dir)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(())
}

fn run_render(args: &RenderArgs) -> Result<()> {
    let mut input = std::io::BufReader::new(std::fs::File::open(&args.input)?);
    let fin = FinalState::load(&mut input)?;
    render_to_file(&fin, &args.out, args.scale)
}

fn run_config(path: &PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let job: ConfigJob =
        toml::from_str(&text).map_err(|e| Error::Format(format!("bad config file: {e}")))?;
    match job {
        ConfigJob::Simulate(a) => run_simulate(&a),
        ConfigJob::EstimatePi1(a) => run_estimate(&EstimateCommand::Pi1(a)),
        ConfigJob::EstimatePi4(a) => run_estimate(&EstimateCommand::Pi4(a)),
        ConfigJob::EstimateL(a) => run_estimate(&EstimateCommand::L(a)),
        ConfigJob::EstimateTheta(a) => run_estimate(&EstimateCommand::Theta(a)),
        ConfigJob::EstimateCrossing(a) => run_estimate(&EstimateCommand::Crossing(a)),
        ConfigJob::EstimateNet(a) => run_estimate(&EstimateCommand::Net(a)),
        ConfigJob::ExperimentFreezeWindow(a) => {
            run_experiment(&ExperimentCommand::FreezeWindow(a))
        }
        ConfigJob::ExperimentOriginFreeze(a) => {
            run_experiment(&ExperimentCommand::OriginFreeze(a))
        }
        ConfigJob::ExperimentMacroCluster(a) => {
            run_experiment(&ExperimentCommand::MacroCluster(a))
        }
        ConfigJob::ExperimentVolumeScan(a) => run_experiment(&ExperimentCommand::VolumeScan(a)),
        ConfigJob::Render(a) => run_render(&a),
    }
}

/// Entry point; returns the process exit code.
pub fn cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Simulate(a) => run_simulate(a),
        Command::Estimate { what } => run_estimate(what),
        Command::Experiment { what } => run_experiment(what),
        Command::Render(a) => run_render(a),
        Command::Config { path } => run_config(path),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(line: &str) -> Vec<String> {
        line.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn unknown_subcommand_fails_with_usage() {
        assert_ne!(cli(args("fperc frobnicate")), 0);
        assert_ne!(cli(args("fperc")), 0);
    }

    #[test]
    fn missing_required_flag_fails() {
        assert_ne!(cli(args("fperc simulate --rule diam")), 0);
    }

    #[test]
    fn simulate_and_render_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("run.bin");
        let png = dir.path().join("run.png");
        let code = cli(args(&format!(
            "fperc simulate --rule diam --boundary modified --N 6 --domain 20 --seed 7 --out {}",
            bin.display()
        )));
        assert_eq!(code, 0);
        assert!(bin.exists());
        let code = cli(args(&format!(
            "fperc render --input {} --out {} --scale 2",
            bin.display(),
            png.display()
        )));
        assert_eq!(code, 0);
        assert!(png.metadata().unwrap().len() > 0);
    }

    #[test]
    fn estimate_runs() {
        assert_eq!(
            cli(args("fperc estimate pi4 --n 4 --replicas 20 --seed 1")),
            0
        );
        assert_eq!(
            cli(args(
                "fperc estimate crossing --width 8 --height 4 --p 0.5 --replicas 20 --seed 1"
            )),
            0
        );
    }

    #[test]
    fn config_file_runs_simulate() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("cfg_run.bin");
        let cfg_path = dir.path().join("job.toml");
        std::fs::write(
            &cfg_path,
            format!(
                "command = \"simulate\"\nrule = \"diam\"\nboundary = \"original\"\nthreshold = 5.0\ndomain = 15.0\nseed = 3\nout = \"{}\"\n",
                out.display()
            ),
        )
        .unwrap();
        assert_eq!(cli(args(&format!("fperc config {}", cfg_path.display()))), 0);
        assert!(out.exists());
        // malformed config is a runtime error, not a crash
        std::fs::write(&cfg_path, "command = \"simulate\"\n").unwrap();
        assert_eq!(cli(args(&format!("fperc config {}", cfg_path.display()))), 1);
    }

    #[test]
    fn experiment_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let code = cli(args(&format!(
            "fperc experiment volume-scan --N 3 --boundary modified --m-grid 3,5 --replicas 2 --seed 1 --out-dir {}",
            dir.path().display()
        )));
        assert_eq!(code, 0);
        assert!(dir.path().join("volume_scan.csv").exists());
        assert!(dir.path().join("volume_scan_summary.json").exists());
        assert!(dir.path().join("volume_scan_seeds.json").exists());
    }
}
