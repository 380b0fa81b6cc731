//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::distance::{run_sequence, PipelineOptions, SequenceRun};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalOptions, EvalReport};
use crate::io::{self, PipelineConfig, TruthRow};
use crate::simulator::{generate, Scenario};
use crate::types::{CameraCalibration, Detection, PoseSample};

/// Scenario run by `monodist demo`.
pub const DEMO_SCENARIO: &str = include_str!("../scenarios/slope_transition.toml");

#[derive(Debug, Parser)]
#[command(name = "monodist", version, about = "Monocular inter-vehicle distance estimation on sloped roads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate distances for every detection of a sequence.
    Estimate(EstimateArgs),
    /// Generate a synthetic sequence with ground truth.
    Simulate(SimulateArgs),
    /// Compute RMSE of an estimate file against ground truth.
    Evaluate(EvaluateArgs),
    /// Run the bundled slope-transition scenario end to end.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
struct Inputs {
    /// Calibration file (key = value).
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Pose CSV.
    #[arg(long)]
    poses: Option<PathBuf>,
    /// Detection CSV.
    #[arg(long)]
    detections: Option<PathBuf>,
    /// Pipeline tuning file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    calib: PathBuf,
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    detections: PathBuf,
    /// Output estimate CSV.
    #[arg(long)]
    out: PathBuf,
    /// Disable the target plane correction.
    #[arg(long)]
    no_adjust: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    estimates: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Also re-run the pipeline without correction (needs --calib, --poses
    /// and --detections) and report both RMSEs.
    #[arg(long)]
    ablation: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
    /// Include mean per-frame pipeline time (measured during the ablation
    /// re-run of the adjusted pipeline).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    inputs: Inputs,
}

#[derive(Debug, Args)]
struct DemoArgs {
    #[arg(long)]
    json: bool,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, A>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Estimate(a) => cmd_estimate(a, stderr),
        Command::Simulate(a) => cmd_simulate(a, stderr),
        Command::Evaluate(a) => cmd_evaluate(a, stdout),
        Command::Demo(a) => cmd_demo(a, stdout, stderr),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_options(calib: &CameraCalibration<f64>, config: Option<&Path>) -> Result<PipelineOptions<f64>> {
    match config {
        Some(p) => PipelineConfig::read_file(p)?.options(calib),
        None => PipelineConfig::default().options(calib),
    }
}

struct Sequence {
    calib: CameraCalibration<f64>,
    options: PipelineOptions<f64>,
    poses: Vec<PoseSample<f64>>,
    detections: Vec<Detection<f64>>,
}

impl Sequence {
    fn load(calib: &Path, poses: &Path, detections: &Path, config: Option<&Path>) -> Result<Self> {
        let calib = io::read_calibration_file(calib)?;
        let options = load_options(&calib, config)?;
        let poses = io::read_poses_file(poses)?;
        let detections = io::read_detections_file(detections, &calib)?;
        Ok(Self { calib, options, poses, detections })
    }

    fn run(&self, adjust: bool) -> Result<SequenceRun<f64>> {
        let options = PipelineOptions { adjust, ..self.options };
        run_sequence(self.calib, options, &self.poses, &self.detections)
    }
}

fn cmd_estimate(a: EstimateArgs, stderr: &mut dyn Write) -> Result<()> {
    let seq = Sequence::load(&a.calib, &a.poses, &a.detections, a.config.as_deref())?;
    let run = seq.run(!a.no_adjust)?;
    io::write_estimates_file(&a.out, &run.estimates)?;
    let _ = writeln!(
        stderr,
        "{} estimates over {} frames, mean pipeline time {:.3e} s/frame",
        run.estimates.len(),
        run.frames,
        run.mean_frame_time_s()
    );
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, stderr: &mut dyn Write) -> Result<()> {
    let scenario = io::read_scenario_file(&a.scenario)?;
    let out = generate(&scenario)?;
    for w in &out.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    io::write_simulation(&a.out_dir, &scenario.calib, &out)
}

fn sequence_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "sequence".into())
}

fn print_report(report: &EvalReport, json: bool, stdout: &mut dyn Write) -> Result<()> {
    let text = if json { report.to_json() + "\n" } else { report.to_table() };
    stdout.write_all(text.as_bytes()).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}

fn require<'a>(flag: &str, value: &'a Option<PathBuf>) -> Result<&'a Path> {
    value.as_deref().ok_or_else(|| Error::MissingKey(format!("--{flag} (required by --ablation)")))
}

fn cmd_evaluate(a: EvaluateArgs, stdout: &mut dyn Write) -> Result<()> {
    let estimates = io::read_estimates_file(&a.estimates)?;
    let truth = io::read_truth_file(&a.truth)?;
    let mut ablated = None;
    let mut timing = None;
    if a.ablation {
        let seq = Sequence::load(
            require("calib", &a.inputs.calib)?,
            require("poses", &a.inputs.poses)?,
            require("detections", &a.inputs.detections)?,
            a.inputs.config.as_deref(),
        )?;
        ablated = Some(seq.run(false)?.estimates);
        if a.timing {
            timing = Some(seq.run(true)?.mean_frame_time_s());
        }
    } else if a.timing {
        return Err(Error::MissingKey("--ablation (required by --timing)".into()));
    }
    let options =
        EvalOptions { sequence: sequence_name(&a.estimates), ablated: ablated.as_deref(), mean_frame_time_s: timing };
    let report = evaluate(&estimates, &truth, options)?;
    print_report(&report, a.json, stdout)
}

/// Runs a scenario in memory: simulate, estimate with and without the
/// correction, and evaluate.
pub fn run_scenario(scenario: &Scenario, name: &str) -> Result<(EvalReport, Vec<String>)> {
    let out = generate(scenario)?;
    let options = PipelineOptions::for_calibration(&scenario.calib);
    let adjusted = run_sequence(scenario.calib, options, &out.poses, &out.detections)?;
    let ablated = run_sequence(scenario.calib, options.without_adjustment(), &out.poses, &out.detections)?;
    let truth: Vec<TruthRow> = out
        .truth
        .iter()
        .map(|t| TruthRow { frame_index: t.frame_index, track_id: None, distance_m: t.true_distance_m })
        .collect();
    let report = evaluate(
        &adjusted.estimates,
        &truth,
        EvalOptions {
            sequence: name.into(),
            ablated: Some(&ablated.estimates),
            mean_frame_time_s: Some(adjusted.mean_frame_time_s()),
        },
    )?;
    Ok((report, out.warnings))
}

fn cmd_demo(a: DemoArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let scenario = io::parse_scenario("slope_transition.toml", DEMO_SCENARIO)?;
    let (report, warnings) = run_scenario(&scenario, "slope_transition")?;
    for w in &warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }
    print_report(&report, a.json, stdout)
}
