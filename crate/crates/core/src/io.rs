//! File formats: calibration / config / scenario TOML and the pose,
//! detection, estimate and ground-truth CSV streams.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::Deserialize;

use crate::distance::{PipelineOptions, DEFAULT_EPSILON_PX};
use crate::ego_gradient::GradientEstimatorConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::simulator::{ElevationProfile, GroundTruthRecord, Scenario};
use crate::target_adjust::AdjustmentPolicy;
use crate::types::{
    validate_calibration, validate_pose, BBox, CameraCalibration, Detection, DistanceEstimate, Flag, FocalLength,
    Geometry, PoseSample,
};

pub const POSE_HEADER: [&str; 11] =
    ["frame", "timestamp", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22"];
pub const DETECTION_HEADER: [&str; 6] = ["frame", "track", "x_min", "y_min", "x_max", "y_max"];
pub const ESTIMATE_HEADER: [&str; 8] =
    ["frame", "track", "distance_m", "theta_deg", "theta_adj_deg", "v_px", "delta_y_px", "flag"];
pub const TRUTH_HEADER: [&str; 6] =
    ["frame", "true_distance_m", "true_theta_ego_deg", "true_theta_target_deg", "same_plane", "euclid_distance_m"];

/// Formats a float with 6 significant digits, like C's `%.6g`.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Io { path: path.into(), source })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io { path: path.into(), source })
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })
}

fn csv_err(context: &str, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: context.into(), source },
        kind => Error::parse(context, format!("{kind:?}")),
    }
}

fn write_err(context: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: context.into(), source }
}

fn check_header(context: &str, got: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if got.iter().map(str::trim).ne(expected.iter().copied()) {
        return Err(Error::BadHeader { path: context.into(), expected: expected.join(",") });
    }
    Ok(())
}

fn field<V: std::str::FromStr>(context: &str, line: u64, name: &str, raw: &str) -> Result<V>
where
    V::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| Error::parse(format!("{context} line {line}"), format!("column `{name}`: {e} (`{raw}`)")))
}

fn opt_field(context: &str, line: u64, name: &str, raw: &str) -> Result<Option<f64>> {
    if raw.trim().is_empty() {
        Ok(None)
    } else {
        field(context, line, name, raw).map(Some)
    }
}

fn records<R: Read>(context: &str, reader: R, header: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(context, rdr.headers().map_err(|e| csv_err(context, e))?, header)?;
    rdr.records()
        .map(|r| {
            let r = r.map_err(|e| csv_err(context, e))?;
            let line = r.position().map_or(0, |p| p.line());
            Ok((line, r))
        })
        .collect()
}

// ---------------------------------------------------------------- poses

/// Reads a pose CSV. Rows are validated individually and must have strictly
/// increasing frame indices and timestamps.
pub fn read_poses<R: Read>(context: &str, reader: R) -> Result<Vec<PoseSample<f64>>> {
    let mut poses: Vec<PoseSample<f64>> = Vec::new();
    for (line, rec) in records(context, reader, &POSE_HEADER)? {
        let frame: u64 = field(context, line, "frame", &rec[0])?;
        let timestamp: f64 = field(context, line, "timestamp", &rec[1])?;
        let mut entries = [0.0; 9];
        for (i, e) in entries.iter_mut().enumerate() {
            *e = field(context, line, POSE_HEADER[i + 2], &rec[i + 2])?;
        }
        let pose =
            validate_pose(frame, timestamp, entries).map_err(|e| Error::parse(format!("{context} line {line}"), e))?;
        if let Some(last) = poses.last() {
            if frame <= last.frame_index {
                return Err(Error::OutOfOrderFrame { last: last.frame_index, got: frame });
            }
            if timestamp <= last.timestamp {
                return Err(Error::parse(format!("{context} line {line}"), "timestamps must strictly increase"));
            }
        }
        poses.push(pose);
    }
    Ok(poses)
}

pub fn read_poses_file(path: &Path) -> Result<Vec<PoseSample<f64>>> {
    read_poses(&path.display().to_string(), open(path)?)
}

pub fn write_poses<W: Write>(context: &str, mut w: W, poses: &[PoseSample<f64>]) -> Result<()> {
    let io = write_err(context);
    writeln!(w, "{}", POSE_HEADER.join(",")).map_err(&io)?;
    for p in poses {
        let m = p.delta_r().to_row_major().map(|x| x.to_string()).join(",");
        writeln!(w, "{},{},{}", p.frame_index, p.timestamp, m).map_err(&io)?;
    }
    w.flush().map_err(&io)
}

// ----------------------------------------------------------- detections

pub fn read_detections<R: Read>(
    context: &str,
    reader: R,
    calib: &CameraCalibration<f64>,
) -> Result<Vec<Detection<f64>>> {
    records(context, reader, &DETECTION_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let frame = field(context, line, "frame", &rec[0])?;
            let track = field(context, line, "track", &rec[1])?;
            let bbox = BBox {
                x_min: field(context, line, "x_min", &rec[2])?,
                y_min: field(context, line, "y_min", &rec[3])?,
                x_max: field(context, line, "x_max", &rec[4])?,
                y_max: field(context, line, "y_max", &rec[5])?,
            };
            Detection::new(frame, track, bbox, calib.image_width(), calib.image_height())
                .map_err(|e| Error::parse(format!("{context} line {line}"), e))
        })
        .collect()
}

pub fn read_detections_file(path: &Path, calib: &CameraCalibration<f64>) -> Result<Vec<Detection<f64>>> {
    read_detections(&path.display().to_string(), open(path)?, calib)
}

pub fn write_detections<W: Write>(context: &str, mut w: W, detections: &[Detection<f64>]) -> Result<()> {
    let io = write_err(context);
    writeln!(w, "{}", DETECTION_HEADER.join(",")).map_err(&io)?;
    for d in detections {
        let b = d.bbox();
        writeln!(w, "{},{},{},{},{},{}", d.frame_index, d.track_id, b.x_min, b.y_min, b.x_max, b.y_max).map_err(&io)?;
    }
    w.flush().map_err(&io)
}

// ------------------------------------------------------------ estimates

fn opt_sig6(x: Option<f64>) -> String {
    x.map(fmt_sig6).unwrap_or_default()
}

pub fn write_estimates<W: Write, T: Scalar>(context: &str, mut w: W, estimates: &[DistanceEstimate<T>]) -> Result<()> {
    let io = write_err(context);
    writeln!(w, "{}", ESTIMATE_HEADER.join(",")).map_err(&io)?;
    for e in estimates {
        let f = |x: Option<T>| opt_sig6(x.map(Scalar::to_f64_lossy));
        let deg = |x: Option<T>| opt_sig6(x.map(|t| t.to_f64_lossy().to_degrees()));
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            e.frame_index,
            e.track_id,
            f(e.distance_m),
            deg(e.theta_ego()),
            deg(e.theta_adjusted()),
            f(e.v_line()),
            f(e.delta_y_px()),
            e.flag
        )
        .map_err(&io)?;
    }
    w.flush().map_err(&io)
}

pub fn write_estimates_file<T: Scalar>(path: &Path, estimates: &[DistanceEstimate<T>]) -> Result<()> {
    write_estimates(&path.display().to_string(), create(path)?, estimates)
}

/// Reads an estimate CSV back. Angles are converted to radians.
pub fn read_estimates<R: Read>(context: &str, reader: R) -> Result<Vec<DistanceEstimate<f64>>> {
    records(context, reader, &ESTIMATE_HEADER)?
        .into_iter()
        .map(|(line, rec)| {
            let flag: Flag = field(context, line, "flag", &rec[7])?;
            let distance_m = opt_field(context, line, "distance_m", &rec[2])?;
            let parts = [
                opt_field(context, line, "theta_deg", &rec[3])?,
                opt_field(context, line, "theta_adj_deg", &rec[4])?,
                opt_field(context, line, "v_px", &rec[5])?,
                opt_field(context, line, "delta_y_px", &rec[6])?,
            ];
            let geometry = match parts {
                [Some(t), Some(ta), Some(v), Some(dy)] => Some(Geometry {
                    theta_ego: t.to_radians(),
                    theta_adjusted: ta.to_radians(),
                    v_line: v,
                    delta_y_px: dy,
                }),
                _ => None,
            };
            if distance_m.is_some() != flag.has_distance() {
                return Err(Error::parse(
                    format!("{context} line {line}"),
                    format!("flag {flag} inconsistent with distance column"),
                ));
            }
            Ok(DistanceEstimate {
                frame_index: field(context, line, "frame", &rec[0])?,
                track_id: field(context, line, "track", &rec[1])?,
                distance_m,
                geometry,
                flag,
            })
        })
        .collect()
}

pub fn read_estimates_file(path: &Path) -> Result<Vec<DistanceEstimate<f64>>> {
    read_estimates(&path.display().to_string(), open(path)?)
}

// ---------------------------------------------------------------- truth

/// One ground-truth row as consumed by the evaluator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthRow {
    pub frame_index: u64,
    pub track_id: Option<u64>,
    pub distance_m: f64,
}

pub fn write_truth<W: Write>(context: &str, mut w: W, truth: &[GroundTruthRecord]) -> Result<()> {
    let io = write_err(context);
    writeln!(w, "{}", TRUTH_HEADER.join(",")).map_err(&io)?;
    for r in truth {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.frame_index,
            r.true_distance_m,
            r.true_theta_ego_rad.to_degrees(),
            r.true_theta_target_rad.to_degrees(),
            r.on_same_plane,
            r.euclid_distance_m
        )
        .map_err(&io)?;
    }
    w.flush().map_err(&io)
}

/// Reads a truth CSV. Requires `frame` and `true_distance_m` columns; an
/// optional `track` column enables track-id joining. Other columns are
/// ignored.
pub fn read_truth<R: Read>(context: &str, reader: R) -> Result<Vec<TruthRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(context, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (Some(frame_col), Some(dist_col)) = (col("frame"), col("true_distance_m")) else {
        return Err(Error::BadHeader { path: context.into(), expected: TRUTH_HEADER.join(",") });
    };
    let track_col = col("track");
    rdr.records()
        .map(|r| {
            let rec = r.map_err(|e| csv_err(context, e))?;
            let line = rec.position().map_or(0, |p| p.line());
            let distance_m: f64 = field(context, line, "true_distance_m", &rec[dist_col])?;
            if !(distance_m.is_finite() && distance_m > 0.0) {
                return Err(Error::parse(format!("{context} line {line}"), "true_distance_m must be > 0"));
            }
            Ok(TruthRow {
                frame_index: field(context, line, "frame", &rec[frame_col])?,
                track_id: track_col.map(|c| field(context, line, "track", &rec[c])).transpose()?,
                distance_m,
            })
        })
        .collect()
}

pub fn read_truth_file(path: &Path) -> Result<Vec<TruthRow>> {
    read_truth(&path.display().to_string(), open(path)?)
}

// ---------------------------------------------------------- calibration

fn numeric_table(table: &toml::Table) -> Result<BTreeMap<String, f64>> {
    table
        .iter()
        .map(|(k, v)| {
            let x = match v {
                toml::Value::Integer(i) => *i as f64,
                toml::Value::Float(f) => *f,
                _ => return Err(Error::NotNumeric(k.clone())),
            };
            Ok((k.clone(), x))
        })
        .collect()
}

/// Parses a flat `key = value` calibration file.
pub fn parse_calibration(context: &str, text: &str) -> Result<CameraCalibration<f64>> {
    let table: toml::Table = text.parse().map_err(|e| Error::parse(context, e))?;
    validate_calibration(&numeric_table(&table)?)
}

pub fn read_calibration_file(path: &Path) -> Result<CameraCalibration<f64>> {
    parse_calibration(&path.display().to_string(), &read_to_string(path)?)
}

pub fn format_calibration(calib: &CameraCalibration<f64>) -> String {
    let mut s = String::new();
    match calib.focal() {
        FocalLength::Metric { f, delta_y } => {
            s += &format!("f = {f:?}\ndelta_y = {delta_y:?}\n");
        }
        FocalLength::Pixels(px) => s += &format!("focal_px = {px:?}\n"),
    }
    s += &format!(
        "h = {:?}\nc_y = {:?}\ntheta_0 = {:?}\nimage_width = {}\nimage_height = {}\n",
        calib.h(),
        calib.c_y(),
        calib.theta_0(),
        calib.image_width(),
        calib.image_height()
    );
    s
}

pub fn write_calibration_file(path: &Path, calib: &CameraCalibration<f64>) -> Result<()> {
    std::fs::write(path, format_calibration(calib)).map_err(|source| Error::Io { path: path.into(), source })
}

// --------------------------------------------------------------- config

/// Pipeline tuning file; every key is optional.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub time_interval_s: f64,
    pub alpha1_deg: f64,
    pub alpha2_deg: f64,
    pub alpha3_deg: f64,
    pub t1_px: f64,
    pub t2_px: f64,
    pub t3_px: f64,
    pub epsilon_px: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            time_interval_s: 1.0,
            alpha1_deg: 3.0,
            alpha2_deg: 5.0,
            alpha3_deg: 6.0,
            t1_px: 0.0,
            t2_px: -10.0,
            t3_px: -20.0,
            epsilon_px: DEFAULT_EPSILON_PX,
        }
    }
}

impl PipelineConfig {
    pub fn parse(context: &str, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse(context, e))
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::parse(&path.display().to_string(), &read_to_string(path)?)
    }

    /// Validated pipeline options for the given calibration.
    pub fn options<T: Scalar>(&self, calib: &CameraCalibration<T>) -> Result<PipelineOptions<T>> {
        if !(self.epsilon_px.is_finite() && self.epsilon_px >= 0.0) {
            return Err(Error::invariant("epsilon_px >= 0"));
        }
        Ok(PipelineOptions {
            gradient: GradientEstimatorConfig::new(T::lit(self.time_interval_s), calib.theta_0())?,
            policy: AdjustmentPolicy::from_degrees(
                [self.alpha1_deg, self.alpha2_deg, self.alpha3_deg],
                [self.t1_px, self.t2_px, self.t3_px],
            )?,
            adjust: true,
            epsilon_px: T::lit(self.epsilon_px),
        })
    }
}

// ------------------------------------------------------------- scenario

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    knots: Vec<[f64; 2]>,
    ego_speed: f64,
    frame_rate: f64,
    duration: f64,
    target_lead: f64,
    target_speed: f64,
    #[serde(default)]
    pixel_noise_sigma: f64,
    #[serde(default = "default_target_height")]
    target_height: f64,
    #[serde(default = "default_target_width")]
    target_width: f64,
    #[serde(default)]
    seed: u64,
    calibration: toml::Table,
}

fn default_target_height() -> f64 {
    1.5
}

fn default_target_width() -> f64 {
    1.8
}

/// Parses a scenario file: top-level scalars, a `knots` array of
/// `[station_m, elevation_m]` pairs and a `[calibration]` table.
pub fn parse_scenario(context: &str, text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::parse(context, e))?;
    let calib = validate_calibration(&numeric_table(&file.calibration)?)?;
    let profile = ElevationProfile::new(file.knots.into_iter().map(|[s, z]| (s, z)).collect())?;
    let scenario = Scenario {
        profile,
        ego_speed: file.ego_speed,
        frame_rate: file.frame_rate,
        duration: file.duration,
        target_lead: file.target_lead,
        target_speed: file.target_speed,
        calib,
        pixel_noise_sigma: file.pixel_noise_sigma,
        target_height: file.target_height,
        target_width: file.target_width,
        seed: file.seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn read_scenario_file(path: &Path) -> Result<Scenario> {
    parse_scenario(&path.display().to_string(), &read_to_string(path)?)
}

/// File names written by [`write_simulation`] inside the output directory.
pub const SIM_FILES: SimFiles =
    SimFiles { calibration: "calibration.toml", poses: "poses.csv", detections: "detections.csv", truth: "truth.csv" };

pub struct SimFiles {
    pub calibration: &'static str,
    pub poses: &'static str,
    pub detections: &'static str,
    pub truth: &'static str,
}

/// Writes calibration, pose, detection and truth files into `dir`.
pub fn write_simulation(
    dir: &Path,
    calib: &CameraCalibration<f64>,
    out: &crate::simulator::SimulationOutput,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    write_calibration_file(&dir.join(SIM_FILES.calibration), calib)?;
    let p = dir.join(SIM_FILES.poses);
    write_poses(&p.display().to_string(), create(&p)?, &out.poses)?;
    let p = dir.join(SIM_FILES.detections);
    write_detections(&p.display().to_string(), create(&p)?, &out.detections)?;
    let p = dir.join(SIM_FILES.truth);
    write_truth(&p.display().to_string(), create(&p)?, &out.truth)
}
