//! RMSE evaluation of estimate streams against ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{fmt_sig6, TruthRow};
use crate::scalar::Scalar;
use crate::types::{DistanceEstimate, Flag};

/// Gate for nearest-distance matching when a frame has several targets.
pub const MATCH_GATE_M: f64 = 3.0;

/// Root-mean-square error of `(estimate, truth)` pairs.
pub fn rmse<T: Scalar>(pairs: &[(T, T)]) -> Result<T> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum = pairs.iter().fold(T::zero(), |acc, &(e, t)| acc + (e - t) * (e - t));
    Ok((sum / T::lit(pairs.len() as f64)).sqrt())
}

/// Outcome of joining estimates to truth.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Join {
    /// `(estimate, truth)` distances for matched rows that carry a distance.
    pub pairs: Vec<(f64, f64)>,
    /// Matched rows whose estimate has no distance (warm-up, degenerate).
    pub excluded: usize,
    /// Truth frames with at least one matched estimate.
    pub matched_frames: usize,
    pub truth_frames: usize,
}

/// Joins estimates to truth frame by frame.
///
/// A frame with one truth row and one estimate pairs them directly.
/// Otherwise rows are matched by track id when the truth carries one, else
/// greedily by nearest distance within [`MATCH_GATE_M`].
pub fn join(estimates: &[DistanceEstimate<f64>], truth: &[TruthRow]) -> Join {
    let mut est_by_frame: BTreeMap<u64, Vec<&DistanceEstimate<f64>>> = BTreeMap::new();
    for e in estimates {
        est_by_frame.entry(e.frame_index).or_default().push(e);
    }
    let mut truth_by_frame: BTreeMap<u64, Vec<&TruthRow>> = BTreeMap::new();
    for t in truth {
        truth_by_frame.entry(t.frame_index).or_default().push(t);
    }

    let mut out = Join { truth_frames: truth_by_frame.len(), ..Default::default() };
    for (frame, truths) in &truth_by_frame {
        let ests = est_by_frame.get(frame).map(Vec::as_slice).unwrap_or(&[]);
        let matched = match_frame(truths, ests);
        if !matched.is_empty() {
            out.matched_frames += 1;
        }
        for (e, t) in matched {
            match e.distance_m {
                Some(d) => out.pairs.push((d, t.distance_m)),
                None => out.excluded += 1,
            }
        }
    }
    out
}

fn match_frame<'a>(
    truths: &[&'a TruthRow],
    ests: &[&'a DistanceEstimate<f64>],
) -> Vec<(&'a DistanceEstimate<f64>, &'a TruthRow)> {
    if let ([t], [e]) = (truths, ests) {
        return vec![(*e, *t)];
    }
    if truths.iter().all(|t| t.track_id.is_some()) {
        return truths
            .iter()
            .filter_map(|t| ests.iter().find(|e| Some(e.track_id) == t.track_id).map(|e| (*e, *t)))
            .collect();
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, t) in truths.iter().enumerate() {
        for (ei, e) in ests.iter().enumerate() {
            if let Some(d) = e.distance_m {
                let gap = (d - t.distance_m).abs();
                if gap <= MATCH_GATE_M {
                    candidates.push((gap, ti, ei));
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut used_t, mut used_e) = (vec![false; truths.len()], vec![false; ests.len()]);
    let mut out = Vec::new();
    for (_, ti, ei) in candidates {
        if !used_t[ti] && !used_e[ei] {
            used_t[ti] = true;
            used_e[ei] = true;
            out.push((ests[ei], truths[ti]));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub sequence: String,
    pub rmse_m: f64,
    pub rmse_ablated_m: Option<f64>,
    pub frames: usize,
    pub matched_pairs: usize,
    pub excluded: usize,
    pub flag_histogram: BTreeMap<String, usize>,
    pub mean_frame_time_s: Option<f64>,
}

/// Inputs besides the two streams.
#[derive(Clone, Debug, Default)]
pub struct EvalOptions<'a> {
    pub sequence: String,
    /// Estimates of the same sequence with adjustment disabled.
    pub ablated: Option<&'a [DistanceEstimate<f64>]>,
    pub mean_frame_time_s: Option<f64>,
}

fn joined_rmse(estimates: &[DistanceEstimate<f64>], truth: &[TruthRow]) -> Result<(Join, f64)> {
    let j = join(estimates, truth);
    if 2 * j.matched_frames < j.truth_frames {
        return Err(Error::JoinMismatch { matched: j.matched_frames, total: j.truth_frames });
    }
    let r = rmse(&j.pairs)?;
    Ok((j, r))
}

pub fn evaluate(
    estimates: &[DistanceEstimate<f64>],
    truth: &[TruthRow],
    options: EvalOptions<'_>,
) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (j, rmse_m) = joined_rmse(estimates, truth)?;
    let rmse_ablated_m = options.ablated.map(|a| joined_rmse(a, truth).map(|(_, r)| r)).transpose()?;
    let mut flag_histogram: BTreeMap<String, usize> = BTreeMap::new();
    for e in estimates {
        *flag_histogram.entry(e.flag.to_string()).or_default() += 1;
    }
    Ok(EvalReport {
        sequence: options.sequence,
        rmse_m,
        rmse_ablated_m,
        frames: j.truth_frames,
        matched_pairs: j.pairs.len(),
        excluded: j.excluded,
        flag_histogram,
        mean_frame_time_s: options.mean_frame_time_s,
    })
}

impl EvalReport {
    /// Plain-text table followed by the flag histogram.
    pub fn to_table(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_sig6).unwrap_or_else(|| "-".into());
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:>10} {:>15} {:>8} {:>9} {:>18}",
            "sequence", "RMSE_m", "RMSE_ablated_m", "frames", "excluded", "mean_frame_time_s"
        );
        let _ = writeln!(
            s,
            "{:<20} {:>10} {:>15} {:>8} {:>9} {:>18}",
            self.sequence,
            fmt_sig6(self.rmse_m),
            opt(self.rmse_ablated_m),
            self.frames,
            self.excluded,
            opt(self.mean_frame_time_s)
        );
        let _ = writeln!(s, "matched pairs: {}", self.matched_pairs);
        let _ = writeln!(s, "flags:");
        for flag in Flag::ALL {
            if let Some(n) = self.flag_histogram.get(flag.as_str()) {
                let _ = writeln!(s, "  {:<20} {n}", flag.as_str());
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(frame: u64, track: u64, d: Option<f64>) -> DistanceEstimate<f64> {
        let flag = if d.is_some() { Flag::SamePlane } else { Flag::NoPoseHistory };
        DistanceEstimate { frame_index: frame, track_id: track, distance_m: d, geometry: None, flag }
    }

    fn truth(frame: u64, d: f64) -> TruthRow {
        TruthRow { frame_index: frame, track_id: None, distance_m: d }
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[(15.0, 15.0)]).unwrap(), 0.0);
        assert!((rmse::<f64>(&[(16.0, 15.0), (14.0, 15.0)]).unwrap() - 1.0).abs() < 1e-12);
        assert!((rmse::<f64>(&[(15.0, 15.0), (19.0, 15.0)]).unwrap() - 2.828_427_124_746_19).abs() < 1e-12);
        assert!(matches!(rmse::<f64>(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn warm_up_rows_are_excluded_and_counted() {
        let e = [est(0, 0, None), est(1, 0, Some(16.0)), est(2, 0, Some(14.0))];
        let t = [truth(0, 15.0), truth(1, 15.0), truth(2, 15.0)];
        let r = evaluate(&e, &t, EvalOptions::default()).unwrap();
        assert_eq!(r.excluded, 1);
        assert_eq!(r.matched_pairs, 2);
        assert!((r.rmse_m - 1.0).abs() < 1e-12);
        assert_eq!(r.flag_histogram["NO_POSE_HISTORY"], 1);
    }

    #[test]
    fn empty_estimates_is_join_mismatch() {
        let t = [truth(0, 15.0)];
        assert!(matches!(evaluate(&[], &t, EvalOptions::default()), Err(Error::JoinMismatch { .. })));
    }

    #[test]
    fn multi_target_uses_gate() {
        let e = [est(0, 7, Some(10.5)), est(0, 8, Some(30.0))];
        let t = [truth(0, 10.0), truth(0, 20.0)];
        let j = join(&e, &t);
        assert_eq!(j.pairs, vec![(10.5, 10.0)]);
        assert_eq!(j.matched_frames, 1);
    }

    #[test]
    fn multi_target_uses_track_ids_when_present() {
        let e = [est(0, 7, Some(10.5)), est(0, 8, Some(30.0))];
        let t = [
            TruthRow { frame_index: 0, track_id: Some(8), distance_m: 20.0 },
            TruthRow { frame_index: 0, track_id: Some(7), distance_m: 10.0 },
        ];
        assert_eq!(join(&e, &t).pairs, vec![(30.0, 20.0), (10.5, 10.0)]);
    }

    #[test]
    fn single_target_frames_pair_without_gate() {
        let e = [est(0, 0, Some(40.0))];
        let t = [truth(0, 15.0)];
        assert_eq!(join(&e, &t).pairs, vec![(40.0, 15.0)]);
    }
}
