//! RMSE metrics, task splits and grouped generalization reports.
//!
//! Target pixels equal to the padding fill (−1) are never scored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::raster::pairwise_sum;
use crate::types::{RadioMap, SampleMeta, SeenFlags, Split, PAD_VALUE};

/// Squared-error sum and scored pixel count of one map.
fn map_sse(pred: &RadioMap, target: &RadioMap, mask: Option<&Array2<bool>>) -> Result<(f64, usize)> {
    if pred.dim() != target.dim() {
        return Err(Error::Shape(format!("prediction {:?} vs target {:?}", pred.dim(), target.dim())));
    }
    if let Some(m) = mask {
        if m.dim() != target.dim() {
            return Err(Error::Shape(format!("mask {:?} vs target {:?}", m.dim(), target.dim())));
        }
    }
    let scored = |i: usize, t: f64| t != PAD_VALUE && mask.is_none_or(|m| m.as_slice().is_some_and(|s| s[i]));
    let errs: Vec<f64> = pred
        .values()
        .iter()
        .zip(target.values().iter())
        .enumerate()
        .filter(|&(i, (_, &t))| scored(i, t))
        .map(|(_, (&p, &t))| (p - t) * (p - t))
        .collect();
    Ok((pairwise_sum(&errs), errs.len()))
}

fn all_sse(
    preds: &[RadioMap],
    targets: &[RadioMap],
    masks: Option<&[Array2<bool>]>,
) -> Result<Vec<(f64, usize)>> {
    if preds.len() != targets.len() {
        bail_arg!("{} predictions for {} targets", preds.len(), targets.len());
    }
    if let Some(m) = masks {
        if m.len() != targets.len() {
            bail_arg!("{} masks for {} targets", m.len(), targets.len());
        }
    }
    if preds.is_empty() {
        bail_arg!("no maps to score");
    }
    // map_sse indexes masks by row-major position
    let masks: Option<Vec<Array2<bool>>> = masks.map(|ms| ms.iter().map(|m| m.as_standard_layout().into_owned()).collect());
    (0..preds.len())
        .into_par_iter()
        .map(|i| map_sse(&preds[i], &targets[i], masks.as_ref().map(|m| &m[i])))
        .collect()
}

/// RMSE pooled over every scored pixel of every map.
pub fn rmse_micro(preds: &[RadioMap], targets: &[RadioMap], masks: Option<&[Array2<bool>]>) -> Result<f64> {
    let parts = all_sse(preds, targets, masks)?;
    let count: usize = parts.iter().map(|p| p.1).sum();
    if count == 0 {
        bail_arg!("no scored pixels");
    }
    let sse: Vec<f64> = parts.iter().map(|p| p.0).collect();
    Ok((pairwise_sum(&sse) / count as f64).sqrt())
}

/// Per-map RMSEs.
pub fn rmse_per_map(preds: &[RadioMap], targets: &[RadioMap], masks: Option<&[Array2<bool>]>) -> Result<Vec<f64>> {
    all_sse(preds, targets, masks)?
        .into_iter()
        .enumerate()
        .map(|(i, (sse, n))| {
            if n == 0 {
                Err(Error::Argument(format!("map {i} has no scored pixels")))
            } else {
                Ok((sse / n as f64).sqrt())
            }
        })
        .collect()
}

/// Unweighted mean of per-map RMSEs.
pub fn rmse_macro(preds: &[RadioMap], targets: &[RadioMap], masks: Option<&[Array2<bool>]>) -> Result<f64> {
    let per_map = rmse_per_map(preds, targets, masks)?;
    Ok(pairwise_sum(&per_map) / per_map.len() as f64)
}

/// Task-weighted mean of per-task scores, `(score, weight)` pairs.
pub fn weighted_average(scores: &[(f64, f64)]) -> Result<f64> {
    let total: f64 = scores.iter().map(|s| s.1).sum();
    if scores.iter().any(|s| s.1 < 0.0 || !s.1.is_finite()) || !(total > 0.0) {
        bail_arg!("weights must be non-negative with a positive sum");
    }
    Ok(scores.iter().map(|(v, w)| v * w).sum::<f64>() / total)
}

/// Values of each generalization axis in one split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSets {
    pub buildings: Vec<u32>,
    pub freqs_mhz: Vec<u32>,
    pub antennas: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub task: u8,
    pub train: AxisSets,
    pub val: AxisSets,
    pub test: AxisSets,
}

/// The fixed train/val/test partition of a task.
pub fn make_split(task: u8) -> Result<SplitSpec> {
    let sets = |buildings: std::ops::RangeInclusive<u32>, freqs: &[u32], antennas: &[u32]| AxisSets {
        buildings: buildings.collect(),
        freqs_mhz: freqs.to_vec(),
        antennas: antennas.to_vec(),
    };
    let (train_f, held_f): (&[u32], &[u32]) = match task {
        1 => (&[868], &[868]),
        2 | 3 => (&[868, 3500], &[1800]),
        t => bail_arg!("task must be 1, 2 or 3, got {t}"),
    };
    let (train_a, val_a, test_a): (&[u32], &[u32], &[u32]) = if task == 3 {
        (&[1, 2, 3], &[4], &[5])
    } else {
        (&[1], &[1], &[1])
    };
    Ok(SplitSpec {
        task,
        train: sets(1..=19, train_f, train_a),
        val: sets(20..=22, held_f, val_a),
        test: sets(23..=25, held_f, test_a),
    })
}

impl SplitSpec {
    pub fn sets(&self, split: Split) -> &AxisSets {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    /// Seen means the value occurs in the training split.
    pub fn seen_flags(&self, meta: &SampleMeta) -> SeenFlags {
        SeenFlags {
            building: self.train.buildings.contains(&meta.building_id),
            frequency: self.train.freqs_mhz.iter().any(|&f| f as f64 == meta.freq_mhz),
            antenna: self.train.antennas.contains(&meta.antenna_id),
        }
    }

    /// Whether a sample's ids are consistent with its declared split.
    pub fn admits(&self, meta: &SampleMeta) -> bool {
        let s = self.sets(meta.split);
        s.buildings.contains(&meta.building_id)
            && s.freqs_mhz.iter().any(|&f| f as f64 == meta.freq_mhz)
            && s.antennas.contains(&meta.antenna_id)
    }
}

/// Generalization axis used to group results.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupAxis {
    Building,
    Frequency,
    Antenna,
}

impl GroupAxis {
    pub const ALL: [GroupAxis; 3] = [GroupAxis::Building, GroupAxis::Frequency, GroupAxis::Antenna];

    fn name(self) -> &'static str {
        match self {
            GroupAxis::Building => "building",
            GroupAxis::Frequency => "frequency",
            GroupAxis::Antenna => "antenna",
        }
    }

    fn flag(self, seen: &SeenFlags) -> bool {
        match self {
            GroupAxis::Building => seen.building,
            GroupAxis::Frequency => seen.frequency,
            GroupAxis::Antenna => seen.antenna,
        }
    }
}

impl std::str::FromStr for GroupAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "building" => Ok(GroupAxis::Building),
            "freq" | "frequency" => Ok(GroupAxis::Frequency),
            "antenna" => Ok(GroupAxis::Antenna),
            other => Err(format!("unknown group axis `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapScore {
    pub meta: SampleMeta,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub label: String,
    pub maps: usize,
    pub rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_map: Vec<MapScore>,
    pub micro_rmse: f64,
    pub macro_rmse: f64,
    pub groups: Vec<GroupScore>,
}

/// Scores every map and reports macro RMSE for each seen/unseen combination
/// of `axes` that occurs in the data.
pub fn grouped_report(
    preds: &[RadioMap],
    targets: &[RadioMap],
    metas: &[SampleMeta],
    axes: &[GroupAxis],
) -> Result<EvalReport> {
    if metas.len() != preds.len() {
        bail_arg!("{} metadata records for {} maps", metas.len(), preds.len());
    }
    let per_map = rmse_per_map(preds, targets, None)?;
    let micro_rmse = rmse_micro(preds, targets, None)?;
    let macro_rmse = pairwise_sum(&per_map) / per_map.len() as f64;

    let mut axes = axes.to_vec();
    axes.sort();
    axes.dedup();
    let mut buckets: BTreeMap<Vec<bool>, Vec<f64>> = BTreeMap::new();
    if !axes.is_empty() {
        for (meta, &rmse) in metas.iter().zip(&per_map) {
            let seen = meta.seen.as_ref().ok_or_else(|| {
                Error::Argument(format!(
                    "sample (building {}, antenna {}, {} MHz) carries no seen/unseen flags",
                    meta.building_id, meta.antenna_id, meta.freq_mhz
                ))
            })?;
            // unseen sorts first
            let key: Vec<bool> = axes.iter().map(|a| a.flag(seen)).collect();
            buckets.entry(key).or_default().push(rmse);
        }
    }
    let groups = buckets
        .into_iter()
        .map(|(key, rmses)| {
            let label = axes
                .iter()
                .zip(&key)
                .map(|(a, &seen)| format!("{}={}", a.name(), if seen { "seen" } else { "unseen" }))
                .collect::<Vec<_>>()
                .join(" ");
            GroupScore {
                label,
                maps: rmses.len(),
                rmse: pairwise_sum(&rmses) / rmses.len() as f64,
            }
        })
        .collect();

    Ok(EvalReport {
        per_map: metas
            .iter()
            .zip(per_map)
            .map(|(m, rmse)| MapScore { meta: m.clone(), rmse })
            .collect(),
        micro_rmse,
        macro_rmse,
        groups,
    })
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let width = self.groups.iter().map(|g| g.label.len()).max().unwrap_or(0).max(12);
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>10}", "group", "maps", "RMSE (dB)");
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>10.4}", "overall/micro", self.per_map.len(), self.micro_rmse);
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>10.4}", "overall/macro", self.per_map.len(), self.macro_rmse);
        for g in &self.groups {
            let _ = writeln!(out, "{:<width$}  {:>6}  {:>10.4}", g.label, g.maps, g.rmse);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: &[f64], h: usize, w: usize) -> RadioMap {
        RadioMap::new(Array2::from_shape_vec((h, w), values.to_vec()).unwrap()).unwrap()
    }

    fn meta(building: u32, seen: Option<SeenFlags>) -> SampleMeta {
        SampleMeta {
            building_id: building,
            antenna_id: 1,
            freq_mhz: 868.0,
            tx_index: 0,
            split: Split::Test,
            seen,
        }
    }

    #[test]
    fn identical_maps_score_zero() {
        let a = map(&[1.0, 2.0, 3.0, 4.0], 2, 2);
        assert_eq!(rmse_micro(&[a.clone()], &[a.clone()], None).unwrap(), 0.0);
        assert_eq!(rmse_macro(&[a.clone()], &[a], None).unwrap(), 0.0);
    }

    #[test]
    fn micro_vs_macro_worked_example() {
        let preds = [map(&[3.0; 4], 2, 2), map(&[4.0; 16], 4, 4)];
        let targets = [map(&[0.0; 4], 2, 2), map(&[0.0; 16], 4, 4)];
        let micro = rmse_micro(&preds, &targets, None).unwrap();
        assert!((micro - (292.0f64 / 20.0).sqrt()).abs() < 1e-12);
        assert!((micro - 3.8210).abs() < 5e-5);
        assert_eq!(rmse_macro(&preds, &targets, None).unwrap(), 3.5);
    }

    #[test]
    fn symmetric_errors() {
        let p = map(&[3.0, -3.0], 1, 2);
        let t = map(&[0.0, 0.0], 1, 2);
        assert_eq!(rmse_micro(&[p], &[t], None).unwrap(), 3.0);
    }

    #[test]
    fn padding_and_masks_excluded() {
        let p = map(&[5.0, 100.0, 7.0], 1, 3);
        let t = map(&[5.0, -1.0, 4.0], 1, 3);
        assert_eq!(rmse_micro(&[p.clone()], &[t.clone()], None).unwrap(), (9.0f64 / 2.0).sqrt());
        let mask = Array2::from_shape_vec((1, 3), vec![true, true, false]).unwrap();
        assert_eq!(rmse_micro(&[p.clone()], &[t.clone()], Some(&[mask])).unwrap(), 0.0);
        let none = Array2::from_elem((1, 3), false);
        assert!(matches!(rmse_micro(&[p.clone()], &[t.clone()], Some(&[none.clone()])), Err(Error::Argument(_))));
        assert!(rmse_macro(&[p], &[t], Some(&[none])).is_err());
    }

    #[test]
    fn shape_and_count_mismatches() {
        let a = map(&[1.0; 4], 2, 2);
        let b = map(&[1.0; 6], 2, 3);
        assert!(rmse_micro(&[a.clone()], &[b], None).is_err());
        assert!(rmse_micro(&[a.clone(), a.clone()], &[a], None).is_err());
        assert!(rmse_micro(&[], &[], None).is_err());
    }

    #[test]
    fn splits_follow_the_protocol() {
        let t1 = make_split(1).unwrap();
        assert_eq!(t1.val.buildings, vec![20, 21, 22]);
        assert_eq!(t1.train.freqs_mhz, vec![868]);
        assert_eq!(t1.test.freqs_mhz, vec![868]);
        assert_eq!(make_split(2).unwrap().test.freqs_mhz, vec![1800]);
        let t3 = make_split(3).unwrap();
        assert_eq!(t3.test.antennas, vec![5]);
        assert_eq!(t3.val.antennas, vec![4]);
        assert_eq!(t3.train.antennas, vec![1, 2, 3]);
        assert!(matches!(make_split(0), Err(Error::Argument(_))));
        assert!(make_split(4).is_err());
    }

    #[test]
    fn seen_flags_from_split() {
        let s = make_split(3).unwrap();
        let mut m = meta(24, None);
        m.freq_mhz = 3500.0;
        m.antenna_id = 5;
        let f = s.seen_flags(&m);
        assert_eq!((f.building, f.frequency, f.antenna), (false, true, false));
        assert!(!s.admits(&m));
        m.freq_mhz = 1800.0;
        assert!(s.admits(&m));
    }

    #[test]
    fn one_group_equals_overall_macro() {
        let seen = Some(SeenFlags { building: false, frequency: true, antenna: true });
        let preds = [map(&[2.0; 4], 2, 2), map(&[4.0; 4], 2, 2)];
        let targets = [map(&[0.0; 4], 2, 2), map(&[0.0; 4], 2, 2)];
        let r = grouped_report(&preds, &targets, &[meta(23, seen), meta(24, seen)], &GroupAxis::ALL).unwrap();
        assert_eq!(r.groups.len(), 1);
        assert_eq!(r.groups[0].rmse, r.macro_rmse);
        assert!(r.to_table().contains("building=unseen frequency=seen antenna=seen"));
    }

    #[test]
    fn two_groups_keep_their_values() {
        let a = Some(SeenFlags { building: true, frequency: true, antenna: true });
        let b = Some(SeenFlags { building: false, frequency: true, antenna: true });
        let preds = [map(&[2.0; 4], 2, 2), map(&[4.0; 4], 2, 2)];
        let targets = [map(&[0.0; 4], 2, 2), map(&[0.0; 4], 2, 2)];
        let r = grouped_report(&preds, &targets, &[meta(1, a), meta(23, b)], &[GroupAxis::Building]).unwrap();
        let vals: Vec<f64> = r.groups.iter().map(|g| g.rmse).collect();
        assert_eq!(vals, vec![4.0, 2.0]);
    }

    #[test]
    fn missing_flags_rejected() {
        let m = map(&[0.0; 4], 2, 2);
        let err = grouped_report(&[m.clone()], &[m.clone()], &[meta(1, None)], &GroupAxis::ALL).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
        // without grouping, flags are not needed
        assert!(grouped_report(&[m.clone()], &[m], &[meta(1, None)], &[]).is_ok());
        assert!(grouped_report(&[], &[], &[], &[]).is_err());
    }

    #[test]
    fn weighted_average_rules() {
        assert_eq!(weighted_average(&[(10.0, 1.0), (20.0, 3.0)]).unwrap(), 17.5);
        assert!(weighted_average(&[(10.0, 0.0)]).is_err());
        assert!(weighted_average(&[(10.0, -1.0), (3.0, 2.0)]).is_err());
    }
}
