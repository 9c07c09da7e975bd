//! CLEAR-style tracking metrics and a simplified HOTA.
//!
//! Per frame, predictions are matched to ground truth of the same class by
//! minimum total `1 − IoU` (bird's-eye view). Pairs below the IoU threshold
//! can never match. From the matches:
//!
//! - `MOTA = 1 − (FP + FN + IDSW) / GT`
//! - `DetA = TP / (TP + FP + FN)`
//! - `AssA` = mean IoU over matched pairs
//! - `hota_simplified = √(DetA · AssA)`; this is not the official HOTA.
//!
//! An identity switch is counted when a ground-truth object is matched to a
//! different prediction id than at its previous matched frame.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{solve, CostMatrix};
use crate::geometry::bev_iou;
use crate::io_kitti::LabeledTrack;

pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.5;
pub const MOSTLY_TRACKED_RATIO: f64 = 0.8;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("results cover {results} frames but labels cover {labels}")]
    LengthMismatch { results: usize, labels: usize },
    #[error("match threshold must lie in (0, 1), got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct FrameCounts {
    pub frame: u32,
    pub gt: u64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub idsw: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mota: f64,
    pub hota_simplified: f64,
    pub deta: f64,
    pub assa: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub idsw: u64,
    pub gt_count: u64,
    pub gt_identities: u64,
    pub mt: u64,
    pub per_frame: Vec<FrameCounts>,
}

impl MetricsReport {
    /// `key=value` lines without the per-frame table.
    pub fn to_key_values(&self) -> String {
        format!(
            "mota={}\nhota_simplified={}\ndeta={}\nassa={}\ntp={}\nfp={}\nfn={}\nidsw={}\ngt={}\ngt_identities={}\nmt={}\n",
            self.mota,
            self.hota_simplified,
            self.deta,
            self.assa,
            self.tp,
            self.fp,
            self.fn_,
            self.idsw,
            self.gt_count,
            self.gt_identities,
            self.mt
        )
    }

    pub fn to_table(&self) -> String {
        let rows = [
            ("MOTA", format!("{:.4}", self.mota)),
            ("HOTA (simplified)", format!("{:.4}", self.hota_simplified)),
            ("DetA", format!("{:.4}", self.deta)),
            ("AssA", format!("{:.4}", self.assa)),
            ("TP", self.tp.to_string()),
            ("FP", self.fp.to_string()),
            ("FN", self.fn_.to_string()),
            ("IDSW", self.idsw.to_string()),
            ("GT boxes", self.gt_count.to_string()),
            ("MT", format!("{}/{}", self.mt, self.gt_identities)),
        ];
        rows.iter()
            .map(|(k, v)| format!("{k:<18} {v:>10}\n"))
            .collect()
    }
}

/// Matched `(prediction index, label index, iou)` triples for one frame.
pub fn match_frame(
    predictions: &[LabeledTrack],
    labels: &[LabeledTrack],
    threshold: f64,
) -> Vec<(usize, usize, f64)> {
    if predictions.is_empty() || labels.is_empty() {
        return Vec::new();
    }
    let iou = CostMatrix::from_fn(predictions.len(), labels.len(), |r, c| {
        if predictions[r].class_label == labels[c].class_label {
            bev_iou(&predictions[r].bbox, &labels[c].bbox)
        } else {
            0.0
        }
    });
    // An excluded pair costs more than any complete set of admissible ones.
    let excluded = predictions.len().min(labels.len()) as f64 + 1.0;
    let costs = CostMatrix::from_fn(iou.rows(), iou.cols(), |r, c| {
        let v = iou.get(r, c);
        if v >= threshold {
            1.0 - v
        } else {
            excluded
        }
    });
    solve(&costs)
        .into_iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| (r, c, iou.get(r, c))))
        .filter(|&(_, _, v)| v >= threshold)
        .collect()
}

pub fn evaluate(
    results: &[Vec<LabeledTrack>],
    labels: &[Vec<LabeledTrack>],
    match_threshold: f64,
) -> Result<MetricsReport, EvalError> {
    if results.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            results: results.len(),
            labels: labels.len(),
        });
    }
    if !(match_threshold > 0.0 && match_threshold < 1.0) {
        return Err(EvalError::BadThreshold(match_threshold));
    }

    // Keyed by (class, gt id): last matched prediction id, frames present,
    // frames matched.
    let mut last_match: HashMap<(&str, u64), u64> = HashMap::new();
    let mut coverage: HashMap<(&str, u64), (u64, u64)> = HashMap::new();
    let mut per_frame = Vec::with_capacity(labels.len());
    let mut iou_sum = 0.0;

    for (f, (preds, gts)) in results.iter().zip(labels).enumerate() {
        let matches = match_frame(preds, gts, match_threshold);
        let mut counts = FrameCounts {
            frame: f as u32,
            gt: gts.len() as u64,
            tp: matches.len() as u64,
            fp: (preds.len() - matches.len()) as u64,
            fn_: (gts.len() - matches.len()) as u64,
            idsw: 0,
        };
        for g in gts {
            coverage.entry((g.class_label.as_str(), g.track_id)).or_default().0 += 1;
        }
        for &(p, g, v) in &matches {
            iou_sum += v;
            let key = (gts[g].class_label.as_str(), gts[g].track_id);
            coverage.entry(key).or_default().1 += 1;
            if let Some(prev) = last_match.insert(key, preds[p].track_id) {
                if prev != preds[p].track_id {
                    counts.idsw += 1;
                }
            }
        }
        per_frame.push(counts);
    }

    let tp: u64 = per_frame.iter().map(|c| c.tp).sum();
    let fp: u64 = per_frame.iter().map(|c| c.fp).sum();
    let fn_: u64 = per_frame.iter().map(|c| c.fn_).sum();
    let idsw: u64 = per_frame.iter().map(|c| c.idsw).sum();
    let gt_count: u64 = per_frame.iter().map(|c| c.gt).sum();
    let mt = coverage
        .values()
        .filter(|(present, matched)| *matched as f64 >= MOSTLY_TRACKED_RATIO * *present as f64)
        .count() as u64;

    let mota = 1.0 - (fp + fn_ + idsw) as f64 / gt_count.max(1) as f64;
    let det_denominator = tp + fp + fn_;
    let deta = if det_denominator == 0 {
        0.0
    } else {
        tp as f64 / det_denominator as f64
    };
    let assa = if tp == 0 { 0.0 } else { iou_sum / tp as f64 };
    Ok(MetricsReport {
        mota,
        hota_simplified: (deta * assa).sqrt(),
        deta,
        assa,
        tp,
        fp,
        fn_,
        idsw,
        gt_count,
        gt_identities: coverage.len() as u64,
        mt,
        per_frame,
    })
}
