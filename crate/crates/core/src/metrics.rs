//! Saliency evaluation against binary ground truth: precision/recall curves
//! over 256 thresholds, F-measure, maximum precision, mean precision-recall,
//! ROC area and mean absolute error.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SeeError};
use crate::field::{BinaryMask, ScalarField};

pub const LEVELS: usize = 256;
/// Squared F-measure weight, `beta = 0.3`.
pub const BETA_SQ: f64 = 0.09;

/// Threshold of level `k`, `k / 255`.
#[inline]
pub fn threshold(k: usize) -> f64 {
    k as f64 / 255.0
}

/// Precision, recall and false-positive rate at one threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
    pub false_positive: f64,
}

/// Pixel counts behind one [`PrPoint`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// `|M|`
    pub selected: u64,
    /// `|M and G|`
    pub true_pos: u64,
    /// `|M and not G|`
    pub false_pos: u64,
}

impl Counts {
    /// Ratios with the conventions: empty mask has precision 1, an all-positive
    /// ground truth has false-positive rate 0.
    pub fn point(&self, positives: u64, negatives: u64) -> PrPoint {
        PrPoint {
            precision: if self.selected == 0 {
                1.0
            } else {
                self.true_pos as f64 / self.selected as f64
            },
            recall: self.true_pos as f64 / positives as f64,
            false_positive: if negatives == 0 {
                0.0
            } else {
                self.false_pos as f64 / negatives as f64
            },
        }
    }
}

/// 256-level precision / recall / false-positive curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub thresholds: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub false_positive: Vec<f64>,
    /// Per-level counts; empty for averaged curves.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub counts: Vec<Counts>,
}

impl PrCurve {
    pub fn point(&self, k: usize) -> PrPoint {
        PrPoint {
            precision: self.precision[k],
            recall: self.recall[k],
            false_positive: self.false_positive[k],
        }
    }

    fn mask_nonempty(&self, k: usize) -> bool {
        self.counts.get(k).is_none_or(|c| c.selected > 0)
    }

    /// Element-wise mean of several curves. Returns `None` for an empty input.
    pub fn mean<'a>(curves: impl IntoIterator<Item = &'a PrCurve>) -> Option<PrCurve> {
        let mut n = 0usize;
        let mut p = vec![0.0; LEVELS];
        let mut r = vec![0.0; LEVELS];
        let mut f = vec![0.0; LEVELS];
        for c in curves {
            n += 1;
            for k in 0..LEVELS {
                p[k] += c.precision[k];
                r[k] += c.recall[k];
                f[k] += c.false_positive[k];
            }
        }
        if n == 0 {
            return None;
        }
        let inv = 1.0 / n as f64;
        let scale = |v: Vec<f64>| v.into_iter().map(|x| x * inv).collect();
        Some(PrCurve {
            thresholds: (0..LEVELS).map(threshold).collect(),
            precision: scale(p),
            recall: scale(r),
            false_positive: scale(f),
            counts: Vec::new(),
        })
    }
}

/// Scalar scores derived from a curve and its map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub f_measure: f64,
    pub p_max: f64,
    pub mean_pr: f64,
    pub auc: f64,
    pub mae: f64,
}

impl EvalSummary {
    pub const METRIC_NAMES: [&'static str; 5] = ["f_measure", "p_max", "mean_pr", "auc", "mae"];

    pub fn as_array(&self) -> [f64; 5] {
        [self.f_measure, self.p_max, self.mean_pr, self.auc, self.mae]
    }

    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            f_measure: v[0],
            p_max: v[1],
            mean_pr: v[2],
            auc: v[3],
            mae: v[4],
        }
    }

    /// Arithmetic mean of each metric. Returns the default for an empty input.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a EvalSummary>) -> EvalSummary {
        let mut acc = [0.0; 5];
        let mut n = 0usize;
        for s in items {
            n += 1;
            for (a, v) in acc.iter_mut().zip(s.as_array()) {
                *a += v;
            }
        }
        if n == 0 {
            return EvalSummary::default();
        }
        EvalSummary::from_array(acc.map(|a| a / n as f64))
    }
}

/// Weighted F-measure `(1 + b^2) P R / (b^2 P + R)`; 0 when `P = R = 0`.
#[inline]
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    let denom = BETA_SQ * precision + recall;
    if denom <= 0.0 {
        0.0
    } else {
        (1.0 + BETA_SQ) * precision * recall / denom
    }
}

fn check(s: &ScalarField, g: &BinaryMask) -> Result<(u64, u64)> {
    s.ensure_same_dims(g.dims())?;
    let positives = g.count_ones() as u64;
    if positives == 0 {
        return Err(SeeError::EmptyGroundTruth);
    }
    Ok((positives, g.bits().len() as u64 - positives))
}

/// Precision, recall and false-positive rate of the mask `s >= t`.
pub fn pr_at_threshold(s: &ScalarField, g: &BinaryMask, t: f64) -> Result<PrPoint> {
    let (positives, negatives) = check(s, g)?;
    let mut counts = Counts::default();
    for (&v, &gt) in s.values().iter().zip(g.bits()) {
        if v >= t {
            counts.selected += 1;
            if gt {
                counts.true_pos += 1;
            } else {
                counts.false_pos += 1;
            }
        }
    }
    Ok(counts.point(positives, negatives))
}

/// Highest level `k` with `threshold(k) <= v`, or `None` when `v < 0`.
fn level_of(v: f64) -> Option<usize> {
    let mut k = (v * 255.0).floor().clamp(-1.0, 255.0) as isize;
    while k < 255 && threshold((k + 1) as usize) <= v {
        k += 1;
    }
    while k >= 0 && threshold(k as usize) > v {
        k -= 1;
    }
    (k >= 0).then_some(k as usize)
}

/// Curve over all 256 thresholds from a single histogram pass.
pub fn pr_curve(s: &ScalarField, g: &BinaryMask) -> Result<PrCurve> {
    let (positives, negatives) = check(s, g)?;
    let mut hist_pos = [0u64; LEVELS];
    let mut hist_neg = [0u64; LEVELS];
    for (&v, &gt) in s.values().iter().zip(g.bits()) {
        if let Some(k) = level_of(v) {
            if gt {
                hist_pos[k] += 1;
            } else {
                hist_neg[k] += 1;
            }
        }
    }
    let mut counts = vec![Counts::default(); LEVELS];
    let (mut tp, mut fp) = (0u64, 0u64);
    for k in (0..LEVELS).rev() {
        tp += hist_pos[k];
        fp += hist_neg[k];
        counts[k] = Counts {
            selected: tp + fp,
            true_pos: tp,
            false_pos: fp,
        };
    }
    let points: Vec<PrPoint> = counts.iter().map(|c| c.point(positives, negatives)).collect();
    Ok(PrCurve {
        thresholds: (0..LEVELS).map(threshold).collect(),
        precision: points.iter().map(|p| p.precision).collect(),
        recall: points.iter().map(|p| p.recall).collect(),
        false_positive: points.iter().map(|p| p.false_positive).collect(),
        counts,
    })
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum()
}

/// Curve-only scores: `(F_m, P_max, mean-PR, AUC)`.
///
/// Levels are walked from the highest threshold down, which orders recall and
/// false-positive rate nondecreasingly. The precision-recall integral starts
/// at `(R = 0, P = 1)`; the ROC integral runs from `(0, 0)` to `(1, 1)`.
pub fn curve_scores(curve: &PrCurve) -> (f64, f64, f64, f64) {
    let mut f_m: f64 = 0.0;
    let mut p_max: f64 = 0.0;
    for k in 0..LEVELS {
        if !curve.mask_nonempty(k) {
            continue;
        }
        f_m = f_m.max(f_measure(curve.precision[k], curve.recall[k]));
        p_max = p_max.max(curve.precision[k]);
    }

    let mut pr = Vec::with_capacity(LEVELS + 1);
    pr.push((0.0, 1.0));
    pr.extend((0..LEVELS).rev().map(|k| (curve.recall[k], curve.precision[k])));
    let mean_pr = trapezoid(&pr);

    let mut roc = Vec::with_capacity(LEVELS + 2);
    roc.push((0.0, 0.0));
    roc.extend((0..LEVELS).rev().map(|k| (curve.false_positive[k], curve.recall[k])));
    roc.push((1.0, 1.0));
    let auc = trapezoid(&roc);

    (f_m, p_max, mean_pr, auc)
}

pub fn mae(s: &ScalarField, g: &BinaryMask) -> Result<f64> {
    s.ensure_same_dims(g.dims())?;
    let total: f64 = s
        .values()
        .iter()
        .zip(g.bits())
        .map(|(&v, &gt)| (v - if gt { 1.0 } else { 0.0 }).abs())
        .sum();
    Ok(total / s.len() as f64)
}

pub fn summarize(curve: &PrCurve, s: &ScalarField, g: &BinaryMask) -> Result<EvalSummary> {
    let (f_measure, p_max, mean_pr, auc) = curve_scores(curve);
    Ok(EvalSummary {
        f_measure,
        p_max,
        mean_pr,
        auc,
        mae: mae(s, g)?,
    })
}

/// Curve and summary in one call.
pub fn evaluate(s: &ScalarField, g: &BinaryMask) -> Result<(PrCurve, EvalSummary)> {
    let curve = pr_curve(s, g)?;
    let summary = summarize(&curve, s, g)?;
    Ok((curve, summary))
}
