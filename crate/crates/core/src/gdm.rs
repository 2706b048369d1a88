//! Gradient-domain merging of edge maps with images and saliency maps.
//!
//! The input is zero-padded, differentiated, merged with the edges in the
//! gradient domain and integrated back with the Green's-function solver.
//! Two stages are provided:
//!
//! * **Post** (saliency post-processing): edges are thinned by non-maximum
//!   suppression and dilated; the norm becomes `sqrt(C1 |E|)` and the
//!   orientation snaps to the across-edge direction, flipped by pi when it
//!   would oppose the original gradient.
//! * **Pre** (image pre-processing): raw edges are used; the norm becomes
//!   `(sqrt(C1 |E|) + |E|) / 2` and the orientation is kept.

use std::f64::consts::PI;

use crate::error::{Result, SeeError};
use crate::field::{ColorImage, ScalarField};
use crate::filter::{dilate_disk3, gaussian_blur, pad_zero};
use crate::solver::{gradient, reconstruct, GreenCache, VectorField};

/// Smoothing of the structure tensor used for edge orientation.
pub const ORIENTATION_SIGMA: f64 = 2.0;
/// Edge strengths below this are dropped before non-maximum suppression.
pub const NMS_FLOOR: f64 = 0.05;
/// Blur applied to the saliency map before post-processing.
pub const SALIENCY_BLUR_SIGMA: f64 = 3.0;

/// The four merger functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MergerKind {
    PostNorm,
    PostOrientation,
    PreNorm,
    PreOrientation,
}

/// A merging stage names one norm merger and one orientation merger.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    Pre,
    Post,
}

impl Stage {
    pub fn norm_merger(self) -> MergerKind {
        match self {
            Stage::Pre => MergerKind::PreNorm,
            Stage::Post => MergerKind::PostNorm,
        }
    }

    pub fn orientation_merger(self) -> MergerKind {
        match self {
            Stage::Pre => MergerKind::PreOrientation,
            Stage::Post => MergerKind::PostOrientation,
        }
    }
}

/// Thinned and dilated edges with their across-edge orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedEdges {
    pub thin: ScalarField,
    /// Orientation perpendicular to the edge line, radians in `(-pi, pi]`.
    pub theta_c: Vec<f64>,
    pub theta_valid: Vec<bool>,
}

impl PreparedEdges {
    pub fn dims(&self) -> (usize, usize) {
        self.thin.dims()
    }
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(mut theta: f64) -> f64 {
    while theta > PI {
        theta -= 2.0 * PI;
    }
    while theta <= -PI {
        theta += 2.0 * PI;
    }
    theta
}

/// Across-edge orientation from the smoothed structure tensor of `c0`.
///
/// Angles use `x` to the right and `y` up, the same frame as the gradient.
pub fn edge_orientation(c0: &ScalarField, sigma: f64) -> Result<Vec<f64>> {
    let (h, w) = c0.dims();
    let mut jxx = ScalarField::zeros(h, w);
    let mut jxy = ScalarField::zeros(h, w);
    let mut jyy = ScalarField::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let (ri, ci) = (r as isize, c as isize);
            let gx = 0.5 * (c0.get_or_zero(ri, ci + 1) - c0.get_or_zero(ri, ci - 1));
            let gy = 0.5 * (c0.get_or_zero(ri - 1, ci) - c0.get_or_zero(ri + 1, ci));
            jxx.set(r, c, gx * gx);
            jxy.set(r, c, gx * gy);
            jyy.set(r, c, gy * gy);
        }
    }
    let jxx = gaussian_blur(&jxx, sigma)?;
    let jxy = gaussian_blur(&jxy, sigma)?;
    let jyy = gaussian_blur(&jyy, sigma)?;
    Ok((0..h * w)
        .map(|i| {
            let theta = 0.5 * (2.0 * jxy.values()[i]).atan2(jxx.values()[i] - jyy.values()[i]);
            wrap_angle(theta)
        })
        .collect())
}

fn bilinear_or_zero(f: &ScalarField, row: f64, col: f64) -> f64 {
    let r0 = row.floor();
    let c0 = col.floor();
    let fr = row - r0;
    let fc = col - c0;
    let (r0, c0) = (r0 as isize, c0 as isize);
    let v00 = f.get_or_zero(r0, c0);
    let v01 = f.get_or_zero(r0, c0 + 1);
    let v10 = f.get_or_zero(r0 + 1, c0);
    let v11 = f.get_or_zero(r0 + 1, c0 + 1);
    (1.0 - fr) * ((1.0 - fc) * v00 + fc * v01) + fr * ((1.0 - fc) * v10 + fc * v11)
}

/// Non-maximum suppression along `theta`. Returns the survivor strengths
/// (zero where suppressed) and the survivor mask.
pub fn non_max_suppression(c0: &ScalarField, theta: &[f64]) -> (ScalarField, Vec<bool>) {
    let (h, w) = c0.dims();
    let mut kept = vec![false; h * w];
    let mut out = ScalarField::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let v = c0.values()[i];
            if v < NMS_FLOOR {
                continue;
            }
            let (s, co) = theta[i].sin_cos();
            // y up: a step of +sin in y is a step of -sin in rows.
            let ahead = bilinear_or_zero(c0, r as f64 - s, c as f64 + co);
            let behind = bilinear_or_zero(c0, r as f64 + s, c as f64 - co);
            if v >= ahead && v >= behind {
                kept[i] = true;
                out.values_mut()[i] = v;
            }
        }
    }
    (out, kept)
}

/// Thinning, dilation and orientation of a raw edge map.
pub fn prepare_edges_post(c0: &ScalarField) -> Result<PreparedEdges> {
    let (h, w) = c0.dims();
    let orientation = edge_orientation(c0, ORIENTATION_SIGMA)?;
    let (survivors, kept) = non_max_suppression(c0, &orientation);
    let thin = dilate_disk3(&survivors);

    let mut theta_c = vec![0.0; h * w];
    let mut theta_valid = vec![false; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if thin.values()[i] <= 0.0 {
                continue;
            }
            theta_valid[i] = true;
            if kept[i] {
                theta_c[i] = orientation[i];
                continue;
            }
            // Take the orientation of the strongest adjacent survivor; the first
            // in (up, down, left, right) order wins ties.
            let mut best: Option<(f64, usize)> = None;
            let neighbors = [
                (r > 0).then(|| i - w),
                (r + 1 < h).then(|| i + w),
                (c > 0).then(|| i - 1),
                (c + 1 < w).then(|| i + 1),
            ];
            for j in neighbors.into_iter().flatten() {
                if kept[j] && best.is_none_or(|(v, _)| survivors.values()[j] > v) {
                    best = Some((survivors.values()[j], j));
                }
            }
            let (_, j) = best.expect("dilated pixel without an adjacent survivor");
            theta_c[i] = orientation[j];
        }
    }
    Ok(PreparedEdges {
        thin,
        theta_c,
        theta_valid,
    })
}

/// Gaussian blur of the saliency map before post-processing.
pub fn prepare_saliency_post(s0: &ScalarField, sigma: f64) -> Result<ScalarField> {
    gaussian_blur(s0, sigma)
}

/// Post norm merger: `sqrt(C1 |E|)`.
#[inline]
pub fn post_norm(c1: f64, e_norm: f64) -> f64 {
    (c1 * e_norm).sqrt()
}

/// Post orientation merger: `theta_c`, shifted by pi when `E` projects negatively on it.
#[inline]
pub fn post_orientation(theta_c: f64, theta_e: f64) -> f64 {
    if (theta_c - theta_e).cos() >= 0.0 {
        theta_c
    } else {
        wrap_angle(theta_c + PI)
    }
}

/// Pre norm merger: `(sqrt(|C1| |E|) + |E|) / 2`.
#[inline]
pub fn pre_norm(c1: f64, e_norm: f64) -> f64 {
    0.5 * ((c1.abs() * e_norm).sqrt() + e_norm)
}

/// Pre orientation merger: the gradient's own angle.
#[inline]
pub fn pre_orientation(theta_e: f64) -> f64 {
    theta_e
}

pub fn merge_post(grad: &VectorField, edges: &PreparedEdges) -> Result<VectorField> {
    if grad.dims() != edges.dims() {
        return Err(SeeError::mismatch(grad.dims(), edges.dims()));
    }
    let (h, w) = grad.dims();
    let polar = (0..h * w).map(|i| {
        if !edges.theta_valid[i] {
            return (0.0, 0.0);
        }
        let norm = post_norm(edges.thin.values()[i], grad.norm_at(i));
        (norm, post_orientation(edges.theta_c[i], grad.angle_at(i)))
    });
    Ok(VectorField::from_polar(h, w, polar))
}

pub fn merge_pre(grad: &VectorField, c1: &ScalarField) -> Result<VectorField> {
    if grad.dims() != c1.dims() {
        return Err(SeeError::mismatch(grad.dims(), c1.dims()));
    }
    let (h, w) = grad.dims();
    let mut ex = Vec::with_capacity(h * w);
    let mut ey = Vec::with_capacity(h * w);
    for i in 0..h * w {
        let e = grad.norm_at(i);
        if e == 0.0 {
            ex.push(0.0);
            ey.push(0.0);
            continue;
        }
        // Scaling both components keeps the angle of E.
        let k = pre_norm(c1.values()[i], e) / e;
        ex.push(k * grad.ex()[i]);
        ey.push(k * grad.ey()[i]);
    }
    VectorField::new(h, w, ex, ey)
}

/// Edges prepared at padded size for one stage, shareable across channels.
#[derive(Clone, Debug)]
pub enum StageEdges {
    Pre(ScalarField),
    Post(PreparedEdges),
}

/// One merging stage bound to a padded edge map.
#[derive(Clone, Debug)]
pub struct Gdm {
    edges: StageEdges,
    margin: usize,
    dims: (usize, usize),
}

impl Gdm {
    /// Pads `c0` by `margin` and prepares it for `stage`.
    pub fn new(c0: &ScalarField, stage: Stage, margin: usize) -> Result<Self> {
        let padded = pad_zero(c0, margin);
        let edges = match stage {
            Stage::Pre => StageEdges::Pre(padded),
            Stage::Post => StageEdges::Post(prepare_edges_post(&padded)?),
        };
        Ok(Self {
            edges,
            margin,
            dims: c0.dims(),
        })
    }

    /// Uses edges that are already at padded size, bypassing preparation.
    pub fn with_padded_edges(edges: StageEdges, margin: usize) -> Result<Self> {
        let (ph, pw) = match &edges {
            StageEdges::Pre(c1) => c1.dims(),
            StageEdges::Post(p) => p.dims(),
        };
        if ph <= 2 * margin || pw <= 2 * margin {
            return Err(SeeError::InvalidParameter(format!(
                "padded edges {ph}x{pw} too small for margin {margin}"
            )));
        }
        Ok(Self {
            edges,
            margin,
            dims: (ph - 2 * margin, pw - 2 * margin),
        })
    }

    pub fn stage(&self) -> Stage {
        match self.edges {
            StageEdges::Pre(_) => Stage::Pre,
            StageEdges::Post(_) => Stage::Post,
        }
    }

    pub fn edges(&self) -> &StageEdges {
        &self.edges
    }

    /// Gradient of the padded input after merging with the edges.
    pub fn merged_gradient(&self, input: &ScalarField) -> Result<VectorField> {
        input.ensure_same_dims(self.dims)?;
        let grad = gradient(&pad_zero(input, self.margin));
        match &self.edges {
            StageEdges::Pre(c1) => merge_pre(&grad, c1),
            StageEdges::Post(p) => merge_post(&grad, p),
        }
    }

    /// Merges, integrates, crops and clamps one channel.
    pub fn run(&self, input: &ScalarField, cache: &GreenCache) -> Result<ScalarField> {
        let merged = self.merged_gradient(input)?;
        let (ph, pw) = merged.dims();
        let kernel = cache.get(ph, pw)?;
        reconstruct(&merged, &kernel, self.margin)
    }

    pub fn run_color(&self, image: &ColorImage, cache: &GreenCache) -> Result<ColorImage> {
        let [r, g, b] = image.channels();
        ColorImage::new(self.run(r, cache)?, self.run(g, cache)?, self.run(b, cache)?)
    }
}

/// Single-shot merging of `input` with the raw edge map `edges`.
pub fn gdm_run(
    input: &ScalarField,
    edges: &ScalarField,
    stage: Stage,
    margin: usize,
    cache: &GreenCache,
) -> Result<ScalarField> {
    input.ensure_same_dims(edges.dims())?;
    Gdm::new(edges, stage, margin)?.run(input, cache)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vertical_line(h: usize, w: usize, col: usize) -> ScalarField {
        ScalarField::from_fn(h, w, |_, c| if c == col { 1.0 } else { 0.0 })
    }

    #[test]
    fn zero_edges_prepare_to_nothing() {
        let p = prepare_edges_post(&ScalarField::zeros(12, 9)).unwrap();
        assert!(p.thin.values().iter().all(|&v| v == 0.0));
        assert!(p.theta_valid.iter().all(|&v| !v));
    }

    #[test]
    fn vertical_line_is_kept_and_widened() {
        let c0 = vertical_line(20, 15, 7);
        let p = prepare_edges_post(&c0).unwrap();
        for r in 3..17 {
            for c in 0..15 {
                let i = r * 15 + c;
                let expect = if (6..=8).contains(&c) { 1.0 } else { 0.0 };
                assert_eq!(p.thin.values()[i], expect, "r={r} c={c}");
                if p.theta_valid[i] {
                    // Horizontal across-edge direction, modulo pi.
                    assert!(p.theta_c[i].sin().abs() < 1e-9, "theta={}", p.theta_c[i]);
                }
            }
        }
    }

    #[test]
    fn ramp_ridge_thins_to_crest() {
        let profile = [0.25, 0.5, 1.0, 0.5, 0.25];
        let (h, w) = (24, 17);
        let c0 = ScalarField::from_fn(h, w, |_, c| if (6..11).contains(&c) { profile[c - 6] } else { 0.0 });
        let theta = edge_orientation(&c0, ORIENTATION_SIGMA).unwrap();
        let (_, kept) = non_max_suppression(&c0, &theta);
        // Brute force: compare each pixel with its left and right neighbors.
        for r in 4..h - 4 {
            for c in 0..w {
                let (ri, ci) = (r as isize, c as isize);
                let v = c0.get(r, c);
                let oracle = v >= NMS_FLOOR && v >= c0.get_or_zero(ri, ci - 1) && v >= c0.get_or_zero(ri, ci + 1);
                assert_eq!(kept[r * w + c], oracle, "r={r} c={c}");
                assert_eq!(kept[r * w + c], c == 8);
            }
        }
    }

    #[test]
    fn thin_stays_within_dilated_support() {
        let c0 = ScalarField::from_fn(30, 30, |r, c| {
            let d = ((r as f64 - 15.0).powi(2) + (c as f64 - 14.0).powi(2)).sqrt();
            (1.0 - (d - 9.0).abs() / 2.0).max(0.0)
        });
        let p = prepare_edges_post(&c0).unwrap();
        let support = dilate_disk3(&c0);
        for i in 0..c0.len() {
            assert!(p.thin.values()[i] <= support.values()[i] + 1e-15);
            assert!((0.0..=1.0).contains(&p.thin.values()[i]));
            assert_eq!(p.theta_valid[i], p.thin.values()[i] > 0.0);
            if p.theta_valid[i] {
                assert!(p.theta_c[i] > -PI && p.theta_c[i] <= PI);
            }
        }
    }

    #[test]
    fn post_norm_cases() {
        assert_eq!(post_norm(0.0, 0.7), 0.0);
        assert!((post_norm(0.3, 0.3) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn post_orientation_branches() {
        let tc = 0.4;
        assert_eq!(post_orientation(tc, tc), tc);
        let te = wrap_angle(tc + PI);
        assert!((post_orientation(tc, te) - te).abs() < 1e-12);
        // Exactly perpendicular counts as non-negative projection.
        assert_eq!(post_orientation(0.0, PI / 2.0 - 1e-12), 0.0);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn merge_post_preserves_gradient_when_edge_matches() {
        let grad = VectorField::new(1, 2, vec![0.3, 0.0], vec![0.4, 0.2]).unwrap();
        let edges = PreparedEdges {
            thin: ScalarField::new(1, 2, vec![0.5, 0.0]).unwrap(),
            theta_c: vec![0.4f64.atan2(0.3), 0.0],
            theta_valid: vec![true, false],
        };
        let out = merge_post(&grad, &edges).unwrap();
        assert!((out.ex()[0] - 0.3).abs() < 1e-12);
        assert!((out.ey()[0] - 0.4).abs() < 1e-12);
        assert_eq!((out.ex()[1], out.ey()[1]), (0.0, 0.0));
    }

    #[test]
    fn merge_pre_cases() {
        let grad = VectorField::new(1, 3, vec![0.3, -0.2, 0.0], vec![0.4, 0.1, 0.0]).unwrap();
        let zero = ScalarField::zeros(1, 3);
        let half = merge_pre(&grad, &zero).unwrap();
        for i in 0..3 {
            assert!((half.ex()[i] - 0.5 * grad.ex()[i]).abs() < 1e-15);
            assert!((half.ey()[i] - 0.5 * grad.ey()[i]).abs() < 1e-15);
        }
        let same = merge_pre(&grad, &grad.norm()).unwrap();
        for i in 0..3 {
            assert!((same.norm_at(i) - grad.norm_at(i)).abs() < 1e-15);
        }
        let full = merge_pre(&grad, &ScalarField::filled(1, 3, 1.0)).unwrap();
        assert_eq!((full.ex()[2], full.ey()[2]), (0.0, 0.0));
    }

    #[test]
    fn mergers_reject_mismatch() {
        let grad = VectorField::zeros(3, 3);
        assert!(merge_pre(&grad, &ScalarField::zeros(3, 4)).is_err());
        let p = prepare_edges_post(&ScalarField::zeros(4, 3)).unwrap();
        assert!(merge_post(&grad, &p).is_err());
        let cache = GreenCache::new();
        assert!(gdm_run(&ScalarField::zeros(3, 3), &ScalarField::zeros(3, 4), Stage::Post, 3, &cache).is_err());
    }

    #[test]
    fn post_with_no_edges_is_zero() {
        let cache = GreenCache::new();
        let s = ScalarField::from_fn(16, 16, |r, c| ((r * c) % 7) as f64 / 7.0);
        let out = gdm_run(&s, &ScalarField::zeros(16, 16), Stage::Post, 3, &cache).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pre_with_matching_edges_is_identity() {
        let cache = GreenCache::new();
        let s = ScalarField::from_fn(14, 18, |r, c| 0.5 + 0.4 * ((r as f64) * 0.3 + (c as f64) * 0.2).sin());
        let grad = gradient(&pad_zero(&s, 3));
        let gdm = Gdm::with_padded_edges(StageEdges::Pre(grad.norm()), 3).unwrap();
        let out = gdm.run(&s, &cache).unwrap();
        assert!(out.max_abs_diff(&s) < 1e-9);
    }

    #[test]
    fn square_with_boundary_edges_is_filled() {
        let n = 48;
        let square = ScalarField::from_fn(n, n, |r, c| if (12..36).contains(&r) && (12..36).contains(&c) { 1.0 } else { 0.0 });
        let boundary = ScalarField::from_fn(n, n, |r, c| {
            let inside = |r: usize, c: usize| square.get(r, c) > 0.5;
            if inside(r, c) && (!inside(r - 1, c) || !inside(r + 1, c) || !inside(r, c - 1) || !inside(r, c + 1)) {
                1.0
            } else {
                0.0
            }
        });
        let cache = GreenCache::new();
        let blurred = prepare_saliency_post(&square, SALIENCY_BLUR_SIGMA).unwrap();
        let out = gdm_run(&blurred, &boundary, Stage::Post, 3, &cache).unwrap();
        let mut inner = 0.0;
        let mut outer = 0.0;
        let (mut ni, mut no) = (0, 0);
        for r in 0..n {
            for c in 0..n {
                if square.get(r, c) > 0.5 {
                    inner += out.get(r, c);
                    ni += 1;
                } else {
                    outer += out.get(r, c);
                    no += 1;
                }
            }
        }
        let (inner, outer) = (inner / ni as f64, outer / no as f64);
        assert!(inner >= 0.8, "interior mean {inner}");
        assert!(outer < 0.2, "exterior mean {outer}");
    }
}
