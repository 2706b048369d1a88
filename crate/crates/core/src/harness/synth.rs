//! Seeded synthetic corpus: shape masks, textured images, exact boundary
//! edges and corrupted saliency maps.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ingest::{DatasetRecord, Layout};
use crate::error::{Result, SeeError};
use crate::field::{BinaryMask, ColorImage, ScalarField};
use crate::filter::gaussian_blur;
use crate::io::{save_color, save_map};

/// Name of the saliency method holding the corrupted maps.
pub const CORRUPT_METHOD: &str = "corrupt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Rectangle,
    Disk,
    LShape,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corruption {
    /// Gaussian blur of the ground truth; 0 disables it.
    pub blur_sigma: f64,
    /// Uniform noise in `[0, amplitude)` added outside the object.
    pub noise_amplitude: f64,
    /// Probability that an image gets an interior hole.
    pub hole_probability: f64,
    /// Share of the object's depth removed by a hole; 1 leaves a thin boundary band.
    pub hole_fraction: f64,
}

impl Corruption {
    pub fn none() -> Self {
        Self {
            blur_sigma: 0.0,
            noise_amplitude: 0.0,
            hole_probability: 0.0,
            hole_fraction: 0.0,
        }
    }
}

impl Default for Corruption {
    fn default() -> Self {
        Self {
            blur_sigma: 5.0,
            noise_amplitude: 0.3,
            hole_probability: 0.5,
            hole_fraction: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub count: usize,
    pub size: usize,
    pub shapes: Vec<ShapeKind>,
    pub corruption: Corruption,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            count: 50,
            size: 256,
            shapes: vec![ShapeKind::Rectangle, ShapeKind::Disk, ShapeKind::LShape],
            corruption: Corruption::default(),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SeeError::InvalidParameter(m));
        if self.size < 16 {
            return bad(format!("synthetic size must be at least 16, got {}", self.size));
        }
        if self.shapes.is_empty() {
            return bad("at least one shape kind is required".into());
        }
        let c = &self.corruption;
        if c.blur_sigma < 0.0 || !c.blur_sigma.is_finite() {
            return bad(format!("blur sigma must be non-negative, got {}", c.blur_sigma));
        }
        if !(0.0..=1.0).contains(&c.noise_amplitude) {
            return bad(format!("noise amplitude must be in [0, 1], got {}", c.noise_amplitude));
        }
        if !(0.0..=1.0).contains(&c.hole_probability) {
            return bad(format!("hole probability must be in [0, 1], got {}", c.hole_probability));
        }
        if !(0.0..=1.0).contains(&c.hole_fraction) {
            return bad(format!("hole fraction must be in [0, 1], got {}", c.hole_fraction));
        }
        Ok(())
    }
}

/// One generated item, in memory.
#[derive(Clone, Debug)]
pub struct SyntheticItem {
    pub key: String,
    pub shape: ShapeKind,
    pub gt: BinaryMask,
    pub image: ColorImage,
    pub edges: ScalarField,
    pub saliency: ScalarField,
}

fn item_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn shape_mask(kind: ShapeKind, n: usize, rng: &mut ChaCha8Rng) -> BinaryMask {
    let nf = n as f64;
    let bits: Vec<bool> = match kind {
        ShapeKind::Rectangle => {
            let h = rng.random_range(0.3 * nf..0.6 * nf);
            let w = rng.random_range(0.3 * nf..0.6 * nf);
            let top = rng.random_range(0.1 * nf..0.9 * nf - h);
            let left = rng.random_range(0.1 * nf..0.9 * nf - w);
            (0..n * n)
                .map(|i| {
                    let (r, c) = ((i / n) as f64 + 0.5, (i % n) as f64 + 0.5);
                    r >= top && r < top + h && c >= left && c < left + w
                })
                .collect()
        }
        ShapeKind::Disk => {
            let radius = rng.random_range(0.15 * nf..0.3 * nf);
            let cr = rng.random_range(0.1 * nf + radius..0.9 * nf - radius);
            let cc = rng.random_range(0.1 * nf + radius..0.9 * nf - radius);
            (0..n * n)
                .map(|i| {
                    let (r, c) = ((i / n) as f64 + 0.5, (i % n) as f64 + 0.5);
                    (r - cr).powi(2) + (c - cc).powi(2) <= radius * radius
                })
                .collect()
        }
        ShapeKind::LShape => {
            let h = rng.random_range(0.4 * nf..0.7 * nf);
            let w = rng.random_range(0.4 * nf..0.7 * nf);
            let top = rng.random_range(0.1 * nf..0.9 * nf - h);
            let left = rng.random_range(0.1 * nf..0.9 * nf - w);
            let cut_h = h * rng.random_range(0.4..0.6);
            let cut_w = w * rng.random_range(0.4..0.6);
            let corner = rng.random_range(0..4u8);
            (0..n * n)
                .map(|i| {
                    let (r, c) = ((i / n) as f64 + 0.5, (i % n) as f64 + 0.5);
                    let inside = r >= top && r < top + h && c >= left && c < left + w;
                    let in_top = r < top + cut_h;
                    let in_left = c < left + cut_w;
                    let cut = match corner {
                        0 => in_top && in_left,
                        1 => in_top && !in_left && c >= left + w - cut_w,
                        2 => !in_top && r >= top + h - cut_h && in_left,
                        _ => r >= top + h - cut_h && c >= left + w - cut_w,
                    };
                    inside && !cut
                })
                .collect()
        }
    };
    BinaryMask::new(n, n, bits).expect("square mask")
}

/// Object pixels with a 4-neighbor outside the object or the image.
pub fn inner_boundary(mask: &BinaryMask) -> ScalarField {
    let (h, w) = mask.dims();
    ScalarField::from_fn(h, w, |r, c| {
        if !mask.get(r, c) {
            return 0.0;
        }
        let outside = r == 0 || c == 0 || r + 1 == h || c + 1 == w
            || !mask.get(r - 1, c)
            || !mask.get(r + 1, c)
            || !mask.get(r, c - 1)
            || !mask.get(r, c + 1);
        if outside {
            1.0
        } else {
            0.0
        }
    })
}

/// 4-connected distance from each object pixel to the nearest non-object
/// pixel or the image border; 0 outside the object.
pub fn inner_distance(mask: &BinaryMask) -> Vec<u32> {
    let (h, w) = mask.dims();
    let mut dist = vec![u32::MAX; h * w];
    let mut queue = VecDeque::new();
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            if !mask.bits()[i] {
                dist[i] = 0;
                queue.push_back(i);
            } else if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
                dist[i] = 1;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (r, c) = (i / w, i % w);
        let next = dist[i] + 1;
        let neighbors = [
            (r > 0).then(|| i - w),
            (r + 1 < h).then(|| i + w),
            (c > 0).then(|| i - 1),
            (c + 1 < w).then(|| i + 1),
        ];
        for j in neighbors.into_iter().flatten() {
            if dist[j] > next {
                dist[j] = next;
                queue.push_back(j);
            }
        }
    }
    dist
}

fn corrupt(gt: &BinaryMask, c: &Corruption, rng: &mut ChaCha8Rng) -> ScalarField {
    let mut s = gt.to_field();
    if c.hole_probability > 0.0 && rng.random::<f64>() < c.hole_probability {
        let dist = inner_distance(gt);
        let deepest = dist.iter().copied().max().unwrap_or(0);
        let cutoff = ((1.0 - c.hole_fraction) * f64::from(deepest)).round().max(2.0) as u32;
        for (v, &d) in s.values_mut().iter_mut().zip(&dist) {
            if d >= cutoff {
                *v = 0.0;
            }
        }
    }
    if c.blur_sigma > 0.0 {
        s = gaussian_blur(&s, c.blur_sigma).expect("positive sigma");
    }
    if c.noise_amplitude > 0.0 {
        for (v, &inside) in s.values_mut().iter_mut().zip(gt.bits()) {
            let noise: f64 = rng.random::<f64>() * c.noise_amplitude;
            if !inside {
                *v += noise;
            }
        }
    }
    s.clamp01()
}

/// Object of uniform color over a textured background with bright clutter blobs.
fn render_image(gt: &BinaryMask, rng: &mut ChaCha8Rng) -> ColorImage {
    let (n, _) = gt.dims();
    let nf = n as f64;
    let fg_level: f64 = rng.random_range(0.6..0.85);
    let bg_level: f64 = rng.random_range(0.2..0.35);
    let fg_tint: [f64; 3] = [rng.random_range(0.85..1.15), rng.random_range(0.85..1.15), rng.random_range(0.85..1.15)];
    let bg_tint: [f64; 3] = [rng.random_range(0.85..1.15), rng.random_range(0.85..1.15), rng.random_range(0.85..1.15)];

    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let angle: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let freq = rng.random_range(2.0..8.0) * std::f64::consts::TAU / nf;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (angle.cos() * freq, angle.sin() * freq, phase, rng.random_range(0.03..0.07))
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, f64)> = (0..rng.random_range(2..5))
        .map(|_| {
            (
                rng.random_range(0.0..nf),
                rng.random_range(0.0..nf),
                rng.random_range(0.04..0.1) * nf,
                rng.random_range(0.35..0.6),
            )
        })
        .collect();

    let mut chans: [Vec<f64>; 3] = Default::default();
    for i in 0..n * n {
        let (r, c) = ((i / n) as f64, (i % n) as f64);
        let texture: f64 = waves.iter().map(|&(kx, ky, ph, a)| a * (kx * c + ky * r + ph).sin()).sum();
        let (level, tint) = if gt.bits()[i] {
            (fg_level + 0.3 * texture, fg_tint)
        } else {
            let clutter: f64 = blobs
                .iter()
                .map(|&(br, bc, rad, amp)| amp * (-((r - br).powi(2) + (c - bc).powi(2)) / (2.0 * rad * rad)).exp())
                .sum();
            (bg_level + texture + clutter, bg_tint)
        };
        for (ch, t) in chans.iter_mut().zip(tint) {
            ch.push((level * t).clamp(0.0, 1.0));
        }
    }
    let [r, g, b] = chans.map(|v| ScalarField::new(n, n, v).expect("finite image"));
    ColorImage::new(r, g, b).expect("equal channels")
}

/// Generates item `index` of the corpus described by `spec`.
pub fn generate_item(spec: &SyntheticSpec, index: usize) -> SyntheticItem {
    let mut rng = item_rng(spec.seed, index);
    let shape = spec.shapes[rng.random_range(0..spec.shapes.len())];
    let gt = shape_mask(shape, spec.size, &mut rng);
    let image = render_image(&gt, &mut rng);
    let edges = inner_boundary(&gt);
    let saliency = corrupt(&gt, &spec.corruption, &mut rng);
    SyntheticItem {
        key: format!("synth_{index:04}"),
        shape,
        gt,
        image,
        edges,
        saliency,
    }
}

/// Writes the corpus in the standard directory layout under `out` and returns its records.
pub fn generate_synthetic(spec: &SyntheticSpec, out: &Path) -> Result<Vec<DatasetRecord>> {
    spec.validate()?;
    let layout = Layout::standard(out);
    std::fs::create_dir_all(out).map_err(|e| SeeError::io(out, e))?;
    let mut records = Vec::with_capacity(spec.count);
    for index in 0..spec.count {
        let item = generate_item(spec, index);
        let image_path = layout.image_path(&item.key);
        let gt_path = layout.gt_path(&item.key);
        let edge_path = layout.edge_path(&item.key);
        let sal_path = layout.saliency_path(CORRUPT_METHOD, &item.key);
        save_color(&item.image, &image_path)?;
        save_map(&item.gt.to_field(), &gt_path)?;
        save_map(&item.edges, &edge_path)?;
        save_map(&item.saliency, &sal_path)?;
        records.push(DatasetRecord {
            key: item.key,
            image_path,
            gt_path,
            edge_path,
            saliency_paths: BTreeMap::from([(CORRUPT_METHOD.to_owned(), sal_path)]),
        });
    }
    let spec_path = out.join("synth.json");
    std::fs::write(&spec_path, serde_json::to_string_pretty(spec)?).map_err(|e| SeeError::io(&spec_path, e))?;
    Ok(records)
}
