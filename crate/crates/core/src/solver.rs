//! Gradient and Laplacian operators and the Fourier-domain Green's-function
//! Laplacian solver.
//!
//! The gradient kernel
//!
//! ```text
//! [ 0    0   0 ]
//! [ 0  i-1   1 ]
//! [ 0   -i   0 ]
//! ```
//!
//! is applied by correlation, so `ex = I(r, c+1) - I(r, c)` and
//! `ey = I(r, c) - I(r+1, c)` (the `y` axis points up). The Laplacian kernel
//!
//! ```text
//! [  0   -i   0 ]
//! [ -1  i+1   0 ]
//! [  0    0   0 ]
//! ```
//!
//! takes the real part of the correlation with the gradient, which yields the
//! 5-point Laplacian `neighbors - 4 * center` for an unmodified gradient.
//! Out-of-range neighbors read as zero in both operators.
//!
//! The Green's function transfer is the quotient of the DFTs of a Dirac impulse
//! and of the stencil `4 center, -1 cross`, which is the negated Laplacian, so
//! the solver negates the inverse transform to land back on the image.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, SeeError};
use crate::field::ScalarField;
use crate::filter::crop;

/// A grid of 2D vectors `(ex, ey)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    height: usize,
    width: usize,
    ex: Vec<f64>,
    ey: Vec<f64>,
}

impl VectorField {
    pub fn new(height: usize, width: usize, ex: Vec<f64>, ey: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || ex.len() != height * width || ey.len() != height * width {
            return Err(SeeError::InvalidParameter(format!(
                "vector field components do not fit {height}x{width}"
            )));
        }
        if ex.iter().chain(&ey).any(|v| !v.is_finite()) {
            return Err(SeeError::InvalidParameter("non-finite vector component".into()));
        }
        Ok(Self {
            height,
            width,
            ex,
            ey,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            ex: vec![0.0; height * width],
            ey: vec![0.0; height * width],
        }
    }

    /// Builds a field from per-pixel polar `(norm, angle)` pairs.
    pub fn from_polar(height: usize, width: usize, polar: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut ex = Vec::with_capacity(height * width);
        let mut ey = Vec::with_capacity(height * width);
        for (norm, theta) in polar {
            let (s, c) = theta.sin_cos();
            ex.push(norm * c);
            ey.push(norm * s);
        }
        assert_eq!(ex.len(), height * width, "polar iterator length mismatch");
        Self {
            height,
            width,
            ex,
            ey,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn ex(&self) -> &[f64] {
        &self.ex
    }

    pub fn ey(&self) -> &[f64] {
        &self.ey
    }

    pub fn norm_at(&self, i: usize) -> f64 {
        self.ex[i].hypot(self.ey[i])
    }

    /// Orientation `atan2(ey, ex)`; `atan2(0, 0) = 0`.
    pub fn angle_at(&self, i: usize) -> f64 {
        self.ey[i].atan2(self.ex[i])
    }

    pub fn norm(&self) -> ScalarField {
        ScalarField::from_raw(
            self.height,
            self.width,
            (0..self.ex.len()).map(|i| self.norm_at(i)).collect(),
        )
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            height: self.height,
            width: self.width,
            ex: self.ex.iter().map(|v| v * k).collect(),
            ey: self.ey.iter().map(|v| v * k).collect(),
        }
    }
}

/// Output of [`field_to_laplacian`].
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl LaplacianField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || values.len() != height * width {
            return Err(SeeError::InvalidParameter(format!(
                "laplacian values do not fit {height}x{width}"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }
}

/// Right-derivative gradient of an (already padded) field.
pub fn gradient(field: &ScalarField) -> VectorField {
    let (h, w) = field.dims();
    let v = field.values();
    let mut ex = vec![0.0; h * w];
    let mut ey = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let right = if c + 1 < w { v[i + 1] } else { 0.0 };
            let below = if r + 1 < h { v[i + w] } else { 0.0 };
            ex[i] = right - v[i];
            ey[i] = v[i] - below;
        }
    }
    VectorField {
        height: h,
        width: w,
        ex,
        ey,
    }
}

/// Real part of the gradient correlated with the complex Laplacian kernel.
pub fn field_to_laplacian(grad: &VectorField) -> LaplacianField {
    let (h, w) = grad.dims();
    let (ex, ey) = (&grad.ex, &grad.ey);
    let mut values = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let left = if c > 0 { ex[i - 1] } else { 0.0 };
            let above = if r > 0 { ey[i - w] } else { 0.0 };
            values[i] = ex[i] - left + above - ey[i];
        }
    }
    LaplacianField {
        height: h,
        width: w,
        values,
    }
}

/// Row/column FFT plans for one grid size.
struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (h, w) = (self.height, self.width);
        let (rows, cols) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        rows.process(data);
        let mut t = vec![Complex64::default(); h * w];
        for r in 0..h {
            for c in 0..w {
                t[c * h + r] = data[r * w + c];
            }
        }
        cols.process(&mut t);
        for c in 0..w {
            for r in 0..h {
                data[r * w + c] = t[c * h + r];
            }
        }
    }

    fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Unnormalized inverse transform.
    fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
    }
}

/// Precomputed Fourier-domain inverse-Laplacian transfer for one padded size.
pub struct GreenKernel {
    padded_height: usize,
    padded_width: usize,
    transfer: Vec<Complex64>,
    fft: Fft2,
}

impl std::fmt::Debug for GreenKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GreenKernel")
            .field("padded_height", &self.padded_height)
            .field("padded_width", &self.padded_width)
            .finish_non_exhaustive()
    }
}

impl GreenKernel {
    pub fn dims(&self) -> (usize, usize) {
        (self.padded_height, self.padded_width)
    }

    /// Transfer value at frequency bin `(u, v)` (row frequency, column frequency).
    pub fn transfer_at(&self, u: usize, v: usize) -> Complex64 {
        self.transfer[u * self.padded_width + v]
    }

    pub fn transfer(&self) -> &[Complex64] {
        &self.transfer
    }
}

/// Embeds the Laplacian stencil and the Dirac impulse (both centered on the
/// origin bin, wrapping circularly), transforms them and stores their quotient.
/// The zero-frequency bin, where the stencil transform vanishes, is set to 0.
pub fn build_green_kernel(padded_height: usize, padded_width: usize) -> Result<GreenKernel> {
    if padded_height < 3 || padded_width < 3 {
        return Err(SeeError::InvalidParameter(format!(
            "green kernel needs at least 3x3, got {padded_height}x{padded_width}"
        )));
    }
    let (h, w) = (padded_height, padded_width);
    let fft = Fft2::new(h, w);

    let mut stencil = vec![Complex64::default(); h * w];
    stencil[0] = Complex64::new(4.0, 0.0);
    for idx in [w, (h - 1) * w, 1, w - 1] {
        stencil[idx] = Complex64::new(-1.0, 0.0);
    }
    let mut dirac = vec![Complex64::default(); h * w];
    dirac[0] = Complex64::new(1.0, 0.0);

    fft.forward(&mut stencil);
    fft.forward(&mut dirac);

    let mut transfer: Vec<Complex64> = dirac.iter().zip(&stencil).map(|(d, k)| d / k).collect();
    transfer[0] = Complex64::default();

    Ok(GreenKernel {
        padded_height: h,
        padded_width: w,
        transfer,
        fft,
    })
}

/// Inverts `lap` on the whole padded grid and adds the integration constant
/// that brings the mean of the outermost ring to zero. No cropping.
pub fn integrate_laplacian(lap: &LaplacianField, kernel: &GreenKernel) -> Result<ScalarField> {
    if lap.dims() != kernel.dims() {
        return Err(SeeError::mismatch(kernel.dims(), lap.dims()));
    }
    let (h, w) = lap.dims();
    let mut buf: Vec<Complex64> = lap.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    kernel.fft.forward(&mut buf);
    for (b, t) in buf.iter_mut().zip(&kernel.transfer) {
        *b *= t;
    }
    kernel.fft.inverse(&mut buf);
    let scale = -1.0 / (h * w) as f64;
    let mut values: Vec<f64> = buf.iter().map(|z| z.re * scale).collect();

    let c = -border_ring_mean(&values, h, w);
    values.iter_mut().for_each(|v| *v += c);
    Ok(ScalarField::from_raw(h, w, values))
}

fn border_ring_mean(values: &[f64], h: usize, w: usize) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in 0..h {
        for c in 0..w {
            if r == 0 || c == 0 || r + 1 == h || c + 1 == w {
                sum += values[r * w + c];
                n += 1;
            }
        }
    }
    sum / n as f64
}

/// Solves the Laplacian, applies the integration constant and crops `margin` pixels.
pub fn solve_laplacian(lap: &LaplacianField, kernel: &GreenKernel, margin: usize) -> Result<ScalarField> {
    crop(&integrate_laplacian(lap, kernel)?, margin)
}

/// Laplacian of `grad` solved and cropped, without clamping.
pub fn reconstruct_unclamped(grad: &VectorField, kernel: &GreenKernel, margin: usize) -> Result<ScalarField> {
    solve_laplacian(&field_to_laplacian(grad), kernel, margin)
}

/// Goes back from a (possibly modified) gradient to the image domain, clamped to `[0, 1]`.
pub fn reconstruct(grad: &VectorField, kernel: &GreenKernel, margin: usize) -> Result<ScalarField> {
    Ok(reconstruct_unclamped(grad, kernel, margin)?.clamp01())
}

/// Shared cache of Green kernels keyed by padded size.
#[derive(Default)]
pub struct GreenCache {
    kernels: Mutex<HashMap<(usize, usize), Arc<GreenKernel>>>,
    builds: AtomicUsize,
}

impl GreenCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, padded_height: usize, padded_width: usize) -> Result<Arc<GreenKernel>> {
        let key = (padded_height, padded_width);
        if let Some(k) = self.kernels.lock().expect("green cache poisoned").get(&key) {
            return Ok(Arc::clone(k));
        }
        // Built outside the lock; a concurrent builder for the same size yields
        // an identical kernel and the first insert wins.
        let built = Arc::new(build_green_kernel(padded_height, padded_width)?);
        self.builds.fetch_add(1, Ordering::Relaxed);
        let mut map = self.kernels.lock().expect("green cache poisoned");
        Ok(Arc::clone(map.entry(key).or_insert(built)))
    }

    /// Number of kernels built so far.
    pub fn builds(&self) -> usize {
        self.builds.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.kernels.lock().expect("green cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::pad_zero;
    use std::f64::consts::PI;

    fn seeded_field(h: usize, w: usize, seed: u64) -> ScalarField {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ScalarField::from_fn(h, w, |_, _| rng.random::<f64>())
    }

    #[test]
    fn gradient_of_constant_vanishes_inside() {
        let g = gradient(&pad_zero(&ScalarField::filled(4, 5, 0.6), 3));
        let (h, w) = g.dims();
        for r in 3..h - 4 {
            for c in 3..w - 4 {
                assert_eq!(g.ex()[r * w + c], 0.0);
                assert_eq!(g.ey()[r * w + c], 0.0);
            }
        }
        let g = gradient(&ScalarField::filled(3, 3, 0.0));
        assert!(g.ex().iter().chain(g.ey()).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_horizontal_step() {
        // 0 | 1 between columns 3 and 4, inside a padded domain.
        let f = ScalarField::from_fn(6, 8, |_, c| if c >= 4 { 1.0 } else { 0.0 });
        let p = pad_zero(&f, 3);
        let g = gradient(&p);
        let (h, w) = g.dims();
        for r in 3..h - 3 {
            for c in 0..w {
                let expected = match c {
                    6 => 1.0,   // padded column of the step (3 + 3)
                    10 => -1.0, // last image column into the padding
                    _ => 0.0,
                };
                assert_eq!(g.ex()[r * w + c], expected, "r={r} c={c}");
            }
        }
    }

    #[test]
    fn gradient_of_linear_ramp() {
        let width = 10;
        let f = ScalarField::from_fn(5, width, |_, c| c as f64 / width as f64);
        let g = gradient(&pad_zero(&f, 3));
        let (_, w) = g.dims();
        for r in 3..8 {
            for c in 3..3 + width - 1 {
                assert!((g.ex()[r * w + c] - 0.1).abs() < 1e-15);
            }
        }
    }

    /// Direct 5-point stencil with zero exterior.
    fn five_point(f: &ScalarField) -> ScalarField {
        let (h, w) = f.dims();
        ScalarField::from_fn(h, w, |r, c| {
            let (r, c) = (r as isize, c as isize);
            f.get_or_zero(r - 1, c) + f.get_or_zero(r + 1, c) + f.get_or_zero(r, c - 1) + f.get_or_zero(r, c + 1)
                - 4.0 * f.get_or_zero(r, c)
        })
    }

    #[test]
    fn laplacian_of_impulse_is_stencil() {
        let mut f = ScalarField::zeros(7, 7);
        f.set(3, 3, 1.0);
        let lap = field_to_laplacian(&gradient(&f));
        let oracle = five_point(&f);
        for (a, b) in lap.values().iter().zip(oracle.values()) {
            assert_eq!(a, b);
        }
        assert_eq!(lap.get(3, 3), -4.0);
        assert_eq!(lap.get(2, 3), 1.0);
        assert_eq!(lap.get(3, 4), 1.0);
    }

    #[test]
    fn laplacian_of_quadratic_is_four() {
        let f = ScalarField::from_fn(12, 12, |r, c| (r * r + c * c) as f64);
        let lap = field_to_laplacian(&gradient(&pad_zero(&f, 3)));
        for r in 4..14 {
            for c in 4..14 {
                assert!((lap.get(r, c) - 4.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn laplacian_matches_stencil_for_random_fields() {
        let f = pad_zero(&seeded_field(9, 13, 7), 3);
        let lap = field_to_laplacian(&gradient(&f));
        let oracle = five_point(&f);
        for (a, b) in lap.values().iter().zip(oracle.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(lap.values().iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_gives_zero_laplacian() {
        let lap = field_to_laplacian(&VectorField::zeros(5, 6));
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn green_kernel_closed_form() {
        let k = build_green_kernel(8, 8).unwrap();
        assert_eq!(k.transfer_at(0, 0), Complex64::default());
        let expected = 1.0 / (2.0 - 2.0f64.sqrt());
        let got = k.transfer_at(0, 1);
        assert!((got.re - expected).abs() < 1e-12);
        assert!(got.im.abs() < 1e-12);
        for u in 0..8 {
            for v in 0..8 {
                if u == 0 && v == 0 {
                    continue;
                }
                let denom = 4.0 - 2.0 * (2.0 * PI * u as f64 / 8.0).cos() - 2.0 * (2.0 * PI * v as f64 / 8.0).cos();
                assert!((k.transfer_at(u, v).re - 1.0 / denom).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn green_kernel_rejects_tiny_sizes() {
        assert!(build_green_kernel(2, 8).is_err());
        assert!(build_green_kernel(8, 2).is_err());
        assert!(build_green_kernel(3, 3).is_ok());
    }

    #[test]
    fn zero_laplacian_solves_to_zero() {
        let k = build_green_kernel(10, 12).unwrap();
        let lap = LaplacianField::new(10, 12, vec![0.0; 120]).unwrap();
        let out = solve_laplacian(&lap, &k, 3).unwrap();
        assert_eq!(out.dims(), (4, 6));
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn solve_rejects_mismatch() {
        let k = build_green_kernel(10, 12).unwrap();
        let lap = LaplacianField::new(10, 11, vec![0.0; 110]).unwrap();
        assert!(matches!(
            solve_laplacian(&lap, &k, 3),
            Err(SeeError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn round_trip_random() {
        for (i, &(h, w)) in [(16, 16), (9, 23), (31, 7)].iter().enumerate() {
            let f = seeded_field(h, w, i as u64);
            let k = build_green_kernel(h + 6, w + 6).unwrap();
            let out = reconstruct_unclamped(&gradient(&pad_zero(&f, 3)), &k, 3).unwrap();
            assert!(out.max_abs_diff(&f) < 1e-10, "{h}x{w}");
        }
    }

    #[test]
    fn quadratic_bump_recovered_from_its_laplacian() {
        let (h, w) = (21, 25);
        let bump = ScalarField::from_fn(h, w, |r, c| {
            let dr = (r as f64 - 10.0) / 10.0;
            let dc = (c as f64 - 12.0) / 12.0;
            (1.0 - dr * dr - dc * dc).max(0.0)
        });
        let padded = pad_zero(&bump, 3);
        let k = build_green_kernel(h + 6, w + 6).unwrap();
        let out = solve_laplacian(&field_to_laplacian(&gradient(&padded)), &k, 3).unwrap();
        assert!(out.max_abs_diff(&bump) < 1e-5);
    }

    #[test]
    fn half_gradient_halves_output() {
        let f = seeded_field(12, 14, 3);
        let k = build_green_kernel(18, 20).unwrap();
        let out = reconstruct_unclamped(&gradient(&pad_zero(&f, 3)).scale(0.5), &k, 3).unwrap();
        assert!(out.max_abs_diff(&f.map(|v| 0.5 * v)) < 1e-10);
    }

    #[test]
    fn zero_gradient_reconstructs_zero() {
        let k = build_green_kernel(9, 9).unwrap();
        let out = reconstruct(&VectorField::zeros(9, 9), &k, 3).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cache_reuses_kernels() {
        let cache = GreenCache::new();
        let a = cache.get(20, 30).unwrap();
        let b = cache.get(20, 30).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(cache.builds(), 1);
        cache.get(21, 30).unwrap();
        assert_eq!(cache.builds(), 2);
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn operators_are_linear() {
        let f = pad_zero(&seeded_field(10, 11, 11), 3);
        let g = pad_zero(&seeded_field(10, 11, 12), 3);
        let (a, b) = (0.7, -1.3);
        let combo = f.zip_map(&g, |x, y| a * x + b * y).unwrap();
        let lhs = field_to_laplacian(&gradient(&combo));
        let lf = field_to_laplacian(&gradient(&f));
        let lg = field_to_laplacian(&gradient(&g));
        for i in 0..lhs.values().len() {
            assert!((lhs.values()[i] - (a * lf.values()[i] + b * lg.values()[i])).abs() < 1e-10);
        }
        let k = build_green_kernel(16, 17).unwrap();
        let sf = integrate_laplacian(&lf, &k).unwrap();
        let sg = integrate_laplacian(&lg, &k).unwrap();
        let sc = integrate_laplacian(&lhs, &k).unwrap();
        let rhs = sf.zip_map(&sg, |x, y| a * x + b * y).unwrap();
        assert!(sc.max_abs_diff(&rhs) < 1e-10);
    }
}
