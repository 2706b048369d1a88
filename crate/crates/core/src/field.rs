//! Image and map containers.
//!
//! All grids are stored row-major: index `(row, col)` maps to `row * width + col`.
//! Rows grow downwards, columns grow to the right.

use crate::error::{Result, SeeError};

/// A real-valued `height x width` grid holding an image channel, a saliency map or an edge map.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(SeeError::InvalidParameter(format!(
                "field dimensions must be positive, got {height}x{width}"
            )));
        }
        if values.len() != height * width {
            return Err(SeeError::InvalidParameter(format!(
                "expected {} values for a {height}x{width} field, got {}",
                height * width,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SeeError::InvalidParameter(format!(
                "non-finite value at index {pos}"
            )));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    /// Builds a field without checking finiteness. Dimensions must be consistent.
    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        debug_assert!(height > 0 && width > 0);
        Self {
            height,
            width,
            values,
        }
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "field dimensions must be positive");
        Self::from_raw(height, width, vec![value; height * width])
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(height > 0 && width > 0, "field dimensions must be positive");
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::from_raw(height, width, values)
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.width + col] = value;
    }

    /// Reads `(row, col)` with signed coordinates; out-of-range reads return 0.
    #[inline]
    pub fn get_or_zero(&self, row: isize, col: isize) -> f64 {
        if row < 0 || col < 0 || row as usize >= self.height || col as usize >= self.width {
            0.0
        } else {
            self.values[row as usize * self.width + col as usize]
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.height, self.width, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination of two fields of identical dimensions.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_dims(other.dims())?;
        Ok(Self::from_raw(
            self.height,
            self.width,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn ensure_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(SeeError::mismatch(self.dims(), other));
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn clamp01(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    /// Min-max normalization to `[0, 1]`. A constant field maps to all zeros.
    pub fn normalize(&self) -> Self {
        let lo = self.min();
        let hi = self.max();
        let span = hi - lo;
        if span <= 0.0 {
            return Self::zeros(self.height, self.width);
        }
        self.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
    }

    /// Pointwise average `(a + b) / 2` clamped to `[0, 1]`.
    pub fn average_clamped(&self, other: &Self) -> Result<Self> {
        self.zip_map(other, |a, b| (0.5 * (a + b)).clamp(0.0, 1.0))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dims(), other.dims(), "max_abs_diff dimension mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Three channels (R, G, B) of identical dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    channels: [ScalarField; 3],
}

impl ColorImage {
    pub fn new(r: ScalarField, g: ScalarField, b: ScalarField) -> Result<Self> {
        r.ensure_same_dims(g.dims())?;
        r.ensure_same_dims(b.dims())?;
        Ok(Self {
            channels: [r, g, b],
        })
    }

    /// A gray image with the same field replicated in every channel.
    pub fn from_gray(field: &ScalarField) -> Self {
        Self {
            channels: [field.clone(), field.clone(), field.clone()],
        }
    }

    pub fn channels(&self) -> &[ScalarField; 3] {
        &self.channels
    }

    pub fn into_channels(self) -> [ScalarField; 3] {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    /// Rec. 601 luma.
    pub fn luma(&self) -> ScalarField {
        let [r, g, b] = &self.channels;
        let values = r
            .values()
            .iter()
            .zip(g.values())
            .zip(b.values())
            .map(|((&r, &g), &b)| 0.299 * r + 0.587 * g + 0.114 * b)
            .collect();
        ScalarField::from_raw(r.height(), r.width(), values)
    }
}

/// A boolean grid, used for thresholded saliency masks and ground truths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if height == 0 || width == 0 || bits.len() != height * width {
            return Err(SeeError::InvalidParameter(format!(
                "mask of {} bits does not fit {height}x{width}",
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    /// `value >= threshold` for every pixel.
    pub fn threshold(field: &ScalarField, threshold: f64) -> Self {
        Self {
            height: field.height(),
            width: field.width(),
            bits: field.values().iter().map(|&v| v >= threshold).collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_field(&self) -> ScalarField {
        ScalarField::from_raw(
            self.height,
            self.width,
            self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        )
    }
}
