//! Saliency enhancement chains: pre-processing of the image, post-processing
//! of the saliency map, normalization and smooth-step contrast enhancement.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SeeError};
use crate::field::{ColorImage, ScalarField};
use crate::gdm::{prepare_saliency_post, Gdm, Stage};
use crate::provider::{ImageRole, SaliencyProvider, SaliencyRequest};
use crate::solver::GreenCache;

/// Largest accepted contrast parameter; beyond it the alternating sum loses
/// more than 1e-10 to cancellation at `s = 0.5`.
pub const MAX_CONTRAST_K: u32 = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeeConfig {
    pub contrast_k: u32,
    pub blur_sigma: f64,
    pub run_pre: bool,
    pub run_post: bool,
    pub pad_margin: usize,
}

impl Default for SeeConfig {
    fn default() -> Self {
        Self {
            contrast_k: 4,
            blur_sigma: 3.0,
            run_pre: true,
            run_post: true,
            pad_margin: 3,
        }
    }
}

impl SeeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blur_sigma <= 0.0 || !self.blur_sigma.is_finite() {
            return Err(SeeError::InvalidParameter(format!(
                "blur_sigma must be positive, got {}",
                self.blur_sigma
            )));
        }
        if self.pad_margin < 1 {
            return Err(SeeError::InvalidParameter("pad_margin must be at least 1".into()));
        }
        if self.contrast_k > MAX_CONTRAST_K {
            return Err(SeeError::InvalidParameter(format!(
                "contrast_k must be at most {MAX_CONTRAST_K}"
            )));
        }
        Ok(())
    }
}

fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // Exact at every step: acc * (n - i) is divisible by (i + 1).
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Coefficients `C(K+j, j) C(2K+1, K-j)` for `j = 0..=K`.
pub fn smooth_step_terms(k: u32) -> Result<Vec<f64>> {
    if k > MAX_CONTRAST_K {
        return Err(SeeError::InvalidParameter(format!(
            "contrast_k must be at most {MAX_CONTRAST_K}, got {k}"
        )));
    }
    Ok((0..=k)
        .map(|j| (binomial(k + j, j) * binomial(2 * k + 1, k - j)) as f64)
        .collect())
}

/// `s^(K+1) * sum_j C(K+j, j) C(2K+1, K-j) (-s)^j`, evaluated term by term.
pub fn smooth_step_sum(s: f64, terms: &[f64]) -> f64 {
    let k = terms.len() as i32 - 1;
    let mut acc = 0.0;
    let mut pow = 1.0;
    for &t in terms {
        acc += t * pow;
        pow *= -s;
    }
    s.powi(k + 1) * acc
}

/// Hermite smooth-step of order `k`. `k = 0` is the identity.
///
/// The alternating sum cancels badly near 1, so the upper half is taken from
/// the polynomial's symmetry `S(1 - s) = 1 - S(s)`.
pub fn smooth_step(s: f64, k: u32) -> Result<f64> {
    let terms = smooth_step_terms(k)?;
    Ok(smooth_step_with(s, &terms))
}

fn smooth_step_with(s: f64, terms: &[f64]) -> f64 {
    let s = s.clamp(0.0, 1.0);
    if s <= 0.5 {
        smooth_step_sum(s, terms)
    } else {
        1.0 - smooth_step_sum(1.0 - s, terms)
    }
}

/// Element-wise smooth-step. Values outside `[0, 1]` are clamped with a warning.
pub fn smooth_step_field(field: &ScalarField, k: u32) -> Result<ScalarField> {
    let terms = smooth_step_terms(k)?;
    let outside = field.values().iter().filter(|v| !(0.0..=1.0).contains(*v)).count();
    if outside > 0 {
        log::warn!("smooth-step input has {outside} values outside [0, 1]; clamping");
    }
    Ok(field.map(|v| smooth_step_with(v, &terms)))
}

/// Post-processing: blur the map, merge its gradient with thinned edges,
/// integrate, and average the result with the original map.
pub fn see_post(s_i: &ScalarField, c0: &ScalarField, cfg: &SeeConfig, cache: &GreenCache) -> Result<ScalarField> {
    cfg.validate()?;
    s_i.ensure_same_dims(c0.dims())?;
    let s_1 = prepare_saliency_post(s_i, cfg.blur_sigma)?;
    let s_r = Gdm::new(c0, Stage::Post, cfg.pad_margin)?.run(&s_1, cache)?;
    s_i.average_clamped(&s_r)
}

/// Image rebuilt from its edge-merged gradient, per channel.
pub fn reconstruct_pre(image: &ColorImage, c0: &ScalarField, cfg: &SeeConfig, cache: &GreenCache) -> Result<ColorImage> {
    cfg.validate()?;
    c0.ensure_same_dims(image.dims())?;
    Gdm::new(c0, Stage::Pre, cfg.pad_margin)?.run_color(image, cache)
}

/// Pre-processing: average the saliency of the original and of the rebuilt image.
pub fn see_pre(
    key: &str,
    image: &ColorImage,
    c0: &ScalarField,
    provider: &dyn SaliencyProvider,
    cfg: &SeeConfig,
    cache: &GreenCache,
) -> Result<ScalarField> {
    let rebuilt = reconstruct_pre(image, c0, cfg, cache)?;
    let s_orig = provider.saliency(&SaliencyRequest {
        key,
        image,
        role: ImageRole::Original,
    })?;
    let s_rebuilt = provider.saliency(&SaliencyRequest {
        key,
        image: &rebuilt,
        role: ImageRole::Reconstructed,
    })?;
    s_orig.average_clamped(&s_rebuilt)
}

/// Min-max normalization followed by smooth-step contrast enhancement.
pub fn finish(map: &ScalarField, cfg: &SeeConfig) -> Result<ScalarField> {
    smooth_step_field(&map.normalize(), cfg.contrast_k)
}

/// The complete chain: optional pre-processing, optional post-processing,
/// normalization and contrast enhancement.
pub fn see_full(
    key: &str,
    image: &ColorImage,
    c0: &ScalarField,
    provider: &dyn SaliencyProvider,
    cfg: &SeeConfig,
    cache: &GreenCache,
) -> Result<ScalarField> {
    if !cfg.run_pre && !cfg.run_post {
        return Err(SeeError::InvalidParameter(
            "at least one of the pre and post stages must run".into(),
        ));
    }
    cfg.validate()?;
    let s_pre = if cfg.run_pre {
        see_pre(key, image, c0, provider, cfg, cache)?
    } else {
        provider.saliency(&SaliencyRequest {
            key,
            image,
            role: ImageRole::Original,
        })?
    };
    let s_post = if cfg.run_post {
        see_post(&s_pre, c0, cfg, cache)?
    } else {
        s_pre
    };
    finish(&s_post, cfg)
}
