//! Padding, cropping, Gaussian blur and binary/grayscale morphology.

use crate::error::{Result, SeeError};
use crate::field::ScalarField;

/// Surrounds `field` with a ring of zeros `margin` pixels wide.
pub fn pad_zero(field: &ScalarField, margin: usize) -> ScalarField {
    if margin == 0 {
        return field.clone();
    }
    let (h, w) = field.dims();
    let pw = w + 2 * margin;
    let mut out = ScalarField::zeros(h + 2 * margin, pw);
    let dst = out.values_mut();
    for (r, row) in field.values().chunks_exact(w).enumerate() {
        let start = (r + margin) * pw + margin;
        dst[start..start + w].copy_from_slice(row);
    }
    out
}

/// Removes a `margin`-pixel ring. Inverse of [`pad_zero`].
pub fn crop(field: &ScalarField, margin: usize) -> Result<ScalarField> {
    if margin == 0 {
        return Ok(field.clone());
    }
    let (h, w) = field.dims();
    if h <= 2 * margin || w <= 2 * margin {
        return Err(SeeError::InvalidParameter(format!(
            "cannot crop {margin} pixels from a {h}x{w} field"
        )));
    }
    let (ch, cw) = (h - 2 * margin, w - 2 * margin);
    let src = field.values();
    let mut values = Vec::with_capacity(ch * cw);
    for r in margin..h - margin {
        let start = r * w + margin;
        values.extend_from_slice(&src[start..start + cw]);
    }
    Ok(ScalarField::from_raw(ch, cw, values))
}

/// Normalized 1D Gaussian taps over `[-radius, radius]`, `radius = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if sigma <= 0.0 || !sigma.is_finite() {
        return Err(SeeError::InvalidParameter(format!(
            "gaussian sigma must be positive, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let denom = 2.0 * sigma * sigma;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / denom).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(taps)
}

/// Separable Gaussian blur with edge-replicated borders.
pub fn gaussian_blur(field: &ScalarField, sigma: f64) -> Result<ScalarField> {
    let taps = gaussian_kernel(sigma)?;
    let radius = (taps.len() / 2) as isize;
    let (h, w) = field.dims();
    let src = field.values();

    let mut horiz = vec![0.0; h * w];
    for r in 0..h {
        let row = &src[r * w..(r + 1) * w];
        let out = &mut horiz[r * w..(r + 1) * w];
        for (c, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let cc = (c as isize + k as isize - radius).clamp(0, w as isize - 1) as usize;
                acc += t * row[cc];
            }
            *o = acc;
        }
    }

    let mut out = vec![0.0; h * w];
    for (k, &t) in taps.iter().enumerate() {
        let dr = k as isize - radius;
        for r in 0..h {
            let rr = (r as isize + dr).clamp(0, h as isize - 1) as usize;
            let src_row = &horiz[rr * w..(rr + 1) * w];
            let dst_row = &mut out[r * w..(r + 1) * w];
            for (d, &s) in dst_row.iter_mut().zip(src_row) {
                *d += t * s;
            }
        }
    }
    Ok(ScalarField::from_raw(h, w, out))
}

/// Grayscale dilation by the diameter-3 disk, i.e. the 4-connected diamond
/// `{center, up, down, left, right}`. Out-of-range neighbors are ignored.
pub fn dilate_disk3(field: &ScalarField) -> ScalarField {
    let (h, w) = field.dims();
    ScalarField::from_fn(h, w, |r, c| {
        let mut m = field.get(r, c);
        if r > 0 {
            m = m.max(field.get(r - 1, c));
        }
        if r + 1 < h {
            m = m.max(field.get(r + 1, c));
        }
        if c > 0 {
            m = m.max(field.get(r, c - 1));
        }
        if c + 1 < w {
            m = m.max(field.get(r, c + 1));
        }
        m
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_field() -> impl Strategy<Value = ScalarField> {
        (1usize..9, 1usize..9).prop_flat_map(|(h, w)| {
            proptest::collection::vec(0.0f64..1.0, h * w)
                .prop_map(move |v| ScalarField::new(h, w, v).unwrap())
        })
    }

    #[test]
    fn pad_two_by_two() {
        let f = ScalarField::new(2, 2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let p = pad_zero(&f, 3);
        assert_eq!(p.dims(), (8, 8));
        assert_eq!(p.get(3, 3), 0.1);
        assert_eq!(p.get(4, 4), 0.4);
        let ring: f64 = (0..8).map(|i| p.get(0, i) + p.get(7, i) + p.get(i, 0) + p.get(i, 7)).sum();
        assert_eq!(ring, 0.0);
    }

    #[test]
    fn pad_one_pixel() {
        let p = pad_zero(&ScalarField::filled(1, 1, 1.0), 1);
        assert_eq!(p.values(), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let f = ScalarField::filled(2, 3, 0.3);
        assert_eq!(pad_zero(&f, 0), f);
    }

    #[test]
    fn blur_keeps_constants() {
        let f = ScalarField::filled(11, 7, 0.37);
        for sigma in [0.5, 1.0, 3.0, 7.5] {
            let b = gaussian_blur(&f, sigma).unwrap();
            assert!(b.max_abs_diff(&f) < 1e-14);
        }
    }

    #[test]
    fn blur_impulse_center_matches_explicit_kernel() {
        let mut f = ScalarField::zeros(31, 31);
        f.set(15, 15, 1.0);
        let b = gaussian_blur(&f, 3.0).unwrap();
        // Explicit evaluation: radius 9, weights exp(-i^2 / 18) normalized.
        let norm: f64 = (-9i32..=9).map(|i| (-(i * i) as f64 / 18.0).exp()).sum();
        let center = 1.0 / norm;
        assert!((b.get(15, 15) - center * center).abs() < 1e-15);
        let off = (-(4.0f64) / 18.0).exp() / norm;
        assert!((b.get(15, 17) - center * off).abs() < 1e-15);
        assert!((b.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blur_preserves_mirror_symmetry() {
        let f = ScalarField::from_fn(9, 12, |r, c| {
            let c = c.min(11 - c) as f64;
            (r as f64 * 0.1 + c * 0.07).sin().abs()
        });
        let b = gaussian_blur(&f, 2.0).unwrap();
        for r in 0..9 {
            for c in 0..12 {
                assert!((b.get(r, c) - b.get(r, 11 - c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn blur_rejects_bad_sigma() {
        let f = ScalarField::zeros(3, 3);
        assert!(gaussian_blur(&f, 0.0).is_err());
        assert!(gaussian_blur(&f, -1.0).is_err());
        assert!(gaussian_blur(&f, f64::NAN).is_err());
    }

    #[test]
    fn dilate_point_makes_plus() {
        let mut f = ScalarField::zeros(5, 5);
        f.set(2, 2, 1.0);
        let d = dilate_disk3(&f);
        let on: Vec<(usize, usize)> = (0..25)
            .filter(|i| d.values()[*i] == 1.0)
            .map(|i| (i / 5, i % 5))
            .collect();
        assert_eq!(on, vec![(1, 2), (2, 1), (2, 2), (2, 3), (3, 2)]);
        assert_eq!(d.values().iter().sum::<f64>(), 5.0);
    }

    #[test]
    fn dilate_saturated_inputs() {
        assert_eq!(dilate_disk3(&ScalarField::zeros(4, 4)), ScalarField::zeros(4, 4));
        assert_eq!(dilate_disk3(&ScalarField::filled(4, 4, 1.0)), ScalarField::filled(4, 4, 1.0));
    }

    proptest! {
        #[test]
        fn pad_crop_round_trip(f in arb_field(), margin in 0usize..5) {
            prop_assert_eq!(crop(&pad_zero(&f, margin), margin).unwrap(), f);
        }

        #[test]
        fn blur_is_linear(f in arb_field(), a in -2.0f64..2.0, b in -2.0f64..2.0, sigma in 0.3f64..4.0) {
            let g = f.map(|v| (v * 7.3).sin());
            let combo = f.zip_map(&g, |x, y| a * x + b * y).unwrap();
            let lhs = gaussian_blur(&combo, sigma).unwrap();
            let bf = gaussian_blur(&f, sigma).unwrap();
            let bg = gaussian_blur(&g, sigma).unwrap();
            let rhs = bf.zip_map(&bg, |x, y| a * x + b * y).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn dilation_is_monotone_and_extensive(f in arb_field(), bump in 0.0f64..0.5) {
            let g = f.map(|v| (v + bump).min(1.0));
            let df = dilate_disk3(&f);
            let dg = dilate_disk3(&g);
            for i in 0..f.len() {
                prop_assert!(df.values()[i] <= dg.values()[i]);
                prop_assert!(df.values()[i] >= f.values()[i]);
            }
        }
    }
}
