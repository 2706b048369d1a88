//! Quick property checks run by `see selftest`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::{BinaryMask, ScalarField};
use crate::filter::pad_zero;
use crate::gdm::{Gdm, Stage};
use crate::metrics::{pr_at_threshold, pr_curve, threshold, LEVELS};
use crate::pipeline::smooth_step;
use crate::solver::{build_green_kernel, gradient, reconstruct_unclamped, GreenCache};

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name,
        passed: worst <= tol,
        detail: format!("max error {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn random_field(rng: &mut ChaCha8Rng, h: usize, w: usize) -> ScalarField {
    ScalarField::from_fn(h, w, |_, _| rng.random::<f64>())
}

fn solver_round_trip(rng: &mut ChaCha8Rng) -> CheckResult {
    let cache = GreenCache::new();
    let mut worst: f64 = 0.0;
    for &(h, w) in &[(32, 32), (40, 27), (17, 64)] {
        for _ in 0..5 {
            let f = random_field(rng, h, w);
            let padded = pad_zero(&f, 3);
            let kernel = cache.get(h + 6, w + 6).expect("valid size");
            let back = reconstruct_unclamped(&gradient(&padded), &kernel, 3).expect("matching dims");
            worst = worst.max(back.max_abs_diff(&f));
        }
    }
    check("solver round trip", worst, 1e-5)
}

fn green_closed_form(rng: &mut ChaCha8Rng) -> CheckResult {
    let (h, w) = (37, 24);
    let kernel = build_green_kernel(h, w).expect("valid size");
    let mut worst = kernel.transfer_at(0, 0).norm();
    for _ in 0..20 {
        let (u, v) = (rng.random_range(0..h), rng.random_range(0..w));
        if u == 0 && v == 0 {
            continue;
        }
        let denom = 4.0 - 2.0 * (2.0 * PI * u as f64 / h as f64).cos() - 2.0 * (2.0 * PI * v as f64 / w as f64).cos();
        worst = worst.max((kernel.transfer_at(u, v) - 1.0 / denom).norm());
    }
    check("green transfer", worst, 1e-10)
}

fn smooth_step_shape() -> CheckResult {
    let mut worst: f64 = 0.0;
    for k in 0..=8 {
        let at = |s: f64| smooth_step(s, k).expect("k in range");
        worst = worst.max(at(0.0).abs()).max((at(0.5) - 0.5).abs()).max((at(1.0) - 1.0).abs());
        let mut prev = at(0.0);
        for i in 1..=1000 {
            let cur = at(f64::from(i) / 1000.0);
            worst = worst.max(prev - cur);
            prev = cur;
        }
    }
    check("smooth-step fixed points and monotonicity", worst, 1e-12)
}

fn metrics_recount(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = ScalarField::from_fn(8, 8, |_, _| f64::from(rng.random_range(0u8..=255)) / 255.0);
        let mut bits: Vec<bool> = (0..64).map(|_| rng.random_bool(0.4)).collect();
        bits[0] = true;
        let g = BinaryMask::new(8, 8, bits).expect("8x8");
        let curve = pr_curve(&s, &g).expect("matching dims");
        for k in 0..LEVELS {
            let naive = pr_at_threshold(&s, &g, threshold(k)).expect("matching dims");
            let p = curve.point(k);
            worst = worst
                .max((p.precision - naive.precision).abs())
                .max((p.recall - naive.recall).abs())
                .max((p.false_positive - naive.false_positive).abs());
        }
    }
    check("metrics histogram vs recount", worst, 1e-12)
}

fn post_without_edges() -> CheckResult {
    let s = ScalarField::from_fn(24, 24, |r, c| ((r * c) % 7) as f64 / 6.0);
    let gdm = Gdm::new(&ScalarField::zeros(24, 24), Stage::Post, 3).expect("valid margin");
    let out = gdm.run(&s, &GreenCache::new()).expect("matching dims");
    check("post merge without edges", out.max().abs(), 0.0)
}

/// Runs every check with a fixed seed.
pub fn run_selftest() -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ee);
    vec![
        solver_round_trip(&mut rng),
        green_closed_form(&mut rng),
        smooth_step_shape(),
        metrics_recount(&mut rng),
        post_without_edges(),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn selftest_passes() {
        for r in super::run_selftest() {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
