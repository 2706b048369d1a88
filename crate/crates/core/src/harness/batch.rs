//! Batch evaluation of saliency methods and their enhanced variants.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ingest::{DatasetRecord, SkippedKey};
use crate::error::{Result, SeeError};
use crate::field::{BinaryMask, ColorImage, ScalarField};
use crate::io::{load_color, load_map, load_mask};
use crate::metrics::{curve_scores, evaluate, EvalSummary, PrCurve};
use crate::pipeline::{see_full, see_post, SeeConfig};
use crate::provider::{ExternalCommand, MeanThresholdLuma, PrecomputedDirectory, SaliencyProvider};
use crate::solver::GreenCache;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Baseline,
    Post,
    Full,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Baseline, Variant::Post, Variant::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Post => "post",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = SeeError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "baseline" => Ok(Variant::Baseline),
            "post" => Ok(Variant::Post),
            "full" => Ok(Variant::Full),
            other => Err(SeeError::InvalidParameter(format!(
                "unknown variant '{other}' (expected baseline, post or full)"
            ))),
        }
    }
}

/// Parses a comma-separated variant list, keeping the first occurrence of each.
pub fn parse_variants(list: &str) -> Result<Vec<Variant>> {
    let mut out = Vec::new();
    for part in list.split(',').filter(|p| !p.trim().is_empty()) {
        let v: Variant = part.parse()?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(SeeError::InvalidParameter("no variant selected".into()));
    }
    Ok(out)
}

/// Where the `full` variant gets saliency maps of the original and rebuilt images.
#[derive(Clone, Debug, Default)]
pub enum FullProvider {
    /// Each method's own directory, with rebuilt-image maps under `reconstructed/`.
    /// The built-in `luma-mean` method is computed on the fly.
    #[default]
    Precomputed,
    /// One external program shared by every method.
    Command(ExternalCommand),
}

#[derive(Clone, Debug)]
pub struct BatchOptions {
    pub methods: Vec<String>,
    pub variants: Vec<Variant>,
    pub config: SeeConfig,
    pub jobs: usize,
    pub provider: FullProvider,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub key: String,
    pub method: String,
    pub variant: Variant,
    #[serde(flatten)]
    pub summary: EvalSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: String,
    pub variant: Variant,
    pub images: usize,
    /// Means over the per-image rows of this method and variant.
    #[serde(flatten)]
    pub mean: EvalSummary,
    /// Maximum F-measure of the mean curve.
    pub curve_f_measure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub method: String,
    pub variant: Variant,
    pub curve: PrCurve,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub key: String,
    pub method: String,
    pub variant: Variant,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config_echo: SeeConfig,
    pub methods: Vec<String>,
    pub variants: Vec<Variant>,
    pub per_image: Vec<ImageResult>,
    pub aggregate: Vec<AggregateRow>,
    pub curves: Vec<CurveEntry>,
    pub skipped: Vec<SkippedKey>,
    pub failures: Vec<Failure>,
    /// Summed wall-clock milliseconds per stage. Kept out of the main report
    /// so that it stays reproducible.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn aggregate_for(&self, method: &str, variant: Variant) -> Option<&AggregateRow> {
        self.aggregate.iter().find(|a| a.method == method && a.variant == variant)
    }

    /// Largest deviation between an aggregate row and the mean of its per-image rows.
    pub fn aggregate_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.aggregate {
            let rows: Vec<&EvalSummary> = self
                .per_image
                .iter()
                .filter(|r| r.method == row.method && r.variant == row.variant)
                .map(|r| &r.summary)
                .collect();
            let mean = EvalSummary::mean(rows);
            for (a, b) in mean.as_array().iter().zip(row.mean.as_array()) {
                worst = worst.max((a - b).abs());
            }
        }
        worst
    }
}

struct Outcome {
    method: usize,
    variant: Variant,
    result: std::result::Result<(PrCurve, EvalSummary), String>,
}

#[derive(Default)]
struct Clock(BTreeMap<&'static str, f64>);

impl Clock {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(stage).or_default() += start.elapsed().as_secs_f64() * 1e3;
        out
    }
}

struct Inputs {
    gt: BinaryMask,
    edges: ScalarField,
    image: Option<ColorImage>,
}

fn load_inputs(record: &DatasetRecord, need_image: bool) -> Result<Inputs> {
    Ok(Inputs {
        gt: load_mask(&record.gt_path)?,
        edges: load_map(&record.edge_path)?,
        image: if need_image { Some(load_color(&record.image_path)?) } else { None },
    })
}

fn baseline_map(record: &DatasetRecord, method: &str, image: Option<&ColorImage>) -> Result<ScalarField> {
    match record.saliency_paths.get(method) {
        Some(path) => load_map(path),
        None if method == MeanThresholdLuma::NAME => match image {
            Some(img) => Ok(MeanThresholdLuma::map(img)),
            None => Err(SeeError::InvalidParameter("image not loaded".into())),
        },
        None => Err(SeeError::MissingFile(PathBuf::from(format!("saliency/{method}/{}.png", record.key)))),
    }
}

fn provider_for(record: &DatasetRecord, method: &str, choice: &FullProvider) -> Box<dyn SaliencyProvider> {
    match (choice, record.saliency_paths.get(method)) {
        (FullProvider::Command(cmd), _) => Box::new(cmd.clone()),
        (FullProvider::Precomputed, Some(path)) => Box::new(PrecomputedDirectory::new(
            method,
            path.parent().map(PathBuf::from).unwrap_or_default(),
        )),
        (FullProvider::Precomputed, None) => Box::new(MeanThresholdLuma),
    }
}

fn process_record(
    record: &DatasetRecord,
    opts: &BatchOptions,
    cache: &GreenCache,
) -> (Vec<Outcome>, BTreeMap<&'static str, f64>) {
    let mut clock = Clock::default();
    let mut out = Vec::new();
    let need_image = opts.variants.contains(&Variant::Full)
        || opts
            .methods
            .iter()
            .any(|m| !record.saliency_paths.contains_key(m) && m == MeanThresholdLuma::NAME);
    let inputs = clock.time("load", || load_inputs(record, need_image));

    for (mi, method) in opts.methods.iter().enumerate() {
        let fail_all = |msg: String, out: &mut Vec<Outcome>| {
            for &variant in &opts.variants {
                out.push(Outcome {
                    method: mi,
                    variant,
                    result: Err(msg.clone()),
                });
            }
        };
        let inputs = match &inputs {
            Ok(i) => i,
            Err(e) => {
                fail_all(e.to_string(), &mut out);
                continue;
            }
        };
        let base = match clock.time("load", || baseline_map(record, method, inputs.image.as_ref())) {
            Ok(b) => b,
            Err(e) => {
                fail_all(e.to_string(), &mut out);
                continue;
            }
        };
        for &variant in &opts.variants {
            let map = match variant {
                Variant::Baseline => Ok(base.clone()),
                Variant::Post => clock.time("post", || see_post(&base, &inputs.edges, &opts.config, cache)),
                Variant::Full => clock.time("full", || {
                    let provider = provider_for(record, method, &opts.provider);
                    let image = inputs.image.as_ref().expect("image loaded for the full variant");
                    see_full(&record.key, image, &inputs.edges, provider.as_ref(), &opts.config, cache)
                }),
            };
            let result = map
                .and_then(|m| clock.time("metrics", || evaluate(&m, &inputs.gt)))
                .map_err(|e| e.to_string());
            out.push(Outcome {
                method: mi,
                variant,
                result,
            });
        }
    }
    (out, clock.0)
}

/// Evaluates every record under every method and variant. Records are
/// processed on a pool of `opts.jobs` workers; results are reduced in record
/// order, so the report does not depend on the pool width.
pub fn run_batch(records: &[DatasetRecord], opts: &BatchOptions) -> Result<RunReport> {
    opts.config.validate()?;
    if opts.jobs == 0 {
        return Err(SeeError::InvalidParameter("jobs must be at least 1".into()));
    }
    if opts.variants.is_empty() {
        return Err(SeeError::InvalidParameter("no variant selected".into()));
    }
    if opts.variants.contains(&Variant::Full) && !opts.config.run_pre && !opts.config.run_post {
        return Err(SeeError::InvalidParameter(
            "the full variant needs the pre or the post stage enabled".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| SeeError::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    let cache = GreenCache::new();
    let started = Instant::now();
    let results: Vec<_> = pool.install(|| records.par_iter().map(|r| process_record(r, opts, &cache)).collect());

    let mut report = RunReport {
        config_echo: opts.config.clone(),
        methods: opts.methods.clone(),
        variants: opts.variants.clone(),
        ..RunReport::default()
    };
    let mut curves: BTreeMap<(usize, Variant), Vec<PrCurve>> = BTreeMap::new();
    for (record, (outcomes, times)) in records.iter().zip(results) {
        for (stage, ms) in times {
            *report.timings.entry(stage.to_owned()).or_default() += ms;
        }
        for o in outcomes {
            let method = opts.methods[o.method].clone();
            match o.result {
                Ok((curve, summary)) => {
                    curves.entry((o.method, o.variant)).or_default().push(curve);
                    report.per_image.push(ImageResult {
                        key: record.key.clone(),
                        method,
                        variant: o.variant,
                        summary,
                    });
                }
                Err(message) => report.failures.push(Failure {
                    key: record.key.clone(),
                    method,
                    variant: o.variant,
                    message,
                }),
            }
        }
    }
    for (mi, method) in opts.methods.iter().enumerate() {
        for &variant in &opts.variants {
            let rows: Vec<&EvalSummary> = report
                .per_image
                .iter()
                .filter(|r| &r.method == method && r.variant == variant)
                .map(|r| &r.summary)
                .collect();
            let Some(mean_curve) = curves.get(&(mi, variant)).and_then(PrCurve::mean) else {
                continue;
            };
            report.aggregate.push(AggregateRow {
                method: method.clone(),
                variant,
                images: rows.len(),
                mean: EvalSummary::mean(rows),
                curve_f_measure: curve_scores(&mean_curve).0,
            });
            report.curves.push(CurveEntry {
                method: method.clone(),
                variant,
                curve: mean_curve,
            });
        }
    }
    report
        .timings
        .insert("total".into(), started.elapsed().as_secs_f64() * 1e3);
    for f in &report.failures {
        log::warn!("{} / {} / {}: {}", f.key, f.method, f.variant, f.message);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synth::{generate_synthetic, Corruption, SyntheticSpec, CORRUPT_METHOD};

    fn corpus(count: usize) -> (tempfile::TempDir, Vec<DatasetRecord>) {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            count,
            size: 48,
            seed: 3,
            ..SyntheticSpec::default()
        };
        let records = generate_synthetic(&spec, dir.path()).unwrap();
        (dir, records)
    }

    fn options(variants: Vec<Variant>, jobs: usize) -> BatchOptions {
        BatchOptions {
            methods: vec![CORRUPT_METHOD.into()],
            variants,
            config: SeeConfig::default(),
            jobs,
            provider: FullProvider::Precomputed,
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!(parse_variants("post, baseline,post").unwrap(), [Variant::Post, Variant::Baseline]);
        assert!(parse_variants("").is_err());
        assert!(parse_variants("baseline,fancy").is_err());
    }

    #[test]
    fn baseline_only_matches_direct_metrics() {
        let (_dir, records) = corpus(3);
        let report = run_batch(&records, &options(vec![Variant::Baseline], 2)).unwrap();
        assert_eq!(report.per_image.len(), 3);
        for (row, rec) in report.per_image.iter().zip(&records) {
            let s = load_map(&rec.saliency_paths[CORRUPT_METHOD]).unwrap();
            let g = load_mask(&rec.gt_path).unwrap();
            assert_eq!(row.summary, evaluate(&s, &g).unwrap().1);
        }
        assert!(report.aggregate_deviation() <= 1e-12);
        assert_eq!(report.curves.len(), 1);
    }

    #[test]
    fn pool_width_does_not_change_results() {
        let (_dir, records) = corpus(4);
        let mut a = run_batch(&records, &options(vec![Variant::Baseline, Variant::Post], 1)).unwrap();
        let mut b = run_batch(&records, &options(vec![Variant::Baseline, Variant::Post], 3)).unwrap();
        a.timings.clear();
        b.timings.clear();
        assert_eq!(a, b);
    }

    #[test]
    fn missing_reconstructed_maps_are_recorded_failures() {
        let (_dir, records) = corpus(2);
        let report = run_batch(&records, &options(vec![Variant::Baseline, Variant::Full], 1)).unwrap();
        assert_eq!(report.per_image.len(), 2);
        assert_eq!(report.failures.len(), 2);
        assert!(report.failures.iter().all(|f| f.variant == Variant::Full));
    }

    #[test]
    fn builtin_luma_method_runs_full_chain() {
        let (_dir, records) = corpus(2);
        let mut opts = options(vec![Variant::Baseline, Variant::Full], 2);
        opts.methods = vec![MeanThresholdLuma::NAME.into()];
        let report = run_batch(&records, &opts).unwrap();
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        assert_eq!(report.per_image.len(), 4);
    }

    #[test]
    fn rejects_bad_options() {
        let (_dir, records) = corpus(1);
        assert!(run_batch(&records, &options(vec![Variant::Baseline], 0)).is_err());
        let mut opts = options(vec![Variant::Full], 1);
        opts.config.run_pre = false;
        opts.config.run_post = false;
        assert!(run_batch(&records, &opts).is_err());
    }

    #[test]
    fn no_corruption_gives_perfect_baseline() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            count: 2,
            size: 32,
            corruption: Corruption::none(),
            ..SyntheticSpec::default()
        };
        let records = generate_synthetic(&spec, dir.path()).unwrap();
        let report = run_batch(&records, &options(vec![Variant::Baseline], 1)).unwrap();
        let agg = report.aggregate_for(CORRUPT_METHOD, Variant::Baseline).unwrap();
        assert_eq!(agg.mean.f_measure, 1.0);
        assert_eq!(agg.mean.mae, 0.0);
    }
}
