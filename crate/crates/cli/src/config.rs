//! JSON configuration file. Every field mirrors a command line flag; flags win.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use see_core::SeeError;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineFile {
    pub contrast_k: Option<u32>,
    pub blur_sigma: Option<f64>,
    pub pad_margin: Option<usize>,
    pub pre: Option<bool>,
    pub post: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnhanceFile {
    pub image: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub saliency: Option<PathBuf>,
    pub reconstructed_saliency: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub export_reconstructed: Option<PathBuf>,
    pub provider_cmd: Option<String>,
    pub toy_provider: Option<bool>,
    pub root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub method: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalFile {
    pub root: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub methods: Option<Vec<String>>,
    pub variants: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub skip_incomplete: Option<bool>,
    pub provider_cmd: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthFile {
    pub count: Option<usize>,
    pub size: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub blur_sigma: Option<f64>,
    pub noise: Option<f64>,
    pub hole_probability: Option<f64>,
    pub hole_fraction: Option<f64>,
    pub shapes: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: PipelineFile,
    pub enhance: EnhanceFile,
    pub eval: EvalFile,
    pub synth: SynthFile,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, SeeError> {
        if !path.is_file() {
            return Err(SeeError::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)
            .map_err(|e| SeeError::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| SeeError::InvalidParameter(format!("bad config file {}: {e}", path.display())))
    }
}
