//! Sources of baseline saliency maps.

use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Result, SeeError};
use crate::field::{ColorImage, ScalarField};
use crate::io::{load_map, save_color};

/// Which image a saliency request refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ImageRole {
    /// The input image as loaded.
    Original,
    /// The image rebuilt by the pre-processing stage.
    Reconstructed,
}

#[derive(Clone, Copy, Debug)]
pub struct SaliencyRequest<'a> {
    pub key: &'a str,
    pub image: &'a ColorImage,
    pub role: ImageRole,
}

pub trait SaliencyProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Produces a saliency map for the requested image.
    fn compute(&self, request: &SaliencyRequest<'_>) -> Result<ScalarField>;

    /// [`compute`](Self::compute) plus the dimension check every caller needs.
    fn saliency(&self, request: &SaliencyRequest<'_>) -> Result<ScalarField> {
        let map = self.compute(request)?;
        if map.dims() != request.image.dims() {
            let (eh, ew) = request.image.dims();
            let (gh, gw) = map.dims();
            return Err(SeeError::Provider(format!(
                "{} returned a {gh}x{gw} map for the {eh}x{ew} image '{}'",
                self.name(),
                request.key
            )));
        }
        Ok(map)
    }
}

/// Maps stored as `<dir>/<key>.png`, with maps of reconstructed images under
/// `<dir>/reconstructed/<key>.png`.
#[derive(Clone, Debug)]
pub struct PrecomputedDirectory {
    name: String,
    dir: PathBuf,
}

impl PrecomputedDirectory {
    pub fn new(name: impl Into<String>, dir: impl Into<PathBuf>) -> Self {
        Self {
            name: name.into(),
            dir: dir.into(),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str, role: ImageRole) -> PathBuf {
        match role {
            ImageRole::Original => self.dir.join(format!("{key}.png")),
            ImageRole::Reconstructed => self.dir.join("reconstructed").join(format!("{key}.png")),
        }
    }
}

impl SaliencyProvider for PrecomputedDirectory {
    fn name(&self) -> &str {
        &self.name
    }

    fn compute(&self, request: &SaliencyRequest<'_>) -> Result<ScalarField> {
        let path = self.path_for(request.key, request.role);
        if !path.is_file() {
            return Err(SeeError::Provider(format!(
                "{}: no precomputed map at {}",
                self.name,
                path.display()
            )));
        }
        load_map(&path)
    }
}

/// Runs an external program per image. Arguments equal to or containing
/// `{input}` / `{output}` are substituted with the image path and the path the
/// program must write its map to. No shell is involved.
#[derive(Clone, Debug)]
pub struct ExternalCommand {
    argv: Vec<String>,
}

impl ExternalCommand {
    pub fn new(argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(SeeError::InvalidParameter("provider command is empty".into()));
        }
        let joined = argv.join(" ");
        if !joined.contains("{input}") || !joined.contains("{output}") {
            return Err(SeeError::InvalidParameter(
                "provider command must reference both {input} and {output}".into(),
            ));
        }
        Ok(Self { argv })
    }

    /// Splits a template on whitespace.
    pub fn parse(template: &str) -> Result<Self> {
        Self::new(template.split_whitespace().map(str::to_owned).collect())
    }

    pub fn argv(&self) -> &[String] {
        &self.argv
    }
}

impl SaliencyProvider for ExternalCommand {
    fn name(&self) -> &str {
        &self.argv[0]
    }

    fn compute(&self, request: &SaliencyRequest<'_>) -> Result<ScalarField> {
        let scratch = tempfile::tempdir().map_err(|e| SeeError::io(std::env::temp_dir(), e))?;
        let input = scratch.path().join("input.png");
        let output = scratch.path().join("output.png");
        save_color(request.image, &input)?;
        let subst = |arg: &String| {
            arg.replace("{input}", &input.to_string_lossy())
                .replace("{output}", &output.to_string_lossy())
        };
        let status = Command::new(subst(&self.argv[0]))
            .args(self.argv[1..].iter().map(subst))
            .status()
            .map_err(|e| SeeError::Provider(format!("cannot run '{}': {e}", self.argv[0])))?;
        if !status.success() {
            return Err(SeeError::Provider(format!(
                "'{}' failed on '{}' with {status}",
                self.argv[0], request.key
            )));
        }
        load_map(&output).map_err(|e| SeeError::Provider(format!("unreadable output for '{}': {e}", request.key)))
    }
}

/// Toy provider: luma where it reaches the image mean, zero elsewhere.
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanThresholdLuma;

impl MeanThresholdLuma {
    pub const NAME: &'static str = "luma-mean";

    pub fn map(image: &ColorImage) -> ScalarField {
        let luma = image.luma();
        let mean = luma.mean();
        luma.map(|v| if v >= mean { v } else { 0.0 })
    }
}

impl SaliencyProvider for MeanThresholdLuma {
    fn name(&self) -> &str {
        Self::NAME
    }

    fn compute(&self, request: &SaliencyRequest<'_>) -> Result<ScalarField> {
        Ok(Self::map(request.image))
    }
}

/// Maps supplied up front, with an optional provider for the roles left empty.
pub struct FixedMaps {
    pub original: Option<ScalarField>,
    pub reconstructed: Option<ScalarField>,
    pub fallback: Option<Box<dyn SaliencyProvider>>,
}

impl SaliencyProvider for FixedMaps {
    fn name(&self) -> &str {
        "fixed"
    }

    fn compute(&self, request: &SaliencyRequest<'_>) -> Result<ScalarField> {
        let fixed = match request.role {
            ImageRole::Original => &self.original,
            ImageRole::Reconstructed => &self.reconstructed,
        };
        match (fixed, &self.fallback) {
            (Some(map), _) => Ok(map.clone()),
            (None, Some(p)) => p.saliency(request),
            (None, None) => Err(SeeError::Provider(format!(
                "no saliency map for the {} image of '{}'",
                match request.role {
                    ImageRole::Original => "original",
                    ImageRole::Reconstructed => "reconstructed",
                },
                request.key
            ))),
        }
    }
}
