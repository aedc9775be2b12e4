//! Flat key-value configuration (TOML syntax, top-level keys only) with
//! command-line overrides.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use vice_core::depth::DepthMode;
use vice_core::geometry::ImagePoint;
use vice_core::ingestion::Convention;
use vice_core::metrics::DEFAULT_ROE_STRIDE;

use crate::error::CliError;

/// Values read from a config file. Relative paths are resolved against
/// the file's directory.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub dataset: Option<PathBuf>,
    pub dataset_name: Option<String>,
    pub sequence: Option<String>,
    pub annotations: Option<PathBuf>,
    pub tracks_dir: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub sources: Option<Vec<String>>,
    pub depth_modes: Option<Vec<String>>,
    pub fps: Option<f64>,
    pub clip_seconds: Option<f64>,
    pub time_offset: Option<f64>,
    pub estimate_convention: Option<String>,
    pub initializer: Option<String>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub fixed_pixels: Option<Vec<[f64; 2]>>,
    pub roe_stride: Option<usize>,
    pub degrees: Option<bool>,
    pub palette: Option<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::missing(format!("config {}: {e}", path.display())))?;
        let mut cfg = ConfigFile::parse(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message)))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.dataset, &mut cfg.annotations, &mut cfg.tracks_dir, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitializerSetting {
    Annotations,
    Random { seed: u64, points: usize },
    Fixed(Vec<ImagePoint>),
}

/// Fully resolved settings shared by the pipeline commands.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dataset: PathBuf,
    pub dataset_name: String,
    pub sequence: String,
    pub annotations: PathBuf,
    pub tracks_dir: PathBuf,
    pub output: PathBuf,
    /// Empty selects every source found.
    pub sources: Vec<String>,
    pub depth_modes: Vec<DepthMode>,
    pub fps: Option<f64>,
    pub clip_seconds: Option<f64>,
    pub time_offset: f64,
    pub estimate_convention: Convention,
    pub initializer: InitializerSetting,
    pub roe_stride: usize,
    pub degrees: bool,
    pub palette: String,
}

/// Split `a,b , c` into trimmed non-empty items.
pub fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl Settings {
    /// Merge `overrides` (from flags) over `file`, then apply defaults.
    pub fn resolve(file: &ConfigFile, overrides: &ConfigFile) -> Result<Settings, CliError> {
        macro_rules! pick {
            ($field:ident) => {
                overrides.$field.clone().or_else(|| file.$field.clone())
            };
        }
        let dataset = pick!(dataset).ok_or_else(|| CliError::missing("no dataset given (use --dataset or `dataset` in the config)"))?;
        let sequence = pick!(sequence).unwrap_or_else(|| {
            dataset
                .canonicalize()
                .ok()
                .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                .unwrap_or_else(|| "sequence".into())
        });
        let depth_modes = pick!(depth_modes)
            .unwrap_or_else(|| vec!["floor".into()])
            .iter()
            .map(|m| m.parse::<DepthMode>().map_err(CliError::config))
            .collect::<Result<Vec<_>, _>>()?;
        if depth_modes.is_empty() {
            return Err(CliError::config("depth_modes is empty"));
        }
        let estimate_convention = pick!(estimate_convention)
            .map(|c| c.parse::<Convention>().map_err(CliError::config))
            .transpose()?
            .unwrap_or(Convention::Absolute);
        let initializer = match pick!(initializer).as_deref().unwrap_or("annotations") {
            "annotations" => InitializerSetting::Annotations,
            "random" => InitializerSetting::Random { seed: pick!(seed).unwrap_or(0), points: pick!(points).unwrap_or(4) },
            "fixed" => {
                let pixels = pick!(fixed_pixels).ok_or_else(|| CliError::config("initializer \"fixed\" needs fixed_pixels"))?;
                InitializerSetting::Fixed(pixels.iter().map(|[u, v]| ImagePoint::new(*u, *v)).collect())
            }
            other => return Err(CliError::config(format!("unknown initializer {other:?} (annotations, random, fixed)"))),
        };
        if let Some(fps) = pick!(fps) {
            if !(fps > 0.0) {
                return Err(CliError::config(format!("fps must be positive, got {fps}")));
            }
        }
        Ok(Settings {
            annotations: pick!(annotations).unwrap_or_else(|| dataset.join("annotations.json")),
            tracks_dir: pick!(tracks_dir).unwrap_or_else(|| dataset.join("tracks")),
            output: pick!(output).unwrap_or_else(|| dataset.join("results")),
            dataset_name: pick!(dataset_name).unwrap_or_else(|| "euroc".into()),
            sequence,
            dataset,
            sources: pick!(sources).unwrap_or_default(),
            depth_modes,
            fps: pick!(fps),
            clip_seconds: pick!(clip_seconds),
            time_offset: pick!(time_offset).unwrap_or(0.0),
            estimate_convention,
            initializer,
            roe_stride: pick!(roe_stride).unwrap_or(DEFAULT_ROE_STRIDE),
            degrees: pick!(degrees).unwrap_or(false),
            palette: pick!(palette).unwrap_or_else(|| "default".into()),
        })
    }
}
