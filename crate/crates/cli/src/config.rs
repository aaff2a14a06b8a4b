//! Optional JSON pipeline configuration. Every field can also be given as a
//! command-line flag; flags win. Relative paths resolve against the
//! directory holding the config file.

use std::path::{Path, PathBuf};

use lvq_core::classify::ClassifierThresholds;
use lvq_core::subjective::simulate::ObserverModel;
use lvq_core::subjective::Cohort;
use lvq_core::synth::LevelTable;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub refs: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub scores: Option<PathBuf>,
    pub plans: Option<PathBuf>,
    pub records: Option<PathBuf>,
    #[serde(default)]
    pub mos: Vec<PathBuf>,
}

/// Size of generated reference clips.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSize {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
}

impl Default for ReferenceSize {
    /// 10 s at 25 fps, 512×288.
    fn default() -> Self {
        ReferenceSize {
            width: 512,
            height: 288,
            frames: 250,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub cohort: Option<Cohort>,
    #[serde(default)]
    pub paths: Paths,
    /// Replaces the built-in level table entirely; every (kind, level)
    /// cell must be present.
    pub level_table: Option<LevelTable>,
    pub thresholds: Option<ClassifierThresholds>,
    pub observer_model: Option<ObserverModel>,
    pub reference: Option<ReferenceSize>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.paths.rebase(base);
        Ok(cfg)
    }
}

impl Paths {
    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.refs,
            &mut self.corpus,
            &mut self.manifest,
            &mut self.scores,
            &mut self.plans,
            &mut self.records,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        self.mos.iter_mut().for_each(fix);
    }
}

/// The flag value, else the config value, else a usage error naming both.
pub fn need<T>(flag: Option<T>, config: Option<T>, what: &str) -> CliResult<T> {
    flag.or(config)
        .ok_or_else(|| CliError::usage(format!("{what} is required (flag or config)")))
}
