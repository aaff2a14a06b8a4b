use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::noise_field::derive_seed;
use super::{
    apply_smoke_with, default_ksize, gen_smoke_clip_with, ContentCategory, DistortionKind, DistortionParams,
    DistortionSpec,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::frameio::{read_clip, write_clip, ClipFormat, VideoClip};
use crate::fsutil;

/// Parameters for every (kind, level) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelTable {
    cells: BTreeMap<(DistortionKind, u8), DistortionParams>,
}

impl LevelTable {
    pub fn from_specs(specs: impl IntoIterator<Item = DistortionSpec>) -> Result<Self> {
        let mut cells = BTreeMap::new();
        for s in specs {
            s.validate()?;
            cells.insert((s.kind, s.level), s.params);
        }
        Ok(LevelTable { cells })
    }

    pub fn get(&self, kind: DistortionKind, level: u8) -> Result<DistortionSpec> {
        self.cells
            .get(&(kind, level))
            .map(|&params| DistortionSpec { kind, level, params })
            .ok_or(Error::IncompleteLevelTable { kind, level })
    }

    /// Fails with the first missing (kind, level) cell.
    pub fn check_complete(&self) -> Result<()> {
        for kind in DistortionKind::ALL {
            for level in 1..=4 {
                self.get(kind, level)?;
            }
        }
        Ok(())
    }

    pub fn specs(&self) -> Vec<DistortionSpec> {
        self.cells
            .iter()
            .map(|(&(kind, level), &params)| DistortionSpec { kind, level, params })
            .collect()
    }

    pub fn set(&mut self, spec: DistortionSpec) -> Result<()> {
        spec.validate()?;
        self.cells.insert((spec.kind, spec.level), spec.params);
        Ok(())
    }

    pub fn remove(&mut self, kind: DistortionKind, level: u8) {
        self.cells.remove(&(kind, level));
    }
}

impl Default for LevelTable {
    /// Levels 1–4 run from mild to severe for every kind.
    fn default() -> Self {
        let mut specs = Vec::with_capacity(20);
        let push = |specs: &mut Vec<DistortionSpec>, kind, level, params| {
            specs.push(DistortionSpec { kind, level, params });
        };
        for (i, sigma) in [1.0, 2.0, 3.0, 5.0].into_iter().enumerate() {
            push(&mut specs, DistortionKind::DefocusBlur, i as u8 + 1, DistortionParams::DefocusBlur {
                sigma,
                ksize: default_ksize(sigma),
            });
        }
        for (i, length) in [5.0, 9.0, 15.0, 21.0].into_iter().enumerate() {
            push(&mut specs, DistortionKind::MotionBlur, i as u8 + 1, DistortionParams::MotionBlur { length, angle: 0.0 });
        }
        for (i, variance) in [0.0005, 0.002, 0.008, 0.02].into_iter().enumerate() {
            push(&mut specs, DistortionKind::Noise, i as u8 + 1, DistortionParams::Noise { variance });
        }
        for (i, (radius, floor)) in [(0.45, 0.35), (0.35, 0.25), (0.28, 0.15), (0.20, 0.08)].into_iter().enumerate() {
            push(&mut specs, DistortionKind::UnevenIllumination, i as u8 + 1, DistortionParams::UnevenIllumination {
                radius,
                floor,
                falloff: 0.25,
                center: [1.0 / 3.0, 1.0 / 3.0],
            });
        }
        for (i, opacity) in [0.25, 0.45, 0.65, 0.85].into_iter().enumerate() {
            push(&mut specs, DistortionKind::Smoke, i as u8 + 1, DistortionParams::Smoke { opacity });
        }
        LevelTable::from_specs(specs).expect("default table is valid")
    }
}

impl Serialize for LevelTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.specs().serialize(s)
    }
}

impl<'de> Deserialize<'de> for LevelTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let specs = Vec::<DistortionSpec>::deserialize(d)?;
        LevelTable::from_specs(specs).map_err(serde::de::Error::custom)
    }
}

/// One distorted video in a corpus. Paths are relative to the manifest's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub reference_label: String,
    pub content_category: ContentCategory,
    pub kind: DistortionKind,
    pub level: u8,
    pub params: DistortionParams,
    pub seed: u64,
    pub path: PathBuf,
    pub reference_path: PathBuf,
    /// Web-playable copy for the study UI, when one has been produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rendition: Option<PathBuf>,
}

impl ManifestEntry {
    pub fn spec(&self) -> DistortionSpec {
        DistortionSpec {
            kind: self.kind,
            level: self.level,
            params: self.params,
        }
    }

    pub fn group_key(&self) -> (String, DistortionKind) {
        (self.reference_label.clone(), self.kind)
    }
}

/// A loaded manifest together with the directory its paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn resolve(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.root.join(rel)
        }
    }

    pub fn video_path(&self, e: &ManifestEntry) -> PathBuf {
        self.resolve(&e.path)
    }

    pub fn reference_path(&self, e: &ManifestEntry) -> PathBuf {
        self.resolve(&e.reference_path)
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Distinct reference labels in first-seen order.
    pub fn references(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.reference_label) {
                out.push(e.reference_label.clone());
            }
        }
        out
    }
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
    for e in &entries {
        e.spec().validate()?;
    }
    Ok(Manifest {
        root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        entries,
    })
}

pub fn save_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(entries).map_err(|e| Error::json("manifest", e))?;
    text.push('\n');
    fsutil::atomic_write_bytes(path, text.as_bytes())
}

/// An input reference clip with its labels.
#[derive(Debug, Clone)]
pub struct CorpusReference {
    pub label: String,
    pub category: ContentCategory,
    pub clip: VideoClip,
}

#[derive(Debug, Clone)]
pub struct CorpusOptions {
    pub out_dir: PathBuf,
    pub format: ClipFormat,
    pub seed: u64,
    pub level_table: LevelTable,
}

impl CorpusOptions {
    pub fn new(out_dir: impl Into<PathBuf>, seed: u64) -> Self {
        CorpusOptions {
            out_dir: out_dir.into(),
            format: ClipFormat::Y4m,
            seed,
            level_table: LevelTable::default(),
        }
    }
}

const SMOKE_STREAM: u64 = 0x736d_6f6b_65;

fn clip_file(dir: &str, name: &str, format: ClipFormat) -> PathBuf {
    match format {
        ClipFormat::Y4m => Path::new(dir).join(format!("{name}.y4m")),
        ClipFormat::PngDir => Path::new(dir).join(name),
    }
}

/// Writes every reference and its 20 distorted variants below
/// `opts.out_dir`, plus `manifest.json`. Returns the manifest entries in
/// (reference, kind, level) order.
pub fn synthesize_corpus(refs: &[CorpusReference], opts: &CorpusOptions) -> Result<Vec<ManifestEntry>> {
    synthesize_corpus_with(refs, opts, Exec::default())
}

pub fn synthesize_corpus_with(refs: &[CorpusReference], opts: &CorpusOptions, exec: Exec) -> Result<Vec<ManifestEntry>> {
    opts.level_table.check_complete()?;
    if refs.is_empty() {
        return Err(Error::InvalidParameter("no reference clips".into()));
    }
    let mut labels: Vec<&str> = refs.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != refs.len() {
        return Err(Error::InvalidParameter("reference labels must be unique".into()));
    }
    let mut entries = Vec::with_capacity(refs.len() * 20);
    for (ri, r) in refs.iter().enumerate() {
        let ref_rel = clip_file("refs", &r.label, opts.format);
        write_clip(&r.clip, &opts.out_dir.join(&ref_rel), opts.format)?;
        let mut plume: Option<VideoClip> = None;
        for kind in DistortionKind::ALL {
            for level in 1..=4u8 {
                let spec = opts.level_table.get(kind, level)?;
                // smoke shares one plume per reference so levels differ only in opacity
                let seed = match kind {
                    DistortionKind::Smoke => derive_seed(opts.seed, &[ri as u64, SMOKE_STREAM]),
                    _ => derive_seed(opts.seed, &[ri as u64, kind.index(), u64::from(level)]),
                };
                let id = format!("{}-{}-{}", r.label, kind.code(), level);
                let rel = clip_file("videos", &id, opts.format);
                let distorted = match spec.params {
                    DistortionParams::Smoke { opacity } => {
                        if plume.is_none() {
                            let (w, h) = r.clip.dims();
                            plume = Some(gen_smoke_clip_with(w, h, r.clip.len(), seed, exec)?);
                        }
                        let smoke = plume.as_ref().expect("generated above");
                        apply_smoke_with(&r.clip, smoke, opacity, exec)?
                    }
                    _ => spec.apply_with(&r.clip, seed, exec)?,
                };
                write_clip(&distorted, &opts.out_dir.join(&rel), opts.format)?;
                log::debug!("wrote {id}");
                entries.push(ManifestEntry {
                    id,
                    reference_label: r.label.clone(),
                    content_category: r.category,
                    kind,
                    level,
                    params: spec.params,
                    seed,
                    path: rel,
                    reference_path: ref_rel.clone(),
                    rendition: None,
                });
            }
        }
    }
    save_manifest(&opts.out_dir.join("manifest.json"), &entries)?;
    Ok(entries)
}

/// Loads the pristine reference of a manifest entry.
pub fn load_reference(manifest: &Manifest, entry: &ManifestEntry) -> Result<VideoClip> {
    let p = manifest.reference_path(entry);
    read_clip(&p, ClipFormat::infer(&p))
}
