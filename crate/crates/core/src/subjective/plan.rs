use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::noise_field::derive_seed;
use crate::synth::{DistortionKind, ManifestEntry};

/// A comparison group: one reference under one distortion kind. Written as
/// `"{reference}/{kind code}"`, e.g. `"GB/defocus"`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupKey {
    pub reference: String,
    pub kind: DistortionKind,
}

impl GroupKey {
    pub fn new(reference: impl Into<String>, kind: DistortionKind) -> Self {
        GroupKey {
            reference: reference.into(),
            kind,
        }
    }

    pub fn of(entry: &ManifestEntry) -> Self {
        GroupKey::new(entry.reference_label.clone(), entry.kind)
    }
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.reference, self.kind.code())
    }
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (reference, kind) = s
            .rsplit_once('/')
            .ok_or_else(|| Error::InvalidParameter(format!("group key {s:?} is not reference/kind")))?;
        if reference.is_empty() {
            return Err(Error::InvalidParameter(format!("group key {s:?} has no reference")));
        }
        Ok(GroupKey::new(reference, kind.parse()?))
    }
}

impl Serialize for GroupKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub idx: usize,
    /// Video shown first.
    pub a: String,
    /// Video shown second.
    pub b: String,
    pub group: GroupKey,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub observer_id: String,
    pub seed: u64,
    pub trials: Vec<Trial>,
}

impl SessionPlan {
    /// Checks the structural contract: unique trial indices, distinct videos
    /// in every trial, and no pair repeated.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::IncompleteRecord {
            observer: self.observer_id.clone(),
            reason,
        };
        let mut seen_idx = BTreeSet::new();
        let mut seen_pair = BTreeSet::new();
        for t in &self.trials {
            if !seen_idx.insert(t.idx) {
                return Err(bad(format!("duplicate trial idx {}", t.idx)));
            }
            if t.a == t.b {
                return Err(bad(format!("trial {} compares {} with itself", t.idx, t.a)));
            }
            let pair = if t.a < t.b { (&t.a, &t.b) } else { (&t.b, &t.a) };
            if !seen_pair.insert(pair) {
                return Err(bad(format!("pair {} / {} repeated", t.a, t.b)));
            }
        }
        Ok(())
    }

    pub fn trial(&self, idx: usize) -> Option<&Trial> {
        self.trials.iter().find(|t| t.idx == idx)
    }
}

/// Stable 64-bit hash of an observer id (FNV-1a), so plans do not depend on
/// the platform's hasher.
pub fn observer_hash(id: &str) -> u64 {
    id.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// All within-group pairs of a manifest, in random order with random A/B
/// sides. The shuffle depends on both `seed` and `observer_id`, so one
/// study seed gives every observer a different order.
pub fn plan_session(entries: &[ManifestEntry], observer_id: &str, seed: u64) -> Result<SessionPlan> {
    let mut groups: BTreeMap<GroupKey, BTreeMap<u8, &str>> = BTreeMap::new();
    for e in entries {
        let levels = groups.entry(GroupKey::of(e)).or_default();
        if levels.insert(e.level, &e.id).is_some() {
            return Err(Error::IncompleteManifest(format!(
                "group {} has level {} twice",
                GroupKey::of(e),
                e.level
            )));
        }
    }
    if groups.is_empty() {
        return Err(Error::IncompleteManifest("no videos".into()));
    }
    for (key, levels) in &groups {
        let have: Vec<u8> = levels.keys().copied().collect();
        if have != [1, 2, 3, 4] {
            return Err(Error::IncompleteManifest(format!("group {key} has levels {have:?}, expected 1-4")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[observer_hash(observer_id)]));
    let mut trials = Vec::with_capacity(groups.len() * 6);
    for (key, levels) in &groups {
        let ids: Vec<&str> = levels.values().copied().collect();
        for i in 0..ids.len() {
            for j in i + 1..ids.len() {
                let (a, b) = if rng.gen::<bool>() { (ids[i], ids[j]) } else { (ids[j], ids[i]) };
                trials.push(Trial {
                    idx: 0,
                    a: a.to_string(),
                    b: b.to_string(),
                    group: key.clone(),
                });
            }
        }
    }
    trials.shuffle(&mut rng);
    for (i, t) in trials.iter_mut().enumerate() {
        t.idx = i;
    }
    Ok(SessionPlan {
        observer_id: observer_id.to_string(),
        seed,
        trials,
    })
}
