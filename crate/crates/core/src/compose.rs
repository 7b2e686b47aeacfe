//! Spatial composition of part-specific retrievals into one skeleton.
//!
//! Each joint of the output is copied from the source motion that owns it
//! under a [`JointPartition`]; the root trajectory always comes from the
//! legs source. Sources are first trimmed to the shortest length. There is
//! no blending across part boundaries.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{Hit, Part, RetrievalResult};
use crate::motion::{self, JointMotion, MotionError, NUM_JOINTS, PELVIS};
use crate::par::{self, Exec};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("incompatible sources: {0}")]
    IncompatibleSources(String),
    #[error("{0} source motion is empty")]
    EmptySource(Part),
    #[error("{0} retrieval result is empty")]
    EmptyResults(Part),
    #[error("failed to load motion {id:?}: {source}")]
    Load {
        id: String,
        #[source]
        source: MotionError,
    },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Disjoint cover of the 22 joints by the three parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPartition {
    torso: Vec<usize>,
    hands: Vec<usize>,
    legs: Vec<usize>,
    #[serde(skip)]
    owner: Vec<Part>,
}

impl JointPartition {
    pub fn new(torso: Vec<usize>, hands: Vec<usize>, legs: Vec<usize>) -> Result<Self, ComposeError> {
        let mut owner: Vec<Option<Part>> = vec![None; NUM_JOINTS];
        for (part, set) in [(Part::Torso, &torso), (Part::Hands, &hands), (Part::Legs, &legs)] {
            for &j in set {
                if j >= NUM_JOINTS {
                    return Err(ComposeError::InvalidPartition(format!("joint {j} out of range 0..{NUM_JOINTS}")));
                }
                if let Some(prev) = owner[j] {
                    return Err(ComposeError::InvalidPartition(format!(
                        "joint {j} assigned to both {prev} and {part}"
                    )));
                }
                owner[j] = Some(part);
            }
        }
        let missing: Vec<usize> = (0..NUM_JOINTS).filter(|j| owner[*j].is_none()).collect();
        if !missing.is_empty() {
            return Err(ComposeError::InvalidPartition(format!("joints {missing:?} are not assigned")));
        }
        Ok(Self { torso, hands, legs, owner: owner.into_iter().map(Option::unwrap).collect() })
    }

    pub fn joints(&self, part: Part) -> &[usize] {
        match part {
            Part::Torso => &self.torso,
            Part::Hands => &self.hands,
            Part::Legs => &self.legs,
        }
    }

    pub fn owner(&self, joint: usize) -> Part {
        self.owner[joint]
    }
}

impl Default for JointPartition {
    fn default() -> Self {
        default_partition()
    }
}

/// Spine and head to torso, collars and arms to hands, pelvis and lower
/// limbs to legs.
pub fn default_partition() -> JointPartition {
    JointPartition::new(vec![3, 6, 9, 12, 15], vec![13, 14, 16, 17, 18, 19, 20, 21], vec![0, 1, 2, 4, 5, 7, 8, 10, 11])
        .expect("default partition is a valid cover")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrimMode {
    /// Keep frames `[0, f_min)`.
    #[default]
    Prefix,
    /// Keep the central `f_min` frames of each source.
    Centered,
}

impl std::str::FromStr for TrimMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prefix" => Ok(TrimMode::Prefix),
            "centered" => Ok(TrimMode::Centered),
            other => Err(format!("unknown trim mode {other:?} (expected prefix or centered)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComposeOptions {
    pub trim: TrimMode,
    /// Largest accepted fps difference between sources.
    pub fps_tolerance: f64,
}

impl Default for ComposeOptions {
    fn default() -> Self {
        Self { trim: TrimMode::Prefix, fps_tolerance: 1e-6 }
    }
}

/// Where each part of a composed motion came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub rank: usize,
    pub torso_id: String,
    pub hands_id: String,
    pub legs_id: String,
    pub f_min: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposedMotion {
    pub motion: JointMotion,
    pub provenance: Provenance,
}

/// A retrieved motion together with its database id.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub id: &'a str,
    pub motion: &'a JointMotion,
}

impl<'a> Source<'a> {
    pub fn new(id: &'a str, motion: &'a JointMotion) -> Self {
        Self { id, motion }
    }
}

/// Fuse three sources with default options, recorded as rank 1.
pub fn compose(
    torso: Source<'_>,
    hands: Source<'_>,
    legs: Source<'_>,
    partition: &JointPartition,
) -> Result<ComposedMotion, ComposeError> {
    compose_with(torso, hands, legs, partition, &ComposeOptions::default(), 1)
}

pub fn compose_with(
    torso: Source<'_>,
    hands: Source<'_>,
    legs: Source<'_>,
    partition: &JointPartition,
    opts: &ComposeOptions,
    rank: usize,
) -> Result<ComposedMotion, ComposeError> {
    let sources = [(Part::Torso, torso), (Part::Hands, hands), (Part::Legs, legs)];
    for (part, s) in &sources {
        if s.motion.frames() == 0 {
            return Err(ComposeError::EmptySource(*part));
        }
    }
    let fps = legs.motion.fps();
    for (part, s) in &sources {
        if (s.motion.fps() - fps).abs() > opts.fps_tolerance {
            return Err(ComposeError::IncompatibleSources(format!(
                "{part} source runs at {} fps, legs at {fps}",
                s.motion.fps()
            )));
        }
    }
    let f_min = sources.iter().map(|(_, s)| s.motion.frames()).min().unwrap();
    let offset = |m: &JointMotion| match opts.trim {
        TrimMode::Prefix => 0,
        TrimMode::Centered => (m.frames() - f_min) / 2,
    };
    let trimmed: Vec<JointMotion> =
        sources.iter().map(|(_, s)| s.motion.window(offset(s.motion), f_min)).collect::<Result<_, _>>()?;
    let [t_m, h_m, l_m] = [&trimmed[0], &trimmed[1], &trimmed[2]];
    let pick = |part: Part| match part {
        Part::Torso => t_m,
        Part::Hands => h_m,
        Part::Legs => l_m,
    };

    let mut out = l_m.clone();
    for t in 0..f_min {
        for j in 0..NUM_JOINTS {
            let src = pick(partition.owner(j));
            out.joint_positions[t][j] = src.joint_positions[t][j];
            if j != PELVIS {
                out.joint_rotations[t][j - 1] = src.joint_rotations[t][j - 1];
            }
        }
    }
    Ok(ComposedMotion {
        motion: out,
        provenance: Provenance {
            rank,
            torso_id: torso.id.to_owned(),
            hands_id: hands.id.to_owned(),
            legs_id: legs.id.to_owned(),
            f_min,
        },
    })
}

/// Resolves retrieval hits to motions.
pub trait MotionLoader: Sync {
    fn load(&self, hit: &Hit) -> Result<JointMotion, MotionError>;
}

/// Loads `MORAGMO1` joint files, resolving relative paths against `base`.
#[derive(Debug, Clone)]
pub struct FileLoader {
    pub base: PathBuf,
}

impl FileLoader {
    pub fn new(base: impl Into<PathBuf>) -> Self {
        Self { base: base.into() }
    }
}

impl MotionLoader for FileLoader {
    fn load(&self, hit: &Hit) -> Result<JointMotion, MotionError> {
        motion::io::load_joint_motion(self.base.join(&hit.motion_ref))
    }
}

/// Rank-by-rank composition: the i-th output fuses the i-th hit of every
/// part. Produces `min(k, shortest result)` motions.
pub fn compose_topk(
    results: &[RetrievalResult; 3],
    k: usize,
    partition: &JointPartition,
    loader: &dyn MotionLoader,
    opts: &ComposeOptions,
) -> Result<Vec<ComposedMotion>, ComposeError> {
    compose_topk_with(results, k, partition, loader, opts, Exec::default())
}

pub fn compose_topk_with(
    results: &[RetrievalResult; 3],
    k: usize,
    partition: &JointPartition,
    loader: &dyn MotionLoader,
    opts: &ComposeOptions,
    exec: Exec,
) -> Result<Vec<ComposedMotion>, ComposeError> {
    for (r, part) in results.iter().zip(Part::ALL) {
        if r.hits.is_empty() {
            return Err(ComposeError::EmptyResults(part));
        }
    }
    let count = results.iter().map(|r| r.hits.len()).min().unwrap().min(k);
    let load = |hit: &Hit| loader.load(hit).map_err(|source| ComposeError::Load { id: hit.id.clone(), source });
    par::try_map_range(exec, count, |i| {
        let [t, h, l] = [&results[0].hits[i], &results[1].hits[i], &results[2].hits[i]];
        let (tm, hm, lm) = (load(t)?, load(h)?, load(l)?);
        compose_with(Source::new(&t.id, &tm), Source::new(&h.id, &hm), Source::new(&l.id, &lm), partition, opts, i + 1)
    })
}

/// Write `rank_<r>.mo` and its `rank_<r>.json` provenance sidecar into `dir`;
/// returns both paths.
pub fn export_composed(dir: &Path, c: &ComposedMotion) -> Result<(PathBuf, PathBuf), ComposeError> {
    let mo = dir.join(format!("rank_{}.mo", c.provenance.rank));
    let js = dir.join(format!("rank_{}.json", c.provenance.rank));
    fs::write(&mo, motion::io::joint_motion_bytes(&c.motion)?)?;
    let mut body = serde_json::to_string_pretty(&c.provenance).expect("provenance serializes");
    body.push('\n');
    fs::write(&js, body)?;
    Ok((mo, js))
}
