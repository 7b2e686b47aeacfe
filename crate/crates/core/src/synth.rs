//! Seeded synthetic data: random motions and embeddings for tests, benches
//! and the demo fixtures.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::motion::{JointMotion, Rot6, Vec3, NUM_JOINTS, NUM_ROT_JOINTS, PELVIS};

/// Rough T-pose offsets (metres, root-relative) for the 22 joints.
const REST_POSE: [Vec3; NUM_JOINTS] = [
    [0.0, 0.0, 0.0],
    [0.06, -0.09, 0.0],
    [-0.06, -0.09, 0.0],
    [0.0, 0.11, -0.02],
    [0.1, -0.47, 0.0],
    [-0.1, -0.47, 0.0],
    [0.0, 0.25, 0.0],
    [0.08, -0.87, -0.04],
    [-0.08, -0.87, -0.04],
    [0.0, 0.31, 0.02],
    [0.11, -0.93, 0.08],
    [-0.11, -0.93, 0.08],
    [0.0, 0.52, 0.0],
    [0.08, 0.43, 0.0],
    [-0.08, 0.43, 0.0],
    [0.0, 0.63, 0.05],
    [0.18, 0.42, 0.0],
    [-0.18, 0.42, 0.0],
    [0.44, 0.4, 0.0],
    [-0.44, 0.4, 0.0],
    [0.69, 0.41, 0.0],
    [-0.69, 0.41, 0.0],
];

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| normal(rng)).collect()
}

pub fn gaussian_vec_f32(rng: &mut impl Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| normal(rng) as f32).collect()
}

/// Orthonormal 6D rotation drawn from Gaussian columns.
pub fn random_rot6(rng: &mut impl Rng) -> Rot6 {
    loop {
        let a: Vec3 = [normal(rng), normal(rng), normal(rng)];
        let b: Vec3 = [normal(rng), normal(rng), normal(rng)];
        let na = dot(a, a).sqrt();
        if na < 1e-3 {
            continue;
        }
        let a = a.map(|v| v / na);
        let proj = dot(a, b);
        let b = [b[0] - proj * a[0], b[1] - proj * a[1], b[2] - proj * a[2]];
        let nb = dot(b, b).sqrt();
        if nb < 1e-3 {
            continue;
        }
        let b = b.map(|v| v / nb);
        return [a[0], a[1], a[2], b[0], b[1], b[2]];
    }
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// A wandering, jittering skeleton with valid rotations.
pub fn random_motion(rng: &mut impl Rng, frames: usize, fps: f64) -> JointMotion {
    let mut heading = rng.random_range(-3.0..3.0);
    let mut pos: Vec3 = [rng.random_range(-1.0..1.0), 0.9, rng.random_range(-1.0..1.0)];
    let mut root_translation = Vec::with_capacity(frames);
    let mut root_heading = Vec::with_capacity(frames);
    let mut joint_positions = Vec::with_capacity(frames);
    let mut joint_rotations = Vec::with_capacity(frames);
    for _ in 0..frames {
        root_translation.push([pos[0], 0.9 + 0.03 * normal(rng), pos[2]]);
        root_heading.push(heading);
        let mut p = REST_POSE;
        for (j, v) in p.iter_mut().enumerate() {
            if j != PELVIS {
                for c in v.iter_mut() {
                    *c += 0.05 * normal(rng);
                }
            }
        }
        joint_positions.push(p);
        let rots: [Rot6; NUM_ROT_JOINTS] = std::array::from_fn(|_| random_rot6(rng));
        joint_rotations.push(rots);
        heading += 0.1 * normal(rng);
        pos[0] += 0.03 * normal(rng);
        pos[2] += 0.03 * normal(rng);
    }
    JointMotion::new(fps, root_translation, root_heading, joint_positions, joint_rotations)
        .expect("synthetic motion is valid")
}

/// `frames` copies of frame `t` of `m`.
pub fn repeat_frame(m: &JointMotion, t: usize, frames: usize) -> JointMotion {
    JointMotion {
        fps: m.fps,
        root_translation: vec![m.root_translation[t]; frames],
        root_heading: vec![m.root_heading[t]; frames],
        joint_positions: vec![m.joint_positions[t]; frames],
        joint_rotations: vec![m.joint_rotations[t]; frames],
    }
}

/// Shape of a [`write_fixture_corpus`] corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub motions: usize,
    pub queries: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self { motions: 40, queries: 4, dim: 16, seed: 7 }
    }
}

/// Paths and contents of a written fixture corpus.
#[derive(Debug, Clone)]
pub struct FixtureCorpus {
    pub root: std::path::PathBuf,
    pub config: std::path::PathBuf,
    pub queries: Vec<crate::prompt::PartDescriptions>,
}

impl FixtureCorpus {
    pub fn manifest(&self, part: crate::index::Part) -> std::path::PathBuf {
        self.root.join(format!("manifest_{part}.jsonl"))
    }

    pub fn vectors(&self, part: crate::index::Part) -> std::path::PathBuf {
        self.root.join(format!("vectors_{part}.f32"))
    }

    pub fn database(&self, part: crate::index::Part) -> std::path::PathBuf {
        self.root.join(format!("{part}.db"))
    }
}

/// Write a self-contained corpus under `root`: motion files, per-part
/// manifests, vector tables and databases, a query-embedding lookup, a
/// pre-filled completion cache for every query, and a config file tying them
/// together. Query embeddings are perturbed copies of database entries, so
/// retrieval has a clear winner.
pub fn write_fixture_corpus(root: &std::path::Path, spec: FixtureSpec) -> std::io::Result<FixtureCorpus> {
    use crate::index::{self, manifest, Part};
    use crate::pipeline::{EmbeddingLookup, LookupRecord};
    use crate::prompt::{cache_key, PartDescriptions, PromptCache, PromptTemplate};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    let io_err = |e: &dyn std::fmt::Display| std::io::Error::other(e.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    std::fs::create_dir_all(root.join("motions"))?;
    let mut lines = Vec::with_capacity(spec.motions);
    for i in 0..spec.motions {
        let frames = rng.random_range(30..=60);
        let m = random_motion(&mut rng, frames, 20.0);
        let rel = format!("motions/m{i:04}.mo");
        crate::motion::io::save_joint_motion(root.join(&rel), &m).map_err(|e| io_err(&e))?;
        lines.push((format!("m{i:04}"), frames as u32, format!("synthetic motion {i}"), rel));
    }
    let mut tables = Vec::new();
    for part in Part::ALL {
        let man: Vec<manifest::ManifestLine> = lines
            .iter()
            .map(|(id, frames, text, path)| manifest::ManifestLine {
                id: id.clone(),
                part,
                frames: *frames,
                text: text.clone(),
                motion_path: path.clone(),
            })
            .collect();
        let vecs: Vec<Vec<f32>> = (0..spec.motions).map(|_| gaussian_vec_f32(&mut rng, spec.dim)).collect();
        manifest::write_manifest(root.join(format!("manifest_{part}.jsonl")), &man).map_err(|e| io_err(&e))?;
        manifest::write_vectors(root.join(format!("vectors_{part}.f32")), &vecs).map_err(|e| io_err(&e))?;
        let db = manifest::build_from_manifest(part, man, vecs.clone()).map_err(|e| io_err(&e))?;
        index::io::save(&db, root.join(format!("{part}.db"))).map_err(|e| io_err(&e))?;
        tables.push(vecs);
    }

    let tmpl = PromptTemplate::default();
    let cache = PromptCache::open(root.join("llm_cache.jsonl")).map_err(|e| io_err(&e))?;
    let mut records = Vec::new();
    let mut queries = Vec::new();
    for q in 0..spec.queries {
        let pd = PartDescriptions {
            source: format!("A person performs fixture action {q}"),
            torso: format!("The torso holds pose {q}."),
            hands: format!("The hands trace shape {q}."),
            legs: format!("The legs step pattern {q}."),
        };
        for (p, part) in Part::ALL.into_iter().enumerate() {
            let target = rng.random_range(0..spec.motions);
            let embedding = tables[p][target].iter().map(|&x| x + 0.1 * normal(&mut rng) as f32).collect();
            records.push(LookupRecord { part, text: pd.get(part).to_owned(), embedding });
        }
        let prompt = crate::prompt::build_prompt(&pd.source, &tmpl).map_err(|e| io_err(&e))?;
        cache.insert(&cache_key(&pd.source, &tmpl), &prompt, &pd.serialize()).map_err(|e| io_err(&e))?;
        queries.push(pd);
    }
    EmbeddingLookup::write(root.join("lookup.jsonl"), &records).map_err(|e| io_err(&e))?;

    let config = root.join("morag.conf");
    std::fs::write(
        &config,
        "db.torso = torso.db\ndb.hands = hands.db\ndb.legs = legs.db\ndb.motion_root = .\n\
         embed.lookup = lookup.jsonl\nllm.cache = llm_cache.jsonl\ncompose.k = 2\n",
    )?;
    Ok(FixtureCorpus { root: root.to_path_buf(), config, queries })
}

/// Text vectors `x_i` and motion vectors `A x_i` for a random `A`: a
/// dataset a pair of linear projections can align exactly.
pub fn linear_toy_pairs(n: usize, text_dim: usize, motion_dim: usize, seed: u64) -> crate::contrastive::ToyPairs {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<Vec<f64>> = (0..motion_dim).map(|_| gaussian_vec(&mut rng, text_dim)).collect();
    let text: Vec<Vec<f64>> = (0..n).map(|_| gaussian_vec(&mut rng, text_dim)).collect();
    let motion =
        text.iter().map(|x| a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()).collect();
    crate::contrastive::ToyPairs { text, motion, text_sims: None }
}
