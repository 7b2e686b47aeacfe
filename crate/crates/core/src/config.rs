//! Flat `key = value` engine configuration.
//!
//! Keys are dotted (`llm.model`, `compose.k`, ...). `#` starts a comment line.
//! Unknown keys are errors. Every key can be overridden from the environment
//! as `MORAG_` followed by the key upper-cased with dots replaced by
//! underscores, e.g. `MORAG_COMPOSE_K=5`. Relative paths resolve against the
//! directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::compose::{ComposeOptions, JointPartition, TrimMode};
use crate::contrastive::{LossWeights, TrainOptions};
use crate::metrics::EvalOptions;
use crate::motion::DEFAULT_CONTACT_THRESHOLD;
use crate::prompt::{LlmSettings, PromptTemplate};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {message}")]
    Syntax { path: String, line: usize, message: String },
    #[error("unknown config key {key:?}")]
    UnknownKey { key: String },
    #[error("invalid value {value:?} for {key}: {message}")]
    InvalidValue { key: String, value: String, message: String },
    #[error("{key} is not set")]
    Missing { key: String },
    #[error("{key} points to {path}, which does not exist")]
    MissingPath { key: String, path: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "db.torso",
    "db.hands",
    "db.legs",
    "db.motion_root",
    "llm.endpoint",
    "llm.model",
    "llm.max_tokens",
    "llm.cache",
    "llm.retries",
    "llm.max_in_flight",
    "llm.timeout_secs",
    "llm.template",
    "embed.lookup",
    "embed.endpoint",
    "loss.lambda_kl",
    "loss.lambda_e",
    "loss.lambda_nce",
    "loss.temperature",
    "loss.filter_threshold",
    "compose.k",
    "compose.trim",
    "compose.fps_tolerance",
    "metrics.seed",
    "metrics.pool_size",
    "metrics.subset_size",
    "metrics.mm_pairs",
    "metrics.feature_dim",
    "partition.torso",
    "partition.hands",
    "partition.legs",
    "train.epochs",
    "train.lr",
    "train.output_dim",
    "train.seed",
    "motion.contact_threshold",
];

pub fn env_var_name(key: &str) -> String {
    format!("MORAG_{}", key.to_uppercase().replace('.', "_"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub base_dir: PathBuf,
    pub db_torso: Option<PathBuf>,
    pub db_hands: Option<PathBuf>,
    pub db_legs: Option<PathBuf>,
    pub motion_root: PathBuf,
    pub llm_endpoint: Option<String>,
    pub llm: LlmSettings,
    pub llm_cache: Option<PathBuf>,
    pub llm_max_in_flight: usize,
    pub llm_timeout_secs: u64,
    pub template: PromptTemplate,
    pub embed_lookup: Option<PathBuf>,
    pub embed_endpoint: Option<String>,
    pub loss: LossWeights,
    pub k: usize,
    pub compose: ComposeOptions,
    pub metrics: EvalOptions,
    pub feature_dim: usize,
    pub partition: JointPartition,
    pub train: TrainOptions,
    pub contact_threshold: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            db_torso: None,
            db_hands: None,
            db_legs: None,
            motion_root: PathBuf::from("."),
            llm_endpoint: None,
            llm: LlmSettings::default(),
            llm_cache: None,
            llm_max_in_flight: 4,
            llm_timeout_secs: 60,
            template: PromptTemplate::default(),
            embed_lookup: None,
            embed_endpoint: None,
            loss: LossWeights::default(),
            k: 3,
            compose: ComposeOptions::default(),
            metrics: EvalOptions::default(),
            feature_dim: 512,
            partition: JointPartition::default(),
            train: TrainOptions::default(),
            contact_threshold: DEFAULT_CONTACT_THRESHOLD,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| invalid(key, v, e.to_string()))
}

fn invalid(key: &str, v: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: v.into(), message: message.into() }
}

fn parse_joints(key: &str, v: &str) -> Result<Vec<usize>, ConfigError> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse_num(key, s)).collect()
}

/// Parse `key = value` lines into a map, rejecting unknown and repeated keys.
pub fn parse_pairs(text: &str, origin: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |message: &str| ConfigError::Syntax { path: origin.into(), line: i + 1, message: message.into() };
        let (k, v) = line.split_once('=').ok_or_else(|| syntax("expected key = value"))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { key: k.into() });
        }
        if out.insert(k.to_owned(), v.to_owned()).is_some() {
            return Err(syntax(&format!("{k} set twice")));
        }
    }
    Ok(out)
}

impl EngineConfig {
    /// Defaults, then the file at `path` if given, then environment
    /// overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let (pairs, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (parse_pairs(&text, &p.display().to_string())?, base)
            }
            None => (BTreeMap::new(), PathBuf::from(".")),
        };
        Self::from_pairs(pairs, base, |k| std::env::var(env_var_name(k)).ok())
    }

    pub fn from_pairs(
        mut pairs: BTreeMap<String, String>,
        base_dir: PathBuf,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Self, ConfigError> {
        for k in KEYS {
            if let Some(v) = env(k) {
                pairs.insert((*k).to_owned(), v);
            }
        }
        let base_dir = if base_dir.as_os_str().is_empty() { PathBuf::from(".") } else { base_dir };
        let mut c = Self { base_dir, ..Self::default() };
        let mut part: [Option<Vec<usize>>; 3] = [None, None, None];
        for (k, v) in &pairs {
            let path = || Some(c.base_dir.join(v));
            match k.as_str() {
                "db.torso" => c.db_torso = path(),
                "db.hands" => c.db_hands = path(),
                "db.legs" => c.db_legs = path(),
                "db.motion_root" => c.motion_root = c.base_dir.join(v),
                "llm.endpoint" => c.llm_endpoint = Some(v.clone()).filter(|s| !s.is_empty()),
                "llm.model" => c.llm.model = v.clone(),
                "llm.max_tokens" => c.llm.max_tokens = parse_num(k, v)?,
                "llm.cache" => c.llm_cache = path(),
                "llm.retries" => c.llm.retries = parse_num(k, v)?,
                "llm.max_in_flight" => c.llm_max_in_flight = parse_num(k, v)?,
                "llm.timeout_secs" => c.llm_timeout_secs = parse_num(k, v)?,
                "llm.template" => {
                    let p = c.base_dir.join(v);
                    let text =
                        std::fs::read_to_string(&p).map_err(|e| invalid(k, v, format!("cannot read template: {e}")))?;
                    c.template = serde_json::from_str(&text).map_err(|e| invalid(k, v, e.to_string()))?;
                    c.template.validate().map_err(|e| invalid(k, v, e.to_string()))?;
                }
                "embed.lookup" => c.embed_lookup = path(),
                "embed.endpoint" => c.embed_endpoint = Some(v.clone()).filter(|s| !s.is_empty()),
                "loss.lambda_kl" => c.loss.lambda_kl = parse_num(k, v)?,
                "loss.lambda_e" => c.loss.lambda_e = parse_num(k, v)?,
                "loss.lambda_nce" => c.loss.lambda_nce = parse_num(k, v)?,
                "loss.temperature" => c.loss.tau = parse_num(k, v)?,
                "loss.filter_threshold" => c.loss.filter_threshold = parse_num(k, v)?,
                "compose.k" => c.k = parse_num(k, v)?,
                "compose.trim" => c.compose.trim = v.parse::<TrimMode>().map_err(|e| invalid(k, v, e))?,
                "compose.fps_tolerance" => c.compose.fps_tolerance = parse_num(k, v)?,
                "metrics.seed" => c.metrics.seed = parse_num(k, v)?,
                "metrics.pool_size" => c.metrics.pool_size = parse_num(k, v)?,
                "metrics.subset_size" => c.metrics.subset_size = parse_num(k, v)?,
                "metrics.mm_pairs" => c.metrics.mm_pairs = parse_num(k, v)?,
                "metrics.feature_dim" => c.feature_dim = parse_num(k, v)?,
                "partition.torso" => part[0] = Some(parse_joints(k, v)?),
                "partition.hands" => part[1] = Some(parse_joints(k, v)?),
                "partition.legs" => part[2] = Some(parse_joints(k, v)?),
                "train.epochs" => c.train.epochs = parse_num(k, v)?,
                "train.lr" => c.train.learning_rate = parse_num(k, v)?,
                "train.output_dim" => c.train.output_dim = parse_num(k, v)?,
                "train.seed" => c.train.seed = parse_num(k, v)?,
                "motion.contact_threshold" => c.contact_threshold = parse_num(k, v)?,
                other => return Err(ConfigError::UnknownKey { key: other.into() }),
            }
        }
        if part.iter().any(Option::is_some) {
            let d = JointPartition::default();
            let [t, h, l] = part;
            let pick = |o: Option<Vec<usize>>, p| o.unwrap_or_else(|| d.joints(p).to_vec());
            use crate::index::Part;
            c.partition = JointPartition::new(pick(t, Part::Torso), pick(h, Part::Hands), pick(l, Part::Legs))
                .map_err(|e| invalid("partition", "", e.to_string()))?;
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: usize| if v == 0 { Err(invalid(key, "0", "must be at least 1")) } else { Ok(()) };
        positive("compose.k", self.k)?;
        positive("llm.max_tokens", self.llm.max_tokens as usize)?;
        positive("llm.max_in_flight", self.llm_max_in_flight)?;
        positive("metrics.pool_size", self.metrics.pool_size)?;
        positive("metrics.subset_size", self.metrics.subset_size)?;
        positive("metrics.mm_pairs", self.metrics.mm_pairs)?;
        positive("metrics.feature_dim", self.feature_dim)?;
        positive("train.output_dim", self.train.output_dim)?;
        self.loss.validate().map_err(|e| invalid("loss", "", e.to_string()))?;
        if self.compose.fps_tolerance.is_nan() || self.compose.fps_tolerance < 0.0 {
            return Err(invalid(
                "compose.fps_tolerance",
                &self.compose.fps_tolerance.to_string(),
                "must be non-negative",
            ));
        }
        if !(self.contact_threshold > 0.0 && self.contact_threshold.is_finite()) {
            return Err(invalid("motion.contact_threshold", &self.contact_threshold.to_string(), "must be positive"));
        }
        for (key, p) in [
            ("db.torso", &self.db_torso),
            ("db.hands", &self.db_hands),
            ("db.legs", &self.db_legs),
            ("embed.lookup", &self.embed_lookup),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(ConfigError::MissingPath { key: key.into(), path: p.display().to_string() });
                }
            }
        }
        if let Some(dir) = self.llm_cache.as_ref().and_then(|p| p.parent()) {
            if !dir.as_os_str().is_empty() && !dir.is_dir() {
                return Err(ConfigError::MissingPath { key: "llm.cache".into(), path: dir.display().to_string() });
            }
        }
        Ok(())
    }

    /// Database path for one part, or an error naming the key.
    pub fn db_path(&self, part: crate::index::Part) -> Result<&Path, ConfigError> {
        use crate::index::Part;
        let (key, p) = match part {
            Part::Torso => ("db.torso", &self.db_torso),
            Part::Hands => ("db.hands", &self.db_hands),
            Part::Legs => ("db.legs", &self.db_legs),
        };
        p.as_deref().ok_or_else(|| ConfigError::Missing { key: key.into() })
    }
}
