use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use log::{debug, info};
use morag_core::compose::{export_composed, FileLoader};
use morag_core::config::EngineConfig;
use morag_core::contrastive::{read_text_sims, train_toy_projection, ContrastiveError, ToyPairs};
use morag_core::index::{self, manifest, RetrievalResult};
use morag_core::metrics::{evaluate, EvalOptions, FeatureSet};
use morag_core::pipeline::{
    self, load_databases, pooled_feature_set, EmbeddingLookup, HttpEmbedder, QueryEmbedder, RetrievalReport,
};
use morag_core::prompt::{
    cache_key, describe_parts, parse_llm_output, HttpClient, LlmClient, LlmRequest, LlmResponse, PartDescriptions,
    PromptCache, PromptError,
};
use morag_core::Exec;
use serde_json::json;

use crate::args;
use crate::exit::{Failure, DATA, IO, MISSING};

fn write_json(path: &Path, v: &impl serde::Serialize) -> Result<(), Failure> {
    let mut body = serde_json::to_string_pretty(v).expect("serializable");
    body.push('\n');
    fs::write(path, body).map_err(|e| Failure::new(IO, e).context(path.display()))
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

pub fn build_db(a: &args::BuildDb) -> Result<(), Failure> {
    let io = |e: morag_core::index::IndexError| Failure::new(IO, e);
    let lines = manifest::read_manifest(&a.manifest).map_err(io).map_err(|f| f.context(a.manifest.display()))?;
    let vectors = manifest::read_vectors(&a.vectors, lines.len(), Some(a.dim))
        .map_err(io)
        .map_err(|f| f.context(a.vectors.display()))?;
    let db = manifest::build_from_manifest(a.part, lines, vectors).map_err(io)?;
    index::io::save(&db, &a.out).map_err(io).map_err(|f| f.context(a.out.display()))?;
    println!("built {} database {}: {} entries, dimension {}", a.part, a.out.display(), db.len(), db.dim());
    Ok(())
}

struct Counting<'a> {
    inner: &'a dyn LlmClient,
    calls: AtomicUsize,
}

impl LlmClient for Counting<'_> {
    fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, PromptError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        debug!("llm request to model {}", req.model);
        self.inner.complete(req)
    }
}

struct Unconfigured;

impl LlmClient for Unconfigured {
    fn complete(&self, _req: &LlmRequest) -> Result<LlmResponse, PromptError> {
        Err(PromptError::Endpoint("llm.endpoint is not set".into()))
    }
}

fn describe_text(text: &str, cfg: &EngineConfig) -> Result<PartDescriptions, Failure> {
    let cache = match &cfg.llm_cache {
        Some(p) => PromptCache::open(p)?,
        None => PromptCache::in_memory(),
    };
    let cached = cache.get(&cache_key(text, &cfg.template)).is_some_and(|r| parse_llm_output(&r.completion).is_ok());
    let http;
    let inner: &dyn LlmClient = match &cfg.llm_endpoint {
        Some(url) => {
            http = HttpClient::from_env(url.clone(), Duration::from_secs(cfg.llm_timeout_secs));
            &http
        }
        None if cached => &Unconfigured,
        None => {
            return Err(Failure::new(
                MISSING,
                format!("no cached descriptions for {text:?} and llm.endpoint is not set"),
            ))
        }
    };
    let client = Counting { inner, calls: AtomicUsize::new(0) };
    let pd = describe_parts(text, &cfg.template, &client, &cache, &cfg.llm)?;
    info!(
        "llm requests: {} ({})",
        client.calls.load(Ordering::SeqCst),
        if cached { "cache hit" } else { "cache miss" }
    );
    Ok(pd)
}

pub fn describe(a: &args::Describe, cfg: &EngineConfig) -> Result<(), Failure> {
    print_json(&describe_text(&a.text, cfg)?);
    Ok(())
}

fn descriptions(q: &args::Query, cfg: &EngineConfig) -> Result<PartDescriptions, Failure> {
    match &q.descriptions {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::new(IO, e).context(p.display()))?;
            let mut pd: PartDescriptions =
                serde_json::from_str(&text).map_err(|e| Failure::new(DATA, e).context(p.display()))?;
            if pd.source.is_empty() {
                pd.source = q.text.clone();
            }
            Ok(pd)
        }
        None => describe_text(&q.text, cfg),
    }
}

fn embedder(cfg: &EngineConfig) -> Result<Box<dyn QueryEmbedder>, Failure> {
    if let Some(p) = &cfg.embed_lookup {
        let l = EmbeddingLookup::load(p)?;
        info!("loaded {} query embeddings from {}", l.len(), p.display());
        return Ok(Box::new(l));
    }
    if let Some(url) = &cfg.embed_endpoint {
        return Ok(Box::new(HttpEmbedder::new(url.clone(), Duration::from_secs(cfg.llm_timeout_secs))));
    }
    Err(Failure::new(MISSING, "neither embed.lookup nor embed.endpoint is set; export description embeddings first"))
}

fn run_query(q: &args::Query, cfg: &EngineConfig) -> Result<(PartDescriptions, usize, [RetrievalResult; 3]), Failure> {
    let k = q.k.map_or(cfg.k, |k| k as usize);
    let pd = descriptions(q, cfg)?;
    let emb = embedder(cfg)?;
    let dbs = load_databases(cfg)?;
    let results = pipeline::retrieve(&pd, &dbs, emb.as_ref(), k, Exec::default())?;
    Ok((pd, k, results))
}

fn print_tables(results: &[RetrievalResult]) {
    for r in results {
        println!("{} (top {}{})", r.part, r.hits.len(), if r.truncated { ", truncated" } else { "" });
        println!("{:>4}  {:<16} {:>8} {:>7}  text", "rank", "id", "score", "frames");
        for (i, h) in r.hits.iter().enumerate() {
            println!("{:>4}  {:<16} {:>8.4} {:>7}  {}", i + 1, h.id, h.score, h.length, h.source_text);
        }
    }
}

pub fn retrieve(a: &args::Retrieve, cfg: &EngineConfig) -> Result<(), Failure> {
    let (pd, k, results) = run_query(&a.query, cfg)?;
    let report = RetrievalReport { source: pd.source.clone(), descriptions: pd, k, results: results.to_vec() };
    if let Some(p) = &a.out {
        write_json(p, &report)?;
    }
    if a.json {
        print_json(&report);
    } else {
        print_tables(&report.results);
    }
    Ok(())
}

pub fn compose(a: &args::Compose, cfg: &EngineConfig) -> Result<(), Failure> {
    let (pd, k, results) = run_query(&a.query, cfg)?;
    let loader = FileLoader::new(&cfg.motion_root);
    let composed = morag_core::compose::compose_topk(&results, k, &cfg.partition, &loader, &cfg.compose)?;
    fs::create_dir_all(&a.out_dir).map_err(|e| Failure::new(IO, e).context(a.out_dir.display()))?;
    write_json(
        &a.out_dir.join("retrieval.json"),
        &RetrievalReport { source: pd.source.clone(), descriptions: pd, k, results: results.to_vec() },
    )?;
    println!("{:>4}  {:<16} {:<16} {:<16} {:>7}  file", "rank", "torso", "hands", "legs", "frames");
    for c in &composed {
        let (mo, _) = export_composed(&a.out_dir, c).map_err(|e| Failure::from(e).context(a.out_dir.display()))?;
        let p = &c.provenance;
        println!(
            "{:>4}  {:<16} {:<16} {:<16} {:>7}  {}",
            p.rank,
            p.torso_id,
            p.hands_id,
            p.legs_id,
            p.f_min,
            mo.display()
        );
    }
    if let Some(path) = &a.features {
        let motions: Vec<_> = composed.iter().map(|c| c.motion.clone()).collect();
        let feats = pooled_feature_set(&motions, cfg.contact_threshold, Exec::default())?;
        fs::write(path, feats.to_f32_bytes()).map_err(|e| Failure::new(IO, e).context(path.display()))?;
    }
    Ok(())
}

fn read_labels(path: &Path) -> Result<Vec<String>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(IO, e).context(path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

pub fn eval(a: &args::Eval, cfg: &EngineConfig) -> Result<(), Failure> {
    let dim = a.dim.unwrap_or(cfg.feature_dim);
    let text = FeatureSet::read_f32(&a.text, dim)?;
    let mut generated = FeatureSet::read_f32(&a.generated, dim)?;
    let real = FeatureSet::read_f32(&a.real, dim)?;
    if let Some(p) = &a.labels {
        generated = generated.with_labels(read_labels(p)?)?;
    }
    let groups = generated.groups();
    for i in 0..a.repeat {
        let opts = EvalOptions { seed: cfg.metrics.seed.wrapping_add(i), ..cfg.metrics };
        let report = evaluate(&text, &generated, &real, groups.as_deref(), &opts, Exec::default())?;
        println!("{}", serde_json::to_string(&report).expect("serializable"));
    }
    Ok(())
}

pub fn train_toy(a: &args::TrainToy, cfg: &EngineConfig) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.pairs).map_err(|e| Failure::new(IO, e).context(a.pairs.display()))?;
    let mut pairs: ToyPairs =
        serde_json::from_str(&text).map_err(|e| Failure::new(DATA, e).context(a.pairs.display()))?;
    if let Some(p) = &a.text_sims {
        pairs.text_sims = Some(read_text_sims(p, Some(pairs.len())).map_err(|e| match e {
            ContrastiveError::Io { .. } => Failure::from(e),
            _ => Failure::from(e).context(p.display()),
        })?);
    }
    info!("training on {} pairs for {} epochs", pairs.len(), cfg.train.epochs);
    let filtered = pairs.mask(cfg.loss.filter_threshold)?.filtered_count();
    let r = train_toy_projection(&pairs, &cfg.loss, &cfg.train)?;
    if let Some(p) = &a.trace {
        write_json(p, &r.loss_trace)?;
    }
    print_json(&json!({
        "pairs": pairs.len(),
        "filtered_negatives": filtered,
        "epochs": cfg.train.epochs,
        "learning_rate": cfg.train.learning_rate,
        "output_dim": cfg.train.output_dim,
        "seed": cfg.train.seed,
        "initial_loss": r.initial_loss,
        "final_loss": r.final_loss,
        "final_nce": r.final_nce,
        "final_embedding": r.final_embedding,
    }));
    Ok(())
}
