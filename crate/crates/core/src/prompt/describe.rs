use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde_json::{Map, Value};

use super::{
    build_prompt, cache_key, parse_llm_output, LlmClient, LlmRequest, PartDescriptions, PromptCache, PromptError,
    PromptTemplate, DEFAULT_MAX_TOKENS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LlmSettings {
    pub model: String,
    pub max_tokens: u32,
    /// Extra requests allowed after an unparseable completion.
    pub retries: usize,
    pub params: Map<String, Value>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self { model: "default".into(), max_tokens: DEFAULT_MAX_TOKENS, retries: 2, params: Map::new() }
    }
}

/// Cached lookup, else up to `1 + retries` completions until one parses.
/// Only parseable completions are cached. Transport failures abort at once.
pub fn describe_parts(
    text: &str,
    tmpl: &PromptTemplate,
    client: &dyn LlmClient,
    cache: &PromptCache,
    settings: &LlmSettings,
) -> Result<PartDescriptions, PromptError> {
    let prompt = build_prompt(text, tmpl)?;
    let key = cache_key(text, tmpl);
    if let Some(rec) = cache.get(&key) {
        if let Ok(mut pd) = parse_llm_output(&rec.completion) {
            pd.source = text.to_owned();
            return Ok(pd);
        }
    }
    let req = LlmRequest {
        prompt: prompt.clone(),
        max_tokens: settings.max_tokens,
        model: settings.model.clone(),
        params: settings.params.clone(),
    };
    let attempts = settings.retries + 1;
    let mut last = String::new();
    for _ in 0..attempts {
        let resp = client.complete(&req)?;
        match parse_llm_output(&resp.completion) {
            Ok(mut pd) => {
                cache.insert(&key, &prompt, &resp.completion)?;
                pd.source = text.to_owned();
                return Ok(pd);
            }
            Err(_) => last = resp.completion,
        }
    }
    Err(PromptError::ParseExhausted { attempts, last })
}

/// [`describe_parts`] over many descriptions with at most `max_in_flight`
/// concurrent requests. Results keep input order.
pub fn describe_batch(
    texts: &[String],
    tmpl: &PromptTemplate,
    client: &dyn LlmClient,
    cache: &PromptCache,
    settings: &LlmSettings,
    max_in_flight: usize,
) -> Vec<Result<PartDescriptions, PromptError>> {
    let workers = max_in_flight.max(1).min(texts.len());
    let next = AtomicUsize::new(0);
    let out: Vec<Mutex<Option<Result<PartDescriptions, PromptError>>>> =
        texts.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= texts.len() {
                    break;
                }
                *out[i].lock().unwrap() = Some(describe_parts(&texts[i], tmpl, client, cache, settings));
            });
        }
    });
    out.into_iter().map(|m| m.into_inner().unwrap().expect("every slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompt::LlmResponse;
    use std::sync::atomic::AtomicUsize;

    struct Scripted {
        replies: Vec<Result<String, String>>,
        calls: AtomicUsize,
    }

    impl Scripted {
        fn new(replies: Vec<Result<&str, &str>>) -> Self {
            Self {
                replies: replies.into_iter().map(|r| r.map(str::to_owned).map_err(str::to_owned)).collect(),
                calls: AtomicUsize::new(0),
            }
        }
        fn calls(&self) -> usize {
            self.calls.load(Ordering::SeqCst)
        }
    }

    impl LlmClient for Scripted {
        fn complete(&self, _req: &LlmRequest) -> Result<LlmResponse, PromptError> {
            let i = self.calls.fetch_add(1, Ordering::SeqCst);
            match &self.replies[i.min(self.replies.len() - 1)] {
                Ok(c) => Ok(LlmResponse { completion: c.clone(), usage: None }),
                Err(e) => Err(PromptError::Endpoint(e.clone())),
            }
        }
    }

    const GOOD: &str = "1) Torso: upright 2) Hands: raised 3) Legs: still";

    #[test]
    fn retry_then_success() {
        let c = Scripted::new(vec![Ok("garbage"), Ok(GOOD)]);
        let cache = PromptCache::in_memory();
        let s = LlmSettings { retries: 2, ..Default::default() };
        let pd = describe_parts("wave", &PromptTemplate::default(), &c, &cache, &s).unwrap();
        assert_eq!(c.calls(), 2);
        assert_eq!(pd.source, "wave");
        assert_eq!(pd.hands, "raised");
    }

    #[test]
    fn cache_hit_makes_no_call() {
        let c = Scripted::new(vec![Ok(GOOD)]);
        let cache = PromptCache::in_memory();
        let t = PromptTemplate::default();
        let s = LlmSettings::default();
        let a = describe_parts("A person waves", &t, &c, &cache, &s).unwrap();
        let b = describe_parts("a person  waves", &t, &c, &cache, &s).unwrap();
        assert_eq!(c.calls(), 1);
        assert_eq!((a.torso, a.hands, a.legs), (b.torso, b.hands, b.legs));
    }

    #[test]
    fn exhausted() {
        let c = Scripted::new(vec![Ok("nope")]);
        let cache = PromptCache::in_memory();
        let s = LlmSettings { retries: 1, ..Default::default() };
        match describe_parts("x", &PromptTemplate::default(), &c, &cache, &s) {
            Err(PromptError::ParseExhausted { attempts: 2, last }) => assert_eq!(last, "nope"),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.calls(), 2);
        assert!(cache.is_empty());
    }

    #[test]
    fn transport_error_not_retried() {
        let c = Scripted::new(vec![Err("down")]);
        let cache = PromptCache::in_memory();
        let r = describe_parts("x", &PromptTemplate::default(), &c, &cache, &LlmSettings::default());
        assert!(matches!(r, Err(PromptError::Endpoint(_))));
        assert_eq!(c.calls(), 1);
    }

    #[test]
    fn batch_order_and_cap() {
        struct Counting {
            live: AtomicUsize,
            peak: AtomicUsize,
        }
        impl LlmClient for Counting {
            fn complete(&self, req: &LlmRequest) -> Result<LlmResponse, PromptError> {
                let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(std::time::Duration::from_millis(5));
                self.live.fetch_sub(1, Ordering::SeqCst);
                let tag = req.prompt.rsplit('[').next().unwrap().split(']').next().unwrap().to_owned();
                Ok(LlmResponse { completion: format!("Torso: {tag} Hands: h Legs: l"), usage: None })
            }
        }
        let c = Counting { live: AtomicUsize::new(0), peak: AtomicUsize::new(0) };
        let texts: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
        let out = describe_batch(
            &texts,
            &PromptTemplate::default(),
            &c,
            &PromptCache::in_memory(),
            &LlmSettings::default(),
            3,
        );
        for (i, r) in out.iter().enumerate() {
            assert_eq!(r.as_ref().unwrap().torso, format!("t{i}"));
        }
        assert!(c.peak.load(Ordering::SeqCst) <= 3);
    }
}
