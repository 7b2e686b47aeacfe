use std::sync::OnceLock;

use regex::Regex;

use super::{PartDescriptions, PromptError};

fn label_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)(?:^|[\s(])(?:\d+\s*[.)]\s*)?(torso|hands?|legs?)\s*:").expect("label regex compiles")
    })
}

/// Split a completion into torso / hands / legs segments by their labels.
/// Labels may carry a `1)` or `1.` prefix, are case-insensitive and may
/// appear in any order. The first occurrence of each label wins. The
/// returned `source` is empty.
pub fn parse_llm_output(completion: &str) -> Result<PartDescriptions, PromptError> {
    let marks: Vec<(usize, usize, usize)> = label_regex()
        .captures_iter(completion)
        .map(|c| {
            let whole = c.get(0).unwrap();
            let slot = match c[1].to_ascii_lowercase().as_str() {
                "torso" => 0,
                "hand" | "hands" => 1,
                _ => 2,
            };
            (slot, whole.start(), whole.end())
        })
        .collect();
    let mut parts: [Option<String>; 3] = [None, None, None];
    for (i, &(slot, _, end)) in marks.iter().enumerate() {
        let stop = marks.get(i + 1).map_or(completion.len(), |m| m.1);
        let seg = completion[end..stop].trim();
        if parts[slot].is_none() && !seg.is_empty() {
            parts[slot] = Some(seg.to_owned());
        }
    }
    match parts {
        [Some(torso), Some(hands), Some(legs)] => Ok(PartDescriptions { source: String::new(), torso, hands, legs }),
        _ => Err(PromptError::Parse { raw: completion.to_owned() }),
    }
}
