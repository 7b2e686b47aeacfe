use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PromptError;

/// Marker in [`PromptTemplate::query_pattern`] replaced by the description.
pub const PLACEHOLDER: &str = "{text}";

const DEFAULT_INSTRUCTIONS: &str = "The instructions for this task is to describe the listed body parts' position and movements in a sentence using simple language. ['Torso',' Hands', 'Legs']";

const DEFAULT_QUERY: &str = "Query: Describe the below body parts position and movements involved in the action [{text}] in a sentence using simple language. 1) Torso 2) Hands 3) Legs";

const DEFAULT_EXAMPLES: [(&str, &str); 3] = [
    (
        "A person walks forward and waves with the right hand",
        "1) Torso: The torso stays upright and faces forward as the body moves ahead.\n\
         2) Hands: The right hand is raised beside the head and sways from side to side while the left arm swings loosely.\n\
         3) Legs: The legs step forward one after the other with the feet flat on the ground.",
    ),
    (
        "A person squats down and stands back up",
        "1) Torso: The torso leans slightly forward as the hips drop and then straightens again.\n\
         2) Hands: The arms reach out in front of the chest for balance.\n\
         3) Legs: The knees bend deeply to lower the body close to the ground and then extend to stand tall.",
    ),
    (
        "A person turns around to the left",
        "1) Torso: The torso rotates to the left until it faces the opposite direction.\n\
         2) Hands: The hands hang relaxed at the sides.\n\
         3) Legs: The feet take small steps in place, pivoting the body to the left on the ground.",
    ),
];

/// Instructions, worked examples and a query pattern with one
/// [`PLACEHOLDER`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub task_instructions: String,
    pub few_shot_examples: Vec<(String, String)>,
    pub query_pattern: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            task_instructions: DEFAULT_INSTRUCTIONS.to_owned(),
            few_shot_examples: DEFAULT_EXAMPLES.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            query_pattern: DEFAULT_QUERY.to_owned(),
        }
    }
}

impl PromptTemplate {
    pub fn new(
        task_instructions: impl Into<String>,
        few_shot_examples: Vec<(String, String)>,
        query_pattern: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let t = Self {
            task_instructions: task_instructions.into(),
            few_shot_examples,
            query_pattern: query_pattern.into(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        if self.task_instructions.trim().is_empty() {
            return Err(PromptError::InvalidTemplate("task instructions are empty".into()));
        }
        let n = self.query_pattern.matches(PLACEHOLDER).count();
        if n != 1 {
            return Err(PromptError::InvalidTemplate(format!(
                "query pattern must contain exactly one {PLACEHOLDER} placeholder, found {n}"
            )));
        }
        Ok(())
    }

    fn query(&self, text: &str) -> String {
        self.query_pattern.replacen(PLACEHOLDER, text, 1)
    }

    /// Hex SHA-256 over every template field, length-prefixed.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |s: &str| {
            h.update((s.len() as u64).to_le_bytes());
            h.update(s.as_bytes());
        };
        put(&self.task_instructions);
        for (a, b) in &self.few_shot_examples {
            put(a);
            put(b);
        }
        put(&self.query_pattern);
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Instructions, then each example as its query followed by its answer, then
/// the query for `text`. Blocks are separated by blank lines.
pub fn build_prompt(text: &str, tmpl: &PromptTemplate) -> Result<String, PromptError> {
    if text.trim().is_empty() {
        return Err(PromptError::InvalidInput("description is empty".into()));
    }
    tmpl.validate()?;
    let mut blocks = vec![tmpl.task_instructions.clone()];
    for (input, output) in &tmpl.few_shot_examples {
        blocks.push(format!("{}\n{}", tmpl.query(input), output));
    }
    blocks.push(tmpl.query(text));
    Ok(blocks.join("\n\n"))
}

/// True when square brackets in `text` do not pair up. Such descriptions are
/// still substituted verbatim.
pub fn has_unbalanced_brackets(text: &str) -> bool {
    let mut depth = 0i64;
    for c in text.chars() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return true;
                }
            }
            _ => {}
        }
    }
    depth != 0
}
