//! Candidate proposers: the trait the search loop talks to, the offline
//! mutation proposer, and the response-parsing contract shared with the
//! HTTP-backed proposer.

use serde::Serialize;
use thiserror::Error;

use super::discover::HistoryEntry;
use crate::algospace::{mutate_config, AlgorithmConfig, StepSize};
use crate::rng::RandomStream;
use rand::Rng;

/// JSON shape of an algorithm configuration, embedded in proposer prompts so
/// a text-generating backend knows the admissible moves.
pub const CONFIG_SCHEMA: &str = r#"{
  "type": "object",
  "properties": {
    "family": {"enum": ["rs", "de", "lshade"]},
    "population_size": {"oneOf": [{"type": "integer", "minimum": 4}, {"const": "auto"}]},
    "mutation": {"enum": ["rand1", "best1", "current-to-pbest"]},
    "pbest_fraction": {"type": "number", "exclusiveMinimum": 0.0, "maximum": 0.5},
    "crossover": {"enum": ["binomial", "exponential"]},
    "f": {"oneOf": [{"type": "number", "exclusiveMinimum": 0.0, "maximum": 2.0}, {"const": "adaptive"}]},
    "cr": {"oneOf": [{"type": "number", "minimum": 0.0, "maximum": 1.0}, {"const": "adaptive"}]},
    "archive": {"type": "boolean"},
    "lpsr": {"type": "boolean"},
    "restart": {"enum": ["none", "on-stagnation"]},
    "restart_window": {"type": "integer", "minimum": 1},
    "restart_tol": {"type": "number", "exclusiveMinimum": 0.0},
    "bound_handling": {"enum": ["clip", "reflect"]}
  },
  "required": ["family"],
  "additionalProperties": false
}"#;

/// What a proposer sees: the task, the incumbent, a short history window,
/// and the schema its answer must satisfy.
#[derive(Debug, Clone, Serialize)]
pub struct ProposerRequest<'a> {
    pub task_description: String,
    pub incumbent_config: &'a AlgorithmConfig,
    pub incumbent_score: f64,
    /// Most recent entries, oldest first, capped at five.
    pub recent_history: &'a [HistoryEntry],
    pub schema: &'static str,
}

/// A proposed configuration plus a one-line justification.
#[derive(Debug, Clone)]
pub struct ProposerResponse {
    pub config: AlgorithmConfig,
    pub rationale: String,
}

#[derive(Debug, Error)]
pub enum ProposeError {
    /// The backend could not be reached or refused service.
    #[error("proposer unavailable: {0}")]
    Unavailable(String),
    /// The backend answered, but no valid configuration could be read.
    #[error("malformed proposal: {0}")]
    Malformed(String),
}

/// A source of candidate configurations.
pub trait Proposer {
    /// Short name recorded in history metadata.
    fn name(&self) -> &str;

    fn propose(
        &mut self,
        request: &ProposerRequest<'_>,
        rng: &mut RandomStream,
    ) -> Result<ProposerResponse, ProposeError>;
}

/// Chance that the offline proposer takes a large step (several fields
/// redrawn) instead of a small one.
pub const OFFLINE_LARGE_STEP_PROB: f64 = 0.25;

/// Seeded local mutation of the incumbent, used standalone for fully offline
/// runs and as the fallback when another proposer fails.
#[derive(Debug, Clone, Default)]
pub struct OfflineMutator;

impl Proposer for OfflineMutator {
    fn name(&self) -> &str {
        "offline"
    }

    fn propose(
        &mut self,
        request: &ProposerRequest<'_>,
        rng: &mut RandomStream,
    ) -> Result<ProposerResponse, ProposeError> {
        let step = if rng.gen::<f64>() < OFFLINE_LARGE_STEP_PROB {
            StepSize::Large
        } else {
            StepSize::Small
        };
        let config = mutate_config(request.incumbent_config, step, rng);
        Ok(ProposerResponse {
            config,
            rationale: format!("seeded {:?} mutation of the incumbent", step).to_lowercase(),
        })
    }
}

/// Extracts the first balanced JSON object from free-form text. Braces
/// inside string literals do not count; escapes are honored.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let start = bytes.iter().position(|&b| b == b'{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, &b) in bytes[start..].iter().enumerate() {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=start + offset]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Reads a configuration out of a proposer's raw text reply. Accepts either
/// a bare configuration object or `{"config": ..., "rationale": ...}`.
pub fn parse_proposal_text(text: &str) -> Result<ProposerResponse, ProposeError> {
    let object = extract_json_object(text)
        .ok_or_else(|| ProposeError::Malformed("no JSON object in reply".into()))?;
    let value: serde_json::Value = serde_json::from_str(object)
        .map_err(|e| ProposeError::Malformed(format!("unparseable JSON: {e}")))?;
    let (config_value, rationale) = match value.get("config") {
        Some(inner) => {
            let rationale = value
                .get("rationale")
                .and_then(serde_json::Value::as_str)
                .unwrap_or_default()
                .to_owned();
            (inner.clone(), rationale)
        }
        None => (value, String::new()),
    };
    let config: AlgorithmConfig = serde_json::from_value(config_value)
        .map_err(|e| ProposeError::Malformed(format!("config rejected: {e}")))?;
    config
        .validate()
        .map_err(|e| ProposeError::Malformed(format!("config invalid: {e}")))?;
    Ok(ProposerResponse { config, rationale })
}
