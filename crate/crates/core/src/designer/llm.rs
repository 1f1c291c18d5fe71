//! Chat-completion proposer speaking the common `/v1/chat/completions`
//! wire shape. Everything about the reply except the assistant text is
//! treated as transport framing; the text goes through the same parser as
//! any other proposal source.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::proposer::{parse_proposal_text, ProposeError, Proposer, ProposerRequest, ProposerResponse};
use crate::rng::RandomStream;

/// Environment variable read for the bearer token by default.
pub const DEFAULT_KEY_ENV: &str = "PROXYFORGE_LLM_KEY";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmSettings {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    /// Name of the environment variable holding the API key.
    pub key_env: String,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            timeout_secs: 30,
            key_env: DEFAULT_KEY_ENV.into(),
        }
    }
}

pub struct LlmProposer {
    settings: LlmSettings,
    client: reqwest::blocking::Client,
}

impl LlmProposer {
    pub fn new(settings: LlmSettings) -> Result<Self, ProposeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(settings.timeout_secs.max(1)))
            .build()
            .map_err(|e| ProposeError::Unavailable(format!("http client: {e}")))?;
        Ok(LlmProposer { settings, client })
    }

    fn messages(request: &ProposerRequest<'_>) -> serde_json::Value {
        let system = format!(
            "You tune optimizer configurations. {}\nConfiguration schema:\n{}",
            request.task_description, request.schema
        );
        let user = json!({
            "incumbent_config": request.incumbent_config,
            "incumbent_score": request.incumbent_score,
            "recent_iterations": request.recent_history,
        });
        json!([
            {"role": "system", "content": system},
            {"role": "user", "content": user.to_string()},
        ])
    }

    /// Pulls the assistant text out of a chat-completion reply; falls back
    /// to the whole body when the framing is unfamiliar.
    fn reply_text(body: &str) -> String {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(body) {
            if let Some(content) = v["choices"][0]["message"]["content"].as_str() {
                return content.to_owned();
            }
        }
        body.to_owned()
    }
}

impl Proposer for LlmProposer {
    fn name(&self) -> &str {
        "llm"
    }

    fn propose(
        &mut self,
        request: &ProposerRequest<'_>,
        _rng: &mut RandomStream,
    ) -> Result<ProposerResponse, ProposeError> {
        let key = std::env::var(&self.settings.key_env).map_err(|_| {
            ProposeError::Unavailable(format!("no API key in ${}", self.settings.key_env))
        })?;
        let payload = json!({
            "model": self.settings.model,
            "messages": Self::messages(request),
        });
        let reply = self
            .client
            .post(&self.settings.endpoint)
            .bearer_auth(key)
            .json(&payload)
            .send()
            .map_err(|e| ProposeError::Unavailable(format!("request failed: {e}")))?;
        let status = reply.status();
        let body = reply
            .text()
            .map_err(|e| ProposeError::Unavailable(format!("unreadable reply: {e}")))?;
        if !status.is_success() {
            return Err(ProposeError::Unavailable(format!("http {status}: {body}")));
        }
        parse_proposal_text(&Self::reply_text(&body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algospace::AlgorithmConfig;
    use crate::rng::labeled_stream;

    fn dummy_request(config: &AlgorithmConfig) -> ProposerRequest<'_> {
        ProposerRequest {
            task_description: "tune".into(),
            incumbent_config: config,
            incumbent_score: 0.5,
            recent_history: &[],
            schema: super::super::proposer::CONFIG_SCHEMA,
        }
    }

    #[test]
    fn missing_key_is_reported_as_unavailable() {
        let settings = LlmSettings {
            key_env: "PROXYFORGE_TEST_KEY_THAT_IS_NEVER_SET".into(),
            ..LlmSettings::default()
        };
        let mut proposer = LlmProposer::new(settings).unwrap();
        let config = AlgorithmConfig::default();
        let request = dummy_request(&config);
        let mut rng = labeled_stream(0, "llm-test", 0);
        match proposer.propose(&request, &mut rng) {
            Err(ProposeError::Unavailable(msg)) => assert!(msg.contains("API key")),
            other => panic!("expected Unavailable, got {other:?}"),
        }
    }

    #[test]
    fn reply_text_unwraps_chat_framing() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"{\"family\":\"rs\"}"}}]}"#;
        assert_eq!(LlmProposer::reply_text(body), r#"{"family":"rs"}"#);
        assert_eq!(LlmProposer::reply_text("plain text"), "plain text");
    }

    #[test]
    fn messages_embed_schema_and_incumbent() {
        let config = AlgorithmConfig::default();
        let request = dummy_request(&config);
        let messages = LlmProposer::messages(&request);
        let system = messages[0]["content"].as_str().unwrap();
        assert!(system.contains("\"family\""));
        let user = messages[1]["content"].as_str().unwrap();
        assert!(user.contains("incumbent_score"));
    }
}
