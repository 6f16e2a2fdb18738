use std::time::Duration;

use serde_json::{json, Value};

use super::{estimate_tokens, Completion, CompletionRequest, GatewayError, Transport, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApiFormat {
    /// `POST {endpoint}/chat/completions`
    OpenAi,
    /// `POST {endpoint}/v1/messages`
    Anthropic,
}

pub struct HttpTransport {
    format: ApiFormat,
    url: String,
    model: String,
    key: String,
    tag: String,
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(
        format: ApiFormat,
        endpoint: &str,
        model: &str,
        key: String,
        timeout: Duration,
        tag: String,
    ) -> Result<Self, GatewayError> {
        let base = endpoint.trim_end_matches('/');
        let url = match format {
            ApiFormat::OpenAi => format!("{base}/chat/completions"),
            ApiFormat::Anthropic => format!("{base}/v1/messages"),
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            format,
            url,
            model: model.to_string(),
            key,
            tag,
            client,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn body(&self, request: &CompletionRequest) -> Value {
        match self.format {
            ApiFormat::OpenAi => json!({
                "model": self.model,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "messages": [
                    {"role": "system", "content": request.system_text},
                    {"role": "user", "content": request.user_text},
                ],
            }),
            ApiFormat::Anthropic => json!({
                "model": self.model,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
                "system": request.system_text,
                "messages": [
                    {"role": "user", "content": request.user_text},
                ],
            }),
        }
    }
}

/// Pulls the completion text and token usage out of a provider response.
pub(super) fn parse_response(
    format: ApiFormat,
    body: &Value,
    request: &CompletionRequest,
) -> Result<Completion, TransportError> {
    let (text, input, output) = match format {
        ApiFormat::OpenAi => (
            body.pointer("/choices/0/message/content").and_then(Value::as_str),
            body.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
            body.pointer("/usage/completion_tokens").and_then(Value::as_u64),
        ),
        ApiFormat::Anthropic => (
            body.pointer("/content/0/text").and_then(Value::as_str),
            body.pointer("/usage/input_tokens").and_then(Value::as_u64),
            body.pointer("/usage/output_tokens").and_then(Value::as_u64),
        ),
    };
    let text = text
        .ok_or_else(|| TransportError::Fatal("response carries no completion text".into()))?
        .to_string();
    let input = input.unwrap_or_else(|| {
        estimate_tokens(&request.system_text) + estimate_tokens(&request.user_text)
    });
    let output = output.unwrap_or_else(|| estimate_tokens(&text));
    Ok(Completion {
        text,
        input_tokens: input,
        output_tokens: output,
    })
}

impl Transport for HttpTransport {
    fn send(&self, request: &CompletionRequest) -> Result<Completion, TransportError> {
        let body = serde_json::to_string(&self.body(request)).expect("request body serializes");
        let mut builder = self
            .client
            .post(&self.url)
            .header("content-type", "application/json")
            .body(body);
        builder = match self.format {
            ApiFormat::OpenAi => builder.header("authorization", format!("Bearer {}", self.key)),
            ApiFormat::Anthropic => builder
                .header("x-api-key", &self.key)
                .header("anthropic-version", "2023-06-01"),
        };
        let response = builder
            .send()
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| TransportError::Retryable(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(TransportError::Retryable(format!("HTTP {status}: {text}")));
        }
        if !status.is_success() {
            return Err(TransportError::Fatal(format!("HTTP {status}: {text}")));
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| TransportError::Fatal(format!("malformed response body: {e}")))?;
        parse_response(self.format, &value, request)
    }

    fn tag(&self) -> &str {
        &self.tag
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::AgentId;
    use crate::gateway::{Purpose, RequestContext, RequestSettings};

    fn request() -> CompletionRequest {
        CompletionRequest::new(
            "sys".into(),
            "usr".into(),
            RequestContext {
                generation: 1,
                run: None,
                round: None,
                agent: AgentId::new(1, 1),
                purpose: Purpose::Strategy,
            },
            &RequestSettings::default(),
        )
    }

    #[test]
    fn wire_formats() {
        let t = HttpTransport::new(
            ApiFormat::OpenAi,
            "http://localhost:1/v1/",
            "m",
            "k".into(),
            Duration::from_secs(1),
            "openai:m".into(),
        )
        .unwrap();
        assert_eq!(t.url(), "http://localhost:1/v1/chat/completions");
        let body = t.body(&request());
        assert_eq!(body["messages"][0]["role"], "system");
        assert_eq!(body["temperature"], 0.8);

        let a = HttpTransport::new(
            ApiFormat::Anthropic,
            "http://localhost:1",
            "m",
            "k".into(),
            Duration::from_secs(1),
            "anthropic:m".into(),
        )
        .unwrap();
        assert_eq!(a.url(), "http://localhost:1/v1/messages");
        assert_eq!(a.body(&request())["system"], "sys");
    }

    #[test]
    fn response_parsing() {
        let req = request();
        let openai = json!({
            "choices": [{"message": {"content": "I give 3 units"}}],
            "usage": {"prompt_tokens": 12, "completion_tokens": 4}
        });
        let c = parse_response(ApiFormat::OpenAi, &openai, &req).unwrap();
        assert_eq!((c.text.as_str(), c.input_tokens, c.output_tokens), ("I give 3 units", 12, 4));
        let anthropic = json!({"content": [{"type": "text", "text": "ok"}]});
        let c = parse_response(ApiFormat::Anthropic, &anthropic, &req).unwrap();
        assert_eq!(c.text, "ok");
        assert_eq!(c.output_tokens, 1);
        assert!(parse_response(ApiFormat::OpenAi, &json!({}), &req).is_err());
    }

    #[test]
    fn unreachable_endpoint_is_retryable() {
        let t = HttpTransport::new(
            ApiFormat::OpenAi,
            "http://127.0.0.1:9",
            "m",
            "k".into(),
            Duration::from_millis(500),
            "openai:m".into(),
        )
        .unwrap();
        assert!(matches!(
            t.send(&request()),
            Err(TransportError::Retryable(_))
        ));
    }
}
