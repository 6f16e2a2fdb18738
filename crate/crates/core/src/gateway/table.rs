use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde_json::Value;

use super::{estimate_tokens, Completion, CompletionRequest, GatewayError, Transport, TransportError};

/// Answers requests from a fixed `request_id -> response` table. Unknown ids
/// are errors, so a changed prompt cannot silently fall back to something.
#[derive(Debug, Clone, Default)]
pub struct TableTransport {
    table: HashMap<String, String>,
    tag: String,
}

impl TableTransport {
    pub fn new(table: HashMap<String, String>) -> Self {
        Self {
            table,
            tag: "table".into(),
        }
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl Transport for TableTransport {
    fn send(&self, request: &CompletionRequest) -> Result<Completion, TransportError> {
        let text = self
            .table
            .get(&request.request_id)
            .ok_or_else(|| TransportError::UnknownRequest(request.request_id.clone()))?;
        Ok(Completion {
            text: text.clone(),
            input_tokens: estimate_tokens(&request.system_text) + estimate_tokens(&request.user_text),
            output_tokens: estimate_tokens(text),
        })
    }

    fn tag(&self) -> &str {
        &self.tag
    }
}

/// Loads a transcript: JSONL where lines carrying both `request_id` and
/// `response` string fields are exchanges. Other lines (headers, unrelated
/// events) are skipped, so a run's event stream is itself a transcript.
pub fn mock_from_transcript(path: &Path) -> Result<TableTransport, GatewayError> {
    let file = File::open(path)
        .map_err(|e| GatewayError::Config(format!("cannot open transcript {}: {e}", path.display())))?;
    let mut table = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| GatewayError::Config(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| {
            GatewayError::Config(format!(
                "malformed transcript {} line {}: {e}",
                path.display(),
                idx + 1
            ))
        })?;
        if let (Some(id), Some(resp)) = (
            value.get("request_id").and_then(Value::as_str),
            value.get("response").and_then(Value::as_str),
        ) {
            table.insert(id.to_string(), resp.to_string());
        }
    }
    Ok(TableTransport::new(table).with_tag("transcript"))
}
