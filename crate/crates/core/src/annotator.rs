//! Client for a Spotlight-compatible annotation service.
//!
//! Requests are form-encoded `text` + `confidence` POSTs with
//! `Accept: application/json`; the response lists linked resources under
//! `Resources[].@URI`. Only the set of linked resources is kept.

use std::collections::BTreeSet;
use std::time::Duration;

use log::debug;
use serde::Deserialize;

use crate::graph::NodeId;
use crate::profile::{AnnotatedDocument, RawDocument};
use crate::{Error, Result};

pub const URL_ENV: &str = "TOPIGEN_ANNOTATOR_URL";
pub const DEFAULT_CONFIDENCE: f64 = 0.5;

#[derive(Deserialize)]
struct Response {
    #[serde(rename = "Resources", default)]
    resources: Option<Vec<Resource>>,
}

#[derive(Deserialize)]
struct Resource {
    #[serde(rename = "@URI")]
    uri: String,
}

/// Extracts the distinct resource ids from a service response body.
pub fn parse_response(body: &str) -> Result<BTreeSet<NodeId>> {
    let parsed: Response =
        serde_json::from_str(body).map_err(|e| Error::Protocol(e.to_string()))?;
    parsed
        .resources
        .unwrap_or_default()
        .into_iter()
        .map(|r| NodeId::new(r.uri).map_err(|e| Error::Protocol(e.to_string())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct AnnotatorClient {
    http: reqwest::blocking::Client,
    service_url: String,
    confidence: f64,
    attempts: u32,
    backoff: Duration,
}

impl AnnotatorClient {
    pub fn new(service_url: impl Into<String>, confidence: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::Config(format!(
                "confidence must be within [0, 1], got {confidence}"
            )));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(AnnotatorClient {
            http,
            service_url: service_url.into(),
            confidence,
            attempts: 3,
            backoff: Duration::from_millis(200),
        })
    }

    /// Base delay between attempts; doubles after each failure.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_attempts(mut self, attempts: u32) -> Self {
        self.attempts = attempts.max(1);
        self
    }

    fn fetch(&self, text: &str) -> std::result::Result<String, String> {
        let confidence = self.confidence.to_string();
        let response = self
            .http
            .post(&self.service_url)
            .header(reqwest::header::ACCEPT, "application/json")
            .form(&[("text", text), ("confidence", confidence.as_str())])
            .send()
            .map_err(|e| e.to_string())?;
        let status = response.status();
        if !status.is_success() {
            return Err(format!("HTTP {status}"));
        }
        response.text().map_err(|e| e.to_string())
    }

    pub fn annotate(&self, doc: &RawDocument) -> Result<AnnotatedDocument> {
        let topics = if doc.text.trim().is_empty() {
            BTreeSet::new()
        } else {
            let mut delay = self.backoff;
            let mut last_error = String::new();
            let mut body = None;
            for attempt in 1..=self.attempts {
                match self.fetch(&doc.text) {
                    Ok(b) => {
                        body = Some(b);
                        break;
                    }
                    Err(e) => {
                        debug!("annotate {} attempt {attempt} failed: {e}", doc.doc_id);
                        last_error = e;
                        if attempt < self.attempts {
                            std::thread::sleep(delay);
                            delay *= 2;
                        }
                    }
                }
            }
            let body = body.ok_or(Error::Transport {
                attempts: self.attempts,
                message: last_error,
            })?;
            parse_response(&body)?
        };
        Ok(AnnotatedDocument {
            doc_id: doc.doc_id.clone(),
            user_id: doc.user_id.clone(),
            topics,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_resources_collapse() {
        let body = r#"{"@text":"x","Resources":[{"@URI":"dbr:Pearl","@offset":"0"},{"@URI":"dbr:Pearl","@offset":"9"}]}"#;
        let topics = parse_response(body).unwrap();
        assert_eq!(topics.len(), 1);
    }

    #[test]
    fn missing_resources_field_is_empty() {
        assert!(parse_response(r#"{"@text":"nothing here"}"#)
            .unwrap()
            .is_empty());
        assert!(parse_response(r#"{"Resources":null}"#).unwrap().is_empty());
    }

    #[test]
    fn garbage_is_protocol_error() {
        assert!(matches!(parse_response("<html>"), Err(Error::Protocol(_))));
        assert!(matches!(
            parse_response(r#"{"Resources":[{"@URI":""}]}"#),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn confidence_range() {
        assert!(AnnotatorClient::new("http://localhost:1", 1.5).is_err());
        assert!(AnnotatorClient::new("http://localhost:1", 0.5).is_ok());
    }
}
