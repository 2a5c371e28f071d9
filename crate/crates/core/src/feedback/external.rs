//! Client for an optional HTTP text generator.
//!
//! Protocol: `POST {endpoint}/feedback` with
//! `{"image_b64": ..., "violations": [...], "rubric_prompt": ...}`; the reply
//! must be `{"text": ...}`. Any failure (unset endpoint, timeout, HTTP error,
//! malformed body, empty text) falls back to the template text.

use std::time::Duration;

use base64::Engine;
use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::constraints::Violation;

pub const ENDPOINT_ENV: &str = "DIAGRAM_FEEDBACK_ENDPOINT";

pub const DEFAULT_RUBRIC_PROMPT: &str = "You are a tutor commenting on a student's diagram. \
The violations listed were verified by a rule checker; describe each one and how to fix it. \
Do not mention any problem that is not in the list. \
If the list is empty, reply exactly: Diagram looks correct per scenario key.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalConfig {
    /// Base URL; `/feedback` is appended.
    pub endpoint: Option<String>,
    pub timeout_secs: f64,
    pub rubric_prompt: String,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            endpoint: None,
            timeout_secs: 10.0,
            rubric_prompt: DEFAULT_RUBRIC_PROMPT.to_string(),
        }
    }
}

#[derive(Serialize)]
struct Request<'a> {
    image_b64: String,
    violations: &'a [Violation],
    rubric_prompt: &'a str,
}

#[derive(Deserialize)]
struct Response {
    text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub text: String,
    pub fallback_used: bool,
}

/// Shareable across worker threads.
#[derive(Debug, Clone)]
pub struct ExternalClient {
    cfg: ExternalConfig,
    agent: ureq::Agent,
}

fn png_b64(image: &GrayImage) -> Result<String, String> {
    let mut buf = std::io::Cursor::new(Vec::new());
    image
        .write_to(&mut buf, image::ImageFormat::Png)
        .map_err(|e| e.to_string())?;
    Ok(base64::engine::general_purpose::STANDARD.encode(buf.get_ref()))
}

impl ExternalClient {
    pub fn new(cfg: ExternalConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_secs.max(0.001))))
            .build()
            .into();
        ExternalClient { cfg, agent }
    }

    pub fn config(&self) -> &ExternalConfig {
        &self.cfg
    }

    fn request(&self, endpoint: &str, violations: &[Violation], image: Option<&GrayImage>) -> Result<String, String> {
        let url = format!("{}/feedback", endpoint.trim_end_matches('/'));
        let body = Request {
            image_b64: image.map(png_b64).transpose()?.unwrap_or_default(),
            violations,
            rubric_prompt: &self.cfg.rubric_prompt,
        };
        let reply: Response = self
            .agent
            .post(&url)
            .send_json(&body)
            .map_err(|e| e.to_string())?
            .body_mut()
            .read_json()
            .map_err(|e| format!("malformed reply: {e}"))?;
        if reply.text.trim().is_empty() {
            return Err("empty text in reply".into());
        }
        Ok(reply.text)
    }

    /// Text from the endpoint, or `fallback()` with a logged warning.
    pub fn generate(
        &self,
        violations: &[Violation],
        image: Option<&GrayImage>,
        fallback: impl FnOnce() -> String,
    ) -> Generated {
        let Some(endpoint) = self.cfg.endpoint.as_deref().filter(|e| !e.is_empty()) else {
            log::warn!("no external generator endpoint configured; using template feedback");
            return Generated {
                text: fallback(),
                fallback_used: true,
            };
        };
        match self.request(endpoint, violations, image) {
            Ok(text) => Generated {
                text,
                fallback_used: false,
            },
            Err(e) => {
                log::warn!("external generator at {endpoint} failed ({e}); using template feedback");
                Generated {
                    text: fallback(),
                    fallback_used: true,
                }
            }
        }
    }
}

#[cfg(test)]
pub(crate) mod stub {
    //! One-shot HTTP servers for tests.

    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread::JoinHandle;

    /// Serves `requests` connections, answering each with `reply(body)`.
    /// Returns the base URL and a handle yielding the received bodies.
    pub fn serve(
        requests: usize,
        reply: impl Fn(&str) -> (u16, String) + Send + 'static,
    ) -> (String, JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handle = std::thread::spawn(move || {
            let mut bodies = Vec::new();
            for stream in listener.incoming().take(requests) {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    let l = line.trim_end();
                    if l.is_empty() {
                        break;
                    }
                    if let Some(v) = l.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let body = String::from_utf8(body).unwrap();
                let (status, text) = reply(&body);
                let resp = format!(
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{text}",
                    text.len()
                );
                stream.write_all(resp.as_bytes()).unwrap();
                bodies.push(body);
            }
            bodies
        });
        (url, handle)
    }
}
