//! Client for a remote clip-captioning service.
//!
//! Protocol: `POST {endpoint}/caption` with
//! `{"clip_id", "video_uri", "action_label"}`; a `200` reply carries
//! `{"clip_id", "caption"}`. Transport failures and non-200 replies are
//! retried with exponential backoff. A reply that parses but breaks the
//! protocol is not retried.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::UncaptionedClip;
use crate::clip_sequence::CaptionedClip;

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionServiceConfig {
    /// Base URL, e.g. `http://127.0.0.1:8080`.
    pub endpoint: String,
    pub attempts: u32,
    /// Wait before the second attempt; doubled for each further attempt.
    pub initial_backoff: Duration,
    pub timeout: Duration,
}

impl CaptionServiceConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            attempts: 3,
            initial_backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(30),
        }
    }

    fn caption_url(&self) -> String {
        format!("{}/caption", self.endpoint.trim_end_matches('/'))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaptionServiceError {
    #[error("endpoint {0:?} is not an http(s) URL")]
    InvalidEndpoint(String),
    #[error("clip {clip_id}: service answered {status} on all {attempts} attempts")]
    Status {
        clip_id: String,
        status: u16,
        attempts: u32,
    },
    #[error("clip {clip_id}: {message} (after {attempts} attempts)")]
    Transport {
        clip_id: String,
        message: String,
        attempts: u32,
    },
    #[error("clip {clip_id}: protocol error: {message}")]
    Protocol { clip_id: String, message: String },
}

impl CaptionServiceError {
    pub fn clip_id(&self) -> Option<&str> {
        match self {
            CaptionServiceError::InvalidEndpoint(_) => None,
            CaptionServiceError::Status { clip_id, .. }
            | CaptionServiceError::Transport { clip_id, .. }
            | CaptionServiceError::Protocol { clip_id, .. } => Some(clip_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipFailure {
    pub clip_id: String,
    pub error: CaptionServiceError,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FetchReport {
    /// Successfully captioned clips, in input order.
    pub captioned: Vec<CaptionedClip>,
    pub failures: Vec<ClipFailure>,
}

#[derive(Serialize)]
struct CaptionRequest<'a> {
    clip_id: &'a str,
    video_uri: &'a str,
    action_label: &'a str,
}

#[derive(Deserialize)]
struct CaptionResponse {
    clip_id: Option<String>,
    caption: Option<String>,
}

/// Captions every clip, one request at a time. Per-clip failures are
/// collected in the report and do not stop the run.
pub fn fetch_clip_captions(
    config: &CaptionServiceConfig,
    clips: &[UncaptionedClip],
) -> Result<FetchReport, CaptionServiceError> {
    if !(config.endpoint.starts_with("http://") || config.endpoint.starts_with("https://")) {
        return Err(CaptionServiceError::InvalidEndpoint(config.endpoint.clone()));
    }
    let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
    let url = config.caption_url();
    let mut report = FetchReport::default();
    for clip in clips {
        match fetch_one(&agent, &url, config, clip) {
            Ok(caption) => report.captioned.push(CaptionedClip {
                id: clip.id.clone(),
                media_ref: clip.media_ref.clone(),
                action_label: clip.action_label.clone(),
                caption,
                duration_s: clip.duration_s,
                fps: clip.fps,
            }),
            Err(error) => {
                log::warn!("{error}");
                report.failures.push(ClipFailure {
                    clip_id: clip.id.clone(),
                    error,
                });
            }
        }
    }
    Ok(report)
}

fn fetch_one(
    agent: &ureq::Agent,
    url: &str,
    config: &CaptionServiceConfig,
    clip: &UncaptionedClip,
) -> Result<String, CaptionServiceError> {
    let body = CaptionRequest {
        clip_id: &clip.id,
        video_uri: &clip.media_ref,
        action_label: &clip.action_label,
    };
    let attempts = config.attempts.max(1);
    let mut last = None;
    for attempt in 1..=attempts {
        if attempt > 1 {
            thread::sleep(config.initial_backoff * 2u32.pow(attempt - 2));
        }
        match agent.post(url).send_json(&body) {
            Ok(resp) if resp.status() == 200 => return parse_reply(clip, resp),
            Ok(resp) => {
                last = Some(CaptionServiceError::Status {
                    clip_id: clip.id.clone(),
                    status: resp.status(),
                    attempts,
                })
            }
            Err(ureq::Error::Status(status, _)) => {
                last = Some(CaptionServiceError::Status {
                    clip_id: clip.id.clone(),
                    status,
                    attempts,
                })
            }
            Err(ureq::Error::Transport(t)) => {
                last = Some(CaptionServiceError::Transport {
                    clip_id: clip.id.clone(),
                    message: t.to_string(),
                    attempts,
                })
            }
        }
        log::debug!("clip {}: attempt {attempt}/{attempts} failed", clip.id);
    }
    Err(last.expect("at least one attempt"))
}

fn parse_reply(clip: &UncaptionedClip, resp: ureq::Response) -> Result<String, CaptionServiceError> {
    let protocol = |message: String| CaptionServiceError::Protocol {
        clip_id: clip.id.clone(),
        message,
    };
    let reply: CaptionResponse = resp
        .into_json()
        .map_err(|e| protocol(format!("reply is not valid JSON: {e}")))?;
    match reply.clip_id {
        Some(id) if id == clip.id => {}
        Some(id) => return Err(protocol(format!("reply names clip {id:?}"))),
        None => return Err(protocol("reply is missing \"clip_id\"".into())),
    }
    match reply.caption {
        Some(c) if !c.trim().is_empty() => Ok(c),
        Some(_) => Err(protocol("reply has an empty \"caption\"".into())),
        None => Err(protocol("reply is missing \"caption\"".into())),
    }
}
