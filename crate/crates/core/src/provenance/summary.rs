use serde::{Deserialize, Serialize};

use super::{EditAction, ProvenanceRecord};
use crate::time::format_utc;

pub const NO_METADATA_TEXT: &str = "No provenance metadata is available for this media.";
pub const PARSE_ERROR_TEXT: &str = "Provenance metadata is present but could not be decoded.";
pub const UNSUPPORTED_KIND_TEXT: &str = "Provenance extraction is not supported for this media kind.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryStatus {
    Ok,
    NoMetadata,
    ParseError,
    UnsupportedKind,
}

/// Text rendering of one media item's provenance, ready for the prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceSummary {
    pub media_ref: String,
    pub text: String,
    pub status: SummaryStatus,
    /// The filtered record the text was rendered from (status `ok` only).
    pub record: Option<ProvenanceRecord>,
}

impl ProvenanceSummary {
    fn fixed(media_ref: &str, status: SummaryStatus, text: &str) -> Self {
        Self {
            media_ref: media_ref.to_owned(),
            text: text.to_owned(),
            status,
            record: None,
        }
    }

    pub fn no_metadata(media_ref: &str) -> Self {
        Self::fixed(media_ref, SummaryStatus::NoMetadata, NO_METADATA_TEXT)
    }

    pub fn parse_error(media_ref: &str) -> Self {
        Self::fixed(media_ref, SummaryStatus::ParseError, PARSE_ERROR_TEXT)
    }

    pub fn unsupported_kind(media_ref: &str) -> Self {
        Self::fixed(media_ref, SummaryStatus::UnsupportedKind, UNSUPPORTED_KIND_TEXT)
    }
}

/// Keeps only the fields shown to the model and drops `raw_fields`.
pub fn filter_fields(record: &ProvenanceRecord) -> ProvenanceRecord {
    ProvenanceRecord {
        raw_fields: Default::default(),
        ..record.clone()
    }
}

fn quoted(value: &Option<String>) -> String {
    match value {
        Some(v) => serde_json::to_string(v).expect("strings serialize"),
        None => "unknown".to_owned(),
    }
}

fn action_line(action: &EditAction) -> String {
    let mut line = format!(
        "  - {}; when: {}; software agent: {}",
        action.action_id,
        action.when.as_ref().map(format_utc).unwrap_or_else(|| "unknown".into()),
        quoted(&action.software_agent),
    );
    if let Some(dst) = &action.digital_source_type {
        line.push_str("; source type: ");
        line.push_str(&serde_json::to_string(dst).expect("strings serialize"));
    }
    if let Some(params) = &action.parameters {
        line.push_str("; parameters: ");
        line.push_str(&serde_json::to_string(params).expect("maps serialize"));
    }
    line
}

/// Renders a filtered record as a fixed-order bullet list.
///
/// Month precision comes first, then the full timestamp, location, place,
/// origin method, author, producing tool, signature presence and the edit
/// history. Free text is JSON-quoted so distinct records never collide.
pub fn render_summary(record: &ProvenanceRecord, media_ref: &str) -> ProvenanceSummary {
    let unknown = || "unknown".to_owned();
    let mut lines = vec![
        format!(
            "- origin month: {}",
            record.capture_time.map(|t| t.format("%Y-%m").to_string()).unwrap_or_else(unknown)
        ),
        format!(
            "- origin time: {}",
            record.capture_time.as_ref().map(format_utc).unwrap_or_else(unknown)
        ),
        format!(
            "- origin location: {}",
            record
                .capture_location
                .map(|p| format!("{:.6}, {:.6}", p.latitude(), p.longitude()))
                .unwrap_or_else(unknown)
        ),
        format!("- place name: {}", quoted(&record.place_name)),
        format!("- origin method: {}", record.origin_method.as_str()),
        format!("- author: {}", quoted(&record.creator)),
        format!("- producing tool: {}", quoted(&record.claim_generator)),
        format!(
            "- signature: {}",
            if record.signature_present { "present (unvalidated)" } else { "not present" }
        ),
    ];
    if record.actions.is_empty() {
        lines.push("- edit actions: unknown".to_owned());
    } else {
        lines.push(format!("- edit actions: {}", record.actions.len()));
        lines.extend(record.actions.iter().map(action_line));
    }
    ProvenanceSummary {
        media_ref: media_ref.to_owned(),
        text: lines.join("\n"),
        status: SummaryStatus::Ok,
        record: Some(record.clone()),
    }
}
