//! C2PA provenance: locating manifests in media, decoding the active
//! manifest's claim and assertions, and rendering the retained fields as
//! text a model can read.
//!
//! Signatures are only detected, never validated.

mod classify;
mod jpeg;
pub mod jumbf;
mod manifest;
mod png;
mod sidecar;
mod summary;
#[cfg(any(test, feature = "test-utils"))]
pub mod writer;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify_actions, TamperClass, BENIGN_ACTIONS};
pub use jpeg::extract_jpeg_manifest;
pub use manifest::parse_manifest_store;
pub use png::extract_png_manifest;
pub use sidecar::{load_sidecar, load_sidecar_str, sidecar_path_for};
pub use summary::{filter_fields, render_summary, ProvenanceSummary, SummaryStatus};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProvenanceError {
    #[error("malformed segment structure at byte offset {offset}: {reason}")]
    MalformedSegment { offset: usize, reason: String },
    #[error("content does not match the {expected} format")]
    FormatMismatch { expected: &'static str },
    #[error("invalid box structure in {label}: {reason}")]
    InvalidBox { label: String, reason: String },
    #[error("undecodable payload in {label}: {reason}")]
    UndecodablePayload { label: String, reason: String },
    #[error("invalid sidecar field `{field}`: {reason}")]
    InvalidSidecar { field: String, reason: String },
}

/// Containers whose embedded manifests can be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerFormat {
    Jpeg,
    Png,
}

/// Returns the JUMBF manifest store embedded in `content`, or `None` when
/// the file simply carries no manifest.
pub fn extract_embedded_manifest(
    content: &[u8],
    format: ContainerFormat,
) -> Result<Option<Vec<u8>>, ProvenanceError> {
    match format {
        ContainerFormat::Jpeg => extract_jpeg_manifest(content),
        ContainerFormat::Png => extract_png_manifest(content),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OriginMethod {
    Captured,
    Generated,
    Composited,
    Unknown,
}

impl OriginMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Captured => "captured",
            Self::Generated => "generated",
            Self::Composited => "composited",
            Self::Unknown => "unknown",
        }
    }

    /// Reads an IPTC digital source type, either as a full newscodes URI or
    /// just its final segment.
    pub fn from_digital_source_type(raw: &str) -> Option<Self> {
        let term = raw.rsplit('/').next().unwrap_or(raw);
        match term {
            "trainedAlgorithmicMedia"
            | "algorithmicMedia"
            | "compositeWithTrainedAlgorithmicMedia"
            | "trainedAlgorithmicData"
            | "algorithmicallyEnhanced" => Some(Self::Generated),
            "composite" | "compositeCapture" | "compositeSynthetic" => Some(Self::Composited),
            "digitalCapture" | "computationalCapture" | "negativeFilm" | "positiveFilm" | "print"
            | "digitalArt" | "virtualRecording" | "minorHumanEdits" | "humanEdits" => Some(Self::Captured),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestPath {
    Embedded,
    Sidecar,
}

/// A latitude/longitude pair in decimal degrees, held at micro-degree
/// precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint")]
pub struct GeoPoint {
    latitude: f64,
    longitude: f64,
}

#[derive(Deserialize)]
struct RawGeoPoint {
    latitude: f64,
    longitude: f64,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = String;

    fn try_from(raw: RawGeoPoint) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.latitude, raw.longitude)
    }
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Result<Self, String> {
        if !latitude.is_finite() || !(-90.0..=90.0).contains(&latitude) {
            return Err(format!("latitude {latitude} outside [-90, 90]"));
        }
        if !longitude.is_finite() || !(-180.0..=180.0).contains(&longitude) {
            return Err(format!("longitude {longitude} outside [-180, 180]"));
        }
        Ok(Self {
            latitude: round_micro(latitude),
            longitude: round_micro(longitude),
        })
    }

    pub fn latitude(&self) -> f64 {
        self.latitude
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }
}

fn round_micro(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    // keep -0.0 out of rendered text
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditAction {
    /// Dot-separated token such as `c2pa.resized`.
    pub action_id: String,
    pub when: Option<DateTime<Utc>>,
    pub software_agent: Option<String>,
    /// IPTC digital source type declared on the action, if any.
    #[serde(default)]
    pub digital_source_type: Option<String>,
    pub parameters: Option<BTreeMap<String, serde_json::Value>>,
}

impl EditAction {
    pub fn new(action_id: impl Into<String>) -> Self {
        Self {
            action_id: action_id.into(),
            when: None,
            software_agent: None,
            digital_source_type: None,
            parameters: None,
        }
    }

    pub fn is_valid_id(id: &str) -> bool {
        !id.is_empty()
            && id.split('.').all(|part| {
                !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | ':'))
            })
    }

    fn declared_origin(&self) -> Option<OriginMethod> {
        let from_field = self.digital_source_type.as_deref();
        let from_params = self
            .parameters
            .as_ref()
            .and_then(|p| p.get("digitalSourceType"))
            .and_then(|v| v.as_str());
        from_field
            .into_iter()
            .chain(from_params)
            .filter_map(OriginMethod::from_digital_source_type)
            .max_by_key(|m| origin_rank(*m))
    }
}

fn origin_rank(m: OriginMethod) -> u8 {
    match m {
        OriginMethod::Generated => 3,
        OriginMethod::Composited => 2,
        OriginMethod::Captured => 1,
        OriginMethod::Unknown => 0,
    }
}

/// Origin implied by an action history: any algorithmic source type means
/// generated, then composite, then capture; a bare `c2pa.created` counts as a
/// capture.
pub fn origin_from_actions(actions: &[EditAction]) -> OriginMethod {
    let declared = actions
        .iter()
        .filter_map(EditAction::declared_origin)
        .max_by_key(|m| origin_rank(*m));
    match declared {
        Some(m) => m,
        None if actions.iter().any(|a| a.action_id == "c2pa.created") => OriginMethod::Captured,
        None => OriginMethod::Unknown,
    }
}

/// Decoded provenance for one media item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub capture_time: Option<DateTime<Utc>>,
    pub capture_location: Option<GeoPoint>,
    pub place_name: Option<String>,
    pub creator: Option<String>,
    pub claim_generator: Option<String>,
    pub origin_method: OriginMethod,
    pub actions: Vec<EditAction>,
    pub signature_present: bool,
    pub ingest_path: IngestPath,
    pub raw_fields: BTreeMap<String, serde_json::Value>,
}

impl ProvenanceRecord {
    pub fn empty(ingest_path: IngestPath) -> Self {
        Self {
            capture_time: None,
            capture_location: None,
            place_name: None,
            creator: None,
            claim_generator: None,
            origin_method: OriginMethod::Unknown,
            actions: Vec::new(),
            signature_present: false,
            ingest_path,
            raw_fields: BTreeMap::new(),
        }
    }
}
