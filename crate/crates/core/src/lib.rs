//! Provenance-aware relevance checking for media attached to news articles.
//!
//! The pipeline scrapes (or accepts) an article, reads C2PA provenance
//! manifests from its media, renders everything into fixed prompts and turns
//! the model's answer into a structured [`llm::Assessment`].
//!
//! Modules map onto the pipeline stages:
//!
//! - [`ingest`]: fetching and extracting articles and media bytes
//! - [`provenance`]: JPEG/PNG manifest location, JUMBF decoding, sidecars,
//!   filtering and rendering
//! - [`llm`]: prompts, model backends and verdict parsing
//! - [`engine`]: orchestration, three-box view and follow-up chat sessions

pub mod engine;
pub mod ingest;
pub mod llm;
pub mod provenance;

mod time;

pub use engine::{AnalysisInput, AnalysisResult, Engine, EngineConfig};
pub use ingest::{Article, MediaItem, MediaKind};
pub use llm::{Assessment, ModelConfig, OverallLabel};
pub use provenance::{ProvenanceRecord, ProvenanceSummary};
