//! The analysis pipeline, result structuring and follow-up chat.

mod boxes;
mod store;

pub use boxes::{
    aggregate_media, headline_for, structure_boxes, EmptyAggregate, FlagBox, OverallBox, ThreeBoxView,
    NOT_RELEVANT_HEADLINE, RELEVANT_HEADLINE,
};
pub use store::{ChatMessage, ChatSession, EventSink, Role, Store, StoreError, StoreEvent};

use std::path::Path;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{
    extract_article, fetch_article, resolve_media, Article, ExtractError, FetchError, FetchLimits, MediaFormat,
    MediaItem, MediaKind,
};
use crate::llm::{
    build_backend, request_assessment, truncate_body, AssessError, Assessment, BackendError, CompletionBackend,
    ConfigError, MockScript, ModelConfig, PromptBundle, PromptError, VerdictError, BODY_LIMIT_CHARS,
};
use crate::provenance::{
    classify_actions, extract_embedded_manifest, filter_fields, load_sidecar, load_sidecar_str, parse_manifest_store,
    render_summary, sidecar_path_for, ContainerFormat, ProvenanceRecord, ProvenanceSummary, SummaryStatus,
    TamperClass,
};
use crate::time::now_millis;

pub const NO_METADATA_WARNING: &str =
    "Provenance metadata is missing or unreadable for some or all media; the assessment proceeds without it.";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub model: ModelConfig,
    pub fetch: FetchLimits,
    /// Assess each media item in its own prompt and aggregate the verdicts.
    #[serde(default)]
    pub per_media: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisInput {
    Url(String),
    Article(Article),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeuristicTamperClass {
    Benign,
    Edited,
    Generated,
    Unknown,
}

impl From<TamperClass> for HeuristicTamperClass {
    fn from(c: TamperClass) -> Self {
        match c {
            TamperClass::Benign => Self::Benign,
            TamperClass::Edited => Self::Edited,
            TamperClass::Generated => Self::Generated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub article: Article,
    pub summaries: Vec<ProvenanceSummary>,
    pub assessment: Assessment,
    pub boxes: ThreeBoxView,
    pub warnings: Vec<String>,
    pub heuristic_tamper_class: HeuristicTamperClass,
}

impl AnalysisResult {
    /// The stable serialisation shared by the CLI and the HTTP service.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(self)
    }
}

/// Compact JSON with declaration-order struct fields and sorted map keys.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string(value).expect("engine types always serialise")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Backend,
    Parse,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("article {0} is empty")]
    EmptyField(&'static str),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("ingest failed: {0}")]
    Ingest(#[from] IngestError),
    #[error("model backend failed: {0}")]
    Backend(#[from] BackendError),
    #[error("model output could not be parsed after {attempts} attempt(s): {error}")]
    Parse {
        error: VerdictError,
        attempts: u32,
        raw_output: String,
    },
}

impl AnalysisError {
    pub fn stage(&self) -> Stage {
        match self {
            Self::Ingest(_) => Stage::Ingest,
            Self::Backend(_) => Stage::Backend,
            Self::Parse { .. } => Stage::Parse,
        }
    }
}

impl From<AssessError> for AnalysisError {
    fn from(e: AssessError) -> Self {
        match e {
            AssessError::Backend(b) => Self::Backend(b),
            AssessError::Parse {
                error,
                attempts,
                raw_output,
            } => Self::Parse {
                error,
                attempts,
                raw_output,
            },
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FollowupError {
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Store(#[from] StoreError),
    /// The question and a failure notice were still appended.
    #[error("model backend failed: {error}")]
    Backend { error: BackendError, session: ChatSession },
}

pub fn failure_notice(error: &BackendError) -> String {
    format!("The model could not answer this question ({error}).")
}

/// Provenance for one media item plus any warnings raised on the way.
pub fn summarize_media(item: &mut MediaItem, limits: &FetchLimits) -> (ProvenanceSummary, Vec<String>) {
    let mut warnings = Vec::new();
    let locator = item.locator.clone();
    if let Err(e) = resolve_media(item, limits) {
        warnings.push(format!("media {locator} could not be loaded: {e}"));
    }
    if item.kind != MediaKind::Image {
        warnings.push(format!(
            "provenance extraction is not supported for {} media ({locator})",
            kind_name(item.kind)
        ));
        return (ProvenanceSummary::unsupported_kind(&locator), warnings);
    }

    let container = match item.format {
        Some(MediaFormat::Jpeg) => Some(ContainerFormat::Jpeg),
        Some(MediaFormat::Png) => Some(ContainerFormat::Png),
        _ => None,
    };
    if let (Some(content), Some(format)) = (item.content.as_deref(), container) {
        let parsed = extract_embedded_manifest(content, format)
            .and_then(|store| store.map(|s| parse_manifest_store(&s)).transpose());
        match parsed {
            Ok(Some(record)) => return (ok_summary(&record, &locator), warnings),
            Ok(None) => {}
            Err(e) => {
                warnings.push(format!("provenance of {locator} could not be decoded: {e}"));
                return (ProvenanceSummary::parse_error(&locator), warnings);
            }
        }
    }

    match sidecar_record(item) {
        Some(Ok(record)) => (ok_summary(&record, &locator), warnings),
        Some(Err(e)) => {
            warnings.push(format!("sidecar manifest for {locator} is invalid: {e}"));
            (ProvenanceSummary::parse_error(&locator), warnings)
        }
        None => (ProvenanceSummary::no_metadata(&locator), warnings),
    }
}

fn kind_name(kind: MediaKind) -> &'static str {
    match kind {
        MediaKind::Image => "image",
        MediaKind::Video => "video",
        MediaKind::Audio => "audio",
    }
}

fn ok_summary(record: &ProvenanceRecord, locator: &str) -> ProvenanceSummary {
    render_summary(&filter_fields(record), locator)
}

/// Inline sidecar first, then `<stem>.c2pa.json` beside a local file.
fn sidecar_record(item: &MediaItem) -> Option<Result<ProvenanceRecord, crate::provenance::ProvenanceError>> {
    if let Some(doc) = &item.sidecar {
        return Some(load_sidecar(doc));
    }
    if item.is_remote() {
        return None;
    }
    let path = sidecar_path_for(Path::new(&item.locator));
    let text = std::fs::read_to_string(&path).ok()?;
    Some(load_sidecar_str(&text))
}

/// Worst class across the decoded records; unknown when none decoded.
pub fn heuristic_tamper_class(summaries: &[ProvenanceSummary]) -> HeuristicTamperClass {
    summaries
        .iter()
        .filter(|s| s.status == SummaryStatus::Ok)
        .filter_map(|s| s.record.as_ref())
        .map(|r| classify_actions(&r.actions, r.origin_method))
        .max_by_key(|c| match c {
            TamperClass::Benign => 0,
            TamperClass::Edited => 1,
            TamperClass::Generated => 2,
        })
        .map_or(HeuristicTamperClass::Unknown, Into::into)
}

pub struct Engine {
    config: EngineConfig,
    backend: Arc<dyn CompletionBackend>,
    store: Store,
}

impl Engine {
    pub fn new(config: EngineConfig, backend: Arc<dyn CompletionBackend>) -> Self {
        Self::with_store(config, backend, Store::new())
    }

    pub fn with_store(config: EngineConfig, backend: Arc<dyn CompletionBackend>, store: Store) -> Self {
        Self {
            config,
            backend,
            store,
        }
    }

    /// Builds the backend named in `config.model`.
    pub fn from_config(config: EngineConfig, script: Option<MockScript>) -> Result<Self, ConfigError> {
        let backend = build_backend(&config.model, script)?;
        Ok(Self::new(config, backend))
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn backend(&self) -> &Arc<dyn CompletionBackend> {
        &self.backend
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    /// Runs the pipeline and stores the result.
    pub fn analyze(&self, input: AnalysisInput) -> Result<Arc<AnalysisResult>, AnalysisError> {
        let result = self.run_pipeline(input)?;
        Ok(self.store.insert_analysis(result).expect("fresh 128-bit ids do not collide"))
    }

    /// Runs the pipeline without touching the store.
    pub fn run_pipeline(&self, input: AnalysisInput) -> Result<AnalysisResult, AnalysisError> {
        let mut article = match input {
            AnalysisInput::Url(url) => {
                let doc = fetch_article(&url, &self.config.fetch).map_err(IngestError::from)?;
                let mut article = extract_article(&doc, &doc.final_url).map_err(IngestError::from)?;
                article.fetched_at = Some(now_millis());
                article
            }
            AnalysisInput::Article(article) => article,
        };
        if article.title.trim().is_empty() {
            return Err(IngestError::EmptyField("title").into());
        }
        if article.body.trim().is_empty() {
            return Err(IngestError::EmptyField("body").into());
        }

        let mut warnings = Vec::new();
        let limits = &self.config.fetch;
        let per_item: Vec<(ProvenanceSummary, Vec<String>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = article
                .media
                .iter_mut()
                .map(|item| scope.spawn(move || summarize_media(item, limits)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("media worker panicked")).collect()
        });
        // raw bytes are never serialized; drop them so stored and replayed results agree
        for item in &mut article.media {
            item.content = None;
        }
        let mut summaries = Vec::with_capacity(per_item.len());
        for (summary, w) in per_item {
            summaries.push(summary);
            warnings.extend(w);
        }
        if summaries.is_empty() || summaries.iter().any(|s| s.status != SummaryStatus::Ok) {
            warnings.insert(0, NO_METADATA_WARNING.to_owned());
        }
        if truncate_body(&article.body).1 {
            warnings.push(format!(
                "article body exceeds {BODY_LIMIT_CHARS} characters and was truncated in the prompt"
            ));
        }

        let retries = self.config.model.max_repair_retries;
        let assessment = if self.config.per_media && !article.media.is_empty() {
            let mut verdicts = Vec::with_capacity(article.media.len());
            for (item, summary) in article.media.iter().zip(&summaries) {
                let single = Article {
                    media: vec![item.clone()],
                    ..article.clone()
                };
                let bundle =
                    PromptBundle::inference(&single, std::slice::from_ref(summary)).map_err(IngestError::from)?;
                verdicts.push(request_assessment(self.backend.as_ref(), &bundle, retries)?);
            }
            aggregate_media(&verdicts).expect("at least one media item")
        } else {
            let bundle = PromptBundle::inference(&article, &summaries).map_err(IngestError::from)?;
            request_assessment(self.backend.as_ref(), &bundle, retries)?
        };

        Ok(AnalysisResult {
            id: store::new_id(),
            created_at: now_millis(),
            boxes: structure_boxes(&assessment),
            heuristic_tamper_class: heuristic_tamper_class(&summaries),
            article,
            summaries,
            assessment,
            warnings,
        })
    }

    pub fn start_session(&self, analysis_id: &str) -> Result<ChatSession, StoreError> {
        self.store.start_session(analysis_id)
    }

    /// Asks a follow-up question in `session_id`. The session stays locked
    /// for the whole exchange so concurrent questions are never interleaved.
    pub fn ask_followup(&self, session_id: &str, question: &str) -> Result<String, FollowupError> {
        if question.trim().is_empty() {
            return Err(FollowupError::EmptyQuestion);
        }
        let cell = self.store.session_cell(session_id)?;
        let mut session = cell.lock().unwrap();
        let analysis = self
            .store
            .analysis(&session.analysis_id)
            .ok_or_else(|| StoreError::UnknownAnalysis(session.analysis_id.clone()))?;
        let reasoning = current_reasoning(&analysis.assessment, &session.messages);
        let bundle = PromptBundle::followup(&reasoning, question).map_err(|_| FollowupError::EmptyQuestion)?;

        self.store.append_locked(
            &mut session,
            ChatMessage {
                role: Role::User,
                text: question.to_owned(),
                at: now_millis(),
            },
        )?;
        let outcome = self.backend.complete(&bundle);
        let text = match &outcome {
            Ok(reply) => reply.clone(),
            Err(e) => failure_notice(e),
        };
        self.store.append_locked(
            &mut session,
            ChatMessage {
                role: Role::Assistant,
                text,
                at: now_millis(),
            },
        )?;
        outcome.map_err(|error| FollowupError::Backend {
            error,
            session: session.clone(),
        })
    }
}

/// Assessment reasons followed by every earlier assistant message.
pub fn current_reasoning(assessment: &Assessment, messages: &[ChatMessage]) -> String {
    let mut parts = vec![assessment.origin_reason.as_str(), assessment.edits_reason.as_str()];
    parts.extend(
        messages
            .iter()
            .filter(|m| m.role == Role::Assistant)
            .map(|m| m.text.as_str()),
    );
    parts.join("\n\n")
}
