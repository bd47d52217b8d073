use std::borrow::Cow;

use thiserror::Error;

use crate::ingest::Article;
use crate::provenance::ProvenanceSummary;

const SYSTEM_PROMPT: &str = include_str!("../../prompts/system_prompt.txt");
const FOLLOWUP_TEMPLATE: &str = include_str!("../../prompts/followup_prompt.txt");

pub const BODY_LIMIT_CHARS: usize = 12_000;
pub const TRUNCATION_MARKER: &str = "[truncated]";
pub const NO_MEDIA_LINE: &str = "- attached media: none";
pub const REPAIR_INSTRUCTION: &str = "Return only the JSON object in the required format.";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("{summaries} provenance summaries for {media} media items")]
    MisalignedSummaries { media: usize, summaries: usize },
    #[error("follow-up question is empty")]
    EmptyQuestion,
}

/// System and user message for one model call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptBundle {
    pub system: String,
    pub user: String,
}

impl PromptBundle {
    pub fn inference(article: &Article, summaries: &[ProvenanceSummary]) -> Result<Self, PromptError> {
        Ok(Self {
            system: render_system_prompt().to_owned(),
            user: render_inference_prompt(article, summaries)?,
        })
    }

    pub fn followup(current_reasoning: &str, question: &str) -> Result<Self, PromptError> {
        Ok(Self {
            system: render_system_prompt().to_owned(),
            user: render_followup_prompt(current_reasoning, question)?,
        })
    }

    /// The same request with the unusable previous answer and the repair
    /// instruction appended.
    pub fn repair(&self, previous_output: &str) -> Self {
        Self {
            system: self.system.clone(),
            user: format!(
                "{}\n\nYour previous answer was:\n{}\n\n{}",
                self.user, previous_output, REPAIR_INSTRUCTION
            ),
        }
    }
}

pub fn render_system_prompt() -> &'static str {
    SYSTEM_PROMPT
}

/// Cuts the body to [`BODY_LIMIT_CHARS`] at a paragraph boundary and appends
/// the truncation marker. A first paragraph that alone exceeds the limit is
/// cut at the character limit.
pub fn truncate_body(body: &str) -> (Cow<'_, str>, bool) {
    if body.chars().count() <= BODY_LIMIT_CHARS {
        return (Cow::Borrowed(body), false);
    }
    let mut kept = String::new();
    let mut kept_chars = 0;
    for (i, paragraph) in body.split("\n\n").enumerate() {
        let sep = if i == 0 { 0 } else { 2 };
        let n = paragraph.chars().count();
        if kept_chars + sep + n > BODY_LIMIT_CHARS {
            break;
        }
        if i > 0 {
            kept.push_str("\n\n");
        }
        kept.push_str(paragraph);
        kept_chars += sep + n;
    }
    if kept.is_empty() {
        kept = body.chars().take(BODY_LIMIT_CHARS).collect();
    }
    kept.push_str("\n\n");
    kept.push_str(TRUNCATION_MARKER);
    (Cow::Owned(kept), true)
}

/// Fills the inference template: title, body, then a caption and
/// provenance block per media item in order.
pub fn render_inference_prompt(article: &Article, summaries: &[ProvenanceSummary]) -> Result<String, PromptError> {
    if summaries.len() != article.media.len() {
        return Err(PromptError::MisalignedSummaries {
            media: article.media.len(),
            summaries: summaries.len(),
        });
    }
    let (body, _) = truncate_body(&article.body);
    let mut out = format!("- title: {}\n- body: {}", article.title, body);
    if article.media.is_empty() {
        out.push('\n');
        out.push_str(NO_MEDIA_LINE);
    }
    for (item, summary) in article.media.iter().zip(summaries) {
        out.push_str("\n- image caption: ");
        out.push_str(item.caption.as_deref().unwrap_or("(none)"));
        out.push_str("\n- provenance metadata:");
        for line in summary.text.lines() {
            out.push_str("\n  ");
            out.push_str(line);
        }
    }
    Ok(out)
}

pub fn render_followup_prompt(current_reasoning: &str, question: &str) -> Result<String, PromptError> {
    if question.trim().is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    let (head, rest) = FOLLOWUP_TEMPLATE
        .split_once("{reasoning}")
        .expect("follow-up template has a reasoning slot");
    let (middle, tail) = rest
        .split_once("{question}")
        .expect("follow-up template has a question slot");
    Ok(format!("{head}{current_reasoning}{middle}{question}{tail}"))
}
