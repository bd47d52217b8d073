use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{Assessment, OverallLabel};

pub const RELEVANT_HEADLINE: &str = "The attached media appear consistent with the article.";
pub const NOT_RELEVANT_HEADLINE: &str = "The attached media may be presented out of context.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverallBox {
    pub label: OverallLabel,
    pub headline: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagBox {
    pub flag: bool,
    pub reason: String,
}

/// Display layout: overall verdict on top, then location/source and
/// tampering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeBoxView {
    pub overall: OverallBox,
    pub location_source: FlagBox,
    pub tampering: FlagBox,
}

pub fn headline_for(label: OverallLabel) -> &'static str {
    match label {
        OverallLabel::Relevant => RELEVANT_HEADLINE,
        OverallLabel::NotRelevant => NOT_RELEVANT_HEADLINE,
    }
}

pub fn structure_boxes(assessment: &Assessment) -> ThreeBoxView {
    ThreeBoxView {
        overall: OverallBox {
            label: assessment.overall,
            headline: headline_for(assessment.overall).to_owned(),
        },
        location_source: FlagBox {
            flag: assessment.origin_relevant,
            reason: assessment.origin_reason.clone(),
        },
        tampering: FlagBox {
            flag: assessment.edits_relevant,
            reason: assessment.edits_reason.clone(),
        },
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("no per-media assessments to aggregate")]
pub struct EmptyAggregate;

/// Combines per-media verdicts: any NOT RELEVANT vetoes, flags are
/// conjoined, reasons are prefixed with their 1-based media index.
pub fn aggregate_media(assessments: &[Assessment]) -> Result<Assessment, EmptyAggregate> {
    if assessments.is_empty() {
        return Err(EmptyAggregate);
    }
    let indexed = |f: fn(&Assessment) -> &str| {
        assessments
            .iter()
            .enumerate()
            .map(|(i, a)| format!("[media {}] {}", i + 1, f(a)))
            .collect::<Vec<_>>()
            .join("\n")
    };
    Ok(Assessment {
        origin_relevant: assessments.iter().all(|a| a.origin_relevant),
        origin_reason: indexed(|a| &a.origin_reason),
        edits_relevant: assessments.iter().all(|a| a.edits_relevant),
        edits_reason: indexed(|a| &a.edits_reason),
        overall: if assessments.iter().any(|a| a.overall == OverallLabel::NotRelevant) {
            OverallLabel::NotRelevant
        } else {
            OverallLabel::Relevant
        },
        raw_model_output: assessments
            .iter()
            .map(|a| a.raw_model_output.as_str())
            .collect::<Vec<_>>()
            .join("\n\n"),
    })
}
