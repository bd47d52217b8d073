//! Checks the committed fixtures against their generators. Run with
//! `PROVCHECK_REGENERATE_FIXTURES=1` to rewrite them.

mod common;

use std::path::Path;

use common::{ecuador_record, fixture, nyc_article};
use provcheck_core::engine::summarize_media;
use provcheck_core::ingest::FetchLimits;
use provcheck_core::llm::{request_digest, MockScript, PromptBundle};
use provcheck_core::provenance::writer::{embed_in_jpeg, WriterOptions};

pub const ECUADOR_VERDICT: &str = "{'1-relevant': False, '1-reason': 'The provenance metadata places the capture in Guayaquil, Ecuador on 2016-04-17, years before and thousands of kilometres away from the Brooklyn hospital scene of April 2020 described in the article.', '2-relevant': True, '2-reason': 'The edit history lists only creation and resizing, which do not change what the image depicts.', '3-assessment': 'NOT RELEVANT'}";

pub const DEFAULT_VERDICT: &str = "{'1-relevant': True, '1-reason': 'Nothing in the available information contradicts the time and place described in the article.', '2-relevant': True, '2-reason': 'No edits that would alter the content are recorded.', '3-assessment': 'RELEVANT'}";

fn regenerate() -> bool {
    std::env::var_os("PROVCHECK_REGENERATE_FIXTURES").is_some()
}

fn check(path: &Path, expected: &[u8]) {
    if regenerate() {
        std::fs::write(path, expected).unwrap();
        return;
    }
    let actual = std::fs::read(path).unwrap_or_default();
    assert!(
        actual == expected,
        "{} is stale; rerun with PROVCHECK_REGENERATE_FIXTURES=1",
        path.display()
    );
}

#[test]
fn ecuador_jpeg_matches_generator() {
    let plain = std::fs::read(fixture("media/plain.jpg")).unwrap();
    let bytes = embed_in_jpeg(&plain, &ecuador_record(), &WriterOptions::default());
    check(&fixture("media/ecuador.jpg"), &bytes);
}

#[test]
fn mock_script_matches_prompt() {
    let mut article = nyc_article();
    let summaries: Vec<_> = article
        .media
        .iter_mut()
        .map(|m| summarize_media(m, &FetchLimits::default()).0)
        .collect();
    let bundle = PromptBundle::inference(&article, &summaries).unwrap();
    let mut script = MockScript::default().with_default(DEFAULT_VERDICT);
    script.insert(&bundle, ECUADOR_VERDICT);
    assert!(script.responses.contains_key(&request_digest(&bundle)));
    let mut text = script.to_json_pretty();
    text.push('\n');
    check(&fixture("ecuador.json"), text.as_bytes());
}
