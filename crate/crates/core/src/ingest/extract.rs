use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use encoding_rs::{Encoding, UTF_8};
use regex::bytes::Regex;
use scraper::{ElementRef, Html, Node, Selector};
use thiserror::Error;
use url::Url;

use super::{normalize_caption, Article, MediaItem, MediaKind, RawDocument};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("invalid base URL {0:?}")]
    InvalidBaseUrl(String),
    #[error("no extractable title")]
    NoTitle,
    #[error("no extractable body")]
    NoBody,
}

impl ExtractError {
    /// Name of the missing article field, when that is the failure.
    pub fn missing_field(&self) -> Option<&'static str> {
        match self {
            Self::NoTitle => Some("title"),
            Self::NoBody => Some("body"),
            Self::InvalidBaseUrl(_) => None,
        }
    }
}

static META_CHARSET: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"(?i)<meta[^>]+charset\s*=\s*["']?\s*([a-z0-9_:.\-]+)"#).unwrap()
});

macro_rules! selector {
    ($name:ident, $css:expr) => {
        static $name: LazyLock<Selector> = LazyLock::new(|| Selector::parse($css).unwrap());
    };
}

selector!(OG_TITLE, r#"meta[property="og:title"], meta[name="og:title"]"#);
selector!(OG_IMAGE, r#"meta[property="og:image"], meta[name="og:image"]"#);
selector!(OG_IMAGE_ALT, r#"meta[property="og:image:alt"], meta[name="og:image:alt"]"#);
selector!(TITLE, "title");
selector!(H1, "h1");
selector!(PARAGRAPH, "p");
selector!(BASE, "base[href]");
selector!(MEDIA, "img, video, audio");
selector!(SOURCE, "source[src]");
selector!(FIGCAPTION, "figcaption");

/// Elements whose text never reaches the body.
const SKIPPED_TEXT: &[&str] = &["script", "style", "noscript", "template"];
/// Paragraphs nested under these inside the winning container are boilerplate.
const BOILERPLATE: &[&str] = &["nav", "aside", "footer", "header", "form"];

/// Extracts title, body and media from an HTML page.
///
/// The body container is the parent element whose direct paragraphs score
/// highest under `chars * (1 - linked_chars / chars)`, earliest in document
/// order on ties.
pub fn extract_article(doc: &RawDocument, base_url: &str) -> Result<Article, ExtractError> {
    let mut base = Url::parse(base_url).map_err(|_| ExtractError::InvalidBaseUrl(base_url.to_owned()))?;
    let text = decode(&doc.bytes, doc.content_type.as_deref());
    let html = Html::parse_document(&text);

    if let Some(href) = html.select(&BASE).next().and_then(|b| b.value().attr("href")) {
        if let Ok(joined) = base.join(href) {
            base = joined;
        }
    }

    let title = extract_title(&html).ok_or(ExtractError::NoTitle)?;
    let container = best_container(&html).ok_or(ExtractError::NoBody)?;
    let body = container_body(container);
    if body.is_empty() {
        return Err(ExtractError::NoBody);
    }

    let scope = container
        .ancestors()
        .filter_map(ElementRef::wrap)
        .find(|e| e.value().name() == "article")
        .filter(|_| container.value().name() != "article")
        .unwrap_or(container);
    let media = collect_media(&html, scope, &base);

    Ok(Article {
        title,
        body,
        media,
        source_url: Some(base_url.to_owned()),
        fetched_at: None,
    })
}

fn decode(bytes: &[u8], content_type: Option<&str>) -> String {
    let declared = content_type
        .and_then(|ct| {
            ct.split(';')
                .filter_map(|p| p.trim().strip_prefix("charset="))
                .next()
                .map(|c| c.trim_matches('"').to_owned())
        })
        .or_else(|| {
            let head = &bytes[..bytes.len().min(2048)];
            META_CHARSET
                .captures(head)
                .map(|c| String::from_utf8_lossy(&c[1]).into_owned())
        });
    let encoding = declared
        .and_then(|label| Encoding::for_label(label.as_bytes()))
        .unwrap_or(UTF_8);
    let (text, _, _) = encoding.decode(bytes);
    text.into_owned()
}

fn extract_title(html: &Html) -> Option<String> {
    let og = html
        .select(&OG_TITLE)
        .filter_map(|m| m.value().attr("content"))
        .find_map(normalize_caption);
    og.or_else(|| html.select(&TITLE).find_map(|t| normalize_caption(&visible_text(t))))
        .or_else(|| html.select(&H1).next().and_then(|h| normalize_caption(&visible_text(h))))
}

/// Text of an element with script/style content removed and whitespace collapsed.
fn visible_text(el: ElementRef<'_>) -> String {
    let mut out = String::new();
    push_text(el, &mut out);
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn push_text(el: ElementRef<'_>, out: &mut String) {
    for child in el.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) => {
                if SKIPPED_TEXT.contains(&e.name()) {
                    continue;
                }
                if e.name() == "br" {
                    out.push(' ');
                }
                if let Some(child_el) = ElementRef::wrap(child) {
                    push_text(child_el, out);
                }
            }
            _ => {}
        }
    }
}

fn linked_chars(el: ElementRef<'_>) -> usize {
    el.descendants()
        .filter_map(ElementRef::wrap)
        .filter(|e| e.value().name() == "a")
        // nested anchors are invalid HTML; the parser never produces them
        .map(|a| visible_text(a).chars().count())
        .sum()
}

#[derive(Default)]
struct Tally {
    chars: usize,
    linked: usize,
}

impl Tally {
    fn score(&self) -> f64 {
        if self.chars == 0 {
            return 0.0;
        }
        let total = self.chars as f64;
        total * (1.0 - self.linked as f64 / total)
    }
}

fn best_container(html: &Html) -> Option<ElementRef<'_>> {
    let order: HashMap<_, usize> = html
        .tree
        .root()
        .descendants()
        .enumerate()
        .map(|(i, n)| (n.id(), i))
        .collect();

    let mut tallies: HashMap<_, Tally> = HashMap::new();
    for p in html.select(&PARAGRAPH) {
        let chars = visible_text(p).chars().count();
        if chars == 0 {
            continue;
        }
        let Some(parent) = p.parent().and_then(ElementRef::wrap) else {
            continue;
        };
        let tally = tallies.entry(parent.id()).or_default();
        tally.chars += chars;
        tally.linked += linked_chars(p).min(chars);
    }

    let mut best: Option<(f64, usize, _)> = None;
    for (id, tally) in &tallies {
        let score = tally.score();
        // nodes outside the main tree (template contents) never win
        let Some(&pos) = order.get(id) else {
            continue;
        };
        let better = match best {
            None => true,
            Some((s, p, _)) => score > s || (score == s && pos < p),
        };
        if better {
            best = Some((score, pos, *id));
        }
    }
    let (score, _, id) = best?;
    if score <= 0.0 {
        return None;
    }
    html.tree.get(id).and_then(ElementRef::wrap)
}

fn container_body(container: ElementRef<'_>) -> String {
    container
        .select(&PARAGRAPH)
        .filter(|p| {
            !p.ancestors()
                .take_while(|a| a.id() != container.id())
                .filter_map(ElementRef::wrap)
                .any(|a| BOILERPLATE.contains(&a.value().name()))
        })
        .map(visible_text)
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn collect_media(html: &Html, scope: ElementRef<'_>, base: &Url) -> Vec<MediaItem> {
    let mut seen = HashSet::new();
    let mut media = Vec::new();

    for el in scope.select(&MEDIA) {
        let kind = match el.value().name() {
            "img" => MediaKind::Image,
            "video" => MediaKind::Video,
            _ => MediaKind::Audio,
        };
        let src = el
            .value()
            .attr("src")
            .or_else(|| el.value().attr("data-src"))
            .or_else(|| el.select(&SOURCE).next().and_then(|s| s.value().attr("src")));
        let Some(locator) = src.and_then(|s| resolve(base, s)) else {
            continue;
        };
        if !seen.insert(locator.clone()) {
            continue;
        }
        let caption = figure_caption(el).or_else(|| el.value().attr("alt").and_then(normalize_caption));
        let mut item = MediaItem::new(locator, kind);
        item.caption = caption;
        media.push(item);
    }

    let og_alt = html
        .select(&OG_IMAGE_ALT)
        .filter_map(|m| m.value().attr("content"))
        .find_map(normalize_caption);
    if let Some(locator) = html
        .select(&OG_IMAGE)
        .filter_map(|m| m.value().attr("content"))
        .find_map(|s| resolve(base, s))
    {
        if seen.insert(locator.clone()) {
            let mut item = MediaItem::new(locator, MediaKind::Image);
            item.caption = og_alt;
            media.push(item);
        }
    }
    media
}

fn figure_caption(el: ElementRef<'_>) -> Option<String> {
    let figure = el
        .ancestors()
        .filter_map(ElementRef::wrap)
        .find(|a| a.value().name() == "figure")?;
    figure
        .select(&FIGCAPTION)
        .next()
        .and_then(|c| normalize_caption(&visible_text(c)))
}

fn resolve(base: &Url, raw: &str) -> Option<String> {
    let raw = raw.trim();
    if raw.is_empty() || raw.starts_with("data:") {
        return None;
    }
    let url = base.join(raw).ok()?;
    matches!(url.scheme(), "http" | "https" | "file").then(|| url.to_string())
}
