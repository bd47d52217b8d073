//! Article and media ingestion.
//!
//! An [`Article`] is either supplied directly or scraped from a URL with
//! [`fetch_article`] + [`extract_article`]. Media bytes are pulled in
//! separately by [`resolve_media`] so that provenance can be read from them.

mod extract;
mod fetch;
mod media;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use extract::{extract_article, ExtractError};
pub use fetch::{fetch_article, FetchError, RawDocument};
pub use media::{resolve_media, sniff_format, MediaError};

/// The unit of analysis: a title, a plain-text body and the attached media.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    /// Plain text, paragraphs joined by a blank line.
    pub body: String,
    pub media: Vec<MediaItem>,
    pub source_url: Option<String>,
    pub fetched_at: Option<DateTime<Utc>>,
}

impl Article {
    pub fn new(title: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            body: body.into(),
            media: Vec::new(),
            source_url: None,
            fetched_at: None,
        }
    }

    pub fn with_media(mut self, item: MediaItem) -> Self {
        self.media.push(item);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaKind {
    Image,
    Video,
    Audio,
}

impl MediaKind {
    /// `image/*`, `video/*` and `audio/*` content types.
    pub fn from_content_type(content_type: &str) -> Option<Self> {
        let essence = content_type.split(';').next()?.trim().to_ascii_lowercase();
        match essence.split('/').next()? {
            "image" => Some(Self::Image),
            "video" => Some(Self::Video),
            "audio" => Some(Self::Audio),
            _ => None,
        }
    }

    pub fn from_extension(ext: &str) -> Option<Self> {
        match ext.to_ascii_lowercase().as_str() {
            "jpg" | "jpeg" | "png" | "webp" => Some(Self::Image),
            "mp4" | "webm" | "mov" => Some(Self::Video),
            "mp3" | "wav" | "m4a" => Some(Self::Audio),
            _ => None,
        }
    }

    /// Kind implied by the extension of a URL path or file path.
    pub fn from_locator(locator: &str) -> Option<Self> {
        let path = match url::Url::parse(locator) {
            Ok(url) if url.scheme() != "file" || !locator.starts_with('/') => url.path().to_owned(),
            _ => locator.to_owned(),
        };
        let name = path.rsplit('/').next()?;
        let (_, ext) = name.rsplit_once('.')?;
        Self::from_extension(ext)
    }
}

/// Container format recognised from leading magic bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaFormat {
    Jpeg,
    Png,
    Gif,
    Webp,
    Mp4,
    Mov,
    Webm,
    Mp3,
    Wav,
    M4a,
}

impl MediaFormat {
    pub fn kind(self) -> MediaKind {
        match self {
            Self::Jpeg | Self::Png | Self::Gif | Self::Webp => MediaKind::Image,
            Self::Mp4 | Self::Mov | Self::Webm => MediaKind::Video,
            Self::Mp3 | Self::Wav | Self::M4a => MediaKind::Audio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaItem {
    /// Absolute URL or absolute local path.
    pub locator: String,
    pub kind: MediaKind,
    pub caption: Option<String>,
    /// Format detected from the content's magic bytes, once fetched.
    #[serde(default)]
    pub format: Option<MediaFormat>,
    /// Inline sidecar manifest report supplied alongside the item.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<serde_json::Value>,
    #[serde(skip)]
    pub content: Option<Vec<u8>>,
}

impl MediaItem {
    pub fn new(locator: impl Into<String>, kind: MediaKind) -> Self {
        Self {
            locator: locator.into(),
            kind,
            caption: None,
            format: None,
            sidecar: None,
            content: None,
        }
    }

    /// Sets the caption; blank captions are dropped and the rest trimmed.
    pub fn with_caption(mut self, caption: impl AsRef<str>) -> Self {
        self.caption = normalize_caption(caption.as_ref());
        self
    }

    pub fn is_remote(&self) -> bool {
        self.locator.starts_with("http://") || self.locator.starts_with("https://")
    }
}

pub(crate) fn normalize_caption(raw: &str) -> Option<String> {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    (!collapsed.is_empty()).then_some(collapsed)
}

/// Size, redirect and time limits applied to every fetch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchLimits {
    pub max_html_bytes: u64,
    pub max_media_bytes: u64,
    pub max_redirects: u32,
    pub timeout_secs: u64,
}

impl Default for FetchLimits {
    fn default() -> Self {
        Self {
            max_html_bytes: 8 * 1024 * 1024,
            max_media_bytes: 32 * 1024 * 1024,
            max_redirects: 5,
            timeout_secs: 30,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_mapping() {
        assert_eq!(MediaKind::from_content_type("image/jpeg"), Some(MediaKind::Image));
        assert_eq!(MediaKind::from_content_type("Video/MP4; codecs=x"), Some(MediaKind::Video));
        assert_eq!(MediaKind::from_content_type("audio/mpeg"), Some(MediaKind::Audio));
        assert_eq!(MediaKind::from_content_type("text/html"), None);
        assert_eq!(MediaKind::from_locator("https://x.test/a/b.JPG?x=1"), Some(MediaKind::Image));
        assert_eq!(MediaKind::from_locator("/tmp/clip.mov"), Some(MediaKind::Video));
        assert_eq!(MediaKind::from_locator("/tmp/voice.m4a"), Some(MediaKind::Audio));
        assert_eq!(MediaKind::from_locator("/tmp/noext"), None);
    }

    #[test]
    fn captions_are_trimmed_and_blank_dropped() {
        let item = MediaItem::new("/a.jpg", MediaKind::Image).with_caption("  body \n bags ");
        assert_eq!(item.caption.as_deref(), Some("body bags"));
        let item = MediaItem::new("/a.jpg", MediaKind::Image).with_caption("   ");
        assert_eq!(item.caption, None);
    }
}
