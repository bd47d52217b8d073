use std::path::Path;

use thiserror::Error;

use super::fetch::{http_get, FetchError};
use super::{FetchLimits, MediaFormat, MediaItem, MediaKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediaError {
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("{locator} exceeds the size cap of {limit} bytes")]
    TooLarge { locator: String, limit: u64 },
    #[error("unsupported media type for {locator}")]
    UnsupportedType { locator: String },
}

/// Identifies a container format from its leading bytes.
pub fn sniff_format(bytes: &[u8]) -> Option<MediaFormat> {
    let starts = |magic: &[u8]| bytes.starts_with(magic);
    if starts(&[0xFF, 0xD8, 0xFF]) {
        return Some(MediaFormat::Jpeg);
    }
    if starts(b"\x89PNG\r\n\x1a\n") {
        return Some(MediaFormat::Png);
    }
    if starts(b"GIF87a") || starts(b"GIF89a") {
        return Some(MediaFormat::Gif);
    }
    if starts(b"RIFF") && bytes.len() >= 12 {
        match &bytes[8..12] {
            b"WEBP" => return Some(MediaFormat::Webp),
            b"WAVE" => return Some(MediaFormat::Wav),
            _ => {}
        }
    }
    if bytes.len() >= 12 && &bytes[4..8] == b"ftyp" {
        return Some(match &bytes[8..12] {
            b"M4A " | b"M4B " => MediaFormat::M4a,
            b"qt  " => MediaFormat::Mov,
            _ => MediaFormat::Mp4,
        });
    }
    if starts(&[0x1A, 0x45, 0xDF, 0xA3]) {
        return Some(MediaFormat::Webm);
    }
    if starts(b"ID3") || (bytes.len() >= 2 && bytes[0] == 0xFF && bytes[1] & 0xE0 == 0xE0) {
        return Some(MediaFormat::Mp3);
    }
    None
}

/// Loads the bytes behind `item.locator` and confirms its kind.
///
/// Magic bytes override whatever the extension or content type claimed. On
/// error the item keeps its locator and caption and `content` stays empty.
pub fn resolve_media(item: &mut MediaItem, limits: &FetchLimits) -> Result<(), MediaError> {
    if item.content.is_some() {
        classify(item, None)?;
        return Ok(());
    }
    let (bytes, content_type) = if item.is_remote() {
        let doc = http_get(&item.locator, limits.max_media_bytes, limits)?;
        (doc.bytes, doc.content_type)
    } else {
        let path = match url::Url::parse(&item.locator) {
            Ok(u) if u.scheme() == "file" => u.to_file_path().map_err(|_| MediaError::Read {
                path: item.locator.clone(),
                reason: "not a local file URL".into(),
            })?,
            _ => Path::new(&item.locator).to_path_buf(),
        };
        let read_err = |e: std::io::Error| MediaError::Read {
            path: item.locator.clone(),
            reason: e.to_string(),
        };
        let meta = std::fs::metadata(&path).map_err(read_err)?;
        if meta.len() > limits.max_media_bytes {
            return Err(MediaError::TooLarge {
                locator: item.locator.clone(),
                limit: limits.max_media_bytes,
            });
        }
        (std::fs::read(&path).map_err(read_err)?, None)
    };
    item.content = Some(bytes);
    classify(item, content_type.as_deref())
}

fn classify(item: &mut MediaItem, content_type: Option<&str>) -> Result<(), MediaError> {
    let bytes = item.content.as_deref().unwrap_or_default();
    if let Some(format) = sniff_format(bytes) {
        item.format = Some(format);
        item.kind = format.kind();
        return Ok(());
    }
    let declared = content_type
        .and_then(MediaKind::from_content_type)
        .or_else(|| MediaKind::from_locator(&item.locator));
    match declared {
        Some(kind) => {
            item.kind = kind;
            Ok(())
        }
        None => {
            item.content = None;
            Err(MediaError::UnsupportedType {
                locator: item.locator.clone(),
            })
        }
    }
}
