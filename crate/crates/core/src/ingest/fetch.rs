use std::time::Duration;

use thiserror::Error;
use ureq::ResponseExt;

use super::FetchLimits;

/// Bytes of a fetched document plus what the server said about them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub bytes: Vec<u8>,
    pub content_type: Option<String>,
    /// URL of the last hop after redirects; relative links resolve against it.
    pub final_url: String,
}

impl RawDocument {
    /// Wraps bytes that did not come over the network (files, tests).
    pub fn from_bytes(bytes: impl Into<Vec<u8>>, url: impl Into<String>) -> Self {
        Self {
            bytes: bytes.into(),
            content_type: Some("text/html".to_owned()),
            final_url: url.into(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FetchError {
    #[error("invalid URL {url:?}: {reason}")]
    InvalidUrl { url: String, reason: String },
    #[error("network failure fetching {url}: {reason}")]
    Network { url: String, reason: String },
    #[error("request to {url} timed out")]
    Timeout { url: String },
    #[error("more than {limit} redirects fetching {url}")]
    TooManyRedirects { url: String, limit: u32 },
    #[error("{url} answered with HTTP status {status}")]
    Status { url: String, status: u16 },
    #[error("{url} is not an HTML document (content type {content_type})")]
    NotHtml { url: String, content_type: String },
    #[error("{url} exceeds the size cap of {limit} bytes")]
    TooLarge { url: String, limit: u64 },
}

/// Fetches an article page, following at most `limits.max_redirects`
/// redirects and reading at most `limits.max_html_bytes` bytes.
pub fn fetch_article(url: &str, limits: &FetchLimits) -> Result<RawDocument, FetchError> {
    let doc = http_get(url, limits.max_html_bytes, limits)?;
    if let Some(ct) = &doc.content_type {
        let essence = ct.split(';').next().unwrap_or("").trim().to_ascii_lowercase();
        if !essence.is_empty() && essence != "text/html" && essence != "application/xhtml+xml" {
            return Err(FetchError::NotHtml {
                url: url.to_owned(),
                content_type: ct.clone(),
            });
        }
    }
    Ok(doc)
}

pub(crate) fn http_get(url: &str, max_bytes: u64, limits: &FetchLimits) -> Result<RawDocument, FetchError> {
    let parsed = url::Url::parse(url).map_err(|e| FetchError::InvalidUrl {
        url: url.to_owned(),
        reason: e.to_string(),
    })?;
    if !matches!(parsed.scheme(), "http" | "https") {
        return Err(FetchError::InvalidUrl {
            url: url.to_owned(),
            reason: format!("unsupported scheme {:?}", parsed.scheme()),
        });
    }

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(limits.timeout_secs)))
        .max_redirects(limits.max_redirects)
        .http_status_as_error(false)
        .build()
        .into();

    let map_err = |e: ureq::Error| match e {
        ureq::Error::Timeout(_) => FetchError::Timeout { url: url.to_owned() },
        ureq::Error::TooManyRedirects => FetchError::TooManyRedirects {
            url: url.to_owned(),
            limit: limits.max_redirects,
        },
        ureq::Error::BodyExceedsLimit(_) => FetchError::TooLarge {
            url: url.to_owned(),
            limit: max_bytes,
        },
        other => FetchError::Network {
            url: url.to_owned(),
            reason: other.to_string(),
        },
    };

    let mut response = agent.get(parsed.as_str()).call().map_err(map_err)?;
    let status = response.status().as_u16();
    if !(200..300).contains(&status) {
        return Err(FetchError::Status {
            url: url.to_owned(),
            status,
        });
    }
    let final_url = response.get_uri().to_string();
    let content_type = response
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .map(str::to_owned);
    if let Some(len) = response
        .headers()
        .get("content-length")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
    {
        if len > max_bytes {
            return Err(FetchError::TooLarge {
                url: url.to_owned(),
                limit: max_bytes,
            });
        }
    }
    let bytes = response
        .body_mut()
        .with_config()
        .limit(max_bytes.saturating_add(1))
        .read_to_vec()
        .map_err(map_err)?;
    if bytes.len() as u64 > max_bytes {
        return Err(FetchError::TooLarge {
            url: url.to_owned(),
            limit: max_bytes,
        });
    }
    Ok(RawDocument {
        bytes,
        content_type,
        final_url,
    })
}
