use std::path::{Path, PathBuf};

/// A `--media PATH[:CAPTION]` value. The last unescaped colon separates
/// the caption; `\:` and `\\` escape a colon or backslash.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediaArg {
    pub path: PathBuf,
    pub caption: Option<String>,
}

fn unescape(raw: &str) -> Result<String, String> {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some(e @ (':' | '\\')) => out.push(e),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => return Err("trailing backslash".into()),
            }
        } else {
            out.push(c);
        }
    }
    Ok(out)
}

pub fn parse_media_arg(raw: &str) -> Result<MediaArg, String> {
    let mut split = None;
    let mut escaped = false;
    for (i, c) in raw.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' => escaped = true,
            ':' => split = Some(i),
            _ => {}
        }
    }
    let (path, caption) = match split {
        Some(i) => (&raw[..i], Some(&raw[i + 1..])),
        None => (raw, None),
    };
    let path = unescape(path)?;
    if path.is_empty() {
        return Err("media path is empty".into());
    }
    let caption = caption.map(unescape).transpose()?.filter(|c| !c.trim().is_empty());
    Ok(MediaArg {
        path: PathBuf::from(path),
        caption,
    })
}

/// Absolute form of `path` without requiring it to exist.
pub fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_owned())
}
