use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OverallLabel {
    #[serde(rename = "RELEVANT")]
    Relevant,
    #[serde(rename = "NOT RELEVANT")]
    NotRelevant,
}

impl OverallLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Relevant => "RELEVANT",
            Self::NotRelevant => "NOT RELEVANT",
        }
    }

    /// Case-insensitive; `_` and `-` are read as spaces.
    pub fn parse(raw: &str) -> Option<Self> {
        let norm = raw
            .replace(['_', '-'], " ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_uppercase();
        match norm.as_str() {
            "RELEVANT" => Some(Self::Relevant),
            "NOT RELEVANT" => Some(Self::NotRelevant),
            _ => None,
        }
    }
}

/// The model's structured verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assessment {
    pub origin_relevant: bool,
    pub origin_reason: String,
    pub edits_relevant: bool,
    pub edits_reason: String,
    pub overall: OverallLabel,
    pub raw_model_output: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerdictError {
    #[error("no JSON object found")]
    NoJsonObject,
    #[error("invalid JSON object: {0}")]
    InvalidJson(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidField { key: &'static str, reason: String },
    #[error("`3-assessment` must be 'RELEVANT' or 'NOT RELEVANT', got {0:?}")]
    InvalidLabel(String),
}

const MAX_START_ATTEMPTS: usize = 16;

/// Byte range of the first balanced `{...}` region, honouring single- and
/// double-quoted strings with backslash escapes.
pub(crate) fn find_object(text: &str) -> Option<(usize, usize)> {
    let bytes = text.as_bytes();
    let starts = bytes.iter().enumerate().filter(|(_, b)| **b == b'{').map(|(i, _)| i);
    for start in starts.take(MAX_START_ATTEMPTS) {
        let mut depth = 0usize;
        let mut quote: Option<u8> = None;
        let mut escaped = false;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if let Some(q) = quote {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == q {
                    quote = None;
                }
                continue;
            }
            match b {
                b'"' | b'\'' => quote = Some(b),
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        return Some((start, i + 1));
                    }
                }
                _ => {}
            }
        }
    }
    None
}

/// Rewrites Python literal syntax into JSON: `True`/`False`/`None`,
/// single-quoted strings, trailing commas.
fn normalize_python(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len());
    let mut i = 0;
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' => {
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    out.push(d);
                    i += 1;
                    if d == '\\' && i < chars.len() {
                        out.push(chars[i]);
                        i += 1;
                    } else if d == '"' {
                        break;
                    }
                }
            }
            '\'' => {
                out.push('"');
                i += 1;
                while i < chars.len() {
                    let d = chars[i];
                    i += 1;
                    match d {
                        '\\' if i < chars.len() => {
                            let e = chars[i];
                            i += 1;
                            if e == '\'' {
                                out.push('\'');
                            } else {
                                out.push('\\');
                                out.push(e);
                            }
                        }
                        '\'' => break,
                        '"' => out.push_str("\\\""),
                        other => out.push(other),
                    }
                }
                out.push('"');
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !matches!(next, Some('}') | Some(']')) {
                    out.push(',');
                }
                i += 1;
            }
            _ if c.is_alphabetic() && (i == 0 || !is_word(chars[i - 1])) => {
                let end = (i..chars.len()).find(|&j| !is_word(chars[j])).unwrap_or(chars.len());
                let word: String = chars[i..end].iter().collect();
                out.push_str(match word.as_str() {
                    "True" => "true",
                    "False" => "false",
                    "None" => "null",
                    other => other,
                });
                i = end;
            }
            _ => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}

fn required<'a>(obj: &'a Map<String, Value>, key: &'static str) -> Result<&'a Value, VerdictError> {
    obj.get(key).ok_or(VerdictError::MissingKey(key))
}

fn flag(obj: &Map<String, Value>, key: &'static str) -> Result<bool, VerdictError> {
    match required(obj, key)? {
        Value::Bool(b) => Ok(*b),
        Value::String(s) => match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" => Ok(true),
            "false" | "no" => Ok(false),
            _ => Err(VerdictError::InvalidField {
                key,
                reason: format!("expected a boolean, got {s:?}"),
            }),
        },
        other => Err(VerdictError::InvalidField {
            key,
            reason: format!("expected a boolean, got {other}"),
        }),
    }
}

fn reason(obj: &Map<String, Value>, key: &'static str) -> Result<String, VerdictError> {
    match required(obj, key)? {
        Value::String(s) if !s.trim().is_empty() => Ok(s.clone()),
        _ => Err(VerdictError::InvalidField {
            key,
            reason: "expected a non-empty string".into(),
        }),
    }
}

/// Extracts the verdict object from free-form model output.
pub fn parse_assessment(model_output: &str) -> Result<Assessment, VerdictError> {
    let (start, end) = find_object(model_output).ok_or(VerdictError::NoJsonObject)?;
    let json = normalize_python(&model_output[start..end]);
    let value: Value = serde_json::from_str(&json).map_err(|e| VerdictError::InvalidJson(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| VerdictError::InvalidJson("not an object".into()))?;

    let origin_relevant = flag(obj, "1-relevant")?;
    let origin_reason = reason(obj, "1-reason")?;
    let edits_relevant = flag(obj, "2-relevant")?;
    let edits_reason = reason(obj, "2-reason")?;
    let overall = match required(obj, "3-assessment")? {
        Value::String(s) => OverallLabel::parse(s).ok_or_else(|| VerdictError::InvalidLabel(s.clone()))?,
        other => return Err(VerdictError::InvalidLabel(other.to_string())),
    };
    Ok(Assessment {
        origin_relevant,
        origin_reason,
        edits_relevant,
        edits_reason,
        overall,
        raw_model_output: model_output.to_owned(),
    })
}

fn python_str(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

fn python_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

impl Assessment {
    /// The verdict in the prompt's Python-dictionary style.
    pub fn to_python_literal(&self) -> String {
        format!(
            "{{'1-relevant': {}, '1-reason': {}, '2-relevant': {}, '2-reason': {}, '3-assessment': {}}}",
            python_bool(self.origin_relevant),
            python_str(&self.origin_reason),
            python_bool(self.edits_relevant),
            python_str(&self.edits_reason),
            python_str(self.overall.as_str()),
        )
    }

    /// The verdict as a strict JSON object.
    pub fn to_strict_json(&self) -> String {
        serde_json::json!({
            "1-relevant": self.origin_relevant,
            "1-reason": self.origin_reason,
            "2-relevant": self.edits_relevant,
            "2-reason": self.edits_reason,
            "3-assessment": self.overall.as_str(),
        })
        .to_string()
    }

    /// Equal verdicts, ignoring the raw text they were parsed from.
    pub fn same_verdict(&self, other: &Assessment) -> bool {
        self.origin_relevant == other.origin_relevant
            && self.origin_reason == other.origin_reason
            && self.edits_relevant == other.edits_relevant
            && self.edits_reason == other.edits_reason
            && self.overall == other.overall
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PY_STYLE: &str = "{'1-relevant': True, '1-reason': 'a', '2-relevant': False, '2-reason': 'b', '3-assessment': 'NOT RELEVANT'}";

    #[test]
    fn python_literal_block() {
        let a = parse_assessment(PY_STYLE).unwrap();
        assert!(a.origin_relevant);
        assert!(!a.edits_relevant);
        assert_eq!(a.overall, OverallLabel::NotRelevant);
        assert_eq!(a.origin_reason, "a");
        assert_eq!(a.raw_model_output, PY_STYLE);
    }

    #[test]
    fn prose_wrapped_object() {
        let text = "Sure! Here is my analysis: { \"1-relevant\": true, \"1-reason\": \"x {y}\", \"2-relevant\": true, \
                    \"2-reason\": \"z\", \"3-assessment\": \"relevant\" } Hope this helps.";
        let a = parse_assessment(text).unwrap();
        assert_eq!(a.origin_reason, "x {y}");
        assert_eq!(a.overall, OverallLabel::Relevant);
    }

    #[test]
    fn named_errors() {
        assert_eq!(parse_assessment("no json here"), Err(VerdictError::NoJsonObject));
        assert_eq!(parse_assessment("{'1-relevant': True}"), Err(VerdictError::MissingKey("1-reason")));
        let bad = PY_STYLE.replace("'NOT RELEVANT'", "'MAYBE'");
        assert_eq!(parse_assessment(&bad), Err(VerdictError::InvalidLabel("MAYBE".into())));
        assert!(matches!(parse_assessment("{oops}"), Err(VerdictError::InvalidJson(_))));
    }

    #[test]
    fn python_quirks() {
        let text = "{'1-relevant': True, '1-reason': 'It\\'s from \"2016\"', '2-relevant': None, \
                    '2-reason': 'b', '3-assessment': 'not_relevant',}";
        match parse_assessment(text) {
            Err(VerdictError::InvalidField { key: "2-relevant", .. }) => {}
            other => panic!("{other:?}"),
        }
        let fixed = text.replace("None", "False");
        let a = parse_assessment(&fixed).unwrap();
        assert_eq!(a.origin_reason, "It's from \"2016\"");
        assert_eq!(a.overall, OverallLabel::NotRelevant);
    }

    #[test]
    fn label_normalization() {
        assert_eq!(OverallLabel::parse(" not  relevant "), Some(OverallLabel::NotRelevant));
        assert_eq!(OverallLabel::parse("Not-Relevant"), Some(OverallLabel::NotRelevant));
        assert_eq!(OverallLabel::parse("IRRELEVANT"), None);
    }

    fn arb_assessment() -> impl Strategy<Value = Assessment> {
        (any::<bool>(), "\\PC{1,40}", any::<bool>(), "[ -~\n\t]{1,40}", any::<bool>()).prop_filter_map(
            "reasons must be non-blank",
            |(o, r1, e, r2, rel)| {
                (!r1.trim().is_empty() && !r2.trim().is_empty()).then(|| Assessment {
                    origin_relevant: o,
                    origin_reason: r1,
                    edits_relevant: e,
                    edits_reason: r2,
                    overall: if rel { OverallLabel::Relevant } else { OverallLabel::NotRelevant },
                    raw_model_output: String::new(),
                })
            },
        )
    }

    proptest! {
        #[test]
        fn python_style_round_trips(a in arb_assessment()) {
            let parsed = parse_assessment(&a.to_python_literal()).unwrap();
            prop_assert!(parsed.same_verdict(&a));
        }

        #[test]
        fn strict_json_round_trips(a in arb_assessment()) {
            let parsed = parse_assessment(&a.to_strict_json()).unwrap();
            prop_assert!(parsed.same_verdict(&a));
        }

        #[test]
        fn never_panics(s in "\\PC{0,200}") {
            let _ = parse_assessment(&s);
        }
    }
}
