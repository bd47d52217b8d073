use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{origin_from_actions, EditAction, GeoPoint, IngestPath, OriginMethod, ProvenanceError, ProvenanceRecord};
use crate::time::{parse_timestamp, Precision};

const TOP_KEYS: &[&str] = &["claim_generator", "signature_present", "creator", "capture", "origin_method", "actions"];
const CAPTURE_KEYS: &[&str] = &["when", "latitude", "longitude", "place_name"];
const ACTION_KEYS: &[&str] = &["action", "when", "software_agent", "parameters"];

/// `<dir>/<stem>.c2pa.json` beside a media file.
pub fn sidecar_path_for(media: &Path) -> PathBuf {
    let stem = media.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    media.with_file_name(format!("{stem}.c2pa.json"))
}

pub fn load_sidecar_str(text: &str) -> Result<ProvenanceRecord, ProvenanceError> {
    let value: Value = serde_json::from_str(text).map_err(|e| invalid("$", e.to_string()))?;
    load_sidecar(&value)
}

fn invalid(field: &str, reason: impl Into<String>) -> ProvenanceError {
    ProvenanceError::InvalidSidecar {
        field: field.to_owned(),
        reason: reason.into(),
    }
}

fn opt_string(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<String>, ProvenanceError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(invalid(path, "expected a string")),
    }
}

fn opt_time(
    obj: &Map<String, Value>,
    key: &str,
    path: &str,
    raw_fields: &mut BTreeMap<String, Value>,
) -> Result<Option<chrono::DateTime<chrono::Utc>>, ProvenanceError> {
    let Some(raw) = opt_string(obj, key, path)? else {
        return Ok(None);
    };
    let parsed = parse_timestamp(&raw).ok_or_else(|| invalid(path, format!("{raw:?} is not an ISO-8601 timestamp")))?;
    if parsed.precision == Precision::Day {
        raw_fields.insert(format!("{path}_precision"), Value::String("day".into()));
    }
    Ok(Some(parsed.instant))
}

fn opt_number(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<f64>, ProvenanceError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_f64().map(Some).ok_or_else(|| invalid(path, "expected a number")),
    }
}

fn keep_unknown(obj: &Map<String, Value>, known: &[&str], prefix: &str, raw_fields: &mut BTreeMap<String, Value>) {
    for (k, v) in obj {
        if !known.contains(&k.as_str()) {
            raw_fields.insert(format!("{prefix}{k}"), v.clone());
        }
    }
}

/// Maps a sidecar manifest report onto a record. Unknown keys are kept in
/// `raw_fields` under their dotted path.
pub fn load_sidecar(document: &Value) -> Result<ProvenanceRecord, ProvenanceError> {
    let obj = document.as_object().ok_or_else(|| invalid("$", "expected a JSON object"))?;
    let mut record = ProvenanceRecord::empty(IngestPath::Sidecar);
    keep_unknown(obj, TOP_KEYS, "", &mut record.raw_fields);

    record.claim_generator = opt_string(obj, "claim_generator", "claim_generator")?;
    record.creator = opt_string(obj, "creator", "creator")?;
    record.signature_present = match obj.get("signature_present") {
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(invalid("signature_present", "expected a boolean")),
        None => return Err(invalid("signature_present", "required field is missing")),
    };
    if record.signature_present {
        record
            .raw_fields
            .insert("trust_status".into(), Value::String("unvalidated".into()));
    }

    match obj.get("capture") {
        None | Some(Value::Null) => {}
        Some(Value::Object(capture)) => {
            keep_unknown(capture, CAPTURE_KEYS, "capture.", &mut record.raw_fields);
            record.capture_time = opt_time(capture, "when", "capture.when", &mut record.raw_fields)?;
            record.place_name = opt_string(capture, "place_name", "capture.place_name")?;
            let lat = opt_number(capture, "latitude", "capture.latitude")?;
            let lon = opt_number(capture, "longitude", "capture.longitude")?;
            if let Some(lat) = lat {
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(invalid("capture.latitude", format!("{lat} is outside [-90, 90]")));
                }
            }
            if let Some(lon) = lon {
                if !(-180.0..=180.0).contains(&lon) {
                    return Err(invalid("capture.longitude", format!("{lon} is outside [-180, 180]")));
                }
            }
            record.capture_location = match (lat, lon) {
                (Some(lat), Some(lon)) => Some(GeoPoint::new(lat, lon).map_err(|e| invalid("capture", e))?),
                (None, None) => None,
                (Some(_), None) => return Err(invalid("capture.longitude", "required when latitude is given")),
                (None, Some(_)) => return Err(invalid("capture.latitude", "required when longitude is given")),
            };
        }
        Some(_) => return Err(invalid("capture", "expected an object")),
    }

    let declared = match obj.get("origin_method") {
        Some(Value::String(s)) => match s.as_str() {
            "captured" => OriginMethod::Captured,
            "generated" => OriginMethod::Generated,
            "composited" => OriginMethod::Composited,
            "unknown" => OriginMethod::Unknown,
            other => return Err(invalid("origin_method", format!("unknown origin method {other:?}"))),
        },
        Some(_) => return Err(invalid("origin_method", "expected a string")),
        None => return Err(invalid("origin_method", "required field is missing")),
    };

    let actions = match obj.get("actions") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(invalid("actions", "expected an array")),
        None => return Err(invalid("actions", "required field is missing")),
    };
    for (i, entry) in actions.iter().enumerate() {
        let path = format!("actions[{i}]");
        let entry = entry.as_object().ok_or_else(|| invalid(&path, "expected an object"))?;
        keep_unknown(entry, ACTION_KEYS, &format!("{path}."), &mut record.raw_fields);
        let id = opt_string(entry, "action", &format!("{path}.action"))?
            .ok_or_else(|| invalid(&format!("{path}.action"), "required field is missing"))?;
        if !EditAction::is_valid_id(&id) {
            return Err(invalid(&format!("{path}.action"), format!("{id:?} is not a dot-separated token")));
        }
        let mut action = EditAction::new(id);
        action.when = opt_time(entry, "when", &format!("{path}.when"), &mut record.raw_fields)?;
        action.software_agent = opt_string(entry, "software_agent", &format!("{path}.software_agent"))?;
        action.parameters = match entry.get("parameters") {
            None | Some(Value::Null) => None,
            Some(Value::Object(p)) => Some(p.iter().map(|(k, v)| (k.clone(), v.clone())).collect()),
            Some(_) => return Err(invalid(&format!("{path}.parameters"), "expected an object")),
        };
        record.actions.push(action);
    }

    record.origin_method = declared;
    if declared != OriginMethod::Generated && origin_from_actions(&record.actions) == OriginMethod::Generated {
        record.origin_method = OriginMethod::Generated;
        record.raw_fields.insert(
            "origin_method_declared".into(),
            Value::String(declared.as_str().to_owned()),
        );
    }
    Ok(record)
}
