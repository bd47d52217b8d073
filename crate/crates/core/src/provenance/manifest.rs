use std::collections::BTreeMap;

use serde_json::{Map, Value};

use super::jumbf::{self, Superbox};
use super::{origin_from_actions, EditAction, GeoPoint, IngestPath, OriginMethod, ProvenanceError, ProvenanceRecord};
use crate::time::{parse_timestamp, Precision};

/// Decodes the active (last) manifest of a JUMBF manifest store.
///
/// Recognised assertions populate the record; everything else lands in
/// `raw_fields`.
pub fn parse_manifest_store(store: &[u8]) -> Result<ProvenanceRecord, ProvenanceError> {
    if store.is_empty() {
        return Err(ProvenanceError::InvalidBox {
            label: "<root>".into(),
            reason: "empty manifest store".into(),
        });
    }
    let root = jumbf::parse_superbox(store)?;
    if root.description.uuid != jumbf::MANIFEST_STORE_UUID && root.label() != "c2pa" {
        return Err(ProvenanceError::InvalidBox {
            label: root.label().to_owned(),
            reason: "not a C2PA manifest store".into(),
        });
    }
    let manifests: Vec<&Superbox<'_>> = root
        .superboxes()
        .filter(|m| m.description.uuid == jumbf::MANIFEST_UUID || m.description.uuid == jumbf::UPDATE_MANIFEST_UUID)
        .collect();
    let active = *manifests.last().ok_or_else(|| ProvenanceError::InvalidBox {
        label: root.label().to_owned(),
        reason: "store holds no manifests".into(),
    })?;

    let mut record = ProvenanceRecord::empty(IngestPath::Embedded);
    record
        .raw_fields
        .insert("active_manifest".into(), Value::String(active.label().to_owned()));
    record
        .raw_fields
        .insert("manifest_count".into(), Value::from(manifests.len()));

    let mut claim_seen = false;
    let mut declared_origin = None;
    for child in active.superboxes() {
        let uuid = child.description.uuid;
        let label = child.label();
        if uuid == jumbf::CLAIM_UUID || label.starts_with("c2pa.claim") {
            let claim = decode_box(child)?;
            record.claim_generator = claim_generator(&claim);
            claim_seen = true;
        } else if uuid == jumbf::SIGNATURE_UUID || label == "c2pa.signature" {
            record.signature_present = true;
            record
                .raw_fields
                .insert("trust_status".into(), Value::String("unvalidated".into()));
        } else if uuid == jumbf::ASSERTION_STORE_UUID || label == "c2pa.assertions" {
            for assertion in child.superboxes() {
                if let Some(origin) = apply_assertion(&mut record, assertion)? {
                    declared_origin = Some(origin);
                }
            }
        } else {
            record
                .raw_fields
                .insert(format!("box:{label}"), Value::String("unrecognized".into()));
        }
    }
    if !claim_seen {
        return Err(ProvenanceError::InvalidBox {
            label: active.label().to_owned(),
            reason: "manifest has no claim".into(),
        });
    }

    record.origin_method = match (origin_from_actions(&record.actions), declared_origin) {
        (_, Some(OriginMethod::Generated)) => OriginMethod::Generated,
        (OriginMethod::Unknown, Some(other)) => other,
        (from_actions, _) => from_actions,
    };
    Ok(record)
}

fn base_label(label: &str) -> &str {
    // multiple instances are labelled `name__2`, `name__3`, ...
    match label.rsplit_once("__") {
        Some((base, n)) if n.chars().all(|c| c.is_ascii_digit()) => base,
        _ => label,
    }
}

fn apply_assertion(
    record: &mut ProvenanceRecord,
    assertion: &Superbox<'_>,
) -> Result<Option<OriginMethod>, ProvenanceError> {
    let label = assertion.label();
    let Some((box_type, payload)) = assertion.content() else {
        record
            .raw_fields
            .insert(format!("assertion:{label}"), Value::String("empty".into()));
        return Ok(None);
    };
    if box_type != *b"cbor" && box_type != *b"json" {
        record.raw_fields.insert(
            format!("assertion:{label}"),
            serde_json::json!({
                "box_type": String::from_utf8_lossy(&box_type),
                "length": payload.len(),
            }),
        );
        return Ok(None);
    }
    let value = decode_payload(label, payload)?;
    match base_label(label) {
        "c2pa.actions" | "c2pa.actions.v2" => {
            record.actions.extend(parse_actions(label, &value, &mut record.raw_fields)?);
            Ok(None)
        }
        "stds.exif" | "stds.iptc" | "stds.iptc.photo-metadata" => {
            apply_capture_metadata(record, &value);
            Ok(declared_source_type(&value))
        }
        "stds.schema-org.CreativeWork" => {
            if let Some(author) = value.get("author").or_else(|| value.get("creator")).and_then(names) {
                record.creator = Some(author);
            }
            Ok(declared_source_type(&value))
        }
        _ => {
            record.raw_fields.insert(format!("assertion:{label}"), value);
            Ok(None)
        }
    }
}

fn decode_box(superbox: &Superbox<'_>) -> Result<Value, ProvenanceError> {
    let label = superbox.label();
    let (_, payload) = superbox.content().ok_or_else(|| ProvenanceError::UndecodablePayload {
        label: label.to_owned(),
        reason: "no content box".into(),
    })?;
    decode_payload(label, payload)
}

/// JSON when the payload opens with `{` or `[`, CBOR otherwise.
fn decode_payload(label: &str, payload: &[u8]) -> Result<Value, ProvenanceError> {
    let undecodable = |reason: String| ProvenanceError::UndecodablePayload {
        label: label.to_owned(),
        reason,
    };
    let first = payload.iter().find(|b| !b.is_ascii_whitespace());
    match first {
        None => Err(undecodable("empty payload".into())),
        Some(b'{') | Some(b'[') => serde_json::from_slice(payload).map_err(|e| undecodable(e.to_string())),
        Some(_) => {
            let mut reader = payload;
            let value: ciborium::Value =
                ciborium::de::from_reader(&mut reader).map_err(|e| undecodable(e.to_string()))?;
            Ok(cbor_to_json(value))
        }
    }
}

fn cbor_to_json(value: ciborium::Value) -> Value {
    use ciborium::Value as C;
    match value {
        C::Integer(i) => {
            let wide = i128::from(i);
            if let Ok(v) = i64::try_from(wide) {
                Value::from(v)
            } else if let Ok(v) = u64::try_from(wide) {
                Value::from(v)
            } else {
                Value::String(wide.to_string())
            }
        }
        C::Bytes(b) => Value::String(hex::encode(b)),
        C::Float(f) => serde_json::Number::from_f64(f).map(Value::Number).unwrap_or(Value::Null),
        C::Text(s) => Value::String(s),
        C::Bool(b) => Value::Bool(b),
        C::Null => Value::Null,
        C::Tag(_, inner) => cbor_to_json(*inner),
        C::Array(items) => Value::Array(items.into_iter().map(cbor_to_json).collect()),
        C::Map(entries) => {
            let mut map = Map::new();
            for (k, v) in entries {
                let key = match k {
                    C::Text(s) => s,
                    other => cbor_to_json(other).to_string(),
                };
                map.insert(key, cbor_to_json(v));
            }
            Value::Object(map)
        }
        _ => Value::Null,
    }
}

fn claim_generator(claim: &Value) -> Option<String> {
    if let Some(s) = claim.get("claim_generator").and_then(Value::as_str) {
        return Some(s.to_owned());
    }
    let info = claim.get("claim_generator_info")?;
    let first = match info {
        Value::Array(items) => items.first()?,
        other => other,
    };
    let name = first.get("name")?.as_str()?;
    Some(match first.get("version").and_then(Value::as_str) {
        Some(v) => format!("{name}/{v}"),
        None => name.to_owned(),
    })
}

fn parse_actions(
    label: &str,
    value: &Value,
    raw_fields: &mut BTreeMap<String, Value>,
) -> Result<Vec<EditAction>, ProvenanceError> {
    let undecodable = |reason: &str| ProvenanceError::UndecodablePayload {
        label: label.to_owned(),
        reason: reason.to_owned(),
    };
    let list = value
        .get("actions")
        .and_then(Value::as_array)
        .ok_or_else(|| undecodable("missing `actions` array"))?;
    let mut actions = Vec::with_capacity(list.len());
    for (i, entry) in list.iter().enumerate() {
        let id = entry
            .get("action")
            .and_then(Value::as_str)
            .filter(|id| EditAction::is_valid_id(id))
            .ok_or_else(|| undecodable(&format!("action {i} has no valid `action` token")))?;
        let mut action = EditAction::new(id);
        if let Some(raw) = entry.get("when").and_then(Value::as_str) {
            match parse_timestamp(raw) {
                Some(t) => {
                    action.when = Some(t.instant);
                    if t.precision == Precision::Day {
                        raw_fields.insert(format!("action_{i}_when_precision"), Value::String("day".into()));
                    }
                }
                None => {
                    raw_fields.insert(format!("action_{i}_when_unparsed"), Value::String(raw.to_owned()));
                }
            }
        }
        action.software_agent = match entry.get("softwareAgent") {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Object(o)) => o.get("name").and_then(Value::as_str).map(|name| {
                match o.get("version").and_then(Value::as_str) {
                    Some(v) => format!("{name}/{v}"),
                    None => name.to_owned(),
                }
            }),
            _ => None,
        };
        action.digital_source_type = entry
            .get("digitalSourceType")
            .and_then(Value::as_str)
            .map(str::to_owned);
        if let Some(Value::Object(params)) = entry.get("parameters") {
            action.parameters = Some(params.iter().map(|(k, v)| (k.clone(), v.clone())).collect());
        }
        actions.push(action);
    }
    Ok(actions)
}

fn lookup<'v>(value: &'v Value, keys: &[&str]) -> Option<&'v Value> {
    keys.iter().find_map(|k| value.get(*k)).filter(|v| !v.is_null())
}

fn apply_capture_metadata(record: &mut ProvenanceRecord, value: &Value) {
    if let Some(raw) = lookup(value, &["exif:DateTimeOriginal", "DateTimeOriginal", "photoshop:DateCreated"])
        .and_then(Value::as_str)
    {
        let offset = lookup(value, &["exif:OffsetTimeOriginal", "OffsetTimeOriginal"]).and_then(Value::as_str);
        let parsed = parse_timestamp(raw).map(|t| match (t.assumed_utc, t.precision, offset) {
            (true, Precision::Second, Some(off)) => {
                let local = format!("{} {}", t.instant.format("%Y-%m-%dT%H:%M:%S"), off.trim());
                match chrono::DateTime::parse_from_str(&local, "%Y-%m-%dT%H:%M:%S %:z") {
                    Ok(dt) => crate::time::ParsedTime {
                        instant: dt.with_timezone(&chrono::Utc),
                        precision: Precision::Second,
                        assumed_utc: false,
                    },
                    Err(_) => t,
                }
            }
            _ => t,
        });
        match parsed {
            Some(t) => {
                record.capture_time = Some(t.instant);
                if t.precision == Precision::Day {
                    record
                        .raw_fields
                        .insert("capture_time_precision".into(), Value::String("day".into()));
                } else if t.assumed_utc {
                    record
                        .raw_fields
                        .insert("capture_time_zone".into(), Value::String("assumed UTC".into()));
                }
            }
            None => {
                record
                    .raw_fields
                    .insert("capture_time_unparsed".into(), Value::String(raw.to_owned()));
            }
        }
    }

    let lat = lookup(value, &["exif:GPSLatitude", "GPSLatitude"]).and_then(|v| {
        let r = lookup(value, &["exif:GPSLatitudeRef", "GPSLatitudeRef"]).and_then(Value::as_str);
        gps_coordinate(v, r)
    });
    let lon = lookup(value, &["exif:GPSLongitude", "GPSLongitude"]).and_then(|v| {
        let r = lookup(value, &["exif:GPSLongitudeRef", "GPSLongitudeRef"]).and_then(Value::as_str);
        gps_coordinate(v, r)
    });
    if let (Some(lat), Some(lon)) = (lat, lon) {
        match GeoPoint::new(lat, lon) {
            Ok(p) => record.capture_location = Some(p),
            Err(e) => {
                record
                    .raw_fields
                    .insert("capture_location_rejected".into(), Value::String(e));
            }
        }
    }

    if let Some(place) = lookup(value, &["Iptc4xmpCore:Location", "location"]).and_then(Value::as_str) {
        record.place_name = Some(place.to_owned());
    } else {
        let parts: Vec<&str> = ["photoshop:City", "photoshop:State", "photoshop:Country"]
            .iter()
            .filter_map(|k| value.get(*k).and_then(Value::as_str))
            .filter(|s| !s.trim().is_empty())
            .collect();
        if !parts.is_empty() {
            record.place_name = Some(parts.join(", "));
        }
    }
}

/// Reads `"2,10.25988S"`, `"2,10,15.6S"`, `"-2.170998"`, numbers and
/// `[deg, min, sec]` arrays; a reference of S or W negates.
fn gps_coordinate(value: &Value, reference: Option<&str>) -> Option<f64> {
    let (magnitude, inline_ref) = match value {
        Value::Number(n) => (n.as_f64()?, None),
        Value::Array(parts) => {
            let nums: Vec<f64> = parts.iter().map(Value::as_f64).collect::<Option<_>>()?;
            (dms(&nums)?, None)
        }
        Value::String(s) => {
            let s = s.trim();
            let (body, r) = match s.chars().last() {
                Some(c) if matches!(c.to_ascii_uppercase(), 'N' | 'S' | 'E' | 'W') => (&s[..s.len() - 1], Some(c)),
                _ => (s, None),
            };
            let nums: Vec<f64> = body
                .split(',')
                .map(|p| p.trim().parse::<f64>().ok())
                .collect::<Option<_>>()?;
            (dms(&nums)?, r)
        }
        _ => return None,
    };
    let negative = inline_ref
        .map(|c| matches!(c.to_ascii_uppercase(), 'S' | 'W'))
        .or_else(|| reference.map(|r| matches!(r.trim().to_ascii_uppercase().as_str(), "S" | "W")))
        .unwrap_or(false);
    let v = if negative { -magnitude.abs() } else { magnitude };
    v.is_finite().then_some(v)
}

fn dms(parts: &[f64]) -> Option<f64> {
    match parts {
        [d] => Some(*d),
        [d, m] => Some(d + m / 60.0),
        [d, m, s] => Some(d + m / 60.0 + s / 3600.0),
        _ => None,
    }
}

fn names(value: &Value) -> Option<String> {
    let collect = |v: &Value| -> Option<String> {
        match v {
            Value::String(s) => Some(s.clone()),
            Value::Object(o) => o.get("name").and_then(Value::as_str).map(str::to_owned),
            _ => None,
        }
    };
    let list: Vec<String> = match value {
        Value::Array(items) => items.iter().filter_map(collect).collect(),
        other => collect(other).into_iter().collect(),
    };
    (!list.is_empty()).then(|| list.join(", "))
}

fn declared_source_type(value: &Value) -> Option<OriginMethod> {
    lookup(value, &["Iptc4xmpExt:DigitalSourceType", "digitalSourceType"])
        .and_then(Value::as_str)
        .and_then(OriginMethod::from_digital_source_type)
}
