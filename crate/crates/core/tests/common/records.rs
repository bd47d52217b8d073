#![allow(dead_code)]

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use provcheck_core::provenance::{origin_from_actions, EditAction, GeoPoint, IngestPath, ProvenanceRecord};
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};

pub const ACTION_POOL: &[&str] = &[
    "c2pa.created",
    "c2pa.opened",
    "c2pa.resized",
    "c2pa.cropped",
    "c2pa.edited",
    "c2pa.color_adjustments",
    "c2pa.placed",
    "c2pa.published",
    "c2pa.converted",
    "com.example.retouch",
];

pub const SOURCE_TYPES: &[&str] = &[
    "http://cv.iptc.org/newscodes/digitalsourcetype/digitalCapture",
    "http://cv.iptc.org/newscodes/digitalsourcetype/trainedAlgorithmicMedia",
    "http://cv.iptc.org/newscodes/digitalsourcetype/composite",
    "compositeSynthetic",
    "algorithmicMedia",
];

const TEXT_CHARS: &[char] = &['a', 'Z', ' ', '"', '\'', '\\', ',', ':', '\n', 'é', 'ß', '東', '-', '{', '}', '0'];

pub fn random_text<R: Rng>(rng: &mut R) -> String {
    let len = rng.random_range(1..24);
    let s: String = (0..len).map(|_| *TEXT_CHARS.choose(rng).unwrap()).collect();
    if s.trim().is_empty() {
        format!("x{s}")
    } else {
        s
    }
}

fn maybe<R: Rng, T>(rng: &mut R, f: impl FnOnce(&mut R) -> T) -> Option<T> {
    if rng.random_bool(0.5) {
        Some(f(rng))
    } else {
        None
    }
}

fn random_time<R: Rng>(rng: &mut R) -> chrono::DateTime<Utc> {
    let secs = rng.random_range(946_684_800i64..1_924_992_000);
    Utc.timestamp_opt(secs, 0).unwrap()
}

fn random_parameters<R: Rng>(rng: &mut R) -> BTreeMap<String, Value> {
    let n = rng.random_range(1..4);
    (0..n)
        .map(|i| {
            let v = match rng.random_range(0..3) {
                0 => json!(rng.random_range(-1000i64..1000)),
                1 => json!(rng.random_bool(0.5)),
                _ => json!(random_text(rng)),
            };
            (format!("p{i}"), v)
        })
        .collect()
}

fn random_action<R: Rng>(rng: &mut R) -> EditAction {
    let mut a = EditAction::new(*ACTION_POOL.choose(rng).unwrap());
    a.when = maybe(rng, random_time);
    a.software_agent = maybe(rng, random_text);
    if rng.random_bool(0.2) {
        a.digital_source_type = Some(SOURCE_TYPES.choose(rng).unwrap().to_string());
    }
    a.parameters = maybe(rng, random_parameters);
    a
}

/// A record the manifest writer can represent: origin follows from the
/// action list, raw fields are empty.
pub fn random_record<R: Rng>(rng: &mut R) -> ProvenanceRecord {
    let mut r = ProvenanceRecord::empty(IngestPath::Embedded);
    r.capture_time = maybe(rng, random_time);
    r.capture_location = maybe(rng, |rng| {
        GeoPoint::new(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0)).unwrap()
    });
    r.place_name = maybe(rng, random_text);
    r.creator = maybe(rng, random_text);
    r.claim_generator = maybe(rng, random_text);
    let n = rng.random_range(0..=10);
    r.actions = (0..n).map(|_| random_action(rng)).collect();
    r.origin_method = origin_from_actions(&r.actions);
    r.signature_present = rng.random_bool(0.5);
    r
}
