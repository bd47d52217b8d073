//! Manifest writer used to author fixtures and drive round-trip tests.
//!
//! Produces structurally valid C2PA manifest stores but no real hashes or
//! signatures; it is not meant for production manifests.

use serde_json::{json, Value};

use super::jumbf::{
    encode_box, encode_superbox, ASSERTION_STORE_UUID, CBOR_UUID, CLAIM_UUID, EMBEDDED_FILE_UUID, JSON_UUID,
    MANIFEST_STORE_UUID, MANIFEST_UUID, SIGNATURE_UUID,
};
use super::ProvenanceRecord;
use crate::time::format_utc;

/// Largest APP11 payload: 65535 minus the 2-byte length field.
pub const MAX_APP11_PAYLOAD: usize = 65_533;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadEncoding {
    Cbor,
    Json,
}

#[derive(Debug, Clone)]
pub struct WriterOptions {
    pub encoding: PayloadEncoding,
    pub manifest_label: String,
    /// Size of an embedded thumbnail-style binary assertion, 0 for none.
    pub padding_bytes: usize,
    pub extra_assertions: Vec<(String, Value)>,
    /// Written as an earlier manifest in the store.
    pub ingredient: Option<ProvenanceRecord>,
}

impl Default for WriterOptions {
    fn default() -> Self {
        Self {
            encoding: PayloadEncoding::Cbor,
            manifest_label: "urn:uuid:3f0c5b1e-7a51-4c1e-9d0b-2f6a8c4e1d20".into(),
            padding_bytes: 0,
            extra_assertions: Vec::new(),
            ingredient: None,
        }
    }
}

fn payload(value: &Value, encoding: PayloadEncoding) -> Vec<u8> {
    match encoding {
        PayloadEncoding::Json => {
            encode_box(*b"json", &serde_json::to_vec(value).expect("json values serialize"))
        }
        PayloadEncoding::Cbor => {
            let mut out = Vec::new();
            ciborium::into_writer(value, &mut out).expect("cbor encoding into a Vec");
            encode_box(*b"cbor", &out)
        }
    }
}

fn assertion(label: &str, value: &Value, encoding: PayloadEncoding) -> Vec<u8> {
    let uuid = match encoding {
        PayloadEncoding::Cbor => CBOR_UUID,
        PayloadEncoding::Json => JSON_UUID,
    };
    encode_superbox(uuid, label, &[payload(value, encoding)])
}

/// `D,M.MMMMMMMMR` as written by XMP EXIF.
fn xmp_gps(value: f64, positive: char, negative: char) -> String {
    let r = if value < 0.0 { negative } else { positive };
    let abs = value.abs();
    let deg = abs.trunc();
    format!("{},{:.8}{}", deg as u32, (abs - deg) * 60.0, r)
}

fn manifest(record: &ProvenanceRecord, label: &str, opts: &WriterOptions) -> Vec<u8> {
    let enc = opts.encoding;
    let mut assertions: Vec<(String, Vec<u8>)> = Vec::new();

    if !record.actions.is_empty() {
        let actions: Vec<Value> = record
            .actions
            .iter()
            .map(|a| {
                let mut obj = serde_json::Map::new();
                obj.insert("action".into(), json!(a.action_id));
                if let Some(when) = &a.when {
                    obj.insert("when".into(), json!(format_utc(when)));
                }
                if let Some(agent) = &a.software_agent {
                    obj.insert("softwareAgent".into(), json!(agent));
                }
                if let Some(dst) = &a.digital_source_type {
                    obj.insert("digitalSourceType".into(), json!(dst));
                }
                if let Some(params) = &a.parameters {
                    obj.insert("parameters".into(), json!(params));
                }
                Value::Object(obj)
            })
            .collect();
        let label = "c2pa.actions".to_owned();
        let bytes = assertion(&label, &json!({ "actions": actions }), enc);
        assertions.push((label, bytes));
    }

    if record.capture_time.is_some() || record.capture_location.is_some() {
        let mut exif = serde_json::Map::new();
        exif.insert("@context".into(), json!({ "exif": "http://ns.adobe.com/exif/1.0/" }));
        if let Some(t) = &record.capture_time {
            exif.insert("exif:DateTimeOriginal".into(), json!(format_utc(t)));
        }
        if let Some(p) = &record.capture_location {
            exif.insert("exif:GPSLatitude".into(), json!(xmp_gps(p.latitude(), 'N', 'S')));
            exif.insert("exif:GPSLongitude".into(), json!(xmp_gps(p.longitude(), 'E', 'W')));
        }
        let label = "stds.exif".to_owned();
        let bytes = assertion(&label, &Value::Object(exif), enc);
        assertions.push((label, bytes));
    }

    if let Some(place) = &record.place_name {
        let label = "stds.iptc".to_owned();
        let bytes = assertion(&label, &json!({ "Iptc4xmpCore:Location": place }), enc);
        assertions.push((label, bytes));
    }

    if let Some(creator) = &record.creator {
        let label = "stds.schema-org.CreativeWork".to_owned();
        let value = json!({
            "@context": "https://schema.org",
            "@type": "CreativeWork",
            "author": [{ "@type": "Person", "name": creator }],
        });
        let bytes = assertion(&label, &value, enc);
        assertions.push((label, bytes));
    }

    if opts.padding_bytes > 0 {
        let label = "c2pa.thumbnail.claim.jpeg".to_owned();
        let mut bfdb = vec![0x00];
        bfdb.extend_from_slice(b"image/jpeg\0");
        let filler: Vec<u8> = (0..opts.padding_bytes).map(|i| (i % 251) as u8).collect();
        let bytes = encode_superbox(
            EMBEDDED_FILE_UUID,
            &label,
            &[encode_box(*b"bfdb", &bfdb), encode_box(*b"bidb", &filler)],
        );
        assertions.push((label, bytes));
    }

    for (label, value) in &opts.extra_assertions {
        assertions.push((label.clone(), assertion(label, value, enc)));
    }

    let mut claim = serde_json::Map::new();
    if let Some(generator) = &record.claim_generator {
        claim.insert("claim_generator".into(), json!(generator));
    }
    claim.insert("dc:format".into(), json!("image/jpeg"));
    claim.insert("instanceID".into(), json!(format!("xmp:iid:{label}")));
    claim.insert("alg".into(), json!("sha256"));
    claim.insert(
        "assertions".into(),
        Value::Array(
            assertions
                .iter()
                .map(|(l, _)| json!({ "url": format!("self#jumbf=c2pa.assertions/{l}") }))
                .collect(),
        ),
    );

    let store = encode_superbox(
        ASSERTION_STORE_UUID,
        "c2pa.assertions",
        &assertions.into_iter().map(|(_, b)| b).collect::<Vec<_>>(),
    );
    let claim_box = encode_superbox(CLAIM_UUID, "c2pa.claim", &[payload(&Value::Object(claim), enc)]);
    let mut children = vec![store, claim_box];
    if record.signature_present {
        let mut sig = Vec::new();
        ciborium::into_writer(&ciborium::Value::Bytes(vec![0u8; 64]), &mut sig).expect("cbor into Vec");
        children.push(encode_superbox(SIGNATURE_UUID, "c2pa.signature", &[encode_box(*b"cbor", &sig)]));
    }
    encode_superbox(MANIFEST_UUID, label, &children)
}

/// Serializes `record` (plus optional ingredient manifest) as a JUMBF manifest store.
pub fn build_manifest_store(record: &ProvenanceRecord, opts: &WriterOptions) -> Vec<u8> {
    let mut manifests = Vec::new();
    if let Some(ingredient) = &opts.ingredient {
        manifests.push(manifest(ingredient, "urn:uuid:00000000-0000-4000-8000-000000000001", opts));
    }
    manifests.push(manifest(record, &opts.manifest_label, opts));
    encode_superbox(MANIFEST_STORE_UUID, "c2pa", &manifests)
}

/// Splits a manifest store into complete APP11 marker segments
/// (`FF EB`, length, `JP`, instance, sequence, data).
pub fn app11_segments(store: &[u8], max_payload: usize, instance: u16) -> Vec<Vec<u8>> {
    assert!(store.len() >= 8 && max_payload > 16);
    let header = &store[..8];
    let mut segments = Vec::new();
    let mut rest = store;
    let mut sequence = 1u32;
    while !rest.is_empty() {
        let mut payload = b"JP".to_vec();
        payload.extend_from_slice(&instance.to_be_bytes());
        payload.extend_from_slice(&sequence.to_be_bytes());
        if sequence > 1 {
            payload.extend_from_slice(header);
        }
        let take = (max_payload - payload.len()).min(rest.len());
        payload.extend_from_slice(&rest[..take]);
        rest = &rest[take..];

        let mut segment = vec![0xFF, 0xEB];
        segment.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
        segment.extend_from_slice(&payload);
        segments.push(segment);
        sequence += 1;
    }
    segments
}

/// Inserts segments right after SOI.
pub fn insert_segments_after_soi(jpeg: &[u8], segments: &[Vec<u8>]) -> Vec<u8> {
    assert!(jpeg.starts_with(&[0xFF, 0xD8]));
    let mut out = jpeg[..2].to_vec();
    for s in segments {
        out.extend_from_slice(s);
    }
    out.extend_from_slice(&jpeg[2..]);
    out
}

/// SOI followed by EOI.
pub fn minimal_jpeg() -> Vec<u8> {
    vec![0xFF, 0xD8, 0xFF, 0xD9]
}

/// Writes `record` into `jpeg` as APP11 segments.
pub fn embed_in_jpeg(jpeg: &[u8], record: &ProvenanceRecord, opts: &WriterOptions) -> Vec<u8> {
    let store = build_manifest_store(record, opts);
    insert_segments_after_soi(jpeg, &app11_segments(&store, MAX_APP11_PAYLOAD, 0x0211))
}

/// Inserts a `caBX` chunk after IHDR.
pub fn embed_in_png(png: &[u8], store: &[u8]) -> Vec<u8> {
    let ihdr_end = 8 + 8 + 13 + 4;
    assert!(png.len() >= ihdr_end && &png[12..16] == b"IHDR");
    let mut out = png[..ihdr_end].to_vec();
    out.extend_from_slice(&(store.len() as u32).to_be_bytes());
    out.extend_from_slice(b"caBX");
    out.extend_from_slice(store);
    // CRC is not checked by the reader
    out.extend_from_slice(&[0, 0, 0, 0]);
    out.extend_from_slice(&png[ihdr_end..]);
    out
}
