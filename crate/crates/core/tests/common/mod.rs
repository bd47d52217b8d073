#![allow(dead_code)]

pub mod http;
pub mod records;

use std::path::PathBuf;

use chrono::{TimeZone, Utc};
use provcheck_core::ingest::{Article, MediaItem, MediaKind};
use provcheck_core::provenance::{EditAction, GeoPoint, IngestPath, OriginMethod, ProvenanceRecord};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory exists")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures_dir().join(rel)
}

/// The record authored into `media/ecuador.jpg`.
pub fn ecuador_record() -> ProvenanceRecord {
    let mut r = ProvenanceRecord::empty(IngestPath::Embedded);
    r.capture_time = Some(Utc.with_ymd_and_hms(2016, 4, 17, 14, 3, 0).unwrap());
    r.capture_location = Some(GeoPoint::new(-2.170998, -79.922359).unwrap());
    r.place_name = Some("Guayaquil, Ecuador".into());
    r.creator = Some("M. Paredes".into());
    r.claim_generator = Some("FieldCam/2.4 c2pa-rs/0.28".into());
    r.origin_method = OriginMethod::Captured;
    r.signature_present = true;
    let mut created = EditAction::new("c2pa.created");
    created.when = r.capture_time;
    created.software_agent = Some("FieldCam/2.4".into());
    r.actions.push(created);
    r
}

/// The structured NYC article with the Ecuador-sourced photo attached.
pub fn nyc_article() -> Article {
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("articles/nyc_2020.json")).unwrap()).unwrap();
    let mut article = Article::new(doc["title"].as_str().unwrap(), doc["body"].as_str().unwrap());
    for m in doc["media"].as_array().unwrap() {
        let locator = fixture(m["locator"].as_str().unwrap());
        let mut item = MediaItem::new(locator.to_string_lossy(), MediaKind::Image);
        if let Some(c) = m["caption"].as_str() {
            item = item.with_caption(c);
        }
        article.media.push(item);
    }
    article
}
