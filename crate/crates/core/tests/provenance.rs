mod common;

use common::fixture;
use common::records::random_record;
use proptest::prelude::*;
use provcheck_core::provenance::writer::{
    app11_segments, build_manifest_store, embed_in_jpeg, embed_in_png, insert_segments_after_soi, minimal_jpeg,
    PayloadEncoding, WriterOptions, MAX_APP11_PAYLOAD,
};
use provcheck_core::provenance::{
    extract_embedded_manifest, filter_fields, load_sidecar_str, parse_manifest_store, render_summary,
    ContainerFormat, EditAction, IngestPath, OriginMethod, ProvenanceError, ProvenanceRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Reassembles APP11 payloads by walking the file with fixed offsets:
/// marker (2) + length (2) + "JP" (2) + instance (2) + sequence (4), then
/// the 8-byte box header repeated on every packet after the first.
fn oracle_concat(jpeg: &[u8]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut off = 2;
    let mut first = true;
    while jpeg[off] == 0xFF && jpeg[off + 1] == 0xEB {
        let len = u16::from_be_bytes([jpeg[off + 2], jpeg[off + 3]]) as usize;
        let seg_end = off + 2 + len;
        let data_start = off + 4 + 8 + if first { 0 } else { 8 };
        out.extend_from_slice(&jpeg[data_start..seg_end]);
        first = false;
        off = seg_end;
    }
    out
}

#[test]
fn hundred_kib_manifest_over_two_segments() {
    let opts = WriterOptions {
        padding_bytes: 100 * 1024,
        ..WriterOptions::default()
    };
    let store = build_manifest_store(&common::ecuador_record(), &opts);
    assert!(store.len() >= 100 * 1024);
    let segments = app11_segments(&store, MAX_APP11_PAYLOAD, 7);
    assert_eq!(segments.len(), 2);
    let jpeg = insert_segments_after_soi(&minimal_jpeg(), &segments);

    let by_offsets = oracle_concat(&jpeg);
    assert_eq!(by_offsets, store);
    let extracted = extract_embedded_manifest(&jpeg, ContainerFormat::Jpeg).unwrap().unwrap();
    assert_eq!(extracted, by_offsets);
}

#[test]
fn soi_eoi_is_absent() {
    assert_eq!(extract_embedded_manifest(&minimal_jpeg(), ContainerFormat::Jpeg), Ok(None));
    let plain = std::fs::read(fixture("media/plain.jpg")).unwrap();
    assert_eq!(extract_embedded_manifest(&plain, ContainerFormat::Jpeg), Ok(None));
}

#[test]
fn overlong_segment_is_reported_at_its_offset() {
    let store = build_manifest_store(&common::ecuador_record(), &WriterOptions::default());
    let mut jpeg = insert_segments_after_soi(&minimal_jpeg(), &app11_segments(&store, MAX_APP11_PAYLOAD, 1));
    // declare more bytes than remain
    jpeg[4] = 0xFF;
    jpeg[5] = 0xFF;
    jpeg.truncate(200);
    match extract_embedded_manifest(&jpeg, ContainerFormat::Jpeg) {
        Err(ProvenanceError::MalformedSegment { offset, .. }) => assert_eq!(offset, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sequence_gap_is_malformed() {
    let opts = WriterOptions {
        padding_bytes: 150_000,
        ..WriterOptions::default()
    };
    let store = build_manifest_store(&common::ecuador_record(), &opts);
    let mut segments = app11_segments(&store, MAX_APP11_PAYLOAD, 1);
    assert_eq!(segments.len(), 3);
    segments.remove(1);
    let jpeg = insert_segments_after_soi(&minimal_jpeg(), &segments);
    assert!(matches!(
        extract_embedded_manifest(&jpeg, ContainerFormat::Jpeg),
        Err(ProvenanceError::MalformedSegment { .. })
    ));
}

#[test]
fn ecuador_fixture_parses_to_authored_values() {
    let bytes = std::fs::read(fixture("media/ecuador.jpg")).unwrap();
    let store = extract_embedded_manifest(&bytes, ContainerFormat::Jpeg).unwrap().unwrap();
    let record = parse_manifest_store(&store).unwrap();
    assert_eq!(filter_fields(&record), common::ecuador_record());
    assert_eq!(record.origin_method, OriginMethod::Captured);
    assert_eq!(record.raw_fields["trust_status"], "unvalidated");
    let text = render_summary(&filter_fields(&record), "e").text;
    assert!(text.lines().any(|l| l == "- origin time: 2016-04-17T14:03:00Z"));
    assert!(text.lines().any(|l| l == "- origin location: -2.170998, -79.922359"));
}

#[test]
fn algorithmic_source_means_generated() {
    let mut r = ProvenanceRecord::empty(IngestPath::Embedded);
    let mut a = EditAction::new("c2pa.created");
    a.digital_source_type = Some("http://cv.iptc.org/newscodes/digitalsourcetype/trainedAlgorithmicMedia".into());
    r.actions.push(a);
    let parsed = parse_manifest_store(&build_manifest_store(&r, &WriterOptions::default())).unwrap();
    assert_eq!(parsed.origin_method, OriginMethod::Generated);
}

#[test]
fn empty_store_is_a_parse_error() {
    assert!(parse_manifest_store(&[]).is_err());
}

#[test]
fn png_round_trip() {
    let png = {
        let mut v = b"\x89PNG\r\n\x1a\n".to_vec();
        v.extend_from_slice(&13u32.to_be_bytes());
        v.extend_from_slice(b"IHDR");
        v.extend_from_slice(&[0, 0, 0, 1, 0, 0, 0, 1, 8, 0, 0, 0, 0]);
        v.extend_from_slice(&[0; 4]);
        v.extend_from_slice(&[0, 0, 0, 0]);
        v.extend_from_slice(b"IEND");
        v.extend_from_slice(&[0xAE, 0x42, 0x60, 0x82]);
        v
    };
    assert_eq!(extract_embedded_manifest(&png, ContainerFormat::Png), Ok(None));
    let store = build_manifest_store(&common::ecuador_record(), &WriterOptions::default());
    let with = embed_in_png(&png, &store);
    assert_eq!(extract_embedded_manifest(&with, ContainerFormat::Png).unwrap(), Some(store));
}

#[test]
fn sidecar_fixture_maps_fields() {
    let text = std::fs::read_to_string(fixture("media/nyc_hospital.c2pa.json")).unwrap();
    let r = load_sidecar_str(&text).unwrap();
    assert_eq!(r.ingest_path, IngestPath::Sidecar);
    assert_eq!(r.capture_time, common::ecuador_record().capture_time);
    assert_eq!(r.place_name.as_deref(), Some("Guayaquil, Ecuador"));
    assert_eq!(r.actions.len(), 2);

    let bad = text.replace("-2.170998", "91.0");
    match load_sidecar_str(&bad) {
        Err(ProvenanceError::InvalidSidecar { field, .. }) => assert_eq!(field, "capture.latitude"),
        other => panic!("{other:?}"),
    }
    let extra = text.replacen('{', "{\"newsroom_note\": 5,", 1);
    assert_eq!(load_sidecar_str(&extra).unwrap().raw_fields["newsroom_note"], 5);
}

fn embed(record: &ProvenanceRecord, encoding: PayloadEncoding, max_payload: usize) -> Vec<u8> {
    let opts = WriterOptions {
        encoding,
        ..WriterOptions::default()
    };
    let store = build_manifest_store(record, &opts);
    insert_segments_after_soi(&minimal_jpeg(), &app11_segments(&store, max_payload, 3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn embed_extract_parse_round_trip(seed in any::<u64>(), json in any::<bool>(), small in any::<bool>()) {
        let record = random_record(&mut ChaCha8Rng::seed_from_u64(seed));
        let encoding = if json { PayloadEncoding::Json } else { PayloadEncoding::Cbor };
        let jpeg = embed(&record, encoding, if small { 300 } else { MAX_APP11_PAYLOAD });
        let store = extract_embedded_manifest(&jpeg, ContainerFormat::Jpeg).unwrap().unwrap();
        let parsed = parse_manifest_store(&store).unwrap();
        prop_assert_eq!(filter_fields(&parsed), record);
    }

    #[test]
    fn segment_order_does_not_matter(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let record = random_record(&mut ChaCha8Rng::seed_from_u64(seed));
        let store = build_manifest_store(&record, &WriterOptions::default());
        let mut segments = app11_segments(&store, 200, 9);
        let ordered = insert_segments_after_soi(&minimal_jpeg(), &segments);
        segments.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let shuffled = insert_segments_after_soi(&minimal_jpeg(), &segments);
        let a = extract_embedded_manifest(&ordered, ContainerFormat::Jpeg).unwrap();
        let b = extract_embedded_manifest(&shuffled, ContainerFormat::Jpeg).unwrap();
        prop_assert_eq!(a.as_deref(), Some(store.as_slice()));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn summary_is_injective(a in any::<u64>(), b in any::<u64>()) {
        let ra = random_record(&mut ChaCha8Rng::seed_from_u64(a));
        let rb = random_record(&mut ChaCha8Rng::seed_from_u64(b));
        let ta = render_summary(&ra, "m").text;
        let tb = render_summary(&rb, "m").text;
        let same_fields = filter_fields(&ra) == ProvenanceRecord { ingest_path: ra.ingest_path, ..filter_fields(&rb) };
        prop_assert_eq!(ta == tb, same_fields);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..512), png in any::<bool>()) {
        let format = if png { ContainerFormat::Png } else { ContainerFormat::Jpeg };
        let mut input = bytes.clone();
        if !png {
            input.splice(0..0, [0xFF, 0xD8]);
        }
        if let Ok(Some(store)) = extract_embedded_manifest(&input, format) {
            let _ = parse_manifest_store(&store);
        }
        let _ = parse_manifest_store(&bytes);
    }
}

#[test]
fn ecuador_embed_is_reproducible() {
    let plain = std::fs::read(fixture("media/plain.jpg")).unwrap();
    let a = embed_in_jpeg(&plain, &common::ecuador_record(), &WriterOptions::default());
    let b = embed_in_jpeg(&plain, &common::ecuador_record(), &WriterOptions::default());
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn single_field_changes_change_the_summary(seed in any::<u64>(), other in any::<u64>()) {
        use provcheck_core::provenance::GeoPoint;
        let base = random_record(&mut ChaCha8Rng::seed_from_u64(seed));
        let donor = random_record(&mut ChaCha8Rng::seed_from_u64(other));
        let text = |r: &ProvenanceRecord| render_summary(r, "m").text;
        let variants = [
            ProvenanceRecord { capture_time: donor.capture_time, ..base.clone() },
            ProvenanceRecord { capture_location: donor.capture_location, ..base.clone() },
            ProvenanceRecord { capture_location: base.capture_location.map(|p| GeoPoint::new(p.latitude(), if p.longitude() > 0.0 { p.longitude() - 0.000001 } else { p.longitude() + 0.000001 }).unwrap()), ..base.clone() },
            ProvenanceRecord { place_name: donor.place_name.clone(), ..base.clone() },
            ProvenanceRecord { creator: donor.creator.clone(), ..base.clone() },
            ProvenanceRecord { claim_generator: donor.claim_generator.clone(), ..base.clone() },
            ProvenanceRecord { origin_method: donor.origin_method, ..base.clone() },
            ProvenanceRecord { actions: donor.actions.clone(), ..base.clone() },
            ProvenanceRecord { signature_present: !base.signature_present, ..base.clone() },
        ];
        for v in &variants {
            prop_assert_eq!(text(v) == text(&base), v == &base);
        }
    }
}
