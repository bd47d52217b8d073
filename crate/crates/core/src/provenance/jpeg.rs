//! Manifest stores carried in JPEG APP11 segments.
//!
//! Each APP11 payload starts with the JPEG XT header: common identifier
//! `JP`, a 2-byte box instance number, a 4-byte big-endian packet sequence
//! number, then a JUMBF fragment. The first packet holds the start of the
//! superbox; later packets repeat its LBox/TBox (and XLBox) before
//! continuing the data.

use std::collections::BTreeMap;

use super::jumbf::{MANIFEST_STORE_UUID, SUPERBOX};
use super::ProvenanceError;

const SOI: [u8; 2] = [0xFF, 0xD8];
const APP11: u8 = 0xEB;
const SOS: u8 = 0xDA;
const EOI: u8 = 0xD9;

struct Packet<'a> {
    sequence: u32,
    data: &'a [u8],
    offset: usize,
}

fn malformed(offset: usize, reason: impl Into<String>) -> ProvenanceError {
    ProvenanceError::MalformedSegment {
        offset,
        reason: reason.into(),
    }
}

/// Walks the marker segments of a JPEG and reassembles the C2PA manifest
/// store from its APP11 packets, whatever order they appear in.
pub fn extract_jpeg_manifest(content: &[u8]) -> Result<Option<Vec<u8>>, ProvenanceError> {
    if !content.starts_with(&SOI) {
        return Err(ProvenanceError::FormatMismatch { expected: "JPEG" });
    }

    // box instance number -> packets, in file order of first appearance
    let mut groups: Vec<(u16, Vec<Packet<'_>>)> = Vec::new();
    let mut pos = 2;
    while pos < content.len() {
        if content[pos] != 0xFF {
            return Err(malformed(pos, format!("expected marker, found 0x{:02X}", content[pos])));
        }
        let mut marker_at = pos + 1;
        while marker_at < content.len() && content[marker_at] == 0xFF {
            marker_at += 1;
        }
        let Some(&marker) = content.get(marker_at) else {
            break;
        };
        let seg_start = marker_at - 1;
        match marker {
            EOI | SOS => break,
            0x01 | 0xD0..=0xD7 => {
                pos = marker_at + 1;
                continue;
            }
            _ => {}
        }
        if marker_at + 3 > content.len() {
            return Err(malformed(seg_start, "truncated segment length field"));
        }
        let declared = u16::from_be_bytes([content[marker_at + 1], content[marker_at + 2]]) as usize;
        if declared < 2 {
            return Err(malformed(seg_start, format!("segment length {declared} is below the minimum of 2")));
        }
        let payload_start = marker_at + 3;
        let seg_end = marker_at + 1 + declared;
        if seg_end > content.len() {
            return Err(malformed(
                seg_start,
                format!("declared length {declared} exceeds the {} remaining bytes", content.len() - marker_at - 1),
            ));
        }
        if marker == APP11 {
            let payload = &content[payload_start..seg_end];
            if payload.len() >= 16 && &payload[..2] == b"JP" && payload[12..16] == SUPERBOX {
                let instance = u16::from_be_bytes([payload[2], payload[3]]);
                let sequence = u32::from_be_bytes(payload[4..8].try_into().unwrap());
                let packet = Packet {
                    sequence,
                    data: &payload[8..],
                    offset: seg_start,
                };
                match groups.iter_mut().find(|(en, _)| *en == instance) {
                    Some((_, packets)) => packets.push(packet),
                    None => groups.push((instance, vec![packet])),
                }
            }
        }
        pos = seg_end;
    }

    for (_, packets) in groups {
        let assembled = reassemble(packets)?;
        if is_manifest_store(&assembled) {
            return Ok(Some(assembled));
        }
    }
    Ok(None)
}

fn reassemble(packets: Vec<Packet<'_>>) -> Result<Vec<u8>, ProvenanceError> {
    let mut ordered: BTreeMap<u32, Packet<'_>> = BTreeMap::new();
    for packet in packets {
        if ordered.contains_key(&packet.sequence) {
            return Err(malformed(packet.offset, format!("duplicate packet sequence number {}", packet.sequence)));
        }
        ordered.insert(packet.sequence, packet);
    }

    let mut expected = 1u32;
    let mut out = Vec::new();
    let mut header_len = 8;
    let mut last_offset = 0;
    for (sequence, packet) in ordered {
        if sequence != expected {
            return Err(malformed(
                packet.offset,
                format!("packet sequence gap: expected {expected}, found {sequence}"),
            ));
        }
        if sequence == 1 {
            let lbox = u32::from_be_bytes(packet.data[..4].try_into().unwrap());
            header_len = if lbox == 1 { 16 } else { 8 };
            out.extend_from_slice(packet.data);
        } else {
            if packet.data.len() < header_len {
                return Err(malformed(packet.offset, "continuation packet shorter than the repeated box header"));
            }
            out.extend_from_slice(&packet.data[header_len..]);
        }
        last_offset = packet.offset;
        expected = expected.saturating_add(1);
    }

    let lbox = u32::from_be_bytes(out[..4].try_into().unwrap()) as u64;
    let declared = match lbox {
        0 => out.len() as u64,
        1 if out.len() >= 16 => u64::from_be_bytes(out[8..16].try_into().unwrap()),
        1 => return Err(malformed(last_offset, "truncated extended box size")),
        n => n,
    };
    if declared > out.len() as u64 {
        return Err(malformed(
            last_offset,
            format!("superbox declares {declared} bytes but packets carry {}", out.len()),
        ));
    }
    out.truncate(declared as usize);
    Ok(out)
}

fn is_manifest_store(jumbf: &[u8]) -> bool {
    // LBox TBox [XLBox] | LBox 'jumd' UUID ...
    let skip = if jumbf.len() >= 4 && jumbf[..4] == [0, 0, 0, 1] { 16 } else { 8 };
    jumbf.len() >= skip + 24 && &jumbf[skip + 4..skip + 8] == b"jumd" && jumbf[skip + 8..skip + 24] == MANIFEST_STORE_UUID
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provenance::jumbf::{encode_box, encode_superbox, CBOR_UUID};
    use crate::provenance::writer::{app11_segments, insert_segments_after_soi, MAX_APP11_PAYLOAD};

    fn store(size: usize) -> Vec<u8> {
        let filler = encode_superbox(CBOR_UUID, "filler", &[encode_box(*b"cbor", &vec![0x5A; size])]);
        encode_superbox(MANIFEST_STORE_UUID, "c2pa", &[filler])
    }

    #[test]
    fn soi_eoi_only_is_absent() {
        assert_eq!(extract_jpeg_manifest(&[0xFF, 0xD8, 0xFF, 0xD9]).unwrap(), None);
    }

    #[test]
    fn not_a_jpeg() {
        assert_eq!(
            extract_jpeg_manifest(b"\x89PNG").unwrap_err(),
            ProvenanceError::FormatMismatch { expected: "JPEG" }
        );
    }

    #[test]
    fn app11_overrunning_file_reports_offset() {
        let mut jpeg = vec![0xFF, 0xD8, 0xFF, 0xE0, 0x00, 0x04, 0x00, 0x00];
        jpeg.extend_from_slice(&[0xFF, 0xEB, 0x00, 0x40, b'J', b'P']);
        assert_eq!(
            extract_jpeg_manifest(&jpeg).unwrap_err(),
            ProvenanceError::MalformedSegment {
                offset: 8,
                reason: "declared length 64 exceeds the 4 remaining bytes".into(),
            }
        );
    }

    #[test]
    fn truncated_length_field() {
        let jpeg = [0xFF, 0xD8, 0xFF, 0xEB, 0x00];
        assert!(matches!(
            extract_jpeg_manifest(&jpeg),
            Err(ProvenanceError::MalformedSegment { offset: 2, .. })
        ));
    }

    #[test]
    fn multi_segment_store_reassembles() {
        let manifest = store(150_000);
        let segments = app11_segments(&manifest, MAX_APP11_PAYLOAD, 0x0211);
        assert_eq!(segments.len(), 3);
        let jpeg = insert_segments_after_soi(&[0xFF, 0xD8, 0xFF, 0xD9], &segments);
        assert_eq!(extract_jpeg_manifest(&jpeg).unwrap(), Some(manifest));
    }

    #[test]
    fn sequence_gap_is_malformed() {
        let manifest = store(150_000);
        let mut segments = app11_segments(&manifest, MAX_APP11_PAYLOAD, 7);
        segments.remove(1);
        let jpeg = insert_segments_after_soi(&[0xFF, 0xD8, 0xFF, 0xD9], &segments);
        let err = extract_jpeg_manifest(&jpeg).unwrap_err();
        match err {
            ProvenanceError::MalformedSegment { offset, reason } => {
                assert_eq!(offset, 2 + segments[0].len());
                assert!(reason.contains("expected 2, found 3"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_jumbf_groups_are_skipped() {
        let other = encode_superbox(CBOR_UUID, "not-c2pa", &[encode_box(*b"cbor", &[1, 2, 3])]);
        let manifest = store(10);
        let mut segments = app11_segments(&other, MAX_APP11_PAYLOAD, 1);
        segments.extend(app11_segments(&manifest, MAX_APP11_PAYLOAD, 2));
        let jpeg = insert_segments_after_soi(&[0xFF, 0xD8, 0xFF, 0xD9], &segments);
        assert_eq!(extract_jpeg_manifest(&jpeg).unwrap(), Some(manifest));
    }

    #[test]
    fn stops_at_start_of_scan() {
        // entropy-coded bytes after SOS must not be read as markers
        let jpeg = [0xFF, 0xD8, 0xFF, 0xDA, 0x00, 0x02, 0x12, 0x34, 0x00, 0xFF, 0xD9];
        assert_eq!(extract_jpeg_manifest(&jpeg).unwrap(), None);
    }
}
