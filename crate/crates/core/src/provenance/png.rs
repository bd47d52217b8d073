use super::ProvenanceError;

const SIGNATURE: &[u8; 8] = b"\x89PNG\r\n\x1a\n";
const MANIFEST_CHUNK: &[u8; 4] = b"caBX";

/// Returns the payload of the first `caBX` chunk.
pub fn extract_png_manifest(content: &[u8]) -> Result<Option<Vec<u8>>, ProvenanceError> {
    if !content.starts_with(SIGNATURE) {
        return Err(ProvenanceError::FormatMismatch { expected: "PNG" });
    }
    let mut pos = SIGNATURE.len();
    while pos < content.len() {
        if pos + 8 > content.len() {
            return Err(ProvenanceError::MalformedSegment {
                offset: pos,
                reason: "truncated chunk header".into(),
            });
        }
        let len = u32::from_be_bytes(content[pos..pos + 4].try_into().unwrap()) as usize;
        let chunk_type = &content[pos + 4..pos + 8];
        let data_start = pos + 8;
        let end = data_start
            .checked_add(len)
            .and_then(|e| e.checked_add(4))
            .filter(|&e| e <= content.len())
            .ok_or_else(|| ProvenanceError::MalformedSegment {
                offset: pos,
                reason: format!("chunk declares {len} bytes beyond the end of the file"),
            })?;
        if chunk_type == MANIFEST_CHUNK {
            return Ok(Some(content[data_start..data_start + len].to_vec()));
        }
        if chunk_type == b"IEND" {
            break;
        }
        pos = end;
    }
    Ok(None)
}
