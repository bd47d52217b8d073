//! Reader for JUMBF (ISO/IEC 19566-5) box trees.

use super::ProvenanceError;

const fn c2pa_uuid(tag: &[u8; 4]) -> [u8; 16] {
    [
        tag[0], tag[1], tag[2], tag[3], 0x00, 0x11, 0x00, 0x10, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71,
    ]
}

pub const MANIFEST_STORE_UUID: [u8; 16] = c2pa_uuid(b"c2pa");
pub const MANIFEST_UUID: [u8; 16] = c2pa_uuid(b"c2ma");
pub const UPDATE_MANIFEST_UUID: [u8; 16] = c2pa_uuid(b"c2um");
pub const ASSERTION_STORE_UUID: [u8; 16] = c2pa_uuid(b"c2as");
pub const CLAIM_UUID: [u8; 16] = c2pa_uuid(b"c2cl");
pub const SIGNATURE_UUID: [u8; 16] = c2pa_uuid(b"c2cs");
pub const CBOR_UUID: [u8; 16] = c2pa_uuid(b"cbor");
pub const JSON_UUID: [u8; 16] = c2pa_uuid(b"json");
pub const EMBEDDED_FILE_UUID: [u8; 16] = [
    0x40, 0xCB, 0x0C, 0x32, 0xBB, 0x8A, 0x48, 0x9D, 0xA7, 0x0B, 0x2A, 0xD6, 0xF4, 0x7F, 0x43, 0x69,
];

pub const SUPERBOX: [u8; 4] = *b"jumb";
pub const DESCRIPTION: [u8; 4] = *b"jumd";

const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Description {
    pub uuid: [u8; 16],
    pub label: Option<String>,
    pub id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Superbox<'a> {
    pub description: Description,
    pub children: Vec<Node<'a>>,
    /// Offset of the box header within the parsed buffer.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node<'a> {
    Super(Superbox<'a>),
    Content {
        box_type: [u8; 4],
        payload: &'a [u8],
        offset: usize,
    },
}

impl<'a> Superbox<'a> {
    pub fn label(&self) -> &str {
        self.description.label.as_deref().unwrap_or("")
    }

    pub fn superboxes(&self) -> impl Iterator<Item = &Superbox<'a>> {
        self.children.iter().filter_map(|c| match c {
            Node::Super(s) => Some(s),
            Node::Content { .. } => None,
        })
    }

    /// First content box payload, with its box type.
    pub fn content(&self) -> Option<([u8; 4], &'a [u8])> {
        self.children.iter().find_map(|c| match c {
            Node::Content { box_type, payload, .. } => Some((*box_type, *payload)),
            Node::Super(_) => None,
        })
    }
}

struct BoxHeader {
    box_type: [u8; 4],
    header_len: usize,
    total_len: usize,
}

fn invalid(label: &str, reason: impl Into<String>) -> ProvenanceError {
    ProvenanceError::InvalidBox {
        label: if label.is_empty() { "<root>".into() } else { label.into() },
        reason: reason.into(),
    }
}

fn read_header(data: &[u8], pos: usize, label: &str) -> Result<BoxHeader, ProvenanceError> {
    let remaining = data.len() - pos;
    if remaining < 8 {
        return Err(invalid(label, format!("truncated box header at offset {pos}")));
    }
    let lbox = u32::from_be_bytes(data[pos..pos + 4].try_into().unwrap()) as usize;
    let box_type: [u8; 4] = data[pos + 4..pos + 8].try_into().unwrap();
    let (header_len, total_len) = match lbox {
        0 => (8, remaining),
        1 => {
            if remaining < 16 {
                return Err(invalid(label, format!("truncated extended size at offset {pos}")));
            }
            let xl = u64::from_be_bytes(data[pos + 8..pos + 16].try_into().unwrap());
            (16, usize::try_from(xl).unwrap_or(usize::MAX))
        }
        n => (8, n),
    };
    if total_len < header_len || total_len > remaining {
        return Err(invalid(
            label,
            format!("box at offset {pos} declares {total_len} bytes, {remaining} available"),
        ));
    }
    Ok(BoxHeader {
        box_type,
        header_len,
        total_len,
    })
}

fn parse_description(payload: &[u8], offset: usize) -> Result<Description, ProvenanceError> {
    if payload.len() < 17 {
        return Err(invalid("", format!("description box at offset {offset} is too short")));
    }
    let uuid: [u8; 16] = payload[..16].try_into().unwrap();
    let toggles = payload[16];
    let mut rest = &payload[17..];
    let mut label = None;
    if toggles & 0x02 != 0 {
        let end = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or_else(|| invalid("", format!("unterminated label at offset {offset}")))?;
        let text = std::str::from_utf8(&rest[..end])
            .map_err(|_| invalid("", format!("label at offset {offset} is not UTF-8")))?;
        label = Some(text.to_owned());
        rest = &rest[end + 1..];
    }
    let mut id = None;
    if toggles & 0x04 != 0 {
        if rest.len() < 4 {
            return Err(invalid(label.as_deref().unwrap_or(""), "truncated description id"));
        }
        id = Some(u32::from_be_bytes(rest[..4].try_into().unwrap()));
    }
    Ok(Description { uuid, label, id })
}

/// Parses one complete superbox occupying the start of `data`.
pub fn parse_superbox(data: &[u8]) -> Result<Superbox<'_>, ProvenanceError> {
    parse_superbox_at(data, 0, 0, "")
}

fn parse_superbox_at<'a>(
    data: &'a [u8],
    pos: usize,
    depth: usize,
    parent_label: &str,
) -> Result<Superbox<'a>, ProvenanceError> {
    if depth > MAX_DEPTH {
        return Err(invalid(parent_label, "box tree nested too deeply"));
    }
    let header = read_header(data, pos, parent_label)?;
    if header.box_type != SUPERBOX {
        return Err(invalid(
            parent_label,
            format!("expected a jumb superbox at offset {pos}, found {:?}", String::from_utf8_lossy(&header.box_type)),
        ));
    }
    let end = pos + header.total_len;
    let mut cursor = pos + header.header_len;

    let desc_header = read_header(&data[..end], cursor, parent_label)?;
    if desc_header.box_type != DESCRIPTION {
        return Err(invalid(parent_label, format!("superbox at offset {pos} lacks a description box")));
    }
    let description = parse_description(
        &data[cursor + desc_header.header_len..cursor + desc_header.total_len],
        cursor,
    )?;
    cursor += desc_header.total_len;
    let label = description.label.clone().unwrap_or_default();

    let mut children = Vec::new();
    while cursor < end {
        let child = read_header(&data[..end], cursor, &label)?;
        if child.box_type == SUPERBOX {
            children.push(Node::Super(parse_superbox_at(&data[..end], cursor, depth + 1, &label)?));
        } else {
            children.push(Node::Content {
                box_type: child.box_type,
                payload: &data[cursor + child.header_len..cursor + child.total_len],
                offset: cursor,
            });
        }
        cursor += child.total_len;
    }
    Ok(Superbox {
        description,
        children,
        offset: pos,
    })
}

/// Serializes a box with an 8-byte header.
pub fn encode_box(box_type: [u8; 4], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 8);
    out.extend_from_slice(&(payload.len() as u32 + 8).to_be_bytes());
    out.extend_from_slice(&box_type);
    out.extend_from_slice(payload);
    out
}

/// Serializes a labelled superbox around already-encoded children.
pub fn encode_superbox(uuid: [u8; 16], label: &str, children: &[Vec<u8>]) -> Vec<u8> {
    let mut desc = uuid.to_vec();
    // requestable + label present
    desc.push(0x03);
    desc.extend_from_slice(label.as_bytes());
    desc.push(0);
    let mut payload = encode_box(DESCRIPTION, &desc);
    for child in children {
        payload.extend_from_slice(child);
    }
    encode_box(SUPERBOX, &payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_tree_round_trips() {
        let inner = encode_superbox(CLAIM_UUID, "c2pa.claim", &[encode_box(*b"cbor", &[0xA0])]);
        let outer = encode_superbox(MANIFEST_STORE_UUID, "c2pa", &[inner]);
        let parsed = parse_superbox(&outer).unwrap();
        assert_eq!(parsed.label(), "c2pa");
        assert_eq!(parsed.description.uuid, MANIFEST_STORE_UUID);
        let claim = parsed.superboxes().next().unwrap();
        assert_eq!(claim.label(), "c2pa.claim");
        assert_eq!(claim.content(), Some((*b"cbor", &[0xA0][..])));
    }

    #[test]
    fn oversized_child_is_rejected_with_label() {
        let mut bad = encode_superbox(MANIFEST_UUID, "urn:test", &[encode_box(*b"json", b"{}")]);
        let n = bad.len();
        // inflate the child's LBox past the parent's end
        let child_at = n - 10;
        bad[child_at..child_at + 4].copy_from_slice(&100u32.to_be_bytes());
        match parse_superbox(&bad).unwrap_err() {
            ProvenanceError::InvalidBox { label, .. } => assert_eq!(label, "urn:test"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(parse_superbox(&[]).is_err());
        assert!(parse_superbox(&[0, 0, 0, 8, b'j', b'u', b'm', b'b']).is_err());
        assert!(parse_superbox(&encode_box(*b"free", &[])).is_err());
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let mut b = encode_superbox(MANIFEST_UUID, "leaf", &[]);
        for _ in 0..64 {
            b = encode_superbox(MANIFEST_UUID, "n", &[b]);
        }
        assert!(parse_superbox(&b).is_err());
    }
}
