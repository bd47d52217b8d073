use serde::{Deserialize, Serialize};

use super::{EditAction, OriginMethod};

/// Actions that do not change what the media depicts.
pub const BENIGN_ACTIONS: &[&str] = &[
    "c2pa.created",
    "c2pa.opened",
    "c2pa.resized",
    "c2pa.published",
    "c2pa.converted",
    "c2pa.repackaged",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TamperClass {
    Benign,
    Edited,
    Generated,
}

/// Offline tampering heuristic. Unknown actions count as edits.
pub fn classify_actions(actions: &[EditAction], origin_method: OriginMethod) -> TamperClass {
    if origin_method == OriginMethod::Generated {
        TamperClass::Generated
    } else if actions.iter().all(|a| BENIGN_ACTIONS.contains(&a.action_id.as_str())) {
        TamperClass::Benign
    } else {
        TamperClass::Edited
    }
}
