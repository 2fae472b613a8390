use serde::{Deserialize, Serialize};

/// Per-point semantic class. The numeric ids are used in `.cls` sidecar
/// files and in the `semantic_id` raster plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum SemanticClass {
    None = 0,
    Ground = 1,
    Vehicle = 2,
    Spray = 3,
}

impl SemanticClass {
    pub const ALL: [SemanticClass; 4] = [
        SemanticClass::None,
        SemanticClass::Ground,
        SemanticClass::Vehicle,
        SemanticClass::Spray,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticClass::None => "none",
            SemanticClass::Ground => "ground",
            SemanticClass::Vehicle => "vehicle",
            SemanticClass::Spray => "spray",
        }
    }
}
