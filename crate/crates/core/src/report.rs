use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropertyStatus {
    Pass,
    Fail,
}

/// A concrete point where a property was observed to fail (or, for
/// informational reports, the extremal point found).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub q: Vec<f64>,
    pub engine: usize,
    pub detail: String,
    pub value: f64,
}

/// Outcome of a sampled property check.
///
/// A `Pass` only means no violation was found among `points_checked` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub status: PropertyStatus,
    /// Strict variant of the property, where one is defined.
    pub strict: Option<bool>,
    pub points_checked: usize,
    pub witness: Option<Witness>,
    /// Property-specific scalar, e.g. the smallest admissible shift found.
    pub measure: Option<f64>,
    pub note: String,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.status == PropertyStatus::Pass
    }

    pub(crate) fn from_witness(
        property: &str,
        points_checked: usize,
        witness: Option<Witness>,
    ) -> Self {
        let status = if witness.is_some() {
            PropertyStatus::Fail
        } else {
            PropertyStatus::Pass
        };
        let note = match &witness {
            Some(w) => format!("violated at q = {:?}: {}", w.q, w.detail),
            None => format!("no violation found in {points_checked} sampled points"),
        };
        PropertyReport {
            property: property.into(),
            status,
            strict: None,
            points_checked,
            witness,
            measure: None,
            note,
        }
    }
}
