//! Per-vertex scan annotations: FDI tooth labels and instance ids, mirroring
//! the challenge JSON format (`id_patient`, `jaw`, `labels`, `instances`).
//! Label and instance 0 are reserved for gingiva.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::diagnostics::{Diagnostic, Diagnostics, Severity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Jaw {
    Upper,
    Lower,
}

impl fmt::Display for Jaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Jaw::Upper => write!(f, "upper"),
            Jaw::Lower => write!(f, "lower"),
        }
    }
}

impl std::str::FromStr for Jaw {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper" => Ok(Jaw::Upper),
            "lower" => Ok(Jaw::Lower),
            other => Err(format!("jaw must be \"upper\" or \"lower\", got {other:?}")),
        }
    }
}

/// True when `label` is a two-digit FDI code: tens digit 1-4 (quadrant),
/// units digit 1-8 (position from the midline).
pub fn is_valid_fdi(label: u32) -> bool {
    let tens = label / 10;
    let units = label % 10;
    (1..=4).contains(&tens) && (1..=8).contains(&units)
}

/// True when the FDI quadrant is consistent with the jaw: quadrants 1-2 are
/// upper, 3-4 are lower.
pub fn fdi_matches_jaw(label: u32, jaw: Jaw) -> bool {
    match jaw {
        Jaw::Upper => (11..=28).contains(&label),
        Jaw::Lower => (31..=48).contains(&label),
    }
}

/// The full 16-tooth FDI arch sequence for a jaw, ordered along the dental
/// arch (patient's right to left): upper 18..11,21..28; lower 48..41,31..38.
pub fn fdi_arch_sequence(jaw: Jaw) -> [u32; 16] {
    let mut seq = [0u32; 16];
    let (right, left) = match jaw {
        Jaw::Upper => (10, 20),
        Jaw::Lower => (40, 30),
    };
    for i in 0..8 {
        seq[i] = right + (8 - i as u32);
        seq[8 + i] = left + (i as u32 + 1);
    }
    seq
}

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("invalid annotation JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing key {0:?}")]
    MissingKey(&'static str),
    #[error("jaw must be \"upper\" or \"lower\", got {0:?}")]
    InvalidJaw(String),
    #[error("{array} entry {index} is not a non-negative integer")]
    NonIntegerEntry { array: &'static str, index: usize },
    #[error("{array} has {got} entries but the mesh has {expected} vertices")]
    LengthMismatch {
        array: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("labels and instances lengths differ: {labels} vs {instances}")]
    ArrayLengthsDiffer { labels: usize, instances: usize },
}

/// Per-vertex labels and instance ids for one scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanAnnotation {
    pub patient_id: String,
    pub jaw: Jaw,
    pub labels: Vec<u32>,
    pub instances: Vec<u32>,
}

// On-disk schema with its fixed key order.
#[derive(Serialize, Deserialize)]
struct AnnotationFile {
    id_patient: String,
    jaw: String,
    labels: Vec<serde_json::Value>,
    instances: Vec<serde_json::Value>,
}

fn int_array(
    values: Vec<serde_json::Value>,
    array: &'static str,
) -> Result<Vec<u32>, AnnotationError> {
    values
        .into_iter()
        .enumerate()
        .map(|(index, v)| {
            v.as_u64()
                .and_then(|x| u32::try_from(x).ok())
                .ok_or(AnnotationError::NonIntegerEntry { array, index })
        })
        .collect()
}

/// Parse the challenge JSON annotation and length-check it against the
/// companion mesh. Invalid FDI codes are *not* errors here; they surface as
/// diagnostics from `validate_scan` so malformed predictions stay scoreable.
pub fn parse_annotation(bytes: &[u8], vertex_count: usize) -> Result<ScanAnnotation, AnnotationError> {
    let raw: serde_json::Map<String, serde_json::Value> = serde_json::from_slice(bytes)?;
    for key in ["id_patient", "jaw", "labels", "instances"] {
        if !raw.contains_key(key) {
            return Err(AnnotationError::MissingKey(match key {
                "id_patient" => "id_patient",
                "jaw" => "jaw",
                "labels" => "labels",
                _ => "instances",
            }));
        }
    }
    let file: AnnotationFile = serde_json::from_slice(bytes)?;
    let jaw: Jaw = file
        .jaw
        .parse()
        .map_err(|_| AnnotationError::InvalidJaw(file.jaw.clone()))?;
    let labels = int_array(file.labels, "labels")?;
    let instances = int_array(file.instances, "instances")?;
    if labels.len() != instances.len() {
        return Err(AnnotationError::ArrayLengthsDiffer {
            labels: labels.len(),
            instances: instances.len(),
        });
    }
    if labels.len() != vertex_count {
        return Err(AnnotationError::LengthMismatch {
            array: "labels",
            got: labels.len(),
            expected: vertex_count,
        });
    }
    Ok(ScanAnnotation {
        patient_id: file.id_patient,
        jaw,
        labels,
        instances,
    })
}

/// Serialize with the fixed key order id_patient, jaw, labels, instances.
pub fn write_annotation(ann: &ScanAnnotation) -> Vec<u8> {
    let file = AnnotationFile {
        id_patient: ann.patient_id.clone(),
        jaw: ann.jaw.to_string(),
        labels: ann.labels.iter().map(|&l| l.into()).collect(),
        instances: ann.instances.iter().map(|&i| i.into()).collect(),
    };
    let mut out = serde_json::to_vec_pretty(&file).expect("annotation serialization");
    out.push(b'\n');
    out
}

/// Diagnostics for annotation content that parsing deliberately lets through:
/// invalid FDI codes and jaw/quadrant mismatches.
pub fn annotation_content_diagnostics(ann: &ScanAnnotation) -> Diagnostics {
    let mut diags = Diagnostics::new();
    for (i, &label) in ann.labels.iter().enumerate() {
        if label != 0 && !is_valid_fdi(label) {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "FDI_INVALID",
                i,
                format!("label {label} is not a valid FDI code"),
            ));
        } else if label != 0 && !fdi_matches_jaw(label, ann.jaw) {
            diags.push(Diagnostic::at(
                Severity::Warning,
                "JAW_QUADRANT",
                i,
                format!("label {label} belongs to the other jaw ({})", ann.jaw),
            ));
        }
        if label == 0 && ann.instances[i] != 0 {
            // Allowed: an instance whose vertices are all label 0 is reported
            // by instance extraction, not per vertex here.
        }
    }
    diags.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fdi_validity() {
        for l in [11, 18, 21, 28, 31, 38, 41, 48, 44, 33] {
            assert!(is_valid_fdi(l), "{l}");
        }
        for l in [0, 9, 10, 19, 29, 50, 99, 49, 1] {
            assert!(!is_valid_fdi(l), "{l}");
        }
    }

    #[test]
    fn arch_sequences() {
        let upper = fdi_arch_sequence(Jaw::Upper);
        assert_eq!(&upper[..4], &[18, 17, 16, 15]);
        assert_eq!(&upper[7..9], &[11, 21]);
        assert_eq!(upper[15], 28);
        let lower = fdi_arch_sequence(Jaw::Lower);
        assert_eq!(lower[0], 48);
        assert_eq!(&lower[7..9], &[41, 31]);
        assert_eq!(lower[15], 38);
    }

    #[test]
    fn parse_paper_style_example() {
        let json = br#"{
            "id_patient": "YNKZHRPO",
            "jaw": "upper",
            "labels": [0, 0, 44, 33, 34, 0],
            "instances": [0, 0, 10, 2, 12, 0]
        }"#;
        let ann = parse_annotation(json, 6).unwrap();
        assert_eq!(ann.patient_id, "YNKZHRPO");
        assert_eq!(ann.jaw, Jaw::Upper);
        assert_eq!(ann.labels, vec![0, 0, 44, 33, 34, 0]);
        assert_eq!(ann.instances, vec![0, 0, 10, 2, 12, 0]);
    }

    #[test]
    fn length_mismatch_rejected() {
        let json = br#"{"id_patient":"x","jaw":"upper","labels":[0,0],"instances":[0,0]}"#;
        assert!(matches!(
            parse_annotation(json, 3),
            Err(AnnotationError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn missing_key_rejected() {
        let json = br#"{"id_patient":"x","labels":[],"instances":[]}"#;
        assert!(matches!(
            parse_annotation(json, 0),
            Err(AnnotationError::MissingKey("jaw"))
        ));
    }

    #[test]
    fn bad_jaw_rejected() {
        let json = br#"{"id_patient":"x","jaw":"sideways","labels":[],"instances":[]}"#;
        assert!(matches!(
            parse_annotation(json, 0),
            Err(AnnotationError::InvalidJaw(_))
        ));
    }

    #[test]
    fn invalid_fdi_is_a_diagnostic_not_an_error() {
        let json = br#"{"id_patient":"x","jaw":"upper","labels":[99],"instances":[1]}"#;
        let ann = parse_annotation(json, 1).unwrap();
        let diags = annotation_content_diagnostics(&ann);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags.iter().next().unwrap().code, "FDI_INVALID");
    }

    #[test]
    fn round_trip() {
        let ann = ScanAnnotation {
            patient_id: "abc-123".into(),
            jaw: Jaw::Lower,
            labels: vec![0, 31, 31, 0],
            instances: vec![0, 1, 1, 0],
        };
        let bytes = write_annotation(&ann);
        let back = parse_annotation(&bytes, 4).unwrap();
        assert_eq!(back, ann);
        // Key order is fixed.
        let text = String::from_utf8(bytes).unwrap();
        let pos = |k: &str| text.find(k).unwrap();
        assert!(pos("id_patient") < pos("jaw"));
        assert!(pos("\"jaw\"") < pos("labels"));
        assert!(pos("labels") < pos("instances"));
    }
}
