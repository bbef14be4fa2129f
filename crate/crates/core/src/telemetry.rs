// SPDX-License-Identifier: MIT OR Apache-2.0

//! Telemetry data model shared by every other module.
//!
//! A raw record (column name to string cell) is validated into a
//! [`TelemetryEvent`]; models only ever see the projected [`FeatureVector`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of model features per event.
pub const N_FEATURES: usize = 4;

/// Index of the receiver-side OSNR within a [`FeatureVector`]; the drift-monitored feature.
pub const OSNR_RX_INDEX: usize = 3;

/// Feature names in [`FeatureVector`] order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = ["ber_tx", "osnr_tx", "ber_rx", "osnr_rx"];

/// Binary class of a telemetry sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Normal = 0,
    Failure = 1,
}

impl Label {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Label::Normal),
            1 => Some(Label::Failure),
            _ => None,
        }
    }

    pub fn as_bit(self) -> u8 {
        self as u8
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_bit())
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Where an event came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    /// Soft-failure dataset.
    Sfd,
    /// Hard-failure dataset.
    Hfd,
    Synthetic,
    /// Copy of an existing failure event appended by random oversampling.
    Oversampled,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Segment::Sfd => "SFD",
            Segment::Hfd => "HFD",
            Segment::Synthetic => "Synthetic",
            Segment::Oversampled => "Oversampled",
        };
        f.write_str(s)
    }
}

/// One timestamped telemetry sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryEvent {
    /// Ordinal position within its stream.
    pub timestamp: u64,
    pub ber_tx: f64,
    /// dB
    pub osnr_tx: f64,
    pub ber_rx: f64,
    /// dB, receiver side.
    pub osnr_rx: f64,
    pub label: Label,
    pub segment: Segment,
    /// Pass-through columns that are not model features (device type, device id, wall clock).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl TelemetryEvent {
    pub fn features(&self) -> FeatureVector {
        to_features(self)
    }
}

/// Ordered `(ber_tx, osnr_tx, ber_rx, osnr_rx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; N_FEATURES]);

impl FeatureVector {
    pub fn new(values: [f64; N_FEATURES]) -> Self {
        FeatureVector(values)
    }

    pub fn values(&self) -> &[f64; N_FEATURES] {
        &self.0
    }

    pub fn get(&self, index: usize) -> f64 {
        self.0[index]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Projects an event onto the four model features.
pub fn to_features(event: &TelemetryEvent) -> FeatureVector {
    FeatureVector([event.ber_tx, event.osnr_tx, event.ber_rx, event.osnr_rx])
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("field `{field}` out of range: {value}")]
    OutOfRange { field: String, value: String },
    #[error("field `{0}` is not a number")]
    UnparsableNumber(String),
}

/// Canonical names of the required raw fields.
pub const REQUIRED_FIELDS: [&str; 6] = ["timestamp", "ber_tx", "osnr_tx", "ber_rx", "osnr_rx", "label"];

fn lookup<'a>(raw: &'a BTreeMap<String, String>, name: &str) -> Option<&'a str> {
    raw.get(name)
        .or_else(|| if name == "timestamp" { raw.get("ts") } else { None })
        .map(String::as_str)
}

fn parse_real(raw: &BTreeMap<String, String>, name: &str) -> Result<f64, ValidationError> {
    let cell = lookup(raw, name).ok_or_else(|| ValidationError::MissingField(name.to_string()))?;
    let value: f64 = cell
        .trim()
        .parse()
        .map_err(|_| ValidationError::UnparsableNumber(name.to_string()))?;
    if !value.is_finite() {
        return Err(ValidationError::OutOfRange {
            field: name.to_string(),
            value: cell.trim().to_string(),
        });
    }
    Ok(value)
}

fn out_of_range(name: &str, value: f64) -> ValidationError {
    ValidationError::OutOfRange {
        field: name.to_string(),
        value: value.to_string(),
    }
}

/// Validates a raw record into an event tagged with `segment`.
///
/// Numbers are parsed with Rust's locale-independent float grammar. Fields
/// that are not required are carried through as metadata. `ts` is accepted
/// as an alias of `timestamp`.
pub fn validate_with_segment(
    raw: &BTreeMap<String, String>,
    segment: Segment,
) -> Result<TelemetryEvent, ValidationError> {
    let ts_cell = lookup(raw, "timestamp").ok_or_else(|| ValidationError::MissingField("timestamp".into()))?;
    let timestamp: u64 = ts_cell
        .trim()
        .parse()
        .map_err(|_| ValidationError::UnparsableNumber("timestamp".into()))?;

    let ber_tx = parse_real(raw, "ber_tx")?;
    let osnr_tx = parse_real(raw, "osnr_tx")?;
    let ber_rx = parse_real(raw, "ber_rx")?;
    let osnr_rx = parse_real(raw, "osnr_rx")?;

    for (name, ber) in [("ber_tx", ber_tx), ("ber_rx", ber_rx)] {
        if !(0.0..=1.0).contains(&ber) {
            return Err(out_of_range(name, ber));
        }
    }
    for (name, osnr) in [("osnr_tx", osnr_tx), ("osnr_rx", osnr_rx)] {
        if osnr <= 0.0 {
            return Err(out_of_range(name, osnr));
        }
    }

    let label_cell = lookup(raw, "label").ok_or_else(|| ValidationError::MissingField("label".into()))?;
    let label = match label_cell.trim() {
        "0" => Label::Normal,
        "1" => Label::Failure,
        other => {
            return Err(ValidationError::OutOfRange {
                field: "label".into(),
                value: other.to_string(),
            })
        }
    };

    let metadata = raw
        .iter()
        .filter(|(k, _)| !REQUIRED_FIELDS.contains(&k.as_str()) && k.as_str() != "ts")
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    Ok(TelemetryEvent {
        timestamp,
        ber_tx,
        osnr_tx,
        ber_rx,
        osnr_rx,
        label,
        segment,
        metadata,
    })
}

/// [`validate_with_segment`] for records of unknown provenance.
pub fn validate(raw: &BTreeMap<String, String>) -> Result<TelemetryEvent, ValidationError> {
    validate_with_segment(raw, Segment::Synthetic)
}

/// Inverse of [`validate`] on the required fields; floats use shortest round-trip formatting.
pub fn to_record(event: &TelemetryEvent) -> BTreeMap<String, String> {
    let mut out = event.metadata.clone();
    out.insert("timestamp".into(), event.timestamp.to_string());
    out.insert("ber_tx".into(), event.ber_tx.to_string());
    out.insert("osnr_tx".into(), event.osnr_tx.to_string());
    out.insert("ber_rx".into(), event.ber_rx.to_string());
    out.insert("osnr_rx".into(), event.osnr_rx.to_string());
    out.insert("label".into(), event.label.as_bit().to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn good() -> BTreeMap<String, String> {
        record(&[
            ("ber_rx", "0.5"),
            ("osnr_rx", "20.0"),
            ("ber_tx", "0.0"),
            ("osnr_tx", "30.0"),
            ("label", "0"),
            ("ts", "7"),
        ])
    }

    #[test]
    fn in_range_record_is_valid() {
        let ev = validate(&good()).unwrap();
        assert_eq!(ev.label, Label::Normal);
        assert_eq!(ev.timestamp, 7);
        assert_eq!(ev.ber_rx, 0.5);
        assert!(ev.metadata.is_empty());
    }

    #[test]
    fn ber_above_one_is_rejected() {
        let mut r = good();
        r.insert("ber_rx".into(), "1.5".into());
        assert_eq!(
            validate(&r),
            Err(ValidationError::OutOfRange {
                field: "ber_rx".into(),
                value: "1.5".into()
            })
        );
    }

    #[test]
    fn empty_osnr_is_unparsable() {
        let mut r = good();
        r.insert("osnr_rx".into(), "".into());
        assert_eq!(validate(&r), Err(ValidationError::UnparsableNumber("osnr_rx".into())));
    }

    #[test]
    fn missing_label_and_bad_label() {
        let mut r = good();
        r.remove("label");
        assert_eq!(validate(&r), Err(ValidationError::MissingField("label".into())));
        r.insert("label".into(), "2".into());
        assert!(matches!(validate(&r), Err(ValidationError::OutOfRange { .. })));
    }

    #[test]
    fn non_finite_and_non_positive_osnr_rejected() {
        let mut r = good();
        r.insert("osnr_tx".into(), "NaN".into());
        assert!(matches!(validate(&r), Err(ValidationError::OutOfRange { .. })));
        r.insert("osnr_tx".into(), "0".into());
        assert!(matches!(validate(&r), Err(ValidationError::OutOfRange { .. })));
    }

    #[test]
    fn extra_columns_pass_through() {
        let mut r = good();
        r.insert("device_id".into(), "OA1".into());
        let ev = validate(&r).unwrap();
        assert_eq!(ev.metadata.get("device_id").map(String::as_str), Some("OA1"));
        assert_eq!(ev.features(), FeatureVector([0.0, 30.0, 0.5, 20.0]));
    }

    #[test]
    fn projection_order() {
        let mut r = good();
        r.insert("ber_rx".into(), "1e-3".into());
        r.insert("osnr_rx".into(), "22".into());
        let ev = validate(&r).unwrap();
        assert_eq!(to_features(&ev).0, [0.0, 30.0, 1e-3, 22.0]);
        assert_eq!(to_features(&ev), to_features(&ev.clone()));
    }

    fn arb_event() -> impl Strategy<Value = TelemetryEvent> {
        (
            0u64..1_000_000,
            0.0f64..=1.0,
            1e-3f64..60.0,
            0.0f64..=1.0,
            1e-3f64..60.0,
            any::<bool>(),
        )
            .prop_map(|(timestamp, ber_tx, osnr_tx, ber_rx, osnr_rx, fail)| TelemetryEvent {
                timestamp,
                ber_tx,
                osnr_tx,
                ber_rx,
                osnr_rx,
                label: if fail { Label::Failure } else { Label::Normal },
                segment: Segment::Synthetic,
                metadata: BTreeMap::new(),
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn feature_three_is_osnr_rx(ev in arb_event()) {
            prop_assert_eq!(to_features(&ev).get(OSNR_RX_INDEX), ev.osnr_rx);
        }

        #[test]
        fn record_round_trip_is_exact(ev in arb_event()) {
            let back = validate(&to_record(&ev)).unwrap();
            prop_assert_eq!(back, ev);
        }
    }
}
