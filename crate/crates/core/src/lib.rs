// SPDX-License-Identifier: MIT OR Apache-2.0

//! Streaming failure detection for optical-network telemetry.
//!
//! The crate covers the whole pipeline: telemetry validation, stream
//! assembly (CSV or synthetic), Page-Hinkley drift detection, three online
//! classifiers, and a prequential evaluation harness that compares a frozen
//! model with a continuously updated one.

pub mod drift;
pub mod evaluation;
pub mod learners;
pub mod seed;
pub mod stats;
pub mod stream;
pub mod telemetry;
