// SPDX-License-Identifier: MIT OR Apache-2.0

//! Labelled telemetry streams: CSV ingestion, SFD→HFD concatenation, random
//! oversampling of failure samples, and a seeded synthetic generator.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::seed;
use crate::telemetry::{
    to_record, validate_with_segment, Label, Segment, TelemetryEvent, ValidationError, REQUIRED_FIELDS,
};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("cannot read or write `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {cause}")]
    Malformed { row: usize, cause: RowError },
    #[error("{0} segment is empty")]
    EmptySegment(Segment),
    #[error("no failure samples to oversample")]
    NoFailureSamples,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RowError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("timestamp does not increase")]
    NonMonotonicTimestamp,
    #[error("{0}")]
    Csv(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StreamError + '_ {
    move |source| StreamError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, err: csv::Error) -> StreamError {
    let row = err.position().map(|p| p.record() as usize).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => StreamError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => StreamError::Malformed {
            row,
            cause: RowError::Csv(format!("{other:?}")),
        },
    }
}

/// Maps canonical field names to the header names used in a particular file,
/// e.g. `osnr_rx → OSNR_SPO2`. Unmapped fields use their canonical name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ColumnMap(pub BTreeMap<String, String>);

impl ColumnMap {
    fn header_for<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.0.get(canonical).map(String::as_str).unwrap_or(canonical)
    }
}

/// Loads a header-addressed CSV file, validating every row.
///
/// Rows are numbered from 1, not counting the header. Columns that are not
/// model fields are kept as event metadata.
pub fn load_csv(path: &Path, columns: &ColumnMap, segment: Segment) -> Result<Vec<TelemetryEvent>, StreamError> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(std::io::BufReader::new(file));
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();

    let reverse: BTreeMap<&str, &str> = REQUIRED_FIELDS
        .iter()
        .map(|&canonical| (columns.header_for(canonical), canonical))
        .collect();

    let mut events = Vec::new();
    let mut last_ts: Option<u64> = None;
    for (i, row) in reader.records().enumerate() {
        let row_number = i + 1;
        let row = row.map_err(|e| csv_err(path, e))?;
        let mut raw = BTreeMap::new();
        for (header, cell) in headers.iter().zip(row.iter()) {
            let key = reverse.get(header).copied().unwrap_or(header);
            raw.insert(key.to_string(), cell.to_string());
        }
        let event = validate_with_segment(&raw, segment).map_err(|e| StreamError::Malformed {
            row: row_number,
            cause: e.into(),
        })?;
        if last_ts.is_some_and(|prev| event.timestamp <= prev) {
            return Err(StreamError::Malformed {
                row: row_number,
                cause: RowError::NonMonotonicTimestamp,
            });
        }
        last_ts = Some(event.timestamp);
        events.push(event);
    }
    Ok(events)
}

/// Writes the required columns in canonical order; the output is readable by
/// [`load_csv`] with an empty [`ColumnMap`].
pub fn write_csv(path: &Path, events: &[TelemetryEvent]) -> Result<(), StreamError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(std::io::BufWriter::new(file));
    writer.write_record(REQUIRED_FIELDS).map_err(|e| csv_err(path, e))?;
    for event in events {
        let record = to_record(event);
        writer
            .write_record(REQUIRED_FIELDS.iter().map(|f| record[*f].as_str()))
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(io_err(path))
}

/// Concatenates SFD then HFD and re-indexes timestamps to `0..len`.
///
/// The first HFD event sits at index `sfd.len()`, the drift boundary.
pub fn merge_sfd_hfd(sfd: &[TelemetryEvent], hfd: &[TelemetryEvent]) -> Result<Vec<TelemetryEvent>, StreamError> {
    if sfd.is_empty() {
        return Err(StreamError::EmptySegment(Segment::Sfd));
    }
    if hfd.is_empty() {
        return Err(StreamError::EmptySegment(Segment::Hfd));
    }
    Ok(sfd
        .iter()
        .chain(hfd)
        .zip(0u64..)
        .map(|(ev, ts)| TelemetryEvent {
            timestamp: ts,
            ..ev.clone()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OversampleTarget {
    /// Total number of failure events wanted in the output.
    FailureCount(usize),
    /// Failure fraction of the output, in `(0, 0.5]`.
    FailureRatio(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversampleConfig {
    pub target: OversampleTarget,
    /// Overrides the sub-seed derived from the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Appends uniformly drawn copies (with replacement) of the input's failure
/// events until the target failure count is met.
///
/// Copies keep every field of their source except the segment, which becomes
/// [`Segment::Oversampled`], and the timestamp, which continues the input's
/// ordinal sequence.
pub fn random_oversample(
    events: &[TelemetryEvent],
    target: OversampleTarget,
    seed: u64,
) -> Result<Vec<TelemetryEvent>, StreamError> {
    let failures: Vec<&TelemetryEvent> = events.iter().filter(|e| e.label == Label::Failure).collect();
    if failures.is_empty() {
        return Err(StreamError::NoFailureSamples);
    }
    let wanted = match target {
        OversampleTarget::FailureCount(n) => n,
        OversampleTarget::FailureRatio(r) => {
            if !(r > 0.0 && r <= 0.5) {
                return Err(StreamError::InvalidConfig(format!(
                    "oversample ratio must lie in (0, 0.5], got {r}"
                )));
            }
            let normals = (events.len() - failures.len()) as f64;
            (r * normals / (1.0 - r)).ceil() as usize
        }
    };
    let mut out = events.to_vec();
    let missing = wanted.saturating_sub(failures.len());
    if missing == 0 {
        return Ok(out);
    }
    let mut rng = seed::rng(seed);
    let first_ts = events.last().map(|e| e.timestamp + 1).unwrap_or(0);
    for ts in (first_ts..).take(missing) {
        let source = failures[rng.random_range(0..failures.len())];
        out.push(TelemetryEvent {
            timestamp: ts,
            segment: Segment::Oversampled,
            ..source.clone()
        });
    }
    Ok(out)
}

/// Receiver BER as a function of OSNR in dB: `½·erfc(√(k·OSNR_lin))`.
pub fn ber_from_osnr(osnr_db: f64) -> f64 {
    const K: f64 = 0.09;
    let lin = 10f64.powf(osnr_db / 10.0);
    (0.5 * erfc((K * lin).sqrt())).clamp(0.0, 0.5)
}

/// Shape of the synthetic soft-failure → hard-failure stream.
///
/// Soft failures originate at the transmitter and show at both ends; each is
/// preceded (when `warning_prefix` is set) by a normal-labelled ramp of
/// gradual degradation. Hard failures are in-line faults that hit only the
/// receiver, begin abruptly and take a deeper OSNR drop. The HFD link also
/// runs at a lower receiver OSNR baseline than the SFD link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_sfd: usize,
    pub n_hfd: usize,
    pub osnr_normal_mean: f64,
    pub osnr_normal_std: f64,
    pub osnr_soft_drop: f64,
    pub osnr_hard_drop: f64,
    /// Receiver OSNR baseline reduction of the HFD link, dB.
    pub hfd_baseline_shift: f64,
    pub osnr_tx_mean: f64,
    pub osnr_tx_std: f64,
    pub tx_soft_drop: f64,
    /// dB subtracted from Tx OSNR before applying the BER curve.
    pub tx_ber_offset: f64,
    /// Log-normal sigma of multiplicative BER jitter.
    pub ber_jitter: f64,
    /// Samples per failure episode; 0 disables failures.
    pub failure_burst_len: usize,
    pub warning_prefix: bool,
    pub prefix_len: usize,
    /// Fraction of the soft drop reached at the end of the warning ramp.
    pub prefix_depth: f64,
    /// Inclusive range of normal samples between SFD episodes.
    pub sfd_gap: (usize, usize),
    pub hfd_gap: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sfd: 10_000,
            n_hfd: 5_000,
            osnr_normal_mean: 25.0,
            osnr_normal_std: 0.5,
            osnr_soft_drop: 5.0,
            osnr_hard_drop: 15.0,
            hfd_baseline_shift: 9.0,
            osnr_tx_mean: 35.0,
            osnr_tx_std: 0.2,
            tx_soft_drop: 5.0,
            tx_ber_offset: 10.0,
            ber_jitter: 0.1,
            failure_burst_len: 40,
            warning_prefix: true,
            prefix_len: 30,
            prefix_depth: 0.5,
            sfd_gap: (100, 200),
            hfd_gap: (20, 80),
        }
    }
}

impl SynthConfig {
    pub fn check(&self) -> Result<(), StreamError> {
        let fail = |msg: String| Err(StreamError::InvalidConfig(msg));
        if self.n_sfd == 0 {
            return fail("n_sfd must be positive".into());
        }
        if !(self.osnr_soft_drop > 0.0 && self.osnr_hard_drop > self.osnr_soft_drop) {
            return fail(format!(
                "need osnr_hard_drop > osnr_soft_drop > 0, got {} and {}",
                self.osnr_hard_drop, self.osnr_soft_drop
            ));
        }
        if self.osnr_normal_mean - self.osnr_hard_drop <= 0.0 {
            return fail("osnr_normal_mean - osnr_hard_drop must stay positive".into());
        }
        if !(0.0..self.osnr_hard_drop).contains(&self.hfd_baseline_shift) {
            return fail("hfd_baseline_shift must lie in [0, osnr_hard_drop)".into());
        }
        if self.osnr_tx_mean - self.tx_soft_drop <= 0.0 || self.tx_soft_drop < 0.0 {
            return fail("tx_soft_drop must lie in [0, osnr_tx_mean)".into());
        }
        for (name, v) in [
            ("osnr_normal_std", self.osnr_normal_std),
            ("osnr_tx_std", self.osnr_tx_std),
            ("ber_jitter", self.ber_jitter),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and non-negative"));
            }
        }
        if !(0.0..1.0).contains(&self.prefix_depth) {
            return fail("prefix_depth must lie in [0, 1)".into());
        }
        for (name, (lo, hi)) in [("sfd_gap", self.sfd_gap), ("hfd_gap", self.hfd_gap)] {
            if lo > hi || hi == 0 {
                return fail(format!("{name} must be a non-empty range with a positive maximum"));
            }
        }
        Ok(())
    }
}

struct Sampler<'a, R> {
    cfg: &'a SynthConfig,
    rx_noise: Normal<f64>,
    tx_noise: Normal<f64>,
    jitter: Normal<f64>,
    rng: R,
}

impl<R: Rng> Sampler<'_, R> {
    fn event(&mut self, rx_mean: f64, tx_mean: f64, label: Label, segment: Segment) -> TelemetryEvent {
        let osnr_rx = (rx_mean + self.rx_noise.sample(&mut self.rng)).max(0.01);
        let osnr_tx = (tx_mean + self.tx_noise.sample(&mut self.rng)).max(0.01);
        let j_rx = self.jitter.sample(&mut self.rng).exp();
        let j_tx = self.jitter.sample(&mut self.rng).exp();
        TelemetryEvent {
            timestamp: 0,
            ber_tx: (ber_from_osnr(osnr_tx - self.cfg.tx_ber_offset) * j_tx).min(0.5),
            osnr_tx,
            ber_rx: (ber_from_osnr(osnr_rx) * j_rx).min(0.5),
            osnr_rx,
            label,
            segment,
            metadata: BTreeMap::new(),
        }
    }

    fn segment(&mut self, segment: Segment, n: usize, out: &mut Vec<TelemetryEvent>) {
        let cfg = self.cfg;
        let soft = segment == Segment::Sfd;
        let (gap_lo, gap_hi) = if soft { cfg.sfd_gap } else { cfg.hfd_gap };
        let base_rx = if soft {
            cfg.osnr_normal_mean
        } else {
            cfg.osnr_normal_mean - cfg.hfd_baseline_shift
        };
        let tx = cfg.osnr_tx_mean;
        let end = out.len() + n;
        while out.len() < end {
            let gap = self.rng.random_range(gap_lo..=gap_hi);
            for _ in 0..gap {
                if out.len() == end {
                    return;
                }
                let ev = self.event(base_rx, tx, Label::Normal, segment);
                out.push(ev);
            }
            if cfg.failure_burst_len == 0 {
                continue;
            }
            if soft && cfg.warning_prefix {
                for k in 0..cfg.prefix_len {
                    if out.len() == end {
                        return;
                    }
                    let frac = cfg.prefix_depth * (k + 1) as f64 / cfg.prefix_len as f64;
                    let ev = self.event(
                        base_rx - frac * cfg.osnr_soft_drop,
                        tx - frac * cfg.tx_soft_drop,
                        Label::Normal,
                        segment,
                    );
                    out.push(ev);
                }
            }
            for _ in 0..cfg.failure_burst_len {
                if out.len() == end {
                    return;
                }
                let ev = if soft {
                    self.event(
                        cfg.osnr_normal_mean - cfg.osnr_soft_drop,
                        tx - cfg.tx_soft_drop,
                        Label::Failure,
                        segment,
                    )
                } else {
                    self.event(cfg.osnr_normal_mean - cfg.osnr_hard_drop, tx, Label::Failure, segment)
                };
                out.push(ev);
            }
        }
    }
}

/// Generates `n_sfd` SFD events followed by `n_hfd` HFD events with strictly
/// increasing timestamps starting at 0. Episode placement follows a seeded
/// uniform gap schedule.
pub fn generate_synthetic(cfg: &SynthConfig, seed: u64) -> Result<Vec<TelemetryEvent>, StreamError> {
    cfg.check()?;
    let noise = |sd: f64| Normal::new(0.0, sd).map_err(|e| StreamError::InvalidConfig(e.to_string()));
    let mut sampler = Sampler {
        cfg,
        rx_noise: noise(cfg.osnr_normal_std)?,
        tx_noise: noise(cfg.osnr_tx_std)?,
        jitter: noise(cfg.ber_jitter)?,
        rng: seed::rng(seed),
    };
    let mut out = Vec::with_capacity(cfg.n_sfd + cfg.n_hfd);
    sampler.segment(Segment::Sfd, cfg.n_sfd, &mut out);
    sampler.segment(Segment::Hfd, cfg.n_hfd, &mut out);
    for (ev, ts) in out.iter_mut().zip(0u64..) {
        ev.timestamp = ts;
    }
    Ok(out)
}

/// Where a stream comes from. Exactly one of file mode (`sfd_path` and
/// `hfd_path`) or synthetic mode (`synth`) must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamConfig {
    pub sfd_path: Option<PathBuf>,
    pub hfd_path: Option<PathBuf>,
    pub columns: ColumnMap,
    pub synth: Option<SynthConfig>,
    pub oversample: Option<OversampleConfig>,
}

/// Segments ready for an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedStream {
    pub sfd: Vec<TelemetryEvent>,
    /// HFD events followed by any oversampled tail.
    pub hfd: Vec<TelemetryEvent>,
    /// Index into `hfd` of the first oversampled event.
    pub injection_index: Option<usize>,
}

impl PreparedStream {
    /// SFD followed by HFD, re-indexed.
    pub fn merged(&self) -> Result<Vec<TelemetryEvent>, StreamError> {
        merge_sfd_hfd(&self.sfd, &self.hfd)
    }
}

impl StreamConfig {
    pub fn synthetic(cfg: SynthConfig) -> Self {
        StreamConfig {
            synth: Some(cfg),
            ..Default::default()
        }
    }

    pub fn check(&self) -> Result<(), StreamError> {
        let file_mode = self.sfd_path.is_some() || self.hfd_path.is_some();
        match (file_mode, &self.synth) {
            (true, Some(_)) => Err(StreamError::InvalidConfig(
                "stream: set either sfd_path/hfd_path or synth, not both".into(),
            )),
            (false, None) => Err(StreamError::InvalidConfig(
                "stream: one of sfd_path/hfd_path or synth is required".into(),
            )),
            (true, None) if self.sfd_path.is_none() || self.hfd_path.is_none() => Err(StreamError::InvalidConfig(
                "stream: file mode needs both sfd_path and hfd_path".into(),
            )),
            (false, Some(s)) => s.check(),
            _ => Ok(()),
        }
    }

    /// Loads or generates the SFD and HFD segments and applies oversampling
    /// to the HFD. Randomness is drawn from sub-seeds of `root_seed`.
    pub fn prepare(&self, root_seed: u64) -> Result<PreparedStream, StreamError> {
        self.check()?;
        let (sfd, hfd) = match &self.synth {
            Some(cfg) => {
                let all = generate_synthetic(cfg, seed::derive(root_seed, seed::GENERATOR))?;
                let (sfd, hfd): (Vec<_>, Vec<_>) = all.into_iter().partition(|e| e.segment == Segment::Sfd);
                (sfd, hfd)
            }
            None => {
                let sfd_path = self.sfd_path.as_deref().expect("checked");
                let hfd_path = self.hfd_path.as_deref().expect("checked");
                (
                    load_csv(sfd_path, &self.columns, Segment::Sfd)?,
                    load_csv(hfd_path, &self.columns, Segment::Hfd)?,
                )
            }
        };
        let (hfd, injection_index) = match &self.oversample {
            Some(o) => {
                let seed = o.seed.unwrap_or_else(|| seed::derive(root_seed, seed::OVERSAMPLE));
                let before = hfd.len();
                let out = random_oversample(&hfd, o.target, seed)?;
                let idx = (out.len() > before).then_some(before);
                (out, idx)
            }
            None => (hfd, None),
        };
        Ok(PreparedStream {
            sfd,
            hfd,
            injection_index,
        })
    }
}
