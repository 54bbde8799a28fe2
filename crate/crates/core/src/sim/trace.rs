//! Event trace, its digest, and per-kind packet accounting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};
use core::hash::Hasher;

use fnv::FnvHasher;

use crate::types::{NodeId, SimTime};

/// Ordered event log. Every record is folded into a 64-bit FNV-1a digest of
/// its canonical line `time\tkind\tactor\tdetail\n`; the lines themselves are
/// kept only on request.
pub struct EventTrace {
    hasher: FnvHasher,
    lines: Option<Vec<String>>,
    last_time: SimTime,
    records: u64,
    scratch: String,
}

impl fmt::Debug for EventTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventTrace")
            .field("records", &self.records)
            .field("digest", &self.digest())
            .finish()
    }
}

impl EventTrace {
    pub fn new(keep_lines: bool) -> Self {
        EventTrace {
            hasher: FnvHasher::default(),
            lines: keep_lines.then(Vec::new),
            last_time: SimTime::ZERO,
            records: 0,
            scratch: String::new(),
        }
    }

    /// Appends a record. Panics if time goes backwards.
    pub fn record(&mut self, time: SimTime, kind: &str, actor: NodeId, detail: fmt::Arguments<'_>) {
        assert!(time >= self.last_time, "trace time went backwards");
        self.last_time = time;
        self.records += 1;
        self.scratch.clear();
        let _ = write!(self.scratch, "{}\t{}\t{}\t", time, kind, actor);
        let _ = self.scratch.write_fmt(detail);
        self.scratch.push('\n');
        self.hasher.write(self.scratch.as_bytes());
        if let Some(lines) = &mut self.lines {
            lines.push(self.scratch.trim_end_matches('\n').into());
        }
    }

    pub fn digest(&self) -> u64 {
        self.hasher.finish()
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn lines(&self) -> Option<&[String]> {
        self.lines.as_deref()
    }

    /// Tab-separated log, one record per line.
    pub fn to_tsv(&self) -> Option<String> {
        let lines = self.lines.as_ref()?;
        let mut out = String::new();
        for l in lines {
            out.push_str(l);
            out.push('\n');
        }
        Some(out)
    }
}

/// Frame accounting for one packet kind. Every frame put on a link ends up
/// delivered to the receiver, lost on the link, or still in flight.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KindCounters {
    pub sent: u64,
    pub delivered: u64,
    pub lost: u64,
    pub in_flight: u64,
    /// Delivered frames the receiver refused or dropped (subset of `delivered`).
    pub discarded: u64,
}

impl KindCounters {
    pub fn balanced(&self) -> bool {
        self.sent == self.delivered + self.lost + self.in_flight
    }
}

pub type Conservation = BTreeMap<&'static str, KindCounters>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionStage {
    Rank,
    Pdr,
}

impl DetectionStage {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionStage::Rank => "rank",
            DetectionStage::Pdr => "pdr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionVerdict {
    Suspicious,
    Confirmed,
    Cleared,
    /// No probe reached the suspect.
    Indeterminate,
}

impl DetectionVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            DetectionVerdict::Suspicious => "suspicious",
            DetectionVerdict::Confirmed => "confirmed",
            DetectionVerdict::Cleared => "cleared",
            DetectionVerdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub time: SimTime,
    pub observer: NodeId,
    pub suspect: NodeId,
    pub stage: DetectionStage,
    pub verdict: DetectionVerdict,
    /// Probe PDR for the `pdr` stage.
    pub pdr: Option<f64>,
}

impl fmt::Display for DetectionRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}",
            self.time,
            self.observer,
            self.suspect,
            self.stage.as_str(),
            self.verdict.as_str()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarantineRecord {
    pub time: SimTime,
    pub malicious: NodeId,
    /// Nodes that lost their parent because of this quarantine.
    pub detached: Vec<NodeId>,
    pub reattached: usize,
    pub unattached: usize,
}

impl fmt::Display for QuarantineRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}",
            self.time, self.malicious, self.reattached, self.unattached
        )
    }
}
