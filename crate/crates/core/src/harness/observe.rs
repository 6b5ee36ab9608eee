//! What a scripted policy sees after each call: the agent-facing snapshot
//! text and the results of its last call. Policies locate elements only
//! through this text.

use crate::exec::{ActionResult, ErrorCode};
use crate::snapshot::{parse_line, parse_marker, NodeRole, NodeStates, ParsedLine, VersionedRef};

#[derive(Debug, Clone, Default)]
pub struct Observation {
    pub version: u64,
    pub url: String,
    /// Snapshot lines as shown to the agent, possibly trimmed.
    pub snapshot_text: String,
    /// Output of the last read call (ranged or subtree snapshot), if any.
    pub requested: Option<String>,
    pub last_results: Vec<ActionResult>,
    /// Request-level error of the last call, e.g. the failing bulk action.
    pub last_error: Option<(ErrorCode, String)>,
}

impl Observation {
    /// Parsed node lines of the snapshot and any requested range.
    pub fn lines(&self) -> Vec<ParsedLine> {
        let requested = self.requested.as_deref().unwrap_or("");
        self.snapshot_text
            .lines()
            .chain(requested.lines())
            .filter_map(|l| parse_line(l).ok())
            .collect()
    }

    pub fn markers(&self) -> Vec<(u32, u32)> {
        self.snapshot_text
            .lines()
            .filter_map(parse_marker)
            .map(|r| (*r.start(), *r.end()))
            .collect()
    }

    pub fn vref(&self, ref_id: u32) -> VersionedRef {
        VersionedRef::new(self.version, ref_id)
    }

    pub fn find_where(&self, pred: impl Fn(&ParsedLine) -> bool) -> Option<ParsedLine> {
        self.lines().into_iter().find(|l| pred(l))
    }

    pub fn find(&self, role: NodeRole, name: &str) -> Option<VersionedRef> {
        self.find_where(|l| l.role == role && l.name == name).map(|l| self.vref(l.ref_id))
    }

    pub fn is_disabled(&self, role: NodeRole, name: &str) -> bool {
        self.find_where(|l| l.role == role && l.name == name)
            .is_some_and(|l| l.states.contains(NodeStates::DISABLED))
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.snapshot_text.contains(needle) || self.requested.as_deref().is_some_and(|r| r.contains(needle))
    }

    pub fn failed_with(&self) -> Option<ErrorCode> {
        self.last_error.as_ref().map(|e| e.0)
    }
}
