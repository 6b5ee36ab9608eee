//! Snapshot trimming: a directive of ref ranges to keep, a deterministic
//! heuristic that produces one, and the renderer that applies it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::snapshot::{
    parse_line, parse_marker, render_line, render_marker, serialize_snapshot, AccessibilitySnapshot, NodeRole,
    SnapshotText,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrimError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid trim directive: {0}")]
    InvalidDirective(String),
    #[error("trimmer unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TrimRange {
    pub start: u32,
    pub end: u32,
}

/// Inclusive ref ranges to keep. Wire form: `[{"start":1,"end":50}, ...]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TrimDirective {
    pub ranges: Vec<TrimRange>,
}

impl TrimDirective {
    pub fn new(ranges: impl IntoIterator<Item = (u32, u32)>) -> Self {
        TrimDirective { ranges: ranges.into_iter().map(|(start, end)| TrimRange { start, end }).collect() }
    }

    pub fn full(max_ref: u32) -> Self {
        Self::new([(1, max_ref)])
    }

    pub fn from_json(text: &str) -> Result<Self, TrimError> {
        serde_json::from_str(text).map_err(|e| TrimError::InvalidDirective(e.to_string()))
    }

    /// Checks ordering and bounds. A start of 0 is read as 1.
    pub fn validate(&self, max_ref: u32) -> Result<TrimDirective, TrimError> {
        let bad = |m: String| Err(TrimError::InvalidDirective(m));
        if self.ranges.is_empty() {
            return bad("no ranges".into());
        }
        let mut out = Vec::with_capacity(self.ranges.len());
        let mut prev_end = 0u32;
        for (i, r) in self.ranges.iter().enumerate() {
            let start = r.start.max(1);
            if start > r.end {
                return bad(format!("range {i} has start {} after end {}", r.start, r.end));
            }
            if r.end > max_ref {
                return bad(format!("range {i} ends at {} beyond the last ref {max_ref}", r.end));
            }
            if i > 0 && start <= prev_end {
                return bad(format!("range {i} overlaps or precedes the previous range"));
            }
            prev_end = r.end;
            out.push(TrimRange { start, end: r.end });
        }
        Ok(TrimDirective { ranges: out })
    }

    pub fn contains(&self, ref_id: u32) -> bool {
        self.ranges.iter().any(|r| (r.start..=r.end).contains(&ref_id))
    }
}

/// Renders kept refs and a `[refs A-B trimmed]` marker for each gap that
/// holds at least one ref.
pub fn apply_trim(snapshot: &AccessibilitySnapshot, directive: &TrimDirective) -> Result<SnapshotText, TrimError> {
    let directive = directive.validate(snapshot.max_ref())?;
    let mut out = String::new();
    let mut gap: Option<(u32, u32)> = None;
    for node in snapshot.nodes() {
        if directive.contains(node.ref_id) {
            if let Some((a, b)) = gap.take() {
                out.push_str(&render_marker(a, b));
            }
            out.push_str(&render_line(node));
        } else {
            gap = Some(match gap {
                Some((a, _)) => (a, node.ref_id),
                None => (node.ref_id, node.ref_id),
            });
        }
    }
    if let Some((a, b)) = gap {
        out.push_str(&render_marker(a, b));
    }
    Ok(SnapshotText::new(out))
}

/// What a trimmer sees: the full snapshot text, the rendered history, and the ref count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrimRequest {
    pub snapshot_text: String,
    pub history_text: String,
    pub total_refs: u32,
}

pub trait Trimmer {
    fn trim(&self, request: &TrimRequest) -> Result<TrimDirective, TrimError>;
}

/// Transport to a remote trimming model. Returns the raw response body.
pub trait TrimEndpoint {
    fn call(&self, request_json: &str) -> Result<String, String>;
}

/// Delegates to a model behind `TrimEndpoint`; the response must parse as a directive.
pub struct ExternalTrimmer<E> {
    pub endpoint: E,
}

impl<E: TrimEndpoint> Trimmer for ExternalTrimmer<E> {
    fn trim(&self, request: &TrimRequest) -> Result<TrimDirective, TrimError> {
        let body = serde_json::to_string(request).map_err(|e| TrimError::Unavailable(e.to_string()))?;
        let response = self.endpoint.call(&body).map_err(TrimError::Unavailable)?;
        TrimDirective::from_json(&response)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicTrimmer {
    /// Minimum consecutive identical blocks that make a repetitive list.
    pub min_run: usize,
    /// Blocks kept at the head of each repetitive list.
    pub keep_items: usize,
    /// Lines of context kept around each interactive element (odd, centered).
    pub window: usize,
    /// Longest block, in lines, considered when looking for repetition.
    pub max_period: usize,
}

impl Default for HeuristicTrimmer {
    fn default() -> Self {
        HeuristicTrimmer { min_run: 8, keep_items: 5, window: 35, max_period: 32 }
    }
}

/// A repetitive run: `count` copies of a `period`-line block starting at line `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: usize,
    pub period: usize,
    pub count: usize,
}

impl HeuristicTrimmer {
    /// Maximal runs of a repeated role block, scanned left to right. At each
    /// position the period covering the most lines wins; ties go to the shorter period.
    pub fn find_runs(&self, roles: &[NodeRole]) -> Vec<Run> {
        let n = roles.len();
        let mut runs = Vec::new();
        let mut i = 0;
        while i < n {
            let mut best: Option<Run> = None;
            for p in 1..=self.max_period.min((n - i) / self.min_run.max(1)) {
                let block = &roles[i..i + p];
                let mut count = 1;
                while i + (count + 1) * p <= n && roles[i + count * p..i + (count + 1) * p] == *block {
                    count += 1;
                }
                if count >= self.min_run && best.is_none_or(|b| count * p > b.count * b.period) {
                    best = Some(Run { start: i, period: p, count });
                }
            }
            match best {
                Some(run) => {
                    runs.push(run);
                    i += run.period * run.count;
                }
                None => i += 1,
            }
        }
        runs
    }

    /// Computes the kept refs for parsed snapshot lines.
    pub fn plan(&self, lines: &[(u32, NodeRole)]) -> TrimDirective {
        let n = lines.len();
        if n == 0 {
            return TrimDirective::default();
        }
        let roles: Vec<NodeRole> = lines.iter().map(|l| l.1).collect();
        let mut in_tail = vec![false; n];
        let mut keep = vec![false; n];
        for run in self.find_runs(&roles) {
            let block = &roles[run.start..run.start + run.period];
            if block.iter().any(|r| r.is_form_control()) {
                continue;
            }
            let head_end = run.start + run.period * self.keep_items.min(run.count);
            keep[run.start..head_end].fill(true);
            in_tail[head_end..run.start + run.period * run.count].fill(true);
        }
        let half = self.window / 2;
        for i in 0..n {
            if !roles[i].is_interactive() {
                continue;
            }
            keep[i] = true;
            if in_tail[i] {
                continue;
            }
            let mut j = i;
            while j > 0 && i - (j - 1) <= half && !in_tail[j - 1] {
                j -= 1;
                keep[j] = true;
            }
            let mut j = i + 1;
            while j < n && j - i <= half && !in_tail[j] {
                keep[j] = true;
                j += 1;
            }
        }
        let mut ranges: Vec<(u32, u32)> = Vec::new();
        for (i, &(ref_id, _)) in lines.iter().enumerate() {
            if !keep[i] {
                continue;
            }
            match ranges.last_mut() {
                Some(last) if i > 0 && keep[i - 1] => last.1 = ref_id,
                _ => ranges.push((ref_id, ref_id)),
            }
        }
        TrimDirective::new(ranges)
    }
}

/// Parses snapshot text into (ref, role) pairs, skipping trim markers.
pub fn parse_roles(text: &SnapshotText) -> Result<Vec<(u32, NodeRole)>, TrimError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| parse_marker(l).is_none())
        .map(|(i, l)| {
            parse_line(l)
                .map(|p| (p.ref_id, p.role))
                .map_err(|reason| TrimError::Parse { line: i + 1, reason })
        })
        .collect()
}

impl Trimmer for HeuristicTrimmer {
    fn trim(&self, request: &TrimRequest) -> Result<TrimDirective, TrimError> {
        let lines = parse_roles(&SnapshotText::new(request.snapshot_text.clone()))?;
        Ok(self.plan(&lines))
    }
}

/// Trims with the given trimmer. Any failure falls back to the untrimmed
/// serialization capped at `max_chars`.
pub fn trim_snapshot(
    trimmer: &dyn Trimmer,
    snapshot: &AccessibilitySnapshot,
    history_text: &str,
    max_chars: usize,
) -> (SnapshotText, Option<TrimDirective>) {
    let full = serialize_snapshot(snapshot, usize::MAX);
    let request = TrimRequest {
        snapshot_text: full.into_string(),
        history_text: history_text.to_string(),
        total_refs: snapshot.max_ref(),
    };
    match trimmer
        .trim(&request)
        .and_then(|d| d.validate(snapshot.max_ref()))
        .and_then(|d| apply_trim(snapshot, &d).map(|t| (t, d)))
    {
        Ok((text, d)) => (text, Some(d)),
        Err(_) => (serialize_snapshot(snapshot, max_chars), None),
    }
}

/// Heuristic-trims snapshot text directly.
pub fn heuristic_trim(snapshot_text: &SnapshotText, history: &str, total_refs: u32) -> Result<TrimDirective, TrimError> {
    HeuristicTrimmer::default().trim(&TrimRequest {
        snapshot_text: snapshot_text.as_str().to_string(),
        history_text: history.to_string(),
        total_refs,
    })
}

/// Refs of every interactive line; used by coverage checks.
pub fn interactive_refs(lines: &[(u32, NodeRole)]) -> BTreeSet<u32> {
    lines.iter().filter(|l| l.1.is_interactive()).map(|l| l.0).collect()
}
