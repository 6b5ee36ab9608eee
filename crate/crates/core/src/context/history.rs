//! Step history: compressed per-step memo records, and the raw transcript
//! used as the uncompressed baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{Action, AgentMemo};

pub const DEFAULT_RAW_BUFFER: usize = 45;
pub const DEFAULT_SUMMARY_CAPACITY: usize = 45;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HistoryError {
    #[error("step {0} changes page state but carries no memory")]
    MissingMemory(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub evaluation_previous_goal: String,
    pub memory: String,
    pub next_goal: String,
    /// Calls in execution order, e.g. `click(ref=42), type(ref=42, "John Doe")`.
    pub actions_digest: String,
    pub user_interjection: Option<String>,
}

/// Append-only step log. The newest `raw_buffer_capacity` steps render in
/// full; the `summary_capacity` steps before them keep only evaluation and
/// memory; anything older is not rendered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryLog {
    pub initial_request: String,
    pub steps: Vec<StepRecord>,
    pub raw_buffer_capacity: usize,
    pub summary_capacity: usize,
}

impl HistoryLog {
    pub fn new(initial_request: impl Into<String>) -> Self {
        Self::with_capacity(initial_request, DEFAULT_RAW_BUFFER, DEFAULT_SUMMARY_CAPACITY)
    }

    pub fn with_capacity(initial_request: impl Into<String>, raw: usize, summaries: usize) -> Self {
        HistoryLog {
            initial_request: initial_request.into(),
            steps: Vec::new(),
            raw_buffer_capacity: raw,
            summary_capacity: summaries,
        }
    }

    /// Appends one step. Steps that change state must carry a memory.
    pub fn record_step(
        &mut self,
        memo: &AgentMemo,
        actions: &[Action],
        user_interjection: Option<&str>,
    ) -> Result<&StepRecord, HistoryError> {
        let index = self.steps.len() + 1;
        let mutating = actions.iter().any(|a| !a.kind().is_read_only());
        let memory = memo.memory.clone().unwrap_or_default();
        if mutating && memory.trim().is_empty() {
            return Err(HistoryError::MissingMemory(index));
        }
        let digest: Vec<String> = actions.iter().map(Action::digest).collect();
        self.steps.push(StepRecord {
            index,
            evaluation_previous_goal: memo.evaluation_previous_goal.clone().unwrap_or_default(),
            memory,
            next_goal: memo.next_goal.clone().unwrap_or_default(),
            actions_digest: digest.join(", "),
            user_interjection: user_interjection.map(str::to_string),
        });
        Ok(self.steps.last().expect("just pushed"))
    }

    /// Index of the first step rendered in full.
    pub fn first_raw(&self) -> usize {
        self.steps.len().saturating_sub(self.raw_buffer_capacity)
    }

    pub fn render(&self) -> String {
        render_history(self)
    }
}

fn push_line(out: &mut String, line: &str) {
    if !line.is_empty() {
        out.push_str(line);
        out.push('\n');
    }
}

pub fn render_history(log: &HistoryLog) -> String {
    let mut out = format!("<initial_user_request>{}</initial_user_request>\n", log.initial_request);
    let first_raw = log.first_raw();
    let first_shown = first_raw.saturating_sub(log.summary_capacity);
    for (i, step) in log.steps.iter().enumerate().skip(first_shown) {
        if let Some(u) = &step.user_interjection {
            out.push_str(&format!("\n<follow_up_user_request> {u} </follow_up_user_request>\n"));
        }
        out.push_str("\n<step>\n");
        push_line(&mut out, &step.evaluation_previous_goal);
        push_line(&mut out, &step.memory);
        if i >= first_raw {
            push_line(&mut out, &step.next_goal);
            push_line(&mut out, &step.actions_digest);
        }
        out.push_str("</step>\n");
    }
    out
}

/// Uncompressed baseline: every call and every observation, verbatim.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTranscript {
    pub initial_request: String,
    pub entries: Vec<String>,
}

impl RawTranscript {
    pub fn new(initial_request: impl Into<String>) -> Self {
        RawTranscript { initial_request: initial_request.into(), entries: Vec::new() }
    }

    /// Records a tool call (as wire JSON) and what it returned to the agent.
    pub fn record(&mut self, call_json: &str, observation: &str) {
        self.entries.push(format!("<tool_call>\n{call_json}\n</tool_call>\n<tool_result>\n{observation}</tool_result>\n"));
    }

    pub fn render(&self) -> String {
        let mut out = format!("<user>\n{}\n</user>\n", self.initial_request);
        for e in &self.entries {
            out.push_str(e);
        }
        out
    }
}
