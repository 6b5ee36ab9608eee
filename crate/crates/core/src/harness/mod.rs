//! Scenario runner: drives a scripted policy through the executor, assembles
//! every request's context through the budget engine and records a
//! replayable JSON-lines trace.

mod observe;
mod policy;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::budget::{
    assemble_prompt, cached_tokens, compute_cost, estimate_tokens, AssembledPrompt, CostReport, LayerKind, PriceTable,
    PromptLayers, TokenLedger,
};
use crate::context::{trim_snapshot, HeuristicTrimmer, HistoryLog, RawTranscript};
use crate::exec::{ActionError, ActionKind, ActionResult, ErrorCode, ExecConfig, Executor, Status};
use crate::safety::{profile_snapshot_view, AgentProfile, ConfirmationProvider, HostPattern, ProfileError};
use crate::snapshot::serialize_snapshot;
use crate::web::{BrowserSession, PageTemplate, WebError};

pub use observe::Observation;
pub use policy::{
    text_value, trim_stress_targets, CheapestProduct, FormFill, HistoryStress, ModelAdapter, NamedTarget, Policy, Script,
    ScriptStep, TrimStress, Turn,
};

pub const SYSTEM_PROMPT: &str = include_str!("../../config/system_prompt.txt");
pub const FAILURE_ADAPTATION: &str = include_str!("../../config/failure_adaptation.txt");

/// Hard stop for runaway policies.
const MAX_REQUESTS: usize = 2_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Template(#[from] WebError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
    #[error("invalid trace line {line}: {message}")]
    Trace { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryMode {
    Full,
    #[default]
    Compressed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrimMode {
    #[default]
    Off,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConfirmMode {
    #[default]
    AutoGrant,
    AutoDeny,
    Interactive,
}

impl fmt::Display for HistoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HistoryMode::Full => "full",
            HistoryMode::Compressed => "compressed",
        })
    }
}

impl fmt::Display for TrimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrimMode::Off => "off",
            TrimMode::Heuristic => "heuristic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    SequentialFormFill,
    BulkFormFill {
        #[serde(default = "default_max_batch")]
        max_batch: usize,
    },
    CheapestProduct {
        #[serde(default = "default_pick_count")]
        count: usize,
    },
    TrimStress {
        steps: usize,
    },
    HistoryStress {
        steps: usize,
    },
    Custom {
        steps: Vec<ScriptStep>,
        #[serde(default)]
        answer: Option<String>,
    },
}

fn default_max_batch() -> usize {
    32
}

fn default_pick_count() -> usize {
    3
}

fn default_max_chars() -> usize {
    200_000
}

/// A scenario file. Everything a run depends on besides the seed and the
/// mode flags, which override the file's defaults.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub template: PageTemplate,
    /// Profile file, relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    pub policy: PolicySpec,
    /// Overrides the policy's own task statement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_request: Option<String>,
    #[serde(default)]
    pub history: HistoryMode,
    #[serde(default)]
    pub trim: TrimMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_action_latency_ticks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_buffer_capacity: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_capacity: Option<usize>,
    #[serde(default = "default_max_chars")]
    pub max_snapshot_chars: usize,
    /// Free text naming the values chosen to land on a target number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<String>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let mut value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        // Parse the template separately for precise template errors.
        if let Some(t) = value.get_mut("template") {
            *t = serde_json::to_value(PageTemplate::from_json(t)?).expect("template serializes");
        }
        let s: Scenario = serde_json::from_value(value).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Scenario::from_json(&read(path)?)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.template.validate()?;
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        match (&self.policy, &self.template) {
            (PolicySpec::SequentialFormFill | PolicySpec::BulkFormFill { .. }, PageTemplate::Form(_)) => {}
            (PolicySpec::CheapestProduct { count }, PageTemplate::Products(_)) if *count > 0 => {}
            (PolicySpec::HistoryStress { .. }, PageTemplate::Products(_)) => {}
            (PolicySpec::TrimStress { .. }, PageTemplate::Article(p)) if p.paragraph_count >= 10 => {}
            (PolicySpec::Custom { steps, .. }, _) if !steps.is_empty() => {}
            (PolicySpec::Custom { .. }, _) => return bad("custom policy needs at least one step"),
            (p, t) => {
                return Err(ScenarioError::Invalid(format!(
                    "policy {} does not fit template {}",
                    serde_json::to_string(p).unwrap_or_default(),
                    t.name()
                )))
            }
        }
        if self.max_snapshot_chars < 256 {
            return bad("max_snapshot_chars must be at least 256");
        }
        Ok(())
    }

    fn build_policy(&self) -> Box<dyn Policy> {
        match &self.policy {
            PolicySpec::SequentialFormFill => Box::new(FormFill::sequential()),
            PolicySpec::BulkFormFill { max_batch } => Box::new(FormFill::bulk(*max_batch)),
            PolicySpec::CheapestProduct { count } => Box::new(CheapestProduct::new(*count)),
            PolicySpec::TrimStress { steps } => {
                let paragraphs = match &self.template {
                    PageTemplate::Article(p) => p.paragraph_count,
                    _ => 0,
                };
                Box::new(TrimStress::new(trim_stress_targets(*steps, paragraphs)))
            }
            PolicySpec::HistoryStress { steps } => Box::new(HistoryStress::new(*steps)),
            PolicySpec::Custom { steps, answer } => {
                let mut s = Script::new(steps.clone());
                if let Some(a) = answer {
                    s.answer = a.clone();
                }
                Box::new(s)
            }
        }
    }

    fn interjection_at(&self, step: usize) -> Option<String> {
        match &self.policy {
            PolicySpec::Custom { steps, .. } => steps.get(step).and_then(|s| s.user_interjection.clone()),
            _ => None,
        }
    }
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Io { path: path.display().to_string(), message: e.to_string() })
}

/// The profile used when a scenario names none.
pub fn default_profile() -> AgentProfile {
    AgentProfile::unrestricted("default", vec!["*.example".parse().expect("valid pattern")])
}

/// Loads the scenario's profile file, resolved relative to the scenario.
pub fn scenario_profile(scenario: &Scenario, scenario_path: &Path) -> Result<AgentProfile, ScenarioError> {
    match &scenario.profile {
        None => Ok(default_profile()),
        Some(rel) => {
            let base = scenario_path.parent().unwrap_or(Path::new("."));
            Ok(AgentProfile::from_json(&read(&base.join(rel))?)?)
        }
    }
}

/// Mode overrides and the seed for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    pub seed: u64,
    pub history: HistoryMode,
    pub trim: TrimMode,
    pub confirm: ConfirmMode,
}

impl RunOptions {
    pub fn for_scenario(scenario: &Scenario, seed: u64) -> Self {
        RunOptions { seed, history: scenario.history, trim: scenario.trim, confirm: ConfirmMode::AutoGrant }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Completed,
    /// A gate denied a call, or the user declined a confirmation.
    PolicyDenied { step: usize, code: ErrorCode, message: String },
    Failed { step: usize, message: String },
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Completed => 0,
            Outcome::PolicyDenied { .. } => 2,
            Outcome::Failed { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub seed: u64,
    pub history: HistoryMode,
    pub trim: TrimMode,
    pub profile: String,
    pub outcome: Outcome,
    pub tool_calls: u64,
    pub individual_actions: u64,
    /// Model requests: one per tool call plus the final answer.
    pub steps: u64,
    pub elapsed_ticks: u64,
    pub ledger: TokenLedger,
    pub cost: CostReport,
    /// Input tokens of each request.
    pub context_tokens: Vec<u64>,
    pub snapshot_tokens: Vec<u64>,
    pub history_tokens: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    /// Page and session fingerprint at the end of the run.
    pub final_state: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confirmation {
    pub element: String,
    pub kind: ActionKind,
    pub granted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub kind: ActionKind,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ActionError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
}

impl From<&ActionResult> for ResultRecord {
    fn from(r: &ActionResult) -> Self {
        ResultRecord {
            kind: r.kind,
            status: r.status,
            error: r.error.clone(),
            verdict: r.verdict.as_ref().map(|v| format!("{:?}: {}", v.decision, v.reason)),
        }
    }
}

/// One line of the trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Start {
        scenario: Box<Scenario>,
        profile: serde_json::Value,
        options: RunOptions,
    },
    Call {
        step: usize,
        call: serde_json::Value,
        results: Vec<ResultRecord>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<ActionError>,
        confirmations: Vec<Confirmation>,
        input_tokens: u64,
        cached_tokens: u64,
        output_tokens: u64,
        snapshot_version: u64,
        clock: u64,
    },
    Finish {
        step: usize,
        outcome: Outcome,
        input_tokens: u64,
        cached_tokens: u64,
        output_tokens: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer: Option<String>,
    },
}

/// Wraps a provider and records every question and answer.
struct Recording<'a> {
    inner: &'a mut dyn ConfirmationProvider,
    log: Vec<Confirmation>,
}

impl ConfirmationProvider for Recording<'_> {
    fn confirm(&mut self, element: &str, kind: ActionKind) -> bool {
        let granted = self.inner.confirm(element, kind);
        self.log.push(Confirmation { element: element.to_string(), kind, granted });
        granted
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: Vec<TraceEvent>,
}

impl RunOutput {
    /// The trace as JSON lines.
    pub fn trace_jsonl(&self) -> String {
        self.trace
            .iter()
            .map(|e| serde_json::to_string(e).expect("trace event serializes") + "\n")
            .collect()
    }
}

fn result_summary(results: &[ActionResult], error: Option<&ActionError>) -> String {
    let mut out = String::new();
    for r in results {
        match (&r.status, &r.error) {
            (Status::Ok, _) => out.push_str(&format!("- {}: ok\n", r.kind)),
            (Status::Skipped, _) => out.push_str(&format!("- {}: skipped\n", r.kind)),
            (Status::Error, Some(e)) => out.push_str(&format!("- {}: {:?}: {}\n", r.kind, e.code, e.message)),
            (Status::Error, None) => out.push_str(&format!("- {}: error\n", r.kind)),
        }
    }
    if results.is_empty() {
        if let Some(e) = error {
            out.push_str(&format!("- rejected: {:?}: {}\n", e.code, e.message));
        }
    }
    out
}

struct Session<'s> {
    scenario: &'s Scenario,
    profile: &'s AgentProfile,
    options: RunOptions,
    exec: Executor,
    log: HistoryLog,
    transcript: RawTranscript,
    system: String,
    session_context: String,
}

impl Session<'_> {
    fn history_text(&self) -> String {
        match self.options.history {
            HistoryMode::Compressed => self.log.render(),
            HistoryMode::Full => self.transcript.render(),
        }
    }

    fn tab_state(&self) -> String {
        let browser = self.exec.browser();
        let mut out = String::from("Open tabs:\n");
        for tab in browser.tabs() {
            let title = tab.page.node(tab.page.root()).map_or("", |n| n.name.as_str());
            let active = if browser.active_tab_id() == Some(tab.id) { " (active)" } else { "" };
            out.push_str(&format!("[{}]{active} {title}\n", tab.id));
        }
        out
    }

    /// Observation after a call; `requested` carries read output.
    fn observe(&self, summary: String, requested: Option<String>) -> (Observation, String) {
        let mut obs = Observation { requested, ..Observation::default() };
        let mut layer = summary;
        match self.exec.snapshot() {
            Some(snap) => {
                let view = profile_snapshot_view(self.profile, snap);
                let text = match self.options.trim {
                    TrimMode::Off => serialize_snapshot(&view, self.scenario.max_snapshot_chars),
                    TrimMode::Heuristic => {
                        trim_snapshot(&HeuristicTrimmer::default(), &view, &self.history_text(), self.scenario.max_snapshot_chars).0
                    }
                };
                obs.version = snap.version();
                obs.url = snap.origin_url().to_string();
                obs.snapshot_text = text.into_string();
                layer.push_str(&format!("[page {} | snapshot v{}]\n", obs.url, obs.version));
                layer.push_str(&obs.snapshot_text);
            }
            None => layer.push_str("[no page open]\n"),
        }
        if let Some(r) = &obs.requested {
            layer.push_str("<requested_refs>\n");
            layer.push_str(r);
            layer.push_str("</requested_refs>\n");
        }
        (obs, layer)
    }

    fn assemble(&self, snapshot_layer: &str) -> AssembledPrompt {
        assemble_prompt(&PromptLayers {
            system_prompt: self.system.clone(),
            session_context: self.session_context.clone(),
            tab_state: self.tab_state(),
            history: self.history_text(),
            snapshot: snapshot_layer.to_string(),
        })
    }
}

fn session_context(profile: &AgentProfile) -> String {
    let tools: Vec<&str> = profile.allowed_tools.iter().map(|k| k.as_str()).collect();
    let domains: Vec<String> = profile.domain_allowlist.iter().map(HostPattern::to_string).collect();
    format!(
        "Profile: {}\nAllowed tools: {}\nAllowed domains: {}\nConfirmation required for: {}\n",
        profile.name,
        tools.join(", "),
        if domains.is_empty() { "none".to_string() } else { domains.join(", ") },
        profile.sensitive_keywords.join(", "),
    )
}

/// Runs a scenario to completion. The result is a pure function of the
/// arguments and the provider's answers.
pub fn run_scenario(
    scenario: &Scenario,
    profile: &AgentProfile,
    options: RunOptions,
    confirm: &mut dyn ConfirmationProvider,
) -> Result<RunOutput, ScenarioError> {
    scenario.validate()?;
    let mut browser = BrowserSession::new(options.seed);
    browser.load_template(&scenario.template)?;
    let config = ExecConfig {
        latency_ticks: scenario.per_action_latency_ticks.unwrap_or(ExecConfig::default().latency_ticks),
        ..ExecConfig::default()
    };
    let mut policy = scenario.build_policy();
    let request = scenario.initial_request.clone().unwrap_or_else(|| policy.task());
    let raw = scenario.raw_buffer_capacity.unwrap_or(crate::context::DEFAULT_RAW_BUFFER);
    let summaries = scenario.summary_capacity.unwrap_or(crate::context::DEFAULT_SUMMARY_CAPACITY);
    let mut s = Session {
        scenario,
        profile,
        options,
        exec: Executor::new(browser, config),
        log: HistoryLog::with_capacity(request.clone(), raw, summaries),
        transcript: RawTranscript::new(request),
        system: format!("{SYSTEM_PROMPT}\n{FAILURE_ADAPTATION}"),
        session_context: session_context(profile),
    };

    let mut trace = vec![TraceEvent::Start {
        scenario: Box::new(scenario.clone()),
        profile: serde_json::to_value(profile).expect("profile serializes"),
        options,
    }];
    let mut ledger = TokenLedger::default();
    let (mut context_tokens, mut snapshot_tokens, mut history_tokens) = (Vec::new(), Vec::new(), Vec::new());
    let (mut tool_calls, mut individual_actions) = (0u64, 0u64);
    let mut previous: Option<AssembledPrompt> = None;
    let (mut obs, mut layer) = s.observe(String::new(), None);
    let mut answer = None;

    let outcome = loop {
        let step = ledger.entries.len() + 1;
        let prompt = s.assemble(&layer);
        let cached = cached_tokens(previous.as_ref(), &prompt);
        let turn = if step > MAX_REQUESTS {
            Turn::GiveUp(format!("no result after {MAX_REQUESTS} requests"))
        } else {
            policy.next(&obs)
        };
        let output = estimate_tokens(&turn.wire());
        ledger.push(prompt.tokens(), cached, output);
        context_tokens.push(prompt.tokens());
        snapshot_tokens.push(prompt.layer_tokens(LayerKind::Snapshot));
        history_tokens.push(prompt.layer_tokens(LayerKind::History));

        let (results, error, requested) = match &turn {
            Turn::Finish(text) | Turn::GiveUp(text) => {
                let outcome = match &turn {
                    Turn::Finish(_) => {
                        answer = Some(text.clone());
                        Outcome::Completed
                    }
                    _ => Outcome::Failed { step, message: text.clone() },
                };
                trace.push(TraceEvent::Finish {
                    step,
                    outcome: outcome.clone(),
                    input_tokens: prompt.tokens(),
                    cached_tokens: cached,
                    output_tokens: output,
                    answer: answer.clone(),
                });
                break outcome;
            }
            Turn::Single(action) => {
                let mut rec = Recording { inner: &mut *confirm, log: Vec::new() };
                let r = s.exec.execute(profile, &mut rec, action);
                let confirmations = rec.log;
                let requested = r.output.clone().filter(|_| action.kind() == ActionKind::Snapshot);
                let error = r.error.clone();
                (vec![(r, confirmations)], error, requested)
            }
            Turn::Bulk(req) => {
                let mut rec = Recording { inner: &mut *confirm, log: Vec::new() };
                let r = s.exec.execute_bulk(profile, &mut rec, req);
                let confirmations = rec.log;
                let mut results: Vec<(ActionResult, Vec<Confirmation>)> =
                    r.results.into_iter().map(|x| (x, Vec::new())).collect();
                if let Some(first) = results.first_mut() {
                    first.1 = confirmations;
                } else if !confirmations.is_empty() {
                    return Err(ScenarioError::Invalid("confirmation on a rejected bulk call".into()));
                }
                (results, r.error, None)
            }
        };
        tool_calls += 1;
        let attempted = results.iter().filter(|(r, _)| r.status != Status::Skipped).count() as u64;
        individual_actions += attempted.max(1);
        let confirmations: Vec<Confirmation> = results.iter().flat_map(|(_, c)| c.clone()).collect();
        let results: Vec<ActionResult> = results.into_iter().map(|(r, _)| r).collect();

        let interjection = s.scenario.interjection_at(tool_calls as usize - 1);
        s.log
            .record_step(&turn.memo(), &turn.actions(), interjection.as_deref())
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let summary = result_summary(&results, error.as_ref());
        let (next_obs, next_layer) = s.observe(summary, requested);
        s.transcript.record(&turn.wire(), &next_layer);

        trace.push(TraceEvent::Call {
            step,
            call: serde_json::from_str(&turn.wire()).expect("wire form is JSON"),
            results: results.iter().map(ResultRecord::from).collect(),
            error: error.clone(),
            confirmations,
            input_tokens: prompt.tokens(),
            cached_tokens: cached,
            output_tokens: output,
            snapshot_version: s.exec.version(),
            clock: s.exec.browser().clock(),
        });

        let denied = error
            .as_ref()
            .filter(|e| matches!(e.code, ErrorCode::PolicyDenied | ErrorCode::ConfirmationRequired));
        if let Some(e) = denied {
            let outcome = Outcome::PolicyDenied { step, code: e.code, message: e.message.clone() };
            trace.push(TraceEvent::Finish {
                step,
                outcome: outcome.clone(),
                input_tokens: 0,
                cached_tokens: 0,
                output_tokens: 0,
                answer: None,
            });
            break outcome;
        }
        obs = Observation {
            last_results: results,
            last_error: error.map(|e| (e.code, e.message)),
            ..next_obs
        };
        layer = next_layer;
        previous = Some(prompt);
    };

    let cost = compute_cost(&ledger, &PriceTable::default()).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let metrics = Metrics {
        scenario: scenario.name.clone(),
        seed: options.seed,
        history: options.history,
        trim: options.trim,
        profile: profile.name.clone(),
        outcome,
        tool_calls,
        individual_actions,
        steps: ledger.entries.len() as u64,
        elapsed_ticks: s.exec.browser().clock(),
        ledger,
        cost,
        context_tokens,
        snapshot_tokens,
        history_tokens,
        answer,
        final_state: s.exec.browser().state_digest(),
    };
    Ok(RunOutput { metrics, trace })
}

// ----------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    /// `b - a`.
    pub delta: f64,
    /// Change relative to `a`; `None` when `a` is zero.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: String,
    pub a: String,
    pub b: String,
    pub deltas: Vec<Delta>,
}

impl Comparison {
    pub fn get(&self, metric: &str) -> Option<&Delta> {
        self.deltas.iter().find(|d| d.metric == metric)
    }
}

fn mode_label(m: &Metrics) -> String {
    format!("seed={} history={} trim={}", m.seed, m.history, m.trim)
}

/// Deltas from run `a` to run `b` of the same scenario.
pub fn compare_runs(a: &Metrics, b: &Metrics) -> Result<Comparison, ScenarioError> {
    if a.scenario != b.scenario {
        return Err(ScenarioError::IncomparableRuns(format!(
            "scenario `{}` vs `{}`",
            a.scenario, b.scenario
        )));
    }
    let (ta, tb) = (a.ledger.totals(), b.ledger.totals());
    let rows: BTreeMap<usize, (&str, f64, f64)> = [
        ("tool_calls", a.tool_calls as f64, b.tool_calls as f64),
        ("individual_actions", a.individual_actions as f64, b.individual_actions as f64),
        ("steps", a.steps as f64, b.steps as f64),
        ("elapsed_ticks", a.elapsed_ticks as f64, b.elapsed_ticks as f64),
        ("input_tokens", ta.input_tokens as f64, tb.input_tokens as f64),
        ("cached_tokens", ta.cached_tokens as f64, tb.cached_tokens as f64),
        ("output_tokens", ta.output_tokens as f64, tb.output_tokens as f64),
        (
            "final_context_tokens",
            a.context_tokens.last().copied().unwrap_or(0) as f64,
            b.context_tokens.last().copied().unwrap_or(0) as f64,
        ),
        ("total_cost", a.cost.cost.total, b.cost.cost.total),
    ]
    .into_iter()
    .enumerate()
    .collect();
    let deltas = rows
        .into_values()
        .map(|(metric, x, y)| Delta {
            metric: metric.to_string(),
            a: x,
            b: y,
            delta: y - x,
            percent: (x != 0.0).then(|| (y - x) / x * 100.0),
        })
        .collect();
    Ok(Comparison { scenario: a.scenario.clone(), a: mode_label(a), b: mode_label(b), deltas })
}

// ------------------------------------------------------------------ replay

/// Provider that answers from a recorded list, declining once it runs out.
struct Replayed(std::vec::IntoIter<bool>);

impl ConfirmationProvider for Replayed {
    fn confirm(&mut self, _: &str, _: ActionKind) -> bool {
        self.0.next().unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub events: usize,
    /// First differing line (1-based) with the recorded and replayed text.
    pub mismatch: Option<(usize, String, String)>,
}

/// Re-runs the scenario recorded in a trace, with the recorded confirmation
/// answers, and compares the regenerated trace line by line.
pub fn replay_trace(jsonl: &str) -> Result<ReplayReport, ScenarioError> {
    let lines: Vec<&str> = jsonl.lines().filter(|l| !l.trim().is_empty()).collect();
    let events = lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str::<TraceEvent>(l)
                .map_err(|e| ScenarioError::Trace { line: i + 1, message: e.to_string() })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let Some(TraceEvent::Start { scenario, profile, options }) = events.first() else {
        return Err(ScenarioError::Trace { line: 1, message: "trace must begin with a start event".into() });
    };
    let profile = AgentProfile::from_json(&profile.to_string())?;
    let answers: Vec<bool> = events
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Call { confirmations, .. } => Some(confirmations.iter().map(|c| c.granted)),
            _ => None,
        })
        .flatten()
        .collect();
    let out = run_scenario(scenario, &profile, *options, &mut Replayed(answers.into_iter()))?;
    let regenerated = out.trace_jsonl();
    let fresh: Vec<&str> = regenerated.lines().collect();
    let mismatch = (0..lines.len().max(fresh.len())).find_map(|i| {
        let (x, y) = (lines.get(i).copied().unwrap_or(""), fresh.get(i).copied().unwrap_or(""));
        (x != y).then(|| (i + 1, x.to_string(), y.to_string()))
    });
    Ok(ReplayReport { events: lines.len(), mismatch })
}

#[cfg(test)]
mod tests;
