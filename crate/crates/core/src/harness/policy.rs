//! Scripted agent policies. Each one reads only the agent-facing
//! observation and emits one call per request, the way a model would.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::observe::Observation;
use crate::exec::{Action, ActionParams, AgentMemo, BulkRequest, ErrorCode, TypeParams};
use crate::snapshot::{NodeRole, ParsedLine};

/// One model turn.
#[derive(Debug, Clone, PartialEq)]
pub enum Turn {
    Single(Action),
    Bulk(BulkRequest),
    /// Final answer; ends the run successfully.
    Finish(String),
    /// The policy cannot make progress.
    GiveUp(String),
}

impl Turn {
    pub fn memo(&self) -> AgentMemo {
        match self {
            Turn::Single(a) => a.memo.clone(),
            Turn::Bulk(b) => b.memo.clone(),
            _ => AgentMemo::default(),
        }
    }

    pub fn actions(&self) -> Vec<Action> {
        match self {
            Turn::Single(a) => vec![a.clone()],
            Turn::Bulk(b) => b.actions.clone(),
            _ => Vec::new(),
        }
    }

    /// Wire JSON of the call, or the answer text for terminal turns.
    pub fn wire(&self) -> String {
        match self {
            Turn::Single(a) => serde_json::to_string(a).expect("action serializes"),
            Turn::Bulk(b) => serde_json::to_string(b).expect("bulk serializes"),
            Turn::Finish(s) | Turn::GiveUp(s) => s.clone(),
        }
    }
}

pub trait Policy {
    /// The task statement shown as the initial user request.
    fn task(&self) -> String;
    fn next(&mut self, obs: &Observation) -> Turn;
}

/// Seam for a language-model driver. The harness would send the assembled
/// prompt and parse the reply as a wire-form action, bulk request or final
/// answer. No implementation ships; scripted policies drive every scenario.
pub trait ModelAdapter {
    fn complete(&mut self, prompt: &str) -> Result<Value, String>;
}

fn single(action: Action, eval: &str, memory: &str, goal: &str) -> Turn {
    Turn::Single(action.with_memo(AgentMemo::new(eval, memory, goal)))
}

fn bulk(actions: Vec<Action>, eval: &str, memory: &str, goal: &str) -> Turn {
    Turn::Bulk(BulkRequest { actions, memo: AgentMemo::new(eval, memory, goal) })
}

fn type_clear(target: crate::snapshot::VersionedRef, text: &str) -> Action {
    ActionParams::Type(TypeParams { target, text: text.to_string(), should_clear: true }).into()
}

// ---------------------------------------------------------------- form fill

const REQUIRED_SUFFIX: &str = " Required question";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Control {
    Text,
    Select,
    Radio,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldState {
    Todo,
    /// `select_option` was rejected; switch to click + option click.
    SelectFailed,
    Open,
    Done,
}

#[derive(Debug, Clone)]
struct Field {
    /// Accessible name of the input (radio: the group label).
    name: String,
    control: Control,
    value: String,
    state: FieldState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FormStage {
    Start,
    Plan,
    Fill,
    Submitted,
    Accepted,
    Confirmed,
    Verified,
}

/// Plausible input for a text field, keyed by its label.
pub fn text_value(label: &str) -> String {
    let l = label.to_lowercase();
    let v = match () {
        _ if l.contains("email") => "jordan.lee@example.com",
        _ if l.contains("phone") => "555-0142",
        _ if l.contains("weight") => "12.5",
        _ if l.contains("(cm)") => "30",
        _ if l.contains("count") => "2",
        _ if l.contains("postal") => "94107",
        _ if l.contains("value") => "250",
        _ if l.contains("name") => "Jordan Lee",
        _ => return format!("{} entry", label.trim()),
    };
    v.to_string()
}

fn label_of(name: &str) -> &str {
    name.strip_suffix(REQUIRED_SUFFIX).unwrap_or(name)
}

/// Fills every field it finds on a form, then submits and confirms.
///
/// Sequential mode issues one call per field. Bulk mode batches all plain
/// fields and pairs each custom-dropdown option click with the next opener.
#[derive(Debug, Clone)]
pub struct FormFill {
    bulk: bool,
    max_batch: usize,
    stage: FormStage,
    fields: Vec<Field>,
    checked_midway: bool,
    /// Fields touched by the last call, with what the call attempted.
    in_flight: Vec<(usize, FieldState)>,
    answer: Option<String>,
}

impl FormFill {
    pub fn sequential() -> Self {
        FormFill::new(false, 1)
    }

    pub fn bulk(max_batch: usize) -> Self {
        FormFill::new(true, max_batch.max(1))
    }

    fn new(bulk: bool, max_batch: usize) -> Self {
        FormFill {
            bulk,
            max_batch,
            stage: FormStage::Start,
            fields: Vec::new(),
            checked_midway: false,
            in_flight: Vec::new(),
            answer: None,
        }
    }

    fn plan(&mut self, obs: &Observation) {
        let lines = obs.lines();
        let mut radios: Vec<String> = Vec::new();
        let mut plain = Vec::new();
        let mut customs = Vec::new();
        for (i, l) in lines.iter().enumerate() {
            match l.role {
                NodeRole::Textbox => plain.push(Field {
                    name: l.name.clone(),
                    control: Control::Text,
                    value: text_value(label_of(&l.name)),
                    state: FieldState::Todo,
                }),
                NodeRole::Combobox => {
                    let first = lines[i + 1..].iter().take_while(|o| o.role == NodeRole::Option).next();
                    plain.push(Field {
                        name: l.name.clone(),
                        control: Control::Select,
                        value: first.map(|o| o.name.clone()).unwrap_or_default(),
                        state: FieldState::Todo,
                    });
                }
                NodeRole::Radio => {
                    let group = l.name.split_once(": ").map_or(l.name.as_str(), |g| g.0).to_string();
                    if !radios.contains(&group) {
                        radios.push(group.clone());
                        plain.push(Field {
                            name: group.clone(),
                            control: Control::Radio,
                            value: format!("{group}: Yes"),
                            state: FieldState::Todo,
                        });
                    }
                }
                NodeRole::Button if l.description.as_deref() == Some("Custom dropdown") => customs.push(Field {
                    name: l.name.clone(),
                    control: Control::Custom,
                    value: String::new(),
                    state: FieldState::Todo,
                }),
                _ => {}
            }
        }
        // Plain controls first in kind order, custom widgets last since
        // opening them shifts the refs that follow.
        plain.sort_by_key(|f| match f.control {
            Control::Text => 0,
            Control::Select => 1,
            _ => 2,
        });
        self.fields = plain;
        self.fields.extend(customs);
    }

    fn settle(&mut self, obs: &Observation) -> Result<(), String> {
        if obs.last_results.is_empty() {
            if let Some((code, msg)) = &obs.last_error {
                return Err(format!("call rejected: {code:?}: {msg}"));
            }
        }
        let failed_at = obs
            .last_results
            .iter()
            .position(|r| !r.is_ok())
            .map(|i| (i, obs.last_results[i].error_code()));
        for (pos, (idx, attempted)) in self.in_flight.drain(..).enumerate() {
            let field = &mut self.fields[idx];
            match failed_at {
                Some((i, _)) if i < pos => {}
                Some((i, Some(ErrorCode::NotInteractive)))
                    if i == pos && attempted == FieldState::Done && field.control == Control::Custom =>
                {
                    // The adaptation rule: a custom widget rejected select_option.
                    field.state = FieldState::SelectFailed;
                    if self.bulk {
                        for f in self.fields.iter_mut().filter(|f| f.control == Control::Custom) {
                            if f.state == FieldState::Todo {
                                f.state = FieldState::SelectFailed;
                            }
                        }
                    }
                }
                Some((i, code)) if i == pos => {
                    return Err(format!("could not fill `{}`: {:?}", field.name, code));
                }
                _ => field.state = attempted,
            }
        }
        Ok(())
    }

    fn memory(&self) -> String {
        let done = self.fields.iter().filter(|f| f.state == FieldState::Done).count();
        format!("{done} of {} fields filled", self.fields.len())
    }

    /// The call that advances field `idx` one state, and the state it reaches.
    fn field_action(&self, obs: &Observation, idx: usize) -> Result<(Action, FieldState), String> {
        let f = &self.fields[idx];
        let missing = || format!("field `{}` is not in the snapshot", f.name);
        Ok(match (f.control, f.state) {
            (Control::Text, _) => (
                Action::type_text(obs.find(NodeRole::Textbox, &f.name).ok_or_else(missing)?, &f.value),
                FieldState::Done,
            ),
            (Control::Select, _) => (
                Action::select(obs.find(NodeRole::Combobox, &f.name).ok_or_else(missing)?, &[&f.value]),
                FieldState::Done,
            ),
            (Control::Radio, _) => {
                (Action::click(obs.find(NodeRole::Radio, &f.value).ok_or_else(missing)?), FieldState::Done)
            }
            (Control::Custom, FieldState::Todo) => {
                // First attempt treats it like a native select.
                let r = obs.find(NodeRole::Button, &f.name).ok_or_else(missing)?;
                (Action::select(r, &["Choose"]), FieldState::Done)
            }
            (Control::Custom, FieldState::SelectFailed) => {
                (Action::click(obs.find(NodeRole::Button, &f.name).ok_or_else(missing)?), FieldState::Open)
            }
            (Control::Custom, _) => {
                let listbox = format!("{} options", label_of(&f.name));
                let lines = obs.lines();
                let start = lines
                    .iter()
                    .position(|l| l.role == NodeRole::Listbox && l.name == listbox)
                    .ok_or_else(|| format!("`{listbox}` did not open"))?;
                let options: Vec<&ParsedLine> =
                    lines[start + 1..].iter().take_while(|l| l.role == NodeRole::Option).collect();
                let pick = options.get(1).or(options.first()).ok_or_else(|| format!("`{listbox}` is empty"))?;
                (Action::click(obs.vref(pick.ref_id)), FieldState::Done)
            }
        })
    }

    fn next_field(&self) -> Option<usize> {
        self.fields.iter().position(|f| f.state != FieldState::Done)
    }

    fn fill_turn(&mut self, obs: &Observation) -> Result<Turn, String> {
        let Some(idx) = self.next_field() else {
            let submit = obs.find(NodeRole::Button, "Submit").ok_or("no Submit button")?;
            self.stage = FormStage::Submitted;
            return Ok(single(Action::click(submit), "All fields filled", &self.memory(), "Submit the form"));
        };
        let custom_next = self.fields[idx].control == Control::Custom;
        if custom_next && !self.checked_midway {
            self.checked_midway = true;
            return Ok(single(Action::snapshot(), "Plain fields filled", &self.memory(), "Verify entries"));
        }
        let memory = self.memory();
        if !self.bulk {
            let (action, reaches) = self.field_action(obs, idx)?;
            self.in_flight.push((idx, reaches));
            let goal = format!("Fill {}", label_of(&self.fields[idx].name));
            return Ok(single(action, "Previous field handled", &memory, &goal));
        }
        if !custom_next {
            let mut actions = Vec::new();
            for i in idx..self.fields.len() {
                if self.fields[i].control == Control::Custom || actions.len() == self.max_batch {
                    break;
                }
                let (a, reaches) = self.field_action(obs, i)?;
                actions.push(a);
                self.in_flight.push((i, reaches));
            }
            return Ok(bulk(actions, "Form is ready", &memory, "Fill the plain fields"));
        }
        match self.fields[idx].state {
            FieldState::Todo | FieldState::SelectFailed => {
                let (a, reaches) = self.field_action(obs, idx)?;
                self.in_flight.push((idx, reaches));
                Ok(single(a, "Plain fields filled", &memory, "Set the custom dropdown"))
            }
            _ => {
                // Option click for the open widget plus the next opener or Submit.
                let (pick, reaches) = self.field_action(obs, idx)?;
                self.in_flight.push((idx, reaches));
                let follow = match self.fields.get(idx + 1) {
                    Some(_) => {
                        let (a, r) = self.field_action(obs, idx + 1)?;
                        self.in_flight.push((idx + 1, r));
                        a
                    }
                    None => {
                        self.stage = FormStage::Submitted;
                        Action::click(obs.find(NodeRole::Button, "Submit").ok_or("no Submit button")?)
                    }
                };
                Ok(bulk(vec![pick, follow], "Dropdown is open", &memory, "Pick the option and continue"))
            }
        }
    }

    fn step(&mut self, obs: &Observation) -> Result<Turn, String> {
        match self.stage {
            FormStage::Start => {
                self.stage = FormStage::Plan;
                Ok(single(Action::snapshot(), "", "", "Look at the form"))
            }
            FormStage::Plan => {
                self.plan(obs);
                if self.fields.is_empty() {
                    return Err("no form fields found".into());
                }
                self.stage = FormStage::Fill;
                self.fill_turn(obs)
            }
            FormStage::Fill => {
                self.settle(obs)?;
                self.fill_turn(obs)
            }
            FormStage::Submitted => {
                self.settle(obs)?;
                if let Some((code, msg)) = &obs.last_error {
                    return Err(format!("submit failed: {code:?}: {msg}"));
                }
                self.stage = FormStage::Accepted;
                Ok(single(Action::handle_dialog(true), "Submit asked for confirmation", &self.memory(), "Confirm submission"))
            }
            FormStage::Accepted => {
                self.stage = FormStage::Confirmed;
                Ok(single(Action::wait_for_text("confirmed"), "Submission confirmed", "Form submitted", "Wait for the confirmation"))
            }
            FormStage::Confirmed => {
                if obs.last_error.is_some() {
                    return Err("confirmation never appeared".into());
                }
                self.stage = FormStage::Verified;
                Ok(single(Action::snapshot(), "Confirmation appeared", "Form submitted", "Read the order number"))
            }
            FormStage::Verified => {
                let line = obs
                    .find_where(|l| l.role == NodeRole::Text && l.name.starts_with("Order #"))
                    .ok_or("no order confirmation on the page")?;
                self.answer = Some(line.name.clone());
                Ok(Turn::Finish(line.name))
            }
        }
    }
}

impl Policy for FormFill {
    fn task(&self) -> String {
        "Fill out the shipping form with my details and submit it. Tell me the order number.".into()
    }

    fn next(&mut self, obs: &Observation) -> Turn {
        self.step(obs).unwrap_or_else(Turn::GiveUp)
    }
}

// ---------------------------------------------------------- shopping task

/// Scans every listing page, then adds the `count` cheapest items to the cart.
#[derive(Debug, Clone)]
pub struct CheapestProduct {
    count: usize,
    /// Product label -> (price in dollars, listing page URL).
    seen: BTreeMap<String, (u32, String)>,
    /// Marker ranges already requested, keyed by snapshot version.
    fetched: Vec<(u64, u32, u32)>,
    picks: Vec<String>,
    added: usize,
}

impl CheapestProduct {
    pub fn new(count: usize) -> Self {
        CheapestProduct { count, seen: BTreeMap::new(), fetched: Vec::new(), picks: Vec::new(), added: 0 }
    }

    fn record(&mut self, obs: &Observation) {
        let mut current: Option<String> = None;
        for l in obs.lines() {
            match l.role {
                NodeRole::Listitem if l.name.starts_with("Product ") => current = Some(l.name.clone()),
                NodeRole::Text => {
                    let price = l.name.strip_prefix("Price: $").and_then(|p| p.strip_suffix(".00"));
                    if let (Some(label), Some(p)) = (&current, price.and_then(|p| p.parse().ok())) {
                        self.seen.insert(label.clone(), (p, obs.url.clone()));
                    }
                }
                _ => {}
            }
        }
    }

    fn step(&mut self, obs: &Observation) -> Result<Turn, String> {
        if self.picks.is_empty() {
            self.record(obs);
            let memory = format!("{} prices recorded", self.seen.len());
            let unfetched = obs
                .markers()
                .into_iter()
                .find(|&(a, b)| !self.fetched.contains(&(obs.version, a, b)));
            if let Some((a, b)) = unfetched {
                self.fetched.push((obs.version, a, b));
                let action = Action::snapshot_range(obs.vref(a), obs.vref(b));
                return Ok(single(action, "Listing partly hidden", &memory, "Read the trimmed items"));
            }
            if let Some(next) = obs.find(NodeRole::Link, "Next page") {
                if !obs.is_disabled(NodeRole::Link, "Next page") {
                    return Ok(single(Action::click(next), "Page read", &memory, "Open the next page"));
                }
            }
            if self.seen.is_empty() {
                return Err("no products found".into());
            }
            let mut ranked: Vec<(&String, &(u32, String))> = self.seen.iter().collect();
            ranked.sort_by_key(|(label, (price, _))| (*price, (*label).clone()));
            let mut picks: Vec<String> = ranked.iter().take(self.count).map(|(l, _)| (*l).clone()).collect();
            // Visit pages in listing order.
            picks.sort();
            self.picks = picks;
        }
        let Some(label) = self.picks.get(self.added).cloned() else {
            return Ok(Turn::Finish(format!("Added to cart: {}", self.picks.join(", "))));
        };
        let memory = format!("Cheapest: {}; added {}", self.picks.join(", "), self.added);
        let url = &self.seen[&label].1;
        if &obs.url != url {
            return Ok(single(Action::navigate(url.clone()), "Cheapest items chosen", &memory, "Go to the item's page"));
        }
        let button = obs
            .find_where(|l| l.role == NodeRole::Button && l.name == "Add to cart" && l.description.as_deref() == Some(&label))
            .ok_or_else(|| format!("no Add to cart button for {label}"))?;
        self.added += 1;
        Ok(single(Action::click(obs.vref(button.ref_id)), "On the item's page", &memory, &format!("Add {label}")))
    }
}

impl Policy for CheapestProduct {
    fn task(&self) -> String {
        format!("Find the {} cheapest products across all listing pages and add them to the cart.", self.count)
    }

    fn next(&mut self, obs: &Observation) -> Turn {
        self.step(obs).unwrap_or_else(Turn::GiveUp)
    }
}

// ------------------------------------------------------------ trim stress

/// Which paragraph the `i`th note should quote; every third one lies past
/// the first few paragraphs of the article.
pub fn trim_stress_targets(steps: usize, paragraph_count: usize) -> Vec<usize> {
    let tail = paragraph_count.saturating_sub(5).max(1);
    (0..steps)
        .map(|i| if i % 3 == 2 { 6 + (i * 37) % tail } else { 1 + i % 5 })
        .map(|p| p.min(paragraph_count.max(1)))
        .collect()
}

/// Copies the fact code of each target paragraph into a saved note.
#[derive(Debug, Clone)]
pub struct TrimStress {
    targets: Vec<usize>,
    next: usize,
}

impl TrimStress {
    pub fn new(targets: Vec<usize>) -> Self {
        TrimStress { targets, next: 0 }
    }

    fn step(&mut self, obs: &Observation) -> Result<Turn, String> {
        if let Some((code, msg)) = &obs.last_error {
            return Err(format!("{code:?}: {msg}"));
        }
        let Some(&target) = self.targets.get(self.next) else {
            return Ok(Turn::Finish(format!("Saved {} notes", self.targets.len())));
        };
        let memory = format!("Saved {:02} of {:02} notes", self.next, self.targets.len());
        let prefix = format!("Paragraph {target:03}.");
        if let Some(p) = obs.find_where(|l| l.role == NodeRole::Text && l.name.starts_with(&prefix)) {
            let code = p
                .name
                .split("Fact code ")
                .nth(1)
                .and_then(|r| r.split('.').next())
                .ok_or("paragraph has no fact code")?
                .to_string();
            let note = obs.find(NodeRole::Textbox, "Note").ok_or("no Note field")?;
            let save = obs.find(NodeRole::Button, "Save note").ok_or("no Save note button")?;
            self.next += 1;
            let goal = format!("Save code {code}");
            return Ok(bulk(vec![type_clear(note, &code), Action::click(save)], "Found the paragraph", &memory, &goal));
        }
        // Paragraph refs are consecutive, so the target's ref follows from the first one.
        let first = obs
            .find_where(|l| l.role == NodeRole::Text && l.name.starts_with("Paragraph 001."))
            .ok_or("first paragraph not visible")?;
        let r = first.ref_id + target as u32 - 1;
        if obs.requested.is_some() {
            return Err(format!("paragraph {target} missing after requesting it"));
        }
        Ok(single(Action::snapshot_range(obs.vref(r), obs.vref(r)), "Paragraph is trimmed", &memory, &format!("Read paragraph {target}")))
    }
}

impl Policy for TrimStress {
    fn task(&self) -> String {
        let list: Vec<String> = self.targets.iter().map(|t| t.to_string()).collect();
        format!("For each of these paragraphs in order, save its fact code as a note: {}.", list.join(", "))
    }

    fn next(&mut self, obs: &Observation) -> Turn {
        self.step(obs).unwrap_or_else(Turn::GiveUp)
    }
}

// ---------------------------------------------------------- history stress

/// Pages forward through a listing, one click per step, with fixed-width memos.
#[derive(Debug, Clone)]
pub struct HistoryStress {
    steps: usize,
    done: usize,
}

impl HistoryStress {
    pub fn new(steps: usize) -> Self {
        HistoryStress { steps, done: 0 }
    }
}

impl Policy for HistoryStress {
    fn task(&self) -> String {
        format!("Browse forward through {} listing pages and review each one.", self.steps)
    }

    fn next(&mut self, obs: &Observation) -> Turn {
        if let Some((code, msg)) = &obs.last_error {
            return Turn::GiveUp(format!("{code:?}: {msg}"));
        }
        if self.done == self.steps {
            return Turn::Finish(format!("Reviewed {:02} pages", self.steps));
        }
        let Some(next) = obs.find(NodeRole::Link, "Next page").filter(|_| !obs.is_disabled(NodeRole::Link, "Next page")) else {
            return Turn::GiveUp("no enabled Next page link".into());
        };
        self.done += 1;
        single(
            Action::click(next),
            &format!("Page {:02} reviewed", self.done),
            &format!("Reviewed {:02} of {:02} pages", self.done, self.steps),
            &format!("Open page {:02}", self.done + 1),
        )
    }
}

// ------------------------------------------------------------- custom script

/// A target written by role and name, resolved against the latest observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedTarget {
    pub role: NodeRole,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    /// Wire-form actions; `ref`, `startRef` and `endRef` may be `{role, name}`.
    pub actions: Vec<Value>,
    /// Send as one bulk call even with a single action.
    #[serde(default)]
    pub bulk: bool,
    #[serde(default)]
    pub evaluation_previous_goal: Option<String>,
    #[serde(default)]
    pub memory: Option<String>,
    #[serde(default)]
    pub next_goal: Option<String>,
    /// A follow-up message from the user arriving before this step.
    #[serde(default)]
    pub user_interjection: Option<String>,
}

/// Replays a fixed list of calls, failing on the first error.
#[derive(Debug, Clone)]
pub struct Script {
    steps: Vec<ScriptStep>,
    next: usize,
    pub answer: String,
}

const REF_KEYS: [&str; 3] = ["ref", "startRef", "endRef"];

fn resolve_targets(action: &Value, obs: &Observation) -> Result<Action, String> {
    let mut action = action.clone();
    if let Some(params) = action.get_mut("params").and_then(Value::as_object_mut) {
        for key in REF_KEYS {
            let Some(v) = params.get(key) else { continue };
            if !v.is_object() {
                continue;
            }
            let t: NamedTarget = serde_json::from_value(v.clone()).map_err(|e| e.to_string())?;
            let r = obs
                .find(t.role, &t.name)
                .ok_or_else(|| format!("no {} named `{}` in the snapshot", t.role.as_str(), t.name))?;
            params.insert(key.to_string(), Value::String(r.to_string()));
        }
    }
    serde_json::from_value(action).map_err(|e| e.to_string())
}

impl Script {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        Script { steps, next: 0, answer: "Script finished".into() }
    }

    /// Interjection attached to the step about to run.
    pub fn pending_interjection(&self) -> Option<&str> {
        self.steps.get(self.next).and_then(|s| s.user_interjection.as_deref())
    }

    fn step(&mut self, obs: &Observation) -> Result<Turn, String> {
        if let Some((code, msg)) = &obs.last_error {
            return Err(format!("step {} failed: {code:?}: {msg}", self.next));
        }
        let Some(step) = self.steps.get(self.next) else {
            return Ok(Turn::Finish(self.answer.clone()));
        };
        let memo = AgentMemo {
            evaluation_previous_goal: step.evaluation_previous_goal.clone(),
            memory: step.memory.clone(),
            next_goal: step.next_goal.clone(),
        };
        let mut actions = step.actions.iter().map(|a| resolve_targets(a, obs)).collect::<Result<Vec<_>, _>>()?;
        if actions.is_empty() {
            return Err(format!("step {} has no actions", self.next));
        }
        self.next += 1;
        Ok(if step.bulk || actions.len() > 1 {
            Turn::Bulk(BulkRequest { actions, memo })
        } else {
            Turn::Single(actions.remove(0).with_memo(memo))
        })
    }
}

impl Policy for Script {
    fn task(&self) -> String {
        "Carry out the scripted steps.".into()
    }

    fn next(&mut self, obs: &Observation) -> Turn {
        self.step(obs).unwrap_or_else(Turn::GiveUp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_targets_alternate() {
        let t = trim_stress_targets(40, 95);
        assert_eq!(t.len(), 40);
        assert_eq!(&t[..3], &[1, 2, 80]);
        assert_eq!(t.iter().filter(|&&p| p > 5).count(), 13);
        assert!(t.iter().all(|&p| (1..=95).contains(&p)));
    }

    #[test]
    fn text_values_are_deterministic() {
        assert_eq!(text_value("Email address"), "jordan.lee@example.com");
        assert_eq!(text_value("Company"), "Company entry");
    }
}
