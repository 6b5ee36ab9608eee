//! Code-level policy: tool scoping, keyword confirmation gates, navigation
//! allowlists and per-profile snapshot filters.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use url::Url;

use crate::exec::{Action, ActionKind, ActionParams};
use crate::snapshot::{filter_snapshot, AccessibilityNode, AccessibilitySnapshot, FilterRule, NodeStates};
use crate::web::SCROLL_KEYS;

pub const DEFAULT_SENSITIVE_KEYWORDS: [&str; 4] = ["refund", "delete", "transfer", "password"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("profile JSON: {0}")]
    Json(String),
    #[error("unsupported host pattern `{0}`: use an exact host or a leading `*.`")]
    BadHostPattern(String),
    #[error("profile `{0}` has no preset and no domain_allowlist")]
    MissingAllowlist(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SafetyError {
    #[error("malformed url `{0}`")]
    MalformedUrl(String),
}

/// An allowlist entry: an exact host, or `*.suffix` matching strict subdomains.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HostPattern {
    Exact(String),
    Subdomains(String),
}

fn valid_host(h: &str) -> bool {
    !h.is_empty()
        && !h.starts_with('.')
        && !h.ends_with('.')
        && !h.contains("..")
        && h.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.')
}

impl HostPattern {
    pub fn matches(&self, host: &str) -> bool {
        let host = host.to_ascii_lowercase();
        match self {
            HostPattern::Exact(h) => host == *h,
            HostPattern::Subdomains(s) => host
                .strip_suffix(s.as_str())
                .is_some_and(|rest| rest.len() > 1 && rest.ends_with('.')),
        }
    }
}

impl FromStr for HostPattern {
    type Err = ProfileError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let bad = || ProfileError::BadHostPattern(s.to_string());
        match lower.strip_prefix("*.") {
            Some(suffix) if valid_host(suffix) => Ok(HostPattern::Subdomains(suffix.to_string())),
            Some(_) => Err(bad()),
            None if valid_host(&lower) => Ok(HostPattern::Exact(lower)),
            None => Err(bad()),
        }
    }
}

impl fmt::Display for HostPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HostPattern::Exact(h) => f.write_str(h),
            HostPattern::Subdomains(s) => write!(f, "*.{s}"),
        }
    }
}

impl Serialize for HostPattern {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HostPattern {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Read-only: observe and scroll.
    Assistant,
    /// Full tools with extra keyword gates; typing limited to search fields.
    Research,
    /// Works inside one site; no navigation or tab tools.
    DataEntry,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentProfile {
    pub name: String,
    pub preset: Option<Preset>,
    pub allowed_tools: BTreeSet<ActionKind>,
    pub domain_allowlist: Vec<HostPattern>,
    pub sensitive_keywords: Vec<String>,
    pub snapshot_filters: Vec<FilterRule>,
    pub navigation_locked: bool,
    /// When set, `press_key` accepts only these keys.
    pub allowed_keys: Option<Vec<String>>,
    /// When set, `type` is allowed only on targets matching one of these rules.
    pub type_targets: Option<Vec<FilterRule>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    name: String,
    preset: Option<Preset>,
    allowed_tools: Option<BTreeSet<ActionKind>>,
    domain_allowlist: Option<Vec<HostPattern>>,
    sensitive_keywords: Option<Vec<String>>,
    #[serde(default)]
    snapshot_filters: Vec<FilterRule>,
    navigation_locked: Option<bool>,
    allowed_keys: Option<Vec<String>>,
    type_targets: Option<Vec<FilterRule>>,
}

fn default_keywords() -> Vec<String> {
    DEFAULT_SENSITIVE_KEYWORDS.iter().map(|k| k.to_string()).collect()
}

impl AgentProfile {
    /// Every tool, default keyword gates, no filters.
    pub fn unrestricted(name: &str, allowlist: Vec<HostPattern>) -> Self {
        AgentProfile {
            name: name.to_string(),
            preset: None,
            allowed_tools: ActionKind::ALL.into_iter().collect(),
            domain_allowlist: allowlist,
            sensitive_keywords: default_keywords(),
            snapshot_filters: Vec::new(),
            navigation_locked: false,
            allowed_keys: None,
            type_targets: None,
        }
    }

    pub fn preset(preset: Preset) -> Self {
        let mut p = AgentProfile::unrestricted("", Vec::new());
        p.preset = Some(preset);
        match preset {
            Preset::Assistant => {
                p.name = "assistant".into();
                p.allowed_tools = [
                    ActionKind::Snapshot,
                    ActionKind::TakeScreenshot,
                    ActionKind::WaitFor,
                    ActionKind::PressKey,
                ]
                .into_iter()
                .collect();
                p.allowed_keys = Some(SCROLL_KEYS.iter().map(|k| k.to_string()).collect());
            }
            Preset::Research => {
                p.name = "research".into();
                p.sensitive_keywords.extend(["send".to_string(), "post".to_string()]);
                p.type_targets = Some(vec![FilterRule::name_contains("search")]);
            }
            Preset::DataEntry => {
                p.name = "data-entry".into();
                for k in [ActionKind::Navigate, ActionKind::NavigateBack, ActionKind::BrowserTabs] {
                    p.allowed_tools.remove(&k);
                }
                p.navigation_locked = true;
            }
        }
        p
    }

    /// Loads a profile file. Fields left out come from the preset, if any.
    pub fn from_json(text: &str) -> Result<Self, ProfileError> {
        let file: ProfileFile =
            serde_json::from_str(text).map_err(|e| ProfileError::Json(e.to_string()))?;
        let mut p = match file.preset {
            Some(preset) => AgentProfile::preset(preset),
            None => {
                if file.domain_allowlist.is_none() {
                    return Err(ProfileError::MissingAllowlist(file.name));
                }
                AgentProfile::unrestricted("", Vec::new())
            }
        };
        p.name = file.name;
        if let Some(t) = file.allowed_tools {
            p.allowed_tools = t;
        }
        if let Some(a) = file.domain_allowlist {
            p.domain_allowlist = a;
        }
        if let Some(k) = file.sensitive_keywords {
            p.sensitive_keywords = k;
        }
        p.sensitive_keywords = p
            .sensitive_keywords
            .iter()
            .map(|k| k.trim().to_lowercase())
            .filter(|k| !k.is_empty())
            .collect();
        p.snapshot_filters.extend(file.snapshot_filters);
        if let Some(l) = file.navigation_locked {
            p.navigation_locked = l;
        }
        if file.allowed_keys.is_some() {
            p.allowed_keys = file.allowed_keys;
        }
        if file.type_targets.is_some() {
            p.type_targets = file.type_targets;
        }
        Ok(p)
    }

    pub fn allows_tool(&self, kind: ActionKind) -> bool {
        self.allowed_tools.contains(&kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Allow,
    Deny,
    RequireConfirmation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafetyVerdict {
    pub decision: Decision,
    pub reason: String,
}

impl SafetyVerdict {
    pub fn allow(reason: impl Into<String>) -> Self {
        SafetyVerdict { decision: Decision::Allow, reason: reason.into() }
    }

    pub fn deny(reason: impl Into<String>) -> Self {
        SafetyVerdict { decision: Decision::Deny, reason: reason.into() }
    }

    pub fn is_allow(&self) -> bool {
        self.decision == Decision::Allow
    }
}

/// Asked synchronously whenever a keyword gate fires.
pub trait ConfirmationProvider {
    fn confirm(&mut self, element: &str, kind: ActionKind) -> bool;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AutoGrant;

impl ConfirmationProvider for AutoGrant {
    fn confirm(&mut self, _: &str, _: ActionKind) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AutoDeny;

impl ConfirmationProvider for AutoDeny {
    fn confirm(&mut self, _: &str, _: ActionKind) -> bool {
        false
    }
}

/// Answers from a fixed script, then denies. Records every question asked.
#[derive(Debug, Clone, Default)]
pub struct Scripted {
    answers: std::collections::VecDeque<bool>,
    pub asked: Vec<(String, ActionKind)>,
}

impl Scripted {
    pub fn new(answers: impl IntoIterator<Item = bool>) -> Self {
        Scripted { answers: answers.into_iter().collect(), asked: Vec::new() }
    }
}

impl ConfirmationProvider for Scripted {
    fn confirm(&mut self, element: &str, kind: ActionKind) -> bool {
        self.asked.push((element.to_string(), kind));
        self.answers.pop_front().unwrap_or(false)
    }
}

/// Prompts a human. Anything other than `y`/`yes` denies.
pub struct Interactive<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> Interactive<R, W> {
    pub fn new(input: R, output: W) -> Self {
        Interactive { input, output }
    }
}

impl<R: BufRead, W: Write> ConfirmationProvider for Interactive<R, W> {
    fn confirm(&mut self, element: &str, kind: ActionKind) -> bool {
        let _ = write!(self.output, "Allow {kind} on '{element}'? [y/N] ");
        let _ = self.output.flush();
        let mut line = String::new();
        if self.input.read_line(&mut line).is_err() {
            return false;
        }
        matches!(line.trim().to_ascii_lowercase().as_str(), "y" | "yes")
    }
}

/// The snapshot as this profile's agent may see it.
pub fn profile_snapshot_view(profile: &AgentProfile, snapshot: &AccessibilitySnapshot) -> AccessibilitySnapshot {
    filter_snapshot(snapshot, &profile.snapshot_filters)
}

/// First sensitive keyword occurring in the node's name or description.
pub fn keyword_hit<'p>(profile: &'p AgentProfile, name: &str, description: Option<&str>) -> Option<&'p str> {
    let text = format!("{} {}", name, description.unwrap_or("")).to_lowercase();
    profile
        .sensitive_keywords
        .iter()
        .find(|k| !k.is_empty() && text.contains(k.as_str()))
        .map(String::as_str)
}

/// Elements the action would act on, resolved in the agent's view.
fn gated_targets<'s>(action: &Action, view: &'s AccessibilitySnapshot) -> Vec<&'s AccessibilityNode> {
    if action.kind().is_read_only() {
        return Vec::new();
    }
    let mut targets: Vec<&AccessibilityNode> = action
        .refs()
        .into_iter()
        .filter(|r| r.version == view.version())
        .filter_map(|r| view.get(r.ref_id))
        .collect();
    if let ActionParams::PressKey(p) = &action.params {
        if matches!(p.key.as_str(), "Enter" | "Space") {
            targets.extend(view.nodes().iter().filter(|n| n.states.contains(NodeStates::FOCUSED)));
        }
    }
    targets
}

/// Tool scope, key and type restrictions, then keyword gates. Never consults
/// the confirmation provider.
pub fn evaluate_action(profile: &AgentProfile, action: &Action, view: &AccessibilitySnapshot) -> SafetyVerdict {
    let kind = action.kind();
    if !profile.allows_tool(kind) {
        return SafetyVerdict::deny(format!("tool `{kind}` is not granted to profile `{}`", profile.name));
    }
    if let (ActionParams::PressKey(p), Some(keys)) = (&action.params, &profile.allowed_keys) {
        if !keys.contains(&p.key) {
            return SafetyVerdict::deny(format!("key `{}` is not granted to profile `{}`", p.key, profile.name));
        }
    }
    if let (ActionParams::Type(p), Some(rules)) = (&action.params, &profile.type_targets) {
        let ok = view
            .get(p.target.ref_id)
            .is_some_and(|n| rules.iter().any(|r| r.matches(n)));
        if !ok {
            return SafetyVerdict::deny(format!(
                "profile `{}` may only type into designated fields",
                profile.name
            ));
        }
    }
    for node in gated_targets(action, view) {
        if let Some(k) = keyword_hit(profile, &node.name, node.description.as_deref()) {
            return SafetyVerdict {
                decision: Decision::RequireConfirmation,
                reason: format!("{kind} on '{}' matches sensitive keyword \"{k}\" and needs user confirmation", node.name),
            };
        }
    }
    SafetyVerdict::allow("within profile scope")
}

/// `evaluate_action`, with keyword gates resolved by the provider.
pub fn check_action(
    profile: &AgentProfile,
    action: &Action,
    view: &AccessibilitySnapshot,
    confirm: &mut dyn ConfirmationProvider,
) -> SafetyVerdict {
    let verdict = evaluate_action(profile, action, view);
    if verdict.decision != Decision::RequireConfirmation {
        return verdict;
    }
    let targets = gated_targets(action, view);
    let element = targets
        .iter()
        .find(|n| keyword_hit(profile, &n.name, n.description.as_deref()).is_some())
        .map(|n| n.name.as_str())
        .unwrap_or_default();
    if confirm.confirm(element, action.kind()) {
        SafetyVerdict::allow(format!("user confirmed: {}", verdict.reason))
    } else {
        verdict
    }
}

/// Host of a URL, or None for `about:` pages.
pub fn url_host(url: &str) -> Result<Option<String>, SafetyError> {
    let parsed = Url::parse(url).map_err(|_| SafetyError::MalformedUrl(url.to_string()))?;
    if parsed.scheme() == "about" {
        return Ok(None);
    }
    parsed
        .host_str()
        .map(|h| Some(h.to_ascii_lowercase()))
        .ok_or_else(|| SafetyError::MalformedUrl(url.to_string()))
}

/// Locked profiles may only stay on the current host. Otherwise the target
/// host must match the allowlist. `about:` pages are always reachable.
pub fn check_navigation(
    profile: &AgentProfile,
    target_url: &str,
    current_url: Option<&str>,
) -> Result<SafetyVerdict, SafetyError> {
    let Some(host) = url_host(target_url)? else {
        return Ok(SafetyVerdict::allow("blank page"));
    };
    if profile.navigation_locked {
        let current = current_url.map(url_host).transpose().ok().flatten().flatten();
        return Ok(match current {
            Some(c) if c == host => SafetyVerdict::allow("same host"),
            _ => SafetyVerdict::deny(format!(
                "profile `{}` is locked to its current site; {host} is off-site",
                profile.name
            )),
        });
    }
    Ok(match profile.domain_allowlist.iter().find(|p| p.matches(&host)) {
        Some(p) => SafetyVerdict::allow(format!("host {host} matches allowlist entry {p}")),
        None => SafetyVerdict::deny(format!("host {host} is not on the allowlist of profile `{}`", profile.name)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{build_snapshot, NodeRole, PageNode, VersionedRef};

    fn page() -> AccessibilitySnapshot {
        let tree = PageNode::new(0, NodeRole::Generic, "app").with_children(vec![
            PageNode::new(1, NodeRole::Button, "Request refund"),
            PageNode::new(2, NodeRole::Button, "Submit"),
            PageNode::new(3, NodeRole::Textbox, "Search people"),
            PageNode::new(4, NodeRole::Button, "Continue").with_description("Permanently DELETE the record"),
        ]);
        build_snapshot(Some(&tree), 0).unwrap()
    }

    fn r(id: u32) -> VersionedRef {
        VersionedRef::new(1, id)
    }

    #[test]
    fn refund_click_needs_confirmation() {
        let p = AgentProfile::unrestricted("t", vec![]);
        let v = evaluate_action(&p, &Action::click(r(2)), &page());
        assert_eq!(v.decision, Decision::RequireConfirmation);
        assert!(v.reason.contains("refund"));
        let mut deny = Scripted::new([false]);
        assert_eq!(check_action(&p, &Action::click(r(2)), &page(), &mut deny).decision, Decision::RequireConfirmation);
        assert_eq!(deny.asked, vec![("Request refund".to_string(), ActionKind::Click)]);
        assert!(check_action(&p, &Action::click(r(2)), &page(), &mut AutoGrant).is_allow());
    }

    #[test]
    fn description_is_scanned() {
        let p = AgentProfile::unrestricted("t", vec![]);
        let v = evaluate_action(&p, &Action::click(r(5)), &page());
        assert_eq!(v.decision, Decision::RequireConfirmation);
    }

    #[test]
    fn data_entry_submit_allowed() {
        let p = AgentProfile::preset(Preset::DataEntry);
        assert!(evaluate_action(&p, &Action::click(r(3)), &page()).is_allow());
        assert_eq!(evaluate_action(&p, &Action::navigate("https://crm.example/"), &page()).decision, Decision::Deny);
    }

    #[test]
    fn assistant_cannot_type() {
        let p = AgentProfile::preset(Preset::Assistant);
        assert_eq!(evaluate_action(&p, &Action::type_text(r(4), "x"), &page()).decision, Decision::Deny);
        assert!(evaluate_action(&p, &Action::press_key("PageDown"), &page()).is_allow());
        assert_eq!(evaluate_action(&p, &Action::press_key("Enter"), &page()).decision, Decision::Deny);
        assert!(evaluate_action(&p, &Action::snapshot(), &page()).is_allow());
    }

    #[test]
    fn research_types_only_into_search() {
        let p = AgentProfile::preset(Preset::Research);
        assert!(evaluate_action(&p, &Action::type_text(r(4), "jane"), &page()).is_allow());
        let tree = PageNode::new(0, NodeRole::Generic, "app")
            .with_children(vec![PageNode::new(1, NodeRole::Textbox, "Message")]);
        let snap = build_snapshot(Some(&tree), 0).unwrap();
        assert_eq!(evaluate_action(&p, &Action::type_text(r(2), "hi"), &snap).decision, Decision::Deny);
    }

    #[test]
    fn wildcard_allowlist() {
        let mut p = AgentProfile::preset(Preset::Research);
        p.domain_allowlist = vec!["linkedin.example".parse().unwrap(), "*.news.example".parse().unwrap()];
        let nav = |u: &str| check_navigation(&p, u, None).unwrap().decision;
        assert_eq!(nav("https://a.news.example/x"), Decision::Allow);
        assert_eq!(nav("https://news.example/"), Decision::Deny);
        assert_eq!(nav("https://evilnews.example/"), Decision::Deny);
        assert_eq!(nav("https://linkedin.example/in/x"), Decision::Allow);
        assert_eq!(nav("https://attacker.example/"), Decision::Deny);
        assert!(check_navigation(&p, "not a url", None).is_err());
    }

    #[test]
    fn navigation_lock_keeps_host() {
        let p = AgentProfile::preset(Preset::DataEntry);
        let cur = Some("https://crm.example/page1");
        assert!(check_navigation(&p, "https://crm.example/page2", cur).unwrap().is_allow());
        assert_eq!(check_navigation(&p, "https://other.example/", cur).unwrap().decision, Decision::Deny);
    }

    #[test]
    fn host_pattern_grammar() {
        for bad in ["*", "*.", "a.*.b", "foo*.example", "http://x.example", "x..example", "*.*.example"] {
            assert!(bad.parse::<HostPattern>().is_err(), "{bad}");
        }
        assert_eq!("*.Shop.Example".parse::<HostPattern>().unwrap().to_string(), "*.shop.example");
    }

    #[test]
    fn profile_file_loading() {
        let p = AgentProfile::from_json(
            r#"{"name":"recruiter","preset":"research","domain_allowlist":["linkedin.example"],
                "snapshot_filters":[{"match":"name-contains","pattern":"Messaging"}]}"#,
        )
        .unwrap();
        assert_eq!(p.snapshot_filters.len(), 1);
        assert!(p.sensitive_keywords.contains(&"post".to_string()));
        assert!(matches!(
            AgentProfile::from_json(r#"{"name":"x"}"#),
            Err(ProfileError::MissingAllowlist(_))
        ));
        assert!(matches!(
            AgentProfile::from_json(r#"{"name":"x","domain_allowlist":["a.*"]}"#),
            Err(ProfileError::Json(_))
        ));
    }
}
