//! Tool-call types and their JSON wire form
//! `{kind, params, evaluation_previous_goal?, memory?, next_goal?}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::snapshot::VersionedRef;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    Type,
    Hover,
    PressKey,
    SelectOption,
    UploadFile,
    Drag,
    Pan,
    Focus,
    WaitFor,
    HandleDialog,
    Navigate,
    NavigateBack,
    BrowserTabs,
    Snapshot,
    TakeScreenshot,
}

impl ActionKind {
    pub const ALL: [ActionKind; 16] = [
        ActionKind::Click,
        ActionKind::Type,
        ActionKind::Hover,
        ActionKind::PressKey,
        ActionKind::SelectOption,
        ActionKind::UploadFile,
        ActionKind::Drag,
        ActionKind::Pan,
        ActionKind::Focus,
        ActionKind::WaitFor,
        ActionKind::HandleDialog,
        ActionKind::Navigate,
        ActionKind::NavigateBack,
        ActionKind::BrowserTabs,
        ActionKind::Snapshot,
        ActionKind::TakeScreenshot,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::Type => "type",
            ActionKind::Hover => "hover",
            ActionKind::PressKey => "press_key",
            ActionKind::SelectOption => "select_option",
            ActionKind::UploadFile => "upload_file",
            ActionKind::Drag => "drag",
            ActionKind::Pan => "pan",
            ActionKind::Focus => "focus",
            ActionKind::WaitFor => "wait_for",
            ActionKind::HandleDialog => "handle_dialog",
            ActionKind::Navigate => "navigate",
            ActionKind::NavigateBack => "navigate_back",
            ActionKind::BrowserTabs => "browser_tabs",
            ActionKind::Snapshot => "snapshot",
            ActionKind::TakeScreenshot => "take_screenshot",
        }
    }

    /// Observation-only kinds. Everything else may change page or session state.
    pub fn is_read_only(self) -> bool {
        matches!(self, ActionKind::Snapshot | ActionKind::TakeScreenshot)
    }

    /// Kinds accepted inside a bulk request.
    pub fn is_bulkable(self) -> bool {
        matches!(
            self,
            ActionKind::Click
                | ActionKind::Type
                | ActionKind::Hover
                | ActionKind::PressKey
                | ActionKind::SelectOption
                | ActionKind::UploadFile
                | ActionKind::Drag
                | ActionKind::Pan
                | ActionKind::Focus
                | ActionKind::HandleDialog
        )
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ActionKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown action kind `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClickParams {
    #[serde(rename = "ref")]
    pub target: VersionedRef,
    #[serde(default, skip_serializing_if = "is_false")]
    pub double_click: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub right_click: bool,
    /// Press duration in milliseconds; rounded up to whole ticks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TypeParams {
    #[serde(rename = "ref")]
    pub target: VersionedRef,
    pub text: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub should_clear: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefParams {
    #[serde(rename = "ref")]
    pub target: VersionedRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PressKeyParams {
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectParams {
    #[serde(rename = "ref")]
    pub target: VersionedRef,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UploadParams {
    #[serde(rename = "ref")]
    pub target: VersionedRef,
    pub paths: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DragParams {
    pub start_ref: VersionedRef,
    pub end_ref: VersionedRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PanParams {
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub target: Option<VersionedRef>,
    #[serde(default)]
    pub delta_x: i64,
    #[serde(default)]
    pub delta_y: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WaitForParams {
    /// Ticks. Alone it sleeps exactly this long; with a text condition it caps the wait.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_to_wait: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_gone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HandleDialogParams {
    pub accept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigateParams {
    pub url: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TabOp {
    Create,
    Switch,
    Close,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TabsParams {
    pub action: TabOp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tab_id: Option<u32>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    #[default]
    Screen,
    Print,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SnapshotParams {
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub target: Option<VersionedRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_type: Option<MediaType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_ref: Option<VersionedRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_ref: Option<VersionedRef>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScreenshotParams {
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub target: Option<VersionedRef>,
    #[serde(default, skip_serializing_if = "is_false")]
    pub full_page: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ActionParams {
    Click(ClickParams),
    Type(TypeParams),
    Hover(RefParams),
    PressKey(PressKeyParams),
    SelectOption(SelectParams),
    UploadFile(UploadParams),
    Drag(DragParams),
    Pan(PanParams),
    Focus(RefParams),
    WaitFor(WaitForParams),
    HandleDialog(HandleDialogParams),
    Navigate(NavigateParams),
    NavigateBack,
    BrowserTabs(TabsParams),
    Snapshot(#[serde(default)] SnapshotParams),
    TakeScreenshot(#[serde(default)] ScreenshotParams),
}

/// The agent's per-call reasoning record.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentMemo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation_previous_goal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_goal: Option<String>,
}

impl AgentMemo {
    pub fn new(evaluation: &str, memory: &str, next_goal: &str) -> Self {
        let some = |s: &str| (!s.is_empty()).then(|| s.to_string());
        AgentMemo {
            evaluation_previous_goal: some(evaluation),
            memory: some(memory),
            next_goal: some(next_goal),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.evaluation_previous_goal.is_none() && self.memory.is_none() && self.next_goal.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Action {
    #[serde(flatten)]
    pub params: ActionParams,
    #[serde(flatten)]
    pub memo: AgentMemo,
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        use serde_json::{Map, Value};
        let mut obj = Map::<String, Value>::deserialize(deserializer)?;
        let kind = obj.remove("kind").ok_or_else(|| D::Error::missing_field("kind"))?;
        let params = obj.remove("params");
        let memo: AgentMemo = serde_json::from_value(Value::Object(obj.clone())).map_err(D::Error::custom)?;
        const MEMO: [&str; 3] = ["evaluation_previous_goal", "memory", "next_goal"];
        if let Some(k) = obj.keys().find(|k| !MEMO.contains(&k.as_str())) {
            return Err(D::Error::unknown_field(k, &["kind", "params", MEMO[0], MEMO[1], MEMO[2]]));
        }
        let mut tagged = Map::new();
        // Parameterless calls may omit `params` entirely.
        let unit = kind.as_str() == Some("navigate_back");
        tagged.insert("kind".into(), kind);
        match params {
            Some(p) if !unit => {
                tagged.insert("params".into(), p);
            }
            None if !unit => {
                tagged.insert("params".into(), Value::Object(Map::new()));
            }
            _ => {}
        }
        let params: ActionParams = serde_json::from_value(Value::Object(tagged)).map_err(D::Error::custom)?;
        Ok(Action { params, memo })
    }
}

impl From<ActionParams> for Action {
    fn from(params: ActionParams) -> Self {
        Action {
            params,
            memo: AgentMemo::default(),
        }
    }
}

impl Action {
    pub fn with_memo(mut self, memo: AgentMemo) -> Self {
        self.memo = memo;
        self
    }

    pub fn click(target: VersionedRef) -> Self {
        ActionParams::Click(ClickParams {
            target,
            double_click: false,
            right_click: false,
            hold_ms: None,
        })
        .into()
    }

    pub fn type_text(target: VersionedRef, text: impl Into<String>) -> Self {
        ActionParams::Type(TypeParams {
            target,
            text: text.into(),
            should_clear: false,
        })
        .into()
    }

    pub fn select(target: VersionedRef, values: &[&str]) -> Self {
        ActionParams::SelectOption(SelectParams {
            target,
            values: values.iter().map(|v| v.to_string()).collect(),
        })
        .into()
    }

    pub fn snapshot() -> Self {
        ActionParams::Snapshot(SnapshotParams::default()).into()
    }

    pub fn snapshot_range(start: VersionedRef, end: VersionedRef) -> Self {
        ActionParams::Snapshot(SnapshotParams {
            start_ref: Some(start),
            end_ref: Some(end),
            ..SnapshotParams::default()
        })
        .into()
    }

    pub fn wait_for_text(text: impl Into<String>) -> Self {
        ActionParams::WaitFor(WaitForParams {
            text_to_wait: Some(text.into()),
            ..WaitForParams::default()
        })
        .into()
    }

    pub fn handle_dialog(accept: bool) -> Self {
        ActionParams::HandleDialog(HandleDialogParams {
            accept,
            prompt_text: None,
        })
        .into()
    }

    pub fn navigate(url: impl Into<String>) -> Self {
        ActionParams::Navigate(NavigateParams { url: url.into() }).into()
    }

    pub fn press_key(key: impl Into<String>) -> Self {
        ActionParams::PressKey(PressKeyParams { key: key.into() }).into()
    }

    pub fn kind(&self) -> ActionKind {
        match &self.params {
            ActionParams::Click(_) => ActionKind::Click,
            ActionParams::Type(_) => ActionKind::Type,
            ActionParams::Hover(_) => ActionKind::Hover,
            ActionParams::PressKey(_) => ActionKind::PressKey,
            ActionParams::SelectOption(_) => ActionKind::SelectOption,
            ActionParams::UploadFile(_) => ActionKind::UploadFile,
            ActionParams::Drag(_) => ActionKind::Drag,
            ActionParams::Pan(_) => ActionKind::Pan,
            ActionParams::Focus(_) => ActionKind::Focus,
            ActionParams::WaitFor(_) => ActionKind::WaitFor,
            ActionParams::HandleDialog(_) => ActionKind::HandleDialog,
            ActionParams::Navigate(_) => ActionKind::Navigate,
            ActionParams::NavigateBack => ActionKind::NavigateBack,
            ActionParams::BrowserTabs(_) => ActionKind::BrowserTabs,
            ActionParams::Snapshot(_) => ActionKind::Snapshot,
            ActionParams::TakeScreenshot(_) => ActionKind::TakeScreenshot,
        }
    }

    /// Every ref the call carries, in parameter order.
    pub fn refs(&self) -> Vec<VersionedRef> {
        match &self.params {
            ActionParams::Click(p) => vec![p.target],
            ActionParams::Type(p) => vec![p.target],
            ActionParams::Hover(p) | ActionParams::Focus(p) => vec![p.target],
            ActionParams::SelectOption(p) => vec![p.target],
            ActionParams::UploadFile(p) => vec![p.target],
            ActionParams::Drag(p) => vec![p.start_ref, p.end_ref],
            ActionParams::Pan(p) => p.target.into_iter().collect(),
            ActionParams::Snapshot(p) => [p.target, p.start_ref, p.end_ref].into_iter().flatten().collect(),
            ActionParams::TakeScreenshot(p) => p.target.into_iter().collect(),
            ActionParams::PressKey(_)
            | ActionParams::WaitFor(_)
            | ActionParams::HandleDialog(_)
            | ActionParams::Navigate(_)
            | ActionParams::NavigateBack
            | ActionParams::BrowserTabs(_) => Vec::new(),
        }
    }

    /// Compact rendering for history, e.g. `type(ref=42, "John Doe")`.
    pub fn digest(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).unwrap_or_default();
        let kind = self.kind();
        let args = match &self.params {
            ActionParams::Click(p) => format!("ref={}", p.target.ref_id),
            ActionParams::Type(p) => format!("ref={}, {}", p.target.ref_id, q(&p.text)),
            ActionParams::Hover(p) | ActionParams::Focus(p) => format!("ref={}", p.target.ref_id),
            ActionParams::PressKey(p) => q(&p.key),
            ActionParams::SelectOption(p) => {
                let values: Vec<String> = p.values.iter().map(|v| q(v)).collect();
                format!("ref={}, [{}]", p.target.ref_id, values.join(", "))
            }
            ActionParams::UploadFile(p) => format!("ref={}, {} files", p.target.ref_id, p.paths.len()),
            ActionParams::Drag(p) => format!("ref={}, ref={}", p.start_ref.ref_id, p.end_ref.ref_id),
            ActionParams::Pan(p) => match p.target {
                Some(t) => format!("ref={}, {}, {}", t.ref_id, p.delta_x, p.delta_y),
                None => format!("{}, {}", p.delta_x, p.delta_y),
            },
            ActionParams::WaitFor(p) => [
                p.text_to_wait.as_ref().map(|t| q(t)),
                p.text_gone.as_ref().map(|t| format!("gone {}", q(t))),
                p.time.map(|t| format!("time={t}")),
            ]
            .into_iter()
            .flatten()
            .collect::<Vec<_>>()
            .join(", "),
            ActionParams::HandleDialog(p) => format!("accept={}", p.accept),
            ActionParams::Navigate(p) => q(&p.url),
            ActionParams::NavigateBack => String::new(),
            ActionParams::BrowserTabs(p) => {
                let mut s = format!("{:?}", p.action).to_lowercase();
                if let Some(id) = p.tab_id {
                    s.push_str(&format!(", tab={id}"));
                }
                if let Some(u) = &p.url {
                    s.push_str(&format!(", {}", q(u)));
                }
                s
            }
            ActionParams::Snapshot(p) => match (p.target, p.start_ref, p.end_ref) {
                (_, Some(a), Some(b)) => format!("refs={}-{}", a.ref_id, b.ref_id),
                (Some(t), _, _) => format!("ref={}", t.ref_id),
                _ => String::new(),
            },
            ActionParams::TakeScreenshot(_) => String::new(),
        };
        format!("{kind}({args})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_form_round_trips() {
        let json = r#"{"kind":"type","params":{"ref":"1:39","text":"Hello World!"},"memory":"started"}"#;
        let a: Action = serde_json::from_str(json).unwrap();
        assert_eq!(a.kind(), ActionKind::Type);
        assert_eq!(a.refs(), vec![VersionedRef::new(1, 39)]);
        assert_eq!(a.memo.memory.as_deref(), Some("started"));
        let back: Action = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn unit_and_defaulted_kinds_parse() {
        let a: Action = serde_json::from_str(r#"{"kind":"navigate_back"}"#).unwrap();
        assert_eq!(a.kind(), ActionKind::NavigateBack);
        let s: Action = serde_json::from_str(r#"{"kind":"snapshot","params":{}}"#).unwrap();
        assert_eq!(s, Action::snapshot());
        let s: Action = serde_json::from_str(r#"{"kind":"snapshot"}"#).unwrap();
        assert_eq!(s, Action::snapshot());
    }

    #[test]
    fn bad_refs_are_rejected() {
        assert!(serde_json::from_str::<Action>(r#"{"kind":"click","params":{"ref":"39"}}"#).is_err());
        assert!(serde_json::from_str::<Action>(r#"{"kind":"fly","params":{}}"#).is_err());
    }

    #[test]
    fn digest_format() {
        let r = VersionedRef::new(3, 42);
        assert_eq!(Action::click(r).digest(), "click(ref=42)");
        assert_eq!(Action::type_text(r, "John Doe").digest(), r#"type(ref=42, "John Doe")"#);
        assert_eq!(Action::select(r, &["USA"]).digest(), r#"select_option(ref=42, ["USA"])"#);
    }
}
