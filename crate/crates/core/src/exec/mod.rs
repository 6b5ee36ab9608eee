//! Tool-call execution against a `BrowserSession`: ref validation, policy
//! checks before any mutation, bulk dispatch and snapshot refresh.

mod action;

use serde::{Deserialize, Serialize};

use crate::safety::{check_action, check_navigation, profile_snapshot_view, AgentProfile, ConfirmationProvider, Decision, SafetyVerdict};
use crate::snapshot::{
    build_snapshot, extract_range, resolve_ref, serialize_subtree, AccessibilitySnapshot, NodeId, NodeRole, PageNode,
    SnapshotError, VersionedRef,
};
use crate::web::{BrowserSession, PageAction, WebError};

pub use action::{
    Action, ActionKind, ActionParams, AgentMemo, ClickParams, DragParams, HandleDialogParams, MediaType,
    NavigateParams, PanParams, PressKeyParams, RefParams, ScreenshotParams, SelectParams, SnapshotParams, TabOp,
    TabsParams, TypeParams, UploadParams, WaitForParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecConfig {
    pub latency_ticks: u64,
    /// Added per inner bulk action beyond the first.
    pub bulk_increment_ticks: u64,
    pub wait_timeout_ticks: u64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        ExecConfig { latency_ticks: 4, bulk_increment_ticks: 1, wait_timeout_ticks: 30 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Error,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorCode {
    StaleRef,
    UnknownRef,
    ElementObscured,
    ElementDisabled,
    NotInteractive,
    Timeout,
    NoDialogPending,
    NoSuchTab,
    InvalidBulk,
    PolicyDenied,
    ConfirmationRequired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionError {
    pub code: ErrorCode,
    pub message: String,
}

impl ActionError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ActionError { code, message: message.into() }
    }
}

impl From<WebError> for ActionError {
    fn from(e: WebError) -> Self {
        let code = match &e {
            WebError::NoActiveTab | WebError::NoSuchTab(_) => ErrorCode::NoSuchTab,
            WebError::Detached(_) => ErrorCode::StaleRef,
            WebError::ElementObscured { .. } | WebError::NativeDialogPending { .. } => ErrorCode::ElementObscured,
            WebError::ElementDisabled { .. } => ErrorCode::ElementDisabled,
            WebError::NoDialogPending => ErrorCode::NoDialogPending,
            WebError::NotInteractive { .. }
            | WebError::UnknownTemplate(_)
            | WebError::InvalidParams(_)
            | WebError::NoHistory
            | WebError::UnsupportedKey(_) => ErrorCode::NotInteractive,
        };
        ActionError::new(code, e.to_string())
    }
}

impl From<SnapshotError> for ActionError {
    fn from(e: SnapshotError) -> Self {
        match e {
            SnapshotError::StaleRef { expected, got } => ActionError::new(
                ErrorCode::StaleRef,
                format!("stale ref: it belongs to snapshot {got} but the page is at snapshot {expected}; use refs from the latest snapshot"),
            ),
            SnapshotError::UnknownRef { version, ref_id } => {
                ActionError::new(ErrorCode::UnknownRef, format!("ref {version}:{ref_id} does not exist in snapshot {version}"))
            }
            SnapshotError::EmptyRange { start, end } => {
                ActionError::new(ErrorCode::UnknownRef, format!("no refs between {start} and {end}"))
            }
            other => ActionError::new(ErrorCode::NotInteractive, other.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionResult {
    pub kind: ActionKind,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ActionError>,
    pub elapsed_ticks: u64,
    /// Current snapshot after the call; `None` only when no tab is open.
    #[serde(skip)]
    pub snapshot: Option<AccessibilitySnapshot>,
    pub snapshot_version: u64,
    /// Text returned by reads such as ranged snapshots.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<SafetyVerdict>,
}

impl ActionResult {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        self.error.as_ref().map(|e| e.code)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BulkRequest {
    pub actions: Vec<Action>,
    #[serde(flatten)]
    pub memo: AgentMemo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BulkResult {
    /// One entry per requested action; empty for rejected requests.
    pub results: Vec<ActionResult>,
    /// Request-level error: `InvalidBulk`, or the first inner failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ActionError>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_index: Option<usize>,
    pub elapsed_ticks: u64,
    #[serde(skip)]
    pub snapshot: Option<AccessibilitySnapshot>,
    pub snapshot_version: u64,
}

impl BulkResult {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// A successfully applied call before clock and snapshot bookkeeping.
struct Applied {
    verdict: SafetyVerdict,
    output: Option<String>,
    rebuild: bool,
    extra_ticks: u64,
}

type Failure = (ActionError, Option<SafetyVerdict>);

/// One agent's view of a browser session. Single writer.
#[derive(Debug, Clone)]
pub struct Executor {
    browser: BrowserSession,
    config: ExecConfig,
    current: Option<AccessibilitySnapshot>,
    media: MediaType,
    version: u64,
}

impl Executor {
    /// Takes the initial snapshot (version 1) if a tab is open.
    pub fn new(browser: BrowserSession, config: ExecConfig) -> Self {
        let mut e = Executor { browser, config, current: None, media: MediaType::Screen, version: 0 };
        e.rebuild();
        e
    }

    pub fn browser(&self) -> &BrowserSession {
        &self.browser
    }

    /// Direct backend access. Call `refresh` afterwards if the page changed.
    pub fn browser_mut(&mut self) -> &mut BrowserSession {
        &mut self.browser
    }

    pub fn config(&self) -> &ExecConfig {
        &self.config
    }

    pub fn snapshot(&self) -> Option<&AccessibilitySnapshot> {
        self.current.as_ref()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn refresh(&mut self) {
        self.rebuild();
    }

    fn rebuild(&mut self) {
        let Ok(page) = self.browser.active_page() else {
            self.current = None;
            return;
        };
        let tree = page.accessibility_tree(self.media == MediaType::Print);
        self.current = build_snapshot(tree.as_ref(), self.version)
            .ok()
            .map(|s| s.with_origin(page.url.clone(), self.browser.clock(), page.page_id));
        if self.current.is_some() {
            self.version += 1;
        }
    }

    fn result(&self, kind: ActionKind, status: Status, error: Option<ActionError>, elapsed: u64) -> ActionResult {
        ActionResult {
            kind,
            status,
            error,
            elapsed_ticks: elapsed,
            snapshot: self.current.clone(),
            snapshot_version: self.version,
            output: None,
            verdict: None,
        }
    }

    fn fail(&self, kind: ActionKind, (error, verdict): Failure) -> ActionResult {
        let mut r = self.result(kind, Status::Error, Some(error), 0);
        r.verdict = verdict;
        r
    }

    /// Advances the clock; returns whether any scheduled event fired.
    fn pass_time(&mut self, ticks: u64) -> bool {
        !self.browser.advance_clock(ticks).is_empty()
    }

    pub fn execute(
        &mut self,
        profile: &AgentProfile,
        confirm: &mut dyn ConfirmationProvider,
        action: &Action,
    ) -> ActionResult {
        let kind = action.kind();
        match &action.params {
            ActionParams::BrowserTabs(p) => return self.tabs(profile, confirm, action, p),
            ActionParams::WaitFor(p) => return self.wait_for(profile, confirm, action, p),
            _ => {}
        }
        let Some(view) = self.current.as_ref().map(|s| profile_snapshot_view(profile, s)) else {
            return self.fail(kind, (ActionError::from(WebError::NoActiveTab), None));
        };
        match self.apply(profile, confirm, action, &view) {
            Err(f) => self.fail(kind, f),
            Ok(applied) => {
                let ticks = self.config.latency_ticks + applied.extra_ticks;
                let fired = self.pass_time(ticks);
                let rebuild = applied.rebuild || fired || !kind.is_read_only();
                if rebuild {
                    self.rebuild();
                }
                let mut r = self.result(kind, Status::Ok, None, ticks);
                r.output = applied.output;
                r.verdict = Some(applied.verdict);
                r
            }
        }
    }

    /// Ref validation, policy and navigation checks, then the page mutation.
    fn apply(
        &mut self,
        profile: &AgentProfile,
        confirm: &mut dyn ConfirmationProvider,
        action: &Action,
        view: &AccessibilitySnapshot,
    ) -> Result<Applied, Failure> {
        let page = self.browser.active_page().map_err(|e| (e.into(), None))?;

        // Range endpoints only need the right generation; the range itself may be sparse.
        let (range, refs): (Vec<VersionedRef>, Vec<VersionedRef>) = match &action.params {
            ActionParams::Snapshot(p) => {
                let range = [p.start_ref, p.end_ref].into_iter().flatten().collect();
                (range, p.target.into_iter().collect())
            }
            _ => (Vec::new(), action.refs()),
        };
        for r in &range {
            if r.version != view.version() {
                return Err((SnapshotError::StaleRef { expected: view.version(), got: r.version }.into(), None));
            }
        }
        let mut nodes: Vec<NodeId> = Vec::with_capacity(refs.len());
        for r in &refs {
            let node = resolve_ref(view, *r).map_err(|e| (e.into(), None))?;
            nodes.push(node.node_id);
        }
        if !nodes.is_empty() && view.page_id() != page.page_id {
            return Err((WebError::Detached(nodes[0]).into(), None));
        }

        let verdict = check_action(profile, action, view, confirm);
        match verdict.decision {
            Decision::Allow => {}
            Decision::Deny => {
                return Err((ActionError::new(ErrorCode::PolicyDenied, verdict.reason.clone()), Some(verdict)))
            }
            Decision::RequireConfirmation => {
                return Err((ActionError::new(ErrorCode::ConfirmationRequired, verdict.reason.clone()), Some(verdict)))
            }
        }

        let nav_target = match &action.params {
            ActionParams::Navigate(p) => Some(p.url.clone()),
            ActionParams::Click(p) if !p.right_click => self.browser.navigation_target(nodes[0]),
            ActionParams::PressKey(p) if matches!(p.key.as_str(), "Enter" | "Space") => {
                page.focused.and_then(|f| self.browser.navigation_target(f))
            }
            _ => None,
        };
        if let Some(url) = nav_target {
            let nav = check_navigation(profile, &url, Some(&page.url))
                .unwrap_or_else(|e| SafetyVerdict::deny(e.to_string()));
            if !nav.is_allow() {
                return Err((ActionError::new(ErrorCode::PolicyDenied, nav.reason.clone()), Some(nav)));
            }
        }

        let web = |e: WebError| -> Failure { (e.into(), Some(verdict.clone())) };
        let mut applied = Applied { verdict: verdict.clone(), output: None, rebuild: true, extra_ticks: 0 };
        match &action.params {
            ActionParams::Click(p) => {
                let a = PageAction::Click { double: p.double_click, right: p.right_click };
                self.browser.apply_page_action(nodes[0], &a).map_err(web)?;
                applied.extra_ticks = p.hold_ms.map_or(0, |ms| ms.div_ceil(1000));
            }
            ActionParams::Type(p) => {
                let a = PageAction::Type { text: p.text.clone(), clear: p.should_clear };
                self.browser.apply_page_action(nodes[0], &a).map_err(web)?;
            }
            ActionParams::Hover(_) => {
                self.browser.apply_page_action(nodes[0], &PageAction::Hover).map_err(web)?;
            }
            ActionParams::Focus(_) => {
                self.browser.apply_page_action(nodes[0], &PageAction::Focus).map_err(web)?;
            }
            ActionParams::PressKey(p) => {
                self.browser.press_key(&p.key).map_err(web)?;
            }
            ActionParams::SelectOption(p) => {
                let a = PageAction::Select { values: p.values.clone() };
                self.browser.apply_page_action(nodes[0], &a).map_err(web)?;
            }
            ActionParams::UploadFile(p) => {
                let a = PageAction::Upload { paths: p.paths.clone() };
                self.browser.apply_page_action(nodes[0], &a).map_err(web)?;
            }
            ActionParams::Drag(_) => {
                self.browser.apply_page_action(nodes[0], &PageAction::Drag { target: nodes[1] }).map_err(web)?;
            }
            ActionParams::Pan(p) => match nodes.first() {
                Some(&n) => {
                    self.browser.apply_page_action(n, &PageAction::Pan { dx: p.delta_x, dy: p.delta_y }).map_err(web)?;
                }
                None => {
                    self.browser.pan_viewport(p.delta_x, p.delta_y).map_err(web)?;
                }
            },
            ActionParams::HandleDialog(p) => {
                self.browser.handle_dialog(p.accept, p.prompt_text.as_deref()).map_err(web)?;
            }
            ActionParams::Navigate(p) => {
                self.browser.navigate(&p.url).map_err(web)?;
                self.media = MediaType::Screen;
            }
            ActionParams::NavigateBack => {
                self.browser.navigate_back().map_err(web)?;
                self.media = MediaType::Screen;
            }
            ActionParams::Snapshot(p) => {
                applied.rebuild = false;
                match (p.start_ref, p.end_ref, p.target) {
                    (Some(s), Some(e), _) => {
                        let text = extract_range(view, s.ref_id, e.ref_id).map_err(|e| (e.into(), None))?;
                        applied.output = Some(text.into_string());
                    }
                    (None, None, Some(t)) => {
                        let text = serialize_subtree(view, t.ref_id).map_err(|e| (e.into(), None))?;
                        applied.output = Some(text.into_string());
                    }
                    (None, None, None) => {
                        let media = p.media_type.unwrap_or_default();
                        if media != self.media {
                            self.media = media;
                            applied.rebuild = true;
                        }
                    }
                    _ => {
                        return Err((
                            ActionError::new(ErrorCode::NotInteractive, "snapshot: startRef and endRef must be given together"),
                            None,
                        ))
                    }
                }
            }
            ActionParams::TakeScreenshot(p) => {
                applied.rebuild = false;
                let (x, y) = page.viewport;
                let scope = match p.target {
                    Some(t) => format!("element ref={}", t.ref_id),
                    None if p.full_page => "full page".to_string(),
                    None => format!("viewport at ({x}, {y})"),
                };
                applied.output = Some(format!("[screenshot of {} : {scope}; pixels are not rendered]", page.url));
            }
            ActionParams::WaitFor(_) | ActionParams::BrowserTabs(_) => unreachable!("dispatched earlier"),
        }
        Ok(applied)
    }

    /// Text presence as the agent would see it, i.e. after profile filters.
    fn view_contains(&self, profile: &AgentProfile, needle: &str) -> bool {
        let Ok(page) = self.browser.active_page() else { return false };
        let tree = page.accessibility_tree(self.media == MediaType::Print);
        let Ok(snap) = build_snapshot(tree.as_ref(), 0) else { return false };
        profile_snapshot_view(profile, &snap).nodes().iter().any(|n| {
            n.name.contains(needle)
                || n.description.as_deref().is_some_and(|d| d.contains(needle))
                || n.value.as_deref().is_some_and(|v| v.contains(needle))
        })
    }

    fn wait_for(
        &mut self,
        profile: &AgentProfile,
        confirm: &mut dyn ConfirmationProvider,
        action: &Action,
        p: &WaitForParams,
    ) -> ActionResult {
        let kind = ActionKind::WaitFor;
        let Some(view) = self.current.as_ref().map(|s| profile_snapshot_view(profile, s)) else {
            return self.fail(kind, (ActionError::from(WebError::NoActiveTab), None));
        };
        let verdict = check_action(profile, action, &view, confirm);
        if !verdict.is_allow() {
            return self.fail(kind, (ActionError::new(ErrorCode::PolicyDenied, verdict.reason.clone()), Some(verdict)));
        }
        if p.text_to_wait.is_none() && p.text_gone.is_none() {
            let Some(t) = p.time else {
                let e = ActionError::new(ErrorCode::NotInteractive, "wait_for needs time, textToWait or textGone");
                return self.fail(kind, (e, Some(verdict)));
            };
            self.pass_time(t);
            self.rebuild();
            let mut r = self.result(kind, Status::Ok, None, t);
            r.verdict = Some(verdict);
            return r;
        }
        let holds = |ex: &Executor| {
            p.text_to_wait.as_deref().is_none_or(|t| ex.view_contains(profile, t))
                && p.text_gone.as_deref().is_none_or(|t| !ex.view_contains(profile, t))
        };
        let cap = p.time.unwrap_or(self.config.wait_timeout_ticks);
        let mut waited = 0;
        while !holds(self) {
            if waited == cap {
                self.rebuild();
                let e = ActionError::new(
                    ErrorCode::Timeout,
                    format!("wait_for condition still false after {cap} ticks"),
                );
                let mut r = self.result(kind, Status::Error, Some(e), waited);
                r.verdict = Some(verdict);
                return r;
            }
            self.pass_time(1);
            waited += 1;
        }
        self.rebuild();
        let mut r = self.result(kind, Status::Ok, None, waited);
        r.verdict = Some(verdict);
        r
    }

    fn tabs(
        &mut self,
        profile: &AgentProfile,
        confirm: &mut dyn ConfirmationProvider,
        action: &Action,
        p: &TabsParams,
    ) -> ActionResult {
        let kind = ActionKind::BrowserTabs;
        // Tab management works with zero tabs, so policy runs against an empty view.
        let view = self
            .current
            .as_ref()
            .map(|s| profile_snapshot_view(profile, s))
            .unwrap_or_else(|| {
                let blank = PageNode::new(0, NodeRole::Generic, "");
                build_snapshot(Some(&blank), 0).expect("non-empty tree")
            });
        let verdict = check_action(profile, action, &view, confirm);
        if !verdict.is_allow() {
            return self.fail(kind, (ActionError::new(ErrorCode::PolicyDenied, verdict.reason.clone()), Some(verdict)));
        }
        let outcome = match p.action {
            TabOp::Create => {
                if let Some(url) = &p.url {
                    let current = self.browser.active_page().ok().map(|pg| pg.url.clone());
                    let nav = check_navigation(profile, url, current.as_deref())
                        .unwrap_or_else(|e| SafetyVerdict::deny(e.to_string()));
                    if !nav.is_allow() {
                        return self.fail(kind, (ActionError::new(ErrorCode::PolicyDenied, nav.reason.clone()), Some(nav)));
                    }
                }
                self.browser.create_tab(p.url.as_deref());
                Ok(())
            }
            TabOp::Switch | TabOp::Close => match p.tab_id {
                None => Err(ActionError::new(ErrorCode::NoSuchTab, "browser_tabs switch/close needs tabId")),
                Some(id) if p.action == TabOp::Switch => self.browser.switch_tab(id).map_err(Into::into),
                Some(id) => self.browser.close_tab(id).map_err(Into::into),
            },
        };
        if let Err(e) = outcome {
            return self.fail(kind, (e, Some(verdict)));
        }
        self.media = MediaType::Screen;
        let ticks = self.config.latency_ticks;
        self.pass_time(ticks);
        self.rebuild();
        let mut r = self.result(kind, Status::Ok, None, ticks);
        let listing: Vec<String> = self
            .browser
            .tabs()
            .iter()
            .map(|t| {
                let mark = if self.browser.active_tab_id() == Some(t.id) { "*" } else { " " };
                format!("{mark}{} {}", t.id, t.page.url)
            })
            .collect();
        r.output = Some(listing.join("\n"));
        r.verdict = Some(verdict);
        r
    }

    /// Tab management as a standalone operation.
    pub fn manage_tabs(
        &mut self,
        profile: &AgentProfile,
        confirm: &mut dyn ConfirmationProvider,
        op: TabOp,
        url: Option<&str>,
        tab_id: Option<u32>,
    ) -> ActionResult {
        let params = TabsParams { action: op, url: url.map(str::to_string), tab_id };
        self.execute(profile, confirm, &ActionParams::BrowserTabs(params).into())
    }

    /// Applies a batch in order, stopping at the first failure, and builds one
    /// snapshot at the end.
    pub fn execute_bulk(
        &mut self,
        profile: &AgentProfile,
        confirm: &mut dyn ConfirmationProvider,
        request: &BulkRequest,
    ) -> BulkResult {
        let reject = |ex: &Executor, msg: String| BulkResult {
            results: Vec::new(),
            error: Some(ActionError::new(ErrorCode::InvalidBulk, msg)),
            failed_index: None,
            elapsed_ticks: 0,
            snapshot: ex.current.clone(),
            snapshot_version: ex.version,
        };
        if request.actions.is_empty() {
            return reject(self, "bulk request has no actions".into());
        }
        if let Some(a) = request.actions.iter().find(|a| !a.kind().is_bulkable()) {
            return reject(self, format!("`{}` cannot be batched; call it on its own", a.kind()));
        }
        let mut versions: Vec<u64> = request.actions.iter().flat_map(|a| a.refs()).map(|r| r.version).collect();
        versions.sort_unstable();
        versions.dedup();
        if versions.len() > 1 {
            return reject(self, format!("bulk actions mix snapshot versions {versions:?}"));
        }
        let Some(view) = self.current.as_ref().map(|s| profile_snapshot_view(profile, s)) else {
            return reject(self, "no tab is open".into());
        };

        let mut results = Vec::with_capacity(request.actions.len());
        let mut failure: Option<(usize, ActionError)> = None;
        let mut extra = 0;
        for (i, action) in request.actions.iter().enumerate() {
            let kind = action.kind();
            if failure.is_some() {
                results.push(self.result(kind, Status::Skipped, None, 0));
                continue;
            }
            match self.apply(profile, confirm, action, &view) {
                Ok(applied) => {
                    extra += applied.extra_ticks;
                    let mut r = self.result(kind, Status::Ok, None, 0);
                    r.snapshot = None;
                    r.verdict = Some(applied.verdict);
                    results.push(r);
                }
                Err((e, verdict)) => {
                    let mut r = self.result(kind, Status::Error, Some(e.clone()), 0);
                    r.snapshot = None;
                    r.verdict = verdict;
                    results.push(r);
                    failure = Some((i, e));
                }
            }
        }
        let attempted = failure.as_ref().map_or(results.len(), |(i, _)| i + 1) as u64;
        let succeeded = failure.as_ref().map_or(results.len(), |(i, _)| *i);
        let mut elapsed = 0;
        if succeeded > 0 {
            elapsed = self.config.latency_ticks + self.config.bulk_increment_ticks * (attempted - 1) + extra;
            self.pass_time(elapsed);
            self.rebuild();
        }
        let (failed_index, error) = match failure {
            Some((i, e)) => (Some(i), Some(ActionError::new(e.code, format!("action {i} failed: {}", e.message)))),
            None => (None, None),
        };
        BulkResult {
            results,
            error,
            failed_index,
            elapsed_ticks: elapsed,
            snapshot: self.current.clone(),
            snapshot_version: self.version,
        }
    }
}
