//! Deterministic simulated browser: tabs, pages built from templates, a
//! virtual clock, native dialogs and per-node behavior bindings.
//!
//! One tick is one simulated second. Nothing here touches the network; every
//! page is a pure function of its template, the session seed and the actions
//! applied so far.

mod page;
mod templates;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::snapshot::{NodeId, NodeRole, NodeStates, PageNode};

pub use page::{
    Binding, DomBuilder, DomNode, Effect, LoadState, NativeDialog, NativeDialogKind,
    ScheduledEvent, VirtualPage,
};
pub use templates::{
    article_paragraphs, blank_page, not_found_page, product_label, product_prices,
    products_page_url, text_label, ArticleParams, DialogStackParams, FieldKind, FormField,
    FormParams, PageTemplate, ProductParams, ProfileParams, TemplateContext,
};

pub type TabId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WebError {
    #[error("no tab is open")]
    NoActiveTab,
    #[error("no tab with id {0}")]
    NoSuchTab(TabId),
    #[error("Ref detached from the DOM (node {0:?} no longer exists on this page)")]
    Detached(NodeId),
    #[error("element '{name}' is covered by an open dialog")]
    ElementObscured { name: String },
    #[error("element '{name}' is disabled")]
    ElementDisabled { name: String },
    #[error("element '{name}' is not interactive: {reason}")]
    NotInteractive { name: String, reason: String },
    #[error("a native {kind:?} dialog is open (\"{message}\"); use handle_dialog first")]
    NativeDialogPending { kind: NativeDialogKind, message: String },
    #[error("no native dialog is pending")]
    NoDialogPending,
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("invalid template parameters: {0}")]
    InvalidParams(String),
    #[error("tab has no earlier page to go back to")]
    NoHistory,
    #[error("unsupported key `{0}`")]
    UnsupportedKey(String),
}

/// Low-level page interaction, already resolved to a DOM node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PageAction {
    Click { double: bool, right: bool },
    Type { text: String, clear: bool },
    Hover,
    Focus,
    Select { values: Vec<String> },
    Upload { paths: Vec<String> },
    Drag { target: NodeId },
    Pan { dx: i64, dy: i64 },
}

impl PageAction {
    fn verb(&self) -> &'static str {
        match self {
            PageAction::Click { .. } => "click",
            PageAction::Type { .. } => "type",
            PageAction::Hover => "hover",
            PageAction::Focus => "focus",
            PageAction::Select { .. } => "select_option",
            PageAction::Upload { .. } => "upload_file",
            PageAction::Drag { .. } => "drag",
            PageAction::Pan { .. } => "pan",
        }
    }
}

/// Nodes touched by one action. A rebuilt snapshot is always required after
/// a successful mutating action.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MutationReport {
    pub changed: Vec<NodeId>,
    pub rebuild_required: bool,
    pub navigated_to: Option<String>,
}

impl MutationReport {
    fn touched(ids: impl IntoIterator<Item = NodeId>) -> Self {
        MutationReport {
            changed: ids.into_iter().collect(),
            rebuild_required: true,
            navigated_to: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiredEvent {
    pub tick: u64,
    pub tab: TabId,
    pub effect: Effect,
}

#[derive(Debug, Clone)]
pub struct Tab {
    pub id: TabId,
    pub page: VirtualPage,
    back: Vec<String>,
}

#[derive(Debug, Clone)]
struct Route {
    template: PageTemplate,
    page_index: usize,
}

/// Keys `press_key` understands besides modifier+letter chords.
pub const NAMED_KEYS: [&str; 16] = [
    "Tab", "Shift+Tab", "Enter", "Space", "Escape", "Backspace", "Delete", "ArrowUp",
    "ArrowDown", "ArrowLeft", "ArrowRight", "PageUp", "PageDown", "Home", "End", "F5",
];

/// Keys that only move the viewport.
pub const SCROLL_KEYS: [&str; 8] = [
    "ArrowUp", "ArrowDown", "ArrowLeft", "ArrowRight", "PageUp", "PageDown", "Home", "End",
];

fn parse_chord(key: &str) -> Option<(&str, char)> {
    let (modifier, rest) = key.split_once('+')?;
    let mut chars = rest.chars();
    let letter = chars.next()?;
    if chars.next().is_some() || !letter.is_ascii_alphabetic() {
        return None;
    }
    matches!(modifier, "Cmd" | "Ctrl" | "Alt" | "Shift" | "Meta").then_some((modifier, letter))
}

pub fn is_supported_key(key: &str) -> bool {
    NAMED_KEYS.contains(&key) || parse_chord(key).is_some()
}

#[derive(Debug, Clone)]
pub struct BrowserSession {
    tabs: Vec<Tab>,
    active: Option<TabId>,
    clock: u64,
    pending_dialog: Option<(TabId, NativeDialog)>,
    rng_seed: u64,
    next_tab_id: TabId,
    next_page_id: u64,
    routes: BTreeMap<String, Route>,
    cart: Vec<String>,
    clipboard: String,
}

impl BrowserSession {
    pub fn new(rng_seed: u64) -> Self {
        BrowserSession {
            tabs: Vec::new(),
            active: None,
            clock: 0,
            pending_dialog: None,
            rng_seed,
            next_tab_id: 1,
            next_page_id: 1,
            routes: BTreeMap::new(),
            cart: Vec::new(),
            clipboard: String::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn tabs(&self) -> &[Tab] {
        &self.tabs
    }

    pub fn active_tab_id(&self) -> Option<TabId> {
        self.active
    }

    pub fn cart(&self) -> &[String] {
        &self.cart
    }

    pub fn pending_dialog(&self) -> Option<&NativeDialog> {
        self.pending_dialog.as_ref().map(|(_, d)| d)
    }

    fn tab_index(&self, id: TabId) -> Result<usize, WebError> {
        self.tabs
            .iter()
            .position(|t| t.id == id)
            .ok_or(WebError::NoSuchTab(id))
    }

    pub fn active_page(&self) -> Result<&VirtualPage, WebError> {
        let id = self.active.ok_or(WebError::NoActiveTab)?;
        Ok(&self.tabs[self.tab_index(id)?].page)
    }

    fn active_tab_mut(&mut self) -> Result<&mut Tab, WebError> {
        let id = self.active.ok_or(WebError::NoActiveTab)?;
        let i = self.tab_index(id)?;
        Ok(&mut self.tabs[i])
    }

    fn active_page_mut(&mut self) -> Result<&mut VirtualPage, WebError> {
        Ok(&mut self.active_tab_mut()?.page)
    }

    fn open_url(&mut self, url: &str) -> VirtualPage {
        let page_id = self.next_page_id;
        self.next_page_id += 1;
        match self.routes.get(url) {
            Some(route) => route.template.instantiate(
                route.page_index,
                TemplateContext {
                    seed: self.rng_seed,
                    page_id,
                    cart_count: self.cart.len(),
                },
            ),
            None if url == "about:blank" => blank_page(page_id, url),
            None => not_found_page(page_id, url),
        }
    }

    pub fn is_known_url(&self, url: &str) -> bool {
        url == "about:blank" || self.routes.contains_key(url)
    }

    /// Registers the template's routes and loads its entry page into the
    /// active tab, opening a tab first when none exists.
    pub fn load_template(&mut self, template: &PageTemplate) -> Result<&VirtualPage, WebError> {
        template.validate()?;
        for (url, page_index) in template.urls() {
            self.routes.insert(
                url,
                Route {
                    template: template.clone(),
                    page_index,
                },
            );
        }
        let url = template.entry_url();
        if self.active.is_none() {
            self.create_tab(Some(&url));
        } else {
            let page = self.open_url(&url);
            self.active_tab_mut()?.page = page;
        }
        self.active_page()
    }

    /// Opens a tab (blank without a url) and makes it active.
    pub fn create_tab(&mut self, url: Option<&str>) -> TabId {
        let page = self.open_url(url.unwrap_or("about:blank"));
        let id = self.next_tab_id;
        self.next_tab_id += 1;
        self.tabs.push(Tab {
            id,
            page,
            back: Vec::new(),
        });
        self.active = Some(id);
        id
    }

    pub fn switch_tab(&mut self, id: TabId) -> Result<(), WebError> {
        self.tab_index(id)?;
        self.active = Some(id);
        Ok(())
    }

    /// Closes a tab. The tab before it (or the new first tab) becomes active.
    pub fn close_tab(&mut self, id: TabId) -> Result<(), WebError> {
        let i = self.tab_index(id)?;
        self.tabs.remove(i);
        if self.pending_dialog.as_ref().is_some_and(|(t, _)| *t == id) {
            self.pending_dialog = None;
        }
        if self.active == Some(id) {
            self.active = if self.tabs.is_empty() {
                None
            } else {
                Some(self.tabs[i.saturating_sub(1).min(self.tabs.len() - 1)].id)
            };
        }
        Ok(())
    }

    fn ensure_no_native_dialog(&self) -> Result<(), WebError> {
        match &self.pending_dialog {
            Some((_, d)) => Err(WebError::NativeDialogPending {
                kind: d.kind,
                message: d.message.clone(),
            }),
            None => Ok(()),
        }
    }

    pub fn navigate(&mut self, url: &str) -> Result<MutationReport, WebError> {
        self.ensure_no_native_dialog()?;
        let page = self.open_url(url);
        let tab = self.active_tab_mut()?;
        let previous = std::mem::replace(&mut tab.page, page);
        tab.back.push(previous.url);
        Ok(MutationReport {
            changed: Vec::new(),
            rebuild_required: true,
            navigated_to: Some(url.to_string()),
        })
    }

    pub fn navigate_back(&mut self) -> Result<MutationReport, WebError> {
        self.ensure_no_native_dialog()?;
        let url = self
            .active_tab_mut()?
            .back
            .pop()
            .ok_or(WebError::NoHistory)?;
        let page = self.open_url(&url);
        self.active_tab_mut()?.page = page;
        Ok(MutationReport {
            changed: Vec::new(),
            rebuild_required: true,
            navigated_to: Some(url),
        })
    }

    /// URL a click on this node would load, if its binding navigates.
    pub fn navigation_target(&self, node: NodeId) -> Option<String> {
        let page = self.active_page().ok()?;
        match &page.node(node)?.binding {
            Binding::Navigate { url } => Some(url.clone()),
            _ => None,
        }
    }

    /// Advances the clock one tick at a time, firing due events across all tabs.
    pub fn advance_clock(&mut self, ticks: u64) -> Vec<FiredEvent> {
        let mut fired = Vec::new();
        for _ in 0..ticks {
            self.clock += 1;
            let now = self.clock;
            for tab in &mut self.tabs {
                // Effects scheduled with zero delay land on the same tick.
                loop {
                    let due = tab.page.take_due(now);
                    if due.is_empty() {
                        break;
                    }
                    for event in due {
                        tab.page.apply_effect(&event.effect, now);
                        fired.push(FiredEvent {
                            tick: now,
                            tab: tab.id,
                            effect: event.effect,
                        });
                    }
                }
            }
        }
        fired
    }

    /// Schedules an effect on the active page at an absolute tick.
    pub fn schedule(&mut self, at_tick: u64, effect: Effect) -> Result<(), WebError> {
        self.active_page_mut()?.schedule(at_tick, effect);
        Ok(())
    }

    fn check_target(&self, node: NodeId, action: &PageAction) -> Result<(), WebError> {
        self.ensure_no_native_dialog()?;
        let page = self.active_page()?;
        let dom = page.node(node).ok_or(WebError::Detached(node))?;
        if !page.is_visible(node) {
            return Err(WebError::Detached(node));
        }
        if page.is_occluded(node) {
            return Err(WebError::ElementObscured {
                name: dom.name.clone(),
            });
        }
        if dom.states.contains(NodeStates::DISABLED) && !matches!(action, PageAction::Hover) {
            return Err(WebError::ElementDisabled {
                name: dom.name.clone(),
            });
        }
        Ok(())
    }

    fn not_interactive(page: &VirtualPage, node: NodeId, reason: impl Into<String>) -> WebError {
        WebError::NotInteractive {
            name: page.node(node).map(|n| n.name.clone()).unwrap_or_default(),
            reason: reason.into(),
        }
    }

    /// Applies an interaction to a node of the active page.
    pub fn apply_page_action(
        &mut self,
        node: NodeId,
        action: &PageAction,
    ) -> Result<MutationReport, WebError> {
        self.check_target(node, action)?;
        let tab_id = self.active.ok_or(WebError::NoActiveTab)?;
        let now = self.clock;
        let binding = self.active_page()?.node(node).map(|n| n.binding.clone());
        let binding = binding.ok_or(WebError::Detached(node))?;
        let page = self.active_page_mut()?;

        match action {
            PageAction::Click { right: true, .. } => Ok(MutationReport::touched([node])),
            PageAction::Click { .. } => match binding {
                Binding::None => Err(Self::not_interactive(page, node, "nothing happens on click")),
                Binding::Navigate { url } => self.navigate(&url),
                Binding::AddToCart { item } => {
                    self.cart.push(item);
                    let count = self.cart.len();
                    let page = self.active_page_mut()?;
                    let mut changed = vec![node];
                    if let Some(counter) = page.cart_counter {
                        page.apply_effect(&Effect::SetName(counter, format!("Cart items: {count}")), now);
                        changed.push(counter);
                    }
                    Ok(MutationReport::touched(changed))
                }
                Binding::Native(dialog) => {
                    self.pending_dialog = Some((tab_id, dialog));
                    Ok(MutationReport::touched([node]))
                }
                other => Ok(MutationReport::touched(click_binding(page, node, other, now))),
            },
            PageAction::Type { text, clear } => {
                if binding != Binding::TextInput {
                    return Err(Self::not_interactive(page, node, "element does not accept text"));
                }
                let dom = page.node_mut(node).ok_or(WebError::Detached(node))?;
                let mut value = if *clear {
                    String::new()
                } else {
                    dom.value.clone().unwrap_or_default()
                };
                value.push_str(text);
                dom.value = Some(value);
                page.focused = Some(node);
                Ok(MutationReport::touched([node]))
            }
            PageAction::Select { values } => match binding {
                Binding::Select { options } => {
                    if let Some(missing) = values.iter().find(|v| !options.contains(v)) {
                        return Err(Self::not_interactive(
                            page,
                            node,
                            format!("no option named '{missing}'"),
                        ));
                    }
                    let children = page.node(node).map(|n| n.children.clone()).unwrap_or_default();
                    for child in &children {
                        if let Some(opt) = page.node_mut(*child) {
                            let on = values.contains(&opt.name);
                            opt.states.set(NodeStates::SELECTED, on);
                        }
                    }
                    page.node_mut(node).ok_or(WebError::Detached(node))?.value = Some(values.join(", "));
                    page.focused = Some(node);
                    let mut changed = vec![node];
                    changed.extend(children);
                    Ok(MutationReport::touched(changed))
                }
                Binding::DropdownToggle { .. } => Err(Self::not_interactive(
                    page,
                    node,
                    "custom dropdown, not a native select; click it to open its options",
                )),
                _ => Err(Self::not_interactive(page, node, "element is not a select")),
            },
            PageAction::Upload { paths } => {
                if binding != Binding::FileInput {
                    return Err(Self::not_interactive(page, node, "element is not a file input"));
                }
                page.node_mut(node).ok_or(WebError::Detached(node))?.value = Some(paths.join(", "));
                Ok(MutationReport::touched([node]))
            }
            PageAction::Drag { target } => {
                let src_parent = page.node(node).and_then(|n| n.parent);
                let dst = page.node(*target).ok_or(WebError::Detached(*target))?;
                if binding != Binding::Draggable
                    || dst.binding != Binding::Draggable
                    || dst.parent != src_parent
                {
                    return Err(Self::not_interactive(
                        page,
                        node,
                        "drag needs two items of the same reorderable list",
                    ));
                }
                if page.is_occluded(*target) {
                    return Err(WebError::ElementObscured { name: dst.name.clone() });
                }
                let parent = src_parent.ok_or(WebError::Detached(node))?;
                let list = &mut page.node_mut(parent).ok_or(WebError::Detached(parent))?.children;
                let from = list.iter().position(|c| *c == node).ok_or(WebError::Detached(node))?;
                let moved = list.remove(from);
                let to = list.iter().position(|c| c == target).ok_or(WebError::Detached(*target))?;
                // Dropping onto a later item lands after it; onto an earlier one, before it.
                let at = if to >= from { to + 1 } else { to };
                list.insert(at, moved);
                Ok(MutationReport::touched([parent, node]))
            }
            PageAction::Pan { dx, dy } => {
                if binding != Binding::Scrollable {
                    return Err(Self::not_interactive(page, node, "element does not scroll"));
                }
                let dom = page.node_mut(node).ok_or(WebError::Detached(node))?;
                let (x, y) = dom
                    .value
                    .as_deref()
                    .and_then(|v| v.split_once(','))
                    .and_then(|(x, y)| Some((x.parse::<i64>().ok()?, y.parse::<i64>().ok()?)))
                    .unwrap_or((0, 0));
                dom.value = Some(format!("{},{}", x + dx, y + dy));
                Ok(MutationReport::touched([node]))
            }
            PageAction::Hover => {
                let mut changed = vec![node];
                if let Some(prev) = page.hovered.replace(node) {
                    if prev != node {
                        if let Some(Binding::HoverReveal { target }) =
                            page.node(prev).map(|n| n.binding.clone())
                        {
                            page.apply_effect(&Effect::Hide(target), now);
                            changed.push(target);
                        }
                    }
                }
                if let Binding::HoverReveal { target } = binding {
                    page.apply_effect(&Effect::Reveal(target), now);
                    changed.push(target);
                }
                Ok(MutationReport::touched(changed))
            }
            PageAction::Focus => {
                let focusable = page
                    .node(node)
                    .is_some_and(|n| n.states.contains(NodeStates::FOCUSABLE));
                if !focusable {
                    return Err(Self::not_interactive(page, node, "element cannot take focus"));
                }
                page.focused = Some(node);
                Ok(MutationReport::touched([node]))
            }
        }
        .map_err(|e| match e {
            WebError::NotInteractive { name, reason } => WebError::NotInteractive {
                name,
                reason: format!("{} failed: {reason}", action.verb()),
            },
            e => e,
        })
    }

    /// Moves the page viewport.
    pub fn pan_viewport(&mut self, dx: i64, dy: i64) -> Result<MutationReport, WebError> {
        self.ensure_no_native_dialog()?;
        let page = self.active_page_mut()?;
        page.viewport = (page.viewport.0 + dx, (page.viewport.1 + dy).max(0));
        Ok(MutationReport::touched([]))
    }

    pub fn press_key(&mut self, key: &str) -> Result<MutationReport, WebError> {
        if !is_supported_key(key) {
            return Err(WebError::UnsupportedKey(key.to_string()));
        }
        self.ensure_no_native_dialog()?;
        let page = self.active_page()?;
        let focused = page.focused.filter(|f| page.is_visible(*f));
        match key {
            "Tab" | "Shift+Tab" => {
                let order = page.focus_order();
                if order.is_empty() {
                    return Ok(MutationReport::touched([]));
                }
                let pos = focused.and_then(|f| order.iter().position(|o| *o == f));
                let next = match (key, pos) {
                    ("Tab", Some(p)) => order[(p + 1) % order.len()],
                    ("Tab", None) => order[0],
                    (_, Some(p)) => order[(p + order.len() - 1) % order.len()],
                    (_, None) => order[order.len() - 1],
                };
                self.active_page_mut()?.focused = Some(next);
                Ok(MutationReport::touched([next]))
            }
            "Enter" | "Space" => match focused {
                Some(f) => self.apply_page_action(f, &PageAction::Click { double: false, right: false }),
                None => Ok(MutationReport::touched([])),
            },
            "Escape" => {
                let page = self.active_page_mut()?;
                match page.open_dialogs.pop() {
                    Some(d) => {
                        page.apply_effect(&Effect::Hide(d), 0);
                        Ok(MutationReport::touched([d]))
                    }
                    None => Ok(MutationReport::touched([])),
                }
            }
            "Backspace" | "Delete" => {
                let Some(f) = focused else {
                    return Ok(MutationReport::touched([]));
                };
                let page = self.active_page_mut()?;
                let dom = page.node_mut(f).ok_or(WebError::Detached(f))?;
                if dom.binding == Binding::TextInput {
                    if let Some(v) = dom.value.as_mut() {
                        v.pop();
                    }
                }
                Ok(MutationReport::touched([f]))
            }
            "F5" => {
                let url = page.url.clone();
                let fresh = self.open_url(&url);
                self.active_tab_mut()?.page = fresh;
                Ok(MutationReport::touched([]))
            }
            k if SCROLL_KEYS.contains(&k) => {
                let (dx, dy) = match k {
                    "ArrowUp" => (0, -40),
                    "ArrowDown" => (0, 40),
                    "ArrowLeft" => (-40, 0),
                    "ArrowRight" => (40, 0),
                    "PageUp" => (0, -600),
                    "PageDown" => (0, 600),
                    "Home" => (0, -page.viewport.1),
                    _ => (0, 100_000),
                };
                self.pan_viewport(dx, dy)
            }
            chord => {
                let (_, letter) = parse_chord(chord).ok_or_else(|| WebError::UnsupportedKey(chord.into()))?;
                let Some(f) = focused else {
                    return Ok(MutationReport::touched([]));
                };
                match letter.to_ascii_lowercase() {
                    'c' => {
                        let page = self.active_page()?;
                        self.clipboard = page.node(f).and_then(|n| n.value.clone()).unwrap_or_default();
                        Ok(MutationReport::touched([]))
                    }
                    'v' => {
                        let clip = self.clipboard.clone();
                        let page = self.active_page_mut()?;
                        let dom = page.node_mut(f).ok_or(WebError::Detached(f))?;
                        if dom.binding == Binding::TextInput {
                            dom.value.get_or_insert_with(String::new).push_str(&clip);
                        }
                        Ok(MutationReport::touched([f]))
                    }
                    _ => Ok(MutationReport::touched([])),
                }
            }
        }
    }

    /// Accepts or dismisses the pending native dialog.
    pub fn handle_dialog(
        &mut self,
        accept: bool,
        prompt_text: Option<&str>,
    ) -> Result<MutationReport, WebError> {
        let (tab_id, dialog) = self.pending_dialog.take().ok_or(WebError::NoDialogPending)?;
        let now = self.clock;
        let Ok(i) = self.tab_index(tab_id) else {
            return Ok(MutationReport::touched([]));
        };
        let page = &mut self.tabs[i].page;
        let mut changed = Vec::new();
        let effects = if accept { &dialog.on_accept } else { &dialog.on_dismiss };
        for e in effects {
            changed.extend(page.apply_effect(e, now));
        }
        if let (true, Some(target), Some(text)) = (accept, dialog.prompt_target, prompt_text) {
            changed.extend(page.apply_effect(&Effect::SetValue(target, text.to_string()), now));
        }
        Ok(MutationReport::touched(changed))
    }

    /// Page-state fingerprint of every tab plus session-level state.
    pub fn state_digest(&self) -> String {
        let mut out = String::new();
        for tab in &self.tabs {
            out.push_str(&format!("tab {}{}\n", tab.id, if self.active == Some(tab.id) { " active" } else { "" }));
            out.push_str(&tab.page.state_digest());
        }
        for item in &self.cart {
            out.push_str(&format!("cart {item}\n"));
        }
        if let Some((tab, d)) = &self.pending_dialog {
            out.push_str(&format!("dialog {tab} {:?} {}\n", d.kind, d.message));
        }
        out
    }
}

/// Operations the executor needs from a browser. `BrowserSession` is the only
/// implementation; a DevTools-backed client would implement the same surface.
pub trait BrowserBackend {
    fn clock(&self) -> u64;
    fn tabs(&self) -> &[Tab];
    fn active_tab_id(&self) -> Option<TabId>;
    /// Accessibility tree of the active page, `None` without an active tab.
    fn accessibility_tree(&self, print_view: bool) -> Option<PageNode>;
    fn create_tab(&mut self, url: Option<&str>) -> TabId;
    fn switch_tab(&mut self, id: TabId) -> Result<(), WebError>;
    fn close_tab(&mut self, id: TabId) -> Result<(), WebError>;
    fn navigate(&mut self, url: &str) -> Result<MutationReport, WebError>;
    fn navigate_back(&mut self) -> Result<MutationReport, WebError>;
    fn apply_page_action(&mut self, node: NodeId, action: &PageAction) -> Result<MutationReport, WebError>;
    fn pan_viewport(&mut self, dx: i64, dy: i64) -> Result<MutationReport, WebError>;
    fn press_key(&mut self, key: &str) -> Result<MutationReport, WebError>;
    fn handle_dialog(&mut self, accept: bool, prompt_text: Option<&str>) -> Result<MutationReport, WebError>;
    fn advance_clock(&mut self, ticks: u64) -> Vec<FiredEvent>;
}

impl BrowserBackend for BrowserSession {
    fn clock(&self) -> u64 {
        BrowserSession::clock(self)
    }
    fn tabs(&self) -> &[Tab] {
        BrowserSession::tabs(self)
    }
    fn active_tab_id(&self) -> Option<TabId> {
        BrowserSession::active_tab_id(self)
    }
    fn accessibility_tree(&self, print_view: bool) -> Option<PageNode> {
        self.active_page().ok()?.accessibility_tree(print_view)
    }
    fn create_tab(&mut self, url: Option<&str>) -> TabId {
        BrowserSession::create_tab(self, url)
    }
    fn switch_tab(&mut self, id: TabId) -> Result<(), WebError> {
        BrowserSession::switch_tab(self, id)
    }
    fn close_tab(&mut self, id: TabId) -> Result<(), WebError> {
        BrowserSession::close_tab(self, id)
    }
    fn navigate(&mut self, url: &str) -> Result<MutationReport, WebError> {
        BrowserSession::navigate(self, url)
    }
    fn navigate_back(&mut self) -> Result<MutationReport, WebError> {
        BrowserSession::navigate_back(self)
    }
    fn apply_page_action(&mut self, node: NodeId, action: &PageAction) -> Result<MutationReport, WebError> {
        BrowserSession::apply_page_action(self, node, action)
    }
    fn pan_viewport(&mut self, dx: i64, dy: i64) -> Result<MutationReport, WebError> {
        BrowserSession::pan_viewport(self, dx, dy)
    }
    fn press_key(&mut self, key: &str) -> Result<MutationReport, WebError> {
        BrowserSession::press_key(self, key)
    }
    fn handle_dialog(&mut self, accept: bool, prompt_text: Option<&str>) -> Result<MutationReport, WebError> {
        BrowserSession::handle_dialog(self, accept, prompt_text)
    }
    fn advance_clock(&mut self, ticks: u64) -> Vec<FiredEvent> {
        BrowserSession::advance_clock(self, ticks)
    }
}

/// Click semantics for bindings that only touch the page itself.
fn click_binding(page: &mut VirtualPage, node: NodeId, binding: Binding, now: u64) -> Vec<NodeId> {
    let focusable = page
        .node(node)
        .is_some_and(|n| n.states.contains(NodeStates::FOCUSABLE));
    if focusable {
        page.focused = Some(node);
    }
    match binding {
        Binding::Checkbox => {
            if let Some(n) = page.node_mut(node) {
                let on = !n.states.contains(NodeStates::CHECKED);
                n.states.set(NodeStates::CHECKED, on);
            }
            vec![node]
        }
        Binding::Radio { group } => {
            let members: Vec<NodeId> = page
                .nodes()
                .filter(|n| matches!(&n.binding, Binding::Radio { group: g } if *g == group))
                .map(|n| n.id)
                .collect();
            for m in &members {
                if let Some(n) = page.node_mut(*m) {
                    n.states.set(NodeStates::CHECKED, *m == node);
                }
            }
            members
        }
        Binding::DropdownToggle { listbox } => {
            let hidden = page.node(listbox).is_some_and(|n| n.hidden);
            let effect = if hidden { Effect::Reveal(listbox) } else { Effect::Hide(listbox) };
            page.apply_effect(&effect, now);
            vec![node, listbox]
        }
        Binding::DropdownOption { dropdown, listbox } => {
            let choice = page.node(node).map(|n| n.name.clone()).unwrap_or_default();
            page.apply_effect(&Effect::SetValue(dropdown, choice), now);
            page.apply_effect(&Effect::Hide(listbox), now);
            page.focused = Some(dropdown);
            vec![dropdown, listbox]
        }
        Binding::OpenDialog { dialog } => {
            page.apply_effect(&Effect::Reveal(dialog), now);
            page.open_dialogs.retain(|d| *d != dialog);
            page.open_dialogs.push(dialog);
            vec![dialog]
        }
        Binding::CloseDialog { dialog } => {
            page.apply_effect(&Effect::Hide(dialog), now);
            page.open_dialogs.retain(|d| *d != dialog);
            if page.focused.is_some_and(|f| !page.is_visible(f)) {
                page.focused = None;
            }
            vec![dialog]
        }
        Binding::Effects(effects) => effects
            .iter()
            .filter_map(|e| page.apply_effect(e, now))
            .chain([node])
            .collect(),
        Binding::SaveNote { source, counter } => {
            let note = page.node(source).and_then(|n| n.value.clone()).unwrap_or_default();
            page.notes.push(note);
            let count = page.notes.len();
            page.apply_effect(&Effect::SetValue(source, String::new()), now);
            page.apply_effect(&Effect::SetName(counter, format!("Saved notes: {count:03}")), now);
            vec![source, counter]
        }
        Binding::HoverReveal { target } => {
            page.apply_effect(&Effect::Reveal(target), now);
            page.hovered = Some(node);
            vec![node, target]
        }
        // Focus only.
        Binding::TextInput
        | Binding::Select { .. }
        | Binding::FileInput
        | Binding::Draggable
        | Binding::Scrollable => vec![node],
        Binding::None | Binding::Navigate { .. } | Binding::AddToCart { .. } | Binding::Native(_) => {
            unreachable!("handled by the session")
        }
    }
}

/// Convenience lookup for the first node with this role and exact name.
pub fn find_node(page: &VirtualPage, role: NodeRole, name: &str) -> Option<NodeId> {
    page.find_by_name(role, name)
}

#[cfg(test)]
mod tests;
