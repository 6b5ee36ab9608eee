use serde::{Deserialize, Serialize};

use crate::snapshot::{NodeId, NodeRole, NodeStates, PageNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NativeDialogKind {
    Alert,
    Confirm,
    Prompt,
}

/// A browser-native dialog. While one is pending no page action runs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NativeDialog {
    pub kind: NativeDialogKind,
    pub message: String,
    pub on_accept: Vec<Effect>,
    pub on_dismiss: Vec<Effect>,
    /// Receives the prompt text on accept.
    pub prompt_target: Option<NodeId>,
}

/// Page mutations, applied immediately or from the schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    Reveal(NodeId),
    Hide(NodeId),
    SetName(NodeId, String),
    SetValue(NodeId, String),
    After { ticks: u64, effect: Box<Effect> },
}

/// What a node does when the agent interacts with it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Binding {
    #[default]
    None,
    TextInput,
    Checkbox,
    Radio {
        group: String,
    },
    /// Native `<select>`; options are rendered as children.
    Select {
        options: Vec<String>,
    },
    /// Custom dropdown: a button that toggles a listbox of options.
    DropdownToggle {
        listbox: NodeId,
    },
    DropdownOption {
        dropdown: NodeId,
        listbox: NodeId,
    },
    Navigate {
        url: String,
    },
    OpenDialog {
        dialog: NodeId,
    },
    CloseDialog {
        dialog: NodeId,
    },
    AddToCart {
        item: String,
    },
    Native(NativeDialog),
    Effects(Vec<Effect>),
    /// Item of a reorderable list.
    Draggable,
    Scrollable,
    HoverReveal {
        target: NodeId,
    },
    FileInput,
    /// Stores the source textbox's value as a note and bumps a counter node.
    SaveNote {
        source: NodeId,
        counter: NodeId,
    },
}

impl Binding {
    pub fn is_none(&self) -> bool {
        matches!(self, Binding::None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub id: NodeId,
    pub role: NodeRole,
    pub name: String,
    pub description: Option<String>,
    pub level: Option<u32>,
    pub value: Option<String>,
    /// Static flags (focusable, required, disabled, checked, selected).
    pub states: NodeStates,
    pub hidden: bool,
    /// Dropped from the print media view.
    pub print_hidden: bool,
    pub binding: Binding,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadState {
    Loading,
    Ready,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledEvent {
    pub at: u64,
    pub seq: u64,
    pub effect: Effect,
}

/// Deterministic page state: a DOM arena plus dialog, focus and schedule state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualPage {
    pub page_id: u64,
    pub url: String,
    pub(crate) nodes: Vec<DomNode>,
    pub open_dialogs: Vec<NodeId>,
    pub load_state: LoadState,
    pub(crate) scheduled: Vec<ScheduledEvent>,
    pub(crate) next_seq: u64,
    pub focused: Option<NodeId>,
    pub viewport: (i64, i64),
    pub hovered: Option<NodeId>,
    pub notes: Vec<String>,
    pub(crate) cart_counter: Option<NodeId>,
}

impl VirtualPage {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn node(&self, id: NodeId) -> Option<&DomNode> {
        self.nodes.get(id.0 as usize)
    }

    pub(crate) fn node_mut(&mut self, id: NodeId) -> Option<&mut DomNode> {
        self.nodes.get_mut(id.0 as usize)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &DomNode> {
        self.nodes.iter()
    }

    pub fn find_by_name(&self, role: NodeRole, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .find(|n| n.role == role && n.name == name)
            .map(|n| n.id)
    }

    pub fn scheduled_events(&self) -> &[ScheduledEvent] {
        &self.scheduled
    }

    pub fn is_visible(&self, id: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            match self.node(c) {
                Some(n) if !n.hidden => cur = n.parent,
                _ => return false,
            }
        }
        true
    }

    fn is_within(&self, id: NodeId, ancestor: NodeId) -> bool {
        let mut cur = Some(id);
        while let Some(c) = cur {
            if c == ancestor {
                return true;
            }
            cur = self.node(c).and_then(|n| n.parent);
        }
        false
    }

    /// True when an open dialog covers this node.
    pub fn is_occluded(&self, id: NodeId) -> bool {
        match self.open_dialogs.last() {
            None => false,
            Some(&top) => !self.is_within(id, top) && !self.is_within(top, id),
        }
    }

    fn effective_states(&self, node: &DomNode) -> NodeStates {
        let mut states = node.states;
        states.set(NodeStates::FOCUSED, self.focused == Some(node.id));
        if self.is_occluded(node.id) {
            states.insert(NodeStates::OCCLUDED);
        }
        states
    }

    /// The page tree as an accessibility backend would expose it.
    pub fn accessibility_tree(&self, print_view: bool) -> Option<PageNode> {
        self.tree_from(self.root(), print_view)
    }

    fn tree_from(&self, id: NodeId, print_view: bool) -> Option<PageNode> {
        let node = self.node(id)?;
        if node.hidden || (print_view && node.print_hidden) {
            return None;
        }
        Some(PageNode {
            node_id: node.id,
            role: node.role,
            name: node.name.clone(),
            description: node.description.clone(),
            states: self.effective_states(node),
            level: node.level,
            value: node.value.clone(),
            children: node
                .children
                .iter()
                .filter_map(|&c| self.tree_from(c, print_view))
                .collect(),
        })
    }

    /// Whether any visible node's text contains `needle`.
    pub fn contains_text(&self, needle: &str) -> bool {
        self.nodes.iter().any(|n| {
            self.is_visible(n.id)
                && (n.name.contains(needle)
                    || n.description.as_deref().is_some_and(|d| d.contains(needle))
                    || n.value.as_deref().is_some_and(|v| v.contains(needle)))
        })
    }

    /// Focusable, visible, unoccluded nodes in document order.
    pub fn focus_order(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            let Some(n) = self.node(id) else { continue };
            if n.hidden {
                continue;
            }
            if n.states.contains(NodeStates::FOCUSABLE)
                && !n.states.contains(NodeStates::DISABLED)
                && !self.is_occluded(id)
            {
                out.push(id);
            }
            stack.extend(n.children.iter().rev().copied());
        }
        out
    }

    pub(crate) fn schedule(&mut self, at: u64, effect: Effect) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.scheduled.push(ScheduledEvent { at, seq, effect });
    }

    /// Applies an effect; returns the touched node, if any.
    pub(crate) fn apply_effect(&mut self, effect: &Effect, now: u64) -> Option<NodeId> {
        match effect {
            Effect::Reveal(id) => {
                self.node_mut(*id)?.hidden = false;
                Some(*id)
            }
            Effect::Hide(id) => {
                self.node_mut(*id)?.hidden = true;
                Some(*id)
            }
            Effect::SetName(id, name) => {
                self.node_mut(*id)?.name = name.clone();
                Some(*id)
            }
            Effect::SetValue(id, value) => {
                self.node_mut(*id)?.value = Some(value.clone());
                Some(*id)
            }
            Effect::After { ticks, effect } => {
                self.schedule(now + ticks, (**effect).clone());
                None
            }
        }
    }

    /// Removes and returns events due at or before `tick`, in firing order.
    pub(crate) fn take_due(&mut self, tick: u64) -> Vec<ScheduledEvent> {
        let (mut due, rest): (Vec<_>, Vec<_>) =
            self.scheduled.drain(..).partition(|e| e.at <= tick);
        self.scheduled = rest;
        due.sort_by_key(|e| (e.at, e.seq));
        due
    }

    /// Canonical text of the page state, independent of snapshot versions.
    pub fn state_digest(&self) -> String {
        let mut out = format!("url {}\n", self.url);
        if let Some(tree) = self.accessibility_tree(false) {
            let snap = crate::snapshot::build_snapshot(Some(&tree), 0)
                .expect("tree is non-empty");
            out.push_str(crate::snapshot::serialize_snapshot(&snap, usize::MAX).as_str());
        }
        for note in &self.notes {
            out.push_str(&format!("note {note}\n"));
        }
        out
    }
}

/// Incremental DOM construction used by the templates.
#[derive(Debug)]
pub struct DomBuilder {
    nodes: Vec<DomNode>,
}

impl DomBuilder {
    pub fn new(root_role: NodeRole, root_name: impl Into<String>) -> Self {
        DomBuilder {
            nodes: vec![DomNode {
                id: NodeId(0),
                role: root_role,
                name: root_name.into(),
                description: None,
                level: None,
                value: None,
                states: NodeStates::empty(),
                hidden: false,
                print_hidden: false,
                binding: Binding::None,
                parent: None,
                children: Vec::new(),
            }],
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn add(&mut self, parent: NodeId, role: NodeRole, name: impl Into<String>) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let states = if role.is_interactive() {
            NodeStates::FOCUSABLE
        } else {
            NodeStates::empty()
        };
        self.nodes.push(DomNode {
            id,
            role,
            name: name.into(),
            description: None,
            level: None,
            value: None,
            states,
            hidden: false,
            print_hidden: false,
            binding: Binding::None,
            parent: Some(parent),
            children: Vec::new(),
        });
        self.nodes[parent.0 as usize].children.push(id);
        id
    }

    pub fn node(&mut self, id: NodeId) -> &mut DomNode {
        &mut self.nodes[id.0 as usize]
    }

    pub fn bind(&mut self, id: NodeId, binding: Binding) {
        self.node(id).binding = binding;
    }

    pub fn finish(self, page_id: u64, url: impl Into<String>) -> VirtualPage {
        VirtualPage {
            page_id,
            url: url.into(),
            nodes: self.nodes,
            open_dialogs: Vec::new(),
            load_state: LoadState::Ready,
            scheduled: Vec::new(),
            next_seq: 0,
            focused: None,
            viewport: (0, 0),
            hovered: None,
            notes: Vec::new(),
            cart_counter: None,
        }
    }
}
