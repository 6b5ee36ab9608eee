//! Accessibility snapshots: semantic page trees with versioned element refs.
//!
//! A snapshot is an immutable, pre-order flattening of a page's accessibility
//! tree. Every node receives a ref (`1..=N` in depth-first pre-order) and every
//! snapshot carries a session-wide version, so an agent addresses elements as
//! `version:ref` pairs. A pair is only honored against its own generation.

mod filter;
mod text;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use filter::{filter_snapshot, FilterRule, MatchKind};
pub use text::{
    extract_range, parse_line, parse_marker, render_line, render_marker, serialize_snapshot,
    serialize_subtree, ParsedLine, SnapshotText, MIN_MAX_CHARS,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SnapshotError {
    #[error("page tree has no nodes")]
    EmptyTree,
    #[error("stale ref: snapshot is at version {expected}, ref names version {got}")]
    StaleRef { expected: u64, got: u64 },
    #[error("ref {ref_id} does not exist in snapshot version {version}")]
    UnknownRef { version: u64, ref_id: u32 },
    #[error("no refs fall inside {start}-{end}")]
    EmptyRange { start: u32, end: u32 },
    #[error("malformed snapshot line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Closed set of semantic roles the kernel understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Button,
    Link,
    Textbox,
    Checkbox,
    Radio,
    Combobox,
    Listbox,
    Option,
    Heading,
    Dialog,
    List,
    Listitem,
    Image,
    Generic,
    Text,
}

impl NodeRole {
    pub const ALL: [NodeRole; 15] = [
        NodeRole::Button,
        NodeRole::Link,
        NodeRole::Textbox,
        NodeRole::Checkbox,
        NodeRole::Radio,
        NodeRole::Combobox,
        NodeRole::Listbox,
        NodeRole::Option,
        NodeRole::Heading,
        NodeRole::Dialog,
        NodeRole::List,
        NodeRole::Listitem,
        NodeRole::Image,
        NodeRole::Generic,
        NodeRole::Text,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NodeRole::Button => "button",
            NodeRole::Link => "link",
            NodeRole::Textbox => "textbox",
            NodeRole::Checkbox => "checkbox",
            NodeRole::Radio => "radio",
            NodeRole::Combobox => "combobox",
            NodeRole::Listbox => "listbox",
            NodeRole::Option => "option",
            NodeRole::Heading => "heading",
            NodeRole::Dialog => "dialog",
            NodeRole::List => "list",
            NodeRole::Listitem => "listitem",
            NodeRole::Image => "image",
            NodeRole::Generic => "generic",
            NodeRole::Text => "text",
        }
    }

    pub fn is_interactive(self) -> bool {
        matches!(
            self,
            NodeRole::Button
                | NodeRole::Link
                | NodeRole::Textbox
                | NodeRole::Checkbox
                | NodeRole::Radio
                | NodeRole::Combobox
                | NodeRole::Listbox
                | NodeRole::Option
        )
    }

    /// Roles that hold user-entered data.
    pub fn is_form_control(self) -> bool {
        matches!(
            self,
            NodeRole::Textbox
                | NodeRole::Checkbox
                | NodeRole::Radio
                | NodeRole::Combobox
                | NodeRole::Listbox
                | NodeRole::Option
        )
    }
}

impl fmt::Display for NodeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeRole {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "generic-container" {
            return Ok(NodeRole::Generic);
        }
        NodeRole::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| format!("unknown role `{s}`"))
    }
}

/// State flags, rendered as bare words in this fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct NodeStates(u8);

impl NodeStates {
    pub const FOCUSABLE: NodeStates = NodeStates(1);
    pub const FOCUSED: NodeStates = NodeStates(1 << 1);
    pub const REQUIRED: NodeStates = NodeStates(1 << 2);
    pub const DISABLED: NodeStates = NodeStates(1 << 3);
    pub const CHECKED: NodeStates = NodeStates(1 << 4);
    pub const SELECTED: NodeStates = NodeStates(1 << 5);
    pub const OCCLUDED: NodeStates = NodeStates(1 << 6);

    const NAMES: [(NodeStates, &'static str); 7] = [
        (Self::FOCUSABLE, "focusable"),
        (Self::FOCUSED, "focused"),
        (Self::REQUIRED, "required"),
        (Self::DISABLED, "disabled"),
        (Self::CHECKED, "checked"),
        (Self::SELECTED, "selected"),
        (Self::OCCLUDED, "occluded"),
    ];

    pub const fn empty() -> Self {
        NodeStates(0)
    }

    pub fn contains(self, other: NodeStates) -> bool {
        self.0 & other.0 == other.0
    }

    pub fn insert(&mut self, other: NodeStates) {
        self.0 |= other.0;
    }

    pub fn remove(&mut self, other: NodeStates) {
        self.0 &= !other.0;
    }

    pub fn set(&mut self, other: NodeStates, on: bool) {
        if on {
            self.insert(other)
        } else {
            self.remove(other)
        }
    }

    pub fn with(mut self, other: NodeStates) -> Self {
        self.insert(other);
        self
    }

    /// Flag words in rendering order.
    pub fn words(self) -> impl Iterator<Item = &'static str> {
        Self::NAMES
            .into_iter()
            .filter(move |(flag, _)| self.contains(*flag))
            .map(|(_, name)| name)
    }

    pub fn from_word(word: &str) -> Option<NodeStates> {
        Self::NAMES
            .iter()
            .find(|(_, name)| *name == word)
            .map(|(flag, _)| *flag)
    }
}

impl std::ops::BitOr for NodeStates {
    type Output = NodeStates;

    fn bitor(self, rhs: Self) -> Self::Output {
        NodeStates(self.0 | rhs.0)
    }
}

impl Serialize for NodeStates {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.words())
    }
}

impl<'de> Deserialize<'de> for NodeStates {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let words = Vec::<String>::deserialize(deserializer)?;
        let mut states = NodeStates::empty();
        for w in words {
            let flag = NodeStates::from_word(&w)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown state `{w}`")))?;
            states.insert(flag);
        }
        Ok(states)
    }
}

/// Identifier of a node inside one page's DOM arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// A page tree as produced by a backend, before refs are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageNode {
    pub node_id: NodeId,
    pub role: NodeRole,
    pub name: String,
    pub description: Option<String>,
    pub states: NodeStates,
    pub level: Option<u32>,
    pub value: Option<String>,
    pub children: Vec<PageNode>,
}

impl PageNode {
    pub fn new(node_id: u32, role: NodeRole, name: impl Into<String>) -> Self {
        PageNode {
            node_id: NodeId(node_id),
            role,
            name: name.into(),
            description: None,
            states: NodeStates::empty(),
            level: None,
            value: None,
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<PageNode>) -> Self {
        self.children = children;
        self
    }

    pub fn with_states(mut self, states: NodeStates) -> Self {
        self.states = states;
        self
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = Some(d.into());
        self
    }

    pub fn with_level(mut self, level: u32) -> Self {
        self.level = Some(level);
        self
    }

    pub fn with_value(mut self, v: impl Into<String>) -> Self {
        self.value = Some(v.into());
        self
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(PageNode::node_count).sum::<usize>()
    }
}

/// One node of a built snapshot. Children are referenced by ref.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessibilityNode {
    pub ref_id: u32,
    pub node_id: NodeId,
    pub role: NodeRole,
    pub name: String,
    pub description: Option<String>,
    pub states: NodeStates,
    pub level: Option<u32>,
    pub value: Option<String>,
    pub depth: u32,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
}

/// An immutable, versioned snapshot of one page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessibilitySnapshot {
    version: u64,
    nodes: Vec<AccessibilityNode>,
    index: BTreeMap<u32, usize>,
    origin_url: String,
    built_at_tick: u64,
    page_id: u64,
}

impl AccessibilitySnapshot {
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn origin_url(&self) -> &str {
        &self.origin_url
    }

    pub fn built_at_tick(&self) -> u64 {
        self.built_at_tick
    }

    /// Backend page instance the snapshot was taken from.
    pub fn page_id(&self) -> u64 {
        self.page_id
    }

    pub fn with_origin(mut self, url: impl Into<String>, tick: u64, page_id: u64) -> Self {
        self.origin_url = url.into();
        self.built_at_tick = tick;
        self.page_id = page_id;
        self
    }

    pub fn root(&self) -> &AccessibilityNode {
        &self.nodes[0]
    }

    pub fn get(&self, ref_id: u32) -> Option<&AccessibilityNode> {
        self.index.get(&ref_id).map(|&i| &self.nodes[i])
    }

    /// Nodes in pre-order (ascending ref).
    pub fn nodes(&self) -> &[AccessibilityNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn refs(&self) -> impl Iterator<Item = u32> + '_ {
        self.index.keys().copied()
    }

    pub fn max_ref(&self) -> u32 {
        self.index.keys().next_back().copied().unwrap_or(0)
    }

    /// The node's ref followed by all descendant refs, in pre-order.
    pub fn subtree_refs(&self, ref_id: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack = vec![ref_id];
        while let Some(r) = stack.pop() {
            if let Some(node) = self.get(r) {
                out.push(r);
                stack.extend(node.children.iter().rev().copied());
            }
        }
        out
    }

    pub fn find_by_node_id(&self, node_id: NodeId) -> Option<&AccessibilityNode> {
        self.nodes.iter().find(|n| n.node_id == node_id)
    }

    pub(crate) fn from_parts(
        version: u64,
        nodes: Vec<AccessibilityNode>,
        origin_url: String,
        built_at_tick: u64,
        page_id: u64,
    ) -> Self {
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.ref_id, i))
            .collect();
        AccessibilitySnapshot {
            version,
            nodes,
            index,
            origin_url,
            built_at_tick,
            page_id,
        }
    }
}

/// A `version:ref` pair, rendered as e.g. `1:10`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VersionedRef {
    pub version: u64,
    pub ref_id: u32,
}

impl VersionedRef {
    pub fn new(version: u64, ref_id: u32) -> Self {
        VersionedRef { version, ref_id }
    }
}

impl fmt::Display for VersionedRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.version, self.ref_id)
    }
}

impl FromStr for VersionedRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (v, r) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `version:ref`, got `{s}`"))?;
        let version = v
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("bad version in `{s}`: {e}"))?;
        let ref_id = r
            .trim()
            .parse::<u32>()
            .map_err(|e| format!("bad ref in `{s}`: {e}"))?;
        if version == 0 || ref_id == 0 {
            return Err(format!("version and ref must be positive in `{s}`"));
        }
        Ok(VersionedRef { version, ref_id })
    }
}

impl Serialize for VersionedRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for VersionedRef {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Assigns refs `1..=N` in depth-first pre-order and stamps version
/// `previous_version + 1`.
pub fn build_snapshot(
    tree: Option<&PageNode>,
    previous_version: u64,
) -> Result<AccessibilitySnapshot, SnapshotError> {
    let root = tree.ok_or(SnapshotError::EmptyTree)?;
    let mut nodes: Vec<AccessibilityNode> = Vec::with_capacity(root.node_count());
    // (node, parent ref, depth); explicit stack keeps deep trees off the call stack.
    let mut stack: Vec<(&PageNode, Option<u32>, u32)> = vec![(root, None, 0)];
    while let Some((page, parent, depth)) = stack.pop() {
        let ref_id = nodes.len() as u32 + 1;
        if let Some(p) = parent {
            nodes[p as usize - 1].children.push(ref_id);
        }
        nodes.push(AccessibilityNode {
            ref_id,
            node_id: page.node_id,
            role: page.role,
            name: page.name.clone(),
            description: page.description.clone(),
            states: page.states,
            level: page.level,
            value: page.value.clone(),
            depth,
            parent,
            children: Vec::with_capacity(page.children.len()),
        });
        for child in page.children.iter().rev() {
            stack.push((child, Some(ref_id), depth + 1));
        }
    }
    Ok(AccessibilitySnapshot::from_parts(
        previous_version + 1,
        nodes,
        String::new(),
        0,
        0,
    ))
}

/// Returns the node iff the ref names this snapshot's generation and exists.
pub fn resolve_ref(
    snapshot: &AccessibilitySnapshot,
    target: VersionedRef,
) -> Result<&AccessibilityNode, SnapshotError> {
    if target.version != snapshot.version {
        return Err(SnapshotError::StaleRef {
            expected: snapshot.version,
            got: target.version,
        });
    }
    snapshot.get(target.ref_id).ok_or(SnapshotError::UnknownRef {
        version: snapshot.version,
        ref_id: target.ref_id,
    })
}
