use serde::{Deserialize, Serialize};

use super::{AccessibilityNode, AccessibilitySnapshot, NodeRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    NameContains,
    RoleEquals,
}

/// Removes every matching node together with its subtree.
///
/// `name-contains` compares case-insensitively against the node's name,
/// description and value, so no surviving text field can carry the pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRule {
    #[serde(rename = "match")]
    pub match_kind: MatchKind,
    pub pattern: String,
}

impl FilterRule {
    pub fn name_contains(pattern: impl Into<String>) -> Self {
        FilterRule {
            match_kind: MatchKind::NameContains,
            pattern: pattern.into(),
        }
    }

    pub fn role_equals(role: NodeRole) -> Self {
        FilterRule {
            match_kind: MatchKind::RoleEquals,
            pattern: role.as_str().to_string(),
        }
    }

    pub fn matches(&self, node: &AccessibilityNode) -> bool {
        self.matches_fields(
            node.role,
            &node.name,
            node.description.as_deref(),
            node.value.as_deref(),
        )
    }

    pub fn matches_fields(
        &self,
        role: NodeRole,
        name: &str,
        description: Option<&str>,
        value: Option<&str>,
    ) -> bool {
        match self.match_kind {
            MatchKind::RoleEquals => role
                .as_str()
                .eq_ignore_ascii_case(self.pattern.trim()),
            MatchKind::NameContains => {
                let needle = self.pattern.to_lowercase();
                if needle.is_empty() {
                    return false;
                }
                [Some(name), description, value]
                    .into_iter()
                    .flatten()
                    .any(|text| text.to_lowercase().contains(&needle))
            }
        }
    }
}

/// Returns a copy of the snapshot without matched subtrees. Surviving nodes
/// keep their refs and the version is unchanged. If the root itself matches,
/// the result holds an empty placeholder root.
pub fn filter_snapshot(snapshot: &AccessibilitySnapshot, rules: &[FilterRule]) -> AccessibilitySnapshot {
    if rules.is_empty() {
        return snapshot.clone();
    }
    let mut nodes: Vec<AccessibilityNode> = Vec::with_capacity(snapshot.len());
    let mut removed_below_depth: Option<u32> = None;
    for node in snapshot.nodes() {
        if let Some(depth) = removed_below_depth {
            if node.depth > depth {
                continue;
            }
            removed_below_depth = None;
        }
        if rules.iter().any(|r| r.matches(node)) {
            removed_below_depth = Some(node.depth);
            if node.parent.is_none() {
                nodes.push(AccessibilityNode {
                    ref_id: node.ref_id,
                    node_id: node.node_id,
                    role: NodeRole::Generic,
                    name: String::new(),
                    description: None,
                    states: Default::default(),
                    level: None,
                    value: None,
                    depth: 0,
                    parent: None,
                    children: Vec::new(),
                });
            }
            continue;
        }
        nodes.push(node.clone());
    }
    let kept: std::collections::BTreeSet<u32> = nodes.iter().map(|n| n.ref_id).collect();
    for node in &mut nodes {
        node.children.retain(|c| kept.contains(c));
    }
    AccessibilitySnapshot::from_parts(
        snapshot.version(),
        nodes,
        snapshot.origin_url().to_string(),
        snapshot.built_at_tick(),
        snapshot.page_id(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{build_snapshot, serialize_snapshot, PageNode};

    fn page_with_messaging() -> PageNode {
        let mut id = 100;
        let mut next = || {
            id += 1;
            id
        };
        let mut panel = PageNode::new(next(), NodeRole::Generic, "Messaging");
        for i in 0..13 {
            panel.children.push(
                PageNode::new(next(), NodeRole::Listitem, format!("Thread {i}")).with_children(vec![
                    PageNode::new(next(), NodeRole::Text, format!("secret note {i}")),
                    PageNode::new(next(), NodeRole::Button, "Reply"),
                ]),
            );
        }
        // 1 + 13 * 3 = 40 nodes in the panel
        PageNode::new(1, NodeRole::Generic, "Profile").with_children(vec![
            PageNode::new(2, NodeRole::Heading, "Jane Roe").with_level(1),
            panel,
            PageNode::new(3, NodeRole::Button, "Connect"),
        ])
    }

    fn brute_subtree_size(node: &PageNode, pred: &dyn Fn(&PageNode) -> bool) -> usize {
        if pred(node) {
            node.node_count()
        } else {
            node.children.iter().map(|c| brute_subtree_size(c, pred)).sum()
        }
    }

    #[test]
    fn messaging_panel_is_removed() {
        let tree = page_with_messaging();
        let snap = build_snapshot(Some(&tree), 0).unwrap();
        let filtered = filter_snapshot(&snap, &[FilterRule::name_contains("Messaging")]);
        assert_eq!(snap.len() - filtered.len(), 40);
        assert_eq!(filtered.version(), snap.version());
        let text = serialize_snapshot(&filtered, 50_000);
        assert!(!text.as_str().contains("Messaging"));
        assert!(!text.as_str().contains("secret"));
        // surviving refs are unchanged
        assert_eq!(filtered.get(43).unwrap().name, "Connect");
        assert_eq!(filtered.root().children, vec![2, 43]);
    }

    #[test]
    fn no_rules_is_identity() {
        let snap = build_snapshot(Some(&page_with_messaging()), 0).unwrap();
        let filtered = filter_snapshot(&snap, &[]);
        assert_eq!(
            serialize_snapshot(&filtered, 50_000),
            serialize_snapshot(&snap, 50_000)
        );
    }

    #[test]
    fn dialog_role_filter_matches_subtree_oracle() {
        let dialog = |base: u32| {
            PageNode::new(base, NodeRole::Dialog, "Confirm").with_children(vec![
                PageNode::new(base + 1, NodeRole::Text, "Are you sure?"),
                PageNode::new(base + 2, NodeRole::Button, "Yes"),
            ])
        };
        let tree = PageNode::new(0, NodeRole::Generic, "app").with_children(vec![
            PageNode::new(1, NodeRole::Button, "Open"),
            dialog(10),
            PageNode::new(2, NodeRole::List, "x")
                .with_children(vec![PageNode::new(3, NodeRole::Listitem, "y"), dialog(20)]),
        ]);
        let snap = build_snapshot(Some(&tree), 0).unwrap();
        let filtered = filter_snapshot(&snap, &[FilterRule::role_equals(NodeRole::Dialog)]);
        let oracle = brute_subtree_size(&tree, &|n| n.role == NodeRole::Dialog);
        assert_eq!(oracle, 6);
        assert_eq!(snap.len() - filtered.len(), oracle);
    }

    #[test]
    fn filtering_root_leaves_placeholder() {
        let snap = build_snapshot(Some(&page_with_messaging()), 0).unwrap();
        let filtered = filter_snapshot(&snap, &[FilterRule::name_contains("profile")]);
        assert_eq!(filtered.len(), 1);
        assert_eq!(
            serialize_snapshot(&filtered, 50_000).as_str(),
            "ref=1 generic \"\"\n"
        );
    }

    #[test]
    fn rule_json_shape() {
        let rule: FilterRule =
            serde_json::from_str(r#"{"match":"name-contains","pattern":"inbox"}"#).unwrap();
        assert_eq!(rule, FilterRule::name_contains("inbox"));
    }
}
