//! Property checks shared by the proptest suites and the acceptance run.
#![allow(dead_code)]

use agentkernel::context::{parse_roles, trim_snapshot, HeuristicTrimmer};
use agentkernel::exec::{Action, ActionParams, AgentMemo, BulkRequest, ErrorCode, ExecConfig, Executor, RefParams};
use agentkernel::harness::{
    default_profile, replay_trace, run_scenario, PolicySpec, RunOptions, Scenario, ScriptStep, TrimMode, HistoryMode,
};
use agentkernel::safety::{evaluate_action, AgentProfile, AutoGrant, Decision, DEFAULT_SENSITIVE_KEYWORDS};
use agentkernel::snapshot::{
    build_snapshot, filter_snapshot, parse_line, parse_marker, render_line, serialize_snapshot, AccessibilitySnapshot,
    FilterRule, NodeId, NodeRole, NodeStates, PageNode, VersionedRef,
};
use agentkernel::web::{ArticleParams, BrowserSession, DialogStackParams, FormParams, PageTemplate, ProductParams};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const STALE_CASES: u32 = 1000;
pub const TREE_CASES: u32 = 256;
pub const REPLAY_CASES: u32 = 12;

// ------------------------------------------------------------------ trees

fn arb_role() -> impl Strategy<Value = NodeRole> {
    proptest::sample::select(NodeRole::ALL.to_vec())
}

fn arb_text() -> impl Strategy<Value = String> {
    "[ -~é☃]{0,14}"
}

fn arb_states() -> impl Strategy<Value = NodeStates> {
    any::<u8>().prop_map(|bits| {
        let all = [
            NodeStates::FOCUSABLE,
            NodeStates::FOCUSED,
            NodeStates::REQUIRED,
            NodeStates::DISABLED,
            NodeStates::CHECKED,
            NodeStates::SELECTED,
            NodeStates::OCCLUDED,
        ];
        all.iter()
            .enumerate()
            .filter(|(i, _)| bits & (1 << i) != 0)
            .fold(NodeStates::empty(), |s, (_, f)| s.with(*f))
    })
}

fn arb_leaf() -> impl Strategy<Value = PageNode> {
    (
        arb_role(),
        arb_text(),
        proptest::option::of(arb_text()),
        proptest::option::of(arb_text()),
        proptest::option::of(1u32..7),
        arb_states(),
    )
        .prop_map(|(role, name, desc, value, level, states)| {
            let mut n = PageNode::new(0, role, name).with_states(states);
            n.description = desc;
            n.value = value;
            n.level = level;
            n
        })
}

/// A repeated block: the shape the trimmer compresses.
fn arb_repeated_list() -> impl Strategy<Value = PageNode> {
    (8usize..40, any::<bool>(), "[a-z]{1,6}").prop_map(|(n, with_button, stem)| {
        let items = (0..n)
            .map(|i| {
                let mut children = vec![PageNode::new(0, NodeRole::Text, format!("{stem} {i}"))];
                if with_button {
                    children.push(PageNode::new(0, NodeRole::Button, format!("Open {i}")));
                }
                PageNode::new(0, NodeRole::Listitem, format!("Item {i}")).with_children(children)
            })
            .collect();
        PageNode::new(0, NodeRole::List, stem).with_children(items)
    })
}

fn renumber(node: &mut PageNode, next: &mut u32) {
    node.node_id = NodeId(*next);
    *next += 1;
    for c in &mut node.children {
        renumber(c, next);
    }
}

/// Random page trees, some with long repeated lists.
pub fn arb_tree() -> impl Strategy<Value = PageNode> {
    let subtree = arb_leaf().prop_recursive(4, 48, 6, |inner| {
        (arb_leaf(), proptest::collection::vec(inner, 0..6)).prop_map(|(n, kids)| n.with_children(kids))
    });
    (
        proptest::collection::vec(subtree, 0..5),
        proptest::option::of(arb_repeated_list()),
        proptest::collection::vec(arb_leaf(), 0..4),
    )
        .prop_map(|(head, list, tail)| {
            let mut children = head;
            children.extend(list);
            children.extend(tail);
            let mut root = PageNode::new(0, NodeRole::Generic, "root").with_children(children);
            renumber(&mut root, &mut 1);
            root
        })
}

fn shown_refs(text: &str) -> Vec<u32> {
    text.lines().filter_map(|l| parse_line(l).ok()).map(|l| l.ref_id).collect()
}

// ------------------------------------------------------------ properties

fn executor(template: PageTemplate, seed: u64) -> Executor {
    let mut b = BrowserSession::new(seed);
    b.load_template(&template).expect("template loads");
    Executor::new(b, ExecConfig::default())
}

/// Ops for a mutation trace: (kind, target pick, how many versions back).
pub fn arb_stale_trace() -> impl Strategy<Value = (bool, Vec<(u8, u32, u8)>)> {
    (any::<bool>(), proptest::collection::vec((0u8..3, any::<u32>(), 0u8..4), 1..12))
}

/// Any ref from an older generation is rejected as stale and changes
/// nothing; refs from the current generation are never reported stale.
pub fn check_stale_refs((use_form, ops): (bool, Vec<(u8, u32, u8)>)) -> Result<(), TestCaseError> {
    let template = if use_form {
        PageTemplate::Form(FormParams::default())
    } else {
        PageTemplate::DialogStack(DialogStackParams::default())
    };
    let mut e = executor(template, 5);
    let profile = default_profile();
    let mut seen: Vec<AccessibilitySnapshot> = vec![e.snapshot().expect("page open").clone()];
    for (op, pick, back) in ops {
        let current = e.version();
        let snap = &seen[seen.len() - 1 - (back as usize % seen.len())];
        let target = VersionedRef::new(snap.version(), 1 + pick % snap.max_ref());
        let action = match op {
            0 => Action::click(target),
            1 => Action::type_text(target, "x"),
            _ => ActionParams::Hover(RefParams { target }).into(),
        };
        let before = e.browser().state_digest();
        let r = e.execute(&profile, &mut AutoGrant, &action);
        if target.version != current {
            prop_assert_eq!(r.error_code(), Some(ErrorCode::StaleRef));
            prop_assert_eq!(e.version(), current);
            prop_assert_eq!(e.browser().state_digest(), before);
        } else {
            prop_assert_ne!(r.error_code(), Some(ErrorCode::StaleRef));
        }
        if e.version() != current {
            seen.push(e.snapshot().expect("page open").clone());
        }
    }
    Ok(())
}

/// (prefix, keyword index, case mask, suffix, put it in the description, action kind)
pub fn arb_keyword_case() -> impl Strategy<Value = (String, usize, u32, String, bool, u8)> {
    ("[a-z ]{0,10}", 0..DEFAULT_SENSITIVE_KEYWORDS.len(), any::<u32>(), "[a-z ]{0,10}", any::<bool>(), 0u8..4)
}

fn case_mix(word: &str, mask: u32) -> String {
    word.chars()
        .enumerate()
        .map(|(i, c)| if mask & (1 << (i % 32)) != 0 { c.to_ascii_uppercase() } else { c })
        .collect()
}

/// An element whose name or description contains a sensitive keyword, in
/// any letter case, always needs confirmation for state-changing calls.
pub fn check_keyword_gate(
    (prefix, kw, mask, suffix, in_desc, kind): (String, usize, u32, String, bool, u8),
) -> Result<(), TestCaseError> {
    let profile = default_profile();
    let label = format!("{prefix}{}{suffix}", case_mix(DEFAULT_SENSITIVE_KEYWORDS[kw], mask));
    let mut el = PageNode::new(2, NodeRole::Button, if in_desc { "Go" } else { label.as_str() });
    if in_desc {
        el = el.with_description(label.clone());
    }
    let clean = PageNode::new(3, NodeRole::Button, format!("Item {}", mask % 1000));
    let root = PageNode::new(1, NodeRole::Generic, "root").with_children(vec![el, clean]);
    let snap = build_snapshot(Some(&root), 0).expect("tree");
    let action = |r: u32| -> Action {
        let target = VersionedRef::new(1, r);
        match kind {
            0 => Action::click(target),
            1 => Action::type_text(target, "x"),
            2 => ActionParams::Hover(RefParams { target }).into(),
            _ => ActionParams::Focus(RefParams { target }).into(),
        }
    };
    prop_assert_eq!(evaluate_action(&profile, &action(2), &snap).decision, Decision::RequireConfirmation, "{}", label);
    prop_assert_eq!(evaluate_action(&profile, &action(3), &snap).decision, Decision::Allow);
    Ok(())
}

/// Heuristic trimming keeps every interactive line, and every ref is
/// either shown or covered by a marker.
pub fn check_trim_coverage(tree: PageNode) -> Result<(), TestCaseError> {
    let snap = build_snapshot(Some(&tree), 0).expect("tree");
    let full = serialize_snapshot(&snap, usize::MAX);
    // Same path as the harness: a directive the trimmer cannot produce falls back to the full text.
    let (trimmed, _) = trim_snapshot(&HeuristicTrimmer::default(), &snap, "", usize::MAX);
    let shown = shown_refs(trimmed.as_str());
    let roles = parse_roles(&full).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for (r, role) in roles {
        if role.is_interactive() {
            prop_assert!(shown.contains(&r), "interactive ref {} trimmed", r);
        }
    }
    let mut covered: Vec<u32> = shown.clone();
    for range in trimmed.lines().filter_map(parse_marker) {
        covered.extend(range);
    }
    covered.sort_unstable();
    prop_assert_eq!(covered, (1..=snap.max_ref()).collect::<Vec<_>>());
    Ok(())
}

/// Same tree, same bytes; every line parses back to its node.
pub fn check_serialization(tree: PageNode) -> Result<(), TestCaseError> {
    let a = build_snapshot(Some(&tree), 3).expect("tree");
    let b = build_snapshot(Some(&tree.clone()), 3).expect("tree");
    let (ta, tb) = (serialize_snapshot(&a, usize::MAX), serialize_snapshot(&b, usize::MAX));
    prop_assert_eq!(ta.as_str(), tb.as_str());
    for node in a.nodes() {
        let line = render_line(node);
        let parsed = parse_line(&line).map_err(TestCaseError::fail)?;
        prop_assert_eq!(parsed.ref_id, node.ref_id);
        prop_assert_eq!(parsed.role, node.role);
        prop_assert_eq!(&parsed.name, &node.name);
        prop_assert_eq!(&parsed.description, &node.description);
        prop_assert_eq!(&parsed.value, &node.value);
        prop_assert_eq!(parsed.level, node.level);
        prop_assert_eq!(parsed.states, node.states);
    }
    Ok(())
}

/// (tree, pattern, injection points as (node pick, field, case mask))
pub fn arb_secrecy_case() -> impl Strategy<Value = (PageNode, String, Vec<(u32, u8, u32)>)> {
    // Letters absent from the line syntax, so only injected text can match.
    (arb_tree(), "[jkqxz]{3,6}", proptest::collection::vec((any::<u32>(), 0u8..3, any::<u32>()), 1..6))
}

fn inject(node: &mut PageNode, target: &mut i64, field: u8, text: &str) {
    if *target == 0 {
        let slot = match field {
            0 => &mut node.name,
            1 => node.description.get_or_insert_with(String::new),
            _ => node.value.get_or_insert_with(String::new),
        };
        slot.push_str(text);
    }
    *target -= 1;
    for c in &mut node.children {
        inject(c, target, field, text);
    }
}

/// No filtered pattern, in any case, survives in the serialized view.
pub fn check_filter_secrecy((mut tree, pattern, points): (PageNode, String, Vec<(u32, u8, u32)>)) -> Result<(), TestCaseError> {
    if tree.children.is_empty() {
        tree.children.push(PageNode::new(2, NodeRole::Text, "filler"));
    }
    let count = tree.node_count() as u32;
    for (pick, field, mask) in points {
        // Never the root: filtering it would leave nothing to check.
        let mut target = 1 + (pick % count.saturating_sub(1).max(1)) as i64;
        inject(&mut tree, &mut target, field, &format!("<{}>", case_mix(&pattern, mask)));
    }
    let snap = build_snapshot(Some(&tree), 0).expect("tree");
    prop_assert!(serialize_snapshot(&snap, usize::MAX).as_str().to_lowercase().contains(&pattern));
    let view = filter_snapshot(&snap, &[FilterRule::name_contains(pattern.to_uppercase())]);
    let text = serialize_snapshot(&view, usize::MAX).into_string().to_lowercase();
    prop_assert!(!text.contains(&pattern), "pattern {} leaked", pattern);
    Ok(())
}

/// Ops for a bulk request on the settings page: (kind, target pick).
pub fn arb_bulk_ops() -> impl Strategy<Value = Vec<(u8, u32)>> {
    proptest::collection::vec((0u8..5, any::<u32>()), 1..8)
}

fn op_action(kind: u8, target: VersionedRef) -> Action {
    match kind {
        0 => Action::click(target),
        1 => Action::type_text(target, "ab"),
        2 => ActionParams::Hover(RefParams { target }).into(),
        3 => Action::handle_dialog(true),
        _ => ActionParams::Focus(RefParams { target }).into(),
    }
}

/// A bulk call that stops at action k leaves the same state as running
/// actions 0..k one call at a time, and action k fails the same way.
pub fn check_bulk_prefix(ops: Vec<(u8, u32)>) -> Result<(), TestCaseError> {
    let profile = default_profile();
    let mut bulk = executor(PageTemplate::DialogStack(DialogStackParams::default()), 9);
    let mut seq = bulk.clone();
    let snap = bulk.snapshot().expect("page").clone();
    let targets: Vec<(NodeRole, String)> = snap
        .nodes()
        .iter()
        .filter(|n| n.role.is_interactive())
        .map(|n| (n.role, n.name.clone()))
        .collect();
    let picked: Vec<(u8, (NodeRole, String))> =
        ops.iter().map(|(k, p)| (*k, targets[*p as usize % targets.len()].clone())).collect();
    let find = |s: &AccessibilitySnapshot, (role, name): &(NodeRole, String)| {
        s.nodes()
            .iter()
            .find(|n| n.role == *role && &n.name == name)
            .map(|n| VersionedRef::new(s.version(), n.ref_id))
    };
    let actions: Vec<Action> = picked
        .iter()
        .map(|(k, t)| op_action(*k, find(&snap, t).expect("target exists")))
        .collect();
    let r = bulk.execute_bulk(&profile, &mut AutoGrant, &BulkRequest { actions, memo: AgentMemo::default() });
    let stop = r.failed_index.unwrap_or(picked.len());
    for (i, (k, t)) in picked.iter().enumerate().take(stop + 1).take(picked.len()) {
        let current = seq.snapshot().expect("page").clone();
        let target = find(&current, t).ok_or_else(|| TestCaseError::fail(format!("{t:?} vanished")))?;
        let single = seq.execute(&profile, &mut AutoGrant, &op_action(*k, target));
        if i < stop {
            prop_assert!(single.is_ok(), "action {} failed alone: {:?}", i, single.error);
        } else {
            prop_assert_eq!(single.error_code(), r.results[i].error_code());
        }
    }
    prop_assert_eq!(bulk.browser().state_digest(), seq.browser().state_digest());
    Ok(())
}

pub fn small_scenario(which: u8) -> Scenario {
    let (name, template, policy) = match which % 4 {
        0 => (
            "form",
            PageTemplate::Form(FormParams { field_count: 12, ..FormParams::default() }),
            PolicySpec::BulkFormFill { max_batch: 8 },
        ),
        1 => (
            "shop",
            PageTemplate::Products(ProductParams { page_count: 3, items_per_page: 12, ..ProductParams::default() }),
            PolicySpec::CheapestProduct { count: 2 },
        ),
        2 => (
            "article",
            PageTemplate::Article(ArticleParams { paragraph_count: 30, ..ArticleParams::default() }),
            PolicySpec::TrimStress { steps: 6 },
        ),
        _ => {
            let step: ScriptStep = serde_json::from_value(serde_json::json!({
                "actions": [
                    {"kind": "type", "params": {"ref": {"role": "textbox", "name": "Display name"}, "text": " Roe"}},
                    {"kind": "click", "params": {"ref": {"role": "button", "name": "Delete account"}}}
                ],
                "memory": "Renaming, then deleting"
            }))
            .expect("script step");
            (
                "settings",
                PageTemplate::DialogStack(DialogStackParams::default()),
                PolicySpec::Custom { steps: vec![step], answer: None },
            )
        }
    };
    Scenario::from_json(
        &serde_json::json!({"name": name, "template": template, "policy": policy}).to_string(),
    )
    .expect("scenario")
}

pub fn arb_replay_case() -> impl Strategy<Value = (u8, u64, bool, bool)> {
    (0u8..4, 0u64..1000, any::<bool>(), any::<bool>())
}

/// Same scenario and seed: identical trace and metrics, and the recorded
/// trace replays without divergence.
pub fn check_replay((which, seed, full, trim): (u8, u64, bool, bool)) -> Result<(), TestCaseError> {
    let s = small_scenario(which);
    let mut options = RunOptions::for_scenario(&s, seed);
    options.history = if full { HistoryMode::Full } else { HistoryMode::Compressed };
    options.trim = if trim { TrimMode::Heuristic } else { TrimMode::Off };
    let profile: AgentProfile = default_profile();
    let a = run_scenario(&s, &profile, options, &mut AutoGrant).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let b = run_scenario(&s, &profile, options, &mut AutoGrant).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(a.trace_jsonl(), b.trace_jsonl());
    prop_assert_eq!(serde_json::to_string(&a.metrics).unwrap(), serde_json::to_string(&b.metrics).unwrap());
    let report = replay_trace(&a.trace_jsonl()).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(report.mismatch, None);
    Ok(())
}
