mod common;

use agentkernel::budget::{assemble_prompt, cached_tokens, compute_cost, LayerKind, PriceTable, PromptLayers, TokenLedger};
use agentkernel::exec::{Action, ActionKind, ErrorCode, ExecConfig, Executor};
use agentkernel::safety::{evaluate_action, AgentProfile, AutoGrant, Decision, Preset};
use agentkernel::snapshot::{NodeRole, VersionedRef};
use agentkernel::web::{BrowserSession, FormParams, PageTemplate};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(STALE_CASES))]
    #[test]
    fn stale_refs_are_rejected(trace in arb_stale_trace()) {
        check_stale_refs(trace)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(TREE_CASES))]

    #[test]
    fn keyword_gate_is_complete(case in arb_keyword_case()) {
        check_keyword_gate(case)?;
    }

    #[test]
    fn trimming_keeps_interactive_lines(tree in arb_tree()) {
        check_trim_coverage(tree)?;
    }

    #[test]
    fn serialization_is_deterministic(tree in arb_tree()) {
        check_serialization(tree)?;
    }

    #[test]
    fn filtered_patterns_never_leak(case in arb_secrecy_case()) {
        check_filter_secrecy(case)?;
    }

    #[test]
    fn bulk_stop_matches_prefix_replay(ops in arb_bulk_ops()) {
        check_bulk_prefix(ops)?;
    }

    #[test]
    fn denied_calls_change_nothing(pick in 1u32..120, kind in 0u8..3) {
        let mut b = BrowserSession::new(3);
        b.load_template(&PageTemplate::Form(FormParams::default())).unwrap();
        let mut e = Executor::new(b, ExecConfig::default());
        let target = VersionedRef::new(1, 1 + pick % e.snapshot().unwrap().max_ref());
        let action = match kind {
            0 => Action::click(target),
            1 => Action::type_text(target, "x"),
            _ => Action::navigate("https://forms.example/shipping"),
        };
        let before = (e.browser().state_digest(), e.version(), e.browser().clock());
        let r = e.execute(&AgentProfile::preset(Preset::Assistant), &mut AutoGrant, &action);
        prop_assert_eq!(r.error_code(), Some(ErrorCode::PolicyDenied));
        prop_assert_eq!((e.browser().state_digest(), e.version(), e.browser().clock()), before);
    }

    #[test]
    fn narrowing_tools_never_widens(mask in any::<u16>(), drop in any::<u16>(), kind in 0usize..4) {
        let mut wide = AgentProfile::unrestricted("w", vec!["*.example".parse().unwrap()]);
        wide.allowed_tools = ActionKind::ALL.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, k)| *k).collect();
        let mut narrow = wide.clone();
        narrow.allowed_tools.retain(|k| drop & (1 << (*k as usize)) == 0);
        let root = agentkernel::snapshot::PageNode::new(1, NodeRole::Generic, "r")
            .with_children(vec![agentkernel::snapshot::PageNode::new(2, NodeRole::Button, "Go")]);
        let snap = agentkernel::snapshot::build_snapshot(Some(&root), 0).unwrap();
        let t = VersionedRef::new(1, 2);
        let action = [Action::click(t), Action::type_text(t, "x"), Action::snapshot(), Action::press_key("End")][kind].clone();
        if evaluate_action(&narrow, &action, &snap).decision == Decision::Allow {
            prop_assert_eq!(evaluate_action(&wide, &action, &snap).decision, Decision::Allow);
        }
    }

    #[test]
    fn cost_is_additive_and_monotone(
        a in proptest::collection::vec((0u64..50_000, 0u64..50_000, 0u64..2_000), 0..20),
        b in proptest::collection::vec((0u64..50_000, 0u64..50_000, 0u64..2_000), 0..20),
        bump in 1u64..10_000,
    ) {
        let ledger = |rows: &[(u64, u64, u64)]| {
            let mut l = TokenLedger::default();
            for &(x, y, o) in rows {
                l.push(x.max(y), x.min(y), o);
            }
            l
        };
        let p = PriceTable::default();
        let (la, lb) = (ledger(&a), ledger(&b));
        let mut both = la.clone();
        both.entries.extend(lb.entries.iter().copied());
        let (ca, cb, cab) = (compute_cost(&la, &p).unwrap(), compute_cost(&lb, &p).unwrap(), compute_cost(&both, &p).unwrap());
        prop_assert!((cab.cost.total - ca.cost.total - cb.cost.total).abs() < 1e-9);
        let mut more = both.clone();
        more.push(bump, 0, 0);
        prop_assert!(compute_cost(&more, &p).unwrap().cost.total > cab.cost.total);
    }

    #[test]
    fn cache_covers_only_layers_before_a_change(
        texts in proptest::collection::vec("[a-z \n]{0,60}", 5),
        changed in 0usize..5,
    ) {
        let layers = |t: &[String]| PromptLayers {
            system_prompt: t[0].clone(),
            session_context: t[1].clone(),
            tab_state: t[2].clone(),
            history: t[3].clone(),
            snapshot: t[4].clone(),
        };
        let prev = assemble_prompt(&layers(&texts));
        let mut edited = texts.clone();
        edited[changed].push('!');
        let cur = assemble_prompt(&layers(&edited));
        let expected: u64 = LayerKind::ORDER[..changed].iter().map(|k| cur.layer_tokens(*k)).sum();
        prop_assert_eq!(cached_tokens(Some(&prev), &cur), expected);
        prop_assert_eq!(cached_tokens(Some(&prev), &prev), prev.tokens());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(REPLAY_CASES))]
    #[test]
    fn scenario_runs_replay_identically(case in arb_replay_case()) {
        check_replay(case)?;
    }
}
