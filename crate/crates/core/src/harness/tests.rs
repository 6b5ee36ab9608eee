use super::*;
use crate::safety::{AutoDeny, AutoGrant};
use crate::web::FormParams;

fn scenario(policy: PolicySpec, template: PageTemplate) -> Scenario {
    Scenario {
        name: "t".into(),
        description: String::new(),
        template,
        profile: None,
        policy,
        initial_request: None,
        history: HistoryMode::Compressed,
        trim: TrimMode::Off,
        per_action_latency_ticks: None,
        raw_buffer_capacity: None,
        summary_capacity: None,
        max_snapshot_chars: default_max_chars(),
        calibration: None,
    }
}

fn run(s: &Scenario) -> RunOutput {
    run_scenario(s, &default_profile(), RunOptions::for_scenario(s, 7), &mut AutoGrant).unwrap()
}

#[test]
fn form_calls_by_construction() {
    let form = PageTemplate::Form(FormParams::default());
    let seq = run(&scenario(PolicySpec::SequentialFormFill, form.clone()));
    let bulk = run(&scenario(PolicySpec::BulkFormFill { max_batch: 32 }, form));
    assert_eq!(seq.metrics.outcome, Outcome::Completed, "{:?}", seq.metrics.outcome);
    assert_eq!(bulk.metrics.outcome, Outcome::Completed, "{:?}", bulk.metrics.outcome);
    assert_eq!(seq.metrics.tool_calls, 38);
    assert_eq!(bulk.metrics.tool_calls, 10);
    assert_eq!(seq.metrics.steps, 39);
    assert_eq!(seq.metrics.final_state, bulk.metrics.final_state);
    assert_eq!(seq.metrics.answer.as_deref(), Some("Order #12345 confirmed"));
    assert!(bulk.metrics.individual_actions > bulk.metrics.tool_calls);
}

#[test]
fn identical_runs_compare_to_zero() {
    let s = scenario(PolicySpec::CheapestProduct { count: 3 }, PageTemplate::Products(Default::default()));
    let a = run(&s);
    let b = run(&s);
    let c = compare_runs(&a.metrics, &b.metrics).unwrap();
    assert!(c.deltas.iter().all(|d| d.delta == 0.0));
    assert_eq!(a.trace_jsonl(), b.trace_jsonl());
}

#[test]
fn different_scenarios_are_incomparable() {
    let mut s = scenario(PolicySpec::CheapestProduct { count: 3 }, PageTemplate::Products(Default::default()));
    let a = run(&s);
    s.name = "other".into();
    let b = run(&s);
    assert!(matches!(compare_runs(&a.metrics, &b.metrics), Err(ScenarioError::IncomparableRuns(_))));
}

#[test]
fn replay_reproduces_trace() {
    let s = scenario(PolicySpec::BulkFormFill { max_batch: 32 }, PageTemplate::Form(FormParams::default()));
    let out = run(&s);
    let report = replay_trace(&out.trace_jsonl()).unwrap();
    assert_eq!(report.mismatch, None);
    assert_eq!(report.events, out.trace.len());
}

fn refund_script() -> PolicySpec {
    let step: ScriptStep = serde_json::from_value(serde_json::json!({
        "actions": [{"kind": "click", "params": {"ref": {"role": "button", "name": "Request refund"}}}],
        "memory": "Refund requested"
    }))
    .unwrap();
    PolicySpec::Custom { steps: vec![step], answer: None }
}

#[test]
fn gated_click_needs_a_grant() {
    let s = scenario(refund_script(), PageTemplate::DialogStack(Default::default()));
    let granted = run(&s);
    assert_eq!(granted.metrics.outcome, Outcome::Completed);
    assert!(granted.metrics.final_state.contains("refund requested"));
    let denied = run_scenario(&s, &default_profile(), RunOptions::for_scenario(&s, 7), &mut AutoDeny).unwrap();
    assert!(matches!(
        denied.metrics.outcome,
        Outcome::PolicyDenied { code: ErrorCode::ConfirmationRequired, .. }
    ));
    assert_eq!(denied.metrics.outcome.exit_code(), 2);
    assert!(!denied.metrics.final_state.contains("refund requested"));
}

#[test]
fn policy_must_fit_template() {
    let s = scenario(PolicySpec::SequentialFormFill, PageTemplate::Products(Default::default()));
    assert!(matches!(s.validate(), Err(ScenarioError::Invalid(_))));
}

#[test]
fn profile_survives_trace_round_trip() {
    let p = AgentProfile::preset(crate::safety::Preset::Research);
    let back = AgentProfile::from_json(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
}
