use super::*;
use crate::snapshot::{build_snapshot, serialize_snapshot};

fn form_session() -> BrowserSession {
    let mut s = BrowserSession::new(7);
    s.load_template(&PageTemplate::Form(FormParams::default())).unwrap();
    s
}

fn snapshot_text(s: &BrowserSession) -> String {
    let tree = s.active_page().unwrap().accessibility_tree(false);
    let snap = build_snapshot(tree.as_ref(), 0).unwrap();
    serialize_snapshot(&snap, usize::MAX).into_string()
}

#[test]
fn form_weight_field_lines() {
    let text = snapshot_text(&form_session());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[37],
        r#"ref=38 heading "Total Weight (kg) Required question" level="3" description="Required question""#
    );
    assert_eq!(
        lines[38],
        r#"ref=39 textbox "Total Weight (kg) Required question" description="This is a required question" focusable focused required"#
    );
}

#[test]
fn products_are_deterministic_per_seed() {
    let t = PageTemplate::Products(ProductParams::default());
    let render = |seed| {
        let mut s = BrowserSession::new(seed);
        s.load_template(&t).unwrap();
        snapshot_text(&s)
    };
    assert_eq!(render(3), render(3));
    assert_ne!(render(3), render(4));
}

#[test]
fn empty_listing_renders() {
    let t = PageTemplate::Products(ProductParams {
        page_count: 1,
        items_per_page: 0,
        ..ProductParams::default()
    });
    let mut s = BrowserSession::new(1);
    s.load_template(&t).unwrap();
    let text = snapshot_text(&s);
    assert!(text.contains("\"Product list\""));
    assert!(!text.contains("Add to cart"));
}

#[test]
fn add_to_cart_updates_counter() {
    let mut s = BrowserSession::new(1);
    s.load_template(&PageTemplate::Products(ProductParams::default())).unwrap();
    let page = s.active_page().unwrap();
    let button = page
        .nodes()
        .find(|n| n.role == NodeRole::Button && n.name == "Add to cart")
        .unwrap()
        .id;
    s.apply_page_action(button, &PageAction::Click { double: false, right: false })
        .unwrap();
    assert_eq!(s.cart(), ["Product 0001".to_string()]);
    assert!(snapshot_text(&s).contains("\"Cart items: 1\""));
}

#[test]
fn typing_appends_unless_cleared() {
    let mut s = form_session();
    let page = s.active_page().unwrap();
    let field = page
        .find_by_name(NodeRole::Textbox, "Full name Required question")
        .unwrap();
    let ty = |t: &str, clear| PageAction::Type { text: t.into(), clear };
    s.apply_page_action(field, &ty("ab", false)).unwrap();
    s.apply_page_action(field, &ty("cd", false)).unwrap();
    assert_eq!(s.active_page().unwrap().node(field).unwrap().value.as_deref(), Some("abcd"));
    s.apply_page_action(field, &ty("x", true)).unwrap();
    assert_eq!(s.active_page().unwrap().node(field).unwrap().value.as_deref(), Some("x"));
}

#[test]
fn open_dialog_obscures_background() {
    let mut s = BrowserSession::new(1);
    s.load_template(&PageTemplate::DialogStack(DialogStackParams::default())).unwrap();
    let page = s.active_page().unwrap();
    let open = page.find_by_name(NodeRole::Button, "Open settings").unwrap();
    s.apply_page_action(open, &PageAction::Click { double: false, right: false })
        .unwrap();
    let err = s
        .apply_page_action(open, &PageAction::Click { double: false, right: false })
        .unwrap_err();
    assert!(matches!(err, WebError::ElementObscured { .. }));
    assert!(snapshot_text(&s).contains("occluded"));
}

#[test]
fn native_dialog_blocks_until_handled() {
    let mut s = form_session();
    let submit = s.active_page().unwrap().find_by_name(NodeRole::Button, "Submit").unwrap();
    let click = PageAction::Click { double: false, right: false };
    s.apply_page_action(submit, &click).unwrap();
    assert!(matches!(
        s.apply_page_action(submit, &click),
        Err(WebError::NativeDialogPending { .. })
    ));
    s.handle_dialog(true, None).unwrap();
    assert!(!s.active_page().unwrap().contains_text("Order #12345"));
    s.advance_clock(2);
    assert!(!s.active_page().unwrap().contains_text("Order #12345"));
    s.advance_clock(1);
    assert!(s.active_page().unwrap().contains_text("Order #12345"));
    assert_eq!(s.handle_dialog(true, None), Err(WebError::NoDialogPending));
}

#[test]
fn clock_fires_events_in_order() {
    let mut s = form_session();
    let page = s.active_page().unwrap();
    let a = page.find_by_name(NodeRole::Textbox, "Full name Required question").unwrap();
    let b = page.find_by_name(NodeRole::Textbox, "Company Required question").unwrap();
    s.schedule(5, Effect::SetValue(b, "late".into())).unwrap();
    s.schedule(2, Effect::SetValue(a, "early".into())).unwrap();
    s.schedule(2, Effect::SetValue(b, "second".into())).unwrap();

    // Oracle: the same schedule replayed one tick at a time.
    let mut replay = s.clone();
    let mut stepped = Vec::new();
    for _ in 0..6 {
        stepped.extend(replay.advance_clock(1));
    }

    let fired = s.advance_clock(6);
    assert_eq!(fired, stepped);
    let ticks: Vec<u64> = fired.iter().map(|e| e.tick).collect();
    assert_eq!(ticks, vec![2, 2, 5]);
    assert_eq!(fired[0].effect, Effect::SetValue(a, "early".into()));
    assert_eq!(s.state_digest(), replay.state_digest());
}

#[test]
fn navigation_and_back() {
    let mut s = BrowserSession::new(1);
    s.load_template(&PageTemplate::Products(ProductParams::default())).unwrap();
    let next = s.active_page().unwrap().find_by_name(NodeRole::Link, "Next page").unwrap();
    assert_eq!(
        s.navigation_target(next).as_deref(),
        Some("https://shop.example/products?page=2")
    );
    s.apply_page_action(next, &PageAction::Click { double: false, right: false })
        .unwrap();
    assert!(s.active_page().unwrap().contains_text("Page 02 of 05"));
    s.navigate_back().unwrap();
    assert!(s.active_page().unwrap().contains_text("Page 01 of 05"));
    assert_eq!(s.navigate_back(), Err(WebError::NoHistory));
}

#[test]
fn tabs_open_switch_close() {
    let mut s = BrowserSession::new(1);
    assert_eq!(s.active_page().unwrap_err(), WebError::NoActiveTab);
    let a = s.create_tab(None);
    let b = s.create_tab(None);
    assert_eq!(s.active_tab_id(), Some(b));
    s.switch_tab(a).unwrap();
    s.close_tab(a).unwrap();
    assert_eq!(s.active_tab_id(), Some(b));
    assert_eq!(s.switch_tab(a), Err(WebError::NoSuchTab(a)));
    s.close_tab(b).unwrap();
    assert_eq!(s.active_tab_id(), None);
}

#[test]
fn select_on_custom_dropdown_fails() {
    let mut s = form_session();
    let page = s.active_page().unwrap();
    let dd = page
        .nodes()
        .find(|n| matches!(n.binding, Binding::DropdownToggle { .. }))
        .unwrap()
        .id;
    let err = s
        .apply_page_action(dd, &PageAction::Select { values: vec!["Basic".into()] })
        .unwrap_err();
    assert!(err.to_string().contains("custom dropdown"));
}

#[test]
fn keys() {
    assert!(is_supported_key("Cmd+A"));
    assert!(is_supported_key("PageDown"));
    assert!(!is_supported_key("Hyper+Q"));
    let mut s = form_session();
    assert_eq!(s.press_key("Nope"), Err(WebError::UnsupportedKey("Nope".into())));
    s.press_key("Tab").unwrap();
}

#[test]
fn backend_trait_matches_session() {
    let mut s = form_session();
    let direct = snapshot_text(&s);
    let backend: &mut dyn BrowserBackend = &mut s;
    let tree = backend.accessibility_tree(false);
    let snap = build_snapshot(tree.as_ref(), 0).unwrap();
    assert_eq!(serialize_snapshot(&snap, usize::MAX).into_string(), direct);
    let tab = backend.create_tab(None);
    backend.switch_tab(tab).unwrap();
    assert_eq!(backend.active_tab_id(), Some(tab));
    assert_eq!(backend.tabs().len(), 2);
}
