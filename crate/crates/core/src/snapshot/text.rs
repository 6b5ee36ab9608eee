//! Line-oriented snapshot text.
//!
//! Grammar, one node per line:
//!
//! ```text
//! ref=<int> <role> "<name>"( level="<int>")?( description="<text>")?( value="<text>")?( <flag>)*
//! ```
//!
//! Truncated output ends with a `[refs A-B trimmed]` marker line. Quoted text
//! escapes `\`, `"`, newline, carriage return and tab with a backslash.

use std::fmt;
use std::ops::RangeInclusive;

use super::{AccessibilityNode, AccessibilitySnapshot, NodeRole, NodeStates, SnapshotError};

/// Smallest accepted character cap for [`serialize_snapshot`].
pub const MIN_MAX_CHARS: usize = 256;

/// Serialized snapshot lines (each terminated by `\n`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SnapshotText(String);

impl SnapshotText {
    pub fn new(text: String) -> Self {
        SnapshotText(text)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }

    pub fn lines(&self) -> impl Iterator<Item = &str> {
        self.0.lines()
    }

    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SnapshotText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for SnapshotText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

fn push_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c.is_control() => {}
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Renders one node line, including the trailing newline.
pub fn render_line(node: &AccessibilityNode) -> String {
    let mut out = format!("ref={} {} ", node.ref_id, node.role);
    push_quoted(&mut out, &node.name);
    if let Some(level) = node.level {
        out.push_str(&format!(" level=\"{level}\""));
    }
    if let Some(d) = &node.description {
        out.push_str(" description=");
        push_quoted(&mut out, d);
    }
    if let Some(v) = &node.value {
        out.push_str(" value=");
        push_quoted(&mut out, v);
    }
    for word in node.states.words() {
        out.push(' ');
        out.push_str(word);
    }
    out.push('\n');
    out
}

pub fn render_marker(first: u32, last: u32) -> String {
    format!("[refs {first}-{last} trimmed]\n")
}

/// Serializes the whole snapshot, cutting at the last whole line that fits
/// `max_chars` together with the trailing marker. Caps below
/// [`MIN_MAX_CHARS`] are raised to it.
pub fn serialize_snapshot(snapshot: &AccessibilitySnapshot, max_chars: usize) -> SnapshotText {
    let max_chars = max_chars.max(MIN_MAX_CHARS);
    let lines: Vec<String> = snapshot.nodes().iter().map(render_line).collect();
    let total: usize = lines.iter().map(|l| l.chars().count()).sum();
    if total <= max_chars {
        return SnapshotText(lines.concat());
    }
    let last = snapshot.max_ref();
    let nodes = snapshot.nodes();
    let mut out = String::new();
    let mut used = 0usize;
    let mut kept = 0usize;
    for (i, line) in lines.iter().enumerate() {
        let len = line.chars().count();
        // The marker that would follow if we stop after this line.
        let marker_after = match nodes.get(i + 1) {
            Some(next) => render_marker(next.ref_id, last).chars().count(),
            None => 0,
        };
        if used + len + marker_after > max_chars {
            break;
        }
        out.push_str(line);
        used += len;
        kept += 1;
    }
    if let Some(first_omitted) = nodes.get(kept) {
        out.push_str(&render_marker(first_omitted.ref_id, last));
    }
    SnapshotText(out)
}

/// Lines for exactly the refs inside `start..=end`, never truncated.
pub fn extract_range(
    snapshot: &AccessibilitySnapshot,
    start: u32,
    end: u32,
) -> Result<SnapshotText, SnapshotError> {
    if start == 0 || start > end {
        return Err(SnapshotError::EmptyRange { start, end });
    }
    let text: String = snapshot
        .nodes()
        .iter()
        .filter(|n| (start..=end).contains(&n.ref_id))
        .map(render_line)
        .collect();
    if text.is_empty() {
        return Err(SnapshotError::EmptyRange { start, end });
    }
    Ok(SnapshotText(text))
}

/// Lines for one node and its descendants.
pub fn serialize_subtree(
    snapshot: &AccessibilitySnapshot,
    ref_id: u32,
) -> Result<SnapshotText, SnapshotError> {
    let refs = snapshot.subtree_refs(ref_id);
    if refs.is_empty() {
        return Err(SnapshotError::UnknownRef {
            version: snapshot.version(),
            ref_id,
        });
    }
    let text = refs
        .into_iter()
        .filter_map(|r| snapshot.get(r))
        .map(render_line)
        .collect();
    Ok(SnapshotText(text))
}

/// A node line parsed back from snapshot text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLine {
    pub ref_id: u32,
    pub role: NodeRole,
    pub name: String,
    pub level: Option<u32>,
    pub description: Option<String>,
    pub value: Option<String>,
    pub states: NodeStates,
}

/// Parses `[refs A-B trimmed]`.
pub fn parse_marker(line: &str) -> Option<RangeInclusive<u32>> {
    let inner = line
        .trim_end_matches('\n')
        .strip_prefix("[refs ")?
        .strip_suffix(" trimmed]")?;
    let (a, b) = inner.split_once('-')?;
    Some(a.parse().ok()?..=b.parse().ok()?)
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn eat(&mut self, prefix: &str) -> bool {
        match self.rest.strip_prefix(prefix) {
            Some(r) => {
                self.rest = r;
                true
            }
            None => false,
        }
    }

    fn word(&mut self) -> &'a str {
        let end = self
            .rest
            .find([' ', '='])
            .unwrap_or(self.rest.len());
        let (w, r) = self.rest.split_at(end);
        self.rest = r;
        w
    }

    fn quoted(&mut self) -> Result<String, String> {
        if !self.eat("\"") {
            return Err("expected opening quote".into());
        }
        let mut out = String::new();
        let mut chars = self.rest.char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.rest = &self.rest[i + 1..];
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 'r')) => out.push('\r'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, e @ ('\\' | '"'))) => out.push(e),
                    _ => return Err("bad escape".into()),
                },
                c => out.push(c),
            }
        }
        Err("unterminated quote".into())
    }
}

/// Parses one node line (with or without its trailing newline).
pub fn parse_line(line: &str) -> Result<ParsedLine, String> {
    let mut cur = Cursor {
        rest: line.trim_end_matches('\n'),
    };
    if !cur.eat("ref=") {
        return Err("line must start with `ref=`".into());
    }
    let ref_id: u32 = cur
        .word()
        .parse()
        .map_err(|e| format!("bad ref number: {e}"))?;
    if !cur.eat(" ") {
        return Err("expected role".into());
    }
    let role: NodeRole = cur.word().parse()?;
    if !cur.eat(" ") {
        return Err("expected name".into());
    }
    let name = cur.quoted()?;
    let mut parsed = ParsedLine {
        ref_id,
        role,
        name,
        level: None,
        description: None,
        value: None,
        states: NodeStates::empty(),
    };
    // 0 = level, 1 = description, 2 = value, 3 = flags
    let mut stage = 0;
    while cur.eat(" ") {
        let word = cur.word();
        if cur.eat("=") {
            let text = cur.quoted()?;
            match word {
                "level" if stage < 1 => {
                    parsed.level = Some(text.parse().map_err(|e| format!("bad level: {e}"))?);
                    stage = 1;
                }
                "description" if stage < 2 => {
                    parsed.description = Some(text);
                    stage = 2;
                }
                "value" if stage < 3 => {
                    parsed.value = Some(text);
                    stage = 3;
                }
                other => return Err(format!("unexpected attribute `{other}`")),
            }
        } else {
            let flag =
                NodeStates::from_word(word).ok_or_else(|| format!("unknown flag `{word}`"))?;
            parsed.states.insert(flag);
            stage = 4;
        }
    }
    if !cur.rest.is_empty() {
        return Err(format!("trailing text `{}`", cur.rest));
    }
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snapshot::{build_snapshot, PageNode};

    fn field_pair() -> PageNode {
        PageNode::new(0, NodeRole::Generic, "").with_children(vec![
            PageNode::new(1, NodeRole::Heading, "Total Weight (kg) Required question")
                .with_level(3)
                .with_description("Required question"),
            PageNode::new(2, NodeRole::Textbox, "Total Weight (kg) Required question")
                .with_description("This is a required question")
                .with_states(NodeStates::FOCUSABLE | NodeStates::FOCUSED | NodeStates::REQUIRED),
        ])
    }

    fn flat_page(n: u32) -> AccessibilitySnapshot {
        let children = (1..n)
            .map(|i| PageNode::new(i, NodeRole::Button, "Hello World"))
            .collect();
        let root = PageNode::new(0, NodeRole::Generic, "page").with_children(children);
        build_snapshot(Some(&root), 0).unwrap()
    }

    #[test]
    fn heading_and_textbox_lines() {
        let snap = build_snapshot(Some(&field_pair()), 0).unwrap();
        let text = serialize_snapshot(&snap, 50_000);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[1],
            r#"ref=2 heading "Total Weight (kg) Required question" level="3" description="Required question""#
        );
        assert_eq!(
            lines[2],
            r#"ref=3 textbox "Total Weight (kg) Required question" description="This is a required question" focusable focused required"#
        );
        assert!(lines[2].ends_with("focusable focused required"));
    }

    #[test]
    fn small_snapshot_has_no_marker() {
        let snap = build_snapshot(Some(&PageNode::new(0, NodeRole::Button, "OK")), 0).unwrap();
        let text = serialize_snapshot(&snap, 50_000);
        assert_eq!(text.as_str(), "ref=1 button \"OK\"\n");
        assert!(!text.as_str().contains("trimmed"));
    }

    #[test]
    fn truncation_marker_names_omitted_tail() {
        let snap = flat_page(5000);
        let first_1000: usize = snap.nodes()[..1000]
            .iter()
            .map(|n| render_line(n).chars().count())
            .sum();
        let cap = first_1000 + render_marker(1001, 5000).len();
        let text = serialize_snapshot(&snap, cap);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1001);
        assert_eq!(*lines.last().unwrap(), "[refs 1001-5000 trimmed]");
        assert!(lines[999].starts_with("ref=1000 button \"Hello World\""));
        assert!(text.char_len() <= cap);
        // one char less and the 1000th line no longer fits
        let shorter = serialize_snapshot(&snap, cap - 1);
        assert_eq!(shorter.lines().last().unwrap(), "[refs 1000-5000 trimmed]");
    }

    #[test]
    fn range_extraction() {
        let snap = flat_page(5000);
        let text = extract_range(&snap, 1001, 2000).unwrap();
        assert_eq!(text.lines().count(), 1000);
        assert!(text.lines().next().unwrap().starts_with("ref=1001 "));
        let root = extract_range(&snap, 1, 1).unwrap();
        assert_eq!(root.as_str(), "ref=1 generic \"page\"\n");
        assert_eq!(
            extract_range(&snap, 6000, 7000),
            Err(SnapshotError::EmptyRange { start: 6000, end: 7000 })
        );
        assert!(extract_range(&snap, 0, 3).is_err());
        assert!(extract_range(&snap, 9, 3).is_err());
    }

    #[test]
    fn full_range_equals_untruncated_serialization() {
        let snap = flat_page(300);
        assert_eq!(
            extract_range(&snap, 1, snap.max_ref()).unwrap(),
            serialize_snapshot(&snap, usize::MAX)
        );
    }

    #[test]
    fn parse_round_trips_escapes() {
        let node = PageNode::new(0, NodeRole::Textbox, "say \"hi\"\\ now")
            .with_value("line1\nline2\t")
            .with_states(NodeStates::CHECKED | NodeStates::OCCLUDED);
        let snap = build_snapshot(Some(&node), 0).unwrap();
        let line = render_line(snap.root());
        let parsed = parse_line(&line).unwrap();
        assert_eq!(parsed.name, "say \"hi\"\\ now");
        assert_eq!(parsed.value.as_deref(), Some("line1\nline2\t"));
        assert_eq!(parsed.states, NodeStates::CHECKED | NodeStates::OCCLUDED);
    }

    #[test]
    fn parse_rejects_malformed_lines() {
        assert!(parse_line("button \"x\"").is_err());
        assert!(parse_line("ref=1 widget \"x\"").is_err());
        assert!(parse_line("ref=1 button \"x").is_err());
        assert!(parse_line("ref=1 button \"x\" value=\"a\" level=\"2\"").is_err());
        assert!(parse_line("ref=1 button \"x\" sparkly").is_err());
    }

    #[test]
    fn marker_parse() {
        assert_eq!(parse_marker("[refs 51-199 trimmed]"), Some(51..=199));
        assert_eq!(parse_marker("ref=1 button \"a\""), None);
    }
}
