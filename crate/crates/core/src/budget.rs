//! Prompt assembly in cache-friendly layer order, token estimates, prefix
//! cache accounting and cost.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BudgetError {
    #[error("ledger entry {index}: cached tokens {cached} exceed input tokens {input}")]
    InvalidLedger { index: usize, cached: u64, input: u64 },
    #[error("cached input price must be below the input price")]
    InvalidPrices,
    #[error("csv: {0}")]
    Csv(String),
}

/// Layers from least to most volatile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    SystemPrompt,
    SessionContext,
    TabState,
    History,
    Snapshot,
}

impl LayerKind {
    pub const ORDER: [LayerKind; 5] = [
        LayerKind::SystemPrompt,
        LayerKind::SessionContext,
        LayerKind::TabState,
        LayerKind::History,
        LayerKind::Snapshot,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            LayerKind::SystemPrompt => "system_prompt",
            LayerKind::SessionContext => "session_context",
            LayerKind::TabState => "tab_state",
            LayerKind::History => "history",
            LayerKind::Snapshot => "snapshot",
        }
    }
}

/// The five layer texts. Empty text is allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptLayers {
    pub system_prompt: String,
    pub session_context: String,
    pub tab_state: String,
    pub history: String,
    pub snapshot: String,
}

impl PromptLayers {
    pub fn get(&self, kind: LayerKind) -> &str {
        match kind {
            LayerKind::SystemPrompt => &self.system_prompt,
            LayerKind::SessionContext => &self.session_context,
            LayerKind::TabState => &self.tab_state,
            LayerKind::History => &self.history,
            LayerKind::Snapshot => &self.snapshot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerSpan {
    pub kind: LayerKind,
    /// Byte offset of the layer's opening delimiter.
    pub start: usize,
    pub end: usize,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssembledPrompt {
    pub text: String,
    pub layers: Vec<LayerSpan>,
}

impl AssembledPrompt {
    pub fn tokens(&self) -> u64 {
        self.layers.iter().map(|l| l.tokens).sum()
    }

    pub fn layer_text(&self, kind: LayerKind) -> &str {
        self.layers
            .iter()
            .find(|l| l.kind == kind)
            .map_or("", |l| &self.text[l.start..l.end])
    }

    pub fn layer_tokens(&self, kind: LayerKind) -> u64 {
        self.layers.iter().find(|l| l.kind == kind).map_or(0, |l| l.tokens)
    }
}

/// `ceil(chars / 4)`.
pub fn estimate_tokens(text: &str) -> u64 {
    (text.chars().count() as u64).div_ceil(4)
}

/// Concatenates the layers in fixed order, each as `<tag>\n{text}</tag>\n`.
/// A layer's token count covers its delimiters.
pub fn assemble_prompt(layers: &PromptLayers) -> AssembledPrompt {
    let mut text = String::new();
    let mut spans = Vec::with_capacity(5);
    for kind in LayerKind::ORDER {
        let start = text.len();
        let body = layers.get(kind);
        text.push_str(&format!("<{}>\n", kind.tag()));
        text.push_str(body);
        if !body.is_empty() && !body.ends_with('\n') {
            text.push('\n');
        }
        text.push_str(&format!("</{}>\n", kind.tag()));
        let tokens = estimate_tokens(&text[start..]);
        spans.push(LayerSpan { kind, start, end: text.len(), tokens });
    }
    AssembledPrompt { text, layers: spans }
}

/// Tokens of the longest run of leading layers identical in both prompts.
pub fn cached_tokens(previous: Option<&AssembledPrompt>, current: &AssembledPrompt) -> u64 {
    let Some(prev) = previous else { return 0 };
    prev.layers
        .iter()
        .zip(&current.layers)
        .take_while(|(a, b)| prev.text[a.start..a.end] == current.text[b.start..b.end])
        .map(|(_, b)| b.tokens)
        .sum()
}

/// Dollars per million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceTable {
    pub input_per_million: f64,
    pub cached_input_per_million: f64,
    pub output_per_million: f64,
}

impl Default for PriceTable {
    fn default() -> Self {
        PriceTable { input_per_million: 1.25, cached_input_per_million: 0.13, output_per_million: 10.0 }
    }
}

impl PriceTable {
    pub fn validate(&self) -> Result<(), BudgetError> {
        if self.cached_input_per_million < self.input_per_million && self.cached_input_per_million >= 0.0 {
            Ok(())
        } else {
            Err(BudgetError::InvalidPrices)
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub input_tokens: u64,
    pub cached_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenLedger {
    pub entries: Vec<LedgerEntry>,
}

impl TokenLedger {
    pub fn push(&mut self, input_tokens: u64, cached_tokens: u64, output_tokens: u64) {
        self.entries.push(LedgerEntry { input_tokens, cached_tokens, output_tokens });
    }

    pub fn totals(&self) -> LedgerEntry {
        self.entries.iter().fold(LedgerEntry::default(), |acc, e| LedgerEntry {
            input_tokens: acc.input_tokens + e.input_tokens,
            cached_tokens: acc.cached_tokens + e.cached_tokens,
            output_tokens: acc.output_tokens + e.output_tokens,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub noncached_input: f64,
    pub cached_input: f64,
    pub output: f64,
    pub total: f64,
}

pub fn entry_cost(e: &LedgerEntry, prices: &PriceTable) -> CostBreakdown {
    let m = 1e-6;
    let noncached_input = (e.input_tokens - e.cached_tokens) as f64 * prices.input_per_million * m;
    let cached_input = e.cached_tokens as f64 * prices.cached_input_per_million * m;
    let output = e.output_tokens as f64 * prices.output_per_million * m;
    CostBreakdown { noncached_input, cached_input, output, total: noncached_input + cached_input + output }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub requests: usize,
    pub totals: LedgerEntry,
    pub cost: CostBreakdown,
    /// Shares of total cost, in percent.
    pub noncached_pct: f64,
    pub cached_pct: f64,
    pub output_pct: f64,
    /// Input plus output tokens per request.
    pub avg_tokens_per_step: f64,
    pub avg_cost_per_step: f64,
    pub per_request: Vec<CostBreakdown>,
}

pub fn compute_cost(ledger: &TokenLedger, prices: &PriceTable) -> Result<CostReport, BudgetError> {
    for (index, e) in ledger.entries.iter().enumerate() {
        if e.cached_tokens > e.input_tokens {
            return Err(BudgetError::InvalidLedger { index, cached: e.cached_tokens, input: e.input_tokens });
        }
    }
    let totals = ledger.totals();
    let cost = entry_cost(&totals, prices);
    let pct = |x: f64| if cost.total > 0.0 { 100.0 * x / cost.total } else { 0.0 };
    let n = ledger.entries.len();
    let per = |x: f64| if n > 0 { x / n as f64 } else { 0.0 };
    Ok(CostReport {
        requests: n,
        totals,
        cost,
        noncached_pct: pct(cost.noncached_input),
        cached_pct: pct(cost.cached_input),
        output_pct: pct(cost.output),
        avg_tokens_per_step: per((totals.input_tokens + totals.output_tokens) as f64),
        avg_cost_per_step: per(cost.total),
        per_request: ledger.entries.iter().map(|e| entry_cost(e, prices)).collect(),
    })
}

/// Writes `step,input,cached,output,cost`, one row per request.
pub fn write_cost_csv<W: Write>(ledger: &TokenLedger, report: &CostReport, out: W) -> Result<(), BudgetError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| BudgetError::Csv(e.to_string());
    w.write_record(["step", "input", "cached", "output", "cost"]).map_err(err)?;
    for (i, (e, c)) in ledger.entries.iter().zip(&report.per_request).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.input_tokens.to_string(),
            e.cached_tokens.to_string(),
            e.output_tokens.to_string(),
            format!("{:.6}", c.total),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| BudgetError::Csv(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CachingProjection {
    pub uncached_cost: f64,
    pub cached_cost: f64,
    pub reduction_percent: f64,
}

/// Cost of resending a static prefix `request_count` times, with and without
/// a prefix cache that bills the first send at the full rate.
pub fn workflow_cost_projection(prefix_tokens: u64, request_count: u64, prices: &PriceTable) -> CachingProjection {
    let m = 1e-6;
    let prefix = prefix_tokens as f64;
    let uncached_cost = request_count as f64 * prefix * prices.input_per_million * m;
    let cached_cost = if request_count == 0 {
        0.0
    } else {
        prefix * prices.input_per_million * m
            + (request_count - 1) as f64 * prefix * prices.cached_input_per_million * m
    };
    let reduction_percent = if uncached_cost > 0.0 { 100.0 * (1.0 - cached_cost / uncached_cost) } else { 0.0 };
    CachingProjection { uncached_cost, cached_cost, reduction_percent }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers(snapshot: &str) -> PromptLayers {
        PromptLayers {
            system_prompt: "You operate a browser.".into(),
            session_context: "today".into(),
            tab_state: "1 tab".into(),
            history: "<step>x</step>".into(),
            snapshot: snapshot.into(),
        }
    }

    #[test]
    fn token_rule() {
        assert_eq!(estimate_tokens(""), 0);
        assert_eq!(estimate_tokens("abcdefghijkl"), 3);
        assert_eq!(estimate_tokens("abcdefghijklm"), 4);
        assert_eq!(estimate_tokens(&"x".repeat(50_000)), 12_500);
    }

    #[test]
    fn empty_layers_are_stable() {
        let a = assemble_prompt(&PromptLayers::default());
        assert_eq!(a.text, assemble_prompt(&PromptLayers::default()).text);
        assert!(a.text.starts_with("<system_prompt>\n</system_prompt>\n<session_context>"));
        assert!(a.text.ends_with("<snapshot>\n</snapshot>\n"));
    }

    #[test]
    fn snapshot_change_caches_the_rest() {
        let a = assemble_prompt(&layers("ref=1 generic \"a\"\n"));
        let b = assemble_prompt(&layers("ref=1 generic \"b\"\n"));
        let expected: u64 = LayerKind::ORDER[..4].iter().map(|k| b.layer_tokens(*k)).sum();
        assert_eq!(cached_tokens(Some(&a), &b), expected);
        // Oracle: the common prefix in bytes ends inside the snapshot layer.
        let lcp = a.text.bytes().zip(b.text.bytes()).take_while(|(x, y)| x == y).count();
        assert!(lcp >= b.layers[4].start);
        assert_eq!(cached_tokens(None, &b), 0);
        assert_eq!(cached_tokens(Some(&b), &b), b.tokens());
        let mut edited = layers("ref=1 generic \"b\"\n");
        edited.system_prompt.push('!');
        assert_eq!(cached_tokens(Some(&b), &assemble_prompt(&edited)), 0);
    }

    #[test]
    fn reference_ledger_cost() {
        let mut ledger = TokenLedger::default();
        ledger.push(265_104, 198_528, 3_639);
        let r = compute_cost(&ledger, &PriceTable::default()).unwrap();
        // Independent arithmetic: 66,576 fresh tokens at 1.25, 198,528 at 0.13, 3,639 at 10 per million.
        assert!((r.cost.noncached_input - 0.083_22).abs() < 1e-9);
        assert!((r.cost.cached_input - 0.025_808_64).abs() < 1e-9);
        assert!((r.cost.output - 0.036_39).abs() < 1e-9);
        assert!((r.cost.total - 0.145_418_64).abs() < 1e-9);
        assert!((r.noncached_pct - 57.2).abs() < 0.05);
        assert!((r.cached_pct - 17.7).abs() < 0.05);
        assert!((r.output_pct - 25.0).abs() < 0.05);
        let zero = compute_cost(&TokenLedger { entries: vec![LedgerEntry::default()] }, &PriceTable::default()).unwrap();
        assert_eq!(zero.cost.total, 0.0);
    }

    #[test]
    fn invalid_ledger() {
        let mut ledger = TokenLedger::default();
        ledger.push(10, 11, 0);
        assert!(matches!(compute_cost(&ledger, &PriceTable::default()), Err(BudgetError::InvalidLedger { index: 0, .. })));
    }

    #[test]
    fn projection() {
        let p = workflow_cost_projection(20_000, 100, &PriceTable::default());
        assert!((p.uncached_cost - 2.5).abs() < 1e-12);
        assert!((p.cached_cost - (0.025 + 99.0 * 20_000.0 * 0.13e-6)).abs() < 1e-12);
        assert!((p.reduction_percent - 88.704).abs() < 1e-3);
        assert_eq!(workflow_cost_projection(20_000, 1, &PriceTable::default()).reduction_percent, 0.0);
    }

    #[test]
    fn csv_columns() {
        let mut ledger = TokenLedger::default();
        ledger.push(100, 40, 10);
        let report = compute_cost(&ledger, &PriceTable::default()).unwrap();
        let mut buf = Vec::new();
        write_cost_csv(&ledger, &report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "step,input,cached,output,cost\n1,100,40,10,0.000180\n");
    }
}
