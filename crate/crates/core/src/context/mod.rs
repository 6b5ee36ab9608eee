//! Agent context management: what of the page and of past steps reaches
//! the model on each request.

mod history;
mod trim;

pub use history::{
    render_history, HistoryError, HistoryLog, RawTranscript, StepRecord, DEFAULT_RAW_BUFFER,
    DEFAULT_SUMMARY_CAPACITY,
};
pub use trim::{
    apply_trim, heuristic_trim, interactive_refs, parse_roles, trim_snapshot, ExternalTrimmer, HeuristicTrimmer,
    Run, TrimDirective, TrimEndpoint, TrimError, TrimRange, TrimRequest, Trimmer,
};
