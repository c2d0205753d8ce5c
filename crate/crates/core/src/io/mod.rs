//! Flow-data ingestion and the tab-separated artifact formats.

pub mod flows;
pub mod formats;
pub mod table;

pub use flows::{
    aggregate_pairs, build_strength_panel, parse_flow_records, write_flow_records, Diagnostic, DiagnosticKind, FlowRecord,
    LabelTable, PanelGrowth, PanelSummary, ParseOptions, ParsedFlows, YearAggregate,
};
pub use formats::*;
pub use table::fmt_sig;
