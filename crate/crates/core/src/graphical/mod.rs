//! Poisson graphical representation with one stored timeline for every `q`.

mod replay;
mod stream;
mod timeline;

pub use replay::{
    apply_symbol, couple_monotone, dropped_symbol_count, eta_qn, implied_lower_bound, indicators,
    interval_index, min_neighborhood_gap, replay, replay_between, IndicatorKey, Indicators, MonotoneCheck,
    Violation,
};
pub use stream::{CoupledQStream, SlotCoupling, SnapshotPlan};
pub use timeline::{GraphicalTimeline, Resolver, Symbol, SymbolRecord, SymbolType, TimelineHeader};
