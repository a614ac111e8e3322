//! Two-index merging: the naive baseline and reverse neighbor sliding
//! merge, plus the dominating-pivot cost model.

mod merge;
mod parallel;
mod pivots;

pub use merge::{
    merge_pair, naive_merge, rnsm_merge, MergeGraph, MergeParams, MergeReport, Strategy,
    DEFAULT_FOLLOWER_EF,
};
pub(crate) use merge::{merge_sides, plan_source, Side, SourcePlan};
pub use pivots::{
    build_reverse_index, dps_cost, expand_neighbors, hub_order, select_pivots,
    select_pivots_in_order, Expansion, PivotPlan, ReverseIndex, DEFAULT_EXPAND_PAD,
};
