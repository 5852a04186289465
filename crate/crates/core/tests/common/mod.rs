#![allow(dead_code)]

use graphclone_core::graph::{GlobalGraph, NodeId};
use graphclone_core::lexis::RESERVED_WORDS;
use proptest::prelude::*;

/// Sample ids `s00`, `s01`, ... so that lexicographic and numeric order agree.
pub fn sample_id(i: usize) -> String {
    format!("s{i:03}")
}

/// Bipartite graph from per-sample `(keyword index, weight)` lists.
pub fn graph_from_rows(rows: &[Vec<(usize, u32)>]) -> GlobalGraph {
    let mut g = GlobalGraph::with_samples((0..rows.len()).map(sample_id));
    for (i, row) in rows.iter().enumerate() {
        for &(k, w) in row {
            g.insert_edge(
                &sample_id(i),
                NodeId::Keyword(RESERVED_WORDS[k % 50]),
                f64::from(w),
            );
        }
    }
    g
}

/// Every sample gets 1..=max_edges distinct keywords with weights 1..=9.
pub fn rows_strategy(
    samples: std::ops::RangeInclusive<usize>,
    keywords: usize,
    max_edges: usize,
) -> impl Strategy<Value = Vec<Vec<(usize, u32)>>> {
    prop::collection::vec(
        prop::collection::btree_map(0..keywords, 1u32..10, 1..=max_edges)
            .prop_map(|m| m.into_iter().collect::<Vec<_>>()),
        samples,
    )
}
