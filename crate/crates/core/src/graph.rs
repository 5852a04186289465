//! The global sample graph.
//!
//! Every sample points at the keyword nodes and side-information nodes it
//! uses, weighted by frequency. Samples are never connected directly; two
//! samples are related only through the info nodes they share.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use sha2::{Digest, Sha256};

use crate::lexis::{reserved_word, IndividualInfo, Metric};

/// Side-information node labels, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfoNode {
    Metric(Metric),
    /// Anchor for samples that would otherwise be isolated.
    Empty,
}

impl InfoNode {
    pub fn label(self) -> &'static str {
        match self {
            InfoNode::Metric(m) => m.label(),
            InfoNode::Empty => "EMPTY",
        }
    }
}

/// A graph node. The derived order is the canonical matrix row order:
/// samples by id, then keywords alphabetically, then side information in
/// MNDCB, MNPCB, LRI, FCI, NDI, EMPTY order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Sample(String),
    Keyword(&'static str),
    Info(InfoNode),
}

impl NodeId {
    pub fn sample(id: impl Into<String>) -> Self {
        NodeId::Sample(id.into())
    }

    pub fn is_sample(&self) -> bool {
        matches!(self, NodeId::Sample(_))
    }

    pub fn sample_id(&self) -> Option<&str> {
        match self {
            NodeId::Sample(id) => Some(id),
            _ => None,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Sample(id) => write!(f, "s:{id}"),
            NodeId::Keyword(w) => write!(f, "k:{w}"),
            NodeId::Info(i) => write!(f, "i:{}", i.label()),
        }
    }
}

impl FromStr for NodeId {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadNodeId(s.to_string());
        let (kind, label) = s.split_once(':').ok_or_else(bad)?;
        match kind {
            "s" if !label.is_empty() => Ok(NodeId::Sample(label.to_string())),
            "k" => reserved_word(label).map(NodeId::Keyword).ok_or_else(bad),
            "i" if label == "EMPTY" => Ok(NodeId::Info(InfoNode::Empty)),
            "i" => Metric::from_label(label)
                .map(|m| NodeId::Info(InfoNode::Metric(m)))
                .ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    EmptyInput,
    /// Merged graphs must cover the same samples.
    SampleSetMismatch {
        only_left: Vec<String>,
        only_right: Vec<String>,
    },
    BadNodeId(String),
    BadEdge {
        line: usize,
        reason: String,
    },
    BadHeader(String),
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::EmptyInput => write!(f, "no samples to build a graph from"),
            GraphError::SampleSetMismatch {
                only_left,
                only_right,
            } => write!(
                f,
                "graphs cover different samples (only in first: {only_left:?}, only in second: {only_right:?})"
            ),
            GraphError::BadNodeId(s) => write!(f, "invalid node id `{s}`"),
            GraphError::BadEdge { line, reason } => write!(f, "edge list line {line}: {reason}"),
            GraphError::BadHeader(s) => write!(f, "invalid edge list header `{s}`"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Which individual information feeds the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum FeatureSet {
    Keywords,
    SideInfo,
    #[default]
    Both,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Keywords, FeatureSet::SideInfo, FeatureSet::Both];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Keywords => "keywords",
            FeatureSet::SideInfo => "sideinfo",
            FeatureSet::Both => "both",
        }
    }
}

impl FromStr for FeatureSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                format!("unknown feature set `{s}` (expected keywords, sideinfo or both)")
            })
    }
}

/// Optional transform applied to raw frequencies before they become weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightTransform {
    #[default]
    Raw,
    Log1p,
}

impl WeightTransform {
    pub fn apply(self, count: u32) -> f64 {
        match self {
            WeightTransform::Raw => f64::from(count),
            WeightTransform::Log1p => libm::log1p(f64::from(count)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WeightTransform::Raw => "raw",
            WeightTransform::Log1p => "log1p",
        }
    }
}

impl FromStr for WeightTransform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" | "none" => Ok(WeightTransform::Raw),
            "log1p" => Ok(WeightTransform::Log1p),
            _ => Err(format!(
                "unknown weight transform `{s}` (expected raw or log1p)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub weight: f64,
}

/// Weighted directed bipartite graph from sample nodes to info nodes.
///
/// Edges are kept sorted by `(src, dst)` in canonical node order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GlobalGraph {
    samples: BTreeSet<String>,
    edges: BTreeMap<(NodeId, NodeId), f64>,
}

const ANCHOR: NodeId = NodeId::Info(InfoNode::Empty);

impl GlobalGraph {
    /// A graph over `samples` with no edges yet.
    pub fn with_samples<I, S>(samples: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        GlobalGraph {
            samples: samples.into_iter().map(Into::into).collect(),
            edges: BTreeMap::new(),
        }
    }

    /// Inserts or replaces the edge `sample -> dst`. Non-positive or
    /// non-finite weights are ignored.
    pub fn insert_edge(&mut self, sample: &str, dst: NodeId, weight: f64) {
        debug_assert!(!dst.is_sample());
        if !(weight > 0.0 && weight.is_finite()) {
            return;
        }
        self.samples.insert(sample.to_string());
        self.edges.insert((NodeId::sample(sample), dst), weight);
    }

    pub fn samples(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(String::as_str)
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    /// Number of distinct info nodes referenced by an edge.
    pub fn n_info(&self) -> usize {
        self.info_nodes().len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_samples() + self.n_info()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().map(|((s, d), &w)| Edge {
            src: s.clone(),
            dst: d.clone(),
            weight: w,
        })
    }

    /// Out-edges of one sample as `(dst, weight)`, in canonical order.
    pub fn out_edges<'a>(
        &'a self,
        sample: &'a str,
    ) -> impl Iterator<Item = (&'a NodeId, f64)> + 'a {
        let lo = (NodeId::sample(sample), NodeId::Sample(String::new()));
        self.edges
            .range(lo..)
            .take_while(move |((s, _), _)| s.sample_id() == Some(sample))
            .map(|((_, d), &w)| (d, w))
    }

    fn info_nodes(&self) -> BTreeSet<&NodeId> {
        self.edges.keys().map(|(_, d)| d).collect()
    }

    /// All nodes in canonical order: samples, keywords, side information.
    pub fn node_order(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self.samples.iter().cloned().map(NodeId::Sample).collect();
        nodes.extend(self.info_nodes().into_iter().cloned());
        nodes
    }

    /// Checks the structural invariants: bipartite direction, positive
    /// weights and out-degree of at least one per sample.
    pub fn validate(&self) -> Result<(), String> {
        let mut with_edges = BTreeSet::new();
        for ((s, d), w) in &self.edges {
            let Some(id) = s.sample_id() else {
                return Err(format!("edge source {s} is not a sample"));
            };
            if d.is_sample() {
                return Err(format!("edge {s} -> {d} points at a sample"));
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(format!("edge {s} -> {d} has weight {w}"));
            }
            if !self.samples.contains(id) {
                return Err(format!("edge source {s} is not a registered sample"));
            }
            with_edges.insert(id);
        }
        match self
            .samples
            .iter()
            .find(|s| !with_edges.contains(s.as_str()))
        {
            Some(s) => Err(format!("sample {s} has no out-edges")),
            None => Ok(()),
        }
    }

    /// Gives every sample without out-edges a unit edge to the EMPTY anchor.
    fn anchor_isolated(&mut self) {
        let connected: BTreeSet<String> = self
            .edges
            .keys()
            .filter_map(|(s, _)| s.sample_id().map(String::from))
            .collect();
        let isolated: Vec<String> = self.samples.difference(&connected).cloned().collect();
        for s in isolated {
            self.edges.insert((NodeId::Sample(s), ANCHOR), 1.0);
        }
    }

    /// Drops anchor edges of samples that have other out-edges.
    fn drop_redundant_anchors(&mut self) {
        let mut degree: BTreeMap<String, usize> = BTreeMap::new();
        for (s, _) in self.edges.keys() {
            if let Some(id) = s.sample_id() {
                *degree.entry(id.to_string()).or_insert(0) += 1;
            }
        }
        self.edges.retain(|(s, d), _| {
            !(*d == ANCHOR
                && degree
                    .get(s.sample_id().unwrap_or(""))
                    .copied()
                    .unwrap_or(0)
                    > 1)
        });
    }

    /// Canonical text form: a `#nodes=<n> samples=<k>` header, then one
    /// `src<TAB>dst<TAB>weight` line per edge. Weights use the shortest
    /// decimal that round-trips.
    pub fn to_edge_list(&self) -> String {
        use core::fmt::Write;
        let mut out = String::with_capacity(32 + self.edges.len() * 32);
        let _ = writeln!(
            out,
            "#nodes={} samples={}",
            self.n_nodes(),
            self.n_samples()
        );
        for ((s, d), w) in &self.edges {
            let _ = writeln!(out, "{s}\t{d}\t{w}");
        }
        out
    }

    /// Parses the output of [`GlobalGraph::to_edge_list`].
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| GraphError::BadHeader(String::new()))?;
        let (nodes, samples) = parse_header(header)?;
        let mut graph = GlobalGraph::default();
        for (idx, line) in lines.enumerate() {
            let line_no = idx + 2;
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| GraphError::BadEdge {
                line: line_no,
                reason: reason.to_string(),
            };
            let mut fields = line.split('\t');
            let (Some(src), Some(dst), Some(w), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(bad("expected three tab-separated fields"));
            };
            let src: NodeId = src.parse()?;
            let dst: NodeId = dst.parse()?;
            let Some(sample) = src.sample_id() else {
                return Err(bad("source is not a sample node"));
            };
            if dst.is_sample() {
                return Err(bad("destination is a sample node"));
            }
            let weight: f64 = w.parse().map_err(|_| bad("weight is not a number"))?;
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(bad("weight must be positive and finite"));
            }
            if graph.edges.contains_key(&(src.clone(), dst.clone())) {
                return Err(bad("duplicate edge"));
            }
            graph.samples.insert(sample.to_string());
            graph.edges.insert((src, dst), weight);
        }
        if graph.n_nodes() != nodes || graph.n_samples() != samples {
            return Err(GraphError::BadHeader(format!(
                "{header} (edges describe {} nodes, {} samples)",
                graph.n_nodes(),
                graph.n_samples()
            )));
        }
        Ok(graph)
    }

    /// SHA-256 of the canonical edge list.
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_edge_list().as_bytes()).into()
    }
}

fn parse_header(line: &str) -> Result<(usize, usize), GraphError> {
    let bad = || GraphError::BadHeader(line.to_string());
    let rest = line.strip_prefix("#nodes=").ok_or_else(bad)?;
    let (nodes, samples) = rest.split_once(" samples=").ok_or_else(bad)?;
    Ok((
        nodes.trim().parse().map_err(|_| bad())?,
        samples.trim().parse().map_err(|_| bad())?,
    ))
}

/// Sample -> keyword edges weighted by keyword frequency.
pub fn build_keyword_graph(
    infos: &BTreeMap<String, IndividualInfo>,
    transform: WeightTransform,
) -> Result<GlobalGraph, GraphError> {
    if infos.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    let mut graph = GlobalGraph::with_samples(infos.keys().cloned());
    for (id, info) in infos {
        for (&word, &count) in &info.keyword_counts {
            graph.insert_edge(id, NodeId::Keyword(word), transform.apply(count));
        }
    }
    graph.anchor_isolated();
    Ok(graph)
}

/// Sample -> metric edges weighted by the metric's count; zero counts add no
/// edge.
pub fn build_sideinfo_graph(
    infos: &BTreeMap<String, IndividualInfo>,
    transform: WeightTransform,
) -> Result<GlobalGraph, GraphError> {
    if infos.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    let mut graph = GlobalGraph::with_samples(infos.keys().cloned());
    for (id, info) in infos {
        for m in Metric::ALL {
            let count = info.metric(m);
            if count > 0 {
                graph.insert_edge(
                    id,
                    NodeId::Info(InfoNode::Metric(m)),
                    transform.apply(count),
                );
            }
        }
    }
    graph.anchor_isolated();
    Ok(graph)
}

/// Unifies two graphs over the same samples by node label.
///
/// Edge sets are disjoint by construction, except for EMPTY anchors, which
/// are kept only for samples that end up with no other out-edge.
pub fn merge_graphs(g1: &GlobalGraph, g2: &GlobalGraph) -> Result<GlobalGraph, GraphError> {
    if g1.samples != g2.samples {
        return Err(GraphError::SampleSetMismatch {
            only_left: g1.samples.difference(&g2.samples).cloned().collect(),
            only_right: g2.samples.difference(&g1.samples).cloned().collect(),
        });
    }
    let mut merged = g1.clone();
    for (key, &w) in &g2.edges {
        merged.edges.entry(key.clone()).or_insert(w);
    }
    merged.drop_redundant_anchors();
    Ok(merged)
}

/// Builds the graph for the requested feature set.
pub fn build_global_graph(
    infos: &BTreeMap<String, IndividualInfo>,
    features: FeatureSet,
    transform: WeightTransform,
) -> Result<GlobalGraph, GraphError> {
    match features {
        FeatureSet::Keywords => build_keyword_graph(infos, transform),
        FeatureSet::SideInfo => build_sideinfo_graph(infos, transform),
        FeatureSet::Both => merge_graphs(
            &build_keyword_graph(infos, transform)?,
            &build_sideinfo_graph(infos, transform)?,
        ),
    }
}
