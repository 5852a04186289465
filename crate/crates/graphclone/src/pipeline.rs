//! Stage functions shared by the subcommands, the end-to-end run and the
//! parameter sweep.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use graphclone_core::detect::{
    combine_vectors, overlap_from_bags, overlap_tokens, ClonePair, OverlapBaselineResult,
    SampleBlock,
};
use graphclone_core::embed::{embed, EmbedConfig, EmbeddingMatrix};
use graphclone_core::eval::{score, CloneType, EvalMetrics, LabeledPair};
use graphclone_core::graph::{build_global_graph, FeatureSet, GlobalGraph, WeightTransform};
use graphclone_core::lexis::{tokenize, IndividualInfo, Metric};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::corpus::{ingest_directory, Corpus};
use crate::formats::{self, hex_digest};
use crate::parallel;

/// Keyword map and side information of every sample, keyed by id.
pub fn extract_infos(corpus: &Corpus) -> Result<BTreeMap<String, IndividualInfo>> {
    corpus
        .samples
        .par_iter()
        .map(|s| {
            IndividualInfo::from_text(&s.text)
                .map(|info| (s.meta.id.clone(), info))
                .map_err(|e| anyhow!("sample {}: {e}", s.meta.id))
        })
        .collect()
}

pub fn build_graph(
    corpus: &Corpus,
    features: FeatureSet,
    transform: WeightTransform,
) -> Result<GlobalGraph> {
    let infos = extract_infos(corpus)?;
    Ok(build_global_graph(&infos, features, transform)?)
}

/// Embeds `graph` and rounds to the stored precision, so detection on the
/// in-memory matrix equals detection on the written file.
pub fn embed_stored(graph: &GlobalGraph, cfg: &EmbedConfig) -> Result<EmbeddingMatrix> {
    let mut e = embed(graph, cfg)?;
    formats::round_to_f32(&mut e);
    Ok(e)
}

/// JSON dump of one file's keyword map and side information.
pub fn lexis_dump(text: &str) -> Result<serde_json::Value> {
    let info = IndividualInfo::from_text(text)?;
    let mut v = json!({ "keywords": info.keyword_counts });
    for m in Metric::ALL {
        v[m.label().to_ascii_lowercase()] = json!(info.metric(m));
    }
    Ok(v)
}

/// Overlap baseline over candidate pairs; pairs naming unknown ids are
/// skipped with a warning.
pub fn baseline(
    corpus: &Corpus,
    pairs: &[(String, String)],
    theta: f64,
) -> Result<Vec<OverlapBaselineResult>> {
    let texts: BTreeMap<&str, &str> = corpus
        .samples
        .iter()
        .map(|s| (s.meta.id.as_str(), s.text.as_str()))
        .collect();
    let mut streams = BTreeMap::new();
    for (a, b) in pairs {
        for id in [a, b] {
            if !streams.contains_key(id.as_str()) {
                if let Some(text) = texts.get(id.as_str()) {
                    streams.insert(
                        id.as_str(),
                        tokenize(text).map_err(|e| anyhow!("sample {id}: {e}"))?,
                    );
                }
            }
        }
    }
    let bags: BTreeMap<&str, BTreeMap<&str, usize>> = streams
        .iter()
        .map(|(id, s)| (*id, overlap_tokens(s)))
        .collect();
    let mut out = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        let (Some(ba), Some(bb)) = (bags.get(a.as_str()), bags.get(b.as_str())) else {
            log::warn!("baseline: skipping pair ({a}, {b}) with an unknown id");
            continue;
        };
        out.push(
            overlap_from_bags(a, ba, b, bb, theta).map_err(|e| anyhow!("pair ({a}, {b}): {e}"))?,
        );
    }
    Ok(out)
}

pub fn baseline_csv(results: &[OverlapBaselineResult]) -> String {
    let mut s = String::from("id_a,id_b,shared,t_max,ratio,is_clone\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{:.6},{}",
            r.id_a, r.id_b, r.shared, r.t_max, r.ratio, r.is_clone
        );
    }
    s
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex_digest(&Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub samples: usize,
    pub loc: usize,
    pub files_skipped: usize,
    pub nodes: usize,
    pub edges: usize,
    pub pairs: usize,
    pub features: &'static str,
    pub dim: usize,
    pub threshold: f64,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
    /// SHA-256 of every output file, by file name.
    pub digests: BTreeMap<String, String>,
    pub metrics: Option<serde_json::Value>,
    pub out_dir: PathBuf,
}

impl RunReport {
    pub fn stage_sum(&self) -> f64 {
        self.stages.iter().map(|s| s.seconds).sum()
    }
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const GRAPH_FILE: &str = "graph.tsv";
pub const VECTORS_FILE: &str = "vectors.gemb";
pub const COMBINED_FILE: &str = "combined.gemb";
pub const CLONES_FILE: &str = "clones.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const REPORT_FILE: &str = "report.json";
pub const CONFIG_FILE: &str = "config.kv";

struct Stages {
    timings: Vec<StageTiming>,
}

impl Stages {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        log::info!("stage {stage} started");
        let out = f().with_context(|| format!("stage {stage} failed"))?;
        let seconds = t.elapsed().as_secs_f64();
        crate::logging::event(
            log::Level::Info,
            "stage_done",
            &[
                ("stage", stage.to_string()),
                ("seconds", format!("{seconds:.3}")),
            ],
        );
        self.timings.push(StageTiming { stage, seconds });
        Ok(out)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_labels(path: &Path) -> Result<Vec<LabeledPair>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    formats::parse_labels(&text)
}

/// Labeled pairs by first id, for cheap membership tests while streaming.
pub struct LabelIndex(BTreeMap<String, BTreeSet<String>>);

impl LabelIndex {
    pub fn new(labels: &[LabeledPair]) -> Self {
        let mut m: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for l in labels {
            m.entry(l.id_a.clone()).or_default().insert(l.id_b.clone());
        }
        LabelIndex(m)
    }

    pub fn contains(&self, a: &str, b: &str) -> bool {
        self.0.get(a).is_some_and(|s| s.contains(b))
    }
}

/// Scores a streamed report from its labeled pairs and its total size.
pub fn score_streamed(
    labeled_hits: &[ClonePair],
    total: usize,
    labels: &[LabeledPair],
    known: &BTreeSet<String>,
) -> Result<EvalMetrics> {
    let mut m = score(labeled_hits, labels, Some(known))?;
    m.unlabeled = total - labeled_hits.len();
    Ok(m)
}

/// Ingest, lexis, graph, embed, detect and, with labels, eval. Writes every
/// artifact plus `report.json` into `cfg.out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let root = cfg.root.clone().expect("validated");
    let out = &cfg.out_dir;
    let start = Instant::now();
    let mut st = Stages {
        timings: Vec::new(),
    };

    let labels = st.run("setup", || {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        write(&out.join(CONFIG_FILE), cfg.to_kv().as_bytes())?;
        cfg.labels.as_deref().map(read_labels).transpose()
    })?;
    let corpus = st.run("ingest", || {
        let c = ingest_directory(&root, cfg.mode, &cfg.ext)?;
        c.write_manifest(&out.join(MANIFEST_FILE))?;
        Ok(c)
    })?;
    let infos = st.run("lexis", || extract_infos(&corpus))?;
    let graph = st.run("graph", || {
        let g = build_global_graph(&infos, cfg.features, cfg.weight_transform)?;
        write(&out.join(GRAPH_FILE), g.to_edge_list().as_bytes())?;
        Ok(g)
    })?;
    let mut vectors = st.run("embed", || {
        let e = embed_stored(&graph, &cfg.embed)?;
        formats::save_gemb(&out.join(VECTORS_FILE), &e)?;
        Ok(e)
    })?;
    if let Some(ind) = &cfg.individual {
        vectors = st.run("combine", || {
            let individual = formats::load_individual_vectors(ind)?;
            let mut c = combine_vectors(&vectors, &individual, cfg.combine_mode)?;
            formats::round_to_f32(&mut c);
            formats::save_gemb(&out.join(COMBINED_FILE), &c)?;
            Ok(c)
        })?;
    }
    let (streamed, labeled_hits) = st.run("detect", || {
        let mut q = cfg.query();
        if let Some(p) = &cfg.pairs {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            q.scope = graphclone_core::detect::Scope::Pairs(formats::parse_pairs(&text)?);
        }
        let index = labels.as_deref().map(LabelIndex::new);
        let path = out.join(CLONES_FILE);
        let file =
            fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        let block = SampleBlock::from_embedding(&vectors);
        parallel::detect_to_writer(&block, &q, file, |a, b| {
            index.as_ref().is_some_and(|i| i.contains(a, b))
        })
    })?;
    let metrics = match &labels {
        Some(labels) => Some(st.run("eval", || {
            let known: BTreeSet<String> = corpus.metas().map(|m| m.id.clone()).collect();
            let m = formats::metrics_json(&score_streamed(
                &labeled_hits,
                streamed.pairs,
                labels,
                &known,
            )?);
            write(
                &out.join(METRICS_FILE),
                serde_json::to_string_pretty(&m)?.as_bytes(),
            )?;
            Ok(m)
        })?),
        None => None,
    };
    let digests = st.run("digest", || {
        let mut d = BTreeMap::new();
        d.insert(CLONES_FILE.to_string(), hex_digest(&streamed.sha256));
        let mut names = vec![CONFIG_FILE, MANIFEST_FILE, GRAPH_FILE, VECTORS_FILE];
        if cfg.individual.is_some() {
            names.push(COMBINED_FILE);
        }
        if labels.is_some() {
            names.push(METRICS_FILE);
        }
        for name in names {
            d.insert(name.to_string(), sha256_file(&out.join(name))?);
        }
        Ok(d)
    })?;

    let report = RunReport {
        samples: corpus.len(),
        loc: corpus.total_loc(),
        files_skipped: corpus.skipped.len(),
        nodes: graph.n_nodes(),
        edges: graph.n_edges(),
        pairs: streamed.pairs,
        features: cfg.features.name(),
        dim: cfg.embed.dim,
        threshold: cfg.threshold,
        stages: st.timings,
        total_seconds: start.elapsed().as_secs_f64(),
        digests,
        metrics,
        out_dir: out.clone(),
    };
    write(
        &out.join(REPORT_FILE),
        serde_json::to_string_pretty(&report)?.as_bytes(),
    )?;
    Ok(report)
}

/// One (feature set, dim) cell of a sweep at every threshold.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub features: FeatureSet,
    pub dim: usize,
    pub threshold: f64,
    pub pairs: usize,
    pub metrics: Option<EvalMetrics>,
}

/// Embeds once per (feature set, dim) and filters the lowest-threshold
/// report for the higher thresholds.
pub fn sweep(cfg: &RunConfig) -> Result<Vec<SweepCell>> {
    cfg.validate()?;
    let root = cfg.root.clone().expect("validated");
    let corpus = ingest_directory(&root, cfg.mode, &cfg.ext).context("stage ingest failed")?;
    let infos = extract_infos(&corpus).context("stage lexis failed")?;
    let labels = cfg.labels.as_deref().map(read_labels).transpose()?;
    let index = labels.as_deref().map(LabelIndex::new);
    let known: BTreeSet<String> = corpus.metas().map(|m| m.id.clone()).collect();
    let mut thresholds = cfg.thresholds.clone();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let lowest = *thresholds
        .first()
        .ok_or_else(|| anyhow!("sweep needs at least one threshold"))?;

    let mut cells = Vec::new();
    for &features in &cfg.feature_sets {
        let graph = build_global_graph(&infos, features, cfg.weight_transform)
            .context("stage graph failed")?;
        for &dim in &cfg.dims {
            let e = embed_stored(&graph, &EmbedConfig { dim, ..cfg.embed })
                .context("stage embed failed")?;
            let block = SampleBlock::from_embedding(&e);
            if block.len() < 2 {
                return Err(
                    graphclone_core::detect::DetectError::TooFewSamples(block.len()).into(),
                );
            }
            // One pass at the lowest threshold serves every threshold.
            let mut counts = vec![0usize; thresholds.len()];
            let mut hits = Vec::new();
            parallel::for_each_pair(&block, lowest, cfg.tile_size, |i, j, s| {
                for (c, &t) in counts.iter_mut().zip(&thresholds) {
                    if s >= t {
                        *c += 1;
                    }
                }
                if index
                    .as_ref()
                    .is_some_and(|x| x.contains(block.id(i), block.id(j)))
                {
                    hits.push(block.pair(i, j, s));
                }
                Ok::<(), anyhow::Error>(())
            })
            .context("stage detect failed")?;
            for (&threshold, &pairs) in thresholds.iter().zip(&counts) {
                let metrics = match &labels {
                    Some(l) => {
                        let kept: Vec<ClonePair> = hits
                            .iter()
                            .filter(|p| p.similarity >= threshold)
                            .cloned()
                            .collect();
                        Some(score_streamed(&kept, pairs, l, &known)?)
                    }
                    None => None,
                };
                log::info!(
                    "sweep {} d={dim} t={threshold}: {pairs} pairs",
                    features.name()
                );
                cells.push(SweepCell {
                    features,
                    dim,
                    threshold,
                    pairs,
                    metrics,
                });
            }
        }
    }
    Ok(cells)
}

/// Rows are metrics, columns dimensions, one block per feature set and
/// threshold. Undefined values are empty.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let dims: Vec<usize> = cells
        .iter()
        .map(|c| c.dim)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut s = String::from("features,threshold,metric");
    for d in &dims {
        let _ = write!(s, ",d{d}");
    }
    s.push('\n');

    let mut blocks: Vec<(FeatureSet, f64)> = Vec::new();
    for c in cells {
        if !blocks
            .iter()
            .any(|&(f, t)| f == c.features && t == c.threshold)
        {
            blocks.push((c.features, c.threshold));
        }
    }
    let types: BTreeSet<CloneType> = cells
        .iter()
        .filter_map(|c| c.metrics.as_ref())
        .flat_map(|m| m.recall_by_type.keys().copied())
        .collect();
    let fmt = |v: Option<f64>, integral: bool| match v {
        Some(v) if integral => format!("{v}"),
        Some(v) => format!("{v:.4}"),
        None => String::new(),
    };
    for (features, threshold) in blocks {
        let row = |name: String, value: &dyn Fn(&SweepCell) -> Option<f64>| {
            let integral = name == "pairs";
            let mut line = format!("{},{threshold},{name}", features.name());
            for d in &dims {
                let cell = cells
                    .iter()
                    .find(|c| c.features == features && c.threshold == threshold && c.dim == *d);
                let _ = write!(line, ",{}", fmt(cell.and_then(value), integral));
            }
            line.push('\n');
            line
        };
        for t in &types {
            s += &row(format!("recall_{}", t.label()), &|c| {
                c.metrics.as_ref()?.recall_by_type.get(t).copied()
            });
        }
        if !types.is_empty() {
            s += &row("recall".into(), &|c| c.metrics.as_ref().map(|m| m.recall));
            s += &row("precision".into(), &|c| c.metrics.as_ref()?.precision);
            s += &row("f1".into(), &|c| c.metrics.as_ref().map(|m| m.f1));
        }
        s += &row("pairs".into(), &|c| Some(c.pairs as f64));
    }
    s
}
