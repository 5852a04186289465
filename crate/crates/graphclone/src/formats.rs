//! On-disk formats: edge lists, GEMB embeddings, TSV vectors and the CSV and
//! JSON files exchanged between pipeline stages.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use graphclone_core::detect::{ClonePair, IndividualVectors};
use graphclone_core::embed::{EmbedConfig, EmbeddingMatrix};
use graphclone_core::eval::{CloneType, EvalMetrics, LabeledPair};
use graphclone_core::graph::{GlobalGraph, NodeId};
use graphclone_core::linalg::Dense;
use serde_json::json;

pub const GEMB_MAGIC: &[u8; 4] = b"GEMB";
pub const GEMB_VERSION: u32 = 1;

pub fn write_edge_list(path: &Path, graph: &GlobalGraph) -> Result<()> {
    fs::write(path, graph.to_edge_list()).with_context(|| format!("writing {}", path.display()))
}

pub fn read_edge_list(path: &Path) -> Result<GlobalGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    GlobalGraph::parse_edge_list(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Rounds every entry to `f32`, the precision embeddings are stored at.
pub fn round_to_f32(e: &mut EmbeddingMatrix) {
    let (rows, cols) = (e.vectors.rows(), e.vectors.cols());
    let data = std::mem::replace(&mut e.vectors, Dense::zeros(0, 0)).into_vec();
    e.vectors = Dense::from_row_major(
        rows,
        cols,
        data.into_iter().map(|v| v as f32 as f64).collect(),
    );
}

/// Binary layout, little-endian: magic, `u32` version, `u64` n, `u32` d,
/// `u64` seed, 32-byte digest, n length-prefixed (`u32`) UTF-8 node ids, then
/// n·d `f32` values row-major.
pub fn write_gemb<W: Write>(mut w: W, e: &EmbeddingMatrix) -> io::Result<()> {
    w.write_all(GEMB_MAGIC)?;
    w.write_all(&GEMB_VERSION.to_le_bytes())?;
    w.write_all(&(e.len() as u64).to_le_bytes())?;
    w.write_all(&(e.dim() as u32).to_le_bytes())?;
    w.write_all(&e.config.seed.to_le_bytes())?;
    w.write_all(&e.graph_digest)?;
    for node in &e.node_index {
        let id = node.to_string();
        w.write_all(&(id.len() as u32).to_le_bytes())?;
        w.write_all(id.as_bytes())?;
    }
    let mut buf = Vec::with_capacity(e.len() * e.dim() * 4);
    for v in e.vectors.as_slice() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()
}

fn take<const N: usize>(bytes: &[u8], at: &mut usize) -> Result<[u8; N]> {
    let end = *at + N;
    ensure!(end <= bytes.len(), "truncated GEMB data at byte {at}");
    let out = bytes[*at..end].try_into().expect("length checked");
    *at = end;
    Ok(out)
}

pub fn parse_gemb(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut at = 0;
    ensure!(&take::<4>(bytes, &mut at)? == GEMB_MAGIC, "not a GEMB file");
    let version = u32::from_le_bytes(take(bytes, &mut at)?);
    ensure!(
        version == GEMB_VERSION,
        "unsupported GEMB version {version}"
    );
    let n = u64::from_le_bytes(take(bytes, &mut at)?) as usize;
    let d = u32::from_le_bytes(take(bytes, &mut at)?) as usize;
    let seed = u64::from_le_bytes(take(bytes, &mut at)?);
    let digest: [u8; 32] = take(bytes, &mut at)?;
    let mut node_index = Vec::with_capacity(n.min(bytes.len()));
    for _ in 0..n {
        let len = u32::from_le_bytes(take(bytes, &mut at)?) as usize;
        ensure!(at + len <= bytes.len(), "truncated node id table");
        let id = std::str::from_utf8(&bytes[at..at + len]).context("node id is not UTF-8")?;
        node_index.push(
            id.parse::<NodeId>()
                .with_context(|| format!("bad node id `{id}`"))?,
        );
        at += len;
    }
    ensure!(
        bytes.len() - at == n * d * 4,
        "expected {} vector bytes, found {}",
        n * d * 4,
        bytes.len() - at
    );
    let data = bytes[at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("chunk of 4")) as f64)
        .collect();
    Ok(EmbeddingMatrix {
        node_index,
        vectors: Dense::from_row_major(n, d, data),
        config: EmbedConfig {
            dim: d,
            seed,
            ..EmbedConfig::default()
        },
        graph_digest: digest,
        combination: None,
    })
}

pub fn save_gemb(path: &Path, e: &EmbeddingMatrix) -> Result<()> {
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_gemb(io::BufWriter::new(f), e).with_context(|| format!("writing {}", path.display()))
}

pub fn load_gemb(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_gemb(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// One line per node: the serialized node id, then the values.
pub fn vectors_tsv(e: &EmbeddingMatrix) -> String {
    let mut out = String::new();
    for (i, node) in e.node_index.iter().enumerate() {
        out.push_str(&node.to_string());
        for v in e.row(i) {
            out.push('\t');
            out.push_str(&(*v as f32).to_string());
        }
        out.push('\n');
    }
    out
}

/// Sample vectors from TSV lines `id<TAB>x1<TAB>...`. Ids may carry the `s:`
/// prefix; keyword and info rows (`k:`, `i:`) are ignored.
pub fn parse_vectors_tsv(text: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        if id.starts_with("k:") || id.starts_with("i:") {
            continue;
        }
        let id = id.strip_prefix("s:").unwrap_or(id);
        let values = fields
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("line {}: bad number", n + 1))?;
        ensure!(!values.is_empty(), "line {}: no values", n + 1);
        if out.insert(id.to_string(), values).is_some() {
            bail!("line {}: duplicate id {id}", n + 1);
        }
    }
    Ok(out)
}

/// Individual vectors from a GEMB or TSV file (sniffed by the magic bytes).
pub fn load_individual_vectors(path: &Path) -> Result<IndividualVectors> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .with_context(|| format!("reading {}", path.display()))?;
    let vectors = if bytes.starts_with(GEMB_MAGIC) {
        IndividualVectors::from_embedding(&parse_gemb(&bytes)?)
    } else {
        IndividualVectors::new(parse_vectors_tsv(&String::from_utf8_lossy(&bytes))?)
    };
    vectors.map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// `id_a,id_b,similarity` with six decimals, header first.
pub fn clone_report_csv(pairs: &[ClonePair]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id_a", "id_b", "similarity"])
        .expect("in-memory write");
    for p in pairs {
        w.write_record([
            p.id_a.as_str(),
            p.id_b.as_str(),
            &format!("{:.6}", p.similarity),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub fn parse_clone_report(text: &str) -> Result<Vec<ClonePair>> {
    let mut out = Vec::new();
    for (n, rec) in reader(text).records().enumerate() {
        let rec = rec?;
        ensure!(
            rec.len() >= 3,
            "row {}: expected id_a,id_b,similarity",
            n + 1
        );
        let s: f64 = rec[2]
            .parse()
            .with_context(|| format!("row {}: bad similarity", n + 1))?;
        out.extend(ClonePair::new(&rec[0], &rec[1], s));
    }
    Ok(out)
}

/// Candidate pairs: the first two columns of a CSV with a header row.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, rec) in reader(text).records().enumerate() {
        let rec = rec?;
        ensure!(rec.len() >= 2, "row {}: expected id_a,id_b", n + 1);
        out.push((rec[0].to_string(), rec[1].to_string()));
    }
    Ok(out)
}

pub fn parse_labels(text: &str) -> Result<Vec<LabeledPair>> {
    let mut out = Vec::new();
    for (n, rec) in reader(text).records().enumerate() {
        let rec = rec?;
        ensure!(rec.len() >= 3, "row {}: expected id_a,id_b,type", n + 1);
        let t: CloneType = rec[2]
            .parse()
            .map_err(|e: String| anyhow::anyhow!("row {}: {e}", n + 1))?;
        ensure!(rec[0] != rec[1], "row {}: self pair {}", n + 1, &rec[0]);
        out.push(LabeledPair::new(&rec[0], &rec[1], t));
    }
    Ok(out)
}

pub fn labels_csv(labels: &[LabeledPair]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["id_a", "id_b", "type"])
        .expect("in-memory write");
    for l in labels {
        w.write_record([l.id_a.as_str(), l.id_b.as_str(), l.clone_type.label()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

pub fn metrics_json(m: &EvalMetrics) -> serde_json::Value {
    let by_type = |map: &BTreeMap<CloneType, f64>| -> serde_json::Map<String, serde_json::Value> {
        map.iter()
            .map(|(t, v)| (t.label().to_string(), json!(v)))
            .collect()
    };
    let counts: serde_json::Map<String, serde_json::Value> = m
        .labeled_by_type
        .iter()
        .map(|(t, n)| (t.label().to_string(), json!(n)))
        .collect();
    json!({
        "recall_by_type": by_type(&m.recall_by_type),
        "labeled_by_type": counts,
        "recall": m.recall,
        "precision": m.precision,
        "f1": m.f1,
        "tp": m.tp,
        "fp": m.fp,
        "fn": m.fn_,
        "unlabeled": m.unlabeled,
    })
}

pub fn hex_digest(bytes: &[u8]) -> String {
    hex::encode(bytes)
}
