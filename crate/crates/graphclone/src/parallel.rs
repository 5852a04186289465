//! Data-parallel detection over tiles of the sample block.
//!
//! The upper triangle is processed in bands of `tile_size` rows. Column tiles
//! of a band are scanned in parallel into private buffers, the band is sorted
//! and handed to the caller before the next band starts, so memory is bounded
//! by one band and the output order does not depend on the worker count.

use std::io::{self, Write};

use anyhow::Result;
use graphclone_core::detect::{
    canonicalize_pairs, detect_in_block, ClonePair, DetectError, SampleBlock, Scope,
    SimilarityQuery,
};
use graphclone_core::embed::EmbeddingMatrix;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

/// Passes every all-pairs hit `(i, j, similarity)` with `i < j` to `sink`
/// in `(i, j)` order. Returns the number of hits.
pub fn for_each_pair<E>(
    block: &SampleBlock,
    threshold: f64,
    tile_size: usize,
    mut sink: impl FnMut(usize, usize, f64) -> Result<(), E>,
) -> Result<usize, E> {
    let n = block.len();
    let tile = tile_size.max(1);
    let mut total = 0;
    for r0 in (0..n).step_by(tile) {
        let rows = r0..(r0 + tile).min(n);
        let col_starts: Vec<usize> = (r0..n).step_by(tile).collect();
        let found: Vec<Vec<(u32, u32, f64)>> = col_starts
            .into_par_iter()
            .map(|c0| {
                let mut buf = Vec::new();
                block.scan_tile_indices(rows.clone(), c0..(c0 + tile).min(n), threshold, &mut buf);
                buf
            })
            .collect();
        let mut band: Vec<(u32, u32, f64)> = found.into_iter().flatten().collect();
        band.par_sort_unstable_by_key(|&(i, j, _)| (i, j));
        total += band.len();
        for (i, j, s) in band {
            sink(i as usize, j as usize, s)?;
        }
    }
    Ok(total)
}

/// Same contract as the sequential `detect_in_block`.
pub fn detect_block(
    block: &SampleBlock,
    q: &SimilarityQuery,
) -> Result<Vec<ClonePair>, DetectError> {
    q.validate()?;
    if block.len() < 2 {
        return Err(DetectError::TooFewSamples(block.len()));
    }
    match &q.scope {
        Scope::AllPairs => {
            let mut out = Vec::new();
            for_each_pair(block, q.threshold, q.tile_size, |i, j, s| {
                out.push(block.pair(i, j, s));
                Ok::<(), DetectError>(())
            })?;
            Ok(out)
        }
        Scope::TopK(k) => {
            let rows: Vec<Vec<ClonePair>> = (0..block.len())
                .into_par_iter()
                .map(|i| block.top_k(i, *k, q.threshold))
                .collect();
            let mut out: Vec<ClonePair> = rows.into_iter().flatten().collect();
            canonicalize_pairs(&mut out);
            Ok(out)
        }
        Scope::Pairs(_) => detect_in_block(block, q),
    }
}

pub fn detect(e: &EmbeddingMatrix, q: &SimilarityQuery) -> Result<Vec<ClonePair>, DetectError> {
    detect_block(&SampleBlock::from_embedding(e), q)
}

/// Forwards writes and hashes every byte.
pub struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> HashingWriter<W> {
    pub fn new(inner: W) -> Self {
        HashingWriter {
            inner,
            hasher: Sha256::new(),
        }
    }

    pub fn finish(mut self) -> io::Result<[u8; 32]> {
        self.inner.flush()?;
        Ok(self.hasher.finalize().into())
    }
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

/// Outcome of a streamed detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Streamed {
    pub pairs: usize,
    pub sha256: [u8; 32],
}

/// A CSV field, quoted when it holds a delimiter, quote or line break.
pub fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// Appends `{:.6}` of `s` without going through the formatter when the
/// rounding is unambiguous.
pub fn push_similarity(buf: &mut Vec<u8>, s: f64) {
    let scaled = s * 1e6;
    let rounded = scaled.round();
    if scaled.is_nan()
        || scaled.abs() >= 1e9
        || ((scaled - scaled.trunc()).abs() - 0.5).abs() < 1e-6
    {
        buf.extend_from_slice(format!("{s:.6}").as_bytes());
        return;
    }
    let mut micro = rounded as i64;
    if micro < 0 {
        buf.push(b'-');
        micro = -micro;
    } else if s.is_sign_negative() {
        // -0.0000001 rounds to "-0.000000"
        buf.push(b'-');
    }
    let (int, frac) = (micro / 1_000_000, micro % 1_000_000);
    buf.extend_from_slice(int.to_string().as_bytes());
    buf.push(b'.');
    let digits = [
        frac / 100_000,
        frac / 10_000 % 10,
        frac / 1_000 % 10,
        frac / 100 % 10,
        frac / 10 % 10,
        frac % 10,
    ];
    buf.extend(digits.iter().map(|&d| b'0' + d as u8));
}

/// Writes the clone report CSV for `q` to `out` without holding all pairs
/// in memory. `keep` sees every reported pair and decides which to return.
/// The bytes equal [`crate::formats::clone_report_csv`] of the same pairs.
pub fn detect_to_writer<W: Write>(
    block: &SampleBlock,
    q: &SimilarityQuery,
    out: W,
    mut keep: impl FnMut(&str, &str) -> bool,
) -> Result<(Streamed, Vec<ClonePair>)> {
    q.validate()?;
    if block.len() < 2 {
        return Err(DetectError::TooFewSamples(block.len()).into());
    }
    let fields: Vec<String> = (0..block.len()).map(|i| csv_field(block.id(i))).collect();
    let mut w = HashingWriter::new(out);
    let mut buf: Vec<u8> = Vec::with_capacity(1 << 20);
    buf.extend_from_slice(b"id_a,id_b,similarity\n");
    let mut kept = Vec::new();
    let mut emit = |i: usize, j: usize, s: f64| -> io::Result<()> {
        buf.extend_from_slice(fields[i].as_bytes());
        buf.push(b',');
        buf.extend_from_slice(fields[j].as_bytes());
        buf.push(b',');
        push_similarity(&mut buf, s);
        buf.push(b'\n');
        if buf.len() >= 1 << 20 {
            w.write_all(&buf)?;
            buf.clear();
        }
        if keep(block.id(i), block.id(j)) {
            kept.push(block.pair(i, j, s));
        }
        Ok(())
    };
    let pairs = match &q.scope {
        Scope::AllPairs => for_each_pair(block, q.threshold, q.tile_size, &mut emit)?,
        _ => {
            let found = detect_block(block, q)?;
            for p in &found {
                let (i, j) = (block.index_of(&p.id_a), block.index_of(&p.id_b));
                emit(
                    i.expect("reported id"),
                    j.expect("reported id"),
                    p.similarity,
                )?;
            }
            found.len()
        }
    };
    w.write_all(&buf)?;
    let sha256 = w.finish()?;
    Ok((Streamed { pairs, sha256 }, kept))
}

/// Caps the global worker pool. Only the first call takes effect.
pub fn set_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            log::debug!("thread pool already configured: {e}");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::clone_report_csv;

    fn block(n: usize) -> SampleBlock {
        let rows: Vec<(String, Vec<f64>)> = (0..n)
            .map(|i| {
                let x = i as f64;
                (
                    format!("s{i:03}"),
                    vec![(x * 0.37).sin(), (x * 1.3).cos(), (x * 0.11).sin() + 0.2],
                )
            })
            .collect();
        SampleBlock::from_rows(3, rows.iter().map(|(id, v)| (id.as_str(), v.as_slice())))
    }

    #[test]
    fn matches_sequential_scan() {
        let b = block(60);
        for tile in [1, 7, 4096] {
            for scope in [Scope::AllPairs, Scope::TopK(3)] {
                let q = SimilarityQuery {
                    threshold: 0.5,
                    scope,
                    tile_size: tile,
                };
                assert_eq!(
                    detect_block(&b, &q).unwrap(),
                    detect_in_block(&b, &q).unwrap()
                );
            }
        }
    }

    #[test]
    fn streamed_report_equals_buffered() {
        let b = block(80);
        for tile in [1, 9, 4096] {
            let q = SimilarityQuery {
                threshold: 0.3,
                scope: Scope::AllPairs,
                tile_size: tile,
            };
            let mut bytes = Vec::new();
            let (s, kept) = detect_to_writer(&b, &q, &mut bytes, |a, _| a == "s001").unwrap();
            let all = detect_in_block(&b, &q).unwrap();
            let expected = clone_report_csv(&all);
            assert_eq!(String::from_utf8(bytes).unwrap(), expected);
            assert_eq!(s.pairs, all.len());
            assert_eq!(
                s.sha256,
                <[u8; 32]>::from(Sha256::digest(expected.as_bytes()))
            );
            assert_eq!(
                kept,
                all.into_iter()
                    .filter(|p| p.id_a == "s001")
                    .collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn fast_similarity_format_matches_formatter() {
        let mut x: u64 = 0x9e37_79b9_7f4a_7c15;
        let mut values = vec![
            0.0, -0.0, 1.0, -1.0, 0.5, 0.0000005, 0.0000015, -0.0000004, 0.9999995, 0.7,
        ];
        for _ in 0..200_000 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            values.push((x >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0);
        }
        for s in values {
            let mut buf = Vec::new();
            push_similarity(&mut buf, s);
            assert_eq!(String::from_utf8(buf).unwrap(), format!("{s:.6}"), "{s:e}");
        }
    }

    #[test]
    fn quoting_follows_csv_rules() {
        assert_eq!(csv_field("a/B.java#0"), "a/B.java#0");
        assert_eq!(csv_field("a,b#0"), "\"a,b#0\"");
        assert_eq!(csv_field("q\"#1"), "\"q\"\"#1\"");
    }

    #[test]
    fn rejects_single_sample() {
        assert_eq!(
            detect_block(&block(1), &SimilarityQuery::all_pairs(0.7)).unwrap_err(),
            DetectError::TooFewSamples(1)
        );
    }
}
