use std::collections::BTreeSet;

use graphclone_core::detect::{
    cosine, detect_in_block, ClonePair, SampleBlock, Scope, SimilarityQuery,
};
use proptest::prelude::*;

fn unit_vectors(n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, dim), n).prop_map(|vs| {
        vs.into_iter()
            .map(|v| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                v.into_iter().map(|x| x / n).collect()
            })
            .collect()
    })
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i:04}")).collect()
}

fn block(vectors: &[Vec<f64>]) -> SampleBlock {
    let ids = ids(vectors.len());
    SampleBlock::from_rows(
        vectors[0].len(),
        ids.iter()
            .map(String::as_str)
            .zip(vectors.iter().map(Vec::as_slice)),
    )
}

fn brute_force(vectors: &[Vec<f64>], threshold: f64) -> Vec<ClonePair> {
    let ids = ids(vectors.len());
    let mut out = Vec::new();
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let s = cosine(&vectors[i], &vectors[j]).value;
            if s >= threshold {
                out.push(ClonePair::new(&ids[i], &ids[j], s).unwrap());
            }
        }
    }
    out
}

fn query(threshold: f64, tile_size: usize) -> SimilarityQuery {
    SimilarityQuery {
        threshold,
        scope: Scope::AllPairs,
        tile_size,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn tiled_scan_equals_nested_loops(
        vectors in (200usize..=500).prop_flat_map(|n| unit_vectors(n, 8)),
        threshold in 0.3f64..0.95,
    ) {
        let want = brute_force(&vectors, threshold);
        let b = block(&vectors);
        for tile in [1, 7, 4096] {
            let got = detect_in_block(&b, &query(threshold, tile)).unwrap();
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                prop_assert_eq!(g.key(), w.key());
                prop_assert!((g.similarity - w.similarity).abs() <= 1e-9);
            }
        }
    }
}

proptest! {
    #[test]
    fn thresholds_nest(vectors in unit_vectors(60, 4)) {
        let b = block(&vectors);
        let keys = |t: f64| -> BTreeSet<(String, String)> {
            detect_in_block(&b, &query(t, 16))
                .unwrap()
                .into_iter()
                .map(|p| (p.id_a, p.id_b))
                .collect()
        };
        let (k8, k7, k6) = (keys(0.8), keys(0.7), keys(0.6));
        prop_assert!(k8.is_subset(&k7) && k7.is_subset(&k6));
    }

    #[test]
    fn row_order_does_not_change_similarities(vectors in unit_vectors(40, 6), rot in 0usize..40) {
        let ids = ids(vectors.len());
        let mut order: Vec<usize> = (0..vectors.len()).collect();
        order.rotate_left(rot);
        order.reverse();
        let shuffled = SampleBlock::from_rows(
            6,
            order.iter().map(|&i| (ids[i].as_str(), vectors[i].as_slice())),
        );
        let a = detect_in_block(&block(&vectors), &query(0.2, 7)).unwrap();
        let b = detect_in_block(&shuffled, &query(0.2, 7)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(x in prop::collection::vec(-5.0f64..5.0, 5), y in prop::collection::vec(-5.0f64..5.0, 5)) {
        let a = cosine(&x, &y).value;
        prop_assert_eq!(a, cosine(&y, &x).value);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
    }

    #[test]
    fn top_k_is_bounded(vectors in unit_vectors(50, 4), k in 1usize..6) {
        let b = block(&vectors);
        let q = SimilarityQuery { threshold: 0.1, scope: Scope::TopK(k), tile_size: 16 };
        let pairs = detect_in_block(&b, &q).unwrap();
        let all: BTreeSet<_> = brute_force(&vectors, 0.1).into_iter().map(|p| (p.id_a, p.id_b)).collect();
        for p in &pairs {
            prop_assert!(all.contains(&(p.id_a.clone(), p.id_b.clone())));
        }
        // each sample contributes at most k of its own neighbours
        prop_assert!(pairs.len() <= k * vectors.len());
    }
}
