//! Seeded audit samples of a clone report for manual precision review.

use std::collections::BTreeMap;

use graphclone_core::detect::ClonePair;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::SampleMeta;

/// `k` pairs drawn uniformly without replacement, in report order. A `k`
/// above the report size is clamped with a warning.
pub fn export_audit_sample(report: &[ClonePair], k: usize, seed: u64) -> Vec<ClonePair> {
    let k = if k > report.len() {
        log::warn!(
            "audit sample of {k} requested from a report of {} pairs; taking all",
            report.len()
        );
        report.len()
    } else {
        k
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, report.len(), k).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| report[i].clone()).collect()
}

/// CSV with each side's source path and line span. Ids missing from
/// `metas` get empty location columns.
pub fn audit_csv(sample: &[ClonePair], metas: &BTreeMap<String, SampleMeta>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "id_a",
        "path_a",
        "start_a",
        "end_a",
        "id_b",
        "path_b",
        "start_b",
        "end_b",
        "similarity",
    ])
    .expect("in-memory write");
    let loc = |id: &str| match metas.get(id) {
        Some(m) => [
            m.source_path.clone(),
            m.start_line.to_string(),
            m.end_line.to_string(),
        ],
        None => Default::default(),
    };
    for p in sample {
        let [pa, sa, ea] = loc(&p.id_a);
        let [pb, sb, eb] = loc(&p.id_b);
        w.write_record([
            p.id_a.as_str(),
            &pa,
            &sa,
            &ea,
            p.id_b.as_str(),
            &pb,
            &sb,
            &eb,
            &format!("{:.6}", p.similarity),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn report(n: usize) -> Vec<ClonePair> {
        (0..n)
            .map(|i| ClonePair::new(&format!("a{i:05}"), &format!("b{i:05}"), 0.8).unwrap())
            .collect()
    }

    #[test]
    fn sample_size_and_uniqueness() {
        let r = report(10_000);
        let s = export_audit_sample(&r, 400, 7);
        assert_eq!(s.len(), 400);
        assert_eq!(
            s.iter().map(|p| p.key()).collect::<BTreeSet<_>>().len(),
            400
        );
        assert_eq!(s, export_audit_sample(&r, 400, 7));
        assert_ne!(s, export_audit_sample(&r, 400, 8));
    }

    #[test]
    fn clamps_and_empties() {
        let r = report(5);
        assert_eq!(export_audit_sample(&r, 50, 1), r);
        let empty = audit_csv(&export_audit_sample(&r, 0, 1), &BTreeMap::new());
        assert_eq!(empty.lines().count(), 1);
        assert!(empty.starts_with("id_a,path_a"));
    }
}
