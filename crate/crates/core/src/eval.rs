//! Scoring a clone report against labeled pairs.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::detect::ClonePair;

/// Clone type labels. `Neg` marks a labeled non-clone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CloneType {
    T1,
    T2,
    /// Very strongly type-3, syntactic similarity in [0.9, 1.0).
    Vst3,
    /// Strongly type-3, [0.7, 0.9).
    St3,
    /// Moderately type-3, [0.5, 0.7).
    Mt3,
    /// Weakly type-3 and type-4, [0.0, 0.5).
    T4,
    Neg,
}

impl CloneType {
    pub const ALL: [CloneType; 7] = [
        CloneType::T1,
        CloneType::T2,
        CloneType::Vst3,
        CloneType::St3,
        CloneType::Mt3,
        CloneType::T4,
        CloneType::Neg,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CloneType::T1 => "T1",
            CloneType::T2 => "T2",
            CloneType::Vst3 => "VST3",
            CloneType::St3 => "ST3",
            CloneType::Mt3 => "MT3",
            CloneType::T4 => "T4",
            CloneType::Neg => "NEG",
        }
    }

    pub fn is_clone(self) -> bool {
        self != CloneType::Neg
    }
}

impl fmt::Display for CloneType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CloneType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CloneType::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown clone type `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub id_a: String,
    pub id_b: String,
    pub clone_type: CloneType,
}

impl LabeledPair {
    /// Orders the ids so that `id_a <= id_b`.
    pub fn new(a: &str, b: &str, clone_type: CloneType) -> Self {
        let (id_a, id_b) = if a <= b { (a, b) } else { (b, a) };
        LabeledPair {
            id_a: id_a.to_string(),
            id_b: id_b.to_string(),
            clone_type,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvalError {
    UnknownIds(Vec<String>),
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::UnknownIds(ids) => write!(f, "labels reference unknown sample ids: {ids:?}"),
        }
    }
}

impl core::error::Error for EvalError {}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalMetrics {
    /// Recall of every clone type present in the labels.
    pub recall_by_type: BTreeMap<CloneType, f64>,
    pub labeled_by_type: BTreeMap<CloneType, usize>,
    /// Recall over all non-NEG labels pooled.
    pub recall: f64,
    /// `None` when nothing labeled was detected.
    pub precision: Option<f64>,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    /// Detected pairs that carry no label.
    pub unlabeled: usize,
}

/// Scores `report` against `labels`.
///
/// Detected pairs labeled with a clone type are true positives, detected
/// NEG pairs are false positives, undetected clone labels are false
/// negatives and detected pairs without a label are only counted. When a
/// pair is labeled twice the first label wins. With `known_ids`, every
/// labeled id must be a member.
pub fn score(
    report: &[ClonePair],
    labels: &[LabeledPair],
    known_ids: Option<&BTreeSet<String>>,
) -> Result<EvalMetrics, EvalError> {
    if let Some(known) = known_ids {
        let unknown: BTreeSet<&str> = labels
            .iter()
            .flat_map(|l| [l.id_a.as_str(), l.id_b.as_str()])
            .filter(|id| !known.contains(*id))
            .collect();
        if !unknown.is_empty() {
            return Err(EvalError::UnknownIds(
                unknown.into_iter().map(String::from).collect(),
            ));
        }
    }

    let mut label_of: BTreeMap<(&str, &str), CloneType> = BTreeMap::new();
    for l in labels {
        label_of
            .entry((l.id_a.as_str(), l.id_b.as_str()))
            .or_insert(l.clone_type);
    }
    let detected: BTreeSet<(&str, &str)> = report.iter().map(ClonePair::key).collect();

    let mut labeled_by_type: BTreeMap<CloneType, usize> = BTreeMap::new();
    let mut found_by_type: BTreeMap<CloneType, usize> = BTreeMap::new();
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (key, &t) in &label_of {
        let hit = detected.contains(key);
        if t.is_clone() {
            *labeled_by_type.entry(t).or_insert(0) += 1;
            let found = found_by_type.entry(t).or_insert(0);
            if hit {
                *found += 1;
                tp += 1;
            } else {
                fn_ += 1;
            }
        } else if hit {
            fp += 1;
        }
    }
    let unlabeled = detected
        .iter()
        .filter(|k| !label_of.contains_key(*k))
        .count();

    let recall_by_type = labeled_by_type
        .iter()
        .map(|(&t, &n)| (t, found_by_type[&t] as f64 / n as f64))
        .collect();
    let recall = if tp + fn_ > 0 {
        tp as f64 / (tp + fn_) as f64
    } else {
        0.0
    };
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    Ok(EvalMetrics {
        recall_by_type,
        labeled_by_type,
        recall,
        precision,
        f1: f1(precision.unwrap_or(0.0), recall),
        tp,
        fp,
        fn_,
        unlabeled,
    })
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pair(a: &str, b: &str) -> ClonePair {
        ClonePair::new(a, b, 0.9).unwrap()
    }

    #[test]
    fn worked_example() {
        let labels = vec![
            LabeledPair::new("a", "b", CloneType::T1),
            LabeledPair::new("c", "d", CloneType::T1),
            LabeledPair::new("e", "f", CloneType::Mt3),
            LabeledPair::new("g", "h", CloneType::Neg),
        ];
        let report = vec![
            pair("a", "b"),
            pair("d", "c"),
            pair("g", "h"),
            pair("x", "y"),
        ];
        let m = score(&report, &labels, None).unwrap();
        assert_eq!(m.recall_by_type[&CloneType::T1], 1.0);
        assert_eq!(m.recall_by_type[&CloneType::Mt3], 0.0);
        assert!((m.precision.unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!((m.tp, m.fp, m.fn_, m.unlabeled), (2, 1, 1, 1));
    }

    #[test]
    fn empty_report() {
        let labels = vec![
            LabeledPair::new("a", "b", CloneType::T2),
            LabeledPair::new("c", "d", CloneType::St3),
        ];
        let m = score(&[], &labels, None).unwrap();
        assert!(m.recall_by_type.values().all(|&r| r == 0.0));
        assert_eq!(m.precision, None);
        assert_eq!(m.f1, 0.0);
    }

    #[test]
    fn f1_formula() {
        assert_eq!(f1(0.5, 0.5), 0.5);
        assert_eq!(f1(0.0, 0.0), 0.0);
        assert!((f1(1.0, 0.5) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_ids_are_reported() {
        let known: BTreeSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let labels = vec![LabeledPair::new("a", "zz", CloneType::T1)];
        assert_eq!(
            score(&[], &labels, Some(&known)).unwrap_err(),
            EvalError::UnknownIds(vec!["zz".to_string()])
        );
    }

    #[test]
    fn labels_are_canonicalized() {
        let l = LabeledPair::new("z", "a", CloneType::Neg);
        assert_eq!((l.id_a.as_str(), l.id_b.as_str()), ("a", "z"));
        assert_eq!("vst3".parse::<CloneType>().unwrap(), CloneType::Vst3);
        assert!("T5".parse::<CloneType>().is_err());
    }
}
