//! Text-to-video scoring and recall metrics, caption-group aggregation and
//! the relative-delta and top-1 overlap analyses.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::math;
use crate::CaptionKind;

/// Default inverse temperature for dual-softmax reranking.
pub const DEFAULT_LAMBDA: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub enum RetrievalError {
    DimMismatch { queries: usize, targets: usize },
    MissingTruth(String),
    MissingKind(CaptionKind),
    ZeroFullRecall(String),
    UnknownVideo(String),
}

impl fmt::Display for RetrievalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RetrievalError::DimMismatch { queries, targets } => {
                write!(f, "query dim {queries} differs from target dim {targets}")
            }
            RetrievalError::MissingTruth(q) => write!(f, "query {q:?} has no target among the candidates"),
            RetrievalError::MissingKind(k) => write!(f, "caption kind {k} missing from report"),
            RetrievalError::ZeroFullRecall(d) => write!(f, "dataset {d:?} has zero full-caption R@1"),
            RetrievalError::UnknownVideo(v) => write!(f, "video {v:?} is not in the universe"),
        }
    }
}

impl core::error::Error for RetrievalError {}

/// Dense query x target score grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub query_ids: Vec<String>,
    pub target_ids: Vec<String>,
    pub scores: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(query_ids: Vec<String>, target_ids: Vec<String>, scores: Vec<f64>) -> Self {
        assert_eq!(scores.len(), query_ids.len() * target_ids.len());
        SimilarityMatrix {
            query_ids,
            target_ids,
            scores,
        }
    }

    pub fn rows(&self) -> usize {
        self.query_ids.len()
    }

    pub fn cols(&self) -> usize {
        self.target_ids.len()
    }

    pub fn row(&self, q: usize) -> &[f64] {
        let t = self.cols();
        &self.scores[q * t..(q + 1) * t]
    }

    pub fn get(&self, q: usize, t: usize) -> f64 {
        self.scores[q * self.cols() + t]
    }
}

/// Cosine similarity between every query row and every target row.
pub fn similarity(queries: &EmbeddingTable, targets: &EmbeddingTable) -> Result<SimilarityMatrix, RetrievalError> {
    if queries.dim() != targets.dim() {
        return Err(RetrievalError::DimMismatch {
            queries: queries.dim(),
            targets: targets.dim(),
        });
    }
    let target_rows: Vec<Vec<f64>> = (0..targets.len()).map(|k| targets.unit_row(k)).collect();
    let mut scores = Vec::with_capacity(queries.len() * targets.len());
    for q in 0..queries.len() {
        let qr = queries.unit_row(q);
        scores.extend(target_rows.iter().map(|t| math::dot(&qr, t)));
    }
    Ok(SimilarityMatrix::new(
        queries.ids().to_vec(),
        targets.ids().to_vec(),
        scores,
    ))
}

/// Row softmax times column softmax of `lambda * S`, elementwise.
pub fn dual_softmax(s: &SimilarityMatrix, lambda: f64) -> SimilarityMatrix {
    let (q, t) = (s.rows(), s.cols());
    let scaled: Vec<f64> = s.scores.iter().map(|x| x * lambda).collect();
    let mut row_sm = alloc::vec![0.0; q * t];
    for r in 0..q {
        math::softmax_into(&scaled[r * t..(r + 1) * t], &mut row_sm[r * t..(r + 1) * t]);
    }
    let mut col = alloc::vec![0.0; q];
    let mut col_sm = alloc::vec![0.0; q];
    let mut out = row_sm;
    for c in 0..t {
        for r in 0..q {
            col[r] = scaled[r * t + c];
        }
        math::softmax_into(&col, &mut col_sm);
        for r in 0..q {
            out[r * t + c] *= col_sm[r];
        }
    }
    SimilarityMatrix::new(s.query_ids.clone(), s.target_ids.clone(), out)
}

/// 1-based rank of each query's true target. Ties go to the lower target
/// index.
pub fn query_ranks(s: &SimilarityMatrix, truth: &BTreeMap<String, String>) -> Result<Vec<usize>, RetrievalError> {
    let target_index: BTreeMap<&str, usize> = s
        .target_ids
        .iter()
        .enumerate()
        .map(|(k, id)| (id.as_str(), k))
        .collect();
    let mut ranks = Vec::with_capacity(s.rows());
    for (q, qid) in s.query_ids.iter().enumerate() {
        let t_star = truth
            .get(qid)
            .and_then(|t| target_index.get(t.as_str()))
            .copied()
            .ok_or_else(|| RetrievalError::MissingTruth(qid.clone()))?;
        let row = s.row(q);
        let s_star = row[t_star];
        let ahead = row
            .iter()
            .enumerate()
            .filter(|&(t, &v)| v > s_star || (v == s_star && t < t_star))
            .count();
        ranks.push(ahead + 1);
    }
    Ok(ranks)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub r1: f64,
    pub r5: f64,
    pub r10: f64,
    pub avg_r: f64,
}

impl Metrics {
    pub fn from_recalls(r1: f64, r5: f64, r10: f64) -> Self {
        Metrics {
            r1,
            r5,
            r10,
            avg_r: (r1 + r5 + r10) / 3.0,
        }
    }

    fn mean(items: &[Metrics]) -> Metrics {
        let n = items.len() as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Metrics {
            r1: sum(|m| m.r1),
            r5: sum(|m| m.r5),
            r10: sum(|m| m.r10),
            avg_r: sum(|m| m.avg_r),
        }
    }

    fn weighted(parts: &[(f64, Metrics)]) -> Metrics {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        let sum = |f: fn(&Metrics) -> f64| parts.iter().map(|(w, m)| w * f(m)).sum::<f64>() / total;
        Metrics {
            r1: sum(|m| m.r1),
            r5: sum(|m| m.r5),
            r10: sum(|m| m.r10),
            avg_r: sum(|m| m.avg_r),
        }
    }
}

/// Percentage of queries whose target ranks within `k`.
pub fn recall_from_ranks(ranks: &[usize], k: usize) -> f64 {
    if ranks.is_empty() {
        return 0.0;
    }
    100.0 * ranks.iter().filter(|&&r| r <= k).count() as f64 / ranks.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recall {
    pub at: BTreeMap<usize, f64>,
    pub metrics: Metrics,
}

pub fn recall_at_k(
    s: &SimilarityMatrix,
    truth: &BTreeMap<String, String>,
    ks: &[usize],
) -> Result<Recall, RetrievalError> {
    let ranks = query_ranks(s, truth)?;
    Ok(Recall {
        at: ks.iter().map(|&k| (k, recall_from_ranks(&ranks, k))).collect(),
        metrics: Metrics::from_recalls(
            recall_from_ranks(&ranks, 1),
            recall_from_ranks(&ranks, 5),
            recall_from_ranks(&ranks, 10),
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Group {
    Full,
    Short,
    Long,
    Partial,
    All,
}

impl Group {
    /// Member kinds of each base group. `m` belongs to none.
    pub fn members(self) -> &'static [CaptionKind] {
        use CaptionKind::*;
        match self {
            Group::Full => &[F],
            Group::Short => &[S, Se, Si, Su],
            Group::Long => &[L, E, I, U],
            Group::Partial => &[P],
            Group::All => &[S, Se, Si, Su, L, E, I, U, P],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub kinds: BTreeMap<CaptionKind, Metrics>,
    pub groups: BTreeMap<Group, Metrics>,
    /// Group values are unweighted means over member kinds.
    pub averaging: String,
}

/// SHORT and LONG are per-kind means; ALL weights SHORT, LONG and PARTIAL
/// by their caption counts, 4:4:1.
pub fn group_report(per_kind: &BTreeMap<CaptionKind, Metrics>) -> Result<GroupReport, RetrievalError> {
    for kind in CaptionKind::ALL {
        if !per_kind.contains_key(&kind) {
            return Err(RetrievalError::MissingKind(kind));
        }
    }
    let group_mean = |g: Group| {
        let items: Vec<Metrics> = g.members().iter().map(|k| per_kind[k]).collect();
        Metrics::mean(&items)
    };
    let mut groups = BTreeMap::new();
    for g in [Group::Full, Group::Short, Group::Long, Group::Partial] {
        groups.insert(g, group_mean(g));
    }
    let weight = |g: Group| g.members().len() as f64;
    groups.insert(
        Group::All,
        Metrics::weighted(&[
            (weight(Group::Short), groups[&Group::Short]),
            (weight(Group::Long), groups[&Group::Long]),
            (weight(Group::Partial), groups[&Group::Partial]),
        ]),
    );
    Ok(GroupReport {
        kinds: per_kind.clone(),
        groups,
        averaging: String::from("macro: unweighted mean over member caption kinds"),
    })
}

/// The ALL value from group-level values alone.
pub fn all_from_groups(short: f64, long: f64, partial: f64) -> f64 {
    (4.0 * short + 4.0 * long + partial) / 9.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaChart {
    /// Per kind, per dataset: relative R@1 change in percent.
    pub per_dataset: BTreeMap<CaptionKind, BTreeMap<String, f64>>,
    /// Per kind: mean over datasets.
    pub mean: BTreeMap<CaptionKind, f64>,
}

/// `100 * (R@1_k - R@1_f) / R@1_f` for every non-full kind, per dataset and
/// averaged over datasets.
pub fn delta_chart(datasets: &[(String, BTreeMap<CaptionKind, f64>)]) -> Result<DeltaChart, RetrievalError> {
    let mut per_dataset: BTreeMap<CaptionKind, BTreeMap<String, f64>> = BTreeMap::new();
    for (name, r1) in datasets {
        let full = *r1.get(&CaptionKind::F).ok_or(RetrievalError::MissingKind(CaptionKind::F))?;
        if full == 0.0 {
            return Err(RetrievalError::ZeroFullRecall(name.clone()));
        }
        for (&kind, &value) in r1 {
            if kind == CaptionKind::F {
                continue;
            }
            per_dataset
                .entry(kind)
                .or_default()
                .insert(name.clone(), 100.0 * (value - full) / full);
        }
    }
    let mean = per_dataset
        .iter()
        .map(|(&k, vals)| (k, vals.values().sum::<f64>() / vals.len() as f64))
        .collect();
    Ok(DeltaChart { per_dataset, mean })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapHistogram {
    /// `counts[x]` videos were retrieved at top-1 by exactly `x` sets.
    pub counts: Vec<usize>,
}

pub fn overlap_histogram(
    rank1_sets: &[BTreeSet<String>],
    universe: &BTreeSet<String>,
) -> Result<OverlapHistogram, RetrievalError> {
    let mut hits: BTreeMap<&str, usize> = universe.iter().map(|v| (v.as_str(), 0)).collect();
    for set in rank1_sets {
        for v in set {
            *hits
                .get_mut(v.as_str())
                .ok_or_else(|| RetrievalError::UnknownVideo(v.clone()))? += 1;
        }
    }
    let mut counts = alloc::vec![0; rank1_sets.len() + 1];
    for &h in hits.values() {
        counts[h] += 1;
    }
    Ok(OverlapHistogram { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|k| k.to_string()).collect()
    }

    fn diag_truth(n: usize) -> BTreeMap<String, String> {
        (0..n).map(|k| (k.to_string(), k.to_string())).collect()
    }

    #[test]
    fn cosine_basics() {
        let a = EmbeddingTable::from_rows(alloc::vec![("a".into(), alloc::vec![3.0, 4.0])], false).unwrap();
        let b = EmbeddingTable::from_rows(
            alloc::vec![("x".into(), alloc::vec![0.6, 0.8]), ("y".into(), alloc::vec![-4.0, 3.0])],
            false,
        )
        .unwrap();
        let s = similarity(&a, &b).unwrap();
        assert!((s.get(0, 0) - 1.0).abs() < 1e-7);
        assert!(s.get(0, 1).abs() < 1e-7);
        let c = EmbeddingTable::from_rows(alloc::vec![("z".into(), alloc::vec![1.0, 0.0, 0.0])], false).unwrap();
        assert!(matches!(similarity(&a, &c), Err(RetrievalError::DimMismatch { .. })));
    }

    #[test]
    fn dual_softmax_single_cell() {
        let s = SimilarityMatrix::new(ids(1), ids(1), alloc::vec![0.37]);
        assert!((dual_softmax(&s, DEFAULT_LAMBDA).scores[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recall_fixture() {
        let s = SimilarityMatrix::new(ids(3), ids(3), alloc::vec![0.9, 0.1, 0.0, 0.2, 0.8, 0.0, 0.5, 0.4, 0.3]);
        let r = recall_at_k(&s, &diag_truth(3), &[1, 2]).unwrap();
        // third query's target (0.3) is beaten by 0.5 and 0.4
        assert!((r.at[&1] - 200.0 / 3.0).abs() < 1e-9);
        // the same fixture read target-major
        let s = SimilarityMatrix::new(ids(3), ids(3), alloc::vec![0.9, 0.2, 0.5, 0.1, 0.8, 0.4, 0.0, 0.0, 0.3]);
        let r = recall_at_k(&s, &diag_truth(3), &[1]).unwrap();
        assert_eq!(r.at[&1], 100.0);
        // one swap in the last row
        let s = SimilarityMatrix::new(ids(3), ids(3), alloc::vec![0.9, 0.1, 0.0, 0.2, 0.8, 0.0, 0.0, 0.5, 0.4]);
        let r = recall_at_k(&s, &diag_truth(3), &[1, 2]).unwrap();
        assert!((r.at[&1] - 66.666_666_666_666_67).abs() < 1e-9);
        assert_eq!(r.at[&2], 100.0);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let s = SimilarityMatrix::new(ids(2), ids(3), alloc::vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5]);
        let truth: BTreeMap<String, String> =
            [("0".to_string(), "0".to_string()), ("1".to_string(), "2".to_string())].into();
        assert_eq!(query_ranks(&s, &truth).unwrap(), [1, 3]);
        let missing: BTreeMap<String, String> = [("0".to_string(), "9".to_string())].into();
        assert_eq!(
            query_ranks(&s, &missing),
            Err(RetrievalError::MissingTruth("0".into()))
        );
    }

    fn uniform_kinds(short: f64, long: f64, partial: f64) -> BTreeMap<CaptionKind, Metrics> {
        CaptionKind::ALL
            .iter()
            .map(|&k| {
                let v = if Group::Short.members().contains(&k) {
                    short
                } else if Group::Long.members().contains(&k) {
                    long
                } else if k == CaptionKind::P {
                    partial
                } else {
                    50.0
                };
                (k, Metrics::from_recalls(v, v, v))
            })
            .collect()
    }

    #[test]
    fn all_group_weights() {
        let r = group_report(&uniform_kinds(27.8, 44.4, 35.0)).unwrap();
        assert!((r.groups[&Group::All].r1 - 35.977_777_777_777_78).abs() < 1e-9);
        let r = group_report(&uniform_kinds(16.2, 31.7, 23.7)).unwrap();
        assert!((r.groups[&Group::All].r1 - 23.92).abs() < 0.005);
        let r = group_report(&uniform_kinds(12.0, 12.0, 12.0)).unwrap();
        assert!((r.groups[&Group::All].r1 - 12.0).abs() < 1e-12);
        let mut partial = uniform_kinds(1.0, 1.0, 1.0);
        partial.remove(&CaptionKind::M);
        assert_eq!(group_report(&partial), Err(RetrievalError::MissingKind(CaptionKind::M)));
    }

    #[test]
    fn deltas() {
        let d: BTreeMap<CaptionKind, f64> = [(CaptionKind::F, 50.0), (CaptionKind::S, 45.0), (CaptionKind::L, 50.0)].into();
        let chart = delta_chart(&[("a".into(), d)]).unwrap();
        assert!((chart.mean[&CaptionKind::S] + 10.0).abs() < 1e-12);
        assert_eq!(chart.mean[&CaptionKind::L], 0.0);
        let z: BTreeMap<CaptionKind, f64> = [(CaptionKind::F, 0.0)].into();
        assert_eq!(delta_chart(&[("z".into(), z)]), Err(RetrievalError::ZeroFullRecall("z".into())));
    }

    #[test]
    fn overlap_buckets() {
        let universe: BTreeSet<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
        let sets = [set(&["a"]), set(&["a", "b"]), set(&["a"]), set(&[])];
        let h = overlap_histogram(&sets, &universe).unwrap();
        assert_eq!(h.counts, [1, 1, 0, 1, 0]);
        assert_eq!(
            overlap_histogram(&[set(&["q"])], &universe),
            Err(RetrievalError::UnknownVideo("q".into()))
        );
    }
}
