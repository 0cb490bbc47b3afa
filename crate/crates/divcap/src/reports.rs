//! Retrieval evaluation over embedding files and the chart series built
//! from its reports.

use std::collections::{BTreeMap, BTreeSet};

use divcap_core::augment::CaptionPool;
use divcap_core::embed::EmbeddingTable;
use divcap_core::retrieval::{
    delta_chart, dual_softmax, group_report, overlap_histogram, query_ranks, recall_from_ranks, DeltaChart,
    GroupReport, Metrics, OverlapHistogram, RetrievalError, SimilarityMatrix,
};
use divcap_core::train::{encode_text, encode_video, ModelParams};
use divcap_core::{textstats, CaptionKind};
use serde::{Deserialize, Serialize};

/// Row id of a caption embedding.
pub fn text_row_id(video_id: &str, kind: CaptionKind) -> String {
    format!("{video_id}/{kind}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    /// Inverse temperature when dual-softmax reranking was applied.
    pub dual_softmax_lambda: Option<f64>,
    pub report: GroupReport,
    /// Videos retrieved at rank one by their own caption, per kind.
    pub top1: BTreeMap<CaptionKind, Vec<String>>,
    pub videos: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no video embedding for {0:?}")]
    MissingVideo(String),
    #[error("caption embeddings have dimension {text}, video embeddings {video}")]
    DimMismatch { text: usize, video: usize },
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
}

fn unit_rows(table: &EmbeddingTable, ids: &[String]) -> Result<Vec<Vec<f64>>, EvalError> {
    ids.iter()
        .map(|id| {
            table
                .position(id)
                .map(|k| table.unit_row(k))
                .ok_or_else(|| EvalError::MissingVideo(id.clone()))
        })
        .collect()
}

/// Text-to-video retrieval for every caption kind present in `text`. The
/// gallery is every pooled video; each kind's queries are the videos that
/// have a row `video_id/kind`.
pub fn evaluate_embeddings(
    dataset: &str,
    text: &EmbeddingTable,
    video: &EmbeddingTable,
    pools: &[CaptionPool],
    lambda: Option<f64>,
) -> Result<EvalReport, EvalError> {
    if text.dim() != video.dim() {
        return Err(EvalError::DimMismatch { text: text.dim(), video: video.dim() });
    }
    let mut videos: Vec<String> = pools.iter().map(|p| p.video_id.clone()).collect();
    videos.sort();
    let targets = unit_rows(video, &videos)?;

    let mut per_kind = BTreeMap::new();
    let mut top1 = BTreeMap::new();
    for kind in CaptionKind::ALL {
        let mut qids = Vec::new();
        let mut rows = Vec::new();
        for v in &videos {
            if let Some(k) = text.position(&text_row_id(v, kind)) {
                qids.push(v.clone());
                rows.push(text.unit_row(k));
            }
        }
        if qids.is_empty() {
            continue;
        }
        let mut scores = Vec::with_capacity(rows.len() * targets.len());
        for q in &rows {
            scores.extend(targets.iter().map(|t| q.iter().zip(t).map(|(a, b)| a * b).sum::<f64>()));
        }
        let mut sim = SimilarityMatrix::new(qids.clone(), videos.clone(), scores);
        if let Some(l) = lambda {
            sim = dual_softmax(&sim, l);
        }
        let truth: BTreeMap<String, String> = qids.iter().map(|q| (q.clone(), q.clone())).collect();
        let ranks = query_ranks(&sim, &truth)?;
        per_kind.insert(
            kind,
            Metrics::from_recalls(
                recall_from_ranks(&ranks, 1),
                recall_from_ranks(&ranks, 5),
                recall_from_ranks(&ranks, 10),
            ),
        );
        top1.insert(kind, qids.iter().zip(&ranks).filter(|(_, &r)| r == 1).map(|(q, _)| q.clone()).collect());
    }
    Ok(EvalReport {
        dataset: dataset.to_string(),
        dual_softmax_lambda: lambda,
        report: group_report(&per_kind)?,
        top1,
        videos,
    })
}

/// Caption embeddings for every kind of every pool, under trained
/// parameters.
pub fn embed_captions(params: &ModelParams, pools: &[CaptionPool], bigrams: bool) -> EmbeddingTable {
    let mut rows = Vec::new();
    for pool in pools {
        for (kind, text) in &pool.captions {
            let v = encode_text(&textstats::tokenize(text), params, bigrams);
            rows.push((text_row_id(&pool.video_id, *kind), v));
        }
    }
    EmbeddingTable::from_f64_rows(rows, true).expect("distinct caption ids")
}

pub fn embed_videos(params: &ModelParams, features: &EmbeddingTable) -> EmbeddingTable {
    let rows = (0..features.len())
        .map(|k| {
            let x: Vec<f64> = features.row(k).iter().map(|&v| f64::from(v)).collect();
            (features.ids()[k].clone(), encode_video(&x, params))
        })
        .collect();
    EmbeddingTable::from_f64_rows(rows, true).expect("distinct video ids")
}

/// Ground-truth paragraph embeddings keyed by bare video id, as the survey
/// builder expects.
pub fn gt_embeddings(captions: &EmbeddingTable) -> EmbeddingTable {
    let suffix = format!("/{}", CaptionKind::F);
    let rows = (0..captions.len())
        .filter_map(|k| {
            let id = captions.ids()[k].strip_suffix(&suffix)?;
            Some((id.to_string(), captions.row(k).to_vec()))
        })
        .collect();
    EmbeddingTable::from_rows(rows, captions.is_normalized()).expect("distinct video ids")
}

pub fn deltas(reports: &[EvalReport]) -> Result<DeltaChart, RetrievalError> {
    let series: Vec<(String, BTreeMap<CaptionKind, f64>)> = reports
        .iter()
        .map(|r| (r.dataset.clone(), r.report.kinds.iter().map(|(k, m)| (*k, m.r1)).collect()))
        .collect();
    delta_chart(&series)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapChart {
    /// One label per contributing top-1 set, `dataset/kind`.
    pub sets: Vec<String>,
    pub histogram: OverlapHistogram,
}

/// Histogram of how many (report, kind) pairs retrieve each video at rank
/// one. The partial kind is left out.
pub fn overlap(reports: &[EvalReport]) -> Result<OverlapChart, RetrievalError> {
    let universe: BTreeSet<String> = reports.iter().flat_map(|r| r.videos.iter().cloned()).collect();
    let mut labels = Vec::new();
    let mut sets = Vec::new();
    for r in reports {
        for (kind, hits) in &r.top1 {
            if *kind == CaptionKind::P {
                continue;
            }
            labels.push(format!("{}/{kind}", r.dataset));
            sets.push(hits.iter().cloned().collect());
        }
    }
    Ok(OverlapChart { sets: labels, histogram: overlap_histogram(&sets, &universe)? })
}
