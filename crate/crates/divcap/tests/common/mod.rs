#![allow(dead_code)]

use divcap_core::corpus::{Dataset, EventSegment, Video};
use divcap_core::rng::seeded;
use rand::Rng;

const SUBJECTS: &[&str] = &["A man", "The woman", "A child", "Two people", "The athlete", "A dog"];
const VERBS: &[&str] = &[
    "demonstrates", "ascends", "navigates", "grasps", "positions", "transports", "paddles", "throws", "walks",
];
const OBJECTS: &[&str] = &[
    "the large vessel", "a heavy container", "the rope", "a kayak", "the ball", "a wooden ladder", "the river",
];
const TAILS: &[&str] = &["slowly", "near the shore", "in the water", "across the field", "with care", "again"];

pub fn sentence(rng: &mut divcap_core::rng::Rng) -> String {
    let mut pick = |xs: &[&str]| xs[rng.random_range(0..xs.len())].to_string();
    format!("{} {} {} {}.", pick(SUBJECTS), pick(VERBS), pick(OBJECTS), pick(TAILS))
}

/// `n` videos with 2 to 5 events each, deterministic.
pub fn fixture_dataset(n: usize, seed: u64) -> Dataset {
    let mut rng = seeded(seed);
    let videos = (0..n)
        .map(|k| {
            let events = rng.random_range(2..=5);
            Video {
                video_id: format!("vid{k:03}"),
                duration_s: events as f64 * 8.0,
                events: (0..events)
                    .map(|e| EventSegment {
                        start_s: e as f64 * 8.0,
                        end_s: e as f64 * 8.0 + 7.5,
                        caption: sentence(&mut rng),
                    })
                    .collect(),
                feature_ref: None,
            }
        })
        .collect();
    Dataset { name: "fixture".into(), split: "val".into(), videos }
}

use divcap::pipeline::{run_pipeline, PipelineOptions};
use divcap_core::augment::{CaptionPool, MockBackend};
use divcap_core::embed::EmbeddingTable;
use divcap_core::lexicon::PosLexicon;
use divcap_core::survey::{make_surveys, Answers, Judgment, Payload, ResponseRecord, SurveyDoc, SurveyItem, SurveyKey};

/// Mock pools for `n` fixture videos.
pub fn fixture_pools(n: usize, dir: &std::path::Path) -> (Dataset, Vec<CaptionPool>) {
    let ds = fixture_dataset(n, 21);
    let mut o = PipelineOptions::new(dir.join("pools.jsonl"), dir.join("pools.ckpt"));
    o.seed = 5;
    o.max_in_flight = 4;
    run_pipeline(&ds, &MockBackend { seed: 5 }, &o).unwrap();
    let pools = divcap::io::read_pools(&o.out_path, Some(&ds)).unwrap();
    (ds, pools)
}

pub fn random_gt(pools: &[CaptionPool], dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = seeded(seed);
    let rows = pools
        .iter()
        .map(|p| (p.video_id.clone(), (0..dim).map(|_| rng.random::<f32>() - 0.5).collect()))
        .collect();
    EmbeddingTable::from_rows(rows, false).unwrap()
}

/// Five survey versions over mock pools of 150 videos.
pub fn study(dir: &std::path::Path) -> (Vec<SurveyDoc>, Vec<SurveyKey>) {
    let (_, pools) = fixture_pools(150, dir);
    let gt = random_gt(&pools, 8, 3);
    make_surveys(&pools, &gt, 5, 11, &PosLexicon::bundled()).unwrap()
}

const LABELS: [Judgment; 3] = [Judgment::Different, Judgment::Unsure, Judgment::Matches];

/// A valid answer for `item`, varied by `salt`.
pub fn scripted_answer(item: &SurveyItem, salt: usize) -> Answers {
    match &item.payload {
        Payload::Meaning(p) => Answers::Labels((0..p.candidates.len()).map(|k| LABELS[(k + salt) % 3]).collect()),
        Payload::Simplify(_) => {
            let perms = [[1, 2, 3], [2, 3, 1], [3, 1, 2], [1, 3, 2]];
            Answers::Ranks(perms[salt % perms.len()].to_vec())
        }
        Payload::Halluc(p) => Answers::Labels((0..p.probe_words.len()).map(|k| LABELS[(k * 2 + salt) % 3]).collect()),
    }
}

pub fn scripted_responses(doc: &SurveyDoc, annotator: &str, salt: usize) -> Vec<ResponseRecord> {
    doc.items
        .iter()
        .enumerate()
        .map(|(k, item)| ResponseRecord {
            annotator_id: annotator.into(),
            version_id: doc.version_id,
            item_id: item.item_id.clone(),
            answers: scripted_answer(item, salt + k),
            timestamp: format!("t{k}"),
        })
        .collect()
}
