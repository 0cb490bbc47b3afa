mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use common::fixture_dataset;
use divcap::io;
use divcap::pipeline::{run_pipeline, PipelineOptions};
use divcap_core::augment::{word_targets, BackendFailure, CompletionBackend, MockBackend, MIN_TARGET};
use divcap_core::corpus::{count_words, full_paragraph};
use divcap_core::CaptionKind;

/// Mock backend that counts calls and can fail chosen videos.
struct Counting {
    inner: MockBackend,
    calls: AtomicUsize,
    fail_containing: Option<String>,
    in_flight: AtomicUsize,
    peak: Mutex<usize>,
}

impl Counting {
    fn new(fail_containing: Option<&str>) -> Self {
        Counting {
            inner: MockBackend { seed: 1 },
            calls: AtomicUsize::new(0),
            fail_containing: fail_containing.map(str::to_string),
            in_flight: AtomicUsize::new(0),
            peak: Mutex::new(0),
        }
    }
}

impl CompletionBackend for Counting {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn complete(&self, prompt: &str) -> Result<String, BackendFailure> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        {
            let mut peak = self.peak.lock().unwrap();
            *peak = (*peak).max(now);
        }
        std::thread::sleep(std::time::Duration::from_millis(1));
        let out = match &self.fail_containing {
            Some(s) if prompt.contains(s.as_str()) => Err(BackendFailure("scripted outage".into())),
            _ => self.inner.complete(prompt),
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        out
    }
}

fn opts(dir: &std::path::Path, name: &str, in_flight: usize) -> PipelineOptions {
    let mut o = PipelineOptions::new(dir.join(format!("{name}.jsonl")), dir.join(format!("{name}.ckpt")));
    o.seed = 42;
    o.max_in_flight = in_flight;
    o.retries = 0;
    o
}

#[test]
fn mock_pipeline_is_complete_and_hits_targets() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture_dataset(100, 7);
    let o = opts(dir.path(), "out", 4);
    let summary = run_pipeline(&ds, &MockBackend { seed: 1 }, &o).unwrap();
    assert!(summary.complete);
    assert_eq!(summary.generated, 100);
    let pools = io::read_pools(&o.out_path, Some(&ds)).unwrap();
    assert_eq!(pools.len(), 100);
    let ids: Vec<&str> = pools.iter().map(|p| p.video_id.as_str()).collect();
    let mut sorted = ids.clone();
    sorted.sort();
    assert_eq!(ids, sorted);
    for (pool, video) in pools.iter().zip(&ds.videos) {
        assert_eq!(pool.captions.len(), 11);
        let t = word_targets(count_words(&full_paragraph(video)), MIN_TARGET);
        assert_eq!(count_words(pool.get(CaptionKind::S)), t.short);
        assert_eq!(count_words(pool.get(CaptionKind::M)), t.medium);
        assert_eq!(count_words(pool.get(CaptionKind::L)), t.full);
        assert_ne!(pool.get(CaptionKind::P), pool.get(CaptionKind::F));
    }
}

#[test]
fn output_bytes_ignore_concurrency_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture_dataset(60, 3);
    let mut outputs = Vec::new();
    for (name, n) in [("a", 1), ("b", 4), ("c", 4)] {
        let o = opts(dir.path(), name, n);
        run_pipeline(&ds, &MockBackend { seed: 1 }, &o).unwrap();
        outputs.push(std::fs::read(&o.out_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn concurrency_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture_dataset(40, 5);
    let backend = Counting::new(None);
    run_pipeline(&ds, &backend, &opts(dir.path(), "x", 3)).unwrap();
    let peak = *backend.peak.lock().unwrap();
    assert!(peak <= 3, "peak {peak}");
    assert!(peak >= 2, "expected overlap, peak {peak}");
}

#[test]
fn interrupted_run_resumes_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture_dataset(100, 9);

    let full = opts(dir.path(), "full", 4);
    run_pipeline(&ds, &MockBackend { seed: 1 }, &full).unwrap();

    let mut part = opts(dir.path(), "part", 4);
    part.stop_after = Some(40);
    let first = Counting::new(None);
    let s = run_pipeline(&ds, &first, &part).unwrap();
    assert!(!s.complete);
    assert_eq!(s.generated, 40);
    assert!(!part.out_path.exists());

    part.stop_after = None;
    let second = Counting::new(None);
    let s = run_pipeline(&ds, &second, &part).unwrap();
    assert!(s.complete);
    assert_eq!(s.resumed, 40);
    assert_eq!(s.generated, 60);
    assert_eq!(second.calls.load(Ordering::SeqCst), 60 * 3);
    assert_eq!(std::fs::read(&part.out_path).unwrap(), std::fs::read(&full.out_path).unwrap());
}

#[test]
fn torn_checkpoint_line_is_regenerated() {
    let dir = tempfile::tempdir().unwrap();
    let ds = fixture_dataset(10, 2);
    let full = opts(dir.path(), "full", 1);
    run_pipeline(&ds, &MockBackend { seed: 1 }, &full).unwrap();

    let o = opts(dir.path(), "torn", 1);
    let ckpt = std::fs::read_to_string(&full.checkpoint_path).unwrap();
    let lines: Vec<&str> = ckpt.lines().collect();
    let torn = format!("{}\n{}\n{}", lines[0], lines[1], &lines[2][..lines[2].len() / 2]);
    std::fs::write(&o.checkpoint_path, torn).unwrap();
    let s = run_pipeline(&ds, &MockBackend { seed: 1 }, &o).unwrap();
    assert_eq!(s.resumed, 2);
    assert_eq!(std::fs::read(&o.out_path).unwrap(), std::fs::read(&full.out_path).unwrap());
}

#[test]
fn failures_go_to_sidecar_and_the_run_continues() {
    let dir = tempfile::tempdir().unwrap();
    let mut ds = fixture_dataset(12, 4);
    ds.videos[5].events[0].caption = "Zebras xylophone quietly.".into();
    let backend = Counting::new(Some("xylophone"));
    let o = opts(dir.path(), "f", 2);
    let s = run_pipeline(&ds, &backend, &o).unwrap();
    assert_eq!(s.failed, vec!["vid005".to_string()]);
    assert_eq!(s.generated, 11);
    let pools = io::read_pools(&o.out_path, None).unwrap();
    assert_eq!(pools.len(), 11);
    let sidecar = std::fs::read_to_string(o.errors_path()).unwrap();
    assert_eq!(sidecar.lines().count(), 1);
    assert!(sidecar.contains("vid005") && sidecar.contains("scripted outage"));

    // a clean rerun fills the gap and clears the sidecar
    let s = run_pipeline(&ds, &MockBackend { seed: 1 }, &o).unwrap();
    assert_eq!((s.resumed, s.generated), (11, 1));
    assert!(!o.errors_path().exists());
}
