//! Batch caption generation with bounded concurrency and resumable
//! checkpoints.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use divcap_core::augment::{generate_pool, CaptionPool, CompletionBackend};
use divcap_core::corpus::{Dataset, Video};
use divcap_core::rng;
use serde::Serialize;

use crate::io::{self, append_line_durable, IoError};

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub seed: u64,
    pub retries: u32,
    pub max_in_flight: usize,
    pub out_path: PathBuf,
    pub checkpoint_path: PathBuf,
    /// Defaults to the output path with `.errors.jsonl` appended.
    pub errors_path: Option<PathBuf>,
    /// Stop after attempting this many videos in this run, leaving the
    /// checkpoint for a later resume.
    pub stop_after: Option<usize>,
}

impl PipelineOptions {
    pub fn new(out_path: impl Into<PathBuf>, checkpoint_path: impl Into<PathBuf>) -> Self {
        PipelineOptions {
            seed: 0,
            retries: 3,
            max_in_flight: 1,
            out_path: out_path.into(),
            checkpoint_path: checkpoint_path.into(),
            errors_path: None,
            stop_after: None,
        }
    }

    pub fn errors_path(&self) -> PathBuf {
        self.errors_path.clone().unwrap_or_else(|| {
            let mut p = self.out_path.clone().into_os_string();
            p.push(".errors.jsonl");
            PathBuf::from(p)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelineSummary {
    pub total: usize,
    pub resumed: usize,
    pub generated: usize,
    pub failed: Vec<String>,
    /// Every video was attempted and the output file was written.
    pub complete: bool,
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    video_id: &'a str,
    error: String,
}

/// Pools already in the checkpoint that still match a video of the
/// dataset. A torn final line from an interrupted write is dropped.
fn load_checkpoint(path: &Path, dataset: &Dataset) -> Result<BTreeMap<String, CaptionPool>, IoError> {
    let mut done = BTreeMap::new();
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(IoError::Fs { path: path.to_path_buf(), source: e }),
    };
    let lines: Vec<String> = BufReader::new(f)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| IoError::Fs { path: path.to_path_buf(), source: e })?;
    let last = lines.len();
    for (idx, line) in lines.into_iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let pool: CaptionPool = match serde_json::from_str(&line) {
            Ok(p) => p,
            Err(_) if idx + 1 == last => {
                log::warn!("{}: ignoring torn final checkpoint line", path.display());
                continue;
            }
            Err(e) => {
                return Err(IoError::MalformedLine { path: path.to_path_buf(), line: idx + 1, message: e.to_string() })
            }
        };
        let Some(video) = dataset.get(&pool.video_id) else { continue };
        if pool.validate(Some(video)).is_ok() {
            done.insert(pool.video_id.clone(), pool);
        }
    }
    Ok(done)
}

/// Generates a pool for every video, `max_in_flight` videos at a time.
/// Each video draws its partial range from its own seeded substream, so the
/// output bytes do not depend on scheduling. Finished pools are appended to
/// the checkpoint as they complete and skipped on the next run. Per-video
/// failures go to the errors sidecar and do not stop the run.
pub fn run_pipeline<B>(dataset: &Dataset, backend: &B, opts: &PipelineOptions) -> Result<PipelineSummary, IoError>
where
    B: CompletionBackend + Sync + ?Sized,
{
    let done = load_checkpoint(&opts.checkpoint_path, dataset)?;
    let mut todo: Vec<&Video> = dataset.videos.iter().filter(|v| !done.contains_key(&v.video_id)).collect();
    todo.sort_by(|a, b| a.video_id.cmp(&b.video_id));

    let errors_path = opts.errors_path();
    if errors_path.exists() {
        fs::remove_file(&errors_path).map_err(|e| IoError::Fs { path: errors_path.clone(), source: e })?;
    }
    if let Some(dir) = opts.checkpoint_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::Fs { path: dir.to_path_buf(), source: e })?;
    }
    let checkpoint = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&opts.checkpoint_path)
        .map_err(|e| IoError::Fs { path: opts.checkpoint_path.clone(), source: e })?;
    let checkpoint = Mutex::new(checkpoint);
    let errors: Mutex<Option<File>> = Mutex::new(None);
    let generated = Mutex::new(Vec::new());
    let failed = Mutex::new(Vec::new());
    let io_failure: Mutex<Option<IoError>> = Mutex::new(None);

    let limit = opts.stop_after.map_or(todo.len(), |n| n.min(todo.len()));
    let next = AtomicUsize::new(0);
    let workers = opts.max_in_flight.max(1).min(limit.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= limit || io_failure.lock().unwrap().is_some() {
                    break;
                }
                let video = todo[k];
                let mut rng = rng::substream(opts.seed, &video.video_id);
                match generate_pool(video, backend, opts.retries, &mut rng) {
                    Ok(pool) => {
                        let line = serde_json::to_vec(&pool).expect("serializable pool");
                        let mut f = checkpoint.lock().unwrap();
                        if let Err(e) = append_line_durable(&mut f, &line) {
                            *io_failure.lock().unwrap() =
                                Some(IoError::Fs { path: opts.checkpoint_path.clone(), source: e });
                            break;
                        }
                        drop(f);
                        generated.lock().unwrap().push(pool);
                    }
                    Err(err) => {
                        log::warn!("{}: {err}", video.video_id);
                        let line = serde_json::to_vec(&ErrorLine { video_id: &video.video_id, error: err.to_string() })
                            .expect("serializable error");
                        let mut slot = errors.lock().unwrap();
                        let result = match slot.as_mut() {
                            Some(f) => append_line_durable(f, &line),
                            None => File::create(&errors_path).and_then(|mut f| {
                                let r = append_line_durable(&mut f, &line);
                                *slot = Some(f);
                                r
                            }),
                        };
                        if let Err(e) = result {
                            *io_failure.lock().unwrap() = Some(IoError::Fs { path: errors_path.clone(), source: e });
                            break;
                        }
                        failed.lock().unwrap().push(video.video_id.clone());
                    }
                }
            });
        }
    });

    if let Some(e) = io_failure.into_inner().unwrap() {
        return Err(e);
    }
    let generated = generated.into_inner().unwrap();
    let mut failed = failed.into_inner().unwrap();
    failed.sort();
    let complete = limit == todo.len();
    let summary = PipelineSummary {
        total: dataset.videos.len(),
        resumed: done.len(),
        generated: generated.len(),
        failed,
        complete,
    };
    if complete {
        let mut all = done;
        for p in generated {
            all.insert(p.video_id.clone(), p);
        }
        let pools: Vec<CaptionPool> = all.into_values().collect();
        io::write_pools(&opts.out_path, &pools)?;
    }
    Ok(summary)
}
