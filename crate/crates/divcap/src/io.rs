//! On-disk formats: dataset and pool JSONL, embedding files, lexicon TSV,
//! survey directories and the trained-parameter container.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use divcap_core::augment::{AugmentError, CaptionPool};
use divcap_core::corpus::{CorpusError, Dataset, Video};
use divcap_core::embed::{EmbedError, EmbeddingTable, MAGIC};
use divcap_core::lexicon::{LexiconError, PosLexicon};
use divcap_core::survey::{ResponseRecord, SurveyDoc, SurveyKey};
use divcap_core::train::{Linear, ModelParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("{path}:{line}: {source}")]
    Pool {
        path: PathBuf,
        line: usize,
        #[source]
        source: AugmentError,
    },
    #[error("{path}: {source}")]
    Embedding {
        path: PathBuf,
        #[source]
        source: EmbedError,
    },
    #[error("{path}: {source}")]
    Lexicon {
        path: PathBuf,
        #[source]
        source: LexiconError,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

impl IoError {
    fn fs(path: &Path, source: std::io::Error) -> Self {
        IoError::Fs { path: path.to_path_buf(), source }
    }

    fn invalid(path: &Path, message: impl Into<String>) -> Self {
        IoError::Invalid { path: path.to_path_buf(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, IoError>;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| IoError::fs(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| IoError::fs(path, e))
}

/// Writes through a sibling temp file and renames, so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| IoError::fs(dir, e))?;
    }
    let tmp = path.with_extension("tmp-write");
    let mut f = File::create(&tmp).map_err(|e| IoError::fs(&tmp, e))?;
    f.write_all(bytes).map_err(|e| IoError::fs(&tmp, e))?;
    f.sync_all().map_err(|e| IoError::fs(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| IoError::fs(path, e))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_pretty(value).as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| IoError::MalformedLine {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Parses one JSON value per non-blank line. Errors carry 1-based line
/// numbers.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>> {
    let f = File::open(path).map_err(|e| IoError::fs(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| IoError::fs(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| IoError::MalformedLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(items: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    for item in items {
        serde_json::to_writer(&mut out, &item).expect("serializable value");
        out.push(b'\n');
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VideoLine {
    video_id: String,
    duration_s: f64,
    events: Vec<divcap_core::corpus::EventSegment>,
    #[serde(default)]
    feature_ref: Option<String>,
}

/// Reads a dataset JSONL file and checks every invariant. `name` and
/// `split` label the result; the file itself is one split.
pub fn read_dataset(path: &Path, name: &str, split: &str) -> Result<Dataset> {
    let mut videos: Vec<Video> = Vec::new();
    let mut seen = BTreeSet::new();
    for (_, v) in read_jsonl::<VideoLine>(path)? {
        let video = Video {
            video_id: v.video_id,
            duration_s: v.duration_s,
            events: v.events,
            feature_ref: v.feature_ref,
        };
        video.validate().map_err(|source| IoError::Corpus { path: path.to_path_buf(), source })?;
        if !seen.insert(video.video_id.clone()) {
            return Err(IoError::Corpus {
                path: path.to_path_buf(),
                source: CorpusError::DuplicateId(video.video_id),
            });
        }
        videos.push(video);
    }
    Ok(Dataset { name: name.to_string(), split: split.to_string(), videos })
}

pub fn dataset_bytes(dataset: &Dataset) -> Vec<u8> {
    jsonl_bytes(&dataset.videos)
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    write_atomic(path, &dataset_bytes(dataset))
}

/// Reads pools and validates each one, against its video when `dataset`
/// is given.
pub fn read_pools(path: &Path, dataset: Option<&Dataset>) -> Result<Vec<CaptionPool>> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, pool) in read_jsonl::<CaptionPool>(path)? {
        let video = dataset.and_then(|d| d.get(&pool.video_id));
        pool.validate(video)
            .map_err(|source| IoError::Pool { path: path.to_path_buf(), line, source })?;
        if !seen.insert(pool.video_id.clone()) {
            return Err(IoError::MalformedLine {
                path: path.to_path_buf(),
                line,
                message: format!("duplicate pool for {:?}", pool.video_id),
            });
        }
        out.push(pool);
    }
    Ok(out)
}

pub fn write_pools(path: &Path, pools: &[CaptionPool]) -> Result<()> {
    let mut sorted: Vec<&CaptionPool> = pools.iter().collect();
    sorted.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    write_atomic(path, &jsonl_bytes(sorted))
}

#[derive(Serialize, Deserialize)]
struct VectorLine {
    id: String,
    vec: Vec<f32>,
}

/// Loads a DVEC file, or JSONL `{"id", "vec"}` lines when the magic is
/// absent.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(MAGIC) {
        return EmbeddingTable::decode(&bytes).map_err(|source| IoError::Embedding { path: path.to_path_buf(), source });
    }
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| IoError::Embedding { path: path.to_path_buf(), source: EmbedError::BadMagic })?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: VectorLine = serde_json::from_str(line).map_err(|e| IoError::MalformedLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        rows.push((v.id, v.vec));
    }
    if rows.is_empty() {
        return Err(IoError::Embedding { path: path.to_path_buf(), source: EmbedError::BadMagic });
    }
    EmbeddingTable::from_rows(rows, false).map_err(|source| IoError::Embedding { path: path.to_path_buf(), source })
}

pub fn write_embeddings(path: &Path, table: &EmbeddingTable) -> Result<()> {
    write_atomic(path, &table.encode())
}

/// The bundled lexicon, or a TSV replacement.
pub fn load_lexicon(path: Option<&Path>) -> Result<PosLexicon> {
    match path {
        None => Ok(PosLexicon::bundled()),
        Some(p) => PosLexicon::from_tsv(&read_text(p)?).map_err(|source| IoError::Lexicon { path: p.to_path_buf(), source }),
    }
}

fn version_file(dir: &Path, version: u32) -> PathBuf {
    dir.join(format!("v{version}.json"))
}

pub fn write_surveys(dir: &Path, docs: &[SurveyDoc]) -> Result<()> {
    for d in docs {
        write_json(&version_file(dir, d.version_id), d)?;
    }
    Ok(())
}

pub fn write_keys(dir: &Path, keys: &[SurveyKey]) -> Result<()> {
    for k in keys {
        write_json(&version_file(dir, k.version_id), k)?;
    }
    Ok(())
}

fn read_versioned<T: DeserializeOwned>(dir: &Path, version_of: impl Fn(&T) -> u32) -> Result<Vec<T>> {
    let entries = fs::read_dir(dir).map_err(|e| IoError::fs(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut out: BTreeMap<u32, T> = BTreeMap::new();
    for p in paths {
        let doc: T = read_json(&p)?;
        let v = version_of(&doc);
        if out.insert(v, doc).is_some() {
            return Err(IoError::invalid(&p, format!("version {v} appears twice")));
        }
    }
    Ok(out.into_values().collect())
}

/// Every `*.json` survey in `dir`, ordered by version.
pub fn read_surveys(dir: &Path) -> Result<Vec<SurveyDoc>> {
    read_versioned(dir, |d: &SurveyDoc| d.version_id)
}

pub fn read_keys(dir: &Path) -> Result<Vec<SurveyKey>> {
    read_versioned(dir, |k: &SurveyKey| k.version_id)
}

pub fn read_responses(path: &Path) -> Result<Vec<ResponseRecord>> {
    Ok(read_jsonl(path)?.into_iter().map(|(_, r)| r).collect())
}

const SECTIONS: [&str; 3] = ["text", "video", "proj"];

fn linear_table(prefix: &str, l: &Linear) -> std::result::Result<EmbeddingTable, EmbedError> {
    let rows = (0..l.rows)
        .map(|r| {
            let mut row: Vec<f64> = l.weight[r * l.cols..(r + 1) * l.cols].to_vec();
            row.push(l.bias[r]);
            (format!("{prefix}/{r}"), row)
        })
        .collect();
    EmbeddingTable::from_f64_rows(rows, false)
}

/// Three concatenated DVEC tables named `text/`, `video/` and `proj/`;
/// each row holds one output unit's weights followed by its bias. Values
/// are stored as 32-bit floats.
pub fn params_bytes(params: &ModelParams) -> Vec<u8> {
    let mut out = Vec::new();
    for (name, l) in SECTIONS.iter().zip([&params.text, &params.video, &params.proj]) {
        out.extend(linear_table(name, l).expect("well-formed parameter rows").encode());
    }
    out
}

pub fn write_params(path: &Path, params: &ModelParams) -> Result<()> {
    write_atomic(path, &params_bytes(params))
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let bytes = read_bytes(path)?;
    let mut rest = bytes.as_slice();
    let mut layers = Vec::new();
    for name in SECTIONS {
        let (table, used) = EmbeddingTable::decode_prefix(rest)
            .map_err(|source| IoError::Embedding { path: path.to_path_buf(), source })?;
        rest = &rest[used..];
        let rows = table.len();
        if rows == 0 || table.dim() < 2 {
            return Err(IoError::invalid(path, format!("section {name} is empty")));
        }
        let cols = table.dim() - 1;
        let mut l = Linear::zeros(rows, cols);
        for r in 0..rows {
            if table.ids()[r] != format!("{name}/{r}") {
                return Err(IoError::invalid(path, format!("expected row {name}/{r}, found {}", table.ids()[r])));
            }
            let row = table.row(r);
            for (w, &x) in l.weight[r * cols..(r + 1) * cols].iter_mut().zip(&row[..cols]) {
                *w = f64::from(x);
            }
            l.bias[r] = f64::from(row[cols]);
        }
        layers.push(l);
    }
    if !rest.is_empty() {
        return Err(IoError::invalid(path, "trailing bytes after the parameter sections"));
    }
    let proj = layers.pop().expect("three sections");
    let video = layers.pop().expect("three sections");
    let text = layers.pop().expect("three sections");
    if video.rows != text.rows || proj.rows != text.rows || proj.cols != text.rows {
        return Err(IoError::invalid(path, "parameter sections disagree on the embedding width"));
    }
    Ok(ModelParams { text, video, proj })
}

/// Appends one line and flushes it to disk before returning.
pub fn append_line_durable(file: &mut File, line: &[u8]) -> std::io::Result<()> {
    let mut w = BufWriter::new(&mut *file);
    w.write_all(line)?;
    w.write_all(b"\n")?;
    w.flush()?;
    drop(w);
    file.sync_data()
}
