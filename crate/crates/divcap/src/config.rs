//! TOML configuration for training, corpus synthesis and sweeps.

use std::path::Path;

use divcap_core::train::{kind_subset, SweepCell, SyntheticSpec, TrainConfig};
use divcap_core::CaptionKind;
use serde::Deserialize;

use crate::io::{read_text, IoError};

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    toml::from_str(&read_text(path)?).map_err(|e| IoError::Invalid { path: path.to_path_buf(), message: e.to_string() })
}

pub fn load_train_config(path: &Path) -> Result<TrainConfig, IoError> {
    let cfg: TrainConfig = parse_toml(path)?;
    cfg.validate().map_err(|e| IoError::Invalid { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(cfg)
}

pub fn load_synthetic_spec(path: &Path) -> Result<SyntheticSpec, IoError> {
    let spec: SyntheticSpec = parse_toml(path)?;
    spec.validate().map_err(|e| IoError::Invalid { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(spec)
}

/// Cartesian axes; every combination becomes one cell.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxes {
    pub eta: Vec<f64>,
    pub alpha_t2t: Vec<f64>,
    pub alpha_proj: Vec<f64>,
    /// Each entry is one allowed-kinds set.
    pub allowed_kinds: Vec<Vec<CaptionKind>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub base: TrainConfig,
    #[serde(default)]
    pub spec: SyntheticSpec,
    #[serde(default)]
    pub grid: Option<GridAxes>,
    /// Explicit cells, run after the grid's.
    #[serde(default)]
    pub cells: Vec<CellSpec>,
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub eta: Option<f64>,
    pub alpha_t2t: Option<f64>,
    pub alpha_proj: Option<f64>,
    pub allowed_kinds: Option<Vec<CaptionKind>>,
    pub lr: Option<f64>,
}

fn label_for(kinds: &[CaptionKind]) -> String {
    for (s, j, p) in [
        (true, false, false),
        (false, true, false),
        (false, false, true),
        (true, true, false),
        (true, false, true),
        (false, true, true),
        (true, true, true),
    ] {
        let (label, set) = kind_subset(s, j, p);
        if set == kinds {
            return label;
        }
    }
    kinds.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(",")
}

impl SweepGrid {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let grid: SweepGrid = parse_toml(path)?;
        let bad = |m: &str| IoError::Invalid { path: path.to_path_buf(), message: m.to_string() };
        if grid.seeds.is_empty() {
            return Err(bad("seeds must not be empty"));
        }
        if grid.cells().is_empty() {
            return Err(bad("the grid has no cells"));
        }
        Ok(grid)
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let base = &self.base;
        let cell = |eta: f64, t2t: f64, proj: f64, kinds: &[CaptionKind], lr: Option<f64>| SweepCell {
            eta,
            alpha_t2t: t2t,
            alpha_proj: proj,
            kinds_label: label_for(kinds),
            allowed_kinds: kinds.to_vec(),
            lr,
        };
        let mut out = Vec::new();
        if let Some(g) = &self.grid {
            let or_base = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
            let kinds = if g.allowed_kinds.is_empty() { vec![base.allowed_kinds.clone()] } else { g.allowed_kinds.clone() };
            for &eta in &or_base(&g.eta, base.eta) {
                for &t2t in &or_base(&g.alpha_t2t, base.alpha_t2t) {
                    for &proj in &or_base(&g.alpha_proj, base.alpha_proj) {
                        for k in &kinds {
                            out.push(cell(eta, t2t, proj, k, None));
                        }
                    }
                }
            }
        }
        for c in &self.cells {
            out.push(cell(
                c.eta.unwrap_or(base.eta),
                c.alpha_t2t.unwrap_or(base.alpha_t2t),
                c.alpha_proj.unwrap_or(base.alpha_proj),
                c.allowed_kinds.as_deref().unwrap_or(&base.allowed_kinds),
                c.lr,
            ));
        }
        out
    }
}
