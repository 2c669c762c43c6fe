//! Line-oriented model configuration files.
//!
//! ```text
//! [state_space]
//! dims = 2
//! lower = 0 0
//! upper = 2 2
//! cells = 64 64
//!
//! [actions]
//! grid v: 0.8 1 5
//! grid u1: 0 1 11
//!
//! [labels]
//! S = box 0.2 0.2 1.5 1.5
//! default = BOT
//!
//! [kernel]
//! builtin = powernet
//! ```
//!
//! Actions are either explicit `action = v1 v2 ...` lines (optionally named
//! with `names = a b ...`) or `grid` lines whose Cartesian product is taken
//! with the first grid varying slowest. Label boxes are closed, tested on
//! cell centres and applied in file order so that the last match wins.
//! A `file = path` kernel is a CSV with columns `state,action,next_state,prob`;
//! pairs missing from the file are infeasible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{GridModel, Labeling, MdpBuilder, ModelError, StateGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct LabelBox {
    pub name: String,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LabelBox {
    pub fn contains(&self, point: &[f64]) -> bool {
        point
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&p, (&lo, &hi))| lo <= p && p <= hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpec {
    pub boxes: Vec<LabelBox>,
    pub default: String,
}

impl LabelSpec {
    /// Box names in order of first appearance, then the default letter.
    pub fn alphabet(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for b in &self.boxes {
            if !out.contains(&b.name) {
                out.push(b.name.clone());
            }
        }
        if !out.contains(&self.default) {
            out.push(self.default.clone());
        }
        out
    }

    pub fn apply(&self, grid: &StateGrid) -> Labeling {
        let alphabet = self.alphabet();
        let index = |name: &str| alphabet.iter().position(|a| a == name).unwrap() as u32;
        let default = index(&self.default);
        let box_letters: Vec<u32> = self.boxes.iter().map(|b| index(&b.name)).collect();
        let letters = (0..grid.total_states())
            .map(|x| {
                let c = grid.center(x);
                self.boxes
                    .iter()
                    .zip(&box_letters)
                    .filter(|(b, _)| b.contains(&c))
                    .last()
                    .map(|(_, &l)| l)
                    .unwrap_or(default)
            })
            .collect();
        Labeling::new(alphabet, letters).expect("letters drawn from the alphabet")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSource {
    Builtin {
        name: String,
        params: BTreeMap<String, String>,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub grid: StateGrid,
    pub action_vectors: Vec<Vec<f64>>,
    pub action_names: Vec<String>,
    pub labels: Option<LabelSpec>,
    pub kernel: KernelSource,
}

fn err(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Config {
        line,
        msg: msg.into(),
    }
}

fn reals(line: usize, text: &str) -> Result<Vec<f64>, ModelError> {
    text.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| err(line, format!("not a number: {t}"))))
        .collect()
}

fn ints(line: usize, text: &str) -> Result<Vec<usize>, ModelError> {
    text.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| err(line, format!("not a count: {t}"))))
        .collect()
}

struct AxisGrid {
    name: String,
    lo: f64,
    hi: f64,
    count: usize,
}

impl AxisGrid {
    fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        evenly_spaced(self.lo, self.hi, self.count)
    }
}

/// `n >= 2` points from `lo` to `hi`, the last one exactly `hi`.
pub fn evenly_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * step }).collect()
}

pub fn parse(text: &str, base_dir: &Path) -> Result<ModelConfig, ModelError> {
    let mut section = String::new();
    let mut dims: Option<usize> = None;
    let (mut lower, mut upper, mut cells) = (None, None, None);
    let mut explicit: Vec<Vec<f64>> = Vec::new();
    let mut names: Option<Vec<String>> = None;
    let mut axes: Vec<AxisGrid> = Vec::new();
    let mut boxes = Vec::new();
    let mut default = None;
    let mut builtin: Option<String> = None;
    let mut file: Option<PathBuf> = None;
    let mut params = BTreeMap::new();
    let mut saw_labels = false;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(ln, "unterminated section header"))?;
            section = name.trim().to_string();
            if !["state_space", "actions", "labels", "kernel"].contains(&section.as_str()) {
                return Err(err(ln, format!("unknown section [{section}]")));
            }
            saw_labels |= section == "labels";
            continue;
        }
        match section.as_str() {
            "state_space" => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err(ln, "expected key = value"))?;
                match key.trim() {
                    "dims" => dims = Some(ints(ln, value)?.first().copied().ok_or_else(|| err(ln, "missing dims"))?),
                    "lower" => lower = Some(reals(ln, value)?),
                    "upper" => upper = Some(reals(ln, value)?),
                    "cells" => cells = Some(ints(ln, value)?),
                    other => return Err(err(ln, format!("unknown key {other}"))),
                }
            }
            "actions" => {
                if let Some(rest) = line.strip_prefix("grid ") {
                    let (name, spec) = rest
                        .split_once(':')
                        .ok_or_else(|| err(ln, "expected grid name: lo hi count"))?;
                    let parts: Vec<&str> = spec.split_whitespace().collect();
                    if parts.len() != 3 {
                        return Err(err(ln, "expected grid name: lo hi count"));
                    }
                    let lo = reals(ln, parts[0])?[0];
                    let hi = reals(ln, parts[1])?[0];
                    let count = ints(ln, parts[2])?[0];
                    if count == 0 || lo > hi {
                        return Err(err(ln, "empty action grid"));
                    }
                    axes.push(AxisGrid {
                        name: name.trim().to_string(),
                        lo,
                        hi,
                        count,
                    });
                } else {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or_else(|| err(ln, "expected action = values or grid line"))?;
                    match key.trim() {
                        "action" => explicit.push(reals(ln, value)?),
                        "names" => names = Some(value.split_whitespace().map(String::from).collect()),
                        other => return Err(err(ln, format!("unknown key {other}"))),
                    }
                }
            }
            "labels" => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err(ln, "expected NAME = box ... or default = NAME"))?;
                let key = key.trim();
                if key == "default" {
                    default = Some(value.trim().to_string());
                    continue;
                }
                let nums = value
                    .trim()
                    .strip_prefix("box")
                    .ok_or_else(|| err(ln, "label must be a box"))?;
                let nums = reals(ln, nums)?;
                if nums.len() % 2 != 0 || nums.is_empty() {
                    return Err(err(ln, "box needs lower and upper corners"));
                }
                let d = nums.len() / 2;
                boxes.push((
                    ln,
                    LabelBox {
                        name: key.to_string(),
                        lower: nums[..d].to_vec(),
                        upper: nums[d..].to_vec(),
                    },
                ));
            }
            "kernel" => {
                let (key, value) = line
                    .split_once('=')
                    .ok_or_else(|| err(ln, "expected key = value"))?;
                let (key, value) = (key.trim(), value.trim());
                match key {
                    "builtin" => builtin = Some(value.to_string()),
                    "file" => file = Some(base_dir.join(value)),
                    _ => {
                        params.insert(key.to_string(), value.to_string());
                    }
                }
            }
            _ => return Err(err(ln, "content outside a section")),
        }
    }

    let lower = lower.ok_or_else(|| err(0, "missing state_space.lower"))?;
    let upper = upper.ok_or_else(|| err(0, "missing state_space.upper"))?;
    let cells = cells.ok_or_else(|| err(0, "missing state_space.cells"))?;
    if let Some(d) = dims {
        if d != cells.len() {
            return Err(err(0, format!("dims = {d} but {} cell counts", cells.len())));
        }
    }
    let grid = StateGrid::new(lower, upper, cells)?;

    if !explicit.is_empty() && !axes.is_empty() {
        return Err(err(0, "mix of explicit and grid actions"));
    }
    let (action_vectors, action_names) = if axes.is_empty() {
        if explicit.is_empty() {
            return Err(err(0, "no actions"));
        }
        let width = explicit[0].len();
        if explicit.iter().any(|v| v.len() != width) {
            return Err(err(0, "action vectors of different lengths"));
        }
        let names = names.unwrap_or_else(|| (1..=width).map(|i| format!("u{i}")).collect());
        if names.len() != width {
            return Err(err(0, "names do not match action width"));
        }
        (explicit, names)
    } else {
        let mut vectors: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &axes {
            let vals = axis.values();
            vectors = vectors
                .iter()
                .flat_map(|prefix| {
                    vals.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        (vectors, axes.iter().map(|a| a.name.clone()).collect())
    };

    let labels = if saw_labels || !boxes.is_empty() || default.is_some() {
        let default = default.ok_or_else(|| err(0, "labels need default = NAME"))?;
        for (ln, b) in &boxes {
            if b.lower.len() != grid.dims() {
                return Err(err(*ln, "box dimension does not match state space"));
            }
        }
        Some(LabelSpec {
            boxes: boxes.into_iter().map(|(_, b)| b).collect(),
            default,
        })
    } else {
        None
    };

    let kernel = match (builtin, file) {
        (Some(name), None) => KernelSource::Builtin { name, params },
        (None, Some(path)) => KernelSource::File(path),
        (Some(_), Some(_)) => return Err(err(0, "kernel has both builtin and file")),
        (None, None) => return Err(err(0, "missing kernel source")),
    };

    Ok(ModelConfig {
        grid,
        action_vectors,
        action_names,
        labels,
        kernel,
    })
}

impl ModelConfig {
    /// Build a model whose kernel comes from a CSV file.
    pub fn build_from_file(&self) -> Result<GridModel, ModelError> {
        let KernelSource::File(path) = &self.kernel else {
            return Err(err(0, "kernel is not file-backed"));
        };
        let n = self.grid.total_states();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        let mut rows: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
            let ln = i + 2;
            if rec.len() != 4 {
                return Err(err(ln, "kernel rows need state,action,next_state,prob"));
            }
            let parse_idx = |k: usize| {
                rec[k]
                    .parse::<usize>()
                    .map_err(|_| err(ln, format!("bad index {}", &rec[k])))
            };
            let (x, a, y) = (parse_idx(0)?, parse_idx(1)?, parse_idx(2)?);
            let p: f64 = rec[3]
                .parse()
                .map_err(|_| err(ln, format!("bad probability {}", &rec[3])))?;
            rows.entry((x, a)).or_default().push((y, p));
        }
        let mut builder =
            MdpBuilder::with_action_vectors(n, self.action_vectors.clone(), self.action_names.clone());
        for ((x, a), row) in rows {
            builder.set_row(x, a, &row)?;
        }
        if let Some(spec) = &self.labels {
            builder = builder.labeling(spec.apply(&self.grid));
        }
        Ok(GridModel {
            grid: self.grid.clone(),
            mdp: builder.build()?,
        })
    }
}
