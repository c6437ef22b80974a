use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::cfront::parse_source;
use crate::treesplit::{split, StatementSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone)]
pub struct DataSample {
    pub id: String,
    pub seq: StatementSequence,
    pub label: usize,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestFailure {
    pub id: String,
    pub error: String,
}

/// Raw program before parsing.
#[derive(Debug, Clone)]
pub struct SourceItem {
    pub id: String,
    pub label: String,
    pub source: String,
    pub split: Option<Split>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<DataSample>,
    pub label_names: Vec<String>,
    pub failures: Vec<IngestFailure>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    path: String,
    label: String,
    #[serde(default)]
    split: Option<Split>,
}

impl Dataset {
    /// Parse and split every item. Items that fail are reported in
    /// `failures`. Labels are numbered in sorted name order. Items without
    /// an explicit split are assigned 60/20/20 by a shuffle seeded with
    /// `seed`.
    pub fn from_sources(items: Vec<SourceItem>, seed: u64) -> Result<Self, TrainError> {
        let mut failures = Vec::new();
        let mut parsed = Vec::new();
        for item in items {
            let result = parse_source(&item.source)
                .map_err(|e| e.to_string())
                .and_then(|ast| split(&ast).map_err(|e| e.to_string()));
            match result {
                Ok(seq) => parsed.push((item, seq)),
                Err(error) => failures.push(IngestFailure { id: item.id, error }),
            }
        }
        if parsed.is_empty() {
            return Err(TrainError::AllSamplesFailed { failures });
        }
        let label_names: Vec<String> =
            parsed.iter().map(|(i, _)| i.label.clone()).collect::<BTreeSet<_>>().into_iter().collect();

        let unassigned: Vec<usize> = (0..parsed.len()).filter(|&i| parsed[i].0.split.is_none()).collect();
        let assigned = assign_splits(unassigned.len(), seed);
        let mut splits: Vec<Option<Split>> = parsed.iter().map(|(i, _)| i.split).collect();
        for (&idx, s) in unassigned.iter().zip(assigned) {
            splits[idx] = Some(s);
        }

        let samples = parsed
            .into_iter()
            .zip(splits)
            .map(|((item, seq), s)| DataSample {
                label: label_names.binary_search(&item.label).expect("label collected above"),
                id: item.id,
                seq,
                split: s.expect("every split assigned"),
            })
            .collect();
        Ok(Self { samples, label_names, failures })
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.samples.len()).filter(|&i| self.samples[i].split == split).collect()
    }

    pub fn split_sizes(&self) -> [usize; 3] {
        [Split::Train, Split::Val, Split::Test].map(|s| self.indices(s).len())
    }

    /// Put every sample in one split.
    pub fn with_all_in(mut self, split: Split) -> Self {
        for s in &mut self.samples {
            s.split = split;
        }
        self
    }
}

/// Seeded shuffle of `n` positions; the first 60% (rounded) go to train and
/// the next 20% to validation.
pub fn assign_splits(n: usize, seed: u64) -> Vec<Split> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (n as f64 * 0.6).round() as usize;
    let n_val = ((n as f64 * 0.2).round() as usize).min(n - n_train);
    let mut out = vec![Split::Test; n];
    for (rank, &i) in order.iter().enumerate() {
        out[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }
    out
}

/// Load a JSON-lines manifest (`{"path", "label", "split"?}`, paths relative
/// to the manifest) or a directory with one subdirectory of `.c` files per
/// label.
pub fn ingest(path: &Path, seed: u64) -> Result<Dataset, TrainError> {
    if !path.exists() {
        return Err(TrainError::ManifestNotFound(path.to_path_buf()));
    }
    let (items, mut failures) = if path.is_dir() { read_label_dirs(path)? } else { read_manifest(path)? };
    match Dataset::from_sources(items, seed) {
        Ok(mut ds) => {
            failures.append(&mut ds.failures);
            ds.failures = failures;
            Ok(ds)
        }
        Err(TrainError::AllSamplesFailed { failures: mut more }) => {
            failures.append(&mut more);
            Err(TrainError::AllSamplesFailed { failures })
        }
        Err(e) => Err(e),
    }
}

fn read_manifest(path: &Path) -> Result<(Vec<SourceItem>, Vec<IngestFailure>), TrainError> {
    let text = fs::read_to_string(path).map_err(|e| TrainError::Io(path.to_path_buf(), e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestLine = serde_json::from_str(line)
            .map_err(|e| TrainError::BadManifest { line: n + 1, message: e.to_string() })?;
        let file: PathBuf = base.join(&entry.path);
        match fs::read(&file) {
            Ok(bytes) => items.push(SourceItem {
                id: entry.path,
                label: entry.label,
                source: String::from_utf8_lossy(&bytes).into_owned(),
                split: entry.split,
            }),
            Err(e) => failures.push(IngestFailure { id: entry.path, error: e.to_string() }),
        }
    }
    Ok((items, failures))
}

fn read_label_dirs(root: &Path) -> Result<(Vec<SourceItem>, Vec<IngestFailure>), TrainError> {
    let io = |e: std::io::Error| TrainError::Io(root.to_path_buf(), e.to_string());
    let mut dirs: Vec<PathBuf> =
        fs::read_dir(root).map_err(io)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    dirs.sort();
    let mut items = Vec::new();
    let mut failures = Vec::new();
    for dir in dirs {
        let label = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "c"))
            .collect();
        files.sort();
        for f in files {
            let id = f.strip_prefix(root).unwrap_or(&f).to_string_lossy().into_owned();
            match fs::read(&f) {
                Ok(bytes) => items.push(SourceItem {
                    id,
                    label: label.clone(),
                    source: String::from_utf8_lossy(&bytes).into_owned(),
                    split: None,
                }),
                Err(e) => failures.push(IngestFailure { id, error: e.to_string() }),
            }
        }
    }
    Ok((items, failures))
}
