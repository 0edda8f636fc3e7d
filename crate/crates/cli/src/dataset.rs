//! Simulated datasets on disk: four matrix files per set plus a manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use netbaseline::simgen::{gen_set, set_seeds, DatasetLayout, GroundTruthSet, SetSeeds, SimSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

pub const MANIFEST: &str = "manifest.json";

/// Component tags used in file names, in write order.
pub const COMPONENTS: [&str; 4] = ["X", "A", "E", "N"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub file: String,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetEntry {
    pub id: usize,
    pub baseline_index: usize,
    pub alpha: f64,
    pub seeds: SetSeeds,
    pub sigma: Vec<f64>,
    /// Keyed by component tag.
    pub files: BTreeMap<String, FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub master_seed: u64,
    pub spec: SimSpec,
    pub layout: DatasetLayout,
    pub sets: Vec<SetEntry>,
}

pub fn set_file_name(id: usize, tag: &str) -> String {
    format!("set_{id:04}_{tag}.csv")
}

/// Writes the four component files of `set` into `dir`.
pub fn write_set(dir: &Path, set: &GroundTruthSet, seeds: SetSeeds) -> Result<SetEntry> {
    let mut files = BTreeMap::new();
    for (tag, m) in COMPONENTS
        .iter()
        .zip([&set.x, &set.baseline, &set.anomaly, &set.noise])
    {
        let file = set_file_name(set.id, tag);
        let digest = io::write_matrix(&dir.join(&file), m.view())?;
        files.insert(tag.to_string(), FileEntry { file, digest });
    }
    Ok(SetEntry {
        id: set.id,
        baseline_index: set.baseline_index,
        alpha: set.spec.alpha,
        seeds,
        sigma: set.sigma.clone(),
        files,
    })
}

/// Generates every set of `layout` and writes it with a manifest.
pub fn write_dataset(dir: &Path, spec: &SimSpec, layout: &DatasetLayout) -> Result<Manifest> {
    spec.validate()?;
    layout.validate()?;
    io::create_dir(dir)?;
    let mut sets = Vec::with_capacity(layout.len());
    for id in 0..layout.len() {
        let set = gen_set(spec, layout, id)?;
        let key = layout.key(id).expect("id within layout");
        sets.push(write_set(dir, &set, set_seeds(spec.seed, &key))?);
    }
    let manifest = Manifest {
        master_seed: spec.seed,
        spec: spec.clone(),
        layout: layout.clone(),
        sets,
    };
    io::write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        io::read_json(&dir.join(MANIFEST))
    }

    pub fn entry(&self, id: usize) -> Option<&SetEntry> {
        self.sets.iter().find(|s| s.id == id)
    }

    /// Set whose input matrix is stored under `file_name`.
    pub fn entry_for_file(&self, file_name: &str) -> Option<&SetEntry> {
        self.sets
            .iter()
            .find(|s| s.files.get("X").is_some_and(|f| f.file == file_name))
    }

    /// Reads one set back from `dir`, checking every digest.
    pub fn load_set(&self, dir: &Path, id: usize) -> Result<GroundTruthSet> {
        let entry = self
            .entry(id)
            .ok_or_else(|| CliError::InvalidConfig(format!("set {id} is not in the manifest")))?;
        let load = |tag: &str| {
            let f = entry.files.get(tag).ok_or_else(|| CliError::Format {
                path: dir.join(MANIFEST),
                message: format!("set {id} has no {tag} file"),
            })?;
            io::read_matrix_checked(&dir.join(&f.file), &f.digest)
        };
        Ok(GroundTruthSet {
            id,
            baseline_index: entry.baseline_index,
            x: load("X")?,
            baseline: load("A")?,
            anomaly: load("E")?,
            noise: load("N")?,
            sigma: entry.sigma.clone(),
            spec: SimSpec {
                alpha: entry.alpha,
                ..self.spec.clone()
            },
        })
    }
}

/// Manifest next to a matrix file, with the file's entry, if there is one.
pub fn sibling_entry(input: &Path) -> Result<Option<SetEntry>> {
    let dir = input
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    if !dir.join(MANIFEST).exists() {
        return Ok(None);
    }
    let manifest = Manifest::read(&dir)?;
    let name = input
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default();
    Ok(manifest.entry_for_file(name).cloned())
}
