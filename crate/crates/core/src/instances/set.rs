use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_instance, Instance, NkInstance};
use crate::error::{Error, Result};
use crate::instances::{generate_puboi, Family, PuboiParams};
use crate::search::Landscape;
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    fn streams(self) -> (Stream, Stream) {
        match self {
            Role::Train => (Stream::TrainInstance, Stream::TrainStart),
            Role::Validation => (Stream::ValidInstance, Stream::ValidStart),
            Role::Test => (Stream::TestInstance, Stream::TestStart),
        }
    }

    pub fn instance_seed(self, master: u64, index: usize) -> u64 {
        seed::derive(master, self.streams().0, &[index as u64])
    }

    pub fn start_seed(self, master: u64, index: usize, restart: usize) -> u64 {
        seed::derive(master, self.streams().1, &[index as u64, restart as u64])
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Role::Train),
            "validation" | "valid" => Ok(Role::Validation),
            "test" => Ok(Role::Test),
            other => Err(Error::InvalidParameter(format!("unknown role '{other}'"))),
        }
    }
}

/// One line of a set manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub restarts: usize,
}

/// On-disk description of an instance set: `{role, master_seed, entries}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetManifest {
    pub role: Role,
    pub master_seed: u64,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// An entry for [`InstanceSet::from_instances`].
#[derive(Debug, Clone)]
pub struct EntrySpec {
    pub id: String,
    pub instance: Instance,
    pub restarts: usize,
}

/// Instances plus their start points. Start point `j` of instance `i` is
/// drawn from a seed keyed by `(master_seed, role, i, j)`, so every strategy
/// evaluated on the set sees the same starts.
#[derive(Debug, Clone)]
pub struct InstanceSet {
    pub role: Role,
    pub master_seed: u64,
    pub ids: Vec<String>,
    pub instances: Vec<Instance>,
    pub start_points: Vec<Vec<Vec<bool>>>,
}

impl InstanceSet {
    pub fn from_instances(role: Role, master_seed: u64, entries: Vec<EntrySpec>) -> Self {
        let mut ids = Vec::with_capacity(entries.len());
        let mut instances = Vec::with_capacity(entries.len());
        let mut start_points = Vec::with_capacity(entries.len());
        for (i, e) in entries.into_iter().enumerate() {
            let n = e.instance.n();
            start_points.push(
                (0..e.restarts)
                    .map(|j| seed::random_bits(n, role.start_seed(master_seed, i, j)))
                    .collect(),
            );
            ids.push(e.id);
            instances.push(e.instance);
        }
        Self {
            role,
            master_seed,
            ids,
            instances,
            start_points,
        }
    }

    /// `count` NK instances whose seeds come from the role's instance stream.
    pub fn generate_nk(role: Role, n: usize, k: usize, count: usize, restarts: usize, master_seed: u64) -> Result<Self> {
        let entries = (0..count)
            .map(|i| {
                let inst = NkInstance::generate(n, k, role.instance_seed(master_seed, i))?;
                Ok(EntrySpec {
                    id: format!("nk_n{n}_k{k}_{i:04}"),
                    instance: Instance::Nk(inst),
                    restarts,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_instances(role, master_seed, entries))
    }

    /// `count` PUBOi-style QUBO instances.
    pub fn generate_qubo(
        role: Role,
        params: &PuboiParams,
        family: Option<Family>,
        count: usize,
        restarts: usize,
        master_seed: u64,
    ) -> Result<Self> {
        let tag = family.map(|f| f.short_name()).unwrap_or("custom");
        let entries = (0..count)
            .map(|i| {
                let inst = generate_puboi(params, family, role.instance_seed(master_seed, i))?;
                Ok(EntrySpec {
                    id: format!("qubo_n{}_m{}_{tag}_{i:04}", params.n, params.m),
                    instance: Instance::Qubo(inst),
                    restarts,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_instances(role, master_seed, entries))
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Every `(instance index, start point)` pair in set order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, &[bool])> + '_ {
        self.start_points
            .iter()
            .enumerate()
            .flat_map(|(i, starts)| starts.iter().map(move |s| (i, s.as_slice())))
    }

    /// Seed keying the per-state decisions of trajectory `(i, j)`.
    pub fn trajectory_seed(&self, i: usize, j: usize) -> u64 {
        seed::subseed(self.role.start_seed(self.master_seed, i, j), Stream::SetStart)
    }

    /// Every `(instance index, restart index)` pair in set order.
    pub fn units(&self) -> Vec<(usize, usize)> {
        self.start_points
            .iter()
            .enumerate()
            .flat_map(|(i, s)| (0..s.len()).map(move |j| (i, j)))
            .collect()
    }

    /// Dimensions of the instances, deduplicated and sorted.
    pub fn dimensions(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.instances.iter().map(Landscape::n).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// Loads a manifest and every instance it lists; entry paths are
    /// resolved relative to the manifest's directory.
    pub fn load(manifest_path: &Path) -> Result<Self> {
        let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
        let manifest: SetManifest =
            serde_json::from_str(&text).map_err(|e| Error::malformed(manifest_path, e.to_string()))?;
        if manifest.entries.is_empty() {
            return Err(Error::malformed(manifest_path, "manifest lists no instances"));
        }
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let entries = manifest
            .entries
            .iter()
            .map(|e| {
                if e.restarts == 0 {
                    return Err(Error::malformed(manifest_path, "restarts must be positive"));
                }
                let path = base.join(&e.path);
                Ok(EntrySpec {
                    id: e.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                    instance: load_instance(&path)?,
                    restarts: e.restarts,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_instances(manifest.role, manifest.master_seed, entries))
    }

    /// Writes each instance next to a `manifest.json`; returns the manifest
    /// path.
    pub fn save(&self, dir: &Path, provenance: Option<&str>) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::with_capacity(self.len());
        for ((id, inst), starts) in self.ids.iter().zip(&self.instances).zip(&self.start_points) {
            let ext = match inst {
                Instance::Nk(_) => "json",
                Instance::Qubo(_) => "qubo",
            };
            let file = PathBuf::from(format!("{id}.{ext}"));
            super::io::save_with_provenance(inst, &dir.join(&file), provenance)?;
            entries.push(ManifestEntry {
                path: file,
                restarts: starts.len(),
            });
        }
        let manifest = SetManifest {
            role: self.role,
            master_seed: self.master_seed,
            entries,
            provenance: provenance.map(str::to_owned),
        };
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_points_reproducible() {
        let a = InstanceSet::generate_nk(Role::Test, 16, 2, 3, 2, 42).unwrap();
        let b = InstanceSet::generate_nk(Role::Test, 16, 2, 3, 2, 42).unwrap();
        assert_eq!(a.start_points, b.start_points);
        assert_eq!(a.instances, b.instances);
        assert_ne!(a.start_points[0][0], a.start_points[0][1]);
        let other_role = InstanceSet::generate_nk(Role::Validation, 16, 2, 3, 2, 42).unwrap();
        assert_ne!(a.instances, other_role.instances);
    }

    #[test]
    fn save_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let set = InstanceSet::generate_nk(Role::Test, 10, 1, 4, 1, 5).unwrap();
        let manifest = set.save(dir.path(), None).unwrap();
        let back = InstanceSet::load(&manifest).unwrap();
        assert_eq!(back.instances, set.instances);
        assert_eq!(back.start_points, set.start_points);
        assert_eq!(back.ids, set.ids);
    }

    #[test]
    fn empty_manifest_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"role":"test","master_seed":1,"entries":[]}"#).unwrap();
        assert!(InstanceSet::load(&path).is_err());
    }
}
