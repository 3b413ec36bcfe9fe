//! Experiment manifests and the hash stamped into every artifact header.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Identity of one CLI invocation.
///
/// The hash covers the command, the configuration text and the master seed.
/// Worker count and output directory are deliberately excluded: they change
/// where and how fast outputs are produced, not their bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    /// Canonical text of the effective configuration.
    pub config: String,
    pub out_dir: PathBuf,
    pub master_seed: u64,
    pub workers: usize,
}

impl ExperimentManifest {
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for part in [self.command.as_bytes(), self.config.as_bytes(), &self.master_seed.to_le_bytes()] {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `command=<cmd> seed=<seed> hash=<hex>`, the one-line header form.
    pub fn header(&self) -> String {
        format!("command={} seed={} hash={}", self.command, self.master_seed, self.hash())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest() -> ExperimentManifest {
        ExperimentManifest {
            command: "train".into(),
            config_path: Some("a.toml".into()),
            config: "n = 16\n".into(),
            out_dir: "out".into(),
            master_seed: 7,
            workers: 1,
        }
    }

    #[test]
    fn hash_ignores_workers_and_out_dir() {
        let a = manifest();
        let mut b = a.clone();
        b.workers = 8;
        b.out_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn hash_tracks_seed_and_config() {
        let a = manifest();
        let mut b = a.clone();
        b.master_seed = 8;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.config.push(' ');
        assert_ne!(a.hash(), c.hash());
    }
}
