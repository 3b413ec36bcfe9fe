//! Problem instances: NK landscapes and QUBO matrices, their generators, file
//! formats, and reproducible instance sets.

mod io;
mod nk;
mod puboi;
mod qubo;
mod set;

pub use io::{load_instance, read_instance, save_instance, write_instance};
pub use nk::{NkCache, NkInstance, MAX_K};
pub use puboi::{draw_terms, generate_puboi, important_count, PuboiParams, PuboiTerms, PHI};
pub use qubo::{Family, QuboCache, QuboInstance, QuboMetadata};
pub use set::{EntrySpec, InstanceSet, ManifestEntry, Role, SetManifest};

use crate::search::Landscape;

pub fn generate_nk(n: usize, k: usize, seed: u64) -> crate::Result<NkInstance> {
    NkInstance::generate(n, k, seed)
}

/// Any supported instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Nk(NkInstance),
    Qubo(QuboInstance),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Nk(_) => "nk",
            Instance::Qubo(_) => "qubo",
        }
    }

    pub fn eval(&self, x: &[bool]) -> crate::Result<f64> {
        match self {
            Instance::Nk(i) => i.eval(x),
            Instance::Qubo(i) => i.eval(x),
        }
    }

    /// The same instance with its objective multiplied by `factor`; QUBO
    /// matrices are scaled in place, NK landscapes are wrapped.
    pub fn scaled(&self, factor: f64) -> ScaledInstance {
        match self {
            Instance::Nk(i) => ScaledInstance::Nk(crate::search::Scaled::new(i.clone(), factor)),
            Instance::Qubo(q) => ScaledInstance::Qubo(q.scaled(factor)),
        }
    }
}

impl From<NkInstance> for Instance {
    fn from(i: NkInstance) -> Self {
        Instance::Nk(i)
    }
}

impl From<QuboInstance> for Instance {
    fn from(i: QuboInstance) -> Self {
        Instance::Qubo(i)
    }
}

#[derive(Debug, Clone)]
pub enum InstanceCache {
    Nk(NkCache),
    Qubo(QuboCache),
}

impl Landscape for Instance {
    type Cache = InstanceCache;

    fn n(&self) -> usize {
        match self {
            Instance::Nk(i) => i.n(),
            Instance::Qubo(i) => i.n(),
        }
    }

    fn evaluate(&self, x: &[bool]) -> f64 {
        match self {
            Instance::Nk(i) => i.evaluate(x),
            Instance::Qubo(i) => i.evaluate(x),
        }
    }

    fn prepare(&self, x: &[bool]) -> InstanceCache {
        match self {
            Instance::Nk(i) => InstanceCache::Nk(i.prepare(x)),
            Instance::Qubo(i) => InstanceCache::Qubo(i.prepare(x)),
        }
    }

    #[inline]
    fn delta(&self, x: &[bool], cache: &InstanceCache, i: usize) -> f64 {
        match (self, cache) {
            (Instance::Nk(inst), InstanceCache::Nk(c)) => inst.delta(x, c, i),
            (Instance::Qubo(inst), InstanceCache::Qubo(c)) => inst.delta(x, c, i),
            _ => unreachable!("cache prepared for a different instance kind"),
        }
    }

    fn deltas_into(&self, x: &[bool], cache: &InstanceCache, out: &mut [f64]) {
        match (self, cache) {
            (Instance::Nk(inst), InstanceCache::Nk(c)) => inst.deltas_into(x, c, out),
            (Instance::Qubo(inst), InstanceCache::Qubo(c)) => inst.deltas_into(x, c, out),
            _ => unreachable!("cache prepared for a different instance kind"),
        }
    }

    fn flip(&self, x: &[bool], cache: &mut InstanceCache, i: usize) {
        match (self, cache) {
            (Instance::Nk(inst), InstanceCache::Nk(c)) => inst.flip(x, c, i),
            (Instance::Qubo(inst), InstanceCache::Qubo(c)) => inst.flip(x, c, i),
            _ => unreachable!("cache prepared for a different instance kind"),
        }
    }
}

/// Result of [`Instance::scaled`].
#[derive(Debug, Clone)]
pub enum ScaledInstance {
    Nk(crate::search::Scaled<NkInstance>),
    Qubo(QuboInstance),
}

impl Landscape for ScaledInstance {
    type Cache = InstanceCache;

    fn n(&self) -> usize {
        match self {
            ScaledInstance::Nk(i) => i.n(),
            ScaledInstance::Qubo(i) => i.n(),
        }
    }

    fn evaluate(&self, x: &[bool]) -> f64 {
        match self {
            ScaledInstance::Nk(i) => i.evaluate(x),
            ScaledInstance::Qubo(i) => i.evaluate(x),
        }
    }

    fn prepare(&self, x: &[bool]) -> InstanceCache {
        match self {
            ScaledInstance::Nk(i) => InstanceCache::Nk(i.prepare(x)),
            ScaledInstance::Qubo(i) => InstanceCache::Qubo(i.prepare(x)),
        }
    }

    fn delta(&self, x: &[bool], cache: &InstanceCache, i: usize) -> f64 {
        match (self, cache) {
            (ScaledInstance::Nk(inst), InstanceCache::Nk(c)) => inst.delta(x, c, i),
            (ScaledInstance::Qubo(inst), InstanceCache::Qubo(c)) => inst.delta(x, c, i),
            _ => unreachable!("cache prepared for a different instance kind"),
        }
    }

    fn flip(&self, x: &[bool], cache: &mut InstanceCache, i: usize) {
        match (self, cache) {
            (ScaledInstance::Nk(inst), InstanceCache::Nk(c)) => inst.flip(x, c, i),
            (ScaledInstance::Qubo(inst), InstanceCache::Qubo(c)) => inst.flip(x, c, i),
            _ => unreachable!("cache prepared for a different instance kind"),
        }
    }
}
