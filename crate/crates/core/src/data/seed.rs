//! Hierarchical, counter-keyed random streams.
//!
//! A stream is identified by `(master, replication, stage, tree)`; the four
//! words are laid out little-endian into a ChaCha8 key, so distinct tuples give
//! distinct keys and no stream is ever derived by drawing from another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Tree ids at or above this offset key the permutation stream of a tree.
pub const PVIM_STREAM: u64 = 1 << 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedContext {
    pub master: u64,
    pub replication: u64,
    pub stage: u64,
}

impl SeedContext {
    pub fn new(master: u64) -> Self {
        SeedContext {
            master,
            replication: 0,
            stage: 0,
        }
    }

    pub fn with_replication(self, replication: u64) -> Self {
        SeedContext {
            replication,
            ..self
        }
    }

    pub fn with_stage(self, stage: Stage) -> Self {
        SeedContext {
            stage: stage.encode(),
            ..self
        }
    }

    /// Independent stream for work unit `tree`.
    pub fn stream(&self, tree: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&self.master.to_le_bytes());
        key[8..16].copy_from_slice(&self.replication.to_le_bytes());
        key[16..24].copy_from_slice(&self.stage.to_le_bytes());
        key[24..32].copy_from_slice(&tree.to_le_bytes());
        ChaCha8Rng::from_seed(key)
    }
}

/// Named positions in the pipeline, packed into the stage word.
///
/// Layout: bits 56..64 kind, 32..56 King ordinal, 0..32 phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Disposable weight-update forest `iteration` of King number `king`.
    KingIteration { king: u32, iteration: u32 },
    /// Final forest of maximum depth `depth` for King number `king`.
    KingFinal { king: u32, depth: u32 },
    FirstKing,
    ScenarioPredictors,
    ScenarioNoise,
    Custom(u32),
}

impl Stage {
    pub fn encode(self) -> u64 {
        let pack = |kind: u64, king: u32, phase: u32| {
            debug_assert!(king < (1 << 24));
            (kind << 56) | ((king as u64) << 32) | phase as u64
        };
        match self {
            Stage::KingIteration { king, iteration } => pack(1, king, iteration),
            Stage::KingFinal { king, depth } => pack(2, king, depth),
            Stage::FirstKing => pack(3, 0, 0),
            Stage::ScenarioPredictors => pack(4, 0, 0),
            Stage::ScenarioNoise => pack(5, 0, 0),
            Stage::Custom(phase) => pack(6, 0, phase),
        }
    }
}
