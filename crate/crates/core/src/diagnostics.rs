//! Process-wide counters for code-path accounting.

use std::sync::atomic::{AtomicU64, Ordering};

static TREES_BUILT: AtomicU64 = AtomicU64::new(0);
static EMPTY_OOB_TREES: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct Counters {
    pub trees_built: u64,
    pub empty_oob_trees: u64,
}

pub fn snapshot() -> Counters {
    Counters {
        trees_built: TREES_BUILT.load(Ordering::Relaxed),
        empty_oob_trees: EMPTY_OOB_TREES.load(Ordering::Relaxed),
    }
}

pub(crate) fn tree_built() {
    TREES_BUILT.fetch_add(1, Ordering::Relaxed);
}

pub(crate) fn empty_oob_tree() {
    EMPTY_OOB_TREES.fetch_add(1, Ordering::Relaxed);
}
