//! Iterative Kings' Forests.
//!
//! A post-hoc variable-selection and interaction-discovery method. Each
//! "King" variable is fixed at the root of every tree in a depth-bounded,
//! weight-sampled forest; per-tree permutation importance of the King drives
//! the candidate sampling weights, and the depth-`d` root paths of the final
//! forests are ranked as candidate `d`-order interactions.
//!
//! Module map:
//!
//! - [`data`]: datasets, CSV ingestion, seeded random streams.
//! - [`forest`]: King-rooted CART trees, forests and path extraction.
//! - [`pvim`]: per-tree permutation importance of the King.
//! - [`kings`]: the per-King weight-update loop and path shortlists.
//! - [`ikf`]: the outer King-selection loop, order inference and interaction typing.
//! - [`bench`]: simulation scenarios, recovery metrics, DC-SIS and the replication runner.
//! - [`report`]: JSON and CSV rendering of reports.
//!
//! Parallelism goes through rayon when the `parallel` feature (on by default)
//! is enabled; every random stream is keyed by the unit of work, so results
//! are identical with any thread count and with the feature disabled.

pub mod bench;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod forest;
pub mod ikf;
pub mod kings;
pub(crate) mod par;
pub mod pvim;
pub mod report;

pub use data::{Dataset, SeedContext, Task};
pub use error::{IkfError, Result};
pub use forest::{KingForest, KingTree, PathRecord, TreeParams};
pub use ikf::{IkfParams, IkfReport};
pub use kings::{KingParams, KingReport};
pub use pvim::PvimParams;
