//! Dataset ingestion: MNIST IDX files and synthetic datasets.

pub mod idx;
pub mod synthetic;

pub use idx::{dataset_from_idx, dataset_to_idx, load_mnist, IdxImages, IdxLabels, Selection};
pub use synthetic::{make_synthetic, SyntheticKind};
