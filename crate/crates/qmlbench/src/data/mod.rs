//! Dataset generation, ingestion, and plumbing: synthetic grids, UCI files,
//! COVID labeling, invertible feature scrambling, hyperplane-proximity
//! reduction, and deterministic train/test splitting.

pub mod adhoc;
pub mod covid;
pub mod prng;
pub mod uci;

pub use adhoc::{gen_adhoc, AdhocShape, GRID};
pub use covid::{covid_label, load_cases, load_population, CaseRow, CovidConfig, CovidStats};
pub use prng::{mod_inverse, prng_apply, Direction, PrngParams};
pub use uci::{load_uci, UciKind};

use rand::seq::SliceRandom;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::svm::TrainedSvm;

/// Keep only the rows within distance `delta` of a linear model's decision
/// hyperplane, preserving the original order. Returns the reduced dataset
/// together with (kept, dropped) counts.
pub fn reduce_near_hyperplane(
    dataset: &Dataset,
    model: &TrainedSvm,
    delta: f64,
) -> Result<(Dataset, usize, usize)> {
    if delta < 0.0 {
        return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
    }
    let mut keep = Vec::new();
    for i in 0..dataset.n() {
        if model.hyperplane_distance(&dataset.row(i))? <= delta {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(Error::EmptyInput("no points within delta of the hyperplane"));
    }
    let dropped = dataset.n() - keep.len();
    let kept = keep.len();
    Ok((dataset.subset(&keep), kept, dropped))
}

/// Deterministic shuffled split: a Fisher-Yates permutation seeded by
/// `state`, with test size = round(n * test_fraction).
pub fn train_test_split(
    dataset: &Dataset,
    test_fraction: f64,
    state: u64,
) -> Result<(Dataset, Dataset)> {
    if !(0.0..1.0).contains(&test_fraction) || test_fraction <= 0.0 {
        return Err(Error::BadTestFraction(test_fraction));
    }
    let n = dataset.n();
    if n < 2 {
        return Err(Error::EmptyInput("need at least two points to split"));
    }
    let test_size = (n as f64 * test_fraction).round() as usize;
    if test_size == 0 || test_size == n {
        return Err(Error::EmptyPartition { n, fraction: test_fraction });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(state, 0x5b17, 7);
    indices.shuffle(&mut rng);
    let (test_idx, train_idx) = indices.split_at(test_size);
    Ok((dataset.subset(train_idx), dataset.subset(test_idx)))
}
