use chrono::NaiveDate;
use msem_core::{Model, ModelSnapshot};

use crate::error::EvolutionError;

pub fn check_times(times: &[NaiveDate]) -> Result<(), EvolutionError> {
    for (i, w) in times.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(EvolutionError::UnorderedTimes { index: i + 1, prev: w[0], next: w[1] });
        }
    }
    Ok(())
}

/// One snapshot per time; times must be strictly increasing.
pub fn build_snapshots<'a>(model: &'a Model, times: &[NaiveDate]) -> Result<Vec<ModelSnapshot<'a>>, EvolutionError> {
    check_times(times)?;
    Ok(times.iter().map(|&t| model.snapshot_at(t)).collect())
}
