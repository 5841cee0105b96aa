//! Rank agreement, Bradley–Terry fitting and the experiment drivers.

mod bt;
mod experiment;
mod kendall;

pub use bt::{bt_fit, log_likelihood, BtResult, DEFAULT_MAX_ITER, DEFAULT_TOL};
pub use experiment::{
    labelled_pairs, run_deblur_experiment, run_sorting_experiment, BurstSample, DeblurMode, DeblurReport, DeblurRow, DeblurSettings,
    SortingReport, SortingRow, SortingSettings,
};
pub use kendall::{delta_from_zeta, weighted_kendall, KendallReport};
