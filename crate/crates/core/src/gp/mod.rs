//! Exact GP regression on finite datasets and quenched averages over dataset draws.

mod average;
mod regression;

pub use average::{
    dataset_average_coefficients, dataset_average_predictor, AveragedCoefficients,
    AveragedPredictor, AveragingOptions, DatasetSize,
};
pub use regression::{
    gp_posterior, gp_posterior_mean, kernel_matrix, posterior_coefficients, project_onto_mode,
    Dataset, PosteriorPrediction, Ridge, Solver,
};
