pub mod fisher;
pub mod kde;
pub mod l2;

pub use fisher::{fisher_covariance_check, CheckReport, InformationSource};
pub use kde::{kde_1d, kde_on_grid, linspace, silverman_bandwidth, trapezoid, DensityEstimate, DEFAULT_GRID_SIZE};
pub use l2::{
    compare_sample_marginals, compare_with_analytic, l2_between_densities, l2_distance, l2_joint_2d, AnalyticMarginal,
    Comparand, L2Report, MarginalComparison, SampleView,
};
