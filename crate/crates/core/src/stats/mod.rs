//! Goodness-of-fit statistics, matrix correlation, binning and scaling fits.

pub mod binning;
pub mod gof;
pub mod mantel;
pub mod scaling;

pub use binning::{ccdf, degree_pmf, log_bin, LogBin};
pub use gof::{ad_test, ks_test, ks_test_model, ks_two_sample, poisson_chi_square, ChiSquareReport, GofKind, GofReport};
pub use mantel::{mantel_test, mantel_test_exhaustive, mantel_test_sparse, MantelReport, SparseSymmetric, SquareMatrix};
pub use scaling::{
    fit_size_variance, fit_strength_degree, ols, Binning, Ols, ScalingBin, ScalingFit, SizeVarianceOptions,
    StrengthDegreeOptions,
};
