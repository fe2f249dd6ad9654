//! Estimation chain: correlation maps, speckle radius, temporal-mode count,
//! parametric gain and the scaling-law fits.

mod correlation;
mod estimators;
mod fit;
mod radius;

pub use correlation::{autocorrelation, cross_correlation, CorrelationKind, CorrelationMap, Region};
pub use estimators::{
    analyze_image, estimate_gain, estimate_gain_with_error, estimate_temporal_modes, gain_forward,
    temporal_modes_from_moments, thermal_variance, EstimateReport, ModeEstimate, NoiseModel,
};
pub use fit::{fit_linear, fit_sinh2, fit_sinh2_in, FitParameter, FitResult};
pub use radius::{speckle_radius, speckle_radius_with, RadiusEstimate};
