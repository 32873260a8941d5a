//! Latent-variable models for ordinal potential outcomes.
//!
//! Each potential outcome is a coarsened normal latent,
//! `Y(t) = g_t(Z(t))` with `Z(t) = x'beta + eps(t)` and
//! `cor(eps(0), eps(1)) = rho`. The data say nothing about `rho`, so it is
//! fixed by the user. The posterior is explored by Gibbs sampling under
//! either an ordered-probit likelihood with explicit cutoffs or the rank
//! likelihood, and every retained draw imputes the missing potential
//! outcomes to give posterior draws of observed-scale estimands.

mod cutoffs;
mod design;
mod fit;
mod frechet;
mod normal;
mod sampler;
mod truncnorm;

pub use cutoffs::CutoffMap;
pub use design::Design;
pub use fit::{
    fit, fit_rhos, geweke_z, ChainSpec, FitConfig, FitResult, PosteriorEstimand, PosteriorSummary,
};
pub use frechet::frechet_rho;
pub use normal::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
pub use sampler::{CutoffSharing, Likelihood, ProbitModel, ProbitState, CUTOFF_MH_SCALE, CUTOFF_PRIOR_SD};
pub use truncnorm::sample_truncated;
