//! Special functions, reference distributions, quadrature, root finding and
//! reproducible random streams.

mod dist;
mod grid;
mod quad;
mod rng;
mod root;
mod special;

pub use dist::{
    chisq_cdf, chisq_pdf, chisq_quantile, chisq_sf, f_cdf, f_pdf, f_quantile, normal_cdf,
    normal_pdf, normal_quantile, normal_sf, t_cdf, t_pdf, t_quantile,
};
pub(crate) use dist::normal_cdf_unchecked;
pub use grid::RealGrid;
pub use quad::{integrate, QUAD_TOL};
pub use rng::{DrawLaw, RngStream};
pub use root::{find_root, find_root_expanding, Interval, ROOT_TOL};
pub use special::{
    digamma, digamma_minus_log, incomplete_gamma_pair, log_gamma, lower_regularized_gamma,
    regularized_beta, trigamma, trigamma_minus_reciprocal, upper_regularized_gamma,
};
pub(crate) use special::{ln_gamma_unchecked, stirling_tail};
