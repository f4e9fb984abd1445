//! Special functions, distributions, and random streams used throughout the crate.

mod noncentral;
mod normal;
mod rng;
pub mod special;
mod student;

pub use noncentral::noncentral_t_cdf;
pub(crate) use normal::normal_hazard;
pub use normal::{normal_cdf, normal_pdf, normal_quantile, normal_sf};
pub use rng::{sample_standard_normal, RandomStream};
pub use student::{student_t_cdf, student_t_pdf, student_t_quantile, student_t_sf};
