//! Cramer-Wold distance between samples and to the standard normal, with a
//! Monte-Carlo slicing oracle, Mardia normality statistics, dataset loaders
//! and a small autoencoder trained with the Cramer-Wold latent penalty.
//!
//! ```
//! use cramer_wold::{cw2_sample_sample, Bandwidth, Sample};
//!
//! let x = Sample::from_rows(&[[0.0, 1.0], [1.0, 0.5], [-0.3, 0.2]]).unwrap();
//! let y = Sample::from_rows(&[[0.1, 0.9], [1.2, 0.4]]).unwrap();
//! let gamma = Bandwidth::for_pair(x.len(), y.len()).unwrap();
//! let d = cw2_sample_sample(&x, &y, gamma, None).unwrap();
//! assert!(d.squared_distance >= 0.0);
//! ```

pub mod cwae;
pub mod data;
pub mod distance;
pub mod error;
pub mod normality;
pub mod numeric;
pub mod sample;
pub mod sliced;
pub mod special;

pub use distance::{
    cw2_sample_normal, cw2_sample_normal_with_grad, cw2_sample_sample, cw_scalar_product_radial,
    CwReport, RadialGaussian,
};
pub use error::{Error, Result};
pub use normality::{mardia, MardiaStats};
pub use sample::{silverman_gamma, Bandwidth, Sample};
pub use sliced::{
    cw2_monte_carlo, cw2_normal_monte_carlo, l2_smoothed_1d, DirectionSampler, McEstimate,
};
pub use special::{phi, phi_asymptotic, phi_bessel_d2, phi_exact, Phi, PhiMode};
