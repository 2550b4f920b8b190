//! Time-frequency representations: STFT, WD and the generalized linear
//! canonical Wigner distribution (GLWD), together with ridge theory, the
//! parameter selector and a ridge-continuity score.

mod continuity;
mod image;
mod osnr;
mod params;
mod stft;
mod wigner;

pub use continuity::{energy_near_line, fit_ridge, median as median_of, tf_continuity_score, RidgeFit};
pub use image::{rasterize, Axis, DbScale, TfDistribution, TfImage, TfSource};
pub use osnr::{osnr_monte_carlo, OsnrEstimate, OsnrTrials};
pub use params::{osnr_glwd, ridge_line_theoretical, select_glwd_params, GlwdParams, SelectorPrefs, RIDGE_TOL};
pub use stft::{hann, istft, stft, stft_with, StftFrameSet};
pub use wigner::{glwd, glwd_distribution, glwd_with, wd, wd_distribution, wd_with, GlwdOutput, TfConfig};
