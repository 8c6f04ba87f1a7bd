//! Adaptive structured low-rank recovery of images from undersampled
//! k-space data.
//!
//! The image is modeled as a sum of a piecewise-constant and a
//! piecewise-linear component. Gradient-weighted (resp. Hessian-weighted)
//! Fourier coefficients of each component admit annihilating filters, so
//! the corresponding lifted Toeplitz matrices are low rank. Recovery
//! minimizes Schatten-p penalties on both liftings plus a data term, via
//! IRLS (GIRAF-style spatial sum-of-squares weights) with closed-form ADMM
//! inner updates.
//!
//! Module map:
//! * [`grid`] — k-space grid, unitary centered FFT pair, derivative weightings.
//! * [`lifting`] — explicit lifted Toeplitz matrices and their Gram matrices.
//! * [`weights`] — IRLS weight update: eigen-decomposition, `H^{1/2}` rows,
//!   spatial sum-of-squares masks.
//! * [`solver`] — the IRLS outer loop and ADMM inner loop, plus sampling ops
//!   and the lambda sweep used for tuning.
//! * [`data`] — synthetic phantoms, variable-density masks, noise, SNR.
//! * [`io`] — the `SLR1` array file format shared with the CLI.

pub mod data;
pub mod error;
pub mod grid;
pub mod io;
pub mod lifting;
pub mod par;
pub mod solver;
pub mod weights;

pub use error::{Result, SlrError};
pub use grid::{
    apply_derivative, apply_derivative_adjoint, fft2_centered, ifft2_centered, ComplexImage,
    DerivativeOp, DerivativeOrder, Domain, KGrid, MultiChannelImage,
};
