//! Synthetic inputs: piecewise-constant/linear phantoms, analytic spectra
//! with exact annihilating filters, variable-density sampling masks,
//! measurement noise, and SNR.
//!
//! Phantom regions use sharp (non-bandlimited) edges; they are the
//! end-to-end fixtures. The `strip_*` / `sawtooth_*` generators instead
//! return continuous-domain Fourier series sampled on the grid, for which
//! the annihilation relations hold exactly — those anchor the lifting and
//! null-space tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Result, SlrError};
use crate::grid::{ComplexImage, Domain, KGrid};
use crate::lifting::FilterSupport;
use crate::solver::SamplingOp;

/// Axis selector for the analytic one-dimensional generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticAxis {
    /// Varies along columns (k_x direction).
    X,
    /// Varies along rows (k_y direction).
    Y,
}

/// Fourier series of the indicator of `{0 <= frac(t) < 1/2}` along one axis,
/// sampled on the grid (unit amplitude).
///
/// The edge set is the pair of lines `t = 0`, `t = 1/2`, the zero set of
/// `mu(t) = exp(-j2*pi*t) - exp(j2*pi*t)`; the gradient-weighted spectrum is
/// annihilated by [`strip_true_filter`] exactly, including across DC.
pub fn strip_spectrum(grid: KGrid, axis: AnalyticAxis) -> ComplexImage {
    let mut out = ComplexImage::zeros(grid, Domain::Fourier);
    for idx in 0..grid.len() {
        let (k_y, k_x) = grid.frequency(idx);
        let (k_along, k_across) = match axis {
            AnalyticAxis::X => (k_x, k_y),
            AnalyticAxis::Y => (k_y, k_x),
        };
        if k_across != 0 {
            continue;
        }
        out.values_mut()[idx] = if k_along == 0 {
            Complex64::new(0.5, 0.0)
        } else if k_along % 2 == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            // integral of exp(-j2 pi k t) over [0, 1/2): -j/(pi k) for odd k
            Complex64::new(0.0, -1.0 / (PI * k_along as f64))
        };
    }
    out
}

/// Minimal annihilating filter of [`strip_spectrum`] padded into `supp`:
/// taps `+1` and `-1` at offsets `-1` and `+1` along the axis.
pub fn strip_true_filter(supp: FilterSupport, axis: AnalyticAxis) -> Result<Vec<Complex64>> {
    let (hr, hc) = supp.half();
    let need = match axis {
        AnalyticAxis::X => hc,
        AnalyticAxis::Y => hr,
    };
    if need < 1 {
        return Err(SlrError::Parameter(
            "strip filter needs half-width >= 1 along its axis".into(),
        ));
    }
    let mut taps = vec![Complex64::new(0.0, 0.0); supp.len()];
    let (m1, p1) = match axis {
        AnalyticAxis::X => (supp.tap_index(0, -1), supp.tap_index(0, 1)),
        AnalyticAxis::Y => (supp.tap_index(-1, 0), supp.tap_index(1, 0)),
    };
    taps[m1] = Complex64::new(1.0, 0.0);
    taps[p1] = Complex64::new(-1.0, 0.0);
    Ok(taps)
}

/// Fourier series of the unit ramp `t mod 1` along one axis (piecewise
/// linear with a single wrap discontinuity at `t = 0`).
///
/// Its Hessian-weighted spectrum is linear along the axis, so the squared
/// edge polynomial's second-difference filter ([`sawtooth_true_filter`])
/// annihilates it exactly.
pub fn sawtooth_spectrum(grid: KGrid, axis: AnalyticAxis) -> ComplexImage {
    let mut out = ComplexImage::zeros(grid, Domain::Fourier);
    for idx in 0..grid.len() {
        let (k_y, k_x) = grid.frequency(idx);
        let (k_along, k_across) = match axis {
            AnalyticAxis::X => (k_x, k_y),
            AnalyticAxis::Y => (k_y, k_x),
        };
        if k_across != 0 {
            continue;
        }
        out.values_mut()[idx] = if k_along == 0 {
            Complex64::new(0.5, 0.0)
        } else {
            // integral of t exp(-j2 pi k t) over [0,1): j/(2 pi k)
            Complex64::new(0.0, 1.0 / (2.0 * PI * k_along as f64))
        };
    }
    out
}

/// Second-difference filter `[1, -2, 1]` along the axis: the coefficients
/// of `mu^2` for `mu(t) = 2 - 2cos(2*pi*t)`-style double zero at `t = 0`.
pub fn sawtooth_true_filter(supp: FilterSupport, axis: AnalyticAxis) -> Result<Vec<Complex64>> {
    let (hr, hc) = supp.half();
    let need = match axis {
        AnalyticAxis::X => hc,
        AnalyticAxis::Y => hr,
    };
    if need < 1 {
        return Err(SlrError::Parameter(
            "sawtooth filter needs half-width >= 1 along its axis".into(),
        ));
    }
    let mut taps = vec![Complex64::new(0.0, 0.0); supp.len()];
    let idx = |d: i64| match axis {
        AnalyticAxis::X => supp.tap_index(0, d),
        AnalyticAxis::Y => supp.tap_index(d, 0),
    };
    taps[idx(-1)] = Complex64::new(1.0, 0.0);
    taps[idx(0)] = Complex64::new(-2.0, 0.0);
    taps[idx(1)] = Complex64::new(1.0, 0.0);
    Ok(taps)
}

/// Region of a phantom shape, in pixel coordinates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Region {
    /// Half-open pixel box `[x0, x1) x [y0, y1)`.
    Rect { x0: usize, x1: usize, y0: usize, y1: usize },
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Region {
    fn contains(&self, ix: usize, iy: usize) -> bool {
        match *self {
            Region::Rect { x0, x1, y0, y1 } => ix >= x0 && ix < x1 && iy >= y0 && iy < y1,
            Region::Disk { cx, cy, r } => {
                let dx = ix as f64 - cx;
                let dy = iy as f64 - cy;
                dx * dx + dy * dy <= r * r
            }
        }
    }

    fn validate(&self, grid: KGrid) -> Result<()> {
        let ok = match *self {
            Region::Rect { x0, x1, y0, y1 } => {
                x0 < x1 && y0 < y1 && x1 <= grid.n_cols() && y1 <= grid.n_rows()
            }
            Region::Disk { cx, cy, r } => {
                r > 0.0
                    && cx - r >= 0.0
                    && cy - r >= 0.0
                    && cx + r < grid.n_cols() as f64
                    && cy + r < grid.n_rows() as f64
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SlrError::Parameter(format!(
                "region {self:?} does not lie within the {}x{} grid",
                grid.n_rows(),
                grid.n_cols()
            )))
        }
    }
}

/// Intensity profile of a shape.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Profile {
    Constant,
    /// Ramp `amplitude + gx*ix + gy*iy` over the region.
    Linear { gx: f64, gy: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Shape {
    pub region: Region,
    pub amplitude: f64,
    pub profile: Profile,
}

/// Specification of a synthetic phantom.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhantomSpec {
    pub grid: KGrid,
    pub shapes: Vec<Shape>,
    pub seed: u64,
}

/// Build a phantom and its exact decomposition.
///
/// Constant-profile shapes sum into the piecewise-constant component,
/// linear-profile shapes into the piecewise-linear component;
/// `rho = rho1 + rho2` holds exactly by construction.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(ComplexImage, (ComplexImage, ComplexImage))> {
    if spec.shapes.is_empty() {
        return Err(SlrError::Parameter("phantom needs at least one shape".into()));
    }
    for shape in &spec.shapes {
        shape.region.validate(spec.grid)?;
    }
    let grid = spec.grid;
    let mut rho1 = ComplexImage::zeros(grid, Domain::Spatial);
    let mut rho2 = ComplexImage::zeros(grid, Domain::Spatial);
    for iy in 0..grid.n_rows() {
        for ix in 0..grid.n_cols() {
            let idx = iy * grid.n_cols() + ix;
            for shape in &spec.shapes {
                if !shape.region.contains(ix, iy) {
                    continue;
                }
                match shape.profile {
                    Profile::Constant => {
                        rho1.values_mut()[idx] += Complex64::new(shape.amplitude, 0.0);
                    }
                    Profile::Linear { gx, gy } => {
                        let v = shape.amplitude + gx * ix as f64 + gy * iy as f64;
                        rho2.values_mut()[idx] += Complex64::new(v, 0.0);
                    }
                }
            }
        }
    }
    let mut rho = ComplexImage::zeros(grid, Domain::Spatial);
    for idx in 0..grid.len() {
        rho.values_mut()[idx] = rho1.values()[idx] + rho2.values()[idx];
    }
    Ok((rho, (rho1, rho2)))
}

/// Specification of a variable-density random sampling mask.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MaskSpec {
    pub grid: KGrid,
    /// Acceleration factor `R > 1`: expected sample fraction is `1/R`.
    pub acceleration: f64,
    /// Radial decay power of the sampling density `p(k) ~ (1+|k|)^-decay`.
    pub density_decay: f64,
    /// All frequencies with `|k| <= radius` are always sampled.
    pub fully_sampled_center_radius: usize,
    pub seed: u64,
}

/// Draw a variable-density Bernoulli mask.
///
/// Probabilities are `min(alpha (1+|k|)^-decay, 1)` outside the fully
/// sampled center, with `alpha` solved so the expected total sample count
/// equals `N/R`. Deterministic in the seed (fixed row-major draw order).
pub fn make_mask(spec: &MaskSpec) -> Result<SamplingOp> {
    let grid = spec.grid;
    let n = grid.len() as f64;
    if spec.acceleration <= 1.0 || spec.acceleration >= n {
        return Err(SlrError::Parameter(format!(
            "acceleration must lie in (1, {n}), got {}",
            spec.acceleration
        )));
    }
    if spec.density_decay <= 0.0 {
        return Err(SlrError::Parameter("density_decay must be positive".into()));
    }
    if spec.fully_sampled_center_radius < 1 {
        return Err(SlrError::Parameter(
            "fully_sampled_center_radius must be >= 1".into(),
        ));
    }
    let radius = spec.fully_sampled_center_radius as f64;
    let target = n / spec.acceleration;

    let mut center = vec![false; grid.len()];
    let mut weights = vec![0.0f64; grid.len()];
    let mut n_center = 0usize;
    for idx in 0..grid.len() {
        let (k_y, k_x) = grid.frequency(idx);
        let kmag = ((k_x * k_x + k_y * k_y) as f64).sqrt();
        if kmag <= radius {
            center[idx] = true;
            n_center += 1;
        } else {
            weights[idx] = (1.0 + kmag).powf(-spec.density_decay);
        }
    }
    let budget = target - n_center as f64;
    if budget < 0.0 {
        return Err(SlrError::Parameter(format!(
            "fully sampled center ({n_center} samples) already exceeds the 1/R budget ({target:.1})"
        )));
    }

    // Expected count is monotone in alpha; bisect.
    let expected = |alpha: f64| -> f64 {
        weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| (alpha * w).min(1.0))
            .sum()
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while expected(hi) < budget && hi < 1e18 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if expected(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut mask = vec![false; grid.len()];
    for idx in 0..grid.len() {
        if center[idx] {
            mask[idx] = true;
        } else if weights[idx] > 0.0 {
            let p = (alpha * weights[idx]).min(1.0);
            mask[idx] = rng.random::<f64>() < p;
        }
    }
    SamplingOp::from_mask(grid, mask)
}

/// Add circular complex Gaussian noise (std `sigma` per real/imag part).
pub fn add_noise(values: &[Complex64], sigma: f64, seed: u64) -> Result<Vec<Complex64>> {
    if sigma < 0.0 {
        return Err(SlrError::Parameter("noise sigma must be >= 0".into()));
    }
    if sigma == 0.0 {
        return Ok(values.to_vec());
    }
    let normal = Normal::new(0.0, sigma)
        .map_err(|e| SlrError::Parameter(format!("bad noise sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(values
        .iter()
        .map(|v| v + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
        .collect())
}

/// `20 log10(||reference|| / ||reference - estimate||)`, with `+inf` for an
/// exact match.
pub fn snr_db(reference: &ComplexImage, estimate: &ComplexImage) -> Result<f64> {
    if reference.grid() != estimate.grid() {
        return Err(SlrError::Dimension("SNR operands on different grids".into()));
    }
    let ref_norm = reference.norm();
    if ref_norm == 0.0 {
        return Err(SlrError::Parameter("SNR undefined for zero reference".into()));
    }
    let err: f64 = reference
        .values()
        .iter()
        .zip(estimate.values())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (ref_norm / err).log10())
}
