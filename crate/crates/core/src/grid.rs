//! k-space grid, complex images, the unitary centered FFT pair, and the
//! spectral derivative weightings used by every lifting.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * Frequencies are centered integers: `k_x in [-n_cols/2, n_cols/2 - 1]`,
//!   `k_y` analogous. DC sits at array position `(n_rows/2, n_cols/2)`.
//! * `fft2_centered` / `ifft2_centered` are a unitary pair (`1/sqrt(N)` each
//!   way), so Parseval holds exactly up to roundoff.
//! * First-order derivative multipliers are `j*2*pi*k_x/n_cols` and
//!   `j*2*pi*k_y/n_rows`; second-order multipliers are their products. The
//!   `1/N` per axis keeps derivative scales grid-size independent.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::Mutex;

use crate::error::{Result, SlrError};
use crate::par;

/// Rectangular k-space grid with centered integer frequencies.
///
/// Sizes must be even and at least 4: even sizes make the centered index
/// set symmetric-in-half and the fftshift an involution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct KGrid {
    n_rows: usize,
    n_cols: usize,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct RawGrid {
    rows: usize,
    cols: usize,
}

impl TryFrom<RawGrid> for KGrid {
    type Error = String;

    fn try_from(raw: RawGrid) -> std::result::Result<Self, String> {
        KGrid::new(raw.rows, raw.cols).map_err(|e| e.to_string())
    }
}

impl From<KGrid> for RawGrid {
    fn from(grid: KGrid) -> Self {
        RawGrid {
            rows: grid.n_rows,
            cols: grid.n_cols,
        }
    }
}

impl KGrid {
    pub fn new(n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows < 4 || n_cols < 4 || n_rows % 2 != 0 || n_cols % 2 != 0 {
            return Err(SlrError::Parameter(format!(
                "grid must be even and >= 4 in each dimension, got {n_rows}x{n_cols}"
            )));
        }
        Ok(KGrid { n_rows, n_cols })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.n_rows * self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear offset of the centered frequency `(k_y, k_x)`.
    ///
    /// Bijective between the centered frequency set and `0..len()`.
    pub fn index(&self, k_y: i64, k_x: i64) -> usize {
        debug_assert!(self.contains(k_y, k_x), "frequency ({k_y},{k_x}) off grid");
        let row = (k_y + self.n_rows as i64 / 2) as usize;
        let col = (k_x + self.n_cols as i64 / 2) as usize;
        row * self.n_cols + col
    }

    /// Centered frequency at a linear offset (inverse of [`KGrid::index`]).
    pub fn frequency(&self, idx: usize) -> (i64, i64) {
        let row = idx / self.n_cols;
        let col = idx % self.n_cols;
        (
            row as i64 - self.n_rows as i64 / 2,
            col as i64 - self.n_cols as i64 / 2,
        )
    }

    pub fn contains(&self, k_y: i64, k_x: i64) -> bool {
        let half_r = self.n_rows as i64 / 2;
        let half_c = self.n_cols as i64 / 2;
        k_y >= -half_r && k_y < half_r && k_x >= -half_c && k_x < half_c
    }

    /// Linear offset of DC.
    pub fn dc_index(&self) -> usize {
        self.index(0, 0)
    }

    /// Iterate centered frequencies in storage (row-major) order.
    pub fn frequencies(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (0..self.len()).map(move |i| self.frequency(i))
    }
}

/// Which domain an array currently lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Spatial,
    Fourier,
}

impl std::fmt::Display for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Domain::Spatial => write!(f, "spatial"),
            Domain::Fourier => write!(f, "fourier"),
        }
    }
}

/// 2-D complex array on a [`KGrid`], tagged with its current domain.
///
/// Spatial arrays are indexed `(iy, ix)` row-major with pixel coordinates
/// `0..n`; Fourier arrays are indexed by centered frequency via
/// [`KGrid::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    grid: KGrid,
    domain: Domain,
    values: Vec<Complex64>,
}

impl ComplexImage {
    pub fn zeros(grid: KGrid, domain: Domain) -> Self {
        ComplexImage {
            grid,
            domain,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_values(grid: KGrid, domain: Domain, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SlrError::Dimension(format!(
                "value length {} does not match grid {}x{}",
                values.len(),
                grid.n_rows(),
                grid.n_cols()
            )));
        }
        Ok(ComplexImage {
            grid,
            domain,
            values,
        })
    }

    pub fn grid(&self) -> KGrid {
        self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// l2 norm over all entries.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Inner product `<self, other>` (conjugate-linear in `other`).
    pub fn dot(&self, other: &ComplexImage) -> Complex64 {
        debug_assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, alpha: Complex64) -> ComplexImage {
        let mut out = self.clone();
        for v in out.values_mut() {
            *v *= alpha;
        }
        out
    }
}

/// Stack of same-grid channels (gradient: 2, Hessian: 3).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelImage {
    grid: KGrid,
    domain: Domain,
    channels: Vec<Vec<Complex64>>,
}

impl MultiChannelImage {
    pub fn zeros(grid: KGrid, domain: Domain, n_channels: usize) -> Self {
        MultiChannelImage {
            grid,
            domain,
            channels: vec![vec![Complex64::new(0.0, 0.0); grid.len()]; n_channels],
        }
    }

    pub fn from_channels(grid: KGrid, domain: Domain, channels: Vec<Vec<Complex64>>) -> Self {
        debug_assert!(channels.iter().all(|c| c.len() == grid.len()));
        MultiChannelImage {
            grid,
            domain,
            channels,
        }
    }

    pub fn grid(&self) -> KGrid {
        self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, ch: usize) -> &[Complex64] {
        &self.channels[ch]
    }

    pub fn channel_mut(&mut self, ch: usize) -> &mut [Complex64] {
        &mut self.channels[ch]
    }

    pub fn channels(&self) -> &[Vec<Complex64>] {
        &self.channels
    }

    pub fn norm(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Inner product summed over channels.
    pub fn dot(&self, other: &MultiChannelImage) -> Complex64 {
        debug_assert_eq!(self.n_channels(), other.n_channels());
        self.channels
            .iter()
            .zip(&other.channels)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

static FFT_PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan(len: usize, inverse: bool) -> std::sync::Arc<dyn rustfft::Fft<f64>> {
    let mut planner = FFT_PLANNER.lock().unwrap();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// In-place unnormalized 2-D FFT on row-major data.
fn fft2_raw(values: &mut [Complex64], n_rows: usize, n_cols: usize, inverse: bool) {
    let row_fft = plan(n_cols, inverse);
    for row in values.chunks_exact_mut(n_cols) {
        row_fft.process(row);
    }
    // Columns via transpose so each 1-D transform is contiguous.
    let mut t = vec![Complex64::new(0.0, 0.0); values.len()];
    transpose(values, &mut t, n_rows, n_cols);
    let col_fft = plan(n_rows, inverse);
    for col in t.chunks_exact_mut(n_rows) {
        col_fft.process(col);
    }
    transpose(&t, values, n_cols, n_rows);
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Swap half-planes so DC moves between array start and grid center.
/// Self-inverse on even grids.
fn fftshift(values: &[Complex64], n_rows: usize, n_cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); values.len()];
    let hr = n_rows / 2;
    let hc = n_cols / 2;
    for r in 0..n_rows {
        let sr = (r + hr) % n_rows;
        for c in 0..n_cols {
            let sc = (c + hc) % n_cols;
            out[sr * n_cols + sc] = values[r * n_cols + c];
        }
    }
    out
}

/// Unitary centered 2-D DFT: spatial samples to centered Fourier coefficients.
///
/// Parseval holds: `||x|| == ||fft2_centered(x)||` to roundoff.
pub fn fft2_centered(img: &ComplexImage) -> ComplexImage {
    assert_eq!(img.domain(), Domain::Spatial, "fft2_centered expects a spatial image");
    let grid = img.grid();
    let mut values = img.values().to_vec();
    fft2_raw(&mut values, grid.n_rows(), grid.n_cols(), false);
    let mut shifted = fftshift(&values, grid.n_rows(), grid.n_cols());
    let scale = 1.0 / (grid.len() as f64).sqrt();
    for v in &mut shifted {
        *v *= scale;
    }
    ComplexImage {
        grid,
        domain: Domain::Fourier,
        values: shifted,
    }
}

/// Unitary centered inverse: exact inverse of [`fft2_centered`].
pub fn ifft2_centered(img: &ComplexImage) -> ComplexImage {
    assert_eq!(img.domain(), Domain::Fourier, "ifft2_centered expects a fourier image");
    let grid = img.grid();
    let mut values = fftshift(img.values(), grid.n_rows(), grid.n_cols());
    fft2_raw(&mut values, grid.n_rows(), grid.n_cols(), true);
    let scale = 1.0 / (grid.len() as f64).sqrt();
    for v in &mut values {
        *v *= scale;
    }
    ComplexImage {
        grid,
        domain: Domain::Spatial,
        values,
    }
}

/// Apply [`ifft2_centered`] to every channel.
pub fn ifft2_channels(stack: &MultiChannelImage) -> MultiChannelImage {
    assert_eq!(stack.domain(), Domain::Fourier);
    let grid = stack.grid();
    let channels = par::map_collect(stack.channels(), |ch| {
        let img = ComplexImage {
            grid,
            domain: Domain::Fourier,
            values: ch.clone(),
        };
        ifft2_centered(&img).into_values()
    });
    MultiChannelImage {
        grid,
        domain: Domain::Spatial,
        channels,
    }
}

/// Apply [`fft2_centered`] to every channel.
pub fn fft2_channels(stack: &MultiChannelImage) -> MultiChannelImage {
    assert_eq!(stack.domain(), Domain::Spatial);
    let grid = stack.grid();
    let channels = par::map_collect(stack.channels(), |ch| {
        let img = ComplexImage {
            grid,
            domain: Domain::Spatial,
            values: ch.clone(),
        };
        fft2_centered(&img).into_values()
    });
    MultiChannelImage {
        grid,
        domain: Domain::Fourier,
        channels,
    }
}

/// Derivative order of a spectral weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeOrder {
    /// Gradient weighting: channels (x, y).
    First,
    /// Hessian weighting: channels (xx, xy, yy).
    Second,
}

impl DerivativeOrder {
    pub fn n_channels(&self) -> usize {
        match self {
            DerivativeOrder::First => 2,
            DerivativeOrder::Second => 3,
        }
    }
}

/// Diagonal k-space derivative weighting (the `M` operator of the liftings).
///
/// All multipliers vanish at DC, so `M*M` is diagonal with a zero at DC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOp {
    grid: KGrid,
    order: DerivativeOrder,
}

impl DerivativeOp {
    pub fn new(grid: KGrid, order: DerivativeOrder) -> Self {
        DerivativeOp { grid, order }
    }

    pub fn grid(&self) -> KGrid {
        self.grid
    }

    pub fn order(&self) -> DerivativeOrder {
        self.order
    }

    pub fn n_channels(&self) -> usize {
        self.order.n_channels()
    }

    fn first_order(&self, k_y: i64, k_x: i64) -> (Complex64, Complex64) {
        let wx = Complex64::new(0.0, 2.0 * PI * k_x as f64 / self.grid.n_cols() as f64);
        let wy = Complex64::new(0.0, 2.0 * PI * k_y as f64 / self.grid.n_rows() as f64);
        (wx, wy)
    }

    /// Per-channel diagonal multiplier at a centered frequency.
    pub fn multiplier(&self, channel: usize, k_y: i64, k_x: i64) -> Complex64 {
        let (wx, wy) = self.first_order(k_y, k_x);
        match (self.order, channel) {
            (DerivativeOrder::First, 0) => wx,
            (DerivativeOrder::First, 1) => wy,
            (DerivativeOrder::Second, 0) => wx * wx,
            (DerivativeOrder::Second, 1) => wx * wy,
            (DerivativeOrder::Second, 2) => wy * wy,
            _ => panic!("channel {channel} out of range for {:?}", self.order),
        }
    }

    /// `sum_ch |w_ch(k)|^2`, the diagonal of `M*M`.
    pub fn squared_magnitude(&self, k_y: i64, k_x: i64) -> f64 {
        (0..self.n_channels())
            .map(|ch| self.multiplier(ch, k_y, k_x).norm_sqr())
            .sum()
    }
}

/// Multiply a spectrum by every channel multiplier: `M rho_hat`.
pub fn apply_derivative(op: &DerivativeOp, rho_hat: &ComplexImage) -> Result<MultiChannelImage> {
    if rho_hat.grid() != op.grid() {
        return Err(SlrError::Dimension(format!(
            "derivative grid {}x{} does not match image grid {}x{}",
            op.grid().n_rows(),
            op.grid().n_cols(),
            rho_hat.grid().n_rows(),
            rho_hat.grid().n_cols()
        )));
    }
    assert_eq!(rho_hat.domain(), Domain::Fourier);
    let grid = rho_hat.grid();
    let channels = par::map_collect(&(0..op.n_channels()).collect::<Vec<_>>(), |&ch| {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, v) in rho_hat.values().iter().enumerate() {
            let (k_y, k_x) = grid.frequency(idx);
            out[idx] = op.multiplier(ch, k_y, k_x) * v;
        }
        out
    });
    Ok(MultiChannelImage {
        grid,
        domain: Domain::Fourier,
        channels,
    })
}

/// Adjoint of [`apply_derivative`]: `sum_ch conj(w_ch) . channels[ch]`.
pub fn apply_derivative_adjoint(
    op: &DerivativeOp,
    channels: &MultiChannelImage,
) -> Result<ComplexImage> {
    if channels.n_channels() != op.n_channels() {
        return Err(SlrError::Dimension(format!(
            "expected {} channels, got {}",
            op.n_channels(),
            channels.n_channels()
        )));
    }
    if channels.grid() != op.grid() {
        return Err(SlrError::Dimension("channel grid mismatch".into()));
    }
    let grid = op.grid();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (idx, slot) in out.iter_mut().enumerate() {
        let (k_y, k_x) = grid.frequency(idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for ch in 0..op.n_channels() {
            acc += op.multiplier(ch, k_y, k_x).conj() * channels.channel(ch)[idx];
        }
        *slot = acc;
    }
    Ok(ComplexImage {
        grid,
        domain: Domain::Fourier,
        values: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_image(grid: KGrid, domain: Domain, seed: u64) -> ComplexImage {
        let mut rng = StdRng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        ComplexImage::from_values(grid, domain, values).unwrap()
    }

    /// O(N^2) direct summation oracle for the unitary centered DFT.
    fn dft2_direct(img: &ComplexImage) -> Vec<Complex64> {
        let grid = img.grid();
        let (nr, nc) = (grid.n_rows() as i64, grid.n_cols() as i64);
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (idx, slot) in out.iter_mut().enumerate() {
            let (k_y, k_x) = grid.frequency(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for iy in 0..nr {
                for ix in 0..nc {
                    let phase = -2.0 * PI
                        * (k_x as f64 * ix as f64 / nc as f64
                            + k_y as f64 * iy as f64 / nr as f64);
                    acc += img.values()[(iy * nc + ix) as usize]
                        * Complex64::from_polar(1.0, phase);
                }
            }
            *slot = acc / (grid.len() as f64).sqrt();
        }
        out
    }

    #[test]
    fn grid_rejects_odd_or_small() {
        assert!(KGrid::new(3, 8).is_err());
        assert!(KGrid::new(8, 7).is_err());
        assert!(KGrid::new(2, 2).is_err());
        assert!(KGrid::new(4, 4).is_ok());
    }

    #[test]
    fn index_is_bijective() {
        let grid = KGrid::new(6, 8).unwrap();
        let mut seen = vec![false; grid.len()];
        for k_y in -3..3 {
            for k_x in -4..4 {
                let idx = grid.index(k_y, k_x);
                assert!(!seen[idx]);
                seen[idx] = true;
                assert_eq!(grid.frequency(idx), (k_y, k_x));
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn constant_image_has_dc_only_spectrum() {
        let grid = KGrid::new(8, 8).unwrap();
        let img = ComplexImage::from_values(
            grid,
            Domain::Spatial,
            vec![Complex64::new(1.0, 0.0); grid.len()],
        )
        .unwrap();
        let spec = fft2_centered(&img);
        for (idx, v) in spec.values().iter().enumerate() {
            if idx == grid.dc_index() {
                assert!((v - Complex64::new(8.0, 0.0)).norm() < 1e-12);
            } else {
                assert!(v.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_image_has_zero_spectrum() {
        let grid = KGrid::new(8, 8).unwrap();
        let spec = fft2_centered(&ComplexImage::zeros(grid, Domain::Spatial));
        assert!(spec.norm() == 0.0);
    }

    #[test]
    fn fft_matches_direct_dft_oracle() {
        let grid = KGrid::new(16, 16).unwrap();
        let img = random_image(grid, Domain::Spatial, 7);
        let fast = fft2_centered(&img);
        let direct = dft2_direct(&img);
        let err: f64 = fast
            .values()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10 * img.norm().max(1.0), "err={err}");
        // Parseval
        assert!((fast.norm() - img.norm()).abs() < 1e-12 * img.norm());
    }

    #[test]
    fn dc_only_spectrum_kills_all_derivative_channels() {
        let grid = KGrid::new(8, 8).unwrap();
        let mut spec = ComplexImage::zeros(grid, Domain::Fourier);
        spec.values_mut()[grid.dc_index()] = Complex64::new(3.0, -1.0);
        for order in [DerivativeOrder::First, DerivativeOrder::Second] {
            let op = DerivativeOp::new(grid, order);
            let out = apply_derivative(&op, &spec).unwrap();
            assert_eq!(out.n_channels(), order.n_channels());
            assert!(out.norm() == 0.0);
        }
    }

    #[test]
    fn single_mode_first_order_multiplier() {
        let grid = KGrid::new(8, 8).unwrap();
        let mut spec = ComplexImage::zeros(grid, Domain::Fourier);
        let v = Complex64::new(0.3, 1.7);
        let idx = grid.index(0, 1); // k = (k_y=0, k_x=1)
        spec.values_mut()[idx] = v;
        let op = DerivativeOp::new(grid, DerivativeOrder::First);
        let out = apply_derivative(&op, &spec).unwrap();
        let expect_x = Complex64::new(0.0, 2.0 * PI / 8.0) * v;
        assert!((out.channel(0)[idx] - expect_x).norm() < 1e-14);
        assert!(out.channel(1).iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn second_order_equals_composed_first_order() {
        let grid = KGrid::new(8, 8).unwrap();
        let spec = random_image(grid, Domain::Fourier, 11);
        let first = DerivativeOp::new(grid, DerivativeOrder::First);
        let second = DerivativeOp::new(grid, DerivativeOrder::Second);
        let out2 = apply_derivative(&second, &spec).unwrap();
        // Compose first-order multipliers channel-wise: xx = x.x, xy = x.y, yy = y.y.
        let g = apply_derivative(&first, &spec).unwrap();
        let pairs = [(0usize, 0usize), (0, 1), (1, 1)];
        for (ch2, &(a, b)) in pairs.iter().enumerate() {
            for idx in 0..grid.len() {
                let (k_y, k_x) = grid.frequency(idx);
                let composed = first.multiplier(a, k_y, k_x) * g.channel(b)[idx];
                assert!((out2.channel(ch2)[idx] - composed).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_adjoint_inner_product_identity() {
        let grid = KGrid::new(12, 8).unwrap();
        for order in [DerivativeOrder::First, DerivativeOrder::Second] {
            let op = DerivativeOp::new(grid, order);
            let x = random_image(grid, Domain::Fourier, 21);
            let mut rng = StdRng::seed_from_u64(22);
            let y = MultiChannelImage::from_channels(
                grid,
                Domain::Fourier,
                (0..op.n_channels())
                    .map(|_| {
                        (0..grid.len())
                            .map(|_| {
                                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                            })
                            .collect()
                    })
                    .collect(),
            );
            let mx = apply_derivative(&op, &x).unwrap();
            let mty = apply_derivative_adjoint(&op, &y).unwrap();
            let lhs = mx.dot(&y);
            let rhs = x.dot(&mty);
            assert!(
                (lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0),
                "adjoint mismatch: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gradient_gram_is_expected_diagonal() {
        // M1*M1 applied to each canonical basis vector scales it by
        // (2 pi)^2 (k_x^2/n_cols^2 + k_y^2/n_rows^2).
        let grid = KGrid::new(8, 6).unwrap();
        let op = DerivativeOp::new(grid, DerivativeOrder::First);
        for idx in 0..grid.len() {
            let mut e = ComplexImage::zeros(grid, Domain::Fourier);
            e.values_mut()[idx] = Complex64::new(1.0, 0.0);
            let out = apply_derivative_adjoint(&op, &apply_derivative(&op, &e).unwrap()).unwrap();
            let (k_y, k_x) = grid.frequency(idx);
            let expect = (2.0 * PI).powi(2)
                * ((k_x as f64 / grid.n_cols() as f64).powi(2)
                    + (k_y as f64 / grid.n_rows() as f64).powi(2));
            for (j, v) in out.values().iter().enumerate() {
                let want = if j == idx { expect } else { 0.0 };
                assert!((v - Complex64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn derivative_rejects_grid_mismatch() {
        let op = DerivativeOp::new(KGrid::new(8, 8).unwrap(), DerivativeOrder::First);
        let img = ComplexImage::zeros(KGrid::new(8, 10).unwrap(), Domain::Fourier);
        assert!(matches!(
            apply_derivative(&op, &img),
            Err(SlrError::Dimension(_))
        ));
        let chans = MultiChannelImage::zeros(KGrid::new(8, 8).unwrap(), Domain::Fourier, 3);
        assert!(matches!(
            apply_derivative_adjoint(&op, &chans),
            Err(SlrError::Dimension(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn fft_round_trip_is_identity(seed in 0u64..1000, half_r in 2usize..9, half_c in 2usize..9) {
            let grid = KGrid::new(2 * half_r, 2 * half_c).unwrap();
            let img = random_image(grid, Domain::Spatial, seed);
            let back = ifft2_centered(&fft2_centered(&img));
            let err: f64 = back
                .values()
                .iter()
                .zip(img.values())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            prop_assert!(err <= 1e-12 * img.norm());
        }
    }
}
