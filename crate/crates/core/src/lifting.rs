//! Explicit lifted Toeplitz matrices and their Gram matrices.
//!
//! For a spectrum `rho_hat` and a derivative weighting `M`, the lifted
//! matrix stacks one Toeplitz block per channel. Row `r` of a block is the
//! valid-region sample of the 2-D convolution of the weighted spectrum with
//! a filter: entry `(r, a)` equals `w_ch(k_r - l_a) * rho_hat[k_r - l_a]`,
//! where `k_r` runs over shifts at which the filter support lies fully
//! inside the grid and `l_a` over centered filter offsets.
//!
//! Channel stacking order is fixed: (x, y) for first order and
//! (xx, xy, yy) for second order. Valid shifts and filter offsets are
//! enumerated row-major in ascending frequency order.
//!
//! Everything here stays explicit (dense) on purpose: this is the
//! correctness anchor the sum-of-squares fast path is tested against.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SlrError};
use crate::grid::{apply_derivative, ComplexImage, DerivativeOp, KGrid};
use crate::par;

/// Dense Hermitian matrix (filter-support sized).
pub type HermitianMatrix = DMatrix<Complex64>;

/// Centered odd-sized filter support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FilterSupport {
    f_rows: usize,
    f_cols: usize,
}

impl FilterSupport {
    pub fn new(f_rows: usize, f_cols: usize) -> Result<Self> {
        if f_rows == 0 || f_cols == 0 || f_rows % 2 == 0 || f_cols % 2 == 0 {
            return Err(SlrError::Parameter(format!(
                "filter support must be odd and positive, got {f_rows}x{f_cols}"
            )));
        }
        Ok(FilterSupport { f_rows, f_cols })
    }

    /// Square `n x n` support.
    pub fn square(n: usize) -> Result<Self> {
        FilterSupport::new(n, n)
    }

    pub fn f_rows(&self) -> usize {
        self.f_rows
    }

    pub fn f_cols(&self) -> usize {
        self.f_cols
    }

    /// Number of taps `|Lambda|`.
    pub fn len(&self) -> usize {
        self.f_rows * self.f_cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Half-widths `((f_rows-1)/2, (f_cols-1)/2)`.
    pub fn half(&self) -> (i64, i64) {
        ((self.f_rows as i64 - 1) / 2, (self.f_cols as i64 - 1) / 2)
    }

    /// Centered offsets in row-major order.
    pub fn offsets(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        let (hr, hc) = self.half();
        (-hr..=hr).flat_map(move |dy| (-hc..=hc).map(move |dx| (dy, dx)))
    }

    /// Linear tap index of a centered offset.
    pub fn tap_index(&self, dy: i64, dx: i64) -> usize {
        let (hr, hc) = self.half();
        debug_assert!(dy.abs() <= hr && dx.abs() <= hc);
        ((dy + hr) as usize) * self.f_cols + (dx + hc) as usize
    }

    pub fn fits(&self, grid: KGrid) -> bool {
        self.f_rows <= grid.n_rows() && self.f_cols <= grid.n_cols()
    }

    fn check_fits(&self, grid: KGrid) -> Result<()> {
        if !self.fits(grid) {
            return Err(SlrError::Dimension(format!(
                "filter {}x{} does not fit in grid {}x{}",
                self.f_rows,
                self.f_cols,
                grid.n_rows(),
                grid.n_cols()
            )));
        }
        Ok(())
    }
}

/// Set of shifts at which a filter lies fully inside a grid.
#[derive(Debug, Clone, Copy)]
pub struct ValidRegion {
    pub ky_min: i64,
    pub ky_max: i64, // inclusive
    pub kx_min: i64,
    pub kx_max: i64, // inclusive
}

impl ValidRegion {
    pub fn new(grid: KGrid, supp: FilterSupport) -> Self {
        let (hr, hc) = supp.half();
        ValidRegion {
            ky_min: -(grid.n_rows() as i64) / 2 + hr,
            ky_max: grid.n_rows() as i64 / 2 - 1 - hr,
            kx_min: -(grid.n_cols() as i64) / 2 + hc,
            kx_max: grid.n_cols() as i64 / 2 - 1 - hc,
        }
    }

    pub fn n_rows(&self) -> usize {
        (self.ky_max - self.ky_min + 1) as usize
    }

    pub fn n_cols(&self) -> usize {
        (self.kx_max - self.kx_min + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.n_rows() * self.n_cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shift at linear position `i`, row-major.
    pub fn shift(&self, i: usize) -> (i64, i64) {
        let w = self.n_cols();
        (
            self.ky_min + (i / w) as i64,
            self.kx_min + (i % w) as i64,
        )
    }
}

/// Explicit lifted Toeplitz matrix (all channels stacked).
#[derive(Debug, Clone)]
pub struct LiftedMatrix {
    matrix: DMatrix<Complex64>,
    supp: FilterSupport,
    valid: ValidRegion,
    n_channels: usize,
}

impl LiftedMatrix {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn support(&self) -> FilterSupport {
        self.supp
    }

    pub fn valid_region(&self) -> ValidRegion {
        self.valid
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    /// Rows per channel block.
    pub fn rows_per_channel(&self) -> usize {
        self.valid.len()
    }

    /// `T . c` for a tap vector of length `|Lambda|`.
    pub fn apply_filter(&self, filter: &[Complex64]) -> Result<Vec<Complex64>> {
        if filter.len() != self.supp.len() {
            return Err(SlrError::Dimension(format!(
                "filter length {} != support size {}",
                filter.len(),
                self.supp.len()
            )));
        }
        let x = nalgebra::DVector::from_column_slice(filter);
        Ok((&self.matrix * x).as_slice().to_vec())
    }
}

/// Build the lifted matrix of a weighted spectrum over a filter support.
pub fn build_lifted(
    rho_hat: &ComplexImage,
    op: &DerivativeOp,
    supp: FilterSupport,
) -> Result<LiftedMatrix> {
    supp.check_fits(rho_hat.grid())?;
    let grid = rho_hat.grid();
    let weighted = apply_derivative(op, rho_hat)?;
    let valid = ValidRegion::new(grid, supp);
    let n_valid = valid.len();
    let n_taps = supp.len();
    let n_channels = op.n_channels();
    let offsets: Vec<(i64, i64)> = supp.offsets().collect();

    // Row-major fill, then one copy into the column-major nalgebra matrix.
    let mut rows = vec![Complex64::new(0.0, 0.0); n_channels * n_valid * n_taps];
    for ch in 0..n_channels {
        let g = weighted.channel(ch);
        let base = ch * n_valid * n_taps;
        par::chunks_mut(
            &mut rows[base..base + n_valid * n_taps],
            n_taps * 64,
            |start, chunk| {
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let flat = start + i;
                    let (k_y, k_x) = valid.shift(flat / n_taps);
                    let (dy, dx) = offsets[flat % n_taps];
                    *slot = g[grid.index(k_y - dy, k_x - dx)];
                }
            },
        );
    }

    let matrix = DMatrix::from_row_iterator(n_channels * n_valid, n_taps, rows);
    Ok(LiftedMatrix {
        matrix,
        supp,
        valid,
        n_channels,
    })
}

/// `T* T` on the filter support: the `|Lambda| x |Lambda|` Gram matrix.
///
/// Accumulated over fixed row blocks in order, so the result is
/// bit-deterministic under any thread count.
pub fn gram_matrix(
    rho_hat: &ComplexImage,
    op: &DerivativeOp,
    supp: FilterSupport,
) -> Result<HermitianMatrix> {
    let lifted = build_lifted(rho_hat, op, supp)?;
    let t = lifted.matrix();
    let n_taps = supp.len();
    let block = 512usize;
    let gram = par::reduce_ranges(
        t.nrows(),
        block,
        |r| {
            let rows = t.rows_range(r);
            rows.adjoint() * rows
        },
        |a, b| a + b,
        DMatrix::zeros(n_taps, n_taps),
    );
    Ok(gram)
}

/// `||T . filter||_2`: the annihilation test statistic.
pub fn annihilation_residual(
    rho_hat: &ComplexImage,
    op: &DerivativeOp,
    supp: FilterSupport,
    filter: &[Complex64],
) -> Result<f64> {
    let lifted = build_lifted(rho_hat, op, supp)?;
    let out = lifted.apply_filter(filter)?;
    Ok(out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
}
