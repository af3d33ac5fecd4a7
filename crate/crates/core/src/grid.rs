//! Uniform periodic lattices on `[-L, L)^dim` and their wavenumber duals.

use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic lattice with `points_per_axis` samples per axis.
///
/// Sample positions are `x_j = -L + j dx` with `dx = 2L/N`; wavenumbers are
/// `k_m = (pi/L) m` for `m` in `[-N/2, N/2)`, stored in FFT order
/// (`0, 1, .., N/2-1, -N/2, .., -1`). Flattened samples are row-major with the
/// first axis slowest.
pub struct Grid {
    dim: usize,
    n: usize,
    half_width: f64,
    dx: f64,
    coords: Vec<f64>,
    wavenumbers: Vec<f64>,
    r2: Vec<f64>,
    k2: Vec<f64>,
    pub(crate) fft: Arc<dyn Fft<f64>>,
    pub(crate) ifft: Arc<dyn Fft<f64>>,
}

/// Shared handle; grids are immutable after construction.
pub type GridRef = Arc<Grid>;

pub fn make_grid(dim: usize, points_per_axis: usize, half_width: f64) -> Result<GridRef> {
    Grid::new(dim, points_per_axis, half_width)
}

impl Grid {
    pub fn new(dim: usize, points_per_axis: usize, half_width: f64) -> Result<GridRef> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if points_per_axis < 16 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("points per axis {points_per_axis} is not a power of two >= 16")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidGrid(format!("half width {half_width} is not positive")));
        }
        let n = points_per_axis;
        // N is a power of two, so this division is exact.
        let dx = 2.0 * half_width / n as f64;
        let coords: Vec<f64> = (0..n).map(|j| -half_width + j as f64 * dx).collect();
        let dk = std::f64::consts::PI / half_width;
        let wavenumbers: Vec<f64> = (0..n).map(|i| signed_mode(i, n) as f64 * dk).collect();

        let total = n.pow(dim as u32);
        let mut r2 = Vec::with_capacity(total);
        let mut k2 = Vec::with_capacity(total);
        for idx in 0..total {
            let (mut rr, mut kk) = (0.0, 0.0);
            for axis in 0..dim {
                let i = axis_index(idx, axis, dim, n);
                rr += coords[i] * coords[i];
                kk += wavenumbers[i] * wavenumbers[i];
            }
            r2.push(rr);
            k2.push(kk);
        }

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        Ok(Arc::new(Grid { dim, n, half_width, dx, coords, wavenumbers, r2, k2, fft, ifft }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    /// Wavenumber spacing `pi/L`.
    pub fn dk(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest representable wavenumber magnitude, `pi/dx`.
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }

    pub fn len(&self) -> usize {
        self.r2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r2.is_empty()
    }

    /// Cell volume `dx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.dx.powi(self.dim as i32)
    }

    /// Wavenumber cell volume `dk^dim`.
    pub fn k_cell_volume(&self) -> f64 {
        self.dk().powi(self.dim as i32)
    }

    /// Per-axis sample coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `|x|^2` at every flattened sample.
    pub fn radius_sq(&self) -> &[f64] {
        &self.r2
    }

    /// `|k|^2` at every flattened (FFT-ordered) spectral index.
    pub fn k_sq(&self) -> &[f64] {
        &self.k2
    }

    /// Coordinate along `axis` of the flattened sample `idx`.
    #[inline]
    pub fn x_at(&self, idx: usize, axis: usize) -> f64 {
        self.coords[axis_index(idx, axis, self.dim, self.n)]
    }

    /// Wavenumber along `axis` of the flattened spectral index `idx`.
    #[inline]
    pub fn k_at(&self, idx: usize, axis: usize) -> f64 {
        self.wavenumbers[axis_index(idx, axis, self.dim, self.n)]
    }

    /// Signed mode number of the flattened spectral index along `axis`.
    #[inline]
    pub fn mode_at(&self, idx: usize, axis: usize) -> i64 {
        signed_mode(axis_index(idx, axis, self.dim, self.n), self.n)
    }

    /// The wavenumber lattice viewed as a spatial grid: same point count,
    /// half-width `pi N / (2L)`, so its sample positions are exactly `k_m`.
    pub fn dual(&self) -> Result<GridRef> {
        Grid::new(self.dim, self.n, self.k_max())
    }

    /// Structural equality (dimension, resolution, box size).
    pub fn same_as(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_width.to_bits() == other.half_width.to_bits()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("points_per_axis", &self.n)
            .field("half_width", &self.half_width)
            .field("spacing", &self.dx)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

#[inline]
pub(crate) fn axis_index(idx: usize, axis: usize, dim: usize, n: usize) -> usize {
    if dim == 1 {
        idx
    } else if axis == 0 {
        idx / n
    } else {
        idx % n
    }
}

#[inline]
pub(crate) fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
