//! Fourier transforms and derivative symbols on the periodic grid.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::Result;
use crate::field::{ScalarField, C64};
use crate::grid::PeriodicGrid;

/// A holomorphic or antiholomorphic coordinate derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partial {
    /// `∂/∂z_j`
    Dz(usize),
    /// `∂/∂z̄_j`
    Dzbar(usize),
}

/// FFT plans and derivative symbol tables for one grid.
pub struct CalculusContext {
    grid: PeriodicGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Per complex coordinate, symbols over the `(x_j, y_j)` index pair.
    dz: Vec<Vec<C64>>,
    dzbar: Vec<Vec<C64>>,
}

impl std::fmt::Debug for CalculusContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CalculusContext").field("grid", &self.grid).finish()
    }
}

/// Signed wave number of FFT index `i`; the Nyquist index maps to `None`.
pub fn wavenumber(i: usize, size: usize) -> Option<i64> {
    let half = size / 2;
    match i.cmp(&half) {
        std::cmp::Ordering::Less => Some(i as i64),
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Greater => Some(i as i64 - size as i64),
    }
}

impl CalculusContext {
    pub fn new(grid: PeriodicGrid) -> Self {
        let size = grid.size();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let mut dz = Vec::new();
        let mut dzbar = Vec::new();
        for _ in 0..grid.dim() {
            let mut a = vec![C64::new(0.0, 0.0); size * size];
            let mut b = a.clone();
            for ix in 0..size {
                for iy in 0..size {
                    if let (Some(kx), Some(ky)) = (wavenumber(ix, size), wavenumber(iy, size)) {
                        let (kx, ky) = (kx as f64, ky as f64);
                        a[ix * size + iy] = C64::new(PI * ky, PI * kx);
                        b[ix * size + iy] = C64::new(-PI * ky, PI * kx);
                    }
                }
            }
            dz.push(a);
            dzbar.push(b);
        }
        Self {
            grid,
            fwd,
            inv,
            dz,
            dzbar,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    fn transform(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let size = self.grid.size();
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let dims = self.grid.real_dim();
        let mut buf = Vec::new();
        for axis in 0..dims {
            let stride = self.grid.stride(axis);
            if stride == 1 {
                plan.process_with_scratch(data, &mut scratch);
                continue;
            }
            let block = size * stride;
            buf.resize(block, C64::new(0.0, 0.0));
            for chunk in data.chunks_exact_mut(block) {
                transpose::transpose(chunk, &mut buf, stride, size);
                plan.process_with_scratch(&mut buf, &mut scratch);
                transpose::transpose(&buf, chunk, size, stride);
            }
        }
    }

    /// In-place forward transform (unnormalized).
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.fwd);
    }

    /// In-place inverse transform, normalized so that `inverse ∘ forward = id`.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inv);
        let s = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn spectrum(&self, values: &[C64]) -> Vec<C64> {
        let mut out = values.to_vec();
        self.forward(&mut out);
        out
    }

    fn pair_index(&self, node: usize, j: usize) -> usize {
        let size = self.grid.size();
        (node / self.grid.stride(2 * j + 1)) % (size * size)
    }

    /// Fourier symbol of `d` at spectral index `node`.
    #[inline]
    pub fn symbol(&self, d: Partial, node: usize) -> C64 {
        match d {
            Partial::Dz(j) => self.dz[j][self.pair_index(node, j)],
            Partial::Dzbar(j) => self.dzbar[j][self.pair_index(node, j)],
        }
    }

    /// Multiplies a spectrum by the symbol of `d`.
    pub fn apply_symbol(&self, spec: &mut [C64], d: Partial) {
        let (j, table) = match d {
            Partial::Dz(j) => (j, &self.dz[j]),
            Partial::Dzbar(j) => (j, &self.dzbar[j]),
        };
        let size = self.grid.size();
        let stride = self.grid.stride(2 * j + 1);
        let period = size * size * stride;
        for (block_start, block) in spec.chunks_mut(stride).enumerate() {
            let s = table[block_start % (period / stride)];
            block.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// `∂_a ∂̄_b` symbol applied to a spectrum, written to `out`.
    pub fn symbol_product_into(&self, spec: &[C64], a: Partial, b: Partial, out: &mut [C64]) {
        out.copy_from_slice(spec);
        self.apply_symbol(out, a);
        self.apply_symbol(out, b);
    }

    /// Spectral derivative of node values.
    pub fn partial(&self, values: &[C64], d: Partial) -> Vec<C64> {
        let mut spec = self.spectrum(values);
        self.apply_symbol(&mut spec, d);
        self.inverse(&mut spec);
        spec
    }

    pub fn partial_field(&self, f: &ScalarField, d: Partial) -> Result<ScalarField> {
        self.grid.check_same(f.grid())?;
        ScalarField::new(self.grid, self.partial(f.values(), d), false)
    }

    /// Symbol of `Σ_j ∂_j ∂̄_j`, i.e. one quarter of the euclidean Laplacian (Nyquist removed).
    pub fn flat_laplacian_symbol(&self, node: usize) -> f64 {
        (0..self.grid.dim())
            .map(|j| (self.symbol(Partial::Dz(j), node) * self.symbol(Partial::Dzbar(j), node)).re)
            .sum()
    }

    /// True if any axis index of `node` is the Nyquist index.
    pub fn is_nyquist(&self, node: usize) -> bool {
        let half = self.grid.size() / 2;
        (0..self.grid.real_dim()).any(|a| self.grid.axis_index(node, a) == half)
    }

    /// Removes Nyquist modes from node values.
    pub fn band_limit(&self, values: &mut [C64]) {
        self.forward(values);
        for (node, v) in values.iter_mut().enumerate() {
            if self.is_nyquist(node) {
                *v = C64::new(0.0, 0.0);
            }
        }
        self.inverse(values);
    }
}
