use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on the complex torus C^n / Z^{2n} with unit periods.
///
/// Real axes are ordered `x_1, y_1, x_2, y_2, ...`; axis `2j` is `x_{j+1}` and
/// axis `2j + 1` is `y_{j+1}`. Storage is row-major with the last axis contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    size: usize,
}

impl PeriodicGrid {
    pub fn new(n: usize, size: usize) -> Result<Self> {
        if !(2..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!(
                "complex dimension must be 2 or 3, got {n}"
            )));
        }
        if size < 4 || !size.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "N must be a power of two >= 4, got {size}"
            )));
        }
        Ok(Self { n, size })
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nodes per real axis.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    /// Total node count, `N^{2n}`.
    pub fn len(&self) -> usize {
        self.size.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.size.pow((self.real_dim() - 1 - axis) as u32)
    }

    /// Integer coordinate of `node` along `axis`.
    #[inline]
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.stride(axis)) % self.size
    }

    /// Real coordinates of `node` in `[0,1)^{2n}`.
    pub fn point(&self, node: usize, out: &mut [f64]) {
        let h = 1.0 / self.size as f64;
        let mut rem = node;
        for axis in (0..self.real_dim()).rev() {
            out[axis] = (rem % self.size) as f64 * h;
            rem /= self.size;
        }
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |node| {
            let mut p = vec![0.0; self.real_dim()];
            self.point(node, &mut p);
            p
        })
    }

    /// Grid with twice as many nodes per axis, used for positivity sampling.
    pub fn refined(&self) -> Self {
        Self {
            n: self.n,
            size: 2 * self.size,
        }
    }

    /// Largest wave number component allowed in generated specifications.
    pub fn band_limit(&self) -> usize {
        self.size / 4
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}
