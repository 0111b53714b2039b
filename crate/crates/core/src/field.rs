//! Scalar fields and (p,q)-form fields on a periodic grid.
//!
//! A (p,q)-form is stored in the basis `dz^J ∧ dz̄^K` with `J`, `K` strictly
//! increasing multi-indices encoded as bitmasks over `0..n`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::PeriodicGrid;

pub type C64 = Complex64;

/// Relative tolerance on imaginary parts for fields flagged real.
pub const REALNESS_TOL: f64 = 1e-12;

/// Sub-multisets of `0..n` of size `k`, lexicographic in their sorted element lists.
pub fn subsets(n: usize, k: usize) -> Vec<u32> {
    fn rec(start: usize, n: usize, k: usize, mask: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(mask);
            return;
        }
        for i in start..n {
            rec(i + 1, n, k - 1, mask | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(0, n, k, 0, &mut out);
    }
    out
}

/// Sign of `e_j ∧ e_mask` relative to the sorted product, or `None` if `j ∈ mask`.
#[inline]
pub fn insert_sign(mask: u32, j: usize) -> Option<f64> {
    if mask & (1 << j) != 0 {
        return None;
    }
    let below = (mask & ((1u32 << j) - 1)).count_ones();
    Some(if below % 2 == 0 { 1.0 } else { -1.0 })
}

/// Sign of `e_a ∧ e_b` relative to the sorted product of `a ∪ b`, or `None` on overlap.
#[inline]
pub fn merge_sign(a: u32, b: u32) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut inversions = 0;
    let mut rest = b;
    while rest != 0 {
        let y = rest.trailing_zeros();
        inversions += (a >> (y + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A complex-valued function sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    values: Vec<C64>,
    real: bool,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<C64>, real: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let field = Self { grid, values, real };
        field.check()?;
        Ok(field)
    }

    pub fn from_real(grid: PeriodicGrid, values: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            values.iter().map(|&v| C64::new(v, 0.0)).collect(),
            true,
        )
    }

    /// Samples a real function of the real coordinates.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.points().map(|p| C64::new(f(&p), 0.0)).collect();
        Self {
            grid,
            values,
            real: true,
        }
    }

    pub fn from_complex_fn(grid: PeriodicGrid, f: impl Fn(&[f64]) -> C64) -> Self {
        let values = grid.points().map(|p| f(&p)).collect();
        Self {
            grid,
            values,
            real: false,
        }
    }

    pub fn constant(grid: PeriodicGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![C64::new(c, 0.0); grid.len()],
            real: true,
        }
    }

    fn check(&self) -> Result<()> {
        if self.values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Format("non-finite field value".into()));
        }
        if self.real {
            let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
            let imag = self.values.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
            if imag > REALNESS_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Format(format!(
                    "field flagged real has imaginary part {imag:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
            real: false,
        }
    }

    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| C64::new(f(v.re), 0.0)).collect(),
            real: true,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn as_form(&self) -> FormField {
        FormField {
            grid: self.grid,
            p: 0,
            q: 0,
            j_sets: vec![0],
            k_sets: vec![0],
            comps: vec![self.values.clone()],
            claims_real: self.real,
        }
    }
}

/// A homogeneous (p,q)-form.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    grid: PeriodicGrid,
    p: usize,
    q: usize,
    j_sets: Vec<u32>,
    k_sets: Vec<u32>,
    comps: Vec<Vec<C64>>,
    claims_real: bool,
}

impl FormField {
    pub fn zero(grid: PeriodicGrid, p: usize, q: usize) -> Self {
        let n = grid.dim();
        let j_sets = subsets(n, p.min(n));
        let k_sets = subsets(n, q.min(n));
        let comps = vec![vec![C64::new(0.0, 0.0); grid.len()]; j_sets.len() * k_sets.len()];
        Self {
            grid,
            p: p.min(n),
            q: q.min(n),
            j_sets,
            k_sets,
            comps,
            claims_real: false,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn bidegree(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn degree(&self) -> usize {
        self.p + self.q
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn claims_real(&self) -> bool {
        self.claims_real
    }

    pub fn set_claims_real(&mut self, real: bool) {
        self.claims_real = real;
    }

    fn index_of(&self, j: u32, k: u32) -> Option<usize> {
        let ji = self.j_sets.iter().position(|&m| m == j)?;
        let ki = self.k_sets.iter().position(|&m| m == k)?;
        Some(ji * self.k_sets.len() + ki)
    }

    pub fn component(&self, j: u32, k: u32) -> Option<&[C64]> {
        self.index_of(j, k).map(|i| self.comps[i].as_slice())
    }

    pub fn component_mut(&mut self, j: u32, k: u32) -> Option<&mut Vec<C64>> {
        self.index_of(j, k).map(move |i| &mut self.comps[i])
    }

    /// Iterates over `(J, K, values)`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32, &[C64])> {
        let nk = self.k_sets.len();
        self.comps.iter().enumerate().map(move |(i, c)| {
            (self.j_sets[i / nk], self.k_sets[i % nk], c.as_slice())
        })
    }

    pub(crate) fn from_raw(
        grid: PeriodicGrid,
        p: usize,
        q: usize,
        comps: Vec<Vec<C64>>,
        claims_real: bool,
    ) -> Result<Self> {
        let mut f = Self::zero(grid, p, q);
        if p > grid.dim() || q > grid.dim() || comps.len() != f.comps.len() {
            return Err(Error::Format(format!(
                "expected {} components for bidegree ({p},{q})",
                f.comps.len()
            )));
        }
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        f.comps = comps;
        f.claims_real = claims_real;
        Ok(f)
    }

    pub fn add_scaled(&mut self, j: u32, k: u32, scale: C64, values: &[C64]) {
        if let Some(dst) = self.component_mut(j, k) {
            for (d, v) in dst.iter_mut().zip(values) {
                *d += scale * v;
            }
        }
    }

    pub fn scale_by(&mut self, c: C64) {
        for comp in &mut self.comps {
            comp.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Multiplies every component pointwise by a scalar field.
    pub fn mul_pointwise(&self, f: &[C64]) -> Self {
        let mut out = self.clone();
        for comp in &mut out.comps {
            for (v, s) in comp.iter_mut().zip(f) {
                *v *= s;
            }
        }
        out.claims_real = false;
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    /// The complex conjugate form, of bidegree (q,p).
    pub fn conjugate(&self) -> Self {
        let mut out = Self::zero(self.grid, self.q, self.p);
        let sign = if (self.p * self.q) % 2 == 0 { 1.0 } else { -1.0 };
        for (j, k, vals) in self.iter() {
            let dst = out.component_mut(k, j).expect("bidegree swap");
            for (d, v) in dst.iter_mut().zip(vals) {
                *d = v.conj() * sign;
            }
        }
        out
    }
}

/// A sum of homogeneous forms of possibly different bidegrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    grid: PeriodicGrid,
    pieces: BTreeMap<(usize, usize), FormField>,
}

impl Form {
    pub fn zero(grid: PeriodicGrid) -> Self {
        Self {
            grid,
            pieces: BTreeMap::new(),
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn piece(&self, p: usize, q: usize) -> Option<&FormField> {
        self.pieces.get(&(p, q))
    }

    pub fn pieces(&self) -> impl Iterator<Item = &FormField> {
        self.pieces.values()
    }

    pub(crate) fn piece_mut(&mut self, p: usize, q: usize) -> &mut FormField {
        let grid = self.grid;
        self.pieces
            .entry((p, q))
            .or_insert_with(|| FormField::zero(grid, p, q))
    }

    pub fn add_field(&mut self, field: &FormField) -> Result<()> {
        self.grid.check_same(field.grid())?;
        let (p, q) = field.bidegree();
        let dst = self.piece_mut(p, q);
        for (d, s) in dst.comps.iter_mut().zip(&field.comps) {
            for (a, b) in d.iter_mut().zip(s) {
                *a += b;
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Form) -> Result<Form> {
        let mut out = self.clone();
        for f in other.pieces() {
            out.add_field(f)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Form) -> Result<Form> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, c: C64) -> Form {
        let mut out = self.clone();
        for f in out.pieces.values_mut() {
            f.scale_by(c);
        }
        out
    }

    pub fn mul_pointwise(&self, f: &[C64]) -> Form {
        Form {
            grid: self.grid,
            pieces: self
                .pieces
                .iter()
                .map(|(k, v)| (*k, v.mul_pointwise(f)))
                .collect(),
        }
    }

    /// Largest total degree among the pieces.
    pub fn max_degree(&self) -> usize {
        self.pieces.keys().map(|(p, q)| p + q).max().unwrap_or(0)
    }

    pub fn max_abs(&self) -> f64 {
        self.pieces.values().fold(0.0, |m, f| m.max(f.max_abs()))
    }
}

/// A (p,q)-form whose components are sums of `modes` random Fourier modes with every wave
/// component in `[-max_wave, max_wave]`.
pub fn random_form(
    grid: PeriodicGrid,
    p: usize,
    q: usize,
    max_wave: i32,
    modes: usize,
    rng: &mut impl rand::Rng,
) -> FormField {
    let mut form = FormField::zero(grid, p, q);
    let d = grid.real_dim();
    let tau = 2.0 * std::f64::consts::PI;
    for comp in form.comps.iter_mut() {
        let terms: Vec<(Vec<f64>, C64)> = (0..modes)
            .map(|_| {
                let k = (0..d).map(|_| rng.random_range(-max_wave..=max_wave) as f64).collect();
                let a = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                (k, a)
            })
            .collect();
        for (v, x) in comp.iter_mut().zip(grid.points()) {
            *v = terms
                .iter()
                .map(|(k, a)| {
                    let phase: f64 = k.iter().zip(&x).map(|(ki, xi)| ki * xi).sum();
                    a * C64::from_polar(1.0, tau * phase)
                })
                .sum();
        }
    }
    form
}

impl From<FormField> for Form {
    fn from(field: FormField) -> Self {
        let mut pieces = BTreeMap::new();
        let grid = field.grid;
        pieces.insert(field.bidegree(), field);
        Self { grid, pieces }
    }
}

impl From<&ScalarField> for Form {
    fn from(f: &ScalarField) -> Self {
        f.as_form().into()
    }
}

/// Outcome of [`validate_form`].
#[derive(Debug, Clone, Serialize)]
pub struct FormValidation {
    pub component_count_ok: bool,
    pub finite: bool,
    /// `Some` when the form is of type (k,k) and claims to be real.
    pub reality_ok: Option<bool>,
    pub max_reality_defect: f64,
}

impl FormValidation {
    pub fn passed(&self) -> bool {
        self.component_count_ok && self.finite && self.reality_ok.unwrap_or(true)
    }
}

/// Checks component counts, finiteness, and the conjugation symmetry of real (k,k)-forms.
pub fn validate_form(form: &FormField) -> FormValidation {
    let n = form.grid.dim();
    let component_count_ok = form.num_components() == binomial(n, form.p) * binomial(n, form.q)
        && form.comps.iter().all(|c| c.len() == form.grid.len());
    let finite = form
        .comps
        .iter()
        .flat_map(|c| c.iter())
        .all(|v| v.re.is_finite() && v.im.is_finite());
    let mut defect = 0.0f64;
    let reality_ok = if form.p == form.q && form.claims_real {
        let conj = form.conjugate();
        let scale = form.max_abs().max(f64::MIN_POSITIVE);
        for ((_, _, a), (_, _, b)) in form.iter().zip(conj.iter()) {
            for (x, y) in a.iter().zip(b) {
                defect = defect.max((x - y).norm());
            }
        }
        defect /= scale;
        Some(defect <= REALNESS_TOL)
    } else {
        None
    };
    FormValidation {
        component_count_ok,
        finite,
        reality_ok,
        max_reality_defect: defect,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets(3, 2), vec![0b011, 0b101, 0b110]);
        assert_eq!(subsets(3, 0), vec![0]);
        assert_eq!(subsets(2, 2), vec![0b11]);
    }

    #[test]
    fn signs() {
        // dz1 ∧ dz0 = -dz0 ∧ dz1
        assert_eq!(merge_sign(0b10, 0b01), Some(-1.0));
        assert_eq!(merge_sign(0b01, 0b10), Some(1.0));
        assert_eq!(merge_sign(0b01, 0b01), None);
        assert_eq!(insert_sign(0b001, 2), Some(-1.0));
        assert_eq!(insert_sign(0b110, 0), Some(1.0));
        // e2 ∧ (e0 ∧ e1) = + e0 ∧ e1 ∧ e2
        assert_eq!(merge_sign(0b100, 0b011), Some(1.0));
    }

    #[test]
    fn component_counts() {
        let g = PeriodicGrid::new(3, 4).unwrap();
        assert_eq!(FormField::zero(g, 2, 1).num_components(), 9);
        assert_eq!(FormField::zero(g, 3, 3).num_components(), 1);
        assert!(validate_form(&FormField::zero(g, 1, 2)).passed());
    }
}
