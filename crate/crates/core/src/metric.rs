//! Hermitian metrics `ω = i Σ g_{jk̄} dz^j ∧ dz̄^k` sampled on the torus grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FormField, ScalarField, C64};
use crate::grid::PeriodicGrid;

/// Tolerance on `g - g^H` at a node.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// One Fourier term `(amp + i·amp_im)·cos(2π k·x + phase)`.
///
/// `wave` lists one integer per real axis in the order `x_1, y_1, x_2, y_2, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amp: f64,
    #[serde(default)]
    pub amp_im: f64,
    pub wave: Vec<i32>,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    pub fn real(amp: f64, wave: Vec<i32>, phase: f64) -> Self {
        Self {
            amp,
            amp_im: 0.0,
            wave,
            phase,
        }
    }

    fn angle(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.wave.iter().zip(x).map(|(&k, &xi)| k as f64 * xi).sum();
        2.0 * std::f64::consts::PI * dot + self.phase
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        C64::new(self.amp, self.amp_im) * self.angle(x).cos()
    }
}

/// Sum of trigonometric terms.
pub fn eval_terms(terms: &[TrigTerm], x: &[f64]) -> C64 {
    terms.iter().map(|t| t.eval(x)).sum()
}

fn eval_real_terms(terms: &[TrigTerm], x: &[f64]) -> f64 {
    terms.iter().map(|t| t.amp * t.angle(x).cos()).sum()
}

/// Upper-triangular entry `h_{row,col}` of a hermitian perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationEntry {
    pub row: usize,
    pub col: usize,
    pub terms: Vec<TrigTerm>,
}

fn one() -> f64 {
    1.0
}

/// Declarative description of a metric on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricSpec {
    /// `scale · ω_flat`.
    Flat {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · e^φ ω_flat`.
    Conformal {
        phi: Vec<TrigTerm>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · (I + h)` with `h` hermitian; only entries with `row <= col` are given.
    Perturbation {
        entries: Vec<PerturbationEntry>,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · (ω_flat + dd^c ψ)`.
    KahlerPotential {
        psi: Vec<TrigTerm>,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl MetricSpec {
    pub fn flat() -> Self {
        MetricSpec::Flat { scale: 1.0 }
    }

    /// `e^{amp·cos(2π x_1)} ω_flat` in complex dimension `n`.
    pub fn conformal_cos(n: usize, amp: f64) -> Self {
        let mut wave = vec![0; 2 * n];
        wave[0] = 1;
        MetricSpec::Conformal {
            phi: vec![TrigTerm::real(amp, wave, 0.0)],
            scale: 1.0,
        }
    }

    /// A seeded hermitian perturbation `I + h` with two trigonometric terms per entry.
    ///
    /// Every row of `h` has absolute sum below `amp`, so the metric stays positive for `amp < 1`.
    pub fn random_perturbation(n: usize, amp: f64, max_wave: i32, rng: &mut impl rand::Rng) -> Self {
        let a = amp / (2.0 * n as f64);
        let mut entries = Vec::new();
        for row in 0..n {
            for col in row..n {
                let terms = (0..2)
                    .map(|_| TrigTerm {
                        amp: a * (2.0 * rng.random::<f64>() - 1.0),
                        amp_im: if row == col { 0.0 } else { a * (2.0 * rng.random::<f64>() - 1.0) },
                        wave: (0..2 * n).map(|_| rng.random_range(-max_wave..=max_wave)).collect(),
                        phase: rng.random::<f64>() * std::f64::consts::TAU,
                    })
                    .map(|mut t| {
                        // |amp + i amp_im| ≤ a keeps the row bound.
                        let m = (t.amp * t.amp + t.amp_im * t.amp_im).sqrt();
                        if m > a {
                            t.amp *= a / m;
                            t.amp_im *= a / m;
                        }
                        t
                    })
                    .collect();
                entries.push(PerturbationEntry { row, col, terms });
            }
        }
        MetricSpec::Perturbation { entries, scale: 1.0 }
    }

    pub fn scale(&self) -> f64 {
        match self {
            MetricSpec::Flat { scale }
            | MetricSpec::Conformal { scale, .. }
            | MetricSpec::Perturbation { scale, .. }
            | MetricSpec::KahlerPotential { scale, .. } => *scale,
        }
    }

    pub fn with_scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            MetricSpec::Flat { scale }
            | MetricSpec::Conformal { scale, .. }
            | MetricSpec::Perturbation { scale, .. }
            | MetricSpec::KahlerPotential { scale, .. } => *scale = c,
        }
        out
    }

    fn all_terms(&self) -> Vec<&TrigTerm> {
        match self {
            MetricSpec::Flat { .. } => vec![],
            MetricSpec::Conformal { phi, .. } => phi.iter().collect(),
            MetricSpec::Perturbation { entries, .. } => {
                entries.iter().flat_map(|e| e.terms.iter()).collect()
            }
            MetricSpec::KahlerPotential { psi, .. } => psi.iter().collect(),
        }
    }

    fn check(&self, grid: &PeriodicGrid) -> Result<()> {
        let n = grid.dim();
        let scale = self.scale();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::SpecParse(format!("scale must be positive, got {scale}")));
        }
        for t in self.all_terms() {
            if t.wave.len() != 2 * n {
                return Err(Error::SpecParse(format!(
                    "wave vector has {} entries, expected {}",
                    t.wave.len(),
                    2 * n
                )));
            }
            if ![t.amp, t.amp_im, t.phase].iter().all(|v| v.is_finite()) {
                return Err(Error::SpecParse("non-finite coefficient".into()));
            }
            let limit = grid.band_limit();
            if let Some(&k) = t.wave.iter().find(|k| k.unsigned_abs() as usize > limit) {
                return Err(Error::BandLimitExceeded {
                    component: k as i64,
                    limit,
                    size: grid.size(),
                });
            }
        }
        let real_only = |terms: &[TrigTerm], what: &str| {
            if terms.iter().any(|t| t.amp_im != 0.0) {
                Err(Error::SpecParse(format!("{what} must be real (amp_im = 0)")))
            } else {
                Ok(())
            }
        };
        match self {
            MetricSpec::Conformal { phi, .. } => real_only(phi, "conformal factor phi")?,
            MetricSpec::KahlerPotential { psi, .. } => real_only(psi, "Kähler potential psi")?,
            MetricSpec::Perturbation { entries, .. } => {
                for e in entries {
                    if e.row > e.col || e.col >= n {
                        return Err(Error::SpecParse(format!(
                            "perturbation entry ({}, {}) must satisfy row <= col < {n}",
                            e.row, e.col
                        )));
                    }
                    if e.row == e.col {
                        real_only(&e.terms, "diagonal perturbation entry")?;
                    }
                }
            }
            MetricSpec::Flat { .. } => {}
        }
        Ok(())
    }

    /// Coefficient matrix at a point, row-major `n × n`.
    pub fn matrix_at(&self, n: usize, x: &[f64], out: &mut [C64]) {
        out.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        let s = self.scale();
        match self {
            MetricSpec::Flat { .. } => {}
            MetricSpec::Conformal { phi, .. } => {
                let e = eval_real_terms(phi, x).exp();
                for j in 0..n {
                    out[j * n + j] = C64::new(s * e, 0.0);
                }
                return;
            }
            MetricSpec::Perturbation { entries, .. } => {
                for e in entries {
                    let v = eval_terms(&e.terms, x);
                    if e.row == e.col {
                        out[e.row * n + e.row] += C64::new(v.re, 0.0);
                    } else {
                        out[e.row * n + e.col] += v;
                        out[e.col * n + e.row] += v.conj();
                    }
                }
            }
            MetricSpec::KahlerPotential { psi, .. } => {
                let pi2 = std::f64::consts::PI.powi(2);
                for t in psi {
                    let c = t.amp * t.angle(x).cos() * pi2;
                    for j in 0..n {
                        let aj = C64::new(t.wave[2 * j + 1] as f64, t.wave[2 * j] as f64);
                        for k in 0..n {
                            let ak = C64::new(-(t.wave[2 * k + 1] as f64), t.wave[2 * k] as f64);
                            out[j * n + k] += aj * ak * c;
                        }
                    }
                }
            }
        }
        for j in 0..n {
            out[j * n + j] += C64::new(1.0, 0.0);
        }
        out.iter_mut().for_each(|v| *v *= s);
    }
}

/// Best constants with `λ_min ω_flat ≤ ω ≤ λ_max ω_flat` on the grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEquivalence {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub argmin: usize,
    pub argmax: usize,
}

/// Eigenvalues (ascending) of a hermitian 2×2 or 3×3 matrix, row-major.
pub fn hermitian_eigenvalues(n: usize, a: &[C64]) -> [f64; 3] {
    match n {
        1 => [a[0].re, a[0].re, a[0].re],
        2 => {
            let (p, q) = (a[0].re, a[3].re);
            let m = 0.5 * (p + q);
            let r = (0.25 * (p - q).powi(2) + a[1].norm_sqr()).sqrt();
            [m - r, m + r, m + r]
        }
        _ => {
            let p1 = a[1].norm_sqr() + a[2].norm_sqr() + a[5].norm_sqr();
            let (d0, d1, d2) = (a[0].re, a[4].re, a[8].re);
            let q = (d0 + d1 + d2) / 3.0;
            let p2 = (d0 - q).powi(2) + (d1 - q).powi(2) + (d2 - q).powi(2) + 2.0 * p1;
            if p2 <= f64::MIN_POSITIVE {
                return [q, q, q];
            }
            let p = (p2 / 6.0).sqrt();
            let b = |i: usize| {
                let v = a[i] / p;
                if i % 4 == 0 {
                    v - q / p
                } else {
                    v
                }
            };
            let det = b(0) * (b(4) * b(8) - b(5) * b(7)) - b(1) * (b(3) * b(8) - b(5) * b(6))
                + b(2) * (b(3) * b(7) - b(4) * b(6));
            let r = (0.5 * det.re).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let hi = q + 2.0 * p * phi.cos();
            let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            let mid = 3.0 * q - hi - lo;
            let mut e = [lo, mid, hi];
            e.sort_by(f64::total_cmp);
            e
        }
    }
}

/// A hermitian metric field with validated positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMetricField {
    grid: PeriodicGrid,
    /// `comps[j*n + k][node] = g_{jk̄}(node)`.
    comps: Vec<Vec<C64>>,
    equivalence: MetricEquivalence,
}

impl HermitianMetricField {
    /// Builds a metric from per-entry node values, checking hermitian symmetry and positivity.
    pub fn from_components(grid: PeriodicGrid, comps: Vec<Vec<C64>>) -> Result<Self> {
        let n = grid.dim();
        if comps.len() != n * n || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch);
        }
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        let mut eq = MetricEquivalence {
            lambda_min: f64::INFINITY,
            lambda_max: f64::NEG_INFINITY,
            argmin: 0,
            argmax: 0,
        };
        for node in 0..grid.len() {
            for (slot, c) in m.iter_mut().zip(&comps) {
                *slot = c[node];
            }
            let scale = m.iter().fold(0.0f64, |s, v| s.max(v.norm()));
            for j in 0..n {
                for k in 0..n {
                    if (m[j * n + k] - m[k * n + j].conj()).norm() > HERMITIAN_TOL * scale.max(1.0)
                    {
                        return Err(Error::SpecParse(format!(
                            "metric is not hermitian at node {node}"
                        )));
                    }
                }
            }
            let e = hermitian_eigenvalues(n, &m);
            if !(e[0] > 0.0) {
                return Err(Error::PositivityViolation {
                    node,
                    min_eigenvalue: e[0],
                });
            }
            if e[0] < eq.lambda_min {
                eq.lambda_min = e[0];
                eq.argmin = node;
            }
            if e[n - 1] > eq.lambda_max {
                eq.lambda_max = e[n - 1];
                eq.argmax = node;
            }
        }
        Ok(Self {
            grid,
            comps,
            equivalence: eq,
        })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn equivalence(&self) -> MetricEquivalence {
        self.equivalence
    }

    /// Node values of `g_{jk̄}`.
    pub fn entry(&self, j: usize, k: usize) -> &[C64] {
        &self.comps[j * self.grid.dim() + k]
    }

    pub fn matrix(&self, node: usize) -> Vec<C64> {
        self.comps.iter().map(|c| c[node]).collect()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.conformal(&vec![c; self.grid.len()])
    }

    /// `f·ω` for a positive real node function `f`.
    pub fn conformal(&self, f: &[f64]) -> Result<Self> {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(f).map(|(v, s)| v * s).collect())
            .collect();
        Self::from_components(self.grid, comps)
    }

    /// `ω` as a real (1,1)-form with components `i·g_{jk̄}`.
    pub fn as_form(&self) -> FormField {
        let n = self.grid.dim();
        let mut form = FormField::zero(self.grid, 1, 1);
        for j in 0..n {
            for k in 0..n {
                let dst = form.component_mut(1 << j, 1 << k).expect("(1,1) component");
                for (d, v) in dst.iter_mut().zip(self.entry(j, k)) {
                    *d = C64::new(0.0, 1.0) * v;
                }
            }
        }
        form.set_claims_real(true);
        form
    }

    /// Pointwise determinant of `g`.
    pub fn determinant(&self) -> ScalarField {
        let n = self.grid.dim();
        let values = (0..self.grid.len())
            .map(|node| {
                let g = |j: usize, k: usize| self.comps[j * n + k][node];
                let d = if n == 2 {
                    g(0, 0) * g(1, 1) - g(0, 1) * g(1, 0)
                } else {
                    g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
                        - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
                        + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0))
                };
                C64::new(d.re, 0.0)
            })
            .collect();
        ScalarField::new(self.grid, values, true).expect("determinant is finite")
    }
}

/// Samples `spec` on `grid`, validates it at the nodes and on the 2× refined grid.
pub fn build_metric(grid: PeriodicGrid, spec: &MetricSpec) -> Result<HermitianMetricField> {
    spec.check(&grid)?;
    let n = grid.dim();
    let fine = grid.refined();
    let mut x = vec![0.0; fine.real_dim()];
    let mut m = vec![C64::new(0.0, 0.0); n * n];
    match spec {
        MetricSpec::Flat { .. } => {}
        MetricSpec::Conformal { .. } => {} // e^φ > 0 everywhere
        _ => {
            for node in 0..fine.len() {
                fine.point(node, &mut x);
                spec.matrix_at(n, &x, &mut m);
                let e = hermitian_eigenvalues(n, &m);
                if !(e[0] > 0.0) {
                    return Err(Error::PositivityViolation {
                        node: coarse_node(&fine, node).unwrap_or(node),
                        min_eigenvalue: e[0],
                    });
                }
            }
        }
    }
    let mut comps = vec![vec![C64::new(0.0, 0.0); grid.len()]; n * n];
    for node in 0..grid.len() {
        grid.point(node, &mut x);
        spec.matrix_at(n, &x, &mut m);
        for (c, v) in comps.iter_mut().zip(&m) {
            c[node] = *v;
        }
    }
    HermitianMetricField::from_components(grid, comps)
}

/// Index on the coarse grid if the refined node coincides with a coarse node.
fn coarse_node(fine: &PeriodicGrid, node: usize) -> Option<usize> {
    let coarse = fine.size() / 2;
    let mut idx = 0;
    for axis in 0..fine.real_dim() {
        let i = fine.axis_index(node, axis);
        if i % 2 != 0 {
            return None;
        }
        idx = idx * coarse + i / 2;
    }
    Some(idx)
}
