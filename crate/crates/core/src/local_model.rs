//! Local smoothing model `{f = t} ∩ B(0, R) ⊂ C^{n+1}` with the euclidean Kähler form.
//!
//! The A₁ fiber `z₁² + … + z_{n+1}² = t` is a two-sheeted graph `z_{n+1} = ±q^{1/2}`,
//! `q = t − Σ_{j≤n} w_j²`, over the ball in `C^n`. On either sheet the induced volume is
//! `(1 + |w|²/|q|)` times the base volume, and `ω^n = 2^n n!` times the riemannian volume.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::C64;
use crate::metric::MetricEquivalence;
use crate::quadrature::integrate;

/// Default ratio between the excluded branch tube and the ambient radius.
pub const EXCLUSION_RATIO: f64 = 1e-2;
/// Monte Carlo samples per RNG stream.
pub const BATCH: usize = 16_384;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polynomial {
    /// `z₁² + … + z_{n+1}²`.
    A1,
    /// `z_{n+1}`, a smooth family used as a closed-form check.
    Linear,
    /// `z₁z₂ − z₃z₄` with `n = 3`.
    Odp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    /// Fiber dimension.
    pub n: usize,
    pub polynomial: Polynomial,
    pub radius: f64,
    /// Radius of the excluded tube `|z_{n+1}| < r_ex` around the branch locus.
    pub exclusion_radius: f64,
}

/// `π^k / k!`, the volume of the unit ball in `R^{2k}`.
fn ball_volume(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, j| acc * PI / j as f64)
}

fn top_power_factor(n: usize) -> f64 {
    (1..=n).fold(2f64.powi(n as i32), |acc, j| acc * j as f64)
}

impl LocalModel {
    pub fn a1(n: usize) -> Self {
        Self {
            n,
            polynomial: Polynomial::A1,
            radius: 1.0,
            exclusion_radius: EXCLUSION_RATIO,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 || !(self.radius > 0.0) || !(self.exclusion_radius >= 0.0) {
            return Err(Error::InvalidInputs(format!("bad local model {self:?}")));
        }
        if self.polynomial == Polynomial::Odp && self.n != 3 {
            return Err(Error::InvalidInputs("the ODP model z1 z2 - z3 z4 needs n = 3".into()));
        }
        Ok(())
    }

    /// Reduces the ODP model to A₁: a unitary change of coordinates maps `z₁z₂ − z₃z₄ = t`
    /// onto `Σ z_j² = 2t`.
    fn a1_parameter(&self, t: C64) -> C64 {
        match self.polynomial {
            Polynomial::Odp => 2.0 * t,
            _ => t,
        }
    }

    /// Closed-form `∫_{X_0 ∩ B} ω^n` (A₁ and ODP) or `∫_{X_t ∩ B} ω^n` (linear).
    pub fn exact_volume(&self, t: C64) -> f64 {
        let n = self.n;
        let r2 = self.radius * self.radius;
        match self.polynomial {
            Polynomial::Linear => top_power_factor(n) * ball_volume(n) * (r2 - t.norm_sqr()).max(0.0).powi(n as i32),
            _ => top_power_factor(n) * 2.0 * ball_volume(n) * r2.powi(n as i32),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FiberVolume {
    pub t_re: f64,
    pub t_im: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// Upper bound for the volume inside the excluded tube.
    pub excluded_bound: f64,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl Moments {
    fn merge(self, o: Self) -> Self {
        Self {
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
            count: self.count + o.count,
        }
    }
}

/// Integrand over the base ball for the A₁ fiber, both sheets.
fn a1_density(n: usize, t: C64, r2: f64, ex2: f64, w: &[f64]) -> f64 {
    let mut sum_sq = C64::new(0.0, 0.0);
    let mut norm2 = 0.0;
    for j in 0..n {
        let z = C64::new(w[2 * j], w[2 * j + 1]);
        sum_sq += z * z;
        norm2 += z.norm_sqr();
    }
    let q = (t - sum_sq).norm();
    if norm2 + q > r2 || q < ex2 || q == 0.0 {
        return 0.0;
    }
    2.0 * top_power_factor(n) * (1.0 + norm2 / q)
}

fn linear_density(n: usize, t: C64, r2: f64, w: &[f64]) -> f64 {
    let norm2: f64 = w.iter().map(|x| x * x).sum();
    if norm2 + t.norm_sqr() > r2 {
        0.0
    } else {
        top_power_factor(n)
    }
}

/// Volume of the excluded tube, bounded slice by slice in `c = z_{n+1}`.
pub fn exclusion_bound(model: &LocalModel, t: C64) -> Result<f64> {
    let n = model.n;
    let r_ex = model.exclusion_radius;
    if model.polynomial == Polynomial::Linear || r_ex == 0.0 {
        return Ok(0.0);
    }
    let t = model.a1_parameter(t);
    let r2 = model.radius * model.radius;
    let k = n - 1;
    let transverse = 2.0 * ball_volume(k) * r2.powi(k as i32);
    let slice = |c: C64| -> f64 {
        if n == 2 {
            let m = (t - c * c).norm();
            if m > r2 {
                0.0
            } else if m == 0.0 {
                f64::INFINITY
            } else {
                2.0 * PI * (1.0 + (r2 / m).ln())
            }
        } else {
            2.0 * ball_volume(k) * r2.powi(k as i32 - 1) * k as f64 / (k as f64 - 1.0)
        }
    };
    let radial = |rho: f64| -> f64 {
        if rho == 0.0 {
            return 0.0;
        }
        let ang = integrate(
            |phi| {
                let c = C64::from_polar(rho, phi);
                let s = slice(c);
                if s.is_finite() { transverse + rho * rho * s } else { 0.0 }
            },
            0.0,
            2.0 * PI,
            1e-8,
            1e-300,
        )
        .map(|q| q.value)
        .unwrap_or(f64::NAN);
        rho * ang
    };
    let q = integrate(radial, 0.0, r_ex, 1e-8, 1e-300)?;
    if !q.value.is_finite() {
        return Err(Error::QuadratureFail(f64::INFINITY));
    }
    Ok(top_power_factor(n) * q.value)
}

/// Monte Carlo volume of `X_t ∩ B` with antithetic radii.
///
/// Batch `b` draws from the ChaCha8 stream `b` of `seed`, so the result does not depend on the
/// number of threads.
pub fn fiber_volume(model: &LocalModel, t: C64, samples: usize, seed: u64) -> Result<FiberVolume> {
    model.validate()?;
    if samples < 10_000 {
        return Err(Error::InvalidInputs(format!("need at least 10^4 samples, got {samples}")));
    }
    let n = model.n;
    let d = 2 * n;
    let r2 = model.radius * model.radius;
    let ex2 = model.exclusion_radius * model.exclusion_radius;
    let ta = model.a1_parameter(t);
    let density = |w: &[f64]| match model.polynomial {
        Polynomial::Linear => linear_density(n, t, r2, w),
        _ => a1_density(n, ta, r2, ex2, w),
    };
    let pairs = samples.div_ceil(2);
    let batches = pairs.div_ceil(BATCH / 2);
    let moments = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let todo = (pairs - b * (BATCH / 2)).min(BATCH / 2);
            let mut dir = vec![0.0; d];
            let mut w = vec![0.0; d];
            let mut m = Moments::default();
            for _ in 0..todo {
                let mut norm = 0.0f64;
                for x in dir.iter_mut() {
                    *x = rng.sample::<f64, _>(StandardNormal);
                    norm += *x * *x;
                }
                let norm = norm.sqrt();
                let u: f64 = rng.random();
                let mut eval = |u: f64| {
                    let rad = model.radius * u.powf(1.0 / d as f64) / norm;
                    w.iter_mut().zip(&dir).for_each(|(wi, di)| *wi = rad * di);
                    density(&w)
                };
                let g = 0.5 * (eval(u) + eval(1.0 - u));
                m.sum += g;
                m.sum_sq += g * g;
                m.count += 1;
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let count = moments.count as f64;
    let mean = moments.sum / count;
    let var = (moments.sum_sq / count - mean * mean).max(0.0) * count / (count - 1.0);
    let base = ball_volume(n) * r2.powi(n as i32);
    let estimate = base * mean;
    let std_error = base * (var / count).sqrt();
    let excluded_bound = exclusion_bound(model, t)?;
    if excluded_bound > 0.1 * estimate {
        return Err(Error::BranchDominates {
            bound: excluded_bound,
            estimate,
        });
    }
    Ok(FiberVolume {
        t_re: t.re,
        t_im: t.im,
        estimate,
        std_error,
        excluded_bound,
        samples: 2 * moments.count,
        seed,
    })
}

/// Sampled quasi-isometry constant between `g_0` and `g_t` on an annulus.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuasiIsometry {
    pub constant: f64,
    /// Extreme eigenvalues of `ψ_t^* g_t` relative to `g_0`; `argmin`/`argmax` index sample points.
    pub equivalence: MetricEquivalence,
    pub points: usize,
}

/// Orthonormal complex basis of `{v : Σ z_j v_j = 0}`.
fn tangent_basis(z: &[C64]) -> Vec<Vec<C64>> {
    let m = z.len();
    let normal: Vec<C64> = {
        let nz = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        z.iter().map(|c| c.conj() / nz).collect()
    };
    let mut basis: Vec<Vec<C64>> = vec![normal];
    for e in 0..m {
        let mut v: Vec<C64> = (0..m).map(|j| if j == e { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).collect();
        for b in &basis {
            let proj: C64 = b.iter().zip(&v).map(|(bj, vj)| bj.conj() * vj).sum();
            v.iter_mut().zip(b).for_each(|(vj, bj)| *vj -= proj * bj);
        }
        let nv = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if nv > 1e-8 {
            v.iter_mut().for_each(|c| *c /= nv);
            basis.push(v);
        }
        if basis.len() == m {
            break;
        }
    }
    basis.remove(0);
    basis
}

/// Differential of `ψ_s(x, y) = (x·(1 + s/|y|²)^{1/2}, y)`, `s ≥ 0`, applied to `v`.
fn psi_differential(s: f64, z: &[C64], v: &[C64]) -> Vec<C64> {
    let y2: f64 = z.iter().map(|c| c.im * c.im).sum();
    let y_dot: f64 = z.iter().zip(v).map(|(c, w)| c.im * w.im).sum();
    let a = (1.0 + s / y2).sqrt();
    let da = -s * y_dot / (a * y2 * y2);
    z.iter()
        .zip(v)
        .map(|(c, w)| C64::new(w.re * a + c.re * da, w.im))
        .collect()
}

/// Compares `g_t` with `g_0` through `ψ_t: X_0 → X_t`, `ψ_t(z) = e^{iθ/2}ψ_{|t|}(e^{−iθ/2}z)`.
///
/// At `|t| = 0` the identification is the identity and the constant is exactly 1.
pub fn quasi_isometry_constants(
    model: &LocalModel,
    t: C64,
    r_in: f64,
    r_out: f64,
    points: usize,
    seed: u64,
) -> Result<QuasiIsometry> {
    model.validate()?;
    if points < 2 {
        return Err(Error::InvalidInputs("need at least two sample points".into()));
    }
    let s = model.a1_parameter(t).norm();
    if !(r_in > 2.0 * s.sqrt() && r_in < r_out && r_out <= model.radius) {
        return Err(Error::RegionInvalid(format!(
            "need 2|t|^(1/2) < r_in < r_out <= R; got r_in = {r_in}, r_out = {r_out}, |t| = {s}, R = {}",
            model.radius
        )));
    }
    let m = model.n + 1;
    if model.polynomial == Polynomial::Linear || s == 0.0 {
        return Ok(QuasiIsometry {
            constant: 1.0,
            equivalence: MetricEquivalence { lambda_min: 1.0, lambda_max: 1.0, argmin: 0, argmax: 0 },
            points,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eq = MetricEquivalence {
        lambda_min: f64::INFINITY,
        lambda_max: 0.0,
        argmin: 0,
        argmax: 0,
    };
    for k in 0..points {
        // Radii on a fixed grid including both ends; directions seeded.
        let r = r_in + (r_out - r_in) * k as f64 / (points - 1) as f64;
        let mut x: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let mut y: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        y.iter_mut().zip(&x).for_each(|(b, a)| *b -= xy * a);
        let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        y.iter_mut().for_each(|v| *v /= ny);
        let h = r / 2f64.sqrt();
        let z: Vec<C64> = x.iter().zip(&y).map(|(a, b)| C64::new(h * a, h * b)).collect();
        let basis = tangent_basis(&z);
        let real_basis: Vec<Vec<C64>> = basis
            .iter()
            .flat_map(|u| [u.clone(), u.iter().map(|c| c * C64::i()).collect()])
            .collect();
        let images: Vec<Vec<C64>> = real_basis.iter().map(|v| psi_differential(s, &z, v)).collect();
        let dim = images.len();
        let gram = DMatrix::from_fn(dim, dim, |i, j| {
            images[i].iter().zip(&images[j]).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
        });
        let ev = gram.symmetric_eigen().eigenvalues;
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        if lo < eq.lambda_min {
            eq.lambda_min = lo;
            eq.argmin = k;
        }
        if hi > eq.lambda_max {
            eq.lambda_max = hi;
            eq.argmax = k;
        }
    }
    Ok(QuasiIsometry {
        constant: eq.lambda_max.max(1.0 / eq.lambda_min),
        equivalence: eq,
        points,
    })
}
