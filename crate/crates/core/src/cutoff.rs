//! Log-log cutoff families on punctured balls and the integrals built from them.
//!
//! `χ_ε(z) = θ(s)`, `s = (L(|z|) − L(r₀)) / (L(ε) − L(r₀))`, `L(r) = log log(1/r)`, with
//! `θ(s) = 1 − (6s⁵ − 15s⁴ + 10s³)` on `[0, 1]`. All integrals are radial: for a function
//! `g` on `C^n` with spherical mean `ḡ`, `∫ g ω^n = K_n ∫ ḡ(r) r^{2n−1} dr` with
//! `K_n = λ·2^{n+1} n π^n` (`λ = 1` on `C^n`, `λ = 2` for the regular part of the A₁ cone).
//! On radial functions `Δ_ω = ¼(∂_r² + (2n−1)/r ∂_r)` and `|dχ|²_ω = ¼χ'²`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate;

/// Relative tolerance for every radial integral.
pub const QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadialModel {
    /// Punctured ball in `C^n` with the euclidean Kähler form.
    Flat,
    /// Regular part of `{z₁² + … + z_{n+1}² = 0}`, a cone whose link has twice the sphere volume.
    A1Cone,
}

/// How the outer transition radius depends on `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterRadius {
    /// `r₀` fixed.
    Fixed,
    /// `r₀(ε) = min(r₀, ε^exponent)` with `0 < exponent < 1`, so the transition shell shrinks to 0.
    Shrinking { exponent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    /// Complex dimension (1 is allowed as a control case).
    pub n: usize,
    pub model: RadialModel,
    pub r0: f64,
    /// Radius of the ambient ball.
    pub radius: f64,
    pub outer: OuterRadius,
}

impl CutoffFamily {
    pub fn flat(n: usize, r0: f64) -> Self {
        Self {
            n,
            model: RadialModel::Flat,
            r0,
            radius: 1.0,
            outer: OuterRadius::Fixed,
        }
    }

    /// `K_n`.
    pub fn measure_constant(&self) -> f64 {
        let link = match self.model {
            RadialModel::Flat => 1.0,
            RadialModel::A1Cone => 2.0,
        };
        link * 2f64.powi(self.n as i32 + 1) * self.n as f64 * PI.powi(self.n as i32)
    }

    fn outer_radius(&self, eps: f64) -> f64 {
        match self.outer {
            OuterRadius::Fixed => self.r0,
            OuterRadius::Shrinking { exponent } => self.r0.min(eps.powf(exponent)),
        }
    }
}

/// `L(r) = log log(1/r)`.
pub fn loglog(r: f64) -> f64 {
    (1.0 / r).ln().ln()
}

/// The quintic profile and its first two derivatives.
pub fn theta(s: f64) -> (f64, f64, f64) {
    if s <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let v = 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
        let d1 = -30.0 * s * s * (s - 1.0) * (s - 1.0);
        let d2 = -60.0 * s * (s - 1.0) * (2.0 * s - 1.0);
        (v, d1, d2)
    }
}

/// One member `χ_ε` of a cutoff family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub eps: f64,
    pub r0: f64,
    pub n: usize,
    l0: f64,
    span: f64,
    trivial: bool,
}

/// Values of `χ`, `χ'`, `χ''` at a radius.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Cutoff {
    /// The constant cutoff `χ ≡ 1`.
    pub fn trivial(n: usize) -> Self {
        Self {
            eps: 0.0,
            r0: 0.0,
            n,
            l0: 0.0,
            span: 1.0,
            trivial: true,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    /// `L(ε) − L(r₀)`.
    pub fn span(&self) -> f64 {
        self.span
    }

    fn s_of(&self, r: f64) -> f64 {
        (loglog(r) - self.l0) / self.span
    }

    /// Radius at parameter `s ∈ [0,1]`.
    pub fn radius_at(&self, s: f64) -> f64 {
        (-(self.l0 + s * self.span).exp()).exp()
    }

    pub fn jet(&self, r: f64) -> Jet {
        if self.trivial || r >= self.r0 {
            return Jet { value: 1.0, d1: 0.0, d2: 0.0 };
        }
        if r <= self.eps {
            return Jet { value: 0.0, d1: 0.0, d2: 0.0 };
        }
        let ell = (1.0 / r).ln();
        let l1 = -1.0 / (r * ell);
        let l2 = (ell - 1.0) / (r * r * ell * ell);
        let (v, t1, t2) = theta(self.s_of(r));
        Jet {
            value: v,
            d1: t1 * l1 / self.span,
            d2: t2 * (l1 / self.span).powi(2) + t1 * l2 / self.span,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        self.jet(r).value
    }

    /// `χ'' + (2n−1)χ'/r`, the euclidean radial Laplacian.
    pub fn radial_laplacian(&self, r: f64) -> f64 {
        let j = self.jet(r);
        j.d2 + (2.0 * self.n as f64 - 1.0) * j.d1 / r
    }

    /// `∫_ε^{r₀} g(r) dr` through the substitution `r = r(s)`.
    pub fn transition_integral(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        if self.trivial {
            return Ok(0.0);
        }
        let q = integrate(
            |s| {
                let ell = (self.l0 + s * self.span).exp();
                let r = (-ell).exp();
                g(r) * self.span * r * ell
            },
            0.0,
            1.0,
            QUAD_TOL,
            1e-300,
        )?;
        Ok(q.value)
    }
}

/// Builds `χ_ε` for a family.
pub fn build_cutoff(family: &CutoffFamily, eps: f64) -> Result<Cutoff> {
    let r0 = family.outer_radius(eps);
    if !(eps > 0.0 && eps < r0 && r0 < family.radius && r0 < 1.0) {
        return Err(Error::BadRadii(format!(
            "need 0 < ε < r₀ < min(R, 1); got ε = {eps}, r₀ = {r0}, R = {}",
            family.radius
        )));
    }
    if let OuterRadius::Shrinking { exponent } = family.outer {
        if !(exponent > 0.0 && exponent < 1.0) {
            return Err(Error::BadRadii(format!("shrinking exponent {exponent} outside (0, 1)")));
        }
    }
    let l0 = loglog(r0);
    let span = loglog(eps) - l0;
    if !(span > 0.0) {
        return Err(Error::BadRadii("L(ε) must exceed L(r₀)".into()));
    }
    Ok(Cutoff {
        eps,
        r0,
        n: family.n,
        l0,
        span,
        trivial: false,
    })
}

fn rpow(r: f64, n: usize) -> f64 {
    r.powi(2 * n as i32 - 1)
}

/// `∫ dχ_ε ∧ d^cχ_ε ∧ ω^{n−1} = (K_n/4n) ∫ χ'² r^{2n−1} dr`.
pub fn gradient_energy(family: &CutoffFamily, chi: &Cutoff) -> Result<f64> {
    let n = family.n;
    let k = family.measure_constant() / (4.0 * n as f64);
    Ok(k * chi.transition_integral(|r| chi.jet(r).d1.powi(2) * rpow(r, n))?)
}

/// `∫ |dd^cχ_ε ∧ ω^{n−1}| = (K_n/4n) ∫ |χ'' + (2n−1)χ'/r| r^{2n−1} dr`.
pub fn ddc_mass(family: &CutoffFamily, chi: &Cutoff) -> Result<f64> {
    let n = family.n;
    let k = family.measure_constant() / (4.0 * n as f64);
    Ok(k * chi.transition_integral(|r| chi.radial_laplacian(r).abs() * rpow(r, n))?)
}

/// Test functions given through their spherical means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { c: f64 },
    /// `|z|²`.
    NormSquared,
    /// `Re(z₁²)·b(|z|)` with `b(r) = exp(−1/(1 − (r/a)²))` supported in `r < a`.
    HarmonicBump { a: f64 },
    /// `exp(−|z|²/σ²)`.
    Gaussian { sigma: f64 },
}

/// Spherical means at radius `r` in `C^n`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SphericalMeans {
    pub f: f64,
    /// Mean of `∂_r f`.
    pub dr: f64,
    /// Mean of `Δ_ω f = ¼Δ f`.
    pub lap: f64,
    /// Mean of `|df|²_ω = ¼|∇f|²`.
    pub grad_sq: f64,
    /// Mean of `f²`.
    pub f_sq: f64,
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Constant { c } => format!("constant({c})"),
            TestFunction::NormSquared => "norm_squared".into(),
            TestFunction::HarmonicBump { a } => format!("harmonic_bump({a})"),
            TestFunction::Gaussian { sigma } => format!("gaussian({sigma})"),
        }
    }

    pub fn means(&self, n: usize, r: f64) -> SphericalMeans {
        let nf = n as f64;
        match *self {
            TestFunction::Constant { c } => SphericalMeans {
                f: c,
                f_sq: c * c,
                ..Default::default()
            },
            TestFunction::NormSquared => SphericalMeans {
                f: r * r,
                dr: 2.0 * r,
                lap: nf,
                grad_sq: r * r,
                f_sq: r.powi(4),
            },
            TestFunction::HarmonicBump { a } => {
                if r >= a {
                    return SphericalMeans::default();
                }
                let u = (r / a).powi(2);
                let b = (-1.0 / (1.0 - u)).exp();
                let db = -b * 2.0 * r / (a * a * (1.0 - u).powi(2));
                let d = 2.0 * nf;
                let h_sq = 4.0 * r.powi(4) / (d * (d + 2.0));
                let grad_h_sq = 4.0 * r * r / nf;
                let cross = if r > 0.0 { 4.0 * b * db * h_sq / r } else { 0.0 };
                SphericalMeans {
                    grad_sq: 0.25 * (b * b * grad_h_sq + cross + db * db * h_sq),
                    f_sq: b * b * h_sq,
                    ..Default::default()
                }
            }
            TestFunction::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                let f = (-r * r / s2).exp();
                let d1 = -2.0 * r / s2 * f;
                let d2 = (-2.0 / s2 + 4.0 * r * r / (s2 * s2)) * f;
                SphericalMeans {
                    f,
                    dr: d1,
                    lap: 0.25 * (d2 + (2.0 * nf - 1.0) * d1 / r.max(f64::MIN_POSITIVE)),
                    grad_sq: 0.25 * d1 * d1,
                    f_sq: f * f,
                }
            }
        }
    }
}

/// One row of the extension term table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TermRow {
    pub eps: f64,
    pub r0: f64,
    pub i: f64,
    pub ii: f64,
    pub iii: f64,
    pub iv: f64,
    pub v: f64,
    pub vi: f64,
    pub energy: f64,
    pub ddc_mass: f64,
    /// `∫_{∂B} d^c f ∧ ω^{n−1}`, zero for compactly supported `f`.
    pub boundary: f64,
    /// `boundary − III − 2·IV + II`.
    pub pairing: f64,
    pub unpunctured: f64,
    /// `|I − (boundary − III − 2·IV)|`.
    pub stokes_defect: f64,
}

/// Integrates `g` over `[0, R]` split at `ε` and `r₀`, using the transition substitution inside.
fn split_integral(
    chi: &Cutoff,
    radius: f64,
    g: impl Fn(f64) -> f64 + Copy,
) -> Result<f64> {
    let inner = integrate(g, 0.0, chi.eps, QUAD_TOL, 1e-300)?.value;
    let mid = chi.transition_integral(g)?;
    let outer = integrate(g, chi.r0, radius, QUAD_TOL, 1e-300)?.value;
    Ok(inner + mid + outer)
}

/// Terms I–VI of the extension argument for one test function and one `ε`.
pub fn extension_terms(family: &CutoffFamily, f: &TestFunction, eps: f64) -> Result<TermRow> {
    let chi = build_cutoff(family, eps)?;
    let n = family.n;
    let kn = family.measure_constant() / n as f64;
    let big_r = family.radius;
    let m = |r: f64| f.means(n, r);
    let w = |r: f64| rpow(r, n);
    let i = kn * split_integral(&chi, big_r, |r| chi.value(r) * m(r).lap * w(r))?;
    let ii = kn * split_integral(&chi, big_r, |r| (1.0 - chi.value(r)) * m(r).lap * w(r))?;
    let iii = kn * chi.transition_integral(|r| m(r).f * 0.25 * chi.radial_laplacian(r) * w(r))?;
    let iv = kn * chi.transition_integral(|r| 0.25 * chi.jet(r).d1 * m(r).dr * w(r))?;
    let v = kn * chi.transition_integral(|r| m(r).grad_sq * w(r))?;
    let energy = gradient_energy(family, &chi)?;
    let mass = ddc_mass(family, &chi)?;
    let unpunctured = kn * integrate(|r| m(r).lap * w(r), 0.0, big_r, QUAD_TOL, 1e-300)?.value;
    let boundary = kn * 0.25 * w(big_r) * m(big_r).dr;
    let via_stokes = boundary - iii - 2.0 * iv;
    Ok(TermRow {
        eps,
        r0: chi.r0,
        i,
        ii,
        iii,
        iv,
        v,
        vi: energy,
        energy,
        ddc_mass: mass,
        boundary,
        pairing: via_stokes + ii,
        unpunctured,
        stokes_defect: (i - via_stokes).abs(),
    })
}

/// The term table over an `ε` grid.
pub fn extension_pairing_experiment(
    family: &CutoffFamily,
    f: &TestFunction,
    eps_grid: &[f64],
) -> Result<Vec<TermRow>> {
    eps_grid.iter().map(|&e| extension_terms(family, f, e)).collect()
}

/// Both sides of `∫χ dρ∧d^cρ∧ω^{n−1} = ½∫ρ² dd^cχ∧ω^{n−1}` for a radial factor.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniquenessRow {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub ddc_mass: f64,
}

/// Gauduchon-factor candidates on the flat model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialFactor {
    Constant { c: f64 },
    /// `1 + |z|²`, not a ratio of Gauduchon factors; the identity must fail.
    OnePlusNormSquared,
}

impl RadialFactor {
    fn means(&self, r: f64) -> (f64, f64) {
        // (mean of ρ², mean of |dρ|²_ω)
        match *self {
            RadialFactor::Constant { c } => (c * c, 0.0),
            RadialFactor::OnePlusNormSquared => ((1.0 + r * r).powi(2), r * r),
        }
    }
}

pub fn uniqueness_identity_experiment(
    family: &CutoffFamily,
    rho: &RadialFactor,
    eps_grid: &[f64],
) -> Result<Vec<UniquenessRow>> {
    let n = family.n;
    let kn = family.measure_constant() / n as f64;
    eps_grid
        .iter()
        .map(|&eps| {
            let chi = build_cutoff(family, eps)?;
            let w = |r: f64| rpow(r, n);
            let lhs = kn * split_integral(&chi, family.radius, |r| chi.value(r) * rho.means(r).1 * w(r))?;
            let rhs = 0.5
                * kn
                * chi.transition_integral(|r| rho.means(r).0 * 0.25 * chi.radial_laplacian(r) * w(r))?;
            Ok(UniquenessRow {
                eps,
                lhs,
                rhs,
                gap: (lhs - rhs).abs(),
                ddc_mass: ddc_mass(family, &chi)?,
            })
        })
        .collect()
}

/// `ε = 10^{-2}, 10^{-4}, …, 10^{-2k}`.
pub fn decade_grid(k: usize) -> Vec<f64> {
    (1..=k).map(|j| 10f64.powi(-2 * j as i32)).collect()
}
