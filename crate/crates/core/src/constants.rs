//! Geometric constants `B, V, C_S, C_P` and the explicit bound `C_G` on `sup ρ`.
//!
//! The derivation of every stage of `C_G` is written out in `docs/constant-ledger.md`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{ddc, metric_power, top_piece, top_ratio};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::PeriodicGrid;
use crate::lobpcg::{lobpcg, LobpcgOptions};
use crate::metric::{build_metric, HermitianMetricField, MetricSpec};
use crate::solver::{AdjointOperator, GauduchonSolution};
use crate::spectral::CalculusContext;

/// Safety factor applied to the empirical flat Sobolev quotient.
pub const SOBOLEV_SAFETY: f64 = 2.0;

/// `B = max |dd^c ω^{n−1} / ω^n|`.
pub fn compute_b(ctx: &CalculusContext, omega: &HermitianMetricField) -> Result<f64> {
    let n = ctx.grid().dim();
    let psi = metric_power(omega, n - 1)?;
    let num = top_piece(&ddc(ctx, &psi.into())?);
    let den = metric_power(omega, n)?;
    Ok(top_ratio(&num, &den)?
        .iter()
        .fold(0.0, |m, v| m.max(v.norm())))
}

/// `V = ∫ ω^n`.
pub fn compute_volume(omega: &HermitianMetricField) -> Result<f64> {
    crate::calculus::integrate(&metric_power(omega, omega.grid().dim())?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoincareEstimate {
    pub c_p: f64,
    pub lambda1: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// `C_P = 1/λ₁` for the first nonzero eigenvalue of `|d·|²_ω` against `L²(ω^n)`.
pub fn estimate_poincare(
    ctx: &CalculusContext,
    omega: &HermitianMetricField,
    seed: u64,
) -> Result<PoincareEstimate> {
    let op = AdjointOperator::new(ctx, omega)?;
    let w = op.weight().to_vec();
    let len = w.len();
    let ones = vec![1.0; len];
    let vol = op.inner(&ones, &ones);
    let project = |x: &mut [f64]| {
        let mut s: Vec<crate::C64> = x.iter().map(|&v| crate::C64::new(v, 0.0)).collect();
        ctx.band_limit(&mut s);
        let c = s.iter().zip(&w).map(|(a, b)| a.re * b).sum::<f64>() / len as f64 / vol;
        for (a, b) in x.iter_mut().zip(&s) {
            *a = b.re - c;
        }
    };
    let pi2 = std::f64::consts::PI.powi(2);
    let precond = |x: &[f64]| {
        let mut s: Vec<crate::C64> = x.iter().map(|&v| crate::C64::new(v, 0.0)).collect();
        ctx.forward(&mut s);
        for (k, v) in s.iter_mut().enumerate() {
            *v /= (-ctx.flat_laplacian_symbol(k)).max(pi2);
        }
        ctx.inverse(&mut s);
        s.iter().map(|v| v.re).collect::<Vec<f64>>()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // The flat `λ₁ = π²` has multiplicity `4n` (`k = ±e_a`); a block covering the
    // whole cluster converges in a few dozen iterations where a small one stalls.
    let block = 4 * ctx.grid().dim() + 1;
    let x0: Vec<Vec<f64>> = (0..block)
        .map(|_| precond(&(0..len).map(|_| rng.random::<f64>() - 0.5).collect::<Vec<_>>()))
        .collect();
    let res = lobpcg(
        |x| op.gradient_form(x),
        &w,
        precond,
        project,
        x0,
        LobpcgOptions {
            max_iter: 300,
            tol: 1e-9,
        },
    )?;
    if !res.converged {
        return Err(Error::NoConvergence(res.iterations));
    }
    Ok(PoincareEstimate {
        c_p: 1.0 / res.values[0],
        lambda1: res.values[0],
        iterations: res.iterations,
        residual: res.residual,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SobolevEstimate {
    pub c_s: f64,
    /// `SOBOLEV_SAFETY` times the largest sampled flat quotient.
    pub c_s_flat: f64,
    pub quotient_max: f64,
    pub k_factor: f64,
    pub trials: usize,
    pub certified: bool,
}

/// `K = λ_max^{n−1} max(λ_max, 1) λ_min^{−n}`.
pub fn sobolev_comparison_factor(n: usize, lambda_min: f64, lambda_max: f64) -> f64 {
    lambda_max.powi(n as i32 - 1) * lambda_max.max(1.0) * lambda_min.powi(-(n as i32))
}

/// Sobolev quotient `‖f‖²_{L^{2β}} / (∫|df|² + ∫f²)` for a single function.
pub fn sobolev_quotient(op: &AdjointOperator, n: usize, f: &[f64]) -> f64 {
    let beta = n as f64 / (n as f64 - 1.0);
    let ones = vec![1.0; f.len()];
    let pow: Vec<f64> = f.iter().map(|x| x.abs().powf(2.0 * beta)).collect();
    let num = op.inner(&pow, &ones).powf(1.0 / beta);
    let den = op.inner(&op.grad_norm_sq(f), &ones) + op.inner(f, f);
    num / den
}

/// Maximizes the flat Sobolev quotient over a seeded trial family.
pub fn flat_sobolev_quotient(n: usize, seed: u64) -> Result<(f64, usize)> {
    let size = if n == 2 { 16 } else { 8 };
    let grid = PeriodicGrid::new(n, size)?;
    let ctx = CalculusContext::new(grid);
    let flat = build_metric(grid, &MetricSpec::flat())?;
    let op = AdjointOperator::new(&ctx, &flat)?;
    let tau = 2.0 * std::f64::consts::PI;
    let d = 2 * n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trials: Vec<Vec<f64>> = vec![vec![1.0; grid.len()]];
    for a in [0.25, 0.5, 1.0, 2.0, 5.0] {
        for axis in [0, 1] {
            trials.push(ScalarField::from_fn(grid, |x| 1.0 + a * (tau * x[axis]).cos()).real_parts());
        }
    }
    let kappa_max = (size * size) as f64 / 32.0;
    for kappa in [0.5, 1.0, 2.0, 4.0, 8.0] {
        if kappa > kappa_max {
            continue;
        }
        for _ in 0..3 {
            let c: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
            trials.push(
                ScalarField::from_fn(grid, |x| {
                    let s: f64 = x.iter().zip(&c).map(|(xi, ci)| (tau * (xi - ci)).cos()).sum();
                    (kappa * (s - d as f64)).exp()
                })
                .real_parts(),
            );
        }
    }
    for _ in 0..12 {
        let offset = rng.random::<f64>() * 2.0;
        let modes: Vec<(Vec<i32>, f64, f64)> = (0..4)
            .map(|_| {
                let k: Vec<i32> = (0..d).map(|_| rng.random_range(-2..=2)).collect();
                (k, rng.random::<f64>() - 0.5, rng.random::<f64>() * tau)
            })
            .collect();
        trials.push(
            ScalarField::from_fn(grid, |x| {
                offset
                    + modes
                        .iter()
                        .map(|(k, a, ph)| {
                            let dot: f64 = k.iter().zip(x).map(|(&ki, xi)| ki as f64 * xi).sum();
                            a * (tau * dot + ph).cos()
                        })
                        .sum::<f64>()
            })
            .real_parts(),
        );
    }
    let best = trials
        .iter()
        .map(|f| sobolev_quotient(&op, n, f))
        .fold(0.0, f64::max);
    Ok((best, trials.len()))
}

/// Upper estimate of `C_S(ω)` via comparison with the flat metric.
pub fn estimate_sobolev(omega: &HermitianMetricField, seed: u64) -> Result<SobolevEstimate> {
    let n = omega.grid().dim();
    let (quotient_max, trials) = flat_sobolev_quotient(n, seed)?;
    let eq = omega.equivalence();
    let k = sobolev_comparison_factor(n, eq.lambda_min, eq.lambda_max);
    let c_s_flat = SOBOLEV_SAFETY * quotient_max;
    Ok(SobolevEstimate {
        c_s: k * c_s_flat,
        c_s_flat,
        quotient_max,
        k_factor: k,
        trials,
        certified: false,
    })
}

/// Inputs of the constant chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ChainInputs {
    pub n: usize,
    pub b: f64,
    pub v: f64,
    pub c_s: f64,
    pub c_p: f64,
}

/// The explicit constant chain bounding `sup ρ`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub n: usize,
    pub b: f64,
    pub v: f64,
    pub c_s: f64,
    pub c_p: f64,
    pub beta: f64,
    pub c1: f64,
    pub delta: f64,
    pub a_vol: f64,
    pub c2: f64,
    /// Prefactor `K` with `sup log ρ ≤ K·max(‖log ρ‖_{L²}, 1)`-type bookkeeping.
    pub moser_prefactor: f64,
    pub c3: f64,
    pub c4: f64,
    pub quad_a: f64,
    pub quad_b: f64,
    pub c5: f64,
    pub log_c_g: f64,
    /// `exp(log_c_g)`; `+inf` when it overflows.
    pub c_g: f64,
    pub c_g_overflow: bool,
    pub c_s_certified: bool,
    pub provenance: BTreeMap<String, String>,
}

/// Evaluates `C_1, δ, A, C_2, C_3, C_4, C_5, C_G` in order.
pub fn assemble_cg(inp: ChainInputs) -> Result<ConstantsReport> {
    let ChainInputs { n, b, v, c_s, c_p } = inp;
    let finite = [b, v, c_s, c_p].iter().all(|x| x.is_finite());
    if n < 2 || !finite || b < 0.0 || v <= 0.0 || c_s <= 0.0 || c_p <= 0.0 {
        return Err(Error::InvalidInputs(format!(
            "need n >= 2, B >= 0 and V, C_S, C_P > 0 (got n={n}, B={b}, V={v}, C_S={c_s}, C_P={c_p})"
        )));
    }
    let nf = n as f64;
    let beta = nf / (nf - 1.0);
    let c1 = (nf * b / 4.0 + 1.0) * c_s;
    let delta = 0.5 * beta.powf(-nf * (nf - 1.0)) * c1.powf(-nf);
    let a_vol = (v / delta).max(1.0);
    let c2 = 2.0 * nf * b * c_s * v.max(1.0);
    let moser_prefactor = 2f64.powf(nf / 2.0) * beta.powf(nf * (nf - 1.0) / 2.0) * c2.powf(nf / 2.0);
    let c3 = (moser_prefactor * moser_prefactor).max(moser_prefactor);
    let c4 = nf * b * c_p;
    let quad_a = v.powf(1.5) / delta * c4.sqrt();
    let quad_b = v * v / delta * a_vol.ln();
    let c5 = (quad_a / 2.0 + (quad_b + quad_a * quad_a / 4.0).sqrt()).powi(2);
    let log_c_g = c3 * c5.max(1.0);
    let c_g = log_c_g.exp();
    let mut provenance = BTreeMap::new();
    let mut note = |k: &str, v: &str| {
        provenance.insert(k.to_string(), v.to_string());
    };
    note("B", "max over nodes of |dd^c ω^{n-1} / ω^n|");
    note("V", "∫ ω^n");
    note("C_S", "empirical flat Sobolev quotient × safety factor × metric comparison factor K; not certified");
    note("C_P", "1/λ₁ of ∫|df|²ω^n / ∫f²ω^n on mean-zero functions");
    note("beta", "n/(n-1)");
    note("C_1", "(nB/4 + 1)·C_S: the L^p gradient estimate before the Sobolev step");
    note("delta", "2δ = β^{-n(n-1)} C_1^{-n}: lower bound for the measure of {ρ ≤ 2}-type sublevel sets");
    note("A", "max(V/δ, 1)");
    note("C_2", "2nB·C_S·max{V,1}: the gradient estimate for log ρ at p = 1");
    note("C_3", "max(K², K) with K = 2^{n/2} β^{n(n-1)/2} C_2^{n/2} the Moser iteration prefactor");
    note("C_4", "nB·C_P: the Poincaré step at p = 1");
    note("C_5", "(a/2 + (b + a²/4)^{1/2})², the root bound of x² ≤ ax + b, a = V^{3/2}δ^{-1}C_4^{1/2}, b = V²δ^{-1} log A");
    note("C_G", "exp(C_3·max{C_5, 1})");
    Ok(ConstantsReport {
        n,
        b,
        v,
        c_s,
        c_p,
        beta,
        c1,
        delta,
        a_vol,
        c2,
        moser_prefactor,
        c3,
        c4,
        quad_a,
        quad_b,
        c5,
        log_c_g,
        c_g,
        c_g_overflow: c_g.is_infinite(),
        c_s_certified: false,
        provenance,
    })
}

/// Measured constants of one metric together with the assembled chain.
#[derive(Debug, Clone, Serialize)]
pub struct MetricConstants {
    pub poincare: PoincareEstimate,
    pub sobolev: SobolevEstimate,
    pub report: ConstantsReport,
}

/// Computes `B, V, C_S, C_P` and assembles the chain.
pub fn metric_constants(
    ctx: &CalculusContext,
    omega: &HermitianMetricField,
    seed: u64,
) -> Result<MetricConstants> {
    let n = ctx.grid().dim();
    let b = compute_b(ctx, omega)?;
    let v = compute_volume(omega)?;
    let poincare = estimate_poincare(ctx, omega, seed)?;
    let sobolev = estimate_sobolev(omega, seed)?;
    let report = assemble_cg(ChainInputs {
        n,
        b,
        v,
        c_s: sobolev.c_s,
        c_p: poincare.c_p,
    })?;
    Ok(MetricConstants {
        poincare,
        sobolev,
        report,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundCheck {
    pub passed: bool,
    pub sup_rho: f64,
    pub log_c_g: f64,
    /// `log C_G − log sup ρ`.
    pub log_looseness: f64,
    /// `C_G / sup ρ`, `+inf` on overflow.
    pub looseness: f64,
}

/// Checks `1 ≤ sup ρ ≤ C_G` in logarithmic form.
pub fn check_bound(sup_rho: f64, report: &ConstantsReport) -> BoundCheck {
    let log_sup = sup_rho.ln();
    let passed = sup_rho >= 1.0 && log_sup <= report.log_c_g;
    let log_looseness = report.log_c_g - log_sup;
    BoundCheck {
        passed,
        sup_rho,
        log_c_g: report.log_c_g,
        log_looseness,
        looseness: log_looseness.exp(),
    }
}

/// Asserts `1 ≤ sup ρ ≤ C_G`.
pub fn verify_theorem_bound(sol: &GauduchonSolution, report: &ConstantsReport) -> Result<BoundCheck> {
    let check = check_bound(sol.sup_rho, report);
    if check.passed {
        Ok(check)
    } else {
        Err(Error::BoundViolated {
            sup_rho: sol.sup_rho,
            log_c_g: report.log_c_g,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MoserCheck {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

/// `∫|d(ρ^{−p/2})|²_ω ω^n ≤ p(nB/4)∫ρ^{−p}ω^n` up to `1e-8` of the larger side.
pub fn moser_spot_check(
    ctx: &CalculusContext,
    omega: &HermitianMetricField,
    rho: &ScalarField,
    b: f64,
    p: f64,
) -> Result<MoserCheck> {
    let n = ctx.grid().dim() as f64;
    let op = AdjointOperator::new(ctx, omega)?;
    let f: Vec<f64> = rho.real_parts().iter().map(|r| r.powf(-p / 2.0)).collect();
    let ones = vec![1.0; f.len()];
    let lhs = op.inner(&op.grad_norm_sq(&f), &ones);
    let rhs = p * n * b / 4.0 * op.inner(&f, &f);
    let scale = lhs.abs().max(rhs.abs()).max(1.0);
    Ok(MoserCheck {
        p,
        lhs,
        rhs,
        passed: lhs <= rhs + 1e-8 * scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_degeneration() {
        let r = assemble_cg(ChainInputs {
            n: 2,
            b: 0.0,
            v: 8.0,
            c_s: 1.0,
            c_p: 0.1,
        })
        .unwrap();
        assert_eq!((r.c2, r.c3, r.c4), (0.0, 0.0, 0.0));
        assert_eq!(r.c_g, 1.0);
    }

    #[test]
    fn delta_identity() {
        let r = assemble_cg(ChainInputs {
            n: 3,
            b: 0.7,
            v: 48.0,
            c_s: 0.3,
            c_p: 0.2,
        })
        .unwrap();
        let expect = 1.5f64.powf(-6.0) * r.c1.powf(-3.0);
        assert!((2.0 * r.delta - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn rejects_bad_inputs() {
        let bad = ChainInputs {
            n: 2,
            b: -1.0,
            v: 8.0,
            c_s: 1.0,
            c_p: 1.0,
        };
        assert!(matches!(assemble_cg(bad), Err(Error::InvalidInputs(_))));
    }

    #[test]
    fn conformal_factor_exponent() {
        let a: f64 = 0.1;
        let k = sobolev_comparison_factor(2, (-a).exp(), a.exp());
        assert!((k - (4.0 * a).exp()).abs() < 1e-14);
    }
}
