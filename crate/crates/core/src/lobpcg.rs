//! Matrix-free LOBPCG for the smallest eigenpairs of `A x = λ M x` with a diagonal mass `M`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LobpcgOptions {
    pub max_iter: usize,
    /// Relative residual `‖Π(Ax − λMx)‖ / (‖Ax‖ + |λ|‖Mx‖)` for the lowest pair, `Π` the projection.
    pub tol: f64,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LobpcgResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot_m(m: &[f64], x: &[f64], y: &[f64]) -> f64 {
    m.iter().zip(x).zip(y).map(|((w, a), b)| w * a * b).sum()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn combine(basis: &[Vec<f64>], coef: &DMatrix<f64>, col: usize, rows: std::ops::Range<usize>) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for i in rows {
        let c = coef[(i, col)];
        if c != 0.0 {
            out.iter_mut().zip(&basis[i]).for_each(|(o, x)| *o += c * x);
        }
    }
    out
}

/// Appends `v` (with `A v = av`) to an `M`-orthonormal set, twice-orthogonalized.
/// Vectors that are numerically dependent on the set are discarded.
fn push_orthonormal(
    q: &mut Vec<Vec<f64>>,
    aq: &mut Vec<Vec<f64>>,
    mass: &[f64],
    mut v: Vec<f64>,
    mut av: Vec<f64>,
) -> bool {
    let n0 = dot_m(mass, &v, &v).sqrt();
    if !(n0 > 0.0) {
        return false;
    }
    for _ in 0..2 {
        for (b, ab) in q.iter().zip(aq.iter()) {
            let c = dot_m(mass, b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            av.iter_mut().zip(ab).for_each(|(x, y)| *x -= c * y);
        }
    }
    let nrm = dot_m(mass, &v, &v).sqrt();
    if nrm <= 1e-10 * n0 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    av.iter_mut().for_each(|x| *x /= nrm);
    q.push(v);
    aq.push(av);
    true
}

/// Rayleigh–Ritz on an `M`-orthonormal basis; returns the lowest `k` Ritz coefficients and values.
fn rayleigh_ritz(q: &[Vec<f64>], aq: &[Vec<f64>], k: usize) -> Option<(DMatrix<f64>, Vec<f64>)> {
    let s = q.len();
    if s < k {
        return None;
    }
    let mut h = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let a = 0.5 * (dot(&q[i], &aq[j]) + dot(&q[j], &aq[i]));
            h[(i, j)] = a;
            h[(j, i)] = a;
        }
    }
    let eh = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eh.eigenvalues[a].total_cmp(&eh.eigenvalues[b]));
    let mut y = DMatrix::zeros(s, k);
    let mut vals = Vec::with_capacity(k);
    for (c, &i) in order.iter().take(k).enumerate() {
        vals.push(eh.eigenvalues[i]);
        for r in 0..s {
            y[(r, c)] = eh.eigenvectors[(r, i)];
        }
    }
    Some((y, vals))
}

/// Computes the `x0.len()` lowest eigenpairs within the subspace enforced by `project`.
///
/// `project` must be idempotent and map into the constrained subspace; `precond` is
/// applied to residuals before projection. Hitting `max_iter` is reported through
/// `converged`, not as an error.
pub fn lobpcg(
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    mass: &[f64],
    precond: impl Fn(&[f64]) -> Vec<f64>,
    project: impl Fn(&mut [f64]),
    x0: Vec<Vec<f64>>,
    opts: LobpcgOptions,
) -> Result<LobpcgResult> {
    let k = x0.len();
    let mut q = Vec::new();
    let mut aq = Vec::new();
    for mut v in x0 {
        project(&mut v);
        let av = apply_a(&v);
        push_orthonormal(&mut q, &mut aq, mass, v, av);
    }
    let (c, mut lambda) = rayleigh_ritz(&q, &aq, k).ok_or(Error::NoConvergence(0))?;
    let mut x: Vec<Vec<f64>> = (0..k).map(|i| combine(&q, &c, i, 0..q.len())).collect();
    let mut ax: Vec<Vec<f64>> = (0..k).map(|i| combine(&aq, &c, i, 0..q.len())).collect();
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();
    let mut residual = f64::INFINITY;
    for iter in 0..opts.max_iter {
        let mut w = Vec::with_capacity(k);
        for i in 0..k {
            let mut r: Vec<f64> = ax[i]
                .iter()
                .zip(&x[i])
                .zip(mass)
                .map(|((a, xv), m)| a - lambda[i] * m * xv)
                .collect();
            // Only the part inside the constrained subspace can be reduced.
            project(&mut r);
            let rn = dot(&r, &r).sqrt();
            let scale = dot(&ax[i], &ax[i]).sqrt()
                + lambda[i].abs() * x[i].iter().zip(mass).map(|(v, m)| (v * m).powi(2)).sum::<f64>().sqrt();
            let rel = rn / scale.max(f64::MIN_POSITIVE);
            if i == 0 {
                residual = rel;
            }
            w.push(r);
        }
        if residual <= opts.tol {
            return Ok(LobpcgResult {
                values: lambda,
                vectors: x,
                iterations: iter,
                residual,
                converged: true,
            });
        }
        // Basis [X, W, P], M-orthonormalized in that order so the first k vectors span X.
        let mut q = Vec::with_capacity(3 * k);
        let mut aq = Vec::with_capacity(3 * k);
        for (v, av) in x.iter().zip(&ax) {
            push_orthonormal(&mut q, &mut aq, mass, v.clone(), av.clone());
        }
        let nx = q.len();
        for r in &w {
            let mut t = precond(r);
            project(&mut t);
            let at = apply_a(&t);
            push_orthonormal(&mut q, &mut aq, mass, t, at);
        }
        for (v, av) in p.iter().zip(&ap) {
            push_orthonormal(&mut q, &mut aq, mass, v.clone(), av.clone());
        }
        let Some((coef, vals)) = rayleigh_ritz(&q, &aq, k) else {
            return Err(Error::NoConvergence(iter));
        };
        lambda = vals;
        p = (0..k).map(|i| combine(&q, &coef, i, nx..q.len())).collect();
        ap = (0..k).map(|i| combine(&aq, &coef, i, nx..q.len())).collect();
        x = (0..k).map(|i| combine(&q, &coef, i, 0..q.len())).collect();
        ax = (0..k).map(|i| combine(&aq, &coef, i, 0..q.len())).collect();
    }
    Ok(LobpcgResult {
        values: lambda,
        vectors: x,
        iterations: opts.max_iter,
        residual,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_problem() {
        let nvals = 200;
        let diag: Vec<f64> = (0..nvals).map(|i| 1.0 + i as f64).collect();
        let mass = vec![2.0; nvals];
        let x0: Vec<Vec<f64>> = (0..2)
            .map(|s| (0..nvals).map(|i| ((i * 7 + s * 3) % 11) as f64 + 0.5).collect())
            .collect();
        let res = lobpcg(
            |v| v.iter().zip(&diag).map(|(a, d)| a * d).collect(),
            &mass,
            |r| r.iter().zip(&diag).map(|(a, d)| a / d).collect(),
            |_| {},
            x0,
            LobpcgOptions {
                max_iter: 300,
                tol: 1e-10,
            },
        )
        .unwrap();
        assert!((res.values[0] - 0.5).abs() < 1e-9);
        assert!((res.values[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constrained_problem() {
        let nvals = 100;
        let diag: Vec<f64> = (0..nvals).map(|i| 1.0 + i as f64).collect();
        let mass = vec![1.0; nvals];
        let res = lobpcg(
            |v| v.iter().zip(&diag).map(|(a, d)| a * d).collect(),
            &mass,
            |r| r.to_vec(),
            |v| v[0] = 0.0,
            vec![vec![1.0; nvals]],
            LobpcgOptions {
                max_iter: 500,
                tol: 1e-9,
            },
        )
        .unwrap();
        assert!((res.values[0] - 2.0).abs() < 1e-8);
    }
}
