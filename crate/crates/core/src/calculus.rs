//! Exterior calculus on forms: ∂, ∂̄, d, d^c, dd^c, wedge products and integration.
//!
//! `d^c = (i/2)(∂̄ − ∂)`, so that `dd^c = i∂∂̄`. Top forms are converted to densities
//! through the single relation `i dz∧dz̄ = 2 dx∧dy` ([`I_DZ_DZBAR`]).

use crate::error::{Error, Result};
use crate::field::{insert_sign, merge_sign, Form, FormField, ScalarField, C64};
use crate::metric::HermitianMetricField;
use crate::spectral::{CalculusContext, Partial};

/// `i dz ∧ dz̄ = I_DZ_DZBAR · dx ∧ dy`.
pub const I_DZ_DZBAR: f64 = 2.0;

const I: C64 = C64::new(0.0, 1.0);

/// Factor κ with `dz^{1..n} ∧ dz̄^{1..n} = κ dx_1∧dy_1∧…∧dx_n∧dy_n`.
pub fn top_form_factor(n: usize) -> C64 {
    // Reorder to Π(dz_j∧dz̄_j): sign (−1)^{n(n−1)/2}; each pair is −i·I_DZ_DZBAR.
    let reorder = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let pair = C64::new(0.0, -I_DZ_DZBAR);
    (0..n).fold(C64::new(reorder, 0.0), |acc, _| acc * pair)
}

fn deriv_field(ctx: &CalculusContext, form: &FormField, holo: bool) -> Result<FormField> {
    ctx.grid().check_same(form.grid())?;
    let n = ctx.grid().dim();
    let (p, q) = form.bidegree();
    let (op, oq) = if holo { (p + 1, q) } else { (p, q + 1) };
    let mut out = FormField::zero(*ctx.grid(), op, oq);
    if op > n || oq > n {
        return Ok(out);
    }
    let mut buf = vec![C64::new(0.0, 0.0); ctx.grid().len()];
    for (j_set, k_set, vals) in form.iter() {
        if vals.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        let spec = ctx.spectrum(vals);
        for j in 0..n {
            let (sign, nj, nk, d) = if holo {
                match insert_sign(j_set, j) {
                    Some(s) => (s, j_set | 1 << j, k_set, Partial::Dz(j)),
                    None => continue,
                }
            } else {
                match insert_sign(k_set, j) {
                    Some(s) => {
                        let s = if p % 2 == 0 { s } else { -s };
                        (s, j_set, k_set | 1 << j, Partial::Dzbar(j))
                    }
                    None => continue,
                }
            };
            buf.copy_from_slice(&spec);
            ctx.apply_symbol(&mut buf, d);
            ctx.inverse(&mut buf);
            out.add_scaled(nj, nk, C64::new(sign, 0.0), &buf);
        }
    }
    Ok(out)
}

/// `∂` on a homogeneous form.
pub fn del_field(ctx: &CalculusContext, form: &FormField) -> Result<FormField> {
    deriv_field(ctx, form, true)
}

/// `∂̄` on a homogeneous form.
pub fn delbar_field(ctx: &CalculusContext, form: &FormField) -> Result<FormField> {
    deriv_field(ctx, form, false)
}

fn map_pieces(
    form: &Form,
    f: impl Fn(&FormField) -> Result<FormField>,
) -> Result<Form> {
    let mut out = Form::zero(*form.grid());
    for piece in form.pieces() {
        out.add_field(&f(piece)?)?;
    }
    Ok(out)
}

pub fn del(ctx: &CalculusContext, form: &Form) -> Result<Form> {
    map_pieces(form, |f| del_field(ctx, f))
}

pub fn delbar(ctx: &CalculusContext, form: &Form) -> Result<Form> {
    map_pieces(form, |f| delbar_field(ctx, f))
}

pub fn d(ctx: &CalculusContext, form: &Form) -> Result<Form> {
    del(ctx, form)?.add(&delbar(ctx, form)?)
}

pub fn dc(ctx: &CalculusContext, form: &Form) -> Result<Form> {
    Ok(delbar(ctx, form)?
        .sub(&del(ctx, form)?)?
        .scaled(C64::new(0.0, 0.5)))
}

/// `dd^c = i∂∂̄`.
pub fn ddc(ctx: &CalculusContext, form: &Form) -> Result<Form> {
    Ok(del(ctx, &delbar(ctx, form)?)?.scaled(I))
}

/// Wedge product of homogeneous forms.
pub fn wedge(a: &FormField, b: &FormField) -> Result<FormField> {
    a.grid().check_same(b.grid())?;
    let n = a.grid().dim();
    let total = a.degree() + b.degree();
    if total > 2 * n {
        return Err(Error::DegreeOverflow { total, max: 2 * n });
    }
    let (p, q) = a.bidegree();
    let (p2, q2) = b.bidegree();
    let mut out = FormField::zero(*a.grid(), p + p2, q + q2);
    if p + p2 > n || q + q2 > n {
        return Ok(out);
    }
    let base = if (q * p2) % 2 == 0 { 1.0 } else { -1.0 };
    for (ja, ka, va) in a.iter() {
        for (jb, kb, vb) in b.iter() {
            let (Some(sj), Some(sk)) = (merge_sign(ja, jb), merge_sign(ka, kb)) else {
                continue;
            };
            let s = base * sj * sk;
            let dst = out
                .component_mut(ja | jb, ka | kb)
                .expect("merged multi-index");
            for ((d, x), y) in dst.iter_mut().zip(va).zip(vb) {
                *d += s * x * y;
            }
        }
    }
    out.set_claims_real(a.claims_real() && b.claims_real() && (p == q) && (p2 == q2));
    Ok(out)
}

/// Wedge product of mixed-degree forms, keeping pieces within range.
pub fn wedge_forms(a: &Form, b: &Form) -> Result<Form> {
    let mut out = Form::zero(*a.grid());
    let max = 2 * a.grid().dim();
    for x in a.pieces() {
        for y in b.pieces() {
            if x.degree() + y.degree() > max {
                continue;
            }
            out.add_field(&wedge(x, y)?)?;
        }
    }
    Ok(out)
}

/// `ω^k` by repeated wedge products.
pub fn metric_power(omega: &HermitianMetricField, k: usize) -> Result<FormField> {
    let n = omega.grid().dim();
    if k == 0 || k > n {
        return Err(Error::InvalidInputs(format!("metric power k = {k} outside 1..={n}")));
    }
    let w = omega.as_form();
    let mut acc = w.clone();
    for _ in 1..k {
        acc = wedge(&acc, &w)?;
    }
    acc.set_claims_real(true);
    Ok(acc)
}

/// Real density (with respect to `dx_1∧dy_1∧…`) of an `(n,n)`-form, checking realness.
pub fn top_density(top: &FormField) -> Result<Vec<f64>> {
    let n = top.grid().dim();
    if top.bidegree() != (n, n) {
        let (p, q) = top.bidegree();
        return Err(Error::NotTopForm { p, q });
    }
    let kappa = top_form_factor(n);
    let vals = top.component((1 << n) - 1, (1 << n) - 1).expect("top component");
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.norm())) * kappa.norm();
    let mut imag = 0.0f64;
    let dens = vals
        .iter()
        .map(|v| {
            let x = v * kappa;
            imag = imag.max(x.im.abs());
            x.re
        })
        .collect();
    if imag > 1e-9 * scale.max(1e-300) {
        return Err(Error::NonRealTopForm { imag, scale });
    }
    Ok(dens)
}

/// `∫` of a top-degree form over the unit torus.
pub fn integrate(top: &FormField) -> Result<f64> {
    let dens = top_density(top)?;
    Ok(dens.iter().sum::<f64>() / dens.len() as f64)
}

/// `∫` of a possibly complex top-degree form over the unit torus.
pub fn integrate_complex(top: &FormField) -> Result<C64> {
    let n = top.grid().dim();
    if top.bidegree() != (n, n) {
        let (p, q) = top.bidegree();
        return Err(Error::NotTopForm { p, q });
    }
    let vals = top.component((1 << n) - 1, (1 << n) - 1).expect("top component");
    Ok(top_form_factor(n) * vals.iter().sum::<C64>() / vals.len() as f64)
}

/// The `(n,n)` piece of a mixed form, or the zero top form.
pub fn top_piece(form: &Form) -> FormField {
    let n = form.grid().dim();
    form.piece(n, n)
        .cloned()
        .unwrap_or_else(|| FormField::zero(*form.grid(), n, n))
}

/// Nodewise ratio of two top forms.
pub fn top_ratio(num: &FormField, den: &FormField) -> Result<Vec<C64>> {
    let n = num.grid().dim();
    for f in [num, den] {
        if f.bidegree() != (n, n) {
            let (p, q) = f.bidegree();
            return Err(Error::NotTopForm { p, q });
        }
    }
    let full = (1 << n) - 1;
    let a = num.component(full, full).expect("top");
    let b = den.component(full, full).expect("top");
    Ok(a.iter().zip(b).map(|(x, y)| x / y).collect())
}

fn ratio_field(ctx: &CalculusContext, form: &Form, omega: &HermitianMetricField) -> Result<ScalarField> {
    let n = ctx.grid().dim();
    let top = top_piece(&wedge_forms(form, &metric_power(omega, n - 1)?.into())?);
    let omn = metric_power(omega, n)?;
    let r = top_ratio(&top, &omn)?;
    let values = r.into_iter().map(|v| v * n as f64).collect();
    ScalarField::new(*ctx.grid(), values, false)
}

/// `Δ_ω f = n·dd^c f ∧ ω^{n−1} / ω^n`.
pub fn laplacian(
    ctx: &CalculusContext,
    f: &ScalarField,
    omega: &HermitianMetricField,
) -> Result<ScalarField> {
    ctx.grid().check_same(omega.grid())?;
    ratio_field(ctx, &ddc(ctx, &f.into())?, omega)
}

/// `|df|²_ω = n·df ∧ d^c f ∧ ω^{n−1} / ω^n`.
pub fn grad_norm_sq(
    ctx: &CalculusContext,
    f: &ScalarField,
    omega: &HermitianMetricField,
) -> Result<ScalarField> {
    ctx.grid().check_same(omega.grid())?;
    let form: Form = f.into();
    let prod = wedge_forms(&d(ctx, &form)?, &dc(ctx, &form)?)?;
    ratio_field(ctx, &prod, omega)
}
