//! Degrees of freedom via the divergence of the fitted-mean map, unbiased
//! risk estimators (SURE / SUKL / PUKL / GSURE), theory-guided λ, and
//! grid-based tuning.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::lattice::{LatticeSpec, NullSpaceBasis, SparseOperator};
use crate::solver::{fit_mle_tf_warm, FitConfig, FitResult, WarmStart};
use crate::spectral::{kron_sum_eigenvalues, l_jp_from_eigen, ExcludedSet};

/// Default relative threshold for classifying rows of Dθ̂ as active (zero).
pub const DEFAULT_ACTIVE_TOL: f64 = 1e-6;

/// Largest n accepted by the dense null-space factorizations.
pub const DENSE_N_LIMIT: usize = 4096;

/// Rows of D on which Dθ̂ vanishes (up to tolerance), the restricted
/// operator, and a basis of its null space.
pub struct ActiveSet {
    pub kept_rows: Vec<usize>,
    pub d_breve: SparseOperator,
    n: usize,
    structure: NullStructure,
}

enum NullStructure {
    /// Unwrapped 1d chain: rows are triangular (leading entry at column j),
    /// so D̆ has full row rank and null(D̆) propagates by the stencil
    /// recurrence. Basis built on demand.
    Chain { order: usize, coeff: Vec<f64> },
    /// Orthonormal basis columns from a dense factorization.
    Dense { basis: Vec<Vec<f64>> },
}

impl ActiveSet {
    /// Dimension of null(D̆).
    pub fn null_dim(&self) -> usize {
        match &self.structure {
            NullStructure::Chain { .. } => self.n - self.kept_rows.len(),
            NullStructure::Dense { basis } => basis.len(),
        }
    }

    /// Orthonormal basis columns of null(D̆).
    pub fn null_basis(&self) -> Vec<Vec<f64>> {
        match &self.structure {
            NullStructure::Dense { basis } => basis.clone(),
            NullStructure::Chain { order, coeff } => {
                let b = chain_null_columns(self.n, *order, coeff, &self.kept_rows);
                if self.kept_rows.is_empty() {
                    b
                } else {
                    orthonormalize(b)
                }
            }
        }
    }

    /// Projection onto null(D̆); idempotent and symmetric.
    pub fn project_null(&self, v: &[f64]) -> Vec<f64> {
        let basis = self.null_basis();
        let mut out = vec![0.0; self.n];
        for col in &basis {
            let c: f64 = col.iter().zip(v).map(|(a, b)| a * b).sum();
            for (o, &qi) in out.iter_mut().zip(col) {
                *o += c * qi;
            }
        }
        out
    }
}

fn chain_null_columns(
    n: usize,
    order: usize,
    coeff: &[f64],
    kept_rows: &[usize],
) -> Vec<Vec<f64>> {
    let mut kept = vec![false; n.saturating_sub(order)];
    for &j in kept_rows {
        kept[j] = true;
    }
    // positions not determined by a kept constraint are free seeds
    let mut free = Vec::new();
    for p in 0..n {
        if p < order || !kept[p - order] {
            free.push(p);
        }
    }
    let c_last = coeff[order];
    free.iter()
        .map(|&seed| {
            let mut v = vec![0.0; n];
            v[seed] = 1.0;
            for (j, &is_kept) in kept.iter().enumerate() {
                if is_kept {
                    let mut acc = 0.0;
                    for (l, &cl) in coeff.iter().take(order).enumerate() {
                        acc += cl * v[j + l];
                    }
                    v[j + order] = -acc / c_last;
                }
            }
            v
        })
        .collect()
}

fn orthonormalize(columns: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    if columns.is_empty() {
        return columns;
    }
    let n = columns[0].len();
    let q = columns.len();
    let mut m = nalgebra::DMatrix::zeros(n, q);
    for (c, col) in columns.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    let qr = m.qr();
    let qmat = qr.q();
    (0..q.min(qmat.ncols()))
        .map(|c| qmat.column(c).iter().copied().collect())
        .collect()
}

/// Rows with |(Dθ̂)_j| ≤ active_tol (1 + ||Dθ̂||_∞) are kept; the null space
/// of the restricted operator is represented densely (or by the chain
/// recurrence when `spec` describes an unwrapped 1d problem).
pub fn active_rows(
    d: &SparseOperator,
    theta_hat: &[f64],
    active_tol: f64,
) -> Result<ActiveSet> {
    active_rows_impl(d, theta_hat, active_tol, None)
}

/// Variant that can exploit the 1d chain structure of `spec` at any size.
pub fn active_rows_spec(
    spec: &LatticeSpec,
    d: &SparseOperator,
    theta_hat: &[f64],
    active_tol: f64,
) -> Result<ActiveSet> {
    active_rows_impl(d, theta_hat, active_tol, Some(spec))
}

fn active_rows_impl(
    d: &SparseOperator,
    theta_hat: &[f64],
    active_tol: f64,
    spec: Option<&LatticeSpec>,
) -> Result<ActiveSet> {
    assert!(active_tol > 0.0);
    let n = d.n_cols();
    let dtheta = d.matvec(theta_hat);
    let sup = dtheta.iter().fold(0f64, |a, &b| a.max(b.abs()));
    let threshold = active_tol * (1.0 + sup);
    let kept_rows: Vec<usize> = dtheta
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= threshold)
        .map(|(j, _)| j)
        .collect();
    let d_breve = d.select_rows(&kept_rows);

    let chain = spec.filter(|s| s.ndim() == 1 && !s.wrap()[0]);
    let structure = match chain {
        Some(s) if n > 200 => {
            let order = s.orders()[0] + 1;
            NullStructure::Chain {
                order,
                coeff: row_coefficients(d, order),
            }
        }
        _ => {
            if n > DENSE_N_LIMIT {
                return Err(Error::SizeLimit {
                    size: n,
                    limit: DENSE_N_LIMIT,
                });
            }
            // for 1d chains the recurrence still yields the basis cheaply
            if let Some(s) = chain {
                let order = s.orders()[0] + 1;
                let cols =
                    chain_null_columns(n, order, &row_coefficients(d, order), &kept_rows);
                let basis = if kept_rows.is_empty() {
                    cols
                } else {
                    orthonormalize(cols)
                };
                NullStructure::Dense { basis }
            } else {
                NullStructure::Dense {
                    basis: dense_null_basis(&d_breve)?,
                }
            }
        }
    };
    Ok(ActiveSet {
        kept_rows,
        d_breve,
        n,
        structure,
    })
}

fn row_coefficients(d: &SparseOperator, order: usize) -> Vec<f64> {
    let mut coeff = vec![0.0; order + 1];
    for (r, c, v) in d.triplets() {
        if r == 0 {
            coeff[c] = v;
        } else {
            break;
        }
    }
    coeff
}

fn dense_null_basis(d_breve: &SparseOperator) -> Result<Vec<Vec<f64>>> {
    let n = d_breve.n_cols();
    if d_breve.n_rows() == 0 {
        // identity basis
        return Ok((0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect());
    }
    let dense = d_breve.to_dense();
    let dtd = dense.transpose() * dense;
    let eig = dtd.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().fold(0f64, |a, &b| a.max(b));
    let cutoff = 1e-10 * max_ev.max(f64::MIN_POSITIVE);
    let mut basis = Vec::new();
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev <= cutoff {
            basis.push(eig.eigenvectors.column(idx).iter().copied().collect());
        }
    }
    Ok(basis)
}

/// Divergence diagnostics: traces of the Jacobians of y ↦ β̂(y) and
/// y ↦ θ̂(y) plus the per-coordinate diagonal of Jβ̂.
pub struct DivergenceReport {
    pub beta_trace: f64,
    pub theta_trace: f64,
    pub beta_diag: Vec<f64>,
}

/// Trace of J β̂(y) via the active-set formula. For λ₂ = 0 this is
/// trace(Ψ V (VᵀΨV)⁻¹ Vᵀ) over an orthonormal basis V of null(D̆), which for
/// the Gaussian family reduces to dim null(D̆) exactly. For λ₂ > 0 the
/// curvature of the null-space penalty on the active manifold enters: where
/// P_N θ̂ ≠ 0 the Hessian contribution is n λ₂ (P_N - q̄q̄ᵀ)/||P_N θ̂||₂; where
/// the null component is pinned at the kink the manifold loses the
/// null-space directions.
pub fn divergence_trace(
    family: Family,
    theta_hat: &[f64],
    active: &ActiveSet,
    lambda2: f64,
    basis: &NullSpaceBasis,
) -> Result<f64> {
    // λ₂ = 0: trace(Ψ V (VᵀΨV)⁻¹ Vᵀ) = trace(I_q) = dim null(D̆) by
    // cyclicity, for every family, provided VᵀΨV is nonsingular
    if lambda2 == 0.0 {
        let psi2: Vec<f64> = theta_hat
            .iter()
            .map(|&t| family.psi_double_prime(t))
            .collect();
        let max = psi2.iter().fold(0f64, |a, &b| a.max(b));
        let min = psi2.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min > 1e-8 * max {
            return Ok(active.null_dim() as f64);
        }
    }
    Ok(divergence_report(family, theta_hat, active, lambda2, basis)?.beta_trace)
}

pub fn divergence_report(
    family: Family,
    theta_hat: &[f64],
    active: &ActiveSet,
    lambda2: f64,
    basis: &NullSpaceBasis,
) -> Result<DivergenceReport> {
    let n = theta_hat.len();
    let nf = n as f64;

    // Gaussian fast path: ψ'' ≡ 1 and no null penalty ⇒ trace is the
    // projector dimension
    if family == Family::Gaussian && lambda2 == 0.0 {
        let q = active.null_dim() as f64;
        let diag = if n <= 512 {
            let v = active.null_basis();
            let mut diag = vec![0.0; n];
            for col in &v {
                for (di, &x) in diag.iter_mut().zip(col) {
                    *di += x * x;
                }
            }
            diag
        } else {
            vec![]
        };
        return Ok(DivergenceReport {
            beta_trace: q,
            theta_trace: q,
            beta_diag: diag,
        });
    }

    let psi2: Vec<f64> = theta_hat
        .iter()
        .map(|&t| family.psi_double_prime(t))
        .collect();
    let mut v = active.null_basis();
    let q0 = v.len();
    if q0 == 0 {
        return Ok(DivergenceReport {
            beta_trace: 0.0,
            theta_trace: 0.0,
            beta_diag: vec![0.0; n],
        });
    }

    // null-penalty curvature on the manifold
    let mut hess_scale = 0.0; // c = n λ2 / ||P_N θ̂||
    let mut qbar: Option<Vec<f64>> = None; // unit vector P_Nθ̂/||P_Nθ̂||
    if lambda2 > 0.0 && basis.dim() > 0 {
        let coef = basis.coefficients(theta_hat);
        let norm = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
        let scale = theta_hat.iter().fold(0f64, |a, &b| a.max(b.abs()));
        if norm > 1e-8 * (1.0 + scale) {
            hess_scale = nf * lambda2 / norm;
            let mut qb = vec![0.0; n];
            for (c, qcol) in coef.iter().zip(basis.columns()) {
                for (o, &x) in qb.iter_mut().zip(qcol) {
                    *o += (c / norm) * x;
                }
            }
            qbar = Some(qb);
        } else {
            // kink: the null component is pinned, remove null(D) directions
            // from the manifold basis
            v = project_out(v, basis);
            if v.is_empty() {
                return Ok(DivergenceReport {
                    beta_trace: 0.0,
                    theta_trace: 0.0,
                    beta_diag: vec![0.0; n],
                });
            }
        }
    }
    let q = v.len();

    // G = Vᵀ(Ψ + c(P_N - q̄q̄ᵀ))V,  T1 = VᵀΨV
    let mut t1 = nalgebra::DMatrix::zeros(q, q);
    for (a, va) in v.iter().enumerate() {
        for (b, vb) in v.iter().enumerate().skip(a) {
            let s: f64 = va
                .iter()
                .zip(vb)
                .zip(&psi2)
                .map(|((x, y), p)| x * y * p)
                .sum();
            t1[(a, b)] = s;
            t1[(b, a)] = s;
        }
    }
    let mut g = t1.clone();
    if hess_scale > 0.0 {
        // + c (QᵀV)ᵀ(QᵀV) - c (q̄ᵀV)ᵀ(q̄ᵀV)
        let kappa = basis.dim();
        let mut qv = nalgebra::DMatrix::zeros(kappa, q);
        for (r, qcol) in basis.columns().iter().enumerate() {
            for (c, vcol) in v.iter().enumerate() {
                qv[(r, c)] = qcol.iter().zip(vcol).map(|(a, b)| a * b).sum();
            }
        }
        g += hess_scale * qv.transpose() * &qv;
        let qb = qbar.as_ref().expect("set together with hess_scale");
        let mut qbv = nalgebra::DVector::zeros(q);
        for (c, vcol) in v.iter().enumerate() {
            qbv[c] = qb.iter().zip(vcol).map(|(a, b)| a * b).sum();
        }
        g -= hess_scale * &qbv * qbv.transpose();
    }

    // pseudo-inverse with relative cutoff
    let eig = g.symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().fold(0f64, |a, &b| a.max(b.abs()));
    let cutoff = 1e-10 * max_ev.max(f64::MIN_POSITIVE);
    let mut g_pinv = nalgebra::DMatrix::zeros(q, q);
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > cutoff {
            let w = eig.eigenvectors.column(idx);
            g_pinv += nalgebra::DMatrix::from_fn(q, q, |r, c| w[r] * w[c] / ev);
        }
    }

    let beta_trace = (&g_pinv * &t1).trace();
    let theta_trace = g_pinv.trace();

    // per-coordinate diagonal of Jβ̂ = Ψ V G† Vᵀ
    let mut beta_diag = vec![0.0; n];
    for a in 0..q {
        for b in 0..q {
            let w = g_pinv[(a, b)];
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                beta_diag[i] += psi2[i] * v[a][i] * w * v[b][i];
            }
        }
    }

    Ok(DivergenceReport {
        beta_trace,
        theta_trace,
        beta_diag,
    })
}

fn project_out(v: Vec<Vec<f64>>, basis: &NullSpaceBasis) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for col in v {
        let p = basis.project(&col).expect("dimension checked");
        let resid: Vec<f64> = col.iter().zip(&p).map(|(a, b)| a - b).collect();
        let norm = resid.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            out.push(resid);
        }
    }
    if out.is_empty() {
        out
    } else {
        orthonormalize(out)
    }
}

/// Central-difference estimate of the divergence of y ↦ β̂(y), re-solving at
/// y ± ε e_i; `boundary` marks coordinates whose active set differs across
/// the stencil (local linearity fails there).
pub struct NumericDivergence {
    pub value: f64,
    pub per_coordinate: Vec<f64>,
    pub boundary: Vec<bool>,
}

pub fn numeric_divergence(
    refit: &(dyn Fn(&[f64]) -> Result<FitResult> + Sync),
    d: &SparseOperator,
    y: &[f64],
    eps: f64,
    active_tol: f64,
) -> Result<NumericDivergence> {
    let n = y.len();
    let results: Vec<Result<(f64, bool)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut yp = y.to_vec();
            yp[i] += eps;
            let fit_p = refit(&yp)?;
            yp[i] -= 2.0 * eps;
            let fit_m = refit(&yp)?;
            let deriv = (fit_p.beta_hat[i] - fit_m.beta_hat[i]) / (2.0 * eps);
            let kp = kept_pattern(d, &fit_p.theta_hat, active_tol);
            let km = kept_pattern(d, &fit_m.theta_hat, active_tol);
            Ok((deriv, kp != km))
        })
        .collect();
    let mut per_coordinate = Vec::with_capacity(n);
    let mut boundary = Vec::with_capacity(n);
    for r in results {
        let (deriv, b) = r?;
        per_coordinate.push(deriv);
        boundary.push(b);
    }
    Ok(NumericDivergence {
        value: per_coordinate.iter().sum(),
        per_coordinate,
        boundary,
    })
}

fn kept_pattern(d: &SparseOperator, theta: &[f64], active_tol: f64) -> Vec<bool> {
    let dt = d.matvec(theta);
    let sup = dt.iter().fold(0f64, |a, &b| a.max(b.abs()));
    let thr = active_tol * (1.0 + sup);
    dt.iter().map(|v| v.abs() <= thr).collect()
}

/// Stein's unbiased risk estimate ||y - β̂||² - nσ² + 2σ² div.
pub fn sure(y: &[f64], beta_hat: &[f64], divergence: f64, sigma_sq: f64) -> f64 {
    let rss: f64 = y
        .iter()
        .zip(beta_hat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    rss - y.len() as f64 * sigma_sq + 2.0 * sigma_sq * divergence
}

/// Unbiased estimate (up to ψ(θ*)) of E KL(θ̂ || θ*) for continuous
/// families: ⟨θ̂ + ∇h(y)/h(y), β̂⟩ + div - Σψ(θ̂_i).
pub fn sukl(
    y: &[f64],
    theta_hat: &[f64],
    beta_hat: &[f64],
    divergence: f64,
    family: Family,
) -> Result<f64> {
    let mut inner = 0.0;
    let mut psi_sum = 0.0;
    for ((&yi, &ti), &bi) in y.iter().zip(theta_hat).zip(beta_hat) {
        inner += (ti + family.h_score(yi)?) * bi;
        psi_sum += family.psi(ti);
    }
    Ok(inner + divergence - psi_sum)
}

/// Generalized SURE: unbiased for E||θ̂ - θ*||² in continuous families.
pub fn gsure(y: &[f64], theta_hat: &[f64], theta_divergence: f64, family: Family) -> Result<f64> {
    let mut norm_sq = 0.0;
    let mut inner = 0.0;
    let mut data_term = 0.0;
    for (&yi, &ti) in y.iter().zip(theta_hat) {
        norm_sq += ti * ti;
        inner += family.h_score(yi)? * ti;
        data_term += h_second_ratio(family, yi)?;
    }
    Ok(norm_sq + 2.0 * inner + 2.0 * theta_divergence + data_term)
}

/// h''(y)/h(y) for the continuous families.
fn h_second_ratio(family: Family, y: f64) -> Result<f64> {
    match family {
        Family::Gaussian => Ok(y * y - 1.0),
        Family::Exponential => Ok(0.0),
        Family::ChiSquared => {
            let s = 1.0 - 0.5 * y.exp();
            Ok(s * s - 0.5 * y.exp())
        }
        _ => Err(Error::UnsupportedFamily {
            family,
            what: "generalized SURE (discrete base measure)",
        }),
    }
}

/// Poisson unbiased KL estimate: ||β̂(y)||₁ - Σ_{i: y_i > 0} y_i log [β̂(y - e_i)]_i.
/// Each positive-count coordinate requires one warm-started re-solve.
pub fn pukl(
    y: &[f64],
    base: &FitResult,
    refit: &(dyn Fn(&[f64], Option<&WarmStart>) -> Result<FitResult> + Sync),
) -> Result<f64> {
    validate_counts(y)?;
    let l1: f64 = base.beta_hat.iter().map(|b| b.abs()).sum();
    let warm = base.warm_start();
    let positive: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let terms: Vec<Result<f64>> = positive
        .par_iter()
        .map(|&i| {
            let mut yd = y.to_vec();
            yd[i] -= 1.0;
            let fit = refit(&yd, Some(&warm))?;
            Ok(y[i] * fit.beta_hat[i].max(f64::MIN_POSITIVE).ln())
        })
        .collect();
    let mut downdate = 0.0;
    for t in terms {
        downdate += t?;
    }
    Ok(l1 - downdate)
}

/// Subsampled PUKL: the downdate sum over a random coordinate subset,
/// rescaled. Approximate; intended for large n.
pub fn pukl_subsampled(
    y: &[f64],
    base: &FitResult,
    refit: &(dyn Fn(&[f64], Option<&WarmStart>) -> Result<FitResult> + Sync),
    subset: usize,
    seed: u64,
) -> Result<f64> {
    validate_counts(y)?;
    let positive: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    if positive.len() <= subset {
        return pukl(y, base, refit);
    }
    let mut rng = crate::rng::CounterRng::new(seed, 0xD0C5);
    let mut chosen = positive.clone();
    // partial Fisher-Yates
    for i in 0..subset {
        let j = i + (rng.next_u64() as usize) % (chosen.len() - i);
        chosen.swap(i, j);
    }
    chosen.truncate(subset);
    let warm = base.warm_start();
    let l1: f64 = base.beta_hat.iter().map(|b| b.abs()).sum();
    let terms: Vec<Result<f64>> = chosen
        .par_iter()
        .map(|&i| {
            let mut yd = y.to_vec();
            yd[i] -= 1.0;
            let fit = refit(&yd, Some(&warm))?;
            Ok(y[i] * fit.beta_hat[i].max(f64::MIN_POSITIVE).ln())
        })
        .collect();
    let mut downdate = 0.0;
    for t in terms {
        downdate += t?;
    }
    Ok(l1 - downdate * positive.len() as f64 / subset as f64)
}

fn validate_counts(y: &[f64]) -> Result<()> {
    for (i, &v) in y.iter().enumerate() {
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::NonIntegerData { value: v, index: i });
        }
    }
    Ok(())
}

/// Which estimator a tuning run drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    MleTf,
    MeanTf,
}

impl Estimator {
    pub fn from_name(name: &str) -> Result<Estimator> {
        match name.to_ascii_lowercase().as_str() {
            "mle" | "mle_tf" => Ok(Estimator::MleTf),
            "mean" | "mean_tf" => Ok(Estimator::MeanTf),
            other => Err(Error::Parse {
                what: "estimator",
                detail: format!("unknown estimator {other:?}"),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Estimator::MleTf => "mle_tf",
            Estimator::MeanTf => "mean_tf",
        }
    }
}

/// Risk criteria available for tuning.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Criterion {
    Sure,
    Sukl,
    Pukl,
    Gsure,
}

impl Criterion {
    pub fn from_name(name: &str) -> Result<Criterion> {
        match name.to_ascii_lowercase().as_str() {
            "sure" => Ok(Criterion::Sure),
            "sukl" => Ok(Criterion::Sukl),
            "pukl" => Ok(Criterion::Pukl),
            "gsure" => Ok(Criterion::Gsure),
            other => Err(Error::Parse {
                what: "criterion",
                detail: format!("unknown criterion {other:?}"),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Sure => "sure",
            Criterion::Sukl => "sukl",
            Criterion::Pukl => "pukl",
            Criterion::Gsure => "gsure",
        }
    }

    /// Criterion/family compatibility: PUKL is the Poisson criterion; the
    /// Stein-type criteria need a continuous base measure.
    pub fn validate(&self, family: Family) -> Result<()> {
        match self {
            Criterion::Pukl => {
                if family == Family::Poisson {
                    Ok(())
                } else {
                    Err(Error::CriterionMismatch {
                        criterion: "pukl",
                        family,
                        hint: "PUKL applies to Poisson counts only",
                    })
                }
            }
            _ => {
                if family.is_discrete() {
                    Err(Error::CriterionMismatch {
                        criterion: self.name(),
                        family,
                        hint: "use PUKL for Poisson data",
                    })
                } else {
                    Ok(())
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RiskRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub value: f64,
    pub df: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RiskReport {
    pub criterion: String,
    pub rows: Vec<RiskRow>,
    pub selected: usize,
}

impl RiskReport {
    pub fn selected_row(&self) -> &RiskRow {
        &self.rows[self.selected]
    }
}

/// Robust σ estimate: 1.4826 · MAD of first differences / √2. A heuristic
/// for running SURE on the mean filter when σ² is not supplied.
pub fn mad_sigma(y: &[f64]) -> f64 {
    if y.len() < 2 {
        return 1.0;
    }
    let mut d: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = median_sorted(&d);
    let mut abs: Vec<f64> = d.iter().map(|v| (v - med).abs()).collect();
    abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    1.4826 * median_sorted(&abs) / std::f64::consts::SQRT_2
}

fn median_sorted(v: &[f64]) -> f64 {
    let k = v.len();
    if k == 0 {
        return 0.0;
    }
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Settings for [`tune`].
pub struct TuneSettings<'a> {
    pub spec: Option<&'a LatticeSpec>,
    pub estimator: Estimator,
    /// σ² for SURE; estimated by `mad_sigma` when absent.
    pub sigma_sq: Option<f64>,
    pub active_tol: f64,
}

impl Default for TuneSettings<'_> {
    fn default() -> Self {
        TuneSettings {
            spec: None,
            estimator: Estimator::MleTf,
            sigma_sq: None,
            active_tol: DEFAULT_ACTIVE_TOL,
        }
    }
}

/// Fit warm-started paths over the λ grids, score each grid point with the
/// criterion, and return the argmin with degrees of freedom per point.
/// Returns both the report and the fits (row-major over λ₂ then λ₁, same
/// order as the report rows).
#[allow(clippy::too_many_arguments)]
pub fn tune(
    y: &[f64],
    family: Family,
    d: &SparseOperator,
    basis: &NullSpaceBasis,
    lambda1_grid: &[f64],
    lambda2_grid: &[f64],
    criterion: Criterion,
    config: &FitConfig,
    settings: &TuneSettings,
) -> Result<(RiskReport, Vec<FitResult>)> {
    if lambda1_grid.is_empty() {
        return Err(Error::EmptyGrid("lambda1 grid"));
    }
    let lambda2_grid = if lambda2_grid.is_empty() {
        &[0.0][..]
    } else {
        lambda2_grid
    };
    criterion.validate(family)?;
    let fit_family = match settings.estimator {
        Estimator::MleTf => family,
        Estimator::MeanTf => Family::Gaussian,
    };

    let sigma_sq = settings
        .sigma_sq
        .unwrap_or_else(|| mad_sigma(y).powi(2))
        .max(f64::MIN_POSITIVE);

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &l2 in lambda2_grid {
        let mut warm: Option<WarmStart> = None;
        for &l1 in lambda1_grid {
            let cfg = FitConfig {
                lambda1: l1,
                lambda2: if settings.estimator == Estimator::MeanTf {
                    0.0
                } else {
                    l2
                },
                ..config.clone()
            };
            let fit = fit_mle_tf_warm(y, fit_family, d, basis, &cfg, warm.as_ref())?;
            warm = Some(fit.warm_start());

            let active = match settings.spec {
                Some(s) => active_rows_spec(s, d, &fit.theta_hat, settings.active_tol)?,
                None => active_rows(d, &fit.theta_hat, settings.active_tol)?,
            };
            let report =
                divergence_report(fit_family, &fit.theta_hat, &active, cfg.lambda2, basis)?;
            let df = report.beta_trace;

            let value = match criterion {
                Criterion::Sure => sure(y, &fit.beta_hat, df, sigma_sq),
                Criterion::Sukl => sukl(y, &fit.theta_hat, &fit.beta_hat, df, fit_family)?,
                Criterion::Gsure => gsure(y, &fit.theta_hat, report.theta_trace, fit_family)?,
                Criterion::Pukl => {
                    let refit = |yd: &[f64], w: Option<&WarmStart>| {
                        fit_mle_tf_warm(yd, fit_family, d, basis, &cfg, w)
                    };
                    pukl(y, &fit, &refit)?
                }
            };
            rows.push(RiskRow {
                lambda1: l1,
                lambda2: cfg.lambda2,
                value,
                df,
            });
            fits.push(fit);
        }
    }

    let selected = rows
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.value.partial_cmp(&b.value).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((
        RiskReport {
            criterion: criterion.name().to_string(),
            rows,
            selected,
        },
        fits,
    ))
}

/// Theory-guided tuning parameters from sub-exponential envelopes:
/// A_n = 2 t μ √(|J|/n) (||ν||₂ ∨ ||b||_∞),
/// B_n = 2 t ( min{||ν||_∞ L_{J,2}, ||ν||₂ L_{J,1}} ∨ ||b||_∞ L_{J,1} ).
/// The likelihood filter uses (λ₁, λ₂) = (2B_n/n, 2A_n/n); the mean filter
/// uses (B_n/n, 0).
pub fn theory_lambda(
    spec: &LatticeSpec,
    nu: &[f64],
    b: &[f64],
    t: f64,
    mu: f64,
    excluded: &ExcludedSet,
    estimator: Estimator,
) -> Result<(f64, f64)> {
    assert!(t >= 1.0, "t must be at least 1");
    let n = spec.n();
    if nu.len() != n || b.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: nu.len().min(b.len()),
        });
    }
    let eigen = kron_sum_eigenvalues(spec)?;
    let l1 = l_jp_from_eigen(&eigen, spec.orders(), excluded, 1.0, mu)?;
    let l2 = l_jp_from_eigen(&eigen, spec.orders(), excluded, 2.0, mu)?;

    let nullity_axis = eigen.nullity_per_axis();
    let mut j_size = 0usize;
    eigen.for_each_xi_sq(|idx, _| {
        if excluded.contains_for(idx, spec.orders(), &nullity_axis) {
            j_size += 1;
        }
    });

    let nu_2 = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nu_inf = nu.iter().fold(0f64, |a, &v| a.max(v.abs()));
    let b_inf = b.iter().fold(0f64, |a, &v| a.max(v.abs()));

    let a_n = 2.0 * t * mu * ((j_size as f64) / n as f64).sqrt() * nu_2.max(b_inf);
    let b_n = 2.0 * t * (nu_inf * l2).min(nu_2 * l1).max(b_inf * l1);

    Ok(match estimator {
        Estimator::MleTf => (2.0 * b_n / n as f64, 2.0 * a_n / n as f64),
        Estimator::MeanTf => (b_n / n as f64, 0.0),
    })
}
