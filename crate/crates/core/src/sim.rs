//! Synthetic-signal generators and the experiment harness comparing the
//! likelihood and mean trend filters when either the natural parameter or
//! the mean is the smooth object, plus the degenerate all-zero-Poisson
//! demonstration.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::{empirical_risk, kl_bar, population_risk, Family};
use crate::lattice::{build_diff_lattice, polynomial_null_basis, LatticeSpec};
use crate::risk::{pukl_subsampled, tune, Criterion, Estimator, RiskReport, TuneSettings};
use crate::rng::CounterRng;
use crate::solver::{fit_mle_tf, fit_mle_tf_warm, FitConfig, WarmStart};
use crate::spectral::ExcludedSet;

/// V-shaped signal on [0, 1]: f_n(x) = 1/n + (1 - 2/n)|x - 1/2| at n
/// equally spaced points.
pub fn vshape_signal(n: usize) -> Vec<f64> {
    assert!(n >= 3);
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let x = i as f64 / (nf - 1.0);
            1.0 / nf + (1.0 - 2.0 / nf) * (x - 0.5).abs()
        })
        .collect()
}

/// Shifted signal for Poisson scenarios: g_n(x) = 0.5 - f_n(x) + log n.
pub fn poisson_shift_signal(n: usize) -> Vec<f64> {
    let nf = n as f64;
    vshape_signal(n)
        .into_iter()
        .map(|f| 0.5 - f + nf.ln())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothTarget {
    Mean,
    Natural,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    VShape,
    PoissonShift,
}

#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub family: String,
    pub smooth_target: SmoothTarget,
    pub signal: SignalKind,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub k: usize,
    pub seed: u64,
}

impl Scenario {
    pub fn family_enum(&self) -> Result<Family> {
        Family::from_name(&self.family)
    }

    fn validate(&self) -> Result<()> {
        self.family_enum()?;
        if self.replications == 0 {
            return Err(Error::Parse {
                what: "scenario",
                detail: "replications must be at least 1".into(),
            });
        }
        if self.n_grid.iter().any(|&n| n < 20) {
            return Err(Error::Parse {
                what: "scenario",
                detail: "grid sizes must be at least 20".into(),
            });
        }
        Ok(())
    }
}

/// 20 grid sizes evenly spaced on the log scale from 20 to 1000,
/// deduplicated after rounding.
pub fn default_n_grid() -> Vec<usize> {
    let lo = 20f64.ln();
    let hi = 1000f64.ln();
    let mut out: Vec<usize> = (0..20)
        .map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp().round() as usize)
        .collect();
    out.dedup();
    out
}

/// Named presets for the four panel scenarios.
pub fn preset(name: &str) -> Option<Scenario> {
    let (family, smooth_target, signal) = match name {
        "fig2-exp-mean" => ("exponential", SmoothTarget::Mean, SignalKind::VShape),
        "fig2-exp-natural" => ("exponential", SmoothTarget::Natural, SignalKind::VShape),
        "fig2-pois-mean" => ("poisson", SmoothTarget::Mean, SignalKind::PoissonShift),
        "fig2-pois-natural" => ("poisson", SmoothTarget::Natural, SignalKind::PoissonShift),
        _ => return None,
    };
    Some(Scenario {
        family: family.to_string(),
        smooth_target,
        signal,
        n_grid: default_n_grid(),
        replications: 10,
        k: 1,
        seed: 20,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Mse,
    KlBar,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Mse => "mse",
            MetricKind::KlBar => "klbar",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioRow {
    pub n: usize,
    pub rep: usize,
    pub estimator: &'static str,
    pub metric: MetricKind,
    pub value: f64,
    pub selected_lambda: f64,
    pub runtime_seconds: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub rows: Vec<ScenarioRow>,
}

/// True parameters on the grid for a scenario cell.
pub fn true_parameters(
    family: Family,
    smooth_target: SmoothTarget,
    signal: SignalKind,
    n: usize,
) -> (Vec<f64>, Vec<f64>) {
    let s = match signal {
        SignalKind::VShape => vshape_signal(n),
        SignalKind::PoissonShift => poisson_shift_signal(n),
    };
    match (family, smooth_target) {
        // exponential: the natural-parameter domain is θ < 0, so the smooth
        // signal sits on whichever scale is controlled
        (Family::Exponential, SmoothTarget::Mean) => {
            let beta = s.clone();
            let theta = s.iter().map(|&m| -1.0 / m).collect();
            (theta, beta)
        }
        (Family::Exponential, SmoothTarget::Natural) => {
            let theta: Vec<f64> = s.iter().map(|&f| -f).collect();
            let beta = theta.iter().map(|&t| -1.0 / t).collect();
            (theta, beta)
        }
        (Family::Poisson, SmoothTarget::Mean) => {
            let beta = s.clone();
            let theta = s.iter().map(|&m| m.ln()).collect();
            (theta, beta)
        }
        (Family::Poisson, SmoothTarget::Natural) => {
            let beta = s.iter().map(|&t| t.exp()).collect();
            (s, beta)
        }
        // Gaussian: the two targets coincide
        (_, _) => {
            let beta = s.clone();
            (s, beta)
        }
    }
}

/// λ grid centered at the theory-guided value, log-spaced over 4 decades.
fn scenario_lambda_grid(
    family: Family,
    estimator: Estimator,
    spec: &LatticeSpec,
    y: &[f64],
) -> Vec<f64> {
    let n = spec.n();
    let eps = 1.0 / (4.0 * n as f64);
    let mut nu = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for &yi in y {
        let theta0 = family.link_inverse_clamped(yi, eps);
        match family.subexp_params(theta0) {
            Ok(p) => {
                nu.push(p.nu_sq.sqrt());
                b.push(p.b);
            }
            Err(_) => {
                nu.push(1.0);
                b.push(0.0);
            }
        }
    }
    let center = crate::risk::theory_lambda(
        spec,
        &nu,
        &b,
        1.0,
        1.0,
        &ExcludedSet::NullSpace,
        estimator,
    )
    .map(|(l1, _)| l1)
    .unwrap_or(0.1)
    .max(1e-12);
    let points = 13usize;
    (0..points)
        .map(|i| center * 10f64.powf(-3.0 + 4.0 * i as f64 / (points - 1) as f64))
        .collect()
}

fn run_cell(sc: &Scenario, n: usize, rep: usize) -> Result<Vec<ScenarioRow>> {
    let family = sc.family_enum()?;
    let spec = LatticeSpec::chain(n, sc.k)?;
    let d = build_diff_lattice(&spec)?;
    let basis = polynomial_null_basis(&spec)?;
    let (theta_star, beta_star) = true_parameters(family, sc.smooth_target, sc.signal, n);

    let cell_seed = CounterRng::substream(
        sc.seed,
        &[
            sc.smooth_target as u64 + 1,
            sc.signal as u64 + 17,
            n as u64,
            rep as u64,
        ],
    )
    .next_u64();
    let y = family.sample(&theta_star, cell_seed)?;

    let mut cfg = FitConfig::default().tolerances(1e-9, 1e-8);
    cfg.max_iter = 50_000;

    let mut rows = Vec::new();
    for estimator in [Estimator::MleTf, Estimator::MeanTf] {
        let start = Instant::now();
        let grid = scenario_lambda_grid(family, estimator, &spec, &y);
        let criterion = match (family, estimator) {
            (Family::Poisson, _) => Criterion::Pukl,
            (Family::Gaussian, _) | (_, Estimator::MeanTf) => Criterion::Sure,
            (_, Estimator::MleTf) => Criterion::Sukl,
        };
        let (report, fits) =
            tune_cell(&y, family, &d, &basis, &grid, criterion, &cfg, &spec, estimator)?;
        let chosen = &fits[report.selected];
        let lambda = report.rows[report.selected].lambda1;

        // map the fitted object back to both scales
        let eps = 1.0 / (4.0 * n as f64);
        let (theta_hat, beta_hat): (Vec<f64>, Vec<f64>) = match estimator {
            Estimator::MleTf => (chosen.theta_hat.clone(), chosen.beta_hat.clone()),
            Estimator::MeanTf => {
                let beta = chosen.beta_hat.clone();
                let theta = beta
                    .iter()
                    .map(|&bi| family.link_inverse_clamped(bi, eps))
                    .collect();
                (theta, beta)
            }
        };
        let runtime = start.elapsed().as_secs_f64();

        let (metric, value) = match sc.smooth_target {
            SmoothTarget::Mean => {
                let mse = beta_hat
                    .iter()
                    .zip(&beta_star)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / n as f64;
                (MetricKind::Mse, mse)
            }
            SmoothTarget::Natural => {
                (MetricKind::KlBar, kl_bar(family, &theta_star, &theta_hat)?)
            }
        };
        rows.push(ScenarioRow {
            n,
            rep,
            estimator: estimator.name(),
            metric,
            value,
            selected_lambda: lambda,
            runtime_seconds: runtime,
            converged: chosen.converged,
        });
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
fn tune_cell(
    y: &[f64],
    family: Family,
    d: &crate::lattice::SparseOperator,
    basis: &crate::lattice::NullSpaceBasis,
    grid: &[f64],
    criterion: Criterion,
    cfg: &FitConfig,
    spec: &LatticeSpec,
    estimator: Estimator,
) -> Result<(RiskReport, Vec<crate::solver::FitResult>)> {
    let settings = TuneSettings {
        spec: Some(spec),
        estimator,
        ..TuneSettings::default()
    };
    // Poisson at larger n: swap PUKL's exact downdate sum for the
    // subsampled estimator to bound the re-solve count
    if criterion == Criterion::Pukl && y.iter().filter(|&&v| v > 0.0).count() > 200 {
        return tune_pukl_subsampled(y, family, d, basis, grid, cfg, &settings);
    }
    tune(y, family, d, basis, grid, &[0.0], criterion, cfg, &settings)
}

fn tune_pukl_subsampled(
    y: &[f64],
    family: Family,
    d: &crate::lattice::SparseOperator,
    basis: &crate::lattice::NullSpaceBasis,
    grid: &[f64],
    cfg: &FitConfig,
    settings: &TuneSettings,
) -> Result<(RiskReport, Vec<crate::solver::FitResult>)> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut warm: Option<WarmStart> = None;
    for &l1 in grid {
        let fit_cfg = FitConfig {
            lambda1: l1,
            lambda2: 0.0,
            ..cfg.clone()
        };
        let fit = fit_mle_tf_warm(y, family, d, basis, &fit_cfg, warm.as_ref())?;
        warm = Some(fit.warm_start());
        let refit = |yd: &[f64], w: Option<&WarmStart>| {
            fit_mle_tf_warm(yd, family, d, basis, &fit_cfg, w)
        };
        let value = pukl_subsampled(y, &fit, &refit, 128, 0xACC5)?;
        let active = crate::risk::active_rows_spec(
            settings.spec.expect("sim always passes a spec"),
            d,
            &fit.theta_hat,
            settings.active_tol,
        )?;
        let df = crate::risk::divergence_trace(family, &fit.theta_hat, &active, 0.0, basis)?;
        rows.push(crate::risk::RiskRow {
            lambda1: l1,
            lambda2: 0.0,
            value,
            df,
        });
        fits.push(fit);
    }
    let selected = rows
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.value.partial_cmp(&b.value).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok((
        RiskReport {
            criterion: "pukl-subsampled".to_string(),
            rows,
            selected,
        },
        fits,
    ))
}

/// Run every (n, rep) cell of a scenario; cells are independent and run in
/// parallel, gathered in deterministic (n, rep, estimator) order.
pub fn run_scenario(sc: &Scenario) -> Result<ScenarioResult> {
    sc.validate()?;
    let cells: Vec<(usize, usize)> = sc
        .n_grid
        .iter()
        .flat_map(|&n| (0..sc.replications).map(move |rep| (n, rep)))
        .collect();
    let outcomes: Vec<Result<Vec<ScenarioRow>>> = cells
        .par_iter()
        .map(|&(n, rep)| run_cell(sc, n, rep))
        .collect();
    let mut rows = Vec::new();
    for o in outcomes {
        rows.extend(o?);
    }
    Ok(ScenarioResult {
        scenario: sc.clone(),
        rows,
    })
}

/// One iteration-budget checkpoint of the degenerate demonstration.
#[derive(Clone, Debug, Serialize)]
pub struct DegenerateCheckpoint {
    pub max_iter: usize,
    pub sup_norm: f64,
    pub empirical_risk: f64,
    pub population_risk: f64,
    pub null_component_norm: f64,
    pub converged: bool,
    pub diverged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DegenerateBranch {
    pub lambda1: f64,
    pub lambda2: f64,
    pub checkpoints: Vec<DegenerateCheckpoint>,
    pub flagged_divergent: bool,
}

/// Report for the all-zero-Poisson demonstration: θ* = -2 log n · 1, data
/// conditioned on the all-zeros outcome, fitted with and without the
/// null-space penalty.
#[derive(Clone, Debug, Serialize)]
pub struct DegenerateReport {
    pub n: usize,
    pub theta_star_value: f64,
    pub psi_double_prime_at_star: f64,
    pub unpenalized: DegenerateBranch,
    pub penalized: DegenerateBranch,
    /// Minimizer of the 1-dim constant-direction problem e^c + λ₂ √n |c|
    /// (oracle for the penalized branch).
    pub constant_direction_optimum: f64,
}

pub fn degenerate_poisson_demo(n: usize, lambda2: f64) -> Result<DegenerateReport> {
    assert!(n >= 2);
    let nf = n as f64;
    let spec = LatticeSpec::chain(n, 0)?;
    let d = build_diff_lattice(&spec)?;
    let basis = polynomial_null_basis(&spec)?;
    let theta_star = vec![-2.0 * nf.ln(); n];
    let beta_star: Vec<f64> = theta_star
        .iter()
        .map(|&t| Family::Poisson.psi_prime(t))
        .collect();
    let y = vec![0.0; n]; // conditioned on the all-zeros event

    let lambda1 = 1e-20; // any λ1 ≥ 0 exhibits the drift; small makes it fast
    let budgets = [500usize, 5_000, 50_000, 200_000];

    let run_branch =
        |l2: f64, divergence_bound: f64, rho: Option<f64>| -> Result<DegenerateBranch> {
            let mut checkpoints = Vec::new();
            for &budget in &budgets {
                let mut cfg = FitConfig::with_lambda(lambda1, l2).tolerances(1e-10, 1e-9);
                cfg.max_iter = budget;
                cfg.divergence_bound = divergence_bound;
                cfg.rho = rho;
                let fit = fit_mle_tf(&y, Family::Poisson, &d, &basis, &cfg)?;
                checkpoints.push(DegenerateCheckpoint {
                    max_iter: budget,
                    sup_norm: fit.theta_hat.iter().fold(0f64, |a, &b| a.max(b.abs())),
                    empirical_risk: empirical_risk(Family::Poisson, &fit.theta_hat, &y)?,
                    population_risk: population_risk(
                        Family::Poisson,
                        &fit.theta_hat,
                        &beta_star,
                    )?,
                    null_component_norm: basis.projection_norm(&fit.theta_hat) / nf.sqrt(),
                    converged: fit.converged,
                    diverged: fit.diverged,
                });
            }
            let flagged = checkpoints.iter().any(|c| c.diverged || c.sup_norm > 50.0);
            Ok(DegenerateBranch {
                lambda1,
                lambda2: l2,
                checkpoints,
                flagged_divergent: flagged,
            })
        };

    let unpenalized = run_branch(0.0, 50.0, None)?;
    let penalized = run_branch(lambda2, 1e6, Some(1.0))?;

    // constant-direction oracle: the subdifferential of e^c + λ₂√n |c| pins
    // c at 0 when λ₂√n ≥ 1, otherwise the optimum is at e^c = λ₂√n
    let pin = lambda2 * nf.sqrt();
    let constant_direction_optimum = if pin >= 1.0 { 0.0 } else { pin.ln() };

    Ok(DegenerateReport {
        n,
        theta_star_value: -2.0 * nf.ln(),
        psi_double_prime_at_star: Family::Poisson.psi_double_prime(-2.0 * nf.ln()),
        unpenalized,
        penalized,
        constant_direction_optimum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vshape_values() {
        let n = 104;
        let f = vshape_signal(n);
        let nf = n as f64;
        assert_relative_eq!(f[0], 1.0 / nf + (1.0 - 2.0 / nf) * 0.5, epsilon = 1e-15);
        assert_relative_eq!(f[n - 1], f[0], epsilon = 1e-15);
        let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= 1.0 / nf && min < 1.0 / nf + 0.01);

        // odd n samples the kink exactly: f(1/2) = 1/n
        let odd = vshape_signal(101);
        assert_relative_eq!(odd[50], 1.0 / 101.0, epsilon = 1e-15);
    }

    #[test]
    fn vshape_tv_scaling() {
        // ||D^{(2)} f_n||_1 <= c / n across sizes with one fitted constant
        let mut cs = Vec::new();
        for &n in &[50usize, 100, 200, 400, 1000] {
            let spec = LatticeSpec::chain(n, 1).unwrap();
            let d = build_diff_lattice(&spec).unwrap();
            let tv: f64 = d.matvec(&vshape_signal(n)).iter().map(|v| v.abs()).sum();
            cs.push(tv * n as f64);
        }
        let c = cs[0] * 1.2;
        for &v in &cs {
            assert!(v <= c, "TV * n = {v} exceeds fitted constant {c}");
        }
    }

    #[test]
    fn poisson_shift_values() {
        let n = 104;
        let g = poisson_shift_signal(n);
        let f = vshape_signal(n);
        let nf = n as f64;
        for (&gi, &fi) in g.iter().zip(&f) {
            assert_relative_eq!(gi, 0.5 - fi + nf.ln(), epsilon = 1e-14);
        }
        // range preserved (affine in f)
        let (gmin, gmax) = g
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (fmin, fmax) = f
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert_relative_eq!(gmax - gmin, fmax - fmin, epsilon = 1e-12);
    }

    #[test]
    fn default_grid_endpoints_and_content() {
        let g = default_n_grid();
        assert_eq!(*g.first().unwrap(), 20);
        assert_eq!(*g.last().unwrap(), 1000);
        assert!(g.contains(&104), "figure grid size present: {g:?}");
        assert!(g.len() <= 20);
    }

    #[test]
    fn true_parameters_respect_domains() {
        for (family, target, signal) in [
            (Family::Exponential, SmoothTarget::Mean, SignalKind::VShape),
            (Family::Exponential, SmoothTarget::Natural, SignalKind::VShape),
            (Family::Poisson, SmoothTarget::Mean, SignalKind::PoissonShift),
            (Family::Poisson, SmoothTarget::Natural, SignalKind::PoissonShift),
        ] {
            let (theta, beta) = true_parameters(family, target, signal, 64);
            for (&t, &b) in theta.iter().zip(&beta) {
                assert!(family.contains(t), "{family}: theta {t} out of domain");
                assert_relative_eq!(family.psi_prime(t), b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_scenario_estimators_coincide() {
        let sc = Scenario {
            family: "gaussian".into(),
            smooth_target: SmoothTarget::Mean,
            signal: SignalKind::VShape,
            n_grid: vec![40],
            replications: 2,
            k: 0,
            seed: 11,
        };
        let result = run_scenario(&sc).unwrap();
        assert_eq!(result.rows.len(), 4);
        for rep in 0..2 {
            let vals: Vec<f64> = result
                .rows
                .iter()
                .filter(|r| r.rep == rep)
                .map(|r| r.value)
                .collect();
            assert!(
                (vals[0] - vals[1]).abs() <= 1e-6,
                "gaussian estimators must coincide: {vals:?}"
            );
        }
    }

    #[test]
    fn scenario_rows_are_deterministic() {
        let sc = Scenario {
            family: "poisson".into(),
            smooth_target: SmoothTarget::Natural,
            signal: SignalKind::PoissonShift,
            n_grid: vec![24],
            replications: 2,
            k: 0,
            seed: 5,
        };
        let a = run_scenario(&sc).unwrap();
        let b = run_scenario(&sc).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.n, rb.n);
            assert_eq!(ra.rep, rb.rep);
            assert_eq!(ra.estimator, rb.estimator);
            assert_eq!(
                ra.value.to_bits(),
                rb.value.to_bits(),
                "values must be bit-identical"
            );
            assert_eq!(ra.selected_lambda.to_bits(), rb.selected_lambda.to_bits());
        }
    }

    #[test]
    fn metrics_are_nonnegative() {
        let sc = Scenario {
            family: "exponential".into(),
            smooth_target: SmoothTarget::Natural,
            signal: SignalKind::VShape,
            n_grid: vec![30],
            replications: 2,
            k: 0,
            seed: 3,
        };
        let result = run_scenario(&sc).unwrap();
        for row in &result.rows {
            assert!(row.value >= 0.0);
            assert_eq!(row.metric, MetricKind::KlBar);
        }
    }

    #[test]
    fn degenerate_demo_branches() {
        let report = degenerate_poisson_demo(60, 0.5).unwrap();
        let nf = 60f64;
        // ψ''(θ*) = n^{-2}
        assert_relative_eq!(
            report.psi_double_prime_at_star,
            nf.powi(-2),
            max_relative = 1e-12
        );
        // unpenalized branch: sup norm passes 50 and is flagged; empirical
        // risk collapses while population risk grows along the trajectory
        assert!(report.unpenalized.flagged_divergent);
        let last = report.unpenalized.checkpoints.last().unwrap();
        assert!(last.sup_norm > 50.0);
        let first = report.unpenalized.checkpoints.first().unwrap();
        assert!(last.empirical_risk <= first.empirical_risk + 1e-12);
        assert!(last.population_risk >= first.population_risk - 1e-12);
        // penalized branch: converges with bounded null component
        assert!(!report.penalized.flagged_divergent);
        let pinned = report.penalized.checkpoints.last().unwrap();
        assert!(pinned.converged);
        assert!(pinned.null_component_norm <= 2.0 * nf.ln() + 1.0);
        // oracle: λ2 √n = 0.5 √60 ≈ 3.9 ≥ 1 pins the constant at zero
        assert_eq!(report.constant_direction_optimum, 0.0);
        assert!(pinned.null_component_norm < 1e-4);
    }

    #[test]
    fn preset_names_resolve() {
        for name in [
            "fig2-exp-mean",
            "fig2-exp-natural",
            "fig2-pois-mean",
            "fig2-pois-natural",
        ] {
            let sc = preset(name).unwrap();
            assert_eq!(sc.k, 1);
            assert_eq!(sc.replications, 10);
        }
        assert!(preset("nonsense").is_none());
    }
}
