//! Scalar exponential-family primitives: log-partition derivatives, link
//! inversion, KL divergence, prox-equation solves, sub-exponential
//! parameters, sampling, and empirical/population risks.
//!
//! Families are parameterized so the density is h(y) exp{y θ - ψ(θ)} in the
//! natural statistic y. For the chi-squared family the natural statistic is
//! the log of the raw observation; everything here operates on that scale
//! and `sufficient_stat` performs the transform.

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::special::{digamma, digamma_inv, ln_gamma, trigamma};

const LN_2: f64 = std::f64::consts::LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Gaussian,
    Poisson,
    Exponential,
    Binomial,
    ChiSquared,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sub-exponential MGF parameters (ν², b); b = 0 encodes sub-Gaussian tails.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubExpParams {
    pub nu_sq: f64,
    pub b: f64,
}

impl Family {
    pub fn from_name(name: &str) -> Result<Family> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "poisson" => Ok(Family::Poisson),
            "exponential" => Ok(Family::Exponential),
            "binomial" | "bernoulli" => Ok(Family::Binomial),
            "chisq" | "chi2" | "chi-squared" => Ok(Family::ChiSquared),
            other => Err(Error::Parse {
                what: "family name",
                detail: format!("unknown family {other:?}"),
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Poisson => "poisson",
            Family::Exponential => "exponential",
            Family::Binomial => "binomial",
            Family::ChiSquared => "chisq",
        }
    }

    /// Open natural-parameter domain Θ.
    pub fn theta_domain(&self) -> (f64, f64) {
        match self {
            Family::Gaussian | Family::Poisson | Family::Binomial => {
                (f64::NEG_INFINITY, f64::INFINITY)
            }
            Family::Exponential => (f64::NEG_INFINITY, 0.0),
            Family::ChiSquared => (-1.0, f64::INFINITY),
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        let (lo, hi) = self.theta_domain();
        theta.is_finite() && theta > lo && theta < hi
    }

    pub fn check_theta(&self, theta: f64) -> Result<()> {
        if self.contains(theta) {
            Ok(())
        } else {
            let (lo, hi) = self.theta_domain();
            Err(Error::DomainError {
                family: *self,
                theta,
                lo,
                hi,
            })
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Family::Poisson | Family::Binomial)
    }

    /// Log-partition ψ(θ).
    pub fn psi(&self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 0.5 * theta * theta,
            Family::Poisson => theta.exp(),
            Family::Exponential => -(-theta).ln(),
            Family::Binomial => {
                // log(1 + e^x), overflow-safe
                if theta > 0.0 {
                    theta + (-theta).exp().ln_1p()
                } else {
                    theta.exp().ln_1p()
                }
            }
            Family::ChiSquared => ln_gamma(theta + 1.0) + (theta + 1.0) * LN_2,
        }
    }

    /// Mean map ψ'(θ).
    pub fn psi_prime(&self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => theta,
            Family::Poisson => theta.exp(),
            Family::Exponential => -1.0 / theta,
            Family::Binomial => 1.0 / (1.0 + (-theta).exp()),
            Family::ChiSquared => digamma(theta + 1.0) + LN_2,
        }
    }

    /// Variance map ψ''(θ).
    pub fn psi_double_prime(&self, theta: f64) -> f64 {
        match self {
            Family::Gaussian => 1.0,
            Family::Poisson => theta.exp(),
            Family::Exponential => 1.0 / (theta * theta),
            Family::Binomial => {
                let p = self.psi_prime(theta);
                p * (1.0 - p)
            }
            Family::ChiSquared => trigamma(theta + 1.0),
        }
    }

    /// θ with ψ'(θ) = y. Errors when y sits on the mean-domain boundary
    /// (e.g. Poisson y = 0 maps to θ = -∞); callers that need a finite warm
    /// start should use [`Family::link_inverse_clamped`].
    pub fn link_inverse(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::BoundaryError {
                family: *self,
                value: y,
            });
        }
        match self {
            Family::Gaussian => Ok(y),
            Family::Poisson => {
                if y > 0.0 {
                    Ok(y.ln())
                } else {
                    Err(Error::BoundaryError {
                        family: *self,
                        value: y,
                    })
                }
            }
            Family::Exponential => {
                if y > 0.0 {
                    Ok(-1.0 / y)
                } else {
                    Err(Error::BoundaryError {
                        family: *self,
                        value: y,
                    })
                }
            }
            Family::Binomial => {
                if y > 0.0 && y < 1.0 {
                    Ok((y / (1.0 - y)).ln())
                } else {
                    Err(Error::BoundaryError {
                        family: *self,
                        value: y,
                    })
                }
            }
            Family::ChiSquared => Ok(digamma_inv(y - LN_2) - 1.0),
        }
    }

    /// Link inversion after clamping y into the interior of the mean domain
    /// by `eps`; used for warm starts at boundary data.
    pub fn link_inverse_clamped(&self, y: f64, eps: f64) -> f64 {
        let y = match self {
            Family::Gaussian | Family::ChiSquared => y,
            Family::Poisson | Family::Exponential => y.max(eps),
            Family::Binomial => y.clamp(eps, 1.0 - eps),
        };
        self.link_inverse(y)
            .expect("clamped mean is interior by construction")
    }

    /// (d/dy h(y)) / h(y) on the natural-statistic scale; only continuous
    /// families support this (Poisson and Binomial must use PUKL instead).
    pub fn h_score(&self, y: f64) -> Result<f64> {
        match self {
            Family::Gaussian => Ok(-y),
            Family::Exponential => {
                if y > 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::BoundaryError {
                        family: *self,
                        value: y,
                    })
                }
            }
            // density in the log statistic y = ln x has h(y) = exp{y - e^y/2}
            Family::ChiSquared => Ok(1.0 - 0.5 * y.exp()),
            Family::Poisson | Family::Binomial => Err(Error::UnsupportedFamily {
                family: *self,
                what: "h-score (discrete base measure)",
            }),
        }
    }

    /// Sub-exponential parameters of the centered observation at θ.
    pub fn subexp_params(&self, theta: f64) -> Result<SubExpParams> {
        self.check_theta(theta)?;
        Ok(match self {
            Family::Gaussian => SubExpParams { nu_sq: 1.0, b: 0.0 },
            Family::Poisson => {
                let mean = theta.exp();
                SubExpParams {
                    nu_sq: 2.0 * mean,
                    b: 0.55,
                }
            }
            Family::Exponential => {
                let mean = -1.0 / theta;
                SubExpParams {
                    nu_sq: 4.0 * mean * mean * (4.0f64 / std::f64::consts::E).ln(),
                    b: 2.0 * mean,
                }
            }
            Family::Binomial => SubExpParams {
                nu_sq: 0.25,
                b: 0.0,
            },
            Family::ChiSquared => {
                // raw chi-squared mean k = 2(θ+1)
                let k = 2.0 * (theta + 1.0);
                SubExpParams { nu_sq: 4.0 * k, b: 4.0 }
            }
        })
    }

    /// Natural statistic of a raw observation (log for chi-squared,
    /// identity otherwise).
    pub fn sufficient_stat(&self, raw: f64) -> Result<f64> {
        match self {
            Family::ChiSquared => {
                if raw > 0.0 {
                    Ok(raw.ln())
                } else {
                    Err(Error::BoundaryError {
                        family: *self,
                        value: raw,
                    })
                }
            }
            _ => Ok(raw),
        }
    }

    /// The interval Θ(K) = {θ : ψ''(θ) ≥ 1/K} used by the constrained
    /// estimator; returned as (lo, hi) with infinities where unbounded.
    pub fn theta_box(&self, k: f64) -> Result<(f64, f64)> {
        assert!(k > 0.0);
        match self {
            Family::Gaussian => Ok((f64::NEG_INFINITY, f64::INFINITY)),
            Family::Poisson => Ok((-k.ln(), f64::INFINITY)),
            Family::Exponential => Ok((-k.sqrt(), -f64::MIN_POSITIVE)),
            Family::Binomial => {
                if k < 4.0 {
                    return Err(Error::EmptyConstraintSet { family: *self, k });
                }
                let disc = (k * k - 4.0 * k).sqrt();
                let s_lo = (k - 2.0 - disc) / 2.0;
                let s_hi = (k - 2.0 + disc) / 2.0;
                Ok((s_lo.ln(), s_hi.ln()))
            }
            Family::ChiSquared => {
                // trigamma is strictly decreasing on (0, inf)
                let target = 1.0 / k;
                let mut lo = 1e-12;
                let mut hi = 1.0;
                while trigamma(hi) > target {
                    hi *= 2.0;
                    if hi > 1e15 {
                        break;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if trigamma(mid) > target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok((-1.0 + 1e-12, 0.5 * (lo + hi) - 1.0))
            }
        }
    }

    /// Independent draws of the natural statistic with parameters `theta`,
    /// deterministic given the seed. Coordinate i consumes only stream i, so
    /// draws are order-independent.
    pub fn sample(&self, theta: &[f64], seed: u64) -> Result<Vec<f64>> {
        for &t in theta {
            self.check_theta(t)?;
        }
        let mut out = vec![0.0; theta.len()];
        for (i, (slot, &t)) in out.iter_mut().zip(theta).enumerate() {
            let mut rng = CounterRng::substream(seed, &[i as u64]);
            *slot = match self {
                Family::Gaussian => t + rng.next_normal(),
                Family::Poisson => rng.next_poisson(t.exp()) as f64,
                Family::Exponential => (-1.0 / t) * rng.next_exp(),
                Family::Binomial => {
                    if rng.next_f64() < self.psi_prime(t) {
                        1.0
                    } else {
                        0.0
                    }
                }
                Family::ChiSquared => {
                    let shape = t + 1.0; // raw dof k = 2(θ+1), Gamma(k/2, scale 2)
                    (2.0 * rng.next_gamma(shape)).ln()
                }
            };
        }
        Ok(out)
    }
}

/// (ψ, ψ', ψ'') at θ.
pub fn psi_bundle(family: Family, theta: f64) -> Result<(f64, f64, f64)> {
    family.check_theta(theta)?;
    Ok((
        family.psi(theta),
        family.psi_prime(theta),
        family.psi_double_prime(theta),
    ))
}

/// The unique root of ψ'(x) + μ x = b over Θ (closed forms where available,
/// otherwise safeguarded bracketed Newton to |ψ'(x)+μx-b| ≤ 1e-12 (1+|b|)).
pub fn scalar_prox_solve(family: Family, mu: f64, b: f64) -> f64 {
    debug_assert!(mu > 0.0);
    match family {
        Family::Gaussian => b / (1.0 + mu),
        Family::Exponential => {
            // negative root of mu x^2 - b x - 1 = 0; rationalized for b > 0
            // where the direct form cancels catastrophically
            let disc = (b * b + 4.0 * mu).sqrt();
            if b > 0.0 {
                -2.0 / (b + disc)
            } else {
                (b - disc) / (2.0 * mu)
            }
        }
        Family::Poisson => {
            // the root obeys x* <= ln b for b >= 1 (and x* <= 0 otherwise),
            // x* <= b/mu always, and x* >= (b-1)/mu for b <= 1
            let f = |x: f64| x.exp() + mu * x - b;
            let fp = |x: f64| x.exp() + mu;
            let (lo, hi) = if b >= 1.0 {
                (0.0, b.ln().min(b / mu))
            } else {
                ((b - 1.0) / mu, 0.0)
            };
            newton_bracketed(f, fp, lo, hi, b)
        }
        Family::Binomial => {
            // f((b-1)/mu) = sigma - 1 <= 0 and f(b/mu) = sigma >= 0
            let f = |x: f64| Family::Binomial.psi_prime(x) + mu * x - b;
            let fp = |x: f64| Family::Binomial.psi_double_prime(x) + mu;
            newton_bracketed(f, fp, (b - 1.0) / mu, b / mu, b)
        }
        Family::ChiSquared => {
            let f = |x: f64| digamma(x + 1.0) + LN_2 + mu * x - b;
            let fp = |x: f64| trigamma(x + 1.0) + mu;
            let mut hi = b.max(0.0) / mu + 1.0;
            while f(hi) < 0.0 {
                hi = 2.0 * hi + 1.0;
            }
            let mut delta = 0.5f64;
            while f(-1.0 + delta) > 0.0 {
                delta *= 0.25;
                if delta < 1e-300 {
                    break;
                }
            }
            newton_bracketed(f, fp, -1.0 + delta, hi, b)
        }
    }
}

/// Newton iteration limited to a sign-changing bracket, falling back to
/// bisection whenever a step leaves the bracket.
fn newton_bracketed(
    f: impl Fn(f64) -> f64,
    fp: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    b: f64,
) -> f64 {
    let tol = 1e-12 * (1.0 + b.abs());
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx.abs() <= tol {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = fp(x);
        let step = fx / d;
        let cand = x - step;
        x = if cand.is_finite() && cand > lo && cand < hi {
            cand
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * (1.0 + x.abs()) {
            return x;
        }
    }
    x
}

/// KL divergence between parameter vectors of the same family:
/// Σ_i [ψ(θ1_i) - ψ(θ0_i) - (θ1_i - θ0_i) ψ'(θ0_i)]  (always ≥ 0).
pub fn kl_divergence(family: Family, theta0: &[f64], theta1: &[f64]) -> Result<f64> {
    if theta0.len() != theta1.len() {
        return Err(Error::LengthMismatch {
            expected: theta0.len(),
            got: theta1.len(),
        });
    }
    let mut total = 0.0;
    for (&a, &b) in theta0.iter().zip(theta1) {
        family.check_theta(a)?;
        family.check_theta(b)?;
        total += family.psi(b) - family.psi(a) - (b - a) * family.psi_prime(a);
    }
    Ok(total.max(0.0))
}

/// KL divergence per coordinate.
pub fn kl_bar(family: Family, theta0: &[f64], theta1: &[f64]) -> Result<f64> {
    Ok(kl_divergence(family, theta0, theta1)? / theta0.len().max(1) as f64)
}

/// Empirical risk R_n(θ) = (1/n) Σ [ψ(θ_i) - y_i θ_i].
pub fn empirical_risk(family: Family, theta: &[f64], y: &[f64]) -> Result<f64> {
    if theta.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: theta.len(),
            got: y.len(),
        });
    }
    let mut total = 0.0;
    for (&t, &yi) in theta.iter().zip(y) {
        family.check_theta(t)?;
        total += family.psi(t) - yi * t;
    }
    Ok(total / theta.len() as f64)
}

/// Population risk R(θ) = (1/n) Σ [ψ(θ_i) - β*_i θ_i] with β* the true mean.
pub fn population_risk(family: Family, theta: &[f64], beta_star: &[f64]) -> Result<f64> {
    empirical_risk(family, theta, beta_star)
}
