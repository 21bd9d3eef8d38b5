//! Multinomial-logit likelihood, analytic derivatives, and the Newton
//! solver producing coefficient estimates with fit statistics.
//!
//! Utilities are linear in three fixed variables — major-station flag,
//! log restaurant count, group travel cost — plus any per-alternative
//! sampling-correction offset carried by the choice set. The
//! log-likelihood is globally concave, so Newton iterations from zero
//! with a step-halving line search find the unique optimum whenever the
//! data identifies one.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impedance::ImpedanceKind;
use crate::sampling::{ChoiceSet, FEATURE_NAMES, N_FEATURES};

/// Number of estimated coefficients.
pub const N_COEFFS: usize = N_FEATURES;

/// Which model is being estimated: the variable list is fixed, the
/// impedance aggregation behind the cost column varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub impedance_kind: ImpedanceKind,
}

impl ModelSpec {
    pub fn new(impedance_kind: ImpedanceKind) -> Self {
        ModelSpec { impedance_kind }
    }

    pub fn n_coeffs(&self) -> usize {
        N_COEFFS
    }

    /// Coefficient names in vector order.
    pub fn variable_names(&self) -> [&'static str; N_COEFFS] {
        FEATURE_NAMES
    }
}

/// Coefficient vector in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn zeros() -> Self {
        Coefficients(vec![0.0; N_COEFFS])
    }

    pub fn new(beta: Vec<f64>) -> Result<Self> {
        if beta.len() != N_COEFFS {
            return Err(Error::DimensionMismatch {
                expected: N_COEFFS,
                got: beta.len(),
            });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Degenerate("non-finite coefficient".into()));
        }
        Ok(Coefficients(beta))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Systematic utility: dot product of coefficients and a feature row.
pub fn utility(beta: &Coefficients, features: &[f64]) -> Result<f64> {
    if features.len() != beta.0.len() {
        return Err(Error::DimensionMismatch {
            expected: beta.0.len(),
            got: features.len(),
        });
    }
    Ok(beta.0.iter().zip(features).map(|(b, x)| b * x).sum())
}

/// Softmax with max-subtraction; sums to one for any finite input.
pub fn choice_probabilities(utilities: &[f64]) -> Vec<f64> {
    if utilities.is_empty() {
        return Vec::new();
    }
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = utilities.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    probs
}

/// Analytic first and second derivatives of the log-likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LlDerivatives {
    pub gradient: [f64; N_COEFFS],
    /// Negative semidefinite Hessian.
    pub hessian: [[f64; N_COEFFS]; N_COEFFS],
}

/// Log-likelihood over choice sets, with derivatives on request.
///
/// Per situation: `ll = V_chosen − logsumexp(V)`,
/// `gradient = x_chosen − Σ p_i x_i`, and
/// `hessian = −Σ p_i (x_i − x̄)(x_i − x̄)ᵀ` with `x̄ = Σ p_i x_i`.
/// `V_i` includes each alternative's fixed offset.
pub fn log_likelihood(
    beta: &Coefficients,
    sets: &[ChoiceSet],
    with_derivatives: bool,
) -> Result<(f64, Option<LlDerivatives>)> {
    if sets.is_empty() {
        return Err(Error::EmptyInput("log-likelihood needs choice sets"));
    }
    let mut ll = 0.0;
    let mut gradient = [0.0; N_COEFFS];
    let mut hessian = [[0.0; N_COEFFS]; N_COEFFS];
    let mut utilities: Vec<f64> = Vec::new();
    for set in sets {
        if set.alternatives.iter().filter(|a| a.chosen).count() != 1 {
            return Err(Error::Validation(format!(
                "situation {}: choice set must have exactly one chosen alternative",
                set.situation
            )));
        }
        utilities.clear();
        for alt in &set.alternatives {
            utilities.push(utility(beta, &alt.features)? + alt.offset);
        }
        let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + utilities.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let chosen = set.chosen_index();
        ll += utilities[chosen] - lse;

        if with_derivatives {
            let probs: Vec<f64> = utilities.iter().map(|v| (v - lse).exp()).collect();
            let mut mean = [0.0; N_COEFFS];
            for (alt, p) in set.alternatives.iter().zip(&probs) {
                for (m, x) in mean.iter_mut().zip(&alt.features) {
                    *m += p * x;
                }
            }
            for (g, (x, m)) in gradient
                .iter_mut()
                .zip(set.alternatives[chosen].features.iter().zip(&mean))
            {
                *g += x - m;
            }
            for (alt, p) in set.alternatives.iter().zip(&probs) {
                let mut centered = [0.0; N_COEFFS];
                for (c, (x, m)) in centered.iter_mut().zip(alt.features.iter().zip(&mean)) {
                    *c = x - m;
                }
                for i in 0..N_COEFFS {
                    for j in 0..N_COEFFS {
                        hessian[i][j] -= p * centered[i] * centered[j];
                    }
                }
            }
        }
    }
    let derivatives = with_derivatives.then_some(LlDerivatives { gradient, hessian });
    Ok((ll, derivatives))
}

/// Solver knobs; the defaults match the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Starting point; zero when absent.
    pub init: Option<Coefficients>,
    /// Convergence threshold on the gradient max-norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            init: None,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub spec: ModelSpec,
    pub beta: Coefficients,
    /// Log-likelihood at the returned coefficients.
    pub ll: f64,
    /// Log-likelihood at zero coefficients (offsets included).
    pub ll0: f64,
    pub rho2: f64,
    pub adj_rho2: f64,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximize the MNL likelihood by Newton's method with step halving.
///
/// Runs until the gradient max-norm drops below `tol` or `max_iter` is
/// hit; an exhausted iteration budget returns the best iterate with
/// `converged = false` rather than an error. A singular Hessian gets
/// one ridge retry (1e-8 on the diagonal) and is an error after that.
pub fn estimate(
    sets: &[ChoiceSet],
    spec: &ModelSpec,
    options: &EstimateOptions,
) -> Result<EstimationResult> {
    let mut beta = match &options.init {
        Some(init) => Coefficients::new(init.0.clone())?,
        None => Coefficients::zeros(),
    };
    let (mut ll, d) = log_likelihood(&beta, sets, true)?;
    let mut derivatives = d.unwrap();
    let mut iterations = 0;
    let mut converged = max_abs(&derivatives.gradient) < options.tol;

    while !converged && iterations < options.max_iter {
        let direction = newton_direction(&derivatives)?;
        iterations += 1;
        // Halve the step until the likelihood improves. A candidate
        // whose gradient already meets the tolerance is accepted even
        // when the improvement is below floating-point resolution —
        // that is the terminal step of a quadratically convergent run.
        let mut scale = 1.0;
        let mut accepted = false;
        while scale >= 1e-12 {
            let candidate = Coefficients(
                beta.0
                    .iter()
                    .zip(&direction)
                    .map(|(b, d)| b + scale * d)
                    .collect(),
            );
            let (candidate_ll, cd) = log_likelihood(&candidate, sets, true)?;
            let cd = cd.unwrap();
            let candidate_grad = max_abs(&cd.gradient);
            if candidate_grad < options.tol || candidate_ll > ll {
                beta = candidate;
                ll = candidate_ll;
                derivatives = cd;
                converged = candidate_grad < options.tol;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            // Flat to machine precision without meeting the tolerance.
            break;
        }
    }

    let (ll0, _) = log_likelihood(&Coefficients::zeros(), sets, false)?;
    let (rho2, adj_rho2) = fit_statistics(ll, ll0, N_COEFFS, sets.len())?;
    Ok(EstimationResult {
        spec: *spec,
        beta,
        ll,
        ll0,
        rho2,
        adj_rho2,
        n_obs: sets.len(),
        converged,
        iterations,
    })
}

/// Likelihood-ratio fit indices `rho2 = 1 − ll/ll0` and
/// `adj_rho2 = 1 − (ll − k)/ll0`.
pub fn fit_statistics(ll: f64, ll0: f64, k: usize, n_obs: usize) -> Result<(f64, f64)> {
    if !(ll0.is_finite() && ll0 < 0.0) {
        return Err(Error::Degenerate(format!(
            "null log-likelihood must be finite and negative, got {ll0}"
        )));
    }
    if n_obs == 0 {
        return Err(Error::EmptyInput("fit statistics need observations"));
    }
    let rho2 = 1.0 - ll / ll0;
    let adj_rho2 = 1.0 - (ll - k as f64) / ll0;
    Ok((rho2, adj_rho2))
}

fn max_abs(v: &[f64; N_COEFFS]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Solve `(−H) d = g` for the ascent direction, retrying once with a
/// small ridge when the (negated) Hessian is not positive definite.
fn newton_direction(d: &LlDerivatives) -> Result<[f64; N_COEFFS]> {
    let gradient = Vector3::from_column_slice(&d.gradient);
    let mut neg_hessian = Matrix3::zeros();
    for i in 0..N_COEFFS {
        for j in 0..N_COEFFS {
            neg_hessian[(i, j)] = -d.hessian[i][j];
        }
    }
    let solution = neg_hessian.cholesky().map(|c| c.solve(&gradient)).or_else(|| {
        let ridged = neg_hessian + Matrix3::identity() * 1e-8;
        ridged.cholesky().map(|c| c.solve(&gradient))
    });
    match solution {
        Some(step) => Ok([step[0], step[1], step[2]]),
        None => Err(Error::SingularHessian(
            "collinear features; likelihood has no unique maximum".into(),
        )),
    }
}
