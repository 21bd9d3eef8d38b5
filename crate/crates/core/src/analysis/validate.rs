//! Out-of-sample validation: seeded k-fold cross-validation with the
//! percent-correct and fitting-factor metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{CliqueId, Dataset, ZoneId};
use crate::error::{Error, Result};
use crate::estimator::{
    Coefficients, EstimateOptions, ModelSpec, choice_probabilities, estimate, utility,
};
use crate::impedance::{ImpedanceTable, ModeAssignment, TravelTimeProvider};
use crate::rng;
use crate::sampling::{ChoiceSet, SamplingConfig, build_choice_sets};

use rand::seq::SliceRandom;

/// Cross-validation controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    /// Seed for the fold partition (choice sets use `sampling.rng_seed`).
    pub rng_seed: u64,
    pub sampling: SamplingConfig,
    /// Partition whole cliques instead of individual situations, so a
    /// clique's situations never straddle the train/test boundary.
    pub clique_folds: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            rng_seed: 0,
            sampling: SamplingConfig::default(),
            clique_folds: false,
        }
    }
}

/// Held-out metrics for one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub n_test: usize,
    pub percent_correct: f64,
    pub fitting_factor: f64,
}

/// Cross-validation output: per-fold records and fold-mean metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spec: ModelSpec,
    pub clique_folds: bool,
    pub folds: Vec<FoldRecord>,
    /// Mean over folds of the share of situations whose
    /// highest-probability zone is the chosen one.
    pub percent_correct: f64,
    /// Mean over folds of the average predicted probability of the
    /// chosen alternative, in percent.
    pub fitting_factor: f64,
}

/// Share of situations predicted exactly right, in percent. Inputs are
/// parallel sequences of predicted and observed zones.
pub fn percent_correct(predicted: &[ZoneId], chosen: &[ZoneId]) -> Result<f64> {
    if predicted.len() != chosen.len() {
        return Err(Error::DimensionMismatch {
            expected: chosen.len(),
            got: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput("percent-correct needs predictions"));
    }
    let correct = predicted.iter().zip(chosen).filter(|(p, c)| p == c).count();
    Ok(100.0 * correct as f64 / predicted.len() as f64)
}

/// Mean predicted probability of the chosen alternative, in percent.
///
/// The mean uses compensated summation so that a uniform J-alternative
/// model scores exactly 100/J regardless of how many situations there
/// are.
pub fn fitting_factor(chosen_probabilities: &[f64]) -> Result<f64> {
    if chosen_probabilities.is_empty() {
        return Err(Error::EmptyInput("fitting factor needs probabilities"));
    }
    if chosen_probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Validation(
            "fitting factor input outside [0, 1]".into(),
        ));
    }
    let sum = compensated_sum(chosen_probabilities);
    Ok(100.0 * (sum / chosen_probabilities.len() as f64))
}

/// Neumaier-compensated sum: the running error of each addition is
/// accumulated separately and folded back in once at the end.
fn compensated_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut compensation = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            compensation += (sum - t) + v;
        } else {
            compensation += (v - t) + sum;
        }
        sum = t;
    }
    sum + compensation
}

/// The zone a fitted model predicts for one choice set: the
/// highest-probability alternative, ties broken by lowest zone id.
pub fn predicted_zone(beta: &Coefficients, set: &ChoiceSet) -> Result<ZoneId> {
    let mut best: Option<(f64, ZoneId)> = None;
    let utilities: Vec<f64> = set
        .alternatives
        .iter()
        .map(|alt| Ok(utility(beta, &alt.features)? + alt.offset))
        .collect::<Result<_>>()?;
    let probs = choice_probabilities(&utilities);
    for (alt, &p) in set.alternatives.iter().zip(&probs) {
        let better = match best {
            None => true,
            Some((best_p, best_zone)) => p > best_p || (p == best_p && alt.zone < best_zone),
        };
        if better {
            best = Some((p, alt.zone));
        }
    }
    Ok(best.expect("choice sets are non-empty").1)
}

/// Score fitted coefficients against choice sets: percent correct and
/// fitting factor over the whole collection.
pub fn score_choice_sets(beta: &Coefficients, sets: &[ChoiceSet]) -> Result<(f64, f64)> {
    if sets.is_empty() {
        return Err(Error::EmptyInput("scoring needs choice sets"));
    }
    let mut predicted = Vec::with_capacity(sets.len());
    let mut observed = Vec::with_capacity(sets.len());
    let mut chosen_probs = Vec::with_capacity(sets.len());
    for set in sets {
        predicted.push(predicted_zone(beta, set)?);
        observed.push(set.alternatives[set.chosen_index()].zone);
        let utilities: Vec<f64> = set
            .alternatives
            .iter()
            .map(|alt| Ok(utility(beta, &alt.features)? + alt.offset))
            .collect::<Result<_>>()?;
        let probs = choice_probabilities(&utilities);
        chosen_probs.push(probs[set.chosen_index()]);
    }
    Ok((
        percent_correct(&predicted, &observed)?,
        fitting_factor(&chosen_probs)?,
    ))
}

/// Assign each situation to a fold.
///
/// Situation-level folds shuffle situation indices; clique-level folds
/// shuffle cliques and place every situation with its clique. Either
/// way the folds partition the dataset into near-equal contiguous runs
/// of the shuffled order.
fn fold_assignment(dataset: &Dataset, config: &CvConfig) -> Result<Vec<usize>> {
    let n = dataset.situations.len();
    let mut shuffle_rng = rng::substream(config.rng_seed, rng::STREAM_FOLDS);
    let mut assignment = vec![0usize; n];
    if config.clique_folds {
        let mut clique_ids: Vec<CliqueId> = Vec::new();
        for situation in dataset.situations.iter() {
            if !clique_ids.contains(&situation.clique_id) {
                clique_ids.push(situation.clique_id);
            }
        }
        if clique_ids.len() < config.folds {
            return Err(Error::Validation(format!(
                "{} cliques cannot fill {} folds",
                clique_ids.len(),
                config.folds
            )));
        }
        clique_ids.shuffle(&mut shuffle_rng);
        let m = clique_ids.len();
        let mut fold_of_clique = std::collections::HashMap::new();
        for fold in 0..config.folds {
            for id in &clique_ids[fold * m / config.folds..(fold + 1) * m / config.folds] {
                fold_of_clique.insert(*id, fold);
            }
        }
        for (i, situation) in dataset.situations.iter().enumerate() {
            assignment[i] = fold_of_clique[&situation.clique_id];
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut shuffle_rng);
        for fold in 0..config.folds {
            for &i in &order[fold * n / config.folds..(fold + 1) * n / config.folds] {
                assignment[i] = fold;
            }
        }
    }
    Ok(assignment)
}

/// k-fold cross-validation: partition situations with a seeded shuffle,
/// fit on each training side, and score the held-out side.
///
/// Choice sets are built once for the full dataset (seeded by
/// `sampling.rng_seed`) and shared by all folds; only the estimation
/// side varies. Folds run in parallel. A fold whose fit does not
/// converge is still scored at the returned best iterate.
pub fn cross_validate(
    dataset: &Dataset,
    modes: &ModeAssignment,
    spec: &ModelSpec,
    provider: &TravelTimeProvider,
    config: &CvConfig,
) -> Result<ValidationReport> {
    if config.folds < 2 {
        return Err(Error::Validation(format!(
            "cross-validation needs at least 2 folds, got {}",
            config.folds
        )));
    }
    if dataset.situations.len() < config.folds {
        return Err(Error::Validation(format!(
            "{} situations cannot fill {} folds",
            dataset.situations.len(),
            config.folds
        )));
    }
    let table = ImpedanceTable::build(
        &dataset.situations,
        &dataset.zones,
        provider,
        modes,
        spec.impedance_kind,
    )?;
    let sets = build_choice_sets(&dataset.situations, &dataset.zones, &table, &config.sampling)?;
    let assignment = fold_assignment(dataset, config)?;

    let folds: Vec<FoldRecord> = (0..config.folds)
        .into_par_iter()
        .map(|fold| -> Result<FoldRecord> {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (set, &f) in sets.iter().zip(&assignment) {
                if f == fold {
                    test.push(set.clone());
                } else {
                    train.push(set.clone());
                }
            }
            if test.is_empty() || train.is_empty() {
                return Err(Error::Validation(format!("fold {fold} is empty")));
            }
            let fit = estimate(&train, spec, &EstimateOptions::default())?;
            let (percent_correct, fitting_factor) = score_choice_sets(&fit.beta, &test)?;
            Ok(FoldRecord {
                fold,
                n_test: test.len(),
                percent_correct,
                fitting_factor,
            })
        })
        .collect::<Result<_>>()?;

    let percent_correct =
        folds.iter().map(|f| f.percent_correct).sum::<f64>() / folds.len() as f64;
    let fitting_factor = folds.iter().map(|f| f.fitting_factor).sum::<f64>() / folds.len() as f64;
    Ok(ValidationReport {
        spec: *spec,
        clique_folds: config.clique_folds,
        folds,
        percent_correct,
        fitting_factor,
    })
}
