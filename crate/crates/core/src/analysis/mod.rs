//! Inference and validation on top of the estimator: bootstrap
//! resampling with elasticity summaries, k-fold cross-validation,
//! segment-wise re-estimation, and probability-curve simulation.
//!
//! Every routine here is deterministic for a fixed seed: replicates and
//! folds draw from index-keyed RNG substreams and results are collected
//! in index order, so worker count never changes any output.

mod curves;
mod segment;
mod validate;

pub use curves::{CurveSpec, probability_curve};
pub use segment::{SegmentOutcome, SegmentRule, SegmentedResult, segment_and_estimate};
pub use validate::{
    CvConfig, FoldRecord, ValidationReport, cross_validate, fitting_factor, percent_correct,
    predicted_zone, score_choice_sets,
};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{Coefficients, EstimateOptions, ModelSpec, N_COEFFS, estimate, utility};
use crate::impedance::{ImpedanceTable, ModeAssignment, TravelTimeProvider};
use crate::rng;
use crate::sampling::{
    ChoiceSet, ChoiceSetBuilder, FEATURE_NAMES, SamplingConfig, mean_travel_time_indexed,
};

/// How per-alternative elasticities are averaged into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticityWeighting {
    /// Plain mean over every alternative of every situation.
    #[default]
    Uniform,
    /// Alternatives weighted by their choice probability within each
    /// situation, then averaged over situations.
    ProbabilityWeighted,
}

/// Functional form of a variable for elasticity purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElasticityTransform {
    /// Variable enters utility untransformed.
    Linear,
    /// Utility carries ln(x); the elasticity is with respect to raw x.
    Log,
}

/// Point elasticity of a choice probability with respect to one
/// variable: `beta·x·(1−p)` for a linear variable, `beta·(1−p)` for a
/// log-transformed one. `p` must lie in [0, 1].
pub fn direct_elasticity(beta_x: f64, x: f64, p: f64, transform: ElasticityTransform) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "probability {p} outside [0,1]");
    match transform {
        ElasticityTransform::Linear => beta_x * x * (1.0 - p),
        ElasticityTransform::Log => beta_x * (1.0 - p),
    }
}

/// Bootstrap controls.
///
/// `rng_seed` drives both the with-replacement resampling and every
/// replicate's choice-set regeneration; the nested sampling config
/// contributes only `k` and the correction switch here (its own seed
/// applies when choice sets are built outside the bootstrap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub rng_seed: u64,
    pub sampling: SamplingConfig,
    pub weighting: ElasticityWeighting,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 50,
            rng_seed: 0,
            sampling: SamplingConfig::default(),
            weighting: ElasticityWeighting::Uniform,
        }
    }
}

/// Mean, spread, and percentile interval of one quantity across
/// bootstrap replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    /// Sample standard deviation across replicates.
    pub std_error: f64,
    /// 2.5th percentile.
    pub ci_lower: f64,
    /// 97.5th percentile.
    pub ci_upper: f64,
}

impl SummaryStat {
    /// Ratio of mean to standard error; large magnitudes indicate the
    /// quantity is distinguishable from zero.
    pub fn z_value(&self) -> f64 {
        self.mean / self.std_error
    }
}

/// Everything a bootstrap run produced: per-replicate draws from
/// converged fits plus their cross-replicate summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub spec: ModelSpec,
    pub requested_replicates: usize,
    /// Replicates dropped because the solver did not converge.
    pub excluded_replicates: usize,
    pub weighting: ElasticityWeighting,
    /// Coefficient vector per converged replicate, replicate order.
    pub betas: Vec<Coefficients>,
    /// `[restaurant-count elasticity, cost elasticity]` per converged
    /// replicate.
    pub elasticities: Vec<[f64; 2]>,
    pub beta_summary: [SummaryStat; N_COEFFS],
    pub elasticity_summary: [SummaryStat; 2],
}

impl BootstrapResult {
    pub fn converged_replicates(&self) -> usize {
        self.betas.len()
    }
}

/// Resample situations with replacement, rebuild choice sets with a
/// replicate-specific seed, re-estimate, and compute mean direct
/// elasticities — repeated `replicates` times and summarized.
///
/// Replicates whose fit does not converge are excluded from the
/// summaries and counted in `excluded_replicates`; at least two must
/// converge for summaries to exist. Replicates run in parallel.
pub fn bootstrap_estimate(
    dataset: &Dataset,
    modes: &ModeAssignment,
    spec: &ModelSpec,
    provider: &TravelTimeProvider,
    config: &BootstrapConfig,
) -> Result<BootstrapResult> {
    if config.replicates < 2 {
        return Err(Error::Validation(format!(
            "bootstrap needs at least 2 replicates, got {}",
            config.replicates
        )));
    }
    if config.replicates > u32::MAX as usize {
        return Err(Error::Validation("too many bootstrap replicates".into()));
    }
    let table = ImpedanceTable::build(
        &dataset.situations,
        &dataset.zones,
        provider,
        modes,
        spec.impedance_kind,
    )?;
    let n = dataset.situations.len();
    let situations = dataset.situations.situations();

    let outcomes: Vec<Option<(Coefficients, [f64; 2])>> = (1..=config.replicates as u32)
        .into_par_iter()
        .map(|replicate| -> Result<Option<(Coefficients, [f64; 2])>> {
            let mut resample_rng =
                rng::substream(config.rng_seed, rng::resample_stream(replicate));
            let indices: Vec<usize> =
                (0..n).map(|_| resample_rng.random_range(0..n)).collect();
            let t_bar = mean_travel_time_indexed(&table, &indices)?;
            let builder =
                ChoiceSetBuilder::new(&dataset.zones, &table, t_bar, &config.sampling)?;
            let sets: Vec<ChoiceSet> = indices
                .iter()
                .enumerate()
                .map(|(position, &i)| {
                    let mut stream = rng::substream(
                        config.rng_seed,
                        rng::choice_set_stream(replicate, position as u32),
                    );
                    builder.build(&situations[i], i, &mut stream)
                })
                .collect::<Result<_>>()?;
            let fit = estimate(&sets, spec, &EstimateOptions::default())?;
            if !fit.converged {
                return Ok(None);
            }
            let elasticities = mean_elasticities(&fit.beta, &sets, config.weighting)?;
            Ok(Some((fit.beta, elasticities)))
        })
        .collect::<Result<_>>()?;

    let excluded = outcomes.iter().filter(|o| o.is_none()).count();
    let (betas, elasticities): (Vec<Coefficients>, Vec<[f64; 2]>) =
        outcomes.into_iter().flatten().unzip();
    if betas.len() < 2 {
        return Err(Error::Degenerate(format!(
            "only {} of {} bootstrap replicates converged",
            betas.len(),
            config.replicates
        )));
    }

    let beta_summary = std::array::from_fn(|c| {
        summarize(&betas.iter().map(|b| b.0[c]).collect::<Vec<f64>>())
    });
    let elasticity_summary = std::array::from_fn(|e| {
        summarize(&elasticities.iter().map(|pair| pair[e]).collect::<Vec<f64>>())
    });
    Ok(BootstrapResult {
        spec: *spec,
        requested_replicates: config.replicates,
        excluded_replicates: excluded,
        weighting: config.weighting,
        betas,
        elasticities,
        beta_summary,
        elasticity_summary,
    })
}

/// Mean direct elasticities of the restaurant-count and cost variables
/// over all alternatives of all choice sets, at the given coefficients.
///
/// Returns `[restaurant-count elasticity, cost elasticity]`. The count
/// variable enters utility in logs, the cost variable linearly.
pub fn mean_elasticities(
    beta: &Coefficients,
    sets: &[ChoiceSet],
    weighting: ElasticityWeighting,
) -> Result<[f64; 2]> {
    if sets.is_empty() {
        return Err(Error::EmptyInput("elasticities need choice sets"));
    }
    let mut size_sum = 0.0;
    let mut cost_sum = 0.0;
    let mut denominator = 0.0;
    for set in sets {
        let utilities: Vec<f64> = set
            .alternatives
            .iter()
            .map(|alt| Ok(utility(beta, &alt.features)? + alt.offset))
            .collect::<Result<_>>()?;
        let probs = crate::estimator::choice_probabilities(&utilities);
        for (alt, &p) in set.alternatives.iter().zip(&probs) {
            let size = direct_elasticity(beta.0[1], alt.features[1], p, ElasticityTransform::Log);
            let cost =
                direct_elasticity(beta.0[2], alt.features[2], p, ElasticityTransform::Linear);
            let weight = match weighting {
                ElasticityWeighting::Uniform => 1.0,
                ElasticityWeighting::ProbabilityWeighted => p,
            };
            size_sum += weight * size;
            cost_sum += weight * cost;
        }
        denominator += match weighting {
            ElasticityWeighting::Uniform => set.alternatives.len() as f64,
            // Within-situation probabilities sum to one.
            ElasticityWeighting::ProbabilityWeighted => 1.0,
        };
    }
    Ok([size_sum / denominator, cost_sum / denominator])
}

/// One row of the elasticity table: a variable with its bootstrap mean
/// and 95% percentile interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticityRow {
    pub variable: String,
    pub mean: f64,
    pub std_error: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

/// Elasticity summaries in table form, one row per variable.
pub fn elasticity_report(bootstrap: &BootstrapResult) -> Vec<ElasticityRow> {
    let variables = [FEATURE_NAMES[1], FEATURE_NAMES[2]];
    variables
        .iter()
        .zip(&bootstrap.elasticity_summary)
        .map(|(variable, stat)| ElasticityRow {
            variable: (*variable).to_owned(),
            mean: stat.mean,
            std_error: stat.std_error,
            ci_lower: stat.ci_lower,
            ci_upper: stat.ci_upper,
        })
        .collect()
}

/// Mean, sample standard deviation, and 2.5/97.5 percentiles.
pub(crate) fn summarize(values: &[f64]) -> SummaryStat {
    debug_assert!(values.len() >= 2);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    SummaryStat {
        mean,
        std_error: variance.sqrt(),
        ci_lower: percentile(&sorted, 0.025),
        ci_upper: percentile(&sorted, 0.975),
    }
}

/// Linear-interpolation percentile of an ascending-sorted slice.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let position = q * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let upper = position.ceil() as usize;
    sorted[lower] + (sorted[upper] - sorted[lower]) * (position - lower as f64)
}

#[cfg(test)]
pub(crate) mod testkit {
    //! A small self-consistent dataset for exercising the pipeline.

    use crate::domain::*;
    use crate::impedance::{Mode, ModeAssignment, ModeSource, assign_modes};

    /// Zones on a line, three two-to-three-member cliques, `n_situations`
    /// spread over cliques and zones. All situations are of the
    /// frequent-place kind so origins equal homes.
    pub(crate) fn small_dataset(n_zones: usize, n_situations: usize) -> (Dataset, ModeAssignment) {
        let zones = ZoneSet::new(
            (0..n_zones)
                .map(|i| Zone {
                    id: ZoneId(i as u32 + 1),
                    restaurant_count: 60 + 40 * (i as u32 % 7),
                    major_station: i % 5 == 0,
                    centroid: Point::new(2.0 * (i as f64 + 1.0), 0.0),
                    area_ha: Some(50.0),
                })
                .collect(),
        )
        .unwrap();

        let member = |id: &str, role: Role, x: f64, age: AgeBand, gender: Gender| Member {
            id: MemberId::from(id),
            role,
            home: Point::new(x, 0.0),
            work: None,
            age_band: age,
            gender,
            rel_length: match role {
                Role::Ego => None,
                Role::Alter => Some(RelLength::AtLeast5y),
            },
        };
        let cliques = CliqueSet::new(vec![
            Clique {
                id: CliqueId(1),
                ego: member("a0", Role::Ego, 0.0, AgeBand::Thirties, Gender::Female),
                alters: vec![
                    member("a1", Role::Alter, 1.0, AgeBand::Thirties, Gender::Male),
                    member("a2", Role::Alter, 3.0, AgeBand::SixtyPlus, Gender::Female),
                ],
                eating_out_frequency: None,
            },
            Clique {
                id: CliqueId(2),
                ego: member("b0", Role::Ego, 5.0, AgeBand::SixtyPlus, Gender::Male),
                alters: vec![member("b1", Role::Alter, 6.0, AgeBand::SixtyPlus, Gender::Male)],
                eating_out_frequency: None,
            },
            Clique {
                id: CliqueId(3),
                ego: member("c0", Role::Ego, 9.0, AgeBand::Twenties, Gender::Female),
                alters: vec![member("c1", Role::Alter, 11.0, AgeBand::Forties, Gender::Female)],
                eating_out_frequency: None,
            },
        ])
        .unwrap();

        let situations = SituationSet::new(
            (0..n_situations)
                .map(|i| {
                    let clique = cliques.iter().nth(i % 3).unwrap();
                    let participants: Vec<MemberId> =
                        clique.members().map(|m| m.id.clone()).collect();
                    let origins: Vec<Point> = clique.members().map(|m| m.home).collect();
                    ChoiceSituation {
                        id: SituationId(i as u32),
                        clique_id: clique.id,
                        kind: SituationKind::AlternativePlace,
                        chosen_zone: ZoneId((i * 7 % n_zones) as u32 + 1),
                        participants,
                        origins,
                        day: if i % 2 == 0 { DayKind::Weekday } else { DayKind::Weekend },
                        time: match i % 3 {
                            0 => TimeOfDay::Noon,
                            1 => TimeOfDay::Evening,
                            _ => TimeOfDay::Night,
                        },
                    }
                })
                .collect(),
        )
        .unwrap();

        let modes =
            assign_modes(&situations, &cliques, &zones, &ModeSource::Fixed(Mode::Car)).unwrap();
        let dataset = Dataset { zones, cliques, situations };
        (dataset, modes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::impedance::ImpedanceKind;
    use approx::assert_relative_eq;

    fn toy() -> (Dataset, ModeAssignment, ModelSpec, TravelTimeProvider) {
        let (dataset, modes) = testkit::small_dataset(8, 30);
        (
            dataset,
            modes,
            ModelSpec::new(ImpedanceKind::Mean),
            TravelTimeProvider::synthetic_default(),
        )
    }

    fn toy_config() -> BootstrapConfig {
        BootstrapConfig {
            replicates: 4,
            rng_seed: 7,
            sampling: SamplingConfig { k: 3, include_correction: false, rng_seed: 7 },
            weighting: ElasticityWeighting::Uniform,
        }
    }

    #[test]
    fn elasticity_anchors() {
        assert_eq!(direct_elasticity(-0.5, 9.0, 1.0, ElasticityTransform::Linear), 0.0);
        assert_eq!(direct_elasticity(0.6, 9.0, 1.0, ElasticityTransform::Log), 0.0);
        assert_relative_eq!(
            direct_elasticity(-0.2943, 13.9, 0.05, ElasticityTransform::Linear),
            -3.886,
            epsilon = 5e-4
        );
        assert_relative_eq!(
            direct_elasticity(0.5590, 0.0, 0.05, ElasticityTransform::Log),
            0.531,
            epsilon = 5e-4
        );
    }

    #[test]
    fn elasticity_magnitude_shrinks_with_probability() {
        let at = |p: f64| direct_elasticity(-0.3, 10.0, p, ElasticityTransform::Linear);
        assert!(at(0.1) < 0.0, "sign follows the coefficient");
        assert!(at(0.1).abs() > at(0.5).abs());
        assert!(at(0.5).abs() > at(0.9).abs());
    }

    #[test]
    fn summary_statistics() {
        let stat = summarize(&[1.0, 2.0, 3.0]);
        assert_eq!(stat.mean, 2.0);
        assert_eq!(stat.std_error, 1.0);
        let sorted: Vec<f64> = (0..=100).map(f64::from).collect();
        assert_relative_eq!(percentile(&sorted, 0.025), 2.5, epsilon = 1e-12);
        assert_relative_eq!(percentile(&sorted, 0.975), 97.5, epsilon = 1e-12);
        assert_eq!(percentile(&sorted, 0.0), 0.0);
        assert_eq!(percentile(&sorted, 1.0), 100.0);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let (dataset, modes, spec, provider) = toy();
        let config = toy_config();
        let first = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap();
        let second = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.requested_replicates, 4);
        assert_eq!(
            first.converged_replicates() + first.excluded_replicates,
            first.requested_replicates
        );
    }

    #[test]
    fn bootstrap_output_is_independent_of_worker_count() {
        let (dataset, modes, spec, provider) = toy();
        let config = toy_config();
        let parallel = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| bootstrap_estimate(&dataset, &modes, &spec, &provider, &config))
            .unwrap();
        assert_eq!(parallel, single);
    }

    #[test]
    fn bootstrap_summaries_bracket_the_mean() {
        let (dataset, modes, spec, provider) = toy();
        let mut config = toy_config();
        config.replicates = 8;
        let result = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap();
        for stat in result.beta_summary.iter().chain(&result.elasticity_summary) {
            assert!(stat.ci_lower <= stat.mean && stat.mean <= stat.ci_upper, "{stat:?}");
            assert!(stat.std_error >= 0.0);
        }
        assert_eq!(result.betas.len(), result.elasticities.len());
    }

    #[test]
    fn bootstrap_rejects_single_replicate() {
        let (dataset, modes, spec, provider) = toy();
        let mut config = toy_config();
        config.replicates = 1;
        let err = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn different_seeds_give_different_replicates() {
        let (dataset, modes, spec, provider) = toy();
        let config = toy_config();
        let mut other = toy_config();
        other.rng_seed = 8;
        let a = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap();
        let b = bootstrap_estimate(&dataset, &modes, &spec, &provider, &other).unwrap();
        assert_ne!(a.betas, b.betas);
    }

    #[test]
    fn elasticity_report_rows() {
        let (dataset, modes, spec, provider) = toy();
        let result = bootstrap_estimate(&dataset, &modes, &spec, &provider, &toy_config()).unwrap();
        let rows = elasticity_report(&result);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].variable, "ln_restaurants");
        assert_eq!(rows[1].variable, "cost");
        for row in &rows {
            assert!(row.ci_lower <= row.mean && row.mean <= row.ci_upper);
        }
    }

    #[test]
    fn constant_replicates_collapse_the_interval() {
        let stat = summarize(&[-3.5, -3.5, -3.5, -3.5]);
        assert_eq!(stat.mean, -3.5);
        assert_eq!(stat.std_error, 0.0);
        assert_eq!(stat.ci_lower, -3.5);
        assert_eq!(stat.ci_upper, -3.5);
        let pair = summarize(&[-3.0, -4.0]);
        assert_eq!(pair.mean, -3.5);
    }

    #[test]
    fn weighted_elasticities_differ_from_uniform() {
        let (dataset, modes, spec, provider) = toy();
        let config = toy_config();
        let mut weighted = toy_config();
        weighted.weighting = ElasticityWeighting::ProbabilityWeighted;
        let uniform = bootstrap_estimate(&dataset, &modes, &spec, &provider, &config).unwrap();
        let reweighted =
            bootstrap_estimate(&dataset, &modes, &spec, &provider, &weighted).unwrap();
        assert_eq!(uniform.betas, reweighted.betas, "betas ignore the weighting");
        assert_ne!(uniform.elasticities, reweighted.elasticities);
    }
}
