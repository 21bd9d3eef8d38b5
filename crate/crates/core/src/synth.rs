//! Synthetic scenario generation and choice simulation.
//!
//! Produces full datasets shaped like the study sample — zones with
//! clustered restaurant counts, cliques with dispersed member homes,
//! choice situations with drawn parties, events, and travel modes —
//! then simulates destination choices from known coefficients over the
//! complete zone universe. Because the true coefficients are known,
//! the whole estimation pipeline can be checked end to end: generate,
//! simulate, estimate under sampled choice sets, and compare.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis::{
    BootstrapConfig, BootstrapResult, CvConfig, ValidationReport, bootstrap_estimate,
    cross_validate,
};
use crate::domain::{
    AgeBand, ChoiceSituation, Clique, CliqueId, CliqueSet, Dataset, DayKind, EatOutBand, Gender,
    Member, MemberId, Point, RelLength, Role, SituationId, SituationKind, SituationSet,
    TimeOfDay, Zone, ZoneId, ZoneSet, validate_dataset,
};
use crate::error::{Error, Result};
use crate::estimator::{
    Coefficients, EstimateOptions, EstimationResult, ModelSpec, estimate, utility,
};
use crate::impedance::{
    ImpedanceKind, ImpedanceTable, Mode, ModeSource, ModeTable, TravelTimeProvider, assign_modes,
    group_impedance,
};
use crate::rng;
use crate::sampling::build_choice_sets;

/// Shape of a generated scenario. Share vectors are relative weights
/// and are normalized internally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_zones: usize,
    /// Zones closest to the field center become major-station zones.
    pub n_major: usize,
    /// Target mean restaurant count after scaling.
    pub mean_restaurants: f64,
    /// Log-scale standard deviation of the count distribution.
    pub count_sigma: f64,
    /// Count multiplier for major-station zones, applied before the
    /// mean is rescaled.
    pub major_boost: f64,
    /// Zones are placed uniformly in a disc of this radius.
    pub field_radius_km: f64,
    pub n_cliques: usize,
    pub n_situations: usize,
    /// Party-size weights for sizes 2 through 6.
    pub party_shares: [f64; 5],
    pub weekend_share: f64,
    /// Noon, evening, night.
    pub time_shares: [f64; 3],
    /// Transit, bus, car, bike, walk.
    pub mode_shares: [f64; 5],
    /// Probability that an alter has known the ego under five years.
    pub lt5_share: f64,
    /// Twenties through sixty-plus.
    pub age_shares: [f64; 5],
    pub female_share: f64,
    /// Rarely, monthly, weekly, daily eating-out bands.
    pub eatout_shares: [f64; 4],
    /// Ego home dispersion around the field center (per axis).
    pub home_sigma_km: f64,
    /// Alter home dispersion around the ego (per axis).
    pub clique_sigma_km: f64,
    /// Trip-origin jitter around the ego home for observed events.
    pub origin_sigma_km: f64,
    pub rng_seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            n_zones: 119,
            n_major: 21,
            mean_restaurants: 300.0,
            count_sigma: 1.0,
            major_boost: 3.0,
            field_radius_km: 30.0,
            n_cliques: 101,
            n_situations: 261,
            party_shares: [67.32, 18.81, 10.89, 3.96, 0.99],
            weekend_share: 0.5446,
            time_shares: [42.57, 26.73, 30.69],
            mode_shares: [46.53, 0.99, 22.77, 3.96, 25.74],
            lt5_share: 0.30,
            age_shares: [19.30, 10.53, 19.30, 22.81, 28.07],
            female_share: 0.4561,
            eatout_shares: [40.59, 48.51, 10.89, 0.0],
            home_sigma_km: 12.0,
            clique_sigma_km: 10.0,
            origin_sigma_km: 3.0,
            rng_seed: 0,
        }
    }
}

impl ScenarioConfig {
    fn validate(&self) -> Result<()> {
        if self.n_zones == 0 || self.n_cliques == 0 || self.n_situations == 0 {
            return Err(Error::Validation(
                "scenario needs at least one zone, clique, and situation".into(),
            ));
        }
        if self.n_major > self.n_zones {
            return Err(Error::Validation(format!(
                "{} major-station zones exceed {} zones",
                self.n_major, self.n_zones
            )));
        }
        for (name, value) in [
            ("mean_restaurants", self.mean_restaurants),
            ("field_radius_km", self.field_radius_km),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {value}")));
            }
        }
        for (name, value) in [
            ("count_sigma", self.count_sigma),
            ("major_boost", self.major_boost),
            ("home_sigma_km", self.home_sigma_km),
            ("clique_sigma_km", self.clique_sigma_km),
            ("origin_sigma_km", self.origin_sigma_km),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::Validation(format!(
                    "{name} must be nonnegative, got {value}"
                )));
            }
        }
        for (name, value) in [
            ("weekend_share", self.weekend_share),
            ("lt5_share", self.lt5_share),
            ("female_share", self.female_share),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Validation(format!(
                    "{name} must lie in [0, 1], got {value}"
                )));
            }
        }
        check_weights("party_shares", &self.party_shares)?;
        check_weights("time_shares", &self.time_shares)?;
        check_weights("mode_shares", &self.mode_shares)?;
        check_weights("age_shares", &self.age_shares)?;
        check_weights("eatout_shares", &self.eatout_shares)?;
        Ok(())
    }
}

fn check_weights(name: &str, weights: &[f64]) -> Result<()> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Validation(format!("{name} must be nonnegative and finite")));
    }
    if weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Validation(format!("{name} must have positive total weight")));
    }
    Ok(())
}

/// Draw an index with probability proportional to `weights`.
fn draw_index(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// The coefficients a simulation is run from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueModel {
    pub beta_true: Coefficients,
    pub impedance_kind: ImpedanceKind,
}

impl Default for TrueModel {
    fn default() -> Self {
        TrueModel {
            beta_true: Coefficients(vec![0.0093, 0.5590, -0.2943]),
            impedance_kind: ImpedanceKind::Mean,
        }
    }
}

/// A choice situation before any destination has been chosen, plus the
/// travel mode each participant would use.
#[derive(Debug, Clone, PartialEq)]
pub struct SituationTemplate {
    pub id: SituationId,
    pub clique_id: CliqueId,
    pub kind: SituationKind,
    pub participants: Vec<MemberId>,
    pub origins: Vec<Point>,
    pub day: DayKind,
    pub time: TimeOfDay,
    pub modes: Vec<Mode>,
}

/// A generated world: zones, cliques, and situations awaiting choices.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub zones: ZoneSet,
    pub cliques: CliqueSet,
    pub templates: Vec<SituationTemplate>,
}

/// Generate zones, cliques, and situation templates from `config`,
/// drawing everything from `rng`.
///
/// Zones are uniform in a disc with the `n_major` center-nearest ones
/// flagged as major stations; restaurant counts are log-normal, boosted
/// at major stations, and rescaled to the configured mean. Ego homes
/// disperse around the center, alter homes around their ego. The first
/// `min(n_cliques, n_situations)` situations are observed events, one
/// per clique; the rest are frequently-visited places of random
/// cliques.
pub fn generate_scenario(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<Scenario> {
    config.validate()?;
    let zones = generate_zones(config, rng)?;
    let cliques = generate_cliques(config, rng)?;
    let templates = generate_templates(config, &cliques, rng);
    Ok(Scenario { zones, cliques, templates })
}

fn generate_zones(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<ZoneSet> {
    let centroids: Vec<Point> = (0..config.n_zones)
        .map(|_| {
            let radius = config.field_radius_km * rng.random::<f64>().sqrt();
            let angle = rng.random::<f64>() * std::f64::consts::TAU;
            Point::new(radius * angle.cos(), radius * angle.sin())
        })
        .collect();
    // Major stations cluster in the center: take the nearest zones.
    let mut by_radius: Vec<usize> = (0..config.n_zones).collect();
    by_radius.sort_by(|&a, &b| {
        let origin = Point::new(0.0, 0.0);
        centroids[a]
            .distance_km(origin)
            .total_cmp(&centroids[b].distance_km(origin))
    });
    let mut major = vec![false; config.n_zones];
    for &i in by_radius.iter().take(config.n_major) {
        major[i] = true;
    }

    let count_distribution = LogNormal::new(0.0, config.count_sigma)
        .map_err(|e| Error::Validation(format!("count distribution: {e}")))?;
    let mut raw: Vec<f64> = (0..config.n_zones)
        .map(|i| {
            let base: f64 = count_distribution.sample(rng);
            if major[i] { base * config.major_boost } else { base }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    let scale = config.mean_restaurants * config.n_zones as f64 / total;
    for value in &mut raw {
        *value *= scale;
    }

    let area_ha = std::f64::consts::PI * config.field_radius_km.powi(2) * 100.0
        / config.n_zones as f64;
    ZoneSet::new(
        (0..config.n_zones)
            .map(|i| Zone {
                id: ZoneId(i as u32 + 1),
                restaurant_count: raw[i].round().max(0.0) as u32,
                major_station: major[i],
                centroid: centroids[i],
                area_ha: Some(area_ha),
            })
            .collect(),
    )
}

const ALTERS_PER_CLIQUE: usize = 5;

fn generate_cliques(config: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Result<CliqueSet> {
    let home_spread = Normal::new(0.0, config.home_sigma_km)
        .map_err(|e| Error::Validation(format!("home dispersion: {e}")))?;
    let clique_spread = Normal::new(0.0, config.clique_sigma_km)
        .map_err(|e| Error::Validation(format!("clique dispersion: {e}")))?;
    let age_bands = [
        AgeBand::Twenties,
        AgeBand::Thirties,
        AgeBand::Forties,
        AgeBand::Fifties,
        AgeBand::SixtyPlus,
    ];
    let eatout_bands = [
        EatOutBand::Rarely,
        EatOutBand::Monthly,
        EatOutBand::Weekly,
        EatOutBand::Daily,
    ];
    let draw_person = |rng: &mut ChaCha8Rng| {
        let age = age_bands[draw_index(rng, &config.age_shares)];
        let gender = if rng.random::<f64>() < config.female_share {
            Gender::Female
        } else {
            Gender::Male
        };
        (age, gender)
    };
    CliqueSet::new(
        (1..=config.n_cliques as u32)
            .map(|c| {
                let (age, gender) = draw_person(rng);
                let ego_home = Point::new(home_spread.sample(rng), home_spread.sample(rng));
                let ego = Member {
                    id: MemberId(format!("m{c}_0")),
                    role: Role::Ego,
                    home: ego_home,
                    work: None,
                    age_band: age,
                    gender,
                    rel_length: None,
                };
                let alters = (1..=ALTERS_PER_CLIQUE)
                    .map(|a| {
                        let (age, gender) = draw_person(rng);
                        let home = Point::new(
                            ego_home.x_km + clique_spread.sample(rng),
                            ego_home.y_km + clique_spread.sample(rng),
                        );
                        Member {
                            id: MemberId(format!("m{c}_{a}")),
                            role: Role::Alter,
                            home,
                            work: None,
                            age_band: age,
                            gender,
                            rel_length: Some(if rng.random::<f64>() < config.lt5_share {
                                RelLength::LessThan5y
                            } else {
                                RelLength::AtLeast5y
                            }),
                        }
                    })
                    .collect();
                Clique {
                    id: CliqueId(c),
                    ego,
                    alters,
                    eating_out_frequency: Some(
                        eatout_bands[draw_index(rng, &config.eatout_shares)],
                    ),
                }
            })
            .collect(),
    )
}

fn generate_templates(
    config: &ScenarioConfig,
    cliques: &CliqueSet,
    rng: &mut ChaCha8Rng,
) -> Vec<SituationTemplate> {
    let origin_jitter = Normal::new(0.0, config.origin_sigma_km)
        .expect("validated nonnegative sigma");
    let times = [TimeOfDay::Noon, TimeOfDay::Evening, TimeOfDay::Night];
    (0..config.n_situations)
        .map(|i| {
            let (clique, kind) = if i < config.n_cliques {
                (
                    cliques.iter().nth(i).expect("clique index in range"),
                    SituationKind::ActualEvent,
                )
            } else {
                (
                    cliques
                        .iter()
                        .nth(rng.random_range(0..config.n_cliques))
                        .expect("clique index in range"),
                    SituationKind::AlternativePlace,
                )
            };
            let party_size = 2 + draw_index(rng, &config.party_shares);
            let n_alters = (party_size - 1).min(clique.alters.len());
            let picked = rand::seq::index::sample(rng, clique.alters.len(), n_alters);
            let mut participants = vec![clique.ego.id.clone()];
            let mut origins = vec![clique.ego.home];
            for alter_index in picked.iter() {
                participants.push(clique.alters[alter_index].id.clone());
                origins.push(clique.alters[alter_index].home);
            }
            if kind == SituationKind::ActualEvent {
                origins[0] = Point::new(
                    clique.ego.home.x_km + origin_jitter.sample(rng),
                    clique.ego.home.y_km + origin_jitter.sample(rng),
                );
            }
            let day = if rng.random::<f64>() < config.weekend_share {
                DayKind::Weekend
            } else {
                DayKind::Weekday
            };
            let time = times[draw_index(rng, &config.time_shares)];
            let modes = (0..participants.len())
                .map(|_| Mode::ALL[draw_index(rng, &config.mode_shares)])
                .collect();
            SituationTemplate {
                id: SituationId(i as u32),
                clique_id: clique.id,
                kind,
                participants,
                origins,
                day,
                time,
                modes,
            }
        })
        .collect()
}

/// Group impedance of one template to one zone.
fn template_impedance(
    template: &SituationTemplate,
    zone: &Zone,
    provider: &TravelTimeProvider,
    kind: ImpedanceKind,
) -> Result<f64> {
    let times: Vec<f64> = template
        .origins
        .iter()
        .zip(&template.modes)
        .map(|(origin, &mode)| provider.travel_time(*origin, zone, mode))
        .collect::<Result<_>>()?;
    group_impedance(&times, kind, 0)
}

/// Simulate each template's destination from full-universe choice
/// probabilities at the true coefficients, and return the resulting
/// dataset together with the participants' travel modes.
///
/// No alternative sampling happens here: the simulation softmax runs
/// over every zone, so downstream estimation genuinely tests the
/// sampled-choice-set machinery against cleanly generated data.
pub fn simulate_choices(
    model: &TrueModel,
    scenario: &Scenario,
    provider: &TravelTimeProvider,
    rng: &mut ChaCha8Rng,
) -> Result<(Dataset, ModeTable)> {
    let mut situations = Vec::with_capacity(scenario.templates.len());
    let mut mode_table = ModeTable::new();
    for template in &scenario.templates {
        let utilities: Vec<f64> = scenario
            .zones
            .iter()
            .map(|zone| {
                let impedance =
                    template_impedance(template, zone, provider, model.impedance_kind)?;
                let features = [
                    if zone.major_station { 1.0 } else { 0.0 },
                    zone.ln_restaurants(),
                    impedance,
                ];
                utility(&model.beta_true, &features)
            })
            .collect::<Result<_>>()?;
        let probabilities = crate::estimator::choice_probabilities(&utilities);
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen_index = scenario.zones.len() - 1;
        for (z, p) in probabilities.iter().enumerate() {
            acc += p;
            if draw < acc {
                chosen_index = z;
                break;
            }
        }
        let chosen_zone = scenario.zones.by_index(chosen_index).id;
        for (member, &mode) in template.participants.iter().zip(&template.modes) {
            mode_table.insert(template.id, member.clone(), mode);
        }
        situations.push(ChoiceSituation {
            id: template.id,
            clique_id: template.clique_id,
            kind: template.kind,
            chosen_zone,
            participants: template.participants.clone(),
            origins: template.origins.clone(),
            day: template.day,
            time: template.time,
        });
    }
    let situations = SituationSet::new(situations)?;
    validate_dataset(&scenario.zones, &scenario.cliques, &situations).into_result()?;
    Ok((
        Dataset {
            zones: scenario.zones.clone(),
            cliques: scenario.cliques.clone(),
            situations,
        },
        mode_table,
    ))
}

/// Median over all situations and participants of the distance from
/// the participant's home to the chosen zone's centroid.
pub fn median_home_destination_km(dataset: &Dataset) -> Result<f64> {
    let mut distances = Vec::new();
    for situation in dataset.situations.iter() {
        let clique = dataset
            .cliques
            .get(situation.clique_id)
            .ok_or_else(|| Error::DanglingReference(format!("clique {}", situation.clique_id)))?;
        let zone = dataset
            .zones
            .get(situation.chosen_zone)
            .ok_or_else(|| Error::DanglingReference(format!("zone {}", situation.chosen_zone)))?;
        for member_id in &situation.participants {
            let member = clique.member(member_id).ok_or_else(|| {
                Error::DanglingReference(format!("member {member_id} in clique {}", clique.id))
            })?;
            distances.push(member.home.distance_km(zone.centroid));
        }
    }
    if distances.is_empty() {
        return Err(Error::EmptyInput("no home-destination distances"));
    }
    distances.sort_by(f64::total_cmp);
    let n = distances.len();
    Ok(if n % 2 == 1 {
        distances[n / 2]
    } else {
        (distances[n / 2 - 1] + distances[n / 2]) / 2.0
    })
}

/// Pipeline settings for a recovery run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryOptions {
    pub bootstrap: BootstrapConfig,
    /// Run cross-validation and attach its report.
    pub validation: Option<CvConfig>,
}

/// The outcome of one generate → simulate → estimate cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub beta_true: Coefficients,
    /// Fit on the original (non-resampled) choice sets.
    pub fit: EstimationResult,
    pub bootstrap: BootstrapResult,
    /// `(bootstrap mean − truth) / bootstrap SE` per coefficient.
    pub z_scores: [f64; 3],
    /// Whether each true coefficient lies inside the bootstrap 95% CI.
    pub ci_covered: [bool; 3],
    pub cost_sign_recovered: bool,
    pub validation: Option<ValidationReport>,
    pub median_home_destination_km: f64,
}

/// Generate a scenario, simulate choices at the true model, then run
/// the estimation pipeline — full-data fit plus bootstrap, optionally
/// cross-validation — and score recovery of the true coefficients.
///
/// The scenario seed drives generation and simulation through separate
/// substreams; the bootstrap and sampling seeds come from `options`.
pub fn recovery_test(
    config: &ScenarioConfig,
    model: &TrueModel,
    options: &RecoveryOptions,
) -> Result<RecoveryReport> {
    let provider = TravelTimeProvider::synthetic_default();
    let mut scenario_rng = rng::substream(config.rng_seed, rng::STREAM_SCENARIO);
    let scenario = generate_scenario(config, &mut scenario_rng)?;
    let mut choice_rng = rng::substream(config.rng_seed, rng::STREAM_CHOICES);
    let (dataset, mode_table) = simulate_choices(model, &scenario, &provider, &mut choice_rng)?;
    let modes = assign_modes(
        &dataset.situations,
        &dataset.cliques,
        &dataset.zones,
        &ModeSource::Table(&mode_table),
    )?;
    let spec = ModelSpec::new(model.impedance_kind);

    let table = ImpedanceTable::build(
        &dataset.situations,
        &dataset.zones,
        &provider,
        &modes,
        spec.impedance_kind,
    )?;
    let sets = build_choice_sets(
        &dataset.situations,
        &dataset.zones,
        &table,
        &options.bootstrap.sampling,
    )?;
    let fit = estimate(&sets, &spec, &EstimateOptions::default())?;

    let bootstrap = bootstrap_estimate(&dataset, &modes, &spec, &provider, &options.bootstrap)?;
    let z_scores = std::array::from_fn(|c| {
        let stat = &bootstrap.beta_summary[c];
        (stat.mean - model.beta_true.0[c]) / stat.std_error
    });
    let ci_covered = std::array::from_fn(|c| {
        let stat = &bootstrap.beta_summary[c];
        stat.ci_lower <= model.beta_true.0[c] && model.beta_true.0[c] <= stat.ci_upper
    });
    let cost_sign_recovered =
        bootstrap.beta_summary[2].mean.signum() == model.beta_true.0[2].signum();
    let validation = match &options.validation {
        Some(cv) => Some(cross_validate(&dataset, &modes, &spec, &provider, cv)?),
        None => None,
    };
    let median = median_home_destination_km(&dataset)?;
    Ok(RecoveryReport {
        beta_true: model.beta_true.clone(),
        fit,
        bootstrap,
        z_scores,
        ci_covered,
        cost_sign_recovered,
        validation,
        median_home_destination_km: median,
    })
}
