//! Multinomial logistic mode classifier.
//!
//! Imputes the travel mode of participants whose mode was not observed.
//! Features are standardized, the model is fit by Newton's method on an
//! L2-penalized likelihood (weight 1e-4, enough to keep the optimum
//! unique even under complete separation), and the reported accuracy
//! comes from k-fold cross-validation over the observed records.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Mode;
use crate::domain::{CliqueSet, SituationSet, ZoneSet};
use crate::error::{Error, Result};
use crate::rng;

const N_FEATURES: usize = 5;
const N_CLASSES: usize = 5;
/// Feature count including the leading intercept.
const D: usize = N_FEATURES + 1;
const L2_WEIGHT: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-8;
const MAX_ITER: usize = 100;

/// Feature names in raw-vector order, for the JSON artifact.
const FEATURE_NAMES: [&str; N_FEATURES] =
    ["distance_km", "age_ordinal", "female", "party_size", "weekend"];

/// Observable predictors of one participant's mode for one situation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFeatures {
    /// Straight-line origin-to-destination distance in km.
    pub distance_km: f64,
    /// Age band as 0 (20s) … 4 (60+).
    pub age_ordinal: f64,
    /// 1 for female, 0 for male.
    pub female: f64,
    pub party_size: f64,
    /// 1 on weekends, 0 on weekdays.
    pub weekend: f64,
}

impl ModeFeatures {
    fn raw(&self) -> [f64; N_FEATURES] {
        [
            self.distance_km,
            self.age_ordinal,
            self.female,
            self.party_size,
            self.weekend,
        ]
    }

    /// Features of one participant of a situation, measured against the
    /// situation's chosen destination.
    pub fn for_participant(
        situation: &crate::domain::ChoiceSituation,
        participant_index: usize,
        cliques: &CliqueSet,
        zones: &ZoneSet,
    ) -> Result<ModeFeatures> {
        let clique = cliques.get(situation.clique_id).ok_or_else(|| {
            Error::DanglingReference(format!("clique {} not found", situation.clique_id))
        })?;
        let member_id = situation
            .participants
            .get(participant_index)
            .ok_or(Error::DimensionMismatch {
                expected: situation.participants.len(),
                got: participant_index,
            })?;
        let member = clique.member(member_id).ok_or_else(|| {
            Error::DanglingReference(format!(
                "participant {member_id} not in clique {}",
                clique.id
            ))
        })?;
        let zone = zones.get(situation.chosen_zone).ok_or_else(|| {
            Error::DanglingReference(format!("zone {} not found", situation.chosen_zone))
        })?;
        Ok(ModeFeatures {
            distance_km: situation.origins[participant_index].distance_km(zone.centroid),
            age_ordinal: member.age_band.ordinal(),
            female: f64::from(member.gender == crate::domain::Gender::Female),
            party_size: situation.party_size() as f64,
            weekend: f64::from(situation.day == crate::domain::DayKind::Weekend),
        })
    }
}

/// Extract (features, observed mode) training records from the egos of
/// actual events — the rows where the mode is directly surveyed.
pub fn ego_training_records(
    situations: &SituationSet,
    cliques: &CliqueSet,
    zones: &ZoneSet,
    observed: &super::ModeTable,
) -> Result<Vec<(ModeFeatures, Mode)>> {
    let mut records = Vec::new();
    for situation in situations.iter() {
        if situation.kind != crate::domain::SituationKind::ActualEvent {
            continue;
        }
        let ego_idx = situation.ego_index();
        if let Some(mode) = observed.get(situation.id, &situation.participants[ego_idx]) {
            records.push((
                ModeFeatures::for_participant(situation, ego_idx, cliques, zones)?,
                mode,
            ));
        }
    }
    Ok(records)
}

/// Standardization parameters learned from training features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Scaler {
    mean: [f64; N_FEATURES],
    std: [f64; N_FEATURES],
}

impl Scaler {
    fn fit(rows: &[[f64; N_FEATURES]]) -> Scaler {
        let n = rows.len() as f64;
        let mut mean = [0.0; N_FEATURES];
        for row in rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut std = [0.0; N_FEATURES];
        for row in rows {
            for ((s, v), m) in std.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        for s in &mut std {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Scaler { mean, std }
    }

    /// Standardize and prepend the intercept.
    fn design_row(&self, raw: &[f64; N_FEATURES]) -> [f64; D] {
        let mut row = [1.0; D];
        for i in 0..N_FEATURES {
            row[i + 1] = (raw[i] - self.mean[i]) / self.std[i];
        }
        row
    }
}

/// Fitted multinomial logistic classifier over the five modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeClassifier {
    /// Class tokens in score order; fixed, stored for the artifact.
    classes: Vec<String>,
    /// Feature names matching the raw vector order.
    features: Vec<String>,
    /// One row of `D` coefficients (intercept first) per class.
    coefficients: Vec<Vec<f64>>,
    scaler: Scaler,
    /// k-fold cross-validated share of correct predictions.
    pub cv_accuracy: f64,
}

impl ModeClassifier {
    /// Build a classifier from explicit parts (used for hand-built
    /// models in tests and for deserialization checks).
    pub fn from_parts(
        coefficients: Vec<Vec<f64>>,
        scaler_mean: [f64; N_FEATURES],
        scaler_std: [f64; N_FEATURES],
        cv_accuracy: f64,
    ) -> Result<ModeClassifier> {
        if coefficients.len() != N_CLASSES {
            return Err(Error::DimensionMismatch {
                expected: N_CLASSES,
                got: coefficients.len(),
            });
        }
        for row in &coefficients {
            if row.len() != D {
                return Err(Error::DimensionMismatch {
                    expected: D,
                    got: row.len(),
                });
            }
        }
        if scaler_std.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return Err(Error::Validation("scaler std must be positive".into()));
        }
        Ok(ModeClassifier {
            classes: Mode::ALL.iter().map(|m| m.token().to_owned()).collect(),
            features: FEATURE_NAMES.iter().map(|&f| f.to_owned()).collect(),
            coefficients,
            scaler: Scaler {
                mean: scaler_mean,
                std: scaler_std,
            },
            cv_accuracy,
        })
    }

    /// Linear score per class for a feature row.
    pub fn scores(&self, features: &ModeFeatures) -> [f64; N_CLASSES] {
        let x = self.scaler.design_row(&features.raw());
        let mut scores = [0.0; N_CLASSES];
        for (score, beta) in scores.iter_mut().zip(&self.coefficients) {
            *score = beta.iter().zip(&x).map(|(b, v)| b * v).sum();
        }
        scores
    }

    /// Class probabilities (softmax over scores); they sum to one.
    pub fn probabilities(&self, features: &ModeFeatures) -> [f64; N_CLASSES] {
        let scores = self.scores(features);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs = [0.0; N_CLASSES];
        let mut total = 0.0;
        for (p, s) in probs.iter_mut().zip(&scores) {
            *p = (s - max).exp();
            total += *p;
        }
        for p in &mut probs {
            *p /= total;
        }
        probs
    }

    /// Most probable mode; ties go to the earlier class in the fixed
    /// order (transit, bus, car, bike, walk).
    pub fn predict(&self, features: &ModeFeatures) -> Mode {
        let scores = self.scores(features);
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Mode::ALL[best]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("classifier serializes")
    }

    pub fn from_json(json: &str) -> Result<ModeClassifier> {
        let parsed: ModeClassifier = serde_json::from_str(json)
            .map_err(|e| Error::Validation(format!("classifier JSON: {e}")))?;
        let expected: Vec<String> = Mode::ALL.iter().map(|m| m.token().to_owned()).collect();
        if parsed.classes != expected {
            return Err(Error::Validation(format!(
                "classifier JSON class order {:?} does not match {:?}",
                parsed.classes, expected
            )));
        }
        ModeClassifier::from_parts(
            parsed.coefficients,
            parsed.scaler.mean,
            parsed.scaler.std,
            parsed.cv_accuracy,
        )
    }
}

/// Fit the classifier on observed records and cross-validate it.
///
/// `folds` is capped at the record count; each fold's model is fit on
/// the remaining records with its own scaler, so the reported accuracy
/// is out-of-sample throughout.
pub fn train_mode_classifier(
    records: &[(ModeFeatures, Mode)],
    folds: usize,
    rng_seed: u64,
) -> Result<ModeClassifier> {
    if records.len() < 2 {
        return Err(Error::EmptyInput("need at least two mode records"));
    }
    if folds < 2 {
        return Err(Error::Validation(format!("need at least 2 folds, got {folds}")));
    }
    let distinct = {
        let mut seen = [false; N_CLASSES];
        for (_, mode) in records {
            seen[mode.index()] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::Degenerate(
            "mode records contain a single class; nothing to separate".into(),
        ));
    }

    // Cross-validation over shuffled contiguous fold slices.
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut rng::substream(rng_seed, rng::STREAM_CLASSIFIER));
    let folds = folds.min(records.len());
    let mut correct = 0usize;
    for fold in 0..folds {
        let lo = fold * records.len() / folds;
        let hi = (fold + 1) * records.len() / folds;
        let test = &order[lo..hi];
        let train: Vec<(ModeFeatures, Mode)> = order[..lo]
            .iter()
            .chain(&order[hi..])
            .map(|&i| records[i])
            .collect();
        let (coefficients, scaler) = fit_multinomial(&train)?;
        let model = ModeClassifier {
            classes: Vec::new(),
            features: Vec::new(),
            coefficients,
            scaler,
            cv_accuracy: f64::NAN,
        };
        for &i in test {
            if model.predict(&records[i].0) == records[i].1 {
                correct += 1;
            }
        }
    }
    let cv_accuracy = correct as f64 / records.len() as f64;

    let (coefficients, scaler) = fit_multinomial(records)?;
    Ok(ModeClassifier {
        classes: Mode::ALL.iter().map(|m| m.token().to_owned()).collect(),
        features: FEATURE_NAMES.iter().map(|&f| f.to_owned()).collect(),
        coefficients,
        scaler,
        cv_accuracy,
    })
}

/// Newton fit of the L2-penalized multinomial likelihood.
///
/// All five class score rows are free parameters; the ridge term pins
/// down the softmax translation invariance, so no reference class is
/// needed and the zero vector is the symmetric starting point.
fn fit_multinomial(records: &[(ModeFeatures, Mode)]) -> Result<(Vec<Vec<f64>>, Scaler)> {
    let raw: Vec<[f64; N_FEATURES]> = records.iter().map(|(f, _)| f.raw()).collect();
    let scaler = Scaler::fit(&raw);
    let rows: Vec<[f64; D]> = raw.iter().map(|r| scaler.design_row(r)).collect();
    let labels: Vec<usize> = records.iter().map(|(_, m)| m.index()).collect();

    let dim = N_CLASSES * D;
    let mut beta = DVector::<f64>::zeros(dim);
    let mut ll = penalized_ll(&beta, &rows, &labels);
    for _ in 0..MAX_ITER {
        let (grad, neg_hess) = derivatives(&beta, &rows, &labels);
        if grad.amax() < GRAD_TOL {
            return Ok((unpack(&beta), scaler));
        }
        let step = neg_hess
            .cholesky()
            .map(|c| c.solve(&grad))
            .ok_or_else(|| Error::SingularHessian("classifier normal equations".into()))?;
        // Halve until the penalized likelihood improves.
        let mut scale = 1.0;
        loop {
            let candidate = &beta + &step * scale;
            let candidate_ll = penalized_ll(&candidate, &rows, &labels);
            if candidate_ll > ll {
                beta = candidate;
                ll = candidate_ll;
                break;
            }
            scale *= 0.5;
            if scale < 1e-12 {
                // No ascent left; accept only if the gradient is flat.
                if grad.amax() < GRAD_TOL.sqrt() {
                    return Ok((unpack(&beta), scaler));
                }
                return Err(Error::NonConvergence {
                    iterations: MAX_ITER,
                });
            }
        }
    }
    let (grad, _) = derivatives(&beta, &rows, &labels);
    if grad.amax() < GRAD_TOL {
        Ok((unpack(&beta), scaler))
    } else {
        Err(Error::NonConvergence {
            iterations: MAX_ITER,
        })
    }
}

fn unpack(beta: &DVector<f64>) -> Vec<Vec<f64>> {
    (0..N_CLASSES)
        .map(|k| beta.as_slice()[k * D..(k + 1) * D].to_vec())
        .collect()
}

fn class_probs(beta: &DVector<f64>, x: &[f64; D]) -> [f64; N_CLASSES] {
    let mut scores = [0.0; N_CLASSES];
    for (k, s) in scores.iter_mut().enumerate() {
        *s = (0..D).map(|j| beta[k * D + j] * x[j]).sum();
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs = [0.0; N_CLASSES];
    let mut total = 0.0;
    for (p, s) in probs.iter_mut().zip(&scores) {
        *p = (s - max).exp();
        total += *p;
    }
    for p in &mut probs {
        *p /= total;
    }
    probs
}

fn penalized_ll(beta: &DVector<f64>, rows: &[[f64; D]], labels: &[usize]) -> f64 {
    let mut ll = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        ll += class_probs(beta, x)[y].ln();
    }
    ll - 0.5 * L2_WEIGHT * beta.norm_squared()
}

/// Gradient of the penalized likelihood and the negated Hessian
/// (positive definite thanks to the ridge term).
fn derivatives(
    beta: &DVector<f64>,
    rows: &[[f64; D]],
    labels: &[usize],
) -> (DVector<f64>, DMatrix<f64>) {
    let dim = N_CLASSES * D;
    let mut grad = DVector::<f64>::zeros(dim);
    let mut neg_hess = DMatrix::<f64>::zeros(dim, dim);
    for (x, &y) in rows.iter().zip(labels) {
        let p = class_probs(beta, x);
        for k in 0..N_CLASSES {
            let residual = f64::from(k == y) - p[k];
            for j in 0..D {
                grad[k * D + j] += residual * x[j];
            }
            for l in 0..N_CLASSES {
                let w = p[k] * (f64::from(k == l) - p[l]);
                if w == 0.0 {
                    continue;
                }
                for i in 0..D {
                    for j in 0..D {
                        neg_hess[(k * D + i, l * D + j)] += w * x[i] * x[j];
                    }
                }
            }
        }
    }
    for idx in 0..dim {
        grad[idx] -= L2_WEIGHT * beta[idx];
        neg_hess[(idx, idx)] += L2_WEIGHT;
    }
    (grad, neg_hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn features(distance_km: f64) -> ModeFeatures {
        ModeFeatures {
            distance_km,
            age_ordinal: 2.0,
            female: 1.0,
            party_size: 2.0,
            weekend: 0.0,
        }
    }

    #[test]
    fn zero_coefficients_predict_first_class() {
        let model = ModeClassifier::from_parts(
            vec![vec![0.0; D]; N_CLASSES],
            [0.0; N_FEATURES],
            [1.0; N_FEATURES],
            0.0,
        )
        .unwrap();
        assert_eq!(model.predict(&features(3.0)), Mode::Transit);
        let probs = model.probabilities(&features(3.0));
        for p in probs {
            assert!((p - 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn score_ties_break_by_class_order() {
        // Car and bike share the same score row and dominate the rest
        // whenever the distance feature is positive.
        let mut coefficients = vec![vec![0.0; D]; N_CLASSES];
        coefficients[Mode::Car.index()][1] = 1.0;
        coefficients[Mode::Bike.index()][1] = 1.0;
        let model = ModeClassifier::from_parts(
            coefficients,
            [0.0; N_FEATURES],
            [1.0; N_FEATURES],
            0.0,
        )
        .unwrap();
        let scores = model.scores(&features(10.0));
        assert_eq!(scores[Mode::Car.index()], 10.0);
        assert_eq!(scores[Mode::Car.index()], scores[Mode::Bike.index()]);
        assert_eq!(model.predict(&features(10.0)), Mode::Car);
    }

    #[test]
    fn separable_toy_set_is_fully_recovered() {
        // Long trips by transit, short trips on foot, wide margin.
        let mut records = Vec::new();
        for i in 0..20 {
            records.push((features(10.0 + i as f64 * 0.1), Mode::Transit));
            records.push((features(1.0 + i as f64 * 0.05), Mode::Walk));
        }
        let model = train_mode_classifier(&records, 10, 7).unwrap();
        assert_eq!(model.cv_accuracy, 1.0);
        for (f, mode) in &records {
            assert_eq!(model.predict(f), *mode);
        }
    }

    #[test]
    fn shuffled_labels_score_at_chance_level() {
        let mut rng = crate::rng::master(42);
        let records: Vec<(ModeFeatures, Mode)> = (0..400)
            .map(|_| {
                let f = ModeFeatures {
                    distance_km: rng.random_range(0.0..20.0),
                    age_ordinal: f64::from(rng.random_range(0u8..5)),
                    female: f64::from(rng.random_range(0u8..2)),
                    party_size: f64::from(rng.random_range(2u8..7)),
                    weekend: f64::from(rng.random_range(0u8..2)),
                };
                (f, Mode::ALL[rng.random_range(0..5)])
            })
            .collect();
        let model = train_mode_classifier(&records, 10, 9).unwrap();
        assert!(
            (model.cv_accuracy - 0.2).abs() <= 0.1,
            "chance-level accuracy expected, got {}",
            model.cv_accuracy
        );
    }

    #[test]
    fn single_class_is_degenerate() {
        let records: Vec<(ModeFeatures, Mode)> =
            (0..10).map(|i| (features(i as f64), Mode::Car)).collect();
        assert!(matches!(
            train_mode_classifier(&records, 10, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let mut records = Vec::new();
        for i in 0..15 {
            records.push((features(8.0 + i as f64 * 0.3), Mode::Transit));
            records.push((features(0.5 + i as f64 * 0.1), Mode::Walk));
            records.push((
                ModeFeatures {
                    party_size: 5.0,
                    ..features(4.0 + i as f64 * 0.2)
                },
                Mode::Car,
            ));
        }
        let model = train_mode_classifier(&records, 10, 3).unwrap();
        let restored = ModeClassifier::from_json(&model.to_json()).unwrap();
        assert_eq!(model, restored);
        for (f, _) in &records {
            assert_eq!(model.predict(f), restored.predict(f));
        }
    }

    #[test]
    fn corrupt_json_is_rejected() {
        let model = ModeClassifier::from_parts(
            vec![vec![0.0; D]; N_CLASSES],
            [0.0; N_FEATURES],
            [1.0; N_FEATURES],
            0.5,
        )
        .unwrap();
        let json = model.to_json().replace("\"transit\"", "\"hovercraft\"");
        assert!(ModeClassifier::from_json(&json).is_err());
        assert!(ModeClassifier::from_json("{}").is_err());
    }

    proptest! {
        #[test]
        fn probabilities_sum_to_one(
            coeffs in prop::collection::vec(-5.0f64..5.0, N_CLASSES * D),
            distance in 0.0f64..50.0,
            shift in -20.0f64..20.0,
        ) {
            let rows: Vec<Vec<f64>> =
                coeffs.chunks(D).map(|c| c.to_vec()).collect();
            let model = ModeClassifier::from_parts(
                rows.clone(),
                [0.0; N_FEATURES],
                [1.0; N_FEATURES],
                0.0,
            ).unwrap();
            let f = features(distance);
            let probs = model.probabilities(&f);
            let total: f64 = probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);

            // Adding a constant to every intercept leaves the
            // prediction unchanged.
            let shifted: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    let mut r = r.clone();
                    r[0] += shift;
                    r
                })
                .collect();
            let shifted_model = ModeClassifier::from_parts(
                shifted,
                [0.0; N_FEATURES],
                [1.0; N_FEATURES],
                0.0,
            ).unwrap();
            prop_assert_eq!(model.predict(&f), shifted_model.predict(&f));
        }
    }
}
