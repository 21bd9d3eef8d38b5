//! Segment-wise re-estimation: split the situations by a group or
//! event characteristic and run the bootstrap pipeline on each side.

use serde::{Deserialize, Serialize};

use crate::domain::{
    ChoiceSituation, Clique, Dataset, DayKind, Gender, Point, RelLength, SituationSet, TimeOfDay,
};
use crate::error::{Error, Result};
use crate::estimator::ModelSpec;
use crate::impedance::{ModeAssignment, TravelTimeProvider};

use super::{BootstrapConfig, BootstrapResult, bootstrap_estimate};

/// Binary classification of choice situations by group or event
/// characteristics. Every rule is total: each situation lands on
/// exactly one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentRule {
    /// More than half the participants are sixty or older.
    ElderMajority,
    /// More than half the participants are female.
    FemaleMajority,
    /// Party of at most four.
    PartySizeAtMost4,
    /// Noon event versus evening or night.
    Noon,
    /// Weekend versus weekday.
    Weekend,
    /// Ego's home within `radius_km` of the planar origin (the
    /// coordinate frame is centered on the study area).
    CentralHome { radius_km: f64 },
    /// Majority of alters have known the ego for five years or more.
    LongRelationship,
}

impl SegmentRule {
    /// Short machine name for file naming and config echoes.
    pub fn label(&self) -> &'static str {
        match self {
            SegmentRule::ElderMajority => "age",
            SegmentRule::FemaleMajority => "gender",
            SegmentRule::PartySizeAtMost4 => "party_size",
            SegmentRule::Noon => "time",
            SegmentRule::Weekend => "day",
            SegmentRule::CentralHome { .. } => "residence",
            SegmentRule::LongRelationship => "relationship",
        }
    }

    /// Labels of the (rule-true, rule-false) segments.
    pub fn segment_labels(&self) -> (String, String) {
        let (yes, no) = match self {
            SegmentRule::ElderMajority => ("age_ge60", "age_lt60"),
            SegmentRule::FemaleMajority => ("female_majority", "male_majority"),
            SegmentRule::PartySizeAtMost4 => ("size_le4", "size_gt4"),
            SegmentRule::Noon => ("noon", "evening"),
            SegmentRule::Weekend => ("weekend", "weekday"),
            SegmentRule::CentralHome { .. } => ("central", "outer"),
            SegmentRule::LongRelationship => ("rel_ge5y", "rel_lt5y"),
        };
        (yes.to_owned(), no.to_owned())
    }

    /// Parse a rule name as used on the command line: one of `age`,
    /// `gender`, `party_size`, `time`, `day`, `residence:<radius_km>`,
    /// `relationship`.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(radius) = text.strip_prefix("residence:") {
            let radius_km: f64 = radius.parse().map_err(|_| {
                Error::Validation(format!("invalid residence radius {radius:?}"))
            })?;
            if !(radius_km.is_finite() && radius_km > 0.0) {
                return Err(Error::Validation(format!(
                    "residence radius must be positive, got {radius_km}"
                )));
            }
            return Ok(SegmentRule::CentralHome { radius_km });
        }
        match text {
            "age" => Ok(SegmentRule::ElderMajority),
            "gender" => Ok(SegmentRule::FemaleMajority),
            "party_size" => Ok(SegmentRule::PartySizeAtMost4),
            "time" => Ok(SegmentRule::Noon),
            "day" => Ok(SegmentRule::Weekend),
            "relationship" => Ok(SegmentRule::LongRelationship),
            other => Err(Error::Validation(format!(
                "unknown segmentation rule {other:?} \
                 (expected age, gender, party_size, time, day, \
                 residence:<radius_km>, or relationship)"
            ))),
        }
    }

    /// Whether the situation falls on the rule-true side.
    pub fn applies(&self, situation: &ChoiceSituation, clique: &Clique) -> bool {
        match self {
            SegmentRule::ElderMajority => {
                let elders = situation
                    .participants
                    .iter()
                    .filter_map(|id| clique.member(id))
                    .filter(|m| m.age_band.is_sixty_plus())
                    .count();
                2 * elders > situation.party_size()
            }
            SegmentRule::FemaleMajority => {
                let female = situation
                    .participants
                    .iter()
                    .filter_map(|id| clique.member(id))
                    .filter(|m| m.gender == Gender::Female)
                    .count();
                2 * female > situation.party_size()
            }
            SegmentRule::PartySizeAtMost4 => situation.party_size() <= 4,
            SegmentRule::Noon => situation.time == TimeOfDay::Noon,
            SegmentRule::Weekend => situation.day == DayKind::Weekend,
            SegmentRule::CentralHome { radius_km } => {
                clique.ego.home.distance_km(Point::new(0.0, 0.0)) <= *radius_km
            }
            SegmentRule::LongRelationship => {
                clique.rel_length_majority() == RelLength::AtLeast5y
            }
        }
    }
}

/// One segment's size and bootstrap output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOutcome {
    pub label: String,
    pub n_situations: usize,
    pub bootstrap: BootstrapResult,
}

/// Paired per-segment results for one rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedResult {
    pub rule: SegmentRule,
    /// Rule-true segment first.
    pub segments: [SegmentOutcome; 2],
    pub warnings: Vec<String>,
}

/// Split the dataset by `rule` and bootstrap each side with the same
/// configuration. Either side being empty is an error; sides smaller
/// than 30 situations carry a warning.
pub fn segment_and_estimate(
    dataset: &Dataset,
    modes: &ModeAssignment,
    rule: SegmentRule,
    spec: &ModelSpec,
    provider: &TravelTimeProvider,
    config: &BootstrapConfig,
) -> Result<SegmentedResult> {
    let mut inside: Vec<usize> = Vec::new();
    let mut outside: Vec<usize> = Vec::new();
    for (i, situation) in dataset.situations.iter().enumerate() {
        let clique = dataset
            .cliques
            .get(situation.clique_id)
            .ok_or_else(|| Error::DanglingReference(format!("clique {}", situation.clique_id)))?;
        if rule.applies(situation, clique) {
            inside.push(i);
        } else {
            outside.push(i);
        }
    }
    let (yes_label, no_label) = rule.segment_labels();
    let mut warnings = Vec::new();
    let mut run = |label: &str, indices: &[usize]| -> Result<SegmentOutcome> {
        if indices.is_empty() {
            return Err(Error::Degenerate(format!("segment {label:?} is empty")));
        }
        if indices.len() < 30 {
            warnings.push(format!(
                "segment {label:?} has only {} situations",
                indices.len()
            ));
        }
        let situations = SituationSet::new(
            indices
                .iter()
                .map(|&i| dataset.situations.situations()[i].clone())
                .collect(),
        )?;
        let subset = Dataset {
            zones: dataset.zones.clone(),
            cliques: dataset.cliques.clone(),
            situations,
        };
        let sub_modes = modes.subset(indices);
        Ok(SegmentOutcome {
            label: label.to_owned(),
            n_situations: indices.len(),
            bootstrap: bootstrap_estimate(&subset, &sub_modes, spec, provider, config)?,
        })
    };
    let segments = [run(&yes_label, &inside)?, run(&no_label, &outside)?];
    Ok(SegmentedResult { rule, segments, warnings })
}
