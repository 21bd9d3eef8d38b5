//! Core data model: zones, people, cliques, and choice situations.
//!
//! A dataset is three collections — a [`ZoneSet`] acting as the
//! universal choice set, a [`CliqueSet`] of egos with their alters, and
//! a [`SituationSet`] of observed destination choices. Loaders resolve
//! all cross-references at ingestion, so everything downstream works
//! with indices into these collections.

pub mod geo;
mod io;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use geo::{Point, Projection};
pub use io::{
    load_cliques, load_dataset, load_situations, load_zones, write_cliques, write_dataset,
    write_situations, write_zones,
};

macro_rules! numeric_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }

        impl FromStr for $name {
            type Err = std::num::ParseIntError;
            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                s.trim().parse().map($name)
            }
        }
    };
}

numeric_id!(
    /// Identifier of a destination zone.
    ZoneId
);
numeric_id!(
    /// Identifier of a clique (an ego plus their alters).
    CliqueId
);
numeric_id!(
    /// Identifier of a choice situation.
    SituationId
);

/// Identifier of a surveyed person within a clique.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemberId(pub String);

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<&str> for MemberId {
    fn from(s: &str) -> Self {
        MemberId(s.to_owned())
    }
}

macro_rules! token_enum {
    ($(#[$doc:meta])* $name:ident { $($variant:ident => $token:literal),+ $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &[$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
                match s.trim() {
                    $($token => Ok($name::$variant),)+
                    other => Err(format!(
                        concat!("unknown ", stringify!($name), " '{}' (expected one of: {})"),
                        other,
                        [$($token),+].join(", ")
                    )),
                }
            }
        }
    };
}

token_enum!(
    /// Position of a member within their clique.
    Role {
        Ego => "ego",
        Alter => "alter",
    }
);

token_enum!(
    /// Age band of a member.
    AgeBand {
        Twenties => "20s",
        Thirties => "30s",
        Forties => "40s",
        Fifties => "50s",
        SixtyPlus => "60plus",
    }
);

impl AgeBand {
    /// Ordinal encoding used as a classifier feature (0 = 20s … 4 = 60+).
    pub fn ordinal(self) -> f64 {
        AgeBand::ALL.iter().position(|&b| b == self).unwrap() as f64
    }

    pub fn is_sixty_plus(self) -> bool {
        self == AgeBand::SixtyPlus
    }
}

token_enum!(
    /// Gender of a member.
    Gender {
        Male => "male",
        Female => "female",
    }
);

token_enum!(
    /// How long an ego-alter relationship has existed.
    RelLength {
        LessThan5y => "lt5",
        AtLeast5y => "ge5",
    }
);

token_enum!(
    /// Ordinal eating-out frequency band.
    EatOutBand {
        Rarely => "rarely",
        Monthly => "monthly",
        Weekly => "weekly",
        Daily => "daily",
    }
);

token_enum!(
    /// Whether a situation is the observed event or a frequently
    /// visited alternative place reported for the same clique.
    SituationKind {
        ActualEvent => "actual",
        AlternativePlace => "alt",
    }
);

token_enum!(
    /// Day classification of a situation.
    DayKind {
        Weekday => "weekday",
        Weekend => "weekend",
    }
);

token_enum!(
    /// Time-of-day classification of a situation.
    TimeOfDay {
        Noon => "noon",
        Evening => "evening",
        Night => "night",
    }
);

/// A destination alternative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: ZoneId,
    pub restaurant_count: u32,
    pub major_station: bool,
    pub centroid: Point,
    /// Zone area in hectares; informational only.
    pub area_ha: Option<f64>,
}

impl Zone {
    /// Log of the restaurant count, the "size" utility variable.
    /// Zero-count zones are clamped to one restaurant so the log stays
    /// finite; such zones carry zero sampling weight anyway.
    pub fn ln_restaurants(&self) -> f64 {
        f64::from(self.restaurant_count.max(1)).ln()
    }
}

/// The universal choice set: every zone a group could pick.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSet {
    zones: Vec<Zone>,
    by_id: HashMap<ZoneId, usize>,
}

impl ZoneSet {
    pub fn new(zones: Vec<Zone>) -> Result<Self> {
        if zones.is_empty() {
            return Err(Error::EmptyInput("no zones"));
        }
        let mut by_id = HashMap::with_capacity(zones.len());
        for (idx, zone) in zones.iter().enumerate() {
            if !zone.centroid.is_finite() {
                return Err(Error::Validation(format!(
                    "zone {} has a non-finite centroid",
                    zone.id
                )));
            }
            if by_id.insert(zone.id, idx).is_some() {
                return Err(Error::Validation(format!("duplicate zone id {}", zone.id)));
            }
        }
        Ok(ZoneSet { zones, by_id })
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn get(&self, id: ZoneId) -> Option<&Zone> {
        self.index_of(id).map(|i| &self.zones[i])
    }

    pub fn index_of(&self, id: ZoneId) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn by_index(&self, index: usize) -> &Zone {
        &self.zones[index]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Zone> {
        self.zones.iter()
    }
}

/// One surveyed person.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub id: MemberId,
    pub role: Role,
    pub home: Point,
    pub work: Option<Point>,
    pub age_band: AgeBand,
    pub gender: Gender,
    /// Length of the relationship with the ego; `None` for the ego.
    pub rel_length: Option<RelLength>,
}

/// An ego together with the alters they reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clique {
    pub id: CliqueId,
    pub ego: Member,
    pub alters: Vec<Member>,
    /// Ego's eating-out frequency band, if surveyed.
    pub eating_out_frequency: Option<EatOutBand>,
}

impl Clique {
    /// Ego first, then alters in file order.
    pub fn members(&self) -> impl Iterator<Item = &Member> {
        std::iter::once(&self.ego).chain(self.alters.iter())
    }

    pub fn member(&self, id: &MemberId) -> Option<&Member> {
        self.members().find(|m| &m.id == id)
    }

    /// Majority relationship length over alters; ties resolve to the
    /// longer-standing band.
    pub fn rel_length_majority(&self) -> RelLength {
        let lt5 = self
            .alters
            .iter()
            .filter(|a| a.rel_length == Some(RelLength::LessThan5y))
            .count();
        if 2 * lt5 > self.alters.len() {
            RelLength::LessThan5y
        } else {
            RelLength::AtLeast5y
        }
    }
}

/// All cliques of a dataset, indexable by id.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueSet {
    cliques: Vec<Clique>,
    by_id: HashMap<CliqueId, usize>,
}

impl CliqueSet {
    pub fn new(cliques: Vec<Clique>) -> Result<Self> {
        if cliques.is_empty() {
            return Err(Error::EmptyInput("no cliques"));
        }
        let mut by_id = HashMap::with_capacity(cliques.len());
        for (idx, clique) in cliques.iter().enumerate() {
            if clique.ego.role != Role::Ego {
                return Err(Error::Validation(format!(
                    "clique {}: ego slot holds a non-ego member",
                    clique.id
                )));
            }
            if clique.alters.iter().any(|a| a.role != Role::Alter) {
                return Err(Error::Validation(format!(
                    "clique {}: alter slot holds a non-alter member",
                    clique.id
                )));
            }
            let mut ids = HashSet::new();
            for member in clique.members() {
                if !member.home.is_finite() {
                    return Err(Error::Validation(format!(
                        "clique {}: member {} has a non-finite home",
                        clique.id, member.id
                    )));
                }
                if !ids.insert(&member.id) {
                    return Err(Error::Validation(format!(
                        "clique {}: duplicate member id {}",
                        clique.id, member.id
                    )));
                }
            }
            if by_id.insert(clique.id, idx).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate clique id {}",
                    clique.id
                )));
            }
        }
        Ok(CliqueSet { cliques, by_id })
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn get(&self, id: CliqueId) -> Option<&Clique> {
        self.by_id.get(&id).map(|&i| &self.cliques[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Clique> {
        self.cliques.iter()
    }
}

/// One destination choice made by a group.
///
/// `participants` always starts with the ego; `origins` is parallel to
/// it and already resolved under the origin policy: for an actual event
/// the ego departs from the observed event origin and alters from home,
/// while for an alternative place everyone departs from home.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceSituation {
    pub id: SituationId,
    pub clique_id: CliqueId,
    pub kind: SituationKind,
    pub chosen_zone: ZoneId,
    pub participants: Vec<MemberId>,
    pub origins: Vec<Point>,
    pub day: DayKind,
    pub time: TimeOfDay,
}

impl ChoiceSituation {
    pub fn party_size(&self) -> usize {
        self.participants.len()
    }

    /// Index of the ego within `participants`/`origins`.
    pub fn ego_index(&self) -> usize {
        0
    }
}

/// All choice situations of a dataset, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct SituationSet {
    situations: Vec<ChoiceSituation>,
    by_id: HashMap<SituationId, usize>,
}

impl SituationSet {
    pub fn new(situations: Vec<ChoiceSituation>) -> Result<Self> {
        if situations.is_empty() {
            return Err(Error::EmptyInput("no choice situations"));
        }
        let mut by_id = HashMap::with_capacity(situations.len());
        for (idx, situation) in situations.iter().enumerate() {
            if by_id.insert(situation.id, idx).is_some() {
                return Err(Error::Validation(format!(
                    "duplicate situation id {}",
                    situation.id
                )));
            }
        }
        Ok(SituationSet { situations, by_id })
    }

    pub fn len(&self) -> usize {
        self.situations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.situations.is_empty()
    }

    pub fn situations(&self) -> &[ChoiceSituation] {
        &self.situations
    }

    pub fn get(&self, id: SituationId) -> Option<&ChoiceSituation> {
        self.by_id.get(&id).map(|&i| &self.situations[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChoiceSituation> {
        self.situations.iter()
    }
}

/// A complete loaded dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub zones: ZoneSet,
    pub cliques: CliqueSet,
    pub situations: SituationSet,
}

/// Summary statistics and invariant violations for a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetReport {
    pub n_zones: usize,
    pub n_major_station: usize,
    pub mean_restaurant_count: f64,
    pub n_cliques: usize,
    pub n_members: usize,
    pub n_situations: usize,
    pub n_actual: usize,
    pub n_alternative: usize,
    pub party_size_histogram: BTreeMap<usize, usize>,
    pub day_histogram: BTreeMap<String, usize>,
    pub time_histogram: BTreeMap<String, usize>,
    pub violations: Vec<String>,
}

impl DatasetReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// Share (percent) of situations with the given party size.
    pub fn party_size_share(&self, size: usize) -> f64 {
        if self.n_situations == 0 {
            return 0.0;
        }
        let count = self.party_size_histogram.get(&size).copied().unwrap_or(0);
        100.0 * count as f64 / self.n_situations as f64
    }

    /// Convert to an error if any violation was recorded.
    pub fn into_result(self) -> Result<DatasetReport> {
        if self.is_valid() {
            Ok(self)
        } else {
            Err(Error::Validation(format!(
                "{} invariant violation(s): {}",
                self.violations.len(),
                self.violations.join("; ")
            )))
        }
    }
}

/// Check every cross-cutting dataset invariant and summarise counts.
///
/// Loaders already reject malformed files; this re-checks the same
/// rules on the in-memory model so programmatically built datasets get
/// the same scrutiny, and computes the summary a front end reports.
pub fn validate_dataset(
    zones: &ZoneSet,
    cliques: &CliqueSet,
    situations: &SituationSet,
) -> DatasetReport {
    let mut violations = Vec::new();
    let mut party_size_histogram = BTreeMap::new();
    let mut day_histogram = BTreeMap::new();
    let mut time_histogram = BTreeMap::new();
    let mut n_actual = 0;
    let mut n_alternative = 0;
    let mut actual_seen: HashMap<CliqueId, usize> = HashMap::new();

    for situation in situations.iter() {
        match situation.kind {
            SituationKind::ActualEvent => {
                n_actual += 1;
                *actual_seen.entry(situation.clique_id).or_insert(0) += 1;
            }
            SituationKind::AlternativePlace => n_alternative += 1,
        }
        *party_size_histogram
            .entry(situation.party_size())
            .or_insert(0) += 1;
        *day_histogram
            .entry(situation.day.token().to_owned())
            .or_insert(0) += 1;
        *time_histogram
            .entry(situation.time.token().to_owned())
            .or_insert(0) += 1;

        let sid = situation.id;
        if zones.get(situation.chosen_zone).is_none() {
            violations.push(format!(
                "situation {sid}: chosen zone {} not in zone set",
                situation.chosen_zone
            ));
        }
        if situation.party_size() < 2 {
            violations.push(format!(
                "situation {sid}: party size {} below 2",
                situation.party_size()
            ));
        }
        if situation.participants.len() != situation.origins.len() {
            violations.push(format!(
                "situation {sid}: {} participants but {} origins",
                situation.participants.len(),
                situation.origins.len()
            ));
        }
        if situation
            .origins
            .iter()
            .any(|origin| !origin.is_finite())
        {
            violations.push(format!("situation {sid}: non-finite origin"));
        }
        let mut distinct = HashSet::new();
        if !situation.participants.iter().all(|p| distinct.insert(p)) {
            violations.push(format!("situation {sid}: repeated participant"));
        }

        let Some(clique) = cliques.get(situation.clique_id) else {
            violations.push(format!(
                "situation {sid}: clique {} not in clique set",
                situation.clique_id
            ));
            continue;
        };
        if clique.alters.is_empty() {
            violations.push(format!(
                "situation {sid}: clique {} has no alters for a joint choice",
                clique.id
            ));
        }
        match situation.participants.first() {
            Some(first) if *first == clique.ego.id => {}
            _ => violations.push(format!("situation {sid}: first participant is not the ego")),
        }
        for (participant, origin) in situation.participants.iter().zip(&situation.origins) {
            let Some(member) = clique.member(participant) else {
                violations.push(format!(
                    "situation {sid}: participant {participant} not in clique {}",
                    clique.id
                ));
                continue;
            };
            // Origin policy: everyone departs from home except the ego
            // of an actual event, who departs from the observed origin.
            let must_be_home = !(situation.kind == SituationKind::ActualEvent
                && member.role == Role::Ego);
            if must_be_home && *origin != member.home {
                violations.push(format!(
                    "situation {sid}: participant {participant} origin differs from home"
                ));
            }
        }
    }

    for (clique_id, count) in &actual_seen {
        if *count > 1 {
            violations.push(format!(
                "clique {clique_id}: {count} actual events (at most one expected)"
            ));
        }
    }

    violations.sort();
    let n_zones = zones.len();
    let total_restaurants: u64 = zones.iter().map(|z| u64::from(z.restaurant_count)).sum();
    DatasetReport {
        n_zones,
        n_major_station: zones.iter().filter(|z| z.major_station).count(),
        mean_restaurant_count: total_restaurants as f64 / n_zones as f64,
        n_cliques: cliques.len(),
        n_members: cliques.iter().map(|c| 1 + c.alters.len()).sum(),
        n_situations: situations.len(),
        n_actual,
        n_alternative,
        party_size_histogram,
        day_histogram,
        time_histogram,
        violations,
    }
}
