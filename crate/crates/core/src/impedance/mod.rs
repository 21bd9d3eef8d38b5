//! Per-member travel times and their aggregation into group-level
//! impedance.
//!
//! Travel times come from a [`TravelTimeProvider`] — either a synthetic
//! speed table or an explicit origin-cell × zone × mode skim matrix.
//! Each participant travels by one [`Mode`], fixed per situation:
//! observed where available, otherwise imputed by the
//! [`classifier::ModeClassifier`] or pinned via [`ModeSource::Fixed`].
//! Per-member minutes are collapsed into one number per candidate zone
//! by [`group_impedance`] according to an [`ImpedanceKind`], and an
//! [`ImpedanceTable`] caches that number for every (situation, zone)
//! pair so samplers and estimators never recompute travel times.

pub mod classifier;

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{CliqueSet, MemberId, Point, SituationId, SituationSet, Zone, ZoneId, ZoneSet};
use crate::error::{Error, Result};
pub use classifier::{ModeClassifier, ModeFeatures, ego_training_records, train_mode_classifier};

/// Travel mode of one participant for one situation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Transit,
    Bus,
    Car,
    Bike,
    Walk,
}

impl Mode {
    /// All modes in the fixed tie-break order.
    pub const ALL: [Mode; 5] = [Mode::Transit, Mode::Bus, Mode::Car, Mode::Bike, Mode::Walk];

    pub fn index(self) -> usize {
        Mode::ALL.iter().position(|&m| m == self).unwrap()
    }

    pub fn token(self) -> &'static str {
        match self {
            Mode::Transit => "transit",
            Mode::Bus => "bus",
            Mode::Car => "car",
            Mode::Bike => "bike",
            Mode::Walk => "walk",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Mode::ALL
            .iter()
            .copied()
            .find(|m| m.token() == s.trim())
            .ok_or_else(|| format!("unknown mode '{s}' (expected transit, bus, car, bike, walk)"))
    }
}

/// How per-member travel times are aggregated into the group cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImpedanceKind {
    /// Slowest member's time.
    Max,
    /// Fastest member's time.
    Min,
    /// Arithmetic mean over members.
    Mean,
    /// Median over members (even count: mean of the central pair).
    Median,
    /// The ego's own time, ignoring alters.
    Ego,
}

impl ImpedanceKind {
    pub const ALL: [ImpedanceKind; 5] = [
        ImpedanceKind::Max,
        ImpedanceKind::Min,
        ImpedanceKind::Mean,
        ImpedanceKind::Median,
        ImpedanceKind::Ego,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ImpedanceKind::Max => "max",
            ImpedanceKind::Min => "min",
            ImpedanceKind::Mean => "mean",
            ImpedanceKind::Median => "median",
            ImpedanceKind::Ego => "ego",
        }
    }
}

impl fmt::Display for ImpedanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ImpedanceKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        ImpedanceKind::ALL
            .iter()
            .copied()
            .find(|k| k.token() == s.trim())
            .ok_or_else(|| format!("unknown impedance kind '{s}' (expected max, min, mean, median, ego)"))
    }
}

/// Source of door-to-zone travel times in minutes.
#[derive(Debug, Clone, PartialEq)]
pub enum TravelTimeProvider {
    /// Straight-line distance over a per-mode speed table plus a fixed
    /// per-mode access time.
    Synthetic {
        /// km/h per mode, indexed by [`Mode::index`].
        speeds_kmh: [f64; 5],
        /// Minutes added regardless of distance, indexed likewise.
        access_min: [f64; 5],
    },
    /// Explicit skim-matrix lookup.
    Matrix(SkimMatrix),
}

impl TravelTimeProvider {
    /// Planning-manual default speeds: transit 25, bus 18, car 30,
    /// bike 15, walk 4.8 km/h; 8 min access for transit and bus.
    pub fn synthetic_default() -> Self {
        TravelTimeProvider::Synthetic {
            speeds_kmh: [25.0, 18.0, 30.0, 15.0, 4.8],
            access_min: [8.0, 8.0, 0.0, 0.0, 0.0],
        }
    }

    pub fn synthetic(speeds_kmh: [f64; 5], access_min: [f64; 5]) -> Result<Self> {
        for (i, &v) in speeds_kmh.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "speed for {} must be positive and finite, got {v}",
                    Mode::ALL[i]
                )));
            }
        }
        for (i, &v) in access_min.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!(
                    "access time for {} must be ≥ 0 and finite, got {v}",
                    Mode::ALL[i]
                )));
            }
        }
        Ok(TravelTimeProvider::Synthetic {
            speeds_kmh,
            access_min,
        })
    }

    /// Door-to-zone time in minutes for one traveller.
    pub fn travel_time(&self, origin: Point, zone: &Zone, mode: Mode) -> Result<f64> {
        match self {
            TravelTimeProvider::Synthetic {
                speeds_kmh,
                access_min,
            } => {
                let i = mode.index();
                Ok(access_min[i] + origin.distance_km(zone.centroid) / speeds_kmh[i] * 60.0)
            }
            TravelTimeProvider::Matrix(matrix) => matrix.lookup(origin, zone.id, mode),
        }
    }
}

/// Skim matrix keyed by (origin grid cell, zone, mode).
///
/// Origins are snapped to a square grid of `cell_km` spacing; the
/// `origin_cell` CSV column holds `"{cx}_{cy}"` with
/// `cx = floor(x_km / cell_km)` and likewise for y.
#[derive(Debug, Clone, PartialEq)]
pub struct SkimMatrix {
    cell_km: f64,
    times: HashMap<(i64, i64, ZoneId, Mode), f64>,
}

impl SkimMatrix {
    pub fn new(cell_km: f64) -> Result<Self> {
        if !(cell_km.is_finite() && cell_km > 0.0) {
            return Err(Error::Validation(format!(
                "cell size must be positive, got {cell_km}"
            )));
        }
        Ok(SkimMatrix {
            cell_km,
            times: HashMap::new(),
        })
    }

    /// Read `origin_cell,zone_id,mode,minutes` rows.
    pub fn load(path: impl AsRef<Path>, cell_km: f64) -> Result<Self> {
        let path = path.as_ref();
        let mut matrix = SkimMatrix::new(cell_km)?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: 0,
                message: e.to_string(),
            })?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
        };
        let (c_cell, c_zone, c_mode, c_min) =
            (col("origin_cell")?, col("zone_id")?, col("mode")?, col("minutes")?);
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            let get = |c: usize| record.get(c).unwrap_or("");
            let cell = get(c_cell);
            let (cx, cy) = cell
                .split_once('_')
                .and_then(|(a, b)| Some((a.parse::<i64>().ok()?, b.parse::<i64>().ok()?)))
                .ok_or_else(|| parse_err(line, format!("origin_cell '{cell}' not in cx_cy form")))?;
            let zone: ZoneId = get(c_zone)
                .parse()
                .map_err(|e| parse_err(line, format!("zone_id: {e}")))?;
            let mode: Mode = get(c_mode)
                .parse()
                .map_err(|e: String| parse_err(line, e))?;
            let minutes: f64 = get(c_min)
                .parse()
                .map_err(|e| parse_err(line, format!("minutes: {e}")))?;
            if !(minutes.is_finite() && minutes >= 0.0) {
                return Err(parse_err(line, format!("minutes must be ≥ 0, got {minutes}")));
            }
            matrix.insert_cell(cx, cy, zone, mode, minutes);
        }
        Ok(matrix)
    }

    pub fn insert_cell(&mut self, cx: i64, cy: i64, zone: ZoneId, mode: Mode, minutes: f64) {
        self.times.insert((cx, cy, zone, mode), minutes);
    }

    pub fn cell_of(&self, p: Point) -> (i64, i64) {
        (
            (p.x_km / self.cell_km).floor() as i64,
            (p.y_km / self.cell_km).floor() as i64,
        )
    }

    fn lookup(&self, origin: Point, zone: ZoneId, mode: Mode) -> Result<f64> {
        let (cx, cy) = self.cell_of(origin);
        self.times
            .get(&(cx, cy, zone, mode))
            .copied()
            .ok_or_else(|| {
                Error::Validation(format!(
                    "skim matrix has no entry for cell {cx}_{cy}, zone {zone}, mode {mode}"
                ))
            })
    }
}

/// Aggregate per-member times (minutes) into the group-level cost.
///
/// `ego_index` locates the ego within `times`; it only matters for
/// [`ImpedanceKind::Ego`].
pub fn group_impedance(times: &[f64], kind: ImpedanceKind, ego_index: usize) -> Result<f64> {
    if times.is_empty() {
        return Err(Error::EmptyInput("group_impedance needs at least one time"));
    }
    if ego_index >= times.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            got: ego_index,
        });
    }
    Ok(match kind {
        ImpedanceKind::Max => times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ImpedanceKind::Min => times.iter().copied().fold(f64::INFINITY, f64::min),
        ImpedanceKind::Mean => times.iter().sum::<f64>() / times.len() as f64,
        ImpedanceKind::Median => {
            let mut sorted = times.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            }
        }
        ImpedanceKind::Ego => times[ego_index],
    })
}

/// Observed modes, keyed by situation and member.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeTable {
    entries: HashMap<(SituationId, MemberId), Mode>,
}

impl ModeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, situation: SituationId, member: MemberId, mode: Mode) {
        self.entries.insert((situation, member), mode);
    }

    pub fn get(&self, situation: SituationId, member: &MemberId) -> Option<Mode> {
        self.entries.get(&(situation, member.clone())).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Read `situation_id,member_id,mode` rows.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Parse {
                path: path.to_owned(),
                line: 0,
                message: e.to_string(),
            })?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_owned(),
            line,
            message,
        };
        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| parse_err(1, format!("missing column '{name}'")))
        };
        let (c_sit, c_member, c_mode) = (col("situation_id")?, col("member_id")?, col("mode")?);
        let mut table = ModeTable::new();
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            let get = |c: usize| record.get(c).unwrap_or("");
            let situation: SituationId = get(c_sit)
                .parse()
                .map_err(|e| parse_err(line, format!("situation_id: {e}")))?;
            let member = MemberId(get(c_member).to_owned());
            let mode: Mode = get(c_mode).parse().map_err(|e: String| parse_err(line, e))?;
            if table.entries.insert((situation, member), mode).is_some() {
                return Err(parse_err(line, "duplicate (situation, member) mode row".into()));
            }
        }
        Ok(table)
    }

    /// Write rows sorted by (situation, member) for stable output.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut rows: Vec<(&(SituationId, MemberId), &Mode)> = self.entries.iter().collect();
        rows.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = String::from("situation_id,member_id,mode\n");
        for ((situation, member), mode) in rows {
            let _ = writeln!(out, "{situation},{member},{mode}");
        }
        std::fs::write(path.as_ref(), out).map_err(|e| Error::Io {
            path: path.as_ref().to_owned(),
            source: e,
        })
    }
}

/// Where each participant's mode comes from.
#[derive(Debug, Clone, Copy)]
pub enum ModeSource<'a> {
    /// Everyone travels by the same mode.
    Fixed(Mode),
    /// Every (situation, participant) pair must appear in the table.
    Table(&'a ModeTable),
    /// Observed modes where present, classifier predictions elsewhere.
    Classifier {
        classifier: &'a ModeClassifier,
        observed: Option<&'a ModeTable>,
    },
}

/// One mode per participant per situation, in situation-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeAssignment {
    per_situation: Vec<Vec<Mode>>,
}

impl ModeAssignment {
    pub fn mode(&self, situation_index: usize, participant_index: usize) -> Mode {
        self.per_situation[situation_index][participant_index]
    }

    pub fn situation_modes(&self, situation_index: usize) -> &[Mode] {
        &self.per_situation[situation_index]
    }

    pub fn len(&self) -> usize {
        self.per_situation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_situation.is_empty()
    }

    /// Assignment restricted to the situations at `indices`, in that
    /// order, for running the pipeline on a subset.
    pub fn subset(&self, indices: &[usize]) -> ModeAssignment {
        ModeAssignment {
            per_situation: indices
                .iter()
                .map(|&i| self.per_situation[i].clone())
                .collect(),
        }
    }
}

/// Fix one mode per participant per situation from the given source.
///
/// Modes are resolved once against the situation's chosen destination
/// and reused for every candidate zone thereafter.
pub fn assign_modes(
    situations: &SituationSet,
    cliques: &CliqueSet,
    zones: &ZoneSet,
    source: &ModeSource<'_>,
) -> Result<ModeAssignment> {
    let mut per_situation = Vec::with_capacity(situations.len());
    for situation in situations.iter() {
        let mut modes = Vec::with_capacity(situation.participants.len());
        for (idx, member_id) in situation.participants.iter().enumerate() {
            let mode = match source {
                ModeSource::Fixed(mode) => *mode,
                ModeSource::Table(table) => {
                    table.get(situation.id, member_id).ok_or_else(|| {
                        Error::Validation(format!(
                            "mode table has no entry for situation {} member {member_id}",
                            situation.id
                        ))
                    })?
                }
                ModeSource::Classifier {
                    classifier,
                    observed,
                } => match observed.and_then(|t| t.get(situation.id, member_id)) {
                    Some(mode) => mode,
                    None => {
                        let features =
                            ModeFeatures::for_participant(situation, idx, cliques, zones)?;
                        classifier.predict(&features)
                    }
                },
            };
            modes.push(mode);
        }
        per_situation.push(modes);
    }
    Ok(ModeAssignment { per_situation })
}

/// Cached group impedance for every (situation, zone) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpedanceTable {
    kind: ImpedanceKind,
    n_zones: usize,
    /// Chosen-zone column index per situation.
    chosen: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl ImpedanceTable {
    /// Compute the full table. Zone columns follow `zones` order;
    /// situation rows follow `situations` order.
    pub fn build(
        situations: &SituationSet,
        zones: &ZoneSet,
        provider: &TravelTimeProvider,
        modes: &ModeAssignment,
        kind: ImpedanceKind,
    ) -> Result<Self> {
        if modes.len() != situations.len() {
            return Err(Error::DimensionMismatch {
                expected: situations.len(),
                got: modes.len(),
            });
        }
        let mut rows = Vec::with_capacity(situations.len());
        let mut chosen = Vec::with_capacity(situations.len());
        let mut member_times = Vec::new();
        for (s, situation) in situations.iter().enumerate() {
            let situation_modes = modes.situation_modes(s);
            if situation_modes.len() != situation.origins.len() {
                return Err(Error::DimensionMismatch {
                    expected: situation.origins.len(),
                    got: situation_modes.len(),
                });
            }
            let mut row = Vec::with_capacity(zones.len());
            for zone in zones.iter() {
                member_times.clear();
                for (origin, mode) in situation.origins.iter().zip(situation_modes) {
                    member_times.push(provider.travel_time(*origin, zone, *mode)?);
                }
                row.push(group_impedance(&member_times, kind, situation.ego_index())?);
            }
            chosen.push(zones.index_of(situation.chosen_zone).ok_or_else(|| {
                Error::DanglingReference(format!(
                    "situation {}: chosen zone {} not in zone set",
                    situation.id, situation.chosen_zone
                ))
            })?);
            rows.push(row);
        }
        Ok(ImpedanceTable {
            kind,
            n_zones: zones.len(),
            chosen,
            rows,
        })
    }

    pub fn kind(&self) -> ImpedanceKind {
        self.kind
    }

    pub fn n_situations(&self) -> usize {
        self.rows.len()
    }

    pub fn n_zones(&self) -> usize {
        self.n_zones
    }

    /// Group impedance from situation `s` to zone column `z`.
    pub fn time(&self, situation_index: usize, zone_index: usize) -> f64 {
        self.rows[situation_index][zone_index]
    }

    /// Zone column of the situation's chosen zone.
    pub fn chosen_zone_index(&self, situation_index: usize) -> usize {
        self.chosen[situation_index]
    }

    /// Group impedance to the chosen zone.
    pub fn chosen_time(&self, situation_index: usize) -> f64 {
        self.rows[situation_index][self.chosen[situation_index]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn zone_at(id: u32, x: f64, y: f64) -> Zone {
        Zone {
            id: ZoneId(id),
            restaurant_count: 10,
            major_station: false,
            centroid: Point::new(x, y),
            area_ha: None,
        }
    }

    #[test]
    fn synthetic_travel_time_formula() {
        let p = TravelTimeProvider::synthetic_default();
        let origin = Point::new(0.0, 0.0);
        // 5 km by car at 30 km/h, no access time.
        let t = p.travel_time(origin, &zone_at(1, 3.0, 4.0), Mode::Car).unwrap();
        assert_relative_eq!(t, 10.0);
        // Zero distance on foot.
        let t = p.travel_time(origin, &zone_at(1, 0.0, 0.0), Mode::Walk).unwrap();
        assert_relative_eq!(t, 0.0);
        // 5 km transit at 20 km/h with 8 min access.
        let custom =
            TravelTimeProvider::synthetic([20.0, 18.0, 30.0, 15.0, 4.8], [8.0, 8.0, 0.0, 0.0, 0.0])
                .unwrap();
        let t = custom
            .travel_time(origin, &zone_at(1, 5.0, 0.0), Mode::Transit)
            .unwrap();
        assert_relative_eq!(t, 23.0);
    }

    #[test]
    fn invalid_speed_table_rejected() {
        assert!(TravelTimeProvider::synthetic([0.0; 5], [0.0; 5]).is_err());
        assert!(TravelTimeProvider::synthetic([1.0; 5], [-1.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn matrix_lookup_and_missing_cell() {
        let mut m = SkimMatrix::new(1.0).unwrap();
        m.insert_cell(0, 0, ZoneId(5), Mode::Bus, 17.5);
        let provider = TravelTimeProvider::Matrix(m);
        let z = zone_at(5, 9.0, 9.0);
        let t = provider
            .travel_time(Point::new(0.3, 0.9), &z, Mode::Bus)
            .unwrap();
        assert_relative_eq!(t, 17.5);
        let err = provider
            .travel_time(Point::new(1.3, 0.9), &z, Mode::Bus)
            .unwrap_err();
        assert!(err.to_string().contains("no entry"), "{err}");
    }

    #[test]
    fn group_impedance_kinds() {
        let times = [10.0, 20.0, 30.0];
        assert_eq!(group_impedance(&times, ImpedanceKind::Mean, 0).unwrap(), 20.0);
        assert_eq!(group_impedance(&times, ImpedanceKind::Max, 0).unwrap(), 30.0);
        assert_eq!(group_impedance(&times, ImpedanceKind::Min, 0).unwrap(), 10.0);
        assert_eq!(group_impedance(&times, ImpedanceKind::Median, 0).unwrap(), 20.0);
        assert_eq!(group_impedance(&times, ImpedanceKind::Ego, 1).unwrap(), 20.0);
        // Even-length median averages the central pair.
        let even = [10.0, 20.0, 30.0, 40.0];
        assert_eq!(group_impedance(&even, ImpedanceKind::Median, 0).unwrap(), 25.0);
        // Single participant: every kind coincides.
        for kind in ImpedanceKind::ALL {
            assert_eq!(group_impedance(&[7.0], kind, 0).unwrap(), 7.0);
        }
        assert!(group_impedance(&[], ImpedanceKind::Mean, 0).is_err());
    }

    proptest! {
        #[test]
        fn aggregates_are_ordered(times in prop::collection::vec(0.0f64..500.0, 1..8)) {
            let min = group_impedance(&times, ImpedanceKind::Min, 0).unwrap();
            let max = group_impedance(&times, ImpedanceKind::Max, 0).unwrap();
            let mean = group_impedance(&times, ImpedanceKind::Mean, 0).unwrap();
            let median = group_impedance(&times, ImpedanceKind::Median, 0).unwrap();
            prop_assert!(min <= median + 1e-12 && median <= max + 1e-12);
            prop_assert!(min <= mean + 1e-12 && mean <= max + 1e-12);
        }

        #[test]
        fn aggregates_are_permutation_invariant(
            times in prop::collection::vec(0.0f64..500.0, 1..8),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let mut shuffled = times.clone();
            shuffled.shuffle(&mut crate::rng::master(seed));
            for kind in [ImpedanceKind::Max, ImpedanceKind::Min, ImpedanceKind::Mean, ImpedanceKind::Median] {
                let a = group_impedance(&times, kind, 0).unwrap();
                let b = group_impedance(&shuffled, kind, 0).unwrap();
                prop_assert!((a - b).abs() < 1e-9, "{kind}: {a} vs {b}");
            }
        }

        #[test]
        fn synthetic_time_monotone_in_distance(
            d1 in 0.0f64..60.0,
            d2 in 0.0f64..60.0,
            mode_idx in 0usize..5,
        ) {
            let provider = TravelTimeProvider::synthetic_default();
            let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let origin = Point::new(0.0, 0.0);
            let mode = Mode::ALL[mode_idx];
            let t_near = provider.travel_time(origin, &zone_at(1, near, 0.0), mode).unwrap();
            let t_far = provider.travel_time(origin, &zone_at(1, far, 0.0), mode).unwrap();
            prop_assert!(t_near <= t_far);
        }
    }

    #[test]
    fn mode_table_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("modes.csv");
        let mut table = ModeTable::new();
        table.insert(SituationId(1), "b".into(), Mode::Walk);
        table.insert(SituationId(0), "a".into(), Mode::Transit);
        table.insert(SituationId(1), "a".into(), Mode::Car);
        table.write(&path).unwrap();
        let loaded = ModeTable::load(&path).unwrap();
        assert_eq!(loaded, table);
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "situation_id,member_id,mode\n0,a,transit\n1,a,car\n1,b,walk\n"
        );
    }
}
