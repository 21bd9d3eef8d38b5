//! CSV ingestion and serialisation for the dataset files.
//!
//! A dataset lives in a directory holding `zones.csv`, `cliques.csv`
//! and `situations.csv`. Coordinates may be planar kilometres
//! (`x_km`/`y_km`, `home_x`/`home_y`) or WGS84 degrees (`lon`/`lat`,
//! `home_lon`/`home_lat`); one style must be used consistently across
//! the dataset. Lon/lat input is projected about the zone-file centroid
//! at load time, and writers always emit planar kilometres.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{
    ChoiceSituation, Clique, CliqueId, CliqueSet, Dataset, DayKind, EatOutBand, Gender, Member,
    MemberId, Point, Projection, RelLength, Role, SituationId, SituationKind, SituationSet,
    TimeOfDay, Zone, ZoneId, ZoneSet,
};
use crate::error::{Error, Result};

/// One parsed CSV file with a header-name lookup.
struct Sheet {
    path: PathBuf,
    columns: HashMap<String, usize>,
    /// `(1-based file line, fields)` per record.
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Sheet {
    fn read(path: &Path) -> Result<Sheet> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let columns = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .enumerate()
            .map(|(i, name)| (name.to_owned(), i))
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(rows.len() + 2);
            rows.push((line, record));
        }
        Ok(Sheet {
            path: path.to_owned(),
            columns,
            rows,
        })
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.columns.get(name).copied().ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line: 1,
            message: format!("missing required column '{name}'"),
        })
    }

    fn optional_column(&self, name: &str) -> Option<usize> {
        self.columns.get(name).copied()
    }

    fn field<'a>(&self, row: &'a csv::StringRecord, line: usize, idx: usize) -> Result<&'a str> {
        row.get(idx).ok_or_else(|| Error::Parse {
            path: self.path.clone(),
            line,
            message: "row has fewer fields than the header".into(),
        })
    }

    fn parse<T>(&self, line: usize, name: &str, raw: &str) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        raw.parse().map_err(|e| Error::Parse {
            path: self.path.clone(),
            line,
            message: format!("column '{name}': {e} (got '{raw}')"),
        })
    }

    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::Io {
                    path: path.to_owned(),
                    source: io,
                }
            } else {
                unreachable!()
            }
        }
        _ => Error::Parse {
            path: path.to_owned(),
            line: e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0),
            message: e.to_string(),
        },
    }
}

/// Which coordinate columns a file uses.
#[derive(Clone, Copy, PartialEq, Debug)]
enum CoordStyle {
    PlanarKm,
    LonLat,
}

fn detect_style(sheet: &Sheet, planar: (&str, &str), lonlat: (&str, &str)) -> Result<CoordStyle> {
    let has_planar = sheet.optional_column(planar.0).is_some();
    let has_lonlat = sheet.optional_column(lonlat.0).is_some();
    match (has_planar, has_lonlat) {
        (true, false) => Ok(CoordStyle::PlanarKm),
        (false, true) => Ok(CoordStyle::LonLat),
        (true, true) => Err(sheet.error(
            1,
            format!("both '{}' and '{}' present; use one coordinate style", planar.0, lonlat.0),
        )),
        (false, false) => Err(sheet.error(
            1,
            format!("missing coordinate columns ('{}'/'{}' or '{}'/'{}')",
                planar.0, planar.1, lonlat.0, lonlat.1),
        )),
    }
}

/// Load the universal zone set. Lon/lat files are projected about their
/// own centroid; use [`load_zones_with_projection`] to retrieve the
/// projection for companion files.
pub fn load_zones(path: impl AsRef<Path>) -> Result<ZoneSet> {
    load_zones_with_projection(path).map(|(zones, _)| zones)
}

/// Load zones and, for lon/lat input, the projection derived from the
/// file's centroid (to apply to the other files of the dataset).
pub fn load_zones_with_projection(
    path: impl AsRef<Path>,
) -> Result<(ZoneSet, Option<Projection>)> {
    let sheet = Sheet::read(path.as_ref())?;
    let style = detect_style(&sheet, ("x_km", "y_km"), ("lon", "lat"))?;
    let id_col = sheet.column("id")?;
    let count_col = sheet.column("restaurant_count")?;
    let major_col = sheet.column("major_station")?;
    let (cx, cy) = match style {
        CoordStyle::PlanarKm => (sheet.column("x_km")?, sheet.column("y_km")?),
        CoordStyle::LonLat => (sheet.column("lon")?, sheet.column("lat")?),
    };
    let area_col = sheet.optional_column("area_ha");

    let mut raw = Vec::with_capacity(sheet.rows.len());
    for (line, row) in &sheet.rows {
        let line = *line;
        let id: ZoneId = sheet.parse(line, "id", sheet.field(row, line, id_col)?)?;
        let count_raw = sheet.field(row, line, count_col)?;
        let count: i64 = sheet.parse(line, "restaurant_count", count_raw)?;
        let count = u32::try_from(count)
            .map_err(|_| sheet.error(line, format!("restaurant_count {count} must be ≥ 0")))?;
        let major = match sheet.field(row, line, major_col)? {
            "0" => false,
            "1" => true,
            other => {
                return Err(sheet.error(line, format!("major_station must be 0 or 1, got '{other}'")));
            }
        };
        let a: f64 = sheet.parse(line, "coordinate", sheet.field(row, line, cx)?)?;
        let b: f64 = sheet.parse(line, "coordinate", sheet.field(row, line, cy)?)?;
        let area_ha = match area_col {
            Some(col) => {
                let raw = sheet.field(row, line, col)?;
                if raw.is_empty() {
                    None
                } else {
                    Some(sheet.parse(line, "area_ha", raw)?)
                }
            }
            None => None,
        };
        raw.push((id, count, major, a, b, area_ha));
    }

    let projection = match style {
        CoordStyle::PlanarKm => None,
        CoordStyle::LonLat => {
            let coords: Vec<(f64, f64)> = raw.iter().map(|r| (r.3, r.4)).collect();
            Projection::from_centroid(&coords)
        }
    };
    let zones = raw
        .into_iter()
        .map(|(id, restaurant_count, major_station, a, b, area_ha)| Zone {
            id,
            restaurant_count,
            major_station,
            centroid: match projection {
                Some(p) => p.project(a, b),
                None => Point::new(a, b),
            },
            area_ha,
        })
        .collect();
    Ok((ZoneSet::new(zones)?, projection))
}

/// Load cliques. `projection` must be the zone-file projection when the
/// dataset uses lon/lat, and `None` for planar input.
pub fn load_cliques(path: impl AsRef<Path>, projection: Option<&Projection>) -> Result<CliqueSet> {
    let sheet = Sheet::read(path.as_ref())?;
    let style = detect_style(&sheet, ("home_x", "home_y"), ("home_lon", "home_lat"))?;
    if style == CoordStyle::LonLat && projection.is_none() {
        return Err(sheet.error(
            1,
            "lon/lat cliques require the projection of a lon/lat zone file",
        ));
    }
    if style == CoordStyle::PlanarKm && projection.is_some() {
        return Err(sheet.error(1, "planar cliques mixed with a lon/lat zone file"));
    }
    let clique_col = sheet.column("clique_id")?;
    let member_col = sheet.column("member_id")?;
    let role_col = sheet.column("role")?;
    let (hx, hy) = match style {
        CoordStyle::PlanarKm => (sheet.column("home_x")?, sheet.column("home_y")?),
        CoordStyle::LonLat => (sheet.column("home_lon")?, sheet.column("home_lat")?),
    };
    let age_col = sheet.column("age_band")?;
    let gender_col = sheet.column("gender")?;
    let rel_col = sheet.column("rel_length")?;
    let freq_col = sheet.optional_column("eatout_freq");

    // Cliques appear in first-row order; members keep file order.
    let mut order: Vec<CliqueId> = Vec::new();
    let mut egos: HashMap<CliqueId, Member> = HashMap::new();
    let mut alters: HashMap<CliqueId, Vec<Member>> = HashMap::new();
    let mut freqs: HashMap<CliqueId, EatOutBand> = HashMap::new();

    for (line, row) in &sheet.rows {
        let line = *line;
        let clique_id: CliqueId = sheet.parse(line, "clique_id", sheet.field(row, line, clique_col)?)?;
        let member_id = MemberId(sheet.field(row, line, member_col)?.to_owned());
        if member_id.0.is_empty() {
            return Err(sheet.error(line, "empty member_id"));
        }
        let role: Role = sheet.parse(line, "role", sheet.field(row, line, role_col)?)?;
        let a: f64 = sheet.parse(line, "home coordinate", sheet.field(row, line, hx)?)?;
        let b: f64 = sheet.parse(line, "home coordinate", sheet.field(row, line, hy)?)?;
        let home = match projection {
            Some(p) => p.project(a, b),
            None => Point::new(a, b),
        };
        let age_band: super::AgeBand = sheet.parse(line, "age_band", sheet.field(row, line, age_col)?)?;
        let gender: Gender = sheet.parse(line, "gender", sheet.field(row, line, gender_col)?)?;
        let rel_raw = sheet.field(row, line, rel_col)?;
        let rel_length = match (role, rel_raw.is_empty()) {
            (Role::Ego, true) => None,
            (Role::Ego, false) => {
                return Err(sheet.error(line, "rel_length must be empty on the ego row"));
            }
            (Role::Alter, true) => {
                return Err(sheet.error(line, "rel_length required on alter rows"));
            }
            (Role::Alter, false) => Some(sheet.parse::<RelLength>(line, "rel_length", rel_raw)?),
        };
        if let Some(col) = freq_col {
            let raw = sheet.field(row, line, col)?;
            if !raw.is_empty() {
                if role != Role::Ego {
                    return Err(sheet.error(line, "eatout_freq only applies to the ego row"));
                }
                freqs.insert(clique_id, sheet.parse(line, "eatout_freq", raw)?);
            }
        }

        let member = Member {
            id: member_id,
            role,
            home,
            work: None,
            age_band,
            gender,
            rel_length,
        };
        if !egos.contains_key(&clique_id) && !alters.contains_key(&clique_id) {
            order.push(clique_id);
        }
        match role {
            Role::Ego => {
                if egos.insert(clique_id, member).is_some() {
                    return Err(sheet.error(line, format!("clique {clique_id} has two ego rows")));
                }
            }
            Role::Alter => alters.entry(clique_id).or_default().push(member),
        }
    }

    let mut cliques = Vec::with_capacity(order.len());
    for clique_id in order {
        let Some(ego) = egos.remove(&clique_id) else {
            return Err(Error::Validation(format!("clique {clique_id} has no ego row")));
        };
        cliques.push(Clique {
            id: clique_id,
            ego,
            alters: alters.remove(&clique_id).unwrap_or_default(),
            eating_out_frequency: freqs.remove(&clique_id),
        });
    }
    CliqueSet::new(cliques)
}

/// Load choice situations, resolving zone, clique and member references
/// and applying the origin policy. `projection` as in [`load_cliques`].
pub fn load_situations(
    path: impl AsRef<Path>,
    zones: &ZoneSet,
    cliques: &CliqueSet,
    projection: Option<&Projection>,
) -> Result<SituationSet> {
    let sheet = Sheet::read(path.as_ref())?;
    let id_col = sheet.column("situation_id")?;
    let clique_col = sheet.column("clique_id")?;
    let kind_col = sheet.column("kind")?;
    let zone_col = sheet.column("chosen_zone")?;
    let participants_col = sheet.column("participant_ids")?;
    let overrides_col = sheet.column("origin_overrides")?;
    let day_col = sheet.column("day")?;
    let time_col = sheet.column("time")?;

    let mut situations = Vec::with_capacity(sheet.rows.len());
    for (line, row) in &sheet.rows {
        let line = *line;
        let id: SituationId = sheet.parse(line, "situation_id", sheet.field(row, line, id_col)?)?;
        let clique_id: CliqueId = sheet.parse(line, "clique_id", sheet.field(row, line, clique_col)?)?;
        let kind: SituationKind = sheet.parse(line, "kind", sheet.field(row, line, kind_col)?)?;
        let chosen_zone: ZoneId = sheet.parse(line, "chosen_zone", sheet.field(row, line, zone_col)?)?;
        let day: DayKind = sheet.parse(line, "day", sheet.field(row, line, day_col)?)?;
        let time: TimeOfDay = sheet.parse(line, "time", sheet.field(row, line, time_col)?)?;

        if zones.get(chosen_zone).is_none() {
            return Err(Error::DanglingReference(format!(
                "{}:{line}: chosen zone {chosen_zone} not in zone set",
                sheet.path.display()
            )));
        }
        let Some(clique) = cliques.get(clique_id) else {
            return Err(Error::DanglingReference(format!(
                "{}:{line}: clique {clique_id} not found",
                sheet.path.display()
            )));
        };

        let mut participants: Vec<MemberId> = Vec::new();
        for token in sheet.field(row, line, participants_col)?.split(';') {
            let token = token.trim();
            if token.is_empty() {
                return Err(sheet.error(line, "empty participant id"));
            }
            let member_id = MemberId(token.to_owned());
            if clique.member(&member_id).is_none() {
                return Err(Error::DanglingReference(format!(
                    "{}:{line}: participant {member_id} not in clique {clique_id}",
                    sheet.path.display()
                )));
            }
            if participants.contains(&member_id) {
                return Err(sheet.error(line, format!("participant {member_id} listed twice")));
            }
            participants.push(member_id);
        }
        if participants.len() < 2 {
            return Err(sheet.error(
                line,
                format!("party size {} below 2 (joint choices only)", participants.len()),
            ));
        }
        let Some(ego_pos) = participants.iter().position(|p| *p == clique.ego.id) else {
            return Err(sheet.error(line, format!("participants must include ego {}", clique.ego.id)));
        };
        participants.swap(0, ego_pos);

        let mut overrides: HashMap<MemberId, Point> = HashMap::new();
        let overrides_raw = sheet.field(row, line, overrides_col)?;
        if !overrides_raw.is_empty() {
            for item in overrides_raw.split(';') {
                let parts: Vec<&str> = item.split(':').collect();
                if parts.len() != 3 {
                    return Err(sheet.error(
                        line,
                        format!("origin override '{item}' not in member:x:y form"),
                    ));
                }
                let member_id = MemberId(parts[0].trim().to_owned());
                let a: f64 = sheet.parse(line, "origin override", parts[1])?;
                let b: f64 = sheet.parse(line, "origin override", parts[2])?;
                let point = match projection {
                    Some(p) => p.project(a, b),
                    None => Point::new(a, b),
                };
                if overrides.insert(member_id.clone(), point).is_some() {
                    return Err(sheet.error(line, format!("duplicate origin override for {member_id}")));
                }
            }
        }

        // Origin policy: the ego of an actual event departs from the
        // recorded event origin (an override is mandatory); everyone
        // else departs from home and must not carry an override.
        for member_id in overrides.keys() {
            let allowed = kind == SituationKind::ActualEvent && *member_id == clique.ego.id;
            if !allowed {
                return Err(sheet.error(
                    line,
                    format!("origin override for {member_id} not permitted ({kind} situation)"),
                ));
            }
        }
        let mut origins = Vec::with_capacity(participants.len());
        for member_id in &participants {
            let member = clique.member(member_id).expect("checked above");
            let origin = match kind {
                SituationKind::ActualEvent if member.role == Role::Ego => {
                    match overrides.get(member_id) {
                        Some(point) => *point,
                        None => {
                            return Err(sheet.error(
                                line,
                                "actual event requires the ego's observed origin override",
                            ));
                        }
                    }
                }
                _ => member.home,
            };
            origins.push(origin);
        }

        situations.push(ChoiceSituation {
            id,
            clique_id,
            kind,
            chosen_zone,
            participants,
            origins,
            day,
            time,
        });
    }
    SituationSet::new(situations)
}

/// Load `zones.csv`, `cliques.csv` and `situations.csv` from a
/// directory and validate the assembled dataset.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset> {
    let dir = dir.as_ref();
    let (zones, projection) = load_zones_with_projection(dir.join("zones.csv"))?;
    let cliques = load_cliques(dir.join("cliques.csv"), projection.as_ref())?;
    let situations = load_situations(
        dir.join("situations.csv"),
        &zones,
        &cliques,
        projection.as_ref(),
    )?;
    super::validate_dataset(&zones, &cliques, &situations).into_result()?;
    Ok(Dataset {
        zones,
        cliques,
        situations,
    })
}

fn write_file(path: &Path, content: String) -> Result<()> {
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

/// Write zones in the planar-kilometre schema.
pub fn write_zones(path: impl AsRef<Path>, zones: &ZoneSet) -> Result<()> {
    let mut out = String::from("id,restaurant_count,major_station,x_km,y_km,area_ha\n");
    for z in zones.iter() {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            z.id,
            z.restaurant_count,
            u8::from(z.major_station),
            z.centroid.x_km,
            z.centroid.y_km
        );
        match z.area_ha {
            Some(a) => {
                let _ = writeln!(out, ",{a}");
            }
            None => out.push_str(",\n"),
        }
    }
    write_file(path.as_ref(), out)
}

/// Write cliques in the planar-kilometre schema.
pub fn write_cliques(path: impl AsRef<Path>, cliques: &CliqueSet) -> Result<()> {
    let mut out =
        String::from("clique_id,member_id,role,home_x,home_y,age_band,gender,rel_length,eatout_freq\n");
    for clique in cliques.iter() {
        for member in clique.members() {
            let rel = member.rel_length.map(|r| r.token()).unwrap_or("");
            let freq = match (member.role, clique.eating_out_frequency) {
                (Role::Ego, Some(band)) => band.token(),
                _ => "",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                clique.id,
                member.id,
                member.role,
                member.home.x_km,
                member.home.y_km,
                member.age_band,
                member.gender,
                rel,
                freq
            );
        }
    }
    write_file(path.as_ref(), out)
}

/// Write situations. Origin overrides are reconstructed from the origin
/// policy: actual events carry the ego's observed origin, alternative
/// places carry none.
pub fn write_situations(path: impl AsRef<Path>, situations: &SituationSet) -> Result<()> {
    let mut out = String::from(
        "situation_id,clique_id,kind,chosen_zone,participant_ids,origin_overrides,day,time\n",
    );
    for s in situations.iter() {
        let participants = s
            .participants
            .iter()
            .map(|p| p.0.as_str())
            .collect::<Vec<_>>()
            .join(";");
        let overrides = match s.kind {
            SituationKind::ActualEvent => {
                let ego = &s.participants[s.ego_index()];
                let origin = s.origins[s.ego_index()];
                format!("{}:{}:{}", ego, origin.x_km, origin.y_km)
            }
            SituationKind::AlternativePlace => String::new(),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.id, s.clique_id, s.kind, s.chosen_zone, participants, overrides, s.day, s.time
        );
    }
    write_file(path.as_ref(), out)
}

/// Write a full dataset into a directory (created if missing).
pub fn write_dataset(dir: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_owned(),
        source: e,
    })?;
    write_zones(dir.join("zones.csv"), &dataset.zones)?;
    write_cliques(dir.join("cliques.csv"), &dataset.cliques)?;
    write_situations(dir.join("situations.csv"), &dataset.situations)
}
