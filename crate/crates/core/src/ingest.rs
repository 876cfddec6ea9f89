//! AIS and vessel-registry ingestion, port areas, and reconstruction of
//! per-vessel trips from raw position reports.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use chrono::{DateTime, NaiveDateTime, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::enrich::Activity;
use crate::error::{Error, Result};
use crate::geometry::{LonLat, Point, Polygon, Projection, METERS_PER_NAUTICAL_MILE};
use crate::temporal::{common_buckets, Instant, TemporalValue};

pub type Mmsi = u32;

/// Default port-dwell gap that opens a new trip.
pub const DEFAULT_GAP_S: i64 = 1800;

/// Fraction of malformed rows above which a file is rejected outright.
pub const MAX_MALFORMED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AisRecord {
    pub mmsi: Mmsi,
    pub t: Instant,
    pub lon: f64,
    pub lat: f64,
    /// Speed over ground in knots, when reported.
    pub sog: Option<f64>,
    pub cog: Option<f64>,
}

impl AisRecord {
    pub fn position(&self) -> LonLat {
        LonLat::new(self.lon, self.lat)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MalformedRow {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct AisParse {
    pub records: Vec<AisRecord>,
    pub malformed: Vec<MalformedRow>,
}

const AIS_COLUMNS: [&str; 6] = ["mmsi", "timestamp_iso8601", "lon", "lat", "sog_kn", "cog_deg"];

/// Parses an AIS CSV stream. Malformed rows are logged with their line
/// number and skipped; the whole stream is rejected when it has no data rows
/// or when more than 10% of its rows are malformed.
pub fn parse_ais<R: Read>(stream: R) -> Result<AisParse> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(stream);
    let headers = rdr.headers()?.clone();
    let idx = column_indices(&headers, &AIS_COLUMNS)?;

    let mut out = AisParse::default();
    let mut total = 0usize;
    for row in rdr.records() {
        total += 1;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.malformed.push(MalformedRow {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        match parse_ais_row(&row, &idx) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => {
                warn!("AIS line {line}: {reason}; row skipped");
                out.malformed.push(MalformedRow { line, reason });
            }
        }
    }
    if total == 0 {
        return Err(Error::Empty("AIS stream has no data rows"));
    }
    if out.malformed.len() as f64 > MAX_MALFORMED_FRACTION * total as f64 {
        return Err(Error::TooManyMalformed {
            malformed: out.malformed.len(),
            total,
        });
    }
    Ok(out)
}

fn column_indices(headers: &csv::StringRecord, names: &[&str]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::InvalidInput(format!("missing CSV column `{name}`")))
        })
        .collect()
}

fn field<'a>(row: &'a csv::StringRecord, idx: usize, name: &str) -> std::result::Result<&'a str, String> {
    row.get(idx).ok_or_else(|| format!("missing field `{name}`"))
}

fn parse_f64(s: &str, name: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("bad {name} `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("non-finite {name}"));
    }
    Ok(v)
}

fn parse_opt_f64(s: &str, name: &str) -> std::result::Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, name).map(Some)
    }
}

fn parse_ais_row(row: &csv::StringRecord, idx: &[usize]) -> std::result::Result<AisRecord, String> {
    let mmsi: Mmsi = field(row, idx[0], "mmsi")?
        .parse()
        .map_err(|_| format!("bad mmsi `{}`", &row[idx[0]]))?;
    let t = parse_timestamp(field(row, idx[1], "timestamp")?)?;
    let lon = parse_f64(field(row, idx[2], "lon")?, "lon")?;
    let lat = parse_f64(field(row, idx[3], "lat")?, "lat")?;
    let sog = parse_opt_f64(field(row, idx[4], "sog_kn")?, "sog")?;
    let cog = parse_opt_f64(field(row, idx[5], "cog_deg")?, "cog")?;
    if !(-90.0..=90.0).contains(&lat) {
        return Err(format!("latitude {lat} out of range"));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(format!("longitude {lon} out of range"));
    }
    if sog.is_some_and(|s| s < 0.0) {
        return Err("negative speed over ground".into());
    }
    Ok(AisRecord {
        mmsi,
        t,
        lon,
        lat,
        sog,
        cog,
    })
}

/// Accepts RFC 3339 timestamps and naive `YYYY-MM-DDTHH:MM:SS` (or with a
/// space separator), the latter taken as UTC.
pub fn parse_timestamp(s: &str) -> std::result::Result<Instant, String> {
    let dt: DateTime<Utc> = match DateTime::parse_from_rfc3339(s) {
        Ok(dt) => dt.with_timezone(&Utc),
        Err(_) => NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
            .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
            .map_err(|_| format!("bad timestamp `{s}`"))?
            .and_utc(),
    };
    Instant::from_datetime(dt).map_err(|e| e.to_string())
}

/// Permanent vessel attributes from the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselProfile {
    pub mmsi: Mmsi,
    pub name: String,
    pub loa_m: f64,
    pub engine_hp: f64,
    pub gear: String,
}

#[derive(Debug, Deserialize)]
struct RegistryRow {
    mmsi: Mmsi,
    name: String,
    loa_m: f64,
    engine_hp: f64,
    gear: String,
}

pub fn parse_registry<R: Read>(stream: R) -> Result<BTreeMap<Mmsi, VesselProfile>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(stream);
    let mut out = BTreeMap::new();
    for row in rdr.deserialize() {
        let row: RegistryRow = row?;
        if !(row.engine_hp > 0.0) || !(row.loa_m > 0.0) {
            return Err(Error::InvalidInput(format!(
                "vessel {}: engine_hp and loa_m must be positive",
                row.mmsi
            )));
        }
        if out.contains_key(&row.mmsi) {
            warn!("registry: duplicate mmsi {}, keeping first entry", row.mmsi);
            continue;
        }
        out.insert(
            row.mmsi,
            VesselProfile {
                mmsi: row.mmsi,
                name: row.name,
                loa_m: row.loa_m,
                engine_hp: row.engine_hp,
                gear: row.gear,
            },
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortArea {
    pub name: String,
    pub polygon: Polygon,
}

pub fn inside_any_port(ports: &[PortArea], p: &Point) -> bool {
    ports.iter().any(|port| port.polygon.contains(p))
}

/// Reads a GeoJSON FeatureCollection of `Polygon` / `MultiPolygon`
/// features carrying a `name` property, projecting vertices to the planar
/// grid coordinates.
pub fn parse_ports<R: Read>(stream: R, projection: &Projection) -> Result<Vec<PortArea>> {
    let doc: serde_json::Value = serde_json::from_reader(stream)?;
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| Error::InvalidInput("ports file is not a FeatureCollection".into()))?;
    let mut ports = Vec::new();
    for (i, feature) in features.iter().enumerate() {
        let name = feature
            .pointer("/properties/name")
            .and_then(|n| n.as_str())
            .map(str::to_owned)
            .unwrap_or_else(|| format!("port-{i}"));
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| Error::InvalidInput(format!("feature {i} has no geometry")))?;
        let kind = geometry.get("type").and_then(|t| t.as_str()).unwrap_or("");
        let coords = geometry
            .get("coordinates")
            .ok_or_else(|| Error::InvalidInput(format!("feature {i} has no coordinates")))?;
        let polygons = match kind {
            "Polygon" => vec![coords],
            "MultiPolygon" => coords
                .as_array()
                .map(|a| a.iter().collect())
                .unwrap_or_default(),
            other => {
                return Err(Error::InvalidInput(format!(
                    "feature {i}: unsupported geometry `{other}`"
                )))
            }
        };
        for poly in polygons {
            ports.push(PortArea {
                name: name.clone(),
                polygon: polygon_from_json(poly, projection)?,
            });
        }
    }
    Ok(ports)
}

fn polygon_from_json(value: &serde_json::Value, projection: &Projection) -> Result<Polygon> {
    let bad = || Error::InvalidInput("malformed polygon coordinates".into());
    let rings = value.as_array().ok_or_else(bad)?;
    let mut projected = rings.iter().map(|ring| {
        ring.as_array()
            .ok_or_else(bad)?
            .iter()
            .map(|pos| {
                let lon = pos.get(0).and_then(|v| v.as_f64()).ok_or_else(bad)?;
                let lat = pos.get(1).and_then(|v| v.as_f64()).ok_or_else(bad)?;
                Ok(projection.forward(LonLat::new(lon, lat)))
            })
            .collect::<Result<Vec<_>>>()
    });
    let exterior = projected.next().ok_or_else(bad)??;
    let holes = projected.collect::<Result<Vec<_>>>()?;
    Polygon::new(exterior, holes)
}

/// Groups records by vessel, sorts each group by instant and drops
/// duplicate instants keeping the first in file order. Returns the groups
/// and the number of duplicates removed.
pub fn group_by_vessel(records: Vec<AisRecord>) -> (BTreeMap<Mmsi, Vec<AisRecord>>, usize) {
    let mut groups: BTreeMap<Mmsi, Vec<AisRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.mmsi).or_default().push(r);
    }
    let mut duplicates = 0;
    for recs in groups.values_mut() {
        recs.sort_by_key(|r| r.t); // stable: file order kept among equal instants
        let before = recs.len();
        let mut seen = HashSet::new();
        recs.retain(|r| seen.insert(r.t));
        duplicates += before - recs.len();
    }
    (groups, duplicates)
}

/// One vessel voyage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub trip_id: u32,
    pub mmsi: Mmsi,
    /// Planar position.
    pub trip: TemporalValue<Point>,
    /// Speed in knots.
    pub speed: TemporalValue<f64>,
    pub activity: Option<TemporalValue<Activity>>,
    pub length_m: f64,
    pub duration_s: i64,
}

impl Trip {
    /// Assembles a trip, deriving its length and duration.
    pub fn new(
        trip_id: u32,
        mmsi: Mmsi,
        trip: TemporalValue<Point>,
        speed: TemporalValue<f64>,
        activity: Option<TemporalValue<Activity>>,
    ) -> Self {
        let length_m = trip.length();
        let duration_s = trip.end().epoch_seconds() - trip.start().epoch_seconds();
        Self {
            trip_id,
            mmsi,
            trip,
            speed,
            activity,
            length_m,
            duration_s,
        }
    }

    /// Samples every temporal attribute on the shared buckets
    /// `origin + k * period`. `None` when no bucket falls inside the trip.
    pub fn synchronize(&self, period_seconds: i64, origin: Instant) -> Option<Trip> {
        let mut spans = vec![self.trip.span(), self.speed.span()];
        if let Some(a) = &self.activity {
            spans.push(a.span());
        }
        let common = common_buckets(&spans, period_seconds, origin);
        let trip = self.trip.at_instants(&common)?;
        let speed = self.speed.at_instants(&common)?;
        let activity = match &self.activity {
            Some(a) => Some(a.at_instants(&common)?),
            None => None,
        };
        Some(Self::new(self.trip_id, self.mmsi, trip, speed, activity))
    }

    pub fn is_synchronized(&self) -> bool {
        let instants: Vec<_> = self.trip.instants().collect();
        self.speed.instants().eq(instants.iter().copied())
            && self
                .activity
                .as_ref()
                .is_none_or(|a| a.instants().eq(instants.iter().copied()))
    }
}

/// Record accounting for one [`split_trips`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SplitStats {
    pub input_records: usize,
    pub trip_records: usize,
    pub dropped_singletons: usize,
    pub boundaries: usize,
}

/// Splits one vessel's records into trips. A boundary is placed between
/// consecutive records when the earlier one lies inside a port area and the
/// reporting gap exceeds `gap_s`. Trips with fewer than two records are
/// dropped; surviving trips are numbered from 1.
///
/// Records must belong to one vessel, be sorted by instant and free of
/// duplicate instants (see [`group_by_vessel`]).
pub fn split_trips(
    records: &[AisRecord],
    ports: &[PortArea],
    gap_s: i64,
    projection: &Projection,
) -> Result<(Vec<Trip>, SplitStats)> {
    let mut stats = SplitStats {
        input_records: records.len(),
        ..Default::default()
    };
    let projected: Vec<Point> = records.iter().map(|r| projection.forward(r.position())).collect();

    let mut pieces: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for i in 0..records.len().saturating_sub(1) {
        if records[i + 1].t <= records[i].t || records[i + 1].mmsi != records[i].mmsi {
            return Err(Error::InvalidInput(
                "split_trips needs one vessel's records sorted without duplicate instants".into(),
            ));
        }
        let gap = records[i + 1].t.epoch_seconds() - records[i].t.epoch_seconds();
        if gap > gap_s && inside_any_port(ports, &projected[i]) {
            pieces.push(start..i + 1);
            start = i + 1;
            stats.boundaries += 1;
        }
    }
    if !records.is_empty() {
        pieces.push(start..records.len());
    }

    let mut trips = Vec::new();
    for range in pieces {
        if range.len() < 2 {
            stats.dropped_singletons += range.len();
            continue;
        }
        stats.trip_records += range.len();
        let recs = &records[range.clone()];
        let trip = TemporalValue::<Point>::linear(
            recs.iter().zip(&projected[range]).map(|(r, p)| (r.t, *p)).collect(),
        )?;
        let speed = build_speed(
            &recs
                .iter()
                .map(|r| (r.t, r.position(), r.sog))
                .collect::<Vec<_>>(),
        )?;
        let trip_id = trips.len() as u32 + 1;
        trips.push(Trip::new(trip_id, recs[0].mmsi, trip, speed, None));
    }
    Ok((trips, stats))
}

/// Speed in knots from reported SOG, falling back to great-circle distance
/// over elapsed time where SOG is missing (using the segment ending at the
/// sample, or the first segment for the first sample).
pub fn build_speed(samples: &[(Instant, LonLat, Option<f64>)]) -> Result<TemporalValue<f64>> {
    let derived = |a: usize, b: usize| -> f64 {
        let (ta, pa, _) = samples[a];
        let (tb, pb, _) = samples[b];
        let dt = (tb.epoch_seconds() - ta.epoch_seconds()) as f64;
        pa.great_circle_distance(&pb) / METERS_PER_NAUTICAL_MILE / (dt / 3600.0)
    };
    let values = (0..samples.len())
        .map(|i| {
            let v = match samples[i].2 {
                Some(sog) => sog,
                None if samples.len() == 1 => 0.0,
                None if i == 0 => derived(0, 1),
                None => derived(i - 1, i),
            };
            (samples[i].0, v)
        })
        .collect();
    TemporalValue::linear(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EARTH_RADIUS_M;

    fn t(s: i64) -> Instant {
        Instant::from_epoch_seconds(s).unwrap()
    }

    fn rec(mmsi: Mmsi, secs: i64, lon: f64, lat: f64) -> AisRecord {
        AisRecord {
            mmsi,
            t: t(secs),
            lon,
            lat,
            sog: Some(4.0),
            cog: None,
        }
    }

    fn port_around(proj: &Projection, lon: f64, lat: f64) -> PortArea {
        let c = proj.forward(LonLat::new(lon, lat));
        let h = 500.0;
        PortArea {
            name: "harbour".into(),
            polygon: Polygon::new(
                vec![
                    Point::new(c.x - h, c.y - h),
                    Point::new(c.x + h, c.y - h),
                    Point::new(c.x + h, c.y + h),
                    Point::new(c.x - h, c.y + h),
                ],
                vec![],
            )
            .unwrap(),
        }
    }

    const HEADER: &str = "mmsi,timestamp_iso8601,lon,lat,sog_kn,cog_deg\n";

    #[test]
    fn parse_single_row() {
        let csv = format!("{HEADER}247000001,2020-06-01T00:00:00Z,13.2,44.7,3.9,180\n");
        let p = parse_ais(csv.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 1);
        assert_eq!(p.records[0].t.epoch_seconds(), 1_590_969_600);
        assert_eq!(p.records[0].sog, Some(3.9));
    }

    #[test]
    fn out_of_range_latitude_skipped_with_line_number() {
        let mut csv = HEADER.to_string();
        for i in 0..10 {
            csv.push_str(&format!("1,2020-06-01T00:{i:02}:00Z,13.2,44.7,3.9,180\n"));
        }
        csv.push_str("1,2020-06-01T00:30:00Z,13.2,95,3.9,180\n");
        let p = parse_ais(csv.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 10);
        assert_eq!(p.malformed.len(), 1);
        assert_eq!(p.malformed[0].line, 12);
    }

    #[test]
    fn empty_and_mostly_broken_streams_are_fatal() {
        assert!(matches!(parse_ais(HEADER.as_bytes()), Err(Error::Empty(_))));
        assert!(parse_ais("".as_bytes()).is_err());
        let csv = format!("{HEADER}1,2020-06-01T00:00:00Z,13.2,44.7,,\n1,garbage,13.2,44.7,1,1\n");
        assert!(matches!(
            parse_ais(csv.as_bytes()),
            Err(Error::TooManyMalformed { malformed: 1, total: 2 })
        ));
    }

    #[test]
    fn missing_sog_and_naive_timestamps() {
        let csv = format!("{HEADER}1,2020-06-01 00:00:00,13.2,44.7,,\n");
        let p = parse_ais(csv.as_bytes()).unwrap();
        assert_eq!(p.records[0].sog, None);
        assert_eq!(p.records[0].cog, None);
    }

    #[test]
    fn registry_parses_and_validates() {
        let csv = "mmsi,name,loa_m,engine_hp,gear\n1,A,20.5,590.9,PTM\n2,B,18,613,LOTB\n";
        let reg = parse_registry(csv.as_bytes()).unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(reg[&2].gear, "LOTB");
        let bad = "mmsi,name,loa_m,engine_hp,gear\n1,A,20.5,0,PTM\n";
        assert!(parse_registry(bad.as_bytes()).is_err());
    }

    #[test]
    fn ports_from_geojson() {
        let proj = Projection::utm33n();
        let gj = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"name":"Ancona"},
             "geometry":{"type":"Polygon","coordinates":[[[13.4,43.6],[13.6,43.6],[13.6,43.7],[13.4,43.7],[13.4,43.6]]]}}]}"#;
        let ports = parse_ports(gj.as_bytes(), &proj).unwrap();
        assert_eq!(ports.len(), 1);
        assert_eq!(ports[0].name, "Ancona");
        assert!(inside_any_port(&ports, &proj.forward(LonLat::new(13.5, 43.65))));
        assert!(!inside_any_port(&ports, &proj.forward(LonLat::new(13.5, 43.8))));
    }

    #[test]
    fn three_records_at_sea_make_one_trip() {
        let proj = Projection::utm33n();
        let recs = vec![rec(1, 0, 13.0, 44.5), rec(1, 60, 13.01, 44.5), rec(1, 120, 13.02, 44.5)];
        let (trips, stats) = split_trips(&recs, &[], DEFAULT_GAP_S, &proj).unwrap();
        assert_eq!(trips.len(), 1);
        assert_eq!(trips[0].trip_id, 1);
        assert_eq!(trips[0].trip.len(), 3);
        assert_eq!(trips[0].duration_s, 120);
        assert_eq!(stats.trip_records, 3);
    }

    #[test]
    fn port_dwell_gap_splits() {
        let proj = Projection::utm33n();
        let ports = [port_around(&proj, 13.5, 43.62)];
        let recs = vec![
            rec(1, 0, 13.3, 43.7),
            rec(1, 600, 13.5, 43.62), // inside port
            rec(1, 600 + 7200, 13.5, 43.62),
            rec(1, 600 + 7800, 13.3, 43.7),
        ];
        let (trips, stats) = split_trips(&recs, &ports, 1800, &proj).unwrap();
        assert_eq!(stats.boundaries, 1);
        assert_eq!(trips.len(), 2);
        assert_eq!(trips[0].trip.end(), t(600));
        assert_eq!(trips[1].trip.start(), t(7800));
        assert_eq!(trips[1].trip_id, 2);

        // same gap at sea does not split
        let (trips, _) = split_trips(&recs, &[], 1800, &proj).unwrap();
        assert_eq!(trips.len(), 1);
        // short gap in port does not split
        let (trips, _) = split_trips(&recs, &ports, 7200, &proj).unwrap();
        assert_eq!(trips.len(), 1);
    }

    #[test]
    fn singleton_pieces_are_dropped_and_counted() {
        let proj = Projection::utm33n();
        let ports = [port_around(&proj, 13.5, 43.62)];
        let recs = vec![rec(1, 0, 13.5, 43.62), rec(1, 5000, 13.5, 43.62), rec(1, 5060, 13.4, 43.7)];
        let (trips, stats) = split_trips(&recs, &ports, 1800, &proj).unwrap();
        assert_eq!(trips.len(), 1);
        assert_eq!(stats.dropped_singletons, 1);
        assert_eq!(stats.trip_records + stats.dropped_singletons, stats.input_records);

        let (trips, stats) = split_trips(&recs[..1], &ports, 1800, &proj).unwrap();
        assert!(trips.is_empty());
        assert_eq!(stats.dropped_singletons, 1);
    }

    #[test]
    fn unsorted_input_rejected() {
        let proj = Projection::utm33n();
        let recs = vec![rec(1, 60, 13.0, 44.5), rec(1, 0, 13.01, 44.5)];
        assert!(split_trips(&recs, &[], 1800, &proj).is_err());
    }

    #[test]
    fn grouping_sorts_and_dedups_keeping_first() {
        let mut a = rec(7, 60, 13.0, 44.0);
        a.sog = Some(1.0);
        let mut b = rec(7, 60, 13.5, 44.0);
        b.sog = Some(2.0);
        let (groups, dups) = group_by_vessel(vec![rec(7, 120, 13.0, 44.0), a, b, rec(8, 0, 13.0, 44.0)]);
        assert_eq!(dups, 1);
        assert_eq!(groups[&7].len(), 2);
        assert_eq!(groups[&7][0].sog, Some(1.0));
        assert_eq!(groups[&8].len(), 1);
    }

    #[test]
    fn speed_from_sog_or_positions() {
        let p0 = LonLat::new(13.0, 44.0);
        let p1 = LonLat::new(13.0, 44.0 + (1852.0 / EARTH_RADIUS_M).to_degrees());
        let s = build_speed(&[(t(0), p0, Some(2.0)), (t(60), p0, Some(3.5))]).unwrap();
        assert_eq!(s.values().copied().collect::<Vec<_>>(), vec![2.0, 3.5]);

        let s = build_speed(&[(t(0), p0, None), (t(3600), p1, None)]).unwrap();
        for v in s.values() {
            assert!((v - 1.0).abs() < 1e-9, "{v}");
        }

        let s = build_speed(&[(t(10), p0, None)]).unwrap();
        assert_eq!(s.samples(), &[(t(10), 0.0)]);
    }

    #[test]
    fn synchronize_trip_recomputes_length() {
        let proj = Projection::utm33n();
        let recs = vec![rec(1, 30, 13.0, 44.5), rec(1, 150, 13.02, 44.5), rec(1, 400, 13.02, 44.52)];
        let (trips, _) = split_trips(&recs, &[], 1800, &proj).unwrap();
        let synced = trips[0].synchronize(60, t(0)).unwrap();
        assert!(synced.is_synchronized());
        let inst: Vec<_> = synced.trip.instants().map(|i| i.epoch_seconds()).collect();
        assert_eq!(inst, vec![60, 120, 180, 240, 300, 360]);
        assert!((synced.length_m - synced.trip.length()).abs() <= 1e-6 * synced.length_m);
        assert_eq!(synced.duration_s, 300);
    }
}
