//! Semantic enrichment of trips: per-segment activity, base source level
//! from engine power, and the long-term trip aspects.

use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::acoustics::FrequencyTable;
use crate::error::{Error, Result};
use crate::geometry::Projection;
use crate::ingest::{group_by_vessel, inside_any_port, split_trips, AisRecord, Mmsi, PortArea, Trip, VesselProfile};
use crate::temporal::{Instant, Interpolation, TemporalPayload, TemporalValue};

/// Engine power of the reference boat whose source levels anchor the model.
pub const REFERENCE_ENGINE_HP: f64 = 835.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Activity {
    InPort = 0,
    Entering = 1,
    Exiting = 2,
    Fishing = 3,
    Navigation = 4,
}

impl Activity {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn is_fishing(self) -> bool {
        self == Activity::Fishing
    }
}

impl TryFrom<u8> for Activity {
    type Error = Error;

    fn try_from(code: u8) -> Result<Self> {
        Ok(match code {
            0 => Activity::InPort,
            1 => Activity::Entering,
            2 => Activity::Exiting,
            3 => Activity::Fishing,
            4 => Activity::Navigation,
            other => return Err(Error::InvalidInput(format!("unknown activity code {other}"))),
        })
    }
}

impl From<Activity> for u8 {
    fn from(a: Activity) -> u8 {
        a.code()
    }
}

impl std::str::FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "in-port" | "in_port" | "port" => Ok(Activity::InPort),
            "entering" => Ok(Activity::Entering),
            "exiting" => Ok(Activity::Exiting),
            "fishing" => Ok(Activity::Fishing),
            "navigation" => Ok(Activity::Navigation),
            other => other
                .parse::<u8>()
                .map_err(|_| Error::InvalidInput(format!("unknown activity `{other}`")))
                .and_then(Activity::try_from),
        }
    }
}

impl TemporalPayload for Activity {
    const CONTINUOUS: bool = false;

    fn lerp(&self, _other: &Self, _frac: f64) -> Self {
        *self
    }
}

/// Speed band, in knots, inside which an offshore segment counts as fishing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityThresholds {
    pub fish_min_kn: f64,
    pub fish_max_kn: f64,
}

impl Default for ActivityThresholds {
    fn default() -> Self {
        Self {
            fish_min_kn: 1.0,
            fish_max_kn: 6.0,
        }
    }
}

impl ActivityThresholds {
    fn classify_offshore(&self, avg_speed_kn: f64) -> Activity {
        if (self.fish_min_kn..=self.fish_max_kn).contains(&avg_speed_kn) {
            Activity::Fishing
        } else {
            Activity::Navigation
        }
    }
}

fn classify_segment(from_port: bool, to_port: bool, avg_speed: f64, th: &ActivityThresholds) -> Activity {
    match (from_port, to_port) {
        (true, true) => Activity::InPort,
        (true, false) => Activity::Exiting,
        (false, true) => Activity::Entering,
        (false, false) => th.classify_offshore(avg_speed),
    }
}

/// Step-valued activity over the trip's instants. Each instant carries the
/// class of the segment starting there; the last instant repeats the class
/// of the final segment. A single-instant trip is classified from its one
/// position and speed.
pub fn classify_activity(
    trip: &Trip,
    ports: &[PortArea],
    thresholds: &ActivityThresholds,
) -> Result<TemporalValue<Activity>> {
    if !trip.is_synchronized() {
        return Err(Error::InvalidInput(format!(
            "trip {}/{} is not synchronized",
            trip.mmsi, trip.trip_id
        )));
    }
    let pts = trip.trip.samples();
    let speeds: Vec<f64> = trip.speed.values().copied().collect();
    let in_port: Vec<bool> = pts.iter().map(|(_, p)| inside_any_port(ports, p)).collect();

    let mut classes = Vec::with_capacity(pts.len());
    if pts.len() == 1 {
        let a = if in_port[0] {
            Activity::InPort
        } else {
            thresholds.classify_offshore(speeds[0])
        };
        classes.push(a);
    } else {
        for i in 0..pts.len() - 1 {
            let avg = (speeds[i] + speeds[i + 1]) / 2.0;
            classes.push(classify_segment(in_port[i], in_port[i + 1], avg, thresholds));
        }
        classes.push(*classes.last().expect("at least one segment"));
    }
    TemporalValue::new(
        pts.iter().zip(classes).map(|((t, _), a)| (*t, a)).collect(),
        Interpolation::Step,
    )
}

/// Base source level for an engine power: the reference anchor plus 3 dB
/// per doubling of power.
pub fn compute_sl0(engine_hp: f64, frequency_hz: u32, table: &FrequencyTable) -> Result<f64> {
    if !(engine_hp > 0.0) || !engine_hp.is_finite() {
        return Err(Error::InvalidInput(format!("engine power must be positive, got {engine_hp}")));
    }
    let fp = table.get(frequency_hz)?;
    Ok(fp.anchor_sl0_db + (3.0 / 2f64.log10()) * (engine_hp / REFERENCE_ENGINE_HP).log10())
}

/// Per-vessel base source level for every configured frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceProfile {
    pub mmsi: Mmsi,
    pub sl0_db: BTreeMap<u32, f64>,
}

impl SourceProfile {
    pub fn for_vessel(vessel: &VesselProfile, table: &FrequencyTable) -> Result<Self> {
        let sl0_db = table
            .frequencies()
            .map(|f| compute_sl0(vessel.engine_hp, f, table).map(|v| (f, v)))
            .collect::<Result<_>>()?;
        Ok(Self {
            mmsi: vessel.mmsi,
            sl0_db,
        })
    }

    pub fn sl0(&self, frequency_hz: u32) -> Result<f64> {
        self.sl0_db
            .get(&frequency_hz)
            .copied()
            .ok_or(Error::UnknownFrequency(frequency_hz))
    }
}

/// A trip carrying all of its aspects: activity, vessel attributes, and
/// source levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichedTrip {
    trip: Trip,
    vessel: VesselProfile,
    source: SourceProfile,
}

impl EnrichedTrip {
    pub fn new(trip: Trip, vessel: VesselProfile, source: SourceProfile) -> Result<Self> {
        if trip.activity.is_none() || !trip.is_synchronized() {
            return Err(Error::InvalidInput(format!(
                "trip {}/{} lacks a synchronized activity",
                trip.mmsi, trip.trip_id
            )));
        }
        if trip.mmsi != vessel.mmsi || trip.mmsi != source.mmsi {
            return Err(Error::InvalidInput("trip, vessel and source mmsi differ".into()));
        }
        Ok(Self { trip, vessel, source })
    }

    pub fn trip(&self) -> &Trip {
        &self.trip
    }

    pub fn vessel(&self) -> &VesselProfile {
        &self.vessel
    }

    pub fn source(&self) -> &SourceProfile {
        &self.source
    }

    pub fn activity(&self) -> &TemporalValue<Activity> {
        self.trip.activity.as_ref().expect("checked at construction")
    }

    pub fn mmsi(&self) -> Mmsi {
        self.trip.mmsi
    }

    pub fn trip_id(&self) -> u32 {
        self.trip.trip_id
    }
}

/// Attaches activity and source levels to a synchronized trip. Returns
/// `Ok(None)` with a warning when the vessel is not in the registry.
pub fn attach_aspects(
    trip: Trip,
    registry: &BTreeMap<Mmsi, VesselProfile>,
    table: &FrequencyTable,
    ports: &[PortArea],
    thresholds: &ActivityThresholds,
) -> Result<Option<EnrichedTrip>> {
    let Some(vessel) = registry.get(&trip.mmsi) else {
        warn!("mmsi {} not in vessel registry; trip {} skipped", trip.mmsi, trip.trip_id);
        return Ok(None);
    };
    let activity = classify_activity(&trip, ports, thresholds)?;
    let source = SourceProfile::for_vessel(vessel, table)?;
    let mut trip = trip;
    trip.activity = Some(activity);
    EnrichedTrip::new(trip, vessel.clone(), source).map(Some)
}

/// Settings for turning raw reports into enriched trips.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructSettings {
    pub gap_s: i64,
    pub period_s: i64,
    pub origin: Instant,
    pub thresholds: ActivityThresholds,
}

impl Default for ReconstructSettings {
    fn default() -> Self {
        Self {
            gap_s: crate::ingest::DEFAULT_GAP_S,
            period_s: crate::temporal::SECONDS_PER_MINUTE,
            origin: Instant::from_epoch_seconds(0).expect("epoch"),
            thresholds: ActivityThresholds::default(),
        }
    }
}

/// Counts from one [`reconstruct`] run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReconstructReport {
    pub vessels: usize,
    pub records: usize,
    pub duplicates: usize,
    pub trips: usize,
    pub dropped_singletons: usize,
    pub unknown_vessel_trips: usize,
    pub unsynchronizable_trips: usize,
}

/// Groups, splits, synchronizes and enriches AIS records. Trips come out
/// ordered by `(mmsi, trip_id)`.
pub fn reconstruct(
    records: Vec<AisRecord>,
    registry: &BTreeMap<Mmsi, VesselProfile>,
    ports: &[PortArea],
    projection: &Projection,
    table: &FrequencyTable,
    settings: &ReconstructSettings,
) -> Result<(Vec<EnrichedTrip>, ReconstructReport)> {
    let mut report = ReconstructReport {
        records: records.len(),
        ..Default::default()
    };
    let (by_vessel, duplicates) = group_by_vessel(records);
    report.duplicates = duplicates;
    report.vessels = by_vessel.len();
    let mut out = Vec::new();
    for recs in by_vessel.values() {
        let (trips, stats) = split_trips(recs, ports, settings.gap_s, projection)?;
        report.dropped_singletons += stats.dropped_singletons;
        for trip in trips {
            let Some(synced) = trip.synchronize(settings.period_s, settings.origin) else {
                report.unsynchronizable_trips += 1;
                continue;
            };
            match attach_aspects(synced, registry, table, ports, &settings.thresholds)? {
                Some(et) => out.push(et),
                None => report.unknown_vessel_trips += 1,
            }
        }
    }
    report.trips = out.len();
    Ok((out, report))
}
