//! Per-cell products of a noise field: average excess noise, persistence,
//! daily peaks, bivariate classes, and vessel filters.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::Write;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::engine::NoiseField;
use crate::enrich::{Activity, EnrichedTrip};
use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::ingest::Mmsi;

/// Inclusive range of UTC calendar days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatePeriod {
    pub first: NaiveDate,
    pub last: NaiveDate,
}

impl DatePeriod {
    pub fn new(first: NaiveDate, last: NaiveDate) -> Result<Self> {
        if last < first {
            return Err(Error::InvalidInput(format!("empty period {first}..{last}")));
        }
        Ok(Self { first, last })
    }

    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        self.first.iter_days().take_while({
            let last = self.last;
            move |d| *d <= last
        })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.first <= d && d <= self.last
    }
}

/// Parses a comma-separated weekday list such as `mon,tue,wed,thu`.
pub fn parse_day_filter(s: &str) -> Result<HashSet<Weekday>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<Weekday>().map_err(|_| Error::InvalidInput(format!("unknown weekday `{t}`"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub cell_id: CellId,
    /// Mean of the positive levels; `None` without active days.
    pub avg_excess_db: Option<f64>,
    pub active_days: u32,
    pub total_days: u32,
    pub persistence: f64,
    /// Mean over active days of each day's maximum level.
    pub mean_daily_peak_db: Option<f64>,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    n: u64,
    active_days: u32,
    peak_sum: f64,
    day: Option<NaiveDate>,
    day_max: f64,
}

impl Acc {
    fn close_day(&mut self) {
        if self.day.take().is_some() {
            self.active_days += 1;
            self.peak_sum += self.day_max;
        }
    }
}

/// Statistics for every cell in `cells` over the days of `period` that pass
/// `day_filter` (all days when `None`). A day is active for a cell when at
/// least one minute of it has a level above 0 dB.
pub fn cell_stats(
    field: &NoiseField,
    cells: &[CellId],
    period: DatePeriod,
    day_filter: Option<&HashSet<Weekday>>,
) -> Result<Vec<CellStats>> {
    let window = field.window();
    if period.first < window.start.date() || period.last > window.end.date() {
        return Err(Error::InvalidInput(format!(
            "period {}..{} is not within the field window {}..{}",
            period.first, period.last, window.start, window.end
        )));
    }
    let keep = |d: NaiveDate| period.contains(d) && day_filter.is_none_or(|f| f.contains(&d.weekday()));
    let total_days = period.days().filter(|d| keep(*d)).count() as u32;
    if total_days == 0 {
        return Err(Error::Empty("period after day filter"));
    }

    let slot: HashMap<CellId, usize> = cells.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    let mut acc = vec![Acc::default(); cells.len()];
    for frame in field.frames() {
        let date = frame.instant().date();
        if !keep(date) {
            continue;
        }
        for (cell, level) in frame.iter() {
            if !(level > 0.0) {
                continue;
            }
            let Some(&i) = slot.get(&cell) else { continue };
            let a = &mut acc[i];
            a.sum += level;
            a.n += 1;
            match a.day {
                Some(d) if d == date => a.day_max = a.day_max.max(level),
                _ => {
                    a.close_day();
                    a.day = Some(date);
                    a.day_max = level;
                }
            }
        }
    }

    Ok(cells
        .iter()
        .zip(acc)
        .map(|(&cell_id, mut a)| {
            a.close_day();
            let defined = a.active_days > 0;
            CellStats {
                cell_id,
                avg_excess_db: defined.then(|| a.sum / a.n as f64),
                active_days: a.active_days,
                total_days,
                persistence: a.active_days as f64 / total_days as f64,
                mean_daily_peak_db: defined.then(|| a.peak_sum / a.active_days as f64),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Bands on the average excess noise.
    Average,
    /// Bands on the mean daily peak.
    Peak,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "avg" => Ok(Scheme::Average),
            "peak" => Ok(Scheme::Peak),
            other => Err(Error::InvalidInput(format!("unknown scheme `{other}`"))),
        }
    }
}

impl Scheme {
    /// Lower bounds of the bands above the first, in dB.
    pub fn noise_edges(self) -> &'static [f64] {
        match self {
            Scheme::Average => &[4.0, 8.0],
            Scheme::Peak => &[10.0, 18.0, 26.0],
        }
    }

    pub fn band_labels(self) -> &'static [&'static str] {
        match self {
            Scheme::Average => &["<4", "4-8", ">=8"],
            Scheme::Peak => &["<10", "10-18", "18-26", ">=26"],
        }
    }
}

pub const PERSISTENCE_EDGES: [f64; 2] = [0.25, 0.5];
pub const PERSISTENCE_LABELS: [&str; 3] = ["<25%", "25-50%", ">=50%"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BivariateClass {
    pub scheme: Scheme,
    /// Index into [`Scheme::band_labels`].
    pub noise_band: u8,
    /// Index into [`PERSISTENCE_LABELS`].
    pub persistence_band: u8,
}

impl BivariateClass {
    pub fn noise_label(&self) -> &'static str {
        self.scheme.band_labels()[self.noise_band as usize]
    }

    pub fn persistence_label(&self) -> &'static str {
        PERSISTENCE_LABELS[self.persistence_band as usize]
    }

    /// The class of a cell that never exceeds ambient.
    pub fn silent(scheme: Scheme) -> Self {
        Self {
            scheme,
            noise_band: 0,
            persistence_band: 0,
        }
    }
}

impl fmt::Display for BivariateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} dB / {}", self.noise_label(), self.persistence_label())
    }
}

/// Index of the band containing `x`: lower edges inclusive.
fn band(x: f64, edges: &[f64]) -> u8 {
    edges.iter().take_while(|e| x >= **e).count() as u8
}

/// Bands a cell; cells with no active day fall in the lowest noise band.
pub fn bivariate_classify(stats: &CellStats, scheme: Scheme) -> BivariateClass {
    let level = match scheme {
        Scheme::Average => stats.avg_excess_db,
        Scheme::Peak => stats.mean_daily_peak_db,
    };
    BivariateClass {
        scheme,
        noise_band: level.map_or(0, |l| band(l, scheme.noise_edges())),
        persistence_band: band(stats.persistence, &PERSISTENCE_EDGES),
    }
}

/// Fraction of cells in each class.
pub fn area_summary(classes: &[BivariateClass]) -> BTreeMap<BivariateClass, f64> {
    let mut counts: BTreeMap<BivariateClass, usize> = BTreeMap::new();
    for c in classes {
        *counts.entry(*c).or_default() += 1;
    }
    let n = classes.len() as f64;
    counts.into_iter().map(|(c, k)| (c, k as f64 / n)).collect()
}

/// `cell_id,avg_excess_db,active_days,total_days,persistence,mean_daily_peak_db,noise_band,persistence_band`;
/// undefined levels are empty.
pub fn write_stats_csv<W: Write>(stats: &[CellStats], scheme: Scheme, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell_id",
        "avg_excess_db",
        "active_days",
        "total_days",
        "persistence",
        "mean_daily_peak_db",
        "noise_band",
        "persistence_band",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for s in stats {
        let class = bivariate_classify(s, scheme);
        w.write_record([
            s.cell_id.to_string(),
            opt(s.avg_excess_db),
            s.active_days.to_string(),
            s.total_days.to_string(),
            s.persistence.to_string(),
            opt(s.mean_daily_peak_db),
            class.noise_label().to_string(),
            class.persistence_label().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Vessel and trip criteria; unset criteria accept everything. Ranges are
/// inclusive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TripFilter {
    pub hp_range: Option<(f64, f64)>,
    pub mmsi: Option<BTreeSet<Mmsi>>,
    pub loa_range: Option<(f64, f64)>,
    pub gear: Option<BTreeSet<String>>,
    /// Keeps trips with at least one instant in this activity.
    pub activity: Option<Activity>,
}

impl TripFilter {
    pub fn is_empty(&self) -> bool {
        *self == TripFilter::default()
    }

    pub fn matches(&self, t: &EnrichedTrip) -> bool {
        let v = t.vessel();
        let in_range = |r: Option<(f64, f64)>, x: f64| r.is_none_or(|(lo, hi)| lo <= x && x <= hi);
        in_range(self.hp_range, v.engine_hp)
            && in_range(self.loa_range, v.loa_m)
            && self.mmsi.as_ref().is_none_or(|s| s.contains(&v.mmsi))
            && self.gear.as_ref().is_none_or(|s| s.contains(&v.gear))
            && self.activity.is_none_or(|a| t.activity().values().any(|x| *x == a))
    }
}

pub fn filter_trips(trips: &[EnrichedTrip], filter: &TripFilter) -> Vec<EnrichedTrip> {
    trips.iter().filter(|t| filter.matches(t)).cloned().collect()
}
