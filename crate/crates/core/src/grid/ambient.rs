//! Ambient-noise surfaces: L90 exceedance levels at hydrophone stations,
//! spread over the sea cells by inverse distance weighting.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LonLat, Point, Projection};
use crate::grid::{CellId, Grid};
use crate::temporal::Instant;

pub const DEFAULT_IDW_POWER: f64 = 2.0;

/// A calendar month, `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MonthKey {
    pub year: i32,
    pub month: u32,
}

impl MonthKey {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn of(t: Instant) -> Self {
        let d = t.date();
        Self {
            year: d.year(),
            month: d.month(),
        }
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    /// Every month from the one containing `start` to the one containing
    /// `end`.
    pub fn spanning(start: Instant, end: Instant) -> Vec<Self> {
        let last = Self::of(end);
        let mut out = vec![Self::of(start)];
        while *out.last().expect("non-empty") < last {
            let next = out.last().expect("non-empty").next();
            out.push(next);
        }
        out
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("month `{s}` is not YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        Self::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl TryFrom<String> for MonthKey {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MonthKey> for String {
    fn from(m: MonthKey) -> String {
        m.to_string()
    }
}

/// 10th percentile of an SPL series (the level exceeded 90% of the time),
/// linearly interpolated between closest ranks.
pub fn l90(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::Empty("SPL series"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite SPL sample".into()));
    }
    let mut sorted = series.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = 0.1 * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydrophoneStation {
    pub name: String,
    pub lonlat: LonLat,
    pub position: Point,
    pub l90: BTreeMap<(u32, MonthKey), f64>,
}

#[derive(Debug, Deserialize)]
struct StationRow {
    name: String,
    lon: f64,
    lat: f64,
    frequency_hz: u32,
    month: String,
    l90_db: f64,
}

/// Reads `name,lon,lat,frequency_hz,month,l90_db` rows, one station per
/// distinct name.
pub fn parse_stations<R: Read>(stream: R, projection: &Projection) -> Result<Vec<HydrophoneStation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(stream);
    let mut stations: Vec<HydrophoneStation> = Vec::new();
    for row in rdr.deserialize() {
        let row: StationRow = row?;
        if !row.l90_db.is_finite() {
            return Err(Error::InvalidInput(format!("station {}: non-finite L90", row.name)));
        }
        let month: MonthKey = row.month.parse()?;
        let lonlat = LonLat::new(row.lon, row.lat);
        let station = match stations.iter_mut().find(|s| s.name == row.name) {
            Some(s) => s,
            None => {
                stations.push(HydrophoneStation {
                    name: row.name.clone(),
                    lonlat,
                    position: projection.forward(lonlat),
                    l90: BTreeMap::new(),
                });
                stations.last_mut().expect("just pushed")
            }
        };
        station.l90.insert((row.frequency_hz, month), row.l90_db);
    }
    Ok(stations)
}

/// Ambient level for every sea cell (indexed like [`Grid::cells`]) for one
/// frequency and month.
///
/// Cells containing stations take the mean of those stations' L90; every
/// other cell takes `Σ wᵢ·L90ᵢ / Σ wᵢ` with `wᵢ = d(centroid, stationᵢ)^-power`
/// over all stations with data. The sum is taken as deviations from the
/// first station's level, so a single station yields its level exactly, and
/// the result is clamped to the station range against rounding.
pub fn idw_ambient(
    stations: &[HydrophoneStation],
    grid: &Grid,
    frequency_hz: u32,
    month: MonthKey,
    power: f64,
) -> Result<Vec<f64>> {
    let sources: Vec<(Point, f64)> = stations
        .iter()
        .filter_map(|s| s.l90.get(&(frequency_hz, month)).map(|v| (s.position, *v)))
        .collect();
    if sources.is_empty() {
        return Err(Error::NoStationData {
            frequency: frequency_hz,
            month: month.to_string(),
        });
    }
    if !(power > 0.0) {
        return Err(Error::InvalidInput(format!("IDW power must be positive, got {power}")));
    }

    let reference = sources[0].1;
    let (lo, hi) = sources
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (_, v)| (a.min(*v), b.max(*v)));

    let mut seeds: BTreeMap<CellId, (f64, usize)> = BTreeMap::new();
    for (p, v) in &sources {
        if let Some(id) = grid.spec().cell_id_at(*p) {
            let e = seeds.entry(id).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }

    Ok(grid
        .cells()
        .par_iter()
        .map(|cell| {
            if let Some((sum, n)) = seeds.get(&cell.id) {
                return sum / *n as f64;
            }
            let mut num = 0.0;
            let mut den = 0.0;
            for (p, v) in &sources {
                let d = cell.centroid.distance(p);
                if d == 0.0 {
                    return *v;
                }
                let w = d.powf(-power);
                num += w * (v - reference);
                den += w;
            }
            (reference + num / den).clamp(lo, hi)
        })
        .collect())
}

/// Ambient surfaces keyed by `(frequency, month)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AmbientSurfaces {
    surfaces: BTreeMap<(u32, MonthKey), Vec<f64>>,
}

impl AmbientSurfaces {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, frequency_hz: u32, month: MonthKey, levels: Vec<f64>) {
        self.surfaces.insert((frequency_hz, month), levels);
    }

    pub fn get(&self, frequency_hz: u32, month: MonthKey) -> Option<&[f64]> {
        self.surfaces.get(&(frequency_hz, month)).map(Vec::as_slice)
    }

    pub fn keys(&self) -> impl Iterator<Item = (u32, MonthKey)> + '_ {
        self.surfaces.keys().copied()
    }

    /// Computes and stores the surface for every `(frequency, month)` pair.
    pub fn compute(
        stations: &[HydrophoneStation],
        grid: &Grid,
        frequencies: &[u32],
        months: &[MonthKey],
        power: f64,
    ) -> Result<Self> {
        let mut out = Self::new();
        for &f in frequencies {
            for &m in months {
                out.insert(f, m, idw_ambient(stations, grid, f, m, power)?);
            }
        }
        Ok(out)
    }

    /// Same level in every sea cell; handy for synthetic scenarios.
    pub fn uniform(grid: &Grid, frequency_hz: u32, month: MonthKey, level: f64) -> Self {
        let mut out = Self::new();
        out.insert(frequency_hz, month, vec![level; grid.sea_cell_count()]);
        out
    }

    /// Writes one surface as `cell_id,ambient_db`.
    pub fn write_csv<W: Write>(&self, frequency_hz: u32, month: MonthKey, grid: &Grid, out: W) -> Result<()> {
        let levels = self.get(frequency_hz, month).ok_or(Error::NoStationData {
            frequency: frequency_hz,
            month: month.to_string(),
        })?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cell_id", "ambient_db"])?;
        for (cell, level) in grid.cells().iter().zip(levels) {
            w.write_record([cell.id.to_string(), format!("{level}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a surface written by [`AmbientSurfaces::write_csv`]; every sea
    /// cell of `grid` must be present.
    pub fn read_csv<R: Read>(&mut self, frequency_hz: u32, month: MonthKey, grid: &Grid, input: R) -> Result<()> {
        let mut levels = vec![f64::NAN; grid.sea_cell_count()];
        let mut rdr = csv::Reader::from_reader(input);
        for row in rdr.deserialize() {
            let (id, level): (CellId, f64) = row?;
            let i = grid
                .sea_index(id)
                .ok_or_else(|| Error::InvalidInput(format!("ambient surface names non-sea cell {id}")))?;
            levels[i] = level;
        }
        if levels.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!(
                "ambient surface {frequency_hz} Hz {month} does not cover every sea cell"
            )));
        }
        self.insert(frequency_hz, month, levels);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::FrequencyTable;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    const JUNE: MonthKey = MonthKey { year: 2020, month: 6 };

    fn grid(n: u32) -> Grid {
        let spec = GridSpec::new(Point::new(0.0, 0.0), n, n, 1000.0, 32633).unwrap();
        Grid::from_depths(spec, |_, _| Some(40.0), &FrequencyTable::standard()).unwrap()
    }

    fn station(name: &str, x: f64, y: f64, v: f64) -> HydrophoneStation {
        HydrophoneStation {
            name: name.into(),
            lonlat: LonLat::default(),
            position: Point::new(x, y),
            l90: [((63, JUNE), v)].into_iter().collect(),
        }
    }

    #[test]
    fn l90_examples() {
        assert_eq!(l90(&[60.0, 60.0, 60.0]).unwrap(), 60.0);
        let ten: Vec<f64> = (1..=10).map(f64::from).collect();
        assert!((l90(&ten).unwrap() - 1.9).abs() < 1e-12);
        assert_eq!(l90(&[71.5]).unwrap(), 71.5);
        assert!(l90(&[]).is_err());
    }

    #[test]
    fn single_station_is_constant() {
        let g = grid(6);
        let s = idw_ambient(&[station("a", 1234.0, 4321.0, 66.6)], &g, 63, JUNE, 2.0).unwrap();
        assert!(s.iter().all(|v| (v - 66.6).abs() < 1e-12));
    }

    #[test]
    fn equidistant_cell_gets_mean() {
        let g = grid(3);
        // centroid of the middle cell is (1500, 1500)
        let st = [station("a", 500.0, 1500.0, 60.0), station("b", 2500.0, 1500.0, 70.0)];
        let s = idw_ambient(&st, &g, 63, JUNE, 2.0).unwrap();
        assert!((s[g.sea_index(4).unwrap()] - 65.0).abs() < 1e-12);
    }

    #[test]
    fn station_cells_are_seeded() {
        let g = grid(5);
        let st = [station("a", 600.0, 700.0, 60.78), station("b", 4200.0, 4900.0, 82.62)];
        let s = idw_ambient(&st, &g, 63, JUNE, 2.0).unwrap();
        assert_eq!(s[g.sea_index(0).unwrap()], 60.78);
        assert_eq!(s[g.sea_index(24).unwrap()], 82.62);
        assert!(s.iter().all(|v| (60.78..=82.62).contains(v)));
    }

    #[test]
    fn missing_station_data_is_fatal() {
        let g = grid(2);
        let st = [station("a", 0.0, 0.0, 60.0)];
        assert!(matches!(
            idw_ambient(&st, &g, 125, JUNE, 2.0),
            Err(Error::NoStationData { frequency: 125, .. })
        ));
    }

    #[test]
    fn stations_csv() {
        let csv = "name,lon,lat,frequency_hz,month,l90_db\n\
                   Ancona,13.5,43.6,63,2020-06,60.78\nAncona,13.5,43.6,4000,2020-06,84.65\n\
                   Zirje,15.6,43.65,63,2020-06,82.62\n";
        let st = parse_stations(csv.as_bytes(), &Projection::utm33n()).unwrap();
        assert_eq!(st.len(), 2);
        assert_eq!(st[0].l90[&(4000, JUNE)], 84.65);
        assert!("2020-13".parse::<MonthKey>().is_err());
    }

    #[test]
    fn surface_csv_round_trip() {
        let g = grid(3);
        let surfaces = AmbientSurfaces::compute(
            &[station("a", 0.0, 0.0, 61.0), station("b", 3000.0, 3000.0, 75.0)],
            &g,
            &[63],
            &[JUNE],
            2.0,
        )
        .unwrap();
        let mut buf = Vec::new();
        surfaces.write_csv(63, JUNE, &g, &mut buf).unwrap();
        let mut back = AmbientSurfaces::new();
        back.read_csv(63, JUNE, &g, buf.as_slice()).unwrap();
        assert_eq!(back, surfaces);
    }

    proptest! {
        #[test]
        fn idw_bounded_and_exact(
            vals in prop::collection::vec((0.0f64..9000.0, 0.0f64..9000.0, 50.0f64..100.0), 1..9),
            power in 0.5f64..4.0,
        ) {
            let g = grid(9);
            let st: Vec<_> = vals.iter().enumerate().map(|(i, (x, y, v))| station(&i.to_string(), *x, *y, *v)).collect();
            let s = idw_ambient(&st, &g, 63, JUNE, power).unwrap();
            let lo = vals.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
            let hi = vals.iter().map(|v| v.2).fold(f64::NEG_INFINITY, f64::max);
            for v in &s {
                prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
            }
            // a cell holding exactly one station reproduces it
            for (x, y, v) in &vals {
                let id = g.spec().cell_id_at(Point::new(*x, *y)).unwrap();
                let sharing = vals.iter().filter(|o| g.spec().cell_id_at(Point::new(o.0, o.1)) == Some(id)).count();
                if sharing == 1 {
                    prop_assert_eq!(s[g.sea_index(id).unwrap()], *v);
                }
            }
        }

        #[test]
        fn l90_translation_equivariant(series in prop::collection::vec(40.0f64..120.0, 1..50), c in -30.0f64..30.0) {
            let shifted: Vec<f64> = series.iter().map(|v| v + c).collect();
            prop_assert!((l90(&shifted).unwrap() - l90(&series).unwrap() - c).abs() < 1e-9);
        }
    }
}
