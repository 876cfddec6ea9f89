//! Seeded synthetic scenarios: a coastal grid, a port, hydrophone stations
//! and a fleet reporting AIS positions. Used by tests, benches and the
//! bundled CLI fixture.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::acoustics::FrequencyTable;
use crate::engine::TimeWindow;
use crate::enrich::{reconstruct, Activity, EnrichedTrip, ReconstructReport, ReconstructSettings, SourceProfile};
use crate::error::{Error, Result};
use crate::geometry::{LonLat, Point, Polygon, Projection, METERS_PER_NAUTICAL_MILE};
use crate::grid::{AmbientSurfaces, CellId, Grid, GridSpec, HydrophoneStation, MonthKey, DEFAULT_IDW_POWER};
use crate::ingest::{AisRecord, Mmsi, PortArea, Trip, VesselProfile};
use crate::temporal::{Instant, TemporalValue};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub vessels: usize,
    pub start: Instant,
    pub duration_s: i64,
    /// Lower-left corner of the grid.
    pub origin: LonLat,
    pub n_cols: u32,
    pub n_rows: u32,
    pub cell_size_m: f64,
    pub epsg: u32,
    /// Columns on the west side that are land.
    pub land_cols: u32,
    pub stations: usize,
    /// Range of station L90 levels, dB.
    pub ambient_db: (f64, f64),
    /// Range of AIS reporting intervals, seconds.
    pub report_interval_s: (i64, i64),
}

impl ScenarioConfig {
    /// Ten vessels over two hours on a 50 x 50 km grid.
    pub fn small(seed: u64) -> Self {
        Self {
            seed,
            vessels: 10,
            start: Instant::from_epoch_seconds(1_592_215_200).expect("valid"), // 2020-06-15T10:00:00Z
            duration_s: 2 * 3600,
            origin: LonLat::new(13.0, 43.6),
            n_cols: 50,
            n_rows: 50,
            cell_size_m: 1000.0,
            epsg: 32633,
            land_cols: 3,
            stations: 4,
            ambient_db: (70.0, 85.0),
            report_interval_s: (20, 90),
        }
    }

    /// A hundred vessels over a day on a 200 x 200 km grid, with ambient
    /// levels that keep every radius under 10 km.
    pub fn large(seed: u64) -> Self {
        Self {
            vessels: 100,
            duration_s: 24 * 3600,
            start: Instant::from_epoch_seconds(1_591_833_600).expect("valid"), // 2020-06-11T00:00:00Z
            n_cols: 200,
            n_rows: 200,
            land_cols: 5,
            stations: 12,
            ambient_db: (74.0, 88.0),
            report_interval_s: (30, 180),
            ..Self::small(seed)
        }
    }

    /// Three vessels over 40 minutes on a 20 x 20 km grid.
    pub fn tiny(seed: u64) -> Self {
        Self {
            vessels: 3,
            duration_s: 40 * 60,
            n_cols: 20,
            n_rows: 20,
            land_cols: 2,
            stations: 3,
            ..Self::small(seed)
        }
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::from_lonlat_origin(self.origin, self.n_cols, self.n_rows, self.cell_size_m, self.epsg)
    }

    pub fn window(&self) -> Result<TimeWindow> {
        let end = self
            .start
            .checked_add(self.duration_s)
            .ok_or_else(|| Error::InvalidInput("scenario end overflows".into()))?;
        TimeWindow::new(self.start, end)
    }
}

/// Everything a run needs, generated from one [`ScenarioConfig`].
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub projection: Projection,
    pub grid: Grid,
    pub table: FrequencyTable,
    /// Depth at every lattice centroid, in lattice id order.
    pub soundings: Vec<(LonLat, f64)>,
    pub ports: Vec<PortArea>,
    pub port_ring: Vec<LonLat>,
    pub stations: Vec<HydrophoneStation>,
    pub ambient: AmbientSurfaces,
    pub registry: BTreeMap<Mmsi, VesselProfile>,
    pub records: Vec<AisRecord>,
    pub trips: Vec<EnrichedTrip>,
    pub report: ReconstructReport,
    pub window: TimeWindow,
}

const GEARS: [&str; 4] = ["OTB", "PTM", "TBB", "LLS"];

#[derive(Debug, Clone, Copy)]
enum Behaviour {
    Fishing,
    Transit,
    FromPort,
}

/// Depth model: a shelf deepening eastwards with gentle north-south
/// undulation; the westmost `land_cols` columns are land.
fn depth_at(cfg: &ScenarioConfig, col: u32, row: u32) -> f64 {
    if col < cfg.land_cols {
        return -5.0;
    }
    let u = (col as f64 + 0.5) / cfg.n_cols as f64;
    let v = (row as f64 + 0.5) / cfg.n_rows as f64;
    15.0 + 90.0 * u + 8.0 * (6.0 * v).sin()
}

impl Scenario {
    pub fn generate(config: ScenarioConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let spec = config.grid_spec()?;
        let projection = Projection::from_epsg(config.epsg)?;
        let table = FrequencyTable::standard();
        let window = config.window()?;

        let grid = Grid::from_depths(
            spec,
            |id, _| {
                let (c, r) = spec.col_row(id);
                Some(depth_at(&config, c, r))
            },
            &table,
        )?;
        let soundings = (0..spec.cell_count() as CellId)
            .map(|id| {
                let (c, r) = spec.col_row(id);
                (projection.inverse(spec.centroid(id)), depth_at(&config, c, r))
            })
            .collect();

        // Port: a 3 x 3 cell square straddling the coastline at mid height.
        let s = config.cell_size_m;
        let port_ll = Point::new(
            spec.origin.x + (config.land_cols as f64 - 1.0) * s,
            spec.origin.y + (config.n_rows / 2) as f64 * s - s,
        );
        let corners = [
            port_ll,
            Point::new(port_ll.x + 3.0 * s, port_ll.y),
            Point::new(port_ll.x + 3.0 * s, port_ll.y + 3.0 * s),
            Point::new(port_ll.x, port_ll.y + 3.0 * s),
        ];
        let port_ring: Vec<LonLat> = corners.iter().map(|p| projection.inverse(*p)).collect();
        let ports = vec![PortArea {
            name: "Synthetic Harbour".into(),
            polygon: Polygon::new(port_ring.iter().map(|ll| projection.forward(*ll)).collect(), vec![])?,
        }];
        let port_berth = Point::new(
            spec.origin.x + (config.land_cols as f64 + 0.5) * s,
            port_ll.y + 1.5 * s,
        );

        let sea_min = Point::new(spec.origin.x + (config.land_cols as f64 + 1.0) * s, spec.origin.y + s);
        let sea_max = Point::new(
            spec.origin.x + config.n_cols as f64 * s - s,
            spec.origin.y + config.n_rows as f64 * s - s,
        );
        if !(sea_min.x < sea_max.x && sea_min.y < sea_max.y) {
            return Err(Error::InvalidInput("scenario grid too small for its coastline".into()));
        }

        let months = MonthKey::spanning(window.start, window.end);
        let mut stations = Vec::with_capacity(config.stations);
        for i in 0..config.stations {
            let position = Point::new(
                rng.gen_range(sea_min.x..sea_max.x),
                rng.gen_range(sea_min.y..sea_max.y),
            );
            let mut l90 = BTreeMap::new();
            for f in table.frequencies() {
                for m in &months {
                    l90.insert((f, *m), round2(rng.gen_range(config.ambient_db.0..config.ambient_db.1)));
                }
            }
            let lonlat = projection.inverse(position);
            stations.push(HydrophoneStation {
                name: format!("H{}", i + 1),
                lonlat,
                position: projection.forward(lonlat),
                l90,
            });
        }
        let freqs: Vec<u32> = table.frequencies().collect();
        let ambient = AmbientSurfaces::compute(&stations, &grid, &freqs, &months, DEFAULT_IDW_POWER)?;

        let mut registry = BTreeMap::new();
        let mut records = Vec::new();
        for v in 0..config.vessels {
            let mmsi: Mmsi = 247_000_001 + v as u32;
            let hp = round1((150f64.ln() + rng.gen::<f64>() * (1500f64 / 150.0).ln()).exp());
            registry.insert(
                mmsi,
                VesselProfile {
                    mmsi,
                    name: format!("SYN {v:03}"),
                    loa_m: round1(rng.gen_range(10.0..35.0)),
                    engine_hp: hp,
                    gear: GEARS[rng.gen_range(0..GEARS.len())].into(),
                },
            );
            let behaviour = match rng.gen_range(0..10) {
                0..=3 => Behaviour::Fishing,
                4..=7 => Behaviour::Transit,
                _ => Behaviour::FromPort,
            };
            records.extend(simulate_vessel(
                &mut rng, &config, &projection, mmsi, behaviour, sea_min, sea_max, port_berth, &window,
            )?);
        }

        let (trips, report) = reconstruct(
            records.clone(),
            &registry,
            &ports,
            &projection,
            &table,
            &ReconstructSettings::default(),
        )?;

        Ok(Self {
            config,
            projection,
            grid,
            table,
            soundings,
            ports,
            port_ring,
            stations,
            ambient,
            registry,
            records,
            trips,
            report,
            window,
        })
    }

    /// Writes `ais.csv`, `registry.csv`, `ports.geojson`, `bathymetry.csv`
    /// and `stations.csv` into `dir`.
    pub fn write_inputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let create = |name: &str| -> Result<BufWriter<File>> {
            let p = dir.join(name);
            File::create(&p).map(BufWriter::new).map_err(|e| Error::io(p, e))
        };

        let mut w = csv::Writer::from_writer(create("ais.csv")?);
        w.write_record(["mmsi", "timestamp_iso8601", "lon", "lat", "sog_kn", "cog_deg"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.mmsi.to_string(),
                r.t.to_string(),
                r.lon.to_string(),
                r.lat.to_string(),
                opt(r.sog),
                opt(r.cog),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_writer(create("registry.csv")?);
        w.write_record(["mmsi", "name", "loa_m", "engine_hp", "gear"])?;
        for v in self.registry.values() {
            w.write_record([
                v.mmsi.to_string(),
                v.name.clone(),
                v.loa_m.to_string(),
                v.engine_hp.to_string(),
                v.gear.clone(),
            ])?;
        }
        w.flush()?;

        let mut ring: Vec<[f64; 2]> = self.port_ring.iter().map(|ll| [ll.lon, ll.lat]).collect();
        ring.push(ring[0]);
        let ports = json!({
            "type": "FeatureCollection",
            "features": [{
                "type": "Feature",
                "properties": {"name": self.ports[0].name},
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }],
        });
        let mut f = create("ports.geojson")?;
        serde_json::to_writer_pretty(&mut f, &ports)?;
        f.flush()?;

        let mut w = csv::Writer::from_writer(create("bathymetry.csv")?);
        w.write_record(["lon", "lat", "depth_m"])?;
        for (ll, d) in &self.soundings {
            w.write_record([ll.lon.to_string(), ll.lat.to_string(), d.to_string()])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_writer(create("stations.csv")?);
        w.write_record(["name", "lon", "lat", "frequency_hz", "month", "l90_db"])?;
        for s in &self.stations {
            for ((f, m), l) in &s.l90 {
                w.write_record([
                    s.name.clone(),
                    s.lonlat.lon.to_string(),
                    s.lonlat.lat.to_string(),
                    f.to_string(),
                    m.to_string(),
                    l.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// A vessel holding `position` for `minutes + 1` whole minutes from
/// `start` (which must fall on a minute), at constant speed and activity.
#[allow(clippy::too_many_arguments)]
pub fn stationary_trip(
    mmsi: Mmsi,
    trip_id: u32,
    position: Point,
    engine_hp: f64,
    start: Instant,
    minutes: i64,
    speed_kn: f64,
    activity: Activity,
    table: &FrequencyTable,
) -> Result<EnrichedTrip> {
    if start.epoch_seconds() % 60 != 0 || minutes < 0 {
        return Err(Error::InvalidInput("stationary trip must start on a minute".into()));
    }
    let instants: Vec<Instant> = (0..=minutes)
        .map(|k| Instant::from_epoch_seconds(start.epoch_seconds() + 60 * k))
        .collect::<Result<_>>()?;
    let trip = TemporalValue::linear(instants.iter().map(|t| (*t, position)).collect())?;
    let speed = TemporalValue::linear(instants.iter().map(|t| (*t, speed_kn)).collect())?;
    let act = TemporalValue::step(instants.iter().map(|t| (*t, activity)).collect())?;
    let vessel = VesselProfile {
        mmsi,
        name: format!("V{mmsi}"),
        loa_m: 20.0,
        engine_hp,
        gear: "OTB".into(),
    };
    let source = SourceProfile::for_vessel(&vessel, table)?;
    EnrichedTrip::new(Trip::new(trip_id, mmsi, trip, speed, Some(act)), vessel, source)
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

#[allow(clippy::too_many_arguments)]
fn simulate_vessel(
    rng: &mut ChaCha8Rng,
    cfg: &ScenarioConfig,
    projection: &Projection,
    mmsi: Mmsi,
    behaviour: Behaviour,
    sea_min: Point,
    sea_max: Point,
    port_berth: Point,
    window: &TimeWindow,
) -> Result<Vec<AisRecord>> {
    let mut pos = match behaviour {
        Behaviour::FromPort => port_berth,
        _ => Point::new(
            rng.gen_range(sea_min.x..sea_max.x),
            rng.gen_range(sea_min.y..sea_max.y),
        ),
    };
    let mut heading: f64 = match behaviour {
        Behaviour::FromPort => rng.gen_range(-0.5..0.5),
        _ => rng.gen_range(0.0..std::f64::consts::TAU),
    };
    let base_speed: f64 = match behaviour {
        Behaviour::Fishing => rng.gen_range(2.0..4.5),
        Behaviour::Transit => rng.gen_range(7.0..14.0),
        Behaviour::FromPort => rng.gen_range(6.5..9.0),
    };
    // first report a little after the window start
    let mut t = window.start.epoch_seconds() + rng.gen_range(0..cfg.report_interval_s.1);
    let end = window.end.epoch_seconds();
    let mut out = Vec::new();
    let mut elapsed = 0i64;
    while t <= end {
        let speed = match behaviour {
            Behaviour::FromPort if elapsed < 600 => 0.4,
            Behaviour::FromPort if elapsed > 2400 => (base_speed * 0.45).max(2.0),
            _ => base_speed,
        };
        let sog = (speed + rng.gen_range(-0.2..0.2)).max(0.0);
        let ll = projection.inverse(pos);
        out.push(AisRecord {
            mmsi,
            t: Instant::from_epoch_seconds(t)?,
            lon: ll.lon,
            lat: ll.lat,
            sog: (rng.gen::<f64>() > 0.05).then(|| round1(sog)),
            cog: Some(round1((90.0 - heading.to_degrees()).rem_euclid(360.0))),
        });

        let dt = rng.gen_range(cfg.report_interval_s.0..=cfg.report_interval_s.1);
        let turn = match behaviour {
            Behaviour::Fishing => rng.gen_range(-0.35..0.35),
            _ => rng.gen_range(-0.05..0.05),
        };
        heading += turn;
        let step = sog * METERS_PER_NAUTICAL_MILE / 3600.0 * dt as f64;
        let mut next = Point::new(pos.x + step * heading.cos(), pos.y + step * heading.sin());
        let leaving_port = matches!(behaviour, Behaviour::FromPort) && elapsed < 1200;
        if !leaving_port {
            if next.x < sea_min.x || next.x > sea_max.x {
                heading = std::f64::consts::PI - heading;
                next.x = next.x.clamp(sea_min.x, sea_max.x);
            }
            if next.y < sea_min.y || next.y > sea_max.y {
                heading = -heading;
                next.y = next.y.clamp(sea_min.y, sea_max.y);
            }
        }
        pos = next;
        t += dt;
        elapsed += dt;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_a_seed() {
        let a = Scenario::generate(ScenarioConfig::tiny(7)).unwrap();
        let b = Scenario::generate(ScenarioConfig::tiny(7)).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.trips, b.trips);
        let c = Scenario::generate(ScenarioConfig::tiny(8)).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn small_scenario_shape() {
        let s = Scenario::generate(ScenarioConfig::small(42)).unwrap();
        assert_eq!(s.report.vessels, 10);
        assert!(s.trips.len() >= 10);
        assert!(s.grid.land_cell_count() > 0);
        let mut seen = std::collections::BTreeSet::new();
        for t in &s.trips {
            assert!(t.trip().is_synchronized());
            seen.extend(t.activity().values().copied());
            for (_, p) in t.trip().trip.samples() {
                assert!(s.grid.spec().cell_id_at(*p).is_some());
            }
        }
        assert!(seen.contains(&Activity::Fishing));
        assert!(seen.contains(&Activity::Navigation));
    }

    #[test]
    fn written_inputs_parse_back() {
        let s = Scenario::generate(ScenarioConfig::tiny(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        s.write_inputs(dir.path()).unwrap();
        let ais = crate::ingest::parse_ais(File::open(dir.path().join("ais.csv")).unwrap()).unwrap();
        assert_eq!(ais.records, s.records);
        let reg = crate::ingest::parse_registry(File::open(dir.path().join("registry.csv")).unwrap()).unwrap();
        assert_eq!(reg, s.registry);
        let ports =
            crate::ingest::parse_ports(File::open(dir.path().join("ports.geojson")).unwrap(), &s.projection).unwrap();
        assert_eq!(ports.len(), 1);
        let st = crate::grid::parse_stations(File::open(dir.path().join("stations.csv")).unwrap(), &s.projection)
            .unwrap();
        assert_eq!(st.len(), s.stations.len());
        assert_eq!(st[0].l90, s.stations[0].l90);
    }
}
