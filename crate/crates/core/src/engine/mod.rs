//! Space-time propagation of vessel source levels onto the grid.

mod field;
mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acoustics::{
    db_to_intensity, intensity_to_db, propagation_radius, source_level, spreading_loss, FrequencyParams,
    SoundContext, MIN_DISTANCE_M,
};
use crate::enrich::EnrichedTrip;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{AmbientSurfaces, CellId, Grid, MonthKey};

pub use field::{minute_instant, Frame, IntensityField, NoiseField, TimeWindow, FIELD_MAGIC};
pub use oracle::{brute_force_field, MAX_ORACLE_EVALUATIONS};

/// One vessel at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSample {
    pub position: Point,
    pub sl0_db: f64,
    pub speed_kn: f64,
    pub fishing: bool,
}

/// What happened to one source sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Emission {
    Emitted {
        source_level_db: f64,
        radius_m: f64,
        /// Centroids examined by the index query.
        visits: usize,
        contributions: usize,
    },
    OutsideGrid,
    /// Position falls in a land cell or a cell without depth.
    OnLand,
}

/// Counters collected over a whole run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub source_samples: u64,
    pub outside_grid: u64,
    pub on_land: u64,
    pub centroid_visits: u64,
    pub contributions: u64,
}

impl Diagnostics {
    fn record(&mut self, e: &Emission) {
        self.source_samples += 1;
        match e {
            Emission::Emitted {
                visits, contributions, ..
            } => {
                self.centroid_visits += *visits as u64;
                self.contributions += *contributions as u64;
            }
            Emission::OutsideGrid => self.outside_grid += 1,
            Emission::OnLand => self.on_land += 1,
        }
    }

    fn merge(mut self, o: Diagnostics) -> Self {
        self.source_samples += o.source_samples;
        self.outside_grid += o.outside_grid;
        self.on_land += o.on_land;
        self.centroid_visits += o.centroid_visits;
        self.contributions += o.contributions;
        self
    }
}

/// Propagation kernel for one frequency on one grid.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    grid: &'a Grid,
    params: FrequencyParams,
    ctx: SoundContext,
    alpha: Vec<f64>,
}

impl<'a> Propagator<'a> {
    pub fn new(grid: &'a Grid, params: FrequencyParams, ctx: SoundContext) -> Result<Self> {
        params.validate()?;
        let f = params.frequency_hz;
        let alpha = grid
            .cells()
            .iter()
            .map(|c| c.alpha.get(&f).copied().unwrap_or(params.alpha_db_per_m))
            .collect();
        Ok(Self {
            grid,
            params,
            ctx,
            alpha,
        })
    }

    pub fn params(&self) -> &FrequencyParams {
        &self.params
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    /// Sends the intensity received at every sea cell within the audible
    /// radius of `src` to `sink(sea_index, intensity)`. `ambient` is indexed
    /// by sea index.
    pub fn emit(&self, src: &SourceSample, ambient: &[f64], mut sink: impl FnMut(usize, f64)) -> Emission {
        let Some(id) = self.grid.spec().cell_id_at(src.position) else {
            return Emission::OutsideGrid;
        };
        let Some(si) = self.grid.sea_index(id) else {
            return Emission::OnLand;
        };
        let r_trans = self.params.transition_range(self.grid.cells()[si].depth_m);
        let sl = source_level(src.sl0_db, src.speed_kn, src.fishing, &self.params, &self.ctx);
        let radius = propagation_radius(sl, r_trans, ambient[si]);
        let mut contributions = 0;
        let visits = self.grid.index().for_each_within(src.position, radius, |i, dist| {
            let d = dist.max(MIN_DISTANCE_M);
            let rl = sl - spreading_loss(d, r_trans) - self.alpha[i] * d - ambient[i];
            sink(i, db_to_intensity(rl));
            contributions += 1;
        });
        Emission::Emitted {
            source_level_db: sl,
            radius_m: radius,
            visits,
            contributions,
        }
    }
}

/// Upper bound on centroid visits for one disc query of radius `r` on a
/// lattice of cell size `s`.
pub fn visit_bound(radius_m: f64, cell_size_m: f64) -> usize {
    let area = std::f64::consts::PI * radius_m * radius_m / (cell_size_m * cell_size_m);
    let rim = std::f64::consts::PI * (2.0 * std::f64::consts::SQRT_2 * radius_m / cell_size_m + 2.0);
    area.ceil() as usize + rim.ceil() as usize
}

/// Source samples of every trip at every whole minute of the window, in
/// canonical `(mmsi, trip_id)` order within each minute.
pub fn sources_by_minute(
    trips: &[EnrichedTrip],
    frequency_hz: u32,
    window: &TimeWindow,
) -> Result<BTreeMap<u32, Vec<SourceSample>>> {
    let mut order: Vec<&EnrichedTrip> = trips.iter().collect();
    order.sort_by_key(|t| (t.mmsi(), t.trip_id()));
    let mut out: BTreeMap<u32, Vec<SourceSample>> = BTreeMap::new();
    for et in order {
        let trip = et.trip();
        let sl0 = et.source().sl0(frequency_hz)?;
        let (start, end) = trip.trip.span();
        let from = (*window.minutes().start() as i64).max((start.epoch_seconds() + 59) / 60);
        let to = (*window.minutes().end() as i64).min(end.epoch_seconds() / 60);
        for minute in from..=to {
            let t = minute_instant(minute as u32);
            let Some(position) = trip.trip.value_at(t) else { continue };
            out.entry(minute as u32).or_default().push(SourceSample {
                position,
                sl0_db: sl0,
                speed_kn: trip.speed.value_at(t).unwrap_or(0.0),
                fishing: et.activity().value_at(t).is_some_and(|a| a.is_fishing()),
            });
        }
    }
    Ok(out)
}

/// Ambient level per sea cell for every month touched by `minutes`.
pub fn ambient_for_minutes<'s>(
    ambient: &'s AmbientSurfaces,
    grid: &Grid,
    frequency_hz: u32,
    minutes: impl Iterator<Item = u32>,
) -> Result<BTreeMap<MonthKey, &'s [f64]>> {
    let months: BTreeSet<MonthKey> = minutes.map(|m| MonthKey::of(minute_instant(m))).collect();
    let mut out = BTreeMap::new();
    for month in months {
        let levels = ambient.get(frequency_hz, month).ok_or(Error::NoStationData {
            frequency: frequency_hz,
            month: month.to_string(),
        })?;
        if levels.len() != grid.sea_cell_count() {
            return Err(Error::InvalidInput(format!(
                "ambient surface for {frequency_hz} Hz {month} has {} cells, grid has {}",
                levels.len(),
                grid.sea_cell_count()
            )));
        }
        if let Some(bad) = levels.iter().position(|l| !l.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ambient surface for {frequency_hz} Hz {month} undefined at cell {}",
                grid.cells()[bad].id
            )));
        }
        out.insert(month, levels);
    }
    Ok(out)
}

/// Computes the received-level field of all trips over a window.
///
/// Minutes are processed in parallel. Within a minute sources are summed in
/// `(mmsi, trip_id)` order, so the output does not depend on the thread
/// count or on the order of `trips`.
pub fn compute_noise_field(
    trips: &[EnrichedTrip],
    grid: &Grid,
    ambient: &AmbientSurfaces,
    params: &FrequencyParams,
    ctx: &SoundContext,
    window: TimeWindow,
) -> Result<(NoiseField, Diagnostics)> {
    let f = params.frequency_hz;
    for t in trips {
        if !t.trip().is_synchronized() {
            return Err(Error::InvalidInput(format!(
                "trip {} of vessel {} is not synchronized",
                t.trip_id(),
                t.mmsi()
            )));
        }
    }
    let propagator = Propagator::new(grid, *params, *ctx)?;
    let sources = sources_by_minute(trips, f, &window)?;
    let surfaces = ambient_for_minutes(ambient, grid, f, sources.keys().copied())?;
    let n = grid.sea_cell_count();

    let minutes: Vec<(u32, Vec<SourceSample>)> = sources.into_iter().collect();
    let results: Vec<(Frame, Diagnostics)> = minutes
        .par_iter()
        .map_init(
            || (vec![0.0f64; n], vec![false; n], Vec::<usize>::new()),
            |(scratch, touched, list), (minute, samples)| {
                let amb = surfaces[&MonthKey::of(minute_instant(*minute))];
                let mut diag = Diagnostics::default();
                for s in samples {
                    let e = propagator.emit(s, amb, |i, intensity| {
                        if !touched[i] {
                            touched[i] = true;
                            list.push(i);
                        }
                        scratch[i] += intensity;
                    });
                    diag.record(&e);
                }
                list.sort_unstable();
                let mut cells: Vec<CellId> = Vec::with_capacity(list.len());
                let mut levels_db = Vec::with_capacity(list.len());
                for &i in list.iter() {
                    cells.push(grid.cells()[i].id);
                    levels_db.push(intensity_to_db(scratch[i]));
                    scratch[i] = 0.0;
                    touched[i] = false;
                }
                list.clear();
                (
                    Frame {
                        minute: *minute,
                        cells,
                        levels_db,
                    },
                    diag,
                )
            },
        )
        .collect();

    let mut diag = Diagnostics::default();
    let mut frames = Vec::with_capacity(results.len());
    for (frame, d) in results {
        diag = diag.merge(d);
        frames.push(frame);
    }
    if diag.outside_grid > 0 || diag.on_land > 0 {
        log::warn!(
            "{} source samples outside the grid, {} on land or without depth",
            diag.outside_grid,
            diag.on_land
        );
    }
    Ok((NoiseField::new(f, grid.hash(), window, frames)?, diag))
}
