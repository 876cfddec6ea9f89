//! Exhaustive reference computation: every source against every sea cell,
//! no spatial index.

use crate::acoustics::{propagation_radius, received_level, source_level, FrequencyParams, SoundContext, MIN_DISTANCE_M};
use crate::enrich::EnrichedTrip;
use crate::error::{Error, Result};
use crate::grid::{AmbientSurfaces, Grid, MonthKey};

use super::{ambient_for_minutes, minute_instant, sources_by_minute, IntensityField, NoiseField, TimeWindow};

/// Refuse runs with more `cells × minutes × trips` evaluations than this.
pub const MAX_ORACLE_EVALUATIONS: u128 = 100_000_000;

pub fn brute_force_field(
    trips: &[EnrichedTrip],
    grid: &Grid,
    ambient: &AmbientSurfaces,
    params: &FrequencyParams,
    ctx: &SoundContext,
    window: TimeWindow,
) -> Result<NoiseField> {
    let evaluations = grid.sea_cell_count() as u128 * window.minute_count() as u128 * trips.len() as u128;
    if evaluations > MAX_ORACLE_EVALUATIONS {
        return Err(Error::OracleGuard(evaluations));
    }
    params.validate()?;
    let f = params.frequency_hz;
    let sources = sources_by_minute(trips, f, &window)?;
    let surfaces = ambient_for_minutes(ambient, grid, f, sources.keys().copied())?;
    let mut field = IntensityField::new(f, grid.hash(), window);

    for (minute, samples) in &sources {
        let amb = surfaces[&MonthKey::of(minute_instant(*minute))];
        for s in samples {
            let Some(src_cell) = grid.spec().cell_id_at(s.position).and_then(|id| grid.cell(id)) else {
                continue;
            };
            let src_ambient = amb[grid.sea_index(src_cell.id).expect("sea cell")];
            let r_trans = params.transition_range(src_cell.depth_m);
            let sl = source_level(s.sl0_db, s.speed_kn, s.fishing, params, ctx);
            let radius = propagation_radius(sl, r_trans, src_ambient);
            for (i, cell) in grid.cells().iter().enumerate() {
                let d2 = s.position.distance_squared(&cell.centroid);
                if !(d2 < radius * radius) {
                    continue;
                }
                let d = d2.sqrt().max(MIN_DISTANCE_M);
                let alpha = cell.alpha.get(&f).copied().unwrap_or(params.alpha_db_per_m);
                let rl = received_level(sl, d, r_trans, alpha, amb[i])?;
                field.add_level(cell.id, *minute, rl);
            }
        }
    }
    Ok(field.finalize())
}
