use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use hydronoise_core::analytics::{
    area_summary, bivariate_classify, cell_stats, filter_trips, parse_day_filter, write_stats_csv, TripFilter,
};
use hydronoise_core::engine::{brute_force_field, compute_noise_field, minute_instant, TimeWindow};
use hydronoise_core::enrich::{reconstruct, EnrichedTrip, ReconstructReport};
use hydronoise_core::export::{cells_feature_collection, write_geojson};
use hydronoise_core::grid::{idw_ambient, parse_stations, AmbientSurfaces, AsciiRaster, Grid, MonthKey, PointCloud};
use hydronoise_core::ingest::{parse_ais, parse_ports, parse_registry, parse_timestamp};
use hydronoise_core::{CellId, DatePeriod, Instant, NoiseField, Scheme};

use crate::config::Config;
use crate::{AnalyzeArgs, CliError, ComputeArgs, FilterArgs, FramesArgs};

/// Largest difference between engine and oracle accepted by `--oracle`.
const ORACLE_TOLERANCE_DB: f64 = 1e-9;

pub struct Context {
    pub config: Config,
    pub deterministic: bool,
}

impl Context {
    fn metadata(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("config_hash".into(), json!(self.config.hash));
        if !self.deterministic {
            m.insert("generated_at".into(), json!(chrono::Utc::now().to_rfc3339()));
        }
        m
    }

    fn build_grid(&self) -> Result<Grid, CliError> {
        let path = &self.config.paths().bathymetry;
        self.config.require(&[path])?;
        let spec = self.config.grid_spec()?;
        let table = self.config.frequency_table()?;
        let reader = open(path)?;
        let is_raster = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("asc"));
        let grid = if is_raster {
            Grid::build(spec, &AsciiRaster::parse(reader)?, &table)?
        } else {
            let projection = hydronoise_core::Projection::from_epsg(spec.epsg)?;
            Grid::build(spec, &PointCloud::from_csv(reader, projection)?, &table)?
        };
        log::info!("grid: {} sea cells, {} land", grid.sea_cell_count(), grid.land_cell_count());
        Ok(grid)
    }

    fn output(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.config.output_dir()?.join(name))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn instant(s: &str, flag: &str) -> Result<Instant, CliError> {
    parse_timestamp(s).map_err(|e| CliError::Usage(format!("{flag}: {e}")))
}

fn date(s: &str, flag: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| CliError::Usage(format!("{flag} `{s}`: {e}")))
}

fn usage(e: hydronoise_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
struct TripArchive {
    config_hash: String,
    report: ReconstructReport,
    trips: Vec<EnrichedTrip>,
}

const ARCHIVE: &str = "trips.json";

pub fn ingest(ctx: &Context) -> Result<(), CliError> {
    let p = ctx.config.paths();
    ctx.config.require(&[&p.ais, &p.registry, &p.ports])?;
    let spec = ctx.config.grid_spec()?;
    let projection = hydronoise_core::Projection::from_epsg(spec.epsg)?;
    let table = ctx.config.frequency_table()?;

    let parsed = parse_ais(open(&p.ais)?)?;
    for m in &parsed.malformed {
        log::warn!("{} line {}: {}", p.ais.display(), m.line, m.reason);
    }
    let registry = parse_registry(open(&p.registry)?)?;
    let ports = parse_ports(open(&p.ports)?, &projection)?;
    let (trips, report) = reconstruct(
        parsed.records,
        &registry,
        &ports,
        &projection,
        &table,
        &ctx.config.reconstruct_settings(),
    )?;
    if report.unknown_vessel_trips > 0 {
        log::warn!("{} trips dropped: vessel not in registry", report.unknown_vessel_trips);
    }
    let archive = TripArchive {
        config_hash: ctx.config.hash.clone(),
        report,
        trips,
    };
    write_json(&ctx.output(ARCHIVE)?, &archive)?;
    println!("vessels,ais,trips");
    println!("{},{},{}", report.vessels, report.records, report.trips);
    Ok(())
}

fn load_archive(ctx: &Context) -> Result<TripArchive, CliError> {
    let path = ctx.output(ARCHIVE)?;
    if !path.exists() {
        return Err(CliError::Usage(format!(
            "input file not found: {} (run `hydronoise ingest` first)",
            path.display()
        )));
    }
    let archive: TripArchive = serde_json::from_reader(open(&path)?)
        .map_err(|e| CliError::Runtime(format!("corrupt trips archive {}: {e}", path.display())))?;
    if archive.config_hash != ctx.config.hash {
        return Err(CliError::Usage(format!(
            "{} was written with a different configuration; run `hydronoise ingest` again",
            path.display()
        )));
    }
    Ok(archive)
}

fn ambient_name(f: u32, month: MonthKey) -> String {
    format!("ambient_{f}_{month}")
}

fn ambient_surface(ctx: &Context, grid: &Grid, f: u32, month: MonthKey) -> Result<Vec<f64>, CliError> {
    let path = &ctx.config.paths().stations;
    ctx.config.require(&[path])?;
    let stations = parse_stations(open(path)?, grid.projection())?;
    Ok(idw_ambient(&stations, grid, f, month, ctx.config.file.thresholds.idw_power)?)
}

pub fn ambient(ctx: &Context, month: &str) -> Result<(), CliError> {
    let month: MonthKey = month.parse().map_err(usage)?;
    let grid = ctx.build_grid()?;
    let mut surfaces = AmbientSurfaces::new();
    for &f in &ctx.config.file.model.frequencies {
        let levels = ambient_surface(ctx, &grid, f, month)?;
        let props = grid
            .cells()
            .iter()
            .zip(&levels)
            .map(|(c, l)| (c.id, Map::from_iter([("ambient_db".to_string(), json!(l))])));
        let mut meta = ctx.metadata();
        meta.insert("frequency_hz".into(), json!(f));
        meta.insert("month".into(), json!(month.to_string()));
        let fc = cells_feature_collection(&grid, props, meta);
        surfaces.insert(f, month, levels);

        let name = ambient_name(f, month);
        surfaces.write_csv(f, month, &grid, create(&ctx.output(&format!("{name}.csv"))?)?)?;
        write_geojson(&fc, create(&ctx.output(&format!("{name}.geojson"))?)?)?;
        println!("{name}");
    }
    Ok(())
}

fn trip_filter(a: &FilterArgs) -> Result<TripFilter, CliError> {
    let range = |lo: Option<f64>, hi: Option<f64>, what: &str| -> Result<Option<(f64, f64)>, CliError> {
        match (lo, hi) {
            (None, None) => Ok(None),
            (lo, hi) => {
                let r = (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
                if r.0 > r.1 {
                    return Err(CliError::Usage(format!("empty {what} range")));
                }
                Ok(Some(r))
            }
        }
    };
    Ok(TripFilter {
        hp_range: range(a.hp_min, a.hp_max, "engine power")?,
        loa_range: range(a.loa_min, a.loa_max, "length")?,
        mmsi: (!a.mmsi.is_empty()).then(|| a.mmsi.iter().copied().collect()),
        gear: (!a.gear.is_empty()).then(|| a.gear.iter().cloned().collect::<BTreeSet<_>>()),
        activity: a.activity.as_deref().map(str::parse).transpose().map_err(usage)?,
    })
}

pub fn compute(ctx: &Context, a: &ComputeArgs) -> Result<(), CliError> {
    let window = TimeWindow::new(instant(&a.start, "--start")?, instant(&a.end, "--end")?).map_err(usage)?;
    let table = ctx.config.frequency_table()?;
    let params = *table
        .get(a.frequency)
        .map_err(|_| CliError::Usage(format!("frequency {} Hz is not in model.frequencies", a.frequency)))?;
    let archive = load_archive(ctx)?;
    let filter = trip_filter(&a.filter)?;
    let trips = filter_trips(&archive.trips, &filter);
    let grid = ctx.build_grid()?;

    let mut ambient = AmbientSurfaces::new();
    for month in MonthKey::spanning(window.start, window.end) {
        let path = ctx.output(&format!("{}.csv", ambient_name(a.frequency, month)))?;
        if path.exists() {
            ambient.read_csv(a.frequency, month, &grid, open(&path)?)?;
        } else {
            ambient.insert(a.frequency, month, ambient_surface(ctx, &grid, a.frequency, month)?);
        }
    }

    let sound = ctx.config.sound_context();
    let (field, diag) = compute_noise_field(&trips, &grid, &ambient, &params, &sound, window)?;
    let out = match &a.out {
        Some(p) => p.clone(),
        None => ctx.output(&format!("field_{}.hnf", a.frequency))?,
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    }
    field.store(&out)?;

    let delta = if a.oracle {
        let oracle = brute_force_field(&trips, &grid, &ambient, &params, &sound, window)?;
        // differing cell sets count as an infinite difference
        Some(field.max_abs_diff(&oracle).unwrap_or(f64::INFINITY))
    } else {
        None
    };

    let mut sidecar = ctx.metadata();
    sidecar.insert("frequency_hz".into(), json!(a.frequency));
    sidecar.insert("grid_hash".into(), json!(format!("{:016x}", grid.hash())));
    sidecar.insert("window".into(), json!({"start": window.start.to_string(), "end": window.end.to_string()}));
    sidecar.insert("trips".into(), json!(trips.len()));
    sidecar.insert("filter".into(), json!(filter));
    sidecar.insert("entries".into(), json!(field.len()));
    sidecar.insert("diagnostics".into(), json!(diag));
    if let Some(d) = delta {
        sidecar.insert("oracle_max_delta_db".into(), json!(d.is_finite().then_some(d)));
    }
    write_json(&out.with_extension("json"), &Value::Object(sidecar))?;

    println!("{}", out.display());
    match delta {
        Some(d) if d <= ORACLE_TOLERANCE_DB => {
            println!("max_delta_db <= {ORACLE_TOLERANCE_DB:e}");
            Ok(())
        }
        Some(d) => {
            println!("max_delta_db = {d:e}");
            Err(CliError::Runtime(format!(
                "engine and reference differ by {d:e} dB (tolerance {ORACLE_TOLERANCE_DB:e})"
            )))
        }
        None => Ok(()),
    }
}

fn load_field(ctx: &Context, path: &Path, grid: &Grid) -> Result<NoiseField, CliError> {
    ctx.config.require(&[path])?;
    Ok(NoiseField::load(path, Some(grid.hash()))?)
}

fn field_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "field".into(), |s| s.to_string_lossy().into_owned())
}

pub fn analyze(ctx: &Context, a: &AnalyzeArgs) -> Result<(), CliError> {
    let period = DatePeriod::new(date(&a.from, "--from")?, date(&a.to, "--to")?).map_err(usage)?;
    let scheme: Scheme = a.scheme.parse().map_err(usage)?;
    let days = a.days.as_deref().map(parse_day_filter).transpose().map_err(usage)?;
    let grid = ctx.build_grid()?;
    let field = load_field(ctx, &a.field, &grid)?;
    let cells: Vec<CellId> = grid.cells().iter().map(|c| c.id).collect();
    let stats = cell_stats(&field, &cells, period, days.as_ref()).map_err(usage)?;
    let classes: Vec<_> = stats.iter().map(|s| bivariate_classify(s, scheme)).collect();

    let scheme_name = format!("{scheme:?}").to_lowercase();
    let base = format!("{}_{scheme_name}", field_stem(&a.field));
    write_stats_csv(&stats, scheme, create(&ctx.output(&format!("stats_{base}.csv"))?)?)?;

    let props = stats.iter().zip(&classes).map(|(s, c)| {
        let m = Map::from_iter([
            ("avg_excess_db".to_string(), json!(s.avg_excess_db)),
            ("active_days".to_string(), json!(s.active_days)),
            ("total_days".to_string(), json!(s.total_days)),
            ("persistence".to_string(), json!(s.persistence)),
            ("mean_daily_peak_db".to_string(), json!(s.mean_daily_peak_db)),
            ("noise_band".to_string(), json!(c.noise_label())),
            ("persistence_band".to_string(), json!(c.persistence_label())),
        ]);
        (s.cell_id, m)
    });
    let mut meta = ctx.metadata();
    meta.insert("frequency_hz".into(), json!(field.frequency_hz()));
    meta.insert("scheme".into(), json!(scheme));
    meta.insert("from".into(), json!(period.first.to_string()));
    meta.insert("to".into(), json!(period.last.to_string()));
    if let Some(d) = &a.days {
        meta.insert("days".into(), json!(d));
    }
    let fc = cells_feature_collection(&grid, props, meta);
    write_geojson(&fc, create(&ctx.output(&format!("stats_{base}.geojson"))?)?)?;

    let summary = area_summary(&classes);
    let mut w = csv::Writer::from_writer(create(&ctx.output(&format!("summary_{base}.csv"))?)?);
    let mut write = |row: [&str; 3]| w.write_record(row).map_err(|e| CliError::Runtime(e.to_string()));
    write(["noise_band", "persistence_band", "fraction"])?;
    for (c, frac) in &summary {
        write([c.noise_label(), c.persistence_label(), &frac.to_string()])?;
    }
    w.flush().map_err(|e| CliError::Runtime(e.to_string()))?;

    println!("noise_band,persistence_band,fraction");
    for (c, frac) in &summary {
        println!("{},{},{frac}", c.noise_label(), c.persistence_label());
    }
    Ok(())
}

pub fn frames(ctx: &Context, a: &FramesArgs) -> Result<(), CliError> {
    let start = instant(&a.start, "--start")?;
    let end = instant(&a.end, "--end")?;
    if end < start {
        return Err(CliError::Usage("--end is before --start".into()));
    }
    if a.step <= 0 || a.step % 60 != 0 {
        return Err(CliError::Usage("--step must be a positive multiple of 60 seconds".into()));
    }
    let grid = ctx.build_grid()?;
    let field = load_field(ctx, &a.field, &grid)?;
    let window = field.window();
    if !window.contains(start) || !window.contains(end) {
        return Err(CliError::Usage(format!(
            "frames {start}..{end} fall outside the field window {}..{}",
            window.start, window.end
        )));
    }
    let dir = match &a.out {
        Some(d) => d.clone(),
        None => ctx.output(&format!("frames_{}", field.frequency_hz()))?,
    };

    let mut count = 0usize;
    let mut t = start;
    while t <= end {
        let minute = t.epoch_minute() as u32;
        let props: Vec<(CellId, Map<String, Value>)> = field
            .frame(minute)
            .map(|f| {
                f.iter()
                    .map(|(c, l)| (c, Map::from_iter([("rl_db".to_string(), json!(l))])))
                    .collect()
            })
            .unwrap_or_default();
        let mut meta = ctx.metadata();
        meta.insert("frequency_hz".into(), json!(field.frequency_hz()));
        meta.insert("timestamp".into(), json!(minute_instant(minute).to_string()));
        let fc = cells_feature_collection(&grid, props, meta);
        write_geojson(&fc, create(&dir.join(format!("frame_{count:04}.geojson")))?)?;
        count += 1;
        t = match t.checked_add(a.step) {
            Some(next) => next,
            None => break,
        };
    }
    println!("{count} frames in {}", dir.display());
    Ok(())
}
