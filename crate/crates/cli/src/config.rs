use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hydronoise_core::acoustics::{FrequencyParams, FrequencyTable, SoundContext, STANDARD_FREQUENCIES};
use hydronoise_core::enrich::{ActivityThresholds, ReconstructSettings};
use hydronoise_core::geometry::LonLat;
use hydronoise_core::grid::{GridSpec, DEFAULT_CELL_SIZE_M, DEFAULT_EPSG, DEFAULT_IDW_POWER};
use hydronoise_core::ingest::DEFAULT_GAP_S;

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub ais: PathBuf,
    pub registry: PathBuf,
    pub ports: PathBuf,
    /// `lon,lat,depth_m` CSV, or an ESRI ASCII grid (`.asc`).
    pub bathymetry: PathBuf,
    pub stations: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub n_cols: u32,
    pub n_rows: u32,
    #[serde(default = "default_cell_m")]
    pub cell_m: f64,
    #[serde(default = "default_epsg")]
    pub epsg: u32,
}

fn default_cell_m() -> f64 {
    DEFAULT_CELL_SIZE_M
}

fn default_epsg() -> u32 {
    DEFAULT_EPSG
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub fish_min_kn: f64,
    pub fish_max_kn: f64,
    pub gap_s: i64,
    pub idw_power: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let a = ActivityThresholds::default();
        Self {
            fish_min_kn: a.fish_min_kn,
            fish_max_kn: a.fish_max_kn,
            gap_s: DEFAULT_GAP_S,
            idw_power: DEFAULT_IDW_POWER,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Model {
    pub frequencies: Vec<u32>,
    pub v0_kn: f64,
    pub speed_coeff_db: f64,
}

impl Default for Model {
    fn default() -> Self {
        let ctx = SoundContext::default();
        Self {
            frequencies: STANDARD_FREQUENCIES.to_vec(),
            v0_kn: ctx.v0_kn,
            speed_coeff_db: ctx.speed_coeff_db,
        }
    }
}

/// Per-frequency overrides; a frequency outside the standard set needs all
/// four values.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyOverride {
    pub anchor_sl0_db: Option<f64>,
    pub fishing_inc_db: Option<f64>,
    pub trans_mult: Option<f64>,
    pub alpha_db_per_m: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub paths: Paths,
    pub grid: GridSection,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub model: Model,
    #[serde(default)]
    pub frequency: BTreeMap<String, FrequencyOverride>,
}

/// Parsed configuration with paths resolved against the config file's
/// directory.
#[derive(Debug, Clone)]
pub struct Config {
    pub file: ConfigFile,
    pub hash: String,
}

pub const CONFIG_HELP: &str = "\
Configuration file (TOML):

  [paths]                 relative to the config file
  ais = \"ais.csv\"         mmsi,timestamp_iso8601,lon,lat,sog_kn,cog_deg
  registry = \"registry.csv\"  mmsi,name,loa_m,engine_hp,gear
  ports = \"ports.geojson\"   Polygon/MultiPolygon features in WGS84
  bathymetry = \"bathymetry.csv\"  lon,lat,depth_m or an ESRI ASCII grid (.asc)
  stations = \"stations.csv\"  name,lon,lat,frequency_hz,month,l90_db
  output_dir = \"out\"

  [grid]
  origin_lon, origin_lat  lower-left corner (required)
  n_cols, n_rows          (required)
  cell_m = 1000
  epsg = 32633            UTM 326xx/327xx/258xx or 3035

  [thresholds]
  fish_min_kn = 1.0
  fish_max_kn = 6.0
  gap_s = 1800
  idw_power = 2.0

  [model]
  frequencies = [63, 125, 400, 4000]
  v0_kn = 3.9
  speed_coeff_db = 15.39

  [frequency.63]          optional overrides
  anchor_sl0_db, fishing_inc_db, trans_mult, alpha_db_per_m";

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut file: ConfigFile = toml::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut file.paths.ais,
            &mut file.paths.registry,
            &mut file.paths.ports,
            &mut file.paths.bathymetry,
            &mut file.paths.stations,
            &mut file.paths.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        // hash the settings, not the file bytes or resolved locations
        let canonical: ConfigFile = toml::from_str(&text).expect("parsed above");
        let json = serde_json::to_vec(&canonical).expect("serializable");
        let digest = Sha256::digest(json);
        let hash = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
        let config = Self { file, hash };
        config.frequency_table()?;
        config.grid_spec()?;
        Ok(config)
    }

    pub fn paths(&self) -> &Paths {
        &self.file.paths
    }

    /// Fails with a usage error naming the first missing input.
    pub fn require(&self, paths: &[&Path]) -> Result<(), CliError> {
        for p in paths {
            if !p.exists() {
                return Err(CliError::Usage(format!("input file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> Result<&Path, CliError> {
        let dir = &self.file.paths.output_dir;
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn grid_spec(&self) -> Result<GridSpec, CliError> {
        let g = &self.file.grid;
        GridSpec::from_lonlat_origin(LonLat::new(g.origin_lon, g.origin_lat), g.n_cols, g.n_rows, g.cell_m, g.epsg)
            .map_err(|e| CliError::Usage(format!("invalid [grid]: {e}")))
    }

    pub fn frequency_table(&self) -> Result<FrequencyTable, CliError> {
        let mut overrides = BTreeMap::new();
        for (k, v) in &self.file.frequency {
            let f: u32 = k
                .parse()
                .map_err(|_| CliError::Usage(format!("[frequency.{k}]: not a frequency in Hz")))?;
            overrides.insert(f, v);
        }
        let mut params = Vec::new();
        for &f in &self.file.model.frequencies {
            let o = overrides.get(&f).cloned().cloned().unwrap_or_default();
            let p = match FrequencyParams::standard(f) {
                Ok(base) => FrequencyParams {
                    anchor_sl0_db: o.anchor_sl0_db.unwrap_or(base.anchor_sl0_db),
                    fishing_inc_db: o.fishing_inc_db.unwrap_or(base.fishing_inc_db),
                    trans_mult: o.trans_mult.unwrap_or(base.trans_mult),
                    alpha_db_per_m: o.alpha_db_per_m.unwrap_or(base.alpha_db_per_m),
                    ..base
                },
                Err(_) => match (o.anchor_sl0_db, o.fishing_inc_db, o.trans_mult, o.alpha_db_per_m) {
                    (Some(anchor_sl0_db), Some(fishing_inc_db), Some(trans_mult), Some(alpha_db_per_m)) => {
                        FrequencyParams {
                            frequency_hz: f,
                            anchor_sl0_db,
                            fishing_inc_db,
                            trans_mult,
                            alpha_db_per_m,
                        }
                    }
                    _ => {
                        return Err(CliError::Usage(format!(
                            "frequency {f} Hz is not standard; [frequency.{f}] must set all four parameters"
                        )))
                    }
                },
            };
            params.push(p);
        }
        if let Some(f) = overrides.keys().find(|f| !self.file.model.frequencies.contains(f)) {
            return Err(CliError::Usage(format!("[frequency.{f}] is not listed in model.frequencies")));
        }
        FrequencyTable::new(params).map_err(|e| CliError::Usage(format!("invalid frequency parameters: {e}")))
    }

    pub fn sound_context(&self) -> SoundContext {
        SoundContext {
            v0_kn: self.file.model.v0_kn,
            speed_coeff_db: self.file.model.speed_coeff_db,
        }
    }

    pub fn reconstruct_settings(&self) -> ReconstructSettings {
        let t = &self.file.thresholds;
        ReconstructSettings {
            gap_s: t.gap_s,
            thresholds: ActivityThresholds {
                fish_min_kn: t.fish_min_kn,
                fish_max_kn: t.fish_max_kn,
            },
            ..Default::default()
        }
    }
}
