//! The spatial lattice: square cells with centroids, depth and absorption,
//! plus the per-(frequency, month) ambient-noise surfaces.

pub mod ambient;
pub mod bathymetry;
pub mod index;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acoustics::FrequencyTable;
use crate::error::{Error, Result};
use crate::geometry::{LonLat, Point, Projection};

pub use ambient::{idw_ambient, l90, parse_stations, AmbientSurfaces, HydrophoneStation, MonthKey, DEFAULT_IDW_POWER};
pub use bathymetry::{AsciiRaster, DepthSource, PointCloud};
pub use index::BucketIndex;

pub type CellId = u32;

pub const DEFAULT_CELL_SIZE_M: f64 = 1000.0;
pub const DEFAULT_EPSG: u32 = 32633;

/// Lattice geometry. `origin` is the lower-left corner in projected meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Point,
    pub n_cols: u32,
    pub n_rows: u32,
    pub cell_size: f64,
    pub epsg: u32,
}

impl GridSpec {
    pub fn new(origin: Point, n_cols: u32, n_rows: u32, cell_size: f64, epsg: u32) -> Result<Self> {
        let spec = Self {
            origin,
            n_cols,
            n_rows,
            cell_size,
            epsg,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid whose lower-left corner is the projection of a WGS84 position.
    pub fn from_lonlat_origin(
        origin: LonLat,
        n_cols: u32,
        n_rows: u32,
        cell_size: f64,
        epsg: u32,
    ) -> Result<Self> {
        let projection = Projection::from_epsg(epsg)?;
        Self::new(projection.forward(origin), n_cols, n_rows, cell_size, epsg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0) || self.n_cols == 0 || self.n_rows == 0 {
            return Err(Error::InvalidInput(format!("degenerate grid spec {self:?}")));
        }
        if (self.n_cols as u64) * (self.n_rows as u64) > u32::MAX as u64 {
            return Err(Error::InvalidInput("grid has too many cells".into()));
        }
        if !self.origin.x.is_finite() || !self.origin.y.is_finite() {
            return Err(Error::InvalidInput("grid origin is not finite".into()));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.n_cols as usize * self.n_rows as usize
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    /// Id of the cell containing `p` (cells are closed below, open above),
    /// or `None` outside the lattice.
    pub fn cell_id_at(&self, p: Point) -> Option<CellId> {
        let col = ((p.x - self.origin.x) / self.cell_size).floor();
        let row = ((p.y - self.origin.y) / self.cell_size).floor();
        if col < 0.0 || row < 0.0 || col >= self.n_cols as f64 || row >= self.n_rows as f64 {
            return None;
        }
        Some(row as u32 * self.n_cols + col as u32)
    }

    pub fn col_row(&self, id: CellId) -> (u32, u32) {
        (id % self.n_cols, id / self.n_cols)
    }

    pub fn centroid(&self, id: CellId) -> Point {
        let (col, row) = self.col_row(id);
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size,
            self.origin.y + (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Corners counter-clockwise from the lower-left.
    pub fn corners(&self, id: CellId) -> [Point; 4] {
        let (col, row) = self.col_row(id);
        let x0 = self.origin.x + col as f64 * self.cell_size;
        let y0 = self.origin.y + row as f64 * self.cell_size;
        let s = self.cell_size;
        [
            Point::new(x0, y0),
            Point::new(x0 + s, y0),
            Point::new(x0 + s, y0 + s),
            Point::new(x0, y0 + s),
        ]
    }
}

/// A sea cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: CellId,
    pub centroid: Point,
    pub depth_m: f64,
    /// Absorption per frequency, dB/m.
    pub alpha: BTreeMap<u32, f64>,
}

/// Sea cells of a lattice with O(1) id lookup and a centroid index.
#[derive(Debug, Clone)]
pub struct Grid {
    spec: GridSpec,
    projection: Projection,
    cells: Vec<Cell>,
    /// Lattice id -> position in `cells`, `u32::MAX` for land.
    slots: Vec<u32>,
    index: BucketIndex,
}

const LAND: u32 = u32::MAX;

impl Grid {
    /// Builds the sea cells of a lattice from a depth source. Cells whose
    /// centroid depth is missing or not positive are land and excluded.
    pub fn build(spec: GridSpec, depth: &dyn DepthSource, frequencies: &FrequencyTable) -> Result<Self> {
        spec.validate()?;
        let projection = Projection::from_epsg(spec.epsg)?;
        for id in 0..spec.cell_count() as CellId {
            let ll = projection.inverse(spec.centroid(id));
            if !depth.covers(ll) {
                return Err(Error::BathymetryCoverage(format!(
                    "no bathymetry around cell {id} centroid ({:.5}, {:.5})",
                    ll.lon, ll.lat
                )));
            }
        }
        Self::from_depths(spec, |_, c| depth.depth_at(projection.inverse(c)), frequencies)
    }

    /// Grid from explicit depths per lattice id (`None` or `<= 0` is land).
    pub fn from_depths(
        spec: GridSpec,
        depths: impl Fn(CellId, Point) -> Option<f64>,
        frequencies: &FrequencyTable,
    ) -> Result<Self> {
        spec.validate()?;
        let projection = Projection::from_epsg(spec.epsg)?;
        let mut cells = Vec::new();
        let mut slots = vec![LAND; spec.cell_count()];
        for id in 0..spec.cell_count() as CellId {
            let centroid = spec.centroid(id);
            if let Some(d) = depths(id, centroid).filter(|d| *d > 0.0 && d.is_finite()) {
                slots[id as usize] = cells.len() as u32;
                cells.push(Cell {
                    id,
                    centroid,
                    depth_m: d,
                    alpha: frequencies.iter().map(|p| (p.frequency_hz, p.alpha_db_per_m)).collect(),
                });
            }
        }
        Ok(Self::assemble(spec, projection, cells, slots))
    }

    fn assemble(spec: GridSpec, projection: Projection, cells: Vec<Cell>, slots: Vec<u32>) -> Self {
        let centroids: Vec<Point> = cells.iter().map(|c| c.centroid).collect();
        let index = BucketIndex::new(&centroids, spec.cell_size);
        Self {
            spec,
            projection,
            cells,
            slots,
            index,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// Sea cells in increasing id order.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn sea_cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn land_cell_count(&self) -> usize {
        self.spec.cell_count() - self.cells.len()
    }

    /// Position of a sea cell in [`Grid::cells`].
    pub fn sea_index(&self, id: CellId) -> Option<usize> {
        self.slots
            .get(id as usize)
            .copied()
            .filter(|s| *s != LAND)
            .map(|s| s as usize)
    }

    pub fn cell(&self, id: CellId) -> Option<&Cell> {
        self.sea_index(id).map(|i| &self.cells[i])
    }

    pub fn cell_mut(&mut self, id: CellId) -> Option<&mut Cell> {
        self.sea_index(id).map(move |i| &mut self.cells[i])
    }

    /// Overrides the absorption of one cell at one frequency.
    pub fn set_alpha(&mut self, id: CellId, frequency_hz: u32, alpha_db_per_m: f64) -> Result<()> {
        if !(alpha_db_per_m >= 0.0) {
            return Err(Error::InvalidInput(format!("negative absorption {alpha_db_per_m}")));
        }
        let cell = self
            .cell_mut(id)
            .ok_or_else(|| Error::InvalidInput(format!("cell {id} is not a sea cell")))?;
        cell.alpha.insert(frequency_hz, alpha_db_per_m);
        Ok(())
    }

    /// Centroid index; item indices are positions in [`Grid::cells`].
    pub fn index(&self) -> &BucketIndex {
        &self.index
    }

    pub fn to_lonlat(&self, p: Point) -> LonLat {
        self.projection.inverse(p)
    }

    /// Fingerprint of the lattice geometry and land mask; noise fields carry
    /// it so that they are never combined with a different grid.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"hydronoise-grid-v1");
        h.update(self.spec.epsg.to_le_bytes());
        h.update(self.spec.origin.x.to_le_bytes());
        h.update(self.spec.origin.y.to_le_bytes());
        h.update(self.spec.n_cols.to_le_bytes());
        h.update(self.spec.n_rows.to_le_bytes());
        h.update(self.spec.cell_size.to_le_bytes());
        for c in &self.cells {
            h.update(c.id.to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}
