//! Received-noise fields and their on-disk formats.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::acoustics::{db_to_intensity, intensity_to_db};
use crate::error::{Error, Result};
use crate::grid::CellId;
use crate::temporal::{Instant, SECONDS_PER_MINUTE};

pub const FIELD_MAGIC: &[u8; 6] = b"HYDNF1";

/// Closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: Instant,
    pub end: Instant,
}

impl TimeWindow {
    pub fn new(start: Instant, end: Instant) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidInput(format!("window ends ({end}) before it starts ({start})")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: Instant) -> bool {
        self.start <= t && t <= self.end
    }

    /// Epoch minutes whose start instant lies inside the window.
    pub fn minutes(&self) -> std::ops::RangeInclusive<u32> {
        let first = (self.start.epoch_seconds() + SECONDS_PER_MINUTE - 1) / SECONDS_PER_MINUTE;
        let last = self.end.epoch_seconds() / SECONDS_PER_MINUTE;
        (first as u32)..=(last as u32)
    }

    pub fn minute_count(&self) -> usize {
        let r = self.minutes();
        (*r.end() as usize + 1).saturating_sub(*r.start() as usize)
    }
}

pub fn minute_instant(epoch_minute: u32) -> Instant {
    Instant::from_epoch_seconds(epoch_minute as i64 * SECONDS_PER_MINUTE).expect("non-negative")
}

/// Received levels in one minute, sorted by cell id.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub minute: u32,
    pub cells: Vec<CellId>,
    pub levels_db: Vec<f64>,
}

impl Frame {
    pub fn instant(&self) -> Instant {
        minute_instant(self.minute)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellId, f64)> + '_ {
        self.cells.iter().copied().zip(self.levels_db.iter().copied())
    }
}

/// Finalized received levels per `(cell, minute)` at one frequency. Cells
/// that received nothing in a minute are absent.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    frequency_hz: u32,
    grid_hash: u64,
    window: TimeWindow,
    frames: Vec<Frame>,
}

impl NoiseField {
    /// Frames must be sorted by minute with cells sorted within each frame.
    pub fn new(frequency_hz: u32, grid_hash: u64, window: TimeWindow, frames: Vec<Frame>) -> Result<Self> {
        let sorted = frames.windows(2).all(|w| w[0].minute < w[1].minute)
            && frames.iter().all(|f| {
                f.cells.len() == f.levels_db.len() && f.cells.windows(2).all(|w| w[0] < w[1])
            });
        if !sorted {
            return Err(Error::FieldFormat("frames or cells out of order".into()));
        }
        let frames = frames.into_iter().filter(|f| !f.cells.is_empty()).collect();
        Ok(Self {
            frequency_hz,
            grid_hash,
            window,
            frames,
        })
    }

    pub fn empty(frequency_hz: u32, grid_hash: u64, window: TimeWindow) -> Self {
        Self {
            frequency_hz,
            grid_hash,
            window,
            frames: Vec::new(),
        }
    }

    pub fn frequency_hz(&self) -> u32 {
        self.frequency_hz
    }

    pub fn grid_hash(&self) -> u64 {
        self.grid_hash
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, minute: u32) -> Option<&Frame> {
        self.frames
            .binary_search_by_key(&minute, |f| f.minute)
            .ok()
            .map(|i| &self.frames[i])
    }

    /// Number of `(cell, minute)` entries.
    pub fn len(&self) -> usize {
        self.frames.iter().map(|f| f.cells.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(minute, cell, rl_db)` in minute-then-cell order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, CellId, f64)> + '_ {
        self.frames
            .iter()
            .flat_map(|f| f.iter().map(move |(c, l)| (f.minute, c, l)))
    }

    pub fn level(&self, cell: CellId, minute: u32) -> Option<f64> {
        let f = self.frame(minute)?;
        f.cells.binary_search(&cell).ok().map(|i| f.levels_db[i])
    }

    /// Largest absolute level difference over the union of entries; `None`
    /// if the two fields do not have the same set of `(cell, minute)` keys.
    pub fn max_abs_diff(&self, other: &NoiseField) -> Option<f64> {
        if self.len() != other.len() {
            return None;
        }
        let mut max = 0.0f64;
        for ((m1, c1, l1), (m2, c2, l2)) in self.iter().zip(other.iter()) {
            if m1 != m2 || c1 != c2 {
                return None;
            }
            max = max.max((l1 - l2).abs());
        }
        Some(max)
    }

    /// Writes the binary columnar format: magic `HYDNF1`, then a
    /// little-endian header (frequency u32, grid hash u64, window start i64,
    /// window end i64, entry count u64) and the columns cell ids (u32),
    /// epoch minutes (u32) and levels (f64).
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(FIELD_MAGIC)?;
        out.write_all(&self.frequency_hz.to_le_bytes())?;
        out.write_all(&self.grid_hash.to_le_bytes())?;
        out.write_all(&self.window.start.epoch_seconds().to_le_bytes())?;
        out.write_all(&self.window.end.epoch_seconds().to_le_bytes())?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for f in &self.frames {
            for c in &f.cells {
                out.write_all(&c.to_le_bytes())?;
            }
        }
        for f in &self.frames {
            for _ in &f.cells {
                out.write_all(&f.minute.to_le_bytes())?;
            }
        }
        for f in &self.frames {
            for l in &f.levels_db {
                out.write_all(&l.to_le_bytes())?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads the binary format. With `expected_grid_hash`, a file computed
    /// on another grid is rejected.
    pub fn read_from<R: Read>(mut input: R, expected_grid_hash: Option<u64>) -> Result<Self> {
        let mut magic = [0u8; 6];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::FieldFormat("truncated header".into()))?;
        if &magic != FIELD_MAGIC {
            return Err(Error::FieldFormat("bad magic".into()));
        }
        let frequency_hz = u32::from_le_bytes(read_array(&mut input)?);
        let grid_hash = u64::from_le_bytes(read_array(&mut input)?);
        if let Some(expected) = expected_grid_hash {
            if expected != grid_hash {
                return Err(Error::GridMismatch {
                    expected,
                    found: grid_hash,
                });
            }
        }
        let start = i64::from_le_bytes(read_array(&mut input)?);
        let end = i64::from_le_bytes(read_array(&mut input)?);
        let window = TimeWindow::new(Instant::from_epoch_seconds(start)?, Instant::from_epoch_seconds(end)?)?;
        let n = u64::from_le_bytes(read_array(&mut input)?) as usize;

        let mut cells = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            cells.push(u32::from_le_bytes(read_array(&mut input)?));
        }
        let mut minutes = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            minutes.push(u32::from_le_bytes(read_array(&mut input)?));
        }
        let mut frames: Vec<Frame> = Vec::new();
        for i in 0..n {
            let level = f64::from_le_bytes(read_array(&mut input)?);
            match frames.last_mut() {
                Some(f) if f.minute == minutes[i] => {
                    f.cells.push(cells[i]);
                    f.levels_db.push(level);
                }
                _ => frames.push(Frame {
                    minute: minutes[i],
                    cells: vec![cells[i]],
                    levels_db: vec![level],
                }),
            }
        }
        let mut trailing = [0u8; 1];
        if input.read(&mut trailing)? != 0 {
            return Err(Error::FieldFormat("trailing bytes".into()));
        }
        Self::new(frequency_hz, grid_hash, window, frames)
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(f))
    }

    pub fn load(path: &Path, expected_grid_hash: Option<u64>) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f), expected_grid_hash)
    }

    /// CSV export: `cell_id,timestamp_iso8601,rl_db`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cell_id", "timestamp_iso8601", "rl_db"])?;
        for (minute, cell, level) in self.iter() {
            w.write_record([cell.to_string(), minute_instant(minute).to_string(), format!("{level}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::FieldFormat("truncated file".into()))?;
    Ok(buf)
}

/// Linear intensities `Σ 10^(RL/10)` per `(cell, minute)`, accumulated
/// before finalization.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityField {
    frequency_hz: u32,
    grid_hash: u64,
    window: TimeWindow,
    entries: BTreeMap<(u32, CellId), f64>,
}

impl IntensityField {
    pub fn new(frequency_hz: u32, grid_hash: u64, window: TimeWindow) -> Self {
        Self {
            frequency_hz,
            grid_hash,
            window,
            entries: BTreeMap::new(),
        }
    }

    pub fn add_level(&mut self, cell: CellId, minute: u32, level_db: f64) {
        self.add_intensity(cell, minute, db_to_intensity(level_db));
    }

    pub fn add_intensity(&mut self, cell: CellId, minute: u32, intensity: f64) {
        *self.entries.entry((minute, cell)).or_insert(0.0) += intensity;
    }

    pub fn intensity(&self, cell: CellId, minute: u32) -> Option<f64> {
        self.entries.get(&(minute, cell)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds another field's intensities; commutative and associative up to
    /// floating-point rounding.
    pub fn merge(&mut self, other: &IntensityField) -> Result<()> {
        if other.frequency_hz != self.frequency_hz || other.grid_hash != self.grid_hash {
            return Err(Error::InvalidInput("merging fields of different frequency or grid".into()));
        }
        for (k, v) in &other.entries {
            *self.entries.entry(*k).or_insert(0.0) += v;
        }
        Ok(())
    }

    /// Converts intensities to levels, `10·log10(Σ intensity)`.
    pub fn finalize(self) -> NoiseField {
        let mut frames: Vec<Frame> = Vec::new();
        for ((minute, cell), intensity) in self.entries {
            let level = intensity_to_db(intensity);
            match frames.last_mut() {
                Some(f) if f.minute == minute => {
                    f.cells.push(cell);
                    f.levels_db.push(level);
                }
                _ => frames.push(Frame {
                    minute,
                    cells: vec![cell],
                    levels_db: vec![level],
                }),
            }
        }
        NoiseField {
            frequency_hz: self.frequency_hz,
            grid_hash: self.grid_hash,
            window: self.window,
            frames,
        }
    }
}
