//! Water-depth sources sampled at cell centroids.
//!
//! Depths are positive downwards; zero or negative values mark land.

use std::io::{BufRead, BufReader, Read};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{LonLat, Point, Projection};
use crate::grid::BucketIndex;

pub trait DepthSource {
    /// Depth in meters at a position, `None` where unknown.
    fn depth_at(&self, ll: LonLat) -> Option<f64>;

    /// Whether the source has data around the position at all.
    fn covers(&self, ll: LonLat) -> bool;
}

/// Scattered `(lon, lat, depth)` soundings sampled by nearest neighbour in
/// projected coordinates.
#[derive(Debug, Clone)]
pub struct PointCloud {
    projection: Projection,
    depths: Vec<f64>,
    index: BucketIndex,
    lon_range: (f64, f64),
    lat_range: (f64, f64),
}

#[derive(Debug, Deserialize)]
struct SoundingRow {
    lon: f64,
    lat: f64,
    depth_m: f64,
}

impl PointCloud {
    pub fn new(soundings: &[(LonLat, f64)], projection: Projection) -> Result<Self> {
        if soundings.is_empty() {
            return Err(Error::Empty("bathymetry point cloud"));
        }
        let mut lon_range = (f64::INFINITY, f64::NEG_INFINITY);
        let mut lat_range = (f64::INFINITY, f64::NEG_INFINITY);
        for (ll, d) in soundings {
            if !ll.lon.is_finite() || !ll.lat.is_finite() || !d.is_finite() {
                return Err(Error::InvalidInput("non-finite bathymetry sounding".into()));
            }
            lon_range = (lon_range.0.min(ll.lon), lon_range.1.max(ll.lon));
            lat_range = (lat_range.0.min(ll.lat), lat_range.1.max(ll.lat));
        }
        let planar: Vec<Point> = soundings.iter().map(|(ll, _)| projection.forward(*ll)).collect();
        let (mut min, mut max) = (planar[0], planar[0]);
        for p in &planar {
            min = Point::new(min.x.min(p.x), min.y.min(p.y));
            max = Point::new(max.x.max(p.x), max.y.max(p.y));
        }
        let area = ((max.x - min.x) * (max.y - min.y)).max(1.0);
        let bucket = (2.0 * (area / planar.len() as f64).sqrt()).max(1.0);
        Ok(Self {
            projection,
            depths: soundings.iter().map(|(_, d)| *d).collect(),
            index: BucketIndex::new(&planar, bucket),
            lon_range,
            lat_range,
        })
    }

    /// Reads a `lon,lat,depth_m` CSV.
    pub fn from_csv<R: Read>(stream: R, projection: Projection) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(stream);
        let soundings = rdr
            .deserialize()
            .map(|row| {
                let row: SoundingRow = row?;
                Ok((LonLat::new(row.lon, row.lat), row.depth_m))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&soundings, projection)
    }
}

impl DepthSource for PointCloud {
    fn depth_at(&self, ll: LonLat) -> Option<f64> {
        self.index
            .nearest(self.projection.forward(ll))
            .map(|(i, _)| self.depths[i])
    }

    fn covers(&self, ll: LonLat) -> bool {
        const EPS: f64 = 1e-9;
        (self.lon_range.0 - EPS..=self.lon_range.1 + EPS).contains(&ll.lon)
            && (self.lat_range.0 - EPS..=self.lat_range.1 + EPS).contains(&ll.lat)
    }
}

/// Single-band raster in ESRI ASCII grid format with geographic
/// (lon/lat degree) cells.
#[derive(Debug, Clone)]
pub struct AsciiRaster {
    ncols: usize,
    nrows: usize,
    /// Lower-left corner of the lower-left pixel.
    xll: f64,
    yll: f64,
    cell: f64,
    nodata: Option<f64>,
    /// Row-major, first row is the northernmost.
    values: Vec<f64>,
}

impl AsciiRaster {
    pub fn parse<R: Read>(stream: R) -> Result<Self> {
        let reader = BufReader::new(stream);
        let mut header = std::collections::HashMap::new();
        let mut values = Vec::new();
        for line in reader.lines() {
            let line = line?;
            let mut tokens = line.split_whitespace().peekable();
            let Some(first) = tokens.peek() else { continue };
            if values.is_empty() && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                let key = tokens.next().expect("peeked").to_ascii_lowercase();
                let value: f64 = tokens
                    .next()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("raster header `{key}` has no value")))?;
                header.insert(key, value);
                continue;
            }
            for tok in tokens {
                values.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad raster value `{tok}`")))?,
                );
            }
        }
        let get = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("raster header lacks `{k}`")))
        };
        let ncols = get("ncols")? as usize;
        let nrows = get("nrows")? as usize;
        let cell = get("cellsize")?;
        let (xll, yll) = match (header.get("xllcorner"), header.get("yllcorner")) {
            (Some(x), Some(y)) => (*x, *y),
            _ => (get("xllcenter")? - cell / 2.0, get("yllcenter")? - cell / 2.0),
        };
        if ncols == 0 || nrows == 0 || !(cell > 0.0) {
            return Err(Error::InvalidInput("degenerate raster header".into()));
        }
        if values.len() != ncols * nrows {
            return Err(Error::InvalidInput(format!(
                "raster has {} values, header implies {}",
                values.len(),
                ncols * nrows
            )));
        }
        Ok(Self {
            ncols,
            nrows,
            xll,
            yll,
            cell,
            nodata: header.get("nodata_value").copied(),
            values,
        })
    }

    fn pixel(&self, ll: LonLat) -> Option<(usize, usize)> {
        let col = ((ll.lon - self.xll) / self.cell).floor();
        let row_from_bottom = ((ll.lat - self.yll) / self.cell).floor();
        if col < 0.0 || row_from_bottom < 0.0 || col >= self.ncols as f64 || row_from_bottom >= self.nrows as f64 {
            return None;
        }
        Some((col as usize, self.nrows - 1 - row_from_bottom as usize))
    }
}

impl DepthSource for AsciiRaster {
    fn depth_at(&self, ll: LonLat) -> Option<f64> {
        let (col, row) = self.pixel(ll)?;
        let v = self.values[row * self.ncols + col];
        match self.nodata {
            Some(nd) if v == nd => None,
            _ => Some(v),
        }
    }

    fn covers(&self, ll: LonLat) -> bool {
        self.pixel(ll).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_cloud_nearest_sampling() {
        let proj = Projection::utm33n();
        let csv = "lon,lat,depth_m\n13.0,44.0,10\n13.1,44.0,20\n13.0,44.1,-3\n13.1,44.1,40\n";
        let pc = PointCloud::from_csv(csv.as_bytes(), proj).unwrap();
        assert_eq!(pc.depth_at(LonLat::new(13.01, 44.01)), Some(10.0));
        assert_eq!(pc.depth_at(LonLat::new(13.09, 44.09)), Some(40.0));
        assert_eq!(pc.depth_at(LonLat::new(13.01, 44.09)), Some(-3.0));
        assert!(pc.covers(LonLat::new(13.05, 44.05)));
        assert!(!pc.covers(LonLat::new(13.2, 44.05)));
    }

    #[test]
    fn ascii_raster_sampling() {
        let asc = "ncols 3\nnrows 2\nxllcorner 12.0\nyllcorner 44.0\ncellsize 0.5\nNODATA_value -9999\n\
                   1 2 3\n4 -9999 6\n";
        let r = AsciiRaster::parse(asc.as_bytes()).unwrap();
        // bottom row is the last line
        assert_eq!(r.depth_at(LonLat::new(12.1, 44.1)), Some(4.0));
        assert_eq!(r.depth_at(LonLat::new(12.6, 44.1)), None);
        assert_eq!(r.depth_at(LonLat::new(13.4, 44.9)), Some(3.0));
        assert!(!r.covers(LonLat::new(13.6, 44.1)));
    }

    #[test]
    fn ascii_raster_size_mismatch() {
        let asc = "ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 1\n1 2 3\n";
        assert!(AsciiRaster::parse(asc.as_bytes()).is_err());
    }
}
