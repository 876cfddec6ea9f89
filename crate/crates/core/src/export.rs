//! GeoJSON output of grid cells in WGS84.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::Result;
use crate::grid::{CellId, Grid};

/// Cell outline as a closed lon/lat ring.
pub fn cell_ring(grid: &Grid, id: CellId) -> Vec<[f64; 2]> {
    let mut ring: Vec<[f64; 2]> = grid
        .spec()
        .corners(id)
        .iter()
        .map(|p| {
            let ll = grid.to_lonlat(*p);
            [ll.lon, ll.lat]
        })
        .collect();
    ring.push(ring[0]);
    ring
}

/// A FeatureCollection with one polygon per cell. `cell_id` is always set;
/// `properties` adds to it.
pub fn cells_feature_collection(
    grid: &Grid,
    cells: impl IntoIterator<Item = (CellId, Map<String, Value>)>,
    metadata: Map<String, Value>,
) -> Value {
    let features: Vec<Value> = cells
        .into_iter()
        .map(|(id, mut props)| {
            props.insert("cell_id".into(), json!(id));
            json!({
                "type": "Feature",
                "properties": props,
                "geometry": {"type": "Polygon", "coordinates": [cell_ring(grid, id)]},
            })
        })
        .collect();
    json!({
        "type": "FeatureCollection",
        "metadata": metadata,
        "features": features,
    })
}

pub fn write_geojson<W: Write>(value: &Value, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::FrequencyTable;
    use crate::geometry::{LonLat, Projection};
    use crate::grid::GridSpec;

    #[test]
    fn polygons_round_trip_to_planar_corners() {
        let spec = GridSpec::from_lonlat_origin(LonLat::new(13.0, 44.0), 3, 2, 1000.0, 32633).unwrap();
        let grid = Grid::from_depths(spec, |_, _| Some(30.0), &FrequencyTable::standard()).unwrap();
        let mut props = Map::new();
        props.insert("rl_db".into(), json!(12.5));
        let fc = cells_feature_collection(&grid, [(4, props)], Map::new());
        let feature = &fc["features"][0];
        assert_eq!(feature["properties"]["cell_id"], 4);
        assert_eq!(feature["properties"]["rl_db"], 12.5);
        let ring = feature["geometry"]["coordinates"][0].as_array().unwrap();
        assert_eq!(ring.len(), 5);
        assert_eq!(ring[0], ring[4]);
        let proj = Projection::utm33n();
        let p = proj.forward(LonLat::new(ring[2][0].as_f64().unwrap(), ring[2][1].as_f64().unwrap()));
        let expected = grid.spec().corners(4)[2];
        assert!(p.distance(&expected) < 1e-6);
    }
}
