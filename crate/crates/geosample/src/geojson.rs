//! Minimal GeoJSON emission for report files.
//!
//! Regions render as MultiPolygons built from per-row cell runs (axis-
//! aligned rectangles in map coordinates); sample points render as Point
//! features at cell centers. Key order is alphabetical throughout, so
//! identical inputs produce identical bytes.

use serde_json::{json, Value};

use crate::grid::{RasterGrid, Region};
use crate::lsi::SamplePoint;

/// Merge a region's cells into per-row column runs and emit one rectangle
/// polygon per run.
pub fn region_geometry(grid: &RasterGrid, region: &Region) -> Value {
    let size = grid.cell_size();
    let (ox, oy) = grid.origin();
    let rows = grid.rows();

    let mut polygons: Vec<Value> = Vec::new();
    let mut cells = region.cells().iter().peekable();
    while let Some(&(r, c0)) = cells.next() {
        let mut c1 = c0;
        while let Some(&&(nr, nc)) = cells.peek() {
            if nr == r && nc == c1 + 1 {
                c1 = nc;
                cells.next();
            } else {
                break;
            }
        }
        let x0 = ox + c0 as f64 * size;
        let x1 = ox + (c1 + 1) as f64 * size;
        let y_top = oy + (rows - r) as f64 * size;
        let y_bottom = y_top - size;
        polygons.push(json!([[
            [x0, y_bottom],
            [x1, y_bottom],
            [x1, y_top],
            [x0, y_top],
            [x0, y_bottom]
        ]]));
    }
    json!({"type": "MultiPolygon", "coordinates": polygons})
}

pub fn region_feature(grid: &RasterGrid, region: &Region, properties: Value) -> Value {
    json!({
        "type": "Feature",
        "geometry": region_geometry(grid, region),
        "properties": properties,
    })
}

pub fn point_feature(grid: &RasterGrid, point: &SamplePoint) -> Value {
    let (x, y) = grid.cell_center(point.cell.0, point.cell.1);
    json!({
        "type": "Feature",
        "geometry": {"type": "Point", "coordinates": [x, y]},
        "properties": {
            "region_id": point.region_id,
            "class": point.class_code,
            "unit": [point.unit.0, point.unit.1],
            "cell": [point.cell.0, point.cell.1],
            "seed_path": point.seed_path,
        },
    })
}

pub fn feature_collection(features: Vec<Value>) -> Value {
    json!({"type": "FeatureCollection", "features": features})
}
