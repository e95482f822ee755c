//! Raster grids, region sets, and geographical units.
//!
//! Rasters travel as ESRI ASCII grids (`ncols`, `nrows`, `xllcorner`,
//! `yllcorner`, `cellsize`, `NODATA_value` header followed by row-major
//! values, first file row = northernmost row). The same container holds
//! continuous intensity fields and categorical class-code fields; the
//! caller declares which via [`GridKind`], nothing is sniffed.
//!
//! Regions are named, pairwise-disjoint sets of cell indices. They load
//! from a JSON cell-run document (authoritative) or from a GeoJSON
//! polygon collection rasterized over cell centers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed header: {msg}")]
    MalformedHeader { line: usize, msg: String },
    #[error("line {line}: non-numeric token {token:?}")]
    NonNumericToken { line: usize, token: String },
    #[error("value-count mismatch: header promises {expected} values, body holds {found}")]
    ValueCountMismatch { expected: usize, found: usize },
    #[error("cell_size must be positive, got {0}")]
    CellSizeNotPositive(f64),
    #[error("grid dimensions must be positive (rows={rows}, cols={cols})")]
    EmptyDimensions { rows: usize, cols: usize },
    #[error("categorical grid holds non-integer or negative value {value} at cell ({row}, {col})")]
    BadClassCode { row: usize, col: usize, value: f64 },
    #[error("region {id:?} is empty")]
    EmptyRegion { id: String },
    #[error("duplicate region id {id:?}")]
    DuplicateRegionId { id: String },
    #[error("regions {a:?} and {b:?} both claim cell ({row}, {col})")]
    OverlappingRegions {
        a: String,
        b: String,
        row: usize,
        col: usize,
    },
    #[error("region {id:?} cell ({row}, {col}) lies outside a {rows}x{cols} grid")]
    CellOutOfBounds {
        id: String,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("empty aggregate: region {id:?} has no non-nodata cell")]
    EmptyAggregate { id: String },
    #[error("aggregation requires a continuous grid")]
    NotContinuous,
    #[error("unit partition requires R >= 1 and L >= 1 (got R={rows}, L={cols})")]
    ZeroUnits { rows: usize, cols: usize },
    #[error("bad region document: {0}")]
    BadRegionDocument(String),
}

/// Whether cell values are a continuous field or categorical class codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridKind {
    Continuous,
    Categorical,
}

/// A georeferenced cell grid. Values are stored row-major with row 0 at
/// the top (northern) edge, matching ESRI ASCII file order.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterGrid {
    rows: usize,
    cols: usize,
    cell_size: f64,
    origin_x: f64,
    origin_y: f64,
    nodata: f64,
    kind: GridKind,
    values: Vec<f64>,
}

impl RasterGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rows: usize,
        cols: usize,
        cell_size: f64,
        origin_x: f64,
        origin_y: f64,
        nodata: f64,
        kind: GridKind,
        values: Vec<f64>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyDimensions { rows, cols });
        }
        if cell_size <= 0.0 || cell_size.is_nan() {
            return Err(GridError::CellSizeNotPositive(cell_size));
        }
        if values.len() != rows * cols {
            return Err(GridError::ValueCountMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        let grid = RasterGrid {
            rows,
            cols,
            cell_size,
            origin_x,
            origin_y,
            nodata,
            kind,
            values,
        };
        if kind == GridKind::Categorical {
            for r in 0..rows {
                for c in 0..cols {
                    let v = grid.value(r, c);
                    if grid.is_nodata(v) {
                        continue;
                    }
                    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
                        return Err(GridError::BadClassCode {
                            row: r,
                            col: c,
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(grid)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    pub fn nodata(&self) -> f64 {
        self.nodata
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_nodata(&self, v: f64) -> bool {
        v == self.nodata || v.is_nan()
    }

    /// Class code at a cell; `None` for nodata or on a continuous grid.
    pub fn class_at(&self, row: usize, col: usize) -> Option<u32> {
        if self.kind != GridKind::Categorical {
            return None;
        }
        let v = self.value(row, col);
        if self.is_nodata(v) {
            None
        } else {
            Some(v as u32)
        }
    }

    /// Map coordinates of a cell center.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_size,
            self.origin_y + (self.rows - row) as f64 * self.cell_size - 0.5 * self.cell_size,
        )
    }

    pub fn in_bounds(&self, row: usize, col: usize) -> bool {
        row < self.rows && col < self.cols
    }
}

fn parse_f64(token: &str, line: usize) -> Result<f64, GridError> {
    token.parse::<f64>().map_err(|_| GridError::NonNumericToken {
        line,
        token: token.to_string(),
    })
}

/// Parse an ESRI ASCII grid from text. `kind` is declared by the caller.
pub fn parse_ascii_grid(text: &str, kind: GridKind) -> Result<RasterGrid, GridError> {
    let mut rows = None;
    let mut cols = None;
    let mut xll = None;
    let mut yll = None;
    let mut cell_size = None;
    let mut nodata = -9999.0;
    let mut values: Vec<f64> = Vec::new();
    let mut header_done = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let first = tokens.next().unwrap();
        if !header_done && first.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            let key = first.to_ascii_lowercase();
            let value = tokens.next().ok_or_else(|| GridError::MalformedHeader {
                line: line_no,
                msg: format!("header key {first:?} has no value"),
            })?;
            match key.as_str() {
                "ncols" => {
                    cols = Some(parse_f64(value, line_no)? as usize);
                }
                "nrows" => {
                    rows = Some(parse_f64(value, line_no)? as usize);
                }
                "xllcorner" => xll = Some(parse_f64(value, line_no)?),
                "yllcorner" => yll = Some(parse_f64(value, line_no)?),
                "cellsize" => cell_size = Some(parse_f64(value, line_no)?),
                "nodata_value" => nodata = parse_f64(value, line_no)?,
                other => {
                    return Err(GridError::MalformedHeader {
                        line: line_no,
                        msg: format!("unknown header key {other:?}"),
                    })
                }
            }
        } else {
            header_done = true;
            values.push(parse_f64(first, line_no)?);
            for tok in tokens {
                values.push(parse_f64(tok, line_no)?);
            }
        }
    }

    let missing = |what: &str| GridError::MalformedHeader {
        line: 0,
        msg: format!("missing required header key {what}"),
    };
    let rows = rows.ok_or_else(|| missing("nrows"))?;
    let cols = cols.ok_or_else(|| missing("ncols"))?;
    let xll = xll.ok_or_else(|| missing("xllcorner"))?;
    let yll = yll.ok_or_else(|| missing("yllcorner"))?;
    let cell_size = cell_size.ok_or_else(|| missing("cellsize"))?;
    if cell_size <= 0.0 || cell_size.is_nan() {
        return Err(GridError::CellSizeNotPositive(cell_size));
    }
    RasterGrid::new(rows, cols, cell_size, xll, yll, nodata, kind, values)
}

/// Read an ESRI ASCII grid file.
pub fn read_ascii_grid(path: &Path, kind: GridKind) -> Result<RasterGrid, GridError> {
    let text = fs::read_to_string(path).map_err(|source| GridError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_ascii_grid(&text, kind)
}

/// Render a grid as ESRI ASCII text. Finite values round-trip bit-exactly
/// through [`parse_ascii_grid`] because the shortest-representation float
/// formatting is itself exact.
pub fn format_ascii_grid(grid: &RasterGrid) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", grid.cols);
    let _ = writeln!(out, "nrows {}", grid.rows);
    let _ = writeln!(out, "xllcorner {}", grid.origin_x);
    let _ = writeln!(out, "yllcorner {}", grid.origin_y);
    let _ = writeln!(out, "cellsize {}", grid.cell_size);
    let _ = writeln!(out, "NODATA_value {}", grid.nodata);
    for r in 0..grid.rows {
        let row = &grid.values[r * grid.cols..(r + 1) * grid.cols];
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_ascii_grid(grid: &RasterGrid, path: &Path) -> Result<(), GridError> {
    fs::write(path, format_ascii_grid(grid)).map_err(|source| GridError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// One named region: a non-empty set of cell indices, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    id: String,
    cells: Vec<(usize, usize)>,
}

impl Region {
    pub fn new(id: impl Into<String>, mut cells: Vec<(usize, usize)>) -> Result<Self, GridError> {
        let id = id.into();
        cells.sort_unstable();
        cells.dedup();
        if cells.is_empty() {
            return Err(GridError::EmptyRegion { id });
        }
        Ok(Region { id, cells })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    /// Arithmetic mean of the cell centers.
    pub fn centroid(&self, grid: &RasterGrid) -> (f64, f64) {
        let mut sx = 0.0;
        let mut sy = 0.0;
        for &(r, c) in &self.cells {
            let (x, y) = grid.cell_center(r, c);
            sx += x;
            sy += y;
        }
        let n = self.cells.len() as f64;
        (sx / n, sy / n)
    }

    /// Region area in map units: cell count times squared cell size.
    pub fn area(&self, grid: &RasterGrid) -> f64 {
        self.cells.len() as f64 * grid.cell_size() * grid.cell_size()
    }
}

/// Ordered, pairwise-disjoint regions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionSet {
    regions: Vec<Region>,
    provenance: String,
}

impl RegionSet {
    pub fn new(regions: Vec<Region>, provenance: impl Into<String>) -> Result<Self, GridError> {
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        let mut ids: HashSet<&str> = HashSet::new();
        for (idx, region) in regions.iter().enumerate() {
            if !ids.insert(region.id.as_str()) {
                return Err(GridError::DuplicateRegionId {
                    id: region.id.clone(),
                });
            }
            for &cell in &region.cells {
                if let Some(&prev) = owner.get(&cell) {
                    return Err(GridError::OverlappingRegions {
                        a: regions[prev].id.clone(),
                        b: region.id.clone(),
                        row: cell.0,
                        col: cell.1,
                    });
                }
                owner.insert(cell, idx);
            }
        }
        Ok(RegionSet {
            regions,
            provenance: provenance.into(),
        })
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.id == id)
    }

    /// Every cell must lie inside the grid.
    pub fn validate_against(&self, grid: &RasterGrid) -> Result<(), GridError> {
        for region in &self.regions {
            for &(r, c) in &region.cells {
                if !grid.in_bounds(r, c) {
                    return Err(GridError::CellOutOfBounds {
                        id: region.id.clone(),
                        row: r,
                        col: c,
                        rows: grid.rows(),
                        cols: grid.cols(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn centroids(&self, grid: &RasterGrid) -> Vec<(f64, f64)> {
        self.regions.iter().map(|r| r.centroid(grid)).collect()
    }

    pub fn areas(&self, grid: &RasterGrid) -> Vec<f64> {
        self.regions.iter().map(|r| r.area(grid)).collect()
    }
}

#[derive(Deserialize)]
struct RegionDocEntry {
    id: String,
    #[serde(default)]
    cells: Vec<(usize, usize)>,
    /// Inclusive column runs: `[row, col_start, col_end]`.
    #[serde(default)]
    runs: Vec<(usize, usize, usize)>,
}

#[derive(Deserialize)]
struct RegionDoc {
    #[serde(default)]
    provenance: String,
    regions: Vec<RegionDocEntry>,
}

/// Load regions from the JSON cell-run document:
/// `{"provenance": "...", "regions": [{"id": "...", "cells": [[r,c],...], "runs": [[r,c0,c1],...]}]}`.
pub fn regions_from_json(text: &str) -> Result<RegionSet, GridError> {
    let doc: RegionDoc =
        serde_json::from_str(text).map_err(|e| GridError::BadRegionDocument(e.to_string()))?;
    let mut regions = Vec::with_capacity(doc.regions.len());
    for entry in doc.regions {
        let mut cells = entry.cells;
        for (row, c0, c1) in entry.runs {
            if c1 < c0 {
                return Err(GridError::BadRegionDocument(format!(
                    "region {:?}: run [{row}, {c0}, {c1}] has end before start",
                    entry.id
                )));
            }
            for c in c0..=c1 {
                cells.push((row, c));
            }
        }
        regions.push(Region::new(entry.id, cells)?);
    }
    RegionSet::new(regions, doc.provenance)
}

/// Load regions from a GeoJSON FeatureCollection of polygons, rasterized
/// over the grid's cell centers with the even-odd rule. The feature
/// property `id` (fallback `region_id`, then `name`) names the region.
pub fn regions_from_geojson(text: &str, grid: &RasterGrid) -> Result<RegionSet, GridError> {
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| GridError::BadRegionDocument(e.to_string()))?;
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| GridError::BadRegionDocument("missing features array".into()))?;

    let mut regions = Vec::new();
    for (fi, feature) in features.iter().enumerate() {
        let props = feature.get("properties");
        let id = props
            .and_then(|p| {
                p.get("id")
                    .or_else(|| p.get("region_id"))
                    .or_else(|| p.get("name"))
            })
            .and_then(|v| v.as_str().map(str::to_string).or_else(|| Some(v.to_string())))
            .unwrap_or_else(|| format!("feature_{fi}"));
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| GridError::BadRegionDocument(format!("feature {id:?} has no geometry")))?;
        let polygons = geojson_polygons(geometry)
            .map_err(|msg| GridError::BadRegionDocument(format!("feature {id:?}: {msg}")))?;

        let mut cells = Vec::new();
        for r in 0..grid.rows() {
            for c in 0..grid.cols() {
                let center = grid.cell_center(r, c);
                if polygons.iter().any(|rings| point_in_polygon(center, rings)) {
                    cells.push((r, c));
                }
            }
        }
        regions.push(Region::new(id, cells)?);
    }
    RegionSet::new(regions, "geojson")
}

type Ring = Vec<(f64, f64)>;

fn geojson_polygons(geometry: &serde_json::Value) -> Result<Vec<Vec<Ring>>, String> {
    let kind = geometry
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or("geometry has no type")?;
    let coords = geometry.get("coordinates").ok_or("geometry has no coordinates")?;
    let parse_ring = |ring: &serde_json::Value| -> Result<Ring, String> {
        ring.as_array()
            .ok_or("ring is not an array")?
            .iter()
            .map(|pt| {
                let pt = pt.as_array().ok_or("coordinate is not an array")?;
                let x = pt.first().and_then(|v| v.as_f64()).ok_or("bad x coordinate")?;
                let y = pt.get(1).and_then(|v| v.as_f64()).ok_or("bad y coordinate")?;
                Ok((x, y))
            })
            .collect()
    };
    let parse_polygon = |poly: &serde_json::Value| -> Result<Vec<Ring>, String> {
        poly.as_array()
            .ok_or("polygon is not an array")?
            .iter()
            .map(parse_ring)
            .collect()
    };
    match kind {
        "Polygon" => Ok(vec![parse_polygon(coords)?]),
        "MultiPolygon" => coords
            .as_array()
            .ok_or("multipolygon is not an array")?
            .iter()
            .map(parse_polygon)
            .collect(),
        other => Err(format!("unsupported geometry type {other:?}")),
    }
}

/// Even-odd rule over all rings, so holes subtract.
fn point_in_polygon(point: (f64, f64), rings: &[Ring]) -> bool {
    let (px, py) = point;
    let mut inside = false;
    for ring in rings {
        let n = ring.len();
        if n < 3 {
            continue;
        }
        let mut j = n - 1;
        for i in 0..n {
            let (xi, yi) = ring[i];
            let (xj, yj) = ring[j];
            if ((yi > py) != (yj > py))
                && (px < (xj - xi) * (py - yi) / (yj - yi) + xi)
            {
                inside = !inside;
            }
            j = i;
        }
    }
    inside
}

/// How to fold a region's cell values into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Mean,
    Sum,
}

/// Per-region aggregate of a continuous grid, skipping nodata cells.
pub fn region_aggregate(
    grid: &RasterGrid,
    regions: &RegionSet,
    aggregator: Aggregator,
) -> Result<Vec<f64>, GridError> {
    if grid.kind() != GridKind::Continuous {
        return Err(GridError::NotContinuous);
    }
    regions.validate_against(grid)?;
    let mut out = Vec::with_capacity(regions.len());
    for region in regions.regions() {
        let mut sum = 0.0;
        // Running mean so a constant region aggregates to exactly that
        // constant, whatever its shape.
        let mut mean = 0.0;
        let mut count = 0usize;
        for &(r, c) in region.cells() {
            let v = grid.value(r, c);
            if grid.is_nodata(v) {
                continue;
            }
            sum += v;
            count += 1;
            mean += (v - mean) / count as f64;
        }
        if count == 0 {
            return Err(GridError::EmptyAggregate {
                id: region.id().to_string(),
            });
        }
        out.push(match aggregator {
            Aggregator::Mean => mean,
            Aggregator::Sum => sum,
        });
    }
    Ok(out)
}

/// One geographical unit inside a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub unit_row: usize,
    pub unit_col: usize,
    pub cells: Vec<(usize, usize)>,
}

/// A region partitioned into geographical units.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitGrid {
    pub region_id: String,
    pub layout: (usize, usize),
    pub units: Vec<Unit>,
}

/// Split a region's bounding box into `unit_rows` x `unit_cols` blocks by
/// ceiling division (trailing blocks smaller), assign each region cell to
/// its block, and drop empty blocks.
pub fn partition_units(
    region: &Region,
    unit_rows: usize,
    unit_cols: usize,
) -> Result<UnitGrid, GridError> {
    if unit_rows == 0 || unit_cols == 0 {
        return Err(GridError::ZeroUnits {
            rows: unit_rows,
            cols: unit_cols,
        });
    }
    let cells = region.cells();
    let min_r = cells.iter().map(|&(r, _)| r).min().unwrap();
    let max_r = cells.iter().map(|&(r, _)| r).max().unwrap();
    let min_c = cells.iter().map(|&(_, c)| c).min().unwrap();
    let max_c = cells.iter().map(|&(_, c)| c).max().unwrap();
    let height = max_r - min_r + 1;
    let width = max_c - min_c + 1;
    let block_h = height.div_ceil(unit_rows);
    let block_w = width.div_ceil(unit_cols);

    let mut buckets: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for &(r, c) in cells {
        let a = (r - min_r) / block_h;
        let b = (c - min_c) / block_w;
        buckets.entry((a, b)).or_default().push((r, c));
    }
    let units = buckets
        .into_iter()
        .map(|((a, b), cells)| Unit {
            unit_row: a,
            unit_col: b,
            cells,
        })
        .collect();
    Ok(UnitGrid {
        region_id: region.id().to_string(),
        layout: (unit_rows, unit_cols),
        units,
    })
}
