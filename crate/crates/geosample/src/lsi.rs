//! Landscape shape indices and heterogeneity-driven sample placement.
//!
//! The landscape shape index of a pixel window is
//! `LSI = (1/4) * sum_p b_p / sqrt(q)` where `b_p` counts the 4-neighbours
//! of pixel `p` (inside the window) whose class differs, and `q` is the
//! number of counted pixels. Three bindings drive the allocation tiers:
//! `rlsi` over a region with every class counted, `clsi` over a region for
//! one class (q = that class's pixel count), and `ulsi` over a
//! geographical unit for one class.
//!
//! Allocation turns real-valued shares into integers by largest-remainder
//! rounding so totals are conserved exactly; ties break by ascending
//! region id or class code. Placement ranks a region's units by `ulsi`
//! descending, drops zero units, splits the ranked list into `cN`
//! near-equal segments (longer segments first), and draws one unit per
//! segment and one cell of the target class inside it, all from a
//! per-(region, class) seeded stream.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Display;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{GridKind, RasterGrid, Region, RegionSet, UnitGrid};

#[derive(Debug, Error)]
pub enum LsiError {
    #[error("window is empty after nodata removal")]
    WindowEmpty,
    #[error("landscape indices require a categorical grid")]
    NotCategorical,
    #[error("all region shares are zero but {total} samples were requested")]
    AllRegionSharesZero { total: u64 },
    #[error("region {region:?}: all class shares are zero but {count} samples were requested")]
    AllClassSharesZero { region: String, count: u64 },
    #[error("region {region:?}: class proportions sum to {sum} (> 1 beyond tolerance)")]
    BadProportions { region: String, sum: f64 },
    #[error(
        "insufficient heterogeneous units in region {region:?} for class {class}: \
         need {needed}, feasible maximum {feasible}"
    )]
    InsufficientUnits {
        region: String,
        class: u32,
        needed: u64,
        feasible: u64,
    },
    #[error("region/value vector lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// An LSI evaluation: the index and the number of counted pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LsiValue {
    pub value: f64,
    pub pixel_count: usize,
}

/// Which pixels count toward the index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsiTarget {
    AllClasses,
    Class(u32),
}

/// LSI over an arbitrary cell window of a categorical grid. Nodata cells
/// are excluded from the window entirely: they are neither counted pixels
/// nor differing neighbours.
pub fn lsi(grid: &RasterGrid, cells: &[(usize, usize)], target: LsiTarget) -> Result<LsiValue, LsiError> {
    if grid.kind() != GridKind::Categorical {
        return Err(LsiError::NotCategorical);
    }
    let mut window: HashMap<(usize, usize), u32> = HashMap::with_capacity(cells.len());
    for &(r, c) in cells {
        if let Some(k) = grid.class_at(r, c) {
            window.insert((r, c), k);
        }
    }
    if window.is_empty() {
        return Err(LsiError::WindowEmpty);
    }

    let neighbours = |r: usize, c: usize| {
        let mut out = [(usize::MAX, usize::MAX); 4];
        let mut n = 0;
        if r > 0 {
            out[n] = (r - 1, c);
            n += 1;
        }
        if c > 0 {
            out[n] = (r, c - 1);
            n += 1;
        }
        out[n] = (r + 1, c);
        n += 1;
        out[n] = (r, c + 1);
        n += 1;
        (out, n)
    };

    let mut boundary_sum = 0usize;
    let mut counted = 0usize;
    for (&(r, c), &class) in &window {
        if let LsiTarget::Class(k) = target {
            if class != k {
                continue;
            }
        }
        counted += 1;
        let (nbrs, n) = neighbours(r, c);
        for &(nr, nc) in &nbrs[..n] {
            if let Some(&other) = window.get(&(nr, nc)) {
                if other != class {
                    boundary_sum += 1;
                }
            }
        }
    }
    if counted == 0 {
        // Class mode with no pixels of that class: defined as zero.
        return Ok(LsiValue {
            value: 0.0,
            pixel_count: 0,
        });
    }
    Ok(LsiValue {
        value: 0.25 * boundary_sum as f64 / (counted as f64).sqrt(),
        pixel_count: counted,
    })
}

/// Region-level LSI: every non-nodata pixel counts.
pub fn rlsi(grid: &RasterGrid, region: &Region) -> Result<LsiValue, LsiError> {
    lsi(grid, region.cells(), LsiTarget::AllClasses)
}

/// Class-level LSI within a region.
pub fn clsi(grid: &RasterGrid, region: &Region, class: u32) -> Result<LsiValue, LsiError> {
    lsi(grid, region.cells(), LsiTarget::Class(class))
}

/// Unit-level LSI for one class.
pub fn ulsi(grid: &RasterGrid, unit_cells: &[(usize, usize)], class: u32) -> Result<LsiValue, LsiError> {
    lsi(grid, unit_cells, LsiTarget::Class(class))
}

/// One largest-remainder rounding decision, kept for the audit trail.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub stage: String,
    pub key: String,
    pub raw_share: f64,
    pub floor: u64,
    pub remainder: f64,
    pub granted_extra: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Largest-remainder apportionment: floor every share, then hand the
/// leftover units to the largest fractional remainders, ties by ascending
/// key. Only positive-weight entries ever receive units.
fn largest_remainder<K: Ord + Display>(
    stage: &str,
    keys: &[K],
    shares: &[f64],
    total: u64,
) -> (Vec<u64>, Vec<TraceEntry>) {
    let n = keys.len();
    let mut counts: Vec<u64> = shares.iter().map(|s| s.floor().max(0.0) as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut leftover = total.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..n).filter(|&i| shares[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.partial_cmp(&ra)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| keys[a].cmp(&keys[b]))
    });

    let mut granted = vec![false; n];
    while leftover > 0 && !order.is_empty() {
        for &i in &order {
            if leftover == 0 {
                break;
            }
            counts[i] += 1;
            granted[i] = true;
            leftover -= 1;
        }
    }

    let trace = (0..n)
        .map(|i| TraceEntry {
            stage: stage.to_string(),
            key: keys[i].to_string(),
            raw_share: shares[i],
            floor: shares[i].floor().max(0.0) as u64,
            remainder: shares[i] - shares[i].floor(),
            granted_extra: granted[i],
            note: None,
        })
        .collect();
    (counts, trace)
}

/// Pre-rounding regional shares `s_i = (rlsi_i * area_i / sum) * total`.
pub fn region_shares(rlsi_values: &[f64], areas: &[f64], total: u64) -> Result<Vec<f64>, LsiError> {
    if rlsi_values.len() != areas.len() {
        return Err(LsiError::LengthMismatch {
            left: rlsi_values.len(),
            right: areas.len(),
        });
    }
    let weights: Vec<f64> = rlsi_values.iter().zip(areas).map(|(l, a)| l * a).collect();
    let sum: f64 = weights.iter().sum();
    if total == 0 {
        return Ok(vec![0.0; weights.len()]);
    }
    if sum <= 0.0 {
        return Err(LsiError::AllRegionSharesZero { total });
    }
    Ok(weights.iter().map(|w| w / sum * total as f64).collect())
}

/// Integer sample counts per region; conserves the total exactly.
pub fn allocate_regions(
    ids: &[&str],
    rlsi_values: &[f64],
    areas: &[f64],
    total: u64,
) -> Result<(Vec<u64>, Vec<TraceEntry>), LsiError> {
    if ids.len() != rlsi_values.len() {
        return Err(LsiError::LengthMismatch {
            left: ids.len(),
            right: rlsi_values.len(),
        });
    }
    let shares = region_shares(rlsi_values, areas, total)?;
    Ok(largest_remainder("region", ids, &shares, total))
}

const PROPORTION_TOLERANCE: f64 = 1e-9;

/// Integer sample counts per class within one region; conserves `region_count`.
pub fn allocate_classes(
    region_id: &str,
    classes: &[u32],
    clsi_values: &[f64],
    proportions: &[f64],
    region_count: u64,
) -> Result<(Vec<u64>, Vec<TraceEntry>), LsiError> {
    if classes.len() != clsi_values.len() || classes.len() != proportions.len() {
        return Err(LsiError::LengthMismatch {
            left: classes.len(),
            right: clsi_values.len().max(proportions.len()),
        });
    }
    let psum: f64 = proportions.iter().sum();
    if proportions.iter().any(|&p| p < 0.0) || psum > 1.0 + PROPORTION_TOLERANCE {
        return Err(LsiError::BadProportions {
            region: region_id.to_string(),
            sum: psum,
        });
    }
    if region_count == 0 {
        return Ok((vec![0; classes.len()], Vec::new()));
    }
    let weights: Vec<f64> = clsi_values
        .iter()
        .zip(proportions)
        .map(|(l, p)| l * p)
        .collect();
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return Err(LsiError::AllClassSharesZero {
            region: region_id.to_string(),
            count: region_count,
        });
    }
    let shares: Vec<f64> = weights.iter().map(|w| w / sum * region_count as f64).collect();
    let (counts, mut trace) = largest_remainder("class", classes, &shares, region_count);
    for entry in &mut trace {
        entry.key = format!("{region_id}/{}", entry.key);
    }
    Ok((counts, trace))
}

/// A placed sample: one cell of the declared class inside one unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SamplePoint {
    pub region_id: String,
    pub class_code: u32,
    pub unit: (usize, usize),
    pub cell: (usize, usize),
    pub seed_path: String,
}

fn placement_rng(master_seed: u64, region_id: &str, class: u32) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"geosample.place");
    hasher.update(master_seed.to_le_bytes());
    hasher.update(region_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(class.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(seed)
}

/// Place `count` samples of `class` inside a region's units.
pub fn place_points(
    grid: &RasterGrid,
    units: &UnitGrid,
    class: u32,
    count: u64,
    master_seed: u64,
) -> Result<Vec<SamplePoint>, LsiError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    // Rank units by heterogeneity, most fragmented first, position ties
    // resolved row-major so the ordering is total.
    let mut ranked: Vec<(&crate::grid::Unit, f64)> = Vec::new();
    for unit in &units.units {
        let value = ulsi(grid, &unit.cells, class)?;
        if value.value > 0.0 {
            ranked.push((unit, value.value));
        }
    }
    ranked.sort_by(|(ua, va), (ub, vb)| {
        vb.partial_cmp(va)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| (ua.unit_row, ua.unit_col).cmp(&(ub.unit_row, ub.unit_col)))
    });

    let feasible = ranked.len() as u64;
    if feasible < count {
        return Err(LsiError::InsufficientUnits {
            region: units.region_id.clone(),
            class,
            needed: count,
            feasible,
        });
    }

    let segments = count as usize;
    let base = ranked.len() / segments;
    let extra = ranked.len() % segments;
    let mut rng = placement_rng(master_seed, &units.region_id, class);
    let seed_base = format!(
        "seed:{master_seed}/region:{}/class:{class}",
        units.region_id
    );

    let mut points = Vec::with_capacity(segments);
    let mut start = 0usize;
    for seg in 0..segments {
        let len = base + usize::from(seg < extra);
        let offset = rng.gen_range(0..len);
        let (unit, _) = ranked[start + offset];
        let class_cells: Vec<(usize, usize)> = unit
            .cells
            .iter()
            .copied()
            .filter(|&(r, c)| grid.class_at(r, c) == Some(class))
            .collect();
        let cell = class_cells[rng.gen_range(0..class_cells.len())];
        points.push(SamplePoint {
            region_id: units.region_id.clone(),
            class_code: class,
            unit: (unit.unit_row, unit.unit_col),
            cell,
            seed_path: format!("{seed_base}/segment:{seg}"),
        });
        start += len;
    }
    Ok(points)
}

/// The complete allocation: totals, per-region and per-class counts, and
/// every rounding decision that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationPlan {
    pub total: u64,
    pub per_region: BTreeMap<String, u64>,
    pub per_class: BTreeMap<String, BTreeMap<u32, u64>>,
    pub rounding_trace: Vec<TraceEntry>,
}

/// Options for the end-to-end sampling step.
#[derive(Debug, Clone, Copy)]
pub struct SamplingSpec {
    pub total: u64,
    pub unit_rows: usize,
    pub unit_cols: usize,
    pub clamp: bool,
    pub seed: u64,
}

struct RegionSamples {
    region_id: String,
    class_counts: BTreeMap<u32, u64>,
    trace: Vec<TraceEntry>,
    points: Vec<SamplePoint>,
}

/// Class allocation and placement for one region; pure, so regions run in
/// parallel. The per-(region, class) seed streams keep outputs identical
/// whatever the thread count.
fn sample_one_region(
    grid: &RasterGrid,
    region: &Region,
    count: u64,
    spec: &SamplingSpec,
) -> Result<RegionSamples, LsiError> {
    // Classes present among the region's non-nodata cells, with their
    // pixel proportions W_{i,k}.
    let mut class_pixels: BTreeMap<u32, u64> = BTreeMap::new();
    let mut valid = 0u64;
    for &(r, c) in region.cells() {
        if let Some(k) = grid.class_at(r, c) {
            *class_pixels.entry(k).or_default() += 1;
            valid += 1;
        }
    }
    let classes: Vec<u32> = class_pixels.keys().copied().collect();
    let proportions: Vec<f64> = classes
        .iter()
        .map(|k| class_pixels[k] as f64 / valid as f64)
        .collect();
    let clsi_values: Vec<f64> = classes
        .iter()
        .map(|&k| clsi(grid, region, k).map(|v| v.value))
        .collect::<Result<_, _>>()?;
    let (class_counts, mut trace) =
        allocate_classes(region.id(), &classes, &clsi_values, &proportions, count)?;

    let units = crate::grid::partition_units(region, spec.unit_rows, spec.unit_cols)
        .expect("unit layout validated by caller");
    let mut out_counts = BTreeMap::new();
    let mut points = Vec::new();
    for (&class, &class_count) in classes.iter().zip(&class_counts) {
        let mut want = class_count;
        if want > 0 {
            let feasible = units
                .units
                .iter()
                .filter(|u| {
                    ulsi(grid, &u.cells, class)
                        .map(|v| v.value > 0.0)
                        .unwrap_or(false)
                })
                .count() as u64;
            if feasible < want {
                if !spec.clamp {
                    return Err(LsiError::InsufficientUnits {
                        region: region.id().to_string(),
                        class,
                        needed: want,
                        feasible,
                    });
                }
                trace.push(TraceEntry {
                    stage: "clamp".to_string(),
                    key: format!("{}/{}", region.id(), class),
                    raw_share: want as f64,
                    floor: feasible,
                    remainder: 0.0,
                    granted_extra: false,
                    note: Some(format!("clamped from {want} to feasible maximum {feasible}")),
                });
                want = feasible;
            }
        }
        out_counts.insert(class, want);
        points.extend(place_points(grid, &units, class, want, spec.seed)?);
    }
    Ok(RegionSamples {
        region_id: region.id().to_string(),
        class_counts: out_counts,
        trace,
        points,
    })
}

/// Run the full allocation and placement chain over the selected regions
/// of a categorical land-cover grid.
pub fn sample_regions(
    grid: &RasterGrid,
    regions: &RegionSet,
    selected: &BTreeSet<usize>,
    spec: &SamplingSpec,
) -> Result<(AllocationPlan, Vec<SamplePoint>), LsiError> {
    let picked: Vec<&Region> = selected
        .iter()
        .filter_map(|&i| regions.regions().get(i))
        .collect();

    let mut plan = AllocationPlan {
        total: spec.total,
        per_region: BTreeMap::new(),
        per_class: BTreeMap::new(),
        rounding_trace: Vec::new(),
    };
    if picked.is_empty() || spec.total == 0 {
        return Ok((plan, Vec::new()));
    }

    let ids: Vec<&str> = picked.iter().map(|r| r.id()).collect();
    let rlsi_values: Vec<f64> = picked
        .par_iter()
        .map(|r| rlsi(grid, r).map(|v| v.value))
        .collect::<Result<_, _>>()?;
    let areas: Vec<f64> = picked.iter().map(|r| r.area(grid)).collect();
    let (region_counts, trace) = allocate_regions(&ids, &rlsi_values, &areas, spec.total)?;
    plan.rounding_trace.extend(trace);

    let per_region: Vec<RegionSamples> = picked
        .par_iter()
        .zip(&region_counts)
        .map(|(region, &count)| {
            if count == 0 {
                Ok(None)
            } else {
                sample_one_region(grid, region, count, spec).map(Some)
            }
        })
        .collect::<Result<Vec<Option<RegionSamples>>, LsiError>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut points = Vec::new();
    for (region, &count) in picked.iter().zip(&region_counts) {
        plan.per_region.insert(region.id().to_string(), count);
    }
    for samples in per_region {
        plan.per_class.insert(samples.region_id.clone(), samples.class_counts);
        plan.rounding_trace.extend(samples.trace);
        points.extend(samples.points);
    }
    Ok((plan, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{partition_units, GridKind, RasterGrid, Region};

    fn categorical(rows: usize, cols: usize, values: Vec<f64>) -> RasterGrid {
        RasterGrid::new(rows, cols, 1.0, 0.0, 0.0, -9999.0, GridKind::Categorical, values).unwrap()
    }

    fn full_window(rows: usize, cols: usize) -> Vec<(usize, usize)> {
        (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).collect()
    }

    #[test]
    fn uniform_window_has_zero_lsi() {
        let grid = categorical(3, 3, vec![7.0; 9]);
        let v = lsi(&grid, &full_window(3, 3), LsiTarget::AllClasses).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.pixel_count, 9);
    }

    #[test]
    fn checkerboard_all_classes_is_one() {
        let grid = categorical(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let v = lsi(&grid, &full_window(2, 2), LsiTarget::AllClasses).unwrap();
        assert_eq!(v.value, 1.0);
    }

    #[test]
    fn checkerboard_class_mode_is_inv_sqrt2() {
        let grid = categorical(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let v = lsi(&grid, &full_window(2, 2), LsiTarget::Class(0)).unwrap();
        assert!((v.value - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(v.pixel_count, 2);
    }

    #[test]
    fn absent_class_scores_zero_with_no_pixels() {
        let grid = categorical(2, 2, vec![0.0, 1.0, 1.0, 0.0]);
        let v = lsi(&grid, &full_window(2, 2), LsiTarget::Class(9)).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.pixel_count, 0);
    }

    #[test]
    fn nodata_cells_leave_the_window() {
        let grid = categorical(2, 2, vec![-9999.0, -9999.0, -9999.0, -9999.0]);
        assert!(matches!(
            lsi(&grid, &full_window(2, 2), LsiTarget::AllClasses),
            Err(LsiError::WindowEmpty)
        ));
    }

    #[test]
    fn single_region_takes_everything() {
        let (counts, _) = allocate_regions(&["only"], &[0.5], &[10.0], 9).unwrap();
        assert_eq!(counts, vec![9]);
    }

    #[test]
    fn proportional_split_is_exact() {
        let (counts, _) = allocate_regions(&["a", "b"], &[1.0, 3.0], &[1.0, 1.0], 8).unwrap();
        assert_eq!(counts, vec![2, 6]);
    }

    #[test]
    fn equal_shares_tie_break_by_id() {
        let (counts, trace) =
            allocate_regions(&["a", "b", "c"], &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], 4).unwrap();
        assert_eq!(counts, vec![2, 1, 1]);
        assert!(trace.iter().any(|t| t.key == "a" && t.granted_extra));
    }

    #[test]
    fn zero_share_regions_get_nothing() {
        let (counts, _) =
            allocate_regions(&["a", "b"], &[0.0, 2.0], &[100.0, 1.0], 7).unwrap();
        assert_eq!(counts, vec![0, 7]);
    }

    #[test]
    fn all_zero_shares_error() {
        let err = allocate_regions(&["a"], &[0.0], &[1.0], 3).unwrap_err();
        assert!(matches!(err, LsiError::AllRegionSharesZero { total: 3 }));
    }

    #[test]
    fn single_class_takes_region_count() {
        let (counts, _) = allocate_classes("r", &[4], &[0.8], &[1.0], 5).unwrap();
        assert_eq!(counts, vec![5]);
    }

    #[test]
    fn class_tie_break_by_code() {
        let (counts, _) = allocate_classes("r", &[1, 2], &[0.5, 0.5], &[0.5, 0.5], 3).unwrap();
        assert_eq!(counts, vec![2, 1]);
    }

    #[test]
    fn zero_clsi_class_gets_nothing() {
        let (counts, _) = allocate_classes("r", &[1, 2], &[0.0, 0.5], &[0.9, 0.1], 4).unwrap();
        assert_eq!(counts, vec![0, 4]);
    }

    #[test]
    fn excess_proportions_are_rejected() {
        let err = allocate_classes("r", &[1, 2], &[0.5, 0.5], &[0.9, 0.3], 4).unwrap_err();
        assert!(matches!(err, LsiError::BadProportions { .. }));
    }

    /// 4x4 single-column stripes make every 2x2 unit heterogeneous.
    fn striped_units() -> (RasterGrid, UnitGrid) {
        let values: Vec<f64> = (0..16).map(|i| f64::from((i % 2) as u8)).collect();
        let grid = categorical(4, 4, values);
        let region = Region::new("r", full_window(4, 4)).unwrap();
        let units = partition_units(&region, 2, 2).unwrap();
        (grid, units)
    }

    #[test]
    fn full_demand_hits_every_unit_once() {
        let (grid, units) = striped_units();
        let points = place_points(&grid, &units, 1, 4, 11).unwrap();
        let mut seen: Vec<(usize, usize)> = points.iter().map(|p| p.unit).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn placed_cells_match_the_declared_class() {
        let (grid, units) = striped_units();
        for class in [0u32, 1u32] {
            let points = place_points(&grid, &units, class, 2, 5).unwrap();
            for p in &points {
                assert_eq!(grid.class_at(p.cell.0, p.cell.1), Some(class));
            }
        }
    }

    #[test]
    fn infeasible_demand_reports_the_maximum() {
        let (grid, units) = striped_units();
        let err = place_points(&grid, &units, 1, 9, 5).unwrap_err();
        match err {
            LsiError::InsufficientUnits { feasible, needed, .. } => {
                assert_eq!(feasible, 4);
                assert_eq!(needed, 9);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn placement_is_seed_deterministic() {
        let (grid, units) = striped_units();
        let a = place_points(&grid, &units, 1, 3, 77).unwrap();
        let b = place_points(&grid, &units, 1, 3, 77).unwrap();
        assert_eq!(a, b);
        let c = place_points(&grid, &units, 1, 3, 78).unwrap();
        assert!(a != c || a.iter().zip(&c).all(|(x, y)| x.cell == y.cell));
    }

    /// Six equally heterogeneous units and four demanded points give
    /// segment lengths (2, 2, 1, 1); each unit must be drawn with
    /// probability one over its segment length. Monte-Carlo frequencies
    /// over many seeds stay within 3-sigma binomial bounds.
    #[test]
    fn placement_frequency_matches_segment_lengths() {
        // 2x12 region, six 2x2 units, identical vertical-stripe content
        // so the ulsi ranking falls back to unit coordinates.
        let values: Vec<f64> = (0..24).map(|i| f64::from((i % 2) as u8)).collect();
        let grid = categorical(2, 12, values);
        let region = Region::new("r", full_window(2, 12)).unwrap();
        let units = partition_units(&region, 1, 6).unwrap();
        assert_eq!(units.units.len(), 6);

        let trials = 600u32;
        let mut hits = [0u32; 6];
        for seed in 0..trials {
            let points = place_points(&grid, &units, 1, 4, seed as u64).unwrap();
            assert_eq!(points.len(), 4);
            for p in &points {
                hits[p.unit.1] += 1;
            }
        }
        // Segments over the ranked six units: (2, 2, 1, 1).
        let expected = [0.5, 0.5, 0.5, 0.5, 1.0, 1.0];
        for (unit, (&got, &p)) in hits.iter().zip(&expected).enumerate() {
            let mean = trials as f64 * p;
            let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (got as f64 - mean).abs() <= 3.0 * sigma.max(1e-9),
                "unit {unit}: {got} draws, expected {mean} +- {:.1}",
                3.0 * sigma
            );
        }
    }
}
