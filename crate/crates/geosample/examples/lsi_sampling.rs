//! Landscape shape indices and the three-tier sample allocation: regions
//! by rLSI x area, classes by cLSI x proportion, and unit-level placement
//! along the ranked heterogeneity curve.
//!
//! Run with: `cargo run -p geosample --example lsi_sampling`

use std::collections::BTreeSet;

use geosample::grid::{partition_units, GridKind, RasterGrid, Region, RegionSet};
use geosample::lsi::{clsi, rlsi, sample_regions, ulsi, SamplingSpec};

fn main() {
    // A 8x16 categorical raster: the west half is a fine two-class
    // weave (heterogeneous), the east half almost uniform.
    let mut values = Vec::new();
    for r in 0..8 {
        for c in 0..16 {
            let class = if c < 8 {
                ((r + c) % 2) as f64
            } else {
                f64::from(u8::from(r == 4 && c == 12)) * 2.0
            };
            values.push(class);
        }
    }
    let grid = RasterGrid::new(8, 16, 1.0, 0.0, 0.0, -9999.0, GridKind::Categorical, values)
        .expect("valid raster");

    let west = Region::new("west", (0..8).flat_map(|r| (0..8).map(move |c| (r, c))).collect())
        .expect("valid region");
    let east = Region::new("east", (0..8).flat_map(|r| (8..16).map(move |c| (r, c))).collect())
        .expect("valid region");

    for region in [&west, &east] {
        let index = rlsi(&grid, region).expect("rlsi computes");
        println!(
            "{:<5} rLSI = {:.4} over {} pixels",
            region.id(),
            index.value,
            index.pixel_count
        );
        for class in [0u32, 1, 2] {
            let v = clsi(&grid, region, class).expect("clsi computes");
            println!("      cLSI(class {class}) = {:.4} (q = {})", v.value, v.pixel_count);
        }
        let units = partition_units(region, 2, 2).expect("partition");
        for unit in &units.units {
            let v = ulsi(&grid, &unit.cells, 1).expect("ulsi computes");
            println!(
                "      unit ({}, {}): uLSI(class 1) = {:.4}",
                unit.unit_row, unit.unit_col, v.value
            );
        }
    }

    let regions = RegionSet::new(vec![west, east], "example").expect("disjoint");
    let spec = SamplingSpec {
        total: 12,
        unit_rows: 2,
        unit_cols: 4,
        clamp: false,
        seed: 99,
    };
    let selected: BTreeSet<usize> = [0usize, 1].into_iter().collect();
    let (plan, points) = sample_regions(&grid, &regions, &selected, &spec).expect("feasible");

    println!("\nallocation of {} points:", plan.total);
    for (region, count) in &plan.per_region {
        println!("  {region}: N_i = {count}, per class {:?}", plan.per_class.get(region));
    }
    println!("\nplaced points (deterministic for seed {}):", spec.seed);
    for p in &points {
        println!(
            "  {} class {} unit ({}, {}) cell ({}, {})",
            p.region_id, p.class_code, p.unit.0, p.unit.1, p.cell.0, p.cell.1
        );
    }
}
