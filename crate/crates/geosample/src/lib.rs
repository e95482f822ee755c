//! Geo-aware dataset construction and evaluation.
//!
//! The library covers the full sampling chain used to build a globally
//! representative image dataset, plus the machinery to label and score it:
//!
//! - [`grid`]: ESRI ASCII rasters, region sets (JSON cell runs or
//!   rasterized GeoJSON polygons), per-region aggregation, and the
//!   geographical-unit partition.
//! - [`weights`]: sparse spatial weights from cell contiguity or inverse
//!   centroid distance, with optional row standardization.
//! - [`autocorr`]: global/local Moran's I and Getis-Ord Gi* with seeded
//!   permutation or analytical significance, cluster typing, and the
//!   hotspot-based region selection rule.
//! - [`lsi`]: landscape shape indices at region/class/unit granularity,
//!   largest-remainder sample allocation, and seeded point placement.
//! - [`taxonomy`]: the extensible multi-level label tree with top-down
//!   novel-label inclusion, duplicate consolidation, and label mapping.
//! - [`eval`]: ACG/NDCG/MAP/WMAP retrieval metrics over ranked runs.
//! - [`pipeline`]: the config-driven orchestration behind the `geosample`
//!   binary.
//!
//! Every randomized step derives its draws from explicit seeds through
//! per-task ChaCha streams, so outputs are reproducible byte for byte
//! regardless of thread count.
//!
//! The `examples/` directory has one runnable example per capability:
//! `cargo run --example global_moran`, `hotspot_selection`,
//! `lsi_sampling`, `taxonomy_workflow`, `retrieval_metrics`, and
//! `full_pipeline`.

pub mod autocorr;
pub mod eval;
pub mod geojson;
pub mod grid;
pub mod lsi;
pub mod pipeline;
pub mod taxonomy;
pub mod weights;

pub use autocorr::{
    classify_clusters, getis_ord_gi_star, global_morans_i, local_morans_i,
    select_sampling_regions, ClusterLabel, GiStarResult, Hotspot, LisaResult, Method,
    MoranResult, SignificanceSpec,
};
pub use eval::{evaluate, GroundTruth, MetricsReport, RankedRun};
pub use grid::{
    partition_units, read_ascii_grid, region_aggregate, write_ascii_grid, Aggregator, GridKind,
    RasterGrid, Region, RegionSet, UnitGrid,
};
pub use lsi::{
    allocate_classes, allocate_regions, clsi, lsi, place_points, rlsi, sample_regions, ulsi,
    AllocationPlan, LsiTarget, LsiValue, SamplePoint, SamplingSpec,
};
pub use taxonomy::{DictionaryMatcher, LabelTree, MatcherThresholds, SemanticMatcher};
pub use weights::{
    contiguity_weights, inverse_distance_weights, row_standardize, ContiguityRule,
    Standardization, WeightMatrix,
};
