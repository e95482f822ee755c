//! Pipeline configuration and the subcommand implementations behind the
//! command-line front end.
//!
//! The configuration is one flat JSON document; command-line flags
//! override individual keys. Relative paths resolve against the config
//! file's directory, and every referenced path must exist at load time.
//! Each step writes fixed-name JSON/GeoJSON reports under the output
//! directory and stamps them with the toolkit version, a hash of the
//! effective configuration, and the seed, so any output can be traced
//! back to exactly one invocation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::autocorr::{
    classify_clusters, getis_ord_gi_star, global_morans_i, local_morans_i,
    select_sampling_regions, Method, SignificanceSpec,
};
use crate::eval::{evaluate, truth_from_names, Direction, RankedRun};
use crate::geojson::{feature_collection, point_feature, region_feature};
use crate::grid::{
    read_ascii_grid, region_aggregate, regions_from_geojson, regions_from_json, Aggregator,
    GridKind, RasterGrid, RegionSet,
};
use crate::lsi::{sample_regions, SamplingSpec};
use crate::taxonomy::{
    ingest_label_counts, DictionaryMatcher, LabelTree, MatcherThresholds, RemoteMatcher,
    SemanticMatcher,
};
use crate::weights::{
    contiguity_weights, inverse_distance_weights, row_standardize, ContiguityRule, WeightMatrix,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("{0}")]
    Input(String),
    /// Refused by a pipeline gate; maps to exit code 2.
    #[error("{0}")]
    Gated(String),
}

impl PipelineError {
    fn input(err: impl std::fmt::Display) -> Self {
        PipelineError::Input(err.to_string())
    }
}

macro_rules! from_input {
    ($($ty:ty),*) => {$(
        impl From<$ty> for PipelineError {
            fn from(err: $ty) -> Self {
                PipelineError::input(err)
            }
        }
    )*};
}
from_input!(
    crate::grid::GridError,
    crate::weights::WeightsError,
    crate::autocorr::StatsError,
    crate::lsi::LsiError,
    crate::taxonomy::TaxonomyError,
    crate::eval::EvalError,
    std::io::Error
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsRule {
    Edge,
    EdgeOrCorner,
    InverseDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatcherChoice {
    Dictionary,
    Remote,
}

fn default_gamma() -> f64 {
    1.0
}
fn default_permutations() -> usize {
    999
}
fn default_alpha() -> f64 {
    0.05
}
fn default_units() -> usize {
    4
}
fn default_level() -> u8 {
    3
}
fn default_cutoffs() -> Vec<usize> {
    vec![5, 10, 20, 50, 100]
}
fn default_timeout_ms() -> u64 {
    10_000
}
fn default_weights_rule() -> WeightsRule {
    WeightsRule::EdgeOrCorner
}
fn default_method() -> Method {
    Method::Permutation
}
fn default_aggregator() -> Aggregator {
    Aggregator::Mean
}
fn default_matcher() -> MatcherChoice {
    MatcherChoice::Dictionary
}
fn default_direction() -> Direction {
    Direction::ImageToText
}

/// The flat configuration document: every key is top level and maps to
/// one command-line flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub light_raster: Option<PathBuf>,
    pub landcover_raster: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub label_counts: Option<PathBuf>,

    #[serde(default = "default_weights_rule")]
    pub weights_rule: WeightsRule,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub distance_cutoff: Option<f64>,
    #[serde(default)]
    pub standardize: bool,

    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_aggregator")]
    pub aggregator: Aggregator,

    #[serde(default)]
    pub total_samples: u64,
    #[serde(default = "default_units")]
    pub unit_rows: usize,
    #[serde(default = "default_units")]
    pub unit_cols: usize,
    #[serde(default)]
    pub clamp: bool,

    #[serde(default = "default_level")]
    pub level: u8,
    #[serde(default = "default_cutoffs")]
    pub cutoffs: Vec<usize>,
    #[serde(default = "default_direction")]
    pub direction: Direction,

    #[serde(default = "default_matcher")]
    pub matcher: MatcherChoice,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config uses defaults")
    }
}

impl PipelineConfig {
    /// Load a config file, resolving relative paths against its directory
    /// and requiring every referenced path to exist.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|_| PipelineError::FileNotFound(path.display().to_string()))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::Input(format!("bad config: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.resolve_paths(base);
        config.check_paths()?;
        config.validate()?;
        Ok(config)
    }

    /// Numeric fields must sit inside the preconditions of the
    /// operations they feed.
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PipelineError::Input(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.gamma <= 0.0 {
            return Err(PipelineError::Input(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(2..=3).contains(&self.level) {
            return Err(PipelineError::Input(format!(
                "evaluation level must be 2 or 3, got {}",
                self.level
            )));
        }
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return Err(PipelineError::Input("cutoffs must be positive".into()));
        }
        if self.unit_rows == 0 || self.unit_cols == 0 {
            return Err(PipelineError::Input(
                "unit_rows and unit_cols must be at least 1".into(),
            ));
        }
        if self.method == Method::Permutation && self.permutations == 0 {
            return Err(PipelineError::Input(
                "permutation method needs at least 1 permutation".into(),
            ));
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let slots = [
            &mut self.light_raster,
            &mut self.landcover_raster,
            &mut self.regions,
            &mut self.taxonomy,
            &mut self.truth,
            &mut self.run,
            &mut self.label_counts,
        ];
        for p in slots.into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
    }

    pub fn check_paths(&self) -> Result<(), PipelineError> {
        for slot in [
            &self.light_raster,
            &self.landcover_raster,
            &self.regions,
            &self.taxonomy,
            &self.truth,
            &self.run,
            &self.label_counts,
        ]
        .into_iter()
        .flatten()
        {
            if !slot.exists() {
                return Err(PipelineError::FileNotFound(slot.display().to_string()));
            }
        }
        Ok(())
    }

    /// Hash of the effective configuration, stamped into every report.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn significance(&self) -> SignificanceSpec {
        SignificanceSpec {
            method: self.method,
            permutations: self.permutations,
            seed: self.seed,
            alpha: self.alpha,
        }
    }

    fn provenance(&self) -> serde_json::Value {
        json!({
            "toolkit_version": env!("CARGO_PKG_VERSION"),
            "config_hash": self.hash(),
            "seed": self.seed,
        })
    }

    fn require(&self, slot: &Option<PathBuf>, what: &str) -> Result<PathBuf, PipelineError> {
        slot.clone()
            .ok_or_else(|| PipelineError::Input(format!("config key {what:?} is required")))
    }
}

fn load_regions_for_grid(path: &Path, grid: &RasterGrid) -> Result<RegionSet, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|_| PipelineError::FileNotFound(path.display().to_string()))?;
    let regions = if path.extension().is_some_and(|e| e == "geojson") {
        regions_from_geojson(&text, grid)?
    } else {
        regions_from_json(&text)?
    };
    regions.validate_against(grid)?;
    Ok(regions)
}

fn build_weights(
    config: &PipelineConfig,
    grid: &RasterGrid,
    regions: &RegionSet,
) -> Result<WeightMatrix, PipelineError> {
    let w = match config.weights_rule {
        WeightsRule::Edge => contiguity_weights(regions, ContiguityRule::Edge),
        WeightsRule::EdgeOrCorner => contiguity_weights(regions, ContiguityRule::EdgeOrCorner),
        WeightsRule::InverseDistance => {
            let centroids = regions.centroids(grid);
            inverse_distance_weights(&centroids, config.gamma, config.distance_cutoff)?
        }
    };
    Ok(if config.standardize {
        row_standardize(&w)
    } else {
        w
    })
}

fn write_json(out_dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn write_text(out_dir: &Path, name: &str, text: &str) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

struct AnalysisInputs {
    grid: RasterGrid,
    regions: RegionSet,
    x: Vec<f64>,
    weights: WeightMatrix,
}

fn load_analysis_inputs(config: &PipelineConfig) -> Result<AnalysisInputs, PipelineError> {
    let light = config.require(&config.light_raster, "light_raster")?;
    let regions_path = config.require(&config.regions, "regions")?;
    let grid = read_ascii_grid(&light, GridKind::Continuous)?;
    let regions = load_regions_for_grid(&regions_path, &grid)?;
    let x = region_aggregate(&grid, &regions, config.aggregator)?;
    let weights = build_weights(config, &grid, &regions)?;
    Ok(AnalysisInputs {
        grid,
        regions,
        x,
        weights,
    })
}

/// Interpretation of the global test in plain words: random when the
/// p-value exceeds alpha, otherwise clustered or dispersed by the sign of
/// the z-score.
fn interpret_global(p: f64, z: f64, alpha: f64) -> &'static str {
    if p > alpha {
        "random"
    } else if z >= 0.0 {
        "clustered"
    } else {
        "dispersed"
    }
}

pub fn run_moran(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let inputs = load_analysis_inputs(config)?;
    let result = global_morans_i(&inputs.x, &inputs.weights, &config.significance())?;
    // Out-of-range I is possible for some weight structures; warn, never fail.
    let mut warnings: Vec<String> = Vec::new();
    if result.i.abs() > 1.0 + 1e-12 {
        warnings.push(format!(
            "Moran's I = {} lies outside [-1, 1]; the weight structure induces this slack",
            result.i
        ));
    }
    let report = json!({
        "provenance": config.provenance(),
        "n": inputs.regions.len(),
        "s0": inputs.weights.s0(),
        "i": result.i,
        "z_score": result.z_score,
        "p_value": result.p_value,
        "method": result.method,
        "n_permutations": result.n_permutations,
        "alpha": config.alpha,
        "interpretation": interpret_global(result.p_value, result.z_score, config.alpha),
        "warnings": warnings,
    });
    let mut written = vec![write_json(out_dir, "moran.json", &report)?];

    let features: Vec<_> = inputs
        .regions
        .regions()
        .iter()
        .zip(&inputs.x)
        .map(|(region, &value)| {
            region_feature(&inputs.grid, region, json!({"id": region.id(), "value": value}))
        })
        .collect();
    written.push(write_json(out_dir, "moran.geojson", &feature_collection(features))?);
    Ok(written)
}

pub fn run_lisa(
    config: &PipelineConfig,
    out_dir: &Path,
    force: bool,
) -> Result<Vec<PathBuf>, PipelineError> {
    let inputs = load_analysis_inputs(config)?;
    let sig = config.significance();
    let global = global_morans_i(&inputs.x, &inputs.weights, &sig)?;
    if global.p_value > config.alpha && !force {
        return Err(PipelineError::Gated(format!(
            "global Moran's I p-value {:.4} exceeds alpha {}; no clustering or dispersion to localize (use --force to override)",
            global.p_value, config.alpha
        )));
    }
    let lisa = local_morans_i(&inputs.x, &inputs.weights, &sig)?;
    let records: Vec<_> = lisa
        .iter()
        .map(|r| {
            json!({
                "id": inputs.regions.regions()[r.region].id(),
                "z_i": r.z_i,
                "lisa": r.lisa,
                "i_local": r.i_local,
                "p_value": r.p_value,
                "cluster": r.cluster,
            })
        })
        .collect();
    let report = json!({
        "provenance": config.provenance(),
        "global": {"i": global.i, "p_value": global.p_value, "z_score": global.z_score},
        "alpha": config.alpha,
        "regions": records,
    });
    let mut written = vec![write_json(out_dir, "lisa.json", &report)?];

    let features: Vec<_> = inputs
        .regions
        .regions()
        .iter()
        .zip(&lisa)
        .map(|(region, r)| {
            region_feature(
                &inputs.grid,
                region,
                json!({
                    "id": region.id(),
                    "i_local": r.i_local,
                    "p_value": r.p_value,
                    "cluster": r.cluster,
                }),
            )
        })
        .collect();
    written.push(write_json(out_dir, "lisa.geojson", &feature_collection(features))?);
    Ok(written)
}

pub fn run_gistar(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let inputs = load_analysis_inputs(config)?;
    let gi = getis_ord_gi_star(&inputs.x, &inputs.weights, &config.significance())?;
    let records: Vec<_> = gi
        .iter()
        .map(|r| {
            json!({
                "id": inputs.regions.regions()[r.region].id(),
                "g_star": r.g_star,
                "p_value": r.p_value,
                "hotspot": r.hotspot,
            })
        })
        .collect();
    let report = json!({
        "provenance": config.provenance(),
        "alpha": config.alpha,
        "regions": records,
    });
    let mut written = vec![write_json(out_dir, "gistar.json", &report)?];

    let features: Vec<_> = inputs
        .regions
        .regions()
        .iter()
        .zip(&gi)
        .map(|(region, r)| {
            region_feature(
                &inputs.grid,
                region,
                json!({
                    "id": region.id(),
                    "g_star": r.g_star,
                    "p_value": r.p_value,
                    "hotspot": r.hotspot,
                }),
            )
        })
        .collect();
    written.push(write_json(out_dir, "gistar.geojson", &feature_collection(features))?);
    Ok(written)
}

/// Selection result with provenance, shared by select-regions and sample.
struct Selection {
    inputs: AnalysisInputs,
    selected: std::collections::BTreeSet<usize>,
    clusters: Vec<crate::autocorr::ClusterLabel>,
    lisa: Vec<crate::autocorr::LisaResult>,
    gi: Vec<crate::autocorr::GiStarResult>,
}

fn compute_selection(config: &PipelineConfig) -> Result<Selection, PipelineError> {
    let inputs = load_analysis_inputs(config)?;
    let sig = config.significance();
    let lisa = local_morans_i(&inputs.x, &inputs.weights, &sig)?;
    let gi = getis_ord_gi_star(&inputs.x, &inputs.weights, &sig)?;
    let clusters = classify_clusters(&lisa, config.alpha);
    let selected = select_sampling_regions(&clusters, &gi)?;
    Ok(Selection {
        inputs,
        selected,
        clusters,
        lisa,
        gi,
    })
}

pub fn run_select_regions(
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    let selection = compute_selection(config)?;
    let regions = selection.inputs.regions.regions();
    let features: Vec<_> = selection
        .selected
        .iter()
        .map(|&i| {
            region_feature(
                &selection.inputs.grid,
                &regions[i],
                json!({
                    "id": regions[i].id(),
                    "cluster": selection.clusters[i],
                    "hotspot": selection.gi[i].hotspot,
                    "lisa_p": selection.lisa[i].p_value,
                    "gi_p": selection.gi[i].p_value,
                }),
            )
        })
        .collect();
    let ids: Vec<&str> = selection.selected.iter().map(|&i| regions[i].id()).collect();
    let report = json!({
        "provenance": config.provenance(),
        "selected": ids,
        "n_selected": ids.len(),
    });
    Ok(vec![
        write_json(out_dir, "selected_regions.json", &report)?,
        write_json(
            out_dir,
            "selected_regions.geojson",
            &feature_collection(features),
        )?,
    ])
}

pub fn run_sample(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let landcover_path = config.require(&config.landcover_raster, "landcover_raster")?;
    let selection = compute_selection(config)?;
    let landcover = read_ascii_grid(&landcover_path, GridKind::Categorical)?;
    selection.inputs.regions.validate_against(&landcover)?;

    let spec = SamplingSpec {
        total: config.total_samples,
        unit_rows: config.unit_rows,
        unit_cols: config.unit_cols,
        clamp: config.clamp,
        seed: config.seed,
    };
    let (plan, points) = sample_regions(
        &landcover,
        &selection.inputs.regions,
        &selection.selected,
        &spec,
    )?;

    let mut plan_doc = serde_json::to_value(&plan).expect("plan serializes");
    plan_doc["provenance"] = config.provenance();
    let mut written = vec![write_json(out_dir, "allocation.json", &plan_doc)?];

    let features: Vec<_> = points.iter().map(|p| point_feature(&landcover, p)).collect();
    written.push(write_json(
        out_dir,
        "sample_points.geojson",
        &feature_collection(features),
    )?);
    Ok(written)
}

fn load_taxonomy(config: &PipelineConfig) -> Result<LabelTree, PipelineError> {
    match &config.taxonomy {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|_| PipelineError::FileNotFound(path.display().to_string()))?;
            Ok(LabelTree::from_json(&text)?)
        }
        None => Ok(LabelTree::base()),
    }
}

fn build_matcher(
    config: &PipelineConfig,
    out_dir: &Path,
) -> Result<Box<dyn SemanticMatcher>, PipelineError> {
    match config.matcher {
        MatcherChoice::Dictionary => Ok(Box::new(DictionaryMatcher::with_default_groups())),
        MatcherChoice::Remote => {
            let endpoint = config
                .endpoint
                .clone()
                .ok_or_else(|| PipelineError::Input("remote matcher needs an endpoint".into()))?;
            fs::create_dir_all(out_dir)?;
            Ok(Box::new(
                RemoteMatcher::new(endpoint, std::time::Duration::from_millis(config.timeout_ms))
                    .with_transcript(out_dir.join("matcher_transcript.jsonl")),
            ))
        }
    }
}

fn write_taxonomy_version(
    tree: &LabelTree,
    out_dir: &Path,
) -> Result<PathBuf, PipelineError> {
    write_text(
        out_dir,
        &format!("taxonomy.v{}.json", tree.version()),
        &format!("{}\n", tree.to_json()),
    )
}

pub enum TaxonomyAction {
    Add { name: String, description: String },
    Merge,
    Map,
    Export,
}

pub fn run_taxonomy(
    config: &PipelineConfig,
    out_dir: &Path,
    action: TaxonomyAction,
) -> Result<Vec<PathBuf>, PipelineError> {
    let mut tree = load_taxonomy(config)?;
    tree.validate()?;
    match action {
        TaxonomyAction::Add { name, description } => {
            let matcher = build_matcher(config, out_dir)?;
            let placement =
                tree.include_novel_label(&name, &description, matcher.as_ref(), &MatcherThresholds::default())?;
            tree.validate()?;
            let report = json!({
                "provenance": config.provenance(),
                "added": name,
                "node": placement.node,
                "parent": placement.parent,
                "parent_name": placement.parent_name,
                "level": placement.level,
            });
            Ok(vec![
                write_taxonomy_version(&tree, out_dir)?,
                write_json(out_dir, "taxonomy_add.json", &report)?,
            ])
        }
        TaxonomyAction::Merge => {
            let matcher = build_matcher(config, out_dir)?;
            let report = tree.consolidate_duplicates(matcher.as_ref())?;
            tree.validate()?;
            let mut doc = serde_json::to_value(&report).expect("report serializes");
            doc["provenance"] = config.provenance();
            Ok(vec![
                write_taxonomy_version(&tree, out_dir)?,
                write_json(out_dir, "merge_report.json", &doc)?,
            ])
        }
        TaxonomyAction::Map => {
            let counts_path = config.require(&config.label_counts, "label_counts")?;
            let text = fs::read_to_string(&counts_path)
                .map_err(|_| PipelineError::FileNotFound(counts_path.display().to_string()))?;
            let counts = ingest_label_counts(&text)?;
            let outcome = tree.map_labels(&counts);
            tree.validate()?;
            let report = json!({
                "provenance": config.provenance(),
                "accepted_total": outcome.accepted_total,
                "rejects": outcome.rejects,
                "subtree_level_counts": outcome
                    .subtree
                    .level_counts()
                    .into_iter()
                    .map(|(level, count)| (level.to_string(), count))
                    .collect::<BTreeMap<String, usize>>(),
            });
            let mut subtree_doc = serde_json::to_value(&outcome.subtree).expect("subtree serializes");
            subtree_doc["provenance"] = config.provenance();
            Ok(vec![
                write_taxonomy_version(&tree, out_dir)?,
                write_json(out_dir, "mapped_subtree.json", &subtree_doc)?,
                write_json(out_dir, "mapping_report.json", &report)?,
            ])
        }
        TaxonomyAction::Export => {
            let doc = json!({
                "provenance": config.provenance(),
                "level_counts": tree
                    .level_counts()
                    .into_iter()
                    .map(|(level, count)| (level.to_string(), count))
                    .collect::<BTreeMap<String, usize>>(),
                "tree": serde_json::to_value(&tree).expect("tree serializes"),
            });
            Ok(vec![write_json(out_dir, "taxonomy_export.json", &doc)?])
        }
    }
}

pub fn run_eval(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let truth_path = config.require(&config.truth, "truth")?;
    let run_path = config.require(&config.run, "run")?;
    let tree = load_taxonomy(config)?;

    let truth_text = fs::read_to_string(&truth_path)
        .map_err(|_| PipelineError::FileNotFound(truth_path.display().to_string()))?;
    let (truth, label_rejects) = truth_from_names(&truth_text, &tree, config.level)?;

    let run_text = fs::read_to_string(&run_path)
        .map_err(|_| PipelineError::FileNotFound(run_path.display().to_string()))?;
    let run = RankedRun::parse(&run_text, config.direction)?;

    let report = evaluate(&run, &truth, &config.cutoffs).map_err(|err| match err {
        crate::eval::EvalError::UnknownItems(items) => {
            let shown: Vec<&String> = items.iter().take(10).collect();
            let suffix = if items.len() > 10 {
                format!(" (+{} more)", items.len() - 10)
            } else {
                String::new()
            };
            PipelineError::Input(format!(
                "run references items missing from the ground truth: {}{}",
                shown.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "),
                suffix
            ))
        }
        other => PipelineError::input(other),
    })?;

    let mut doc = serde_json::to_value(&report).expect("report serializes");
    doc["provenance"] = config.provenance();
    doc["level"] = json!(config.level);
    doc["label_rejects"] = json!(label_rejects);
    Ok(vec![
        write_json(out_dir, "eval.json", &doc)?,
        write_text(out_dir, "eval.txt", &report.format_table())?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_parses_and_hashes() {
        let config = PipelineConfig::default();
        assert_eq!(config.permutations, 999);
        assert_eq!(config.alpha, 0.05);
        assert_eq!(config.cutoffs, vec![5, 10, 20, 50, 100]);
        assert_eq!(config.hash().len(), 64);
        // Hash is stable for identical configs.
        assert_eq!(config.hash(), PipelineConfig::default().hash());
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let err = serde_json::from_str::<PipelineConfig>(r#"{"no_such_key": 1}"#);
        assert!(err.is_err());
    }

    #[test]
    fn missing_path_is_reported_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let config_path = dir.path().join("config.json");
        fs::write(&config_path, r#"{"light_raster": "missing.asc"}"#).unwrap();
        let err = PipelineConfig::load(&config_path).unwrap_err();
        assert!(matches!(err, PipelineError::FileNotFound(_)));
    }

    #[test]
    fn interpretation_follows_signs() {
        assert_eq!(interpret_global(0.30, 2.0, 0.05), "random");
        assert_eq!(interpret_global(0.01, 2.0, 0.05), "clustered");
        assert_eq!(interpret_global(0.01, -2.0, 0.05), "dispersed");
    }
}
