//! Multi-label retrieval metrics: ACG, NDCG, MAP, and WMAP at cutoffs.
//!
//! All four scores derive from `C(q, i)`, the number of labels the query
//! shares with the i-th retrieved item:
//!
//! ```text
//! ACG@n  = (1/n) sum_{i<=n} C(q,i)
//! DCG@n  = sum_{i<=n} (2^C(q,i) - 1) / ln(1 + i)        (natural log)
//! NDCG@n = DCG@n / Z_n,  Z_n = best achievable DCG@n over the gallery
//! AP@n   = (1/N_tr@n) sum_{i<=n} Tr(q,i) * N_tr@i / i
//! WMAP   = like AP but with ACG@i in place of N_tr@i / i
//! ```
//!
//! `Tr(q,i) = 1` iff at least one label is shared. The ideal ranking
//! behind `Z_n` is taken over the whole gallery (every ground-truth item
//! except the query itself), not just the retrieved list. Lists shorter
//! than `n` behave as if padded with zero-gain items: ACG still divides
//! by `n` and DCG gains nothing. Queries whose ideal gain is zero score
//! NDCG 0 and are flagged. Ties in run scores order by ascending item id.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("cutoff n must be positive")]
    ZeroCutoff,
    #[error("item {0:?} has no labels")]
    EmptyLabels(String),
    #[error("query {0:?} is not in the ground truth")]
    UnknownQuery(String),
    #[error("run references items missing from the ground truth: {}", .0.join(", "))]
    UnknownItems(Vec<String>),
    #[error("duplicate item {item:?} in the ranked list of query {query:?}")]
    DuplicateItem { query: String, item: String },
    #[error("query {0:?} retrieves itself; the gallery excludes the query, so self-retrieval is invalid")]
    SelfRetrieval(String),
    #[error("bad run line {line}: {msg}")]
    BadRunLine { line: usize, msg: String },
    #[error("bad ground-truth document: {0}")]
    BadDocument(String),
}

/// Item label sets at one evaluation level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub level: u8,
    items: BTreeMap<String, BTreeSet<u32>>,
}

impl GroundTruth {
    pub fn new(items: BTreeMap<String, BTreeSet<u32>>, level: u8) -> Result<Self, EvalError> {
        for (id, labels) in &items {
            if labels.is_empty() {
                return Err(EvalError::EmptyLabels(id.clone()));
            }
        }
        Ok(GroundTruth { level, items })
    }

    pub fn labels(&self, item: &str) -> Option<&BTreeSet<u32>> {
        self.items.get(item)
    }

    pub fn contains(&self, item: &str) -> bool {
        self.items.contains_key(item)
    }

    pub fn items(&self) -> impl Iterator<Item = (&String, &BTreeSet<u32>)> {
        self.items.iter()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ImageToText,
    TextToImage,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedEntry {
    pub item: String,
    pub rank: usize,
    pub score: f64,
}

/// Ranked retrieval output, one ordered list per query.
#[derive(Debug, Clone, Serialize)]
pub struct RankedRun {
    pub direction: Direction,
    queries: BTreeMap<String, Vec<RankedEntry>>,
}

impl RankedRun {
    /// Build from raw `(query, item, score)` triples. Entries order by
    /// score descending, ties by ascending item id; ranks are 1-based.
    pub fn from_triples(
        direction: Direction,
        triples: Vec<(String, String, f64)>,
    ) -> Result<Self, EvalError> {
        let mut queries: BTreeMap<String, Vec<RankedEntry>> = BTreeMap::new();
        for (query, item, score) in triples {
            if item == query {
                return Err(EvalError::SelfRetrieval(query));
            }
            queries.entry(query).or_default().push(RankedEntry {
                item,
                rank: 0,
                score,
            });
        }
        for (query, list) in &mut queries {
            list.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then_with(|| a.item.cmp(&b.item))
            });
            let mut seen = BTreeSet::new();
            for (idx, entry) in list.iter_mut().enumerate() {
                if !seen.insert(entry.item.clone()) {
                    return Err(EvalError::DuplicateItem {
                        query: query.clone(),
                        item: entry.item.clone(),
                    });
                }
                entry.rank = idx + 1;
            }
        }
        Ok(RankedRun { direction, queries })
    }

    /// Parse the TREC-style run format: whitespace-separated
    /// `query_id item_id rank score`, one line per retrieved item. The
    /// rank column is informative only; ordering is rebuilt from scores
    /// with the documented tie rule.
    pub fn parse(text: &str, direction: Direction) -> Result<Self, EvalError> {
        let mut triples = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(EvalError::BadRunLine {
                    line: idx + 1,
                    msg: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let score: f64 = fields[3].parse().map_err(|_| EvalError::BadRunLine {
                line: idx + 1,
                msg: format!("bad score {:?}", fields[3]),
            })?;
            fields[2].parse::<usize>().map_err(|_| EvalError::BadRunLine {
                line: idx + 1,
                msg: format!("bad rank {:?}", fields[2]),
            })?;
            triples.push((fields[0].to_string(), fields[1].to_string(), score));
        }
        Self::from_triples(direction, triples)
    }

    pub fn queries(&self) -> impl Iterator<Item = (&String, &Vec<RankedEntry>)> {
        self.queries.iter()
    }

    pub fn ranked_items(&self, query: &str) -> Option<Vec<String>> {
        self.queries
            .get(query)
            .map(|list| list.iter().map(|e| e.item.clone()).collect())
    }
}

/// Number of labels two items share.
pub fn shared_labels(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> usize {
    a.intersection(b).count()
}

fn c_vector(truth: &GroundTruth, query: &str, ranked: &[String]) -> Result<Vec<usize>, EvalError> {
    let q = truth
        .labels(query)
        .ok_or_else(|| EvalError::UnknownQuery(query.to_string()))?;
    let missing: Vec<String> = ranked
        .iter()
        .filter(|item| !truth.contains(item))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(EvalError::UnknownItems(missing));
    }
    Ok(ranked
        .iter()
        .map(|item| shared_labels(q, truth.labels(item).expect("checked above")))
        .collect())
}

fn gain(c: usize) -> f64 {
    2.0f64.powi(c as i32) - 1.0
}

fn dcg(c: &[usize], n: usize) -> f64 {
    c.iter()
        .take(n)
        .enumerate()
        .map(|(idx, &ci)| gain(ci) / ((idx as f64 + 2.0).ln()))
        .sum()
}

fn acg_from_c(c: &[usize], n: usize) -> f64 {
    c.iter().take(n).map(|&ci| ci as f64).sum::<f64>() / n as f64
}

fn ap_from_c(c: &[usize], n: usize) -> f64 {
    let mut relevant = 0usize;
    let mut sum = 0.0;
    for (idx, &ci) in c.iter().take(n).enumerate() {
        if ci >= 1 {
            relevant += 1;
            sum += relevant as f64 / (idx + 1) as f64;
        }
    }
    if relevant == 0 {
        0.0
    } else {
        sum / relevant as f64
    }
}

fn wmap_from_c(c: &[usize], n: usize) -> f64 {
    let mut relevant = 0usize;
    let mut sum = 0.0;
    for (idx, &ci) in c.iter().take(n).enumerate() {
        if ci >= 1 {
            relevant += 1;
            sum += acg_from_c(c, idx + 1);
        }
    }
    if relevant == 0 {
        0.0
    } else {
        sum / relevant as f64
    }
}

/// Best achievable DCG@n: the whole gallery (minus the query itself)
/// ranked by shared-label count descending.
fn ideal_dcg(truth: &GroundTruth, query: &str, n: usize) -> Result<f64, EvalError> {
    let q = truth
        .labels(query)
        .ok_or_else(|| EvalError::UnknownQuery(query.to_string()))?;
    let mut c: Vec<usize> = truth
        .items()
        .filter(|(id, _)| id.as_str() != query)
        .map(|(_, labels)| shared_labels(q, labels))
        .collect();
    c.sort_unstable_by(|a, b| b.cmp(a));
    Ok(dcg(&c, n))
}

/// Mean shared-label count over the top n retrieved items.
pub fn acg_at_n(
    truth: &GroundTruth,
    query: &str,
    ranked: &[String],
    n: usize,
) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    Ok(acg_from_c(&c_vector(truth, query, ranked)?, n))
}

/// NDCG in `[0, 1]`; the boolean flags a query whose ideal gain is zero.
pub fn ndcg_at_n(
    truth: &GroundTruth,
    query: &str,
    ranked: &[String],
    n: usize,
) -> Result<(f64, bool), EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let c = c_vector(truth, query, ranked)?;
    let z = ideal_dcg(truth, query, n)?;
    if z == 0.0 {
        return Ok((0.0, true));
    }
    Ok((dcg(&c, n) / z, false))
}

/// Average precision for one query's ranked list.
pub fn ap_at_n(
    truth: &GroundTruth,
    query: &str,
    ranked: &[String],
    n: usize,
) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    Ok(ap_from_c(&c_vector(truth, query, ranked)?, n))
}

/// ACG-weighted average precision for one query's ranked list.
pub fn wmap_query_at_n(
    truth: &GroundTruth,
    query: &str,
    ranked: &[String],
    n: usize,
) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    Ok(wmap_from_c(&c_vector(truth, query, ranked)?, n))
}

/// Mean average precision over every query in the run.
pub fn map_at_n(run: &RankedRun, truth: &GroundTruth, n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (query, list) in run.queries() {
        let ranked: Vec<String> = list.iter().map(|e| e.item.clone()).collect();
        total += ap_at_n(truth, query, &ranked, n)?;
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

/// Mean WMAP over every query in the run.
pub fn wmap_at_n(run: &RankedRun, truth: &GroundTruth, n: usize) -> Result<f64, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (query, list) in run.queries() {
        let ranked: Vec<String> = list.iter().map(|e| e.item.clone()).collect();
        total += wmap_query_at_n(truth, query, &ranked, n)?;
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { total / count as f64 })
}

pub const METRIC_NAMES: [&str; 4] = ["ACG", "NDCG", "MAP", "WMAP"];

/// All four metrics at every cutoff: per-query values plus means.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub cutoffs: Vec<usize>,
    /// metric -> cutoff -> mean over queries.
    pub means: BTreeMap<String, BTreeMap<usize, f64>>,
    /// query -> metric -> cutoff -> value.
    pub per_query: BTreeMap<String, BTreeMap<String, BTreeMap<usize, f64>>>,
    /// Queries whose ideal DCG was zero at some cutoff.
    pub flagged_queries: BTreeSet<String>,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    /// Aligned plain-text table: one row per metric/cutoff matrix cell.
    pub fn format_table(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "{:<8}", "metric");
        for n in &self.cutoffs {
            let _ = write!(out, "{:>12}", format!("@{n}"));
        }
        out.push('\n');
        for metric in METRIC_NAMES {
            let _ = write!(out, "{metric:<8}");
            for n in &self.cutoffs {
                let v = self.means[metric][n];
                let _ = write!(out, "{v:>12.4}");
            }
            out.push('\n');
        }
        out
    }
}

/// Score a run against ground truth at every cutoff.
pub fn evaluate(
    run: &RankedRun,
    truth: &GroundTruth,
    cutoffs: &[usize],
) -> Result<MetricsReport, EvalError> {
    if cutoffs.is_empty() || cutoffs.contains(&0) {
        return Err(EvalError::ZeroCutoff);
    }
    let mut report = MetricsReport {
        cutoffs: cutoffs.to_vec(),
        means: BTreeMap::new(),
        per_query: BTreeMap::new(),
        flagged_queries: BTreeSet::new(),
        warnings: Vec::new(),
    };

    for (query, list) in run.queries() {
        let ranked: Vec<String> = list.iter().map(|e| e.item.clone()).collect();
        if ranked.is_empty() {
            report
                .warnings
                .push(format!("query {query:?} has an empty ranked list; scored 0"));
        }
        let c = c_vector(truth, query, &ranked)?;
        let entry = report.per_query.entry(query.clone()).or_default();
        for &n in cutoffs {
            let (ndcg, flagged) = if ranked.is_empty() {
                (0.0, ideal_dcg(truth, query, n)? == 0.0)
            } else {
                let z = ideal_dcg(truth, query, n)?;
                if z == 0.0 {
                    (0.0, true)
                } else {
                    (dcg(&c, n) / z, false)
                }
            };
            if flagged {
                report.flagged_queries.insert(query.clone());
            }
            entry.entry("ACG".into()).or_default().insert(n, acg_from_c(&c, n));
            entry.entry("NDCG".into()).or_default().insert(n, ndcg);
            entry.entry("MAP".into()).or_default().insert(n, ap_from_c(&c, n));
            entry.entry("WMAP".into()).or_default().insert(n, wmap_from_c(&c, n));
        }
    }

    let query_count = report.per_query.len().max(1);
    for metric in METRIC_NAMES {
        let slot = report.means.entry(metric.to_string()).or_default();
        for &n in cutoffs {
            let total: f64 = report
                .per_query
                .values()
                .map(|metrics| metrics[metric][&n])
                .sum();
            slot.insert(n, total / query_count as f64);
        }
    }
    Ok(report)
}

/// Parse the ground-truth JSON (`{"item": ["label name", ...], ...}`),
/// resolving label names through the taxonomy at the requested level.
pub fn truth_from_names(
    doc: &str,
    tree: &crate::taxonomy::LabelTree,
    level: u8,
) -> Result<(GroundTruth, Vec<String>), EvalError> {
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(doc).map_err(|e| EvalError::BadDocument(e.to_string()))?;
    let mut items = BTreeMap::new();
    let mut rejects = Vec::new();
    for (item, names) in raw {
        let mut ids = BTreeSet::new();
        for name in names {
            match tree.find_name(&name) {
                Some(id) => {
                    ids.insert(id);
                }
                None => rejects.push(format!("{item}: {name}")),
            }
        }
        let lifted = tree.ancestor_closure(&ids, level);
        if lifted.is_empty() {
            return Err(EvalError::EmptyLabels(item));
        }
        items.insert(item, lifted);
    }
    Ok((GroundTruth::new(items, level)?, rejects))
}
