//! Sparse spatial weight matrices.
//!
//! Two constructions: binary contiguity (regions are neighbours when any
//! of their cells touch by edge, or by edge-or-corner) and inverse
//! distance between region centroids, `w_ij = d(i,j)^-gamma`. Diagonal
//! entries are never stored; the Gi* statistic injects its own
//! self-weight view.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::grid::RegionSet;

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("zero distance between centroids {i} and {j}")]
    ZeroDistance { i: usize, j: usize },
    #[error("gamma must be positive, got {0}")]
    GammaNotPositive(f64),
    #[error("bad weights document: {0}")]
    BadDocument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Standardization {
    None,
    Row,
}

impl std::fmt::Display for Standardization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Standardization::None => write!(f, "none"),
            Standardization::Row => write!(f, "row"),
        }
    }
}

/// Sparse weights over `n` regions, entries sorted row-major, no diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    standardization: Standardization,
}

impl WeightMatrix {
    pub fn from_entries(
        n: usize,
        mut entries: Vec<(usize, usize, f64)>,
        standardization: Standardization,
    ) -> Self {
        entries.retain(|&(i, j, w)| i != j && w != 0.0 && i < n && j < n);
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        entries.dedup_by_key(|&mut (i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        WeightMatrix {
            n,
            entries,
            row_ptr,
            standardization,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// Entries of row `i`.
    pub fn row(&self, i: usize) -> &[(usize, usize, f64)] {
        &self.entries[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Sum of all weights (the global normalizer of Moran's I).
    pub fn s0(&self) -> f64 {
        self.entries.iter().map(|&(_, _, w)| w).sum()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().map(|&(_, _, w)| w).sum()
    }

    /// Serialize as CSV: one `# n=.. standardization=..` header line, then
    /// `i,j,w` rows in row-major order.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# n={} standardization={}\n", self.n, self.standardization);
        for &(i, j, w) in &self.entries {
            out.push_str(&format!("{i},{j},{w}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, WeightsError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| WeightsError::BadDocument("empty document".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| WeightsError::BadDocument("missing # header line".into()))?;
        let mut n = None;
        let mut standardization = Standardization::None;
        for field in header.split_whitespace() {
            if let Some(v) = field.strip_prefix("n=") {
                n = Some(v.parse::<usize>().map_err(|_| {
                    WeightsError::BadDocument(format!("bad n value {v:?}"))
                })?);
            } else if let Some(v) = field.strip_prefix("standardization=") {
                standardization = match v {
                    "none" => Standardization::None,
                    "row" => Standardization::Row,
                    other => {
                        return Err(WeightsError::BadDocument(format!(
                            "unknown standardization {other:?}"
                        )))
                    }
                };
            }
        }
        let n = n.ok_or_else(|| WeightsError::BadDocument("header lacks n=".into()))?;
        let mut entries = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != 3 {
                return Err(WeightsError::BadDocument(format!(
                    "line {}: expected i,j,w",
                    idx + 2
                )));
            }
            let parse = |s: &str| -> Result<f64, WeightsError> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| WeightsError::BadDocument(format!("line {}: bad number {s:?}", idx + 2)))
            };
            entries.push((parse(parts[0])? as usize, parse(parts[1])? as usize, parse(parts[2])?));
        }
        Ok(WeightMatrix::from_entries(n, entries, standardization))
    }
}

/// Cell adjacency used for region contiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContiguityRule {
    /// 4-adjacency (shared edge).
    Edge,
    /// 8-adjacency (shared edge or corner).
    EdgeOrCorner,
}

/// Binary contiguity: `w_ij = 1` iff some cell of region `i` is adjacent
/// to some cell of region `j`. Isolated regions keep empty rows.
pub fn contiguity_weights(regions: &RegionSet, rule: ContiguityRule) -> WeightMatrix {
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for (idx, region) in regions.regions().iter().enumerate() {
        for &cell in region.cells() {
            owner.insert(cell, idx);
        }
    }
    let offsets: &[(isize, isize)] = match rule {
        ContiguityRule::Edge => &[(0, 1), (1, 0)],
        ContiguityRule::EdgeOrCorner => &[(0, 1), (1, 0), (1, 1), (1, -1)],
    };
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    for (&(r, c), &idx) in &owner {
        for &(dr, dc) in offsets {
            let nr = r as isize + dr;
            let nc = c as isize + dc;
            if nr < 0 || nc < 0 {
                continue;
            }
            if let Some(&other) = owner.get(&(nr as usize, nc as usize)) {
                if other != idx {
                    pairs.insert((idx.min(other), idx.max(other)));
                }
            }
        }
    }
    let mut entries = Vec::with_capacity(pairs.len() * 2);
    for (i, j) in pairs {
        entries.push((i, j, 1.0));
        entries.push((j, i, 1.0));
    }
    WeightMatrix::from_entries(regions.len(), entries, Standardization::None)
}

/// Inverse-distance weights between centroids: `w_ij = d^-gamma` for
/// `d <= cutoff` (all pairs when no cutoff).
pub fn inverse_distance_weights(
    centroids: &[(f64, f64)],
    gamma: f64,
    cutoff: Option<f64>,
) -> Result<WeightMatrix, WeightsError> {
    if gamma <= 0.0 || gamma.is_nan() {
        return Err(WeightsError::GammaNotPositive(gamma));
    }
    let n = centroids.len();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = centroids[i].0 - centroids[j].0;
            let dy = centroids[i].1 - centroids[j].1;
            let d = (dx * dx + dy * dy).sqrt();
            if d == 0.0 {
                return Err(WeightsError::ZeroDistance { i, j });
            }
            if let Some(cut) = cutoff {
                if d > cut {
                    continue;
                }
            }
            let w = d.powf(-gamma);
            entries.push((i, j, w));
            entries.push((j, i, w));
        }
    }
    Ok(WeightMatrix::from_entries(n, entries, Standardization::None))
}

/// Scale each non-empty row to sum 1. Idempotent; preserves the sparsity
/// pattern. Already-standardized input is the fixed point and returns
/// unchanged.
pub fn row_standardize(w: &WeightMatrix) -> WeightMatrix {
    if w.standardization == Standardization::Row {
        return w.clone();
    }
    let mut entries = Vec::with_capacity(w.entries.len());
    for i in 0..w.n {
        let total = w.row_sum(i);
        if total == 0.0 {
            continue;
        }
        for &(_, j, v) in w.row(i) {
            entries.push((i, j, v / total));
        }
    }
    WeightMatrix::from_entries(w.n, entries, Standardization::Row)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Region;

    fn four_singletons() -> RegionSet {
        // 2x2 grid of 1-cell regions:  a b
        //                              c d
        RegionSet::new(
            vec![
                Region::new("a", vec![(0, 0)]).unwrap(),
                Region::new("b", vec![(0, 1)]).unwrap(),
                Region::new("c", vec![(1, 0)]).unwrap(),
                Region::new("d", vec![(1, 1)]).unwrap(),
            ],
            "test",
        )
        .unwrap()
    }

    #[test]
    fn rook_contiguity_on_four_cells() {
        let w = contiguity_weights(&four_singletons(), ContiguityRule::Edge);
        assert_eq!(w.s0(), 8.0);
        for i in 0..4 {
            assert_eq!(w.row(i).len(), 2, "region {i} should have two neighbours");
        }
    }

    #[test]
    fn queen_contiguity_on_four_cells() {
        let w = contiguity_weights(&four_singletons(), ContiguityRule::EdgeOrCorner);
        assert_eq!(w.s0(), 12.0);
        for i in 0..4 {
            assert_eq!(w.row(i).len(), 3);
        }
    }

    #[test]
    fn single_region_has_no_pairs() {
        let regions = RegionSet::new(
            vec![Region::new("only", vec![(0, 0), (0, 1)]).unwrap()],
            "test",
        )
        .unwrap();
        let w = contiguity_weights(&regions, ContiguityRule::Edge);
        assert!(w.entries().is_empty());
        assert_eq!(w.s0(), 0.0);
    }

    #[test]
    fn inverse_distance_values() {
        let w = inverse_distance_weights(&[(0.0, 0.0), (1.0, 0.0)], 2.0, None).unwrap();
        assert_eq!(w.row(0)[0].2, 1.0);
        let w = inverse_distance_weights(&[(0.0, 0.0), (2.0, 0.0)], 1.0, None).unwrap();
        assert_eq!(w.row(0)[0].2, 0.5);
    }

    #[test]
    fn coincident_centroids_error() {
        let err = inverse_distance_weights(&[(1.0, 1.0), (1.0, 1.0)], 1.0, None).unwrap_err();
        assert!(matches!(err, WeightsError::ZeroDistance { i: 0, j: 1 }));
    }

    #[test]
    fn cutoff_drops_far_pairs() {
        let w =
            inverse_distance_weights(&[(0.0, 0.0), (1.0, 0.0), (10.0, 0.0)], 1.0, Some(2.0))
                .unwrap();
        assert_eq!(w.entries().len(), 2); // only the (0,1) pair survives
    }

    #[test]
    fn row_standardize_normalizes_and_is_idempotent() {
        let w = WeightMatrix::from_entries(
            3,
            vec![(0, 1, 1.0), (0, 2, 1.0), (1, 0, 2.0)],
            Standardization::None,
        );
        let std1 = row_standardize(&w);
        assert_eq!(std1.row(0).iter().map(|e| e.2).collect::<Vec<_>>(), vec![0.5, 0.5]);
        assert_eq!(std1.row(1)[0].2, 1.0);
        assert!(std1.row(2).is_empty());
        let std2 = row_standardize(&std1);
        assert_eq!(std1, std2);
    }

    #[test]
    fn csv_round_trip() {
        let w = contiguity_weights(&four_singletons(), ContiguityRule::Edge);
        let csv = w.to_csv();
        let back = WeightMatrix::from_csv(&csv).unwrap();
        assert_eq!(w, back);
    }
}
