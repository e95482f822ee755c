//! Global and local spatial autocorrelation statistics.
//!
//! Global Moran's I over region values `x` with sparse weights `W`:
//!
//! ```text
//! I = (n / S0) * sum_ij w_ij z_i z_j / sum_i z_i^2,   z_i = x_i - mean(x)
//! ```
//!
//! Local Moran's I for region `i` uses the leave-one-out variance
//! `S_i^2 = sum_{j != i} (x_j - mean)^2 / (n - 1)` and the LISA term
//! `sum_{j != i} w_ij z_j`. Getis-Ord Gi* includes the focal region with
//! an injected self-weight of 1.
//!
//! Significance comes either from the analytical normal approximation or
//! from seeded Monte-Carlo permutation (conditional for the local
//! statistics: the focal value stays fixed while neighbour values are
//! drawn from the remaining n-1). Permutation replicates pull their
//! randomness from per-index ChaCha streams, so results do not depend on
//! thread scheduling.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::weights::WeightMatrix;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("zero variance: all values are identical")]
    ZeroVariance,
    #[error("degenerate weights: S0 = 0, no region has a neighbour")]
    DegenerateWeights,
    #[error("need at least {min} regions, got {n}")]
    TooFewRegions { n: usize, min: usize },
    #[error("value vector length {values} does not match weight matrix size {weights}")]
    LengthMismatch { values: usize, weights: usize },
    #[error("degenerate Gi* denominator for region {region}: radicand {radicand} <= 0")]
    DegenerateGiRow { region: usize, radicand: f64 },
    #[error("mismatched region universes: {left} cluster labels vs {right} Gi* results")]
    MismatchedUniverse { left: usize, right: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytical,
    Permutation,
}

/// How p-values are produced, plus the decision threshold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SignificanceSpec {
    pub method: Method,
    pub permutations: usize,
    pub seed: u64,
    pub alpha: f64,
}

impl SignificanceSpec {
    pub fn permutation(permutations: usize, seed: u64, alpha: f64) -> Self {
        SignificanceSpec {
            method: Method::Permutation,
            permutations,
            seed,
            alpha,
        }
    }

    pub fn analytical(alpha: f64) -> Self {
        SignificanceSpec {
            method: Method::Analytical,
            permutations: 0,
            seed: 0,
            alpha,
        }
    }
}

impl Default for SignificanceSpec {
    fn default() -> Self {
        SignificanceSpec::permutation(999, 0, 0.05)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MoranResult {
    pub i: f64,
    pub z_score: f64,
    pub p_value: f64,
    pub method: Method,
    pub n_permutations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterLabel {
    HighHigh,
    LowLow,
    LowHigh,
    HighLow,
    NotSignificant,
}

#[derive(Debug, Clone, Serialize)]
pub struct LisaResult {
    /// Index into the region universe the statistic was computed over.
    pub region: usize,
    /// Deviation of the region value from the global mean.
    pub z_i: f64,
    /// LISA term: weighted sum of neighbour deviations.
    pub lisa: f64,
    pub i_local: f64,
    pub p_value: f64,
    pub cluster: ClusterLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hotspot {
    Hot,
    Cold,
    None,
}

#[derive(Debug, Clone, Serialize)]
pub struct GiStarResult {
    pub region: usize,
    pub g_star: f64,
    pub p_value: f64,
    pub hotspot: Hotspot,
}

fn check_inputs(x: &[f64], w: &WeightMatrix, min_n: usize) -> Result<(), StatsError> {
    if x.len() != w.n() {
        return Err(StatsError::LengthMismatch {
            values: x.len(),
            weights: w.n(),
        });
    }
    if x.len() < min_n {
        return Err(StatsError::TooFewRegions {
            n: x.len(),
            min: min_n,
        });
    }
    Ok(())
}

fn deviations(x: &[f64]) -> Result<(Vec<f64>, f64), StatsError> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let z: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let ssq: f64 = z.iter().map(|v| v * v).sum();
    if ssq == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((z, ssq))
}

fn normal_two_sided(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    (2.0 * (1.0 - n.cdf(z.abs()))).clamp(0.0, 1.0)
}

fn cross_product(entries: &[(usize, usize, f64)], z: &[f64]) -> f64 {
    entries.iter().map(|&(i, j, w)| w * z[i] * z[j]).sum()
}

/// Global Moran's I with analytical or permutation significance.
pub fn global_morans_i(
    x: &[f64],
    w: &WeightMatrix,
    sig: &SignificanceSpec,
) -> Result<MoranResult, StatsError> {
    check_inputs(x, w, 2)?;
    let (z, ssq) = deviations(x)?;
    let s0 = w.s0();
    if s0 == 0.0 {
        return Err(StatsError::DegenerateWeights);
    }
    let n = x.len();
    let scale = n as f64 / (s0 * ssq);
    let observed = scale * cross_product(w.entries(), &z);

    match sig.method {
        Method::Analytical => {
            let (z_score, p_value) = moran_analytical(observed, w, n);
            Ok(MoranResult {
                i: observed,
                z_score,
                p_value,
                method: Method::Analytical,
                n_permutations: 0,
            })
        }
        Method::Permutation => {
            let m = sig.permutations;
            let perms: Vec<f64> = (0..m)
                .into_par_iter()
                .map(|r| {
                    let mut rng = ChaCha8Rng::seed_from_u64(sig.seed);
                    rng.set_stream(r as u64 + 1);
                    let mut idx: Vec<usize> = (0..n).collect();
                    for t in (1..n).rev() {
                        let u = rng.gen_range(0..=t);
                        idx.swap(t, u);
                    }
                    let sum: f64 = w
                        .entries()
                        .iter()
                        .map(|&(i, j, wij)| wij * z[idx[i]] * z[idx[j]])
                        .sum();
                    scale * sum
                })
                .collect();
            let exceed = perms.iter().filter(|p| p.abs() >= observed.abs()).count();
            let p_value = (1 + exceed) as f64 / (1 + m) as f64;
            let mean = perms.iter().sum::<f64>() / m.max(1) as f64;
            let var = perms.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>()
                / (m.saturating_sub(1).max(1)) as f64;
            let z_score = if var > 0.0 {
                (observed - mean) / var.sqrt()
            } else {
                0.0
            };
            Ok(MoranResult {
                i: observed,
                z_score,
                p_value,
                method: Method::Permutation,
                n_permutations: m,
            })
        }
    }
}

/// Moments of I under the normality assumption.
fn moran_analytical(observed: f64, w: &WeightMatrix, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let s0 = w.s0();
    let lookup: HashMap<(usize, usize), f64> = w
        .entries()
        .iter()
        .map(|&(i, j, v)| ((i, j), v))
        .collect();
    let mut s1 = 0.0;
    for &(i, j, v) in w.entries() {
        let back = lookup.get(&(j, i)).copied().unwrap_or(0.0);
        if back != 0.0 && j < i {
            continue; // symmetric pair already counted from the other side
        }
        let pair = v + back;
        s1 += pair * pair;
    }
    let mut row_sums = vec![0.0; n];
    let mut col_sums = vec![0.0; n];
    for &(i, j, v) in w.entries() {
        row_sums[i] += v;
        col_sums[j] += v;
    }
    let s2: f64 = (0..n)
        .map(|i| {
            let t = row_sums[i] + col_sums[i];
            t * t
        })
        .sum();
    let expected = -1.0 / (nf - 1.0);
    let variance = (nf * nf * s1 - nf * s2 + 3.0 * s0 * s0) / ((nf * nf - 1.0) * s0 * s0)
        - expected * expected;
    if variance <= 0.0 {
        return (0.0, 1.0);
    }
    let z = (observed - expected) / variance.sqrt();
    (z, normal_two_sided(z))
}

/// Draw `k` values without replacement from `pool` via a partial
/// Fisher-Yates, apply `f` to the prefix, then undo the swaps.
fn with_sample<R: Rng, F: FnOnce(&[f64]) -> f64>(
    pool: &mut [f64],
    k: usize,
    rng: &mut R,
    swaps: &mut Vec<(usize, usize)>,
    f: F,
) -> f64 {
    swaps.clear();
    let len = pool.len();
    for t in 0..k.min(len) {
        let u = rng.gen_range(t..len);
        pool.swap(t, u);
        swaps.push((t, u));
    }
    let out = f(&pool[..k.min(len)]);
    for &(t, u) in swaps.iter().rev() {
        pool.swap(t, u);
    }
    out
}

/// Local Moran's I per region, cluster labels attached at `sig.alpha`.
pub fn local_morans_i(
    x: &[f64],
    w: &WeightMatrix,
    sig: &SignificanceSpec,
) -> Result<Vec<LisaResult>, StatsError> {
    check_inputs(x, w, 3)?;
    let (z, ssq) = deviations(x)?;
    let n = x.len();

    let results: Vec<LisaResult> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = w.row(i);
            let weights: Vec<f64> = row.iter().map(|&(_, _, v)| v).collect();
            let lisa: f64 = row.iter().map(|&(_, j, v)| v * z[j]).sum();
            // Leave-one-out variance from Eq-style definition: the global
            // mean stays, only region i's own deviation drops out.
            let s_i2 = (ssq - z[i] * z[i]) / (n as f64 - 1.0);
            let i_local = z[i] / s_i2 * lisa;

            let p_value = match sig.method {
                Method::Analytical => lisa_analytical_p(lisa, &weights, &z, i, n),
                Method::Permutation => {
                    let mut pool: Vec<f64> = z
                        .iter()
                        .enumerate()
                        .filter_map(|(j, &v)| (j != i).then_some(v))
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(sig.seed);
                    rng.set_stream(i as u64 + 1);
                    let mut swaps = Vec::with_capacity(weights.len());
                    let mut exceed = 0usize;
                    for _ in 0..sig.permutations {
                        let perm_lisa = with_sample(
                            &mut pool,
                            weights.len(),
                            &mut rng,
                            &mut swaps,
                            |sample| {
                                weights
                                    .iter()
                                    .zip(sample)
                                    .map(|(wv, zv)| wv * zv)
                                    .sum::<f64>()
                            },
                        );
                        if perm_lisa.abs() >= lisa.abs() {
                            exceed += 1;
                        }
                    }
                    (1 + exceed) as f64 / (1 + sig.permutations) as f64
                }
            };

            let cluster = classify_one(z[i], lisa, p_value, sig.alpha);
            LisaResult {
                region: i,
                z_i: z[i],
                lisa,
                i_local,
                p_value,
                cluster,
            }
        })
        .collect();
    Ok(results)
}

/// Conditional-randomization moments for the LISA term: neighbour values
/// are draws without replacement from the remaining n-1 deviations, so
/// E = W_i * m1 and Var = s^2 * (U * (n-1) - W_i^2) / (n-2) with m1 and
/// s^2 the mean and population variance of the remaining deviations.
fn lisa_analytical_p(lisa: f64, weights: &[f64], z: &[f64], i: usize, n: usize) -> f64 {
    if weights.is_empty() || n < 3 {
        return 1.0;
    }
    let wi: f64 = weights.iter().sum();
    let u: f64 = weights.iter().map(|v| v * v).sum();
    let rest_n = (n - 1) as f64;
    let m1 = -z[i] / rest_n; // mean of remaining deviations, since sum z = 0
    let rest_ssq: f64 = z
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v * v)
        .sum();
    let s2 = rest_ssq / rest_n - m1 * m1;
    let variance = s2 * (u * rest_n - wi * wi) / (rest_n - 1.0);
    if variance <= 0.0 {
        return 1.0;
    }
    let z_score = (lisa - wi * m1) / variance.sqrt();
    normal_two_sided(z_score)
}

fn classify_one(z_i: f64, lisa: f64, p: f64, alpha: f64) -> ClusterLabel {
    if p > alpha || z_i == 0.0 || lisa == 0.0 {
        return ClusterLabel::NotSignificant;
    }
    match (z_i > 0.0, lisa > 0.0) {
        (true, true) => ClusterLabel::HighHigh,
        (false, false) => ClusterLabel::LowLow,
        (false, true) => ClusterLabel::LowHigh,
        (true, false) => ClusterLabel::HighLow,
    }
}

/// Re-derive cluster labels from LISA results at a given alpha.
pub fn classify_clusters(lisa: &[LisaResult], alpha: f64) -> Vec<ClusterLabel> {
    lisa.iter()
        .map(|r| classify_one(r.z_i, r.lisa, r.p_value, alpha))
        .collect()
}

/// Getis-Ord Gi* with the focal region included (injected self-weight 1).
pub fn getis_ord_gi_star(
    x: &[f64],
    w: &WeightMatrix,
    sig: &SignificanceSpec,
) -> Result<Vec<GiStarResult>, StatsError> {
    check_inputs(x, w, 2)?;
    let n = x.len();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let s = (x.iter().map(|v| v * v).sum::<f64>() / nf - mean * mean).sqrt();
    if s == 0.0 || s.is_nan() {
        return Err(StatsError::ZeroVariance);
    }

    // Denominators are permutation-invariant, so compute them once and
    // fail fast on degenerate rows before any sampling.
    let mut denominators = Vec::with_capacity(n);
    for i in 0..n {
        let row = w.row(i);
        let w_star: f64 = row.iter().map(|&(_, _, v)| v).sum::<f64>() + 1.0;
        let u_star: f64 = row.iter().map(|&(_, _, v)| v * v).sum::<f64>() + 1.0;
        let radicand = (nf * u_star - w_star * w_star) / (nf - 1.0);
        if radicand <= 0.0 {
            return Err(StatsError::DegenerateGiRow {
                region: i,
                radicand,
            });
        }
        denominators.push((w_star, s * radicand.sqrt()));
    }

    let results: Vec<GiStarResult> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = w.row(i);
            let (w_star, den) = denominators[i];
            let local_sum: f64 = row.iter().map(|&(_, j, v)| v * x[j]).sum::<f64>() + x[i];
            let g_star = (local_sum - mean * w_star) / den;

            let p_value = match sig.method {
                Method::Analytical => one_sided_normal_p(g_star),
                Method::Permutation => {
                    let weights: Vec<f64> = row.iter().map(|&(_, _, v)| v).collect();
                    let mut pool: Vec<f64> = x
                        .iter()
                        .enumerate()
                        .filter_map(|(j, &v)| (j != i).then_some(v))
                        .collect();
                    let mut rng = ChaCha8Rng::seed_from_u64(sig.seed ^ 0x9e37_79b9_7f4a_7c15);
                    rng.set_stream(i as u64 + 1);
                    let mut swaps = Vec::with_capacity(weights.len());
                    let mut exceed = 0usize;
                    for _ in 0..sig.permutations {
                        let perm_g = with_sample(
                            &mut pool,
                            weights.len(),
                            &mut rng,
                            &mut swaps,
                            |sample| {
                                let local: f64 = weights
                                    .iter()
                                    .zip(sample)
                                    .map(|(wv, xv)| wv * xv)
                                    .sum::<f64>()
                                    + x[i];
                                (local - mean * w_star) / den
                            },
                        );
                        let as_extreme = if g_star >= 0.0 {
                            perm_g >= g_star
                        } else {
                            perm_g <= g_star
                        };
                        if as_extreme {
                            exceed += 1;
                        }
                    }
                    (1 + exceed) as f64 / (1 + sig.permutations) as f64
                }
            };

            let hotspot = if p_value <= sig.alpha && g_star > 0.0 {
                Hotspot::Hot
            } else if p_value <= sig.alpha && g_star < 0.0 {
                Hotspot::Cold
            } else {
                Hotspot::None
            };
            GiStarResult {
                region: i,
                g_star,
                p_value,
                hotspot,
            }
        })
        .collect();
    Ok(results)
}

fn one_sided_normal_p(g: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    if g >= 0.0 {
        1.0 - n.cdf(g)
    } else {
        n.cdf(g)
    }
}

/// Region selection: `(M+ intersect G) union M-` where `M+` are the
/// High-High/Low-Low clusters, `M-` the High-Low/Low-High outliers, and
/// `G` the significant hot or cold spots.
pub fn select_sampling_regions(
    clusters: &[ClusterLabel],
    gi: &[GiStarResult],
) -> Result<BTreeSet<usize>, StatsError> {
    if clusters.len() != gi.len() {
        return Err(StatsError::MismatchedUniverse {
            left: clusters.len(),
            right: gi.len(),
        });
    }
    let mut selected = BTreeSet::new();
    for (i, (label, g)) in clusters.iter().zip(gi).enumerate() {
        let m_plus = matches!(label, ClusterLabel::HighHigh | ClusterLabel::LowLow);
        let m_minus = matches!(label, ClusterLabel::HighLow | ClusterLabel::LowHigh);
        let hot_or_cold = matches!(g.hotspot, Hotspot::Hot | Hotspot::Cold);
        if (m_plus && hot_or_cold) || m_minus {
            selected.insert(i);
        }
    }
    Ok(selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{contiguity_weights, ContiguityRule, Standardization};
    use crate::grid::{Region, RegionSet};

    fn checkerboard() -> (Vec<f64>, WeightMatrix) {
        let regions = RegionSet::new(
            vec![
                Region::new("a", vec![(0, 0)]).unwrap(),
                Region::new("b", vec![(0, 1)]).unwrap(),
                Region::new("c", vec![(1, 0)]).unwrap(),
                Region::new("d", vec![(1, 1)]).unwrap(),
            ],
            "test",
        )
        .unwrap();
        (
            vec![1.0, 0.0, 0.0, 1.0],
            contiguity_weights(&regions, ContiguityRule::Edge),
        )
    }

    fn chain(n: usize) -> WeightMatrix {
        let mut entries = Vec::new();
        for i in 0..n - 1 {
            entries.push((i, i + 1, 1.0));
            entries.push((i + 1, i, 1.0));
        }
        WeightMatrix::from_entries(n, entries, Standardization::None)
    }

    #[test]
    fn checkerboard_moran_is_exactly_minus_one() {
        let (x, w) = checkerboard();
        let result = global_morans_i(&x, &w, &SignificanceSpec::permutation(99, 7, 0.05)).unwrap();
        assert_eq!(result.i, -1.0);
    }

    #[test]
    fn two_block_chain_moran_is_one_third() {
        let x = vec![1.0, 1.0, 0.0, 0.0];
        let result =
            global_morans_i(&x, &chain(4), &SignificanceSpec::permutation(99, 7, 0.05)).unwrap();
        assert!((result.i - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn constant_values_report_zero_variance() {
        let x = vec![5.0, 5.0, 5.0, 5.0];
        let err = global_morans_i(&x, &chain(4), &SignificanceSpec::default()).unwrap_err();
        assert!(matches!(err, StatsError::ZeroVariance));
    }

    #[test]
    fn no_neighbours_anywhere_is_degenerate() {
        let w = WeightMatrix::from_entries(3, vec![], Standardization::None);
        let err =
            global_morans_i(&[1.0, 2.0, 3.0], &w, &SignificanceSpec::default()).unwrap_err();
        assert!(matches!(err, StatsError::DegenerateWeights));
    }

    #[test]
    fn permutation_p_values_are_reproducible_and_on_lattice() {
        let x = vec![1.0, 1.0, 0.0, 0.0];
        let sig = SignificanceSpec::permutation(199, 42, 0.05);
        let a = global_morans_i(&x, &chain(4), &sig).unwrap();
        let b = global_morans_i(&x, &chain(4), &sig).unwrap();
        assert_eq!(a.p_value, b.p_value);
        let k = (a.p_value * 200.0).round();
        assert!((a.p_value - k / 200.0).abs() < 1e-12);
    }

    #[test]
    fn analytical_global_matches_expectation_shape() {
        let x = vec![1.0, 1.0, 0.0, 0.0];
        let result = global_morans_i(&x, &chain(4), &SignificanceSpec::analytical(0.05)).unwrap();
        assert!(result.p_value > 0.0 && result.p_value <= 1.0);
        assert_eq!(result.n_permutations, 0);
        // I = 1/3 is above E[I] = -1/3 so the z-score must be positive.
        assert!(result.z_score > 0.0);
    }

    #[test]
    fn lisa_checkerboard_is_all_negative_outliers() {
        let (x, w) = checkerboard();
        let results = local_morans_i(&x, &w, &SignificanceSpec::permutation(199, 3, 0.05)).unwrap();
        for r in &results {
            assert!(r.i_local < 0.0);
            assert!(r.z_i * r.lisa < 0.0);
            assert!(matches!(
                r.cluster,
                ClusterLabel::HighLow | ClusterLabel::LowHigh | ClusterLabel::NotSignificant
            ));
        }
        // Hand values for region 0: z = 0.5, neighbours both -0.5, S_i^2 = 0.25.
        assert_eq!(results[0].lisa, -1.0);
        assert_eq!(results[0].i_local, -2.0);
    }

    #[test]
    fn lisa_is_zero_when_neighbours_sit_at_the_mean() {
        // Region 0's only neighbour is region 3, whose value equals the mean.
        let x = vec![2.0, 1.0, 3.0, 2.0];
        let w = WeightMatrix::from_entries(
            4,
            vec![(0, 3, 1.0), (3, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)],
            Standardization::None,
        );
        let results = local_morans_i(&x, &w, &SignificanceSpec::permutation(99, 1, 0.05)).unwrap();
        assert_eq!(results[0].lisa, 0.0);
        assert_eq!(results[0].i_local, 0.0);
        assert_eq!(results[0].cluster, ClusterLabel::NotSignificant);
    }

    #[test]
    fn lisa_rejects_tiny_universes() {
        let err = local_morans_i(&[1.0, 2.0], &chain(2), &SignificanceSpec::default()).unwrap_err();
        assert!(matches!(err, StatsError::TooFewRegions { min: 3, .. }));
    }

    /// Under an i.i.d. null the conditional permutation test must be
    /// calibrated: about an alpha fraction of regions comes out
    /// significant.
    #[test]
    fn lisa_permutation_calibration_is_near_alpha() {
        let side = 10;
        let mut entries = Vec::new();
        for r in 0..side {
            for c in 0..side {
                let at = |r: usize, c: usize| r * side + c;
                if c + 1 < side {
                    entries.push((at(r, c), at(r, c + 1), 1.0));
                    entries.push((at(r, c + 1), at(r, c), 1.0));
                }
                if r + 1 < side {
                    entries.push((at(r, c), at(r + 1, c), 1.0));
                    entries.push((at(r + 1, c), at(r, c), 1.0));
                }
            }
        }
        let w = WeightMatrix::from_entries(side * side, entries, Standardization::None);

        let mut master = ChaCha8Rng::seed_from_u64(31);
        let trials = 20;
        let mut significant = 0usize;
        let mut total = 0usize;
        for trial in 0..trials {
            let x: Vec<f64> = (0..side * side).map(|_| master.gen::<f64>()).collect();
            let sig = SignificanceSpec::permutation(999, trial as u64, 0.05);
            for r in local_morans_i(&x, &w, &sig).unwrap() {
                total += 1;
                if r.p_value < 0.05 {
                    significant += 1;
                }
            }
        }
        let fraction = significant as f64 / total as f64;
        assert!(
            (0.02..=0.08).contains(&fraction),
            "false-positive fraction {fraction} far from alpha"
        );
    }

    #[test]
    fn gi_star_peaks_at_centre_of_high_block() {
        let x = vec![10.0, 10.0, 10.0, 0.0, 0.0];
        let results =
            getis_ord_gi_star(&x, &chain(5), &SignificanceSpec::analytical(0.05)).unwrap();
        let g: Vec<f64> = results.iter().map(|r| r.g_star).collect();
        // Hand evaluation: mean 6, S = sqrt(24); centre region sums to 30.
        assert!((g[1] - 2.0).abs() < 1e-12);
        let max = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(g[1], max);
    }

    #[test]
    fn gi_star_with_only_self_weight_follows_the_sign_of_the_deviation() {
        let x = vec![3.0, 1.0, 2.0];
        let w = WeightMatrix::from_entries(3, vec![], Standardization::None);
        let results = getis_ord_gi_star(&x, &w, &SignificanceSpec::analytical(0.05)).unwrap();
        assert!(results[0].g_star > 0.0);
        assert!(results[1].g_star < 0.0);
        assert_eq!(results[2].g_star, 0.0);
    }

    #[test]
    fn gi_star_constant_field_errors() {
        let err = getis_ord_gi_star(&[2.0, 2.0, 2.0], &chain(3), &SignificanceSpec::default())
            .unwrap_err();
        assert!(matches!(err, StatsError::ZeroVariance));
    }

    #[test]
    fn gi_star_complete_graph_is_degenerate() {
        let mut entries = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    entries.push((i, j, 1.0));
                }
            }
        }
        let w = WeightMatrix::from_entries(4, entries, Standardization::None);
        let err = getis_ord_gi_star(&[1.0, 2.0, 3.0, 4.0], &w, &SignificanceSpec::default())
            .unwrap_err();
        assert!(matches!(err, StatsError::DegenerateGiRow { region: 0, .. }));
    }

    #[test]
    fn cluster_table_rows() {
        assert_eq!(classify_one(1.0, 1.0, 0.01, 0.05), ClusterLabel::HighHigh);
        assert_eq!(classify_one(-1.0, -1.0, 0.01, 0.05), ClusterLabel::LowLow);
        assert_eq!(classify_one(-1.0, 1.0, 0.01, 0.05), ClusterLabel::LowHigh);
        assert_eq!(classify_one(1.0, -1.0, 0.01, 0.05), ClusterLabel::HighLow);
        assert_eq!(classify_one(1.0, 1.0, 0.20, 0.05), ClusterLabel::NotSignificant);
        assert_eq!(classify_one(0.0, 1.0, 0.01, 0.05), ClusterLabel::NotSignificant);
    }

    fn gi(hotspot: Hotspot) -> GiStarResult {
        GiStarResult {
            region: 0,
            g_star: match hotspot {
                Hotspot::Hot => 1.0,
                Hotspot::Cold => -1.0,
                Hotspot::None => 0.0,
            },
            p_value: 0.01,
            hotspot,
        }
    }

    #[test]
    fn selection_follows_the_set_algebra() {
        // High-High and hot: member of M+ intersect G.
        let picked = select_sampling_regions(&[ClusterLabel::HighHigh], &[gi(Hotspot::Hot)])
            .unwrap();
        assert!(picked.contains(&0));
        // High-Low and no hotspot: M- joins unconditionally.
        let picked = select_sampling_regions(&[ClusterLabel::HighLow], &[gi(Hotspot::None)])
            .unwrap();
        assert!(picked.contains(&0));
        // High-High without a hotspot fails the intersection.
        let picked = select_sampling_regions(&[ClusterLabel::HighHigh], &[gi(Hotspot::None)])
            .unwrap();
        assert!(picked.is_empty());
    }

    #[test]
    fn selection_rejects_mismatched_universes() {
        let err = select_sampling_regions(&[ClusterLabel::HighHigh], &[]).unwrap_err();
        assert!(matches!(err, StatsError::MismatchedUniverse { .. }));
    }
}
