//! Distribution-comparison statistics for the Monte Carlo harness:
//! total-variation distance, chi-square goodness of fit with p-values from
//! the regularized incomplete gamma function, and per-tree depth/distance
//! summaries.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::rng::SimRng;
use crate::tree::FreezeTree;
use crate::{Error, Result};

/// Mean, standard error and sample count of a batch of replications.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary {
            mean: f64::NAN,
            stderr: f64::NAN,
            count: 0,
        };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary {
            mean,
            stderr: f64::NAN,
            count: 1,
        };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    Summary {
        mean,
        stderr: (var / n as f64).sqrt(),
        count: n,
    }
}

/// Total variation distance `(1/2) sum |p - q|` over the union of supports.
pub fn tv_distance<K: Ord>(p: &BTreeMap<K, f64>, q: &BTreeMap<K, f64>) -> f64 {
    let mut total = 0.0;
    for (key, &pv) in p {
        total += (pv - q.get(key).copied().unwrap_or(0.0)).abs();
    }
    for (key, &qv) in q {
        if !p.contains_key(key) {
            total += qv.abs();
        }
    }
    total / 2.0
}

/// Chi-square statistic with its degrees of freedom and p-value.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Minimum expected count per cell for the chi-square approximation.
pub const MIN_EXPECTED_PER_CELL: f64 = 5.0;

/// Goodness of fit of observed counts against expected counts
/// (`expected[i]` are counts, not probabilities). Cells must satisfy the
/// minimum expected count; pool tails before calling.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> Result<ChiSquare> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::OutOfRange(
            "chi-square needs at least two matched cells".into(),
        ));
    }
    if expected.iter().any(|&e| e < MIN_EXPECTED_PER_CELL) {
        return Err(Error::SparseCells {
            min_expected: MIN_EXPECTED_PER_CELL,
        });
    }
    let statistic = observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum();
    let dof = observed.len() - 1;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    })
}

/// Two-sample chi-square for equal-size samples over a shared support:
/// cells with no observations in either sample are dropped.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> Result<ChiSquare> {
    if a.len() != b.len() {
        return Err(Error::OutOfRange(
            "two-sample chi-square needs matched supports".into(),
        ));
    }
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    if na == 0.0 || nb == 0.0 {
        return Err(Error::OutOfRange(
            "two-sample chi-square needs nonempty samples".into(),
        ));
    }
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut statistic = 0.0;
    let mut cells = 0usize;
    for (&oa, &ob) in a.iter().zip(b) {
        if oa + ob == 0 {
            continue;
        }
        cells += 1;
        let d = ka * oa as f64 - kb * ob as f64;
        statistic += d * d / (oa + ob) as f64;
    }
    if cells < 2 {
        return Err(Error::OutOfRange(
            "two-sample chi-square needs two occupied cells".into(),
        ));
    }
    let dof = cells - 1;
    Ok(ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof),
    })
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_upper_gamma(dof as f64 / 2.0, x / 2.0)
}

/// Bonferroni-adjusted significance level for `tests` simultaneous tests.
pub fn bonferroni(alpha: f64, tests: usize) -> f64 {
    alpha / tests.max(1) as f64
}

// Regularized incomplete gamma functions, series + Lentz continued fraction.

fn ln_gamma(z: f64) -> f64 {
    // Lanczos, g = 7, nine coefficients.
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507343278686905,
        -0.13857109526572012,
        9.984_369_578_019_572e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // reflection
        return (std::f64::consts::PI / (std::f64::consts::PI * z).sin()).ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = 0.999_999_999_999_809_9;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)` by power series.
fn reg_lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = a;
    for _ in 0..500 {
        k += 1.0;
        term *= x / k;
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` by Lentz continued fraction.
fn reg_upper_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (a * x.ln() - x - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` for `a > 0`, `x >= 0`.
pub fn reg_upper_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - reg_lower_series(a, x)).clamp(0.0, 1.0)
    } else {
        reg_upper_cf(a, x).clamp(0.0, 1.0)
    }
}

/// Which statistic a [`DistComparison`] carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    ChiSquare,
    TotalVariation,
}

/// A resolved comparison of an observed sample against expected
/// probabilities, with its verdict.
#[derive(Clone, Debug, Serialize)]
pub struct DistComparison {
    pub labels: Vec<String>,
    pub observed: Vec<u64>,
    pub expected: Vec<f64>,
    pub kind: StatisticKind,
    pub value: f64,
    pub threshold: f64,
    pub verdict: bool,
    pub dof: Option<usize>,
}

impl DistComparison {
    fn validate(labels: &[String], observed: &[u64], expected: &[f64]) -> Result<()> {
        if labels.len() != observed.len() || labels.len() != expected.len() {
            return Err(Error::OutOfRange(
                "comparison arrays must be matched".into(),
            ));
        }
        let total: f64 = expected.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!(
                "expected probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    /// Chi-square comparison: verdict is `p_value > p_floor`.
    pub fn chi_square(
        labels: Vec<String>,
        observed: Vec<u64>,
        expected: Vec<f64>,
        p_floor: f64,
    ) -> Result<Self> {
        Self::validate(&labels, &observed, &expected)?;
        let n: u64 = observed.iter().sum();
        let expected_counts: Vec<f64> = expected.iter().map(|p| p * n as f64).collect();
        let chi = chi_square_gof(&observed, &expected_counts)?;
        Ok(DistComparison {
            labels,
            observed,
            expected,
            kind: StatisticKind::ChiSquare,
            value: chi.p_value,
            threshold: p_floor,
            verdict: chi.p_value > p_floor,
            dof: Some(chi.dof),
        })
    }

    /// Total-variation comparison: verdict is `tv < threshold`.
    pub fn total_variation(
        labels: Vec<String>,
        observed: Vec<u64>,
        expected: Vec<f64>,
        threshold: f64,
    ) -> Result<Self> {
        Self::validate(&labels, &observed, &expected)?;
        let n: u64 = observed.iter().sum();
        let tv = observed
            .iter()
            .zip(&expected)
            .map(|(&o, &e)| (o as f64 / n as f64 - e).abs())
            .sum::<f64>()
            / 2.0;
        Ok(DistComparison {
            labels,
            observed,
            expected,
            kind: StatisticKind::TotalVariation,
            value: tv,
            threshold,
            verdict: tv < threshold,
            dof: None,
        })
    }
}

/// Per-tree draws of a uniform active vertex (depth), two independent
/// uniform vertices (distance), and the height.
#[derive(Clone, Debug, Serialize)]
pub struct DepthDistanceStats {
    pub active_depth: Summary,
    pub pair_distance: Summary,
    pub height: Summary,
}

pub fn depth_distance_stats(trees: &[FreezeTree], rng: &mut SimRng) -> Result<DepthDistanceStats> {
    if trees.is_empty() {
        return Err(Error::OutOfRange(
            "depth statistics need a nonempty sample".into(),
        ));
    }
    let mut depths_of_active = Vec::with_capacity(trees.len());
    let mut distances = Vec::with_capacity(trees.len());
    let mut heights = Vec::with_capacity(trees.len());
    for tree in trees {
        let depths = tree.depths();
        let actives = tree.active_vertices();
        if actives.is_empty() {
            return Err(Error::OutOfRange(
                "tree has no active vertex to draw; walk was absorbed".into(),
            ));
        }
        let active = actives[rng.gen_range(0..actives.len())];
        depths_of_active.push(depths[active as usize] as f64);
        let u = rng.gen_range(0..tree.num_vertices() as u32);
        let v = rng.gen_range(0..tree.num_vertices() as u32);
        distances.push(tree.distance(&depths, u, v) as f64);
        heights.push(depths.iter().copied().max().unwrap_or(0) as f64);
    }
    Ok(DepthDistanceStats {
        active_depth: summarize(&depths_of_active),
        pair_distance: summarize(&distances),
        height: summarize(&heights),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn tv_examples() {
        let p = map(&[("a", 0.5), ("b", 0.5)]);
        assert_eq!(tv_distance(&p, &p), 0.0);
        let q = map(&[("c", 1.0)]);
        assert_eq!(tv_distance(&p, &q), 1.0);
        let r = map(&[("a", 1.0)]);
        assert_eq!(tv_distance(&p, &r), 0.5);
    }

    #[test]
    fn chi_square_sf_matches_even_dof_closed_form() {
        // For even dof 2m: Q(x) = exp(-x/2) sum_{j<m} (x/2)^j / j!
        for &(dof, x) in &[(2usize, 1.0), (2, 5.0), (4, 3.3), (10, 17.2), (6, 0.4)] {
            let m = dof / 2;
            let half = x / 2.0;
            let mut term = 1.0;
            let mut sum = 0.0;
            for j in 0..m {
                if j > 0 {
                    term *= half / j as f64;
                }
                sum += term;
            }
            let expected = (-half).exp() * sum;
            let got = chi_square_sf(x, dof);
            assert!(
                (got - expected).abs() < 1e-12,
                "dof {dof} x {x}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn chi_square_sf_bounds_and_monotonicity() {
        assert_eq!(chi_square_sf(0.0, 3), 1.0);
        assert!(chi_square_sf(1.0, 3) > chi_square_sf(2.0, 3));
        assert!(chi_square_sf(100.0, 3) < 1e-15);
    }

    #[test]
    fn chi_square_gof_on_fair_counts() {
        let observed = [250u64, 251, 249, 250];
        let expected = [250.0; 4];
        let chi = chi_square_gof(&observed, &expected).unwrap();
        assert_eq!(chi.dof, 3);
        assert!(chi.p_value > 0.99);
    }

    #[test]
    fn chi_square_rejects_sparse_cells() {
        assert!(matches!(
            chi_square_gof(&[1, 2], &[1.5, 1.5]),
            Err(Error::SparseCells { .. })
        ));
    }

    #[test]
    fn two_sample_chi_square_same_distribution_passes() {
        let mut rng = stream_rng(5, 0);
        let mut a = [0u64; 6];
        let mut b = [0u64; 6];
        for _ in 0..20_000 {
            a[rng.gen_range(0..6)] += 1;
            b[rng.gen_range(0..6)] += 1;
        }
        let chi = chi_square_two_sample(&a, &b).unwrap();
        assert!(chi.p_value > 1e-3);
    }

    #[test]
    fn dist_comparison_validates_probabilities() {
        assert!(
            DistComparison::total_variation(vec!["x".into()], vec![10], vec![0.7], 0.01).is_err()
        );
    }

    #[test]
    fn summary_of_constant_sample() {
        let s = summarize(&[2.0, 2.0, 2.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn depth_stats_on_single_vertex_trees() {
        let trees = vec![FreezeTree::single_active(), FreezeTree::single_active()];
        let mut rng = stream_rng(1, 0);
        let stats = depth_distance_stats(&trees, &mut rng).unwrap();
        assert_eq!(stats.active_depth.mean, 0.0);
        assert_eq!(stats.pair_distance.mean, 0.0);
        assert_eq!(stats.height.mean, 0.0);
    }

    #[test]
    fn mean_active_depth_matches_harmonic_oracle() {
        // constant +1: the expected depth of a uniform active vertex is
        // exactly H_{n+1} - 1 (sum of 1/S_i = 1/(i+1))
        let n = 2000usize;
        let x = crate::seqgen::gen_constant_plus(n);
        let oracle: f64 = (2..=n + 1).map(|k| 1.0 / k as f64).sum();
        let reps = 4000usize;
        let mut depths = Vec::with_capacity(reps);
        let mut var_proxy = 0.0;
        for rep in 0..reps {
            let mut rng = stream_rng(61, rep as u64);
            let t = crate::attach::build_attach(&x, n, &mut rng).unwrap();
            let d = t.depths();
            let v = rng.gen_range(0..t.num_vertices());
            depths.push(d[v] as f64);
            var_proxy += (d[v] as f64 - oracle) * (d[v] as f64 - oracle);
        }
        let mean = depths.iter().sum::<f64>() / reps as f64;
        let sigma = (var_proxy / reps as f64 / reps as f64).sqrt();
        assert!(
            (mean - oracle).abs() < 4.0 * sigma,
            "mean {mean} vs oracle {oracle}"
        );
    }

    #[test]
    fn depth_stats_rejects_fully_frozen_trees() {
        let x = crate::seq::SignSequence::from_values([-1]).unwrap();
        let t = crate::attach::build_attach_seeded(&x, 1, 3).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!(depth_distance_stats(&[t], &mut rng).is_err());
    }

    #[test]
    fn bonferroni_divides() {
        assert_eq!(bonferroni(1e-3, 10), 1e-4);
        assert_eq!(bonferroni(0.05, 0), 0.05);
    }
}
