//! Agglomerative clustering of embeddings by unweighted average linkage
//! (UPGMA) over a similarity matrix, with an unsupervised stopping
//! threshold calibrated by a two-Gaussian mixture fit to the score
//! distribution, and equal-weight fusion of multi-channel score matrices.

use crate::error::{Error, Result};
use crate::linalg::log_sum_exp;
use crate::plda::SimilarityMatrix;

/// Two-component, shared-variance univariate Gaussian mixture fitted to
/// pairwise similarity scores; the low component models different-speaker
/// pairs, the high component same-speaker pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFit {
    pub mu_low: f64,
    pub mu_high: f64,
    /// Shared standard deviation of both components.
    pub sigma: f64,
    pub w_low: f64,
    pub w_high: f64,
}

/// Hard cluster assignment for a sequence of embeddings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
}

impl ClusterLabels {
    /// Wraps raw labels. They need not be contiguous (ground-truth labels
    /// may skip an id when a speaker never occurs); use
    /// [`ClusterLabels::relabeled_by_first_appearance`] for the canonical
    /// contiguous form that clustering outputs use.
    pub fn from_raw(labels: Vec<usize>) -> Self {
        assert!(!labels.is_empty(), "cluster labels must cover >= 1 element");
        ClusterLabels { labels }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of distinct cluster ids.
    pub fn n_clusters(&self) -> usize {
        let mut seen = std::collections::BTreeSet::new();
        for &l in &self.labels {
            seen.insert(l);
        }
        seen.len()
    }

    /// Canonical form: ids renumbered 0,1,2,... in order of first
    /// appearance, which makes partitions comparable across relabelings.
    pub fn relabeled_by_first_appearance(&self) -> ClusterLabels {
        let mut map = std::collections::HashMap::new();
        let mut next = 0usize;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                *map.entry(l).or_insert_with(|| {
                    let id = next;
                    next += 1;
                    id
                })
            })
            .collect();
        ClusterLabels { labels }
    }
}

fn log_normal(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * z * z
}

/// Fits the two-Gaussian shared-variance mixture to similarity scores by EM.
///
/// Deterministic initialization: component means at the 10th and 90th
/// percentiles, shared sigma at the sample standard deviation, equal
/// weights. Runs until the relative log-likelihood change drops below
/// 1e-9 or 1000 iterations, then orders the components by mean.
pub fn fit_two_gaussians(scores: &[f64]) -> Result<CalibrationFit> {
    let n = scores.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "calibration needs at least 10 scores, got {n}"
        )));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let spread = sorted[n - 1] - sorted[0];
    if spread <= 0.0 {
        return Err(Error::DegenerateInput(
            "calibration scores are all equal".into(),
        ));
    }

    let percentile = |p: f64| sorted[((n - 1) as f64 * p).round() as usize];
    let mean: f64 = scores.iter().sum::<f64>() / n as f64;
    let var: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n as f64;

    let mut mu_low = percentile(0.10);
    let mut mu_high = percentile(0.90);
    let mut sigma = var.sqrt().max(1e-12 * spread);
    let (mut w_low, mut w_high) = (0.5_f64, 0.5_f64);

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..1000 {
        // E-step in log domain.
        let mut r_low = Vec::with_capacity(n);
        let mut ll = 0.0;
        for &s in scores {
            let a = w_low.ln() + log_normal(s, mu_low, sigma);
            let b = w_high.ln() + log_normal(s, mu_high, sigma);
            let norm = log_sum_exp(&[a, b]);
            r_low.push((a - norm).exp());
            ll += norm;
        }
        // M-step.
        let sum_low: f64 = r_low.iter().sum();
        let sum_high = n as f64 - sum_low;
        if sum_low > 0.0 {
            mu_low = scores
                .iter()
                .zip(&r_low)
                .map(|(s, r)| s * r)
                .sum::<f64>()
                / sum_low;
        }
        if sum_high > 0.0 {
            mu_high = scores
                .iter()
                .zip(&r_low)
                .map(|(s, r)| s * (1.0 - r))
                .sum::<f64>()
                / sum_high;
        }
        let ss: f64 = scores
            .iter()
            .zip(&r_low)
            .map(|(s, r)| {
                r * (s - mu_low) * (s - mu_low) + (1.0 - r) * (s - mu_high) * (s - mu_high)
            })
            .sum();
        sigma = (ss / n as f64).sqrt().max(1e-12 * spread);
        w_low = (sum_low / n as f64).clamp(1e-12, 1.0 - 1e-12);
        w_high = 1.0 - w_low;

        // Relative tolerance: an absolute one would sit below the float
        // resolution of the summed log-likelihood on large score sets.
        if (ll - prev_ll).abs() < 1e-9 * ll.abs().max(1.0) {
            break;
        }
        prev_ll = ll;
    }

    if mu_low > mu_high {
        std::mem::swap(&mut mu_low, &mut mu_high);
        std::mem::swap(&mut w_low, &mut w_high);
    }
    Ok(CalibrationFit {
        mu_low,
        mu_high,
        sigma,
        w_low,
        w_high,
    })
}

/// The score at which both mixture components are equally probable
/// a posteriori, plus a constant bias. Scores above the returned threshold
/// count as "same speaker".
///
/// Closed form: `(mu_low + mu_high)/2 + sigma^2 * ln(w_low/w_high) /
/// (mu_high - mu_low) + bias`.
pub fn calibration_threshold(fit: &CalibrationFit, bias: f64) -> Result<f64> {
    let gap = fit.mu_high - fit.mu_low;
    if gap.abs() < 1e-12 {
        return Err(Error::Numerical(
            "calibration components have equal means; no posterior crossing exists".into(),
        ));
    }
    Ok((fit.mu_low + fit.mu_high) / 2.0 + fit.sigma * fit.sigma * (fit.w_low / fit.w_high).ln() / gap
        + bias)
}

/// Unweighted-average-linkage (UPGMA) agglomerative clustering.
///
/// Starts from singletons and repeatedly merges the cluster pair with the
/// greatest average pairwise similarity, stopping when the best merge is no
/// longer strictly above `stop_threshold` or one cluster remains. A merged
/// cluster lives in the slot of its smallest member index, and score ties
/// are broken by the lexicographically smallest slot pair, so the result is
/// fully deterministic. Labels are contiguous in order of first element
/// appearance.
pub fn upgma_cluster(sim: &SimilarityMatrix, stop_threshold: f64) -> ClusterLabels {
    let n = sim.len();
    assert!(n >= 1, "clustering needs at least one element");

    // avg[i][j]: average similarity between active clusters in slots i, j.
    let mut avg = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                avg[i][j] = sim.get(i, j);
            }
        }
    }
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    // Slot that each original element currently belongs to.
    let mut slot_of = (0..n).collect::<Vec<usize>>();
    // Cached best partner per active slot: (value, partner).
    let mut row_best: Vec<Option<(f64, usize)>> = vec![None; n];

    let best_partner = |avg: &
        Vec<Vec<f64>>,
        active: &[bool],
        i: usize| -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..active.len() {
            if j == i || !active[j] {
                continue;
            }
            let v = avg[i][j];
            match best {
                Some((bv, bj)) if v < bv || (v == bv && j > bj) => {}
                _ => best = Some((v, j)),
            }
        }
        best
    };

    for i in 0..n {
        row_best[i] = best_partner(&avg, &active, i);
    }

    let mut n_active = n;
    while n_active > 1 {
        // Global best merge with (value desc, slot pair asc) ordering.
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            if let Some((v, j)) = row_best[i] {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                match best {
                    Some((bv, ba, bb)) if v < bv || (v == bv && (a, b) >= (ba, bb)) => {}
                    _ => best = Some((v, a, b)),
                }
            }
        }
        let (value, i, j) = best.expect("at least two active clusters");
        if value <= stop_threshold {
            break;
        }

        // Merge slot j into slot i (i < j).
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for k in 0..n {
            if active[k] && k != i && k != j {
                let merged = (ni * avg[i][k] + nj * avg[j][k]) / (ni + nj);
                avg[i][k] = merged;
                avg[k][i] = merged;
            }
        }
        size[i] += size[j];
        active[j] = false;
        n_active -= 1;
        for s in slot_of.iter_mut() {
            if *s == j {
                *s = i;
            }
        }

        row_best[j] = None;
        row_best[i] = best_partner(&avg, &active, i);
        for k in 0..n {
            if !active[k] || k == i {
                continue;
            }
            match row_best[k] {
                // The cached partner vanished or changed value: recompute.
                Some((_, p)) if p == i || p == j => {
                    row_best[k] = best_partner(&avg, &active, k);
                }
                // The merged cluster may have become the new best partner.
                Some((bv, bp)) => {
                    let v = avg[k][i];
                    if v > bv || (v == bv && i < bp) {
                        row_best[k] = Some((v, i));
                    }
                }
                None => row_best[k] = best_partner(&avg, &active, k),
            }
        }
    }

    ClusterLabels::from_raw(slot_of).relabeled_by_first_appearance()
}

/// Entrywise equal-weight average of several similarity matrices (one per
/// channel); the diagonal sentinel is preserved.
pub fn average_similarities(mats: &[SimilarityMatrix]) -> Result<SimilarityMatrix> {
    let first = mats
        .first()
        .ok_or_else(|| Error::EmptyInput("no similarity matrices to average".into()))?;
    let n = first.len();
    for m in mats {
        if m.len() != n {
            return Err(Error::Dimension(format!(
                "similarity matrix sizes differ: {} vs {n}",
                m.len()
            )));
        }
    }
    let mut out = nalgebra::DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out[(i, j)] = mats.iter().map(|m| m.get(i, j)).sum::<f64>() / mats.len() as f64;
            }
        }
    }
    SimilarityMatrix::new(out)
}
