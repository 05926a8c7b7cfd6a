//! Cluster weights, day-to-day transition matrix and synthetic sequence sampling.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Share of historical days in each cluster.
///
/// Every entry is `count / n` except the last, which absorbs the rounding so
/// that the left-to-right sum is exactly one.
pub fn cluster_weights(labels: &[usize], clusters: usize) -> Vec<f64> {
    let n = labels.len() as f64;
    let mut counts = vec![0usize; clusters];
    for &l in labels {
        counts[l] += 1;
    }
    let mut weights: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    if let Some((last, head)) = weights.split_last_mut() {
        let head_sum: f64 = head.iter().sum();
        *last = 1.0 - head_sum;
    }
    weights
}

/// Row-stochastic transition matrix counted over consecutive label pairs.
/// Rows with no outgoing transitions fall back to the uniform distribution.
pub fn fit_transition(labels: &[usize], clusters: usize) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0usize; clusters]; clusters];
    for pair in labels.windows(2) {
        counts[pair[0]][pair[1]] += 1;
    }
    counts
        .into_iter()
        .map(|row| {
            let total: usize = row.iter().sum();
            if total == 0 {
                vec![1.0 / clusters as f64; clusters]
            } else {
                row.into_iter().map(|c| c as f64 / total as f64).collect()
            }
        })
        .collect()
}

/// Sample `days` cluster labels from the chain, starting from `weights`.
///
/// Clusters the chain never visits are then written over the final
/// occurrences of the currently most frequent cluster, one missing cluster at
/// a time in ascending order.
pub fn sample_sequence(transition: &[Vec<f64>], weights: &[f64], days: usize, seed: u64) -> Result<Vec<usize>> {
    let clusters = weights.len();
    if clusters == 0 || transition.len() != clusters {
        return Err(Error::Scenario("transition matrix does not match weights".into()));
    }
    if days < clusters {
        return Err(Error::Scenario(format!(
            "cannot cover all clusters: {days} days for {clusters} clusters"
        )));
    }
    let bad = |what: &str| Error::Scenario(format!("{what} is not a probability vector"));
    let initial = WeightedIndex::new(weights).map_err(|_| bad("cluster weights"))?;
    let rows = transition
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|_| bad("transition row")))
        .collect::<Result<Vec<_>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 << 32);
    let mut seq = Vec::with_capacity(days);
    let mut state = initial.sample(&mut rng);
    seq.push(state);
    while seq.len() < days {
        state = rows[state].sample(&mut rng);
        seq.push(state);
    }
    repair_coverage(&mut seq, clusters);
    Ok(seq)
}

fn repair_coverage(seq: &mut [usize], clusters: usize) {
    let mut counts = vec![0usize; clusters];
    for &s in seq.iter() {
        counts[s] += 1;
    }
    let mut pinned = vec![false; seq.len()];
    for missing in 0..clusters {
        if counts[missing] > 0 {
            continue;
        }
        let donor = (0..clusters)
            .max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
            .expect("clusters > 0");
        let pos = (0..seq.len())
            .rev()
            .find(|&t| seq[t] == donor && !pinned[t])
            .expect("donor occurs");
        seq[pos] = missing;
        pinned[pos] = true;
        counts[donor] -= 1;
        counts[missing] = 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_count_labels() {
        let w = cluster_weights(&[0, 0, 1, 1, 1, 1], 2);
        assert_eq!(w, vec![1.0 / 3.0, 1.0 - 1.0 / 3.0]);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(cluster_weights(&[0, 0, 0], 1), vec![1.0]);
    }

    #[test]
    fn weights_sum_to_one_exactly() {
        let labels: Vec<usize> = (0..10).collect();
        let w = cluster_weights(&labels, 10);
        assert_eq!(w.iter().sum::<f64>(), 1.0);
        for x in &w {
            assert!((x - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn transition_counts() {
        assert_eq!(fit_transition(&[0, 0, 0], 1), vec![vec![1.0]]);
        assert_eq!(
            fit_transition(&[0, 1, 0, 1, 0], 2),
            vec![vec![0.0, 1.0], vec![1.0, 0.0]]
        );
        // Cluster 2 only appears last: no outgoing pairs.
        let a = fit_transition(&[0, 1, 2], 3);
        assert_eq!(a[2], vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn single_cluster_sequence() {
        let s = sample_sequence(&[vec![1.0]], &[1.0], 30, 4).unwrap();
        assert_eq!(s, vec![0; 30]);
    }

    #[test]
    fn too_few_days() {
        let a = vec![vec![0.5, 0.5]; 2];
        let err = sample_sequence(&a, &[0.5, 0.5], 1, 0).unwrap_err();
        assert!(err.to_string().contains("cannot cover all clusters"));
    }

    #[test]
    fn repair_covers_absorbing_chain() {
        // Cluster 0 is absorbing and cluster 2 is unreachable from it.
        let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let w = vec![1.0, 0.0, 0.0];
        let s = sample_sequence(&a, &w, 6, 1).unwrap();
        assert_eq!(s, vec![0, 0, 0, 0, 2, 1]);
    }

    #[test]
    fn same_seed_same_sequence() {
        let a = vec![vec![0.2, 0.8], vec![0.6, 0.4]];
        let w = vec![0.5, 0.5];
        assert_eq!(
            sample_sequence(&a, &w, 100, 9).unwrap(),
            sample_sequence(&a, &w, 100, 9).unwrap()
        );
    }

    #[test]
    fn visit_frequencies_approach_stationary_distribution() {
        let a = vec![vec![0.5, 0.3, 0.2], vec![0.1, 0.6, 0.3], vec![0.4, 0.1, 0.5]];
        // Oracle: power iteration on the row vector.
        let mut pi = vec![1.0 / 3.0; 3];
        for _ in 0..10_000 {
            let mut next = [0.0; 3];
            for i in 0..3 {
                for j in 0..3 {
                    next[j] += pi[i] * a[i][j];
                }
            }
            pi = next.to_vec();
        }
        let s = sample_sequence(&a, &[0.2, 0.3, 0.5], 100_000, 21).unwrap();
        let mut freq = [0.0; 3];
        for &x in &s {
            freq[x] += 1.0 / s.len() as f64;
        }
        let l1: f64 = freq.iter().zip(&pi).map(|(f, p)| (f - p).abs()).sum();
        assert!(l1 < 0.02, "L1 distance {l1}");
    }
}
