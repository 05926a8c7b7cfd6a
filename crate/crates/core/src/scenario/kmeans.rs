//! Lloyd's k-means with k-means++ seeding and seeded restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::Execution;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_ITERATIONS: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sum of squared distances to assigned centroids.
    pub objective: f64,
    /// Objective after every Lloyd iteration of the winning restart.
    pub history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (w, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (w, d);
        }
    }
    best
}

/// Best of [`DEFAULT_RESTARTS`] seeded runs.
pub fn kmeans(points: &[Vec<f64>], clusters: usize, seed: u64) -> Result<Clustering> {
    kmeans_with(points, clusters, seed, DEFAULT_RESTARTS, Execution::default())
}

pub fn kmeans_with(
    points: &[Vec<f64>],
    clusters: usize,
    seed: u64,
    restarts: usize,
    exec: Execution,
) -> Result<Clustering> {
    if clusters == 0 {
        return Err(Error::Scenario("cluster count must be positive".into()));
    }
    if clusters > points.len() {
        return Err(Error::Scenario(format!(
            "{clusters} clusters requested for {} days",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points
        .iter()
        .any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite()))
    {
        return Err(Error::Scenario(
            "feature vectors must be finite and of equal length".into(),
        ));
    }
    let runs = exec.map_range(restarts.max(1), |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        lloyd(points, plus_plus_init(points, clusters, &mut rng))
    });
    // First strictly better run wins, so ties go to the lowest restart index.
    let mut best: Option<Clustering> = None;
    for run in runs {
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn plus_plus_init(points: &[Vec<f64>], clusters: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < clusters {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            // All remaining points coincide with a centroid.
            chosen.iter().position(|c| !c).expect("clusters <= points")
        };
        chosen[pick] = true;
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &points[pick]));
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Lloyd iterations from the given centroids until the partition is stable.
///
/// A cluster left empty by an assignment step is reseeded at the point
/// farthest from its own centroid (taken from a cluster with more than one
/// member), and that point is moved into it.
pub fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> Clustering {
    let clusters = centroids.len();
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let mut next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        let mut counts = vec![0usize; clusters];
        for &l in &next {
            counts[l] += 1;
        }
        for w in 0..clusters {
            if counts[w] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for (i, p) in points.iter().enumerate() {
                if counts[next[i]] > 1 {
                    let d = sq_dist(p, &centroids[next[i]]);
                    if d > far_d {
                        far = Some(i);
                        far_d = d;
                    }
                }
            }
            let i = far.expect("clusters <= points leaves a shared cluster");
            counts[next[i]] -= 1;
            next[i] = w;
            counts[w] = 1;
            centroids[w] = points[i].clone();
        }

        let mut sums = vec![vec![0.0; dim]; clusters];
        for (p, &l) in points.iter().zip(&next) {
            for (s, x) in sums[l].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, (s, &n)) in centroids.iter_mut().zip(sums.iter().zip(&counts)) {
            *c = s.iter().map(|x| x / n as f64).collect();
        }
        let objective: f64 = points.iter().zip(&next).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
        debug_assert!(
            history
                .last()
                .is_none_or(|&prev: &f64| objective <= prev * (1.0 + 1e-12) + 1e-12),
            "k-means objective increased"
        );
        history.push(objective);
        let stable = next == labels;
        labels = next;
        if stable {
            break;
        }
    }
    let objective = *history.last().expect("at least one iteration");
    Clustering {
        centroids,
        labels,
        objective,
        history,
    }
}

/// Index of the member closest to each centroid; ties go to the lower index.
pub fn select_representatives(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &[usize]) -> Vec<usize> {
    centroids
        .iter()
        .enumerate()
        .map(|(w, c)| {
            let mut best = (usize::MAX, f64::INFINITY);
            for (i, p) in points.iter().enumerate() {
                if labels[i] == w {
                    let d = sq_dist(p, c);
                    if d < best.1 {
                        best = (i, d);
                    }
                }
            }
            best.0
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(seed: u64, per_blob: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for i in 0..2 * per_blob {
            let b = i % 2;
            let c = if b == 0 { [-50.0, 0.0, 10.0] } else { [50.0, 5.0, -10.0] };
            pts.push(c.iter().map(|x| x + rng.gen_range(-1.0..1.0)).collect());
            truth.push(b);
        }
        (pts, truth)
    }

    #[test]
    fn single_cluster_centroid_is_mean() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 8.0]];
        let c = kmeans(&pts, 1, 3).unwrap();
        assert_eq!(c.labels, vec![0, 0, 0]);
        assert_eq!(c.centroids[0], vec![2.0, 4.0]);
    }

    #[test]
    fn one_point_per_cluster_has_zero_objective() {
        let (pts, _) = blobs(1, 4);
        let c = kmeans(&pts, pts.len(), 9).unwrap();
        assert_eq!(c.objective, 0.0);
        let mut seen = c.labels.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..pts.len()).collect::<Vec<_>>());
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (pts, truth) = blobs(2, 20);
        let c = kmeans(&pts, 2, 5).unwrap();
        let flip = c.labels[0] != truth[0];
        for (l, t) in c.labels.iter().zip(&truth) {
            assert_eq!(*l, if flip { 1 - t } else { *t });
        }
    }

    #[test]
    fn duplicates_never_leave_empty_clusters() {
        let pts = vec![vec![1.0]; 5];
        let c = kmeans(&pts, 3, 0).unwrap();
        for w in 0..3 {
            assert!(c.labels.contains(&w));
        }
    }

    #[test]
    fn lloyd_objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        // Deliberately poor start: all centroids clumped together.
        let init = (0..6).map(|i| vec![i as f64 * 1e-3; 4]).collect();
        let c = lloyd(&pts, init);
        assert!(c.history.len() > 2);
        for w in c.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn too_many_clusters_is_an_error() {
        assert!(kmeans(&[vec![0.0]], 2, 0).is_err());
        assert!(kmeans(&[vec![0.0]], 0, 0).is_err());
    }

    #[test]
    fn representatives() {
        let pts = vec![vec![0.0], vec![1.0], vec![3.0], vec![10.0]];
        let centroids = vec![vec![2.0], vec![10.0]];
        // Points 1 and 2 are both at distance 1 from centroid 0.
        let reps = select_representatives(&pts, &centroids, &[0, 0, 0, 1]);
        assert_eq!(reps, vec![1, 3]);
    }

    #[test]
    fn representative_matches_brute_force_scan() {
        let (pts, _) = blobs(3, 15);
        let c = kmeans(&pts, 2, 1).unwrap();
        let reps = select_representatives(&pts, &c.centroids, &c.labels);
        for (w, &r) in reps.iter().enumerate() {
            assert_eq!(c.labels[r], w);
            let d_rep = sq_dist(&pts[r], &c.centroids[w]);
            for (i, p) in pts.iter().enumerate() {
                if c.labels[i] == w {
                    assert!(d_rep <= sq_dist(p, &c.centroids[w]));
                }
            }
        }
    }

    #[test]
    fn restarts_are_deterministic_across_execution_modes() {
        let (pts, _) = blobs(4, 30);
        let a = kmeans_with(&pts, 5, 17, 10, Execution::Sequential).unwrap();
        let b = kmeans_with(&pts, 5, 17, 10, Execution::default()).unwrap();
        assert_eq!(a, b);
    }
}
