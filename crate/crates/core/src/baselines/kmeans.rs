//! Lloyd's k-means with k-means++ seeding for small dense vectors.

use rand::Rng;

pub const MAX_ITERATIONS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_centroids<R: Rng + ?Sized>(points: &[&[f64]], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].to_vec()];
    while centroids.len() < k {
        let d2: Vec<f64> = points.iter().map(|p| nearest(p, &centroids).1).collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = d2.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // Every point coincides with a centroid; duplicates are unavoidable.
            rng.gen_range(0..points.len())
        };
        centroids.push(points[pick].to_vec());
    }
    centroids
}

/// Cluster label of every point. Requires `1 <= k <= points.len()`.
pub fn kmeans<R: Rng + ?Sized>(points: &[&[f64]], k: usize, rng: &mut R) -> Vec<usize> {
    assert!(k >= 1 && k <= points.len(), "k must be in 1..=points");
    let dim = points[0].len();
    let mut centroids = seed_centroids(points, k, rng);
    let mut labels = vec![usize::MAX; points.len()];

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (p, point) in points.iter().enumerate() {
            let (c, _) = nearest(point, &centroids);
            if labels[p] != c {
                labels[p] = c;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, point) in points.iter().enumerate() {
            sizes[labels[p]] += 1;
            for (s, v) in sums[labels[p]].iter_mut().zip(point.iter()) {
                *s += v;
            }
        }
        // Re-seed empty clusters from the points farthest from their centroid.
        let mut taken = vec![false; points.len()];
        for c in 0..k {
            if sizes[c] > 0 {
                continue;
            }
            let far = (0..points.len())
                .filter(|&p| !taken[p] && sizes[labels[p]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(points[a], &centroids[labels[a]])
                        .total_cmp(&sq_dist(points[b], &centroids[labels[b]]))
                        .then(b.cmp(&a))
                });
            if let Some(p) = far {
                taken[p] = true;
                let old = labels[p];
                sizes[old] -= 1;
                for (s, v) in sums[old].iter_mut().zip(points[p].iter()) {
                    *s -= v;
                }
                labels[p] = c;
                sizes[c] = 1;
                sums[c] = points[p].to_vec();
                changed = true;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}
