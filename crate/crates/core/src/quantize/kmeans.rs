//! Lloyd's k-means with k-means++ seeding, for 1-D and 2-D points.
//!
//! Deterministic given the seed: seeding draws from a ChaCha8 stream, ties in
//! assignment go to the lower centroid index, and empty clusters are reseeded
//! with the point currently farthest from its centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_ITERATIONS: usize = 100;
/// Stop once inertia improves by less than this fraction.
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// `k · dim` values; sorted ascending (1-D) or lexicographically (2-D).
    pub centroids: Vec<f64>,
    pub dim: usize,
    pub inertia: f64,
    pub iterations: usize,
    /// The data had fewer than `k` distinct points; some centroids repeat.
    pub degenerate: bool,
}

impl KMeansFit {
    pub fn k(&self) -> usize {
        self.centroids.len() / self.dim
    }

    pub fn centroid(&self, i: usize) -> &[f64] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties resolve to the lower index.
pub(crate) fn nearest(point: &[f64], centroids: &[f64], dim: usize) -> (usize, f64) {
    if dim == 1 {
        return nearest_sorted(point[0], centroids);
    }
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = dist2(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Nearest entry of an ascending list; ties go to the lower index.
pub(crate) fn nearest_sorted(x: f64, sorted: &[f64]) -> (usize, f64) {
    let upper = sorted.partition_point(|&c| c < x);
    let mut best = (0, f64::INFINITY);
    for i in [upper.wrapping_sub(1), upper] {
        if let Some(&c) = sorted.get(i) {
            let d = (x - c) * (x - c);
            if d < best.1 || (d == best.1 && i < best.0) {
                best = (i, d);
            }
        }
    }
    // A run of equal centroids: report the first of the run.
    let mut idx = best.0;
    while idx > 0 && sorted[idx - 1] == sorted[best.0] {
        idx -= 1;
    }
    (idx, best.1)
}

fn sort_centroids(centroids: &mut [f64], dim: usize) {
    let mut rows: Vec<Vec<f64>> = centroids.chunks_exact(dim).map(<[f64]>::to_vec).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    for (dst, row) in centroids.chunks_exact_mut(dim).zip(rows) {
        dst.copy_from_slice(&row);
    }
}

/// Distinct points with multiplicities, in sorted order.
fn distinct_points(points: &[f64], dim: usize, limit: usize) -> Option<Vec<(Vec<f64>, usize)>> {
    let mut rows: Vec<&[f64]> = points.chunks_exact(dim).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out: Vec<(Vec<f64>, usize)> = Vec::new();
    for row in rows {
        match out.last_mut() {
            Some((last, count)) if last.as_slice() == row => *count += 1,
            _ => {
                if out.len() == limit {
                    return None;
                }
                out.push((row.to_vec(), 1));
            }
        }
    }
    Some(out)
}

/// Fits `k` centroids to `points` (row-major, `dim` values per point).
pub fn kmeans(points: &[f64], dim: usize, k: usize, seed: u64) -> KMeansFit {
    assert!(dim > 0 && k > 0, "dim and k must be positive");
    assert!(
        !points.is_empty() && points.len() % dim == 0,
        "points must be a nonempty multiple of dim"
    );
    let n = points.len() / dim;

    if let Some(distinct) = distinct_points(points, dim, k) {
        return degenerate_fit(distinct, dim, k);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, dim, k, n, &mut rng);
    if dim == 1 {
        sort_centroids(&mut centroids, dim);
    }

    let mut assignment = vec![0usize; n];
    let mut distances = vec![0.0f64; n];
    let mut previous = f64::INFINITY;
    let mut iterations = 0;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut inertia = 0.0;
        for (i, p) in points.chunks_exact(dim).enumerate() {
            let (c, d) = nearest(p, &centroids, dim);
            assignment[i] = c;
            distances[i] = d;
            inertia += d;
        }

        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.chunks_exact(dim).zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..dim {
                    centroids[c * dim + j] = sums[c * dim + j] / counts[c] as f64;
                }
            } else {
                let far = distances
                    .iter()
                    .enumerate()
                    .fold(0, |best, (i, &d)| if d > distances[best] { i } else { best });
                centroids[c * dim..(c + 1) * dim]
                    .copy_from_slice(&points[far * dim..(far + 1) * dim]);
                distances[far] = 0.0;
            }
        }
        if dim == 1 {
            sort_centroids(&mut centroids, dim);
        }

        if previous.is_finite() && previous - inertia <= RELATIVE_TOLERANCE * previous {
            break;
        }
        previous = inertia;
    }

    // Inertia of the returned centroids.
    let final_inertia: f64 = points
        .chunks_exact(dim)
        .map(|p| nearest(p, &centroids, dim).1)
        .sum();
    sort_centroids(&mut centroids, dim);
    KMeansFit {
        centroids,
        dim,
        inertia: final_inertia,
        iterations,
        degenerate: false,
    }
}

fn seed_plus_plus(points: &[f64], dim: usize, k: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&points[first * dim..(first + 1) * dim]);
    let mut d2: Vec<f64> = points
        .chunks_exact(dim)
        .map(|p| dist2(p, &centroids[..dim]))
        .collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let threshold = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > threshold && d > 0.0 {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave the threshold past the last increment.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(&points[pick * dim..(pick + 1) * dim]);
        let c = centroids[start..start + dim].to_vec();
        for (slot, p) in d2.iter_mut().zip(points.chunks_exact(dim)) {
            *slot = slot.min(dist2(p, &c));
        }
    }
    centroids
}

/// Every distinct point becomes a centroid; the spare slots repeat the most
/// populous one.
fn degenerate_fit(distinct: Vec<(Vec<f64>, usize)>, dim: usize, k: usize) -> KMeansFit {
    let degenerate = distinct.len() < k;
    let heaviest = distinct
        .iter()
        .enumerate()
        .fold(0, |best, (i, (_, c))| if *c > distinct[best].1 { i } else { best });
    let mut centroids: Vec<f64> = distinct.iter().flat_map(|(p, _)| p.clone()).collect();
    for _ in distinct.len()..k {
        centroids.extend_from_slice(&distinct[heaviest].0);
    }
    sort_centroids(&mut centroids, dim);
    KMeansFit {
        centroids,
        dim,
        inertia: 0.0,
        iterations: 0,
        degenerate,
    }
}
