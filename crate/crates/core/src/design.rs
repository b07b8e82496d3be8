//! Space-filling sample designs over the unit hypercube.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::genome::FeatureMatrix;

/// Random Latin hypercube of `n` points in `[0, 1)^dims`: every column has
/// exactly one point in each interval `[k/n, (k+1)/n)`.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, dims: usize, rng: &mut R) -> FeatureMatrix {
    assert!(n > 0 && dims > 0, "design needs points and dimensions");
    let mut data = alloc::vec![0.0; n * dims];
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..dims {
        strata.shuffle(rng);
        for (i, &k) in strata.iter().enumerate() {
            // random() is in [0, 1), so the point stays inside its stratum.
            let v = (k as f64 + rng.random::<f64>()) / n as f64;
            data[i * dims + j] = v.min(libm::nextafter((k + 1) as f64 / n as f64, 0.0));
        }
    }
    FeatureMatrix::new(dims, data)
}

/// Smallest pairwise Euclidean distance between rows.
pub fn min_pairwise_distance(points: &FeatureMatrix) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.n_rows() {
        for j in 0..i {
            let d2: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            best = best.min(d2);
        }
    }
    libm::sqrt(best)
}

/// Best of `draws` random Latin hypercubes by the maximin criterion. Earlier
/// draws win ties.
pub fn maximin_latin_hypercube<R: Rng + ?Sized>(n: usize, dims: usize, draws: usize, rng: &mut R) -> FeatureMatrix {
    assert!(draws > 0, "at least one draw");
    let mut best = latin_hypercube(n, dims, rng);
    let mut best_score = min_pairwise_distance(&best);
    for _ in 1..draws {
        let candidate = latin_hypercube(n, dims, rng);
        let score = min_pairwise_distance(&candidate);
        if score > best_score {
            best = candidate;
            best_score = score;
        }
    }
    best
}
