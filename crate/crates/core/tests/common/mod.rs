#![allow(dead_code)]

use mmbm_core::space::index_labels;
use mmbm_core::{FiniteMetricMeasureSpace, Metric, SubsetMask};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in the unit square, l2 metric, random positive weights.
pub fn random_square_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricMeasureSpace {
    let coords = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let weights = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
    FiniteMetricMeasureSpace::from_coords(index_labels(n), coords, weights, Metric::L2).unwrap()
}

/// Same, with weights normalized to total mass 1.
pub fn random_probability_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricMeasureSpace {
    let coords = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    FiniteMetricMeasureSpace::from_coords(index_labels(n), coords, weights, Metric::L2).unwrap()
}

/// Each point kept with probability `p`.
pub fn random_subset(rng: &mut ChaCha8Rng, space: &FiniteMetricMeasureSpace, p: f64) -> SubsetMask {
    space.subset_where(|_| rng.random::<f64>() < p)
}

pub fn random_nonempty_subset(rng: &mut ChaCha8Rng, space: &FiniteMetricMeasureSpace, p: f64) -> SubsetMask {
    let mut s = random_subset(rng, space, p);
    if s.is_empty() {
        s.insert(rng.random_range(0..space.len())).unwrap();
    }
    s
}

/// Points `0, 1/(n-1), ..., 1` on a line, l1 metric, equal weights.
pub fn line(n: usize, total: f64) -> FiniteMetricMeasureSpace {
    let coords = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
    FiniteMetricMeasureSpace::from_coords(index_labels(n), coords, vec![total / n as f64; n], Metric::L1).unwrap()
}

/// Graph metric of the `n`-cycle with unit edges, equal weights `1/n`.
pub fn cycle(n: usize) -> FiniteMetricMeasureSpace {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let t = i.abs_diff(j);
                    t.min(n - t) as f64
                })
                .collect()
        })
        .collect();
    FiniteMetricMeasureSpace::from_rows(index_labels(n), &rows, vec![1.0 / n as f64; n]).unwrap()
}

/// Independent reading of the definition: the set of `x` with a witness
/// pair, computed from raw distance rows.
pub fn naive_intermediate(d: &[Vec<f64>], k: &[usize], l: &[usize], s: f64, h: f64) -> Vec<bool> {
    (0..d.len())
        .map(|x| {
            k.iter().any(|&a| {
                l.iter().any(|&b| {
                    let (dax, dxb, dab) = (d[a][x], d[x][b], d[a][b]);
                    (dax - s * dab).abs() <= h && (dxb - (1.0 - s) * dab).abs() <= h
                })
            })
        })
        .collect()
}

pub fn dist_rows(space: &FiniteMetricMeasureSpace) -> Vec<Vec<f64>> {
    (0..space.len()).map(|i| space.row(i).to_vec()).collect()
}
