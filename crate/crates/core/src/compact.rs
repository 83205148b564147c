//! Declarative subsets of a model, resolved on any grid over it.
//!
//! A grid point belongs to the resolved subset when its closed cell meets
//! the region. A single-cell grid therefore resolves every nonempty region
//! to the whole space.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{Ambient, Grid};
use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::SubsetMask;

#[derive(Debug, Clone, PartialEq)]
pub enum CompactSpec {
    /// Closed ambient ball.
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    /// `lo <= x_axis <= hi`.
    Slab {
        axis: usize,
        lo: f64,
        hi: f64,
    },
    /// Axis-aligned box `[lo, hi]`.
    Rect {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// Union of `count` balls of the given radius with centers drawn
    /// uniformly from the model; the centers depend only on the seed.
    RandomUnion {
        count: usize,
        radius: f64,
    },
    /// Explicit grid indices; only meaningful at one resolution.
    Indices(Vec<usize>),
    All,
}

impl CompactSpec {
    /// `space` must be the discretization of `grid`. `seed` feeds
    /// [`CompactSpec::RandomUnion`] only. Errors when the result is empty.
    pub fn resolve(&self, grid: &Grid, space: &FiniteMetricMeasureSpace, seed: u64) -> Result<SubsetMask> {
        if space.len() != grid.len() {
            return Err(Error::DimensionMismatch { what: "grid space", expected: grid.len(), found: space.len() });
        }
        let dims = grid.model().dims();
        let check_dims = |what: &'static str, v: &[f64]| {
            if v.len() == dims {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected: dims, found: v.len() })
            }
        };
        let check_radius = |r: f64| {
            if r >= 0.0 && r.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument { name: "radius", value: r, reason: "must be finite and >= 0" })
            }
        };
        let subset = match self {
            CompactSpec::Ball { center, radius } => {
                check_dims("ball center", center)?;
                check_radius(*radius)?;
                space.subset_where(|i| cell_distance(grid, i, center) <= *radius)
            }
            CompactSpec::Slab { axis, lo, hi } => {
                if *axis >= dims {
                    return Err(Error::IndexOutOfRange { index: *axis, len: dims });
                }
                if !(lo <= hi) {
                    return Err(Error::Invalid(format!("slab bounds [{lo}, {hi}] are not ordered")));
                }
                space.subset_where(|i| {
                    let (a, b) = grid.cell_bounds(i);
                    a[*axis] <= *hi && b[*axis] >= *lo
                })
            }
            CompactSpec::Rect { lo, hi } => {
                check_dims("rectangle lower corner", lo)?;
                check_dims("rectangle upper corner", hi)?;
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::Invalid("rectangle corners are not ordered".into()));
                }
                space.subset_where(|i| {
                    let (a, b) = grid.cell_bounds(i);
                    (0..dims).all(|k| a[k] <= hi[k] && b[k] >= lo[k])
                })
            }
            CompactSpec::RandomUnion { count, radius } => {
                check_radius(*radius)?;
                let centers = random_centers(grid, *count, seed);
                space.subset_where(|i| centers.iter().any(|c| cell_distance(grid, i, c) <= *radius))
            }
            CompactSpec::Indices(indices) => space.subset(indices)?,
            CompactSpec::All => space.full_subset(),
        };
        if subset.is_empty() {
            return Err(Error::Invalid(format!(
                "compact resolves to the empty set on a grid of {} points",
                grid.len()
            )));
        }
        Ok(subset)
    }
}

fn random_centers(grid: &Grid, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = grid.model();
    (0..count).map(|_| (0..model.dims()).map(|k| rng.random::<f64>() * model.extent(k)).collect()).collect()
}

/// Ambient distance from `p` to the closed cell `i`.
fn cell_distance(grid: &Grid, i: usize, p: &[f64]) -> f64 {
    let (lo, hi) = grid.cell_bounds(i);
    match grid.model().ambient() {
        Ambient::Norm(metric) => metric.norm((0..p.len()).map(|k| (lo[k] - p[k]).max(p[k] - hi[k]).max(0.0))),
        arc @ Ambient::Arc { circumference } => {
            let r = libm::fmod(p[0], circumference);
            let t = if r < 0.0 { r + circumference } else { r };
            if lo[0] <= t && t <= hi[0] {
                0.0
            } else {
                arc.distance(&[t], &lo[..1]).min(arc.distance(&[t], &hi[..1]))
            }
        }
    }
}
