//! Finite metric measure spaces: a dense distance matrix plus strictly
//! positive point masses.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::subset::{SpaceId, SubsetMask};

/// Norms available for coordinate-derived distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    L1,
    L2,
    LInf,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        self.norm(a.iter().zip(b).map(|(x, y)| x - y))
    }

    pub fn norm(self, v: impl Iterator<Item = f64>) -> f64 {
        match self {
            Metric::L1 => v.map(f64::abs).sum(),
            Metric::L2 => libm::sqrt(v.map(|x| x * x).sum()),
            Metric::LInf => v.map(f64::abs).fold(0.0, f64::max),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::LInf => "linf",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "l1" => Some(Metric::L1),
            "l2" => Some(Metric::L2),
            "linf" => Some(Metric::LInf),
            _ => None,
        }
    }
}

/// A finite metric measure space `(X, d, m)`.
///
/// Construction only enforces structure (matching dimensions, finite
/// entries). The metric axioms and full support are checked by
/// [`FiniteMetricMeasureSpace::validate`], which reports every violation
/// instead of stopping at the first one.
#[derive(Debug, Clone)]
pub struct FiniteMetricMeasureSpace {
    id: SpaceId,
    labels: Vec<String>,
    dist: Vec<f64>,
    weights: Vec<f64>,
    coords: Option<Vec<Vec<f64>>>,
}

pub fn index_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{i}")).collect()
}

impl FiniteMetricMeasureSpace {
    /// Builds a space from a row-major `n * n` distance buffer.
    pub fn from_flat(labels: Vec<String>, dist: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if labels.len() != n {
            return Err(Error::DimensionMismatch { what: "labels", expected: n, found: labels.len() });
        }
        if dist.len() != n * n {
            return Err(Error::DimensionMismatch { what: "distance matrix", expected: n * n, found: dist.len() });
        }
        if dist.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("distance matrix"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("weights"));
        }
        Ok(FiniteMetricMeasureSpace { id: SpaceId::fresh(), labels, dist, weights, coords: None })
    }

    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>], weights: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        if rows.len() != n {
            return Err(Error::DimensionMismatch { what: "distance matrix rows", expected: n, found: rows.len() });
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch { what: "distance matrix row", expected: n, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(labels, flat, weights)
    }

    /// Derives distances from coordinates. Each unordered pair is computed
    /// once, so the resulting matrix is exactly symmetric.
    pub fn from_coords(labels: Vec<String>, coords: Vec<Vec<f64>>, weights: Vec<f64>, metric: Metric) -> Result<Self> {
        Self::from_coords_with(labels, coords, weights, |a, b| metric.distance(a, b))
    }

    pub fn from_coords_with(
        labels: Vec<String>,
        coords: Vec<Vec<f64>>,
        weights: Vec<f64>,
        distance: impl Fn(&[f64], &[f64]) -> f64,
    ) -> Result<Self> {
        let n = weights.len();
        if coords.len() != n {
            return Err(Error::DimensionMismatch { what: "coordinates", expected: n, found: coords.len() });
        }
        let dim = coords.first().map_or(0, Vec::len);
        if let Some(bad) = coords.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { what: "coordinate vector", expected: dim, found: bad.len() });
        }
        let mut dist = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance(&coords[i], &coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let mut space = Self::from_flat(labels, dist, weights)?;
        space.coords = Some(coords);
        Ok(space)
    }

    /// Attaches coordinate metadata without touching the distances.
    pub fn with_coords(mut self, coords: Vec<Vec<f64>>) -> Result<Self> {
        if coords.len() != self.len() {
            return Err(Error::DimensionMismatch { what: "coordinates", expected: self.len(), found: coords.len() });
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn dist_flat(&self) -> &[f64] {
        &self.dist
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Largest matrix entry; equals the diameter for a valid space.
    pub fn max_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn empty_subset(&self) -> SubsetMask {
        SubsetMask::new_empty(self.id, self.len())
    }

    pub fn full_subset(&self) -> SubsetMask {
        SubsetMask::new_full(self.id, self.len())
    }

    pub fn subset(&self, indices: &[usize]) -> Result<SubsetMask> {
        SubsetMask::with_indices(self.id, self.len(), indices)
    }

    pub fn subset_from_members(&self, members: Vec<bool>) -> Result<SubsetMask> {
        if members.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "membership vector",
                expected: self.len(),
                found: members.len(),
            });
        }
        Ok(SubsetMask::from_members(self.id, members))
    }

    pub fn subset_where(&self, pred: impl FnMut(usize) -> bool) -> SubsetMask {
        SubsetMask::from_members(self.id, (0..self.len()).map(pred).collect())
    }

    pub fn check_owns(&self, subset: &SubsetMask) -> Result<()> {
        if subset.parent() == self.id && subset.universe_len() == self.len() {
            Ok(())
        } else {
            Err(Error::ParentMismatch)
        }
    }

    /// Default triangle tolerance: `1e-9` times the largest entry.
    pub fn default_triangle_tolerance(&self) -> f64 {
        DEFAULT_RELATIVE_TRIANGLE_TOL * self.max_distance()
    }

    /// Checks the metric axioms and full support. Cost is `O(n^3)` because
    /// of the triangle scan.
    pub fn validate(&self, tol_tri: Option<f64>) -> ValidationReport {
        let n = self.len();
        let tol = tol_tri.unwrap_or_else(|| self.default_triangle_tolerance());
        let mut violations = Vec::new();

        for i in 0..n {
            let d = self.dist(i, i);
            if d != 0.0 {
                violations.push(Violation::NonZeroDiagonal { i, value: d });
            }
        }
        for i in 0..n {
            for j in 0..n {
                let d = self.dist(i, j);
                if d < 0.0 {
                    violations.push(Violation::NegativeDistance { i, j, value: d });
                }
                if i < j && d != self.dist(j, i) {
                    violations.push(Violation::Asymmetry { i, j, forward: d, backward: self.dist(j, i) });
                }
            }
        }

        let mut count = 0usize;
        let mut worst: Option<(usize, usize, usize, f64)> = None;
        for i in 0..n {
            let row_i = self.row(i);
            for j in 0..n {
                let dij = row_i[j];
                let row_j = self.row(j);
                for k in 0..n {
                    let excess = row_i[k] - (dij + row_j[k]);
                    if excess > tol {
                        count += 1;
                        if worst.is_none_or(|w| excess > w.3) {
                            worst = Some((i, j, k, excess));
                        }
                    }
                }
            }
        }
        if let Some((i, j, k, excess)) = worst {
            violations.push(Violation::Triangle { count, worst: (i, j, k), excess });
        }

        for (i, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                violations.push(Violation::NonPositiveWeight { i, value: w });
            }
        }
        ValidationReport { tolerance: tol, violations }
    }
}

pub const DEFAULT_RELATIVE_TRIANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonZeroDiagonal {
        i: usize,
        value: f64,
    },
    NegativeDistance {
        i: usize,
        j: usize,
        value: f64,
    },
    Asymmetry {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },
    /// `d(i,k) > d(i,j) + d(j,k) + tol`; only the worst triple is kept.
    Triangle {
        count: usize,
        worst: (usize, usize, usize),
        excess: f64,
    },
    NonPositiveWeight {
        i: usize,
        value: f64,
    },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::NonZeroDiagonal { .. } => "nonzero-diagonal",
            Violation::NegativeDistance { .. } => "negative-distance",
            Violation::Asymmetry { .. } => "asymmetry",
            Violation::Triangle { .. } => "triangle",
            Violation::NonPositiveWeight { .. } => "nonpositive-weight",
        }
    }
}

impl core::fmt::Display for Violation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Violation::NonZeroDiagonal { i, value } => write!(f, "d({i},{i}) = {value}, expected 0"),
            Violation::NegativeDistance { i, j, value } => write!(f, "d({i},{j}) = {value} is negative"),
            Violation::Asymmetry { i, j, forward, backward } => {
                write!(f, "d({i},{j}) = {forward} but d({j},{i}) = {backward}")
            }
            Violation::Triangle { count, worst: (i, j, k), excess } => write!(
                f,
                "{count} triangle violation(s); worst triple ({i},{j},{k}): d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess}"
            ),
            Violation::NonPositiveWeight { i, value } => write!(f, "weight of point {i} is {value}, must be > 0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub tolerance: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}
