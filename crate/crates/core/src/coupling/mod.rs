//! Couplings between two finite spaces under a cross pseudo-metric.
//!
//! Costs computed here are quadratic transport costs for one *given* cross
//! distance. They are upper bounds on the transport distance between the
//! spaces, never the distance itself: the infimum over all cross
//! pseudo-metrics is not attempted.

mod transport;

use alloc::format;
use alloc::vec::Vec;

use crate::discretize::{Ambient, DiscretizationLink};
use crate::error::{check_arg, Error, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::{SpaceId, SubsetMask};

/// Largest support handled by [`ot_coupling`] on either side.
pub const OT_MAX_POINTS: usize = 2000;

/// Absolute tolerance on coupling marginals.
pub const MARGINAL_TOL: f64 = 1e-9;

/// Dense nonnegative matrix `d̂(a, b)` between points of space `A` (rows)
/// and space `B` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct CrossDistance {
    a: SpaceId,
    b: SpaceId,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CrossDistance {
    pub fn from_fn(
        a: &FiniteMetricMeasureSpace,
        b: &FiniteMetricMeasureSpace,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let (rows, cols) = (a.len(), b.len());
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::checked(a.id(), b.id(), rows, cols, data)
    }

    pub fn from_rows(a: &FiniteMetricMeasureSpace, b: &FiniteMetricMeasureSpace, matrix: &[Vec<f64>]) -> Result<Self> {
        if matrix.len() != a.len() {
            return Err(Error::DimensionMismatch {
                what: "cross distance rows",
                expected: a.len(),
                found: matrix.len(),
            });
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != b.len()) {
            return Err(Error::DimensionMismatch {
                what: "cross distance columns",
                expected: b.len(),
                found: row.len(),
            });
        }
        Self::from_fn(a, b, |i, j| matrix[i][j])
    }

    /// Distances in a common ambient model; both spaces need coordinates.
    pub fn ambient(a: &FiniteMetricMeasureSpace, b: &FiniteMetricMeasureSpace, ambient: Ambient) -> Result<Self> {
        let (Some(ca), Some(cb)) = (a.coords(), b.coords()) else {
            return Err(Error::Invalid("ambient cross distance needs coordinates on both spaces".into()));
        };
        Self::from_fn(a, b, |i, j| ambient.distance(&ca[i], &cb[j]))
    }

    /// Coarse points as rows, fine points as columns.
    pub fn from_link(link: &DiscretizationLink) -> Self {
        Self::from_fn(link.coarse_space(), link.fine_space(), |i, y| link.cross_distance(i, y))
            .expect("ambient distances are finite and nonnegative")
    }

    fn checked(a: SpaceId, b: SpaceId, rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.iter().any(|d| !d.is_finite()) {
            return Err(Error::NonFinite("cross distance"));
        }
        if let Some(d) = data.iter().find(|&&d| d < 0.0) {
            return Err(Error::InvalidArgument { name: "cross distance", value: *d, reason: "entries must be >= 0" });
        }
        Ok(CrossDistance { a, b, rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_space(&self) -> SpaceId {
        self.a
    }

    pub fn col_space(&self) -> SpaceId {
        self.b
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> CrossDistance {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        CrossDistance { a: self.b, b: self.a, rows: self.cols, cols: self.rows, data }
    }

    /// Largest violation of the mixed triangle inequalities
    /// `d̂(x,y) <= d_A(x,x') + d̂(x',y)` and `d̂(x,y) <= d̂(x,y') + d_B(y',y)`,
    /// or `None` when all hold within `tol`. Cost `O(|A||B|(|A|+|B|))`.
    pub fn mixed_triangle_violation(
        &self,
        a: &FiniteMetricMeasureSpace,
        b: &FiniteMetricMeasureSpace,
        tol: f64,
    ) -> Result<Option<f64>> {
        self.check_spaces(a, b)?;
        let mut worst = 0.0f64;
        for x in 0..self.rows {
            for y in 0..self.cols {
                let d = self.get(x, y);
                for xp in 0..self.rows {
                    worst = worst.max(d - (a.dist(x, xp) + self.get(xp, y)));
                }
                for yp in 0..self.cols {
                    worst = worst.max(d - (self.get(x, yp) + b.dist(yp, y)));
                }
            }
        }
        Ok((worst > tol).then_some(worst))
    }

    fn check_spaces(&self, a: &FiniteMetricMeasureSpace, b: &FiniteMetricMeasureSpace) -> Result<()> {
        if a.id() == self.a && b.id() == self.b && a.len() == self.rows && b.len() == self.cols {
            Ok(())
        } else {
            Err(Error::ParentMismatch)
        }
    }
}

/// A nonnegative joint mass matrix with prescribed marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    a: SpaceId,
    b: SpaceId,
    rows: usize,
    cols: usize,
    q: Vec<f64>,
}

impl Coupling {
    /// Validates nonnegativity and marginals against the spaces' weights.
    pub fn new(a: &FiniteMetricMeasureSpace, b: &FiniteMetricMeasureSpace, q: Vec<f64>, tol: f64) -> Result<Self> {
        let coupling = Self::unchecked(a.id(), b.id(), a.len(), b.len(), q)?;
        coupling.check_marginals(a.weights(), b.weights(), tol)?;
        Ok(coupling)
    }

    /// Builds from sparse `(row, col, mass)` triplets; repeated cells add up.
    pub fn from_triplets(
        a: &FiniteMetricMeasureSpace,
        b: &FiniteMetricMeasureSpace,
        triplets: &[(usize, usize, f64)],
        tol: f64,
    ) -> Result<Self> {
        let mut q = alloc::vec![0.0; a.len() * b.len()];
        for &(i, j, v) in triplets {
            if i >= a.len() {
                return Err(Error::IndexOutOfRange { index: i, len: a.len() });
            }
            if j >= b.len() {
                return Err(Error::IndexOutOfRange { index: j, len: b.len() });
            }
            q[i * b.len() + j] += v;
        }
        Self::new(a, b, q, tol)
    }

    fn unchecked(a: SpaceId, b: SpaceId, rows: usize, cols: usize, q: Vec<f64>) -> Result<Self> {
        if q.len() != rows * cols {
            return Err(Error::DimensionMismatch { what: "coupling matrix", expected: rows * cols, found: q.len() });
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("coupling"));
        }
        if let Some(v) = q.iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidArgument { name: "coupling entry", value: *v, reason: "entries must be >= 0" });
        }
        Ok(Coupling { a, b, rows, cols, q })
    }

    fn check_marginals(&self, wa: &[f64], wb: &[f64], tol: f64) -> Result<()> {
        let rows = self.row_marginals();
        let cols = self.col_marginals();
        for (what, got, want) in [("row", &rows, wa), ("column", &cols, wb)] {
            if let Some(i) = (0..want.len()).find(|&i| (got[i] - want[i]).abs() > tol) {
                return Err(Error::Invalid(format!("{what} marginal {i} is {} but the weight is {}", got[i], want[i])));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.cols + j]
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        self.q.chunks(self.cols.max(1)).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.cols];
        for row in self.q.chunks(self.cols.max(1)) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Coupling {
        let mut q = Vec::with_capacity(self.q.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                q.push(self.get(i, j));
            }
        }
        Coupling { a: self.b, b: self.a, rows: self.cols, cols: self.rows, q }
    }

    /// Nonzero entries as `(row, col, mass)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.q.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(c, &v)| (c / self.cols, c % self.cols, v))
    }

    fn check_cross(&self, cross: &CrossDistance) -> Result<()> {
        if cross.a == self.a && cross.b == self.b && cross.rows == self.rows && cross.cols == self.cols {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what: "cross distance vs coupling",
                expected: self.rows * self.cols,
                found: cross.rows * cross.cols,
            })
        }
    }
}

/// `(Σ d̂(x,y)^2 q(x,y))^{1/2}`.
pub fn coupling_cost(q: &Coupling, cross: &CrossDistance) -> Result<f64> {
    q.check_cross(cross)?;
    let sum: f64 = q.q.iter().zip(&cross.data).map(|(&m, &d)| d * d * m).sum();
    Ok(libm::sqrt(sum))
}

/// Transports each fine cell mass to its coarse center. Rows are coarse
/// points, columns fine points.
pub fn natural_discretization_coupling(link: &DiscretizationLink) -> Coupling {
    let coarse = link.coarse_space();
    let fine = link.fine_space();
    let mut q = alloc::vec![0.0; coarse.len() * fine.len()];
    for (y, &i) in link.assignment().iter().enumerate() {
        q[i * fine.len() + y] = fine.weights()[y];
    }
    Coupling::unchecked(coarse.id(), fine.id(), coarse.len(), fine.len(), q).expect("fine weights are positive")
}

/// Optimal coupling for the quadratic cost `d̂^2` (exact transportation
/// simplex). Returns the plan and its cost `(Σ d̂^2 q)^{1/2}`.
pub fn ot_coupling(weights_a: &[f64], weights_b: &[f64], cross: &CrossDistance) -> Result<(Coupling, f64)> {
    if weights_a.len() != cross.rows || weights_b.len() != cross.cols {
        return Err(Error::DimensionMismatch {
            what: "weights vs cross distance",
            expected: cross.rows * cross.cols,
            found: weights_a.len() * weights_b.len(),
        });
    }
    for (len, what) in [(cross.rows, "optimal transport rows"), (cross.cols, "optimal transport columns")] {
        if len > OT_MAX_POINTS {
            return Err(Error::Capacity { what, limit: OT_MAX_POINTS, found: len });
        }
    }
    if weights_a.iter().chain(weights_b).any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::Invalid("transport weights must be finite and >= 0".into()));
    }
    let (ta, tb): (f64, f64) = (weights_a.iter().sum(), weights_b.iter().sum());
    if (ta - tb).abs() > MARGINAL_TOL {
        return Err(Error::MassMismatch { a: ta, b: tb });
    }
    let cost: Vec<f64> = cross.data.iter().map(|d| d * d).collect();
    let plan = transport::solve(weights_a, weights_b, &cost)?;
    let coupling = Coupling::unchecked(cross.a, cross.b, cross.rows, cross.cols, plan)?;
    let value = coupling_cost(&coupling, cross)?;
    Ok((coupling, value))
}

/// `{x in A : min_{y in C} d̂(x, y) <= eps}` for `C` a subset of `B`.
pub fn transfer_set(cross: &CrossDistance, c: &SubsetMask, eps: f64) -> Result<SubsetMask> {
    check_arg(eps >= 0.0, "eps", eps, "must be >= 0")?;
    if c.parent() != cross.b || c.universe_len() != cross.cols {
        return Err(Error::ParentMismatch);
    }
    let members = c.to_indices();
    let inside = (0..cross.rows).map(|x| members.iter().any(|&y| cross.get(x, y) <= eps)).collect();
    Ok(SubsetMask::from_members(cross.a, inside))
}

/// Quantities of the Chebyshev-type transfer bound for one subset.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovBound {
    /// `q((A \ C^eps) x C)`.
    pub far_mass: f64,
    /// `cost^2 / eps^2`.
    pub bound: f64,
    pub transferred: SubsetMask,
    /// Row-marginal mass of `C^eps`.
    pub transferred_mass: f64,
    /// Column-marginal mass of `C`.
    pub source_mass: f64,
}

impl MarkovBound {
    pub fn far_mass_holds(&self, tol: f64) -> bool {
        self.far_mass <= self.bound + tol
    }

    /// `mass(C^eps) >= mass(C) - bound`.
    pub fn transfer_holds(&self, tol: f64) -> bool {
        self.transferred_mass >= self.source_mass - self.bound - tol
    }
}

pub fn markov_mass_bound(q: &Coupling, cross: &CrossDistance, c: &SubsetMask, eps: f64) -> Result<MarkovBound> {
    check_arg(eps > 0.0, "eps", eps, "the bound needs eps > 0")?;
    let cost = coupling_cost(q, cross)?;
    transfer_with_far_mass(q, cross, c, eps, cost * cost / (eps * eps))
}

/// [`MarkovBound`] with a caller-supplied `bound`; allows `eps = 0`.
pub(crate) fn transfer_with_far_mass(
    q: &Coupling,
    cross: &CrossDistance,
    c: &SubsetMask,
    eps: f64,
    bound: f64,
) -> Result<MarkovBound> {
    q.check_cross(cross)?;
    let transferred = transfer_set(cross, c, eps)?;
    let mut far_mass = 0.0;
    let mut source_mass = 0.0;
    let mut transferred_mass = 0.0;
    for x in 0..q.rows {
        let near = transferred.contains(x);
        for y in 0..q.cols {
            let v = q.get(x, y);
            if near {
                transferred_mass += v;
            }
            if c.contains(y) {
                source_mass += v;
                if !near {
                    far_mass += v;
                }
            }
        }
    }
    Ok(MarkovBound { far_mass, bound, transferred, transferred_mass, source_mass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::refine_link;
    use crate::discretize::ModelSpace;
    use crate::space::{index_labels, Metric};
    use alloc::vec;

    fn points(xs: &[f64], w: &[f64]) -> FiniteMetricMeasureSpace {
        let coords = xs.iter().map(|&x| vec![x]).collect();
        FiniteMetricMeasureSpace::from_coords(index_labels(xs.len()), coords, w.to_vec(), Metric::L1).unwrap()
    }

    #[test]
    fn cost_examples() {
        let a = points(&[0.0, 1.0], &[0.5, 0.5]);
        let b = points(&[0.0, 1.0], &[0.5, 0.5]);
        let cross = CrossDistance::ambient(&a, &b, Ambient::Norm(Metric::L1)).unwrap();
        let diag = Coupling::new(&a, &b, vec![0.5, 0.0, 0.0, 0.5], 1e-9).unwrap();
        assert_eq!(coupling_cost(&diag, &cross).unwrap(), 0.0);
        let uniform = Coupling::new(&a, &b, vec![0.25; 4], 1e-9).unwrap();
        assert_eq!(coupling_cost(&uniform, &cross).unwrap(), libm::sqrt(0.5));

        let p = points(&[0.0], &[1.0]);
        let r = points(&[2.0], &[1.0]);
        let cross = CrossDistance::ambient(&p, &r, Ambient::Norm(Metric::L1)).unwrap();
        let single = Coupling::new(&p, &r, vec![1.0], 1e-9).unwrap();
        assert_eq!(coupling_cost(&single, &cross).unwrap(), 2.0);
        let (ot, value) = ot_coupling(&[1.0], &[1.0], &cross).unwrap();
        assert_eq!(value, 2.0);
        assert_eq!(ot, single);
    }

    #[test]
    fn coupling_validation() {
        let a = points(&[0.0, 1.0], &[0.5, 0.5]);
        assert!(Coupling::new(&a, &a, vec![0.5, 0.0, 0.0, 0.4], 1e-9).is_err());
        assert!(Coupling::new(&a, &a, vec![0.6, -0.1, -0.1, 0.6], 1e-9).is_err());
        assert!(Coupling::new(&a, &a, vec![0.5; 3], 1e-9).is_err());
        let c = Coupling::from_triplets(&a, &a, &[(0, 0, 0.25), (0, 0, 0.25), (1, 1, 0.5)], 1e-9).unwrap();
        assert_eq!(c.entries().collect::<Vec<_>>(), vec![(0, 0, 0.5), (1, 1, 0.5)]);
    }

    #[test]
    fn ot_identical_spaces_is_free() {
        let a = points(&[0.0, 0.3, 0.7, 1.0], &[0.1, 0.2, 0.3, 0.4]);
        let cross = CrossDistance::from_fn(&a, &a, |i, j| a.dist(i, j)).unwrap();
        let (q, value) = ot_coupling(a.weights(), a.weights(), &cross).unwrap();
        assert_eq!(value, 0.0);
        assert!(q.entries().all(|(i, j, _)| i == j));
    }

    #[test]
    fn ot_errors() {
        let a = points(&[0.0, 1.0], &[0.5, 0.5]);
        let cross = CrossDistance::from_fn(&a, &a, |i, j| a.dist(i, j)).unwrap();
        assert!(matches!(ot_coupling(&[0.5, 0.6], &[0.5, 0.5], &cross), Err(Error::MassMismatch { .. })));
        assert!(matches!(ot_coupling(&[1.0], &[0.5, 0.5], &cross), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn natural_coupling_on_interval() {
        let link = refine_link(&ModelSpace::uniform_box(vec![1.0], Metric::L2), &[2], &[4]).unwrap();
        let q = natural_discretization_coupling(&link);
        let expected = [0.25, 0.25, 0.0, 0.0, 0.0, 0.0, 0.25, 0.25];
        for (c, &v) in expected.iter().enumerate() {
            assert_eq!(q.get(c / 4, c % 4), v);
        }
        let cross = CrossDistance::from_link(&link);
        assert!(coupling_cost(&q, &cross).unwrap() <= 0.125);

        let same = refine_link(&ModelSpace::uniform_box(vec![1.0], Metric::L2), &[4], &[4]).unwrap();
        let q = natural_discretization_coupling(&same);
        assert!(q.entries().all(|(i, j, _)| i == j));
        assert_eq!(coupling_cost(&q, &CrossDistance::from_link(&same)).unwrap(), 0.0);
    }

    #[test]
    fn transfer_set_examples() {
        let a = points(&[0.0, 1.0, 2.0], &[1.0; 3]);
        let b = points(&[0.5, 3.0], &[1.5, 1.5]);
        let cross = CrossDistance::ambient(&a, &b, Ambient::Norm(Metric::L1)).unwrap();
        assert!(transfer_set(&cross, &b.empty_subset(), 10.0).unwrap().is_empty());
        assert!(transfer_set(&cross, &b.full_subset(), 3.0).unwrap().is_full());
        let near = transfer_set(&cross, &b.subset(&[0]).unwrap(), 0.5).unwrap();
        assert_eq!(near.to_indices(), vec![0, 1]);
        assert_eq!(near.parent(), a.id());
        assert_eq!(transfer_set(&cross, &a.full_subset(), 1.0), Err(Error::ParentMismatch));
    }

    #[test]
    fn markov_examples() {
        let p = points(&[0.0], &[1.0]);
        let r = points(&[1.0], &[1.0]);
        let cross = CrossDistance::ambient(&p, &r, Ambient::Norm(Metric::L1)).unwrap();
        let q = Coupling::new(&p, &r, vec![1.0], 1e-9).unwrap();
        let m = markov_mass_bound(&q, &cross, &r.full_subset(), 2.0).unwrap();
        assert_eq!((m.far_mass, m.bound), (0.0, 0.25));
        assert!(markov_mass_bound(&q, &cross, &r.full_subset(), 0.0).is_err());

        // two transported pairs: 0.9 at distance 0.1, 0.1 at distance 1
        let a = points(&[0.0, 5.0], &[0.9, 0.1]);
        let b = points(&[0.1, 6.0], &[0.9, 0.1]);
        let cross = CrossDistance::ambient(&a, &b, Ambient::Norm(Metric::L1)).unwrap();
        let q = Coupling::new(&a, &b, vec![0.9, 0.0, 0.0, 0.1], 1e-9).unwrap();
        let m = markov_mass_bound(&q, &cross, &b.full_subset(), 0.5).unwrap();
        assert!((m.far_mass - 0.1).abs() < 1e-15);
        assert!((m.bound - 0.436).abs() < 1e-12);
        assert!(m.far_mass_holds(1e-12));
        assert!(m.transfer_holds(1e-12));
    }

    #[test]
    fn zero_cost_coupling_has_no_far_mass() {
        let a = points(&[0.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        let cross = CrossDistance::from_fn(&a, &a, |i, j| a.dist(i, j)).unwrap();
        let q = Coupling::new(&a, &a, vec![0.2, 0.0, 0.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.5], 1e-9).unwrap();
        for eps in [1e-6, 0.5, 3.0] {
            let m = markov_mass_bound(&q, &cross, &a.subset(&[1, 2]).unwrap(), eps).unwrap();
            assert_eq!(m.far_mass, 0.0);
        }
    }

    #[test]
    fn mixed_triangle_check() {
        let a = points(&[0.0, 1.0], &[0.5, 0.5]);
        let b = points(&[0.0, 1.0], &[0.5, 0.5]);
        let good = CrossDistance::ambient(&a, &b, Ambient::Norm(Metric::L1)).unwrap();
        assert_eq!(good.mixed_triangle_violation(&a, &b, 1e-12).unwrap(), None);
        let bad = CrossDistance::from_rows(&a, &b, &[vec![0.0, 5.0], vec![1.0, 0.0]]).unwrap();
        assert!(bad.mixed_triangle_violation(&a, &b, 1e-12).unwrap().is_some());
    }
}
