//! Evaluation of the dimensional and multiplicative Brunn-Minkowski
//! inequalities on subset pairs.

mod exhaustive;
mod search;

pub use exhaustive::{bm_exhaustive_check, EXHAUSTIVE_MAX_POINTS};
pub use search::{bm_search_violations, Proposal, SearchConfig};

use alloc::vec::Vec;

use crate::error::Result;
use crate::intermediate::intermediate_set;
use crate::measure::mass;
use crate::query::{check_interpolation, BMQuery};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::SubsetMask;

/// Absolute tolerance on the deficit separating violations from rounding.
pub const DEFAULT_TOL_REPORT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BMStatus {
    Satisfied,
    Violated,
    /// One of the input subsets is empty.
    Vacuous,
}

impl BMStatus {
    pub fn name(self) -> &'static str {
        match self {
            BMStatus::Satisfied => "satisfied",
            BMStatus::Violated => "violated",
            BMStatus::Vacuous => "vacuous",
        }
    }

    fn classify(vacuous: bool, deficit: f64, tol: f64) -> Self {
        if vacuous {
            BMStatus::Vacuous
        } else if deficit >= -tol {
            BMStatus::Satisfied
        } else {
            BMStatus::Violated
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BMKind {
    /// `m^{1/N}(C_s^h) >= (1-s) m^{1/N}(C0) + s m^{1/N}(C1)`
    Dimensional,
    /// `m(C_s^h) >= m(C0)^{1-s} m(C1)^s`
    Multiplicative,
}

/// Outcome of one inequality evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BMReport {
    pub kind: BMKind,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub status: BMStatus,
    /// `None` for the multiplicative inequality.
    pub dim: Option<f64>,
    pub s: f64,
    pub h: f64,
    pub k: SubsetMask,
    pub l: SubsetMask,
    pub witness: SubsetMask,
}

impl BMReport {
    pub fn is_violation(&self) -> bool {
        self.status == BMStatus::Violated
    }

    /// Re-classifies under a different deficit tolerance.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        let vacuous = self.status == BMStatus::Vacuous;
        self.status = BMStatus::classify(vacuous, self.deficit, tol);
        self
    }
}

/// `x^{1/N}` with `0^{1/N} = 0`.
pub fn dim_root(x: f64, dim: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::pow(x, 1.0 / dim)
    }
}

pub fn bm_check(
    space: &FiniteMetricMeasureSpace,
    c0: &SubsetMask,
    c1: &SubsetMask,
    query: BMQuery,
) -> Result<BMReport> {
    bm_check_tol(space, c0, c1, query, DEFAULT_TOL_REPORT)
}

pub fn bm_check_tol(
    space: &FiniteMetricMeasureSpace,
    c0: &SubsetMask,
    c1: &SubsetMask,
    query: BMQuery,
    tol: f64,
) -> Result<BMReport> {
    let (s, h, n) = (query.s(), query.h(), query.dim());
    let witness = intermediate_set(space, c0, c1, s, h)?;
    let lhs = dim_root(mass(space, &witness)?, n);
    let rhs = (1.0 - s) * dim_root(mass(space, c0)?, n) + s * dim_root(mass(space, c1)?, n);
    let deficit = lhs - rhs;
    Ok(BMReport {
        kind: BMKind::Dimensional,
        lhs,
        rhs,
        deficit,
        status: BMStatus::classify(c0.is_empty() || c1.is_empty(), deficit, tol),
        dim: Some(n),
        s,
        h,
        k: c0.clone(),
        l: c1.clone(),
        witness,
    })
}

pub fn bm_mult_check(
    space: &FiniteMetricMeasureSpace,
    c0: &SubsetMask,
    c1: &SubsetMask,
    s: f64,
    h: f64,
) -> Result<BMReport> {
    bm_mult_check_tol(space, c0, c1, s, h, DEFAULT_TOL_REPORT)
}

pub fn bm_mult_check_tol(
    space: &FiniteMetricMeasureSpace,
    c0: &SubsetMask,
    c1: &SubsetMask,
    s: f64,
    h: f64,
    tol: f64,
) -> Result<BMReport> {
    check_interpolation(s, h)?;
    let witness = intermediate_set(space, c0, c1, s, h)?;
    let lhs = mass(space, &witness)?;
    let rhs = libm::pow(mass(space, c0)?, 1.0 - s) * libm::pow(mass(space, c1)?, s);
    let deficit = lhs - rhs;
    Ok(BMReport {
        kind: BMKind::Multiplicative,
        lhs,
        rhs,
        deficit,
        status: BMStatus::classify(c0.is_empty() || c1.is_empty(), deficit, tol),
        dim: None,
        s,
        h,
        k: c0.clone(),
        l: c1.clone(),
        witness,
    })
}

/// `{0, 0.1, ..., 0.9, 1}`.
pub fn default_s_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub(crate) fn check_s_grid(s_grid: &[f64]) -> Result<()> {
    if s_grid.is_empty() {
        return Err(crate::error::Error::Invalid("s grid must not be empty".into()));
    }
    s_grid.iter().try_for_each(|&s| check_interpolation(s, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{index_labels, Metric};
    use alloc::vec;

    fn two_point() -> FiniteMetricMeasureSpace {
        FiniteMetricMeasureSpace::from_coords(index_labels(2), vec![vec![0.0], vec![1.0]], vec![0.5, 0.5], Metric::L1)
            .unwrap()
    }

    #[test]
    fn two_point_space_has_no_exact_midpoint() {
        let x = two_point();
        let (a, b) = (x.subset(&[0]).unwrap(), x.subset(&[1]).unwrap());
        let r = bm_check(&x, &a, &b, BMQuery::new(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!((r.lhs, r.rhs, r.deficit), (0.0, 0.5, -0.5));
        assert_eq!(r.status, BMStatus::Violated);

        let r = bm_check(&x, &a, &b, BMQuery::new(1.0, 0.5, 0.5).unwrap()).unwrap();
        assert!(r.witness.is_full());
        assert_eq!((r.lhs, r.rhs), (1.0, 0.5));
        assert_eq!(r.status, BMStatus::Satisfied);

        let r = bm_mult_check(&x, &a, &b, 0.5, 0.0).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!((r.rhs - 0.5).abs() <= 1e-15);
        assert_eq!(r.status, BMStatus::Violated);
    }

    #[test]
    fn full_pair_has_zero_deficit() {
        let x = two_point();
        let all = x.full_subset();
        for n in [1.0, 2.0, 3.5] {
            for s in [0.0, 0.3, 1.0] {
                let r = bm_check(&x, &all, &all, BMQuery::new(n, s, 0.0).unwrap()).unwrap();
                assert_eq!(r.deficit, 0.0);
                assert_eq!(r.status, BMStatus::Satisfied);
            }
        }
        let r = bm_mult_check(&x, &all, &all, 0.4, 0.0).unwrap();
        assert_eq!(r.deficit, 0.0);
    }

    #[test]
    fn empty_input_is_vacuous() {
        let x = two_point();
        let r = bm_check(&x, &x.empty_subset(), &x.full_subset(), BMQuery::new(1.0, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!(r.status, BMStatus::Vacuous);
        let r = bm_mult_check(&x, &x.full_subset(), &x.empty_subset(), 0.5, 0.0).unwrap();
        assert_eq!(r.status, BMStatus::Vacuous);
    }

    #[test]
    fn parent_mismatch() {
        let x = two_point();
        let y = two_point();
        let q = BMQuery::new(1.0, 0.5, 0.0).unwrap();
        assert!(bm_check(&x, &y.full_subset(), &x.full_subset(), q).is_err());
    }

    #[test]
    fn dim_root_zero() {
        assert_eq!(dim_root(0.0, 3.0), 0.0);
        assert_eq!(dim_root(8.0, 3.0), 2.0);
    }
}
