//! Elementary quantities on subsets: mass, metric dilation and the
//! min/max cross distance between two subsets.

use crate::error::{check_arg, Error, Result};
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::SubsetMask;

/// Sum of the weights of the members, in index order. `mass(∅) = 0`.
pub fn mass(space: &FiniteMetricMeasureSpace, subset: &SubsetMask) -> Result<f64> {
    space.check_owns(subset)?;
    Ok(subset.indices().fold(0.0, |acc, i| acc + space.weights()[i]))
}

/// `{y : min_{a in A} d(a, y) <= eps}`.
pub fn dilate(space: &FiniteMetricMeasureSpace, subset: &SubsetMask, eps: f64) -> Result<SubsetMask> {
    space.check_owns(subset)?;
    check_arg(eps >= 0.0, "eps", eps, "dilation radius must be >= 0")?;
    let members: alloc::vec::Vec<usize> = subset.to_indices();
    Ok(space.subset_where(|y| members.iter().any(|&a| space.dist(a, y) <= eps)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaMode {
    Min,
    Max,
}

/// Minimal or maximal cross distance between two nonempty subsets.
pub fn theta(space: &FiniteMetricMeasureSpace, k: &SubsetMask, l: &SubsetMask, mode: ThetaMode) -> Result<f64> {
    space.check_owns(k)?;
    space.check_owns(l)?;
    if k.is_empty() || l.is_empty() {
        return Err(Error::Invalid("theta is undefined when either subset is empty".into()));
    }
    let cross = k.indices().flat_map(|a| l.indices().map(move |b| space.dist(a, b)));
    Ok(match mode {
        ThetaMode::Min => cross.fold(f64::INFINITY, f64::min),
        ThetaMode::Max => cross.fold(f64::NEG_INFINITY, f64::max),
    })
}
