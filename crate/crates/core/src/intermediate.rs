//! The `h`-approximated `s`-intermediate set between two subsets:
//!
//! ```text
//! C_s^h = { x : ∃ (x0, x1) ∈ K × L,
//!               |d(x0, x) − s·d(x0, x1)|     ≤ h,
//!               |d(x, x1) − (1−s)·d(x0, x1)| ≤ h }
//! ```
//!
//! Comparisons are exact `<=` on `f64`; `h` is the only tolerance.

use alloc::vec::Vec;

use crate::error::Result;
use crate::query::check_interpolation;
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::SubsetMask;

/// The two defining constraints for a candidate `x` and witness pair
/// `(x0, x1)`. Every evaluation path goes through this predicate so the
/// fast and exhaustive paths agree bit for bit with the scan.
#[inline(always)]
pub fn is_intermediate(d_x0_x: f64, d_x_x1: f64, d_x0_x1: f64, s: f64, h: f64) -> bool {
    (d_x0_x - s * d_x0_x1).abs() <= h && (d_x_x1 - (1.0 - s) * d_x0_x1).abs() <= h
}

fn check_inputs(space: &FiniteMetricMeasureSpace, k: &SubsetMask, l: &SubsetMask, s: f64, h: f64) -> Result<()> {
    check_interpolation(s, h)?;
    space.check_owns(k)?;
    space.check_owns(l)
}

/// Exhaustive scan over all `(x, x0, x1)` triples. `O(|X|·|K|·|L|)`.
pub fn intermediate_set_bruteforce(
    space: &FiniteMetricMeasureSpace,
    k: &SubsetMask,
    l: &SubsetMask,
    s: f64,
    h: f64,
) -> Result<SubsetMask> {
    check_inputs(space, k, l, s, h)?;
    let ks = k.to_indices();
    let ls = l.to_indices();
    Ok(space.subset_where(|x| {
        ks.iter().any(|&x0| {
            ls.iter().any(|&x1| is_intermediate(space.dist(x0, x), space.dist(x, x1), space.dist(x0, x1), s, h))
        })
    }))
}

// Relative padding on the pruning radii. Pruning only discards candidates,
// the exact predicate still decides membership, so the padding must merely
// dominate the rounding in `|a - b| <= h  =>  a <= b + h`.
const PRUNE_SLACK: f64 = 1e-9;

fn padded(radius: f64) -> f64 {
    radius + radius * PRUNE_SLACK + f64::MIN_POSITIVE
}

/// Same set as [`intermediate_set_bruteforce`], with pruning.
///
/// A witness `(x0, x1)` for `x` needs `d(x0, x) <= s·Θmax + h` and
/// `d(x, x1) <= (1−s)·Θmax + h`, where `Θmax` is the largest cross distance
/// between `K` and `L`. Candidates with no such `x0` or `x1` are skipped and
/// the witness loop stops at the first hit (`K` outer, `L` inner).
pub fn intermediate_set(
    space: &FiniteMetricMeasureSpace,
    k: &SubsetMask,
    l: &SubsetMask,
    s: f64,
    h: f64,
) -> Result<SubsetMask> {
    check_inputs(space, k, l, s, h)?;
    if k.is_empty() || l.is_empty() {
        return Ok(space.empty_subset());
    }
    let ks = k.to_indices();
    let ls = l.to_indices();
    let max_cross = ks.iter().flat_map(|&a| ls.iter().map(move |&b| space.dist(a, b))).fold(0.0, f64::max);
    let reach0 = padded(s * max_cross + h);
    let reach1 = padded((1.0 - s) * max_cross + h);

    let mut near0: Vec<usize> = Vec::with_capacity(ks.len());
    let mut near1: Vec<usize> = Vec::with_capacity(ls.len());
    Ok(space.subset_where(|x| {
        near0.clear();
        near0.extend(ks.iter().copied().filter(|&x0| space.dist(x0, x) <= reach0));
        if near0.is_empty() {
            return false;
        }
        near1.clear();
        near1.extend(ls.iter().copied().filter(|&x1| space.dist(x, x1) <= reach1));
        if near1.is_empty() {
            return false;
        }
        near0.iter().any(|&x0| {
            let d0x = space.dist(x0, x);
            near1.iter().any(|&x1| is_intermediate(d0x, space.dist(x, x1), space.dist(x0, x1), s, h))
        })
    }))
}
