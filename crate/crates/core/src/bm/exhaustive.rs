//! Exact worst-case search over every nonempty subset pair of a tiny space.
//!
//! Subsets are `u32` bitmasks. For a fixed `s` the intermediate set of a pair
//! is the union of the intermediate sets of its singleton pairs, so the
//! per-pair sets `P[k][l]` are tabulated once and unions are bitwise ORs.
//! For each `K`, the `L` side is enumerated depth-first with two prunings:
//!
//! * dominance: leaving out `l` while `Q_K[l]` is already inside the current
//!   intermediate set only shrinks `m(L)`, so that branch cannot beat the one
//!   that includes `l`;
//! * bound: the intermediate set only grows and `m(L)` is at most the mass of
//!   everything still undecided, which bounds every deficit below the node.

use alloc::vec;
use alloc::vec::Vec;

use super::{bm_check, check_s_grid, dim_root, BMReport};
use crate::error::{check_arg, Error, Result};
use crate::intermediate::is_intermediate;
use crate::query::BMQuery;
use crate::space::FiniteMetricMeasureSpace;

pub const EXHAUSTIVE_MAX_POINTS: usize = 16;

// Branches are cut only when their bound beats the incumbent by this much;
// table sums and `bm_check` sums may differ in the last ulp.
const PRUNE_MARGIN: f64 = 1e-12;

struct Best {
    value: f64,
    k: u32,
    l: u32,
    s_index: usize,
}

struct Tables {
    n: usize,
    root: Vec<f64>,
}

struct LSearch<'a> {
    tables: &'a Tables,
    q: [u32; EXHAUSTIVE_MAX_POINTS],
    /// `suffix[i]` = bits `i..n`.
    suffix: [u32; EXHAUSTIVE_MAX_POINTS + 1],
    /// `min_{j >= i} root(Q[j])`.
    suffix_min_root: [f64; EXHAUSTIVE_MAX_POINTS + 1],
    k: u32,
    s: f64,
    s_index: usize,
    k_term: f64,
}

impl LSearch<'_> {
    fn value(&self, c: u32, l: u32) -> f64 {
        self.tables.root[c as usize] - self.k_term - self.s * self.tables.root[l as usize]
    }

    fn run(&self, pos: usize, l: u32, c: u32, best: &mut Best) {
        let n = self.tables.n;
        if pos == n {
            if l != 0 {
                let v = self.value(c, l);
                if v < best.value {
                    *best = Best { value: v, k: self.k, l, s_index: self.s_index };
                }
            }
            return;
        }
        let reach = l | self.suffix[pos];
        let c_floor = if l != 0 { self.tables.root[c as usize] } else { self.suffix_min_root[pos] };
        let bound = c_floor - self.k_term - self.s * self.tables.root[reach as usize];
        if bound > best.value + PRUNE_MARGIN {
            return;
        }
        let bit = 1u32 << pos;
        let q = self.q[pos];
        self.run(pos + 1, l | bit, c | q, best);
        if q & !c != 0 {
            self.run(pos + 1, l, c, best);
        }
    }
}

/// Minimum-deficit report over all nonempty pairs `(C0, C1)` and all `s` in
/// the grid. Spaces larger than [`EXHAUSTIVE_MAX_POINTS`] are refused.
pub fn bm_exhaustive_check(space: &FiniteMetricMeasureSpace, dim: f64, h: f64, s_grid: &[f64]) -> Result<BMReport> {
    let n = space.len();
    if n > EXHAUSTIVE_MAX_POINTS {
        return Err(Error::Capacity {
            what: "exhaustive subset enumeration (points)",
            limit: EXHAUSTIVE_MAX_POINTS,
            found: n,
        });
    }
    if n == 0 {
        return Err(Error::Invalid("exhaustive check needs a nonempty space".into()));
    }
    check_s_grid(s_grid)?;
    BMQuery::new(dim, s_grid[0], h)?;
    check_arg(h >= 0.0, "h", h, "must be >= 0")?;

    let full: u32 = (1u32 << n) - 1;
    let subsets = 1usize << n;
    let mut mass = vec![0.0f64; subsets];
    for m in 1..subsets {
        mass[m] = mass[m & (m - 1)] + space.weights()[m.trailing_zeros() as usize];
    }
    let tables = Tables { n, root: mass.iter().map(|&x| dim_root(x, dim)).collect() };

    let mut best = Best { value: f64::INFINITY, k: full, l: full, s_index: 0 };
    let mut pair = vec![[0u32; EXHAUSTIVE_MAX_POINTS]; n];
    for (s_index, &s) in s_grid.iter().enumerate() {
        for (k, row) in pair.iter_mut().enumerate() {
            for (l, cell) in row.iter_mut().enumerate().take(n) {
                let d_kl = space.dist(k, l);
                *cell = (0..n)
                    .filter(|&x| is_intermediate(space.dist(k, x), space.dist(x, l), d_kl, s, h))
                    .fold(0u32, |acc, x| acc | (1 << x));
            }
        }
        for k in 1..=full {
            let mut search = LSearch {
                tables: &tables,
                q: [0; EXHAUSTIVE_MAX_POINTS],
                suffix: [0; EXHAUSTIVE_MAX_POINTS + 1],
                suffix_min_root: [f64::INFINITY; EXHAUSTIVE_MAX_POINTS + 1],
                k,
                s,
                s_index,
                k_term: (1.0 - s) * tables.root[k as usize],
            };
            let mut bits = k;
            while bits != 0 {
                let i = bits.trailing_zeros() as usize;
                for l in 0..n {
                    search.q[l] |= pair[i][l];
                }
                bits &= bits - 1;
            }
            for i in (0..n).rev() {
                search.suffix[i] = search.suffix[i + 1] | (1 << i);
                search.suffix_min_root[i] = search.suffix_min_root[i + 1].min(tables.root[search.q[i] as usize]);
            }
            search.run(0, 0, 0, &mut best);
        }
    }

    let to_indices = |m: u32| (0..n).filter(|&i| m & (1 << i) != 0).collect::<Vec<_>>();
    let k = space.subset(&to_indices(best.k))?;
    let l = space.subset(&to_indices(best.l))?;
    bm_check(space, &k, &l, BMQuery::new(dim, s_grid[best.s_index], h)?)
}
