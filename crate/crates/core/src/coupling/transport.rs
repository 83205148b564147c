//! Transportation simplex on a spanning-tree basis.
//!
//! Rows are supply nodes `0..m`, columns are demand nodes `m..m+n`. The
//! basis always holds `m + n - 1` cells forming a spanning tree (degenerate
//! zero-flow cells included), so potentials and pivot cycles come from tree
//! walks. Entering cells are priced block-wise; after a run of degenerate
//! pivots the solver falls back to Bland's smallest-index rule, which cannot
//! cycle.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

struct Tree {
    m: usize,
    n: usize,
    /// Basic cells `(row, col)` and their flows.
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    /// Per node, indices into `cells`.
    adjacent: Vec<Vec<usize>>,
    basic: Vec<bool>,
    // Filled by `compute_potentials`.
    potential: Vec<f64>,
    parent_cell: Vec<usize>,
    parent_node: Vec<usize>,
    depth: Vec<usize>,
}

impl Tree {
    fn add(&mut self, i: usize, j: usize, x: f64) {
        let id = self.cells.len();
        self.cells.push((i, j));
        self.flow.push(x);
        self.adjacent[i].push(id);
        self.adjacent[self.m + j].push(id);
        self.basic[i * self.n + j] = true;
    }

    /// Moves basic slot `id` from cell `(i,j)` to `(ni,nj)`.
    fn replace(&mut self, id: usize, ni: usize, nj: usize, x: f64) {
        let (i, j) = self.cells[id];
        self.adjacent[i].retain(|&c| c != id);
        self.adjacent[self.m + j].retain(|&c| c != id);
        self.basic[i * self.n + j] = false;
        self.cells[id] = (ni, nj);
        self.flow[id] = x;
        self.adjacent[ni].push(id);
        self.adjacent[self.m + nj].push(id);
        self.basic[ni * self.n + nj] = true;
    }

    /// Row potentials `u` in `potential[..m]`, column potentials `v` in
    /// `potential[m..]`, with `u_0 = 0` and `u_i + v_j = c_ij` on the basis.
    fn compute_potentials(&mut self, cost: &[f64]) {
        let (m, n) = (self.m, self.n);
        self.parent_cell.fill(NONE);
        self.parent_node.fill(NONE);
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::new();
        self.potential[0] = 0.0;
        self.depth[0] = 0;
        seen[0] = true;
        queue.push_back(0);
        while let Some(node) = queue.pop_front() {
            for &id in &self.adjacent[node] {
                let (i, j) = self.cells[id];
                let other = if node < m { m + j } else { i };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                let c = cost[i * n + j];
                self.potential[other] = c - self.potential[node];
                self.parent_cell[other] = id;
                self.parent_node[other] = node;
                self.depth[other] = self.depth[node] + 1;
                queue.push_back(other);
            }
        }
    }

    fn reduced_cost(&self, cost: &[f64], i: usize, j: usize) -> f64 {
        cost[i * self.n + j] - self.potential[i] - self.potential[self.m + j]
    }

    /// Basic cells on the tree path from column node of `j` to row node `i`,
    /// in walking order.
    fn path(&self, i: usize, j: usize) -> Vec<usize> {
        let mut a = self.m + j;
        let mut b = i;
        let mut from_a = Vec::new();
        let mut from_b = Vec::new();
        while self.depth[a] > self.depth[b] {
            from_a.push(self.parent_cell[a]);
            a = self.parent_node[a];
        }
        while self.depth[b] > self.depth[a] {
            from_b.push(self.parent_cell[b]);
            b = self.parent_node[b];
        }
        while a != b {
            from_a.push(self.parent_cell[a]);
            a = self.parent_node[a];
            from_b.push(self.parent_cell[b]);
            b = self.parent_node[b];
        }
        from_a.extend(from_b.into_iter().rev());
        from_a
    }
}

/// Minimizes `Σ cost_ij x_ij` subject to row sums `supply` and column sums
/// `demand`. Returns the dense `m * n` plan. Totals must agree up to the
/// caller's tolerance; the residual lands in the last initial cell.
pub(crate) fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(Error::Invalid("transport problem needs at least one row and one column".into()));
    }
    let mut tree = Tree {
        m,
        n,
        cells: Vec::with_capacity(m + n - 1),
        flow: Vec::with_capacity(m + n - 1),
        adjacent: vec![Vec::new(); m + n],
        basic: vec![false; m * n],
        potential: vec![0.0; m + n],
        parent_cell: vec![NONE; m + n],
        parent_node: vec![NONE; m + n],
        depth: vec![0; m + n],
    };

    // North-west corner start: a staircase spanning tree.
    let (mut i, mut j) = (0, 0);
    let mut row_left = supply[0];
    let mut col_left = demand[0];
    loop {
        if i == m - 1 && j == n - 1 {
            tree.add(i, j, row_left.max(col_left).max(0.0));
            break;
        }
        let x = row_left.min(col_left).max(0.0);
        tree.add(i, j, x);
        if (row_left <= col_left && i < m - 1) || j == n - 1 {
            col_left -= x;
            i += 1;
            row_left = supply[i];
        } else {
            row_left -= x;
            j += 1;
            col_left = demand[j];
        }
    }

    let scale = cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let tol = 1e-12 * scale;
    let total = m * n;
    let block = (libm::sqrt(total as f64) as usize).max(m + n).min(total);
    let mut cursor = 0usize;
    let mut degenerate_run = 0usize;
    let bland_after = 2 * (m + n) + 16;
    let max_pivots = 64 * total + 10_000;

    for _ in 0..max_pivots {
        tree.compute_potentials(cost);
        let bland = degenerate_run > bland_after;

        let mut entering: Option<(usize, f64)> = None;
        if bland {
            entering = (0..total)
                .filter(|&c| !tree.basic[c])
                .map(|c| (c, tree.reduced_cost(cost, c / n, c % n)))
                .find(|&(_, r)| r < -tol);
        } else {
            let mut scanned = 0;
            while scanned < total {
                let stop = (scanned + block).min(total);
                while scanned < stop {
                    let c = (cursor + scanned) % total;
                    scanned += 1;
                    if tree.basic[c] {
                        continue;
                    }
                    let r = tree.reduced_cost(cost, c / n, c % n);
                    if r < -tol && entering.is_none_or(|(_, best)| r < best) {
                        entering = Some((c, r));
                    }
                }
                if entering.is_some() {
                    break;
                }
            }
            cursor = (cursor + scanned) % total;
        }
        let Some((cell, _)) = entering else {
            let mut plan = vec![0.0; total];
            for (&(i, j), &x) in tree.cells.iter().zip(&tree.flow) {
                plan[i * n + j] = x;
            }
            return Ok(plan);
        };
        let (ei, ej) = (cell / n, cell % n);

        let path = tree.path(ei, ej);
        // Odd positions along the path (0, 2, ...) lose flow.
        let mut leaving = NONE;
        let mut theta = f64::INFINITY;
        for &id in path.iter().step_by(2) {
            let x = tree.flow[id];
            let better = x < theta || (x == theta && tree.cells[id] < tree.cells[leaving]);
            if better {
                theta = x;
                leaving = id;
            }
        }
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        for (pos, &id) in path.iter().enumerate() {
            if id == leaving {
                continue;
            }
            if pos % 2 == 0 {
                tree.flow[id] -= theta;
            } else {
                tree.flow[id] += theta;
            }
        }
        tree.replace(leaving, ei, ej, theta);
    }
    Err(Error::Invalid("transport simplex exceeded its pivot limit".into()))
}
