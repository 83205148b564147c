//! Seeded randomized local search for Brunn-Minkowski violations.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{bm_check, check_s_grid, default_s_grid, BMReport, BMStatus};
use crate::error::{check_arg, Error, Result};
use crate::query::BMQuery;
use crate::space::FiniteMetricMeasureSpace;
use crate::subset::SubsetMask;

/// How a search proposes a new subset pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Proposal {
    /// Uniformly random index sets.
    RandomUnion,
    /// Metric balls around random centers with random radii.
    MetricBall,
    /// Small edits of the current worst pair: add a nearest outside point,
    /// drop a member, or dilate to the next distance shell.
    DilationPerturbation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub seed: u64,
    pub iterations: usize,
    pub s_grid: Vec<f64>,
    pub proposals: Vec<Proposal>,
    pub min_size: usize,
    /// `None` means the whole space.
    pub max_size: Option<usize>,
    /// Every `restart_every`-th iteration draws a fresh pair instead of
    /// perturbing the incumbent.
    pub restart_every: usize,
    /// Singleton pairs evaluated before the first iteration; all of them
    /// when `n^2` fits, a random sample otherwise.
    pub singleton_budget: usize,
    /// Length of the returned worst-first list.
    pub keep: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            seed: 0,
            iterations: 200,
            s_grid: default_s_grid(),
            proposals: alloc::vec![Proposal::RandomUnion, Proposal::MetricBall, Proposal::DilationPerturbation],
            min_size: 1,
            max_size: None,
            restart_every: 10,
            singleton_budget: 4096,
            keep: 100,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Invalid("iterations must be > 0".into()));
        }
        check_s_grid(&self.s_grid)?;
        if self.proposals.is_empty() {
            return Err(Error::Invalid("at least one proposal kind is required".into()));
        }
        check_arg(self.min_size >= 1, "min_size", self.min_size as f64, "must be >= 1")?;
        if let Some(max) = self.max_size {
            check_arg(max >= self.min_size, "max_size", max as f64, "must be >= min_size")?;
        }
        check_arg(self.restart_every >= 1, "restart_every", self.restart_every as f64, "must be >= 1")?;
        check_arg(self.keep >= 1, "keep", self.keep as f64, "must be >= 1")
    }
}

type PairKey = (Vec<usize>, Vec<usize>, u64);

struct Searcher<'a> {
    space: &'a FiniteMetricMeasureSpace,
    cfg: &'a SearchConfig,
    dim: f64,
    h: f64,
    min_size: usize,
    max_size: usize,
    rng: ChaCha8Rng,
    seen: BTreeSet<PairKey>,
    found: Vec<BMReport>,
    incumbent: Option<(SubsetMask, SubsetMask, f64)>,
}

impl Searcher<'_> {
    /// Evaluates a pair over the whole `s` grid and returns its worst deficit.
    fn evaluate(&mut self, k: SubsetMask, l: SubsetMask) -> Result<()> {
        let (ki, li) = (k.to_indices(), l.to_indices());
        let mut worst = f64::INFINITY;
        for &s in &self.cfg.s_grid {
            let key = (ki.clone(), li.clone(), s.to_bits());
            let report = bm_check(self.space, &k, &l, BMQuery::new(self.dim, s, self.h)?)?;
            worst = worst.min(report.deficit);
            if report.status != BMStatus::Vacuous && self.seen.insert(key) {
                self.found.push(report);
            }
        }
        if self.incumbent.as_ref().is_none_or(|inc| worst < inc.2) {
            self.incumbent = Some((k, l, worst));
        }
        if self.found.len() > 8 * self.cfg.keep + 256 {
            self.trim();
        }
        Ok(())
    }

    fn trim(&mut self) {
        self.found.sort_by(|a, b| a.deficit.total_cmp(&b.deficit));
        self.found.truncate(self.cfg.keep);
    }

    fn random_size(&mut self) -> usize {
        self.rng.random_range(self.min_size..=self.max_size)
    }

    fn random_union(&mut self) -> SubsetMask {
        let n = self.space.len();
        let size = self.random_size();
        let picked = sample(&mut self.rng, n, size);
        let mut out = self.space.empty_subset();
        for i in picked.iter() {
            out.insert(i).expect("sampled index in range");
        }
        out
    }

    fn metric_ball(&mut self) -> SubsetMask {
        let n = self.space.len();
        let center = self.rng.random_range(0..n);
        let radius = self.space.dist(center, self.rng.random_range(0..n));
        let mut inside: Vec<usize> = (0..n).filter(|&y| self.space.dist(center, y) <= radius).collect();
        if inside.len() > self.max_size {
            inside.sort_by(|&a, &b| self.space.dist(center, a).total_cmp(&self.space.dist(center, b)).then(a.cmp(&b)));
            inside.truncate(self.max_size);
        }
        self.grow_to_min(self.space.subset(&inside).expect("indices in range"))
    }

    fn grow_to_min(&mut self, mut set: SubsetMask) -> SubsetMask {
        while set.count() < self.min_size {
            match self.nearest_outside(&set) {
                Some(y) => set.insert(y).expect("index in range"),
                None => break,
            }
        }
        set
    }

    /// Outside points at minimal distance to `set`, ties broken at random.
    fn nearest_outside(&mut self, set: &SubsetMask) -> Option<usize> {
        let shell = self.shell(set);
        (!shell.is_empty()).then(|| shell[self.rng.random_range(0..shell.len())])
    }

    fn shell(&self, set: &SubsetMask) -> Vec<usize> {
        let members = set.to_indices();
        let gap = |y: usize| members.iter().map(|&a| self.space.dist(a, y)).fold(f64::INFINITY, f64::min);
        let outside: Vec<(usize, f64)> =
            (0..self.space.len()).filter(|&y| !set.contains(y)).map(|y| (y, gap(y))).collect();
        let nearest = outside.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        outside.into_iter().filter(|p| p.1 == nearest).map(|p| p.0).collect()
    }

    fn fresh(&mut self) -> SubsetMask {
        let ball = self.cfg.proposals.contains(&Proposal::MetricBall);
        let union = self.cfg.proposals.contains(&Proposal::RandomUnion);
        let use_ball = match (ball, union) {
            (true, true) => self.rng.random_bool(0.5),
            (b, _) => b,
        };
        if use_ball {
            self.metric_ball()
        } else {
            self.random_union()
        }
    }

    fn perturb(&mut self, set: &SubsetMask) -> SubsetMask {
        let mut out = set.clone();
        let count = out.count();
        match self.rng.random_range(0..3u8) {
            0 if count < self.max_size => {
                if let Some(y) = self.nearest_outside(&out) {
                    out.insert(y).expect("index in range");
                }
            }
            1 if count > self.min_size => {
                let members = out.to_indices();
                let drop = members[self.rng.random_range(0..members.len())];
                out.remove(drop).expect("index in range");
            }
            _ => {
                for y in self.shell(&out) {
                    if out.count() >= self.max_size {
                        break;
                    }
                    out.insert(y).expect("index in range");
                }
            }
        }
        out
    }
}

/// Searches for subset pairs with the most negative deficit.
///
/// Deterministic for a given seed. Reports are deduplicated per
/// `(C0, C1, s)`, never vacuous, and sorted by ascending deficit.
pub fn bm_search_violations(
    space: &FiniteMetricMeasureSpace,
    dim: f64,
    h: f64,
    cfg: &SearchConfig,
) -> Result<Vec<BMReport>> {
    cfg.validate()?;
    BMQuery::new(dim, cfg.s_grid[0], h)?;
    let n = space.len();
    if n == 0 {
        return Err(Error::Invalid("cannot search an empty space".into()));
    }
    let max_size = cfg.max_size.unwrap_or(n).min(n);
    let min_size = cfg.min_size.min(max_size);
    let mut searcher = Searcher {
        space,
        cfg,
        dim,
        h,
        min_size,
        max_size,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        seen: BTreeSet::new(),
        found: Vec::new(),
        incumbent: None,
    };

    if min_size == 1 {
        if n * n <= cfg.singleton_budget {
            for i in 0..n {
                for j in 0..n {
                    searcher.evaluate(space.subset(&[i])?, space.subset(&[j])?)?;
                }
            }
        } else {
            for _ in 0..cfg.singleton_budget {
                let i = searcher.rng.random_range(0..n);
                let j = searcher.rng.random_range(0..n);
                searcher.evaluate(space.subset(&[i])?, space.subset(&[j])?)?;
            }
        }
    }

    let perturbing = cfg.proposals.contains(&Proposal::DilationPerturbation);
    for it in 0..cfg.iterations {
        let restart = it % cfg.restart_every == 0 || !perturbing;
        let (k, l) = match (&searcher.incumbent, restart) {
            (Some((k, l, _)), false) => {
                let (k, l) = (k.clone(), l.clone());
                if searcher.rng.random_bool(0.5) {
                    (searcher.perturb(&k), l)
                } else {
                    let l = searcher.perturb(&l);
                    (k, l)
                }
            }
            _ => {
                let k = searcher.fresh();
                let l = searcher.fresh();
                (k, l)
            }
        };
        searcher.evaluate(k, l)?;
    }
    searcher.trim();
    Ok(searcher.found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{index_labels, Metric};

    #[test]
    fn config_validation() {
        let mut cfg = SearchConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.iterations = 0;
        assert!(cfg.validate().is_err());
        let cfg = SearchConfig { s_grid: Vec::new(), ..SearchConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = SearchConfig { s_grid: alloc::vec![1.5], ..SearchConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn two_point_violation_found_in_singletons() {
        let x = FiniteMetricMeasureSpace::from_coords(
            index_labels(2),
            alloc::vec![alloc::vec![0.0], alloc::vec![1.0]],
            alloc::vec![0.5; 2],
            Metric::L1,
        )
        .unwrap();
        for seed in 0..5 {
            let cfg = SearchConfig { seed, iterations: 1, s_grid: alloc::vec![0.5], ..SearchConfig::default() };
            let reports = bm_search_violations(&x, 1.0, 0.0, &cfg).unwrap();
            assert_eq!(reports[0].deficit, -0.5);
            assert!(reports.windows(2).all(|w| w[0].deficit <= w[1].deficit));
        }
    }
}
