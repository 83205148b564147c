//! Step-by-step replay of the stability argument on a coarse/fine grid pair.
//!
//! The fine grid plays the limit space `X`, the coarse grid the approximating
//! space `X_n`, and the ambient distance serves as the cross pseudo-metric.
//! Each proof line becomes a [`StepCheck`], so a failure points at one step.

use alloc::vec::Vec;

use crate::bm::{bm_check_tol, dim_root, BMReport};
use crate::coupling::{
    coupling_cost, natural_discretization_coupling, ot_coupling, transfer_set, transfer_with_far_mass, Coupling,
    CrossDistance, MarkovBound,
};
use crate::discretize::DiscretizationLink;
use crate::error::{check_arg, Error, Result};
use crate::intermediate::intermediate_set;
use crate::measure::mass;
use crate::query::BMQuery;
use crate::subset::SubsetMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsPolicy {
    /// `eps = sqrt(delta)`, so that `delta^2 / eps^2 = delta`.
    SqrtDelta,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingChoice {
    /// Each fine cell sent to its coarse center.
    Natural,
    /// Optimal plan for the squared ambient cost.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityConfig {
    pub eps: EpsPolicy,
    pub coupling: CouplingChoice,
    pub tol: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig { eps: EpsPolicy::SqrtDelta, coupling: CouplingChoice::Natural, tol: 1e-12 }
    }
}

/// One inequality `lhs >= rhs` (within the report tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct StepCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub s: f64,
    pub dim: f64,
    /// Coarse-side interpolation tolerance `h_n`.
    pub h: f64,
    pub delta: f64,
    pub eps: f64,
    /// `delta^2 / eps^2`, or 0 when `delta = 0`.
    pub markov: f64,
    /// `2 markov^{1/N}`.
    pub slack: f64,
    /// `m(C_0)`, `m(C_1)` on the fine grid.
    pub mass_c0: f64,
    pub mass_c1: f64,
    /// `m_n` of the coarse transfers of `C_0`, `C_1`.
    pub mass_t0: f64,
    pub mass_t1: f64,
    /// `m_n` of the coarse intermediate set.
    pub mass_coarse_intermediate: f64,
    /// `m` of its transfer back to the fine grid.
    pub mass_back: f64,
    pub far_mass_0: f64,
    pub far_mass_1: f64,
    pub far_mass_back: f64,
    pub coarse_check: BMReport,
    pub t0: SubsetMask,
    pub t1: SubsetMask,
    pub back: SubsetMask,
    /// Fine points of `back` outside `C_s^{h + 4 eps}(C_0, C_1)`.
    pub inclusion_failures: Vec<usize>,
    pub steps: Vec<StepCheck>,
}

impl StabilityReport {
    pub fn ok(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
    }

    pub fn failed_steps(&self) -> impl Iterator<Item = &StepCheck> {
        self.steps.iter().filter(|s| !s.holds)
    }
}

/// `c0`, `c1` live on the fine grid; `query.h()` is the coarse tolerance.
pub fn stability_replay(
    link: &DiscretizationLink,
    c0: &SubsetMask,
    c1: &SubsetMask,
    query: BMQuery,
    config: &StabilityConfig,
) -> Result<StabilityReport> {
    let coarse = link.coarse_space();
    let fine = link.fine_space();
    fine.check_owns(c0)?;
    fine.check_owns(c1)?;
    check_arg(config.tol >= 0.0, "tol", config.tol, "must be >= 0")?;
    let (s, n, h) = (query.s(), query.dim(), query.h());

    let cross = CrossDistance::from_link(link);
    let (q, delta): (Coupling, f64) = match config.coupling {
        CouplingChoice::Natural => {
            let q = natural_discretization_coupling(link);
            let cost = coupling_cost(&q, &cross)?;
            (q, cost)
        }
        CouplingChoice::Optimal => ot_coupling(coarse.weights(), fine.weights(), &cross)?,
    };
    let eps = match config.eps {
        EpsPolicy::SqrtDelta => libm::sqrt(delta),
        EpsPolicy::Fixed(e) => {
            check_arg(e >= 0.0 && e.is_finite(), "eps", e, "must be finite and >= 0")?;
            e
        }
    };
    let markov = if delta == 0.0 {
        0.0
    } else if eps == 0.0 {
        return Err(Error::InvalidArgument { name: "eps", value: eps, reason: "eps = 0 needs a zero-cost coupling" });
    } else {
        delta * delta / (eps * eps)
    };

    let forward0: MarkovBound = transfer_with_far_mass(&q, &cross, c0, eps, markov)?;
    let forward1 = transfer_with_far_mass(&q, &cross, c1, eps, markov)?;
    let (t0, t1) = (forward0.transferred, forward1.transferred);

    let coarse_check = bm_check_tol(coarse, &t0, &t1, query, config.tol)?;
    let ci = coarse_check.witness.clone();

    let back_cross = cross.transpose();
    let backward = transfer_with_far_mass(&q.transpose(), &back_cross, &ci, eps, markov)?;
    let back = backward.transferred;

    let mass_c0 = mass(fine, c0)?;
    let mass_c1 = mass(fine, c1)?;
    let mass_t0 = mass(coarse, &t0)?;
    let mass_t1 = mass(coarse, &t1)?;
    let mass_ci = mass(coarse, &ci)?;
    let mass_back = mass(fine, &back)?;

    let reference = intermediate_set(fine, c0, c1, s, h + 4.0 * eps)?;
    let inclusion_failures: Vec<usize> = back.indices().filter(|&y| !reference.contains(y)).collect();

    let tol = config.tol;
    let step = |name, lhs: f64, rhs: f64| StepCheck { name, lhs, rhs, holds: lhs >= rhs - tol };
    let slack = 2.0 * dim_root(markov, n);
    let base = (1.0 - s) * dim_root(mass_c0, n) + s * dim_root(mass_c1, n);
    let mut steps = alloc::vec![
        step("far_mass_0", markov, forward0.far_mass),
        step("far_mass_1", markov, forward1.far_mass),
        step("transfer_0", mass_t0, mass_c0 - markov),
        step("transfer_1", mass_t1, mass_c1 - markov),
        step("coarse_bm", coarse_check.lhs, coarse_check.rhs),
        step("far_mass_back", markov, backward.far_mass),
        step("transfer_back", mass_back, mass_ci - markov),
        step("chained_bound", dim_root(mass_back, n), base - slack),
    ];
    let outside = inclusion_failures.len() as f64;
    steps.push(StepCheck { name: "inclusion", lhs: 0.0, rhs: outside, holds: inclusion_failures.is_empty() });

    Ok(StabilityReport {
        s,
        dim: n,
        h,
        delta,
        eps,
        markov,
        slack,
        mass_c0,
        mass_c1,
        mass_t0,
        mass_t1,
        mass_coarse_intermediate: mass_ci,
        mass_back,
        far_mass_0: forward0.far_mass,
        far_mass_1: forward1.far_mass,
        far_mass_back: backward.far_mass,
        coarse_check,
        t0,
        t1,
        back,
        inclusion_failures,
        steps,
    })
}

/// Coarse transfer `{x in X_n : d(x, C) <= eps}` of a fine subset.
pub fn coarse_transfer(link: &DiscretizationLink, c: &SubsetMask, eps: f64) -> Result<SubsetMask> {
    transfer_set(&CrossDistance::from_link(link), c, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compact::CompactSpec;
    use crate::discretize::{refine_link, ModelSpace};
    use crate::space::Metric;
    use alloc::vec;

    fn slabs(link: &DiscretizationLink) -> (SubsetMask, SubsetMask) {
        let fine = link.fine();
        let a = CompactSpec::Slab { axis: 0, lo: 0.0, hi: 0.2 };
        let b = CompactSpec::Slab { axis: 0, lo: 0.6, hi: 0.9 };
        (a.resolve(&fine.grid, &fine.space, 0).unwrap(), b.resolve(&fine.grid, &fine.space, 0).unwrap())
    }

    #[test]
    fn interval_replay_holds() {
        let model = ModelSpace::uniform_box(vec![1.0], Metric::L2);
        let link = refine_link(&model, &[8], &[64]).unwrap();
        let (c0, c1) = slabs(&link);
        let q = BMQuery::new(1.0, 0.5, 4.0 * link.h_coarse()).unwrap();
        let r = stability_replay(&link, &c0, &c1, q, &StabilityConfig::default()).unwrap();
        assert!(r.ok(), "{:?}", r.failed_steps().collect::<Vec<_>>());
        assert!(r.delta > 0.0 && r.delta <= link.h_coarse());
        assert!((r.eps - libm::sqrt(r.delta)).abs() == 0.0);
        assert_eq!(r.steps.len(), 9);
    }

    #[test]
    fn identical_grids_reduce_to_plain_check() {
        let model = ModelSpace::uniform_box(vec![1.0], Metric::L2);
        let link = refine_link(&model, &[8], &[8]).unwrap();
        let (c0, c1) = slabs(&link);
        let q = BMQuery::new(1.0, 0.5, 4.0 * link.h_coarse()).unwrap();
        let r = stability_replay(&link, &c0, &c1, q, &StabilityConfig::default()).unwrap();
        assert_eq!((r.delta, r.eps, r.markov), (0.0, 0.0, 0.0));
        assert_eq!(r.t0.members(), c0.members());
        assert_eq!(r.t1.members(), c1.members());
        assert_eq!(r.back.members(), r.coarse_check.witness.members());
        assert!(r.ok());
    }

    #[test]
    fn optimal_coupling_is_no_worse() {
        let model = ModelSpace::uniform_box(vec![1.0, 1.0], Metric::L2);
        let link = refine_link(&model, &[2, 2], &[4, 4]).unwrap();
        let fine = link.fine();
        let c0 = CompactSpec::Ball { center: vec![0.2, 0.2], radius: 0.2 }.resolve(&fine.grid, &fine.space, 0).unwrap();
        let c1 = CompactSpec::Ball { center: vec![0.8, 0.7], radius: 0.2 }.resolve(&fine.grid, &fine.space, 0).unwrap();
        let q = BMQuery::new(2.0, 0.25, 4.0 * link.h_coarse()).unwrap();
        let natural = stability_replay(&link, &c0, &c1, q, &StabilityConfig::default()).unwrap();
        let optimal = stability_replay(
            &link,
            &c0,
            &c1,
            q,
            &StabilityConfig { coupling: CouplingChoice::Optimal, ..StabilityConfig::default() },
        )
        .unwrap();
        assert!(optimal.delta <= natural.delta + 1e-12);
        assert!(natural.ok() && optimal.ok());
    }

    #[test]
    fn zero_eps_needs_zero_cost() {
        let model = ModelSpace::uniform_box(vec![1.0], Metric::L2);
        let link = refine_link(&model, &[2], &[4]).unwrap();
        let (c0, c1) = slabs(&link);
        let q = BMQuery::new(1.0, 0.5, 0.0).unwrap();
        let cfg = StabilityConfig { eps: EpsPolicy::Fixed(0.0), ..StabilityConfig::default() };
        assert!(stability_replay(&link, &c0, &c1, q, &cfg).is_err());
    }
}
