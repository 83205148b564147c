//! Grid discretizations of continuous model spaces.
//!
//! A model is a box `[0, a_1] x ... x [0, a_d]` (`d <= 3`) with a product
//! density, or a circle with arc-length metric and constant density. The
//! grid points are cell centers; each point carries the exact integral of
//! the density over its cell. Cells are half-open (lower-closed, last cell
//! closed), so they are disjoint and cover the model.
//!
//! A [`DiscretizationLink`] pairs a coarse grid with a nested fine grid. The
//! fine grid stands in for the continuum when a set operation (dilation,
//! restriction) has to be evaluated on the model side.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::measure::mass;
use crate::space::{FiniteMetricMeasureSpace, Metric};
use crate::subset::SubsetMask;

pub const MAX_BOX_DIMS: usize = 3;

/// Product densities with closed-form cell integrals.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    Uniform,
    /// `Π_k (a_k + b_k x_k)`, each factor nonnegative on its side.
    Affine {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// `Π_k c_k exp(rate_k x_k)` with `c_k > 0`.
    Exponential {
        c: Vec<f64>,
        rate: Vec<f64>,
    },
}

impl Density {
    /// `∫_lo^hi` of the axis-`k` factor.
    fn axis_integral(&self, k: usize, lo: f64, hi: f64) -> f64 {
        match self {
            Density::Uniform => hi - lo,
            Density::Affine { a, b } => (hi - lo) * (a[k] + b[k] * (hi + lo) / 2.0),
            Density::Exponential { c, rate } => {
                let r = rate[k];
                if r == 0.0 {
                    c[k] * (hi - lo)
                } else {
                    c[k] * libm::exp(r * lo) * libm::expm1(r * (hi - lo)) / r
                }
            }
        }
    }

    fn validate(&self, sides: &[f64]) -> Result<()> {
        let dims = sides.len();
        let check_len = |what: &'static str, v: &[f64]| {
            if v.len() == dims {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected: dims, found: v.len() })
            }
        };
        match self {
            Density::Uniform => Ok(()),
            Density::Affine { a, b } => {
                check_len("affine density offsets", a)?;
                check_len("affine density slopes", b)?;
                for k in 0..dims {
                    let (lo, hi) = (a[k], a[k] + b[k] * sides[k]);
                    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < 0.0 || (lo == 0.0 && hi == 0.0) {
                        return Err(Error::Invalid(format!(
                            "affine density factor {k} must be nonnegative and not identically zero on [0, {}]",
                            sides[k]
                        )));
                    }
                }
                Ok(())
            }
            Density::Exponential { c, rate } => {
                check_len("exponential density scales", c)?;
                check_len("exponential density rates", rate)?;
                if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) || rate.iter().any(|r| !r.is_finite()) {
                    return Err(Error::Invalid("exponential density needs finite rates and scales > 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// Metric of the model the grid is embedded in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ambient {
    Norm(Metric),
    /// Arc length on a circle parametrized by `[0, circumference)`.
    Arc {
        circumference: f64,
    },
}

impl Ambient {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Ambient::Norm(metric) => metric.distance(a, b),
            Ambient::Arc { circumference } => {
                let t = (a[0] - b[0]).abs() % circumference;
                t.min(circumference - t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpace {
    Box { sides: Vec<f64>, density: Density, metric: Metric },
    Circle { circumference: f64, density: f64 },
}

impl ModelSpace {
    pub fn uniform_box(sides: Vec<f64>, metric: Metric) -> Self {
        ModelSpace::Box { sides, density: Density::Uniform, metric }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpace::Box { sides, density, .. } => {
                if sides.is_empty() || sides.len() > MAX_BOX_DIMS {
                    return Err(Error::Unsupported(format!(
                        "box models support 1 to {MAX_BOX_DIMS} dimensions, got {}",
                        sides.len()
                    )));
                }
                if sides.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                    return Err(Error::Invalid("box sides must be finite and > 0".into()));
                }
                density.validate(sides)
            }
            ModelSpace::Circle { circumference, density } => {
                if !(*circumference > 0.0 && circumference.is_finite()) {
                    return Err(Error::Invalid("circumference must be finite and > 0".into()));
                }
                if !(*density > 0.0 && density.is_finite()) {
                    return Err(Error::Invalid("circle density must be finite and > 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            ModelSpace::Box { sides, .. } => sides.len(),
            ModelSpace::Circle { .. } => 1,
        }
    }

    pub fn ambient(&self) -> Ambient {
        match self {
            ModelSpace::Box { metric, .. } => Ambient::Norm(*metric),
            ModelSpace::Circle { circumference, .. } => Ambient::Arc { circumference: *circumference },
        }
    }

    /// Length of the parameter range along axis `k`.
    pub fn extent(&self, k: usize) -> f64 {
        match self {
            ModelSpace::Box { sides, .. } => sides[k],
            ModelSpace::Circle { circumference, .. } => *circumference,
        }
    }

    /// Exact mass of the axis-aligned cell `[lo, hi]`.
    pub fn cell_mass(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            ModelSpace::Box { density, .. } => (0..lo.len()).map(|k| density.axis_integral(k, lo[k], hi[k])).product(),
            ModelSpace::Circle { density, .. } => density * (hi[0] - lo[0]),
        }
    }

    pub fn total_mass(&self) -> f64 {
        let lo = vec![0.0; self.dims()];
        let hi: Vec<f64> = (0..self.dims()).map(|k| self.extent(k)).collect();
        self.cell_mass(&lo, &hi)
    }
}

/// A regular grid over a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    model: ModelSpace,
    cells: Vec<usize>,
}

impl Grid {
    pub fn new(model: &ModelSpace, cells_per_axis: &[usize]) -> Result<Self> {
        model.validate()?;
        if cells_per_axis.len() != model.dims() {
            return Err(Error::DimensionMismatch {
                what: "cells per axis",
                expected: model.dims(),
                found: cells_per_axis.len(),
            });
        }
        if cells_per_axis.contains(&0) {
            return Err(Error::Invalid("every axis needs at least one cell".into()));
        }
        Ok(Grid { model: model.clone(), cells: cells_per_axis.to_vec() })
    }

    pub fn model(&self) -> &ModelSpace {
        &self.model
    }

    pub fn cells_per_axis(&self) -> &[usize] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major: the last axis varies fastest.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.cells.len()];
        for k in (0..self.cells.len()).rev() {
            idx[k] = flat % self.cells[k];
            flat /= self.cells[k];
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.cells).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    fn edge(&self, k: usize, i: usize) -> f64 {
        i as f64 * self.model.extent(k) / self.cells[k] as f64
    }

    pub fn cell_bounds(&self, flat: usize) -> (Vec<f64>, Vec<f64>) {
        let idx = self.multi_index(flat);
        let lo = idx.iter().enumerate().map(|(k, &i)| self.edge(k, i)).collect();
        let hi = idx.iter().enumerate().map(|(k, &i)| self.edge(k, i + 1)).collect();
        (lo, hi)
    }

    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| (i as f64 + 0.5) * self.model.extent(k) / self.cells[k] as f64)
            .collect()
    }

    /// Largest distance from a point of a cell to the cell's center: half the
    /// cell diagonal in the ambient norm, half the arc on a circle.
    pub fn covering_radius(&self) -> f64 {
        let half = (0..self.cells.len()).map(|k| self.model.extent(k) / self.cells[k] as f64 / 2.0);
        match self.model.ambient() {
            Ambient::Norm(metric) => metric.norm(half),
            Ambient::Arc { .. } => half.fold(0.0, f64::max),
        }
    }

    fn label(&self, flat: usize) -> String {
        let idx = self.multi_index(flat);
        let parts: Vec<String> = idx.iter().map(|i| format!("{i}")).collect();
        format!("c{}", parts.join("_"))
    }
}

/// A grid space together with its covering radius.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub space: FiniteMetricMeasureSpace,
    pub h: f64,
    pub grid: Grid,
}

pub fn discretize_grid(model: &ModelSpace, cells_per_axis: &[usize]) -> Result<Discretization> {
    let grid = Grid::new(model, cells_per_axis)?;
    let n = grid.len();
    let coords: Vec<Vec<f64>> = (0..n).map(|i| grid.center(i)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = grid.cell_bounds(i);
            model.cell_mass(&lo, &hi)
        })
        .collect();
    if let Some(i) = weights.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::Invalid(format!("cell {i} has nonpositive mass {}", weights[i])));
    }
    let labels = (0..n).map(|i| grid.label(i)).collect();
    let ambient = model.ambient();
    let space = FiniteMetricMeasureSpace::from_coords_with(labels, coords, weights, |a, b| ambient.distance(a, b))?;
    Ok(Discretization { h: grid.covering_radius(), space, grid })
}

/// A coarse grid, a nested fine grid and the cell assignment between them.
#[derive(Debug, Clone)]
pub struct DiscretizationLink {
    coarse: Discretization,
    fine: Discretization,
    assignment: Vec<usize>,
}

pub fn refine_link(model: &ModelSpace, coarse_cells: &[usize], fine_cells: &[usize]) -> Result<DiscretizationLink> {
    if coarse_cells.len() != fine_cells.len() {
        return Err(Error::DimensionMismatch {
            what: "fine cells per axis",
            expected: coarse_cells.len(),
            found: fine_cells.len(),
        });
    }
    for (&c, &f) in coarse_cells.iter().zip(fine_cells) {
        if c == 0 || f % c != 0 {
            return Err(Error::Invalid(format!("fine resolution {f} is not a multiple of coarse resolution {c}")));
        }
    }
    let coarse = discretize_grid(model, coarse_cells)?;
    let fine = discretize_grid(model, fine_cells)?;
    let assignment = (0..fine.grid.len())
        .map(|y| {
            let idx: Vec<usize> = fine
                .grid
                .multi_index(y)
                .iter()
                .zip(coarse_cells.iter().zip(fine_cells))
                .map(|(&i, (&c, &f))| i / (f / c))
                .collect();
            coarse.grid.flat_index(&idx)
        })
        .collect();
    Ok(DiscretizationLink { coarse, fine, assignment })
}

/// Worst-case deviations of a link from its invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDiagnostics {
    /// `max_i |Σ_{y -> i} w(y) - w(x_i)|`.
    pub max_mass_gap: f64,
    /// `max_y d(assignment(y), y)`; at most `h_coarse`.
    pub max_assignment_distance: f64,
}

impl DiscretizationLink {
    pub fn coarse(&self) -> &Discretization {
        &self.coarse
    }

    pub fn fine(&self) -> &Discretization {
        &self.fine
    }

    pub fn coarse_space(&self) -> &FiniteMetricMeasureSpace {
        &self.coarse.space
    }

    pub fn fine_space(&self) -> &FiniteMetricMeasureSpace {
        &self.fine.space
    }

    /// Coarse point owning each fine point.
    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn h_coarse(&self) -> f64 {
        self.coarse.h
    }

    /// Ambient distance between coarse point `i` and fine point `y`.
    pub fn cross_distance(&self, i: usize, y: usize) -> f64 {
        let ambient = self.coarse.grid.model().ambient();
        let (a, b) = (self.coarse.space.coords(), self.fine.space.coords());
        match (a, b) {
            (Some(a), Some(b)) => ambient.distance(&a[i], &b[y]),
            _ => unreachable!("grid spaces always carry coordinates"),
        }
    }

    pub fn diagnostics(&self) -> LinkDiagnostics {
        let mut sums = vec![0.0; self.coarse.space.len()];
        let mut max_assignment_distance: f64 = 0.0;
        for (y, &i) in self.assignment.iter().enumerate() {
            sums[i] += self.fine.space.weights()[y];
            max_assignment_distance = max_assignment_distance.max(self.cross_distance(i, y));
        }
        let max_mass_gap = sums.iter().zip(self.coarse.space.weights()).map(|(s, w)| (s - w).abs()).fold(0.0, f64::max);
        LinkDiagnostics { max_mass_gap, max_assignment_distance }
    }
}

/// One side of the mass-transfer lemma: a set, its `h`-transfer to the other
/// grid, and both masses.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMasses {
    pub transferred: SubsetMask,
    pub transferred_mass: f64,
    pub source_mass: f64,
}

impl TransferMasses {
    /// `transferred_mass >= source_mass - tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.transferred_mass >= self.source_mass - tol
    }
}

/// For coarse `H`: `H^h = {fine y : d(H, y) <= h_coarse}`; expects
/// `m(H^h) >= m_h(H)`.
pub fn dilate_mass_lower_bound(link: &DiscretizationLink, h_set: &SubsetMask) -> Result<TransferMasses> {
    let coarse = link.coarse_space();
    let fine = link.fine_space();
    let source_mass = mass(coarse, h_set)?;
    let members = h_set.to_indices();
    let h = link.h_coarse();
    let transferred = fine.subset_where(|y| members.iter().any(|&x| link.cross_distance(x, y) <= h));
    Ok(TransferMasses { transferred_mass: mass(fine, &transferred)?, transferred, source_mass })
}

/// For fine `A`: `A^h = {coarse x : d(x, A) <= h_coarse}`; expects
/// `m_h(A^h) >= m(A)`.
pub fn restrict_mass_lower_bound(link: &DiscretizationLink, a_set: &SubsetMask) -> Result<TransferMasses> {
    let coarse = link.coarse_space();
    let fine = link.fine_space();
    let source_mass = mass(fine, a_set)?;
    let members = a_set.to_indices();
    let h = link.h_coarse();
    let transferred = coarse.subset_where(|x| members.iter().any(|&y| link.cross_distance(x, y) <= h));
    Ok(TransferMasses { transferred_mass: mass(coarse, &transferred)?, transferred, source_mass })
}
