//! Experiment specs and the two drivers: the discretization sweep and the
//! stability replay.

use std::path::{Path, PathBuf};

use mmbm_core::bm::{
    bm_check_tol, bm_exhaustive_check, bm_search_violations, default_s_grid, BMStatus, SearchConfig,
    EXHAUSTIVE_MAX_POINTS,
};
use mmbm_core::compact::CompactSpec;
use mmbm_core::discretize::{discretize_grid, refine_link, Discretization, ModelSpace};
use mmbm_core::stability::{stability_replay, CouplingChoice, EpsPolicy, StabilityConfig};
use mmbm_core::{BMQuery, Error as CoreError, SubsetMask};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{read_json, ModelFile};
use crate::report::{BMReportJson, CsvRow, StabilityJson};

/// Largest grid a sweep or replay will build (dense distances).
pub const MAX_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    /// Same count on every axis.
    Uniform(usize),
    PerAxis(Vec<usize>),
}

impl Resolution {
    pub fn cells(&self, dims: usize) -> Vec<usize> {
        match self {
            Resolution::Uniform(n) => vec![*n; dims],
            Resolution::PerAxis(v) => v.clone(),
        }
    }
}

pub fn resolution_label(cells: &[usize]) -> String {
    cells.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("x")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum HPolicy {
    /// Four times the grid's covering radius.
    #[default]
    #[serde(rename = "exact-4h")]
    Exact4h,
    #[serde(rename = "fixed")]
    Fixed(f64),
}

impl HPolicy {
    fn h(self, covering_radius: f64) -> f64 {
        match self {
            HPolicy::Exact4h => 4.0 * covering_radius,
            HPolicy::Fixed(h) => h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuerySpec {
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default)]
    pub h_policy: HPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CompactFile {
    Ball { center: Vec<f64>, radius: f64 },
    Slab { axis: usize, lo: f64, hi: f64 },
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    RandomUnion { count: usize, radius: f64 },
    Indices { indices: Vec<usize> },
    All,
}

impl CompactFile {
    pub fn to_spec(&self) -> CompactSpec {
        match self.clone() {
            CompactFile::Ball { center, radius } => CompactSpec::Ball { center, radius },
            CompactFile::Slab { axis, lo, hi } => CompactSpec::Slab { axis, lo, hi },
            CompactFile::Rect { lo, hi } => CompactSpec::Rect { lo, hi },
            CompactFile::RandomUnion { count, radius } => CompactSpec::RandomUnion { count, radius },
            CompactFile::Indices { indices } => CompactSpec::Indices(indices),
            CompactFile::All => CompactSpec::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCompact {
    pub name: String,
    #[serde(flatten)]
    pub compact: CompactFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub s_grid: Option<Vec<f64>>,
    #[serde(default = "default_keep")]
    pub keep: usize,
}

fn default_iterations() -> usize {
    200
}

fn default_keep() -> usize {
    10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum EpsFile {
    #[default]
    #[serde(rename = "sqrt-delta")]
    SqrtDelta,
    #[serde(rename = "fixed")]
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CouplingFile {
    #[default]
    Natural,
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySpec {
    pub coarse: Resolution,
    pub fine: Resolution,
    #[serde(default = "half")]
    pub s: Vec<f64>,
    #[serde(default)]
    pub eps: EpsFile,
    #[serde(default)]
    pub coupling: CouplingFile,
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
}

fn half() -> Vec<f64> {
    vec![0.5]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub json: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub model: ModelFile,
    pub resolutions: Vec<Resolution>,
    pub query: QuerySpec,
    pub compacts: Vec<NamedCompact>,
    /// Defaults to every unordered pair, including `(C, C)`.
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
    #[serde(default)]
    pub seed: u64,
    /// Also run the exact check on grids of at most 16 points.
    #[serde(default)]
    pub exhaustive: bool,
    #[serde(default)]
    pub search: Option<SearchSpec>,
    #[serde(default)]
    pub stability: Option<StabilitySpec>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// A parsed experiment with its model resolved and its invariants checked.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub model: ModelSpace,
    pub origin: PathBuf,
}

impl Experiment {
    pub fn load(path: &Path) -> CliResult<Self> {
        Self::new(read_json(path)?, path)
    }

    pub fn new(spec: ExperimentSpec, origin: &Path) -> CliResult<Self> {
        let bad = |msg: String| CliError::input(origin, msg);
        let model = spec.model.to_model(origin)?;
        let dims = model.dims();
        if spec.resolutions.is_empty() {
            return Err(bad("field `resolutions` must not be empty".into()));
        }
        let mut previous: Option<Vec<usize>> = None;
        for r in &spec.resolutions {
            let cells = r.cells(dims);
            if cells.len() != dims {
                return Err(bad(format!("resolution {cells:?} does not have {dims} axes")));
            }
            if let Some(p) = &previous {
                let grows = cells.iter().zip(p).all(|(c, q)| c >= q) && cells != *p;
                if !grows {
                    return Err(bad(format!("resolutions must ascend: {p:?} then {cells:?}")));
                }
            }
            previous = Some(cells);
        }
        BMQuery::new(spec.query.n, 0.0, 0.0).map_err(|e| bad(format!("field `query.N`: {e}")))?;
        check_s_values("query.s_grid", &spec.query.s_grid, origin)?;
        if let HPolicy::Fixed(h) = spec.query.h_policy {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(bad(format!("field `query.h_policy`: fixed h must be finite and >= 0, got {h}")));
            }
        }
        if spec.compacts.is_empty() {
            return Err(bad("field `compacts` must not be empty".into()));
        }
        for (i, c) in spec.compacts.iter().enumerate() {
            if spec.compacts[..i].iter().any(|d| d.name == c.name) {
                return Err(bad(format!("compact name {:?} is used twice", c.name)));
            }
        }
        let known = |name: &str| spec.compacts.iter().any(|c| c.name == name);
        let pair_lists = [spec.pairs.as_ref(), spec.stability.as_ref().and_then(|s| s.pairs.as_ref())];
        for pairs in pair_lists.into_iter().flatten() {
            for (a, b) in pairs {
                for name in [a, b] {
                    if !known(name) {
                        return Err(bad(format!("pair refers to unknown compact {name:?}")));
                    }
                }
            }
        }
        if let Some(search) = &spec.search {
            if let Some(grid) = &search.s_grid {
                check_s_values("search.s_grid", grid, origin)?;
            }
        }
        if let Some(st) = &spec.stability {
            check_s_values("stability.s", &st.s, origin)?;
            let (c, f) = (st.coarse.cells(dims), st.fine.cells(dims));
            if c.len() != dims || f.len() != dims {
                return Err(bad(format!("stability resolutions must have {dims} axes")));
            }
        }
        Ok(Experiment { spec, model, origin: origin.to_path_buf() })
    }

    fn compact_seed(&self, index: usize) -> u64 {
        self.spec.seed.wrapping_add(index as u64)
    }

    fn pair_indices(&self, pairs: Option<&Vec<(String, String)>>) -> Vec<(usize, usize)> {
        let index = |name: &str| self.spec.compacts.iter().position(|c| c.name == name).expect("validated");
        match pairs {
            Some(p) => p.iter().map(|(a, b)| (index(a), index(b))).collect(),
            None => {
                let n = self.spec.compacts.len();
                (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
            }
        }
    }

    fn name(&self, i: usize) -> &str {
        &self.spec.compacts[i].name
    }

    fn grid(&self, cells: &[usize]) -> CliResult<(Discretization, Vec<SubsetMask>)> {
        let label = resolution_label(cells);
        let at = |source: CoreError| CliError::AtResolution { resolution: label.clone(), source };
        let points: usize = cells.iter().product();
        if points > MAX_GRID_POINTS {
            return Err(at(CoreError::Capacity { what: "grid points", limit: MAX_GRID_POINTS, found: points }));
        }
        let d = discretize_grid(&self.model, cells).map_err(at)?;
        let sets = self.resolve(&d, &label)?;
        Ok((d, sets))
    }

    fn resolve(&self, d: &Discretization, label: &str) -> CliResult<Vec<SubsetMask>> {
        self.spec
            .compacts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.compact.to_spec().resolve(&d.grid, &d.space, self.compact_seed(i)).map_err(|e| {
                    CliError::input(&self.origin, format!("resolution {label}: compact {:?}: {e}", c.name))
                })
            })
            .collect()
    }
}

fn check_s_values(field: &str, values: &[f64], origin: &Path) -> CliResult<()> {
    if values.is_empty() {
        return Err(CliError::input(origin, format!("field `{field}` must not be empty")));
    }
    if let Some(s) = values.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(CliError::input(origin, format!("field `{field}`: {s} is outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub resolution: String,
    /// Covering radius of the grid.
    pub h_grid: f64,
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "L")]
    pub l: String,
    pub report: BMReportJson,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelReport {
    pub resolution: String,
    pub points: usize,
    pub h_grid: f64,
    pub h: f64,
    pub reports: Vec<BMReportJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub name: Option<String>,
    pub seed: u64,
    pub tol: f64,
    pub rows: Vec<SweepRow>,
    pub exhaustive: Vec<LevelReport>,
    pub search: Vec<LevelReport>,
    pub violations: usize,
}

impl SweepReport {
    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                resolution: r.resolution.clone(),
                h: r.report.h,
                eps: None,
                s: r.report.s,
                n: r.report.n,
                lhs: r.report.lhs,
                rhs: r.report.rhs,
                deficit: r.report.deficit,
                status: r.report.status.to_string(),
                k: r.k.clone(),
                l: r.l.clone(),
            })
            .collect()
    }
}

struct Level {
    label: String,
    disc: Discretization,
    sets: Vec<SubsetMask>,
    h: f64,
}

fn violated(status: &str) -> bool {
    status == BMStatus::Violated.name()
}

/// Every compact pair at every resolution and every `s`, with `h = 4 h_grid`
/// (or the fixed value). Rows come out in (resolution, pair, s) order.
pub fn run_discretization_sweep(exp: &Experiment, tol: f64) -> CliResult<SweepReport> {
    let spec = &exp.spec;
    let dims = exp.model.dims();
    let mut levels = Vec::new();
    for r in &spec.resolutions {
        let cells = r.cells(dims);
        let (disc, sets) = exp.grid(&cells)?;
        let h = spec.query.h_policy.h(disc.h);
        levels.push(Level { label: resolution_label(&cells), disc, sets, h });
    }
    let pairs = exp.pair_indices(spec.pairs.as_ref());
    let grid = &spec.query.s_grid;
    let n = spec.query.n;

    let tasks: Vec<(usize, usize, f64)> = (0..levels.len())
        .flat_map(|li| (0..pairs.len()).flat_map(move |pi| grid.iter().map(move |&s| (li, pi, s))))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(li, pi, s)| {
            let level = &levels[li];
            let (a, b) = pairs[pi];
            let query = BMQuery::new(n, s, level.h)?;
            let report = bm_check_tol(&level.disc.space, &level.sets[a], &level.sets[b], query, tol)?;
            Ok(SweepRow {
                resolution: level.label.clone(),
                h_grid: level.disc.h,
                k: exp.name(a).to_string(),
                l: exp.name(b).to_string(),
                report: (&report).into(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let exhaustive = if spec.exhaustive {
        levels
            .par_iter()
            .filter(|l| l.disc.space.len() <= EXHAUSTIVE_MAX_POINTS)
            .map(|l| {
                let worst = bm_exhaustive_check(&l.disc.space, n, l.h, grid)
                    .map_err(|source| CliError::AtResolution { resolution: l.label.clone(), source })?
                    .with_tolerance(tol);
                Ok(level_report(l, vec![(&worst).into()]))
            })
            .collect::<CliResult<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let search = match &spec.search {
        Some(cfg) => levels
            .par_iter()
            .map(|l| {
                let config = SearchConfig {
                    seed: spec.seed,
                    iterations: cfg.iterations,
                    s_grid: cfg.s_grid.clone().unwrap_or_else(|| grid.clone()),
                    keep: cfg.keep.max(1),
                    ..SearchConfig::default()
                };
                let found = bm_search_violations(&l.disc.space, n, l.h, &config)
                    .map_err(|source| CliError::AtResolution { resolution: l.label.clone(), source })?;
                let reports = found.into_iter().map(|r| (&r.with_tolerance(tol)).into()).collect();
                Ok(level_report(l, reports))
            })
            .collect::<CliResult<Vec<_>>>()?,
        None => Vec::new(),
    };

    let violations = rows.iter().filter(|r| violated(r.report.status)).count()
        + exhaustive.iter().chain(&search).flat_map(|l| &l.reports).filter(|r| violated(r.status)).count();
    Ok(SweepReport { name: spec.name.clone(), seed: spec.seed, tol, rows, exhaustive, search, violations })
}

fn level_report(l: &Level, reports: Vec<BMReportJson>) -> LevelReport {
    LevelReport { resolution: l.label.clone(), points: l.disc.space.len(), h_grid: l.disc.h, h: l.h, reports }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRun {
    pub name: Option<String>,
    pub coarse: String,
    pub fine: String,
    pub h_coarse: f64,
    pub coupling: CouplingFile,
    pub tol: f64,
    pub rows: Vec<StabilityJson>,
    pub failed_steps: usize,
}

impl StabilityRun {
    pub fn ok(&self) -> bool {
        self.failed_steps == 0
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                resolution: format!("{}/{}", self.coarse, self.fine),
                h: r.h,
                eps: Some(r.eps),
                s: r.s,
                n: Some(r.n),
                lhs: r.chained_lhs,
                rhs: r.chained_rhs,
                deficit: r.chained_lhs - r.chained_rhs,
                status: if r.ok { "satisfied" } else { "violated" }.to_string(),
                k: r.k_name.clone(),
                l: r.l_name.clone(),
            })
            .collect()
    }
}

/// Replays the stability argument for every pair and `s` of the experiment's
/// `stability` section. Compacts are resolved on the fine grid; `h` follows
/// the query's policy on the coarse grid.
pub fn run_stability_replay(exp: &Experiment, tol: f64) -> CliResult<StabilityRun> {
    let spec = &exp.spec;
    let st =
        spec.stability.as_ref().ok_or_else(|| CliError::input(&exp.origin, "the spec has no `stability` section"))?;
    let dims = exp.model.dims();
    let (coarse, fine) = (st.coarse.cells(dims), st.fine.cells(dims));
    let label = format!("{}/{}", resolution_label(&coarse), resolution_label(&fine));
    let at = |source: CoreError| CliError::AtResolution { resolution: label.clone(), source };
    let points: usize = fine.iter().product();
    if points > MAX_GRID_POINTS {
        return Err(at(CoreError::Capacity { what: "grid points", limit: MAX_GRID_POINTS, found: points }));
    }
    let link = refine_link(&exp.model, &coarse, &fine).map_err(at)?;
    let sets = exp.resolve(link.fine(), &resolution_label(&fine))?;
    let h = spec.query.h_policy.h(link.h_coarse());
    let config = StabilityConfig {
        eps: match st.eps {
            EpsFile::SqrtDelta => EpsPolicy::SqrtDelta,
            EpsFile::Fixed(e) => EpsPolicy::Fixed(e),
        },
        coupling: match st.coupling {
            CouplingFile::Natural => CouplingChoice::Natural,
            CouplingFile::Optimal => CouplingChoice::Optimal,
        },
        tol,
    };
    let pairs = exp.pair_indices(st.pairs.as_ref().or(spec.pairs.as_ref()));
    let tasks: Vec<(usize, usize, f64)> =
        pairs.iter().flat_map(|&(a, b)| st.s.iter().map(move |&s| (a, b, s))).collect();
    let rows = tasks
        .par_iter()
        .map(|&(a, b, s)| {
            let query = BMQuery::new(spec.query.n, s, h).map_err(at)?;
            let r = stability_replay(&link, &sets[a], &sets[b], query, &config).map_err(at)?;
            Ok(StabilityJson::new(exp.name(a), exp.name(b), &r))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let failed_steps = rows.iter().map(|r| r.steps.iter().filter(|s| !s.holds).count()).sum();
    Ok(StabilityRun {
        name: spec.name.clone(),
        coarse: resolution_label(&coarse),
        fine: resolution_label(&fine),
        h_coarse: link.h_coarse(),
        coupling: st.coupling,
        tol,
        rows,
        failed_steps,
    })
}
