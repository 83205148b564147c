//! JSON file formats.
//!
//! Space file: `{"labels", "weights", "dist": [[...]]}`, or `coords` plus
//! `metric` (`l1`, `l2`, `linf`) with distances derived on load. When both
//! `dist` and `coords` are present the matrix wins and the coordinates are
//! kept as annotations. Subsets are sorted index arrays.

use std::fs;
use std::path::Path;

use mmbm_core::coupling::{Coupling, CrossDistance, MARGINAL_TOL};
use mmbm_core::discretize::{Ambient, Density, Discretization, ModelSpace};
use mmbm_core::space::index_labels;
use mmbm_core::{FiniteMetricMeasureSpace, Metric};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| {
        let full = e.to_string();
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
        }
    })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn parse_metric(name: &str) -> Option<Metric> {
    Metric::parse(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    /// Covering radius, written by `discretize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Cells per axis, written by `discretize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
}

impl SpaceFile {
    pub fn into_space(self, path: &Path) -> CliResult<FiniteMetricMeasureSpace> {
        let n = self.weights.len();
        let labels = self.labels.unwrap_or_else(|| index_labels(n));
        let space = match (self.dist, self.coords) {
            (Some(dist), coords) => {
                let space = FiniteMetricMeasureSpace::from_rows(labels, &dist, self.weights)?;
                match coords {
                    Some(c) => space.with_coords(c)?,
                    None => space,
                }
            }
            (None, Some(coords)) => {
                let name =
                    self.metric.ok_or_else(|| CliError::input(path, "field `metric` is required with `coords`"))?;
                let metric = parse_metric(&name)
                    .ok_or_else(|| CliError::input(path, format!("field `metric`: unknown metric {name:?}")))?;
                FiniteMetricMeasureSpace::from_coords(labels, coords, self.weights, metric)?
            }
            (None, None) => return Err(CliError::input(path, "either `dist` or `coords` is required")),
        };
        Ok(space)
    }

    pub fn from_space(space: &FiniteMetricMeasureSpace) -> Self {
        SpaceFile {
            labels: Some(space.labels().to_vec()),
            weights: space.weights().to_vec(),
            dist: Some((0..space.len()).map(|i| space.row(i).to_vec()).collect()),
            coords: space.coords().map(|c| c.to_vec()),
            metric: None,
            h: None,
            cells: None,
        }
    }

    pub fn from_discretization(d: &Discretization) -> Self {
        let mut file = Self::from_space(&d.space);
        if let Ambient::Norm(metric) = d.grid.model().ambient() {
            file.metric = Some(metric.name().to_string());
        }
        file.h = Some(d.h);
        file.cells = Some(d.grid.cells_per_axis().to_vec());
        file
    }
}

pub fn load_space(path: &Path) -> CliResult<FiniteMetricMeasureSpace> {
    read_json::<SpaceFile>(path)?.into_space(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum DensityFile {
    Uniform,
    Affine { a: Vec<f64>, b: Vec<f64> },
    Exponential { c: Vec<f64>, rate: Vec<f64> },
}

fn default_density() -> DensityFile {
    DensityFile::Uniform
}

fn default_metric() -> String {
    "l2".into()
}

fn unit() -> f64 {
    1.0
}

/// `{"kind":"box","sides":[1,1],"density":{"type":"uniform"},"metric":"l2"}`
/// or `{"kind":"circle","circumference":1,"density":1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelFile {
    Box {
        sides: Vec<f64>,
        #[serde(default = "default_density")]
        density: DensityFile,
        #[serde(default = "default_metric")]
        metric: String,
    },
    Circle {
        circumference: f64,
        #[serde(default = "unit")]
        density: f64,
    },
}

impl ModelFile {
    pub fn to_model(&self, path: &Path) -> CliResult<ModelSpace> {
        let model = match self {
            ModelFile::Box { sides, density, metric } => ModelSpace::Box {
                sides: sides.clone(),
                density: match density {
                    DensityFile::Uniform => Density::Uniform,
                    DensityFile::Affine { a, b } => Density::Affine { a: a.clone(), b: b.clone() },
                    DensityFile::Exponential { c, rate } => Density::Exponential { c: c.clone(), rate: rate.clone() },
                },
                metric: parse_metric(metric)
                    .ok_or_else(|| CliError::input(path, format!("field `metric`: unknown metric {metric:?}")))?,
            },
            ModelFile::Circle { circumference, density } => {
                ModelSpace::Circle { circumference: *circumference, density: *density }
            }
        };
        model.validate().map_err(|e| CliError::input(path, e.to_string()))?;
        Ok(model)
    }
}

pub fn load_model(path: &Path) -> CliResult<ModelSpace> {
    read_json::<ModelFile>(path)?.to_model(path)
}

/// One nonzero coupling entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub a: usize,
    pub b: usize,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<CouplingEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
}

impl CouplingFile {
    pub fn from_coupling(q: &Coupling, cost: Option<f64>) -> Self {
        CouplingFile {
            rows: q.rows(),
            cols: q.cols(),
            entries: q.entries().map(|(a, b, q)| CouplingEntry { a, b, q }).collect(),
            cost,
        }
    }

    pub fn to_coupling(&self, a: &FiniteMetricMeasureSpace, b: &FiniteMetricMeasureSpace) -> CliResult<Coupling> {
        let triplets: Vec<(usize, usize, f64)> = self.entries.iter().map(|e| (e.a, e.b, e.q)).collect();
        Ok(Coupling::from_triplets(a, b, &triplets, MARGINAL_TOL)?)
    }
}

/// `"ambient"` or a dense matrix with one row per point of the first space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CrossFile {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

impl CrossFile {
    pub fn resolve(
        &self,
        a: &FiniteMetricMeasureSpace,
        b: &FiniteMetricMeasureSpace,
        metric: Option<Metric>,
        origin: &Path,
    ) -> CliResult<CrossDistance> {
        match self {
            CrossFile::Named(name) if name == "ambient" => {
                let metric =
                    metric.ok_or_else(|| CliError::input(origin, "an ambient cross distance needs a metric"))?;
                Ok(CrossDistance::ambient(a, b, Ambient::Norm(metric))?)
            }
            CrossFile::Named(other) => Err(CliError::input(origin, format!("unknown cross distance {other:?}"))),
            CrossFile::Matrix(rows) => Ok(CrossDistance::from_rows(a, b, rows)?),
        }
    }
}

/// Parses `"4"` or `"4,8"` into cells per axis.
pub fn parse_cells(text: &str) -> CliResult<Vec<usize>> {
    text.split([',', 'x'])
        .map(|t| {
            t.trim().parse::<usize>().map_err(|_| CliError::Usage(format!("invalid cell count {t:?} in {text:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<T: DeserializeOwned>(text: &str) -> serde_json::Result<T> {
        serde_json::from_str(text)
    }

    #[test]
    fn space_from_dist() {
        let f: SpaceFile = parse(r#"{"weights":[1,1],"dist":[[0,2],[2,0]]}"#).unwrap();
        let s = f.into_space(Path::new("x")).unwrap();
        assert_eq!(s.dist(0, 1), 2.0);
        assert_eq!(s.labels(), &["0".to_string(), "1".to_string()]);
    }

    #[test]
    fn space_from_coords() {
        let f: SpaceFile =
            parse(r#"{"labels":["a","b"],"weights":[1,1],"coords":[[0,0],[3,4]],"metric":"l2"}"#).unwrap();
        assert_eq!(f.into_space(Path::new("x")).unwrap().dist(0, 1), 5.0);
        let f: SpaceFile = parse(r#"{"weights":[1],"coords":[[0]]}"#).unwrap();
        assert!(f.into_space(Path::new("x")).is_err());
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(parse::<SpaceFile>(r#"{"weights":[1],"dist":[[0]],"wieghts":[]}"#).is_err());
    }

    #[test]
    fn model_defaults() {
        let m: ModelFile = parse(r#"{"kind":"box","sides":[1,2]}"#).unwrap();
        let model = m.to_model(Path::new("m")).unwrap();
        assert_eq!(model, ModelSpace::uniform_box(vec![1.0, 2.0], Metric::L2));
        let m: ModelFile = parse(r#"{"kind":"box","sides":[1],"density":{"type":"affine","a":[0],"b":[2]}}"#).unwrap();
        assert!(m.to_model(Path::new("m")).is_ok());
        let m: ModelFile = parse(r#"{"kind":"circle","circumference":2}"#).unwrap();
        assert!(m.to_model(Path::new("m")).is_ok());
        let m: ModelFile = parse(r#"{"kind":"box","sides":[1,1,1,1]}"#).unwrap();
        assert!(m.to_model(Path::new("m")).is_err());
    }

    #[test]
    fn cells() {
        assert_eq!(parse_cells("4").unwrap(), vec![4]);
        assert_eq!(parse_cells("4,8").unwrap(), vec![4, 8]);
        assert_eq!(parse_cells("4x4").unwrap(), vec![4, 4]);
        assert!(parse_cells("4,a").is_err());
    }
}
