//! JSON file formats and number formatting shared by the CLI and the C ABI.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::critical::CriticalProblem;
use crate::dense::DenseTensor;
use crate::error::{Error, Result};
use crate::grassmann::{GrassmannTensor, SubspaceBasis};
use crate::multiview::{Camera, Profile, Scene};
use crate::reconstruction::CorrespondenceTuple;

/// Rounds to 12 significant digits and prints the shortest form of the
/// rounded value.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if rounded == 0.0 {
        return "0".into();
    }
    let mag = rounded.abs();
    if !(1e-4..1e15).contains(&mag) {
        format!("{rounded:e}")
    } else {
        format!("{rounded}")
    }
}

/// Rounds every float of a JSON value to 12 significant digits.
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    let r: f64 = format_number(x).parse().unwrap_or(x);
                    if let Some(m) = serde_json::Number::from_f64(r) {
                        *n = m;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidInput("empty matrix".into()));
    };
    if first.is_empty() || rows.iter().any(|r| r.len() != first.len()) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), first.len(), |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CameraJson {
    pub k: usize,
    pub h: usize,
    pub matrix: Vec<Vec<f64>>,
}

impl CameraJson {
    pub fn from_camera(c: &Camera) -> CameraJson {
        CameraJson {
            k: c.k(),
            h: c.h(),
            matrix: rows_of(c.matrix()),
        }
    }

    pub fn to_camera(&self) -> Result<Camera> {
        Camera::with_dims(self.k, self.h, matrix_from_rows(&self.matrix)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SceneJson {
    pub k: usize,
    pub points: Vec<Vec<f64>>,
}

impl SceneJson {
    pub fn from_scene(s: &Scene) -> SceneJson {
        SceneJson {
            k: s.k(),
            points: s.points().iter().map(|p| p.iter().copied().collect()).collect(),
        }
    }

    pub fn to_scene(&self) -> Result<Scene> {
        Scene::new(
            self.k,
            self.points.iter().map(|p| DVector::from_vec(p.clone())).collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TensorJson {
    pub k: usize,
    pub h_list: Vec<usize>,
    pub profile: Vec<usize>,
    pub dims: Vec<usize>,
    /// Row-major (last axis fastest).
    pub entries: Vec<f64>,
}

impl TensorJson {
    pub fn from_tensor(t: &GrassmannTensor) -> TensorJson {
        TensorJson {
            k: t.k(),
            h_list: t.h_list().to_vec(),
            profile: t.profile().alphas().to_vec(),
            dims: t.dims().to_vec(),
            entries: t.entries().data().to_vec(),
        }
    }

    pub fn to_tensor(&self) -> Result<GrassmannTensor> {
        let profile = Profile::new(self.profile.clone(), self.k, &self.h_list)?;
        let entries = DenseTensor::from_vec(&self.dims, self.entries.clone())?;
        GrassmannTensor::from_entries(self.k, self.h_list.clone(), profile, entries)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProblemJson {
    pub k: usize,
    pub h_list: Vec<usize>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<f64>>>,
}

impl ProblemJson {
    pub fn from_problem(prob: &CriticalProblem) -> ProblemJson {
        ProblemJson {
            k: prob.k(),
            h_list: prob.h_list().to_vec(),
            p: prob.p().iter().map(|c| rows_of(c.matrix())).collect(),
            q: prob.q().iter().map(|c| rows_of(c.matrix())).collect(),
        }
    }

    pub fn to_problem(&self) -> Result<CriticalProblem> {
        if self.p.len() != self.h_list.len() || self.q.len() != self.h_list.len() {
            return Err(Error::ShapeMismatch("camera counts differ from h_list".into()));
        }
        let cams = |list: &[Vec<Vec<f64>>]| -> Result<Vec<Camera>> {
            list.iter()
                .zip(&self.h_list)
                .map(|(m, &h)| Camera::with_dims(self.k, h, matrix_from_rows(m)?))
                .collect()
        };
        CriticalProblem::new(cams(&self.p)?, cams(&self.q)?)
    }
}

/// One tuple: for each view, the basis columns of the subspace as rows of
/// this list (each inner vector is one spanning point).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CorrespondencesJson {
    pub profile: Vec<usize>,
    pub tuples: Vec<Vec<Vec<Vec<f64>>>>,
}

impl CorrespondencesJson {
    pub fn from_tuples(profile: &Profile, tuples: &[CorrespondenceTuple]) -> CorrespondencesJson {
        CorrespondencesJson {
            profile: profile.alphas().to_vec(),
            tuples: tuples
                .iter()
                .map(|t| {
                    t.subspaces
                        .iter()
                        .map(|s| s.basis().column_iter().map(|c| c.iter().copied().collect()).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_tuples(&self) -> Result<Vec<CorrespondenceTuple>> {
        self.tuples
            .iter()
            .map(|views| {
                if views.len() != self.profile.len() {
                    return Err(Error::ShapeMismatch("tuple length differs from the profile".into()));
                }
                let subspaces = views
                    .iter()
                    .zip(&self.profile)
                    .map(|(cols, &alpha)| {
                        let m = matrix_from_rows(cols)?.transpose();
                        SubspaceBasis::new(alpha, m)
                    })
                    .collect::<Result<_>>()?;
                Ok(CorrespondenceTuple { subspaces })
            })
            .collect()
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
    round_json(&mut v);
    serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad JSON: {e}")))
}

pub fn read_file(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
