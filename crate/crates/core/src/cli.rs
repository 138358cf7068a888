//! Command-line front end. [`dispatch`] parses an argument vector and returns
//! the payload and exit code instead of printing, so the binary is a thin
//! wrapper and tests can call it directly.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{self, AlsOptions};
use crate::canonical::{self, CanonicalDecomposition};
use crate::critical::{self, CriticalProblem, MEMBERSHIP_TOL};
use crate::error::{Error, Result};
use crate::grassmann::{self, GrassmannTensor};
use crate::instability::{self, ExperimentConfig};
use crate::io::{self, CameraJson, CorrespondencesJson, ProblemJson, SceneJson, TensorJson};
use crate::linalg::{self, RANK_TOL};
use crate::multiview::{self, Camera, Motion, MotionModel, Profile, Scene};
use crate::reconstruction::{self, RecoveryOptions};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "grasstensor", version, about = "Grassmann multiview tensors, reconstruction and critical loci")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for rank and membership decisions.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the payload to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    #[command(subcommand)]
    Tensor(TensorCmd),
    #[command(subcommand)]
    Canon(CanonCmd),
    #[command(subcommand)]
    Reconstruct(ReconstructCmd),
    #[command(subcommand)]
    Critical(CriticalCmd),
    #[command(subcommand)]
    Embed(EmbedCmd),
    #[command(subcommand)]
    Instability(InstabilityCmd),
}

/// Cameras from a file, or sampled in general position from `--k`/`--h`.
#[derive(Debug, Args)]
struct CameraSource {
    /// JSON array of cameras `{"k","h","matrix"}`.
    #[arg(long)]
    cameras: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    h: Vec<usize>,
}

#[derive(Debug, Args)]
struct ProblemSource {
    /// JSON problem `{"k","h_list","P","Q"}`.
    #[arg(long)]
    problem: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    h: Vec<usize>,
}

#[derive(Debug, Subcommand)]
enum TensorCmd {
    /// Build the Grassmann tensor of a camera list.
    Build {
        #[command(flatten)]
        src: CameraSource,
        #[arg(long, value_delimiter = ',', required = true)]
        profile: Vec<usize>,
    },
    /// Evaluate the tensor constraint on corresponding subspaces.
    Eval {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        correspondences: PathBuf,
    },
    /// Scale- and sign-invariant distance between two tensors.
    Distance {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Rank from the closed formula; `--certify` adds numerical evidence on
    /// seeded general cameras.
    Rank {
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        profile: Vec<usize>,
        #[arg(long)]
        certify: bool,
    },
    /// Core tensor and semi-orthogonal factors.
    Core {
        #[command(flatten)]
        src: CameraSource,
        #[arg(long, value_delimiter = ',', required = true)]
        profile: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum CanonCmd {
    Bifocal {
        #[command(flatten)]
        src: CameraSource,
    },
    Trifocal {
        #[command(flatten)]
        src: CameraSource,
    },
}

#[derive(Debug, Subcommand)]
enum ReconstructCmd {
    /// Linear tensor estimate from correspondences.
    Estimate {
        #[arg(long)]
        correspondences: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<usize>,
    },
    /// Cameras from a tensor (first camera fixed to `[I | 0]`).
    Cameras {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
    },
    /// Scene points from cameras and correspondences.
    Triangulate {
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long)]
        correspondences: PathBuf,
    },
    /// Project a scene into correspondences (test data).
    Project {
        #[arg(long)]
        cameras: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        profile: Vec<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum CriticalCmd {
    /// The matrices `M` and `N` of a problem.
    Build {
        #[command(flatten)]
        src: ProblemSource,
    },
    /// Membership of scene points.
    Check {
        #[command(flatten)]
        src: ProblemSource,
        #[arg(long)]
        points: PathBuf,
    },
    /// Sample points of the locus.
    Sample {
        #[command(flatten)]
        src: ProblemSource,
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Expected dimension, or local dimensions at `--points`.
    Dim {
        #[command(flatten)]
        src: ProblemSource,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Expected degree.
    Degree {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        h: Vec<usize>,
    },
    /// Conjugate points of critical points.
    Conjugate {
        #[command(flatten)]
        src: ProblemSource,
        #[arg(long)]
        points: PathBuf,
    },
    /// Membership of pairs in the unified locus.
    Unified {
        #[command(flatten)]
        src: ProblemSource,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelName {
    Parallel,
    General,
}

#[derive(Debug, Subcommand)]
enum EmbedCmd {
    /// Static embedding of a linearly moving point and of a camera at time t.
    Motion {
        #[arg(long, value_enum)]
        model: ModelName,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        point: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        speed: Option<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        velocity: Vec<f64>,
        /// A `3×4` camera file `{"k":3,"h":2,"matrix":...}` to embed.
        #[arg(long)]
        camera: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        time: f64,
    },
}

#[derive(Debug, Subcommand)]
enum InstabilityCmd {
    /// Run the σ sweep; records as CSV (default) or JSON.
    Run {
        #[command(flatten)]
        src: ProblemSource,
        #[arg(long, value_delimiter = ',', default_values_t = instability::DEFAULT_SIGMAS)]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 60)]
        points: usize,
        #[arg(long, value_delimiter = ',')]
        profile: Vec<usize>,
        #[arg(long, default_value_t = instability::DEFAULT_IMAGE_NOISE)]
        image_noise: f64,
        #[arg(long, default_value_t = instability::DEFAULT_FAR_THRESHOLD)]
        delta: f64,
    },
    /// Aggregate a records CSV per σ.
    Summarize {
        #[arg(long)]
        records: PathBuf,
        /// Also write an SVG chart of far fraction against σ.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type CmdResult = std::result::Result<String, Failure>;

struct Ctx {
    seed: u64,
    tol: Option<f64>,
    format: Option<Format>,
}

impl Ctx {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn load<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> std::result::Result<T, Failure> {
    Ok(io::from_json(&read(path)?)?)
}

fn emit<T: Serialize>(value: &T) -> CmdResult {
    Ok(io::to_json(value)? + "\n")
}

fn num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

/// A bare camera array, or any object with a `cameras` array (such as the
/// output of `reconstruct cameras`).
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum CameraFile {
    List(Vec<CameraJson>),
    Wrapped { cameras: Vec<CameraJson> },
}

fn load_cameras(path: &Path) -> std::result::Result<Vec<Camera>, Failure> {
    let list = match load::<CameraFile>(path)? {
        CameraFile::List(l) | CameraFile::Wrapped { cameras: l } => l,
    };
    Ok(list.iter().map(|c| c.to_camera()).collect::<Result<_>>()?)
}

fn cameras_from(src: &CameraSource, seed: u64) -> std::result::Result<Vec<Camera>, Failure> {
    match (&src.cameras, src.k) {
        (Some(path), _) => load_cameras(path),
        (None, Some(k)) if !src.h.is_empty() => Ok(multiview::sample_general_cameras(k, &src.h, seed)?),
        _ => Err(Failure::Usage("give --cameras FILE or --k with --h".into())),
    }
}

/// A problem, or the output of `critical build` which embeds one.
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum ProblemFile {
    Bare(ProblemJson),
    Wrapped { problem: ProblemJson },
}

fn problem_from(src: &ProblemSource, seed: u64) -> std::result::Result<CriticalProblem, Failure> {
    match (&src.problem, src.k) {
        (Some(path), _) => Ok(match load::<ProblemFile>(path)? {
            ProblemFile::Bare(p) | ProblemFile::Wrapped { problem: p } => p,
        }
        .to_problem()?),
        (None, Some(k)) if !src.h.is_empty() => Ok(CriticalProblem::sample(k, &src.h, seed)?),
        _ => Err(Failure::Usage("give --problem FILE or --k with --h".into())),
    }
}

fn points_from(path: &Path) -> std::result::Result<Scene, Failure> {
    Ok(load::<SceneJson>(path)?.to_scene()?)
}

fn tensor_from(path: &Path) -> std::result::Result<GrassmannTensor, Failure> {
    Ok(load::<TensorJson>(path)?.to_tensor()?)
}

fn camera_list(cams: &[Camera]) -> Vec<CameraJson> {
    cams.iter().map(CameraJson::from_camera).collect()
}

fn matrix_rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn canonical_json(d: &CanonicalDecomposition) -> serde_json::Value {
    json!({
        "canonical_cameras": camera_list(&d.canonical_cameras),
        "view_transforms": d.view_transforms.iter().map(matrix_rows).collect::<Vec<_>>(),
        "scene_homography": matrix_rows(d.scene_homography.matrix()),
        "residual": num(d.residual),
    })
}

fn tensor_cmd(cmd: &TensorCmd, ctx: &Ctx) -> CmdResult {
    match cmd {
        TensorCmd::Build { src, profile } => {
            let cams = cameras_from(src, ctx.seed)?;
            let h: Vec<usize> = cams.iter().map(|c| c.h()).collect();
            let Some(first) = cams.first() else {
                return Err(Failure::Usage("no cameras".into()));
            };
            let profile = Profile::new(profile.clone(), first.k(), &h)?;
            let t = grassmann::build_tensor(&cams, &profile)?;
            emit(&TensorJson::from_tensor(&t))
        }
        TensorCmd::Eval { tensor, correspondences } => {
            let t = tensor_from(tensor)?;
            let tuples = load::<CorrespondencesJson>(correspondences)?.to_tuples()?;
            let values: Vec<f64> = tuples
                .iter()
                .map(|tup| grassmann::evaluate_constraint(&t, &tup.subspaces))
                .collect::<Result<_>>()?;
            match ctx.format(Format::Json) {
                Format::Json => emit(&json!({ "values": values })),
                Format::Csv => Ok(std::iter::once("index,value".to_string())
                    .chain(values.iter().enumerate().map(|(i, v)| format!("{i},{}", io::format_number(*v))))
                    .collect::<Vec<_>>()
                    .join("\n")
                    + "\n"),
            }
        }
        TensorCmd::Distance { a, b } => {
            let d = grassmann::tensor_distance(&tensor_from(a)?, &tensor_from(b)?)?;
            Ok(io::format_number(d) + "\n")
        }
        TensorCmd::Rank { k, h, profile, certify } => {
            let formula = match (h.as_slice(), profile.as_slice()) {
                ([h1, h2], [a1, a2]) => analysis::bifocal_rank_formula(*k, *h1, *h2, *a1, *a2)?,
                ([h1, h2, h3], [a1, a2, a3]) => analysis::trifocal_rank_formula(*k, [*h1, *h2, *h3], [*a1, *a2, *a3])?,
                _ => return Err(Failure::Usage("rank formulas cover two or three views".into())),
            };
            if !certify {
                return Ok(format!("{formula}\n"));
            }
            let cams = multiview::sample_general_cameras(*k, h, ctx.seed)?;
            let prof = Profile::new(profile.clone(), *k, h)?;
            let t = grassmann::build_tensor(&cams, &prof)?;
            let numerical = if h.len() == 2 {
                json!({ "matrix_rank": linalg::numerical_rank(&analysis::flattening(&t, 0), ctx.tol(RANK_TOL)) })
            } else {
                let opts = AlsOptions { seed: ctx.seed, ..AlsOptions::default() };
                let b = analysis::cp_rank_bounds(t.entries(), formula as usize + 1, &opts)?;
                json!({
                    "lower": b.lower,
                    "upper": b.upper,
                    "certified": b.certified(),
                    "residuals": b.residuals.iter().map(|(r, e)| json!([r, num(*e)])).collect::<Vec<_>>(),
                })
            };
            emit(&json!({ "formula": formula, "numerical": numerical }))
        }
        TensorCmd::Core { src, profile } => {
            let cams = cameras_from(src, ctx.seed)?;
            let h: Vec<usize> = cams.iter().map(|c| c.h()).collect();
            let k = cams.first().map(|c| c.k()).unwrap_or(0);
            let profile = Profile::new(profile.clone(), k, &h)?;
            let core = analysis::extract_core(&cams, &profile)?;
            emit(&json!({
                "dims": core.dims(),
                "core": core.core.data(),
                "factors": core.factors.iter().map(matrix_rows).collect::<Vec<_>>(),
                "kept_slices": core.kept_slices,
            }))
        }
    }
}

fn canon_cmd(cmd: &CanonCmd, ctx: &Ctx) -> CmdResult {
    match cmd {
        CanonCmd::Bifocal { src } => {
            let cams = cameras_from(src, ctx.seed)?;
            let [a, b] = cams.as_slice() else {
                return Err(Failure::Usage("bifocal needs exactly two cameras".into()));
            };
            emit(&canonical_json(&canonical::canonicalize_bifocal(a, b)?))
        }
        CanonCmd::Trifocal { src } => {
            let cams = cameras_from(src, ctx.seed)?;
            let [a, b, c] = cams.as_slice() else {
                return Err(Failure::Usage("trifocal needs exactly three cameras".into()));
            };
            emit(&canonical_json(&canonical::canonicalize_trifocal(a, b, c)?))
        }
    }
}

fn reconstruct_cmd(cmd: &ReconstructCmd, ctx: &Ctx) -> CmdResult {
    match cmd {
        ReconstructCmd::Estimate { correspondences, k, h } => {
            let file: CorrespondencesJson = load(correspondences)?;
            let profile = Profile::new(file.profile.clone(), *k, h)?;
            let report = reconstruction::estimate_tensor(&file.to_tuples()?, *k, h, &profile)?;
            emit(&json!({
                "tensor": TensorJson::from_tensor(&report.tensor),
                "residual": num(report.residual),
                "condition": num(report.condition),
                "constraint_count": report.constraint_count,
                "status": format!("{:?}", report.status),
            }))
        }
        ReconstructCmd::Cameras { tensor, restarts } => {
            let t = tensor_from(tensor)?;
            let opts = RecoveryOptions { restarts: *restarts, seed: ctx.seed, ..RecoveryOptions::default() };
            let rec = reconstruction::recover_cameras(&t, &opts)?;
            emit(&json!({
                "cameras": camera_list(&rec.cameras),
                "distance": num(rec.distance),
                "restart": rec.restart,
            }))
        }
        ReconstructCmd::Triangulate { cameras, correspondences } => {
            let cams: Vec<Camera> = load_cameras(cameras)?;
            let tuples = load::<CorrespondencesJson>(correspondences)?.to_tuples()?;
            let tri: Vec<reconstruction::Triangulation> = tuples
                .iter()
                .map(|t| reconstruction::triangulate(&cams, t))
                .collect::<Result<_>>()?;
            let k = cams.first().map(|c| c.k()).unwrap_or(0);
            let scene = Scene::new(k, tri.iter().map(|t| t.point.clone()).collect())?;
            match ctx.format(Format::Json) {
                Format::Json => emit(&json!({
                    "scene": SceneJson::from_scene(&scene),
                    "residuals": tri.iter().map(|t| num(t.residual)).collect::<Vec<_>>(),
                })),
                Format::Csv => Ok(std::iter::once("index,residual".to_string())
                    .chain(tri.iter().enumerate().map(|(i, t)| format!("{i},{}", io::format_number(t.residual))))
                    .collect::<Vec<_>>()
                    .join("\n")
                    + "\n"),
            }
        }
        ReconstructCmd::Project { cameras, scene, profile } => {
            let cams: Vec<Camera> = load_cameras(cameras)?;
            let scene = points_from(scene)?;
            let h: Vec<usize> = cams.iter().map(|c| c.h()).collect();
            let profile = Profile::new(profile.clone(), scene.k(), &h)?;
            let tuples = reconstruction::make_correspondences(&cams, &scene, &profile, 1, ctx.seed)?;
            emit(&CorrespondencesJson::from_tuples(&profile, &tuples))
        }
    }
}

fn critical_cmd(cmd: &CriticalCmd, ctx: &Ctx) -> CmdResult {
    let tol = ctx.tol(MEMBERSHIP_TOL);
    match cmd {
        CriticalCmd::Build { src } => {
            let prob = problem_from(src, ctx.seed)?;
            let m = critical::build_m_matrix(&prob);
            let red = critical::reduce_to_n(&m, prob.k())?;
            let n = &red.matrix;
            let entries: Vec<Vec<Vec<f64>>> = (0..n.rows())
                .map(|r| (0..n.cols()).map(|c| vec_of(&n.coefficients(r, c))).collect())
                .collect();
            emit(&json!({
                "problem": ProblemJson::from_problem(&prob),
                "m_shape": [m.rows(), m.cols()],
                "n_shape": [n.rows(), n.cols()],
                "c_rows": red.c_rows,
                "n": entries,
            }))
        }
        CriticalCmd::Check { src, points } => {
            let prob = problem_from(src, ctx.seed)?;
            let scene = points_from(points)?;
            let rows: Vec<critical::Membership> = scene
                .points()
                .iter()
                .map(|x| critical::critical_membership(&prob, x, tol))
                .collect::<Result<_>>()?;
            match ctx.format(Format::Json) {
                Format::Json => emit(
                    &rows
                        .iter()
                        .map(|m| json!({ "is_member": m.is_member, "rank_gap": m.rank_gap }))
                        .collect::<Vec<_>>(),
                ),
                Format::Csv => Ok(std::iter::once("index,is_member,rank_gap".to_string())
                    .chain(rows.iter().enumerate().map(|(i, m)| format!("{i},{},{}", m.is_member, m.rank_gap)))
                    .collect::<Vec<_>>()
                    .join("\n")
                    + "\n"),
            }
        }
        CriticalCmd::Sample { src, count } => {
            let prob = problem_from(src, ctx.seed)?;
            let samples = critical::sample_critical_points(&prob, *count, ctx.seed)?;
            match ctx.format(Format::Json) {
                Format::Json => {
                    let scene = Scene::new(prob.k(), samples.iter().map(|s| s.point.clone()).collect())?;
                    emit(&SceneJson::from_scene(&scene))
                }
                Format::Csv => {
                    let mut out = String::from("index,residual,local_dimension\n");
                    for (i, s) in samples.iter().enumerate() {
                        let d = critical::local_dimension(&prob, &s.point)?;
                        out.push_str(&format!("{i},{},{d}\n", io::format_number(s.residual)));
                    }
                    Ok(out)
                }
            }
        }
        CriticalCmd::Dim { src, n, points } => match points {
            Some(path) => {
                let prob = problem_from(src, ctx.seed)?;
                let scene = points_from(path)?;
                let dims: Vec<usize> = scene
                    .points()
                    .iter()
                    .map(|x| critical::local_dimension(&prob, x))
                    .collect::<Result<_>>()?;
                emit(&dims)
            }
            None => {
                let (Some(k), false) = (src.k, src.h.is_empty()) else {
                    return Err(Failure::Usage("give --k and --h, or --points with a problem".into()));
                };
                let n = n.unwrap_or(src.h.len());
                Ok(format!("{}\n", critical::expected_dimension(n, k, &src.h)?))
            }
        },
        CriticalCmd::Degree { n, k, h } => Ok(format!("{}\n", critical::expected_degree(*n, *k, h)?)),
        CriticalCmd::Conjugate { src, points } => {
            let prob = problem_from(src, ctx.seed)?;
            let scene = points_from(points)?;
            let ys: Vec<DVector<f64>> = scene
                .points()
                .iter()
                .map(|x| critical::conjugate_point(&prob, x))
                .collect::<Result<_>>()?;
            emit(&SceneJson::from_scene(&Scene::new(prob.k(), ys)?))
        }
        CriticalCmd::Unified { src, x, y } => {
            let prob = problem_from(src, ctx.seed)?;
            let (xs, ys) = (points_from(x)?, points_from(y)?);
            if xs.len() != ys.len() {
                return Err(Failure::Usage("X and Y files differ in length".into()));
            }
            let flags: Vec<bool> = xs
                .points()
                .iter()
                .zip(ys.points())
                .map(|(a, b)| critical::unified_membership(&prob, a, b, tol))
                .collect::<Result<_>>()?;
            emit(&flags)
        }
    }
}

fn triple(v: &[f64], what: &str) -> std::result::Result<[f64; 3], Failure> {
    <[f64; 3]>::try_from(v).map_err(|_| Failure::Usage(format!("--{what} needs three comma-separated numbers")))
}

fn embed_cmd(cmd: &EmbedCmd) -> CmdResult {
    let EmbedCmd::Motion { model, direction, point, speed, velocity, camera, time } = cmd;
    let model = match model {
        ModelName::Parallel => MotionModel::Parallel { direction: triple(direction, "direction")? },
        ModelName::General => MotionModel::General,
    };
    let mut out = serde_json::Map::new();
    if !point.is_empty() {
        let initial = triple(point, "point")?;
        let motion = match (model, speed) {
            (MotionModel::Parallel { .. }, Some(s)) => Motion::Parallel { speed: *s },
            (MotionModel::General, None) => Motion::General { velocity: triple(velocity, "velocity")? },
            _ => return Err(Failure::Usage("parallel motion takes --speed, general takes --velocity".into())),
        };
        let embedded = multiview::embed_linear_motion(initial, &motion);
        let at_t = multiview::moving_point(initial, &motion, &model, *time)?;
        out.insert("embedded_point".into(), json!(vec_of(&embedded)));
        out.insert("point_at_time".into(), json!(vec_of(&at_t)));
    }
    if let Some(path) = camera {
        let base = load::<CameraJson>(path)?.to_camera()?;
        let cam = multiview::embed_motion_camera(base.matrix(), *time, &model)?;
        out.insert("camera".into(), serde_json::to_value(CameraJson::from_camera(&cam)).map_err(|e| Error::Io(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Failure::Usage("give --point and/or --camera".into()));
    }
    emit(&serde_json::Value::Object(out))
}

fn instability_cmd(cmd: &InstabilityCmd, ctx: &Ctx) -> CmdResult {
    match cmd {
        InstabilityCmd::Run { src, sigmas, trials, points, profile, image_noise, delta } => {
            let mut cfg = if src.problem.is_none() && src.k.is_none() {
                ExperimentConfig::two_view_default(ctx.seed)?
            } else {
                let problem = problem_from(src, ctx.seed)?;
                let alphas = if profile.is_empty() { problem.h_list().to_vec() } else { profile.clone() };
                let profile = Profile::new(alphas, problem.k(), problem.h_list())?;
                ExperimentConfig { problem, profile, ..ExperimentConfig::two_view_default(ctx.seed)? }
            };
            if !profile.is_empty() {
                cfg.profile = Profile::new(profile.clone(), cfg.problem.k(), cfg.problem.h_list())?;
            }
            cfg.sigmas = sigmas.clone();
            cfg.trials_per_sigma = *trials;
            cfg.n_points = *points;
            cfg.image_noise = *image_noise;
            cfg.far_threshold = *delta;
            let records = instability::run_experiment(&cfg)?;
            match ctx.format(Format::Csv) {
                Format::Csv => Ok(instability::records_csv(&records, cfg.far_threshold)),
                Format::Json => emit(&json!({
                    "far_threshold": num(cfg.far_threshold),
                    "records": records.iter().map(|r| json!({
                        "sigma": num(r.sigma),
                        "trial": r.trial,
                        "tensor_distance": num(r.tensor_distance),
                        "verdict": r.verdict.name(),
                    })).collect::<Vec<_>>(),
                })),
            }
        }
        InstabilityCmd::Summarize { records, svg } => {
            let (recs, delta) = instability::parse_records_csv(&read(records)?)?;
            let rows = instability::summarize(&recs)?;
            if let Some(path) = svg {
                std::fs::write(path, instability::summary_svg(&rows))
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            }
            let delta = delta.unwrap_or(instability::DEFAULT_FAR_THRESHOLD);
            match ctx.format(Format::Csv) {
                Format::Csv => Ok(instability::summary_csv(&rows, delta)),
                Format::Json => {
                    let t = instability::trend(&rows);
                    emit(&json!({
                        "far_threshold": num(delta),
                        "rows": rows.iter().map(|r| json!({
                            "sigma": num(r.sigma),
                            "n": r.n,
                            "far_fraction": num(r.far_fraction),
                            "mean_distance": num(r.mean_distance),
                        })).collect::<Vec<_>>(),
                        "inversions": t.inversions,
                        "spearman": num(t.spearman),
                    }))
                }
            }
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn dispatch<I, T>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CommandOutcome {
                    exit_code: 0,
                    stdout: text,
                    stderr: String::new(),
                },
                _ => CommandOutcome {
                    exit_code: 2,
                    stdout: String::new(),
                    stderr: format!("UsageError: {text}"),
                },
            };
        }
    };
    let ctx = Ctx {
        seed: cli.seed,
        tol: cli.tol,
        format: cli.format,
    };
    let result = match &cli.command {
        Command::Tensor(c) => tensor_cmd(c, &ctx),
        Command::Canon(c) => canon_cmd(c, &ctx),
        Command::Reconstruct(c) => reconstruct_cmd(c, &ctx),
        Command::Critical(c) => critical_cmd(c, &ctx),
        Command::Embed(c) => embed_cmd(c),
        Command::Instability(c) => instability_cmd(c, &ctx),
    };
    let result = result.and_then(|payload| match &cli.out {
        Some(path) => std::fs::write(path, &payload)
            .map(|_| String::new())
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => Ok(payload),
    });
    match result {
        Ok(stdout) => CommandOutcome { exit_code: 0, stdout, stderr: String::new() },
        Err(Failure::Usage(msg)) => CommandOutcome {
            exit_code: 2,
            stdout: String::new(),
            stderr: format!("UsageError: {msg}\n"),
        },
        Err(Failure::Domain(e)) => CommandOutcome {
            exit_code: 1,
            stdout: String::new(),
            stderr: format!("{}: {e}\n", e.code()),
        },
    }
}
