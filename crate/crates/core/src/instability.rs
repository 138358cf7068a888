//! Reconstruction instability near critical configurations: perturb a
//! critical scene, re-estimate the tensor, and count how often the estimate
//! lands far from the truth.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::critical::{self, CriticalProblem};
use crate::error::{Error, Result};
use crate::grassmann::{self, GrassmannTensor};
use crate::io::format_number;
use crate::multiview::{Profile, Scene};
use crate::random;
use crate::reconstruction;

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// The scene is sampled on the locus of the swapped problem, so that it
    /// is critical for the cameras `problem.p()`, which take the images.
    pub problem: CriticalProblem,
    pub profile: Profile,
    pub sigmas: Vec<f64>,
    pub trials_per_sigma: usize,
    pub n_points: usize,
    /// Standard deviation of the noise added to the images.
    pub image_noise: f64,
    /// `δ`: an estimate is far when its distance to the truth exceeds it.
    pub far_threshold: f64,
    pub seed: u64,
}

pub const DEFAULT_SIGMAS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
pub const DEFAULT_IMAGE_NOISE: f64 = 1e-3;
pub const DEFAULT_FAR_THRESHOLD: f64 = 0.1;

impl ExperimentConfig {
    /// Two views `P^3 ⇢ P^2`, profile `(2, 2)`, 60 points, 200 trials per σ.
    pub fn two_view_default(seed: u64) -> Result<ExperimentConfig> {
        let problem = CriticalProblem::sample(3, &[2, 2], seed)?;
        let profile = Profile::new(vec![2, 2], 3, &[2, 2])?;
        Ok(ExperimentConfig {
            problem,
            profile,
            sigmas: DEFAULT_SIGMAS.to_vec(),
            trials_per_sigma: 200,
            n_points: 60,
            image_noise: DEFAULT_IMAGE_NOISE,
            far_threshold: DEFAULT_FAR_THRESHOLD,
            seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigmas.is_empty() || self.sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("sigmas must be positive".into()));
        }
        if self.sigmas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("sigmas must be ascending".into()));
        }
        if self.trials_per_sigma == 0 || self.n_points == 0 {
            return Err(Error::InvalidInput("need at least one trial and one point".into()));
        }
        if !(self.far_threshold > 0.0 && self.far_threshold < 1.0) {
            return Err(Error::InvalidInput("far threshold must lie in (0, 1)".into()));
        }
        if !(self.image_noise >= 0.0) {
            return Err(Error::InvalidInput("image noise must be non-negative".into()));
        }
        Profile::new(
            self.profile.alphas().to_vec(),
            self.problem.k(),
            self.problem.h_list(),
        )?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Near,
    Far,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Near => "near",
            Verdict::Far => "far",
        }
    }

    pub fn parse(s: &str) -> Result<Verdict> {
        match s {
            "near" => Ok(Verdict::Near),
            "far" => Ok(Verdict::Far),
            other => Err(Error::InvalidInput(format!("unknown verdict {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub sigma: f64,
    pub trial: usize,
    pub tensor_distance: f64,
    pub verdict: Verdict,
    /// Conditioning of the linear estimate (see `EstimationReport`).
    pub condition: f64,
}

/// `n_points` points on the locus of `problem`.
pub fn generate_configuration(problem: &CriticalProblem, n_points: usize, seed: u64) -> Result<Scene> {
    let samples = critical::sample_critical_points(problem, n_points, seed)?;
    Scene::new(problem.k(), samples.into_iter().map(|s| s.point).collect())
}

fn chart_index(x: &DVector<f64>) -> usize {
    x.iamax()
}

/// Gaussian noise of standard deviation `sigma` on the affine
/// coordinates of each point (chart: largest entry set to one), then back to
/// unit homogeneous vectors.
pub fn perturb_points(points: &[DVector<f64>], sigma: f64, seed: u64) -> Result<Vec<DVector<f64>>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput("sigma must be non-negative".into()));
    }
    let mut rng = random::seeded(seed);
    points
        .iter()
        .map(|x| {
            let c = chart_index(x);
            if x[c] == 0.0 {
                return Err(Error::InvalidInput("zero point".into()));
            }
            let mut affine = x / x[c];
            for i in 0..affine.len() {
                if i != c {
                    affine[i] += sigma * random::normal(&mut rng);
                }
            }
            Ok(affine.normalize() * x[c].signum())
        })
        .collect()
}

fn truth(cfg: &ExperimentConfig) -> Result<GrassmannTensor> {
    grassmann::build_tensor(cfg.problem.p(), &cfg.profile)?.normalized()
}

fn trial(
    cfg: &ExperimentConfig,
    scene: &Scene,
    truth: &GrassmannTensor,
    sigma_index: usize,
    trial: usize,
) -> Result<ExperimentRecord> {
    let sigma = cfg.sigmas[sigma_index];
    let base = random::derive_seed(cfg.seed, &[sigma_index as u64, trial as u64]);
    let perturbed = perturb_points(scene.points(), sigma, random::derive_seed(base, &[0]))?;
    let mut images = Vec::with_capacity(perturbed.len());
    for x in &perturbed {
        let views: Vec<DVector<f64>> = cfg.problem.p().iter().map(|c| c.project(x)).collect::<Result<_>>()?;
        images.push(views);
    }
    let mut noisy = Vec::with_capacity(images.len());
    for (i, views) in images.iter().enumerate() {
        let seed = random::derive_seed(base, &[1, i as u64]);
        noisy.push(perturb_points(views, cfg.image_noise, seed)?);
    }
    let tuples = reconstruction::tuples_from_images(&noisy, &cfg.profile, 1, random::derive_seed(base, &[2]))?;
    let report = reconstruction::estimate_tensor(&tuples, cfg.problem.k(), cfg.problem.h_list(), &cfg.profile)?;
    let d = grassmann::tensor_distance(&report.tensor, truth)?;
    Ok(ExperimentRecord {
        sigma,
        trial,
        tensor_distance: d,
        verdict: if d > cfg.far_threshold { Verdict::Far } else { Verdict::Near },
        condition: report.condition,
    })
}

/// The full sweep, one record per (σ, trial) in σ-major order. Trials run in
/// parallel with seeds derived from `(seed, σ index, trial)`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    cfg.validate()?;
    let scene = generate_configuration(&cfg.problem.swapped(), cfg.n_points, random::derive_seed(cfg.seed, &[u64::MAX]))?;
    let truth = truth(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.sigmas.len())
        .flat_map(|s| (0..cfg.trials_per_sigma).map(move |t| (s, t)))
        .collect();
    jobs.par_iter()
        .map(|&(s, t)| trial(cfg, &scene, &truth, s, t))
        .collect()
}

/// Estimate on the unperturbed critical scene with noiseless images; the
/// linear system has a second near-null direction there.
pub fn critical_conditioning(cfg: &ExperimentConfig) -> Result<reconstruction::EstimationReport> {
    cfg.validate()?;
    let scene = generate_configuration(&cfg.problem.swapped(), cfg.n_points, random::derive_seed(cfg.seed, &[u64::MAX]))?;
    let tuples = reconstruction::make_correspondences(cfg.problem.p(), &scene, &cfg.profile, 1, cfg.seed)?;
    reconstruction::estimate_tensor(&tuples, cfg.problem.k(), cfg.problem.h_list(), &cfg.profile)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub sigma: f64,
    pub n: usize,
    pub far_fraction: f64,
    pub mean_distance: f64,
}

/// Per-σ aggregation, ascending in σ.
pub fn summarize(records: &[ExperimentRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted: Vec<&ExperimentRecord> = records.iter().collect();
    sorted.sort_by(|a, b| a.sigma.total_cmp(&b.sigma).then(a.trial.cmp(&b.trial)));
    let mut rows: Vec<SummaryRow> = Vec::new();
    for group in sorted.chunk_by(|a, b| a.sigma.total_cmp(&b.sigma).is_eq()) {
        let n = group.len();
        let far = group.iter().filter(|r| r.verdict == Verdict::Far).count();
        let total: f64 = group.iter().map(|r| r.tensor_distance).sum();
        rows.push(SummaryRow {
            sigma: group[0].sigma,
            n,
            far_fraction: far as f64 / n as f64,
            mean_distance: total / n as f64,
        });
    }
    Ok(rows)
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with tied values given their average rank; a
/// constant input yields 0.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() || a.len() < 2 {
        return 0.0;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() + 1) as f64 / 2.0;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - mean) * (y - mean);
        da += (x - mean).powi(2);
        db += (y - mean).powi(2);
    }
    let r = num / (da * db).sqrt();
    if r.is_finite() { r } else { 0.0 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    /// Adjacent σ pairs where the far fraction goes up.
    pub inversions: usize,
    pub spearman: f64,
}

impl Trend {
    pub fn holds(&self) -> bool {
        self.inversions <= 1 && self.spearman <= 0.0
    }
}

pub fn trend(rows: &[SummaryRow]) -> Trend {
    let sig: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    let far: Vec<f64> = rows.iter().map(|r| r.far_fraction).collect();
    Trend {
        inversions: far.windows(2).filter(|w| w[1] > w[0]).count(),
        spearman: spearman(&sig, &far),
    }
}

pub const RECORD_HEADER: &str = "sigma,trial,tensor_distance,verdict";
pub const SUMMARY_HEADER: &str = "sigma,n,far_fraction,mean_distance";

/// Records as CSV; the first line states `δ`.
pub fn records_csv(records: &[ExperimentRecord], far_threshold: f64) -> String {
    let mut out = format!("# far_threshold={}\n{RECORD_HEADER}\n", format_number(far_threshold));
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_number(r.sigma),
            r.trial,
            format_number(r.tensor_distance),
            r.verdict.name()
        ));
    }
    out
}

pub fn summary_csv(rows: &[SummaryRow], far_threshold: f64) -> String {
    let mut out = format!("# far_threshold={}\n{SUMMARY_HEADER}\n", format_number(far_threshold));
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_number(r.sigma),
            r.n,
            format_number(r.far_fraction),
            format_number(r.mean_distance)
        ));
    }
    out
}

/// Reads [`records_csv`] output; returns the records and `δ` if stated.
pub fn parse_records_csv(text: &str) -> Result<(Vec<ExperimentRecord>, Option<f64>)> {
    let mut threshold = None;
    let mut records = Vec::new();
    let mut seen_header = false;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("far_threshold=") {
                threshold = Some(parse_f64(v, no)?);
            }
            continue;
        }
        if !seen_header {
            if line != RECORD_HEADER {
                return Err(Error::InvalidInput(format!("expected header {RECORD_HEADER:?}")));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::InvalidInput(format!("line {}: expected 4 fields", no + 1)));
        }
        records.push(ExperimentRecord {
            sigma: parse_f64(fields[0], no)?,
            trial: fields[1]
                .parse()
                .map_err(|_| Error::InvalidInput(format!("line {}: bad trial index", no + 1)))?,
            tensor_distance: parse_f64(fields[2], no)?,
            verdict: Verdict::parse(fields[3])?,
            condition: f64::NAN,
        });
    }
    Ok((records, threshold))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::InvalidInput(format!("line {}: bad number {s:?}", line + 1)))
}

/// Far fraction against `log10 σ` as a bare SVG polyline.
pub fn summary_svg(rows: &[SummaryRow]) -> String {
    let (w, h, pad) = (480.0, 320.0, 40.0);
    let logs: Vec<f64> = rows.iter().map(|r| r.sigma.log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let points: Vec<String> = rows
        .iter()
        .zip(&logs)
        .map(|(r, l)| {
            let x = pad + (l - lo) / span * (w - 2.0 * pad);
            let y = h - pad - r.far_fraction * (h - 2.0 * pad);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\">log10 sigma</text>\n\
         <text x=\"10\" y=\"{pad}\">far fraction</text>\n\
         <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{pts}\"/>\n\
         </svg>\n",
        b = h - pad,
        r = w - pad,
        cx = w / 2.0,
        ty = h - 8.0,
        pts = points.join(" ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(sigma: f64, trial: usize, d: f64) -> ExperimentRecord {
        ExperimentRecord {
            sigma,
            trial,
            tensor_distance: d,
            verdict: if d > 0.1 { Verdict::Far } else { Verdict::Near },
            condition: 1.0,
        }
    }

    #[test]
    fn zero_sigma_keeps_points() {
        let pts = vec![DVector::from_vec(vec![0.2, -0.5, 0.1, 0.3]).normalize()];
        let out = perturb_points(&pts, 0.0, 3).unwrap();
        assert!((&out[0] - &pts[0]).norm() < 1e-15);
    }

    #[test]
    fn perturbation_has_the_requested_spread() {
        let base = DVector::from_vec(vec![1.0, 0.2, -0.3, 0.1]);
        let pts = vec![base.clone(); 2500];
        let sigma = 1e-3;
        let out = perturb_points(&pts, sigma, 11).unwrap();
        let mut acc = Vec::new();
        for x in &out {
            let a = x / x[0];
            for i in 1..4 {
                acc.push(a[i] - base[i]);
            }
        }
        let var = acc.iter().map(|d| d * d).sum::<f64>() / acc.len() as f64;
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.1);
        assert_eq!(out, perturb_points(&pts, sigma, 11).unwrap());
    }

    #[test]
    fn summary_of_hand_built_records() {
        let recs = vec![record(0.1, 0, 0.5), record(0.1, 1, 0.01), record(0.01, 0, 0.0)];
        let rows = summarize(&recs).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].sigma, rows[0].n, rows[0].far_fraction), (0.01, 1, 0.0));
        assert_eq!((rows[1].n, rows[1].far_fraction), (2, 0.5));
        assert!((rows[1].mean_distance - 0.255).abs() < 1e-15);
        let mut rev = recs.clone();
        rev.reverse();
        assert_eq!(summarize(&rev).unwrap(), rows);
        assert_eq!(summarize(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn spearman_with_ties() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]), 0.0);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 1.0, 2.0, 3.0]);
        assert!(r > 0.9 && r < 1.0);
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![record(1e-4, 0, 0.25), record(1e-4, 1, 1e-9)];
        let text = records_csv(&recs, 0.1);
        let (back, delta) = parse_records_csv(&text).unwrap();
        assert_eq!(delta, Some(0.1));
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].tensor_distance, 0.25);
        assert_eq!(back[1].verdict, Verdict::Near);
    }

    #[test]
    fn noiseless_critical_data_is_ill_conditioned() {
        let cfg = ExperimentConfig::two_view_default(4).unwrap();
        let report = critical_conditioning(&cfg).unwrap();
        assert!(report.condition < reconstruction::ILL_CONDITIONED_BELOW);
    }
}
