//! Camera stacks with prescribed center configurations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOL};
use crate::multiview::Camera;
use crate::random::{self, SeededRng};

/// A camera whose center is the span of the columns of `center`, with a
/// random invertible view basis.
pub fn camera_with_center(center: &DMatrix<f64>, rng: &mut SeededRng) -> Result<Camera> {
    let k1 = center.nrows();
    let complement = linalg::null_space(&center.transpose(), RANK_TOL);
    let h1 = complement.ncols();
    if h1 < 2 || h1 + linalg::numerical_rank(center, RANK_TOL) != k1 {
        return Err(Error::InvalidInput("center must be a proper subspace".into()));
    }
    let r = random::normal_matrix(rng, h1, h1);
    Camera::new(r * complement.transpose())
}

/// Center layouts for three projections `P^4 ⇢ P^2` (centers are lines).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterLayout {
    General,
    /// All three lines in one hyperplane.
    Hyperplane,
    /// Two of the lines meet; together the three still span `P^4`.
    MeetingPair,
    /// In one hyperplane, with two of the lines meeting.
    HyperplaneMeetingPair,
}

impl CenterLayout {
    pub const ALL: [CenterLayout; 4] = [
        CenterLayout::General,
        CenterLayout::Hyperplane,
        CenterLayout::MeetingPair,
        CenterLayout::HyperplaneMeetingPair,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CenterLayout::General => "general",
            CenterLayout::Hyperplane => "hyperplane",
            CenterLayout::MeetingPair => "meeting-pair",
            CenterLayout::HyperplaneMeetingPair => "hyperplane+meeting-pair",
        }
    }
}

/// Three cameras `P^4 ⇢ P^2` whose center lines follow `layout`. For the
/// meeting layouts, the centers of views `pair[0]` and `pair[1]` (0-based)
/// share a point.
pub fn lines_in_p4(layout: CenterLayout, pair: [usize; 2], seed: u64) -> Result<Vec<Camera>> {
    if pair[0] == pair[1] || pair.iter().any(|&v| v > 2) {
        return Err(Error::InvalidInput(format!("bad view pair {pair:?}")));
    }
    let mut rng = random::seeded(seed);
    let ambient = match layout {
        CenterLayout::General | CenterLayout::MeetingPair => DMatrix::identity(5, 5),
        _ => linalg::column_space(&random::normal_matrix(&mut rng, 5, 4), RANK_TOL),
    };
    let mut centers: Vec<DMatrix<f64>> = (0..3)
        .map(|_| &ambient * random::normal_matrix(&mut rng, ambient.ncols(), 2))
        .collect();
    if matches!(layout, CenterLayout::MeetingPair | CenterLayout::HyperplaneMeetingPair) {
        let shared = centers[pair[0]].column(0).into_owned();
        centers[pair[1]].set_column(0, &shared);
    }
    centers
        .iter()
        .map(|c| camera_with_center(c, &mut rng))
        .collect()
}
