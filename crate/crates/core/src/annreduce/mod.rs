//! Gap approximate nearest neighbour search over `{0,1}^d`, solved either by
//! Hamming-ball enumeration (small thresholds) or through one call to an
//! attention solver (the fine-grained reduction from Gap-ANN to attention).
//!
//! For every query `a_i` the problem asks to tell apart
//!
//! * near: some `b_j` has `‖a_i − b_j‖₀ ≤ t`, and
//! * far: every `b_j` has `‖a_i − b_j‖₀ ≥ (1+ε)t`.
//!
//! Indices that are neither are outside the promise; the deciders still
//! return an answer for them, with no guarantee attached.

mod ball;
mod decide;
pub mod gen;
mod io;
mod reduction;

pub use ball::{ball_work, hamming_ball_decide, BALL_BUDGET};
pub use decide::{ann_binary_search, gap_ann_decide, DecideOptions, DecisionPath, GapDecision, Route, SearchOutcome};
pub use io::{read_points, write_points};
pub use reduction::{build_attention_instance, CbScale, ReductionParams, BETA_CAP};

use crate::error::{Error, Result};

/// Per-index answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapCase {
    /// Case 1: a point of `B` lies within distance `t`.
    Near,
    /// Case 2: every point of `B` is at distance at least `(1+ε)t`.
    Far,
}

/// Two equally sized sets of binary vectors with a threshold and a gap.
#[derive(Clone, Debug, PartialEq)]
pub struct GapAnnInstance {
    points_a: Vec<Vec<u8>>,
    points_b: Vec<Vec<u8>>,
    dim: usize,
    t: usize,
    eps: f64,
}

impl GapAnnInstance {
    pub fn new(points_a: Vec<Vec<u8>>, points_b: Vec<Vec<u8>>, t: usize, eps: f64) -> Result<Self> {
        if points_a.is_empty() || points_a.len() != points_b.len() {
            return Err(Error::InvalidParameter(format!(
                "need two non-empty point sets of equal size, got {} and {}",
                points_a.len(),
                points_b.len()
            )));
        }
        let dim = points_a[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter("points must have at least one coordinate".into()));
        }
        for (idx, p) in points_a.iter().chain(&points_b).enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "point {idx} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if let Some(coord) = p.iter().position(|&x| x > 1) {
                return Err(Error::NonBinary {
                    point: idx,
                    coord,
                    value: p[coord],
                });
            }
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("gap {eps} must be positive")));
        }
        Ok(Self {
            points_a,
            points_b,
            dim,
            t,
            eps,
        })
    }

    pub fn n(&self) -> usize {
        self.points_a.len()
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn t(&self) -> usize {
        self.t
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn points_a(&self) -> &[Vec<u8>] {
        &self.points_a
    }
    pub fn points_b(&self) -> &[Vec<u8>] {
        &self.points_b
    }

    /// Same points, different threshold.
    pub fn with_threshold(&self, t: usize) -> Self {
        Self { t, ..self.clone() }
    }

    /// Applies [`complement_transform`] to every point; the threshold
    /// doubles along with every distance.
    pub fn complemented(&self) -> Self {
        let tr = |ps: &[Vec<u8>]| ps.iter().map(|p| complement_unchecked(p)).collect();
        Self {
            points_a: tr(&self.points_a),
            points_b: tr(&self.points_b),
            dim: 2 * self.dim,
            t: 2 * self.t,
            eps: self.eps,
        }
    }

    /// Every point has exactly `dim / 2` ones.
    pub fn is_balanced(&self) -> bool {
        self.dim.is_multiple_of(2)
            && self
                .points_a
                .iter()
                .chain(&self.points_b)
                .all(|p| 2 * weight(p) == self.dim)
    }

    /// Ground truth under the promise: `Some(Near)` if the nearest `b` is
    /// within `t`, `Some(Far)` if it is at least `(1+ε)t` away, `None`
    /// otherwise.
    pub fn classify(&self) -> Vec<Option<GapCase>> {
        let far_from = (1.0 + self.eps) * self.t as f64;
        hamming_bruteforce(self)
            .into_iter()
            .map(|m| {
                if m <= self.t {
                    Some(GapCase::Near)
                } else if m as f64 >= far_from {
                    Some(GapCase::Far)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn satisfies_promise(&self) -> bool {
        self.classify().iter().all(Option::is_some)
    }
}

fn complement_unchecked(a: &[u8]) -> Vec<u8> {
    a.iter().copied().chain(a.iter().map(|&x| 1 - x)).collect()
}

/// `a ↦ (a, 1 − a)`: every image has weight `d`, and all pairwise Hamming
/// distances double.
pub fn complement_transform(a: &[u8]) -> Result<Vec<u8>> {
    if let Some(coord) = a.iter().position(|&x| x > 1) {
        return Err(Error::NonBinary {
            point: 0,
            coord,
            value: a[coord],
        });
    }
    Ok(complement_unchecked(a))
}

pub fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub fn weight(a: &[u8]) -> usize {
    a.iter().filter(|&&x| x == 1).count()
}

/// `min_j ‖a_i − b_j‖₀` for every `i`, by exhaustive scan.
pub fn hamming_bruteforce(inst: &GapAnnInstance) -> Vec<usize> {
    inst.points_a
        .iter()
        .map(|a| {
            inst.points_b
                .iter()
                .map(|b| hamming(a, b))
                .min()
                .expect("point sets are non-empty")
        })
        .collect()
}
