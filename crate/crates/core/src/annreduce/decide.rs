use crate::attention::AttentionSolver;
use crate::error::{Error, Result};

use super::ball::{ball_work, hamming_ball_decide, BALL_BUDGET};
use super::reduction::{build_attention_instance, CbScale, ReductionParams};
use super::{GapAnnInstance, GapCase};

/// Which decider [`gap_ann_decide`] runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Route {
    /// Ball enumeration when it fits in [`BALL_BUDGET`], otherwise attention.
    #[default]
    Auto,
    ForceBrute,
    ForceAttention,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecideOptions {
    pub route: Route,
    pub scale: CbScale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionPath {
    HammingBall,
    Attention,
}

#[derive(Clone, Debug)]
pub struct GapDecision {
    pub cases: Vec<GapCase>,
    pub path: DecisionPath,
    /// Present on the attention path.
    pub params: Option<ReductionParams>,
    /// First output column restricted to the query rows, attention path only.
    pub scores: Option<Vec<f64>>,
}

impl GapDecision {
    pub fn any_near(&self) -> bool {
        self.cases.contains(&GapCase::Near)
    }
}

/// Decides every query of a raw (not necessarily balanced) instance.
///
/// On the attention path the instance is complemented, encoded, and handed
/// to `solver` once; query `i` is near iff its score is at least `t̃₀`.
pub fn gap_ann_decide(inst: &GapAnnInstance, opts: &DecideOptions, solver: &dyn AttentionSolver) -> Result<GapDecision> {
    let brute = match opts.route {
        Route::ForceBrute => true,
        Route::ForceAttention => false,
        Route::Auto => inst.t() == 0 || ball_work(inst.n(), inst.dim(), inst.t()) <= BALL_BUDGET,
    };
    if brute {
        let flags = hamming_ball_decide(inst)?;
        return Ok(GapDecision {
            cases: flags.into_iter().map(to_case).collect(),
            path: DecisionPath::HammingBall,
            params: None,
            scores: None,
        });
    }

    let balanced = inst.complemented();
    let (att, params) = build_attention_instance(&balanced, opts.scale)?;
    let out = solver.solve(&att)?;
    if out.shape() != (att.n(), att.d()) {
        return Err(Error::DimensionMismatch {
            op: "attention solver output",
            left: (att.n(), att.d()),
            right: out.shape(),
        });
    }
    let scores: Vec<f64> = (0..inst.n()).map(|i| out.get(i, 0)).collect();
    if let Some(i) = scores.iter().position(|u| !u.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    Ok(GapDecision {
        cases: scores.iter().map(|&u| to_case(u >= params.t_tilde0)).collect(),
        path: DecisionPath::Attention,
        params: Some(params),
        scores: Some(scores),
    })
}

fn to_case(near: bool) -> GapCase {
    if near {
        GapCase::Near
    } else {
        GapCase::Far
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    /// Smallest threshold at which some query was decided near.
    pub t_star: usize,
    /// Number of [`gap_ann_decide`] calls made.
    pub calls: usize,
}

/// Binary search over `t ∈ [0, d]` for the smallest threshold with at least
/// one near decision. The threshold in `inst` is ignored. `t = 0` always
/// uses ball enumeration, since the encoding needs `t ≥ 1`.
pub fn ann_binary_search(inst: &GapAnnInstance, opts: &DecideOptions, solver: &dyn AttentionSolver) -> Result<SearchOutcome> {
    let (mut lo, mut hi) = (0, inst.dim());
    let mut calls = 0;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let probe = inst.with_threshold(mid);
        let step = if mid == 0 {
            DecideOptions {
                route: Route::ForceBrute,
                ..*opts
            }
        } else {
            *opts
        };
        calls += 1;
        if gap_ann_decide(&probe, &step, solver)?.any_near() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(SearchOutcome { t_star: lo, calls })
}
