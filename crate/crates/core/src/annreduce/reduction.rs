//! Parameters and matrices for encoding a balanced Gap-ANN instance as an
//! attention instance.
//!
//! With `ñ = 2n`, `d̃ = 2d`, and `β = B²`:
//!
//! ```text
//! Q = √β [a_i 1_d]     K = √β [b_j 0_d]     V[:, 0] = (1_n, 0_n)
//!        [0_d 1_d]            [0_d 1_d]
//! ```
//!
//! so that `exp(⟨q_i, k_j⟩/d̃)` is `exp(β⟨a_i, b_j⟩/d̃)` in the top-left
//! block, `exp(β/2)` in the top-right block and `1` in the bottom-left one.
//! Balanced vectors satisfy `⟨a, b⟩ = (d − ‖a − b‖₀)/2`, which turns
//! distances into weights; the first output column then reads off how
//! much of row `i`'s mass sits on the `b` points.

use crate::attention::{AttentionInstance, EXACT_EXPONENT_LIMIT};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::GapAnnInstance;

/// Largest `β` the automatic scale allows, so that every exponent of the
/// encoded instance stays within [`EXACT_EXPONENT_LIMIT`].
pub const BETA_CAP: f64 = EXACT_EXPONENT_LIMIT;

/// How the constant `C_b²` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum CbScale {
    /// `C_b² = 40C/(C₀ε)` shrunk just enough to keep `β ≤ BETA_CAP`.
    #[default]
    Auto,
    /// `C_b² = s · 40C/(C₀ε)`.
    Fixed(f64),
}

/// Everything derived from `(n, d, t, ε)` for one reduction call. Here `d`
/// and `t` refer to the balanced instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionParams {
    pub n: usize,
    pub n_tilde: usize,
    pub d: usize,
    pub d_tilde: usize,
    pub t: usize,
    pub eps: f64,
    /// `d / ln n`.
    pub c_dim: f64,
    /// `t / ln n`.
    pub c_thr: f64,
    /// Multiplier applied to the unscaled `C_b²`.
    pub scale: f64,
    pub cb: f64,
    /// Entry bound `B = C_b √(ln n)`.
    pub bound: f64,
    /// `β = B²`.
    pub beta: f64,
    /// Top-right block value `exp(β/2)`.
    pub tau: f64,
    /// Exponent with `eps_a = n^(−C_a)`.
    pub ca: f64,
    pub eps_a: f64,
    /// Half the distance between the two cases' scores.
    pub t_tilde: f64,
    /// Decision threshold `2 t̃`.
    pub t_tilde0: f64,
    /// `exp(β ε t / (4d))`, the separation between near and far weights.
    pub gap: f64,
}

impl ReductionParams {
    pub fn derive(n: usize, d: usize, t: usize, eps: f64, scale: CbScale) -> Result<Self> {
        if n < 2 {
            return Err(Error::Reduction(format!("need n ≥ 2 points per side, got {n}")));
        }
        if t == 0 || d == 0 {
            return Err(Error::Reduction(format!(
                "threshold {t} and dimension {d} must be positive"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Reduction(format!("gap {eps} must be positive")));
        }
        let log_n = (n as f64).ln();
        let c_dim = d as f64 / log_n;
        let c_thr = t as f64 / log_n;
        let cb_sq_unscaled = 40.0 * c_dim / (c_thr * eps);
        let scale = match scale {
            CbScale::Auto => f64::min(1.0, BETA_CAP / (cb_sq_unscaled * log_n)),
            CbScale::Fixed(s) if s > 0.0 && s.is_finite() => s,
            CbScale::Fixed(s) => {
                return Err(Error::Reduction(format!("scale {s} must be positive")));
            }
        };
        let cb_sq = cb_sq_unscaled * scale;
        let beta = f64::min(cb_sq * log_n, if scale < 1.0 { BETA_CAP } else { f64::INFINITY });
        if beta > BETA_CAP * (1.0 + 1e-12) {
            return Err(Error::Reduction(format!(
                "β = {beta:.1} exceeds {BETA_CAP}; exp(β/2) would not be representable, use a smaller scale"
            )));
        }
        let bound = beta.sqrt();
        if bound < 1.0 {
            return Err(Error::Reduction(format!(
                "β = {beta:.3} < 1 leaves the value column outside the entry bound"
            )));
        }
        let tau = (beta / 2.0).exp();
        let ca = 2.0 + cb_sq * (1.0 + c_thr / c_dim);
        let eps_a = (-ca * log_n).exp();
        let ln_t_tilde = 0.25 * beta * (1.0 - t as f64 / d as f64) - beta / 2.0 - (6.0 * n as f64).ln();
        let t_tilde = ln_t_tilde.exp();
        let ln_gap = 0.25 * beta * eps * t as f64 / d as f64;
        let params = Self {
            n,
            n_tilde: 2 * n,
            d,
            d_tilde: 2 * d,
            t,
            eps,
            c_dim,
            c_thr,
            scale,
            cb: cb_sq.sqrt(),
            bound,
            beta,
            tau,
            ca,
            eps_a,
            t_tilde,
            t_tilde0: 2.0 * t_tilde,
            gap: ln_gap.exp(),
        };
        if eps_a < f64::MIN_POSITIVE {
            return Err(Error::Reduction(format!(
                "eps_a = n^-{ca:.1} underflows; use a smaller scale"
            )));
        }
        if eps_a >= 0.1 {
            return Err(Error::Reduction(format!("eps_a = {eps_a:e} is not below 0.1")));
        }
        if t_tilde < eps_a {
            return Err(Error::Reduction(format!(
                "score margin {t_tilde:e} below solver accuracy {eps_a:e}"
            )));
        }
        if ln_gap <= (6.0 * n as f64).ln() {
            return Err(Error::Reduction(format!(
                "near/far separation exp({ln_gap:.2}) does not exceed 6n = {}; increase t, ε or the scale",
                6 * n
            )));
        }
        Ok(params)
    }
}

/// Encodes a balanced instance. Fails if any point does not have weight
/// `dim / 2` (apply [`GapAnnInstance::complemented`] first).
pub fn build_attention_instance(
    inst: &GapAnnInstance,
    scale: CbScale,
) -> Result<(AttentionInstance, ReductionParams)> {
    if !inst.is_balanced() {
        return Err(Error::Reduction("points are not balanced".into()));
    }
    let params = ReductionParams::derive(inst.n(), inst.dim(), inst.t(), inst.eps(), scale)?;
    let (n, d) = (inst.n(), inst.dim());
    let s = params.bound;
    let q = DenseMatrix::from_fn(2 * n, 2 * d, |i, k| match (i < n, k < d) {
        (true, true) => s * f64::from(inst.points_a()[i][k]),
        (false, true) => 0.0,
        (_, false) => s,
    })?;
    let k = DenseMatrix::from_fn(2 * n, 2 * d, |j, k| match (j < n, k < d) {
        (true, true) => s * f64::from(inst.points_b()[j][k]),
        (true, false) => 0.0,
        (false, true) => 0.0,
        (false, false) => s,
    })?;
    let v = DenseMatrix::from_fn(2 * n, 2 * d, |j, k| if k == 0 && j < n { 1.0 } else { 0.0 })?;
    let att = AttentionInstance::new(q, k, v, s, params.eps_a)?;
    Ok((att, params))
}
