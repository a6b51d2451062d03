//! Exact softmax attention and the polynomial-method approximation.
//!
//! For `Q, K, V ∈ ℝ^{n×d}` the attention output is `D⁻¹ A V` with
//! `A = exp(QKᵀ/d)` applied entrywise and `D = diag(A 1_n)`.
//!
//! [`poly_attention`] never forms `A`. It replaces `exp` by a polynomial `P`
//! with relative error `ε` on `[-B², B²]` (every entry of `QKᵀ/d` lies there
//! when `‖Q‖_∞, ‖K‖_∞ ≤ B`), factors `P(QKᵀ/d) = U₁U₂ᵀ` exactly, and computes
//!
//! ```text
//! w̃ = U₁ (U₂ᵀ 1_n),   T = diag(w̃)⁻¹ · U₁ (U₂ᵀ V).
//! ```
//!
//! Every entry of `Ã = U₁U₂ᵀ` is within relative error `ε` of `A`, so each
//! row sum of `Ã` is within `ε` of `D`, and the output is within
//! `(ε_A + ε_D)·B = 2εB` of exact. Choosing `ε = ε_a / (2B)` meets the
//! additive target `ε_a`.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expoly::{min_degree_additive, relative_exp_poly, MIN_RELATIVE_BOUND};
use crate::featuremap::{build_with_plan, feature_rank, FeaturePlan, LowRankFactors};
use crate::linalg::{dot, matmul_tn, DenseMatrix};

/// Largest per-entry accuracy handed to the polynomial construction.
pub const MAX_ENTRY_EPS: f64 = 0.099;

/// Largest `‖QKᵀ/d‖_∞` the exact solver evaluates without rescaling.
pub const EXACT_EXPONENT_LIMIT: f64 = 300.0;

/// Inputs of an approximate attention computation.
#[derive(Clone, Debug)]
pub struct AttentionInstance {
    q: DenseMatrix,
    k: DenseMatrix,
    v: DenseMatrix,
    bound: f64,
    eps_a: f64,
}

impl AttentionInstance {
    /// Validates shapes, `‖Q‖_∞, ‖K‖_∞, ‖V‖_∞ ≤ bound` and `eps_a ∈ (0, 0.1)`.
    pub fn new(q: DenseMatrix, k: DenseMatrix, v: DenseMatrix, bound: f64, eps_a: f64) -> Result<Self> {
        if q.shape() != k.shape() || q.shape() != v.shape() {
            return Err(Error::DimensionMismatch {
                op: "attention instance",
                left: q.shape(),
                right: if q.shape() != k.shape() { k.shape() } else { v.shape() },
            });
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidParameter(format!("entry bound {bound} must be positive")));
        }
        if !(eps_a > 0.0 && eps_a < 0.1) {
            return Err(Error::InvalidParameter(format!("eps_a {eps_a} outside (0, 0.1)")));
        }
        for (which, m) in [("Q", &q), ("K", &k), ("V", &v)] {
            let norm = m.inf_norm();
            if norm > bound {
                return Err(Error::EntryBound { which, norm, bound });
            }
        }
        Ok(Self { q, k, v, bound, eps_a })
    }

    pub fn q(&self) -> &DenseMatrix {
        &self.q
    }
    pub fn k(&self) -> &DenseMatrix {
        &self.k
    }
    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }
    pub fn n(&self) -> usize {
        self.q.rows()
    }
    pub fn d(&self) -> usize {
        self.q.cols()
    }
    pub fn bound(&self) -> f64 {
        self.bound
    }
    pub fn eps_a(&self) -> f64 {
        self.eps_a
    }
}

/// `A = exp(QKᵀ/d)`, materialized. Quadratic memory; use on small `n`.
pub fn attention_matrix(inst: &AttentionInstance) -> DenseMatrix {
    let (n, d) = (inst.n(), inst.d() as f64);
    let mut a = vec![0.0; n * n];
    a.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let qi = inst.q.row(i);
        for (j, aij) in row.iter_mut().enumerate() {
            *aij = (dot(qi, inst.k.row(j)) / d).exp();
        }
    });
    DenseMatrix::from_raw(n, n, a)
}

/// `D⁻¹ A V`, one row of `A` at a time: `O(n²d)` time, `O(n)` scratch per
/// row. Softmax weights are formed as `A_ij / D_ii` before touching `V`.
pub fn exact_attention(inst: &AttentionInstance) -> DenseMatrix {
    let (n, d) = (inst.n(), inst.d());
    let scale = 1.0 / d as f64;
    let mut out = vec![0.0; n * d];
    out.par_chunks_mut(d).enumerate().for_each_init(
        || vec![0.0; n],
        |weights, (i, t_row)| {
            let qi = inst.q.row(i);
            let mut row_sum = 0.0;
            for (j, w) in weights.iter_mut().enumerate() {
                *w = (dot(qi, inst.k.row(j)) * scale).exp();
                row_sum += *w;
            }
            for w in weights.iter_mut() {
                *w /= row_sum;
            }
            if n <= 1024 {
                debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
            for (j, &w) in weights.iter().enumerate() {
                for (t, &vjl) in t_row.iter_mut().zip(inst.v.row(j)) {
                    *t += w * vjl;
                }
            }
        },
    );
    DenseMatrix::from_raw(n, d, out)
}

/// Per-entry relative accuracy for an additive target: `eps_a / (2B)`,
/// clamped below `0.1`.
pub fn entry_accuracy(bound: f64, eps_a: f64) -> f64 {
    let eps = eps_a / (2.0 * bound);
    if eps >= 0.1 {
        MAX_ENTRY_EPS
    } else {
        eps
    }
}

/// Half-width of the interval the polynomial must cover: `B²`, raised to
/// the smallest bound the polynomial construction accepts.
pub fn entry_interval(bound: f64) -> f64 {
    (bound * bound).max(MIN_RELATIVE_BOUND)
}

/// Parameters PolyAttention would use, without building anything.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyPlan {
    /// Polynomial degree `g`.
    pub degree: usize,
    /// Feature count `r = C(d+g, g)`.
    pub rank: usize,
    /// Per-entry relative accuracy `ε`.
    pub entry_eps: f64,
    /// Half-width of the certified interval.
    pub interval: f64,
}

/// Computes `(g, r, ε)` for an instance of the given shape.
pub fn plan_poly_attention(d: usize, bound: f64, eps_a: f64) -> Result<PolyPlan> {
    let entry_eps = entry_accuracy(bound, eps_a);
    let interval = entry_interval(bound);
    let degree = min_degree_additive(2.0 * interval, entry_eps)?;
    let rank = feature_rank(d, degree)?;
    Ok(PolyPlan {
        degree,
        rank,
        entry_eps,
        interval,
    })
}

/// Resource limits for [`poly_attention_with`].
#[derive(Clone, Copy, Debug)]
pub struct PolyAttentionConfig {
    /// Largest `n · r` allowed for each factor matrix.
    pub max_feature_entries: usize,
}

impl Default for PolyAttentionConfig {
    fn default() -> Self {
        Self {
            max_feature_entries: 1 << 27,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub polynomial: Duration,
    pub factors: Duration,
    pub row_sums: Duration,
    pub numerator: Duration,
    pub normalize: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.polynomial + self.factors + self.row_sums + self.numerator + self.normalize
    }
}

/// What [`poly_attention`] did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxReport {
    pub degree: usize,
    pub rank: usize,
    pub entry_eps: f64,
    pub interval: f64,
    /// Largest relative error of the polynomial seen on its certification grid.
    pub certified_error: f64,
    pub timings: StageTimings,
}

/// PolyAttention with default limits.
pub fn poly_attention(inst: &AttentionInstance) -> Result<(DenseMatrix, ApproxReport)> {
    poly_attention_with(inst, &PolyAttentionConfig::default())
}

/// PolyAttention: additive error at most `eps_a` against [`exact_attention`].
pub fn poly_attention_with(
    inst: &AttentionInstance,
    config: &PolyAttentionConfig,
) -> Result<(DenseMatrix, ApproxReport)> {
    let (n, d) = (inst.n(), inst.d());
    let mut timings = StageTimings::default();

    let clock = Instant::now();
    let plan = plan_poly_attention(d, inst.bound, inst.eps_a)?;
    if n.saturating_mul(plan.rank) > config.max_feature_entries {
        return Err(Error::FeatureBudgetExceeded {
            n,
            rank: plan.rank,
            budget: config.max_feature_entries,
        });
    }
    let poly = relative_exp_poly(plan.interval, plan.entry_eps)?;
    debug_assert_eq!(poly.degree(), plan.degree);
    timings.polynomial = clock.elapsed();

    let clock = Instant::now();
    let features = FeaturePlan::new(d, poly.degree())?;
    let factors = build_with_plan(&features, &inst.q, &inst.k, poly.coeffs(), 1.0 / d as f64)?;
    timings.factors = clock.elapsed();

    let clock = Instant::now();
    let w = approx_row_sums(&factors);
    if let Some((row, &value)) = w.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveRowSum { row, value });
    }
    timings.row_sums = clock.elapsed();

    let clock = Instant::now();
    let u2t_v = matmul_tn(&factors.u2, &inst.v)?;
    let t = factors.u1.matmul(&u2t_v)?;
    timings.numerator = clock.elapsed();

    let clock = Instant::now();
    let mut data = t.into_data();
    for (row, wi) in data.chunks_mut(d).zip(&w) {
        let inv = 1.0 / wi;
        for x in row {
            *x *= inv;
        }
    }
    let t = DenseMatrix::new(n, d, data)?;
    timings.normalize = clock.elapsed();

    let report = ApproxReport {
        degree: plan.degree,
        rank: plan.rank,
        entry_eps: plan.entry_eps,
        interval: plan.interval,
        certified_error: poly.certificate().map_or(f64::NAN, |c| c.observed),
        timings,
    };
    Ok((t, report))
}

/// `w̃ = U₁ (U₂ᵀ 1_n)`: row sums of `U₁U₂ᵀ` in `O(nr)`.
pub fn approx_row_sums(f: &LowRankFactors) -> Vec<f64> {
    let r = f.rank();
    let mut col_sums = vec![0.0; r];
    for j in 0..f.u2.rows() {
        for (s, &x) in col_sums.iter_mut().zip(f.u2.row(j)) {
            *s += x;
        }
    }
    (0..f.u1.rows()).map(|i| dot(f.u1.row(i), &col_sums)).collect()
}

/// `‖T_exact − T_approx‖_∞`.
pub fn error_report(t_exact: &DenseMatrix, t_approx: &DenseMatrix) -> Result<f64> {
    if t_exact.shape() != t_approx.shape() {
        return Err(Error::DimensionMismatch {
            op: "error_report",
            left: t_exact.shape(),
            right: t_approx.shape(),
        });
    }
    Ok(t_exact
        .data()
        .iter()
        .zip(t_approx.data())
        .fold(0.0, |acc, (a, b)| f64::max(acc, (a - b).abs())))
}

/// Anything that solves the approximate attention problem.
pub trait AttentionSolver {
    fn name(&self) -> &'static str;
    fn solve(&self, inst: &AttentionInstance) -> Result<DenseMatrix>;
}

/// [`exact_attention`] as a solver; rejects exponents above
/// [`EXACT_EXPONENT_LIMIT`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExactSolver;

impl AttentionSolver for ExactSolver {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn solve(&self, inst: &AttentionInstance) -> Result<DenseMatrix> {
        // slack for bounds given as a rounded square root of the limit
        if inst.bound * inst.bound > EXACT_EXPONENT_LIMIT * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "entry bound {} allows exponents above {EXACT_EXPONENT_LIMIT}",
                inst.bound
            )));
        }
        Ok(exact_attention(inst))
    }
}

/// [`poly_attention_with`] as a solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct PolySolver(pub PolyAttentionConfig);

impl AttentionSolver for PolySolver {
    fn name(&self) -> &'static str {
        "poly"
    }

    fn solve(&self, inst: &AttentionInstance) -> Result<DenseMatrix> {
        poly_attention_with(inst, &self.0).map(|(t, _)| t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expoly::relative_exp_poly;
    use crate::featuremap::build_factors;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn random_instance(n: usize, d: usize, b: f64, eps_a: f64, seed: u64) -> AttentionInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gen = || DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-b..=b)).unwrap();
        let (q, k, v) = (gen(), gen(), gen());
        AttentionInstance::new(q, k, v, b, eps_a).unwrap()
    }

    #[test]
    fn uniform_softmax_when_scores_vanish() {
        let q = DenseMatrix::zeros(3, 2).unwrap();
        let v = m(&[&[1.0, 0.5], &[0.25, -1.0], &[0.25, -0.5]]);
        let inst = AttentionInstance::new(q.clone(), q, v, 1.0, 1e-3).unwrap();
        let t = exact_attention(&inst);
        for i in 0..3 {
            assert!((t.get(i, 0) - 0.5).abs() < 1e-15);
            assert!((t.get(i, 1) + 1.0 / 3.0).abs() < 1e-15);
        }
        let (tp, report) = poly_attention(&inst).unwrap();
        assert!(error_report(&t, &tp).unwrap() <= 1e-15);
        assert!(report.rank >= 1);
    }

    #[test]
    fn single_row_is_identity() {
        let inst = AttentionInstance::new(m(&[&[0.3, -0.2]]), m(&[&[0.9, 0.1]]), m(&[&[0.7, -0.25]]), 1.0, 1e-3)
            .unwrap();
        assert_eq!(exact_attention(&inst), *inst.v());
        let (t, _) = poly_attention(&inst).unwrap();
        assert!(error_report(&t, inst.v()).unwrap() <= 1e-15);
    }

    #[test]
    fn two_by_two_by_hand() {
        let x = m(&[&[1.0], &[0.0]]);
        let inst = AttentionInstance::new(x.clone(), x.clone(), x, 1.0, 1e-3).unwrap();
        let a = attention_matrix(&inst);
        let e = std::f64::consts::E;
        assert_eq!(a.data(), &[e, 1.0, 1.0, 1.0]);
        let t = exact_attention(&inst);
        assert!((t.get(0, 0) - e / (e + 1.0)).abs() < 1e-15);
        assert!((t.get(0, 0) - 0.73106).abs() < 1e-5);
        assert_eq!(t.get(1, 0), 0.5);
    }

    #[test]
    fn poly_matches_exact_on_random_instance() {
        let inst = random_instance(256, 8, 1.0, 1e-4, 5);
        let (t, report) = poly_attention(&inst).unwrap();
        assert_eq!(report.degree, 11);
        assert_eq!(report.rank, 75_582);
        let err = error_report(&exact_attention(&inst), &t).unwrap();
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn row_sums_of_simple_factors() {
        let id = DenseMatrix::identity(2).unwrap();
        let f = LowRankFactors {
            u1: id.clone(),
            u2: id,
            degree: 0,
        };
        assert_eq!(approx_row_sums(&f), vec![1.0, 1.0]);
        let ones = DenseMatrix::new(4, 1, vec![1.0; 4]).unwrap();
        let f = LowRankFactors {
            u1: ones.clone(),
            u2: ones,
            degree: 0,
        };
        assert_eq!(approx_row_sums(&f), vec![4.0; 4]);
    }

    #[test]
    fn row_sums_track_exact_normalizer() {
        let inst = random_instance(64, 4, 1.0, 1e-3, 8);
        let p = relative_exp_poly(1.0, 1e-3).unwrap();
        let f = build_factors(inst.q(), inst.k(), &p, 0.25).unwrap();
        let w = approx_row_sums(&f);
        let a = attention_matrix(&inst);
        for (i, wi) in w.iter().enumerate() {
            let di: f64 = a.row(i).iter().sum();
            assert!((wi - di).abs() / di <= 1e-3);
        }
    }

    #[test]
    fn error_report_examples() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(error_report(&a, &a).unwrap(), 0.0);
        let b = m(&[&[1.0, 2.0], &[3.5, 4.0]]);
        assert_eq!(error_report(&a, &b).unwrap(), 0.5);
        assert!(error_report(&a, &m(&[&[1.0]])).is_err());
    }

    #[test]
    fn instance_validation() {
        let q = m(&[&[0.5, 2.0]]);
        let ok = m(&[&[0.5, 0.5]]);
        assert!(matches!(
            AttentionInstance::new(q, ok.clone(), ok.clone(), 1.0, 1e-3),
            Err(Error::EntryBound { which: "Q", .. })
        ));
        assert!(AttentionInstance::new(ok.clone(), ok.clone(), ok.clone(), 1.0, 0.1).is_err());
        assert!(AttentionInstance::new(ok.clone(), ok.clone(), ok.clone(), 0.0, 1e-3).is_err());
        assert!(AttentionInstance::new(ok.clone(), ok, m(&[&[1.0]]), 1.0, 1e-3).is_err());
    }

    #[test]
    fn accuracy_split_and_clamp() {
        assert_eq!(entry_accuracy(1.0, 1e-4), 5e-5);
        assert_eq!(entry_accuracy(0.01, 0.05), MAX_ENTRY_EPS);
        assert_eq!(entry_interval(0.05), MIN_RELATIVE_BOUND);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = random_instance(64, 8, 1.0, 1e-4, 1);
        let cfg = PolyAttentionConfig {
            max_feature_entries: 1000,
        };
        assert!(matches!(
            poly_attention_with(&inst, &cfg),
            Err(Error::FeatureBudgetExceeded { .. })
        ));
    }
}
