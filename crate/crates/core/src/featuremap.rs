//! Exact low-rank factorization of `P(scale · X Yᵀ)` for a polynomial `P`.
//!
//! Expanding `⟨u, v⟩^k` with the multinomial theorem gives
//!
//! ```text
//! P(s⟨u,v⟩) = Σ_{|α| ≤ g} c_{|α|} · multinomial(|α|; α) · s^{|α|} · u^α · v^α
//! ```
//!
//! so with one feature per multi-index `α` (`|α| ≤ g`, `C(d+g, g)` of them)
//! the rows `φ_u(u)_α = c_{|α|} multinomial(α) s^{|α|} u^α` and
//! `φ_v(v)_α = v^α` satisfy `⟨φ_u(u), φ_v(v)⟩ = P(s⟨u,v⟩)`. Only the
//! diagonal terms `u^α v^α` appear, which is why the index set is much
//! smaller than the generic `C(2d+2g, 2g)` count for a degree-`2g`
//! polynomial in `2d` variables.
//!
//! Multi-indices are listed in graded lexicographic order: by total degree,
//! then by exponent vector in decreasing lexicographic order, so that for
//! `d = 2` the order is `1, x₁, x₂, x₁², x₁x₂, x₂², …`. Each feature of
//! degree `k ≥ 1` is its parent feature (drop the last variable of its
//! non-decreasing variable sequence) times one coordinate, which makes
//! building all features `O(n·r)` multiplications.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expoly::ExpPolynomial;
use crate::linalg::DenseMatrix;

/// Largest rank accepted.
pub const MAX_RANK: usize = 1 << 31;

/// Exponent vector `α ∈ ℕ^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// `|α| = Σ α_i`.
    pub fn total(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `|α|! / Π α_i!`.
    pub fn multinomial(&self) -> f64 {
        let mut acc = 1.0;
        let mut seen = 0u32;
        for &a in &self.exponents {
            for k in 1..=a {
                seen += 1;
                acc = acc * f64::from(seen) / f64::from(k);
            }
        }
        acc
    }

    /// `Π x_i^{α_i}`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// Number of features `r = C(d+g, g)`; also checks `r ≤ C(2(g+d), 2g)`.
pub fn feature_rank(d: usize, g: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let r = binomial((d + g) as u64, g as u64)
        .filter(|&r| r <= MAX_RANK as u128)
        .ok_or(Error::RankOverflow { d, g })? as usize;
    // A bound that overflows u128 is certainly above r.
    if let Some(loose) = binomial(2 * (g + d) as u64, 2 * g as u64) {
        assert!(r as u128 <= loose, "rank {r} above C(2(g+d), 2g) = {loose}");
    }
    Ok(r)
}

/// Feature recipe shared by both factors: feature `f` (for `f ≥ 1`) equals
/// feature `parent[f]` times coordinate `var[f]`.
#[derive(Clone, Debug)]
pub(crate) struct FeaturePlan {
    dim: usize,
    parent: Vec<u32>,
    var: Vec<u32>,
    degree: Vec<u32>,
    multinomial: Vec<f64>,
}

impl FeaturePlan {
    pub(crate) fn new(d: usize, g: usize) -> Result<Self> {
        let r = feature_rank(d, g)?;
        let mut plan = Self {
            dim: d,
            parent: Vec::with_capacity(r),
            var: Vec::with_capacity(r),
            degree: Vec::with_capacity(r),
            multinomial: Vec::with_capacity(r),
        };
        // `run[f]`: how many times the last variable of f repeats at its end.
        let mut run: Vec<u32> = Vec::with_capacity(r);
        plan.parent.push(0);
        plan.var.push(0);
        plan.degree.push(0);
        plan.multinomial.push(1.0);
        run.push(0);
        let mut prev_level = 0..1;
        for k in 1..=g {
            let start = plan.parent.len();
            for p in prev_level.clone() {
                let first = if k == 1 { 0 } else { plan.var[p] as usize };
                for m in first..d {
                    let r_len = if k > 1 && plan.var[p] as usize == m { run[p] + 1 } else { 1 };
                    plan.parent.push(p as u32);
                    plan.var.push(m as u32);
                    plan.degree.push(k as u32);
                    plan.multinomial
                        .push(plan.multinomial[p] * k as f64 / f64::from(r_len));
                    run.push(r_len);
                }
            }
            prev_level = start..plan.parent.len();
        }
        debug_assert_eq!(plan.parent.len(), r);
        Ok(plan)
    }

    pub(crate) fn rank(&self) -> usize {
        self.parent.len()
    }

    /// Fills `out[f] = weight[f] · Π x^α_f`.
    fn fill(&self, x: &[f64], weights: Option<&[f64]>, out: &mut [f64]) {
        out[0] = 1.0;
        for f in 1..out.len() {
            out[f] = out[self.parent[f] as usize] * x[self.var[f] as usize];
        }
        if let Some(w) = weights {
            for (o, wf) in out.iter_mut().zip(w) {
                *o *= wf;
            }
        }
    }

    fn multi_index(&self, mut f: usize) -> MultiIndex {
        let mut exps = vec![0u32; self.dim];
        while f != 0 {
            exps[self.var[f] as usize] += 1;
            f = self.parent[f] as usize;
        }
        MultiIndex::new(exps)
    }
}

/// All `α ∈ ℕ^d` with `|α| ≤ g`, in graded lexicographic order.
pub fn enumerate_multi_indices(d: usize, g: usize) -> Result<Vec<MultiIndex>> {
    let plan = FeaturePlan::new(d, g)?;
    Ok((0..plan.rank()).map(|f| plan.multi_index(f)).collect())
}

/// `U₁`, `U₂` with `U₁ U₂ᵀ = P(scale · X Yᵀ)`.
#[derive(Clone, Debug)]
pub struct LowRankFactors {
    pub u1: DenseMatrix,
    pub u2: DenseMatrix,
    pub degree: usize,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.u1.cols()
    }

    /// Materializes `U₁ U₂ᵀ`. Quadratic in `n`; for verification only.
    pub fn reconstruct(&self) -> DenseMatrix {
        crate::linalg::matmul_nt(&self.u1, &self.u2).expect("factors share their rank")
    }
}

/// Builds the factors for `P(inner_scale · X Yᵀ)` with coefficients folded
/// into `U₁` and pure monomials in `U₂`.
pub fn build_factors(
    x: &DenseMatrix,
    y: &DenseMatrix,
    p: &ExpPolynomial,
    inner_scale: f64,
) -> Result<LowRankFactors> {
    if x.cols() != y.cols() {
        return Err(Error::DimensionMismatch {
            op: "build_factors",
            left: x.shape(),
            right: y.shape(),
        });
    }
    let plan = FeaturePlan::new(x.cols(), p.degree())?;
    build_with_plan(&plan, x, y, p.coeffs(), inner_scale)
}

pub(crate) fn build_with_plan(
    plan: &FeaturePlan,
    x: &DenseMatrix,
    y: &DenseMatrix,
    coeffs: &[f64],
    inner_scale: f64,
) -> Result<LowRankFactors> {
    let r = plan.rank();
    let mut by_degree = Vec::with_capacity(coeffs.len());
    let mut s = 1.0;
    for &c in coeffs {
        by_degree.push(c * s);
        s *= inner_scale;
    }
    let weights: Vec<f64> = (0..r)
        .map(|f| by_degree[plan.degree[f] as usize] * plan.multinomial[f])
        .collect();
    let features = |m: &DenseMatrix, w: Option<&[f64]>| {
        let mut out = vec![0.0; m.rows() * r];
        out.par_chunks_mut(r)
            .enumerate()
            .for_each(|(i, row)| plan.fill(m.row(i), w, row));
        DenseMatrix::from_raw(m.rows(), r, out)
    };
    let u1 = features(x, Some(&weights));
    let u2 = features(y, None);
    if u1.data().iter().chain(u2.data()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("feature overflow: inputs too large for this degree".into()));
    }
    Ok(LowRankFactors {
        u1,
        u2,
        degree: coeffs.len() - 1,
    })
}
