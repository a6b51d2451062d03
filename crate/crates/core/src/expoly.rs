//! Polynomial approximations of `exp`.
//!
//! The building block is the Maclaurin truncation `Σ_{i≤g} x^i / i!`. Degree
//! selection is empirical: [`min_degree_additive`] returns the smallest `g`
//! whose truncation stays within `ε` of `exp` on a uniform grid over
//! `[0, M]`. [`relative_exp_poly`] then shifts and rescales such an additive
//! approximation on `[0, 2B]` into one with relative error `ε` on `[-B, B]`:
//!
//! ```text
//! P(x) = Q(x + B) / e^B,   |P(x) - e^x| = |Q(x+B) - e^{x+B}| / e^B ≤ ε e^{-B} ≤ ε e^x.
//! ```
//!
//! Certification is a grid check, not a proof: the polynomials involved are
//! smooth enough that a 10,001-point grid recovers the supremum well inside
//! the `1e-6` relative margin used for degree selection.

use crate::error::{Error, Result};

/// Highest degree whose Maclaurin coefficient `1/g!` is still a normal `f64`.
pub const MAX_DEGREE: usize = 170;

/// Number of grid points used to certify an approximation.
pub const GRID_POINTS: usize = 10_001;

/// Relative slack applied to the additive target during degree selection.
pub const GRID_MARGIN: f64 = 1e-6;

/// Smallest interval half-width accepted by [`relative_exp_poly`].
pub const MIN_RELATIVE_BOUND: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// `|P(x) - e^x| ≤ ε`
    Additive,
    /// `|P(x) - e^x| ≤ ε e^x`
    Relative,
}

/// The grid-verified contract carried by a constructed polynomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    pub kind: ErrorKind,
    pub domain_lo: f64,
    pub domain_hi: f64,
    /// Certified bound `ε`.
    pub bound: f64,
    /// Largest error actually seen on the grid.
    pub observed: f64,
}

/// A polynomial `Σ c_i x^i` meant to approximate `exp`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPolynomial {
    coeffs: Vec<f64>,
    certificate: Option<Certificate>,
}

impl ExpPolynomial {
    /// An uncertified polynomial with the given coefficients `c_0..c_g`.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("polynomial needs at least one coefficient".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
        }
        Ok(Self {
            coeffs,
            certificate: None,
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        self.certificate.as_ref()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        eval_poly(&self.coeffs, x)
    }
}

/// Horner evaluation of `Σ coeffs[i] x^i`.
#[inline]
pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Maclaurin truncation of `exp` with coefficients `1/i!`, `i = 0..=g`.
pub fn taylor_exp_poly(g: usize) -> Result<ExpPolynomial> {
    if g > MAX_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "degree {g} above {MAX_DEGREE}: 1/g! underflows"
        )));
    }
    let mut coeffs = Vec::with_capacity(g + 1);
    let mut c = 1.0;
    coeffs.push(c);
    for i in 1..=g {
        c /= i as f64;
        coeffs.push(c);
    }
    ExpPolynomial::from_coeffs(coeffs)
}

fn grid(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    (0..GRID_POINTS).map(move |k| if k == GRID_POINTS - 1 { hi } else { lo + step * k as f64 })
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0, 0.1)")));
    }
    Ok(())
}

/// Smallest `g` such that the degree-`g` Maclaurin truncation satisfies
/// `max |P(x) - e^x| ≤ eps (1 - 1e-6)` over a 10,001-point grid on `[0, m]`.
pub fn min_degree_additive(m: f64, eps: f64) -> Result<usize> {
    additive_search(m, eps).map(|(g, _)| g)
}

fn additive_search(m: f64, eps: f64) -> Result<(usize, f64)> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::InvalidParameter(format!("interval end {m} must be positive")));
    }
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(Error::InvalidParameter(format!("accuracy {eps} outside (0, 0.1]")));
    }
    let target = eps * (1.0 - GRID_MARGIN);
    let xs: Vec<f64> = grid(0.0, m).collect();
    let exact: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
    // Partial sums and current terms, grown one degree at a time.
    let mut sums = vec![0.0; xs.len()];
    let mut terms = vec![1.0; xs.len()];
    for g in 0..=MAX_DEGREE {
        let mut worst = 0.0_f64;
        for k in 0..xs.len() {
            sums[k] += terms[k];
            worst = worst.max((sums[k] - exact[k]).abs());
            terms[k] *= xs[k] / (g + 1) as f64;
        }
        if worst <= target {
            return Ok((g, worst));
        }
    }
    Err(Error::DegreeCapExceeded {
        max_degree: MAX_DEGREE,
        interval: m,
        eps,
    })
}

/// Certified additive approximation of `exp` on `[0, m]` with the minimal
/// Maclaurin degree.
pub fn additive_exp_poly(m: f64, eps: f64) -> Result<ExpPolynomial> {
    let (g, _) = additive_search(m, eps)?;
    let mut p = taylor_exp_poly(g)?;
    let observed = grid(0.0, m)
        .map(|x| (p.eval(x) - x.exp()).abs())
        .fold(0.0, f64::max);
    if observed > eps {
        return Err(Error::CertificationFailed { observed, bound: eps });
    }
    p.certificate = Some(Certificate {
        kind: ErrorKind::Additive,
        domain_lo: 0.0,
        domain_hi: m,
        bound: eps,
        observed,
    });
    Ok(p)
}

/// Polynomial with `|P(x) - e^x| ≤ eps · e^x` for `x ∈ [-b, b]`, built as
/// `Q(x + b) / e^b` with `Q` the certified additive approximation on
/// `[0, 2b]`, expanded back to monomial coefficients.
pub fn relative_exp_poly(b: f64, eps: f64) -> Result<ExpPolynomial> {
    if !(b >= MIN_RELATIVE_BOUND && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "interval half-width {b} below {MIN_RELATIVE_BOUND}"
        )));
    }
    check_eps(eps)?;
    let q = additive_exp_poly(2.0 * b, eps)?;
    let mut coeffs = shift_coeffs(q.coeffs(), b);
    let scale = (-b).exp();
    for c in &mut coeffs {
        *c *= scale;
    }
    let mut p = ExpPolynomial::from_coeffs(coeffs)?;
    let observed = grid(-b, b)
        .map(|x| {
            let e = x.exp();
            (p.eval(x) - e).abs() / e
        })
        .fold(0.0, f64::max);
    if observed > eps {
        return Err(Error::CertificationFailed { observed, bound: eps });
    }
    p.certificate = Some(Certificate {
        kind: ErrorKind::Relative,
        domain_lo: -b,
        domain_hi: b,
        bound: eps,
        observed,
    });
    Ok(p)
}

/// Coefficients of `x ↦ Σ c_i (x + s)^i`:
/// `p_k = Σ_{i≥k} c_i C(i, k) s^{i-k}`.
pub fn shift_coeffs(c: &[f64], s: f64) -> Vec<f64> {
    let g = c.len() - 1;
    let binom = binomial_table(g);
    (0..=g)
        .map(|k| {
            let mut acc = 0.0;
            let mut pow = 1.0;
            for i in k..=g {
                acc += c[i] * binom[i][k] * pow;
                pow *= s;
            }
            acc
        })
        .collect()
}

/// Rows `0..=n` of Pascal's triangle, computed exactly in `u128` and
/// converted to `f64`. Entries past `u128` range fall back to `f64` sums.
fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut exact: Vec<u128> = vec![1];
    let mut approx: Vec<f64> = vec![1.0];
    let mut exact_ok = true;
    let mut table = Vec::with_capacity(n + 1);
    table.push(vec![1.0]);
    for _ in 1..=n {
        let len = approx.len() + 1;
        let mut next_f = vec![1.0; len];
        for k in 1..len - 1 {
            next_f[k] = approx[k - 1] + approx[k];
        }
        if exact_ok {
            let mut next = vec![1u128; len];
            for k in 1..len - 1 {
                match exact[k - 1].checked_add(exact[k]) {
                    Some(v) => next[k] = v,
                    None => exact_ok = false,
                }
            }
            if exact_ok {
                for k in 0..len {
                    next_f[k] = next[k] as f64;
                }
                exact = next;
            }
        }
        approx = next_f;
        table.push(approx.clone());
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn factorial(k: u32) -> f64 {
        (1..=k).map(f64::from).product()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ExpPolynomial::from_coeffs(vec![1.0]).unwrap().eval(5.0), 1.0);
        assert_eq!(eval_poly(&[1.0, 1.0, 0.5], 1.0), 2.5);
    }

    #[test]
    fn eval_matches_power_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let g = rng.random_range(0..12);
            let c: Vec<f64> = (0..=g).map(|_| rng.random_range(-2.0..2.0)).collect();
            let x: f64 = rng.random_range(-3.0..3.0);
            let naive: f64 = c.iter().enumerate().map(|(i, ci)| ci * x.powi(i as i32)).sum();
            let scale: f64 = c.iter().enumerate().map(|(i, ci)| (ci * x.powi(i as i32)).abs()).sum();
            assert!((eval_poly(&c, x) - naive).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn taylor_examples() {
        assert_eq!(taylor_exp_poly(0).unwrap().eval(3.0), 1.0);
        let p = taylor_exp_poly(3).unwrap();
        assert_eq!(p.coeffs(), &[1.0, 1.0, 0.5, 1.0 / 6.0]);
        assert!((p.eval(1.0) - 8.0 / 3.0).abs() < 1e-15);
        assert!(p.certificate().is_none());

        let p = taylor_exp_poly(10).unwrap();
        let bound = 2f64.powi(11) / factorial(11);
        assert!((bound - 5.13e-5).abs() < 1e-7);
        assert!((p.eval(2.0) - 2f64.exp()).abs() <= bound * 2f64.exp());
        // the tail Σ_{k>10} 2^k/k! itself
        let tail: f64 = (11..40).map(|k| 2f64.powi(k) / factorial(k as u32)).sum();
        assert!(((2f64.exp() - p.eval(2.0)) - tail).abs() < 1e-12);

        assert!(taylor_exp_poly(170).is_ok());
        assert!(taylor_exp_poly(171).is_err());
    }

    /// Independent grid-max oracle: recompute each truncation from scratch.
    fn oracle_min_degree(m: f64, eps: f64) -> usize {
        (0..=MAX_DEGREE)
            .find(|&g| {
                let worst = (0..GRID_POINTS)
                    .map(|k| m * k as f64 / (GRID_POINTS - 1) as f64)
                    .map(|x| {
                        let s: f64 = (0..=g as u32).map(|i| x.powi(i as i32) / factorial(i)).sum();
                        (s - x.exp()).abs()
                    })
                    .fold(0.0, f64::max);
                worst <= eps * (1.0 - GRID_MARGIN)
            })
            .unwrap()
    }

    #[test]
    fn min_degree_examples() {
        // g = 2 leaves e - 2.5 ≈ 0.218 at x = 1; g = 3 leaves ≈ 0.0516
        assert_eq!(oracle_min_degree(1.0, 0.1), 3);
        assert_eq!(min_degree_additive(1.0, 0.1).unwrap(), 3);
        assert_eq!(min_degree_additive(1.0, 0.09999).unwrap(), 3);
        assert_eq!(min_degree_additive(1.0, 0.06).unwrap(), 3);

        let g = min_degree_additive(2.0, 1e-6).unwrap();
        assert_eq!(g, oracle_min_degree(2.0, 1e-6));
        // analytic remainder cross-check: 2^{g+1} e^2 / (g+1)! bounds the tail
        assert!(2f64.powi(g as i32 + 1) * 2f64.exp() / factorial(g as u32 + 1) <= 1e-6 * 50.0);
        let tail_prev: f64 = (g as i32..60).map(|k| 2f64.powi(k) / factorial(k as u32)).sum();
        assert!(tail_prev > 1e-6, "degree {g} is not minimal");
    }

    #[test]
    fn min_degree_errors() {
        assert!(min_degree_additive(1.0, 0.1).is_ok());
        assert!(matches!(min_degree_additive(1.0, 0.2), Err(Error::InvalidParameter(_))));
        assert!(matches!(min_degree_additive(0.0, 0.01), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            min_degree_additive(200.0, 1e-3),
            Err(Error::DegreeCapExceeded { .. })
        ));
    }

    #[test]
    fn degree_is_monotone() {
        let ms = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
        let es = [0.09, 1e-2, 1e-3, 1e-5, 1e-8];
        for (i, &m) in ms.iter().enumerate() {
            for (j, &e) in es.iter().enumerate() {
                let g = min_degree_additive(m, e).unwrap();
                if i > 0 {
                    assert!(min_degree_additive(ms[i - 1], e).unwrap() <= g);
                }
                if j > 0 {
                    assert!(min_degree_additive(m, es[j - 1]).unwrap() <= g);
                }
            }
        }
    }

    #[test]
    fn relative_examples() {
        let p = relative_exp_poly(1.0, 1e-3).unwrap();
        let cert = p.certificate().unwrap();
        assert_eq!(cert.kind, ErrorKind::Relative);
        assert!(cert.observed <= 1e-3);
        assert!((p.eval(0.0) - 1.0).abs() <= 1e-3);
        let at = (-1f64).exp();
        assert!((p.eval(-1.0) - at).abs() <= 1e-3 * at);

        // accepted below the B > 1 hypothesis
        let p = relative_exp_poly(0.01, 1e-4).unwrap();
        assert!((p.eval(0.0) - 1.0).abs() <= 1e-4);
        assert!(relative_exp_poly(0.005, 1e-4).is_err());
        assert!(relative_exp_poly(1.0, 0.1).is_err());
    }

    #[test]
    fn shift_is_exact_on_small_cases() {
        // (x + 2)^2 = x^2 + 4x + 4
        assert_eq!(shift_coeffs(&[0.0, 0.0, 1.0], 2.0), vec![4.0, 4.0, 1.0]);
        let t = binomial_table(140);
        assert_eq!(t[10][3], 120.0);
        assert_eq!(t[60][30], 118264581564861424.0);
        assert!((t[140][70] / 9.33e40 - 1.0).abs() < 1e-2);
    }
}
