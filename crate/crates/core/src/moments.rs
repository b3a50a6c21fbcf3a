//! Krylov-side moment extraction: the direct recurrence, Chebyshev doubling, Lanczos,
//! and the two composed paths through connection coefficients.

use crate::error::{invalid, Error, Result};
use crate::operators::LinearOperator;
use crate::orthopoly::{connection_coefficients, connection_first_row, ReferenceMeasure};
use crate::tridiag::{
    chebyshev_t_jacobi, check_interval, orthopoly_eval, symtrid_eigen, JacobiMatrix,
};

/// Breakdown threshold for Lanczos, relative to the running estimate of `‖A‖`.
pub const BREAKDOWN_TOL: f64 = 1e-14;

/// `m_i = ∫ p_i dΨ` against the orthonormal polynomials of `measure`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedMoments {
    pub measure: ReferenceMeasure,
    pub values: Vec<f64>,
}

impl ModifiedMoments {
    pub fn degree(&self) -> usize {
        self.values.len() - 1
    }

    pub fn truncated(&self, s: usize) -> Result<Self> {
        if s > self.degree() {
            return Err(Error::InsufficientOrder {
                need: s,
                have: self.degree(),
            });
        }
        Ok(Self {
            measure: self.measure.clone(),
            values: self.values[..=s].to_vec(),
        })
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn check_dim(a: &dyn LinearOperator, v: &[f64]) -> Result<()> {
    if v.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

/// `m_i = vᵀ p_i(A) v` for `i ≤ k` by the matrix three-term recurrence.
pub fn modified_moments(
    a: &dyn LinearOperator,
    v: &[f64],
    k: usize,
    mu: &ReferenceMeasure,
) -> Result<ModifiedMoments> {
    check_dim(a, v)?;
    let mut values = Vec::with_capacity(k + 1);
    values.push(dot(v, v));
    if k == 0 {
        return Ok(ModifiedMoments {
            measure: mu.clone(),
            values,
        });
    }
    let j = mu.jacobi(k)?;
    if j.betas().len() < k {
        return Err(Error::InsufficientOrder {
            need: k,
            have: j.betas().len(),
        });
    }
    let (alpha, beta) = (j.alphas(), j.betas());
    let n = v.len();
    let mut prev = vec![0.0; n];
    let mut cur = v.to_vec();
    let mut next = vec![0.0; n];
    for i in 0..k {
        a.apply(&cur, &mut next);
        let back = if i > 0 { beta[i - 1] } else { 0.0 };
        for t in 0..n {
            next[t] = ((next[t] - alpha[i] * cur[t]) - back * prev[t]) / beta[i];
        }
        values.push(dot(v, &next));
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(ModifiedMoments {
        measure: mu.clone(),
        values,
    })
}

/// Moments against `μ^T_{a,b}` through degree `2k` from `k` products with `A`.
pub fn chebyshev_moments(
    a: &dyn LinearOperator,
    v: &[f64],
    k: usize,
    lo: f64,
    hi: f64,
) -> Result<ModifiedMoments> {
    check_interval(lo, hi)?;
    check_dim(a, v)?;
    let measure = ReferenceMeasure::ChebyshevT { a: lo, b: hi };
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut values = vec![0.0; 2 * k + 1];
    let m0 = dot(v, v);
    values[0] = m0;
    if k == 0 {
        return Ok(ModifiedMoments { measure, values });
    }
    let (c, d) = (2.0 / (hi - lo), -(hi + lo) / (hi - lo));
    let n = v.len();
    // q_i = T_i(Ã) v with Ã = cA + dI
    let mut prev = v.to_vec();
    let mut cur = vec![0.0; n];
    a.apply(v, &mut cur);
    for t in 0..n {
        cur[t] = c * cur[t] + d * v[t];
    }
    let m1 = sqrt2 * dot(v, &cur);
    values[1] = m1;
    let mut next = vec![0.0; n];
    for i in 1..=k {
        // q_i is `cur`, q_{i-1} is `prev`
        values[2 * i] = sqrt2 * (2.0 * dot(&cur, &cur) - m0);
        if i > 1 {
            values[2 * i - 1] = sqrt2 * 2.0 * dot(&prev, &cur) - m1;
        }
        if i == k {
            break;
        }
        a.apply(&cur, &mut next);
        for t in 0..n {
            next[t] = 2.0 * (c * next[t] + d * cur[t]) - prev[t];
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(ModifiedMoments { measure, values })
}

/// Output of [`lanczos`].
#[derive(Debug, Clone)]
pub struct LanczosOutput {
    /// Extended `(k+1) × k` block, or the square block of the invariant subspace on
    /// breakdown.
    pub jacobi: JacobiMatrix,
    /// True when an invariant subspace was found before `k` steps (or at step `k`).
    pub breakdown: bool,
    /// `‖v‖²` of the starting vector.
    pub start_norm2: f64,
}

/// `k` steps of Lanczos from `v`. With `reorth`, each new direction is orthogonalized
/// twice against the whole stored basis by classical Gram–Schmidt.
pub fn lanczos(a: &dyn LinearOperator, v: &[f64], k: usize, reorth: bool) -> Result<LanczosOutput> {
    check_dim(a, v)?;
    if k == 0 {
        return Err(invalid("Lanczos needs k >= 1"));
    }
    let norm2 = dot(v, v);
    if !(norm2 > 0.0) || !norm2.is_finite() {
        return Err(invalid("Lanczos starting vector must be nonzero"));
    }
    let n = v.len();
    let inv = 1.0 / norm2.sqrt();
    let mut q: Vec<f64> = v.iter().map(|x| x * inv).collect();
    let mut q_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut coef = Vec::new();
    let mut alphas = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k);
    let mut scale: f64 = 0.0;
    let mut beta_prev = 0.0;
    for j in 0..k {
        if reorth {
            basis.push(q.clone());
        }
        a.apply(&q, &mut w);
        for t in 0..n {
            w[t] -= beta_prev * q_prev[t];
        }
        let alpha = dot(&q, &w);
        for t in 0..n {
            w[t] -= alpha * q[t];
        }
        if reorth {
            for _ in 0..2 {
                coef.clear();
                coef.extend(basis.iter().map(|b| dot(b, &w)));
                for (b, c) in basis.iter().zip(&coef) {
                    for t in 0..n {
                        w[t] -= c * b[t];
                    }
                }
            }
        }
        let beta = dot(&w, &w).sqrt();
        alphas.push(alpha);
        scale = scale.max(alpha.abs() + beta + beta_prev);
        if beta <= BREAKDOWN_TOL * scale || j + 1 >= n {
            let jacobi = JacobiMatrix::new(alphas, betas)?;
            return Ok(LanczosOutput {
                jacobi,
                breakdown: true,
                start_norm2: norm2,
            });
        }
        betas.push(beta);
        let inv = 1.0 / beta;
        std::mem::swap(&mut q_prev, &mut q);
        for t in 0..n {
            q[t] = w[t] * inv;
        }
        beta_prev = beta;
    }
    let jacobi = JacobiMatrix::new(alphas, betas)?;
    Ok(LanczosOutput {
        jacobi,
        breakdown: false,
        start_norm2: norm2,
    })
}

/// Moments against `μ` through degree `s` via Chebyshev moments on `[lo, hi]` and
/// connection coefficients.
pub fn moments_from_cheb(
    a: &dyn LinearOperator,
    v: &[f64],
    s: usize,
    mu: &ReferenceMeasure,
    lo: f64,
    hi: f64,
) -> Result<ModifiedMoments> {
    let k = s.div_ceil(2);
    let cheb = chebyshev_moments(a, v, k, lo, hi)?;
    if *mu == cheb.measure {
        return cheb.truncated(s);
    }
    if s == 0 {
        return Ok(ModifiedMoments {
            measure: mu.clone(),
            values: vec![cheb.values[0]],
        });
    }
    let mj = mu.jacobi(s)?;
    let nu = chebyshev_t_jacobi(lo, hi, s + 1)?;
    let c = connection_coefficients(&mj, &nu, s)?;
    let values = c.transport(&cheb.values)?;
    Ok(ModifiedMoments {
        measure: mu.clone(),
        values,
    })
}

/// Moments against `μ` through degree `s` from `⌈s/2⌉` Lanczos steps. On breakdown the
/// Lanczos Gauss rule represents `Ψ` exactly and the moments are integrated from it.
pub fn moments_from_lanczos(
    a: &dyn LinearOperator,
    v: &[f64],
    s: usize,
    mu: &ReferenceMeasure,
    reorth: bool,
) -> Result<ModifiedMoments> {
    check_dim(a, v)?;
    let norm2 = dot(v, v);
    if s == 0 {
        return Ok(ModifiedMoments {
            measure: mu.clone(),
            values: vec![norm2],
        });
    }
    let k = s.div_ceil(2);
    let out = lanczos(a, v, k, reorth)?;
    moments_from_jacobi(&out, s, mu)
}

/// Moments against `μ` from a Lanczos run, through degree `s ≤ 2k`.
pub fn moments_from_jacobi(
    out: &LanczosOutput,
    s: usize,
    mu: &ReferenceMeasure,
) -> Result<ModifiedMoments> {
    let mj = mu.jacobi(s.max(1))?;
    let values = if out.breakdown {
        let e = symtrid_eigen(&out.jacobi)?;
        let mut m = vec![0.0; s + 1];
        for (theta, w) in e.eigenvalues.iter().zip(e.weights()) {
            for (mi, p) in m.iter_mut().zip(orthopoly_eval(&mj, *theta, s)?) {
                *mi += w * p;
            }
        }
        m
    } else {
        connection_first_row(&mj, &out.jacobi, s)?
    };
    let values = values.into_iter().map(|x| x * out.start_norm2).collect();
    Ok(ModifiedMoments {
        measure: mu.clone(),
        values,
    })
}
