//! Symmetric tridiagonal (Jacobi) matrices.
//!
//! A [`JacobiMatrix`] holds the recurrence coefficients of an orthonormal
//! polynomial family,
//!
//! ```text
//! x p_i(x) = β_{i-1} p_{i-1}(x) + α_i p_i(x) + β_i p_{i+1}(x),   p_0 = 1, p_{-1} = 0,
//! ```
//!
//! with `α` on the diagonal and `β` on the off-diagonal. A matrix of order `m`
//! carries `m` alphas and either `m - 1` betas (the square `m × m` block) or `m`
//! betas (the extended `(m+1) × m` block, which also pins down `p_m`).

use crate::error::{invalid, Error, Result};

/// Relative size below which an off-diagonal entry is treated as zero by the eigensolver.
pub const DEFLATION_TOL: f64 = 1e-14;

/// Max QL sweeps per unit of order.
const SWEEPS_PER_ORDER: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl JacobiMatrix {
    /// Builds a Jacobi matrix, checking that every beta is strictly positive.
    pub fn new(alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let m = alphas.len();
        if m == 0 {
            return Err(invalid("Jacobi matrix must have order >= 1"));
        }
        if betas.len() + 1 != m && betas.len() != m {
            return Err(invalid(format!(
                "Jacobi matrix of order {m} needs {} or {m} betas, got {}",
                m - 1,
                betas.len()
            )));
        }
        if let Some(b) = betas.iter().find(|b| !(**b > 0.0) || !b.is_finite()) {
            return Err(invalid(format!(
                "Jacobi off-diagonal entries must be positive, got {b}"
            )));
        }
        if let Some(a) = alphas.iter().find(|a| !a.is_finite()) {
            return Err(invalid(format!(
                "Jacobi diagonal entries must be finite, got {a}"
            )));
        }
        Ok(Self { alphas, betas })
    }

    /// Number of diagonal entries.
    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// True when the trailing beta of the `(m+1) × m` block is carried.
    pub fn is_extended(&self) -> bool {
        self.betas.len() == self.alphas.len()
    }

    /// The leading `m × m` block.
    pub fn leading(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.order() {
            return Err(Error::InsufficientOrder {
                need: m,
                have: self.order(),
            });
        }
        Ok(Self {
            alphas: self.alphas[..m].to_vec(),
            betas: self.betas[..m - 1].to_vec(),
        })
    }

    /// The leading `(m+1) × m` block (m alphas, m betas).
    pub fn leading_extended(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.order() || m > self.betas.len() {
            return Err(Error::InsufficientOrder {
                need: m,
                have: self.betas.len(),
            });
        }
        Ok(Self {
            alphas: self.alphas[..m].to_vec(),
            betas: self.betas[..m].to_vec(),
        })
    }

    /// Infinity norm of the square part, an upper bound on the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        let m = self.order();
        (0..m)
            .map(|i| {
                let left = if i > 0 { self.betas[i - 1] } else { 0.0 };
                let right = if i + 1 < m { self.betas[i] } else { 0.0 };
                self.alphas[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Product of the square part with a vector.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let m = self.order();
        assert_eq!(x.len(), m);
        (0..m)
            .map(|i| {
                let mut y = self.alphas[i] * x[i];
                if i > 0 {
                    y += self.betas[i - 1] * x[i - 1];
                }
                if i + 1 < m {
                    y += self.betas[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn eigen(&self) -> Result<TridiagEigen> {
        symtrid_eigen(self)
    }
}

/// Eigenvalues and first eigenvector components of a Jacobi matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// First entry of each unit eigenvector, sign-normalized to be nonnegative.
    pub first_components: Vec<f64>,
}

impl TridiagEigen {
    /// Gauss weights: squared first components.
    pub fn weights(&self) -> Vec<f64> {
        self.first_components.iter().map(|s| s * s).collect()
    }
}

/// Full eigendecomposition; `vectors[j]` is the unit eigenvector for `eigenvalues[j]`.
#[derive(Debug, Clone)]
pub struct TridiagEigenvectors {
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Eigenvalues and first components of the square part of `j` (Golub–Welsch usage).
pub fn symtrid_eigen(j: &JacobiMatrix) -> Result<TridiagEigen> {
    let (eigenvalues, z) = implicit_ql(j, 1)?;
    let first_components = z.into_iter().map(|col| col[0].abs()).collect();
    Ok(TridiagEigen {
        eigenvalues,
        first_components,
    })
}

/// Eigenvalues and full eigenvectors of the square part of `j`.
pub fn symtrid_eigenvectors(j: &JacobiMatrix) -> Result<TridiagEigenvectors> {
    let m = j.order();
    let (eigenvalues, mut vectors) = implicit_ql(j, m)?;
    for v in &mut vectors {
        if v[0] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok(TridiagEigenvectors {
        eigenvalues,
        vectors,
    })
}

/// Implicit QL with shifts from the leading 2×2 block, accumulating the first `rows`
/// rows of the eigenvector matrix. Returns eigenvalues ascending with matching
/// eigenvector columns (each truncated to `rows` entries).
fn implicit_ql(j: &JacobiMatrix, rows: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = j.order();
    let mut d = j.alphas.clone();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&j.betas[..n - 1]);

    let scale = j.norm_inf();
    for x in e.iter_mut() {
        if x.abs() < DEFLATION_TOL * scale {
            *x = 0.0;
        }
    }

    // z[col][row]
    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut col = vec![0.0; rows];
            if c < rows {
                col[c] = 1.0;
            }
            col
        })
        .collect();

    let eps = f64::EPSILON;
    let cap = SWEEPS_PER_ORDER * n;
    let mut sweeps = 0usize;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > cap {
                    return Err(Error::NoConvergence { sweeps: cap });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for k in 0..rows {
                        let h = zi1[k];
                        zi1[k] = s * zi[k] + c * h;
                        zi[k] = c * zi[k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let vectors = order.iter().map(|&i| std::mem::take(&mut z[i])).collect();
    Ok((eigenvalues, vectors))
}

/// Values `p_0(x), ..., p_s(x)` of the orthonormal polynomials defined by `j`.
pub fn orthopoly_eval(j: &JacobiMatrix, x: f64, s: usize) -> Result<Vec<f64>> {
    if j.betas.len() < s || j.alphas.len() < s {
        return Err(Error::InsufficientOrder {
            need: s,
            have: j.betas.len().min(j.alphas.len()),
        });
    }
    let mut p = Vec::with_capacity(s + 1);
    p.push(1.0);
    let mut prev = 0.0;
    for i in 0..s {
        let back = if i > 0 { j.betas[i - 1] * prev } else { 0.0 };
        let next = ((x - j.alphas[i]) * p[i] - back) / j.betas[i];
        prev = p[i];
        p.push(next);
    }
    Ok(p)
}

/// Jacobi matrix of the Chebyshev measure of the first kind on `[a, b]`, extended
/// `(m+1) × m` form.
pub fn chebyshev_t_jacobi(a: f64, b: f64, m: usize) -> Result<JacobiMatrix> {
    check_interval(a, b)?;
    if m == 0 {
        return Err(invalid("order must be >= 1"));
    }
    let alphas = vec![0.5 * (a + b); m];
    let betas = (0..m)
        .map(|i| {
            if i == 0 {
                (b - a) / (2.0 * std::f64::consts::SQRT_2)
            } else {
                0.25 * (b - a)
            }
        })
        .collect();
    JacobiMatrix::new(alphas, betas)
}

/// Jacobi matrix of the Chebyshev measure of the second kind on `[a, b]`, extended
/// `(m+1) × m` form.
pub fn chebyshev_u_jacobi(a: f64, b: f64, m: usize) -> Result<JacobiMatrix> {
    check_interval(a, b)?;
    if m == 0 {
        return Err(invalid("order must be >= 1"));
    }
    JacobiMatrix::new(vec![0.5 * (a + b); m], vec![0.25 * (b - a); m])
}

pub(crate) fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("interval requires a < b, got [{a}, {b}]")));
    }
    Ok(())
}
