//! Spectral approximations from moments or Jacobi matrices: interpolatory (iq), Gaussian
//! (gq), approximation (aq), approximate approximation (aaq), and Jackson damping.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measures::{DiscreteDistribution, SeriesDistribution};
use crate::moments::ModifiedMoments;
use crate::orthopoly::ReferenceMeasure;
use crate::tridiag::{symtrid_eigen, symtrid_eigenvectors, JacobiMatrix};

/// Eigendecomposition of the order-`d` Jacobi block of a reference measure, reusable across
/// moment vectors: nodes `θ_j` and the eigenvector matrix `S` (row = polynomial degree).
#[derive(Debug, Clone)]
pub struct NodeBasis {
    measure: ReferenceMeasure,
    nodes: Vec<f64>,
    /// `vectors[j][i] = S[i, j]`.
    vectors: Vec<Vec<f64>>,
}

impl NodeBasis {
    pub fn new(measure: &ReferenceMeasure, d: usize) -> Result<Self> {
        let j = measure.jacobi(d)?.leading(d)?;
        let e = symtrid_eigenvectors(&j)?;
        Ok(Self {
            measure: measure.clone(),
            nodes: e.eigenvalues,
            vectors: e.vectors,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights `ω = diag(S_{0,:}) S_{:r,:}ᵀ m_{:r}` with `r = min(s+1, d)`.
    pub fn weights(&self, m: &ModifiedMoments) -> Result<Vec<f64>> {
        if m.measure != self.measure {
            return Err(crate::error::invalid(format!(
                "moments are against {} but the nodes belong to {}",
                m.measure, self.measure
            )));
        }
        let r = m.values.len().min(self.order());
        Ok(self
            .vectors
            .iter()
            .map(|col| {
                col[0]
                    * col[..r]
                        .iter()
                        .zip(&m.values[..r])
                        .map(|(s, mi)| s * mi)
                        .sum::<f64>()
            })
            .collect())
    }

    pub fn rule(&self, m: &ModifiedMoments) -> Result<DiscreteDistribution> {
        DiscreteDistribution::new(self.nodes.clone(), self.weights(m)?)
    }
}

/// Rule supported on the zeros of `p_{s+1}` matching the moments through degree `s`.
/// Weights may be negative.
pub fn quad_by_interpolation(m: &ModifiedMoments) -> Result<DiscreteDistribution> {
    NodeBasis::new(&m.measure, m.values.len())?.rule(m)
}

/// Gauss rule of a Lanczos block: eigenvalues and squared first components.
pub fn gaussian_quadrature(t: &JacobiMatrix) -> Result<DiscreteDistribution> {
    let square = t.leading(t.order())?;
    let e = symtrid_eigen(&square)?;
    let w = e.weights();
    DiscreteDistribution::new(e.eigenvalues, w)
}

/// The series `dμ/dx Σ m_i p_i`.
pub fn quad_by_approximation(m: &ModifiedMoments) -> Result<SeriesDistribution> {
    SeriesDistribution::new(m.measure.clone(), m.values.clone())
}

/// Output of [`approx_quad_by_approximation`].
#[derive(Debug, Clone)]
pub struct ApproxRule {
    pub rule: DiscreteDistribution,
    /// Set when `d < s + 1`, so moments above degree `d - 1` were dropped.
    pub truncated: bool,
}

/// The series integrated by the `d`-point Gauss rule of its reference measure.
pub fn approx_quad_by_approximation(m: &ModifiedMoments, d: usize) -> Result<ApproxRule> {
    let basis = NodeBasis::new(&m.measure, d)?;
    Ok(ApproxRule {
        rule: basis.rule(m)?,
        truncated: d < m.values.len(),
    })
}

/// Default Gauss-rule size for aaq spectral sums.
pub fn default_aaq_nodes(s: usize) -> usize {
    8 * (s + 1)
}

/// Jackson damping factors `ρ_0..ρ_s`.
pub fn jackson_coefficients(s: usize) -> Vec<f64> {
    let denom = (s + 2) as f64;
    let step = PI / denom;
    let cot = 1.0 / step.tan();
    (0..=s)
        .map(|i| {
            let x = i as f64 * step;
            ((denom - i as f64) * x.cos() + x.sin() * cot) / denom
        })
        .collect()
}

pub fn apply_damping_values(values: &[f64], rho: &[f64]) -> Result<Vec<f64>> {
    if values.len() != rho.len() {
        return Err(Error::DimensionMismatch {
            expected: values.len(),
            got: rho.len(),
        });
    }
    Ok(values.iter().zip(rho).map(|(m, r)| m * r).collect())
}

/// `m_i ↦ ρ_i m_i`.
pub fn apply_damping(m: &ModifiedMoments, rho: &[f64]) -> Result<ModifiedMoments> {
    Ok(ModifiedMoments {
        measure: m.measure.clone(),
        values: apply_damping_values(&m.values, rho)?,
    })
}
