//! Distribution functions of spectral approximations: atomic rules, orthogonal-series
//! densities and Gaussian-smoothed atoms, plus the distances between them.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::integrate::adaptive;
use crate::orthopoly::{measure_gauss_rule, Component, ReferenceMeasure};
use crate::tridiag::orthopoly_eval;

/// Allowed deviation between masses before two distributions are considered incomparable.
pub const MASS_TOL: f64 = 1e-8;

/// Minimum number of panels for the Wasserstein integral of non-atomic operands.
pub const WASSERSTEIN_PANELS: usize = 4096;

/// Anything with a right-continuous distribution function.
pub trait DistributionFunction {
    fn cdf(&self, x: f64) -> f64;
    fn mass(&self) -> f64;
    /// Interval outside of which the cdf is (numerically) constant.
    fn extent(&self) -> (f64, f64);
    /// Points where the cdf jumps or has a kink.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
    fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        None
    }
}

/// Atoms `Σ ω_j δ(x - θ_j)` with strictly ascending nodes and possibly signed weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteDistribution {
    /// Sorts by node and merges exactly coincident nodes by adding their weights.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if let Some(x) = nodes.iter().chain(&weights).find(|x| !x.is_finite()) {
            return Err(invalid(format!(
                "distribution entries must be finite, got {x}"
            )));
        }
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut nodes: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            if nodes.last() == Some(&x) {
                *weights.last_mut().unwrap() += w;
            } else {
                nodes.push(x);
                weights.push(w);
            }
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            nodes,
            weights,
            cumulative,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ ω_j f(θ_j)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let weights = self.weights.iter().map(|w| c * w).collect();
        Self::new(self.nodes.clone(), weights).expect("scaling keeps entries finite")
    }

    /// Weighted mixture `Σ c_i D_i`, nodes merged.
    pub fn combine(parts: &[(f64, &DiscreteDistribution)]) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (c, d) in parts {
            nodes.extend_from_slice(&d.nodes);
            weights.extend(d.weights.iter().map(|w| c * w));
        }
        Self::new(nodes, weights)
    }
}

impl DistributionFunction for DiscreteDistribution {
    fn cdf(&self, x: f64) -> f64 {
        let k = self.nodes.partition_point(|t| *t <= x);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn extent(&self) -> (f64, f64) {
        match (self.nodes.first(), self.nodes.last()) {
            (Some(a), Some(b)) => (*a, *b),
            _ => (0.0, 0.0),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.nodes.clone()
    }

    fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        Some(self)
    }
}

/// `Σ|ω_j|`.
pub fn total_variation(dist: &DiscreteDistribution) -> f64 {
    dist.weights.iter().map(|w| w.abs()).sum()
}

/// The series `dμ/dx · Σ c_i p_i(x)` over a reference measure.
#[derive(Debug, Clone)]
pub struct SeriesDistribution {
    measure: ReferenceMeasure,
    coeffs: Vec<f64>,
    pieces: Vec<Piece>,
}

/// The series restricted to one mixture component, in that component's own basis.
#[derive(Debug, Clone)]
struct Piece {
    weight: f64,
    component: Component,
    coeffs: Vec<f64>,
}

impl SeriesDistribution {
    pub fn new(measure: ReferenceMeasure, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(invalid("series needs at least one coefficient"));
        }
        let s = coeffs.len() - 1;
        let pieces = match measure {
            ReferenceMeasure::ChebyshevT { a, b } => {
                vec![Piece {
                    weight: 1.0,
                    component: Component::ChebyshevT { a, b },
                    coeffs: coeffs.clone(),
                }]
            }
            ReferenceMeasure::ChebyshevU { a, b } => {
                vec![Piece {
                    weight: 1.0,
                    component: Component::ChebyshevU { a, b },
                    coeffs: coeffs.clone(),
                }]
            }
            ReferenceMeasure::Mixture(_) => {
                let j = measure.jacobi(s.max(1))?;
                let g = |x: f64| -> Result<f64> {
                    Ok(orthopoly_eval(&j, x, s)?
                        .iter()
                        .zip(&coeffs)
                        .map(|(p, c)| p * c)
                        .sum())
                };
                let mut pieces = Vec::new();
                for (weight, component) in measure.components() {
                    let (sub, rule) = match component {
                        Component::Atom { z } => {
                            pieces.push(Piece {
                                weight,
                                component,
                                coeffs: vec![g(z)?],
                            });
                            continue;
                        }
                        Component::ChebyshevT { a, b } => (
                            ReferenceMeasure::ChebyshevT { a, b },
                            measure_gauss_rule(&ReferenceMeasure::ChebyshevT { a, b }, s + 1)?,
                        ),
                        Component::ChebyshevU { a, b } => (
                            ReferenceMeasure::ChebyshevU { a, b },
                            measure_gauss_rule(&ReferenceMeasure::ChebyshevU { a, b }, s + 1)?,
                        ),
                    };
                    let q = sub.jacobi(s.max(1))?;
                    let mut proj = vec![0.0; s + 1];
                    for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                        let gx = g(*x)?;
                        for (pj, qj) in proj.iter_mut().zip(orthopoly_eval(&q, *x, s)?) {
                            *pj += w * gx * qj;
                        }
                    }
                    pieces.push(Piece {
                        weight,
                        component,
                        coeffs: proj,
                    });
                }
                pieces
            }
        };
        Ok(Self {
            measure,
            coeffs,
            pieces,
        })
    }

    pub fn measure(&self) -> &ReferenceMeasure {
        &self.measure
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Σ c_i p_i(x)`, the Radon–Nikodym derivative with respect to the reference measure.
    pub fn ratio(&self, x: f64) -> Result<f64> {
        let s = self.degree();
        let j = self.measure.jacobi(s.max(1))?;
        Ok(orthopoly_eval(&j, x, s)?
            .iter()
            .zip(&self.coeffs)
            .map(|(p, c)| p * c)
            .sum())
    }

    /// Series density. Undefined outside the open hull of the measure's support.
    pub fn density(&self, x: f64) -> Result<f64> {
        let d = self.measure.density(x)?;
        if d == 0.0 {
            return Ok(0.0);
        }
        Ok(d * self.ratio(x)?)
    }

    /// `∫ f d(series)` by a `d`-point Gauss rule of the reference measure.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, d: usize) -> Result<f64> {
        let rule = measure_gauss_rule(&self.measure, d)?;
        let s = self.degree();
        let j = self.measure.jacobi(s.max(1))?;
        let mut total = 0.0;
        for (x, w) in rule.nodes().iter().zip(rule.weights()) {
            let g: f64 = orthopoly_eval(&j, *x, s)?
                .iter()
                .zip(&self.coeffs)
                .map(|(p, c)| p * c)
                .sum();
            total += w * g * f(*x);
        }
        Ok(total)
    }
}

impl DistributionFunction for SeriesDistribution {
    fn cdf(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| {
                let parts = p.component.partial_integrals(x, p.coeffs.len() - 1);
                p.weight * parts.iter().zip(&p.coeffs).map(|(a, c)| a * c).sum::<f64>()
            })
            .sum()
    }

    fn mass(&self) -> f64 {
        self.pieces.iter().map(|p| p.weight * p.coeffs[0]).sum()
    }

    fn extent(&self) -> (f64, f64) {
        self.measure.support()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for p in &self.pieces {
            let (a, b) = p.component.hull();
            out.push(a);
            if b != a {
                out.push(b);
            }
        }
        out
    }
}

/// Output of one quadrature back end.
#[derive(Debug, Clone)]
pub enum Approximation {
    Discrete(DiscreteDistribution),
    Series(SeriesDistribution),
}

impl Approximation {
    /// `∫ f dΥ`; series are integrated by a `nodes`-point Gauss rule of their measure.
    pub fn integrate(&self, f: impl Fn(f64) -> f64, nodes: usize) -> Result<f64> {
        match self {
            Self::Discrete(d) => Ok(d.integrate(f)),
            Self::Series(s) => s.integrate(f, nodes),
        }
    }

    pub fn as_series(&self) -> Option<&SeriesDistribution> {
        match self {
            Self::Series(s) => Some(s),
            Self::Discrete(_) => None,
        }
    }
}

impl DistributionFunction for Approximation {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Discrete(d) => d.cdf(x),
            Self::Series(s) => s.cdf(x),
        }
    }
    fn mass(&self) -> f64 {
        match self {
            Self::Discrete(d) => d.mass(),
            Self::Series(s) => s.mass(),
        }
    }
    fn extent(&self) -> (f64, f64) {
        match self {
            Self::Discrete(d) => d.extent(),
            Self::Series(s) => s.extent(),
        }
    }
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Discrete(d) => d.breakpoints(),
            Self::Series(s) => s.breakpoints(),
        }
    }
    fn as_discrete(&self) -> Option<&DiscreteDistribution> {
        match self {
            Self::Discrete(d) => Some(d),
            Self::Series(_) => None,
        }
    }
}

/// Standard normal cdf.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// A discrete distribution convolved with a centered Gaussian.
#[derive(Debug, Clone)]
pub struct SmoothedDistribution {
    base: DiscreteDistribution,
    sigma: f64,
}

/// Number of standard deviations past the outer atoms beyond which the smoothed cdf is
/// treated as constant.
const SMOOTH_TAIL: f64 = 12.0;

pub fn smooth(dist: &DiscreteDistribution, sigma: f64) -> Result<SmoothedDistribution> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid(format!(
            "smoothing width must be positive, got {sigma}"
        )));
    }
    Ok(SmoothedDistribution {
        base: dist.clone(),
        sigma,
    })
}

impl SmoothedDistribution {
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn density(&self, x: f64) -> f64 {
        self.base.integrate(|t| normal_pdf((x - t) / self.sigma)) / self.sigma
    }
}

impl DistributionFunction for SmoothedDistribution {
    fn cdf(&self, x: f64) -> f64 {
        self.base.integrate(|t| normal_cdf((x - t) / self.sigma))
    }

    fn mass(&self) -> f64 {
        self.base.mass()
    }

    fn extent(&self) -> (f64, f64) {
        let (a, b) = self.base.extent();
        (a - SMOOTH_TAIL * self.sigma, b + SMOOTH_TAIL * self.sigma)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.base.nodes.clone()
    }
}

/// `∫ |F_1 - F_2| dx`. Exact for two atomic operands. Otherwise adaptive Kronrod on at least
/// [`WASSERSTEIN_PANELS`] panels over `[a, b]` widened to both operands' extents, with
/// panel boundaries at every breakpoint.
pub fn wasserstein(
    d1: &dyn DistributionFunction,
    d2: &dyn DistributionFunction,
    support: (f64, f64),
) -> Result<f64> {
    let (m1, m2) = (d1.mass(), d2.mass());
    if (m1 - m2).abs() > MASS_TOL || (m1 - 1.0).abs() > MASS_TOL {
        return Err(Error::MassMismatch(m1, m2));
    }
    if let (Some(p), Some(q)) = (d1.as_discrete(), d2.as_discrete()) {
        return Ok(wasserstein_discrete(p, q));
    }
    let (e1, e2) = (d1.extent(), d2.extent());
    let lo = support.0.min(e1.0).min(e2.0);
    let hi = support.1.max(e1.1).max(e2.1);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = (0..=WASSERSTEIN_PANELS)
        .map(|i| lo + (hi - lo) * i as f64 / WASSERSTEIN_PANELS as f64)
        .chain(d1.breakpoints())
        .chain(d2.breakpoints())
        .filter(|x| *x >= lo && *x <= hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let f = |x: f64| (d1.cdf(x) - d2.cdf(x)).abs();
    let tol = 1e-13 * (hi - lo) / cuts.len() as f64;
    Ok(cuts.windows(2).map(|w| adaptive(&f, w[0], w[1], tol)).sum())
}

fn wasserstein_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    let mut xs: Vec<f64> = p.nodes.iter().chain(&q.nodes).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.windows(2)
        .map(|w| (p.cdf(w[0]) - q.cdf(w[0])).abs() * (w[1] - w[0]))
        .sum()
}

/// Writes `x,value` rows at 17 significant digits.
pub fn write_csv<W: Write>(
    mut out: W,
    header: (&str, &str),
    rows: impl IntoIterator<Item = (f64, f64)>,
) -> Result<()> {
    writeln!(out, "{},{}", header.0, header.1)?;
    for (x, v) in rows {
        writeln!(out, "{x:.16e},{v:.16e}")?;
    }
    Ok(())
}
