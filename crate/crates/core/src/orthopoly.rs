//! Reference measures, their Gauss rules, and change-of-basis (connection) coefficients
//! between orthonormal polynomial families.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{invalid, Error, Result};
use crate::measures::DiscreteDistribution;
use crate::moments::lanczos;
use crate::operators::diagonal_operator;
use crate::tridiag::{
    chebyshev_t_jacobi, chebyshev_u_jacobi, check_interval, symtrid_eigen, JacobiMatrix,
};

/// One piece of a mixture measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    ChebyshevT { a: f64, b: f64 },
    ChebyshevU { a: f64, b: f64 },
    Atom { z: f64 },
}

impl Component {
    pub fn hull(&self) -> (f64, f64) {
        match *self {
            Component::ChebyshevT { a, b } | Component::ChebyshevU { a, b } => (a, b),
            Component::Atom { z } => (z, z),
        }
    }

    /// Jacobi matrix of the component itself (extended form). Atoms only have order 1.
    fn jacobi(&self, m: usize) -> Result<JacobiMatrix> {
        match *self {
            Component::ChebyshevT { a, b } => chebyshev_t_jacobi(a, b, m),
            Component::ChebyshevU { a, b } => chebyshev_u_jacobi(a, b, m),
            Component::Atom { z } => JacobiMatrix::new(vec![z], vec![]),
        }
    }

    fn gauss_rule(&self, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        match *self {
            Component::Atom { z } => Ok((vec![z], vec![1.0])),
            _ => {
                let e = symtrid_eigen(&self.jacobi(d)?.leading(d)?)?;
                let w = e.weights();
                Ok((e.eigenvalues, w))
            }
        }
    }

    /// Component cdf.
    fn cdf(&self, x: f64) -> f64 {
        match *self {
            Component::ChebyshevT { a, b } => {
                let phi = arccos_mapped(x, a, b);
                1.0 - phi / PI
            }
            Component::ChebyshevU { a, b } => {
                let phi = arccos_mapped(x, a, b);
                (PI - phi + 0.5 * (2.0 * phi).sin()) / PI
            }
            Component::Atom { z } => {
                if x >= z {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Component density on the open support, 0 outside the closed hull.
    fn density(&self, x: f64) -> Option<f64> {
        match *self {
            Component::ChebyshevT { a, b } => {
                interior(x, a, b).map(|u| 2.0 / ((b - a) * PI * (1.0 - u * u).sqrt()))
            }
            Component::ChebyshevU { a, b } => {
                interior(x, a, b).map(|u| 4.0 / ((b - a) * PI) * (1.0 - u * u).sqrt())
            }
            Component::Atom { .. } => Some(0.0),
        }
    }

    /// `∫_{(-∞, x]} q_j dμ_c` for `j = 0..=s`, where `q_j` are the component's orthonormal
    /// polynomials.
    pub(crate) fn partial_integrals(&self, x: f64, s: usize) -> Vec<f64> {
        let mut out = vec![0.0; s + 1];
        match *self {
            Component::ChebyshevT { a, b } => {
                let phi = arccos_mapped(x, a, b);
                out[0] = 1.0 - phi / PI;
                for (i, o) in out.iter_mut().enumerate().skip(1) {
                    let fi = i as f64;
                    *o = -std::f64::consts::SQRT_2 * (fi * phi).sin() / (fi * PI);
                }
            }
            Component::ChebyshevU { a, b } => {
                let phi = arccos_mapped(x, a, b);
                out[0] = (PI - phi + 0.5 * (2.0 * phi).sin()) / PI;
                for (i, o) in out.iter_mut().enumerate().skip(1) {
                    let fi = i as f64;
                    *o = (-(fi * phi).sin() / fi + ((fi + 2.0) * phi).sin() / (fi + 2.0)) / PI;
                }
            }
            Component::Atom { z } => {
                if x >= z {
                    out[0] = 1.0;
                }
            }
        }
        out
    }
}

fn take_leading(j: &JacobiMatrix, m: usize) -> Option<JacobiMatrix> {
    if j.betas().len() >= m {
        j.leading_extended(m).ok()
    } else if j.order() == m {
        Some(j.clone())
    } else {
        None
    }
}

fn map_to_unit(x: f64, a: f64, b: f64) -> f64 {
    (2.0 * x - a - b) / (b - a)
}

/// `arccos` of the affine image of `x`, clamped so that points left of `a` give `π` and
/// right of `b` give `0`.
fn arccos_mapped(x: f64, a: f64, b: f64) -> f64 {
    map_to_unit(x, a, b).clamp(-1.0, 1.0).acos()
}

fn interior(x: f64, a: f64, b: f64) -> Option<f64> {
    if x <= a || x >= b {
        None
    } else {
        Some(map_to_unit(x, a, b))
    }
}

pub struct Mixture {
    components: Vec<(f64, Component)>,
    cache: RwLock<Option<JacobiMatrix>>,
}

impl fmt::Debug for Mixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mixture")
            .field("components", &self.components)
            .finish()
    }
}

impl Mixture {
    pub fn components(&self) -> &[(f64, Component)] {
        &self.components
    }

    fn atoms(&self) -> usize {
        self.components
            .iter()
            .filter(|(_, c)| matches!(c, Component::Atom { .. }))
            .count()
    }

    fn purely_atomic(&self) -> bool {
        self.atoms() == self.components.len()
    }

    /// Recurrence coefficients through order `m`, extended when the support allows.
    fn jacobi(&self, m: usize) -> Result<JacobiMatrix> {
        if self.purely_atomic() && m > self.atoms() {
            return Err(Error::InsufficientOrder {
                need: m,
                have: self.atoms(),
            });
        }
        let cached_order = {
            let guard = self.cache.read().unwrap();
            if let Some(out) = guard.as_ref().and_then(|j| take_leading(j, m)) {
                return Ok(out);
            }
            guard.as_ref().map_or(0, JacobiMatrix::order)
        };
        let mut depth = m.max(2 * cached_order).max(16);
        if self.purely_atomic() {
            depth = depth.min(self.atoms());
        }
        let built = self.stieltjes(depth)?;
        let out = take_leading(&built, m).ok_or(Error::InsufficientOrder {
            need: m,
            have: built.order(),
        })?;
        let mut guard = self.cache.write().unwrap();
        if guard.as_ref().is_none_or(|c| c.order() < built.order()) {
            *guard = Some(built);
        }
        Ok(out)
    }

    fn stieltjes(&self, m: usize) -> Result<JacobiMatrix> {
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (w, c) in &self.components {
            let (x, q) = c.gauss_rule(m + 1)?;
            nodes.extend(x);
            weights.extend(q.into_iter().map(|q| w * q));
        }
        stieltjes_from_discrete(&nodes, &weights, m)
    }
}

/// A reference measure `μ` for moments and series approximations.
#[derive(Debug, Clone)]
pub enum ReferenceMeasure {
    ChebyshevT { a: f64, b: f64 },
    ChebyshevU { a: f64, b: f64 },
    Mixture(Arc<Mixture>),
}

impl PartialEq for ReferenceMeasure {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Self::ChebyshevT { a, b }, Self::ChebyshevT { a: c, b: d }) => a == c && b == d,
            (Self::ChebyshevU { a, b }, Self::ChebyshevU { a: c, b: d }) => a == c && b == d,
            (Self::Mixture(x), Self::Mixture(y)) => {
                Arc::ptr_eq(x, y) || x.components == y.components
            }
            _ => false,
        }
    }
}

impl fmt::Display for ReferenceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn comp(f: &mut fmt::Formatter<'_>, c: &Component) -> fmt::Result {
            match c {
                Component::ChebyshevT { a, b } => write!(f, "chebT({a},{b})"),
                Component::ChebyshevU { a, b } => write!(f, "chebU({a},{b})"),
                Component::Atom { z } => write!(f, "atom({z})"),
            }
        }
        match self {
            Self::ChebyshevT { a, b } => write!(f, "chebT({a},{b})"),
            Self::ChebyshevU { a, b } => write!(f, "chebU({a},{b})"),
            Self::Mixture(m) => {
                write!(f, "mix(")?;
                for (i, (w, c)) in m.components.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{w}*")?;
                    comp(f, c)?;
                }
                write!(f, ")")
            }
        }
    }
}

impl ReferenceMeasure {
    pub fn chebyshev_t(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        Ok(Self::ChebyshevT { a, b })
    }

    pub fn chebyshev_u(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        Ok(Self::ChebyshevU { a, b })
    }

    /// Weighted components; a single-kind measure is one component of weight 1.
    pub fn components(&self) -> Vec<(f64, Component)> {
        match *self {
            Self::ChebyshevT { a, b } => vec![(1.0, Component::ChebyshevT { a, b })],
            Self::ChebyshevU { a, b } => vec![(1.0, Component::ChebyshevU { a, b })],
            Self::Mixture(ref m) => m.components.clone(),
        }
    }

    /// Convex hull of the support.
    pub fn support(&self) -> (f64, f64) {
        self.components()
            .iter()
            .map(|(_, c)| c.hull())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| {
                (lo.min(a), hi.max(b))
            })
    }

    /// Largest order for which `jacobi` succeeds, if finite.
    pub fn max_order(&self) -> Option<usize> {
        match self {
            Self::Mixture(m) if m.purely_atomic() => Some(m.atoms()),
            _ => None,
        }
    }

    /// Recurrence coefficients through order `m`: `m` alphas and `m` betas, or `m - 1`
    /// betas when the support has exactly `m` points.
    pub fn jacobi(&self, m: usize) -> Result<JacobiMatrix> {
        if m == 0 {
            return Err(invalid("Jacobi order must be >= 1"));
        }
        match *self {
            Self::ChebyshevT { a, b } => chebyshev_t_jacobi(a, b, m),
            Self::ChebyshevU { a, b } => chebyshev_u_jacobi(a, b, m),
            Self::Mixture(ref mix) => mix.jacobi(m),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.components().iter().map(|(w, c)| w * c.cdf(x)).sum()
    }

    /// Density of the absolutely continuous part. Errors outside the open hull of the
    /// support; inside gaps between components it is 0.
    pub fn density(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(x > lo && x < hi) {
            return Err(Error::Domain {
                name: format!("density of {self}"),
                x,
            });
        }
        let mut total = 0.0;
        for (w, c) in self.components() {
            match c.density(x) {
                Some(d) => total += w * d,
                None => {
                    let (a, b) = c.hull();
                    if x == a || x == b {
                        return Err(Error::Domain {
                            name: format!("density of {self}"),
                            x,
                        });
                    }
                }
            }
        }
        Ok(total)
    }
}

/// Builds a mixture of Chebyshev intervals and point masses.
pub fn mixture_measure(components: Vec<(f64, Component)>) -> Result<ReferenceMeasure> {
    if components.is_empty() {
        return Err(invalid("mixture needs at least one component"));
    }
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if components.iter().any(|(w, _)| !(*w > 0.0)) {
        return Err(invalid("mixture weights must be positive"));
    }
    if (total - 1.0).abs() > 1e-10 {
        return Err(invalid(format!(
            "mixture weights must sum to 1, got {total}"
        )));
    }
    for (_, c) in &components {
        if let Component::ChebyshevT { a, b } | Component::ChebyshevU { a, b } = *c {
            check_interval(a, b)?;
        }
    }
    // intervals must be disjoint and atoms distinct; an atom may sit inside an interval
    let disjoint = |mut hulls: Vec<(f64, f64)>| -> Result<()> {
        hulls.sort_by(|x, y| x.0.total_cmp(&y.0));
        for pair in hulls.windows(2) {
            if pair[1].0 <= pair[0].1 {
                return Err(invalid(format!(
                    "mixture components overlap: [{}, {}] and [{}, {}]",
                    pair[0].0, pair[0].1, pair[1].0, pair[1].1
                )));
            }
        }
        Ok(())
    };
    let (atoms, intervals): (Vec<_>, Vec<_>) = components
        .iter()
        .partition(|(_, c)| matches!(c, Component::Atom { .. }));
    disjoint(intervals.iter().map(|(_, c)| c.hull()).collect())?;
    disjoint(atoms.iter().map(|(_, c)| c.hull()).collect())?;
    Ok(ReferenceMeasure::Mixture(Arc::new(Mixture {
        components,
        cache: RwLock::new(None),
    })))
}

/// `d`-point Gauss rule of `μ`.
pub fn measure_gauss_rule(mu: &ReferenceMeasure, d: usize) -> Result<DiscreteDistribution> {
    if d == 0 {
        return Err(invalid("Gauss rule needs d >= 1"));
    }
    let j = mu.jacobi(d)?.leading(d)?;
    let e = symtrid_eigen(&j)?;
    let w = e.weights();
    DiscreteDistribution::new(e.eigenvalues, w)
}

/// Jacobi matrix of the discrete measure `Σ w_j δ(x - x_j)` via Lanczos on `diag(x)` from
/// `sqrt(w)`, with full reorthogonalization. Returns the extended form when the measure
/// has more than `m` support points and the square form when it has exactly `m`.
pub fn stieltjes_from_discrete(nodes: &[f64], weights: &[f64], m: usize) -> Result<JacobiMatrix> {
    if nodes.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            got: weights.len(),
        });
    }
    if m == 0 || nodes.is_empty() {
        return Err(invalid(
            "Stieltjes procedure needs m >= 1 and at least one node",
        ));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(invalid("Stieltjes procedure needs positive weights"));
    }
    let op = diagonal_operator(nodes.to_vec())?;
    let v: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let out = lanczos(&op, &v, m, true)?;
    let j = out.jacobi;
    if j.order() < m {
        return Err(Error::Breakdown {
            steps: j.order(),
            requested: m,
        });
    }
    Ok(j)
}

/// Upper-triangular change of basis `p_j = Σ_i C[i,j] q_i` from the orthonormal family of
/// `μ` (the `p_j`) to that of `ν` (the `q_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    size: usize,
    /// Row-major `size × size`.
    data: Vec<f64>,
    /// `rows[j]`: number of valid leading entries in column `j`.
    rows: Vec<usize>,
}

impl ConnectionMatrix {
    /// Number of columns (`s + 1`).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    /// Whether every entry of the upper triangle was computed.
    pub fn is_full(&self) -> bool {
        self.rows.iter().enumerate().all(|(j, &r)| r == j + 1)
    }

    pub fn first_row(&self) -> Vec<f64> {
        self.data[..self.size].to_vec()
    }

    /// `Cᵀ n`: moments with respect to `μ` from moments `n` with respect to `ν`.
    pub fn transport(&self, n: &[f64]) -> Result<Vec<f64>> {
        if !self.is_full() {
            return Err(invalid(
                "connection matrix has only a partial upper triangle",
            ));
        }
        if n.len() < self.size {
            return Err(Error::InsufficientOrder {
                need: self.size,
                have: n.len(),
            });
        }
        Ok((0..self.size)
            .map(|j| (0..=j).map(|i| self.get(i, j) * n[i]).sum())
            .collect())
    }
}

/// Full connection coefficients through degree `s`. Needs `μ` with `s` alphas and betas
/// and `ν` with `#γ + #δ ≥ 2s`.
pub fn connection_coefficients(
    mu: &JacobiMatrix,
    nu: &JacobiMatrix,
    s: usize,
) -> Result<ConnectionMatrix> {
    let have = nu.alphas().len() + nu.betas().len();
    if have < 2 * s {
        return Err(Error::InsufficientOrder { need: 2 * s, have });
    }
    connection_block(mu, nu, s)
}

/// First row `C[0, 0..=s]` of the connection coefficients. Needs `#γ + #δ ≥ s` for `ν`,
/// so the `(k+1) × k` Lanczos block gives degree `2k`.
pub fn connection_first_row(mu: &JacobiMatrix, nu: &JacobiMatrix, s: usize) -> Result<Vec<f64>> {
    let have = nu.alphas().len() + nu.betas().len();
    if have < s {
        return Err(Error::InsufficientOrder { need: s, have });
    }
    Ok(connection_block(mu, nu, s)?.first_row())
}

fn connection_block(mu: &JacobiMatrix, nu: &JacobiMatrix, s: usize) -> Result<ConnectionMatrix> {
    let (alpha, beta) = (mu.alphas(), mu.betas());
    if s > 0 && (alpha.len() < s || beta.len() < s) {
        return Err(Error::InsufficientOrder {
            need: s,
            have: alpha.len().min(beta.len()),
        });
    }
    let (gamma, delta) = (nu.alphas(), nu.betas());
    let reach = gamma.len() + delta.len();
    let n = s + 1;
    let mut c = vec![0.0; n * n];
    let mut rows = vec![0usize; n];
    c[0] = 1.0;
    rows[0] = 1;
    let at = |c: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i > j {
            0.0
        } else {
            c[i as usize * n + j as usize]
        }
    };
    for j in 1..n {
        let top = j.min(reach.saturating_sub(j));
        for i in 0..=top {
            let (ii, jj) = (i as isize, j as isize);
            let mut v = 0.0;
            if i >= 1 {
                v += delta[i - 1] * at(&c, ii - 1, jj - 1);
            }
            if i < j {
                v += (gamma[i] - alpha[j - 1]) * at(&c, ii, jj - 1);
            }
            if i + 1 < j {
                v += delta[i] * at(&c, ii + 1, jj - 1);
            }
            if j >= 2 {
                v -= beta[j - 2] * at(&c, ii, jj - 2);
            }
            c[i * n + j] = v / beta[j - 1];
        }
        rows[j] = top + 1;
    }
    Ok(ConnectionMatrix {
        size: n,
        data: c,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tridiag::orthopoly_eval;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Composite Simpson with `n` (even) panels, independent of the crate's integrator.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let inner: f64 = (1..n)
            .map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 })
            .sum();
        (f(a) + f(b) + inner) * h / 3.0
    }

    /// `∫ g dμ^T_{a,b}` via the substitution x = mid + half·cos θ (smooth integrand).
    fn integrate_t(g: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        simpson(&|t: f64| g(mid + half * t.cos()) / PI, 0.0, PI, 2000)
    }

    #[test]
    fn identical_measures_give_identity() {
        let mu = chebyshev_u_jacobi(-1.0, 2.0, 6).unwrap();
        let c = connection_coefficients(&mu, &mu, 6).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (c.get(i, j) - expect).abs() < 1e-13,
                    "{i},{j}: {}",
                    c.get(i, j)
                );
            }
        }
    }

    #[test]
    fn base_cases() {
        let mu = JacobiMatrix::new(vec![0.3, -0.2], vec![0.7, 0.4]).unwrap();
        let nu = JacobiMatrix::new(vec![1.1, 0.5], vec![0.9, 0.6]).unwrap();
        let c = connection_coefficients(&mu, &nu, 1).unwrap();
        assert!((c.get(0, 1) - (1.1 - 0.3) / 0.7).abs() < 1e-15);
        assert!((c.get(1, 1) - 0.9 / 0.7).abs() < 1e-15);
        assert_eq!(c.get(0, 0), 1.0);
        assert_eq!(c.get(1, 0), 0.0);
    }

    #[test]
    fn against_integration_oracle() {
        // p_j orthonormal for μ^T_{-1,1}, q_i orthonormal for ν = μ^T_{0,1}; C[i,j] = ∫ q_i p_j dν
        let mu = chebyshev_t_jacobi(-1.0, 1.0, 3).unwrap();
        let nu = chebyshev_t_jacobi(0.0, 1.0, 4).unwrap();
        let c = connection_coefficients(&mu, &nu, 3).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let oracle = integrate_t(
                    |x| {
                        orthopoly_eval(&nu, x, 3).unwrap()[i]
                            * orthopoly_eval(&mu, x, 3).unwrap()[j]
                    },
                    0.0,
                    1.0,
                );
                assert!(
                    (c.get(i, j) - oracle).abs() < 1e-10,
                    "C[{i},{j}] = {} vs {oracle}",
                    c.get(i, j)
                );
            }
        }
        for j in 0..4 {
            assert!(c.get(j, j) > 0.0);
        }
    }

    #[test]
    fn insufficient_order_rejected() {
        let mu = chebyshev_t_jacobi(-1.0, 1.0, 3).unwrap();
        let nu = chebyshev_t_jacobi(0.0, 1.0, 2).unwrap();
        assert!(connection_coefficients(&mu, &nu, 3).is_err());
        assert!(connection_first_row(&mu, &nu, 3).is_ok());
        assert!(connection_first_row(&mu, &nu, 5).is_err());
        assert!(
            connection_coefficients(&mu, &chebyshev_t_jacobi(0.0, 1.0, 8).unwrap(), 4).is_err()
        );
    }

    #[test]
    fn gauss_chebyshev_rule() {
        let mu = ReferenceMeasure::chebyshev_t(-1.0, 1.0).unwrap();
        for k in [1usize, 3, 8, 20] {
            let rule = measure_gauss_rule(&mu, k).unwrap();
            for (idx, (x, w)) in rule.nodes().iter().zip(rule.weights()).enumerate() {
                let j = (k - idx) as f64;
                assert!((x - ((2.0 * j - 1.0) * PI / (2.0 * k as f64)).cos()).abs() < 1e-13);
                assert!((w - 1.0 / k as f64).abs() < 1e-13);
            }
            // moment-matching oracle: ∫ x^i dμ^T = binom(i, i/2)/2^i for even i
            for i in 0..2 * k {
                let quad: f64 = rule
                    .nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(x, w)| w * x.powi(i as i32))
                    .sum();
                let exact = if i % 2 == 1 {
                    0.0
                } else {
                    (0..i / 2).fold(1.0, |acc, t| acc * (i - t) as f64 / (t + 1) as f64)
                        / 2f64.powi(i as i32)
                };
                assert!((quad - exact).abs() < 1e-13, "k={k} i={i}");
            }
        }
        let u = ReferenceMeasure::chebyshev_u(-1.0, 1.0).unwrap();
        let r = measure_gauss_rule(&u, 1).unwrap();
        assert_eq!(r.nodes().len(), 1);
        assert!(r.nodes()[0].abs() < 1e-16 && (r.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_rule_integrates_orthopolys() {
        let mix = mixture_measure(vec![
            (0.3, Component::ChebyshevU { a: -2.0, b: -1.0 }),
            (0.5, Component::ChebyshevT { a: 0.0, b: 1.0 }),
            (0.2, Component::Atom { z: 1.5 }),
        ])
        .unwrap();
        for mu in [ReferenceMeasure::chebyshev_u(0.0, 3.0).unwrap(), mix] {
            let d = 6;
            let rule = measure_gauss_rule(&mu, d).unwrap();
            let j = mu.jacobi(2 * d).unwrap();
            for i in 0..2 * d {
                let v: f64 = rule
                    .nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(x, w)| w * orthopoly_eval(&j, *x, i).unwrap()[i])
                    .sum();
                let expect = if i == 0 { 1.0 } else { 0.0 };
                assert!((v - expect).abs() < 1e-10, "{mu} i={i}: {v}");
            }
        }
    }

    #[test]
    fn stieltjes_recovers_chebyshev() {
        let mu = ReferenceMeasure::chebyshev_t(-1.0, 1.0).unwrap();
        let m = 10;
        let rule = measure_gauss_rule(&mu, 2 * m).unwrap();
        let j = stieltjes_from_discrete(rule.nodes(), rule.weights(), m).unwrap();
        let exact = chebyshev_t_jacobi(-1.0, 1.0, m).unwrap();
        for i in 0..m {
            assert!((j.alphas()[i] - exact.alphas()[i]).abs() < 1e-12);
        }
        for i in 0..m - 1 {
            assert!((j.betas()[i] - exact.betas()[i]).abs() < 1e-12);
        }
        let single = stieltjes_from_discrete(&[2.5], &[1.0], 1).unwrap();
        assert_eq!(single.alphas(), &[2.5]);
        assert!(stieltjes_from_discrete(&[1.0, 2.0], &[0.5, 0.5], 3).is_err());
    }

    /// `∫ x^i dμ^U_{a,b}` in closed form: Catalan numbers on [-1,1], expanded binomially.
    fn u_moment(i: usize, a: f64, b: f64) -> f64 {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let unit = |r: usize| -> f64 {
            if r % 2 == 1 {
                return 0.0;
            }
            let h = r / 2;
            // Catalan(h+... ): ∫ t^{2h} (2/π)√(1-t²) dt = C_h / 4^h
            let mut cat = 1.0;
            for t in 0..h {
                cat = cat * 2.0 * (2 * t + 1) as f64 / (t + 2) as f64;
            }
            cat / 4f64.powi(h as i32)
        };
        let mut binom = 1.0;
        let mut total = 0.0;
        for r in 0..=i {
            total += binom * mid.powi((i - r) as i32) * half.powi(r as i32) * unit(r);
            binom = binom * (i - r) as f64 / (r + 1) as f64;
        }
        total
    }

    #[test]
    fn two_interval_mixture_moments() {
        let intervals = [(-1.0, -0.75), (0.75, 1.0)];
        let mu = mixture_measure(vec![
            (
                0.5,
                Component::ChebyshevU {
                    a: intervals[0].0,
                    b: intervals[0].1,
                },
            ),
            (
                0.5,
                Component::ChebyshevU {
                    a: intervals[1].0,
                    b: intervals[1].1,
                },
            ),
        ])
        .unwrap();
        let m = 12;
        let rule = measure_gauss_rule(&mu, m).unwrap();
        for i in 0..2 * m {
            let quad: f64 = rule
                .nodes()
                .iter()
                .zip(rule.weights())
                .map(|(x, w)| w * x.powi(i as i32))
                .sum();
            let exact: f64 = intervals
                .iter()
                .map(|&(a, b)| 0.5 * u_moment(i, a, b))
                .sum();
            assert!((quad - exact).abs() < 1e-10, "i={i}: {quad} vs {exact}");
        }
        let rule8 = measure_gauss_rule(&mu, 8).unwrap();
        for x in rule8.nodes() {
            assert!(
                intervals.iter().any(|&(a, b)| *x >= a && *x <= b),
                "node {x} in gap"
            );
        }
    }

    #[test]
    fn single_u_component_matches_closed_form() {
        let mix = mixture_measure(vec![(1.0, Component::ChebyshevU { a: -0.5, b: 2.0 })]).unwrap();
        let j = mix.jacobi(15).unwrap();
        let exact = chebyshev_u_jacobi(-0.5, 2.0, 15).unwrap();
        for i in 0..15 {
            assert!((j.alphas()[i] - exact.alphas()[i]).abs() < 1e-12);
            assert!((j.betas()[i] - exact.betas()[i]).abs() < 1e-12);
        }
        // cached larger order, then a smaller request
        let j40 = mix.jacobi(40).unwrap();
        assert_eq!(j40.order(), 40);
        assert_eq!(mix.jacobi(5).unwrap().alphas(), &j40.alphas()[..5]);
    }

    #[test]
    fn atom_mixture_cdf_and_cap() {
        let mix = mixture_measure(vec![
            (0.7, Component::ChebyshevU { a: 0.0, b: 1.0 }),
            (0.3, Component::Atom { z: 2.0 }),
        ])
        .unwrap();
        assert!((mix.cdf(2.0 - 1e-12) - 0.7).abs() < 1e-12);
        assert!((mix.cdf(2.0) - 1.0).abs() < 1e-12);
        assert_eq!(mix.density(1.5).unwrap(), 0.0);
        assert!(mix.density(2.5).is_err());

        let atoms = mixture_measure(vec![
            (0.5, Component::Atom { z: 0.0 }),
            (0.5, Component::Atom { z: 1.0 }),
        ])
        .unwrap();
        assert_eq!(atoms.max_order(), Some(2));
        assert!(atoms.jacobi(3).is_err());
        let j = atoms.jacobi(2).unwrap();
        assert!(!j.is_extended());
        assert!(measure_gauss_rule(&atoms, 2).is_ok());
        assert!(measure_gauss_rule(&atoms, 3).is_err());

        assert!(mixture_measure(vec![
            (0.5, Component::ChebyshevU { a: 0.0, b: 1.0 }),
            (0.5, Component::ChebyshevU { a: 0.5, b: 2.0 })
        ])
        .is_err());
        assert!(mixture_measure(vec![(0.6, Component::Atom { z: 0.0 })]).is_err());
        assert!(mixture_measure(vec![
            (0.5, Component::Atom { z: 1.0 }),
            (0.5, Component::Atom { z: 1.0 })
        ])
        .is_err());
        // an atom inside an interval is allowed
        let spike = mixture_measure(vec![
            (0.8, Component::ChebyshevU { a: 0.0, b: 2.0 }),
            (0.2, Component::Atom { z: 1.5 }),
        ])
        .unwrap();
        let rule = measure_gauss_rule(&spike, 12).unwrap();
        assert!((rule.integrate(|x| x * x) - (0.8 * 1.25 + 0.2 * 2.25)).abs() < 1e-12);
        assert!(spike.cdf(1.5) - spike.cdf(1.5 - 1e-12) > 0.19);
    }

    #[test]
    fn reference_densities() {
        let t = ReferenceMeasure::chebyshev_t(-1.0, 1.0).unwrap();
        assert!((t.density(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
        let u = ReferenceMeasure::chebyshev_u(-1.0, 1.0).unwrap();
        assert!((u.density(0.0).unwrap() - 2.0 / PI).abs() < 1e-15);
        assert!(t.density(1.0).is_err());
        for x in [-0.9f64, -0.3, 0.2, 0.8] {
            // y = cos θ: density(y) dy = density(cos θ) sin θ dθ
            let cdf_num = simpson(
                &|t: f64| u.density(t.cos()).unwrap_or(0.0) * t.sin(),
                x.acos(),
                PI,
                20_000,
            );
            assert!((u.cdf(x) - cdf_num).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_integrals_match_oracle() {
        for comp in [
            Component::ChebyshevT { a: -1.0, b: 3.0 },
            Component::ChebyshevU { a: -1.0, b: 3.0 },
        ] {
            let j = comp.jacobi(8).unwrap();
            let (a, b) = comp.hull();
            let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
            for x in [-0.7, 0.4, 1.0, 2.9] {
                let got = comp.partial_integrals(x, 7);
                let phi = ((x - mid) / half).acos();
                for i in 0..8 {
                    // substitute x = mid + half cos θ, θ from φ to π
                    let weight = |t: f64| match comp {
                        Component::ChebyshevT { .. } => 1.0 / PI,
                        _ => 2.0 / PI * t.sin().powi(2),
                    };
                    let oracle = simpson(
                        &|t: f64| {
                            weight(t) * orthopoly_eval(&j, mid + half * t.cos(), 7).unwrap()[i]
                        },
                        phi,
                        PI,
                        20_000,
                    );
                    assert!(
                        (got[i] - oracle).abs() < 1e-12,
                        "{comp:?} x={x} i={i}: {} vs {oracle}",
                        got[i]
                    );
                }
            }
        }
    }

    proptest! {
        #[test]
        fn moment_transport(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let atoms = 30;
            let nodes: Vec<f64> = (0..atoms).map(|_| rng.random_range(-0.9..0.9)).collect();
            let mut w: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            let s = 10;
            let mu = chebyshev_u_jacobi(-1.0, 1.0, s).unwrap();
            let nu = chebyshev_t_jacobi(-1.5, 1.2, s + 1).unwrap();
            let moments = |j: &JacobiMatrix| -> Vec<f64> {
                let mut m = vec![0.0; s + 1];
                for (x, wt) in nodes.iter().zip(&w) {
                    for (mi, p) in m.iter_mut().zip(orthopoly_eval(j, *x, s).unwrap()) {
                        *mi += wt * p;
                    }
                }
                m
            };
            let direct = moments(&mu);
            let c = connection_coefficients(&mu, &nu, s).unwrap();
            let moved = c.transport(&moments(&nu)).unwrap();
            for (d, m) in direct.iter().zip(&moved) {
                prop_assert!((d - m).abs() <= 1e-10 * d.abs().max(1.0), "{} vs {}", d, m);
            }
        }
    }
}
