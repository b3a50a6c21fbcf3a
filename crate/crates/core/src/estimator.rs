//! The randomized driver: sample unit vectors, build a per-sample approximation of the
//! weighted spectral measure, average, and evaluate spectral sums. Also the a priori
//! probability and degree bounds.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::measures::DistributionFunction;
use crate::measures::{Approximation, DiscreteDistribution, SeriesDistribution};
use crate::moments::{
    lanczos, modified_moments, moments_from_cheb, moments_from_jacobi, ModifiedMoments,
};
use crate::operators::LinearOperator;
use crate::orthopoly::{measure_gauss_rule, ReferenceMeasure};
use crate::quadrature::{
    apply_damping, default_aaq_nodes, gaussian_quadrature, jackson_coefficients,
    quad_by_approximation, NodeBasis,
};

/// Scalar function lifted to `tr f(A)`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Identity,
    Inverse,
    Log,
    Abs,
    /// `exp(-βx)`
    ExpNeg(f64),
    /// `(βx)² exp(-βx)`
    X2ExpNeg(f64),
    /// `1 / (1 + 16x²)`
    Runge,
    /// Coefficients in increasing degree.
    Poly(Vec<f64>),
    /// `1[x ≤ t]`
    Step(f64),
}

impl FunctionSpec {
    pub fn eval(&self, x: f64) -> Result<f64> {
        let domain = || Error::Domain {
            name: self.to_string(),
            x,
        };
        Ok(match self {
            Self::Identity => x,
            Self::Inverse => {
                if x == 0.0 {
                    return Err(domain());
                }
                1.0 / x
            }
            Self::Log => {
                if !(x > 0.0) {
                    return Err(domain());
                }
                x.ln()
            }
            Self::Abs => x.abs(),
            Self::ExpNeg(b) => (-b * x).exp(),
            Self::X2ExpNeg(b) => (b * x).powi(2) * (-b * x).exp(),
            Self::Runge => 1.0 / (1.0 + 16.0 * x * x),
            Self::Poly(c) => c.iter().rev().fold(0.0, |acc, ci| acc * x + ci),
            Self::Step(t) => {
                if x <= *t {
                    1.0
                } else {
                    0.0
                }
            }
        })
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => write!(f, "identity"),
            Self::Inverse => write!(f, "inverse"),
            Self::Log => write!(f, "log"),
            Self::Abs => write!(f, "abs"),
            Self::ExpNeg(b) => write!(f, "exp_neg({b})"),
            Self::X2ExpNeg(b) => write!(f, "x2_exp_neg({b})"),
            Self::Runge => write!(f, "runge"),
            Self::Poly(c) => {
                let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
                write!(f, "poly({})", parts.join(","))
            }
            Self::Step(t) => write!(f, "step({t})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Lanczos + Gaussian quadrature.
    Slq,
    /// Quadrature by interpolation.
    Iq,
    /// Quadrature by approximation (series density).
    Aq,
    /// The series integrated by a Gauss rule of the reference measure.
    Aaq,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Slq => "slq",
            Self::Iq => "iq",
            Self::Aq => "aq",
            Self::Aaq => "aaq",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentPath {
    /// Chebyshev doubling, transported by connection coefficients when needed.
    Chebyshev,
    /// Lanczos with connection coefficients.
    Lanczos,
    /// The three-term recurrence of the reference measure applied to `A`.
    Direct,
}

impl fmt::Display for MomentPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Chebyshev => "chebyshev",
            Self::Lanczos => "lanczos",
            Self::Direct => "direct",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntervalPolicy {
    /// One Lanczos probe of `probe_k` steps (default `min(2k, 30)`), widened by `margin`
    /// times its width and joined with `include` if given.
    Auto {
        probe_k: Option<usize>,
        margin: f64,
        include: Option<(f64, f64)>,
    },
    Fixed(f64, f64),
}

impl Default for IntervalPolicy {
    fn default() -> Self {
        Self::Auto {
            probe_k: None,
            margin: 0.01,
            include: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateConfig {
    pub method: Method,
    pub damping: bool,
    /// Matrix-vector products per sample.
    pub k: usize,
    /// Moment degree; defaults to `2k`.
    pub s: Option<usize>,
    pub n_v: usize,
    /// Reference measure; defaults to `μ^T` on the resolved interval.
    pub measure: Option<ReferenceMeasure>,
    pub interval: IntervalPolicy,
    pub seed: u64,
    pub reorth: bool,
    pub moment_path: MomentPath,
    /// Gauss-rule size for aaq and series integrals; defaults to `8(s+1)`.
    pub aaq_nodes: Option<usize>,
    pub functions: Vec<FunctionSpec>,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            method: Method::Slq,
            damping: false,
            k: 20,
            s: None,
            n_v: 10,
            measure: None,
            interval: IntervalPolicy::default(),
            seed: 0,
            reorth: false,
            moment_path: MomentPath::Chebyshev,
            aaq_nodes: None,
            functions: Vec::new(),
        }
    }
}

impl EstimateConfig {
    pub fn degree(&self) -> usize {
        self.s.unwrap_or(2 * self.k)
    }

    pub fn nodes(&self) -> usize {
        self.aaq_nodes
            .unwrap_or_else(|| default_aaq_nodes(self.degree()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k must be >= 1"));
        }
        if self.n_v == 0 {
            return Err(invalid("n_v must be >= 1"));
        }
        if self.degree() > 2 * self.k {
            return Err(invalid(format!(
                "moment degree s = {} exceeds 2k = {}",
                self.degree(),
                2 * self.k
            )));
        }
        if self.method == Method::Slq && self.damping {
            return Err(invalid("damping applies to iq, aq and aaq, not slq"));
        }
        if self.aaq_nodes == Some(0) {
            return Err(invalid("aaq node count must be >= 1"));
        }
        if let IntervalPolicy::Fixed(a, b) = self.interval {
            crate::tridiag::check_interval(a, b)?;
        }
        if let IntervalPolicy::Auto {
            probe_k: Some(p),
            margin,
            ..
        } = self.interval
        {
            if p < 2 {
                return Err(invalid("interval probe needs at least 2 steps"));
            }
            if !(margin >= 0.0) {
                return Err(invalid("interval margin must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// A spectral sum evaluated on the average and on each sample.
#[derive(Debug, Clone)]
pub struct SumRecord {
    pub function: FunctionSpec,
    /// Estimate of `tr f(A)`.
    pub trace: f64,
    /// `n ∫ f dΥ_ℓ` per sample.
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub config: EstimateConfig,
    pub dim: usize,
    /// Interval used for the reference measure and Chebyshev moments (none for slq).
    pub interval: Option<(f64, f64)>,
    pub measure: Option<ReferenceMeasure>,
    pub samples: Vec<Approximation>,
    /// Per sample: Lanczos found an invariant subspace.
    pub breakdowns: Vec<bool>,
    pub average: Approximation,
    pub sums: Vec<SumRecord>,
    /// aaq used fewer Gauss nodes than moments.
    pub aaq_truncated: bool,
    pub timing_ms: Option<f64>,
}

/// Stream of the interval probe, disjoint from all sample streams.
const PROBE_STREAM: u64 = u64::MAX;

/// Uniform vector on the unit sphere, determined by `(seed, stream)`.
pub fn sample_unit_sphere(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
            return v;
        }
    }
}

/// Extreme Ritz values of one Lanczos probe, widened by `margin` times their spread.
pub fn estimate_interval(
    a: &dyn LinearOperator,
    probe_k: usize,
    margin: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    if probe_k < 2 {
        return Err(invalid("interval probe needs at least 2 steps"));
    }
    let v = sample_unit_sphere(a.dim(), seed, PROBE_STREAM);
    let out = lanczos(a, &v, probe_k, true)?;
    let rule = gaussian_quadrature(&out.jacobi)?;
    let (lo, hi) = (rule.nodes()[0], *rule.nodes().last().unwrap());
    if rule.len() < 2 || hi == lo {
        let eps = f64::EPSILON.sqrt() * lo.abs().max(1.0);
        return Ok((lo - eps, hi + eps));
    }
    let w = hi - lo;
    Ok((lo - margin * w, hi + margin * w))
}

fn resolve_interval(a: &dyn LinearOperator, cfg: &EstimateConfig) -> Result<(f64, f64)> {
    match cfg.interval {
        IntervalPolicy::Fixed(lo, hi) => Ok((lo, hi)),
        IntervalPolicy::Auto {
            probe_k,
            margin,
            include,
        } => {
            let p = probe_k.unwrap_or_else(|| (2 * cfg.k).min(30)).max(2);
            let (mut lo, mut hi) = estimate_interval(a, p, margin, cfg.seed)?;
            if let Some((x, y)) = include {
                lo = lo.min(x);
                hi = hi.max(y);
            }
            Ok((lo, hi))
        }
    }
}

enum Backend {
    Gauss,
    Nodes(NodeBasis),
    Series,
}

struct Plan<'a> {
    cfg: &'a EstimateConfig,
    interval: (f64, f64),
    measure: ReferenceMeasure,
    rho: Option<Vec<f64>>,
    backend: Backend,
}

impl Plan<'_> {
    fn moments(&self, a: &dyn LinearOperator, v: &[f64]) -> Result<(ModifiedMoments, bool)> {
        let s = self.cfg.degree();
        let (lo, hi) = self.interval;
        Ok(match self.cfg.moment_path {
            MomentPath::Chebyshev => (moments_from_cheb(a, v, s, &self.measure, lo, hi)?, false),
            MomentPath::Lanczos => {
                let k = s.div_ceil(2).max(1);
                let out = lanczos(a, v, k, self.cfg.reorth)?;
                let broke = out.breakdown && out.jacobi.order() < k;
                (moments_from_jacobi(&out, s, &self.measure)?, broke)
            }
            MomentPath::Direct => (modified_moments(a, v, s, &self.measure)?, false),
        })
    }

    fn sample(&self, a: &dyn LinearOperator, l: usize) -> Result<(Approximation, bool)> {
        let v = sample_unit_sphere(a.dim(), self.cfg.seed, l as u64);
        if let Backend::Gauss = self.backend {
            let out = lanczos(a, &v, self.cfg.k, self.cfg.reorth)?;
            let broke = out.breakdown && out.jacobi.order() < self.cfg.k;
            return Ok((
                Approximation::Discrete(gaussian_quadrature(&out.jacobi)?),
                broke,
            ));
        }
        let (mut m, broke) = self.moments(a, &v)?;
        if let Some(rho) = &self.rho {
            m = apply_damping(&m, rho)?;
        }
        let approx = match &self.backend {
            Backend::Nodes(basis) => Approximation::Discrete(basis.rule(&m)?),
            Backend::Series => Approximation::Series(quad_by_approximation(&m)?),
            Backend::Gauss => unreachable!(),
        };
        Ok((approx, broke))
    }
}

/// Runs the randomized estimator.
pub fn estimate_spectrum(a: &dyn LinearOperator, cfg: &EstimateConfig) -> Result<EstimateReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = a.dim();
    let s = cfg.degree();

    let plan = if cfg.method == Method::Slq {
        None
    } else {
        let interval = resolve_interval(a, cfg)?;
        let measure = match &cfg.measure {
            Some(m) => m.clone(),
            None => ReferenceMeasure::chebyshev_t(interval.0, interval.1)?,
        };
        let backend = match cfg.method {
            Method::Iq => Backend::Nodes(NodeBasis::new(&measure, s + 1)?),
            Method::Aaq => Backend::Nodes(NodeBasis::new(&measure, cfg.nodes())?),
            _ => Backend::Series,
        };
        let rho = cfg.damping.then(|| jackson_coefficients(s));
        Some(Plan {
            cfg,
            interval,
            measure,
            rho,
            backend,
        })
    };
    let gauss_plan = Plan {
        cfg,
        interval: (0.0, 1.0),
        measure: ReferenceMeasure::ChebyshevT { a: 0.0, b: 1.0 },
        rho: None,
        backend: Backend::Gauss,
    };
    let active = plan.as_ref().unwrap_or(&gauss_plan);

    let outcomes: Vec<Result<(Approximation, bool)>> = (0..cfg.n_v)
        .into_par_iter()
        .map(|l| active.sample(a, l))
        .collect();
    let mut samples = Vec::with_capacity(cfg.n_v);
    let mut breakdowns = Vec::with_capacity(cfg.n_v);
    for o in outcomes {
        let (approx, broke) = o?;
        samples.push(approx);
        breakdowns.push(broke);
    }

    let average = average_of(&samples)?;
    let nodes = cfg.nodes();
    let mut sums = Vec::new();
    for f in &cfg.functions {
        let per: Vec<f64> = samples
            .iter()
            .map(|x| spectral_sum_with(x, f, nodes).map(|v| n as f64 * v))
            .collect::<Result<_>>()?;
        let trace = n as f64 * spectral_sum_with(&average, f, nodes)?;
        sums.push(SumRecord {
            function: f.clone(),
            trace,
            samples: per,
        });
    }

    Ok(EstimateReport {
        config: cfg.clone(),
        dim: n,
        interval: plan.as_ref().map(|p| p.interval),
        measure: plan.as_ref().map(|p| p.measure.clone()),
        samples,
        breakdowns,
        average,
        sums,
        aaq_truncated: cfg.method == Method::Aaq && nodes < s + 1,
        timing_ms: Some(start.elapsed().as_secs_f64() * 1e3),
    })
}

/// `(1/n_v) Σ Υ_ℓ`.
pub fn average_of(samples: &[Approximation]) -> Result<Approximation> {
    let first = samples
        .first()
        .ok_or_else(|| invalid("no samples to average"))?;
    let c = 1.0 / samples.len() as f64;
    match first {
        Approximation::Discrete(_) => {
            let parts: Vec<(f64, &DiscreteDistribution)> = samples
                .iter()
                .map(|x| {
                    x.as_discrete()
                        .map(|d| (c, d))
                        .ok_or_else(|| invalid("mixed sample kinds"))
                })
                .collect::<Result<_>>()?;
            Ok(Approximation::Discrete(DiscreteDistribution::combine(
                &parts,
            )?))
        }
        Approximation::Series(s0) => {
            let mut coeffs = vec![0.0; s0.coeffs().len()];
            for x in samples {
                let s = x.as_series().ok_or_else(|| invalid("mixed sample kinds"))?;
                for (a, b) in coeffs.iter_mut().zip(s.coeffs()) {
                    *a += c * b;
                }
            }
            Ok(Approximation::Series(SeriesDistribution::new(
                s0.measure().clone(),
                coeffs,
            )?))
        }
    }
}

/// `∫ f dΥ`. Series use the default aaq Gauss rule of `8(s+1)` nodes.
pub fn spectral_sum(approx: &Approximation, f: &FunctionSpec) -> Result<f64> {
    let nodes = match approx {
        Approximation::Series(s) => default_aaq_nodes(s.degree()),
        Approximation::Discrete(_) => 0,
    };
    spectral_sum_with(approx, f, nodes)
}

pub fn spectral_sum_with(approx: &Approximation, f: &FunctionSpec, nodes: usize) -> Result<f64> {
    match approx {
        Approximation::Discrete(d) => {
            let mut total = 0.0;
            for (x, w) in d.nodes().iter().zip(d.weights()) {
                total += w * f.eval(*x)?;
            }
            Ok(total)
        }
        Approximation::Series(s) => {
            let rule = measure_gauss_rule(s.measure(), nodes)?;
            for x in rule.nodes() {
                f.eval(*x)?;
            }
            s.integrate(|x| f.eval(x).unwrap_or(f64::NAN), nodes)
        }
    }
}

/// `C/k_B` at each temperature from one approximation of the spectral measure. The
/// energy is shifted by `shift` (typically the bottom of the spectrum) before
/// exponentiating, which cancels in every ratio.
pub fn heat_capacity_from(
    approx: &Approximation,
    temps: &[f64],
    shift: f64,
    nodes: usize,
) -> Result<Vec<f64>> {
    temps
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return Err(invalid(format!("temperature must be positive, got {t}")));
            }
            let beta = 1.0 / t;
            let y = |x: f64| beta * (x - shift);
            let e0 = approx.integrate(|x| (-y(x)).exp(), nodes)?;
            let e1 = approx.integrate(|x| y(x) * (-y(x)).exp(), nodes)?;
            let e2 = approx.integrate(|x| y(x).powi(2) * (-y(x)).exp(), nodes)?;
            if beta == 0.0 {
                return Ok(0.0);
            }
            Ok(e2 / e0 - (e1 / e0).powi(2))
        })
        .collect()
}

/// Heat capacity curve of `H` with all traces taken from the same sampled approximations.
pub fn heat_capacity(
    h: &dyn LinearOperator,
    temps: &[f64],
    cfg: &EstimateConfig,
) -> Result<Vec<f64>> {
    let report = estimate_spectrum(h, cfg)?;
    let shift = match (&report.average, report.interval) {
        (_, Some((lo, _))) => lo,
        (Approximation::Discrete(d), None) => d.nodes().first().copied().unwrap_or(0.0),
        (Approximation::Series(s), None) => s.measure().support().0,
    };
    heat_capacity_from(&report.average, temps, shift, cfg.nodes())
}

/// Tail bound for the averaged weighted CESM at a point (`pointwise`) or uniformly in `x`.
pub fn bound_cesm_tail(n: usize, n_v: usize, eps: f64, pointwise: bool) -> f64 {
    let p = 2.0 * (-(n_v as f64) * (n as f64 + 2.0) * eps * eps).exp();
    if pointwise {
        p
    } else {
        n as f64 * p
    }
}

/// Tail bound for `|n⁻¹ tr f(A) - ⟨∫ f dΨ_ℓ⟩| > ε`, uncapped.
pub fn bound_trace_tail(n: usize, n_v: usize, eps: f64, f_min: f64, f_max: f64) -> f64 {
    let range = f_max - f_min;
    2.0 * n as f64 * (-(n_v as f64) * (n as f64 + 2.0) * eps * eps / (range * range)).exp()
}

pub fn bound_trace_tail_capped(n: usize, n_v: usize, eps: f64, f_min: f64, f_max: f64) -> f64 {
    bound_trace_tail(n, n_v, eps, f_min, f_max).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Gauss,
    Interpolation,
    Approximation,
    Damped,
}

impl std::str::FromStr for BoundMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "gq" | "slq" | "gauss" => Ok(Self::Gauss),
            "i" | "iq" => Ok(Self::Interpolation),
            "a" | "aq" | "aaq" | "kpm" => Ok(Self::Approximation),
            "damped" | "jackson" => Ok(Self::Damped),
            other => Err(invalid(format!("unknown bound method `{other}`"))),
        }
    }
}

/// Smallest degree `s` for which the Wasserstein bound reaches `eps`, given the
/// reference interval `[a, b]`, the spectral range and (for iq/aq) the total variation of
/// the output.
pub fn bound_required_degree_wasserstein(
    method: BoundMethod,
    eps: f64,
    interval: (f64, f64),
    lambda_range: (f64, f64),
    d_tv: f64,
) -> Result<u64> {
    if !(eps > 0.0) {
        return Err(invalid("eps must be positive"));
    }
    let spread = lambda_range.1 - lambda_range.0;
    let pi = std::f64::consts::PI;
    let raw = match method {
        BoundMethod::Gauss => -1.0 + 2.0 * pi * spread / eps,
        BoundMethod::Interpolation | BoundMethod::Approximation => {
            -1.0 + pi * (1.0 + d_tv) * spread / eps
        }
        BoundMethod::Damped => -2.0 + pi * pi * (interval.1 - interval.0) / eps,
    };
    // absorb rounding in the closed forms before taking the ceiling
    let nearest = raw.round();
    let s = if (raw - nearest).abs() <= 1e-9 * raw.abs().max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    Ok(s.max(0.0) as u64)
}
