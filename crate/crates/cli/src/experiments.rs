//! Desk-scale presets of the standard experiments. Each writes one `x,value` CSV per curve.

use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use nalgebra::{DMatrix, SymmetricEigen};

use specquad::estimator::{
    estimate_interval, estimate_spectrum, heat_capacity_from, EstimateConfig, FunctionSpec,
    IntervalPolicy, Method,
};
use specquad::measures::{DiscreteDistribution, SeriesDistribution};
use specquad::moments::{chebyshev_moments, lanczos, moments_from_cheb, moments_from_lanczos};
use specquad::operators::{scale_shift, to_dense, LinearOperator};
use specquad::orthopoly::{mixture_measure, Component};
use specquad::problems::{
    gapped_spectrum, heisenberg_ring, kneser_adjacency, kneser_spectrum, model_problem, mp_edges,
    sample_covariance, spiked_covariance, uniform_spectrum,
};
use specquad::quadrature::{
    approx_quad_by_approximation, default_aaq_nodes, gaussian_quadrature, quad_by_interpolation,
};
use specquad::{Approximation, ReferenceMeasure};

use crate::{grid_points, sample_series, save_csv};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Error vs k for gq/iq/aaq on uniform and gapped spectra, f = 1/(1+16x²).
    Runge,
    /// Error vs k with and without reorthogonalization on the model problem, f = 1/x.
    FinitePrecision,
    /// Exact spectrum vs gq with k = K+1 vs damped aq with s = 500 on a Kneser graph.
    Kneser,
    /// Sample covariance density with one- and two-interval Chebyshev-U measures.
    Sampcov,
    /// Spiked covariance density with and without an atom in the measure.
    Spiked,
    /// Heat capacity of the spin-1/2 Heisenberg ring: exact, gq, iq and damped iq.
    HeatCapacity,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    name: Preset,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the preset's matrix dimension (runge, finite-precision, sampcov, spiked).
    #[arg(long)]
    size: Option<usize>,
    /// Override the number of resampled matrices (sampcov, spiked).
    #[arg(long)]
    trials: Option<usize>,
    /// Heat capacity on 12 sites with k = 50, n_v = 300 instead of 8 sites.
    #[arg(long)]
    large: bool,
}

pub fn run(args: &ExperimentArgs) -> Result<()> {
    let out = args.out.as_path();
    match args.name {
        Preset::Runge => runge(out, args.size.unwrap_or(10_000)),
        Preset::FinitePrecision => finite_precision(out, args.size.unwrap_or(300)),
        Preset::Kneser => kneser(out, args.seed),
        Preset::Sampcov => sampcov(
            out,
            args.size.unwrap_or(2000),
            args.trials.unwrap_or(10),
            args.seed,
        ),
        Preset::Spiked => spiked(
            out,
            args.size.unwrap_or(10_000),
            args.trials.unwrap_or(10),
            args.seed,
        ),
        Preset::HeatCapacity => heat(out, args.large, args.seed),
    }
}

/// Matrix seed for trial `t`, kept apart from the vector seed of the same trial.
fn trial_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(6_364_136_223_846_793_005)
        .wrapping_add(1_442_695_040_888_963_407 + t as u64)
}

fn flat(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}

/// Errors of gq (k nodes), iq and aaq (degree 2k) for `vᵀ f(A) v`, k = 1..=kmax.
fn quadrature_errors(
    a: &dyn LinearOperator,
    v: &[f64],
    f: &FunctionSpec,
    exact: f64,
    (lo, hi): (f64, f64),
    kmax: usize,
    reorth_variants: &[bool],
) -> Result<Vec<(String, Vec<(f64, f64)>)>> {
    let eval = |x: f64| f.eval(x).unwrap_or(f64::NAN);
    let err = |x: f64| ((x - exact) / exact).abs();
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for &reorth in reorth_variants {
        let mut pts = Vec::new();
        for k in 1..=kmax {
            let rule = gaussian_quadrature(&lanczos(a, v, k, reorth)?.jacobi)?;
            pts.push((k as f64, err(rule.integrate(eval))));
        }
        let name = if reorth_variants.len() > 1 && !reorth {
            "gq_plain"
        } else {
            "gq"
        };
        curves.push((name.to_string(), pts));
    }
    let full = chebyshev_moments(a, v, kmax, lo, hi)?;
    let (mut iq, mut aaq) = (Vec::new(), Vec::new());
    for k in 1..=kmax {
        let m = full.truncated(2 * k)?;
        iq.push((k as f64, err(quad_by_interpolation(&m)?.integrate(eval))));
        let nodes = default_aaq_nodes(2 * k).max(512);
        aaq.push((
            k as f64,
            err(approx_quad_by_approximation(&m, nodes)?
                .rule
                .integrate(eval)),
        ));
    }
    curves.push(("iq".into(), iq));
    curves.push(("aaq".into(), aaq));
    Ok(curves)
}

fn runge(out: &Path, n: usize) -> Result<()> {
    let f = FunctionSpec::Runge;
    for (label, a) in [
        ("uniform", uniform_spectrum(n)?),
        ("gapped", gapped_spectrum(n)?),
    ] {
        let v = flat(a.dim());
        let exact = a
            .diagonal()
            .iter()
            .map(|x| f.eval(*x).unwrap())
            .sum::<f64>()
            / a.dim() as f64;
        for (curve, pts) in quadrature_errors(&a, &v, &f, exact, (-1.0, 1.0), 30, &[true])? {
            save_csv(
                out,
                &format!("runge_{label}_{curve}.csv"),
                ("k", "relative_error"),
                pts,
            )?;
        }
    }
    println!("runge curves written to {}", out.display());
    Ok(())
}

fn finite_precision(out: &Path, n: usize) -> Result<()> {
    let kappa = 1e3;
    let a = scale_shift(model_problem(n, kappa, 0.85)?, 1.0 / kappa, 0.0)?;
    let eigs = a.exact_spectrum().map(<[f64]>::to_vec).unwrap_or_default();
    let (lo, hi) = (eigs[0], eigs[eigs.len() - 1]);
    let v = flat(n);
    let f = FunctionSpec::Inverse;
    let exact = eigs.iter().map(|x| 1.0 / x).sum::<f64>() / n as f64;
    let kmax = 60.min(n);
    for (curve, pts) in quadrature_errors(&a, &v, &f, exact, (lo, hi), kmax, &[true, false])? {
        save_csv(
            out,
            &format!("finite_precision_{curve}.csv"),
            ("k", "relative_error"),
            pts,
        )?;
    }
    // both moment paths against μ^T on the exact extremes
    let k = 30.min(n);
    let mu = ReferenceMeasure::chebyshev_t(lo, hi)?;
    let cheb = moments_from_cheb(&a, &v, 2 * k, &mu, lo, hi)?;
    let lz = moments_from_lanczos(&a, &v, 2 * k, &mu, false)?;
    let diff = cheb
        .values
        .iter()
        .zip(&lz.values)
        .enumerate()
        .map(|(i, (x, y))| (i as f64, (x - y).abs()))
        .collect();
    save_csv(
        out,
        "finite_precision_moment_paths.csv",
        ("degree", "abs_difference"),
        diff,
    )?;
    println!("finite-precision curves written to {}", out.display());
    Ok(())
}

fn discrete_rows(d: &DiscreteDistribution) -> Vec<(f64, f64)> {
    d.nodes()
        .iter()
        .copied()
        .zip(d.weights().iter().copied())
        .collect()
}

fn kneser(out: &Path, seed: u64) -> Result<()> {
    let (nn, kk) = (10, 4);
    let a = kneser_adjacency(nn, kk)?;
    let n = a.dim() as f64;
    let (eigs, mult) = kneser_spectrum(nn, kk)?;
    let exact = DiscreteDistribution::new(
        eigs.iter().map(|&e| e as f64).collect(),
        mult.iter().map(|&m| m as f64 / n).collect(),
    )?;
    save_csv(
        out,
        "kneser_exact.csv",
        ("theta", "omega"),
        discrete_rows(&exact),
    )?;

    let gq = estimate_spectrum(
        &a,
        &EstimateConfig {
            k: kk + 1,
            n_v: 1,
            reorth: true,
            seed,
            ..Default::default()
        },
    )?;
    if let Approximation::Discrete(d) = &gq.average {
        save_csv(out, "kneser_gq.csv", ("theta", "omega"), discrete_rows(d))?;
    }

    let (lo, hi) = exact
        .nodes()
        .first()
        .zip(exact.nodes().last())
        .map(|(a, b)| (*a, *b))
        .unwrap();
    let cfg = EstimateConfig {
        method: Method::Aq,
        damping: true,
        k: 250,
        s: Some(500),
        n_v: 1,
        interval: IntervalPolicy::Fixed(lo - 0.1, hi + 0.1),
        seed,
        ..Default::default()
    };
    let damped = estimate_spectrum(&a, &cfg)?;
    if let Approximation::Series(s) = &damped.average {
        let (density, cdf) = sample_series(s, 2000)?;
        save_csv(out, "kneser_damped_density.csv", ("x", "value"), density)?;
        save_csv(out, "kneser_damped_cdf.csv", ("x", "value"), cdf)?;
    }
    println!("kneser tables written to {}", out.display());
    Ok(())
}

/// Degree-`s` aq series for each measure, averaged over the given matrices with one
/// vector per matrix.
fn averaged_series<A: LinearOperator>(
    matrices: impl Iterator<Item = Result<A>>,
    measures: &[&ReferenceMeasure],
    s: usize,
    seed: u64,
) -> Result<Vec<SeriesDistribution>> {
    let mut sums = vec![vec![0.0; s + 1]; measures.len()];
    let mut trials = 0usize;
    for (t, a) in matrices.enumerate() {
        let a = a?;
        for (mu, acc) in measures.iter().zip(sums.iter_mut()) {
            let (lo, hi) = mu.support();
            let cfg = EstimateConfig {
                method: Method::Aq,
                k: s.div_ceil(2),
                s: Some(s),
                n_v: 1,
                measure: Some((*mu).clone()),
                interval: IntervalPolicy::Fixed(lo, hi),
                seed: seed.wrapping_add(t as u64),
                ..Default::default()
            };
            let rep = estimate_spectrum(&a, &cfg)?;
            let series = rep.average.as_series().expect("aq returns a series");
            for (c, x) in acc.iter_mut().zip(series.coeffs()) {
                *c += x;
            }
        }
        trials += 1;
    }
    if trials == 0 {
        bail!("at least one trial is needed");
    }
    measures
        .iter()
        .zip(sums)
        .map(|(mu, acc)| {
            Ok(SeriesDistribution::new(
                (*mu).clone(),
                acc.iter().map(|c| c / trials as f64).collect(),
            )?)
        })
        .collect()
}

fn density_on(s: &SeriesDistribution, lo: f64, hi: f64, grid: usize) -> Result<Vec<(f64, f64)>> {
    grid_points(lo, hi, grid)
        .map(|x| Ok((x, s.density(x)?)))
        .collect()
}

fn sampcov(out: &Path, n: usize, trials: usize, seed: u64) -> Result<()> {
    let (d, sigma, s, widen) = (0.3, 8.0, 60, 1e-3);
    let (a1, b1, a2, b2) = mp_edges(d, sigma)?;
    let (lo, hi) = (a1 - widen, b2 + widen);
    let one = ReferenceMeasure::chebyshev_u(lo, hi)?;
    let two = mixture_measure(vec![
        (
            0.5,
            Component::ChebyshevU {
                a: a1 - widen,
                b: b1 + widen,
            },
        ),
        (
            0.5,
            Component::ChebyshevU {
                a: a2 - widen,
                b: b2 + widen,
            },
        ),
    ])?;
    let matrices = (0..trials).map(|t| Ok(sample_covariance(n, d, sigma, trial_seed(seed, t))?));
    let series = averaged_series(matrices, &[&one, &two], s, seed)?;
    for (label, ser) in ["chebU", "mix"].iter().zip(&series) {
        save_csv(
            out,
            &format!("sampcov_{label}_density.csv"),
            ("x", "value"),
            density_on(ser, lo, hi, 2000)?,
        )?;
    }
    println!(
        "sampcov densities written to {} (edges {a1:.4}, {b1:.4}, {a2:.4}, {b2:.4})",
        out.display()
    );
    Ok(())
}

fn spiked(out: &Path, n: usize, trials: usize, seed: u64) -> Result<()> {
    let (d, z, sigma, s, p, widen) = (0.3, 1.5, 1e-10, 200, 0.2, 1e-3);
    let n_prime = n / 10;
    let (ea, eb) = ((1.0 - f64::sqrt(d)).powi(2), (1.0 + f64::sqrt(d)).powi(2));
    let matrices = (0..trials)
        .map(|t| spiked_covariance(n, n_prime, d, z, sigma, trial_seed(seed, t)))
        .collect::<Result<Vec<_>, _>>()?;
    if matrices.is_empty() {
        bail!("at least one trial is needed");
    }
    // Extreme eigenvalues of a finite bulk overshoot the limiting edges by about n'^(-2/3),
    // and a degree-s series explodes on any eigenvalue outside the support of μ.
    let (mut a, mut b) = (ea, eb);
    for (t, m) in matrices.iter().enumerate() {
        let (lo, hi) = estimate_interval(m, 60, 5e-3, seed.wrapping_add(t as u64))?;
        a = a.min(lo);
        b = b.max(hi);
    }
    let (a, b) = (a - widen, b + widen);
    let plain = ReferenceMeasure::chebyshev_u(a, b)?;
    let spike = mixture_measure(vec![
        (1.0 - p, Component::ChebyshevU { a, b }),
        (p, Component::Atom { z }),
    ])?;
    let series = averaged_series(matrices.iter().map(Ok), &[&plain, &spike], s, seed)?;
    for (label, ser) in ["chebU", "mix"].iter().zip(&series) {
        save_csv(
            out,
            &format!("spiked_{label}_density.csv"),
            ("x", "value"),
            density_on(ser, a, b, 2000)?,
        )?;
    }
    // absolutely continuous part of the limit: Marchenko–Pastur with mass n'/n
    let mass = n_prime as f64 / n as f64;
    let limit = grid_points(a, b, 2000)
        .map(|x| {
            let r = ((eb - x) * (x - ea)).max(0.0).sqrt();
            (x, mass * r / (2.0 * std::f64::consts::PI * d * x))
        })
        .collect();
    save_csv(out, "spiked_limit_density.csv", ("x", "value"), limit)?;
    println!("spiked densities written to {}", out.display());
    Ok(())
}

fn heat(out: &Path, large: bool, seed: u64) -> Result<()> {
    let (sites, k, n_v) = if large { (12, 50, 300) } else { (8, 40, 100) };
    let h = heisenberg_ring(sites, 0.5, 1.0, 1.0, 1.0)?;
    let n = h.dim();
    let eigs: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &to_dense(&h)))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    let ground = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let exact = Approximation::Discrete(DiscreteDistribution::new(eigs, vec![1.0 / n as f64; n])?);
    let temps: Vec<f64> = (0..=490).map(|i| 0.1 + 0.01 * i as f64).collect();
    let curve = |c: Vec<f64>| temps.iter().copied().zip(c).collect::<Vec<_>>();
    save_csv(
        out,
        "heat_capacity_exact.csv",
        ("T", "C"),
        curve(heat_capacity_from(&exact, &temps, ground, 0)?),
    )?;

    let gq = estimate_spectrum(
        &h,
        &EstimateConfig {
            k,
            n_v,
            seed,
            ..Default::default()
        },
    )?;
    let nodes = match &gq.average {
        Approximation::Discrete(d) => d.nodes().to_vec(),
        Approximation::Series(_) => unreachable!("slq is discrete"),
    };
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let pad = 1e-3 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    save_csv(
        out,
        "heat_capacity_gq.csv",
        ("T", "C"),
        curve(heat_capacity_from(&gq.average, &temps, lo, 0)?),
    )?;

    for (label, damping) in [("iq", false), ("damped", true)] {
        let cfg = EstimateConfig {
            method: Method::Iq,
            damping,
            k,
            n_v,
            seed,
            interval: IntervalPolicy::Fixed(lo, hi),
            ..Default::default()
        };
        let rep = estimate_spectrum(&h, &cfg)?;
        let c = heat_capacity_from(&rep.average, &temps, lo, 0)?;
        save_csv(
            out,
            &format!("heat_capacity_{label}.csv"),
            ("T", "C"),
            curve(c),
        )?;
    }
    println!(
        "heat capacity curves for {sites} sites written to {}",
        out.display()
    );
    Ok(())
}
