//! Test operators with known or computable spectra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::operators::{
    diagonal_operator, BlockDiagonal, DenseSymmetric, DiagonalOperator, LinearOperator,
    SparseSymmetric,
};

/// Vertex cap for explicit Kneser graphs.
pub const KNESER_VERTEX_CAP: usize = 1_000_000;
/// Largest dense covariance block.
pub const DENSE_CAP: usize = 4000;
/// Largest spin-chain Hilbert space.
pub const SPIN_DIM_CAP: usize = 1 << 24;

/// `λ_i = -1 + (2i+1)/n`, `i = 0..n`.
pub fn uniform_spectrum(n: usize) -> Result<DiagonalOperator> {
    if n == 0 {
        return Err(invalid("uniform spectrum needs n >= 1"));
    }
    diagonal_operator(uniform_values(n))
}

fn uniform_values(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -1.0 + (2 * i + 1) as f64 / n as f64)
        .collect()
}

/// The uniform spectrum with `(-0.75, 0.75)` removed.
pub fn gapped_spectrum(n_base: usize) -> Result<DiagonalOperator> {
    if n_base == 0 {
        return Err(invalid("gapped spectrum needs n >= 1"));
    }
    let eigs: Vec<f64> = uniform_values(n_base)
        .into_iter()
        .filter(|x| x.abs() >= 0.75)
        .collect();
    if eigs.is_empty() {
        return Err(invalid(format!("gapped({n_base}) has no eigenvalues")));
    }
    diagonal_operator(eigs)
}

/// `λ_i = 1 + ((i-1)/(n-1)) (κ-1) ρ^{n-i}`, `i = 1..=n`.
pub fn model_problem(n: usize, kappa: f64, rho: f64) -> Result<DiagonalOperator> {
    if n < 2 {
        return Err(invalid("model problem needs n >= 2"));
    }
    if !(kappa > 1.0) {
        return Err(invalid(format!(
            "model problem needs kappa > 1, got {kappa}"
        )));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(invalid(format!(
            "model problem needs 0 < rho <= 1, got {rho}"
        )));
    }
    let eigs = (1..=n)
        .map(|i| 1.0 + ((i - 1) as f64 / (n - 1) as f64) * (kappa - 1.0) * rho.powi((n - i) as i32))
        .collect();
    diagonal_operator(eigs)
}

/// Binomial coefficient, 0 outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c as u64
}

/// Distinct eigenvalues of the Kneser graph `K(N, K)` and their multiplicities.
pub fn kneser_spectrum(n: usize, k: usize) -> Result<(Vec<i64>, Vec<u64>)> {
    if n < 2 * k {
        return Err(invalid(format!(
            "Kneser graph needs N >= 2K, got N={n}, K={k}"
        )));
    }
    let (n, k) = (n as i64, k as i64);
    let eigs = (0..=k)
        .map(|i| if i % 2 == 0 { 1 } else { -1 } * binomial(n - k - i, k - i) as i64)
        .collect();
    let mult = (0..=k)
        .map(|i| binomial(n, i) - binomial(n, i - 1))
        .collect();
    Ok((eigs, mult))
}

/// Kneser spectrum expanded to one value per vertex, ascending.
pub fn kneser_eigenvalues(n: usize, k: usize) -> Result<Vec<f64>> {
    let (eigs, mult) = kneser_spectrum(n, k)?;
    let mut out: Vec<f64> = Vec::new();
    for (e, m) in eigs.iter().zip(&mult) {
        out.extend(std::iter::repeat_n(*e as f64, *m as usize));
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// All `k`-subsets of `0..n` as bitmasks, in increasing numeric order.
fn subsets(n: usize, k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(binomial(n as i64, k as i64) as usize);
    if k == 0 {
        out.push(0);
        return out;
    }
    let mut x: u64 = (1 << k) - 1;
    let limit: u64 = 1 << n;
    while x < limit {
        out.push(x);
        // next mask with the same popcount
        let c = x & x.wrapping_neg();
        let r = x + c;
        x = (((r ^ x) >> 2) / c) | r;
    }
    out
}

/// Adjacency matrix of the Kneser graph: vertices are `K`-subsets of `N` points,
/// adjacent when disjoint.
pub fn kneser_adjacency(n: usize, k: usize) -> Result<SparseSymmetric> {
    let spectrum = kneser_eigenvalues(n, k)?;
    let size = binomial(n as i64, k as i64) as usize;
    if size > KNESER_VERTEX_CAP {
        return Err(Error::TooLarge {
            what: format!("kneser({n},{k}) vertex count"),
            size,
            cap: KNESER_VERTEX_CAP,
        });
    }
    if n > 63 {
        return Err(invalid("Kneser graph needs N <= 63"));
    }
    let verts = subsets(n, k);
    let full: u64 = if n == 64 { u64::MAX } else { (1 << n) - 1 };
    let mut triplets = Vec::with_capacity(size * binomial((n - k) as i64, k as i64) as usize);
    for (i, &a) in verts.iter().enumerate() {
        let rest = full & !a;
        for_each_submask(rest, k, |b| {
            let j = verts.binary_search(&b).expect("subset is enumerated");
            triplets.push((i, j, 1.0));
        });
    }
    Ok(SparseSymmetric::from_triplets(size, &triplets)?.with_spectrum(spectrum))
}

/// Calls `f` on every `k`-element subset of the bits of `mask`.
fn for_each_submask(mask: u64, k: usize, mut f: impl FnMut(u64)) {
    let bits: Vec<u64> = (0..64)
        .filter(|b| mask >> b & 1 == 1)
        .map(|b| 1u64 << b)
        .collect();
    if k > bits.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(idx.iter().map(|&i| bits[i]).fold(0, |acc, b| acc | b));
        let mut p = k;
        while p > 0 && idx[p - 1] == bits.len() - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            return;
        }
        idx[p - 1] += 1;
        for q in p..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `(1/m) X Xᵀ` for an `n × m` standard normal `X`, accumulated in column blocks.
fn wishart(n: usize, m: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::zeros(n, n);
    let block = 512;
    let mut done = 0;
    while done < m {
        let w = block.min(m - done);
        let x = normal_matrix(n, w, rng);
        g.gemm(1.0 / m as f64, &x, &x.transpose(), 1.0);
        done += w;
    }
    g
}

fn check_dense(what: &str, n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::TooLarge {
            what: what.to_string(),
            size: n,
            cap: DENSE_CAP,
        });
    }
    Ok(())
}

/// Matrix entries come from a stream no sample vector uses, so `(seed, stream 0)` for the
/// first probe vector is independent of the matrix built from the same seed.
const MATRIX_STREAM: u64 = u64::MAX - 1;

fn matrix_rng(seed: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(MATRIX_STREAM);
    rng
}

fn ratio_columns(n: usize, d: f64) -> Result<usize> {
    if !(d > 0.0 && d < 1.0) {
        return Err(invalid(format!("aspect ratio must lie in (0, 1), got {d}")));
    }
    Ok(((n as f64) / d).round().max(1.0) as usize)
}

/// `(1/m) Σ^{1/2} X Xᵀ Σ^{1/2}` with `m = n/d` and population covariance
/// `Σ = diag(1, …, 1, σ, …, σ)` (half each).
pub fn sample_covariance(n: usize, d: f64, sigma: f64, seed: u64) -> Result<DenseSymmetric> {
    if n == 0 || n % 2 != 0 {
        return Err(invalid(format!(
            "sample covariance needs an even n >= 2, got {n}"
        )));
    }
    if !(sigma > 1.0) {
        return Err(invalid(format!(
            "sample covariance needs sigma > 1, got {sigma}"
        )));
    }
    check_dense("sample covariance dimension", n)?;
    let m = ratio_columns(n, d)?;
    let mut rng = matrix_rng(seed);
    let mut g = wishart(n, m, &mut rng);
    let root = sigma.sqrt();
    let scale = |i: usize| if i < n / 2 { 1.0 } else { root };
    for j in 0..n {
        for i in 0..n {
            g[(i, j)] *= scale(i) * scale(j);
        }
    }
    DenseSymmetric::new(n, g.transpose().as_slice().to_vec())
}

/// Edges `a1 < b1 < a2 < b2` of the limiting two-interval support of
/// [`sample_covariance`]: the values of `z(x) = -1/x + (d/2)(1/(1+x) + 1/(x+1/σ))` at its
/// four local extrema on `x < 0`.
pub fn mp_edges(d: f64, sigma: f64) -> Result<(f64, f64, f64, f64)> {
    if !(d > 0.0 && d < 1.0) || !(sigma > 1.0) {
        return Err(invalid(format!(
            "mp_edges needs 0 < d < 1 and sigma > 1, got d={d}, sigma={sigma}"
        )));
    }
    let inv = 1.0 / sigma;
    let z = |x: f64| -1.0 / x + 0.5 * d * (1.0 / (1.0 + x) + 1.0 / (x + inv));
    let dz = |x: f64| 1.0 / (x * x) - 0.5 * d * (1.0 / (1.0 + x).powi(2) + 1.0 / (x + inv).powi(2));

    let grid = 20_000;
    let mut branches: Vec<Vec<f64>> = Vec::new();
    // (-inf, -1)
    branches.push(
        (1..grid)
            .map(|i| -1.0 - 10f64.powf(-10.0 + 20.0 * i as f64 / grid as f64))
            .rev()
            .collect(),
    );
    // (-1, -1/σ) and (-1/σ, 0), clustered at both ends
    for (lo, hi) in [(-1.0, -inv), (-inv, 0.0)] {
        branches.push(
            (1..grid)
                .map(|i| {
                    let t = 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / grid as f64).cos());
                    lo + (hi - lo) * t
                })
                .collect(),
        );
    }
    let mut crit = Vec::new();
    for xs in branches {
        for w in xs.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (dz(a), dz(b));
            if fa == 0.0 {
                crit.push(a);
                continue;
            }
            if fa.signum() == fb.signum() {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid == a || mid == b {
                    break;
                }
                if dz(mid).signum() == fa.signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            crit.push(0.5 * (a + b));
        }
    }
    if crit.len() != 4 {
        return Err(Error::Bracket(format!(
            "expected 4 local extrema of the edge map for d={d}, sigma={sigma}, found {}",
            crit.len()
        )));
    }
    let mut v: Vec<f64> = crit.into_iter().map(z).collect();
    v.sort_by(f64::total_cmp);
    Ok((v[0], v[1], v[2], v[3]))
}

/// Block diagonal `[(1/m) X Xᵀ, 0; 0, zI + σD]` with `X` of size `n' × m`, `m = n'/d`, and
/// `D` diagonal with standard normal entries.
pub fn spiked_covariance(
    n: usize,
    n_prime: usize,
    d: f64,
    z: f64,
    sigma: f64,
    seed: u64,
) -> Result<BlockDiagonal> {
    if n_prime == 0 || n_prime >= n {
        return Err(invalid(format!(
            "spiked covariance needs 0 < n' < n, got n={n}, n'={n_prime}"
        )));
    }
    if !(sigma >= 0.0) {
        return Err(invalid(format!(
            "spike width must be nonnegative, got {sigma}"
        )));
    }
    check_dense("spiked covariance bulk block", n_prime)?;
    let m = ratio_columns(n_prime, d)?;
    let mut rng = matrix_rng(seed);
    let g = wishart(n_prime, m, &mut rng);
    let bulk = DenseSymmetric::new(n_prime, g.transpose().as_slice().to_vec())?;
    let spike: Vec<f64> = (0..n - n_prime)
        .map(|_| z + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    BlockDiagonal::new(vec![Box::new(bulk), Box::new(diagonal_operator(spike)?)])
}

/// Spin-`S` Heisenberg ring of `N` sites with couplings `(Jx, Jy, Jz)` on nearest
/// neighbours. Both orderings of each neighbouring pair enter the sum.
#[derive(Debug, Clone)]
pub struct HeisenbergRing {
    sites: usize,
    /// `2S + 1`
    levels: usize,
    dim: usize,
    /// Spin projection of each local level, `S, S-1, …, -S`.
    m: Vec<f64>,
    /// `⟨m+1|s⁺|m⟩` indexed by level; 0 at the top.
    raise: Vec<f64>,
    bonds: Vec<(usize, usize, f64)>,
    j: (f64, f64, f64),
    pow: Vec<usize>,
}

/// `S` must be `1/2` or `1`.
pub fn heisenberg_ring(n: usize, spin: f64, jx: f64, jy: f64, jz: f64) -> Result<HeisenbergRing> {
    let levels: usize = if spin == 0.5 {
        2
    } else if spin == 1.0 {
        3
    } else {
        return Err(invalid(format!("spin must be 1/2 or 1, got {spin}")));
    };
    if n < 2 {
        return Err(invalid("a ring needs at least 2 sites"));
    }
    let dim = levels.checked_pow(n as u32).unwrap_or(usize::MAX);
    if dim > SPIN_DIM_CAP {
        return Err(Error::TooLarge {
            what: format!("heisenberg({n},{spin}) dimension"),
            size: dim,
            cap: SPIN_DIM_CAP,
        });
    }
    let m: Vec<f64> = (0..levels).map(|l| spin - l as f64).collect();
    let raise = m
        .iter()
        .map(|&mm| (spin * (spin + 1.0) - mm * (mm + 1.0)).max(0.0).sqrt())
        .collect();
    // ordered pairs (i, j) with j - i ≡ ±1 mod N, grouped by unordered pair
    let mut bonds: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let diff = (j + n - i) % n;
            if i != j && (diff == 1 || diff == n - 1) {
                let key = (i.min(j), i.max(j));
                match bonds.iter_mut().find(|b| (b.0, b.1) == key) {
                    Some(b) => b.2 += 1.0,
                    None => bonds.push((key.0, key.1, 1.0)),
                }
            }
        }
    }
    // site 0 is the most significant digit
    let pow = (0..n).map(|i| levels.pow((n - 1 - i) as u32)).collect();
    Ok(HeisenbergRing {
        sites: n,
        levels,
        dim,
        m,
        raise,
        bonds,
        j: (jx, jy, jz),
        pow,
    })
}

impl HeisenbergRing {
    pub fn sites(&self) -> usize {
        self.sites
    }

    fn level(&self, state: usize, site: usize) -> usize {
        state / self.pow[site] % self.levels
    }
}

impl LinearOperator for HeisenbergRing {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (jx, jy, jz) = self.j;
        let flip = 0.25 * (jx + jy);
        let pair = 0.25 * (jx - jy);
        // raising level index l -> l-1 increases m; matrix element raise[l]
        for (state, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(i, j, c) in &self.bonds {
                let (li, lj) = (self.level(state, i), self.level(state, j));
                let (pi, pj) = (self.pow[i], self.pow[j]);
                acc += c * jz * self.m[li] * self.m[lj] * x[state];
                let up_i = (li > 0).then(|| self.raise[li]);
                let up_j = (lj > 0).then(|| self.raise[lj]);
                let dn_i = (li + 1 < self.levels).then(|| self.raise[li + 1]);
                let dn_j = (lj + 1 < self.levels).then(|| self.raise[lj + 1]);
                if flip != 0.0 {
                    if let (Some(a), Some(b)) = (up_i, dn_j) {
                        acc += c * flip * a * b * x[state - pi + pj];
                    }
                    if let (Some(a), Some(b)) = (dn_i, up_j) {
                        acc += c * flip * a * b * x[state + pi - pj];
                    }
                }
                if pair != 0.0 {
                    if let (Some(a), Some(b)) = (up_i, up_j) {
                        acc += c * pair * a * b * x[state - pi - pj];
                    }
                    if let (Some(a), Some(b)) = (dn_i, dn_j) {
                        acc += c * pair * a * b * x[state + pi + pj];
                    }
                }
            }
            *out = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::to_dense;

    fn dense_eigs(op: &dyn LinearOperator) -> Vec<f64> {
        let n = op.dim();
        let m = DMatrix::from_row_slice(n, n, &to_dense(op));
        let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn uniform_and_gapped() {
        assert_eq!(uniform_spectrum(2).unwrap().diagonal(), &[-0.5, 0.5]);
        let u = uniform_spectrum(1000).unwrap();
        assert!(u.diagonal().iter().all(|x| x.abs() < 1.0));
        let d = u.diagonal();
        for i in 0..500 {
            assert!((d[i] + d[999 - i]).abs() < 1e-15);
        }
        let g = gapped_spectrum(1000).unwrap();
        let count = d.iter().filter(|x| x.abs() >= 0.75).count();
        assert_eq!(g.dim(), count);
        assert!(g
            .diagonal()
            .iter()
            .all(|x| x.abs() >= 0.75 && d.contains(x)));
        assert!(uniform_spectrum(0).is_err());
    }

    #[test]
    fn model_problem_shape() {
        let a = model_problem(300, 1e3, 0.85).unwrap();
        let d = a.diagonal();
        assert_eq!(d[0], 1.0);
        assert!((d[299] - 1e3).abs() < 1e-12);
        assert!(d.windows(2).all(|w| w[0] <= w[1]));
        // offsets from 1 underflow the spacing of doubles near 1 for small i
        let offsets: Vec<f64> = (1..=300)
            .map(|i| (i - 1) as f64 / 299.0 * 999.0 * 0.85f64.powi(300 - i))
            .collect();
        assert!(offsets.windows(2).all(|w| w[0] < w[1]));
        let flat = model_problem(11, 3.0, 1.0).unwrap();
        for (i, x) in flat.diagonal().iter().enumerate() {
            assert!((x - (1.0 + 0.2 * i as f64)).abs() < 1e-14);
        }
        assert!(model_problem(1, 10.0, 0.5).is_err());
        assert!(model_problem(5, 0.5, 0.5).is_err());
    }

    #[test]
    fn kneser_counts() {
        let (e, m) = kneser_spectrum(8, 3).unwrap();
        assert_eq!(e, vec![10, -6, 3, -1]);
        assert_eq!(m, vec![1, 7, 20, 28]);
        let (e, m) = kneser_spectrum(10, 4).unwrap();
        assert_eq!(e, vec![15, -10, 6, -3, 1]);
        assert_eq!(m, vec![1, 9, 35, 75, 90]);
        let (_, m) = kneser_spectrum(23, 11).unwrap();
        assert_eq!(m.iter().sum::<u64>(), 1_352_078);
        assert!(kneser_spectrum(5, 3).is_err());
        assert!(matches!(
            kneser_adjacency(23, 11),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn kneser_graphs_match_formula() {
        for (n, k) in [(4, 2), (5, 2), (8, 3), (7, 1)] {
            let a = kneser_adjacency(n, k).unwrap();
            let deg = binomial((n - k) as i64, k as i64) as usize;
            for i in 0..a.dim() {
                assert_eq!(a.row(i).count(), deg);
            }
            let exact = kneser_eigenvalues(n, k).unwrap();
            assert!(close(&dense_eigs(&a), &exact, 1e-10), "({n},{k})");
            assert_eq!(a.exact_spectrum().unwrap(), exact.as_slice());
        }
    }

    #[test]
    fn mp_edges_sanity() {
        let (a1, b1, a2, b2) = mp_edges(0.3, 8.0).unwrap();
        assert!(a1 < b1 && b1 < a2 && a2 < b2);
        // close to σ = 1, the map reduces to a single Marchenko–Pastur law
        assert!(matches!(mp_edges(0.3, 1.5), Err(Error::Bracket(_))));
        assert!(mp_edges(1.5, 8.0).is_err());
    }

    #[test]
    fn sample_covariance_masses() {
        let (a1, b1, a2, b2) = mp_edges(0.3, 8.0).unwrap();
        let a = sample_covariance(2000, 0.3, 8.0, 5).unwrap();
        let e = dense_eigs(&a);
        assert!(e[0] > -1e-10);
        let n = e.len() as f64;
        let slack = 0.05 * (b2 - a1);
        let low = e
            .iter()
            .filter(|&&x| x >= a1 - slack && x <= b1 + slack)
            .count() as f64
            / n;
        let high = e
            .iter()
            .filter(|&&x| x >= a2 - slack && x <= b2 + slack)
            .count() as f64
            / n;
        assert!((low - 0.5).abs() <= 0.02, "{low}");
        assert!((high - 0.5).abs() <= 0.02, "{high}");
        assert!(sample_covariance(2001, 0.3, 8.0, 5).is_err());
        assert!(matches!(
            sample_covariance(5000, 0.3, 8.0, 5),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn spiked_blocks() {
        let a = spiked_covariance(300, 100, 0.5, 1.5, 0.0, 3).unwrap();
        let e = dense_eigs(&a);
        assert_eq!(e.iter().filter(|&&x| x == 1.5).count(), 200);
        let b = spiked_covariance(300, 100, 0.5, 1.5, 1e-3, 3).unwrap();
        let mut x = vec![0.0; 300];
        x[150] = 1.0;
        let mut y = vec![0.0; 300];
        b.apply(&x, &mut y);
        assert!((y[150] - 1.5).abs() < 1e-2);
        assert!(y.iter().enumerate().all(|(i, v)| i == 150 || *v == 0.0));
        assert!(spiked_covariance(100, 100, 0.5, 1.5, 0.0, 3).is_err());
    }

    #[test]
    fn heisenberg_two_sites() {
        let h = heisenberg_ring(2, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(close(&dense_eigs(&h), &[-1.5, 0.5, 0.5, 0.5], 1e-13));
    }

    /// Dense Kronecker-product oracle.
    fn heisenberg_dense(n: usize, spin: f64, j: (f64, f64, f64)) -> DMatrix<f64> {
        let levels = (2.0 * spin + 1.0) as usize;
        let ms: Vec<f64> = (0..levels).map(|l| spin - l as f64).collect();
        let mut sp = DMatrix::<f64>::zeros(levels, levels);
        for l in 1..levels {
            let m = ms[l];
            sp[(l - 1, l)] = (spin * (spin + 1.0) - m * (m + 1.0)).sqrt();
        }
        let sm = sp.transpose();
        let sx = (&sp + &sm) * 0.5;
        // sʸ = (s⁺ - s⁻)/(2i); sʸ⊗sʸ = -(s⁺ - s⁻)⊗(s⁺ - s⁻)/4 is real
        let sy_im = (&sp - &sm) * 0.5;
        let sz = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ms));
        let eye = DMatrix::<f64>::identity(levels, levels);
        let site = |op: &DMatrix<f64>, i: usize| {
            let mut out = DMatrix::<f64>::identity(1, 1);
            for s in 0..n {
                out = out.kronecker(if s == i { op } else { &eye });
            }
            out
        };
        let dim = levels.pow(n as u32);
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            for k in 0..n {
                let diff = (k + n - i) % n;
                if i == k || !(diff == 1 || diff == n - 1) {
                    continue;
                }
                h += site(&sx, i) * site(&sx, k) * j.0;
                h -= site(&sy_im, i) * site(&sy_im, k) * j.1;
                h += site(&sz, i) * site(&sz, k) * j.2;
            }
        }
        h
    }

    #[test]
    fn heisenberg_matches_kronecker_oracle() {
        for (n, spin, j) in [
            (3, 0.5, (1.0, 1.0, 1.0)),
            (4, 0.5, (0.7, -0.3, 1.2)),
            (3, 1.0, (1.0, 0.5, -0.4)),
            (4, 1.0, (1.0, 1.0, 1.0)),
        ] {
            let h = heisenberg_ring(n, spin, j.0, j.1, j.2).unwrap();
            let oracle = heisenberg_dense(n, spin, j);
            let mine = DMatrix::from_row_slice(h.dim(), h.dim(), &to_dense(&h));
            assert!((&mine - &oracle).amax() < 1e-13, "N={n} S={spin}");
            assert!(mine.trace().abs() < 1e-12);
        }
    }

    #[test]
    fn heisenberg_cyclic_invariance() {
        // relabeling sites cyclically permutes basis states; the spectrum is unchanged and
        // the action commutes with the shift
        let n = 5;
        let h = heisenberg_ring(n, 0.5, 1.0, 1.0, 1.0).unwrap();
        let dim = h.dim();
        let shift = |s: usize| ((s << 1) | (s >> (n - 1))) & (dim - 1);
        let x: Vec<f64> = (0..dim).map(|i| ((i * 7 + 3) % 11) as f64 - 5.0).collect();
        let mut xs = vec![0.0; dim];
        for s in 0..dim {
            xs[shift(s)] = x[s];
        }
        let (mut y, mut ys) = (vec![0.0; dim], vec![0.0; dim]);
        h.apply(&x, &mut y);
        h.apply(&xs, &mut ys);
        for s in 0..dim {
            assert!((ys[shift(s)] - y[s]).abs() < 1e-12);
        }
        assert!(heisenberg_ring(4, 1.5, 1.0, 1.0, 1.0).is_err());
        assert!(matches!(
            heisenberg_ring(40, 0.5, 1.0, 1.0, 1.0),
            Err(Error::TooLarge { .. })
        ));
    }
}
