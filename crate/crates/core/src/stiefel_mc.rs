//! Uniform sampling on the Stiefel manifold and Monte Carlo estimates of the
//! normalizing constants.
//!
//! Samples are drawn in fixed-size chunks; chunk `i` uses the ChaCha stream
//! `i` of the seed, and chunk statistics are merged by a fixed pairwise tree,
//! so estimates do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, input, Result};
use crate::linalg::{householder_qr, leading_minors, RectMatrix, SymmetricMatrix};
use crate::partitions::Partition;
use crate::zonal::ZonalCoeffTable;

const CHUNK: usize = 4096;
/// Max summand above this multiple of the mean flags a heavy tail.
pub const HEAVY_TAIL_RATIO: f64 = 1e6;
/// Two-sample KS coefficient at level 0.01.
pub const KS_C_001: f64 = 1.628;
/// Chi-square critical value, one degree of freedom, level 0.01.
pub const CHI2_1DF_001: f64 = 6.63;

/// A `d x p` matrix with orthonormal columns, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StiefelPoint {
    pub d: usize,
    pub p: usize,
    pub x: Vec<f64>,
}

impl StiefelPoint {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.x[i * self.p + j]
    }

    /// `||x'x - I_p||_F`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut s = 0.0;
        for a in 0..self.p {
            for b in 0..self.p {
                let dot: f64 = (0..self.d).map(|i| self.get(i, a) * self.get(i, b)).sum();
                let e = dot - if a == b { 1.0 } else { 0.0 };
                s += e * e;
            }
        }
        s.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
    pub seed: u64,
    pub max_summand: f64,
    pub heavy_tail: bool,
}

impl McEstimate {
    /// `|mean - target| <= 3 stderr + slack`.
    pub fn agrees_with(&self, target: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= 3.0 * self.stderr + slack
    }
}

/// Pair of independent standard normals by the Marsaglia polar method.
pub fn polar_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    loop {
        let u: f64 = rng.random_range(-1.0..1.0);
        let v: f64 = rng.random_range(-1.0..1.0);
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let f = (-2.0 * s.ln() / s).sqrt();
            return (u * f, v * f);
        }
    }
}

pub fn fill_normals<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    let mut chunks = out.chunks_exact_mut(2);
    for pair in &mut chunks {
        let (a, b) = polar_pair(rng);
        pair[0] = a;
        pair[1] = b;
    }
    if let [last] = chunks.into_remainder() {
        *last = polar_pair(rng).0;
    }
}

/// Haar-uniform draw on `V_{d,p}`: Gaussian matrix, QR, columns signed so `diag(R) > 0`.
pub fn sample_stiefel<R: Rng + ?Sized>(d: usize, p: usize, rng: &mut R) -> StiefelPoint {
    assert!(d >= p && p >= 1, "sample_stiefel needs d >= p >= 1");
    let mut g = vec![0.0; d * p];
    fill_normals(rng, &mut g);
    let (mut q, rdiag) = householder_qr(&g, d, p);
    for (j, r) in rdiag.iter().enumerate() {
        if *r < 0.0 {
            for i in 0..d {
                q[i * p + j] = -q[i * p + j];
            }
        }
    }
    StiefelPoint { d, p, x: q }
}

/// Haar-uniform orthogonal `d x d` matrix.
pub fn sample_orthogonal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    sample_stiefel(d, d, rng).x
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    max: f64,
}

impl Moments {
    fn merge(a: Moments, b: Moments) -> Moments {
        if a.n == 0 {
            return b;
        }
        if b.n == 0 {
            return a;
        }
        let n = a.n + b.n;
        let delta = b.mean - a.mean;
        let wb = b.n as f64 / n as f64;
        Moments {
            n,
            mean: a.mean + delta * wb,
            m2: a.m2 + b.m2 + delta * delta * a.n as f64 * wb,
            max: a.max.max(b.max),
        }
    }
}

fn tree_reduce(mut v: Vec<Moments>) -> Moments {
    while v.len() > 1 {
        v = v.chunks(2).map(|c| if c.len() == 2 { Moments::merge(c[0], c[1]) } else { c[0] }).collect();
    }
    v.pop().unwrap_or(Moments { n: 0, mean: 0.0, m2: 0.0, max: f64::NEG_INFINITY })
}

/// Chunked, seeded Monte Carlo mean of `f(x)` for uniform `x` in `V_{d,p}`.
pub fn mc_mean<F>(d: usize, p: usize, n: u64, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&StiefelPoint) -> f64 + Sync,
{
    if n < 2 {
        return Err(domain("Monte Carlo needs n >= 2"));
    }
    if p == 0 || d < p {
        return Err(domain(format!("needs d >= p >= 1, got d={d}, p={p}")));
    }
    let chunks = n.div_ceil(CHUNK as u64);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let len = (n - c * CHUNK as u64).min(CHUNK as u64);
            let mut m = Moments { n: 0, mean: 0.0, m2: 0.0, max: f64::NEG_INFINITY };
            for _ in 0..len {
                let y = f(&sample_stiefel(d, p, &mut rng));
                m.n += 1;
                let delta = y - m.mean;
                m.mean += delta / m.n as f64;
                m.m2 += delta * (y - m.mean);
                m.max = m.max.max(y);
            }
            m
        })
        .collect();
    let m = tree_reduce(parts);
    let var = m.m2 / (m.n - 1) as f64;
    Ok(McEstimate {
        mean: m.mean,
        stderr: (var.max(0.0) / m.n as f64).sqrt(),
        n: m.n,
        seed,
        max_summand: m.max,
        heavy_tail: m.max > HEAVY_TAIL_RATIO * m.mean.abs(),
    })
}

/// `tr(A x' Sigma x)`.
pub fn bingham_exponent(a: &SymmetricMatrix, sigma: &SymmetricMatrix, x: &StiefelPoint) -> f64 {
    let (d, p) = (x.d, x.p);
    let mut y = vec![0.0; d * p];
    for i in 0..d {
        for j in 0..p {
            y[i * p + j] = (0..d).map(|k| sigma.get(i, k) * x.get(k, j)).sum();
        }
    }
    let mut s = 0.0;
    for a_row in 0..p {
        for b in 0..p {
            let m_ba: f64 = (0..d).map(|i| x.get(i, b) * y[i * p + a_row]).sum();
            s += a.get(a_row, b) * m_ba;
        }
    }
    s
}

fn check_phi_dims(a: &SymmetricMatrix, sigma: &SymmetricMatrix) -> Result<(usize, usize)> {
    let (p, d) = (a.order(), sigma.order());
    if p == 0 || d < p {
        return Err(input(format!("A is {p}x{p} and Sigma is {d}x{d}; need 1 <= p <= d")));
    }
    Ok((d, p))
}

/// Monte Carlo estimate of `Phi_{d,p}(A, Sigma)`.
pub fn mc_phi(a: &SymmetricMatrix, sigma: &SymmetricMatrix, n: u64, seed: u64) -> Result<McEstimate> {
    let (d, p) = check_phi_dims(a, sigma)?;
    mc_mean(d, p, n, seed, |x| bingham_exponent(a, sigma, x).exp())
}

/// Monte Carlo estimate of `Psi_{d,p}(B)`.
pub fn mc_psi(b: &RectMatrix, n: u64, seed: u64) -> Result<McEstimate> {
    let (d, p) = (b.rows(), b.cols());
    mc_mean(d, p, n, seed, |x| b.data().iter().zip(&x.x).map(|(u, v)| u * v).sum::<f64>().exp())
}

/// `prod_j det_j(H' Sigma H)^{k_j - k_{j+1}}` for the first `l(k)` columns of `H`.
pub fn zonal_integrand(kappa: &Partition, sigma: &SymmetricMatrix, x: &StiefelPoint) -> f64 {
    let (d, l) = (x.d, x.p);
    let mut y = vec![0.0; d * l];
    for i in 0..d {
        for j in 0..l {
            y[i * l + j] = (0..d).map(|k| sigma.get(i, k) * x.get(k, j)).sum();
        }
    }
    let mut g = vec![0.0; l * l];
    for a in 0..l {
        for b in 0..l {
            g[a * l + b] = (0..d).map(|i| x.get(i, a) * y[i * l + b]).sum();
        }
    }
    let minors = leading_minors(&g, l, l);
    (1..=l)
        .map(|j| minors[j - 1].powi((kappa.part(j) - kappa.part(j + 1)) as i32))
        .product()
}

/// Monte Carlo estimate of the Haar integral whose value is `C_k(Sigma)/C_k(I_d)`.
///
/// The integrand only involves the first `l(k)` columns of the Haar matrix,
/// which are the columns of a uniform point of `V_{d,l(k)}`.
pub fn mc_zonal_integral(kappa: &Partition, sigma: &SymmetricMatrix, n: u64, seed: u64, table: &ZonalCoeffTable) -> Result<McEstimate> {
    let d = sigma.order();
    if kappa.len() > d {
        return Err(domain(format!("l(kappa)={} exceeds d={d}", kappa.len())));
    }
    if !table.covers(kappa.weight(), kappa.len(), d.min(kappa.weight() as usize)) {
        return Err(domain(format!("table does not cover {kappa}")));
    }
    if kappa.is_empty() {
        return Ok(McEstimate { mean: 1.0, stderr: 0.0, n, seed, max_summand: 1.0, heavy_tail: false });
    }
    mc_mean(d, kappa.len(), n, seed, |x| zonal_integrand(kappa, sigma, x))
}

/// `C_k(Sigma)/C_k(I_d)`.
pub fn zonal_integral_target(kappa: &Partition, sigma: &SymmetricMatrix, table: &ZonalCoeffTable) -> Result<f64> {
    let d = sigma.order();
    let num = table.eval(kappa, &sigma.eigen().values)?;
    let den = table.eval(kappa, &vec![1.0; d])?;
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Two-sample Kolmogorov-Smirnov test at level 0.01.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut dmax) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        dmax = dmax.max((i as f64 / n - j as f64 / m).abs());
    }
    let critical = KS_C_001 * ((n + m) / (n * m)).sqrt();
    KsResult { statistic: dmax, critical, reject: dmax > critical }
}

/// Pearson statistic of `counts` against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Samples of `tr(A x'Sigma x)` at `x` and at `H x K` from independent streams.
pub fn invariance_samples(
    a: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    h: &[f64],
    k: &[f64],
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (d, p) = check_phi_dims(a, sigma)?;
    let draw = |stream: u64, transform: bool| -> Vec<f64> {
        let mut rng = stream_rng(seed, stream);
        (0..n)
            .map(|_| {
                let mut x = sample_stiefel(d, p, &mut rng);
                if transform {
                    let hx = crate::linalg::matmul(h, d, d, &x.x, p);
                    x.x = crate::linalg::matmul(&hx, d, p, k, p);
                }
                bingham_exponent(a, sigma, &x)
            })
            .collect()
    };
    Ok((draw(u64::MAX - 1, false), draw(u64::MAX, true)))
}
