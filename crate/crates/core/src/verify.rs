//! Executable checks of the zonal-polynomial inequalities behind the bounds.
//!
//! Every check returns a [`CheckResult`] with the two sides of the inequality
//! oriented as `lhs <= rhs`. Float comparisons get a one-sided relative slack
//! of `1e-12 * |rhs|`: rounding can make a check pass, never fail.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{alpha_p, gamma1, n_dim};
use crate::error::{domain, Result};
use crate::linalg::{abs_eigen_diag, SymmetricMatrix};
use crate::partitions::{enumerate, half_integer, partitional_shifted_factorial_exact, shifted_factorial, Partition};
use crate::zonal::{factorial, zonal_unit_value, ZonalCoeffTable};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_INSTANCES: usize = 200;
const REL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub witness: String,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, witness: impl Into<String>) -> Self {
        let passed = lhs <= rhs + REL_SLACK * rhs.abs();
        Self { name: name.into(), passed, lhs, rhs, margin: rhs - lhs, witness: witness.into() }
    }

    /// Margin relative to `|rhs|`.
    pub fn relative_margin(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs <= 0.0 { 0.0 } else { f64::NEG_INFINITY }
        } else {
            self.margin / self.rhs.abs()
        }
    }
}

fn ratio_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn ln_poch(a: f64, n: u64) -> f64 {
    (0..n).map(|j| (a + j as f64).ln()).sum()
}

/// `prod_k (p a_k)! <= alpha_p^{2p} p^{p S} (S!)^p`, `S = sum a`.
pub fn check_factorial_lemma(a: &[u64], p: u64) -> Result<CheckResult> {
    if a.len() as u64 != p {
        return Err(domain(format!("factorial lemma takes p={p} integers, got {}", a.len())));
    }
    let s: u64 = a.iter().sum();
    if s < 2 {
        return Err(domain("factorial lemma needs a_1 + ... + a_p >= 2"));
    }
    let lhs: BigInt = a.iter().map(|&ai| factorial(p * ai)).product();
    let int_part = BigInt::from(p).pow((p * s) as u32) * factorial(s).pow(p as u32);
    // alpha_p^{2p} is irrational; scale both sides by the exact integer factor
    let scaled = ratio_f64(&BigRational::new(lhs.clone(), int_part.clone()));
    let alpha2p = alpha_p(p).powi(2 * p as i32);
    let mut r = CheckResult::new("factorial_lemma", scaled, alpha2p, format!("a={a:?}, p={p}"));
    r.witness = format!("a={a:?}, p={p}, lhs={lhs}, rhs=alpha_p^{{2p}}*{int_part}");
    Ok(r)
}

fn check_kappa_dims(kappa: &Partition, d: u64, p: u64) -> Result<()> {
    if kappa.weight() < 2 {
        return Err(domain(format!("needs |kappa| >= 2, got {kappa}")));
    }
    if (kappa.len() as u64) > p || p > d {
        return Err(domain(format!("needs l(kappa) <= p <= d; kappa={kappa}, p={p}, d={d}")));
    }
    Ok(())
}

/// `(2p)^{-|k|} d^{|k|} <= (d/2)_k` and `(d/2)_k <= 2^{-|k|} (d+|k|)^{|k|}`, exactly.
pub fn check_pochhammer_bounds(kappa: &Partition, d: u64, p: u64) -> Result<(CheckResult, CheckResult)> {
    check_kappa_dims(kappa, d, p)?;
    let k = kappa.weight() as i32;
    let poch = partitional_shifted_factorial_exact(&half_integer(d), kappa);
    let lower = BigRational::new(BigInt::from(d).pow(k as u32), BigInt::from(2 * p).pow(k as u32));
    let upper = BigRational::new(BigInt::from(d + k as u64).pow(k as u32), BigInt::from(2).pow(k as u32));
    let w = format!("kappa={kappa}, d={d}, p={p}");
    // exact comparisons decide; the floats are for reporting
    let mut lo = CheckResult::new("pochhammer_lower", ratio_f64(&lower), ratio_f64(&poch), w.clone());
    lo.passed = lower <= poch;
    let mut hi = CheckResult::new("pochhammer_upper", ratio_f64(&poch), ratio_f64(&upper), w);
    hi.passed = poch <= upper;
    Ok((lo, hi))
}

/// `ln prod_{i<=p} (sqrt(d)/2)_{p k_i} / (d/2)_{p k_i}`.
fn ln_ratio_product(kappa: &Partition, d: u64, p: u64) -> f64 {
    let (a, b) = ((d as f64).sqrt() / 2.0, d as f64 / 2.0);
    (1..=p as usize)
        .map(|i| {
            let n = p * kappa.part(i) as u64;
            ln_poch(a, n) - ln_poch(b, n)
        })
        .sum()
}

/// Product ratio bound `prod (sqrt(d)/2)_{p k_i}/(d/2)_{p k_i} <= [alpha_p (|k|!)^{1/2} gamma1^{|k|} p^{|k|/2} d^{-|k|/2}]^p`.
pub fn check_ratio_bound(kappa: &Partition, d: u64, p: u64) -> Result<CheckResult> {
    check_kappa_dims(kappa, d, p)?;
    let k = kappa.weight() as f64;
    let (pf, df) = (p as f64, d as f64);
    let ln_lhs = ln_ratio_product(kappa, d, p);
    let ln_rhs = pf
        * (alpha_p(p).ln() + 0.5 * crate::numeric::ln_factorial(kappa.weight() as u64) + k * gamma1().ln()
            + 0.5 * k * pf.ln()
            - 0.5 * k * df.ln());
    // compare on the scale of the right-hand side so tiny values stay meaningful
    Ok(CheckResult::new(
        "ratio_bound",
        (ln_lhs - ln_rhs).exp(),
        1.0,
        format!("kappa={kappa}, d={d}, p={p}, ln_lhs={ln_lhs:.17e}, ln_rhs={ln_rhs:.17e}"),
    ))
}

/// Scalar ratio bound `(sqrt(d)/2)_r / (d/2)_r <= (r!)^{1/2} gamma1^r d^{-r/2}`.
pub fn check_scalar_ratio(r: u64, d: u64) -> CheckResult {
    let df = d as f64;
    let ln_lhs = ln_poch(df.sqrt() / 2.0, r) - ln_poch(df / 2.0, r);
    let rf = r as f64;
    let ln_rhs = 0.5 * crate::numeric::ln_factorial(r) + rf * gamma1().ln() - 0.5 * rf * df.ln();
    CheckResult::new("scalar_ratio_bound", (ln_lhs - ln_rhs).exp(), 1.0, format!("r={r}, d={d}"))
}

/// `|C_k(Sigma)| <= C_k(Sigma_+)`.
pub fn check_abs_bound(kappa: &Partition, sigma: &SymmetricMatrix, table: &ZonalCoeffTable) -> Result<CheckResult> {
    let e = sigma.eigen().values;
    let ea = abs_eigen_diag(sigma).diagonal();
    let lhs = table.eval(kappa, &e)?.abs();
    let rhs = table.eval(kappa, &ea)?;
    Ok(CheckResult::new("abs_bound", lhs, rhs, format!("kappa={kappa}, spectrum={e:?}")))
}

/// Right-hand side of the zonal upper bound.
pub fn zonal_upper_rhs(kappa: &Partition, norm: f64, d: u64, p: u64) -> Result<f64> {
    let unit = ratio_f64(&zonal_unit_value(kappa, d)?);
    Ok((ln_ratio_product(kappa, d, p) / p as f64).exp() * unit * norm.powi(kappa.weight() as i32))
}

/// `|C_k(Sigma)| <= (prod ratio)^{1/p} C_k(I_d) ||Sigma||^{|k|}`.
pub fn check_zonal_upper(kappa: &Partition, sigma: &SymmetricMatrix, p: u64, table: &ZonalCoeffTable) -> Result<CheckResult> {
    let d = sigma.order() as u64;
    if kappa.len() as u64 > p || p > d {
        return Err(domain(format!("needs l(kappa) <= p <= d; kappa={kappa}, p={p}, d={d}")));
    }
    let e = sigma.eigen().values;
    let lhs = table.eval(kappa, &e)?.abs();
    let rhs = zonal_upper_rhs(kappa, sigma.frobenius_norm(), d, p)?;
    Ok(CheckResult::new("zonal_upper", lhs, rhs, format!("kappa={kappa}, p={p}, spectrum={e:?}")))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FkComparison {
    pub check: CheckResult,
    /// Right-hand side of the zonal upper bound over the Faraut-Koranyi right-hand side.
    pub ratio: f64,
}

fn positive_spectrum(sigma: &SymmetricMatrix) -> Result<Vec<f64>> {
    let e = sigma.eigen().values;
    if !(e.last().copied().unwrap_or(0.0) > 0.0) {
        return Err(domain("Sigma must be positive definite"));
    }
    Ok(e)
}

/// `C_k(Sigma) <= C_k(I_d) prod_j sigma_(j)^{k_j}` and the comparison with the zonal upper bound.
pub fn check_fk_bound_and_compare(kappa: &Partition, sigma: &SymmetricMatrix, p: u64, table: &ZonalCoeffTable) -> Result<FkComparison> {
    if kappa.len() as u64 != p {
        return Err(domain(format!("needs l(kappa) = p; kappa={kappa}, p={p}")));
    }
    let e = positive_spectrum(sigma)?;
    fk_from_spectrum(kappa, &e, p, table)
}

fn fk_from_spectrum(kappa: &Partition, e: &[f64], p: u64, table: &ZonalCoeffTable) -> Result<FkComparison> {
    let d = e.len() as u64;
    let unit = ratio_f64(&zonal_unit_value(kappa, d)?);
    let ln_prod: f64 = (1..=p as usize).map(|j| kappa.part(j) as f64 * e[j - 1].ln()).sum();
    let fk_rhs = unit * ln_prod.exp();
    let lhs = table.eval(kappa, e)?;
    let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
    let ln_ratio = ln_ratio_product(kappa, d, p) / p as f64 + kappa.weight() as f64 * norm.ln() - ln_prod;
    Ok(FkComparison {
        check: CheckResult::new("fk_bound", lhs, fk_rhs, format!("kappa={kappa}, p={p}, d={d}")),
        ratio: ln_ratio.exp(),
    })
}

/// Spectrum with `p` eigenvalues `sigma d^{r/2}` and the remaining ones `rho d^{-(d-p+1)/2}`.
pub fn spiked_spectrum(d: u64, p: u64, sigma: f64, rho: f64, r: f64) -> Vec<f64> {
    let df = d as f64;
    let big = sigma * df.powf(r / 2.0);
    let small = rho * df.powf(-((d - p + 1) as f64) / 2.0);
    (0..d).map(|j| if j < p { big } else { small }).collect()
}

/// The comparison ratio at the spiked spectrum; it falls below 1 for large `d`.
pub fn spiked_fk_ratio(kappa: &Partition, d: u64, table: &ZonalCoeffTable) -> Result<FkComparison> {
    let p = kappa.len() as u64;
    let e = spiked_spectrum(d, p, 1.0, 1.0, 0.5);
    if e.iter().any(|&x| !(x > 0.0)) {
        return Err(domain(format!("spiked spectrum underflows at d={d}")));
    }
    let mut c = fk_from_spectrum(kappa, &e, p, table)?;
    c.check.witness = format!("spiked spectrum sigma=rho=1, r=1/2; {}", c.check.witness);
    Ok(c)
}

/// `(1+|k|)^{-N_d} C_k(I_d) prod_j sigma_(j)^{k_j} <= C_k(Sigma)` with `p = l(k)`.
pub fn check_zonal_lower(kappa: &Partition, sigma: &SymmetricMatrix, table: &ZonalCoeffTable) -> Result<CheckResult> {
    let e = positive_spectrum(sigma)?;
    let d = e.len() as u64;
    let p = kappa.len();
    if p as u64 > d {
        return Err(domain(format!("needs l(kappa) <= d; kappa={kappa}, d={d}")));
    }
    let unit = ratio_f64(&zonal_unit_value(kappa, d)?);
    let ln_lhs = -(n_dim(d) as f64) * (1.0 + kappa.weight() as f64).ln()
        + unit.ln()
        + (1..=p).map(|j| kappa.part(j) as f64 * e[j - 1].ln()).sum::<f64>();
    let rhs = table.eval(kappa, &e)?;
    Ok(CheckResult::new("zonal_lower", ln_lhs.exp(), rhs, format!("kappa={kappa}, spectrum={e:?}")))
}

/// `Q = (prod ratio)^{1/p} d^{|k|/2}`, the scalar-matrix form of the zonal upper bound.
pub fn scalar_tightness_value(kappa: &Partition, d: u64, p: u64) -> f64 {
    (ln_ratio_product(kappa, d, p) / p as f64 + kappa.weight() as f64 * 0.5 * (d as f64).ln()).exp()
}

/// `1 <= Q`.
pub fn check_scalar_tightness(kappa: &Partition, d: u64, p: u64) -> Result<CheckResult> {
    if (kappa.len() as u64) > p || p > d {
        return Err(domain(format!("needs l(kappa) <= p <= d; kappa={kappa}, p={p}, d={d}")));
    }
    Ok(CheckResult::new("scalar_tightness", 1.0, scalar_tightness_value(kappa, d, p), format!("kappa={kappa}, d={d}, p={p}")))
}

/// Exact `C_k(I_d)` against one-part closed forms, used by the suite as a sanity anchor.
fn check_one_part_unit(k: u32, d: u64) -> CheckResult {
    let lhs = ratio_f64(&zonal_unit_value(&Partition::new(vec![k]), d).unwrap_or_else(|_| BigRational::one()));
    let rhs = shifted_factorial(d as f64 / 2.0, k) / shifted_factorial(0.5, k);
    CheckResult::new("one_part_unit_value", lhs, rhs * (1.0 + 1e-13), format!("k={k}, d={d}"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    /// Instance with the smallest relative margin.
    pub worst: CheckResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub max_weight: u32,
    pub dims: Vec<u64>,
    pub checks: Vec<CheckSummary>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckSummary> {
        self.checks.iter().filter(|c| c.failures > 0)
    }
}

fn summarize(name: &str, results: Vec<CheckResult>) -> CheckSummary {
    let failures = results.iter().filter(|r| !r.passed).count();
    let instances = results.len();
    let worst = results
        .into_iter()
        .min_by(|a, b| {
            // a failing instance is always worse than a passing one
            (a.passed, a.relative_margin()).partial_cmp(&(b.passed, b.relative_margin())).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or_else(|| CheckResult::new(name, 0.0, 0.0, "no instances"));
    CheckSummary { name: name.to_string(), instances, failures, worst }
}

fn random_symmetric(rng: &mut ChaCha8Rng, d: usize, positive: bool) -> SymmetricMatrix {
    let mut g = vec![0.0; d * d];
    for x in g.iter_mut() {
        *x = rng.random_range(-1.0..1.0);
    }
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            m[i * d + j] = if positive {
                (0..d).map(|k| g[i * d + k] * g[j * d + k]).sum::<f64>() / d as f64 + if i == j { 0.05 } else { 0.0 }
            } else {
                (g[i * d + j] + g[j * d + i]) * 1.5
            };
        }
    }
    SymmetricMatrix::from_row_major(d, m).expect("symmetric by construction")
}

/// Random partition with weight in `[min_w, max_w]` and length at most `max_len`.
fn random_partition(rng: &mut ChaCha8Rng, min_w: u32, max_w: u32, max_len: usize, exact_len: Option<usize>) -> Partition {
    loop {
        let w = rng.random_range(min_w..=max_w);
        let all: Vec<Partition> = enumerate(w, max_len)
            .into_iter()
            .filter(|k| exact_len.is_none_or(|l| k.len() == l))
            .collect();
        if !all.is_empty() {
            return all[rng.random_range(0..all.len())].clone();
        }
    }
}

/// Runs every check over its sweep and returns summaries in name order.
pub fn run_suite(max_weight: u32, dims: &[u64], seed: u64, instances: usize) -> Result<SuiteReport> {
    if max_weight < 2 {
        return Err(domain("validation needs max_weight >= 2"));
    }
    if dims.is_empty() || dims.iter().any(|&d| d < 1) {
        return Err(domain("validation needs a nonempty list of dimensions >= 1"));
    }
    let d_max = *dims.iter().max().unwrap_or(&1);
    let p_cap = 3u64;
    let table = ZonalCoeffTable::shared(
        max_weight.max(2),
        (p_cap.min(d_max) as usize).max(2),
        (d_max as usize).min(max_weight as usize).max(2),
    )?;
    let upper_table = ZonalCoeffTable::shared(2, 2, 2)?;
    let spiked_table = upper_table.clone();
    let instances = instances.max(1);

    type Job<'a> = Box<dyn Fn() -> Result<Vec<CheckResult>> + Send + Sync + 'a>;
    let table = &table;
    let jobs: Vec<(&str, Job)> = vec![
        ("factorial_lemma", Box::new(move || {
            let mut out = Vec::new();
            for p in 1..=4u64 {
                for s in 2..=8u64 {
                    for a in compositions(s, p as usize) {
                        out.push(check_factorial_lemma(&a, p)?);
                    }
                }
            }
            Ok(out)
        })),
        ("pochhammer_bounds", Box::new(move || {
            let mut out = Vec::new();
            for d in 1..=12u64 {
                for p in 1..=d.min(4) {
                    for w in 2..=max_weight.min(8) {
                        for kappa in enumerate(w, p as usize) {
                            let (lo, hi) = check_pochhammer_bounds(&kappa, d, p)?;
                            out.push(lo);
                            out.push(hi);
                        }
                    }
                }
            }
            Ok(out)
        })),
        ("ratio_bound", Box::new(move || {
            let mut out = Vec::new();
            for d in 1..=12u64 {
                for p in 1..=d.min(4) {
                    for w in 2..=max_weight.min(8) {
                        for kappa in enumerate(w, p as usize) {
                            out.push(check_ratio_bound(&kappa, d, p)?);
                        }
                    }
                }
                for r in 0..=16 {
                    out.push(check_scalar_ratio(r, d));
                }
            }
            Ok(out)
        })),
        ("abs_bound", Box::new(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            (0..instances)
                .map(|_| {
                    let d = dims[rng.random_range(0..dims.len())] as usize;
                    let sigma = random_symmetric(&mut rng, d, false);
                    let kappa = random_partition(&mut rng, 1, max_weight, d.min(table.max_len), None);
                    check_abs_bound(&kappa, &sigma, table)
                })
                .collect()
        })),
        ("zonal_upper", Box::new(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2);
            let mut out: Vec<CheckResult> = (0..instances)
                .map(|_| {
                    let d = dims[rng.random_range(0..dims.len())];
                    let p = rng.random_range(1..=d.min(table.max_len as u64));
                    let sigma = random_symmetric(&mut rng, d as usize, false);
                    let kappa = random_partition(&mut rng, 1, max_weight.min(6), p as usize, None);
                    check_zonal_upper(&kappa, &sigma, p, table)
                })
                .collect::<Result<_>>()?;
            // scalar Sigma at d = 64 with p = l(kappa): the two sides agree within 25%
            for w in 1..=2u32 {
                for kappa in enumerate(w, 2) {
                    let (d, p) = (64u64, kappa.len() as u64);
                    let lhs = ratio_f64(&zonal_unit_value(&kappa, d)?) * 0.5f64.powi(w as i32);
                    let rhs = zonal_upper_rhs(&kappa, 0.5 * (d as f64).sqrt(), d, p)?;
                    out.push(CheckResult::new("zonal_upper_scalar_tightness", 0.75, lhs / rhs, format!("kappa={kappa}, d=64, p={p}, Sigma=I/2")));
                }
            }
            Ok(out)
        })),
        ("fk_bound", Box::new(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(3);
            let mut out: Vec<CheckResult> = (0..instances)
                .map(|_| {
                    let d = dims[rng.random_range(0..dims.len())] as usize;
                    let p = rng.random_range(1..=d.min(table.max_len));
                    let sigma = random_symmetric(&mut rng, d, true);
                    let kappa = random_partition(&mut rng, p as u32, max_weight.max(p as u32), p, Some(p));
                    Ok(check_fk_bound_and_compare(&kappa, &sigma, p as u64, table)?.check)
                })
                .collect::<Result<_>>()?;
            // scalar Sigma: the FK bound is the sharper one
            for d in [2u64, 3, 4, 6, 8] {
                let c = fk_from_spectrum(&Partition::new(vec![1, 1]), &vec![1.0; d as usize], 2, &spiked_table)?;
                out.push(CheckResult::new("fk_sharper_at_scalar", 1.0, c.ratio, format!("kappa=[1,1], Sigma=I_{d}")));
            }
            let c = spiked_fk_ratio(&Partition::new(vec![1, 1]), 64, &spiked_table)?;
            out.push(CheckResult::new("fk_spiked_ratio_below_one", c.ratio, 1.0, c.check.witness.clone()));
            out.push(c.check);
            Ok(out)
        })),
        ("zonal_lower", Box::new(move || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(4);
            (0..instances)
                .map(|_| {
                    let d = dims[rng.random_range(0..dims.len())] as usize;
                    let sigma = random_symmetric(&mut rng, d, true);
                    let kappa = random_partition(&mut rng, 1, max_weight, d.min(table.max_len), None);
                    check_zonal_lower(&kappa, &sigma, table)
                })
                .collect()
        })),
        ("scalar_tightness", Box::new(move || {
            let mut out = Vec::new();
            for w in 1..=max_weight.min(6) {
                for p in 1..=3u64 {
                    for kappa in enumerate(w, p as usize) {
                        for j in 1..=10u32 {
                            let d = 1u64 << j;
                            if d >= p {
                                out.push(check_scalar_tightness(&kappa, d, p)?);
                            }
                        }
                    }
                }
            }
            // Q decreases toward 1 along d = 2^j for kappa = (1,1), past its peak near d = 7.5
            let kappa = Partition::new(vec![1, 1]);
            for j in 3..12u32 {
                let (a, b) = (scalar_tightness_value(&kappa, 1 << (j + 1), 2), scalar_tightness_value(&kappa, 1 << j, 2));
                out.push(CheckResult::new("scalar_tightness_decreasing", a, b, format!("kappa=[1,1], d=2^{j} -> 2^{}", j + 1)));
            }
            for k in 1..=12 {
                for d in 1..=12 {
                    out.push(check_one_part_unit(k, d));
                }
            }
            Ok(out)
        })),
    ];
    let mut checks: Vec<CheckSummary> = jobs
        .par_iter()
        .map(|(name, job)| job().map(|results| split_by_name(name, results)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(SuiteReport { seed, max_weight, dims: dims.to_vec(), checks })
}

fn split_by_name(_group: &str, results: Vec<CheckResult>) -> Vec<CheckSummary> {
    let mut names: Vec<String> = results.iter().map(|r| r.name.clone()).collect();
    names.sort();
    names.dedup();
    names
        .into_iter()
        .map(|n| {
            let rs: Vec<CheckResult> = results.iter().filter(|r| r.name == n).cloned().collect();
            summarize(&n, rs)
        })
        .collect()
}

/// Nonnegative integer vectors of length `len` summing to `s`.
fn compositions(s: u64, len: usize) -> Vec<Vec<u64>> {
    if len == 1 {
        return vec![vec![s]];
    }
    (0..=s)
        .flat_map(|first| {
            compositions(s - first, len - 1).into_iter().map(move |mut rest| {
                rest.insert(0, first);
                rest
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec())
    }

    #[test]
    fn check_result_slack_is_one_sided() {
        assert!(CheckResult::new("x", 1.0 + 1e-13, 1.0, "").passed);
        assert!(!CheckResult::new("x", 1.0 + 1e-11, 1.0, "").passed);
        assert!(!CheckResult::new("x", 2e-20, 1e-20, "").passed);
        assert!(CheckResult::new("x", 0.0, 0.0, "").passed);
    }

    #[test]
    fn factorial_lemma_examples() {
        let r = check_factorial_lemma(&[1, 1], 2).unwrap();
        assert!(r.passed && r.witness.contains("lhs=4"));
        let r = check_factorial_lemma(&[2, 0], 2).unwrap();
        assert!(r.passed && r.witness.contains("lhs=24"));
        for p in 1..=4u64 {
            for k in 2..=8 {
                let mut a = vec![0; p as usize];
                a[0] = k;
                assert!(check_factorial_lemma(&a, p).unwrap().passed);
            }
        }
        assert!(check_factorial_lemma(&[1, 0], 2).is_err());
    }

    #[test]
    fn pochhammer_examples() {
        let (lo, hi) = check_pochhammer_bounds(&p(&[2]), 2, 2).unwrap();
        assert!(lo.passed && hi.passed);
        assert_eq!((lo.lhs, lo.rhs, hi.rhs), (0.25, 2.0, 4.0));
        let (lo, hi) = check_pochhammer_bounds(&p(&[1, 1]), 4, 2).unwrap();
        assert!(lo.passed && hi.passed);
        assert!(check_pochhammer_bounds(&p(&[1]), 4, 2).is_err());
    }

    #[test]
    fn ratio_examples() {
        let r = check_scalar_ratio(0, 7);
        assert!(r.passed && (r.lhs - 1.0).abs() < 1e-15);
        let r = check_ratio_bound(&p(&[1, 1]), 9, 2).unwrap();
        assert!(r.passed && r.margin > 0.0);
    }

    #[test]
    fn zonal_checks_examples() {
        let t = ZonalCoeffTable::build(4, 2, 4, 30).unwrap();
        let s = SymmetricMatrix::diag(&[1.0, -1.0]).unwrap();
        assert!(check_abs_bound(&p(&[2]), &s, &t).unwrap().passed);
        let psd = SymmetricMatrix::diag(&[1.0, 0.5]).unwrap();
        let r = check_abs_bound(&p(&[2]), &psd, &t).unwrap();
        assert!(r.passed && (r.lhs - r.rhs).abs() < 1e-15);
        let r = check_zonal_upper(&p(&[1]), &s, 1, &t).unwrap();
        assert!(r.passed);
        let r = check_zonal_lower(&p(&[1]), &SymmetricMatrix::diag(&[2.0, 1.0]).unwrap(), &t).unwrap();
        assert!(r.passed && r.rhs == 3.0 && (r.lhs - 1.0).abs() < 1e-15);
        let r = check_zonal_lower(&p(&[2, 1]), &SymmetricMatrix::identity(3), &t).unwrap();
        assert!(r.passed);
        assert!(check_zonal_lower(&p(&[1]), &s, &t).is_err());
    }

    #[test]
    fn fk_comparison_examples() {
        let t = ZonalCoeffTable::build(2, 2, 2, 30).unwrap();
        let c = check_fk_bound_and_compare(&p(&[1, 1]), &SymmetricMatrix::identity(3), 2, &t).unwrap();
        assert!(c.check.passed && c.ratio > 1.0);
        let c = spiked_fk_ratio(&p(&[1, 1]), 64, &t).unwrap();
        assert!(c.check.passed && c.ratio < 1.0);
        assert!(check_fk_bound_and_compare(&p(&[1]), &SymmetricMatrix::identity(3), 2, &t).is_err());
    }

    #[test]
    fn scalar_tightness_examples() {
        let r = check_scalar_tightness(&p(&[1]), 16, 1).unwrap();
        assert!(r.passed && (r.rhs - 1.0).abs() < 1e-12);
        let qs: Vec<f64> = (3..10).map(|j| scalar_tightness_value(&p(&[1, 1]), 1 << j, 2)).collect();
        assert!(qs.windows(2).all(|w| w[1] < w[0]) && qs.iter().all(|&q| q >= 1.0));
    }

    #[test]
    fn compositions_count() {
        assert_eq!(compositions(3, 2).len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
    }

    #[test]
    fn suite_passes_and_is_reproducible() {
        let a = run_suite(5, &[2, 3, 4, 6], DEFAULT_SEED, DEFAULT_INSTANCES).unwrap();
        for c in &a.checks {
            assert_eq!(c.failures, 0, "{} failed: {:?}", c.name, c.worst);
        }
        assert!(a.checks.iter().filter(|c| !c.name.contains("scalar") && !c.name.contains("spiked")).all(|c| c.instances >= 4));
        let b = run_suite(5, &[2, 3, 4, 6], DEFAULT_SEED, DEFAULT_INSTANCES).unwrap();
        assert_eq!(a, b);
    }
}
