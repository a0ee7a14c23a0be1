//! Truncated hypergeometric series of matrix argument.
//!
//! ```text
//! Phi_{d,p}(A, Sigma) = sum_k 1/k! sum_{|kappa|=k, l(kappa)<=p} C_kappa(A) C_kappa(Sigma) / C_kappa(I_d)
//! Psi_{d,p}(B)        = sum_k 1/k! sum_{|kappa|=k, l(kappa)<=p} C_kappa(B'B/4) / (d/2)_kappa
//! ```
//!
//! Only spectra enter. Each degree is accumulated with compensated
//! summation, then the degrees are summed again the same way.

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::sync::Arc;

use crate::bounds::{self, BoundKind};
use crate::error::{domain, Error, Result};
use crate::linalg::{langevin_gram, RectMatrix, SymmetricMatrix};
use crate::numeric::CompensatedSum;
use crate::partitions::{half_integer, partitional_shifted_factorial, partitional_shifted_factorial_exact};
use crate::zonal::{factorial, zonal_unit_value, Rational, ZonalCoeffTable, DEFAULT_WEIGHT_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Floating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SeriesParams {
    pub d: u64,
    pub p: u64,
    /// Degrees `0..m` are summed.
    pub m: u32,
    /// Last degree (exclusive) summed explicitly by the remainder references.
    pub k_max: u32,
    pub mode: Mode,
}

impl SeriesParams {
    pub fn new(d: u64, p: u64, m: u32, k_max: u32) -> Result<Self> {
        if p < 1 || d < p {
            return Err(domain(format!("need d >= p >= 1; got d={d}, p={p}")));
        }
        if m < 1 {
            return Err(domain("truncation order m must be >= 1"));
        }
        if k_max < m {
            return Err(domain(format!("k_max={k_max} must be >= m={m}")));
        }
        Ok(Self { d, p, m, k_max, mode: Mode::Floating })
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxReport {
    pub value: f64,
    pub degree_terms: Vec<f64>,
    pub remainder_upper_series: Option<f64>,
    pub remainder_upper_closed: Option<f64>,
    pub remainder_lower: Option<f64>,
    pub t_value: f64,
}

/// A remainder known to lie in `[midpoint - radius, midpoint + radius]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemainderInterval {
    pub midpoint: f64,
    pub radius: f64,
    pub k_max: u32,
}

impl RemainderInterval {
    pub fn lo(&self) -> f64 {
        self.midpoint - self.radius
    }

    pub fn hi(&self) -> f64 {
        self.midpoint + self.radius
    }
}

/// Table able to evaluate weights `< max_degree` for `l(kappa) <= p` at spectra of size up to `n`.
pub fn table_for(max_degree: u32, p: u64, n: u64) -> Result<Arc<ZonalCoeffTable>> {
    let w = max_degree.saturating_sub(1);
    let lambda_len = (n as usize).min(w as usize).max(p as usize);
    ZonalCoeffTable::shared(w, p as usize, lambda_len)
}

fn check_table(table: &ZonalCoeffTable, top_degree: u32, p: u64, n: usize) -> Result<()> {
    if top_degree > 0 && table.max_weight < top_degree - 1 {
        return Err(domain(format!(
            "table covers weight {} but degree {} is needed",
            table.max_weight,
            top_degree - 1
        )));
    }
    if top_degree > 1 && table.max_len < (p as usize).min(top_degree as usize - 1) {
        return Err(domain(format!("table covers length {} but p={p}", table.max_len)));
    }
    let needed = n.min(top_degree.saturating_sub(1) as usize);
    if needed > table.lambda_len {
        return Err(domain(format!("table keeps monomials up to length {}, need {needed}", table.lambda_len)));
    }
    Ok(())
}

fn exact_diagonal(m: &SymmetricMatrix, name: &str) -> Result<Vec<Rational>> {
    if !m.is_diagonal() {
        return Err(domain(format!("exact mode needs a diagonal {name}")));
    }
    m.diagonal()
        .into_iter()
        .map(|x| BigRational::from_float(x).ok_or_else(|| domain(format!("non-finite entry in {name}"))))
        .collect()
}

fn factorial_f64(k: u32) -> f64 {
    factorial(k as u64).to_f64().unwrap_or(f64::INFINITY)
}

/// Per-degree weight for the Bingham and confluent series: either `C(Sigma)/C(I_d)` at the second spectrum or a coefficient.
enum Second<'a> {
    Spectrum(&'a [f64]),
    Coefficient(Box<dyn Fn(&crate::Partition) -> f64 + 'a>),
}

/// `(1/k!) sum_{l(kappa) <= p} C_kappa(first) * second(kappa)` for `k` in `degrees`.
fn degree_terms(
    table: &ZonalCoeffTable,
    first: &[f64],
    second: &Second,
    p: u64,
    d: u64,
    degrees: std::ops::Range<u32>,
) -> Result<Vec<f64>> {
    degrees
        .map(|k| {
            let ca = table.eval_weight(k, first)?;
            let cs = match second {
                Second::Spectrum(s) => Some(table.eval_weight(k, s)?),
                Second::Coefficient(_) => None,
            };
            let mut acc = CompensatedSum::new();
            for (i, (kappa, a)) in ca.iter().enumerate() {
                if kappa.len() as u64 > p || *a == 0.0 {
                    continue;
                }
                let w = match (second, &cs) {
                    (Second::Spectrum(_), Some(cs)) => {
                        let unit = zonal_unit_value(kappa, d)?.to_f64().unwrap_or(f64::INFINITY);
                        cs[i].1 / unit
                    }
                    (Second::Coefficient(f), _) => f(kappa),
                    _ => unreachable!(),
                };
                acc.add(a * w);
            }
            Ok(acc.value() / factorial_f64(k))
        })
        .collect()
}

fn degree_terms_exact_phi(
    table: &ZonalCoeffTable,
    a: &[Rational],
    s: &[Rational],
    p: u64,
    d: u64,
    degrees: std::ops::Range<u32>,
) -> Result<Vec<f64>> {
    degrees
        .map(|k| {
            let ca = table.eval_weight_exact(k, a)?;
            let cs = table.eval_weight_exact(k, s)?;
            let mut acc = Rational::zero();
            for ((kappa, x), (_, y)) in ca.iter().zip(cs.iter()) {
                if kappa.len() as u64 > p || x.is_zero() {
                    continue;
                }
                acc += x * y / zonal_unit_value(kappa, d)?;
            }
            acc /= BigRational::from_integer(factorial(k as u64));
            Ok(acc.to_f64().unwrap_or(f64::NAN))
        })
        .collect()
}

fn check_phi_shapes(a: &SymmetricMatrix, sigma: &SymmetricMatrix, params: &SeriesParams) -> Result<()> {
    if a.order() as u64 != params.p || sigma.order() as u64 != params.d {
        return Err(domain(format!(
            "shape mismatch: A is {0}x{0}, Sigma is {1}x{1}, expected p={2}, d={3}",
            a.order(),
            sigma.order(),
            params.p,
            params.d
        )));
    }
    Ok(())
}

fn phi_terms(
    a: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    params: &SeriesParams,
    table: &ZonalCoeffTable,
    degrees: std::ops::Range<u32>,
) -> Result<Vec<f64>> {
    check_phi_shapes(a, sigma, params)?;
    check_table(table, degrees.end, params.p, sigma.order())?;
    match params.mode {
        Mode::Floating => {
            let ea = a.eigen().values;
            let es = sigma.eigen().values;
            let second = Second::Spectrum(&es);
            degree_terms(table, &ea, &second, params.p, params.d, degrees)
        }
        Mode::Exact => {
            let ea = exact_diagonal(a, "A")?;
            let es = exact_diagonal(sigma, "Sigma")?;
            degree_terms_exact_phi(table, &ea, &es, params.p, params.d, degrees)
        }
    }
}

fn phi_t(a: &SymmetricMatrix, sigma: &SymmetricMatrix, params: &SeriesParams) -> Result<f64> {
    let g = bounds::minimal_growth(sigma.frobenius_norm(), params.d, BoundKind::Phi);
    bounds::t_phi(a, params.d, params.p, g)
}

/// Partial sum of degrees `0..m` of the Bingham constant, with the bounds that apply.
///
/// The upper bounds use the smallest admissible `gamma0` at `r = 0`; the
/// lower bound is filled in when `A` and `Sigma` are positive definite.
pub fn phi_truncated(
    a: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    params: &SeriesParams,
    table: &ZonalCoeffTable,
) -> Result<ApproxReport> {
    let degree_terms = phi_terms(a, sigma, params, table, 0..params.m)?;
    let value = degree_terms.iter().copied().collect::<CompensatedSum>().value();
    let t_value = phi_t(a, sigma, params)?;
    let (mut upper_series, mut upper_closed) = (None, None);
    if params.m >= 2 {
        let r = bounds::upper_from_t(params.m, t_value, params.p, bounds::n_dim(params.d), true)?;
        upper_series = Some(r.upper_series);
        upper_closed = Some(r.upper_closed);
    }
    let remainder_lower = bounds::phi_lower(params.m, a, sigma, params.d, params.p).ok();
    Ok(ApproxReport {
        value,
        degree_terms,
        remainder_upper_series: upper_series,
        remainder_upper_closed: upper_closed,
        remainder_lower,
        t_value,
    })
}

/// Certifies a tail: explicit terms for `m..k_max`, padded by the upper bound at `k_max`.
fn certify(terms: &[f64], m: u32, k_max: u32, t: f64, p: u64) -> Result<RemainderInterval> {
    let midpoint = terms.iter().copied().collect::<CompensatedSum>().value();
    let radius = if t == 0.0 {
        0.0
    } else {
        bounds::alpha_p(p) * bounds::r_m_series(k_max.max(1), t)?
    };
    if radius > 1e-3 * midpoint.abs() {
        return Err(Error::Resource(format!(
            "tail bound {radius:.3e} at k_max={k_max} exceeds 1e-3 of the partial tail {midpoint:.3e} (m={m}); raise k_max"
        )));
    }
    Ok(RemainderInterval { midpoint, radius, k_max })
}

/// Certified value of the Bingham remainder from degree `m`.
pub fn phi_remainder_reference(
    a: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    params: &SeriesParams,
    table: &ZonalCoeffTable,
) -> Result<RemainderInterval> {
    let terms = phi_terms(a, sigma, params, table, params.m..params.k_max)?;
    certify(&terms, params.m, params.k_max, phi_t(a, sigma, params)?, params.p)
}

/// Shortest certified Bingham remainder with `k_max` up to `cap`, using the shared tables.
pub fn phi_remainder_auto(
    a: &SymmetricMatrix,
    sigma: &SymmetricMatrix,
    d: u64,
    p: u64,
    m: u32,
    cap: u32,
) -> Result<RemainderInterval> {
    let cap = cap.min(DEFAULT_WEIGHT_CAP + 1);
    let params = SeriesParams::new(d, p, m, cap)?;
    let table = table_for(cap, p, d)?;
    let terms = phi_terms(a, sigma, &params, &table, m..cap)?;
    let t = phi_t(a, sigma, &params)?;
    auto_certify(&terms, m, cap, t, p)
}

fn auto_certify(terms: &[f64], m: u32, cap: u32, t: f64, p: u64) -> Result<RemainderInterval> {
    let mut last = None;
    for k_max in (m + 1)..=cap {
        match certify(&terms[..(k_max - m) as usize], m, k_max, t, p) {
            Ok(r) => return Ok(r),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Resource(format!("no k_max in ({m}, {cap}] certifies the tail"))))
}

fn psi_terms(b: &RectMatrix, params: &SeriesParams, table: &ZonalCoeffTable, degrees: std::ops::Range<u32>) -> Result<Vec<f64>> {
    if b.rows() as u64 != params.d || b.cols() as u64 != params.p {
        return Err(domain(format!(
            "B is {}x{}, expected d={}, p={}",
            b.rows(),
            b.cols(),
            params.d,
            params.p
        )));
    }
    let gram = langevin_gram(b);
    check_table(table, degrees.end, params.p, gram.order())?;
    let half_d = params.d as f64 / 2.0;
    match params.mode {
        Mode::Floating => {
            let eb = gram.eigen().values;
            let coeff = Second::Coefficient(Box::new(move |kappa| 1.0 / partitional_shifted_factorial(half_d, kappa)));
            degree_terms(table, &eb, &coeff, params.p, params.d, degrees)
        }
        Mode::Exact => {
            let eb = exact_diagonal(&gram, "B'B/4")?;
            let hd = half_integer(params.d);
            degrees
                .map(|k| {
                    let mut acc = Rational::zero();
                    for (kappa, c) in table.eval_weight_exact(k, &eb)? {
                        if kappa.len() as u64 <= params.p {
                            acc += c / partitional_shifted_factorial_exact(&hd, &kappa);
                        }
                    }
                    acc /= BigRational::from_integer(factorial(k as u64));
                    Ok(acc.to_f64().unwrap_or(f64::NAN))
                })
                .collect()
        }
    }
}

/// Abscissa of the certified Langevin tail pad, from [`bounds::t_psi_corrected`].
fn psi_pad_t(b: &RectMatrix, params: &SeriesParams) -> Result<f64> {
    let g = bounds::minimal_growth(b.frobenius_norm(), params.d, BoundKind::Psi);
    if b.frobenius_norm() == 0.0 {
        return Ok(0.0);
    }
    bounds::t_psi_corrected(params.d, params.p, g)
}

/// Partial sum of degrees `0..m` of the Langevin constant.
///
/// `remainder_upper_*` and `t_value` follow the default bound
/// ([`bounds::psi_upper`]); the certified pad used by
/// [`psi_remainder_reference`] comes from [`bounds::psi_upper_corrected`].
pub fn psi_truncated(b: &RectMatrix, params: &SeriesParams, table: &ZonalCoeffTable) -> Result<ApproxReport> {
    let degree_terms = psi_terms(b, params, table, 0..params.m)?;
    let value = degree_terms.iter().copied().collect::<CompensatedSum>().value();
    let g = bounds::minimal_growth(b.frobenius_norm(), params.d, BoundKind::Psi);
    let t_value = if b.frobenius_norm() == 0.0 { 0.0 } else { bounds::t_psi(params.d, params.p, g)? };
    let (mut upper_series, mut upper_closed) = (None, None);
    if params.m >= 2 {
        let r = bounds::upper_from_t(params.m, t_value, params.p, bounds::n_dim(params.p), true)?;
        upper_series = Some(r.upper_series);
        upper_closed = Some(r.upper_closed);
    }
    let remainder_lower = bounds::psi_lower(params.m, b).ok().map(|l| l.full);
    Ok(ApproxReport {
        value,
        degree_terms,
        remainder_upper_series: upper_series,
        remainder_upper_closed: upper_closed,
        remainder_lower,
        t_value,
    })
}

/// Certified value of the Langevin remainder from degree `m`.
pub fn psi_remainder_reference(b: &RectMatrix, params: &SeriesParams, table: &ZonalCoeffTable) -> Result<RemainderInterval> {
    let terms = psi_terms(b, params, table, params.m..params.k_max)?;
    certify(&terms, params.m, params.k_max, psi_pad_t(b, params)?, params.p)
}

pub fn psi_remainder_auto(b: &RectMatrix, m: u32, cap: u32) -> Result<RemainderInterval> {
    let (d, p) = (b.rows() as u64, b.cols() as u64);
    let cap = cap.min(DEFAULT_WEIGHT_CAP + 1);
    let params = SeriesParams::new(d, p, m, cap)?;
    let table = table_for(cap, p, p)?;
    let terms = psi_terms(b, &params, &table, m..cap)?;
    auto_certify(&terms, m, cap, psi_pad_t(b, &params)?, p)
}

/// Partial sum of `1F1(p/2; d/2; Sigma)`, the Bingham series at `A = I_p`.
pub fn confluent_1f1_matrix(p: u64, d: u64, sigma: &SymmetricMatrix, m: u32, table: &ZonalCoeffTable) -> Result<f64> {
    if p < 1 || d < p {
        return Err(domain(format!("need d >= p >= 1; got d={d}, p={p}")));
    }
    if sigma.order() as u64 != d {
        return Err(domain(format!("Sigma is {0}x{0}, expected d={d}", sigma.order())));
    }
    check_table(table, m, p, sigma.order())?;
    let es = sigma.eigen().values;
    let (hp, hd) = (p as f64 / 2.0, d as f64 / 2.0);
    let coeff = Second::Coefficient(Box::new(move |kappa| {
        partitional_shifted_factorial(hp, kappa) / partitional_shifted_factorial(hd, kappa)
    }));
    let terms = degree_terms(table, &es, &coeff, p, d, 0..m)?;
    Ok(terms.into_iter().collect::<CompensatedSum>().value())
}

/// `1F2(1; b, c; x) = sum_k x^k / ((b)_k (c)_k)`, summed to relative 1e-15.
pub fn scalar_1f2(b: f64, c: f64, x: f64) -> Result<f64> {
    let nonpositive_int = |v: f64| v <= 0.0 && v.fract() == 0.0;
    if nonpositive_int(b) || nonpositive_int(c) {
        return Err(domain(format!("1F2 parameters must not be nonpositive integers; got b={b}, c={c}")));
    }
    let mut sum = CompensatedSum::new();
    let mut term = 1.0f64;
    let mut k = 0u64;
    loop {
        sum.add(term);
        let ratio = x / ((b + k as f64) * (c + k as f64));
        term *= ratio;
        k += 1;
        if !sum.value().is_finite() || !term.is_finite() {
            return Err(Error::Overflow(format!("1F2(1; {b}, {c}; {x})")));
        }
        // ratios shrink once k exceeds sqrt|x|, so a small term ends the sum
        if ratio.abs() < 0.5 && term.abs() <= 1e-16 * sum.value().abs() {
            break;
        }
        if term == 0.0 {
            break;
        }
        if k > 10_000_000 {
            return Err(Error::Resource(format!("1F2(1; {b}, {c}; {x}) did not converge")));
        }
    }
    Ok(sum.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    fn diag(v: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::diag(v).unwrap()
    }

    fn bessel_i0(z: f64) -> f64 {
        let mut s = 0.0;
        let mut term = 1.0;
        for k in 0..200 {
            if k > 0 {
                term *= (z / 2.0) * (z / 2.0) / (k as f64 * k as f64);
            }
            s += term;
        }
        s
    }

    fn kummer(a: f64, b: f64, x: f64, terms: u32) -> f64 {
        let mut s = 0.0;
        let mut term = 1.0;
        for k in 0..terms {
            if k > 0 {
                let kf = (k - 1) as f64;
                term *= (a + kf) / (b + kf) * x / k as f64;
            }
            s += term;
        }
        s
    }

    fn column(d: usize, entries: &[f64]) -> RectMatrix {
        let mut v = vec![0.0; d];
        v[..entries.len()].copy_from_slice(entries);
        RectMatrix::from_row_major(d, 1, v).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SeriesParams::new(2, 3, 2, 5).is_err());
        assert!(SeriesParams::new(3, 2, 0, 5).is_err());
        assert!(SeriesParams::new(3, 2, 6, 5).is_err());
        assert!(SeriesParams::new(3, 2, 2, 5).is_ok());
    }

    #[test]
    fn phi_trivial_and_scalar_cases() {
        let params = SeriesParams::new(3, 2, 5, 5).unwrap();
        let t = table_for(5, 2, 3).unwrap();
        let r = phi_truncated(&diag(&[1.0, 2.0]), &SymmetricMatrix::zeros(3), &params, &t).unwrap();
        assert_eq!(r.value, 1.0);
        let params = SeriesParams::new(1, 1, 25, 25).unwrap();
        let t = table_for(25, 1, 1).unwrap();
        let r = phi_truncated(&diag(&[0.7]), &diag(&[1.3]), &params, &t).unwrap();
        assert!(close(r.value, (0.7f64 * 1.3).exp(), 1e-14));
        let sum: f64 = r.degree_terms.iter().sum();
        assert!(close(r.value, sum, 1e-14));
    }

    #[test]
    fn phi_identity_a_gives_partial_exponential() {
        let s = diag(&[0.3, -0.2, 0.9]);
        let params = SeriesParams::new(3, 3, 8, 8).unwrap();
        let t = table_for(8, 3, 3).unwrap();
        let r = phi_truncated(&SymmetricMatrix::identity(3), &s, &params, &t).unwrap();
        let tr: f64 = 1.0;
        let want: f64 = (0..8).map(|k| tr.powi(k) / (1..=k).map(f64::from).product::<f64>()).sum();
        assert!(close(r.value, want, 1e-13));
    }

    #[test]
    fn exact_and_floating_agree() {
        let a = diag(&[0.5, 0.25]);
        let s = diag(&[0.75, 0.5, -0.25, 1.0]);
        let t = table_for(7, 2, 4).unwrap();
        let pf = SeriesParams::new(4, 2, 7, 7).unwrap();
        let fl = phi_truncated(&a, &s, &pf, &t).unwrap();
        let ex = phi_truncated(&a, &s, &pf.with_mode(Mode::Exact), &t).unwrap();
        assert!(close(fl.value, ex.value, 1e-14));
        let dense = SymmetricMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        assert!(phi_truncated(&dense, &s, &pf.with_mode(Mode::Exact), &t).is_err());
    }

    #[test]
    fn underbuilt_table_is_a_domain_error() {
        let t = ZonalCoeffTable::build(3, 1, 3, DEFAULT_WEIGHT_CAP).unwrap();
        let params = SeriesParams::new(3, 2, 4, 4).unwrap();
        let r = phi_truncated(&diag(&[1.0, 1.0]), &diag(&[1.0, 1.0, 1.0]), &params, &t);
        assert!(matches!(r, Err(Error::Domain(_))));
        let params = SeriesParams::new(3, 1, 9, 9).unwrap();
        assert!(matches!(phi_truncated(&diag(&[1.0]), &diag(&[1.0, 1.0, 1.0]), &params, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn phi_reference_examples() {
        let r = phi_remainder_auto(&diag(&[1.0]), &diag(&[1.0]), 1, 1, 2, 30).unwrap();
        assert!((r.midpoint - (std::f64::consts::E - 2.0)).abs() <= r.radius + 1e-14);
        let z = phi_remainder_auto(&SymmetricMatrix::zeros(2), &diag(&[1.0, 2.0, 3.0]), 3, 2, 3, 10);
        let z = z.unwrap();
        assert_eq!((z.midpoint, z.radius), (0.0, 0.0));
        let a = diag(&[0.6, 0.3]);
        let s = diag(&[0.5, 0.4, 0.2]);
        let mut prev = f64::INFINITY;
        for m in 1..6 {
            let r = phi_remainder_auto(&a, &s, 3, 2, m, 30).unwrap();
            assert!(r.midpoint <= prev);
            prev = r.midpoint;
        }
    }

    #[test]
    fn reference_needs_enough_terms() {
        let params = SeriesParams::new(1, 1, 2, 3).unwrap();
        let t = table_for(3, 1, 1).unwrap();
        assert!(matches!(
            phi_remainder_reference(&diag(&[1.0]), &diag(&[1.0]), &params, &t),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn telescoping_consistency() {
        let a = diag(&[0.8, 0.4]);
        let s = diag(&[0.9, 0.3, 0.1]);
        let t = table_for(30, 2, 3).unwrap();
        let mut totals = Vec::new();
        for m in 1..8 {
            let params = SeriesParams::new(3, 2, m, 30).unwrap();
            let head = phi_truncated(&a, &s, &params, &t).unwrap().value;
            let tail = phi_remainder_reference(&a, &s, &params, &t).unwrap();
            totals.push(head + tail.midpoint);
        }
        for w in totals.windows(2) {
            assert!(close(w[1], w[0], 1e-12));
        }
    }

    #[test]
    fn confluent_matches_phi_at_identity() {
        let s = SymmetricMatrix::from_rows(&[vec![0.5, 0.1, 0.0], vec![0.1, -0.3, 0.2], vec![0.0, 0.2, 0.4]]).unwrap();
        let t = table_for(9, 2, 3).unwrap();
        let params = SeriesParams::new(3, 2, 9, 9).unwrap();
        let phi = phi_truncated(&SymmetricMatrix::identity(2), &s, &params, &t).unwrap().value;
        let f = confluent_1f1_matrix(2, 3, &s, 9, &t).unwrap();
        assert!(close(f, phi, 1e-12));
        assert_eq!(confluent_1f1_matrix(2, 3, &SymmetricMatrix::zeros(3), 9, &t).unwrap(), 1.0);
    }

    #[test]
    fn confluent_scalar_kummer() {
        let t = table_for(25, 1, 2).unwrap();
        for &sig in &[0.2, 1.0, 2.5] {
            let f = confluent_1f1_matrix(1, 2, &diag(&[sig, 0.0]), 25, &t).unwrap();
            assert!(close(f, kummer(0.5, 1.0, sig, 25), 1e-13));
        }
        let tt = table_for(12, 3, 3).unwrap();
        let s = diag(&[0.4, 0.3, -0.2]);
        let f = confluent_1f1_matrix(3, 3, &s, 12, &tt).unwrap();
        let want: f64 = (0..12).map(|k| 0.5f64.powi(k) / (1..=k).map(f64::from).product::<f64>()).sum();
        assert!(close(f, want, 1e-13));
    }

    #[test]
    fn trace_identity_end_to_end() {
        let s = [0.2, 0.3, 0.1];
        let r = phi_remainder_auto(&SymmetricMatrix::identity(3), &diag(&s), 3, 3, 1, 31).unwrap();
        assert!(close(1.0 + r.midpoint, 0.6f64.exp(), 1e-10));
        // larger spectra: the certified pad is too loose, so compare the degree-30 partial sum
        let t = table_for(31, 3, 3).unwrap();
        let params = SeriesParams::new(3, 3, 31, 31).unwrap();
        for s in [[0.5, 1.0, 0.25], [2.0, 2.0, 1.0], [3.0, 1.5, 0.5]] {
            let v = phi_truncated(&SymmetricMatrix::identity(3), &diag(&s), &params, &t).unwrap().value;
            let tr: f64 = s.iter().sum();
            assert!(close(v, tr.exp(), 1e-10), "{v} vs {}", tr.exp());
        }
    }

    #[test]
    fn psi_bessel_and_cosh() {
        let t = table_for(30, 1, 1).unwrap();
        for &z in &[0.0, 0.5, 1.0, 2.0, 3.0] {
            let b = column(2, &[z * 0.6, z * 0.8]);
            let params = SeriesParams::new(2, 1, 30, 30).unwrap();
            let r = psi_truncated(&b, &params, &t).unwrap();
            assert!(close(r.value, bessel_i0(z), 1e-10), "z={z}");
            assert!(r.value >= 1.0);
        }
        assert!((bessel_i0(1.0) - 1.266066).abs() < 1e-6);
        let params = SeriesParams::new(1, 1, 30, 30).unwrap();
        let r = psi_truncated(&column(1, &[1.7]), &params, &t).unwrap();
        assert!(close(r.value, 1.7f64.cosh(), 1e-13));
    }

    #[test]
    fn psi_reference_examples() {
        let r = psi_remainder_auto(&column(2, &[1.0]), 2, 30).unwrap();
        let want = bessel_i0(1.0) - 1.25;
        assert!((r.midpoint - want).abs() <= r.radius + 1e-15);
        assert!((want - 0.016066).abs() < 1e-6);
        let z = psi_remainder_auto(&RectMatrix::zeros(3, 2).unwrap(), 2, 10).unwrap();
        assert_eq!((z.midpoint, z.radius), (0.0, 0.0));
    }

    #[test]
    fn spectral_invariance() {
        let a = SymmetricMatrix::from_rows(&[vec![0.7, 0.2], vec![0.2, 0.1]]).unwrap();
        let s = SymmetricMatrix::from_rows(&[vec![0.3, 0.1, 0.0], vec![0.1, 0.5, -0.2], vec![0.0, -0.2, 0.2]]).unwrap();
        let ea = a.eigen().values;
        let es = s.eigen().values;
        let t = table_for(8, 2, 3).unwrap();
        let params = SeriesParams::new(3, 2, 8, 8).unwrap();
        let x = phi_truncated(&a, &s, &params, &t).unwrap().value;
        let y = phi_truncated(&diag(&ea), &diag(&es), &params, &t).unwrap().value;
        assert!(close(x, y, 1e-10));
    }

    #[test]
    fn scalar_1f2_values() {
        assert_eq!(scalar_1f2(2.0, 3.0, 0.0).unwrap(), 1.0);
        for &x in &[0.25, 1.0, 9.0, 100.0] {
            assert!(close(scalar_1f2(1.0, 1.0, x).unwrap(), bessel_i0(2.0 * f64::sqrt(x)), 1e-13));
        }
        let mut prev = 0.0;
        for i in 0..20 {
            let v = scalar_1f2(3.0, 7.5, i as f64 * 0.7).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(scalar_1f2(-1.0, 2.0, 1.0).is_err());
        assert!(matches!(scalar_1f2(1.0, 1.0, 1e10), Err(Error::Overflow(_))));
    }
}
