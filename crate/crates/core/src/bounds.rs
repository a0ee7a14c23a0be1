//! Certified upper and lower bounds on the series remainders.
//!
//! Upper bounds have the shape `alpha_p * R_m(t)` with
//! `R_m(t) = sum_{k>=m} t^k / sqrt(k!)`, together with a closed-form
//! majorant of `R_m`. Every formula is evaluated as a logarithm first; the
//! public reports carry both the value and its natural log so that results
//! far outside the `f64` range stay usable.

use serde::Serialize;
use std::f64::consts::{E, PI};

use crate::error::{domain, Error, Result};
use crate::linalg::{langevin_gram, FrobeniusNorm, RectMatrix, SymmetricMatrix};
use crate::numeric::{ln_factorial, normal_upper_tail, LogSum};
use crate::series::scalar_1f2;

const LN_MAX: f64 = 709.0;

/// Growth regime `||Sigma|| <= gamma0 d^{r/2}` (Bingham) or `||B|| <= 2 gamma0^{1/2} d^{r/4}` (Langevin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthParams {
    pub gamma0: f64,
    pub r: f64,
}

impl GrowthParams {
    pub fn new(gamma0: f64, r: f64) -> Result<Self> {
        if !(gamma0 > 0.0) || !gamma0.is_finite() || !r.is_finite() {
            return Err(domain(format!("growth parameters need gamma0 > 0 and finite r; got gamma0={gamma0}, r={r}")));
        }
        Ok(Self { gamma0, r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Phi,
    Psi,
}

impl BoundKind {
    /// Upper end (exclusive) of the `r` range where the rate statements hold.
    pub fn r_limit(self) -> f64 {
        match self {
            BoundKind::Phi => 1.0,
            BoundKind::Psi => 3.0,
        }
    }

    pub fn r_in_range(self, r: f64) -> bool {
        (0.0..self.r_limit()).contains(&r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    pub alpha_p: f64,
    pub gamma1: f64,
    pub c_m: f64,
    #[serde(rename = "N")]
    pub n: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityFlags {
    /// Growth condition checked against an actual matrix; `None` when no matrix was supplied.
    pub growth: Option<bool>,
    pub r_in_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub t: f64,
    pub upper_series: f64,
    pub upper_closed: f64,
    pub lower: Option<f64>,
    pub ln_upper_series: f64,
    pub ln_upper_closed: f64,
    pub constants: BoundConstants,
    pub validity_flags: ValidityFlags,
}

pub fn alpha_p(p: u64) -> f64 {
    ln_alpha_p(p).exp()
}

fn ln_alpha_p(p: u64) -> f64 {
    let p = p as f64;
    (-(p - 1.0) * (2.0 * PI).ln() + p.ln()) / (4.0 * p)
}

pub fn gamma1() -> f64 {
    (3f64.sqrt() + 1.0) / 2.0
}

pub fn c_m(m: u32) -> f64 {
    let m = m as f64;
    E * (-m * (1.0 / m).ln_1p()).exp()
}

pub fn n_dim(n: u64) -> u64 {
    (n + 2) * (n - 1) / 2
}

fn from_ln(ln: f64, what: &str) -> Result<f64> {
    if ln > LN_MAX {
        return Err(Error::Overflow(format!("{what} = exp({ln:.6e})")));
    }
    Ok(ln.exp())
}

/// `ln R_m(t)`; `-inf` at `t = 0`.
pub fn ln_r_m_series(m: u32, t: f64) -> Result<f64> {
    if m < 1 {
        return Err(domain("R_m(t) needs m >= 1"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("R_m(t) needs finite t >= 0; got {t}")));
    }
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let lt = t.ln();
    let mut sum = LogSum::new();
    let mut k = m as u64;
    loop {
        let term = k as f64 * lt - 0.5 * ln_factorial(k);
        sum.add_ln(term);
        // once the ratio t/sqrt(k+1) drops below one the tail is geometric
        let ratio = t / ((k + 1) as f64).sqrt();
        if ratio < 1.0 {
            let ln_tail = term + ratio.ln() - (-ratio).ln_1p();
            if ln_tail < sum.ln_value() + (1e-17f64).ln() {
                break;
            }
        }
        k += 1;
        if k > 50_000_000 {
            return Err(Error::Resource(format!("R_m(t) did not converge for m={m}, t={t}")));
        }
    }
    Ok(sum.ln_value())
}

pub fn r_m_series(m: u32, t: f64) -> Result<f64> {
    from_ln(ln_r_m_series(m, t)?, "R_m(t)")
}

/// `ln` of the closed-form majorant `(4e/pi)^{1/4} (e/m)^{m/2-1/4} t^m exp(c_m t^2/2)`.
pub fn ln_r_m_closed(m: u32, t: f64) -> Result<f64> {
    if m < 2 {
        return Err(domain("closed-form R_m bound needs m >= 2"));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(domain(format!("closed-form R_m bound needs finite t >= 0; got {t}")));
    }
    if t == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mf = m as f64;
    Ok(0.25 * (4.0 * E / PI).ln() + (mf / 2.0 - 0.25) * (1.0 - mf.ln()) + mf * t.ln() + c_m(m) * t * t / 2.0)
}

pub fn r_m_closed(m: u32, t: f64) -> Result<f64> {
    from_ln(ln_r_m_closed(m, t)?, "closed-form R_m bound")
}

/// Sum of the positive eigenvalues.
pub fn trace_plus(a: &SymmetricMatrix) -> f64 {
    a.eigen().values.iter().filter(|&&x| x > 0.0).sum()
}

fn check_dims(d: u64, p: u64) -> Result<()> {
    if p < 1 || d < p {
        return Err(domain(format!("need d >= p >= 1; got d={d}, p={p}")));
    }
    Ok(())
}

pub fn t_phi_from_trace(tr_a_plus: f64, d: u64, p: u64, g: GrowthParams) -> Result<f64> {
    check_dims(d, p)?;
    Ok(g.gamma0 * gamma1() * (p as f64).sqrt() * tr_a_plus * (d as f64).powf(-(1.0 - g.r) / 2.0))
}

pub fn t_phi(a: &SymmetricMatrix, d: u64, p: u64, g: GrowthParams) -> Result<f64> {
    t_phi_from_trace(trace_plus(a), d, p, g)
}

/// Abscissa of the default Langevin upper bound, `2 gamma0 gamma1 p^{5/2} d^{-(3-r)/2}`.
pub fn t_psi(d: u64, p: u64, g: GrowthParams) -> Result<f64> {
    check_dims(d, p)?;
    Ok(2.0 * g.gamma0 * gamma1() * (p as f64).powf(2.5) * (d as f64).powf(-(3.0 - g.r) / 2.0))
}

/// Abscissa `2 gamma0 gamma1 p^{3/2} d^{-(1-r)/2}` of the Langevin bound that does hold.
///
/// Dividing by `(d/2)_kappa >= (d/2)^k / gamma1^k` already accounts for the
/// dimension once; the default abscissa charges it a second time through
/// `C_kappa(I_p)`, which is off by a factor `d^{-k}` and fails already for
/// `p = 1, d >= 6`. See the counterexample test below.
pub fn t_psi_corrected(d: u64, p: u64, g: GrowthParams) -> Result<f64> {
    check_dims(d, p)?;
    Ok(2.0 * g.gamma0 * gamma1() * (p as f64).powf(1.5) * (d as f64).powf(-(1.0 - g.r) / 2.0))
}

/// Upper-bound report for abscissa `t` and parameter `p`; `n` is the `N` constant reported alongside.
pub fn upper_from_t(m: u32, t: f64, p: u64, n: u64, r_in_range: bool) -> Result<BoundReport> {
    if m < 2 {
        return Err(domain("upper bounds need m >= 2"));
    }
    let la = ln_alpha_p(p);
    let ln_upper_series = la + ln_r_m_series(m, t)?;
    let ln_upper_closed = la + ln_r_m_closed(m, t)?;
    Ok(BoundReport {
        t,
        upper_series: from_ln(ln_upper_series, "upper_series")?,
        upper_closed: from_ln(ln_upper_closed, "upper_closed")?,
        lower: None,
        ln_upper_series,
        ln_upper_closed,
        constants: BoundConstants { alpha_p: la.exp(), gamma1: gamma1(), c_m: c_m(m), n },
        validity_flags: ValidityFlags { growth: None, r_in_range },
    })
}

pub fn phi_upper(m: u32, a: &SymmetricMatrix, d: u64, p: u64, g: GrowthParams) -> Result<BoundReport> {
    if a.order() as u64 != p {
        return Err(domain(format!("A is {0}x{0}, expected p={p}", a.order())));
    }
    let t = t_phi(a, d, p, g)?;
    upper_from_t(m, t, p, n_dim(d), BoundKind::Phi.r_in_range(g.r))
}

/// Langevin upper bound with the default abscissa [`t_psi`].
pub fn psi_upper(m: u32, d: u64, p: u64, g: GrowthParams) -> Result<BoundReport> {
    let t = t_psi(d, p, g)?;
    upper_from_t(m, t, p, n_dim(p), BoundKind::Psi.r_in_range(g.r))
}

/// Langevin upper bound with the abscissa [`t_psi_corrected`].
pub fn psi_upper_corrected(m: u32, d: u64, p: u64, g: GrowthParams) -> Result<BoundReport> {
    let t = t_psi_corrected(d, p, g)?;
    upper_from_t(m, t, p, n_dim(p), BoundKind::Phi.r_in_range(g.r))
}

/// `(satisfied, minimal gamma0 at r)` for the growth hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthCheck {
    pub satisfied: bool,
    pub minimal_gamma0: f64,
}

pub fn check_growth<M: FrobeniusNorm>(m: &M, d: u64, g: GrowthParams, kind: BoundKind) -> GrowthCheck {
    check_growth_norm(m.frobenius(), d, g, kind)
}

pub fn check_growth_norm(norm: f64, d: u64, g: GrowthParams, kind: BoundKind) -> GrowthCheck {
    let df = d as f64;
    let minimal_gamma0 = match kind {
        BoundKind::Phi => norm / df.powf(g.r / 2.0),
        BoundKind::Psi => norm * norm / (4.0 * df.powf(g.r / 2.0)),
    };
    // relative slack absorbs the rounding in the norm itself
    GrowthCheck { satisfied: minimal_gamma0 <= g.gamma0 * (1.0 + 1e-12), minimal_gamma0 }
}

/// Smallest admissible `gamma0` at `r = 0`, floored away from zero.
pub fn minimal_growth(norm: f64, d: u64, kind: BoundKind) -> GrowthParams {
    let g = check_growth_norm(norm, d, GrowthParams { gamma0: 1.0, r: 0.0 }, kind).minimal_gamma0;
    GrowthParams { gamma0: g.max(f64::MIN_POSITIVE), r: 0.0 }
}

fn positive_definite_min(m: &SymmetricMatrix, name: &str) -> Result<f64> {
    let e = m.eigen();
    let min = e.min();
    if !(min > 0.0) {
        return Err(domain(format!("{name} must be positive definite; smallest eigenvalue {min}")));
    }
    Ok(min)
}

/// Ingredients shared by the two forms of the Bingham lower bound.
struct PhiLowerParts {
    ln_prefactor: f64,
    mu: f64,
}

fn phi_lower_parts(m: u32, a: &SymmetricMatrix, sigma: &SymmetricMatrix, d: u64, p: u64) -> Result<PhiLowerParts> {
    if m < 1 {
        return Err(domain("lower bounds need m >= 1"));
    }
    check_dims(d, p)?;
    if a.order() as u64 != p || sigma.order() as u64 != d {
        return Err(domain(format!(
            "shape mismatch: A is {}x{}, Sigma is {}x{}, expected p={p}, d={d}",
            a.order(),
            a.order(),
            sigma.order(),
            sigma.order()
        )));
    }
    positive_definite_min(a, "A")?;
    positive_definite_min(sigma, "Sigma")?;
    let sigma_p = sigma.eigen().values[p as usize - 1];
    let tau = sigma_p * a.trace();
    let n = n_dim(d) as f64;
    let mf = m as f64;
    let ln_q = ((1.0 + mf) / (2.0 + mf)).ln();
    Ok(PhiLowerParts {
        ln_prefactor: mf * n * (2.0 + mf).ln() - (1.0 + mf) * n * (1.0 + mf).ln(),
        mu: (n * ln_q).exp() * tau,
    })
}

/// `ln sum_{k>=m} mu^k / k!`.
fn ln_exp_tail(m: u32, mu: f64) -> f64 {
    if mu == 0.0 {
        return if m == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lm = mu.ln();
    let mut sum = LogSum::new();
    let mut k = m as u64;
    loop {
        let term = k as f64 * lm - ln_factorial(k);
        sum.add_ln(term);
        let ratio = mu / (k + 1) as f64;
        if ratio < 0.5 {
            let ln_tail = term + ratio.ln() - (-ratio).ln_1p();
            if ln_tail < sum.ln_value() + (1e-17f64).ln() {
                break;
            }
        }
        k += 1;
    }
    sum.ln_value()
}

/// `ln` of the Bingham lower bound, summed directly in log space.
pub fn ln_phi_lower(m: u32, a: &SymmetricMatrix, sigma: &SymmetricMatrix, d: u64, p: u64) -> Result<f64> {
    let parts = phi_lower_parts(m, a, sigma, d, p)?;
    Ok(parts.ln_prefactor + ln_exp_tail(m, parts.mu))
}

/// Bingham lower bound with prefactor `(2+m)^{m N_d} (1+m)^{-(1+m) N_d}`.
pub fn phi_lower(m: u32, a: &SymmetricMatrix, sigma: &SymmetricMatrix, d: u64, p: u64) -> Result<f64> {
    Ok(ln_phi_lower(m, a, sigma, d, p)?.exp())
}

/// `P(W >= m)` for `W ~ Poisson(mu)`.
pub fn poisson_upper_tail(m: u32, mu: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if mu == 0.0 {
        return 0.0;
    }
    let mut below = 0.0;
    let mut term = (-mu).exp();
    for k in 0..m {
        if k > 0 {
            term *= mu / k as f64;
        }
        below += term;
    }
    if below <= 0.9 {
        (1.0 - below).max(0.0)
    } else {
        // complement would cancel: sum the upper tail directly
        (ln_exp_tail(m, mu) - mu).exp()
    }
}

/// Continuity-corrected normal approximation `P(Z >= (m - 1/2 - mu) / sqrt(mu))`.
pub fn poisson_upper_tail_normal(m: u32, mu: f64) -> f64 {
    normal_upper_tail((m as f64 - 0.5 - mu) / mu.sqrt())
}

/// Poisson form `prefactor * e^mu * P(W >= m)` of the Bingham lower bound.
pub fn phi_lower_poisson(m: u32, a: &SymmetricMatrix, sigma: &SymmetricMatrix, d: u64, p: u64) -> Result<f64> {
    let parts = phi_lower_parts(m, a, sigma, d, p)?;
    Ok((parts.ln_prefactor + parts.mu).exp() * poisson_upper_tail(m, parts.mu))
}

/// The Poisson form with the normal approximation in place of the exact tail.
pub fn phi_lower_normal_approx(m: u32, a: &SymmetricMatrix, sigma: &SymmetricMatrix, d: u64, p: u64) -> Result<f64> {
    let parts = phi_lower_parts(m, a, sigma, d, p)?;
    Ok((parts.ln_prefactor + parts.mu).exp() * poisson_upper_tail_normal(m, parts.mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiLower {
    pub full: f64,
    pub single_term: f64,
    pub ln_full: f64,
    pub ln_single_term: f64,
}

pub fn psi_lower(m: u32, b: &RectMatrix) -> Result<PsiLower> {
    if m < 1 {
        return Err(domain("lower bounds need m >= 1"));
    }
    let (d, p) = (b.rows() as u64, b.cols() as u64);
    let beta = langevin_gram(b).eigen();
    let beta_p = beta.min().max(0.0);
    let smallest_singular = 2.0 * beta_p.sqrt();
    if !(smallest_singular > 1e-12 * b.frobenius_norm()) {
        return Err(domain(format!("B must have full column rank; smallest singular value {smallest_singular}")));
    }
    let (mf, df) = (m as f64, d as f64);
    let n = n_dim(p) as f64;
    let x = 2.0 * p as f64 * beta_p;
    let ln_single_term = -n * (1.0 + mf).ln() - mf * (df + mf).ln() + mf * x.ln() - ln_factorial(m as u64);
    let mu = (n * ((1.0 + mf) / (2.0 + mf)).ln()).exp() * x / E;
    let ln_full = ln_single_term + scalar_1f2(mf + 1.0, df + 1.0 + mf, mu)?.ln();
    Ok(PsiLower { full: ln_full.exp(), single_term: ln_single_term.exp(), ln_full, ln_single_term })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MSelection {
    Found { m: u32, bound: f64 },
    NotFound { min_bound: f64, argmin: u32 },
}

/// Smallest `m` in `[2, m_max]` whose closed-form bound `alpha_p r_m_closed(m, t)` is at most `target_tol`.
pub fn select_m(target_tol: f64, kind: BoundKind, t: f64, p: u64, m_max: u32) -> Result<MSelection> {
    let _ = kind;
    if m_max < 2 {
        return Err(domain("select_m needs m_max >= 2"));
    }
    if !(target_tol > 0.0) {
        return Err(domain("target tolerance must be positive"));
    }
    let la = ln_alpha_p(p);
    let ln_tol = target_tol.ln();
    let mut best = (f64::INFINITY, 2);
    for m in 2..=m_max {
        let lb = la + ln_r_m_closed(m, t)?;
        if lb <= ln_tol {
            return Ok(MSelection::Found { m, bound: lb.exp() });
        }
        if lb < best.0 {
            best = (lb, m);
        }
    }
    Ok(MSelection::NotFound { min_bound: best.0.exp(), argmin: best.1 })
}
