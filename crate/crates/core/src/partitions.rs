//! Integer partitions and shifted factorials.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{domain, input, Error, Result};

/// Weakly decreasing vector of positive parts (zeros stripped).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Sorts descending and strips zero parts.
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.sort_unstable_by(|a, b| b.cmp(a));
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Partition(parts)
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `kappa_i`, 1-based, zero past the length.
    pub fn part(&self, i: usize) -> u32 {
        if i == 0 {
            0
        } else {
            self.0.get(i - 1).copied().unwrap_or(0)
        }
    }

    /// Multiplicities of the distinct part values, in descending value order.
    pub fn multiplicities(&self) -> Vec<(u32, usize)> {
        let mut out: Vec<(u32, usize)> = Vec::new();
        for &v in &self.0 {
            match out.last_mut() {
                Some((w, c)) if *w == v => *c += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

/// Accepts `κ=[3,1,1]`, `kappa=[3,1,1]`, `[3,1,1]`, `3,1,1` and `[]`.
impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut body = s.trim();
        for prefix in ["κ=", "kappa=", "k="] {
            if let Some(rest) = body.strip_prefix(prefix) {
                body = rest.trim();
            }
        }
        let body = body.trim_start_matches('[').trim_end_matches(']').trim();
        if body.is_empty() {
            return Ok(Partition::empty());
        }
        let parts = body
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| input(format!("bad partition literal {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(input(format!("partition parts must be weakly decreasing: {s:?}")));
        }
        Ok(Partition::new(parts))
    }
}

/// All partitions of `k` with at most `max_len` parts, descending lexicographic.
pub fn enumerate(k: u32, max_len: usize) -> Vec<Partition> {
    fn rec(remaining: u32, max_part: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition(cur.clone()));
            return;
        }
        if slots == 0 {
            return;
        }
        let top = remaining.min(max_part);
        for first in (1..=top).rev() {
            // the rest must fit in slots-1 parts of size <= first
            if (first as u64) * (slots as u64) < remaining as u64 {
                break;
            }
            cur.push(first);
            rec(remaining - first, first, slots - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, max_len, &mut Vec::new(), &mut out);
    out
}

/// Lexicographic order on partitions of equal weight.
pub fn lex_compare(kappa: &Partition, lambda: &Partition) -> Result<Ordering> {
    if kappa.weight() != lambda.weight() {
        return Err(domain(format!(
            "lexicographic order needs equal weights ({kappa} has {}, {lambda} has {})",
            kappa.weight(),
            lambda.weight()
        )));
    }
    let n = kappa.len().max(lambda.len());
    for i in 1..=n {
        match kappa.part(i).cmp(&lambda.part(i)) {
            Ordering::Equal => continue,
            other => return Ok(other),
        }
    }
    Ok(Ordering::Equal)
}

/// `(a)_k = a (a+1) ... (a+k-1)`.
pub fn shifted_factorial(a: f64, k: u32) -> f64 {
    (0..k).map(|j| a + j as f64).product()
}

pub fn shifted_factorial_exact(a: &BigRational, k: u32) -> BigRational {
    let mut acc = BigRational::one();
    let mut x = a.clone();
    for _ in 0..k {
        acc *= &x;
        x += BigRational::one();
    }
    acc
}

/// `(a)_kappa = prod_i (a - (i-1)/2)_{kappa_i}`.
pub fn partitional_shifted_factorial(a: f64, kappa: &Partition) -> f64 {
    kappa
        .parts()
        .iter()
        .enumerate()
        .map(|(i, &k)| shifted_factorial(a - 0.5 * i as f64, k))
        .product()
}

pub fn partitional_shifted_factorial_exact(a: &BigRational, kappa: &Partition) -> BigRational {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut acc = BigRational::one();
    let mut shift = BigRational::zero();
    for &k in kappa.parts() {
        acc *= shifted_factorial_exact(&(a - &shift), k);
        shift += &half;
    }
    acc
}

/// `d/2` as an exact rational.
pub fn half_integer(d: u64) -> BigRational {
    BigRational::new(BigInt::from(d), BigInt::from(2))
}

/// `rho_kappa = sum_i kappa_i (kappa_i - i)`, 1-based `i`.
pub fn rho(kappa: &Partition) -> i64 {
    kappa
        .parts()
        .iter()
        .enumerate()
        .map(|(i, &k)| k as i64 * (k as i64 - (i as i64 + 1)))
        .sum()
}
