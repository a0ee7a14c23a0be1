//! Zonal polynomials `C_kappa` in the monomial symmetric basis.
//!
//! Coefficients `c_{kappa,lambda}` are generated from the Laplace-Beltrami
//! eigenfunction recurrence: seeded with `c_{kappa,kappa} = 1`, each lower
//! `lambda` collects contributions from every partition `mu` reachable by
//! moving `t` units from part `j` to an earlier part `i`,
//!
//! ```text
//! c_{kappa,lambda} = sum_{lambda < mu <= kappa} ((lambda_i + t) - (lambda_j - t)) c_{kappa,mu} / (rho_kappa - rho_lambda)
//! ```
//!
//! and the row is then rescaled so that `C_kappa(I_l)`, `l = l(kappa)`,
//! matches the closed product formula of [`zonal_unit_value`]. Everything is
//! exact; floating copies of the coefficients are kept for fast evaluation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::ops::{Add, Mul};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{domain, Error, Result};
use crate::numeric::CompensatedSum;
use crate::partitions::{self, enumerate, half_integer, rho, Partition};

pub type Rational = BigRational;

/// Largest weight [`build_table`] accepts unless a larger cap is passed.
pub const DEFAULT_WEIGHT_CAP: u32 = 30;

const CACHE_FORMAT: &str = "# stiefel-norm zonal table v1";

/// Exact `C_kappa(I_d)`.
pub fn zonal_unit_value(kappa: &Partition, d: u64) -> Result<Rational> {
    let l = kappa.len();
    if (d as usize) < l {
        return Err(domain(format!("C_kappa(I_d) needs d >= l(kappa); got d={d}, kappa={kappa}")));
    }
    let k = kappa.weight() as u64;
    let mut num = BigInt::from(4u32).pow(k as u32) * factorial(k);
    let mut den = BigInt::one();
    for i in 1..=l {
        for j in (i + 1)..=l {
            num *= 2 * kappa.part(i) as i64 - 2 * kappa.part(j) as i64 - i as i64 + j as i64;
        }
        den *= factorial(2 * kappa.part(i) as u64 + (l - i) as u64);
    }
    Ok(BigRational::new(num, den) * partitions::partitional_shifted_factorial_exact(&half_integer(d), kappa))
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, j| acc * j)
}

/// Number of distinct monomials of shape `lambda` in `n` variables, i.e. `M_lambda(1,...,1)`.
pub fn monomial_count(lambda: &Partition, n: usize) -> BigInt {
    let l = lambda.len();
    if l > n {
        return BigInt::zero();
    }
    let mut c = BigInt::one();
    for j in (n - l + 1)..=n {
        c *= j;
    }
    for (_, m) in lambda.multiplicities() {
        c /= factorial(m as u64);
    }
    c
}

/// `M_lambda(x)`: sum of the distinct monomials `x_{j1}^{lambda_1} ... x_{jl}^{lambda_l}`.
///
/// Dynamic program over the variables; the state is the multiset of parts
/// not yet assigned, so every distinct monomial is produced exactly once.
pub fn monomial_value<T>(lambda: &Partition, eigs: &[T]) -> T
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    if lambda.len() > eigs.len() {
        return T::zero();
    }
    let mult = lambda.multiplicities();
    let radix: Vec<usize> = mult.iter().map(|&(_, m)| m + 1).collect();
    let nstates: usize = radix.iter().product();
    let mut stride = vec![1usize; mult.len()];
    for i in 1..mult.len() {
        stride[i] = stride[i - 1] * radix[i - 1];
    }
    let full = nstates - 1; // all counts at their maximum
    let mut dp = vec![T::zero(); nstates];
    dp[full] = T::one();
    for x in eigs {
        let powers: Vec<T> = mult.iter().map(|&(v, _)| num_traits::pow(x.clone(), v as usize)).collect();
        let mut next = dp.clone();
        for (state, val) in dp.iter().enumerate() {
            if val.is_zero() {
                continue;
            }
            for (i, pw) in powers.iter().enumerate() {
                if !(state / stride[i]).is_multiple_of(radix[i]) {
                    let s2 = state - stride[i];
                    next[s2] = next[s2].clone() + val.clone() * pw.clone();
                }
            }
        }
        dp = next;
    }
    dp[0].clone()
}

/// Coefficients of one `C_kappa` against the monomial basis of its weight.
#[derive(Debug, Clone)]
pub struct KappaRow {
    pub kappa: Partition,
    /// `(lambda index in the weight block, c_{kappa,lambda})`, nonzero entries only.
    pub exact: Vec<(usize, Rational)>,
    pub float: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct WeightBlock {
    pub weight: u32,
    /// Monomial shapes of this weight, descending lexicographic.
    pub lambdas: Vec<Partition>,
    pub rows: Vec<KappaRow>,
    kappa_index: HashMap<Partition, usize>,
}

/// Exact zonal coefficient table for `|kappa| <= max_weight`, `l(kappa) <= max_len`.
///
/// Monomial shapes are kept up to length `lambda_len`, which is enough to
/// evaluate at any spectrum with at most `lambda_len` entries: the recurrence
/// for a shape only ever looks at shapes of equal or smaller length.
#[derive(Debug, Clone)]
pub struct ZonalCoeffTable {
    pub max_weight: u32,
    pub max_len: usize,
    pub lambda_len: usize,
    blocks: Vec<WeightBlock>,
}

/// Builds all rows with every monomial shape retained.
pub fn build_table(max_weight: u32, max_len: usize) -> Result<ZonalCoeffTable> {
    ZonalCoeffTable::build(max_weight, max_len, max_weight as usize, DEFAULT_WEIGHT_CAP)
}

impl ZonalCoeffTable {
    pub fn build(max_weight: u32, max_len: usize, lambda_len: usize, cap: u32) -> Result<Self> {
        if max_weight > cap {
            return Err(Error::Resource(format!("zonal table weight {max_weight} exceeds cap {cap}")));
        }
        if max_len == 0 {
            return Err(domain("zonal table max_len must be >= 1"));
        }
        let lambda_len = lambda_len.max(max_len).max(1);
        let blocks = (0..=max_weight)
            .map(|k| build_block(k, max_len, lambda_len))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { max_weight, max_len, lambda_len, blocks })
    }

    /// Process-wide memoized table covering the request.
    pub fn shared(max_weight: u32, max_len: usize, lambda_len: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<Vec<Arc<ZonalCoeffTable>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        if let Some(t) = cache.lock().unwrap().iter().find(|t| t.covers(max_weight, max_len, lambda_len)) {
            return Ok(Arc::clone(t));
        }
        let t = Arc::new(Self::build(max_weight, max_len, lambda_len, DEFAULT_WEIGHT_CAP)?);
        cache.lock().unwrap().push(Arc::clone(&t));
        Ok(t)
    }

    pub fn covers(&self, max_weight: u32, max_len: usize, lambda_len: usize) -> bool {
        self.max_weight >= max_weight && self.max_len >= max_len && self.lambda_len >= lambda_len.max(max_len)
    }

    /// Key used in cache file names and provenance headers.
    pub fn cache_key(&self) -> String {
        cache_key(self.max_weight, self.max_len, self.lambda_len)
    }

    pub fn block(&self, weight: u32) -> Option<&WeightBlock> {
        self.blocks.get(weight as usize)
    }

    pub fn blocks(&self) -> &[WeightBlock] {
        &self.blocks
    }

    pub fn row(&self, kappa: &Partition) -> Result<(&WeightBlock, &KappaRow)> {
        let block = self
            .block(kappa.weight())
            .ok_or_else(|| domain(format!("{kappa} exceeds table weight {}", self.max_weight)))?;
        let idx = block
            .kappa_index
            .get(kappa)
            .ok_or_else(|| domain(format!("{kappa} is longer than table max_len {}", self.max_len)))?;
        Ok((block, &block.rows[*idx]))
    }

    /// `c_{kappa,lambda}` (zero when absent).
    pub fn coeff(&self, kappa: &Partition, lambda: &Partition) -> Result<Rational> {
        let (block, row) = self.row(kappa)?;
        Ok(row
            .exact
            .iter()
            .find(|(i, _)| &block.lambdas[*i] == lambda)
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Rational::zero))
    }

    fn check_dim(&self, weight: u32, n: usize) -> Result<()> {
        if n.min(weight as usize) > self.lambda_len {
            return Err(domain(format!(
                "table keeps monomials up to length {}, spectrum has {n} entries",
                self.lambda_len
            )));
        }
        Ok(())
    }

    /// `C_kappa` at a spectrum, floating point.
    pub fn eval(&self, kappa: &Partition, eigs: &[f64]) -> Result<f64> {
        self.check_dim(kappa.weight(), eigs.len())?;
        let (block, row) = self.row(kappa)?;
        Ok(row
            .float
            .iter()
            .map(|(i, c)| c * monomial_value(&block.lambdas[*i], eigs))
            .collect::<CompensatedSum>()
            .value())
    }

    /// `C_kappa` at a rational spectrum, exactly.
    pub fn eval_exact(&self, kappa: &Partition, eigs: &[Rational]) -> Result<Rational> {
        self.check_dim(kappa.weight(), eigs.len())?;
        let (block, row) = self.row(kappa)?;
        Ok(row
            .exact
            .iter()
            .fold(Rational::zero(), |acc, (i, c)| acc + c * monomial_value(&block.lambdas[*i], eigs)))
    }

    /// `C_kappa(eigs)` for every stored `kappa` of one weight, sharing the monomial values.
    pub fn eval_weight(&self, weight: u32, eigs: &[f64]) -> Result<Vec<(Partition, f64)>> {
        self.check_dim(weight, eigs.len())?;
        let block = self
            .block(weight)
            .ok_or_else(|| domain(format!("weight {weight} exceeds table weight {}", self.max_weight)))?;
        let m: Vec<f64> = block.lambdas.iter().map(|l| monomial_value(l, eigs)).collect();
        Ok(block
            .rows
            .iter()
            .map(|r| {
                let v = r.float.iter().map(|(i, c)| c * m[*i]).collect::<CompensatedSum>().value();
                (r.kappa.clone(), v)
            })
            .collect())
    }

    pub fn eval_weight_exact(&self, weight: u32, eigs: &[Rational]) -> Result<Vec<(Partition, Rational)>> {
        self.check_dim(weight, eigs.len())?;
        let block = self
            .block(weight)
            .ok_or_else(|| domain(format!("weight {weight} exceeds table weight {}", self.max_weight)))?;
        let m: Vec<Rational> = block.lambdas.iter().map(|l| monomial_value(l, eigs)).collect();
        Ok(block
            .rows
            .iter()
            .map(|r| {
                let v = r.exact.iter().fold(Rational::zero(), |acc, (i, c)| acc + c * &m[*i]);
                (r.kappa.clone(), v)
            })
            .collect())
    }

    /// Writes the textual cache format: a header then one `kappa lambda num den` line per coefficient.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CACHE_FORMAT}")?;
        writeln!(w, "# max_weight={} max_len={} lambda_len={}", self.max_weight, self.max_len, self.lambda_len)?;
        for block in &self.blocks {
            for row in &block.rows {
                for (i, c) in &row.exact {
                    writeln!(w, "{} {} {} {}", row.kappa, block.lambdas[*i], c.numer(), c.denom())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let bad = |msg: &str| Error::Input(format!("zonal cache: {msg}"));
        let mut lines = r.lines();
        let magic = lines.next().ok_or_else(|| bad("empty file"))??;
        if magic.trim() != CACHE_FORMAT {
            return Err(bad("unknown format header"));
        }
        let header = lines.next().ok_or_else(|| bad("missing parameters"))??;
        let mut params = HashMap::new();
        for kv in header.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = kv.split_once('=') {
                params.insert(k.to_string(), v.parse::<usize>().map_err(|_| bad("bad parameter"))?);
            }
        }
        let get = |k: &str| params.get(k).copied().ok_or_else(|| bad("missing parameter"));
        let (max_weight, max_len, lambda_len) = (get("max_weight")? as u32, get("max_len")?, get("lambda_len")?);
        let mut blocks: Vec<WeightBlock> = (0..=max_weight)
            .map(|k| {
                let lambdas = enumerate(k, lambda_len);
                let kappas = enumerate(k, max_len);
                let kappa_index = kappas.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
                let rows = kappas
                    .into_iter()
                    .map(|kappa| KappaRow { kappa, exact: Vec::new(), float: Vec::new() })
                    .collect();
                WeightBlock { weight: k, lambdas, rows, kappa_index }
            })
            .collect();
        for line in lines {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.is_empty() || f[0].starts_with('#') {
                continue;
            }
            if f.len() != 4 {
                return Err(bad("expected `kappa lambda num den`"));
            }
            let kappa: Partition = f[0].parse()?;
            let lambda: Partition = f[1].parse()?;
            let num: BigInt = f[2].parse().map_err(|_| bad("bad numerator"))?;
            let den: BigInt = f[3].parse().map_err(|_| bad("bad denominator"))?;
            if den.is_zero() {
                return Err(bad("zero denominator"));
            }
            let block = blocks.get_mut(kappa.weight() as usize).ok_or_else(|| bad("kappa out of range"))?;
            let li = block.lambdas.iter().position(|l| *l == lambda).ok_or_else(|| bad("lambda out of range"))?;
            let ki = *block.kappa_index.get(&kappa).ok_or_else(|| bad("kappa out of range"))?;
            let c = BigRational::new(num, den);
            block.rows[ki].float.push((li, c.to_f64().unwrap_or(f64::NAN)));
            block.rows[ki].exact.push((li, c));
        }
        Ok(Self { max_weight, max_len, lambda_len, blocks })
    }

    /// Loads `dir/<key>.txt` when present, otherwise builds and writes it.
    pub fn load_or_build(dir: &Path, max_weight: u32, max_len: usize, lambda_len: usize, cap: u32) -> Result<Self> {
        let lambda_len = lambda_len.max(max_len);
        let path = dir.join(format!("zonal-{}.txt", cache_key(max_weight, max_len, lambda_len)));
        if let Ok(f) = std::fs::File::open(&path) {
            if let Ok(t) = Self::read_text(BufReader::new(f)) {
                return Ok(t);
            }
        }
        let t = Self::build(max_weight, max_len, lambda_len, cap)?;
        if std::fs::create_dir_all(dir).is_ok() {
            let tmp = path.with_extension("tmp");
            if let Ok(f) = std::fs::File::create(&tmp) {
                let mut w = std::io::BufWriter::new(f);
                if t.write_text(&mut w).is_ok() && w.flush().is_ok() {
                    let _ = std::fs::rename(&tmp, &path);
                }
            }
        }
        Ok(t)
    }

    /// Human-readable dump, one line per coefficient.
    pub fn to_text_listing(&self, weight: u32) -> String {
        let mut s = String::new();
        if let Some(block) = self.block(weight) {
            for row in &block.rows {
                for (i, c) in &row.exact {
                    let _ = writeln!(s, "C{} M{} {}", row.kappa, block.lambdas[*i], c);
                }
            }
        }
        s
    }
}

pub fn cache_key(max_weight: u32, max_len: usize, lambda_len: usize) -> String {
    format!("w{max_weight}-l{max_len}-m{lambda_len}")
}

/// Cache directory: `$STIEFEL_NORM_CACHE`, else a folder under the system temp dir.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("STIEFEL_NORM_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("stiefel-norm-cache"))
}

fn build_block(k: u32, max_len: usize, lambda_len: usize) -> Result<WeightBlock> {
    let lambdas = enumerate(k, lambda_len);
    let index: HashMap<Partition, usize> = lambdas.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let kappas = enumerate(k, max_len);
    let rows = kappas
        .par_iter()
        .map(|kappa| build_row(kappa, &lambdas, &index))
        .collect::<Result<Vec<_>>>()?;
    let kappa_index = kappas.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    Ok(WeightBlock { weight: k, lambdas, rows, kappa_index })
}

fn build_row(kappa: &Partition, lambdas: &[Partition], index: &HashMap<Partition, usize>) -> Result<KappaRow> {
    let start = index[kappa];
    let rho_kappa = rho(kappa);
    // local[i] holds c_{kappa, lambdas[start + i]}
    let mut local: Vec<Rational> = vec![Rational::zero(); lambdas.len() - start];
    local[0] = Rational::one();
    for off in 1..local.len() {
        let lambda = &lambdas[start + off];
        let parts = lambda.parts();
        let mut acc = BigInt::zero();
        let mut acc_q = Rational::zero();
        for i in 0..parts.len() {
            for j in (i + 1)..parts.len() {
                for t in 1..=parts[j] {
                    let mut mu = parts.to_vec();
                    mu[i] += t;
                    mu[j] -= t;
                    let mu = Partition::new(mu);
                    let mi = index[&mu];
                    if mi < start {
                        continue; // mu above kappa
                    }
                    let c = &local[mi - start];
                    if c.is_zero() {
                        continue;
                    }
                    let w = (parts[i] + t) as i64 - (parts[j] as i64 - t as i64);
                    if c.is_integer() {
                        acc += c.numer() * w;
                    } else {
                        acc_q += c * BigRational::from_integer(BigInt::from(w));
                    }
                }
            }
        }
        let total = acc_q + BigRational::from_integer(acc);
        if total.is_zero() {
            continue;
        }
        let denom = rho_kappa - rho(lambda);
        if denom == 0 {
            return Err(Error::Resource(format!(
                "degenerate recurrence denominator for kappa={kappa}, lambda={lambda}; table build aborted"
            )));
        }
        local[off] = total / BigRational::from_integer(BigInt::from(denom));
    }
    // fix the scale against the closed form at d = l(kappa)
    let n = kappa.len();
    let at_identity = local
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .fold(Rational::zero(), |acc, (off, c)| {
            acc + c * BigRational::from_integer(monomial_count(&lambdas[start + off], n))
        });
    let scale = zonal_unit_value(kappa, n as u64)? / at_identity;
    let exact: Vec<(usize, Rational)> = local
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(off, c)| (start + off, c * &scale))
        .collect();
    let float = exact.iter().map(|(i, c)| (*i, c.to_f64().unwrap_or(f64::NAN))).collect();
    Ok(KappaRow { kappa: kappa.clone(), exact, float })
}
