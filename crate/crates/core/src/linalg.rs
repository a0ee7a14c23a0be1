//! Dense real matrices and the few decompositions the series and the
//! Monte Carlo oracle need: a cyclic Jacobi eigensolver for symmetric input
//! and a Householder QR for sampling.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{input, Result};

/// Asymmetry tolerated on ingestion before symmetrization is refused.
pub const MAX_ASYMMETRY: f64 = 1e-8;

const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Real symmetric matrix of order `n`, stored row-major and exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    n: usize,
    data: Vec<f64>,
    asymmetry: f64,
}

impl SymmetricMatrix {
    /// Builds from row-major data, symmetrizing `(M + M')/2`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(input("symmetric matrix must have order >= 1"));
        }
        if data.len() != n * n {
            return Err(input(format!("expected {} entries for order {n}, got {}", n * n, data.len())));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(input(format!("non-finite matrix entry {x}")));
        }
        let mut out = data;
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (out[i * n + j], out[j * n + i]);
                defect = defect.max((a - b).abs());
                let m = 0.5 * (a + b);
                out[i * n + j] = m;
                out[j * n + i] = m;
            }
        }
        if defect > MAX_ASYMMETRY {
            return Err(input(format!("matrix is not symmetric (defect {defect:e})")));
        }
        Ok(Self { n, data: out, asymmetry: defect })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(input("rows of a symmetric matrix must all have length n"));
        }
        Self::from_row_major(n, rows.concat())
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self::from_row_major(n, data)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = c;
        }
        Self { n, data, asymmetry: 0.0 }
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n], asymmetry: 0.0 }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Largest `|M_ij - M_ji|` seen before symmetrization.
    pub fn asymmetry_defect(&self) -> f64 {
        self.asymmetry
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `H' M H` for a square `H` of the same order.
    pub fn conjugate(&self, h: &[f64]) -> Self {
        let n = self.n;
        assert_eq!(h.len(), n * n);
        let mh = matmul(&self.data, n, n, h, n);
        let ht = transpose(h, n, n);
        let out = matmul(&ht, n, n, &mh, n);
        // symmetrize away rounding
        Self::from_row_major(n, out).expect("conjugated symmetric matrix stays symmetric")
    }

    pub fn eigen(&self) -> EigenSystem {
        eigen_sym(self)
    }
}

/// Real `d x p` matrix with `d >= p >= 1`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RectMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RectMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if cols == 0 || rows < cols {
            return Err(input(format!("need rows >= cols >= 1, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(input(format!("expected {} entries, got {}", rows * cols, data.len())));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(input(format!("non-finite matrix entry {x}")));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_row_major(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `H B K` for square orthogonal-sized `H` (rows x rows) and `K` (cols x cols).
    pub fn transform(&self, h: &[f64], k: &[f64]) -> Self {
        let hb = matmul(h, self.rows, self.rows, &self.data, self.cols);
        let data = matmul(&hb, self.rows, self.cols, k, self.cols);
        Self { rows: self.rows, cols: self.cols, data }
    }
}

/// Sorted spectrum of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Eigenvectors as columns of a row-major `n x n` matrix, aligned with `values`.
    pub vectors: Vec<f64>,
    /// `max |M v - lambda v|` over all eigenpairs.
    pub residual: f64,
    pub sweeps: usize,
}

impl EigenSystem {
    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Smallest eigenvalue.
    pub fn min(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }
}

/// Cyclic Jacobi eigensolver.
pub fn eigen_sym(m: &SymmetricMatrix) -> EigenSystem {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.frobenius_norm();
    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && off(&a) > JACOBI_REL_TOL * scale {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + col] = v[r * n + src];
        }
    }
    let mut residual = 0.0f64;
    for (col, lambda) in values.iter().enumerate() {
        for r in 0..n {
            let mv: f64 = (0..n).map(|k| m.get(r, k) * vectors[k * n + col]).sum();
            residual = residual.max((mv - lambda * vectors[r * n + col]).abs());
        }
    }
    EigenSystem { values, vectors, residual, sweeps }
}

/// Frobenius norm of either matrix kind.
pub trait FrobeniusNorm {
    fn frobenius(&self) -> f64;
}

impl FrobeniusNorm for SymmetricMatrix {
    fn frobenius(&self) -> f64 {
        self.frobenius_norm()
    }
}

impl FrobeniusNorm for RectMatrix {
    fn frobenius(&self) -> f64 {
        self.frobenius_norm()
    }
}

pub fn frobenius_norm<M: FrobeniusNorm>(m: &M) -> f64 {
    m.frobenius()
}

/// `diag(|lambda_1|, ..., |lambda_n|)`, descending.
pub fn abs_eigen_diag(m: &SymmetricMatrix) -> SymmetricMatrix {
    let mut vals: Vec<f64> = eigen_sym(m).values.iter().map(|x| x.abs()).collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    SymmetricMatrix::diag(&vals).expect("finite spectrum")
}

/// `B'B / 4`, the matrix argument of the Langevin series.
pub fn langevin_gram(b: &RectMatrix) -> SymmetricMatrix {
    let (d, p) = (b.rows, b.cols);
    let mut data = vec![0.0; p * p];
    for i in 0..p {
        for j in i..p {
            let s: f64 = (0..d).map(|r| b.get(r, i) * b.get(r, j)).sum::<f64>() / 4.0;
            data[i * p + j] = s;
            data[j * p + i] = s;
        }
    }
    SymmetricMatrix { n: p, data, asymmetry: 0.0 }
}

/// Thin Householder QR of a `d x p` matrix (row-major, `d >= p`).
/// Returns `Q` (row-major `d x p`, orthonormal columns) and `diag(R)`.
pub fn householder_qr(a: &[f64], d: usize, p: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(d >= p && a.len() == d * p);
    let mut r = a.to_vec();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut rdiag = Vec::with_capacity(p);
    for j in 0..p {
        let norm: f64 = (j..d).map(|i| r[i * p + j] * r[i * p + j]).sum::<f64>().sqrt();
        let x0 = r[j * p + j];
        let alpha = if x0 >= 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..d).map(|i| r[i * p + j]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for c in j..p {
                let dot: f64 = (j..d).map(|i| v[i - j] * r[i * p + c]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in j..d {
                    r[i * p + c] -= f * v[i - j];
                }
            }
        }
        rdiag.push(if vnorm2 > 0.0 { alpha } else { x0 });
        vs.push(v);
    }
    // Q = H_1 ... H_p [I_p; 0]
    let mut q = vec![0.0; d * p];
    for i in 0..p {
        q[i * p + i] = 1.0;
    }
    for j in (0..p).rev() {
        let v = &vs[j];
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for c in 0..p {
            let dot: f64 = (j..d).map(|i| v[i - j] * q[i * p + c]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in j..d {
                q[i * p + c] -= f * v[i - j];
            }
        }
    }
    (q, rdiag)
}

/// Row-major product of an `ar x ac` and an `ac x bc` matrix.
pub fn matmul(a: &[f64], ar: usize, ac: usize, b: &[f64], bc: usize) -> Vec<f64> {
    let mut out = vec![0.0; ar * bc];
    for i in 0..ar {
        for k in 0..ac {
            let aik = a[i * ac + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..bc {
                out[i * bc + j] += aik * b[k * bc + j];
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

/// Determinant of the leading `k x k` block of a row-major `n x n` matrix,
/// for every `k = 1..=kmax`, by Gaussian elimination with partial pivoting
/// restricted to each block.
pub fn leading_minors(a: &[f64], n: usize, kmax: usize) -> Vec<f64> {
    (1..=kmax)
        .map(|k| {
            let mut m: Vec<f64> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| a[i * n + j]).collect();
            let mut det = 1.0;
            for c in 0..k {
                let piv = (c..k).max_by(|&x, &y| m[x * k + c].abs().total_cmp(&m[y * k + c].abs())).unwrap();
                if m[piv * k + c] == 0.0 {
                    return 0.0;
                }
                if piv != c {
                    for j in 0..k {
                        m.swap(c * k + j, piv * k + j);
                    }
                    det = -det;
                }
                let pv = m[c * k + c];
                det *= pv;
                for r in (c + 1)..k {
                    let f = m[r * k + c] / pv;
                    for j in c..k {
                        m[r * k + j] -= f * m[c * k + j];
                    }
                }
            }
            det
        })
        .collect()
}

/// On-disk matrix: `{"rows": n, "cols": m, "data": [row-major]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn parse(text: &str) -> Result<Self> {
        let m: MatrixJson = serde_json::from_str(text)?;
        if m.data.len() != m.rows * m.cols {
            return Err(input(format!(
                "matrix data has {} entries, expected rows*cols = {}",
                m.data.len(),
                m.rows * m.cols
            )));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn into_symmetric(self) -> Result<SymmetricMatrix> {
        if self.rows != self.cols {
            return Err(input(format!("expected a square matrix, got {}x{}", self.rows, self.cols)));
        }
        SymmetricMatrix::from_row_major(self.rows, self.data)
    }

    pub fn into_rect(self) -> Result<RectMatrix> {
        RectMatrix::from_row_major(self.rows, self.cols, self.data)
    }
}

impl From<&SymmetricMatrix> for MatrixJson {
    fn from(m: &SymmetricMatrix) -> Self {
        MatrixJson { rows: m.n, cols: m.n, data: m.data.clone() }
    }
}

impl From<&RectMatrix> for MatrixJson {
    fn from(m: &RectMatrix) -> Self {
        MatrixJson { rows: m.rows, cols: m.cols, data: m.data.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn eigen_examples() {
        assert!(close(&SymmetricMatrix::identity(3).eigen().values, &[1.0, 1.0, 1.0], 1e-15));
        assert!(close(&SymmetricMatrix::diag(&[2.0, -1.0]).unwrap().eigen().values, &[2.0, -1.0], 1e-15));
        let swap = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let e = swap.eigen();
        assert!(close(&e.values, &[1.0, -1.0], 1e-14));
        assert!(e.residual < 1e-13);
    }

    #[test]
    fn eigen_residual_small_on_dense_input() {
        let n = 7;
        let data: Vec<f64> = (0..n * n).map(|k| ((k * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let sym: Vec<f64> = (0..n * n).map(|k| data[k] + data[(k % n) * n + k / n]).collect();
        let m = SymmetricMatrix::from_row_major(n, sym).unwrap();
        let e = m.eigen();
        assert!(e.residual <= 1e-10 * (1.0 + e.spectral_radius()));
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let trace: f64 = e.values.iter().sum();
        assert!((trace - m.trace()).abs() < 1e-11);
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(SymmetricMatrix::identity(4).frobenius_norm(), 2.0);
        assert_eq!(SymmetricMatrix::diag(&[3.0, 4.0]).unwrap().frobenius_norm(), 5.0);
        let ones = SymmetricMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(frobenius_norm(&ones), 2.0);
    }

    #[test]
    fn abs_eigen_diag_examples() {
        let m = abs_eigen_diag(&SymmetricMatrix::diag(&[-2.0, 1.0]).unwrap());
        assert_eq!(m.diagonal(), vec![2.0, 1.0]);
        let swap = SymmetricMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let m = abs_eigen_diag(&swap);
        assert!(close(&m.diagonal(), &[1.0, 1.0], 1e-14));
        assert!(m.is_diagonal());
        assert_eq!(abs_eigen_diag(&m), m);
    }

    #[test]
    fn langevin_gram_examples() {
        let z = RectMatrix::zeros(3, 2).unwrap();
        assert_eq!(langevin_gram(&z), SymmetricMatrix::zeros(2));
        let orth = RectMatrix::from_row_major(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(langevin_gram(&orth), SymmetricMatrix::scaled_identity(2, 0.25));
        let b = RectMatrix::from_row_major(2, 1, vec![2.0, 0.0]).unwrap();
        assert_eq!(langevin_gram(&b).data(), &[1.0]);
        let g = langevin_gram(&RectMatrix::from_row_major(3, 2, vec![1.0, 2.0, -1.0, 0.5, 3.0, 1.0]).unwrap());
        let bn = 1.0f64 + 4.0 + 1.0 + 0.25 + 9.0 + 1.0;
        assert!(g.frobenius_norm() <= bn / 4.0 + 1e-15);
    }

    #[test]
    fn symmetrization_and_rejection() {
        let m = SymmetricMatrix::from_row_major(2, vec![1.0, 2.0 + 1e-10, 2.0, 1.0]).unwrap();
        assert!(m.asymmetry_defect() > 0.0);
        assert_eq!(m.get(0, 1), m.get(1, 0));
        assert!(SymmetricMatrix::from_row_major(2, vec![1.0, 2.1, 2.0, 1.0]).is_err());
        assert!(SymmetricMatrix::from_row_major(1, vec![f64::NAN]).is_err());
        assert!(RectMatrix::from_row_major(1, 2, vec![0.0; 2]).is_err());
    }

    #[test]
    fn matrix_json_rejects_wrong_length() {
        assert!(MatrixJson::parse(r#"{"rows":2,"cols":2,"data":[1,2,3]}"#).is_err());
        let m = MatrixJson::parse(r#"{"rows":2,"cols":2,"data":[1,2,2,1]}"#).unwrap();
        assert_eq!(m.clone().into_symmetric().unwrap().get(0, 1), 2.0);
        assert!(MatrixJson::parse(r#"{"rows":2,"cols":3,"data":[1,2,3,4,5,6]}"#).unwrap().into_symmetric().is_err());
    }

    #[test]
    fn qr_produces_orthonormal_columns() {
        let a: Vec<f64> = (0..15).map(|k| ((k * 7 % 5) as f64) - 1.7 + k as f64 * 0.1).collect();
        let (q, r) = householder_qr(&a, 5, 3);
        let qtq = matmul(&transpose(&q, 5, 3), 3, 5, &q, 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[i * 3 + j] - want).abs() < 1e-14);
            }
        }
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn leading_minors_of_diagonal() {
        let a = [2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 4.0];
        assert_eq!(leading_minors(&a, 3, 3), vec![2.0, 6.0, 24.0]);
        let b = [0.0, 1.0, 1.0, 0.0];
        assert_eq!(leading_minors(&b, 2, 2), vec![0.0, -1.0]);
    }
}
