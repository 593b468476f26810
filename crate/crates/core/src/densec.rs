//! Dense complex linear algebra for the small operators that appear in the
//! Choi-operator formalism: products, Kronecker products, partial trace and
//! partial transpose over tensor factors, and a cyclic Jacobi eigensolver for
//! Hermitian matrices together with Hermitian matrix functions.
//!
//! Tensor factors are ordered with the first subsystem most significant, so
//! `kron(a, b)` has block `(i, j)` equal to `a[i, j] * b`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Maximum number of Jacobi sweeps before giving up.
pub const MAX_SWEEPS: usize = 100;
/// Relative off-diagonal Frobenius norm at which the Jacobi iteration stops.
pub const JACOBI_TOL: f64 = 1e-13;

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

/// Wire format: `{"rows":r,"cols":c,"data":[[re,im],...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl From<CMatrix> for MatrixRepr {
    fn from(m: CMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixRepr> for CMatrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        let data = r.data.iter().map(|p| C64::new(p[0], p[1])).collect();
        CMatrix::new(r.rows, r.cols, data)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::DimensionMismatch("non-finite matrix entry".into()));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// `|v⟩⟨v|`.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C64>]) -> Result<Self> {
        let n = cols.first().map(|c| c.len()).ok_or(Error::EmptySubspace)?;
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        Ok(Self::from_fn(n, cols.len(), |i, j| cols[j][i]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    pub fn scale_c(&self, s: C64) -> Self {
        self.map(|z| z * s)
    }

    /// `(H + H†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|i| (i..self.cols).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * other.cols..(k + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "mul_vec: dimension mismatch");
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> C64 {
        assert!(self.cols == other.rows && self.rows == other.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// `⟨u|self|v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.mul_vec(v))
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "add: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl AddAssign<&CMatrix> for CMatrix {
    fn add_assign(&mut self, rhs: &CMatrix) {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "add: shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "sub: shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// `⟨u|v⟩`, conjugate-linear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca, rb, cb) = (a.rows, a.cols, b.rows, b.cols);
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

fn check_dims(x: &CMatrix, dims: &[usize]) -> Result<()> {
    let total: usize = dims.iter().product();
    if !x.is_square() || dims.is_empty() || total != x.rows {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dimensions {dims:?} do not factor a {}x{} matrix",
            x.rows, x.cols
        )));
    }
    Ok(())
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Traces out every subsystem not listed in `keep`.
pub fn partial_trace(x: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_dims(x, dims)?;
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "kept subsystem out of range for {} factors",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|s| !keep.contains(s)).collect();
    let st = strides(dims);
    let kept_dim: usize = keep.iter().map(|&s| dims[s]).product();
    let traced_dim: usize = traced.iter().map(|&s| dims[s]).product();

    // full index of (kept multi-index k, traced multi-index t)
    let offsets = |subs: &[usize], mut lin: usize| -> usize {
        let mut off = 0;
        for &s in subs.iter().rev() {
            off += (lin % dims[s]) * st[s];
            lin /= dims[s];
        }
        off
    };
    let kept_off: Vec<usize> = (0..kept_dim).map(|k| offsets(&keep, k)).collect();
    let traced_off: Vec<usize> = (0..traced_dim).map(|t| offsets(&traced, t)).collect();

    let mut out = CMatrix::zeros(kept_dim, kept_dim);
    for (i, &ki) in kept_off.iter().enumerate() {
        for (j, &kj) in kept_off.iter().enumerate() {
            out[(i, j)] = traced_off.iter().map(|&t| x[(ki + t, kj + t)]).sum();
        }
    }
    Ok(out)
}

/// Transposes the chosen tensor factor in the computational basis.
pub fn partial_transpose(x: &CMatrix, dims: &[usize], subsystem: usize) -> Result<CMatrix> {
    check_dims(x, dims)?;
    if subsystem >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem {subsystem} out of range for {} factors",
            dims.len()
        )));
    }
    let s = strides(dims)[subsystem];
    let d = dims[subsystem];
    let n = x.rows;
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        let di = (i / s) % d;
        for j in 0..n {
            let dj = (j / s) % d;
            let ii = i - di * s + dj * s;
            let jj = j - dj * s + di * s;
            out[(ii, jj)] = x[(i, j)];
        }
    }
    Ok(out)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        CMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .filter(|&k| fv[k] != 0.0)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * fv[k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Default numerical support threshold `dim · 2⁻⁵² · λ_max`.
pub fn default_support_threshold(dim: usize, lambda_max: f64) -> f64 {
    dim as f64 * f64::EPSILON * lambda_max.abs()
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi eigensolver. The input is symmetrized first.
pub fn herm_eig(h: &CMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(Error::NotSquare(h.rows, h.cols));
    }
    let n = h.rows;
    let mut a = h.hermitian_part();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);
    let target = JACOBI_TOL * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..=MAX_SWEEPS {
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
            off_norm: off_diagonal_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(HermEig { values, vectors })
}

/// One unitary rotation in the (p, q) plane that annihilates `a[p, q]`.
///
/// The rotation is `U = P G` where `P` removes the phase of `a[p, q]` and `G`
/// is the real symmetric Jacobi rotation of the resulting real 2x2 block.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag <= f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / mag;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let pc = phase.conj();
    let n = a.rows;

    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * c - akq * pc * s;
        a[(k, q)] = akp * s + akq * pc * c;
    }
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * s + aqk * phase * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vkp * c - vkq * pc * s;
        v[(k, q)] = vkp * s + vkq * pc * c;
    }
}

/// Applies `f` to the spectrum of a positive semidefinite `h`, mapping every
/// eigenvalue at or below the support threshold to zero.
///
/// `support_threshold` defaults to [`default_support_threshold`]. Eigenvalues
/// below `-threshold` are rejected.
pub fn herm_fn(
    h: &CMatrix,
    f: impl Fn(f64) -> f64,
    support_threshold: Option<f64>,
) -> Result<CMatrix> {
    let eig = herm_eig(h)?;
    let lmax = eig.values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let thr = support_threshold.unwrap_or_else(|| default_support_threshold(eig.dim(), lmax));
    if eig.min() < -thr {
        return Err(Error::NotPsd(eig.min()));
    }
    Ok(eig.reconstruct_with(|l| if l > thr { f(l) } else { 0.0 }))
}

pub fn inv_sqrt(l: f64) -> f64 {
    1.0 / l.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sigma_x() -> CMatrix {
        CMatrix::new(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap()
    }

    fn random_matrix(rng: &mut impl Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    /// Gram-Schmidt on a random complex matrix.
    fn random_unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
        let g = random_matrix(rng, n);
        let mut cols: Vec<Vec<C64>> = Vec::new();
        for j in 0..n {
            let mut v = g.column(j);
            for u in &cols {
                let p = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= p * ui;
                }
            }
            let nv = norm(&v);
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
        CMatrix::from_columns(&cols).unwrap()
    }

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = (a - b).max_abs();
        assert!(d <= tol, "matrices differ by {d:e}\n{a:?}\n{b:?}");
    }

    #[test]
    fn kron_identity_and_diagonal() {
        assert_close(&kron(&CMatrix::identity(2), &CMatrix::identity(2)), &CMatrix::identity(4), 0.0);
        let k = kron(&CMatrix::from_real_diag(&[1.0, 2.0]), &CMatrix::from_real_diag(&[3.0, 4.0]));
        assert_close(&k, &CMatrix::from_real_diag(&[3.0, 4.0, 6.0, 8.0]), 0.0);
    }

    #[test]
    fn kron_sigma_x_squared_returns_basis_vector() {
        let xx = kron(&sigma_x(), &sigma_x());
        let e0 = vec![ONE, ZERO, ZERO, ZERO];
        let once = xx.mul_vec(&e0);
        assert_eq!(once, vec![ZERO, ZERO, ZERO, ONE]);
        assert_eq!(xx.mul_vec(&once), e0);
    }

    #[test]
    fn partial_trace_examples() {
        let rho = CMatrix::new(2, 2, vec![c(0.7), C64::new(0.1, 0.2), C64::new(0.1, -0.2), c(0.3)]).unwrap();
        let pt = partial_trace(&kron(&sigma_x(), &rho), &[2, 2], &[1]).unwrap();
        assert_close(&pt, &CMatrix::zeros(2, 2), 0.0);

        let sigma = CMatrix::from_real_diag(&[0.5, 1.5, 2.0]);
        let pt = partial_trace(&kron(&rho, &sigma), &[2, 3], &[0]).unwrap();
        assert_close(&pt, &rho.scale(4.0), 1e-14);

        for d in 1..5 {
            let phi: Vec<C64> = (0..d * d).map(|i| if i % (d + 1) == 0 { ONE } else { ZERO }).collect();
            let pt = partial_trace(&CMatrix::projector(&phi), &[d, d], &[0]).unwrap();
            assert_close(&pt, &CMatrix::identity(d), 0.0);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let x = CMatrix::identity(6);
        assert!(partial_trace(&x, &[2, 2], &[0]).is_err());
        assert!(partial_trace(&x, &[2, 3], &[2]).is_err());
        assert!(partial_transpose(&x, &[4, 2], 0).is_err());
        assert!(herm_eig(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn partial_trace_middle_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b, cm) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 3), random_matrix(&mut rng, 2));
        let x = kron(&kron(&a, &b), &cm);
        let kept = partial_trace(&x, &[2, 3, 2], &[0, 2]).unwrap();
        assert_close(&kept, &kron(&a, &cm).scale_c(b.trace()), 1e-13);
        let mid = partial_trace(&x, &[2, 3, 2], &[1]).unwrap();
        assert_close(&mid, &b.scale_c(a.trace() * cm.trace()), 1e-13);
    }

    #[test]
    fn partial_transpose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (a, b) = (random_matrix(&mut rng, 2), random_matrix(&mut rng, 3));
        let x = kron(&a, &b);
        assert_close(&partial_transpose(&x, &[2, 3], 0).unwrap(), &kron(&a.transpose(), &b), 0.0);
        let y = random_matrix(&mut rng, 6);
        let twice = partial_transpose(&partial_transpose(&y, &[3, 2], 1).unwrap(), &[3, 2], 1).unwrap();
        assert_close(&twice, &y, 0.0);

        // SWAP^{T_2} = 2 |Φ+⟩⟨Φ+|
        let mut swap = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = ONE;
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vec![c(s), ZERO, ZERO, c(s)];
        assert_close(&partial_transpose(&swap, &[2, 2], 1).unwrap(), &CMatrix::projector(&phi).scale(2.0), 1e-15);
    }

    #[test]
    fn herm_eig_small_cases() {
        let e = herm_eig(&CMatrix::from_real_diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);

        let e = herm_eig(&sigma_x()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let minus = [c(s), c(-s)];
        let plus = [c(s), c(s)];
        assert!((inner(&minus, &e.vector(0)).norm() - 1.0).abs() < 1e-14);
        assert!((inner(&plus, &e.vector(1)).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn herm_eig_complex_phases() {
        // [[1, i], [-i, 1]] has spectrum {0, 2}
        let h = CMatrix::new(2, 2, vec![ONE, C64::i(), -C64::i(), ONE]).unwrap();
        let e = herm_eig(&h).unwrap();
        assert!(e.values[0].abs() < 1e-15 && (e.values[1] - 2.0).abs() < 1e-15);
        assert_close(&e.reconstruct(), &h, 1e-15);
    }

    #[test]
    fn herm_eig_recovers_constructed_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let q = random_unitary(&mut rng, 8);
        let lambda: Vec<f64> = (0..8).map(|i| i as f64 * 0.75 - 2.0).collect();
        let h = &(&q * &CMatrix::from_real_diag(&lambda)) * &q.adjoint();
        let e = herm_eig(&h).unwrap();
        for (got, want) in e.values.iter().zip(&lambda) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn herm_fn_examples() {
        assert_close(&herm_fn(&CMatrix::identity(3), f64::sqrt, None).unwrap(), &CMatrix::identity(3), 1e-15);
        let r = herm_fn(&CMatrix::from_real_diag(&[4.0, 9.0]), inv_sqrt, None).unwrap();
        assert_close(&r, &CMatrix::from_real_diag(&[0.5, 1.0 / 3.0]), 1e-15);

        // A^{-1/2} A A^{-1/2} is the support projector of a rank-deficient A
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = CMatrix::from_fn(5, 3, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let a = &g * &g.adjoint();
        let s = herm_fn(&a, inv_sqrt, None).unwrap();
        let p = &(&s * &a) * &s;
        assert_close(&(&p * &p), &p, 1e-10);
        assert!((p.trace().re - 3.0).abs() < 1e-10);
    }

    #[test]
    fn herm_fn_rejects_negative_spectrum() {
        let h = CMatrix::from_real_diag(&[1.0, -0.5]);
        assert!(matches!(herm_fn(&h, f64::sqrt, None), Err(Error::NotPsd(_))));
    }

    #[test]
    fn json_wire_format() {
        let m = CMatrix::new(1, 2, vec![C64::new(1.0, -2.0), C64::new(0.5, 0.0)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"rows":1,"cols":2,"data":[[1.0,-2.0],[0.5,0.0]]}"#);
        let back: CMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CMatrix>(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
    }
}
