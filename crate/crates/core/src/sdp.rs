//! Maximizing the average success probability over the optimal subspace.
//!
//! Maps of maximal fidelity have the form `E = B C B†`, where the columns of
//! `B` span the optimal subspace `K` and `C ⪰ 0`. The success probability is
//! `P̄ = Tr(CH)` with `H = B†AB`, and the map is trace decreasing when
//! `Φ(C) = Tr_out(BCB†) ⪯ 1`. This module solves
//!
//! ```text
//! maximize Tr(CH)  subject to  C ⪰ 0,  Φ(C) ⪯ 1
//! ```
//!
//! in three stages: a certificate against the bound `P̄ ≤ Tr_out(A)/d_out`,
//! an exact linear program when the problem splits into commuting blocks, and
//! a general ADMM solver with a dual certificate.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::densec::{self, herm_eig, CMatrix, ZERO};
use crate::error::{Error, Result};
use crate::optimizer::{build_choi, ChoiOperator, OptimizerResult};

const STRUCTURE_TOL: f64 = 1e-10;
const JOINT_EIG_TOL: f64 = 1e-9;
const LP_FEAS_TOL: f64 = 1e-12;
const MAX_VERTEX_CANDIDATES: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SdpPath {
    /// The uniform coefficient attains `P̄ = Tr_out(A)/d_out`.
    TrivialBound,
    LinearProgram,
    ProjectedGradient,
}

/// Options for [`pg_path`].
#[derive(Clone, Copy, Debug)]
pub struct PgOptions {
    /// ADMM penalty parameter, applied after normalizing `H` and the basis.
    pub step: f64,
    pub max_iter: usize,
    /// Target for the certified duality gap, relative to `P̄`.
    pub tol: f64,
}

impl Default for PgOptions {
    fn default() -> Self {
        PgOptions {
            step: 1.0,
            max_iter: 20_000,
            tol: 1e-12,
        }
    }
}

/// The program over a basis `b_j = Σ_k b⁰_k S_kj` of `K`, where `b⁰` are the
/// vectors `A^{-1/2}|μ_j⟩` of the optimizer cluster.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    a: CMatrix,
    in_dim: usize,
    out_dim: usize,
    basis: Vec<Vec<C64>>,
    /// Change of basis from problem coordinates to cluster coordinates.
    to_cluster: CMatrix,
    h: CMatrix,
    /// `Y_jk = Tr_out |b_j⟩⟨b_k|`, row-major over `(j, k)`.
    cross: Vec<CMatrix>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SdpSolution {
    /// Coefficient in the problem basis.
    pub coeff: CMatrix,
    /// The same coefficient in optimizer cluster coordinates, ready for
    /// [`build_choi`].
    pub cluster_coeff: CMatrix,
    pub p_bar: f64,
    pub path: SdpPath,
    pub iterations: usize,
    /// Certified upper bound minus `p_bar` (zero for exact paths).
    pub duality_gap_estimate: f64,
    pub converged: bool,
}

impl SdpSolution {
    pub fn choi(&self, res: &OptimizerResult) -> Result<ChoiOperator> {
        build_choi(res, Some(&self.cluster_coeff))
    }
}

impl SdpProblem {
    /// Builds the problem on the optimal subspace of `res`.
    ///
    /// With `charges = Some((q, r))` the basis is rotated onto eigenvectors of
    /// the U(1) charge `r_b − q_a` of `|a⟩|b⟩`, which exposes the block
    /// structure of phase-covariant problems. Within each charge sector the
    /// basis diagonalizes `H`.
    pub fn new(res: &OptimizerResult, a: &CMatrix, charges: Option<(&[i64], &[i64])>) -> Result<Self> {
        let c = res.cluster_dim();
        if c == 0 {
            return Err(Error::EmptySubspace);
        }
        let n = res.in_dim * res.out_dim;
        if a.rows() != n || a.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, expected {n}x{n}",
                a.rows(),
                a.cols()
            )));
        }

        let mut sectors: Vec<Vec<usize>> = vec![(0..c).collect()];
        let mut rot = CMatrix::identity(c);
        if let Some((q, r)) = charges {
            if q.len() != res.in_dim || r.len() != res.out_dim {
                return Err(Error::DimensionMismatch("charge vectors do not match the map".into()));
            }
            if let Some((y, groups)) = charge_rotation(&res.cluster_vectors, q, r, res.out_dim)? {
                rot = y;
                sectors = groups;
            }
        }

        let b0 = res.k_basis();
        let rotate = |s: &CMatrix| -> Vec<Vec<C64>> {
            (0..c)
                .map(|j| {
                    let mut v = vec![ZERO; n];
                    for (k, bk) in b0.iter().enumerate() {
                        let skj = s[(k, j)];
                        if skj != ZERO {
                            for (vi, bi) in v.iter_mut().zip(bk) {
                                *vi += bi * skj;
                            }
                        }
                    }
                    v
                })
                .collect()
        };

        // diagonalize H inside each sector
        let b1 = rotate(&rot);
        let h1 = gram_with(&b1, a);
        let mut w = CMatrix::zeros(c, c);
        for s in &sectors {
            let block = CMatrix::from_fn(s.len(), s.len(), |i, j| h1[(s[i], s[j])]);
            let e = herm_eig(&block)?;
            for (col, &sj) in s.iter().enumerate() {
                for (row, &si) in s.iter().enumerate() {
                    w[(si, sj)] = e.vectors[(row, col)];
                }
            }
        }
        let rot = &rot * &w;

        // unit-norm marginals
        let b2 = rotate(&rot);
        let scales: Vec<f64> = b2
            .iter()
            .map(|b| {
                let x = marginal(b, b, res.in_dim, res.out_dim);
                let l = herm_eig(&x).map(|e| e.max()).unwrap_or(0.0);
                if l > 0.0 { 1.0 / l.sqrt() } else { 1.0 }
            })
            .collect();
        let to_cluster = CMatrix::from_fn(c, c, |i, j| rot[(i, j)] * scales[j]);
        let basis = rotate(&to_cluster);
        let h = gram_with(&basis, a);
        let mut cross = Vec::with_capacity(c * c);
        for bj in &basis {
            for bk in &basis {
                cross.push(marginal(bj, bk, res.in_dim, res.out_dim));
            }
        }
        Ok(SdpProblem {
            a: a.clone(),
            in_dim: res.in_dim,
            out_dim: res.out_dim,
            basis,
            to_cluster,
            h,
            cross,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<C64>] {
        &self.basis
    }

    /// `H = B†AB`.
    pub fn objective_matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn objective(&self, c: &CMatrix) -> f64 {
        c.trace_product(&self.h).re
    }

    /// `Φ(C) = Tr_out(BCB†)`.
    pub fn phi(&self, c: &CMatrix) -> CMatrix {
        let k = self.dim();
        let mut out = CMatrix::zeros(self.in_dim, self.in_dim);
        for j in 0..k {
            for l in 0..k {
                let cjl = c[(j, l)];
                if cjl != ZERO {
                    out += &self.cross[j * k + l].scale_c(cjl);
                }
            }
        }
        out
    }

    /// `Φ*(S) = B†(S ⊗ 1)B`.
    pub fn phi_adjoint(&self, s: &CMatrix) -> CMatrix {
        let k = self.dim();
        CMatrix::from_fn(k, k, |j, l| s.trace_product(&self.cross[l * k + j]))
    }

    /// Largest eigenvalue of `Φ(C)`.
    pub fn constraint_max(&self, c: &CMatrix) -> Result<f64> {
        Ok(herm_eig(&self.phi(c))?.max())
    }

    pub fn to_cluster_coeff(&self, c: &CMatrix) -> CMatrix {
        (&(&self.to_cluster * c) * &self.to_cluster.adjoint()).hermitian_part()
    }

    /// `Tr_out(A)/d_out` when `A = Λ ⊗ 1`, an upper bound on `P̄`.
    pub fn trivial_bound(&self) -> Option<f64> {
        let lambda = densec::partial_trace(&self.a, &[self.in_dim, self.out_dim], &[0])
            .ok()?
            .scale(1.0 / self.out_dim as f64);
        let rebuilt = densec::kron(&lambda, &CMatrix::identity(self.out_dim));
        if (&rebuilt - &self.a).max_abs() > STRUCTURE_TOL * self.a.max_abs().max(1e-300) {
            return None;
        }
        Some(lambda.trace().re)
    }

    /// Scales a PSD coefficient onto the boundary `λ_max(Φ(C)) = 1`.
    fn normalize(&self, c: &CMatrix) -> Result<(CMatrix, f64)> {
        let l = self.constraint_max(c)?;
        if !(l > 0.0) {
            return Err(Error::ZeroCoefficient);
        }
        let c = c.scale(1.0 / l);
        let p = self.objective(&c);
        Ok((c, p))
    }

    fn solution(
        &self,
        coeff: CMatrix,
        p_bar: f64,
        path: SdpPath,
        iterations: usize,
        gap: f64,
        converged: bool,
    ) -> SdpSolution {
        SdpSolution {
            cluster_coeff: self.to_cluster_coeff(&coeff),
            coeff,
            p_bar,
            path,
            iterations,
            duality_gap_estimate: gap,
            converged,
        }
    }
}

/// `Tr_out |u⟩⟨v|`.
fn marginal(u: &[C64], v: &[C64], in_dim: usize, out_dim: usize) -> CMatrix {
    CMatrix::from_fn(in_dim, in_dim, |a, ap| {
        (0..out_dim)
            .map(|b| u[a * out_dim + b] * v[ap * out_dim + b].conj())
            .sum()
    })
}

/// `[⟨b_j|X|b_k⟩]`.
fn gram_with(b: &[Vec<C64>], x: &CMatrix) -> CMatrix {
    let xb: Vec<Vec<C64>> = b.iter().map(|v| x.mul_vec(v)).collect();
    CMatrix::from_fn(b.len(), b.len(), |j, k| densec::inner(&b[j], &xb[k])).hermitian_part()
}

/// Unitary rotating the cluster onto charge eigenvectors, with the index
/// groups of equal charge. `None` when the cluster is not charge invariant.
fn charge_rotation(
    mu: &[Vec<C64>],
    q: &[i64],
    r: &[i64],
    out_dim: usize,
) -> Result<Option<(CMatrix, Vec<Vec<usize>>)>> {
    let charge = |i: usize| (r[i % out_dim] - q[i / out_dim]) as f64;
    let qmu: Vec<Vec<C64>> = mu
        .iter()
        .map(|v| v.iter().enumerate().map(|(i, z)| z * charge(i)).collect())
        .collect();
    let c = mu.len();
    let qc = CMatrix::from_fn(c, c, |j, k| densec::inner(&mu[j], &qmu[k])).hermitian_part();
    // invariance: Q μ_k stays in the span of the cluster
    for (k, qv) in qmu.iter().enumerate() {
        let mut resid = qv.clone();
        for (j, v) in mu.iter().enumerate() {
            for (x, y) in resid.iter_mut().zip(v) {
                *x -= y * qc[(j, k)];
            }
        }
        if densec::norm(&resid) > JOINT_EIG_TOL * (1.0 + densec::norm(qv)) {
            return Ok(None);
        }
    }
    let e = herm_eig(&qc)?;
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &l) in e.values.iter().enumerate() {
        match groups.last_mut() {
            Some((g, idx)) if (l - *g).abs() < 1e-6 => idx.push(i),
            _ => groups.push((l, vec![i])),
        }
    }
    Ok(Some((e.vectors, groups.into_iter().map(|(_, g)| g).collect())))
}

/// Full solver chain: trivial-bound certificate, then the linear program when
/// its structure is present, otherwise [`pg_path`].
pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    solve_with(p, PgOptions::default())
}

/// [`solve`] with explicit options for the gradient path.
pub fn solve_with(p: &SdpProblem, opts: PgOptions) -> Result<SdpSolution> {
    let k = p.dim();
    let (uniform, p_uniform) = p.normalize(&p.to_cluster_inverse_identity()?)?;
    if let Some(bound) = p.trivial_bound() {
        if p_uniform >= bound * (1.0 - 1e-12) {
            return Ok(p.solution(uniform, p_uniform, SdpPath::TrivialBound, 0, bound - p_uniform, true));
        }
    }
    let sol = match lp_path(p) {
        Ok(s) => s,
        Err(Error::NoLpStructure(_)) => pg_path(p, opts)?,
        Err(e) => return Err(e),
    };
    if sol.p_bar + 1e-15 < p_uniform && k > 0 {
        return Ok(p.solution(uniform, p_uniform, sol.path, sol.iterations, sol.duality_gap_estimate, false));
    }
    Ok(sol)
}

impl SdpProblem {
    /// The coefficient that is the identity in cluster coordinates.
    fn to_cluster_inverse_identity(&self) -> Result<CMatrix> {
        // C = S⁻¹ (S⁻¹)† solves S C S† = 1
        let s_inv = invert(&self.to_cluster)?;
        Ok((&s_inv * &s_inv.adjoint()).hermitian_part())
    }
}

fn invert(m: &CMatrix) -> Result<CMatrix> {
    let n = m.rows();
    let mut a = m.clone();
    let mut inv = CMatrix::identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .expect("non-empty");
        if a[(piv, col)].norm() < 1e-300 {
            return Err(Error::IllPosed("basis of K is linearly dependent".into()));
        }
        for j in 0..n {
            let (x, y) = (a[(col, j)], a[(piv, j)]);
            a[(col, j)] = y;
            a[(piv, j)] = x;
            let (x, y) = (inv[(col, j)], inv[(piv, j)]);
            inv[(col, j)] = y;
            inv[(piv, j)] = x;
        }
        let d = a[(col, col)];
        for j in 0..n {
            a[(col, j)] /= d;
            inv[(col, j)] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[(i, col)];
                if f != ZERO {
                    for j in 0..n {
                        let (ac, ic) = (a[(col, j)], inv[(col, j)]);
                        a[(i, j)] -= f * ac;
                        inv[(i, j)] -= f * ic;
                    }
                }
            }
        }
    }
    Ok(inv)
}

/// Exact solution when the program reduces to a linear program.
///
/// Requires `H` diagonal, the marginals `X_j = Tr_out|b_j⟩⟨b_j|` pairwise
/// commuting, and the cross marginals `Tr_out|b_j⟩⟨b_k|` vanishing on the
/// joint eigenspaces of the `X_j`. Pinching onto those eigenspaces then maps
/// any feasible `C` to its diagonal without changing `P̄`, so the optimum is
/// `max Σ p_j h_j` subject to `Σ_j p_j x_jm ≤ 1`, `p ≥ 0`, solved by
/// enumerating vertices.
pub fn lp_path(p: &SdpProblem) -> Result<SdpSolution> {
    let k = p.dim();
    let h = &p.h;
    let hscale = h.max_abs().max(1e-300);
    for i in 0..k {
        for j in 0..k {
            if i != j && h[(i, j)].norm() > STRUCTURE_TOL * hscale {
                return Err(Error::NoLpStructure("objective is not diagonal".into()));
            }
        }
    }
    let xs: Vec<&CMatrix> = (0..k).map(|j| &p.cross[j * k + j]).collect();
    for i in 0..k {
        for j in i + 1..k {
            let comm = &(xs[i] * xs[j]) - &(xs[j] * xs[i]);
            if comm.max_abs() > STRUCTURE_TOL * xs[i].max_abs() * xs[j].max_abs() {
                return Err(Error::NoLpStructure("marginals do not commute".into()));
            }
        }
    }

    // joint eigenbasis from a generic combination
    let combo = xs
        .iter()
        .enumerate()
        .fold(CMatrix::zeros(p.in_dim, p.in_dim), |acc, (j, x)| {
            &acc + &x.scale(1.0 + 0.618_033_988_749_895 * (j as f64 + 1.0).sqrt())
        });
    let e = herm_eig(&combo)?;
    let d = p.in_dim;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(d);
    for m in 0..d {
        let v = e.vector(m);
        let mut row = Vec::with_capacity(k);
        for x in &xs {
            let xv = x.mul_vec(&v);
            let lam = densec::inner(&v, &xv).re;
            let resid: f64 = xv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b * lam).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if resid > JOINT_EIG_TOL * x.max_abs().max(1e-300) {
                return Err(Error::NoLpStructure("marginals have no joint eigenbasis".into()));
            }
            row.push(lam);
        }
        table.push(row);
    }
    // group equal joint eigenvalues and check that the cross terms pinch away
    let vecs: Vec<Vec<C64>> = (0..d).map(|m| e.vector(m)).collect();
    for m in 0..d {
        for mp in 0..d {
            let same = table[m]
                .iter()
                .zip(&table[mp])
                .all(|(a, b)| (a - b).abs() <= JOINT_EIG_TOL);
            if !same {
                continue;
            }
            for i in 0..k {
                for j in 0..k {
                    if i == j {
                        continue;
                    }
                    let y = &p.cross[i * k + j];
                    if y.sandwich(&vecs[m], &vecs[mp]).norm()
                        > STRUCTURE_TOL * (1.0 + y.max_abs())
                    {
                        return Err(Error::NoLpStructure("cross terms survive pinching".into()));
                    }
                }
            }
        }
    }

    let hdiag: Vec<f64> = (0..k).map(|j| h[(j, j)].re).collect();
    let (weights, value, examined) = solve_lp(&hdiag, &table)?;
    let coeff = CMatrix::from_real_diag(&weights);
    Ok(p.solution(coeff, value, SdpPath::LinearProgram, examined, 0.0, true))
}

/// `max h·p` subject to `Σ_j p_j x[m][j] ≤ 1` and `p ≥ 0`, by vertex
/// enumeration. Returns the optimal point, value and number of candidate
/// vertices examined.
fn solve_lp(h: &[f64], rows: &[Vec<f64>]) -> Result<(Vec<f64>, f64, usize)> {
    let k = h.len();
    let mut cons: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in rows {
        let scale = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if scale <= LP_FEAS_TOL {
            continue;
        }
        if !cons
            .iter()
            .any(|(c, _)| c.iter().zip(r).all(|(a, b)| (a - b).abs() <= JOINT_EIG_TOL))
        {
            cons.push((r.clone(), 1.0));
        }
    }
    for j in 0..k {
        if h[j] > 0.0 && cons.iter().all(|(c, _)| c[j] <= LP_FEAS_TOL) {
            return Err(Error::IllPosed("success probability is unbounded".into()));
        }
        let mut e = vec![0.0; k];
        e[j] = -1.0;
        cons.push((e, 0.0));
    }
    let m = cons.len();
    let count = binomial_count(m, k);
    if count > MAX_VERTEX_CANDIDATES {
        return Err(Error::NoLpStructure(format!("{count} candidate vertices")));
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut examined = 0;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        examined += 1;
        if let Some(x) = solve_dense(&idx.iter().map(|&i| cons[i].clone()).collect::<Vec<_>>()) {
            let feasible = cons.iter().all(|(c, b)| {
                let lhs: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                lhs <= b + LP_FEAS_TOL * (1.0 + b.abs())
            });
            if feasible {
                let x: Vec<f64> = x.into_iter().map(|v| v.max(0.0)).collect();
                let val: f64 = h.iter().zip(&x).map(|(a, b)| a * b).sum();
                if best.as_ref().is_none_or(|(_, bv)| val > *bv) {
                    best = Some((x, val));
                }
            }
        }
        if !next_combination(&mut idx, m) {
            break;
        }
    }
    let (x, v) = best.ok_or_else(|| Error::IllPosed("linear program has no vertex".into()))?;
    Ok((x, v, examined))
}

fn binomial_count(n: usize, k: usize) -> usize {
    let mut r: usize = 1;
    for i in 0..k.min(n - k.min(n)) {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the square system `c_i · x = b_i` by Gaussian elimination.
fn solve_dense(sys: &[(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let k = sys.len();
    let mut a: Vec<Vec<f64>> = sys
        .iter()
        .map(|(c, b)| {
            let mut row = c.clone();
            row.push(*b);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        for i in 0..k {
            if i != col {
                let f = a[i][col] / a[col][col];
                if f != 0.0 {
                    for j in col..=k {
                        a[i][j] -= f * a[col][j];
                    }
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

fn psd_part(x: &CMatrix) -> Result<CMatrix> {
    Ok(herm_eig(x)?.reconstruct_with(|l| l.max(0.0)))
}

fn frob_inner(x: &CMatrix, y: &CMatrix) -> f64 {
    x.data().iter().zip(y.data()).map(|(a, b)| (a.conj() * b).re).sum()
}

/// Solves `(1 + Φ*Φ) C = rhs` by conjugate gradients, starting from `c`.
fn cg_solve(p: &SdpProblem, rhs: &CMatrix, mut c: CMatrix) -> CMatrix {
    let op = |x: &CMatrix| x + &p.phi_adjoint(&p.phi(x));
    let mut r = rhs - &op(&c);
    let mut d = r.clone();
    let mut rr = frob_inner(&r, &r);
    let target = 1e-30 * frob_inner(rhs, rhs).max(1e-300);
    for _ in 0..4 * p.dim() * p.dim() + 10 {
        if rr <= target {
            break;
        }
        let ad = op(&d);
        let alpha = rr / frob_inner(&d, &ad);
        c = &c + &d.scale(alpha);
        r = &r - &ad.scale(alpha);
        let rr_new = frob_inner(&r, &r);
        d = &r + &d.scale(rr_new / rr);
        rr = rr_new;
    }
    c.hermitian_part()
}

/// Certified upper bound on the optimum from a dual candidate `Y`: any
/// `Y' ⪰ 0` with `Φ*(Y') ⪰ H` gives `P̄ ≤ Tr Y'`.
fn dual_bound(p: &SdpProblem, y: &CMatrix, gram_min: f64) -> Result<f64> {
    let y = psd_part(y)?;
    let slack = &p.phi_adjoint(&y) - &p.h;
    let deficit = (-herm_eig(&slack)?.min()).max(0.0);
    let t = if deficit > 0.0 { deficit / gram_min } else { 0.0 };
    Ok(y.trace().re + t * p.in_dim as f64)
}

/// General solver: ADMM on `C ⪰ 0`, `1 − Φ(C) ⪰ 0`, with both projections by
/// eigenvalue clipping. The final iterate is projected onto `C ⪰ 0` and
/// scaled onto the constraint boundary, so `p_bar` is always attained by a
/// feasible map; the reported gap is against a certified dual bound.
pub fn pg_path(p: &SdpProblem, opts: PgOptions) -> Result<SdpSolution> {
    let k = p.dim();
    let d = p.in_dim;
    if !(opts.step > 0.0) || opts.max_iter == 0 {
        return Err(Error::OutOfRange("ADMM step and iteration count must be positive".into()));
    }
    let hnorm = p.h.frobenius_norm();
    if !(hnorm > 0.0) {
        return Err(Error::ZeroCoefficient);
    }
    let hs = p.h.scale(1.0 / hnorm);
    let rho = opts.step;
    let ident = CMatrix::identity(d);
    // Φ*(1) is the Gram matrix of the basis
    let gram_min = herm_eig(&p.phi_adjoint(&ident))?.min();
    if !(gram_min > 0.0) {
        return Err(Error::IllPosed("basis of K is linearly dependent".into()));
    }

    let (mut c, _) = p.normalize(&CMatrix::identity(k))?;
    let mut z1 = c.clone();
    let mut u1 = CMatrix::zeros(k, k);
    let mut z2 = &ident - &p.phi(&c);
    let mut u2 = CMatrix::zeros(d, d);

    let mut best: (CMatrix, f64) = p.normalize(&c)?;
    let mut bound = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iter {
        iterations = it;
        let rhs = &(&(&hs.scale(1.0 / rho) + &z1) - &u1) + &p.phi_adjoint(&(&(&ident - &z2) - &u2));
        c = cg_solve(p, &rhs, c);
        z1 = psd_part(&(&c + &u1))?;
        let phic = p.phi(&c);
        z2 = psd_part(&(&(&ident - &phic) - &u2))?;
        u1 = &u1 + &(&c - &z1);
        u2 = &u2 + &(&(&phic + &z2) - &ident);

        if it % 25 == 0 || it == opts.max_iter {
            if let Ok(cand) = p.normalize(&z1) {
                if cand.1 > best.1 {
                    best = cand;
                }
            }
            let y = u2.scale(rho * hnorm);
            bound = bound.min(dual_bound(p, &y, gram_min)?);
            if bound - best.1 <= opts.tol * best.1.abs().max(1e-300) {
                converged = true;
                break;
            }
        }
    }
    let gap = (bound - best.1).max(0.0);
    Ok(p.solution(best.0, best.1, SdpPath::ProjectedGradient, iterations, gap, converged))
}
