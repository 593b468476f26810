//! Optimal probabilistic maps for a given pair of operators `A`, `R`.
//!
//! The mean fidelity of a map with Choi operator `E` is `Tr(ER)/Tr(EA)`. Its
//! maximum is the top eigenvalue of `M = A^{-1/2} R A^{-1/2}` on the support of
//! `A`, and every map built from the top eigenspace attains it.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::densec::{self, herm_eig, CMatrix, ZERO};
use crate::error::{Error, Result};
use crate::qstate::{Density, PureState};

/// Relative eigenvalue cut defining the support of `A`.
pub const SUPPORT_TOL: f64 = 1e-12;
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;
const PSD_TOL: f64 = 1e-10;
const TRACE_DECREASING_TOL: f64 = 1e-9;
const ILL_POSED_TOL: f64 = 1e-9;

/// Choi operator on `in ⊗ out` (input factor first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiRepr")]
pub struct ChoiOperator {
    in_dim: usize,
    out_dim: usize,
    matrix: CMatrix,
}

#[derive(Deserialize)]
struct ChoiRepr {
    in_dim: usize,
    out_dim: usize,
    matrix: CMatrix,
}

impl TryFrom<ChoiRepr> for ChoiOperator {
    type Error = Error;

    fn try_from(r: ChoiRepr) -> Result<Self> {
        ChoiOperator::new(r.matrix, r.in_dim, r.out_dim)
    }
}

impl ChoiOperator {
    /// Validates positivity and the trace-decreasing condition.
    pub fn new(matrix: CMatrix, in_dim: usize, out_dim: usize) -> Result<Self> {
        let e = Self::unchecked(matrix, in_dim, out_dim)?;
        e.validate()?;
        Ok(e)
    }

    /// Checks dimensions only.
    pub fn unchecked(matrix: CMatrix, in_dim: usize, out_dim: usize) -> Result<Self> {
        let n = in_dim * out_dim;
        if n == 0 || matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} Choi matrix for dimensions {in_dim} -> {out_dim}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(ChoiOperator {
            in_dim,
            out_dim,
            matrix,
        })
    }

    /// `|Φ⟩⟨Φ|` with `|Φ⟩ = Σ|j⟩|j⟩`.
    pub fn identity(dim: usize) -> Self {
        let phi: Vec<C64> = (0..dim * dim)
            .map(|i| if i / dim == i % dim { C64::new(1.0, 0.0) } else { ZERO })
            .collect();
        ChoiOperator {
            in_dim: dim,
            out_dim: dim,
            matrix: CMatrix::projector(&phi),
        }
    }

    /// `|v⟩⟨v|`, renormalized so that the largest eigenvalue of `Tr_out E` is 1.
    pub fn rank_one(v: &[C64], in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::unchecked(CMatrix::projector(v), in_dim, out_dim)?.renormalized()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// `Tr_out E`, an operator on the input space.
    pub fn input_marginal(&self) -> CMatrix {
        densec::partial_trace(&self.matrix, &[self.in_dim, self.out_dim], &[0])
            .expect("dimensions checked on construction")
    }

    /// Largest eigenvalue of `Tr_out E`.
    pub fn e_max(&self) -> Result<f64> {
        Ok(herm_eig(&self.input_marginal())?.max())
    }

    /// `E / e_max`.
    pub fn renormalized(&self) -> Result<Self> {
        let e = self.e_max()?;
        if !(e > 0.0) {
            return Err(Error::ZeroCoefficient);
        }
        Ok(ChoiOperator {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: self.matrix.scale(1.0 / e),
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        ChoiOperator {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            matrix: self.matrix.scale(s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_hermitian(PSD_TOL) {
            return Err(Error::OutOfRange("Choi matrix is not Hermitian".into()));
        }
        let eig = herm_eig(&self.matrix)?;
        if eig.min() < -PSD_TOL * eig.max().max(1.0) {
            return Err(Error::NotPsd(eig.min()));
        }
        let e = self.e_max()?;
        if e > 1.0 + TRACE_DECREASING_TOL {
            return Err(Error::OutOfRange(format!(
                "map is not trace decreasing: max eig(Tr_out E) = {e}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Top eigenspace of `M` on the support of `A`.
#[derive(Clone, Debug)]
pub struct OptimizerResult {
    pub f_max: f64,
    /// Orthonormal eigenvectors of `M` for the top eigenvalue cluster, in full
    /// `in ⊗ out` coordinates.
    pub cluster_vectors: Vec<Vec<C64>>,
    pub support_dim: usize,
    /// Pseudo-inverse square root of `A`.
    pub a_inv_sqrt: CMatrix,
    pub degenerate: bool,
    /// Spectrum of `M` restricted to the support, ascending.
    pub spectrum: Vec<f64>,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl OptimizerResult {
    /// The vectors `A^{-1/2}|μ_j⟩` spanning the optimal subspace `K`.
    pub fn k_basis(&self) -> Vec<Vec<C64>> {
        self.cluster_vectors
            .iter()
            .map(|mu| self.a_inv_sqrt.mul_vec(mu))
            .collect()
    }

    pub fn cluster_dim(&self) -> usize {
        self.cluster_vectors.len()
    }
}

fn check_operator(x: &CMatrix, n: usize, what: &str) -> Result<()> {
    if x.rows() != n || x.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {n}x{n}",
            x.rows(),
            x.cols()
        )));
    }
    if !x.is_hermitian(1e-10 * x.max_abs().max(1.0)) {
        return Err(Error::OutOfRange(format!("{what} is not Hermitian")));
    }
    Ok(())
}

/// Maximizes the mean fidelity `Tr(ER)/Tr(EA)`.
///
/// The cluster holds every eigenvector of `M` with eigenvalue at least
/// `f_max (1 − cluster_tol)`.
pub fn optimize(
    a: &CMatrix,
    r: &CMatrix,
    in_dim: usize,
    out_dim: usize,
    cluster_tol: f64,
) -> Result<OptimizerResult> {
    let n = in_dim * out_dim;
    check_operator(a, n, "A")?;
    check_operator(r, n, "R")?;
    if !(0.0..1.0).contains(&cluster_tol) {
        return Err(Error::OutOfRange(format!("cluster tolerance {cluster_tol}")));
    }

    let ea = herm_eig(a)?;
    let lmax = ea.max();
    if !(lmax > 0.0) {
        return Err(Error::IllPosed("A vanishes".into()));
    }
    if ea.min() < -PSD_TOL * lmax {
        return Err(Error::NotPsd(ea.min()));
    }
    let thr = (SUPPORT_TOL * lmax).max(densec::default_support_threshold(n, lmax));
    let support: Vec<usize> = (0..n).filter(|&i| ea.values[i] > thr).collect();
    let s = support.len();
    let vs: Vec<Vec<C64>> = support.iter().map(|&i| ea.vector(i)).collect();
    let scale: Vec<f64> = support.iter().map(|&i| densec::inv_sqrt(ea.values[i])).collect();

    // weight of R outside supp(A)
    let tr_r = r.trace().re;
    let rv: Vec<Vec<C64>> = vs.iter().map(|v| r.mul_vec(v)).collect();
    let inside: f64 = vs
        .iter()
        .zip(&rv)
        .map(|(v, rv)| densec::inner(v, rv).re)
        .sum();
    if tr_r - inside > ILL_POSED_TOL * tr_r.abs().max(1e-300) {
        return Err(Error::IllPosed(format!(
            "R has weight {:e} outside the support of A",
            tr_r - inside
        )));
    }

    let m = CMatrix::from_fn(s, s, |i, j| densec::inner(&vs[i], &rv[j]) * (scale[i] * scale[j]));
    let em = herm_eig(&m)?;
    let f_max = em.max();
    let cut = f_max - cluster_tol * f_max.abs();
    let cluster_vectors: Vec<Vec<C64>> = (0..s)
        .rev()
        .take_while(|&i| em.values[i] >= cut)
        .map(|i| {
            let y = em.vector(i);
            let mut mu = vec![ZERO; n];
            for (yk, vk) in y.iter().zip(&vs) {
                for (m, v) in mu.iter_mut().zip(vk) {
                    *m += yk * v;
                }
            }
            mu
        })
        .collect();

    let a_inv_sqrt = CMatrix::from_fn(n, n, |i, j| {
        vs.iter()
            .zip(&scale)
            .map(|(v, &l)| v[i] * v[j].conj() * l)
            .sum()
    });

    Ok(OptimizerResult {
        f_max,
        degenerate: cluster_vectors.len() > 1,
        cluster_vectors,
        support_dim: s,
        a_inv_sqrt,
        spectrum: em.values,
        in_dim,
        out_dim,
    })
}

/// `E = Σ c_jk A^{-1/2}|μ_j⟩⟨μ_k|A^{-1/2}`, divided by `e_max`.
///
/// `coeff` defaults to the identity on the cluster.
pub fn build_choi(res: &OptimizerResult, coeff: Option<&CMatrix>) -> Result<ChoiOperator> {
    let c = res.cluster_dim();
    if c == 0 {
        return Err(Error::EmptySubspace);
    }
    let id;
    let coeff = match coeff {
        Some(x) => x,
        None => {
            id = CMatrix::identity(c);
            &id
        }
    };
    if coeff.rows() != c || coeff.cols() != c {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} coefficient for a {c}-dimensional cluster",
            coeff.rows(),
            coeff.cols()
        )));
    }
    if coeff.max_abs() == 0.0 {
        return Err(Error::ZeroCoefficient);
    }
    let ec = herm_eig(coeff)?;
    if ec.min() < -PSD_TOL * ec.max().abs().max(1.0) {
        return Err(Error::NotPsd(ec.min()));
    }
    let b = CMatrix::from_columns(&res.k_basis())?;
    let e = &(&b * coeff) * &b.adjoint();
    ChoiOperator::unchecked(e.hermitian_part(), res.in_dim, res.out_dim)?.renormalized()
}

fn check_input(e: &ChoiOperator, rho: &Density) -> Result<()> {
    if rho.dim() != e.in_dim {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional state fed to a map on {} dimensions",
            rho.dim(),
            e.in_dim
        )));
    }
    Ok(())
}

/// `Tr_in[E (ρᵀ ⊗ 1)]`, not normalized.
pub fn apply(e: &ChoiOperator, rho: &Density) -> Result<Density> {
    check_input(e, rho)?;
    let (di, d_out) = (e.in_dim, e.out_dim);
    let (m, r) = (&e.matrix, rho.matrix());
    let out = CMatrix::from_fn(d_out, d_out, |b, bp| {
        let mut s = ZERO;
        for a in 0..di {
            for ap in 0..di {
                s += m[(a * d_out + b, ap * d_out + bp)] * r[(a, ap)];
            }
        }
        s
    });
    Ok(Density::trusted(out.hermitian_part(), false))
}

/// `Tr[E (ρᵀ ⊗ 1)]`.
pub fn success_prob(e: &ChoiOperator, rho: &Density) -> Result<f64> {
    check_input(e, rho)?;
    Ok(e.input_marginal().trace_product(&rho.matrix().transpose()).re)
}

/// Fidelity of the normalized output with `ψ`.
pub fn per_input_fidelity(e: &ChoiOperator, rho: &Density, psi: &PureState) -> Result<f64> {
    if psi.dim() != e.out_dim {
        return Err(Error::DimensionMismatch(format!(
            "{}-dimensional target for a {}-dimensional output",
            psi.dim(),
            e.out_dim
        )));
    }
    let out = apply(e, rho)?;
    let p = out.trace();
    if !(p > f64::EPSILON * e.matrix.trace().re.abs()) {
        return Err(Error::ZeroSuccess);
    }
    Ok(out.expectation(psi) / p)
}

/// `Tr(ER)/Tr(EA)`.
pub fn mean_fidelity(e: &ChoiOperator, a: &CMatrix, r: &CMatrix) -> Result<f64> {
    let p = mean_success(e, a)?;
    if !(p > f64::EPSILON * e.matrix.trace().re.abs()) {
        return Err(Error::ZeroSuccess);
    }
    check_operator(r, e.matrix.rows(), "R")?;
    Ok(e.matrix.trace_product(r).re / p)
}

/// `Tr(EA)`.
pub fn mean_success(e: &ChoiOperator, a: &CMatrix) -> Result<f64> {
    check_operator(a, e.matrix.rows(), "A")?;
    Ok(e.matrix.trace_product(a).re)
}

/// Average of `(U* ⊗ V) E (Uᵀ ⊗ V†)` over `points` equally spaced phases, with
/// `U|a⟩ = e^{i q_a φ}|a⟩` and `V|b⟩ = e^{i r_b φ}|b⟩`.
///
/// An entry survives when its charge difference is a multiple of `points`,
/// so the result is the exact U(1) average whenever `points` exceeds every
/// charge difference.
pub fn twirl_phase(
    e: &ChoiOperator,
    in_weights: &[i64],
    out_weights: &[i64],
    points: usize,
) -> Result<ChoiOperator> {
    if in_weights.len() != e.in_dim || out_weights.len() != e.out_dim {
        return Err(Error::DimensionMismatch(format!(
            "charges of length ({}, {}) for a map {} -> {}",
            in_weights.len(),
            out_weights.len(),
            e.in_dim,
            e.out_dim
        )));
    }
    if points == 0 {
        return Err(Error::OutOfRange("twirl needs at least one point".into()));
    }
    let d_out = e.out_dim;
    let charge = |i: usize| out_weights[i % d_out] - in_weights[i / d_out];
    let n = e.matrix.rows();
    let m = CMatrix::from_fn(n, n, |i, j| {
        if (charge(i) - charge(j)).rem_euclid(points as i64) == 0 {
            e.matrix[(i, j)]
        } else {
            ZERO
        }
    });
    ChoiOperator::unchecked(m, e.in_dim, e.out_dim)
}
