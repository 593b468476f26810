//! Pure states, density operators, the symmetric subspace of `n` qudits, and
//! the two noisy qubit channels (depolarizing and amplitude damping).
//!
//! Qubit basis convention: `|0⟩` is the component that carries `η²` under
//! amplitude damping, `|1⟩` is the state the channel decays towards.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::densec::{self, herm_eig, kron, kron_vec, CMatrix, ONE, ZERO};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl TryFrom<Vec<[f64; 2]>> for PureState {
    type Error = Error;

    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        PureState::new(v.into_iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

impl From<PureState> for Vec<[f64; 2]> {
    fn from(s: PureState) -> Self {
        s.amplitudes.iter().map(|z| [z.re, z.im]).collect()
    }
}

impl PureState {
    /// Requires unit norm within `1e-12`.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch("empty state vector".into()));
        }
        let n = densec::norm(&amplitudes);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::OutOfRange(format!("state norm {n} is not 1")));
        }
        Ok(PureState { amplitudes })
    }

    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = densec::norm(&amplitudes);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::OutOfRange("cannot normalize a zero vector".into()));
        }
        Ok(PureState {
            amplitudes: amplitudes.into_iter().map(|z| z / n).collect(),
        })
    }

    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::OutOfRange(format!("basis index {k} >= {dim}")));
        }
        let mut a = vec![ZERO; dim];
        a[k] = ONE;
        Ok(PureState { amplitudes: a })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn conj(&self) -> Self {
        PureState {
            amplitudes: self.amplitudes.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn projector(&self) -> CMatrix {
        CMatrix::projector(&self.amplitudes)
    }

    pub fn density(&self) -> Density {
        Density {
            matrix: self.projector(),
            normalized: true,
        }
    }

    pub fn tensor(&self, other: &PureState) -> PureState {
        PureState {
            amplitudes: kron_vec(&self.amplitudes, &other.amplitudes),
        }
    }

    pub fn tensor_power(&self, n: usize) -> PureState {
        let mut out = PureState {
            amplitudes: vec![ONE],
        };
        for _ in 0..n {
            out = out.tensor(self);
        }
        out
    }

    pub fn overlap(&self, other: &PureState) -> C64 {
        densec::inner(&self.amplitudes, &other.amplitudes)
    }
}

/// Positive semidefinite operator; `normalized` marks unit trace. Operators
/// compressed onto a subspace are kept with `normalized = false`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Density {
    matrix: CMatrix,
    normalized: bool,
}

impl Density {
    /// Validates Hermiticity, positivity and unit trace.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = Density {
            matrix,
            normalized: true,
        };
        d.validate()?;
        Ok(d)
    }

    /// Validates Hermiticity, positivity and `trace <= 1`.
    pub fn subnormalized(matrix: CMatrix) -> Result<Self> {
        let d = Density {
            matrix,
            normalized: false,
        };
        d.validate()?;
        Ok(d)
    }

    pub(crate) fn trusted(matrix: CMatrix, normalized: bool) -> Self {
        Density { matrix, normalized }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Density {
            matrix: CMatrix::identity(dim).scale(1.0 / dim as f64),
            normalized: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() {
            return Err(Error::NotSquare(m.rows(), m.cols()));
        }
        if !m.is_hermitian(DENSITY_TOL) {
            return Err(Error::OutOfRange("density operator is not Hermitian".into()));
        }
        let lmin = herm_eig(m)?.min();
        if lmin < -DENSITY_TOL {
            return Err(Error::NotPsd(lmin));
        }
        let tr = m.trace().re;
        if self.normalized && (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::OutOfRange(format!("trace {tr} is not 1")));
        }
        if !self.normalized && tr > 1.0 + DENSITY_TOL {
            return Err(Error::OutOfRange(format!("trace {tr} exceeds 1")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn tensor(&self, other: &Density) -> Density {
        Density {
            matrix: kron(&self.matrix, &other.matrix),
            normalized: self.normalized && other.normalized,
        }
    }

    pub fn tensor_power(&self, n: usize) -> Density {
        let mut m = CMatrix::identity(1);
        for _ in 0..n {
            m = kron(&m, &self.matrix);
        }
        Density {
            matrix: m,
            normalized: self.normalized,
        }
    }

    /// `W† ρ W` for an isometry `W`; the result is generally subnormalized.
    pub fn compress(&self, w: &CMatrix) -> Result<Density> {
        if w.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "isometry with {} rows applied to a {}-dimensional state",
                w.rows(),
                self.dim()
            )));
        }
        Ok(Density {
            matrix: &(&w.adjoint() * &self.matrix) * w,
            normalized: false,
        })
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn expectation(&self, psi: &PureState) -> f64 {
        self.matrix.sandwich(psi.amplitudes(), psi.amplitudes()).re
    }
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
pub fn bloch_qubit(theta: f64, phi: f64) -> PureState {
    PureState {
        amplitudes: vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ],
    }
}

/// `(|0⟩ + e^{iφ}|1⟩)/√2`.
pub fn equator_qubit(phi: f64) -> PureState {
    bloch_qubit(PI / 2.0, phi)
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r.round()
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Dimension `C(n+d-1, d-1)` of the symmetric subspace of `n` qudits.
pub fn sym_dim(n: usize, d: usize) -> usize {
    binom(n + d - 1, d - 1) as usize
}

/// Orthonormal basis of the symmetric subspace of `n` qudits of dimension `d`.
///
/// Basis vectors are labelled by occupation numbers; they are ordered by the
/// first computational string in which each occupation appears, which for
/// qubits is `|n,0⟩, |n,1⟩, …, |n,n⟩` (`k` = number of `|1⟩` factors).
#[derive(Clone, Debug)]
pub struct SymmetricBasis {
    n: usize,
    d: usize,
    occupations: Vec<Vec<usize>>,
    embedding: CMatrix,
}

impl SymmetricBasis {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::OutOfRange(format!("local dimension {d} < 2")));
        }
        let full = d.pow(n as u32);
        let mut occupations: Vec<Vec<usize>> = Vec::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for idx in 0..full {
            let mut occ = vec![0; d];
            let mut x = idx;
            for _ in 0..n {
                occ[x % d] += 1;
                x /= d;
            }
            match occupations.iter().position(|o| *o == occ) {
                Some(p) => members[p].push(idx),
                None => {
                    occupations.push(occ);
                    members.push(vec![idx]);
                }
            }
        }
        let mut embedding = CMatrix::zeros(full, occupations.len());
        for (col, m) in members.iter().enumerate() {
            let a = 1.0 / (m.len() as f64).sqrt();
            for &idx in m {
                embedding[(idx, col)] = C64::new(a, 0.0);
            }
        }
        Ok(SymmetricBasis {
            n,
            d,
            occupations,
            embedding,
        })
    }

    pub fn copies(&self) -> usize {
        self.n
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.occupations.len()
    }

    pub fn occupations(&self) -> &[Vec<usize>] {
        &self.occupations
    }

    /// `dⁿ × dim` isometry whose columns are the symmetric basis states.
    pub fn embedding(&self) -> &CMatrix {
        &self.embedding
    }

    pub fn state(&self, i: usize) -> PureState {
        PureState {
            amplitudes: self.embedding.column(i),
        }
    }

    /// Coordinates of `ψ^{⊗n}` in this basis.
    pub fn power_state(&self, psi: &PureState) -> Result<PureState> {
        if psi.dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "{}-dimensional state for a {}-level symmetric basis",
                psi.dim(),
                self.d
            )));
        }
        let nf = factorial(self.n);
        let amps = self
            .occupations
            .iter()
            .map(|occ| {
                let count = nf / occ.iter().map(|&k| factorial(k)).product::<f64>();
                let mono: C64 = occ
                    .iter()
                    .zip(psi.amplitudes())
                    .map(|(&k, &a)| a.powu(k as u32))
                    .product();
                mono * count.sqrt()
            })
            .collect();
        Ok(PureState { amplitudes: amps })
    }
}

/// `|N,k⟩` in `2^N` computational coordinates.
pub fn sym_basis_state(n: usize, k: usize) -> Result<PureState> {
    if k > n {
        return Err(Error::OutOfRange(format!("k = {k} exceeds N = {n}")));
    }
    Ok(SymmetricBasis::new(n, 2)?.state(k))
}

/// Projector onto the symmetric subspace of `n` qudits.
pub fn sym_projector(n: usize, d: usize) -> Result<CMatrix> {
    let b = SymmetricBasis::new(n, d)?;
    Ok(b.embedding() * &b.embedding().adjoint())
}

/// `⟨N,j| X^{⊗N} |N,k⟩` for a qubit operator `X`, without forming the
/// `2^N`-dimensional tensor power.
///
/// Counts the strings `x` (weight `j`) and `y` (weight `k`) by how many
/// positions carry each of the four pairs `(xᵢ, yᵢ)`.
pub fn sym_tensor_power(x: &CMatrix, n: usize) -> Result<CMatrix> {
    if x.rows() != 2 || x.cols() != 2 {
        return Err(Error::DimensionMismatch("qubit operator expected".into()));
    }
    let nf = factorial(n);
    Ok(CMatrix::from_fn(n + 1, n + 1, |j, k| {
        let mut acc = ZERO;
        // e: positions with (1,1); c = j - e with (1,0); b = k - e with (0,1)
        for e in 0..=j.min(k) {
            let (c, b) = (j - e, k - e);
            if c + b + e > n {
                continue;
            }
            let a = n - c - b - e;
            let count = nf / (factorial(a) * factorial(b) * factorial(c) * factorial(e));
            acc += x[(0, 0)].powu(a as u32)
                * x[(0, 1)].powu(b as u32)
                * x[(1, 0)].powu(c as u32)
                * x[(1, 1)].powu(e as u32)
                * count;
        }
        acc / (binom(n, j) * binom(n, k)).sqrt()
    }))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::OutOfRange(format!("eta = {eta} outside [0, 1]")));
    }
    Ok(())
}

/// `η ψ + (1-η) I/2`.
pub fn depolarizing(psi: &Density, eta: f64) -> Result<Density> {
    check_eta(eta)?;
    if psi.dim() != 2 {
        return Err(Error::DimensionMismatch("depolarizing channel acts on a qubit".into()));
    }
    let m = &psi.matrix().scale(eta) + &CMatrix::identity(2).scale((1.0 - eta) / 2.0);
    Ok(Density::trusted(m, psi.is_normalized()))
}

/// Amplitude-damped image of the Bloch state `ψ(θ, φ)`.
pub fn amplitude_damping(theta: f64, phi: f64, eta: f64) -> Result<Density> {
    check_eta(eta)?;
    let c2 = (theta / 2.0).cos().powi(2);
    let off = eta / 2.0 * theta.sin();
    let m = CMatrix::new(
        2,
        2,
        vec![
            C64::new(eta * eta * c2, 0.0),
            C64::from_polar(off, -phi),
            C64::from_polar(off, phi),
            C64::new(1.0 - eta * eta * c2, 0.0),
        ],
    )?;
    Ok(Density::trusted(m, true))
}

/// Coherent state truncated to the Fock states `|0⟩ … |cutoff⟩`, amplitudes
/// left unnormalized.
#[derive(Clone, Debug)]
pub struct TruncatedCoherent {
    pub amplitudes: Vec<C64>,
    /// Probability weight on Fock states above the cutoff.
    pub tail_weight: f64,
}

impl TruncatedCoherent {
    pub fn renormalized(&self) -> Result<PureState> {
        PureState::normalized(self.amplitudes.clone())
    }

    /// Amplitudes padded with zeros to `dim` Fock levels.
    pub fn padded(&self, dim: usize) -> Vec<C64> {
        let mut a = self.amplitudes.clone();
        a.resize(dim.max(a.len()), ZERO);
        a
    }
}

pub fn coherent_state(alpha: C64, cutoff: usize) -> TruncatedCoherent {
    let x = alpha.norm_sqr();
    let pref = (-x / 2.0).exp();
    let mut amplitudes = Vec::with_capacity(cutoff + 1);
    let mut term = C64::new(pref, 0.0);
    for n in 0..=cutoff {
        if n > 0 {
            term = term * alpha / (n as f64).sqrt();
        }
        amplitudes.push(term);
    }
    TruncatedCoherent {
        amplitudes,
        tail_weight: poisson_tail(x, cutoff),
    }
}

/// `e^{-x} Σ_{n > cutoff} xⁿ/n!`, summed directly for relative accuracy.
pub fn poisson_tail(x: f64, cutoff: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = (-x).exp();
    for n in 1..=cutoff + 1 {
        term *= x / n as f64;
    }
    let mut sum = 0.0;
    let mut n = cutoff + 1;
    while term > sum * 1e-18 && term > 0.0 {
        sum += term;
        n += 1;
        term *= x / n as f64;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bloch_examples() {
        assert_eq!(bloch_qubit(0.0, 1.234).amplitudes()[1].norm(), 0.0);
        let one = bloch_qubit(PI, 0.0);
        assert!(close(one.amplitudes()[1].re, 1.0, 1e-15) && one.amplitudes()[0].norm() < 1e-15);
        let s = bloch_qubit(PI / 2.0, PI / 2.0);
        assert!(close(s.amplitudes()[0].re, FRAC_1_SQRT_2, 1e-15));
        assert!((s.amplitudes()[1] - C64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_basis_states() {
        let s = sym_basis_state(1, 1).unwrap();
        assert_eq!(s.amplitudes(), &[ZERO, ONE]);
        let psi_plus = sym_basis_state(2, 1).unwrap();
        for (a, want) in psi_plus.amplitudes().iter().zip([0.0, FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0]) {
            assert!(close(a.re, want, 1e-15) && a.im == 0.0);
        }
        let s32 = sym_basis_state(3, 2).unwrap();
        let t = 1.0 / 3f64.sqrt();
        for (i, a) in s32.amplitudes().iter().enumerate() {
            let want = if [3, 5, 6].contains(&i) { t } else { 0.0 };
            assert!(close(a.re, want, 1e-15) && a.im == 0.0);
        }
        assert!(sym_basis_state(2, 3).is_err());
    }

    #[test]
    fn projector_examples() {
        assert_eq!(sym_projector(1, 3).unwrap(), CMatrix::identity(3));
        let mut swap = CMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(i, j)] = ONE;
        }
        let want = (&CMatrix::identity(4) + &swap).scale(0.5);
        assert!((&sym_projector(2, 2).unwrap() - &want).max_abs() < 1e-15);
        assert_eq!(SymmetricBasis::new(3, 2).unwrap().dim(), 4);
        assert_eq!(SymmetricBasis::new(3, 4).unwrap().dim(), sym_dim(3, 4));
        assert_eq!(sym_dim(3, 4), 20);
    }

    #[test]
    fn projector_fixes_dicke_states() {
        for n in 1..=6 {
            let p = sym_projector(n, 2).unwrap();
            for k in 0..=n {
                let s = sym_basis_state(n, k).unwrap();
                let ps = p.mul_vec(s.amplitudes());
                let d: f64 = ps.iter().zip(s.amplitudes()).map(|(a, b)| (a - b).norm()).sum();
                assert!(d < 1e-13);
            }
        }
    }

    #[test]
    fn power_state_matches_compressed_tensor_power() {
        let b = SymmetricBasis::new(3, 3).unwrap();
        let psi = PureState::normalized(vec![C64::new(0.3, 0.1), C64::new(-0.5, 0.7), C64::new(0.2, -0.4)]).unwrap();
        let sym = b.power_state(&psi).unwrap();
        let full = psi.tensor_power(3);
        let compressed = b.embedding().adjoint().mul_vec(full.amplitudes());
        for (a, c) in sym.amplitudes().iter().zip(&compressed) {
            assert!((a - c).norm() < 1e-14);
        }
        assert!((densec::norm(sym.amplitudes()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sym_tensor_power_matches_compression() {
        let x = CMatrix::new(2, 2, vec![C64::new(0.3, 0.0), C64::new(0.1, 0.2), C64::new(-0.4, 0.05), C64::new(0.7, -0.1)]).unwrap();
        for n in 1..=5 {
            let b = SymmetricBasis::new(n, 2).unwrap();
            let mut full = CMatrix::identity(1);
            for _ in 0..n {
                full = kron(&full, &x);
            }
            let w = b.embedding();
            let direct = &(&w.adjoint() * &full) * w;
            let fast = sym_tensor_power(&x, n).unwrap();
            assert!((&direct - &fast).max_abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn depolarizing_examples() {
        let psi = bloch_qubit(0.7, 0.2).density();
        assert_eq!(depolarizing(&psi, 1.0).unwrap().matrix(), psi.matrix());
        assert!((depolarizing(&psi, 0.0).unwrap().matrix() - &CMatrix::identity(2).scale(0.5)).max_abs() < 1e-16);
        let zero = PureState::basis(2, 0).unwrap().density();
        let d = depolarizing(&zero, 0.5).unwrap();
        assert!((d.matrix() - &CMatrix::from_real_diag(&[0.75, 0.25])).max_abs() < 1e-16);
        d.validate().unwrap();
        assert!(depolarizing(&zero, 1.5).is_err());
    }

    #[test]
    fn amplitude_damping_examples() {
        let (theta, phi) = (1.1, -0.4);
        let pure = amplitude_damping(theta, phi, 1.0).unwrap();
        assert!((pure.matrix() - &bloch_qubit(theta, phi).projector()).max_abs() < 1e-15);

        let eta = 0.6;
        let eq = amplitude_damping(PI / 2.0, phi, eta).unwrap();
        let m = eq.matrix();
        assert!(close(m[(0, 0)].re, eta * eta / 2.0, 1e-15));
        assert!(close(m[(1, 1)].re, 1.0 - eta * eta / 2.0, 1e-15));
        assert!((m[(0, 1)] - C64::from_polar(eta / 2.0, -phi)).norm() < 1e-15);
        assert!((m[(1, 0)] - C64::from_polar(eta / 2.0, phi)).norm() < 1e-15);
        eq.validate().unwrap();

        let dead = amplitude_damping(0.3, 0.9, 0.0).unwrap();
        assert!((dead.matrix() - &CMatrix::from_real_diag(&[0.0, 1.0])).max_abs() < 1e-16);
        assert!(amplitude_damping(0.3, 0.9, -0.1).is_err());
    }

    #[test]
    fn coherent_examples() {
        let vac = coherent_state(ZERO, 4);
        assert_eq!(vac.amplitudes[0], ONE);
        assert_eq!(vac.tail_weight, 0.0);

        let c = coherent_state(C64::new(0.6, 0.8), 0);
        assert!(close(c.amplitudes[0].re, (-0.5f64).exp(), 1e-15));
        assert!(close(c.tail_weight, 1.0 - (-1.0f64).exp(), 1e-15));
        assert!(close(c.tail_weight, 0.632120558828558, 1e-14));

        let alpha = C64::from_polar(1.3, 0.4);
        let mut prev = f64::INFINITY;
        for cutoff in 0..20 {
            let t = coherent_state(alpha, cutoff);
            assert!(t.tail_weight < prev);
            let kept: f64 = t.amplitudes.iter().map(|a| a.norm_sqr()).sum();
            assert!(close(kept + t.tail_weight, 1.0, 1e-14));
            prev = t.tail_weight;
        }
    }
}
