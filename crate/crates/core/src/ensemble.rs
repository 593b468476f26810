//! Weighted input/output ensembles and the operators
//! `A = Σ w ρᵀ ⊗ 1` and `R = Σ w ρᵀ ⊗ ψ` built from them.
//!
//! Continuous orbits are turned into finite ensembles with quadrature rules
//! that are exact for the trigonometric-polynomial integrands that occur:
//! uniform nodes for U(1) phases and Gauss-Legendre in `cos θ` times uniform
//! nodes in `φ` for the Bloch sphere.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::densec::{kron, CMatrix};
use crate::error::{Error, Result};
use crate::qstate::{Density, PureState};

const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleEntry {
    pub weight: f64,
    pub rho_in: Density,
    pub psi_out: PureState,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "EnsembleRepr")]
pub struct Ensemble {
    in_dim: usize,
    out_dim: usize,
    entries: Vec<EnsembleEntry>,
}

#[derive(Deserialize)]
struct EnsembleRepr {
    in_dim: usize,
    out_dim: usize,
    entries: Vec<EnsembleEntry>,
}

impl TryFrom<EnsembleRepr> for Ensemble {
    type Error = Error;

    fn try_from(r: EnsembleRepr) -> Result<Self> {
        Ensemble::new(r.in_dim, r.out_dim, r.entries)
    }
}

impl Ensemble {
    pub fn new(in_dim: usize, out_dim: usize, entries: Vec<EnsembleEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidEnsemble("no entries".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.rho_in.dim() != in_dim || e.psi_out.dim() != out_dim {
                return Err(Error::InvalidEnsemble(format!(
                    "entry {i} has dimensions ({}, {}), expected ({in_dim}, {out_dim})",
                    e.rho_in.dim(),
                    e.psi_out.dim()
                )));
            }
            if !(e.weight >= 0.0) {
                return Err(Error::InvalidEnsemble(format!("entry {i} has negative weight")));
            }
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::InvalidEnsemble(format!("weights sum to {total}")));
        }
        Ok(Ensemble {
            in_dim,
            out_dim,
            entries,
        })
    }

    /// Uniform weights over the given pairs.
    pub fn uniform(pairs: Vec<(Density, PureState)>) -> Result<Self> {
        let (in_dim, out_dim) = pairs
            .first()
            .map(|(r, p)| (r.dim(), p.dim()))
            .ok_or_else(|| Error::InvalidEnsemble("no entries".into()))?;
        let w = 1.0 / pairs.len() as f64;
        let entries = pairs
            .into_iter()
            .map(|(rho_in, psi_out)| EnsembleEntry {
                weight: w,
                rho_in,
                psi_out,
            })
            .collect();
        Ensemble::new(in_dim, out_dim, entries)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn entries(&self) -> &[EnsembleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `Σ w ρᵀ ⊗ 1_out`.
pub fn compute_a(e: &Ensemble) -> CMatrix {
    let lambda = input_average_transposed(e);
    kron(&lambda, &CMatrix::identity(e.out_dim))
}

/// `Σ w ρᵀ`, the input factor of `A`.
pub fn input_average_transposed(e: &Ensemble) -> CMatrix {
    let mut lambda = CMatrix::zeros(e.in_dim, e.in_dim);
    for entry in &e.entries {
        lambda += &entry.rho_in.matrix().transpose().scale(entry.weight);
    }
    lambda
}

/// `Σ w ρᵀ ⊗ ψ`.
pub fn compute_r(e: &Ensemble) -> CMatrix {
    let n = e.in_dim * e.out_dim;
    let mut r = CMatrix::zeros(n, n);
    for entry in &e.entries {
        let rho_t = entry.rho_in.matrix().transpose().scale(entry.weight);
        r += &kron(&rho_t, &entry.psi_out.projector());
    }
    r
}

/// Uniform U(1) orbit `φ_j = 2πj/L`, exact for trigonometric polynomials of
/// degree below `L`.
pub fn phase_orbit<F>(build: F, points: usize) -> Result<Ensemble>
where
    F: Fn(f64) -> Result<(Density, PureState)>,
{
    if points == 0 {
        return Err(Error::OutOfRange("phase orbit needs at least one point".into()));
    }
    let pairs = (0..points)
        .map(|j| build(2.0 * PI * j as f64 / points as f64))
        .collect::<Result<Vec<_>>>()?;
    Ensemble::uniform(pairs)
}

/// Product rule on the Bloch sphere with measure `sin θ dθ dφ / 4π`:
/// `order` Gauss-Legendre nodes in `cos θ` times `2·order + 1` uniform nodes
/// in `φ`. Exact for spherical harmonics up to degree `2·order − 1`.
pub fn bloch_orbit<F>(build: F, order: usize) -> Result<Ensemble>
where
    F: Fn(f64, f64) -> Result<(Density, PureState)>,
{
    if order == 0 {
        return Err(Error::OutOfRange("Bloch quadrature order must be positive".into()));
    }
    let (nodes, weights) = gauss_legendre(order);
    let nphi = 2 * order + 1;
    let mut entries = Vec::with_capacity(order * nphi);
    for (x, w) in nodes.iter().zip(&weights) {
        let theta = x.clamp(-1.0, 1.0).acos();
        for j in 0..nphi {
            let phi = 2.0 * PI * j as f64 / nphi as f64;
            let (rho_in, psi_out) = build(theta, phi)?;
            entries.push(EnsembleEntry {
                weight: w / 2.0 / nphi as f64,
                rho_in,
                psi_out,
            });
        }
    }
    let (in_dim, out_dim) = (entries[0].rho_in.dim(), entries[0].psi_out.dim());
    // the Legendre weights sum to 2 only up to rounding
    let total: f64 = entries.iter().map(|e| e.weight).sum();
    for e in &mut entries {
        e.weight /= total;
    }
    Ensemble::new(in_dim, out_dim, entries)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densec::{herm_eig, ONE, ZERO};
    use crate::qstate::{bloch_qubit, equator_qubit, PureState};

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        let d = (a - b).max_abs();
        assert!(d <= tol, "differ by {d:e}");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-14, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn a_of_maximally_mixed_entry() {
        let e = Ensemble::uniform(vec![(Density::maximally_mixed(2), bloch_qubit(0.3, 0.1))]).unwrap();
        assert_close(&compute_a(&e), &CMatrix::identity(4).scale(0.5), 1e-16);
    }

    #[test]
    fn a_of_two_basis_states() {
        let e = Ensemble::uniform(vec![
            (PureState::basis(2, 0).unwrap().density(), PureState::basis(3, 0).unwrap()),
            (PureState::basis(2, 1).unwrap().density(), PureState::basis(3, 2).unwrap()),
        ])
        .unwrap();
        assert_close(&compute_a(&e), &kron(&CMatrix::from_real_diag(&[0.5, 0.5]), &CMatrix::identity(3)), 0.0);
        assert!((compute_r(&e).trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn r_single_entry() {
        let rho = crate::qstate::depolarizing(&bloch_qubit(1.0, 2.0).density(), 0.4).unwrap();
        let psi = bloch_qubit(0.2, -1.0);
        let e = Ensemble::uniform(vec![(rho.clone(), psi.clone())]).unwrap();
        assert_close(&compute_r(&e), &kron(&rho.matrix().transpose(), &psi.projector()), 1e-16);
    }

    #[test]
    fn bloch_identity_ensemble_gives_half_identity() {
        let e = bloch_orbit(|t, p| Ok((bloch_qubit(t, p).density(), bloch_qubit(t, p))), 4).unwrap();
        let total: f64 = e.entries().iter().map(|x| x.weight).sum();
        assert!((total - 1.0).abs() < 1e-15);
        assert_close(&compute_a(&e), &CMatrix::identity(4).scale(0.5), 1e-12);
        // ∫ψᵀ⊗ψ = (Π₊,₂)^{T₁} / 3
        let pi2 = crate::qstate::sym_projector(2, 2).unwrap();
        let want = crate::densec::partial_transpose(&pi2, &[2, 2], 0).unwrap().scale(1.0 / 3.0);
        assert_close(&compute_r(&e), &want, 1e-12);
    }

    #[test]
    fn phase_orbit_quadrature_is_stable() {
        let build = |phi: f64| Ok((equator_qubit(phi).density(), equator_qubit(phi)));
        let a8 = compute_a(&phase_orbit(build, 8).unwrap());
        let a16 = compute_a(&phase_orbit(build, 16).unwrap());
        assert_close(&a8, &a16, 1e-13);
        let r8 = compute_r(&phase_orbit(build, 8).unwrap());
        let r16 = compute_r(&phase_orbit(build, 16).unwrap());
        assert_close(&r8, &r16, 1e-13);
    }

    #[test]
    fn constant_build_replicates_single_state() {
        let psi = PureState::new(vec![ONE, ZERO]).unwrap();
        let e = phase_orbit(|_| Ok((psi.density(), psi.clone())), 5).unwrap();
        assert_eq!(e.len(), 5);
        let single = Ensemble::uniform(vec![(psi.density(), psi.clone())]).unwrap();
        assert_close(&compute_r(&e), &compute_r(&single), 1e-15);
    }

    #[test]
    fn r_is_dominated_by_a() {
        let e = bloch_orbit(
            |t, p| {
                let rho = crate::qstate::depolarizing(&bloch_qubit(t, p).density(), 0.7)?;
                Ok((rho, bloch_qubit(t, p).tensor_power(2)))
            },
            3,
        )
        .unwrap();
        let gap = herm_eig(&(&compute_a(&e) - &compute_r(&e))).unwrap();
        assert!(gap.min() >= -1e-10);
    }

    #[test]
    fn rejects_inconsistent_entries() {
        let bad = vec![
            EnsembleEntry { weight: 0.5, rho_in: Density::maximally_mixed(2), psi_out: bloch_qubit(0.0, 0.0) },
            EnsembleEntry { weight: 0.4, rho_in: Density::maximally_mixed(2), psi_out: bloch_qubit(1.0, 0.0) },
        ];
        assert!(Ensemble::new(2, 2, bad).is_err());
        let wrong_dim = vec![EnsembleEntry { weight: 1.0, rho_in: Density::maximally_mixed(3), psi_out: bloch_qubit(0.0, 0.0) }];
        assert!(Ensemble::new(2, 2, wrong_dim).is_err());
    }

    #[test]
    fn json_round_trip() {
        let e = phase_orbit(|phi| Ok((equator_qubit(phi).density(), equator_qubit(phi))), 3).unwrap();
        let s = e.to_json().unwrap();
        let back = Ensemble::from_json(&s).unwrap();
        assert_close(&compute_r(&back), &compute_r(&e), 1e-15);
        assert!(s.contains("\"rows\":2"));
    }
}
