//! Worked cloning and purification problems.
//!
//! Each constructor returns a [`ScenarioBundle`]: the input family (from which
//! a quadrature ensemble is built), closed-form `A` and `R`, analytic oracle
//! values and, where known, an explicit optimal map.
//!
//! Coordinates: depolarizing purification uses the full three-qubit tensor
//! product. Every other qubit scenario uses symmetric-subspace coordinates on
//! its multi-copy factors, and coherent-state cloning uses Fock coordinates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::densec::{kron, partial_transpose, CMatrix, ZERO};
use crate::ensemble::{bloch_orbit, compute_a, compute_r, phase_orbit, Ensemble};
use crate::error::{Error, Result};
use crate::optimizer::{optimize, ChoiOperator, OptimizerResult};
use crate::sdp::{solve_with, PgOptions, SdpProblem, SdpSolution};
use crate::qstate::{
    amplitude_damping, binom, bloch_qubit, coherent_state, depolarizing, equator_qubit,
    poisson_tail, sym_projector, sym_tensor_power, Density, PureState, SymmetricBasis,
};

/// Relative tie tolerance in [`best_k`].
pub const BEST_K_TIE_TOL: f64 = 1e-12;
/// Fock tail weight left outside the amplified output truncation.
pub const COHERENT_TAIL: f64 = 1e-17;

pub type PhaseBuild = Arc<dyn Fn(f64) -> Result<(Density, PureState)> + Send + Sync>;
pub type BlochBuild = Arc<dyn Fn(f64, f64) -> Result<(Density, PureState)> + Send + Sync>;
pub type QuditBuild = Arc<dyn Fn(&PureState) -> Result<(Density, PureState)> + Send + Sync>;

/// Input/target pairs as a function of the group parameter, with the
/// distribution the ensemble averages over.
#[derive(Clone)]
pub enum InputFamily {
    /// Uniform phase `φ ∈ [0, 2π)`.
    Phase(PhaseBuild),
    /// Uniform on the Bloch sphere.
    Bloch(BlochBuild),
    /// Haar-random pure state of a qudit.
    HaarQudit { dim: usize, build: QuditBuild },
}

impl fmt::Debug for InputFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputFamily::Phase(_) => write!(f, "Phase"),
            InputFamily::Bloch(_) => write!(f, "Bloch"),
            InputFamily::HaarQudit { dim, .. } => write!(f, "HaarQudit({dim})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Encoding {
    Parallel,
    Perpendicular,
}

impl FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" => Ok(Encoding::Parallel),
            "perpendicular" => Ok(Encoding::Perpendicular),
            _ => Err(Error::OutOfRange(format!("unknown encoding '{s}'"))),
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Parallel => "parallel",
            Encoding::Perpendicular => "perpendicular",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioName {
    UniversalClone,
    Transposition,
    PhaseCovariant,
    CoherentClone,
    DepolPurify,
    AdPurify,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 6] = [
        ScenarioName::UniversalClone,
        ScenarioName::Transposition,
        ScenarioName::PhaseCovariant,
        ScenarioName::CoherentClone,
        ScenarioName::DepolPurify,
        ScenarioName::AdPurify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::UniversalClone => "universal-clone",
            ScenarioName::Transposition => "transposition",
            ScenarioName::PhaseCovariant => "phase-covariant",
            ScenarioName::CoherentClone => "coherent-clone",
            ScenarioName::DepolPurify => "depol-purify",
            ScenarioName::AdPurify => "ad-purify",
        }
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::OutOfRange(format!("unknown scenario '{s}'")))
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Parameters of all scenarios; each constructor reads the ones it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioParams {
    pub m: usize,
    pub n: usize,
    pub d: usize,
    pub eta: f64,
    pub r: f64,
    pub cutoff: usize,
    pub encoding: Encoding,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            m: 2,
            n: 1,
            d: 2,
            eta: 0.5,
            r: 0.5,
            cutoff: 3,
            encoding: Encoding::Parallel,
        }
    }
}

pub fn build(name: ScenarioName, p: &ScenarioParams) -> Result<ScenarioBundle> {
    match name {
        ScenarioName::UniversalClone => universal_clone(p.m),
        ScenarioName::Transposition => transposition(p.n, p.d),
        ScenarioName::PhaseCovariant => phase_covariant(p.n, p.m),
        ScenarioName::CoherentClone => coherent_clone(p.m, p.r, p.cutoff),
        ScenarioName::DepolPurify => depol_purify(p.eta, p.encoding),
        ScenarioName::AdPurify => ad_purify(p.n, p.eta),
    }
}

#[derive(Clone, Debug)]
pub struct ScenarioBundle {
    pub name: ScenarioName,
    /// Human-readable parameter list.
    pub label: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub family: InputFamily,
    /// Quadrature size: phase points or Bloch Gauss-Legendre order.
    pub quadrature: usize,
    pub closed_a: CMatrix,
    pub closed_r: CMatrix,
    pub oracle_f: Option<f64>,
    /// `true` when `oracle_f` is the optimal fidelity, `false` when it is the
    /// fidelity of `explicit_map` only.
    pub oracle_f_is_optimum: bool,
    pub oracle_p: Option<f64>,
    pub explicit_map: Option<ChoiOperator>,
    /// Second optimal map for degenerate problems.
    pub alt_map: Option<ChoiOperator>,
    /// U(1) charges `(input, output)` of the basis vectors.
    pub charges: Option<(Vec<i64>, Vec<i64>)>,
    /// Fidelity without processing, for purification.
    pub baseline_f: Option<f64>,
}

/// Output of [`ScenarioBundle::solve`].
#[derive(Clone, Debug)]
pub struct Solved {
    pub optimum: OptimizerResult,
    pub solution: SdpSolution,
    pub choi: ChoiOperator,
}

impl ScenarioBundle {
    /// Finite ensemble from the input family; `None` for Haar qudits with
    /// `d > 2`, where no quadrature is provided.
    pub fn ensemble(&self) -> Result<Option<Ensemble>> {
        Ok(match &self.family {
            InputFamily::Phase(b) => {
                let b = b.clone();
                Some(phase_orbit(move |phi| b(phi), self.quadrature)?)
            }
            InputFamily::Bloch(b) => {
                let b = b.clone();
                Some(bloch_orbit(move |t, p| b(t, p), self.quadrature)?)
            }
            InputFamily::HaarQudit { dim: 2, build } => {
                let b = build.clone();
                Some(bloch_orbit(move |t, p| b(&bloch_qubit(t, p)), self.quadrature)?)
            }
            InputFamily::HaarQudit { .. } => None,
        })
    }

    /// Optimal fidelity from the closed-form operators and the optimal map
    /// of largest mean success probability.
    pub fn solve(&self, cluster_tol: f64) -> Result<Solved> {
        self.solve_with(cluster_tol, PgOptions::default())
    }

    pub fn solve_with(&self, cluster_tol: f64, opts: PgOptions) -> Result<Solved> {
        let optimum = optimize(&self.closed_a, &self.closed_r, self.in_dim, self.out_dim, cluster_tol)?;
        let charges = self.charges.as_ref().map(|(q, r)| (q.as_slice(), r.as_slice()));
        let problem = SdpProblem::new(&optimum, &self.closed_a, charges)?;
        let solution = solve_with(&problem, opts)?;
        let choi = solution.choi(&optimum)?;
        Ok(Solved { optimum, solution, choi })
    }

    /// `(A, R)` from the quadrature ensemble.
    pub fn quadrature_ops(&self) -> Result<Option<(CMatrix, CMatrix)>> {
        Ok(self.ensemble()?.map(|e| (compute_a(&e), compute_r(&e))))
    }

    /// Input/target pair for the orbit point `t ∈ [0, 1)`; Bloch and qudit
    /// families are walked along a fixed spiral.
    pub fn orbit_point(&self, t: f64) -> Result<(Density, PureState)> {
        use std::f64::consts::PI;
        let theta = (1.0 - 2.0 * t).clamp(-1.0, 1.0).acos();
        let phi = 2.0 * PI * t * 7.0;
        match &self.family {
            InputFamily::Phase(b) => b(2.0 * PI * t),
            InputFamily::Bloch(b) => b(theta, phi),
            InputFamily::HaarQudit { dim, build } => {
                let amps: Vec<C64> = (0..*dim)
                    .map(|k| {
                        let w = 1.0 + (k as f64 * 1.3 + t * 5.0).sin().abs();
                        C64::from_polar(w, 2.0 * PI * t * (k as f64 + 1.0))
                    })
                    .collect();
                build(&PureState::normalized(amps)?)
            }
        }
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Operator permuting qubits `i` and `j` of `n`.
fn qubit_swap(n: usize, i: usize, j: usize) -> CMatrix {
    let dim = 1usize << n;
    let (bi, bj) = (n - 1 - i, n - 1 - j);
    CMatrix::from_fn(dim, dim, |row, col| {
        let (xi, xj) = ((col >> bi) & 1, (col >> bj) & 1);
        let swapped = (col & !(1 << bi) & !(1 << bj)) | (xj << bi) | (xi << bj);
        if row == swapped { c(1.0) } else { ZERO }
    })
}

/// Projector onto the symmetric subspace of qubits `i`, `j` of `n`.
fn pair_sym_projector(n: usize, i: usize, j: usize) -> CMatrix {
    (&CMatrix::identity(1 << n) + &qubit_swap(n, i, j)).scale(0.5)
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::OutOfRange(msg.into()))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    require((0.0..=1.0).contains(&eta), format!("eta = {eta} outside [0, 1]"))
}

/// `ψ → ψ^{⊗M}` for Bloch-uniform qubits, output in symmetric coordinates.
pub fn universal_clone(m: usize) -> Result<ScenarioBundle> {
    require((1..=10).contains(&m), format!("M = {m} outside 1..=10"))?;
    let sout = SymmetricBasis::new(m, 2)?;
    let out_dim = sout.dim();
    // 1 ⊗ W compresses the full-space forms onto 1 ⊗ Π₊,M
    let w = kron(&CMatrix::identity(2), sout.embedding());
    let a_full = kron(&CMatrix::identity(2).scale(0.5), &sym_projector(m, 2)?);
    let r_full = partial_transpose(&sym_projector(m + 1, 2)?, &[2, 1 << m], 0)?
        .scale(1.0 / (m + 2) as f64);
    let closed_a = &(&w.adjoint() * &a_full) * &w;
    let closed_r = &(&w.adjoint() * &r_full) * &w;
    let build: BlochBuild = Arc::new(move |t, p| {
        let psi = bloch_qubit(t, p);
        Ok((psi.density(), sout.power_state(&psi)?))
    });
    Ok(ScenarioBundle {
        name: ScenarioName::UniversalClone,
        label: format!("M={m}"),
        in_dim: 2,
        out_dim,
        family: InputFamily::Bloch(build),
        quadrature: m / 2 + 2,
        closed_a,
        closed_r,
        oracle_f: Some(2.0 / (m + 1) as f64),
        oracle_f_is_optimum: true,
        oracle_p: Some(1.0),
        explicit_map: (m == 1).then(|| ChoiOperator::identity(2)),
        alt_map: None,
        charges: Some((vec![0, 1], (0..=m as i64).collect())),
        baseline_f: None,
    })
}

/// `ψ^{⊗N} → ψ*` for Haar-random qudits, input in symmetric coordinates.
pub fn transposition(n: usize, d: usize) -> Result<ScenarioBundle> {
    require(n >= 1 && d >= 2, "transposition needs N >= 1 and d >= 2")?;
    require(d.pow(n as u32 + 1) <= 4096, "transposition problem too large")?;
    let sn = SymmetricBasis::new(n, d)?;
    let sn1 = SymmetricBasis::new(n + 1, d)?;
    let (dn, dn1) = (sn.dim(), sn1.dim());
    // V = W_{N+1}† (W_N ⊗ 1), so that R ∝ V†V
    let v = &sn1.embedding().adjoint() * &kron(sn.embedding(), &CMatrix::identity(d));
    let closed_r = (&v.adjoint() * &v).scale(1.0 / dn1 as f64);
    let closed_a = CMatrix::identity(dn * d).scale(1.0 / dn as f64);
    let build: QuditBuild = Arc::new(move |psi: &PureState| {
        Ok((sn.power_state(psi)?.density(), psi.conj()))
    });
    Ok(ScenarioBundle {
        name: ScenarioName::Transposition,
        label: format!("N={n} d={d}"),
        in_dim: dn,
        out_dim: d,
        family: InputFamily::HaarQudit { dim: d, build },
        quadrature: (n + 2) / 2 + 2,
        closed_a,
        closed_r,
        oracle_f: Some((n + 1) as f64 / (n + d) as f64),
        oracle_f_is_optimum: true,
        oracle_p: Some(1.0),
        explicit_map: None,
        alt_map: None,
        charges: None,
        baseline_f: None,
    })
}

/// `|Φ_{M,N,y}⟩` in symmetric coordinates `k·(M+1) + j`.
fn phi_state(n: usize, m: usize, y: i64) -> Vec<C64> {
    let mut v = vec![ZERO; (n + 1) * (m + 1)];
    for k in 0..=n {
        let j = k as i64 + y;
        if (0..=m as i64).contains(&j) {
            let j = j as usize;
            v[k * (m + 1) + j] = c((binom(n, k) * binom(m, j)).sqrt());
        }
    }
    v
}

/// Optimal phase-covariant fidelity `2^{-M} Σ_k C(M, k + ⌊(M−N)/2⌋)`.
pub fn phase_covariant_fidelity(n: usize, m: usize) -> f64 {
    let delta = (m - n) / 2;
    (0..=n).map(|k| binom(m, k + delta)).sum::<f64>() / 2f64.powi(m as i32)
}

/// Choi vector of `|N,k⟩ → 𝒩⁻¹ √(C(M,k+Δ)/C(N,k)) |M,k+Δ⟩`.
pub fn phase_covariant_map(n: usize, m: usize, delta: usize) -> Result<ChoiOperator> {
    require(n + delta <= m, "shift exceeds the output space")?;
    let mut v = vec![ZERO; (n + 1) * (m + 1)];
    for k in 0..=n {
        v[k * (m + 1) + k + delta] = c((binom(m, k + delta) / binom(n, k)).sqrt());
    }
    ChoiOperator::rank_one(&v, n + 1, m + 1)
}

/// `N → M` cloning of equatorial qubits.
pub fn phase_covariant(n: usize, m: usize) -> Result<ScenarioBundle> {
    require(n >= 1 && n <= m, "phase-covariant cloning needs 1 <= N <= M")?;
    require(m <= 40, "M too large")?;
    let (din, dout) = (n + 1, m + 1);
    let lam: Vec<f64> = (0..=n).map(|k| binom(n, k) / 2f64.powi(n as i32)).collect();
    let closed_a = kron(&CMatrix::from_real_diag(&lam), &CMatrix::identity(dout));
    let mut closed_r = CMatrix::zeros(din * dout, din * dout);
    for y in -(n as i64)..=m as i64 {
        closed_r += &CMatrix::projector(&phi_state(n, m, y));
    }
    let closed_r = closed_r.scale(1.0 / 2f64.powi((n + m) as i32));

    let delta = (m - n) / 2;
    let explicit = phase_covariant_map(n, m, delta)?;
    let alt = if (m - n) % 2 == 1 {
        Some(phase_covariant_map(n, m, delta + 1)?)
    } else {
        None
    };
    // the unique map for even M − N: P̄ = Σ_k λ_k |c_k|² with max |c_k| = 1
    let oracle_p = if alt.is_none() {
        let w: Vec<f64> = (0..=n).map(|k| binom(m, k + delta) / binom(n, k)).collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        Some(lam.iter().zip(&w).map(|(l, w)| l * w / norm).sum())
    } else {
        None
    };

    let sin = SymmetricBasis::new(n, 2)?;
    let sout = SymmetricBasis::new(m, 2)?;
    let build: PhaseBuild = Arc::new(move |phi| {
        let psi = equator_qubit(phi);
        Ok((sin.power_state(&psi)?.density(), sout.power_state(&psi)?))
    });
    Ok(ScenarioBundle {
        name: ScenarioName::PhaseCovariant,
        label: format!("N={n} M={m}"),
        in_dim: din,
        out_dim: dout,
        family: InputFamily::Phase(build),
        quadrature: 2 * (n + m) + 1,
        closed_a,
        closed_r,
        oracle_f: Some(phase_covariant_fidelity(n, m)),
        oracle_f_is_optimum: true,
        oracle_p,
        explicit_map: Some(explicit),
        alt_map: alt,
        charges: Some(((0..=n as i64).collect(), (0..=m as i64).collect())),
        baseline_f: None,
    })
}

/// Fidelity of the projected noiseless-amplification filter,
/// `e^{−M r²} Σ_{n≤N} (M r²)ⁿ/n!`.
pub fn coherent_filter_fidelity(m: usize, r: f64, cutoff: usize) -> f64 {
    let x = m as f64 * r * r;
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..=cutoff {
        term *= x / k as f64;
        sum += term;
    }
    sum
}

/// Success probability of the filter, `e^{−r²} Σ_{n≤N} M^{n−N} r^{2n}/n!`.
pub fn coherent_filter_probability(m: usize, r: f64, cutoff: usize) -> f64 {
    let (x, mf) = (r * r, m as f64);
    let mut term = (-x).exp() * mf.powi(-(cutoff as i32));
    let mut sum = term;
    for k in 1..=cutoff {
        term *= x * mf / k as f64;
        sum += term;
    }
    sum
}

/// Smallest Fock truncation of `|√M α⟩` leaving tail weight below
/// [`COHERENT_TAIL`].
pub fn coherent_output_dim(m: usize, r: f64, cutoff: usize) -> usize {
    let x = m as f64 * r * r;
    let mut d = cutoff + 1;
    while poisson_tail(x, d - 1) > COHERENT_TAIL {
        d += 1;
    }
    d
}

/// `|α⟩ → |√M α⟩` on the circle `|α| = r`, input projected onto
/// `|0⟩ … |cutoff⟩`.
pub fn coherent_clone(m: usize, r: f64, cutoff: usize) -> Result<ScenarioBundle> {
    require(m >= 1, "M must be at least 1")?;
    require(r.is_finite() && r >= 0.0 && r <= 4.0, format!("r = {r} outside [0, 4]"))?;
    require(cutoff <= 40, "cutoff too large")?;
    let din = cutoff + 1;
    let dout = coherent_output_dim(m, r, cutoff);
    let gain = (m as f64).sqrt();

    // real amplitudes at φ = 0
    let cin = coherent_state(c(r), cutoff).amplitudes;
    let cout = coherent_state(c(gain * r), dout - 1).renormalized()?;
    let lam: Vec<f64> = cin.iter().map(|z| z.norm_sqr()).collect();
    let closed_a = kron(&CMatrix::from_real_diag(&lam), &CMatrix::identity(dout));
    let mut closed_r = CMatrix::zeros(din * dout, din * dout);
    for y in -(cutoff as i64)..dout as i64 {
        let mut v = vec![ZERO; din * dout];
        for k in 0..din {
            let j = k as i64 + y;
            if (0..dout as i64).contains(&j) {
                v[k * dout + j as usize] = cin[k] * cout.amplitudes()[j as usize];
            }
        }
        closed_r += &CMatrix::projector(&v);
    }

    let mut filt = vec![ZERO; din * dout];
    for k in 0..din {
        filt[k * dout + k] = c((m as f64).powf((k as f64 - cutoff as f64) / 2.0));
    }
    let explicit = ChoiOperator::rank_one(&filt, din, dout)?;

    let build: PhaseBuild = Arc::new(move |phi| {
        let alpha = C64::from_polar(r, phi);
        let rho = CMatrix::projector(&coherent_state(alpha, cutoff).amplitudes);
        let out = coherent_state(alpha * gain, dout - 1).renormalized()?;
        Ok((Density::subnormalized(rho)?, out))
    });
    Ok(ScenarioBundle {
        name: ScenarioName::CoherentClone,
        label: format!("M={m} r={r} cutoff={cutoff}"),
        in_dim: din,
        out_dim: dout,
        family: InputFamily::Phase(build),
        quadrature: din + dout + 1,
        closed_a,
        closed_r,
        oracle_f: Some(coherent_filter_fidelity(m, r, cutoff)),
        oracle_f_is_optimum: false,
        oracle_p: Some(coherent_filter_probability(m, r, cutoff)),
        explicit_map: Some(explicit),
        alt_map: None,
        charges: Some(((0..din as i64).collect(), (0..dout as i64).collect())),
        baseline_f: None,
    })
}

/// `(3 + 4η + η²) / (2(3 + η²))`.
pub fn depol_parallel_fidelity(eta: f64) -> f64 {
    (3.0 + 4.0 * eta + eta * eta) / (2.0 * (3.0 + eta * eta))
}

/// `(3 + η²)/4`.
pub fn depol_parallel_probability(eta: f64) -> f64 {
    (3.0 + eta * eta) / 4.0
}

/// The basis `e₁, e₂` of the optimal subspace for parallel encoding, in
/// `in₁ ⊗ in₂ ⊗ out` order.
pub fn depol_parallel_basis() -> [Vec<C64>; 2] {
    let s = 1.0 / 6f64.sqrt();
    let mut e1 = vec![ZERO; 8];
    let mut e2 = vec![ZERO; 8];
    // |01⟩|0⟩ = 2, |10⟩|0⟩ = 4, |11⟩|1⟩ = 7
    e1[2] = c(s);
    e1[4] = c(s);
    e1[7] = c(2.0 * s);
    // |01⟩|1⟩ = 3, |10⟩|1⟩ = 5, |00⟩|0⟩ = 0
    e2[3] = c(s);
    e2[5] = c(s);
    e2[0] = c(2.0 * s);
    [e1, e2]
}

/// Purification of two depolarized qubits carrying `ψψ` or `ψψ⊥`.
pub fn depol_purify(eta: f64, encoding: Encoding) -> Result<ScenarioBundle> {
    check_eta(eta)?;
    let id8 = CMatrix::identity(8);
    let id4 = CMatrix::identity(4);
    let p12 = pair_sym_projector(2, 0, 1);
    let p123 = sym_projector(3, 2)?;
    let p23 = pair_sym_projector(3, 1, 2);
    let p13 = pair_sym_projector(3, 0, 2);
    let e2 = eta * eta;
    let (lam, r_t3) = match encoding {
        Encoding::Parallel => (
            &p12.scale(e2 / 3.0) + &id4.scale((1.0 - e2) / 4.0),
            &(&p123.scale(e2 / 4.0) + &id8.scale((1.0 - eta).powi(2) / 8.0))
                + &(&p23 + &p13).scale(eta * (1.0 - eta) / 6.0),
        ),
        Encoding::Perpendicular => (
            &id4.scale((1.0 + e2) / 4.0) - &p12.scale(e2 / 3.0),
            &(&(&p123.scale(-e2 / 4.0) + &id8.scale((1.0 - e2) / 8.0))
                + &p13.scale(eta * (1.0 + eta) / 6.0))
                - &p23.scale(eta * (1.0 - eta) / 6.0),
        ),
    };
    let closed_a = kron(&lam, &CMatrix::identity(2));
    let closed_r = partial_transpose(&r_t3, &[2, 2, 2], 2)?;

    let build: BlochBuild = Arc::new(move |t, p| {
        let psi = bloch_qubit(t, p);
        let second = match encoding {
            Encoding::Parallel => psi.clone(),
            Encoding::Perpendicular => bloch_qubit(std::f64::consts::PI - t, p + std::f64::consts::PI),
        };
        let rho = depolarizing(&psi.density(), eta)?.tensor(&depolarizing(&second.density(), eta)?);
        Ok((rho, psi))
    });

    let parallel = encoding == Encoding::Parallel;
    let explicit = if parallel {
        let [e1, e2v] = depol_parallel_basis();
        let m = (&CMatrix::projector(&e1) + &CMatrix::projector(&e2v)).scale(1.5);
        Some(ChoiOperator::new(m, 4, 2)?)
    } else {
        None
    };
    let popcount: Vec<i64> = (0..4).map(|x: u32| x.count_ones() as i64).collect();
    let (q, r) = match encoding {
        Encoding::Parallel => (popcount, vec![0, 1]),
        // ψ⊥ carries the opposite charge
        Encoding::Perpendicular => (vec![0, -1, 1, 0], vec![0, 1]),
    };
    Ok(ScenarioBundle {
        name: ScenarioName::DepolPurify,
        label: format!("eta={eta} encoding={encoding}"),
        in_dim: 4,
        out_dim: 2,
        family: InputFamily::Bloch(build),
        quadrature: 4,
        closed_a,
        closed_r,
        oracle_f: parallel.then(|| depol_parallel_fidelity(eta)),
        oracle_f_is_optimum: true,
        oracle_p: parallel.then(|| depol_parallel_probability(eta)),
        explicit_map: explicit,
        alt_map: None,
        charges: Some((q, r)),
        baseline_f: Some((1.0 + eta) / 2.0),
    })
}

/// `σ_{j,k} = ⟨N,j| ρ_AD(π/2, 0)^{⊗N} |N,k⟩` for `k = j` and `k = j + 1`,
/// from the finite series.
pub fn sigma(n: usize, k: usize, eta: f64) -> (f64, f64) {
    let s = 2.0 - eta * eta;
    let pre = 2f64.powi(-(n as i32));
    let diag = pre
        * eta.powi(2 * (n - k) as i32)
        * (0..=k)
            .map(|l| binom(k, l) * binom(n - k, k.wrapping_sub(l)) * s.powi(l as i32))
            .sum::<f64>();
    let off = if k < n {
        pre * eta.powi((2 * n - 2 * k - 1) as i32)
            * ((k + 1) as f64 / (n - k) as f64).sqrt()
            * (0..=k)
                .map(|l| binom(k, l) * binom(n - k, k + 1 - l) * s.powi(l as i32))
                .sum::<f64>()
    } else {
        0.0
    };
    (diag, off)
}

fn sigma_diag(n: usize, k: usize, eta: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    sigma(n, k, eta).0
}

/// `α_{N,k} = √(σ_{k,k}/σ_{k+1,k+1})`.
pub fn ad_alpha(n: usize, k: usize, eta: f64) -> f64 {
    (sigma_diag(n, k, eta) / sigma_diag(n, k + 1, eta)).sqrt()
}

/// `F_{N,k} = ½(1 + σ_{k,k+1}/√(σ_{k,k} σ_{k+1,k+1}))`.
pub fn ad_sector_fidelity(n: usize, k: usize, eta: f64) -> f64 {
    let (d0, off) = sigma(n, k, eta);
    let d1 = sigma_diag(n, k + 1, eta);
    0.5 * (1.0 + off / (d0 * d1).sqrt())
}

/// Every `k ∈ 0..N` maximizing `F_{N,k}`, ascending.
pub fn best_k(n: usize, eta: f64) -> Vec<usize> {
    let f: Vec<f64> = (0..n).map(|k| ad_sector_fidelity(n, k, eta)).collect();
    let best = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..n)
        .filter(|&k| f[k] >= best - BEST_K_TIE_TOL * best.abs())
        .collect()
}

pub fn ad_fidelity(n: usize, eta: f64) -> f64 {
    (0..n)
        .map(|k| ad_sector_fidelity(n, k, eta))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn ad_f1(eta: f64) -> f64 {
    0.5 * (1.0 + 1.0 / (2.0 - eta * eta).sqrt())
}

pub fn ad_f2(eta: f64) -> f64 {
    0.5 * (1.0 + (2.0 / (3.0 - eta * eta)).sqrt())
}

pub fn ad_f3(eta: f64) -> f64 {
    let e2 = eta * eta;
    0.5 * (1.0 + (5.0 - 2.0 * e2) / ((4.0 - e2) * (2.0 - e2).sqrt()))
}

pub fn ad_p1(eta: f64) -> f64 {
    eta * eta
}

pub fn ad_p2(eta: f64) -> f64 {
    0.5 * eta * eta * (3.0 - eta * eta)
}

pub fn ad_p3(eta: f64) -> f64 {
    eta.powi(4) - eta.powi(6) / 4.0
}

/// `η_th = √(7 − √17)/2`, where the two-copy linear program changes vertex.
pub fn ad_eta_threshold() -> f64 {
    (7.0 - 17f64.sqrt()).sqrt() / 2.0
}

/// Success probability of the rank-one sector map `|Ẽ_k⟩`:
/// `2σ_{k,k} / max(1, α²)`.
pub fn ad_sector_probability(n: usize, k: usize, eta: f64) -> f64 {
    let a2 = ad_alpha(n, k, eta).powi(2);
    2.0 * sigma_diag(n, k, eta) / a2.max(1.0)
}

/// `|Ẽ_k⟩ = |N,k⟩|0⟩ + α_{N,k}|N,k+1⟩|1⟩`, renormalized.
pub fn ad_sector_map(n: usize, k: usize, eta: f64) -> Result<ChoiOperator> {
    require(k < n, format!("sector k = {k} needs k < N = {n}"))?;
    let mut v = vec![ZERO; (n + 1) * 2];
    v[k * 2] = c(1.0);
    v[(k + 1) * 2 + 1] = c(ad_alpha(n, k, eta));
    ChoiOperator::rank_one(&v, n + 1, 2)
}

/// Purification of `N` amplitude-damped equatorial qubits, input in
/// symmetric coordinates.
pub fn ad_purify(n: usize, eta: f64) -> Result<ScenarioBundle> {
    require((1..=40).contains(&n), format!("N = {n} outside 1..=40"))?;
    require(eta > 0.0 && eta <= 1.0, format!("eta = {eta} outside (0, 1]"))?;
    let din = n + 1;
    let s = sym_tensor_power(amplitude_damping(std::f64::consts::FRAC_PI_2, 0.0, eta)?.matrix(), n)?;
    let lam: Vec<f64> = (0..=n).map(|k| s[(k, k)].re).collect();
    let closed_a = kron(&CMatrix::from_real_diag(&lam), &CMatrix::identity(2));
    // R[(j,b),(k,b')] = σ_{jk}/2 when b − j = b' − k
    let closed_r = CMatrix::from_fn(din * 2, din * 2, |i, l| {
        let (j, b) = ((i / 2) as i64, (i % 2) as i64);
        let (k, bp) = ((l / 2) as i64, (l % 2) as i64);
        if b - j == bp - k {
            s[(j as usize, k as usize)] * 0.5
        } else {
            ZERO
        }
    });

    let ks = best_k(n, eta);
    let explicit = ad_sector_map(n, ks[0], eta)?;
    let alt = if ks.len() > 1 {
        Some(ad_sector_map(n, ks[1], eta)?)
    } else {
        None
    };
    let oracle_p = match n {
        1 => Some(ad_p1(eta)),
        2 => Some(ad_p2(eta)),
        3 => Some(ad_p3(eta)),
        _ if ks.len() == 1 => Some(ad_sector_probability(n, ks[0], eta)),
        _ => None,
    };
    let oracle_f = match n {
        1 => ad_f1(eta),
        2 => ad_f2(eta),
        3 => ad_f3(eta),
        _ => ad_fidelity(n, eta),
    };

    let basis = SymmetricBasis::new(n, 2)?;
    let build: PhaseBuild = Arc::new(move |phi| {
        let rho = amplitude_damping(std::f64::consts::FRAC_PI_2, phi, eta)?;
        let m = sym_tensor_power(rho.matrix(), basis.copies())?;
        Ok((Density::subnormalized(m)?, equator_qubit(phi)))
    });
    Ok(ScenarioBundle {
        name: ScenarioName::AdPurify,
        label: format!("N={n} eta={eta}"),
        in_dim: din,
        out_dim: 2,
        family: InputFamily::Phase(build),
        quadrature: 2 * n + 5,
        closed_a,
        closed_r,
        oracle_f: Some(oracle_f),
        oracle_f_is_optimum: true,
        oracle_p,
        explicit_map: Some(explicit),
        alt_map: alt,
        charges: Some(((0..=n as i64).collect(), vec![0, 1])),
        baseline_f: Some((1.0 + eta) / 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densec::herm_eig;
    use crate::optimizer::{mean_fidelity, mean_success};

    fn agree(b: &ScenarioBundle) -> f64 {
        let (a, r) = b.quadrature_ops().unwrap().unwrap();
        (&a - &b.closed_a).max_abs().max((&r - &b.closed_r).max_abs())
    }

    #[test]
    fn names_round_trip() {
        for n in ScenarioName::ALL {
            assert_eq!(n.as_str().parse::<ScenarioName>().unwrap(), n);
        }
        assert!("cloning".parse::<ScenarioName>().is_err());
    }

    #[test]
    fn swap_and_pair_projectors() {
        let s = qubit_swap(3, 0, 2);
        // |100⟩ = 4 ↦ |001⟩ = 1
        assert_eq!(s[(1, 4)], c(1.0));
        assert_eq!(s[(2, 2)], c(1.0));
        let p = pair_sym_projector(3, 1, 2);
        assert!((p.trace().re - 6.0).abs() < 1e-15);
    }

    #[test]
    fn universal_closed_forms_match_quadrature() {
        for m in 1..=3 {
            assert!(agree(&universal_clone(m).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn transposition_closed_forms_match_quadrature() {
        for n in 1..=3 {
            assert!(agree(&transposition(n, 2).unwrap()) < 1e-12);
        }
        assert!(transposition(1, 3).unwrap().ensemble().unwrap().is_none());
    }

    #[test]
    fn phase_covariant_closed_forms_match_quadrature() {
        for (n, m) in [(1, 2), (2, 3), (2, 2), (1, 4)] {
            assert!(agree(&phase_covariant(n, m).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn phase_covariant_oracle_values() {
        assert!((phase_covariant_fidelity(1, 2) - 0.75).abs() < 1e-15);
        assert!((phase_covariant_fidelity(2, 3) - 0.875).abs() < 1e-15);
        for n in 1..=4 {
            assert!((phase_covariant_fidelity(n, n) - 1.0).abs() < 1e-15);
        }
        let b = phase_covariant(2, 2).unwrap();
        let e = b.explicit_map.unwrap();
        assert!((e.matrix() - ChoiOperator::identity(3).matrix()).max_abs() < 1e-15);
    }

    #[test]
    fn phase_covariant_maps_reach_optimum() {
        for (n, m) in [(1, 2), (2, 3), (2, 4), (1, 3)] {
            let b = phase_covariant(n, m).unwrap();
            let f = b.oracle_f.unwrap();
            for e in [b.explicit_map.as_ref(), b.alt_map.as_ref()].into_iter().flatten() {
                e.validate().unwrap();
                let got = mean_fidelity(e, &b.closed_a, &b.closed_r).unwrap();
                assert!((got - f).abs() < 1e-13, "({n},{m}): {got} vs {f}");
            }
            if let Some(p) = b.oracle_p {
                let e = b.explicit_map.as_ref().unwrap();
                assert!((mean_success(e, &b.closed_a).unwrap() - p).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn coherent_filter_series() {
        let f = coherent_filter_fidelity(2, 0.5f64.sqrt(), 3);
        let want = (-1.0f64).exp() * (1.0 + 1.0 + 0.5 + 1.0 / 6.0);
        assert!((f - want).abs() < 1e-15);
        assert!((f - 0.981012).abs() < 1e-6);
        assert_eq!(coherent_filter_fidelity(3, 0.0, 2), 1.0);
        let mut prev = 0.0;
        for n in 0..8 {
            let f = coherent_filter_fidelity(3, 1.0, n);
            assert!(f > prev);
            prev = f;
        }
    }

    #[test]
    fn coherent_closed_forms_match_quadrature() {
        let b = coherent_clone(2, 0.5, 2).unwrap();
        assert!(agree(&b) < 1e-14);
        let e = b.explicit_map.as_ref().unwrap();
        let f = mean_fidelity(e, &b.closed_a, &b.closed_r).unwrap();
        assert!((f - b.oracle_f.unwrap()).abs() < 1e-13);
        let p = mean_success(e, &b.closed_a).unwrap();
        assert!((p - b.oracle_p.unwrap()).abs() < 1e-13);
    }

    #[test]
    fn depolarizing_closed_forms_match_quadrature() {
        for eta in [0.2, 0.5, 0.9] {
            assert!(agree(&depol_purify(eta, Encoding::Parallel).unwrap()) < 1e-13);
            assert!(agree(&depol_purify(eta, Encoding::Perpendicular).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn depolarizing_map_is_symmetric_projection() {
        let b = depol_purify(0.6, Encoding::Parallel).unwrap();
        let e = b.explicit_map.as_ref().unwrap();
        let x = e.input_marginal();
        assert!((&x - &pair_sym_projector(2, 0, 1)).max_abs() < 1e-14);
        let f = mean_fidelity(e, &b.closed_a, &b.closed_r).unwrap();
        assert!((f - depol_parallel_fidelity(0.6)).abs() < 1e-14);
        let p = mean_success(e, &b.closed_a).unwrap();
        assert!((p - depol_parallel_probability(0.6)).abs() < 1e-14);
        assert!((depol_parallel_fidelity(0.5) - 21.0 / 26.0).abs() < 1e-15);
        assert_eq!(depol_parallel_fidelity(1.0), 1.0);
        assert_eq!(depol_parallel_fidelity(0.0), 0.5);
    }

    #[test]
    fn sigma_series_single_copy() {
        let eta = 0.7;
        let (d, o) = sigma(1, 0, eta);
        assert!((d - eta * eta / 2.0).abs() < 1e-15);
        assert!((o - eta / 2.0).abs() < 1e-15);
        assert!((ad_alpha(1, 0, eta) - eta / (2.0 - eta * eta).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn sigma_series_matches_tensor_power() {
        for n in 1..=6 {
            for &eta in &[0.3, 0.8] {
                let s = sym_tensor_power(
                    amplitude_damping(std::f64::consts::FRAC_PI_2, 0.0, eta).unwrap().matrix(),
                    n,
                )
                .unwrap();
                for k in 0..=n {
                    let (d, o) = sigma(n, k, eta);
                    assert!((s[(k, k)].re - d).abs() < 1e-14);
                    if k < n {
                        assert!((s[(k, k + 1)].re - o).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn ad_closed_forms_and_best_k() {
        for &eta in &[0.1, 0.45, 0.8, 0.95] {
            assert!((ad_fidelity(1, eta) - ad_f1(eta)).abs() < 1e-14);
            assert!((ad_fidelity(2, eta) - ad_f2(eta)).abs() < 1e-14);
            assert!((ad_fidelity(3, eta) - ad_f3(eta)).abs() < 1e-14);
            assert!((ad_sector_probability(1, 0, eta) - ad_p1(eta)).abs() < 1e-14);
            assert!((ad_sector_probability(3, 1, eta) - ad_p3(eta)).abs() < 1e-14);
        }
        assert_eq!(best_k(3, 0.6), vec![1]);
        assert_eq!(best_k(2, 0.6), vec![0, 1]);
        assert_eq!(best_k(5, 0.7), vec![2]);
        assert!((ad_eta_threshold() - 0.84807).abs() < 1e-5);
    }

    #[test]
    fn ad_closed_forms_match_quadrature() {
        for n in 1..=4 {
            assert!(agree(&ad_purify(n, 0.6).unwrap()) < 1e-14);
        }
        assert!(ad_purify(2, 0.0).is_err());
    }

    #[test]
    fn ad_sector_map_reaches_sector_fidelity() {
        let b = ad_purify(3, 0.7).unwrap();
        let e = b.explicit_map.as_ref().unwrap();
        let f = mean_fidelity(e, &b.closed_a, &b.closed_r).unwrap();
        assert!((f - ad_f3(0.7)).abs() < 1e-13);
        let p = mean_success(e, &b.closed_a).unwrap();
        assert!((p - ad_p3(0.7)).abs() < 1e-13);
    }

    #[test]
    fn closed_operators_are_psd() {
        let bundles = [
            universal_clone(2).unwrap(),
            transposition(2, 3).unwrap(),
            phase_covariant(2, 3).unwrap(),
            depol_purify(0.4, Encoding::Perpendicular).unwrap(),
            ad_purify(3, 0.4).unwrap(),
        ];
        for b in &bundles {
            assert!(herm_eig(&b.closed_a).unwrap().min() > -1e-14);
            assert!(herm_eig(&b.closed_r).unwrap().min() > -1e-14);
            assert!(herm_eig(&(&b.closed_a - &b.closed_r)).unwrap().min() > -1e-14);
        }
    }
}
