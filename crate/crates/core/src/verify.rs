//! Monte Carlo check of a map against a scenario's input distribution.
//!
//! Sample `i` draws from a ChaCha8 generator seeded with `seed` on stream `i`,
//! so reports do not depend on the number of threads. The mean fidelity is
//! the ratio estimator `Σ P_i F_i / Σ P_i`, which weights each input by its
//! success probability.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::densec::{herm_eig, CMatrix, ZERO};
use crate::error::{Error, Result};
use crate::optimizer::ChoiOperator;
use crate::qstate::{Density, PureState};
use crate::scenarios::{InputFamily, ScenarioBundle};

pub const MIN_SAMPLES: usize = 100;
/// Orbit points used for the universality spread.
pub const ORBIT_POINTS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub n_samples: usize,
    pub f_mean: f64,
    pub f_stderr: f64,
    pub p_mean: f64,
    pub p_stderr: f64,
    /// Max − min of the per-input fidelity over a fixed set of orbit points.
    pub universality_spread: f64,
    /// Max − min of the per-input success probability over the same points.
    pub p_spread: f64,
    pub seed: u64,
}

impl McReport {
    /// `|f_mean − f| ≤ k·f_stderr`, with an absolute floor for exact maps.
    pub fn f_within(&self, f: f64, k: f64) -> bool {
        (self.f_mean - f).abs() <= k * self.f_stderr + 1e-10
    }

    pub fn p_within(&self, p: f64, k: f64) -> bool {
        (self.p_mean - p).abs() <= k * self.p_stderr + 1e-10
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Spectral factors of a Choi operator for cheap per-input evaluation.
struct Evaluator {
    out_dim: usize,
    marginal: CMatrix,
    factors: Vec<(f64, Vec<C64>)>,
}

impl Evaluator {
    fn new(e: &ChoiOperator) -> Result<Self> {
        let eig = herm_eig(e.matrix())?;
        let top = eig.values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let factors = (0..eig.dim())
            .filter(|&i| eig.values[i] > 1e-14 * top)
            .map(|i| (eig.values[i], eig.vector(i)))
            .collect();
        Ok(Evaluator {
            out_dim: e.out_dim(),
            marginal: e.input_marginal(),
            factors,
        })
    }

    /// `(P, P·F)` for one input.
    fn eval(&self, rho: &Density, psi: &PureState) -> (f64, f64) {
        let r = rho.matrix();
        let x = &self.marginal;
        let din = x.rows();
        let mut p = 0.0;
        for a in 0..din {
            for ap in 0..din {
                p += (x[(a, ap)] * r[(a, ap)]).re;
            }
        }
        // ⟨e|ρᵀ⊗ψ|e⟩ = uᵀ ρ ū with u_a = Σ_b e[a,b] ψ̄_b
        let psi = psi.amplitudes();
        let mut q = 0.0;
        for (lam, e) in &self.factors {
            let u: Vec<C64> = (0..din)
                .map(|a| {
                    e[a * self.out_dim..(a + 1) * self.out_dim]
                        .iter()
                        .zip(psi)
                        .map(|(x, y)| x * y.conj())
                        .sum()
                })
                .collect();
            let mut s = ZERO;
            for a in 0..din {
                let mut row = ZERO;
                for ap in 0..din {
                    row += r[(a, ap)] * u[ap].conj();
                }
                s += u[a] * row;
            }
            q += lam * s.re;
        }
        (p, q)
    }
}

fn haar_state(rng: &mut impl Rng, dim: usize) -> Result<PureState> {
    let amps: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    PureState::normalized(amps)
}

/// Draws one input/target pair from the family's distribution.
pub fn sample_input(family: &InputFamily, rng: &mut impl Rng) -> Result<(Density, PureState)> {
    match family {
        InputFamily::Phase(b) => b(2.0 * PI * rng.random::<f64>()),
        InputFamily::Bloch(b) => {
            let cos_t: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let phi = 2.0 * PI * rng.random::<f64>();
            b(cos_t.clamp(-1.0, 1.0).acos(), phi)
        }
        InputFamily::HaarQudit { dim, build } => build(&haar_state(rng, *dim)?),
    }
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if v.is_empty() { 0.0 } else { hi - lo }
}

/// Estimates mean fidelity and success probability of `e` on `n` inputs
/// drawn from the scenario's distribution.
pub fn run_mc(e: &ChoiOperator, scenario: &ScenarioBundle, n: usize, seed: u64) -> Result<McReport> {
    if n < MIN_SAMPLES {
        return Err(Error::OutOfRange(format!("{n} samples; at least {MIN_SAMPLES} required")));
    }
    if e.in_dim() != scenario.in_dim || e.out_dim() != scenario.out_dim {
        return Err(Error::DimensionMismatch(format!(
            "map {} -> {} for a scenario {} -> {}",
            e.in_dim(),
            e.out_dim(),
            scenario.in_dim,
            scenario.out_dim
        )));
    }
    let ev = Evaluator::new(e)?;
    let samples: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (rho, psi) = sample_input(&scenario.family, &mut rng)?;
            Ok(ev.eval(&rho, &psi))
        })
        .collect::<Result<_>>()?;

    let nf = n as f64;
    let (sp, sq) = samples.iter().fold((0.0, 0.0), |(a, b), (p, q)| (a + p, b + q));
    let p_mean = sp / nf;
    let p_var = samples.iter().map(|(p, _)| (p - p_mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if !(sp > 0.0) {
        return Err(Error::ZeroSuccess);
    }
    let f_mean = sq / sp;
    // delta method for the ratio Σq/Σp
    let r_var = samples
        .iter()
        .map(|(p, q)| (q - f_mean * p).powi(2))
        .sum::<f64>()
        / (nf - 1.0);

    let orbit: Vec<(f64, f64)> = (0..ORBIT_POINTS)
        .map(|j| {
            let (rho, psi) = scenario.orbit_point(j as f64 / ORBIT_POINTS as f64)?;
            Ok(ev.eval(&rho, &psi))
        })
        .collect::<Result<_>>()?;
    let ps: Vec<f64> = orbit.iter().map(|(p, _)| *p).collect();
    let fs: Vec<f64> = orbit
        .iter()
        .filter(|(p, _)| *p > 1e-300)
        .map(|(p, q)| q / p)
        .collect();

    Ok(McReport {
        n_samples: n,
        f_mean,
        f_stderr: (r_var / nf).sqrt() / p_mean,
        p_mean,
        p_stderr: (p_var / nf).sqrt(),
        universality_spread: spread(&fs),
        p_spread: spread(&ps),
        seed,
    })
}
