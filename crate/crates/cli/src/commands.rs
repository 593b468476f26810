use std::fs;
use std::io::Write;
use std::path::Path;

use probclone::optimizer::{mean_fidelity, mean_success, DEFAULT_CLUSTER_TOL};
use probclone::scenarios::{build, ScenarioBundle, ScenarioName, ScenarioParams};
use probclone::sdp::{PgOptions, SdpPath};
use probclone::verify::run_mc;
use rayon::prelude::*;
use serde_json::json;

use crate::format::{opt15, sig, sig15};
use crate::settings::Settings;
use crate::CliError;

pub const CSV_HEADER: &str = "param,f_max,f_oracle,p_bar,p_oracle,f_baseline";

pub fn scenario_name(s: &str) -> Result<ScenarioName, CliError> {
    s.parse().map_err(|_| CliError::UnknownScenario(s.to_string()))
}

pub fn params(s: &Settings) -> Result<ScenarioParams, CliError> {
    let d = ScenarioParams::default();
    let encoding = match s.get_str("encoding") {
        None => d.encoding,
        Some(e) => e.parse().map_err(|_| CliError::Invalid(format!("unknown encoding '{e}'")))?,
    };
    Ok(ScenarioParams {
        m: s.get("M", d.m)?,
        n: s.get("N", d.n)?,
        d: s.get("d", d.d)?,
        eta: s.get("eta", d.eta)?,
        r: s.get("r", d.r)?,
        cutoff: s.get("cutoff", d.cutoff)?,
        encoding,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub cluster: f64,
    pub fidelity: f64,
    pub probability: f64,
    pub pg: PgOptions,
}

impl Tolerances {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let pg = PgOptions::default();
        Ok(Tolerances {
            cluster: s.get("cluster_tol", DEFAULT_CLUSTER_TOL)?,
            fidelity: s.get("tol", 1e-9)?,
            probability: s.get("p_tol", 1e-6)?,
            pg: PgOptions {
                step: s.get("pg_step", pg.step)?,
                max_iter: s.get("pg_max_iter", pg.max_iter)?,
                tol: s.get("pg_tol", pg.tol)?,
            },
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub what: &'static str,
    pub deviation: f64,
    pub tol: f64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub label: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub f_max: f64,
    pub f_oracle: Option<f64>,
    pub oracle_is_optimum: bool,
    pub p_bar: f64,
    pub p_oracle: Option<f64>,
    pub f_baseline: Option<f64>,
    pub explicit_f: Option<f64>,
    pub explicit_p: Option<f64>,
    pub path: SdpPath,
    pub cluster_dim: usize,
    pub iterations: usize,
    pub duality_gap: f64,
    pub converged: bool,
    pub checks: Vec<Check>,
    pub bundle: ScenarioBundle,
    pub choi: probclone::optimizer::ChoiOperator,
}

impl Evaluation {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn csv_row(&self, param: f64) -> String {
        [
            sig15(param),
            sig15(self.f_max),
            opt15(self.f_oracle),
            sig15(self.p_bar),
            opt15(self.p_oracle),
            opt15(self.f_baseline),
        ]
        .join(",")
    }

    pub fn to_json(&self, name: ScenarioName) -> serde_json::Value {
        let checks: Vec<_> = self
            .checks
            .iter()
            .map(|c| json!({"check": c.what, "deviation": c.deviation, "tol": c.tol, "ok": c.ok}))
            .collect();
        json!({
            "scenario": name.as_str(),
            "parameters": self.label,
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "f_max": self.f_max,
            "f_oracle": self.f_oracle,
            "f_oracle_is_optimum": self.oracle_is_optimum,
            "p_bar": self.p_bar,
            "p_oracle": self.p_oracle,
            "f_baseline": self.f_baseline,
            "explicit_map_f": self.explicit_f,
            "explicit_map_p": self.explicit_p,
            "sdp_path": self.path,
            "cluster_dim": self.cluster_dim,
            "iterations": self.iterations,
            "duality_gap_estimate": self.duality_gap,
            "converged": self.converged,
            "checks": checks,
            "passed": self.passed(),
        })
    }

    pub fn to_text(&self, name: ScenarioName) -> String {
        let mut lines = vec![
            ("scenario", name.as_str().to_string()),
            ("parameters", self.label.clone()),
            ("dimensions", format!("{} -> {}", self.in_dim, self.out_dim)),
            ("f_max", sig15(self.f_max)),
            ("f_oracle", opt15(self.f_oracle)),
            ("p_bar", sig15(self.p_bar)),
            ("p_oracle", opt15(self.p_oracle)),
            ("f_baseline", opt15(self.f_baseline)),
        ];
        if let (Some(f), Some(p)) = (self.explicit_f, self.explicit_p) {
            lines.push(("explicit_map_f", sig15(f)));
            lines.push(("explicit_map_p", sig15(p)));
        }
        lines.extend([
            ("sdp_path", serde_json::to_value(self.path).unwrap().as_str().unwrap_or("").to_string()),
            ("cluster_dim", self.cluster_dim.to_string()),
            ("iterations", self.iterations.to_string()),
            ("duality_gap", sig(self.duality_gap, 3)),
        ]);
        for c in &self.checks {
            let verdict = if c.ok { "ok" } else { "FAIL" };
            lines.push((c.what, format!("{} (tol {}) {verdict}", sig(c.deviation, 3), sig15(c.tol))));
        }
        lines.push(("status", if self.passed() { "ok" } else { "FAILED" }.into()));
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&format!("{k:<20} {v}\n"));
        }
        out
    }
}

pub fn evaluate(name: ScenarioName, p: &ScenarioParams, tol: &Tolerances) -> Result<Evaluation, CliError> {
    let b = build(name, p)?;
    let s = b.solve_with(tol.cluster, tol.pg)?;
    let explicit = b
        .explicit_map
        .as_ref()
        .map(|e| -> Result<(f64, f64), CliError> {
            Ok((mean_fidelity(e, &b.closed_a, &b.closed_r)?, mean_success(e, &b.closed_a)?))
        })
        .transpose()?;
    let (f_max, p_bar) = (s.optimum.f_max, s.solution.p_bar);
    let mut checks = Vec::new();
    let mut check = |what, deviation: f64, tol: f64| checks.push(Check { what, deviation, tol, ok: deviation <= tol });
    if let Some(fo) = b.oracle_f {
        if b.oracle_f_is_optimum {
            check("f_deviation", (f_max - fo).abs(), tol.fidelity);
        } else {
            check("f_shortfall", (fo - f_max).max(0.0), tol.fidelity);
            if let Some((ef, _)) = explicit {
                check("explicit_f_deviation", (ef - fo).abs(), tol.fidelity);
            }
        }
    }
    if let Some(po) = b.oracle_p {
        if b.oracle_f_is_optimum {
            check("p_deviation", (p_bar - po).abs(), tol.probability);
        } else if let Some((_, ep)) = explicit {
            check("explicit_p_deviation", (ep - po).abs(), tol.probability);
        }
    }
    Ok(Evaluation {
        label: b.label.clone(),
        in_dim: b.in_dim,
        out_dim: b.out_dim,
        f_max,
        f_oracle: b.oracle_f,
        oracle_is_optimum: b.oracle_f_is_optimum,
        p_bar,
        p_oracle: b.oracle_p,
        f_baseline: b.baseline_f,
        explicit_f: explicit.map(|x| x.0),
        explicit_p: explicit.map(|x| x.1),
        path: s.solution.path,
        cluster_dim: s.optimum.cluster_dim(),
        iterations: s.solution.iterations,
        duality_gap: s.solution.duality_gap_estimate,
        converged: s.solution.converged,
        checks,
        bundle: b,
        choi: s.choi,
    })
}

/// Writes to standard output, treating a closed pipe as success.
pub fn emit(text: &str) -> Result<(), CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
        _ => Ok(()),
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn cmd_scenario(name: ScenarioName, s: &Settings, as_json: bool) -> Result<bool, CliError> {
    let tol = Tolerances::from_settings(s)?;
    let ev = evaluate(name, &params(s)?, &tol)?;
    if let Some(path) = s.get_str("emit_choi") {
        write_file(Path::new(path), &ev.choi.to_json()?)?;
    }
    if as_json {
        emit(&(serde_json::to_string_pretty(&ev.to_json(name)).expect("json") + "\n"))?;
    } else {
        emit(&ev.to_text(name))?;
    }
    Ok(ev.passed())
}

fn set_param(p: &mut ScenarioParams, param: &str, v: f64) -> Result<(), CliError> {
    let as_int = || {
        let r = v.round();
        if (v - r).abs() > 1e-9 || r < 0.0 {
            Err(CliError::Invalid(format!("{param} = {v} is not a non-negative integer")))
        } else {
            Ok(r as usize)
        }
    };
    match param {
        "eta" => p.eta = v,
        "r" => p.r = v,
        "M" => p.m = as_int()?,
        "N" => p.n = as_int()?,
        "d" => p.d = as_int()?,
        "cutoff" => p.cutoff = as_int()?,
        _ => return Err(CliError::Invalid(format!("cannot sweep '{param}'"))),
    }
    Ok(())
}

/// Parameter values `from + i·(to − from)/(steps − 1)`.
pub fn sweep_points(from: f64, to: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![from];
    }
    (0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect()
}

pub fn cmd_sweep(name: ScenarioName, s: &Settings) -> Result<bool, CliError> {
    let tol = Tolerances::from_settings(s)?;
    let base = params(s)?;
    let param = s.get_str("param").unwrap_or("eta").to_string();
    let from: f64 = s
        .get_opt("from")?
        .ok_or_else(|| CliError::Invalid("sweep needs --from".into()))?;
    let to: f64 = s.get("to", from)?;
    let steps: usize = s.get("steps", 11)?;
    if steps == 0 {
        return Err(CliError::Invalid("steps must be at least 1".into()));
    }
    let points = sweep_points(from, to, steps);
    let rows: Vec<Evaluation> = points
        .par_iter()
        .map(|&v| {
            let mut p = base.clone();
            set_param(&mut p, &param, v)?;
            evaluate(name, &p, &tol)
        })
        .collect::<Result<_, _>>()?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for (v, row) in points.iter().zip(&rows) {
        csv.push_str(&row.csv_row(*v));
        csv.push('\n');
    }
    match s.get_str("out") {
        Some(path) => write_file(Path::new(path), &csv)?,
        None => emit(&csv)?,
    }
    let failed: Vec<_> = points
        .iter()
        .zip(&rows)
        .filter(|(_, r)| !r.passed())
        .map(|(v, _)| sig15(*v))
        .collect();
    if !failed.is_empty() {
        eprintln!("oracle checks failed at {param} = {}", failed.join(", "));
    }
    Ok(failed.is_empty())
}

pub fn cmd_verify(name: ScenarioName, s: &Settings) -> Result<bool, CliError> {
    let tol = Tolerances::from_settings(s)?;
    let n: usize = s.get("samples", 100_000)?;
    let seed: u64 = s.get("seed", 0)?;
    let sigma: f64 = s.get("sigma", 4.0)?;
    let ev = evaluate(name, &params(s)?, &tol)?;
    let b = &ev.bundle;
    let (map, f_target, p_target) = match s.get_str("map").unwrap_or("optimal") {
        "optimal" => (ev.choi.clone(), ev.f_max, ev.p_bar),
        "explicit" => {
            let e = b
                .explicit_map
                .clone()
                .ok_or_else(|| CliError::Invalid(format!("{name} has no explicit map")))?;
            (e, ev.explicit_f.unwrap_or(f64::NAN), ev.explicit_p.unwrap_or(f64::NAN))
        }
        other => return Err(CliError::Invalid(format!("unknown map '{other}'"))),
    };
    let rep = run_mc(&map, b, n, seed)?;
    emit(&(rep.to_json()? + "\n"))?;
    let f_ok = rep.f_within(f_target, sigma);
    let p_ok = rep.p_within(p_target, sigma);
    eprintln!(
        "f_mean {} vs {} ({}), p_mean {} vs {} ({})",
        sig15(rep.f_mean),
        sig15(f_target),
        if f_ok { "ok" } else { "FAIL" },
        sig15(rep.p_mean),
        sig15(p_target),
        if p_ok { "ok" } else { "FAIL" }
    );
    Ok(f_ok && p_ok)
}

pub fn cmd_ensemble(name: ScenarioName, s: &Settings) -> Result<bool, CliError> {
    let b = build(name, &params(s)?)?;
    let ens = b
        .ensemble()?
        .ok_or_else(|| CliError::Invalid(format!("{name} with these parameters has no quadrature ensemble")))?;
    let text = ens.to_json()?;
    match s.get_str("out") {
        Some(path) => write_file(Path::new(path), &text)?,
        None => emit(&(text + "\n"))?,
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_grid() {
        assert_eq!(sweep_points(0.2, 0.9, 1), vec![0.2]);
        let p = sweep_points(0.0, 1.0, 5);
        assert_eq!(p, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn integer_parameters_are_checked() {
        let mut p = ScenarioParams::default();
        set_param(&mut p, "N", 3.0).unwrap();
        assert_eq!(p.n, 3);
        assert!(set_param(&mut p, "N", 2.5).is_err());
        assert!(set_param(&mut p, "encoding", 1.0).is_err());
    }
}
