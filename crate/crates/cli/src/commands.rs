use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};
use spheremin_core::diffop::dk_sign_scan;
use spheremin_core::measures::{load_config, spectral_energy};
use spheremin_core::optimizer::{atom_potentials, minimize_energy, OptimizerParams};
use spheremin_core::spectral::{default_m_quad, expand_kernel};
use spheremin_core::witness::{hadamard_power_bound, non_pd_witness, witness_scan};
use spheremin_core::{
    classify_pd, design_report, discrete_energy, discrete_minimizer_reduce, potential_report, sigma_energy, Kernel,
};

use crate::{
    ClassifyArgs, CliError, CliResult, ConfigKernelArgs, DesignsArgs, DiffopArgs, ExpandArgs, MinimizeArgs,
    PotentialArgs, ReduceArgs, WitnessArgs,
};

/// A report plus an optional failure raised after the report was written.
pub struct Outcome {
    pub report: Value,
    pub failure: Option<String>,
}

impl From<Value> for Outcome {
    fn from(report: Value) -> Self {
        Outcome { report, failure: None }
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn kernel(literal: &str) -> CliResult<Kernel> {
    Ok(literal.parse::<Kernel>()?)
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> CliResult<()> {
    let mut f = File::create(path)?;
    writeln!(f, "{header}")?;
    for row in rows {
        writeln!(f, "{row}")?;
    }
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn expand(a: &ExpandArgs) -> CliResult<Outcome> {
    let k = kernel(&a.kernel)?;
    let exp = expand_kernel(&k, a.d, a.nmax, a.mquad.unwrap_or_else(|| default_m_quad(a.nmax)))?;
    Ok(json!({"kernel": k.to_string(), "expansion": to_value(&exp)}).into())
}

pub fn classify(a: &ClassifyArgs) -> CliResult<Outcome> {
    let e = &a.expand;
    let k = kernel(&e.kernel)?;
    let exp = expand_kernel(&k, e.d, e.nmax, e.mquad.unwrap_or_else(|| default_m_quad(e.nmax)))?;
    let class = classify_pd(&exp, a.tol);
    let most_negative = class
        .most_negative(&exp)
        .map(|(n, c)| json!({"degree": n, "coefficient": c}))
        .unwrap_or(Value::Null);
    Ok(json!({
        "kernel": k.to_string(),
        "d": e.d,
        "n_max": e.nmax,
        "coeffs": exp.coeffs,
        "n_plus": class.n_plus,
        "n_minus": class.n_minus,
        "pd_up_to_constant": class.pd_up_to_constant,
        "tol": class.tol,
        "most_negative": most_negative,
    })
    .into())
}

pub fn energy(a: &ConfigKernelArgs) -> CliResult<Outcome> {
    let k = kernel(&a.kernel)?;
    let config = load_config(&a.config, a.d)?;
    let e = discrete_energy(&config, &k);
    let uniform = sigma_energy(&k, config.d(), default_m_quad(16))?;
    Ok(json!({
        "config": a.config,
        "kernel": k.to_string(),
        "d": config.d(),
        "atoms": config.len(),
        "energy": e,
        "sigma_energy": uniform,
    })
    .into())
}

pub fn potential(a: &PotentialArgs) -> CliResult<Outcome> {
    let k = kernel(&a.base.kernel)?;
    let config = load_config(&a.base.config, a.base.d)?;
    let report = potential_report(&config, &k, a.grid, a.seed)?;
    Ok(json!({
        "config": a.base.config,
        "kernel": k.to_string(),
        "d": config.d(),
        "energy": discrete_energy(&config, &k),
        "atom_potentials": atom_potentials(&config, &k),
        "report": to_value(&report),
    })
    .into())
}

pub fn minimize(a: &MinimizeArgs) -> CliResult<Outcome> {
    let k = kernel(&a.kernel)?;
    let params = OptimizerParams {
        n_atoms: a.atoms,
        n_starts: a.starts,
        max_iters: a.max_iters,
        grad_tol: a.tol,
        optimize_weights: !a.fixed_weights,
        symmetrize_even: !a.no_symmetrize,
        seed: a.seed,
        record_trace: a.trace.is_some(),
        ..OptimizerParams::default()
    };
    let report = minimize_energy(&k, a.d, &params)?;
    if let Some(path) = &a.trace {
        let rows = report.starts.iter().flat_map(|s| {
            s.trace
                .iter()
                .map(move |r| format!("{},{},{},{},{}", s.start, r.iter, num(r.energy), num(r.grad_norm), num(r.step)))
        });
        write_csv(path, "start,iter,energy,grad_norm,step", rows)?;
    }
    Ok(json!({
        "kernel": k.to_string(),
        "d": a.d,
        "params": to_value(&params),
        "result": to_value(&report),
    })
    .into())
}

pub fn reduce(a: &ReduceArgs) -> CliResult<Outcome> {
    let k = kernel(&a.kernel)?;
    let exp = expand_kernel(&k, a.d, a.nmax, default_m_quad(a.nmax))?;
    let (input, minimize) = match &a.config {
        Some(source) => (load_config(source, Some(a.d))?, Value::Null),
        None => {
            let params = OptimizerParams {
                n_atoms: a.atoms,
                n_starts: a.starts,
                seed: a.seed,
                symmetrize_even: false,
                ..OptimizerParams::default()
            };
            let report = minimize_energy(&k, a.d, &params)?;
            let summary = json!({
                "best_energy": report.best_energy,
                "best_start": report.best_start,
                "per_start_energies": report.per_start_energies(),
                "params": to_value(&params),
            });
            (report.best_config, summary)
        }
    };
    let reduction = discrete_minimizer_reduce(&input, &exp, a.tol, a.seed)?;
    let out = &reduction.config;
    let pot = potential_report(out, &k, 2000, a.seed)?;
    if let Some(path) = &a.trace {
        let rows = reduction.report.g_trace.iter().enumerate().map(|(i, g)| format!("{i},{}", num(*g)));
        write_csv(path, "step,g", rows)?;
    }
    let bound = reduction.report.support_bound.unwrap_or(usize::MAX);
    let failure = (out.len() > bound)
        .then(|| format!("final support {} exceeds the bound {bound}", out.len()));
    let report = json!({
        "kernel": k.to_string(),
        "d": a.d,
        "n_max": a.nmax,
        "support_bound": bound,
        "input_atoms": input.len(),
        "input_energy": discrete_energy(&input, &k),
        "input_truncated_energy": spectral_energy(&input, &exp)?,
        "minimize": minimize,
        "reduction": to_value(&reduction.report),
        "final_config": to_value(out),
        "final_energy": discrete_energy(out, &k),
        "final_truncated_energy": spectral_energy(out, &exp)?,
        "potential": to_value(&pot),
    });
    Ok(Outcome { report, failure })
}

fn parse_scan(spec: &str) -> CliResult<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::Usage(format!("--scan expects PMIN:PMAX:STEP, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|s| s.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    Ok((v[0], v[1], v[2]))
}

pub fn witness(a: &WitnessArgs) -> CliResult<Outcome> {
    match (&a.scan, a.p) {
        (Some(spec), None) => {
            let (lo, hi, step) = parse_scan(spec)?;
            let rows = witness_scan(lo, hi, step, a.d)?;
            if let Some(path) = &a.trace {
                let csv = rows.iter().map(|r| {
                    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
                    format!("{},{},{},{},{}", num(r.p), r.k, opt(r.eps_final), opt(r.form_value), r.status)
                });
                write_csv(path, "p,k,eps_final,form_value,status", csv)?;
            }
            Ok(json!({"d": a.d, "p_min": lo, "p_max": hi, "step": step, "rows": to_value(&rows)}).into())
        }
        (None, Some(p)) => {
            let report = non_pd_witness(p, a.d, a.eps, None, None)?;
            if let Some(path) = &a.trace {
                let rows = report.eps_trace.iter().map(|s| format!("{},{}", num(s.eps), num(s.form_value)));
                write_csv(path, "eps,form_value", rows)?;
            }
            Ok(json!({
                "p": p,
                "d": a.d,
                "witness": to_value(&report),
                "hadamard": to_value(&hadamard_power_bound(p)?),
            })
            .into())
        }
        _ => Err(CliError::Usage("witness needs exactly one of --p and --scan".into())),
    }
}

/// Points of `(2k-1, 2k)` and `(2k, 2k+1]`, where the sign is claimed.
fn default_p_grid(k: usize) -> Vec<f64> {
    let two_k = 2.0 * k as f64;
    let mut ps = Vec::new();
    if k > 0 {
        ps.extend([0.25, 0.5, 0.75].iter().map(|s| two_k - 1.0 + s));
    }
    ps.extend([0.25, 0.5, 0.75, 1.0].iter().map(|s| two_k + s));
    ps
}

pub fn verify_diffop(a: &DiffopArgs) -> CliResult<Outcome> {
    let ps = a.p_grid.clone().unwrap_or_else(|| default_p_grid(a.k));
    let ts = a.t_grid.clone().unwrap_or_else(|| (1..=10).map(|i| i as f64 / 10.0).collect());
    let scan = dk_sign_scan(a.k, a.d, &ps, &ts, a.tol, a.h)?;
    if let Some(path) = &a.trace {
        std::fs::write(path, scan.verdict_csv())?;
    }
    let failure = (scan.violations > 0).then(|| format!("{} cells contradict the claimed sign", scan.violations));
    Ok(Outcome { report: json!({"scan": to_value(&scan)}), failure })
}

pub fn designs(a: &DesignsArgs) -> CliResult<Outcome> {
    let config = load_config(&a.config, a.d)?;
    let report = design_report(&config, a.nmax, a.tol)?;
    Ok(json!({"config": a.config, "design": to_value(&report)}).into())
}
