//! Run manifest: config echo, resolved model, derived parameters, validity.

use jjtls::effective::{badcavity_params, dispersive_params, validity_report, Regime, ValidityReport};
use jjtls::model::{validate_truncation, SystemModel};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Resolved;

#[derive(Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Raw configuration text, byte for byte.
    pub config: String,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub units: &'static str,
    pub model: Value,
    pub derived: Value,
    pub validity: Value,
    pub truncation: Value,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
}

fn complex(z: num_complex::Complex<f64>) -> Value {
    json!([z.re, z.im])
}

fn model_json(m: &SystemModel<f64>) -> Value {
    json!({
        "delta_c": m.resonator.delta_c,
        "kappa": m.resonator.kappa,
        "fock_dim": m.resonator.fock_dim,
        "epsilon0": m.drive.epsilon0,
        "tls": m.tls.iter().map(|t| json!({"label": t.label, "delta": t.delta, "g": t.g})).collect::<Vec<_>>(),
    })
}

/// Both effective parameter bundles, or the reason each is unavailable.
pub fn derived_json(m: &SystemModel<f64>) -> Value {
    let dispersive = match dispersive_params(m) {
        Ok(p) => json!({
            "delta_bar": p.delta_bar,
            "omega_nx": p.omega_nx,
            "induced_decay": p.induced_decay,
            "delta_nc": p.delta_nc,
            "lambda": (0..p.lambda.nrows())
                .map(|i| (0..p.lambda.ncols()).map(|j| p.lambda[(i, j)]).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let bad_cavity = match badcavity_params(m) {
        Ok(p) => json!({
            "delta_bar": p.delta_bar,
            "omega": p.omega.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
            "gamma1": p.gamma1,
            "gamma2": p.gamma2,
            "lambda": (0..p.lambda.nrows())
                .map(|i| (0..p.lambda.ncols()).map(|j| complex(p.lambda[(i, j)])).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    json!({ "dispersive": dispersive, "bad_cavity": bad_cavity })
}

fn finite_or_label(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format!("{x}"))
    }
}

fn validity_json(rep: &ValidityReport) -> Value {
    json!({
        "passed": rep.passed(),
        "ratios": rep.ratios.iter().map(|r| json!({
            "name": r.name, "value": finite_or_label(r.value), "threshold": r.threshold, "ok": r.ok,
        })).collect::<Vec<_>>(),
    })
}

#[allow(clippy::too_many_arguments)]
pub fn build(
    command: &str,
    raw_config: &str,
    resolved: &Resolved,
    outputs: Vec<String>,
    warnings: Vec<String>,
    seed: Option<u64>,
    threads: Option<usize>,
    wall_time_s: f64,
) -> RunManifest {
    let m = &resolved.model;
    let trunc = validate_truncation(m);
    RunManifest {
        artifact: "jjtls",
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        config: raw_config.to_string(),
        seed,
        threads,
        units: "angular frequencies in rad/us, times in us",
        model: model_json(m),
        derived: derived_json(m),
        validity: json!({
            "dispersive": validity_json(&validity_report(m, Regime::Dispersive, &resolved.thresholds)),
            "bad_cavity": validity_json(&validity_report(m, Regime::BadCavity, &resolved.thresholds)),
        }),
        truncation: json!({
            "mean_photons": trunc.mean_photons,
            "required_fock_dim": trunc.required_fock_dim,
            "fock_dim": trunc.fock_dim,
            "passed": trunc.passed,
            "warnings": trunc.warnings,
        }),
        outputs,
        warnings,
        wall_time_s,
    }
}
