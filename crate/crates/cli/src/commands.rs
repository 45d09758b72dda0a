//! The five analysis workflows. Each returns tables; writing files and the
//! manifest happens in [`crate::run`].

use std::f64::consts::TAU;

use jjtls::algebra::{embed, expectation, partial_trace, pauli, trace_distance, Density, Operator, Pauli, PureState};
use jjtls::effective::{
    adiabatic_cavity_amplitude, badcavity_params, build_effective_hamiltonian, build_effective_lindblad,
    dispersive_params, validity_report, EffectiveModel, Regime,
};
use jjtls::gates::{decoherence_budget, effective_generators, full_model_iswap_fidelity, iswap_report, universality_closure};
use jjtls::model::{validate_truncation, SystemModel};
use jjtls::readout::{dispersive_readout_shift, measurement_phase, photon_correlation_check, QuadratureSignal};
use jjtls::scalar::{mhz, C};
use jjtls::solver::{evolve_segments, model_liouvillian, Liouvillian, Method, Segment, StepOptions, Trajectory};
use rayon::prelude::*;

use crate::config::{InitialState, Resolved};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

/// Tables produced by a command, keyed by file stem, plus run warnings.
#[derive(Clone, Debug, Default)]
pub struct CommandOutput {
    pub tables: Vec<(String, Table)>,
    pub warnings: Vec<String>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn over_2pi(x: f64) -> f64 {
    x / TAU
}

// ---------------------------------------------------------------- sweep

/// Minimum `|Delta_nc| / g` for a dispersive entry to be reported.
pub const DISPERSIVE_BLANK_RATIO: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub delta_c_over_2pi_mhz: f64,
    /// `|lambda|/2pi` from the dispersive formula; infinite on an exact pole,
    /// NaN when the formula is undefined for another reason.
    pub raw_dispersive: f64,
    pub dispersive_valid: bool,
    pub abs_badcavity: Option<f64>,
    pub arg_badcavity: Option<f64>,
    pub note: Option<String>,
}

impl SweepRow {
    /// Dispersive entry as reported: blank outside validity.
    pub fn dispersive(&self) -> Option<f64> {
        self.dispersive_valid.then_some(self.raw_dispersive)
    }
}

pub fn sweep_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let span = stop - start;
    let last = (points - 1) as f64;
    (0..points).map(|k| start + span * k as f64 / last).collect()
}

pub fn sweep_coupling_rows(r: &Resolved) -> CliResult<Vec<SweepRow>> {
    if r.model.n_tls() != 2 {
        return Err(config_err(format!("sweep-coupling needs exactly two TLS's, got {}", r.model.n_tls())));
    }
    let sweep = r.sweep.as_ref().ok_or_else(|| config_err("sweep-coupling needs a sweep section"))?;
    if sweep.parameter != "delta_c" {
        return Err(config_err(format!("sweep parameter '{}' is not supported; use delta_c", sweep.parameter)));
    }
    let grid = sweep_grid(sweep.start, sweep.stop, sweep.points);
    Ok(grid.par_iter().map(|&x| sweep_row(&r.model, x)).collect())
}

fn sweep_row(base: &SystemModel<f64>, x: f64) -> SweepRow {
    let m = base.with_delta_c(mhz(x));
    let mut note = None;
    let (raw_dispersive, dispersive_valid) = match dispersive_params(&m) {
        Ok(p) => {
            let valid = m
                .tls
                .iter()
                .zip(&p.delta_nc)
                .all(|(t, d)| d.abs() >= DISPERSIVE_BLANK_RATIO * t.g.abs());
            if !valid {
                note = Some("near_resonance".to_string());
            }
            (over_2pi(p.lambda[(0, 1)].abs()), valid)
        }
        Err(jjtls::Error::Resonant { .. }) => {
            note = Some("resonant".to_string());
            (f64::INFINITY, false)
        }
        Err(_) => {
            note = Some("dispersive_undefined".to_string());
            (f64::NAN, false)
        }
    };
    let (abs_badcavity, arg_badcavity) = match badcavity_params(&m) {
        Ok(p) => {
            let l = p.lambda[(0, 1)];
            (Some(over_2pi(l.norm())), Some(l.arg()))
        }
        Err(_) => (None, None),
    };
    SweepRow { delta_c_over_2pi_mhz: x, raw_dispersive, dispersive_valid, abs_badcavity, arg_badcavity, note }
}

pub fn sweep_coupling(r: &Resolved) -> CliResult<CommandOutput> {
    let rows = sweep_coupling_rows(r)?;
    let mut t = Table::new(&[
        "delta_c_over_2pi_mhz",
        "abs_lambda_dispersive_over_2pi_mhz",
        "abs_lambda_badcavity_over_2pi_mhz",
        "arg_lambda_badcavity_rad",
        "dispersive_valid",
        "note",
    ]);
    let mut flagged = 0;
    for row in &rows {
        flagged += usize::from(!row.dispersive_valid);
        t.push(vec![
            row.delta_c_over_2pi_mhz.into(),
            Cell::opt(row.dispersive()),
            Cell::opt(row.abs_badcavity),
            Cell::opt(row.arg_badcavity),
            Cell::flag(row.dispersive_valid),
            row.note.clone().map(Cell::Text).unwrap_or(Cell::Blank),
        ]);
    }
    let mut warnings = Vec::new();
    if flagged > 0 {
        warnings.push(format!("{flagged} rows have blank dispersive entries (|delta_nc| < {DISPERSIVE_BLANK_RATIO} g)"));
    }
    if r.model.resonator.kappa == 0.0 {
        warnings.push("kappa = 0: bad-cavity columns are blank".into());
    }
    Ok(CommandOutput { tables: vec![("sweep-coupling".into(), t)], warnings })
}

// ---------------------------------------------------------------- compare

/// Largest TLS count the full-model comparison accepts.
pub const COMPARE_MAX_TLS: usize = 3;

/// Full-model and effective trajectories sampled on one grid.
#[derive(Clone, Debug)]
pub struct CompareRun {
    pub regime: Regime,
    pub times: Vec<f64>,
    /// `[<sigma_x>, <sigma_y>, <sigma_z>]` per sample, per TLS.
    pub full_spins: Vec<Vec<[f64; 3]>>,
    pub effective_spins: Vec<Vec<[f64; 3]>>,
    pub trace_distance: Vec<f64>,
    pub field_full: Vec<C<f64>>,
    /// Adiabatic field from the full-model coherences; absent without damping.
    pub field_adiabatic: Vec<Option<C<f64>>>,
    pub full: Trajectory<f64>,
    pub effective: Trajectory<f64>,
}

impl CompareRun {
    pub fn max_trace_distance(&self) -> f64 {
        self.trace_distance.iter().copied().fold(0.0, f64::max)
    }
}

pub fn initial_states(model: &SystemModel<f64>, init: &InitialState) -> jjtls::Result<(Density<f64>, Density<f64>)> {
    let fock = PureState::basis(&[model.resonator.fock_dim], init.photons)?;
    let tls: Vec<PureState<f64>> = init
        .excited
        .iter()
        .map(|&e| PureState::basis(&[2], if e { 0 } else { 1 }))
        .collect::<jjtls::Result<_>>()?;
    let mut parts = vec![fock];
    parts.extend(tls.iter().cloned());
    let full = PureState::product(&parts)?.to_density();
    let eff = PureState::product(&tls)?.to_density();
    Ok((full, eff))
}

pub fn effective_params(model: &SystemModel<f64>, regime: Regime) -> jjtls::Result<Box<dyn EffectiveModel<f64> + Send + Sync>> {
    Ok(match regime {
        Regime::Dispersive => Box::new(dispersive_params(model)?),
        Regime::BadCavity => Box::new(badcavity_params(model)?),
    })
}

pub fn effective_liouvillian(params: &dyn EffectiveModel<f64>) -> jjtls::Result<Liouvillian<f64>> {
    Liouvillian::new(build_effective_hamiltonian(params)?, build_effective_lindblad(params)?)
}

fn spins(state: &Density<f64>, ops: &[[Operator<f64>; 3]]) -> jjtls::Result<Vec<[f64; 3]>> {
    ops.iter()
        .map(|o| {
            Ok([
                expectation(state, &o[0])?.re,
                expectation(state, &o[1])?.re,
                expectation(state, &o[2])?.re,
            ])
        })
        .collect()
}

pub fn compare_run(
    model: &SystemModel<f64>,
    regime: Regime,
    init: &InitialState,
    grid: &[f64],
    method: Method,
    opts: &StepOptions,
) -> jjtls::Result<CompareRun> {
    let n = model.n_tls();
    let params = effective_params(model, regime)?;
    let (rho_full, rho_eff) = initial_states(model, init)?;
    let total = grid.last().copied().unwrap_or(0.0);
    let full_seg = Segment { generator: model_liouvillian(model)?, duration: total };
    let eff_seg = Segment { generator: effective_liouvillian(params.as_ref())?, duration: total };
    let (full, effective) = rayon::join(
        || evolve_segments(&rho_full, std::slice::from_ref(&full_seg), grid, method, opts),
        || evolve_segments(&rho_eff, std::slice::from_ref(&eff_seg), grid, method, opts),
    );
    let (full, effective) = (full?, effective?);

    let tls_space = vec![2; n];
    let tls_ops: Vec<[Operator<f64>; 3]> = (0..n)
        .map(|k| {
            Ok([
                embed(&pauli(Pauli::X), k, &tls_space)?,
                embed(&pauli(Pauli::Y), k, &tls_space)?,
                embed(&pauli(Pauli::Z), k, &tls_space)?,
            ])
        })
        .collect::<jjtls::Result<_>>()?;
    let sigma_minus: Vec<Operator<f64>> = (0..n)
        .map(|k| embed(&pauli(Pauli::Minus), k, &tls_space))
        .collect::<jjtls::Result<_>>()?;
    let keep: Vec<usize> = (1..=n).collect();
    let a = model.operators()?.a;
    let bad_cavity = badcavity_params(model).ok();

    let mut out = CompareRun {
        regime,
        times: grid.to_vec(),
        full_spins: Vec::with_capacity(grid.len()),
        effective_spins: Vec::with_capacity(grid.len()),
        trace_distance: Vec::with_capacity(grid.len()),
        field_full: Vec::with_capacity(grid.len()),
        field_adiabatic: Vec::with_capacity(grid.len()),
        full: Trajectory { times: Vec::new(), states: Vec::new() },
        effective: Trajectory { times: Vec::new(), states: Vec::new() },
    };
    for (rf, re) in full.states.iter().zip(&effective.states) {
        let reduced = partial_trace(rf, &keep)?;
        out.full_spins.push(spins(&reduced, &tls_ops)?);
        out.effective_spins.push(spins(re, &tls_ops)?);
        out.trace_distance.push(trace_distance(&reduced, re)?);
        out.field_full.push(expectation(rf, &a)?);
        let adiabatic = match &bad_cavity {
            Some(p) => {
                let sm: Vec<C<f64>> = sigma_minus.iter().map(|s| expectation(&reduced, s)).collect::<jjtls::Result<_>>()?;
                Some(adiabatic_cavity_amplitude(p, &sm, model.drive.epsilon0)?)
            }
            None => None,
        };
        out.field_adiabatic.push(adiabatic);
    }
    out.full = full;
    out.effective = effective;
    Ok(out)
}

/// Regime used when the configuration says `auto`.
pub fn auto_regime(r: &Resolved) -> Regime {
    if r.model.resonator.kappa > 0.0 && validity_report(&r.model, Regime::BadCavity, &r.thresholds).passed() {
        Regime::BadCavity
    } else {
        Regime::Dispersive
    }
}

pub fn compare(r: &Resolved) -> CliResult<CommandOutput> {
    let model = &r.model;
    if model.n_tls() > COMPARE_MAX_TLS {
        return Err(config_err(format!("compare supports at most {COMPARE_MAX_TLS} TLS's")));
    }
    let trunc = validate_truncation(model);
    if !trunc.passed {
        return Err(config_err(format!(
            "Fock truncation too small: fock_dim {} < required {} (mean photons {:.3}) {}",
            trunc.fock_dim,
            trunc.required_fock_dim,
            trunc.mean_photons,
            trunc.warnings.join("; ")
        )));
    }
    let t_end = r.t_end.ok_or_else(|| config_err("compare needs simulation.t_end_us"))?;
    let grid = r.grid().unwrap_or_else(|| jjtls::solver::uniform_grid(t_end, 201));
    let regime = r.fixed_regime().unwrap_or_else(|| auto_regime(r));
    let mut warnings = Vec::new();
    let validity = validity_report(model, regime, &r.thresholds);
    for f in validity.flagged() {
        warnings.push(format!("{} regime: {} = {:.4} exceeds {}", regime.name(), f.name, f.value, f.threshold));
    }
    let run = compare_run(model, regime, &r.initial, &grid, r.method, &StepOptions::default())?;

    let labels: Vec<String> = model.tls.iter().map(|t| t.label.clone()).collect();
    let mut header = vec!["time_us".to_string()];
    for src in ["full", "eff"] {
        for l in &labels {
            for c in ["sx", "sy", "sz"] {
                header.push(format!("{src}_{c}_{l}"));
            }
        }
    }
    for h in ["trace_distance", "a_re_full", "a_im_full", "a_re_adiabatic", "a_im_adiabatic"] {
        header.push(h.into());
    }
    let mut t = Table { header, rows: Vec::new() };
    for k in 0..run.times.len() {
        let mut row = vec![Cell::Num(run.times[k])];
        for s in [&run.full_spins[k], &run.effective_spins[k]] {
            for v in s {
                row.extend(v.iter().map(|x| Cell::Num(*x)));
            }
        }
        row.push(run.trace_distance[k].into());
        row.push(run.field_full[k].re.into());
        row.push(run.field_full[k].im.into());
        row.push(Cell::opt(run.field_adiabatic[k].map(|z| z.re)));
        row.push(Cell::opt(run.field_adiabatic[k].map(|z| z.im)));
        t.push(row);
    }
    warnings.push(format!(
        "regime {}: max trace distance {:.6e}; full-model trace drift {:.3e}, min eigenvalue {:.3e}",
        regime.name(),
        run.max_trace_distance(),
        run.full.max_trace_drift(),
        run.full.min_eigenvalue()
    ));
    Ok(CommandOutput { tables: vec![("compare".into(), t)], warnings })
}

// ---------------------------------------------------------------- gate

pub fn gate(r: &Resolved) -> CliResult<CommandOutput> {
    let model = &r.model;
    let n = model.n_tls();
    if n < 2 {
        return Err(config_err("gate needs at least two TLS's"));
    }
    let mut t = Table::new(&[
        "regime",
        "pair",
        "abs_lambda_over_2pi_mhz",
        "duration_us",
        "fidelity_unitary",
        "fidelity_open",
        "decoherence_rate_per_us",
        "ops_budget",
        "full_model_fidelity_unframed",
        "full_model_fidelity_framed",
        "status",
    ]);
    let mut warnings = Vec::new();
    for regime in [Regime::Dispersive, Regime::BadCavity] {
        let params = effective_params(model, regime);
        for a in 0..n {
            for b in (a + 1)..n {
                let pair = format!("{}-{}", model.tls[a].label, model.tls[b].label);
                let p = match &params {
                    Ok(p) => p,
                    Err(e) => {
                        warnings.push(format!("{} {pair}: {e}", regime.name()));
                        t.push(gate_blank_row(regime, pair, status_code(e)));
                        continue;
                    }
                };
                let budget = decoherence_budget(p.as_ref()).into_iter().find(|x| x.pair == (a, b));
                let report = match iswap_report(p.as_ref(), (a, b)) {
                    Ok(rep) => rep,
                    Err(e) => {
                        warnings.push(format!("{} {pair}: {e}", regime.name()));
                        let mut row = gate_blank_row(regime, pair, status_code(&e));
                        if let Some(bud) = &budget {
                            row[2] = over_2pi(bud.coupling).into();
                            row[6] = bud.rate.into();
                            row[7] = bud.ops.into();
                        }
                        t.push(row);
                        continue;
                    }
                };
                let framed = if regime == Regime::Dispersive {
                    full_model_iswap_fidelity(model, (a, b)).ok()
                } else {
                    None
                };
                t.push(vec![
                    regime.name().into(),
                    pair.into(),
                    Cell::opt(budget.as_ref().map(|x| over_2pi(x.coupling))),
                    report.duration.into(),
                    report.fidelity_unitary.into(),
                    report.fidelity_open.into(),
                    Cell::opt(budget.as_ref().map(|x| x.rate)),
                    report.ops_budget.into(),
                    Cell::opt(framed.map(|f| f.unframed)),
                    Cell::opt(framed.map(|f| f.framed)),
                    "ok".into(),
                ]);
            }
        }
    }
    Ok(CommandOutput { tables: vec![("gate".into(), t)], warnings })
}

fn gate_blank_row(regime: Regime, pair: String, status: &str) -> Vec<Cell> {
    let mut row = vec![Cell::from(regime.name()), Cell::from(pair)];
    row.extend(std::iter::repeat_n(Cell::Blank, 8));
    row.push(status.into());
    row
}

fn status_code(e: &jjtls::Error) -> &'static str {
    match e {
        jjtls::Error::RequiresEcho { .. } => "requires_echo",
        jjtls::Error::InvalidRegime(_) => "invalid_regime",
        jjtls::Error::Resonant { .. } => "resonant",
        jjtls::Error::DegenerateCircuit(_) => "degenerate_coupling",
        _ => "error",
    }
}

// ---------------------------------------------------------------- readout

pub fn readout(r: &Resolved) -> CliResult<CommandOutput> {
    let model = &r.model;
    let mut warnings = Vec::new();
    let quad = QuadratureSignal::new(model).map_err(CliError::from)?;
    let mut t = Table::new(&[
        "label",
        "quadrature_offset",
        "weight_x",
        "weight_y",
        "measurement_phase_rad",
        "pull_excited_over_2pi_mhz",
        "pull_ground_over_2pi_mhz",
        "correlation_residual",
        "correlation_relative_residual",
    ]);
    let (kappa, dc) = (model.resonator.kappa, model.resonator.delta_c);

    let correlation = if model.n_tls() == 1 && kappa > 0.0 {
        let grid = match r.grid() {
            Some(g) => g,
            None => {
                let p = badcavity_params(model)?;
                let settle = 5.0 / kappa + if p.gamma1[0] > 0.0 { 4.0 / p.gamma1[0] } else { 10.0 / kappa };
                jjtls::solver::uniform_grid(settle, 401)
            }
        };
        let (rho0, _) = initial_states(model, &r.initial)?;
        let chk = photon_correlation_check(model, &rho0, &grid)?;
        warnings.extend(chk.warnings.iter().cloned());
        Some(chk)
    } else {
        if model.n_tls() != 1 {
            warnings.push("correlation identity skipped: it needs exactly one TLS".into());
        } else {
            warnings.push("correlation identity skipped: it needs kappa > 0".into());
        }
        None
    };

    for (k, tls) in model.tls.iter().enumerate() {
        let phase = measurement_phase(tls.g, kappa, dc).ok();
        let pull = match dispersive_readout_shift(model, k) {
            Ok(p) => Some(p),
            Err(e) => {
                warnings.push(format!("dispersive pull for '{}': {e}", tls.label));
                None
            }
        };
        let (w_x, w_y) = quad.tls_weights[k];
        t.push(vec![
            tls.label.clone().into(),
            quad.offset.into(),
            w_x.into(),
            w_y.into(),
            Cell::opt(phase),
            Cell::opt(pull.map(|p| over_2pi(p.excited))),
            Cell::opt(pull.map(|p| over_2pi(p.ground))),
            Cell::opt(correlation.as_ref().map(|c| c.residual)),
            Cell::opt(correlation.as_ref().map(|c| c.relative_residual())),
        ]);
    }
    let mut tables = vec![("readout".to_string(), t)];
    if let Some(chk) = correlation {
        let mut trace = Table::new(&["time_us", "population_c", "coherence_m", "photon_number", "photon_predicted", "scored"]);
        for k in 0..chk.record.times.len() {
            let time = chk.record.times[k];
            trace.push(vec![
                time.into(),
                chk.record.c[k].re.into(),
                chk.record.m[k].into(),
                chk.record.photon[k].into(),
                chk.predicted[k].into(),
                Cell::flag(time >= chk.transient),
            ]);
        }
        tables.push(("readout-correlation".into(), trace));
    }
    Ok(CommandOutput { tables, warnings })
}

// ---------------------------------------------------------------- universality

/// Commutator rounds attempted by the closure search.
pub const CLOSURE_GENERATIONS: usize = 12;

pub fn universality(r: &Resolved) -> CliResult<CommandOutput> {
    let n = r.model.n_tls();
    if n > COMPARE_MAX_TLS {
        return Err(config_err(format!("universality supports at most {COMPARE_MAX_TLS} TLS's")));
    }
    let target = (1usize << (2 * n)) - 1;
    let mut t = Table::new(&["regime", "n_tls", "dimension", "target_dimension", "generations", "closed", "universal", "status"]);
    let mut warnings = Vec::new();
    for regime in [Regime::Dispersive, Regime::BadCavity] {
        let result = effective_params(&r.model, regime)
            .and_then(|p| effective_generators(p.as_ref()))
            .and_then(|(h1, h2)| universality_closure(&[h1, h2], CLOSURE_GENERATIONS));
        match result {
            Ok(res) => t.push(vec![
                regime.name().into(),
                Cell::Int(n as i64),
                Cell::Int(res.dimension as i64),
                Cell::Int(target as i64),
                Cell::Int(res.generations as i64),
                Cell::flag(res.closed),
                Cell::flag(res.dimension == target),
                "ok".into(),
            ]),
            Err(e) => {
                warnings.push(format!("{}: {e}", regime.name()));
                t.push(vec![
                    regime.name().into(),
                    Cell::Int(n as i64),
                    Cell::Blank,
                    Cell::Int(target as i64),
                    Cell::Blank,
                    Cell::Blank,
                    Cell::Blank,
                    status_code(&e).into(),
                ]);
            }
        }
    }
    Ok(CommandOutput { tables: vec![("universality".into(), t)], warnings })
}
