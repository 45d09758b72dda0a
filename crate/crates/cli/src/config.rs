//! Run configuration: JSON document with frequencies given as omega/2pi in MHz.

use jjtls::circuit::{coupling_constant, resonator_frequency, CircuitParams, TlsPolarization};
use jjtls::effective::{Regime, ValidityThresholds};
use jjtls::model::{DriveSpec, ResonatorSpec, SystemModel, TlsSpec};
use jjtls::scalar::mhz;
use jjtls::solver::Method;
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub resonator: ResonatorSection,
    #[serde(default)]
    pub drive: DriveSection,
    pub tls: Vec<TlsSection>,
    pub circuit: Option<CircuitSection>,
    #[serde(default)]
    pub simulation: SimulationSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub thresholds: ThresholdSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorSection {
    pub omega_c_mhz: Option<f64>,
    pub delta_c_mhz: Option<f64>,
    #[serde(default)]
    pub kappa_mhz: f64,
    pub fock_dim: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    #[serde(default)]
    pub epsilon0_mhz: f64,
    pub omega_d_mhz: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsSection {
    pub label: String,
    pub omega_mhz: Option<f64>,
    pub delta_mhz: Option<f64>,
    pub g_mhz: Option<f64>,
}

/// Junction circuit; replaces the resonator frequency and the couplings.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub e_j_mhz: f64,
    pub e_l_mhz: f64,
    pub e_c_mhz: f64,
    pub phi_ex: f64,
    /// One polarization component per TLS, in roster order.
    pub j_x: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Rk4,
    Adaptive,
}

impl MethodName {
    pub fn method(self) -> Method {
        match self {
            MethodName::Rk4 => Method::Rk4,
            MethodName::Adaptive => Method::Adaptive,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeChoice {
    #[default]
    Auto,
    Dispersive,
    BadCavity,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub t_end_us: Option<f64>,
    pub dt_us: Option<f64>,
    #[serde(default)]
    pub method: MethodName,
    #[serde(default)]
    pub regime: RegimeChoice,
    pub initial: Option<InitialSection>,
}

/// Product initial state: Fock level and one `e`/`g` letter per TLS.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub photons: usize,
    pub tls: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    #[serde(default = "default_dispersive_ratio")]
    pub dispersive_ratio: f64,
    #[serde(default = "default_badcavity_ratio")]
    pub badcavity_ratio: f64,
}

fn default_dispersive_ratio() -> f64 {
    ValidityThresholds::default().dispersive_ratio
}

fn default_badcavity_ratio() -> f64 {
    ValidityThresholds::default().badcavity_ratio
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self { dispersive_ratio: default_dispersive_ratio(), badcavity_ratio: default_badcavity_ratio() }
    }
}

/// Initial product state after parsing: photon number and per-TLS excitation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InitialState {
    pub photons: usize,
    pub excited: Vec<bool>,
}

/// Configuration resolved to rad/us and us.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub model: SystemModel<f64>,
    pub initial: InitialState,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub method: Method,
    pub regime: RegimeChoice,
    pub sweep: Option<SweepSection>,
    pub thresholds: ValidityThresholds,
}

impl Resolved {
    /// Sample grid from `t_end_us`/`dt_us`, if both are configured.
    pub fn grid(&self) -> Option<Vec<f64>> {
        let (t_end, dt) = (self.t_end?, self.dt?);
        let steps = (t_end / dt).round().max(1.0) as usize;
        Some(jjtls::solver::uniform_grid(t_end, steps + 1))
    }

    pub fn fixed_regime(&self) -> Option<Regime> {
        match self.regime {
            RegimeChoice::Auto => None,
            RegimeChoice::Dispersive => Some(Regime::Dispersive),
            RegimeChoice::BadCavity => Some(Regime::BadCavity),
        }
    }
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses the JSON text.
pub fn parse(text: &str) -> CliResult<RunConfig> {
    serde_json::from_str(text).map_err(|e| config_err(format!("cannot parse config: {e}")))
}

fn exactly_one(entity: &str, absolute: Option<f64>, detuning: Option<f64>, abs_name: &str, det_name: &str) -> CliResult<()> {
    match (absolute, detuning) {
        (Some(_), Some(_)) => Err(config_err(format!("{entity}: give either {abs_name} or {det_name}, not both"))),
        (None, None) => Err(config_err(format!("{entity}: one of {abs_name} or {det_name} is required"))),
        _ => Ok(()),
    }
}

fn finite(name: &str, x: f64) -> CliResult<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(config_err(format!("{name} must be finite")))
    }
}

impl RunConfig {
    pub fn resolve(&self) -> CliResult<Resolved> {
        let omega_d = self.drive.omega_d_mhz.map(|w| finite("drive.omega_d_mhz", w)).transpose()?;
        let need_drive_freq = |what: &str| {
            omega_d.ok_or_else(|| config_err(format!("{what} is absolute, so drive.omega_d_mhz is required")))
        };
        let mut uses_absolute = false;

        let circuit = match &self.circuit {
            Some(c) => {
                if self.resonator.omega_c_mhz.is_some() || self.resonator.delta_c_mhz.is_some() {
                    return Err(config_err("resonator frequency is set by the circuit section; remove omega_c_mhz/delta_c_mhz"));
                }
                if c.j_x.len() != self.tls.len() {
                    return Err(config_err(format!(
                        "circuit.j_x has {} entries for {} TLS's",
                        c.j_x.len(),
                        self.tls.len()
                    )));
                }
                let params = CircuitParams::new(
                    mhz::<f64>(finite("circuit.e_j_mhz", c.e_j_mhz)?),
                    mhz::<f64>(finite("circuit.e_l_mhz", c.e_l_mhz)?),
                    mhz::<f64>(finite("circuit.e_c_mhz", c.e_c_mhz)?),
                    finite("circuit.phi_ex", c.phi_ex)?,
                )
                .map_err(|e| config_err(format!("circuit: {e}")))?;
                Some(params)
            }
            None => {
                exactly_one("resonator", self.resonator.omega_c_mhz, self.resonator.delta_c_mhz, "omega_c_mhz", "delta_c_mhz")?;
                None
            }
        };

        let delta_c = match (&circuit, self.resonator.omega_c_mhz, self.resonator.delta_c_mhz) {
            (Some(c), _, _) => {
                uses_absolute = true;
                let wc = resonator_frequency(c).map_err(|e| config_err(format!("circuit: {e}")))?;
                wc - mhz::<f64>(need_drive_freq("circuit resonator frequency")?)
            }
            (None, Some(wc), _) => {
                uses_absolute = true;
                mhz::<f64>(finite("resonator.omega_c_mhz", wc)? - need_drive_freq("resonator.omega_c_mhz")?)
            }
            (None, None, Some(d)) => mhz::<f64>(finite("resonator.delta_c_mhz", d)?),
            (None, None, None) => unreachable!("checked above"),
        };
        let kappa_mhz = finite("resonator.kappa_mhz", self.resonator.kappa_mhz)?;
        if kappa_mhz < 0.0 {
            return Err(config_err("resonator.kappa_mhz must be >= 0"));
        }
        let eps_mhz = finite("drive.epsilon0_mhz", self.drive.epsilon0_mhz)?;
        if eps_mhz < 0.0 {
            return Err(config_err("drive.epsilon0_mhz must be >= 0"));
        }

        if self.tls.is_empty() {
            return Err(config_err("at least one TLS entry is required"));
        }
        let mut tls = Vec::with_capacity(self.tls.len());
        for (k, t) in self.tls.iter().enumerate() {
            let entity = format!("tls '{}'", t.label);
            exactly_one(&entity, t.omega_mhz, t.delta_mhz, "omega_mhz", "delta_mhz")?;
            let delta = match (t.omega_mhz, t.delta_mhz) {
                (Some(w), _) => {
                    uses_absolute = true;
                    mhz::<f64>(finite(&entity, w)? - need_drive_freq(&entity)?)
                }
                (None, Some(d)) => mhz::<f64>(finite(&entity, d)?),
                (None, None) => unreachable!("checked above"),
            };
            let g = match (&circuit, t.g_mhz) {
                (Some(_), Some(_)) => {
                    return Err(config_err(format!("{entity}: g_mhz is set by the circuit section; remove it")))
                }
                (Some(c), None) => {
                    let pol = TlsPolarization::new(self.circuit.as_ref().map(|s| s.j_x[k]).unwrap_or_default())
                        .map_err(|e| config_err(format!("{entity}: {e}")))?;
                    coupling_constant(c, &pol).map_err(|e| config_err(format!("circuit: {e}")))?
                }
                (None, Some(g)) => mhz::<f64>(finite(&entity, g)?),
                (None, None) => return Err(config_err(format!("{entity}: g_mhz is required"))),
            };
            tls.push(TlsSpec::new(t.label.clone(), delta, g));
        }
        if omega_d.is_some() && !uses_absolute {
            return Err(config_err("drive.omega_d_mhz is only used with absolute frequencies; remove it"));
        }

        let model = SystemModel::new(
            ResonatorSpec { delta_c, kappa: mhz(kappa_mhz), fock_dim: self.resonator.fock_dim },
            DriveSpec { epsilon0: mhz(eps_mhz) },
            tls,
        )
        .map_err(|e| config_err(format!("model: {e}")))?;

        let initial = match &self.simulation.initial {
            Some(init) => {
                let letters: Vec<char> = init.tls.chars().collect();
                if letters.len() != model.n_tls() || letters.iter().any(|c| *c != 'e' && *c != 'g') {
                    return Err(config_err(format!(
                        "simulation.initial.tls must be {} letters from {{e, g}}",
                        model.n_tls()
                    )));
                }
                if init.photons >= model.resonator.fock_dim {
                    return Err(config_err("simulation.initial.photons must be below fock_dim"));
                }
                InitialState { photons: init.photons, excited: letters.iter().map(|c| *c == 'e').collect() }
            }
            None => InitialState {
                photons: 0,
                excited: (0..model.n_tls()).map(|k| k == 0).collect(),
            },
        };

        for (name, v) in [("simulation.t_end_us", self.simulation.t_end_us), ("simulation.dt_us", self.simulation.dt_us)] {
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return Err(config_err(format!("{name} must be positive")));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.points < 2 {
                return Err(config_err("sweep.points must be >= 2"));
            }
            finite("sweep.start", s.start)?;
            finite("sweep.stop", s.stop)?;
        }
        let th = self.thresholds;
        if !(th.dispersive_ratio > 0.0 && th.badcavity_ratio > 0.0) {
            return Err(config_err("thresholds must be positive"));
        }

        Ok(Resolved {
            model,
            initial,
            t_end: self.simulation.t_end_us,
            dt: self.simulation.dt_us,
            method: self.simulation.method.method(),
            regime: self.simulation.regime,
            sweep: self.sweep.clone(),
            thresholds: ValidityThresholds { dispersive_ratio: th.dispersive_ratio, badcavity_ratio: th.badcavity_ratio },
        })
    }
}

/// Parses and resolves in one step.
pub fn load(text: &str) -> CliResult<Resolved> {
    parse(text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "resonator": {"delta_c_mhz": -20.0, "kappa_mhz": 1.0, "fock_dim": 4},
        "tls": [{"label": "a", "delta_mhz": 0.5, "g_mhz": 1.0}]
    }"#;

    #[test]
    fn detuning_form_converts_to_angular_units() {
        let r = load(BASE).unwrap();
        let tau = std::f64::consts::TAU;
        assert_eq!(r.model.resonator.delta_c, -20.0 * tau);
        assert_eq!(r.model.tls[0].g, tau);
        assert!((r.model.tls[0].delta / tau - 0.5).abs() < 1e-12 * 0.5);
        assert_eq!(r.initial, InitialState { photons: 0, excited: vec![true] });
    }

    #[test]
    fn absolute_form_needs_drive_frequency() {
        let text = BASE.replace("\"delta_c_mhz\": -20.0", "\"omega_c_mhz\": 7000.0");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
        let text = text.replace("\"tls\"", "\"drive\": {\"omega_d_mhz\": 7020.0}, \"tls\"");
        let r = load(&text).unwrap();
        assert!((r.model.resonator.delta_c / std::f64::consts::TAU + 20.0).abs() < 1e-9);
    }

    #[test]
    fn both_forms_rejected() {
        let text = BASE.replace("\"delta_mhz\": 0.5", "\"delta_mhz\": 0.5, \"omega_mhz\": 3.0");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn unused_drive_frequency_rejected() {
        let text = BASE.replace("\"tls\"", "\"drive\": {\"omega_d_mhz\": 7020.0}, \"tls\"");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = BASE.replace("\"fock_dim\": 4", "\"fock_dim\": 4, \"q\": 1");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn circuit_sets_frequency_and_coupling() {
        let text = r#"{
            "resonator": {"kappa_mhz": 1.0, "fock_dim": 3},
            "drive": {"omega_d_mhz": 5000.0},
            "tls": [{"label": "a", "delta_mhz": 0.0}],
            "circuit": {"e_j_mhz": 2000.0, "e_l_mhz": 10000.0, "e_c_mhz": 300.0, "phi_ex": 1.0, "j_x": [0.5]}
        }"#;
        let r = load(text).unwrap();
        assert!(r.model.tls[0].g != 0.0);
        let flipped = text.replace("\"phi_ex\": 1.0", "\"phi_ex\": 0.0");
        assert_eq!(load(&flipped).unwrap().model.tls[0].g, 0.0);
    }

    #[test]
    fn sweep_needs_two_points() {
        let text = BASE.replace("\"tls\"", "\"sweep\": {\"parameter\": \"delta_c\", \"start\": 0, \"stop\": 1, \"points\": 1}, \"tls\"");
        assert!(matches!(load(&text), Err(CliError::Config(_))));
    }
}
