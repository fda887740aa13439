//! JSON run configuration.
//!
//! Every physical quantity carries its unit in the key name
//! (`omega_peak_khz`, `sigma_us`, …). Frequencies are cyclic (`Ω/2π`).
//! Unknown keys are rejected. Missing keys take the defaults of
//! [`ExperimentConfig::operating_point`].

use std::path::Path;

use dicke_core::drive::{angular, EnvelopeKind};
use dicke_core::measurement::ReadoutModel;
use dicke_core::{CompensationMode, EtaSpec, ExperimentConfig, PrepMode, PulseShape};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Raw configuration document. [`resolve`] turns it into an
/// [`ExperimentConfig`] plus a copy with every default written out.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_peak_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_us: Option<f64>,
    /// Symmetric chirp from `−chirp_khz` to `+chirp_khz`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirp_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirp_start_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirp_end_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_v_mhz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass_amu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beam_angle_deg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compensation: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comp_power_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comp_detuning_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prep: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prep_weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prep_offsets_khz: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prep_omega_khz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_ns: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_low_counts: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_high_counts: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bright_counts: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub background_counts: Option<f64>,
}

const KNOWN_KEYS: &[&str] = &[
    "n_qubits",
    "n_max",
    "omega_peak_khz",
    "sigma_us",
    "chirp_khz",
    "chirp_start_khz",
    "chirp_end_khz",
    "duration_factor",
    "envelope",
    "omega_v_mhz",
    "eta",
    "wavelength_nm",
    "mass_amu",
    "beam_angle_deg",
    "compensation",
    "comp_power_ratio",
    "comp_detuning_khz",
    "prep",
    "prep_weights",
    "prep_offsets_khz",
    "prep_omega_khz",
    "nbar",
    "dt_ns",
    "analysis_points",
    "phi_points",
    "shots",
    "seed",
    "threshold_low_counts",
    "threshold_high_counts",
    "bright_counts",
    "background_counts",
];

fn err(key: &str, message: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses a configuration document.
pub fn parse_str(text: &str) -> Result<ConfigFile, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| err("<document>", e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| err("<document>", "expected a JSON object"))?;
    for key in obj.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            let prefix = format!("{key}_");
            let message = match KNOWN_KEYS.iter().find(|k| k.starts_with(&prefix)) {
                Some(k) => format!("unknown key; quantities need a unit suffix, e.g. `{k}`"),
                None => "unknown key".to_string(),
            };
            return Err(err(key, message));
        }
    }
    serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        err(&key, e.into_inner().to_string())
    })
}

/// Reads and parses a configuration file.
pub fn parse_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err("<file>", format!("cannot read {}: {e}", path.display())))?;
    parse_str(&text)
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(key, format!("must be positive, got {v}")))
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64, CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(err(key, format!("must be non-negative, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(key, format!("must be finite, got {v}")))
    }
}

fn forbid(key: &str, present: bool, reason: &str) -> Result<(), CliError> {
    if present {
        Err(err(key, reason.to_string()))
    } else {
        Ok(())
    }
}

/// A configuration turned into simulator input.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    /// The input with every default filled in.
    pub file: ConfigFile,
}

/// Applies defaults and range checks.
pub fn resolve(c: &ConfigFile) -> Result<Resolved, CliError> {
    let base = ExperimentConfig::operating_point();
    let hz = |x: f64| x / std::f64::consts::TAU;
    let mut out = ConfigFile::default();

    let n_qubits = c.n_qubits.unwrap_or(base.n_qubits);
    if n_qubits < 2 {
        return Err(err("n_qubits", format!("must be at least 2, got {n_qubits}")));
    }
    let n_max = c.n_max.unwrap_or(base.n_max);
    if n_max < 2 {
        return Err(err("n_max", format!("must be at least 2, got {n_max}")));
    }
    out.n_qubits = Some(n_qubits);
    out.n_max = Some(n_max);

    let omega_peak_khz = non_negative(
        "omega_peak_khz",
        c.omega_peak_khz.unwrap_or(hz(base.pulse.omega_peak) / 1e3),
    )?;
    let sigma_us = positive("sigma_us", c.sigma_us.unwrap_or(base.pulse.sigma * 1e6))?;
    let duration_factor = positive(
        "duration_factor",
        c.duration_factor.unwrap_or(base.pulse.duration_factor),
    )?;
    let (chirp_start_khz, chirp_end_khz) = match (c.chirp_khz, c.chirp_start_khz, c.chirp_end_khz) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(err("chirp_khz", "give either chirp_khz or chirp_start_khz/chirp_end_khz"))
        }
        (Some(w), None, None) => {
            let w = finite("chirp_khz", w)?;
            (-w, w)
        }
        (None, s, e) => (
            finite("chirp_start_khz", s.unwrap_or(hz(base.pulse.chirp_start) / 1e3))?,
            finite("chirp_end_khz", e.unwrap_or(hz(base.pulse.chirp_end) / 1e3))?,
        ),
    };
    let envelope = c.envelope.unwrap_or(base.pulse.kind);
    let pulse = PulseShape {
        omega_peak: angular(omega_peak_khz * 1e3),
        sigma: sigma_us * 1e-6,
        duration_factor,
        chirp_start: angular(chirp_start_khz * 1e3),
        chirp_end: angular(chirp_end_khz * 1e3),
        kind: envelope,
    };
    out.omega_peak_khz = Some(omega_peak_khz);
    out.sigma_us = Some(sigma_us);
    out.chirp_start_khz = Some(chirp_start_khz);
    out.chirp_end_khz = Some(chirp_end_khz);
    out.duration_factor = Some(duration_factor);
    out.envelope = Some(envelope);

    let omega_v_mhz = positive("omega_v_mhz", c.omega_v_mhz.unwrap_or(hz(base.omega_v) / 1e6))?;
    out.omega_v_mhz = Some(omega_v_mhz);

    let derivation = c.wavelength_nm.is_some() || c.mass_amu.is_some() || c.beam_angle_deg.is_some();
    let eta = match c.eta {
        Some(eta) => {
            forbid("eta", derivation, "give either eta or wavelength_nm/mass_amu/beam_angle_deg")?;
            if !(eta > 0.0 && eta < 0.3) {
                return Err(err("eta", format!("must lie in (0, 0.3), got {eta}")));
            }
            out.eta = Some(eta);
            EtaSpec::Fixed { eta }
        }
        None => {
            let EtaSpec::Derived {
                wavelength,
                mass_amu,
                beam_angle,
            } = EtaSpec::calcium()
            else {
                unreachable!("default eta is derived")
            };
            let wl = positive("wavelength_nm", c.wavelength_nm.unwrap_or(wavelength * 1e9))?;
            let m = positive("mass_amu", c.mass_amu.unwrap_or(mass_amu))?;
            let ang = finite("beam_angle_deg", c.beam_angle_deg.unwrap_or(beam_angle.to_degrees()))?;
            out.wavelength_nm = Some(wl);
            out.mass_amu = Some(m);
            out.beam_angle_deg = Some(ang);
            EtaSpec::Derived {
                wavelength: wl * 1e-9,
                mass_amu: m,
                beam_angle: ang.to_radians(),
            }
        }
    };

    let comp_name = c.compensation.clone().unwrap_or_else(|| base.compensation.label().to_string());
    let comp_keys = c.comp_power_ratio.is_some() || c.comp_detuning_khz.is_some();
    let compensation = match comp_name.as_str() {
        "none" | "zero_carrier" => {
            forbid("comp_power_ratio", comp_keys, "compensator settings need compensation \"effective\"")?;
            if comp_name == "none" {
                CompensationMode::None
            } else {
                CompensationMode::ZeroCarrier
            }
        }
        "effective" => {
            let CompensationMode::Effective {
                power_ratio,
                comp_detuning,
            } = CompensationMode::effective_default()
            else {
                unreachable!("default compensator is effective")
            };
            let p = c.comp_power_ratio.unwrap_or(power_ratio);
            if !(p > 0.0 && p <= 1.0) {
                return Err(err("comp_power_ratio", format!("must lie in (0, 1], got {p}")));
            }
            let d = c.comp_detuning_khz.unwrap_or(hz(comp_detuning) / 1e3);
            if d == 0.0 || !d.is_finite() {
                return Err(err("comp_detuning_khz", format!("must be finite and non-zero, got {d}")));
            }
            out.comp_power_ratio = Some(p);
            out.comp_detuning_khz = Some(d);
            CompensationMode::Effective {
                power_ratio: p,
                comp_detuning: angular(d * 1e3),
            }
        }
        other => {
            return Err(err(
                "compensation",
                format!("expected none, zero_carrier or effective, got \"{other}\""),
            ))
        }
    };
    out.compensation = Some(comp_name.clone());

    let prep_name = c.prep.clone().unwrap_or_else(|| "ideal_fock".to_string());
    let prep_keys = c.prep_weights.is_some() || c.prep_offsets_khz.is_some() || c.prep_omega_khz.is_some();
    let prep = match prep_name.as_str() {
        "ideal_fock" => {
            forbid("prep_weights", prep_keys, "prep settings need prep \"simulated_pulses\"")?;
            PrepMode::IdealFock
        }
        "simulated_pulses" => {
            let PrepMode::SimulatedPulses {
                weights,
                offsets,
                omega,
            } = PrepMode::addressed(n_qubits)
            else {
                unreachable!("addressed prep is simulated")
            };
            let w = c.prep_weights.clone().unwrap_or(weights);
            if w.len() != n_qubits {
                return Err(err("prep_weights", format!("need {n_qubits} entries, got {}", w.len())));
            }
            if let Some(x) = w.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(err("prep_weights", format!("entries must lie in [0, 1], got {x}")));
            }
            if w[0] == 0.0 {
                return Err(err("prep_weights", "the addressed ion 0 needs a non-zero weight"));
            }
            let o = c
                .prep_offsets_khz
                .clone()
                .unwrap_or_else(|| offsets.iter().map(|x| hz(*x) / 1e3).collect());
            if o.len() != n_qubits {
                return Err(err("prep_offsets_khz", format!("need {n_qubits} entries, got {}", o.len())));
            }
            for x in &o {
                finite("prep_offsets_khz", *x)?;
            }
            let om = positive("prep_omega_khz", c.prep_omega_khz.unwrap_or(hz(omega) / 1e3))?;
            out.prep_weights = Some(w.clone());
            out.prep_offsets_khz = Some(o.clone());
            out.prep_omega_khz = Some(om);
            PrepMode::SimulatedPulses {
                weights: w,
                offsets: o.iter().map(|x| angular(x * 1e3)).collect(),
                omega: angular(om * 1e3),
            }
        }
        other => {
            return Err(err(
                "prep",
                format!("expected ideal_fock or simulated_pulses, got \"{other}\""),
            ))
        }
    };
    out.prep = Some(prep_name);

    let nbar = non_negative("nbar", c.nbar.unwrap_or(base.nbar))?;
    out.nbar = Some(nbar);
    let dt = match c.dt_ns {
        Some(dt) => Some(positive("dt_ns", dt)? * 1e-9),
        None => None,
    };
    out.dt_ns = c.dt_ns;
    let analysis_points = c.analysis_points.unwrap_or(base.analysis_points);
    if analysis_points < 3 {
        return Err(err("analysis_points", format!("must be at least 3, got {analysis_points}")));
    }
    out.analysis_points = Some(analysis_points);

    let mut measurement = base.measurement.clone();
    let phi_points = c.phi_points.unwrap_or(measurement.phis.len());
    if phi_points < 3 {
        return Err(err("phi_points", format!("must be at least 3, got {phi_points}")));
    }
    let last = (phi_points - 1) as f64;
    measurement.phis = (0..phi_points)
        .map(|k| k as f64 * std::f64::consts::PI / last)
        .collect();
    out.phi_points = Some(phi_points);
    measurement.shots = c.shots.unwrap_or(measurement.shots);
    if measurement.shots == 0 {
        return Err(err("shots", "must be at least 1"));
    }
    out.shots = Some(measurement.shots);
    measurement.seed = c.seed.unwrap_or(measurement.seed);
    out.seed = Some(measurement.seed);
    let low = c.threshold_low_counts.unwrap_or(measurement.thresholds.0);
    let high = c.threshold_high_counts.unwrap_or(measurement.thresholds.1);
    if low >= high {
        return Err(err(
            "threshold_low_counts",
            format!("must be below threshold_high_counts ({low} >= {high})"),
        ));
    }
    measurement.thresholds = (low, high);
    out.threshold_low_counts = Some(low);
    out.threshold_high_counts = Some(high);
    let default_readout = ReadoutModel::default();
    measurement.readout = ReadoutModel {
        bright_mean: non_negative("bright_counts", c.bright_counts.unwrap_or(default_readout.bright_mean))?,
        background: non_negative(
            "background_counts",
            c.background_counts.unwrap_or(default_readout.background),
        )?,
    };
    out.bright_counts = Some(measurement.readout.bright_mean);
    out.background_counts = Some(measurement.readout.background);

    let experiment = ExperimentConfig {
        n_qubits,
        n_max,
        eta,
        omega_v: angular(omega_v_mhz * 1e6),
        pulse,
        compensation,
        prep,
        measurement,
        nbar,
        dt,
        analysis_points,
    };
    experiment
        .validate()
        .map_err(|e| err("<config>", e.to_string()))?;
    Ok(Resolved {
        experiment,
        file: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let c = parse_str(
            r#"{"n_qubits":2,"n_max":5,"omega_peak_khz":145,"sigma_us":122,"chirp_khz":100,"compensation":"zero_carrier"}"#,
        )
        .unwrap();
        let r = resolve(&c).unwrap();
        let e = &r.experiment;
        assert_eq!(e.pulse.duration_factor, 2.36);
        assert!((e.omega_v - angular(0.7e6)).abs() < 1e-6);
        assert!((e.pulse.width() - 244e-6).abs() < 1e-15);
        assert_eq!(e.compensation, CompensationMode::ZeroCarrier);
        assert!((e.pulse.chirp_start + angular(100e3)).abs() < 1e-6);
        assert_eq!(r.file.duration_factor, Some(2.36));
        assert_eq!(r.file.chirp_khz, None);
    }

    #[test]
    fn resolved_file_round_trips() {
        let c = parse_str(r#"{"compensation":"effective","prep":"simulated_pulses"}"#).unwrap();
        let r = resolve(&c).unwrap();
        let text = serde_json::to_string(&r.file).unwrap();
        let again = resolve(&parse_str(&text).unwrap()).unwrap();
        assert_eq!(again.file, r.file);
        assert_eq!(again.experiment, r.experiment);
    }

    #[test]
    fn empty_config_is_the_default_operating_point() {
        let r = resolve(&parse_str("{}").unwrap()).unwrap();
        let base = ExperimentConfig::operating_point();
        assert!((r.experiment.pulse.omega_peak - base.pulse.omega_peak).abs() < 1e-6);
        assert!((r.experiment.eta_value() - base.eta_value()).abs() < 1e-12);
    }

    fn key_of(e: CliError) -> String {
        match e {
            CliError::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn rejections_name_the_key() {
        fn parse_key(s: &str) -> String {
            key_of(parse_str(s).unwrap_err())
        }
        assert_eq!(parse_key(r#"{"omega_peak":145}"#), "omega_peak");
        let e = parse_str(r#"{"omega_peak":145}"#).unwrap_err().to_string();
        assert!(e.contains("omega_peak_khz"), "{e}");
        assert_eq!(parse_key(r#"{"sigma_us":"wide"}"#), "sigma_us");
        assert_eq!(parse_key("[1, 2]"), "<document>");
        assert_eq!(parse_key("{"), "<document>");

        let check = |s: &str, key: &str| {
            let c = parse_str(s).unwrap();
            assert_eq!(key_of(resolve(&c).unwrap_err()), key, "{s}");
        };
        check(r#"{"omega_peak_khz":-5}"#, "omega_peak_khz");
        check(r#"{"sigma_us":0}"#, "sigma_us");
        check(r#"{"n_qubits":1}"#, "n_qubits");
        check(r#"{"eta":0.5}"#, "eta");
        check(r#"{"eta":0.1,"mass_amu":40}"#, "eta");
        check(r#"{"compensation":"full"}"#, "compensation");
        check(r#"{"comp_power_ratio":0.5}"#, "comp_power_ratio");
        check(r#"{"prep_weights":[1,0]}"#, "prep_weights");
        check(r#"{"prep":"simulated_pulses","prep_weights":[1]}"#, "prep_weights");
        check(r#"{"chirp_khz":100,"chirp_end_khz":50}"#, "chirp_khz");
        check(r#"{"threshold_low_counts":200}"#, "threshold_low_counts");
        check(r#"{"phi_points":2}"#, "phi_points");
    }
}
