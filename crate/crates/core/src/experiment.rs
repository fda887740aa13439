//! End-to-end runs: motional Fock-state preparation, the RAP pulse on the
//! red sideband of all ions, readout of the internal state, and sweeps of
//! the pulse width and peak Rabi frequency.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::drive::{
    angular, derive_eta, CompensationMode, DriveConfig, PulseShape, Sideband, DEFAULT_OMEGA_V,
};
use crate::error::{Error, Result};
use crate::hilbert::{embed, make_dicke, HilbertSpace, Spin, StateVector};
use crate::measurement::{
    fidelity_dicke, trace_out_motion, InternalDensityMatrix, ReadoutModel, DEFAULT_THRESHOLDS,
};
use crate::propagator::{default_dt, evolve, propagate_sequence, EvolutionResult};
use crate::spectral::{
    adiabatic_spectrum, adiabaticity_ratio, AdiabaticFrame, build_five_state, diabatic_bound, local_maxima,
    local_minima, moving_average, uniform_grid, DiabaticBound, DEFAULT_GRID_POINTS, FIVE_D0,
    FIVE_DD1, FIVE_STATE_LABELS, MAX_REFINEMENTS,
};

/// Thermal components lighter than this are dropped (weights renormalized).
pub const THERMAL_CUTOFF: f64 = 1e-6;
/// Window used to smooth curves before counting extrema.
pub const SMOOTHING_WINDOW: usize = 5;
/// Default number of sweep points.
pub const DEFAULT_SWEEP_POINTS: usize = 15;

/// Source of the Lamb–Dicke parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EtaSpec {
    Fixed { eta: f64 },
    /// From the trap and laser geometry via [`derive_eta`].
    Derived {
        wavelength: f64,
        mass_amu: f64,
        beam_angle: f64,
    },
}

impl EtaSpec {
    /// 729 nm on ⁴⁰Ca⁺, beam along the trap axis.
    pub fn calcium() -> Self {
        EtaSpec::Derived {
            wavelength: 729e-9,
            mass_amu: 40.0,
            beam_angle: 0.0,
        }
    }
}

/// How the initial `|↓…↓⟩|1⟩` is obtained.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PrepMode {
    /// Start directly in `|↓…↓⟩|1⟩`.
    IdealFock,
    /// Blue-sideband π pulse then carrier π pulse on ion 0, from `|↓…↓⟩|0⟩`.
    SimulatedPulses {
        /// Per-ion amplitude factors; ion 0 is the addressed ion.
        weights: Vec<f64>,
        /// Per-ion transition frequency offsets (rad/s).
        offsets: Vec<f64>,
        /// Carrier Rabi frequency of the preparation pulses (rad/s).
        omega: f64,
    },
}

impl PrepMode {
    /// Addressed pulses on ion 0 of `n` ions at `2π × 145 kHz`.
    pub fn addressed(n: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[0] = 1.0;
        PrepMode::SimulatedPulses {
            weights,
            offsets: vec![0.0; n],
            omega: angular(145e3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasurementSettings {
    /// Analysis-pulse phases (rad).
    pub phis: Vec<f64>,
    pub shots: usize,
    pub seed: u64,
    pub thresholds: (u32, u32),
    pub readout: ReadoutModel,
}

impl Default for MeasurementSettings {
    fn default() -> Self {
        Self {
            phis: (0..=24).map(|k| k as f64 * PI / 24.0).collect(),
            shots: 10_000,
            seed: 0,
            thresholds: DEFAULT_THRESHOLDS,
            readout: ReadoutModel::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub n_max: usize,
    pub eta: EtaSpec,
    /// Secular frequency (rad/s).
    pub omega_v: f64,
    pub pulse: PulseShape,
    pub compensation: CompensationMode,
    pub prep: PrepMode,
    pub measurement: MeasurementSettings,
    /// Mean thermal occupation added on top of the prepared Fock state.
    pub nbar: f64,
    /// Integration step (s); `None` uses [`default_dt`].
    pub dt: Option<f64>,
    /// Grid points for the adiabatic analysis.
    pub analysis_points: usize,
}

impl ExperimentConfig {
    /// Two ions, 145 kHz peak Rabi frequency, 2σ = 244 µs, ±100 kHz chirp,
    /// ideal carrier compensation.
    pub fn operating_point() -> Self {
        Self {
            n_qubits: 2,
            n_max: 5,
            eta: EtaSpec::calcium(),
            omega_v: DEFAULT_OMEGA_V,
            pulse: PulseShape::from_lab(145e3, 244e-6, 100e3).expect("valid default pulse"),
            compensation: CompensationMode::ZeroCarrier,
            prep: PrepMode::IdealFock,
            measurement: MeasurementSettings::default(),
            nbar: 0.0,
            dt: None,
            analysis_points: DEFAULT_GRID_POINTS,
        }
    }

    /// Settings for the adiabatic-potential comparison: as
    /// [`operating_point`](Self::operating_point) with a 300 kHz peak Rabi
    /// frequency, where the carrier-induced second approach is resolved.
    pub fn potentials_default() -> Self {
        let mut cfg = Self::operating_point();
        cfg.pulse.omega_peak = angular(300e3);
        cfg
    }

    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(self.n_qubits, self.n_max)
    }

    pub fn eta_value(&self) -> f64 {
        match self.eta {
            EtaSpec::Fixed { eta } => eta,
            EtaSpec::Derived {
                wavelength,
                mass_amu,
                beam_angle,
            } => derive_eta(wavelength, mass_amu, self.omega_v, self.n_qubits, beam_angle),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::InvalidArgument("need at least two ions".into()));
        }
        if self.n_max < 2 {
            return Err(Error::InvalidArgument("n_max must be at least 2".into()));
        }
        if !(self.nbar >= 0.0 && self.nbar.is_finite()) {
            return Err(Error::InvalidArgument(format!("nbar must be non-negative, got {}", self.nbar)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
            }
        }
        if self.analysis_points < 3 {
            return Err(Error::InvalidArgument("analysis_points must be at least 3".into()));
        }
        if let PrepMode::SimulatedPulses { weights, offsets, omega } = &self.prep {
            if weights.len() != self.n_qubits || offsets.len() != self.n_qubits {
                return Err(Error::InvalidArgument(
                    "prep weights and offsets need one entry per ion".into(),
                ));
            }
            if !(*omega > 0.0) || weights[0] <= 0.0 {
                return Err(Error::InvalidArgument(
                    "prep pulses need a positive Rabi frequency on ion 0".into(),
                ));
            }
        }
        let m = &self.measurement;
        if m.thresholds.0 >= m.thresholds.1 {
            return Err(Error::InvalidArgument("thresholds need low < high".into()));
        }
        if m.shots == 0 {
            return Err(Error::InvalidArgument("shots must be at least 1".into()));
        }
        self.drive()?;
        Ok(())
    }

    /// The RAP drive: red sideband, all ions illuminated equally.
    pub fn drive(&self) -> Result<DriveConfig> {
        self.drive_in(self.space()?)
    }

    fn drive_in(&self, space: HilbertSpace) -> Result<DriveConfig> {
        DriveConfig::new(space, self.eta_value(), self.omega_v, self.pulse)?
            .with_compensation(self.compensation)
    }

    fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.pulse = match axis {
            SweepAxis::Width => cfg.pulse.with_width(value)?,
            SweepAxis::Peak => cfg.pulse.with_omega_peak(value)?,
        };
        Ok(cfg)
    }
}

/// Thermal Fock weights `n̄ⁿ/(1+n̄)ⁿ⁺¹`, truncated at [`THERMAL_CUTOFF`].
pub fn thermal_weights(nbar: f64) -> Vec<(usize, f64)> {
    if nbar == 0.0 {
        return vec![(0, 1.0)];
    }
    let q = nbar / (1.0 + nbar);
    let mut out = Vec::new();
    let mut p = 1.0 / (1.0 + nbar);
    let mut n = 0;
    while p >= THERMAL_CUTOFF {
        out.push((n, p));
        p *= q;
        n += 1;
    }
    let total: f64 = out.iter().map(|x| x.1).sum();
    out.iter_mut().for_each(|x| x.1 /= total);
    out
}

/// Result of the preparation stage.
#[derive(Clone, Debug)]
pub struct Preparation {
    pub state: StateVector,
    /// `|⟨↓…↓,1|ψ⟩|²`.
    pub fock1_population: f64,
    pub norm_drift: f64,
}

impl Preparation {
    /// Population outside the target `|↓…↓⟩|1⟩`.
    pub fn leakage(&self) -> f64 {
        1.0 - self.fock1_population
    }
}

/// Prepares `|↓…↓⟩|1⟩` in the configured space.
pub fn prepare_fock1(cfg: &ExperimentConfig) -> Result<Preparation> {
    cfg.validate()?;
    prepare_from(cfg, cfg.space()?, 0)
}

fn prepare_from(cfg: &ExperimentConfig, space: HilbertSpace, fock_n: usize) -> Result<Preparation> {
    let downs = vec![Spin::Down; cfg.n_qubits];
    let target = embed(space, &downs, 1)?;
    let (state, drift) = match &cfg.prep {
        PrepMode::IdealFock => (embed(space, &downs, fock_n + 1)?, 0.0),
        PrepMode::SimulatedPulses { weights, offsets, omega } => {
            let eta = cfg.eta_value();
            let w0 = weights[0];
            let tune = -offsets[0];
            let bsb_time = PI / (eta * omega * w0);
            let car_time = PI / (omega * w0);
            let bsb = DriveConfig::new(space, eta, cfg.omega_v, PulseShape::square(*omega, bsb_time, tune)?)?
                .with_weights(weights.clone())?
                .with_offsets(offsets.clone())?
                .with_sideband(Sideband::Blue)
                .with_compensation(CompensationMode::ZeroCarrier)?;
            let car = bsb
                .clone()
                .with_pulse(PulseShape::square(*omega, car_time, tune)?)?
                .with_sideband(Sideband::Carrier);
            let dt = cfg
                .dt
                .unwrap_or_else(|| default_dt(&bsb).min(default_dt(&car)));
            let psi0 = embed(space, &downs, fock_n)?;
            let r = propagate_sequence(&[(bsb, bsb_time), (car, car_time)], &psi0, dt)?;
            (r.final_state, r.norm_drift)
        }
    };
    Ok(Preparation {
        fock1_population: target.overlap_squared(&state)?,
        state,
        norm_drift: drift,
    })
}

/// `Σ_n |⟨D_N^(m), n|ψ⟩|²`: Dicke population with the motion traced out.
pub fn dicke_population(psi: &StateVector, m: usize) -> Result<f64> {
    let sp = psi.space();
    let d = make_dicke(sp.n_qubits(), m)?;
    let a = psi.amplitudes();
    Ok((0..sp.n_levels())
        .map(|n| {
            d.amplitudes()
                .iter()
                .enumerate()
                .map(|(w, dw)| dw.conj() * a[sp.index_of(w, n)])
                .sum::<num_complex::Complex64>()
                .norm_sqr()
        })
        .sum())
}

/// Outcome of preparation followed by the RAP pulse.
#[derive(Clone, Debug)]
pub struct RapOutcome {
    /// Evolution of the dominant (lowest Fock) thermal component.
    pub evolution: EvolutionResult,
    pub prep: Preparation,
    /// Internal density matrix, two ions only.
    pub rho: Option<InternalDensityMatrix>,
    /// Population of the single-excitation Dicke state.
    pub fidelity: f64,
    /// Internal-state populations by spin word, averaged over components.
    pub spin_populations: Vec<f64>,
    /// Diabatic estimate for the RAP pair, two ions only.
    pub diabatic_bound: Option<DiabaticBound>,
    /// Largest norm drift over all evolutions.
    pub norm_drift: f64,
}

impl RapOutcome {
    pub fn diag_sum(&self) -> Option<f64> {
        self.rho.as_ref().map(|r| r.diag_sum())
    }

    pub fn offdiag(&self) -> Option<f64> {
        self.rho.as_ref().map(|r| r.offdiag())
    }
}

/// Preparation, RAP on the red sideband of all ions, and readout.
pub fn run_rap(cfg: &ExperimentConfig) -> Result<RapOutcome> {
    cfg.validate()?;
    let components = thermal_weights(cfg.nbar);
    let mut first: Option<(EvolutionResult, Preparation)> = None;
    let mut fidelity = 0.0;
    let mut spin_pops = vec![0.0; 1 << cfg.n_qubits];
    let mut rhos = Vec::new();
    let mut drift = 0.0f64;

    for (n, weight) in components {
        // higher thermal components start further up the ladder
        let space = HilbertSpace::new(cfg.n_qubits, cfg.n_max.max(n + 3))?;
        let prep = prepare_from(cfg, space, n)?;
        let drive = cfg.drive_in(space)?;
        let dt = cfg.dt.unwrap_or_else(|| default_dt(&drive));
        let evo = evolve(&drive, &prep.state, dt, 0)?;
        let psi = &evo.final_state;
        fidelity += weight * dicke_population(psi, 1)?;
        for (acc, p) in spin_pops.iter_mut().zip(psi.spin_populations()) {
            *acc += weight * p;
        }
        if cfg.n_qubits == 2 {
            rhos.push((weight, trace_out_motion(psi)?));
        }
        drift = drift.max(evo.norm_drift).max(prep.norm_drift);
        if first.is_none() {
            first = Some((evo, prep));
        }
    }
    let rho = match rhos.len() {
        0 => None,
        1 => Some(rhos.pop().expect("one component").1),
        _ => Some(InternalDensityMatrix::mixture(&rhos)?),
    };
    if let Some(r) = &rho {
        fidelity = fidelity_dicke(r);
    }
    let diabatic_bound = if cfg.n_qubits == 2 {
        Some(rap_bound(cfg)?)
    } else {
        None
    };
    let (evolution, prep) = first.expect("at least one thermal component");
    Ok(RapOutcome {
        evolution,
        prep,
        rho,
        fidelity,
        spin_populations: spin_pops,
        diabatic_bound,
        norm_drift: drift,
    })
}

/// Diabatic estimate between the `|↓↓,1⟩` and `|D,0⟩` branches of the
/// five-state model for the configured drive.
pub fn rap_bound(cfg: &ExperimentConfig) -> Result<DiabaticBound> {
    let frames = analyse(cfg, &[cfg.compensation])?;
    let frame = &frames[0];
    let (i, j) = rap_pair(frame)?;
    diabatic_bound(frame, i, j)
}

fn rap_pair(frame: &AdiabaticFrame) -> Result<(usize, usize)> {
    let find = |k: usize| {
        frame.branch_by_label(FIVE_STATE_LABELS[k]).ok_or_else(|| {
            Error::InvalidArgument(format!("no branch starts in {}", FIVE_STATE_LABELS[k]))
        })
    };
    Ok((find(FIVE_DD1)?, find(FIVE_D0)?))
}

/// Five-state frames for each compensation mode on one shared grid,
/// refining the grid for all of them when any fails continuity.
fn analyse(cfg: &ExperimentConfig, modes: &[CompensationMode]) -> Result<Vec<AdiabaticFrame>> {
    let space = HilbertSpace::new(2, cfg.n_max)?;
    let models = modes
        .iter()
        .map(|&m| build_five_state(&cfg.drive_in(space)?.with_compensation(m)?))
        .collect::<Result<Vec<_>>>()?;
    let duration = cfg.pulse.duration();
    let mut points = cfg.analysis_points;
    let mut attempt = 0;
    loop {
        let grid = uniform_grid(0.0, duration, points);
        let frames: Result<Vec<_>> = models
            .iter()
            .map(|m| adiabatic_spectrum(m, &grid))
            .collect();
        match frames {
            Err(Error::Continuity { .. }) if attempt < MAX_REFINEMENTS => {
                attempt += 1;
                points = 2 * points - 1;
            }
            other => return other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Pulse width 2σ (s).
    Width,
    /// Peak carrier Rabi frequency (rad/s).
    Peak,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Width => "width",
            SweepAxis::Peak => "peak",
        }
    }

    /// Current value of this axis in `cfg`.
    pub fn value(&self, cfg: &ExperimentConfig) -> f64 {
        match self {
            SweepAxis::Width => cfg.pulse.width(),
            SweepAxis::Peak => cfg.pulse.omega_peak,
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "width" => Ok(SweepAxis::Width),
            "peak" => Ok(SweepAxis::Peak),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep axis '{other}' (expected width or peak)"
            ))),
        }
    }
}

/// `points` values log-spaced over one decade centred on the configured
/// value of `axis`.
pub fn default_sweep_values(cfg: &ExperimentConfig, axis: SweepAxis, points: usize) -> Vec<f64> {
    let centre = axis.value(cfg);
    if points == 1 {
        return vec![centre];
    }
    (0..points)
        .map(|k| centre * 10f64.powf(-0.5 + k as f64 / (points - 1) as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: f64,
    pub fidelity: f64,
    pub diag_sum: f64,
    pub offdiag: f64,
    pub diabatic_bound: f64,
    /// Set when this point failed; the numeric fields are then NaN.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// Points in ascending axis order.
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn is_partial(&self) -> bool {
        self.points.iter().any(|p| p.error.is_some())
    }
}

/// Independent [`run_rap`] per value (two ions), evaluated in parallel.
/// Failed points are recorded and the sweep continues.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    cfg.validate()?;
    if cfg.n_qubits != 2 {
        return Err(Error::InvalidArgument("sweeps report two-ion density matrices".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument(format!("sweep values must be positive, got {v}")));
    }
    let mut points: Vec<SweepPoint> = values
        .par_iter()
        .map(|&value| {
            let run = cfg.with_axis(axis, value).and_then(|c| run_rap(&c));
            match run {
                Ok(out) => SweepPoint {
                    value,
                    fidelity: out.fidelity,
                    diag_sum: out.diag_sum().unwrap_or(f64::NAN),
                    offdiag: out.offdiag().unwrap_or(f64::NAN),
                    diabatic_bound: out.diabatic_bound.map_or(f64::NAN, |b| b.value),
                    error: None,
                },
                Err(e) => SweepPoint {
                    value,
                    fidelity: f64::NAN,
                    diag_sum: f64::NAN,
                    offdiag: f64::NAN,
                    diabatic_bound: f64::NAN,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    points.sort_by(|a, b| a.value.total_cmp(&b.value));
    Ok(SweepResult { axis, points })
}

/// One analysis variant of the potentials report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialsVariant {
    pub compensation: CompensationMode,
    /// `eps[k][b]`: energy of branch `b` at `times[k]` (rad/s), branches in
    /// the order of [`FIVE_STATE_LABELS`] at the start of the pulse.
    pub eps: Vec<[f64; 5]>,
    /// `|α/ω|²` of the RAP pair.
    pub alpha_over_omega_sq: Vec<f64>,
    /// Times of local minima of the smoothed RAP-pair gap.
    pub gap_minima: Vec<f64>,
    /// Times of local maxima of the smoothed `|α/ω|²`.
    pub ratio_maxima: Vec<f64>,
    pub bound: DiabaticBound,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialsReport {
    pub times: Vec<f64>,
    /// Uncompensated and ideally compensated variants, in that order.
    pub variants: Vec<PotentialsVariant>,
}

/// Adiabatic energies of the five-state model with and without the
/// carrier couplings, on a shared grid of at least `points` points.
pub fn potentials_report(cfg: &ExperimentConfig, points: usize) -> Result<PotentialsReport> {
    if cfg.n_qubits != 2 {
        return Err(Error::InvalidArgument("potentials report needs two ions".into()));
    }
    let mut c = cfg.clone();
    c.analysis_points = points;
    c.validate()?;
    let modes = [CompensationMode::None, CompensationMode::ZeroCarrier];
    let frames = analyse(&c, &modes)?;
    let times = frames[0].times().to_vec();
    let half = SMOOTHING_WINDOW / 2;
    let at = |idx: Vec<usize>| -> Vec<f64> { idx.into_iter().map(|k| times[k + half]).collect() };

    let mut variants = Vec::new();
    for (mode, frame) in modes.iter().zip(&frames) {
        let order: Vec<usize> = FIVE_STATE_LABELS
            .iter()
            .map(|l| {
                frame
                    .branch_by_label(l)
                    .ok_or_else(|| Error::InvalidArgument(format!("no branch starts in {l}")))
            })
            .collect::<Result<_>>()?;
        let eps = (0..times.len())
            .map(|k| {
                let e = frame.energies_at(k);
                std::array::from_fn(|b| e[order[b]])
            })
            .collect();
        let (i, j) = (order[FIVE_DD1], order[FIVE_D0]);
        let gap: Vec<f64> = frame
            .energies(j)
            .iter()
            .zip(frame.energies(i))
            .map(|(a, b)| (a - b).abs())
            .collect();
        let ratio = adiabaticity_ratio(frame, i, j)?;
        variants.push(PotentialsVariant {
            compensation: *mode,
            eps,
            gap_minima: at(local_minima(&moving_average(&gap, SMOOTHING_WINDOW))),
            ratio_maxima: at(local_maxima(&moving_average(&ratio, SMOOTHING_WINDOW))),
            bound: diabatic_bound(frame, i, j)?,
            alpha_over_omega_sq: ratio,
        });
    }
    Ok(PotentialsReport { times, variants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Spin::Down;

    #[test]
    fn thermal_weights_normalize() {
        assert_eq!(thermal_weights(0.0), vec![(0, 1.0)]);
        let w = thermal_weights(0.06);
        let total: f64 = w.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((w[0].1 - 1.0 / 1.06).abs() < 1e-5);
        assert!(w.windows(2).all(|p| p[1].1 < p[0].1));
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::operating_point();
        assert!(c.validate().is_ok());
        c.nbar = -1.0;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::operating_point();
        c.prep = PrepMode::SimulatedPulses {
            weights: vec![1.0],
            offsets: vec![0.0, 0.0],
            omega: 1.0,
        };
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::operating_point();
        c.measurement.thresholds = (105, 35);
        assert!(c.validate().is_err());
    }

    #[test]
    fn ideal_prep_is_exact() {
        let cfg = ExperimentConfig::operating_point();
        let p = prepare_fock1(&cfg).unwrap();
        assert_eq!(p.fock1_population, 1.0);
        let target = embed(cfg.space().unwrap(), &[Down, Down], 1).unwrap();
        assert_eq!(p.state, target);
    }

    #[test]
    fn simulated_prep_with_and_without_crosstalk() {
        let mut cfg = ExperimentConfig::operating_point();
        cfg.prep = PrepMode::addressed(2);
        let p = prepare_fock1(&cfg).unwrap();
        assert!(p.fock1_population >= 0.999, "{}", p.fock1_population);

        cfg.prep = PrepMode::SimulatedPulses {
            weights: vec![1.0, 0.1],
            offsets: vec![0.0, 0.0],
            omega: angular(145e3),
        };
        let leaky = prepare_fock1(&cfg).unwrap();
        // the carrier stage alone rotates ion 1 by 0.1π
        let carrier_only = (0.1 * PI / 2.0).sin().powi(2);
        assert!(leaky.leakage() > 0.5 * carrier_only, "{}", leaky.leakage());
    }

    #[test]
    fn no_drive_no_transfer() {
        let mut cfg = ExperimentConfig::operating_point();
        cfg.pulse.omega_peak = 0.0;
        let evo_cfg = cfg.clone();
        let drive = evo_cfg.drive().unwrap();
        let psi0 = prepare_fock1(&evo_cfg).unwrap().state;
        let r = evolve(&drive, &psi0, 1e-8, 0).unwrap();
        assert!(dicke_population(&r.final_state, 1).unwrap() < 1e-20);
    }

    #[test]
    fn dicke_population_examples() {
        let sp = HilbertSpace::new(3, 2).unwrap();
        let w = make_dicke(3, 1).unwrap().with_motion(sp, 2).unwrap();
        assert!((dicke_population(&w, 1).unwrap() - 1.0).abs() < 1e-14);
        let g = embed(sp, &[Down; 3], 1).unwrap();
        assert_eq!(dicke_population(&g, 1).unwrap(), 0.0);
    }

    #[test]
    fn chirp_reversal_gives_the_same_fidelity() {
        let mut cfg = ExperimentConfig::operating_point();
        let f = run_rap(&cfg).unwrap().fidelity;
        cfg.pulse = cfg.pulse.reversed_chirp();
        let g = run_rap(&cfg).unwrap().fidelity;
        assert!((f - g).abs() < 1e-6, "{f} vs {g}");
    }

    #[test]
    fn sweep_identity_and_order() {
        let mut cfg = ExperimentConfig::operating_point();
        let w = cfg.pulse.width();
        let r = sweep(&cfg, SweepAxis::Width, &[1.2 * w, 0.8 * w]).unwrap();
        assert!(r.points[0].value < r.points[1].value);
        for p in &r.points {
            assert!((p.fidelity - (p.diag_sum / 2.0 + p.offdiag / 2.0)).abs() < 1e-12);
        }
        let single = sweep(&cfg, SweepAxis::Width, &[0.8 * w]).unwrap();
        assert_eq!(single.points[0], r.points[0]);
        let direct = run_rap(&cfg.with_axis(SweepAxis::Width, 0.8 * w).unwrap()).unwrap();
        assert_eq!(single.points[0].fidelity, direct.fidelity);
        assert!(sweep(&cfg, SweepAxis::Width, &[]).is_err());
        assert!(sweep(&cfg, SweepAxis::Peak, &[-1.0]).is_err());
    }

    #[test]
    fn sweep_records_failed_points() {
        let mut cfg = ExperimentConfig::operating_point();
        cfg.dt = Some(1e-6);
        let r = sweep(&cfg, SweepAxis::Peak, &[cfg.pulse.omega_peak]).unwrap();
        assert!(r.is_partial());
        assert!(r.points[0].fidelity.is_nan());
    }

    #[test]
    fn default_sweep_spans_one_decade() {
        let cfg = ExperimentConfig::operating_point();
        let v = default_sweep_values(&cfg, SweepAxis::Peak, 15);
        assert_eq!(v.len(), 15);
        assert!((v[14] / v[0] - 10.0).abs() < 1e-9);
        assert!((v[7] - cfg.pulse.omega_peak).abs() < 1e-6 * v[7]);
        assert!(v.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn sweep_axis_parsing() {
        assert_eq!("width".parse::<SweepAxis>().unwrap(), SweepAxis::Width);
        assert!("sigma".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn potentials_without_drive_are_bare() {
        let mut cfg = ExperimentConfig::potentials_default();
        cfg.pulse.omega_peak = 0.0;
        // zero drive crosses |↓↓,1⟩ and |D,0⟩ exactly at zero detuning;
        // the chirp here stays on one side
        cfg.pulse.chirp_start = angular(50e3);
        cfg.pulse.chirp_end = angular(150e3);
        let r = potentials_report(&cfg, 101).unwrap();
        for v in &r.variants {
            for (k, &t) in r.times.iter().enumerate() {
                let delta = -cfg.omega_v + crate::drive::detuning(&cfg.pulse, t);
                let bare = [0.0, cfg.omega_v, -delta, -delta + cfg.omega_v, -2.0 * delta];
                for b in 0..5 {
                    assert!((v.eps[k][b] - bare[b]).abs() < 1e-6);
                }
            }
            assert!(v.gap_minima.is_empty());
        }
    }
}
