//! Laser drive model: pulse envelopes, linear chirps and the rotating-frame
//! Lamb–Dicke Hamiltonian.
//!
//! Everything here works in `ħ = 1` units. Frequencies are angular (rad/s),
//! times are in seconds. Use [`angular`] to convert a lab frequency in Hz.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{HermitianOperator, HilbertSpace};

/// `2π f`.
pub fn angular(hz: f64) -> f64 {
    TAU * hz
}

/// Axial centre-of-mass secular frequency, 2π × 0.7 MHz.
pub const DEFAULT_OMEGA_V: f64 = TAU * 0.7e6;
/// Compensator power relative to the main beam.
pub const DEFAULT_COMP_POWER_RATIO: f64 = 0.60;
/// Compensator detuning magnitude, 2π × 400 kHz.
pub const DEFAULT_COMP_DETUNING: f64 = TAU * 400e3;

/// Time dependence of the Rabi frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeKind {
    /// Gaussian centred in the window, truncated at its edges.
    Gaussian,
    /// Constant amplitude over the window.
    Square,
}

/// Envelope and chirp of one optical pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    /// Peak carrier Rabi frequency (rad/s).
    pub omega_peak: f64,
    /// Gaussian width parameter σ (s).
    pub sigma: f64,
    /// Window length in units of the pulse width 2σ.
    pub duration_factor: f64,
    /// Detuning from the sideband resonance at the start of the window (rad/s).
    pub chirp_start: f64,
    /// Detuning at the end of the window (rad/s).
    pub chirp_end: f64,
    pub kind: EnvelopeKind,
}

impl PulseShape {
    pub const DEFAULT_DURATION_FACTOR: f64 = 2.36;

    pub fn gaussian(omega_peak: f64, sigma: f64, chirp_start: f64, chirp_end: f64) -> Result<Self> {
        let p = Self {
            omega_peak,
            sigma,
            duration_factor: Self::DEFAULT_DURATION_FACTOR,
            chirp_start,
            chirp_end,
            kind: EnvelopeKind::Gaussian,
        };
        p.validate()?;
        Ok(p)
    }

    /// Gaussian pulse from lab quantities: peak Rabi frequency in Hz, pulse
    /// width 2σ in seconds and a symmetric chirp swept from `-chirp_hz` to
    /// `+chirp_hz`.
    pub fn from_lab(omega_peak_hz: f64, two_sigma: f64, chirp_hz: f64) -> Result<Self> {
        Self::gaussian(
            angular(omega_peak_hz),
            two_sigma / 2.0,
            -angular(chirp_hz),
            angular(chirp_hz),
        )
    }

    /// Constant-amplitude pulse of length `duration` at fixed detuning.
    pub fn square(omega: f64, duration: f64, detuning: f64) -> Result<Self> {
        let p = Self {
            omega_peak: omega,
            sigma: duration / 2.0,
            duration_factor: 1.0,
            chirp_start: detuning,
            chirp_end: detuning,
            kind: EnvelopeKind::Square,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega_peak,
            self.sigma,
            self.duration_factor,
            self.chirp_start,
            self.chirp_end,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidArgument("pulse parameters must be finite".into()));
        }
        // omega_peak == 0 is allowed: it is the free-evolution limit.
        if self.omega_peak < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "omega_peak must be non-negative, got {}",
                self.omega_peak
            )));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.duration_factor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "duration_factor must be positive, got {}",
                self.duration_factor
            )));
        }
        Ok(())
    }

    /// Pulse width 2σ.
    pub fn width(&self) -> f64 {
        2.0 * self.sigma
    }

    pub fn duration(&self) -> f64 {
        self.duration_factor * self.width()
    }

    pub fn center(&self) -> f64 {
        0.5 * self.duration()
    }

    pub fn with_width(mut self, two_sigma: f64) -> Result<Self> {
        self.sigma = two_sigma / 2.0;
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega_peak(mut self, omega_peak: f64) -> Result<Self> {
        self.omega_peak = omega_peak;
        self.validate()?;
        Ok(self)
    }

    /// Same pulse with the chirp direction reversed.
    pub fn reversed_chirp(mut self) -> Self {
        std::mem::swap(&mut self.chirp_start, &mut self.chirp_end);
        self
    }
}

/// Rabi frequency `Ω(t)`; zero outside `[0, duration]`.
pub fn envelope(pulse: &PulseShape, t: f64) -> f64 {
    let duration = pulse.duration();
    if !(0.0..=duration).contains(&t) {
        return 0.0;
    }
    match pulse.kind {
        EnvelopeKind::Square => pulse.omega_peak,
        EnvelopeKind::Gaussian => {
            let x = t - pulse.center();
            pulse.omega_peak * (-x * x / (2.0 * pulse.sigma * pulse.sigma)).exp()
        }
    }
}

/// Linear chirp from `chirp_start` to `chirp_end`; `t` is clamped to the
/// pulse window.
pub fn detuning(pulse: &PulseShape, t: f64) -> f64 {
    let duration = pulse.duration();
    let s = (t / duration).clamp(0.0, 1.0);
    pulse.chirp_start + (pulse.chirp_end - pulse.chirp_start) * s
}

/// Which transition the laser is tuned to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sideband {
    /// `ω_L ≈ ω_0 − ω_v`: couples through `σ₊a + h.c.`.
    Red,
    /// `ω_L ≈ ω_0 + ω_v`: couples through `σ₊a† + h.c.`.
    Blue,
    /// `ω_L ≈ ω_0`: `σ_x` only.
    Carrier,
}

/// Treatment of the off-resonant carrier coupling during sideband pulses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CompensationMode {
    /// Full Hamiltonian, carrier AC Stark shift uncompensated.
    None,
    /// Carrier matrix elements removed (ideal compensation).
    ZeroCarrier,
    /// A second tone of relative power `power_ratio`, detuned by
    /// `comp_detuning` on the opposite side of the carrier, modelled as the
    /// diagonal differential light shift it produces.
    Effective { power_ratio: f64, comp_detuning: f64 },
}

impl CompensationMode {
    /// Compensator at 60 % power and 2π × 400 kHz detuning.
    pub fn effective_default() -> Self {
        CompensationMode::Effective {
            power_ratio: DEFAULT_COMP_POWER_RATIO,
            comp_detuning: DEFAULT_COMP_DETUNING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CompensationMode::Effective {
            power_ratio,
            comp_detuning,
        } = *self
        {
            if !(power_ratio > 0.0 && power_ratio <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "compensator power_ratio must lie in (0, 1], got {power_ratio}"
                )));
            }
            if comp_detuning == 0.0 || !comp_detuning.is_finite() {
                return Err(Error::InvalidArgument(
                    "compensator detuning must be finite and non-zero".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &'static str {
        match self {
            CompensationMode::None => "none",
            CompensationMode::ZeroCarrier => "zero_carrier",
            CompensationMode::Effective { .. } => "effective",
        }
    }
}

/// Complete description of one drive acting on a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct DriveConfig {
    pub space: HilbertSpace,
    /// Lamb–Dicke parameter of the axial COM mode.
    pub eta: f64,
    /// Secular frequency ω_v (rad/s).
    pub omega_v: f64,
    pub pulse: PulseShape,
    /// Per-ion Rabi amplitude factors in `[0, 1]`.
    pub ion_weights: Vec<f64>,
    /// Static per-ion transition shifts added to the detuning (rad/s).
    pub ion_detuning_offsets: Vec<f64>,
    pub sideband: Sideband,
    pub compensation: CompensationMode,
}

impl DriveConfig {
    /// Red-sideband drive with uniform illumination and no compensation.
    pub fn new(space: HilbertSpace, eta: f64, omega_v: f64, pulse: PulseShape) -> Result<Self> {
        let n = space.n_qubits();
        let cfg = Self {
            space,
            eta,
            omega_v,
            pulse,
            ion_weights: vec![1.0; n],
            ion_detuning_offsets: vec![0.0; n],
            sideband: Sideband::Red,
            compensation: CompensationMode::None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.ion_weights = weights;
        self.validate()?;
        Ok(self)
    }

    pub fn with_offsets(mut self, offsets: Vec<f64>) -> Result<Self> {
        self.ion_detuning_offsets = offsets;
        self.validate()?;
        Ok(self)
    }

    pub fn with_sideband(mut self, sideband: Sideband) -> Self {
        self.sideband = sideband;
        self
    }

    pub fn with_compensation(mut self, compensation: CompensationMode) -> Result<Self> {
        self.compensation = compensation;
        self.validate()?;
        Ok(self)
    }

    pub fn with_pulse(mut self, pulse: PulseShape) -> Result<Self> {
        self.pulse = pulse;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        self.compensation.validate()?;
        if !(self.eta > 0.0 && self.eta < 0.3) {
            return Err(Error::InvalidArgument(format!(
                "eta = {} is outside the Lamb-Dicke regime (0, 0.3)",
                self.eta
            )));
        }
        if !(self.omega_v > 0.0 && self.omega_v.is_finite()) {
            return Err(Error::InvalidArgument("omega_v must be positive".into()));
        }
        let n = self.space.n_qubits();
        if self.ion_weights.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} ion weights, got {}",
                self.ion_weights.len()
            )));
        }
        if let Some(w) = self.ion_weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::InvalidArgument(format!(
                "ion weight {w} outside [0, 1]"
            )));
        }
        if self.ion_detuning_offsets.len() != n {
            return Err(Error::InvalidArgument(format!(
                "expected {n} detuning offsets, got {}",
                self.ion_detuning_offsets.len()
            )));
        }
        if self.ion_detuning_offsets.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("detuning offsets must be finite".into()));
        }
        Ok(())
    }

    /// Detuning of the laser from the bare carrier that puts it on the
    /// selected sideband.
    pub fn sideband_reference(&self) -> f64 {
        match self.sideband {
            Sideband::Red => -self.omega_v,
            Sideband::Blue => self.omega_v,
            Sideband::Carrier => 0.0,
        }
    }

    /// Whether the `σ_x` carrier term is part of the Hamiltonian.
    pub fn carrier_enabled(&self) -> bool {
        match self.sideband {
            Sideband::Carrier => true,
            _ => self.compensation != CompensationMode::ZeroCarrier,
        }
    }

    /// Largest angular frequency in the problem; bounds the time step.
    pub fn max_frequency(&self) -> f64 {
        let w_max = self.ion_weights.iter().cloned().fold(0.0, f64::max);
        let offsets = self
            .ion_detuning_offsets
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        [
            self.pulse.omega_peak * w_max,
            self.omega_v,
            self.pulse.chirp_start.abs() + offsets,
            self.pulse.chirp_end.abs() + offsets,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Diagonal light shift applied to `|↑⟩_j` by the compensator, for a
    /// main-beam Rabi frequency `omega_j` on that ion.
    ///
    /// The main beam, detuned by `δ` from the carrier, shifts `|↑⟩` relative
    /// to `|↓⟩` by `−Ω²/(2δ)`. The compensator sits on the opposite side of
    /// the carrier with `Ω_c² = p Ω²`, so its shift has the opposite sign and
    /// magnitude `p Ω²/(2 Δ_c)`.
    pub fn compensator_shift(&self, omega_j: f64) -> f64 {
        match self.compensation {
            CompensationMode::Effective {
                power_ratio,
                comp_detuning,
            } if self.sideband != Sideband::Carrier => {
                self.sideband_reference().signum() * power_ratio * omega_j * omega_j
                    / (2.0 * comp_detuning.abs())
            }
            _ => 0.0,
        }
    }

    /// Real symmetric Hamiltonian matrix at time `t` (rad/s).
    pub fn real_hamiltonian(&self, t: f64) -> DMatrix<f64> {
        let sp = self.space;
        let dim = sp.dim();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        self.fill_hamiltonian(t, &mut h);
        h
    }

    /// Writes `H(t)` into `h`, which must be `dim × dim`.
    pub fn fill_hamiltonian(&self, t: f64, h: &mut DMatrix<f64>) {
        let sp = self.space;
        let n_ions = sp.n_qubits();
        h.fill(0.0);

        let omega = envelope(&self.pulse, t);
        let delta = self.sideband_reference() + detuning(&self.pulse, t);
        let carrier = self.carrier_enabled();

        for ion in 0..n_ions {
            let mask = sp.ion_mask(ion);
            let omega_j = self.ion_weights[ion] * omega;
            // energy of |↑⟩_j in the laser frame
            let up_energy = -(delta + self.ion_detuning_offsets[ion]) + self.compensator_shift(omega_j);
            let half = 0.5 * omega_j;
            let half_sb = 0.5 * self.eta * omega_j;

            for word in 0..sp.n_spin_words() {
                if word & mask != 0 {
                    for n in 0..sp.n_levels() {
                        let i = sp.index_of(word, n);
                        h[(i, i)] += up_energy;
                    }
                    continue;
                }
                let up = word | mask;
                for n in 0..sp.n_levels() {
                    let i = sp.index_of(word, n);
                    if carrier && half != 0.0 {
                        let j = sp.index_of(up, n);
                        h[(i, j)] += half;
                        h[(j, i)] += half;
                    }
                    let target = match self.sideband {
                        Sideband::Red if n >= 1 => Some((n - 1, (n as f64).sqrt())),
                        Sideband::Blue if n < sp.n_max() => Some((n + 1, ((n + 1) as f64).sqrt())),
                        _ => None,
                    };
                    if let Some((m, root)) = target {
                        let j = sp.index_of(up, m);
                        let v = half_sb * root;
                        h[(i, j)] += v;
                        h[(j, i)] += v;
                    }
                }
            }
        }
        for i in 0..sp.dim() {
            h[(i, i)] += self.omega_v * sp.fock(i) as f64;
        }
    }
}

/// Rotating-frame Hamiltonian
///
/// ```text
/// H(t) = −Σ_j δ_j(t) |↑⟩_j⟨↑|_j + ω_v a†a
///        + Σ_j [ Ω_j(t)/2 σ_{x,j} + η Ω_j(t)/2 (σ_{+,j} a + h.c.) ]
/// ```
///
/// with `Ω_j = w_j Ω(t)` and `δ_j` the laser detuning from the carrier
/// including the per-ion offset. The sideband coupling is `σ₊a` for the red
/// sideband and `σ₊a†` for the blue one. `ZeroCarrier` drops the `σ_x` terms
/// of sideband pulses and `Effective` adds the compensator light shift.
pub fn hamiltonian_at(cfg: &DriveConfig, t: f64) -> HermitianOperator {
    let m = cfg.real_hamiltonian(t).map(|x| C64::new(x, 0.0));
    HermitianOperator::new(cfg.space, m).expect("drive Hamiltonian is symmetric by construction")
}

/// Lamb–Dicke parameter of the axial COM mode of `n_ions` ions,
/// `η = k cos θ √(ħ / (2 N m ω_v))`.
pub fn derive_eta(
    wavelength: f64,
    mass_amu: f64,
    omega_v: f64,
    n_ions: usize,
    beam_angle: f64,
) -> f64 {
    const HBAR: f64 = 1.054_571_817e-34;
    const AMU: f64 = 1.660_539_066_60e-27;
    let k = 2.0 * PI / wavelength;
    let mass = mass_amu * AMU;
    let x0 = (HBAR / (2.0 * n_ions as f64 * mass * omega_v)).sqrt();
    // cos(π/2) leaves a 1e-17 residue; projections that small are zero
    let proj = beam_angle.cos();
    let proj = if proj.abs() < 1e-12 { 0.0 } else { proj };
    k * proj * x0
}

/// A time-dependent Hermitian matrix, the common input of the propagator and
/// the adiabatic analysis.
pub trait HamiltonianSource {
    fn dim(&self) -> usize;

    fn matrix_at(&self, t: f64) -> DMatrix<C64>;

    /// Real form of [`HamiltonianSource::matrix_at`] when the Hamiltonian has
    /// no imaginary entries; enables the faster real-symmetric eigensolver.
    fn real_matrix_at(&self, _t: f64) -> Option<DMatrix<f64>> {
        None
    }

    fn basis_label(&self, index: usize) -> String {
        format!("#{index}")
    }
}

impl HamiltonianSource for DriveConfig {
    fn dim(&self) -> usize {
        self.space.dim()
    }

    fn matrix_at(&self, t: f64) -> DMatrix<C64> {
        hamiltonian_at(self, t).into_matrix()
    }

    fn real_matrix_at(&self, t: f64) -> Option<DMatrix<f64>> {
        Some(self.real_hamiltonian(t))
    }

    fn basis_label(&self, index: usize) -> String {
        self.space.basis_state(index).to_string()
    }
}

/// Hamiltonian given by a closure, mostly useful for tests and model
/// problems.
pub struct FnSource<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64) -> DMatrix<C64>> FnSource<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64) -> DMatrix<C64>> HamiltonianSource for FnSource<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn matrix_at(&self, t: f64) -> DMatrix<C64> {
        (self.f)(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_space, embed, hermiticity_defect, make_dicke, ops, Spin::*};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn operating_pulse() -> PulseShape {
        PulseShape::from_lab(145e3, 244e-6, 100e3).unwrap()
    }

    fn cfg(comp: CompensationMode) -> DriveConfig {
        DriveConfig::new(build_space(2, 5).unwrap(), 0.082, DEFAULT_OMEGA_V, operating_pulse())
            .unwrap()
            .with_compensation(comp)
            .unwrap()
    }

    fn comm_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a * b - b * a).norm()
    }

    #[test]
    fn envelope_values() {
        let p = operating_pulse();
        let c = p.center();
        assert_eq!(envelope(&p, c), p.omega_peak);
        let e = envelope(&p, c + p.sigma);
        assert!((e - p.omega_peak * (-0.5f64).exp()).abs() < 1e-9 * p.omega_peak);
        let e = envelope(&p, c - p.sigma);
        assert!((e - p.omega_peak * (-0.5f64).exp()).abs() < 1e-9 * p.omega_peak);
        assert!((p.duration() - 575.84e-6).abs() < 1e-12);
        assert_eq!(envelope(&p, -1e-9), 0.0);
        assert_eq!(envelope(&p, p.duration() + 1e-9), 0.0);
    }

    #[test]
    fn detuning_values() {
        let p = operating_pulse();
        assert_eq!(detuning(&p, 0.0), -angular(100e3));
        assert!(detuning(&p, p.center()).abs() < 1e-9);
        assert!((detuning(&p, p.duration()) - angular(100e3)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_pulses() {
        assert!(PulseShape::gaussian(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(PulseShape::gaussian(-1.0, 1.0, 0.0, 0.0).is_err());
        let mut p = operating_pulse();
        p.duration_factor = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_bad_drive() {
        let sp = build_space(2, 5).unwrap();
        assert!(DriveConfig::new(sp, 0.35, DEFAULT_OMEGA_V, operating_pulse()).is_err());
        let c = DriveConfig::new(sp, 0.08, DEFAULT_OMEGA_V, operating_pulse()).unwrap();
        assert!(c.clone().with_weights(vec![1.0]).is_err());
        assert!(c.clone().with_weights(vec![1.0, 1.2]).is_err());
        assert!(c
            .with_compensation(CompensationMode::Effective {
                power_ratio: 1.5,
                comp_detuning: 1.0
            })
            .is_err());
    }

    #[test]
    fn zero_drive_is_bare_diagonal() {
        let mut c = cfg(CompensationMode::None);
        c.pulse.omega_peak = 0.0;
        let t = 0.2e-3;
        let h = hamiltonian_at(&c, t);
        let delta = -c.omega_v + detuning(&c.pulse, t);
        for i in 0..c.space.dim() {
            for j in 0..c.space.dim() {
                let v = h.matrix()[(i, j)];
                if i == j {
                    let na = c.space.spin_word(i).count_ones() as f64;
                    let n = c.space.fock(i) as f64;
                    assert!((v.re - (-delta * na + c.omega_v * n)).abs() < 1e-6);
                } else {
                    assert_eq!(v.norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn dicke_sideband_element() {
        // ⟨↓↓,1|H|D,0⟩ at the pulse centre: the two ion terms add coherently
        let c = cfg(CompensationMode::ZeroCarrier);
        let h = hamiltonian_at(&c, c.pulse.center());
        let sp = c.space;
        let dd1 = embed(sp, &[Down, Down], 1).unwrap();
        let d0 = make_dicke(2, 1).unwrap().with_motion(sp, 0).unwrap();
        let el = dd1.inner(&h.apply(&d0).unwrap()).unwrap();
        let expect = 2f64.sqrt() * c.eta * c.pulse.omega_peak / 2.0;
        assert!((el.re - expect).abs() < 1e-9 * expect);
        assert_eq!(el.im, 0.0);
    }

    #[test]
    fn single_ion_red_sideband_element() {
        let sp = build_space(1, 4).unwrap();
        let c = DriveConfig::new(sp, 0.08, DEFAULT_OMEGA_V, operating_pulse()).unwrap();
        let t = 0.1e-3;
        let h = hamiltonian_at(&c, t);
        let up0 = sp.index_of(1, 0);
        let dn1 = sp.index_of(0, 1);
        let expect = c.eta * envelope(&c.pulse, t) / 2.0;
        assert!((h.matrix()[(up0, dn1)].re - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn blue_sideband_couples_up_the_ladder() {
        let sp = build_space(1, 4).unwrap();
        let c = DriveConfig::new(sp, 0.08, DEFAULT_OMEGA_V, operating_pulse())
            .unwrap()
            .with_sideband(Sideband::Blue)
            .with_compensation(CompensationMode::ZeroCarrier)
            .unwrap();
        let h = c.real_hamiltonian(c.pulse.center());
        let up1 = sp.index_of(1, 1);
        let dn0 = sp.index_of(0, 0);
        assert!((h[(up1, dn0)] - c.eta * c.pulse.omega_peak / 2.0).abs() < 1e-6);
        assert_eq!(h[(sp.index_of(1, 0), sp.index_of(0, 1))], 0.0);
    }

    #[test]
    fn hermitian_for_random_configs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let n = rng.random_range(1..=3);
            let sp = build_space(n, rng.random_range(0..4)).unwrap();
            let pulse = PulseShape::from_lab(
                rng.random_range(1e3..500e3),
                rng.random_range(10e-6..800e-6),
                rng.random_range(-300e3..300e3),
            )
            .unwrap();
            let comp = match rng.random_range(0..3) {
                0 => CompensationMode::None,
                1 => CompensationMode::ZeroCarrier,
                _ => CompensationMode::effective_default(),
            };
            let sb = [Sideband::Red, Sideband::Blue, Sideband::Carrier][rng.random_range(0..3)];
            let c = DriveConfig::new(sp, rng.random_range(0.01..0.29), DEFAULT_OMEGA_V, pulse)
                .unwrap()
                .with_weights((0..n).map(|_| rng.random_range(0.0..=1.0)).collect())
                .unwrap()
                .with_offsets((0..n).map(|_| rng.random_range(-1e6..1e6)).collect())
                .unwrap()
                .with_sideband(sb)
                .with_compensation(comp)
                .unwrap();
            let t = rng.random_range(0.0..pulse.duration());
            let h = hamiltonian_at(&c, t);
            assert!(hermiticity_defect(h.matrix()) < 1e-12);
        }
    }

    #[test]
    fn red_zero_carrier_conserves_excitations() {
        let c = cfg(CompensationMode::ZeroCarrier);
        let ne = ops::excitation_number(c.space);
        for t in [0.0, 1e-4, c.pulse.center(), 5e-4] {
            let h = hamiltonian_at(&c, t);
            assert!(comm_norm(h.matrix(), ne.matrix()) < 1e-12);
        }
        // the carrier breaks it
        let c = cfg(CompensationMode::None);
        let h = hamiltonian_at(&c, c.pulse.center());
        assert!(comm_norm(h.matrix(), ne.matrix()) > 1.0);
    }

    #[test]
    fn equal_illumination_is_swap_symmetric() {
        for comp in [
            CompensationMode::None,
            CompensationMode::ZeroCarrier,
            CompensationMode::effective_default(),
        ] {
            let c = cfg(comp);
            let swap = ops::ion_swap(c.space, 0, 1);
            let h = hamiltonian_at(&c, 0.17e-3);
            // matrix entries are O(1e7); compare relative to that scale
            assert!(comm_norm(h.matrix(), swap.matrix()) < 1e-12 * h.matrix().norm());
        }
        let c = cfg(CompensationMode::None).with_weights(vec![1.0, 0.8]).unwrap();
        let swap = ops::ion_swap(c.space, 0, 1);
        let h = hamiltonian_at(&c, 0.17e-3);
        assert!(comm_norm(h.matrix(), swap.matrix()) > 1.0);
    }

    #[test]
    fn compensator_opposes_carrier_shift() {
        // red sideband: carrier pushes |↑⟩ up by Ω²/(2ω_v); compensator pulls it down
        let c = cfg(CompensationMode::effective_default());
        let omega = angular(145e3);
        let s = c.compensator_shift(omega);
        assert!(s < 0.0);
        let expect = 0.6 * omega * omega / (2.0 * DEFAULT_COMP_DETUNING);
        assert!((s.abs() - expect).abs() < 1e-9 * expect);
        let blue = c.clone().with_sideband(Sideband::Blue);
        assert!(blue.compensator_shift(omega) > 0.0);
        assert_eq!(c.with_sideband(Sideband::Carrier).compensator_shift(omega), 0.0);
    }

    #[test]
    fn eta_from_trap_parameters() {
        // independent desk evaluation with CODATA constants:
        // k = 2π/729e-9 = 8.6188e6 1/m, m = 40 u = 6.6422e-26 kg,
        // x0 = sqrt(1.05457e-34 / (2·2·6.6422e-26·4.3982e6)) = 9.5001e-9 m
        let eta = derive_eta(729e-9, 40.0, angular(0.7e6), 2, 0.0);
        assert!((eta - 0.08188).abs() < 2e-4, "eta = {eta}");
        assert_eq!(derive_eta(729e-9, 40.0, angular(0.7e6), 2, PI / 2.0), 0.0);
        let doubled = derive_eta(729e-9, 40.0, angular(1.4e6), 2, 0.0);
        assert!((doubled / eta - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
