//! Time evolution under a drive.
//!
//! Each step of length `dt` applies the exact exponential of the Hamiltonian
//! evaluated at the step midpoint, `U = exp(−i H(t + dt/2) dt)`. That is the
//! second-order Magnus integrator; it is unitary to machine precision, so
//! no renormalization is ever applied.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::drive::{DriveConfig, HamiltonianSource};
use crate::error::{Error, Result};
use crate::hilbert::{HilbertSpace, StateVector};
use crate::linalg;

/// Populations at `n = n_max` above this signal a too-small truncation.
pub const LEAKAGE_LIMIT: f64 = 1e-4;
/// `dt · max frequency` may not exceed this.
pub const STEP_GUARD: f64 = 0.05;

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub final_state: StateVector,
    /// `(t, ψ(t))` samples when requested.
    pub trajectory: Option<Vec<(f64, StateVector)>>,
    /// `max |1 − ‖ψ‖²|` over all steps.
    pub norm_drift: f64,
    pub steps: usize,
}

/// `min(0.01/Ω_peak, 0.01/ω_v)`, with `Ω_peak` scaled by the largest ion
/// weight.
pub fn default_dt(cfg: &DriveConfig) -> f64 {
    let w_max = cfg.ion_weights.iter().cloned().fold(0.0, f64::max);
    let omega = cfg.pulse.omega_peak * w_max;
    let mut dt = 0.01 / cfg.omega_v;
    if omega > 0.0 {
        dt = dt.min(0.01 / omega);
    }
    dt
}

fn check_step(cfg: &DriveConfig, dt: f64) -> Result<()> {
    let limit = STEP_GUARD / cfg.max_frequency();
    if !(dt > 0.0 && dt.is_finite()) || dt > limit {
        return Err(Error::StepSize { dt, limit });
    }
    Ok(())
}

/// Integrates `ψ` from `t0` to `t1` with steps no longer than `dt`,
/// calling `observer(step, t, ψ)` after every step. Returns the number of
/// steps taken.
pub fn integrate<S, F>(
    source: &S,
    psi: &mut DVector<C64>,
    t0: f64,
    t1: f64,
    dt: f64,
    mut observer: F,
) -> Result<usize>
where
    S: HamiltonianSource + ?Sized,
    F: FnMut(usize, f64, &DVector<C64>) -> Result<()>,
{
    if psi.len() != source.dim() {
        return Err(Error::SpaceMismatch);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let span = t1 - t0;
    if span < 0.0 {
        return Err(Error::InvalidArgument("integration interval is reversed".into()));
    }
    if span == 0.0 {
        return Ok(0);
    }
    // tolerate dt that divides the span up to rounding
    let steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    for k in 0..steps {
        let tm = t0 + (k as f64 + 0.5) * h;
        match source.real_matrix_at(tm) {
            Some(hr) => linalg::apply_exp_real(&hr, h, psi),
            None => linalg::apply_exp(&source.matrix_at(tm), h, psi),
        }
        observer(k + 1, t0 + (k + 1) as f64 * h, psi)?;
    }
    Ok(steps)
}

fn evolve_window(
    cfg: &DriveConfig,
    psi0: &StateVector,
    t_end: f64,
    dt: f64,
    sample_every: usize,
    t_offset: f64,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    if psi0.space() != cfg.space {
        return Err(Error::SpaceMismatch);
    }
    if !psi0.is_normalized() {
        return Err(Error::NotNormalized(psi0.norm_squared()));
    }
    check_step(cfg, dt)?;

    let space = cfg.space;
    let n_max = space.n_max();
    let mut psi = psi0.amplitudes().clone();
    let mut drift = (1.0 - psi.norm_squared()).abs();
    let mut trajectory = (sample_every > 0).then(|| vec![(t_offset, psi0.clone())]);
    let mut last_sampled = 0;

    let steps = integrate(cfg, &mut psi, 0.0, t_end, dt, |k, t, psi| {
        drift = drift.max((1.0 - psi.norm_squared()).abs());
        if n_max > 0 {
            let edge: f64 = (0..space.n_spin_words())
                .map(|w| psi[space.index_of(w, n_max)].norm_sqr())
                .sum();
            if edge > LEAKAGE_LIMIT {
                return Err(Error::Leakage {
                    population: edge,
                    n_max,
                });
            }
        }
        if let Some(traj) = trajectory.as_mut() {
            if k % sample_every == 0 {
                traj.push((t_offset + t, StateVector::scratch(space, psi.clone())?));
                last_sampled = k;
            }
        }
        Ok(())
    })?;

    let final_state = StateVector::from_amplitudes(space, psi)?;
    if let Some(traj) = trajectory.as_mut() {
        if last_sampled != steps {
            traj.push((t_offset + t_end, final_state.clone()));
        }
    }
    Ok(EvolutionResult {
        final_state,
        trajectory,
        norm_drift: drift,
        steps,
    })
}

/// Evolves `psi0` across the full pulse window `[0, duration]`.
///
/// `sample_every = 0` disables the trajectory; otherwise every
/// `sample_every`-th step (plus both endpoints) is recorded.
pub fn evolve(
    cfg: &DriveConfig,
    psi0: &StateVector,
    dt: f64,
    sample_every: usize,
) -> Result<EvolutionResult> {
    evolve_window(cfg, psi0, cfg.pulse.duration(), dt, sample_every, 0.0)
}

/// Applies `stages` in order; each stage runs its drive for the given
/// duration on its own clock starting at zero. Phases carry over between
/// stages.
pub fn propagate_sequence(
    stages: &[(DriveConfig, f64)],
    psi0: &StateVector,
    dt: f64,
) -> Result<EvolutionResult> {
    if stages.is_empty() {
        return Err(Error::InvalidArgument("pulse sequence is empty".into()));
    }
    let mut state = psi0.clone();
    let mut drift = 0.0f64;
    let mut steps = 0;
    for (cfg, duration) in stages {
        if !(*duration >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "stage duration must be non-negative, got {duration}"
            )));
        }
        let r = evolve_window(cfg, &state, *duration, dt, 0, 0.0)?;
        drift = drift.max(r.norm_drift);
        steps += r.steps;
        state = r.final_state;
    }
    Ok(EvolutionResult {
        final_state: state,
        trajectory: None,
        norm_drift: drift,
        steps,
    })
}

/// Reruns the evolution with `n_max + 2` and returns the squared overlap
/// of the two final states. Values below `1 − 1e-6` mean the truncation
/// is not converged.
pub fn truncation_overlap(cfg: &DriveConfig, psi0: &StateVector, dt: f64) -> Result<f64> {
    let small = cfg.space;
    let large = HilbertSpace::with_cap(small.n_qubits(), small.n_max() + 2, usize::MAX)?;
    let lift = |psi: &StateVector| -> Result<StateVector> {
        let mut amps = DVector::zeros(large.dim());
        for i in 0..small.dim() {
            amps[large.index_of(small.spin_word(i), small.fock(i))] = psi.amplitudes()[i];
        }
        StateVector::from_amplitudes(large, amps)
    };
    let mut big_cfg = cfg.clone();
    big_cfg.space = large;
    let a = evolve(cfg, psi0, dt, 0)?;
    let b = evolve(&big_cfg, &lift(psi0)?, dt, 0)?;
    lift(&a.final_state)?.overlap_squared(&b.final_state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::{angular, CompensationMode, PulseShape, Sideband, DEFAULT_OMEGA_V};
    use crate::hilbert::{build_space, embed, expectation, ops, Spin::*};
    use std::f64::consts::PI;

    fn rap_cfg(comp: CompensationMode) -> DriveConfig {
        DriveConfig::new(
            build_space(2, 5).unwrap(),
            0.082,
            DEFAULT_OMEGA_V,
            PulseShape::from_lab(145e3, 244e-6, 100e3).unwrap(),
        )
        .unwrap()
        .with_compensation(comp)
        .unwrap()
    }

    #[test]
    fn free_evolution_only_adds_phases() {
        let mut cfg = rap_cfg(CompensationMode::None);
        cfg.pulse.omega_peak = 0.0;
        let sp = cfg.space;
        let psi0 = embed(sp, &[Down, Down], 1).unwrap();
        let r = evolve(&cfg, &psi0, 0.05 / cfg.omega_v, 0).unwrap();
        // |↓↓,1⟩ has energy ω_v: phase −ω_v T
        let t = cfg.pulse.duration();
        let expect = C64::from_polar(1.0, -cfg.omega_v * t);
        let got = psi0.inner(&r.final_state).unwrap();
        assert!((got - expect).norm() < 1e-8, "{got} vs {expect}");
        assert!(r.norm_drift < 1e-12);
    }

    #[test]
    fn blue_sideband_rabi_flop() {
        // |↓,0⟩ ↔ |↑,1⟩ with coupling ηΩ/2: full transfer after π/(ηΩ)
        let sp = build_space(1, 3).unwrap();
        let eta = 0.08;
        let omega = angular(100e3);
        let t_pi = PI / (eta * omega);
        let cfg = DriveConfig::new(sp, eta, DEFAULT_OMEGA_V, PulseShape::square(omega, t_pi, 0.0).unwrap())
            .unwrap()
            .with_sideband(Sideband::Blue)
            .with_compensation(CompensationMode::ZeroCarrier)
            .unwrap();
        let psi0 = embed(sp, &[Down], 0).unwrap();
        let r = evolve(&cfg, &psi0, default_dt(&cfg), 0).unwrap();
        let target = embed(sp, &[Up], 1).unwrap();
        let p = target.overlap_squared(&r.final_state).unwrap();
        assert!((p - 1.0).abs() < 1e-9, "transfer {p}");

        // half-way the analytic population is sin²(π/4)
        let half = cfg.clone().with_pulse(PulseShape::square(omega, t_pi / 2.0, 0.0).unwrap()).unwrap();
        let r = evolve(&half, &psi0, default_dt(&half), 0).unwrap();
        let p = target.overlap_squared(&r.final_state).unwrap();
        assert!((p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn step_guard() {
        let cfg = rap_cfg(CompensationMode::ZeroCarrier);
        let psi0 = embed(cfg.space, &[Down, Down], 1).unwrap();
        let dt = 0.06 / cfg.omega_v;
        assert!(matches!(evolve(&cfg, &psi0, dt, 0), Err(Error::StepSize { .. })));
        assert!(matches!(evolve(&cfg, &psi0, -1.0, 0), Err(Error::StepSize { .. })));
    }

    #[test]
    fn truncation_leakage_detected() {
        // two quanta already at the edge of an n_max = 1 space
        let sp = build_space(1, 1).unwrap();
        let cfg = DriveConfig::new(sp, 0.08, DEFAULT_OMEGA_V, PulseShape::from_lab(100e3, 50e-6, 50e3).unwrap()).unwrap();
        let psi0 = embed(sp, &[Down], 1).unwrap();
        assert!(matches!(
            evolve(&cfg, &psi0, default_dt(&cfg), 0),
            Err(Error::Leakage { .. })
        ));
    }

    #[test]
    fn rejects_unnormalized_input() {
        let cfg = rap_cfg(CompensationMode::ZeroCarrier);
        let v = DVector::from_element(cfg.space.dim(), C64::new(1.0, 0.0));
        let psi = StateVector::scratch(cfg.space, v).unwrap();
        assert!(matches!(evolve(&cfg, &psi, 1e-9, 0), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn trajectory_sampling() {
        let sp = build_space(1, 2).unwrap();
        let cfg = DriveConfig::new(sp, 0.08, DEFAULT_OMEGA_V, PulseShape::square(angular(50e3), 1e-6, 0.0).unwrap())
            .unwrap()
            .with_sideband(Sideband::Carrier);
        let psi0 = embed(sp, &[Down], 0).unwrap();
        let r = evolve(&cfg, &psi0, 1e-9, 100).unwrap();
        let traj = r.trajectory.unwrap();
        assert_eq!(r.steps, 1000);
        assert_eq!(traj.len(), 11);
        assert_eq!(traj[0].0, 0.0);
        assert!((traj.last().unwrap().0 - 1e-6).abs() < 1e-18);
        assert!(traj.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn red_zero_carrier_conserves_excitations_along_trajectory() {
        let cfg = rap_cfg(CompensationMode::ZeroCarrier);
        let sp = cfg.space;
        let ne = ops::excitation_number(sp);
        let psi0 = embed(sp, &[Down, Down], 1).unwrap();
        let r = evolve(&cfg, &psi0, 0.05 / cfg.omega_v, 500).unwrap();
        for (_, psi) in r.trajectory.unwrap() {
            assert!((expectation(&ne, &psi).unwrap() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn sequence_of_free_stages_is_a_phase() {
        let mut cfg = rap_cfg(CompensationMode::None);
        cfg.pulse.omega_peak = 0.0;
        let psi0 = embed(cfg.space, &[Down, Up], 2).unwrap();
        let r = propagate_sequence(&[(cfg.clone(), 3e-6), (cfg.clone(), 2e-6)], &psi0, 1e-9).unwrap();
        assert!((psi0.overlap_squared(&r.final_state).unwrap() - 1.0).abs() < 1e-12);
        assert!(propagate_sequence(&[], &psi0, 1e-9).is_err());
    }

    #[test]
    fn prep_sequence_creates_fock_one() {
        // BSB π on ion 0 then carrier π on ion 0: |↓↓,0⟩ → |↑↓,1⟩ → |↓↓,1⟩
        let sp = build_space(2, 5).unwrap();
        let eta = 0.082;
        let omega = angular(145e3);
        let bsb = DriveConfig::new(sp, eta, DEFAULT_OMEGA_V, PulseShape::square(omega, PI / (eta * omega), 0.0).unwrap())
            .unwrap()
            .with_weights(vec![1.0, 0.0])
            .unwrap()
            .with_sideband(Sideband::Blue)
            .with_compensation(CompensationMode::ZeroCarrier)
            .unwrap();
        let car = bsb
            .clone()
            .with_pulse(PulseShape::square(omega, PI / omega, 0.0).unwrap())
            .unwrap()
            .with_sideband(Sideband::Carrier);
        let stages = [
            (bsb.clone(), bsb.pulse.duration()),
            (car.clone(), car.pulse.duration()),
        ];
        let psi0 = embed(sp, &[Down, Down], 0).unwrap();
        let dt = default_dt(&bsb);
        let mid = propagate_sequence(&stages[..1], &psi0, dt).unwrap();
        let p_mid = embed(sp, &[Up, Down], 1).unwrap().overlap_squared(&mid.final_state).unwrap();
        assert!((p_mid - 1.0).abs() < 1e-3);
        let r = propagate_sequence(&stages, &psi0, dt).unwrap();
        let p = embed(sp, &[Down, Down], 1).unwrap().overlap_squared(&r.final_state).unwrap();
        assert!((p - 1.0).abs() < 1e-3, "prep population {p}");
    }

    #[test]
    fn truncation_is_converged_for_rap() {
        let cfg = rap_cfg(CompensationMode::ZeroCarrier);
        let psi0 = embed(cfg.space, &[Down, Down], 1).unwrap();
        let ov = truncation_overlap(&cfg, &psi0, 0.05 / cfg.omega_v).unwrap();
        assert!(ov >= 1.0 - 1e-6, "overlap {ov}");
    }
}
