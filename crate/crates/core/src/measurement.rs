//! Two-ion readout: reduced internal density matrix, Dicke fidelity,
//! parity after global π/2 analysis pulses, sinusoidal fits and simulated
//! fluorescence histograms.
//!
//! Internal states are ordered `|↓↓⟩, |↓↑⟩, |↑↓⟩, |↑↑⟩`, with the first
//! arrow for ion 0. `|↓⟩` is the fluorescing (bright) state.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, Vector4};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::StateVector;

const RHO_TOL: f64 = 1e-10;
/// Allowed disagreement between operator and closed-form parity.
pub const PARITY_CROSSCHECK_TOL: f64 = 1e-8;

/// Labels of the internal basis, in matrix order.
pub const INTERNAL_LABELS: [&str; 4] = ["↓↓", "↓↑", "↑↓", "↑↑"];

/// 4×4 density matrix of the two internal qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct InternalDensityMatrix {
    m: Matrix4<C64>,
}

impl InternalDensityMatrix {
    /// Checks Hermiticity, unit trace and positivity (all to 1e-10).
    pub fn new(m: Matrix4<C64>) -> Result<Self> {
        let herm = (m - m.adjoint()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        if herm > RHO_TOL {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (defect {herm:.3e})")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > RHO_TOL || tr.im.abs() > RHO_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
        let min = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -RHO_TOL {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { m })
    }

    /// `|ψ⟩⟨ψ|` for a normalized internal state.
    pub fn pure(psi: &Vector4<C64>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.m
    }

    pub fn element(&self, a: usize, b: usize) -> C64 {
        self.m[(a, b)]
    }

    /// Diagonal `(P_↓↓, P_↓↑, P_↑↓, P_↑↑)`.
    pub fn populations(&self) -> [f64; 4] {
        [self.m[(0, 0)].re, self.m[(1, 1)].re, self.m[(2, 2)].re, self.m[(3, 3)].re]
    }

    /// `ρ_↓↑,↓↑ + ρ_↑↓,↑↓`.
    pub fn diag_sum(&self) -> f64 {
        self.m[(1, 1)].re + self.m[(2, 2)].re
    }

    /// `2 Re ρ_↓↑,↑↓`.
    pub fn offdiag(&self) -> f64 {
        2.0 * self.m[(1, 2)].re
    }

    /// Populations grouped by fluorescence class `(P_↓↓, P_↓↑ + P_↑↓, P_↑↑)`.
    pub fn class_populations(&self) -> [f64; 3] {
        let p = self.populations();
        [p[0], p[1] + p[2], p[3]]
    }

    /// Probability-weighted average of several density matrices.
    pub fn mixture(parts: &[(f64, InternalDensityMatrix)]) -> Result<Self> {
        let mut m = Matrix4::<C64>::zeros();
        for (w, r) in parts {
            m += r.m * C64::new(*w, 0.0);
        }
        Self::new(m)
    }
}

/// Traces the motional mode out of a two-ion state.
pub fn trace_out_motion(psi: &StateVector) -> Result<InternalDensityMatrix> {
    let sp = psi.space();
    if sp.n_qubits() != 2 {
        return Err(Error::InvalidArgument(format!(
            "internal density matrix needs two ions, state has {}",
            sp.n_qubits()
        )));
    }
    let a = psi.amplitudes();
    let mut m = Matrix4::<C64>::zeros();
    for n in 0..sp.n_levels() {
        for x in 0..4 {
            let ax = a[sp.index_of(x, n)];
            for y in 0..4 {
                m[(x, y)] += ax * a[sp.index_of(y, n)].conj();
            }
        }
    }
    InternalDensityMatrix::new(m)
}

/// `⟨D|ρ|D⟩ = (ρ_↓↑,↓↑ + ρ_↑↓,↑↓)/2 + Re ρ_↓↑,↑↓`.
pub fn fidelity_dicke(rho: &InternalDensityMatrix) -> f64 {
    fidelity_from_parts(rho.diag_sum(), rho.offdiag())
}

/// Dicke fidelity from the measured population sum and parity offset.
pub fn fidelity_from_parts(diag_sum: f64, offdiag: f64) -> f64 {
    diag_sum / 2.0 + offdiag / 2.0
}

/// Two-qubit global π/2 rotation `exp[−i(π/4)(σ_φ⊗1 + 1⊗σ_φ)]`.
pub fn global_rotation(phi: f64) -> Matrix4<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (s, c) = phi.sin_cos();
    // cos(π/4)·1 − i sin(π/4)·(cosφ σx + sinφ σy), basis (↓, ↑)
    let off_01 = C64::new(0.0, -h) * C64::new(c, -s);
    let off_10 = C64::new(0.0, -h) * C64::new(c, s);
    let r = Matrix2::new(C64::new(h, 0.0), off_01, off_10, C64::new(h, 0.0));
    r.kronecker(&r)
}

/// `R(φ)† ρ R(φ)`.
pub fn rotate_global(rho: &InternalDensityMatrix, phi: f64) -> InternalDensityMatrix {
    let r = global_rotation(phi);
    InternalDensityMatrix {
        m: r.adjoint() * rho.m * r,
    }
}

/// `⟨Π⟩ = P_↓↓ + P_↑↑ − P_↓↑ − P_↑↓`.
pub fn parity(rho: &InternalDensityMatrix) -> f64 {
    let p = rho.populations();
    p[0] + p[3] - p[1] - p[2]
}

/// `Π(φ) = 2(Re ρ_↓↑,↑↓ − Re ρ_↓↓,↑↑ cos2φ + Im ρ_↓↓,↑↑ sin2φ)`.
pub fn closed_form_parity(rho: &InternalDensityMatrix, phi: f64) -> f64 {
    let c = rho.m[(0, 3)];
    2.0 * (rho.m[(1, 2)].re - c.re * (2.0 * phi).cos() + c.im * (2.0 * phi).sin())
}

/// `(φ, Π(φ))` by operator algebra, cross-checked against the closed form.
pub fn parity_curve(rho: &InternalDensityMatrix, phis: &[f64]) -> Result<Vec<(f64, f64)>> {
    if phis.is_empty() {
        return Err(Error::InvalidArgument("parity curve needs at least one phase".into()));
    }
    phis.iter()
        .map(|&phi| {
            let exact = parity(&rotate_global(rho, phi));
            let diff = (exact - closed_form_parity(rho, phi)).abs();
            if diff > PARITY_CROSSCHECK_TOL {
                return Err(Error::ParityMismatch(diff));
            }
            Ok((phi, exact))
        })
        .collect()
}

/// `a + b cos2φ + c sin2φ` least-squares fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParityFit {
    pub offset: f64,
    pub cos_amplitude: f64,
    pub sin_amplitude: f64,
    pub residual_rms: f64,
}

impl ParityFit {
    pub fn eval(&self, phi: f64) -> f64 {
        self.offset + self.cos_amplitude * (2.0 * phi).cos() + self.sin_amplitude * (2.0 * phi).sin()
    }
}

pub fn fit_parity(samples: &[(f64, f64)]) -> Result<ParityFit> {
    if samples.len() < 3 {
        return Err(Error::RankDeficient);
    }
    let n = samples.len();
    let a = DMatrix::from_fn(n, 3, |i, j| {
        let phi = samples[i].0;
        match j {
            0 => 1.0,
            1 => (2.0 * phi).cos(),
            _ => (2.0 * phi).sin(),
        }
    });
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax.max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient);
    }
    let x = svd.solve(&y, 0.0).map_err(|_| Error::RankDeficient)?;
    let r = &a * &x - &y;
    Ok(ParityFit {
        offset: x[0],
        cos_amplitude: x[1],
        sin_amplitude: x[2],
        residual_rms: (r.norm_squared() / n as f64).sqrt(),
    })
}

/// Photon-count statistics of the fluorescence readout.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReadoutModel {
    /// Mean counts per bright ion.
    pub bright_mean: f64,
    /// Mean background counts.
    pub background: f64,
}

impl Default for ReadoutModel {
    fn default() -> Self {
        Self {
            bright_mean: 70.0,
            background: 0.5,
        }
    }
}

/// Default discrimination thresholds `(low, high)`.
pub const DEFAULT_THRESHOLDS: (u32, u32) = (35, 105);

/// Per-shot photon counts.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    counts: Vec<u32>,
}

impl Histogram {
    pub fn from_counts(counts: Vec<u32>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn shots(&self) -> usize {
        self.counts.len()
    }

    /// `(count, occurrences)` for every count value from 0 to the maximum.
    pub fn frequencies(&self) -> Vec<(u32, usize)> {
        let max = self.counts.iter().copied().max().unwrap_or(0) as usize;
        let mut f = vec![0usize; max + 1];
        for &c in &self.counts {
            f[c as usize] += 1;
        }
        f.into_iter().enumerate().map(|(c, k)| (c as u32, k)).collect()
    }
}

/// Samples fluorescence counts for class populations `(P_↓↓, P_mid, P_↑↑)`.
pub fn simulate_histogram(
    populations: [f64; 3],
    shots: usize,
    seed: u64,
    model: ReadoutModel,
) -> Result<Histogram> {
    if let Some(p) = populations.iter().find(|p| **p < 0.0) {
        return Err(Error::NegativePopulation(*p));
    }
    let total: f64 = populations.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("populations sum to {total}, not 1")));
    }
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    if !(model.bright_mean >= 0.0 && model.background >= 0.0) {
        return Err(Error::InvalidArgument("readout means must be non-negative".into()));
    }
    let means = [
        model.background + 2.0 * model.bright_mean,
        model.background + model.bright_mean,
        model.background,
    ];
    let dists: Vec<Option<Poisson<f64>>> = means
        .iter()
        .map(|&m| (m > 0.0).then(|| Poisson::new(m).expect("positive mean")))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = (0..shots)
        .map(|_| {
            let r: f64 = rng.random();
            let class = if r < populations[0] {
                0
            } else if r < populations[0] + populations[1] {
                1
            } else {
                2
            };
            match &dists[class] {
                Some(d) => d.sample(&mut rng) as u32,
                None => 0,
            }
        })
        .collect();
    Ok(Histogram { counts })
}

/// Class fractions `(P_↓↓, P_mid, P_↑↑)`: `c ≤ low` is dark, `low < c ≤ high`
/// one bright ion, `c > high` both bright.
pub fn threshold_estimate(hist: &Histogram, thresholds: (u32, u32)) -> Result<[f64; 3]> {
    let (low, high) = thresholds;
    if low >= high {
        return Err(Error::InvalidArgument(format!("thresholds need low < high, got ({low}, {high})")));
    }
    if hist.counts.is_empty() {
        return Err(Error::EmptyHistogram);
    }
    let mut k = [0usize; 3];
    for &c in &hist.counts {
        let class = if c <= low {
            2
        } else if c <= high {
            1
        } else {
            0
        };
        k[class] += 1;
    }
    let n = hist.counts.len() as f64;
    Ok(k.map(|x| x as f64 / n))
}

/// Random full-rank density matrix `A A† / tr(A A†)` with Gaussian `A`.
pub fn random_density_matrix<R: Rng + ?Sized>(rng: &mut R) -> InternalDensityMatrix {
    let a = Matrix4::from_fn(|_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let w = a * a.adjoint();
    let tr = w.trace().re;
    let m = w / C64::new(tr, 0.0);
    let m = (m + m.adjoint()) * C64::new(0.5, 0.0);
    InternalDensityMatrix::new(m).expect("Wishart matrix is a valid state")
}
