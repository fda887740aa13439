//! Instantaneous eigen-analysis of a time-dependent Hamiltonian.
//!
//! [`adiabatic_spectrum`] diagonalizes `H(t)` on a time grid and follows each
//! eigenvector by maximum overlap, fixing its phase so that successive
//! overlaps are real and positive. On top of that frame sit the
//! nonadiabatic couplings `α_ji = ⟨j|d/dt|i⟩` and the diabatic-transition
//! estimate `p ≲ max |α_ji / ω_ji|²`.
//!
//! The module also holds the two-ion Morris–Shore basis change and the
//! five-state reduced model used for the AC-Stark analysis.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::drive::{detuning, envelope, DriveConfig, HamiltonianSource, Sideband};
use crate::error::{Error, Result};
use crate::hilbert::HilbertSpace;
use crate::linalg::{eigh, eigh_real};

/// Minimum `|⟨v_i(t_k)|v_i(t_{k+1})⟩|` accepted between grid points.
pub const CONTINUITY_THRESHOLD: f64 = 0.9;
/// Grid size used for pulse-window analyses.
pub const DEFAULT_GRID_POINTS: usize = 2001;
/// Number of automatic ×2 grid refinements on continuity failure.
pub const MAX_REFINEMENTS: usize = 3;

const DEGENERACY_TOL: f64 = 1e-12;
const NEAR_DEGENERACY_TOL: f64 = 1e-6;

/// Eigen-decomposition of `H(t)` on a grid, branch-tracked and gauge-fixed.
#[derive(Clone, Debug)]
pub struct AdiabaticFrame {
    times: Vec<f64>,
    /// `energies[k][i]` is ε_i(t_k).
    energies: Vec<Vec<f64>>,
    /// Column `i` of `vectors[k]` is |i(t_k)⟩.
    vectors: Vec<DMatrix<C64>>,
    labels: Vec<String>,
}

impl AdiabaticFrame {
    /// Builds a frame from raw per-time eigenpairs (any order, any phases).
    ///
    /// `label` names basis index `b`; each branch is labelled by the basis
    /// state it overlaps most at the first grid point.
    pub fn track(
        times: Vec<f64>,
        raw: Vec<(Vec<f64>, DMatrix<C64>)>,
        label: impl Fn(usize) -> String,
    ) -> Result<Self> {
        if times.len() < 3 {
            return Err(Error::InvalidArgument(
                "adiabatic analysis needs at least 3 grid points".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
        }
        if raw.len() != times.len() {
            return Err(Error::InvalidArgument("one eigen-decomposition per grid point required".into()));
        }
        for ((e, _), &t) in raw.iter().zip(&times) {
            check_degeneracy(e, t)?;
        }

        let mut it = raw.into_iter();
        let (e0, mut v0) = it.next().expect("non-empty");
        let n = e0.len();
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let (b, c) = v0
                .column(i)
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                .map(|(b, c)| (b, *c))
                .expect("non-empty eigenvector");
            labels.push(label(b));
            let fix = c.conj() / c.norm();
            for z in v0.column_mut(i).iter_mut() {
                *z *= fix;
            }
        }

        let mut energies = vec![e0];
        let mut vectors = vec![v0];
        for (k, (e, v)) in it.enumerate() {
            let prev = vectors.last().expect("non-empty");
            let overlaps = prev.adjoint() * &v;
            let assignment = greedy_assignment(&overlaps);
            let mut ek = vec![0.0; n];
            let mut vk = DMatrix::zeros(n, n);
            for (i, &j) in assignment.iter().enumerate() {
                let o = overlaps[(i, j)];
                if o.norm() <= CONTINUITY_THRESHOLD {
                    return Err(Error::Continuity {
                        time: times[k + 1],
                        overlap: o.norm(),
                    });
                }
                let fix = o.conj() / o.norm();
                ek[i] = e[j];
                for (dst, src) in vk.column_mut(i).iter_mut().zip(v.column(j).iter()) {
                    *dst = *src * fix;
                }
            }
            energies.push(ek);
            vectors.push(vk);
        }
        Ok(Self {
            times,
            energies,
            vectors,
            labels,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_branches(&self) -> usize {
        self.labels.len()
    }

    /// Bare-state label of each branch at the first grid point.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn branch_by_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// ε_i(t_k) for every grid point.
    pub fn energies(&self, branch: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[branch]).collect()
    }

    /// All branch energies at grid point `k`.
    pub fn energies_at(&self, k: usize) -> &[f64] {
        &self.energies[k]
    }

    /// Eigenvector matrix at grid point `k`, branches as columns.
    pub fn vectors_at(&self, k: usize) -> &DMatrix<C64> {
        &self.vectors[k]
    }
}

fn check_degeneracy(energies: &[f64], t: f64) -> Result<()> {
    let scale = energies.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let mut sorted = energies.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] <= DEGENERACY_TOL * scale) {
        return Err(Error::Degenerate { time: t });
    }
    Ok(())
}

/// Pairs previous branches (rows) with new eigenvectors (columns), taking
/// the largest remaining |overlap| first. Returns the column for each row.
fn greedy_assignment(overlaps: &DMatrix<C64>) -> Vec<usize> {
    let n = overlaps.nrows();
    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            cells.push((overlaps[(i, j)].norm(), i, j));
        }
    }
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut row_done = vec![false; n];
    let mut col_done = vec![false; n];
    let mut out = vec![usize::MAX; n];
    let mut left = n;
    for (_, i, j) in cells {
        if row_done[i] || col_done[j] {
            continue;
        }
        row_done[i] = true;
        col_done[j] = true;
        out[i] = j;
        left -= 1;
        if left == 0 {
            break;
        }
    }
    out
}

/// Diagonalizes `source` at each grid time and tracks the branches.
pub fn adiabatic_spectrum<S: HamiltonianSource + ?Sized>(
    source: &S,
    times: &[f64],
) -> Result<AdiabaticFrame> {
    let raw = times
        .iter()
        .map(|&t| match source.real_matrix_at(t) {
            Some(h) => eigh_real(&h),
            None => eigh(&source.matrix_at(t)),
        })
        .collect();
    AdiabaticFrame::track(times.to_vec(), raw, |b| source.basis_label(b))
}

/// `points` uniform grid points on `[t0, t1]`.
pub fn uniform_grid(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    let last = (points.max(2) - 1) as f64;
    (0..points.max(2))
        .map(|k| t0 + (t1 - t0) * k as f64 / last)
        .collect()
}

/// [`adiabatic_spectrum`] on a uniform grid that doubles its density (up to
/// [`MAX_REFINEMENTS`] times) while branch continuity fails.
pub fn adiabatic_spectrum_refined<S: HamiltonianSource + ?Sized>(
    source: &S,
    t0: f64,
    t1: f64,
    points: usize,
) -> Result<AdiabaticFrame> {
    let mut points = points;
    let mut attempt = 0;
    loop {
        match adiabatic_spectrum(source, &uniform_grid(t0, t1, points)) {
            Err(Error::Continuity { .. }) if attempt < MAX_REFINEMENTS => {
                attempt += 1;
                points = 2 * points - 1;
            }
            other => return other,
        }
    }
}

fn check_pair(frame: &AdiabaticFrame, i: usize, j: usize) -> Result<()> {
    let n = frame.n_branches();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!(
            "branch index out of range (frame has {n} branches)"
        )));
    }
    if i == j {
        return Err(Error::InvalidArgument("nonadiabatic coupling needs i != j".into()));
    }
    Ok(())
}

/// Complex `⟨j(t)|d/dt|i(t)⟩` by central differences, one-sided at the ends.
fn coupling_series(frame: &AdiabaticFrame, i: usize, j: usize) -> Vec<C64> {
    let t = &frame.times;
    let v = &frame.vectors;
    let last = t.len() - 1;
    (0..=last)
        .map(|k| {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == last => (last - 1, last),
                k => (k - 1, k + 1),
            };
            let h = t[b] - t[a];
            let bra = v[k].column(j);
            let d = (v[b].column(i) - v[a].column(i)) / C64::new(h, 0.0);
            bra.dotc(&d)
        })
        .collect()
}

/// Nonadiabatic coupling `α_ji(t) = ⟨j(t)|d/dt|i(t)⟩` on the frame grid.
///
/// The frame gauge makes the vectors of a real-symmetric Hamiltonian real,
/// so the returned real part is the whole coupling in that case.
pub fn nonadiabatic_coupling(frame: &AdiabaticFrame, i: usize, j: usize) -> Result<Vec<f64>> {
    check_pair(frame, i, j)?;
    Ok(coupling_series(frame, i, j).into_iter().map(|z| z.re).collect())
}

/// `|α_ji(t) / ω_ji(t)|²` on the frame grid, `ω_ji = ε_j − ε_i`.
pub fn adiabaticity_ratio(frame: &AdiabaticFrame, i: usize, j: usize) -> Result<Vec<f64>> {
    check_pair(frame, i, j)?;
    let alpha = coupling_series(frame, i, j);
    let omega: Vec<f64> = frame
        .energies
        .iter()
        .map(|e| e[j] - e[i])
        .collect();
    let w_max = omega.iter().fold(0.0f64, |a, w| a.max(w.abs()));
    if let Some(k) = omega
        .iter()
        .position(|w| w.abs() < NEAR_DEGENERACY_TOL * w_max)
    {
        return Err(Error::NearDegenerate {
            i,
            j,
            time: frame.times[k],
        });
    }
    Ok(alpha
        .iter()
        .zip(&omega)
        .map(|(a, w)| a.norm_sqr() / (w * w))
        .collect())
}

/// Upper estimate of the diabatic transition probability between two
/// branches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiabaticBound {
    /// `max_t |α_ji / ω_ji|²`.
    pub value: f64,
    /// Time of the maximum (s).
    pub time: f64,
}

pub fn diabatic_bound(frame: &AdiabaticFrame, i: usize, j: usize) -> Result<DiabaticBound> {
    let ratio = adiabaticity_ratio(frame, i, j)?;
    let (k, value) = ratio
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(DiabaticBound {
        value,
        time: frame.times[k],
    })
}

/// Centered moving average (valid part only): output `k` averages inputs
/// `k..k+window`.
pub fn moving_average(series: &[f64], window: usize) -> Vec<f64> {
    if window <= 1 {
        return series.to_vec();
    }
    series
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect()
}

/// Indices of interior local minima (strict on the left, non-strict on the
/// right so that flat bottoms count once).
pub fn local_minima(series: &[f64]) -> Vec<usize> {
    (1..series.len().saturating_sub(1))
        .filter(|&k| series[k] < series[k - 1] && series[k] <= series[k + 1])
        .collect()
}

/// Indices of interior local maxima, same convention as [`local_minima`].
pub fn local_maxima(series: &[f64]) -> Vec<usize> {
    (1..series.len().saturating_sub(1))
        .filter(|&k| series[k] > series[k - 1] && series[k] >= series[k + 1])
        .collect()
}

/// Two-ion Morris–Shore basis change on `{↓↓, ↓↑, ↑↓, ↑↑}`.
///
/// Rows are the new basis `{↓↓, D, A, ↑↑}` with `D = (↓↑ + ↑↓)/√2` and
/// `A = (↓↑ − ↑↓)/√2`. The matrix is real orthogonal and its own inverse.
pub fn morris_shore_2ion() -> Matrix4<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, h, h, 0.0, //
        0.0, h, -h, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Couplings of `|↓↓⟩|1⟩` to `(|↓↑⟩|0⟩, |↑↓⟩|0⟩)` expressed in the
/// `(D, A)` basis: the bright and the dark amplitude.
pub fn morris_shore_couplings(couplings: [f64; 2]) -> [f64; 2] {
    let m = morris_shore_2ion();
    let v = nalgebra::Vector4::new(0.0, couplings[0], couplings[1], 0.0);
    let out = m * v;
    [out[1], out[2]]
}

/// Labels of the reduced basis, in matrix order.
pub const FIVE_STATE_LABELS: [&str; 5] = ["|↓↓,0⟩", "|↓↓,1⟩", "|D,0⟩", "|D,1⟩", "|↑↑,0⟩"];
/// Index of `|↓↓⟩|1⟩` in the five-state basis.
pub const FIVE_DD1: usize = 1;
/// Index of `|D⟩|0⟩` in the five-state basis.
pub const FIVE_D0: usize = 2;

/// Two ions under symmetric red-sideband illumination, restricted to
/// `|↓↓,0⟩, |↓↓,1⟩, |D,0⟩, |D,1⟩, |↑↑,0⟩`.
///
/// The RAP pair `|↓↓,1⟩ ↔ |D,0⟩` couples with `√2 ηΩ/2`; the carrier
/// couples `|↓↓,0⟩–|D,0⟩`, `|D,0⟩–|↑↑,0⟩` and `|↓↓,1⟩–|D,1⟩` with
/// `√2 Ω/2`. The same sideband element also links `|D,1⟩–|↑↑,0⟩`.
#[derive(Clone, Debug)]
pub struct FiveStateModel {
    cfg: DriveConfig,
}

pub fn build_five_state(cfg: &DriveConfig) -> Result<FiveStateModel> {
    cfg.validate()?;
    if cfg.space.n_qubits() != 2 {
        return Err(Error::InvalidArgument("five-state model needs exactly two ions".into()));
    }
    if cfg.sideband != Sideband::Red {
        return Err(Error::InvalidArgument("five-state model describes red-sideband drives".into()));
    }
    let w = &cfg.ion_weights;
    let o = &cfg.ion_detuning_offsets;
    if w[0] != w[1] || o[0] != o[1] {
        return Err(Error::InvalidArgument(
            "five-state model assumes both ions are illuminated equally".into(),
        ));
    }
    Ok(FiveStateModel { cfg: cfg.clone() })
}

impl FiveStateModel {
    pub fn drive(&self) -> &DriveConfig {
        &self.cfg
    }

    pub fn real_matrix(&self, t: f64) -> DMatrix<f64> {
        let c = &self.cfg;
        let omega = c.ion_weights[0] * envelope(&c.pulse, t);
        let delta = c.sideband_reference() + detuning(&c.pulse, t) + c.ion_detuning_offsets[0];
        let up = -delta + c.compensator_shift(omega);
        let wv = c.omega_v;
        let r2 = std::f64::consts::SQRT_2;
        let mut h = DMatrix::<f64>::zeros(5, 5);
        h[(0, 0)] = 0.0;
        h[(1, 1)] = wv;
        h[(2, 2)] = up;
        h[(3, 3)] = up + wv;
        h[(4, 4)] = 2.0 * up;
        let mut set = |i: usize, j: usize, v: f64| {
            h[(i, j)] = v;
            h[(j, i)] = v;
        };
        let sb = r2 * c.eta * omega / 2.0;
        set(1, 2, sb);
        set(3, 4, sb);
        if c.carrier_enabled() {
            let car = r2 * omega / 2.0;
            set(0, 2, car);
            set(2, 4, car);
            set(1, 3, car);
        }
        h
    }

    /// Columns are the five reduced kets written in the full space of the
    /// drive.
    pub fn isometry(&self) -> DMatrix<C64> {
        let sp: HilbertSpace = self.cfg.space;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (dd, du, ud, uu) = (0b00, 0b01, 0b10, 0b11);
        let mut p = DMatrix::<C64>::zeros(sp.dim(), 5);
        let mut put = |col: usize, word: usize, n: usize, a: f64| {
            p[(sp.index_of(word, n), col)] = C64::new(a, 0.0);
        };
        put(0, dd, 0, 1.0);
        put(1, dd, 1, 1.0);
        put(2, du, 0, h);
        put(2, ud, 0, h);
        put(3, du, 1, h);
        put(3, ud, 1, h);
        put(4, uu, 0, 1.0);
        p
    }
}

impl HamiltonianSource for FiveStateModel {
    fn dim(&self) -> usize {
        5
    }

    fn matrix_at(&self, t: f64) -> DMatrix<C64> {
        self.real_matrix(t).map(|x| C64::new(x, 0.0))
    }

    fn real_matrix_at(&self, t: f64) -> Option<DMatrix<f64>> {
        Some(self.real_matrix(t))
    }

    fn basis_label(&self, index: usize) -> String {
        FIVE_STATE_LABELS[index].to_string()
    }
}
