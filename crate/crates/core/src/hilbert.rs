//! Hilbert space of `N` two-level ions coupled to one truncated motional
//! mode, with state vectors, Hermitian operators and Dicke target states.
//!
//! # Basis ordering
//!
//! Every module relies on a single convention. A basis state is a spin word
//! plus a Fock number `n`. The spin word is read as a big-endian binary
//! number with `Up = 1` and ion 0 as the most significant bit, so for two
//! ions the words run `↓↓, ↓↑, ↑↓, ↑↑`. The flat index is spin-major:
//!
//! ```text
//! index = word * (n_max + 1) + n
//! ```

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Qubit label of a single ion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    fn bit(self) -> usize {
        match self {
            Spin::Down => 0,
            Spin::Up => 1,
        }
    }

    fn arrow(self) -> char {
        match self {
            Spin::Down => '↓',
            Spin::Up => '↑',
        }
    }
}

/// Product basis ket `|s_1 … s_N⟩|n⟩`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    pub spins: Vec<Spin>,
    pub fock_n: usize,
}

impl BasisState {
    pub fn new(spins: Vec<Spin>, fock_n: usize) -> Self {
        Self { spins, fock_n }
    }

    /// Number of ions in `|↑⟩`.
    pub fn excitations(&self) -> usize {
        self.spins.iter().filter(|s| **s == Spin::Up).count()
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for s in &self.spins {
            write!(f, "{}", s.arrow())?;
        }
        write!(f, ",{}⟩", self.fock_n)
    }
}

/// `N` qubits times Fock states `0..=n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n_qubits: usize,
    n_max: usize,
}

impl HilbertSpace {
    pub const DEFAULT_DIM_CAP: usize = 4096;
    /// Largest supported ion count; spin words are stored in a `usize`.
    const MAX_QUBITS: usize = 20;

    pub fn new(n_qubits: usize, n_max: usize) -> Result<Self> {
        Self::with_cap(n_qubits, n_max, Self::DEFAULT_DIM_CAP)
    }

    /// Like [`HilbertSpace::new`] with an explicit dimension cap.
    pub fn with_cap(n_qubits: usize, n_max: usize, cap: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidArgument("n_qubits must be at least 1".into()));
        }
        if n_qubits > Self::MAX_QUBITS {
            return Err(Error::DimensionCap { dim: usize::MAX, cap });
        }
        let dim = (1usize << n_qubits).saturating_mul(n_max.saturating_add(1));
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { n_qubits, n_max })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn n_spin_words(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.n_spin_words() * self.n_levels()
    }

    /// Flat index of a (spin word, Fock number) pair; no bounds checks.
    #[inline]
    pub fn index_of(&self, word: usize, fock_n: usize) -> usize {
        word * self.n_levels() + fock_n
    }

    #[inline]
    pub fn spin_word(&self, index: usize) -> usize {
        index / self.n_levels()
    }

    #[inline]
    pub fn fock(&self, index: usize) -> usize {
        index % self.n_levels()
    }

    /// Bit mask of ion `ion` inside a spin word.
    #[inline]
    pub fn ion_mask(&self, ion: usize) -> usize {
        1 << (self.n_qubits - 1 - ion)
    }

    pub fn index(&self, state: &BasisState) -> Result<usize> {
        if state.spins.len() != self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "basis state has {} spins, space has {} qubits",
                state.spins.len(),
                self.n_qubits
            )));
        }
        if state.fock_n > self.n_max {
            return Err(Error::Truncation {
                fock_n: state.fock_n,
                n_max: self.n_max,
            });
        }
        let word = state
            .spins
            .iter()
            .fold(0usize, |acc, s| (acc << 1) | s.bit());
        Ok(self.index_of(word, state.fock_n))
    }

    pub fn basis_state(&self, index: usize) -> BasisState {
        assert!(index < self.dim(), "basis index {index} out of range");
        let word = self.spin_word(index);
        let spins = (0..self.n_qubits)
            .map(|ion| {
                if word & self.ion_mask(ion) != 0 {
                    Spin::Up
                } else {
                    Spin::Down
                }
            })
            .collect();
        BasisState {
            spins,
            fock_n: self.fock(index),
        }
    }

    /// Iterate over all basis states in index order.
    pub fn basis(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(|i| self.basis_state(i))
    }
}

/// Shorthand for [`HilbertSpace::new`].
pub fn build_space(n_qubits: usize, n_max: usize) -> Result<HilbertSpace> {
    HilbertSpace::new(n_qubits, n_max)
}

const NORM_TOL: f64 = 1e-9;

/// Complex amplitudes over a [`HilbertSpace`].
///
/// States built through the checked constructors are normalized to within
/// `1e-9`. Intermediate, unnormalized vectors must be created with
/// [`StateVector::scratch`], which records the fact in
/// [`StateVector::is_normalized`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: HilbertSpace,
    amplitudes: DVector<C64>,
    normalized: bool,
}

impl StateVector {
    pub fn from_amplitudes(space: HilbertSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            space,
            amplitudes,
            normalized: true,
        })
    }

    /// Unchecked, explicitly unnormalized vector.
    pub fn scratch(space: HilbertSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            space,
            amplitudes,
            normalized: false,
        })
    }

    pub fn basis(space: HilbertSpace, index: usize) -> Result<Self> {
        if index >= space.dim() {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} out of range for dim {}",
                space.dim()
            )));
        }
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            space,
            amplitudes,
            normalized: true,
        })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|⟨self|other⟩|²`.
    pub fn overlap_squared(&self, other: &StateVector) -> Result<f64> {
        self.inner(other).map(|z| z.norm_sqr())
    }

    /// Squared amplitude of every basis state.
    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total population in motional level `fock_n`.
    pub fn fock_population(&self, fock_n: usize) -> f64 {
        if fock_n > self.space.n_max {
            return 0.0;
        }
        (0..self.space.n_spin_words())
            .map(|w| self.amplitudes[self.space.index_of(w, fock_n)].norm_sqr())
            .sum()
    }

    /// Population of each spin word with the motion traced out.
    pub fn spin_populations(&self) -> Vec<f64> {
        let sp = self.space;
        (0..sp.n_spin_words())
            .map(|w| {
                (0..sp.n_levels())
                    .map(|n| self.amplitudes[sp.index_of(w, n)].norm_sqr())
                    .sum()
            })
            .collect()
    }

    /// Re-embed a spin-only state (`n_max = 0`) into `space` with the motion
    /// in Fock state `fock_n`.
    pub fn with_motion(&self, space: HilbertSpace, fock_n: usize) -> Result<StateVector> {
        if self.space.n_max != 0 || self.space.n_qubits != space.n_qubits {
            return Err(Error::SpaceMismatch);
        }
        if fock_n > space.n_max {
            return Err(Error::Truncation {
                fock_n,
                n_max: space.n_max,
            });
        }
        let mut amplitudes = DVector::zeros(space.dim());
        for (word, a) in self.amplitudes.iter().enumerate() {
            amplitudes[space.index_of(word, fock_n)] = *a;
        }
        Ok(StateVector {
            space,
            amplitudes,
            normalized: self.normalized,
        })
    }
}

/// Unit vector `|spins⟩|fock_n⟩`.
pub fn embed(space: HilbertSpace, spins: &[Spin], fock_n: usize) -> Result<StateVector> {
    let index = space.index(&BasisState::new(spins.to_vec(), fock_n))?;
    StateVector::basis(space, index)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Dicke state `|D_N^(m)⟩` over a spin-only space (`n_max = 0`).
///
/// Use [`StateVector::with_motion`] to place it next to a Fock state.
pub fn make_dicke(n_qubits: usize, m: usize) -> Result<StateVector> {
    if m > n_qubits {
        return Err(Error::InvalidExcitation { n: n_qubits, m });
    }
    let space = HilbertSpace::new(n_qubits, 0)?;
    let amp = C64::new((binomial(n_qubits, m) as f64).recip().sqrt(), 0.0);
    let amplitudes = DVector::from_iterator(
        space.dim(),
        (0..space.dim()).map(|w| {
            if w.count_ones() as usize == m {
                amp
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    );
    StateVector::from_amplitudes(space, amplitudes)
}

const HERMITIAN_TOL: f64 = 1e-12;

/// Largest `|A_ij − conj(A_ji)|`.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Dense Hermitian matrix over a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    space: HilbertSpace,
    matrix: DMatrix<C64>,
}

impl HermitianOperator {
    /// Checks that `matrix` is Hermitian entrywise within `1e-12` (relative
    /// to the largest entry when that exceeds one).
    pub fn new(space: HilbertSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        let scale = matrix.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
        let defect = hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    /// True when every entry has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.matrix.iter().all(|z| z.im == 0.0)
    }

    /// `O|ψ⟩`, returned as an unnormalized scratch vector.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        if psi.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        StateVector::scratch(self.space, &self.matrix * &psi.amplitudes)
    }
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation(op: &HermitianOperator, psi: &StateVector) -> Result<f64> {
    if op.space != psi.space {
        return Err(Error::SpaceMismatch);
    }
    let v = psi.amplitudes.dotc(&(&op.matrix * &psi.amplitudes));
    let scale = op.matrix.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    if v.im.abs() > 1e-10 * scale {
        return Err(Error::ComplexExpectation(v.im));
    }
    Ok(v.re)
}

/// Standard operators in the frozen basis ordering.
pub mod ops {
    use super::*;

    fn diagonal(space: HilbertSpace, f: impl Fn(usize) -> f64) -> DMatrix<C64> {
        DMatrix::from_fn(space.dim(), space.dim(), |i, j| {
            if i == j {
                C64::new(f(i), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// Motional annihilation operator `a` (not Hermitian).
    pub fn annihilation(space: HilbertSpace) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for w in 0..space.n_spin_words() {
            for n in 1..space.n_levels() {
                m[(space.index_of(w, n - 1), space.index_of(w, n))] =
                    C64::new((n as f64).sqrt(), 0.0);
            }
        }
        m
    }

    /// `σ_{+,j} = |↑⟩_j⟨↓|_j` (not Hermitian).
    pub fn sigma_plus(space: HilbertSpace, ion: usize) -> DMatrix<C64> {
        let mask = space.ion_mask(ion);
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for w in (0..space.n_spin_words()).filter(|w| w & mask == 0) {
            for n in 0..space.n_levels() {
                m[(space.index_of(w | mask, n), space.index_of(w, n))] = C64::new(1.0, 0.0);
            }
        }
        m
    }

    fn hermitian(space: HilbertSpace, m: DMatrix<C64>) -> HermitianOperator {
        HermitianOperator::new(space, m).expect("operator constructed Hermitian")
    }

    /// `a†a`.
    pub fn number(space: HilbertSpace) -> HermitianOperator {
        hermitian(space, diagonal(space, |i| space.fock(i) as f64))
    }

    /// `|↑⟩_j⟨↑|_j`.
    pub fn up_projector(space: HilbertSpace, ion: usize) -> HermitianOperator {
        let mask = space.ion_mask(ion);
        hermitian(
            space,
            diagonal(space, |i| f64::from(u8::from(space.spin_word(i) & mask != 0))),
        )
    }

    /// `σ_{x,j}`.
    pub fn sigma_x(space: HilbertSpace, ion: usize) -> HermitianOperator {
        let sp = sigma_plus(space, ion);
        hermitian(space, &sp + sp.adjoint())
    }

    /// Excitation number `N_a + a†a`.
    pub fn excitation_number(space: HilbertSpace) -> HermitianOperator {
        hermitian(
            space,
            diagonal(space, |i| {
                (space.spin_word(i).count_ones() as usize + space.fock(i)) as f64
            }),
        )
    }

    /// Two-qubit-style parity `(−1)^{N_a}` on the spins, identity on motion.
    pub fn parity(space: HilbertSpace) -> HermitianOperator {
        hermitian(
            space,
            diagonal(space, |i| {
                if space.spin_word(i).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }),
        )
    }

    /// Permutation exchanging the internal states of ions `a` and `b`.
    pub fn ion_swap(space: HilbertSpace, a: usize, b: usize) -> HermitianOperator {
        let (ma, mb) = (space.ion_mask(a), space.ion_mask(b));
        let mut m = DMatrix::zeros(space.dim(), space.dim());
        for w in 0..space.n_spin_words() {
            let bit_a = w & ma != 0;
            let bit_b = w & mb != 0;
            let mut v = w & !(ma | mb);
            if bit_a {
                v |= mb;
            }
            if bit_b {
                v |= ma;
            }
            for n in 0..space.n_levels() {
                m[(space.index_of(v, n), space.index_of(w, n))] = C64::new(1.0, 0.0);
            }
        }
        hermitian(space, m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Spin::{Down, Up};

    #[test]
    fn dimensions() {
        assert_eq!(build_space(2, 5).unwrap().dim(), 24);
        assert_eq!(build_space(1, 0).unwrap().dim(), 2);
        assert_eq!(build_space(3, 2).unwrap().dim(), 24);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(build_space(0, 3), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            build_space(10, 4),
            Err(Error::DimensionCap { dim: 5120, cap: 4096 })
        ));
        assert!(HilbertSpace::with_cap(10, 4, 8192).is_ok());
    }

    #[test]
    fn index_bijection() {
        let sp = build_space(3, 4).unwrap();
        for i in 0..sp.dim() {
            assert_eq!(sp.index(&sp.basis_state(i)).unwrap(), i);
        }
        let seen: std::collections::HashSet<_> = sp.basis().collect();
        assert_eq!(seen.len(), sp.dim());
    }

    #[test]
    fn ordering_is_big_endian_spin_major() {
        let sp = build_space(2, 5).unwrap();
        let idx = |s: [Spin; 2], n| sp.index(&BasisState::new(s.to_vec(), n)).unwrap();
        assert_eq!(idx([Down, Down], 0), 0);
        assert_eq!(idx([Down, Down], 1), 1);
        assert_eq!(idx([Down, Up], 0), 6);
        assert_eq!(idx([Up, Down], 0), 12);
        assert_eq!(idx([Up, Up], 5), 23);
    }

    #[test]
    fn embed_examples() {
        let sp = build_space(2, 5).unwrap();
        let k = embed(sp, &[Down, Down], 1).unwrap();
        assert_eq!(k.amplitudes()[1], C64::new(1.0, 0.0));
        let k = embed(sp, &[Up, Down], 0).unwrap();
        assert_eq!(k.amplitudes()[12], C64::new(1.0, 0.0));
        assert_eq!(
            embed(sp, &[Down, Down], 7),
            Err(Error::Truncation { fock_n: 7, n_max: 5 })
        );
    }

    #[test]
    fn dicke_two_one() {
        let d = make_dicke(2, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expect = [0.0, h, h, 0.0];
        for (a, e) in d.amplitudes().iter().zip(expect) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn dicke_ground_is_all_down() {
        let d = make_dicke(3, 0).unwrap();
        assert_eq!(d.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(d.amplitudes().iter().skip(1).all(|a| a.norm() == 0.0));
    }

    #[test]
    fn dicke_four_two_by_enumeration() {
        // brute force: all 4-bit words with exactly two bits set
        let words: Vec<usize> = (0..16usize)
            .filter(|w| (0..4).filter(|b| w >> b & 1 == 1).count() == 2)
            .collect();
        assert_eq!(words.len(), 6);
        let d = make_dicke(4, 2).unwrap();
        for (w, a) in d.amplitudes().iter().enumerate() {
            let expect = if words.contains(&w) { 1.0 / 6f64.sqrt() } else { 0.0 };
            assert!((a.re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn dicke_rejects_excess_excitations() {
        assert_eq!(make_dicke(2, 3), Err(Error::InvalidExcitation { n: 2, m: 3 }));
    }

    #[test]
    fn dicke_states_are_orthonormal() {
        for n in 1..=5 {
            for m in 0..=n {
                let a = make_dicke(n, m).unwrap();
                assert!((a.norm_squared() - 1.0).abs() < 1e-12);
                for m2 in (0..=n).filter(|&m2| m2 != m) {
                    let b = make_dicke(n, m2).unwrap();
                    assert_eq!(a.overlap_squared(&b).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn expectation_examples() {
        let sp = build_space(2, 5).unwrap();
        let num = ops::number(sp);
        let par = ops::parity(sp);
        let k = embed(sp, &[Down, Down], 1).unwrap();
        assert_eq!(expectation(&num, &k).unwrap(), 1.0);
        let k = embed(sp, &[Down, Up], 0).unwrap();
        assert_eq!(expectation(&par, &k).unwrap(), -1.0);
        let d = make_dicke(2, 1).unwrap().with_motion(sp, 0).unwrap();
        assert!((expectation(&par, &d).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn expectation_space_mismatch() {
        let a = build_space(2, 5).unwrap();
        let b = build_space(2, 4).unwrap();
        let psi = embed(b, &[Down, Down], 0).unwrap();
        assert_eq!(expectation(&ops::number(a), &psi), Err(Error::SpaceMismatch));
    }

    #[test]
    fn rejects_non_hermitian() {
        let sp = build_space(1, 0).unwrap();
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(
            HermitianOperator::new(sp, m),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn state_normalization_is_checked() {
        let sp = build_space(1, 0).unwrap();
        let v = DVector::from_element(2, C64::new(1.0, 0.0));
        assert!(matches!(
            StateVector::from_amplitudes(sp, v.clone()),
            Err(Error::NotNormalized(_))
        ));
        assert!(!StateVector::scratch(sp, v).unwrap().is_normalized());
    }

    #[test]
    fn operator_algebra() {
        let sp = build_space(2, 3).unwrap();
        let a = ops::annihilation(sp);
        let n = ops::number(sp);
        let ada = a.adjoint() * &a;
        assert!((ada - n.matrix()).norm() < 1e-14);
        // σ+ σ- = |↑⟩⟨↑|
        let sp0 = ops::sigma_plus(sp, 0);
        let p = &sp0 * sp0.adjoint();
        assert!((p - ops::up_projector(sp, 0).matrix()).norm() < 1e-14);
        let swap = ops::ion_swap(sp, 0, 1);
        let s2 = swap.matrix() * swap.matrix();
        assert!((s2 - DMatrix::identity(sp.dim(), sp.dim())).norm() < 1e-14);
    }
}
