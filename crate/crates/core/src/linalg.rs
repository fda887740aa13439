//! Dense Hermitian eigendecomposition helpers and the exact step
//! exponential `exp(−i H dt)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

/// Eigenpairs of a Hermitian matrix with eigenvalues in ascending order.
/// Eigenvectors are the columns of the returned matrix.
pub fn eigh(h: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.clone());
    sort_pairs(eig.eigenvalues.as_slice(), &eig.eigenvectors)
}

/// Real-symmetric variant of [`eigh`]; vectors are promoted to complex.
pub fn eigh_real(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(h.clone());
    let vecs = eig.eigenvectors.map(|x| C64::new(x, 0.0));
    sort_pairs(eig.eigenvalues.as_slice(), &vecs)
}

fn sort_pairs(values: &[f64], vectors: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted = order.iter().map(|&k| values[k]).collect();
    let cols: Vec<_> = order.iter().map(|&k| vectors.column(k).into_owned()).collect();
    (sorted, DMatrix::from_columns(&cols))
}

/// Connected components of the non-zero pattern of a square matrix, each
/// sorted ascending. Components are ordered by their smallest index.
pub fn coupled_blocks<T>(h: &DMatrix<T>, is_zero: impl Fn(&T) -> bool) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..n {
        for i in (j + 1)..n {
            if !is_zero(&h[(i, j)]) || !is_zero(&h[(j, i)]) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(i);
    }
    blocks
}

fn phase(energy: f64, dt: f64) -> C64 {
    C64::from_polar(1.0, -energy * dt)
}

/// Largest `‖(H − c) dt‖_∞` evaluated by Taylor series; above it the
/// exponential falls back to diagonalization.
const TAYLOR_MAX_NORM: f64 = 1.0;
const TAYLOR_TOL: f64 = 1e-17;
const TAYLOR_MAX_TERMS: usize = 40;

/// `ψ ← exp(−i H dt) ψ` for real symmetric `H`.
///
/// Small steps use a Taylor series summed to machine precision after
/// shifting the diagonal to center its range; large steps diagonalize.
pub fn apply_exp_real(h: &DMatrix<f64>, dt: f64, psi: &mut DVector<C64>) {
    if !apply_exp_real_taylor(h, dt, psi) {
        apply_exp_real_eig(h, dt, psi);
    }
}

fn apply_exp_real_taylor(h: &DMatrix<f64>, dt: f64, psi: &mut DVector<C64>) -> bool {
    let n = h.nrows();
    let a = h.as_slice();
    let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
        (lo.min(a[i * n + i]), hi.max(a[i * n + i]))
    });
    let shift = 0.5 * (lo + hi);
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i] - shift).collect();
    let mut row_sum: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
    // off-diagonal non-zeros as (row, column, value); H is column-major
    let mut off: Vec<(usize, usize, f64)> = Vec::new();
    for (j, col) in a.chunks_exact(n).enumerate() {
        for (i, &v) in col.iter().enumerate() {
            if i != j && v != 0.0 {
                off.push((i, j, v));
                row_sum[i] += v.abs();
            }
        }
    }
    let norm = row_sum.into_iter().fold(0.0, f64::max);
    if norm * dt.abs() > TAYLOR_MAX_NORM {
        return false;
    }
    let mut term: Vec<C64> = psi.iter().copied().collect();
    let mut next = vec![C64::new(0.0, 0.0); n];
    let mut sum = term.clone();
    for k in 1..=TAYLOR_MAX_TERMS {
        // next = (H − shift) term
        for ((y, x), d) in next.iter_mut().zip(&term).zip(&diag) {
            *y = *x * *d;
        }
        for &(i, j, v) in &off {
            next[i] += term[j] * v;
        }
        let f = C64::new(0.0, -dt / k as f64);
        let mut size = 0.0f64;
        for ((t, y), s) in term.iter_mut().zip(&next).zip(sum.iter_mut()) {
            *t = *y * f;
            *s += *t;
            size = size.max(t.norm_sqr());
        }
        if size <= TAYLOR_TOL * TAYLOR_TOL {
            break;
        }
    }
    let ph = phase(shift, dt);
    for (p, s) in psi.iter_mut().zip(&sum) {
        *p = *s * ph;
    }
    true
}

/// `ψ ← exp(−i H dt) ψ` for real symmetric `H`, diagonalizing each
/// uncoupled block separately.
pub fn apply_exp_real_eig(h: &DMatrix<f64>, dt: f64, psi: &mut DVector<C64>) {
    for block in coupled_blocks(h, |x| *x == 0.0) {
        if block.len() == 1 {
            let i = block[0];
            psi[i] *= phase(h[(i, i)], dt);
            continue;
        }
        let k = block.len();
        let sub = DMatrix::from_fn(k, k, |a, b| h[(block[a], block[b])]);
        let eig = SymmetricEigen::new(sub);
        let v = &eig.eigenvectors;
        // c = Vᵀ ψ, scaled by the phases, then ψ = V c
        let mut c = vec![C64::new(0.0, 0.0); k];
        for (m, cm) in c.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (a, &i) in block.iter().enumerate() {
                acc += psi[i] * v[(a, m)];
            }
            *cm = acc * phase(eig.eigenvalues[m], dt);
        }
        for (a, &i) in block.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (m, cm) in c.iter().enumerate() {
                acc += *cm * v[(a, m)];
            }
            psi[i] = acc;
        }
    }
}

/// `ψ ← exp(−i H dt) ψ` for general Hermitian `H`.
pub fn apply_exp(h: &DMatrix<C64>, dt: f64, psi: &mut DVector<C64>) {
    for block in coupled_blocks(h, |z| *z == C64::new(0.0, 0.0)) {
        if block.len() == 1 {
            let i = block[0];
            psi[i] *= phase(h[(i, i)].re, dt);
            continue;
        }
        let k = block.len();
        let sub = DMatrix::from_fn(k, k, |a, b| h[(block[a], block[b])]);
        let eig = SymmetricEigen::new(sub);
        let v = &eig.eigenvectors;
        let local = DVector::from_iterator(k, block.iter().map(|&i| psi[i]));
        let mut c = v.adjoint() * local;
        for (m, cm) in c.iter_mut().enumerate() {
            *cm *= phase(eig.eigenvalues[m], dt);
        }
        let out = v * c;
        for (a, &i) in block.iter().enumerate() {
            psi[i] = out[a];
        }
    }
}
