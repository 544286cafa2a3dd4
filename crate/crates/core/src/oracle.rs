//! Exact density-matrix simulation of one purification round.
//!
//! Works on the full 16-dim (single) or 64-dim (double) Hilbert space with
//! Pauli gate noise and POVM measurement errors, then projects the kept
//! source pair onto the Bell basis. It shares no code with [`crate::tensor`]
//! beyond the noise table, and serves as the reference for it.
//!
//! Qubit `q` of an `n`-qubit register is bit `n - 1 - q` of the basis index,
//! so `kron(a, b)` places `a` on the lower-numbered qubits. Pair `c` of a
//! round occupies qubits `2c` (Alice) and `2c + 1` (Bob).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::bell::{NoiseParams, Pauli};
use crate::error::{Error, Result};
use crate::tensor::{DoubleTensor, SingleTensor};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Measurement basis of a single qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Dense, possibly subnormalized, density operator on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n: usize,
    dim: usize,
    data: Vec<C>,
}

impl DensityMatrix {
    pub fn zeros(n_qubits: usize) -> Self {
        let dim = 1 << n_qubits;
        Self {
            n: n_qubits,
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    /// `|psi><psi|` for a state vector of length `2^n`.
    pub fn from_pure(psi: &[C]) -> Result<Self> {
        let dim = psi.len();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::InvalidArgument(format!(
                "state length {dim} is not 2^n"
            )));
        }
        let mut rho = Self::zeros(dim.trailing_zeros() as usize);
        for r in 0..dim {
            for c in 0..dim {
                rho.data[r * dim + c] = psi[r] * psi[c].conj();
            }
        }
        Ok(rho)
    }

    pub fn from_matrix(m: &DMatrix<C>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(
                "matrix must be square with 2^n rows".into(),
            ));
        }
        let mut rho = Self::zeros(dim.trailing_zeros() as usize);
        for r in 0..dim {
            for c in 0..dim {
                rho.data[r * dim + c] = m[(r, c)];
            }
        }
        Ok(rho)
    }

    pub fn to_matrix(&self) -> DMatrix<C> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C {
        self.data[r * self.dim + c]
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        let mut out = DensityMatrix::zeros(self.n + other.n);
        let d2 = other.dim;
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let a = self.get(r1, c1);
                if a == ZERO {
                    continue;
                }
                for r2 in 0..d2 {
                    for c2 in 0..d2 {
                        let r = r1 * d2 + r2;
                        let c = c1 * d2 + c2;
                        out.data[r * out.dim + c] = a * other.get(r2, c2);
                    }
                }
            }
        }
        out
    }

    pub fn trace(&self) -> C {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    #[inline]
    fn mask(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::InvalidArgument(format!(
                "qubit {q} out of range for {} qubits",
                self.n
            )));
        }
        Ok(())
    }

    /// `rho -> U rho U^dagger` for a single-qubit unitary `u` (row major).
    pub fn apply_1q(&mut self, q: usize, u: [[C; 2]; 2]) {
        let m = self.mask(q);
        let dim = self.dim;
        // Left multiplication on rows.
        for r0 in (0..dim).filter(|r| r & m == 0) {
            let r1 = r0 | m;
            for c in 0..dim {
                let a = self.data[r0 * dim + c];
                let b = self.data[r1 * dim + c];
                self.data[r0 * dim + c] = u[0][0] * a + u[0][1] * b;
                self.data[r1 * dim + c] = u[1][0] * a + u[1][1] * b;
            }
        }
        // Right multiplication by U^dagger on columns.
        for r in 0..dim {
            let row = &mut self.data[r * dim..(r + 1) * dim];
            for c0 in (0..dim).filter(|c| c & m == 0) {
                let c1 = c0 | m;
                let a = row[c0];
                let b = row[c1];
                row[c0] = a * u[0][0].conj() + b * u[0][1].conj();
                row[c1] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    pub fn apply_hadamard(&mut self, q: usize) {
        let s = C::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        self.apply_1q(q, [[s, s], [s, -s]]);
    }

    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        if p != Pauli::I {
            self.apply_1q(q, pauli_matrix(p));
        }
    }

    /// Ideal C-Not as a basis permutation.
    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::IndexCollision(control));
        }
        let (mc, mt) = (self.mask(control), self.mask(target));
        let perm = |x: usize| if x & mc != 0 { x ^ mt } else { x };
        let dim = self.dim;
        let old = self.data.clone();
        for r in 0..dim {
            let pr = perm(r);
            for c in 0..dim {
                self.data[r * dim + c] = old[pr * dim + perm(c)];
            }
        }
        Ok(())
    }

    /// C-Not followed by the two-qubit Pauli channel
    /// `sum_ij p_ij (sigma_i (x) sigma_j) rho (sigma_i (x) sigma_j)`.
    pub fn apply_noisy_cnot(
        &mut self,
        control: usize,
        target: usize,
        noise: &NoiseParams,
    ) -> Result<()> {
        self.apply_cnot(control, target)?;
        let mut acc = vec![ZERO; self.data.len()];
        for pc in Pauli::ALL {
            let row_total: f64 = (0..4).map(|j| noise.p(pc.index(), j)).sum();
            if row_total == 0.0 {
                continue;
            }
            let mut after_c = self.clone();
            after_c.apply_pauli(control, pc);
            for pt in Pauli::ALL {
                let p = noise.p(pc.index(), pt.index());
                if p == 0.0 {
                    continue;
                }
                let mut term = after_c.clone();
                term.apply_pauli(target, pt);
                for (a, t) in acc.iter_mut().zip(term.data.iter()) {
                    *a += t * p;
                }
            }
        }
        self.data = acc;
        Ok(())
    }

    /// Applies the POVM element for `outcome` on qubit `q` and traces the
    /// qubit out. The result is subnormalized by the outcome probability.
    ///
    /// `E_0 = (1-p)|0><0| + p|1><1|`, `E_1 = (1-p)|1><1| + p|0><0|`; the X
    /// basis uses `H E H`.
    pub fn measure_discard(
        &self,
        q: usize,
        basis: Basis,
        outcome: u8,
        p_m: f64,
    ) -> Result<DensityMatrix> {
        self.check_qubit(q)?;
        if self.n < 2 {
            return Err(Error::InvalidArgument(
                "cannot trace out the last qubit".into(),
            ));
        }
        let rotated;
        let src = match basis {
            Basis::Z => self,
            Basis::X => {
                let mut r = self.clone();
                r.apply_hadamard(q);
                rotated = r;
                &rotated
            }
        };
        let weight = |bit: usize| if bit as u8 == outcome { 1.0 - p_m } else { p_m };
        let mut out = DensityMatrix::zeros(self.n - 1);
        let shift = self.n - 1 - q;
        let low = (1usize << shift) - 1;
        let insert = |x: usize, bit: usize| ((x & !low) << 1) | (bit << shift) | (x & low);
        for r in 0..out.dim {
            for c in 0..out.dim {
                let mut v = ZERO;
                for bit in 0..2 {
                    v += src.get(insert(r, bit), insert(c, bit)) * weight(bit);
                }
                out.data[r * out.dim + c] = v;
            }
        }
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &DensityMatrix) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    /// `<psi| rho |psi>`.
    pub fn expectation(&self, psi: &[C]) -> C {
        let mut acc = ZERO;
        for r in 0..self.dim {
            if psi[r] == ZERO {
                continue;
            }
            for c in 0..self.dim {
                acc += psi[r].conj() * self.get(r, c) * psi[c];
            }
        }
        acc
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..self.dim)
            .all(|r| (0..self.dim).all(|c| (self.get(r, c) - self.get(c, r).conj()).norm() <= tol))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let eig = SymmetricEigen::new(self.to_matrix());
        eig.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Hermitian, unit trace and positive semidefinite (eigenvalue floor `-1e-10`).
    pub fn is_valid_state(&self) -> bool {
        self.is_hermitian(1e-12)
            && (self.trace() - ONE).norm() <= 1e-12
            && self.min_eigenvalue() >= -1e-10
    }
}

pub fn pauli_matrix(p: Pauli) -> [[C; 2]; 2] {
    let i = C::new(0.0, 1.0);
    match p {
        Pauli::I => [[ONE, ZERO], [ZERO, ONE]],
        Pauli::X => [[ZERO, ONE], [ONE, ZERO]],
        Pauli::Y => [[ZERO, -i], [i, ZERO]],
        Pauli::Z => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

/// `|phi_j> = (sigma_j (x) I)(|00> + |11>)/sqrt(2)` as 4-vectors.
pub fn bell_vectors() -> [[C; 4]; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi0 = [C::new(s, 0.0), ZERO, ZERO, C::new(s, 0.0)];
    std::array::from_fn(|j| {
        let p = pauli_matrix(Pauli::ALL[j]);
        let mut out = [ZERO; 4];
        // (sigma (x) I) acting on the first qubit (the high bit).
        for (idx, amp) in phi0.iter().enumerate() {
            let (a, b) = (idx >> 1, idx & 1);
            for a2 in 0..2 {
                out[(a2 << 1) | b] += p[a2][a] * amp;
            }
        }
        out
    })
}

/// The four Bell projectors `phi_j = |phi_j><phi_j|`.
pub fn bell_projectors() -> [DensityMatrix; 4] {
    bell_vectors().map(|v| DensityMatrix::from_pure(&v).expect("4-dim vector"))
}

/// Bell-basis weights `<phi_i| rho |phi_i>` of a two-qubit operator.
pub fn bell_weights(rho: &DensityMatrix) -> [f64; 4] {
    debug_assert_eq!(rho.n_qubits(), 2);
    bell_vectors().map(|v| rho.expectation(&v).re)
}

fn bell_pairs(labels: &[usize]) -> DensityMatrix {
    let projectors = bell_projectors();
    labels[1..]
        .iter()
        .fold(projectors[labels[0]].clone(), |acc, &l| {
            acc.kron(&projectors[l])
        })
}

/// Source pair after frame exchange, projected on the Bell basis.
fn source_weights(mut source: DensityMatrix) -> [f64; 4] {
    source.apply_hadamard(0);
    source.apply_hadamard(1);
    bell_weights(&source)
}

/// Keeps coincident outcomes of a bilateral measurement on qubits `(a, b)`
/// with `a < b`, tracing both out.
fn coincident(
    rho: &DensityMatrix,
    a: usize,
    b: usize,
    basis: Basis,
    p_m: f64,
) -> Result<DensityMatrix> {
    let mut kept = DensityMatrix::zeros(rho.n_qubits() - 2);
    for m in 0..2u8 {
        let r = rho
            .measure_discard(b, basis, m, p_m)?
            .measure_discard(a, basis, m, p_m)?;
        kept.add_assign(&r);
    }
    Ok(kept)
}

/// Single selection on `phi_j (x) phi_k`; returns the kept weights on each
/// output label.
pub fn single_round_column(j: usize, k: usize, noise: &NoiseParams) -> Result<[f64; 4]> {
    let mut rho = bell_pairs(&[j, k]);
    rho.apply_noisy_cnot(0, 2, noise)?;
    rho.apply_noisy_cnot(1, 3, noise)?;
    let kept = coincident(&rho, 2, 3, Basis::Z, noise.p_m())?;
    Ok(source_weights(kept))
}

/// Double selection on `phi_j (x) phi_k (x) phi_l`.
pub fn double_round_column(j: usize, k: usize, l: usize, noise: &NoiseParams) -> Result<[f64; 4]> {
    let mut rho = bell_pairs(&[j, k, l]);
    rho.apply_noisy_cnot(0, 2, noise)?;
    rho.apply_noisy_cnot(1, 3, noise)?;
    rho.apply_noisy_cnot(4, 2, noise)?;
    rho.apply_noisy_cnot(5, 3, noise)?;
    let after_x = coincident(&rho, 4, 5, Basis::X, noise.p_m())?;
    let kept = coincident(&after_x, 2, 3, Basis::Z, noise.p_m())?;
    Ok(source_weights(kept))
}

pub fn simulate_single_round_exact(noise: &NoiseParams) -> SingleTensor {
    let cols: Vec<[f64; 4]> = (0..16)
        .into_par_iter()
        .map(|jk| single_round_column(jk / 4, jk % 4, noise).expect("fixed qubit layout"))
        .collect();
    let mut t = SingleTensor::zeros();
    for (jk, w) in cols.iter().enumerate() {
        for (i, &v) in w.iter().enumerate() {
            t.s[i][jk / 4][jk % 4] = v;
        }
    }
    t
}

pub fn simulate_double_round_exact(noise: &NoiseParams) -> DoubleTensor {
    let cols: Vec<[f64; 4]> = (0..64)
        .into_par_iter()
        .map(|x| {
            double_round_column(x / 16, (x / 4) % 4, x % 4, noise).expect("fixed qubit layout")
        })
        .collect();
    let mut t = DoubleTensor::zeros();
    for (x, w) in cols.iter().enumerate() {
        for (i, &v) in w.iter().enumerate() {
            t.d[i][x / 16][(x / 4) % 4][x % 4] = v;
        }
    }
    t
}
