//! Transition probability tensors of one purification round.
//!
//! A round is composed from elementary label-space tensors: the ideal
//! bilateral C-Not `U`, the bilateral gate noise `N∘N`, the noisy bilateral
//! Z and X measurements, and the frame exchange applied to the kept source
//! pair. Pair indices are flattened as `4 * first + second`.

use serde::{Deserialize, Serialize};

use crate::bell::{
    label_bits, label_from_bits, pauli_action, NoiseParams, Pauli, PauliPermutation,
};

/// 16x16 row-stochastic matrix over ordered pairs of Bell labels.
pub type PairMatrix = [[f64; 16]; 16];

/// Z-measurement labels whose two outcomes coincide.
pub const Z_KEPT: [usize; 2] = [0, 3];
/// X-measurement labels whose two outcomes coincide.
pub const X_KEPT: [usize; 2] = [0, 1];

#[inline]
fn pair(a: usize, b: usize) -> usize {
    4 * a + b
}

/// `S^{jk}_i` stored as `s[i][j][k]`: output label `i`, source `j`, ancilla `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleTensor {
    pub s: [[[f64; 4]; 4]; 4],
}

/// `D^{jkl}_i` stored as `d[i][j][k][l]`: output `i`, source `j`,
/// primary ancilla `k`, secondary ancilla `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleTensor {
    pub d: [[[[f64; 4]; 4]; 4]; 4],
}

impl SingleTensor {
    pub fn zeros() -> Self {
        Self {
            s: [[[0.0; 4]; 4]; 4],
        }
    }

    /// Probability that the input pair `(j, k)` survives post-selection.
    pub fn success(&self, j: usize, k: usize) -> f64 {
        (0..4).map(|i| self.s[i][j][k]).sum()
    }

    pub fn max_abs_diff(&self, other: &SingleTensor) -> f64 {
        self.s
            .iter()
            .flatten()
            .flatten()
            .zip(other.s.iter().flatten().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entries in `[i][j][k]` order.
    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.s.iter().flatten().flatten().copied()
    }
}

impl DoubleTensor {
    pub fn zeros() -> Self {
        Self {
            d: [[[[0.0; 4]; 4]; 4]; 4],
        }
    }

    pub fn success(&self, j: usize, k: usize, l: usize) -> f64 {
        (0..4).map(|i| self.d[i][j][k][l]).sum()
    }

    pub fn max_abs_diff(&self, other: &DoubleTensor) -> f64 {
        self.entries()
            .zip(other.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Entries in `[i][j][k][l]` order.
    pub fn entries(&self) -> impl Iterator<Item = f64> + '_ {
        self.d.iter().flatten().flatten().flatten().copied()
    }
}

/// Building blocks shared by both schemes.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementaryTensors {
    /// `u[4a+b][4i+j] = U^{ij}_{ab}`.
    pub u: PairMatrix,
    /// Alice's and Bob's gate noise composed.
    pub nn: PairMatrix,
    /// `mz[b][l] = M^b_l`.
    pub mz: [[f64; 4]; 4],
    /// `mx[d][n] = M~^d_n`.
    pub mx: [[f64; 4]; 4],
    pub hh: PauliPermutation,
}

impl ElementaryTensors {
    pub fn new(noise: &NoiseParams) -> Self {
        let (mz, mx) = measurement_tensors(noise.p_m());
        Self {
            u: ideal_cnot_tensor(),
            nn: gate_noise_tensor(noise),
            mz,
            mx,
            hh: frame_exchange_permutation(),
        }
    }

    /// Noisy bilateral C-Not `G = (N∘N) U`.
    pub fn noisy_gate(&self) -> PairMatrix {
        mat_mul(&self.u, &self.nn)
    }
}

/// Row-vector convention: `(a * b)[x][z] = sum_y a[x][y] b[y][z]`,
/// i.e. `a` is applied first.
fn mat_mul(a: &PairMatrix, b: &PairMatrix) -> PairMatrix {
    let mut out = [[0.0; 16]; 16];
    for x in 0..16 {
        for y in 0..16 {
            let w = a[x][y];
            if w == 0.0 {
                continue;
            }
            for z in 0..16 {
                out[x][z] += w * b[y][z];
            }
        }
    }
    out
}

/// Image of `(control, target)` under the ideal bilateral C-Not.
///
/// The bit flip propagates control to target and the phase flip target
/// to control.
#[inline]
pub fn cnot_labels(control: usize, target: usize) -> (usize, usize) {
    let (cb, cp) = label_bits(control);
    let (tb, tp) = label_bits(target);
    (label_from_bits(cb, cp ^ tp), label_from_bits(cb ^ tb, tp))
}

pub fn ideal_cnot_tensor() -> PairMatrix {
    let mut u = [[0.0; 16]; 16];
    for a in 0..4 {
        for b in 0..4 {
            let (i, j) = cnot_labels(a, b);
            u[pair(a, b)][pair(i, j)] = 1.0;
        }
    }
    u
}

/// Gate noise at one site, `N^{ab}_{cd} = p_ij` with `(ac)` in `P_sigma_i`
/// and `(bd)` in `P_sigma_j`.
pub fn single_site_noise(noise: &NoiseParams) -> PairMatrix {
    let mut n = [[0.0; 16]; 16];
    for pi in Pauli::ALL {
        for pj in Pauli::ALL {
            let p = noise.p(pi.index(), pj.index());
            if p == 0.0 {
                continue;
            }
            let (qi, qj) = (pauli_action(pi), pauli_action(pj));
            for a in 0..4 {
                for b in 0..4 {
                    n[pair(a, b)][pair(qi.apply(a), qj.apply(b))] += p;
                }
            }
        }
    }
    n
}

/// `N^{cd}_{km} N^{ab}_{cd}`: independent noise after Alice's and Bob's gates.
pub fn gate_noise_tensor(noise: &NoiseParams) -> PairMatrix {
    let n = single_site_noise(noise);
    mat_mul(&n, &n)
}

/// Noisy bilateral Z and X measurement tensors `(M, M~)`.
///
/// A single outcome flip acts on the measured pair like `sigma_1` in the Z
/// basis and like `sigma_3` in the X basis.
pub fn measurement_tensors(p_m: f64) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let flip = pauli_action(Pauli::X);
    let mut m = [[0.0; 4]; 4];
    for (b, row) in m.iter_mut().enumerate() {
        row[b] += 1.0 - p_m;
        row[flip.apply(b)] += p_m;
    }
    let mut mz = [[0.0; 4]; 4];
    for b in 0..4 {
        for e in 0..4 {
            for l in 0..4 {
                mz[b][l] += m[b][e] * m[e][l];
            }
        }
    }
    let h = frame_exchange_permutation();
    let mut mx = [[0.0; 4]; 4];
    for d in 0..4 {
        for n in 0..4 {
            mx[d][n] = mz[h.apply(d)][h.apply(n)];
        }
    }
    (mz, mx)
}

/// Bilateral Hadamard on a Bell pair: swaps labels 1 and 3.
pub fn frame_exchange_permutation() -> PauliPermutation {
    PauliPermutation::new([0, 3, 2, 1]).expect("static permutation")
}

/// Single selection before post-selection, `S~[i][l][j][k]`: source output
/// `i` (frame exchanged), measured ancilla label `l`, inputs `(j, k)`.
pub fn single_preselection(noise: &NoiseParams) -> [[[[f64; 4]; 4]; 4]; 4] {
    let el = ElementaryTensors::new(noise);
    let g = el.noisy_gate();
    let mut out = [[[[0.0; 4]; 4]; 4]; 4];
    for j in 0..4 {
        for k in 0..4 {
            let row = &g[pair(j, k)];
            for a in 0..4 {
                for b in 0..4 {
                    let w = row[pair(a, b)];
                    if w == 0.0 {
                        continue;
                    }
                    for l in 0..4 {
                        out[el.hh.apply(a)][l][j][k] += w * el.mz[b][l];
                    }
                }
            }
        }
    }
    out
}

pub fn build_single_tensor(noise: &NoiseParams) -> SingleTensor {
    let full = single_preselection(noise);
    let mut t = SingleTensor::zeros();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                t.s[i][j][k] = Z_KEPT.iter().map(|&l| full[i][l][j][k]).sum();
            }
        }
    }
    t
}

/// Double selection before post-selection, indexed
/// `[i][m][n][j][k][l]` with `m` the Z-measured and `n` the X-measured label.
pub fn double_preselection(noise: &NoiseParams) -> [[[[[[f64; 4]; 4]; 4]; 4]; 4]; 4] {
    let el = ElementaryTensors::new(noise);
    let g = el.noisy_gate();
    let mut out = [[[[[[0.0; 4]; 4]; 4]; 4]; 4]; 4];
    let t = &mut out;
    for j in 0..4 {
        for k in 0..4 {
            for l in 0..4 {
                // Source controls primary ancilla, then secondary controls primary.
                for a in 0..4 {
                    for b in 0..4 {
                        let w1 = g[pair(j, k)][pair(a, b)];
                        if w1 == 0.0 {
                            continue;
                        }
                        for d in 0..4 {
                            for c in 0..4 {
                                let w2 = g[pair(l, b)][pair(d, c)];
                                if w2 == 0.0 {
                                    continue;
                                }
                                let w = w1 * w2;
                                for m in 0..4 {
                                    for n in 0..4 {
                                        t[el.hh.apply(a)][m][n][j][k][l] +=
                                            w * el.mz[c][m] * el.mx[d][n];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn build_double_tensor(noise: &NoiseParams) -> DoubleTensor {
    let el = ElementaryTensors::new(noise);
    let g = el.noisy_gate();
    let keep_z: [f64; 4] = std::array::from_fn(|c| Z_KEPT.iter().map(|&m| el.mz[c][m]).sum());
    let keep_x: [f64; 4] = std::array::from_fn(|d| X_KEPT.iter().map(|&n| el.mx[d][n]).sum());
    let mut t = DoubleTensor::zeros();
    for j in 0..4 {
        for k in 0..4 {
            for l in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let w1 = g[pair(j, k)][pair(a, b)];
                        if w1 == 0.0 {
                            continue;
                        }
                        let mut kept = 0.0;
                        for d in 0..4 {
                            for c in 0..4 {
                                kept += g[pair(l, b)][pair(d, c)] * keep_z[c] * keep_x[d];
                            }
                        }
                        t.d[el.hh.apply(a)][j][k][l] += w1 * kept;
                    }
                }
            }
        }
    }
    t
}
