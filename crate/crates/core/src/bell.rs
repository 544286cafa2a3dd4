//! Bell-diagonal states, Pauli label permutations and noise parameters.
//!
//! Bell labels follow `|phi_j> = (sigma_j (x) sigma_0)(|00> + |11>)/sqrt(2)`,
//! so label 0 is the target state, 1 carries a bit flip, 3 a phase flip
//! and 2 both. Every other module indexes tensors with this convention.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-12;

/// Bell label as a (bit flip, phase flip) pair.
///
/// Labels 0..3 map to (0,0), (1,0), (1,1), (0,1).
#[inline]
pub const fn label_bits(label: usize) -> (u8, u8) {
    match label & 3 {
        0 => (0, 0),
        1 => (1, 0),
        2 => (1, 1),
        _ => (0, 1),
    }
}

#[inline]
pub const fn label_from_bits(bit: u8, phase: u8) -> usize {
    match (bit & 1, phase & 1) {
        (0, 0) => 0,
        (1, 0) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

/// Diagonal of a Bell-diagonal two-qubit state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BellVector([f64; 4]);

impl BellVector {
    pub const PURE: BellVector = BellVector([1.0, 0.0, 0.0, 0.0]);
    pub const MIXED: BellVector = BellVector([0.25; 4]);

    /// Validates an already normalized vector. Entries must lie in `[0, 1]`
    /// and sum to one within [`PROB_TOL`]; nothing is renormalized.
    pub fn new(f: [f64; 4]) -> Result<Self> {
        if f.iter()
            .any(|x| !x.is_finite() || *x < -PROB_TOL || *x > 1.0 + PROB_TOL)
        {
            return Err(Error::InvalidVector(format!("entries out of [0,1]: {f:?}")));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidVector(format!("sum is {sum}, expected 1")));
        }
        Ok(Self(f.map(|x| x.clamp(0.0, 1.0))))
    }

    /// Divides nonnegative weights by their sum.
    pub fn normalize(raw: [f64; 4]) -> Result<Self> {
        if raw.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidVector(format!(
                "weights must be finite and nonnegative: {raw:?}"
            )));
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::DegenerateState);
        }
        Ok(Self(raw.map(|x| x / sum)))
    }

    /// `C(phi_0)` for a depolarizing channel of fidelity `F_ch`.
    pub fn from_channel(ch: ChannelParams) -> Self {
        let f = ch.fidelity();
        let e = (1.0 - f) / 3.0;
        Self([f, e, e, e])
    }

    /// Overlap with the target state `phi_0`.
    #[inline]
    pub fn fidelity(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn as_array(&self) -> &[f64; 4] {
        &self.0
    }

    #[inline]
    pub fn get(&self, label: usize) -> f64 {
        self.0[label]
    }

    pub fn max_abs_diff(&self, other: &BellVector) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Relabels the state: the weight on `l` moves to `perm.apply(l)`.
    pub fn permuted(&self, perm: PauliPermutation) -> Self {
        let mut out = [0.0; 4];
        for (l, w) in self.0.iter().enumerate() {
            out[perm.apply(l)] += w;
        }
        Self(out)
    }
}

impl TryFrom<[f64; 4]> for BellVector {
    type Error = Error;

    fn try_from(f: [f64; 4]) -> Result<Self> {
        Self::new(f)
    }
}

impl From<BellVector> for [f64; 4] {
    fn from(v: BellVector) -> Self {
        v.0
    }
}

/// Shortcut for [`BellVector::normalize`].
pub fn normalize(raw: [f64; 4]) -> Result<BellVector> {
    BellVector::normalize(raw)
}

/// Shortcut for [`BellVector::from_channel`].
pub fn channel_initial_vector(ch: ChannelParams) -> BellVector {
    BellVector::from_channel(ch)
}

/// Single-qubit Pauli operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub const fn index(self) -> usize {
        match self {
            Pauli::I => 0,
            Pauli::X => 1,
            Pauli::Y => 2,
            Pauli::Z => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Pauli> {
        Self::ALL.get(i).copied()
    }

    /// Conjugation by a Hadamard: exchanges X and Z.
    pub const fn hadamard_conjugate(self) -> Pauli {
        match self {
            Pauli::X => Pauli::Z,
            Pauli::Z => Pauli::X,
            p => p,
        }
    }
}

/// A bijection on the Bell labels {0, 1, 2, 3}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliPermutation([usize; 4]);

const PAULI_TABLES: [[usize; 4]; 4] = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];

impl PauliPermutation {
    pub const IDENTITY: PauliPermutation = PauliPermutation([0, 1, 2, 3]);

    pub fn new(perm: [usize; 4]) -> Result<Self> {
        let mut seen = [false; 4];
        for &p in &perm {
            if p > 3 || seen[p] {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation"
                )));
            }
            seen[p] = true;
        }
        Ok(Self(perm))
    }

    #[inline]
    pub fn apply(&self, label: usize) -> usize {
        self.0[label]
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &PauliPermutation) -> PauliPermutation {
        PauliPermutation(first.0.map(|l| self.0[l]))
    }

    pub fn inverse(&self) -> PauliPermutation {
        let mut inv = [0; 4];
        for (l, &img) in self.0.iter().enumerate() {
            inv[img] = l;
        }
        PauliPermutation(inv)
    }

    pub fn as_array(&self) -> &[usize; 4] {
        &self.0
    }
}

/// Label permutation induced by `sigma_i` acting on either qubit of a Bell pair.
pub fn pauli_action(pauli: Pauli) -> PauliPermutation {
    PauliPermutation(PAULI_TABLES[pauli.index()])
}

/// How the 15 two-qubit gate error probabilities are distributed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseKind {
    /// `p_ij = p_g / 15` for every `(i, j) != (0, 0)`.
    Uniform { p_g: f64 },
    /// `p_i0 = p_0i = q_i`, `p_ij = q_i q_j` for distinct nonzero `i, j`.
    Kay { q: [f64; 3] },
    /// Full 4x4 table including `p_00`; must sum to one.
    Custom { table: [[f64; 4]; 4] },
}

impl NoiseKind {
    /// Kay distribution with `q_1 = q_2 = q_3 = p_g / 3`.
    pub fn kay_equal(p_g: f64) -> Self {
        NoiseKind::Kay { q: [p_g / 3.0; 3] }
    }
}

/// Two-qubit gate error table `p_ij` (`sigma_i` on the control, `sigma_j`
/// on the target) and measurement flip probability `p_m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseRepr")]
pub struct NoiseParams {
    kind: NoiseKind,
    table: [[f64; 4]; 4],
    p_m: f64,
    p_g: f64,
    #[serde(skip)]
    cumulative: [f64; 16],
}

impl NoiseParams {
    pub fn new(kind: NoiseKind, p_m: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p_m) {
            return Err(Error::InvalidNoise(format!("p_m = {p_m} outside [0, 1/2]")));
        }
        let (table, p_g) = match &kind {
            NoiseKind::Uniform { p_g } => {
                let p_g = *p_g;
                check_rate("p_g", p_g)?;
                let mut t = [[p_g / 15.0; 4]; 4];
                t[0][0] = 0.0;
                (t, p_g)
            }
            NoiseKind::Kay { q } => {
                for &qi in q {
                    check_rate("q_i", qi)?;
                }
                let mut t = [[0.0; 4]; 4];
                for i in 1..4 {
                    t[i][0] = q[i - 1];
                    t[0][i] = q[i - 1];
                    for j in 1..4 {
                        if i != j {
                            t[i][j] = q[i - 1] * q[j - 1];
                        }
                    }
                }
                (t, q.iter().sum())
            }
            NoiseKind::Custom { table } => {
                if table.iter().flatten().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidNoise("negative table entry".into()));
                }
                let total: f64 = table.iter().flatten().sum();
                if (total - 1.0).abs() > PROB_TOL {
                    return Err(Error::InvalidNoise(format!(
                        "table sums to {total}, expected 1"
                    )));
                }
                let mut t = *table;
                t[0][0] = 0.0;
                let p_g = t.iter().flatten().sum();
                (t, p_g)
            }
        };
        let errors: f64 = table.iter().flatten().sum();
        if errors >= 1.0 {
            return Err(Error::InvalidNoise(format!(
                "total gate error {errors} must be below 1"
            )));
        }
        let mut table = table;
        table[0][0] = 1.0 - errors;

        let mut cumulative = [0.0; 16];
        let mut acc = 0.0;
        for (k, c) in cumulative.iter_mut().enumerate() {
            acc += table[k / 4][k % 4];
            *c = acc;
        }
        cumulative[15] = f64::INFINITY;

        Ok(Self {
            kind,
            table,
            p_m,
            p_g,
            cumulative,
        })
    }

    pub fn uniform(p_g: f64, p_m: f64) -> Result<Self> {
        Self::new(NoiseKind::Uniform { p_g }, p_m)
    }

    pub fn ideal() -> Self {
        Self::uniform(0.0, 0.0).expect("noiseless parameters are valid")
    }

    pub fn kind(&self) -> &NoiseKind {
        &self.kind
    }

    pub fn table(&self) -> &[[f64; 4]; 4] {
        &self.table
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.table[i][j]
    }

    #[inline]
    pub fn p_m(&self) -> f64 {
        self.p_m
    }

    /// Nominal gate error rate. Equals [`Self::total_gate_error`] except for
    /// the Kay distribution, where it is `q_1 + q_2 + q_3`.
    #[inline]
    pub fn p_g(&self) -> f64 {
        self.p_g
    }

    /// `1 - p_00`.
    pub fn total_gate_error(&self) -> f64 {
        self.table.iter().flatten().sum::<f64>() - self.table[0][0]
    }

    /// Maps a uniform variate in `[0, 1)` to a `(control, target)` Pauli pair.
    #[inline]
    pub fn gate_error_from_uniform(&self, u: f64) -> (Pauli, Pauli) {
        let k = self.cumulative.iter().position(|&c| u < c).unwrap_or(15);
        (Pauli::ALL[k / 4], Pauli::ALL[k % 4])
    }
}

#[derive(Deserialize)]
struct NoiseRepr {
    kind: NoiseKind,
    p_m: f64,
}

impl TryFrom<NoiseRepr> for NoiseParams {
    type Error = Error;

    fn try_from(r: NoiseRepr) -> Result<Self> {
        NoiseParams::new(r.kind, r.p_m)
    }
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x < 0.0 {
        return Err(Error::InvalidNoise(format!(
            "{name} = {x} must be nonnegative"
        )));
    }
    if x >= 1.0 {
        return Err(Error::InvalidNoise(format!("{name} = {x} must be below 1")));
    }
    Ok(())
}

/// Builds a validated [`NoiseParams`].
pub fn make_noise(kind: NoiseKind, p_m: f64) -> Result<NoiseParams> {
    NoiseParams::new(kind, p_m)
}

/// Fidelity of the depolarizing channel that distributes the pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ChannelParams(f64);

impl ChannelParams {
    pub fn new(f_ch: f64) -> Result<Self> {
        if !(0.25..=1.0).contains(&f_ch) {
            return Err(Error::InvalidChannel(f_ch));
        }
        Ok(Self(f_ch))
    }

    #[inline]
    pub fn fidelity(&self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ChannelParams {
    type Error = Error;

    fn try_from(f: f64) -> Result<Self> {
        Self::new(f)
    }
}

impl From<ChannelParams> for f64 {
    fn from(c: ChannelParams) -> f64 {
        c.0
    }
}
