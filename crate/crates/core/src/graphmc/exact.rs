//! Exact recurrence on label distributions for small graphs.
//!
//! Tracks the full probability vector over `2^n` labels instead of samples.
//! Gate and measurement errors are independent per vertex, so each noise
//! layer is an XOR convolution, applied in the Walsh-Hadamard domain. The
//! joint state of all copies needs `2^(n * copies)` entries.

use super::graph::{Color, TwoColorableGraph};
use super::mc::{physical_flips, role_for_round};
use crate::bell::{ChannelParams, NoiseParams, Pauli};
use crate::dynamics::Scheme;
use crate::error::{Error, Result};

/// Largest joint register, in bits, the exact recurrence accepts.
pub const MAX_JOINT_BITS: usize = 21;

/// In-place unnormalized Walsh-Hadamard transform.
fn wht(a: &mut [f64]) {
    let mut h = 1;
    while h < a.len() {
        for block in a.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*x, *y);
                *x = u + v;
                *y = u - v;
            }
        }
        h *= 2;
    }
}

/// XOR-convolves `a` with the distribution whose transform is `spectrum`.
fn convolve(a: &mut [f64], spectrum: &[f64]) {
    wht(a);
    let scale = 1.0 / a.len() as f64;
    for (x, s) in a.iter_mut().zip(spectrum) {
        *x *= s * scale;
    }
    wht(a);
}

/// Transform of the flip distribution of one noisy gate layer, with the
/// control copy at bit offset `sh_c` and the target copy at `sh_t`.
fn gate_spectrum(
    g: &TwoColorableGraph,
    noise: &NoiseParams,
    role: Color,
    bits: usize,
    sh_c: usize,
    sh_t: usize,
) -> Vec<f64> {
    let mut total = vec![1.0; 1 << bits];
    let mut w = vec![0.0; 1 << bits];
    for q in 0..g.n() {
        w.iter_mut().for_each(|x| *x = 0.0);
        for pc in Pauli::ALL {
            for pt in Pauli::ALL {
                let mask = (physical_flips(g, q, pc, role) << sh_c)
                    | (physical_flips(g, q, pt, role) << sh_t);
                w[mask as usize] += noise.p(pc.index(), pt.index());
            }
        }
        wht(&mut w);
        for (t, x) in total.iter_mut().zip(&w) {
            *t *= x;
        }
    }
    total
}

/// Probability that a copy with labels `m` passes the checks of `checked`.
fn acceptance(g: &TwoColorableGraph, checked: u64, p_m: f64) -> Vec<f64> {
    let n = g.n();
    let mut syndromes = vec![0.0; 1 << n];
    for f in 0u64..1 << n {
        let weight: f64 = (0..n)
            .map(|q| if f >> q & 1 == 1 { p_m } else { 1.0 - p_m })
            .product();
        let mut s = 0u64;
        let mut c = checked;
        while c != 0 {
            let j = c.trailing_zeros() as usize;
            c &= c - 1;
            if (f >> j & 1) as u32 ^ ((f & g.neighbors(j)).count_ones() % 2) == 1 {
                s |= 1 << j;
            }
        }
        syndromes[s as usize] += weight;
    }
    (0u64..1 << n)
        .map(|m| {
            syndromes
                .iter()
                .enumerate()
                .filter(|&(s, _)| (m ^ s as u64) & checked == 0)
                .map(|(_, w)| w)
                .sum()
        })
        .collect()
}

struct RoleData {
    gate1: Vec<f64>,
    gate2: Option<Vec<f64>>,
    accept1: Vec<f64>,
    accept2: Option<Vec<f64>>,
}

/// One round of the multipartite protocol as a map on label distributions.
pub struct ExactGraphMap {
    scheme: Scheme,
    n: usize,
    masks: [u64; 2],
    roles: [RoleData; 2],
}

impl ExactGraphMap {
    pub fn new(g: &TwoColorableGraph, scheme: Scheme, noise: &NoiseParams) -> Result<Self> {
        let n = g.n();
        let copies = scheme.copies_per_round();
        let bits = n * copies;
        if bits > MAX_JOINT_BITS {
            return Err(Error::InvalidArgument(format!(
                "exact recurrence needs {bits} joint bits, limit is {MAX_JOINT_BITS}"
            )));
        }
        let build = |role: Color| {
            let double = scheme == Scheme::Double;
            RoleData {
                gate1: gate_spectrum(g, noise, role, bits, 0, n),
                gate2: double.then(|| gate_spectrum(g, noise, role, bits, 2 * n, n)),
                accept1: acceptance(g, g.color_mask(role), noise.p_m()),
                accept2: double.then(|| acceptance(g, g.color_mask(role.other()), noise.p_m())),
            }
        };
        Ok(Self {
            scheme,
            n,
            masks: [g.color_mask(Color::A), g.color_mask(Color::B)],
            roles: [build(Color::A), build(Color::B)],
        })
    }

    /// Normalized output distribution and success probability.
    pub fn apply(&self, p: &[f64], role: Color) -> Result<(Vec<f64>, f64)> {
        let n = self.n;
        let size = 1usize << n;
        if p.len() != size {
            return Err(Error::InvalidArgument(format!(
                "distribution length {} != 2^{n}",
                p.len()
            )));
        }
        let low = (size - 1) as u64;
        let a = self.masks[role as usize];
        let b = self.masks[role.other() as usize];
        let data = &self.roles[role as usize];
        let copies = self.scheme.copies_per_round();
        let joint_len = 1usize << (n * copies);

        let mut joint = vec![0.0; joint_len];
        for (idx, x) in joint.iter_mut().enumerate() {
            let idx = idx as u64;
            *x = (0..copies)
                .map(|c| p[(idx >> (c * n) & low) as usize])
                .product();
        }

        let mut after = vec![0.0; joint_len];
        for (idx, &x) in joint.iter().enumerate() {
            let idx = idx as u64;
            let (m0, m1, rest) = (idx & low, idx >> n & low, idx >> (2 * n));
            let n1 = m1 ^ (m0 & a);
            let n0 = m0 ^ (n1 & b);
            after[(n0 | n1 << n | rest << (2 * n)) as usize] = x;
        }
        convolve(&mut after, &data.gate1);

        if let Some(spec2) = &data.gate2 {
            joint.iter_mut().for_each(|x| *x = 0.0);
            for (idx, &x) in after.iter().enumerate() {
                let idx = idx as u64;
                let (m0, m1, m2) = (idx & low, idx >> n & low, idx >> (2 * n));
                let n1 = m1 ^ (m2 & a);
                let n2 = m2 ^ (n1 & b);
                joint[(m0 | n1 << n | n2 << (2 * n)) as usize] = x;
            }
            convolve(&mut joint, spec2);
            std::mem::swap(&mut joint, &mut after);
        }

        let mut out = vec![0.0; size];
        for (idx, &x) in after.iter().enumerate() {
            let idx = idx as u64;
            let mut w = x * data.accept1[(idx >> n & low) as usize];
            if let Some(acc2) = &data.accept2 {
                w *= acc2[(idx >> (2 * n)) as usize];
            }
            out[(idx & low) as usize] += w;
        }
        let success: f64 = out.iter().sum();
        if success <= 0.0 {
            return Err(Error::NeverSucceeds);
        }
        out.iter_mut().for_each(|x| *x /= success);
        Ok((out, success))
    }
}

/// Label distribution of one channel copy; see [`super::mc::sample_channel`].
pub fn channel_distribution(
    g: &TwoColorableGraph,
    f_ch: ChannelParams,
    role: Color,
    sender: Option<usize>,
) -> Vec<f64> {
    let size = 1usize << g.n();
    let f = f_ch.fidelity();
    let mut spectrum = vec![1.0; size];
    let mut w = vec![0.0; size];
    for q in (0..g.n()).filter(|&q| Some(q) != sender) {
        w.iter_mut().for_each(|x| *x = 0.0);
        w[0] += f;
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            w[physical_flips(g, q, p, role) as usize] += (1.0 - f) / 3.0;
        }
        wht(&mut w);
        for (s, x) in spectrum.iter_mut().zip(&w) {
            *s *= x;
        }
    }
    let mut dist = vec![0.0; size];
    dist[0] = 1.0;
    convolve(&mut dist, &spectrum);
    dist
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactRound {
    pub round: usize,
    pub fidelity: f64,
    pub success: f64,
}

/// Runs `rounds` rounds from `initial`, alternating frames as the Monte
/// Carlo engine does. Entry 0 is the initial distribution.
pub fn exact_recurrence(
    g: &TwoColorableGraph,
    scheme: Scheme,
    noise: &NoiseParams,
    initial: Vec<f64>,
    rounds: usize,
) -> Result<Vec<ExactRound>> {
    let map = ExactGraphMap::new(g, scheme, noise)?;
    let mut p = initial;
    let mut out = vec![ExactRound {
        round: 0,
        fidelity: p[0],
        success: 1.0,
    }];
    for round in 1..=rounds {
        let (next, success) = map.apply(&p, role_for_round(round))?;
        p = next;
        out.push(ExactRound {
            round,
            fidelity: p[0],
            success,
        });
    }
    Ok(out)
}
