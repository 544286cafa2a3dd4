//! Monte Carlo recurrence purification on graph states by label tracking.
//!
//! Each copy is a graph-basis state `|Psi_mu>` stored as the bit mask `mu`.
//! The physical frame carries Hadamards on one color class, the *role*
//! color. With the role on A, a physical bilateral C-Not from copy `s` to
//! copy `t` acts as `mu_t ^= mu_s` on A vertices and `mu_s ^= mu_t` on B
//! vertices, and a physical Z measurement of copy `t` checks the `K_j` of
//! the A vertices. The frame exchange between rounds moves the role to the
//! other color. On the two-vertex graph this reproduces the bipartite tensor
//! maps label for label.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{pauli_label_flips, Color, TwoColorableGraph};
use crate::bell::{ChannelParams, NoiseParams, Pauli};
use crate::dynamics::Scheme;
use crate::error::{Error, Result};

/// Attempts per independently seeded RNG stream.
pub const CHUNK: usize = 1024;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

/// Graph-basis labels `mu_j` of one copy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LabelState(pub u64);

impl LabelState {
    pub const TARGET: LabelState = LabelState(0);

    pub fn is_target(self) -> bool {
        self.0 == 0
    }

    pub fn get(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }
}

/// Color carrying the physical Hadamards in round `round` (1-based); the
/// channel at round 0 shares the frame of round 1.
pub fn role_for_round(round: usize) -> Color {
    if round % 2 == 1 || round == 0 {
        Color::A
    } else {
        Color::B
    }
}

/// Label flips of a physical Pauli on vertex `q` under `role`.
pub fn physical_flips(g: &TwoColorableGraph, q: usize, p: Pauli, role: Color) -> u64 {
    let p = if g.color(q) == role {
        p.hadamard_conjugate()
    } else {
        p
    };
    pauli_label_flips(g, q, p)
}

/// Randomness consumed by [`mc_round`].
pub trait ErrorSource {
    /// `(control, target)` Pauli pair following one physical C-Not.
    fn gate_error(&mut self, noise: &NoiseParams) -> (Pauli, Pauli);
    /// Whether one measurement outcome is misreported.
    fn outcome_flip(&mut self, p_m: f64) -> bool;
}

impl<R: Rng + ?Sized> ErrorSource for R {
    fn gate_error(&mut self, noise: &NoiseParams) -> (Pauli, Pauli) {
        noise.gate_error_from_uniform(self.gen::<f64>())
    }

    fn outcome_flip(&mut self, p_m: f64) -> bool {
        p_m > 0.0 && self.gen::<f64>() < p_m
    }
}

/// One copy after the noisy channel. `sender` keeps its qubit, so the
/// two-vertex graph with a sender reproduces the bipartite channel vector.
pub fn sample_channel<R: Rng + ?Sized>(
    g: &TwoColorableGraph,
    f_ch: ChannelParams,
    role: Color,
    sender: Option<usize>,
    rng: &mut R,
) -> LabelState {
    let f = f_ch.fidelity();
    let third = (1.0 - f) / 3.0;
    let mut mu = 0;
    for q in 0..g.n() {
        if Some(q) == sender {
            continue;
        }
        let u: f64 = rng.gen();
        if u < f {
            continue;
        }
        let k = (((u - f) / third) as usize).min(2);
        mu ^= physical_flips(g, q, Pauli::ALL[k + 1], role);
    }
    LabelState(mu)
}

fn parity(x: u64) -> bool {
    x.count_ones() % 2 == 1
}

/// Whether every stabilizer check of the `checked` vertices passes on a
/// measured copy with labels `mu`.
fn checks_pass<E: ErrorSource + ?Sized>(
    g: &TwoColorableGraph,
    mu: u64,
    checked: u64,
    p_m: f64,
    src: &mut E,
) -> bool {
    let mut flips = 0u64;
    for q in 0..g.n() {
        if src.outcome_flip(p_m) {
            flips |= 1 << q;
        }
    }
    let mut c = checked;
    while c != 0 {
        let j = c.trailing_zeros() as usize;
        c &= c - 1;
        let syndrome = (mu >> j & 1 == 1) ^ (flips >> j & 1 == 1) ^ parity(flips & g.neighbors(j));
        if syndrome {
            return false;
        }
    }
    true
}

/// One noisy multilateral round on `copies` (source first).
///
/// Draws from `src` in a fixed order: gate-1 errors per vertex, gate-2
/// errors per vertex (double only), copy-1 outcome flips, copy-2 outcome
/// flips (double only).
pub fn mc_round<E: ErrorSource + ?Sized>(
    scheme: Scheme,
    copies: &[LabelState],
    g: &TwoColorableGraph,
    noise: &NoiseParams,
    role: Color,
    src: &mut E,
) -> Result<(bool, LabelState)> {
    let expected = scheme.copies_per_round();
    if copies.len() != expected {
        return Err(Error::CopyCount {
            scheme: scheme.name(),
            expected,
            got: copies.len(),
        });
    }
    let a = g.color_mask(role);
    let b = g.color_mask(role.other());
    let (mut m0, mut m1) = (copies[0].0, copies[1].0);

    m1 ^= m0 & a;
    m0 ^= m1 & b;
    for q in 0..g.n() {
        let (pc, pt) = src.gate_error(noise);
        m0 ^= physical_flips(g, q, pc, role);
        m1 ^= physical_flips(g, q, pt, role);
    }

    let mut m2 = 0;
    if scheme == Scheme::Double {
        m2 = copies[2].0;
        m1 ^= m2 & a;
        m2 ^= m1 & b;
        for q in 0..g.n() {
            let (pc, pt) = src.gate_error(noise);
            m2 ^= physical_flips(g, q, pc, role);
            m1 ^= physical_flips(g, q, pt, role);
        }
    }

    // Draw every outcome flip even after a failed check so the stream
    // position does not depend on the outcome.
    let mut accepted = checks_pass(g, m1, a, noise.p_m(), src);
    if scheme == Scheme::Double {
        accepted &= checks_pass(g, m2, b, noise.p_m(), src);
    }
    Ok((accepted, LabelState(m0)))
}

/// How the copies of a round are drawn from the survivors of the last one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Each survivor is used once; the population shrinks by the consumption
    /// factor every round and samples stay independent.
    #[default]
    Disjoint,
    /// Every round makes `samples` attempts on copies drawn with replacement
    /// from the survivors; suited to long runs toward a plateau.
    Bootstrap,
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disjoint" => Ok(Sampling::Disjoint),
            "bootstrap" => Ok(Sampling::Bootstrap),
            other => Err(Error::InvalidArgument(format!(
                "unknown sampling {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub graph: TwoColorableGraph,
    pub scheme: Scheme,
    pub noise: NoiseParams,
    pub f_ch: ChannelParams,
    pub rounds: usize,
    /// Attempts in round 1 (disjoint) or in every round (bootstrap).
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub sampling: Sampling,
    /// Vertex whose qubit bypasses the channel.
    #[serde(default)]
    pub sender: Option<usize>,
}

impl MCConfig {
    pub fn new(
        graph: TwoColorableGraph,
        scheme: Scheme,
        noise: NoiseParams,
        f_ch: ChannelParams,
    ) -> Self {
        Self {
            graph,
            scheme,
            noise,
            f_ch,
            rounds: 10,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            sampling: Sampling::Disjoint,
            sender: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("samples must be at least 1".into()));
        }
        if let Some(s) = self.sender {
            if s >= self.graph.n() {
                return Err(Error::InvalidArgument(format!(
                    "sender {s} is not a vertex"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundStats {
    pub round: usize,
    pub samples_in: usize,
    pub accepted: usize,
    pub fidelity: f64,
    pub stderr: f64,
    pub acceptance_rate: f64,
}

impl RoundStats {
    fn new(round: usize, samples_in: usize, accepted: usize, on_target: usize) -> Self {
        let fidelity = on_target as f64 / accepted as f64;
        Self {
            round,
            samples_in,
            accepted,
            fidelity,
            stderr: binomial_stderr(fidelity, accepted),
            acceptance_rate: accepted as f64 / samples_in as f64,
        }
    }

    pub const CSV_HEADER: [&'static str; 6] = [
        "round",
        "samples_in",
        "accepted",
        "fidelity",
        "stderr",
        "acceptance_rate",
    ];
}

pub fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    /// Round 0 describes the channel output.
    pub rounds: Vec<RoundStats>,
    /// `prod_n acceptance_n / N_A`.
    pub yield_estimate: f64,
}

impl MCResult {
    pub fn final_round(&self) -> &RoundStats {
        self.rounds.last().expect("round 0 always present")
    }

    /// Fidelity and standard error pooled over the last `k` rounds.
    pub fn plateau(&self, k: usize) -> (f64, f64) {
        let tail = &self.rounds[self.rounds.len().saturating_sub(k.max(1))..];
        let accepted: usize = tail.iter().map(|r| r.accepted).sum();
        let on_target: f64 = tail.iter().map(|r| r.fidelity * r.accepted as f64).sum();
        let f = on_target / accepted as f64;
        (f, binomial_stderr(f, accepted))
    }
}

fn chunk_rng(seed: u64, round: usize, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((round as u64) << 32) | chunk as u64);
    rng
}

/// Runs the recurrence and reports per-round statistics.
pub fn mc_purification(cfg: &MCConfig) -> Result<MCResult> {
    cfg.validate()?;
    let g = &cfg.graph;
    let n_a = cfg.scheme.copies_per_round();
    let initial = match cfg.sampling {
        Sampling::Disjoint => cfg.samples * n_a,
        Sampling::Bootstrap => cfg.samples,
    };

    let role0 = role_for_round(0);
    let mut pool: Vec<LabelState> = (0..initial.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let mut rng = chunk_rng(cfg.seed, 0, c);
            let len = CHUNK.min(initial - c * CHUNK);
            (0..len)
                .map(|_| sample_channel(g, cfg.f_ch, role0, cfg.sender, &mut rng))
                .collect::<Vec<_>>()
        })
        .collect();
    let on_target = pool.iter().filter(|s| s.is_target()).count();
    let mut rounds = vec![RoundStats::new(0, initial, initial, on_target)];
    let mut yield_estimate = 1.0;

    for round in 1..=cfg.rounds {
        let attempts = match cfg.sampling {
            Sampling::Disjoint => pool.len() / n_a,
            Sampling::Bootstrap => cfg.samples,
        };
        if attempts == 0 || pool.is_empty() {
            return Err(Error::StatisticsExhausted { round });
        }
        let role = role_for_round(round);
        let pool_ref = &pool;
        let survivors: Vec<LabelState> = (0..attempts.div_ceil(CHUNK))
            .into_par_iter()
            .flat_map_iter(|c| {
                let mut rng = chunk_rng(cfg.seed, round, c);
                let start = c * CHUNK;
                let end = (start + CHUNK).min(attempts);
                let mut out = Vec::new();
                let mut copies = [LabelState::TARGET; 3];
                for i in start..end {
                    for (k, slot) in copies[..n_a].iter_mut().enumerate() {
                        *slot = match cfg.sampling {
                            Sampling::Disjoint => pool_ref[i * n_a + k],
                            Sampling::Bootstrap => pool_ref[rng.gen_range(0..pool_ref.len())],
                        };
                    }
                    let (ok, state) =
                        mc_round(cfg.scheme, &copies[..n_a], g, &cfg.noise, role, &mut rng)
                            .expect("copy count matches scheme");
                    if ok {
                        out.push(state);
                    }
                }
                out
            })
            .collect();
        if survivors.is_empty() {
            return Err(Error::StatisticsExhausted { round });
        }
        let on_target = survivors.iter().filter(|s| s.is_target()).count();
        let stats = RoundStats::new(round, attempts, survivors.len(), on_target);
        yield_estimate *= stats.acceptance_rate / n_a as f64;
        rounds.push(stats);
        pool = survivors;
    }
    Ok(MCResult {
        rounds,
        yield_estimate,
    })
}

/// First-order fidelity ceiling `1 - n (4/15) p_g` for uniform noise.
pub fn multi_upper_bound(n: usize, p_g: f64) -> f64 {
    1.0 - n as f64 * (4.0 / 15.0) * p_g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::label_from_bits;
    use crate::tensor::{build_double_tensor, build_single_tensor};
    use proptest::prelude::*;
    use std::collections::VecDeque;

    /// Replays a fixed sequence of errors.
    #[derive(Default)]
    struct Script {
        gates: VecDeque<(Pauli, Pauli)>,
        flips: VecDeque<bool>,
    }

    impl ErrorSource for Script {
        fn gate_error(&mut self, _: &NoiseParams) -> (Pauli, Pauli) {
            self.gates.pop_front().unwrap_or((Pauli::I, Pauli::I))
        }

        fn outcome_flip(&mut self, _: f64) -> bool {
            self.flips.pop_front().unwrap_or(false)
        }
    }

    /// Bell label of a two-vertex label state: bit on the role vertex.
    fn bell_label(mu: LabelState, role: Color) -> usize {
        let (bit, phase) = match role {
            Color::A => (mu.get(0), mu.get(1)),
            Color::B => (mu.get(1), mu.get(0)),
        };
        label_from_bits(bit as u8, phase as u8)
    }

    fn two_vertex_state(label: usize, role: Color) -> LabelState {
        let (bit, phase) = crate::bell::label_bits(label);
        let (m0, m1) = match role {
            Color::A => (bit, phase),
            Color::B => (phase, bit),
        };
        LabelState(m0 as u64 | (m1 as u64) << 1)
    }

    #[test]
    fn ideal_round_on_target() {
        let g = TwoColorableGraph::steane7();
        let ideal = NoiseParams::ideal();
        for scheme in Scheme::ALL {
            let copies = vec![LabelState::TARGET; scheme.copies_per_round()];
            let (ok, out) = mc_round(
                scheme,
                &copies,
                &g,
                &ideal,
                Color::A,
                &mut Script::default(),
            )
            .unwrap();
            assert!(ok && out.is_target());
        }
    }

    #[test]
    fn copy_count_checked() {
        let g = TwoColorableGraph::bell_pair();
        let err = mc_round(
            Scheme::Double,
            &[LabelState::TARGET; 2],
            &g,
            &NoiseParams::ideal(),
            Color::A,
            &mut Script::default(),
        );
        assert_eq!(
            err,
            Err(Error::CopyCount {
                scheme: "double",
                expected: 3,
                got: 2
            })
        );
    }

    #[test]
    fn double_detects_propagated_phase_error() {
        // Phase-type label on copy 1 (B vertices under role A).
        let g = TwoColorableGraph::steane7();
        let b = g.color_mask(Color::B);
        let copies = [
            LabelState::TARGET,
            LabelState(b & b.wrapping_neg()),
            LabelState::TARGET,
        ];
        let ideal = NoiseParams::ideal();
        let (single_ok, single_out) = mc_round(
            Scheme::Single,
            &copies[..2],
            &g,
            &ideal,
            Color::A,
            &mut Script::default(),
        )
        .unwrap();
        assert!(single_ok && !single_out.is_target());
        let (ok, _) = mc_round(
            Scheme::Double,
            &copies,
            &g,
            &ideal,
            Color::A,
            &mut Script::default(),
        )
        .unwrap();
        assert!(!ok);
    }

    #[test]
    fn ideal_two_vertex_matches_tables() {
        let g = TwoColorableGraph::bell_pair();
        let ideal = NoiseParams::ideal();
        let s = build_single_tensor(&ideal);
        let d = build_double_tensor(&ideal);
        for j in 0..4 {
            for k in 0..4 {
                let copies = [two_vertex_state(j, Color::A), two_vertex_state(k, Color::A)];
                let (ok, out) = mc_round(
                    Scheme::Single,
                    &copies,
                    &g,
                    &ideal,
                    Color::A,
                    &mut Script::default(),
                )
                .unwrap();
                let i = bell_label(out, Color::B);
                assert_eq!(ok, s.success(j, k) > 0.5, "({j},{k})");
                if ok {
                    assert_eq!(s.s[i][j][k], 1.0);
                }
                for l in 0..4 {
                    let copies = [copies[0], copies[1], two_vertex_state(l, Color::A)];
                    let (ok, out) = mc_round(
                        Scheme::Double,
                        &copies,
                        &g,
                        &ideal,
                        Color::A,
                        &mut Script::default(),
                    )
                    .unwrap();
                    assert_eq!(ok, d.success(j, k, l) > 0.5, "({j},{k},{l})");
                    if ok {
                        assert_eq!(d.d[bell_label(out, Color::B)][j][k][l], 1.0);
                    }
                }
            }
        }
    }

    /// Enumerates every gate error and outcome flip of a two-vertex single
    /// round and weights it by its probability.
    fn enumerate_single(noise: &NoiseParams, role: Color) -> [[[f64; 4]; 4]; 4] {
        let mut t = [[[0.0; 4]; 4]; 4];
        let pairs: Vec<((Pauli, Pauli), f64)> = Pauli::ALL
            .iter()
            .flat_map(|&c| {
                Pauli::ALL
                    .iter()
                    .map(move |&d| ((c, d), noise.p(c.index(), d.index())))
            })
            .collect();
        let g = TwoColorableGraph::bell_pair();
        for j in 0..4 {
            for k in 0..4 {
                let copies = [two_vertex_state(j, role), two_vertex_state(k, role)];
                for (e0, w0) in &pairs {
                    for (e1, w1) in &pairs {
                        for flips in 0..4u8 {
                            let w_flip: f64 = (0..2)
                                .map(|b| {
                                    if flips >> b & 1 == 1 {
                                        noise.p_m()
                                    } else {
                                        1.0 - noise.p_m()
                                    }
                                })
                                .product();
                            let mut script = Script {
                                gates: VecDeque::from([*e0, *e1]),
                                flips: VecDeque::from([flips & 1 == 1, flips & 2 == 2]),
                            };
                            let (ok, out) =
                                mc_round(Scheme::Single, &copies, &g, noise, role, &mut script)
                                    .unwrap();
                            if ok {
                                t[bell_label(out, role.other())][j][k] += w0 * w1 * w_flip;
                            }
                        }
                    }
                }
            }
        }
        t
    }

    #[test]
    fn exact_enumeration_matches_single_tensor() {
        let mut table = [[0.0; 4]; 4];
        for (x, v) in table.iter_mut().flatten().enumerate() {
            *v = 0.002 * (x as f64 + 1.0);
        }
        table[0][0] = 0.0;
        table[0][0] = 1.0 - table.iter().flatten().sum::<f64>();
        let noise = NoiseParams::new(crate::bell::NoiseKind::Custom { table }, 0.03).unwrap();
        let s = build_single_tensor(&noise);
        for role in [Color::A, Color::B] {
            let t = enumerate_single(&noise, role);
            for i in 0..4 {
                for j in 0..4 {
                    for k in 0..4 {
                        assert!(
                            (t[i][j][k] - s.s[i][j][k]).abs() < 1e-14,
                            "{role:?} [{i}][{j}][{k}]"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn channel_marginals_match_bipartite_vector() {
        let g = TwoColorableGraph::bell_pair();
        let f_ch = ChannelParams::new(0.7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[bell_label(
                sample_channel(&g, f_ch, Color::A, Some(0), &mut rng),
                Color::A,
            )] += 1;
        }
        let expect = [0.7, 0.1, 0.1, 0.1];
        for (c, e) in counts.iter().zip(expect) {
            let f = *c as f64 / n as f64;
            assert!((f - e).abs() < 4.0 * binomial_stderr(e, n), "{counts:?}");
        }
    }

    #[test]
    fn noiseless_channel_gives_target() {
        let g = TwoColorableGraph::steane7();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..100).all(|_| sample_channel(
            &g,
            ChannelParams::new(1.0).unwrap(),
            Color::A,
            None,
            &mut rng
        )
        .is_target()));
    }

    fn small_config(sampling: Sampling) -> MCConfig {
        let mut cfg = MCConfig::new(
            TwoColorableGraph::steane7(),
            Scheme::Double,
            NoiseParams::uniform(0.02, 0.01).unwrap(),
            ChannelParams::new(0.95).unwrap(),
        );
        cfg.rounds = 3;
        cfg.samples = 5000;
        cfg.seed = 42;
        cfg.sampling = sampling;
        cfg
    }

    #[test]
    fn deterministic_across_thread_counts() {
        for sampling in [Sampling::Disjoint, Sampling::Bootstrap] {
            let cfg = small_config(sampling);
            let one = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            let four = rayon::ThreadPoolBuilder::new()
                .num_threads(4)
                .build()
                .unwrap();
            let a = one.install(|| mc_purification(&cfg)).unwrap();
            let b = four.install(|| mc_purification(&cfg)).unwrap();
            assert_eq!(a, b);
            assert_ne!(
                a,
                mc_purification(&MCConfig {
                    seed: 43,
                    ..cfg.clone()
                })
                .unwrap()
            );
        }
    }

    #[test]
    fn exhausted_statistics() {
        let mut cfg = small_config(Sampling::Disjoint);
        cfg.samples = 3;
        cfg.rounds = 20;
        assert!(matches!(
            mc_purification(&cfg),
            Err(Error::StatisticsExhausted { .. })
        ));
    }

    #[test]
    fn result_bookkeeping() {
        let r = mc_purification(&small_config(Sampling::Disjoint)).unwrap();
        assert_eq!(r.rounds.len(), 4);
        assert_eq!(r.rounds[1].samples_in, 5000);
        assert_eq!(r.rounds[2].samples_in, r.rounds[1].accepted / 3);
        let expected_yield: f64 = r.rounds[1..]
            .iter()
            .map(|s| s.acceptance_rate / 3.0)
            .product();
        assert!((r.yield_estimate - expected_yield).abs() < 1e-15);
        for s in &r.rounds {
            assert!((0.0..=1.0).contains(&s.fidelity));
            assert!((s.stderr - binomial_stderr(s.fidelity, s.accepted)).abs() < 1e-15);
        }
    }

    #[test]
    fn bound_examples() {
        assert!((multi_upper_bound(7, 0.015) - 0.972).abs() < 1e-12);
        assert_eq!(multi_upper_bound(7, 0.0), 1.0);
    }

    proptest! {
        /// Under identical first-gate errors and copy-1 outcome flips, with a
        /// clean verifier, double selection accepts only what single accepts.
        #[test]
        fn double_is_stricter_than_single(
            m0 in 0u64..128, m1 in 0u64..128,
            errs in proptest::collection::vec((0usize..4, 0usize..4), 7),
            flips in proptest::collection::vec(any::<bool>(), 7),
            role_a in any::<bool>(),
        ) {
            let g = TwoColorableGraph::steane7();
            let noise = NoiseParams::uniform(0.1, 0.1).unwrap();
            let role = if role_a { Color::A } else { Color::B };
            let gates: VecDeque<_> = errs.iter().map(|&(c, t)| (Pauli::ALL[c], Pauli::ALL[t])).collect();
            let mut single = Script { gates: gates.clone(), flips: flips.iter().copied().collect() };
            let mut double_gates = gates;
            double_gates.extend(std::iter::repeat((Pauli::I, Pauli::I)).take(7));
            let mut double = Script { gates: double_gates, flips: flips.iter().copied().collect() };
            let s = mc_round(Scheme::Single, &[LabelState(m0), LabelState(m1)], &g, &noise, role, &mut single).unwrap();
            let d = mc_round(Scheme::Double, &[LabelState(m0), LabelState(m1), LabelState::TARGET], &g, &noise, role, &mut double).unwrap();
            prop_assert!(!d.0 || s.0);
            prop_assert_eq!(s.1, d.1);
        }
    }
}
