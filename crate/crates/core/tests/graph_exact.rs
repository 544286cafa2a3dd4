//! Monte Carlo against the exact distribution recurrence on the Steane graph.

use purify_core::graphmc::{channel_distribution, exact_recurrence, role_for_round, Sampling};
use purify_core::{
    mc_purification, ChannelParams, MCConfig, NoiseParams, Scheme, TwoColorableGraph,
};

fn steane_start(f_ch: f64) -> Vec<f64> {
    channel_distribution(
        &TwoColorableGraph::steane7(),
        ChannelParams::new(f_ch).unwrap(),
        role_for_round(0),
        None,
    )
}

#[test]
fn mc_tracks_exact_recurrence() {
    let g = TwoColorableGraph::steane7();
    for (scheme, p_g, p_m, seed) in [
        (Scheme::Single, 0.02, 0.01, 11),
        (Scheme::Double, 0.03, 0.0, 12),
    ] {
        let noise = NoiseParams::uniform(p_g, p_m).unwrap();
        let mut cfg = MCConfig::new(
            g.clone(),
            scheme,
            noise.clone(),
            ChannelParams::new(0.92).unwrap(),
        );
        cfg.rounds = 3;
        cfg.samples = 200_000;
        cfg.seed = seed;
        cfg.sampling = Sampling::Disjoint;
        let mc = mc_purification(&cfg).unwrap();
        let exact = exact_recurrence(&g, scheme, &noise, steane_start(0.92), 3).unwrap();
        for (m, e) in mc.rounds.iter().zip(&exact) {
            let tol = 4.0 * m.stderr.max(1.0 / m.accepted as f64);
            assert!(
                (m.fidelity - e.fidelity).abs() < tol,
                "{scheme} round {}: mc {} exact {}",
                m.round,
                m.fidelity,
                e.fidelity
            );
            if m.round > 0 {
                let acc_err = (e.success * (1.0 - e.success) / m.samples_in as f64).sqrt();
                assert!(
                    (m.acceptance_rate - e.success).abs() < 4.0 * acc_err,
                    "{scheme} round {}",
                    m.round
                );
            }
        }
    }
}

/// Fidelity after `rounds` rounds from a perfect channel with `p_g = p_m = p`.
fn exact_after(scheme: Scheme, p: f64, rounds: usize) -> f64 {
    let g = TwoColorableGraph::steane7();
    let noise = NoiseParams::uniform(p, p).unwrap();
    exact_recurrence(&g, scheme, &noise, steane_start(1.0), rounds).unwrap()[rounds].fidelity
}

#[test]
fn single_selection_collapse_bracket() {
    assert!(exact_after(Scheme::Single, 0.0603, 300) > 0.5);
    assert!(exact_after(Scheme::Single, 0.0606, 300) < 0.01);
}

#[test]
fn double_selection_collapse_bracket() {
    assert!(exact_after(Scheme::Double, 0.0795, 150) > 0.5);
    assert!(exact_after(Scheme::Double, 0.0800, 150) < 0.01);
}
