use proptest::prelude::*;

use magnon_echo::echo::{echo_coherent, echo_incoherent};
use magnon_echo::harper::{harper_column, xy_overlap, HarperParams};
use magnon_echo::oracle::{Model, Oracle};
use magnon_echo::propagators::{green_column, propagator_matrix};
use magnon_echo::{ChainSpec, CoherentGate, Epoch, InitialState, KrausChannel, QdpEvent, QdpKind, C64};

fn state(beta2: f64, phase: f64, entangled: bool, partner: i64) -> InitialState {
    let alpha = C64::from((1.0 - beta2).sqrt());
    let beta = C64::from_polar(beta2.sqrt(), phase);
    if entangled {
        InitialState::entangled(alpha, beta, partner).unwrap()
    } else {
        InitialState::unentangled(alpha, beta).unwrap()
    }
}

fn channel(which: u8, p: f64) -> KrausChannel {
    match which % 4 {
        0 => KrausChannel::phase_flip(p).unwrap(),
        1 => KrausChannel::bit_flip(p).unwrap(),
        2 => KrausChannel::project_z(),
        _ => KrausChannel::project_x(),
    }
}

fn gate(a: f64, b: f64, c: f64) -> CoherentGate {
    let gamma = C64::from_polar(a.cos(), b);
    let delta = C64::from_polar(a.sin(), c);
    CoherentGate::new(gamma, delta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_columns_stay_normalized(n in 3usize..40, from in 1i64..40, t in 0.0f64..30.0) {
        let chain = ChainSpec::finite(n, 1.0).unwrap();
        let from = 1 + (from - 1) % n as i64;
        let norm: f64 = green_column(&chain, from, t).unwrap().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagators_compose(n in 3usize..24, t1 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let chain = ChainSpec::finite(n, 0.7).unwrap();
        let a = propagator_matrix(&chain, t1).unwrap();
        let b = propagator_matrix(&chain, t2).unwrap();
        let ab = b.then_after(&a).unwrap();
        let direct = propagator_matrix(&chain, t1 + t2).unwrap();
        for x in 1..=n as i64 {
            for y in 1..=n as i64 {
                prop_assert!((ab.get(x, y).unwrap() - direct.get(x, y).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn incoherent_echo_is_a_probability(
        beta2 in 0.0f64..=1.0, phase in 0.0f64..6.3, entangled: bool, partner in 2i64..30,
        which: u8, p in 0.0f64..=1.0, m in 1i64..30, t0 in 0.0f64..40.0, n in prop::option::of(30usize..80),
    ) {
        let chain = match n {
            Some(n) => ChainSpec::finite(n, 1.0).unwrap(),
            None => ChainSpec::infinite(1.0).unwrap(),
        };
        let ch = channel(which, p);
        if entangled && matches!(which % 4, 1 | 3) {
            return Ok(());
        }
        let s = state(beta2, phase, entangled, partner);
        let event = QdpEvent::new(m, Epoch::Time(t0), QdpKind::Incoherent(ch)).unwrap();
        let l = echo_incoherent(&s, &chain, &event).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l), "L = {l}");
    }

    #[test]
    fn identity_gate_gives_unit_echo(beta2 in 0.0f64..=1.0, entangled: bool, m in 1i64..20, t0 in 0.0f64..20.0) {
        let chain = ChainSpec::infinite(1.0).unwrap();
        let s = state(beta2, 0.3, entangled, 7);
        let l = echo_coherent(&s, &chain, m, t0, &CoherentGate::identity()).unwrap();
        prop_assert!((l - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coherent_echo_is_a_probability(
        beta2 in 0.0f64..=1.0, a in 0.0f64..1.57, b in 0.0f64..6.3, c in 0.0f64..6.3, m in 1i64..10, t0 in 0.0f64..20.0,
    ) {
        let chain = ChainSpec::finite(60, 1.0).unwrap();
        let l = echo_coherent(&state(beta2, 1.0, false, 2), &chain, m, t0, &gate(a, b, c)).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&l));
    }

    #[test]
    fn kicked_columns_stay_normalized(g in 0.0f64..5.0, tau in 0.01f64..1.0, eta in 1i64..10, kicks in 0usize..60) {
        let params = HarperParams::new(g, tau, eta, 64).unwrap();
        let norm: f64 = harper_column(&params, 1, kicks).unwrap().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-11);
    }

    #[test]
    fn unkicked_overlap_is_one(tau in 0.01f64..1.0, kicks in 0usize..80) {
        let params = HarperParams::new(0.0, tau, 1, 50).unwrap();
        prop_assert!((xy_overlap(&params, kicks).unwrap() - 1.0).norm() < 1e-11);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_single_echo_matches_oracle(
        beta2 in 0.0f64..=1.0, phase in 0.0f64..6.3, which: u8, p in 0.0f64..=1.0,
        m in 1i64..=6, t0 in 0.0f64..6.0, delta in -1.5f64..1.5,
    ) {
        let chain = ChainSpec::finite(6, delta).unwrap();
        let s = state(beta2, phase, false, 2);
        let event = QdpEvent::new(m, Epoch::Time(t0), QdpKind::Incoherent(channel(which, p))).unwrap();
        let analytic = echo_incoherent(&s, &chain, &event).unwrap();
        let oracle = Oracle::new(Model::Chain(chain)).unwrap();
        let exact = oracle.echo(&s, &[event], Epoch::Time(t0 + 1.0)).unwrap();
        prop_assert!((analytic - exact).abs() < 1e-10, "{analytic} vs {exact}");
    }
}
