use magnon_echo::echo::coherent_asymptote;
use magnon_echo::oracle::{build_floquet, build_xxz, Model, Oracle, Spectrum};
use magnon_echo::propagators::propagator_matrix;
use magnon_echo::{ChainSpec, CoherentGate, Epoch, HarperParams, InitialState, QdpKind, QdpSequence, C64};

fn reference_gate() -> CoherentGate {
    let s = 3f64.sqrt();
    CoherentGate::new(C64::new(1.0, 1.0) / s, C64::from(1.0 / s)).unwrap()
}

/// Mean over spacings 20..=40; single spacings on a ten-site ring still show revivals.
#[test]
fn repeated_coherent_gates_saturate() {
    let oracle = Oracle::new(Model::Chain(ChainSpec::finite(10, 1.0).unwrap())).unwrap();
    let state = InitialState::balanced();
    for n in 1..=3u32 {
        let values: Vec<f64> = (0..=40)
            .map(|k| {
                let spacing = 20.0 + 0.5 * k as f64;
                let seq = QdpSequence::new(spacing, vec![1; n as usize], QdpKind::Coherent(reference_gate())).unwrap();
                oracle
                    .echo(&state, &seq.events(), Epoch::Time(spacing * (n + 1) as f64))
                    .unwrap()
            })
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let target = coherent_asymptote(&reference_gate(), n);
        assert!((target - (2.0f64 / 3.0).powi(n as i32)).abs() < 1e-12);
        assert!((mean - target).abs() < 0.1, "n={n}: {mean} vs {target}");
    }
}

#[test]
fn echo_is_frozen_after_last_process() {
    let oracle = Oracle::new(Model::Chain(ChainSpec::finite(8, 0.6).unwrap())).unwrap();
    let seq = QdpSequence::new(1.3, vec![2, 5, 7], QdpKind::Coherent(reference_gate())).unwrap();
    let state = InitialState::balanced();
    let early = oracle.report(&state, &seq.events(), Epoch::Time(4.0)).unwrap();
    let late = oracle.echo(&state, &seq.events(), Epoch::Time(37.5)).unwrap();
    assert!(early.drift <= 1e-10);
    assert!((early.echo - late).abs() <= 1e-10);
}

#[test]
fn one_magnon_blocks_match_propagators() {
    let chain = ChainSpec::finite(9, 1.4).unwrap();
    let h = build_xxz(&chain).unwrap();
    let u = Spectrum::of(&h).unwrap().unitary(2.7).unwrap();
    let vacuum = u.vacuum_element();
    let block = u.one_magnon_block() / vacuum;
    let dressed = propagator_matrix(&chain, 2.7).unwrap().amplitudes * C64::from_polar(1.0, -chain.magnon_gap() * 2.7);
    assert!((block - dressed).iter().all(|d| d.norm() < 1e-10));

    let params = HarperParams::new(1.0, 0.8, 2, 9).unwrap();
    let floquet = build_floquet(&params).unwrap();
    assert!(floquet.is_unitary());
    assert!(floquet.magnetization_commutator() < 1e-10);
}
