mod common;

use common::hp::pta_reference;
use common::{memory, noisy};
use proptest::prelude::*;
use qec_bench::circuit::Gate;
use qec_bench::noise::*;
use qec_bench::primitives::{LatticeSurgerySpec, Parity, PatchGeometry, PrimitiveSpec};
use qec_bench::Basis;

fn any_family() -> impl Strategy<Value = FamilyConfig> {
    let p = 1e-5f64..0.05;
    let axis = prop_oneof![Just(Basis::X), Just(Basis::Z)];
    prop_oneof![
        p.clone().prop_map(FamilyConfig::uniform),
        (p.clone(), 1.0f64..1000.0, axis).prop_map(|(p, e, a)| FamilyConfig::biased(p, e, a)),
        (1e-5f64..0.01, 1.0f64..20.0).prop_map(|(p, e)| FamilyConfig::measurement_biased(p, e)),
        (p, 0.0f64..2.0, any::<u64>(), any::<bool>()).prop_map(|(p, s, seed, r)| FamilyConfig::non_uniform(p, s, seed, r)),
    ]
}

fn surgery() -> PrimitiveSpec {
    PrimitiveSpec::LatticeSurgery(LatticeSurgerySpec {
        geometry: PatchGeometry::square(3),
        bridge_length: 1,
        t_pre: 1,
        t_merge: 2,
        t_post: 1,
        parity: Parity::ZZ,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emitted_channels_are_normalized(f in any_family()) {
        for spec in [memory(3, 3, 2, Basis::Z), surgery()] {
            let c = noisy(&spec, &f);
            for ins in &c.instructions {
                if ins.gate.is_noise() {
                    prop_assert!(ins.args.iter().all(|&p| p >= 0.0 && p <= 1.0), "{:?}", ins);
                    if matches!(ins.gate, Gate::PauliChannel1 | Gate::PauliChannel2) {
                        prop_assert!(ins.args.iter().sum::<f64>() <= 1.0 + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn biased_budget_is_conserved(p in 1e-6f64..0.1, eta in 1.0f64..1e4, z in any::<bool>()) {
        let axis = if z { Basis::Z } else { Basis::X };
        let ctx = CircuitContext { num_qubits: 2, pairs: [(0, 1)].into_iter().collect(), rounds: 1 };
        let a = make_builtin_family(&FamilyConfig::biased(p, eta, axis), &ctx).unwrap();
        let g1 = a.gate1(0, 0).unwrap();
        prop_assert!((g1.total() - p).abs() <= 1e-14 * p);
        prop_assert!((a.gate2(0, 1, 0).unwrap().total() - p).abs() <= 1e-14 * p);
        match a.idle(1, 0).unwrap() {
            IdleModel::Pauli(ch) => prop_assert!((ch.total() - p).abs() <= 1e-14 * p),
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn families_are_deterministic(f in any_family()) {
        let spec = memory(3, 3, 2, Basis::X);
        prop_assert_eq!(noisy(&spec, &f).to_text(), noisy(&spec, &f).to_text());
    }

    #[test]
    fn pta_is_normalized(t in 0.0f64..1e6, t1 in 1.0f64..1e6, frac in 1e-3f64..=2.0) {
        let t2 = frac * t1;
        let c = pta_idle_channel(t, t1, t2).unwrap();
        prop_assert!(c.p_x >= 0.0 && c.p_y >= 0.0 && c.p_z >= 0.0, "{:?}", c);
        prop_assert!(c.total() <= 0.75 + 1e-15);
    }
}

#[test]
fn non_uniform_seed_changes_draws() {
    let spec = memory(3, 3, 2, Basis::Z);
    let a = noisy(&spec, &FamilyConfig::non_uniform(0.002, 0.5, 1, false)).to_text();
    let b = noisy(&spec, &FamilyConfig::non_uniform(0.002, 0.5, 2, false)).to_text();
    assert_ne!(a, b);
}

#[test]
fn spatio_temporal_rates_vary_by_round() {
    let spec = memory(3, 3, 3, Basis::Z);
    let c = spec.generate().unwrap();
    let ctx = CircuitContext::from_circuit(&c);
    let a = make_builtin_family(&FamilyConfig::non_uniform(0.002, 0.5, 9, true), &ctx).unwrap();
    let rates: Vec<f64> = (0..ctx.rounds).map(|r| a.gate1(0, r).unwrap().total()).collect();
    assert!(rates.windows(2).any(|w| w[0] != w[1]), "{:?}", rates);
    let s = make_builtin_family(&FamilyConfig::non_uniform(0.002, 0.5, 9, false), &ctx).unwrap();
    let rates: Vec<f64> = (0..ctx.rounds).map(|r| s.gate1(0, r).unwrap().total()).collect();
    assert!(rates.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn pta_matches_high_precision_example() {
    let (t, t1, t2) = (1000.0, 20000.0, 15000.0);
    let c = pta_idle_channel(t, t1, t2).unwrap();
    let (x, y, z) = pta_reference(t, t1, t2);
    for (a, b) in [(c.p_x, x), (c.p_y, y), (c.p_z, z)] {
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{} vs {}", a, b);
    }
}
