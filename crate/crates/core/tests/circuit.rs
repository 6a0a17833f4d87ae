mod common;

use common::{memory, noisy};
use proptest::prelude::*;
use qec_bench::circuit::{parse_text, Gate};
use qec_bench::noise::FamilyConfig;
use qec_bench::primitives::*;
use qec_bench::Basis;

const FIXTURE: &str = include_str!("fixtures/memory_d3_z.stim");

#[test]
fn fixture_measurement_count() {
    let c = parse_text(FIXTURE).unwrap();
    let d = 3;
    // (d-1)^2 bulk plaquettes plus 2(d-1) weight-2 boundary checks
    let checks = (d - 1) * (d - 1) + 2 * (d - 1);
    assert_eq!(checks, 8);
    assert_eq!(c.num_measurements(), checks * 3 + d * d);
    assert_eq!(c.num_measurements(), 33);
    let by_instruction: usize = c
        .instructions
        .iter()
        .filter(|i| matches!(i.gate, Gate::M | Gate::MX | Gate::MPP))
        .map(|i| i.qubit_targets().count())
        .sum();
    assert_eq!(by_instruction, 33);
}

#[test]
fn fixture_is_stable() {
    let c = memory(3, 3, 3, Basis::Z).generate().unwrap();
    assert_eq!(c.to_text(), FIXTURE);
}

#[test]
fn memory_round_trip() {
    let c = memory(3, 3, 3, Basis::Z).generate().unwrap();
    assert_eq!(parse_text(&c.to_text()).unwrap(), c);
}

fn any_spec() -> impl Strategy<Value = PrimitiveSpec> {
    let geo = (2usize..6, 2usize..6).prop_map(|(x, z)| PatchGeometry::new(x, z));
    let basis = prop_oneof![Just(Basis::X), Just(Basis::Z)];
    prop_oneof![
        (geo.clone(), 1usize..4, basis.clone())
            .prop_map(|(geometry, rounds, basis)| PrimitiveSpec::Memory(MemorySpec { geometry, rounds, basis })),
        (geo.clone(), 1usize..3, 1usize..3, basis)
            .prop_map(|(geometry, t_pre, t_post, basis)| PrimitiveSpec::Hadamard(HadamardSpec { geometry, t_pre, t_post, basis })),
        (geo, 1usize..3, 1usize..3, prop_oneof![Just(Parity::XX), Just(Parity::ZZ)]).prop_map(|(geometry, l, t, parity)| {
            PrimitiveSpec::LatticeSurgery(LatticeSurgerySpec { geometry, bridge_length: l, t_pre: t, t_merge: t, t_post: 1, parity })
        }),
        (2usize..5, 1usize..3, 1usize..3, 0usize..3).prop_map(|(d, l, t_merge, t_boundary)| {
            PrimitiveSpec::PhaseGate(PhaseGateSpec { d, bridge_length: l, t_merge, t_boundary })
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn emitted_circuits_round_trip(spec in any_spec(), p in 1e-5f64..0.05) {
        let c = spec.generate().unwrap();
        prop_assert_eq!(parse_text(&c.to_text()).unwrap(), c.clone());
        let n = noisy(&spec, &FamilyConfig::biased(p, 7.0, Basis::Z));
        let text = n.to_text();
        prop_assert_eq!(parse_text(&text).unwrap(), n.clone());
        // emission is a pure function of the value
        prop_assert_eq!(n.clone().to_text(), text);
    }

    #[test]
    fn measurement_count_is_sum_of_targets(spec in any_spec()) {
        let c = spec.generate().unwrap();
        let mut count = 0;
        for ins in &c.instructions {
            match ins.gate {
                Gate::M | Gate::MX => count += ins.qubit_targets().count(),
                Gate::MPP => count += qec_bench::circuit::mpp_products(&ins.targets).len(),
                _ => {}
            }
        }
        prop_assert_eq!(c.num_measurements(), count);
        prop_assert!(c.validate().is_empty());
    }
}
