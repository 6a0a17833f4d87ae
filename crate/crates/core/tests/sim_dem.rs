mod common;

use common::{injected_signatures, memory, noisy};
use qec_bench::dem::build_dem;
use qec_bench::framesim::{sample_batch, CompiledCircuit, DetectionTable};
use qec_bench::noise::FamilyConfig;
use qec_bench::primitives::*;
use qec_bench::Basis;

fn assert_dem_matches_injection(spec: &PrimitiveSpec, family: &FamilyConfig) {
    let c = noisy(spec, family);
    let dem = build_dem(&c).unwrap();
    let oracle = injected_signatures(&c);
    assert_eq!(dem.mechanisms.len(), oracle.len(), "{:?}", spec);
    for m in &dem.mechanisms {
        let key = (m.detectors.clone(), m.observable_mask());
        let p = oracle.get(&key).unwrap_or_else(|| panic!("{:?}: no injected fault gives {:?}", spec, key));
        assert!((m.probability - p).abs() <= 1e-12 * p, "{:?}: {} vs {}", key, m.probability, p);
    }
}

#[test]
fn memory_dem_matches_injection() {
    for basis in [Basis::X, Basis::Z] {
        assert_dem_matches_injection(&memory(3, 3, 2, basis), &FamilyConfig::uniform(0.001));
        assert_dem_matches_injection(&memory(3, 5, 1, basis), &FamilyConfig::biased(0.002, 10.0, Basis::Z));
    }
}

#[test]
fn primitive_dems_match_injection() {
    let f = FamilyConfig::measurement_biased(0.001, 10.0);
    assert_dem_matches_injection(
        &PrimitiveSpec::Hadamard(HadamardSpec { geometry: PatchGeometry::square(3), t_pre: 1, t_post: 1, basis: Basis::X }),
        &f,
    );
    assert_dem_matches_injection(
        &PrimitiveSpec::LatticeSurgery(LatticeSurgerySpec {
            geometry: PatchGeometry::square(3),
            bridge_length: 1,
            t_pre: 1,
            t_merge: 1,
            t_post: 1,
            parity: Parity::XX,
        }),
        &f,
    );
    assert_dem_matches_injection(&PrimitiveSpec::PhaseGate(PhaseGateSpec { d: 3, bridge_length: 1, t_merge: 1, t_boundary: 1 }), &f);
}

#[test]
fn marginals_match_dem() {
    let c = noisy(&memory(3, 3, 3, Basis::Z), &FamilyConfig::uniform(0.01));
    let dem = build_dem(&c).unwrap();
    let shots = 200_000;
    let t = sample_batch(&c, shots, 77).unwrap();
    for (d, (&k, q)) in t.detector_counts().iter().zip(dem.detector_marginals()).enumerate() {
        let sigma = (q * (1.0 - q) / shots as f64).sqrt();
        let f = k as f64 / shots as f64;
        assert!((f - q).abs() <= 5.0 * sigma, "detector {}: {} vs {}", d, f, q);
    }
}

#[test]
fn sampling_is_reproducible_and_chunk_independent() {
    let c = noisy(&memory(3, 3, 3, Basis::X), &FamilyConfig::uniform(0.005));
    let cc = CompiledCircuit::new(&c).unwrap();
    let a = cc.sample_range(0, 1000, 5);
    assert_eq!(a, cc.sample_range(0, 1000, 5));
    assert_ne!(a, cc.sample_range(0, 1000, 6));
    assert_eq!(a, cc.sample_parallel(0, 1000, 5, 128));
    let mut joined = cc.sample_range(0, 512, 5);
    joined.append(&cc.sample_range(512, 488, 5));
    assert_eq!(a, joined);
    assert_eq!(a, DetectionTable::from_b8(&a.to_b8(), a.num_detectors, a.num_observables));
}
