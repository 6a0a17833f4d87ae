#![allow(dead_code)]

pub mod hp;

use qec_bench::circuit::Circuit;
use qec_bench::noise::{apply_noise, make_builtin_family, CircuitContext, FamilyConfig};
use qec_bench::primitives::{MemorySpec, PatchGeometry, PrimitiveSpec};
use qec_bench::Basis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn memory(d_x: usize, d_z: usize, rounds: usize, basis: Basis) -> PrimitiveSpec {
    PrimitiveSpec::Memory(MemorySpec { geometry: PatchGeometry::new(d_x, d_z), rounds, basis })
}

pub fn noisy(spec: &PrimitiveSpec, family: &FamilyConfig) -> Circuit {
    let c = spec.generate().unwrap();
    let a = make_builtin_family(family, &CircuitContext::from_circuit(&c)).unwrap();
    apply_noise(&c, &a).unwrap()
}

/// Random syndrome graph: `(u, v or boundary, p)` edges over `n` nodes.
pub struct RandomGraph {
    pub n: usize,
    pub edges: Vec<(usize, Option<usize>, f64, u64)>,
    pub defects: Vec<usize>,
}

pub fn random_graph(seed: u64) -> RandomGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(4..=16);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(0.3) {
                edges.push((u, Some(v), rng.random_range(1e-4..0.3), rng.random_range(0..4u64)));
            }
        }
        if rng.random_bool(0.3) {
            edges.push((u, None, rng.random_range(1e-4..0.3), rng.random_range(0..4u64)));
        }
    }
    let k = rng.random_range(0..=10.min(n));
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        nodes.swap(i, j);
    }
    let mut defects = nodes[..k].to_vec();
    defects.sort();
    RandomGraph { n, edges, defects }
}

/// Minimum total weight over all ways of pairing `defects` with each other
/// or with the boundary, by exhaustive recursion over Floyd–Warshall
/// distances. Infinite when no perfect matching exists.
pub fn brute_force_mwpm(g: &RandomGraph) -> f64 {
    let b = g.n;
    let m = g.n + 1;
    let mut d = vec![vec![f64::INFINITY; m]; m];
    for i in 0..m {
        d[i][i] = 0.0;
    }
    for &(u, v, p, _) in &g.edges {
        let v = v.unwrap_or(b);
        // random_graph never repeats a node pair
        let w = ((1.0 - p) / p).ln();
        d[u][v] = w;
        d[v][u] = w;
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    fn rec(left: &[usize], d: &[Vec<f64>], b: usize) -> f64 {
        let Some((&i, rest)) = left.split_first() else { return 0.0 };
        let mut best = d[i][b] + rec(rest, d, b);
        for (j, &v) in rest.iter().enumerate() {
            let mut r = rest.to_vec();
            r.remove(j);
            best = best.min(d[i][v] + rec(&r, d, b));
        }
        best
    }
    rec(&g.defects, &d, b)
}

/// Every single Pauli fault of `noisy`, injected on its own into the noiseless
/// circuit and simulated; nonempty signatures are merged by XOR of their
/// probabilities. Keys are (detectors, observable mask).
pub fn injected_signatures(noisy: &Circuit) -> std::collections::BTreeMap<(Vec<u32>, u64), f64> {
    use qec_bench::circuit::Gate;
    use qec_bench::dem::{isolate_fault, FaultLocation};
    use qec_bench::framesim::sample_batch;
    const P: [char; 4] = ['I', 'X', 'Y', 'Z'];
    let mut out = std::collections::BTreeMap::new();
    for (idx, ins) in noisy.instructions.iter().enumerate() {
        let comps: Vec<(String, f64)> = match ins.gate {
            Gate::XError => vec![("X".into(), ins.args[0])],
            Gate::ZError => vec![("Z".into(), ins.args[0])],
            Gate::PauliChannel1 => (0..3).map(|k| (P[k + 1].to_string(), ins.args[k])).collect(),
            Gate::Depolarize1 => (1..4).map(|k| (P[k].to_string(), ins.args[0] / 3.0)).collect(),
            Gate::PauliChannel2 => (1..16).map(|i| (format!("{}{}", P[i / 4], P[i % 4]), ins.args[i - 1])).collect(),
            Gate::Depolarize2 => (1..16).map(|i| (format!("{}{}", P[i / 4], P[i % 4]), ins.args[0] / 15.0)).collect(),
            _ => continue,
        };
        let width = comps[0].0.len();
        let groups = ins.qubit_targets().count() / width;
        for target in 0..groups {
            for (pauli, p) in &comps {
                if *p == 0.0 {
                    continue;
                }
                let loc = FaultLocation { instruction: idx, target, pauli: pauli.clone() };
                let t = sample_batch(&isolate_fault(noisy, &loc), 1, 0).unwrap();
                let dets: Vec<u32> = (0..t.num_detectors).filter(|&d| t.detector(0, d)).map(|d| d as u32).collect();
                let key = (dets, t.observable_mask(0));
                if key.0.is_empty() && key.1 == 0 {
                    continue;
                }
                let e = out.entry(key).or_insert(0.0);
                *e = *e * (1.0 - p) + p * (1.0 - *e);
            }
        }
    }
    out
}
