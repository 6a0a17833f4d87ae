//! Minimum-weight perfect matching on the X- and Z-side syndrome graphs,
//! with optional correlated reweighting between the two passes.

pub mod blossom;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dem::{split_graphlike, xor_probability, DetectorErrorModel, GraphMechanism, NonGraphlike};
use crate::framesim::DetectionTable;
use crate::Basis;

pub use blossom::max_weight_matching;

const P_MAX: f64 = 0.5 - 1e-9;
/// Largest edge weight maps to this integer.
const RESOLUTION: f64 = (1u64 << 30) as f64;
const INF: i64 = i64::MAX;
/// Graphs up to this many nodes keep an all-pairs shortest-path table.
const APSP_LIMIT: usize = 1200;

/// Log-likelihood weight of an edge.
pub fn edge_weight(p: f64) -> f64 {
    let p = p.min(P_MAX);
    ((1.0 - p) / p).ln()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error(transparent)]
    NonGraphlike(#[from] NonGraphlike),
    #[error("odd number of defects with no boundary reachable")]
    NoBoundary,
    #[error("detection table has {got} detectors, graphs expect {want}")]
    Dimension { got: usize, want: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Local node indices; the boundary is node `num_nodes - 1`.
    pub u: usize,
    pub v: usize,
    pub probability: f64,
    pub weight: f64,
    /// `weight` in units of the graph's resolution.
    pub qweight: i64,
    pub observables: u64,
}

#[derive(Clone, Debug)]
struct Apsp {
    n: usize,
    dist: Vec<i64>,
    fdist: Vec<f64>,
    mask: Vec<u64>,
    pred: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct MatchingGraph {
    pub side: Basis,
    /// Detector id of each local node except the trailing boundary node.
    pub detectors: Vec<u32>,
    local: HashMap<u32, usize>,
    pub edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
    /// Parallel edges whose observable masks disagreed.
    pub mask_conflicts: usize,
    /// For each edge, edges of the other graph sharing a two-sided mechanism,
    /// with the combined probability of those mechanisms.
    pub links: Vec<Vec<(usize, f64)>>,
    /// Weight of one integer step. Shortest paths and matchings are solved
    /// exactly on integer weights, so ties stay ties.
    unit: f64,
    apsp: Option<Apsp>,
}

impl MatchingGraph {
    pub fn boundary(&self) -> usize {
        self.detectors.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.detectors.len() + 1
    }

    pub fn local_node(&self, detector: u32) -> Option<usize> {
        self.local.get(&detector).copied()
    }

    fn build(side: Basis, detectors: Vec<u32>, mechs: &[GraphMechanism]) -> (Self, Vec<usize>) {
        let local: HashMap<u32, usize> = detectors.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        let b = detectors.len();
        let mut edges: Vec<Edge> = Vec::new();
        let mut strongest: Vec<f64> = Vec::new();
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut of_mech = Vec::with_capacity(mechs.len());
        let mut conflicts = 0;
        for m in mechs {
            let u = local[&m.detectors[0]];
            let v = m.detectors.get(1).map_or(b, |d| local[d]);
            let key = (u.min(v), u.max(v));
            let e = *index.entry(key).or_insert_with(|| {
                edges.push(Edge { u: key.0, v: key.1, probability: 0.0, weight: 0.0, qweight: 0, observables: m.observables });
                strongest.push(0.0);
                edges.len() - 1
            });
            let edge = &mut edges[e];
            if edge.observables != m.observables {
                conflicts += 1;
                if m.probability > strongest[e] {
                    edge.observables = m.observables;
                }
            }
            strongest[e] = strongest[e].max(m.probability);
            edge.probability = xor_probability(edge.probability, m.probability);
            of_mech.push(e);
        }
        let mut adj = vec![Vec::new(); b + 1];
        for (i, e) in edges.iter_mut().enumerate() {
            e.weight = edge_weight(e.probability);
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        let nedges = edges.len();
        let mut g = MatchingGraph {
            side,
            detectors,
            local,
            edges,
            adj,
            mask_conflicts: conflicts,
            links: vec![Vec::new(); nedges],
            unit: 1.0,
            apsp: None,
        };
        g.requantize();
        (g, of_mech)
    }

    fn requantize(&mut self) {
        let max = self.edges.iter().map(|e| e.weight).fold(0.0, f64::max);
        self.unit = if max > 0.0 { max / RESOLUTION } else { 1.0 };
        for i in 0..self.edges.len() {
            self.edges[i].qweight = self.quantize(self.edges[i].weight);
        }
        self.apsp = if self.num_nodes() <= APSP_LIMIT { Some(self.all_pairs()) } else { None };
    }

    fn quantize(&self, w: f64) -> i64 {
        (w / self.unit).round().max(0.0) as i64
    }

    /// A graph over `n` detector nodes from explicit `(u, v, probability,
    /// observables)` edges, `v = None` meaning the boundary.
    pub fn from_edges(side: Basis, n: usize, edges: &[(usize, Option<usize>, f64, u64)]) -> Self {
        let mechs: Vec<GraphMechanism> = edges
            .iter()
            .map(|&(u, v, p, obs)| GraphMechanism {
                probability: p,
                detectors: std::iter::once(u as u32).chain(v.map(|v| v as u32)).collect(),
                observables: obs,
                source: 0,
            })
            .collect();
        MatchingGraph::build(side, (0..n as u32).collect(), &mechs).0
    }

    /// Multiplies every edge weight by `c > 0`.
    pub fn scale_weights(&mut self, c: f64) {
        assert!(c > 0.0);
        for e in &mut self.edges {
            e.weight *= c;
        }
        self.requantize();
    }

    fn all_pairs(&self) -> Apsp {
        let n = self.num_nodes();
        let mut dist = vec![INF; n * n];
        let mut fdist = vec![f64::INFINITY; n * n];
        let mut mask = vec![0u64; n * n];
        let mut pred = vec![u32::MAX; n * n];
        for s in 0..n {
            let r = self.dijkstra(s, None, &[]);
            dist[s * n..(s + 1) * n].copy_from_slice(&r.dist);
            fdist[s * n..(s + 1) * n].copy_from_slice(&r.fdist);
            mask[s * n..(s + 1) * n].copy_from_slice(&r.mask);
            pred[s * n..(s + 1) * n].copy_from_slice(&r.pred);
        }
        Apsp { n, dist, fdist, mask, pred }
    }

    fn weight_of(&self, e: usize, overrides: Option<&Overrides>) -> (i64, f64) {
        overrides
            .and_then(|o| o.get(&e).copied())
            .unwrap_or((self.edges[e].qweight, self.edges[e].weight))
    }

    /// Shortest paths from `s`; stops once every node in `targets` is settled
    /// (all nodes when `targets` is empty).
    fn dijkstra(&self, s: usize, overrides: Option<&Overrides>, targets: &[usize]) -> Paths {
        let n = self.num_nodes();
        let mut dist = vec![INF; n];
        let mut fdist = vec![f64::INFINITY; n];
        let mut mask = vec![0u64; n];
        let mut pred = vec![u32::MAX; n];
        let mut done = vec![false; n];
        let mut want: usize = targets.iter().filter(|&&t| t != s).count();
        let mut is_target = vec![false; if targets.is_empty() { 0 } else { n }];
        for &t in targets {
            if t != s {
                is_target[t] = true;
            }
        }
        dist[s] = 0;
        fdist[s] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0i64, s)));
        while let Some(Reverse((d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if !targets.is_empty() && is_target[u] {
                is_target[u] = false;
                want -= 1;
                if want == 0 {
                    break;
                }
            }
            for &(v, e) in &self.adj[u] {
                let (w, fw) = self.weight_of(e, overrides);
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    fdist[v] = fdist[u] + fw;
                    mask[v] = mask[u] ^ self.edges[e].observables;
                    pred[v] = e as u32;
                    heap.push(Reverse((nd, v)));
                }
            }
        }
        Paths { dist, fdist, mask, pred }
    }

    /// Edges on the stored shortest path between two nodes.
    fn path_edges(&self, paths: &Paths, from: usize, to: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut v = to;
        while v != from {
            let e = paths.pred[v];
            if e == u32::MAX {
                break;
            }
            out.push(e as usize);
            let ed = &self.edges[e as usize];
            v = if ed.u == v { ed.v } else { ed.u };
        }
        out
    }

    fn paths_from(&self, s: usize, overrides: Option<&Overrides>, targets: &[usize]) -> Paths {
        match (&self.apsp, overrides) {
            (Some(a), None) => Paths {
                dist: a.dist[s * a.n..(s + 1) * a.n].to_vec(),
                fdist: a.fdist[s * a.n..(s + 1) * a.n].to_vec(),
                mask: a.mask[s * a.n..(s + 1) * a.n].to_vec(),
                pred: a.pred[s * a.n..(s + 1) * a.n].to_vec(),
            },
            _ => self.dijkstra(s, overrides, targets),
        }
    }

    fn dist_mask(&self, s: usize, t: usize) -> Option<(i64, u64)> {
        self.apsp.as_ref().map(|a| (a.dist[s * a.n + t], a.mask[s * a.n + t]))
    }
}

/// Per-shot replacement weights, integer and real.
type Overrides = HashMap<usize, (i64, f64)>;

struct Paths {
    dist: Vec<i64>,
    fdist: Vec<f64>,
    mask: Vec<u64>,
    pred: Vec<u32>,
}

/// A perfect matching of defects, each pair joined or sent to the boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching {
    /// Local node pairs; `None` marks a boundary match.
    pub pairs: Vec<(usize, Option<usize>)>,
    pub weight: f64,
    pub observables: u64,
}

/// Exact minimum-weight matching of `defects` (local node ids), where each
/// defect may alternatively be matched to the boundary.
pub fn solve_mwpm(graph: &MatchingGraph, defects: &[usize]) -> Result<Matching, DecodeError> {
    solve_with(graph, defects, None).map(|(m, _)| m)
}

fn solve_with(
    graph: &MatchingGraph,
    defects: &[usize],
    overrides: Option<&Overrides>,
) -> Result<(Matching, Vec<usize>), DecodeError> {
    let k = defects.len();
    if k == 0 {
        return Ok((Matching { pairs: vec![], weight: 0.0, observables: 0 }, vec![]));
    }
    let b = graph.boundary();
    let mut targets: Vec<usize> = defects.to_vec();
    targets.push(b);
    let rows: Vec<Paths> = defects.iter().map(|&s| graph.paths_from(s, overrides, &targets)).collect();
    let node = |j: usize| if j == usize::MAX { b } else { defects[j] };
    let d = |i: usize, j: usize| rows[i].dist[node(j)];
    let fd = |i: usize, j: usize| rows[i].fdist[node(j)];
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if d(i, j) != INF {
                edges.push((i, j, -d(i, j)));
            }
        }
        if d(i, usize::MAX) != INF {
            edges.push((i, k + i, -d(i, usize::MAX)));
        }
        for j in i + 1..k {
            edges.push((k + i, k + j, 0));
        }
    }
    let mate = max_weight_matching(2 * k, &edges, true);
    let mut pairs = Vec::new();
    let mut weight = 0.0;
    let mut obs = 0u64;
    let mut used = Vec::new();
    for i in 0..k {
        match mate[i] {
            Some(j) if j < k => {
                if i < j {
                    pairs.push((defects[i], Some(defects[j])));
                    weight += fd(i, j);
                    obs ^= rows[i].mask[defects[j]];
                    used.extend(graph.path_edges(&rows[i], defects[i], defects[j]));
                }
            }
            Some(j) if j == k + i => {
                pairs.push((defects[i], None));
                weight += fd(i, usize::MAX);
                obs ^= rows[i].mask[b];
                used.extend(graph.path_edges(&rows[i], defects[i], b));
            }
            _ => return Err(DecodeError::NoBoundary),
        }
    }
    Ok((Matching { pairs, weight, observables: obs }, used))
}

/// Observable mask predicted for one side; fast paths for up to two defects.
fn predict_side(graph: &MatchingGraph, defects: &[usize]) -> Result<u64, DecodeError> {
    let b = graph.boundary();
    if graph.apsp.is_some() {
        match defects.len() {
            0 => return Ok(0),
            1 => {
                let (dd, m) = graph.dist_mask(defects[0], b).unwrap();
                return if dd != INF { Ok(m) } else { Err(DecodeError::NoBoundary) };
            }
            2 => {
                let (d01, m01) = graph.dist_mask(defects[0], defects[1]).unwrap();
                let (d0, m0) = graph.dist_mask(defects[0], b).unwrap();
                let (d1, m1) = graph.dist_mask(defects[1], b).unwrap();
                let via_boundary = if d0 == INF || d1 == INF { INF } else { d0 + d1 };
                if d01 != INF && d01 <= via_boundary {
                    return Ok(m01);
                }
                if via_boundary != INF {
                    return Ok(m0 ^ m1);
                }
                return Err(DecodeError::NoBoundary);
            }
            _ => {}
        }
    }
    solve_mwpm(graph, defects).map(|m| m.observables)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderMode {
    Uncorrelated,
    Correlated,
}

/// Both syndrome graphs plus the detector-to-side map.
#[derive(Clone, Debug)]
pub struct Decoder {
    pub x: MatchingGraph,
    pub z: MatchingGraph,
    pub num_detectors: usize,
    pub num_observables: usize,
    pub mode: DecoderMode,
    /// Side decoded first in correlated mode.
    pub first: Basis,
}

/// Builds the X- and Z-side graphs from a model.
pub fn build_matching_graphs(dem: &DetectorErrorModel) -> Result<(MatchingGraph, MatchingGraph), DecodeError> {
    let split = split_graphlike(dem)?;
    let ids = |b: Basis| -> Vec<u32> {
        (0..dem.detectors.len() as u32).filter(|&d| dem.detectors[d as usize].side == b).collect()
    };
    let (mut x, xmap) = MatchingGraph::build(Basis::X, ids(Basis::X), &split.x);
    let (mut z, zmap) = MatchingGraph::build(Basis::Z, ids(Basis::Z), &split.z);
    let mut pair_p: HashMap<(usize, usize), f64> = HashMap::new();
    for &(xi, zi) in &split.links {
        let key = (xmap[xi], zmap[zi]);
        let p = split.x[xi].probability;
        let e = pair_p.entry(key).or_insert(0.0);
        *e = xor_probability(*e, p);
    }
    let mut keys: Vec<_> = pair_p.into_iter().collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0));
    for ((xe, ze), p) in keys {
        x.links[xe].push((ze, p));
        z.links[ze].push((xe, p));
    }
    Ok((x, z))
}

/// Posterior that the shared mechanism fired given that the matched edge
/// (total probability `p_edge`) is on the correction:
/// `p_link / (p_link + p_indep)` with `p_edge = p_link ⊕ p_indep`.
pub fn conditional_probability(p_edge: f64, p_link: f64) -> f64 {
    let p_link = p_link.min(p_edge);
    let p_indep = ((p_edge - p_link) / (1.0 - 2.0 * p_link)).max(0.0);
    (p_link / (p_link + p_indep)).min(P_MAX)
}

impl Decoder {
    pub fn new(dem: &DetectorErrorModel, mode: DecoderMode) -> Result<Self, DecodeError> {
        let (x, z) = build_matching_graphs(dem)?;
        Ok(Decoder { x, z, num_detectors: dem.detectors.len(), num_observables: dem.num_observables, mode, first: Basis::Z })
    }

    fn split(&self, defects: &[u32]) -> (Vec<usize>, Vec<usize>) {
        let mut xs = Vec::new();
        let mut zs = Vec::new();
        for &d in defects {
            if let Some(l) = self.x.local_node(d) {
                xs.push(l);
            } else if let Some(l) = self.z.local_node(d) {
                zs.push(l);
            }
        }
        (xs, zs)
    }

    /// Predicted observable flips for one shot's fired detectors.
    pub fn decode(&self, defects: &[u32]) -> Result<u64, DecodeError> {
        let (xs, zs) = self.split(defects);
        match self.mode {
            DecoderMode::Uncorrelated => Ok(predict_side(&self.x, &xs)? ^ predict_side(&self.z, &zs)?),
            DecoderMode::Correlated => {
                let (g1, d1, g2, d2) =
                    if self.first == Basis::Z { (&self.z, zs, &self.x, xs) } else { (&self.x, xs, &self.z, zs) };
                if d1.is_empty() || d2.is_empty() {
                    return Ok(predict_side(g1, &d1)? ^ predict_side(g2, &d2)?);
                }
                let (m1, used) = solve_with(g1, &d1, None)?;
                let mut overrides: Overrides = HashMap::new();
                for e in used {
                    for &(f, p_link) in &g1.links[e] {
                        let p = conditional_probability(g1.edges[e].probability, p_link).max(g2.edges[f].probability);
                        let w = edge_weight(p);
                        let q = g2.quantize(w);
                        let slot = overrides.entry(f).or_insert((q, w));
                        if q < slot.0 {
                            *slot = (q, w);
                        }
                    }
                }
                if overrides.is_empty() {
                    return Ok(m1.observables ^ predict_side(g2, &d2)?);
                }
                let (m2, _) = solve_with(g2, &d2, Some(&overrides))?;
                Ok(m1.observables ^ m2.observables)
            }
        }
    }

    /// Decodes every shot; returns the predicted observable masks.
    pub fn decode_batch(&self, table: &DetectionTable) -> Result<Vec<u64>, DecodeError> {
        if table.num_detectors != self.num_detectors {
            return Err(DecodeError::Dimension { got: table.num_detectors, want: self.num_detectors });
        }
        let defects = table.defects();
        defects
            .par_chunks(4096)
            .map(|chunk| {
                let mut cache: HashMap<&[u32], u64> = HashMap::new();
                let mut out = Vec::with_capacity(chunk.len());
                for d in chunk {
                    if let Some(&m) = cache.get(d.as_slice()) {
                        out.push(m);
                        continue;
                    }
                    let m = self.decode(d)?;
                    if d.len() <= 8 {
                        cache.insert(d.as_slice(), m);
                    }
                    out.push(m);
                }
                Ok(out)
            })
            .collect::<Result<Vec<Vec<u64>>, DecodeError>>()
            .map(|v| v.concat())
    }

    /// Number of shots where the prediction misses the flip of observable `k`.
    pub fn count_errors(&self, table: &DetectionTable, k: usize) -> Result<u64, DecodeError> {
        let pred = self.decode_batch(table)?;
        Ok(pred.iter().enumerate().filter(|&(s, &p)| (p >> k & 1 == 1) != table.observable(s, k)).count() as u64)
    }
}

/// Fewest edges forming an undetectable error that flips observable `k`,
/// over both graphs: a cycle (through the boundary or not) with odd
/// observable parity. `None` if no such cycle exists.
pub fn min_logical_weight(graph: &MatchingGraph, k: usize) -> Option<usize> {
    let n = graph.num_nodes();
    let mut best: Option<usize> = None;
    for s in 0..n {
        // BFS over (node, parity)
        let mut dist = vec![usize::MAX; 2 * n];
        dist[2 * s] = 0;
        let mut q = std::collections::VecDeque::from([(s, 0usize)]);
        while let Some((u, par)) = q.pop_front() {
            let du = dist[2 * u + par];
            if best.is_some_and(|b| du >= b) {
                break;
            }
            for &(v, e) in &graph.adj[u] {
                let np = par ^ (graph.edges[e].observables >> k & 1) as usize;
                if dist[2 * v + np] == usize::MAX {
                    dist[2 * v + np] = du + 1;
                    q.push_back((v, np));
                }
            }
        }
        let c = dist[2 * s + 1];
        if c != usize::MAX {
            best = Some(best.map_or(c, |b| b.min(c)));
        }
    }
    best
}
