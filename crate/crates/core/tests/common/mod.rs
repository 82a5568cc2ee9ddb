//! Seeded random architectures and brute-force oracles shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use svcarch::scc::ServiceGraph;
use svcarch::{Architecture, ChannelId, DepRef, Service, ServiceId, Thresholds};

pub const MAX_SERVICES: usize = 8;
pub const MAX_CHANNELS: usize = 20;

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    /// Only allow dependencies on outputs of earlier services.
    pub acyclic: bool,
    pub max_services: usize,
    pub max_channels: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            acyclic: false,
            max_services: MAX_SERVICES,
            max_channels: MAX_CHANNELS,
        }
    }
}

/// A valid, lint-clean architecture with measures and thresholds.
///
/// Every channel has one producer, no service reads its own outputs, and
/// every input is used by some output.
pub fn random_architecture(seed: u64, cfg: GenConfig) -> Architecture {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=cfg.max_services);
    let system_inputs = rng.gen_range(1..=4usize);
    let budget = cfg.max_channels - system_inputs;

    // outputs per service, at least one each while the budget lasts
    let mut outputs: Vec<Vec<ChannelId>> = vec![Vec::new(); n];
    let mut next_channel = 0usize;
    for outs in outputs.iter_mut() {
        let k = rng.gen_range(1..=3usize);
        for _ in 0..k {
            if next_channel < budget {
                outs.push(ChannelId::new(format!("c{next_channel}")));
                next_channel += 1;
            }
        }
    }
    let inputs: Vec<ChannelId> = (0..system_inputs).map(|i| ChannelId::new(format!("x{i}"))).collect();

    let mut arch = Architecture::new("L0");
    for (i, outs) in outputs.iter().enumerate() {
        let id = ServiceId::new(format!("P_{i}"));
        let mut readable: Vec<&ChannelId> = inputs.iter().collect();
        for (j, other) in outputs.iter().enumerate() {
            if j != i && (!cfg.acyclic || j < i) {
                readable.extend(other.iter());
            }
        }
        let vars = ["v0", "v1"];
        let mut service = Service::new(id.clone());
        for out in outs {
            let k = rng.gen_range(0..=3usize.min(readable.len()));
            let deps: Vec<DepRef> = readable
                .choose_multiple(&mut rng, k)
                .map(|c| {
                    if rng.gen_bool(0.3) {
                        DepRef::via((*c).clone(), vars[rng.gen_range(0..vars.len())])
                    } else {
                        DepRef::direct((*c).clone())
                    }
                })
                .collect();
            service = service.with_output(out.clone(), deps);
        }
        service.wcet = Some(rng.gen_range(1..=20) as f64);
        service.perf = Some(rng.gen_range(0..=20) as f64);
        arch.insert(service);
    }
    for channel in arch.channels() {
        arch.uplsize.insert(channel, rng.gen_range(0..=200) as f64);
    }
    arch.thresholds = Some(Thresholds {
        high_load: 100.0,
        high_perf: 10.0,
    });
    arch
}

pub fn random_dag(seed: u64) -> Architecture {
    random_architecture(
        seed,
        GenConfig {
            acyclic: true,
            ..GenConfig::default()
        },
    )
}

/// Service-level edges derived straight from the interfaces.
pub fn service_edges(arch: &Architecture) -> BTreeSet<(ServiceId, ServiceId)> {
    let mut edges = BTreeSet::new();
    for a in arch.services.values() {
        for b in arch.services.values() {
            if a.outputs.iter().any(|c| b.inputs.contains(c)) {
                edges.insert((a.id.clone(), b.id.clone()));
            }
        }
    }
    edges
}

/// Transitive closure by Floyd-Warshall: `reach[a][b]` iff a non-empty path
/// leads from `a` to `b`.
#[allow(clippy::needless_range_loop)]
pub fn closure(
    vertices: &[ServiceId],
    edges: &BTreeSet<(ServiceId, ServiceId)>,
) -> BTreeMap<ServiceId, BTreeSet<ServiceId>> {
    let n = vertices.len();
    let index: BTreeMap<&ServiceId, usize> = vertices.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let mut r = vec![vec![false; n]; n];
    for (a, b) in edges {
        r[index[a]][index[b]] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    vertices
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let row = (0..n).filter(|&j| r[i][j]).map(|j| vertices[j].clone()).collect();
            (v.clone(), row)
        })
        .collect()
}

/// Sources by brute force: every `a` that reaches `b`.
pub fn oracle_sources(arch: &Architecture) -> BTreeMap<ServiceId, BTreeSet<ServiceId>> {
    let vertices: Vec<ServiceId> = arch.services.keys().cloned().collect();
    let reach = closure(&vertices, &service_edges(arch));
    vertices
        .iter()
        .map(|b| {
            let set = vertices.iter().filter(|a| reach[*a].contains(b)).cloned().collect();
            (b.clone(), set)
        })
        .collect()
}

/// Kosaraju: finishing order on the graph, then components on the transpose.
pub fn kosaraju(g: &ServiceGraph) -> BTreeSet<BTreeSet<ServiceId>> {
    let succ = g.successors();
    let pred = g.predecessors();
    let empty = BTreeSet::new();

    fn finish(
        v: &ServiceId,
        succ: &BTreeMap<ServiceId, BTreeSet<ServiceId>>,
        empty: &BTreeSet<ServiceId>,
        seen: &mut BTreeSet<ServiceId>,
        order: &mut Vec<ServiceId>,
    ) {
        if !seen.insert(v.clone()) {
            return;
        }
        for w in succ.get(v).unwrap_or(empty) {
            finish(w, succ, empty, seen, order);
        }
        order.push(v.clone());
    }

    fn collect(
        v: &ServiceId,
        pred: &BTreeMap<ServiceId, BTreeSet<ServiceId>>,
        empty: &BTreeSet<ServiceId>,
        assigned: &mut BTreeSet<ServiceId>,
        comp: &mut BTreeSet<ServiceId>,
    ) {
        if !assigned.insert(v.clone()) {
            return;
        }
        comp.insert(v.clone());
        for w in pred.get(v).unwrap_or(empty) {
            collect(w, pred, empty, assigned, comp);
        }
    }

    let mut seen = BTreeSet::new();
    let mut order = Vec::new();
    for v in &g.vertices {
        finish(v, &succ, &empty, &mut seen, &mut order);
    }
    let mut assigned = BTreeSet::new();
    let mut comps = BTreeSet::new();
    for v in order.iter().rev() {
        if !assigned.contains(v) {
            let mut comp = BTreeSet::new();
            collect(v, &pred, &empty, &mut assigned, &mut comp);
            comps.insert(comp);
        }
    }
    comps
}

/// Every simple dependency path ending at `channel`, as the list of
/// producers from the channel backwards. A path stops before revisiting a
/// channel.
pub fn backward_paths(arch: &Architecture, channel: &ChannelId) -> Vec<Vec<ServiceId>> {
    let wiring = arch.wiring();
    fn walk(
        arch: &Architecture,
        wiring: &svcarch::model::Wiring,
        ch: &ChannelId,
        on_path: &mut Vec<ChannelId>,
        prefix: &mut Vec<ServiceId>,
        out: &mut Vec<Vec<ServiceId>>,
    ) {
        let Some(p) = wiring.producer_of(ch) else {
            out.push(prefix.clone());
            return;
        };
        prefix.push(p.clone());
        on_path.push(ch.clone());
        let upstream: Vec<&ChannelId> = arch.services[p]
            .deps_of(ch)
            .map(|d| &d.channel)
            .filter(|c| wiring.producer_of(c).is_some() && !on_path.contains(c))
            .collect();
        if upstream.is_empty() {
            out.push(prefix.clone());
        }
        for u in upstream {
            walk(arch, wiring, u, on_path, prefix, out);
        }
        on_path.pop();
        prefix.pop();
    }
    let mut out = Vec::new();
    walk(arch, &wiring, channel, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// WCET by enumerating every backward path of an acyclic architecture.
pub fn oracle_wcet(arch: &Architecture, channel: &ChannelId) -> f64 {
    backward_paths(arch, channel)
        .iter()
        .map(|path| path.iter().map(|s| arch.services[s].wcet.unwrap()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Channel-level backward closure: every channel some dependency chain from
/// `targets` passes through, including the targets.
pub fn channel_cone(arch: &Architecture, targets: &BTreeSet<ChannelId>) -> BTreeSet<ChannelId> {
    let wiring = arch.wiring();
    let mut cone = targets.clone();
    loop {
        let mut grown = cone.clone();
        for ch in &cone {
            if let Some(p) = wiring.producer_of(ch) {
                grown.extend(arch.services[p].deps_of(ch).map(|d| d.channel.clone()));
            }
        }
        if grown == cone {
            return cone;
        }
        cone = grown;
    }
}

/// Elementary decomposition with measures for every child: split children
/// inherit the perf and wcet of their parent.
pub fn measured_l1(l0: &Architecture) -> Architecture {
    let mut l1 = svcarch::elementary::decompose_all(l0).expect("generated architectures decompose");
    for (parent, children) in &l1.membership.clone() {
        let p = &l0.services[parent];
        for child in children {
            let c = l1.services.get_mut(child).expect("child exists");
            c.perf = c.perf.or(p.perf);
            c.wcet = c.wcet.or(p.wcet);
        }
    }
    l1
}
