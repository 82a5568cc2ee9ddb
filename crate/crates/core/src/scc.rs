//! Strongly connected services and the condensation of an elementary
//! architecture.
//!
//! Services are vertices and local channels are solid edges; system inputs
//! and outputs are kept as ports and play no part in the decomposition.
//! Condensation removes disconnected vertices, peels leading and terminating
//! trivial vertices one round at a time, and hands the remaining core to the
//! forward-backward decomposition.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::deps::compose;
use crate::error::{Error, Result};
use crate::model::{validate, Architecture, ChannelId, ServiceId};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct SolidEdge {
    pub from: ServiceId,
    pub to: ServiceId,
    pub channel: ChannelId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Ports {
    pub inputs: BTreeSet<ChannelId>,
    pub outputs: BTreeSet<ChannelId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ServiceGraph {
    pub vertices: BTreeSet<ServiceId>,
    pub edges: BTreeSet<SolidEdge>,
    /// System input/output channels attached to each vertex.
    pub ports: BTreeMap<ServiceId, Ports>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TrivialClass {
    /// Disconnected: no predecessors and no successors.
    DT,
    /// Leading: no predecessors.
    LT,
    /// Terminating: no successors.
    TT,
    /// Commonly trivial: a singleton component not on any cycle.
    T,
    NonTrivial,
}

type Adjacency = BTreeMap<ServiceId, BTreeSet<ServiceId>>;

impl ServiceGraph {
    /// Plain digraph without ports. Edges get the label `from__to`.
    pub fn from_pairs<I, S>(vertices: I, pairs: &[(S, S)]) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut g = ServiceGraph {
            vertices: vertices.into_iter().map(|v| ServiceId::new(v.as_ref())).collect(),
            ..Self::default()
        };
        for (a, b) in pairs {
            let (a, b) = (a.as_ref(), b.as_ref());
            g.vertices.insert(a.into());
            g.vertices.insert(b.into());
            g.edges.insert(SolidEdge {
                from: a.into(),
                to: b.into(),
                channel: ChannelId::new(format!("{a}__{b}")),
            });
        }
        g
    }

    pub fn successors(&self) -> Adjacency {
        let mut adj: Adjacency = self.vertices.iter().map(|v| (v.clone(), BTreeSet::new())).collect();
        for e in &self.edges {
            adj.get_mut(&e.from).expect("edge endpoint").insert(e.to.clone());
        }
        adj
    }

    pub fn predecessors(&self) -> Adjacency {
        let mut adj: Adjacency = self.vertices.iter().map(|v| (v.clone(), BTreeSet::new())).collect();
        for e in &self.edges {
            adj.get_mut(&e.to).expect("edge endpoint").insert(e.from.clone());
        }
        adj
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<ServiceId>) -> ServiceGraph {
        ServiceGraph {
            vertices: self.vertices.intersection(keep).cloned().collect(),
            edges: self
                .edges
                .iter()
                .filter(|e| keep.contains(&e.from) && keep.contains(&e.to))
                .cloned()
                .collect(),
            ports: self
                .ports
                .iter()
                .filter(|(v, _)| keep.contains(*v))
                .map(|(v, p)| (v.clone(), p.clone()))
                .collect(),
        }
    }

    pub fn without(&self, drop: &BTreeSet<ServiceId>) -> ServiceGraph {
        let keep = self.vertices.difference(drop).cloned().collect();
        self.induced(&keep)
    }

    /// Weakly connected components, ordered by their smallest vertex.
    pub fn weak_components(&self) -> Vec<BTreeSet<ServiceId>> {
        let mut undirected = self.successors();
        for e in &self.edges {
            undirected.get_mut(&e.to).expect("edge endpoint").insert(e.from.clone());
        }
        let mut seen = BTreeSet::new();
        let mut components = Vec::new();
        for start in &self.vertices {
            if seen.contains(start) {
                continue;
            }
            let mut component = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start.clone());
            while let Some(v) = queue.pop_front() {
                component.insert(v.clone());
                for n in &undirected[v] {
                    if seen.insert(n.clone()) {
                        queue.push_back(n);
                    }
                }
            }
            components.push(component);
        }
        components
    }
}

/// One solid edge per (producer, consumer, local channel).
pub fn build_graph(arch: &Architecture) -> ServiceGraph {
    let wiring = arch.wiring();
    let mut g = ServiceGraph {
        vertices: arch.service_ids().cloned().collect(),
        ..ServiceGraph::default()
    };
    for s in arch.services.values() {
        let ports = g.ports.entry(s.id.clone()).or_default();
        for input in &s.inputs {
            match wiring.producer_of(input) {
                Some(from) => {
                    g.edges.insert(SolidEdge {
                        from: from.clone(),
                        to: s.id.clone(),
                        channel: input.clone(),
                    });
                }
                None => {
                    ports.inputs.insert(input.clone());
                }
            }
        }
        for output in &s.outputs {
            if !wiring.consumers.contains_key(output) {
                ports.outputs.insert(output.clone());
            }
        }
    }
    g
}

/// Vertices with neither solid predecessors nor solid successors.
pub fn classify_dt(g: &ServiceGraph) -> BTreeSet<ServiceId> {
    let mut touched = BTreeSet::new();
    for e in &g.edges {
        touched.insert(&e.from);
        touched.insert(&e.to);
    }
    g.vertices
        .iter()
        .filter(|v| !touched.contains(v))
        .cloned()
        .collect()
}

/// Labels every vertex of `g`.
pub fn classify(g: &ServiceGraph) -> BTreeMap<ServiceId, TrivialClass> {
    let succ = g.successors();
    let pred = g.predecessors();
    let on_cycle: BTreeSet<ServiceId> = fb_scc(g)
        .into_iter()
        .filter(|c| c.len() > 1)
        .flatten()
        .collect();
    g.vertices
        .iter()
        .map(|v| {
            let class = match (pred[v].is_empty(), succ[v].is_empty()) {
                (true, true) => TrivialClass::DT,
                (true, false) => TrivialClass::LT,
                (false, true) => TrivialClass::TT,
                _ if on_cycle.contains(v) => TrivialClass::NonTrivial,
                _ => TrivialClass::T,
            };
            (v.clone(), class)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Owcty {
    /// Removal order; labels are `LT` or `TT`.
    pub removed: Vec<(ServiceId, TrivialClass)>,
    pub core: ServiceGraph,
}

/// Peels trivial vertices until every remaining vertex has a solid
/// predecessor and a solid successor.
///
/// Each round first removes every vertex without predecessors (LT), then,
/// on the reduced graph, every vertex without successors (TT). Within a
/// round vertices are removed in id order.
pub fn owcty_eliminate(g: &ServiceGraph) -> Owcty {
    let mut succ = g.successors();
    let mut pred = g.predecessors();
    let mut alive: BTreeSet<ServiceId> = g.vertices.clone();
    let mut removed = Vec::new();

    fn drop_vertex(v: &ServiceId, succ: &mut Adjacency, pred: &mut Adjacency) {
        for s in succ.remove(v).unwrap_or_default() {
            if let Some(p) = pred.get_mut(&s) {
                p.remove(v);
            }
        }
        for p in pred.remove(v).unwrap_or_default() {
            if let Some(s) = succ.get_mut(&p) {
                s.remove(v);
            }
        }
    }

    loop {
        let leading: Vec<ServiceId> = alive.iter().filter(|v| pred[*v].is_empty()).cloned().collect();
        for v in &leading {
            alive.remove(v);
            drop_vertex(v, &mut succ, &mut pred);
            removed.push((v.clone(), TrivialClass::LT));
        }
        let terminating: Vec<ServiceId> = alive.iter().filter(|v| succ[*v].is_empty()).cloned().collect();
        for v in &terminating {
            alive.remove(v);
            drop_vertex(v, &mut succ, &mut pred);
            removed.push((v.clone(), TrivialClass::TT));
        }
        if leading.is_empty() && terminating.is_empty() {
            break;
        }
    }

    Owcty {
        removed,
        core: g.induced(&alive),
    }
}

fn reach_within(adj: &Adjacency, start: &ServiceId, within: &BTreeSet<ServiceId>) -> BTreeSet<ServiceId> {
    let mut seen = BTreeSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for n in &adj[v] {
            if within.contains(n) && seen.insert(n.clone()) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Strongly connected components by forward-backward decomposition.
///
/// The pivot of each subproblem is its smallest vertex. The component of the
/// pivot is the intersection of its forward and backward closures; the
/// forward-only, backward-only and untouched remainders are solved
/// independently. Components are returned ordered by their smallest vertex.
pub fn fb_scc(g: &ServiceGraph) -> Vec<BTreeSet<ServiceId>> {
    let succ = g.successors();
    let pred = g.predecessors();
    let mut work = vec![g.vertices.clone()];
    let mut found = Vec::new();
    while let Some(set) = work.pop() {
        let Some(pivot) = set.first() else {
            continue;
        };
        let forward = reach_within(&succ, pivot, &set);
        let backward = reach_within(&pred, pivot, &set);
        let scc: BTreeSet<ServiceId> = forward.intersection(&backward).cloned().collect();
        let fwd_rest: BTreeSet<ServiceId> = forward.difference(&scc).cloned().collect();
        let bwd_rest: BTreeSet<ServiceId> = backward.difference(&scc).cloned().collect();
        let untouched: BTreeSet<ServiceId> = set
            .iter()
            .filter(|v| !forward.contains(*v) && !backward.contains(*v))
            .cloned()
            .collect();
        found.push(scc);
        work.extend([untouched, bwd_rest, fwd_rest].into_iter().filter(|s| !s.is_empty()));
    }
    found.sort_by(|a, b| a.first().cmp(&b.first()));
    found
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CondensedService {
    pub id: ServiceId,
    pub members: BTreeSet<ServiceId>,
    /// How the members were found: DT, LT or TT for peeled vertices,
    /// NonTrivial for a multi-vertex component and T for a singleton
    /// component left in the core.
    pub origin: TrivialClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condensation {
    pub architecture: Architecture,
    /// Condensed services in naming order.
    pub services: Vec<CondensedService>,
    /// Weakly connected components analysed after removing DT vertices.
    pub components: Vec<BTreeSet<ServiceId>>,
}

impl Condensation {
    /// The LT/TT removals in order, across all components.
    pub fn peel_trace(&self) -> Vec<(ServiceId, TrivialClass)> {
        self.services
            .iter()
            .filter(|s| matches!(s.origin, TrivialClass::LT | TrivialClass::TT))
            .map(|s| (s.members.first().expect("non-empty").clone(), s.origin))
            .collect()
    }
}

/// Condenses an elementary architecture into its strongly connected
/// services. New services are named `S_1, S_2, ...`: disconnected vertices
/// first, then per component the peeled vertices in removal order followed
/// by the core components.
pub fn condense_to_l2(arch: &Architecture) -> Result<Condensation> {
    let violations = validate(arch);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    let g = build_graph(arch);
    let disconnected = classify_dt(&g);
    let rest = g.without(&disconnected);
    let components = rest.weak_components();

    let mut order: Vec<(BTreeSet<ServiceId>, TrivialClass)> = disconnected
        .iter()
        .map(|v| (BTreeSet::from([v.clone()]), TrivialClass::DT))
        .collect();
    for component in &components {
        let owcty = owcty_eliminate(&rest.induced(component));
        order.extend(
            owcty
                .removed
                .into_iter()
                .map(|(v, class)| (BTreeSet::from([v]), class)),
        );
        for scc in fb_scc(&owcty.core) {
            let class = if scc.len() > 1 {
                TrivialClass::NonTrivial
            } else {
                TrivialClass::T
            };
            order.push((scc, class));
        }
    }

    let mut next = Architecture {
        level: "L2".into(),
        services: BTreeMap::new(),
        uplsize: arch.uplsize.clone(),
        thresholds: arch.thresholds,
        membership: BTreeMap::new(),
    };
    let mut services = Vec::with_capacity(order.len());
    for (k, (members, origin)) in order.into_iter().enumerate() {
        let id = ServiceId::new(format!("S_{}", k + 1));
        let service = if members.len() == 1 {
            let mut single = arch.services[members.first().expect("non-empty")].clone();
            single.id = id.clone();
            single.child_names.clear();
            single
        } else {
            compose(arch, id.clone(), &members)?
        };
        next.insert(service);
        next.membership.insert(id.clone(), members.clone());
        services.push(CondensedService { id, members, origin });
    }

    Ok(Condensation {
        architecture: next,
        services,
        components,
    })
}
