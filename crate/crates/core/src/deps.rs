//! Dependency functions over one abstraction level: direct and transitive
//! sources, acceptors, output dependents, the unused-input lint and the
//! dependency sets of composed services.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Architecture, ChannelId, DepRef, DepSet, LocalVarId, Service, ServiceId, Wiring};

/// Direct and transitive sources of one service.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceSet {
    pub service: ServiceId,
    pub direct: BTreeSet<ServiceId>,
    pub transitive: BTreeSet<ServiceId>,
}

fn require<'a>(arch: &'a Architecture, id: &ServiceId) -> Result<&'a Service> {
    arch.service(id)
        .ok_or_else(|| Error::UnknownService(id.clone()))
}

fn predecessors(arch: &Architecture) -> BTreeMap<ServiceId, BTreeSet<ServiceId>> {
    let mut pred: BTreeMap<ServiceId, BTreeSet<ServiceId>> = arch
        .service_ids()
        .map(|id| (id.clone(), BTreeSet::new()))
        .collect();
    for (from, succ) in arch.successors() {
        for to in succ {
            pred.get_mut(&to).expect("known service").insert(from.clone());
        }
    }
    pred
}

/// Non-reflexive reachability along `edges` starting from the neighbours of
/// `start`. `start` itself is included only if it lies on a cycle.
fn reach(edges: &BTreeMap<ServiceId, BTreeSet<ServiceId>>, start: &ServiceId) -> BTreeSet<ServiceId> {
    let mut seen = BTreeSet::new();
    let mut queue: VecDeque<&ServiceId> = edges[start].iter().collect();
    while let Some(next) = queue.pop_front() {
        if seen.insert(next.clone()) {
            queue.extend(edges[next].iter().filter(|n| !seen.contains(*n)));
        }
    }
    seen
}

/// Producers of the input channels of `service`.
pub fn direct_sources(arch: &Architecture, service: &ServiceId) -> Result<BTreeSet<ServiceId>> {
    let s = require(arch, service)?;
    let wiring = arch.wiring();
    Ok(s.inputs
        .iter()
        .filter_map(|ch| wiring.producer_of(ch).cloned())
        .collect())
}

/// All services with a non-empty path to `service`.
pub fn sources(arch: &Architecture, service: &ServiceId) -> Result<BTreeSet<ServiceId>> {
    require(arch, service)?;
    Ok(reach(&predecessors(arch), service))
}

pub fn source_set(arch: &Architecture, service: &ServiceId) -> Result<SourceSet> {
    Ok(SourceSet {
        service: service.clone(),
        direct: direct_sources(arch, service)?,
        transitive: sources(arch, service)?,
    })
}

/// Sources of every service, computed with one shared predecessor map.
pub fn all_sources(arch: &Architecture) -> BTreeMap<ServiceId, BTreeSet<ServiceId>> {
    let pred = predecessors(arch);
    arch.service_ids()
        .map(|id| (id.clone(), reach(&pred, id)))
        .collect()
}

/// Consumers of the output channels of `service`.
pub fn direct_acceptors(arch: &Architecture, service: &ServiceId) -> Result<BTreeSet<ServiceId>> {
    require(arch, service)?;
    Ok(arch.successors().remove(service).unwrap_or_default())
}

/// All services with a non-empty path from `service`.
pub fn acceptors(arch: &Architecture, service: &ServiceId) -> Result<BTreeSet<ServiceId>> {
    require(arch, service)?;
    Ok(reach(&arch.successors(), service))
}

pub fn all_acceptors(arch: &Architecture) -> BTreeMap<ServiceId, BTreeSet<ServiceId>> {
    let succ = arch.successors();
    arch.service_ids()
        .map(|id| (id.clone(), reach(&succ, id)))
        .collect()
}

/// Outputs of `service` whose dependency set mentions `input`.
pub fn output_dependents(
    arch: &Architecture,
    service: &ServiceId,
    input: &ChannelId,
) -> Result<BTreeSet<ChannelId>> {
    let s = require(arch, service)?;
    if !s.inputs.contains(input) {
        return Err(Error::NotAnInput {
            service: service.clone(),
            channel: input.clone(),
        });
    }
    Ok(s.ideps
        .iter()
        .filter(|(_, deps)| deps.iter().any(|d| &d.channel == input))
        .map(|(out, _)| out.clone())
        .collect())
}

/// Inputs that no output depends on.
pub fn lint_unused_inputs(arch: &Architecture) -> Vec<(ServiceId, ChannelId)> {
    let mut found = Vec::new();
    for s in arch.services.values() {
        let used: BTreeSet<&ChannelId> = s.ideps.values().flatten().map(|d| &d.channel).collect();
        for input in &s.inputs {
            if !used.contains(input) {
                found.push((s.id.clone(), input.clone()));
            }
        }
    }
    found
}

/// Channel-level view of a member set.
struct Interior<'a> {
    members: Vec<&'a Service>,
    produced: BTreeMap<&'a ChannelId, &'a Service>,
    consumed: BTreeSet<&'a ChannelId>,
}

impl<'a> Interior<'a> {
    fn new(arch: &'a Architecture, members: &BTreeSet<ServiceId>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyMembers);
        }
        let members = members
            .iter()
            .map(|id| require(arch, id))
            .collect::<Result<Vec<_>>>()?;
        let produced = members
            .iter()
            .flat_map(|s| s.outputs.iter().map(move |c| (c, *s)))
            .collect();
        let consumed = members.iter().flat_map(|s| &s.inputs).collect();
        Ok(Self {
            members,
            produced,
            consumed,
        })
    }

    /// External inputs reachable backwards from the internal channel `start`.
    fn external_roots(&self, start: &ChannelId) -> BTreeSet<ChannelId> {
        let mut roots = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(ch) = stack.pop() {
            if !seen.insert(ch) {
                continue;
            }
            match self.produced.get(ch) {
                Some(producer) => stack.extend(producer.deps_of(ch).map(|d| &d.channel)),
                None => {
                    roots.insert(ch.clone());
                }
            }
        }
        roots
    }

    fn external_outputs(&self, wiring: &Wiring, ids: &BTreeSet<ServiceId>) -> BTreeSet<ChannelId> {
        self.produced
            .keys()
            .filter(|ch| {
                !self.consumed.contains(*ch) || wiring.consumers_of(ch).any(|c| !ids.contains(c))
            })
            .map(|ch| (*ch).clone())
            .collect()
    }

    fn external_inputs(&self) -> BTreeSet<ChannelId> {
        self.consumed
            .iter()
            .filter(|ch| !self.produced.contains_key(*ch))
            .map(|ch| (*ch).clone())
            .collect()
    }

    fn deps_of_output(&self, output: &ChannelId) -> DepSet {
        let producer = self.produced[output];
        let mut deps = DepSet::new();
        for dep in producer.deps_of(output) {
            if self.produced.contains_key(&dep.channel) {
                for root in self.external_roots(&dep.channel) {
                    deps.insert(DepRef {
                        channel: root,
                        via: dep.via.clone(),
                    });
                }
            } else {
                deps.insert(dep.clone());
            }
        }
        deps
    }
}

/// Dependency sets of the service obtained by composing `members`.
///
/// Keys are the external outputs: channels produced by a member and either
/// consumed by no member or also consumed outside the set. Values are the
/// external inputs reached backwards through the members' dependency sets.
/// A reached input keeps the via-tag of the dependency step taken at the
/// producer of the external output.
pub fn composite_ideps(
    arch: &Architecture,
    members: &BTreeSet<ServiceId>,
) -> Result<BTreeMap<ChannelId, DepSet>> {
    let interior = Interior::new(arch, members)?;
    let wiring = arch.wiring();
    Ok(interior
        .external_outputs(&wiring, members)
        .into_iter()
        .map(|out| {
            let deps = interior.deps_of_output(&out);
            (out, deps)
        })
        .collect())
}

/// Builds the composed service `id` from `members`. Measures are summed when
/// every member carries them and left unset otherwise.
pub fn compose(arch: &Architecture, id: ServiceId, members: &BTreeSet<ServiceId>) -> Result<Service> {
    let interior = Interior::new(arch, members)?;
    let wiring = arch.wiring();
    let outputs = interior.external_outputs(&wiring, members);
    let ideps = outputs
        .iter()
        .map(|out| (out.clone(), interior.deps_of_output(out)))
        .collect();
    let local_vars: BTreeSet<LocalVarId> = interior
        .members
        .iter()
        .flat_map(|s| s.local_vars.iter().cloned())
        .collect();
    let sum = |get: fn(&Service) -> Option<f64>| -> Option<f64> {
        interior.members.iter().map(|s| get(s)).sum::<Option<f64>>()
    };
    Ok(Service {
        id,
        inputs: interior.external_inputs(),
        outputs,
        local_vars,
        ideps,
        wcet: sum(|s| s.wcet),
        perf: sum(|s| s.perf),
        child_names: BTreeMap::new(),
    })
}
