//! Splitting services into elementary subservices.
//!
//! An output that depends on its inputs only directly gets a subservice of
//! its own. Outputs that read the same local variable are kept together so
//! the variable is computed once; grouping is the connected components of the
//! bipartite output/variable relation.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{validate, Architecture, ChannelId, LocalVarId, Service, ServiceId, Violation};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementaryGroup {
    pub new_id: ServiceId,
    pub outputs: BTreeSet<ChannelId>,
    pub inputs: BTreeSet<ChannelId>,
    pub vars: BTreeSet<LocalVarId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ElementaryPlan {
    pub parent: ServiceId,
    pub groups: Vec<ElementaryGroup>,
}

impl ElementaryPlan {
    /// True when the plan leaves the service as it is.
    pub fn is_identity(&self) -> bool {
        self.groups.len() == 1 && self.groups[0].new_id == self.parent
    }
}

/// Output groups of `service`, ordered by their smallest output.
fn output_groups(service: &Service) -> Vec<BTreeSet<ChannelId>> {
    let outputs: Vec<&ChannelId> = service.outputs.iter().collect();
    let mut parent: Vec<usize> = (0..outputs.len()).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    let mut first_reader: BTreeMap<&LocalVarId, usize> = BTreeMap::new();
    for (i, out) in outputs.iter().enumerate() {
        for var in service.deps_of(out).filter_map(|d| d.via.as_ref()) {
            let j = *first_reader.entry(var).or_insert(i);
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }

    let mut groups: BTreeMap<usize, BTreeSet<ChannelId>> = BTreeMap::new();
    for (i, out) in outputs.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().insert((*out).clone());
    }
    // roots are the smallest index of each group, so map order is min-output order
    groups.into_values().collect()
}

/// Decides how `service` splits into elementary subservices.
pub fn plan_elementary(arch: &Architecture, service: &ServiceId) -> Result<ElementaryPlan> {
    let s = arch
        .service(service)
        .ok_or_else(|| Error::UnknownService(service.clone()))?;

    if s.outputs.is_empty() {
        return Ok(ElementaryPlan {
            parent: s.id.clone(),
            groups: vec![ElementaryGroup {
                new_id: s.id.clone(),
                outputs: BTreeSet::new(),
                inputs: s.inputs.clone(),
                vars: s.local_vars.clone(),
            }],
        });
    }

    let groups = output_groups(s);
    let single = groups.len() == 1;
    let mut plan = ElementaryPlan {
        parent: s.id.clone(),
        groups: Vec::with_capacity(groups.len()),
    };
    for (ordinal, outputs) in groups.into_iter().enumerate() {
        let new_id = if single {
            s.id.clone()
        } else {
            child_name(s, &outputs)?
                .unwrap_or_else(|| ServiceId::new(format!("{}{}", s.id, ordinal + 1)))
        };
        let deps = outputs.iter().flat_map(|o| s.deps_of(o));
        let (inputs, vars) = deps.fold(
            (BTreeSet::new(), BTreeSet::new()),
            |(mut inputs, mut vars), d| {
                inputs.insert(d.channel.clone());
                vars.extend(d.via.clone());
                (inputs, vars)
            },
        );
        plan.groups.push(ElementaryGroup {
            new_id,
            outputs,
            inputs,
            vars,
        });
    }
    Ok(plan)
}

fn child_name(s: &Service, outputs: &BTreeSet<ChannelId>) -> Result<Option<ServiceId>> {
    let mut chosen: Option<(&ChannelId, &ServiceId)> = None;
    for out in outputs {
        let Some(name) = s.child_names.get(out) else {
            continue;
        };
        match chosen {
            Some((first, prev)) if prev != name => {
                return Err(Error::ConflictingChildNames {
                    service: s.id.clone(),
                    first: first.clone(),
                    second: out.clone(),
                })
            }
            Some(_) => {}
            None => chosen = Some((out, name)),
        }
    }
    Ok(chosen.map(|(_, name)| name.clone()))
}

fn realize(parent: &Service, group: &ElementaryGroup, identity: bool) -> Service {
    if identity {
        let mut same = parent.clone();
        same.child_names.clear();
        return same;
    }
    Service {
        id: group.new_id.clone(),
        inputs: group.inputs.clone(),
        outputs: group.outputs.clone(),
        local_vars: group.vars.clone(),
        ideps: group
            .outputs
            .iter()
            .map(|o| (o.clone(), parent.ideps.get(o).cloned().unwrap_or_default()))
            .collect(),
        wcet: None,
        perf: None,
        child_names: BTreeMap::new(),
    }
}

/// Replaces every service by its elementary subservices. The result carries
/// a membership map from each original service to its children.
///
/// A service that stays in one piece is carried over unchanged; split
/// children start without measures.
pub fn decompose_all(arch: &Architecture) -> Result<Architecture> {
    let mut next = Architecture {
        level: "L1".into(),
        services: BTreeMap::new(),
        uplsize: arch.uplsize.clone(),
        thresholds: arch.thresholds,
        membership: BTreeMap::new(),
    };
    for s in arch.services.values() {
        let plan = plan_elementary(arch, &s.id)?;
        let identity = plan.is_identity();
        let mut children = BTreeSet::new();
        for group in &plan.groups {
            let child = realize(s, group, identity);
            children.insert(child.id.clone());
            if next.services.insert(child.id.clone(), child).is_some() {
                return Err(Error::Invalid(vec![Violation::DuplicateService(
                    group.new_id.clone(),
                )]));
            }
        }
        next.membership.insert(s.id.clone(), children);
    }
    let violations = validate(&next);
    if !violations.is_empty() {
        return Err(Error::Invalid(violations));
    }
    Ok(next)
}

/// True when `s` has one output, or all its outputs are linked through
/// shared local variables.
pub fn is_elementary(s: &Service) -> bool {
    output_groups(s).len() <= 1
}
