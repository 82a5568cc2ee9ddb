//! Grouping condensed services for local or remote deployment.
//!
//! Channels whose upload size exceeds the load threshold keep their endpoints
//! together; all other solid edges are cut. Consumers of the same heavy
//! system input are kept together as well. Each resulting group becomes one
//! service of the next level and is deployed remotely when one of its
//! members is compute-heavy, unless it reads a heavy system input.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::deps::compose;
use crate::error::{Error, Result};
use crate::impact::aggregate_sum;
use crate::model::{Architecture, ChannelId, ServiceId, Thresholds};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Deployment {
    Local,
    Remote,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    /// A member reads a system input above the load threshold.
    HighChannel { channel: ChannelId, service: ServiceId },
    /// A member's compute cost exceeds the performance threshold.
    HighPerf { service: ServiceId, perf: f64 },
    /// Two members are joined by a channel above the load threshold.
    HeavyLink { channel: ChannelId },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionGroup {
    pub new_id: ServiceId,
    pub members: BTreeSet<ServiceId>,
    pub deployment: Deployment,
    pub reasons: Vec<Reason>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PartitionPlan {
    pub high_channels: BTreeSet<ChannelId>,
    pub high_perf: BTreeSet<ServiceId>,
    pub groups: Vec<PartitionGroup>,
}

fn thresholds(arch: &Architecture) -> Result<Thresholds> {
    arch.thresholds.ok_or(Error::MissingThresholds)
}

/// Channels of `arch` whose upload size is strictly above `high_load`.
/// Channels that no service of `arch` mentions (for example channels hidden
/// inside a composite) are ignored.
pub fn classify_channels(arch: &Architecture) -> Result<BTreeSet<ChannelId>> {
    let limit = thresholds(arch)?.high_load;
    let mut high = BTreeSet::new();
    for channel in arch.channels() {
        let size = arch.uplsize.get(&channel).ok_or_else(|| Error::MissingMeasure {
            kind: "uplsize",
            subject: channel.to_string(),
        })?;
        if *size > limit {
            high.insert(channel);
        }
    }
    Ok(high)
}

/// Sums member perf into each composite.
pub fn aggregate_perf(
    membership: &BTreeMap<ServiceId, BTreeSet<ServiceId>>,
    base: &BTreeMap<ServiceId, f64>,
) -> Result<BTreeMap<ServiceId, f64>> {
    aggregate_sum(membership, base, "perf")
}

/// Services of `arch` whose perf is strictly above `high_perf`.
pub fn high_perf_services(arch: &Architecture) -> Result<BTreeSet<ServiceId>> {
    let limit = thresholds(arch)?.high_perf;
    let mut high = BTreeSet::new();
    for s in arch.services.values() {
        let perf = s.perf.ok_or_else(|| Error::MissingMeasure {
            kind: "perf",
            subject: s.id.to_string(),
        })?;
        if perf > limit {
            high.insert(s.id.clone());
        }
    }
    Ok(high)
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

fn composite_name(arch: &Architecture, first: &ServiceId, taken: &BTreeSet<ServiceId>) -> ServiceId {
    let mut name = format!("{first}p");
    while arch.services.contains_key(name.as_str()) || taken.contains(name.as_str()) {
        name.push('p');
    }
    ServiceId::new(name)
}

/// Builds the deployment-oriented level above `arch`.
///
/// Singleton groups keep their service unchanged. A larger group is composed
/// into one service named after its smallest member with a `p` suffix.
pub fn partition_l3(arch: &Architecture) -> Result<(Architecture, PartitionPlan)> {
    let high_channels = classify_channels(arch)?;
    let high_perf = high_perf_services(arch)?;
    let wiring = arch.wiring();
    let boundary = arch.boundary();

    let ids: Vec<&ServiceId> = arch.service_ids().collect();
    let index: BTreeMap<&ServiceId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let mut dsu = Dsu::new(ids.len());
    let mut links: Vec<(usize, ChannelId)> = Vec::new();
    for channel in &high_channels {
        let consumers: Vec<usize> = wiring.consumers_of(channel).map(|c| index[c]).collect();
        match wiring.producer_of(channel) {
            Some(producer) => {
                for c in &consumers {
                    dsu.union(index[producer], *c);
                    links.push((index[producer], channel.clone()));
                }
            }
            None => {
                for pair in consumers.windows(2) {
                    dsu.union(pair[0], pair[1]);
                    links.push((pair[0], channel.clone()));
                }
            }
        }
    }

    let mut grouped: BTreeMap<usize, BTreeSet<ServiceId>> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        let root = dsu.find(i);
        grouped.entry(root).or_default().insert((*id).clone());
    }
    let mut link_reasons: BTreeMap<usize, BTreeSet<ChannelId>> = BTreeMap::new();
    for (i, channel) in links {
        let root = dsu.find(i);
        link_reasons.entry(root).or_default().insert(channel);
    }

    let mut plan = PartitionPlan {
        high_channels: high_channels.clone(),
        high_perf: high_perf.clone(),
        groups: Vec::new(),
    };
    let mut next = Architecture {
        level: "L3".into(),
        services: BTreeMap::new(),
        uplsize: arch.uplsize.clone(),
        thresholds: arch.thresholds,
        membership: BTreeMap::new(),
    };
    let mut taken = BTreeSet::new();
    for (root, members) in grouped {
        let mut reasons = Vec::new();
        for m in &members {
            for input in &arch.services[m].inputs {
                if boundary.system_inputs.contains(input) && high_channels.contains(input) {
                    reasons.push(Reason::HighChannel {
                        channel: input.clone(),
                        service: m.clone(),
                    });
                }
            }
        }
        let pinned_local = !reasons.is_empty();
        for m in members.iter().filter(|m| high_perf.contains(*m)) {
            reasons.push(Reason::HighPerf {
                service: m.clone(),
                perf: arch.services[m].perf.expect("checked by high_perf_services"),
            });
        }
        let remote = !pinned_local && members.iter().any(|m| high_perf.contains(m));
        reasons.extend(
            link_reasons
                .remove(&root)
                .into_iter()
                .flatten()
                .map(|channel| Reason::HeavyLink { channel }),
        );

        let first = members.first().expect("non-empty group");
        let service = if members.len() == 1 {
            arch.services[first].clone()
        } else {
            let id = composite_name(arch, first, &taken);
            compose(arch, id, &members)?
        };
        taken.insert(service.id.clone());
        next.membership.insert(service.id.clone(), members.clone());
        plan.groups.push(PartitionGroup {
            new_id: service.id.clone(),
            members,
            deployment: if remote { Deployment::Remote } else { Deployment::Local },
            reasons,
        });
        next.insert(service);
    }
    Ok((next, plan))
}
