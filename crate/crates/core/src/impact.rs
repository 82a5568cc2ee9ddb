//! Failure impact and worst-case execution time per output.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::deps::all_acceptors;
use crate::error::{Error, Result};
use crate::model::{Architecture, ChannelId, ServiceId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ImpactEntry {
    /// The service itself and everything that accepts its outputs.
    pub impact_set: BTreeSet<ServiceId>,
    pub impact_number: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ImpactReport {
    pub services: BTreeMap<ServiceId, ImpactEntry>,
}

impl ImpactReport {
    pub fn number(&self, service: &str) -> Option<usize> {
        self.services.get(service).map(|e| e.impact_number)
    }
}

/// Services affected by a failure of each service.
pub fn impact(arch: &Architecture) -> ImpactReport {
    let services = all_acceptors(arch)
        .into_iter()
        .map(|(id, mut set)| {
            set.insert(id.clone());
            let entry = ImpactEntry {
                impact_number: set.len(),
                impact_set: set,
            };
            (id, entry)
        })
        .collect();
    ImpactReport { services }
}

pub type WcetMap = BTreeMap<ServiceId, f64>;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct WcetReport {
    pub outputs: BTreeMap<ChannelId, f64>,
}

/// WCET of every produced channel.
pub fn wcet_per_output(arch: &Architecture) -> Result<WcetReport> {
    let all: Vec<ChannelId> = arch.wiring().producer.into_keys().collect();
    wcet_for_outputs(arch, &all)
}

/// WCET of the given channels: the largest sum of producer WCETs along any
/// dependency path ending at the channel. Only the dependency cones of the
/// requested channels must be acyclic and measured.
pub fn wcet_for_outputs(arch: &Architecture, outputs: &[ChannelId]) -> Result<WcetReport> {
    let wiring = arch.wiring();
    for y in outputs {
        if wiring.producer_of(y).is_none() {
            return Err(Error::NoProducer(y.clone()));
        }
    }

    // Dependency edges between produced channels inside the requested cones.
    let mut cone: BTreeSet<&ChannelId> = BTreeSet::new();
    let mut stack: Vec<&ChannelId> = outputs.iter().collect();
    let mut deps: BTreeMap<&ChannelId, Vec<&ChannelId>> = BTreeMap::new();
    while let Some(ch) = stack.pop() {
        if !cone.insert(ch) {
            continue;
        }
        let producer = &arch.services[wiring.producer_of(ch).expect("produced")];
        let upstream: Vec<&ChannelId> = producer
            .deps_of(ch)
            .map(|d| &d.channel)
            .filter(|c| wiring.producer_of(c).is_some())
            .collect();
        stack.extend(upstream.iter().copied());
        deps.insert(ch, upstream);
    }

    // Kahn's algorithm from the channels that depend on nothing produced.
    let mut pending: BTreeMap<&ChannelId, usize> = deps.iter().map(|(c, up)| (*c, up.len())).collect();
    let mut downstream: BTreeMap<&ChannelId, Vec<&ChannelId>> = BTreeMap::new();
    for (c, up) in &deps {
        for u in up {
            downstream.entry(*u).or_default().push(*c);
        }
    }
    let mut ready: Vec<&ChannelId> = pending.iter().filter(|(_, n)| **n == 0).map(|(c, _)| *c).collect();
    let mut best: BTreeMap<&ChannelId, f64> = BTreeMap::new();
    while let Some(ch) = ready.pop() {
        let producer = wiring.producer_of(ch).expect("produced");
        let own = arch.services[producer].wcet.ok_or_else(|| Error::MissingMeasure {
            kind: "wcet",
            subject: producer.to_string(),
        })?;
        let longest_upstream = deps[ch].iter().map(|u| best[u]).fold(0.0, f64::max);
        best.insert(ch, own + longest_upstream);
        for d in downstream.get(ch).into_iter().flatten() {
            let n = pending.get_mut(d).expect("in cone");
            *n -= 1;
            if *n == 0 {
                ready.push(d);
            }
        }
    }
    if best.len() < deps.len() {
        let stuck = pending
            .into_iter()
            .filter(|(_, n)| *n > 0)
            .map(|(c, _)| c.clone())
            .collect();
        return Err(Error::CyclicGraph(stuck));
    }

    Ok(WcetReport {
        outputs: outputs.iter().map(|y| (y.clone(), best[y])).collect(),
    })
}

/// Sums member WCETs into each composite.
pub fn aggregate_scs_wcet(
    membership: &BTreeMap<ServiceId, BTreeSet<ServiceId>>,
    base: &WcetMap,
) -> Result<WcetMap> {
    aggregate_sum(membership, base, "wcet")
}

pub(crate) fn aggregate_sum(
    membership: &BTreeMap<ServiceId, BTreeSet<ServiceId>>,
    base: &BTreeMap<ServiceId, f64>,
    kind: &'static str,
) -> Result<BTreeMap<ServiceId, f64>> {
    membership
        .iter()
        .map(|(composite, members)| {
            if members.is_empty() {
                return Err(Error::EmptyMembers);
            }
            let total = members
                .iter()
                .map(|m| {
                    base.get(m).copied().ok_or_else(|| Error::MissingMeasure {
                        kind,
                        subject: m.to_string(),
                    })
                })
                .sum::<Result<f64>>()?;
            Ok((composite.clone(), total))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{DepRef, Service};

    #[test]
    fn impact_numbers_at_level_one() {
        let report = impact(&fixtures::system_s_l1());
        assert_eq!(report.number("A_11"), Some(7));
        for leaf in ["A_12", "A_21", "A_5"] {
            assert_eq!(report.number(leaf), Some(1), "{leaf}");
        }
        // members of the cycle reach themselves
        assert_eq!(report.number("A_22"), Some(3));
    }

    #[test]
    fn edgeless_architecture_has_unit_impact() {
        let arch = Architecture::new("L0")
            .with_service(Service::new("A").with_output("a", [DepRef::direct("x")]))
            .with_service(Service::new("B").with_output("b", [DepRef::direct("x")]));
        assert!(impact(&arch).services.values().all(|e| e.impact_number == 1));
    }

    fn weighted_l1() -> Architecture {
        let mut arch = fixtures::system_s_l1();
        for (i, s) in arch.services.values_mut().enumerate() {
            s.wcet = Some((i + 1) as f64);
        }
        arch
    }

    #[test]
    fn wcet_of_acyclic_cones_at_level_one() {
        let arch = weighted_l1();
        let w = |id: &str| arch.services[id].wcet.unwrap();
        let report = wcet_for_outputs(
            &arch,
            &["data_2".into(), "data_10".into(), "data_11".into(), "data_9".into()],
        )
        .unwrap();
        assert_eq!(report.outputs[&ChannelId::from("data_2")], w("A_11"));
        assert_eq!(report.outputs[&ChannelId::from("data_10")], w("A_12"));
        assert_eq!(report.outputs[&ChannelId::from("data_11")], w("A_11") + w("A_21"));
        assert_eq!(report.outputs[&ChannelId::from("data_9")], w("A_42") + w("A_5"));
    }

    #[test]
    fn cyclic_cone_is_an_error() {
        let arch = weighted_l1();
        assert!(matches!(
            wcet_for_outputs(&arch, &["data_12".into()]),
            Err(Error::CyclicGraph(_))
        ));
        assert!(matches!(wcet_per_output(&arch), Err(Error::CyclicGraph(_))));
    }

    #[test]
    fn missing_measure_names_the_service() {
        let arch = fixtures::system_s_l0();
        match wcet_for_outputs(&arch, &["data_2".into()]) {
            Err(Error::MissingMeasure { kind: "wcet", subject }) => assert_eq!(subject, "A_1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wcet_at_level_two_uses_aggregated_members() {
        let l1 = weighted_l1();
        let l2 = crate::scc::condense_to_l2(&l1).unwrap().architecture;
        let base: WcetMap = l1.services.values().map(|s| (s.id.clone(), s.wcet.unwrap())).collect();
        let aggregated = aggregate_scs_wcet(&l2.membership, &base).unwrap();
        let w = |id: &str| base[&ServiceId::from(id)];
        assert_eq!(aggregated[&ServiceId::from("S_6")], w("A_22") + w("A_31") + w("A_41"));
        assert_eq!(aggregated[&ServiceId::from("S_2")], w("A_11"));
        let report = wcet_per_output(&l2).unwrap();
        // data_12 <- S_6 <- {data_2 <- S_2, data_7 <- S_5 <- S_4 <- S_2}
        let expected = aggregated[&ServiceId::from("S_6")]
            + aggregated[&ServiceId::from("S_5")]
            + aggregated[&ServiceId::from("S_4")]
            + aggregated[&ServiceId::from("S_2")];
        assert_eq!(report.outputs[&ChannelId::from("data_12")], expected);
    }

    #[test]
    fn aggregation_errors() {
        let membership = BTreeMap::from([("S".into(), BTreeSet::new())]);
        assert!(matches!(
            aggregate_scs_wcet(&membership, &WcetMap::new()),
            Err(Error::EmptyMembers)
        ));
        let membership = BTreeMap::from([("S".into(), BTreeSet::from(["A".into()]))]);
        assert!(matches!(
            aggregate_scs_wcet(&membership, &WcetMap::new()),
            Err(Error::MissingMeasure { .. })
        ));
    }
}
