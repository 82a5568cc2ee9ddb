mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use svcarch::deps::{acceptors, all_acceptors, all_sources, direct_sources, lint_unused_inputs};
use svcarch::elementary::{decompose_all, is_elementary};
use svcarch::impact::{impact, wcet_per_output};
use svcarch::io::{parse_architecture, to_canonical_string, Mode};
use svcarch::model::{validate, Boundary};
use svcarch::partition::{partition_l3, Deployment};
use svcarch::scc::{build_graph, condense_to_l2, fb_scc, owcty_eliminate, TrivialClass};
use svcarch::slicing::{slice, PropertySpec};
use svcarch::{Architecture, ChannelId, DepRef, ServiceId, Thresholds};

use common::*;

fn io_boundary(b: Boundary) -> (BTreeSet<ChannelId>, BTreeSet<ChannelId>) {
    (b.system_inputs, b.system_outputs)
}

fn arch_strategy() -> impl Strategy<Value = Architecture> {
    any::<u64>().prop_map(|seed| random_architecture(seed, GenConfig::default()))
}

fn dag_strategy() -> impl Strategy<Value = Architecture> {
    any::<u64>().prop_map(random_dag)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_architectures_are_valid(arch in arch_strategy()) {
        prop_assert_eq!(validate(&arch), vec![]);
        prop_assert!(lint_unused_inputs(&arch).is_empty());
        prop_assert!(arch.services.len() <= MAX_SERVICES);
        prop_assert!(arch.channels().len() <= MAX_CHANNELS);
    }

    #[test]
    fn sources_match_transitive_closure(arch in arch_strategy()) {
        prop_assert_eq!(all_sources(&arch), oracle_sources(&arch));
    }

    #[test]
    fn direct_sources_bound_bound_sources(arch in arch_strategy()) {
        let sources = all_sources(&arch);
        let direct: BTreeMap<_, _> = arch
            .service_ids()
            .map(|id| (id.clone(), direct_sources(&arch, id).unwrap()))
            .collect();
        let some_direct: BTreeSet<&ServiceId> = direct.values().flatten().collect();
        for x in arch.service_ids() {
            if !some_direct.contains(x) {
                prop_assert!(sources.values().all(|s| !s.contains(x)));
            }
        }
        for id in arch.service_ids() {
            prop_assert!(direct[id].is_subset(&sources[id]));
            prop_assert_eq!(direct[id].is_empty(), sources[id].is_empty());
        }
    }

    #[test]
    fn sources_are_transitive(arch in arch_strategy()) {
        let sources = all_sources(&arch);
        for (z, of_z) in &sources {
            for s in of_z {
                for c in &sources[s] {
                    prop_assert!(sources[z].contains(c), "{c} -> {s} -> {z}");
                }
            }
        }
    }

    #[test]
    fn mutual_sources_coincide(arch in arch_strategy()) {
        let sources = all_sources(&arch);
        for c in arch.service_ids() {
            for s in arch.service_ids() {
                if sources[s].contains(c) && sources[c].contains(s) {
                    prop_assert_eq!(&sources[c], &sources[s]);
                    prop_assert!(sources[c].contains(c) && sources[c].contains(s));
                }
            }
        }
    }

    #[test]
    fn acceptors_are_dual_to_sources(arch in arch_strategy()) {
        let sources = all_sources(&arch);
        let acc = all_acceptors(&arch);
        for a in arch.service_ids() {
            for b in arch.service_ids() {
                prop_assert_eq!(acc[a].contains(b), sources[b].contains(a));
            }
        }
    }

    #[test]
    fn adding_a_dependency_never_shrinks_sources(arch in arch_strategy(), pick in any::<(u8, u8, u8)>()) {
        let before = all_sources(&arch);
        let ids: Vec<ServiceId> = arch.service_ids().cloned().collect();
        let from = &ids[pick.0 as usize % ids.len()];
        let to = &ids[pick.1 as usize % ids.len()];
        prop_assume!(from != to);
        let channel = arch.services[from].outputs.iter().nth(pick.2 as usize % arch.services[from].outputs.len().max(1)).cloned();
        let Some(channel) = channel else { return Ok(()) };
        let Some(out) = arch.services[to].outputs.first().cloned() else { return Ok(()) };
        let mut grown = arch.clone();
        let target = grown.services.get_mut(to).unwrap();
        target.inputs.insert(channel.clone());
        target.ideps.get_mut(&out).unwrap().insert(DepRef::direct(channel));
        prop_assert_eq!(validate(&grown), vec![]);
        let after = all_sources(&grown);
        for id in &ids {
            prop_assert!(before[id].is_subset(&after[id]));
        }
        prop_assert!(after[to].contains(from));
    }

    #[test]
    fn fb_scc_matches_kosaraju(arch in arch_strategy()) {
        let g = build_graph(&arch);
        let fb: BTreeSet<BTreeSet<ServiceId>> = fb_scc(&g).into_iter().collect();
        let oracle = kosaraju(&g);
        prop_assert_eq!(&fb, &oracle);
        let condensed: BTreeSet<BTreeSet<ServiceId>> = condense_to_l2(&arch)
            .unwrap()
            .services
            .into_iter()
            .map(|s| s.members)
            .collect();
        prop_assert_eq!(condensed, oracle);
    }

    #[test]
    fn owcty_only_removes_trivial_vertices(arch in arch_strategy()) {
        let g = build_graph(&arch);
        let singletons: BTreeSet<ServiceId> = kosaraju(&g)
            .into_iter()
            .filter(|c| c.len() == 1)
            .flatten()
            .collect();
        let owcty = owcty_eliminate(&g);
        let mut gone = BTreeSet::new();
        for (v, class) in &owcty.removed {
            prop_assert!(singletons.contains(v));
            prop_assert!(matches!(class, TrivialClass::LT | TrivialClass::TT));
            prop_assert!(gone.insert(v.clone()));
        }
        let succ = owcty.core.successors();
        let pred = owcty.core.predecessors();
        for v in &owcty.core.vertices {
            prop_assert!(succ.get(v).is_some_and(|s| !s.is_empty()));
            prop_assert!(pred.get(v).is_some_and(|s| !s.is_empty()));
        }
        let all: BTreeSet<ServiceId> = gone.union(&owcty.core.vertices).cloned().collect();
        prop_assert_eq!(all, g.vertices);
    }

    #[test]
    fn wcet_matches_path_enumeration(arch in dag_strategy()) {
        let report = wcet_per_output(&arch).unwrap();
        for (channel, w) in &report.outputs {
            prop_assert_eq!(*w, oracle_wcet(&arch, channel));
        }
    }

    #[test]
    fn wcet_is_monotone(arch in dag_strategy(), pick in any::<u8>(), bump in 1u8..50) {
        let before = wcet_per_output(&arch).unwrap();
        let ids: Vec<ServiceId> = arch.service_ids().cloned().collect();
        let mut slower = arch.clone();
        let s = slower.services.get_mut(&ids[pick as usize % ids.len()]).unwrap();
        s.wcet = Some(s.wcet.unwrap() + f64::from(bump));
        let after = wcet_per_output(&slower).unwrap();
        for (c, w) in &before.outputs {
            prop_assert!(after.outputs[c] >= *w);
        }
    }

    #[test]
    fn impact_numbers_agree_with_acceptors(arch in arch_strategy()) {
        let report = impact(&arch);
        let sources = all_sources(&arch);
        let mut on_cycle = 0;
        for id in arch.service_ids() {
            let acc = acceptors(&arch, id).unwrap();
            prop_assert_eq!(report.number(id.as_str()) == Some(1), acc.is_empty());
            if acc.contains(id) {
                on_cycle += 1;
            }
        }
        let lhs: usize = report.services.values().map(|e| e.impact_number - 1).sum();
        let rhs: usize = sources.values().map(BTreeSet::len).sum();
        prop_assert_eq!(lhs, rhs - on_cycle);
    }

    #[test]
    fn decomposition_is_elementary_and_preserves_the_boundary(arch in arch_strategy()) {
        let l1 = decompose_all(&arch).unwrap();
        prop_assert_eq!(validate(&l1), vec![]);
        prop_assert!(l1.services.values().all(is_elementary));
        prop_assert_eq!(io_boundary(l1.boundary()), io_boundary(arch.boundary()));

        let mut before: Vec<&ChannelId> = arch.services.values().flat_map(|s| &s.outputs).collect();
        let mut after: Vec<&ChannelId> = l1.services.values().flat_map(|s| &s.outputs).collect();
        before.sort();
        after.sort();
        prop_assert_eq!(before, after);

        let again = decompose_all(&l1).unwrap();
        prop_assert_eq!(&again.services, &l1.services);
    }

    #[test]
    fn condensation_is_acyclic_and_preserves_the_boundary(arch in arch_strategy()) {
        let l1 = decompose_all(&arch).unwrap();
        let l2 = condense_to_l2(&l1).unwrap().architecture;
        prop_assert_eq!(validate(&l2), vec![]);
        prop_assert!(kosaraju(&build_graph(&l2)).iter().all(|c| c.len() == 1));
        prop_assert_eq!(io_boundary(l2.boundary()), io_boundary(l1.boundary()));
        let members: Vec<&ServiceId> = l2.membership.values().flatten().collect();
        prop_assert_eq!(members.len(), l1.services.len());
    }

    #[test]
    fn partition_groups_services(arch in arch_strategy()) {
        let l1 = measured_l1(&arch);
        let l2 = condense_to_l2(&l1).unwrap().architecture;
        let (l3, plan) = partition_l3(&l2).unwrap();
        prop_assert_eq!(validate(&l3), vec![]);
        prop_assert_eq!(io_boundary(l3.boundary()), io_boundary(l2.boundary()));

        let mut group_of = BTreeMap::new();
        for g in &plan.groups {
            for m in &g.members {
                prop_assert!(group_of.insert(m.clone(), g.new_id.clone()).is_none());
            }
            if g.deployment == Deployment::Remote {
                prop_assert!(g.members.iter().any(|m| plan.high_perf.contains(m)));
            }
        }
        prop_assert_eq!(group_of.len(), l2.services.len());
        for e in &build_graph(&l2).edges {
            if plan.high_channels.contains(&e.channel) {
                prop_assert_eq!(&group_of[&e.from], &group_of[&e.to]);
            }
        }

        let mut relaxed = l2.clone();
        relaxed.thresholds = Some(Thresholds { high_load: 1e9, high_perf: 1e9 });
        let (_, identity) = partition_l3(&relaxed).unwrap();
        prop_assert_eq!(identity.groups.len(), l2.services.len());
        prop_assert!(identity.groups.iter().all(|g| g.deployment == Deployment::Local && g.members.len() == 1));
    }

    #[test]
    fn slices_cover_every_backward_path(arch in arch_strategy(), mask in any::<u32>()) {
        let produced: Vec<ChannelId> = arch.wiring().producer.into_keys().collect();
        let outputs: BTreeSet<ChannelId> = produced
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << (i % 32)) != 0)
            .map(|(_, c)| c.clone())
            .collect();
        prop_assume!(!outputs.is_empty());
        let report = slice(&arch, &PropertySpec::new("p", Vec::<ChannelId>::new(), outputs.clone())).unwrap();

        let wiring = arch.wiring();
        let mut path_services = BTreeSet::new();
        let mut path_inputs = BTreeSet::new();
        for y in &outputs {
            for path in backward_paths(&arch, y) {
                path_services.extend(path);
            }
        }
        for ch in channel_cone(&arch, &outputs) {
            match wiring.producer_of(&ch) {
                Some(_) => {}
                None => { path_inputs.insert(ch); }
            }
        }
        prop_assert_eq!(&report.services, &path_services);
        prop_assert_eq!(&report.idep_inputs, &path_inputs);
        let missing = report.diagnostics.len();
        prop_assert_eq!(missing, path_inputs.len());
    }

    #[test]
    fn canonical_serialization_round_trips(arch in arch_strategy()) {
        let text = to_canonical_string(&arch);
        let back = parse_architecture(text.as_bytes(), Mode::Strict).unwrap().value;
        prop_assert_eq!(&back, &arch);
        prop_assert_eq!(to_canonical_string(&back), text);
    }
}
