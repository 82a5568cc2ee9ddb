//! Graphviz export.
//!
//! Services are boxes, local channels are solid edges between them and
//! system inputs/outputs hang off dashed edges to small port nodes. Output is
//! a pure function of the architecture, so repeated exports are identical.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::model::{Architecture, ChannelId, ServiceId};
use crate::scc::build_graph;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DotOptions {
    /// Annotate every service with its per-output dependency sets.
    pub show_deps: bool,
    /// Style heavy channels and compute-heavy services using the thresholds
    /// and measures stored on the architecture.
    pub highlight: bool,
}

const NORMAL_FILL: &str = "CornflowerBlue";
const HEAVY_FILL: &str = "white";

fn heavy_channels(arch: &Architecture) -> BTreeSet<ChannelId> {
    let Some(t) = arch.thresholds else {
        return BTreeSet::new();
    };
    arch.uplsize
        .iter()
        .filter(|(_, size)| **size > t.high_load)
        .map(|(c, _)| c.clone())
        .collect()
}

fn heavy_services(arch: &Architecture) -> BTreeSet<ServiceId> {
    let Some(t) = arch.thresholds else {
        return BTreeSet::new();
    };
    arch.services
        .values()
        .filter(|s| s.perf.is_some_and(|p| p > t.high_perf))
        .map(|s| s.id.clone())
        .collect()
}

fn service_label(arch: &Architecture, id: &ServiceId, show_deps: bool) -> String {
    let mut label = id.to_string();
    if show_deps {
        let s = &arch.services[id];
        for (out, deps) in &s.ideps {
            let deps: Vec<String> = deps.iter().map(ToString::to_string).collect();
            let _ = write!(label, "\\n{out} <- {{{}}}", deps.join(", "));
        }
    }
    label
}

pub fn export_dot(arch: &Architecture, options: DotOptions) -> String {
    let graph = build_graph(arch);
    let (heavy_ch, heavy_svc) = if options.highlight {
        (heavy_channels(arch), heavy_services(arch))
    } else {
        Default::default()
    };
    let edge_style = |channel: &ChannelId| {
        if heavy_ch.contains(channel) {
            ", color=red, penwidth=3"
        } else {
            ""
        }
    };

    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", arch.level);
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [shape=box, style=filled];\n");

    for id in &graph.vertices {
        let fill = if options.highlight && heavy_svc.contains(id) {
            HEAVY_FILL
        } else {
            NORMAL_FILL
        };
        let _ = writeln!(
            out,
            "  \"{id}\" [label=\"{}\", fillcolor={fill}];",
            service_label(arch, id, options.show_deps)
        );
    }

    let ports: BTreeSet<&ChannelId> = graph
        .ports
        .values()
        .flat_map(|p| p.inputs.iter().chain(&p.outputs))
        .collect();
    for channel in &ports {
        let _ = writeln!(out, "  \"port_{channel}\" [label=\"{channel}\", shape=plaintext, style=\"\"];");
    }

    for e in &graph.edges {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"{}];",
            e.from,
            e.to,
            e.channel,
            edge_style(&e.channel)
        );
    }
    for (id, p) in &graph.ports {
        for channel in &p.inputs {
            let _ = writeln!(
                out,
                "  \"port_{channel}\" -> \"{id}\" [style=dashed{}];",
                edge_style(channel)
            );
        }
        for channel in &p.outputs {
            let _ = writeln!(
                out,
                "  \"{id}\" -> \"port_{channel}\" [style=dashed{}];",
                edge_style(channel)
            );
        }
    }
    out.push_str("}\n");
    out
}
