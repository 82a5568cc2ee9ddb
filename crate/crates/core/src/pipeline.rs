//! The full L0 -> L1 -> L2 -> L3 refinement with its artifacts.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dot::{export_dot, DotOptions};
use crate::elementary::decompose_all;
use crate::error::Result;
use crate::io::{to_canonical_string, to_pretty};
use crate::model::{Architecture, Measures, ServiceId};
use crate::partition::{partition_l3, PartitionPlan};
use crate::scc::{condense_to_l2, CondensedService};

#[derive(Debug)]
pub struct PipelineRun {
    pub l0: Architecture,
    pub l1: Architecture,
    pub l2: Architecture,
    pub l3: Architecture,
    pub condensation: Vec<CondensedService>,
    pub plan: PartitionPlan,
    /// Measured ids that matched no service at L0 or L1.
    pub unmatched: Vec<ServiceId>,
}

#[derive(Serialize)]
struct PlanDoc<'a> {
    condensation: &'a [CondensedService],
    partition: &'a PartitionPlan,
}

/// Runs every refinement step. Measures are applied to L0 and again to L1,
/// since elementary children carry no measures of their own.
pub fn run(l0: &Architecture, measures: Option<&Measures>) -> Result<PipelineRun> {
    let mut l0 = l0.clone();
    let mut unmatched_l0 = Default::default();
    if let Some(m) = measures {
        unmatched_l0 = l0.apply_measures(m);
    }
    let mut l1 = decompose_all(&l0)?;
    let mut unmatched = Vec::new();
    if let Some(m) = measures {
        let unmatched_l1 = l1.apply_measures(m);
        // an id is unmatched only if neither level knows it
        unmatched = unmatched_l0.intersection(&unmatched_l1).cloned().collect();
    }
    let condensation = condense_to_l2(&l1)?;
    let l2 = condensation.architecture;
    let (l3, plan) = partition_l3(&l2)?;
    Ok(PipelineRun {
        l0,
        l1,
        l2,
        l3,
        condensation: condensation.services,
        plan,
        unmatched,
    })
}

impl PipelineRun {
    pub fn plan_json(&self) -> String {
        to_pretty(&PlanDoc {
            condensation: &self.condensation,
            partition: &self.plan,
        })
    }

    /// Artifact file names with their contents, in write order.
    pub fn artifacts(&self) -> Vec<(String, String)> {
        let highlight = DotOptions {
            show_deps: false,
            highlight: true,
        };
        let mut files = Vec::new();
        for (name, arch) in [("l0", &self.l0), ("l1", &self.l1), ("l2", &self.l2), ("l3", &self.l3)] {
            files.push((format!("{name}.json"), to_canonical_string(arch)));
            files.push((format!("{name}.dot"), export_dot(arch, highlight)));
        }
        files.push(("plan.json".into(), self.plan_json()));
        files
    }

    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, text) in self.artifacts() {
            fs::write(dir.join(&name), text)?;
            written.push(name);
        }
        Ok(written)
    }
}
