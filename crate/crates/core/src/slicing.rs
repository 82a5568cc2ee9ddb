//! Minimal sub-architecture needed to check a property over channels.
//!
//! The slice is computed at channel granularity: starting from the property
//! outputs, each visited channel contributes its producer to the slice and
//! its dependency set to the worklist. System inputs reached this way are the
//! inputs the property actually depends on.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Architecture, ChannelId, ServiceId};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertySpec {
    pub name: String,
    pub inputs: BTreeSet<ChannelId>,
    pub outputs: BTreeSet<ChannelId>,
}

impl PropertySpec {
    pub fn new<I, O>(name: impl Into<String>, inputs: I, outputs: O) -> Self
    where
        I: IntoIterator,
        I::Item: Into<ChannelId>,
        O: IntoIterator,
        O::Item: Into<ChannelId>,
    {
        Self {
            name: name.into(),
            inputs: inputs.into_iter().map(Into::into).collect(),
            outputs: outputs.into_iter().map(Into::into).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagnosticKind {
    /// The property depends on an input it does not mention.
    MissingInput,
    /// The property mentions an input it does not depend on.
    IrrelevantInput,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub channel: ChannelId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceReport {
    pub property: String,
    /// Producers of the property outputs.
    pub out_components: BTreeSet<ServiceId>,
    pub services: BTreeSet<ServiceId>,
    /// System inputs reached backwards from the property outputs.
    pub idep_inputs: BTreeSet<ChannelId>,
    /// Channels named by the property that are not system inputs or outputs.
    pub local_refs: BTreeSet<ChannelId>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SliceReport {
    pub fn is_clean(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Computes the slice of `arch` for `prop`.
pub fn slice(arch: &Architecture, prop: &PropertySpec) -> Result<SliceReport> {
    if prop.outputs.is_empty() {
        return Err(Error::EmptyProperty(prop.name.clone()));
    }
    let channels = arch.channels();
    if let Some(unknown) = prop.inputs.iter().chain(&prop.outputs).find(|c| !channels.contains(*c)) {
        return Err(Error::UnknownChannel(unknown.clone()));
    }
    let wiring = arch.wiring();
    let boundary = arch.boundary();

    let mut out_components = BTreeSet::new();
    for y in &prop.outputs {
        let producer = wiring
            .producer_of(y)
            .ok_or_else(|| Error::NoProducer(y.clone()))?;
        out_components.insert(producer.clone());
    }

    let mut services = BTreeSet::new();
    let mut idep_inputs = BTreeSet::new();
    let mut seen: BTreeSet<&ChannelId> = BTreeSet::new();
    let mut queue: VecDeque<&ChannelId> = prop.outputs.iter().collect();
    while let Some(channel) = queue.pop_front() {
        if !seen.insert(channel) {
            continue;
        }
        let Some(producer) = wiring.producer_of(channel) else {
            idep_inputs.insert(channel.clone());
            continue;
        };
        services.insert(producer.clone());
        queue.extend(arch.services[producer].deps_of(channel).map(|d| &d.channel));
    }

    let local_refs: BTreeSet<ChannelId> = prop
        .inputs
        .iter()
        .chain(&prop.outputs)
        .filter(|c| boundary.local_channels.contains(*c))
        .cloned()
        .collect();

    let mut diagnostics: Vec<Diagnostic> = idep_inputs
        .iter()
        .filter(|c| !prop.inputs.contains(*c))
        .map(|c| Diagnostic {
            kind: DiagnosticKind::MissingInput,
            channel: c.clone(),
        })
        .collect();
    diagnostics.extend(
        prop.inputs
            .iter()
            .filter(|c| !idep_inputs.contains(*c) && !local_refs.contains(*c))
            .map(|c| Diagnostic {
                kind: DiagnosticKind::IrrelevantInput,
                channel: c.clone(),
            }),
    );

    Ok(SliceReport {
        property: prop.name.clone(),
        out_components,
        services,
        idep_inputs,
        local_refs,
        diagnostics,
    })
}

/// The diagnostics of [`slice`] alone.
pub fn check_property_wellformed(arch: &Architecture, prop: &PropertySpec) -> Result<Vec<Diagnostic>> {
    slice(arch, prop).map(|r| r.diagnostics)
}
