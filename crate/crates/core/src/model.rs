//! Architecture data model: services, channels, per-output dependency sets
//! and the optional measures used by the timing and partitioning analyses.
//!
//! Channels are globally named. Two services are connected when a channel
//! name appears among the outputs of one and the inputs of the other; there
//! are no explicit connector objects. A channel has at most one producer but
//! may fan out to any number of consumers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! identifier {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: impl Into<String>) -> Self {
                Self(raw.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(raw: &str) -> Self {
                Self(raw.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(raw: String) -> Self {
                Self(raw)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

identifier!(
    /// Name of a channel (a data or control stream).
    ChannelId
);
identifier!(
    /// Name of a service.
    ServiceId
);
identifier!(
    /// Name of a local variable. Scoped to the service that declares it.
    LocalVarId
);

/// Identifiers are restricted to `[A-Za-z0-9_]+`.
pub fn is_valid_identifier(raw: &str) -> bool {
    !raw.is_empty() && raw.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// One entry of a dependency set: the output depends on `channel`, possibly
/// only through the local variable `via`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DepRef {
    pub channel: ChannelId,
    pub via: Option<LocalVarId>,
}

impl DepRef {
    pub fn direct(channel: impl Into<ChannelId>) -> Self {
        Self {
            channel: channel.into(),
            via: None,
        }
    }

    pub fn via(channel: impl Into<ChannelId>, var: impl Into<LocalVarId>) -> Self {
        Self {
            channel: channel.into(),
            via: Some(var.into()),
        }
    }
}

impl fmt::Display for DepRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.via {
            Some(var) => write!(f, "{}^{}", self.channel, var),
            None => write!(f, "{}", self.channel),
        }
    }
}

pub type DepSet = BTreeSet<DepRef>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Service {
    pub id: ServiceId,
    pub inputs: BTreeSet<ChannelId>,
    pub outputs: BTreeSet<ChannelId>,
    pub local_vars: BTreeSet<LocalVarId>,
    /// For every output, the inputs it depends on.
    pub ideps: BTreeMap<ChannelId, DepSet>,
    pub wcet: Option<f64>,
    pub perf: Option<f64>,
    /// Optional names for the elementary children of this service, keyed by
    /// any output of the child.
    pub child_names: BTreeMap<ChannelId, ServiceId>,
}

impl Service {
    pub fn new(id: impl Into<ServiceId>) -> Self {
        Self {
            id: id.into(),
            ..Self::default()
        }
    }

    /// Adds `output` with the given dependency set. Every referenced channel
    /// becomes an input and every referenced variable a local variable.
    pub fn with_output<I>(mut self, output: impl Into<ChannelId>, deps: I) -> Self
    where
        I: IntoIterator<Item = DepRef>,
    {
        let output = output.into();
        let deps: DepSet = deps.into_iter().collect();
        for dep in &deps {
            self.inputs.insert(dep.channel.clone());
            if let Some(var) = &dep.via {
                self.local_vars.insert(var.clone());
            }
        }
        self.outputs.insert(output.clone());
        self.ideps.insert(output, deps);
        self
    }

    pub fn with_input(mut self, input: impl Into<ChannelId>) -> Self {
        self.inputs.insert(input.into());
        self
    }

    pub fn with_wcet(mut self, wcet: f64) -> Self {
        self.wcet = Some(wcet);
        self
    }

    pub fn with_perf(mut self, perf: f64) -> Self {
        self.perf = Some(perf);
        self
    }

    pub fn with_child_name(mut self, output: impl Into<ChannelId>, child: impl Into<ServiceId>) -> Self {
        self.child_names.insert(output.into(), child.into());
        self
    }

    /// Dependency set of `output`; empty if the output is unknown.
    pub fn deps_of(&self, output: &ChannelId) -> impl Iterator<Item = &DepRef> {
        self.ideps.get(output).into_iter().flatten()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub high_load: f64,
    pub high_perf: f64,
}

/// Transfer and compute measures that can be overlaid onto an architecture.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measures {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub perf: BTreeMap<ServiceId, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub uplsize: BTreeMap<ChannelId, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub wcet: BTreeMap<ServiceId, f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Architecture {
    pub level: String,
    pub services: BTreeMap<ServiceId, Service>,
    pub uplsize: BTreeMap<ChannelId, f64>,
    pub thresholds: Option<Thresholds>,
    /// Links to the neighbouring level: composite -> contained services after
    /// condensation, original -> elementary children after decomposition.
    pub membership: BTreeMap<ServiceId, BTreeSet<ServiceId>>,
}

/// Producer and consumer lookup derived from the service interfaces.
#[derive(Clone, Debug, Default)]
pub struct Wiring {
    pub producer: BTreeMap<ChannelId, ServiceId>,
    pub consumers: BTreeMap<ChannelId, BTreeSet<ServiceId>>,
}

impl Wiring {
    pub fn producer_of(&self, channel: &ChannelId) -> Option<&ServiceId> {
        self.producer.get(channel)
    }

    pub fn consumers_of(&self, channel: &ChannelId) -> impl Iterator<Item = &ServiceId> {
        self.consumers.get(channel).into_iter().flatten()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Boundary {
    pub system_inputs: BTreeSet<ChannelId>,
    pub system_outputs: BTreeSet<ChannelId>,
    pub local_channels: BTreeSet<ChannelId>,
}

impl Architecture {
    pub fn new(level: impl Into<String>) -> Self {
        Self {
            level: level.into(),
            ..Self::default()
        }
    }

    /// Inserts a service, replacing any previous one with the same id.
    pub fn insert(&mut self, service: Service) {
        self.services.insert(service.id.clone(), service);
    }

    pub fn with_service(mut self, service: Service) -> Self {
        self.insert(service);
        self
    }

    pub fn service(&self, id: &ServiceId) -> Option<&Service> {
        self.services.get(id)
    }

    pub fn service_ids(&self) -> impl Iterator<Item = &ServiceId> {
        self.services.keys()
    }

    /// Every channel mentioned by some service interface.
    pub fn channels(&self) -> BTreeSet<ChannelId> {
        self.services
            .values()
            .flat_map(|s| s.inputs.iter().chain(&s.outputs))
            .cloned()
            .collect()
    }

    /// Producer/consumer maps. When a channel has several producers (an
    /// invalid architecture) the smallest producer id wins.
    pub fn wiring(&self) -> Wiring {
        let mut wiring = Wiring::default();
        for service in self.services.values() {
            for out in &service.outputs {
                wiring
                    .producer
                    .entry(out.clone())
                    .or_insert_with(|| service.id.clone());
            }
            for input in &service.inputs {
                wiring
                    .consumers
                    .entry(input.clone())
                    .or_default()
                    .insert(service.id.clone());
            }
        }
        wiring
    }

    /// Service-level successor relation: `a -> b` when some output of `a` is
    /// an input of `b`.
    pub fn successors(&self) -> BTreeMap<ServiceId, BTreeSet<ServiceId>> {
        let wiring = self.wiring();
        let mut succ: BTreeMap<ServiceId, BTreeSet<ServiceId>> = self
            .services
            .keys()
            .map(|id| (id.clone(), BTreeSet::new()))
            .collect();
        for (channel, producer) in &wiring.producer {
            for consumer in wiring.consumers_of(channel) {
                if consumer != producer {
                    succ.get_mut(producer)
                        .expect("producer is a service")
                        .insert(consumer.clone());
                }
            }
        }
        succ
    }

    pub fn boundary(&self) -> Boundary {
        let wiring = self.wiring();
        let mut boundary = Boundary::default();
        for channel in self.channels() {
            let produced = wiring.producer.contains_key(&channel);
            let consumed = wiring.consumers.contains_key(&channel);
            match (produced, consumed) {
                (true, true) => boundary.local_channels.insert(channel),
                (true, false) => boundary.system_outputs.insert(channel),
                (false, _) => boundary.system_inputs.insert(channel),
            };
        }
        boundary
    }

    /// Snapshot of the measures carried by this architecture.
    pub fn measures(&self) -> Measures {
        Measures {
            perf: self
                .services
                .values()
                .filter_map(|s| s.perf.map(|p| (s.id.clone(), p)))
                .collect(),
            thresholds: self.thresholds,
            uplsize: self.uplsize.clone(),
            wcet: self
                .services
                .values()
                .filter_map(|s| s.wcet.map(|w| (s.id.clone(), w)))
                .collect(),
        }
    }

    /// Overlays `measures`. Per-service entries naming services that are not
    /// part of this architecture are skipped and returned.
    pub fn apply_measures(&mut self, measures: &Measures) -> BTreeSet<ServiceId> {
        let mut unknown = BTreeSet::new();
        for (id, value) in &measures.perf {
            match self.services.get_mut(id) {
                Some(s) => s.perf = Some(*value),
                None => {
                    unknown.insert(id.clone());
                }
            }
        }
        for (id, value) in &measures.wcet {
            match self.services.get_mut(id) {
                Some(s) => s.wcet = Some(*value),
                None => {
                    unknown.insert(id.clone());
                }
            }
        }
        self.uplsize
            .extend(measures.uplsize.iter().map(|(c, v)| (c.clone(), *v)));
        if measures.thresholds.is_some() {
            self.thresholds = measures.thresholds;
        }
        unknown
    }
}

/// A broken structural rule.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("invalid identifier {0:?}: expected [A-Za-z0-9_]+")]
    InvalidIdentifier(String),
    #[error("service {service}: channel {channel} is both input and output")]
    InputOutputOverlap { service: ServiceId, channel: ChannelId },
    #[error("service {service}: dependency key {channel} is not an output")]
    DepKeyNotOutput { service: ServiceId, channel: ChannelId },
    #[error("service {service}: output {output} has no dependency set")]
    MissingDepSet { service: ServiceId, output: ChannelId },
    #[error("service {service}: output {output} depends on {channel}, which is not an input")]
    DepNotInput {
        service: ServiceId,
        output: ChannelId,
        channel: ChannelId,
    },
    #[error("service {service}: output {output} refers to unknown local variable {var}")]
    UnknownLocalVar {
        service: ServiceId,
        output: ChannelId,
        var: LocalVarId,
    },
    #[error("channel {channel} has several producers: {producers:?}")]
    MultipleProducers {
        channel: ChannelId,
        producers: Vec<ServiceId>,
    },
    #[error("negative or non-finite {measure} on {subject}")]
    BadMeasure { measure: &'static str, subject: String },
    #[error("service {service}: child name given for {channel}, which is not an output")]
    ChildNameNotOutput { service: ServiceId, channel: ChannelId },
    #[error("duplicate service id {0}")]
    DuplicateService(ServiceId),
}

fn bad_measure(value: f64) -> bool {
    !value.is_finite() || value < 0.0
}

/// Checks every structural invariant of `arch`. An empty result means the
/// architecture is well formed.
pub fn validate(arch: &Architecture) -> Vec<Violation> {
    let mut out = Vec::new();
    let check_ident = |raw: &str, out: &mut Vec<Violation>| {
        if !is_valid_identifier(raw) {
            out.push(Violation::InvalidIdentifier(raw.to_owned()));
        }
    };

    let mut producers: BTreeMap<&ChannelId, Vec<ServiceId>> = BTreeMap::new();
    for (key, service) in &arch.services {
        check_ident(key.as_str(), &mut out);
        if key != &service.id {
            check_ident(service.id.as_str(), &mut out);
        }
        for channel in service.inputs.iter().chain(&service.outputs) {
            check_ident(channel.as_str(), &mut out);
        }
        for var in &service.local_vars {
            check_ident(var.as_str(), &mut out);
        }
        for channel in service.inputs.intersection(&service.outputs) {
            out.push(Violation::InputOutputOverlap {
                service: service.id.clone(),
                channel: channel.clone(),
            });
        }
        for key in service.ideps.keys() {
            if !service.outputs.contains(key) {
                out.push(Violation::DepKeyNotOutput {
                    service: service.id.clone(),
                    channel: key.clone(),
                });
            }
        }
        for output in &service.outputs {
            producers.entry(output).or_default().push(service.id.clone());
            let Some(deps) = service.ideps.get(output) else {
                out.push(Violation::MissingDepSet {
                    service: service.id.clone(),
                    output: output.clone(),
                });
                continue;
            };
            for dep in deps {
                if !service.inputs.contains(&dep.channel) {
                    out.push(Violation::DepNotInput {
                        service: service.id.clone(),
                        output: output.clone(),
                        channel: dep.channel.clone(),
                    });
                }
                if let Some(var) = &dep.via {
                    if !service.local_vars.contains(var) {
                        out.push(Violation::UnknownLocalVar {
                            service: service.id.clone(),
                            output: output.clone(),
                            var: var.clone(),
                        });
                    }
                }
            }
        }
        for (label, value) in [("wcet", service.wcet), ("perf", service.perf)] {
            if value.is_some_and(bad_measure) {
                out.push(Violation::BadMeasure {
                    measure: label,
                    subject: service.id.to_string(),
                });
            }
        }
        for (channel, child) in &service.child_names {
            check_ident(child.as_str(), &mut out);
            if !service.outputs.contains(channel) {
                out.push(Violation::ChildNameNotOutput {
                    service: service.id.clone(),
                    channel: channel.clone(),
                });
            }
        }
    }

    for (channel, ids) in producers {
        if ids.len() > 1 {
            out.push(Violation::MultipleProducers {
                channel: channel.clone(),
                producers: ids,
            });
        }
    }
    for (channel, value) in &arch.uplsize {
        if bad_measure(*value) {
            out.push(Violation::BadMeasure {
                measure: "uplsize",
                subject: channel.to_string(),
            });
        }
    }
    if let Some(t) = arch.thresholds {
        if bad_measure(t.high_load) {
            out.push(Violation::BadMeasure {
                measure: "high_load",
                subject: "thresholds".into(),
            });
        }
        if bad_measure(t.high_perf) {
            out.push(Violation::BadMeasure {
                measure: "high_perf",
                subject: "thresholds".into(),
            });
        }
    }
    out
}
