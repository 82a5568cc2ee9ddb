use thiserror::Error;

use crate::model::{ChannelId, ServiceId, Violation};

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown service {0}")]
    UnknownService(ServiceId),
    #[error("unknown channel {0}")]
    UnknownChannel(ChannelId),
    #[error("channel {channel} is not an input of {service}")]
    NotAnInput { service: ServiceId, channel: ChannelId },
    #[error("channel {0} has no producing service")]
    NoProducer(ChannelId),
    #[error("a composite needs at least one member")]
    EmptyMembers,
    #[error("missing {kind} measure for {subject}")]
    MissingMeasure { kind: &'static str, subject: String },
    #[error("missing thresholds (high_load, high_perf)")]
    MissingThresholds,
    #[error("dependency cycle through channels {0:?}; condense the architecture first")]
    CyclicGraph(Vec<ChannelId>),
    #[error("property {0} has no output channels")]
    EmptyProperty(String),
    #[error("service {service}: outputs {first} and {second} share a group but are named differently")]
    ConflictingChildNames {
        service: ServiceId,
        first: ChannelId,
        second: ChannelId,
    },
    #[error("invalid architecture: {}", render(.0))]
    Invalid(Vec<Violation>),
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error{}: {message}", at(*.line, *.column))]
    Schema {
        line: usize,
        column: usize,
        message: String,
    },
}

fn render(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn at(line: usize, column: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}, column {column}")
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
