//! JSON documents: architecture files, measure overlays and the canonical
//! serialization used for goldens.
//!
//! Canonical output has sorted keys and sorted sets, so two equal
//! architectures serialize to identical bytes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::error::Category;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{
    validate, Architecture, ChannelId, DepRef, LocalVarId, Measures, Service, ServiceId, Thresholds,
};

/// How unknown keys are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Strict,
    /// Unknown keys are dropped and reported as warnings.
    Lenient,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchitectureDoc {
    level: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    membership: BTreeMap<ServiceId, Vec<ServiceId>>,
    #[serde(default)]
    services: Vec<ServiceDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    thresholds: Option<Thresholds>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    uplsize: BTreeMap<ChannelId, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceDoc {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    child_names: BTreeMap<ChannelId, ServiceId>,
    id: ServiceId,
    #[serde(default)]
    ideps: BTreeMap<ChannelId, Vec<DepRefDoc>>,
    #[serde(default)]
    inputs: Vec<ChannelId>,
    #[serde(default)]
    local_vars: Vec<LocalVarId>,
    #[serde(default)]
    outputs: Vec<ChannelId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    perf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wcet: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DepRefDoc {
    channel: ChannelId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    via: Option<LocalVarId>,
}

const TOP_KEYS: &[&str] = &["level", "membership", "services", "thresholds", "uplsize"];
const SERVICE_KEYS: &[&str] = &[
    "child_names",
    "id",
    "ideps",
    "inputs",
    "local_vars",
    "outputs",
    "perf",
    "wcet",
];
const DEP_KEYS: &[&str] = &["channel", "via"];
const THRESHOLD_KEYS: &[&str] = &["high_load", "high_perf"];

#[derive(Debug)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn json_error(err: serde_json::Error) -> Error {
    let (line, column, message) = (err.line(), err.column(), err.to_string());
    match err.classify() {
        Category::Data => Error::Schema {
            line,
            column,
            message,
        },
        Category::Syntax | Category::Eof | Category::Io => Error::Syntax {
            line,
            column,
            message,
        },
    }
}

fn strip_unknown(value: &mut Value, allowed: &[&str], path: &str, warnings: &mut Vec<String>) {
    if let Value::Object(map) = value {
        let unknown: Vec<String> = map
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .cloned()
            .collect();
        for key in unknown {
            map.remove(&key);
            warnings.push(format!("ignored unknown key {path}.{key}"));
        }
    }
}

fn lenient_cleanup(root: &mut Value) -> Vec<String> {
    let mut warnings = Vec::new();
    strip_unknown(root, TOP_KEYS, "$", &mut warnings);
    if let Some(t) = root.get_mut("thresholds") {
        strip_unknown(t, THRESHOLD_KEYS, "$.thresholds", &mut warnings);
    }
    if let Some(Value::Array(services)) = root.get_mut("services") {
        for (i, s) in services.iter_mut().enumerate() {
            let path = format!("$.services[{i}]");
            strip_unknown(s, SERVICE_KEYS, &path, &mut warnings);
            if let Some(Value::Object(ideps)) = s.get_mut("ideps") {
                for (out, deps) in ideps.iter_mut() {
                    if let Value::Array(deps) = deps {
                        for (j, d) in deps.iter_mut().enumerate() {
                            strip_unknown(d, DEP_KEYS, &format!("{path}.ideps.{out}[{j}]"), &mut warnings);
                        }
                    }
                }
            }
        }
    }
    warnings
}

fn schema(message: String) -> Error {
    Error::Schema {
        line: 0,
        column: 0,
        message,
    }
}

fn from_doc(doc: ArchitectureDoc) -> Result<Architecture> {
    let mut arch = Architecture::new(doc.level);
    for s in doc.services {
        if arch.services.contains_key(&s.id) {
            return Err(schema(format!("duplicate service id {}", s.id)));
        }
        let service = Service {
            id: s.id.clone(),
            inputs: s.inputs.into_iter().collect(),
            outputs: s.outputs.into_iter().collect(),
            local_vars: s.local_vars.into_iter().collect(),
            ideps: s
                .ideps
                .into_iter()
                .map(|(out, deps)| {
                    let deps = deps
                        .into_iter()
                        .map(|d| DepRef {
                            channel: d.channel,
                            via: d.via,
                        })
                        .collect();
                    (out, deps)
                })
                .collect(),
            wcet: s.wcet,
            perf: s.perf,
            child_names: s.child_names,
        };
        arch.insert(service);
    }
    arch.uplsize = doc.uplsize;
    arch.thresholds = doc.thresholds;
    arch.membership = doc
        .membership
        .into_iter()
        .map(|(k, v)| (k, v.into_iter().collect::<BTreeSet<_>>()))
        .collect();
    Ok(arch)
}

/// Parses an architecture document without checking structural rules.
pub fn parse_unchecked(bytes: &[u8], mode: Mode) -> Result<Parsed<Architecture>> {
    let (doc, warnings) = match mode {
        Mode::Strict => (serde_json::from_slice::<ArchitectureDoc>(bytes).map_err(json_error)?, Vec::new()),
        Mode::Lenient => {
            let mut value: Value = serde_json::from_slice(bytes).map_err(json_error)?;
            let warnings = lenient_cleanup(&mut value);
            (serde_json::from_value(value).map_err(json_error)?, warnings)
        }
    };
    Ok(Parsed {
        value: from_doc(doc)?,
        warnings,
    })
}

/// Parses and validates an architecture document.
pub fn parse_architecture(bytes: &[u8], mode: Mode) -> Result<Parsed<Architecture>> {
    let parsed = parse_unchecked(bytes, mode)?;
    let violations = validate(&parsed.value);
    if violations.is_empty() {
        Ok(parsed)
    } else {
        Err(Error::Invalid(violations))
    }
}

pub fn parse_measures(bytes: &[u8]) -> Result<Measures> {
    serde_json::from_slice(bytes).map_err(json_error)
}

fn to_doc(arch: &Architecture) -> ArchitectureDoc {
    ArchitectureDoc {
        level: arch.level.clone(),
        membership: arch
            .membership
            .iter()
            .map(|(k, v)| (k.clone(), v.iter().cloned().collect()))
            .collect(),
        services: arch
            .services
            .values()
            .map(|s| ServiceDoc {
                child_names: s.child_names.clone(),
                id: s.id.clone(),
                ideps: s
                    .ideps
                    .iter()
                    .map(|(out, deps)| {
                        let deps = deps
                            .iter()
                            .map(|d| DepRefDoc {
                                channel: d.channel.clone(),
                                via: d.via.clone(),
                            })
                            .collect();
                        (out.clone(), deps)
                    })
                    .collect(),
                inputs: s.inputs.iter().cloned().collect(),
                local_vars: s.local_vars.iter().cloned().collect(),
                outputs: s.outputs.iter().cloned().collect(),
                perf: s.perf,
                wcet: s.wcet,
            })
            .collect(),
        thresholds: arch.thresholds,
        uplsize: arch.uplsize.clone(),
    }
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn to_canonical_string(arch: &Architecture) -> String {
    to_pretty(&to_doc(arch))
}

/// Pretty JSON with a trailing newline for any report.
pub fn to_pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("in-memory serialization");
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bundled_level_zero() {
        let arch = fixtures::system_s_l0();
        assert_eq!(arch.services.len(), 5);
        assert_eq!(arch.channels().len(), 13);
    }

    #[test]
    fn empty_service_list() {
        let parsed = parse_architecture(br#"{"level": "L0", "services": []}"#, Mode::Strict).unwrap();
        assert!(parsed.value.services.is_empty());
    }

    #[test]
    fn duplicate_service_is_a_schema_error() {
        let text = br#"{"level": "L0", "services": [
            {"id": "A", "outputs": ["y"], "ideps": {"y": []}},
            {"id": "A", "outputs": ["z"], "ideps": {"z": []}}
        ]}"#;
        match parse_architecture(text, Mode::Strict) {
            Err(Error::Schema { message, .. }) => assert!(message.contains("duplicate service id A")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_architecture(b"{\n  \"level\": \"L0\",\n  \"services\": [ }", Mode::Strict) {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys() {
        let text = br#"{"level": "L0", "colour": "red", "services": [
            {"id": "A", "outputs": ["y"], "ideps": {"y": [{"channel": "x", "weight": 2}]}, "inputs": ["x"], "note": 1}
        ]}"#;
        match parse_architecture(text, Mode::Strict) {
            Err(Error::Schema { line, .. }) => assert!(line > 0),
            other => panic!("{other:?}"),
        }
        let parsed = parse_architecture(text, Mode::Lenient).unwrap();
        assert_eq!(parsed.warnings.len(), 3, "{:?}", parsed.warnings);
        assert_eq!(parsed.value.services.len(), 1);
    }

    #[test]
    fn semantic_violations_are_reported() {
        let text = br#"{"level": "L0", "services": [
            {"id": "A", "inputs": ["x"], "outputs": ["y"], "ideps": {"y": [{"channel": "q"}]}}
        ]}"#;
        assert!(matches!(parse_architecture(text, Mode::Strict), Err(Error::Invalid(_))));
        assert!(parse_unchecked(text, Mode::Strict).is_ok());
    }

    #[test]
    fn canonical_round_trip_of_fixtures() {
        for arch in [
            fixtures::system_s_l0(),
            fixtures::system_s_l1(),
            fixtures::system_s_l2(),
            fixtures::system_s_l3(),
        ] {
            let text = to_canonical_string(&arch);
            let back = parse_architecture(text.as_bytes(), Mode::Strict).unwrap().value;
            assert_eq!(back, arch);
            assert_eq!(to_canonical_string(&back), text);
        }
    }

    #[test]
    fn measures_document() {
        let m = fixtures::system_s_measures();
        assert_eq!(m.perf.len(), 10);
        assert!(parse_measures(br#"{"perf": {}, "extra": 1}"#).is_err());
    }
}
