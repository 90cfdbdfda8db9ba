//! JSON netlist files.
//!
//! ```text
//! {
//!   "protocol": "rtz" | "rto",
//!   "gates": [{"id": 0, "kind": "C2", "inputs": [1, 2], "output": 3, "reset": 0}, ...],
//!   "ports": [{"name": "a[0]", "dir": "in", "rail1": 1, "rail0": 2}, ...],
//!   "ack_out": 17,
//!   "ack_in": 0,
//!   "meta": {"name": "...", "net_count": 18, ...}
//! }
//! ```
//!
//! Unknown fields are rejected at every level. Net and gate ids are kept
//! verbatim so that files diff cleanly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    CellInstance, ConstantNet, DualRailPort, Gate, GateId, GateKind, Meta, NetId, Netlist,
    NetlistParts, Protocol,
};
use crate::multiplier::MultiplierSpec;

#[derive(Debug, Error)]
pub enum SerialError {
    #[error("PARSE_ERROR at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("PARSE_ERROR in field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("cannot encode netlist: {0}")]
    Encode(#[from] serde_json::Error),
}

/// 0/1 integers for single-bit fields.
pub(crate) mod bit {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*v as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(D::Error::custom(format!("expected 0 or 1, found {other}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateRecord {
    id: GateId,
    kind: GateKind,
    inputs: Vec<NetId>,
    output: NetId,
    #[serde(with = "bit")]
    reset: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaRecord {
    name: String,
    net_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<NetId>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constants: Vec<ConstantNet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    params: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator: Option<MultiplierSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    instances: Vec<CellInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetlistRecord {
    protocol: Protocol,
    gates: Vec<GateRecord>,
    ports: Vec<DualRailPort>,
    ack_out: Option<NetId>,
    ack_in: Option<NetId>,
    meta: MetaRecord,
}

pub fn serialize(netlist: &Netlist) -> Result<String, SerialError> {
    let parts = netlist.clone().into_parts();
    let record = NetlistRecord {
        protocol: parts.protocol,
        gates: parts
            .gates
            .into_iter()
            .map(|g| GateRecord {
                id: g.id,
                kind: g.kind,
                inputs: g.inputs,
                output: g.output,
                reset: g.reset,
            })
            .collect(),
        ports: parts.ports,
        ack_out: parts.ack_out,
        ack_in: parts.ack_in,
        meta: MetaRecord {
            name: parts.meta.name,
            net_count: parts.net_count,
            phase: parts.phase,
            constants: parts.constants,
            cell: parts.meta.cell,
            params: parts.meta.params,
            generator: parts.meta.generator,
            instances: parts.meta.instances,
            provenance: parts.meta.provenance,
        },
    };
    let mut text = serde_json::to_string_pretty(&record)?;
    text.push('\n');
    Ok(text)
}

pub fn deserialize(text: &str) -> Result<Netlist, SerialError> {
    let record: NetlistRecord = serde_json::from_str(text).map_err(|e| SerialError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    for (i, g) in record.gates.iter().enumerate() {
        if g.id.index() != i {
            return Err(SerialError::Field {
                field: format!("gates[{i}].id"),
                message: format!("gate ids must be dense and ordered, found {}", g.id.0),
            });
        }
    }
    let meta = record.meta;
    Ok(Netlist::from_parts(NetlistParts {
        protocol: record.protocol,
        gates: record
            .gates
            .into_iter()
            .map(|g| Gate {
                id: g.id,
                kind: g.kind,
                inputs: g.inputs,
                output: g.output,
                reset: g.reset,
            })
            .collect(),
        net_count: meta.net_count,
        ports: record.ports,
        ack_out: record.ack_out,
        ack_in: record.ack_in,
        phase: meta.phase,
        constants: meta.constants,
        meta: Meta {
            name: meta.name,
            cell: meta.cell,
            params: meta.params,
            generator: meta.generator,
            instances: meta.instances,
            provenance: meta.provenance,
        },
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::NetlistBuilder;

    fn small() -> Netlist {
        let mut b = NetlistBuilder::new("small");
        let a = b.input("a");
        let x = b.input("b");
        let hi = b.c2(a.rail1, x.rail1);
        let lo = b.or(&[a.rail0, x.rail0]);
        b.output(
            "z",
            crate::netlist::Rails {
                rail1: hi,
                rail0: lo,
            },
        );
        b.finish(Meta::default())
    }

    #[test]
    fn round_trip() {
        let n = small();
        let text = serialize(&n).unwrap();
        assert_eq!(deserialize(&text).unwrap(), n);
        assert_eq!(serialize(&deserialize(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn bad_gate_kind_is_a_parse_error() {
        let text = serialize(&small()).unwrap().replace("\"C2\"", "\"XOR2\"");
        let err = deserialize(&text).unwrap_err();
        match &err {
            SerialError::Parse { line, message, .. } => {
                assert!(*line > 1);
                assert!(message.contains("XOR2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().starts_with("PARSE_ERROR"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = serialize(&small())
            .unwrap()
            .replacen("\"protocol\"", "\"colour\": 1,\n  \"protocol\"", 1);
        let err = deserialize(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn reset_must_be_a_bit() {
        let text = serialize(&small()).unwrap().replacen("\"reset\": 0", "\"reset\": 2", 1);
        assert!(deserialize(&text).is_err());
    }
}
