//! JSON file formats for networks, single channels and block codes.
//!
//! All node indices in files are 1-based.  Unknown keys are rejected.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channels::{assemble_dmc_network, assemble_wen_network, EdgeChannelSet, ErasureSpec};
use crate::error::{Error, Result};
use crate::network::{DelayProfile, LayeredNetwork, NodeSet};
use crate::prob::{ChannelKernel, Var};
use crate::simulator::{BlockCode, Decoder, Encoder};

/// A network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: usize,
    pub input_partition: Vec<Vec<usize>>,
    pub output_partition: Vec<Vec<usize>>,
    pub sources: Vec<usize>,
    pub destinations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_profile: Option<Vec<u8>>,
    pub channels: ChannelsSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelsSpec {
    /// One kernel per layer over the atoms `X{i}` and `Y{i}`.
    Explicit {
        input_alphabets: Vec<usize>,
        output_alphabets: Vec<usize>,
        layers: Vec<LayerSpec>,
    },
    /// Independent point-to-point channels on node pairs.
    Dmc { edges: Vec<EdgeSpec> },
    /// Broadcast with independent erasures; unlisted pairs are always erased.
    Wen {
        broadcast_alphabets: Vec<usize>,
        erasures: Vec<ErasureEntry>,
    },
}

/// A layer kernel given either as a row-stochastic `table` (one row per
/// input tuple) or as a deterministic `map` (output tuple index per row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub table: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErasureEntry {
    pub from: usize,
    pub to: usize,
    pub epsilon: f64,
}

/// A single point-to-point channel `q(y|x)`, one row per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub table: Vec<Vec<f64>>,
}

/// A block code.  `reads` defaults to every output atom of the node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeFile {
    pub n: usize,
    pub profile: Vec<u8>,
    pub message_sizes: Vec<usize>,
    #[serde(default)]
    pub encoders: Vec<EncoderSpec>,
    #[serde(default)]
    pub decoders: Vec<DecoderSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderSpec {
    pub node: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<Vec<String>>,
    pub slots: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderSpec {
    pub source: usize,
    pub destination: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reads: Option<Vec<String>>,
    pub table: Vec<usize>,
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn node(i: usize, n: usize) -> Result<usize> {
    if i == 0 || i > n {
        return Err(Error::Argument(format!("node label {i} outside 1..={n}")));
    }
    Ok(i - 1)
}

fn node_set(labels: &[usize], n: usize) -> Result<NodeSet> {
    let mut s = NodeSet::EMPTY;
    for &i in labels {
        s = s.union(NodeSet::singleton(node(i, n)?));
    }
    Ok(s)
}

fn table_kernel(inputs: Vec<Var>, outputs: Vec<Var>, rows: &[Vec<f64>]) -> Result<ChannelKernel> {
    let cols: usize = outputs.iter().map(|v| v.size).product();
    if let Some(r) = rows.iter().position(|r| r.len() != cols) {
        return Err(Error::Structure(format!("table row {r} has {} entries, expected {cols}", rows[r].len())));
    }
    ChannelKernel::new(inputs, outputs, rows.concat())
}

impl NetworkFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn delay_profile(&self) -> Result<Option<DelayProfile>> {
        self.delay_profile.clone().map(DelayProfile::new).transpose()
    }

    /// Builds and validates the network.
    pub fn build(&self) -> Result<LayeredNetwork> {
        let n = self.nodes;
        if n == 0 {
            return Err(Error::Structure("a network needs at least one node".into()));
        }
        let s = self
            .input_partition
            .iter()
            .map(|l| node_set(l, n))
            .collect::<Result<Vec<_>>>()?;
        let g = self
            .output_partition
            .iter()
            .map(|l| node_set(l, n))
            .collect::<Result<Vec<_>>>()?;
        let v = node_set(&self.sources, n)?;
        let d = node_set(&self.destinations, n)?;
        let net = match &self.channels {
            ChannelsSpec::Explicit {
                input_alphabets,
                output_alphabets,
                layers,
            } => {
                if input_alphabets.len() != n || output_alphabets.len() != n {
                    return Err(Error::Structure(format!("alphabet lists must have {n} entries")));
                }
                let size_of = |name: &str| -> Result<usize> {
                    let (alph, rest) = match name.split_at(name.len().min(1)) {
                        ("X", r) => (input_alphabets, r),
                        ("Y", r) => (output_alphabets, r),
                        _ => return Err(Error::UnknownVariable(name.to_string())),
                    };
                    let i: usize = rest.parse().map_err(|_| Error::UnknownVariable(name.to_string()))?;
                    if i == 0 || i > n {
                        return Err(Error::UnknownVariable(name.to_string()));
                    }
                    Ok(alph[i - 1])
                };
                let vars = |names: &[String]| -> Result<Vec<Var>> {
                    names.iter().map(|x| Ok(Var::new(x.clone(), size_of(x)?))).collect()
                };
                let channels = layers
                    .iter()
                    .enumerate()
                    .map(|(h, l)| {
                        let inputs = vars(&l.inputs)?;
                        let outputs = vars(&l.outputs)?;
                        match (&l.table, &l.map) {
                            (Some(t), None) => table_kernel(inputs, outputs, t),
                            (None, Some(m)) => {
                                let rows: usize = inputs.iter().map(|v| v.size).product();
                                if m.len() != rows {
                                    return Err(Error::Structure(format!(
                                        "layer {} map has {} entries, expected {rows}",
                                        h + 1,
                                        m.len()
                                    )));
                                }
                                let sizes: Vec<usize> = outputs.iter().map(|v| v.size).collect();
                                let cols: usize = sizes.iter().product();
                                if let Some(bad) = m.iter().find(|&&c| c >= cols) {
                                    return Err(Error::Structure(format!(
                                        "layer {} map entry {bad} outside 0..{cols}",
                                        h + 1
                                    )));
                                }
                                let mut table = vec![0.0; rows * cols];
                                for (r, &c) in m.iter().enumerate() {
                                    table[r * cols + c] = 1.0;
                                }
                                ChannelKernel::new(inputs, outputs, table)
                            }
                            _ => Err(Error::Structure(format!(
                                "layer {} needs exactly one of `table` and `map`",
                                h + 1
                            ))),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                LayeredNetwork::explicit(input_alphabets, output_alphabets, s, g, channels, v, d)?
            }
            ChannelsSpec::Dmc { edges } => {
                let mut map = BTreeMap::new();
                for e in edges {
                    let (i, j) = (node(e.from, n)?, node(e.to, n)?);
                    let rows = e.table.len();
                    let cols = e.table.first().map_or(0, Vec::len);
                    let k = table_kernel(vec![Var::new("X", rows)], vec![Var::new("Y", cols)], &e.table)?;
                    if map.insert((i, j), k).is_some() {
                        return Err(Error::Structure(format!("edge ({}, {}) listed twice", e.from, e.to)));
                    }
                }
                let net = assemble_dmc_network(s, g, EdgeChannelSet::new(map)?, v, d)?;
                if net.n_nodes() != n {
                    return Err(Error::Structure(format!("partitions cover {} nodes, expected {n}", net.n_nodes())));
                }
                net
            }
            ChannelsSpec::Wen {
                broadcast_alphabets,
                erasures,
            } => {
                if broadcast_alphabets.len() != n {
                    return Err(Error::Structure(format!("broadcast alphabet list must have {n} entries")));
                }
                let mut map = BTreeMap::new();
                for e in erasures {
                    if map.insert((node(e.from, n)?, node(e.to, n)?), e.epsilon).is_some() {
                        return Err(Error::Structure(format!("edge ({}, {}) listed twice", e.from, e.to)));
                    }
                }
                assemble_wen_network(broadcast_alphabets, &ErasureSpec::new(map)?, s, g, v, d)?
            }
        };
        if let Some(b) = self.delay_profile()? {
            if b.len() != n {
                return Err(Error::Structure(format!("delay profile has {} entries for {n} nodes", b.len())));
            }
        }
        Ok(net)
    }
}

impl KernelFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn build(&self) -> Result<ChannelKernel> {
        let rows = self.table.len();
        let cols = self.table.first().map_or(0, Vec::len);
        table_kernel(vec![Var::new("X", rows)], vec![Var::new("Y", cols)], &self.table)
    }
}

impl CodeFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse(text)
    }

    /// Builds the code for `net`, checking it against the network.
    pub fn build(&self, net: &LayeredNetwork) -> Result<BlockCode> {
        let n = net.n_nodes();
        let all_reads = |i: usize| -> Vec<String> { net.y_atoms(i).into_iter().map(|v| v.name).collect() };
        let encoders = self
            .encoders
            .iter()
            .map(|e| {
                let i = node(e.node, n)?;
                Ok(Encoder {
                    node: i,
                    reads: e.reads.clone().unwrap_or_else(|| all_reads(i)),
                    slots: e.slots.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let decoders = self
            .decoders
            .iter()
            .map(|d| {
                let j = node(d.destination, n)?;
                Ok(Decoder {
                    source: node(d.source, n)?,
                    destination: j,
                    reads: d.reads.clone().unwrap_or_else(|| all_reads(j)),
                    table: d.table.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BlockCode::new(
            net,
            self.n,
            DelayProfile::new(self.profile.clone())?,
            self.message_sizes.clone(),
            encoders,
            decoders,
        )
    }

    /// File form of `code`, with explicit reads.
    pub fn from_code(code: &BlockCode) -> Self {
        Self {
            n: code.n,
            profile: code.profile.as_slice().to_vec(),
            message_sizes: code.message_sizes.clone(),
            encoders: code
                .encoders
                .iter()
                .map(|e| EncoderSpec {
                    node: e.node + 1,
                    reads: Some(e.reads.clone()),
                    slots: e.slots.clone(),
                })
                .collect(),
            decoders: code
                .decoders
                .iter()
                .map(|d| DecoderSpec {
                    source: d.source + 1,
                    destination: d.destination + 1,
                    reads: Some(d.reads.clone()),
                    table: d.table.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    const FIG2: &str = r#"{
        "nodes": 3,
        "input_partition": [[1], [2, 3]],
        "output_partition": [[2], [1, 3]],
        "sources": [1],
        "destinations": [3],
        "channels": {
            "kind": "explicit",
            "input_alphabets": [2, 2, 1],
            "output_alphabets": [1, 2, 2],
            "layers": [
                {"inputs": ["X1"], "outputs": ["Y2"], "map": [0, 1]},
                {"inputs": ["X1", "X2"], "outputs": ["Y1", "Y3"], "map": [0, 1, 1, 0]}
            ]
        }
    }"#;

    #[test]
    fn explicit_file_matches_builtin() {
        let net = NetworkFile::parse(FIG2).unwrap().build().unwrap();
        assert_eq!(net, examples::figure2());
    }

    #[test]
    fn dmc_and_wen_files_match_builtins() {
        let c = 0.11;
        let dmc = format!(
            r#"{{"nodes": 3, "input_partition": [[1], [2, 3]], "output_partition": [[2], [1, 3]],
            "sources": [1], "destinations": [3],
            "channels": {{"kind": "dmc", "edges": [
                {{"from": 1, "to": 2, "table": [[{a}, {c}], [{c}, {a}]]}},
                {{"from": 1, "to": 3, "table": [[{a}, {c}], [{c}, {a}]]}},
                {{"from": 2, "to": 3, "table": [[{a}, {c}], [{c}, {a}]]}}]}}}}"#,
            a = 1.0 - c
        );
        assert_eq!(NetworkFile::parse(&dmc).unwrap().build().unwrap(), examples::figure3(c));
        let wen = r#"{"nodes": 3, "input_partition": [[1], [2, 3]], "output_partition": [[2], [1, 3]],
            "sources": [1], "destinations": [3],
            "channels": {"kind": "wen", "broadcast_alphabets": [2, 2, 2], "erasures": [
                {"from": 1, "to": 2, "epsilon": 0.5},
                {"from": 1, "to": 3, "epsilon": 0.5},
                {"from": 2, "to": 3, "epsilon": 0.5}]}}"#;
        assert_eq!(NetworkFile::parse(wen).unwrap().build().unwrap(), examples::figure4(0.5));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = NetworkFile::parse("{\n  \"nodes\": 3,\n  \"bogus\": 1\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        let err = NetworkFile::parse(&FIG2.replace("\"map\": [0, 1]}", "\"map\": [0, 1], \"x\": 0}")).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = NetworkFile::parse(&FIG2.replace("\"kind\": \"explicit\",", "\"kind\": \"explicit\", \"extra\": 1,"))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn invalid_partitions_fail_validation() {
        let bad = FIG2.replace("[[2], [1, 3]]", "[[2], [1, 2]]");
        let err = NetworkFile::parse(&bad).unwrap().build().unwrap_err();
        assert!(matches!(err, Error::Invalid(_)), "{err}");
        let bad = FIG2.replace("\"sources\": [1]", "\"sources\": [4]");
        assert!(NetworkFile::parse(&bad).unwrap().build().is_err());
    }

    #[test]
    fn kernel_file() {
        let k = KernelFile::parse(r#"{"table": [[0.7, 0.3], [0.3, 0.7]]}"#).unwrap().build().unwrap();
        assert_eq!(k.rows(), 2);
        assert!(KernelFile::parse(r#"{"table": [[0.7, 0.2], [0.3, 0.7]]}"#).unwrap().build().is_err());
        assert!(KernelFile::parse(r#"{"table": [[1.0], [0.3, 0.7]]}"#).unwrap().build().is_err());
    }

    #[test]
    fn code_file_round_trip() {
        let net = examples::figure2();
        let text = r#"{"n": 1, "profile": [1, 0, 1], "message_sizes": [2, 1, 1],
            "encoders": [{"node": 1, "slots": [[0, 1]]}, {"node": 2, "slots": [[0, 0]]}],
            "decoders": [{"source": 1, "destination": 3, "table": [0, 1]}]}"#;
        let code = CodeFile::parse(text).unwrap().build(&net).unwrap();
        let again = CodeFile::from_code(&code).build(&net).unwrap();
        assert_eq!(code, again);
        let bad = text.replace("[1, 0, 1]", "[0, 1, 1]");
        assert!(matches!(
            CodeFile::parse(&bad).unwrap().build(&net),
            Err(Error::Infeasible { node: 1, .. })
        ));
    }
}
