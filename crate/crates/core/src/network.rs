//! Layered network model, delay profiles, feasibility and cut enumeration.
//!
//! Nodes are 0-based in the library API and printed 1-based.  Layers are
//! numbered `1..=alpha`, so that `S^0` and `G^0` are empty.
//!
//! Every node owns a list of input atoms (its `X_i`) and output atoms (its
//! `Y_i`).  A node whose list is empty has the trivial alphabet `{0}`.
//! Networks may additionally carry *shared* output atoms, generated by the
//! last layer and observed by every destination (the erasure pattern of a
//! wireless erasure network).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channels::{EdgeChannelSet, ErasureSpec};
use crate::error::{Error, Result};
use crate::prob::{ChannelKernel, Var};

/// Largest network for which cuts are enumerated.
pub const MAX_CUT_NODES: usize = 20;

/// Largest node count a [`NodeSet`] can hold.
pub const MAX_NODES: usize = 32;

/// A set of nodes stored as a bitmask (bit `i` is node `i`, 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct NodeSet(pub u32);

impl NodeSet {
    pub const EMPTY: NodeSet = NodeSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 32 {
            NodeSet(u32::MAX)
        } else {
            NodeSet((1u32 << n) - 1)
        }
    }

    pub fn singleton(i: usize) -> Self {
        NodeSet(1 << i)
    }

    pub fn from_nodes<I: IntoIterator<Item = usize>>(nodes: I) -> Self {
        NodeSet(nodes.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn contains(self, i: usize) -> bool {
        i < 32 && self.0 & (1 << i) != 0
    }

    pub fn union(self, o: NodeSet) -> Self {
        NodeSet(self.0 | o.0)
    }

    pub fn intersect(self, o: NodeSet) -> Self {
        NodeSet(self.0 & o.0)
    }

    pub fn minus(self, o: NodeSet) -> Self {
        NodeSet(self.0 & !o.0)
    }

    pub fn complement(self, n: usize) -> Self {
        NodeSet(!self.0 & NodeSet::full(n).0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, o: NodeSet) -> bool {
        self.0 & !o.0 == 0
    }

    /// Members in increasing order (0-based).
    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }

    /// Members as 1-based node numbers.
    pub fn members(self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members().iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// A problem found by [`LayeredNetwork::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// 1-based layer, when the problem is tied to one.
    pub layer: Option<usize>,
    /// 1-based node, when the problem is tied to one.
    pub node: Option<usize>,
    pub message: String,
}

impl Violation {
    fn new(layer: Option<usize>, node: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            layer,
            node,
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(h) = self.layer {
            write!(f, "layer {h}: ")?;
        }
        if let Some(i) = self.node {
            write!(f, "node {i}: ")?;
        }
        f.write_str(&self.message)
    }
}

/// How the per-layer channels were produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// Arbitrary per-layer kernels.
    Explicit,
    /// Independent point-to-point DMCs on the edges of Omega.
    Dmc(EdgeChannelSet),
    /// Wireless erasure network with per-node broadcast alphabets.
    Wen {
        alphabets: Vec<usize>,
        erasures: ErasureSpec,
    },
}

impl ChannelModel {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Explicit => "explicit",
            ChannelModel::Dmc(_) => "dmc",
            ChannelModel::Wen { .. } => "wen",
        }
    }
}

/// Raw ingredients of a network, before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParts {
    pub x_atoms: Vec<Vec<Var>>,
    pub y_atoms: Vec<Vec<Var>>,
    pub shared: Vec<Var>,
    pub input_partition: Vec<NodeSet>,
    pub output_partition: Vec<NodeSet>,
    pub channels: Vec<ChannelKernel>,
    pub sources: NodeSet,
    pub destinations: NodeSet,
    pub model: ChannelModel,
}

/// A layered network `(X_I, Y_I, alpha, S, G, q)` with multicast demand `(V, D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredNetwork {
    parts: NetworkParts,
}

impl LayeredNetwork {
    /// Validates `parts` and builds the network.
    pub fn new(parts: NetworkParts) -> Result<Self> {
        let net = Self::unvalidated(parts);
        let v = net.validate();
        if v.is_empty() {
            Ok(net)
        } else {
            Err(Error::Invalid(v))
        }
    }

    /// Builds a network without validation; call [`validate`](Self::validate) before use.
    pub fn unvalidated(parts: NetworkParts) -> Self {
        Self { parts }
    }

    /// Network with one atom `X{i}` and one atom `Y{i}` per node (1-based names).
    ///
    /// Channel kernels refer to those names and may read any subset of the
    /// inputs their layer is allowed to see.
    #[allow(clippy::too_many_arguments)]
    pub fn explicit(
        input_alphabets: &[usize],
        output_alphabets: &[usize],
        input_partition: Vec<NodeSet>,
        output_partition: Vec<NodeSet>,
        channels: Vec<ChannelKernel>,
        sources: NodeSet,
        destinations: NodeSet,
    ) -> Result<Self> {
        if input_alphabets.len() != output_alphabets.len() {
            return Err(Error::Structure("input and output alphabet lists differ in length".into()));
        }
        let x_atoms = input_alphabets
            .iter()
            .enumerate()
            .map(|(i, &s)| vec![Var::new(format!("X{}", i + 1), s)])
            .collect();
        let y_atoms = output_alphabets
            .iter()
            .enumerate()
            .map(|(i, &s)| vec![Var::new(format!("Y{}", i + 1), s)])
            .collect();
        Self::new(NetworkParts {
            x_atoms,
            y_atoms,
            shared: Vec::new(),
            input_partition,
            output_partition,
            channels,
            sources,
            destinations,
            model: ChannelModel::Explicit,
        })
    }

    pub fn parts(&self) -> &NetworkParts {
        &self.parts
    }

    pub fn n_nodes(&self) -> usize {
        self.parts.x_atoms.len()
    }

    pub fn alpha(&self) -> usize {
        self.parts.input_partition.len()
    }

    pub fn all_nodes(&self) -> NodeSet {
        NodeSet::full(self.n_nodes())
    }

    /// `S_h` for `h` in `1..=alpha`.
    pub fn s(&self, h: usize) -> NodeSet {
        self.parts.input_partition[h - 1]
    }

    /// `G_h` for `h` in `1..=alpha`.
    pub fn g(&self, h: usize) -> NodeSet {
        self.parts.output_partition[h - 1]
    }

    /// `S^h = S_1 ∪ .. ∪ S_h`; `S^0` is empty.
    pub fn s_upto(&self, h: usize) -> NodeSet {
        self.parts.input_partition[..h]
            .iter()
            .fold(NodeSet::EMPTY, |a, b| a.union(*b))
    }

    /// `G^h = G_1 ∪ .. ∪ G_h`; `G^0` is empty.
    pub fn g_upto(&self, h: usize) -> NodeSet {
        self.parts.output_partition[..h]
            .iter()
            .fold(NodeSet::EMPTY, |a, b| a.union(*b))
    }

    /// Channel of layer `h` (1-based).
    pub fn channel(&self, h: usize) -> &ChannelKernel {
        &self.parts.channels[h - 1]
    }

    pub fn channels(&self) -> &[ChannelKernel] {
        &self.parts.channels
    }

    pub fn sources(&self) -> NodeSet {
        self.parts.sources
    }

    pub fn destinations(&self) -> NodeSet {
        self.parts.destinations
    }

    pub fn model(&self) -> &ChannelModel {
        &self.parts.model
    }

    pub fn x_atoms(&self, i: usize) -> &[Var] {
        &self.parts.x_atoms[i]
    }

    /// Output atoms owned by node `i` (excluding shared atoms).
    pub fn own_y_atoms(&self, i: usize) -> &[Var] {
        &self.parts.y_atoms[i]
    }

    /// Shared atoms observed by every destination.
    pub fn shared_atoms(&self) -> &[Var] {
        &self.parts.shared
    }

    /// Full output of node `i`, shared atoms included for destinations.
    pub fn y_atoms(&self, i: usize) -> Vec<Var> {
        let mut v = self.parts.y_atoms[i].clone();
        if self.parts.destinations.contains(i) {
            v.extend(self.parts.shared.iter().cloned());
        }
        v
    }

    /// Alphabet size of the tuple `X_i`.
    pub fn input_alphabet(&self, i: usize) -> usize {
        self.parts.x_atoms[i].iter().map(|v| v.size).product()
    }

    /// Alphabet size of the tuple `Y_i` (shared atoms included for destinations).
    pub fn output_alphabet(&self, i: usize) -> usize {
        self.y_atoms(i).iter().map(|v| v.size).product()
    }

    /// Input atoms of every node in `set`.
    pub fn x_vars(&self, set: NodeSet) -> Vec<Var> {
        set.iter()
            .filter(|&i| i < self.n_nodes())
            .flat_map(|i| self.parts.x_atoms[i].iter().cloned())
            .collect()
    }

    /// Output atoms of every node in `set`; shared atoms appear once if `set` meets `D`.
    pub fn y_vars(&self, set: NodeSet) -> Vec<Var> {
        let mut v: Vec<Var> = set
            .iter()
            .filter(|&i| i < self.n_nodes())
            .flat_map(|i| self.parts.y_atoms[i].iter().cloned())
            .collect();
        if !set.intersect(self.parts.destinations).is_empty() {
            v.extend(self.parts.shared.iter().cloned());
        }
        v
    }

    pub fn x_names(&self, set: NodeSet) -> Vec<String> {
        self.x_vars(set).into_iter().map(|v| v.name).collect()
    }

    pub fn y_names(&self, set: NodeSet) -> Vec<String> {
        self.y_vars(set).into_iter().map(|v| v.name).collect()
    }

    pub fn shared_names(&self) -> Vec<String> {
        self.parts.shared.iter().map(|v| v.name.clone()).collect()
    }

    /// Output atoms produced by layer `h`.
    pub fn layer_outputs(&self, h: usize) -> Vec<Var> {
        let mut v: Vec<Var> = self
            .g(h)
            .iter()
            .filter(|&i| i < self.n_nodes())
            .flat_map(|i| self.parts.y_atoms[i].iter().cloned())
            .collect();
        if h == self.alpha() {
            v.extend(self.parts.shared.iter().cloned());
        }
        v
    }

    /// Variables the channel of layer `h` may read: `X_{S^h}` and `Y_{G^{h-1}}`.
    pub fn layer_allowed_inputs(&self, h: usize) -> Vec<Var> {
        let mut v = self.x_vars(self.s_upto(h));
        v.extend(
            self.g_upto(h - 1)
                .iter()
                .filter(|&i| i < self.n_nodes())
                .flat_map(|i| self.parts.y_atoms[i].iter().cloned()),
        );
        v
    }

    /// Reports every structural problem; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let p = &self.parts;
        let mut out = Vec::new();
        let n = p.x_atoms.len();
        if n == 0 {
            out.push(Violation::new(None, None, "network has no nodes"));
            return out;
        }
        if n > MAX_NODES {
            out.push(Violation::new(None, None, format!("at most {MAX_NODES} nodes are supported")));
            return out;
        }
        if p.y_atoms.len() != n {
            out.push(Violation::new(None, None, "input and output alphabet lists differ in length"));
            return out;
        }
        let alpha = p.input_partition.len();
        if alpha == 0 {
            out.push(Violation::new(None, None, "partitions must have at least one layer"));
        }
        if p.output_partition.len() != alpha {
            out.push(Violation::new(
                None,
                None,
                format!(
                    "input partition has {alpha} sets but output partition has {}",
                    p.output_partition.len()
                ),
            ));
        }
        let full = NodeSet::full(n);
        for (label, parts) in [("input", &p.input_partition), ("output", &p.output_partition)] {
            let mut seen = NodeSet::EMPTY;
            for (h, set) in parts.iter().enumerate() {
                if !set.is_subset(full) {
                    out.push(Violation::new(
                        Some(h + 1),
                        None,
                        format!("{label} partition set {set} names a node outside 1..{n}"),
                    ));
                }
                let overlap = seen.intersect(*set);
                for i in overlap.iter() {
                    out.push(Violation::new(
                        Some(h + 1),
                        Some(i + 1),
                        format!("{label} partition sets overlap"),
                    ));
                }
                seen = seen.union(*set);
            }
            for i in full.minus(seen).iter() {
                out.push(Violation::new(None, Some(i + 1), format!("node missing from the {label} partition")));
            }
        }
        if p.sources.is_empty() {
            out.push(Violation::new(None, None, "source set is empty"));
        }
        if p.destinations.is_empty() {
            out.push(Violation::new(None, None, "destination set is empty"));
        }
        if !p.sources.is_subset(full) || !p.destinations.is_subset(full) {
            out.push(Violation::new(None, None, "demand names a node outside the network"));
        }

        let mut names = HashSet::new();
        for v in p.x_atoms.iter().chain(&p.y_atoms).flatten().chain(&p.shared) {
            if !names.insert(v.name.as_str()) {
                out.push(Violation::new(None, None, format!("variable name `{}` used twice", v.name)));
            }
            if v.size == 0 {
                out.push(Violation::new(None, None, format!("variable `{}` has an empty alphabet", v.name)));
            }
        }
        if !out.is_empty() {
            return out;
        }

        if let ChannelModel::Wen { .. } = p.model {
            let last = p.output_partition[alpha - 1];
            for i in p.destinations.minus(last).iter() {
                out.push(Violation::new(
                    Some(alpha),
                    Some(i + 1),
                    "wireless erasure networks need every destination in the last output set",
                ));
            }
        }

        if p.channels.len() != alpha {
            out.push(Violation::new(
                None,
                None,
                format!("expected {alpha} channels, found {}", p.channels.len()),
            ));
            return out;
        }
        for h in 1..=alpha {
            let k = &p.channels[h - 1];
            let want: HashMap<String, usize> = self
                .layer_outputs(h)
                .into_iter()
                .map(|v| (v.name, v.size))
                .collect();
            let got: HashMap<String, usize> = k.outputs().iter().map(|v| (v.name.clone(), v.size)).collect();
            if want != got {
                let mut w: Vec<_> = want.keys().cloned().collect();
                let mut g: Vec<_> = got.keys().cloned().collect();
                w.sort();
                g.sort();
                out.push(Violation::new(
                    Some(h),
                    None,
                    format!("channel outputs {g:?} do not match the layer outputs {w:?} (names and sizes)"),
                ));
            }
            let allowed: HashMap<String, usize> = self
                .layer_allowed_inputs(h)
                .into_iter()
                .map(|v| (v.name, v.size))
                .collect();
            for v in k.inputs() {
                match allowed.get(&v.name) {
                    Some(&s) if s == v.size => {}
                    Some(&s) => out.push(Violation::new(
                        Some(h),
                        None,
                        format!("channel input `{}` has size {} but the variable has size {s}", v.name, v.size),
                    )),
                    None => out.push(Violation::new(
                        Some(h),
                        None,
                        format!("channel reads `{}`, which is not available to this layer", v.name),
                    )),
                }
            }
            for msg in k.row_problems() {
                out.push(Violation::new(Some(h), None, msg));
            }
        }
        out
    }

    /// `(h_i, m_i)` with `i ∈ S_{h_i}` and `i ∈ G_{m_i}`, both 1-based.
    pub fn locate(&self, i: usize) -> Result<(usize, usize)> {
        if i >= self.n_nodes() {
            return Err(Error::NodeOutOfRange(i + 1));
        }
        let find = |parts: &[NodeSet]| parts.iter().position(|s| s.contains(i)).map(|p| p + 1);
        match (find(&self.parts.input_partition), find(&self.parts.output_partition)) {
            (Some(h), Some(m)) => Ok((h, m)),
            _ => Err(Error::Structure(format!("node {} is not covered by the partitions", i + 1))),
        }
    }

    /// True iff every zero-delay node transmits in a strictly later layer than it receives.
    pub fn is_feasible(&self, b: &DelayProfile) -> Result<bool> {
        match self.check_feasible(b) {
            Ok(()) => Ok(true),
            Err(Error::Infeasible { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    /// Like [`is_feasible`](Self::is_feasible) but names the first offending node.
    pub fn check_feasible(&self, b: &DelayProfile) -> Result<()> {
        if b.len() != self.n_nodes() {
            return Err(Error::Argument(format!(
                "delay profile has {} entries for {} nodes",
                b.len(),
                self.n_nodes()
            )));
        }
        for i in 0..self.n_nodes() {
            if b.get(i) == 0 {
                let (h, m) = self.locate(i)?;
                if h <= m {
                    return Err(Error::Infeasible { node: i + 1, h, m });
                }
            }
        }
        Ok(())
    }

    /// Every cut `T` with `T^c ∩ D ≠ ∅`, in increasing bitmask order.
    pub fn cuts(&self) -> Result<Vec<NodeSet>> {
        let n = self.n_nodes();
        if n > MAX_CUT_NODES {
            return Err(Error::Argument(format!(
                "cut enumeration is limited to {MAX_CUT_NODES} nodes, network has {n}"
            )));
        }
        let d = self.parts.destinations.0;
        let full = NodeSet::full(n).0;
        Ok((0..=full)
            .filter(|t| !t & full & d != 0)
            .map(NodeSet)
            .collect())
    }

    /// `Ω = ∪_h S^h × G_h` as 0-based ordered pairs.
    pub fn edge_set_omega(&self) -> BTreeSet<(usize, usize)> {
        let mut out = BTreeSet::new();
        for h in 1..=self.alpha() {
            for i in self.s_upto(h).iter() {
                for j in self.g(h).iter() {
                    out.insert((i, j));
                }
            }
        }
        out
    }

    /// True iff every layer's channel is deterministic within `tol`.
    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.parts.channels.iter().all(|k| k.is_deterministic(tol))
    }

    /// Returns a copy with the channel of layer `h` replaced (validated).
    pub fn with_channel(&self, h: usize, k: ChannelKernel) -> Result<Self> {
        let mut parts = self.parts.clone();
        parts.channels[h - 1] = k;
        parts.model = ChannelModel::Explicit;
        Self::new(parts)
    }
}

/// Per-node delays `b ∈ {0,1}^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct DelayProfile(Vec<u8>);

impl DelayProfile {
    pub fn new(b: Vec<u8>) -> Result<Self> {
        if let Some(x) = b.iter().find(|&&x| x > 1) {
            return Err(Error::Argument(format!("delay entries must be 0 or 1, found {x}")));
        }
        Ok(Self(b))
    }

    /// The positive-delay profile (all ones).
    pub fn all_ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Profile whose bit `i` is bit `i` of `mask`.
    pub fn from_mask(n: usize, mask: u32) -> Self {
        Self((0..n).map(|i| ((mask >> i) & 1) as u8).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }
}

impl TryFrom<Vec<u8>> for DelayProfile {
    type Error = Error;
    fn try_from(v: Vec<u8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DelayProfile> for Vec<u8> {
    fn from(b: DelayProfile) -> Vec<u8> {
        b.0
    }
}

impl fmt::Display for DelayProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn figure2_is_valid_and_located() {
        let net = examples::figure2();
        assert!(net.validate().is_empty());
        assert_eq!(net.locate(1).unwrap(), (2, 1));
        assert_eq!(net.locate(0).unwrap(), (1, 2));
        assert_eq!(net.locate(2).unwrap(), (2, 2));
        assert_eq!(net.locate(3), Err(Error::NodeOutOfRange(4)));
    }

    #[test]
    fn figure2_feasibility() {
        let net = examples::figure2();
        let p = |v: &[u8]| DelayProfile::new(v.to_vec()).unwrap();
        assert!(net.is_feasible(&p(&[1, 1, 1])).unwrap());
        assert!(net.is_feasible(&p(&[1, 0, 1])).unwrap());
        assert!(!net.is_feasible(&p(&[0, 1, 1])).unwrap());
        assert_eq!(
            net.check_feasible(&p(&[0, 1, 1])),
            Err(Error::Infeasible { node: 1, h: 1, m: 2 })
        );
        assert!(net.is_feasible(&p(&[1, 1])).is_err());
        assert!(DelayProfile::new(vec![2]).is_err());
    }

    #[test]
    fn overlapping_partition_is_reported() {
        let parts = NetworkParts {
            x_atoms: vec![vec![Var::new("X1", 2)], vec![Var::new("X2", 2)]],
            y_atoms: vec![vec![Var::new("Y1", 2)], vec![Var::new("Y2", 2)]],
            shared: vec![],
            input_partition: vec![NodeSet::from_nodes([0]), NodeSet::from_nodes([0, 1])],
            output_partition: vec![NodeSet::from_nodes([0]), NodeSet::from_nodes([1])],
            channels: vec![],
            sources: NodeSet::singleton(0),
            destinations: NodeSet::singleton(1),
            model: ChannelModel::Explicit,
        };
        let v = LayeredNetwork::unvalidated(parts).validate();
        assert!(v.iter().any(|v| v.message.contains("partition sets overlap") && v.node == Some(1)));
    }

    #[test]
    fn non_stochastic_row_is_reported() {
        let bad = ChannelKernel::new_unchecked(
            vec![Var::new("X1", 2)],
            vec![Var::new("Y1", 2)],
            vec![0.5, 0.4, 0.0, 1.0],
        )
        .unwrap();
        let parts = NetworkParts {
            x_atoms: vec![vec![Var::new("X1", 2)]],
            y_atoms: vec![vec![Var::new("Y1", 2)]],
            shared: vec![],
            input_partition: vec![NodeSet::singleton(0)],
            output_partition: vec![NodeSet::singleton(0)],
            channels: vec![bad],
            sources: NodeSet::singleton(0),
            destinations: NodeSet::singleton(0),
            model: ChannelModel::Explicit,
        };
        let v = LayeredNetwork::unvalidated(parts).validate();
        assert_eq!(v.len(), 1);
        assert!(v[0].message.contains("non-stochastic row"));
        assert_eq!(v[0].layer, Some(1));
    }

    #[test]
    fn channel_reading_the_future_is_rejected() {
        // Layer 1 may not read Y1, which is produced by layer 1 itself.
        let k = ChannelKernel::identity(Var::new("Y1", 2), "Y2");
        let r = LayeredNetwork::explicit(
            &[2, 2],
            &[2, 2],
            vec![NodeSet::full(2)],
            vec![NodeSet::full(2)],
            vec![k],
            NodeSet::singleton(0),
            NodeSet::singleton(1),
        );
        assert!(matches!(r, Err(Error::Invalid(_))));
    }

    #[test]
    fn cut_examples() {
        let net = examples::figure2();
        let cuts = net.cuts().unwrap();
        assert_eq!(cuts, vec![NodeSet(0), NodeSet(1), NodeSet(2), NodeSet(3)]);

        let one = examples::identity_network(&[2], NodeSet::singleton(0));
        assert_eq!(one.cuts().unwrap(), vec![NodeSet::EMPTY]);

        let two = examples::identity_network(&[2, 2], NodeSet::full(2));
        assert_eq!(two.cuts().unwrap(), vec![NodeSet(0), NodeSet(1), NodeSet(2)]);
    }

    #[test]
    fn omega_examples() {
        let net = examples::figure2();
        let omega = net.edge_set_omega();
        let mut want = BTreeSet::new();
        want.insert((0, 1));
        for i in 0..3 {
            want.insert((i, 0));
            want.insert((i, 2));
        }
        assert_eq!(omega, want);

        let one = examples::identity_network(&[2, 2], NodeSet::full(2));
        assert_eq!(one.edge_set_omega().len(), 4);
    }

    #[test]
    fn nodeset_display_is_one_based() {
        assert_eq!(NodeSet::from_nodes([0, 2]).to_string(), "{1,3}");
        assert_eq!(NodeSet::EMPTY.to_string(), "{}");
    }
}
