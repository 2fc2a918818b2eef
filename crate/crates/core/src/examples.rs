//! Small reference networks used throughout the tests and shipped as spec files.

use crate::channels::{assemble_dmc_network, assemble_wen_network, EdgeChannelSet, ErasureSpec};
use crate::network::{LayeredNetwork, NodeSet};
use crate::prob::{ChannelKernel, Var};

/// `S = ({1}, {2, 3})`.
pub fn fig2_input_partition() -> Vec<NodeSet> {
    vec![NodeSet::from_nodes([0]), NodeSet::from_nodes([1, 2])]
}

/// `G = ({2}, {1, 3})`.
pub fn fig2_output_partition() -> Vec<NodeSet> {
    vec![NodeSet::from_nodes([1]), NodeSet::from_nodes([0, 2])]
}

/// Linear deterministic relay: `Y2 = X1`, `Y3 = X1 xor X2`, `Y1` trivial.
///
/// Node 1 is the source and node 3 the destination.  Node 3 never
/// transmits, so `X3` is trivial.
pub fn figure2() -> LayeredNetwork {
    let copy = ChannelKernel::identity(Var::new("X1", 2), "Y2");
    let xor = ChannelKernel::deterministic(
        vec![Var::new("X1", 2), Var::new("X2", 2)],
        vec![Var::new("Y1", 1), Var::new("Y3", 2)],
        |d| vec![0, d[0] ^ d[1]],
    )
    .expect("valid kernel");
    LayeredNetwork::explicit(
        &[2, 2, 1],
        &[1, 2, 2],
        fig2_input_partition(),
        fig2_output_partition(),
        vec![copy, xor],
        NodeSet::singleton(0),
        NodeSet::singleton(2),
    )
    .expect("figure 2 network is valid")
}

/// Relay network of three BSC(`eps`) edges (1,2), (1,3), (2,3).
pub fn figure3(eps: f64) -> LayeredNetwork {
    let bsc = ChannelKernel::bsc("X", "Y", eps).expect("valid crossover");
    let edges = EdgeChannelSet::new([((0, 1), bsc.clone()), ((0, 2), bsc.clone()), ((1, 2), bsc)].into())
        .expect("valid edges");
    assemble_dmc_network(
        fig2_input_partition(),
        fig2_output_partition(),
        edges,
        NodeSet::singleton(0),
        NodeSet::singleton(2),
    )
    .expect("figure 3 network is valid")
}

/// Wireless erasure relay with binary broadcasts and erasure probability
/// `eps` on (1,2), (1,3), (2,3).
pub fn figure4(eps: f64) -> LayeredNetwork {
    let spec = ErasureSpec::uniform([(0, 1), (0, 2), (1, 2)], eps).expect("valid epsilon");
    assemble_wen_network(
        &[2, 2, 2],
        &spec,
        fig2_input_partition(),
        fig2_output_partition(),
        NodeSet::singleton(0),
        NodeSet::singleton(2),
    )
    .expect("figure 4 network is valid")
}

/// Two-node BSC relay topology: `Y2 = BSC(X1)`, `Y1 = X2 xor Y2`.
pub fn figure1(eps: f64) -> LayeredNetwork {
    let bsc = ChannelKernel::bsc("X1", "Y2", eps).expect("valid crossover");
    let xor = ChannelKernel::deterministic(
        vec![Var::new("X2", 2), Var::new("Y2", 2)],
        vec![Var::new("Y1", 2)],
        |d| vec![d[0] ^ d[1]],
    )
    .expect("valid kernel");
    LayeredNetwork::explicit(
        &[2, 2],
        &[2, 2],
        vec![NodeSet::singleton(0), NodeSet::singleton(1)],
        vec![NodeSet::singleton(1), NodeSet::singleton(0)],
        vec![bsc, xor],
        NodeSet::full(2),
        NodeSet::full(2),
    )
    .expect("figure 1 network is valid")
}

/// Single-layer network with `Y_i = X_i` for every node; all nodes are sources.
pub fn identity_network(alphabets: &[usize], destinations: NodeSet) -> LayeredNetwork {
    let n = alphabets.len();
    let factors: Vec<ChannelKernel> = alphabets
        .iter()
        .enumerate()
        .map(|(i, &a)| ChannelKernel::identity(Var::new(format!("X{}", i + 1), a), format!("Y{}", i + 1)))
        .collect();
    let k = ChannelKernel::product(&factors).expect("valid product");
    LayeredNetwork::explicit(
        alphabets,
        alphabets,
        vec![NodeSet::full(n)],
        vec![NodeSet::full(n)],
        vec![k],
        NodeSet::full(n),
        destinations,
    )
    .expect("identity network is valid")
}

/// Two nodes exchanging symbols: `Y2 = X1` in layer 1, `Y1 = X2` in layer 2.
pub fn exchange(alphabets: [usize; 2]) -> LayeredNetwork {
    let a = ChannelKernel::identity(Var::new("X1", alphabets[0]), "Y2");
    let b = ChannelKernel::identity(Var::new("X2", alphabets[1]), "Y1");
    LayeredNetwork::explicit(
        &alphabets,
        &[alphabets[1], alphabets[0]],
        vec![NodeSet::singleton(0), NodeSet::singleton(1)],
        vec![NodeSet::singleton(1), NodeSet::singleton(0)],
        vec![a, b],
        NodeSet::full(2),
        NodeSet::full(2),
    )
    .expect("exchange network is valid")
}
