//! Seeded random instances: distributions, policies, networks and codes.
//!
//! Every generator takes an explicit RNG.  [`stream_rng`] derives an
//! independent generator per (seed, index) pair so that parallel loops give
//! the same results regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{DelayProfile, LayeredNetwork, NodeSet};
use crate::prob::{decode_index, encode_index, ChannelKernel, Var};
use crate::simulator::{BlockCode, Decoder, Encoder};

/// Generator for item `index` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// One draw from the flat Dirichlet distribution on `k` outcomes.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    // Normalized unit exponentials; `1 - u` keeps the logarithm finite.
    let mut v: Vec<f64> = (0..k).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    } else {
        v = vec![1.0 / k as f64; k];
    }
    v
}

/// Random kernel with every row an independent Dirichlet draw, or a random
/// point mass when `deterministic`.
pub fn random_kernel<R: Rng + ?Sized>(
    rng: &mut R,
    inputs: Vec<Var>,
    outputs: Vec<Var>,
    deterministic: bool,
) -> Result<ChannelKernel> {
    let rows: usize = inputs.iter().map(|v| v.size).product();
    let cols: usize = outputs.iter().map(|v| v.size).product();
    let mut table = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        if deterministic {
            let c = rng.gen_range(0..cols);
            table.extend((0..cols).map(|j| if j == c { 1.0 } else { 0.0 }));
        } else {
            table.extend(dirichlet(rng, cols));
        }
    }
    ChannelKernel::new(inputs, outputs, table)
}

/// Random factorized input policies, one per layer, each reading all of
/// `X_{S^{h-1}}` and `Y_{G^{h-1}}`.
pub fn random_policies<R: Rng + ?Sized>(
    net: &LayeredNetwork,
    rng: &mut R,
    deterministic: bool,
) -> Result<Vec<ChannelKernel>> {
    (1..=net.alpha())
        .map(|h| {
            let mut inputs = net.x_vars(net.s_upto(h - 1));
            for i in net.g_upto(h - 1).iter() {
                inputs.extend(net.own_y_atoms(i).iter().cloned());
            }
            random_kernel(rng, inputs, net.x_vars(net.s(h)), deterministic)
        })
        .collect()
}

/// Random product marginals, one Dirichlet draw per node.
pub fn random_marginals<R: Rng + ?Sized>(net: &LayeredNetwork, rng: &mut R) -> Vec<Vec<f64>> {
    (0..net.n_nodes())
        .map(|i| dirichlet(rng, net.input_alphabet(i)))
        .collect()
}

/// Random deterministic network with binary alphabets on `n` nodes and
/// `alpha` layers.
///
/// Each node is placed in a uniformly random input and output layer, every
/// layer's channel is a uniformly random function of all the variables it
/// may read, and the demand sets are random nonempty subsets.
pub fn random_deterministic_network<R: Rng + ?Sized>(rng: &mut R, n: usize, alpha: usize) -> Result<LayeredNetwork> {
    let mut s = vec![NodeSet::EMPTY; alpha];
    let mut g = vec![NodeSet::EMPTY; alpha];
    for i in 0..n {
        let a = rng.gen_range(0..alpha);
        s[a] = s[a].union(NodeSet::singleton(i));
        let b = rng.gen_range(0..alpha);
        g[b] = g[b].union(NodeSet::singleton(i));
    }
    let nonempty = |rng: &mut R| NodeSet(rng.gen_range(1..(1u32 << n)));
    let sources = nonempty(rng);
    let destinations = nonempty(rng);
    let x: Vec<Var> = (0..n).map(|i| Var::new(format!("X{}", i + 1), 2)).collect();
    let y: Vec<Var> = (0..n).map(|i| Var::new(format!("Y{}", i + 1), 2)).collect();
    let mut channels = Vec::with_capacity(alpha);
    let mut s_upto = NodeSet::EMPTY;
    let mut g_before = NodeSet::EMPTY;
    for h in 0..alpha {
        s_upto = s_upto.union(s[h]);
        let mut inputs: Vec<Var> = s_upto.iter().map(|i| x[i].clone()).collect();
        inputs.extend(g_before.iter().map(|i| y[i].clone()));
        let outputs: Vec<Var> = g[h].iter().map(|i| y[i].clone()).collect();
        channels.push(random_kernel(rng, inputs, outputs, true)?);
        g_before = g_before.union(g[h]);
    }
    LayeredNetwork::explicit(&vec![2; n], &vec![2; n], s, g, channels, sources, destinations)
}

/// Random feasible profile: every node that may be zero-delay is so with probability 1/2.
pub fn random_feasible_profile<R: Rng + ?Sized>(net: &LayeredNetwork, rng: &mut R) -> Result<DelayProfile> {
    let mut b = Vec::with_capacity(net.n_nodes());
    for i in 0..net.n_nodes() {
        let (h, m) = net.locate(i)?;
        b.push(if h > m && rng.gen_bool(0.5) { 0 } else { 1 });
    }
    DelayProfile::new(b)
}

/// Uniformly random code: every encoder and decoder table entry is drawn
/// independently.  Sources get `message_size` messages, other nodes one.
/// Encoders and decoders read every output atom of their node.
pub fn random_code<R: Rng + ?Sized>(
    net: &LayeredNetwork,
    rng: &mut R,
    n: usize,
    profile: DelayProfile,
    message_size: usize,
) -> Result<BlockCode> {
    let nn = net.n_nodes();
    let message_sizes: Vec<usize> = (0..nn)
        .map(|i| if net.sources().contains(i) { message_size } else { 1 })
        .collect();
    let mut encoders = Vec::with_capacity(nn);
    for i in 0..nn {
        let reads: Vec<String> = net.y_atoms(i).into_iter().map(|v| v.name).collect();
        let radix: usize = net.y_atoms(i).iter().map(|v| v.size).product();
        let xs = net.input_alphabet(i);
        let slots = (1..=n)
            .map(|k| {
                let len = k - profile.get(i) as usize;
                let entries = message_sizes[i] * radix.pow(len as u32);
                (0..entries).map(|_| rng.gen_range(0..xs)).collect()
            })
            .collect();
        encoders.push(Encoder { node: i, reads, slots });
    }
    let mut decoders = Vec::new();
    for i in net.sources().iter() {
        for j in net.destinations().iter() {
            let reads: Vec<String> = net.y_atoms(j).into_iter().map(|v| v.name).collect();
            let radix: usize = net.y_atoms(j).iter().map(|v| v.size).product();
            let entries = message_sizes[j] * radix.pow(n as u32);
            let table = (0..entries).map(|_| rng.gen_range(0..message_sizes[i])).collect();
            decoders.push(Decoder {
                source: i,
                destination: j,
                reads,
                table,
            });
        }
    }
    BlockCode::new(net, n, profile, message_sizes, encoders, decoders)
}

/// Passes every binary output of `k` through an independent BSC(`eps`).
pub fn noisy_variant(k: &ChannelKernel, eps: f64) -> Result<ChannelKernel> {
    let sizes = k.output_sizes();
    let cols = k.cols();
    let mut table = vec![0.0; k.rows() * cols];
    let mut a = vec![0usize; sizes.len()];
    let mut b = vec![0usize; sizes.len()];
    for r in 0..k.rows() {
        for (c, &w) in k.row(r).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            decode_index(c, &sizes, &mut a);
            for c2 in 0..cols {
                decode_index(c2, &sizes, &mut b);
                let mut q = w;
                for ((x, y), s) in a.iter().zip(&b).zip(&sizes) {
                    q *= match (*s, x == y) {
                        (2, true) => 1.0 - eps,
                        (2, false) => eps,
                        (_, true) => 1.0,
                        (_, false) => 0.0,
                    };
                }
                table[r * cols + encode_index(&b, &sizes)] += q;
            }
        }
    }
    ChannelKernel::new(k.inputs().to_vec(), k.outputs().to_vec(), table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_is_a_distribution() {
        let mut rng = stream_rng(3, 0);
        for k in 1..6 {
            let p = dirichlet(&mut rng, k);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = stream_rng(0, 5).gen();
        let b: f64 = stream_rng(0, 5).gen();
        let c: f64 = stream_rng(0, 6).gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn random_networks_are_valid_and_deterministic() {
        for s in 0..50 {
            let mut rng = stream_rng(11, s);
            let net = random_deterministic_network(&mut rng, 3, 2).unwrap();
            assert!(net.validate().is_empty());
            assert!(net.is_deterministic(0.0));
            let b = random_feasible_profile(&net, &mut rng).unwrap();
            assert!(net.is_feasible(&b).unwrap());
        }
    }

    #[test]
    fn noisy_variant_keeps_rows_stochastic() {
        let k = ChannelKernel::identity(Var::new("X", 2), "Y");
        let n = noisy_variant(&k, 0.1).unwrap();
        assert_eq!(n.table(), &[0.9, 0.1, 0.1, 0.9]);
        assert!(!n.is_deterministic(1e-9));
    }
}
