//! Channel kernels for the DMC and erasure network classes, and point-to-point
//! capacity via Blahut-Arimoto.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{ChannelModel, LayeredNetwork, NetworkParts, NodeSet};
use crate::prob::{ChannelKernel, JointPmf, Var};

/// Default stopping tolerance for [`blahut_arimoto`].
pub const BA_TOL: f64 = 1e-9;

/// Default iteration limit for [`blahut_arimoto`].
pub const BA_MAX_ITERS: usize = 10_000;

/// Outcome of [`blahut_arimoto`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Capacity {
    /// Capacity estimate in bits; equals the mutual information of `input`.
    pub capacity: f64,
    /// Lower end of the final bracket (same as `capacity`).
    pub lower: f64,
    /// Upper end of the final bracket.
    pub upper: f64,
    /// Input distribution attaining `capacity`.
    pub input: Vec<f64>,
    pub iterations: usize,
}

/// Capacity of a single-input, single-output kernel.
///
/// Each iteration computes `D(x) = KL(q(.|x) || r)` for the current output
/// law `r`, which brackets the capacity as `I(p) <= C <= max_x D(x)`.  The
/// loop stops once the bracket is narrower than `tol`.
pub fn blahut_arimoto(k: &ChannelKernel, tol: f64, max_iters: usize) -> Result<Capacity> {
    if k.inputs().len() > 1 || k.outputs().len() > 1 {
        return Err(Error::Argument(
            "Blahut-Arimoto needs a kernel with one input and one output variable".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    let nx = k.rows();
    let ny = k.cols();
    // Output law, divergences D(x) and the lower bound sum_x p(x) D(x) at `p`.
    let evaluate = |p: &[f64]| {
        let mut r = vec![0.0; ny];
        for (x, px) in p.iter().enumerate() {
            for (y, q) in k.row(x).iter().enumerate() {
                r[y] += px * q;
            }
        }
        let d: Vec<f64> = (0..nx)
            .map(|x| {
                k.row(x)
                    .iter()
                    .zip(&r)
                    .filter(|(q, _)| **q > 0.0)
                    .map(|(q, ry)| q * (q / ry).log2())
                    .sum()
            })
            .collect();
        let lower = p.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        (d, lower)
    };
    let step = |p: &[f64], d: &[f64], mu: f64| {
        let mut q: Vec<f64> = p.iter().zip(d).map(|(px, dx)| px * (mu * dx).exp2()).collect();
        let z: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= z);
        q
    };
    let mut p = vec![1.0 / nx as f64; nx];
    let (mut d, mut lower) = evaluate(&p);
    let mut upper = f64::INFINITY;
    // Exponent multiplier: 1 is the classical update, which never decreases
    // the lower bound.  Larger values are kept only while they help, which
    // speeds up channels with nearly parallel rows.
    let mut mu = 1.0;
    for it in 1..=max_iters {
        upper = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(lower);
        if upper - lower <= tol {
            return Ok(Capacity {
                capacity: lower,
                lower,
                upper,
                input: p,
                iterations: it,
            });
        }
        if it % 8 == 0 {
            if let Some((q, dq, lq)) = newton_step(k, &p, &evaluate, lower) {
                p = q;
                d = dq;
                lower = lq;
                continue;
            }
        }
        loop {
            let q = step(&p, &d, mu);
            let (dq, lq) = evaluate(&q);
            if lq >= lower || mu == 1.0 {
                p = q;
                d = dq;
                lower = lq;
                mu = (mu * 2.0).min(1024.0);
                break;
            }
            mu = (mu / 4.0).max(1.0);
        }
    }
    Err(Error::IterationLimit {
        iterations: max_iters,
        lower,
        upper,
    })
}

/// Newton step on the mutual information, restricted to inputs that still
/// carry mass and to the simplex.  Returns the new point only when it raises
/// the lower bound.  This fixes the slow tail of the multiplicative update
/// when some optimal masses are small but positive.
fn newton_step<F>(k: &ChannelKernel, p: &[f64], evaluate: &F, lower: f64) -> Option<(Vec<f64>, Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> (Vec<f64>, f64),
{
    let pmax = p.iter().cloned().fold(0.0, f64::max);
    let support: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 1e-7 * pmax).collect();
    let m = support.len();
    if m < 2 {
        return None;
    }
    let ny = k.cols();
    let mut r = vec![0.0; ny];
    for (x, px) in p.iter().enumerate() {
        for (y, q) in k.row(x).iter().enumerate() {
            r[y] += px * q;
        }
    }
    // Gradient and Hessian of I(p) in nats.
    let mut g = vec![0.0; m];
    let mut h = nalgebra::DMatrix::<f64>::zeros(m + 1, m + 1);
    for (a, &x) in support.iter().enumerate() {
        let wx = k.row(x);
        g[a] = wx
            .iter()
            .zip(&r)
            .filter(|(q, _)| **q > 0.0)
            .map(|(q, ry)| q * (q / ry).ln())
            .sum::<f64>()
            - 1.0;
        for (b, &x2) in support.iter().enumerate().skip(a) {
            let v: f64 = wx
                .iter()
                .zip(k.row(x2))
                .zip(&r)
                .filter(|(_, ry)| **ry > 0.0)
                .map(|((u, w), ry)| u * w / ry)
                .sum();
            h[(a, b)] = -v;
            h[(b, a)] = -v;
        }
    }
    let scale = (0..m).map(|a| -h[(a, a)]).sum::<f64>() / m as f64;
    for a in 0..m {
        h[(a, a)] -= 1e-12 * scale;
        h[(a, m)] = 1.0;
        h[(m, a)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(m + 1);
    for a in 0..m {
        rhs[a] = -g[a];
    }
    let sol = h.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    // Stay strictly inside the simplex so the multiplicative update can
    // still move every coordinate afterwards.
    let mut t: f64 = 1.0;
    for (a, &x) in support.iter().enumerate() {
        if sol[a] < 0.0 {
            t = t.min(0.9 * p[x] / -sol[a]);
        }
    }
    for _ in 0..20 {
        let mut q = p.to_vec();
        for (a, &x) in support.iter().enumerate() {
            q[x] = (q[x] + t * sol[a]).max(0.0);
        }
        let z: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= z);
        let (dq, lq) = evaluate(&q);
        if lq > lower {
            return Some((q, dq, lq));
        }
        t /= 2.0;
    }
    None
}

/// Erasure kernel on `size` symbols with variables named `X` and `Y`.
///
/// The erasure symbol is the extra last index `size`.
pub fn erasure_kernel(size: usize, eps: f64) -> Result<ChannelKernel> {
    ChannelKernel::erasure("X", "Y", size, eps)
}

/// Per-edge point-to-point channels `q_{Y_{i,j}|X_{i,j}}`, keyed by 0-based `(i, j)`.
///
/// Every kernel has exactly one input and one output variable; names are
/// irrelevant and replaced during assembly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeChannelSet {
    edges: BTreeMap<(usize, usize), ChannelKernel>,
}

impl EdgeChannelSet {
    pub fn new(edges: BTreeMap<(usize, usize), ChannelKernel>) -> Result<Self> {
        for ((i, j), k) in &edges {
            if k.inputs().len() != 1 || k.outputs().len() != 1 {
                return Err(Error::Structure(format!(
                    "edge ({}, {}) kernel must have one input and one output variable",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Self { edges })
    }

    pub fn get(&self, i: usize, j: usize) -> Option<&ChannelKernel> {
        self.edges.get(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &ChannelKernel)> {
        self.edges.iter()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Erasure probabilities `ε_{i,j}`, keyed by 0-based `(i, j)`; absent pairs have `ε = 1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ErasureSpec {
    eps: BTreeMap<(usize, usize), f64>,
}

impl ErasureSpec {
    pub fn new(eps: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        for ((i, j), e) in &eps {
            if !(0.0..=1.0).contains(e) {
                return Err(Error::Argument(format!(
                    "erasure probability of edge ({}, {}) is {e}, outside [0, 1]",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(Self { eps })
    }

    /// Same `ε` on every listed pair.
    pub fn uniform<I: IntoIterator<Item = (usize, usize)>>(pairs: I, eps: f64) -> Result<Self> {
        Self::new(pairs.into_iter().map(|p| (p, eps)).collect())
    }

    pub fn epsilon(&self, i: usize, j: usize) -> f64 {
        self.eps.get(&(i, j)).copied().unwrap_or(1.0)
    }

    /// Copy with every pair outside `omega` dropped (forced to `ε = 1`).
    pub fn restricted(&self, omega: &BTreeSet<(usize, usize)>) -> Self {
        Self {
            eps: self
                .eps
                .iter()
                .filter(|(p, _)| omega.contains(p))
                .map(|(p, e)| (*p, *e))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.eps.iter()
    }
}

fn omega_of(s: &[NodeSet], g: &[NodeSet]) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    let mut upto = NodeSet::EMPTY;
    for (sh, gh) in s.iter().zip(g) {
        upto = upto.union(*sh);
        for i in upto.iter() {
            for j in gh.iter() {
                out.insert((i, j));
            }
        }
    }
    out
}

fn dmc_x(i: usize, j: usize) -> String {
    format!("X{}_{}", i + 1, j + 1)
}

fn dmc_y(i: usize, j: usize) -> String {
    format!("Y{}_{}", i + 1, j + 1)
}

/// Edge kernel renamed to its network atoms, with size-1 variables dropped.
fn edge_atom_kernel(i: usize, j: usize, k: &ChannelKernel) -> Result<ChannelKernel> {
    let x = &k.inputs()[0];
    let y = &k.outputs()[0];
    let inputs = if x.size > 1 { vec![Var::new(dmc_x(i, j), x.size)] } else { vec![] };
    let outputs = if y.size > 1 { vec![Var::new(dmc_y(i, j), y.size)] } else { vec![] };
    ChannelKernel::new(inputs, outputs, k.table().to_vec())
}

fn dmc_layer(g: &[NodeSet], edges: &EdgeChannelSet, h: usize) -> Result<ChannelKernel> {
    let gh = g[h - 1];
    let factors = edges
        .iter()
        .filter(|((_, j), _)| gh.contains(*j))
        .map(|(&(i, j), k)| edge_atom_kernel(i, j, k))
        .collect::<Result<Vec<_>>>()?;
    ChannelKernel::product(&factors)
}

/// The product-form kernel `q^{(h)} = ∏_{(i,j) ∈ S^h × G_h} q_{Y_{i,j}|X_{i,j}}`.
pub fn assemble_dmc_layer(net: &LayeredNetwork, edges: &EdgeChannelSet, h: usize) -> Result<ChannelKernel> {
    if h == 0 || h > net.alpha() {
        return Err(Error::Argument(format!("layer {h} outside 1..={}", net.alpha())));
    }
    let omega = net.edge_set_omega();
    for (p, _) in edges.iter() {
        if !omega.contains(p) {
            return Err(Error::Structure(format!("edge ({}, {}) is outside Omega", p.0 + 1, p.1 + 1)));
        }
    }
    dmc_layer(&net.parts().output_partition, edges, h)
}

/// Network of independent point-to-point DMCs.
///
/// Node `i` transmits the tuple `(X_{i,j})_j` and node `j` receives
/// `(Y_{i,j})_i`.  Pairs of Omega without a kernel, and size-1 edge
/// variables, are trivial and carry no atom.
pub fn assemble_dmc_network(
    input_partition: Vec<NodeSet>,
    output_partition: Vec<NodeSet>,
    edges: EdgeChannelSet,
    sources: NodeSet,
    destinations: NodeSet,
) -> Result<LayeredNetwork> {
    let n = input_partition
        .iter()
        .chain(&output_partition)
        .fold(NodeSet::EMPTY, |a, b| a.union(*b))
        .iter()
        .last()
        .map_or(0, |i| i + 1);
    let omega = omega_of(&input_partition, &output_partition);
    let mut x_atoms = vec![Vec::new(); n];
    let mut y_atoms = vec![Vec::new(); n];
    for (&(i, j), k) in edges.iter() {
        if !omega.contains(&(i, j)) {
            return Err(Error::Model(format!(
                "edge ({}, {}) is outside Omega for these partitions",
                i + 1,
                j + 1
            )));
        }
        let (x, y) = (&k.inputs()[0], &k.outputs()[0]);
        if x.size > 1 {
            x_atoms[i].push(Var::new(dmc_x(i, j), x.size));
        }
        if y.size > 1 {
            y_atoms[j].push(Var::new(dmc_y(i, j), y.size));
        }
    }
    let channels = (1..=input_partition.len())
        .map(|h| dmc_layer(&output_partition, &edges, h))
        .collect::<Result<Vec<_>>>()?;
    LayeredNetwork::new(NetworkParts {
        x_atoms,
        y_atoms,
        shared: Vec::new(),
        input_partition,
        output_partition,
        channels,
        sources,
        destinations,
        model: ChannelModel::Dmc(edges),
    })
}

fn wen_y(i: usize, j: usize) -> String {
    format!("Y{}_{}", i + 1, j + 1)
}

fn wen_e(i: usize, j: usize) -> String {
    format!("E{}_{}", i + 1, j + 1)
}

/// Edges of a wireless erasure network that carry a non-degenerate output:
/// pairs of Omega with `ε < 1`.
pub fn wen_edges(omega: &BTreeSet<(usize, usize)>, spec: &ErasureSpec) -> Vec<(usize, usize)> {
    omega
        .iter()
        .copied()
        .filter(|&(i, j)| spec.epsilon(i, j) < 1.0)
        .collect()
}

fn wen_edges_of(net: &LayeredNetwork) -> Result<(Vec<usize>, ErasureSpec, Vec<(usize, usize)>)> {
    match net.model() {
        ChannelModel::Wen { alphabets, erasures } => {
            let edges = wen_edges(&net.edge_set_omega(), erasures);
            Ok((alphabets.clone(), erasures.clone(), edges))
        }
        other => Err(Error::Class(format!("expected a wireless erasure network, found a {} network", other.name()))),
    }
}

/// The map `χ` from edge outputs to the erasure pattern: `E_{i,j} = 1` iff `Y_{i,j}` is erased.
pub fn wen_chi_kernel(net: &LayeredNetwork) -> Result<ChannelKernel> {
    let (alphabets, _, edges) = wen_edges_of(net)?;
    chi_kernel(&alphabets, &edges)
}

fn chi_kernel(alphabets: &[usize], edges: &[(usize, usize)]) -> Result<ChannelKernel> {
    let inputs: Vec<Var> = edges
        .iter()
        .map(|&(i, j)| Var::new(wen_y(i, j), alphabets[i] + 1))
        .collect();
    let outputs: Vec<Var> = edges.iter().map(|&(i, j)| Var::new(wen_e(i, j), 2)).collect();
    let erased: Vec<usize> = edges.iter().map(|&(i, _)| alphabets[i]).collect();
    ChannelKernel::deterministic(inputs, outputs, |d| {
        d.iter().zip(&erased).map(|(y, e)| usize::from(y == e)).collect()
    })
}

fn wen_layers(
    alphabets: &[usize],
    spec: &ErasureSpec,
    g: &[NodeSet],
    edges: &[(usize, usize)],
) -> Result<Vec<ChannelKernel>> {
    let alpha = g.len();
    let mut out = Vec::with_capacity(alpha);
    for h in 1..=alpha {
        let factors = edges
            .iter()
            .filter(|(_, j)| g[h - 1].contains(*j))
            .map(|&(i, j)| {
                ChannelKernel::erasure(&format!("X{}", i + 1), &wen_y(i, j), alphabets[i], spec.epsilon(i, j))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut k = ChannelKernel::product(&factors)?;
        if h == alpha && !edges.is_empty() {
            k = k.chain(&chi_kernel(alphabets, edges)?)?;
        }
        out.push(k);
    }
    Ok(out)
}

/// Per-layer kernels of a wireless erasure network.
///
/// Layer `h` maps the broadcast symbols `X_{S^h}` to the edge outputs
/// `Y_{i,m}`, `m ∈ G_h`, with independent erasures; the last layer also
/// emits the erasure pattern `E`, delivered to every destination.
pub fn assemble_wen_layers(
    alphabets: &[usize],
    spec: &ErasureSpec,
    input_partition: &[NodeSet],
    output_partition: &[NodeSet],
    destinations: NodeSet,
) -> Result<Vec<ChannelKernel>> {
    let net = assemble_wen_network(
        alphabets,
        spec,
        input_partition.to_vec(),
        output_partition.to_vec(),
        NodeSet::singleton(0),
        destinations,
    )?;
    Ok(net.channels().to_vec())
}

/// Wireless erasure network: node `i` broadcasts `X_i` and node `j` sees
/// `Y_{i,j}`, which is `X_i` or the erasure symbol with probability `ε_{i,j}`.
///
/// Edges with `ε = 1` (including every pair outside Omega) carry no atom,
/// and the erasure pattern has one binary atom `E{i}_{j}` per remaining edge.
pub fn assemble_wen_network(
    alphabets: &[usize],
    spec: &ErasureSpec,
    input_partition: Vec<NodeSet>,
    output_partition: Vec<NodeSet>,
    sources: NodeSet,
    destinations: NodeSet,
) -> Result<LayeredNetwork> {
    let n = alphabets.len();
    if let Some(i) = alphabets.iter().position(|&a| a == 0) {
        return Err(Error::Model(format!("node {} has an empty broadcast alphabet", i + 1)));
    }
    let alpha = output_partition.len();
    if alpha == 0 || input_partition.len() != alpha {
        return Err(Error::Model("partitions must have the same nonzero number of layers".into()));
    }
    if !destinations.is_subset(output_partition[alpha - 1]) {
        return Err(Error::Model(
            "every destination must belong to the last output set of a wireless erasure network".into(),
        ));
    }
    let omega = omega_of(&input_partition, &output_partition);
    let spec = spec.restricted(&omega);
    let edges = wen_edges(&omega, &spec);
    let x_atoms = (0..n).map(|i| vec![Var::new(format!("X{}", i + 1), alphabets[i])]).collect();
    let mut y_atoms = vec![Vec::new(); n];
    for &(i, j) in &edges {
        if j >= n {
            return Err(Error::Model(format!("node {} is outside the network", j + 1)));
        }
        y_atoms[j].push(Var::new(wen_y(i, j), alphabets[i] + 1));
    }
    let shared = edges.iter().map(|&(i, j)| Var::new(wen_e(i, j), 2)).collect();
    let channels = wen_layers(alphabets, &spec, &output_partition, &edges)?;
    LayeredNetwork::new(NetworkParts {
        x_atoms,
        y_atoms,
        shared,
        input_partition,
        output_partition,
        channels,
        sources,
        destinations,
        model: ChannelModel::Wen {
            alphabets: alphabets.to_vec(),
            erasures: spec,
        },
    })
}

/// Product of independent `Bernoulli(ε_{i,j})` over the listed pairs, as
/// atoms `E{i}_{j}`.  Pairs with `ε = 1` are constant 1.
pub fn erasure_pattern_pmf(spec: &ErasureSpec, pairs: &[(usize, usize)]) -> Result<JointPmf> {
    let marginals: Vec<(Var, Vec<f64>)> = pairs
        .iter()
        .map(|&(i, j)| {
            let e = spec.epsilon(i, j);
            (Var::new(wen_e(i, j), 2), vec![1.0 - e, e])
        })
        .collect();
    JointPmf::independent(&marginals)
}

/// Erasure pattern of a wireless erasure network over its `E` atoms.
pub fn network_erasure_pmf(net: &LayeredNetwork) -> Result<JointPmf> {
    let (_, spec, edges) = wen_edges_of(net)?;
    erasure_pattern_pmf(&spec, &edges)
}

/// Broadcast alphabets and erasure map of a wireless erasure network.
pub fn wen_model(net: &LayeredNetwork) -> Result<(&[usize], &ErasureSpec)> {
    match net.model() {
        ChannelModel::Wen { alphabets, erasures } => Ok((alphabets, erasures)),
        other => Err(Error::Class(format!("expected a wireless erasure network, found a {} network", other.name()))),
    }
}

/// Edge channels of a DMC network.
pub fn dmc_model(net: &LayeredNetwork) -> Result<&EdgeChannelSet> {
    match net.model() {
        ChannelModel::Dmc(e) => Ok(e),
        other => Err(Error::Class(format!("expected a network of independent DMCs, found a {} network", other.name()))),
    }
}
