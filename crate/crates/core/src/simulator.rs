//! Block codes on layered networks: exact and Monte Carlo execution, error
//! probability, and the structural oracles.
//!
//! Within each slot variables are generated as `X_{S_1}, Y_{G_1}, ..,
//! X_{S_alpha}, Y_{G_alpha}`.  Exact runs keep the sparse list of reachable
//! trajectories with their probabilities.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::network::{DelayProfile, LayeredNetwork, NetworkParts, NodeSet};
use crate::prob::{decode_index, encode_index, ChannelKernel, JointPmf, Var, DERIVED_TOL, MAX_OUTCOMES};
use crate::random::stream_rng;

/// Largest number of trajectories an exact run will hold.
pub const MAX_TRAJECTORIES: usize = MAX_OUTCOMES;

/// Two-sided 95% normal quantile used for Wilson intervals.
pub const Z95: f64 = 1.959963984540054;

/// Encoder of one node: `slots[k-1]` is the table of `f_{i,k}`.
///
/// The table is indexed by `w * R^L + hist`, where `L = k - b_i`, `R` is the
/// product of the alphabet sizes of the atoms in `reads`, and `hist` is the
/// base-`R` number formed by the read symbols of slots `1..=L` with the most
/// recent slot least significant.  Within one slot the read atoms form a
/// mixed-radix digit in the listed order.  Entries index the tuple `X_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Encoder {
    pub node: usize,
    pub reads: Vec<String>,
    pub slots: Vec<Vec<usize>>,
}

/// Decoder `g_{i,j}` estimating the message of `source` at `destination`.
///
/// Indexed by `w_j * R^n + hist` with the same history convention as
/// [`Encoder`], over all `n` slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decoder {
    pub source: usize,
    pub destination: usize,
    pub reads: Vec<String>,
    pub table: Vec<usize>,
}

/// A `(B, n, M_I)`-code given by lookup tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockCode {
    pub n: usize,
    pub profile: DelayProfile,
    pub message_sizes: Vec<usize>,
    /// One encoder per node, in node order.
    pub encoders: Vec<Encoder>,
    /// One decoder per source-destination pair.
    pub decoders: Vec<Decoder>,
}

fn read_radix(atoms: &[Var], reads: &[String]) -> Result<(Vec<usize>, usize)> {
    let mut sizes = Vec::with_capacity(reads.len());
    for r in reads {
        match atoms.iter().find(|v| &v.name == r) {
            Some(v) => sizes.push(v.size),
            None => return Err(Error::Code(format!("`{r}` is not an output variable of this node"))),
        }
    }
    let radix = sizes.iter().product();
    Ok((sizes, radix))
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .filter(|&v| v <= MAX_OUTCOMES)
        .ok_or(Error::TooLarge {
            outcomes: (base as u128).saturating_pow(exp as u32),
            cap: MAX_OUTCOMES as u128,
        })
}

impl BlockCode {
    /// Validates the code against `net`.  Missing encoders become constant zero.
    pub fn new(
        net: &LayeredNetwork,
        n: usize,
        profile: DelayProfile,
        message_sizes: Vec<usize>,
        encoders: Vec<Encoder>,
        decoders: Vec<Decoder>,
    ) -> Result<Self> {
        let nn = net.n_nodes();
        net.check_feasible(&profile)?;
        if message_sizes.len() != nn {
            return Err(Error::Code(format!("{} message sizes for {nn} nodes", message_sizes.len())));
        }
        for (i, &m) in message_sizes.iter().enumerate() {
            if m == 0 {
                return Err(Error::Code(format!("node {} has an empty message set", i + 1)));
            }
            if m != 1 && !net.sources().contains(i) {
                return Err(Error::Code(format!("node {} is not a source and must have one message", i + 1)));
            }
        }
        let mut by_node: Vec<Option<Encoder>> = vec![None; nn];
        for e in encoders {
            if e.node >= nn {
                return Err(Error::NodeOutOfRange(e.node + 1));
            }
            if by_node[e.node].is_some() {
                return Err(Error::Code(format!("two encoders for node {}", e.node + 1)));
            }
            let i = e.node;
            by_node[i] = Some(e);
        }
        let mut full = Vec::with_capacity(nn);
        for (i, e) in by_node.into_iter().enumerate() {
            let atoms = net.y_atoms(i);
            let e = e.unwrap_or_else(|| Encoder {
                node: i,
                reads: Vec::new(),
                slots: vec![vec![0; message_sizes[i]]; n],
            });
            let (_, radix) = read_radix(&atoms, &e.reads)?;
            if e.slots.len() != n {
                return Err(Error::Code(format!(
                    "encoder of node {} has {} slots, blocklength is {n}",
                    i + 1,
                    e.slots.len()
                )));
            }
            let xs = net.input_alphabet(i);
            for (k, t) in e.slots.iter().enumerate() {
                let len = k + 1 - profile.get(i) as usize;
                let want = message_sizes[i] * checked_pow(radix, len)?;
                if t.len() != want {
                    return Err(Error::Code(format!(
                        "encoder of node {} slot {} has {} entries, expected {want}",
                        i + 1,
                        k + 1,
                        t.len()
                    )));
                }
                if let Some(x) = t.iter().find(|&&x| x >= xs) {
                    return Err(Error::Code(format!(
                        "encoder of node {} slot {} emits {x}, alphabet size is {xs}",
                        i + 1,
                        k + 1
                    )));
                }
            }
            full.push(e);
        }
        let mut seen = HashMap::new();
        for d in &decoders {
            if !net.sources().contains(d.source) || !net.destinations().contains(d.destination) {
                return Err(Error::Code(format!(
                    "decoder ({}, {}) is not a source-destination pair",
                    d.source + 1,
                    d.destination + 1
                )));
            }
            if seen.insert((d.source, d.destination), ()).is_some() {
                return Err(Error::Code(format!(
                    "two decoders for pair ({}, {})",
                    d.source + 1,
                    d.destination + 1
                )));
            }
            let (_, radix) = read_radix(&net.y_atoms(d.destination), &d.reads)?;
            let want = message_sizes[d.destination] * checked_pow(radix, n)?;
            if d.table.len() != want {
                return Err(Error::Code(format!(
                    "decoder ({}, {}) has {} entries, expected {want}",
                    d.source + 1,
                    d.destination + 1,
                    d.table.len()
                )));
            }
            if d.table.iter().any(|&w| w >= message_sizes[d.source]) {
                return Err(Error::Code(format!(
                    "decoder ({}, {}) outputs a message outside 0..{}",
                    d.source + 1,
                    d.destination + 1,
                    message_sizes[d.source]
                )));
            }
        }
        for i in net.sources().iter() {
            for j in net.destinations().iter() {
                if !seen.contains_key(&(i, j)) {
                    return Err(Error::Code(format!("missing decoder for pair ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(Self {
            n,
            profile,
            message_sizes,
            encoders: full,
            decoders,
        })
    }

    /// Rate `log2(M_i) / n` of every node, in bits per slot (zero when `n = 0`).
    pub fn rates(&self) -> Vec<f64> {
        self.message_sizes
            .iter()
            .map(|&m| if self.n == 0 { 0.0 } else { (m as f64).log2() / self.n as f64 })
            .collect()
    }
}

#[derive(Debug, Clone)]
enum Step {
    Encode {
        node: usize,
        slot: usize,
        w_pos: usize,
        x_pos: Vec<usize>,
        x_sizes: Vec<usize>,
        // positions of read atoms, per history slot, oldest first
        hist: Vec<Vec<usize>>,
        read_sizes: Vec<usize>,
        radix: usize,
    },
    Channel {
        layer: usize,
        in_pos: Vec<usize>,
        in_sizes: Vec<usize>,
        out_start: usize,
        out_sizes: Vec<usize>,
    },
}

/// Generation-ordered layout of one trajectory.
#[derive(Debug, Clone)]
struct Plan {
    layout: Vec<Var>,
    index: HashMap<String, usize>,
    steps: Vec<Step>,
    /// First layout position of each slot (index `n` is the layout length).
    slot_start: Vec<usize>,
}

fn slot_name(atom: &str, k: usize) -> String {
    format!("{atom}@{k}")
}

impl Plan {
    fn new(net: &LayeredNetwork, code: &BlockCode) -> Result<Self> {
        let nn = net.n_nodes();
        let mut layout: Vec<Var> = (0..nn)
            .map(|i| Var::new(format!("W{}", i + 1), code.message_sizes[i]))
            .collect();
        let mut steps = Vec::new();
        let mut slot_start = Vec::with_capacity(code.n + 1);
        let mut index: HashMap<String, usize> =
            layout.iter().enumerate().map(|(p, v)| (v.name.clone(), p)).collect();
        for k in 1..=code.n {
            slot_start.push(layout.len());
            for h in 1..=net.alpha() {
                for i in net.s(h).iter() {
                    let atoms = net.x_atoms(i);
                    let start = layout.len();
                    let mut x_pos = Vec::new();
                    for a in atoms {
                        let name = slot_name(&a.name, k);
                        index.insert(name.clone(), layout.len());
                        x_pos.push(layout.len());
                        layout.push(Var::new(name, a.size));
                    }
                    let enc = &code.encoders[i];
                    let (read_sizes, radix) = read_radix(&net.y_atoms(i), &enc.reads)?;
                    let len = k - code.profile.get(i) as usize;
                    let mut hist = Vec::with_capacity(len);
                    for t in 1..=len {
                        let mut ps = Vec::with_capacity(enc.reads.len());
                        for r in &enc.reads {
                            match index.get(&slot_name(r, t)) {
                                Some(&p) if p < start => ps.push(p),
                                _ => {
                                    return Err(Error::Code(format!(
                                        "scheduling: node {} would read {r} of slot {t} before it is generated",
                                        i + 1
                                    )))
                                }
                            }
                        }
                        hist.push(ps);
                    }
                    steps.push(Step::Encode {
                        node: i,
                        slot: k,
                        w_pos: i,
                        x_pos,
                        x_sizes: atoms.iter().map(|v| v.size).collect(),
                        hist,
                        read_sizes,
                        radix,
                    });
                }
                let kern = net.channel(h);
                let mut in_pos = Vec::new();
                for v in kern.inputs() {
                    match index.get(&slot_name(&v.name, k)) {
                        Some(&p) => in_pos.push(p),
                        None => {
                            return Err(Error::Code(format!(
                                "scheduling: layer {h} reads {} before it is generated",
                                v.name
                            )))
                        }
                    }
                }
                let out_start = layout.len();
                for v in kern.outputs() {
                    let name = slot_name(&v.name, k);
                    index.insert(name.clone(), layout.len());
                    layout.push(Var::new(name, v.size));
                }
                steps.push(Step::Channel {
                    layer: h,
                    in_pos,
                    in_sizes: kern.input_sizes(),
                    out_start,
                    out_sizes: kern.output_sizes(),
                });
            }
        }
        slot_start.push(layout.len());
        if layout.iter().any(|v| v.size > u16::MAX as usize) {
            return Err(Error::Code("alphabets above 65535 symbols are not supported".into()));
        }
        Ok(Self {
            layout,
            index,
            steps,
            slot_start,
        })
    }

    fn history_index(&self, values: &[u16], hist: &[Vec<usize>], read_sizes: &[usize], radix: usize) -> usize {
        let mut idx = 0usize;
        let mut d = vec![0usize; read_sizes.len()];
        for ps in hist {
            for (k, &p) in ps.iter().enumerate() {
                d[k] = values[p] as usize;
            }
            idx = idx * radix + encode_index(&d, read_sizes);
        }
        idx
    }

    fn encode(&self, code: &BlockCode, step: &Step, values: &mut [u16]) {
        if let Step::Encode {
            node,
            slot,
            w_pos,
            x_pos,
            x_sizes,
            hist,
            read_sizes,
            radix,
        } = step
        {
            let h = self.history_index(values, hist, read_sizes, *radix);
            let table = &code.encoders[*node].slots[slot - 1];
            let entries_per_message = table.len() / code.message_sizes[*node];
            let x = table[values[*w_pos] as usize * entries_per_message + h];
            let mut d = vec![0usize; x_sizes.len()];
            decode_index(x, x_sizes, &mut d);
            for (p, v) in x_pos.iter().zip(d) {
                values[*p] = v as u16;
            }
        }
    }
}

fn channel_row(values: &[u16], in_pos: &[usize], in_sizes: &[usize]) -> usize {
    in_pos
        .iter()
        .zip(in_sizes)
        .fold(0usize, |acc, (&p, &s)| acc * s + values[p] as usize)
}

/// Distribution of trajectories `(W_I, X_I^n, Y_I^n)`.
#[derive(Debug, Clone)]
pub struct TrajectoryDistribution {
    plan: Plan,
    /// Exact support with probabilities, or Monte Carlo samples with weight `1/N`.
    pub support: Vec<(Vec<u16>, f64)>,
    pub exact: bool,
    pub seed: Option<u64>,
    n: usize,
}

impl TrajectoryDistribution {
    /// Trajectory variables in generation order (`W{i}` then `{atom}@{slot}`).
    pub fn layout(&self) -> &[Var] {
        &self.plan.layout
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.plan.index.get(name).copied()
    }

    pub fn blocklength(&self) -> usize {
        self.n
    }

    /// Dense joint over all trajectory variables, when it fits the cap.
    pub fn to_joint_pmf(&self) -> Result<JointPmf> {
        let sizes: Vec<usize> = self.plan.layout.iter().map(|v| v.size).collect();
        let total = sizes.iter().try_fold(1usize, |a, &s| a.checked_mul(s).filter(|&t| t <= MAX_OUTCOMES));
        let total = total.ok_or(Error::TooLarge {
            outcomes: sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128)),
            cap: MAX_OUTCOMES as u128,
        })?;
        let mut w = vec![0.0; total];
        let mut d = vec![0usize; sizes.len()];
        for (v, p) in &self.support {
            for (k, x) in v.iter().enumerate() {
                d[k] = *x as usize;
            }
            w[encode_index(&d, &sizes)] += p;
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        JointPmf::new(self.plan.layout.clone(), w)
    }
}

/// How [`run_code`] executes the code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

fn initial_states(plan: &Plan, code: &BlockCode) -> Result<Vec<(Vec<u16>, f64)>> {
    let total: usize = code.message_sizes.iter().product();
    if total > MAX_TRAJECTORIES {
        return Err(Error::TooLarge {
            outcomes: total as u128,
            cap: MAX_TRAJECTORIES as u128,
        });
    }
    let p = 1.0 / total as f64;
    let mut d = vec![0usize; code.message_sizes.len()];
    Ok((0..total)
        .map(|m| {
            decode_index(m, &code.message_sizes, &mut d);
            let mut v = vec![0u16; plan.layout.len()];
            for (i, &x) in d.iter().enumerate() {
                v[i] = x as u16;
            }
            (v, p)
        })
        .collect())
}

/// Runs `code` on `net`, exactly or by sampling.
pub fn run_code(net: &LayeredNetwork, code: &BlockCode, mode: RunMode) -> Result<TrajectoryDistribution> {
    net.check_feasible(&code.profile)?;
    let plan = Plan::new(net, code)?;
    match mode {
        RunMode::Exact => {
            let mut states = initial_states(&plan, code)?;
            for step in &plan.steps {
                match step {
                    Step::Encode { .. } => {
                        for (v, _) in states.iter_mut() {
                            plan.encode(code, step, v);
                        }
                    }
                    Step::Channel {
                        layer,
                        in_pos,
                        in_sizes,
                        out_start,
                        out_sizes,
                    } => {
                        let kern = net.channel(*layer);
                        let mut next = Vec::with_capacity(states.len());
                        let mut d = vec![0usize; out_sizes.len()];
                        for (v, p) in states {
                            let row = kern.row(channel_row(&v, in_pos, in_sizes));
                            let branches = row.iter().filter(|&&q| q > 0.0).count();
                            let mut left = branches;
                            let mut v = Some(v);
                            for (c, &q) in row.iter().enumerate() {
                                if q <= 0.0 {
                                    continue;
                                }
                                left -= 1;
                                let mut w = if left == 0 { v.take().unwrap() } else { v.as_ref().unwrap().clone() };
                                decode_index(c, out_sizes, &mut d);
                                for (k, &x) in d.iter().enumerate() {
                                    w[out_start + k] = x as u16;
                                }
                                next.push((w, p * q));
                            }
                            if next.len() > MAX_TRAJECTORIES {
                                return Err(Error::TooLarge {
                                    outcomes: next.len() as u128,
                                    cap: MAX_TRAJECTORIES as u128,
                                });
                            }
                        }
                        states = next;
                    }
                }
            }
            Ok(TrajectoryDistribution {
                plan,
                support: states,
                exact: true,
                seed: None,
                n: code.n,
            })
        }
        RunMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::Argument("Monte Carlo needs at least one sample".into()));
            }
            const CHUNK: usize = 4096;
            let chunks = samples.div_ceil(CHUNK);
            let w = 1.0 / samples as f64;
            let support: Vec<(Vec<u16>, f64)> = (0..chunks)
                .into_par_iter()
                .flat_map_iter(|c| {
                    let mut rng = stream_rng(seed, c as u64);
                    let count = CHUNK.min(samples - c * CHUNK);
                    (0..count)
                        .map(|_| (sample_one(net, code, &plan, &mut rng), w))
                        .collect::<Vec<_>>()
                })
                .collect();
            Ok(TrajectoryDistribution {
                plan,
                support,
                exact: false,
                seed: Some(seed),
                n: code.n,
            })
        }
    }
}

fn sample_one<R: Rng>(net: &LayeredNetwork, code: &BlockCode, plan: &Plan, rng: &mut R) -> Vec<u16> {
    let mut v = vec![0u16; plan.layout.len()];
    for (i, &m) in code.message_sizes.iter().enumerate() {
        v[i] = rng.gen_range(0..m) as u16;
    }
    let mut d = Vec::new();
    for step in &plan.steps {
        match step {
            Step::Encode { .. } => plan.encode(code, step, &mut v),
            Step::Channel {
                layer,
                in_pos,
                in_sizes,
                out_start,
                out_sizes,
            } => {
                let row = net.channel(*layer).row(channel_row(&v, in_pos, in_sizes));
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut pick = row.iter().rposition(|&q| q > 0.0).unwrap_or(0);
                for (c, &q) in row.iter().enumerate() {
                    acc += q;
                    if u < acc && q > 0.0 {
                        pick = c;
                        break;
                    }
                }
                d.resize(out_sizes.len(), 0);
                decode_index(pick, out_sizes, &mut d);
                for (k, &x) in d.iter().enumerate() {
                    v[out_start + k] = x as u16;
                }
            }
        }
    }
    v
}

/// Error probability, exact or estimated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub probability: f64,
    pub exact: bool,
    /// Wilson 95% interval (Monte Carlo only).
    pub interval: Option<(f64, f64)>,
    pub samples: Option<usize>,
    pub errors: Option<usize>,
}

/// Wilson score interval for `errors` successes in `n` trials.
pub fn wilson_interval(errors: usize, n: usize, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let p = errors as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

fn decoder_plan(traj: &TrajectoryDistribution, net: &LayeredNetwork, d: &Decoder) -> Result<(Vec<Vec<usize>>, Vec<usize>, usize)> {
    let (sizes, radix) = read_radix(&net.y_atoms(d.destination), &d.reads)?;
    let mut hist = Vec::with_capacity(traj.n);
    for t in 1..=traj.n {
        let mut ps = Vec::with_capacity(d.reads.len());
        for r in &d.reads {
            ps.push(
                traj.position(&slot_name(r, t))
                    .ok_or_else(|| Error::Code(format!("trajectory has no variable {r}@{t}")))?,
            );
        }
        hist.push(ps);
    }
    Ok((hist, sizes, radix))
}

/// True iff some decoder errs on this trajectory.
fn decoding_fails(traj: &TrajectoryDistribution, code: &BlockCode, plans: &[(Vec<Vec<usize>>, Vec<usize>, usize)], v: &[u16]) -> bool {
    code.decoders.iter().zip(plans).any(|(d, (hist, sizes, radix))| {
        let h = traj.plan.history_index(v, hist, sizes, *radix);
        let per = d.table.len() / code.message_sizes[d.destination];
        let est = d.table[v[d.destination] as usize * per + h];
        est != v[d.source] as usize
    })
}

/// `Pr{∪_{(i,j)} ŵ_{i,j} ≠ W_i}`.
pub fn error_probability(net: &LayeredNetwork, traj: &TrajectoryDistribution, code: &BlockCode) -> Result<ErrorEstimate> {
    if traj.n != code.n || traj.plan.layout.len() < net.n_nodes() {
        return Err(Error::Code("trajectory does not match the code".into()));
    }
    for (i, &m) in code.message_sizes.iter().enumerate() {
        if traj.plan.layout[i].size != m {
            return Err(Error::Code("trajectory does not match the code".into()));
        }
    }
    let plans = code
        .decoders
        .iter()
        .map(|d| decoder_plan(traj, net, d))
        .collect::<Result<Vec<_>>>()?;
    if traj.exact {
        let p: f64 = traj
            .support
            .iter()
            .filter(|(v, _)| decoding_fails(traj, code, &plans, v))
            .map(|(_, p)| p)
            .sum();
        Ok(ErrorEstimate {
            probability: (p + 0.0).clamp(0.0, 1.0),
            exact: true,
            interval: None,
            samples: None,
            errors: None,
        })
    } else {
        let n = traj.support.len();
        let errors = traj
            .support
            .iter()
            .filter(|(v, _)| decoding_fails(traj, code, &plans, v))
            .count();
        Ok(ErrorEstimate {
            probability: errors as f64 / n as f64,
            exact: false,
            interval: Some(wilson_interval(errors, n, Z95)),
            samples: Some(n),
            errors: Some(errors),
        })
    }
}

fn entropy_of(weights: impl Iterator<Item = f64>) -> f64 {
    weights.filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum()
}

/// `H(X_I^n, Y_I^n | W_I)` of an exact trajectory distribution.
pub fn trajectory_entropy_given_messages(traj: &TrajectoryDistribution) -> Result<f64> {
    if !traj.exact {
        return Err(Error::Argument("entropy needs an exact trajectory distribution".into()));
    }
    let nn = traj.plan.slot_start.first().copied().unwrap_or(traj.plan.layout.len());
    let mut full: HashMap<&[u16], f64> = HashMap::new();
    let mut msgs: HashMap<&[u16], f64> = HashMap::new();
    for (v, p) in &traj.support {
        *full.entry(v.as_slice()).or_default() += p;
        *msgs.entry(&v[..nn]).or_default() += p;
    }
    let h = entropy_of(full.into_values()) - entropy_of(msgs.into_values());
    crate::prob::clamp_info(h)
}

/// True iff `H(X_I^n, Y_I^n | W_I) <= 1e-9` under the exact execution of `code`.
///
/// Deterministic networks always pass; the check is meaningful on any
/// network, so noisy networks are accepted and normally fail.
pub fn deterministic_trajectory_check(net: &LayeredNetwork, code: &BlockCode) -> Result<bool> {
    let traj = run_code(net, code, RunMode::Exact)?;
    Ok(trajectory_entropy_given_messages(&traj)? <= DERIVED_TOL)
}

/// Single-layer network whose channel applies every layer in order.
pub fn collapse(net: &LayeredNetwork) -> Result<LayeredNetwork> {
    let mut k = net.channel(1).clone();
    for h in 2..=net.alpha() {
        k = k.chain(net.channel(h))?;
    }
    let p = net.parts();
    let all = net.all_nodes();
    LayeredNetwork::new(NetworkParts {
        x_atoms: p.x_atoms.clone(),
        y_atoms: p.y_atoms.clone(),
        shared: p.shared.clone(),
        input_partition: vec![all],
        output_partition: vec![all],
        channels: vec![k],
        sources: p.sources,
        destinations: p.destinations,
        model: p.model.clone(),
    })
}

fn require_deterministic(net: &LayeredNetwork) -> Result<()> {
    for h in 1..=net.alpha() {
        let k = net.channel(h);
        if let Some(r) = k
            .table()
            .chunks(k.cols())
            .position(|row| !row.iter().any(|&w| w >= 1.0 - DERIVED_TOL))
        {
            return Err(Error::Class(format!(
                "layer {h} channel is not deterministic (row {r} has no unit entry)"
            )));
        }
    }
    Ok(())
}

fn slot_positions(traj: &TrajectoryDistribution, atoms: &[Var], k: usize) -> Result<Vec<usize>> {
    atoms
        .iter()
        .map(|v| {
            traj.position(&slot_name(&v.name, k))
                .ok_or_else(|| Error::Code(format!("trajectory has no variable {}@{k}", v.name)))
        })
        .collect()
}

/// Largest total-variation distance over slots `k` between the law of
/// `(U^{k-1}, X_k, Y_k)` under the layered execution and the law obtained by
/// drawing `Y_k` from the collapsed channel given `(U^{k-1}, X_k)`.
pub fn equivalence_oracle(net: &LayeredNetwork, code: &BlockCode) -> Result<f64> {
    require_deterministic(net)?;
    let traj = run_code(net, code, RunMode::Exact)?;
    collapsed_distance(net, &traj)
}

fn collapsed_distance(net: &LayeredNetwork, traj: &TrajectoryDistribution) -> Result<f64> {
    let collapsed = collapse(net)?;
    let kern = collapsed.channel(1);
    let mut worst: f64 = 0.0;
    for k in 1..=traj.n {
        let prefix = traj.plan.slot_start[k - 1];
        let x_pos = slot_positions(traj, kern.inputs(), k)?;
        let y_pos = slot_positions(traj, kern.outputs(), k)?;
        let in_sizes = kern.input_sizes();
        let out_sizes = kern.output_sizes();
        let mut layered: HashMap<Vec<u16>, f64> = HashMap::new();
        let mut ux: HashMap<Vec<u16>, f64> = HashMap::new();
        for (v, p) in &traj.support {
            let mut key: Vec<u16> = v[..prefix].to_vec();
            // every X atom of the slot, read or not, belongs to U
            let xs_all: Vec<u16> = net
                .x_vars(net.all_nodes())
                .iter()
                .map(|a| v[traj.position(&slot_name(&a.name, k)).unwrap()])
                .collect();
            key.extend(&xs_all);
            key.extend(x_pos.iter().map(|&q| v[q]));
            *ux.entry(key.clone()).or_default() += p;
            key.extend(y_pos.iter().map(|&q| v[q]));
            *layered.entry(key).or_default() += p;
        }
        let mut product: HashMap<Vec<u16>, f64> = HashMap::new();
        let mut d = vec![0usize; out_sizes.len()];
        let nx = x_pos.len();
        for (key, p) in &ux {
            let xs = &key[key.len() - nx..];
            let r = xs.iter().zip(&in_sizes).fold(0usize, |a, (&x, &s)| a * s + x as usize);
            for (c, &q) in kern.row(r).iter().enumerate() {
                if q > 0.0 {
                    decode_index(c, &out_sizes, &mut d);
                    let mut full = key.clone();
                    full.extend(d.iter().map(|&x| x as u16));
                    *product.entry(full).or_default() += p * q;
                }
            }
        }
        let mut tv = 0.0;
        for (key, p) in &layered {
            tv += (p - product.get(key).copied().unwrap_or(0.0)).abs();
        }
        for (key, p) in &product {
            if !layered.contains_key(key) {
                tv += p;
            }
        }
        worst = worst.max(0.5 * tv);
    }
    Ok(worst)
}

/// Largest `|Pr{X_{I,k}=x, E_k=e} - Pr{X_{I,k}=x} Pr{E_k=e}|` at slot `k` (1-based).
pub fn independence_check(net: &LayeredNetwork, traj: &TrajectoryDistribution, k: usize) -> Result<f64> {
    if !matches!(net.model(), crate::network::ChannelModel::Wen { .. }) {
        return Err(Error::Class("independence check needs a wireless erasure network trajectory".into()));
    }
    if !traj.exact {
        return Err(Error::Argument("independence check needs an exact trajectory distribution".into()));
    }
    if k == 0 || k > traj.n {
        return Err(Error::Argument(format!("slot {k} outside 1..={}", traj.n)));
    }
    let x_pos = slot_positions(traj, &net.x_vars(net.all_nodes()), k)?;
    let e_pos = slot_positions(traj, net.shared_atoms(), k)?;
    let mut joint: HashMap<(Vec<u16>, Vec<u16>), f64> = HashMap::new();
    let mut px: HashMap<Vec<u16>, f64> = HashMap::new();
    let mut pe: HashMap<Vec<u16>, f64> = HashMap::new();
    for (v, p) in &traj.support {
        let x: Vec<u16> = x_pos.iter().map(|&q| v[q]).collect();
        let e: Vec<u16> = e_pos.iter().map(|&q| v[q]).collect();
        *px.entry(x.clone()).or_default() += p;
        *pe.entry(e.clone()).or_default() += p;
        *joint.entry((x, e)).or_default() += p;
    }
    let mut worst: f64 = 0.0;
    for (x, a) in &px {
        for (e, b) in &pe {
            let j = joint.get(&(x.clone(), e.clone())).copied().unwrap_or(0.0);
            worst = worst.max((j - a * b).abs());
        }
    }
    Ok(worst)
}

/// Re-derives the conditional law of every layer output given everything
/// generated before it and returns the largest deviation from the channel.
pub fn scheduling_check(net: &LayeredNetwork, traj: &TrajectoryDistribution) -> Result<f64> {
    if !traj.exact {
        return Err(Error::Argument("scheduling check needs an exact trajectory distribution".into()));
    }
    let mut worst: f64 = 0.0;
    for step in &traj.plan.steps {
        if let Step::Channel {
            layer,
            in_pos,
            in_sizes,
            out_start,
            out_sizes,
        } = step
        {
            let kern = net.channel(*layer);
            let n_out = out_sizes.len();
            let mut groups: HashMap<&[u16], (f64, HashMap<usize, f64>)> = HashMap::new();
            for (v, p) in &traj.support {
                let g = groups.entry(&v[..*out_start]).or_default();
                g.0 += p;
                let c = v[*out_start..out_start + n_out]
                    .iter()
                    .zip(out_sizes)
                    .fold(0usize, |a, (&x, &s)| a * s + x as usize);
                *g.1.entry(c).or_default() += p;
            }
            for (prefix, (total, cols)) in &groups {
                if *total <= 0.0 {
                    continue;
                }
                let row = kern.row(channel_row(prefix, in_pos, in_sizes));
                for (c, &q) in row.iter().enumerate() {
                    let got = cols.get(&c).copied().unwrap_or(0.0) / total;
                    worst = worst.max((got - q).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Nodes whose encoders read at least one output symbol.
pub fn adaptive_nodes(code: &BlockCode) -> NodeSet {
    NodeSet::from_nodes(code.encoders.iter().filter(|e| !e.reads.is_empty()).map(|e| e.node))
}

/// Builds a code whose encoder and decoder tables come from closures.
///
/// `encoder(i, k, w, history)` receives the history as one symbol per past
/// slot (oldest first), each symbol the mixed-radix tuple of the read atoms.
/// `decoder(i, j, w_j, history)` does the same over all `n` slots.
#[allow(clippy::too_many_arguments)]
pub fn code_from_fns<E, D>(
    net: &LayeredNetwork,
    n: usize,
    profile: DelayProfile,
    message_sizes: Vec<usize>,
    encoder_reads: Vec<Vec<String>>,
    decoder_reads: Vec<Vec<String>>,
    encoder: E,
    decoder: D,
) -> Result<BlockCode>
where
    E: Fn(usize, usize, usize, &[usize]) -> usize,
    D: Fn(usize, usize, usize, &[usize]) -> usize,
{
    let nn = net.n_nodes();
    let mut encoders = Vec::with_capacity(nn);
    for i in 0..nn {
        let reads = encoder_reads.get(i).cloned().unwrap_or_default();
        let (_, radix) = read_radix(&net.y_atoms(i), &reads)?;
        let mut slots = Vec::with_capacity(n);
        for k in 1..=n {
            let len = k - profile.get(i) as usize;
            let per = checked_pow(radix, len)?;
            let mut table = Vec::with_capacity(message_sizes[i] * per);
            let mut hist = vec![0usize; len];
            let sizes = vec![radix; len];
            for w in 0..message_sizes[i] {
                for h in 0..per {
                    decode_index(h, &sizes, &mut hist);
                    table.push(encoder(i, k, w, &hist));
                }
            }
            slots.push(table);
        }
        encoders.push(Encoder { node: i, reads, slots });
    }
    let mut decoders = Vec::new();
    let dests: Vec<usize> = net.destinations().iter().collect();
    for i in net.sources().iter() {
        for (di, &j) in dests.iter().enumerate() {
            let reads = decoder_reads.get(di).cloned().unwrap_or_default();
            let (_, radix) = read_radix(&net.y_atoms(j), &reads)?;
            let per = checked_pow(radix, n)?;
            let sizes = vec![radix; n];
            let mut hist = vec![0usize; n];
            let mut table = Vec::with_capacity(message_sizes[j] * per);
            for w in 0..message_sizes[j] {
                for h in 0..per {
                    decode_index(h, &sizes, &mut hist);
                    table.push(decoder(i, j, w, &hist));
                }
            }
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

/// Single-output helper for encoder/decoder closures: splits a read symbol
/// into its atom digits.
pub fn split_symbol(symbol: usize, sizes: &[usize]) -> Vec<usize> {
    let mut d = vec![0usize; sizes.len()];
    decode_index(symbol, sizes, &mut d);
    d
}

/// Noisy copy of a network where layer `h` passes its binary outputs through BSC(`eps`).
pub fn with_noisy_layer(net: &LayeredNetwork, h: usize, eps: f64) -> Result<LayeredNetwork> {
    let k: ChannelKernel = crate::random::noisy_variant(net.channel(h), eps)?;
    net.with_channel(h, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    /// Node 1 sends its bit, the relay stays silent, the destination reads `Y3`.
    pub(crate) fn fig2_code(net: &LayeredNetwork) -> BlockCode {
        code_from_fns(
            net,
            1,
            DelayProfile::new(vec![1, 0, 1]).unwrap(),
            vec![2, 1, 1],
            vec![vec![], vec!["Y2".into()], vec![]],
            vec![vec!["Y3".into()]],
            |i, _, w, _| if i == 0 { w } else { 0 },
            |_, _, _, h| h[0],
        )
        .unwrap()
    }

    #[test]
    fn figure2_relay_code_is_error_free() {
        let net = examples::figure2();
        let code = fig2_code(&net);
        let traj = run_code(&net, &code, RunMode::Exact).unwrap();
        assert_eq!(traj.support.len(), 2);
        let e = error_probability(&net, &traj, &code).unwrap();
        assert_eq!(e.probability, 0.0);
        assert_eq!(code.rates()[0], 1.0);
        assert!(deterministic_trajectory_check(&net, &code).unwrap());
        assert!(equivalence_oracle(&net, &code).unwrap() <= 1e-12);
        assert!(scheduling_check(&net, &traj).unwrap() <= 1e-12);
    }

    #[test]
    fn ignoring_decoder_errs_half_the_time() {
        let net = examples::figure2();
        let code = code_from_fns(
            &net,
            1,
            DelayProfile::all_ones(3),
            vec![2, 1, 1],
            vec![],
            vec![],
            |i, _, w, _| if i == 0 { w } else { 0 },
            |_, _, _, _| 1,
        )
        .unwrap();
        let traj = run_code(&net, &code, RunMode::Exact).unwrap();
        assert!((error_probability(&net, &traj, &code).unwrap().probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noisy_layer_breaks_message_determinism() {
        let net = examples::figure2();
        let code = fig2_code(&net);
        let noisy = with_noisy_layer(&net, 2, 0.1).unwrap();
        assert!(!deterministic_trajectory_check(&noisy, &code).unwrap());
        assert!(matches!(equivalence_oracle(&noisy, &code), Err(Error::Class(_))));
    }

    #[test]
    fn zero_blocklength_is_a_point_mass_per_message() {
        let net = examples::figure2();
        let code = code_from_fns(
            &net,
            0,
            DelayProfile::all_ones(3),
            vec![2, 1, 1],
            vec![],
            vec![],
            |_, _, _, _| 0,
            |_, _, _, _| 0,
        )
        .unwrap();
        assert!(deterministic_trajectory_check(&net, &code).unwrap());
        let traj = run_code(&net, &code, RunMode::Exact).unwrap();
        assert_eq!(traj.layout().len(), 3);
    }

    #[test]
    fn constant_encoders_give_channel_marginal() {
        let net = examples::figure3(0.2);
        let code = code_from_fns(
            &net,
            1,
            DelayProfile::all_ones(3),
            vec![1, 1, 1],
            vec![],
            vec![],
            |_, _, _, _| 0,
            |_, _, _, _| 0,
        )
        .unwrap();
        let traj = run_code(&net, &code, RunMode::Exact).unwrap();
        let joint = traj.to_joint_pmf().unwrap();
        let y = joint.marginal(&["Y1_2@1"]).unwrap();
        assert!((y.weights()[1] - 0.2).abs() < 1e-12);
        assert!(scheduling_check(&net, &traj).unwrap() < 1e-12);
    }

    #[test]
    fn infeasible_profile_is_rejected() {
        let net = examples::figure2();
        let r = code_from_fns(
            &net,
            1,
            DelayProfile::new(vec![0, 1, 1]).unwrap(),
            vec![2, 1, 1],
            vec![],
            vec![],
            |_, _, _, _| 0,
            |_, _, _, _| 0,
        );
        assert!(matches!(r, Err(Error::Infeasible { node: 1, .. })));
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 1000, Z95);
        assert!(lo < 0.03 && 0.03 < hi);
        let (lo, hi) = wilson_interval(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn wen_erasures_are_independent_of_inputs() {
        let net = examples::figure4(0.5);
        // Node 2 repeats whatever it last heard from node 1, including erasures as 0.
        let code = code_from_fns(
            &net,
            2,
            DelayProfile::all_ones(3),
            vec![2, 1, 1],
            vec![vec![], vec!["Y1_2".into()], vec![]],
            vec![vec!["Y1_3".into()]],
            |i, _, w, h| match i {
                0 => w,
                1 => h.last().map_or(0, |&y| usize::from(y == 1)),
                _ => 0,
            },
            |_, _, _, h| usize::from(h[0] == 1),
        )
        .unwrap();
        let traj = run_code(&net, &code, RunMode::Exact).unwrap();
        for k in 1..=2 {
            assert!(independence_check(&net, &traj, k).unwrap() <= 1e-12);
        }
        assert!(matches!(
            independence_check(&examples::figure2(), &traj, 1),
            Err(Error::Class(_))
        ));
    }
}
