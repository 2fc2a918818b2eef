//! Cut values and rate regions.
//!
//! A [`CutRegion`] is the polyhedron `{R >= 0 : Σ_{i∈T} R_i <= c(T) for every
//! cut T, R_i = 0 off the sources}`.  Unions of such regions over input
//! distributions are only queried in scalarized form (maximize `w·R`).

use std::collections::BTreeMap;

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{blahut_arimoto, dmc_model, wen_model, Capacity, EdgeChannelSet, ErasureSpec};
use crate::error::{Error, Result};
use crate::network::{LayeredNetwork, NodeSet};
use crate::prob::{decode_index, encode_index, factorize_joint, product_input_joint, JointPmf, Pmf, DERIVED_TOL};
use crate::random::{dirichlet, random_policies, stream_rng};

/// Largest broadcast alphabet for exact computations on erasure networks.
pub const WEN_EXACT_ALPHABET_CAP: usize = 8;

/// Largest joint input alphabet explored by the dominance falsifier.
pub const FALSIFIER_MAX_INPUTS: usize = 1 << 12;

/// One bound `c(T)` per cut.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutRegion {
    pub n_nodes: usize,
    pub sources: NodeSet,
    pub bounds: Vec<(NodeSet, f64)>,
}

impl CutRegion {
    pub fn bound(&self, t: NodeSet) -> Option<f64> {
        self.bounds.iter().find(|(c, _)| *c == t).map(|(_, v)| *v)
    }

    /// True iff `rates` (one per node) lies in the region within `tol`.
    pub fn contains(&self, rates: &[f64], tol: f64) -> bool {
        if rates.len() != self.n_nodes {
            return false;
        }
        for (i, &r) in rates.iter().enumerate() {
            if r < -tol || (!self.sources.contains(i) && r.abs() > tol) {
                return false;
            }
        }
        self.bounds
            .iter()
            .all(|(t, c)| t.iter().map(|i| rates[i]).sum::<f64>() <= c + tol)
    }

    /// Maximizes `w·R` over the region; returns the value and a maximizer.
    ///
    /// The value is infinite when some source is constrained by no cut.
    pub fn max_weighted(&self, w: &[f64]) -> Result<(f64, Vec<f64>)> {
        if w.len() != self.n_nodes {
            return Err(Error::Argument(format!(
                "{} weights for {} nodes",
                w.len(),
                self.n_nodes
            )));
        }
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<_> = (0..self.n_nodes)
            .map(|i| {
                let hi = if self.sources.contains(i) { f64::INFINITY } else { 0.0 };
                lp.add_var(w[i], (0.0, hi))
            })
            .collect();
        for (t, c) in &self.bounds {
            let members: Vec<usize> = t.intersect(self.sources).iter().collect();
            if members.is_empty() {
                continue;
            }
            let mut e = LinearExpr::empty();
            for i in members {
                e.add(vars[i], 1.0);
            }
            lp.add_constraint(e, ComparisonOp::Le, c.max(0.0));
        }
        match lp.solve() {
            Ok(sol) => {
                let rates = vars.iter().map(|v| sol[*v].max(0.0)).collect();
                Ok((sol.objective(), rates))
            }
            Err(minilp::Error::Unbounded) => Ok((f64::INFINITY, Vec::new())),
            Err(e) => Err(Error::Numerical(format!("linear program failed: {e}"))),
        }
    }
}

/// A family of cut regions indexed by an input-distribution parameter.
pub trait RegionFamily: Sync {
    type Param;
    fn region(&self, param: &Self::Param) -> Result<CutRegion>;
}

/// Deterministic-network regions `c(T) = H(Y_{T^c} | X_{T^c})` at product inputs.
pub struct DetProductFamily<'a> {
    pub net: &'a LayeredNetwork,
    cuts: Vec<NodeSet>,
}

impl<'a> DetProductFamily<'a> {
    pub fn new(net: &'a LayeredNetwork) -> Result<Self> {
        require_deterministic(net)?;
        Ok(Self { net, cuts: net.cuts()? })
    }
}

impl RegionFamily for DetProductFamily<'_> {
    type Param = Vec<Pmf>;

    fn region(&self, marginals: &Vec<Pmf>) -> Result<CutRegion> {
        let p = product_input_joint(self.net, marginals)?;
        let bounds = self
            .cuts
            .iter()
            .map(|&t| Ok((t, det_cut_value(self.net, &p, t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CutRegion {
            n_nodes: self.net.n_nodes(),
            sources: self.net.sources(),
            bounds,
        })
    }
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

/// `I(X_T; Y_{T^c} | X_{T^c}) - H(Y_T | X_I, Y_{T^c})`, clamped at zero.
pub fn nnc_cut_value(net: &LayeredNetwork, p: &JointPmf, t: NodeSet) -> Result<f64> {
    let tc = t.complement(net.n_nodes());
    let a = p.mutual_info_overlapping(&net.x_names(t), &net.y_names(tc), &net.x_names(tc))?;
    let mut given = net.x_names(net.all_nodes());
    given.extend(net.y_names(tc));
    let b = p.entropy_overlapping(&net.y_names(t), &given)?;
    Ok((a - b).max(0.0))
}

/// `H(Y_{T^c} | X_{T^c})`.
pub fn det_cut_value(net: &LayeredNetwork, p: &JointPmf, t: NodeSet) -> Result<f64> {
    let tc = t.complement(net.n_nodes());
    p.entropy_overlapping(&net.y_names(tc), &net.x_names(tc))
}

/// Layered cut-set value
/// `Σ_h I(X_{T∩S^h}, Y_{T∩G^{h-1}}; Y_{T^c∩G_h} | X_{T^c∩S^h}, Y_{T^c∩G^{h-1}} [, E])`.
pub fn cutset_cut_value(p: &JointPmf, net: &LayeredNetwork, t: NodeSet, condition_on_e: bool) -> Result<f64> {
    let e = if condition_on_e {
        wen_model(net).map_err(|_| Error::Class("conditioning on the erasure pattern needs a wireless erasure network".into()))?;
        net.shared_names()
    } else {
        Vec::new()
    };
    if let Some(name) = e.iter().find(|v| !p.has_var(v)) {
        return Err(Error::UnknownVariable(name.clone()));
    }
    let n = net.n_nodes();
    let tc = t.complement(n);
    let mut total = 0.0;
    for h in 1..=net.alpha() {
        let sh = net.s_upto(h);
        let gp = net.g_upto(h - 1);
        let mut a = net.x_names(t.intersect(sh));
        a.extend(net.y_names(t.intersect(gp)));
        let b = net.y_names(tc.intersect(net.g(h)));
        let mut c = net.x_names(tc.intersect(sh));
        c.extend(net.y_names(tc.intersect(gp)));
        c.extend(e.iter().cloned());
        total += p.mutual_info_overlapping(&a, &b, &c)?;
    }
    Ok(total)
}

/// Coordinate-ascent settings for product-distribution searches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchPlan {
    pub samples: usize,
    pub seed: u64,
    /// Grid points per coordinate line search.
    pub grid: usize,
    /// Minimum improvement for another sweep.
    pub ascent_tol: f64,
    pub max_sweeps: usize,
    /// One weight vector (per node) per scalarized query.
    pub weights: Vec<Vec<f64>>,
}

impl SearchPlan {
    pub fn new(weights: Vec<Vec<f64>>) -> Self {
        Self {
            samples: 512,
            seed: 0,
            grid: 33,
            ascent_tol: 1e-7,
            max_sweeps: 50,
            weights,
        }
    }
}

/// Best distribution found for one weight vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedOptimum {
    pub weights: Vec<f64>,
    /// Largest `w·R` found, in bits per slot.
    pub value: f64,
    pub rates: Vec<f64>,
    pub marginals: Vec<Pmf>,
    pub region: CutRegion,
    /// Index of the Dirichlet sample the optimum was reached from.
    pub sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetInnerResult {
    pub optima: Vec<WeightedOptimum>,
    /// Regions at the raw Dirichlet samples, before any ascent.
    pub sampled: Vec<(Vec<Pmf>, CutRegion)>,
}

/// Candidate marginal for node `i` after moving coordinate `x` to `t` and
/// rescaling the rest proportionally.
fn move_coordinate(p: &[f64], x: usize, t: f64) -> Vec<f64> {
    let rest = 1.0 - p[x];
    let k = p.len();
    p.iter()
        .enumerate()
        .map(|(y, &v)| {
            if y == x {
                t
            } else if rest > 1e-15 {
                v * (1.0 - t) / rest
            } else {
                (1.0 - t) / (k - 1) as f64
            }
        })
        .collect()
}

/// Cyclic coordinate ascent over one node's marginal at a time.
///
/// `f` is maximized; each coordinate is searched on `grid` evenly spaced
/// values in `[0, 1]`.  Stops when a sweep improves by less than `tol`.
pub fn coordinate_ascent<F>(
    start: Vec<Pmf>,
    start_value: f64,
    grid: usize,
    tol: f64,
    max_sweeps: usize,
    f: F,
) -> Result<(f64, Vec<Pmf>)>
where
    F: Fn(&[Pmf]) -> Result<f64>,
{
    let mut cur = start;
    let mut best = start_value;
    let steps = grid.max(2) - 1;
    for _ in 0..max_sweeps {
        let before = best;
        for i in 0..cur.len() {
            let k = cur[i].len();
            // for binary marginals one coordinate determines the other
            let coords = if k == 2 { 1 } else { k };
            if k < 2 {
                continue;
            }
            for x in 0..coords {
                let mut local_best: Option<(f64, Pmf)> = None;
                for a in 0..=steps {
                    let t = a as f64 / steps as f64;
                    let cand = move_coordinate(&cur[i], x, t);
                    let mut trial = cur.clone();
                    trial[i] = cand;
                    let v = f(&trial)?;
                    if v > local_best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0) {
                        local_best = Some((v, trial.swap_remove(i)));
                    }
                }
                if let Some((v, m)) = local_best {
                    if v > best + tol * 1e-3 {
                        best = v;
                        cur[i] = m;
                    }
                }
            }
        }
        if best - before < tol {
            break;
        }
    }
    Ok((best, cur))
}

/// Product-input regions of a deterministic network and their scalarized optima.
///
/// Every Dirichlet sample is drawn from its own seeded stream.  Samples are
/// visited in order and coordinate ascent runs from each sample that beats
/// the best value so far, so more samples never lower the reported optimum.
pub fn det_inner_region(net: &LayeredNetwork, plan: &SearchPlan) -> Result<DetInnerResult> {
    let family = DetProductFamily::new(net)?;
    for w in &plan.weights {
        if w.len() != net.n_nodes() {
            return Err(Error::Argument(format!("weight vector has {} entries for {} nodes", w.len(), net.n_nodes())));
        }
    }
    let draws: Vec<Vec<Pmf>> = (0..plan.samples)
        .map(|s| {
            let mut rng = stream_rng(plan.seed, s as u64);
            (0..net.n_nodes())
                .map(|i| dirichlet(&mut rng, net.input_alphabet(i)))
                .collect()
        })
        .collect();
    let sampled = draws
        .par_iter()
        .map(|m| Ok((m.clone(), family.region(m)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut optima = Vec::with_capacity(plan.weights.len());
    for w in &plan.weights {
        let raw = sampled
            .par_iter()
            .map(|(_, r)| r.max_weighted(w).map(|v| v.0))
            .collect::<Result<Vec<f64>>>()?;
        let objective = |m: &[Pmf]| family.region(&m.to_vec())?.max_weighted(w).map(|v| v.0);
        let mut best: Option<(f64, Vec<Pmf>, usize)> = None;
        for (s, v) in raw.iter().enumerate() {
            let bv = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0);
            if *v > bv {
                let (av, am) = coordinate_ascent(
                    sampled[s].0.clone(),
                    *v,
                    plan.grid,
                    plan.ascent_tol,
                    plan.max_sweeps,
                    objective,
                )?;
                if av > bv {
                    best = Some((av, am, s));
                }
            }
        }
        let (value, marginals, sample) = match best {
            Some(b) => b,
            None => {
                let m: Vec<Pmf> = (0..net.n_nodes())
                    .map(|i| vec![1.0 / net.input_alphabet(i) as f64; net.input_alphabet(i)])
                    .collect();
                let v = objective(&m)?;
                (v, m, 0)
            }
        };
        let region = family.region(&marginals)?;
        let (_, rates) = region.max_weighted(w)?;
        optima.push(WeightedOptimum {
            weights: w.clone(),
            value,
            rates,
            marginals,
            region,
            sample,
        });
    }
    Ok(DetInnerResult { optima, sampled })
}

/// Searches for product marginals whose region contains `rates`.
///
/// Maximizes the smallest cut margin `c(T) - Σ_{i∈T} R_i` with the same
/// sampling and ascent as [`det_inner_region`].  Returns the best marginals
/// and margin found; a nonnegative margin (within `1e-9`) proves membership,
/// a negative one proves nothing.
pub fn det_membership(net: &LayeredNetwork, rates: &[f64], plan: &SearchPlan) -> Result<(f64, Vec<Pmf>)> {
    let family = DetProductFamily::new(net)?;
    if rates.len() != net.n_nodes() {
        return Err(Error::Argument(format!("{} rates for {} nodes", rates.len(), net.n_nodes())));
    }
    if let Some(i) = (0..rates.len()).find(|&i| rates[i] != 0.0 && !net.sources().contains(i)) {
        return Err(Error::Argument(format!("node {} is not a source but has a nonzero rate", i + 1)));
    }
    let margin = |m: &[Pmf]| -> Result<f64> {
        let r = family.region(&m.to_vec())?;
        Ok(r.bounds
            .iter()
            .map(|(t, c)| c - t.iter().map(|i| rates[i]).sum::<f64>())
            .fold(f64::INFINITY, f64::min))
    };
    let mut best: Option<(f64, Vec<Pmf>)> = None;
    for s in 0..plan.samples {
        let mut rng = stream_rng(plan.seed, s as u64);
        let m: Vec<Pmf> = (0..net.n_nodes()).map(|i| dirichlet(&mut rng, net.input_alphabet(i))).collect();
        let v = margin(&m)?;
        if best.as_ref().map_or(true, |b| v > b.0) {
            let (av, am) = coordinate_ascent(m, v, plan.grid, plan.ascent_tol, plan.max_sweeps, margin)?;
            best = Some((av, am));
            if av >= -DERIVED_TOL {
                break;
            }
        }
    }
    best.ok_or_else(|| Error::Argument("search plan has no samples".into()))
}

/// Capacities of every edge channel.
pub fn edge_capacities(edges: &EdgeChannelSet, tol: f64) -> Result<BTreeMap<(usize, usize), Capacity>> {
    edges
        .iter()
        .map(|(&p, k)| Ok((p, blahut_arimoto(k, tol, crate::channels::BA_MAX_ITERS)?)))
        .collect()
}

/// `c(T) = Σ_{(i,j) ∈ (T×T^c) ∩ Ω} C_{i,j}` for a network of independent DMCs.
pub fn dmc_region(net: &LayeredNetwork, edges: &EdgeChannelSet, tol: f64) -> Result<CutRegion> {
    let caps = edge_capacities(edges, tol)?;
    let omega = net.edge_set_omega();
    let n = net.n_nodes();
    let bounds = net
        .cuts()?
        .into_iter()
        .map(|t| {
            let tc = t.complement(n);
            let c = caps
                .iter()
                .filter(|((i, j), _)| t.contains(*i) && tc.contains(*j) && omega.contains(&(*i, *j)))
                .map(|(_, c)| c.capacity)
                .sum::<f64>();
            // adding zero turns the empty sum's -0.0 into 0.0
            (t, c + 0.0)
        })
        .collect();
    Ok(CutRegion {
        n_nodes: n,
        sources: net.sources(),
        bounds,
    })
}

/// `c(T) = Σ_{i∈T} (1 - ∏_{j∈T^c} ε_{i,j}) log2|X_i|`, with `ε = 1` off Omega.
pub fn wen_region(net: &LayeredNetwork, spec: &ErasureSpec) -> Result<CutRegion> {
    let (alphabets, _) = wen_model(net)?;
    let omega = net.edge_set_omega();
    let n = net.n_nodes();
    let eps = |i: usize, j: usize| if omega.contains(&(i, j)) { spec.epsilon(i, j) } else { 1.0 };
    let bounds = net
        .cuts()?
        .into_iter()
        .map(|t| {
            let tc = t.complement(n);
            let c = t
                .iter()
                .map(|i| {
                    let erased: f64 = tc.iter().map(|j| eps(i, j)).product();
                    (1.0 - erased) * (alphabets[i] as f64).log2()
                })
                .sum::<f64>();
            (t, c + 0.0)
        })
        .collect();
    Ok(CutRegion {
        n_nodes: n,
        sources: net.sources(),
        bounds,
    })
}

/// `|nnc_cut_value - H(Y_{T^c}|X_{T^c})|`.
pub fn verify_det_identity(net: &LayeredNetwork, p: &JointPmf, t: NodeSet) -> Result<f64> {
    Ok((nnc_cut_value(net, p, t)? - det_cut_value(net, p, t)?).abs())
}

fn check_wen_exact(net: &LayeredNetwork) -> Result<()> {
    let (alphabets, _) = wen_model(net)?;
    if let Some(i) = alphabets.iter().position(|&a| a > WEN_EXACT_ALPHABET_CAP) {
        return Err(Error::Argument(format!(
            "node {} broadcast alphabet {} exceeds the exact-computation cap of {WEN_EXACT_ALPHABET_CAP}; use Monte Carlo",
            i + 1,
            alphabets[i]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievabilityRow {
    pub cut: NodeSet,
    /// `H(Y_T | X_I, Y_{T^c})` at the uniform input.
    pub residual_entropy: f64,
    pub nnc_value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AchievabilityReport {
    pub rows: Vec<AchievabilityRow>,
    pub passed: bool,
}

/// Checks at the uniform product input that `H(Y_T|X_I,Y_{T^c}) = 0` and
/// that the NNC cut value reaches the erasure-network bound on every cut.
pub fn verify_wen_achievability(net: &LayeredNetwork, spec: &ErasureSpec) -> Result<AchievabilityReport> {
    check_wen_exact(net)?;
    let uniform: Vec<Pmf> = (0..net.n_nodes())
        .map(|i| vec![1.0 / net.input_alphabet(i) as f64; net.input_alphabet(i)])
        .collect();
    let p = product_input_joint(net, &uniform)?;
    let region = wen_region(net, spec)?;
    let n = net.n_nodes();
    let mut rows = Vec::new();
    let mut passed = true;
    for (t, bound) in &region.bounds {
        let tc = t.complement(n);
        let mut given = net.x_names(net.all_nodes());
        given.extend(net.y_names(tc));
        let residual = p.entropy_overlapping(&net.y_names(*t), &given)?;
        let nnc = nnc_cut_value(net, &p, *t)?;
        if residual > DERIVED_TOL || nnc < bound - DERIVED_TOL {
            passed = false;
        }
        rows.push(AchievabilityRow {
            cut: *t,
            residual_entropy: residual,
            nnc_value: nnc,
            bound: *bound,
        });
    }
    Ok(AchievabilityReport { rows, passed })
}

/// Network class whose converse chain is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConverseClass {
    Dmc,
    Wen,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseRow {
    pub cut: NodeSet,
    /// Class region bound `c(T)`.
    pub bound: f64,
    /// Largest cut-set value over the sampled policies (a lower bound on the supremum).
    pub sampled_sup: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseReport {
    pub rows: Vec<ConverseRow>,
    pub worst_slack: f64,
    pub policies: usize,
    pub seed: u64,
}

/// Samples factorized input policies and checks the layered cut-set value
/// against the class bound on every cut.
///
/// Every fourth policy is a random deterministic one.  For erasure networks
/// each term is conditioned on the erasure pattern.
pub fn verify_converse_chain(
    class: ConverseClass,
    net: &LayeredNetwork,
    n_policies: usize,
    seed: u64,
    tol: f64,
) -> Result<ConverseReport> {
    let region = match class {
        ConverseClass::Dmc => dmc_region(net, dmc_model(net)?, tol)?,
        ConverseClass::Wen => {
            check_wen_exact(net)?;
            let (_, spec) = wen_model(net)?;
            wen_region(net, spec)?
        }
    };
    let cond = class == ConverseClass::Wen;
    let values = (0..n_policies)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let policies = random_policies(net, &mut rng, k % 4 == 3)?;
            let p = factorize_joint(net, &policies)?;
            region
                .bounds
                .iter()
                .map(|(t, _)| cutset_cut_value(&p, net, *t, cond))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(region.bounds.len());
    let mut worst = f64::INFINITY;
    for (c, (t, bound)) in region.bounds.iter().enumerate() {
        let sup = values.iter().map(|v| v[c]).fold(0.0, f64::max);
        let slack = bound - sup;
        worst = worst.min(slack);
        rows.push(ConverseRow {
            cut: *t,
            bound: *bound,
            sampled_sup: sup,
            slack,
        });
    }
    Ok(ConverseReport {
        rows,
        worst_slack: worst,
        policies: n_policies,
        seed,
    })
}

/// Budget of the dominance falsifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominancePlan {
    pub samples: usize,
    pub ascent_steps: usize,
    pub seed: u64,
}

impl Default for DominancePlan {
    fn default() -> Self {
        Self {
            samples: 2048,
            ascent_steps: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum DominanceVerdict {
    NoViolationFound,
    Violation {
        /// Joint input pmf over all input atoms, in network order.
        input: Vec<f64>,
        cut: NodeSet,
        /// `min_s max_T (H_p - H_s)` over product distributions `s`.
        gap: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub verdict: DominanceVerdict,
    /// Largest `min_s max_T (H_p - H_s)` seen, with `s` over the screening candidates.
    pub largest_gap: f64,
    /// Largest `H_p - H_s` seen with `s` the product of the marginals of `p`.
    pub marginal_product_gap: f64,
    pub marginal_product_cut: NodeSet,
    pub samples: usize,
    pub ascent_steps: usize,
    pub seed: u64,
    /// Always false: a falsifier cannot prove dominance.
    pub conclusive: bool,
}

/// Precomputed cut entropies `H(Y_{T^c} | X_{T^c})` as functions of the joint input law.
struct DetCutTable {
    cuts: Vec<NodeSet>,
    /// Per cut: key of `(x_{T^c}, y_{T^c})` and of `x_{T^c}` for each input index.
    keys: Vec<(Vec<usize>, usize, Vec<usize>, usize)>,
    /// Per node: index of the node's input tuple for each input index.
    node_index: Vec<Vec<usize>>,
    node_sizes: Vec<usize>,
    n_inputs: usize,
}

impl DetCutTable {
    fn new(net: &LayeredNetwork) -> Result<Self> {
        require_deterministic(net)?;
        let xs = net.x_vars(net.all_nodes());
        let sizes: Vec<usize> = xs.iter().map(|v| v.size).collect();
        let total = sizes.iter().try_fold(1usize, |a, &s| a.checked_mul(s).filter(|&t| t <= FALSIFIER_MAX_INPUTS));
        let n_inputs = total.ok_or(Error::TooLarge {
            outcomes: sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128)),
            cap: FALSIFIER_MAX_INPUTS as u128,
        })?;
        // Evaluate every output atom for every input assignment.
        let mut values: Vec<std::collections::HashMap<String, usize>> = Vec::with_capacity(n_inputs);
        let mut d = vec![0usize; sizes.len()];
        for x in 0..n_inputs {
            decode_index(x, &sizes, &mut d);
            let mut m: std::collections::HashMap<String, usize> =
                xs.iter().zip(&d).map(|(v, &a)| (v.name.clone(), a)).collect();
            for h in 1..=net.alpha() {
                let k = net.channel(h);
                let map = k.deterministic_map(DERIVED_TOL).expect("checked deterministic");
                let row: Vec<usize> = k.inputs().iter().map(|v| m[&v.name]).collect();
                let col = map[encode_index(&row, &k.input_sizes())];
                let mut o = vec![0usize; k.outputs().len()];
                decode_index(col, &k.output_sizes(), &mut o);
                for (v, a) in k.outputs().iter().zip(o) {
                    m.insert(v.name.clone(), a);
                }
            }
            values.push(m);
        }
        let n = net.n_nodes();
        let cuts = net.cuts()?;
        let mut keys = Vec::with_capacity(cuts.len());
        for &t in &cuts {
            let tc = t.complement(n);
            let xv = net.x_vars(tc);
            let yv = net.y_vars(tc);
            let xs_sizes: Vec<usize> = xv.iter().map(|v| v.size).collect();
            let mut all = xv.clone();
            all.extend(yv);
            let all_sizes: Vec<usize> = all.iter().map(|v| v.size).collect();
            let mut kx = Vec::with_capacity(n_inputs);
            let mut kxy = Vec::with_capacity(n_inputs);
            for m in &values {
                let dx: Vec<usize> = xv.iter().map(|v| m[&v.name]).collect();
                let dxy: Vec<usize> = all.iter().map(|v| m[&v.name]).collect();
                kx.push(encode_index(&dx, &xs_sizes));
                kxy.push(encode_index(&dxy, &all_sizes));
            }
            keys.push((kxy, all_sizes.iter().product(), kx, xs_sizes.iter().product()));
        }
        let mut node_index = Vec::with_capacity(n);
        let mut node_sizes = Vec::with_capacity(n);
        for i in 0..n {
            let atoms = net.x_atoms(i);
            let pos: Vec<usize> = atoms.iter().map(|a| xs.iter().position(|v| v.name == a.name).unwrap()).collect();
            let asz: Vec<usize> = atoms.iter().map(|v| v.size).collect();
            let mut idx = Vec::with_capacity(n_inputs);
            for x in 0..n_inputs {
                decode_index(x, &sizes, &mut d);
                let sub: Vec<usize> = pos.iter().map(|&p| d[p]).collect();
                idx.push(encode_index(&sub, &asz));
            }
            node_index.push(idx);
            node_sizes.push(asz.iter().product());
        }
        Ok(Self {
            cuts,
            keys,
            node_index,
            node_sizes,
            n_inputs,
        })
    }

    fn entropies(&self, p: &[f64]) -> Vec<f64> {
        let h = |w: &[f64]| -> f64 { w.iter().filter(|&&v| v > 0.0).map(|v| -v * v.log2()).sum() };
        self.keys
            .iter()
            .map(|(kxy, nxy, kx, nx)| {
                let mut a = vec![0.0; *nxy];
                let mut b = vec![0.0; *nx];
                for (x, &w) in p.iter().enumerate() {
                    a[kxy[x]] += w;
                    b[kx[x]] += w;
                }
                (h(&a) - h(&b)).max(0.0)
            })
            .collect()
    }

    fn product(&self, marginals: &[Pmf]) -> Vec<f64> {
        (0..self.n_inputs)
            .map(|x| {
                marginals
                    .iter()
                    .enumerate()
                    .map(|(i, m)| m[self.node_index[i][x]])
                    .product()
            })
            .collect()
    }

    fn marginals(&self, p: &[f64]) -> Vec<Pmf> {
        (0..self.node_sizes.len())
            .map(|i| {
                let mut m = vec![0.0; self.node_sizes[i]];
                for (x, &w) in p.iter().enumerate() {
                    m[self.node_index[i][x]] += w;
                }
                m
            })
            .collect()
    }

    fn uniform(&self) -> Vec<Pmf> {
        self.node_sizes.iter().map(|&k| vec![1.0 / k as f64; k]).collect()
    }
}

fn worst_cut(hp: &[f64], hs: &[f64]) -> (f64, usize) {
    hp.iter()
        .zip(hs)
        .map(|(a, b)| a - b)
        .enumerate()
        .fold((f64::NEG_INFINITY, 0), |acc, (c, g)| if g > acc.0 { (g, c) } else { acc })
}

/// Minimizes `max_T (H_p - H_s)` over product distributions `s`, starting
/// from the best of the screening candidates.
fn descend_product(table: &DetCutTable, hp: &[f64], starts: &[Vec<Pmf>]) -> Result<(f64, Vec<Pmf>)> {
    let score = |m: &[Pmf]| -> Result<f64> {
        let hs = table.entropies(&table.product(m));
        Ok(-worst_cut(hp, &hs).0)
    };
    let mut best: Option<(f64, Vec<Pmf>)> = None;
    for s in starts {
        let v = score(s)?;
        if best.as_ref().map_or(true, |b| v > b.0) {
            best = Some((v, s.clone()));
        }
    }
    let (v0, m0) = best.expect("at least one start");
    let (v, m) = coordinate_ascent(m0, v0, 33, 1e-7, 50, score)?;
    Ok((-v, m))
}

/// Searches for a joint input law whose cut entropies no product law dominates.
///
/// Dirichlet draws over the joint input alphabet are pushed uphill on
/// `min_s max_T (H_p(T) - H_s(T))`, screening `s` over the product of the
/// marginals of `p` and the uniform law.  Positive screens are confirmed by
/// coordinate descent over product laws.  Finding nothing is not a proof.
pub fn dominance_falsifier(net: &LayeredNetwork, plan: &DominancePlan) -> Result<DominanceReport> {
    let table = DetCutTable::new(net)?;
    let uniform = table.uniform();
    let hu = table.entropies(&table.product(&uniform));
    let screen = |p: &[f64]| -> (f64, f64, usize) {
        let hp = table.entropies(p);
        let marg = table.marginals(p);
        let hm = table.entropies(&table.product(&marg));
        let (gm, cm) = worst_cut(&hp, &hm);
        let (gu, _) = worst_cut(&hp, &hu);
        (gm.min(gu), gm, cm)
    };
    struct Outcome {
        gap: f64,
        marg_gap: f64,
        marg_cut: usize,
        violation: Option<(Vec<f64>, usize, f64)>,
    }
    let outcomes = (0..plan.samples)
        .into_par_iter()
        .map(|s| -> Result<Outcome> {
            let mut rng = stream_rng(plan.seed, s as u64);
            let mut p = dirichlet(&mut rng, table.n_inputs);
            let (mut gap, mut marg_gap, mut marg_cut) = screen(&p);
            for step in 0..plan.ascent_steps {
                let lambda = 0.5 * 0.92f64.powi(step as i32);
                let q = if rng.gen_bool(0.25) {
                    let mut v = vec![0.0; table.n_inputs];
                    v[rng.gen_range(0..table.n_inputs)] = 1.0;
                    v
                } else {
                    dirichlet(&mut rng, table.n_inputs)
                };
                let cand: Vec<f64> = p.iter().zip(&q).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
                let (g, mg, mc) = screen(&cand);
                if mg > marg_gap {
                    marg_gap = mg;
                    marg_cut = mc;
                }
                if g > gap {
                    gap = g;
                    p = cand;
                }
            }
            let mut violation = None;
            if gap > DERIVED_TOL {
                let hp = table.entropies(&p);
                let starts = vec![table.marginals(&p), uniform.clone()];
                let (g, m) = descend_product(&table, &hp, &starts)?;
                if g > DERIVED_TOL {
                    let hs = table.entropies(&table.product(&m));
                    let (_, c) = worst_cut(&hp, &hs);
                    violation = Some((p.clone(), c, g));
                }
            }
            Ok(Outcome {
                gap,
                marg_gap,
                marg_cut,
                violation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let largest_gap = outcomes.iter().map(|o| o.gap).fold(0.0, f64::max);
    let (marginal_product_gap, mc) = outcomes
        .iter()
        .fold((f64::NEG_INFINITY, 0), |acc, o| if o.marg_gap > acc.0 { (o.marg_gap, o.marg_cut) } else { acc });
    let verdict = outcomes
        .iter()
        .filter_map(|o| o.violation.as_ref())
        .fold(None::<&(Vec<f64>, usize, f64)>, |acc, v| match acc {
            Some(a) if a.2 >= v.2 => Some(a),
            _ => Some(v),
        })
        .map_or(DominanceVerdict::NoViolationFound, |(p, c, g)| DominanceVerdict::Violation {
            input: p.clone(),
            cut: table.cuts[*c],
            gap: *g,
        });
    Ok(DominanceReport {
        verdict,
        largest_gap,
        marginal_product_gap: marginal_product_gap.max(0.0),
        marginal_product_cut: table.cuts[mc],
        samples: plan.samples,
        ascent_steps: plan.ascent_steps,
        seed: plan.seed,
        conclusive: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use crate::prob::binary_entropy;

    fn uniform(net: &LayeredNetwork) -> Vec<Pmf> {
        (0..net.n_nodes())
            .map(|i| vec![1.0 / net.input_alphabet(i) as f64; net.input_alphabet(i)])
            .collect()
    }

    #[test]
    fn figure2_nnc_values() {
        let net = examples::figure2();
        let p = product_input_joint(&net, &uniform(&net)).unwrap();
        assert!((nnc_cut_value(&net, &p, NodeSet::singleton(0)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nnc_cut_value(&net, &p, NodeSet::EMPTY).unwrap(), 0.0);
        for t in net.cuts().unwrap() {
            assert!(verify_det_identity(&net, &p, t).unwrap() < 1e-12);
        }
    }

    #[test]
    fn figure2_weighted_optimum() {
        let net = examples::figure2();
        let mut plan = SearchPlan::new(vec![vec![1.0, 0.0, 0.0]]);
        plan.samples = 16;
        let r = det_inner_region(&net, &plan).unwrap();
        assert!((r.optima[0].value - 1.0).abs() < 1e-6);
        assert_eq!(r.sampled.len(), 16);
    }

    #[test]
    fn exchange_network_cut_values_are_log_alphabets() {
        let net = examples::exchange([2, 4]);
        let fam = DetProductFamily::new(&net).unwrap();
        let r = fam.region(&uniform(&net)).unwrap();
        assert!((r.bound(NodeSet::singleton(0)).unwrap() - 1.0).abs() < 1e-12);
        assert!((r.bound(NodeSet::singleton(1)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_channels_give_zero_region() {
        let net = examples::identity_network(&[1, 1], NodeSet::singleton(1));
        let fam = DetProductFamily::new(&net).unwrap();
        let r = fam.region(&uniform(&net)).unwrap();
        assert!(r.bounds.iter().all(|(_, c)| *c == 0.0));
    }

    #[test]
    fn det_region_rejects_noisy_networks() {
        let net = examples::figure3(0.11);
        assert!(matches!(DetProductFamily::new(&net), Err(Error::Class(_))));
    }

    #[test]
    fn figure3_dmc_region() {
        let net = examples::figure3(0.11);
        let r = dmc_region(&net, dmc_model(&net).unwrap(), 1e-9).unwrap();
        let c = 1.0 - binary_entropy(0.11);
        assert!((r.bound(NodeSet::singleton(0)).unwrap() - 2.0 * c).abs() < 1e-9);
        assert!((r.bound(NodeSet::from_nodes([0, 1])).unwrap() - 2.0 * c).abs() < 1e-9);
        assert_eq!(r.bound(NodeSet::EMPTY), Some(0.0));
    }

    #[test]
    fn figure4_wen_region() {
        let net = examples::figure4(0.5);
        let (_, spec) = wen_model(&net).unwrap();
        let r = wen_region(&net, spec).unwrap();
        assert_eq!(r.bound(NodeSet::singleton(0)), Some(0.75));
        assert_eq!(r.bound(NodeSet::from_nodes([0, 1])), Some(1.0));
        let (v, rates) = r.max_weighted(&[1.0, 0.0, 0.0]).unwrap();
        assert!((v - 0.75).abs() < 1e-9);
        assert!(r.contains(&rates, 1e-9));
    }

    #[test]
    fn wen_region_extremes() {
        let net = examples::figure4(1.0);
        let (_, spec) = wen_model(&net).unwrap();
        assert!(wen_region(&net, spec).unwrap().bounds.iter().all(|(_, c)| *c == 0.0));
        let net = examples::figure4(0.0);
        let (_, spec) = wen_model(&net).unwrap();
        let r = wen_region(&net, spec).unwrap();
        assert_eq!(r.bound(NodeSet::singleton(0)), Some(1.0));
        assert_eq!(r.bound(NodeSet::from_nodes([0, 1])), Some(2.0));
        assert_eq!(r.bound(NodeSet::singleton(1)), Some(1.0));
    }

    #[test]
    fn figure4_achievability() {
        let net = examples::figure4(0.5);
        let (_, spec) = wen_model(&net).unwrap();
        let rep = verify_wen_achievability(&net, spec).unwrap();
        assert!(rep.passed);
        let row = rep.rows.iter().find(|r| r.cut == NodeSet::singleton(0)).unwrap();
        assert!(row.nnc_value >= 0.75 - 1e-9);
    }

    #[test]
    fn cutset_reduces_for_single_layer() {
        let net = examples::identity_network(&[2, 2], NodeSet::singleton(1));
        let p = product_input_joint(&net, &[vec![0.3, 0.7], vec![0.5, 0.5]]).unwrap();
        let t = NodeSet::singleton(0);
        let direct = p.mutual_info(&["X1"], &["Y2"], &["X2"]).unwrap();
        assert!((cutset_cut_value(&p, &net, t, false).unwrap() - direct).abs() < 1e-12);
        assert_eq!(cutset_cut_value(&p, &net, NodeSet::EMPTY, false).unwrap(), 0.0);
        assert!(matches!(cutset_cut_value(&p, &net, t, true), Err(Error::Class(_))));
    }

    #[test]
    fn converse_chain_small_runs() {
        let net = examples::figure3(0.11);
        let r = verify_converse_chain(ConverseClass::Dmc, &net, 8, 0, 1e-9).unwrap();
        assert!(r.worst_slack >= -1e-9);
        let net = examples::figure4(0.5);
        let r = verify_converse_chain(ConverseClass::Wen, &net, 8, 0, 1e-9).unwrap();
        assert!(r.worst_slack >= -1e-9);
    }

    #[test]
    fn falsifier_on_figure2_small_budget() {
        let net = examples::figure2();
        let plan = DominancePlan {
            samples: 64,
            ascent_steps: 10,
            seed: 0,
        };
        let r = dominance_falsifier(&net, &plan).unwrap();
        assert_eq!(r.verdict, DominanceVerdict::NoViolationFound);
        assert!(!r.conclusive);
        // the literal product of marginals can lose to a correlated input
        assert!(r.marginal_product_gap > 0.0);
    }

    #[test]
    fn falsifier_constant_network_has_zero_gaps() {
        let net = examples::identity_network(&[1, 1], NodeSet::singleton(1));
        let r = dominance_falsifier(&net, &DominancePlan { samples: 8, ascent_steps: 2, seed: 1 }).unwrap();
        assert_eq!(r.largest_gap, 0.0);
        assert_eq!(r.marginal_product_gap, 0.0);
    }

    #[test]
    fn membership_search_on_figure2() {
        let net = examples::figure2();
        let mut plan = SearchPlan::new(vec![]);
        plan.samples = 8;
        let (m, _) = det_membership(&net, &[0.9, 0.0, 0.0], &plan).unwrap();
        assert!(m >= -1e-9);
        let (m, _) = det_membership(&net, &[1.2, 0.0, 0.0], &plan).unwrap();
        assert!(m < 0.0);
        assert!(det_membership(&net, &[0.0, 0.5, 0.0], &plan).is_err());
    }

    #[test]
    fn lp_handles_unconstrained_sources() {
        let region = CutRegion {
            n_nodes: 2,
            sources: NodeSet::full(2),
            bounds: vec![(NodeSet::EMPTY, 0.0), (NodeSet::singleton(0), 1.0)],
        };
        let (v, _) = region.max_weighted(&[1.0, 0.0]).unwrap();
        assert!((v - 1.0).abs() < 1e-9);
        assert_eq!(region.max_weighted(&[0.0, 1.0]).unwrap().0, f64::INFINITY);
    }
}
