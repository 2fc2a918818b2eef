//! Exact finite-alphabet probability engine.
//!
//! A [`JointPmf`] is a dense tensor over an ordered tuple of named variables.
//! The first variable is the most significant index; the last varies fastest.
//! All logarithms are base 2 and `0 log 0 = 0`.

mod factorize;
mod kernel;

pub use factorize::{factorize_joint, factorize_prefix, product_input_joint, product_policy, Pmf};
pub use kernel::ChannelKernel;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance applied to normalization checks on construction.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Tolerance for derived quantities (entropies, identities).
pub const DERIVED_TOL: f64 = 1e-9;

/// Information quantities below `-HARD_NEGATIVE_TOL` signal a broken computation.
pub const HARD_NEGATIVE_TOL: f64 = 1e-6;

/// Largest dense tensor the engine will materialize.
pub const MAX_OUTCOMES: usize = 1 << 24;

/// A named finite random variable with alphabet `{0, .., size - 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Var {
    pub name: String,
    pub size: usize,
}

impl Var {
    pub fn new(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            size,
        }
    }
}

/// Product of alphabet sizes, guarded against the dense-tensor cap.
pub(crate) fn outcome_count(vars: &[Var]) -> Result<usize> {
    let mut total: u128 = 1;
    for v in vars {
        total = total.saturating_mul(v.size as u128);
        if total > MAX_OUTCOMES as u128 {
            return Err(Error::TooLarge {
                outcomes: vars.iter().fold(1u128, |a, v| a.saturating_mul(v.size as u128)),
                cap: MAX_OUTCOMES as u128,
            });
        }
    }
    Ok(total as usize)
}

/// Mixed-radix decomposition of `index` over `sizes` (first size most significant).
pub fn decode_index(mut index: usize, sizes: &[usize], out: &mut [usize]) {
    for k in (0..sizes.len()).rev() {
        out[k] = index % sizes[k];
        index /= sizes[k];
    }
}

/// Inverse of [`decode_index`].
pub fn encode_index(digits: &[usize], sizes: &[usize]) -> usize {
    digits
        .iter()
        .zip(sizes)
        .fold(0usize, |acc, (&d, &s)| acc * s + d)
}

fn strides(sizes: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; sizes.len()];
    for k in (0..sizes.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * sizes[k + 1];
    }
    s
}

fn plogp_sum(weights: impl IntoIterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for p in weights {
        if p > 0.0 {
            h -= p * p.log2();
        }
    }
    h
}

/// Exact probability mass function over a named tuple of finite variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    vars: Vec<Var>,
    weights: Vec<f64>,
}

impl JointPmf {
    /// Builds a joint pmf, checking nonnegativity, normalization and unique names.
    pub fn new(vars: Vec<Var>, weights: Vec<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in &vars {
            if v.size == 0 {
                return Err(Error::Distribution(format!(
                    "variable `{}` has an empty alphabet",
                    v.name
                )));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Distribution(format!(
                    "variable `{}` appears twice",
                    v.name
                )));
            }
        }
        let n = outcome_count(&vars)?;
        if weights.len() != n {
            return Err(Error::Structure(format!(
                "expected {n} weights, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::Distribution(format!("invalid weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Distribution(format!("weights sum to {sum}")));
        }
        Ok(Self { vars, weights })
    }

    /// The distribution over zero variables (a single outcome of mass 1).
    pub fn unit() -> Self {
        Self {
            vars: Vec::new(),
            weights: vec![1.0],
        }
    }

    /// Point mass on `values` (one value per variable).
    pub fn point_mass(vars: Vec<Var>, values: &[usize]) -> Result<Self> {
        let n = outcome_count(&vars)?;
        let sizes: Vec<usize> = vars.iter().map(|v| v.size).collect();
        if values.len() != vars.len() || values.iter().zip(&sizes).any(|(v, s)| v >= s) {
            return Err(Error::Argument("point-mass values out of range".into()));
        }
        let mut weights = vec![0.0; n];
        weights[encode_index(values, &sizes)] = 1.0;
        Self::new(vars, weights)
    }

    /// Product of independent single-variable marginals.
    pub fn independent(marginals: &[(Var, Vec<f64>)]) -> Result<Self> {
        let mut out = Self::unit();
        for (v, p) in marginals {
            let k = ChannelKernel::new(vec![], vec![v.clone()], p.clone())?;
            out = out.extend(&k)?;
        }
        Ok(out)
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.size).collect()
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name == name)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// Resolves names to positions, rejecting unknown names and collapsing repeats.
    fn positions<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.index_of(n.as_ref())?;
            if !out.contains(&i) {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Probability of a full assignment given as one value per variable.
    pub fn prob(&self, values: &[usize]) -> f64 {
        self.weights[encode_index(values, &self.sizes())]
    }

    /// Marginal weights over the variables at `positions`, in that order.
    fn marginal_weights(&self, positions: &[usize]) -> Vec<f64> {
        let sizes = self.sizes();
        let out_sizes: Vec<usize> = positions.iter().map(|&p| sizes[p]).collect();
        let out_strides = strides(&out_sizes);
        let mut contrib = vec![0usize; sizes.len()];
        for (k, &p) in positions.iter().enumerate() {
            contrib[p] = out_strides[k];
        }
        let out_len: usize = out_sizes.iter().product();
        let mut out = vec![0.0; out_len];
        if sizes.is_empty() {
            out[0] = self.weights[0];
            return out;
        }
        let mut digits = vec![0usize; sizes.len()];
        let mut o = 0usize;
        let last = sizes.len() - 1;
        for &w in &self.weights {
            out[o] += w;
            // odometer increment
            let mut k = last;
            loop {
                digits[k] += 1;
                o += contrib[k];
                if digits[k] < sizes[k] {
                    break;
                }
                o -= sizes[k] * contrib[k];
                digits[k] = 0;
                if k == 0 {
                    break;
                }
                k -= 1;
            }
        }
        out
    }

    /// Marginal distribution over `names`, in the given order.
    pub fn marginal<S: AsRef<str>>(&self, names: &[S]) -> Result<JointPmf> {
        let pos = self.positions(names)?;
        let vars = pos.iter().map(|&p| self.vars[p].clone()).collect();
        Ok(Self {
            vars,
            weights: self.marginal_weights(&pos),
        })
    }

    /// Joint entropy `H(names)` in bits.  Repeated names count once.
    pub fn joint_entropy<S: AsRef<str>>(&self, names: &[S]) -> Result<f64> {
        let pos = self.positions(names)?;
        Ok(self.joint_entropy_at(&pos))
    }

    fn joint_entropy_at(&self, pos: &[usize]) -> f64 {
        if pos.is_empty() {
            return 0.0;
        }
        if pos.len() == self.vars.len() {
            return plogp_sum(self.weights.iter().copied());
        }
        plogp_sum(self.marginal_weights(pos))
    }

    /// `H(targets | given)` in bits.
    ///
    /// The two sets must be disjoint.  Conditioning events of probability zero
    /// contribute nothing.
    pub fn entropy<S: AsRef<str>, T: AsRef<str>>(&self, targets: &[S], given: &[T]) -> Result<f64> {
        let t = self.positions(targets)?;
        let g = self.positions(given)?;
        if let Some(x) = t.iter().find(|x| g.contains(x)) {
            return Err(Error::Argument(format!(
                "variable `{}` is both a target and conditioned on",
                self.vars[*x].name
            )));
        }
        let all: Vec<usize> = t.iter().chain(&g).copied().collect();
        let h = self.joint_entropy_at(&all) - self.joint_entropy_at(&g);
        clamp_info(h)
    }

    /// `I(a; b | given)` in bits for pairwise disjoint variable sets.
    pub fn mutual_info<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
        &self,
        a: &[S],
        b: &[T],
        given: &[U],
    ) -> Result<f64> {
        let pa = self.positions(a)?;
        let pb = self.positions(b)?;
        let pg = self.positions(given)?;
        for (x, y, what) in [(&pa, &pb, "a and b"), (&pa, &pg, "a and given"), (&pb, &pg, "b and given")] {
            if let Some(v) = x.iter().find(|v| y.contains(v)) {
                return Err(Error::Argument(format!(
                    "variable `{}` shared between {what}",
                    self.vars[*v].name
                )));
            }
        }
        self.info_at(&pa, &pb, &pg)
    }

    /// `I(a; b | given)` where the sets may overlap.
    ///
    /// A variable shared between sets behaves exactly like an identical copy
    /// placed in each of them: `I = H(a,g) + H(b,g) - H(a,b,g) - H(g)`.
    pub fn mutual_info_overlapping<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
        &self,
        a: &[S],
        b: &[T],
        given: &[U],
    ) -> Result<f64> {
        let pa = self.positions(a)?;
        let pb = self.positions(b)?;
        let pg = self.positions(given)?;
        self.info_at(&pa, &pb, &pg)
    }

    /// `H(targets | given)` where the sets may overlap (shared variables contribute 0).
    pub fn entropy_overlapping<S: AsRef<str>, T: AsRef<str>>(
        &self,
        targets: &[S],
        given: &[T],
    ) -> Result<f64> {
        let t = self.positions(targets)?;
        let g = self.positions(given)?;
        let all = union(&t, &g);
        clamp_info(self.joint_entropy_at(&all) - self.joint_entropy_at(&g))
    }

    fn info_at(&self, a: &[usize], b: &[usize], g: &[usize]) -> Result<f64> {
        let ag = union(a, g);
        let bg = union(b, g);
        let abg = union(&ag, b);
        let v = self.joint_entropy_at(&ag) + self.joint_entropy_at(&bg)
            - self.joint_entropy_at(&abg)
            - self.joint_entropy_at(g);
        clamp_info(v)
    }

    /// Appends the outputs of `kernel`, whose inputs must already be variables of `self`.
    ///
    /// The result is `p(vars) * k(outputs | inputs)`.
    pub fn extend(&self, kernel: &ChannelKernel) -> Result<JointPmf> {
        let mut in_pos = Vec::with_capacity(kernel.inputs().len());
        for v in kernel.inputs() {
            let p = self.index_of(&v.name)?;
            if self.vars[p].size != v.size {
                return Err(Error::Structure(format!(
                    "kernel input `{}` has size {} but the joint has size {}",
                    v.name, v.size, self.vars[p].size
                )));
            }
            in_pos.push(p);
        }
        for v in kernel.outputs() {
            if self.has_var(&v.name) {
                return Err(Error::Structure(format!(
                    "kernel output `{}` already present in the joint",
                    v.name
                )));
            }
        }
        let mut vars = self.vars.clone();
        vars.extend(kernel.outputs().iter().cloned());
        let total = outcome_count(&vars)?;
        let cols = kernel.cols();
        let sizes = self.sizes();
        let in_sizes: Vec<usize> = kernel.inputs().iter().map(|v| v.size).collect();
        let in_strides = strides(&in_sizes);
        let mut contrib = vec![0usize; sizes.len()];
        for (k, &p) in in_pos.iter().enumerate() {
            contrib[p] = in_strides[k];
        }
        let mut weights = vec![0.0; total];
        let mut digits = vec![0usize; sizes.len()];
        let mut row = 0usize;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                let r = kernel.row(row);
                let base = i * cols;
                for (c, &q) in r.iter().enumerate() {
                    weights[base + c] = w * q;
                }
            }
            if sizes.is_empty() {
                break;
            }
            let mut k = sizes.len() - 1;
            loop {
                digits[k] += 1;
                row += contrib[k];
                if digits[k] < sizes[k] {
                    break;
                }
                row -= sizes[k] * contrib[k];
                digits[k] = 0;
                if k == 0 {
                    break;
                }
                k -= 1;
            }
        }
        Ok(Self { vars, weights })
    }

    /// Conditional `p(targets | given)` as one optional row per `given` outcome.
    ///
    /// Rows whose conditioning event has zero probability are `None`.
    pub fn conditional<S: AsRef<str>, T: AsRef<str>>(
        &self,
        targets: &[S],
        given: &[T],
    ) -> Result<Vec<Option<Vec<f64>>>> {
        let t = self.positions(targets)?;
        let g = self.positions(given)?;
        if t.iter().any(|x| g.contains(x)) {
            return Err(Error::Argument("targets and given overlap".into()));
        }
        let all: Vec<usize> = g.iter().chain(&t).copied().collect();
        let joint = self.marginal_weights(&all);
        let cols: usize = t.iter().map(|&p| self.vars[p].size).product();
        Ok(joint
            .chunks(cols)
            .map(|row| {
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    Some(row.iter().map(|w| w / s).collect())
                } else {
                    None
                }
            })
            .collect())
    }

    /// Checks the Markov chain `x -> y -> z`.
    ///
    /// True iff `max |p(x,y,z) p(y) - p(x,y) p(y,z)| <= tol` over all outcomes.
    pub fn markov_check<S: AsRef<str>, T: AsRef<str>, U: AsRef<str>>(
        &self,
        x: &[S],
        y: &[T],
        z: &[U],
        tol: f64,
    ) -> Result<bool> {
        let px = self.positions(x)?;
        let py = self.positions(y)?;
        let pz = self.positions(z)?;
        if px.iter().any(|v| py.contains(v) || pz.contains(v)) || py.iter().any(|v| pz.contains(v)) {
            return Err(Error::Argument("markov_check requires disjoint sets".into()));
        }
        let size = |ps: &[usize]| ps.iter().map(|&p| self.vars[p].size).product::<usize>();
        let (nx, ny, nz) = (size(&px), size(&py), size(&pz));
        let order: Vec<usize> = px.iter().chain(&py).chain(&pz).copied().collect();
        let xyz = self.marginal_weights(&order);
        let mut xy = vec![0.0; nx * ny];
        let mut yz = vec![0.0; ny * nz];
        let mut yy = vec![0.0; ny];
        for a in 0..nx {
            for b in 0..ny {
                for c in 0..nz {
                    let w = xyz[(a * ny + b) * nz + c];
                    xy[a * ny + b] += w;
                    yz[b * nz + c] += w;
                    yy[b] += w;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for a in 0..nx {
            for b in 0..ny {
                for c in 0..nz {
                    let d = xyz[(a * ny + b) * nz + c] * yy[b] - xy[a * ny + b] * yz[b * nz + c];
                    worst = worst.max(d.abs());
                }
            }
        }
        Ok(worst <= tol)
    }

    /// Total-variation distance to `other` over identically ordered variables.
    pub fn total_variation(&self, other: &JointPmf) -> Result<f64> {
        if self.vars != other.vars {
            return Err(Error::Structure("total variation needs identical variable tuples".into()));
        }
        Ok(0.5
            * self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = a.to_vec();
    for x in b {
        if !out.contains(x) {
            out.push(*x);
        }
    }
    out
}

/// Clamps tiny negative round-off to zero and rejects grossly negative values.
pub(crate) fn clamp_info(v: f64) -> Result<f64> {
    if v < -HARD_NEGATIVE_TOL {
        return Err(Error::Numerical(format!(
            "information quantity {v} is negative beyond round-off"
        )));
    }
    Ok(v.max(0.0))
}

/// Binary entropy `H2(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    plogp_sum([p, 1.0 - p])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_bits() -> JointPmf {
        JointPmf::new(
            vec![Var::new("X", 2), Var::new("Y", 2)],
            vec![0.25; 4],
        )
        .unwrap()
    }

    fn bsc_joint(eps: f64) -> JointPmf {
        let x = JointPmf::independent(&[(Var::new("X", 2), vec![0.5, 0.5])]).unwrap();
        x.extend(&ChannelKernel::bsc("X", "Y", eps).unwrap()).unwrap()
    }

    #[test]
    fn entropy_of_two_uniform_bits() {
        let p = uniform_bits();
        assert!((p.entropy(&["X", "Y"], &[] as &[&str]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn copy_channel_has_zero_conditional_entropy() {
        let p = JointPmf::new(
            vec![Var::new("X", 2), Var::new("Y", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        assert_eq!(p.entropy(&["Y"], &["X"]).unwrap(), 0.0);
        assert!((p.mutual_info(&["X"], &["Y"], &[] as &[&str]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bsc_conditional_entropy_and_information() {
        let p = bsc_joint(0.11);
        // H2(0.11) from the closed form.
        let h2 = -(0.11f64 * 0.11f64.log2()) - 0.89 * 0.89f64.log2();
        assert!((p.entropy(&["Y"], &["X"]).unwrap() - h2).abs() < 1e-12);
        assert!((p.mutual_info(&["X"], &["Y"], &[] as &[&str]).unwrap() - (1.0 - h2)).abs() < 1e-12);
    }

    #[test]
    fn independent_bits_have_zero_information() {
        let p = uniform_bits();
        assert_eq!(p.mutual_info(&["X"], &["Y"], &[] as &[&str]).unwrap(), 0.0);
    }

    #[test]
    fn name_and_overlap_errors() {
        let p = uniform_bits();
        assert_eq!(
            p.entropy(&["Z"], &[] as &[&str]),
            Err(Error::UnknownVariable("Z".into()))
        );
        assert!(matches!(p.entropy(&["X"], &["X"]), Err(Error::Argument(_))));
        assert!(matches!(
            p.mutual_info(&["X"], &["X"], &[] as &[&str]),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn construction_rejects_bad_weights() {
        let v = || vec![Var::new("X", 2)];
        assert!(JointPmf::new(v(), vec![0.5, 0.4]).is_err());
        assert!(JointPmf::new(v(), vec![1.5, -0.5]).is_err());
        assert!(JointPmf::new(vec![Var::new("X", 2), Var::new("X", 2)], vec![0.25; 4]).is_err());
        assert!(JointPmf::new(v(), vec![1.0]).is_err());
        assert!(JointPmf::new(v(), vec![0.5, 0.5 + 5e-13]).is_ok());
    }

    #[test]
    fn dense_guard_rejects_huge_tensors() {
        let vars: Vec<Var> = (0..25).map(|i| Var::new(format!("V{i}"), 2)).collect();
        assert!(matches!(outcome_count(&vars), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn overlapping_information_matches_duplicated_copy() {
        // I(X,E; Y,E | -) with E shared equals I over a duplicated copy E'.
        let base = JointPmf::independent(&[
            (Var::new("X", 2), vec![0.3, 0.7]),
            (Var::new("E", 2), vec![0.6, 0.4]),
        ])
        .unwrap();
        let noisy = base
            .extend(&ChannelKernel::bsc("X", "Y", 0.2).unwrap())
            .unwrap();
        let dup = noisy
            .extend(&ChannelKernel::identity(Var::new("E", 2), "E2"))
            .unwrap();
        let shared = noisy
            .mutual_info_overlapping(&["X", "E"], &["Y", "E"], &[] as &[&str])
            .unwrap();
        let copied = dup
            .mutual_info(&["X", "E"], &["Y", "E2"], &[] as &[&str])
            .unwrap();
        assert!((shared - copied).abs() < 1e-12);
    }

    #[test]
    fn markov_examples() {
        // X -> Y -> Z=X xor Y fails for independent uniform X, Y.
        let xy = uniform_bits();
        let xor = ChannelKernel::deterministic(
            vec![Var::new("X", 2), Var::new("Y", 2)],
            vec![Var::new("Z", 2)],
            |d| vec![d[0] ^ d[1]],
        )
        .unwrap();
        let p = xy.extend(&xor).unwrap();
        assert!(!p.markov_check(&["X"], &["Y"], &["Z"], 1e-12).unwrap());
        // Mutually independent variables form a chain in any order.
        let ind = JointPmf::independent(&[
            (Var::new("A", 2), vec![0.2, 0.8]),
            (Var::new("B", 3), vec![0.1, 0.3, 0.6]),
            (Var::new("C", 2), vec![0.5, 0.5]),
        ])
        .unwrap();
        assert!(ind.markov_check(&["A"], &["B"], &["C"], 1e-12).unwrap());
    }

    #[test]
    fn marginal_reorders_variables() {
        let p = JointPmf::new(
            vec![Var::new("A", 2), Var::new("B", 3)],
            vec![0.1, 0.2, 0.0, 0.3, 0.15, 0.25],
        )
        .unwrap();
        let m = p.marginal(&["B", "A"]).unwrap();
        assert_eq!(m.vars()[0].name, "B");
        let expect = [0.1, 0.3, 0.2, 0.15, 0.0, 0.25];
        for (a, b) in m.weights().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let b = p.marginal(&["B"]).unwrap();
        assert!((b.weights()[0] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }
}
