use std::collections::HashSet;

use crate::error::{Error, Result};

use super::{decode_index, encode_index, outcome_count, Var, NORMALIZATION_TOL};

/// Conditional pmf `q(outputs | inputs)` stored as a row-stochastic table.
///
/// Rows are indexed by the input tuple and columns by the output tuple, both
/// in mixed radix with the last variable fastest.  A kernel with no inputs is
/// a single-row distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelKernel {
    inputs: Vec<Var>,
    outputs: Vec<Var>,
    table: Vec<f64>,
}

impl ChannelKernel {
    pub fn new(inputs: Vec<Var>, outputs: Vec<Var>, table: Vec<f64>) -> Result<Self> {
        let mut seen = HashSet::new();
        for v in inputs.iter().chain(&outputs) {
            if v.size == 0 {
                return Err(Error::Distribution(format!("variable `{}` has an empty alphabet", v.name)));
            }
            if !seen.insert(v.name.as_str()) {
                return Err(Error::Distribution(format!("variable `{}` appears twice", v.name)));
            }
        }
        let rows = outcome_count(&inputs)?;
        let cols = outcome_count(&outputs)?;
        if table.len() != rows * cols {
            return Err(Error::Structure(format!(
                "kernel table has {} entries, expected {rows} x {cols}",
                table.len()
            )));
        }
        let k = Self {
            inputs,
            outputs,
            table,
        };
        if let Some(msg) = k.row_problems().into_iter().next() {
            return Err(Error::Distribution(msg));
        }
        Ok(k)
    }

    /// Builds a kernel without checking row sums; used by the validator to
    /// report non-stochastic rows as data.
    pub fn new_unchecked(inputs: Vec<Var>, outputs: Vec<Var>, table: Vec<f64>) -> Result<Self> {
        let rows = outcome_count(&inputs)?;
        let cols = outcome_count(&outputs)?;
        if table.len() != rows * cols {
            return Err(Error::Structure(format!(
                "kernel table has {} entries, expected {rows} x {cols}",
                table.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            table,
        })
    }

    /// Describes every row that is negative or does not sum to one.
    pub fn row_problems(&self) -> Vec<String> {
        let cols = self.cols();
        let mut out = Vec::new();
        for (r, row) in self.table.chunks(cols).enumerate() {
            if row.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
                out.push(format!("row {r} has a negative or non-finite entry"));
                continue;
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                out.push(format!("non-stochastic row {r} (sums to {s})"));
            }
        }
        out
    }

    /// Kernel whose output is the deterministic function `f` of the input digits.
    pub fn deterministic<F>(inputs: Vec<Var>, outputs: Vec<Var>, f: F) -> Result<Self>
    where
        F: Fn(&[usize]) -> Vec<usize>,
    {
        let rows = outcome_count(&inputs)?;
        let cols = outcome_count(&outputs)?;
        let in_sizes: Vec<usize> = inputs.iter().map(|v| v.size).collect();
        let out_sizes: Vec<usize> = outputs.iter().map(|v| v.size).collect();
        let mut table = vec![0.0; rows * cols];
        let mut digits = vec![0usize; in_sizes.len()];
        for r in 0..rows {
            decode_index(r, &in_sizes, &mut digits);
            let y = f(&digits);
            if y.len() != out_sizes.len() || y.iter().zip(&out_sizes).any(|(a, b)| a >= b) {
                return Err(Error::Structure(format!("deterministic map produced {y:?} out of range")));
            }
            table[r * cols + encode_index(&y, &out_sizes)] = 1.0;
        }
        Self::new(inputs, outputs, table)
    }

    /// `out = input` with a renamed copy.
    pub fn identity(input: Var, out_name: impl Into<String>) -> Self {
        let out = Var::new(out_name, input.size);
        Self::deterministic(vec![input], vec![out], |d| vec![d[0]]).expect("identity kernel is valid")
    }

    /// Binary symmetric channel with crossover `eps`.
    pub fn bsc(input: &str, output: &str, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Argument(format!("crossover probability {eps} outside [0, 1]")));
        }
        Self::new(
            vec![Var::new(input, 2)],
            vec![Var::new(output, 2)],
            vec![1.0 - eps, eps, eps, 1.0 - eps],
        )
    }

    /// Erasure channel on `size` symbols; the erasure symbol is the last index `size`.
    pub fn erasure(input: &str, output: &str, size: usize, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Argument(format!("erasure probability {eps} outside [0, 1]")));
        }
        if size == 0 {
            return Err(Error::Argument("erasure channel needs a nonempty alphabet".into()));
        }
        let cols = size + 1;
        let mut table = vec![0.0; size * cols];
        for x in 0..size {
            table[x * cols + x] = 1.0 - eps;
            table[x * cols + size] = eps;
        }
        Self::new(vec![Var::new(input, size)], vec![Var::new(output, cols)], table)
    }

    /// Renames every variable through `f`.
    pub fn renamed<F: Fn(&str) -> String>(&self, f: F) -> Result<Self> {
        let re = |vs: &[Var]| vs.iter().map(|v| Var::new(f(&v.name), v.size)).collect();
        Self::new(re(&self.inputs), re(&self.outputs), self.table.clone())
    }

    /// Product of kernels with disjoint outputs.
    ///
    /// The inputs of the result are the union of the factors' inputs, in order
    /// of first appearance; the outputs are concatenated.
    pub fn product(factors: &[ChannelKernel]) -> Result<Self> {
        let mut inputs: Vec<Var> = Vec::new();
        let mut outputs: Vec<Var> = Vec::new();
        for k in factors {
            for v in &k.inputs {
                match inputs.iter().find(|u| u.name == v.name) {
                    Some(u) if u.size != v.size => {
                        return Err(Error::Structure(format!("input `{}` used with two sizes", v.name)))
                    }
                    Some(_) => {}
                    None => inputs.push(v.clone()),
                }
            }
            outputs.extend(k.outputs.iter().cloned());
        }
        let rows = outcome_count(&inputs)?;
        let cols = outcome_count(&outputs)?;
        let in_sizes: Vec<usize> = inputs.iter().map(|v| v.size).collect();
        let maps: Vec<Vec<usize>> = factors
            .iter()
            .map(|k| {
                k.inputs
                    .iter()
                    .map(|v| inputs.iter().position(|u| u.name == v.name).unwrap())
                    .collect()
            })
            .collect();
        let mut table = Vec::with_capacity(rows * cols);
        let mut digits = vec![0usize; in_sizes.len()];
        for r in 0..rows {
            decode_index(r, &in_sizes, &mut digits);
            let mut row = vec![1.0];
            for (k, map) in factors.iter().zip(&maps) {
                let sub: Vec<usize> = map.iter().map(|&p| digits[p]).collect();
                let kr = k.row(encode_index(&sub, &k.input_sizes()));
                let mut next = Vec::with_capacity(row.len() * kr.len());
                for a in &row {
                    for b in kr {
                        next.push(a * b);
                    }
                }
                row = next;
            }
            table.extend(row);
        }
        Self::new(inputs, outputs, table)
    }

    /// Sequential composition `k(o1, o2 | i) = self(o1 | i1) next(o2 | i2)`.
    ///
    /// `next` may read the inputs and the outputs of `self`; any other input
    /// of `next` becomes an extra input of the result.
    pub fn chain(&self, next: &ChannelKernel) -> Result<Self> {
        let mut inputs = self.inputs.clone();
        for v in &next.inputs {
            let known = self.outputs.iter().chain(&inputs).any(|u| u.name == v.name);
            if !known {
                inputs.push(v.clone());
            }
        }
        let mut outputs = self.outputs.clone();
        outputs.extend(next.outputs.iter().cloned());
        let rows = outcome_count(&inputs)?;
        let (c1, c2) = (self.cols(), next.cols());
        let in_sizes: Vec<usize> = inputs.iter().map(|v| v.size).collect();
        let o1_sizes = self.output_sizes();
        // source of each input of `next`: (true, k) = output k of self, (false, k) = input k
        let src: Vec<(bool, usize)> = next
            .inputs
            .iter()
            .map(|v| match self.outputs.iter().position(|u| u.name == v.name) {
                Some(k) => (true, k),
                None => (false, inputs.iter().position(|u| u.name == v.name).unwrap()),
            })
            .collect();
        let n_own = self.inputs.len();
        let mut table = vec![0.0; rows * c1 * c2];
        let mut di = vec![0usize; in_sizes.len()];
        let mut d1 = vec![0usize; o1_sizes.len()];
        let mut d2 = vec![0usize; src.len()];
        let next_sizes = next.input_sizes();
        for r in 0..rows {
            decode_index(r, &in_sizes, &mut di);
            let r1 = encode_index(&di[..n_own], &in_sizes[..n_own]);
            for (a, &w) in self.row(r1).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                decode_index(a, &o1_sizes, &mut d1);
                for (k, &(out, p)) in src.iter().enumerate() {
                    d2[k] = if out { d1[p] } else { di[p] };
                }
                let r2 = encode_index(&d2, &next_sizes);
                let base = (r * c1 + a) * c2;
                for (b, &q) in next.row(r2).iter().enumerate() {
                    table[base + b] = w * q;
                }
            }
        }
        Self::new(inputs, outputs, table)
    }

    pub fn inputs(&self) -> &[Var] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Var] {
        &self.outputs
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn input_sizes(&self) -> Vec<usize> {
        self.inputs.iter().map(|v| v.size).collect()
    }

    pub fn output_sizes(&self) -> Vec<usize> {
        self.outputs.iter().map(|v| v.size).collect()
    }

    pub fn rows(&self) -> usize {
        self.table.len() / self.cols()
    }

    pub fn cols(&self) -> usize {
        self.outputs.iter().map(|v| v.size).product()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.table[r * c..(r + 1) * c]
    }

    /// True iff every row has an entry of at least `1 - tol`.
    pub fn is_deterministic(&self, tol: f64) -> bool {
        self.table
            .chunks(self.cols())
            .all(|row| row.iter().any(|&w| w >= 1.0 - tol))
    }

    /// For a deterministic kernel, the output column chosen by each row.
    pub fn deterministic_map(&self, tol: f64) -> Option<Vec<usize>> {
        self.table
            .chunks(self.cols())
            .map(|row| row.iter().position(|&w| w >= 1.0 - tol))
            .collect()
    }
}
