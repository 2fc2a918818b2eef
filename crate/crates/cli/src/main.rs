//! `zdnet`: rate regions, bounds and code simulation for layered networks.
//!
//! Exit codes: 0 success, 1 domain or verdict failure, 2 input error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use zdnet::channels::{blahut_arimoto, dmc_model, wen_model, BA_MAX_ITERS, BA_TOL};
use zdnet::prob::product_input_joint;
use zdnet::random::{random_marginals, stream_rng};
use zdnet::regions::{
    det_inner_region, dmc_region, dominance_falsifier, edge_capacities, verify_converse_chain, verify_det_identity,
    verify_wen_achievability, ConverseClass, CutRegion, DominancePlan, DominanceVerdict, SearchPlan,
};
use zdnet::simulator::{
    deterministic_trajectory_check, equivalence_oracle, error_probability, independence_check, run_code, RunMode,
};
use zdnet::specfile::{CodeFile, KernelFile, NetworkFile};
use zdnet::{Error, LayeredNetwork};

const LOG_NOTE: &str = "note: the alphabet size |X_i| in the erasure-network bound is read as log2|X_i| bits";

#[derive(Parser)]
#[command(name = "zdnet", version, about = "Rate regions and code simulation for layered networks with zero-delay nodes")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Class {
    Det,
    Dmc,
    Wen,
}

impl Class {
    fn name(self) -> &'static str {
        match self {
            Class::Det => "det",
            Class::Dmc => "dmc",
            Class::Wen => "wen",
        }
    }

    fn provenance(self) -> &'static str {
        match self {
            Class::Det => "cut-set region of a deterministic network dominated by product distributions (capacity region, delay-independent)",
            Class::Dmc => "min-cut region of a network of independent DMCs (capacity region, delay-independent)",
            Class::Wen => "min-cut region of a wireless erasure network with erasure side information at the destinations (capacity region, delay-independent)",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file and its optional delay profile.
    Validate { network: PathBuf },
    /// Compute the cut region of a network.
    Region {
        network: PathBuf,
        #[arg(long, value_enum)]
        class: Class,
        /// Weight vector for a scalarized optimum, comma separated, one entry per node (repeatable).
        #[arg(long)]
        weights: Vec<String>,
        /// Random starting distributions for the deterministic search.
        #[arg(long, default_value_t = 512)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Blahut-Arimoto tolerance in bits.
        #[arg(long, default_value_t = BA_TOL)]
        tol: f64,
    },
    /// Compare the achievable region with sampled outer-bound values.
    CompareBounds {
        network: PathBuf,
        #[arg(long, value_enum)]
        class: Class,
        /// Number of random input policies.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = BA_TOL)]
        tol: f64,
    },
    /// Run a block code, exactly or by Monte Carlo.
    Simulate {
        network: PathBuf,
        code: PathBuf,
        /// Monte Carlo sample count; exact enumeration when absent.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check that all transmitted and received symbols are functions of the messages.
        #[arg(long)]
        check_lemma1: bool,
        /// Check that the collapsed single-layer network behaves identically.
        #[arg(long)]
        check_theorem5: bool,
        /// Check within-slot independence of inputs and erasure patterns.
        #[arg(long)]
        check_independence: bool,
    },
    /// Capacity of a point-to-point channel.
    Capacity {
        kernel: PathBuf,
        #[arg(long, default_value_t = BA_TOL)]
        tol: f64,
    },
}

/// Command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. } | Error::IterationLimit { .. } | Error::Numerical(_) => 1,
            _ => 2,
        };
        let message = match &e {
            Error::Invalid(v) => {
                let mut s = String::from("network failed validation:");
                for x in v {
                    let _ = write!(s, "\n  {x}");
                }
                s
            }
            other => other.to_string(),
        };
        Failure { code, message }
    }
}

type CmdResult = Result<Report, Failure>;

/// Output of a command: machine form, table form and verdict.
struct Report {
    json: Value,
    table: String,
    ok: bool,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: 2,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn load_network(path: &Path) -> Result<(NetworkFile, LayeredNetwork), Failure> {
    let file = NetworkFile::parse(&read(path)?)?;
    let net = file.build()?;
    Ok((file, net))
}

fn parse_weights(raw: &[String], n: usize) -> Result<Vec<Vec<f64>>, Failure> {
    raw.iter()
        .map(|s| {
            let w = s
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| Failure {
                    code: 2,
                    message: format!("bad weight vector `{s}`: {e}"),
                })?;
            if w.len() != n {
                return Err(Failure {
                    code: 2,
                    message: format!("weight vector `{s}` has {} entries for {n} nodes", w.len()),
                });
            }
            Ok(w)
        })
        .collect()
}

fn default_weights(net: &LayeredNetwork) -> Vec<Vec<f64>> {
    let n = net.n_nodes();
    let v = net.sources();
    let mut out: Vec<Vec<f64>> = v
        .iter()
        .map(|i| (0..n).map(|k| if k == i { 1.0 } else { 0.0 }).collect())
        .collect();
    if v.len() > 1 {
        out.push((0..n).map(|k| if v.contains(k) { 1.0 } else { 0.0 }).collect());
    }
    out
}

fn fmt_f(x: f64) -> String {
    // round-off residue would otherwise print as -0.000000000
    let x = if x.abs() < 5e-10 { 0.0 } else { x };
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x:.9}")
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

/// Aligned table with a header row.
fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut s, header.to_vec());
    for r in rows {
        line(&mut s, r.iter().map(String::as_str).collect());
    }
    s
}

fn region_json(r: &CutRegion) -> Value {
    json!({
        "sources": r.sources.members(),
        "cuts": r.bounds.iter().map(|(t, c)| json!({
            "members": t.members(),
            "bound_bits_per_slot": c,
        })).collect::<Vec<_>>(),
    })
}

fn region_table(r: &CutRegion) -> String {
    let rows: Vec<Vec<String>> = r.bounds.iter().map(|(t, c)| vec![t.to_string(), fmt_f(*c)]).collect();
    table(&["cut T", "c(T) [bits/slot]"], &rows)
}

fn cmd_validate(path: &Path) -> CmdResult {
    let (file, net) = load_network(path)?;
    let n = net.n_nodes();
    let mut layers = Vec::with_capacity(n);
    for i in 0..n {
        layers.push(net.locate(i)?);
    }
    let profile = file.delay_profile()?;
    let mut table_s = format!(
        "network: {n} nodes, {} layers, {} channels\nsources {}  destinations {}\n",
        net.alpha(),
        net.model().name(),
        net.sources(),
        net.destinations()
    );
    let rows: Vec<Vec<String>> = layers
        .iter()
        .enumerate()
        .map(|(i, (h, m))| {
            vec![
                (i + 1).to_string(),
                h.to_string(),
                m.to_string(),
                if h > m { "yes".into() } else { "no".into() },
            ]
        })
        .collect();
    table_s.push_str(&table(&["node", "input layer", "output layer", "may be zero-delay"], &rows));
    let mut ok = true;
    let mut feasible = Value::Null;
    if let Some(b) = &profile {
        match net.check_feasible(b) {
            Ok(()) => {
                let _ = writeln!(table_s, "delay profile {b}: feasible");
                feasible = json!(true);
            }
            Err(e @ Error::Infeasible { .. }) => {
                let _ = writeln!(table_s, "delay profile {b}: {e}");
                feasible = json!(false);
                ok = false;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let _ = writeln!(table_s, "valid: {}", if ok { "yes" } else { "no" });
    let json = json!({
        "valid": true,
        "nodes": n,
        "layers": net.alpha(),
        "model": net.model().name(),
        "locations": layers.iter().map(|(h, m)| json!({"input_layer": h, "output_layer": m})).collect::<Vec<_>>(),
        "delay_profile": profile.as_ref().map(|b| b.as_slice().to_vec()),
        "feasible": feasible,
    });
    Ok(Report { json, table: table_s, ok })
}

fn cmd_region(path: &Path, class: Class, weights: &[String], samples: usize, seed: u64, tol: f64) -> CmdResult {
    let (_, net) = load_network(path)?;
    let n = net.n_nodes();
    let weights = if weights.is_empty() {
        default_weights(&net)
    } else {
        parse_weights(weights, n)?
    };
    let mut text = format!("class: {}\nprovenance: {}\n", class.name(), class.provenance());
    let mut json = json!({
        "class": class.name(),
        "provenance": class.provenance(),
        "units": "bits/slot",
    });
    let fixed_region = match class {
        Class::Det => {
            let plan = SearchPlan {
                samples,
                seed,
                ..SearchPlan::new(weights.clone())
            };
            let r = det_inner_region(&net, &plan)?;
            let _ = writeln!(text, "seed: {seed}\nsamples: {samples}");
            let mut optima = Vec::new();
            for o in &r.optima {
                let _ = writeln!(
                    text,
                    "\nweights {}: optimum {} bits/slot\n  rates {}\n  achieved at product input:",
                    fmt_vec(&o.weights),
                    fmt_f(o.value),
                    fmt_vec(&o.rates)
                );
                for (i, m) in o.marginals.iter().enumerate() {
                    let _ = writeln!(text, "    p(X{}) = {}", i + 1, fmt_vec(m));
                }
                text.push_str(&region_table(&o.region));
                optima.push(json!({
                    "weights": o.weights,
                    "value_bits_per_slot": o.value,
                    "rates": o.rates,
                    "marginals": o.marginals,
                    "region": region_json(&o.region),
                }));
            }
            json["seed"] = json!(seed);
            json["samples"] = json!(samples);
            json["optima"] = json!(optima);
            None
        }
        Class::Dmc => {
            let edges = dmc_model(&net)?;
            let caps = edge_capacities(edges, tol)?;
            let rows: Vec<Vec<String>> = caps
                .iter()
                .map(|((i, j), c)| vec![format!("({},{})", i + 1, j + 1), fmt_f(c.capacity)])
                .collect();
            text.push_str(&table(&["edge", "capacity [bits]"], &rows));
            json["edge_capacities"] = json!(caps
                .iter()
                .map(|((i, j), c)| json!({"from": i + 1, "to": j + 1, "capacity_bits": c.capacity, "input": c.input}))
                .collect::<Vec<_>>());
            Some(dmc_region(&net, edges, tol)?)
        }
        Class::Wen => {
            let (_, spec) = wen_model(&net)?;
            text.push_str(LOG_NOTE);
            text.push('\n');
            json["note"] = json!(LOG_NOTE);
            Some(zdnet::regions::wen_region(&net, spec)?)
        }
    };
    if let Some(r) = fixed_region {
        text.push_str(&region_table(&r));
        let mut optima = Vec::new();
        for w in &weights {
            let (v, rates) = r.max_weighted(w)?;
            let _ = writeln!(text, "weights {}: optimum {} bits/slot at rates {}", fmt_vec(w), fmt_f(v), fmt_vec(&rates));
            optima.push(json!({"weights": w, "value_bits_per_slot": if v.is_finite() { json!(v) } else { json!("inf") }, "rates": rates}));
        }
        json["region"] = region_json(&r);
        json["optima"] = json!(optima);
    }
    Ok(Report { json, table: text, ok: true })
}

fn cmd_compare(path: &Path, class: Class, samples: usize, seed: u64, tol: f64) -> CmdResult {
    let (_, net) = load_network(path)?;
    let mut text = format!("class: {}\nprovenance: {}\nseed: {seed}\npolicies: {samples}\n", class.name(), class.provenance());
    let mut json = json!({"class": class.name(), "provenance": class.provenance(), "seed": seed, "policies": samples, "units": "bits/slot"});
    let mut ok = true;
    match class {
        Class::Dmc | Class::Wen => {
            let cc = if class == Class::Dmc { ConverseClass::Dmc } else { ConverseClass::Wen };
            let rep = verify_converse_chain(cc, &net, samples, seed, tol)?;
            let rows: Vec<Vec<String>> = rep
                .rows
                .iter()
                .map(|r| vec![r.cut.to_string(), fmt_f(r.bound), fmt_f(r.sampled_sup), fmt_f(r.slack)])
                .collect();
            text.push_str(&table(&["cut T", "inner c(T)", "sampled outer sup", "slack"], &rows));
            let _ = writeln!(text, "worst slack: {} bits/slot", fmt_f(rep.worst_slack));
            ok &= rep.worst_slack >= -1e-9;
            json["converse"] = json!(rep.rows.iter().map(|r| json!({
                "members": r.cut.members(),
                "inner": r.bound, "sampled_outer_sup": r.sampled_sup, "slack": r.slack,
            })).collect::<Vec<_>>());
            json["worst_slack"] = json!(rep.worst_slack);
            if class == Class::Wen {
                let (_, spec) = wen_model(&net)?;
                let ach = verify_wen_achievability(&net, spec)?;
                let rows: Vec<Vec<String>> = ach
                    .rows
                    .iter()
                    .map(|r| vec![r.cut.to_string(), fmt_f(r.residual_entropy), fmt_f(r.nnc_value), fmt_f(r.bound)])
                    .collect();
                text.push_str("\nachievability at uniform inputs:\n");
                text.push_str(&table(&["cut T", "H(Y_T|X,Y_Tc)", "inner value", "c(T)"], &rows));
                text.push_str(LOG_NOTE);
                text.push('\n');
                ok &= ach.passed;
                json["achievability_passed"] = json!(ach.passed);
                json["note"] = json!(LOG_NOTE);
            }
        }
        Class::Det => {
            // Inner and outer values coincide at product inputs; check that
            // identity on random product inputs, then look for a correlated
            // input that beats every product input.
            let cuts = net.cuts()?;
            let mut worst = vec![0.0f64; cuts.len()];
            for s in 0..samples {
                let m = random_marginals(&net, &mut stream_rng(seed, s as u64));
                let p = product_input_joint(&net, &m)?;
                for (w, t) in worst.iter_mut().zip(&cuts) {
                    *w = w.max(verify_det_identity(&net, &p, *t)?);
                }
            }
            let rows: Vec<Vec<String>> = cuts.iter().zip(&worst).map(|(t, w)| vec![t.to_string(), format!("{w:.3e}")]).collect();
            text.push_str(&table(&["cut T", "max |inner - outer| at product inputs"], &rows));
            let dev = worst.iter().copied().fold(0.0, f64::max);
            ok &= dev <= 1e-9;
            let plan = DominancePlan { seed, ..DominancePlan::default() };
            let dom = dominance_falsifier(&net, &plan)?;
            let verdict = match &dom.verdict {
                DominanceVerdict::NoViolationFound => "no violation found".to_string(),
                DominanceVerdict::Violation { cut, gap, .. } => {
                    ok = false;
                    format!("violation on cut {cut} with gap {gap:.3e} bits")
                }
            };
            let _ = writeln!(
                text,
                "dominance by product distributions ({} samples x {} ascent steps): {verdict} (not a proof)",
                dom.samples, dom.ascent_steps
            );
            json["identity_deviation"] = json!(dev);
            json["dominance"] = serde_json::to_value(&dom).expect("serializable");
            json["dominance_note"] = json!("not a proof");
        }
    }
    let _ = writeln!(text, "verdict: {}", if ok { "pass" } else { "fail" });
    json["passed"] = json!(ok);
    Ok(Report { json, table: text, ok })
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    net_path: &Path,
    code_path: &Path,
    samples: Option<usize>,
    seed: u64,
    determinism: bool,
    equivalence: bool,
    independence: bool,
) -> CmdResult {
    let (_, net) = load_network(net_path)?;
    let code = CodeFile::parse(&read(code_path)?)?.build(&net)?;
    let mode = match samples {
        Some(s) => RunMode::MonteCarlo { samples: s, seed },
        None => RunMode::Exact,
    };
    let traj = run_code(&net, &code, mode)?;
    let est = error_probability(&net, &traj, &code)?;
    let rates = code.rates();
    let mut text = format!("blocklength n = {}, delay profile {}\n", code.n, code.profile);
    let mut json = json!({
        "n": code.n,
        "profile": code.profile.as_slice(),
        "rates_bits_per_slot": rates,
        "error": est,
    });
    if est.exact {
        let _ = writeln!(text, "error probability (exact): {}", fmt_f(est.probability));
    } else {
        let (lo, hi) = est.interval.expect("Monte Carlo interval");
        let _ = writeln!(
            text,
            "seed: {seed}\nerror probability (Monte Carlo, {} samples): {} [95% Wilson interval {}, {}]",
            est.samples.unwrap_or(0),
            fmt_f(est.probability),
            fmt_f(lo),
            fmt_f(hi)
        );
        json["seed"] = json!(seed);
    }
    for i in net.sources().iter() {
        let _ = writeln!(text, "rate of node {}: {} bits/slot", i + 1, fmt_f(rates[i]));
    }
    let mut ok = true;
    if determinism {
        let pass = deterministic_trajectory_check(&net, &code)?;
        let _ = writeln!(text, "symbols determined by messages: {}", if pass { "pass" } else { "fail" });
        json["symbols_determined_by_messages"] = json!(pass);
        ok &= pass;
    }
    if equivalence {
        let d = equivalence_oracle(&net, &code)?;
        let _ = writeln!(text, "collapsed-network distance: {d:.3e}");
        json["collapsed_distance"] = json!(d);
        ok &= d <= 1e-9;
    }
    if independence {
        let exact = if traj.exact { traj.clone() } else { run_code(&net, &code, RunMode::Exact)? };
        let mut worst = 0.0f64;
        for k in 1..=code.n {
            worst = worst.max(independence_check(&net, &exact, k)?);
        }
        let _ = writeln!(text, "input/erasure independence deviation: {worst:.3e}");
        json["independence_deviation"] = json!(worst);
        ok &= worst <= 1e-9;
    }
    Ok(Report { json, table: text, ok })
}

fn cmd_capacity(path: &Path, tol: f64) -> CmdResult {
    let k = KernelFile::parse(&read(path)?)?.build()?;
    let c = blahut_arimoto(&k, tol, BA_MAX_ITERS)?;
    let text = format!(
        "capacity: {} bits\nbracket: [{}, {}]\niterations: {}\noptimal input: {}\n",
        fmt_f(c.capacity),
        fmt_f(c.lower),
        fmt_f(c.upper),
        c.iterations,
        fmt_vec(&c.input)
    );
    let json = json!({"capacity_bits": c.capacity, "lower": c.lower, "upper": c.upper, "iterations": c.iterations, "input": c.input});
    Ok(Report { json, table: text, ok: true })
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("ZDNET_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| Failure {
            code: 2,
            message: format!("ZDNET_THREADS must be a positive integer, found `{v}`"),
        })?;
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Validate { network } => cmd_validate(network),
        Command::Region {
            network,
            class,
            weights,
            samples,
            seed,
            tol,
        } => cmd_region(network, *class, weights, *samples, *seed, *tol),
        Command::CompareBounds {
            network,
            class,
            samples,
            seed,
            tol,
        } => cmd_compare(network, *class, *samples, *seed, *tol),
        Command::Simulate {
            network,
            code,
            samples,
            seed,
            check_lemma1,
            check_theorem5,
            check_independence,
        } => cmd_simulate(network, code, *samples, *seed, *check_lemma1, *check_theorem5, *check_independence),
        Command::Capacity { kernel, tol } => cmd_capacity(kernel, *tol),
    });
    match result {
        Ok(r) => {
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&r.json).expect("serializable")),
                Format::Table => print!("{}", r.table),
            }
            if r.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_parse_and_check_length() {
        assert_eq!(parse_weights(&["1, 0,0.5".into()], 3).ok().unwrap(), vec![vec![1.0, 0.0, 0.5]]);
        assert_eq!(parse_weights(&["1,0".into()], 3).err().unwrap().code, 2);
        assert_eq!(parse_weights(&["1,x,0".into()], 3).err().unwrap().code, 2);
    }

    #[test]
    fn tables_are_aligned() {
        let t = table(&["a", "bb"], &[vec!["ccc".into(), "d".into()]]);
        assert_eq!(t, "a    bb\nccc  d\n");
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(Failure::from(Error::Infeasible { node: 1, h: 1, m: 1 }).code, 1);
        assert_eq!(Failure::from(Error::Class("x".into())).code, 2);
    }
}
