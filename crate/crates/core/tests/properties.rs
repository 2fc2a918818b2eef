use std::collections::BTreeMap;

use proptest::prelude::*;

use zdnet::channels::{
    assemble_dmc_layer, assemble_dmc_network, assemble_wen_network, blahut_arimoto, dmc_model, network_erasure_pmf,
    wen_chi_kernel, wen_model, EdgeChannelSet, ErasureSpec, BA_MAX_ITERS, BA_TOL,
};
use zdnet::examples;
use zdnet::prob::{
    binary_entropy, decode_index, factorize_joint, factorize_prefix, product_input_joint, ChannelKernel, JointPmf, Var,
};
use zdnet::random::{
    random_code, random_deterministic_network, random_feasible_profile, random_kernel, random_marginals,
    random_policies, stream_rng,
};
use zdnet::regions::{det_inner_region, dmc_region, wen_region, SearchPlan};
use zdnet::simulator::{run_code, scheduling_check, RunMode};
use zdnet::specfile::CodeFile;
use zdnet::{DelayProfile, NodeSet};

/// Joint pmf over `sizes` from raw nonnegative weights, with some exact zeros.
fn joint(sizes: &[usize], raw: &[f64]) -> JointPmf {
    let vars: Vec<Var> = sizes.iter().enumerate().map(|(i, &s)| Var::new(format!("V{i}"), s)).collect();
    let total: usize = sizes.iter().product();
    let mut w: Vec<f64> = (0..total).map(|k| if raw[k] < 0.2 { 0.0 } else { raw[k] }).collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    JointPmf::new(vars, w.iter().map(|x| x / s).collect()).unwrap()
}

fn sizes_and_weights() -> impl Strategy<Value = (Vec<usize>, Vec<f64>)> {
    prop::collection::vec(1usize..=3, 3..=4)
        .prop_flat_map(|sizes| {
            let total: usize = sizes.iter().product();
            (Just(sizes), prop::collection::vec(0.0f64..1.0, total))
        })
}

proptest! {
    #[test]
    fn chain_rule((sizes, raw) in sizes_and_weights()) {
        let p = joint(&sizes, &raw);
        let (a, b, c) = (["V0"], ["V1"], ["V2"]);
        let lhs = p.entropy(&["V0", "V1"], &c).unwrap();
        let rhs = p.entropy(&a, &c).unwrap() + p.entropy(&b, &["V0", "V2"]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn information_is_nonnegative((sizes, raw) in sizes_and_weights()) {
        let p = joint(&sizes, &raw);
        prop_assert!(p.entropy(&["V0"], &["V1", "V2"]).unwrap() >= 0.0);
        prop_assert!(p.mutual_info(&["V0"], &["V1"], &["V2"]).unwrap() >= 0.0);
        prop_assert!(p.mutual_info(&["V0", "V2"], &["V1"], &[] as &[&str]).unwrap() >= 0.0);
    }

    #[test]
    fn factorize_prefix_is_a_marginal(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let net = random_deterministic_network(&mut rng, 3, 2).unwrap();
        let det = seed % 2 == 0;
        let policies = random_policies(&net, &mut rng, det).unwrap();
        let full = factorize_joint(&net, &policies).unwrap();
        let prefix = factorize_prefix(&net, &policies, 1).unwrap();
        let names: Vec<String> = prefix.vars().iter().map(|v| v.name.clone()).collect();
        let m = full.marginal(&names).unwrap();
        prop_assert!(m.weights().iter().zip(prefix.weights()).all(|(a, b)| (a - b).abs() <= 1e-12));
    }

    #[test]
    fn feasibility_is_monotone(seed in any::<u64>(), mask in any::<u32>(), extra in any::<u32>()) {
        let mut rng = stream_rng(seed, 1);
        let n = 2 + (seed % 3) as usize;
        let net = random_deterministic_network(&mut rng, n, 1 + (seed % 3) as usize).unwrap();
        prop_assert!(net.is_feasible(&DelayProfile::all_ones(n)).unwrap());
        let b = DelayProfile::from_mask(n, mask);
        let b2 = DelayProfile::from_mask(n, mask | extra);
        if net.is_feasible(&b).unwrap() {
            prop_assert!(net.is_feasible(&b2).unwrap());
        }
    }

    #[test]
    fn cuts_match_brute_force(n in 1usize..=10, d in any::<u32>()) {
        let full = (1u32 << n) - 1;
        let d = NodeSet((d & full).max(1));
        let net = examples::identity_network(&vec![1; n], d);
        let cuts = net.cuts().unwrap();
        let mut brute = Vec::new();
        for t in 0..=full {
            if (0..n).any(|i| t >> i & 1 == 0 && d.contains(i)) {
                brute.push(NodeSet(t));
            }
        }
        prop_assert_eq!(cuts, brute);
    }

    #[test]
    fn blahut_arimoto_matches_closed_forms(p in 0.0f64..=1.0, e in 0.0f64..=1.0) {
        let bsc = blahut_arimoto(&ChannelKernel::bsc("X", "Y", p).unwrap(), BA_TOL, BA_MAX_ITERS).unwrap();
        prop_assert!((bsc.capacity - (1.0 - binary_entropy(p))).abs() <= 1e-8);
        let bec = blahut_arimoto(&ChannelKernel::erasure("X", "Y", 3, e).unwrap(), BA_TOL, BA_MAX_ITERS).unwrap();
        prop_assert!((bec.capacity - (1.0 - e) * 3f64.log2()).abs() <= 1e-8);
    }

    #[test]
    fn blahut_arimoto_beats_uniform_input(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 2);
        let k = random_kernel(&mut rng, vec![Var::new("X", 3)], vec![Var::new("Y", 4)], false).unwrap();
        let c = blahut_arimoto(&k, BA_TOL, BA_MAX_ITERS).unwrap();
        let u = JointPmf::independent(&[(Var::new("X", 3), vec![1.0 / 3.0; 3])]).unwrap().extend(&k).unwrap();
        let i = u.mutual_info(&["X"], &["Y"], &[] as &[&str]).unwrap();
        prop_assert!(c.capacity >= i - BA_TOL);
        prop_assert!(c.upper - c.lower <= BA_TOL);
    }

    #[test]
    fn dmc_layer_is_the_product_of_edges(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 3);
        let mut edges = BTreeMap::new();
        for (e, &(i, j)) in [(0usize, 1usize), (0, 2), (1, 2)].iter().enumerate() {
            let k = random_kernel(&mut rng, vec![Var::new("X", 2 + e % 2)], vec![Var::new("Y", 2 + (e + 1) % 2)], false).unwrap();
            edges.insert((i, j), k);
        }
        let set = EdgeChannelSet::new(edges.clone()).unwrap();
        let net = assemble_dmc_network(
            examples::fig2_input_partition(),
            examples::fig2_output_partition(),
            set.clone(),
            NodeSet::singleton(0),
            NodeSet::singleton(2),
        ).unwrap();
        for h in 1..=2 {
            let k = assemble_dmc_layer(&net, &set, h).unwrap();
            let (isz, osz) = (k.input_sizes(), k.output_sizes());
            let mut a = vec![0; isz.len()];
            let mut b = vec![0; osz.len()];
            for r in 0..k.rows() {
                decode_index(r, &isz, &mut a);
                for c in 0..k.cols() {
                    decode_index(c, &osz, &mut b);
                    let value = |name: &str, vars: &[Var], d: &[usize]| vars.iter().position(|v| v.name == name).map(|p| d[p]);
                    let mut want = 1.0;
                    for (&(i, j), q) in &edges {
                        if !net.g(h).contains(j) {
                            continue;
                        }
                        let x = value(&format!("X{}_{}", i + 1, j + 1), k.inputs(), &a).unwrap();
                        let y = value(&format!("Y{}_{}", i + 1, j + 1), k.outputs(), &b).unwrap();
                        want *= q.row(x)[y];
                    }
                    prop_assert!((k.row(r)[c] - want).abs() <= 1e-15);
                }
            }
        }
    }

    #[test]
    fn detected_regions_are_monotone_in_effort(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 4);
        let net = random_deterministic_network(&mut rng, 3, 2).unwrap();
        let w: Vec<f64> = (0..3).map(|i| if net.sources().contains(i) { 1.0 + i as f64 } else { 0.0 }).collect();
        let mut plan = SearchPlan::new(vec![w]);
        plan.seed = seed;
        plan.samples = 4;
        let small = det_inner_region(&net, &plan).unwrap().optima[0].value;
        plan.samples = 12;
        let large = det_inner_region(&net, &plan).unwrap().optima[0].value;
        prop_assert!(large >= small);
    }

    #[test]
    fn scheduling_is_sound(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 5);
        let net = random_deterministic_network(&mut rng, 3, 2).unwrap();
        let net = zdnet::simulator::with_noisy_layer(&net, 1 + (seed % 2) as usize, 0.2).unwrap();
        let b = random_feasible_profile(&net, &mut rng).unwrap();
        let code = random_code(&net, &mut rng, 2, b, 2).unwrap();
        let traj = run_code(&net, &code, RunMode::Exact).unwrap();
        prop_assert!(scheduling_check(&net, &traj).unwrap() <= 1e-9);
        let again = CodeFile::from_code(&code).build(&net).unwrap();
        prop_assert_eq!(again, code);
    }

    #[test]
    fn class_regions_are_nonnegative(e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0, p in 0.0f64..=0.5) {
        let net = examples::figure4(e1);
        let spec = ErasureSpec::uniform([(0, 1), (0, 2), (1, 2)], e2).unwrap();
        let net2 = assemble_wen_network(&[2, 3, 2], &spec, examples::fig2_input_partition(), examples::fig2_output_partition(), NodeSet::singleton(0), NodeSet::singleton(2)).unwrap();
        let dmc = examples::figure3(p);
        let regions = [
            wen_region(&net, wen_model(&net).unwrap().1).unwrap(),
            wen_region(&net2, wen_model(&net2).unwrap().1).unwrap(),
            dmc_region(&dmc, dmc_model(&dmc).unwrap(), BA_TOL).unwrap(),
        ];
        for r in &regions {
            prop_assert_eq!(r.bound(NodeSet::EMPTY), Some(0.0));
            prop_assert!(r.bounds.iter().all(|(_, c)| *c >= 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn markov_factorization(r in prop::collection::vec(0.0f64..1.0, 4), q in prop::collection::vec(0.0f64..1.0, 2)) {
        let s: f64 = r.iter().sum::<f64>().max(1e-12);
        let w: Vec<f64> = if s > 1e-12 { r.iter().map(|x| x / s).collect() } else { vec![0.25; 4] };
        let rxy = JointPmf::new(vec![Var::new("X", 2), Var::new("Y", 2)], w).unwrap();
        let table = vec![q[0], 1.0 - q[0], q[1], 1.0 - q[1]];
        let kernel = ChannelKernel::new(vec![Var::new("Y", 2)], vec![Var::new("Z", 2)], table.clone()).unwrap();
        let p = rxy.extend(&kernel).unwrap();
        prop_assert!(p.markov_check(&["X"], &["Y"], &["Z"], 1e-9).unwrap());
        for (y, row) in p.conditional(&["Z"], &["Y"]).unwrap().iter().enumerate() {
            if let Some(row) = row {
                prop_assert!((row[0] - table[2 * y]).abs() <= 1e-9);
                prop_assert!((row[1] - table[2 * y + 1]).abs() <= 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn erasures_are_independent_of_product_inputs(seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 6);
        let net = examples::figure4(0.5);
        let marginals = random_marginals(&net, &mut rng);
        let p = product_input_joint(&net, &marginals).unwrap();
        let e = network_erasure_pmf(&net).unwrap();
        let names: Vec<String> = e.vars().iter().map(|v| v.name.clone()).collect();
        let m = p.marginal(&names).unwrap();
        prop_assert!(m.weights().iter().zip(e.weights()).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
}

#[test]
fn erasure_pattern_is_a_function_of_edge_outputs() {
    let net = examples::figure4(0.3);
    assert!(wen_chi_kernel(&net).unwrap().is_deterministic(0.0));
}
