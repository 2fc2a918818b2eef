use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::network::LayeredNetwork;

use super::{ChannelKernel, JointPmf};

/// A pmf over the tuple `X_i` of one node, in the node's atom order.
pub type Pmf = Vec<f64>;

/// Builds `p(X_I, Y_I) = ∏_h p(X_{S_h} | X_{S^{h-1}}, Y_{G^{h-1}}) q^{(h)}`.
///
/// `policies[h-1]` must output exactly the input atoms of `S_h` and may read
/// any subset of `X_{S^{h-1}}` and `Y_{G^{h-1}}`.
pub fn factorize_joint(net: &LayeredNetwork, policies: &[ChannelKernel]) -> Result<JointPmf> {
    factorize_prefix(net, policies, net.alpha())
}

/// The joint over the first `layers` layers, i.e. `(X_{S^h}, Y_{G^h})` for `h = layers`.
pub fn factorize_prefix(net: &LayeredNetwork, policies: &[ChannelKernel], layers: usize) -> Result<JointPmf> {
    if policies.len() != net.alpha() {
        return Err(Error::Structure(format!(
            "{} policies supplied for {} layers",
            policies.len(),
            net.alpha()
        )));
    }
    let mut joint = JointPmf::unit();
    for h in 1..=layers.min(net.alpha()) {
        check_policy(net, h, &policies[h - 1])?;
        joint = joint.extend(&policies[h - 1])?;
        joint = joint.extend(net.channel(h))?;
    }
    Ok(joint)
}

fn check_policy(net: &LayeredNetwork, h: usize, k: &ChannelKernel) -> Result<()> {
    let want: HashMap<String, usize> = net
        .x_vars(net.s(h))
        .into_iter()
        .map(|v| (v.name, v.size))
        .collect();
    let got: HashMap<String, usize> = k.outputs().iter().map(|v| (v.name.clone(), v.size)).collect();
    if want != got {
        return Err(Error::Structure(format!(
            "policy for layer {h} must output exactly the inputs of S_{h}"
        )));
    }
    let mut allowed: HashMap<String, usize> = net
        .x_vars(net.s_upto(h - 1))
        .into_iter()
        .map(|v| (v.name, v.size))
        .collect();
    for i in net.g_upto(h - 1).iter() {
        for v in net.own_y_atoms(i) {
            allowed.insert(v.name.clone(), v.size);
        }
    }
    for v in k.inputs() {
        if allowed.get(&v.name) != Some(&v.size) {
            return Err(Error::Structure(format!(
                "policy for layer {h} reads `{}`, which is not available before that layer",
                v.name
            )));
        }
    }
    Ok(())
}

/// Policy for layer `h` drawing each node of `S_h` independently from its marginal.
pub fn product_policy(net: &LayeredNetwork, h: usize, marginals: &[Pmf]) -> Result<ChannelKernel> {
    let factors = net
        .s(h)
        .iter()
        .map(|i| ChannelKernel::new(vec![], net.x_atoms(i).to_vec(), marginals[i].clone()))
        .collect::<Result<Vec<_>>>()?;
    ChannelKernel::product(&factors)
}

/// The joint `(∏_i p_{X_i}) ∏_h q^{(h)}` for one marginal per node.
pub fn product_input_joint(net: &LayeredNetwork, marginals: &[Pmf]) -> Result<JointPmf> {
    if marginals.len() != net.n_nodes() {
        return Err(Error::Structure(format!(
            "{} marginals supplied for {} nodes",
            marginals.len(),
            net.n_nodes()
        )));
    }
    for (i, m) in marginals.iter().enumerate() {
        if m.len() != net.input_alphabet(i) {
            return Err(Error::Structure(format!(
                "marginal of node {} has {} entries, alphabet has {}",
                i + 1,
                m.len(),
                net.input_alphabet(i)
            )));
        }
    }
    let policies = (1..=net.alpha())
        .map(|h| product_policy(net, h, marginals))
        .collect::<Result<Vec<_>>>()?;
    factorize_joint(net, &policies)
}
