mod common;

use std::collections::BTreeMap;

use dqbn_core::{
    case_study, exact_posterior, joint_probability, propagate_transition, DiscreteNetwork,
    Distribution, Evidence, NodeSpec, TransitionModel,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn names(net: &DiscreteNetwork) -> Vec<String> {
    net.nodes().iter().map(|n| n.name.clone()).collect()
}

/// Same network, nodes listed in another random topological order.
fn reorder(net: &DiscreteNetwork, rng: &mut rand_chacha::ChaCha20Rng) -> DiscreteNetwork {
    let mut left: Vec<NodeSpec> = net.nodes().to_vec();
    let mut placed: Vec<NodeSpec> = Vec::new();
    while !left.is_empty() {
        let ready: Vec<usize> = (0..left.len())
            .filter(|&i| {
                left[i]
                    .parents
                    .iter()
                    .all(|p| placed.iter().any(|n| &n.name == p))
            })
            .collect();
        let pick = *ready.choose(rng).unwrap();
        placed.push(left.remove(pick));
    }
    let mut out = DiscreteNetwork::new(placed);
    for n in net.nodes() {
        out = out.with_role(&n.name, net.role(&n.name).unwrap());
    }
    out
}

/// Renames the states of node `j` by `perm` (old state s becomes perm[s]),
/// rewriting its own CPT and every child row that conditions on it.
fn permute_states(net: &DiscreteNetwork, j: usize, perm: &[usize]) -> DiscreteNetwork {
    let nodes = net.nodes();
    let name = &nodes[j].name;
    let card = |p: &String| nodes.iter().find(|n| &n.name == p).unwrap().num_states();
    let mut out = Vec::new();
    for (i, node) in nodes.iter().enumerate() {
        let mut node = node.clone();
        if i == j {
            for row in &mut node.cpt {
                let mut new = vec![0.0; row.len()];
                for (s, &p) in row.iter().enumerate() {
                    new[perm[s]] = p;
                }
                *row = new;
            }
        }
        if let Some(pos) = node.parents.iter().position(|p| p == name) {
            let cards: Vec<usize> = node.parents.iter().map(card).collect();
            let mut rows = node.cpt.clone();
            for (r, old) in node.cpt.iter().enumerate() {
                // decode row index, relabel the permuted parent, re-encode
                let mut digits = vec![0; cards.len()];
                let mut rest = r;
                for k in (0..cards.len()).rev() {
                    digits[k] = rest % cards[k];
                    rest /= cards[k];
                }
                digits[pos] = perm[digits[pos]];
                let target = digits.iter().zip(&cards).fold(0, |acc, (d, c)| acc * c + d);
                rows[target] = old.clone();
            }
            node.cpt = rows;
        }
        out.push(node);
    }
    let mut relabeled = DiscreteNetwork::new(out);
    for n in nodes {
        relabeled = relabeled.with_role(&n.name, net.role(&n.name).unwrap());
    }
    relabeled
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn joint_sums_to_one(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = common::random_network(&mut rng, 5, 3).validated().unwrap();
        let names = names(&net);
        let total: f64 = common::assignments(&common::card(&net))
            .iter()
            .map(|a| {
                let m: BTreeMap<String, usize> = names.iter().cloned().zip(a.iter().copied()).collect();
                joint_probability(&net, &m).unwrap()
            })
            .sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_evidence_posterior_is_brute_force_marginal(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = common::random_network(&mut rng, 5, 3).validated().unwrap();
        let target = rng.gen_range(0..net.len());
        let got = exact_posterior(&net, &net.nodes()[target].name, &Evidence::new()).unwrap();
        let want = common::oracle_posterior(&net, target, &[]);
        for (g, w) in got.probabilities().iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_matches_brute_force_with_evidence(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = common::random_network(&mut rng, 5, 3).validated().unwrap();
        let target = rng.gen_range(0..net.len());
        let mut ev = Evidence::new();
        let mut pairs = Vec::new();
        for (i, n) in net.nodes().iter().enumerate() {
            if i != target && rng.gen_bool(0.5) {
                let s = rng.gen_range(0..n.num_states());
                ev = ev.with(n.name.clone(), s);
                pairs.push((i, s));
            }
        }
        let want = common::oracle_posterior(&net, target, &pairs);
        match exact_posterior(&net, &net.nodes()[target].name, &ev) {
            Ok(got) => {
                for (g, w) in got.probabilities().iter().zip(&want) {
                    prop_assert!((g - w).abs() < 1e-12);
                }
            }
            Err(e) => {
                prop_assert_eq!(e, dqbn_core::Error::ImpossibleEvidence);
                prop_assert!(want.iter().all(|w| w.is_nan()));
            }
        }
    }

    #[test]
    fn posterior_invariant_under_relabeling(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let net = common::random_network(&mut rng, 5, 3).validated().unwrap();
        let target = rng.gen_range(0..net.len());
        let mut ev = Evidence::new();
        let mut free = Vec::new();
        for (i, n) in net.nodes().iter().enumerate() {
            if i == target {
                continue;
            }
            if rng.gen_bool(0.4) {
                ev = ev.with(n.name.clone(), rng.gen_range(0..n.num_states()));
            } else {
                free.push(i);
            }
        }
        let name = net.nodes()[target].name.clone();
        let base = exact_posterior(&net, &name, &ev);
        let mut variant = reorder(&net, &mut rng).validated().unwrap();
        if let Some(&j) = free.choose(&mut rng) {
            let j = variant.index_of(&net.nodes()[j].name).unwrap();
            let mut perm: Vec<usize> = (0..variant.nodes()[j].num_states()).collect();
            perm.shuffle(&mut rng);
            variant = permute_states(&variant, j, &perm).validated().unwrap();
        }
        let other = exact_posterior(&variant, &name, &ev);
        match (base, other) {
            (Ok(a), Ok(b)) => prop_assert!(a.max_abs_diff(&b) < 1e-12),
            (a, b) => prop_assert_eq!(a.unwrap_err(), b.unwrap_err()),
        }
    }

    #[test]
    fn propagation_preserves_normalization(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = common::rng(seed);
        let columns: Vec<Vec<f64>> = (0..n).map(|_| common::random_probs(&mut rng, n, true)).collect();
        let matrix = (0..n).map(|j| (0..n).map(|i| columns[i][j]).collect()).collect();
        let model = TransitionModel::new("v", matrix).unwrap();
        let current = Distribution::new(common::random_probs(&mut rng, n, true)).unwrap();
        let next = propagate_transition(&current, &model).unwrap();
        prop_assert!((next.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(next.probabilities().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn degradation_mass_never_shrinks(p in 0.0f64..=1.0) {
        let current = Distribution::new(vec![1.0 - p, p]).unwrap();
        let next = propagate_transition(&current, &case_study::degradation_transition()).unwrap();
        prop_assert!(next.get(1) >= current.get(1));
    }
}
