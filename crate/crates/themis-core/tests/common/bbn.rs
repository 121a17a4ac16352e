use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use themis_core::bbn::{compile, enumerate_compiled, infer_compiled, BbnNode, Elimination, ScenarioNetwork};

pub fn row(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

/// Random DAG declared in shuffled order; `max_states` 2 keeps it binary.
pub fn random_net(rng: &mut ChaCha8Rng, n: usize, max_states: usize) -> ScenarioNetwork {
    let pick = rng.random_range(0..n);
    let card: Vec<usize> = (0..n).map(|i| if i == pick { 2 } else { rng.random_range(2..=max_states) }).collect();
    let mut nodes: Vec<BbnNode> = (0..n)
        .map(|i| {
            let mut parents: Vec<usize> = (0..i).filter(|_| rng.random_bool(0.3)).collect();
            parents.truncate(4);
            let rows: usize = parents.iter().map(|&p| card[p]).product();
            BbnNode {
                id: format!("n{i}"),
                states: (0..card[i]).map(|s| format!("s{s}")).collect(),
                parents: parents.iter().map(|p| format!("n{p}")).collect(),
                cpt: (0..rows).map(|_| row(rng, card[i])).collect(),
                root_mapping: None,
            }
        })
        .collect();
    nodes.shuffle(rng);
    ScenarioNetwork { id: "r".into(), weight: 1.0, provenance: None, nodes, intervention_node: format!("n{pick}") }
}

/// Unnormalized `P(query = s, evidence)` for every state, straight from the CPTs.
pub fn oracle_joint(net: &ScenarioNetwork, query: &str, evidence: &BTreeMap<String, String>) -> Vec<f64> {
    let n = net.nodes.len();
    let card: Vec<usize> = net.nodes.iter().map(|nd| nd.states.len()).collect();
    let pos = |id: &str| net.nodes.iter().position(|nd| nd.id == id).unwrap();
    let q = pos(query);
    let ev: Vec<(usize, usize)> = evidence
        .iter()
        .map(|(k, v)| {
            let i = pos(k);
            (i, net.nodes[i].states.iter().position(|s| s == v).unwrap())
        })
        .collect();
    let mut out = vec![0.0; card[q]];
    let mut assign = vec![0usize; n];
    loop {
        if ev.iter().all(|&(i, s)| assign[i] == s) {
            let mut p = 1.0;
            for (i, nd) in net.nodes.iter().enumerate() {
                let mut r = 0;
                for par in &nd.parents {
                    let j = pos(par);
                    r = r * card[j] + assign[j];
                }
                p *= nd.cpt[r][assign[i]];
            }
            out[assign[q]] += p;
        }
        let mut k = 0;
        while k < n {
            assign[k] += 1;
            if assign[k] < card[k] {
                break;
            }
            assign[k] = 0;
            k += 1;
        }
        if k == n {
            return out;
        }
    }
}

pub fn random_evidence(rng: &mut ChaCha8Rng, net: &ScenarioNetwork, query: &str) -> BTreeMap<String, String> {
    let k = rng.random_range(0..=3);
    let mut ev = BTreeMap::new();
    for _ in 0..k {
        let nd = &net.nodes[rng.random_range(0..net.nodes.len())];
        if nd.id != query {
            ev.insert(nd.id.clone(), nd.states[rng.random_range(0..nd.states.len())].clone());
        }
    }
    ev
}

pub fn check_network(rng: &mut ChaCha8Rng, net: &ScenarioNetwork) {
    let c = compile(net).unwrap();
    let mut order: Vec<usize> = (0..net.nodes.len()).collect();
    order.shuffle(rng);
    for nd in &net.nodes {
        let ev = random_evidence(rng, net, &nd.id);
        let ve = infer_compiled(&c, &nd.id, &ev, &Elimination::MinDegree).unwrap();
        let fixed = infer_compiled(&c, &nd.id, &ev, &Elimination::Fixed(order.clone())).unwrap();
        let en = enumerate_compiled(&c, &nd.id, &ev).unwrap();
        let joint = oracle_joint(net, &nd.id, &ev);
        let pe: f64 = joint.iter().sum();
        assert!((ve.marginal.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(ve.marginal.iter().all(|&p| p >= 0.0));
        assert!((ve.evidence_probability - pe).abs() < 1e-9 * pe.max(1e-300) + 1e-15);
        for s in 0..joint.len() {
            let truth = joint[s] / pe;
            assert!((ve.marginal[s] - truth).abs() < 1e-9, "VE {} vs P(q,e)/P(e) {truth}", ve.marginal[s]);
            assert!((en.marginal[s] - truth).abs() < 1e-9);
            assert!((fixed.marginal[s] - ve.marginal[s]).abs() < 1e-9);
        }
    }
}
