use std::collections::BTreeMap;

use themis_core::bbn::{BbnNode, Direction, RootMapping, ScenarioNetwork};
use themis_core::scenario::simulate_year;
use themis_core::synth;

pub fn single_root_net(threshold: f64, scale: f64) -> ScenarioNetwork {
    let copy = BbnNode {
        id: "intervention".into(),
        states: vec!["true".into(), "false".into()],
        parents: vec!["w".into()],
        cpt: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        root_mapping: None,
    };
    let root = BbnNode {
        id: "w".into(),
        states: vec!["true".into(), "false".into()],
        parents: vec![],
        cpt: vec![vec![0.5, 0.5]],
        root_mapping: Some(RootMapping::ParameterTrend {
            parameter_id: "potable_water".into(),
            threshold,
            scale,
            direction: Direction::Below,
        }),
    };
    ScenarioNetwork { id: "s".into(), weight: 1.0, provenance: None, nodes: vec![root, copy], intervention_node: "intervention".into() }
}

/// Standard error of the mean across seeds at each sample size; returns the log-log slope.
pub fn mc_scaling_slope(replicates: u64) -> f64 {
    let m = synth::country_x_model();
    let net = vec![single_root_net(700.0, 120.0)];
    let state: BTreeMap<String, (f64, f64)> = [("potable_water".to_string(), (760.0, 150.0))].into();
    let ns = [100u32, 400, 1600, 6400];
    let pts: Vec<(f64, f64)> = ns
        .iter()
        .map(|&n| {
            let means: Vec<f64> = (0..replicates)
                .map(|s| simulate_year(&m, &net, &state, &BTreeMap::new(), 2030, 0, 1000 + s, n).unwrap().p_intervention_mean)
                .collect();
            ((n as f64).ln(), themis_core::math::mean_std(&means).1.ln())
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}
