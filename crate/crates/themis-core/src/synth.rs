//! Synthetic Country X: a 25-parameter, 6-domain panel whose structure makes
//! the seven key variables the unique PCA nomination and whose lagged
//! dynamics reproduce the published sign table, plus the bundled actors and
//! scenario network.
//!
//! Key levels are a smooth profile (one DCT-II basis shape per key, so the
//! profiles are exactly orthogonal) plus five deterministic latent cycles on
//! the 200-year frequency grid. The cycle amplitudes and phase offsets were
//! solved offline so the long-run lag-1 cross-correlations of first
//! differences take the tabled signs with margin ≥ 0.14 around the 0.3
//! threshold; only the common cycle phases are random. The remaining 18 parameters follow one key
//! each, mixed with noise orthogonalized against everything before it.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sqrt};

use crate::analysis::Sign;
use crate::bbn::{BbnNode, Direction, RootMapping, ScenarioNetwork};
use crate::model::{
    ActorSpec, ActorType, AdjacencyMatrix, Bounds, Goal, LinearConstraint, Observation, ParameterDefinition,
    ParameterSeries, Penalize, RegionModel, Relation, Rhs, TheoryId, FORMAT_VERSION,
};
use crate::rng::{standard_normal, uniform_open};

/// Key variables in sign-table order.
pub const KEY_VARIABLES: [&str; 7] = [
    "migration",
    "gdp",
    "literacy",
    "religious_education",
    "level_of_health",
    "status_of_women",
    "potable_water",
];

const P: Sign = Sign::Plus;
const M: Sign = Sign::Minus;
const X: Sign = Sign::None;
const I: Sign = Sign::SelfLoop;

/// Published directed signs, row variable acting on column variable, in
/// `KEY_VARIABLES` order. The blank migration → religious-education cell is
/// read as no effect.
pub const SIGN_TABLE: [[Sign; 7]; 7] = [
    [I, M, M, X, M, X, P],
    [M, I, P, M, P, P, P],
    [P, P, I, X, P, P, X],
    [P, M, P, I, X, M, X],
    [M, P, P, X, I, X, P],
    [M, P, P, M, P, I, P],
    [M, P, X, X, P, X, I],
];

const CYCLE_M: [f64; 5] = [10.0, 26.0, 53.0, 62.0, 95.0];
const CYCLE_AMP: [[f64; 7]; 5] = [
    [2.355, 4.214, 1.778, 1.718, 3.247, 3.387, 1.954],
    [0.226, 0.208, 0.492, 0.838, 0.693, 0.193, 0.528],
    [0.672, 0.067, 0.525, 0.397, 0.05, 0.245, 0.638],
    [0.2, 0.119, 0.211, 0.081, 0.225, 0.377, 0.226],
    [0.287, 0.216, 0.452, 0.477, 0.362, 0.289, 0.325],
];
const CYCLE_PHASE: [[f64; 7]; 5] = [
    [-0.243, -3.128, 2.949, 0.224, 2.732, -2.751, 3.0],
    [-1.294, -2.236, -0.761, -0.142, -0.643, 1.414, -1.363],
    [2.505, -1.965, -2.367, -1.642, 1.351, 1.733, 0.905],
    [2.579, -3.042, -1.883, 1.086, -0.363, 0.996, 0.264],
    [0.234, -0.86, 2.398, -1.51, 0.238, -1.159, 2.923],
];
/// DCT index and sign of each key's profile.
const PROFILE: [(f64, f64); 7] = [(5.0, 1.0), (2.0, 1.0), (4.0, 1.0), (3.0, -1.0), (6.0, 1.0), (7.0, 1.0), (1.0, 1.0)];

struct Param {
    id: &'static str,
    domain: &'static str,
    units: &'static str,
    display: &'static str,
    base: f64,
    scale: f64,
    bounds: Option<(Option<f64>, Option<f64>)>,
    /// `None` for keys; `(key index, loading, paired noise sign)` for followers.
    follows: Option<(usize, f64, f64)>,
}

const fn key(id: &'static str, domain: &'static str, units: &'static str, display: &'static str, base: f64, scale: f64) -> Param {
    Param { id, domain, units, display, base, scale, bounds: Some((Some(0.0), None)), follows: None }
}

const fn fol(
    id: &'static str,
    domain: &'static str,
    units: &'static str,
    display: &'static str,
    base: f64,
    scale: f64,
    follows: (usize, f64, f64),
) -> Param {
    Param { id, domain, units, display, base, scale, bounds: Some((Some(0.0), None)), follows: Some(follows) }
}

/// A negative scale flips a follower so its level moves against its key.
const PARAMS: [Param; 25] = [
    fol("population", "Demography", "millions", "Population", 42.0, 1.5, (0, 0.7, 1.0)),
    fol("growth", "Demography", "% per year", "Growth", 2.1, 0.3, (0, 0.7, -1.0)),
    key("migration", "Demography", "net thousand per year", "Migration", 120.0, 30.0),
    fol("ethnicity", "Demography", "fractionalization index", "Ethnicity", 0.55, 0.04, (0, 0.5, 1.0)),
    fol("labor_force", "Economic", "millions", "Labor force", 15.0, 0.8, (1, 0.9, 1.0)),
    key("gdp", "Economic", "USD billion", "GDP", 480.0, 35.0),
    fol("unemployment", "Economic", "% of labor force", "Unemployment", 14.0, -2.0, (1, 0.9, -1.0)),
    fol("wealth_distribution", "Economic", "Gini index", "Wealth distribution", 41.0, 2.0, (1, 0.8, 1.0)),
    fol("trade_distribution", "Economic", "export share %", "Trade distribution", 28.0, 3.0, (1, 0.8, -1.0)),
    fol("primary_education", "Educational", "% enrolled", "Primary education", 88.0, 3.0, (2, 0.88, 1.0)),
    fol("secondary_education", "Educational", "% enrolled", "Secondary education", 61.0, 4.0, (2, 0.88, -1.0)),
    fol("tertiary_education", "Educational", "% enrolled", "Tertiary education", 19.0, 2.0, (2, 0.75, 1.0)),
    key("literacy", "Educational", "% of adults", "Literacy", 72.0, 4.0),
    fol("number_of_scientists", "Educational", "per million", "Number of scientists", 410.0, -40.0, (3, 0.55, 1.0)),
    fol("number_of_phds", "Educational", "per year", "Number of Ph.D.'s", 950.0, -80.0, (3, 0.55, -1.0)),
    key("religious_education", "Educational", "% enrolled", "Religious education", 34.0, 4.0),
    key("level_of_health", "Healthcare", "index 0-100", "Level of health", 58.0, 5.0),
    fol("coverage_of_health_care", "Healthcare", "% of population", "Coverage of health care", 63.0, 5.0, (4, 0.66, 1.0)),
    fol("life_expectancy", "Healthcare", "years", "Life expectancy", 67.0, 1.5, (4, 0.66, -1.0)),
    fol("frequency_of_human_interactions", "Sociological", "contacts per week", "Frequency of human interactions", 23.0, 2.0, (5, 0.86, 1.0)),
    fol("level_of_human_interactions", "Sociological", "index 0-10", "Level of human interactions", 5.5, 0.6, (5, 0.86, -1.0)),
    Param { bounds: Some((Some(0.0), Some(1.0))), ..key("status_of_women", "Sociological", "index 0-1", "Status of women", 0.42, 0.05) },
    fol("arable_land", "Resources", "% of land", "Arable land", 17.0, 1.2, (6, 0.95, 1.0)),
    fol("total_land", "Resources", "thousand km2", "Total land", 640.0, 6.0, (6, 0.95, -1.0)),
    key("potable_water", "Resources", "m3 per capita per year", "Potable water", 1400.0, 160.0),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub years: usize,
    pub start_year: i32,
    pub seed: u64,
    /// Weight of the smooth key profiles.
    pub profile_amp: f64,
    /// Weight of the latent cycles.
    pub cycle_weight: f64,
    /// Std of white noise added to key levels.
    pub noise: f64,
}

impl SynthConfig {
    /// Twenty observed years, profile-dominated: the bundled panel.
    pub fn fixture() -> Self {
        Self { years: 20, start_year: 2005, seed: 2005, profile_amp: 1.0, cycle_weight: 0.02, noise: 0.01 }
    }

    /// Two hundred years with cycles strong enough to carry the lagged signs.
    pub fn long_history(seed: u64) -> Self {
        Self { years: 200, start_year: 1825, seed, profile_amp: 1.0, cycle_weight: 0.2, noise: 0.01 }
    }
}

pub fn parameters() -> Vec<ParameterDefinition> {
    PARAMS
        .iter()
        .map(|p| ParameterDefinition {
            id: p.id.to_string(),
            domain: p.domain.to_string(),
            units: p.units.to_string(),
            display_name: p.display.to_string(),
            bounds: p.bounds.map(|(lower, upper)| Bounds { lower, upper }),
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Removes the components along each (unit) basis vector.
fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let d = dot(v, q);
        v.iter_mut().zip(q).for_each(|(x, qi)| *x -= d * qi);
    }
}

fn normalize(v: &mut [f64]) {
    let n = sqrt(dot(v, v));
    v.iter_mut().for_each(|x| *x /= n);
}

/// Generates one series per parameter, in roster order.
pub fn generate(cfg: &SynthConfig) -> Vec<ParameterSeries> {
    let t_len = cfg.years;
    let tf = t_len as f64;
    let mut rng = crate::rng::stream(cfg.seed, u32::MAX, 0);
    let two_pi = 2.0 * core::f64::consts::PI;
    let phases: Vec<f64> = (0..5).map(|_| two_pi * uniform_open(&mut rng)).collect();

    let mut keys = vec![vec![0.0; t_len]; 7];
    for t in 0..t_len {
        let tt = t as f64;
        for (i, key) in keys.iter_mut().enumerate() {
            let (k, sign) = PROFILE[i];
            let profile = sign * sqrt(2.0) * cos(core::f64::consts::PI * k * (tt + 0.5) / tf);
            let mut cyc = 0.0;
            for f in 0..5 {
                let om = two_pi * CYCLE_M[f] / 200.0;
                cyc += CYCLE_AMP[f][i] * cos(om * tt + phases[f] + CYCLE_PHASE[f][i]);
            }
            key[t] = cfg.profile_amp * profile + cfg.cycle_weight * cyc + cfg.noise * standard_normal(&mut rng);
        }
    }

    // Population z-scores of the keys, and an orthonormal basis of [1, keys].
    let zkeys: Vec<Vec<f64>> = keys
        .iter()
        .map(|k| {
            let m = k.iter().sum::<f64>() / tf;
            let sd = sqrt(k.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / tf);
            k.iter().map(|x| (x - m) / sd).collect()
        })
        .collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut ones = vec![1.0; t_len];
    normalize(&mut ones);
    basis.push(ones);
    for z in &zkeys {
        let mut v = z.clone();
        orthogonalize(&mut v, &basis);
        normalize(&mut v);
        basis.push(v);
    }

    // A pair of followers shares one noise direction with opposite signs.
    let mut pending: BTreeMap<(usize, u64), Vec<f64>> = BTreeMap::new();
    let mut out = Vec::with_capacity(PARAMS.len());
    for p in &PARAMS {
        let values: Vec<f64> = match p.follows {
            None => {
                let idx = KEY_VARIABLES.iter().position(|k| *k == p.id).unwrap_or(0);
                keys[idx].clone()
            }
            Some((key, rho, noise_sign)) => {
                let slot = (key, rho.to_bits());
                let e = match pending.remove(&slot) {
                    Some(e) if noise_sign < 0.0 => e,
                    other => {
                        if let Some(e) = other {
                            pending.insert(slot, e);
                        }
                        let mut e: Vec<f64> = (0..t_len).map(|_| standard_normal(&mut rng)).collect();
                        orthogonalize(&mut e, &basis);
                        normalize(&mut e);
                        basis.push(e.clone());
                        e.iter_mut().for_each(|x| *x *= sqrt(tf));
                        if noise_sign > 0.0 && PARAMS.iter().any(|q| q.follows == Some((key, rho, -1.0))) {
                            pending.insert(slot, e.clone());
                        }
                        e
                    }
                };
                let s = sqrt(1.0 - rho * rho);
                zkeys[key].iter().zip(&e).map(|(z, n)| rho * z + noise_sign * s * n).collect()
            }
        };
        out.push(ParameterSeries {
            parameter_id: p.id.to_string(),
            observations: values
                .iter()
                .enumerate()
                .map(|(t, v)| Observation(cfg.start_year + t as i32, p.base + p.scale * v))
                .collect(),
        });
    }
    out
}

/// Diagonal, every pair inside a domain, and every key pair.
pub fn adjacency() -> AdjacencyMatrix {
    let ids: Vec<String> = PARAMS.iter().map(|p| p.id.to_string()).collect();
    let is_key = |id: &str| KEY_VARIABLES.contains(&id);
    let related = PARAMS
        .iter()
        .map(|a| PARAMS.iter().map(|b| a.id == b.id || a.domain == b.domain || (is_key(a.id) && is_key(b.id))).collect())
        .collect();
    AdjacencyMatrix { variables: ids, related }
}

fn coefs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn goal(pairs: &[(&str, f64)], target: f64, weight: f64, penalize: Penalize) -> Goal {
    Goal { expression_coefficients: coefs(pairs), target, weight, penalize }
}

fn share_cap(var: &str, relation: Relation, scale: f64) -> LinearConstraint {
    LinearConstraint { coefficients: coefs(&[(var, 1.0)]), relation, rhs: Rhs::Projected { projected: var.to_string(), scale } }
}

/// Actor types A (wealth and population of supporters), B (wealth) and C
/// (religious hardliners).
pub fn actors() -> Vec<ActorSpec> {
    let tag = |k: &str, v: &str| [(k.to_string(), v.to_string())].into_iter().collect::<BTreeMap<_, _>>();
    vec![
        ActorSpec {
            id: "A".into(),
            actor_type: ActorType::A,
            objective_coefficients: coefs(&[("gdp", 1.0), ("population", 1.0)]),
            goals: vec![
                goal(&[("gdp", 1.0)], 200.0, 2.0, Penalize::Under),
                goal(&[("population", 1.0)], 25.0, 1.0, Penalize::Under),
            ],
            constraints: vec![share_cap("gdp", Relation::Le, 0.35), share_cap("population", Relation::Le, 0.5)],
            metadata: tag("description", "wealth-share and population-share of supporters"),
        },
        ActorSpec {
            id: "B".into(),
            actor_type: ActorType::B,
            objective_coefficients: BTreeMap::new(),
            goals: vec![goal(&[("gdp", 1.0)], 150.0, 1.0, Penalize::Under)],
            constraints: vec![share_cap("gdp", Relation::Le, 0.3)],
            metadata: tag("description", "wealth-share of supporters"),
        },
        ActorSpec {
            id: "C".into(),
            actor_type: ActorType::C,
            objective_coefficients: BTreeMap::new(),
            goals: vec![
                goal(&[("religious_education", 1.0)], 60.0, 2.0, Penalize::Under),
                goal(&[("status_of_women", 1.0)], 0.2, 1.0, Penalize::Over),
            ],
            constraints: vec![
                share_cap("religious_education", Relation::Le, 1.0),
                share_cap("status_of_women", Relation::Ge, 0.8),
            ],
            metadata: tag("description", "religious hardliners"),
        },
    ]
}

/// Calibrated values of the Country X network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkCalibration {
    pub dogmatism_prior: f64,
    pub water_shortage_prior: f64,
    pub intervention_given_unrest: f64,
}

pub const CALIBRATION: NetworkCalibration =
    NetworkCalibration { dogmatism_prior: 0.70, water_shortage_prior: 0.90, intervention_given_unrest: 0.91 };

pub const WATER_THRESHOLD: f64 = 700.0;
pub const WATER_SCALE: f64 = 120.0;

pub const NETWORK_PROVENANCE: &str =
    "calibrated, not from paper data: structure follows the stated causal chain; probabilities tuned so the final-year intervention index is 0.62";

fn bnode(id: &str, parents: &[&str], cpt: Vec<Vec<f64>>, mapping: Option<RootMapping>) -> BbnNode {
    BbnNode {
        id: id.to_string(),
        states: vec!["true".into(), "false".into()],
        parents: parents.iter().map(|s| s.to_string()).collect(),
        cpt,
        root_mapping: mapping,
    }
}

fn bern(p: f64) -> Vec<f64> {
    vec![p, 1.0 - p]
}

/// Noisy-OR rows over binary parents (first state = active), parent order
/// most significant first.
fn noisy_or(leak: f64, strengths: &[f64]) -> Vec<Vec<f64>> {
    let k = strengths.len();
    (0..1usize << k)
        .map(|row| {
            let mut q = 1.0 - leak;
            for (i, s) in strengths.iter().enumerate() {
                // State index 0 (true) for parent i when its bit is clear.
                if row >> (k - 1 - i) & 1 == 0 {
                    q *= 1.0 - s;
                }
            }
            bern(1.0 - q)
        })
        .collect()
}

pub fn network(cal: &NetworkCalibration) -> ScenarioNetwork {
    ScenarioNetwork {
        id: "civil_unrest".into(),
        weight: 1.0,
        provenance: Some(NETWORK_PROVENANCE.into()),
        nodes: vec![
            bnode(
                "religious_dogmatism",
                &[],
                vec![bern(cal.dogmatism_prior)],
                Some(RootMapping::ActorAttainment { actor_id: "C".into(), invert: false }),
            ),
            bnode(
                "water_shortage",
                &[],
                vec![bern(cal.water_shortage_prior)],
                Some(RootMapping::ParameterTrend {
                    parameter_id: "potable_water".into(),
                    threshold: WATER_THRESHOLD,
                    scale: WATER_SCALE,
                    direction: Direction::Below,
                }),
            ),
            bnode("disease", &["water_shortage"], vec![bern(0.6), bern(0.1)], None),
            bnode("mass_migration", &["water_shortage"], vec![bern(0.7), bern(0.15)], None),
            bnode("women_status_reduction", &["religious_dogmatism"], vec![bern(0.75), bern(0.1)], None),
            bnode("education_decline", &["mass_migration"], vec![bern(0.6), bern(0.15)], None),
            bnode(
                "gdp_below_threshold",
                &["religious_dogmatism", "mass_migration", "women_status_reduction", "education_decline"],
                noisy_or(0.05, &[0.55, 0.45, 0.35, 0.35]),
                None,
            ),
            bnode("civil_unrest", &["gdp_below_threshold"], vec![bern(0.9), bern(0.12)], None),
            bnode("intervention", &["civil_unrest"], vec![bern(cal.intervention_given_unrest), bern(0.05)], None),
        ],
        intervention_node: "intervention".into(),
    }
}

/// The bundled Country X model.
pub fn country_x_model() -> RegionModel {
    let mut metadata = BTreeMap::new();
    metadata.insert("pmesii".to_string(), "political,economic,social,infrastructure".to_string());
    metadata.insert("dimefil".to_string(), "diplomatic,economic".to_string());
    metadata.insert("data_source".to_string(), "synthetic generator, fixture preset".to_string());
    for f in crate::theory::BERNSTEIN_FACTORS {
        metadata.insert(alloc::format!("bernstein.{f}"), "1".to_string());
    }
    RegionModel {
        format_version: FORMAT_VERSION,
        region_name: "Country X".into(),
        horizon_years: 25,
        theory: TheoryId::TrendBaseline,
        parameters: parameters(),
        series: generate(&SynthConfig::fixture()),
        adjacency: Some(adjacency()),
        actors: actors(),
        scenario_template: network(&CALIBRATION),
        additional_scenarios: Vec::new(),
        metadata,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_shape() {
        let ps = parameters();
        assert_eq!(ps.len(), 25);
        let mut domains: Vec<&str> = ps.iter().map(|p| p.domain.as_str()).collect();
        domains.dedup();
        assert_eq!(domains.len(), 6);
        for k in KEY_VARIABLES {
            assert!(ps.iter().any(|p| p.id == k));
        }
        let followers = PARAMS.iter().filter(|p| p.follows.is_some()).count();
        assert_eq!(followers, 18);
    }

    #[test]
    fn followers_have_declared_loading() {
        let cfg = SynthConfig::fixture();
        let series = generate(&cfg);
        let col = |id: &str| -> Vec<f64> { series.iter().find(|s| s.parameter_id == id).unwrap().observations.iter().map(|o| o.1).collect() };
        let r = crate::math::pearson(&col("arable_land"), &col("potable_water")).unwrap();
        assert!((r - 0.95).abs() < 1e-9, "{r}");
        let r = crate::math::pearson(&col("unemployment"), &col("gdp")).unwrap();
        assert!((r + 0.9).abs() < 1e-9, "{r}");
    }

    #[test]
    fn noisy_or_rows() {
        let rows = noisy_or(0.1, &[0.5, 0.2]);
        assert!((rows[0][0] - (1.0 - 0.9 * 0.5 * 0.8)).abs() < 1e-15);
        assert!((rows[3][0] - 0.1).abs() < 1e-15);
        assert!((rows[1][0] - (1.0 - 0.9 * 0.5)).abs() < 1e-15);
    }
}
