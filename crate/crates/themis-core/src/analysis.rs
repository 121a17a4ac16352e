//! Standardization, correlation PCA, key-variable selection, lagged sign
//! estimation and straight-line trend extrapolation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, sqrt};
use serde::{Deserialize, Serialize};

use crate::linalg::symmetric_eigen;
use crate::math::pearson;
use crate::model::{AdjacencyMatrix, ParameterSeries};

pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.90;
pub const DEFAULT_MAX_VARS: usize = 7;
pub const DEFAULT_R_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("no series to analyse")]
    NoSeries,
    #[error("series '{0}' has fewer than 2 observations in range")]
    TooShort(String),
    #[error("series share no common years")]
    EmptyIntersection,
    #[error("series share only {0} common year(s); at least 2 required")]
    TooFewCommonYears(usize),
    #[error("panel needs at least 2 variables and 2 years")]
    PanelTooSmall,
    #[error("every panel column is constant")]
    Degenerate,
    #[error("variance_threshold must lie in (0, 1], found {0}")]
    BadVarianceThreshold(f64),
    #[error("max_vars must be at least 1")]
    BadMaxVars,
    #[error("r_threshold must lie in (0, 1), found {0}")]
    BadRThreshold(f64),
    #[error("variable '{0}' is not in the panel")]
    UnknownVariable(String),
    #[error("variable '{0}' is not covered by the adjacency matrix")]
    NotInAdjacency(String),
    #[error("series '{0}': all years identical")]
    IdenticalYears(String),
    #[error("target year {target} precedes the fit window ending {end}")]
    BeforeWindow { target: i32, end: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizedPanel {
    pub variables: Vec<String>,
    pub years: Vec<i32>,
    /// `values[t][v]`.
    pub values: Vec<Vec<f64>>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub constant: Vec<bool>,
}

impl StandardizedPanel {
    pub fn column(&self, v: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[v]).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == id)
    }

    /// Sample covariance (divisor n−1).
    pub fn covariance(&self) -> Vec<Vec<f64>> {
        let p = self.variables.len();
        let n = self.years.len();
        let mut c = vec![vec![0.0; p]; p];
        for i in 0..p {
            for j in i..p {
                let s: f64 = self.values.iter().map(|r| r[i] * r[j]).sum::<f64>() / (n - 1) as f64;
                c[i][j] = s;
                c[j][i] = s;
            }
        }
        c
    }
}

/// Z-scores over the years every series shares, optionally restricted to an
/// inclusive range.
pub fn standardize(series: &[ParameterSeries], years: Option<(i32, i32)>) -> Result<StandardizedPanel, AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::NoSeries);
    }
    let in_range = |y: i32| years.is_none_or(|(a, b)| y >= a && y <= b);
    let mut common: Option<BTreeSet<i32>> = None;
    for s in series {
        let ys: BTreeSet<i32> = s.observations.iter().map(|o| o.0).filter(|&y| in_range(y)).collect();
        if ys.len() < 2 {
            return Err(AnalysisError::TooShort(s.parameter_id.clone()));
        }
        common = Some(match common {
            None => ys,
            Some(c) => c.intersection(&ys).copied().collect(),
        });
    }
    let common: Vec<i32> = common.unwrap_or_default().into_iter().collect();
    match common.len() {
        0 => return Err(AnalysisError::EmptyIntersection),
        1 => return Err(AnalysisError::TooFewCommonYears(1)),
        _ => {}
    }
    let n = common.len();
    let p = series.len();
    let mut values = vec![vec![0.0; p]; n];
    let (mut means, mut stds, mut constant) = (vec![0.0; p], vec![0.0; p], vec![false; p]);
    for (v, s) in series.iter().enumerate() {
        let lookup: BTreeMap<i32, f64> = s.observations.iter().map(|o| (o.0, o.1)).collect();
        let col: Vec<f64> = common.iter().map(|y| lookup[y]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
        let std = sqrt(ss / (n - 1) as f64);
        means[v] = mean;
        stds[v] = std;
        if std <= 1e-12 * fabs(mean).max(1.0) {
            constant[v] = true;
            continue;
        }
        for (t, x) in col.iter().enumerate() {
            values[t][v] = (x - mean) / std;
        }
    }
    Ok(StandardizedPanel {
        variables: series.iter().map(|s| s.parameter_id.clone()).collect(),
        years: common,
        values,
        means,
        stds,
        constant,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// Descending, non-negative.
    pub eigenvalues: Vec<f64>,
    /// `components[k]` are the loadings of component `k` over panel variables.
    pub components: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
    pub sweeps: usize,
}

pub fn pca(panel: &StandardizedPanel) -> Result<PcaResult, AnalysisError> {
    if panel.variables.len() < 2 || panel.years.len() < 2 {
        return Err(AnalysisError::PanelTooSmall);
    }
    if panel.constant.iter().all(|&c| c) {
        return Err(AnalysisError::Degenerate);
    }
    pca_of_covariance(&panel.covariance())
}

/// Eigen-analysis of a symmetric PSD matrix.
pub fn pca_of_covariance(cov: &[Vec<f64>]) -> Result<PcaResult, AnalysisError> {
    let eig = symmetric_eigen(cov);
    let eigenvalues: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = eigenvalues.iter().sum();
    if !(total > 0.0) {
        return Err(AnalysisError::Degenerate);
    }
    Ok(PcaResult {
        explained_variance_ratio: eigenvalues.iter().map(|l| l / total).collect(),
        eigenvalues,
        components: eig.vectors,
        sweeps: eig.sweeps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub variable: String,
    pub component: usize,
    pub loading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyVariableSet {
    pub selected: Vec<String>,
    pub components_retained: usize,
    pub cumulative_variance: f64,
    /// One step per retained component, including duplicate nominations.
    pub selection_trace: Vec<SelectionStep>,
}

/// Smallest component prefix reaching `variance_threshold`, each nominating its
/// largest-|loading| variable (earliest variable on ties), deduplicated in
/// nomination order and truncated to `max_vars`.
pub fn select_key_variables(
    pca: &PcaResult,
    panel: &StandardizedPanel,
    variance_threshold: f64,
    max_vars: usize,
) -> Result<KeyVariableSet, AnalysisError> {
    if !(variance_threshold > 0.0 && variance_threshold <= 1.0) {
        return Err(AnalysisError::BadVarianceThreshold(variance_threshold));
    }
    if max_vars == 0 {
        return Err(AnalysisError::BadMaxVars);
    }
    let mut cum = 0.0;
    let mut retained = 0;
    for r in &pca.explained_variance_ratio {
        cum += r;
        retained += 1;
        if cum >= variance_threshold - 1e-12 {
            break;
        }
    }
    let mut selected = Vec::new();
    let mut trace = Vec::new();
    for (k, comp) in pca.components.iter().take(retained).enumerate() {
        let mut best = 0;
        for v in 1..comp.len() {
            if fabs(comp[v]) > fabs(comp[best]) {
                best = v;
            }
        }
        let variable = panel.variables[best].clone();
        trace.push(SelectionStep { variable: variable.clone(), component: k, loading: comp[best] });
        if !selected.contains(&variable) {
            selected.push(variable);
        }
    }
    selected.truncate(max_vars);
    Ok(KeyVariableSet { selected, components_retained: retained, cumulative_variance: cum, selection_trace: trace })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    #[serde(rename = "self")]
    SelfLoop,
    Plus,
    Minus,
    None,
}

impl Sign {
    /// Table glyph: `1`, `+`, `-`, `x`.
    pub fn glyph(self) -> char {
        match self {
            Self::SelfLoop => '1',
            Self::Plus => '+',
            Self::Minus => '-',
            Self::None => 'x',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignEvidence {
    /// Lagged-difference correlation; absent when undefined.
    pub r: Option<f64>,
    pub pairs: usize,
    pub insufficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignMatrix {
    pub variables: Vec<String>,
    /// `entries[i][j]`: effect of row variable `i` on column variable `j`.
    pub entries: Vec<Vec<Sign>>,
    pub evidence: Vec<Vec<SignEvidence>>,
}

/// First differences keyed by the later year; only consecutive-year steps count.
fn year_diffs(years: &[i32], col: &[f64]) -> BTreeMap<i32, f64> {
    years
        .windows(2)
        .zip(col.windows(2))
        .filter(|(y, _)| y[1] == y[0] + 1)
        .map(|(y, x)| (y[1], x[1] - x[0]))
        .collect()
}

/// `(Δx_i(t), Δx_j(t+1))` over every year where both are defined.
pub fn lagged_pairs(years: &[i32], xi: &[f64], xj: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let di = year_diffs(years, xi);
    let dj = year_diffs(years, xj);
    di.iter().filter_map(|(y, a)| dj.get(&(y + 1)).map(|b| (*a, *b))).unzip()
}

pub fn estimate_signs(
    panel: &StandardizedPanel,
    keys: &KeyVariableSet,
    adjacency: &AdjacencyMatrix,
    r_threshold: f64,
) -> Result<SignMatrix, AnalysisError> {
    if !(r_threshold > 0.0 && r_threshold < 1.0) {
        return Err(AnalysisError::BadRThreshold(r_threshold));
    }
    let mut cols = Vec::new();
    for k in &keys.selected {
        let idx = panel.index_of(k).ok_or_else(|| AnalysisError::UnknownVariable(k.clone()))?;
        if adjacency.index_of(k).is_none() {
            return Err(AnalysisError::NotInAdjacency(k.clone()));
        }
        cols.push(panel.column(idx));
    }
    let n = keys.selected.len();
    let blank = SignEvidence { r: None, pairs: 0, insufficient: false };
    let mut entries = vec![vec![Sign::None; n]; n];
    let mut evidence = vec![vec![blank; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                entries[i][j] = Sign::SelfLoop;
                continue;
            }
            if adjacency.is_related(&keys.selected[i], &keys.selected[j]) != Some(true) {
                continue;
            }
            let (a, b) = lagged_pairs(&panel.years, &cols[i], &cols[j]);
            let pairs = a.len();
            if pairs < 3 {
                evidence[i][j] = SignEvidence { r: None, pairs, insufficient: true };
                continue;
            }
            let r = pearson(&a, &b);
            evidence[i][j] = SignEvidence { r, pairs, insufficient: false };
            entries[i][j] = match r {
                Some(r) if r >= r_threshold => Sign::Plus,
                Some(r) if r <= -r_threshold => Sign::Minus,
                _ => Sign::None,
            };
        }
    }
    Ok(SignMatrix { variables: keys.selected.clone(), entries, evidence })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendModel {
    pub parameter_id: String,
    pub slope: f64,
    pub intercept: f64,
    pub residual_std: f64,
    pub fit_window: (i32, i32),
    pub n: usize,
    pub mean_year: f64,
    /// `Σ (year − mean_year)²`.
    pub sxx: f64,
}

pub fn fit_trend(series: &ParameterSeries) -> Result<TrendModel, AnalysisError> {
    let obs = &series.observations;
    let n = obs.len();
    if n < 2 {
        return Err(AnalysisError::TooShort(series.parameter_id.clone()));
    }
    let xm = obs.iter().map(|o| f64::from(o.0)).sum::<f64>() / n as f64;
    let ym = obs.iter().map(|o| o.1).sum::<f64>() / n as f64;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for o in obs {
        let dx = f64::from(o.0) - xm;
        sxx += dx * dx;
        sxy += dx * (o.1 - ym);
    }
    if sxx <= 0.0 {
        return Err(AnalysisError::IdenticalYears(series.parameter_id.clone()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residual_std = if n > 2 {
        let (mut sse, mut scale) = (0.0, 0.0);
        for o in obs {
            let e = o.1 - (slope * f64::from(o.0) + intercept);
            sse += e * e;
            scale += o.1 * o.1;
        }
        // Rounding residue of an exact line is not noise.
        if sse <= 1e-26 * scale.max(f64::MIN_POSITIVE) {
            0.0
        } else {
            sqrt(sse / (n - 2) as f64)
        }
    } else {
        0.0
    };
    let first = obs.iter().map(|o| o.0).min().unwrap_or(0);
    let last = obs.iter().map(|o| o.0).max().unwrap_or(0);
    Ok(TrendModel {
        parameter_id: series.parameter_id.clone(),
        slope,
        intercept,
        residual_std,
        fit_window: (first, last),
        n,
        mean_year: xm,
        sxx,
    })
}

/// Projected mean and prediction standard deviation at `target_year`.
pub fn extrapolate(trend: &TrendModel, target_year: i32) -> Result<(f64, f64), AnalysisError> {
    if target_year < trend.fit_window.1 {
        return Err(AnalysisError::BeforeWindow { target: target_year, end: trend.fit_window.1 });
    }
    let t = f64::from(target_year);
    let mean = trend.slope * t + trend.intercept;
    let std = if trend.residual_std == 0.0 {
        0.0
    } else {
        let d = t - trend.mean_year;
        trend.residual_std * sqrt(1.0 + 1.0 / trend.n as f64 + d * d / trend.sxx)
    };
    Ok((mean, std))
}

/// Data-driven adjacency for models that carry none: a pair is related when the
/// level correlation or the lagged-difference correlation in either direction
/// reaches `r_threshold` in magnitude.
pub fn estimate_adjacency(panel: &StandardizedPanel, r_threshold: f64) -> AdjacencyMatrix {
    let p = panel.variables.len();
    let cols: Vec<Vec<f64>> = (0..p).map(|v| panel.column(v)).collect();
    let mut related = vec![vec![false; p]; p];
    for i in 0..p {
        related[i][i] = true;
        for j in i + 1..p {
            let strong = |r: Option<f64>| r.is_some_and(|r| fabs(r) >= r_threshold);
            let (a, b) = lagged_pairs(&panel.years, &cols[i], &cols[j]);
            let (c, d) = lagged_pairs(&panel.years, &cols[j], &cols[i]);
            let rel = strong(pearson(&cols[i], &cols[j]))
                || (a.len() >= 3 && strong(pearson(&a, &b)))
                || (c.len() >= 3 && strong(pearson(&c, &d)));
            related[i][j] = rel;
            related[j][i] = rel;
        }
    }
    AdjacencyMatrix { variables: panel.variables.clone(), related }
}

/// Restricts an adjacency to `ids`; ids it does not cover relate only to
/// themselves.
pub fn sub_adjacency(adj: &AdjacencyMatrix, ids: &[String]) -> AdjacencyMatrix {
    let related = ids
        .iter()
        .map(|a| {
            ids.iter()
                .map(|b| a == b || adj.is_related(a, b).unwrap_or(false))
                .collect()
        })
        .collect();
    AdjacencyMatrix { variables: ids.iter().map(ToString::to_string).collect(), related }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Observation;

    fn s(id: &str, pts: &[(i32, f64)]) -> ParameterSeries {
        ParameterSeries { parameter_id: id.into(), observations: pts.iter().map(|&(y, v)| Observation(y, v)).collect() }
    }

    #[test]
    fn standardize_examples() {
        let p = standardize(&[s("a", &[(1, 1.0), (2, 2.0), (3, 3.0)])], None).unwrap();
        assert_eq!(p.column(0), vec![-1.0, 0.0, 1.0]);
        let c = standardize(&[s("c", &[(1, 5.0), (2, 5.0), (3, 5.0)])], None).unwrap();
        assert!(c.constant[0] && c.column(0).iter().all(|&x| x == 0.0));
        let d = standardize(&[s("a", &[(1, 1.0), (2, 2.0)]), s("b", &[(3, 1.0), (4, 2.0)])], None);
        assert_eq!(d, Err(AnalysisError::EmptyIntersection));
    }

    #[test]
    fn identity_selection_breaks_ties_by_order() {
        let panel = StandardizedPanel {
            variables: vec!["a".into(), "b".into()],
            years: vec![0, 1],
            values: vec![vec![0.0; 2]; 2],
            means: vec![0.0; 2],
            stds: vec![1.0; 2],
            constant: vec![false; 2],
        };
        let r = pca_of_covariance(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(r.explained_variance_ratio, vec![0.5, 0.5]);
        let k = select_key_variables(&r, &panel, 0.5, 7).unwrap();
        assert_eq!(k.selected, vec!["a".to_string()]);
        let k = select_key_variables(&r, &panel, 1.0, 1).unwrap();
        assert_eq!(k.selected.len(), 1);
    }

    #[test]
    fn lagged_follow_is_plus() {
        let panel = standardize(&[s("x", &[(0, 1.0), (1, 2.0), (2, 4.0), (3, 5.0), (4, 8.0)]),
            s("y", &[(0, 0.0), (1, 2.0), (2, 4.0), (3, 8.0), (4, 10.0)])], None).unwrap();
        let keys = KeyVariableSet { selected: vec!["x".into(), "y".into()], components_retained: 0, cumulative_variance: 0.0, selection_trace: vec![] };
        let m = estimate_signs(&panel, &keys, &AdjacencyMatrix::complete(keys.selected.clone()), 0.3).unwrap();
        assert_eq!(m.entries[0][1], Sign::Plus);
        assert_eq!(m.entries[0][0], Sign::SelfLoop);
    }

    #[test]
    fn short_series_is_flagged_insufficient() {
        let panel = standardize(&[s("x", &[(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)]), s("y", &[(1, 2.0), (2, 4.0), (3, 6.0), (4, 8.0)])], None).unwrap();
        let keys = KeyVariableSet { selected: vec!["x".into(), "y".into()], components_retained: 0, cumulative_variance: 0.0, selection_trace: vec![] };
        let m = estimate_signs(&panel, &keys, &AdjacencyMatrix::complete(keys.selected.clone()), 0.3).unwrap();
        assert_eq!(m.entries[0][1], Sign::None);
        assert!(m.evidence[0][1].insufficient);
        assert_eq!(m.evidence[0][1].pairs, 2);
    }

    #[test]
    fn trend_examples() {
        let t = fit_trend(&s("a", &[(0, 1.0), (1, 2.0)])).unwrap();
        assert_eq!((t.slope, t.intercept, t.residual_std), (1.0, 1.0, 0.0));
        assert_eq!(extrapolate(&t, 25).unwrap(), (26.0, 0.0));
        let t = fit_trend(&s("b", &[(0, 0.0), (1, 1.0), (2, 0.0)])).unwrap();
        assert!(t.slope.abs() < 1e-15 && (t.intercept - 1.0 / 3.0).abs() < 1e-15);
        let t = fit_trend(&s("c", &[(0, 4.0), (1, 4.0), (5, 4.0)])).unwrap();
        assert_eq!((t.slope, t.intercept, t.residual_std), (0.0, 4.0, 0.0));
        assert_eq!(fit_trend(&s("d", &[(3, 1.0), (3, 2.0)])), Err(AnalysisError::IdenticalYears("d".into())));
        assert!(matches!(extrapolate(&t, 4), Err(AnalysisError::BeforeWindow { .. })));
    }
}
