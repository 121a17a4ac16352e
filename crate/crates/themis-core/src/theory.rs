//! Pluggable structural theories applied to projected domain states.
//!
//! `bernstein_four_factor` reads its factor mapping from model metadata:
//! `bernstein.gdp` names the GDP parameter (default `gdp`), and each of
//! `bernstein.property_rights`, `bernstein.scientific_rationalism`,
//! `bernstein.capital_markets`, `bernstein.communication_transport` is either a
//! parameter id whose projected mean is the factor score or a numeric literal.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use libm::pow;

use crate::model::{RegionModel, TheoryId};

pub const BERNSTEIN_FACTORS: [&str; 4] =
    ["property_rights", "scientific_rationalism", "capital_markets", "communication_transport"];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TheoryError {
    #[error("theory '{0}' is not registered")]
    Unregistered(String),
    #[error("missing factor mapping 'bernstein.{0}' in model metadata")]
    MissingFactor(String),
    #[error("factor '{factor}' maps to parameter '{parameter}' with no projected state")]
    UnresolvedFactor { factor: String, parameter: String },
    #[error("GDP parameter '{0}' has no projected state")]
    MissingGdp(String),
}

pub fn is_registered(theory: &TheoryId) -> bool {
    !matches!(theory, TheoryId::User(_))
}

/// Factor scores clamped to [0.01, 1].
pub fn bernstein_scores(
    model: &RegionModel,
    state: &BTreeMap<String, (f64, f64)>,
) -> Result<[f64; 4], TheoryError> {
    let mut out = [0.0; 4];
    for (slot, factor) in out.iter_mut().zip(BERNSTEIN_FACTORS) {
        let key = alloc::format!("bernstein.{factor}");
        let source = model.metadata.get(&key).ok_or_else(|| TheoryError::MissingFactor(factor.to_string()))?;
        let raw = match source.trim().parse::<f64>() {
            Ok(v) => v,
            Err(_) => state
                .get(source.trim())
                .ok_or_else(|| TheoryError::UnresolvedFactor { factor: factor.to_string(), parameter: source.clone() })?
                .0,
        };
        *slot = raw.clamp(0.01, 1.0);
    }
    Ok(out)
}

pub fn apply_theory(
    theory: &TheoryId,
    model: &RegionModel,
    state: &BTreeMap<String, (f64, f64)>,
) -> Result<BTreeMap<String, (f64, f64)>, TheoryError> {
    match theory {
        TheoryId::TrendBaseline => Ok(state.clone()),
        TheoryId::BernsteinFourFactor => {
            let scores = bernstein_scores(model, state)?;
            let gdp = model.metadata.get("bernstein.gdp").map_or("gdp", String::as_str);
            let product: f64 = scores.iter().product();
            let factor = pow(product, 0.25);
            let mut out = state.clone();
            let entry = out.get_mut(gdp).ok_or_else(|| TheoryError::MissingGdp(gdp.to_string()))?;
            entry.0 *= factor;
            Ok(out)
        }
        TheoryId::User(name) => Err(TheoryError::Unregistered(name.clone())),
    }
}
