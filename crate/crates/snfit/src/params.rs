//! Relationship taxonomy and the four parameterization views of a model:
//! traditional parameters (TP), stable parameters (SP), unrestricted stable
//! parameters (USP), and traditional parameters for the unscaled data (TPNS).
//!
//! All four views are named-coordinate vectors with a fixed per-kind order;
//! JSON serialization carries an explicit kind tag plus one field per
//! coordinate.

use serde::de::Error as DeError;
use serde::{Deserialize, Serialize};

/// The S-N relationship being fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelationshipKind {
    #[serde(rename = "basquin")]
    Basquin,
    #[serde(rename = "coffin-manson")]
    CoffinManson,
    #[serde(rename = "coffin-manson-zes")]
    CoffinMansonZeroElasticSlope,
    #[serde(rename = "nishijima")]
    Nishijima,
    #[serde(rename = "rect-hyperbola")]
    RectangularHyperbola,
    #[serde(rename = "boxcox-loglinear-sigma")]
    BoxCoxLoglinearSigma,
}

/// Whether the model is written for fatigue life (inducing a strength
/// distribution) or fatigue strength (inducing a life distribution). Fixed
/// by the relationship kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpecificationMode {
    Life,
    Strength,
}

impl SpecificationMode {
    /// Label used in leaderboard output.
    pub fn label(self) -> &'static str {
        match self {
            SpecificationMode::Life => "Fatigue Life",
            SpecificationMode::Strength => "Fatigue Strength",
        }
    }
}

impl RelationshipKind {
    pub const ALL: [RelationshipKind; 6] = [
        RelationshipKind::Basquin,
        RelationshipKind::CoffinManson,
        RelationshipKind::CoffinMansonZeroElasticSlope,
        RelationshipKind::Nishijima,
        RelationshipKind::RectangularHyperbola,
        RelationshipKind::BoxCoxLoglinearSigma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationshipKind::Basquin => "basquin",
            RelationshipKind::CoffinManson => "coffin-manson",
            RelationshipKind::CoffinMansonZeroElasticSlope => "coffin-manson-zes",
            RelationshipKind::Nishijima => "nishijima",
            RelationshipKind::RectangularHyperbola => "rect-hyperbola",
            RelationshipKind::BoxCoxLoglinearSigma => "boxcox-loglinear-sigma",
        }
    }

    /// Display name as used in the comparison tables.
    pub fn table_name(self) -> &'static str {
        match self {
            RelationshipKind::Basquin => "Basquin (Inverse Power)",
            RelationshipKind::CoffinManson => "Coffin-Manson",
            RelationshipKind::CoffinMansonZeroElasticSlope => "Coffin-Manson Zero Elastic Slope",
            RelationshipKind::Nishijima => "Nishijima",
            RelationshipKind::RectangularHyperbola => "Rectangular Hyperbola",
            RelationshipKind::BoxCoxLoglinearSigma => "Box-Cox/Loglinear Sigma",
        }
    }

    pub fn parse(name: &str) -> Option<RelationshipKind> {
        match name.to_ascii_lowercase().as_str() {
            "basquin" => Some(RelationshipKind::Basquin),
            "coffin-manson" | "cm" => Some(RelationshipKind::CoffinManson),
            "coffin-manson-zes" | "cmzes" => Some(RelationshipKind::CoffinMansonZeroElasticSlope),
            "nishijima" => Some(RelationshipKind::Nishijima),
            "rect-hyperbola" | "rectangular-hyperbola" => {
                Some(RelationshipKind::RectangularHyperbola)
            }
            "boxcox-loglinear-sigma" | "boxcox" => Some(RelationshipKind::BoxCoxLoglinearSigma),
            _ => None,
        }
    }

    pub fn mode(self) -> SpecificationMode {
        match self {
            RelationshipKind::Basquin | RelationshipKind::BoxCoxLoglinearSigma => {
                SpecificationMode::Life
            }
            _ => SpecificationMode::Strength,
        }
    }

    /// Number of free parameters (equal across all four views).
    pub fn dim(self) -> usize {
        usp_names(self).len()
    }
}

pub fn usp_names(kind: RelationshipKind) -> &'static [&'static str] {
    match kind {
        RelationshipKind::Basquin => &["logMedianAtCenter", "slope", "logSigma"],
        RelationshipKind::CoffinManson => &[
            "logSLow",
            "logDeltaHighLow",
            "qlogisp",
            "logDeltaSlopes",
            "logSigmaX",
        ],
        RelationshipKind::CoffinMansonZeroElasticSlope => {
            &["logSLow", "logDeltaHighLow", "logDeltaSlopes", "logSigmaX"]
        }
        RelationshipKind::Nishijima => &[
            "logSLow",
            "logDeltaHighLow",
            "qlogisp",
            "logDeltaSLowE",
            "logSigmaX",
        ],
        RelationshipKind::RectangularHyperbola => {
            &["logSLow", "logDeltaHighLow", "logDeltaSLowE", "logSigmaX"]
        }
        RelationshipKind::BoxCoxLoglinearSigma => {
            &["logSigmaLow", "logSigmaHigh", "lambda", "logTLow", "logTHigh"]
        }
    }
}

pub fn tp_names(kind: RelationshipKind) -> &'static [&'static str] {
    match kind {
        RelationshipKind::Basquin => &["beta0", "beta1", "sigma"],
        RelationshipKind::CoffinManson => &["A_el", "A_pl", "b", "c", "sigma_X"],
        RelationshipKind::CoffinMansonZeroElasticSlope => &["A_el", "A_pl", "c", "sigma_X"],
        RelationshipKind::Nishijima => &["A", "B", "C", "E", "sigma_X"],
        RelationshipKind::RectangularHyperbola => &["B_star", "C_star", "E_star", "sigma_X"],
        RelationshipKind::BoxCoxLoglinearSigma => {
            &["beta0", "beta1", "lambda", "beta0_sigma", "beta1_sigma"]
        }
    }
}

pub fn sp_names(kind: RelationshipKind) -> &'static [&'static str] {
    match kind {
        RelationshipKind::Basquin => &["medianAtCenter", "slope", "sigma"],
        RelationshipKind::CoffinManson => &["S_Low", "S_High", "b", "c", "sigma_X"],
        RelationshipKind::CoffinMansonZeroElasticSlope => &["S_Low", "S_High", "c", "sigma_X"],
        RelationshipKind::Nishijima => &["S_Low", "S_Mid", "S_High", "E", "sigma_X"],
        RelationshipKind::RectangularHyperbola => &["S_Low", "S_High", "E", "sigma_X"],
        RelationshipKind::BoxCoxLoglinearSigma => {
            &["sigma_Low", "sigma_High", "lambda", "t_Low", "t_High"]
        }
    }
}

fn serialize_named<S>(
    kind: RelationshipKind,
    names: &[&str],
    values: &[f64],
    serializer: S,
) -> Result<S::Ok, S::Error>
where
    S: serde::Serializer,
{
    use serde::ser::SerializeMap;
    let mut map = serializer.serialize_map(Some(values.len() + 1))?;
    map.serialize_entry("kind", kind.name())?;
    for (name, value) in names.iter().zip(values.iter()) {
        map.serialize_entry(name, value)?;
    }
    map.end()
}

fn deserialize_named<'de, D>(
    deserializer: D,
    names_fn: fn(RelationshipKind) -> &'static [&'static str],
) -> Result<(RelationshipKind, Vec<f64>), D::Error>
where
    D: serde::Deserializer<'de>,
{
    let map = serde_json::Map::deserialize(deserializer)?;
    let kind_name = map
        .get("kind")
        .and_then(|v| v.as_str())
        .ok_or_else(|| D::Error::custom("missing 'kind' tag"))?;
    let kind = RelationshipKind::parse(kind_name)
        .ok_or_else(|| D::Error::custom(format!("unknown relationship kind {kind_name:?}")))?;
    let mut values = Vec::new();
    for name in names_fn(kind) {
        let v = map
            .get(*name)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| D::Error::custom(format!("missing coordinate {name:?}")))?;
        values.push(v);
    }
    Ok((kind, values))
}

macro_rules! named_param_vector {
    ($(#[$meta:meta])* $name:ident, $names_fn:path) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            pub kind: RelationshipKind,
            pub values: Vec<f64>,
        }

        impl $name {
            pub fn new(kind: RelationshipKind, values: Vec<f64>) -> $name {
                assert_eq!(
                    values.len(),
                    $names_fn(kind).len(),
                    "coordinate count mismatch for {kind:?}"
                );
                $name { kind, values }
            }

            pub fn names(&self) -> &'static [&'static str] {
                $names_fn(self.kind)
            }

            pub fn len(&self) -> usize {
                self.values.len()
            }

            pub fn is_empty(&self) -> bool {
                self.values.is_empty()
            }

            pub fn index_of(&self, name: &str) -> Option<usize> {
                self.names().iter().position(|n| *n == name)
            }

            pub fn get(&self, name: &str) -> Option<f64> {
                self.index_of(name).map(|i| self.values[i])
            }

            pub fn all_finite(&self) -> bool {
                self.values.iter().all(|v| v.is_finite())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                serialize_named(self.kind, self.names(), &self.values, s)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let (kind, values) = deserialize_named(d, $names_fn)?;
                Ok($name::new(kind, values))
            }
        }
    };
}

named_param_vector!(
    /// Traditional parameters on the scaled data.
    TpVector,
    tp_names
);
named_param_vector!(
    /// Stable parameters: plot-identifiable, low-correlation.
    SpVector,
    sp_names
);
named_param_vector!(
    /// Unrestricted stable parameters: the optimizer coordinates.
    UspVector,
    usp_names
);
named_param_vector!(
    /// Traditional parameters as if the data had not been scaled.
    TpnsVector,
    tp_names
);
