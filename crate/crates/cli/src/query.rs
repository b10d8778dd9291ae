//! JSON query documents and their canonical serialization.

use std::fmt;

use anyhow::{bail, Context};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use selfmap_chow::engine::IntersectionQuery;
use selfmap_chow::rational::parse_rational;
use selfmap_chow::{DivClass, GeneratorId, Rational, WeightTuple};

/// Rationals in the strict `p/q` form used by documents and the cache.
pub fn strict(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// A rational given either as a JSON string or a JSON integer.
#[derive(Clone, Debug)]
struct Number(Rational);

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match Value::deserialize(deserializer)? {
            Value::String(s) => parse_rational(&s).map(Number).map_err(de::Error::custom),
            Value::Number(n) if n.is_i64() => Ok(Number(Rational::from_integer(n.as_i64().unwrap().into()))),
            other => Err(de::Error::custom(format!("expected a rational string, got {other}"))),
        }
    }
}

/// A factor as written in a document: a generator-keyed map or an
/// expression string.
#[derive(Clone, Debug)]
enum RawFactor {
    Terms(Vec<(String, Number)>),
    Expression(String),
}

impl<'de> Deserialize<'de> for RawFactor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match Value::deserialize(deserializer)? {
            Value::String(s) => Ok(RawFactor::Expression(s)),
            Value::Object(map) => map
                .into_iter()
                .map(|(k, v)| Number::deserialize(v).map(|c| (k, c)).map_err(de::Error::custom))
                .collect::<Result<_, _>>()
                .map(RawFactor::Terms),
            other => Err(de::Error::custom(format!(
                "expected an object or expression, got {other}"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQuery {
    d: u32,
    weights: Vec<Number>,
    factors: Vec<RawFactor>,
}

/// Parses an intersection query document.
pub fn parse_query(text: &str) -> anyhow::Result<IntersectionQuery> {
    let raw: RawQuery = serde_json::from_str(text).context("malformed query document")?;
    let wt = WeightTuple::new(raw.d, raw.weights.into_iter().map(|w| w.0).collect())?;
    let n = wt.n();
    let factors = raw
        .factors
        .into_iter()
        .map(|f| match f {
            RawFactor::Expression(text) => Ok(DivClass::parse(raw.d, n, &text)?),
            RawFactor::Terms(terms) => {
                let mut parsed = Vec::with_capacity(terms.len());
                for (key, c) in terms {
                    parsed.push((key.parse::<GeneratorId>()?, c.0));
                }
                Ok(DivClass::from_terms(raw.d, n, parsed)?)
            }
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if factors.is_empty() && wt.dimension() > 0 {
        bail!("query has no factors but the space has dimension {}", wt.dimension());
    }
    Ok(IntersectionQuery::new(wt, factors))
}

struct FactorMap<'a>(&'a DivClass);

impl Serialize for FactorMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.num_terms()))?;
        for (g, c) in self.0.terms() {
            map.serialize_entry(&g.to_string(), &strict(c))?;
        }
        map.end()
    }
}

/// Serializable view of a query; field order is fixed.
pub struct QueryDocument<'a>(pub &'a IntersectionQuery);

impl Serialize for QueryDocument<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let q = self.0;
        let mut map = serializer.serialize_map(Some(3))?;
        map.serialize_entry("d", &q.wt.degree())?;
        map.serialize_entry("weights", &q.wt.weights().iter().map(strict).collect::<Vec<_>>())?;
        map.serialize_entry("factors", &q.factors.iter().map(FactorMap).collect::<Vec<_>>())?;
        map.end()
    }
}

impl fmt::Display for QueryDocument<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| fmt::Error)?)
    }
}
