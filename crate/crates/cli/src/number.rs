//! Numbers in model files: `"p/q"` strings and integers are exact, decimals
//! push the model into floating-point mode.

use mvps::scalar::{parse_rational, Rational, Scalar};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Text(String),
    Number(serde_json::Number),
}

/// A parsed number. `exact` carries the digit-for-digit rational value of a
/// decimal as well, so callers that only need exact arithmetic can ignore the
/// flag.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub exact: Rational,
    pub decimal: bool,
}

impl Num {
    pub fn parse(&self) -> Result<Parsed, String> {
        let text = match self {
            Num::Text(s) => s.clone(),
            Num::Number(n) => n.to_string(),
        };
        let exact = parse_rational(&text).map_err(|e| e.to_string())?;
        let t = text.trim();
        let decimal = !t.contains('/') && t.contains(['.', 'e', 'E']);
        Ok(Parsed { exact, decimal })
    }

    pub fn exact(r: &Rational) -> Self {
        Num::Text(r.to_string())
    }

    pub fn float(x: f64) -> Self {
        serde_json::Number::from_f64(x).map_or_else(|| Num::Text(x.to_string()), Num::Number)
    }
}

/// JSON rendering of report values: rationals as `"p/q"` strings so they can
/// be replayed, floats as numbers.
pub trait JsonScalar: Scalar {
    fn to_json(&self) -> Value;

    fn is_negligible(&self, tol: f64) -> bool;
}

impl JsonScalar for Rational {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        *self == Rational::from_usize(0)
    }
}

impl JsonScalar for f64 {
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self).map_or(Value::Null, Value::Number)
    }

    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}
