//! Named real expressions parsed with `exmex`.
//!
//! Fixture files describe functions as strings such as `"(x - 0.5)^2 + t^2"`.
//! An [`Expr`] remembers which of the caller's variable names each exmex
//! slot refers to, so evaluation takes values in the caller's order.

use std::fmt;
use std::sync::Arc;

use exmex::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Expr {
    source: String,
    slots: Vec<usize>,
    arity: usize,
    inner: Arc<FlatEx<f64>>,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl Expr {
    /// Parses `source` whose free variables must come from `vars`.
    pub fn parse(source: &str, vars: &[&str]) -> Result<Self> {
        let inner = exmex::parse::<f64>(source)
            .map_err(|e| Error::Format(format!("cannot parse `{source}`: {e}")))?;
        let slots = inner
            .var_names()
            .iter()
            .map(|name| {
                vars.iter().position(|v| v == name).ok_or_else(|| {
                    Error::Format(format!("unknown variable `{name}` in `{source}` (allowed: {vars:?})"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            source: source.to_string(),
            slots,
            arity: vars.len(),
            inner: Arc::new(inner),
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluates with `values[i]` bound to the `i`-th declared variable.
    /// Evaluation errors surface as NaN.
    pub fn eval(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.arity);
        let mut buf = [0.0f64; 8];
        if self.slots.len() <= buf.len() {
            for (k, &s) in self.slots.iter().enumerate() {
                buf[k] = values[s];
            }
            self.inner.eval(&buf[..self.slots.len()]).unwrap_or(f64::NAN)
        } else {
            let v: Vec<f64> = self.slots.iter().map(|&s| values[s]).collect();
            self.inner.eval(&v).unwrap_or(f64::NAN)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_follow_caller_order() {
        let e = Expr::parse("t - 2*x", &["x", "t"]).unwrap();
        assert_eq!(e.eval(&[1.0, 5.0]), 3.0);
        let c = Expr::parse("2.5", &["x"]).unwrap();
        assert_eq!(c.eval(&[9.0]), 2.5);
    }

    #[test]
    fn unknown_variable_is_rejected() {
        assert!(Expr::parse("x + y", &["x"]).is_err());
        assert!(Expr::parse("x +* 2", &["x"]).is_err());
    }

    #[test]
    fn builtin_functions() {
        let e = Expr::parse("atan2(y, x) + abs(signum(x))", &["x", "y"]).unwrap();
        assert!((e.eval(&[1.0, 1.0]) - (std::f64::consts::FRAC_PI_4 + 1.0)).abs() < 1e-15);
    }
}
