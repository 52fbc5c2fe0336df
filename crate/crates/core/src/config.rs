//! Every numeric threshold used by the checks lives here.
//!
//! Modules take the slice of this block they need (for example
//! [`crate::zero_detect::ZeroDetectConfig`]) and never hardcode a tolerance
//! of their own. The CLI exposes each field as a `KEY=VAL` override.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    // quadrature and the zero detector
    pub quad_tol: f64,
    pub divergence_cap: f64,
    pub quad_max_depth: usize,
    /// Integrand evaluations before an integral counts as divergent.
    pub quad_max_evals: usize,
    pub zero_floor: f64,
    pub zero_grid: usize,
    /// Grid used as the independent "has a zero" oracle for fixture suites.
    pub zero_oracle_grid: usize,
    pub lemma_tol: f64,
    pub derivative_step: f64,
    pub blowup_min_offset: f64,
    pub blowup_points: usize,
    pub flat_step: f64,
    pub flat_tol: f64,
    pub flat_max_order: usize,

    // partitions
    pub partition_sum: f64,
    pub support_floor: f64,
    pub probe_radius: f64,
    pub step_epsilon: f64,

    // groups
    pub group_axiom: f64,
    pub chart_roundtrip: f64,
    pub representation: f64,
    pub smoothness_step: f64,
    pub smoothness_stability: f64,

    // Milnor construction
    pub milnor_weight: f64,
    pub equivariance: f64,
    pub section_gauge: f64,
    pub breakpoint_offset: f64,
    pub breakpoint_jump: f64,

    // bundles
    pub cocycle: f64,
    pub gauge: f64,
    pub classification: f64,
    pub element_equality: f64,

    // cylinders and transport
    pub transport: f64,
    pub slice_cap: f64,
    pub slice_grid: usize,
    pub slice_rel_tol: f64,
    pub slice_max_n: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quad_tol: 1e-9,
            divergence_cap: 1e6,
            quad_max_depth: 60,
            quad_max_evals: 1 << 22,
            zero_floor: 1e-12,
            zero_grid: 1025,
            zero_oracle_grid: 1_000_001,
            lemma_tol: 1e-9,
            derivative_step: 1e-4,
            blowup_min_offset: 1e-3,
            blowup_points: 25,
            flat_step: 1e-2,
            flat_tol: 1e-4,
            flat_max_order: 3,

            partition_sum: 1e-9,
            support_floor: 1e-12,
            probe_radius: 1e-3,
            step_epsilon: 0.25,

            group_axiom: 1e-12,
            chart_roundtrip: 1e-9,
            representation: 1e-10,
            smoothness_step: 1e-4,
            smoothness_stability: 1e-5,

            milnor_weight: 1e-12,
            equivariance: 1e-9,
            section_gauge: 1e-12,
            breakpoint_offset: 1e-6,
            breakpoint_jump: 1e-4,

            cocycle: 1e-10,
            gauge: 1e-9,
            classification: 1e-8,
            element_equality: 1e-10,

            transport: 1e-6,
            slice_cap: 1e15,
            slice_grid: 257,
            slice_rel_tol: 1e-10,
            slice_max_n: 4,
        }
    }
}

impl Tolerances {
    /// Applies a `KEY=VAL` override. Integer fields accept integral values only.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (key, val) = spec
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("override `{spec}` is not KEY=VAL")))?;
        let key = key.trim();
        let mut map = match serde_json::to_value(&*self)? {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        let slot = map
            .get_mut(key)
            .ok_or_else(|| Error::Unknown(format!("tolerance key `{key}`")))?;
        let parsed: f64 = val
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("`{val}` is not a number")))?;
        *slot = if slot.is_u64() {
            if parsed < 0.0 || parsed.fract() != 0.0 {
                return Err(Error::Format(format!("`{key}` needs a non-negative integer")));
            }
            Value::from(parsed as u64)
        } else {
            Value::from(parsed)
        };
        *self = serde_json::from_value(Value::Object(map))?;
        Ok(())
    }

    pub fn keys() -> Vec<String> {
        match serde_json::to_value(Tolerances::default()) {
            Ok(Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_float_and_integer_fields() {
        let mut t = Tolerances::default();
        t.apply_override("gauge=1e-7").unwrap();
        t.apply_override("slice_max_n = 5").unwrap();
        assert_eq!(t.gauge, 1e-7);
        assert_eq!(t.slice_max_n, 5);
    }

    #[test]
    fn override_rejects_unknown_and_malformed() {
        let mut t = Tolerances::default();
        assert!(matches!(t.apply_override("nope=1"), Err(Error::Unknown(_))));
        assert!(t.apply_override("gauge").is_err());
        assert!(t.apply_override("slice_max_n=2.5").is_err());
        assert_eq!(t, Tolerances::default());
    }
}
