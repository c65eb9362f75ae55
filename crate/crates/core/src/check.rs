//! Uniform record type for asserted inequalities and observed ratios.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Counts toward pass/fail.
    Assert,
    /// Recorded only (unquantified constants, diagnostics).
    Observe,
}

/// How `value` is compared with `bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
    Close,
    Recorded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckItem {
    pub label: String,
    #[serde(with = "float")]
    pub value: f64,
    #[serde(with = "float")]
    pub bound: f64,
    /// Positive when the relation holds with room to spare.
    #[serde(with = "float")]
    pub slack: f64,
    #[serde(with = "float")]
    pub tolerance: f64,
    pub mode: Mode,
    pub relation: Relation,
    pub passed: bool,
}

impl CheckItem {
    /// `value ≤ bound`, allowed to fail by `tol`.
    pub fn at_most(label: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        let slack = bound - value;
        Self {
            label: label.into(),
            value,
            bound,
            slack,
            tolerance: tol,
            mode: Mode::Assert,
            relation: Relation::AtMost,
            passed: slack >= -tol,
        }
    }

    /// `value ≥ bound`, allowed to fail by `tol`.
    pub fn at_least(label: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        let slack = value - bound;
        Self {
            label: label.into(),
            value,
            bound,
            slack,
            tolerance: tol,
            mode: Mode::Assert,
            relation: Relation::AtLeast,
            passed: slack >= -tol,
        }
    }

    /// `|value - target| ≤ tol`; slack is `tol - |value - target|`.
    pub fn close(label: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let slack = tol - (value - target).abs();
        Self {
            label: label.into(),
            value,
            bound: target,
            slack,
            tolerance: tol,
            mode: Mode::Assert,
            relation: Relation::Close,
            passed: slack >= 0.0,
        }
    }

    /// `|value - target| ≤ tol · |target|`.
    pub fn close_rel(label: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        let scale = target.abs().max(f64::MIN_POSITIVE);
        let mut item = Self::close(label, value, target, tol * scale);
        item.tolerance = tol;
        item.slack /= scale;
        item
    }

    pub fn observe(label: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            label: label.into(),
            value,
            bound,
            slack: bound - value,
            tolerance: 0.0,
            mode: Mode::Observe,
            relation: Relation::Recorded,
            passed: true,
        }
    }

    /// Re-evaluates an asserted item under tolerance `tol` (same units as
    /// `tolerance`). Observations are unchanged.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        if self.mode == Mode::Observe {
            return self;
        }
        self.passed = match self.relation {
            Relation::AtMost | Relation::AtLeast => self.slack >= -tol,
            Relation::Close => self.tolerance - self.slack <= tol,
            Relation::Recorded => true,
        };
        if self.relation == Relation::Close {
            self.slack += tol - self.tolerance;
        }
        self.tolerance = tol;
        self
    }

    /// Demote to an observation.
    pub fn observed(mut self) -> Self {
        self.mode = Mode::Observe;
        self.passed = true;
        self
    }
}

/// Non-finite values travel as the strings `"NaN"`, `"inf"`, `"-inf"` so
/// JSON reports round-trip.
mod float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("NaN")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "NaN" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("bad float `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub subject: String,
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, subject: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            subject: subject.into(),
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, item: CheckItem) -> &mut Self {
        self.items.push(item);
        self
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.mode == Mode::Observe || i.passed)
    }

    pub fn item(&self, label: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.label == label)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| i.mode == Mode::Assert && !i.passed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_apply_in_the_right_direction() {
        assert!(CheckItem::at_most("a", 1.0 + 1e-9, 1.0, 1e-8).passed);
        assert!(!CheckItem::at_most("a", 1.1, 1.0, 1e-8).passed);
        assert!(CheckItem::at_least("b", 0.99, 1.0, 0.02).passed);
        assert!(!CheckItem::close("c", 1.01, 1.0, 1e-3).passed);
        assert!(CheckItem::close_rel("d", 100.05, 100.0, 1e-3).passed);
    }

    #[test]
    fn tolerance_override() {
        let it = CheckItem::close("c", 1.01, 1.0, 1e-3).with_tolerance(0.02);
        assert!(it.passed && (it.slack - 0.01).abs() < 1e-12);
        assert!(!CheckItem::at_most("a", 1.1, 1.0, 0.2).with_tolerance(0.05).passed);
        assert!(!CheckItem::close_rel("d", 100.05, 100.0, 1e-3).with_tolerance(1e-4).passed);
    }

    #[test]
    fn observations_never_fail_a_report() {
        let mut r = CheckReport::new("x", "gaussian:s=1");
        r.push(CheckItem::observe("ratio", 5.0, 1.0));
        r.push(CheckItem::at_most("bad", 2.0, 1.0, 0.0).observed());
        assert!(r.passed());
        r.push(CheckItem::at_most("bad", 2.0, 1.0, 0.0));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
    }
}
