//! Structured audit records shared by the library audits and the CLI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// How a scalar is judged against its threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Le,
    Lt,
    Ge,
    Gt,
    /// Reported only; always passes.
    Info,
}

impl Comparison {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Comparison::Le => value <= threshold,
            Comparison::Lt => value < threshold,
            Comparison::Ge => value >= threshold,
            Comparison::Gt => value > threshold,
            Comparison::Info => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalar {
    #[serde(deserialize_with = "lenient::number")]
    pub value: f64,
    #[serde(deserialize_with = "lenient::number")]
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

impl Scalar {
    pub fn new(value: f64, comparison: Comparison, tolerance: f64) -> Self {
        Scalar { value, tolerance, comparison, pass: comparison.holds(value, tolerance) }
    }

    pub fn le(value: f64, bound: f64) -> Self {
        Self::new(value, Comparison::Le, bound)
    }

    pub fn lt(value: f64, bound: f64) -> Self {
        Self::new(value, Comparison::Lt, bound)
    }

    pub fn ge(value: f64, bound: f64) -> Self {
        Self::new(value, Comparison::Ge, bound)
    }

    pub fn gt(value: f64, bound: f64) -> Self {
        Self::new(value, Comparison::Gt, bound)
    }

    pub fn info(value: f64) -> Self {
        Self::new(value, Comparison::Info, f64::NAN)
    }

    /// Whether the stored flag agrees with the stored value and threshold.
    pub fn is_consistent(&self) -> bool {
        self.pass == self.comparison.holds(self.value, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    #[serde(deserialize_with = "lenient::rows")]
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the columns");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }
}

/// One verification run: named scalars with thresholds, tables and
/// empirical constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub audit_name: String,
    pub inputs_digest: String,
    pub scalars: BTreeMap<String, Scalar>,
    pub tables: Vec<Table>,
    #[serde(deserialize_with = "lenient::map")]
    pub empirical_constants: BTreeMap<String, f64>,
    pub timestamp: String,
}

impl AuditReport {
    /// `inputs` is any canonical description of the run's inputs; only its
    /// SHA-256 is stored.
    pub fn new(audit_name: &str, inputs: &str) -> Self {
        AuditReport {
            audit_name: audit_name.to_string(),
            inputs_digest: digest_hex(inputs.as_bytes()),
            scalars: BTreeMap::new(),
            tables: Vec::new(),
            empirical_constants: BTreeMap::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn scalar(&mut self, name: &str, s: Scalar) -> &mut Self {
        self.scalars.insert(name.to_string(), s);
        self
    }

    pub fn constant(&mut self, name: &str, value: f64) -> &mut Self {
        self.empirical_constants.insert(name.to_string(), value);
        self
    }

    pub fn table(&mut self, t: Table) -> &mut Self {
        self.tables.push(t);
        self
    }

    pub fn get_table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).map(|s| s.value)
    }

    pub fn passed(&self) -> bool {
        self.scalars.values().all(|s| s.pass)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.scalars.iter().filter(|(_, s)| !s.pass).map(|(k, _)| k.as_str()).collect()
    }

    /// Whether every flag can be recomputed from its stored value.
    pub fn is_self_consistent(&self) -> bool {
        self.scalars.values().all(Scalar::is_consistent)
    }

    /// Folds another report's scalars, tables and constants in, prefixing
    /// names with `prefix.`.
    pub fn absorb(&mut self, prefix: &str, other: AuditReport) {
        for (k, v) in other.scalars {
            self.scalars.insert(format!("{prefix}.{k}"), v);
        }
        for (k, v) in other.empirical_constants {
            self.empirical_constants.insert(format!("{prefix}.{k}"), v);
        }
        for mut t in other.tables {
            t.name = format!("{prefix}.{}", t.name);
            self.tables.push(t);
        }
    }
}

pub fn digest_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

// JSON has no NaN or infinity; serde_json writes them as null, so read null back as NaN.
mod lenient {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer};

    pub fn number<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }

    pub fn rows<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let raw = Vec::<Vec<Option<f64>>>::deserialize(d)?;
        Ok(raw.into_iter().map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect())
    }

    pub fn map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let raw = BTreeMap::<String, Option<f64>>::deserialize(d)?;
        Ok(raw.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::NAN))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_follow_comparisons() {
        assert!(Scalar::le(1.0, 1.0).pass);
        assert!(!Scalar::lt(1.0, 1.0).pass);
        assert!(!Scalar::ge(f64::NAN, 0.0).pass);
        assert!(Scalar::info(f64::NAN).pass);
    }

    #[test]
    fn digest_ignores_timestamp() {
        let a = AuditReport::new("x", "inputs");
        let b = AuditReport::new("x", "inputs");
        assert_eq!(a.inputs_digest, b.inputs_digest);
        assert_ne!(a.inputs_digest, AuditReport::new("x", "other").inputs_digest);
    }

    #[test]
    fn absorb_prefixes_names() {
        let mut a = AuditReport::new("a", "");
        let mut b = AuditReport::new("b", "");
        b.scalar("s", Scalar::le(2.0, 1.0));
        a.absorb("child", b);
        assert!(!a.passed());
        assert_eq!(a.failures(), vec!["child.s"]);
    }

    #[test]
    fn json_round_trip_keeps_info_scalars() {
        let mut r = AuditReport::new("r", "");
        r.scalar("i", Scalar::info(3.0)).constant("c", f64::NAN);
        let mut t = Table::new("t", &["a"]);
        t.push(vec![f64::NAN]);
        r.table(t);
        let back: AuditReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert!(back.scalars["i"].tolerance.is_nan() && back.is_self_consistent());
        assert!(back.empirical_constants["c"].is_nan() && back.tables[0].rows[0][0].is_nan());
    }
}
