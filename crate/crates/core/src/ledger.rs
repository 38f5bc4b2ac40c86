//! Table of best-known `J(N)` values with binding verdicts recomputed on
//! every query.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bounds::e_lt;
use crate::error::{Error, Result};
use crate::solver::model::check_exponent;

/// Default binding slack relative to `|J(N)|`.
pub const DEFAULT_SLACK: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub energy: f64,
    /// Run identifier of the solve that produced the value.
    pub provenance: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingLedger {
    pub dim: usize,
    pub p: f64,
    pub c_lt: f64,
    /// Relative tolerance of the `J(N)/N ≥ e_LT` admission test.
    pub tolerance: f64,
    /// Binding slack relative to `|J(N)|`.
    #[serde(default = "default_slack")]
    pub slack: f64,
    pub entries: BTreeMap<u32, LedgerEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub k: u32,
    /// `J(K) + J(N-K) - J(N)`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BindingVerdict {
    pub n: u32,
    pub margins: Vec<Margin>,
    pub slack: f64,
    /// All margins exceed the slack.
    pub binds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: u32,
    /// Multiplicity `k_m` of each binding-set member `m`.
    pub parts: BTreeMap<u32, u32>,
    /// `Σ k_m J(m)`.
    pub energy: f64,
    /// Some `k_m ≥ 2`.
    pub repeated_part: bool,
}

fn default_slack() -> f64 {
    DEFAULT_SLACK
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

impl BindingLedger {
    pub fn new(dim: usize, p: f64, c_lt: f64) -> Result<Self> {
        check_exponent(dim, p)?;
        if !(c_lt > 0.0) {
            return Err(Error::InvalidParameter(format!("c_LT must be positive, got {c_lt}")));
        }
        Ok(Self { dim, p, c_lt, tolerance: 1e-6, slack: DEFAULT_SLACK, entries: BTreeMap::new() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn energy(&self, n: u32) -> Result<f64> {
        self.entries.get(&n).map(|e| e.energy).ok_or(Error::MissingEntry(n))
    }

    /// Records `J(n)`, keeping the lower of the old and new values. Rejects
    /// values that are nonnegative or fall below `n e_LT` beyond tolerance.
    pub fn insert(&mut self, n: u32, energy: f64, provenance: &str) -> Result<bool> {
        self.insert_at(n, energy, provenance, now())
    }

    pub fn insert_at(&mut self, n: u32, energy: f64, provenance: &str, timestamp: u64) -> Result<bool> {
        if n == 0 {
            return Err(Error::InvalidParameter("ledger masses start at 1".into()));
        }
        if !(energy < 0.0) {
            return Err(Error::InvalidParameter(format!("J({n}) = {energy} is not negative")));
        }
        let floor = e_lt(self.dim, self.p, self.c_lt)?;
        let per = energy / n as f64;
        if per < floor - self.tolerance * floor.abs() {
            return Err(Error::InvalidParameter(format!("J({n})/{n} = {per} lies below e_LT = {floor}")));
        }
        if self.entries.get(&n).is_some_and(|old| old.energy <= energy) {
            return Ok(false);
        }
        self.entries.insert(n, LedgerEntry { energy, provenance: provenance.to_string(), timestamp });
        Ok(true)
    }

    /// Margins `J(K) + J(N-K) - J(N)` for `1 ≤ K ≤ N/2` against the slack
    /// `slack · |J(N)|`.
    pub fn binding_check(&self, n: u32) -> Result<BindingVerdict> {
        let jn = self.energy(n)?;
        let slack = self.slack * jn.abs();
        let mut margins = Vec::new();
        for k in 1..=n / 2 {
            let m = self.energy(k)? + self.energy(n - k)? - jn;
            margins.push(Margin { k, margin: m });
        }
        let binds = margins.iter().all(|m| m.margin > slack);
        Ok(BindingVerdict { n, margins, slack, binds })
    }

    /// Integers `1..=max_n` that satisfy every binding inequality.
    pub fn binding_set(&self, max_n: u32) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for n in 1..=max_n {
            if self.binding_check(n)?.binds {
                out.push(n);
            }
        }
        Ok(out)
    }

    /// Splits `n` into binding-set members along failed inequalities.
    /// A split whose energy lies below `J(n)` beyond the slack means the
    /// ledger contradicts subadditivity and is reported as an error.
    pub fn binding_set_decompose(&self, n: u32) -> Result<Decomposition> {
        let mut parts = BTreeMap::new();
        self.split(n, &mut parts)?;
        let energy = parts.iter().map(|(&m, &k)| Ok(k as f64 * self.energy(m)?)).sum::<Result<f64>>()?;
        let jn = self.energy(n)?;
        if energy < jn - self.slack * jn.abs() {
            return Err(Error::InconsistentLedger(format!("decomposition energy {energy} below J({n}) = {jn}")));
        }
        let repeated_part = parts.values().any(|&k| k >= 2);
        Ok(Decomposition { n, parts, energy, repeated_part })
    }

    fn split(&self, n: u32, parts: &mut BTreeMap<u32, u32>) -> Result<()> {
        let v = self.binding_check(n)?;
        if v.binds {
            *parts.entry(n).or_insert(0) += 1;
            return Ok(());
        }
        let worst = v
            .margins
            .iter()
            .min_by(|a, b| a.margin.total_cmp(&b.margin))
            .expect("a failed verdict has margins");
        if worst.margin < -v.slack {
            return Err(Error::InconsistentLedger(format!(
                "J({}) + J({}) lies below J({n}) by {:.3e}",
                worst.k,
                n - worst.k,
                -worst.margin
            )));
        }
        self.split(worst.k, parts)?;
        self.split(n - worst.k, parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ledger(values: &[f64]) -> BindingLedger {
        let mut l = BindingLedger::new(1, 1.3, 1e-3).unwrap();
        for (i, &j) in values.iter().enumerate() {
            l.insert_at(i as u32 + 1, j, "test", 0).unwrap();
        }
        l
    }

    #[test]
    fn strict_binding_margin() {
        let l = ledger(&[-1.0, -2.5]);
        let v = l.binding_check(2).unwrap();
        assert!(v.binds);
        assert!((v.margins[0].margin - 0.5).abs() < 1e-15);
    }

    #[test]
    fn equality_is_not_binding() {
        let l = ledger(&[-1.0, -2.0]);
        let v = l.binding_check(2).unwrap();
        assert!(!v.binds);
        assert_eq!(v.margins[0].margin, 0.0);
    }

    #[test]
    fn decomposition_of_split_mass() {
        let l = ledger(&[-1.0, -2.5, -3.5]);
        let d = l.binding_set_decompose(3).unwrap();
        assert_eq!(d.parts, BTreeMap::from([(1, 1), (2, 1)]));
        assert!(!d.repeated_part);
        let d = l.binding_set_decompose(2).unwrap();
        assert_eq!(d.parts, BTreeMap::from([(2, 1)]));
    }

    #[test]
    fn subadditivity_violation_is_flagged() {
        let l = ledger(&[-1.0, -2.5, -3.0]);
        assert!(matches!(l.binding_set_decompose(3), Err(Error::InconsistentLedger(_))));
    }

    #[test]
    fn rejects_positive_and_sub_lt_values() {
        let mut l = BindingLedger::new(1, 1.3, 3.0).unwrap();
        assert!(l.insert(1, 0.1, "x").is_err());
        let floor = e_lt(1, 1.3, 3.0).unwrap();
        assert!(l.insert(1, 2.0 * floor, "x").is_err());
        assert!(l.insert(1, 0.5 * floor, "x").unwrap());
        assert!(!l.insert(1, 0.25 * floor, "y").unwrap());
        assert_eq!(l.entries[&1].provenance, "x");
    }

    #[test]
    fn missing_entries_error() {
        let l = ledger(&[-1.0]);
        assert!(matches!(l.binding_check(3), Err(Error::MissingEntry(3))));
    }
}
