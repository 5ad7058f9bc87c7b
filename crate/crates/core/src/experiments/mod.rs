//! Named experiments with declared parameters, verdicts and deterministic
//! CSV/JSON output.
//!
//! Every experiment declares its keys with defaults; a run resolves each key
//! from the supplied values (or the default), records the resolved value in
//! the summary and fails validation on keys it does not declare.

mod catalog;
pub mod config;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{FitReport, Verdict};
use crate::group::Group;
use crate::subelliptic::SubLaplacian;

pub use config::RunConfig;

/// One declared parameter.
#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub doc: &'static str,
}

const fn key(name: &'static str, default: &'static str, doc: &'static str) -> Key {
    Key { name, default, doc }
}

/// Registry entry.
pub struct Experiment {
    pub name: &'static str,
    pub description: &'static str,
    pub keys: &'static [Key],
    /// Key overridden by the `--cutoff` flag, if the experiment has one.
    pub cutoff_key: Option<&'static str>,
    /// Column layout of each emitted table.
    pub tables: &'static [(&'static str, &'static str)],
    run: fn(&Params) -> Result<Outcome>,
}

impl std::fmt::Debug for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Experiment").field("name", &self.name).finish()
    }
}

pub fn registry() -> &'static [Experiment] {
    catalog::REGISTRY
}

pub fn find(name: &str) -> Result<&'static Experiment> {
    registry()
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Invalid(format!("unknown experiment '{name}'")))
}

/// Human-readable registry dump: name, description, keys with defaults.
pub fn list_experiments() -> String {
    let mut out = String::new();
    for e in registry() {
        out.push_str(&format!("{:<18} {}\n", e.name, e.description));
        for k in e.keys {
            let flag = if e.cutoff_key == Some(k.name) { " [--cutoff]" } else { "" };
            out.push_str(&format!("    {:<14} = {:<24} {}{}\n", k.name, k.default, k.doc, flag));
        }
        for (t, cols) in e.tables {
            out.push_str(&format!("    -> {}_{}.csv: {}\n", e.name, t, cols));
        }
    }
    out
}

/// Resolved parameters of one run.
#[derive(Debug)]
pub struct Params {
    pub experiment: &'static Experiment,
    pub seed: u64,
    values: BTreeMap<String, String>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Params {
    /// Rejects keys the experiment does not declare. A `cutoff` override
    /// replaces the experiment's cutoff key.
    pub fn new(experiment: &'static Experiment, values: BTreeMap<String, String>, seed: u64, cutoff: Option<f64>) -> Result<Self> {
        for k in values.keys() {
            if !experiment.keys.iter().any(|d| d.name == k) {
                return Err(Error::Invalid(format!("experiment '{}' has no key '{k}'", experiment.name)));
            }
        }
        let mut values = values;
        if let (Some(c), Some(k)) = (cutoff, experiment.cutoff_key) {
            values.insert(k.to_string(), fmt_num(c));
        }
        let p = Params {
            experiment,
            seed,
            values,
            resolved: RefCell::new(BTreeMap::new()),
        };
        Ok(p)
    }

    pub fn defaults(name: &str, seed: u64) -> Result<Self> {
        Self::new(find(name)?, BTreeMap::new(), seed, None)
    }

    fn raw(&self, name: &str) -> Result<String> {
        // an undeclared read is a bug in the experiment, not bad input
        let decl = self
            .experiment
            .keys
            .iter()
            .find(|k| k.name == name)
            .unwrap_or_else(|| panic!("experiment '{}' reads undeclared key '{name}'", self.experiment.name));
        let v = self.values.get(name).cloned().unwrap_or_else(|| decl.default.to_string());
        self.resolved.borrow_mut().insert(name.to_string(), v.clone());
        Ok(v)
    }

    pub fn text(&self, name: &str) -> Result<String> {
        Ok(self.raw(name)?.trim().to_string())
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        let v = self.raw(name)?;
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Invalid(format!("{name}: '{v}' is not a number")))
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        let v = self.raw(name)?;
        v.trim()
            .parse::<usize>()
            .map_err(|_| Error::Invalid(format!("{name}: '{v}' is not a non-negative integer")))
    }

    /// Comma-separated numbers.
    pub fn list(&self, name: &str) -> Result<Vec<f64>> {
        let v = self.raw(name)?;
        v.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Invalid(format!("{name}: '{s}' is not a number")))
            })
            .collect()
    }

    /// Comma-separated numbers that must increase strictly.
    pub fn ladder(&self, name: &str) -> Result<Vec<f64>> {
        let l = self.list(name)?;
        if l.is_empty() || l.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(format!("{name} must be a non-empty strictly increasing list")));
        }
        Ok(l)
    }

    pub fn group(&self, name: &str) -> Result<Group> {
        Group::parse(&self.text(name)?)
    }

    pub fn sub_laplacian(&self, group: Group, name: &str) -> Result<SubLaplacian> {
        SubLaplacian::by_name(group, &self.text(name)?)
    }

    fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

/// One asserted quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// The acceptance region in words, e.g. `"< 1e-8"`.
    pub target: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
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
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Result of a run: checks, fits and tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub experiment: String,
    pub seed: u64,
    pub verdict: Verdict,
    pub params: BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub fits: Vec<FitReport>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    /// Names of the emitted CSV files.
    pub table_files: Vec<String>,
}

impl Outcome {
    fn new(p: &Params) -> Self {
        Outcome {
            experiment: p.experiment.name.to_string(),
            seed: p.seed,
            verdict: Verdict::Pass,
            params: BTreeMap::new(),
            checks: Vec::new(),
            fits: Vec::new(),
            tables: Vec::new(),
            table_files: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, value: f64, target: &str, ok: bool) -> &mut Self {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            target: target.to_string(),
            verdict: Verdict::from_bool(ok),
        });
        self
    }

    fn fit(&mut self, report: FitReport) -> &mut Self {
        self.fits.push(report);
        self
    }

    fn table(&mut self, table: Table) -> &mut Self {
        self.tables.push(table);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn check_named(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn file_stem(&self) -> String {
        self.experiment.clone()
    }
}

/// Runs a resolved experiment. The verdict is PASS iff every check passes.
pub fn run(p: &Params) -> Result<Outcome> {
    let mut out = (p.experiment.run)(p)?;
    out.params = p.resolved();
    out.verdict = Verdict::from_bool(!out.checks.is_empty() && out.checks.iter().all(|c| c.verdict.is_success()));
    out.table_files = out.tables.iter().map(|t| format!("{}_{}.csv", out.file_stem(), t.name)).collect();
    Ok(out)
}

/// Runs `name` with default parameters.
pub fn run_default(name: &str, seed: u64) -> Result<Outcome> {
    run(&Params::defaults(name, seed)?)
}

/// Shortest round-trip decimal, in scientific form outside `[1e-4, 1e9)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e9).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn render_csv(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(&table.columns).map_err(fail)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|&v| fmt_num(v))).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

pub fn render_json(outcome: &Outcome) -> Result<String> {
    let mut s = serde_json::to_string_pretty(outcome)?;
    s.push('\n');
    Ok(s)
}

/// Writes `<experiment>.json` plus one CSV per table into `dir`.
pub fn write_outcome(outcome: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (t, file) in outcome.tables.iter().zip(&outcome.table_files) {
        let path = dir.join(file);
        fs::write(&path, render_csv(t)?)?;
        written.push(path);
    }
    let path = dir.join(format!("{}.json", outcome.file_stem()));
    fs::write(&path, render_json(outcome)?)?;
    written.push(path);
    Ok(written)
}

/// All emitted bytes of an outcome, in file order; used for determinism checks.
pub fn rendered_bytes(outcome: &Outcome) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (t, file) in outcome.tables.iter().zip(&outcome.table_files) {
        out.push((file.clone(), render_csv(t)?));
    }
    out.push((format!("{}.json", outcome.file_stem()), render_json(outcome)?));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contract() {
        let names: Vec<&str> = registry().iter().map(|e| e.name).collect();
        assert!(names.len() >= 12);
        assert!(names.contains(&"plancherel"));
        assert!(names.contains(&"dixmier"));
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len(), "duplicate experiment names");
        for e in registry() {
            if let Some(k) = e.cutoff_key {
                assert!(e.keys.iter().any(|d| d.name == k), "{}", e.name);
            }
            // defaults must parse
            Params::defaults(e.name, 1).unwrap();
        }
        assert!(list_experiments().contains("heat-slope"));
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(find("nope").is_err());
        let mut v = BTreeMap::new();
        v.insert("bogus".to_string(), "1".to_string());
        assert!(Params::new(find("plancherel").unwrap(), v, 0, None).is_err());
        let mut v = BTreeMap::new();
        v.insert("cutoff".to_string(), "eight".to_string());
        let p = Params::new(find("plancherel").unwrap(), v, 0, None).unwrap();
        assert!(matches!(run(&p), Err(Error::Invalid(_))));
    }

    #[test]
    fn cutoff_override_and_resolution() {
        let p = Params::new(find("plancherel").unwrap(), BTreeMap::new(), 3, Some(2.5)).unwrap();
        assert_eq!(p.f64("cutoff").unwrap(), 2.5);
        let out = run(&p).unwrap();
        assert_eq!(out.params.get("cutoff").map(String::as_str), Some("2.5"));
        assert!(out.passed());
    }

    #[test]
    fn number_format_round_trips() {
        for v in [0.0, 1.0, -2.5, 1e-12, 3.0e12, 0.1 + 0.2, f64::MIN_POSITIVE] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_num(1e-10), "1e-10");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec![1.0, 0.5]);
        assert_eq!(render_csv(&t).unwrap(), "a,b\n1,0.5\n");
    }
}
