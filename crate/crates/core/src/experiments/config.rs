//! Line-oriented `key = value` configuration with sections.
//!
//! ```text
//! [run]
//! experiment = heat-slope, weyl     # or "all"
//! seed = 7
//! out = results
//! cutoff = 300                      # optional, see each experiment's cutoff key
//! threads = 4                       # optional
//!
//! [heat-slope]
//! t_min = 1e-3
//! ```
//!
//! Every non-`run` section must name a registered experiment and may only
//! set keys that experiment declares. `#` and `;` start comments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::{find, registry, Experiment, Params};
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    /// Experiment names in run order; `all` expands to the whole registry.
    pub experiments: Vec<String>,
    pub seed: Option<u64>,
    pub cutoff: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

const RUN_KEYS: [&str; 6] = ["experiment", "experiments", "seed", "cutoff", "out", "threads"];

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::Invalid(format!("config: {e}")))?;
        let mut cfg = RunConfig::default();
        for (section, props) in ini.iter() {
            match section {
                None => {
                    if let Some((k, _)) = props.iter().next() {
                        return Err(Error::Invalid(format!("config: key '{k}' outside any section")));
                    }
                }
                Some("run") => {
                    for (k, v) in props.iter() {
                        let v = v.trim();
                        match k {
                            "experiment" | "experiments" => cfg.experiments.extend(split_names(v)),
                            "seed" => cfg.seed = Some(parse_num(k, v)?),
                            "cutoff" => cfg.cutoff = Some(parse_num(k, v)?),
                            "out" => cfg.out = Some(PathBuf::from(v)),
                            "threads" => cfg.threads = Some(parse_num(k, v)?),
                            _ => {
                                return Err(Error::Invalid(format!(
                                    "config: [run] has no key '{k}' (expected one of {RUN_KEYS:?})"
                                )))
                            }
                        }
                    }
                }
                Some(name) => {
                    let exp = find(name)?;
                    let entry = cfg.sections.entry(name.to_string()).or_default();
                    for (k, v) in props.iter() {
                        if !exp.keys.iter().any(|d| d.name == k) {
                            return Err(Error::Invalid(format!("config: experiment '{name}' has no key '{k}'")));
                        }
                        entry.insert(k.to_string(), v.trim().to_string());
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Registered experiments selected by this config, in order.
    pub fn selected(&self) -> Result<Vec<&'static Experiment>> {
        let mut out: Vec<&'static Experiment> = Vec::new();
        for name in &self.experiments {
            if name == "all" {
                out.extend(registry().iter());
            } else {
                out.push(find(name)?);
            }
        }
        let mut seen = Vec::new();
        out.retain(|e| {
            let fresh = !seen.contains(&e.name);
            seen.push(e.name);
            fresh
        });
        Ok(out)
    }

    pub fn params_for(&self, exp: &'static Experiment) -> Result<Params> {
        let values = self.sections.get(exp.name).cloned().unwrap_or_default();
        Params::new(exp, values, self.seed.unwrap_or(DEFAULT_SEED), self.cutoff)
    }
}

fn split_names(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
    v.parse::<T>()
        .map_err(|_| Error::Invalid(format!("config: {k} = '{v}' is not a valid number")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = RunConfig::parse(
            "# demo\n[run]\nexperiment = heat-slope, weyl\nseed = 7\nout = res\n\n[heat-slope]\nt_min = 1e-3 ; lower end\n",
        )
        .unwrap();
        assert_eq!(cfg.experiments, vec!["heat-slope", "weyl"]);
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.out, Some(PathBuf::from("res")));
        assert_eq!(cfg.sections["heat-slope"]["t_min"], "1e-3");
        let sel = cfg.selected().unwrap();
        assert_eq!(sel.len(), 2);
        let p = cfg.params_for(sel[0]).unwrap();
        assert_eq!(p.f64("t_min").unwrap(), 1e-3);
        assert_eq!(p.seed, 7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("[run]\nspeed = 3\n").is_err());
        assert!(RunConfig::parse("[not-an-experiment]\na = 1\n").is_err());
        assert!(RunConfig::parse("[weyl]\nnonsense = 1\n").is_err());
        assert!(RunConfig::parse("[run]\nseed = -4\n").is_err());
        assert!(RunConfig::parse("stray = 1\n").is_err());
        let cfg = RunConfig::parse("[run]\nexperiment = nope\n").unwrap();
        assert!(cfg.selected().is_err());
    }

    #[test]
    fn all_expands_without_duplicates() {
        let cfg = RunConfig::parse("[run]\nexperiment = weyl, all\n").unwrap();
        let sel = cfg.selected().unwrap();
        assert_eq!(sel.len(), registry().len());
        assert_eq!(sel[0].name, "weyl");
    }
}
