//! Class seminorms `sup ‖M̂^{ρ|α|−δ|β|−m} ∂^{(β)} Δ^α σ‖_op` along a cutoff ladder.

use serde::{Deserialize, Serialize};

use super::SubLaplacian;
use crate::error::{Error, Result};
use crate::field::SpatialSymbol;
use crate::fit::{fit_loglog, Verdict};
use crate::linalg;
use crate::par;
use crate::symbol::{apply_multi_spatial, multi_indices, spatial_derivative, Calculus};

/// Which side the weight multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormSpec {
    pub rho: f64,
    pub delta: f64,
    pub m: f64,
    pub alphas: Vec<Vec<usize>>,
    pub betas: Vec<Vec<usize>>,
    /// Strictly increasing cutoffs.
    pub ladder: Vec<f64>,
    pub side: Side,
}

impl SeminormSpec {
    /// All `|α| ≤ alpha_order`, `|β| ≤ beta_order` in dimension `dim`.
    pub fn up_to(rho: f64, delta: f64, m: f64, dim: usize, alpha_order: usize, beta_order: usize, ladder: Vec<f64>) -> Self {
        let alphas = (0..=alpha_order).flat_map(|k| multi_indices(dim, k)).collect();
        let betas = (0..=beta_order).flat_map(|k| multi_indices(dim, k)).collect();
        SeminormSpec {
            rho,
            delta,
            m,
            alphas,
            betas,
            ladder,
            side: Side::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormEntry {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub cutoffs: Vec<f64>,
    pub sups: Vec<f64>,
    /// Slope of `log sup` against `log ⟨ξ⟩` at the rung.
    pub exponent: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub name: String,
    pub entries: Vec<SeminormEntry>,
    pub max_exponent: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    /// Finite sweeps cannot certify membership.
    pub label: String,
}

impl SeminormReport {
    pub fn entry(&self, alpha: &[usize], beta: &[usize]) -> Option<&SeminormEntry> {
        self.entries.iter().find(|e| e.alpha == alpha && e.beta == beta)
    }
}

pub(crate) fn growth_exponent(group: crate::group::Group, cutoffs: &[f64], sups: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = cutoffs
        .iter()
        .zip(sups)
        .filter(|(_, &s)| s > 1e-300)
        .map(|(&c, &s)| ((1.0 + group.casimir_of_index(c)).sqrt(), s))
        .collect();
    if pts.len() < 2 {
        return (0.0, 0.0);
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = fit_loglog(&xs, &ys);
    (fit.slope, fit.residual)
}

/// Seminorm sweep of `sym` against the weights of `sub`.
pub fn seminorm(sym: &SpatialSymbol, sub: &SubLaplacian, spec: &SeminormSpec) -> Result<SeminormReport> {
    if sym.dual.group != sub.group {
        return Err(Error::Invalid("symbol and sub-Laplacian live on different groups".into()));
    }
    if spec.ladder.is_empty() || spec.ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("cutoff ladder must be non-empty and strictly increasing".into()));
    }
    let top = *spec.ladder.last().expect("non-empty");
    let calc = Calculus::new(sym.dual.group)?;
    let mut entries = Vec::new();
    for alpha in &spec.alphas {
        let da = apply_multi_spatial(&calc.collection, alpha, sym)?;
        if top > da.dual.cutoff + 1e-9 {
            return Err(Error::CutoffMismatch(format!(
                "ladder top {top} exceeds cutoff {} left after Δ^{alpha:?}",
                da.dual.cutoff
            )));
        }
        let na: usize = alpha.iter().sum();
        for beta in &spec.betas {
            let d = spatial_derivative(&calc.basis, beta, &da)?;
            let nb: usize = beta.iter().sum();
            let e = spec.rho * na as f64 - spec.delta * nb as f64 - spec.m;
            let nodes = if d.is_invariant() { 1 } else { d.grid.len() };
            let idx: Vec<usize> = (0..d.dual.len()).filter(|&k| d.dual.irreps[k].index() <= top + 1e-9).collect();
            let values: Vec<f64> = par::map_collect(&idx, |&k| {
                let xi = &d.dual.irreps[k];
                let w = sub.m_weight(e, xi);
                (0..nodes)
                    .map(|n| {
                        let b = &d.at(n).blocks[k];
                        let prod = match spec.side {
                            Side::Left => &w * b,
                            Side::Right => b * &w,
                        };
                        linalg::op_norm(&prod)
                    })
                    .fold(0.0, f64::max)
            });
            let sups: Vec<f64> = spec
                .ladder
                .iter()
                .map(|&c| {
                    idx.iter()
                        .zip(&values)
                        .filter(|(&k, _)| d.dual.irreps[k].index() <= c + 1e-9)
                        .map(|(_, &v)| v)
                        .fold(0.0, f64::max)
                })
                .collect();
            let (exponent, residual) = growth_exponent(sym.dual.group, &spec.ladder, &sups);
            entries.push(SeminormEntry {
                alpha: alpha.clone(),
                beta: beta.clone(),
                cutoffs: spec.ladder.clone(),
                sups,
                exponent,
                residual,
            });
        }
    }
    let max_exponent = entries.iter().map(|e| e.exponent).fold(f64::NEG_INFINITY, f64::max);
    let bounded = entries.iter().all(|e| e.sups.iter().all(|s| s.is_finite()));
    let threshold = 0.05;
    Ok(SeminormReport {
        name: format!("S^{{{},{}}}_{{{},{}}}", spec.m, sub.name, spec.rho, spec.delta),
        entries,
        max_exponent,
        threshold,
        verdict: Verdict::from_bool(bounded && max_exponent <= threshold),
        label: "empirical".into(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::field::MatrixField;
    use crate::group::{haar_grid, Dual, Group};
    use crate::linalg::re;

    #[test]
    fn weight_itself_has_unit_seminorm() {
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let dual = Dual::new(Group::Su2, 12.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Su2, 1.0).unwrap());
        let sym = SpatialSymbol::invariant(&grid, sub.m_weight_field(1.5, &dual));
        let spec = SeminormSpec::up_to(1.0, 0.0, 1.5, 3, 0, 0, vec![2.0, 4.0, 6.0, 8.0, 12.0]);
        let r = seminorm(&sym, &sub, &spec).unwrap();
        for s in &r.entries[0].sups {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn torus_bracket_power_in_class() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let dual = Dual::new(Group::Torus(1), 80.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 2.0).unwrap());
        let sym = SpatialSymbol::invariant(&grid, sub.m_weight_field(1.0, &dual));
        let spec = SeminormSpec::up_to(1.0, 0.0, 1.0, 1, 2, 0, vec![4.0, 8.0, 16.0, 32.0, 64.0]);
        let r = seminorm(&sym, &sub, &spec).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.entries.iter().map(|e| e.exponent).collect::<Vec<_>>());
        // with the wrong order the first difference still passes but α=0 grows
        let bad = SeminormSpec::up_to(1.0, 0.0, 0.0, 1, 0, 0, vec![4.0, 8.0, 16.0, 32.0, 64.0]);
        let r = seminorm(&sym, &sub, &bad).unwrap();
        assert!((r.max_exponent - 1.0).abs() < 0.05);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn margin_violation() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let dual = Dual::new(Group::Torus(1), 8.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 2.0).unwrap());
        let sym = SpatialSymbol::invariant(&grid, MatrixField::scalar_fn(&dual, |_| re(1.0)));
        let spec = SeminormSpec::up_to(1.0, 0.0, 0.0, 1, 1, 0, vec![2.0, 8.0]);
        assert!(matches!(seminorm(&sym, &sub, &spec), Err(Error::CutoffMismatch(_))));
    }
}
