//! Functional calculus on symbols: spectral functions of normal blocks,
//! multiplier seminorms of `f(tL)`, contour integrals of resolvents,
//! parameter-ellipticity sweeps and Gårding feasibility.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MatrixField, SpatialSymbol};
use crate::fit::{fit_loglog, FitReport, Verdict};
use crate::group::{haar_grid, Dual};
use crate::linalg::{self, c, re, CMat, C64};
use crate::par;
use crate::subelliptic::{seminorm, SeminormEntry, SeminormReport, SeminormSpec, SubLaplacian};
use crate::symbol::operator_matrix;

const NORMALITY_TOL: f64 = 1e-8;

/// Eigenvalues and a unitary diagonalizing a normal block.
fn normal_eig(b: &CMat) -> (Vec<C64>, CMat) {
    let d = b.nrows();
    if linalg::is_diagonal(b, 0.0) {
        return ((0..d).map(|i| b[(i, i)]).collect(), linalg::identity(d));
    }
    let h = linalg::hermitian_part(b);
    let k = (b - b.adjoint()) * c(0.0, -0.5);
    // a generic real combination of the commuting parts separates joint eigenspaces
    let mix = &h + &k * re(std::f64::consts::SQRT_2 - 0.3);
    let (_, u) = linalg::hermitian_eig(&mix);
    let diag = u.adjoint() * b * &u;
    ((0..d).map(|i| diag[(i, i)]).collect(), u)
}

/// `f(σ)` blockwise for normal `σ`.
pub fn spectral_function<F: Fn(C64) -> C64 + Sync>(sigma: &MatrixField, f: F) -> Result<MatrixField> {
    for (xi, b) in sigma.iter() {
        let defect = linalg::normality_defect(b);
        if defect > NORMALITY_TOL {
            return Err(Error::NonNormal(format!("{xi}: ‖σσ*−σ*σ‖ = {defect:.3e}")));
        }
    }
    let blocks = par::map_collect(&sigma.blocks, |b| {
        let (vals, u) = normal_eig(b);
        let fv: Vec<C64> = vals.iter().map(|&v| f(v)).collect();
        &u * linalg::diag_complex(&fv) * u.adjoint()
    });
    let diagonal = blocks.iter().all(|b| linalg::is_diagonal(b, 0.0));
    Ok(MatrixField {
        dual: sigma.dual.clone(),
        blocks,
        diagonal,
    })
}

/// Sweep of `‖M̂^{−m+|α|} Δ^α f(tL̂)‖` over `ts`, each normalized by `t^{m/2}`.
///
/// Entries carry the normalized sups at the top rung against `t`; the
/// exponent is their growth rate as `t → 0`. With a single `t` the verdict
/// is the cutoff-ladder seminorm test instead.
pub fn hulanicki_check<F: Fn(f64) -> f64 + Sync>(
    f: F,
    m: f64,
    sub: &SubLaplacian,
    ts: &[f64],
    ladder: &[f64],
) -> Result<SeminormReport> {
    if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(Error::Invalid("t-grid must lie in (0, 1]".into()));
    }
    let top = *ladder.last().ok_or_else(|| Error::Invalid("empty cutoff ladder".into()))?;
    let group = sub.group;
    let dim = group.dimension();
    // two difference orders consume up to 1 unit of cutoff
    let dual = Dual::new(group, top + 2.0)?;
    let grid = Arc::new(haar_grid(group, 1.0)?);
    let spec = SeminormSpec::up_to(1.0, 0.0, m, dim, 2, 0, ladder.to_vec());
    let mut per_alpha: Vec<(Vec<usize>, Vec<f64>)> = spec.alphas.iter().map(|a| (a.clone(), Vec::new())).collect();
    let mut ladder_max = f64::NEG_INFINITY;
    for &t in ts {
        let field = sub.function_field(&dual, |v| re(f(t * v.max(0.0))));
        let sym = SpatialSymbol::invariant(&grid, field);
        let rep = seminorm(&sym, sub, &spec)?;
        ladder_max = ladder_max.max(rep.max_exponent);
        let norm = t.powf(m / 2.0);
        for (alpha, vals) in per_alpha.iter_mut() {
            let e = rep.entry(alpha, &[0; 0]).or_else(|| rep.entry(alpha, &vec![0; dim]));
            let top_sup = e.map(|e| e.sups.last().cloned().unwrap_or(0.0)).unwrap_or(0.0);
            vals.push(top_sup / norm);
        }
    }
    let inv_t: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
    let entries: Vec<SeminormEntry> = per_alpha
        .into_iter()
        .map(|(alpha, sups)| {
            let pts: Vec<(f64, f64)> = inv_t.iter().cloned().zip(sups.iter().cloned()).filter(|p| p.1 > 1e-14).collect();
            let (exponent, residual) = if pts.len() >= 2 {
                let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
                let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
                let fit = fit_loglog(&xs, &ys);
                (fit.slope, fit.residual)
            } else {
                (0.0, 0.0)
            };
            SeminormEntry {
                alpha,
                beta: Vec::new(),
                cutoffs: ts.to_vec(),
                sups,
                exponent,
                residual,
            }
        })
        .collect();
    let threshold = 0.1;
    let max_exponent = if ts.len() == 1 {
        ladder_max
    } else {
        entries.iter().map(|e| e.exponent).fold(f64::NEG_INFINITY, f64::max)
    };
    let finite = entries.iter().all(|e| e.sups.iter().all(|s| s.is_finite()));
    Ok(SeminormReport {
        name: format!("f(tL) in S^{{{m},{}}}", sub.name),
        entries,
        max_exponent,
        threshold,
        verdict: Verdict::from_bool(finite && max_exponent <= threshold),
        label: "empirical".into(),
    })
}

// ---------------------------------------------------------------------------
// Contours

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContourShape {
    /// Sector `{ε < |z| < R, |arg z| < angle}` around the positive axis.
    Keyhole { eps: f64, radius: f64, angle: f64 },
    Circle { center: (f64, f64), radius: f64 },
}

/// Quadrature nodes `z_j` with weights `w_j ≈ z'(s_j) ds`, positively oriented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub nodes: Vec<C64>,
    pub weights: Vec<C64>,
    pub shape: ContourShape,
    pub positive: bool,
    /// Largest mismatch between consecutive piece endpoints.
    pub closure_gap: f64,
}

fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).expect("n >= 1"));
    let mut pairs: Vec<(f64, f64)> = rule.as_node_weight_pairs().iter().map(|&(x, w)| (x, w)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

impl Contour {
    /// Four pieces of `per_piece` Gauss nodes: outgoing ray at `−angle` and
    /// incoming ray at `+angle` (both in `log |z|`), the outer arc and the
    /// inner arc (both in angle).
    pub fn keyhole(eps: f64, radius: f64, angle: f64, per_piece: usize) -> Result<Contour> {
        if !(eps > 0.0 && radius > eps && angle > 0.0 && angle < PI) {
            return Err(Error::Invalid(format!("bad keyhole eps={eps} radius={radius} angle={angle}")));
        }
        let gl = gauss_legendre(per_piece);
        let mut nodes = Vec::with_capacity(4 * per_piece);
        let mut weights = Vec::with_capacity(4 * per_piece);
        let (l0, l1) = (eps.ln(), radius.ln());
        // piece endpoints, for the closure check
        let mut ends: Vec<(C64, C64)> = Vec::new();
        let ray = |theta: f64, out: bool, nodes: &mut Vec<C64>, weights: &mut Vec<C64>| {
            let dir = C64::from_polar(1.0, theta);
            for &(s, w) in &gl {
                let s = if out { s } else { -s };
                let u = 0.5 * (l0 + l1) + 0.5 * (l1 - l0) * s;
                let z = dir * u.exp();
                nodes.push(z);
                // dz = z du, du = ±(l1−l0)/2 ds
                let sign = if out { 1.0 } else { -1.0 };
                weights.push(z * (sign * 0.5 * (l1 - l0) * w));
            }
        };
        let arc = |r: f64, a0: f64, a1: f64, nodes: &mut Vec<C64>, weights: &mut Vec<C64>| {
            for &(s, w) in &gl {
                let phi = 0.5 * (a0 + a1) + 0.5 * (a1 - a0) * s;
                let z = C64::from_polar(r, phi);
                nodes.push(z);
                weights.push(z * c(0.0, 1.0) * (0.5 * (a1 - a0) * w));
            }
        };
        ray(-angle, true, &mut nodes, &mut weights);
        ends.push((C64::from_polar(eps, -angle), C64::from_polar(radius, -angle)));
        arc(radius, -angle, angle, &mut nodes, &mut weights);
        ends.push((C64::from_polar(radius, -angle), C64::from_polar(radius, angle)));
        ray(angle, false, &mut nodes, &mut weights);
        ends.push((C64::from_polar(radius, angle), C64::from_polar(eps, angle)));
        arc(eps, angle, -angle, &mut nodes, &mut weights);
        ends.push((C64::from_polar(eps, angle), C64::from_polar(eps, -angle)));
        let closure_gap = (0..ends.len())
            .map(|i| (ends[i].1 - ends[(i + 1) % ends.len()].0).norm())
            .fold(0.0, f64::max);
        Ok(Contour {
            nodes,
            weights,
            shape: ContourShape::Keyhole { eps, radius, angle },
            positive: true,
            closure_gap,
        })
    }

    /// Trapezoid rule on a circle.
    pub fn circle(center: C64, radius: f64, n: usize) -> Result<Contour> {
        if !(radius > 0.0) || n < 3 {
            return Err(Error::Invalid(format!("bad circle radius={radius} n={n}")));
        }
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for j in 0..n {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let e = C64::from_polar(1.0, phi);
            nodes.push(center + e * radius);
            weights.push(e * c(0.0, 1.0) * (radius * 2.0 * PI / n as f64));
        }
        Ok(Contour {
            nodes,
            weights,
            shape: ContourShape::Circle {
                center: (center.re, center.im),
                radius,
            },
            positive: true,
            closure_gap: 0.0,
        })
    }

    /// Default keyhole for a positive symbol: `ε = min(1/2, s_min/4)`,
    /// `R = 4 s_max`, rays at `±3π/4`, 16 nodes per piece.
    pub fn default_for(sym: &SpatialSymbol) -> Result<Contour> {
        Self::default_with_nodes(sym, 16)
    }

    /// [`Contour::default_for`] with `per_piece` nodes on each of the four pieces.
    pub fn default_with_nodes(sym: &SpatialSymbol, per_piece: usize) -> Result<Contour> {
        let mut smin = f64::INFINITY;
        let mut smax = 0.0f64;
        for f in sym.node_fields().iter() {
            for (_, b) in f.iter() {
                smin = smin.min(linalg::min_singular_value(b));
                smax = smax.max(linalg::op_norm(b));
            }
        }
        if !(smin > 0.0) {
            return Err(Error::Invalid("default keyhole needs an invertible symbol".into()));
        }
        Contour::keyhole((0.5f64).min(smin / 4.0), 4.0 * smax, 0.75 * PI, per_piece)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap <= 1e-12
    }
}

/// `B₀ = −(1/2πi) Σ_j w_j F(z_j) (a − z_j)^{−1}` at every node and irrep.
pub fn contour_calculus<F: Fn(C64) -> C64 + Sync>(sym: &SpatialSymbol, f: F, contour: &Contour) -> Result<SpatialSymbol> {
    if !contour.is_closed() {
        return Err(Error::Invalid(format!("contour is open (gap {:.3e})", contour.closure_gap)));
    }
    let fz: Vec<C64> = contour.nodes.iter().map(|&z| f(z)).collect();
    let factor = -1.0 / (2.0 * PI) * c(0.0, -1.0);
    let nodes = if sym.is_invariant() { 1 } else { sym.grid.len() };
    let mut fields = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let field = sym.at(node);
        let blocks: Vec<Result<CMat>> = par::map_collect(&(0..field.len()).collect::<Vec<_>>(), |&k| {
            let a = &field.blocks[k];
            let d = a.nrows();
            let mut acc = CMat::zeros(d, d);
            for (j, (&z, &w)) in contour.nodes.iter().zip(&contour.weights).enumerate() {
                let shifted = a - linalg::identity(d) * z;
                let dist = linalg::min_singular_value(&shifted);
                if dist < 1e-6 {
                    return Err(Error::Contour {
                        node,
                        irrep: format!("{} at contour node {j} (z = {z})", field.dual.irreps[k]),
                        distance: dist,
                    });
                }
                let r = shifted.try_inverse().ok_or_else(|| Error::Contour {
                    node,
                    irrep: format!("{} at contour node {j}", field.dual.irreps[k]),
                    distance: dist,
                })?;
                acc += r * (w * fz[j]);
            }
            Ok(acc * factor)
        });
        let blocks = blocks.into_iter().collect::<Result<Vec<_>>>()?;
        let diagonal = blocks.iter().all(|b| linalg::is_diagonal(b, 0.0));
        fields.push(MatrixField {
            dual: field.dual.clone(),
            blocks,
            diagonal,
        });
    }
    if sym.is_invariant() {
        Ok(SpatialSymbol::invariant(&sym.grid, fields.pop().expect("one field")))
    } else {
        SpatialSymbol::from_nodes(&sym.grid, fields)
    }
}

// ---------------------------------------------------------------------------
// Parameter ellipticity

/// `sup ‖(|λ|^{1/m} + M̂)^m (a − λ)^{−1}‖` over the samples `lambdas`, the
/// grid nodes and irreps below each ladder rung. PASS when finite and the
/// growth exponent along the ladder is at most 0.05.
pub fn parameter_ellipticity_check(
    sym: &SpatialSymbol,
    sub: &SubLaplacian,
    m: f64,
    lambdas: &[C64],
    ladder: &[f64],
) -> Result<FitReport> {
    if m == 0.0 || lambdas.is_empty() || ladder.is_empty() {
        return Err(Error::Invalid("need m != 0, λ samples and a cutoff ladder".into()));
    }
    let top = *ladder.last().expect("non-empty");
    if top > sym.dual.cutoff + 1e-9 {
        return Err(Error::CutoffMismatch(format!("ladder top {top} above cutoff {}", sym.dual.cutoff)));
    }
    let nodes = if sym.is_invariant() { 1 } else { sym.grid.len() };
    let idx: Vec<usize> = (0..sym.dual.len()).filter(|&k| sym.dual.irreps[k].index() <= top + 1e-9).collect();
    let per_irrep: Vec<f64> = par::map_collect(&idx, |&k| {
        let xi = &sym.dual.irreps[k];
        let d = xi.dim();
        let mut sup = 0.0f64;
        for lam in lambdas {
            let shift = lam.norm().powf(1.0 / m);
            let weight = sub.function_block(xi, |v| re((shift + (1.0 + v.max(0.0)).sqrt()).powf(m)));
            for n in 0..nodes {
                let a = &sym.at(n).blocks[k];
                let shifted = a - linalg::identity(d) * *lam;
                match linalg::try_inverse(&shifted) {
                    Some(r) => sup = sup.max(linalg::op_norm(&(&weight * r))),
                    None => return f64::INFINITY,
                }
            }
        }
        sup
    });
    let sups: Vec<f64> = ladder
        .iter()
        .map(|&c| {
            idx.iter()
                .zip(&per_irrep)
                .filter(|(&k, _)| sym.dual.irreps[k].index() <= c + 1e-9)
                .map(|(_, &v)| v)
                .fold(0.0, f64::max)
        })
        .collect();
    let finite = sups.iter().all(|s| s.is_finite());
    let (exponent, _) = crate::subelliptic::growth_exponent(sym.dual.group, ladder, &sups);
    let samples: Vec<(f64, f64)> = ladder.iter().cloned().zip(sups.iter().cloned()).collect();
    let mut report = FitReport::loglog("parameter-ellipticity", samples.clone()).labels("cutoff", "sup");
    if !finite {
        report.exponent = f64::INFINITY;
    } else {
        report.exponent = exponent;
    }
    Ok(report
        .extra("sup", sups.iter().cloned().fold(0.0, f64::max))
        .with_verdict(Verdict::from_bool(finite && exponent <= 0.05)))
}

// ---------------------------------------------------------------------------
// Gårding inequality

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GardingResult {
    /// Largest feasible `C₁` with its `C₂`, or `None`.
    pub pair: Option<(f64, f64)>,
    /// `sup ‖M̂^m A^{−1}‖` of the symmetrized symbol (infinite when singular).
    pub ellipticity_constant: f64,
    /// Smallest generalized eigenvalue of `(H, S)` at the band limit.
    pub generalized_min: f64,
    pub band_limit: f64,
    pub budget: f64,
}

/// Allowed relative drop of the lowest eigenvalue under band doubling.
const DRIFT: f64 = 0.1;

fn min_eig(m: &CMat) -> f64 {
    linalg::hermitian_eig(m).0.first().cloned().unwrap_or(f64::INFINITY)
}

/// Upper-left compression to the first `n` basis functions.
fn compress(m: &CMat, n: usize) -> CMat {
    m.view((0, 0), (n, n)).into_owned()
}

/// Largest `C₁` such that `H − C₁S + C₂ ⪰ 0` with `C₂ ≤ budget` on the band
/// `n_small` and the lowest eigenvalue of `H − C₁S` drops by at most
/// `DRIFT (1 + |λ|)` on the full matrices.
///
/// `h` and `s` are Hermitian on the doubled band; their leading `n_small`
/// block is the band-limited compression.
pub fn garding_from_matrices(h: &CMat, s: &CMat, n_small: usize, budget: f64) -> Result<(Option<(f64, f64)>, f64)> {
    let h_small = compress(h, n_small);
    let s_small = compress(s, n_small);
    let (svals, _) = linalg::hermitian_eig(&s_small);
    if svals.first().map_or(true, |&v| v <= 1e-12 * svals[svals.len() - 1]) {
        return Err(Error::Invalid("weight Gram matrix is not positive definite".into()));
    }
    let s_inv_half = linalg::hermitian_function(&s_small, |v| re(1.0 / v.sqrt()));
    let g = &s_inv_half * &h_small * &s_inv_half;
    let (gvals, _) = linalg::hermitian_eig(&linalg::hermitian_part(&g));
    let g0 = gvals[0];
    let g_max = gvals[gvals.len() - 1];
    let scale = linalg::op_norm(h).max(1.0);
    let feasible = |c1: f64| -> Option<f64> {
        let lo = min_eig(&(&h_small - &s_small * re(c1)));
        if lo < -budget {
            return None;
        }
        // a bounded-below form converges under band doubling; an unbounded
        // one keeps dropping at the rate of the highest frequencies
        let full = min_eig(&(h - s * re(c1)));
        if lo - full > DRIFT * (1.0 + lo.abs()) {
            return None;
        }
        Some(lo)
    };
    let pair = |c1: f64, lo: f64| {
        let c2 = if -lo <= 1e-9 * scale { 0.0 } else { -lo };
        (c1, c2)
    };
    let Some(lo0) = feasible(0.0) else {
        return Ok((None, g0));
    };
    let mut good = (0.0, lo0);
    let mut hi = g_max.max(0.0) + 1.0;
    if let Some(lo) = feasible(hi) {
        return Ok((Some(pair(hi, lo)), g0));
    }
    let mut lo_c = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo_c + hi);
        match feasible(mid) {
            Some(v) => {
                lo_c = mid;
                good = (mid, v);
            }
            None => hi = mid,
        }
        if hi - lo_c <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    // g0 is the exact edge with C₂ = 0; the drift test only locates it to
    // within the drift tolerance
    if (good.0 - g0).abs() <= 1e-3 * g0.abs().max(1.0) {
        if let Some(v) = feasible(g0) {
            good = (g0, v);
        }
    }
    Ok((Some(pair(good.0, good.1)), g0))
}

/// Gårding feasibility for `sym` against `M̂^m` at `band_limit`, checked for
/// stability on the doubled band.
pub fn garding_feasibility(sym: &SpatialSymbol, sub: &SubLaplacian, m: f64, band_limit: f64, budget: f64) -> Result<GardingResult> {
    let big = 2.0 * band_limit;
    if big > sym.dual.cutoff + 1e-9 {
        return Err(Error::CutoffMismatch(format!(
            "Gårding check needs the symbol up to {big}, have {}",
            sym.dual.cutoff
        )));
    }
    // ‖M̂^m A^{-1}‖ for the symmetrized symbol
    let weight = sub.m_weight_field(m, &sym.dual);
    let nodes = if sym.is_invariant() { 1 } else { sym.grid.len() };
    let mut c0 = 0.0f64;
    'outer: for n in 0..nodes {
        for (k, b) in sym.at(n).blocks.iter().enumerate() {
            let a = linalg::hermitian_part(b);
            match linalg::try_inverse(&a) {
                Some(inv) => c0 = c0.max(linalg::op_norm(&(&weight.blocks[k] * inv))),
                None => {
                    c0 = f64::INFINITY;
                    break 'outer;
                }
            }
        }
    }
    let (a, basis) = operator_matrix(sym, big)?;
    let h = linalg::hermitian_part(&a);
    let wsym = SpatialSymbol::invariant(&sym.grid, weight);
    let (s, _) = operator_matrix(&wsym, big)?;
    let small = Dual::new(sym.dual.group, band_limit)?;
    // basis order is by index, so the small band is a leading block
    let n_small = small.total_dim();
    debug_assert!(basis.irreps[..small.len()].iter().zip(&small.irreps).all(|(a, b)| a.label == b.label));
    let (pair, g0) = garding_from_matrices(&h, &linalg::hermitian_part(&s), n_small, budget)?;
    Ok(GardingResult {
        pair,
        ellipticity_constant: c0,
        generalized_min: g0,
        band_limit,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{Group, GroupPoint};
    use crate::symbol::laplacian_symbol;
    use rand::SeedableRng;
    use rand::Rng;

    fn torus_sym(cutoff: f64, f: impl Fn(f64, f64) -> f64 + Sync) -> SpatialSymbol {
        let dual = Dual::new(Group::Torus(1), cutoff).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 2.0 * cutoff + 2.0).unwrap());
        SpatialSymbol::from_fn(&grid, &dual, |x: &GroupPoint, xi| {
            let k = xi.torus_k().unwrap()[0] as f64;
            linalg::diag_real(&[f(x.coords()[0], k)])
        })
    }

    #[test]
    fn spectral_function_identity_and_power() {
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let dual = Dual::new(Group::Su2, 4.0).unwrap();
        let w = sub.m_weight_field(1.0, &dual);
        let id = spectral_function(&w, |z| z).unwrap();
        assert!(id.max_abs_diff(&w) < 1e-12);
        let p = spectral_function(&w, |z| z.powf(-1.5)).unwrap();
        assert!(p.max_abs_diff(&sub.m_weight_field(-1.5, &dual)) < 1e-12);
    }

    #[test]
    fn spectral_function_rotated_blocks() {
        let sub = SubLaplacian::by_name(Group::Su2, "l23").unwrap();
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let sym = sub.symbol(&dual);
        let t = 0.3;
        let heat = spectral_function(&sym, |z| (-t * z).exp()).unwrap();
        let direct = sub.function_field(&dual, |v| re((-t * v).exp()));
        assert!(heat.max_abs_diff(&direct) < 1e-12);
        // homomorphism on commuting inputs
        let a = spectral_function(&sym, |z| z + 1.0).unwrap();
        let b = spectral_function(&sym, |z| (z + 1.0).powi(2)).unwrap();
        assert!(a.mul(&a).unwrap().max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn non_normal_block_rejected() {
        let dual = Dual::new(Group::Su2, 0.5).unwrap();
        let f = MatrixField::from_fn(&dual, |xi| {
            let mut m = linalg::identity(xi.dim());
            if xi.dim() == 2 {
                m[(0, 1)] = re(1.0);
            }
            m
        });
        assert!(matches!(spectral_function(&f, |z| z), Err(Error::NonNormal(_))));
    }

    #[test]
    fn hulanicki_identity_and_decay() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let ladder = [4.0, 8.0, 16.0, 32.0];
        let r = hulanicki_check(|_| 1.0, 0.0, &sub, &[1.0, 0.5, 0.25], &ladder).unwrap();
        for e in r.entries.iter().filter(|e| e.alpha.iter().sum::<usize>() > 0) {
            assert!(e.sups.iter().all(|&s| s < 1e-12));
        }
        assert_eq!(r.verdict, Verdict::Pass);
        let ts: Vec<f64> = (0..7).map(|i| 0.5f64.powi(i)).collect();
        let r = hulanicki_check(|l| (1.0 + l).powf(-0.5), -1.0, &sub, &ts, &ladder).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.max_exponent);
        // f(λ) = λ at fixed t is a symbol of order 2
        let r = hulanicki_check(|l| l, 2.0, &sub, &[0.5], &ladder).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.max_exponent);
        let r = hulanicki_check(|l| l, 0.0, &sub, &[0.5], &ladder).unwrap();
        assert_eq!(r.verdict, Verdict::Fail, "{}", r.max_exponent);
    }

    #[test]
    fn circle_inverse() {
        let dual = Dual::new(Group::Torus(1), 3.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 1.0).unwrap());
        let a = MatrixField::scalar_fn(&dual, |xi| re(1.0 + xi.casimir()));
        let sym = SpatialSymbol::invariant(&grid, a.clone());
        let circle = Contour::circle(c(5.5, 0.0), 5.0, 512).unwrap();
        let b = contour_calculus(&sym, |z| 1.0 / z, &circle).unwrap();
        let inv = a.inverse().unwrap();
        assert!(b.invariant_field().unwrap().max_abs_diff(&inv) < 1e-10);
    }

    #[test]
    fn keyhole_square_root() {
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Su2, 1.0).unwrap());
        let a = sub.m_weight_field(2.0, &dual);
        let sym = SpatialSymbol::invariant(&grid, a.clone());
        let contour = Contour::default_for(&sym).unwrap();
        assert_eq!(contour.len(), 64);
        assert!(contour.is_closed());
        let b = contour_calculus(&sym, |z| z.powf(-0.5), &contour).unwrap();
        let exact = sub.m_weight_field(-1.0, &dual);
        let bf = b.invariant_field().unwrap();
        for ((_, x), (_, y)) in bf.iter().zip(exact.iter()) {
            assert!(linalg::max_abs_diff(x, y) < 1e-6 * linalg::op_norm(y));
        }
        // commutes with a
        let comm = bf.mul(&a).unwrap().sub(&a.mul(bf).unwrap()).unwrap();
        assert!(comm.sup_op_norm() < 1e-10);
    }

    #[test]
    fn contour_through_spectrum_is_rejected() {
        let dual = Dual::new(Group::Torus(1), 2.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 1.0).unwrap());
        let sym = SpatialSymbol::invariant(&grid, MatrixField::scalar_fn(&dual, |xi| re(1.0 + xi.casimir())));
        // circle through the eigenvalue 2 at a node
        let circle = Contour::circle(c(1.0, 0.0), 1.0, 4).unwrap();
        assert!(matches!(contour_calculus(&sym, |z| z, &circle), Err(Error::Contour { .. })));
    }

    #[test]
    fn parameter_ellipticity_scalar_bound() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let dual = Dual::new(Group::Torus(1), 32.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 1.0).unwrap());
        let lambdas: Vec<C64> = [0.0, -0.5, -3.0, -10.0, -100.0].iter().map(|&v| re(v)).collect();
        let ladder = [4.0, 8.0, 16.0, 32.0];
        let pos = SpatialSymbol::invariant(&grid, sub.m_weight_field(1.0, &dual));
        let r = parameter_ellipticity_check(&pos, &sub, 1.0, &lambdas, &ladder).unwrap();
        assert!(r.samples.iter().all(|s| (s.1 - 1.0).abs() < 1e-12));
        assert_eq!(r.verdict, Verdict::Pass);
        let neg = SpatialSymbol::invariant(&grid, sub.m_weight_field(1.0, &dual).scale(re(-1.0)));
        let lambdas: Vec<C64> = (0..20).map(|i| re(-(1.0 + i as f64))).collect();
        let r = parameter_ellipticity_check(&neg, &sub, 1.0, &lambdas, &ladder).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn garding_exact_pair_for_one_plus_laplacian() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let dual = Dual::new(Group::Torus(1), 32.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 1.0).unwrap());
        let a = laplacian_symbol(&dual).add(&MatrixField::identity(&dual)).unwrap();
        let sym = SpatialSymbol::invariant(&grid, a);
        let r = garding_feasibility(&sym, &sub, 2.0, 16.0, 1e3).unwrap();
        let (c1, c2) = r.pair.unwrap();
        assert!((c1 - 1.0).abs() < 1e-9 && c2 == 0.0, "{c1} {c2}");
    }

    #[test]
    fn garding_variable_coefficients() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let good = torus_sym(32.0, |x, k| (2.0 + x.cos()) * (1.0 + k * k));
        let r = garding_feasibility(&good, &sub, 2.0, 16.0, 1e3).unwrap();
        let (c1, _) = r.pair.unwrap();
        assert!(c1 >= 0.5, "{c1}");
        let bad = torus_sym(32.0, |x, k| x.cos() * (1.0 + k * k));
        let r = garding_feasibility(&bad, &sub, 2.0, 16.0, 1e3).unwrap();
        assert!(r.pair.map_or(true, |p| p.0 < 0.1), "{:?}", r.pair);
        assert!(r.ellipticity_constant > 5.0, "{}", r.ellipticity_constant);
    }

    #[test]
    fn garding_unitary_invariance_and_budget_monotone() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let sym = torus_sym(8.0, |x, k| (1.5 + x.sin()) * (1.0 + k * k));
        let r = garding_feasibility(&sym, &sub, 2.0, 4.0, 10.0).unwrap();
        let bigger = garding_feasibility(&sym, &sub, 2.0, 4.0, 1e3).unwrap();
        assert!(bigger.pair.unwrap().0 >= r.pair.unwrap().0 - 1e-12);
    }

    fn random_unitary(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> CMat {
        let h = CMat::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        linalg::unitary_exp(&linalg::hermitian_part(&h))
    }

    #[test]
    fn garding_invariant_under_band_preserving_unitaries() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let sym = torus_sym(8.0, |x, k| (2.0 + x.cos()) * (1.0 + k * k));
        let (a, _) = operator_matrix(&sym, 8.0).unwrap();
        let h = linalg::hermitian_part(&a);
        let w = SpatialSymbol::invariant(&sym.grid, sub.m_weight_field(2.0, &sym.dual));
        let s = operator_matrix(&w, 8.0).unwrap().0;
        let n = h.nrows();
        let ns = 9;
        let base = garding_from_matrices(&h, &s, ns, 1e3).unwrap().0.unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut u = CMat::zeros(n, n);
        u.view_mut((0, 0), (ns, ns)).copy_from(&random_unitary(ns, &mut rng));
        u.view_mut((ns, ns), (n - ns, n - ns)).copy_from(&random_unitary(n - ns, &mut rng));
        let hu = u.adjoint() * &h * &u;
        let su = u.adjoint() * &s * &u;
        let rot = garding_from_matrices(&hu, &su, ns, 1e3).unwrap().0.unwrap();
        assert!((base.0 - rot.0).abs() < 1e-8, "{base:?} {rot:?}");
    }
}
