//! Sub-Laplacians of Hörmander systems, the weight `M̂ = (1 + L̂)^{1/2}`,
//! Weyl counting, class seminorms, Sobolev/Besov norms and kernel profiles.

pub mod algebra;
mod kernel;
mod seminorm;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

pub use kernel::{kernel_profile, kernel_value, kernel_values, KernelProfileConfig};
pub(crate) use seminorm::growth_exponent;
pub use seminorm::{seminorm, SeminormEntry, SeminormReport, SeminormSpec, Side};

use crate::error::{Error, Result};
use crate::field::{MatrixField, SpatialSymbol};
use crate::fit::{fit_loglog, FitReport, Verdict};
use crate::group::{wigner, Dual, Group, GroupPoint, Irrep, Label};
use crate::linalg::{self, re, CMat, C64};
use crate::symbol::algebra_symbol;

use algebra::LieAlgebra;

/// How the eigenvalues of a sub-Laplacian are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumForm {
    /// `|k|²` on the torus, `l(l+1)` on SU(2).
    Laplacian,
    /// `l(l+1) − n²`, diagonal in the standard basis (SU(2) with `{X₁, X₂}`).
    Planar,
    /// `l(l+1) − n²` after a rotation; the eigenbasis is computed numerically.
    RotatedPlanar,
    /// Everything numeric.
    General,
}

/// Eigenvalues `ν²` of `L̂(ξ)` in ascending order with eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub basis: CMat,
}

#[derive(Debug)]
pub struct SubLaplacian {
    pub group: Group,
    pub name: String,
    /// Coordinates of `X_1..X_k` in the standard generator basis.
    pub fields: Vec<Vec<f64>>,
    pub step: usize,
    pub hausdorff_q: usize,
    pub form: SpectrumForm,
    cache: RwLock<HashMap<Label, Arc<Spectrum>>>,
}

impl Clone for SubLaplacian {
    fn clone(&self) -> Self {
        SubLaplacian {
            group: self.group,
            name: self.name.clone(),
            fields: self.fields.clone(),
            step: self.step,
            hausdorff_q: self.hausdorff_q,
            form: self.form,
            cache: RwLock::new(HashMap::new()),
        }
    }
}

fn torus_algebra(n: usize) -> LieAlgebra {
    let basis = (0..n)
        .map(|k| {
            let mut m = CMat::zeros(n, n);
            m[(k, k)] = C64::new(0.0, 1.0);
            m
        })
        .collect();
    LieAlgebra {
        name: format!("t{n}"),
        basis,
    }
}

fn gram(fields: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut g = vec![vec![0.0; n]; n];
    for f in fields {
        for i in 0..n {
            for j in 0..n {
                g[i][j] += f[i] * f[j];
            }
        }
    }
    g
}

fn close(g: &[Vec<f64>], target: &[Vec<f64>]) -> bool {
    g.iter()
        .flatten()
        .zip(target.iter().flatten())
        .all(|(a, b)| (a - b).abs() < 1e-12)
}

fn classify(group: Group, fields: &[Vec<f64>]) -> SpectrumForm {
    let n = group.dimension();
    let g = gram(fields, n);
    let id: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    if close(&g, &id) {
        return SpectrumForm::Laplacian;
    }
    if group != Group::Su2 {
        return SpectrumForm::General;
    }
    let planar = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.0]];
    if close(&g, &planar) {
        return SpectrumForm::Planar;
    }
    // rank-2 orthogonal projector: a rotated copy of the planar system
    let trace: f64 = (0..3).map(|i| g[i][i]).sum();
    let mut sq = vec![vec![0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            sq[i][j] = (0..3).map(|k| g[i][k] * g[k][j]).sum();
        }
    }
    if (trace - 2.0).abs() < 1e-12 && close(&sq, &g) {
        SpectrumForm::RotatedPlanar
    } else {
        SpectrumForm::General
    }
}

impl SubLaplacian {
    /// `L = −(X_1² + ... + X_k²)`; fails unless the fields bracket-generate the algebra.
    pub fn new(group: Group, fields: Vec<Vec<f64>>, name: &str) -> Result<Self> {
        let n = group.dimension();
        if fields.iter().any(|f| f.len() != n) {
            return Err(Error::Invalid(format!("fields must have {n} coordinates")));
        }
        let alg = match group {
            Group::Torus(n) => torus_algebra(n),
            Group::Su2 => algebra::su2(),
        };
        let data = algebra::hormander_data(&alg, &fields)?;
        let form = classify(group, &fields);
        Ok(SubLaplacian {
            group,
            name: name.to_string(),
            fields,
            step: data.step,
            hausdorff_q: data.hausdorff_q,
            form,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// The bi-invariant Laplacian.
    pub fn laplacian(group: Group) -> Self {
        let n = group.dimension();
        let fields = (0..n).map(|i| unit(n, i)).collect();
        Self::new(group, fields, "laplacian").expect("full frame is Hörmander")
    }

    /// SU(2) with the pair `{X_a, X_b}` (1-based indices).
    pub fn su2_pair(a: usize, b: usize) -> Result<Self> {
        if !(1..=3).contains(&a) || !(1..=3).contains(&b) || a == b {
            return Err(Error::Invalid(format!("bad generator pair ({a}, {b})")));
        }
        Self::new(Group::Su2, vec![unit(3, a - 1), unit(3, b - 1)], &format!("L{a}{b}"))
    }

    /// Named systems accepted on the command line: `laplacian`, `L12`, `L23`, `L13`.
    pub fn by_name(group: Group, name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "laplacian" | "lap" => Ok(Self::laplacian(group)),
            "l1" | "l12" if group == Group::Su2 => Self::su2_pair(1, 2),
            "l2" | "l23" if group == Group::Su2 => Self::su2_pair(2, 3),
            "l13" if group == Group::Su2 => Self::su2_pair(1, 3),
            _ => Err(Error::Invalid(format!("unknown sub-Laplacian '{name}' on {group}"))),
        }
    }

    pub fn q(&self) -> f64 {
        self.hausdorff_q as f64
    }

    /// Block `L̂(ξ) = −Σ σ_{X_i}(ξ)²`.
    pub fn symbol_block(&self, xi: &Irrep) -> CMat {
        match &xi.label {
            Label::Torus(k) => {
                let s: f64 = self
                    .fields
                    .iter()
                    .map(|f| {
                        let v: f64 = f.iter().zip(k).map(|(a, &b)| a * b as f64).sum();
                        v * v
                    })
                    .sum();
                CMat::from_element(1, 1, re(s))
            }
            Label::Su2(two_l) => {
                let (jx, jy, jz) = wigner::angular_momentum(*two_l as usize);
                let d = xi.dim();
                let mut out = CMat::zeros(d, d);
                for f in &self.fields {
                    let k = &jx * re(f[0]) + &jy * re(f[1]) + &jz * re(f[2]);
                    out += &k * &k;
                }
                linalg::hermitian_part(&out)
            }
        }
    }

    pub fn symbol(&self, dual: &Arc<Dual>) -> MatrixField {
        let mut f = MatrixField::from_fn(dual, |xi| self.symbol_block(xi));
        f.diagonal = matches!(self.form, SpectrumForm::Laplacian | SpectrumForm::Planar) || dual.group != Group::Su2;
        f
    }

    /// Eigenvalues in the standard basis order when `L̂(ξ)` is diagonal there.
    pub fn standard_diagonal(&self, xi: &Irrep) -> Option<Vec<f64>> {
        match (&xi.label, self.form) {
            (Label::Torus(_), _) => Some(vec![self.symbol_block(xi)[(0, 0)].re]),
            (Label::Su2(_), SpectrumForm::Laplacian) => Some(vec![xi.casimir(); xi.dim()]),
            (Label::Su2(two_l), SpectrumForm::Planar) => Some(planar_values(*two_l)),
            _ => None,
        }
    }

    /// Ascending eigenvalues `ν²`; closed form where available.
    pub fn eigenvalues(&self, xi: &Irrep) -> Vec<f64> {
        let mut v = match (&xi.label, self.form) {
            (Label::Su2(two_l), SpectrumForm::RotatedPlanar) => planar_values(*two_l),
            _ => match self.standard_diagonal(xi) {
                Some(v) => v,
                None => return self.spectrum(xi).values.clone(),
            },
        };
        v.sort_by(f64::total_cmp);
        v
    }

    /// Cached eigendecomposition of `L̂(ξ)`.
    pub fn spectrum(&self, xi: &Irrep) -> Arc<Spectrum> {
        if let Some(s) = self.cache.read().expect("cache lock").get(&xi.label) {
            return s.clone();
        }
        let block = self.symbol_block(xi);
        let (mut values, basis) = linalg::hermitian_eig(&block);
        for v in values.iter_mut() {
            // clean round-off below zero
            if *v < 0.0 && *v > -1e-10 {
                *v = 0.0;
            }
        }
        let s = Arc::new(Spectrum { values, basis });
        self.cache
            .write()
            .expect("cache lock")
            .entry(xi.label.clone())
            .or_insert(s)
            .clone()
    }

    /// `g(L̂(ξ))` for a scalar function of the eigenvalue `ν²`.
    pub fn function_block<F: Fn(f64) -> C64>(&self, xi: &Irrep, g: F) -> CMat {
        if let Some(v) = self.standard_diagonal(xi) {
            let d: Vec<C64> = v.into_iter().map(g).collect();
            return linalg::diag_complex(&d);
        }
        let s = self.spectrum(xi);
        let d: Vec<C64> = s.values.iter().map(|&v| g(v)).collect();
        &s.basis * linalg::diag_complex(&d) * s.basis.adjoint()
    }

    pub fn function_field<F: Fn(f64) -> C64 + Sync>(&self, dual: &Arc<Dual>, g: F) -> MatrixField {
        let blocks = crate::par::map_collect(&dual.irreps, |xi| self.function_block(xi, &g));
        MatrixField {
            dual: dual.clone(),
            blocks,
            diagonal: self.is_diagonal_on(dual.group),
        }
    }

    fn is_diagonal_on(&self, group: Group) -> bool {
        group != Group::Su2 || matches!(self.form, SpectrumForm::Laplacian | SpectrumForm::Planar)
    }

    /// `M̂(ξ)^s = (1 + L̂(ξ))^{s/2}`.
    pub fn m_weight(&self, s: f64, xi: &Irrep) -> CMat {
        self.function_block(xi, |v| re((1.0 + v.max(0.0)).powf(s / 2.0)))
    }

    pub fn m_weight_field(&self, s: f64, dual: &Arc<Dual>) -> MatrixField {
        self.function_field(dual, |v| re((1.0 + v.max(0.0)).powf(s / 2.0)))
    }

    /// Smallest `spin`/`|k|` beyond which every eigenvalue exceeds `bound`,
    /// when that is known in closed form.
    fn closed_cutoff_for(&self, bound: f64) -> Option<f64> {
        match (self.group, self.form) {
            (Group::Torus(_), SpectrumForm::Laplacian) => Some(bound.max(0.0).sqrt()),
            (Group::Su2, SpectrumForm::Laplacian) => Some(((0.25 + bound.max(0.0)).sqrt() - 0.5).max(0.0)),
            // smallest eigenvalue at spin l is l
            (Group::Su2, SpectrumForm::Planar | SpectrumForm::RotatedPlanar) => Some(bound.max(0.0)),
            _ => None,
        }
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// `l(l+1) − n²` for `n = −l..l` in the standard order.
pub fn planar_values(two_l: u32) -> Vec<f64> {
    let l = two_l as f64 / 2.0;
    (0..=two_l).map(|i| l * (l + 1.0) - (i as f64 - l).powi(2)).collect()
}

// ---------------------------------------------------------------------------
// Weyl counting

/// Which eigenvalue count to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeylMode {
    /// Every eigenvalue `(1+ν²)^{1/2} ≤ λ` of `L̂(ξ)` counted `d_ξ` times:
    /// the eigenvalue count of the operator on `L²(G)`.
    Multiplicity,
    /// `d_ξ²` for each `ξ` whose eigenvalues all satisfy the bound.
    FullBlocks,
}

/// `m` with `m ≡ l (mod 1)`, `0 < m ≤ l`, `m² ≥ t`: how many.
fn count_tail_m(two_l: u32, t: f64) -> u64 {
    let l = two_l as f64 / 2.0;
    if t <= 0.0 {
        return 0; // handled by the caller
    }
    let s = t.sqrt();
    if s > l + 1e-12 {
        return 0;
    }
    // candidates m = l - j, j = 0..; need m >= s and m > 0
    let mut j = (l - s).floor().max(0.0) as i64;
    while j >= 0 && (l - j as f64).powi(2) < t {
        j -= 1;
    }
    while (l - (j + 1) as f64) > 0.0 && (l - (j + 1) as f64).powi(2) >= t {
        j += 1;
    }
    if j < 0 {
        0
    } else {
        (j + 1) as u64
    }
}

fn lattice_ball(dim: usize, r2: f64) -> u64 {
    if r2 < 0.0 {
        return 0;
    }
    let r = (r2 + 1e-9).sqrt().floor() as i64;
    if dim == 1 {
        return (2 * r + 1) as u64;
    }
    (-r..=r).map(|k| lattice_ball(dim - 1, r2 - (k * k) as f64)).sum()
}

/// Weyl count `N(λ)`; `cutoff` bounds the irreps considered and must reach
/// every irrep carrying a counted eigenvalue.
pub fn weyl_count(sub: &SubLaplacian, lambda: f64, cutoff: f64, mode: WeylMode) -> Result<u64> {
    if !(lambda >= 1.0) {
        return Err(Error::Invalid(format!("λ must be >= 1, got {lambda}")));
    }
    let bound = lambda * lambda - 1.0;
    if let Some(required) = sub.closed_cutoff_for(bound) {
        if cutoff + 1e-9 < required {
            return Err(Error::CutoffTooSmall {
                detail: format!("Weyl count at λ={lambda} reaches index {required:.1}"),
                required,
            });
        }
        return Ok(closed_weyl(sub, bound, required, mode));
    }
    let dual = Dual::new(sub.group, cutoff)?;
    let top = dual.irreps.iter().map(|x| x.index()).fold(0.0, f64::max);
    let mut total = 0u64;
    for xi in &dual.irreps {
        let ev = sub.eigenvalues(xi);
        let inside = ev.iter().filter(|&&v| v <= bound + 1e-9).count() as u64;
        if (xi.index() - top).abs() < 1e-9 && inside > 0 {
            return Err(Error::CutoffTooSmall {
                detail: format!("boundary irrep {xi} has eigenvalues below λ²−1 = {bound}"),
                required: 2.0 * cutoff.max(1.0),
            });
        }
        let d = xi.dim() as u64;
        total += match mode {
            WeylMode::Multiplicity => d * inside,
            WeylMode::FullBlocks => {
                if inside == d {
                    d * d
                } else {
                    0
                }
            }
        };
    }
    Ok(total)
}

fn closed_weyl(sub: &SubLaplacian, bound: f64, reach: f64, mode: WeylMode) -> u64 {
    match (sub.group, sub.form) {
        (Group::Torus(n), _) => lattice_ball(n, bound),
        (Group::Su2, SpectrumForm::Laplacian) => {
            let top = (2.0 * reach + 1e-9).floor() as u32;
            (0..=top)
                .filter(|&t| {
                    let l = t as f64 / 2.0;
                    l * (l + 1.0) <= bound + 1e-9
                })
                .map(|t| {
                    let d = (t + 1) as u64;
                    d * d
                })
                .sum()
        }
        _ => {
            let top = (2.0 * reach + 1e-9).floor() as u32;
            let mut total = 0u64;
            for two_l in 0..=top {
                let l = two_l as f64 / 2.0;
                let d = (two_l + 1) as u64;
                let t = l * (l + 1.0) - bound;
                match mode {
                    WeylMode::Multiplicity => {
                        let inside = if t <= 1e-9 { d } else { 2 * count_tail_m(two_l, t - 1e-9) };
                        total += d * inside;
                    }
                    WeylMode::FullBlocks => {
                        // largest eigenvalue sits at the smallest |n|
                        let nmin = if two_l % 2 == 0 { 0.0 } else { 0.25 };
                        if l * (l + 1.0) - nmin <= bound + 1e-9 {
                            total += d * d;
                        }
                    }
                }
            }
            total
        }
    }
}

/// Log–log fit of `N(λ)` over `lambdas`; the expected slope is `Q`.
pub fn weyl_slope(sub: &SubLaplacian, lambdas: &[f64], mode: WeylMode) -> Result<FitReport> {
    let lmax = lambdas.iter().cloned().fold(1.0, f64::max);
    let reach = sub.closed_cutoff_for(lmax * lmax).unwrap_or(lmax * lmax);
    let mut samples = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        samples.push((l, weyl_count(sub, l, reach, mode)? as f64));
    }
    let q = sub.q();
    let report = FitReport::loglog(&format!("weyl-{}", sub.name), samples).labels("lambda", "count");
    let ok = (report.exponent - q).abs() <= 0.1 * q;
    Ok(report.extra("Q", q).with_verdict(Verdict::from_bool(ok)))
}

/// `N(λ) ≈ C λ^Q`: the constant `C` fitted over the upper half of `lambdas`
/// with the exponent pinned to `Q`.
pub fn weyl_constant(sub: &SubLaplacian, lambdas: &[f64]) -> Result<f64> {
    let lmax = lambdas.iter().cloned().fold(1.0, f64::max);
    let reach = sub.closed_cutoff_for(lmax * lmax).unwrap_or(lmax * lmax);
    let q = sub.q();
    let half = lambdas.len() / 2;
    let mut acc = 0.0;
    for &l in &lambdas[half..] {
        acc += (weyl_count(sub, l, reach, WeylMode::Multiplicity)? as f64 / l.powf(q)).ln();
    }
    Ok((acc / (lambdas.len() - half) as f64).exp())
}

// ---------------------------------------------------------------------------
// Weight equivalence, norms, compactness

/// Dyadic ladder `1, 2, 4, ...` up to `cutoff` (inclusive of `cutoff`).
pub fn dyadic_ladder(cutoff: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut c = 1.0;
    while c < cutoff {
        out.push(c);
        c *= 2.0;
    }
    out.push(cutoff);
    out
}

/// Checks `⟨ξ⟩^{1/κ} ≤ C (1+ν²)^{1/2} ≤ C' ⟨ξ⟩` on the dual truncated at `cutoff`.
///
/// The running maxima of both ratios are fitted against `⟨ξ⟩` along a dyadic
/// ladder; bounded ratios give exponents near zero.
pub fn equiv_weight_check(sub: &SubLaplacian, kappa: usize, cutoff: f64) -> Result<FitReport> {
    let dual = Dual::new(sub.group, cutoff)?;
    let ladder = dyadic_ladder(cutoff);
    let mut lower_max = 0.0f64;
    let mut upper_max = 0.0f64;
    let mut samples = Vec::new();
    let mut upper_samples = Vec::new();
    let mut rung = 0;
    for xi in &dual.irreps {
        while rung < ladder.len() && xi.index() > ladder[rung] + 1e-9 {
            let b = (1.0 + sub.group.casimir_of_index(ladder[rung])).sqrt();
            samples.push((b, lower_max));
            upper_samples.push((b, upper_max));
            rung += 1;
        }
        let ev = sub.eigenvalues(xi);
        let bracket = xi.bracket();
        let lo = (1.0 + ev[0]).sqrt();
        let hi = (1.0 + ev[ev.len() - 1]).sqrt();
        lower_max = lower_max.max(bracket.powf(1.0 / kappa as f64) / lo);
        upper_max = upper_max.max(hi / bracket);
    }
    while rung < ladder.len() {
        let b = (1.0 + sub.group.casimir_of_index(ladder[rung])).sqrt();
        samples.push((b, lower_max));
        upper_samples.push((b, upper_max));
        rung += 1;
    }
    let xs: Vec<f64> = upper_samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = upper_samples.iter().map(|s| s.1).collect();
    let upper_fit = fit_loglog(&xs, &ys);
    let report = FitReport::loglog(&format!("weight-equivalence-{}-kappa{kappa}", sub.name), samples)
        .labels("bracket", "lower-ratio");
    let exponent = report.exponent.max(upper_fit.slope);
    let ok = exponent <= 0.05 && lower_max.is_finite() && upper_max.is_finite();
    Ok(report
        .extra("c_lower", lower_max)
        .extra("c_upper", upper_max)
        .extra("upper_exponent", upper_fit.slope)
        .with_verdict(Verdict::from_bool(ok)))
}

/// `‖M̂^s f̂‖` in the Plancherel norm.
pub fn sobolev_norm(f: &MatrixField, s: f64, sub: &SubLaplacian) -> Result<f64> {
    let w = sub.m_weight_field(s, &f.dual);
    Ok(w.mul(f)?.plancherel_norm())
}

fn smooth_step_part(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth bump: 1 on `[0, 1]`, 0 on `[2, ∞)`.
pub fn dyadic_base(lambda: f64) -> f64 {
    if lambda <= 1.0 {
        return 1.0;
    }
    if lambda >= 2.0 {
        return 0.0;
    }
    let a = smooth_step_part(2.0 - lambda);
    let b = smooth_step_part(lambda - 1.0);
    a / (a + b)
}

/// `ψ_0 = dyadic_base`, `ψ_ℓ(λ) = ψ_0(2^{−ℓ}λ) − ψ_0(2^{1−ℓ}λ)`.
pub fn dyadic_piece(level: usize, lambda: f64) -> f64 {
    if level == 0 {
        return dyadic_base(lambda);
    }
    let s = 0.5f64.powi(level as i32);
    dyadic_base(s * lambda) - dyadic_base(2.0 * s * lambda)
}

/// `(Σ_ℓ 2^{ℓqs} ‖ψ_ℓ(M̂) f‖₂^q)^{1/q}`.
pub fn besov_norm(f: &MatrixField, s: f64, q: f64, sub: &SubLaplacian) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Invalid(format!("Besov exponent q must be >= 1, got {q}")));
    }
    let top = f
        .dual
        .irreps
        .iter()
        .map(|xi| sub.eigenvalues(xi).last().copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    let wmax = (1.0 + top).sqrt();
    let levels = (wmax.log2().ceil().max(0.0) as usize) + 2;
    let mut acc = 0.0;
    for level in 0..=levels {
        let piece = sub.function_field(&f.dual, |v| re(dyadic_piece(level, (1.0 + v.max(0.0)).sqrt())));
        let norm = piece.mul(f)?.plancherel_norm();
        acc += (2f64.powf(level as f64 * s) * norm).powf(q);
    }
    Ok(acc.powf(1.0 / q))
}

/// Tail supremum of `sup_x ‖σ(x,ξ)‖_op` over irreps with index in the outer
/// half of the dual: an upper proxy for the essential-norm defect.
pub fn compactness_defect(sym: &SpatialSymbol) -> f64 {
    let cut = sym.dual.cutoff;
    let nodes = if sym.is_invariant() { 1 } else { sym.grid.len() };
    let mut sup = 0.0f64;
    for n in 0..nodes {
        for (xi, b) in sym.at(n).iter() {
            if xi.index() >= 0.5 * cut - 1e-9 {
                sup = sup.max(linalg::op_norm(b));
            }
        }
    }
    sup
}

/// `ρ(x) = (dim G − Tr Ad(x))^{1/2}`.
pub fn rho_distance(group: Group, x: &GroupPoint) -> f64 {
    match group {
        Group::Torus(_) => 0.0,
        Group::Su2 => {
            let u = group.log(x);
            let angle = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            // Ad(x) is a rotation by `angle`: trace 1 + 2 cos(angle)
            (2.0 - 2.0 * angle.cos()).max(0.0).sqrt()
        }
    }
}

/// `l ↦ ‖(1 + σ_{L₁}(l))⁻¹ σ_{X₃}(l)²‖_op` on SU(2).
pub fn dependence_profile(two_ls: &[u32]) -> Result<Vec<(f64, f64)>> {
    let sub = SubLaplacian::su2_pair(1, 2)?;
    let top = two_ls.iter().copied().max().unwrap_or(0);
    let dual = Dual::new(Group::Su2, top as f64 / 2.0)?;
    let x3 = algebra_symbol(&dual, &[re(0.0), re(0.0), re(1.0)]);
    let mut out = Vec::new();
    for &t in two_ls {
        let xi = Irrep::su2(t);
        let k = dual.position(&xi.label).expect("inside dual");
        let s = &x3.blocks[k];
        let inv = sub.function_block(&xi, |v| re(1.0 / (1.0 + v)));
        out.push((t as f64 / 2.0, linalg::op_norm(&(inv * s * s))));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    #[test]
    fn planar_spectrum_matches_numeric() {
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        assert_eq!(sub.form, SpectrumForm::Planar);
        assert_eq!((sub.step, sub.hausdorff_q), (2, 4));
        for two_l in 0..9 {
            let xi = Irrep::su2(two_l);
            let block = sub.symbol_block(&xi);
            assert!(linalg::is_diagonal(&block, 1e-12));
            let (num, _) = linalg::hermitian_eig(&block);
            let closed = sub.eigenvalues(&xi);
            for (a, b) in num.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        assert_eq!(planar_values(0), vec![0.0]);
    }

    #[test]
    fn rotated_pair_same_spectrum_other_basis() {
        let l2 = SubLaplacian::su2_pair(2, 3).unwrap();
        assert_eq!(l2.form, SpectrumForm::RotatedPlanar);
        let xi = Irrep::su2(4);
        assert!(!linalg::is_diagonal(&l2.symbol_block(&xi), 1e-9));
        let numeric = l2.spectrum(&xi).values.clone();
        for (a, b) in numeric.iter().zip(l2.eigenvalues(&xi)) {
            assert!((a - b).abs() < 1e-8);
        }
        // the weight reproduces 1 + L̂ at s = 2
        let w = l2.m_weight(2.0, &xi);
        let direct = l2.symbol_block(&xi) + linalg::identity(xi.dim());
        assert!(max_abs_diff(&w, &direct) < 1e-9);
    }

    #[test]
    fn m_weight_examples() {
        let l1 = SubLaplacian::su2_pair(1, 2).unwrap();
        let w = l1.m_weight(2.0, &Irrep::su2(2));
        let diag: Vec<f64> = (0..3).map(|i| w[(i, i)].re).collect();
        assert_eq!(diag, vec![2.0, 3.0, 2.0]);
        let lap = SubLaplacian::laplacian(Group::Su2);
        let w = lap.m_weight(2.0, &Irrep::su2(3));
        assert!((w[(1, 1)].re - (1.0 + 3.75)).abs() < 1e-12);
        assert!(max_abs_diff(&l1.m_weight(0.0, &Irrep::su2(5)), &linalg::identity(6)) < 1e-15);
    }

    #[test]
    fn weyl_counts() {
        let l1 = SubLaplacian::su2_pair(1, 2).unwrap();
        assert_eq!(weyl_count(&l1, 1.0, 10.0, WeylMode::Multiplicity).unwrap(), 1);
        let t1 = SubLaplacian::laplacian(Group::Torus(1));
        let n = weyl_count(&t1, 100.0, 200.0, WeylMode::Multiplicity).unwrap();
        assert!((n as f64 / 200.0 - 1.0).abs() < 0.02);
        assert!(matches!(
            weyl_count(&l1, 10.0, 5.0, WeylMode::Multiplicity),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn closed_weyl_matches_scan() {
        let l1 = SubLaplacian::su2_pair(1, 2).unwrap();
        let l2 = SubLaplacian::su2_pair(2, 3).unwrap();
        for &lambda in &[1.5, 3.0, 4.2, 7.0] {
            let bound: f64 = lambda * lambda - 1.0;
            let dual = Dual::new(Group::Su2, bound + 1.0).unwrap();
            let mut mult = 0u64;
            let mut blocks = 0u64;
            for xi in &dual.irreps {
                let (ev, _) = linalg::hermitian_eig(&l2.symbol_block(xi));
                let inside = ev.iter().filter(|&&v| v <= bound + 1e-9).count() as u64;
                let d = xi.dim() as u64;
                mult += d * inside;
                if inside == d {
                    blocks += d * d;
                }
            }
            assert_eq!(weyl_count(&l1, lambda, bound + 1.0, WeylMode::Multiplicity).unwrap(), mult);
            assert_eq!(weyl_count(&l1, lambda, bound + 1.0, WeylMode::FullBlocks).unwrap(), blocks);
        }
    }

    #[test]
    fn equivalence_of_weights() {
        let lap = SubLaplacian::laplacian(Group::Su2);
        let r = equiv_weight_check(&lap, 1, 32.0).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.get_extra("c_lower").unwrap() - 1.0).abs() < 1e-12);
        assert!((r.get_extra("c_upper").unwrap() - 1.0).abs() < 1e-12);
        let l1 = SubLaplacian::su2_pair(1, 2).unwrap();
        assert_eq!(equiv_weight_check(&l1, 2, 32.0).unwrap().verdict, Verdict::Pass);
        assert_eq!(equiv_weight_check(&l1, 1, 32.0).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn dyadic_partition_of_unity() {
        for i in 0..2000 {
            let lambda = 1.0 + i as f64 * 0.37;
            let s: f64 = (0..20).map(|l| dyadic_piece(l, lambda)).sum();
            assert!((s - 1.0).abs() < 1e-12, "λ={lambda}: {s}");
        }
    }

    #[test]
    fn sobolev_and_besov() {
        let lap = SubLaplacian::laplacian(Group::Torus(1));
        let dual = Dual::new(Group::Torus(1), 40.0).unwrap();
        let f = MatrixField::scalar_fn(&dual, |xi| re(1.0 / (1.0 + xi.casimir())));
        assert!((sobolev_norm(&f, 0.0, &lap).unwrap() - f.plancherel_norm()).abs() < 1e-14);
        // single frequency near the centre of the third dyadic block
        let single = MatrixField::scalar_fn(&dual, |xi| re(if xi.torus_k().unwrap()[0] == 8 { 1.0 } else { 0.0 }));
        let b = besov_norm(&single, 1.5, 2.0, &lap).unwrap();
        let w = (1.0f64 + 64.0).sqrt();
        assert!(dyadic_piece(3, w) > 0.99);
        let expected = 2f64.powf(3.0 * 1.5) * single.plancherel_norm();
        assert!((b / expected - 1.0).abs() < 0.02, "{b} vs {expected}");
    }

    #[test]
    fn compactness_defects() {
        let grid = Arc::new(crate::group::haar_grid(Group::Torus(1), 4.0).unwrap());
        let lap = SubLaplacian::laplacian(Group::Torus(1));
        let mut prev = f64::INFINITY;
        for &cut in &[8.0, 16.0, 32.0] {
            let dual = Dual::new(Group::Torus(1), cut).unwrap();
            let sym = SpatialSymbol::invariant(&grid, lap.m_weight_field(-1.0, &dual));
            let d = compactness_defect(&sym);
            assert!(d < prev);
            prev = d;
        }
        let dual = Dual::new(Group::Torus(1), 8.0).unwrap();
        let id = SpatialSymbol::invariant(&grid, MatrixField::identity(&dual));
        assert!((compactness_defect(&id) - 1.0).abs() < 1e-15);
        let c = SpatialSymbol::from_fn(&grid, &dual, |x, xi| {
            let t = x.coords()[0];
            linalg::identity(xi.dim()) * re(1.0 + t.cos())
        });
        assert!((compactness_defect(&c) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dependence_grows_linearly() {
        let ls: Vec<u32> = (10..=60).step_by(5).map(|l| 2 * l).collect();
        let prof = dependence_profile(&ls).unwrap();
        for &(l, v) in &prof {
            assert!((v - l * l / (l + 1.0)).abs() < 1e-9 * v);
        }
    }

    #[test]
    fn rho_vanishes_at_identity() {
        assert_eq!(rho_distance(Group::Su2, &Group::Su2.identity()), 0.0);
        let x = Group::Su2.exp(&[0.3, 0.0, 0.0]);
        assert!((rho_distance(Group::Su2, &x) - (2.0 - 2.0 * 0.3f64.cos()).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn torus_fields_must_span() {
        let r = SubLaplacian::new(Group::Torus(2), vec![vec![1.0, 0.0]], "x");
        assert!(matches!(r, Err(Error::NotHormander(_))));
    }
}
