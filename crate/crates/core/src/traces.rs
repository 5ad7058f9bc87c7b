//! Heat, regularized and ψ-traces, Dixmier extrapolation and Schatten probes
//! for spectral multipliers of a sub-Laplacian.
//!
//! Sums run over the eigenvalues `w = (1+ν²)^{1/2}` of `M̂`, each counted
//! `d_ξ` times (the eigenvalue multiplicity on `L²(G)`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::fit::{fit_line, fit_loglog, FitReport, Verdict};
use crate::group::{enumerate_dual, Group};
use crate::linalg;
use crate::subelliptic::{weyl_count, SpectrumForm, SubLaplacian, WeylMode};

/// Largest number of `(irrep, eigenvalue)` pairs a single sum may visit.
const MAX_TERMS: f64 = 5e8;

/// Eigenvalue source with a Weyl-law tail model `N(λ) ≈ C λ^Q`.
#[derive(Debug)]
pub struct SpectrumLadder<'a> {
    pub sub: &'a SubLaplacian,
    /// Mean of `N(λ)/λ^Q` over the upper calibration points.
    pub weyl_c: f64,
    /// Upper envelope used for tail bounds.
    pub weyl_upper: f64,
}

/// A truncated spectral sum with its tail bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub value: f64,
    pub tail: f64,
    /// Largest `w` included.
    pub reach: f64,
}

impl<'a> SpectrumLadder<'a> {
    pub fn new(sub: &'a SubLaplacian) -> Result<Self> {
        let lambdas: &[f64] = match sub.form {
            SpectrumForm::General => &[2.0, 3.0, 4.0, 6.0, 8.0],
            _ => &[4.0, 8.0, 16.0, 32.0, 64.0],
        };
        let q = sub.q();
        let reach = lambdas[lambdas.len() - 1].powi(2);
        let mut ratios = Vec::new();
        for &l in lambdas {
            ratios.push(weyl_count(sub, l, reach, WeylMode::Multiplicity)? as f64 / l.powf(q));
        }
        let half = ratios.len() / 2;
        let weyl_c = (ratios[half..].iter().map(|r| r.ln()).sum::<f64>() / (ratios.len() - half) as f64).exp();
        let weyl_upper = 1.5 * ratios.iter().cloned().fold(0.0, f64::max);
        Ok(SpectrumLadder {
            sub,
            weyl_c,
            weyl_upper,
        })
    }

    pub fn q(&self) -> f64 {
        self.sub.q()
    }

    /// Visits every eigenvalue `w ≤ wmax` as `(multiplicity, w)`, in a fixed order.
    pub fn for_each_below<F: FnMut(f64, f64)>(&self, wmax: f64, mut visit: F) -> Result<()> {
        let bound = wmax * wmax - 1.0;
        if bound < 0.0 {
            return Ok(());
        }
        let sub = self.sub;
        match (sub.group, sub.form) {
            (Group::Su2, SpectrumForm::Laplacian) => {
                let mut two_l = 0u64;
                loop {
                    let l = two_l as f64 / 2.0;
                    let nu2 = l * (l + 1.0);
                    if nu2 > bound {
                        break;
                    }
                    let d = (two_l + 1) as f64;
                    visit(d * d, (1.0 + nu2).sqrt());
                    two_l += 1;
                }
            }
            (Group::Su2, SpectrumForm::Planar | SpectrumForm::RotatedPlanar) => {
                let top = (2.0 * bound + 1e-9).floor() as u64;
                if top as f64 * (bound.sqrt() + 1.0) > MAX_TERMS {
                    return Err(Error::Resource(format!("spectral sum up to w={wmax} is too large")));
                }
                for two_l in 0..=top {
                    let l = two_l as f64 / 2.0;
                    let d = (two_l + 1) as f64;
                    let cas = l * (l + 1.0);
                    let t = cas - bound;
                    if t <= 0.0 {
                        for i in 0..=two_l {
                            let m = i as f64 - l;
                            visit(d, (1.0 + cas - m * m).sqrt());
                        }
                    } else {
                        // only |n| close to l: n² ≥ l(l+1) − bound
                        let mut m = l;
                        while m > 0.0 && m * m >= t - 1e-9 {
                            let w = (1.0 + cas - m * m).sqrt();
                            visit(d, w);
                            visit(d, w);
                            m -= 1.0;
                        }
                    }
                }
            }
            (Group::Torus(n), _) => {
                let gmin = torus_min_eig(sub, n);
                let reach = (bound / gmin).sqrt();
                if (2.0 * reach + 1.0).powi(n as i32) > MAX_TERMS {
                    return Err(Error::Resource(format!("lattice sum up to w={wmax} is too large")));
                }
                for xi in enumerate_dual(sub.group, reach)? {
                    let nu2 = sub.symbol_block(&xi)[(0, 0)].re;
                    if nu2 <= bound + 1e-9 {
                        visit(1.0, (1.0 + nu2).sqrt());
                    }
                }
            }
            (Group::Su2, SpectrumForm::General) => {
                let reach = bound.max(1.0);
                if reach > 256.0 {
                    return Err(Error::Resource(format!(
                        "numeric spectrum up to spin {reach} is too large"
                    )));
                }
                for xi in enumerate_dual(Group::Su2, reach)? {
                    let d = xi.dim() as f64;
                    for v in sub.eigenvalues(&xi) {
                        if v <= bound + 1e-9 {
                            visit(d, (1.0 + v).sqrt());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `Σ_{w ≤ wmax} mult · f(w)`.
    pub fn sum_below<F: Fn(f64) -> f64>(&self, wmax: f64, f: F) -> Result<f64> {
        let mut acc = 0.0;
        self.for_each_below(wmax, |mult, w| acc += mult * f(w))?;
        Ok(acc)
    }

    /// Visits each irrep up to `index` as `(index, d_ξ, eigenvalues w)`.
    pub fn for_each_irrep<F: FnMut(f64, f64, &[f64])>(&self, index: f64, mut visit: F) -> Result<()> {
        let sub = self.sub;
        match (sub.group, sub.form) {
            (Group::Su2, SpectrumForm::Laplacian | SpectrumForm::Planar | SpectrumForm::RotatedPlanar) => {
                let top = (2.0 * index + 1e-9).floor() as u64;
                if (top as f64).powi(2) > MAX_TERMS {
                    return Err(Error::Resource(format!("irrep sweep to {index} is too large")));
                }
                let mut ws = Vec::new();
                for two_l in 0..=top {
                    let l = two_l as f64 / 2.0;
                    let cas = l * (l + 1.0);
                    ws.clear();
                    for i in 0..=two_l {
                        let m = i as f64 - l;
                        let nu2 = if sub.form == SpectrumForm::Laplacian { cas } else { cas - m * m };
                        ws.push((1.0 + nu2).sqrt());
                    }
                    visit(l, (two_l + 1) as f64, &ws);
                }
            }
            _ => {
                for xi in enumerate_dual(sub.group, index)? {
                    let ws: Vec<f64> = sub.eigenvalues(&xi).iter().map(|v| (1.0 + v.max(0.0)).sqrt()).collect();
                    visit(xi.index(), xi.dim() as f64, &ws);
                }
            }
        }
        Ok(())
    }

    /// `∫_W^∞ f dN` with `N(λ) = C λ^Q`: `C (W^Q f(W) + Q ∫_W^∞ λ^{Q−1} f)`,
    /// dropping the boundary term when only the integral is wanted.
    fn weyl_integral<F: Fn(f64) -> f64>(&self, c: f64, w: f64, f: &F, with_boundary: bool) -> f64 {
        let q = self.q();
        let integral = log_integral(|lam| lam.powf(q) * f(lam), w);
        let boundary = if with_boundary { w.powf(q) * f(w) } else { 0.0 };
        c * (boundary + q * integral)
    }

    /// Upper bound on `Σ_{w > W} mult · f(w)` for decreasing `f ≥ 0`.
    pub fn tail_bound<F: Fn(f64) -> f64>(&self, w: f64, f: F) -> f64 {
        self.weyl_integral(self.weyl_upper, w, &f, true)
    }

    /// Weyl-law estimate of `Σ_{w > W} mult · f(w)`.
    pub fn tail_estimate<F: Fn(f64) -> f64>(&self, w: f64, f: F) -> f64 {
        self.weyl_integral(self.weyl_c, w, &f, false)
    }

    /// Smallest `w` carried by an irrep with index above `cutoff`.
    fn first_excluded_w(&self, cutoff: f64) -> f64 {
        let sub = self.sub;
        match (sub.group, sub.form) {
            (Group::Su2, SpectrumForm::Laplacian) => {
                let l = (2.0 * cutoff + 1e-9).floor() / 2.0 + 0.5;
                (1.0 + l * (l + 1.0)).sqrt()
            }
            (Group::Su2, _) => {
                let l = (2.0 * cutoff + 1e-9).floor() / 2.0 + 0.5;
                (1.0 + l).sqrt()
            }
            (Group::Torus(n), _) => {
                let gmin = torus_min_eig(sub, n);
                (1.0 + gmin * cutoff * cutoff).sqrt()
            }
        }
    }

    /// Irrep index needed to include every eigenvalue `w ≤ wmax`.
    fn index_for(&self, wmax: f64) -> f64 {
        let bound = wmax * wmax - 1.0;
        match (self.sub.group, self.sub.form) {
            (Group::Su2, SpectrumForm::Laplacian) => ((0.25 + bound).sqrt() - 0.5).max(0.0),
            (Group::Su2, _) => bound.max(0.0),
            (Group::Torus(n), _) => (bound / torus_min_eig(self.sub, n)).sqrt(),
        }
    }
}

fn torus_min_eig(sub: &SubLaplacian, n: usize) -> f64 {
    let mut g = nalgebra::DMatrix::<f64>::zeros(n, n);
    for f in &sub.fields {
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] += f[i] * f[j];
            }
        }
    }
    g.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300)
}

/// `∫_W^∞ g(λ) dλ/λ`, adaptive Simpson panels in `log λ` until `g` has decayed.
fn log_integral<G: Fn(f64) -> f64>(g: G, w: f64) -> f64 {
    let f = |u: f64| g(u.exp());
    let simpson = |a: f64, fa: f64, b: f64, fb: f64| {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    };
    let mut u = w.ln();
    let mut fu = f(u);
    let mut h = 0.01;
    let mut acc: f64 = 0.0;
    let mut peak = fu.abs();
    let u0 = u;
    let mut rate_prev = f64::NAN;
    for _ in 0..200_000 {
        let fb = f(u + h);
        let (whole, fm) = simpson(u, fu, u + h, fb);
        let (left, _) = simpson(u, fu, u + 0.5 * h, fm);
        let (right, _) = simpson(u + 0.5 * h, fm, u + h, fb);
        let err = (left + right - whole).abs();
        if err > 1e-10 * (acc.abs() + (left + right).abs()) && h > 1e-6 {
            h *= 0.5;
            continue;
        }
        acc += left + right;
        // decay rate of g in log λ; a settled rate closes the tail exactly
        let rate = (fu.abs().ln() - fb.abs().ln()) / h;
        u += h;
        fu = fb;
        peak = peak.max(fb.abs());
        if fb.abs() <= 1e-18 * peak {
            return acc;
        }
        if u - u0 > 20.0 && rate > 0.0 && ((rate - rate_prev) / rate).abs() < 1e-6 {
            return acc + fb / rate;
        }
        if u - u0 > 100.0 && !(rate > 1e-12) {
            return f64::INFINITY;
        }
        rate_prev = rate;
        if err < 1e-13 * acc.abs() {
            h = (h * 2.0).min(8.0);
        }
    }
    f64::INFINITY
}

// ---------------------------------------------------------------------------
// Heat traces

/// `Tr e^{−tL} = Σ mult · e^{−tν²}`.
///
/// Without `cutoff` the reach grows until the tail bound is below `1e-10`;
/// with an irrep cutoff the tail must stay below `1e-8` of the partial sum.
pub fn heat_trace(ladder: &SpectrumLadder, t: f64, cutoff: Option<f64>) -> Result<TraceValue> {
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("t must be > 0, got {t}")));
    }
    let f = move |w: f64| (-t * (w * w - 1.0)).exp();
    let auto = auto_reach(ladder, t, &f)?;
    match cutoff {
        None => {
            let value = ladder.sum_below(auto, f)?;
            Ok(TraceValue {
                value,
                tail: ladder.tail_bound(auto, f),
                reach: auto,
            })
        }
        Some(c) => {
            let mut value = 0.0;
            ladder.for_each_irrep(c, |_, d, ws| {
                value += d * ws.iter().map(|&w| f(w)).sum::<f64>();
            })?;
            let w_ex = ladder.first_excluded_w(c);
            let tail = ladder.tail_bound(w_ex, f);
            if tail > 1e-8 * value {
                return Err(Error::CutoffTooSmall {
                    detail: format!("heat trace at t={t}: tail bound {tail:.3e} vs partial sum {value:.3e}"),
                    required: ladder.index_for(auto).ceil(),
                });
            }
            Ok(TraceValue {
                value,
                tail,
                reach: w_ex,
            })
        }
    }
}

fn auto_reach<F: Fn(f64) -> f64>(ladder: &SpectrumLadder, t: f64, f: &F) -> Result<f64> {
    let mut w = (1.0 + 30.0 / t).sqrt().max(4.0);
    for _ in 0..200 {
        if ladder.tail_bound(w, f) < 1e-10 {
            return Ok(w);
        }
        w *= 1.1;
    }
    Err(Error::Resource(format!("no finite reach found for t={t}")))
}

/// Log–log fit of the heat trace over `ts`; the expected exponent is `−Q/2`.
pub fn heat_slope(ladder: &SpectrumLadder, ts: &[f64]) -> Result<FitReport> {
    let mut samples = Vec::with_capacity(ts.len());
    let mut worst_tail = 0.0f64;
    for &t in ts {
        let v = heat_trace(ladder, t, None)?;
        worst_tail = worst_tail.max(v.tail / v.value);
        samples.push((t, v.value));
    }
    let expected = -ladder.q() / 2.0;
    let report = FitReport::loglog(&format!("heat-{}", ladder.sub.name), samples).labels("t", "trace");
    let ok = (report.exponent - expected).abs() <= 0.1 * expected.abs();
    Ok(report
        .extra("expected_exponent", expected)
        .extra("max_relative_tail", worst_tail)
        .with_verdict(Verdict::from_bool(ok)))
}

// ---------------------------------------------------------------------------
// Regularized and ψ-traces

/// `Σ mult · a(w) e^{−t w^q}` for a spectral multiplier `a` of `M̂`.
pub fn regularized_trace<A: Fn(f64) -> f64>(ladder: &SpectrumLadder, a: A, q: f64, t: f64) -> Result<TraceValue> {
    if !(t > 0.0) || !(q > 0.0) {
        return Err(Error::Invalid(format!("need t > 0 and q > 0, got t={t}, q={q}")));
    }
    let f = |w: f64| a(w) * (-t * w.powf(q)).exp();
    let mut w = (1.0 + (30.0 / t).powf(1.0 / q)).max(4.0);
    let mut tail = ladder.tail_bound(w, f);
    let mut guard = 0;
    while tail > 1e-10 * ladder.sum_below(w.min(4.0), &f)?.max(1e-300) {
        w *= 1.2;
        tail = ladder.tail_bound(w, f);
        guard += 1;
        if guard > 200 {
            return Err(Error::CutoffTooSmall {
                detail: format!("regularized trace tail does not decay at t={t}"),
                required: f64::INFINITY,
            });
        }
    }
    Ok(TraceValue {
        value: ladder.sum_below(w, f)?,
        tail,
        reach: w,
    })
}

/// Grid average of `Σ d_ξ Tr[σ_A(x,ξ) e^{−t M̂(ξ)^q}]` over a finite dual.
pub fn regularized_trace_symbol(sym: &crate::field::SpatialSymbol, sub: &SubLaplacian, q: f64, t: f64) -> Result<f64> {
    let damp = sub.function_field(&sym.dual, |v| linalg::re((-t * (1.0 + v.max(0.0)).powf(q / 2.0)).exp()));
    let nodes = if sym.is_invariant() { 1 } else { sym.grid.len() };
    let mut acc = 0.0;
    for n in 0..nodes {
        let weight = if sym.is_invariant() { 1.0 } else { sym.grid.weights[n] };
        let prod = sym.at(n).mul(&damp)?;
        let tr: f64 = prod.iter().map(|(xi, b)| xi.dim() as f64 * b.trace().re).sum();
        acc += weight * tr;
    }
    Ok(acc)
}

/// Fit of `t ↦ Tr(A e^{−tM̂^q})` for `a(w) = w^m`.
///
/// Both a power law and a logarithm are fitted; the model with the smaller
/// relative residual is reported. At `m = −Q` the log slope is divided by
/// `Q C` (the fitted Weyl constant), giving `−1/q` in the limit.
pub fn regularized_trace_fit(ladder: &SpectrumLadder, m: f64, q: f64, ts: &[f64]) -> Result<FitReport> {
    let mut samples = Vec::with_capacity(ts.len());
    for &t in ts {
        let v = regularized_trace(ladder, |w| w.powf(m), q, t)?;
        samples.push((t, v.value));
    }
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let power = fit_loglog(ts, &ys);
    let lin = fit_line(&xs, &ys);
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let log_residual = lin.residual / mean.abs().max(1e-300);
    let qq = ladder.q();
    let c_q = qq * ladder.weyl_c;
    let (model, mut report) = if log_residual < power.residual {
        let mut r = FitReport::from_line("regularized-trace", samples, lin, "log");
        r.exponent = lin.slope / c_q;
        ("log", r)
    } else {
        ("power", FitReport::from_line("regularized-trace", samples, power, "power"))
    };
    report = report
        .labels("t", "trace")
        .extra("m", m)
        .extra("q", q)
        .extra("log_residual", log_residual)
        .extra("power_residual", power.residual)
        .extra("raw_log_slope", lin.slope)
        .extra("c_Q", c_q);
    let critical = (m + qq).abs() < 1e-9;
    let (expected, ok) = if critical {
        let e = -1.0 / q;
        (e, model == "log" && (report.exponent - e).abs() <= 0.15 * e.abs())
    } else {
        let e = -(qq + m) / q;
        (e, model == "power" && (report.exponent - e).abs() <= 0.15 * e.abs())
    };
    Ok(report.extra("expected", expected).with_verdict(Verdict::from_bool(ok)))
}

/// `Σ mult · a(w) ψ(t w^q)` for `ψ` supported in `[0, support]`.
pub fn psi_trace<A, P>(ladder: &SpectrumLadder, a: A, psi: P, support: f64, q: f64, t: f64) -> Result<f64>
where
    A: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("t must be > 0, got {t}")));
    }
    let wmax = (support / t).powf(1.0 / q);
    ladder.sum_below(wmax, |w| a(w) * psi(t * w.powf(q)))
}

/// Smooth bump supported in `[1, 4]`, used as the default ψ.
pub fn default_psi(s: f64) -> f64 {
    if s <= 1.0 || s >= 4.0 {
        0.0
    } else {
        let x = (s - 1.0) / 3.0;
        (-1.0 / (x * (1.0 - x))).exp()
    }
}

/// `∫ ψ(s) ds / s` by Simpson's rule.
pub fn psi_log_moment<P: Fn(f64) -> f64>(psi: P, lo: f64, hi: f64) -> f64 {
    let n = 4000;
    let h = (hi - lo) / n as f64;
    let g = |s: f64| if s > 0.0 { psi(s) / s } else { 0.0 };
    let mut acc = g(lo) + g(hi);
    for i in 1..n {
        let s = lo + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(s);
    }
    acc * h / 3.0
}

/// ψ-trace of `w^{−Q}` along `ts`, divided by `(Q C / q) ∫ψ(s) ds/s`.
///
/// PASS when consecutive ratios agree within 15%.
pub fn psi_plateau<P: Fn(f64) -> f64 + Copy>(
    ladder: &SpectrumLadder,
    psi: P,
    support: (f64, f64),
    q: f64,
    ts: &[f64],
) -> Result<FitReport> {
    let qq = ladder.q();
    let moment = psi_log_moment(psi, support.0, support.1);
    let scale = qq * ladder.weyl_c / q * moment;
    let mut samples = Vec::with_capacity(ts.len());
    for &t in ts {
        let v = psi_trace(ladder, |w| w.powf(-qq), psi, support.1, q, t)?;
        samples.push((t, v / scale));
    }
    let drift = samples
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).abs() / w[0].1.abs().max(1e-300))
        .fold(0.0, f64::max);
    let last = samples.last().map(|s| s.1).unwrap_or(f64::NAN);
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let fit = fit_line(&xs, &ys);
    Ok(FitReport::from_line("psi-plateau", samples, fit, "plateau")
        .labels("t", "ratio")
        .extra("max_drift", drift)
        .extra("plateau", last)
        .extra("log_moment", moment)
        .with_verdict(Verdict::from_bool(drift <= 0.15)))
}

// ---------------------------------------------------------------------------
// Dixmier traces

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DixmierEstimate {
    /// `(p, (p−1) Tr A^p)` along the ladder.
    pub rungs: Vec<(f64, f64)>,
    /// Linear Richardson extrapolant from the two smallest `p`.
    pub extrapolant: f64,
    /// Relative change between the two smallest rungs.
    pub stability: f64,
    pub reach: f64,
    pub weyl_c: f64,
}

pub const DIXMIER_P: [f64; 4] = [1.1, 1.05, 1.02, 1.01];

/// `(p−1) Tr(A^p)` for `a(w)` (decreasing, positive), extrapolated to `p → 1`.
///
/// The operator is scaled by its norm `a(1)` before taking powers and the
/// result is scaled back, so the estimate is exactly homogeneous. Each sum is
/// a partial sum to `w ≤ reach` plus the Weyl-law tail estimate.
pub fn dixmier_estimate<A: Fn(f64) -> f64>(ladder: &SpectrumLadder, a: A, reach: f64) -> Result<DixmierEstimate> {
    let norm = a(1.0);
    if !(norm > 0.0) {
        return Err(Error::Invalid("Dixmier estimate needs a positive operator".into()));
    }
    let mut rungs = Vec::with_capacity(DIXMIER_P.len());
    for &p in &DIXMIER_P {
        let f = |w: f64| (a(w) / norm).powf(p);
        let partial = ladder.sum_below(reach, f)?;
        let tail = ladder.tail_estimate(reach, f);
        if !tail.is_finite() {
            return Err(Error::CutoffTooSmall {
                detail: format!("Tr A^p diverges at p={p}: the order must be <= -Q"),
                required: f64::INFINITY,
            });
        }
        rungs.push((p, norm * (p - 1.0) * (partial + tail)));
    }
    let (p1, e1) = rungs[DIXMIER_P.len() - 2];
    let (p2, e2) = rungs[DIXMIER_P.len() - 1];
    // E(p) ≈ E0 + s (p − 1)
    let slope = (e1 - e2) / (p1 - p2);
    let extrapolant = e2 - slope * (p2 - 1.0);
    Ok(DixmierEstimate {
        rungs,
        extrapolant,
        stability: (e1 - e2).abs() / e2.abs().max(1e-300),
        reach,
        weyl_c: ladder.weyl_c,
    })
}

// ---------------------------------------------------------------------------
// Schatten classes

fn schatten_verdict(name: &str, cutoffs: &[f64], partial: &[f64]) -> FitReport {
    let increments: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let idx: Vec<f64> = (0..increments.len()).map(|i| i as f64).collect();
    let logs: Vec<f64> = increments.iter().map(|v| v.max(1e-300).ln()).collect();
    let tail = increments.len().min(4);
    let start = increments.len() - tail;
    let fit = fit_line(&idx[start..], &logs[start..]);
    let ratio = fit.slope.exp();
    let samples = cutoffs.iter().cloned().zip(partial.iter().cloned()).collect();
    let verdict = if ratio <= 0.9 { Verdict::Converges } else { Verdict::Diverges };
    FitReport::from_line(name, samples, fit, "geometric-increments")
        .labels("cutoff", "partial_sum")
        .extra("increment_ratio", ratio)
        .with_verdict(verdict)
}

/// Partial sums of `Σ d_ξ Σ_i a(w_i)^r` at the irrep cutoffs of `ladder_cutoffs`.
pub fn schatten_probe<A: Fn(f64) -> f64>(ladder: &SpectrumLadder, a: A, r: f64, cutoffs: &[f64]) -> Result<FitReport> {
    if cutoffs.len() < 3 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("Schatten probe needs >= 3 increasing cutoffs".into()));
    }
    let top = cutoffs[cutoffs.len() - 1];
    let mut partial = vec![0.0; cutoffs.len()];
    ladder.for_each_irrep(top, |index, d, ws| {
        let s: f64 = ws.iter().map(|&w| a(w).abs().powf(r)).sum::<f64>() * d;
        for (p, &c) in partial.iter_mut().zip(cutoffs) {
            if index <= c + 1e-9 {
                *p += s;
            }
        }
    })?;
    Ok(schatten_verdict(&format!("schatten-r{r}"), cutoffs, &partial).extra("r", r))
}

/// Same probe for an explicit field, using singular values of each block.
pub fn schatten_probe_field(field: &MatrixField, r: f64, cutoffs: &[f64]) -> Result<FitReport> {
    if cutoffs.len() < 3 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("Schatten probe needs >= 3 increasing cutoffs".into()));
    }
    if cutoffs[cutoffs.len() - 1] > field.cutoff() + 1e-9 {
        return Err(Error::CutoffMismatch("ladder exceeds the field's cutoff".into()));
    }
    let mut partial = vec![0.0; cutoffs.len()];
    for (xi, b) in field.iter() {
        let sv = b.clone().svd(false, false).singular_values;
        let s: f64 = sv.iter().map(|v| v.powf(r)).sum::<f64>() * xi.dim() as f64;
        for (p, &c) in partial.iter_mut().zip(cutoffs) {
            if xi.index() <= c + 1e-9 {
                *p += s;
            }
        }
    }
    Ok(schatten_verdict(&format!("schatten-r{r}"), cutoffs, &partial).extra("r", r))
}
