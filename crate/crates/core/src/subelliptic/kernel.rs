//! Right-convolution kernels of invariant diagonal symbols and their
//! singularity profile on gauge spheres.

use serde::{Deserialize, Serialize};

use super::{SpectrumForm, SubLaplacian};
use crate::error::{Error, Result};
use crate::fit::{fit_line, fit_loglog, FitReport, Verdict};
use crate::group::{Group, GroupPoint};
use crate::linalg::C64;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfileConfig {
    /// Gaussian window `exp(−(M̂/W)²)` applied to the multiplier.
    pub window: f64,
    /// Gauge radii, typically log-spaced in `[0.05, 0.5]`.
    pub radii: Vec<f64>,
    /// Declared order and type of the symbol.
    pub m: f64,
    pub rho: f64,
}

impl KernelProfileConfig {
    pub fn new(m: f64, window: f64) -> Self {
        let n = 8;
        let radii = (0..n)
            .map(|i| 0.05 * 10f64.powf(i as f64 / (n - 1) as f64))
            .collect();
        KernelProfileConfig {
            window,
            radii,
            m,
            rho: 1.0,
        }
    }
}

/// Window cut: `exp(−(w/W)²)` is dropped once `w > 5W`.
const REACH: f64 = 5.0;

/// Kernel `k(y) = Σ_ξ d_ξ Tr[ξ(y) g(L̂(ξ))] e^{−(M̂/W)²}` of a spectral multiplier
/// `g(ν²)` of a sub-Laplacian that is diagonal in the standard basis.
pub fn kernel_value<F>(sub: &SubLaplacian, g: &F, window: f64, y: &GroupPoint) -> C64
where
    F: Fn(f64) -> f64 + Sync,
{
    kernel_values(sub, g, window, std::slice::from_ref(y))[0]
}

/// [`kernel_value`] at many points.
///
/// On SU(2) the sum runs over `(l, n)` pairs with `(1+ν²)^{1/2} ≤ 5W`, one
/// spin ladder per `n`; the ladder coefficients and window weights are shared
/// by all points, so highly anisotropic weights stay cheap.
pub fn kernel_values<F>(sub: &SubLaplacian, g: &F, window: f64, points: &[GroupPoint]) -> Vec<C64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let bound = (REACH * window).powi(2) - 1.0;
    let weight = |nu2: f64| g(nu2) * (-(1.0 + nu2) / (window * window)).exp();
    match sub.group {
        Group::Torus(n) => {
            let reach = bound.max(0.0).sqrt();
            let dual = crate::group::enumerate_dual(Group::Torus(n), reach).expect("finite reach");
            let terms: Vec<(Vec<f64>, f64)> = dual
                .iter()
                .filter_map(|xi| {
                    let nu2 = sub.symbol_block(xi)[(0, 0)].re;
                    let k = xi.torus_k().expect("torus").iter().map(|&v| v as f64).collect();
                    (nu2 <= bound).then(|| (k, weight(nu2)))
                })
                .collect();
            par::map_collect(points, |y| {
                let x = match y {
                    GroupPoint::Torus(x) => x,
                    _ => panic!("kernel_values: point does not match group"),
                };
                let mut acc = C64::new(0.0, 0.0);
                for (k, w) in &terms {
                    let phase: f64 = k.iter().zip(x).map(|(a, b)| a * b).sum();
                    acc += C64::from_polar(*w, phase);
                }
                acc
            })
        }
        Group::Su2 => {
            let planar = sub.form == SpectrumForm::Planar;
            let nu2 = |two_l: i64, two_m: i64| {
                let l = two_l as f64 / 2.0;
                let m = two_m as f64 / 2.0;
                if planar {
                    l * (l + 1.0) - m * m
                } else {
                    l * (l + 1.0)
                }
            };
            let angles: Vec<(f64, f64, f64)> = points
                .iter()
                .map(|y| match y {
                    GroupPoint::Su2 { phi, theta, psi } => ((theta / 2.0).cos(), theta.cos(), phi + psi),
                    _ => panic!("kernel_values: point does not match group"),
                })
                .collect();
            let mut top = 0i64;
            while nu2(top + 1, top + 1) <= bound {
                top += 1;
            }
            let ms: Vec<i64> = (-top..=top).collect();
            let chunks: Vec<&[i64]> = ms.chunks(64).collect();
            let partial = par::map_collect(&chunks, |chunk| {
                let mut acc = vec![C64::new(0.0, 0.0); angles.len()];
                let mut steps: Vec<[f64; 4]> = Vec::new();
                let mut sum = vec![0.0; angles.len()];
                for &two_m in chunk.iter() {
                    ladder_steps(two_m, bound, &nu2, &weight, &mut steps);
                    if steps.is_empty() {
                        continue;
                    }
                    let m = two_m as f64 / 2.0;
                    for (p, &(half_cos, cos_t, _)) in angles.iter().enumerate() {
                        // d^{|n|}_{nn} = cos^{2|n|}(θ/2)
                        let mut c = half_cos.powi(two_m.abs() as i32);
                        let mut b = 0.0;
                        let mut s = steps[0][3] * c;
                        for st in &steps[1..] {
                            let next = st[0] * ((cos_t - st[1]) * c - st[2] * b);
                            b = c;
                            c = next;
                            s += st[3] * c;
                        }
                        sum[p] = s;
                    }
                    for (p, &(_, _, phase)) in angles.iter().enumerate() {
                        acc[p] += C64::from_polar(sum[p], -m * phase);
                    }
                }
                acc
            });
            let mut out = vec![C64::new(0.0, 0.0); angles.len()];
            for part in partial {
                for (o, v) in out.iter_mut().zip(part) {
                    *o += v;
                }
            }
            out
        }
    }
}

/// Recursion coefficients `[a, mix, back, (2l+1)·weight]` along the ladder
/// `l = |n|, |n|+1, ...` while `ν² ≤ bound`; entry 0 only carries the weight.
fn ladder_steps<N, W>(two_m: i64, bound: f64, nu2: &N, weight: &W, out: &mut Vec<[f64; 4]>)
where
    N: Fn(i64, i64) -> f64,
    W: Fn(f64) -> f64,
{
    out.clear();
    let two_j0 = two_m.abs();
    let m = two_m as f64 / 2.0;
    let mut two_j = two_j0;
    loop {
        let e = nu2(two_j, two_m);
        if e > bound {
            return;
        }
        let w = (two_j + 1) as f64 * weight(e);
        if two_j == two_j0 {
            out.push([0.0, 0.0, 0.0, w]);
        } else {
            // coefficients producing spin j+1 from j and j-1 (j = previous spin)
            let j = (two_j - 2) as f64 / 2.0;
            let j1 = j + 1.0;
            let a = j1 * (2.0 * j + 1.0) / (j1 * j1 - m * m);
            let mix = if m == 0.0 { 0.0 } else { m * m / (j * j1) };
            let back = if two_j - 2 == two_j0 || j == 0.0 {
                0.0
            } else {
                (j * j - m * m) / (j * (2.0 * j + 1.0))
            };
            out.push([a, mix, back, w]);
        }
        two_j += 2;
    }
}

/// Points on the gauge sphere of radius `r` in exponential coordinates.
fn sphere_points(sub: &SubLaplacian, r: f64) -> Vec<Vec<f64>> {
    match (sub.group, sub.form) {
        (Group::Torus(n), _) => {
            let mut out = Vec::new();
            for i in 0..n {
                for s in [-1.0, 1.0] {
                    let mut u = vec![0.0; n];
                    u[i] = s * r;
                    out.push(u);
                }
            }
            if n > 1 {
                out.push(vec![r / (n as f64).sqrt(); n]);
            }
            out
        }
        (Group::Su2, SpectrumForm::Planar) => {
            // |y| = max(|u1|, |u2|, |u3|^{1/2})
            let mut out = Vec::new();
            for a in [0.0, std::f64::consts::PI / 8.0, std::f64::consts::PI / 4.0] {
                let (c, s) = (f64::cos(a), f64::sin(a));
                let h = r / c.abs().max(s.abs());
                for f in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                    out.push(vec![h * c, h * s, f * r * r]);
                }
                for f in [0.0, 0.5] {
                    for sign in [-1.0, 1.0] {
                        out.push(vec![f * h * c, f * h * s, sign * r * r]);
                    }
                }
            }
            out
        }
        (Group::Su2, _) => {
            let mut out = Vec::new();
            for i in 0..3 {
                for s in [-1.0, 1.0] {
                    let mut u = vec![0.0; 3];
                    u[i] = s * r;
                    out.push(u);
                }
            }
            let d = r / 3f64.sqrt();
            out.push(vec![d, d, d]);
            out.push(vec![d, -d, d]);
            out
        }
    }
}

fn profile_at<F>(sub: &SubLaplacian, g: &F, window: f64, radii: &[f64]) -> Vec<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut owner = Vec::new();
    let mut points = Vec::new();
    for (i, &r) in radii.iter().enumerate() {
        for u in sphere_points(sub, r) {
            owner.push(i);
            points.push(sub.group.exp(&u));
        }
    }
    let vals = kernel_values(sub, g, window, &points);
    let mut sups = vec![0.0f64; radii.len()];
    for (&i, v) in owner.iter().zip(vals) {
        sups[i] = sups[i].max(v.norm());
    }
    sups
}

/// Samples `sup_{|y| = r} |k(y)|` and fits the singularity.
///
/// Above the critical order the log–log exponent is compared with
/// `−(Q+m)/ρ`; at `m = −Q` a logarithmic model must beat the power law; below
/// it the supremum must be stable under doubling the window.
pub fn kernel_profile<F>(sub: &SubLaplacian, g: F, cfg: &KernelProfileConfig) -> Result<FitReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if cfg.radii.len() < 3 || cfg.window <= 0.0 {
        return Err(Error::Invalid("kernel profile needs >= 3 radii and a positive window".into()));
    }
    if sub.group == Group::Su2 && !matches!(sub.form, SpectrumForm::Planar | SpectrumForm::Laplacian) {
        return Err(Error::Invalid(
            "kernel profiles need a sub-Laplacian diagonal in the standard basis".into(),
        ));
    }
    let q = sub.q();
    let expected = -(q + cfg.m) / cfg.rho;
    let a = profile_at(sub, &g, cfg.window, &cfg.radii);
    let b = profile_at(sub, &g, 2.0 * cfg.window, &cfg.radii);
    let samples: Vec<(f64, f64)> = cfg.radii.iter().cloned().zip(b.iter().cloned()).collect();
    let power_a = fit_loglog(&cfg.radii, &a);
    let power_b = fit_loglog(&cfg.radii, &b);
    let logs: Vec<f64> = cfg.radii.iter().map(|r| r.ln()).collect();
    let lin = fit_line(&logs, &b);
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    let log_residual = lin.residual / mean.abs().max(1e-300);
    let power_residual = power_b.residual;
    let sup_a = a.iter().cloned().fold(0.0, f64::max);
    let sup_b = b.iter().cloned().fold(0.0, f64::max);
    let sup_change = (sup_b - sup_a).abs() / sup_b.max(1e-300);
    let exp_change = (power_b.slope - power_a.slope).abs() / power_b.slope.abs().max(1e-12);
    let mut report = FitReport::from_line(&format!("kernel-{}", sub.name), samples, power_b, "power")
        .labels("gauge_radius", "sup_abs_kernel")
        .extra("expected_exponent", expected)
        .extra("exponent_half_window", power_a.slope)
        .extra("exponent_change", exp_change)
        .extra("sup_half_window", sup_a)
        .extra("sup", sup_b)
        .extra("sup_change", sup_change)
        .extra("log_residual", log_residual)
        .extra("power_residual", power_residual)
        .extra("log_slope", lin.slope);
    let critical = cfg.m + q;
    let ok = if critical < -1e-9 {
        report.model = "bounded".into();
        sup_change < 0.05
    } else if critical.abs() <= 1e-9 {
        report.model = "log".into();
        report.exponent = lin.slope;
        log_residual < power_residual
    } else {
        let tol = 0.25 * expected.abs();
        (power_b.slope - expected).abs() <= tol && exp_change < 0.1
    };
    report.verdict = Verdict::from_bool(ok);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::MatrixField;
    use crate::fourier::inverse_transform;
    use crate::group::{haar_grid, Dual};
    use crate::linalg::re;

    #[test]
    fn matches_inverse_transform() {
        let group = Group::Su2;
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let window = 1.3;
        let g = |v: f64| (1.0 + v).powf(-1.5);
        let bound = (REACH * window).powi(2) - 1.0;
        let dual = Dual::new(group, bound + 1.0).unwrap();
        let field = MatrixField::from_diag_fn(&dual, |xi| {
            sub.standard_diagonal(xi)
                .unwrap()
                .into_iter()
                .map(|v| {
                    if v <= bound {
                        re(g(v) * (-(1.0 + v) / (window * window)).exp())
                    } else {
                        re(0.0)
                    }
                })
                .collect()
        });
        let grid = haar_grid(group, bound + 1.0).unwrap();
        let samples = inverse_transform(&field, &grid).unwrap();
        for n in [0usize, 17, 301, grid.len() / 2, grid.len() - 1] {
            let k = kernel_value(&sub, &g, window, &grid.nodes[n]);
            assert!((k - samples[n]).norm() < 1e-9 * (1.0 + k.norm()), "{k} vs {}", samples[n]);
        }
    }

    #[test]
    fn torus_log_singularity() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let cfg = KernelProfileConfig::new(-1.0, 400.0);
        let r = kernel_profile(&sub, |v: f64| (1.0 + v).powf(-0.5), &cfg).unwrap();
        assert_eq!(r.model, "log");
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn torus_bounded_below_critical() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let cfg = KernelProfileConfig::new(-3.0, 40.0);
        let r = kernel_profile(&sub, |v: f64| (1.0 + v).powf(-1.5), &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }
}
