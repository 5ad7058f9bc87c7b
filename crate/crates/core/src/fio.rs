//! Fourier integral operators with Hermitian matrix phases, wavetype
//! operators, half-wave propagators, gap diagnostics and `L²` norms.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MatrixField, SpatialSymbol};
use crate::fit::{fit_loglog, FitReport, Verdict};
use crate::fourier::{fourier_transform, inverse_transform};
use crate::group::{enumerate_dual, rep_matrices_at, Dual, Group, GroupPoint, QuadratureGrid};
use crate::linalg::{self, re, CMat, C64};
use crate::par;
use crate::subelliptic::SubLaplacian;
use crate::symbol::{operator_matrix, quantize_apply};

const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian phase `φ(x, ξ)` on the nodes of a grid.
#[derive(Debug, Clone)]
pub struct PhaseField {
    pub phase: SpatialSymbol,
}

impl PhaseField {
    pub fn new(phase: SpatialSymbol) -> Result<Self> {
        let nodes = if phase.is_invariant() { 1 } else { phase.grid.len() };
        for node in 0..nodes {
            for (xi, b) in phase.at(node).iter() {
                if linalg::hermitian_defect(b) > HERMITIAN_TOL * (1.0 + linalg::op_norm(b)) {
                    return Err(Error::NonHermitianPhase {
                        node,
                        irrep: xi.to_string(),
                    });
                }
            }
        }
        Ok(PhaseField { phase })
    }

    /// Diagonal real phases `φ(x, ξ) = diag(g(x, ξ, j))`.
    pub fn diagonal<F>(grid: &Arc<QuadratureGrid>, dual: &Arc<Dual>, g: F) -> Self
    where
        F: Fn(&GroupPoint, &crate::group::Irrep, usize) -> f64 + Sync,
    {
        let phase = SpatialSymbol::from_fn(grid, dual, |x, xi| {
            let v: Vec<f64> = (0..xi.dim()).map(|j| g(x, xi, j)).collect();
            linalg::diag_real(&v)
        });
        PhaseField { phase }
    }

    /// Hermitian logarithm of `ξ(x)`, so `e^{iφ} = ξ(x)`.
    pub fn of_representation(grid: &Arc<QuadratureGrid>, dual: &Arc<Dual>) -> Self {
        let fields = par::map_collect(&grid.nodes, |x| {
            let reps = rep_matrices_at(dual, x);
            MatrixField::from_fn(dual, |xi| {
                let k = dual.position(&xi.label).expect("irrep in dual");
                linalg::unitary_log(&reps[k])
            })
        });
        PhaseField {
            phase: SpatialSymbol::from_nodes(grid, fields).expect("grid-shaped fields"),
        }
    }

    /// `e^{iφ}` at every node and irrep.
    pub fn exponential(&self) -> SpatialSymbol {
        self.phase
            .map_fields(|f| Ok(f.map(|_, b| linalg::unitary_exp(b))))
            .expect("shape preserved")
    }
}

/// `Af(x) = Σ_ξ d_ξ Tr[e^{iφ(x,ξ)} σ(x,ξ) f̂(ξ)]` at the nodes of the symbol's grid.
pub fn fio_apply(sym: &SpatialSymbol, phase: &PhaseField, f: &[C64]) -> Result<Vec<C64>> {
    let grid = &sym.grid;
    if phase.phase.dual.cutoff + 1e-9 < sym.dual.cutoff || !Arc::ptr_eq(grid, &phase.phase.grid) && grid.len() != phase.phase.grid.len() {
        return Err(Error::CutoffMismatch("phase and symbol must share grid and cutoff".into()));
    }
    let fh = fourier_transform(grid, f, &sym.dual)?;
    let expo = phase.exponential();
    let ppos: Vec<usize> = sym
        .dual
        .irreps
        .iter()
        .map(|xi| phase.phase.dual.position(&xi.label).expect("label in phase dual"))
        .collect();
    Ok(par::map_range(grid.len(), |n| {
        let e = expo.at(if expo.is_invariant() { 0 } else { n });
        let s = sym.at(if sym.is_invariant() { 0 } else { n });
        s.iter()
            .zip(&fh.blocks)
            .zip(&ppos)
            .map(|(((xi, sb), fb), &p)| (&e.blocks[p] * sb * fb).trace() * xi.dim() as f64)
            .sum()
    }))
}

/// `ξ(x)* e^{iφ(x,ξ)} σ(x,ξ)`: the symbol whose quantization is the FIO.
pub fn fio_symbol(sym: &SpatialSymbol, phase: &PhaseField) -> Result<SpatialSymbol> {
    let expo = phase.exponential();
    let grid = sym.grid.clone();
    let dual = sym.dual.clone();
    let fields = par::map_range(grid.len(), |n| {
        let reps = rep_matrices_at(&dual, &grid.nodes[n]);
        let e = expo.at(if expo.is_invariant() { 0 } else { n });
        let s = sym.at(if sym.is_invariant() { 0 } else { n });
        MatrixField::from_fn(&dual, |xi| {
            let k = dual.position(&xi.label).expect("irrep");
            let p = e.dual.position(&xi.label).expect("irrep in phase");
            reps[k].adjoint() * &e.blocks[p] * &s.blocks[k]
        })
    });
    SpatialSymbol::from_nodes(&grid, fields)
}

/// Quantization of `e^{iΦ(ξ)} σ(x, ξ)` for an invariant Hermitian `Φ`.
pub fn wavetype_apply(sym: &SpatialSymbol, big_phi: &MatrixField, f: &[C64]) -> Result<Vec<C64>> {
    quantize_apply(&wavetype_symbol(sym, big_phi)?, f)
}

pub fn wavetype_symbol(sym: &SpatialSymbol, big_phi: &MatrixField) -> Result<SpatialSymbol> {
    for (xi, b) in big_phi.iter() {
        if linalg::hermitian_defect(b) > HERMITIAN_TOL * (1.0 + linalg::op_norm(b)) {
            return Err(Error::NonHermitianPhase {
                node: 0,
                irrep: xi.to_string(),
            });
        }
    }
    let u = big_phi.map(|_, b| linalg::unitary_exp(b)).restrict(&sym.dual)?;
    sym.map_fields(|f| u.mul(f))
}

// ---------------------------------------------------------------------------
// Wave equation

/// Generator of the wave equation `u_tt + A u = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WaveOperator {
    /// `A = 1 + L`.
    Shifted,
    /// `A = L`; `A^{−1/2}` is 0 on the kernel.
    Bare,
}

impl WaveOperator {
    fn value(self, nu2: f64) -> f64 {
        match self {
            WaveOperator::Shifted => 1.0 + nu2.max(0.0),
            WaveOperator::Bare => nu2.max(0.0),
        }
    }
}

const KERNEL_TOL: f64 = 1e-12;

/// `(û(t), û_t(t))` from `(f̂₀, f̂₁)` via `u = e^{it√A} f₊ + e^{−it√A} f₋`,
/// `f± = (f₀ ∓ i A^{−1/2} f₁)/2`.
pub fn wave_propagator_fields(
    sub: &SubLaplacian,
    op: WaveOperator,
    t: f64,
    f0: &MatrixField,
    f1: &MatrixField,
) -> Result<(MatrixField, MatrixField)> {
    let dual = &f0.dual;
    if op == WaveOperator::Bare {
        // kernel projection of f̂₁
        let proj = sub.function_field(dual, |v| re(if v.abs() <= KERNEL_TOL { 1.0 } else { 0.0 }));
        let on_kernel = proj.mul(f1)?.plancherel_norm();
        if on_kernel > KERNEL_TOL * (1.0 + f1.plancherel_norm()) {
            return Err(Error::Convention(format!(
                "initial velocity has a component {on_kernel:.3e} on the kernel of L"
            )));
        }
    }
    let inv_sqrt = sub.function_field(dual, |v| {
        let a = op.value(v);
        re(if a <= KERNEL_TOL { 0.0 } else { 1.0 / a.sqrt() })
    });
    let sqrt_a = sub.function_field(dual, |v| re(op.value(v).sqrt()));
    let fwd = sub.function_field(dual, |v| C64::from_polar(1.0, t * op.value(v).sqrt()));
    let bwd = fwd.adjoint();
    let i = linalg::c(0.0, 1.0);
    let g = inv_sqrt.mul(f1)?.scale(i);
    let f_plus = f0.sub(&g)?.scale(re(0.5));
    let f_minus = f0.add(&g)?.scale(re(0.5));
    let up = fwd.mul(&f_plus)?;
    let um = bwd.mul(&f_minus)?;
    let u = up.add(&um)?;
    // u_t = i√A (e^{it√A} f₊ − e^{−it√A} f₋)
    let ut = sqrt_a.mul(&up.sub(&um)?)?.scale(i);
    // the kernel component of u grows linearly only through f₁, excluded above
    Ok((u, ut))
}

/// `‖u_t‖² + ‖A^{1/2} u‖²` in the Plancherel norm.
pub fn wave_energy(sub: &SubLaplacian, op: WaveOperator, u: &MatrixField, ut: &MatrixField) -> Result<f64> {
    let sqrt_a = sub.function_field(&u.dual, |v| re(op.value(v).sqrt()));
    let a = sqrt_a.mul(u)?.plancherel_norm();
    let b = ut.plancherel_norm();
    Ok(a * a + b * b)
}

/// Sample-space propagator on `grid`, band-limited to `dual`.
pub fn wave_propagator(
    sub: &SubLaplacian,
    op: WaveOperator,
    grid: &QuadratureGrid,
    dual: &Arc<Dual>,
    t: f64,
    f0: &[C64],
    f1: &[C64],
) -> Result<(Vec<C64>, Vec<C64>)> {
    let a = fourier_transform(grid, f0, dual)?;
    let b = fourier_transform(grid, f1, dual)?;
    let (u, ut) = wave_propagator_fields(sub, op, t, &a, &b)?;
    Ok((inverse_transform(&u, grid)?, inverse_transform(&ut, grid)?))
}

/// `(t, energy, |energy − energy₀|/energy₀)` along `ts`.
pub fn energy_table(sub: &SubLaplacian, op: WaveOperator, f0: &MatrixField, f1: &MatrixField, ts: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    let e0 = wave_energy(sub, op, f0, f1)?;
    ts.iter()
        .map(|&t| {
            let (u, ut) = wave_propagator_fields(sub, op, t, f0, f1)?;
            let e = wave_energy(sub, op, &u, &ut)?;
            Ok((t, e, (e - e0).abs() / e0.max(1e-300)))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Gap diagnostics

const GRAD_STEP: f64 = 1e-3;

fn ratio_report(name: &str, ratios: &[f64]) -> FitReport {
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    let ok = min > 1e-6 && spread <= 1e3;
    let mut r = FitReport::loglog(name, Vec::new()).labels("pair", "ratio");
    r.model = "ratio-range".into();
    r.extra("min_ratio", min)
        .extra("max_ratio", max)
        .extra("spread", spread)
        .with_verdict(Verdict::from_bool(ok))
}

/// Ratios `|∇ₓφ(x,k) − ∇ₓφ(x,k′)| / |k − k′|` on `T^n` over all pairs of
/// frequencies with `|k| ≤ cutoff` and every grid node.
pub fn phase_gap_check_torus<F>(n: usize, phase: F, cutoff: f64, grid: &QuadratureGrid) -> Result<FitReport>
where
    F: Fn(&[f64], &[i32]) -> f64 + Sync,
{
    let ks: Vec<Vec<i32>> = enumerate_dual(Group::Torus(n), cutoff)?
        .into_iter()
        .map(|xi| xi.torus_k().expect("torus").to_vec())
        .collect();
    let per_node: Vec<Vec<f64>> = par::map_collect(&grid.nodes, |x| {
        let x = x.coords();
        let grads: Vec<Vec<f64>> = ks
            .iter()
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let mut a = x.clone();
                        let mut b = x.clone();
                        a[i] += GRAD_STEP;
                        b[i] -= GRAD_STEP;
                        (phase(&a, k) - phase(&b, k)) / (2.0 * GRAD_STEP)
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        for i in 0..ks.len() {
            for j in i + 1..ks.len() {
                let dg: f64 = grads[i].iter().zip(&grads[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let dk: f64 = ks[i].iter().zip(&ks[j]).map(|(a, b)| ((a - b) as f64).powi(2)).sum::<f64>().sqrt();
                out.push(dg / dk);
            }
        }
        out
    });
    let ratios: Vec<f64> = per_node.into_iter().flatten().collect();
    Ok(ratio_report("phase-gap", &ratios))
}

/// SU(2) analogue for diagonal phases `φ_jj(x, l)`: left-invariant gradients
/// compared against `|λ_l^τ − λ_{l′}^τ|` with `λ_l = l(l+1)`, over pairs of
/// distinct spins.
pub fn phase_gap_check_su2<F>(phase: F, tau: f64, cutoff: f64, grid: &QuadratureGrid) -> Result<FitReport>
where
    F: Fn(&GroupPoint, u32, usize) -> f64 + Sync,
{
    let g = Group::Su2;
    let steps: Vec<(GroupPoint, GroupPoint)> = (0..3)
        .map(|k| {
            let mut u = [0.0; 3];
            u[k] = GRAD_STEP;
            let p = g.exp(&u);
            u[k] = -GRAD_STEP;
            (p, g.exp(&u))
        })
        .collect();
    let spins: Vec<u32> = (0..=(2.0 * cutoff + 1e-9).floor() as u32).collect();
    let per_node: Vec<Vec<f64>> = par::map_collect(&grid.nodes, |x| {
        // (spin, gradient) for every diagonal entry
        let mut grads: Vec<(u32, [f64; 3])> = Vec::new();
        for &tl in &spins {
            for j in 0..=tl as usize {
                let mut gr = [0.0; 3];
                for (k, (p, m)) in steps.iter().enumerate() {
                    gr[k] = (phase(&g.multiply(x, p), tl, j) - phase(&g.multiply(x, m), tl, j)) / (2.0 * GRAD_STEP);
                }
                grads.push((tl, gr));
            }
        }
        let lam = |tl: u32| {
            let l = tl as f64 / 2.0;
            (l * (l + 1.0)).powf(tau)
        };
        let mut out = Vec::new();
        for a in 0..grads.len() {
            for b in a + 1..grads.len() {
                if grads[a].0 == grads[b].0 {
                    continue;
                }
                let dg: f64 = (0..3).map(|k| (grads[a].1[k] - grads[b].1[k]).powi(2)).sum::<f64>().sqrt();
                out.push(dg / (lam(grads[a].0) - lam(grads[b].0)).abs());
            }
        }
        out
    });
    let ratios: Vec<f64> = per_node.into_iter().flatten().collect();
    Ok(ratio_report("phase-gap-su2", &ratios))
}

/// `ε₀ = min 1 − (λ/λ′)^τ` over adjacent distinct eigenvalues of `sub`
/// below the first eigenvalue that a larger cutoff could add.
pub fn eigen_gap_check(sub: &SubLaplacian, tau: f64, cutoff: f64) -> Result<FitReport> {
    let inner = enumerate_dual(sub.group, cutoff)?;
    let outer = enumerate_dual(sub.group, cutoff + 1.0)?;
    let complete = outer
        .iter()
        .filter(|xi| xi.index() > cutoff + 1e-9)
        .flat_map(|xi| sub.eigenvalues(xi))
        .fold(f64::INFINITY, f64::min);
    let mut values: Vec<f64> = inner
        .iter()
        .flat_map(|xi| sub.eigenvalues(xi))
        .filter(|&v| v < complete - 1e-9)
        .collect();
    values.sort_by(f64::total_cmp);
    values.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * (1.0 + b.abs()));
    let positive: Vec<f64> = values.into_iter().filter(|&v| v > 1e-9).collect();
    if positive.len() < 2 {
        return Err(Error::Invalid("need at least two positive eigenvalues below the cutoff".into()));
    }
    let samples: Vec<(f64, f64)> = positive
        .windows(2)
        .map(|w| (w[1], 1.0 - (w[0] / w[1]).powf(tau)))
        .collect();
    let eps0 = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let fit = fit_loglog(&xs, &ys);
    Ok(FitReport::from_line("eigen-gap", samples, fit, "power")
        .labels("eigenvalue", "gap")
        .extra("epsilon0", eps0)
        .extra("tau", tau)
        .with_verdict(Verdict::from_bool(eps0 >= 1e-3)))
}

// ---------------------------------------------------------------------------
// Operator norms

/// Largest singular value by power iteration on `M*M` from a seeded start.
pub fn l2_opnorm(m: &CMat) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = nalgebra::DVector::<C64>::from_fn(n, |_, _| linalg::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    v /= re(v.norm());
    let mh = m.adjoint();
    let mut prev = 0.0;
    for _ in 0..20_000 {
        let w = &mh * (m * &v);
        let lam = w.norm();
        if lam == 0.0 {
            return 0.0;
        }
        v = w / re(lam);
        if (lam - prev).abs() <= 1e-14 * lam {
            return lam.sqrt();
        }
        prev = lam;
    }
    prev.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub band_limit: f64,
    pub norm: f64,
    pub norm_doubled: f64,
    /// `|norm_doubled − norm| / norm_doubled`.
    pub stability: f64,
}

/// Norm of `Op(σ)` (or of the FIO with phase `φ`) at `band_limit` and at
/// twice that.
pub fn l2_opnorm_symbol(sym: &SpatialSymbol, phase: Option<&PhaseField>, band_limit: f64) -> Result<NormReport> {
    let total = match phase {
        Some(p) => fio_symbol(sym, p)?,
        None => sym.clone(),
    };
    let a = l2_opnorm(&operator_matrix(&total, band_limit)?.0);
    let b = l2_opnorm(&operator_matrix(&total, 2.0 * band_limit)?.0);
    Ok(NormReport {
        band_limit,
        norm: a,
        norm_doubled: b,
        stability: (b - a).abs() / b.max(1e-300),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::haar_grid;
    use crate::linalg::c;

    fn random_samples(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn band_limited(grid: &QuadratureGrid, dual: &Arc<Dual>, seed: u64) -> Vec<C64> {
        let f = random_samples(grid.len(), seed);
        inverse_transform(&fourier_transform(grid, &f, dual).unwrap(), grid).unwrap()
    }

    #[test]
    fn representation_phase_is_quantization() {
        let dual = Dual::new(Group::Su2, 1.5).unwrap();
        let grid = Arc::new(haar_grid(Group::Su2, 3.0).unwrap());
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let sym = SpatialSymbol::from_fn(&grid, &dual, |x, xi| {
            sub.m_weight(-1.0, xi) * re(1.0 + 0.3 * x.coords()[1].cos())
        });
        let phase = PhaseField::of_representation(&grid, &dual);
        let f = band_limited(&grid, &dual, 3);
        let a = fio_apply(&sym, &phase, &f).unwrap();
        let b = quantize_apply(&sym, &f).unwrap();
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn zero_phase_identity_gives_value_at_identity() {
        let dual = Dual::new(Group::Su2, 1.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Su2, 2.0).unwrap());
        let sym = SpatialSymbol::invariant(&grid, MatrixField::identity(&dual));
        let phase = PhaseField::diagonal(&grid, &dual, |_, _, _| 0.0);
        let f = band_limited(&grid, &dual, 5);
        let fh = fourier_transform(&grid, &f, &dual).unwrap();
        let at_e = crate::fourier::evaluate(&fh, &Group::Su2.identity());
        let a = fio_apply(&sym, &phase, &f).unwrap();
        assert!(a.iter().all(|v| (v - at_e).norm() < 1e-10));
    }

    #[test]
    fn torus_linear_phase_is_identity() {
        let dual = Dual::new(Group::Torus(1), 6.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 12.0).unwrap());
        let sym = SpatialSymbol::invariant(&grid, MatrixField::identity(&dual));
        let phase = PhaseField::diagonal(&grid, &dual, |x, xi, _| xi.torus_k().unwrap()[0] as f64 * x.coords()[0]);
        let f = band_limited(&grid, &dual, 9);
        let a = fio_apply(&sym, &phase, &f).unwrap();
        let err = a.iter().zip(&f).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn non_hermitian_phase_rejected() {
        let dual = Dual::new(Group::Su2, 0.5).unwrap();
        let grid = Arc::new(haar_grid(Group::Su2, 1.0).unwrap());
        let bad = SpatialSymbol::invariant(
            &grid,
            MatrixField::from_fn(&dual, |xi| {
                let mut m = CMat::zeros(xi.dim(), xi.dim());
                if xi.dim() == 2 {
                    m[(0, 1)] = re(1.0);
                }
                m
            }),
        );
        assert!(matches!(PhaseField::new(bad), Err(Error::NonHermitianPhase { .. })));
    }

    #[test]
    fn wavetype_norm_equals_symbol_sup() {
        let dual = Dual::new(Group::Su2, 2.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Su2, 2.0).unwrap());
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let sym = SpatialSymbol::invariant(&grid, sub.m_weight_field(-0.5, &dual));
        let big_phi = sub.symbol(&dual).scale(re(0.37));
        let w = wavetype_symbol(&sym, &big_phi).unwrap();
        let n = l2_opnorm(&operator_matrix(&w, 2.0).unwrap().0);
        let sup = sym.sup_op_norm();
        assert!((n - sup).abs() < 1e-8, "{n} {sup}");
        let plain = wavetype_symbol(&sym, &MatrixField::zeros(&dual)).unwrap();
        assert!(plain.max_abs_diff(&sym) < 1e-14);
    }

    #[test]
    fn wave_scalar_ode() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let dual = Dual::new(Group::Torus(1), 4.0).unwrap();
        let grid = haar_grid(Group::Torus(1), 8.0).unwrap();
        let f0: Vec<C64> = grid.nodes.iter().map(|x| C64::from_polar(1.0, x.coords()[0])).collect();
        let f1 = vec![re(0.0); grid.len()];
        let t = 0.7;
        let (u, ut) = wave_propagator(&sub, WaveOperator::Shifted, &grid, &dual, t, &f0, &f1).unwrap();
        let w = 2f64.sqrt();
        for (i, x) in grid.nodes.iter().enumerate() {
            let e = C64::from_polar(1.0, x.coords()[0]);
            assert!((u[i] - e * (w * t).cos()).norm() < 1e-12);
            assert!((ut[i] + e * (w * (w * t).sin())).norm() < 1e-12);
        }
        let (u0, ut0) = wave_propagator(&sub, WaveOperator::Shifted, &grid, &dual, 0.0, &f0, &f1).unwrap();
        assert!(u0.iter().zip(&f0).all(|(a, b)| (a - b).norm() < 1e-12));
        assert!(ut0.iter().all(|a| a.norm() < 1e-12));
    }

    #[test]
    fn wave_energy_and_group_law() {
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let grid = haar_grid(Group::Su2, 3.0).unwrap();
        let f0 = fourier_transform(&grid, &random_samples(grid.len(), 1), &dual).unwrap();
        let f1 = fourier_transform(&grid, &random_samples(grid.len(), 2), &dual).unwrap();
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let table = energy_table(&sub, WaveOperator::Shifted, &f0, &f1, &ts).unwrap();
        assert!(table.iter().all(|r| r.2 < 1e-8));
        let (ua, uta) = wave_propagator_fields(&sub, WaveOperator::Shifted, 0.3, &f0, &f1).unwrap();
        let (ub, _) = wave_propagator_fields(&sub, WaveOperator::Shifted, 0.5, &ua, &uta).unwrap();
        let (uc, _) = wave_propagator_fields(&sub, WaveOperator::Shifted, 0.8, &f0, &f1).unwrap();
        assert!(ub.max_abs_diff(&uc) < 1e-9);
        // with A = L a velocity on the constants violates the convention
        let e = wave_propagator_fields(&sub, WaveOperator::Bare, 0.3, &f0, &f1);
        assert!(matches!(e, Err(Error::Convention(_))));
    }

    #[test]
    fn phase_gap_torus() {
        let grid = haar_grid(Group::Torus(1), 8.0).unwrap();
        let lin = phase_gap_check_torus(1, |x, k| k[0] as f64 * x[0], 6.0, &grid).unwrap();
        assert_eq!(lin.verdict, Verdict::Pass);
        assert!((lin.get_extra("min_ratio").unwrap() - 1.0).abs() < 1e-6);
        let pert = phase_gap_check_torus(1, |x, k| k[0] as f64 * (x[0] + 0.25 * x[0].sin()), 6.0, &grid).unwrap();
        assert_eq!(pert.verdict, Verdict::Pass);
        assert!(pert.get_extra("min_ratio").unwrap() >= 0.75 - 1e-6);
        assert!(pert.get_extra("max_ratio").unwrap() <= 1.25 + 1e-6);
        let zero = phase_gap_check_torus(1, |_, _| 0.0, 6.0, &grid).unwrap();
        assert_eq!(zero.verdict, Verdict::Fail);
    }

    #[test]
    fn phase_gap_su2_diagonal() {
        let grid = haar_grid(Group::Su2, 1.0).unwrap();
        // φ_jj = λ_l ψ-translation: gradient ∝ λ_l along one direction
        let ph = |x: &GroupPoint, tl: u32, _j: usize| {
            let l = tl as f64 / 2.0;
            l * (l + 1.0) * Group::Su2.log(x)[2]
        };
        let r = phase_gap_check_su2(ph, 1.0, 2.0, &grid).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.extras);
    }

    #[test]
    fn eigen_gap_closed_forms() {
        let sub = SubLaplacian::laplacian(Group::Torus(1));
        let r = eigen_gap_check(&sub, 1.0, 20.0).unwrap();
        // largest complete pair is (19, 20)
        let exact = 1.0 - (19.0f64 / 20.0).powi(2);
        assert!((r.get_extra("epsilon0").unwrap() - exact).abs() < 1e-12);
        let su2 = SubLaplacian::laplacian(Group::Su2);
        let r = eigen_gap_check(&su2, 1.0, 5.0).unwrap();
        let (a, b) = (4.5f64 * 5.5, 5.0f64 * 6.0);
        assert!((r.get_extra("epsilon0").unwrap() - (1.0 - a / b)).abs() < 1e-12);
        let tiny = eigen_gap_check(&sub, 1e-5, 20.0).unwrap();
        assert_eq!(tiny.verdict, Verdict::Fail);
    }

    #[test]
    fn power_iteration_matches_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = CMat::from_fn(12, 12, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        assert!((l2_opnorm(&m) - linalg::op_norm(&m)).abs() < 1e-8);
    }

    #[test]
    fn s0_symbol_norm_is_band_stable() {
        let dual = Dual::new(Group::Torus(1), 32.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 34.0).unwrap());
        let sym = SpatialSymbol::from_fn(&grid, &dual, |x, xi| {
            let k = xi.torus_k().unwrap()[0] as f64;
            linalg::diag_real(&[1.0 + 0.5 * x.coords()[0].cos() * k / (1.0 + k * k).sqrt()])
        });
        let r = l2_opnorm_symbol(&sym, None, 16.0).unwrap();
        assert!(r.stability < 0.05, "{r:?}");
    }
}
