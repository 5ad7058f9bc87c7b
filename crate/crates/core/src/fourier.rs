//! Group Fourier transform `f̂(ξ) = ∫ f(x) ξ(x)* dx` and its inverse
//! `f(x) = Σ d_ξ Tr[ξ(x) f̂(ξ)]`.
//!
//! On SU(2) both directions are separable: a two-dimensional DFT in the
//! Euler angles (φ, ψ) at each Gauss node θ_j, then a contraction against
//! the small-d matrices at θ_j.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::group::grid::Layout;
use crate::group::{rep_matrix, wigner, Dual, GroupPoint, QuadratureGrid};
use crate::linalg::{CMat, C64};
use crate::par;

fn check_grid(grid: &QuadratureGrid, dual: &Dual) -> Result<()> {
    if grid.group != dual.group {
        return Err(Error::Invalid(format!(
            "grid on {} used with dual of {}",
            grid.group, dual.group
        )));
    }
    if dual.cutoff > grid.band_limit + 1e-9 {
        return Err(Error::Aliasing(format!(
            "cutoff {} exceeds grid exactness {}",
            dual.cutoff, grid.band_limit
        )));
    }
    Ok(())
}

fn max_two_l(dual: &Dual) -> usize {
    dual.irreps.iter().filter_map(|x| x.two_l()).max().unwrap_or(0) as usize
}

/// `e^{i (m/2) t_k}` for `m = -M..=M` (rows) and the given angles (columns).
fn phase_table(two_mmax: usize, angles: &[f64]) -> Vec<Vec<C64>> {
    let m = two_mmax as i64;
    (-m..=m)
        .map(|two| angles.iter().map(|&t| C64::from_polar(1.0, 0.5 * two as f64 * t)).collect())
        .collect()
}

struct Su2Tables {
    two_lmax: usize,
    ephi: Vec<Vec<C64>>,
    epsi: Vec<Vec<C64>>,
}

fn su2_tables(grid: &QuadratureGrid, two_lmax: usize) -> Su2Tables {
    let Layout::Su2 { n_phi, n_psi, .. } = &grid.layout else {
        unreachable!()
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let phis: Vec<f64> = (0..*n_phi).map(|i| two_pi * i as f64 / *n_phi as f64).collect();
    let psis: Vec<f64> = (0..*n_psi).map(|k| 2.0 * two_pi * k as f64 / *n_psi as f64).collect();
    Su2Tables {
        two_lmax,
        ephi: phase_table(two_lmax, &phis),
        epsi: phase_table(two_lmax, &psis),
    }
}

/// Forward transform of samples taken at the grid nodes.
pub fn fourier_transform(grid: &QuadratureGrid, values: &[C64], dual: &Arc<Dual>) -> Result<MatrixField> {
    check_grid(grid, dual)?;
    if values.len() != grid.len() {
        return Err(Error::Invalid(format!(
            "{} samples for a grid of {} nodes",
            values.len(),
            grid.len()
        )));
    }
    match &grid.layout {
        Layout::Torus { .. } => {
            let blocks = par::map_collect(&dual.irreps, |xi| {
                let k = xi.torus_k().expect("torus irrep");
                let mut acc = C64::new(0.0, 0.0);
                for ((x, w), f) in grid.nodes.iter().zip(&grid.weights).zip(values) {
                    let GroupPoint::Torus(a) = x else { unreachable!() };
                    let phase: f64 = k.iter().zip(a).map(|(&ki, &ai)| ki as f64 * ai).sum();
                    acc += f * C64::from_polar(*w, -phase);
                }
                CMat::from_element(1, 1, acc)
            });
            Ok(MatrixField {
                dual: dual.clone(),
                blocks,
                diagonal: false,
            })
        }
        Layout::Su2 {
            n_phi,
            n_psi,
            thetas,
            theta_weights,
        } => {
            let two_lmax = max_two_l(dual);
            let tab = su2_tables(grid, two_lmax);
            let (n_phi, n_psi) = (*n_phi, *n_psi);
            let nm = 2 * two_lmax + 1;
            let w_ang = 1.0 / (n_phi * n_psi) as f64;
            let per_theta = par::map_range(thetas.len(), |j| {
                let base = j * n_phi * n_psi;
                // a[i][mi] = Σ_k f(φ_i, θ_j, ψ_k) e^{i m ψ_k}
                let mut a = vec![vec![C64::new(0.0, 0.0); nm]; n_phi];
                for (i, row) in a.iter_mut().enumerate() {
                    let f = &values[base + i * n_psi..base + (i + 1) * n_psi];
                    for (mi, slot) in row.iter_mut().enumerate() {
                        let e = &tab.epsi[mi];
                        *slot = f.iter().zip(e).map(|(v, p)| v * p).sum();
                    }
                }
                // g[m'][m] = Σ_i e^{i m' φ_i} a[i][m]
                let mut g = vec![vec![C64::new(0.0, 0.0); nm]; nm];
                for (mpi, grow) in g.iter_mut().enumerate() {
                    let e = &tab.ephi[mpi];
                    for (mi, slot) in grow.iter_mut().enumerate() {
                        if (mpi + mi) % 2 != 0 {
                            continue;
                        }
                        *slot = (0..n_phi).map(|i| e[i] * a[i][mi]).sum::<C64>() * w_ang;
                    }
                }
                let dm = wigner::d_matrices(tab.two_lmax, thetas[j]);
                let wt = theta_weights[j];
                dual.irreps
                    .iter()
                    .map(|xi| {
                        let tl = xi.two_l().expect("su2 irrep") as usize;
                        let d = &dm[tl];
                        let off = two_lmax - tl;
                        // m index of row p: two_m = 2p - tl, table index two_m + two_lmax = 2p + off
                        CMat::from_fn(tl + 1, tl + 1, |p, q| {
                            g[2 * q + off][2 * p + off] * (wt * d[(q, p)])
                        })
                    })
                    .collect::<Vec<CMat>>()
            });
            let mut blocks: Vec<CMat> = dual.irreps.iter().map(|xi| CMat::zeros(xi.dim(), xi.dim())).collect();
            for part in per_theta {
                for (acc, b) in blocks.iter_mut().zip(part) {
                    *acc += b;
                }
            }
            Ok(MatrixField {
                dual: dual.clone(),
                blocks,
                diagonal: false,
            })
        }
    }
}

/// `Σ_ξ d_ξ Tr[ξ(x) f̂(ξ)]` at every grid node.
pub fn inverse_transform(field: &MatrixField, grid: &QuadratureGrid) -> Result<Vec<C64>> {
    let dual = &field.dual;
    if grid.group != dual.group {
        return Err(Error::Invalid(format!(
            "grid on {} used with field on {}",
            grid.group, dual.group
        )));
    }
    match &grid.layout {
        Layout::Torus { .. } => Ok(par::map_collect(&grid.nodes, |x| evaluate(field, x))),
        Layout::Su2 {
            n_phi, n_psi, thetas, ..
        } => {
            let two_lmax = max_two_l(dual);
            let tab = su2_tables(grid, two_lmax);
            let (n_phi, n_psi) = (*n_phi, *n_psi);
            let nm = 2 * two_lmax + 1;
            let per_theta = par::map_range(thetas.len(), |j| {
                let dm = wigner::d_matrices(two_lmax, thetas[j]);
                // h[m_p][m_q] = Σ_l d_l d^l_{m_p m_q}(θ_j) f̂(l)_{qp}
                let mut h = vec![vec![C64::new(0.0, 0.0); nm]; nm];
                for (xi, b) in field.iter() {
                    let tl = xi.two_l().expect("su2 irrep") as usize;
                    let d = &dm[tl];
                    let off = two_lmax - tl;
                    let dl = (tl + 1) as f64;
                    for p in 0..=tl {
                        for q in 0..=tl {
                            h[2 * p + off][2 * q + off] += b[(q, p)] * (dl * d[(p, q)]);
                        }
                    }
                }
                // s[m_p][k] = Σ_{m_q} h[m_p][m_q] e^{-i m_q ψ_k}
                let mut s = vec![vec![C64::new(0.0, 0.0); n_psi]; nm];
                for (mp, srow) in s.iter_mut().enumerate() {
                    for (mq, hv) in h[mp].iter().enumerate() {
                        if hv.norm_sqr() == 0.0 {
                            continue;
                        }
                        for (k, slot) in srow.iter_mut().enumerate() {
                            *slot += hv * tab.epsi[mq][k].conj();
                        }
                    }
                }
                let mut out = vec![C64::new(0.0, 0.0); n_phi * n_psi];
                for (mp, srow) in s.iter().enumerate() {
                    for i in 0..n_phi {
                        let e = tab.ephi[mp][i].conj();
                        let row = &mut out[i * n_psi..(i + 1) * n_psi];
                        for (slot, v) in row.iter_mut().zip(srow) {
                            *slot += e * v;
                        }
                    }
                }
                out
            });
            Ok(per_theta.into_iter().flatten().collect())
        }
    }
}

/// `Σ_ξ d_ξ Tr[ξ(x) f̂(ξ)]` at a single point.
pub fn evaluate(field: &MatrixField, x: &GroupPoint) -> C64 {
    match x {
        GroupPoint::Torus(a) => field
            .iter()
            .map(|(xi, b)| {
                let k = xi.torus_k().expect("torus irrep");
                let phase: f64 = k.iter().zip(a).map(|(&ki, &ai)| ki as f64 * ai).sum();
                b[(0, 0)] * C64::from_polar(1.0, phase)
            })
            .sum(),
        GroupPoint::Su2 { phi, theta, psi } => {
            let two_lmax = max_two_l(&field.dual);
            let dm = wigner::d_matrices(two_lmax, *theta);
            field
                .iter()
                .map(|(xi, b)| {
                    let tl = xi.two_l().expect("su2 irrep") as usize;
                    let t = crate::group::su2_from_small_d(tl, &dm[tl], *phi, *psi);
                    (t * b).trace() * (tl + 1) as f64
                })
                .sum()
        }
    }
}

/// The function whose Fourier coefficients are `f̂`, sampled by direct
/// evaluation of `ξ(x)` (slow; used as an oracle).
pub fn inverse_transform_direct(field: &MatrixField, grid: &QuadratureGrid) -> Vec<C64> {
    par::map_collect(&grid.nodes, |x| {
        field
            .iter()
            .map(|(xi, b)| (rep_matrix(xi, x) * b).trace() * xi.dim() as f64)
            .sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{haar_grid, Group, Irrep, Label};
    use rand::{Rng, SeedableRng};

    fn random_field(dual: &Arc<Dual>, seed: u64) -> MatrixField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        MatrixField::from_fn(dual, |xi| {
            CMat::from_fn(xi.dim(), xi.dim(), |_, _| C64::new(rng_val(&mut rng), rng_val(&mut rng)))
        })
    }

    fn rng_val(rng: &mut rand_chacha::ChaCha8Rng) -> f64 {
        rng.gen::<f64>() - 0.5
    }

    #[test]
    fn circle_single_frequency() {
        let grid = haar_grid(Group::Torus(1), 4.0).unwrap();
        let dual = Dual::new(Group::Torus(1), 4.0).unwrap();
        let f = grid.sample(|x| C64::from_polar(1.0, 2.0 * x.coords()[0]));
        let fh = fourier_transform(&grid, &f, &dual).unwrap();
        for (xi, b) in fh.iter() {
            let want = if xi.torus_k().unwrap()[0] == 2 { 1.0 } else { 0.0 };
            assert!((b[(0, 0)] - C64::new(want, 0.0)).norm() < 1e-14);
        }
        assert!((fh.plancherel_norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn su2_transform_of_t1_00() {
        let grid = haar_grid(Group::Su2, 2.0).unwrap();
        let dual = Dual::new(Group::Su2, 2.0).unwrap();
        let xi = Irrep::su2(2);
        let f = grid.sample(|x| rep_matrix(&xi, x)[(1, 1)]);
        let fh = fourier_transform(&grid, &f, &dual).unwrap();
        for (eta, b) in fh.iter() {
            for i in 0..eta.dim() {
                for j in 0..eta.dim() {
                    let want = if eta.label == Label::Su2(2) && i == 1 && j == 1 { 1.0 / 3.0 } else { 0.0 };
                    assert!((b[(i, j)] - C64::new(want, 0.0)).norm() < 1e-13, "{eta} ({i},{j}) {}", b[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn separable_inverse_matches_direct_evaluation() {
        let grid = haar_grid(Group::Su2, 2.5).unwrap();
        let dual = Dual::new(Group::Su2, 2.5).unwrap();
        let fh = random_field(&dual, 5);
        let fast = inverse_transform(&fh, &grid).unwrap();
        let slow = inverse_transform_direct(&fh, &grid);
        let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn round_trip_and_plancherel() {
        for (g, c) in [(Group::Su2, 4.0), (Group::Torus(2), 5.0), (Group::Su2, 3.5)] {
            let grid = haar_grid(g, c).unwrap();
            let dual = Dual::new(g, c).unwrap();
            let fh = random_field(&dual, 17);
            let f = inverse_transform(&fh, &grid).unwrap();
            let back = fourier_transform(&grid, &f, &dual).unwrap();
            assert!(back.max_abs_diff(&fh) < 1e-10, "{g}");
            let l2 = grid.l2_norm(&f);
            assert!((l2 - fh.plancherel_norm()).abs() < 1e-10 * l2.max(1.0));
        }
    }

    #[test]
    fn aliasing_is_reported() {
        let grid = haar_grid(Group::Su2, 2.0).unwrap();
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let f = vec![C64::new(0.0, 0.0); grid.len()];
        assert!(matches!(fourier_transform(&grid, &f, &dual), Err(Error::Aliasing(_))));
    }
}
