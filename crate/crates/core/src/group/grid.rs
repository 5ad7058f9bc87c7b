//! Product quadrature rules for the normalized Haar measure.

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};

use super::{Group, GroupPoint};
use crate::error::{Error, Result};

/// Upper bound on the number of grid nodes accepted by [`haar_grid`].
pub const MAX_NODES: usize = 20_000_000;

/// Tensor structure of a grid, used by the separable transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layout {
    /// `per_dim^n` uniform nodes; node index is row-major with the first angle slowest.
    Torus { n: usize, per_dim: usize },
    /// Node index is `(i_theta * n_phi + i_phi) * n_psi + i_psi`.
    Su2 {
        n_phi: usize,
        n_psi: usize,
        thetas: Vec<f64>,
        theta_weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    pub group: Group,
    pub nodes: Vec<GroupPoint>,
    pub weights: Vec<f64>,
    /// Products of two matrix coefficients with index at most this value integrate exactly.
    pub band_limit: f64,
    pub layout: Layout,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: Fn(&GroupPoint) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }

    /// Quadrature `L²` norm of sampled values.
    pub fn l2_norm(&self, values: &[crate::linalg::C64]) -> f64 {
        assert_eq!(values.len(), self.len());
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| w * v.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Sample a function at every node.
    pub fn sample<T, F: Fn(&GroupPoint) -> T>(&self, f: F) -> Vec<T> {
        self.nodes.iter().map(f).collect()
    }
}

/// Haar grid integrating products of matrix coefficients up to `band_limit` exactly.
///
/// Torus: `2B+1` uniform points per angle. SU(2): `2L+1` trapezoid nodes in φ,
/// `4L+1` in ψ (period 4π) and `L+1` Gauss–Legendre nodes in `cos θ`.
pub fn haar_grid(group: Group, band_limit: f64) -> Result<QuadratureGrid> {
    if !(band_limit >= 0.0) || !band_limit.is_finite() {
        return Err(Error::Invalid(format!("band limit must be >= 0, got {band_limit}")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    match group {
        Group::Torus(n) => {
            let b = (band_limit + 1e-9).floor() as usize;
            let per_dim = 2 * b + 1;
            let total = per_dim
                .checked_pow(n as u32)
                .filter(|&t| t <= MAX_NODES)
                .ok_or_else(|| Error::Resource(format!("T{n} grid with {per_dim} points per angle")))?;
            let h = two_pi / per_dim as f64;
            let mut nodes = Vec::with_capacity(total);
            for flat in 0..total {
                let mut rest = flat;
                let mut x = vec![0.0; n];
                for d in (0..n).rev() {
                    x[d] = (rest % per_dim) as f64 * h;
                    rest /= per_dim;
                }
                nodes.push(GroupPoint::Torus(x));
            }
            Ok(QuadratureGrid {
                group,
                nodes,
                weights: vec![1.0 / total as f64; total],
                band_limit: b as f64,
                layout: Layout::Torus { n, per_dim },
            })
        }
        Group::Su2 => {
            let two_l = (2.0 * band_limit + 1e-9).floor() as usize;
            let n_phi = two_l + 1;
            let n_psi = 2 * two_l + 1;
            let n_theta = two_l / 2 + 1;
            let total = n_phi
                .checked_mul(n_psi)
                .and_then(|v| v.checked_mul(n_theta))
                .filter(|&t| t <= MAX_NODES)
                .ok_or_else(|| Error::Resource(format!("SU2 grid at band limit {band_limit}")))?;
            let rule = GaussLegendre::new(NonZeroUsize::new(n_theta).expect("n_theta >= 1"));
            // Gauss nodes in cos θ on [-1, 1]; weights sum to 2.
            let mut pairs: Vec<(f64, f64)> = rule
                .as_node_weight_pairs()
                .iter()
                .map(|&(c, w)| (c.clamp(-1.0, 1.0).acos(), w / 2.0))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let thetas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let theta_weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let w_ang = 1.0 / (n_phi * n_psi) as f64;
            let mut nodes = Vec::with_capacity(total);
            let mut weights = Vec::with_capacity(total);
            for (theta, wt) in thetas.iter().zip(&theta_weights) {
                for i in 0..n_phi {
                    for j in 0..n_psi {
                        nodes.push(GroupPoint::Su2 {
                            phi: two_pi * i as f64 / n_phi as f64,
                            theta: *theta,
                            psi: 2.0 * two_pi * j as f64 / n_psi as f64,
                        });
                        weights.push(wt * w_ang);
                    }
                }
            }
            Ok(QuadratureGrid {
                group,
                nodes,
                weights,
                band_limit: two_l as f64 / 2.0,
                layout: Layout::Su2 {
                    n_phi,
                    n_psi,
                    thetas,
                    theta_weights,
                },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{rep_matrix, Irrep};

    #[test]
    fn weights_sum_to_one() {
        for (g, b) in [(Group::Torus(1), 4.0), (Group::Torus(2), 3.0), (Group::Su2, 2.5)] {
            let grid = haar_grid(g, b).unwrap();
            let s: f64 = grid.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "{g}: {s}");
        }
    }

    #[test]
    fn circle_grid_kills_low_frequencies() {
        // 8 points: haar_grid at band limit 3.5 floors to 3 -> 7 points; build 8 by hand
        let h = 2.0 * std::f64::consts::PI / 8.0;
        let s: crate::linalg::C64 = (0..8)
            .map(|j| crate::linalg::C64::from_polar(1.0 / 8.0, 3.0 * j as f64 * h))
            .sum();
        assert!(s.norm() < 1e-14);
        let grid = haar_grid(Group::Torus(1), 3.0).unwrap();
        let s: crate::linalg::C64 = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(x, w)| crate::linalg::C64::from_polar(*w, 3.0 * x.coords()[0]))
            .sum();
        assert!(s.norm() < 1e-14);
    }

    #[test]
    fn su2_schur_norm_of_t1_00() {
        let grid = haar_grid(Group::Su2, 1.0).unwrap();
        let xi = Irrep::su2(2);
        let v = grid.integrate(|x| rep_matrix(&xi, x)[(1, 1)].norm_sqr());
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        assert!(matches!(haar_grid(Group::Su2, 1000.0), Err(Error::Resource(_))));
        assert!(matches!(haar_grid(Group::Torus(3), 500.0), Err(Error::Resource(_))));
    }
}
