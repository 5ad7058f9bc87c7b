//! Representation theory of the torus `T^n` and of `SU(2)`.

pub mod grid;
pub mod su2;
pub mod wigner;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub use grid::{haar_grid, QuadratureGrid};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    /// The `n`-torus.
    Torus(usize),
    Su2,
}

impl Group {
    pub fn parse(id: &str) -> Result<Group> {
        let id = id.trim();
        let upper = id.to_ascii_uppercase();
        match upper.as_str() {
            "SU2" | "SU(2)" => Ok(Group::Su2),
            _ => {
                let n = upper
                    .strip_prefix("T^")
                    .or_else(|| upper.strip_prefix('T'))
                    .and_then(|s| s.parse::<usize>().ok());
                match n {
                    Some(n) if (1..=3).contains(&n) => Ok(Group::Torus(n)),
                    _ => Err(Error::UnsupportedGroup(id.to_string())),
                }
            }
        }
    }

    pub fn id(&self) -> String {
        match self {
            Group::Torus(n) => format!("T{n}"),
            Group::Su2 => "SU2".to_string(),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Group::Torus(n) => *n,
            Group::Su2 => 3,
        }
    }

    /// Casimir eigenvalue at the dual index `c` (`|k| = c` on the torus, spin `c` on SU(2)).
    pub fn casimir_of_index(&self, c: f64) -> f64 {
        match self {
            Group::Torus(_) => c * c,
            Group::Su2 => c * (c + 1.0),
        }
    }

    pub fn identity(&self) -> GroupPoint {
        match self {
            Group::Torus(n) => GroupPoint::Torus(vec![0.0; *n]),
            Group::Su2 => GroupPoint::Su2 {
                phi: 0.0,
                theta: 0.0,
                psi: 0.0,
            },
        }
    }

    /// Group product `x y`.
    pub fn multiply(&self, x: &GroupPoint, y: &GroupPoint) -> GroupPoint {
        match (x, y) {
            (GroupPoint::Torus(a), GroupPoint::Torus(b)) => {
                GroupPoint::Torus(a.iter().zip(b).map(|(p, q)| p + q).collect()).reduced()
            }
            (GroupPoint::Su2 { .. }, GroupPoint::Su2 { .. }) => {
                let m = su2::mat_mul(&su2::to_matrix(x), &su2::to_matrix(y));
                su2::from_matrix(&m)
            }
            _ => panic!("multiply: mismatched group points"),
        }
    }

    pub fn inverse(&self, x: &GroupPoint) -> GroupPoint {
        match x {
            GroupPoint::Torus(a) => GroupPoint::Torus(a.iter().map(|p| -p).collect()).reduced(),
            GroupPoint::Su2 { .. } => su2::from_matrix(&su2::adjoint(&su2::to_matrix(x))),
        }
    }

    /// `exp(Σ u_k Y_k)` for coordinates `u` in the standard generator basis.
    pub fn exp(&self, u: &[f64]) -> GroupPoint {
        match self {
            Group::Torus(n) => {
                assert_eq!(u.len(), *n);
                GroupPoint::Torus(u.to_vec()).reduced()
            }
            Group::Su2 => su2::from_matrix(&su2::exp_algebra([u[0], u[1], u[2]])),
        }
    }

    /// Exponential coordinates of `x` (principal branch).
    pub fn log(&self, x: &GroupPoint) -> Vec<f64> {
        match x {
            GroupPoint::Torus(a) => a
                .iter()
                .map(|p| {
                    let r = p.rem_euclid(TWO_PI);
                    if r > std::f64::consts::PI {
                        r - TWO_PI
                    } else {
                        r
                    }
                })
                .collect(),
            GroupPoint::Su2 { .. } => su2::log_algebra(&su2::to_matrix(x)).to_vec(),
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Label of an irreducible unitary representation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    /// Frequency vector `k ∈ Z^n`.
    Torus(Vec<i32>),
    /// Twice the spin, `2l`.
    Su2(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Irrep {
    pub label: Label,
}

impl Irrep {
    pub fn torus(k: Vec<i32>) -> Self {
        Irrep {
            label: Label::Torus(k),
        }
    }

    pub fn su2(two_l: u32) -> Self {
        Irrep {
            label: Label::Su2(two_l),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.label {
            Label::Torus(_) => 1,
            Label::Su2(t) => *t as usize + 1,
        }
    }

    /// Eigenvalue of the bi-invariant Laplacian.
    pub fn casimir(&self) -> f64 {
        match &self.label {
            Label::Torus(k) => k.iter().map(|&v| (v as f64) * (v as f64)).sum(),
            Label::Su2(t) => {
                let l = *t as f64 / 2.0;
                l * (l + 1.0)
            }
        }
    }

    /// `⟨ξ⟩ = (1 + λ_ξ)^{1/2}`.
    pub fn bracket(&self) -> f64 {
        (1.0 + self.casimir()).sqrt()
    }

    /// Spin `l` on SU(2); Euclidean norm `|k|` on the torus.
    pub fn index(&self) -> f64 {
        match &self.label {
            Label::Torus(_) => self.casimir().sqrt(),
            Label::Su2(t) => *t as f64 / 2.0,
        }
    }

    pub fn two_l(&self) -> Option<u32> {
        match &self.label {
            Label::Su2(t) => Some(*t),
            _ => None,
        }
    }

    pub fn torus_k(&self) -> Option<&[i32]> {
        match &self.label {
            Label::Torus(k) => Some(k),
            _ => None,
        }
    }
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.label {
            Label::Torus(k) => write!(f, "k={k:?}"),
            Label::Su2(t) if t % 2 == 0 => write!(f, "l={}", t / 2),
            Label::Su2(t) => write!(f, "l={t}/2"),
        }
    }
}

/// A point of the group in its standard coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GroupPoint {
    /// Angles in `[0, 2π)^n`.
    Torus(Vec<f64>),
    /// Euler angles (z-y-z) with `φ ∈ [0,2π)`, `θ ∈ [0,π]`, `ψ ∈ [0,4π)`.
    Su2 { phi: f64, theta: f64, psi: f64 },
}

impl GroupPoint {
    pub fn su2(phi: f64, theta: f64, psi: f64) -> Self {
        GroupPoint::Su2 { phi, theta, psi }.reduced()
    }

    /// Reduce coordinates to the fundamental domain.
    pub fn reduced(self) -> Self {
        match self {
            GroupPoint::Torus(x) => GroupPoint::Torus(x.iter().map(|v| v.rem_euclid(TWO_PI)).collect()),
            GroupPoint::Su2 { phi, theta, psi } => {
                if (0.0..=std::f64::consts::PI).contains(&theta) {
                    let k = (phi / TWO_PI).floor();
                    GroupPoint::Su2 {
                        phi: phi - k * TWO_PI,
                        theta,
                        psi: (psi - k * TWO_PI).rem_euclid(FOUR_PI),
                    }
                } else {
                    let p = GroupPoint::Su2 { phi, theta, psi };
                    su2::from_matrix(&su2::to_matrix(&p))
                }
            }
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        match self {
            GroupPoint::Torus(x) => x.clone(),
            GroupPoint::Su2 { phi, theta, psi } => vec![*phi, *theta, *psi],
        }
    }
}

/// Truncated unitary dual: every irrep with casimir at most that of the cutoff index.
#[derive(Debug, Clone)]
pub struct Dual {
    pub group: Group,
    pub cutoff: f64,
    pub irreps: Vec<Irrep>,
    index: HashMap<Label, usize>,
}

impl Dual {
    pub fn new(group: Group, cutoff: f64) -> Result<Arc<Dual>> {
        let irreps = enumerate_dual(group, cutoff)?;
        let index = irreps
            .iter()
            .enumerate()
            .map(|(i, x)| (x.label.clone(), i))
            .collect();
        Ok(Arc::new(Dual {
            group,
            cutoff,
            irreps,
            index,
        }))
    }

    pub fn len(&self) -> usize {
        self.irreps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.irreps.is_empty()
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.index.contains_key(label)
    }

    /// Sum of `d_ξ²`, the dimension of the band-limited function space.
    pub fn total_dim(&self) -> usize {
        self.irreps.iter().map(|x| x.dim() * x.dim()).sum()
    }
}

/// All irreps with index `<= cutoff`, sorted by casimir and then by label.
pub fn enumerate_dual(group: Group, cutoff: f64) -> Result<Vec<Irrep>> {
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::Invalid(format!("cutoff must be >= 0, got {cutoff}")));
    }
    let limit = group.casimir_of_index(cutoff) + 1e-9;
    let mut out = match group {
        Group::Torus(n) => {
            let r = cutoff.floor() as i32;
            let mut acc = Vec::new();
            let mut k = vec![-r; n];
            loop {
                let cas: f64 = k.iter().map(|&v| (v as f64) * (v as f64)).sum();
                if cas <= limit {
                    acc.push(Irrep::torus(k.clone()));
                }
                // odometer increment
                let mut i = 0;
                loop {
                    if i == n {
                        break;
                    }
                    k[i] += 1;
                    if k[i] <= r {
                        break;
                    }
                    k[i] = -r;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
            acc
        }
        Group::Su2 => {
            let max_two = (2.0 * cutoff + 1e-9).floor() as u32;
            (0..=max_two).map(Irrep::su2).collect()
        }
    };
    out.sort_by(|a, b| {
        a.casimir()
            .total_cmp(&b.casimir())
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(out)
}

/// Unitary matrix `ξ(x)`.
pub fn rep_matrix(xi: &Irrep, x: &GroupPoint) -> CMat {
    match (&xi.label, x) {
        (Label::Torus(k), GroupPoint::Torus(a)) => {
            let phase: f64 = k.iter().zip(a).map(|(&ki, &ai)| ki as f64 * ai).sum();
            CMat::from_element(1, 1, C64::from_polar(1.0, phase))
        }
        (Label::Su2(two_l), GroupPoint::Su2 { phi, theta, psi }) => {
            let d = wigner::d_matrix(*two_l as usize, *theta);
            su2_from_small_d(*two_l as usize, &d, *phi, *psi)
        }
        _ => panic!("rep_matrix: irrep {xi} does not match point {x:?}"),
    }
}

/// `ξ(x)` for every irrep of a dual, sharing one small-d recursion on SU(2).
pub fn rep_matrices_at(dual: &Dual, x: &GroupPoint) -> Vec<CMat> {
    match x {
        GroupPoint::Torus(_) => dual.irreps.iter().map(|xi| rep_matrix(xi, x)).collect(),
        GroupPoint::Su2 { phi, theta, psi } => {
            let two_lmax = dual.irreps.iter().filter_map(|xi| xi.two_l()).max().unwrap_or(0) as usize;
            let dm = wigner::d_matrices(two_lmax, *theta);
            dual.irreps
                .iter()
                .map(|xi| {
                    let t = xi.two_l().expect("su2 irrep") as usize;
                    su2_from_small_d(t, &dm[t], *phi, *psi)
                })
                .collect()
        }
    }
}

/// `t^l_{m'm}(φ,θ,ψ) = e^{-im'φ} d^l_{m'm}(θ) e^{-imψ}`.
pub fn su2_from_small_d(two_l: usize, d: &nalgebra::DMatrix<f64>, phi: f64, psi: f64) -> CMat {
    let n = two_l + 1;
    let l = two_l as f64 / 2.0;
    let left: Vec<C64> = (0..n).map(|i| C64::from_polar(1.0, -(i as f64 - l) * phi)).collect();
    let right: Vec<C64> = (0..n).map(|i| C64::from_polar(1.0, -(i as f64 - l) * psi)).collect();
    CMat::from_fn(n, n, |i, j| left[i] * d[(i, j)] * right[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, op_norm};
    use rand::{Rng, SeedableRng};

    #[test]
    fn torus_dual_cutoff_two() {
        let d = enumerate_dual(Group::Torus(1), 2.0).unwrap();
        let ks: Vec<i32> = d.iter().map(|x| x.torus_k().unwrap()[0]).collect();
        assert_eq!(ks, vec![0, -1, 1, -2, 2]);
        assert!(d.iter().all(|x| x.dim() == 1));
    }

    #[test]
    fn su2_dual_cutoff_one() {
        let d = enumerate_dual(Group::Su2, 1.0).unwrap();
        let dims: Vec<usize> = d.iter().map(|x| x.dim()).collect();
        assert_eq!(dims, vec![1, 2, 3]);
        for big in [3.0, 7.5, 20.0] {
            assert_eq!(enumerate_dual(Group::Su2, big).unwrap().len(), (2.0 * big) as usize + 1);
        }
    }

    #[test]
    fn casimir_is_nondecreasing() {
        for g in [Group::Torus(2), Group::Su2, Group::Torus(3)] {
            let d = enumerate_dual(g, 4.0).unwrap();
            assert!(d.windows(2).all(|w| w[0].casimir() <= w[1].casimir()));
        }
    }

    #[test]
    fn unsupported_group_rejected() {
        assert!(Group::parse("SU3").is_err());
        assert_eq!(Group::parse("T^2").unwrap(), Group::Torus(2));
    }

    #[test]
    fn circle_character_at_pi() {
        let v = rep_matrix(&Irrep::torus(vec![1]), &GroupPoint::Torus(vec![std::f64::consts::PI]));
        assert!((v[(0, 0)] - C64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn su2_identity_value() {
        for t in 0..8 {
            let v = rep_matrix(&Irrep::su2(t), &Group::Su2.identity());
            assert!(crate::linalg::max_abs_diff(&v, &identity(t as usize + 1)) < 1e-14);
        }
    }

    #[test]
    fn su2_unitary_and_homomorphic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let g = Group::Su2;
        for _ in 0..30 {
            let x = GroupPoint::su2(rng.gen::<f64>() * 6.28, rng.gen::<f64>() * 3.14, rng.gen::<f64>() * 12.5);
            let y = GroupPoint::su2(rng.gen::<f64>() * 6.28, rng.gen::<f64>() * 3.14, rng.gen::<f64>() * 12.5);
            let xy = g.multiply(&x, &y);
            for t in [1u32, 2, 3, 6] {
                let xi = Irrep::su2(t);
                let a = rep_matrix(&xi, &x);
                let u = &a * a.adjoint() - identity(t as usize + 1);
                assert!(op_norm(&u) < 1e-12);
                let prod = rep_matrix(&xi, &x) * rep_matrix(&xi, &y);
                assert!(crate::linalg::max_abs_diff(&prod, &rep_matrix(&xi, &xy)) < 1e-10);
            }
        }
    }

    #[test]
    fn spin_half_matches_generator_exponentials() {
        // t^{1/2}(φ,θ,ψ) = exp(-iφJz) exp(-iθJy) exp(-iψJz) at 100 random angles
        let (_, jy, jz) = wigner::angular_momentum(1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (phi, theta, psi) = (rng.gen::<f64>() * 6.28, rng.gen::<f64>() * 3.14, rng.gen::<f64>() * 12.5);
            let e = |m: &CMat, t: f64| crate::linalg::hermitian_function(m, |v| C64::from_polar(1.0, -t * v));
            let oracle = e(&jz, phi) * e(&jy, theta) * e(&jz, psi);
            let v = rep_matrix(&Irrep::su2(1), &GroupPoint::Su2 { phi, theta, psi });
            assert!(crate::linalg::max_abs_diff(&v, &oracle) < 1e-13);
        }
    }

    #[test]
    fn exp_log_round_trip() {
        let g = Group::Su2;
        let u = [0.3, -0.2, 0.5];
        let x = g.exp(&u);
        let back = g.log(&x);
        for k in 0..3 {
            assert!((back[k] - u[k]).abs() < 1e-12);
        }
    }
}
