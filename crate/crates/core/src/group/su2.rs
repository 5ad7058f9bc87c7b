//! SU(2) as 2×2 unitary matrices in the `(+1/2, -1/2)` basis.

use crate::linalg::C64;

use super::GroupPoint;

pub type Mat2 = [[C64; 2]; 2];

pub fn to_matrix(x: &GroupPoint) -> Mat2 {
    let GroupPoint::Su2 { phi, theta, psi } = *x else {
        panic!("to_matrix: not an SU(2) point");
    };
    let c = (theta / 2.0).cos();
    let s = (theta / 2.0).sin();
    let sum = (phi + psi) / 2.0;
    let diff = (phi - psi) / 2.0;
    [
        [C64::from_polar(c, -sum), -C64::from_polar(s, -diff)],
        [C64::from_polar(s, diff), C64::from_polar(c, sum)],
    ]
}

/// Euler angles of a unitary `[[a, b], [-b̄, ā]]`, reduced to the fundamental domain.
pub fn from_matrix(u: &Mat2) -> GroupPoint {
    let a = u[0][0];
    let b = u[0][1];
    let ca = a.norm();
    let sb = b.norm();
    let theta = 2.0 * sb.atan2(ca);
    let tiny = 1e-15;
    let (sum, diff) = if ca > tiny && sb > tiny {
        (-2.0 * a.arg(), -2.0 * (-b).arg())
    } else if ca > tiny {
        let s = -2.0 * a.arg();
        (s, s)
    } else {
        let d = -2.0 * (-b).arg();
        (d, d)
    };
    let phi = (sum + diff) / 2.0;
    let psi = (sum - diff) / 2.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let k = (phi / two_pi).floor();
    GroupPoint::Su2 {
        phi: phi - k * two_pi,
        theta: theta.clamp(0.0, std::f64::consts::PI),
        psi: (psi - k * two_pi).rem_euclid(2.0 * two_pi),
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn adjoint(a: &Mat2) -> Mat2 {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// `exp(Σ u_k Y_k)` with `Y_k = -i σ_k / 2`, so that `[Y_1, Y_2] = Y_3`.
pub fn exp_algebra(u: [f64; 3]) -> Mat2 {
    let a = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let (c, s) = ((a / 2.0).cos(), (a / 2.0).sin());
    let (n1, n2, n3) = if a > 0.0 {
        (u[0] / a, u[1] / a, u[2] / a)
    } else {
        (0.0, 0.0, 0.0)
    };
    let mi = C64::new(0.0, -s);
    [
        [C64::new(c, 0.0) + mi * n3, mi * C64::new(n1, -n2)],
        [mi * C64::new(n1, n2), C64::new(c, 0.0) - mi * n3],
    ]
}

/// Principal exponential coordinates, rotation angle in `[0, 2π]`.
pub fn log_algebra(u: &Mat2) -> [f64; 3] {
    let c = ((u[0][0].re + u[1][1].re) / 2.0).clamp(-1.0, 1.0);
    let half = c.acos();
    let s = half.sin();
    if s < 1e-14 {
        return if c > 0.0 {
            [0.0, 0.0, 0.0]
        } else {
            [2.0 * std::f64::consts::PI, 0.0, 0.0]
        };
    }
    // n·σ = i (U - c I) / s
    let i = C64::new(0.0, 1.0);
    let n00 = i * (u[0][0] - c) / s;
    let n10 = i * u[1][0] / s;
    let a = 2.0 * half;
    [a * n10.re, a * n10.im, a * n00.re]
}
