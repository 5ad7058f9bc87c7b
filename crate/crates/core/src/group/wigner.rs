//! Wigner small-d functions and angular-momentum matrices.
//!
//! Spins are passed as twice their value (`two_l = 2l`) so that half-integer
//! labels stay exact. Matrix rows and columns are ordered by ascending
//! magnetic number `m = -l, -l+1, ..., l`, and
//! `d^l_{m'm}(θ) = <l m'| exp(-iθ J_y) |l m>`.

use nalgebra::DMatrix;

use crate::linalg::{c, re, CMat};

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9); relative error ~1e-15.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, coef) in COEF.iter().enumerate().skip(1) {
        a += coef / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn ln_factorial(n: f64) -> f64 {
    if n < 2.0 {
        0.0
    } else {
        ln_gamma(n + 1.0)
    }
}

/// `d^{j0}_{m'm}` at the lowest admissible spin `j0 = max(|m'|, |m|)`.
fn seed(two_mp: i64, two_m: i64, theta: f64) -> f64 {
    if two_mp == two_m {
        // d^j_{±j,±j} = cos^{2j}(θ/2)
        return (theta / 2.0).cos().powi(two_m.abs() as i32);
    }
    let two_j = two_mp.abs().max(two_m.abs());
    let j = two_j as f64 / 2.0;
    let mp = two_mp as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    let ch = (theta / 2.0).cos();
    let sh = (theta / 2.0).sin();
    // (sign, binomial argument k for C(2j, j+k), cos power, sin power)
    let (negative, k, pc, ps) = if two_mp == two_j {
        ((two_mp - two_m) / 2 % 2 != 0, m, j + m, j - m)
    } else if two_mp == -two_j {
        (false, m, j - m, j + m)
    } else if two_m == two_j {
        (false, mp, j + mp, j - mp)
    } else {
        ((two_mp + two_j) / 2 % 2 != 0, mp, j - mp, j + mp)
    };
    let ln_binom = ln_factorial(2.0 * j) - ln_factorial(j + k) - ln_factorial(j - k);
    let mut ln_mag = 0.5 * ln_binom;
    let mut zero = false;
    for (base, power) in [(ch, pc), (sh, ps)] {
        if power > 0.0 {
            if base == 0.0 {
                zero = true;
            } else {
                ln_mag += power * base.abs().ln();
            }
        }
    }
    if zero {
        return 0.0;
    }
    let mut sign = if negative { -1.0 } else { 1.0 };
    if ch < 0.0 && (pc.round() as i64) % 2 != 0 {
        sign = -sign;
    }
    if sh < 0.0 && (ps.round() as i64) % 2 != 0 {
        sign = -sign;
    }
    sign * ln_mag.exp()
}

/// Three-term recursion in the spin at fixed `(m', m)`.
///
/// Calls `sink(two_l, value)` for `two_l = j0, j0 + 2, ..., <= two_lmax`.
/// Iteration stops early when `sink` returns `false`.
pub fn d_ladder<F: FnMut(i64, f64) -> bool>(
    two_mp: i64,
    two_m: i64,
    theta: f64,
    two_lmax: i64,
    mut sink: F,
) {
    assert!(
        (two_mp - two_m) % 2 == 0,
        "magnetic numbers must share parity"
    );
    let two_j0 = two_mp.abs().max(two_m.abs());
    if two_j0 > two_lmax {
        return;
    }
    let cos_t = theta.cos();
    let mp = two_mp as f64 / 2.0;
    let m = two_m as f64 / 2.0;
    let mut prev = 0.0;
    let mut cur = seed(two_mp, two_m, theta);
    let mut two_j = two_j0;
    loop {
        if !sink(two_j, cur) {
            return;
        }
        if two_j + 2 > two_lmax {
            return;
        }
        let j = two_j as f64 / 2.0;
        let j1 = j + 1.0;
        let a = j1 * (2.0 * j + 1.0) / ((j1 * j1 - mp * mp) * (j1 * j1 - m * m)).sqrt();
        let mix = if mp * m == 0.0 { 0.0 } else { mp * m / (j * j1) };
        let back = if two_j == two_j0 || j == 0.0 {
            0.0
        } else {
            ((j * j - mp * mp) * (j * j - m * m)).sqrt() / (j * (2.0 * j + 1.0))
        };
        let next = a * ((cos_t - mix) * cur - back * prev);
        prev = cur;
        cur = next;
        two_j += 2;
    }
}

/// All small-d matrices `d^l(θ)` for `2l = 0..=two_lmax`, indexed by `two_l`.
pub fn d_matrices(two_lmax: usize, theta: f64) -> Vec<DMatrix<f64>> {
    let lmax = two_lmax as i64;
    let mut out: Vec<DMatrix<f64>> = (0..=two_lmax).map(|t| DMatrix::zeros(t + 1, t + 1)).collect();
    for two_mp in -lmax..=lmax {
        for two_m in -lmax..=lmax {
            if (two_mp - two_m) % 2 != 0 {
                continue;
            }
            d_ladder(two_mp, two_m, theta, lmax, |two_l, v| {
                let row = ((two_mp + two_l) / 2) as usize;
                let col = ((two_m + two_l) / 2) as usize;
                out[two_l as usize][(row, col)] = v;
                true
            });
        }
    }
    out
}

/// Single small-d matrix at spin `two_l / 2`.
pub fn d_matrix(two_l: usize, theta: f64) -> DMatrix<f64> {
    let l = two_l as i64;
    let mut out = DMatrix::zeros(two_l + 1, two_l + 1);
    for two_mp in (-l..=l).step_by(2) {
        for two_m in (-l..=l).step_by(2) {
            d_ladder(two_mp, two_m, theta, l, |two_j, v| {
                if two_j == l {
                    out[(((two_mp + l) / 2) as usize, ((two_m + l) / 2) as usize)] = v;
                }
                true
            });
        }
    }
    out
}

/// Angular-momentum matrices `(J_x, J_y, J_z)` at spin `two_l / 2`.
pub fn angular_momentum(two_l: usize) -> (CMat, CMat, CMat) {
    let d = two_l + 1;
    let l = two_l as f64 / 2.0;
    let mut jz = CMat::zeros(d, d);
    let mut jp = CMat::zeros(d, d);
    for i in 0..d {
        let m = i as f64 - l;
        jz[(i, i)] = re(m);
        if i + 1 < d {
            jp[(i + 1, i)] = re((l * (l + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.transpose();
    let jx = (&jp + &jm) * re(0.5);
    let jy = (&jp - &jm) * c(0.0, -0.5);
    (jx, jy, jz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_function;
    use num_complex::Complex64;

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut f = 1.0f64;
        for n in 1..20 {
            f *= n as f64;
            assert!((ln_gamma(n as f64 + 1.0) - f.ln()).abs() < 1e-12);
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn recursion_matches_matrix_exponential() {
        for two_l in 0..=12 {
            let (_, jy, _) = angular_momentum(two_l);
            for &theta in &[0.0, 0.3, 1.1, 2.0, 3.0, std::f64::consts::PI] {
                let exact = hermitian_function(&jy, |v| Complex64::from_polar(1.0, -theta * v));
                let d = d_matrix(two_l, theta);
                for i in 0..=two_l {
                    for j in 0..=two_l {
                        let e = exact[(i, j)];
                        assert!(e.im.abs() < 1e-12);
                        assert!(
                            (e.re - d[(i, j)]).abs() < 1e-11,
                            "two_l={two_l} theta={theta} ({i},{j}): {} vs {}",
                            e.re,
                            d[(i, j)]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn all_matrices_agree_with_single() {
        let all = d_matrices(9, 0.77);
        for (two_l, m) in all.iter().enumerate() {
            let single = d_matrix(two_l, 0.77);
            assert!((m - single).abs().max() < 1e-13);
        }
    }

    #[test]
    fn large_spin_stays_orthogonal() {
        let d = d_matrix(400, 0.9);
        let err = (&d * d.transpose() - DMatrix::<f64>::identity(401, 401)).abs().max();
        assert!(err < 1e-10, "orthogonality defect {err}");
    }
}
