//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn diag_real(values: &[f64]) -> CMat {
    let d = values.len();
    let mut m = CMat::zeros(d, d);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = re(*v);
    }
    m
}

pub fn diag_complex(values: &[C64]) -> CMat {
    let d = values.len();
    let mut m = CMat::zeros(d, d);
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = *v;
    }
    m
}

/// Largest absolute off-diagonal entry.
pub fn off_diagonal_max(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

pub fn is_diagonal(m: &CMat, tol: f64) -> bool {
    off_diagonal_max(m) <= tol
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows() == m.ncols() && is_diagonal(m, 0.0) {
        return (0..m.nrows()).map(|i| m[(i, i)].norm()).fold(0.0, f64::max);
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Smallest singular value of a square matrix.
pub fn min_singular_value(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    if is_diagonal(m, 0.0) {
        return (0..m.nrows())
            .map(|i| m[(i, i)].norm())
            .fold(f64::INFINITY, f64::min);
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn hs_norm_sqr(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * re(0.5)
}

pub fn hermitian_defect(m: &CMat) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn normality_defect(m: &CMat) -> f64 {
    let a = m.adjoint();
    (m * &a - &a * m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted ascending.
/// Columns of the returned unitary are the matching eigenvectors.
pub fn hermitian_eig(m: &CMat) -> (Vec<f64>, CMat) {
    let d = m.nrows();
    if d == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    if is_diagonal(m, 0.0) {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| m[(a, a)].re.total_cmp(&m[(b, b)].re));
        let values = order.iter().map(|&i| m[(i, i)].re).collect();
        let mut u = CMat::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            u[(i, col)] = re(1.0);
        }
        return (values, u);
    }
    let h = hermitian_part(m);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut u = CMat::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        u.set_column(col, &eig.eigenvectors.column(i));
    }
    (values, u)
}

/// `f(H)` for Hermitian `H`.
pub fn hermitian_function<F: Fn(f64) -> C64>(m: &CMat, f: F) -> CMat {
    let (values, u) = hermitian_eig(m);
    let fd: Vec<C64> = values.iter().map(|&v| f(v)).collect();
    &u * diag_complex(&fd) * u.adjoint()
}

/// `exp(iH)` for Hermitian `H`.
pub fn unitary_exp(m: &CMat) -> CMat {
    hermitian_function(m, |v| C64::from_polar(1.0, v))
}

/// Inverse with a relative condition guard.
pub fn try_inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(m.clone());
    }
    if is_diagonal(m, 0.0) {
        let mut inv = CMat::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            let v = m[(i, i)];
            if v.norm() == 0.0 {
                return None;
            }
            inv[(i, i)] = v.inv();
        }
        return Some(inv);
    }
    let smin = min_singular_value(m);
    let smax = op_norm(m);
    if smin <= 1e-14 * smax.max(1e-300) {
        return None;
    }
    m.clone().try_inverse()
}

/// Hermitian logarithm `φ` with `exp(iφ) = U` for a unitary `U`.
pub fn unitary_log(u: &CMat) -> CMat {
    let d = u.nrows();
    let schur = nalgebra::Schur::new(u.clone());
    let (q, t) = schur.unpack();
    let mut phases = CMat::zeros(d, d);
    for i in 0..d {
        phases[(i, i)] = re(t[(i, i)].arg());
    }
    let out = &q * phases * q.adjoint();
    hermitian_part(&out)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_sorted_and_reconstructs() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                re(2.0),
                c(0.0, 1.0),
                re(0.0),
                c(0.0, -1.0),
                re(2.0),
                re(0.5),
                re(0.0),
                re(0.5),
                re(-1.0),
            ],
        );
        let (vals, u) = hermitian_eig(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let back = &u * diag_real(&vals) * u.adjoint();
        assert!(max_abs_diff(&back, &m) < 1e-12);
    }

    #[test]
    fn log_of_unitary_round_trips() {
        let h = CMat::from_row_slice(2, 2, &[re(0.3), c(0.1, 0.2), c(0.1, -0.2), re(-0.7)]);
        let u = unitary_exp(&h);
        let back = unitary_exp(&unitary_log(&u));
        assert!(max_abs_diff(&back, &u) < 1e-12);
    }

    #[test]
    fn op_norm_of_diagonal() {
        assert_eq!(op_norm(&diag_real(&[1.0, -3.0, 2.0])), 3.0);
    }
}
