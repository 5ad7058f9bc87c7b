//! Matrix realizations of small compact Lie algebras and the bracket-generation
//! data (step and Hausdorff dimension) of a Hörmander system.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{c, re, CMat};

#[derive(Debug, Clone)]
pub struct LieAlgebra {
    pub name: String,
    pub basis: Vec<CMat>,
}

impl LieAlgebra {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn element(&self, coords: &[f64]) -> CMat {
        assert_eq!(coords.len(), self.dim());
        let n = self.basis[0].nrows();
        let mut out = CMat::zeros(n, n);
        for (b, &v) in self.basis.iter().zip(coords) {
            out += b * re(v);
        }
        out
    }
}

/// `Y_k = -i σ_k / 2`, so that `[Y_1, Y_2] = Y_3`.
pub fn su2() -> LieAlgebra {
    let z = re(0.0);
    let h = c(0.0, -0.5);
    let basis = vec![
        CMat::from_row_slice(2, 2, &[z, h, h, z]),
        CMat::from_row_slice(2, 2, &[z, re(-0.5), re(0.5), z]),
        CMat::from_row_slice(2, 2, &[h, z, z, -h]),
    ];
    LieAlgebra {
        name: "su(2)".into(),
        basis,
    }
}

/// `B^{ij} = E_ij − E_ji` for `i < j`, ordered `12, 13, 14, 23, 24, 34`.
pub fn so4() -> LieAlgebra {
    let mut basis = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            let mut m = CMat::zeros(4, 4);
            m[(i, j)] = re(1.0);
            m[(j, i)] = re(-1.0);
            basis.push(m);
        }
    }
    LieAlgebra {
        name: "so(4)".into(),
        basis,
    }
}

/// Index of `B^{ij}` (1-based `i < j`) in [`so4`].
pub fn so4_index(i: usize, j: usize) -> usize {
    let pairs = [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)];
    pairs.iter().position(|&p| p == (i, j)).expect("1 <= i < j <= 4")
}

/// `X_k = -i λ_k / 2` with the Gell-Mann matrices `λ_1..λ_8`.
pub fn su3() -> LieAlgebra {
    let z = re(0.0);
    let o = re(1.0);
    let i = c(0.0, 1.0);
    let s = re(1.0 / 3f64.sqrt());
    let gm: [[crate::linalg::C64; 9]; 8] = [
        [z, o, z, o, z, z, z, z, z],
        [z, -i, z, i, z, z, z, z, z],
        [o, z, z, z, -o, z, z, z, z],
        [z, z, o, z, z, z, o, z, z],
        [z, z, -i, z, z, z, i, z, z],
        [z, z, z, z, z, o, z, o, z],
        [z, z, z, z, z, -i, z, i, z],
        [s, z, z, z, s, z, z, z, s * -2.0],
    ];
    let basis = gm
        .iter()
        .map(|e| CMat::from_row_slice(3, 3, e) * c(0.0, -0.5))
        .collect();
    LieAlgebra {
        name: "su(3)".into(),
        basis,
    }
}

/// Rank of a set of matrices viewed as real vectors, singular values above
/// `tol` times the largest counting.
fn real_rank(mats: &[CMat], tol: f64) -> usize {
    if mats.is_empty() {
        return 0;
    }
    let n = mats[0].len();
    let a = DMatrix::<f64>::from_fn(2 * n, mats.len(), |r, col| {
        let z = mats[col].as_slice()[r % n];
        if r < n {
            z.re
        } else {
            z.im
        }
    });
    let sv = a.svd(false, false).singular_values;
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&v| v > tol * top).count()
}

/// Step and Hausdorff dimension of a Hörmander system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HormanderData {
    pub step: usize,
    pub hausdorff_q: usize,
    /// Dimensions of the successive bracket spans.
    pub ranks: [usize; 8],
}

/// `V_1 = span{X_i}`, `V_{k+1} = V_k + [V_1, V_k]`; `Q = Σ_k k (dim V_k − dim V_{k−1})`.
pub fn hormander_data(alg: &LieAlgebra, fields: &[Vec<f64>]) -> Result<HormanderData> {
    const TOL: f64 = 1e-9;
    if fields.is_empty() || fields.iter().any(|f| f.iter().all(|&v| v == 0.0)) {
        return Err(Error::Invalid("fields must be nonzero".into()));
    }
    let gens: Vec<CMat> = fields.iter().map(|f| alg.element(f)).collect();
    let n = alg.dim();
    let mut level: Vec<CMat> = gens.clone();
    let mut span: Vec<CMat> = gens.clone();
    let mut ranks = [0usize; 8];
    let mut prev = 0;
    let mut q = 0;
    for k in 1..=n.max(1) {
        let r = real_rank(&span, TOL);
        if k <= ranks.len() {
            ranks[k - 1] = r;
        }
        q += k * (r - prev);
        prev = r;
        if r == n {
            return Ok(HormanderData {
                step: k,
                hausdorff_q: q,
                ranks,
            });
        }
        let mut next = Vec::new();
        for g in &gens {
            for v in &level {
                next.push(g * v - v * g);
            }
        }
        span.extend(next.iter().cloned());
        level = next;
    }
    Err(Error::NotHormander(format!(
        "brackets of {} fields span only {prev} of {n} dimensions in {}",
        fields.len(),
        alg.name
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn su2_brackets() {
        let a = su2();
        let (y1, y2, y3) = (&a.basis[0], &a.basis[1], &a.basis[2]);
        assert!(max_abs_diff(&(y1 * y2 - y2 * y1), y3) < 1e-15);
    }

    #[test]
    fn su2_planar_system() {
        let d = hormander_data(&su2(), &[unit(3, 0), unit(3, 1)]).unwrap();
        assert_eq!((d.step, d.hausdorff_q), (2, 4));
        let full = hormander_data(&su2(), &[unit(3, 0), unit(3, 1), unit(3, 2)]).unwrap();
        assert_eq!((full.step, full.hausdorff_q), (1, 3));
    }

    #[test]
    fn so4_four_fields() {
        let fields: Vec<Vec<f64>> = [(1, 2), (1, 4), (2, 4), (3, 4)]
            .iter()
            .map(|&(i, j)| unit(6, so4_index(i, j)))
            .collect();
        let d = hormander_data(&so4(), &fields).unwrap();
        assert_eq!((d.step, d.hausdorff_q), (2, 8));
    }

    #[test]
    fn su3_six_fields() {
        let fields: Vec<Vec<f64>> = (0..6).map(|i| unit(8, i)).collect();
        let d = hormander_data(&su3(), &fields).unwrap();
        assert_eq!((d.step, d.hausdorff_q), (2, 10));
    }

    #[test]
    fn single_field_is_not_hormander() {
        assert!(matches!(
            hormander_data(&su2(), &[unit(3, 2)]),
            Err(Error::NotHormander(_))
        ));
    }
}
