//! Quantization, symbol extraction, difference operators and the asymptotic
//! symbol calculus (composition, adjoint, parametrix).
//!
//! An operator acts by `Af(x) = Σ d_ξ Tr[ξ(x) σ(x,ξ) f̂(ξ)]` and its symbol
//! is recovered as `σ(x,ξ) = ξ(x)* (Aξ)(x)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::field::{MatrixField, SpatialSymbol};
use crate::fourier::{fourier_transform, inverse_transform};
use crate::group::{rep_matrices_at, rep_matrix, wigner, Dual, Group, GroupPoint, Irrep, Label, QuadratureGrid};
use crate::linalg::{self, c, re, CMat, C64};
use crate::par;

/// Largest dense operator matrix [`operator_matrix`] will build.
pub const MAX_MATRIX_DIM: usize = 8000;

// ---------------------------------------------------------------------------
// Lie-algebra symbols

/// `σ_X(ξ) = dξ(X)` for `X = Σ c_k Y_k` with complex coefficients.
pub fn algebra_symbol(dual: &Arc<Dual>, coeffs: &[C64]) -> MatrixField {
    assert_eq!(coeffs.len(), dual.group.dimension(), "wrong number of coordinates");
    match dual.group {
        Group::Torus(_) => MatrixField::scalar_fn(dual, |xi| {
            let k = xi.torus_k().expect("torus irrep");
            let s: C64 = k.iter().zip(coeffs).map(|(&kj, cj)| cj * kj as f64).sum();
            s * linalg::I
        }),
        Group::Su2 => {
            let mut out = MatrixField::from_fn(dual, |xi| {
                let (jx, jy, jz) = wigner::angular_momentum(xi.two_l().expect("su2 irrep") as usize);
                (jx * coeffs[0] + jy * coeffs[1] + jz * coeffs[2]) * c(0.0, -1.0)
            });
            out.diagonal = coeffs[0].norm() == 0.0 && coeffs[1].norm() == 0.0;
            out
        }
    }
}

/// Symbol of the left-invariant vector field `X = Σ x_k Y_k`; skew-Hermitian.
pub fn vector_field_symbol(group: Group, x: &[f64], cutoff: f64) -> Result<MatrixField> {
    if x.len() != group.dimension() {
        return Err(Error::Invalid(format!(
            "{} coordinates given for a {}-dimensional algebra",
            x.len(),
            group.dimension()
        )));
    }
    let dual = Dual::new(group, cutoff)?;
    let coeffs: Vec<C64> = x.iter().map(|&v| re(v)).collect();
    Ok(algebra_symbol(&dual, &coeffs))
}

/// Symbol of the bi-invariant Laplacian `-(Y_1² + ... + Y_n²)`: `casimir(ξ) I`.
pub fn laplacian_symbol(dual: &Arc<Dual>) -> MatrixField {
    MatrixField::scalar_fn(dual, |xi| re(xi.casimir()))
}

/// `⟨ξ⟩^s I = (1 + casimir)^{s/2} I`.
pub fn bracket_power(dual: &Arc<Dual>, s: f64) -> MatrixField {
    MatrixField::scalar_fn(dual, |xi| re((1.0 + xi.casimir()).powf(s / 2.0)))
}

// ---------------------------------------------------------------------------
// Quantization and symbol extraction

/// `Af(x_i) = Σ_ξ d_ξ Tr[ξ(x_i) σ(x_i,ξ) f̂(ξ)]` at every node of the symbol's grid.
pub fn quantize_apply(sym: &SpatialSymbol, f: &[C64]) -> Result<Vec<C64>> {
    let grid = &sym.grid;
    if sym.dual.cutoff > grid.band_limit + 1e-9 {
        return Err(Error::CutoffMismatch(format!(
            "symbol cutoff {} exceeds grid exactness {}",
            sym.dual.cutoff, grid.band_limit
        )));
    }
    let fh = fourier_transform(grid, f, &sym.dual)?;
    if let Some(field) = sym.invariant_field() {
        return inverse_transform(&field.mul(&fh)?, grid);
    }
    Ok(par::map_range(grid.len(), |n| {
        let reps = rep_matrices_at(&sym.dual, &grid.nodes[n]);
        sym.at(n)
            .iter()
            .zip(&fh.blocks)
            .zip(&reps)
            .map(|(((xi, s), fb), r)| (r * s * fb).trace() * xi.dim() as f64)
            .sum()
    }))
}

/// `ξ(x_node)* (Aξ)(x_node)` for a black-box operator acting on grid samples.
pub fn extract_symbol<A>(op: A, grid: &QuadratureGrid, xi: &Irrep, node: usize) -> Result<CMat>
where
    A: Fn(&[C64]) -> Vec<C64>,
{
    let d = xi.dim();
    let reps: Vec<CMat> = grid.nodes.iter().map(|x| rep_matrix(xi, x)).collect();
    let mut applied = CMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let coeff: Vec<C64> = reps.iter().map(|r| r[(i, j)]).collect();
            let out = op(&coeff);
            if out.len() != grid.len() {
                return Err(Error::Invalid(format!(
                    "operator returned {} samples for a grid of {}",
                    out.len(),
                    grid.len()
                )));
            }
            applied[(i, j)] = out[node];
        }
    }
    Ok(reps[node].adjoint() * applied)
}

/// [`extract_symbol`] for every irrep of `dual`.
pub fn extract_symbol_field<A>(op: A, grid: &QuadratureGrid, dual: &Arc<Dual>, node: usize) -> Result<MatrixField>
where
    A: Fn(&[C64]) -> Vec<C64>,
{
    let mut blocks = Vec::with_capacity(dual.len());
    for xi in &dual.irreps {
        blocks.push(extract_symbol(&op, grid, xi, node)?);
    }
    Ok(MatrixField {
        dual: dual.clone(),
        blocks,
        diagonal: false,
    })
}

// ---------------------------------------------------------------------------
// Difference operators

/// Scalar function `q` defining a difference operator.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `q(x) = Σ c_s e^{i s·x}` on the torus.
    Trig(Vec<(Vec<i32>, C64)>),
    /// `q(x) = Σ_ab c_ab t^{1/2}_ab(x) + c_0` on SU(2), ascending-`m` basis.
    SpinHalf { coeffs: [[C64; 2]; 2], constant: C64 },
}

/// `Δ_q σ = F(q · F⁻¹σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperator {
    pub group: Group,
    pub name: String,
    pub generator: Generator,
    /// Order of vanishing of `q` at the identity.
    pub vanishing_order: usize,
    /// How far (in dual index) multiplication by `q` spreads a representation.
    pub coupling_width: f64,
}

impl DifferenceOperator {
    pub fn new(group: Group, name: &str, generator: Generator) -> Result<Self> {
        let coupling_width = match (&generator, group) {
            (Generator::Trig(terms), Group::Torus(n)) => {
                if terms.iter().any(|(s, _)| s.len() != n) {
                    return Err(Error::Invalid("frequency vector length differs from torus dimension".into()));
                }
                terms
                    .iter()
                    .map(|(s, _)| s.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt())
                    .fold(0.0, f64::max)
            }
            (Generator::SpinHalf { .. }, Group::Su2) => 0.5,
            _ => return Err(Error::Invalid(format!("generator does not match group {group}"))),
        };
        let mut op = DifferenceOperator {
            group,
            name: name.to_string(),
            generator,
            vanishing_order: 0,
            coupling_width,
        };
        op.vanishing_order = if op.eval(&group.identity()).norm() > 1e-12 {
            0
        } else if op.gradient_at_identity().iter().any(|g| g.norm() > 1e-8) {
            1
        } else {
            2
        };
        Ok(op)
    }

    pub fn eval(&self, x: &GroupPoint) -> C64 {
        match (&self.generator, x) {
            (Generator::Trig(terms), GroupPoint::Torus(a)) => terms
                .iter()
                .map(|(s, cs)| {
                    let ph: f64 = s.iter().zip(a).map(|(&si, &ai)| si as f64 * ai).sum();
                    cs * C64::from_polar(1.0, ph)
                })
                .sum(),
            (Generator::SpinHalf { coeffs, constant }, GroupPoint::Su2 { .. }) => {
                let t = rep_matrix(&Irrep::su2(1), x);
                let mut v = *constant;
                for a in 0..2 {
                    for b in 0..2 {
                        v += coeffs[a][b] * t[(a, b)];
                    }
                }
                v
            }
            _ => panic!("difference operator evaluated on a point of another group"),
        }
    }

    /// `d/dt q(exp(t Y_i))` at `t = 0`, by the five-point stencil with step 1e-3.
    pub fn gradient_at_identity(&self) -> Vec<C64> {
        directional_derivatives(self.group, |x| self.eval(x), false)
    }

    /// Output dual after one application.
    pub fn output_dual(&self, dual: &Dual) -> Result<Arc<Dual>> {
        let cut = dual.cutoff - self.coupling_width;
        if cut < -1e-12 {
            return Err(Error::Aliasing(format!(
                "cutoff {} leaves no margin for {} (width {})",
                dual.cutoff, self.name, self.coupling_width
            )));
        }
        Dual::new(dual.group, cut.max(0.0))
    }

    /// Exact action on an invariant field; the result lives on `cutoff − width`.
    pub fn apply(&self, sigma: &MatrixField) -> Result<MatrixField> {
        if sigma.group() != self.group {
            return Err(Error::Invalid("field and difference operator on different groups".into()));
        }
        let out_dual = self.output_dual(&sigma.dual)?;
        match &self.generator {
            Generator::Trig(terms) => {
                let blocks = out_dual
                    .irreps
                    .iter()
                    .map(|xi| {
                        let k = xi.torus_k().expect("torus irrep");
                        let mut v = C64::new(0.0, 0.0);
                        for (s, cs) in terms {
                            let src: Vec<i32> = k.iter().zip(s).map(|(a, b)| a - b).collect();
                            if let Some(m) = sigma.get(&Label::Torus(src)) {
                                v += cs * m[(0, 0)];
                            }
                        }
                        CMat::from_element(1, 1, v)
                    })
                    .collect();
                Ok(MatrixField {
                    dual: out_dual,
                    blocks,
                    diagonal: false,
                })
            }
            Generator::SpinHalf { coeffs, constant } => {
                let blocks = par::map_collect(&out_dual.irreps, |xi| {
                    let tlp = xi.two_l().expect("su2 irrep");
                    let mut out = sigma.get(&xi.label).expect("label inside input dual") * *constant;
                    for tl in [tlp as i64 - 1, tlp as i64 + 1] {
                        if tl < 0 {
                            continue;
                        }
                        if let Some(s) = sigma.get(&Label::Su2(tl as u32)) {
                            out += spin_half_product(coeffs, s, tl as u32, tlp);
                        }
                    }
                    out
                });
                Ok(MatrixField {
                    dual: out_dual,
                    blocks,
                    diagonal: false,
                })
            }
        }
    }

    /// Action on a spatial symbol, node by node in `x`.
    pub fn apply_spatial(&self, sym: &SpatialSymbol) -> Result<SpatialSymbol> {
        sym.map_fields(|f| self.apply(f))
    }

    /// `F(q · F⁻¹σ)` through the grid; used to cross-check [`apply`](Self::apply).
    pub fn apply_via_grid(&self, sigma: &MatrixField, grid: &QuadratureGrid) -> Result<MatrixField> {
        if grid.band_limit + 1e-9 < sigma.cutoff() + self.coupling_width {
            return Err(Error::Aliasing(format!(
                "grid exactness {} below cutoff {} plus width {}",
                grid.band_limit,
                sigma.cutoff(),
                self.coupling_width
            )));
        }
        let f = inverse_transform(sigma, grid)?;
        let qf: Vec<C64> = grid.nodes.iter().zip(&f).map(|(x, v)| self.eval(x) * v).collect();
        fourier_transform(grid, &qf, &self.output_dual(&sigma.dual)?)
    }
}

/// `⟨½ a; l i | J, a+i⟩` with `a = ±½` given as `two_a = ±1`, `J = l ± ½`.
fn cg_half(two_a: i64, two_l: i64, two_i: i64, two_j: i64) -> f64 {
    let l = two_l as f64 / 2.0;
    let m = (two_a + two_i) as f64 / 2.0;
    let den = 2.0 * l + 1.0;
    if (two_a + two_i).abs() > two_j {
        return 0.0;
    }
    let up = two_a > 0;
    if two_j == two_l + 1 {
        if up {
            ((l + m + 0.5) / den).sqrt()
        } else {
            ((l - m + 0.5) / den).sqrt()
        }
    } else {
        // ⟨½ a; l i|J M⟩ = -⟨l i; ½ a|J M⟩ for J = l - ½
        if up {
            ((l - m + 0.5) / den).sqrt()
        } else {
            -((l + m + 0.5) / den).sqrt()
        }
    }
}

/// Contribution of `σ(l)` to `(Σ c_ab t^{1/2}_ab · F⁻¹σ)^(l')`.
fn spin_half_product(coeffs: &[[C64; 2]; 2], s: &CMat, two_l: u32, two_lp: u32) -> CMat {
    let (tl, tlp) = (two_l as i64, two_lp as i64);
    let dp = tlp as usize + 1;
    let mut out = CMat::zeros(dp, dp);
    let ratio = (tl + 1) as f64 / (tlp + 1) as f64;
    for (ai, row) in coeffs.iter().enumerate() {
        for (bi, cab) in row.iter().enumerate() {
            if cab.norm() == 0.0 {
                continue;
            }
            let two_a = 2 * ai as i64 - 1;
            let two_b = 2 * bi as i64 - 1;
            for i in 0..=tl as usize {
                let two_mi = 2 * i as i64 - tl;
                let two_q = two_a + two_mi;
                if two_q.abs() > tlp {
                    continue;
                }
                let q = ((two_q + tlp) / 2) as usize;
                let cq = cg_half(two_a, tl, two_mi, tlp);
                for j in 0..=tl as usize {
                    let two_mj = 2 * j as i64 - tl;
                    let two_p = two_b + two_mj;
                    if two_p.abs() > tlp {
                        continue;
                    }
                    let p = ((two_p + tlp) / 2) as usize;
                    let cp = cg_half(two_b, tl, two_mj, tlp);
                    out[(p, q)] += cab * s[(j, i)] * (ratio * cq * cp);
                }
            }
        }
    }
    out
}

/// First-order collection used by the calculus: on `T^n`, `q_j = e^{-i x_j} − 1`
/// (forward differences); on SU(2), `Im b`, `Re b`, `Im a` of
/// `t^{1/2} = [[ā, −b̄], [b, a]]`.
pub fn admissible_collection(group: Group) -> Vec<DifferenceOperator> {
    match group {
        Group::Torus(n) => (0..n)
            .map(|j| {
                let mut s = vec![0; n];
                s[j] = -1;
                DifferenceOperator::new(
                    group,
                    &format!("forward-{}", j + 1),
                    Generator::Trig(vec![(s, re(1.0)), (vec![0; n], re(-1.0))]),
                )
                .expect("valid torus generator")
            })
            .collect(),
        Group::Su2 => {
            let z = re(0.0);
            let h = c(0.0, -0.5); // 1/(2i)
            let gens = [
                ("im-b", [[z, h], [h, z]]),
                ("re-b", [[z, re(-0.5)], [re(0.5), z]]),
                ("im-a", [[-h, z], [z, h]]),
            ];
            gens.iter()
                .map(|(name, coeffs)| {
                    DifferenceOperator::new(
                        group,
                        name,
                        Generator::SpinHalf {
                            coeffs: *coeffs,
                            constant: z,
                        },
                    )
                    .expect("valid su2 generator")
                })
                .collect()
        }
    }
}

/// Apply `Δ^α = Δ_1^{α_1} ⋯ Δ_n^{α_n}` of a collection.
pub fn apply_multi(collection: &[DifferenceOperator], alpha: &[usize], sigma: &MatrixField) -> Result<MatrixField> {
    let mut out = sigma.clone();
    for (op, &k) in collection.iter().zip(alpha) {
        for _ in 0..k {
            out = op.apply(&out)?;
        }
    }
    Ok(out)
}

pub fn apply_multi_spatial(
    collection: &[DifferenceOperator],
    alpha: &[usize],
    sym: &SpatialSymbol,
) -> Result<SpatialSymbol> {
    sym.map_fields(|f| apply_multi(collection, alpha, f))
}

/// Multi-indices of length `dim` and total order `order`, lexicographic.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(dim: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() + 1 == dim {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(dim, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if dim == 0 {
        return out;
    }
    rec(dim, order, &mut Vec::new(), &mut out);
    out
}

fn factorial(alpha: &[usize]) -> f64 {
    alpha
        .iter()
        .map(|&k| (1..=k).map(|v| v as f64).product::<f64>())
        .product()
}

// ---------------------------------------------------------------------------
// Derivative basis

/// `d/dt g(exp(±t Y_i))` at `t = 0` for each generator, five-point stencil, step 1e-3.
fn directional_derivatives<G: Fn(&GroupPoint) -> C64>(group: Group, g: G, inverse: bool) -> Vec<C64> {
    let h = 1e-3;
    let sign = if inverse { -1.0 } else { 1.0 };
    (0..group.dimension())
        .map(|i| {
            let at = |t: f64| {
                let mut u = vec![0.0; group.dimension()];
                u[i] = sign * t;
                g(&group.exp(&u))
            };
            (at(-2.0 * h) - at(-h) * 8.0 + at(h) * 8.0 - at(2.0 * h)) / (12.0 * h)
        })
        .collect()
}

/// Vector fields `X_{j,D} = Σ_i B_ji Y_i` with `X_{j,D} q_k(·⁻¹)(e) = δ_jk`.
#[derive(Debug, Clone)]
pub struct DerivativeBasis {
    pub group: Group,
    /// Row `j` holds the coordinates of `X_{j,D}` in the generator basis.
    pub coeffs: Vec<Vec<C64>>,
}

impl DerivativeBasis {
    pub fn new(collection: &[DifferenceOperator]) -> Result<Self> {
        let group = collection
            .first()
            .map(|q| q.group)
            .ok_or_else(|| Error::Invalid("empty collection".into()))?;
        let n = group.dimension();
        if collection.len() != n {
            return Err(Error::Invalid(format!(
                "collection of {} functions on a {n}-dimensional group",
                collection.len()
            )));
        }
        // grad[k][i] = Y_i (q_k ∘ inverse)(e)
        let grad: Vec<Vec<C64>> = collection
            .iter()
            .map(|q| directional_derivatives(group, |x| q.eval(x), true))
            .collect();
        let gt = DMatrix::from_fn(n, n, |i, k| grad[k][i]);
        let b = linalg::try_inverse(&gt)
            .ok_or_else(|| Error::Invalid("collection gradients do not span the Lie algebra".into()))?;
        let coeffs = (0..n).map(|j| (0..n).map(|i| b[(j, i)]).collect()).collect();
        Ok(DerivativeBasis { group, coeffs })
    }

    /// `X_{j,D} g(·⁻¹)(e)` for an arbitrary function, by the same stencil.
    pub fn apply_at_identity_inverse<G: Fn(&GroupPoint) -> C64>(&self, j: usize, g: G) -> C64 {
        let grad = directional_derivatives(self.group, g, true);
        self.coeffs[j].iter().zip(&grad).map(|(a, b)| a * b).sum()
    }

    pub fn symbol(&self, j: usize, dual: &Arc<Dual>) -> MatrixField {
        algebra_symbol(dual, &self.coeffs[j])
    }

    /// Symbol of `∂^{(β)}` on the `x`-dual: falling factorials of the basis
    /// fields on the torus, ordered monomials `X_1^{β_1} X_2^{β_2} X_3^{β_3}` on SU(2).
    pub fn multiplier(&self, beta: &[usize], dual: &Arc<Dual>) -> MatrixField {
        let fields: Vec<MatrixField> = (0..beta.len()).map(|j| self.symbol(j, dual)).collect();
        match self.group {
            Group::Torus(_) => MatrixField::scalar_fn(dual, |xi| {
                let i = dual.position(&xi.label).expect("label");
                let mut v = re(1.0);
                for (j, &bj) in beta.iter().enumerate() {
                    let s = fields[j].blocks[i][(0, 0)];
                    for r in 0..bj {
                        v *= s - r as f64;
                    }
                }
                v
            }),
            Group::Su2 => MatrixField::from_fn(dual, |xi| {
                let i = dual.position(&xi.label).expect("label");
                let mut m = linalg::identity(xi.dim());
                for (j, &bj) in beta.iter().enumerate() {
                    for _ in 0..bj {
                        m *= &fields[j].blocks[i];
                    }
                }
                m
            }),
        }
    }
}

/// `∂^{(β)}_x σ(x,ξ)`, computed spectrally on the symbol's grid; the
/// `x`-dependence must be band-limited to the grid's exactness.
pub fn spatial_derivative(basis: &DerivativeBasis, beta: &[usize], sym: &SpatialSymbol) -> Result<SpatialSymbol> {
    if beta.iter().all(|&b| b == 0) {
        return Ok(sym.clone());
    }
    if sym.is_invariant() {
        return Ok(SpatialSymbol::invariant(&sym.grid, MatrixField::zeros(&sym.dual)));
    }
    let grid = &sym.grid;
    let x_dual = Dual::new(grid.group, grid.band_limit)?;
    let mult = basis.multiplier(beta, &x_dual);
    // one entry function x ↦ σ(x,ξ)_ij per (irrep, i, j)
    let mut jobs = Vec::new();
    for (k, xi) in sym.dual.irreps.iter().enumerate() {
        for i in 0..xi.dim() {
            for j in 0..xi.dim() {
                jobs.push((k, i, j));
            }
        }
    }
    let derived: Result<Vec<Vec<C64>>> = par::map_collect(&jobs, |&(k, i, j)| {
        let samples: Vec<C64> = (0..grid.len()).map(|n| sym.at(n).blocks[k][(i, j)]).collect();
        let fh = fourier_transform(grid, &samples, &x_dual)?;
        inverse_transform(&mult.mul(&fh)?, grid)
    })
    .into_iter()
    .collect();
    let derived = derived?;
    let mut fields = vec![MatrixField::zeros(&sym.dual); grid.len()];
    for f in fields.iter_mut() {
        f.diagonal = false;
    }
    for ((k, i, j), vals) in jobs.iter().zip(derived) {
        for (n, v) in vals.into_iter().enumerate() {
            fields[n].blocks[*k][(*i, *j)] = v;
        }
    }
    SpatialSymbol::from_nodes(grid, fields)
}

// ---------------------------------------------------------------------------
// Asymptotic calculus

/// Difference operators plus their dual derivative basis.
#[derive(Debug, Clone)]
pub struct Calculus {
    pub collection: Vec<DifferenceOperator>,
    pub basis: DerivativeBasis,
}

impl Calculus {
    pub fn new(group: Group) -> Result<Self> {
        let collection = admissible_collection(group);
        let basis = DerivativeBasis::new(&collection)?;
        Ok(Calculus { collection, basis })
    }

    fn width(&self) -> f64 {
        self.collection.iter().map(|q| q.coupling_width).fold(0.0, f64::max)
    }

    fn reduced(&self, dual: &Dual, order: usize) -> Result<Arc<Dual>> {
        let cut = dual.cutoff - self.width() * order as f64;
        if cut < 0.0 {
            return Err(Error::Aliasing(format!(
                "cutoff {} too small for order {order} (width {})",
                dual.cutoff,
                self.width()
            )));
        }
        Dual::new(dual.group, cut)
    }

    /// `Σ_{|α| ≤ N} (1/α!) (Δ^α σ_A)(∂^{(α)} σ_B)` on the dual reduced by `N` widths.
    pub fn composition(&self, a: &SpatialSymbol, b: &SpatialSymbol, n: usize) -> Result<SpatialSymbol> {
        let out_dual = self.reduced(&a.dual, n)?;
        let dim = self.collection.len();
        let mut acc = SpatialSymbol::invariant(&a.grid, MatrixField::zeros(&out_dual));
        for order in 0..=n {
            for alpha in multi_indices(dim, order) {
                let da = apply_multi_spatial(&self.collection, &alpha, a)?.restrict(&out_dual)?;
                let db = spatial_derivative(&self.basis, &alpha, b)?.restrict(&out_dual)?;
                let term = da.mul(&db)?.scale(re(1.0 / factorial(&alpha)));
                acc = acc.add(&term)?;
            }
        }
        Ok(acc)
    }

    /// `Σ_{|α| ≤ N} (1/α!) Δ^α ∂^{(α)} σ_A*`.
    pub fn adjoint(&self, a: &SpatialSymbol, n: usize) -> Result<SpatialSymbol> {
        let out_dual = self.reduced(&a.dual, n)?;
        let star = a.adjoint();
        let dim = self.collection.len();
        let mut acc = SpatialSymbol::invariant(&a.grid, MatrixField::zeros(&out_dual));
        for order in 0..=n {
            for alpha in multi_indices(dim, order) {
                let d = spatial_derivative(&self.basis, &alpha, &star)?;
                let term = apply_multi_spatial(&self.collection, &alpha, &d)?
                    .restrict(&out_dual)?
                    .scale(re(1.0 / factorial(&alpha)));
                acc = acc.add(&term)?;
            }
        }
        Ok(acc)
    }

    /// `B_0 = a⁻¹`, `B_N = −a⁻¹ Σ_{k<N} Σ_{|γ|=N−k} (1/γ!) (Δ^γ a)(∂^{(γ)} B_k)`.
    pub fn parametrix(&self, a: &SpatialSymbol, m: f64, n: usize) -> Result<Parametrix> {
        let mut inv_fields = Vec::with_capacity(a.grid.len());
        let nodes = if a.is_invariant() { 1 } else { a.grid.len() };
        for node in 0..nodes {
            match a.at(node).inverse() {
                Ok(f) => inv_fields.push(f),
                Err(xi) => {
                    return Err(Error::NonElliptic {
                        node,
                        irrep: xi.to_string(),
                        detail: "symbol is singular".into(),
                    })
                }
            }
        }
        let a_inv = if a.is_invariant() {
            SpatialSymbol::invariant(&a.grid, inv_fields.pop().expect("one field"))
        } else {
            SpatialSymbol::from_nodes(&a.grid, inv_fields)?
        };
        let weight = bracket_power(&a.dual, m);
        let ellipticity_constant = (0..nodes)
            .map(|i| weight.mul(a_inv.at(i)).map(|f| f.sup_op_norm()))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let dim = self.collection.len();
        let mut terms = vec![a_inv.clone()];
        for order in 1..=n {
            let out_dual = self.reduced(&a.dual, order)?;
            let mut acc = SpatialSymbol::invariant(&a.grid, MatrixField::zeros(&out_dual));
            for (k, bk) in terms.iter().enumerate() {
                for gamma in multi_indices(dim, order - k) {
                    let da = apply_multi_spatial(&self.collection, &gamma, a)?.restrict(&out_dual)?;
                    let db = spatial_derivative(&self.basis, &gamma, bk)?.restrict(&out_dual)?;
                    acc = acc.add(&da.mul(&db)?.scale(re(1.0 / factorial(&gamma))))?;
                }
            }
            let next = a_inv.restrict(&out_dual)?.mul(&acc)?.scale(re(-1.0));
            terms.push(next);
        }
        let out_dual = self.reduced(&a.dual, n)?;
        let mut symbol = SpatialSymbol::invariant(&a.grid, MatrixField::zeros(&out_dual));
        for t in &terms {
            symbol = symbol.add(&t.restrict(&out_dual)?)?;
        }
        Ok(Parametrix {
            symbol,
            terms,
            ellipticity_constant,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Parametrix {
    /// `Σ_{k ≤ N} B_k`.
    pub symbol: SpatialSymbol,
    pub terms: Vec<SpatialSymbol>,
    /// `sup ‖⟨ξ⟩^m a(x,ξ)⁻¹‖_op` over the truncated dual.
    pub ellipticity_constant: f64,
}

// ---------------------------------------------------------------------------
// Dense operator matrices

/// Start of each irrep block in the basis `{√d_ξ ξ_ij}` (row-major within a block).
pub fn basis_offsets(dual: &Dual) -> Vec<usize> {
    let mut off = Vec::with_capacity(dual.len());
    let mut acc = 0;
    for xi in &dual.irreps {
        off.push(acc);
        acc += xi.dim() * xi.dim();
    }
    off
}

/// Matrix of `Op(σ)` in the Plancherel-orthonormal basis `{√d_ξ ξ_ij}` of
/// the band-limited subspace. For `x`-dependent symbols the grid must
/// integrate the image exactly.
pub fn operator_matrix(sym: &SpatialSymbol, band_limit: f64) -> Result<(CMat, Arc<Dual>)> {
    if band_limit > sym.dual.cutoff + 1e-9 {
        return Err(Error::CutoffMismatch(format!(
            "band limit {band_limit} above symbol cutoff {}",
            sym.dual.cutoff
        )));
    }
    let basis = Dual::new(sym.dual.group, band_limit)?;
    let n = basis.total_dim();
    if n > MAX_MATRIX_DIM {
        return Err(Error::Resource(format!("operator matrix of size {n}")));
    }
    let off = basis_offsets(&basis);
    let mut m = CMat::zeros(n, n);
    if let Some(field) = sym.invariant_field() {
        // Op(σ)(√d ξ_ij) = Σ_b σ_bj √d ξ_ib
        for (k, xi) in basis.irreps.iter().enumerate() {
            let s = field.get(&xi.label).expect("label in symbol dual");
            let d = xi.dim();
            for i in 0..d {
                for j in 0..d {
                    for b in 0..d {
                        m[(off[k] + i * d + b, off[k] + i * d + j)] = s[(b, j)];
                    }
                }
            }
        }
        return Ok((m, basis));
    }
    let grid = &sym.grid;
    if grid.band_limit + 1e-9 < band_limit {
        return Err(Error::Aliasing(format!(
            "grid exactness {} below band limit {band_limit}",
            grid.band_limit
        )));
    }
    let sym_pos: Vec<usize> = basis
        .irreps
        .iter()
        .map(|xi| sym.dual.position(&xi.label).expect("label in symbol dual"))
        .collect();
    let reps: Vec<Vec<CMat>> = par::map_collect(&grid.nodes, |x| rep_matrices_at(&basis, x));
    let mut cols = Vec::new();
    for (k, xi) in basis.irreps.iter().enumerate() {
        for i in 0..xi.dim() {
            for j in 0..xi.dim() {
                cols.push((k, i, j));
            }
        }
    }
    let columns: Result<Vec<Vec<C64>>> = par::map_collect(&cols, |&(k, i, j)| {
        let d = basis.irreps[k].dim();
        let sd = (d as f64).sqrt();
        // image of √d ξ_ij: √d Σ_b ξ(x)_ib σ(x,ξ)_bj
        let image: Vec<C64> = (0..grid.len())
            .map(|nd| {
                let r = &reps[nd][k];
                let s = &sym.at(nd).blocks[sym_pos[k]];
                (0..d).map(|b| r[(i, b)] * s[(b, j)]).sum::<C64>() * sd
            })
            .collect();
        let fh = fourier_transform(grid, &image, &basis)?;
        let mut col = vec![C64::new(0.0, 0.0); n];
        for (kk, eta) in basis.irreps.iter().enumerate() {
            let de = eta.dim();
            let se = (de as f64).sqrt();
            for a in 0..de {
                for b in 0..de {
                    col[off[kk] + a * de + b] = fh.blocks[kk][(b, a)] * se;
                }
            }
        }
        Ok(col)
    })
    .into_iter()
    .collect();
    for (c_idx, col) in columns?.into_iter().enumerate() {
        for (r, v) in col.into_iter().enumerate() {
            m[(r, c_idx)] = v;
        }
    }
    Ok((m, basis))
}

/// Symbol `ξ(x)*(Aξ)(x)` of the operator with matrix `m` in the basis of `basis`,
/// evaluated at the nodes of `grid`.
pub fn symbol_of_matrix(m: &CMat, basis: &Arc<Dual>, grid: &Arc<QuadratureGrid>) -> Result<SpatialSymbol> {
    let n = basis.total_dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::Invalid(format!("matrix is {}x{}, basis has {n}", m.nrows(), m.ncols())));
    }
    let off = basis_offsets(basis);
    let fields = par::map_collect(&grid.nodes, |x| {
        let reps = rep_matrices_at(basis, x);
        // value of every basis function √d η_ab at x
        let mut vals = vec![C64::new(0.0, 0.0); n];
        for (k, eta) in basis.irreps.iter().enumerate() {
            let d = eta.dim();
            let sd = (d as f64).sqrt();
            for a in 0..d {
                for b in 0..d {
                    vals[off[k] + a * d + b] = reps[k][(a, b)] * sd;
                }
            }
        }
        MatrixField::from_fn(basis, |xi| {
            let k = basis.position(&xi.label).expect("label");
            let d = xi.dim();
            let sd = (d as f64).sqrt();
            let applied = CMat::from_fn(d, d, |i, j| {
                let col = off[k] + i * d + j;
                (0..n).map(|r| m[(r, col)] * vals[r]).sum::<C64>() / sd
            });
            reps[k].adjoint() * applied
        })
    });
    SpatialSymbol::from_nodes(grid, fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::haar_grid;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_field(dual: &Arc<Dual>, seed: u64) -> MatrixField {
        let mut r = rng(seed);
        MatrixField::from_fn(dual, |xi| {
            CMat::from_fn(xi.dim(), xi.dim(), |_, _| c(r.gen::<f64>() - 0.5, r.gen::<f64>() - 0.5))
        })
    }

    #[test]
    fn identity_symbol_quantizes_to_identity() {
        let grid = Arc::new(haar_grid(Group::Su2, 3.0).unwrap());
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let f = inverse_transform(&random_field(&dual, 1), &grid).unwrap();
        let id = SpatialSymbol::invariant(&grid, MatrixField::identity(&dual));
        let g = quantize_apply(&id, &f).unwrap();
        let err = f.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn laplacian_on_t1_00_doubles() {
        let grid = Arc::new(haar_grid(Group::Su2, 2.0).unwrap());
        let dual = Dual::new(Group::Su2, 2.0).unwrap();
        let lap = SpatialSymbol::invariant(&grid, laplacian_symbol(&dual));
        let xi = Irrep::su2(2);
        let f = grid.sample(|x| rep_matrix(&xi, x)[(1, 1)]);
        let g = quantize_apply(&lap, &f).unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert!((a * 2.0 - b).norm() < 1e-10);
        }
    }

    #[test]
    fn circle_derivative_symbol() {
        let grid = Arc::new(haar_grid(Group::Torus(1), 4.0).unwrap());
        let sym = vector_field_symbol(Group::Torus(1), &[1.0], 4.0).unwrap();
        for (xi, b) in sym.iter() {
            assert_eq!(b[(0, 0)], c(0.0, xi.torus_k().unwrap()[0] as f64));
        }
        let s = SpatialSymbol::invariant(&grid, sym);
        let f = grid.sample(|x| C64::from_polar(1.0, x.coords()[0]));
        let g = quantize_apply(&s, &f).unwrap();
        for (a, b) in f.iter().zip(&g) {
            assert!((a * linalg::I - b).norm() < 1e-12);
        }
    }

    #[test]
    fn x3_symbol_is_diag_minus_i_m() {
        let sym = vector_field_symbol(Group::Su2, &[0.0, 0.0, 1.0], 3.0).unwrap();
        for (xi, b) in sym.iter() {
            let l = xi.index();
            for i in 0..xi.dim() {
                assert!((b[(i, i)] - c(0.0, -(i as f64 - l))).norm() < 1e-15);
            }
            assert!(linalg::is_diagonal(b, 0.0));
            assert!(linalg::hermitian_defect(&(b * linalg::I)) < 1e-14);
        }
        for x in [[1.0, 0.0, 0.0], [0.3, -2.0, 0.7]] {
            let s = vector_field_symbol(Group::Su2, &x, 2.0).unwrap();
            assert_eq!(linalg::op_norm(&s.blocks[0]), 0.0);
        }
    }

    #[test]
    fn extraction_recovers_generator_symbols() {
        // X₃ acting through its own quantization; extraction at a generic node
        let grid = Arc::new(haar_grid(Group::Su2, 2.0).unwrap());
        let dual = Dual::new(Group::Su2, 2.0).unwrap();
        let sigma = random_field(&dual, 9);
        let sym = SpatialSymbol::invariant(&grid, sigma.clone());
        let op = |f: &[C64]| quantize_apply(&sym, f).unwrap();
        let got = extract_symbol_field(op, &grid, &dual, 17).unwrap();
        assert!(got.max_abs_diff(&sigma) < 1e-10);
    }

    #[test]
    fn spin_half_difference_matches_grid_path() {
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let grid = haar_grid(Group::Su2, 3.5).unwrap();
        let sigma = random_field(&dual, 4);
        let mut r = rng(8);
        let mut coeffs = [[re(0.0); 2]; 2];
        for row in coeffs.iter_mut() {
            for v in row.iter_mut() {
                *v = c(r.gen::<f64>(), r.gen::<f64>());
            }
        }
        let op = DifferenceOperator::new(
            Group::Su2,
            "random",
            Generator::SpinHalf {
                coeffs,
                constant: c(0.3, -0.1),
            },
        )
        .unwrap();
        let exact = op.apply(&sigma).unwrap();
        let grid_path = op.apply_via_grid(&sigma, &grid).unwrap();
        assert!(exact.max_abs_diff(&grid_path) < 1e-11, "{}", exact.max_abs_diff(&grid_path));
    }

    #[test]
    fn torus_differences() {
        let dual = Dual::new(Group::Torus(1), 4.0).unwrap();
        let delta0 = MatrixField::scalar_fn(&dual, |xi| re(if xi.torus_k().unwrap()[0] == 0 { 1.0 } else { 0.0 }));
        let op = DifferenceOperator::new(
            Group::Torus(1),
            "e^{ix}-1",
            Generator::Trig(vec![(vec![1], re(1.0)), (vec![0], re(-1.0))]),
        )
        .unwrap();
        assert_eq!(op.vanishing_order, 1);
        let d = op.apply(&delta0).unwrap();
        for (xi, b) in d.iter() {
            let k = xi.torus_k().unwrap()[0];
            let want = match k {
                1 => 1.0,
                0 => -1.0,
                _ => 0.0,
            };
            assert_eq!(b[(0, 0)], re(want));
        }
        let grid = haar_grid(Group::Torus(1), 6.0).unwrap();
        let sigma = random_field(&dual, 2);
        assert!(op.apply(&sigma).unwrap().max_abs_diff(&op.apply_via_grid(&sigma, &grid).unwrap()) < 1e-12);
    }

    #[test]
    fn differences_kill_the_delta_symbol() {
        for g in [Group::Torus(2), Group::Su2] {
            let dual = Dual::new(g, 3.0).unwrap();
            let id = MatrixField::identity(&dual);
            for q in admissible_collection(g) {
                assert_eq!(q.vanishing_order, 1);
                assert!(q.eval(&g.identity()).norm() < 1e-12);
                let d = q.apply(&id).unwrap();
                assert!(d.sup_op_norm() < 1e-12, "{} {}", q.name, d.sup_op_norm());
            }
        }
    }

    #[test]
    fn derivative_basis_is_dual_to_collection() {
        for g in [Group::Torus(1), Group::Torus(3), Group::Su2] {
            let coll = admissible_collection(g);
            let basis = DerivativeBasis::new(&coll).unwrap();
            for j in 0..coll.len() {
                for (k, q) in coll.iter().enumerate() {
                    let v = basis.apply_at_identity_inverse(j, |x| q.eval(x));
                    let want = if j == k { 1.0 } else { 0.0 };
                    assert!((v - re(want)).norm() < 1e-8, "{g} {j} {k} {v}");
                }
            }
        }
        let t1 = DerivativeBasis::new(&admissible_collection(Group::Torus(1))).unwrap();
        assert!((t1.coeffs[0][0] - c(0.0, -1.0)).norm() < 1e-9);
    }

    #[test]
    fn leibniz_rule_for_spin_half_entries() {
        // Δ_ab(στ) = (Δ_ab σ)τ + σ(Δ_ab τ) + Σ_c (Δ_cb σ)(Δ_ac τ), q_ab = t^{1/2}_ab − δ_ab
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let s = random_field(&dual, 21);
        let t = random_field(&dual, 22);
        let q = |a: usize, b: usize| {
            let mut coeffs = [[re(0.0); 2]; 2];
            coeffs[a][b] = re(1.0);
            let constant = if a == b { re(-1.0) } else { re(0.0) };
            DifferenceOperator::new(Group::Su2, "entry", Generator::SpinHalf { coeffs, constant }).unwrap()
        };
        let small = Dual::new(Group::Su2, 2.5).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let lhs = q(a, b).apply(&s.mul(&t).unwrap()).unwrap();
                let st = s.restrict(&small).unwrap();
                let tt = t.restrict(&small).unwrap();
                let mut rhs = q(a, b).apply(&s).unwrap().mul(&tt).unwrap();
                rhs = rhs.add(&st.mul(&q(a, b).apply(&t).unwrap()).unwrap()).unwrap();
                for cc in 0..2 {
                    let term = q(cc, b).apply(&s).unwrap().mul(&q(a, cc).apply(&t).unwrap()).unwrap();
                    rhs = rhs.add(&term).unwrap();
                }
                assert!(lhs.max_abs_diff(&rhs) < 1e-10, "({a},{b}) {}", lhs.max_abs_diff(&rhs));
            }
        }
    }

    #[test]
    fn multiplier_operator_matrix() {
        let grid = Arc::new(haar_grid(Group::Su2, 2.0).unwrap());
        let dual = Dual::new(Group::Su2, 2.0).unwrap();
        let sigma = random_field(&dual, 3);
        let inv = SpatialSymbol::invariant(&grid, sigma.clone());
        let (m, _) = operator_matrix(&inv, 2.0).unwrap();
        assert!((linalg::op_norm(&m) - sigma.sup_op_norm()).abs() < 1e-10);
        // the same symbol stored per node goes through the generic path
        let spatial = SpatialSymbol::from_nodes(&grid, inv.node_fields()).unwrap();
        let (m2, basis) = operator_matrix(&spatial, 2.0).unwrap();
        assert!(linalg::max_abs_diff(&m, &m2) < 1e-10);
        let back = symbol_of_matrix(&m2, &basis, &grid).unwrap();
        assert!(back.max_abs_diff(&spatial) < 1e-10);
    }

    #[test]
    fn multiplication_by_character_is_a_shift() {
        let grid = Arc::new(haar_grid(Group::Torus(1), 8.0).unwrap());
        let dual = Dual::new(Group::Torus(1), 4.0).unwrap();
        let sym = SpatialSymbol::from_fn(&grid, &dual, |x, _| CMat::from_element(1, 1, C64::from_polar(1.0, x.coords()[0])));
        let (m, basis) = operator_matrix(&sym, 4.0).unwrap();
        for (col, xi) in basis.irreps.iter().enumerate() {
            let k = xi.torus_k().unwrap()[0];
            for (row, eta) in basis.irreps.iter().enumerate() {
                let want = if eta.torus_k().unwrap()[0] == k + 1 { 1.0 } else { 0.0 };
                assert!((m[(row, col)] - re(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invariant_composition_is_pointwise_product() {
        let grid = Arc::new(haar_grid(Group::Su2, 2.0).unwrap());
        let dual = Dual::new(Group::Su2, 3.0).unwrap();
        let a = SpatialSymbol::invariant(&grid, random_field(&dual, 5));
        let b = SpatialSymbol::invariant(&grid, random_field(&dual, 6));
        let calc = Calculus::new(Group::Su2).unwrap();
        let comp = calc.composition(&a, &b, 2).unwrap();
        let want = a.mul(&b).unwrap().restrict(&comp.dual).unwrap();
        assert!(comp.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn invariant_parametrix_is_inverse() {
        let grid = Arc::new(haar_grid(Group::Torus(1), 4.0).unwrap());
        let dual = Dual::new(Group::Torus(1), 8.0).unwrap();
        let a = SpatialSymbol::invariant(&grid, bracket_power(&dual, 2.0));
        let calc = Calculus::new(Group::Torus(1)).unwrap();
        let p = calc.parametrix(&a, 2.0, 2).unwrap();
        let comp = calc.composition(&a.restrict(&p.symbol.dual).unwrap(), &p.symbol, 1).unwrap();
        let id = MatrixField::identity(&comp.dual);
        assert!(comp.at(0).max_abs_diff(&id) < 1e-12);
        assert!((p.ellipticity_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_symbol_is_not_elliptic() {
        let grid = Arc::new(haar_grid(Group::Torus(1), 4.0).unwrap());
        let dual = Dual::new(Group::Torus(1), 4.0).unwrap();
        let a = SpatialSymbol::invariant(&grid, laplacian_symbol(&dual));
        let calc = Calculus::new(Group::Torus(1)).unwrap();
        assert!(matches!(calc.parametrix(&a, 2.0, 1), Err(Error::NonElliptic { .. })));
    }
}
