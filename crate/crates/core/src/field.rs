//! Matrix fields over a truncated dual, and symbols sampled on a grid.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{Dual, Group, Irrep, Label, QuadratureGrid};
use crate::linalg::{self, CMat, C64};

/// One `d_ξ × d_ξ` complex matrix per irrep of a truncated dual.
#[derive(Debug, Clone)]
pub struct MatrixField {
    pub dual: Arc<Dual>,
    pub blocks: Vec<CMat>,
    /// Set when every block is known to be diagonal; serialization then keeps
    /// only the diagonals.
    pub diagonal: bool,
}

impl MatrixField {
    pub fn from_fn<F: FnMut(&Irrep) -> CMat>(dual: &Arc<Dual>, mut f: F) -> Self {
        let blocks = dual
            .irreps
            .iter()
            .map(|xi| {
                let b = f(xi);
                assert_eq!(b.nrows(), xi.dim(), "block for {xi} has wrong size");
                assert_eq!(b.ncols(), xi.dim(), "block for {xi} has wrong size");
                b
            })
            .collect();
        MatrixField {
            dual: dual.clone(),
            blocks,
            diagonal: false,
        }
    }

    /// Diagonal field `diag(f(ξ))`.
    pub fn from_diag_fn<F: Fn(&Irrep) -> Vec<C64>>(dual: &Arc<Dual>, f: F) -> Self {
        let blocks = dual
            .irreps
            .iter()
            .map(|xi| {
                let d = f(xi);
                assert_eq!(d.len(), xi.dim());
                linalg::diag_complex(&d)
            })
            .collect();
        MatrixField {
            dual: dual.clone(),
            blocks,
            diagonal: true,
        }
    }

    /// Scalar multiple of the identity, `s(ξ) I_{d_ξ}`.
    pub fn scalar_fn<F: Fn(&Irrep) -> C64>(dual: &Arc<Dual>, f: F) -> Self {
        Self::from_diag_fn(dual, |xi| vec![f(xi); xi.dim()])
    }

    pub fn zeros(dual: &Arc<Dual>) -> Self {
        Self::scalar_fn(dual, |_| C64::new(0.0, 0.0))
    }

    pub fn identity(dual: &Arc<Dual>) -> Self {
        Self::scalar_fn(dual, |_| C64::new(1.0, 0.0))
    }

    pub fn group(&self) -> Group {
        self.dual.group
    }

    pub fn cutoff(&self) -> f64 {
        self.dual.cutoff
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, label: &Label) -> Option<&CMat> {
        self.dual.position(label).map(|i| &self.blocks[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Irrep, &CMat)> {
        self.dual.irreps.iter().zip(&self.blocks)
    }

    pub fn map<F: Fn(&Irrep, &CMat) -> CMat>(&self, f: F) -> Self {
        MatrixField {
            dual: self.dual.clone(),
            blocks: self.iter().map(|(xi, b)| f(xi, b)).collect(),
            diagonal: false,
        }
    }

    fn check_same(&self, other: &MatrixField) -> Result<()> {
        if self.dual.group != other.dual.group || self.dual.len() != other.dual.len() {
            return Err(Error::CutoffMismatch(format!(
                "fields on {} (cutoff {}) and {} (cutoff {})",
                self.dual.group, self.dual.cutoff, other.dual.group, other.dual.cutoff
            )));
        }
        Ok(())
    }

    /// Pointwise product `σ(ξ) τ(ξ)`.
    pub fn mul(&self, other: &MatrixField) -> Result<Self> {
        self.check_same(other)?;
        Ok(MatrixField {
            dual: self.dual.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect(),
            diagonal: self.diagonal && other.diagonal,
        })
    }

    pub fn add(&self, other: &MatrixField) -> Result<Self> {
        self.check_same(other)?;
        Ok(MatrixField {
            dual: self.dual.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect(),
            diagonal: self.diagonal && other.diagonal,
        })
    }

    pub fn sub(&self, other: &MatrixField) -> Result<Self> {
        self.check_same(other)?;
        Ok(MatrixField {
            dual: self.dual.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect(),
            diagonal: self.diagonal && other.diagonal,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        MatrixField {
            dual: self.dual.clone(),
            blocks: self.blocks.iter().map(|b| b * s).collect(),
            diagonal: self.diagonal,
        }
    }

    pub fn adjoint(&self) -> Self {
        MatrixField {
            dual: self.dual.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
            diagonal: self.diagonal,
        }
    }

    /// Blockwise inverse; `None` names the first singular irrep.
    pub fn inverse(&self) -> std::result::Result<Self, Irrep> {
        let mut blocks = Vec::with_capacity(self.len());
        for (xi, b) in self.iter() {
            blocks.push(linalg::try_inverse(b).ok_or_else(|| xi.clone())?);
        }
        Ok(MatrixField {
            dual: self.dual.clone(),
            blocks,
            diagonal: self.diagonal,
        })
    }

    /// Restriction to a smaller dual of the same group.
    pub fn restrict(&self, dual: &Arc<Dual>) -> Result<Self> {
        if dual.group != self.dual.group || dual.cutoff > self.dual.cutoff + 1e-12 {
            return Err(Error::CutoffMismatch(format!(
                "cannot restrict cutoff {} to {}",
                self.dual.cutoff, dual.cutoff
            )));
        }
        let blocks = dual
            .irreps
            .iter()
            .map(|xi| {
                let i = self.dual.position(&xi.label).expect("sub-dual label present");
                self.blocks[i].clone()
            })
            .collect();
        Ok(MatrixField {
            dual: dual.clone(),
            blocks,
            diagonal: self.diagonal,
        })
    }

    /// `sup_ξ ‖σ(ξ)‖_op`.
    pub fn sup_op_norm(&self) -> f64 {
        self.blocks.iter().map(linalg::op_norm).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &MatrixField) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| linalg::max_abs_diff(a, b))
            .fold(0.0, f64::max)
    }

    /// `(Σ d_ξ ‖σ(ξ)‖²_HS)^{1/2}`.
    pub fn plancherel_norm(&self) -> f64 {
        self.iter()
            .map(|(xi, b)| xi.dim() as f64 * linalg::hs_norm_sqr(b))
            .sum::<f64>()
            .sqrt()
    }
}

/// `(Σ d_ξ ‖f̂(ξ)‖²_HS)^{1/2}`.
pub fn plancherel_norm(field: &MatrixField) -> f64 {
    field.plancherel_norm()
}

#[derive(Debug, Clone)]
enum Values {
    Invariant(MatrixField),
    Nodes(Vec<MatrixField>),
}

/// A symbol `σ(x, ξ)` sampled at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct SpatialSymbol {
    pub grid: Arc<QuadratureGrid>,
    pub dual: Arc<Dual>,
    values: Values,
}

impl SpatialSymbol {
    /// Symbol that does not depend on `x`.
    pub fn invariant(grid: &Arc<QuadratureGrid>, field: MatrixField) -> Self {
        SpatialSymbol {
            grid: grid.clone(),
            dual: field.dual.clone(),
            values: Values::Invariant(field),
        }
    }

    pub fn from_nodes(grid: &Arc<QuadratureGrid>, fields: Vec<MatrixField>) -> Result<Self> {
        if fields.len() != grid.len() {
            return Err(Error::Invalid(format!(
                "{} node fields for a grid of {} nodes",
                fields.len(),
                grid.len()
            )));
        }
        let dual = fields
            .first()
            .map(|f| f.dual.clone())
            .ok_or_else(|| Error::Invalid("empty grid".into()))?;
        if fields.iter().any(|f| f.dual.len() != dual.len() || f.dual.cutoff != dual.cutoff) {
            return Err(Error::CutoffMismatch("node fields have different cutoffs".into()));
        }
        Ok(SpatialSymbol {
            grid: grid.clone(),
            dual,
            values: Values::Nodes(fields),
        })
    }

    /// `σ(x_i, ξ) = f(x_i, ξ)` at every node.
    pub fn from_fn<F>(grid: &Arc<QuadratureGrid>, dual: &Arc<Dual>, f: F) -> Self
    where
        F: Fn(&crate::group::GroupPoint, &Irrep) -> CMat + Sync,
    {
        let fields = crate::par::map_collect(&grid.nodes, |x| MatrixField::from_fn(dual, |xi| f(x, xi)));
        SpatialSymbol {
            grid: grid.clone(),
            dual: dual.clone(),
            values: Values::Nodes(fields),
        }
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self.values, Values::Invariant(_))
    }

    /// The field at node `i`.
    pub fn at(&self, node: usize) -> &MatrixField {
        match &self.values {
            Values::Invariant(f) => f,
            Values::Nodes(v) => &v[node],
        }
    }

    /// The `x`-independent field, when the symbol is invariant.
    pub fn invariant_field(&self) -> Option<&MatrixField> {
        match &self.values {
            Values::Invariant(f) => Some(f),
            Values::Nodes(_) => None,
        }
    }

    /// Per-node fields, expanding invariant symbols.
    pub fn node_fields(&self) -> Vec<MatrixField> {
        match &self.values {
            Values::Invariant(f) => vec![f.clone(); self.grid.len()],
            Values::Nodes(v) => v.clone(),
        }
    }

    /// Apply `f` to the field at every node.
    pub fn map_fields<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&MatrixField) -> Result<MatrixField> + Sync,
    {
        match &self.values {
            Values::Invariant(v) => Ok(SpatialSymbol::invariant(&self.grid, f(v)?)),
            Values::Nodes(v) => {
                let out: Result<Vec<MatrixField>> = crate::par::map_collect(v, |m| f(m)).into_iter().collect();
                SpatialSymbol::from_nodes(&self.grid, out?)
            }
        }
    }

    /// Combine two symbols on the same grid node by node.
    pub fn zip_fields<F>(&self, other: &SpatialSymbol, f: F) -> Result<Self>
    where
        F: Fn(&MatrixField, &MatrixField) -> Result<MatrixField> + Sync,
    {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::CutoffMismatch("symbols live on different grids".into()));
        }
        match (&self.values, &other.values) {
            (Values::Invariant(a), Values::Invariant(b)) => Ok(SpatialSymbol::invariant(&self.grid, f(a, b)?)),
            _ => {
                let idx: Vec<usize> = (0..self.grid.len()).collect();
                let out: Result<Vec<MatrixField>> = crate::par::map_collect(&idx, |&i| f(self.at(i), other.at(i)))
                    .into_iter()
                    .collect();
                SpatialSymbol::from_nodes(&self.grid, out?)
            }
        }
    }

    pub fn mul(&self, other: &SpatialSymbol) -> Result<Self> {
        self.zip_fields(other, |a, b| a.mul(b))
    }

    pub fn add(&self, other: &SpatialSymbol) -> Result<Self> {
        self.zip_fields(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &SpatialSymbol) -> Result<Self> {
        self.zip_fields(other, |a, b| a.sub(b))
    }

    pub fn scale(&self, s: C64) -> Self {
        self.map_fields(|f| Ok(f.scale(s))).expect("scaling cannot fail")
    }

    pub fn adjoint(&self) -> Self {
        self.map_fields(|f| Ok(f.adjoint())).expect("adjoint cannot fail")
    }

    pub fn restrict(&self, dual: &Arc<Dual>) -> Result<Self> {
        self.map_fields(|f| f.restrict(dual))
    }

    /// `sup_{x,ξ} ‖σ(x,ξ)‖_op`.
    pub fn sup_op_norm(&self) -> f64 {
        match &self.values {
            Values::Invariant(f) => f.sup_op_norm(),
            Values::Nodes(v) => v.iter().map(|f| f.sup_op_norm()).fold(0.0, f64::max),
        }
    }

    pub fn max_abs_diff(&self, other: &SpatialSymbol) -> f64 {
        (0..self.grid.len())
            .map(|i| self.at(i).max_abs_diff(other.at(i)))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_field_blocks_have_irrep_size() {
        let dual = Dual::new(Group::Su2, 2.0).unwrap();
        let id = MatrixField::identity(&dual);
        for (xi, b) in id.iter() {
            assert_eq!(b.nrows(), xi.dim());
        }
        assert!(id.diagonal);
        assert!((id.sup_op_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let dual = Dual::new(Group::Torus(2), 3.0).unwrap();
        assert_eq!(plancherel_norm(&MatrixField::zeros(&dual)), 0.0);
    }

    #[test]
    fn restriction_keeps_labels() {
        let big = Dual::new(Group::Torus(1), 5.0).unwrap();
        let small = Dual::new(Group::Torus(1), 2.0).unwrap();
        let f = MatrixField::scalar_fn(&big, |xi| C64::new(xi.torus_k().unwrap()[0] as f64, 0.0));
        let r = f.restrict(&small).unwrap();
        for (xi, b) in r.iter() {
            assert_eq!(b[(0, 0)].re, xi.torus_k().unwrap()[0] as f64);
        }
        assert!(small.len() < big.len());
        assert!(MatrixField::zeros(&small).restrict(&big).is_err());
    }
}
