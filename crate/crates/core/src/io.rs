//! File formats: matrix fields and symbols as JSON or a compact
//! little-endian binary layout, grids as JSON.
//!
//! Binary field layout:
//!
//! ```text
//! magic "LPMF" | version u32 | flags u8 (bit 0: diagonal)
//! group id: u32 length + UTF-8 | cutoff f64 | irrep count u32
//! per irrep: label (u8 kind; torus: u32 n + n×i32, su2: u32 two_l)
//!            dim u32 | complex doubles (re, im), row-major d×d or the d diagonal entries
//! ```
//!
//! A symbol file is `"LPSS" | version u32 | flags u8 (bit 0: hermitian phase)
//! | grid band limit f64 | node count u32 (0 = invariant)` followed by one
//! field record per node.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{MatrixField, SpatialSymbol};
use crate::group::{haar_grid, Dual, Group, Label, QuadratureGrid};
use crate::linalg::{self, CMat, C64};

const FIELD_MAGIC: &[u8; 4] = b"LPMF";
const SYMBOL_MAGIC: &[u8; 4] = b"LPSS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDoc {
    pub label: Label,
    pub dim: usize,
    /// `[re, im]` pairs, row-major, or only the diagonal when the field is diagonal.
    pub data: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDoc {
    pub group: String,
    pub cutoff: f64,
    pub diagonal: bool,
    pub blocks: Vec<BlockDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolDoc {
    pub group: String,
    pub grid_band_limit: f64,
    pub hermitian: bool,
    /// One entry when the symbol is invariant.
    pub nodes: Vec<FieldDoc>,
    pub invariant: bool,
}

pub fn field_to_doc(field: &MatrixField) -> FieldDoc {
    let blocks = field
        .iter()
        .map(|(xi, b)| {
            let d = xi.dim();
            let data = if field.diagonal {
                (0..d).map(|i| [b[(i, i)].re, b[(i, i)].im]).collect()
            } else {
                (0..d)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .map(|(i, j)| [b[(i, j)].re, b[(i, j)].im])
                    .collect()
            };
            BlockDoc {
                label: xi.label.clone(),
                dim: d,
                data,
            }
        })
        .collect();
    FieldDoc {
        group: field.group().id(),
        cutoff: field.cutoff(),
        diagonal: field.diagonal,
        blocks,
    }
}

pub fn field_from_doc(doc: &FieldDoc) -> Result<MatrixField> {
    let group = Group::parse(&doc.group)?;
    let dual = Dual::new(group, doc.cutoff)?;
    if dual.len() != doc.blocks.len() {
        return Err(Error::Format(format!(
            "{} blocks for a dual of {} irreps",
            doc.blocks.len(),
            dual.len()
        )));
    }
    let mut blocks = Vec::with_capacity(dual.len());
    for (xi, bd) in dual.irreps.iter().zip(&doc.blocks) {
        if xi.label != bd.label || xi.dim() != bd.dim {
            return Err(Error::Format(format!("block {:?} does not match irrep {xi}", bd.label)));
        }
        blocks.push(block_from_values(bd.dim, doc.diagonal, bd.data.iter().map(|p| C64::new(p[0], p[1])).collect())?);
    }
    Ok(MatrixField {
        dual,
        blocks,
        diagonal: doc.diagonal,
    })
}

fn block_from_values(d: usize, diagonal: bool, values: Vec<C64>) -> Result<CMat> {
    if diagonal {
        if values.len() != d {
            return Err(Error::Format(format!("diagonal block of dim {d} has {} entries", values.len())));
        }
        Ok(linalg::diag_complex(&values))
    } else {
        if values.len() != d * d {
            return Err(Error::Format(format!("block of dim {d} has {} entries", values.len())));
        }
        Ok(CMat::from_row_slice(d, d, &values))
    }
}

pub fn field_to_json(field: &MatrixField) -> Result<String> {
    Ok(serde_json::to_string_pretty(&field_to_doc(field))?)
}

pub fn field_from_json(s: &str) -> Result<MatrixField> {
    field_from_doc(&serde_json::from_str(s)?)
}

// ---------------------------------------------------------------------------
// Binary

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format(format!("truncated input at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i32(&mut self) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn magic(&mut self, m: &[u8; 4]) -> Result<()> {
        if self.take(4)? != m {
            return Err(Error::Format(format!("bad magic, expected {}", String::from_utf8_lossy(m))));
        }
        let v = self.u32()?;
        if v != VERSION {
            return Err(Error::Format(format!("unsupported version {v}")));
        }
        Ok(())
    }
}

fn write_field_record(out: &mut Vec<u8>, field: &MatrixField) {
    out.extend_from_slice(FIELD_MAGIC);
    put_u32(out, VERSION);
    out.push(field.diagonal as u8);
    let id = field.group().id();
    put_u32(out, id.len() as u32);
    out.extend_from_slice(id.as_bytes());
    put_f64(out, field.cutoff());
    put_u32(out, field.len() as u32);
    for (xi, b) in field.iter() {
        match &xi.label {
            Label::Torus(k) => {
                out.push(0);
                put_u32(out, k.len() as u32);
                for &v in k {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Label::Su2(t) => {
                out.push(1);
                put_u32(out, *t);
            }
        }
        let d = xi.dim();
        put_u32(out, d as u32);
        if field.diagonal {
            for i in 0..d {
                put_f64(out, b[(i, i)].re);
                put_f64(out, b[(i, i)].im);
            }
        } else {
            for i in 0..d {
                for j in 0..d {
                    put_f64(out, b[(i, j)].re);
                    put_f64(out, b[(i, j)].im);
                }
            }
        }
    }
}

fn read_field_record(r: &mut Reader) -> Result<MatrixField> {
    r.magic(FIELD_MAGIC)?;
    let diagonal = r.u8()? & 1 == 1;
    let n = r.u32()? as usize;
    let id = String::from_utf8(r.take(n)?.to_vec()).map_err(|e| Error::Format(e.to_string()))?;
    let group = Group::parse(&id)?;
    let cutoff = r.f64()?;
    let count = r.u32()? as usize;
    let dual = Dual::new(group, cutoff)?;
    if count != dual.len() {
        return Err(Error::Format(format!("{count} blocks for a dual of {} irreps", dual.len())));
    }
    let mut blocks = Vec::with_capacity(count);
    for xi in &dual.irreps {
        let label = match r.u8()? {
            0 => {
                let n = r.u32()? as usize;
                Label::Torus((0..n).map(|_| r.i32()).collect::<Result<_>>()?)
            }
            1 => Label::Su2(r.u32()?),
            k => return Err(Error::Format(format!("unknown label kind {k}"))),
        };
        let d = r.u32()? as usize;
        if label != xi.label || d != xi.dim() {
            return Err(Error::Format(format!("record {label:?} does not match irrep {xi}")));
        }
        let len = if diagonal { d } else { d * d };
        let vals = (0..len)
            .map(|_| Ok(C64::new(r.f64()?, r.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        blocks.push(block_from_values(d, diagonal, vals)?);
    }
    Ok(MatrixField {
        dual,
        blocks,
        diagonal,
    })
}

pub fn field_to_bytes(field: &MatrixField) -> Vec<u8> {
    let mut out = Vec::new();
    write_field_record(&mut out, field);
    out
}

pub fn field_from_bytes(buf: &[u8]) -> Result<MatrixField> {
    let mut r = Reader { buf, pos: 0 };
    let f = read_field_record(&mut r)?;
    if r.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(f)
}

pub fn symbol_to_bytes(sym: &SpatialSymbol, hermitian: bool) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(SYMBOL_MAGIC);
    put_u32(&mut out, VERSION);
    out.push(hermitian as u8);
    put_f64(&mut out, sym.grid.band_limit);
    if let Some(f) = sym.invariant_field() {
        put_u32(&mut out, 0);
        write_field_record(&mut out, f);
    } else {
        put_u32(&mut out, sym.grid.len() as u32);
        for n in 0..sym.grid.len() {
            write_field_record(&mut out, sym.at(n));
        }
    }
    out
}

/// Reads a symbol and its hermitian flag; the grid is rebuilt from the
/// stored band limit.
pub fn symbol_from_bytes(buf: &[u8]) -> Result<(SpatialSymbol, bool)> {
    let mut r = Reader { buf, pos: 0 };
    r.magic(SYMBOL_MAGIC)?;
    let hermitian = r.u8()? & 1 == 1;
    let band = r.f64()?;
    let nodes = r.u32()? as usize;
    let first = read_field_record(&mut r)?;
    let grid = Arc::new(haar_grid(first.group(), band)?);
    let sym = if nodes == 0 {
        SpatialSymbol::invariant(&grid, first)
    } else {
        if nodes != grid.len() {
            return Err(Error::Format(format!("{nodes} node records for a grid of {}", grid.len())));
        }
        let mut fields = vec![first];
        for _ in 1..nodes {
            fields.push(read_field_record(&mut r)?);
        }
        SpatialSymbol::from_nodes(&grid, fields)?
    };
    if r.pos != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok((sym, hermitian))
}

pub fn symbol_to_doc(sym: &SpatialSymbol, hermitian: bool) -> SymbolDoc {
    let nodes = match sym.invariant_field() {
        Some(f) => vec![field_to_doc(f)],
        None => (0..sym.grid.len()).map(|n| field_to_doc(sym.at(n))).collect(),
    };
    SymbolDoc {
        group: sym.grid.group.id(),
        grid_band_limit: sym.grid.band_limit,
        hermitian,
        invariant: sym.is_invariant(),
        nodes,
    }
}

pub fn symbol_from_doc(doc: &SymbolDoc) -> Result<(SpatialSymbol, bool)> {
    let group = Group::parse(&doc.group)?;
    let grid = Arc::new(haar_grid(group, doc.grid_band_limit)?);
    let fields = doc.nodes.iter().map(field_from_doc).collect::<Result<Vec<_>>>()?;
    let sym = if doc.invariant {
        let f = fields.into_iter().next().ok_or_else(|| Error::Format("invariant symbol without a field".into()))?;
        SpatialSymbol::invariant(&grid, f)
    } else {
        SpatialSymbol::from_nodes(&grid, fields)?
    };
    Ok((sym, doc.hermitian))
}

pub fn grid_to_json(grid: &QuadratureGrid) -> Result<String> {
    Ok(serde_json::to_string(grid)?)
}

pub fn grid_from_json(s: &str) -> Result<QuadratureGrid> {
    Ok(serde_json::from_str(s)?)
}

// ---------------------------------------------------------------------------
// Files

fn is_json(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Writes JSON for `.json` paths and the binary layout otherwise.
pub fn write_field(path: &Path, field: &MatrixField) -> Result<()> {
    let bytes = if is_json(path) {
        field_to_json(field)?.into_bytes()
    } else {
        field_to_bytes(field)
    };
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<MatrixField> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if is_json(path) {
        field_from_json(std::str::from_utf8(&buf).map_err(|e| Error::Format(e.to_string()))?)
    } else {
        field_from_bytes(&buf)
    }
}

pub fn write_symbol(path: &Path, sym: &SpatialSymbol, hermitian: bool) -> Result<()> {
    let bytes = if is_json(path) {
        serde_json::to_string(&symbol_to_doc(sym, hermitian))?.into_bytes()
    } else {
        symbol_to_bytes(sym, hermitian)
    };
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_symbol(path: &Path) -> Result<(SpatialSymbol, bool)> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    if is_json(path) {
        symbol_from_doc(&serde_json::from_slice(&buf)?)
    } else {
        symbol_from_bytes(&buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::subelliptic::SubLaplacian;

    fn sample_field() -> MatrixField {
        let dual = Dual::new(Group::Su2, 1.5).unwrap();
        MatrixField::from_fn(&dual, |xi| {
            let d = xi.dim();
            CMat::from_fn(d, d, |i, j| c(i as f64 + 0.25, j as f64 - 1.0 / 3.0))
        })
    }

    #[test]
    fn json_round_trip() {
        let f = sample_field();
        let back = field_from_json(&field_to_json(&f).unwrap()).unwrap();
        assert_eq!(back.max_abs_diff(&f), 0.0);
        let t = Dual::new(Group::Torus(2), 2.0).unwrap();
        let g = MatrixField::scalar_fn(&t, |xi| re_of(xi.casimir()));
        let back = field_from_json(&field_to_json(&g).unwrap()).unwrap();
        assert!(back.diagonal);
        assert_eq!(back.max_abs_diff(&g), 0.0);
    }

    fn re_of(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn binary_round_trip_and_layout() {
        let f = sample_field();
        let bytes = field_to_bytes(&f);
        assert_eq!(&bytes[..4], b"LPMF");
        let back = field_from_bytes(&bytes).unwrap();
        assert_eq!(back.max_abs_diff(&f), 0.0);
        // header 4+4+1, id 4+3, cutoff 8, count 4; per irrep 1+4 label, 4 dim, 16 d²
        let payload: usize = f.dual.irreps.iter().map(|xi| 9 + 16 * xi.dim() * xi.dim()).sum();
        assert_eq!(bytes.len(), 28 + payload);
        assert!(field_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn symbol_round_trip() {
        let dual = Dual::new(Group::Torus(1), 3.0).unwrap();
        let grid = Arc::new(haar_grid(Group::Torus(1), 4.0).unwrap());
        let sym = SpatialSymbol::from_fn(&grid, &dual, |x, xi| {
            linalg::diag_real(&[x.coords()[0].sin() + xi.casimir()])
        });
        let (back, herm) = symbol_from_bytes(&symbol_to_bytes(&sym, true)).unwrap();
        assert!(herm);
        assert_eq!(back.max_abs_diff(&sym), 0.0);
        let (back, _) = symbol_from_doc(&symbol_to_doc(&sym, false)).unwrap();
        assert_eq!(back.max_abs_diff(&sym), 0.0);
        let sub = SubLaplacian::su2_pair(1, 2).unwrap();
        let d2 = Dual::new(Group::Su2, 2.0).unwrap();
        let g2 = Arc::new(haar_grid(Group::Su2, 1.0).unwrap());
        let inv = SpatialSymbol::invariant(&g2, sub.m_weight_field(1.0, &d2));
        let (back, _) = symbol_from_bytes(&symbol_to_bytes(&inv, false)).unwrap();
        assert!(back.is_invariant());
        assert_eq!(back.max_abs_diff(&inv), 0.0);
    }

    #[test]
    fn grid_json_round_trip() {
        let g = haar_grid(Group::Su2, 1.0).unwrap();
        let back = grid_from_json(&grid_to_json(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
