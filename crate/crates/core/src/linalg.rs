//! Vectors and matrices over `F_q`: rank, leader-set selection, and exact
//! linear solving used for signal reconstruction.
//!
//! All elimination is exact field arithmetic; any nonzero pivot works, so
//! pivoting is purely positional (first nonzero row), which keeps every
//! routine deterministic for a given input.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::gf::{FieldElement, Fq, GfError};

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum LinalgError {
    #[error("empty input")]
    Empty,
    #[error("ragged input: expected dimension {expected}, got {got}")]
    Ragged { expected: usize, got: usize },
    #[error("field context mismatch")]
    ContextMismatch,
    #[error("dimension mismatch: {0}")]
    Dimension(&'static str),
    #[error(transparent)]
    Gf(#[from] GfError),
}

/// A fixed-length vector over one field context.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FqVector {
    field: Fq,
    vals: Vec<u32>,
}

impl FqVector {
    pub fn new(field: Fq, vals: Vec<u32>) -> Result<Self, LinalgError> {
        for &v in &vals {
            if v >= field.modulus() {
                return Err(GfError::OutOfRange {
                    value: u64::from(v),
                    q: field.modulus(),
                }
                .into());
            }
        }
        Ok(FqVector { field, vals })
    }

    pub fn from_elements(els: &[FieldElement]) -> Result<Self, LinalgError> {
        let field = els.first().ok_or(LinalgError::Empty)?.field();
        if els.iter().any(|e| e.field() != field) {
            return Err(LinalgError::ContextMismatch);
        }
        Ok(FqVector {
            field,
            vals: els.iter().map(|e| e.value()).collect(),
        })
    }

    pub fn zero(field: Fq, len: usize) -> Self {
        FqVector {
            field,
            vals: vec![0; len],
        }
    }

    /// Standard unit vector with a one at `idx`.
    pub fn unit(field: Fq, len: usize, idx: usize) -> Self {
        assert!(idx < len);
        let mut vals = vec![0; len];
        vals[idx] = 1;
        FqVector { field, vals }
    }

    pub fn field(&self) -> Fq {
        self.field
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn get(&self, i: usize) -> FieldElement {
        self.field.el(u64::from(self.vals[i]))
    }

    pub fn as_raw(&self) -> &[u32] {
        &self.vals
    }

    pub fn is_zero(&self) -> bool {
        self.vals.iter().all(|&v| v == 0)
    }

    /// Sum of the components in `F_q` (the SFR structural invariant checks
    /// this against 0 for queries and q-1 for keys).
    pub fn component_sum(&self) -> u32 {
        self.vals
            .iter()
            .fold(0, |acc, &v| self.field.add_raw(acc, v))
    }

    pub fn add(&self, rhs: &FqVector) -> FqVector {
        self.zip_with(rhs, |f, a, b| f.add_raw(a, b))
    }

    pub fn sub(&self, rhs: &FqVector) -> FqVector {
        self.zip_with(rhs, |f, a, b| f.sub_raw(a, b))
    }

    pub fn neg(&self) -> FqVector {
        FqVector {
            field: self.field,
            vals: self.vals.iter().map(|&v| self.field.neg_raw(v)).collect(),
        }
    }

    pub fn scaled(&self, c: FieldElement) -> FqVector {
        assert_eq!(c.field(), self.field, "field context mismatch");
        FqVector {
            field: self.field,
            vals: self
                .vals
                .iter()
                .map(|&v| self.field.mul_raw(v, c.value()))
                .collect(),
        }
    }

    fn zip_with(&self, rhs: &FqVector, op: impl Fn(&Fq, u32, u32) -> u32) -> FqVector {
        assert_eq!(self.field, rhs.field, "field context mismatch");
        assert_eq!(self.len(), rhs.len(), "vector length mismatch");
        FqVector {
            field: self.field,
            vals: self
                .vals
                .iter()
                .zip(&rhs.vals)
                .map(|(&a, &b)| op(&self.field, a, b))
                .collect(),
        }
    }
}

/// A rectangular matrix over one field context, row-major.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FqMatrix {
    field: Fq,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl FqMatrix {
    pub fn zeros(field: Fq, rows: usize, cols: usize) -> Self {
        FqMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: Fq, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[FqVector]) -> Result<Self, LinalgError> {
        let first = rows.first().ok_or(LinalgError::Empty)?;
        let field = first.field();
        let cols = first.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.field() != field {
                return Err(LinalgError::ContextMismatch);
            }
            if r.len() != cols {
                return Err(LinalgError::Ragged {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r.as_raw());
        }
        Ok(FqMatrix {
            field,
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn field(&self) -> Fq {
        self.field
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        debug_assert!(v < self.field.modulus());
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> FqVector {
        FqVector {
            field: self.field,
            vals: self.data[r * self.cols..(r + 1) * self.cols].to_vec(),
        }
    }

    pub fn mul_vector(&self, x: &FqVector) -> Result<FqVector, LinalgError> {
        if x.field() != self.field {
            return Err(LinalgError::ContextMismatch);
        }
        if x.len() != self.cols {
            return Err(LinalgError::Dimension("matrix-vector shape"));
        }
        let f = self.field;
        let out = (0..self.rows)
            .map(|r| {
                (0..self.cols).fold(0u32, |acc, c| {
                    f.add_raw(acc, f.mul_raw(self.get(r, c), x.as_raw()[c]))
                })
            })
            .collect();
        Ok(FqVector {
            field: f,
            vals: out,
        })
    }
}

/// Dimension of the span of `vectors` over `F_q`.
pub fn rank(vectors: &[FqVector]) -> Result<usize, LinalgError> {
    let m = FqMatrix::from_rows(vectors)?;
    Ok(eliminate(m.field, m.rows, m.cols, m.data).pivot_cols.len())
}

/// The leader set: the lexicographically first maximal independent subset of
/// the query vectors, found by a lowest-index-first greedy scan. Users whose
/// vector is dependent on earlier kept vectors (including the zero vector)
/// are skipped. Returns ascending user indices.
pub fn leader_set(vectors: &[FqVector]) -> Result<Vec<usize>, LinalgError> {
    if vectors.is_empty() {
        return Err(LinalgError::Empty);
    }
    let field = vectors[0].field();
    let n = vectors[0].len();
    for v in vectors {
        if v.field() != field {
            return Err(LinalgError::ContextMismatch);
        }
        if v.len() != n {
            return Err(LinalgError::Ragged {
                expected: n,
                got: v.len(),
            });
        }
    }
    // Reduced basis rows, each normalized to leading coefficient 1 and
    // tagged with its pivot position.
    let mut basis: Vec<(usize, Vec<u32>)> = Vec::new();
    let mut leaders = Vec::new();
    for (k, v) in vectors.iter().enumerate() {
        let mut w = v.as_raw().to_vec();
        for (p, row) in &basis {
            let c = w[*p];
            if c != 0 {
                for (wi, ri) in w.iter_mut().zip(row) {
                    *wi = field.sub_raw(*wi, field.mul_raw(c, *ri));
                }
            }
        }
        if let Some(p) = w.iter().position(|&x| x != 0) {
            let inv = field.inv_raw(w[p]).expect("nonzero pivot");
            for wi in w.iter_mut() {
                *wi = field.mul_raw(*wi, inv);
            }
            basis.push((p, w));
            leaders.push(k);
        }
    }
    Ok(leaders)
}

/// Solves `A x = b` exactly. Returns `Ok(None)` when the system is
/// inconsistent. Among solutions, the one with all free variables pinned to
/// zero under reduced row-echelon pivoting is returned, so the result is
/// deterministic.
pub fn solve(a: &FqMatrix, b: &FqVector) -> Result<Option<FqVector>, LinalgError> {
    if b.field() != a.field {
        return Err(LinalgError::ContextMismatch);
    }
    if b.len() != a.rows {
        return Err(LinalgError::Dimension("rhs length must match row count"));
    }
    let f = a.field;
    let cols = a.cols + 1;
    let mut data = Vec::with_capacity(a.rows * cols);
    for r in 0..a.rows {
        data.extend_from_slice(&a.data[r * a.cols..(r + 1) * a.cols]);
        data.push(b.as_raw()[r]);
    }
    let red = eliminate(f, a.rows, cols, data);
    // Inconsistent iff some pivot landed in the augmented column.
    if red.pivot_cols.last() == Some(&a.cols) {
        return Ok(None);
    }
    let mut x = vec![0u32; a.cols];
    for (i, &c) in red.pivot_cols.iter().enumerate() {
        x[c] = red.data[i * cols + a.cols];
    }
    Ok(Some(FqVector { field: f, vals: x }))
}

struct Reduced {
    data: Vec<u32>,
    pivot_cols: Vec<usize>,
}

/// In-place reduced row echelon form over F_q.
fn eliminate(f: Fq, rows: usize, cols: usize, mut data: Vec<u32>) -> Reduced {
    let mut pivot_cols = Vec::new();
    let mut pr = 0usize;
    for pc in 0..cols {
        if pr == rows {
            break;
        }
        let Some(sel) = (pr..rows).find(|&r| data[r * cols + pc] != 0) else {
            continue;
        };
        if sel != pr {
            for c in 0..cols {
                data.swap(sel * cols + c, pr * cols + c);
            }
        }
        let inv = f.inv_raw(data[pr * cols + pc]).expect("nonzero pivot");
        for c in pc..cols {
            data[pr * cols + c] = f.mul_raw(data[pr * cols + c], inv);
        }
        for r in 0..rows {
            if r == pr {
                continue;
            }
            let factor = data[r * cols + pc];
            if factor != 0 {
                for c in pc..cols {
                    let sub = f.mul_raw(factor, data[pr * cols + c]);
                    data[r * cols + c] = f.sub_raw(data[r * cols + c], sub);
                }
            }
        }
        pivot_cols.push(pc);
        pr += 1;
    }
    Reduced { data, pivot_cols }
}
