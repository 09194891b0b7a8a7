//! Dense exact linear algebra over a field object, plus the integer-lattice
//! routines (Smith normal form, saturation) behind the characteristic-p
//! submodule constructions.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Field, PrimeField, Rationals};

/// Dense matrix over a field instance. Entries live in row-major order.
#[derive(Debug, Clone)]
pub struct Mat<K: Field> {
    pub field: K,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<K::Elem>,
}

impl<K: Field> PartialEq for Mat<K> {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl<K: Field> Mat<K> {
    pub fn zeros(field: K, rows: usize, cols: usize) -> Self {
        let data = vec![field.zero(); rows * cols];
        Mat {
            field,
            rows,
            cols,
            data,
        }
    }

    pub fn identity(field: K, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            let one = m.field.one();
            m.set(i, i, one);
        }
        m
    }

    pub fn from_fn(field: K, rows: usize, cols: usize, f: impl Fn(usize, usize) -> K::Elem) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat {
            field,
            rows,
            cols,
            data,
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &K::Elem {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: K::Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| self.field.is_zero(v))
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.field.clone(), self.cols, self.rows, |r, c| {
            self.at(c, r).clone()
        })
    }

    pub fn mul(&self, other: &Mat<K>) -> Mat<K> {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let f = &self.field;
        let mut out = Mat::zeros(f.clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if f.is_zero(a) {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = f.mul(a, other.at(k, j));
                    let cur = out.at(i, j).clone();
                    out.set(i, j, f.add(&cur, &prod));
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat<K>) -> Mat<K> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.field.clone(), self.rows, self.cols, |r, c| {
            self.field.add(self.at(r, c), other.at(r, c))
        })
    }

    pub fn sub(&self, other: &Mat<K>) -> Mat<K> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat::from_fn(self.field.clone(), self.rows, self.cols, |r, c| {
            self.field.sub(self.at(r, c), other.at(r, c))
        })
    }

    pub fn scale(&self, k: &K::Elem) -> Mat<K> {
        Mat::from_fn(self.field.clone(), self.rows, self.cols, |r, c| {
            self.field.mul(self.at(r, c), k)
        })
    }

    pub fn neg(&self) -> Mat<K> {
        Mat::from_fn(self.field.clone(), self.rows, self.cols, |r, c| {
            self.field.neg(self.at(r, c))
        })
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &Mat<K>) -> Mat<K> {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend(other.data.iter().cloned());
        Mat {
            field: self.field.clone(),
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    /// Concatenate columns.
    pub fn hstack(&self, other: &Mat<K>) -> Mat<K> {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.field.clone(), self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                other.at(r, c - self.cols).clone()
            }
        })
    }

    pub fn column(&self, c: usize) -> Vec<K::Elem> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn from_columns(field: K, rows: usize, cols: &[Vec<K::Elem>]) -> Mat<K> {
        Mat::from_fn(field, rows, cols.len(), |r, c| cols[c][r].clone())
    }

    /// Reduced row echelon form in place; returns pivot column indices.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut row = 0usize;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| !f.is_zero(self.at(r, col))) else {
                continue;
            };
            // swap rows
            for c in 0..self.cols {
                self.data.swap(pr * self.cols + c, row * self.cols + c);
            }
            let inv = f.inv(self.at(row, col)).expect("pivot nonzero");
            for c in col..self.cols {
                let v = f.mul(self.at(row, c), &inv);
                self.set(row, c, v);
            }
            for r in 0..self.rows {
                if r != row && !f.is_zero(self.at(r, col)) {
                    let factor = self.at(r, col).clone();
                    for c in col..self.cols {
                        let v = f.sub(self.at(r, c), &f.mul(&factor, self.at(row, c)));
                        self.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.rref_in_place().len()
    }

    /// Basis of the right kernel, as columns.
    pub fn kernel(&self) -> Mat<K> {
        let f = self.field.clone();
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut cols: Vec<Vec<K::Elem>> = Vec::new();
        for &fc in &free {
            let mut v = vec![f.zero(); self.cols];
            v[fc] = f.one();
            for (prow, &pcol) in pivots.iter().enumerate() {
                v[pcol] = f.neg(m.at(prow, fc));
            }
            cols.push(v);
        }
        Mat::from_columns(f, self.cols, &cols)
    }

    /// Solve self * x = rhs for every rhs column; None when inconsistent.
    pub fn solve(&self, rhs: &Mat<K>) -> Option<Mat<K>> {
        assert_eq!(self.rows, rhs.rows);
        let f = self.field.clone();
        let mut aug = self.hstack(rhs);
        let pivots = aug.rref_in_place();
        // Inconsistent when a pivot lands in the rhs block.
        if pivots.iter().any(|&c| c >= self.cols) {
            return None;
        }
        let mut x = Mat::zeros(f, self.cols, rhs.cols);
        for (prow, &pcol) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x.set(pcol, j, aug.at(prow, self.cols + j).clone());
            }
        }
        Some(x)
    }

    /// Columns of `self` forming a basis of the column space.
    pub fn column_space_basis(&self) -> Mat<K> {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let cols: Vec<Vec<K::Elem>> = pivots.iter().map(|&c| self.column(c)).collect();
        Mat::from_columns(self.field.clone(), self.rows, &cols)
    }

    /// Does the column span of `sub` lie inside the column span of `space`?
    pub fn spans_contain(space: &Mat<K>, sub: &Mat<K>) -> bool {
        assert_eq!(space.rows, sub.rows);
        space.rank() == space.hstack(sub).rank()
    }

    pub fn spans_equal(a: &Mat<K>, b: &Mat<K>) -> bool {
        Mat::spans_contain(a, b) && Mat::spans_contain(b, a)
    }
}

/// Dense integer matrix for lattice computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigInt>,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> IntMat {
        IntMat {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> IntMat {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> BigInt) -> IntMat {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        IntMat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: BigInt) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.at(i, k).is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.at(i, j) + self.at(i, k) * other.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> IntMat {
        IntMat::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    pub fn to_rational(&self) -> Mat<Rationals> {
        Mat::from_fn(Rationals, self.rows, self.cols, |r, c| {
            BigRational::from_integer(self.at(r, c).clone())
        })
    }

    pub fn to_prime_field(&self, f: PrimeField) -> Mat<PrimeField> {
        Mat::from_fn(f, self.rows, self.cols, |r, c| f.from_bigint(self.at(r, c)))
    }

    pub fn to_field<K: Field>(&self, field: &K) -> Mat<K> {
        Mat::from_fn(field.clone(), self.rows, self.cols, |r, c| {
            field.from_bigint(self.at(r, c))
        })
    }

    /// Exact conversion from a rational matrix that happens to be integral.
    pub fn from_rational(m: &Mat<Rationals>) -> Result<IntMat> {
        let mut out = IntMat::zeros(m.rows, m.cols);
        for r in 0..m.rows {
            for c in 0..m.cols {
                out.set(r, c, crate::scalar::rat_to_bigint(m.at(r, c))?);
            }
        }
        Ok(out)
    }

    /// Divide each column by its content (gcd), making columns primitive.
    pub fn primitivize_columns(&self) -> IntMat {
        let mut out = self.clone();
        for c in 0..self.cols {
            let mut g = BigInt::zero();
            for r in 0..self.rows {
                g = g.gcd(self.at(r, c));
            }
            if g.is_zero() || g.is_one() {
                continue;
            }
            for r in 0..self.rows {
                let v = self.at(r, c) / &g;
                out.set(r, c, v);
            }
        }
        out
    }

    /// Smith normal form restricted to what saturation needs: returns
    /// (p_inv, diag) with self = p_inv * D * q for unimodular transforms,
    /// where D has `diag` on its diagonal.
    pub fn smith_left_transform(&self) -> (IntMat, Vec<BigInt>) {
        let mut a = self.clone();
        let mut p_inv = IntMat::identity(self.rows);

        let n = a.rows.min(a.cols);
        for t in 0..n {
            loop {
                // Find a nonzero pivot in the remaining block.
                let mut pivot: Option<(usize, usize)> = None;
                let mut best: Option<BigInt> = None;
                for r in t..a.rows {
                    for c in t..a.cols {
                        let v = a.at(r, c);
                        if !v.is_zero() {
                            let mag = v.abs();
                            if best.as_ref().map(|b| &mag < b).unwrap_or(true) {
                                best = Some(mag);
                                pivot = Some((r, c));
                            }
                        }
                    }
                }
                let Some((pr, pc)) = pivot else {
                    return (p_inv, (0..t).map(|i| a.at(i, i).clone()).collect());
                };
                // Move pivot to (t, t).
                if pr != t {
                    a.swap_rows(pr, t);
                    p_inv.swap_cols(pr, t);
                }
                if pc != t {
                    a.swap_cols(pc, t);
                }
                // Clear column t with row operations.
                let mut dirty = false;
                for r in (t + 1)..a.rows {
                    if !a.at(r, t).is_zero() {
                        let q = a.at(r, t).div_floor(a.at(t, t));
                        if !q.is_zero() {
                            a.row_sub(r, t, &q);
                            p_inv.col_add(t, r, &q);
                        }
                        if !a.at(r, t).is_zero() {
                            dirty = true;
                        }
                    }
                }
                // Clear row t with column operations.
                for c in (t + 1)..a.cols {
                    if !a.at(t, c).is_zero() {
                        let q = a.at(t, c).div_floor(a.at(t, t));
                        if !q.is_zero() {
                            a.col_sub(c, t, &q);
                        }
                        if !a.at(t, c).is_zero() {
                            dirty = true;
                        }
                    }
                }
                if !dirty {
                    break;
                }
            }
        }
        let diag = (0..n).map(|i| a.at(i, i).clone()).collect();
        (p_inv, diag)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    /// row_r -= q * row_s
    fn row_sub(&mut self, r: usize, s: usize, q: &BigInt) {
        for c in 0..self.cols {
            let v = self.at(r, c) - q * self.at(s, c);
            self.set(r, c, v);
        }
    }

    /// col_c -= q * col_s
    fn col_sub(&mut self, c: usize, s: usize, q: &BigInt) {
        for r in 0..self.rows {
            let v = self.at(r, c) - q * self.at(r, s);
            self.set(r, c, v);
        }
    }

    /// col_dst += q * col_src (tracking inverse row operations).
    fn col_add(&mut self, dst: usize, src: usize, q: &BigInt) {
        for r in 0..self.rows {
            let v = self.at(r, dst) + q * self.at(r, src);
            self.set(r, dst, v);
        }
    }

    /// Z-basis (as columns) of the saturation of the column span:
    /// (span ⊗ Q) ∩ Z^rows.
    pub fn saturate_columns(&self) -> IntMat {
        if self.cols == 0 {
            return IntMat::zeros(self.rows, 0);
        }
        let (p_inv, diag) = self.smith_left_transform();
        let rank = diag.iter().filter(|d| !d.is_zero()).count();
        IntMat::from_fn(self.rows, rank, |r, c| p_inv.at(r, c).clone())
    }
}

/// Clear denominators of a rational matrix column by column and return the
/// primitive integer matrix spanning the same column lattice directions.
pub fn rational_columns_to_primitive_int(m: &Mat<Rationals>) -> IntMat {
    let mut out = IntMat::zeros(m.rows, m.cols);
    for c in 0..m.cols {
        let mut lcm = BigInt::one();
        for r in 0..m.rows {
            lcm = lcm.lcm(m.at(r, c).denom());
        }
        for r in 0..m.rows {
            let v = m.at(r, c) * BigRational::from_integer(lcm.clone());
            out.set(r, c, crate::scalar::rat_to_bigint(&v).expect("cleared"));
        }
    }
    out.primitivize_columns()
}

/// Quotient bookkeeping for one weight space: a basis of V/S together with
/// the projection in coordinates.
pub struct QuotientSpace<K: Field> {
    /// dim V x dim(V/S): representative columns.
    pub section: Mat<K>,
    /// dim(V/S) x dim V: projection matrix.
    pub projection: Mat<K>,
}

/// Build the quotient of the standard space k^n by the column span of `sub`.
pub fn quotient_space<K: Field>(field: &K, n: usize, sub: &Mat<K>) -> Result<QuotientSpace<K>> {
    assert_eq!(sub.rows, n);
    let basis = sub.column_space_basis();
    let r = basis.cols;
    // Choose complement coordinates: rows that are NOT pivot rows of the
    // column-echelon form, found via rref of the transpose.
    let mut bt = basis.transpose();
    let pivot_rows = bt.rref_in_place();
    let free_rows: Vec<usize> = (0..n).filter(|r| !pivot_rows.contains(r)).collect();
    debug_assert_eq!(free_rows.len(), n - r);
    let section = Mat::from_fn(field.clone(), n, free_rows.len(), |row, c| {
        if row == free_rows[c] {
            field.one()
        } else {
            field.zero()
        }
    });
    // [basis | section] is invertible; projection reads off the section part.
    let full = basis.hstack(&section);
    if full.rank() != n {
        return Err(Error::Inconsistency(
            "complement choice failed to span".into(),
        ));
    }
    let rhs = Mat::identity(field.clone(), n);
    let x = full.solve(&rhs).ok_or_else(|| {
        Error::Inconsistency("quotient projection solve failed".into())
    })?;
    // x rows r..n give the coordinates along the section columns.
    let projection = Mat::from_fn(field.clone(), free_rows.len(), n, |row, c| {
        x.at(r + row, c).clone()
    });
    Ok(QuotientSpace {
        section,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qm(rows: usize, cols: usize, vals: &[i64]) -> Mat<Rationals> {
        Mat::from_fn(Rationals, rows, cols, |r, c| {
            BigRational::from_integer(BigInt::from(vals[r * cols + c]))
        })
    }

    #[test]
    fn rank_kernel_solve_roundtrip() {
        let a = qm(3, 3, &[1, 2, 3, 2, 4, 6, 1, 0, 1]);
        assert_eq!(a.rank(), 2);
        let k = a.kernel();
        assert_eq!(k.cols, 1);
        assert!(a.mul(&k).is_zero());

        let b = qm(3, 1, &[6, 12, 2]);
        let x = a.solve(&b).unwrap();
        assert_eq!(a.mul(&x), b);

        let inconsistent = qm(3, 1, &[1, 0, 0]);
        assert!(a.solve(&inconsistent).is_none());
    }

    #[test]
    fn span_containments() {
        let space = qm(3, 2, &[1, 0, 0, 1, 0, 0]);
        let inside = qm(3, 1, &[2, 3, 0]);
        let outside = qm(3, 1, &[0, 0, 1]);
        assert!(Mat::spans_contain(&space, &inside));
        assert!(!Mat::spans_contain(&space, &outside));
    }

    #[test]
    fn smith_saturation_divides_out_content() {
        // Columns span 2Z x 3Z diag-ish sublattice; saturation is the full
        // sublattice spanned by the coordinate directions involved.
        let a = IntMat::from_fn(3, 2, |r, c| {
            BigInt::from(match (r, c) {
                (0, 0) => 2,
                (1, 1) => 3,
                _ => 0,
            })
        });
        let sat = a.saturate_columns();
        assert_eq!(sat.cols, 2);
        // e1 and e2 must lie in the saturated lattice.
        let rat = sat.to_rational();
        let e1 = qm(3, 1, &[1, 0, 0]);
        let e2 = qm(3, 1, &[0, 1, 0]);
        assert!(Mat::spans_contain(&rat, &e1));
        assert!(Mat::spans_contain(&rat, &e2));
        let e3 = qm(3, 1, &[0, 0, 1]);
        assert!(!Mat::spans_contain(&rat, &e3));
    }

    #[test]
    fn saturation_of_skew_lattice() {
        // Column (2, 4): saturation should contain (1, 2).
        let a = IntMat::from_fn(2, 1, |r, _| BigInt::from(if r == 0 { 2 } else { 4 }));
        let sat = a.saturate_columns();
        assert_eq!(sat.cols, 1);
        let g = sat.at(0, 0).gcd(sat.at(1, 0));
        assert!(g.is_one());
        // Direction preserved.
        assert_eq!(sat.at(1, 0), &(sat.at(0, 0) * 2));
    }

    #[test]
    fn quotient_space_shapes() {
        let sub = qm(3, 1, &[1, 1, 0]);
        let q = quotient_space(&Rationals, 3, &sub).unwrap();
        assert_eq!(q.projection.rows, 2);
        // projection kills the subspace
        assert!(q.projection.mul(&sub).is_zero());
        // projection * section = identity on the quotient
        let id = q.projection.mul(&q.section);
        assert_eq!(id, Mat::identity(Rationals, 2));
    }

    #[test]
    fn prime_field_matrices() {
        let f = PrimeField::new(3).unwrap();
        let a = Mat::from_fn(f, 2, 2, |r, c| ((r + c) % 3) as u64);
        assert_eq!(a.rank(), 2);
        let k = a.kernel();
        assert_eq!(k.cols, 0);
    }
}
