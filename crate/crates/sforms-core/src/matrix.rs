//! Dense exact rational matrices: the only matrix type in the crate.
//!
//! Everything is `BigRational`-exact; determinants and inverses use fraction-
//! free / Bareiss-style Gaussian elimination, and all norm computations defer
//! to [`crate::arith`].

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{self, abs_nu, parse_rat, rat_to_string, Place, PlaceSet, Rat, Val};
use crate::error::{Error, Result};

/// A dense matrix over `ℚ` (row-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RMatrix {
    /// Matrix from row-major data.
    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Result<RMatrix> {
        let r = rows.len();
        if r == 0 {
            return Err(Error::Dimension("matrix needs at least one row".into()));
        }
        let c = rows[0].len();
        if c == 0 || rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged or empty matrix rows".into()));
        }
        Ok(RMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Matrix from integer row data (convenience).
    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<RMatrix> {
        RMatrix::from_rows(
            rows.iter()
                .map(|row| row.iter().map(|&x| arith::rat_i64(x)).collect())
                .collect(),
        )
    }

    /// `n × n` identity.
    pub fn identity(n: usize) -> RMatrix {
        let mut m = RMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = Rat::one();
        }
        m
    }

    /// Zero matrix.
    pub fn zero(rows: usize, cols: usize) -> RMatrix {
        RMatrix {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(entries: &[Rat]) -> RMatrix {
        let n = entries.len();
        let mut m = RMatrix::zero(n, n);
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    /// Number of rows.
    pub fn nrows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// `true` for square matrices.
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[Rat] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` as an owned vector.
    pub fn col(&self, j: usize) -> Vec<Rat> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    /// All entries (row-major).
    pub fn entries(&self) -> &[Rat] {
        &self.data
    }

    /// Transpose.
    pub fn transpose(&self) -> RMatrix {
        let mut t = RMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    /// Matrix product `self · other`.
    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RMatrix::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        let prod = a * b;
                        out[(i, j)] += prod;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Matrix–vector product.
    pub fn mul_vec(&self, v: &[Rat]) -> Result<Vec<Rat>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply {}×{} to a vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut acc = Rat::zero();
                for j in 0..self.cols {
                    if !self[(i, j)].is_zero() && !v[j].is_zero() {
                        acc += &self[(i, j)] * &v[j];
                    }
                }
                acc
            })
            .collect())
    }

    /// Entrywise sum.
    pub fn add(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("shape mismatch in addition".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(out)
    }

    /// Entrywise difference.
    pub fn sub(&self, other: &RMatrix) -> Result<RMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("shape mismatch in subtraction".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        Ok(out)
    }

    /// Scalar multiple.
    pub fn scale(&self, c: &Rat) -> RMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    /// Congruence action `ᵗg · self · g` (for Gram matrices).
    pub fn congruence(&self, g: &RMatrix) -> Result<RMatrix> {
        g.transpose().mul(self)?.mul(g)
    }

    /// Determinant by exact fraction-free elimination.
    pub fn det(&self) -> Result<Rat> {
        if !self.is_square() {
            return Err(Error::Dimension("determinant of non-square matrix".into()));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Rat::one();
        for k in 0..n {
            // partial pivot: first nonzero entry in column k at/below row k
            let pivot = (k..n).find(|&i| !m[(i, k)].is_zero());
            let pi = match pivot {
                None => return Ok(Rat::zero()),
                Some(pi) => pi,
            };
            if pi != k {
                m.swap_rows(pi, k);
                det = -det;
            }
            let pv = m[(k, k)].clone();
            det *= &pv;
            for i in (k + 1)..n {
                if m[(i, k)].is_zero() {
                    continue;
                }
                let factor = &m[(i, k)] / &pv;
                for j in k..n {
                    let sub = &factor * &m[(k, j)];
                    m[(i, j)] -= sub;
                }
            }
        }
        Ok(det)
    }

    /// Exact inverse; errors on singular input.
    pub fn inverse(&self) -> Result<RMatrix> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut m = self.clone();
        let mut inv = RMatrix::identity(n);
        for k in 0..n {
            let pivot = (k..n).find(|&i| !m[(i, k)].is_zero());
            let pi = pivot.ok_or_else(|| Error::Singular("matrix is singular".into()))?;
            if pi != k {
                m.swap_rows(pi, k);
                inv.swap_rows(pi, k);
            }
            let pv = m[(k, k)].clone();
            for j in 0..n {
                m[(k, j)] /= &pv;
                inv[(k, j)] /= &pv;
            }
            for i in 0..n {
                if i == k || m[(i, k)].is_zero() {
                    continue;
                }
                let factor = m[(i, k)].clone();
                for j in 0..n {
                    let s1 = &factor * &m[(k, j)];
                    m[(i, j)] -= s1;
                    let s2 = &factor * &inv[(k, j)];
                    inv[(i, j)] -= s2;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// `‖g‖_ν = max_{ij} |g_ij|_ν` (exact rational).
    pub fn nu_norm(&self, nu: Place) -> Rat {
        let mut best = Rat::zero();
        for e in &self.data {
            let a = abs_nu(e, nu);
            if a > best {
                best = a;
            }
        }
        best
    }

    /// `‖g‖_S = max_{ν ∈ S} ‖g‖_ν`.
    pub fn s_norm(&self, s: &PlaceSet) -> Rat {
        s.places()
            .into_iter()
            .map(|nu| self.nu_norm(nu))
            .max()
            .expect("S nonempty")
    }

    /// Matrix `S`-height `∏_{ν ∈ S} ‖g‖_ν` (max-norm at every place; exact).
    pub fn s_height(&self, s: &PlaceSet) -> Rat {
        s.places()
            .into_iter()
            .map(|nu| self.nu_norm(nu))
            .product()
    }

    /// `true` iff all entries are integers.
    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|e| e.denom().is_one())
    }

    /// `true` iff all entries are `p`-integral (valuation `≥ 0`).
    pub fn is_p_integral(&self, p: u64) -> Result<bool> {
        for e in &self.data {
            if let Val::Finite(v) = arith::padic_valuation(e, p)? {
                if v < 0 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// `true` iff all entries are `S`-integers (integral away from `S`).
    pub fn is_s_integral(&self, s: &PlaceSet) -> bool {
        self.data.iter().all(|e| {
            let mut den = e.denom().clone();
            for p in s.finite_places() {
                let pb = arith::Int::from(p);
                while (&den % &pb).is_zero() {
                    den /= &pb;
                }
            }
            den.is_one() || den == -arith::Int::one()
        })
    }

    /// `true` iff `∈ GL(d, ℤ_S)`: `S`-integral with `S`-unit determinant.
    pub fn is_gl_zs(&self, s: &PlaceSet) -> Result<bool> {
        if !self.is_square() || !self.is_s_integral(s) {
            return Ok(false);
        }
        let d = self.det()?;
        if d.is_zero() {
            return Ok(false);
        }
        Ok(arith::s_height_scalar(&d, s)? == Rat::one())
    }

    /// `true` iff `∈ GL(d, ℤ)`: integral with determinant `±1`.
    pub fn is_gl_z(&self) -> Result<bool> {
        if !self.is_square() || !self.is_integral() {
            return Ok(false);
        }
        let d = self.det()?;
        Ok(d.abs() == Rat::one())
    }

    /// Direct sum `self ⊕ other` (block diagonal).
    pub fn direct_sum(&self, other: &RMatrix) -> RMatrix {
        let mut out = RMatrix::zero(self.rows + other.rows, self.cols + other.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)].clone();
            }
        }
        for i in 0..other.rows {
            for j in 0..other.cols {
                out[(self.rows + i, self.cols + j)] = other[(i, j)].clone();
            }
        }
        out
    }

    /// Principal top-left `k × k` submatrix.
    pub fn leading_principal(&self, k: usize) -> Result<RMatrix> {
        if k == 0 || k > self.rows.min(self.cols) {
            return Err(Error::Dimension("bad principal block size".into()));
        }
        let mut out = RMatrix::zero(k, k);
        for i in 0..k {
            for j in 0..k {
                out[(i, j)] = self[(i, j)].clone();
            }
        }
        Ok(out)
    }

    /// `true` iff symmetric.
    pub fn is_symmetric(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                if self[(i, j)] != self[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// Render as nested string rows in canonical rational notation.
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(rat_to_string).collect())
            .collect()
    }

    /// Parse from nested string rows.
    pub fn from_string_rows(rows: &[Vec<String>]) -> Result<RMatrix> {
        let parsed: Result<Vec<Vec<Rat>>> = rows
            .iter()
            .map(|row| row.iter().map(|s| parse_rat(s)).collect())
            .collect();
        RMatrix::from_rows(parsed?)
    }
}

impl std::ops::Index<(usize, usize)> for RMatrix {
    type Output = Rat;
    fn index(&self, (i, j): (usize, usize)) -> &Rat {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rat {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", rat_to_string(&self[(i, j)]))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl Serialize for RMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_string_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<String>>::deserialize(deserializer)?;
        RMatrix::from_string_rows(&rows).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{rat_frac, rat_i64};

    fn m2(a: i64, b: i64, c: i64, d: i64) -> RMatrix {
        RMatrix::from_i64_rows(&[&[a, b], &[c, d]]).unwrap()
    }

    #[test]
    fn det_and_inverse() {
        let a = m2(2, 1, 1, 1);
        assert_eq!(a.det().unwrap(), rat_i64(1));
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), RMatrix::identity(2));
        // 3×3 with zero pivot forcing a swap
        let b = RMatrix::from_i64_rows(&[&[0, 1, 2], &[1, 0, 3], &[4, 5, 6]]).unwrap();
        assert_eq!(b.det().unwrap(), rat_i64(16));
        assert_eq!(b.mul(&b.inverse().unwrap()).unwrap(), RMatrix::identity(3));
        let sing = m2(1, 2, 2, 4);
        assert_eq!(sing.det().unwrap(), rat_i64(0));
        assert!(sing.inverse().is_err());
    }

    #[test]
    fn norms() {
        // ‖g‖₂ for the coset representative h₂ is exactly 4
        let h2 = RMatrix::from_rows(vec![
            vec![rat_frac(-5, 4), rat_frac(3, 4)],
            vec![rat_frac(-3, 4), rat_frac(5, 4)],
        ])
        .unwrap();
        assert_eq!(h2.nu_norm(Place::Prime(2)), rat_i64(4));
        assert_eq!(h2.nu_norm(Place::Infinity), rat_frac(5, 4));
        // |−5/4|₃ = 1 dominates the |±3/4|₃ = 1/3 entries
        assert_eq!(h2.nu_norm(Place::Prime(3)), rat_i64(1));
        let s = PlaceSet::new([2]).unwrap();
        assert_eq!(h2.s_norm(&s), rat_i64(4));
        assert_eq!(h2.s_height(&s), rat_i64(5));
    }

    #[test]
    fn integrality() {
        let a = m2(1, 2, 3, 4);
        assert!(a.is_integral());
        assert!(a.is_p_integral(5).unwrap());
        let b = RMatrix::from_rows(vec![
            vec![rat_frac(1, 2), rat_i64(0)],
            vec![rat_i64(0), rat_i64(2)],
        ])
        .unwrap();
        assert!(!b.is_integral());
        assert!(!b.is_p_integral(2).unwrap());
        assert!(b.is_p_integral(3).unwrap());
        let s2 = PlaceSet::new([2]).unwrap();
        assert!(b.is_s_integral(&s2));
        assert!(b.is_gl_zs(&s2).unwrap()); // det = 1, entries are ℤ[1/2]
        assert!(!b.is_gl_z().unwrap());
        assert!(RMatrix::identity(3).is_gl_z().unwrap());
    }

    #[test]
    fn congruence_and_blocks() {
        let q = m2(1, 0, 0, -1);
        let g = m2(1, 1, 0, 1);
        let r = q.congruence(&g).unwrap();
        assert_eq!(r, m2(1, 1, 1, 0));
        let ds = q.direct_sum(&RMatrix::identity(1));
        assert_eq!(ds.nrows(), 3);
        assert_eq!(ds[(2, 2)], rat_i64(1));
        assert_eq!(ds[(0, 2)], rat_i64(0));
        assert!(ds.is_symmetric());
    }

    #[test]
    fn serde_round_trip() {
        let h2 = RMatrix::from_rows(vec![
            vec![rat_frac(-5, 4), rat_frac(3, 4)],
            vec![rat_frac(-3, 4), rat_frac(5, 4)],
        ])
        .unwrap();
        let json = serde_json::to_string(&h2).unwrap();
        assert_eq!(json, r#"[["-5/4","3/4"],["-3/4","5/4"]]"#);
        let back: RMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h2);
    }
}
