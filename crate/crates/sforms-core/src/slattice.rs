//! `ℤ_S`-lattices in `ℚ^d`: exact covolumes, systoles, reduced bases,
//! small-covolume submodules, and the exact `(C, θ)`-goodness checker for
//! `p`-adic polynomials.
//!
//! A lattice is `g·ℤ_S^d` for an invertible rational basis matrix `g`
//! (columns are the basis vectors). The covolume is the `S`-height of
//! `det g`; vector heights carry the euclidean norm at `∞` and are compared
//! through their exact squares — no square root is ever taken.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{
    is_prime, padic_valuation, rat_frac, rat_i64, s_height, s_height_scalar, HeightMode, Int,
    Place, PlaceSet, Rat, SHeightValue,
};
use crate::error::{Error, Result};
use crate::matrix::RMatrix;

/// Box-sweep size cap for enumerations (number of integer points).
const SWEEP_POINT_CAP: u128 = 4_000_000;

// ===========================================================================
// SLattice
// ===========================================================================

/// A full-rank `ℤ_S`-lattice `g·ℤ_S^d ⊂ ℚ^d`.
#[derive(Debug, Clone)]
pub struct SLattice {
    s: PlaceSet,
    basis: RMatrix,
    covolume: Rat,
    normalized_at: Vec<(u64, bool)>,
}

impl SLattice {
    /// Lattice with the given basis matrix (columns are basis vectors).
    pub fn new(s: PlaceSet, basis: RMatrix) -> Result<SLattice> {
        if !basis.is_square() || basis.nrows() == 0 {
            return Err(Error::Dimension("lattice basis must be square and nonempty".into()));
        }
        let det = basis.det()?;
        if det.is_zero() {
            return Err(Error::Degenerate("lattice basis is singular".into()));
        }
        let covolume = s_height_scalar(&det, &s)?;
        let mut normalized_at = Vec::new();
        for p in s.finite_places() {
            let flag = basis.is_p_integral(p)?
                && padic_valuation(&det, p)?.finite() == Some(0);
            normalized_at.push((p, flag));
        }
        Ok(SLattice {
            s,
            basis,
            covolume,
            normalized_at,
        })
    }

    /// The standard lattice `ℤ_S^d`.
    pub fn standard(s: PlaceSet, d: usize) -> Result<SLattice> {
        SLattice::new(s, RMatrix::identity(d))
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// The place set.
    pub fn place_set(&self) -> &PlaceSet {
        &self.s
    }

    /// The basis matrix.
    pub fn basis(&self) -> &RMatrix {
        &self.basis
    }

    /// Exact covolume: the `S`-height of `det basis`.
    pub fn covolume(&self) -> &Rat {
        &self.covolume
    }

    /// Whether the basis lies in `GL(d, ℤ_p)` at a finite place of `S`.
    pub fn is_normalized_at(&self, p: u64) -> Option<bool> {
        self.normalized_at
            .iter()
            .find(|(q, _)| *q == p)
            .map(|(_, f)| *f)
    }

    /// Membership test: `v ∈ g·ℤ_S^d`.
    pub fn contains(&self, v: &[Rat]) -> Result<bool> {
        if v.len() != self.dim() {
            return Err(Error::Dimension("vector length must match the lattice".into()));
        }
        let x = self.basis.inverse()?.mul_vec(v)?;
        Ok(x.iter().all(|c| is_s_integral_scalar(c, &self.s)))
    }

    /// Covolume of the `ℤ_S`-span of the given lattice vectors (ambient
    /// coordinates): the `S`-height of their wedge-coordinate vector, with
    /// the euclidean norm at `∞` carried as an exact square.
    pub fn submodule_covolume(&self, vectors: &[Vec<Rat>]) -> Result<SHeightValue> {
        let d = self.dim();
        let k = vectors.len();
        if k == 0 || k > d {
            return Err(Error::Dimension("need 1 ≤ k ≤ d vectors".into()));
        }
        for v in vectors {
            if v.len() != d {
                return Err(Error::Dimension("vector length must match the lattice".into()));
            }
            if !self.contains(v)? {
                return Err(Error::Precondition("vector lies outside the lattice".into()));
            }
        }
        let w = wedge_coords(vectors)?;
        if w.iter().all(|c| c.is_zero()) {
            return Err(Error::Precondition("vectors are linearly dependent".into()));
        }
        s_height(&w, &self.s, HeightMode::EuclideanAtInfinity)
    }

    /// Minimal `S`-height over nonzero lattice vectors, by exact box
    /// enumeration of primitive coordinate vectors. The result is certified
    /// complete when the enumeration radius reaches the threshold derived
    /// from the singular-value and finite-norm lower bounds; otherwise the
    /// `certified` flag is false and the value is an upper bound attained by
    /// the witness.
    pub fn systole(&self, radius_budget: i64) -> Result<Systole> {
        if radius_budget < 1 {
            return Err(Error::Precondition("radius budget must be ≥ 1".into()));
        }
        let d = self.dim();
        // initial upper bound from the basis columns (coordinates e_j)
        let mut best_sq: Option<Rat> = None;
        let mut best_x = vec![0i64; d];
        for j in 0..d {
            let col = self.basis.col(j);
            let h = s_height(&col, &self.s, HeightMode::EuclideanAtInfinity)?;
            let sq = h.square();
            if best_sq.as_ref().is_none_or(|b| &sq < b) {
                best_sq = Some(sq);
                best_x = (0..d).map(|i| i64::from(i == j)).collect();
            }
        }
        let h0_sq = best_sq.expect("nonempty basis");
        let needed = certified_radius(&self.basis, &self.s, &h0_sq)?;
        let certified = needed <= Int::from(radius_budget);
        let b = if certified {
            needed.to_i64().expect("small radius")
        } else {
            radius_budget
        }
        .max(1);
        check_box(d, b)?;
        let mut best_sq = h0_sq;
        sweep_primitive_box(d, b, |x| {
            let xr: Vec<Rat> = x.iter().map(|&c| rat_i64(c)).collect();
            let v = self.basis.mul_vec(&xr)?;
            let sq = s_height(&v, &self.s, HeightMode::EuclideanAtInfinity)?.square();
            if sq < best_sq {
                best_sq = sq;
                best_x = x.to_vec();
            }
            Ok(())
        })?;
        let xr: Vec<Rat> = best_x.iter().map(|&c| rat_i64(c)).collect();
        let witness = self.basis.mul_vec(&xr)?;
        let alpha1 = s_height(&witness, &self.s, HeightMode::EuclideanAtInfinity)?;
        Ok(Systole {
            alpha1,
            witness,
            coordinates: best_x,
            certified,
            radius: b,
        })
    }

    /// A reduced basis of a covolume-1 lattice: unimodular at every finite
    /// place of `S` (denominators cleared by unit-determinant column
    /// operations) and with the archimedean entry norm within the explicit
    /// basis bound `√d·(2/√3)^{(d−1)²/2}·max{1, α₁^{−(d−1)}}`, verified
    /// exactly through fourth powers against an enumerated systole value.
    pub fn mahler_basis(&self) -> Result<RMatrix> {
        if !self.covolume.is_one() {
            return Err(Error::Precondition("reduced basis requires covolume 1".into()));
        }
        let d = self.dim();
        let mut g = self.basis.clone();
        for p in self.s.finite_places() {
            g = p_reduce(g, p)?;
        }
        // now every finite place of S is unimodular, so |det|_∞ = 1
        let det = g.det()?;
        if det.clone().abs() != Rat::one() {
            return Err(Error::Internal("place reduction did not reach det ±1".into()));
        }
        let cols: Vec<Vec<Rat>> = (0..d).map(|j| g.col(j)).collect();
        let reduced_cols = lll_columns(cols)?;
        let reduced = matrix_from_cols(&reduced_cols)?;
        // the change of basis must be an S-unit transformation
        let u = self.basis.inverse()?.mul(&reduced)?;
        if !u.is_gl_zs(&self.s)? {
            return Err(Error::Internal("basis change left the S-unit group".into()));
        }
        for p in self.s.finite_places() {
            let ok = reduced.is_p_integral(p)?
                && padic_valuation(&reduced.det()?, p)?.finite() == Some(0);
            if !ok {
                return Err(Error::Internal("reduction lost finite-place unimodularity".into()));
            }
        }
        // archimedean bound, compared in fourth powers: any enumerated
        // systole value is an upper bound for α₁, which only tightens the
        // inequality being verified.
        let probe = SLattice::new(self.s.clone(), reduced.clone())?;
        let alpha_sq = probe.systole(12)?.alpha1.square();
        let n = reduced.nu_norm(Place::Infinity);
        let lhs = &n * &n * &n * &n;
        let e = ((d - 1) * (d - 1)) as i64;
        let mut rhs = rat_i64((d * d) as i64) * pow_rat(&rat_frac(4, 3), e);
        if alpha_sq < Rat::one() {
            let inv = alpha_sq.recip();
            rhs *= pow_rat(&inv, 2 * (d as i64 - 1));
        }
        if lhs > rhs {
            return Err(Error::Internal("reduced basis misses the norm bound".into()));
        }
        Ok(reduced)
    }

    /// All primitive rank-`k` submodules of covolume `< 1`, for `d ≤ 3`.
    /// Enumeration runs over primitive wedge-coordinate vectors inside an
    /// exactly certified box, so the returned list is complete.
    pub fn submodules_below_one(&self, k: usize) -> Result<Vec<Submodule>> {
        let d = self.dim();
        if d > 3 {
            return Err(Error::Budget("submodule enumeration is limited to d ≤ 3".into()));
        }
        if k == 0 || k > d {
            return Err(Error::Dimension("need 1 ≤ k ≤ d".into()));
        }
        if k == d {
            let cols: Vec<Vec<Rat>> = (0..d).map(|j| self.basis.col(j)).collect();
            if self.covolume < Rat::one() {
                let covolume = self.submodule_covolume(&cols)?;
                return Ok(vec![Submodule {
                    rank: d,
                    generators: cols,
                    wedge: vec![1],
                    covolume,
                }]);
            }
            return Ok(Vec::new());
        }
        let m = compound_matrix(&self.basis, k)?;
        let needed = certified_radius(&m, &self.s, &Rat::one())?;
        let b = needed
            .to_i64()
            .ok_or_else(|| Error::Budget("certified enumeration radius too large".into()))?
            .max(1);
        let n = m.nrows();
        check_box(n, b)?;
        let mut out: Vec<Submodule> = Vec::new();
        sweep_primitive_box(n, b, |y| {
            let yr: Vec<Rat> = y.iter().map(|&c| rat_i64(c)).collect();
            let w = m.mul_vec(&yr)?;
            let h = s_height(&w, &self.s, HeightMode::EuclideanAtInfinity)?;
            if h.square() < Rat::one() {
                let coords = wedge_generators(d, k, y)?;
                let mut generators = Vec::new();
                for x in &coords {
                    let xr: Vec<Rat> = x.iter().map(|&c| rat_i64(c)).collect();
                    generators.push(self.basis.mul_vec(&xr)?);
                }
                out.push(Submodule {
                    rank: k,
                    generators,
                    wedge: y.to_vec(),
                    covolume: h,
                });
            }
            Ok(())
        })?;
        out.sort_by(|a, b| {
            a.covolume
                .square()
                .cmp(&b.covolume.square())
                .then_with(|| a.wedge.cmp(&b.wedge))
        });
        Ok(out)
    }
}

/// Result of a systole enumeration.
#[derive(Debug, Clone)]
pub struct Systole {
    /// The minimal height found (exact square inside).
    pub alpha1: SHeightValue,
    /// A lattice vector attaining it, in ambient coordinates.
    pub witness: Vec<Rat>,
    /// Its primitive coordinate vector.
    pub coordinates: Vec<i64>,
    /// `true` when the enumeration radius certifies global minimality.
    pub certified: bool,
    /// The box radius actually swept.
    pub radius: i64,
}

/// A primitive submodule found by [`SLattice::submodules_below_one`].
#[derive(Debug, Clone)]
pub struct Submodule {
    /// Rank.
    pub rank: usize,
    /// Spanning lattice vectors in ambient coordinates.
    pub generators: Vec<Vec<Rat>>,
    /// Primitive wedge-coordinate vector (lexicographic row subsets).
    pub wedge: Vec<i64>,
    /// Exact covolume.
    pub covolume: SHeightValue,
}

// ===========================================================================
// enumeration machinery
// ===========================================================================

fn is_s_integral_scalar(c: &Rat, s: &PlaceSet) -> bool {
    let mut den = c.denom().clone();
    for p in s.finite_places() {
        let pi = Int::from(p);
        while (&den % &pi).is_zero() {
            den /= &pi;
        }
    }
    den.is_one() || den == -Int::one()
}

/// Lexicographic `k`-subsets of `{0, …, d−1}`.
fn row_subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}

/// Wedge coordinates of `k` vectors in `ℚ^d`: all `k×k` minors, rows in
/// lexicographic subset order.
fn wedge_coords(vectors: &[Vec<Rat>]) -> Result<Vec<Rat>> {
    let k = vectors.len();
    let d = vectors[0].len();
    let mut out = Vec::new();
    for rows in row_subsets(d, k) {
        let m = RMatrix::from_rows(
            rows.iter()
                .map(|&i| (0..k).map(|c| vectors[c][i].clone()).collect())
                .collect(),
        )?;
        out.push(m.det()?);
    }
    Ok(out)
}

/// The `k`-th compound matrix: entry `(R, C)` is the minor of `g` on row
/// subset `R` and column subset `C` (both lexicographic), so the column at
/// `C` holds the wedge coordinates of the image of `e_C`.
fn compound_matrix(g: &RMatrix, k: usize) -> Result<RMatrix> {
    let d = g.nrows();
    let subsets = row_subsets(d, k);
    let mut rows = Vec::new();
    for r in &subsets {
        let mut row = Vec::new();
        for c in &subsets {
            let m = RMatrix::from_rows(
                r.iter()
                    .map(|&i| c.iter().map(|&j| g[(i, j)].clone()).collect())
                    .collect(),
            )?;
            row.push(m.det()?);
        }
        rows.push(row);
    }
    RMatrix::from_rows(rows)
}

/// Exact lower bound for the squared smallest singular value:
/// `det(m)² / ‖m‖_F^{2(n−1)}`.
fn sigma_min_sq_lower(m: &RMatrix) -> Result<Rat> {
    let det = m.det()?;
    let det_sq = &det * &det;
    let mut frob = Rat::zero();
    for e in m.entries() {
        frob += e * e;
    }
    let n = m.nrows();
    let mut denom = Rat::one();
    for _ in 0..(n - 1) {
        denom *= &frob;
    }
    Ok(det_sq / denom)
}

/// Squared product over `p ∈ S_f` of the lower bounds `1/‖m⁻¹‖_p` for the
/// `p`-norm of the image of a primitive integer vector.
fn finite_min_factor_sq(m: &RMatrix, s: &PlaceSet) -> Result<Rat> {
    let inv = m.inverse()?;
    let mut acc = Rat::one();
    for p in s.finite_places() {
        let norm = inv.nu_norm(Place::Prime(p));
        acc /= &norm * &norm;
    }
    Ok(acc)
}

/// Smallest integer `B` with `B² ≥ r`.
fn isqrt_ceil_rat(r: &Rat) -> Int {
    if !r.is_positive() {
        return Int::zero();
    }
    let c = r.ceil().to_integer();
    let mut b = c.sqrt();
    if &b * &b < c {
        b += 1;
    }
    b
}

/// Box radius beyond which every primitive integer vector maps to a height
/// `> sqrt(h_sq)`: outside the box, `ℋ(m·y)² > σ²_min·F²_min·B² ≥ h_sq`.
fn certified_radius(m: &RMatrix, s: &PlaceSet, h_sq: &Rat) -> Result<Int> {
    let sigma = sigma_min_sq_lower(m)?;
    let fmin = finite_min_factor_sq(m, s)?;
    let need = h_sq / (sigma * fmin);
    Ok(isqrt_ceil_rat(&need).max(Int::one()))
}

fn check_box(n: usize, b: i64) -> Result<()> {
    let side = 2u128 * b as u128 + 1;
    let mut points = 1u128;
    for _ in 0..n {
        points = points.saturating_mul(side);
    }
    if points > SWEEP_POINT_CAP {
        return Err(Error::Budget(format!(
            "enumeration box of {points} points exceeds the cap"
        )));
    }
    Ok(())
}

fn gcd_i64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Visit every primitive vector in the box `|y_i| ≤ b` once, up to sign
/// (first nonzero coordinate positive).
fn sweep_primitive_box<F: FnMut(&[i64]) -> Result<()>>(
    n: usize,
    b: i64,
    mut f: F,
) -> Result<()> {
    let mut y = vec![-b; n];
    loop {
        if let Some(&first) = y.iter().find(|&&c| c != 0) {
            if first > 0 {
                let g = y.iter().fold(0i64, |acc, &c| gcd_i64(acc, c));
                if g == 1 {
                    f(&y)?;
                }
            }
        }
        let mut i = 0;
        loop {
            if i == n {
                return Ok(());
            }
            y[i] += 1;
            if y[i] <= b {
                break;
            }
            y[i] = -b;
            i += 1;
        }
    }
}

/// Integer spanning vectors (coordinate space) of the primitive submodule
/// with the given wedge vector.
fn wedge_generators(d: usize, k: usize, y: &[i64]) -> Result<Vec<Vec<i64>>> {
    if k == 1 {
        return Ok(vec![y.to_vec()]);
    }
    debug_assert!(d == 3 && k == 2);
    // lex wedge coordinates (y_12, y_13, y_23) ↔ normal n = (y_23, −y_13, y_12)
    let n = [y[2], -y[1], y[0]];
    let rows = plane_basis(&n);
    // orientation check: the wedge of the returned plane basis is ±y
    debug_assert!({
        let m01 = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
        let m02 = rows[0][0] * rows[1][2] - rows[0][2] * rows[1][0];
        let m12 = rows[0][1] * rows[1][2] - rows[0][2] * rows[1][1];
        (m01, m02, m12) == (y[0], y[1], y[2]) || (m01, m02, m12) == (-y[0], -y[1], -y[2])
    });
    Ok(rows.into_iter().map(|r| r.to_vec()).collect())
}

/// Basis of `{x ∈ ℤ³ : x·n = 0}` for primitive `n`, via a unimodular
/// transform taking `n` to `±e₁`.
fn plane_basis(n: &[i64; 3]) -> [[i64; 3]; 2] {
    let mut u = [[1i128, 0, 0], [0, 1, 0], [0, 0, 1]];
    let mut v = [n[0] as i128, n[1] as i128, n[2] as i128];
    for j in 1..3 {
        let (a, b) = (v[0], v[j]);
        if b == 0 {
            continue;
        }
        let (g, x, w) = ext_gcd_i128(a, b);
        // rows 0 and j of u get the unimodular 2×2 [[x, w], [−b/g, a/g]]
        let (r0, rj): (Vec<i128>, Vec<i128>) = (0..3)
            .map(|c| (x * u[0][c] + w * u[j][c], (-b / g) * u[0][c] + (a / g) * u[j][c]))
            .unzip();
        u[0].copy_from_slice(&r0);
        u[j].copy_from_slice(&rj);
        v[0] = g;
        v[j] = 0;
    }
    debug_assert!(v[0].abs() == 1 && v[1] == 0 && v[2] == 0);
    let to_row = |r: &[i128; 3]| -> [i64; 3] {
        [r[0] as i64, r[1] as i64, r[2] as i64]
    };
    [to_row(&u[1]), to_row(&u[2])]
}

fn ext_gcd_i128(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        let s = if a < 0 { -1 } else { 1 };
        return (a.abs(), s, 0);
    }
    let (g, x, y) = ext_gcd_i128(b, a.rem_euclid(b));
    (g, y, x - (a.div_euclid(b)) * y)
}

fn matrix_from_cols(cols: &[Vec<Rat>]) -> Result<RMatrix> {
    let d = cols.len();
    RMatrix::from_rows(
        (0..d)
            .map(|i| cols.iter().map(|c| c[i].clone()).collect())
            .collect(),
    )
}

fn pow_rat(x: &Rat, e: i64) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e.unsigned_abs() {
        acc *= x;
    }
    if e < 0 {
        acc.recip()
    } else {
        acc
    }
}

// ===========================================================================
// place reduction and exact basis reduction
// ===========================================================================

/// Turn the basis into an element of `GL(d, ℤ_p)` by unit-determinant column
/// operations over `ℤ[1/p]` (and a global `p`-power scaling, which is a unit
/// of `ℤ_S`): first clear `p`-denominators, then repeatedly fold a kernel
/// combination mod `p` into one column and divide it by `p`, which lowers
/// `v_p(det)` by exactly 1.
fn p_reduce(g: RMatrix, p: u64) -> Result<RMatrix> {
    let mut minv: i64 = 0;
    for e in g.entries() {
        if !e.is_zero() {
            minv = minv.min(padic_valuation(e, p)?.finite().expect("nonzero"));
        }
    }
    let mut g = if minv < 0 {
        g.scale(&Rat::from(Int::from(p).pow((-minv) as u32)))
    } else {
        g
    };
    let d = g.nrows();
    loop {
        let det = g.det()?;
        let v = padic_valuation(&det, p)?.finite().expect("nonsingular");
        debug_assert!(v >= 0);
        if v == 0 {
            break;
        }
        let c = mod_p_kernel(&g, p)?;
        let j0 = c
            .iter()
            .position(|&x| x == 1)
            .ok_or_else(|| Error::Internal("kernel vector lost its pivot".into()))?;
        let pr = Rat::from(Int::from(p));
        for i in 0..d {
            let mut acc = Rat::zero();
            for (j, &cj) in c.iter().enumerate() {
                if cj != 0 {
                    acc += g[(i, j)].clone() * rat_i64(cj as i64);
                }
            }
            g[(i, j0)] = acc / &pr;
        }
        debug_assert!(g.is_p_integral(p)?);
    }
    Ok(g)
}

/// A nonzero kernel vector of `g mod p`, normalized so that one coordinate
/// is exactly 1; requires `p | det` and `p`-integral entries.
fn mod_p_kernel(g: &RMatrix, p: u64) -> Result<Vec<u64>> {
    let d = g.nrows();
    let mut a = vec![vec![0u64; d]; d];
    for i in 0..d {
        for j in 0..d {
            a[i][j] = residue_mod_p(&g[(i, j)], p)?;
        }
    }
    // reduced row echelon form over 𝔽_p
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; d];
    let mut row = 0;
    for col in 0..d {
        let Some(r) = (row..d).find(|&r| a[r][col] != 0) else {
            continue;
        };
        a.swap(row, r);
        let inv = mod_inv_u64(a[row][col], p)?;
        for x in a[row].iter_mut() {
            *x = mulmod(*x, inv, p);
        }
        for r2 in 0..d {
            if r2 != row && a[r2][col] != 0 {
                let f = a[r2][col];
                for c2 in 0..d {
                    let sub = mulmod(f, a[row][c2], p);
                    a[r2][c2] = (a[r2][c2] + p - sub) % p;
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
        if row == d {
            break;
        }
    }
    let free = pivot_of_col
        .iter()
        .position(|c| c.is_none())
        .ok_or_else(|| Error::Internal("expected a singular matrix mod p".into()))?;
    let mut x = vec![0u64; d];
    x[free] = 1;
    for (col, pr) in pivot_of_col.iter().enumerate() {
        if let Some(r) = pr {
            x[col] = (p - a[*r][free] % p) % p;
        }
    }
    Ok(x)
}

fn residue_mod_p(q: &Rat, p: u64) -> Result<u64> {
    let pi = Int::from(p);
    let num = q.numer().mod_floor(&pi).to_u64().expect("residue");
    let den = q.denom().mod_floor(&pi).to_u64().expect("residue");
    if den == 0 {
        return Err(Error::Precondition("entry is not p-integral".into()));
    }
    Ok(mulmod(num, mod_inv_u64(den, p)?, p))
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn mod_inv_u64(a: u64, m: u64) -> Result<u64> {
    let (g, x, _) = ext_gcd_i128(a as i128, m as i128);
    if g != 1 {
        return Err(Error::Internal("non-invertible residue".into()));
    }
    Ok(x.rem_euclid(m as i128) as u64)
}

fn round_nearest(x: &Rat) -> Rat {
    (x + rat_frac(1, 2)).floor()
}

/// Exact Gram–Schmidt data: `μ` (row-lower-triangular) and the squared
/// orthogonalized norms.
fn gso(b: &[Vec<Rat>]) -> (Vec<Vec<Rat>>, Vec<Rat>) {
    let d = b.len();
    let n = b[0].len();
    let mut star: Vec<Vec<Rat>> = Vec::with_capacity(d);
    let mut mu = vec![vec![Rat::zero(); d]; d];
    let mut norms = Vec::with_capacity(d);
    for i in 0..d {
        let mut v = b[i].clone();
        for j in 0..i {
            let mut dot = Rat::zero();
            for t in 0..n {
                dot += &b[i][t] * &star[j][t];
            }
            let m = dot / &norms[j];
            for t in 0..n {
                let sub = &m * &star[j][t];
                v[t] -= sub;
            }
            mu[i][j] = m;
        }
        let mut nsq = Rat::zero();
        for t in 0..n {
            nsq += &v[t] * &v[t];
        }
        norms.push(nsq);
        star.push(v);
    }
    (mu, norms)
}

/// Exact basis reduction of the columns at the sharpest exchange threshold:
/// size reduction to `|μ| ≤ 1/2` plus the exchange condition
/// `‖b*_k‖² ≥ (1 − μ²)‖b*_{k−1}‖²`. Terminates because each exchange
/// strictly decreases a discrete positive potential.
fn lll_columns(mut b: Vec<Vec<Rat>>) -> Result<Vec<Vec<Rat>>> {
    let d = b.len();
    if d <= 1 {
        return Ok(b);
    }
    let mut k = 1;
    let mut guard = 0usize;
    while k < d {
        guard += 1;
        if guard > 200_000 {
            return Err(Error::Internal("basis reduction did not terminate".into()));
        }
        let (mu, norms) = gso(&b);
        let mut mu_k = mu[k].clone();
        for j in (0..k).rev() {
            let r = round_nearest(&mu_k[j]);
            if !r.is_zero() {
                for t in 0..b[j].len() {
                    let sub = &r * &b[j][t];
                    b[k][t] -= sub;
                }
                for l in 0..j {
                    let sub = &r * &mu[j][l];
                    mu_k[l] -= sub;
                }
                mu_k[j] -= &r;
            }
        }
        let m = &mu_k[k - 1];
        let rhs = (Rat::one() - m * m) * &norms[k - 1];
        if norms[k] >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    Ok(b)
}

// ===========================================================================
// goodness checker for p-adic polynomials
// ===========================================================================

/// Result of the exact `(C, θ)`-goodness verification of a polynomial on
/// the balls of `ℤ_p` down to depth `K`, with `C = d₀²p` and `θ = 1/d₀`.
#[derive(Debug, Clone)]
pub struct GoodnessReport {
    /// The degree parameter `d₀` (at least 1).
    pub degree: usize,
    /// The prime.
    pub p: u64,
    /// `C = d₀²·p`.
    pub c: Rat,
    /// `θ = 1/d₀`.
    pub theta: Rat,
    /// Depth swept: balls `a + p^jℤ_p` and levels `ε = p^{−k}` for
    /// `j, k ≤ K`.
    pub max_depth: u32,
    /// Worst observed value of `(λ(B(q,ε)) / (C·(ε/‖q‖_B)^θ·λ(B)))^{d₀}`,
    /// exact; the `d₀`-th power clears the fractional exponent.
    pub worst_ratio_pow: Rat,
    /// `true` when every tested pair satisfied the inequality.
    pub passed: bool,
}

/// Verify the goodness inequality `λ(B(q,ε)) ≤ C·(ε/‖q‖_B)^θ·λ(B)` for all
/// balls `B = a + p^jℤ_p` and levels `ε = p^{−k}` with `j, k ≤ max_depth`,
/// by exact residue counting mod `p^{K+1}`. Coefficients (constant term
/// first) must be `p`-integral; the inequality is scale-invariant in `q`,
/// so a general rational polynomial can be rescaled by its content first.
pub fn good_check(coeffs: &[Rat], p: u64, max_depth: u32) -> Result<GoodnessReport> {
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    if max_depth < 1 {
        return Err(Error::Precondition("depth must be ≥ 1".into()));
    }
    let deg = effective_degree(coeffs)?;
    for c in coeffs {
        if !c.is_zero() && padic_valuation(c, p)?.finite().expect("nonzero") < 0 {
            return Err(Error::Precondition("coefficients must be p-integral".into()));
        }
    }
    let d0 = deg.max(1);
    let k_top = max_depth;
    let modulus = checked_prime_power(p, k_top + 1)?;
    let vals = valuation_table(coeffs, p, k_top)?;
    let cap = (k_top + 1) as usize;
    // worst ratio^{d0} tracked as (numerator, p-exponent): value = A / (d0^{2d0}·p^E)
    let mut worst: Option<(u128, i64)> = None;
    let d0_pow: u128 = (d0 as u128).pow(2 * d0 as u32);
    let mut passed = true;
    let mut pj = 1u64;
    for j in 0..=k_top {
        for a in 0..pj {
            let mut cnt = vec![0u64; cap + 1];
            let mut t = a;
            while t < modulus {
                cnt[vals[t as usize] as usize] += 1;
                t += pj;
            }
            let w = cnt
                .iter()
                .position(|&c| c > 0)
                .expect("nonempty ball") as i64;
            // suffix counts: residues with valuation ≥ k+1
            let mut suffix = vec![0u64; cap + 2];
            for v in (0..=cap).rev() {
                suffix[v] = suffix[v + 1] + cnt[v];
            }
            for k in 0..=k_top {
                let count = suffix[(k + 1) as usize];
                if count == 0 {
                    continue;
                }
                // ratio^{d0} = count^{d0}·p^{k−w} / (d0^{2d0}·p^{d0·(1 + (K+1−j))})
                // with λ = count·p^{−(K+1)}, λ(B) = p^{−j}, C = d0²p.
                let a_num = (count as u128).pow(d0 as u32);
                let e = d0 as i64 * (1 + (k_top + 1 - j) as i64) + w - k as i64;
                if !ratio_le_one(a_num, e, d0_pow, p) {
                    passed = false;
                }
                if worst
                    .map(|(wa, we)| ratio_lt(wa, we, a_num, e, p))
                    .unwrap_or(true)
                {
                    worst = Some((a_num, e));
                }
            }
        }
        pj *= p;
    }
    let worst_ratio_pow = match worst {
        Some((a, e)) => {
            let mut val = Rat::from(Int::from(a)) / Rat::from(Int::from(d0_pow));
            let pr = rat_i64(p as i64);
            if e >= 0 {
                for _ in 0..e {
                    val /= &pr;
                }
            } else {
                for _ in 0..(-e) {
                    val *= &pr;
                }
            }
            val
        }
        None => Rat::zero(),
    };
    Ok(GoodnessReport {
        degree: d0,
        p,
        c: rat_i64((d0 * d0) as i64 * p as i64),
        theta: rat_frac(1, d0 as i64),
        max_depth,
        worst_ratio_pow,
        passed,
    })
}

/// Exact measure of `{t ∈ a + p^jℤ_p : |q(t)|_p < p^{−k}}` by residue
/// counting; coefficients must be `p`-integral.
pub fn sublevel_measure(coeffs: &[Rat], p: u64, j: u32, a: u64, k: u32) -> Result<Rat> {
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    effective_degree(coeffs)?;
    for c in coeffs {
        if !c.is_zero() && padic_valuation(c, p)?.finite().expect("nonzero") < 0 {
            return Err(Error::Precondition("coefficients must be p-integral".into()));
        }
    }
    let pj = checked_prime_power(p, j)?;
    if a >= pj {
        return Err(Error::Precondition("ball center must satisfy a < p^j".into()));
    }
    let m_exp = j.max(k + 1);
    let modulus = checked_prime_power(p, m_exp)?;
    let level = checked_prime_power(p, k + 1)?;
    let cmods = coeffs_mod(coeffs, p, modulus)?;
    let mut count = 0u64;
    let mut t = a;
    while t < modulus {
        if horner_mod(&cmods, t, modulus) % level == 0 {
            count += 1;
        }
        t += pj;
    }
    let mut measure = Rat::from(Int::from(count));
    for _ in 0..m_exp {
        measure /= rat_i64(p as i64);
    }
    Ok(measure)
}

fn effective_degree(coeffs: &[Rat]) -> Result<usize> {
    coeffs
        .iter()
        .rposition(|c| !c.is_zero())
        .ok_or_else(|| Error::Precondition("the zero polynomial is not allowed".into()))
}

fn checked_prime_power(p: u64, e: u32) -> Result<u64> {
    let mut acc: u64 = 1;
    for _ in 0..e {
        acc = acc
            .checked_mul(p)
            .filter(|&v| v <= 100_000_000)
            .ok_or_else(|| Error::Budget("depth too large for residue counting".into()))?;
    }
    Ok(acc)
}

fn coeffs_mod(coeffs: &[Rat], p: u64, modulus: u64) -> Result<Vec<u64>> {
    let m = Int::from(modulus);
    coeffs
        .iter()
        .map(|c| {
            let num = c.numer().mod_floor(&m).to_u64().expect("residue");
            let den = c.denom().mod_floor(&m).to_u64().expect("residue");
            if den.gcd(&p) != 1 {
                return Err(Error::Precondition("coefficients must be p-integral".into()));
            }
            Ok(mulmod(num, mod_inv_u64(den, modulus)?, modulus))
        })
        .collect()
}

fn horner_mod(cmods: &[u64], t: u64, modulus: u64) -> u64 {
    let mut acc = 0u64;
    for c in cmods.iter().rev() {
        acc = (mulmod(acc, t, modulus) + c) % modulus;
    }
    acc
}

/// Table of `min(v_p(q(t)), K+1)` over `t mod p^{K+1}`.
fn valuation_table(coeffs: &[Rat], p: u64, k_top: u32) -> Result<Vec<u8>> {
    let modulus = checked_prime_power(p, k_top + 1)?;
    let cmods = coeffs_mod(coeffs, p, modulus)?;
    let cap = (k_top + 1) as u8;
    Ok((0..modulus)
        .map(|t| {
            let mut y = horner_mod(&cmods, t, modulus);
            if y == 0 {
                return cap;
            }
            let mut v = 0u8;
            while y % p == 0 {
                y /= p;
                v += 1;
            }
            v
        })
        .collect())
}

/// `a1/p^{e1} ≤ 1·(d0_pow)`? — i.e. `a ≤ d0_pow·p^e` (or the reversed form
/// for negative `e`), with overflow treated conservatively as a violation.
fn ratio_le_one(a: u128, e: i64, d0_pow: u128, p: u64) -> bool {
    if e >= 0 {
        match pow_u128(p, e as u32) {
            Some(pe) => match d0_pow.checked_mul(pe) {
                Some(rhs) => a <= rhs,
                None => true,
            },
            None => true,
        }
    } else {
        match pow_u128(p, (-e) as u32) {
            Some(pe) => match a.checked_mul(pe) {
                Some(lhs) => lhs <= d0_pow,
                None => false,
            },
            None => false,
        }
    }
}

/// `a1/p^{e1} < a2/p^{e2}`, overflow-safe: an overflowing product means the
/// other side is smaller.
fn ratio_lt(a1: u128, e1: i64, a2: u128, e2: i64, p: u64) -> bool {
    let delta = e1 - e2;
    if delta >= 0 {
        match pow_u128(p, delta as u32).and_then(|pe| a2.checked_mul(pe)) {
            Some(rhs) => a1 < rhs,
            None => true,
        }
    } else {
        match pow_u128(p, (-delta) as u32).and_then(|pe| a1.checked_mul(pe)) {
            Some(lhs) => lhs < a2,
            None => false,
        }
    }
}

fn pow_u128(p: u64, e: u32) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..e {
        acc = acc.checked_mul(p as u128)?;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn r(n: i64) -> Rat {
        rat_i64(n)
    }

    fn lat(s: &PlaceSet, rows: &[&[i64]]) -> SLattice {
        SLattice::new(s.clone(), RMatrix::from_i64_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn covolume_examples() {
        let s_inf = PlaceSet::infinity_only();
        let s2 = PlaceSet::new([2]).unwrap();
        assert_eq!(
            SLattice::standard(s_inf.clone(), 3).unwrap().covolume(),
            &Rat::one()
        );
        // diag(2,1) over {∞,2}: |2|_∞·|2|₂ = 1
        let l = lat(&s2, &[&[2, 0], &[0, 1]]);
        assert_eq!(l.covolume(), &Rat::one());
        assert_eq!(l.is_normalized_at(2), Some(false));
        // submodule covolumes in ℤ²
        let z2 = SLattice::standard(s_inf.clone(), 2).unwrap();
        let cov = z2
            .submodule_covolume(&[vec![r(1), r(0)], vec![r(0), r(3)]])
            .unwrap();
        assert_eq!(cov.exact_rational().unwrap(), r(3));
        let cov = z2
            .submodule_covolume(&[vec![r(1), r(0)], vec![r(0), r(1)]])
            .unwrap();
        assert_eq!(cov.exact_rational().unwrap(), r(1));
        // dependent vectors rejected
        assert!(z2
            .submodule_covolume(&[vec![r(1), r(1)], vec![r(2), r(2)]])
            .is_err());
        // a vector outside the lattice is rejected
        let bad = vec![rat_frac(1, 3), r(0)];
        let zs2 = SLattice::standard(s2.clone(), 2).unwrap();
        assert!(zs2.submodule_covolume(&[bad]).is_err());
        // basis independence and S-unit invariance of submodule covolume
        let v1 = vec![r(2), r(1)];
        let v2 = vec![r(0), r(3)];
        let c1 = zs2.submodule_covolume(&[v1.clone(), v2.clone()]).unwrap();
        let sum = vec![&v1[0] + &v2[0], &v1[1] + &v2[1]];
        let c2 = zs2.submodule_covolume(&[sum, v2.clone()]).unwrap();
        assert_eq!(c1.square(), c2.square());
        let scaled = vec![&v1[0] * r(2), &v1[1] * r(2)];
        let c3 = zs2.submodule_covolume(&[scaled, v2]).unwrap();
        assert_eq!(c1.square(), c3.square());
    }

    #[test]
    fn systole_examples() {
        let s_inf = PlaceSet::infinity_only();
        let z2 = SLattice::standard(s_inf.clone(), 2).unwrap();
        let sy = z2.systole(5).unwrap();
        assert_eq!(sy.alpha1.square(), Rat::one());
        assert!(sy.certified);
        assert_eq!(sy.witness.iter().filter(|c| !c.is_zero()).count(), 1);
        // diag(1/2, 2) over {∞,2}: both short directions have height 1
        let s2 = PlaceSet::new([2]).unwrap();
        let basis = RMatrix::from_rows(vec![
            vec![rat_frac(1, 2), r(0)],
            vec![r(0), r(2)],
        ])
        .unwrap();
        let l = SLattice::new(s2.clone(), basis).unwrap();
        let sy = l.systole(8).unwrap();
        assert_eq!(sy.alpha1.square(), Rat::one());
        assert!(sy.certified);
        // planted short vector: (1/5, 0) of height 1/5
        let basis = RMatrix::from_rows(vec![
            vec![rat_frac(1, 5), r(7)],
            vec![r(0), r(5)],
        ])
        .unwrap();
        let l = SLattice::new(s_inf.clone(), basis).unwrap();
        let sy = l.systole(10).unwrap();
        assert_eq!(sy.alpha1.square(), rat_frac(1, 25));
        assert!(sy.certified);
        assert_eq!(sy.witness, vec![rat_frac(1, 5), r(0)]);
        // witness height equals alpha1 through the covolume of its line
        let c = l.submodule_covolume(&[sy.witness.clone()]).unwrap();
        assert_eq!(c.square(), sy.alpha1.square());
        // tight budget: result still correct but flagged uncertified
        let basis = RMatrix::from_rows(vec![
            vec![rat_frac(1, 3), r(0)],
            vec![r(0), r(3)],
        ])
        .unwrap();
        let l = SLattice::new(s_inf, basis).unwrap();
        let sy = l.systole(1).unwrap();
        assert_eq!(sy.alpha1.square(), rat_frac(1, 9));
        assert!(!sy.certified);
    }

    #[test]
    fn mahler_examples() {
        let s2 = PlaceSet::new([2]).unwrap();
        let id = SLattice::standard(s2.clone(), 3).unwrap();
        assert_eq!(id.mahler_basis().unwrap(), RMatrix::identity(3));
        // clearing a 2-denominator: rows [[1,0],[1/2,1]]
        let basis = RMatrix::from_rows(vec![
            vec![r(1), r(0)],
            vec![rat_frac(1, 2), r(1)],
        ])
        .unwrap();
        let l = SLattice::new(s2.clone(), basis).unwrap();
        let g = l.mahler_basis().unwrap();
        assert!(g.is_p_integral(2).unwrap());
        assert_eq!(g.det().unwrap().abs(), Rat::one());
        assert_eq!(g.nu_norm(Place::Infinity), Rat::one());
        let u = l.basis().inverse().unwrap().mul(&g).unwrap();
        assert!(u.is_gl_zs(&s2).unwrap());
        // covolume ≠ 1 rejected
        let bad = lat(&PlaceSet::infinity_only(), &[&[3, 0], &[0, 1]]);
        assert!(bad.mahler_basis().is_err());
    }

    #[test]
    fn mahler_random_lattices() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let s2 = PlaceSet::new([2]).unwrap();
        let sets = [PlaceSet::infinity_only(), s2];
        for trial in 0..8 {
            let s = &sets[trial % 2];
            let d = 2 + (trial / 2) % 2;
            // covolume-1 basis: unit triangular factors and S-unit diagonal
            let mut rows = vec![vec![Rat::zero(); d]; d];
            for (i, row) in rows.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = match i.cmp(&j) {
                        std::cmp::Ordering::Equal => Rat::one(),
                        std::cmp::Ordering::Greater => r(rng.gen_range(-3..=3)),
                        std::cmp::Ordering::Less => Rat::zero(),
                    };
                }
            }
            let lower = RMatrix::from_rows(rows).unwrap();
            let mut diag = vec![Rat::one(); d];
            if s.finite_places().next().is_some() {
                let e: i32 = rng.gen_range(-2..=2);
                diag[0] = pow_rat(&r(2), e as i64);
                diag[d - 1] = pow_rat(&r(2), -(e as i64));
            }
            let mut rows_u = vec![vec![Rat::zero(); d]; d];
            for (i, row) in rows_u.iter_mut().enumerate() {
                for (j, x) in row.iter_mut().enumerate() {
                    *x = match i.cmp(&j) {
                        std::cmp::Ordering::Equal => Rat::one(),
                        std::cmp::Ordering::Less => r(rng.gen_range(-3..=3)),
                        std::cmp::Ordering::Greater => Rat::zero(),
                    };
                }
            }
            let upper = RMatrix::from_rows(rows_u).unwrap();
            let basis = lower
                .mul(&RMatrix::diagonal(&diag))
                .unwrap()
                .mul(&upper)
                .unwrap();
            let l = SLattice::new(s.clone(), basis).unwrap();
            assert_eq!(l.covolume(), &Rat::one(), "trial {trial}");
            let g = l.mahler_basis().unwrap();
            let u = l.basis().inverse().unwrap().mul(&g).unwrap();
            assert!(u.is_gl_zs(s).unwrap(), "trial {trial}");
            for p in s.finite_places() {
                assert!(g.is_p_integral(p).unwrap(), "trial {trial}");
            }
        }
    }

    #[test]
    fn submodule_enumeration() {
        let s_inf = PlaceSet::infinity_only();
        let s2 = PlaceSet::new([2]).unwrap();
        // the standard lattice has no submodule of covolume < 1
        for d in 2..=3usize {
            let z = SLattice::standard(s2.clone(), d).unwrap();
            for k in 1..=d {
                assert!(z.submodules_below_one(k).unwrap().is_empty());
            }
        }
        // full rank: {L} exactly when the covolume is < 1
        let half = SLattice::new(
            s_inf.clone(),
            RMatrix::from_rows(vec![vec![rat_frac(1, 2), r(0)], vec![r(0), r(1)]]).unwrap(),
        )
        .unwrap();
        let subs = half.submodules_below_one(2).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].covolume.square(), rat_frac(1, 4));
        // planted line of covolume 1/2
        let l = SLattice::new(
            s_inf.clone(),
            RMatrix::from_rows(vec![vec![rat_frac(1, 2), r(0)], vec![r(0), r(2)]]).unwrap(),
        )
        .unwrap();
        let subs = l.submodules_below_one(1).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].generators, vec![vec![rat_frac(1, 2), r(0)]]);
        assert_eq!(subs[0].covolume.square(), rat_frac(1, 4));
        // planted plane in d = 3
        let l = SLattice::new(
            s_inf.clone(),
            RMatrix::from_rows(vec![
                vec![rat_frac(1, 2), r(0), r(0)],
                vec![r(0), r(1), r(0)],
                vec![r(0), r(0), r(2)],
            ])
            .unwrap(),
        )
        .unwrap();
        let subs = l.submodules_below_one(2).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].covolume.square(), rat_frac(1, 4));
        // the plane is spanned by (1/2,0,0) and (0,1,0)
        let c = l
            .submodule_covolume(&subs[0].generators)
            .unwrap();
        assert_eq!(c.square(), rat_frac(1, 4));
        for g in &subs[0].generators {
            assert!(l.contains(g).unwrap());
            assert!(g[2].is_zero());
        }
        // scale and argument validation
        assert!(l.submodules_below_one(0).is_err());
        assert!(l.submodules_below_one(4).is_err());
        let big = SLattice::standard(s_inf, 4).unwrap();
        assert!(big.submodules_below_one(1).is_err());
    }

    #[test]
    fn goodness_examples() {
        // q = t over ℚ₃: sublevel measures are 3^{−(k+1)}
        let t = vec![r(0), r(1)];
        for k in 0..4u32 {
            let m = sublevel_measure(&t, 3, 0, 0, k).unwrap();
            let mut expect = Rat::one();
            for _ in 0..=k {
                expect /= r(3);
            }
            assert_eq!(m, expect);
        }
        let rep = good_check(&t, 3, 5).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.degree, 1);
        assert_eq!(rep.c, r(3));
        assert_eq!(rep.theta, Rat::one());
        assert!(rep.worst_ratio_pow <= Rat::one());
        // constants pass trivially with empty sublevel sets
        let one = vec![r(1)];
        assert_eq!(sublevel_measure(&one, 2, 0, 0, 0).unwrap(), Rat::zero());
        assert!(good_check(&one, 2, 4).unwrap().passed);
        // q = t² − 1 over ℚ₂: frozen sublevel measures on ℤ₂
        let q = vec![r(-1), r(0), r(1)];
        let measures = [
            rat_frac(1, 2),
            rat_frac(1, 2),
            rat_frac(1, 2),
            rat_frac(1, 4),
            rat_frac(1, 8),
        ];
        for (k, expect) in measures.iter().enumerate() {
            assert_eq!(sublevel_measure(&q, 2, 0, 0, k as u32).unwrap(), *expect);
        }
        let rep = good_check(&q, 2, 5).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.degree, 2);
        assert_eq!(rep.c, r(8));
        assert_eq!(rep.theta, rat_frac(1, 2));
        // non-integral coefficients rejected, zero polynomial rejected
        assert!(good_check(&[rat_frac(1, 2), r(1)], 2, 3).is_err());
        assert!(good_check(&[r(0)], 2, 3).is_err());
    }

    #[test]
    fn goodness_structured_and_random() {
        for p in [2u64, 3] {
            // monomials t^j
            for j in 0..=4usize {
                let mut coeffs = vec![r(0); j + 1];
                coeffs[j] = r(1);
                assert!(
                    good_check(&coeffs, p, 4).unwrap().passed,
                    "monomial degree {j} at p={p}"
                );
            }
            // products of distinct linear factors t(t−1)(t+1)(t−2)
            let mut poly = vec![r(1)];
            for root in [0i64, 1, -1, 2] {
                // multiply by (t − root)
                let mut next = vec![r(0); poly.len() + 1];
                for (i, c) in poly.iter().enumerate() {
                    next[i + 1] += c;
                    next[i] -= c * r(root);
                }
                poly = next;
                assert!(
                    good_check(&poly, p, 4).unwrap().passed,
                    "linear-factor product at p={p}"
                );
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for p in [2u64, 3, 5] {
            for _ in 0..10 {
                let deg = rng.gen_range(0..=4);
                let mut coeffs: Vec<Rat> =
                    (0..=deg).map(|_| r(rng.gen_range(-20..=20))).collect();
                if coeffs.iter().all(|c| c.is_zero()) {
                    coeffs[0] = r(1);
                }
                let rep = good_check(&coeffs, p, 4).unwrap();
                assert!(rep.passed, "random polynomial failed at p={p}");
                assert!(rep.worst_ratio_pow <= Rat::one());
            }
        }
    }
}
