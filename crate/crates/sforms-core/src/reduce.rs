//! Reduction theory and search: Minkowski reduction of definite forms,
//! enumeration of reduced integral forms, `ℤ`/`ℤ_S`-equivalence search with
//! exact certificates, automorphism groups of definite forms, and the
//! generator-assembly combinator.
//!
//! Everything decided here is decided exactly: definite equivalence goes
//! through a complete short-vector matcher, while indefinite searches are
//! norm-capped and report [`EquivOutcome::Inconclusive`] rather than guess.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::arith::{rat_frac, rat_i64, Int, Place, PlaceSet, Rat};
use crate::error::{Error, Result};
use crate::local::equivalent_local;
use crate::matrix::RMatrix;
use crate::qform::QuadraticForm;

// ===========================================================================
// Siegel parameters and LDLᵗ
// ===========================================================================

/// Parameters `(α, β)` of a Siegel set `𝔖_{α,β}`, stored through the exact
/// rational `α²` (the natural quantity for rational tests).
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelParams {
    alpha_sq: Rat,
    beta: Rat,
}

impl SiegelParams {
    /// Build from `α²` and `β`, enforcing `α² ≥ 4/3` and `β ≥ 1/2`.
    pub fn from_alpha_squared(alpha_sq: Rat, beta: Rat) -> Result<SiegelParams> {
        if alpha_sq < rat_frac(4, 3) {
            return Err(Error::Precondition("Siegel parameter needs α² ≥ 4/3".into()));
        }
        if beta < rat_frac(1, 2) {
            return Err(Error::Precondition("Siegel parameter needs β ≥ 1/2".into()));
        }
        Ok(SiegelParams { alpha_sq, beta })
    }

    /// The standard `(α, β) = (2, 1)` parameters.
    pub fn standard() -> SiegelParams {
        SiegelParams {
            alpha_sq: rat_i64(4),
            beta: rat_i64(1),
        }
    }

    /// `α²` (exact).
    pub fn alpha_squared(&self) -> &Rat {
        &self.alpha_sq
    }

    /// `β` (exact).
    pub fn beta(&self) -> &Rat {
        &self.beta
    }
}

/// Exact LDLᵗ data of a positive definite Gram matrix: `R = ᵗn·D·n` with `n`
/// unit upper triangular, so `Q(x) = Σ_i D_i·(x_i + Σ_{j>i} n_ij x_j)²`.
pub(crate) struct Ldl {
    pub d: Vec<Rat>,
    pub n: RMatrix,
}

pub(crate) fn ldl(gram: &RMatrix) -> Result<Ldl> {
    let dim = gram.nrows();
    let mut d = vec![Rat::zero(); dim];
    let mut n = RMatrix::identity(dim);
    for i in 0..dim {
        let mut di = gram[(i, i)].clone();
        for k in 0..i {
            di -= &d[k] * &n[(k, i)] * &n[(k, i)];
        }
        if !di.is_positive() {
            return Err(Error::Precondition("form is not positive definite".into()));
        }
        d[i] = di;
        for j in (i + 1)..dim {
            let mut nij = gram[(i, j)].clone();
            for k in 0..i {
                nij -= &d[k] * &n[(k, i)] * &n[(k, j)];
            }
            n[(i, j)] = nij / &d[i];
        }
    }
    Ok(Ldl { d, n })
}

/// Exact `(α, β)`-reducedness test for a positive definite form: with
/// `R = ᵗn·D·n`, reduced iff `D_i ≤ α²·D_{i+1}` and `|n_ij| ≤ β` for all
/// `i < j` (Iwasawa membership; the compact factor is irrelevant).
pub fn is_reduced_definite(r: &QuadraticForm, params: &SiegelParams) -> Result<bool> {
    let dec = ldl(r.gram())?;
    let dim = r.dim();
    for i in 0..dim.saturating_sub(1) {
        if &dec.d[i] > &(params.alpha_sq.clone() * &dec.d[i + 1]) {
            return Ok(false);
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            if dec.n[(i, j)].abs() > params.beta {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ===========================================================================
// exact short-vector enumeration (Fincke–Pohst)
// ===========================================================================

/// All nonzero integer vectors `x` with `Q(x) ≤ bound`, one representative
/// per `±` pair (the representative has positive first nonzero entry),
/// together with the exact value `Q(x)`. Exact rational arithmetic
/// throughout.
pub(crate) fn short_vectors(gram: &RMatrix, bound: &Rat) -> Result<Vec<(Vec<i64>, Rat)>> {
    let dec = ldl(gram)?;
    let dim = gram.nrows();
    let mut out = Vec::new();
    let mut x = vec![0i64; dim];
    rec_enumerate(&dec, bound, dim, &mut x, &Rat::zero(), &mut out);
    // canonical sign: positive first nonzero entry
    let mut seen = std::collections::BTreeSet::new();
    let mut canon = Vec::new();
    for (v, val) in out {
        if v.iter().all(|&c| c == 0) {
            continue;
        }
        let mut w = v.clone();
        if let Some(&first) = w.iter().find(|&&c| c != 0) {
            if first < 0 {
                for c in &mut w {
                    *c = -*c;
                }
            }
        }
        if seen.insert(w.clone()) {
            canon.push((w, val));
        }
    }
    // Ties by value prefer standard basis vectors (by index): re-reducing an
    // already-reduced form then keeps its columns, making reduction
    // idempotent instead of drifting to another representative of a tied
    // minimum.
    let basis_rank = |v: &[i64]| -> usize {
        let mut nonzero = None;
        for (j, &c) in v.iter().enumerate() {
            if c != 0 {
                if nonzero.is_some() || c != 1 {
                    return usize::MAX;
                }
                nonzero = Some(j);
            }
        }
        nonzero.unwrap_or(usize::MAX)
    };
    canon.sort_by(|a, b| {
        a.1.cmp(&b.1)
            .then_with(|| basis_rank(&a.0).cmp(&basis_rank(&b.0)))
            .then_with(|| {
                a.0.iter()
                    .map(|&c| c.abs())
                    .max()
                    .cmp(&b.0.iter().map(|&c| c.abs()).max())
            })
            .then_with(|| a.0.cmp(&b.0))
    });
    Ok(canon)
}

fn rec_enumerate(
    dec: &Ldl,
    bound: &Rat,
    level: usize,
    x: &mut Vec<i64>,
    acc: &Rat,
    out: &mut Vec<(Vec<i64>, Rat)>,
) {
    if level == 0 {
        out.push((x.clone(), acc.clone()));
        return;
    }
    let i = level - 1;
    // center c = Σ_{j>i} n_ij x_j; admissible x_i satisfy
    // D_i (x_i + c)² ≤ bound − acc
    let mut c = Rat::zero();
    for j in level..x.len() {
        c += &dec.n[(i, j)] * rat_i64(x[j]);
    }
    let rem = bound - acc;
    let di = &dec.d[i];
    let admissible = |t: i64| -> Option<Rat> {
        let s = rat_i64(t) + &c;
        let contrib = di * &s * &s;
        if contrib <= rem {
            Some(contrib)
        } else {
            None
        }
    };
    // walk outward from the center in both directions
    let center = rat_center(&(-&c));
    let mut t = center;
    while let Some(contrib) = admissible(t) {
        x[i] = t;
        let acc2 = acc + &contrib;
        rec_enumerate(dec, bound, i, x, &acc2, out);
        t += 1;
    }
    let mut t = center - 1;
    while let Some(contrib) = admissible(t) {
        x[i] = t;
        let acc2 = acc + &contrib;
        rec_enumerate(dec, bound, i, x, &acc2, out);
        t -= 1;
    }
    x[i] = 0;
}

fn rat_center(q: &Rat) -> i64 {
    // nearest integer (rounded toward zero on ties)
    let two_q = q * rat_i64(2);
    let fl = q.floor();
    let f = int_to_i64(fl.numer());
    if two_q - rat_i64(2 * f) >= rat_i64(1) {
        f + 1
    } else {
        f
    }
}

fn int_to_i64(n: &Int) -> i64 {
    use num_traits::ToPrimitive;
    // saturating: callers guard oversized values through box-size budgets
    n.to_i64().unwrap_or(if n.is_negative() {
        i64::MIN / 4
    } else {
        i64::MAX / 4
    })
}

// ===========================================================================
// Minkowski reduction
// ===========================================================================

/// Whether a `d×i` integer matrix (columns) extends to a basis of `ℤ^d`,
/// i.e. its `i`-th determinantal divisor is 1.
fn extends_to_basis(cols: &[Vec<i64>], d: usize) -> bool {
    let i = cols.len();
    if i == 0 {
        return true;
    }
    // gcd over all i×i minors
    let rows: Vec<usize> = (0..d).collect();
    let mut gcd = Int::zero();
    for combo in combinations(&rows, i) {
        let mut m = RMatrix::zero(i, i);
        for (r, &row) in combo.iter().enumerate() {
            for (cidx, col) in cols.iter().enumerate() {
                m[(r, cidx)] = rat_i64(col[row]);
            }
        }
        let det = m.det().expect("square");
        gcd = gcd.gcd(det.numer());
        if gcd == Int::one() {
            return true;
        }
    }
    gcd == Int::one()
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for (idx, &first) in items.iter().enumerate() {
        if items.len() - idx < k {
            break;
        }
        for mut rest in combinations(&items[idx + 1..], k - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Greedy Minkowski reduction of a positive definite integral form: returns
/// `(R_red, γ)` with `γ ∈ GL(d, ℤ)` and `act(R, γ) = R_red`, where the `i`-th
/// column of `γ` realizes the `i`-th successive minimum among vectors that
/// extend the previous columns to a basis of `ℤ^d`.
pub fn minkowski_reduce(r: &QuadraticForm) -> Result<(QuadraticForm, RMatrix)> {
    let d = r.dim();
    let sig = r.signature()?;
    if !(sig.positive == d && sig.negative == 0) {
        return Err(Error::Precondition("Minkowski reduction needs a positive definite form".into()));
    }
    if !r.is_integral() {
        return Err(Error::Precondition("Minkowski reduction needs an integral form".into()));
    }
    // Successive minima sit below max_j R(e_j); the extendability constraint
    // can occasionally force a slightly larger vector, so the enumeration cap
    // grows on demand.
    let mut cap = (0..d)
        .map(|j| r.gram()[(j, j)].clone())
        .max()
        .expect("d ≥ 1");
    let mut pool = short_vectors(r.gram(), &cap)?;
    let mut cols: Vec<Vec<i64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut chosen = None;
        loop {
            for (v, _val) in &pool {
                let mut trial = cols.clone();
                trial.push(v.clone());
                if extends_to_basis(&trial, d) {
                    chosen = Some(v.clone());
                    break;
                }
            }
            if chosen.is_some() {
                break;
            }
            cap = &cap * rat_i64(2);
            pool = short_vectors(r.gram(), &cap)?;
        }
        let v = chosen.ok_or_else(|| Error::Internal("no extendable short vector found".into()))?;
        cols.push(v);
    }
    let mut gamma = RMatrix::zero(d, d);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..d {
            gamma[(i, j)] = rat_i64(col[i]);
        }
    }
    // sign normalization: make the superdiagonal of the reduced Gram ≥ 0
    let mut red = r.act(&gamma)?;
    for j in 1..d {
        if red.gram()[(j - 1, j)].is_negative() {
            for i in 0..d {
                let neg = -gamma[(i, j)].clone();
                gamma[(i, j)] = neg;
            }
            red = r.act(&gamma)?;
        }
    }
    if !gamma.is_gl_z()? {
        return Err(Error::Internal("reduction transform is not unimodular".into()));
    }
    // safety cap from the reduced-form norm bound (astronomically loose)
    let cap = reduced_norm_cap(d, &red.det().abs());
    if red.coefficient_norm(Place::Infinity) > cap {
        return Err(Error::Internal("reduced form exceeds its theoretical cap".into()));
    }
    Ok((red, gamma))
}

/// The reduced-form coefficient cap `2^{d²}·𝓛'_d·|det|^{2d}` (with the
/// half-integer power of `d` in `𝓛'_d` rounded up, keeping a valid bound).
pub fn reduced_norm_cap(d: usize, det_abs: &Rat) -> Rat {
    let l = l_prime_upper(d);
    let two = Int::from(2).pow((d * d) as u32);
    Rat::from(two) * l * pow_rat_usize(det_abs, 2 * d)
}

/// Upper integer bound for `𝓛'_d = d^{d/2}(d+1)^{d²}·(d!)^{2d+1}`.
fn l_prime_upper(d: usize) -> Rat {
    let dd = Int::from(d as u64);
    // d^{d/2} ≤ ceil(sqrt(d^d))
    let half_pow = {
        let full = dd.pow(d as u32);
        let r = full.sqrt();
        if &r * &r == full {
            r
        } else {
            r + 1
        }
    };
    let fact = crate::arith::factorial(d as u64);
    let val = half_pow
        * Int::from((d + 1) as u64).pow((d * d) as u32)
        * fact.pow((2 * d + 1) as u32);
    Rat::from(val)
}

fn pow_rat_usize(q: &Rat, e: usize) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..e {
        acc *= q;
    }
    acc
}

/// The translate bound `𝓛_d·|det b|^{2d}` with
/// `𝓛_d = 2^{d(d−1)}·d^{3d/2}·(d+1)^{d²}·(d!)^{d+1}` (half-integer power of
/// `d` rounded up to the next integer when `d` is odd, keeping the bound
/// valid; `𝓛₂ = 20736` exactly).
pub fn translate_bound(b: &RMatrix) -> Result<Rat> {
    if !b.is_square() {
        return Err(Error::Dimension("translate bound needs a square matrix".into()));
    }
    if !b.is_integral() {
        return Err(Error::Precondition("translate bound needs an integral matrix".into()));
    }
    let det = b.det()?;
    if det.is_zero() {
        return Err(Error::Singular("translate bound needs a nonsingular matrix".into()));
    }
    let d = b.nrows();
    let dd = Int::from(d as u64);
    let three_half_pow = {
        let full = dd.pow((3 * d) as u32);
        let r = full.sqrt();
        if &r * &r == full {
            r
        } else {
            r + 1
        }
    };
    let l = Int::from(2).pow((d * (d - 1)) as u32)
        * three_half_pow
        * Int::from((d + 1) as u64).pow((d * d) as u32)
        * crate::arith::factorial(d as u64).pow((d + 1) as u32);
    Ok(Rat::from(l) * pow_rat_usize(&det.abs(), 2 * d))
}

// ===========================================================================
// enumeration of reduced definite forms
// ===========================================================================

/// Minkowski-reducedness test for a given integral positive definite form:
/// for each `i`, no vector `v` with `gcd(v_i, …, v_d) = 1` has value
/// `< b_ii`, and the superdiagonal is normalized `≥ 0`.
fn is_minkowski_reduced(gram: &RMatrix) -> Result<bool> {
    let d = gram.nrows();
    for i in 0..d {
        let bii = gram[(i, i)].clone();
        for (v, val) in short_vectors(gram, &bii)? {
            if val >= bii {
                continue;
            }
            let mut g = 0i64;
            for &c in &v[i..] {
                g = g.gcd(&c);
            }
            if g.abs() == 1 {
                return Ok(false);
            }
        }
    }
    for j in 1..d {
        if gram[(j - 1, j)].is_negative() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All Minkowski-reduced positive definite forms with *integer* Gram matrix
/// of determinant `det_value`, pairwise `ℤ`-inequivalent (duplicates removed
/// by the complete definite decision procedure). Scan box: the classical
/// reduced-form inequalities `b_11 ≤ … ≤ b_dd`, `2|b_ij| ≤ b_ii`, and
/// `∏ b_ii ≤ (4/3)^{d(d−1)/2}·det`.
pub fn enumerate_reduced_definite(d: usize, det_value: u64) -> Result<Vec<QuadraticForm>> {
    if d == 0 || d > 4 {
        return Err(Error::Budget("enumeration supports 1 ≤ d ≤ 4".into()));
    }
    if det_value == 0 {
        return Err(Error::Degenerate("determinant must be positive".into()));
    }
    let det_cap = match d {
        1 | 2 => 1000,
        3 => 150,
        _ => 36,
    };
    if det_value > det_cap {
        return Err(Error::Budget(format!(
            "determinant {det_value} out of desk scale for dimension {d} (cap {det_cap})"
        )));
    }
    // ∏ b_ii ≤ (4/3)^{d(d−1)/2} det
    let mut prod_cap_rat = rat_i64(det_value as i64);
    for _ in 0..(d * (d - 1) / 2) {
        prod_cap_rat *= rat_frac(4, 3);
    }
    let prod_cap = int_to_i64(&prod_cap_rat.floor().numer().clone());
    let mut found: Vec<QuadraticForm> = Vec::new();
    let mut diag = vec![0i64; d];
    enumerate_diagonals(d, 0, 1, prod_cap, &mut diag, &mut |diag| {
        scan_offdiagonals(d, diag, det_value, &mut found)
    })?;
    Ok(found)
}

fn enumerate_diagonals(
    d: usize,
    idx: usize,
    min_val: i64,
    prod_cap: i64,
    diag: &mut Vec<i64>,
    f: &mut impl FnMut(&[i64]) -> Result<()>,
) -> Result<()> {
    if idx == d {
        return f(diag);
    }
    let remaining = (d - idx - 1) as u32;
    let mut v = min_val;
    loop {
        // v^(remaining+1) must fit under the cap with current prefix product
        let prefix: i64 = diag[..idx].iter().product::<i64>().max(1);
        let mut need = prefix;
        let mut ok = true;
        for _ in 0..=remaining {
            need = need.saturating_mul(v);
            if need > prod_cap {
                ok = false;
                break;
            }
        }
        if !ok {
            break;
        }
        diag[idx] = v;
        enumerate_diagonals(d, idx + 1, v, prod_cap, diag, f)?;
        v += 1;
    }
    diag[idx] = 0;
    Ok(())
}

fn scan_offdiagonals(
    d: usize,
    diag: &[i64],
    det_value: u64,
    found: &mut Vec<QuadraticForm>,
) -> Result<()> {
    // positions (i, j), i < j, with |b_ij| ≤ b_ii/2
    let positions: Vec<(usize, usize)> = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| (i, j)))
        .collect();
    let mut values = vec![0i64; positions.len()];
    scan_rec(0, &positions, diag, det_value, &mut values, found, d)
}

fn scan_rec(
    k: usize,
    positions: &[(usize, usize)],
    diag: &[i64],
    det_value: u64,
    values: &mut Vec<i64>,
    found: &mut Vec<QuadraticForm>,
    d: usize,
) -> Result<()> {
    if k == positions.len() {
        let mut gram = RMatrix::zero(d, d);
        for i in 0..d {
            gram[(i, i)] = rat_i64(diag[i]);
        }
        for (idx, &(i, j)) in positions.iter().enumerate() {
            gram[(i, j)] = rat_i64(values[idx]);
            gram[(j, i)] = rat_i64(values[idx]);
        }
        if gram.det()? != rat_i64(det_value as i64) {
            return Ok(());
        }
        if ldl(&gram).is_err() {
            return Ok(()); // not positive definite
        }
        if !is_minkowski_reduced(&gram)? {
            return Ok(());
        }
        let q = QuadraticForm::from_gram(gram)?;
        for prev in found.iter() {
            if let EquivOutcome::Equivalent(_) = z_equivalent(prev, &q, &rat_i64(64))? {
                return Ok(());
            }
        }
        found.push(q);
        return Ok(());
    }
    let (i, _j) = positions[k];
    let cap = diag[i] / 2;
    for v in -cap..=cap {
        values[k] = v;
        scan_rec(k + 1, positions, diag, det_value, values, found, d)?;
    }
    Ok(())
}

// ===========================================================================
// equivalence certificates
// ===========================================================================

/// The coefficient ring of an equivalence certificate.
#[derive(Debug, Clone, PartialEq)]
pub enum Ring {
    /// `ℤ`.
    Z,
    /// `ℤ_S` for the given place set.
    ZS(PlaceSet),
}

/// An exact equivalence certificate: `act(Q1, γ) = Q2` with `γ` invertible
/// over the stated ring. Constructed only through [`EquivCertificate::new`],
/// which performs the exact verification; `verified` is `true` on every
/// value that exists.
#[derive(Debug, Clone)]
pub struct EquivCertificate {
    /// The transformation.
    pub gamma: RMatrix,
    /// The coefficient ring.
    pub ring: Ring,
    /// Always `true`; kept as an explicit field of record.
    pub verified: bool,
}

impl EquivCertificate {
    /// Verify `act(q1, γ) = q2` exactly and that `γ` is a unit of the ring;
    /// errors otherwise.
    pub fn new(q1: &QuadraticForm, q2: &QuadraticForm, gamma: RMatrix, ring: Ring) -> Result<EquivCertificate> {
        if q1.act(&gamma)? != *q2 {
            return Err(Error::Precondition("certificate does not transform Q1 into Q2".into()));
        }
        let ok = match &ring {
            Ring::Z => gamma.is_gl_z()?,
            Ring::ZS(s) => gamma.is_gl_zs(s)?,
        };
        if !ok {
            return Err(Error::Precondition("certificate matrix is not a unit of the ring".into()));
        }
        Ok(EquivCertificate {
            gamma,
            ring,
            verified: true,
        })
    }
}

/// Outcome of an equivalence search.
#[derive(Debug, Clone)]
pub enum EquivOutcome {
    /// Equivalent, with an exact certificate.
    Equivalent(EquivCertificate),
    /// Proved inequivalent (invariants or a complete search).
    NotEquivalent,
    /// The budgeted search ended without a decision.
    Inconclusive,
}

/// Decide `ℤ`-equivalence. Definite pairs are decided *completely* (via
/// Minkowski reduction and a finite short-vector matcher); indefinite pairs
/// are searched with `‖γ‖_∞ ≤ budget` and end in
/// [`EquivOutcome::Inconclusive`] when the box is exhausted.
pub fn z_equivalent(q1: &QuadraticForm, q2: &QuadraticForm, budget: &Rat) -> Result<EquivOutcome> {
    z_equivalent_striped(q1, q2, budget, 0, 1)
}

/// [`z_equivalent`] restricted to first-column candidates with index
/// `≡ stripe (mod n_stripes)`: the search space is partitioned so stripes
/// can run concurrently. Merge rule: any `Equivalent` wins; `NotEquivalent`
/// is stripe-independent (invariants / the complete definite path);
/// otherwise `Inconclusive`.
pub fn z_equivalent_striped(
    q1: &QuadraticForm,
    q2: &QuadraticForm,
    budget: &Rat,
    stripe: usize,
    n_stripes: usize,
) -> Result<EquivOutcome> {
    if q1.dim() != q2.dim() {
        return Err(Error::Dimension("forms have different dimensions".into()));
    }
    if !q1.is_nondegenerate() || !q2.is_nondegenerate() {
        return Err(Error::Degenerate("equivalence search needs nondegenerate forms".into()));
    }
    if q1 == q2 {
        let cert = EquivCertificate::new(q1, q2, RMatrix::identity(q1.dim()), Ring::Z)?;
        return Ok(EquivOutcome::Equivalent(cert));
    }
    // determinant is a ℤ-equivalence invariant (det γ = ±1)
    if q1.det() != q2.det() {
        return Ok(EquivOutcome::NotEquivalent);
    }
    // local invariants at ∞ and p | 2·det
    if !locally_equivalent_everywhere(q1, q2)? {
        return Ok(EquivOutcome::NotEquivalent);
    }
    let sig = q1.signature()?;
    if sig.is_definite() {
        return definite_equivalent(q1, q2);
    }
    indefinite_search(q1, q2, budget, stripe, n_stripes)
}

fn locally_equivalent_everywhere(q1: &QuadraticForm, q2: &QuadraticForm) -> Result<bool> {
    let mut primes: Vec<u64> = vec![2];
    let denom_scale = |q: &QuadraticForm| -> Int {
        let det = q.det();
        det.numer().clone().abs() * det.denom().clone().abs()
    };
    let mut n = denom_scale(q1) * denom_scale(q2);
    let mut p = Int::from(3u64);
    while &p * &p <= n {
        if (n.clone() % p.clone()).is_zero() {
            use num_traits::ToPrimitive;
            primes.push(p.to_u64().expect("small factor"));
            while (n.clone() % p.clone()).is_zero() {
                n /= p.clone();
            }
        }
        p += 2;
    }
    if n > Int::from(2u64) {
        use num_traits::ToPrimitive;
        if let Some(q) = n.to_u64() {
            primes.push(q);
        }
        // a huge leftover factor would need a primality split; the desk-scale
        // forms here keep determinants well within u64
    }
    if !equivalent_local(q1, q2, Place::Infinity)? {
        return Ok(false);
    }
    for p in primes {
        if crate::arith::is_prime(p) && !equivalent_local(q1, q2, Place::Prime(p))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Complete decision for definite pairs.
fn definite_equivalent(q1: &QuadraticForm, q2: &QuadraticForm) -> Result<EquivOutcome> {
    // reduce −Q for negative definite pairs (same transforms)
    let negate = q1.signature()?.positive == 0;
    let (r1, r2) = if negate {
        (q1.scale(&rat_i64(-1)), q2.scale(&rat_i64(-1)))
    } else {
        (q1.clone(), q2.clone())
    };
    // one common scalar clears both Gram matrices; scaling a form by a
    // constant changes no transform
    let scale = Rat::from(gram_denominator_lcm(&r1).lcm(&gram_denominator_lcm(&r2)));
    let (red1, g1) = minkowski_reduce(&r1.scale(&scale))?;
    let (red2, g2) = minkowski_reduce(&r2.scale(&scale))?;
    // match red1 → red2 completely
    match isometry_between(&red1, &red2, false)?.into_iter().next() {
        Some(m) => {
            let gamma = g1.mul(&m)?.mul(&g2.inverse()?)?;
            let cert = EquivCertificate::new(q1, q2, gamma, Ring::Z)?;
            Ok(EquivOutcome::Equivalent(cert))
        }
        None => Ok(EquivOutcome::NotEquivalent),
    }
}

fn gram_denominator_lcm(q: &QuadraticForm) -> Int {
    let mut lcm = Int::one();
    for i in 0..q.dim() {
        for j in 0..q.dim() {
            lcm = lcm.lcm(q.gram()[(i, j)].denom());
        }
    }
    lcm
}

/// All isometries from `r1` onto `r2` (definite, integral-cleared). With
/// `first_only`, stops after one.
fn isometry_between(
    r1: &QuadraticForm,
    r2: &QuadraticForm,
    all: bool,
) -> Result<Vec<RMatrix>> {
    let d = r1.dim();
    let max_target = (0..d)
        .map(|j| r2.gram()[(j, j)].clone())
        .max()
        .expect("d ≥ 1");
    // candidate pool on r1, bucketed by exact value, both signs expanded
    let pool = short_vectors(r1.gram(), &max_target)?;
    let mut buckets: std::collections::BTreeMap<Vec<(Int, Int)>, Vec<Vec<i64>>> =
        std::collections::BTreeMap::new();
    let key_of = |v: &Rat| vec![(v.numer().clone(), v.denom().clone())];
    for (v, val) in &pool {
        let e = buckets.entry(key_of(val)).or_default();
        e.push(v.clone());
        e.push(v.iter().map(|&c| -c).collect());
    }
    let mut results = Vec::new();
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(d);
    isometry_rec(
        r1,
        r2,
        &buckets,
        &key_of,
        0,
        &mut chosen,
        &mut results,
        all,
    )?;
    Ok(results)
}

#[allow(clippy::too_many_arguments)]
fn isometry_rec(
    r1: &QuadraticForm,
    r2: &QuadraticForm,
    buckets: &std::collections::BTreeMap<Vec<(Int, Int)>, Vec<Vec<i64>>>,
    key_of: &impl Fn(&Rat) -> Vec<(Int, Int)>,
    j: usize,
    chosen: &mut Vec<Vec<i64>>,
    results: &mut Vec<RMatrix>,
    all: bool,
) -> Result<()> {
    let d = r1.dim();
    if j == d {
        let mut m = RMatrix::zero(d, d);
        for (cj, col) in chosen.iter().enumerate() {
            for i in 0..d {
                m[(i, cj)] = rat_i64(col[i]);
            }
        }
        if m.is_gl_z()? && r1.act(&m)? == *r2 {
            results.push(m);
        }
        return Ok(());
    }
    let target = r2.gram()[(j, j)].clone();
    let Some(cands) = buckets.get(&key_of(&target)) else {
        return Ok(());
    };
    'cand: for v in cands {
        // cross terms against previously chosen columns
        for (i, prev) in chosen.iter().enumerate() {
            let mut cross = Rat::zero();
            for (a, &pa) in prev.iter().enumerate() {
                for (b, &vb) in v.iter().enumerate() {
                    if pa != 0 && vb != 0 {
                        cross += rat_i64(pa) * &r1.gram()[(a, b)] * rat_i64(vb);
                    }
                }
            }
            if cross != r2.gram()[(i, j)] {
                continue 'cand;
            }
        }
        chosen.push(v.clone());
        isometry_rec(r1, r2, buckets, key_of, j + 1, chosen, results, all)?;
        chosen.pop();
        if !all && !results.is_empty() {
            return Ok(());
        }
    }
    Ok(())
}

// ===========================================================================
// indefinite budgeted search
// ===========================================================================

/// Internal node budget for backtracking searches (a desk-scale guard
/// independent of the norm budget).
const SEARCH_NODE_CAP: u64 = 200_000_000;

fn gram_to_i64_twice(q: &QuadraticForm) -> Option<Vec<Vec<i64>>> {
    use num_traits::ToPrimitive;
    let d = q.dim();
    let mut out = vec![vec![0i64; d]; d];
    for i in 0..d {
        for j in 0..d {
            let x = q.gram()[(i, j)].clone() * rat_i64(2);
            if !x.denom().is_one() {
                return None;
            }
            out[i][j] = x.numer().to_i64()?;
        }
    }
    Some(out)
}

fn indefinite_search(
    q1: &QuadraticForm,
    q2: &QuadraticForm,
    budget: &Rat,
    stripe: usize,
    n_stripes: usize,
) -> Result<EquivOutcome> {
    let d = q1.dim();
    let (Some(t1), Some(t2)) = (gram_to_i64_twice(q1), gram_to_i64_twice(q2)) else {
        return Ok(EquivOutcome::Inconclusive);
    };
    let b = int_to_i64(&budget.floor().numer().clone()).max(0);
    if b == 0 {
        return Ok(EquivOutcome::Inconclusive);
    }
    let box_count = (2 * b as u128 + 1).pow(d as u32);
    if box_count > 400_000_000u128 {
        return Err(Error::Budget(format!(
            "norm budget {b} makes the candidate box too large for dimension {d}"
        )));
    }
    // columns ordered by |Q2(e_j)| ascending
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&j| t2[j][j].abs());
    // one sweep over the box, bucketing by which target diagonal is hit
    let targets: Vec<i64> = order.iter().map(|&j| t2[j][j]).collect();
    let mut lists: Vec<Vec<Vec<i64>>> = vec![Vec::new(); d];
    let mut x = vec![-b; d];
    loop {
        let val = eval_i128(&t1, &x);
        for (slot, &t) in targets.iter().enumerate() {
            if val == t as i128 {
                // halve by global sign through the first slot
                if slot != 0 || first_nonzero_positive(&x) {
                    lists[slot].push(x.clone());
                }
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == d {
                break;
            }
            x[k] += 1;
            if x[k] <= b {
                break;
            }
            x[k] = -b;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    for list in &mut lists {
        list.sort_by_key(|v| (v.iter().map(|&c| c.abs()).max().unwrap_or(0), v.clone()));
    }
    // stripe the first-column candidates
    let first: Vec<Vec<i64>> = lists[0]
        .iter()
        .enumerate()
        .filter(|(i, _)| i % n_stripes == stripe)
        .map(|(_, v)| v.clone())
        .collect();
    let mut nodes = 0u64;
    let mut chosen: Vec<Vec<i64>> = Vec::with_capacity(d);
    let found = indefinite_rec(
        &t1, &t2, &order, &lists, &first, 0, &mut chosen, &mut nodes,
    );
    match found {
        Some(cols) => {
            // columns are in `order`; scatter back
            let mut gamma = RMatrix::zero(d, d);
            for (slot, &j) in order.iter().enumerate() {
                for i in 0..d {
                    gamma[(i, j)] = rat_i64(cols[slot][i]);
                }
            }
            let cert = EquivCertificate::new(q1, q2, gamma, Ring::Z)?;
            Ok(EquivOutcome::Equivalent(cert))
        }
        None => Ok(EquivOutcome::Inconclusive),
    }
}

fn first_nonzero_positive(x: &[i64]) -> bool {
    for &c in x {
        if c != 0 {
            return c > 0;
        }
    }
    false
}

fn eval_i128(t: &[Vec<i64>], x: &[i64]) -> i128 {
    let d = x.len();
    let mut acc = 0i128;
    for i in 0..d {
        if x[i] == 0 {
            continue;
        }
        for j in 0..d {
            if x[j] != 0 {
                acc += x[i] as i128 * t[i][j] as i128 * x[j] as i128;
            }
        }
    }
    acc
}

fn cross_i128(t: &[Vec<i64>], x: &[i64], y: &[i64]) -> i128 {
    let d = x.len();
    let mut acc = 0i128;
    for i in 0..d {
        if x[i] == 0 {
            continue;
        }
        for j in 0..d {
            if y[j] != 0 {
                acc += x[i] as i128 * t[i][j] as i128 * y[j] as i128;
            }
        }
    }
    acc
}

#[allow(clippy::too_many_arguments)]
fn indefinite_rec(
    t1: &[Vec<i64>],
    t2: &[Vec<i64>],
    order: &[usize],
    lists: &[Vec<Vec<i64>>],
    first: &[Vec<i64>],
    slot: usize,
    chosen: &mut Vec<Vec<i64>>,
    nodes: &mut u64,
) -> Option<Vec<Vec<i64>>> {
    let d = order.len();
    if slot == d {
        return Some(chosen.clone());
    }
    let cands: &[Vec<i64>] = if slot == 0 { first } else { &lists[slot] };
    'cand: for v in cands {
        *nodes += 1;
        if *nodes > SEARCH_NODE_CAP {
            return None;
        }
        for (prev_slot, prev) in chosen.iter().enumerate() {
            // target cross term 2·b2[order[prev_slot]][order[slot]]
            let want = t2[order[prev_slot]][order[slot]] as i128;
            if cross_i128(t1, prev, v) != want {
                continue 'cand;
            }
        }
        // expand both signs for non-first slots (the pool stores one sign
        // convention per vector only through the sweep symmetry)
        chosen.push(v.clone());
        if let Some(res) = indefinite_rec(t1, t2, order, lists, first, slot + 1, chosen, nodes) {
            return Some(res);
        }
        chosen.pop();
    }
    None
}

// ===========================================================================
// Z_S-equivalence
// ===========================================================================

/// Budget for [`zs_equivalent`]: the archimedean norm cap on `γ` and the
/// largest denominator exponent `k` (certificates use `γ = γ'/p_S^k`).
#[derive(Debug, Clone)]
pub struct ZsBudget {
    /// Cap on `‖γ‖_∞`.
    pub b_inf: Rat,
    /// Largest denominator exponent.
    pub k_max: u32,
}

/// Decide `ℤ_S`-equivalence by searching `γ = γ'/p_S^k` with `γ'` integral,
/// `k` ascending (so certificates have minimal denominator), and the
/// `p`-adic norm ceilings of the equivalence bounds pruning the `k` range.
pub fn zs_equivalent(
    q1: &QuadraticForm,
    q2: &QuadraticForm,
    s: &PlaceSet,
    budget: &ZsBudget,
) -> Result<EquivOutcome> {
    if q1.dim() != q2.dim() {
        return Err(Error::Dimension("forms have different dimensions".into()));
    }
    if !q1.is_nondegenerate() || !q2.is_nondegenerate() {
        return Err(Error::Degenerate("equivalence search needs nondegenerate forms".into()));
    }
    if q1 == q2 {
        let cert = EquivCertificate::new(q1, q2, RMatrix::identity(q1.dim()), Ring::ZS(s.clone()))?;
        return Ok(EquivOutcome::Equivalent(cert));
    }
    // det₂/det₁ must be the square of an S-unit
    let ratio = q2.det() / q1.det();
    if !ratio.is_positive() || !is_s_unit_square(&ratio, s) {
        return Ok(EquivOutcome::NotEquivalent);
    }
    // local pre-check over ∞, S, and primes dividing the determinants
    if !locally_equivalent_everywhere(q1, q2)? {
        return Ok(EquivOutcome::NotEquivalent);
    }
    for p in s.finite_places() {
        if !equivalent_local(q1, q2, Place::Prime(p))? {
            return Ok(EquivOutcome::NotEquivalent);
        }
    }
    // p-adic ceilings: ‖γ‖_p ≤ p^{1+⌈v_p(det Q1)/2⌉} (odd p),
    // 2^{(d+2)+⌈v₂(det)/2⌉}; a denominator p_S^k has ‖γ‖_p = p^k·‖γ'‖_p,
    // so k beyond every ceiling exponent is pruned.
    let d = q1.dim();
    let mut k_cap = budget.k_max;
    for p in s.finite_places() {
        let v = crate::arith::padic_valuation(&q1.det(), p)?
            .finite()
            .expect("nondegenerate");
        // |det Q1|_p^{-1/2} = p^{v/2} for v = v_p(det) ≥ 0
        let vv = v.max(0);
        let extra = if p == 2 { (d + 2) as i64 } else { 1 };
        let ceiling = (extra + vv.div_euclid(2) + vv.rem_euclid(2)).max(0) as u32;
        k_cap = k_cap.min(ceiling + 2); // slack: ceilings bound ‖γ‖_p, not k alone
    }
    let ps = Rat::from(s.p_s());
    let mut scale_pow = Rat::one();
    for k in 0..=k_cap {
        if k > 0 {
            scale_pow *= &ps * &ps;
        }
        let target = q2.scale(&scale_pow);
        let b_eff = budget.b_inf.clone() * pow_rat_usize(&ps, k as usize);
        match bounded_congruence_search(q1, &target, &b_eff)? {
            Some(gamma_prime) => {
                let denom = pow_rat_usize(&ps, k as usize);
                let gamma = gamma_prime.scale(&denom.recip());
                let cert = EquivCertificate::new(q1, q2, gamma, Ring::ZS(s.clone()))?;
                return Ok(EquivOutcome::Equivalent(cert));
            }
            None => continue,
        }
    }
    Ok(EquivOutcome::Inconclusive)
}

fn is_s_unit_square(ratio: &Rat, s: &PlaceSet) -> bool {
    // positive rational equal to ∏_{p ∈ S} p^{2a_p}?
    let mut n = ratio.numer().clone().abs();
    let mut m = ratio.denom().clone().abs();
    for p in s.finite_places() {
        let p = Int::from(p);
        let pp = &p * &p;
        while (n.clone() % pp.clone()).is_zero() {
            n /= pp.clone();
        }
        while (m.clone() % pp.clone()).is_zero() {
            m /= pp.clone();
        }
    }
    n.is_one() && m.is_one()
}

/// Search integral `γ'` with `act(Q1, γ') = target`, `‖γ'‖_∞ ≤ b`, without
/// any unimodularity constraint (determinants are fixed by the equation).
fn bounded_congruence_search(
    q1: &QuadraticForm,
    target: &QuadraticForm,
    b: &Rat,
) -> Result<Option<RMatrix>> {
    // reuse the indefinite engine against the scaled target; definite forms
    // also pass through it (the box is small at desk scale)
    let d = q1.dim();
    let (Some(t1), Some(t2)) = (gram_to_i64_twice(q1), gram_to_i64_twice(target)) else {
        return Ok(None);
    };
    let bb = int_to_i64(&b.floor().numer().clone()).max(0);
    if bb == 0 {
        return Ok(None);
    }
    let box_count = (2 * bb as u128 + 1).pow(d as u32);
    if box_count > 400_000_000u128 {
        return Err(Error::Budget(format!(
            "norm budget {bb} makes the candidate box too large for dimension {d}"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by_key(|&j| t2[j][j].abs());
    let targets: Vec<i64> = order.iter().map(|&j| t2[j][j]).collect();
    let mut lists: Vec<Vec<Vec<i64>>> = vec![Vec::new(); d];
    let mut x = vec![-bb; d];
    loop {
        let val = eval_i128(&t1, &x);
        for (slot, &t) in targets.iter().enumerate() {
            if val == t as i128 && (slot != 0 || first_nonzero_positive(&x)) {
                lists[slot].push(x.clone());
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                break;
            }
            x[k] += 1;
            if x[k] <= bb {
                break;
            }
            x[k] = -bb;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    for list in &mut lists {
        list.sort_by_key(|v| (v.iter().map(|&c| c.abs()).max().unwrap_or(0), v.clone()));
    }
    let first = lists[0].clone();
    let mut nodes = 0u64;
    let mut chosen = Vec::with_capacity(d);
    match indefinite_rec(&t1, &t2, &order, &lists, &first, 0, &mut chosen, &mut nodes) {
        Some(cols) => {
            let mut gamma = RMatrix::zero(d, d);
            for (slot, &j) in order.iter().enumerate() {
                for i in 0..d {
                    gamma[(i, j)] = rat_i64(cols[slot][i]);
                }
            }
            Ok(Some(gamma))
        }
        None => Ok(None),
    }
}

// ===========================================================================
// automorphism groups
// ===========================================================================

/// The full finite automorphism group `O(Q, ℤ)` of a positive definite
/// integral form (desk scale `d ≤ 4`), with every element verified.
#[derive(Debug, Clone)]
pub struct AutomorphismGroup {
    /// All elements (hence trivially a generating set closed under
    /// inversion).
    pub generators: Vec<RMatrix>,
    /// Group order.
    pub order: u64,
}

/// Compute `O(Q, ℤ)` for positive definite integral `Q`, `d ≤ 4`, by the
/// complete short-vector matcher; every element is checked to preserve `Q`
/// and to satisfy the archimedean bound `‖g‖_∞ ≤ d^{d+1}·d!·‖Q‖^{d/2}`
/// (verified by squared comparison).
pub fn automorphism_generators(q: &QuadraticForm) -> Result<AutomorphismGroup> {
    let d = q.dim();
    if d > 4 {
        return Err(Error::Budget("automorphism groups computed for d ≤ 4".into()));
    }
    let sig = q.signature()?;
    if !sig.is_definite() {
        return Err(Error::Precondition("automorphism groups need a definite form".into()));
    }
    let base = if sig.positive == 0 {
        q.scale(&rat_i64(-1))
    } else {
        q.clone()
    };
    let base = base.scale(&Rat::from(gram_denominator_lcm(&base)));
    let elements = isometry_between(&base, &base, true)?;
    // archimedean bound, exact squared comparison
    let bound_factor = {
        let dd = Int::from(d as u64).pow((d + 1) as u32);
        Rat::from(dd * crate::arith::factorial(d as u64))
    };
    let norm_q = q.coefficient_norm(Place::Infinity);
    let bound_sq = &bound_factor * &bound_factor * pow_rat_usize(&norm_q, d);
    for g in &elements {
        if q.act(g)? != *q {
            return Err(Error::Internal("automorphism fails to preserve Q".into()));
        }
        let n = g.nu_norm(Place::Infinity);
        if &n * &n > bound_sq {
            return Err(Error::Internal("automorphism exceeds the archimedean bound".into()));
        }
    }
    let order = elements.len() as u64;
    Ok(AutomorphismGroup {
        generators: elements,
        order,
    })
}

/// Closure of a finite set of matrices under multiplication (desk-scale cap).
pub fn group_closure(gens: &[RMatrix], cap: usize) -> Result<Vec<RMatrix>> {
    if gens.is_empty() {
        return Ok(vec![]);
    }
    let d = gens[0].nrows();
    let mut elems: Vec<RMatrix> = vec![RMatrix::identity(d)];
    let mut frontier: Vec<RMatrix> = vec![RMatrix::identity(d)];
    while let Some(e) = frontier.pop() {
        for g in gens {
            let prod = e.mul(g)?;
            if !elems.contains(&prod) {
                if elems.len() >= cap {
                    return Err(Error::Budget("group closure exceeded its cap".into()));
                }
                elems.push(prod.clone());
                frontier.push(prod);
            }
        }
    }
    Ok(elems)
}

/// The generator-assembly combinator: all products `u₁⁻¹·m·u₂`
/// (`u_i ∈ U`, `m ∈ M`) passing the membership predicate, deduplicated.
pub fn assemble_generators(
    u: &[RMatrix],
    m: &[RMatrix],
    member: impl Fn(&RMatrix) -> bool,
) -> Result<Vec<RMatrix>> {
    if u.is_empty() || m.is_empty() {
        return Err(Error::Precondition("assembly needs nonempty U and M".into()));
    }
    let mut out: Vec<RMatrix> = Vec::new();
    for u1 in u {
        let u1_inv = u1.inverse()?;
        for mm in m {
            let left = u1_inv.mul(mm)?;
            for u2 in u {
                let prod = left.mul(u2)?;
                if member(&prod) && !out.contains(&prod) {
                    out.push(prod);
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn qf(coeffs: &[i64]) -> QuadraticForm {
        QuadraticForm::diagonal_i64(coeffs)
    }

    fn binary(a: i64, b: i64, c: i64) -> QuadraticForm {
        // a·x² + b·xy + c·y²
        QuadraticForm::from_coeffs(
            2,
            &[
                (1, 1, rat_i64(a)),
                (1, 2, rat_i64(b)),
                (2, 2, rat_i64(c)),
            ],
        )
        .unwrap()
    }

    fn det68_pair() -> (QuadraticForm, QuadraticForm) {
        let q1 = QuadraticForm::from_coeffs(
            3,
            &[
                (1, 1, rat_i64(1)),
                (2, 2, rat_i64(-3)),
                (2, 3, rat_i64(-2)),
                (3, 3, rat_i64(-23)),
            ],
        )
        .unwrap();
        let q2 = QuadraticForm::from_coeffs(
            3,
            &[
                (1, 1, rat_i64(1)),
                (2, 2, rat_i64(-7)),
                (2, 3, rat_i64(-6)),
                (3, 3, rat_i64(-11)),
            ],
        )
        .unwrap();
        (q1, q2)
    }

    fn random_unimodular(rng: &mut rand_chacha::ChaCha8Rng, d: usize, steps: usize) -> RMatrix {
        let mut u = RMatrix::identity(d);
        for _ in 0..steps {
            let i = rng.gen_range(0..d);
            let mut j = rng.gen_range(0..d);
            while j == i {
                j = rng.gen_range(0..d);
            }
            let c = rat_i64(rng.gen_range(-2i64..=2));
            // shear: column j += c · column i
            for r in 0..d {
                let add = &c * &u[(r, i)];
                u[(r, j)] += add;
            }
        }
        u
    }

    #[test]
    fn siegel_params_validation() {
        assert!(SiegelParams::from_alpha_squared(rat_i64(1), rat_i64(1)).is_err());
        assert!(SiegelParams::from_alpha_squared(rat_frac(4, 3), rat_frac(1, 2)).is_ok());
        let s = SiegelParams::standard();
        assert_eq!(s.alpha_squared(), &rat_i64(4));
        assert_eq!(s.beta(), &rat_i64(1));
    }

    #[test]
    fn reducedness_examples() {
        let p = SiegelParams::standard();
        assert!(is_reduced_definite(&qf(&[1, 1]), &p).unwrap());
        // x² + 3xy + 3y²: D = (1, 3/4), n₁₂ = 3/2 → β violated
        assert!(!is_reduced_definite(&binary(1, 3, 3), &p).unwrap());
        // 5x² + y²: D = (5, 1), 5 > 4
        assert!(!is_reduced_definite(&qf(&[5, 1]), &p).unwrap());
        // indefinite → precondition error
        assert!(is_reduced_definite(&qf(&[1, -1]), &p).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let (red, g) = minkowski_reduce(&qf(&[1, 1])).unwrap();
        assert_eq!(red, qf(&[1, 1]));
        assert!(g.is_gl_z().unwrap());
        // 5x² + 6xy + 2y² has minimum 1 at (1, −1); reduces to x² + y²
        let q = binary(5, 6, 2);
        let (red, g) = minkowski_reduce(&q).unwrap();
        assert_eq!(q.act(&g).unwrap(), red);
        assert_eq!(red, qf(&[1, 1]));
        // 13x² + 16xy + 5y² likewise has minimum 1
        let q = binary(13, 16, 5);
        let (red, g) = minkowski_reduce(&q).unwrap();
        assert_eq!(q.act(&g).unwrap(), red);
        assert_eq!(red.gram()[(0, 0)], rat_i64(1));
        assert!(g.is_gl_z().unwrap());
    }

    #[test]
    fn minkowski_idempotent_and_planted() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(107);
        for _ in 0..30 {
            let d = rng.gen_range(2..=3);
            // random definite integral gram via ᵗT·T + small diagonal
            let mut t = RMatrix::zero(d, d);
            for i in 0..d {
                for j in 0..d {
                    t[(i, j)] = rat_i64(rng.gen_range(-3i64..=3));
                }
            }
            let gram = t.transpose().mul(&t).unwrap();
            let mut gram = gram;
            for i in 0..d {
                gram[(i, i)] += rat_i64(rng.gen_range(1i64..=4));
            }
            let q = QuadraticForm::from_gram(gram).unwrap();
            let (red, _) = minkowski_reduce(&q).unwrap();
            // idempotence: reducing the reduced form keeps the diagonal
            let (red2, _) = minkowski_reduce(&red).unwrap();
            for i in 0..d {
                assert_eq!(red.gram()[(i, i)], red2.gram()[(i, i)]);
            }
            // planted transform recovery: reduced forms of q and q∘U share
            // successive minima and are equivalent by the complete matcher
            let u = random_unimodular(&mut rng, d, 6);
            let qu = q.act(&u).unwrap();
            let (red_u, _) = minkowski_reduce(&qu).unwrap();
            for i in 0..d {
                assert_eq!(red.gram()[(i, i)], red_u.gram()[(i, i)]);
            }
            match z_equivalent(&red, &red_u, &rat_i64(10)).unwrap() {
                EquivOutcome::Equivalent(c) => assert!(c.verified),
                _ => panic!("planted pair not recovered"),
            }
        }
    }

    #[test]
    fn enumeration_examples() {
        // d=2, det 1: only x² + y²
        let forms = enumerate_reduced_definite(2, 1).unwrap();
        assert_eq!(forms.len(), 1);
        assert_eq!(forms[0], qf(&[1, 1]));
        // d=2, det 3: x² + 3y² and the doubled hexagonal form
        let forms = enumerate_reduced_definite(2, 3).unwrap();
        assert_eq!(forms.len(), 2);
        assert!(forms.contains(&qf(&[1, 3])));
        let hex = QuadraticForm::from_gram(
            RMatrix::from_i64_rows(&[&[2, 1], &[1, 2]]).unwrap(),
        )
        .unwrap();
        assert!(forms.contains(&hex));
        // pairwise inequivalent by the complete path
        for i in 0..forms.len() {
            for j in (i + 1)..forms.len() {
                assert!(matches!(
                    z_equivalent(&forms[i], &forms[j], &rat_i64(10)).unwrap(),
                    EquivOutcome::NotEquivalent
                ));
            }
        }
        // d=3, det 1: only the sum of three squares
        let forms = enumerate_reduced_definite(3, 1).unwrap();
        assert_eq!(forms.len(), 1);
        assert_eq!(forms[0], qf(&[1, 1, 1]));
        // out of scale
        assert!(enumerate_reduced_definite(5, 1).is_err());
    }

    #[test]
    fn z_equivalence_definite_and_rejects() {
        // determinants differ
        assert!(matches!(
            z_equivalent(&qf(&[1, 1]), &qf(&[1, 2]), &rat_i64(10)).unwrap(),
            EquivOutcome::NotEquivalent
        ));
        // same determinant, different class (x²+9y² vs 2x²+2xy+5y², det 9)
        let q1 = qf(&[1, 9]);
        let q2 = binary(2, 2, 5);
        assert_eq!(q1.det(), q2.det());
        assert!(matches!(
            z_equivalent(&q1, &q2, &rat_i64(10)).unwrap(),
            EquivOutcome::NotEquivalent
        ));
        // planted definite witnesses
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let d = rng.gen_range(2..=3);
            let mut t = RMatrix::zero(d, d);
            for i in 0..d {
                for j in 0..d {
                    t[(i, j)] = rat_i64(rng.gen_range(-2i64..=2));
                }
            }
            let mut gram = t.transpose().mul(&t).unwrap();
            for i in 0..d {
                gram[(i, i)] += rat_i64(rng.gen_range(1i64..=3));
            }
            let q = QuadraticForm::from_gram(gram).unwrap();
            let u = random_unimodular(&mut rng, d, 5);
            let qu = q.act(&u).unwrap();
            match z_equivalent(&q, &qu, &rat_i64(10)).unwrap() {
                EquivOutcome::Equivalent(c) => {
                    assert!(c.verified);
                    assert_eq!(q.act(&c.gamma).unwrap(), qu);
                    assert!(c.gamma.is_gl_z().unwrap());
                }
                _ => panic!("planted definite witness not found"),
            }
        }
    }

    #[test]
    fn z_equivalence_indefinite_planted() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        let q = qf(&[1, -1, 2]);
        for _ in 0..10 {
            let u = random_unimodular(&mut rng, 3, 4);
            let qu = q.act(&u).unwrap();
            match z_equivalent(&q, &qu, &rat_i64(40)).unwrap() {
                EquivOutcome::Equivalent(c) => {
                    assert!(c.verified);
                    assert_eq!(q.act(&c.gamma).unwrap(), qu);
                }
                other => panic!("planted indefinite witness not found: {other:?}"),
            }
        }
        // striped union behaves like the full search
        let u = random_unimodular(&mut rng, 3, 3);
        let qu = q.act(&u).unwrap();
        let mut found = false;
        for stripe in 0..4 {
            if let EquivOutcome::Equivalent(_) =
                z_equivalent_striped(&q, &qu, &rat_i64(40), stripe, 4).unwrap()
            {
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn z_equivalence_ternary_pair() {
        let (q1, q2) = det68_pair();
        match z_equivalent(&q1, &q2, &rat_i64(100)).unwrap() {
            EquivOutcome::Equivalent(c) => {
                assert!(c.verified);
                assert_eq!(q1.act(&c.gamma).unwrap(), q2);
                assert!(c.gamma.is_gl_z().unwrap());
                assert!(c.gamma.nu_norm(Place::Infinity) <= rat_i64(100));
            }
            other => panic!("ternary pair should be ℤ-equivalent, got {other:?}"),
        }
    }

    #[test]
    fn zs_equivalence_examples() {
        // identity certificate
        let q = qf(&[1, -1]);
        let s = PlaceSet::new([2]).unwrap();
        let budget = ZsBudget {
            b_inf: rat_i64(8),
            k_max: 2,
        };
        assert!(matches!(
            zs_equivalent(&q, &q, &s, &budget).unwrap(),
            EquivOutcome::Equivalent(_)
        ));
        // x² − y² vs 4x² − y²: S-unit scaling witness with denominator
        // structure at 2
        let q2 = qf(&[4, -1]);
        match zs_equivalent(&q, &q2, &s, &budget).unwrap() {
            EquivOutcome::Equivalent(c) => {
                assert!(c.verified);
                assert_eq!(q.act(&c.gamma).unwrap(), q2);
                assert!(matches!(c.ring, Ring::ZS(_)));
                assert!(c.gamma.is_gl_zs(&s).unwrap());
                // the transform genuinely involves the prime 2
                assert_ne!(c.gamma.det().unwrap().abs(), rat_i64(1));
            }
            other => panic!("scaling witness not found: {other:?}"),
        }
        // without 2 ∈ S the determinant ratio 4 is not an S-unit square
        let s_inf = PlaceSet::infinity_only();
        assert!(matches!(
            zs_equivalent(&q, &q2, &s_inf, &budget).unwrap(),
            EquivOutcome::NotEquivalent
        ));
        // the ternary pair: ℤ ⊂ ℤ_S reuse
        let (q1, q2) = det68_pair();
        let s = PlaceSet::new([2]).unwrap();
        let budget = ZsBudget {
            b_inf: rat_i64(100),
            k_max: 1,
        };
        match zs_equivalent(&q1, &q2, &s, &budget).unwrap() {
            EquivOutcome::Equivalent(c) => {
                assert!(c.gamma.is_gl_zs(&s).unwrap());
            }
            other => panic!("expected equivalence, got {other:?}"),
        }
    }

    #[test]
    fn automorphism_orders() {
        let g = automorphism_generators(&qf(&[1, 1])).unwrap();
        assert_eq!(g.order, 8);
        let g = automorphism_generators(&qf(&[1, 1, 1])).unwrap();
        assert_eq!(g.order, 48);
        let g = automorphism_generators(&qf(&[1, 2])).unwrap();
        assert_eq!(g.order, 4);
        // closed under inversion & closure matches
        let q = qf(&[1, 2]);
        let auts = automorphism_generators(&q).unwrap();
        for a in &auts.generators {
            let inv = a.inverse().unwrap();
            assert!(auts.generators.contains(&inv));
        }
        let closure = group_closure(&auts.generators, 1000).unwrap();
        assert_eq!(closure.len() as u64, auts.order);
        // indefinite rejected
        assert!(automorphism_generators(&qf(&[1, -1])).is_err());
    }

    #[test]
    fn assemble_examples() {
        let g = RMatrix::from_i64_rows(&[&[0, 1], &[1, 0]]).unwrap();
        let out = assemble_generators(
            &[RMatrix::identity(2)],
            std::slice::from_ref(&g),
            |_| true,
        )
        .unwrap();
        assert_eq!(out, vec![g.clone()]);
        // filter semantics: integral isometries of x²+2y² among samples
        let q = qf(&[1, 2]);
        let samples = vec![
            RMatrix::identity(2),
            RMatrix::from_i64_rows(&[&[-1, 0], &[0, 1]]).unwrap(),
            RMatrix::from_i64_rows(&[&[0, 1], &[1, 0]]).unwrap(), // not an isometry
        ];
        let member = |m: &RMatrix| m.is_gl_z().unwrap_or(false) && q.act(m).map(|r| r == q).unwrap_or(false);
        let out = assemble_generators(&[RMatrix::identity(2)], &samples, member).unwrap();
        assert_eq!(out.len(), 2);
        // closure check: assembled set generates the full O(Q, ℤ)
        let auts = automorphism_generators(&q).unwrap();
        let assembled =
            assemble_generators(&[RMatrix::identity(2)], &auts.generators, |m| {
                m.is_gl_z().unwrap_or(false) && q.act(m).map(|r| r == q).unwrap_or(false)
            })
            .unwrap();
        let closure = group_closure(&assembled, 100).unwrap();
        assert_eq!(closure.len() as u64, auts.order);
    }

    #[test]
    fn translate_bound_examples() {
        // 𝓛₂ = 2²·2³·3⁴·2³ = 20736
        let b = RMatrix::identity(2);
        assert_eq!(translate_bound(&b).unwrap(), rat_i64(20736));
        // monotone in |det|: det 2 scales by 2^{2d}
        let b2 = RMatrix::from_i64_rows(&[&[2, 0], &[0, 1]]).unwrap();
        assert_eq!(translate_bound(&b2).unwrap(), rat_i64(20736 * 16));
        // d = 3 exact value with the half-power ceiling: ceil(3^{9/2}) = 141
        let b3 = RMatrix::identity(3);
        let expected = Rat::from(
            Int::from(2u64).pow(6) * Int::from(141u64) * Int::from(4u64).pow(9)
                * Int::from(6u64).pow(4),
        );
        assert_eq!(translate_bound(&b3).unwrap(), expected);
        // singular rejected
        let sing = RMatrix::from_i64_rows(&[&[1, 1], &[1, 1]]).unwrap();
        assert!(translate_bound(&sing).is_err());
    }

    #[test]
    fn short_vector_sanity() {
        // x² + y²: vectors of value ≤ 2 are ±e₁, ±e₂, (±1, ±1) — canonical
        // representatives: e₁, e₂, (1, 1), (1, −1)
        let pool = short_vectors(qf(&[1, 1]).gram(), &rat_i64(2)).unwrap();
        assert_eq!(pool.len(), 4);
        assert_eq!(pool[0].1, rat_i64(1));
        // hexagonal gram: 6 minimal vectors → 3 canonical of value 2
        let hex = RMatrix::from_i64_rows(&[&[2, 1], &[1, 2]]).unwrap();
        let pool = short_vectors(&hex, &rat_i64(2)).unwrap();
        assert_eq!(pool.len(), 3);
        assert!(pool.iter().all(|(_, v)| *v == rat_i64(2)));
    }
}
