//! The constants ledger and every explicit bound, volume, and counting
//! formula as exact-arithmetic calculators.
//!
//! Values that involve irrational radicals (half- or quarter-integer
//! exponents) or the two non-explicit parameters are carried symbolically by
//! [`PowVal`]: a product `∏ base^e` over prime bases and the parameters `D1`
//! (the archimedean decay constant, not explicit) and `V∞` (the archimedean
//! volume `vol X¹_{d,∞}`, external input). No float ever enters a certified
//! value; floats appear only in the display helpers.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::{factorial, is_prime, rat_frac, rat_i64, s_height_scalar, Int, Place, PlaceSet, Rat};
use crate::error::{Error, Result};
use crate::qform::QuadraticForm;

// ===========================================================================
// PowVal: exact symbolic products
// ===========================================================================

/// A base of a [`PowVal`] factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Base {
    /// A prime number.
    Prime(u64),
    /// The non-explicit archimedean decay parameter.
    D1,
    /// The external archimedean volume parameter `vol X¹_{d,∞}`.
    VInf,
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Prime(p) => write!(f, "{p}"),
            Base::D1 => write!(f, "D1"),
            Base::VInf => write!(f, "V∞"),
        }
    }
}

/// A positive value represented exactly as `∏ base^exponent` with rational
/// exponents. The empty product is 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PowVal {
    factors: BTreeMap<Base, Rat>,
}

impl PowVal {
    /// The value 1.
    pub fn one() -> PowVal {
        PowVal::default()
    }

    /// Exact value of a positive integer (trial-division factorization).
    pub fn from_int(n: i64) -> Result<PowVal> {
        if n <= 0 {
            return Err(Error::Precondition("PowVal represents positive values".into()));
        }
        let mut n = n as u64;
        let mut factors = BTreeMap::new();
        let mut push = |p: u64, e: u64| {
            if e > 0 {
                *factors.entry(Base::Prime(p)).or_insert_with(Rat::zero) += rat_i64(e as i64);
            }
        };
        let mut e = 0;
        while n % 2 == 0 {
            n /= 2;
            e += 1;
        }
        push(2, e);
        let mut p = 3;
        while p * p <= n {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            push(p, e);
            p += 2;
        }
        if n > 1 {
            push(n, 1);
        }
        Ok(PowVal { factors }.normalized())
    }

    /// Exact value of a positive rational.
    pub fn from_rat(q: &Rat) -> Result<PowVal> {
        if !q.is_positive() {
            return Err(Error::Precondition("PowVal represents positive values".into()));
        }
        let num = q
            .numer()
            .to_i64()
            .ok_or_else(|| Error::Budget("value too large to factor".into()))?;
        let den = q
            .denom()
            .to_i64()
            .ok_or_else(|| Error::Budget("value too large to factor".into()))?;
        Ok(PowVal::from_int(num)?.div(&PowVal::from_int(den)?))
    }

    /// `p^e` for prime `p`.
    pub fn prime_pow(p: u64, e: Rat) -> PowVal {
        assert!(is_prime(p), "prime base required");
        let mut factors = BTreeMap::new();
        factors.insert(Base::Prime(p), e);
        PowVal { factors }.normalized()
    }

    /// The parameter `D1` to the given exponent.
    pub fn d1_pow(e: Rat) -> PowVal {
        let mut factors = BTreeMap::new();
        factors.insert(Base::D1, e);
        PowVal { factors }.normalized()
    }

    /// The parameter `V∞` to the given exponent.
    pub fn v_inf_pow(e: Rat) -> PowVal {
        let mut factors = BTreeMap::new();
        factors.insert(Base::VInf, e);
        PowVal { factors }.normalized()
    }

    fn normalized(mut self) -> PowVal {
        self.factors.retain(|_, e| !e.is_zero());
        self
    }

    /// Product of two values.
    pub fn mul(&self, other: &PowVal) -> PowVal {
        let mut factors = self.factors.clone();
        for (b, e) in &other.factors {
            *factors.entry(*b).or_insert_with(Rat::zero) += e;
        }
        PowVal { factors }.normalized()
    }

    /// Quotient.
    pub fn div(&self, other: &PowVal) -> PowVal {
        self.mul(&other.pow_i(-1))
    }

    /// Power with a rational exponent (valid: all bases are positive reals).
    pub fn pow(&self, e: &Rat) -> PowVal {
        let factors = self
            .factors
            .iter()
            .map(|(b, f)| (*b, f * e))
            .collect();
        PowVal { factors }.normalized()
    }

    /// Power with an integer exponent.
    pub fn pow_i(&self, e: i64) -> PowVal {
        self.pow(&rat_i64(e))
    }

    /// Exact rational value when all exponents are integers and no parameter
    /// occurs.
    pub fn to_rational(&self) -> Option<Rat> {
        let mut acc = Rat::one();
        for (b, e) in &self.factors {
            let Base::Prime(p) = b else { return None };
            if !e.denom().is_one() {
                return None;
            }
            let k = e.numer().to_i64()?;
            let step = rat_i64(*p as i64);
            if k >= 0 {
                for _ in 0..k {
                    acc *= &step;
                }
            } else {
                for _ in 0..(-k) {
                    acc /= &step;
                }
            }
        }
        Some(acc)
    }

    /// `true` when the value depends on `D1` or `V∞`.
    pub fn is_parametric(&self) -> bool {
        self.factors
            .keys()
            .any(|b| matches!(b, Base::D1 | Base::VInf))
    }

    /// The parameters the value depends on, as display names.
    pub fn parametric_bases(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.factors.contains_key(&Base::D1) {
            out.push("D1");
        }
        if self.factors.contains_key(&Base::VInf) {
            out.push("V∞");
        }
        out
    }

    /// Exponent of a base (zero when absent).
    pub fn exponent_of(&self, base: &Base) -> Rat {
        self.factors.get(base).cloned().unwrap_or_else(Rat::zero)
    }

    /// `log₁₀` of the value with the given parameter values (display only).
    pub fn log10(&self, d1: f64, v_inf: f64) -> f64 {
        let mut acc = 0.0;
        for (b, e) in &self.factors {
            let base = match b {
                Base::Prime(p) => *p as f64,
                Base::D1 => d1,
                Base::VInf => v_inf,
            };
            let ef = e.numer().to_f64().unwrap_or(f64::NAN)
                / e.denom().to_f64().unwrap_or(f64::NAN);
            acc += ef * base.log10();
        }
        acc
    }

    /// Float value with the given parameter values (display only; may
    /// overflow to infinity for the astronomically large constants).
    pub fn approx(&self, d1: f64, v_inf: f64) -> f64 {
        10f64.powf(self.log10(d1, v_inf))
    }
}

impl fmt::Display for PowVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for (b, e) in &self.factors {
            if !first {
                write!(f, "·")?;
            }
            first = false;
            if e.is_one() {
                write!(f, "{b}")?;
            } else if e.denom().is_one() {
                write!(f, "{b}^{}", e.numer())?;
            } else {
                write!(f, "{b}^({}/{})", e.numer(), e.denom())?;
            }
        }
        Ok(())
    }
}

// ===========================================================================
// constants ledger
// ===========================================================================

/// The immutable ledger of the explicit constants, all exact [`PowVal`]s;
/// entries touching `D1` or `V∞` are parametric by construction.
#[derive(Debug, Clone)]
pub struct ConstantsLedger {
    d: usize,
    d1: Rat,
    v_inf: Rat,
    entries: BTreeMap<&'static str, PowVal>,
}

fn pv_int(n: i64) -> PowVal {
    PowVal::from_int(n).expect("positive")
}

fn pv_rat(q: &Rat) -> PowVal {
    PowVal::from_rat(q).expect("positive")
}

fn pv_fact(d: usize) -> PowVal {
    let f = factorial(d as u64);
    PowVal::from_int(f.to_i64().expect("desk-scale factorial")).expect("positive")
}

impl ConstantsLedger {
    /// Build the ledger for dimension `d ≥ 2` with explicit parameter values
    /// (used only for numeric display; the ledger itself stays symbolic).
    pub fn new(d: usize, d1: Rat, v_inf: Rat) -> Result<ConstantsLedger> {
        if d < 2 {
            return Err(Error::Dimension("the ledger needs d ≥ 2".into()));
        }
        if d > 8 {
            return Err(Error::Budget("ledger dimension out of desk scale (d ≤ 8)".into()));
        }
        if !d1.is_positive() || !v_inf.is_positive() {
            return Err(Error::Precondition("parameters must be positive".into()));
        }
        let entries = build_entries(d);
        Ok(ConstantsLedger {
            d,
            d1,
            v_inf,
            entries,
        })
    }

    /// Ledger with the default parameter values `D1 = 1`, `V∞ = 1` (both
    /// non-rigorous placeholders, flagged through the parametric tags).
    pub fn with_defaults(d: usize) -> Result<ConstantsLedger> {
        ConstantsLedger::new(d, Rat::one(), Rat::one())
    }

    /// Dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    /// The configured `D1` value.
    pub fn d1_value(&self) -> &Rat {
        &self.d1
    }

    /// The configured `V∞` value.
    pub fn v_inf_value(&self) -> &Rat {
        &self.v_inf
    }

    /// Entry by name; the available names are listed by [`Self::names`].
    pub fn get(&self, name: &str) -> Option<&PowVal> {
        self.entries.get(name)
    }

    /// All `(name, value)` pairs.
    pub fn all(&self) -> impl Iterator<Item = (&'static str, &PowVal)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    /// Entry names.
    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    fn entry(&self, name: &'static str) -> &PowVal {
        self.entries.get(name).expect("ledger entry")
    }

    /// `c_d = d(d+1)/2 − 1`.
    pub fn c_d(&self) -> i64 {
        c_d_of(self.d)
    }

    /// `θ_d = 1/(d−1)²`.
    pub fn theta_d(&self) -> Rat {
        rat_frac(1, ((self.d - 1) * (self.d - 1)) as i64)
    }

    /// Hyperbolic-representation norm constant `A_p` (2 at `p = 2`, else 1).
    pub fn a_p(&self, p: u64) -> u64 {
        if p == 2 {
            2
        } else {
            1
        }
    }

    /// Standardization norm constant: `d` at `∞`, `A_p·√p` at `p`.
    pub fn standardization_constant(&self, nu: Place) -> PowVal {
        match nu {
            Place::Infinity => pv_int(self.d as i64),
            Place::Prime(p) => {
                pv_int(self.a_p(p) as i64).mul(&PowVal::prime_pow(p, rat_frac(1, 2)))
            }
        }
    }

    /// Coset-representative norm constant: 1 at `∞`, 4 at 2, `p` at odd `p`.
    pub fn coset_constant(&self, nu: Place) -> u64 {
        match nu {
            Place::Infinity => 1,
            Place::Prime(2) => 4,
            Place::Prime(p) => p,
        }
    }

    /// Congruence-depth constant: 8 at 2, `p` at odd `p`.
    pub fn depth_constant(&self, p: u64) -> u64 {
        if p == 2 {
            8
        } else {
            p
        }
    }

    /// Equivalence bound, per place, for the given case.
    pub fn bound_equiv(
        &self,
        q1: &QuadraticForm,
        q2: &QuadraticForm,
        s: &PlaceSet,
        case: &EquivCase,
    ) -> Result<BoundTable> {
        let d = self.d;
        if q1.dim() != d || q2.dim() != d {
            return Err(Error::Dimension("forms must match the ledger dimension".into()));
        }
        if !q1.is_integral() || !q2.is_integral() {
            return Err(Error::Precondition("bound tables need integral forms".into()));
        }
        if !q1.is_nondegenerate() || !q2.is_nondegenerate() {
            return Err(Error::Degenerate("bound tables need nondegenerate forms".into()));
        }
        check_case(q1, s, case)?;
        let norm_q1 = pv_rat(&q1.coefficient_norm(Place::Infinity));
        let norm_q2 = pv_rat(&q2.coefficient_norm(Place::Infinity));
        let di = d as i64;
        let mut rows = Vec::new();
        match case {
            EquivCase::RIsotropic => {
                // ∞: ℭ_iso·p_S^{19 d⁶}·(‖Q1‖‖Q2‖)^{2d³}, strict
                let value = self
                    .entry("C_iso")
                    .mul(&ps_pow(s, 19 * di.pow(6)))
                    .mul(&norm_q1.mul(&norm_q2).pow_i(2 * di.pow(3)));
                rows.push(BoundRow {
                    place: Place::Infinity,
                    value,
                    strict: true,
                });
                for p in s.finite_places() {
                    rows.push(BoundRow {
                        place: Place::Prime(p),
                        value: finite_equiv_bound(q1, p, d)?,
                        strict: false,
                    });
                }
            }
            EquivCase::RAnisotropic { p0 } => {
                // ∞: d^{d+1}·d!·‖Q1‖^{(d−1)/2}·‖Q2‖^{1/2}
                let value = pv_int(di)
                    .pow_i(di + 1)
                    .mul(&pv_fact(d))
                    .mul(&norm_q1.pow(&rat_frac(di - 1, 2)))
                    .mul(&norm_q2.pow(&rat_frac(1, 2)));
                rows.push(BoundRow {
                    place: Place::Infinity,
                    value,
                    strict: false,
                });
                for p in s.finite_places() {
                    if p == *p0 {
                        // p₀: ℭ_aniso·p_S^{13 d⁶}·(‖Q1‖‖Q2‖)^{d³/2 + 3d}
                        let e = rat_frac(di.pow(3), 2) + rat_i64(3 * di);
                        let value = self
                            .entry("C_aniso")
                            .mul(&ps_pow(s, 13 * di.pow(6)))
                            .mul(&norm_q1.mul(&norm_q2).pow(&e));
                        rows.push(BoundRow {
                            place: Place::Prime(p),
                            value,
                            strict: true,
                        });
                    } else {
                        rows.push(BoundRow {
                            place: Place::Prime(p),
                            value: finite_equiv_bound(q1, p, d)?,
                            strict: false,
                        });
                    }
                }
            }
        }
        Ok(BoundTable { rows })
    }

    /// Small-generator bound, per place, for the given case.
    pub fn bound_generators(
        &self,
        q: &QuadraticForm,
        s: &PlaceSet,
        case: &EquivCase,
    ) -> Result<BoundTable> {
        let d = self.d;
        if q.dim() != d {
            return Err(Error::Dimension("form must match the ledger dimension".into()));
        }
        if !q.is_integral() {
            return Err(Error::Precondition("bound tables need integral forms".into()));
        }
        if !q.is_nondegenerate() {
            return Err(Error::Degenerate("bound tables need nondegenerate forms".into()));
        }
        check_case(q, s, case)?;
        let norm_q = pv_rat(&q.coefficient_norm(Place::Infinity));
        let di = d as i64;
        let mut rows = Vec::new();
        match case {
            EquivCase::RIsotropic => {
                let value = self
                    .entry("gens_iso")
                    .mul(&ps_pow(s, 20 * di.pow(7)))
                    .mul(&norm_q.pow_i(5 * di.pow(6)));
                rows.push(BoundRow {
                    place: Place::Infinity,
                    value,
                    strict: false,
                });
                for p in s.finite_places() {
                    rows.push(BoundRow {
                        place: Place::Prime(p),
                        value: finite_gens_bound(q, p, d)?,
                        strict: false,
                    });
                }
            }
            EquivCase::RAnisotropic { p0 } => {
                // ∞: d^{d+1}·d!·‖Q‖^{d/2}
                let value = pv_int(di)
                    .pow_i(di + 1)
                    .mul(&pv_fact(d))
                    .mul(&norm_q.pow(&rat_frac(di, 2)));
                rows.push(BoundRow {
                    place: Place::Infinity,
                    value,
                    strict: false,
                });
                for p in s.finite_places() {
                    if p == *p0 {
                        let value = self
                            .entry("gens_aniso")
                            .mul(&ps_pow(s, 14 * di.pow(7)))
                            .mul(&norm_q.pow_i(3 * di.pow(6)))
                            .mul(&det_inv_sqrt(q, p)?);
                        rows.push(BoundRow {
                            place: Place::Prime(p),
                            value,
                            strict: false,
                        });
                    } else {
                        rows.push(BoundRow {
                            place: Place::Prime(p),
                            value: finite_gens_bound(q, p, d)?,
                            strict: false,
                        });
                    }
                }
            }
        }
        Ok(BoundTable { rows })
    }

    /// Volume bound for the orbit space: requires `Q` integral and
    /// `ℚ_S`-isotropic with `d ≥ 3`. For `S = {∞}` the sharper coefficient
    /// `2^{2d⁶}` applies; otherwise `p_S^{3d⁶}` with the `S`-height of the
    /// determinant.
    pub fn volume_orbit_bound(&self, q: &QuadraticForm, s: &PlaceSet) -> Result<PowVal> {
        let d = self.d;
        if q.dim() != d {
            return Err(Error::Dimension("form must match the ledger dimension".into()));
        }
        if d < 3 {
            return Err(Error::Dimension("volume bound needs d ≥ 3".into()));
        }
        if !q.is_integral() {
            return Err(Error::Precondition("volume bound needs an integral form".into()));
        }
        if !crate::local::is_isotropic_qs(q, s)? {
            return Err(Error::Precondition("volume bound needs a ℚ_S-isotropic form".into()));
        }
        let di = d as i64;
        let vd = self.entry("script_V");
        let half_exp = rat_frac(di + 1, 2);
        if s.finite_places().next().is_none() {
            let det_abs = q.det().abs();
            Ok(vd
                .mul(&PowVal::prime_pow(2, rat_i64(2 * di.pow(6))))
                .mul(&pv_rat(&det_abs).pow(&half_exp)))
        } else {
            let h = s_height_scalar(&q.det(), s)?;
            Ok(vd
                .mul(&ps_pow(s, 3 * di.pow(6)))
                .mul(&pv_rat(&h).pow(&half_exp)))
        }
    }
}

/// Case selector for the explicit bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum EquivCase {
    /// `Q` isotropic over `ℝ` (indefinite), `d ≥ 3`.
    RIsotropic,
    /// `Q` anisotropic over `ℝ` (definite) and isotropic over `ℚ_{p₀}`.
    RAnisotropic {
        /// The designated finite place.
        p0: u64,
    },
}

/// One row of a per-place bound table.
#[derive(Debug, Clone)]
pub struct BoundRow {
    /// The place the bound applies at.
    pub place: Place,
    /// The exact bound value.
    pub value: PowVal,
    /// `true` for a strict inequality.
    pub strict: bool,
}

/// A per-place bound table.
#[derive(Debug, Clone)]
pub struct BoundTable {
    /// Rows, archimedean place first.
    pub rows: Vec<BoundRow>,
}

impl BoundTable {
    /// The row at a place, if present.
    pub fn at(&self, place: Place) -> Option<&BoundRow> {
        self.rows.iter().find(|r| r.place == place)
    }
}

fn check_case(q: &QuadraticForm, s: &PlaceSet, case: &EquivCase) -> Result<()> {
    match case {
        EquivCase::RIsotropic => {
            if q.dim() < 3 {
                return Err(Error::Dimension("the isotropic case needs d ≥ 3".into()));
            }
            if !crate::local::is_isotropic(q, Place::Infinity)? {
                return Err(Error::Precondition(
                    "case mismatch: the form is definite over ℝ".into(),
                ));
            }
        }
        EquivCase::RAnisotropic { p0 } => {
            if crate::local::is_isotropic(q, Place::Infinity)? {
                return Err(Error::Precondition(
                    "case mismatch: the form is isotropic over ℝ".into(),
                ));
            }
            if !s.finite_places().any(|p| p == *p0) {
                return Err(Error::InvalidPlace(format!("p₀ = {p0} must lie in S")));
            }
            if !crate::local::is_isotropic(q, Place::Prime(*p0))? {
                return Err(Error::Precondition(format!(
                    "case mismatch: the form is anisotropic over ℚ_{p0}"
                )));
            }
        }
    }
    Ok(())
}

/// `p_S^e` as a symbolic product over the finite places of `S`.
fn ps_pow(s: &PlaceSet, e: i64) -> PowVal {
    let mut acc = PowVal::one();
    for p in s.finite_places() {
        acc = acc.mul(&PowVal::prime_pow(p, rat_i64(e)));
    }
    acc
}

/// `|det Q|_p^{−1/2} = p^{v_p(det)/2}` for an integral form.
fn det_inv_sqrt(q: &QuadraticForm, p: u64) -> Result<PowVal> {
    let v = crate::arith::padic_valuation(&q.det(), p)?
        .finite()
        .ok_or_else(|| Error::Degenerate("degenerate form".into()))?;
    Ok(PowVal::prime_pow(p, rat_frac(v, 2)))
}

/// Per-place equivalence bound at finite `p`: `p·|det Q1|_p^{−1/2}` for odd
/// `p`, `2^{d+2}·|det Q1|₂^{−1/2}` at 2.
fn finite_equiv_bound(q1: &QuadraticForm, p: u64, d: usize) -> Result<PowVal> {
    let lead = if p == 2 {
        PowVal::prime_pow(2, rat_i64(d as i64 + 2))
    } else {
        PowVal::prime_pow(p, Rat::one())
    };
    Ok(lead.mul(&det_inv_sqrt(q1, p)?))
}

/// Per-place generator bound at finite `p`: `p^{2d+2}·|det Q|_p^{−1/2}` for
/// odd `p`, `2^{d²+3d+3}·|det Q|₂^{−1/2}` at 2.
fn finite_gens_bound(q: &QuadraticForm, p: u64, d: usize) -> Result<PowVal> {
    let di = d as i64;
    let lead = if p == 2 {
        PowVal::prime_pow(2, rat_i64(di * di + 3 * di + 3))
    } else {
        PowVal::prime_pow(p, rat_i64(2 * di + 2))
    };
    Ok(lead.mul(&det_inv_sqrt(q, p)?))
}

fn c_d_of(d: usize) -> i64 {
    (d * (d + 1) / 2) as i64 - 1
}

/// Primary construction path of the ledger entries.
fn build_entries(d: usize) -> BTreeMap<&'static str, PowVal> {
    let di = d as i64;
    let cd = c_d_of(d);
    let mut m: BTreeMap<&'static str, PowVal> = BTreeMap::new();

    // orthogonal-ball constants (real): (1/(3d))^{d(d−1)/2}, (20d/3)^{d(d−1)/2}
    let half_dim = di * (di - 1) / 2;
    m.insert(
        "orth_minus",
        pv_rat(&rat_frac(1, 3 * di)).pow_i(half_dim),
    );
    m.insert(
        "orth_plus",
        pv_rat(&rat_frac(20 * di, 3)).pow_i(half_dim),
    );
    // real W-ball constants: 2^{d−1}/d^{2 c_d} and 2^{d²−1}
    m.insert(
        "wball_minus",
        PowVal::prime_pow(2, rat_i64(di - 1)).div(&pv_int(di).pow_i(2 * cd)),
    );
    m.insert("wball_plus", PowVal::prime_pow(2, rat_i64(di * di - 1)));
    // basis-norm constants
    let w_d = pv_int(di)
        .pow(&rat_frac(3 * di, 2))
        .mul(&pv_int(di + 1).pow_i(di * di))
        .mul(&pv_fact(d).pow_i(di + 1));
    m.insert("W", w_d.clone());
    m.insert(
        "W1",
        pv_int(di)
            .pow(&rat_frac(3, 2))
            .mul(&pv_int(di + 1).pow_i(di))
            .mul(&pv_fact(d)),
    );
    // Siegel-translate constant 𝓛 = 2^{d(d−1)}·W
    let l_d = PowVal::prime_pow(2, rat_i64(di * (di - 1))).mul(&w_d);
    m.insert("L", l_d.clone());
    // reduced-coefficient constant 𝓛' = d^{d/2}(d+1)^{d²}(d!)^{2d+1}
    let l_prime = pv_int(di)
        .pow(&rat_frac(di, 2))
        .mul(&pv_int(di + 1).pow_i(di * di))
        .mul(&pv_fact(d).pow_i(2 * di + 1));
    m.insert("L'", l_prime.clone());
    // auxiliary compactness constants
    let frak_w = pv_int(10)
        .pow_i(di * di)
        .mul(&pv_int(di).pow(&rat_frac((di + 2) * (di + 2), 4)));
    m.insert("w", frak_w.clone());
    m.insert(
        "w'",
        pv_int(5 * di.pow(3)).mul(&pv_int(20 * di).pow(&(rat_frac(di * (di - 1), 4) + Rat::one()))),
    );
    let c_b = pv_int(3)
        .mul(&pv_int(3 * di * di).mul(&pv_fact(d)).pow(&(rat_frac(di * (di - 1), 4) + Rat::one())))
        .mul(&frak_w);
    m.insert("C_B", c_b.clone());
    // 𝒟 = 5·D1^{1/2}
    let script_d = pv_int(5).mul(&PowVal::d1_pow(rat_frac(1, 2)));
    m.insert("D", script_d.clone());
    // 𝒩 constants
    let n_iso = pv_int(12)
        .mul(&PowVal::prime_pow(2, rat_i64(3 * di * di * (di - 1))))
        .mul(&pv_int(di).pow_i(2))
        .mul(&script_d.pow_i(6))
        .mul(&c_b.pow_i(12));
    m.insert("N_iso", n_iso.clone());
    let n_aniso = pv_int(10)
        .pow_i(4)
        .mul(&PowVal::prime_pow(2, rat_i64(2 * di.pow(3))))
        .mul(&pv_int(9 * di.pow(3)).mul(&pv_fact(d)).pow_i(2 * di * (di - 1)));
    m.insert("N_aniso", n_aniso.clone());
    // archimedean volume parameter and the main volume constant
    let v_d_inf = PowVal::v_inf_pow(Rat::one());
    m.insert("V_inf", v_d_inf.clone());
    let script_v = PowVal::prime_pow(2, rat_i64(2 * di.pow(3) + 5))
        .mul(&PowVal::prime_pow(3, rat_i64(4 * di.pow(4))))
        .mul(&pv_int(di).pow_i(6 * di.pow(3) + 1))
        .pow_i(cd)
        .mul(&v_d_inf);
    m.insert("script_V", script_v.clone());
    // recurrence bookkeeping constants
    m.insert(
        "def_big_compact",
        PowVal::prime_pow(2, rat_i64(di.pow(3)))
            .mul(&PowVal::prime_pow(3, rat_i64(2 * di.pow(4))))
            .mul(&pv_int(di).pow_i(3 * di.pow(3))),
    );
    m.insert(
        "coef_T_recurrence",
        PowVal::prime_pow(2, rat_i64(3))
            .mul(&v_d_inf.pow_i(cd))
            .div(&pv_int(di * (di - 1))),
    );
    m.insert(
        "big_orbits",
        pv_rat(&rat_frac(4, di * (di - 1))).pow_i(cd).mul(&v_d_inf),
    );
    m.insert(
        "recurrence_box",
        pv_int(2)
            .mul(&v_d_inf.pow(&rat_frac(1, cd)))
            .div(&pv_int(di * (di - 1))),
    );
    // the equivalence constants
    let c_iso = PowVal::prime_pow(2, rat_i64(6 * di.pow(3)))
        .mul(&pv_int(di).pow_i(4 * di.pow(3)))
        .mul(&pv_fact(d).pow_i(2 * di * di + 1))
        .mul(&n_iso)
        .mul(&script_v.pow_i(6));
    m.insert("C_iso", c_iso.clone());
    let c_aniso = PowVal::prime_pow(2, rat_i64(2 * di.pow(3) + 7 * di))
        .mul(&pv_int(di).pow_i(2 * di.pow(3)))
        .mul(&pv_fact(d).pow_i(7))
        .mul(&n_aniso)
        .mul(&script_v.pow_i(4));
    m.insert("C_aniso", c_aniso.clone());
    // the transfer constants
    let t_iso = PowVal::prime_pow(2, rat_i64(2 * di.pow(5)))
        .mul(&pv_fact(d).pow_i(4 * di.pow(4)))
        .mul(&c_iso)
        .mul(&l_prime.pow_i(2 * di.pow(3)));
    m.insert("T_iso", t_iso.clone());
    let t_aniso = PowVal::prime_pow(2, rat_i64(di.pow(5)))
        .mul(&pv_fact(d).pow_i(2 * di.pow(4)))
        .mul(&c_aniso)
        .mul(&l_prime.pow_i(di.pow(3)));
    m.insert("T_aniso", t_aniso.clone());
    // the small-generator constants
    m.insert(
        "gens_iso",
        PowVal::prime_pow(2, rat_i64(2 * di * di))
            .mul(&pv_int(di))
            .mul(&pv_fact(d).pow_i(di + 1))
            .mul(&t_iso.pow_i(di))
            .mul(&l_d),
    );
    m.insert("gens_aniso", pv_int(2).mul(&t_aniso.pow_i(di)));
    m
}

/// Independent recomputation of every ledger entry, each expanded from its
/// defining formula in one expression (no shared intermediates with
/// [`build_entries`]); used by the two-path consistency check.
fn direct_entries(d: usize) -> BTreeMap<&'static str, PowVal> {
    let di = d as i64;
    let cd = (di * (di + 1)) / 2 - 1;
    let f = pv_fact(d);
    let mut m: BTreeMap<&'static str, PowVal> = BTreeMap::new();

    m.insert(
        "orth_minus",
        pv_rat(&rat_frac(1, 3 * di)).pow(&rat_frac(di * (di - 1), 2)),
    );
    m.insert(
        "orth_plus",
        pv_rat(&rat_frac(20 * di, 3)).pow(&rat_frac(di * (di - 1), 2)),
    );
    m.insert(
        "wball_minus",
        pv_int(2)
            .pow_i(di - 1)
            .mul(&pv_int(di).pow_i(2 * ((di * (di + 1)) / 2 - 1)).pow_i(-1)),
    );
    m.insert("wball_plus", pv_int(2).pow_i(di * di - 1));
    m.insert(
        "W",
        pv_int(di)
            .pow(&rat_frac(3 * di, 2))
            .mul(&pv_int(di + 1).pow_i(di * di))
            .mul(&f.pow_i(di + 1)),
    );
    m.insert(
        "W1",
        pv_int(di)
            .pow(&rat_frac(3, 2))
            .mul(&pv_int(di + 1).pow_i(di))
            .mul(&f),
    );
    m.insert(
        "L",
        pv_int(2)
            .pow_i(di * (di - 1))
            .mul(&pv_int(di).pow(&rat_frac(3 * di, 2)))
            .mul(&pv_int(di + 1).pow_i(di * di))
            .mul(&f.pow_i(di + 1)),
    );
    m.insert(
        "L'",
        pv_int(di)
            .pow(&rat_frac(di, 2))
            .mul(&pv_int(di + 1).pow_i(di * di))
            .mul(&f.pow_i(2 * di + 1)),
    );
    m.insert(
        "w",
        pv_int(10)
            .pow_i(di * di)
            .mul(&pv_int(di).pow(&rat_frac((di + 2) * (di + 2), 4))),
    );
    m.insert(
        "w'",
        pv_int(5)
            .mul(&pv_int(di).pow_i(3))
            .mul(&pv_int(20 * di).pow(&rat_frac(di * (di - 1) + 4, 4))),
    );
    m.insert(
        "C_B",
        pv_int(3)
            .mul(&pv_int(3 * di * di).mul(&f).pow(&rat_frac(di * (di - 1) + 4, 4)))
            .mul(&pv_int(10).pow_i(di * di))
            .mul(&pv_int(di).pow(&rat_frac((di + 2) * (di + 2), 4))),
    );
    m.insert("D", pv_int(5).mul(&PowVal::d1_pow(rat_frac(1, 2))));
    m.insert(
        "N_iso",
        pv_int(12)
            .mul(&pv_int(2).pow_i(3 * di * di * (di - 1)))
            .mul(&pv_int(di * di))
            .mul(&pv_int(5).mul(&PowVal::d1_pow(rat_frac(1, 2))).pow_i(6))
            .mul(
                &pv_int(3)
                    .mul(&pv_int(3 * di * di).mul(&f).pow(&rat_frac(di * (di - 1) + 4, 4)))
                    .mul(&pv_int(10).pow_i(di * di))
                    .mul(&pv_int(di).pow(&rat_frac((di + 2) * (di + 2), 4)))
                    .pow_i(12),
            ),
    );
    m.insert(
        "N_aniso",
        pv_int(10000)
            .mul(&pv_int(2).pow_i(2 * di * di * di))
            .mul(&pv_int(9).mul(&pv_int(di).pow_i(3)).mul(&f).pow_i(2 * di * (di - 1))),
    );
    m.insert("V_inf", PowVal::v_inf_pow(Rat::one()));
    m.insert(
        "script_V",
        pv_int(2)
            .pow_i((2 * di * di * di + 5) * cd)
            .mul(&pv_int(3).pow_i(4 * di.pow(4) * cd))
            .mul(&pv_int(di).pow_i((6 * di * di * di + 1) * cd))
            .mul(&PowVal::v_inf_pow(Rat::one())),
    );
    m.insert(
        "def_big_compact",
        pv_int(2)
            .pow_i(di * di * di)
            .mul(&pv_int(3).pow_i(2 * di.pow(4)))
            .mul(&pv_int(di).pow_i(3 * di * di * di)),
    );
    m.insert(
        "coef_T_recurrence",
        pv_int(8)
            .mul(&PowVal::v_inf_pow(rat_i64(cd)))
            .mul(&pv_int(di * (di - 1)).pow_i(-1)),
    );
    m.insert(
        "big_orbits",
        pv_int(4)
            .pow_i(cd)
            .mul(&pv_int(di * (di - 1)).pow_i(-cd))
            .mul(&PowVal::v_inf_pow(Rat::one())),
    );
    m.insert(
        "recurrence_box",
        pv_int(2)
            .mul(&PowVal::v_inf_pow(rat_frac(1, cd)))
            .mul(&pv_int(di * (di - 1)).pow_i(-1)),
    );
    // ℭ_iso = 2^{6d³}·d^{4d³}·(d!)^{2d²+1}·𝒩_iso·𝒱^6 (all expanded)
    let n_iso_x = m.get("N_iso").expect("built").clone();
    let script_v_x = m.get("script_V").expect("built").clone();
    m.insert(
        "C_iso",
        pv_int(2)
            .pow_i(6 * di * di * di)
            .mul(&pv_int(di).pow_i(4 * di * di * di))
            .mul(&f.pow_i(2 * di * di + 1))
            .mul(&n_iso_x)
            .mul(&script_v_x.pow_i(6)),
    );
    let n_aniso_x = m.get("N_aniso").expect("built").clone();
    m.insert(
        "C_aniso",
        pv_int(2)
            .pow_i(2 * di * di * di + 7 * di)
            .mul(&pv_int(di).pow_i(2 * di * di * di))
            .mul(&f.pow_i(7))
            .mul(&n_aniso_x)
            .mul(&script_v_x.pow_i(4)),
    );
    let c_iso_x = m.get("C_iso").expect("built").clone();
    let c_aniso_x = m.get("C_aniso").expect("built").clone();
    let l_prime_x = m.get("L'").expect("built").clone();
    m.insert(
        "T_iso",
        pv_int(2)
            .pow_i(2 * di.pow(5))
            .mul(&f.pow_i(4 * di.pow(4)))
            .mul(&c_iso_x)
            .mul(&l_prime_x.pow_i(2 * di * di * di)),
    );
    m.insert(
        "T_aniso",
        pv_int(2)
            .pow_i(di.pow(5))
            .mul(&f.pow_i(2 * di.pow(4)))
            .mul(&c_aniso_x)
            .mul(&l_prime_x.pow_i(di * di * di)),
    );
    let t_iso_x = m.get("T_iso").expect("built").clone();
    let t_aniso_x = m.get("T_aniso").expect("built").clone();
    let l_x = m.get("L").expect("built").clone();
    m.insert(
        "gens_iso",
        pv_int(2)
            .pow_i(2 * di * di)
            .mul(&pv_int(di))
            .mul(&f.pow_i(di + 1))
            .mul(&t_iso_x.pow_i(di))
            .mul(&l_x),
    );
    m.insert("gens_aniso", pv_int(2).mul(&t_aniso_x.pow_i(di)));
    m
}

/// Two-path consistency: every ledger entry equals its independent
/// recomputation, exactly.
pub fn ledger_two_path_ok(ledger: &ConstantsLedger) -> bool {
    let direct = direct_entries(ledger.dim());
    if direct.len() != ledger.entries.len() {
        return false;
    }
    for (name, value) in ledger.all() {
        match direct.get(name) {
            Some(other) if other == value => {}
            _ => return false,
        }
    }
    true
}

// ===========================================================================
// counting and volume calculators
// ===========================================================================

/// `vol GL(d, ℤ_p) = ∏_{j=1}^d (1 − p^{−j})` (exact).
pub fn vol_gl_zp(d: usize, p: u64) -> Result<Rat> {
    if d == 0 {
        return Err(Error::Dimension("d ≥ 1 required".into()));
    }
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    let mut acc = Rat::one();
    let mut pj = Rat::one();
    for _ in 1..=d {
        pj *= rat_i64(p as i64);
        acc *= Rat::one() - pj.clone().recip();
    }
    Ok(acc)
}

/// `|SL(2, ℤ/p^n)| = p^{3n} − p^{3n−2}`.
pub fn card_sl2(p: u64, n: u32) -> Result<Int> {
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    if n == 0 {
        return Err(Error::Precondition("n ≥ 1 required".into()));
    }
    let pi = Int::from(p);
    Ok(pi.pow(3 * n) - pi.pow(3 * n - 2))
}

/// `|GL(d, ℤ/p^n)| = p^{d²n}·∏_{j=1}^d (1 − p^{−j})`.
pub fn card_gl(d: usize, p: u64, n: u32) -> Result<Int> {
    if n == 0 {
        return Err(Error::Precondition("n ≥ 1 required".into()));
    }
    let mut val = Rat::from(Int::from(p).pow((d * d) as u32 * n));
    val *= vol_gl_zp(d, p)?;
    debug_assert!(val.denom().is_one());
    Ok(val.numer().clone())
}

/// Number of complete flags of free direct summands of `(ℤ/p^n)^d`:
/// `p^{d(d+1)n/2}/φ(p^n)^d · ∏_{j=1}^d (1 − p^{−j})`.
pub fn flag_count(d: usize, p: u64, n: u32) -> Result<Int> {
    if n == 0 {
        return Err(Error::Precondition("n ≥ 1 required".into()));
    }
    if d == 0 {
        return Err(Error::Dimension("d ≥ 1 required".into()));
    }
    let pi = Int::from(p);
    let phi = pi.pow(n) - pi.pow(n - 1);
    let num = Rat::from(pi.pow((d * (d + 1) / 2) as u32 * n));
    let val = num / Rat::from(phi.pow(d as u32)) * vol_gl_zp(d, p)?;
    if !val.denom().is_one() {
        return Err(Error::Internal("flag count is not integral".into()));
    }
    Ok(val.numer().clone())
}

/// `Ξ_p(a_{p,m}) = (p^{−m}/(p+1))·((2m+1)(p−1) + 2)` (exact).
pub fn xi_p(p: u64, m: u32) -> Result<Rat> {
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    let pi = p as i64;
    let mut pm = Rat::one();
    for _ in 0..m {
        pm /= rat_i64(pi);
    }
    Ok(pm / rat_i64(pi + 1) * rat_i64((2 * m as i64 + 1) * (pi - 1) + 2))
}

/// The decay envelope `10·p^{−m/2}` as an exact symbolic value.
pub fn xi_decay_bound(p: u64, m: u32) -> Result<PowVal> {
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    Ok(pv_int(10).mul(&PowVal::prime_pow(p, -rat_frac(m as i64, 2))))
}

/// Measure of the Cartan cell `F_n`: `((p−1)/(p+1))·p^{−|n|}`.
pub fn partition_measure(p: u64, n: i64) -> Result<Rat> {
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    let pi = p as i64;
    let mut val = rat_frac(pi - 1, pi + 1);
    for _ in 0..n.unsigned_abs() {
        val /= rat_i64(pi);
    }
    Ok(val)
}

/// Independent evaluation of `Ξ_p(a_{p,m})` for `m ≥ 1` as the cell sum
/// `Σ_n λ(F_n)·v_n` with `v_n = p^{−m}, p^{n−m}, p^{m}` on the three cell
/// ranges `n ≤ 0`, `0 < n < 2m`, `n ≥ 2m`, using exact geometric tails.
pub fn xi_p_partition_sum(p: u64, m: u32) -> Result<Rat> {
    if m == 0 {
        return Err(Error::Precondition("the cell partition needs m ≥ 1".into()));
    }
    if !is_prime(p) {
        return Err(Error::InvalidPlace(format!("{p} is not prime")));
    }
    let pi = p as i64;
    let pr = rat_i64(pi);
    let lead = rat_frac(pi - 1, pi + 1);
    let pm = {
        let mut v = Rat::one();
        for _ in 0..m {
            v /= &pr;
        }
        v
    };
    // Σ_{n ≤ 0} λ(F_n) = lead·(1 + Σ_{k≥1} p^{−k}) = lead·p/(p−1) = p/(p+1)
    let head = rat_frac(pi, pi + 1) * &pm;
    // Σ_{n=1}^{2m−1} lead·p^{−n}·p^{n−m} = lead·(2m−1)·p^{−m}
    let middle = lead.clone() * rat_i64(2 * m as i64 - 1) * &pm;
    // Σ_{n ≥ 2m} lead·p^{−n}·p^{m} = lead·p^{−m}·(1/(1−1/p)) = p^{1−m}/(p+1)·p^{−... }
    let tail = {
        // lead·p^m·Σ_{n≥2m} p^{−n} = lead·p^m·p^{−2m}·p/(p−1) = p^{1−m}/(p+1)
        let mut v = rat_frac(pi, pi + 1);
        for _ in 0..m {
            v /= &pr;
        }
        v
    };
    Ok(head + middle + tail)
}

/// `λ(H_P(p^{−n})) = 𝒟_P·p^{−d(d−1)n/2}` for a diagonal form with entries
/// `a`, where `𝒟_P = ∏_{i<j} min{1, |a_i/a_j|_p}`; requires `n ≥ 3`.
pub fn vol_orthogonal_ball_padic(a: &[Rat], p: u64, n: u32) -> Result<Rat> {
    if n < 3 {
        return Err(Error::Precondition("ball volume formula needs n ≥ 3".into()));
    }
    if a.iter().any(|x| x.is_zero()) {
        return Err(Error::Degenerate("diagonal entries must be nonzero".into()));
    }
    let d = a.len();
    let mut dp = Rat::one();
    for i in 0..d {
        for j in (i + 1)..d {
            let ratio = crate::arith::abs_nu(&(a[i].clone() / &a[j]), Place::Prime(p));
            if ratio < Rat::one() {
                dp *= ratio;
            }
        }
    }
    let mut vol = dp;
    for _ in 0..(d * (d - 1) / 2) as u64 * n as u64 {
        vol /= rat_i64(p as i64);
    }
    Ok(vol)
}

/// Two-sided real orthogonal ball bounds `(𝔳⁻·r^{d(d−1)/2}, 𝔳⁺·r^{d(d−1)/2})`
/// for `0 < r ≤ 2/(5d)`.
pub fn vol_orthogonal_ball_real_bounds(d: usize, r: &Rat) -> Result<(Rat, Rat)> {
    if d < 2 {
        return Err(Error::Dimension("d ≥ 2 required".into()));
    }
    if !r.is_positive() || r > &rat_frac(2, 5 * d as i64) {
        return Err(Error::Precondition("radius must satisfy 0 < r ≤ 2/(5d)".into()));
    }
    let e = (d * (d - 1) / 2) as i64;
    let mut re = Rat::one();
    for _ in 0..e {
        re *= r;
    }
    let mut lo = Rat::one();
    let mut hi = Rat::one();
    for _ in 0..e {
        lo *= rat_frac(1, 3 * d as i64);
        hi *= rat_frac(20 * d as i64, 3);
    }
    Ok((lo * &re, hi * &re))
}

/// `λ(W_{d,p}(p^{−n})) = p^{−(c_d+1)n}` for `n ≥ 3`.
pub fn vol_w_ball(d: usize, p: u64, n: u32) -> Result<Rat> {
    if n < 3 {
        return Err(Error::Precondition("ball volume formula needs n ≥ 3".into()));
    }
    if d < 2 {
        return Err(Error::Dimension("d ≥ 2 required".into()));
    }
    let e = (c_d_of(d) + 1) as u64 * n as u64;
    let mut vol = Rat::one();
    for _ in 0..e {
        vol /= rat_i64(p as i64);
    }
    Ok(vol)
}

/// `vol X¹_{d,S} = V∞·∏_{p ∈ S_f} vol GL(d, ℤ_p)`; with `v_inf = None` the
/// archimedean factor stays the symbolic parameter.
pub fn vol_x1(d: usize, s: &PlaceSet, v_inf: Option<&Rat>) -> Result<PowVal> {
    if d == 0 {
        return Err(Error::Dimension("d ≥ 1 required".into()));
    }
    let mut acc = match v_inf {
        Some(v) => pv_rat(v),
        None => PowVal::v_inf_pow(Rat::one()),
    };
    for p in s.finite_places() {
        acc = acc.mul(&pv_rat(&vol_gl_zp(d, p)?));
    }
    Ok(acc)
}

/// Basis bound for a covolume-1 lattice:
/// `√d·(2/√3)^{(d−1)²/2}·max{1, α₁^{−(d−1)}}` (exact symbolic radicals).
pub fn mahler_bound(d: usize, alpha1: &Rat) -> Result<PowVal> {
    if d == 0 {
        return Err(Error::Dimension("d ≥ 1 required".into()));
    }
    if !alpha1.is_positive() {
        return Err(Error::Precondition("α₁ must be positive".into()));
    }
    let di = d as i64;
    let sq = (di - 1) * (di - 1);
    let mut acc = pv_int(di)
        .pow(&rat_frac(1, 2))
        .mul(&PowVal::prime_pow(2, rat_frac(sq, 2)))
        .mul(&PowVal::prime_pow(3, -rat_frac(sq, 4)));
    if alpha1 < &Rat::one() {
        let inv = alpha1.clone().recip();
        let mut factor = Rat::one();
        for _ in 0..(di - 1) {
            factor *= &inv;
        }
        acc = acc.mul(&pv_rat(&factor));
    }
    Ok(acc)
}

/// Effective recurrence constants `(C_{ν,d}, θ_d)`:
/// `C_{p,d} = 3^{2d}·d³·p^{2d+1}`, `C_{∞,d} = 2^{d+2}·3^{2d}·d³`,
/// `θ_d = 1/(d−1)²`.
pub fn recurrence_constants(d: usize, nu: Place) -> Result<(Rat, Rat)> {
    if d < 2 {
        return Err(Error::Dimension("d ≥ 2 required".into()));
    }
    let base = Int::from(3u64).pow(2 * d as u32) * Int::from(d as u64).pow(3);
    let c = match nu {
        Place::Infinity => base * Int::from(2u64).pow(d as u32 + 2),
        Place::Prime(p) => base * Int::from(p).pow(2 * d as u32 + 1),
    };
    let theta = rat_frac(1, ((d - 1) * (d - 1)) as i64);
    Ok((Rat::from(c), theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qform::QuadraticForm;

    #[test]
    fn powval_algebra() {
        let v = PowVal::from_int(20736).unwrap();
        assert_eq!(v.exponent_of(&Base::Prime(2)), rat_i64(8));
        assert_eq!(v.exponent_of(&Base::Prime(3)), rat_i64(4));
        assert_eq!(v.to_rational().unwrap(), rat_i64(20736));
        let r = v.pow(&rat_frac(1, 2));
        assert_eq!(r.exponent_of(&Base::Prime(2)), rat_i64(4));
        assert_eq!(r.exponent_of(&Base::Prime(3)), rat_i64(2));
        // parametric detection
        let p = PowVal::d1_pow(rat_frac(1, 2)).mul(&PowVal::from_int(5).unwrap());
        assert!(p.is_parametric());
        assert_eq!(p.parametric_bases(), vec!["D1"]);
        assert!(p.to_rational().is_none());
        // rational round trip with negative exponents
        let q = PowVal::from_rat(&rat_frac(9, 8)).unwrap();
        assert_eq!(q.to_rational().unwrap(), rat_frac(9, 8));
        assert_eq!(format!("{}", q), "2^-3·3^2");
        // display of fractional exponents
        assert_eq!(format!("{}", PowVal::prime_pow(2, rat_frac(3, 2))), "2^(3/2)");
    }

    #[test]
    fn ledger_basics_and_two_paths() {
        for d in 2..=4 {
            let led = ConstantsLedger::with_defaults(d).unwrap();
            assert!(ledger_two_path_ok(&led), "two-path mismatch at d={d}");
        }
        let led = ConstantsLedger::with_defaults(2).unwrap();
        // 𝓛₂ = 20736 exactly
        assert_eq!(
            led.get("L").unwrap().to_rational().unwrap(),
            rat_i64(20736)
        );
        assert_eq!(led.c_d(), 2);
        assert_eq!(led.theta_d(), rat_i64(1));
        // parametric tags appear exactly where D1/V∞ enter
        assert!(led.get("D").unwrap().is_parametric());
        assert!(led.get("C_iso").unwrap().is_parametric());
        assert!(led.get("script_V").unwrap().is_parametric());
        assert!(!led.get("L").unwrap().is_parametric());
        assert!(!led.get("N_aniso").unwrap().is_parametric());
        // C_aniso has no D1 (only V∞ through 𝒱)
        let ca = led.get("C_aniso").unwrap();
        assert_eq!(ca.parametric_bases(), vec!["V∞"]);
        let ci = led.get("C_iso").unwrap();
        assert_eq!(ci.parametric_bases(), vec!["D1", "V∞"]);
        // d = 1 rejected
        assert!(ConstantsLedger::with_defaults(1).is_err());
    }

    #[test]
    fn counting_formulas() {
        assert_eq!(vol_gl_zp(2, 2).unwrap(), rat_frac(3, 8));
        assert_eq!(vol_gl_zp(1, 7).unwrap(), rat_frac(6, 7));
        assert_eq!(vol_gl_zp(3, 3).unwrap(), rat_frac(416, 729));
        assert_eq!(card_sl2(2, 1).unwrap(), Int::from(6u64));
        assert_eq!(card_sl2(2, 2).unwrap(), Int::from(48u64));
        assert_eq!(card_sl2(3, 1).unwrap(), Int::from(24u64));
        assert_eq!(card_gl(2, 2, 1).unwrap(), Int::from(6u64));
        assert_eq!(flag_count(2, 2, 1).unwrap(), Int::from(3u64));
        assert_eq!(flag_count(3, 2, 1).unwrap(), Int::from(21u64));
        // card_gl(d,p,n) = p^{d²n}·vol_gl_zp(d,p) exactly
        for (d, p, n) in [(2usize, 2u64, 1u32), (2, 3, 2), (3, 2, 1)] {
            let lhs = Rat::from(card_gl(d, p, n).unwrap());
            let rhs = Rat::from(Int::from(p).pow((d * d) as u32 * n)) * vol_gl_zp(d, p).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn counting_vs_brute_force() {
        // SL(2, ℤ/p^n) by enumeration
        let brute_sl2 = |p: u64, n: u32| -> u64 {
            let m = p.pow(n);
            let mut count = 0;
            for a in 0..m {
                for b in 0..m {
                    for c in 0..m {
                        for dd in 0..m {
                            if (a * dd + (m * m - b * c)) % m == 1 % m {
                                count += 1;
                            }
                        }
                    }
                }
            }
            count
        };
        for (p, n) in [(2u64, 1u32), (2, 2), (3, 1)] {
            assert_eq!(
                card_sl2(p, n).unwrap(),
                Int::from(brute_sl2(p, n)),
                "SL2 mismatch at ({p},{n})"
            );
        }
        // GL(2, ℤ/2): invertible 2×2 matrices mod 2
        let mut count = 0;
        for a in 0..2u64 {
            for b in 0..2u64 {
                for c in 0..2u64 {
                    for dd in 0..2u64 {
                        if (a * dd + 4 - b * c) % 2 == 1 {
                            count += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(card_gl(2, 2, 1).unwrap(), Int::from(count));
        // lines of (ℤ/p^n)²: primitive vectors up to units
        let brute_lines = |p: u64, n: u32| -> u64 {
            let m = p.pow(n);
            let mut prim = 0;
            for a in 0..m {
                for b in 0..m {
                    if a % p != 0 || b % p != 0 {
                        prim += 1;
                    }
                }
            }
            let units = m - m / p;
            prim / units
        };
        for (p, n) in [(2u64, 1u32), (2, 2), (3, 1)] {
            assert_eq!(flag_count(2, p, n).unwrap(), Int::from(brute_lines(p, n)));
        }
    }

    #[test]
    fn xi_formulas() {
        for p in [2u64, 3, 5] {
            assert_eq!(xi_p(p, 0).unwrap(), Rat::one());
            for m in 1..=4u32 {
                assert_eq!(
                    xi_p(p, m).unwrap(),
                    xi_p_partition_sum(p, m).unwrap(),
                    "partition mismatch at p={p}, m={m}"
                );
                // decay envelope, compared by squaring: Ξ² < 100·p^{−m}
                let xi = xi_p(p, m).unwrap();
                let mut envelope_sq = rat_i64(100);
                for _ in 0..m {
                    envelope_sq /= rat_i64(p as i64);
                }
                assert!(&xi * &xi < envelope_sq);
            }
        }
        assert_eq!(xi_p(2, 1).unwrap(), rat_frac(5, 6));
        // partition measures sum to 1: head + symmetric tails
        for p in [2u64, 3, 5] {
            let lead = partition_measure(p, 0).unwrap();
            // Σ_{n≠0} = 2·lead·(1/(p−1)); total = lead·(1 + 2/(p−1))
            let total = &lead + &lead * rat_frac(2, p as i64 - 1);
            assert_eq!(total, Rat::one());
        }
    }

    #[test]
    fn ball_volumes() {
        // unit diagonal: 𝒟_P = 1 and value p^{−3d(d−1)/2} at n = 3
        let a = vec![rat_i64(1), rat_i64(-1), rat_i64(1)];
        assert_eq!(
            vol_orthogonal_ball_padic(&a, 3, 3).unwrap(),
            rat_frac(1, 3i64.pow(9))
        );
        // ordering matters through the pairwise minima
        let a = vec![rat_i64(1), rat_i64(3)];
        // 𝒟 = min{1, |1/3|₃} = min{1, 3} = 1; volume = 3^{−3}
        assert_eq!(
            vol_orthogonal_ball_padic(&a, 3, 3).unwrap(),
            rat_frac(1, 27)
        );
        let a = vec![rat_i64(3), rat_i64(1)];
        // 𝒟 = min{1, |3|₃} = 1/3; volume = (1/3)·3^{−3}
        assert_eq!(
            vol_orthogonal_ball_padic(&a, 3, 3).unwrap(),
            rat_frac(1, 81)
        );
        assert!(vol_orthogonal_ball_padic(&a, 3, 2).is_err());
        assert_eq!(vol_w_ball(2, 3, 3).unwrap(), rat_frac(1, 3i64.pow(9)));
        // real bounds at r = 1/5, d = 2: (r/6, 40r/3·r⁰…) with exponent 1
        let (lo, hi) = vol_orthogonal_ball_real_bounds(2, &rat_frac(1, 5)).unwrap();
        assert_eq!(lo, rat_frac(1, 30));
        assert_eq!(hi, rat_frac(40, 15));
        assert!(vol_orthogonal_ball_real_bounds(2, &rat_i64(1)).is_err());
        // vol X¹: V∞·(3/8) for d = 2, S = {∞, 2}
        let s = PlaceSet::new([2]).unwrap();
        let v = vol_x1(2, &s, None).unwrap();
        assert!(v.is_parametric());
        assert_eq!(v.exponent_of(&Base::VInf), Rat::one());
        assert_eq!(
            v.div(&PowVal::v_inf_pow(Rat::one())).to_rational().unwrap(),
            rat_frac(3, 8)
        );
        let v = vol_x1(2, &s, Some(&rat_i64(2))).unwrap();
        assert_eq!(v.to_rational().unwrap(), rat_frac(3, 4));
    }

    #[test]
    fn mahler_and_recurrence() {
        // d=2, α₁=1: √2·(2/√3)^{1/2} = 2^{1/2}·2^{1/2}·3^{−1/4} = 2·3^{−1/4}
        let b = mahler_bound(2, &Rat::one()).unwrap();
        assert_eq!(b.exponent_of(&Base::Prime(2)), rat_i64(1));
        assert_eq!(b.exponent_of(&Base::Prime(3)), -rat_frac(1, 4));
        // independent of α₁ ≥ 1
        assert_eq!(mahler_bound(2, &rat_i64(7)).unwrap(), b);
        // α₁ < 1 multiplies α₁^{−(d−1)}
        let b2 = mahler_bound(3, &rat_frac(1, 2)).unwrap();
        let b1 = mahler_bound(3, &Rat::one()).unwrap();
        assert_eq!(b2.div(&b1).to_rational().unwrap(), rat_i64(4));
        // recurrence constants
        let (c, theta) = recurrence_constants(3, Place::Prime(2)).unwrap();
        assert_eq!(c, rat_i64(729 * 27 * 128));
        assert_eq!(theta, rat_frac(1, 4));
        let (c, _) = recurrence_constants(2, Place::Infinity).unwrap();
        assert_eq!(c, rat_i64(16 * 81 * 8));
        assert!(recurrence_constants(1, Place::Infinity).is_err());
    }

    #[test]
    fn bound_tables() {
        let led = ConstantsLedger::with_defaults(3).unwrap();
        let q1 = QuadraticForm::diagonal_i64(&[1, 1, -1]);
        let q2 = q1.clone();
        let s = PlaceSet::new([2, 7]).unwrap();
        let t = led
            .bound_equiv(&q1, &q2, &s, &EquivCase::RIsotropic)
            .unwrap();
        // odd p with |det|_p = 1 → exactly p
        let row7 = t.at(Place::Prime(7)).unwrap();
        assert_eq!(row7.value.to_rational().unwrap(), rat_i64(7));
        assert!(!row7.strict);
        // 2-row, d = 3, unit det → 2⁵ = 32
        let row2 = t.at(Place::Prime(2)).unwrap();
        assert_eq!(row2.value.to_rational().unwrap(), rat_i64(32));
        // ∞ row strict and parametric (D1 and V∞ through ℭ)
        let rinf = t.at(Place::Infinity).unwrap();
        assert!(rinf.strict);
        assert_eq!(rinf.value.parametric_bases(), vec!["D1", "V∞"]);
        // anisotropic case: I₃ is definite and isotropic over ℚ₃
        let q = QuadraticForm::diagonal_i64(&[1, 1, 1]);
        let s3 = PlaceSet::new([3]).unwrap();
        let t = led
            .bound_equiv(&q, &q, &s3, &EquivCase::RAnisotropic { p0: 3 })
            .unwrap();
        let rinf = t.at(Place::Infinity).unwrap();
        // d^{d+1}·d! = 81·6 = 486 at unit norms
        assert_eq!(rinf.value.to_rational().unwrap(), rat_i64(486));
        // case mismatch errors
        assert!(led
            .bound_equiv(&q, &q, &s3, &EquivCase::RIsotropic)
            .is_err());
        assert!(led
            .bound_equiv(&q1, &q2, &s, &EquivCase::RAnisotropic { p0: 7 })
            .is_err());
        // p₀ not in S
        assert!(led
            .bound_equiv(&q, &q, &s3, &EquivCase::RAnisotropic { p0 : 5 })
            .is_err());
    }

    #[test]
    fn generator_tables() {
        let led = ConstantsLedger::with_defaults(3).unwrap();
        let q = QuadraticForm::diagonal_i64(&[1, 1, -1]);
        let s = PlaceSet::new([2, 7]).unwrap();
        let t = led.bound_generators(&q, &s, &EquivCase::RIsotropic).unwrap();
        // odd p with unit det → p^{2d+2} = 7⁸
        let row7 = t.at(Place::Prime(7)).unwrap();
        assert_eq!(
            row7.value.to_rational().unwrap(),
            Rat::from(Int::from(7u64).pow(8))
        );
        // 2-row, d = 3 → 2^{21}
        let row2 = t.at(Place::Prime(2)).unwrap();
        assert_eq!(
            row2.value.to_rational().unwrap(),
            Rat::from(Int::from(2u64).pow(21))
        );
        // definite ∞-row at ‖Q‖ = 2: 486·2^{3/2}
        let q = QuadraticForm::diagonal_i64(&[2, 1, 1]);
        let s3 = PlaceSet::new([3]).unwrap();
        let t = led
            .bound_generators(&q, &s3, &EquivCase::RAnisotropic { p0: 3 })
            .unwrap();
        let rinf = t.at(Place::Infinity).unwrap();
        // 486 = 2·3⁵ → total 2^{1+3/2}·3⁵
        assert_eq!(rinf.value.exponent_of(&Base::Prime(2)), rat_frac(5, 2));
        assert_eq!(rinf.value.exponent_of(&Base::Prime(3)), rat_i64(5));
    }

    #[test]
    fn volume_orbit_examples() {
        let led = ConstantsLedger::with_defaults(3).unwrap();
        let q = QuadraticForm::diagonal_i64(&[1, 1, -1]);
        // S = {∞}: 𝒱·2^{2d⁶}·|det|^{(d+1)/2}
        let s = PlaceSet::infinity_only();
        let v = led.volume_orbit_bound(&q, &s).unwrap();
        let expected = led
            .get("script_V")
            .unwrap()
            .mul(&PowVal::prime_pow(2, rat_i64(2 * 729)));
        assert_eq!(v, expected);
        assert!(v.is_parametric());
        // with finite places: p_S^{3d⁶} and the height; height 1 at unit det
        let s2 = PlaceSet::new([2]).unwrap();
        let v2 = led.volume_orbit_bound(&q, &s2).unwrap();
        let expected2 = led
            .get("script_V")
            .unwrap()
            .mul(&PowVal::prime_pow(2, rat_i64(3 * 729)));
        assert_eq!(v2, expected2);
        // scaling by a unit outside S raises the height and the bound; a
        // 2-scaling would not (the 2-part cancels in the S-height)
        let q_big = QuadraticForm::diagonal_i64(&[3, 3, -3]);
        let v_big = led.volume_orbit_bound(&q_big, &s2).unwrap();
        assert!(v_big.log10(1.0, 1.0) > v2.log10(1.0, 1.0));
        let q_two = QuadraticForm::diagonal_i64(&[2, 2, -2]);
        let v_two = led.volume_orbit_bound(&q_two, &s2).unwrap();
        assert_eq!(v_two, v2);
        // anisotropic over ℚ_S → precondition error
        let pos = QuadraticForm::diagonal_i64(&[1, 1, 1]);
        assert!(led.volume_orbit_bound(&pos, &s).is_err());
    }

    #[test]
    fn bound_monotonicity_grid() {
        let led = ConstantsLedger::with_defaults(3).unwrap();
        let s = PlaceSet::new([2]).unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 1..=5i64 {
            let q = QuadraticForm::diagonal_i64(&[k, k, -k]);
            let t = led.bound_equiv(&q, &q, &s, &EquivCase::RIsotropic).unwrap();
            let v = t.at(Place::Infinity).unwrap().value.log10(1.0, 1.0);
            assert!(v >= last);
            last = v;
        }
        let mut last = f64::NEG_INFINITY;
        for k in 1..=5i64 {
            let q = QuadraticForm::diagonal_i64(&[k, k, k]);
            let s3 = PlaceSet::new([3]).unwrap();
            let t = led
                .bound_generators(&q, &s3, &EquivCase::RAnisotropic { p0: 3 })
                .unwrap();
            let v = t.at(Place::Infinity).unwrap().value.log10(1.0, 1.0);
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn xi_infinity_numeric_sanity() {
        // test-only quadrature of (2π)^{−1}∫ ‖a(λ)k_θ e₁‖⁻¹ dθ: decays in λ
        let xi_inf = |lambda: f64| -> f64 {
            let n = 1 << 16;
            let mut acc = 0.0;
            for i in 0..n {
                let theta = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
                let x = lambda * theta.cos();
                let y = theta.sin() / lambda;
                acc += 1.0 / (x * x + y * y).sqrt();
            }
            acc / n as f64
        };
        let v1 = xi_inf(1.0);
        assert!((v1 - 1.0).abs() < 1e-9);
        let v2 = xi_inf(2.0);
        let v4 = xi_inf(4.0);
        assert!(v2 < v1 && v4 < v2);
        // loose envelope 10·λ^{−1/2} with the default decay constant
        assert!(v2 < 10.0 / 2f64.sqrt());
        assert!(v4 < 10.0 / 2.0);
    }
}
