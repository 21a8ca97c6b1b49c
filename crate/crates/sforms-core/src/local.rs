//! Classification of nondegenerate quadratic forms over the completions
//! `ℚ_ν`.
//!
//! The complete invariants are: dimension, determinant square class, and
//! Hasse invariant `ε(Q) = ∏_{i<j} (a_i, a_j)_ν` over any diagonalization
//! `⟨a_1, …, a_d⟩` at a finite place, and the signature at `∞`.
//!
//! Every class has a *standard representative*: `k` hyperbolic planes
//! `x² − y²` first, followed by a standard anisotropic kernel drawn from a
//! fixed table (see [`standard_anisotropic`]). The catalog of a dimension is
//! the list of these representatives; matching a form into the catalog by its
//! invariants decides isotropy and `ν`-equivalence.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith::{
    class_representatives, hilbert_symbol_place, rat_i64, smallest_nonresidue, square_class,
    Place, PlaceSet, Rat, SquareClass,
};
use crate::error::{Error, Result};
use crate::qform::{QuadraticForm, Signature};

/// The complete local invariants of a nondegenerate form at a place.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalInvariants {
    /// The place `ν`.
    pub place: Place,
    /// Number of variables.
    pub dim: usize,
    /// Square class of `det b_Q` in `𝒞_ν`.
    pub det_class: SquareClass,
    /// Hasse invariant `ε(Q) ∈ {±1}`.
    pub hasse: i32,
    /// Signature; only meaningful (and only `Some`) at `ν = ∞`.
    pub signature: Option<Signature>,
    /// The diagonalization `⟨a_1, …, a_d⟩` the invariants were computed from.
    pub diagonal: Vec<Rat>,
}

impl LocalInvariants {
    /// Whether two invariant tuples name the same `ℚ_ν`-class.
    pub fn same_class(&self, other: &LocalInvariants) -> bool {
        self.place == other.place
            && self.dim == other.dim
            && self.det_class == other.det_class
            && self.hasse == other.hasse
            && self.signature == other.signature
    }
}

/// A standard representative of a `ℚ_ν`-equivalence class: `k` hyperbolic
/// planes `⟨1, −1⟩` followed by a standard anisotropic kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardForm {
    /// The place.
    pub place: Place,
    /// The (diagonal) representative form.
    pub form: QuadraticForm,
    /// Number of leading hyperbolic planes `⟨1, −1⟩`.
    pub hyperbolic_planes: usize,
    /// Dimension of the anisotropic kernel (`dim − 2·hyperbolic_planes`).
    pub kernel_dim: usize,
}

impl StandardForm {
    /// A form is isotropic over `ℚ_ν` iff it splits a hyperbolic plane.
    pub fn is_isotropic(&self) -> bool {
        self.hyperbolic_planes > 0
    }
}

/// The diagonal coefficient lists of the standard anisotropic forms of the
/// given dimension over `ℚ_ν` (empty for dimensions with no anisotropic
/// forms, i.e. `dim ≥ 5` at finite places).
pub fn standard_anisotropic(nu: Place, dim: usize) -> Vec<Vec<Rat>> {
    let r = rat_i64;
    match (nu, dim) {
        (_, 0) => vec![],
        (Place::Infinity, d) => {
            vec![vec![r(1); d], vec![r(-1); d]]
        }
        (_, 1) => class_representatives(nu).into_iter().map(|c| vec![c]).collect(),
        (Place::Prime(2), 2) => [
            (1, 1),
            (-1, -1),
            (1, 3),
            (2, 6),
            (1, -3),
            (-1, 3),
            (1, 2),
            (-1, -2),
            (1, -2),
            (3, -6),
            (1, 6),
            (2, 3),
            (1, -6),
            (-1, 6),
        ]
        .iter()
        .map(|&(a, b)| vec![r(a), r(b)])
        .collect(),
        (Place::Prime(2), 3) => class_representatives(nu)
            .into_iter()
            .map(|c| vec![c.clone(), c.clone(), c])
            .collect(),
        (Place::Prime(2), 4) => vec![vec![r(1), r(1), r(1), r(1)]],
        (Place::Prime(p), 2) => {
            let n = r(smallest_nonresidue(p) as i64);
            let p = r(p as i64);
            let np = &n * &p;
            vec![
                vec![r(1), -&n],
                vec![p.clone(), -&np],
                vec![r(1), -&p],
                vec![n.clone(), -&np],
                vec![r(1), -&np],
                vec![n.clone(), -&p],
            ]
        }
        (Place::Prime(p), 3) => {
            let n = r(smallest_nonresidue(p) as i64);
            let p = r(p as i64);
            let np = &n * &p;
            vec![
                vec![r(1), -&n, p.clone()],
                vec![r(1), -&n, np.clone()],
                vec![r(1), p.clone(), -&np],
                vec![n.clone(), p.clone(), -&np],
            ]
        }
        (Place::Prime(p), 4) => {
            let n = r(smallest_nonresidue(p) as i64);
            let p = r(p as i64);
            let np = &n * &p;
            vec![vec![r(1), -&n, p.clone(), -&np]]
        }
        (Place::Prime(_), _) => vec![],
    }
}

/// All `ℚ_ν`-equivalence classes of nondegenerate forms in `d` variables,
/// each given by its standard representative. Entries have pairwise distinct
/// invariants and the list is complete.
pub fn catalog(nu: Place, d: usize) -> Result<Vec<StandardForm>> {
    if d == 0 {
        return Err(Error::Dimension("catalog needs d ≥ 1".into()));
    }
    let mut out = Vec::new();
    for k in 0..=(d / 2) {
        let m = d - 2 * k;
        let kernels: Vec<Vec<Rat>> = if m == 0 {
            vec![Vec::new()]
        } else {
            standard_anisotropic(nu, m)
        };
        for kernel in kernels {
            let mut coeffs = Vec::with_capacity(d);
            for _ in 0..k {
                coeffs.push(rat_i64(1));
                coeffs.push(rat_i64(-1));
            }
            coeffs.extend(kernel);
            out.push(StandardForm {
                place: nu,
                form: QuadraticForm::diagonal(&coeffs)?,
                hyperbolic_planes: k,
                kernel_dim: m,
            });
        }
    }
    Ok(out)
}

/// The complete local invariants of a nondegenerate form.
pub fn local_invariants(q: &QuadraticForm, nu: Place) -> Result<LocalInvariants> {
    let det = q.det();
    if det.is_zero() {
        return Err(Error::Degenerate("local invariants need a nondegenerate form".into()));
    }
    let (diag, _) = q.rational_diagonalization()?;
    debug_assert!(diag.iter().all(|a| !num_traits::Zero::is_zero(a)));
    let mut hasse = 1i32;
    for i in 0..diag.len() {
        for j in (i + 1)..diag.len() {
            hasse *= hilbert_symbol_place(&diag[i], &diag[j], nu)?;
        }
    }
    let det_class = square_class(&det, nu)?.class;
    let signature = if nu.is_infinite() {
        Some(q.signature()?)
    } else {
        None
    };
    Ok(LocalInvariants {
        place: nu,
        dim: q.dim(),
        det_class,
        hasse,
        signature,
        diagonal: diag,
    })
}

/// The standard representative of the `ℚ_ν`-class of `q`, located in the
/// catalog by invariant matching.
pub fn standard_form_of(q: &QuadraticForm, nu: Place) -> Result<StandardForm> {
    let inv = local_invariants(q, nu)?;
    for sf in catalog(nu, q.dim())? {
        let sinv = local_invariants(&sf.form, nu)?;
        if inv.same_class(&sinv) {
            return Ok(sf);
        }
    }
    Err(Error::Internal(format!(
        "no catalog entry matches invariants at {nu} (dim {}, det class {}, ε = {})",
        inv.dim, inv.det_class, inv.hasse
    )))
}

/// Isotropy of a nondegenerate form over `ℚ_ν`, decided by classification.
pub fn is_isotropic(q: &QuadraticForm, nu: Place) -> Result<bool> {
    Ok(standard_form_of(q, nu)?.is_isotropic())
}

/// Isotropy over `ℚ_S` in the componentwise sense: isotropic at *every*
/// `ν ∈ S`.
pub fn is_isotropic_qs(q: &QuadraticForm, s: &PlaceSet) -> Result<bool> {
    for nu in s.places() {
        if !is_isotropic(q, nu)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `ℚ_ν`-equivalence of two nondegenerate forms (complete invariant test).
pub fn equivalent_local(q1: &QuadraticForm, q2: &QuadraticForm, nu: Place) -> Result<bool> {
    if q1.dim() != q2.dim() {
        return Ok(false);
    }
    Ok(local_invariants(q1, nu)?.same_class(&local_invariants(q2, nu)?))
}

/// `ℚ_S`-equivalence: equivalence over `ℚ_ν` for every `ν ∈ S`.
pub fn equivalent_qs(q1: &QuadraticForm, q2: &QuadraticForm, s: &PlaceSet) -> Result<bool> {
    for nu in s.places() {
        if !equivalent_local(q1, q2, nu)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{isotropy_oracle_ternary, rat_frac};
    use crate::matrix::RMatrix;

    fn q1_ternary() -> QuadraticForm {
        QuadraticForm::from_coeffs(
            3,
            &[
                (1, 1, rat_i64(1)),
                (2, 2, rat_i64(-3)),
                (2, 3, rat_i64(-2)),
                (3, 3, rat_i64(-23)),
            ],
        )
        .unwrap()
    }

    fn q2_ternary() -> QuadraticForm {
        QuadraticForm::from_coeffs(
            3,
            &[
                (1, 1, rat_i64(1)),
                (2, 2, rat_i64(-7)),
                (2, 3, rat_i64(-6)),
                (3, 3, rat_i64(-11)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn catalog_counts_dim4() {
        // total classes 16/8/5; anisotropic classes 1/1/2
        let c2 = catalog(Place::Prime(2), 4).unwrap();
        assert_eq!(c2.len(), 16);
        assert_eq!(c2.iter().filter(|s| s.is_isotropic()).count(), 15);
        for p in [3u64, 5] {
            let c = catalog(Place::Prime(p), 4).unwrap();
            assert_eq!(c.len(), 8);
            assert_eq!(c.iter().filter(|s| s.is_isotropic()).count(), 7);
        }
        let ci = catalog(Place::Infinity, 4).unwrap();
        assert_eq!(ci.len(), 5);
        assert_eq!(ci.iter().filter(|s| s.is_isotropic()).count(), 3);
    }

    #[test]
    fn catalog_counts_small_dims() {
        // (place, d) → (total, isotropic)
        let cases: Vec<(Place, usize, usize, usize)> = vec![
            (Place::Prime(2), 1, 8, 0),
            (Place::Prime(3), 1, 4, 0),
            (Place::Infinity, 1, 2, 0),
            (Place::Prime(2), 2, 15, 1),
            (Place::Prime(3), 2, 7, 1),
            (Place::Infinity, 2, 3, 1),
            (Place::Prime(2), 3, 16, 8),
            (Place::Prime(5), 3, 8, 4),
            (Place::Infinity, 3, 4, 2),
            (Place::Prime(2), 5, 16, 16),
            (Place::Prime(3), 5, 8, 8),
            (Place::Infinity, 5, 6, 4),
        ];
        for (nu, d, total, iso) in cases {
            let c = catalog(nu, d).unwrap();
            assert_eq!(c.len(), total, "total at {nu}, d={d}");
            assert_eq!(
                c.iter().filter(|s| s.is_isotropic()).count(),
                iso,
                "isotropic at {nu}, d={d}"
            );
        }
    }

    #[test]
    fn catalog_entries_have_distinct_invariants() {
        for nu in [Place::Infinity, Place::Prime(2), Place::Prime(3), Place::Prime(5)] {
            for d in 1..=5 {
                let entries = catalog(nu, d).unwrap();
                let invs: Vec<LocalInvariants> = entries
                    .iter()
                    .map(|s| local_invariants(&s.form, nu).unwrap())
                    .collect();
                for i in 0..invs.len() {
                    for j in (i + 1)..invs.len() {
                        assert!(
                            !invs[i].same_class(&invs[j]),
                            "duplicate class at {nu}, d={d}: entries {i} and {j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn invariants_are_congruence_invariant() {
        let q = q1_ternary();
        let g = RMatrix::from_i64_rows(&[&[1, 2, 0], &[0, 1, -1], &[1, 0, 3]]).unwrap();
        assert_ne!(g.det().unwrap(), rat_i64(0));
        let qg = q.act(&g).unwrap();
        for nu in [Place::Infinity, Place::Prime(2), Place::Prime(17), Place::Prime(3)] {
            let a = local_invariants(&q, nu).unwrap();
            let b = local_invariants(&qg, nu).unwrap();
            assert!(a.same_class(&b), "invariants moved at {nu}");
        }
    }

    #[test]
    fn known_standard_forms() {
        // x² + y² + z² is its own standard form at 2 (anisotropic)
        let q = QuadraticForm::diagonal_i64(&[1, 1, 1]);
        let sf = standard_form_of(&q, Place::Prime(2)).unwrap();
        assert_eq!(sf.hyperbolic_planes, 0);
        assert_eq!(sf.form, q);
        // ... but at 3 it is isotropic: 1 + 1 + 1 ≡ 0 (mod 3) lifts
        let sf3 = standard_form_of(&q, Place::Prime(3)).unwrap();
        assert_eq!(sf3.hyperbolic_planes, 1);
        // 5x² falls in the class of −3x² at 2 (5 ≡ −3 mod 8)
        let sf5 = standard_form_of(&QuadraticForm::diagonal_i64(&[5]), Place::Prime(2)).unwrap();
        assert_eq!(sf5.form, QuadraticForm::diagonal_i64(&[-3]));
        // x² − y² is the hyperbolic plane everywhere
        let h = QuadraticForm::diagonal_i64(&[1, -1]);
        for nu in [Place::Infinity, Place::Prime(2), Place::Prime(7)] {
            let sf = standard_form_of(&h, nu).unwrap();
            assert_eq!(sf.hyperbolic_planes, 1);
            assert_eq!(sf.kernel_dim, 0);
        }
        // scaling by a square keeps the class: 4x² ~ x²
        let sf4 = standard_form_of(&QuadraticForm::diagonal(&[rat_frac(4, 9)]).unwrap(), Place::Prime(2))
            .unwrap();
        assert_eq!(sf4.form, QuadraticForm::diagonal_i64(&[1]));
    }

    #[test]
    fn ternary_isotropy_matches_independent_oracle() {
        let vals = [1i64, -1, 2, -2, 3, -3];
        for p in [2u64, 3, 5] {
            for &a in &vals {
                for &b in &vals {
                    for &c in &vals {
                        let q = QuadraticForm::diagonal_i64(&[a, b, c]);
                        let by_class = is_isotropic(&q, Place::Prime(p)).unwrap();
                        let by_oracle = isotropy_oracle_ternary(
                            &rat_i64(a),
                            &rat_i64(b),
                            &rat_i64(c),
                            p,
                        )
                        .unwrap();
                        assert_eq!(
                            by_class, by_oracle,
                            "isotropy mismatch for ⟨{a},{b},{c}⟩ at p={p}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn infinite_place_isotropy_is_indefiniteness() {
        assert!(!is_isotropic(&QuadraticForm::diagonal_i64(&[2, 3, 5]), Place::Infinity).unwrap());
        assert!(is_isotropic(&q1_ternary(), Place::Infinity).unwrap());
        assert!(!is_isotropic(&QuadraticForm::diagonal_i64(&[-1, -4]), Place::Infinity).unwrap());
    }

    #[test]
    fn ternary_pair_is_qs_equivalent() {
        let (a, b) = (q1_ternary(), q2_ternary());
        assert_eq!(a.det(), rat_i64(68));
        assert_eq!(b.det(), rat_i64(68));
        let s = PlaceSet::new([2, 17]).unwrap();
        assert!(equivalent_qs(&a, &b, &s).unwrap());
        for nu in [Place::Infinity, Place::Prime(2), Place::Prime(17), Place::Prime(5)] {
            assert!(equivalent_local(&a, &b, nu).unwrap());
        }
        // the pair lands in the anisotropic class of ⟨1,1,1⟩ at 2, so it is
        // inequivalent to any 2-adically isotropic form
        assert!(equivalent_local(&a, &QuadraticForm::diagonal_i64(&[1, 1, 1]), Place::Prime(2)).unwrap());
        assert!(!equivalent_local(&a, &QuadraticForm::diagonal_i64(&[1, -1, 1]), Place::Prime(2)).unwrap());
        assert!(!is_isotropic(&a, Place::Prime(2)).unwrap());
    }

    #[test]
    fn degenerate_forms_are_rejected() {
        let dg = QuadraticForm::diagonal_i64(&[1, 0]);
        assert!(local_invariants(&dg, Place::Prime(2)).is_err());
        assert!(is_isotropic(&dg, Place::Infinity).is_err());
    }

    #[test]
    fn hasse_invariant_known_values() {
        // ⟨1,1,1⟩: ε = 1 at every place; ⟨−1,−1⟩: ε = (−1,−1)_ν
        let q = QuadraticForm::diagonal_i64(&[1, 1, 1]);
        for nu in [Place::Infinity, Place::Prime(2), Place::Prime(3)] {
            assert_eq!(local_invariants(&q, nu).unwrap().hasse, 1);
        }
        let m = QuadraticForm::diagonal_i64(&[-1, -1]);
        assert_eq!(local_invariants(&m, Place::Prime(2)).unwrap().hasse, -1);
        assert_eq!(local_invariants(&m, Place::Infinity).unwrap().hasse, -1);
        assert_eq!(local_invariants(&m, Place::Prime(5)).unwrap().hasse, 1);
    }
}
