//! Quadratic forms over `ℚ` in `d` variables.
//!
//! A form is stored by its Gram matrix `b_Q` (symmetric, possibly
//! half-integral off the diagonal); the polynomial coefficients are
//! `a_ii = (b_Q)_ii` and `a_ij = 2(b_Q)_ij` for `i < j`, so that
//! `Q(x) = Σ_{i≤j} a_ij x_i x_j = ᵗx·b_Q·x`.
//!
//! Conventions:
//! * `‖Q‖_ν` is the maximum `ν`-absolute value of the *polynomial
//!   coefficients* `a_ij`.
//! * "integral" means integral polynomial coefficients.
//! * The JSON wire format lists the nonzero polynomial coefficients as
//!   `{"d": 3, "coeffs": [[1, 1, "1"], [2, 3, "-1/2"], …]}` with 1-based
//!   indices `i ≤ j` and canonical rational strings.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{parse_rat, rat_i64, rat_to_string, Place, PlaceSet, Rat};
use crate::error::{Error, Result};
use crate::matrix::RMatrix;

/// A quadratic form in `d ≥ 1` variables, identified with its Gram matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    gram: RMatrix,
}

/// Exact signature data of a rational quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    /// Number of positive squares in any rational diagonalization.
    pub positive: usize,
    /// Number of negative squares.
    pub negative: usize,
    /// Dimension of the radical (0 for nondegenerate forms).
    pub zero: usize,
}

impl Signature {
    /// `true` when the form is positive or negative definite.
    pub fn is_definite(&self) -> bool {
        self.zero == 0 && (self.positive == 0 || self.negative == 0)
    }

    /// `true` when both signs occur (the real form is isotropic for `d ≥ 2`).
    pub fn is_indefinite(&self) -> bool {
        self.positive > 0 && self.negative > 0
    }
}

impl QuadraticForm {
    /// Build from a symmetric Gram matrix.
    pub fn from_gram(gram: RMatrix) -> Result<QuadraticForm> {
        if !gram.is_square() {
            return Err(Error::Dimension("Gram matrix must be square".into()));
        }
        if !gram.is_symmetric() {
            return Err(Error::Precondition("Gram matrix must be symmetric".into()));
        }
        Ok(QuadraticForm { gram })
    }

    /// Build from 1-based polynomial coefficients `(i, j, a_ij)` with `i ≤ j`.
    pub fn from_coeffs(d: usize, coeffs: &[(usize, usize, Rat)]) -> Result<QuadraticForm> {
        if d == 0 {
            return Err(Error::Dimension("form needs at least one variable".into()));
        }
        let mut gram = RMatrix::zero(d, d);
        let mut seen = std::collections::BTreeSet::new();
        for (i, j, a) in coeffs {
            if *i < 1 || *j < 1 || *i > d || *j > d {
                return Err(Error::Parse(format!("coefficient index ({i},{j}) out of range 1..={d}")));
            }
            if i > j {
                return Err(Error::Parse(format!("coefficient index ({i},{j}) must have i ≤ j")));
            }
            if !seen.insert((*i, *j)) {
                return Err(Error::Parse(format!("duplicate coefficient index ({i},{j})")));
            }
            let (r, c) = (*i - 1, *j - 1);
            if r == c {
                gram[(r, c)] = a.clone();
            } else {
                let half = a / rat_i64(2);
                gram[(r, c)] = half.clone();
                gram[(c, r)] = half;
            }
        }
        Ok(QuadraticForm { gram })
    }

    /// Diagonal form `c_1 x_1² + … + c_d x_d²`.
    pub fn diagonal(entries: &[Rat]) -> Result<QuadraticForm> {
        if entries.is_empty() {
            return Err(Error::Dimension("form needs at least one variable".into()));
        }
        Ok(QuadraticForm {
            gram: RMatrix::diagonal(entries),
        })
    }

    /// Diagonal form from integer coefficients (convenience).
    pub fn diagonal_i64(entries: &[i64]) -> QuadraticForm {
        let v: Vec<Rat> = entries.iter().map(|&c| rat_i64(c)).collect();
        QuadraticForm::diagonal(&v).expect("nonempty")
    }

    /// Number of variables.
    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    /// The Gram matrix `b_Q`.
    pub fn gram(&self) -> &RMatrix {
        &self.gram
    }

    /// `det b_Q` (exact).
    pub fn det(&self) -> Rat {
        self.gram.det().expect("square by construction")
    }

    /// `true` when `det b_Q ≠ 0`.
    pub fn is_nondegenerate(&self) -> bool {
        !self.det().is_zero()
    }

    /// Polynomial coefficient `a_ij` (1-based, `i ≤ j`).
    pub fn coeff(&self, i: usize, j: usize) -> Result<Rat> {
        let d = self.dim();
        if i < 1 || j < 1 || i > d || j > d || i > j {
            return Err(Error::Dimension(format!("bad coefficient index ({i},{j})")));
        }
        Ok(if i == j {
            self.gram[(i - 1, i - 1)].clone()
        } else {
            &self.gram[(i - 1, j - 1)] * rat_i64(2)
        })
    }

    /// The nonzero polynomial coefficients, sorted by `(i, j)` (1-based).
    pub fn coeffs(&self) -> Vec<(usize, usize, Rat)> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 1..=d {
            for j in i..=d {
                let a = self.coeff(i, j).expect("in range");
                if !a.is_zero() {
                    out.push((i, j, a));
                }
            }
        }
        out
    }

    /// Evaluate `Q(x)`.
    pub fn evaluate(&self, x: &[Rat]) -> Result<Rat> {
        let bx = self.gram.mul_vec(x)?;
        let mut acc = Rat::zero();
        for (xi, bxi) in x.iter().zip(&bx) {
            acc += xi * bxi;
        }
        Ok(acc)
    }

    /// The substituted form `Q∘g`, with Gram matrix `ᵗg·b_Q·g`; this is the
    /// right action, so `(Q∘g)∘h = Q∘(gh)`.
    pub fn act(&self, g: &RMatrix) -> Result<QuadraticForm> {
        if g.nrows() != self.dim() || g.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "substitution matrix must be {0}×{0}",
                self.dim()
            )));
        }
        Ok(QuadraticForm {
            gram: self.gram.congruence(g)?,
        })
    }

    /// `‖Q‖_ν`: the maximum `ν`-absolute value of the polynomial coefficients.
    pub fn coefficient_norm(&self, nu: Place) -> Rat {
        let d = self.dim();
        let mut entries = Vec::with_capacity(d * (d + 1) / 2);
        for i in 1..=d {
            for j in i..=d {
                entries.push(self.coeff(i, j).expect("in range"));
            }
        }
        crate::arith::nu_norm_slice(&entries, nu).expect("nonempty")
    }

    /// `‖Q‖_S = max_{ν ∈ S} ‖Q‖_ν`.
    pub fn s_norm(&self, s: &PlaceSet) -> Rat {
        s.places()
            .into_iter()
            .map(|nu| self.coefficient_norm(nu))
            .max()
            .expect("S nonempty")
    }

    /// `true` iff all polynomial coefficients are integers.
    pub fn is_integral(&self) -> bool {
        self.coeffs().iter().all(|(_, _, a)| a.denom().is_one())
    }

    /// Direct sum `Q ⊕ R` in `dim Q + dim R` variables.
    pub fn direct_sum(&self, other: &QuadraticForm) -> QuadraticForm {
        QuadraticForm {
            gram: self.gram.direct_sum(other.gram()),
        }
    }

    /// Rescale: the form `c·Q`.
    pub fn scale(&self, c: &Rat) -> QuadraticForm {
        QuadraticForm {
            gram: self.gram.scale(c),
        }
    }

    /// An exact rational diagonalization: values `(c_1, …, c_d)` and a basis
    /// matrix `E ∈ GL(d, ℚ)` with `ᵗE·b_Q·E = diag(c_1, …, c_d)`.
    ///
    /// Zero values appear exactly for the radical of a degenerate form.
    pub fn rational_diagonalization(&self) -> Result<(Vec<Rat>, RMatrix)> {
        let d = self.dim();
        let mut e = RMatrix::identity(d);
        let mut k = 0usize;
        while k < d {
            let g = self.gram.congruence(&e)?;
            // Prefer an honest diagonal pivot.
            let diag_pivot = (k..d).find(|&i| !g[(i, i)].is_zero());
            let pivot = match diag_pivot {
                Some(i) => Some(i),
                None => {
                    // All remaining diagonal entries vanish; a nonzero
                    // off-diagonal (i, j) yields a nonzero diagonal after
                    // the column move e_i ← e_i + e_j (char 0: value 2g_ij).
                    let mut found = None;
                    'scan: for i in k..d {
                        for j in (i + 1)..d {
                            if !g[(i, j)].is_zero() {
                                found = Some((i, j));
                                break 'scan;
                            }
                        }
                    }
                    match found {
                        None => break, // remaining block is identically zero
                        Some((i, j)) => {
                            for r in 0..d {
                                let add = e[(r, j)].clone();
                                e[(r, i)] += add;
                            }
                            Some(i)
                        }
                    }
                }
            };
            let i = pivot.expect("set above");
            if i != k {
                for r in 0..d {
                    let tmp = e[(r, i)].clone();
                    e[(r, i)] = e[(r, k)].clone();
                    e[(r, k)] = tmp;
                }
            }
            let g = self.gram.congruence(&e)?;
            let pv = g[(k, k)].clone();
            debug_assert!(!pv.is_zero());
            for l in (k + 1)..d {
                if g[(l, k)].is_zero() {
                    continue;
                }
                let mu = &g[(l, k)] / &pv;
                for r in 0..d {
                    let sub = &mu * &e[(r, k)];
                    e[(r, l)] -= sub;
                }
            }
            k += 1;
        }
        let g = self.gram.congruence(&e)?;
        let values: Vec<Rat> = (0..d).map(|i| g[(i, i)].clone()).collect();
        // exactness check: the congruence must be exactly diagonal
        for i in 0..d {
            for j in 0..d {
                if i != j && !g[(i, j)].is_zero() {
                    return Err(Error::Internal("diagonalization left an off-diagonal entry".into()));
                }
            }
        }
        Ok((values, e))
    }

    /// Exact signature by rational diagonalization.
    pub fn signature(&self) -> Result<Signature> {
        let (values, _) = self.rational_diagonalization()?;
        let mut sig = Signature {
            positive: 0,
            negative: 0,
            zero: 0,
        };
        for v in values {
            if v.is_zero() {
                sig.zero += 1;
            } else if v.is_positive() {
                sig.positive += 1;
            } else {
                sig.negative += 1;
            }
        }
        Ok(sig)
    }

    /// Render as a polynomial string, e.g. `x1^2 - 3*x2^2 - 2*x2*x3`.
    pub fn to_polynomial_string(&self) -> String {
        let coeffs = self.coeffs();
        if coeffs.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (i, j, a)) in coeffs.iter().enumerate() {
            let mag = a.abs();
            let term = if i == j {
                format!("x{i}^2")
            } else {
                format!("x{i}*x{j}")
            };
            let coef = if mag.is_one() {
                term
            } else {
                format!("{}*{}", rat_to_string(&mag), term)
            };
            if idx == 0 {
                if a.is_negative() {
                    out.push('-');
                }
                out.push_str(&coef);
            } else {
                out.push_str(if a.is_negative() { " - " } else { " + " });
                out.push_str(&coef);
            }
        }
        out
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_polynomial_string())
    }
}

#[derive(Serialize, Deserialize)]
struct WireForm {
    d: usize,
    coeffs: Vec<(usize, usize, String)>,
}

impl Serialize for QuadraticForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let wire = WireForm {
            d: self.dim(),
            coeffs: self
                .coeffs()
                .into_iter()
                .map(|(i, j, a)| (i, j, rat_to_string(&a)))
                .collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QuadraticForm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = WireForm::deserialize(deserializer)?;
        let coeffs: std::result::Result<Vec<(usize, usize, Rat)>, D::Error> = wire
            .coeffs
            .iter()
            .map(|(i, j, s)| {
                parse_rat(s)
                    .map(|a| (*i, *j, a))
                    .map_err(D::Error::custom)
            })
            .collect();
        QuadraticForm::from_coeffs(wire.d, &coeffs?).map_err(D::Error::custom)
    }
}
