//! Twisted Čech cochains on a nerve.
//!
//! The coboundary of a `k`-cochain on an ordered simplex `(i₀, …, i_{k+1})` is
//!
//! ```text
//! (δc)(i₀…i_{k+1}) = ε_{i₀i₁} · c(i₁…i_{k+1}) + Σ_{r≥1} (−1)^r c(i₀…î_r…i_{k+1})
//! ```
//!
//! where the sign `ε` acts on values through the coefficient involution. In
//! degree 2 the cocycle condition reads `a_ijk + a_ikl = ε_ij·a_jkl + a_ijl`.
//!
//! All exact questions (cohomology, solving `δb = z`, certificates) go through
//! the integer Smith normal form of the coboundary matrices; the same
//! factorisation answers the question over `Z`, `Z/n` and `R`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::coeffs::{circle_distance, frac, CoefficientGroup, CoefficientKind, Involution};
use crate::error::{Error, Result};
use crate::nerve::{facets, Nerve, Simplex, MAX_DIM};
use crate::snf::{smith_normal_form, to_f64, IntMatrix, SmithForm};

/// One coefficient per canonical `k`-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain<T> {
    degree: usize,
    values: Vec<T>,
}

pub type IntCochain = Cochain<i64>;
pub type RealCochain = Cochain<f64>;

impl<T: Copy + Default> Cochain<T> {
    pub fn zeros(nerve: &Nerve, degree: usize) -> Self {
        Cochain { degree, values: vec![T::default(); nerve.count(degree)] }
    }

    pub fn new(nerve: &Nerve, degree: usize, values: Vec<T>) -> Result<Self> {
        let expected = nerve.count(degree);
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, found: values.len() });
        }
        Ok(Cochain { degree, values })
    }

    /// Builds a cochain from `(simplex, value)` pairs; unlisted simplices get
    /// the default value.
    pub fn from_entries(nerve: &Nerve, degree: usize, entries: &[(Simplex, T)]) -> Result<Self> {
        let mut c = Self::zeros(nerve, degree);
        for (s, v) in entries {
            let mut key = s.clone();
            key.sort_unstable();
            if key.len() != degree + 1 {
                return Err(Error::UnknownSimplex(s.clone()));
            }
            let i = nerve.index_of(&key).ok_or_else(|| Error::UnknownSimplex(s.clone()))?;
            c.values[i] = *v;
        }
        Ok(c)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, nerve: &Nerve, simplex: &[usize]) -> Option<T> {
        nerve.index_of(simplex).map(|i| self.values[i])
    }

    pub fn map<U, F: Fn(T) -> U>(&self, f: F) -> Cochain<U> {
        Cochain { degree: self.degree, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with<F: Fn(T, T) -> T>(&self, other: &Self, f: F) -> Result<Self> {
        if self.degree != other.degree || self.len() != other.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: other.len() });
        }
        Ok(Cochain {
            degree: self.degree,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }
}

impl<T> Cochain<T> {
    pub(crate) fn from_raw(degree: usize, values: Vec<T>) -> Self {
        Cochain { degree, values }
    }
}

/// Linear functional certifying that a cocycle is not a coboundary.
///
/// `functional` annihilates the image of the incoming coboundary (over `Z/m`,
/// over `Z` when `modulus == 0`, or over `R`) and pairs nontrivially with the
/// cocycle.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Exact { modulus: u64, functional: Vec<i64>, pairing: i64 },
    Real { functional: Vec<f64>, pairing: f64 },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Exact { modulus, functional, pairing } => {
                let ring = if *modulus == 0 { "Z".to_string() } else { format!("Z/{modulus}") };
                write!(f, "over {ring}: functional {functional:?}, pairing {pairing}")
            }
            Certificate::Real { functional, pairing } => {
                write!(f, "over R: functional {functional:?}, pairing {pairing:.12e}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoboundaryOutcome<T> {
    Coboundary(Cochain<T>),
    NonTrivial(Certificate),
}

impl<T> CoboundaryOutcome<T> {
    pub fn is_coboundary(&self) -> bool {
        matches!(self, CoboundaryOutcome::Coboundary(_))
    }

    pub fn primitive(&self) -> Option<&Cochain<T>> {
        match self {
            CoboundaryOutcome::Coboundary(b) => Some(b),
            CoboundaryOutcome::NonTrivial(_) => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            CoboundaryOutcome::Coboundary(_) => None,
            CoboundaryOutcome::NonTrivial(c) => Some(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cohomology {
    Integral { free_rank: usize, torsion: Vec<BigInt> },
    /// Cyclic decomposition of a `Z/n`-module; each factor divides `n`.
    Modular { modulus: u64, factors: Vec<u64> },
    Real { dimension: usize },
}

impl Cohomology {
    pub fn is_trivial(&self) -> bool {
        match self {
            Cohomology::Integral { free_rank, torsion } => *free_rank == 0 && torsion.is_empty(),
            Cohomology::Modular { factors, .. } => factors.is_empty(),
            Cohomology::Real { dimension } => *dimension == 0,
        }
    }

    /// Vector-space dimension when the ring is a field.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Cohomology::Modular { modulus, factors } if is_prime(*modulus) => Some(factors.len()),
            Cohomology::Real { dimension } => Some(*dimension),
            _ => None,
        }
    }
}

impl fmt::Display for Cohomology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return write!(f, "0");
        }
        match self {
            Cohomology::Integral { free_rank, torsion } => {
                let t: Vec<String> = torsion.iter().map(|x| x.to_string()).collect();
                write!(f, "free {free_rank}, torsion [{}]", t.join(", "))
            }
            Cohomology::Modular { modulus, factors } => match self.dimension() {
                Some(d) => write!(f, "dim {d}"),
                None => {
                    let t: Vec<String> = factors.iter().map(|x| x.to_string()).collect();
                    write!(f, "Z/{modulus}-module [{}]", t.join(", "))
                }
            },
            Cohomology::Real { dimension } => write!(f, "dim {dimension}"),
        }
    }
}

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Result of the Bockstein (twisted Dixmier–Douady) map.
#[derive(Debug, Clone, PartialEq)]
pub struct BocksteinClass {
    /// Integer cocycle `δã` one degree up.
    pub cocycle: IntCochain,
    pub outcome: CoboundaryOutcome<i64>,
    /// Order of the class; `Some(1)` when trivial.
    pub order: Option<u64>,
}

impl BocksteinClass {
    pub fn is_trivial(&self) -> bool {
        self.outcome.is_coboundary()
    }
}

/// Abelian coefficients on a nerve twisted by a `Z₂` edge cocycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistedLocalSystem {
    nerve: Nerve,
    coeff: CoefficientGroup,
    eps: Vec<i8>,
}

impl TwistedLocalSystem {
    /// `eps` holds one sign per canonical edge and must be a `Z₂` cocycle.
    pub fn new(nerve: Nerve, coeff: CoefficientGroup, eps: Vec<i8>) -> Result<Self> {
        if eps.len() != nerve.count(1) {
            return Err(Error::LengthMismatch { expected: nerve.count(1), found: eps.len() });
        }
        if let Some(pos) = eps.iter().position(|&e| e != 1 && e != -1) {
            return Err(Error::ShapeMismatch(format!("sign {} on edge {:?}", eps[pos], nerve.simplices(1)[pos])));
        }
        let sys = TwistedLocalSystem { nerve, coeff, eps };
        for t in sys.nerve.simplices(2) {
            if sys.eps(t[0], t[1]) * sys.eps(t[1], t[2]) != sys.eps(t[0], t[2]) {
                return Err(Error::TwistNotCocycle(t.clone()));
            }
        }
        Ok(sys)
    }

    pub fn untwisted(nerve: Nerve, coeff: CoefficientGroup) -> Self {
        let eps = vec![1; nerve.count(1)];
        TwistedLocalSystem { nerve, coeff, eps }
    }

    /// Twist with `ε = −1` exactly on the listed edges.
    pub fn with_twisted_edges(nerve: Nerve, coeff: CoefficientGroup, edges: &[(usize, usize)]) -> Result<Self> {
        let mut eps = vec![1i8; nerve.count(1)];
        for &(i, j) in edges {
            let e = nerve.edge_index(i, j).ok_or_else(|| Error::UnknownSimplex(vec![i, j]))?;
            eps[e] = -1;
        }
        Self::new(nerve, coeff, eps)
    }

    pub fn nerve(&self) -> &Nerve {
        &self.nerve
    }

    pub fn coeff(&self) -> &CoefficientGroup {
        &self.coeff
    }

    pub fn twist(&self) -> &[i8] {
        &self.eps
    }

    /// Same nerve and twist with different coefficients.
    pub fn with_coeff(&self, coeff: CoefficientGroup) -> Self {
        TwistedLocalSystem { nerve: self.nerve.clone(), coeff, eps: self.eps.clone() }
    }

    /// `ε_ij` for an edge in either orientation.
    pub fn eps(&self, i: usize, j: usize) -> i8 {
        self.nerve.edge_index(i, j).map(|e| self.eps[e]).unwrap_or(1)
    }

    pub fn is_untwisted(&self) -> bool {
        self.eps.iter().all(|&e| e == 1)
    }

    /// Sparse entries `(row, col, coefficient)` of `δ: C^k → C^{k+1}` as an
    /// integer matrix; rows index `(k+1)`-simplices.
    pub fn coboundary_entries(&self, k: usize) -> Result<Vec<(usize, usize, i64)>> {
        if k >= MAX_DIM {
            return Err(Error::DegreeOverflow(k));
        }
        let negate = self.coeff.involution == Involution::Negation;
        let mut out = Vec::new();
        for (row, s) in self.nerve.simplices(k + 1).iter().enumerate() {
            for (r, face) in facets(s) {
                let col = self.nerve.index_of(&face).expect("nerve is downward closed");
                let coef = if r == 0 {
                    if negate {
                        self.eps(s[0], s[1]) as i64
                    } else {
                        1
                    }
                } else if r % 2 == 0 {
                    1
                } else {
                    -1
                };
                out.push((row, col, coef));
            }
        }
        Ok(out)
    }

    pub fn coboundary_matrix(&self, k: usize) -> Result<IntMatrix> {
        let entries = self.coboundary_entries(k)?;
        Ok(IntMatrix::from_i64(self.nerve.count(k + 1), self.nerve.count(k), &entries))
    }

    /// Incoming coboundary `C^{k−1} → C^k` (the zero map out of `C^{−1} = 0`).
    fn incoming_matrix(&self, k: usize) -> Result<IntMatrix> {
        if k == 0 {
            Ok(IntMatrix::zeros(self.nerve.count(0), 0))
        } else {
            self.coboundary_matrix(k - 1)
        }
    }

    fn outgoing_matrix(&self, k: usize) -> Result<IntMatrix> {
        if k >= MAX_DIM {
            Ok(IntMatrix::zeros(0, self.nerve.count(k)))
        } else {
            self.coboundary_matrix(k)
        }
    }

    fn check_len<T>(&self, c: &Cochain<T>) -> Result<()> {
        let expected = self.nerve.count(c.degree);
        if c.values.len() != expected {
            return Err(Error::LengthMismatch { expected, found: c.values.len() });
        }
        Ok(())
    }

    /// Twisted coboundary of an integer-valued cochain (for `Z` or `Z/n`).
    pub fn coboundary_int(&self, c: &IntCochain) -> Result<IntCochain> {
        self.check_len(c)?;
        if !self.coeff.kind.is_exact() {
            return Err(Error::UnsupportedCoefficient(format!("integer cochains over {}", self.coeff.kind)));
        }
        let mut out = vec![0i64; self.nerve.count(c.degree + 1)];
        for (row, col, coef) in self.coboundary_entries(c.degree)? {
            out[row] += coef * c.values[col];
        }
        Ok(Cochain::from_raw(c.degree + 1, out.into_iter().map(|v| self.coeff.reduce_int(v)).collect()))
    }

    /// Twisted coboundary of a real or `R/Z`-valued cochain.
    pub fn coboundary_real(&self, c: &RealCochain) -> Result<RealCochain> {
        self.check_len(c)?;
        if self.coeff.kind.is_exact() {
            return Err(Error::UnsupportedCoefficient(format!("real cochains over {}", self.coeff.kind)));
        }
        let mut out = vec![0f64; self.nerve.count(c.degree + 1)];
        for (row, col, coef) in self.coboundary_entries(c.degree)? {
            out[row] += coef as f64 * c.values[col];
        }
        Ok(Cochain::from_raw(c.degree + 1, out.into_iter().map(|v| self.coeff.reduce_real(v)).collect()))
    }

    /// Normalises integer values into the coefficient group.
    pub fn reduce(&self, c: &IntCochain) -> IntCochain {
        c.map(|v| self.coeff.reduce_int(v))
    }

    /// `H^k` of the twisted complex. Integer coefficients report free rank
    /// and torsion; `Z/n` uses the universal coefficient splitting
    /// `H^k(Z)⊗Z/n ⊕ Tor(H^{k+1}(Z), Z/n)`; reals report the dimension.
    pub fn cohomology(&self, k: usize) -> Result<Cohomology> {
        if k > MAX_DIM {
            return Err(Error::DegreeOverflow(k));
        }
        let incoming = smith_normal_form(&self.incoming_matrix(k)?);
        let outgoing = smith_normal_form(&self.outgoing_matrix(k)?);
        let free_rank = self.nerve.count(k) - outgoing.rank() - incoming.rank();
        match self.coeff.kind {
            CoefficientKind::Integers => Ok(Cohomology::Integral { free_rank, torsion: incoming.torsion() }),
            CoefficientKind::IntegersMod(n) => {
                let modulus = BigInt::from(n);
                let mut factors = vec![n; free_rank];
                for t in incoming.torsion().iter().chain(outgoing.torsion().iter()) {
                    let g = t.gcd(&modulus);
                    if !g.is_one() {
                        factors.push(g.to_u64().expect("divides the modulus"));
                    }
                }
                factors.sort_unstable();
                Ok(Cohomology::Modular { modulus: n, factors })
            }
            CoefficientKind::Reals => Ok(Cohomology::Real { dimension: free_rank }),
            CoefficientKind::CircleRmodZ => Err(Error::UnsupportedCoefficient(
                "R/Z (use the Bockstein path)".into(),
            )),
        }
    }

    fn first_nonzero<T: Copy>(&self, c: &Cochain<T>, nonzero: impl Fn(T) -> bool) -> Option<Simplex> {
        c.values
            .iter()
            .position(|&v| nonzero(v))
            .map(|i| self.nerve.simplices(c.degree)[i].clone())
    }

    fn require_int_cocycle(&self, z: &IntCochain) -> Result<()> {
        if z.degree < MAX_DIM {
            let dz = self.coboundary_int(z)?;
            if let Some(s) = self.first_nonzero(&dz, |v| v != 0) {
                return Err(Error::NotACocycle(s));
            }
        }
        Ok(())
    }

    /// Decides whether an integer or `Z/n` cocycle is a coboundary, returning
    /// a primitive `b` with `δb = z` or a certificate.
    pub fn is_coboundary_int(&self, z: &IntCochain) -> Result<CoboundaryOutcome<i64>> {
        self.check_len(z)?;
        self.require_int_cocycle(z)?;
        let smith = smith_normal_form(&self.incoming_matrix(z.degree)?);
        let outcome = match self.coeff.kind {
            CoefficientKind::Integers => solve_integral(&smith, z)?,
            CoefficientKind::IntegersMod(n) => solve_modular(&smith, z, n)?,
            other => return Err(Error::UnsupportedCoefficient(format!("{other} in an exact solve"))),
        };
        if let CoboundaryOutcome::Coboundary(b) = &outcome {
            let db = self.coboundary_int(b)?;
            debug_assert_eq!(db.values, self.reduce(z).values, "primitive does not reproduce the cocycle");
        }
        Ok(outcome)
    }

    /// Real solve of `δb = z` through the integer Smith form; the residual is
    /// checked against the coefficient tolerance.
    pub fn is_coboundary_real(&self, z: &RealCochain) -> Result<CoboundaryOutcome<f64>> {
        self.check_len(z)?;
        if self.coeff.kind != CoefficientKind::Reals {
            return Err(Error::UnsupportedCoefficient(format!("{} in a real solve", self.coeff.kind)));
        }
        let tol = self.coeff.tolerance;
        if z.degree < MAX_DIM {
            let dz = self.coboundary_real(z)?;
            if let Some(s) = self.first_nonzero(&dz, |v: f64| v.abs() > tol) {
                return Err(Error::NotACocycle(s));
            }
        }
        let smith = smith_normal_form(&self.incoming_matrix(z.degree)?);
        let y = smith.p.mul_vec_f64(&z.values);
        let r = smith.rank();
        if let Some(i) = (r..y.len()).max_by(|&a, &b| y[a].abs().total_cmp(&y[b].abs())) {
            if y[i].abs() > tol {
                let functional = smith.p.row(i).iter().map(to_f64).collect();
                return Ok(CoboundaryOutcome::NonTrivial(Certificate::Real { functional, pairing: y[i] }));
            }
        }
        let mut x = vec![0.0; smith.cols];
        for i in 0..r {
            x[i] = y[i] / to_f64(&smith.diagonal[i]);
        }
        let b = smith.q.mul_vec_f64(&x);
        Ok(CoboundaryOutcome::Coboundary(Cochain::from_raw(z.degree.saturating_sub(1), b)))
    }

    /// Order of the class of an exact cocycle, `None` for infinite order.
    pub fn class_order(&self, z: &IntCochain) -> Result<Option<u64>> {
        let first = self.is_coboundary_int(z)?;
        let bound = match (&first, self.coeff.kind) {
            (CoboundaryOutcome::Coboundary(_), _) => return Ok(Some(1)),
            (CoboundaryOutcome::NonTrivial(Certificate::Exact { modulus: 0, .. }), _) => return Ok(None),
            (_, CoefficientKind::IntegersMod(n)) => n,
            _ => {
                let smith = smith_normal_form(&self.incoming_matrix(z.degree)?);
                smith
                    .diagonal
                    .last()
                    .and_then(|d| d.to_u64())
                    .ok_or_else(|| Error::Overflow("torsion exponent".into()))?
            }
        };
        for m in 2..=bound {
            if bound % m != 0 {
                continue;
            }
            let multiple = z.map(|v| v * m as i64);
            if self.is_coboundary_int(&self.reduce(&multiple))?.is_coboundary() {
                return Ok(Some(m));
            }
        }
        Ok(Some(bound))
    }

    /// Twisted Bockstein map `H^k(U(1)_α) → H^{k+1}(Z_α)`.
    ///
    /// Lifts each value to `[0, 1)`, applies the real coboundary and rounds
    /// to the integer cocycle, then decides its class over `Z_α`.
    pub fn bockstein_dd(&self, a: &RealCochain) -> Result<BocksteinClass> {
        self.check_len(a)?;
        if self.coeff.kind != CoefficientKind::CircleRmodZ {
            return Err(Error::UnsupportedCoefficient(format!("{} in the Bockstein map", self.coeff.kind)));
        }
        if a.degree >= MAX_DIM {
            return Err(Error::DegreeOverflow(a.degree));
        }
        let tol = self.coeff.tolerance;
        let real = self.with_coeff(CoefficientGroup::reals(self.coeff.involution).with_tolerance(tol));
        let lifted = a.map(frac);
        let dlift = real.coboundary_real(&lifted)?;
        for (i, &v) in dlift.values.iter().enumerate() {
            if circle_distance(v, 0.0) > tol {
                return Err(Error::NotU1Cocycle(self.nerve.simplices(a.degree + 1)[i].clone()));
            }
        }
        let mut n = Vec::with_capacity(dlift.len());
        for (i, &v) in dlift.values.iter().enumerate() {
            let r = v.round();
            if (v - r).abs() > tol {
                return Err(Error::LiftNotIntegral { simplex: self.nerve.simplices(a.degree + 1)[i].clone(), value: v });
            }
            n.push(r as i64);
        }
        let cocycle = Cochain::from_raw(a.degree + 1, n);
        let integral = self.with_coeff(CoefficientGroup::integers(self.coeff.involution));
        let outcome = integral.is_coboundary_int(&cocycle)?;
        let order = integral.class_order(&cocycle)?;
        Ok(BocksteinClass { cocycle, outcome, order })
    }

    /// Decides triviality of a `U(1)_α` cocycle in two stages: the Bockstein
    /// class must vanish, and the corrected real cocycle `ã − z` must lie in
    /// the integral cocycles plus real coboundaries. Returns `β` with
    /// `δβ ≡ a (mod 1)` when trivial.
    pub fn u1_primitive(&self, a: &RealCochain) -> Result<Option<RealCochain>> {
        let dd = self.bockstein_dd(a)?;
        let Some(z) = dd.outcome.primitive() else { return Ok(None) };
        let tol = self.coeff.tolerance;
        let corrected: Vec<f64> = a.values.iter().zip(&z.values).map(|(&x, &zi)| frac(x) - zi as f64).collect();
        let smith = smith_normal_form(&self.incoming_matrix(a.degree)?);
        let w = smith.p.mul_vec_f64(&corrected);
        let r = smith.rank();
        let lattice_tol = tol.max(1e-7);
        if w[r..].iter().any(|&t| (t - t.round()).abs() > lattice_tol) {
            return Ok(None);
        }
        let mut x = vec![0.0; smith.cols];
        for i in 0..r {
            x[i] = w[i] / to_f64(&smith.diagonal[i]);
        }
        let beta = Cochain::from_raw(a.degree.saturating_sub(1), smith.q.mul_vec_f64(&x).into_iter().map(frac).collect());
        if a.degree > 0 {
            let check = self.coboundary_real(&beta)?;
            for (i, (&u, &v)) in check.values.iter().zip(&a.values).enumerate() {
                if circle_distance(u, v) > lattice_tol {
                    return Err(Error::NotU1Cocycle(self.nerve.simplices(a.degree)[i].clone()));
                }
            }
        }
        Ok(Some(beta))
    }
}

fn bigint_to_i64(x: &BigInt) -> Result<i64> {
    x.to_i64().ok_or_else(|| Error::Overflow(x.to_string()))
}

fn solve_integral(smith: &SmithForm, z: &IntCochain) -> Result<CoboundaryOutcome<i64>> {
    let zb: Vec<BigInt> = z.values.iter().map(|&v| BigInt::from(v)).collect();
    let y = smith.p.mul_vec(&zb);
    let r = smith.rank();
    for (i, yi) in y.iter().enumerate() {
        let blocked = if i < r { !yi.is_multiple_of(&smith.diagonal[i]) } else { !yi.is_zero() };
        if blocked {
            let (modulus, functional, pairing) = if i < r {
                let s = &smith.diagonal[i];
                let f = smith.p.row(i).iter().map(|x| bigint_to_i64(&x.mod_floor(s))).collect::<Result<_>>()?;
                (s.to_u64().ok_or_else(|| Error::Overflow(s.to_string()))?, f, bigint_to_i64(&yi.mod_floor(s))?)
            } else {
                let f = smith.p.row(i).iter().map(bigint_to_i64).collect::<Result<_>>()?;
                (0, f, bigint_to_i64(yi)?)
            };
            return Ok(CoboundaryOutcome::NonTrivial(Certificate::Exact { modulus, functional, pairing }));
        }
    }
    let mut x = vec![BigInt::zero(); smith.cols];
    for i in 0..r {
        x[i] = &y[i] / &smith.diagonal[i];
    }
    let b = smith.q.mul_vec(&x).iter().map(bigint_to_i64).collect::<Result<Vec<_>>>()?;
    Ok(CoboundaryOutcome::Coboundary(Cochain::from_raw(z.degree.saturating_sub(1), b)))
}

fn solve_modular(smith: &SmithForm, z: &IntCochain, n: u64) -> Result<CoboundaryOutcome<i64>> {
    let modulus = BigInt::from(n);
    let zb: Vec<BigInt> = z.values.iter().map(|&v| BigInt::from(v)).collect();
    let y: Vec<BigInt> = smith.p.mul_vec(&zb).iter().map(|v| v.mod_floor(&modulus)).collect();
    let r = smith.rank();
    let reduce_row = |i: usize, scale: &BigInt| -> Result<Vec<i64>> {
        smith.p.row(i).iter().map(|x| bigint_to_i64(&(x * scale).mod_floor(&modulus))).collect()
    };
    let mut x = vec![BigInt::zero(); smith.cols];
    for (i, yi) in y.iter().enumerate() {
        if i < r {
            let s = smith.diagonal[i].mod_floor(&modulus);
            let g = s.gcd(&modulus);
            if !yi.is_multiple_of(&g) {
                let scale = &modulus / &g;
                let functional = reduce_row(i, &scale)?;
                let pairing = bigint_to_i64(&(yi * &scale).mod_floor(&modulus))?;
                return Ok(CoboundaryOutcome::NonTrivial(Certificate::Exact { modulus: n, functional, pairing }));
            }
            let reduced = &modulus / &g;
            if !yi.is_zero() {
                let inv = mod_inverse(&(&s / &g), &reduced).expect("coprime after dividing by the gcd");
                x[i] = ((yi / &g) * inv).mod_floor(&reduced);
            }
        } else if !yi.is_zero() {
            let functional = reduce_row(i, &BigInt::one())?;
            return Ok(CoboundaryOutcome::NonTrivial(Certificate::Exact { modulus: n, functional, pairing: bigint_to_i64(yi)? }));
        }
    }
    let b = smith
        .q
        .mul_vec(&x)
        .iter()
        .map(|v| bigint_to_i64(&v.mod_floor(&modulus)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoboundaryOutcome::Coboundary(Cochain::from_raw(z.degree.saturating_sub(1), b)))
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

impl Certificate {
    /// Re-checks the certificate against the incoming coboundary of `sys` in
    /// the degree of `z`.
    pub fn verify(&self, sys: &TwistedLocalSystem, z: &Cochain<impl Copy + Into<f64>>) -> Result<bool> {
        let d = sys.incoming_matrix(z.degree)?;
        match self {
            Certificate::Exact { modulus, functional, pairing } => {
                let m = *modulus as i128;
                let reduce = |v: i128| if m == 0 { v } else { v.rem_euclid(m) };
                for c in 0..d.cols() {
                    let mut acc = 0i128;
                    for r in 0..d.rows() {
                        acc += functional[r] as i128 * d.get(r, c).to_i128().unwrap_or(0);
                    }
                    if reduce(acc) != 0 {
                        return Ok(false);
                    }
                }
                let pair: i128 = functional.iter().zip(&z.values).map(|(&f, &v)| f as i128 * v.into() as i128).sum();
                Ok(reduce(pair) != 0 && reduce(pair) == reduce(*pairing as i128))
            }
            Certificate::Real { functional, pairing } => {
                let tol = sys.coeff.tolerance.max(1e-9);
                for c in 0..d.cols() {
                    let acc: f64 = (0..d.rows()).map(|r| functional[r] * to_f64(d.get(r, c))).sum();
                    if acc.abs() > tol {
                        return Ok(false);
                    }
                }
                let pair: f64 = functional.iter().zip(&z.values).map(|(&f, &v)| f * v.into()).sum();
                Ok(pair.abs() > tol && (pair - pairing).abs() <= tol * (1.0 + pair.abs()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Involution::{Identity, Negation};

    fn mobius(coeff: CoefficientGroup) -> TwistedLocalSystem {
        TwistedLocalSystem::with_twisted_edges(Nerve::circle(), coeff, &[(0, 2)]).unwrap()
    }

    #[test]
    fn twisted_coboundary_on_circle() {
        let sys = mobius(CoefficientGroup::integers(Negation));
        let b = Cochain::new(sys.nerve(), 0, vec![1, 1, 1]).unwrap();
        let db = sys.coboundary_int(&b).unwrap();
        assert_eq!(db.get(sys.nerve(), &[0, 1]), Some(0));
        assert_eq!(db.get(sys.nerve(), &[1, 2]), Some(0));
        assert_eq!(db.get(sys.nerve(), &[0, 2]), Some(-2));
    }

    #[test]
    fn rejects_non_cocycle_twist() {
        let nerve = Nerve::simplex(2).unwrap();
        let res = TwistedLocalSystem::with_twisted_edges(nerve, CoefficientGroup::integers(Negation), &[(0, 1)]);
        assert!(matches!(res, Err(Error::TwistNotCocycle(_))));
    }

    #[test]
    fn mobius_cohomology() {
        let sys = mobius(CoefficientGroup::integers(Negation));
        assert!(sys.cohomology(0).unwrap().is_trivial());
        assert_eq!(sys.cohomology(1).unwrap(), Cohomology::Integral { free_rank: 0, torsion: vec![BigInt::from(2)] });
        assert_eq!(sys.cohomology(1).unwrap().to_string(), "free 0, torsion [2]");
    }

    #[test]
    fn sphere_cohomology() {
        let sys = TwistedLocalSystem::untwisted(Nerve::boundary_of_simplex(3).unwrap(), CoefficientGroup::integers(Identity));
        let got: Vec<String> = (0..3).map(|k| sys.cohomology(k).unwrap().to_string()).collect();
        assert_eq!(got, ["free 1, torsion []", "0", "free 1, torsion []"]);
    }

    #[test]
    fn rp2_mod2_and_integral() {
        let z2 = TwistedLocalSystem::untwisted(Nerve::rp2_six(), CoefficientGroup::modular(2, Identity).unwrap());
        let dims: Vec<_> = (0..3).map(|k| z2.cohomology(k).unwrap().dimension().unwrap()).collect();
        assert_eq!(dims, [1, 1, 1]);
        let z = z2.with_coeff(CoefficientGroup::integers(Identity));
        assert_eq!(z.cohomology(1).unwrap().to_string(), "0");
        assert_eq!(z.cohomology(2).unwrap().to_string(), "free 0, torsion [2]");
        let r = z2.with_coeff(CoefficientGroup::reals(Identity));
        assert_eq!(r.cohomology(2).unwrap(), Cohomology::Real { dimension: 0 });
    }

    #[test]
    fn composite_modulus_uses_universal_coefficients() {
        // H^1(RP2; Z/4) = Tor(H^2(Z), Z/4) = Z/2 ; H^2 = Z/2 ⊗ Z/4 = Z/2
        let sys = TwistedLocalSystem::untwisted(Nerve::rp2_six(), CoefficientGroup::modular(4, Identity).unwrap());
        assert_eq!(sys.cohomology(1).unwrap(), Cohomology::Modular { modulus: 4, factors: vec![2] });
        assert_eq!(sys.cohomology(2).unwrap().to_string(), "Z/4-module [2]");
    }

    #[test]
    fn circle_rmodz_cohomology_unsupported() {
        let sys = TwistedLocalSystem::untwisted(Nerve::circle(), CoefficientGroup::circle(Identity));
        assert!(matches!(sys.cohomology(1), Err(Error::UnsupportedCoefficient(_))));
    }

    #[test]
    fn mobius_generator_and_its_double() {
        let sys = mobius(CoefficientGroup::integers(Negation));
        let z = Cochain::from_entries(sys.nerve(), 1, &[(vec![0, 1], 1)]).unwrap();
        let outcome = sys.is_coboundary_int(&z).unwrap();
        let cert = outcome.certificate().expect("generator is nontrivial");
        assert!(cert.verify(&sys, &z.map(|v| v as f64)).unwrap());
        assert_eq!(sys.class_order(&z).unwrap(), Some(2));
        let twice = z.map(|v| 2 * v);
        let b = sys.is_coboundary_int(&twice).unwrap();
        let prim = b.primitive().unwrap();
        assert_eq!(sys.coboundary_int(prim).unwrap(), twice);
    }

    #[test]
    fn zero_cochain_has_zero_primitive() {
        let sys = TwistedLocalSystem::untwisted(Nerve::rp2_six(), CoefficientGroup::modular(2, Identity).unwrap());
        let z = IntCochain::zeros(sys.nerve(), 2);
        let b = sys.is_coboundary_int(&z).unwrap();
        assert!(b.primitive().unwrap().values().iter().all(|&v| v == 0));
    }

    #[test]
    fn non_cocycle_rejected() {
        let sys = TwistedLocalSystem::untwisted(Nerve::boundary_of_simplex(3).unwrap(), CoefficientGroup::integers(Identity));
        let z = Cochain::from_entries(sys.nerve(), 1, &[(vec![0, 1], 1)]).unwrap();
        assert!(matches!(sys.is_coboundary_int(&z), Err(Error::NotACocycle(_))));
    }

    #[test]
    fn real_solve_and_free_class() {
        let sys = TwistedLocalSystem::untwisted(Nerve::circle(), CoefficientGroup::reals(Identity));
        let b = Cochain::new(sys.nerve(), 0, vec![0.3, -1.25, 2.0]).unwrap();
        let z = sys.coboundary_real(&b).unwrap();
        let prim = sys.is_coboundary_real(&z).unwrap();
        let back = sys.coboundary_real(prim.primitive().unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(z.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        let loop_class = Cochain::from_entries(sys.nerve(), 1, &[(vec![0, 1], 0.5)]).unwrap();
        let out = sys.is_coboundary_real(&loop_class).unwrap();
        assert!(out.certificate().unwrap().verify(&sys, &loop_class).unwrap());
    }

    #[test]
    fn bockstein_of_coboundary_vanishes() {
        let sys = TwistedLocalSystem::untwisted(Nerve::boundary_of_simplex(3).unwrap(), CoefficientGroup::circle(Identity));
        let b = Cochain::new(sys.nerve(), 1, vec![0.1, 0.7, 0.95, 0.4, 0.05, 0.66]).unwrap();
        let a = sys.coboundary_real(&b).unwrap();
        let dd = sys.bockstein_dd(&a).unwrap();
        assert!(dd.is_trivial());
        assert_eq!(dd.order, Some(1));
        let beta = sys.u1_primitive(&a).unwrap().expect("coboundary is trivial");
        let again = sys.coboundary_real(&beta).unwrap();
        for (x, y) in again.values().iter().zip(a.values()) {
            assert!(circle_distance(*x, *y) < 1e-9);
        }
    }

    #[test]
    fn non_u1_cocycle_rejected() {
        let sys = TwistedLocalSystem::untwisted(Nerve::simplex(3).unwrap(), CoefficientGroup::circle(Identity));
        let a = Cochain::from_entries(sys.nerve(), 2, &[(vec![0, 1, 2], 0.25)]).unwrap();
        assert!(matches!(sys.bockstein_dd(&a), Err(Error::NotU1Cocycle(_))));
    }

    #[test]
    fn u1_class_of_free_generator_is_nontrivial() {
        // on the circle, a = 0.5 on one edge is a U(1) 1-cocycle with zero
        // Bockstein whose class is nontrivial (H^1(S^1;U(1)) = U(1))
        let sys = TwistedLocalSystem::untwisted(Nerve::circle(), CoefficientGroup::circle(Identity));
        let a = Cochain::from_entries(sys.nerve(), 1, &[(vec![0, 1], 0.5)]).unwrap();
        assert!(sys.bockstein_dd(&a).unwrap().is_trivial());
        assert!(sys.u1_primitive(&a).unwrap().is_none());
        let int = Cochain::from_entries(sys.nerve(), 1, &[(vec![0, 1], 0.0)]).unwrap();
        assert!(sys.u1_primitive(&int).unwrap().is_some());
    }
}
