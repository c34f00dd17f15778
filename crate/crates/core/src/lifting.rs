//! Twisted non-abelian transition data and the lifting obstruction.
//!
//! Transition data `h_ij = (g_ij, ε_ij) ∈ G ⋊_σ Z₂` lives on ascending edges;
//! the descending value is the semidirect inverse. Given a central extension
//! `A → Ĝ → G` and lifts `ĝ_ij`, the obstruction
//!
//! ```text
//! a_ijk = ĝ_ij · σ̂^{ε_ij}(ĝ_jk) · ĝ_ik⁻¹ ∈ A
//! ```
//!
//! is a twisted 2-cocycle with values in `A`, written additively in the
//! kernel coordinates of the extension.

use crate::cech::{Certificate, CoboundaryOutcome, IntCochain, RealCochain, TwistedLocalSystem};
use crate::coeffs::{semidirect_inv, semidirect_mul, Automorphism, CentralExtension, CoefficientGroup, FiniteGroup, SemidirectElement};
use crate::error::{Error, Result};
use crate::nerve::{Nerve, Simplex};
use crate::{CMatrix, C64};

/// Non-abelian transition data twisted by a `Z₂` edge cocycle.
#[derive(Debug, Clone)]
pub struct TransitionData {
    nerve: Nerve,
    group: FiniteGroup,
    sigma: Automorphism,
    g: Vec<usize>,
    eps: Vec<i8>,
}

/// First triangle on which a cocycle identity fails, with both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleFailure {
    pub simplex: Simplex,
    pub lhs: SemidirectElement,
    pub rhs: SemidirectElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocycleReport {
    pub triangles: usize,
    pub failure: Option<TriangleFailure>,
}

impl CocycleReport {
    pub fn holds(&self) -> bool {
        self.failure.is_none()
    }
}

impl TransitionData {
    pub fn new(nerve: Nerve, group: FiniteGroup, sigma: Automorphism, g: Vec<usize>, eps: Vec<i8>) -> Result<Self> {
        let edges = nerve.count(1);
        if g.len() != edges {
            return Err(Error::LengthMismatch { expected: edges, found: g.len() });
        }
        if eps.len() != edges {
            return Err(Error::LengthMismatch { expected: edges, found: eps.len() });
        }
        if let Some(&x) = g.iter().find(|&&x| !group.contains(x)) {
            return Err(Error::InvalidTransition(format!("{x} is not a group element")));
        }
        if eps.iter().any(|&e| e != 1 && e != -1) {
            return Err(Error::InvalidTransition("signs must be ±1".into()));
        }
        if sigma.as_slice().len() != group.order() || !sigma.is_involution() {
            return Err(Error::InvalidAutomorphism("twist must be an involution of the structure group".into()));
        }
        Ok(TransitionData { nerve, group, sigma, g, eps })
    }

    /// All `g_ij = e`, `ε_ij = +1`.
    pub fn trivial(nerve: Nerve, group: FiniteGroup, sigma: Automorphism) -> Self {
        let n = nerve.count(1);
        let e = group.identity();
        TransitionData { nerve, group, sigma, g: vec![e; n], eps: vec![1; n] }
    }

    pub fn nerve(&self) -> &Nerve {
        &self.nerve
    }

    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }

    pub fn sigma(&self) -> &Automorphism {
        &self.sigma
    }

    pub fn values(&self) -> &[usize] {
        &self.g
    }

    pub fn signs(&self) -> &[i8] {
        &self.eps
    }

    pub fn set(&mut self, edge: usize, g: usize, eps: i8) {
        self.g[edge] = g;
        self.eps[edge] = eps;
    }

    /// `h_ij` for an edge in either orientation.
    pub fn h(&self, i: usize, j: usize) -> Option<SemidirectElement> {
        let e = self.nerve.edge_index(i, j)?;
        let up = SemidirectElement::new(self.g[e], self.eps[e]);
        Some(if i < j { up } else { semidirect_inv(&self.group, &self.sigma, up) })
    }

    /// Checks `ε_ij ε_jk = ε_ik` and `g_ij σ^{ε_ij}(g_jk) = g_ik` on every
    /// triangle, i.e. `h_ij h_jk = h_ik` in the semidirect product.
    pub fn check_twisted_cocycle(&self) -> CocycleReport {
        let tris = self.nerve.simplices(2);
        let failure = tris.iter().find_map(|t| {
            let (i, j, k) = (t[0], t[1], t[2]);
            let lhs = semidirect_mul(&self.group, &self.sigma, self.h(i, j)?, self.h(j, k)?);
            let rhs = self.h(i, k)?;
            (lhs != rhs).then(|| TriangleFailure { simplex: t.clone(), lhs, rhs })
        });
        CocycleReport { triangles: tris.len(), failure }
    }

    /// The twisted local system carried by the signs, with given coefficients.
    pub fn local_system(&self, coeff: CoefficientGroup) -> Result<TwistedLocalSystem> {
        TwistedLocalSystem::new(self.nerve.clone(), coeff, self.eps.clone())
    }
}

/// Chosen lifts `ĝ_ij ∈ Ĝ` on ascending edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftChoice {
    pub lifts: Vec<usize>,
}

impl LiftChoice {
    pub fn new(lifts: Vec<usize>) -> Self {
        LiftChoice { lifts }
    }

    /// Lifts through the set-theoretic section of the extension.
    pub fn via_section(td: &TransitionData, ext: &CentralExtension) -> Self {
        LiftChoice { lifts: td.g.iter().map(|&g| ext.section[g]).collect() }
    }

    /// Multiplies each lift by the kernel element with coordinate `b_ij`.
    pub fn shifted(&self, ext: &CentralExtension, b: &IntCochain) -> Result<Self> {
        if b.len() != self.lifts.len() {
            return Err(Error::LengthMismatch { expected: self.lifts.len(), found: b.len() });
        }
        let lifts = self
            .lifts
            .iter()
            .zip(b.values())
            .map(|(&h, &v)| ext.hat.mul(ext.kernel_element(v), h))
            .collect();
        Ok(LiftChoice { lifts })
    }
}

/// Obstruction cocycle together with the local system it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstruction {
    pub system: TwistedLocalSystem,
    pub cochain: IntCochain,
    /// Whether the rearranged quadruple-overlap identity
    /// `a_jkl a_ijl⁻¹ a_ijk (ε_ij·a_ikl)⁻¹ = 1` also holds everywhere.
    pub alternate_form_holds: bool,
}

impl Obstruction {
    pub fn class(&self) -> Result<CoboundaryOutcome<i64>> {
        self.system.is_coboundary_int(&self.cochain)
    }

    pub fn is_identity(&self) -> bool {
        self.cochain.values().iter().all(|&v| v == 0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trivialization {
    /// Corrected lifts satisfying the strict twisted cocycle condition.
    Lifts { lifts: LiftChoice, correction: IntCochain },
    NonTrivial(Certificate),
}

fn check_compatible(td: &TransitionData, ext: &CentralExtension) -> Result<()> {
    if td.group.table() != ext.base.table() {
        return Err(Error::GroupMismatch("transition group differs from the extension quotient".into()));
    }
    if td.sigma != ext.base_sigma {
        return Err(Error::GroupMismatch("twist differs from the extension's quotient involution".into()));
    }
    Ok(())
}

fn hat_h(ext: &CentralExtension, lifts: &LiftChoice, nerve: &Nerve, eps: &[i8], i: usize, j: usize) -> SemidirectElement {
    let e = nerve.edge_index(i, j).expect("edge in nerve");
    let up = SemidirectElement::new(lifts.lifts[e], eps[e]);
    if i < j {
        up
    } else {
        semidirect_inv(&ext.hat, &ext.hat_sigma, up)
    }
}

/// First triangle where `ĝ_ij σ̂^{ε_ij}(ĝ_jk) ≠ ĝ_ik`, if any.
pub fn strict_cocycle_failure(td: &TransitionData, ext: &CentralExtension, lifts: &LiftChoice) -> Option<TriangleFailure> {
    td.nerve.simplices(2).iter().find_map(|t| {
        let h = |a, b| hat_h(ext, lifts, &td.nerve, &td.eps, a, b);
        let lhs = semidirect_mul(&ext.hat, &ext.hat_sigma, h(t[0], t[1]), h(t[1], t[2]));
        let rhs = h(t[0], t[2]);
        (lhs != rhs).then(|| TriangleFailure { simplex: t.clone(), lhs, rhs })
    })
}

/// Computes the lifting obstruction and checks the twisted 2-cocycle
/// identity on every tetrahedron, both in kernel coordinates and in `Ĝ`.
pub fn obstruction(td: &TransitionData, ext: &CentralExtension, lifts: &LiftChoice) -> Result<Obstruction> {
    check_compatible(td, ext)?;
    if let Some(f) = td.check_twisted_cocycle().failure {
        return Err(Error::NotTwistedCocycle(f.simplex));
    }
    if lifts.lifts.len() != td.g.len() {
        return Err(Error::LengthMismatch { expected: td.g.len(), found: lifts.lifts.len() });
    }
    for (e, (&h, &g)) in lifts.lifts.iter().zip(&td.g).enumerate() {
        if h >= ext.hat.order() || ext.projection[h] != g {
            let found = ext.projection.get(h).copied().unwrap_or(usize::MAX);
            return Err(Error::LiftMismatch { edge: td.nerve.simplices(1)[e].clone(), expected: g, found });
        }
    }
    let hat = &ext.hat;
    let sig = &ext.hat_sigma;
    let nerve = &td.nerve;
    let edge = |i: usize, j: usize| nerve.edge_index(i, j).expect("edge in nerve");
    let tris = nerve.simplices(2);
    let mut elements = Vec::with_capacity(tris.len());
    let mut values = Vec::with_capacity(tris.len());
    for t in tris {
        let (ij, jk, ik) = (edge(t[0], t[1]), edge(t[1], t[2]), edge(t[0], t[2]));
        let g = &lifts.lifts;
        let x = hat.mul(hat.mul(g[ij], sig.power(td.eps[ij], g[jk])), hat.inv(g[ik]));
        let v = ext.kernel_value(x).ok_or_else(|| Error::ValueNotInKernel(t.clone()))?;
        elements.push(x);
        values.push(v);
    }
    let system = td.local_system(ext.kernel_coeff)?;
    let cochain = IntCochain::new(nerve, 2, values)?;

    let mut alternate_form_holds = true;
    if nerve.count(3) > 0 {
        let da = system.coboundary_int(&cochain)?;
        if let Some(pos) = da.values().iter().position(|&v| v != 0) {
            return Err(Error::CocycleIdentityViolated(nerve.simplices(3)[pos].clone()));
        }
        let a = |s: [usize; 3]| elements[nerve.index_of(&s).expect("face in nerve")];
        for q in nerve.simplices(3) {
            let (i, j, k, l) = (q[0], q[1], q[2], q[3]);
            let eps_ij = td.eps[edge(i, j)];
            let lhs = hat.mul(a([i, j, k]), a([i, k, l]));
            let rhs = hat.mul(sig.power(eps_ij, a([j, k, l])), a([i, j, l]));
            if lhs != rhs {
                return Err(Error::CocycleIdentityViolated(q.clone()));
            }
            let alt = [a([j, k, l]), hat.inv(a([i, j, l])), a([i, j, k]), hat.inv(sig.power(eps_ij, a([i, k, l])))]
                .into_iter()
                .fold(hat.identity(), |acc, x| hat.mul(acc, x));
            alternate_form_holds &= alt == hat.identity();
        }
    }
    Ok(Obstruction { system, cochain, alternate_form_holds })
}

/// `a′ = a + δb`: the obstruction after multiplying the lifts by `b`.
pub fn change_lifts(a: &Obstruction, b: &IntCochain) -> Result<Obstruction> {
    if b.degree() != 1 {
        return Err(Error::ShapeMismatch(format!("lift change must be a 1-cochain, got degree {}", b.degree())));
    }
    let db = a.system.coboundary_int(&a.system.reduce(b))?;
    let cochain = a.cochain.zip_with(&db, |x, y| a.system.coeff().reduce_int(x + y))?;
    Ok(Obstruction { system: a.system.clone(), cochain, alternate_form_holds: a.alternate_form_holds })
}

/// Corrects the lifts by `b = −p` where `δp = a`, making them a strict
/// twisted cocycle in `Ĝ`; otherwise returns the nontriviality certificate.
pub fn trivialize(td: &TransitionData, ext: &CentralExtension, lifts: &LiftChoice, a: &Obstruction) -> Result<Trivialization> {
    match a.class()? {
        CoboundaryOutcome::NonTrivial(cert) => Ok(Trivialization::NonTrivial(cert)),
        CoboundaryOutcome::Coboundary(p) => {
            let correction = a.system.reduce(&p.map(|v| -v));
            let corrected = lifts.shifted(ext, &correction)?;
            if let Some(f) = strict_cocycle_failure(td, ext, &corrected) {
                return Err(Error::NotTwistedCocycle(f.simplex));
            }
            Ok(Trivialization::Lifts { lifts: corrected, correction })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GerbeModuleReport {
    pub max_deviation: f64,
    pub worst: Option<Simplex>,
    pub tolerance: f64,
}

impl GerbeModuleReport {
    pub fn passes(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Checks `φ_ij φ_jk = e^{2πi a_ijk} φ_ik` on every triangle for matrices on
/// ascending edges and a `U(1)` 2-cochain written in `R/Z`.
pub fn check_gerbe_module(nerve: &Nerve, phi: &[CMatrix], a: &RealCochain, tolerance: f64) -> Result<GerbeModuleReport> {
    if phi.len() != nerve.count(1) {
        return Err(Error::ShapeMismatch(format!("{} matrices for {} edges", phi.len(), nerve.count(1))));
    }
    if a.degree() != 2 || a.len() != nerve.count(2) {
        return Err(Error::ShapeMismatch("gerbe cochain must be a 2-cochain on the nerve".into()));
    }
    let n = phi.first().map(|m| m.nrows()).unwrap_or(0);
    if phi.iter().any(|m| m.nrows() != n || m.ncols() != n) {
        return Err(Error::ShapeMismatch("module matrices must be square of equal size".into()));
    }
    let edge = |i: usize, j: usize| nerve.edge_index(i, j).expect("edge in nerve");
    let mut max_deviation = 0.0f64;
    let mut worst = None;
    for (t, &v) in nerve.simplices(2).iter().zip(a.values()) {
        let lhs = &phi[edge(t[0], t[1])] * &phi[edge(t[1], t[2])];
        let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * v);
        let rhs = &phi[edge(t[0], t[2])] * phase;
        let dev = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > max_deviation {
            max_deviation = dev;
            worst = Some(t.clone());
        }
    }
    Ok(GerbeModuleReport { max_deviation, worst, tolerance })
}

/// Rank-one module `φ_ij = e^{2πi β_ij}` over an untwisted `U(1)` gerbe whose
/// class vanishes; `None` when no scalar module exists.
pub fn rank_one_module(sys: &TwistedLocalSystem, a: &RealCochain) -> Result<Option<Vec<CMatrix>>> {
    if !sys.is_untwisted() {
        return Err(Error::UnsupportedCoefficient("scalar modules over a twisted gerbe".into()));
    }
    let Some(beta) = sys.u1_primitive(a)? else { return Ok(None) };
    Ok(Some(
        beta.values()
            .iter()
            .map(|&b| CMatrix::from_element(1, 1, C64::from_polar(1.0, 2.0 * std::f64::consts::PI * b)))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Involution;

    fn z2() -> FiniteGroup {
        FiniteGroup::cyclic(2).unwrap()
    }

    /// Generator of H¹(RP²; Z₂) found by the Čech solver: any cocycle that is
    /// not a coboundary.
    fn rp2_generator() -> Vec<usize> {
        let sys = TwistedLocalSystem::untwisted(Nerve::rp2_six(), CoefficientGroup::modular(2, Involution::Identity).unwrap());
        let n = sys.nerve().count(1);
        for mask in 1u32..(1 << n) {
            let c = IntCochain::new(sys.nerve(), 1, (0..n).map(|e| ((mask >> e) & 1) as i64).collect()).unwrap();
            if sys.coboundary_int(&c).unwrap().values().iter().all(|&v| v == 0)
                && !sys.is_coboundary_int(&c).unwrap().is_coboundary()
            {
                return c.values().iter().map(|&v| v as usize).collect();
            }
        }
        unreachable!("H^1(RP2; Z2) is nonzero")
    }

    #[test]
    fn trivial_data_passes() {
        let td = TransitionData::trivial(Nerve::rp2_six(), FiniteGroup::quaternion(), Automorphism::identity(&FiniteGroup::quaternion()));
        assert!(td.check_twisted_cocycle().holds());
    }

    #[test]
    fn rp2_generator_cocycle_and_perturbation() {
        let nerve = Nerve::rp2_six();
        let g = rp2_generator();
        let mut td = TransitionData::new(nerve, z2(), Automorphism::identity(&z2()), g, vec![1; 15]).unwrap();
        assert!(td.check_twisted_cocycle().holds());
        let old = td.values()[0];
        td.set(0, 1 - old, 1);
        let f = td.check_twisted_cocycle().failure.expect("perturbation is detected");
        assert!(f.simplex.starts_with(&[0, 1]) || f.simplex.contains(&0));
        assert_ne!(f.lhs, f.rhs);
    }

    #[test]
    fn rp2_obstruction_is_nontrivial() {
        let ext = CentralExtension::cyclic(2, 2, Involution::Identity).unwrap();
        ext.verify().unwrap();
        let td = TransitionData::new(Nerve::rp2_six(), z2(), Automorphism::identity(&z2()), rp2_generator(), vec![1; 15]).unwrap();
        let lifts = LiftChoice::via_section(&td, &ext);
        let a = obstruction(&td, &ext, &lifts).unwrap();
        assert!(!a.is_identity());
        match trivialize(&td, &ext, &lifts, &a).unwrap() {
            Trivialization::NonTrivial(cert) => assert!(cert.verify(&a.system, &a.cochain.map(|v| v as f64)).unwrap()),
            other => panic!("expected certificate, got {other:?}"),
        }
    }

    #[test]
    fn lift_mismatch_is_reported() {
        let ext = CentralExtension::cyclic(2, 2, Involution::Identity).unwrap();
        let td = TransitionData::trivial(Nerve::circle(), z2(), Automorphism::identity(&z2()));
        let bad = LiftChoice::new(vec![1, 0, 0]);
        assert!(matches!(obstruction(&td, &ext, &bad), Err(Error::LiftMismatch { .. })));
    }

    #[test]
    fn homomorphic_section_gives_identity() {
        // Z3 → Z6 → Z2 splits; the section 0 ↦ 0, 1 ↦ 3 is a homomorphism
        let hat = FiniteGroup::cyclic(6).unwrap();
        let ext = CentralExtension::new(
            z2(),
            Automorphism::identity(&z2()),
            hat.clone(),
            Automorphism::identity(&hat),
            (0..6).map(|x| x % 2).collect(),
            vec![0, 3],
            &[(0, 0), (2, 1), (4, 2)],
            CoefficientGroup::modular(3, Involution::Identity).unwrap(),
        )
        .unwrap();
        ext.verify().unwrap();
        assert!(ext.section_is_homomorphism());
        let td = TransitionData::new(Nerve::rp2_six(), z2(), Automorphism::identity(&z2()), rp2_generator(), vec![1; 15]).unwrap();
        let a = obstruction(&td, &ext, &LiftChoice::via_section(&td, &ext)).unwrap();
        assert!(a.is_identity());
    }

    #[test]
    fn gerbe_module_detects_rescaling() {
        let nerve = Nerve::simplex(2).unwrap();
        let phase = |t: f64| CMatrix::from_element(1, 1, C64::from_polar(1.0, t));
        let phi = vec![phase(0.3), phase(0.5), phase(0.2)];
        let a = RealCochain::zeros(&nerve, 2);
        assert!(check_gerbe_module(&nerve, &phi, &a, 1e-9).unwrap().passes());
        let mut bent = phi.clone();
        bent[0] = phase(0.3 + 2.0 * std::f64::consts::PI * 0.25);
        let report = check_gerbe_module(&nerve, &bent, &a, 1e-9).unwrap();
        assert!(!report.passes());
        assert_eq!(report.worst, Some(vec![0, 1, 2]));
        let forced = RealCochain::new(&nerve, 2, vec![0.25]).unwrap();
        assert!(check_gerbe_module(&nerve, &bent, &forced, 1e-9).unwrap().passes());
    }

    #[test]
    fn gerbe_module_shape_errors() {
        let nerve = Nerve::simplex(2).unwrap();
        let a = RealCochain::zeros(&nerve, 2);
        let phi = vec![CMatrix::identity(2, 2), CMatrix::identity(1, 1), CMatrix::identity(2, 2)];
        assert!(matches!(check_gerbe_module(&nerve, &phi, &a, 1e-9), Err(Error::ShapeMismatch(_))));
    }
}
