//! Coefficient groups, finite groups, `Z₂`-actions, semidirect products and
//! central extension data.

use std::fmt;

use crate::error::{Error, Result};

/// Default tolerance for real and circle-valued coefficients.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientKind {
    Integers,
    IntegersMod(u64),
    Reals,
    /// `U(1)` written additively as `R/Z`.
    CircleRmodZ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Involution {
    Identity,
    Negation,
}

/// Abelian coefficient group together with the involution through which the
/// nontrivial element of `Z₂` acts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientGroup {
    pub kind: CoefficientKind,
    pub involution: Involution,
    pub tolerance: f64,
}

impl CoefficientGroup {
    pub fn new(kind: CoefficientKind, involution: Involution) -> Result<Self> {
        if let CoefficientKind::IntegersMod(n) = kind {
            if n < 2 {
                return Err(Error::InvalidGroup(format!("Z/{n} is not a valid modulus")));
            }
        }
        let tolerance = if kind.is_exact() { 0.0 } else { DEFAULT_TOLERANCE };
        Ok(CoefficientGroup { kind, involution, tolerance })
    }

    pub fn integers(involution: Involution) -> Self {
        Self::new(CoefficientKind::Integers, involution).unwrap()
    }

    pub fn modular(n: u64, involution: Involution) -> Result<Self> {
        Self::new(CoefficientKind::IntegersMod(n), involution)
    }

    pub fn reals(involution: Involution) -> Self {
        Self::new(CoefficientKind::Reals, involution).unwrap()
    }

    pub fn circle(involution: Involution) -> Self {
        Self::new(CoefficientKind::CircleRmodZ, involution).unwrap()
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        if !self.kind.is_exact() {
            self.tolerance = tolerance;
        }
        self
    }

    /// Action of a sign on an integer value, reduced into the group.
    pub fn act_int(&self, eps: i8, v: i64) -> i64 {
        let w = if eps < 0 && self.involution == Involution::Negation { -v } else { v };
        self.reduce_int(w)
    }

    pub fn act_real(&self, eps: i8, v: f64) -> f64 {
        let w = if eps < 0 && self.involution == Involution::Negation { -v } else { v };
        self.reduce_real(w)
    }

    pub fn reduce_int(&self, v: i64) -> i64 {
        match self.kind {
            CoefficientKind::IntegersMod(n) => v.rem_euclid(n as i64),
            _ => v,
        }
    }

    pub fn reduce_real(&self, v: f64) -> f64 {
        match self.kind {
            CoefficientKind::CircleRmodZ => frac(v),
            _ => v,
        }
    }

    /// Equality in the group, modulo 1 with tolerance for `R/Z`.
    pub fn real_eq(&self, a: f64, b: f64) -> bool {
        match self.kind {
            CoefficientKind::CircleRmodZ => circle_distance(a, b) <= self.tolerance,
            _ => (a - b).abs() <= self.tolerance,
        }
    }
}

impl CoefficientKind {
    pub fn is_exact(&self) -> bool {
        matches!(self, CoefficientKind::Integers | CoefficientKind::IntegersMod(_))
    }
}

impl fmt::Display for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientKind::Integers => write!(f, "Z"),
            CoefficientKind::IntegersMod(n) => write!(f, "Z/{n}"),
            CoefficientKind::Reals => write!(f, "R"),
            CoefficientKind::CircleRmodZ => write!(f, "R/Z"),
        }
    }
}

/// Representative of `x` modulo 1 in `[0, 1)`.
pub fn frac(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance between two points of `R/Z`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = frac(a - b);
    d.min(1.0 - d)
}

/// Finite group stored as a multiplication table on `0..order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    identity: usize,
}

impl FiniteGroup {
    /// Validates the group axioms (closure, associativity, identity, inverses).
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::InvalidGroup("empty table".into()));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::InvalidGroup("table is not square over 0..order".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = vec![0; n];
        for x in 0..n {
            inverse[x] = (0..n)
                .find(|&y| table[x][y] == identity && table[y][x] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {x} has no inverse")))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::InvalidGroup(format!("not associative at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(FiniteGroup { table, inverse, identity })
    }

    /// Cyclic group `Z/n` in additive labelling.
    pub fn cyclic(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGroup("cyclic group of order 0".into()));
        }
        Self::from_table((0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect())
    }

    /// Quaternion group with elements `±1, ±i, ±j, ±k` labelled
    /// `0:1 1:-1 2:i 3:-i 4:j 5:-j 6:k 7:-k`.
    pub fn quaternion() -> Self {
        // unit index u in {0:1,1:i,2:j,3:k}, sign s; label = 2u + s
        let mul_units = |a: usize, b: usize| -> (usize, bool) {
            match (a, b) {
                (0, x) | (x, 0) => (x, false),
                (x, y) if x == y => (0, true),
                (1, 2) => (3, false),
                (2, 3) => (1, false),
                (3, 1) => (2, false),
                (2, 1) => (3, true),
                (3, 2) => (1, true),
                (1, 3) => (2, true),
                _ => unreachable!(),
            }
        };
        let table = (0..8)
            .map(|x| {
                (0..8)
                    .map(|y| {
                        let (u, neg) = mul_units(x / 2, y / 2);
                        let sign = (x % 2 == 1) ^ (y % 2 == 1) ^ neg;
                        2 * u + sign as usize
                    })
                    .collect()
            })
            .collect();
        Self::from_table(table).expect("quaternion table")
    }

    /// Direct product with labelling `a * other.order() + b`.
    pub fn direct_product(&self, other: &FiniteGroup) -> Self {
        let m = other.order();
        let n = self.order() * m;
        let table = (0..n)
            .map(|x| (0..n).map(|y| self.mul(x / m, y / m) * m + other.mul(x % m, y % m)).collect())
            .collect();
        Self::from_table(table).expect("product of groups is a group")
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn commutes(&self, a: usize, b: usize) -> bool {
        self.mul(a, b) == self.mul(b, a)
    }

    pub fn contains(&self, a: usize) -> bool {
        a < self.order()
    }
}

/// Group automorphism given by its permutation of elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automorphism {
    map: Vec<usize>,
}

impl Automorphism {
    pub fn new(group: &FiniteGroup, map: Vec<usize>) -> Result<Self> {
        let n = group.order();
        if map.len() != n {
            return Err(Error::InvalidAutomorphism(format!("expected {n} images, got {}", map.len())));
        }
        let mut seen = vec![false; n];
        for &x in &map {
            if x >= n || seen[x] {
                return Err(Error::InvalidAutomorphism("not a permutation".into()));
            }
            seen[x] = true;
        }
        for a in 0..n {
            for b in 0..n {
                if map[group.mul(a, b)] != group.mul(map[a], map[b]) {
                    return Err(Error::InvalidAutomorphism(format!("does not preserve {a}*{b}")));
                }
            }
        }
        Ok(Automorphism { map })
    }

    pub fn identity(group: &FiniteGroup) -> Self {
        Automorphism { map: (0..group.order()).collect() }
    }

    /// Inversion `x ↦ x⁻¹`, an automorphism only for abelian groups.
    pub fn inversion(group: &FiniteGroup) -> Result<Self> {
        Self::new(group, (0..group.order()).map(|x| group.inv(x)).collect())
    }

    /// Validated involution (`σ∘σ = id`).
    pub fn involution(group: &FiniteGroup, map: Vec<usize>) -> Result<Self> {
        let a = Self::new(group, map)?;
        if !a.is_involution() {
            return Err(Error::InvalidAutomorphism("does not square to the identity".into()));
        }
        Ok(a)
    }

    pub fn apply(&self, x: usize) -> usize {
        self.map[x]
    }

    /// `σ^ε`: identity for `ε = +1`, `σ` for `ε = −1`.
    pub fn power(&self, eps: i8, x: usize) -> usize {
        if eps < 0 {
            self.map[x]
        } else {
            x
        }
    }

    pub fn is_involution(&self) -> bool {
        (0..self.map.len()).all(|x| self.map[self.map[x]] == x)
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &x)| i == x)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }
}

/// Element `(g, ε)` of `G ⋊_σ Z₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SemidirectElement {
    pub g: usize,
    pub eps: i8,
}

impl SemidirectElement {
    pub fn new(g: usize, eps: i8) -> Self {
        debug_assert!(eps == 1 || eps == -1);
        SemidirectElement { g, eps }
    }

    pub fn identity(group: &FiniteGroup) -> Self {
        SemidirectElement { g: group.identity(), eps: 1 }
    }
}

/// `(g, ε)(g', ε') = (g σ^ε(g'), εε')`.
pub fn semidirect_mul(
    group: &FiniteGroup,
    sigma: &Automorphism,
    x: SemidirectElement,
    y: SemidirectElement,
) -> SemidirectElement {
    SemidirectElement { g: group.mul(x.g, sigma.power(x.eps, y.g)), eps: x.eps * y.eps }
}

/// `(g, ε)⁻¹ = (σ^ε(g⁻¹), ε)`.
pub fn semidirect_inv(group: &FiniteGroup, sigma: &Automorphism, x: SemidirectElement) -> SemidirectElement {
    SemidirectElement { g: sigma.power(x.eps, group.inv(x.g)), eps: x.eps }
}

/// Multiplication table of `G ⋊_σ Z₂`, labelling `(g, +1) ↦ g` and
/// `(g, −1) ↦ g + |G|`.
pub fn semidirect_group(group: &FiniteGroup, sigma: &Automorphism) -> Result<FiniteGroup> {
    let n = group.order();
    let decode = |x: usize| SemidirectElement { g: x % n, eps: if x < n { 1 } else { -1 } };
    let encode = |e: SemidirectElement| e.g + if e.eps > 0 { 0 } else { n };
    let table = (0..2 * n)
        .map(|x| (0..2 * n).map(|y| encode(semidirect_mul(group, sigma, decode(x), decode(y)))).collect())
        .collect();
    FiniteGroup::from_table(table)
}

/// Central extension `1 → A → Ĝ → G → 1` together with compatible
/// involutions `σ̂` on `Ĝ` and `σ` on `G`.
///
/// Kernel elements carry coordinates in a standard coefficient group so that
/// obstruction cochains can be handed to the Čech machinery.
#[derive(Debug, Clone)]
pub struct CentralExtension {
    pub base: FiniteGroup,
    pub base_sigma: Automorphism,
    pub hat: FiniteGroup,
    pub hat_sigma: Automorphism,
    pub projection: Vec<usize>,
    pub section: Vec<usize>,
    pub kernel_coeff: CoefficientGroup,
    /// `kernel_value[h] = Some(v)` when `h ∈ A` with coordinate `v`.
    kernel_value: Vec<Option<i64>>,
    /// Inverse of `kernel_value` indexed by coordinate.
    kernel_element: Vec<usize>,
}

impl CentralExtension {
    /// Assembles extension data. `kernel` lists `(ĝ, coordinate)` pairs.
    /// Only shape checks happen here; see [`CentralExtension::verify`].
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        base: FiniteGroup,
        base_sigma: Automorphism,
        hat: FiniteGroup,
        hat_sigma: Automorphism,
        projection: Vec<usize>,
        section: Vec<usize>,
        kernel: &[(usize, i64)],
        kernel_coeff: CoefficientGroup,
    ) -> Result<Self> {
        let modulus = match kernel_coeff.kind {
            CoefficientKind::IntegersMod(n) => n as usize,
            other => return Err(Error::UnsupportedCoefficient(format!("{other} as a finite kernel"))),
        };
        if projection.len() != hat.order() || projection.iter().any(|&x| x >= base.order()) {
            return Err(Error::ShapeMismatch("projection must map every element of the cover group".into()));
        }
        if section.len() != base.order() || section.iter().any(|&x| x >= hat.order()) {
            return Err(Error::ShapeMismatch("section must map every element of the base group".into()));
        }
        if kernel.len() != modulus {
            return Err(Error::BadKernel(format!("{} kernel elements for Z/{modulus}", kernel.len())));
        }
        let mut kernel_value = vec![None; hat.order()];
        let mut kernel_element = vec![usize::MAX; modulus];
        for &(h, v) in kernel {
            if h >= hat.order() || v < 0 || v as usize >= modulus {
                return Err(Error::BadKernel(format!("entry ({h}, {v}) out of range")));
            }
            if kernel_value[h].is_some() || kernel_element[v as usize] != usize::MAX {
                return Err(Error::BadKernel(format!("entry ({h}, {v}) repeated")));
            }
            kernel_value[h] = Some(v);
            kernel_element[v as usize] = h;
        }
        Ok(CentralExtension {
            base,
            base_sigma,
            hat,
            hat_sigma,
            projection,
            section,
            kernel_coeff,
            kernel_value,
            kernel_element,
        })
    }

    /// Cyclic extension `Z/n → Z/(nm) → Z/m` with kernel generated by `m`,
    /// projection reduction mod `m`, section `x ↦ x` and both involutions
    /// either trivial or negation.
    pub fn cyclic(n: usize, m: usize, involution: Involution) -> Result<Self> {
        let hat = FiniteGroup::cyclic(n * m)?;
        let base = FiniteGroup::cyclic(m)?;
        let (hat_sigma, base_sigma) = match involution {
            Involution::Identity => (Automorphism::identity(&hat), Automorphism::identity(&base)),
            Involution::Negation => (Automorphism::inversion(&hat)?, Automorphism::inversion(&base)?),
        };
        let projection = (0..n * m).map(|x| x % m).collect();
        let section = (0..m).collect();
        let kernel: Vec<(usize, i64)> = (0..n).map(|k| (k * m, k as i64)).collect();
        Self::new(base, base_sigma, hat, hat_sigma, projection, section, &kernel, CoefficientGroup::modular(n as u64, involution)?)
    }

    /// Checks centrality, the homomorphism and section properties of the
    /// projection, equivariance `q∘σ̂ = σ∘q`, and that the kernel coordinates
    /// identify `ker q` with the coefficient group (involution included).
    /// Returns the first violated identity.
    pub fn verify(&self) -> Result<()> {
        let hat = &self.hat;
        let n = hat.order();
        for a in (0..n).filter(|&a| self.kernel_value[a].is_some()) {
            for h in 0..n {
                if !hat.commutes(a, h) {
                    return Err(Error::NotCentral { kernel: a, element: h });
                }
            }
        }
        for x in 0..n {
            for y in 0..n {
                if self.projection[hat.mul(x, y)] != self.base.mul(self.projection[x], self.projection[y]) {
                    return Err(Error::NotHomomorphism { x, y });
                }
            }
        }
        for g in 0..self.base.order() {
            if self.projection[self.section[g]] != g {
                return Err(Error::BadSection(g));
            }
        }
        for x in 0..n {
            if self.projection[self.hat_sigma.apply(x)] != self.base_sigma.apply(self.projection[x]) {
                return Err(Error::NotEquivariant(x));
            }
        }
        if !self.hat_sigma.is_involution() || !self.base_sigma.is_involution() {
            return Err(Error::InvalidAutomorphism("extension involutions must square to the identity".into()));
        }
        // kernel = q^{-1}(e), coordinates additive, involution compatible
        let e = self.base.identity();
        for h in 0..n {
            if (self.projection[h] == e) != self.kernel_value[h].is_some() {
                return Err(Error::BadKernel(format!("element {h} misclassified as kernel")));
            }
        }
        let coeff = &self.kernel_coeff;
        for a in 0..n {
            let Some(va) = self.kernel_value[a] else { continue };
            for b in 0..n {
                let Some(vb) = self.kernel_value[b] else { continue };
                if self.kernel_value[hat.mul(a, b)] != Some(coeff.reduce_int(va + vb)) {
                    return Err(Error::BadKernel(format!("coordinates not additive at ({a}, {b})")));
                }
            }
            if self.kernel_value[self.hat_sigma.apply(a)] != Some(coeff.act_int(-1, va)) {
                return Err(Error::BadKernel(format!("involution on kernel element {a} disagrees with coefficients")));
            }
        }
        Ok(())
    }

    pub fn kernel_value(&self, h: usize) -> Option<i64> {
        self.kernel_value.get(h).copied().flatten()
    }

    pub fn kernel_element(&self, v: i64) -> usize {
        let v = self.kernel_coeff.reduce_int(v);
        self.kernel_element[v as usize]
    }

    /// Group-level section defect `s(x)s(y)s(xy)⁻¹ ∈ A`.
    pub fn section_defect(&self, x: usize, y: usize) -> usize {
        let s = &self.section;
        let xy = self.base.mul(x, y);
        self.hat.mul(self.hat.mul(s[x], s[y]), self.hat.inv(s[xy]))
    }

    /// Whether the stored section is multiplicative.
    pub fn section_is_homomorphism(&self) -> bool {
        let n = self.base.order();
        (0..n).all(|x| (0..n).all(|y| self.section_defect(x, y) == self.hat.identity()))
    }
}
