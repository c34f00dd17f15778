//! Band-limited matrix loops acting on truncated Fourier modes.
//!
//! A loop `X(z) = Σ_{|m|≤M} X_m z^m` acts on `H = ⊕_n C^N z^n` by
//! multiplication, which couples input mode `r` to output mode `s` through
//! `X_{s−r}`. Modes `−K..K−1` are kept; `H_+` is spanned by `n ≥ 0` and `H_−`
//! by `n < 0`, so the zero mode sits in `H_+`. In the assembled matrix mode
//! `n` occupies rows/columns `(n + K)·N .. (n + K + 1)·N`, hence `H_−` is the
//! leading `K·N` block.

use rand::Rng;

use crate::error::{Error, Result};
use crate::{CMatrix, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct LoopPolynomial {
    size: usize,
    band: usize,
    /// `coeffs[m + band]` holds `X_m`.
    coeffs: Vec<CMatrix>,
}

impl LoopPolynomial {
    pub fn zero(size: usize) -> Self {
        LoopPolynomial { size, band: 0, coeffs: vec![CMatrix::zeros(size, size)] }
    }

    /// Builds a loop from `(m, X_m)` pairs; repeated modes are summed.
    pub fn new(size: usize, entries: Vec<(i64, CMatrix)>) -> Result<Self> {
        let band = entries.iter().map(|(m, _)| m.unsigned_abs() as usize).max().unwrap_or(0);
        let mut coeffs = vec![CMatrix::zeros(size, size); 2 * band + 1];
        for (m, x) in entries {
            if x.nrows() != size || x.ncols() != size {
                return Err(Error::ShapeMismatch(format!(
                    "coefficient of mode {m} is {}x{}, expected {size}x{size}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            coeffs[(m + band as i64) as usize] += x;
        }
        Ok(LoopPolynomial { size, band, coeffs })
    }

    pub fn constant(c: CMatrix) -> Self {
        LoopPolynomial { size: c.nrows(), band: 0, coeffs: vec![c] }
    }

    pub fn monomial(m: i64, c: CMatrix) -> Self {
        let size = c.nrows();
        Self::new(size, vec![(m, c)]).expect("square coefficient")
    }

    /// Entries with real and imaginary parts uniform in `[−1, 1]` on every
    /// mode of the band.
    pub fn random<R: Rng + ?Sized>(size: usize, band: usize, rng: &mut R) -> Self {
        let coeffs = (0..2 * band + 1)
            .map(|_| CMatrix::from_fn(size, size, |_, _| C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))))
            .collect();
        LoopPolynomial { size, band, coeffs }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Declared band limit `M`.
    pub fn band(&self) -> usize {
        self.band
    }

    pub fn coeff(&self, m: i64) -> CMatrix {
        if m.unsigned_abs() as usize > self.band {
            CMatrix::zeros(self.size, self.size)
        } else {
            self.coeffs[(m + self.band as i64) as usize].clone()
        }
    }

    fn coeff_ref(&self, m: i64) -> Option<&CMatrix> {
        (m.unsigned_abs() as usize <= self.band).then(|| &self.coeffs[(m + self.band as i64) as usize])
    }

    /// `(m, X_m)` in ascending mode order.
    pub fn modes(&self) -> impl Iterator<Item = (i64, &CMatrix)> {
        let b = self.band as i64;
        self.coeffs.iter().enumerate().map(move |(i, x)| (i as i64 - b, x))
    }

    /// θ-derivative: `(X′)_m = i·m·X_m`.
    pub fn derivative(&self) -> Self {
        let coeffs = self.modes().map(|(m, x)| x * C64::new(0.0, m as f64)).collect();
        LoopPolynomial { size: self.size, band: self.band, coeffs }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: C64, other: &LoopPolynomial, b: C64) -> Result<Self> {
        self.check_size(other)?;
        let band = self.band.max(other.band);
        let entries = (-(band as i64)..=band as i64).map(|m| (m, self.coeff(m) * a + other.coeff(m) * b)).collect();
        Self::new(self.size, entries)
    }

    /// Pointwise bracket `[X, Y]_m = Σ_p (X_p Y_{m−p} − Y_p X_{m−p})`.
    pub fn bracket(&self, other: &LoopPolynomial) -> Result<Self> {
        self.check_size(other)?;
        let band = self.band + other.band;
        let mut coeffs = vec![CMatrix::zeros(self.size, self.size); 2 * band + 1];
        for (p, x) in self.modes() {
            for (q, y) in other.modes() {
                let slot = &mut coeffs[(p + q + band as i64) as usize];
                *slot += x * y - y * x;
            }
        }
        Ok(LoopPolynomial { size: self.size, band, coeffs })
    }

    /// `sqrt(Σ_m ‖X_m‖_F²)`.
    pub fn frobenius_norm(&self) -> f64 {
        self.coeffs.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt()
    }

    /// Checks `X_{−m} = −X_m†`, i.e. the loop is skew-hermitian on the circle.
    pub fn is_skew_hermitian(&self, tol: f64) -> bool {
        let b = self.band as i64;
        (-b..=b).all(|m| (self.coeff(-m) + self.coeff(m).adjoint()).iter().all(|z| z.norm() <= tol))
    }

    fn check_size(&self, other: &LoopPolynomial) -> Result<()> {
        if self.size != other.size {
            return Err(Error::ShapeMismatch(format!("loops of size {} and {}", self.size, other.size)));
        }
        Ok(())
    }
}

/// Multiplication operator on modes `−K..K−1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    truncation: usize,
    size: usize,
    full: CMatrix,
}

impl BlockOperator {
    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn full(&self) -> &CMatrix {
        &self.full
    }

    fn half(&self) -> usize {
        self.truncation * self.size
    }

    /// Block with outputs in `H_{out}` and inputs in `H_{in}`; `true` selects
    /// the negative half.
    pub fn block(&self, out_negative: bool, in_negative: bool) -> CMatrix {
        let h = self.half();
        let r0 = if out_negative { 0 } else { h };
        let c0 = if in_negative { 0 } else { h };
        self.full.view((r0, c0), (h, h)).into_owned()
    }

    pub fn plus_plus(&self) -> CMatrix {
        self.block(false, false)
    }

    pub fn plus_minus(&self) -> CMatrix {
        self.block(false, true)
    }

    pub fn minus_plus(&self) -> CMatrix {
        self.block(true, false)
    }

    pub fn minus_minus(&self) -> CMatrix {
        self.block(true, true)
    }
}

fn require(truncation: usize, required: usize) -> Result<()> {
    if truncation < required {
        return Err(Error::TruncationTooSmall { truncation, required });
    }
    Ok(())
}

pub fn block_operator(x: &LoopPolynomial, truncation: usize) -> Result<BlockOperator> {
    require(truncation, 1)?;
    let (n, k) = (x.size, truncation as i64);
    let mut full = CMatrix::zeros(2 * truncation * n, 2 * truncation * n);
    for s in -k..k {
        for r in -k..k {
            if let Some(c) = x.coeff_ref(s - r) {
                let (row, col) = (((s + k) as usize) * n, ((r + k) as usize) * n);
                full.view_mut((row, col), (n, n)).copy_from(c);
            }
        }
    }
    Ok(BlockOperator { truncation, size: n, full })
}

/// `Σ_{i,j} A_ij B_ji` in fixed row-major order.
fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `Tr((M_X)_{−+}(M_Y)_{+−} − (M_Y)_{−+}(M_X)_{+−})` at truncation `K`.
///
/// The value is exact once `K` reaches the larger band limit; below that
/// threshold it is returned only when `allow_under_truncated` is set.
pub fn schwinger_trace(x: &LoopPolynomial, y: &LoopPolynomial, truncation: usize, allow_under_truncated: bool) -> Result<C64> {
    x.check_size(y)?;
    if !allow_under_truncated {
        require(truncation, x.band.max(y.band).max(1))?;
    }
    let mx = block_operator(x, truncation)?;
    let my = block_operator(y, truncation)?;
    Ok(trace_of_product(&mx.minus_plus(), &my.plus_minus()) - trace_of_product(&my.minus_plus(), &mx.plus_minus()))
}

/// `Σ_m m·tr(X_{−m} Y_m)`, summed over ascending `m`.
pub fn schwinger_residue(x: &LoopPolynomial, y: &LoopPolynomial) -> C64 {
    let band = x.band.min(y.band) as i64;
    let mut acc = C64::new(0.0, 0.0);
    for m in -band..=band {
        if m == 0 {
            continue;
        }
        let (a, b) = (x.coeff_ref(-m).expect("in band"), y.coeff_ref(m).expect("in band"));
        acc += trace_of_product(a, b) * m as f64;
    }
    acc
}

/// `max(1, Π ‖X_i‖)` used to make tolerances relative.
pub fn scale(loops: &[&LoopPolynomial]) -> f64 {
    loops.iter().map(|x| x.frobenius_norm()).product::<f64>().max(1.0)
}

/// `|c([X,Y],Z) + c([Y,Z],X) + c([Z,X],Y)|`.
pub fn cocycle_identity_defect(x: &LoopPolynomial, y: &LoopPolynomial, z: &LoopPolynomial) -> Result<f64> {
    let s = schwinger_residue(&x.bracket(y)?, z) + schwinger_residue(&y.bracket(z)?, x) + schwinger_residue(&z.bracket(x)?, y);
    Ok(s.norm())
}

/// Element `(X, a)` of the centrally extended loop algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralElement {
    pub loop_part: LoopPolynomial,
    pub central: C64,
}

impl CentralElement {
    pub fn new(loop_part: LoopPolynomial, central: C64) -> Self {
        CentralElement { loop_part, central }
    }
}

/// `[(X, a), (Y, b)] = ([X, Y], c(X, Y))`.
pub fn extension_bracket(u: &CentralElement, v: &CentralElement) -> Result<CentralElement> {
    Ok(CentralElement {
        loop_part: u.loop_part.bracket(&v.loop_part)?,
        central: schwinger_residue(&u.loop_part, &v.loop_part),
    })
}

/// Max-norm of `[[u,v],w] + [[v,w],u] + [[w,u],v]` over loop and central
/// parts.
pub fn jacobi_defect(u: &CentralElement, v: &CentralElement, w: &CentralElement) -> Result<f64> {
    let a = extension_bracket(&extension_bracket(u, v)?, w)?;
    let b = extension_bracket(&extension_bracket(v, w)?, u)?;
    let c = extension_bracket(&extension_bracket(w, u)?, v)?;
    let one = C64::new(1.0, 0.0);
    let sum = a.loop_part.combine(one, &b.loop_part, one)?.combine(one, &c.loop_part, one)?;
    let loop_max = sum.coeffs.iter().flat_map(|x| x.iter()).map(|z| z.norm()).fold(0.0, f64::max);
    Ok(loop_max.max((a.central + b.central + c.central).norm()))
}

/// Mode-number diagonal `D` on modes `−K..K−1`.
pub fn mode_operator(size: usize, truncation: usize) -> CMatrix {
    let k = truncation as i64;
    let diag: Vec<C64> = (-k..k).flat_map(|n| std::iter::repeat_n(C64::new(n as f64, 0.0), size)).collect();
    CMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag))
}

/// Mode window `[lo, hi]` used for comparisons away from truncation edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeWindow {
    pub lo: i64,
    pub hi: i64,
}

impl ModeWindow {
    fn range(&self, size: usize, truncation: usize) -> std::ops::Range<usize> {
        let k = truncation as i64;
        ((self.lo + k) as usize * size)..((self.hi + k + 1) as usize * size)
    }

    /// Restriction of a full truncated matrix to the window on both sides.
    pub fn restrict(&self, m: &CMatrix, size: usize, truncation: usize) -> CMatrix {
        let r = self.range(size, truncation);
        m.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }
}

#[derive(Debug, Clone)]
pub struct DiracDefect {
    /// `[D, M_X]`.
    pub computed: CMatrix,
    /// `−i·M_{X′}`.
    pub predicted: CMatrix,
    pub window: ModeWindow,
    /// Max entrywise deviation on the interior window.
    pub interior_deviation: f64,
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Commutator of the mode-number operator with `M_X`, compared with
/// `−i·M_{X′}` on modes `|n| ≤ K − M`.
pub fn dirac_defect(x: &LoopPolynomial, truncation: usize) -> Result<DiracDefect> {
    require(truncation, x.band + 1)?;
    let d = mode_operator(x.size, truncation);
    let computed = commutator(&d, block_operator(x, truncation)?.full());
    let predicted = block_operator(&x.derivative(), truncation)?.full() * C64::new(0.0, -1.0);
    let edge = (truncation - x.band) as i64;
    let window = ModeWindow { lo: -edge, hi: edge - 1 };
    let interior_deviation = max_abs(&(window.restrict(&computed, x.size, truncation) - window.restrict(&predicted, x.size, truncation)));
    Ok(DiracDefect { computed, predicted, window, interior_deviation })
}

#[derive(Debug, Clone)]
pub struct DefectCurvature {
    /// `[𝒟X, 𝒟Y] − 𝒟([X, Y])` on the full truncated space.
    pub full: CMatrix,
    /// Modes `−K+M ..= K−1−M` on which products of band-`M` operators are
    /// unaffected by truncation.
    pub window: ModeWindow,
    size: usize,
    truncation: usize,
}

impl DefectCurvature {
    pub fn interior(&self) -> CMatrix {
        self.window.restrict(&self.full, self.size, self.truncation)
    }
}

/// Curvature of the defect map `𝒟(X) = [D, M_X]`.
pub fn defect_curvature(x: &LoopPolynomial, y: &LoopPolynomial, truncation: usize) -> Result<DefectCurvature> {
    x.check_size(y)?;
    let band = x.band.max(y.band);
    require(truncation, 2 * band + 1)?;
    let d = mode_operator(x.size, truncation);
    let defect = |l: &LoopPolynomial| -> Result<CMatrix> { Ok(commutator(&d, block_operator(l, truncation)?.full())) };
    let full = commutator(&defect(x)?, &defect(y)?) - defect(&x.bracket(y)?)?;
    let m = band as i64;
    let k = truncation as i64;
    Ok(DefectCurvature { full, window: ModeWindow { lo: -k + m, hi: k - 1 - m }, size: x.size, truncation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn monomial_blocks_at_k2() {
        let up = LoopPolynomial::monomial(1, CMatrix::from_element(1, 1, c(1.0)));
        let op = block_operator(&up, 2).unwrap();
        assert_eq!(max_abs(&op.minus_plus()), 0.0);
        let down = LoopPolynomial::monomial(-1, CMatrix::from_element(1, 1, c(1.0)));
        let op = block_operator(&down, 2).unwrap();
        let mp = op.minus_plus();
        let nonzero: Vec<_> = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).filter(|&(i, j)| mp[(i, j)].norm() > 0.0).collect();
        // input mode 0 is column 0 of H_+, output mode −1 is row 1 of H_−
        assert_eq!(nonzero, vec![(1, 0)]);
    }

    #[test]
    fn constant_loop_is_block_diagonal() {
        let x = LoopPolynomial::constant(CMatrix::from_fn(2, 2, |i, j| c((i + 2 * j) as f64)));
        let op = block_operator(&x, 3).unwrap();
        assert_eq!(max_abs(&op.plus_minus()), 0.0);
        assert_eq!(max_abs(&op.minus_plus()), 0.0);
    }

    #[test]
    fn basic_pair_gives_minus_trace() {
        let e = CMatrix::from_fn(2, 2, |i, j| c((1 + i + 3 * j) as f64));
        let f = CMatrix::from_fn(2, 2, |i, j| C64::new(j as f64, i as f64 - 1.0));
        let x = LoopPolynomial::monomial(1, e.clone());
        let y = LoopPolynomial::monomial(-1, f.clone());
        let expected = -(e * f).trace();
        assert!((schwinger_trace(&x, &y, 1, false).unwrap() - expected).norm() < 1e-12);
        assert!((schwinger_residue(&x, &y) - expected).norm() < 1e-12);
    }

    #[test]
    fn truncation_threshold_enforced() {
        let x = LoopPolynomial::monomial(3, CMatrix::identity(1, 1));
        assert_eq!(
            schwinger_trace(&x, &x, 2, false),
            Err(Error::TruncationTooSmall { truncation: 2, required: 3 })
        );
        assert!(schwinger_trace(&x, &x, 2, true).is_ok());
        assert!(matches!(dirac_defect(&x, 3), Err(Error::TruncationTooSmall { .. })));
        assert!(matches!(defect_curvature(&x, &x, 6), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn dirac_defect_of_z_at_k3() {
        let x = LoopPolynomial::monomial(1, CMatrix::identity(1, 1));
        let d = dirac_defect(&x, 3).unwrap();
        assert_eq!(d.interior_deviation, 0.0);
        // [D, M_z] maps mode r to r+1 with weight 1
        for r in -3..2i64 {
            let (row, col) = ((r + 4) as usize, (r + 3) as usize);
            assert_eq!(d.computed[(row, col)], c(1.0));
        }
    }

    #[test]
    fn central_elements_bracket_to_zero() {
        let zero = CentralElement::new(LoopPolynomial::zero(2), c(3.5));
        let x = CentralElement::new(LoopPolynomial::monomial(2, CMatrix::identity(2, 2)), c(-1.0));
        let b = extension_bracket(&zero, &x).unwrap();
        assert_eq!(b.central, c(0.0));
        assert_eq!(b.loop_part.frobenius_norm(), 0.0);
    }

    #[test]
    fn skew_hermitian_flag() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new(i as f64, j as f64));
        let x = LoopPolynomial::new(2, vec![(1, a.clone()), (-1, -a.adjoint())]).unwrap();
        assert!(x.is_skew_hermitian(1e-15));
        let y = LoopPolynomial::new(2, vec![(1, a.clone()), (-1, a)]).unwrap();
        assert!(!y.is_skew_hermitian(1e-15));
    }
}
