//! Smith normal form over the integers with unimodular transforms.
//!
//! For an `m × n` integer matrix `D` the decomposition returns `P`, `Q`
//! unimodular with `P · D · Q = S` diagonal, `s₀ | s₁ | … ` positive on the
//! first `rank` diagonal entries. Inverses of both transforms are tracked so
//! that solving and change of basis never need a separate inversion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Dense matrix of arbitrary-precision integers, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, entries: &[(usize, usize, i64)]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for &(r, c, v) in entries {
            m.data[r * cols + c] += BigInt::from(v);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    fn at(&mut self, r: usize, c: usize) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[BigInt] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<BigInt> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        *out.at(i, j) += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn mul_vec_f64(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| to_f64(a) * b).sum())
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a != b {
            for r in 0..self.rows {
                self.data.swap(r * self.cols + a, r * self.cols + b);
            }
        }
    }

    /// row[dst] += q * row[src]
    fn add_row(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let v = self.get(src, c) * q;
            *self.at(dst, c) += v;
        }
    }

    /// col[dst] += q * col[src]
    fn add_col(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let v = self.get(r, src) * q;
            *self.at(r, dst) += v;
        }
    }

    fn negate_row(&mut self, r: usize) {
        for c in 0..self.cols {
            let v = -self.get(r, c).clone();
            *self.at(r, c) = v;
        }
    }
}

pub fn to_f64(x: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone)]
pub struct SmithForm {
    /// Nonzero diagonal entries, each dividing the next.
    pub diagonal: Vec<BigInt>,
    pub p: IntMatrix,
    pub p_inv: IntMatrix,
    pub q: IntMatrix,
    pub q_inv: IntMatrix,
    pub rows: usize,
    pub cols: usize,
}

impl SmithForm {
    pub fn rank(&self) -> usize {
        self.diagonal.len()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.diagonal.iter().filter(|d| !d.is_one()).cloned().collect()
    }
}

/// Computes the Smith normal form of `d`.
pub fn smith_normal_form(d: &IntMatrix) -> SmithForm {
    let (m, n) = (d.rows, d.cols);
    let mut a = d.clone();
    let mut p = IntMatrix::identity(m);
    let mut p_inv = IntMatrix::identity(m);
    let mut q = IntMatrix::identity(n);
    let mut q_inv = IntMatrix::identity(n);

    // Row op R: row_i += c·row_t  ⇒  P ← R P,  P⁻¹ ← P⁻¹ R⁻¹ (col_t −= c·col_i)
    // Col op C: col_j += c·col_t  ⇒  Q ← Q C,  Q⁻¹ ← C⁻¹ Q⁻¹ (row_t −= c·row_j)
    let mut t = 0;
    while t < m.min(n) {
        // smallest nonzero entry in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                let v = a.get(i, j);
                if !v.is_zero() && best.is_none_or(|(bi, bj)| v.abs() < a.get(bi, bj).abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        a.swap_rows(t, bi);
        p.swap_rows(t, bi);
        p_inv.swap_cols(t, bi);
        a.swap_cols(t, bj);
        q.swap_cols(t, bj);
        q_inv.swap_rows(t, bj);

        loop {
            let mut dirty = false;
            for i in t + 1..m {
                if a.get(i, t).is_zero() {
                    continue;
                }
                let qq = -a.get(i, t).div_floor(a.get(t, t));
                a.add_row(i, t, &qq);
                p.add_row(i, t, &qq);
                p_inv.add_col(t, i, &-qq.clone());
                if !a.get(i, t).is_zero() {
                    // remainder smaller than the pivot: move it up
                    a.swap_rows(t, i);
                    p.swap_rows(t, i);
                    p_inv.swap_cols(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..n {
                if a.get(t, j).is_zero() {
                    continue;
                }
                let qq = -a.get(t, j).div_floor(a.get(t, t));
                a.add_col(j, t, &qq);
                q.add_col(j, t, &qq);
                q_inv.add_row(t, j, &-qq.clone());
                if !a.get(t, j).is_zero() {
                    a.swap_cols(t, j);
                    q.swap_cols(t, j);
                    q_inv.swap_rows(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // divisibility of the trailing block by the pivot
            let pivot = a.get(t, t).clone();
            let offender = (t + 1..m).find(|&i| (t + 1..n).any(|j| !a.get(i, j).is_multiple_of(&pivot)));
            match offender {
                Some(i) => {
                    let one = BigInt::one();
                    a.add_row(t, i, &one);
                    p.add_row(t, i, &one);
                    p_inv.add_col(i, t, &-one);
                }
                None => break,
            }
        }
        if a.get(t, t).is_negative() {
            a.negate_row(t);
            p.negate_row(t);
            // R = R⁻¹ for a sign flip
            for r in 0..m {
                let v = -p_inv.get(r, t).clone();
                *p_inv.at(r, t) = v;
            }
        }
        t += 1;
    }
    let diagonal = (0..m.min(n)).map(|i| a.get(i, i).clone()).take_while(|v| !v.is_zero()).collect();
    SmithForm { diagonal, p, p_inv, q, q_inv, rows: m, cols: n }
}
