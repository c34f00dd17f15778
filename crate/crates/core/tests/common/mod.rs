//! Independent oracles shared by the integration tests: dense coboundary
//! matrices assembled straight from the definition, elimination over prime
//! fields, random nerves and random twisted transition data.
#![allow(dead_code)]

use cechlab_core::coeffs::{semidirect_inv, semidirect_mul, Automorphism, CentralExtension, FiniteGroup, SemidirectElement};
use cechlab_core::{CoefficientGroup, Involution, Nerve};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sign on edge `{i, j}` looked up from ascending-edge data.
pub fn sign(nerve: &Nerve, eps: &[i8], i: usize, j: usize) -> i64 {
    let (a, b) = if i < j { (i, j) } else { (j, i) };
    eps[nerve.simplices(1).iter().position(|e| e == &vec![a, b]).unwrap()] as i64
}

/// Dense matrix of `δ: C^k → C^{k+1}`, rows = (k+1)-simplices, written out
/// from the face formula with a linear search for each face.
pub fn naive_coboundary(nerve: &Nerve, eps: &[i8], negate: bool, k: usize) -> Vec<Vec<i64>> {
    let rows = nerve.simplices(k + 1);
    let cols = nerve.simplices(k);
    let mut m = vec![vec![0i64; cols.len()]; rows.len()];
    for (r, s) in rows.iter().enumerate() {
        for drop in 0..s.len() {
            let face: Vec<usize> = s.iter().enumerate().filter(|&(i, _)| i != drop).map(|(_, &v)| v).collect();
            let c = cols.iter().position(|f| f == &face).unwrap();
            let coef = match drop {
                0 if negate => sign(nerve, eps, s[0], s[1]),
                0 => 1,
                d if d % 2 == 1 => -1,
                _ => 1,
            };
            m[r][c] += coef;
        }
    }
    m
}

pub fn apply(m: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

fn inv_mod(a: i64, p: i64) -> i64 {
    let mut r = 1;
    let mut b = a.rem_euclid(p);
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Reduced row echelon form over `F_p`; returns (matrix, pivot columns).
pub fn rref_mod_p(m: &[Vec<i64>], p: i64) -> (Vec<Vec<i64>>, Vec<usize>) {
    let mut a: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let cols = a.first().map(Vec::len).unwrap_or(0);
    let mut pivots = Vec::new();
    let mut row = 0;
    for c in 0..cols {
        let Some(pr) = (row..a.len()).find(|&r| a[r][c] != 0) else { continue };
        a.swap(row, pr);
        let inv = inv_mod(a[row][c], p);
        for x in a[row].iter_mut() {
            *x = *x * inv % p;
        }
        for r in 0..a.len() {
            if r != row && a[r][c] != 0 {
                let f = a[r][c];
                for j in 0..cols {
                    a[r][j] = (a[r][j] - f * a[row][j]).rem_euclid(p);
                }
            }
        }
        pivots.push(c);
        row += 1;
    }
    (a, pivots)
}

pub fn rank_mod_p(m: &[Vec<i64>], p: i64) -> usize {
    rref_mod_p(m, p).1.len()
}

/// Basis of the null space of `m` over `F_p` (`cols` = domain dimension).
pub fn kernel_mod_p(m: &[Vec<i64>], cols: usize, p: i64) -> Vec<Vec<i64>> {
    if m.is_empty() {
        return (0..cols).map(|i| (0..cols).map(|j| (i == j) as i64).collect()).collect();
    }
    let (a, pivots) = rref_mod_p(m, p);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0i64; cols];
            v[f] = 1;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = (-a[r][f]).rem_euclid(p);
            }
            v
        })
        .collect()
}

/// `dim H^k(C ⊗ F_p)` for `k = 0..=4` by elimination.
pub fn fp_dims(nerve: &Nerve, eps: &[i8], negate: bool, p: i64) -> Vec<usize> {
    let rank = |k: usize| if k >= 4 { 0 } else { rank_mod_p(&naive_coboundary(nerve, eps, negate, k), p) };
    (0..=4)
        .map(|k| {
            let incoming = if k == 0 { 0 } else { rank(k - 1) };
            nerve.count(k) - rank(k) - incoming
        })
        .collect()
}

/// Random complex on up to six vertices with simplices of dimension ≤ 4.
pub fn random_nerve(rng: &mut impl Rng) -> Nerve {
    let n = rng.gen_range(3..=6);
    let count = rng.gen_range(1..=5);
    let mut maximal = Vec::new();
    for _ in 0..count {
        let size = rng.gen_range(2..=n.min(5));
        let mut verts: Vec<usize> = (0..n).collect();
        verts.shuffle(rng);
        maximal.push(verts[..size].to_vec());
    }
    Nerve::build(n, &maximal).unwrap()
}

/// Random `Z₂` edge cocycle: a random element of the mod-2 cocycle space.
pub fn random_twist(nerve: &Nerve, rng: &mut impl Rng) -> Vec<i8> {
    let d1 = naive_coboundary(nerve, &vec![1; nerve.count(1)], false, 1);
    let basis = kernel_mod_p(&d1, nerve.count(1), 2);
    let mut v = vec![0i64; nerve.count(1)];
    for b in &basis {
        if rng.gen_bool(0.5) {
            for (x, y) in v.iter_mut().zip(b) {
                *x = (*x + y) % 2;
            }
        }
    }
    v.iter().map(|&x| if x == 1 { -1 } else { 1 }).collect()
}

/// Small fixed complexes plus the Möbius twist.
pub fn corpus() -> Vec<(&'static str, Nerve, Vec<i8>)> {
    let circle = Nerve::circle();
    let mobius = vec![1, -1, 1];
    let s2 = Nerve::boundary_of_simplex(3).unwrap();
    let s3 = Nerve::boundary_of_simplex(4).unwrap();
    let rp2 = Nerve::rp2_six();
    // orientation character of RP2 is the generator of H^1(RP2; Z2)
    let w1 = rp2_w1();
    vec![
        ("circle", circle.clone(), vec![1; 3]),
        ("mobius", circle, mobius),
        ("simplex3", Nerve::simplex(3).unwrap(), vec![1; 6]),
        ("sphere2", s2.clone(), vec![1; s2.count(1)]),
        ("sphere3", s3.clone(), vec![1; s3.count(1)]),
        ("rp2", rp2.clone(), vec![1; rp2.count(1)]),
        ("rp2-twisted", rp2, w1),
    ]
}

/// Nonzero class in `H¹(RP²; Z₂)` as ±1 signs: a mod-2 cocycle that is not
/// in the image of `δ⁰`.
pub fn rp2_w1() -> Vec<i8> {
    let nerve = Nerve::rp2_six();
    let ones = vec![1i8; nerve.count(1)];
    let d0 = naive_coboundary(&nerve, &ones, false, 0);
    let d1 = naive_coboundary(&nerve, &ones, false, 1);
    let image_rank = rank_mod_p(&d0, 2);
    for z in kernel_mod_p(&d1, nerve.count(1), 2) {
        let mut stacked: Vec<Vec<i64>> = (0..nerve.count(1)).map(|e| d0[e].clone()).collect();
        for (row, &v) in stacked.iter_mut().zip(&z) {
            row.push(v);
        }
        if rank_mod_p(&stacked, 2) > image_rank {
            return z.iter().map(|&x| if x == 1 { -1 } else { 1 }).collect();
        }
    }
    unreachable!()
}

pub fn z2_coeff() -> CoefficientGroup {
    CoefficientGroup::modular(2, Involution::Identity).unwrap()
}

/// `Z₂ → Q₈ → Z₂ × Z₂` with `σ̂` swapping `i` and `j`.
pub fn quaternion_extension() -> CentralExtension {
    let z2 = FiniteGroup::cyclic(2).unwrap();
    let base = z2.direct_product(&z2);
    let hat = FiniteGroup::quaternion();
    let hat_sigma = Automorphism::involution(&hat, vec![0, 1, 4, 5, 2, 3, 7, 6]).unwrap();
    let base_sigma = Automorphism::involution(&base, vec![0, 2, 1, 3]).unwrap();
    // ±1 ↦ (0,0), ±j ↦ (0,1) = 1, ±i ↦ (1,0) = 2, ±k ↦ (1,1) = 3
    let projection = vec![0, 0, 2, 2, 1, 1, 3, 3];
    let section = vec![0, 4, 2, 6];
    CentralExtension::new(base, base_sigma, hat, hat_sigma, projection, section, &[(0, 0), (1, 1)], z2_coeff()).unwrap()
}

/// Twisted cocycle `h_ij = u_i (e, ε_ij) u_j⁻¹` from random vertex data.
pub fn random_twisted_transition(
    nerve: &Nerve,
    group: &FiniteGroup,
    sigma: &Automorphism,
    eps: &[i8],
    rng: &mut impl Rng,
) -> Vec<usize> {
    let u: Vec<SemidirectElement> =
        (0..nerve.vertex_count()).map(|_| SemidirectElement::new(rng.gen_range(0..group.order()), 1)).collect();
    nerve
        .simplices(1)
        .iter()
        .zip(eps)
        .map(|(e, &s)| {
            let left = semidirect_mul(group, sigma, u[e[0]], SemidirectElement::new(group.identity(), s));
            let h = semidirect_mul(group, sigma, left, semidirect_inv(group, sigma, u[e[1]]));
            assert_eq!(h.eps, s);
            h.g
        })
        .collect()
}
