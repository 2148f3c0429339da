//! Generalized Pauli (Weyl–Heisenberg) operators on an `n`-level qudit.
//!
//! `X|j> = |j+1 mod n>`, `Z|j> = ω^j |j>` with `ω = exp(2πi/n)` and
//! `U_{l,m} = X^l Z^m`. Products of these operators are tracked exactly as a
//! [`PhasedIndex`]: an index in `Z_n × Z_n` plus an integer power of `ω`.
//!
//! Two-qudit vectors are stored with the first factor as the slow index, so
//! `|a>|b>` sits at position `a * n + b`. The second factor of a Bell pair is
//! the conjugate qudit `|j̄>`, represented in the abstract `n`-dimensional basis.

use std::f64::consts::PI;
use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::{Error, Result, C64};

/// Largest `n` for which the antisymmetric-tensor realization of `|j̄>` is built.
pub const DEFAULT_MAX_EMBEDDING_DIM: usize = 4;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

/// `ω^k` for `ω = exp(2πi/n)`.
pub fn omega_pow(n: usize, k: usize) -> C64 {
    let k = k % n;
    match (4 * k) % n {
        // exact values on the real and imaginary axes
        0 => match (4 * k) / n {
            0 => C64::one(),
            1 => C64::i(),
            2 => -C64::one(),
            _ => -C64::i(),
        },
        _ => Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64),
    }
}

/// A pair `(l, m)` in `Z_n × Z_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BellIndex {
    pub l: usize,
    pub m: usize,
}

impl BellIndex {
    pub const IDENTITY: BellIndex = BellIndex { l: 0, m: 0 };

    /// Builds `(l mod n, m mod n)`; negative inputs wrap around.
    pub fn new(n: usize, l: i64, m: i64) -> Self {
        let n = n as i64;
        BellIndex {
            l: l.rem_euclid(n) as usize,
            m: m.rem_euclid(n) as usize,
        }
    }

    pub fn is_identity(self) -> bool {
        self.l == 0 && self.m == 0
    }

    pub fn add(self, other: BellIndex, n: usize) -> BellIndex {
        BellIndex {
            l: (self.l + other.l) % n,
            m: (self.m + other.m) % n,
        }
    }

    pub fn neg(self, n: usize) -> BellIndex {
        BellIndex {
            l: (n - self.l % n) % n,
            m: (n - self.m % n) % n,
        }
    }

    /// Position `l * n + m` used for state indices, matrix rows and output.
    pub fn linear(self, n: usize) -> usize {
        self.l * n + self.m
    }

    pub fn from_linear(n: usize, idx: usize) -> BellIndex {
        BellIndex {
            l: (idx / n) % n,
            m: idx % n,
        }
    }

    /// All `n²` indices in linear order.
    pub fn all(n: usize) -> impl Iterator<Item = BellIndex> {
        (0..n * n).map(move |i| BellIndex::from_linear(n, i))
    }

    /// The `n² - 1` indices other than `(0, 0)`, in linear order.
    pub fn adjoint(n: usize) -> impl Iterator<Item = BellIndex> {
        (1..n * n).map(move |i| BellIndex::from_linear(n, i))
    }
}

impl fmt::Display for BellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.l, self.m)
    }
}

/// `ω^phase_exp · U_index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct PhasedIndex {
    pub index: BellIndex,
    pub phase_exp: usize,
}

impl PhasedIndex {
    pub fn new(n: usize, index: BellIndex, phase_exp: i64) -> Self {
        PhasedIndex {
            index,
            phase_exp: phase_exp.rem_euclid(n as i64) as usize,
        }
    }

    pub fn phase(self, n: usize) -> C64 {
        omega_pow(n, self.phase_exp)
    }
}

/// A square complex matrix that is unitary by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix(Array2<C64>);

impl UnitaryMatrix {
    pub fn as_array(&self) -> &Array2<C64> {
        &self.0
    }

    pub fn into_array(self) -> Array2<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn dot(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(self.0.dot(&other.0))
    }

    /// `A ⊗ B` with `A` acting on the slow index.
    pub fn kron(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        let (da, db) = (self.dim(), other.dim());
        let out = Array2::from_shape_fn((da * db, da * db), |(r, c)| {
            self.0[[r / db, c / db]] * other.0[[r % db, c % db]]
        });
        UnitaryMatrix(out)
    }

    pub fn pow(&self, k: usize) -> UnitaryMatrix {
        let mut acc = UnitaryMatrix(Array2::eye(self.dim()));
        for _ in 0..k {
            acc = acc.dot(self);
        }
        acc
    }

    /// `‖U†U - I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let adj = self.0.t().mapv(|z| z.conj());
        let prod = adj.dot(&self.0);
        let mut acc = 0.0;
        for r in 0..d {
            for c in 0..d {
                let target = if r == c { C64::one() } else { C64::zero() };
                acc += (prod[[r, c]] - target).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn apply(&self, v: &Array1<C64>) -> Array1<C64> {
        self.0.dot(v)
    }
}

/// Cyclic shift `X|j> = |j+1 mod n>`.
pub fn pauli_x(n: usize) -> Result<UnitaryMatrix> {
    check_dim(n)?;
    let mut x = Array2::zeros((n, n));
    for j in 0..n {
        x[[(j + 1) % n, j]] = C64::one();
    }
    Ok(UnitaryMatrix(x))
}

/// Clock `Z = diag(1, ω, …, ω^{n-1})`.
pub fn pauli_z(n: usize) -> Result<UnitaryMatrix> {
    check_dim(n)?;
    let mut z = Array2::zeros((n, n));
    for j in 0..n {
        z[[j, j]] = omega_pow(n, j);
    }
    Ok(UnitaryMatrix(z))
}

/// `U_{l,m} = X^l Z^m`, assembled entrywise: `U|j> = ω^{mj} |j+l>`.
pub fn u_lm(n: usize, a: BellIndex) -> Result<UnitaryMatrix> {
    check_dim(n)?;
    let mut u = Array2::zeros((n, n));
    for j in 0..n {
        u[[(j + a.l) % n, j]] = omega_pow(n, a.m * j);
    }
    Ok(UnitaryMatrix(u))
}

/// `U_a U_b = ω^{m_a l_b} U_{a+b}`, from `Z^m X^l = ω^{ml} X^l Z^m`.
pub fn compose(n: usize, a: BellIndex, b: BellIndex) -> PhasedIndex {
    PhasedIndex {
        index: a.add(b, n),
        phase_exp: (a.m * b.l) % n,
    }
}

/// `|Φ_a> = (U_a ⊗ I)|Φ_{0,0}>` with `|Φ_{0,0}> = n^{-1/2} Σ_j |j>|j̄>`.
pub fn bell_vector(n: usize, a: BellIndex) -> Result<Array1<C64>> {
    check_dim(n)?;
    let norm = 1.0 / (n as f64).sqrt();
    let mut v = Array1::zeros(n * n);
    for j in 0..n {
        v[((j + a.l) % n) * n + j] = omega_pow(n, a.m * j) * norm;
    }
    Ok(v)
}

fn permutation_sign(perm: &[usize]) -> Option<f64> {
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return None;
        }
        seen[p] = true;
    }
    let mut inversions = 0;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] {
                inversions += 1;
            }
        }
    }
    Some(if inversions % 2 == 0 { 1.0 } else { -1.0 })
}

/// Realizes `|j̄>` as `((n-1)!)^{-1/2} Σ ε^{j α_2 … α_n} |α_2 … α_n>` inside
/// `(C^n)^{⊗(n-1)}`, with `α_2` the slowest index.
pub fn conjugate_embedding(n: usize, j: usize, max_n: usize) -> Result<Array1<C64>> {
    check_dim(n)?;
    if n > max_n {
        return Err(Error::DimensionTooLarge { n, max: max_n });
    }
    if j >= n {
        return Err(Error::InvalidBlock(format!(
            "conjugate label {j} out of range for n = {n}"
        )));
    }
    let slots = n - 1;
    let dim = n.pow(slots as u32);
    let factorial: f64 = (1..n).map(|k| k as f64).product();
    let norm = 1.0 / factorial.sqrt();
    let mut v = Array1::zeros(dim);
    let mut perm = vec![0usize; n];
    perm[0] = j;
    for idx in 0..dim {
        let mut rest = idx;
        for s in (0..slots).rev() {
            perm[s + 1] = rest % n;
            rest /= n;
        }
        if let Some(sign) = permutation_sign(&perm) {
            v[idx] = C64::new(sign * norm, 0.0);
        }
    }
    Ok(v)
}

/// Norm of the difference between the two sides of the entanglement-swapping
/// identity
///
/// ```text
/// |Φ_00>_{0 1̄} |Φ_00>_{1 2̄} = (1/n) Σ_{l,m} |Φ_{l,m}>_{0 2̄} |Φ_{l,-m}>_{1̄ 1}
/// ```
///
/// in the four-qudit space ordered `(0, 1̄, 1, 2̄)`. In `|Φ_{l,-m}>_{1̄ 1}` the
/// operator `U_{l,-m}` acts on the `1̄` slot.
pub fn swap_identity_residual(n: usize, max_n: usize) -> Result<f64> {
    check_dim(n)?;
    if n > max_n {
        return Err(Error::DimensionTooLarge { n, max: max_n });
    }
    let at = |s0: usize, s1b: usize, s1: usize, s2b: usize| ((s0 * n + s1b) * n + s1) * n + s2b;
    let dim = n.pow(4);

    let singlet = bell_vector(n, BellIndex::IDENTITY)?;
    let mut lhs = Array1::<C64>::zeros(dim);
    for s0 in 0..n {
        for s1b in 0..n {
            for s1 in 0..n {
                for s2b in 0..n {
                    lhs[at(s0, s1b, s1, s2b)] = singlet[s0 * n + s1b] * singlet[s1 * n + s2b];
                }
            }
        }
    }

    let mut rhs = Array1::<C64>::zeros(dim);
    let scale = 1.0 / n as f64;
    for a in BellIndex::all(n) {
        let outer = bell_vector(n, a)?;
        let inner = bell_vector(n, BellIndex::new(n, a.l as i64, -(a.m as i64)))?;
        for s0 in 0..n {
            for s1b in 0..n {
                for s1 in 0..n {
                    for s2b in 0..n {
                        rhs[at(s0, s1b, s1, s2b)] +=
                            outer[s0 * n + s2b] * inner[s1b * n + s1] * scale;
                    }
                }
            }
        }
    }

    Ok(lhs
        .iter()
        .zip(rhs.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

/// `‖(U_a ⊗ U_{l,-m})|Φ_{0,0}> - |Φ_{0,0}>‖`, the second factor acting on the
/// conjugate slot.
pub fn singlet_invariance_residual(n: usize, a: BellIndex) -> Result<f64> {
    let conj = BellIndex::new(n, a.l as i64, -(a.m as i64));
    let op = u_lm(n, a)?.kron(&u_lm(n, conj)?);
    let singlet = bell_vector(n, BellIndex::IDENTITY)?;
    let moved = op.apply(&singlet);
    Ok(moved
        .iter()
        .zip(singlet.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Array2<C64>, b: &Array2<C64>, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn mat(rows: &[&[(f64, f64)]]) -> Array2<C64> {
        let n = rows.len();
        Array2::from_shape_fn((n, n), |(r, c)| C64::new(rows[r][c].0, rows[r][c].1))
    }

    #[test]
    fn small_dimensions_rejected() {
        assert_eq!(pauli_x(1), Err(Error::InvalidDimension(1)));
        assert_eq!(pauli_z(0), Err(Error::InvalidDimension(0)));
    }

    #[test]
    fn bit_flip_for_qubits() {
        let x = pauli_x(2).unwrap();
        let expected = mat(&[&[(0., 0.), (1., 0.)], &[(1., 0.), (0., 0.)]]);
        assert!(close(x.as_array(), &expected, 0.0));
    }

    #[test]
    fn shift_and_order_three() {
        let x = pauli_x(3).unwrap();
        for j in 0..3 {
            let mut e = Array1::<C64>::zeros(3);
            e[j] = C64::one();
            let moved = x.apply(&e);
            assert_eq!(moved[(j + 1) % 3], C64::one());
        }
        let cube = x.pow(3);
        assert!(close(cube.as_array(), &Array2::eye(3), 1e-14));
    }

    #[test]
    fn clock_diagonals() {
        let z2 = pauli_z(2).unwrap();
        assert_eq!(z2.as_array()[[1, 1]], C64::new(-1.0, 0.0));
        let z4 = pauli_z(4).unwrap();
        let diag: Vec<C64> = (0..4).map(|j| z4.as_array()[[j, j]]).collect();
        assert_eq!(diag, vec![C64::one(), C64::i(), -C64::one(), -C64::i()]);
    }

    #[test]
    fn clock_shift_commutation() {
        let n = 3;
        let (x, z) = (pauli_x(n).unwrap(), pauli_z(n).unwrap());
        let zx = z.dot(&x);
        let xz = x.dot(&z).into_array().mapv(|v| v * omega_pow(n, 1));
        assert!(close(zx.as_array(), &xz, 1e-14));
    }

    #[test]
    fn u_lm_examples() {
        assert!(close(
            u_lm(3, BellIndex::IDENTITY).unwrap().as_array(),
            &Array2::eye(3),
            0.0
        ));
        let xz = u_lm(2, BellIndex::new(2, 1, 1)).unwrap();
        let expected = mat(&[&[(0., 0.), (-1., 0.)], &[(1., 0.), (0., 0.)]]);
        assert!(close(xz.as_array(), &expected, 1e-15));
        let u = u_lm(3, BellIndex::new(3, 1, 2)).unwrap();
        let direct = pauli_x(3).unwrap().dot(&pauli_z(3).unwrap().pow(2));
        assert!(close(u.as_array(), direct.as_array(), 1e-14));
    }

    #[test]
    fn compose_examples() {
        let p = compose(2, BellIndex::new(2, 0, 1), BellIndex::new(2, 1, 0));
        assert_eq!(p.index, BellIndex::new(2, 1, 1));
        assert_eq!(p.phase_exp, 1);

        for n in 2..5 {
            for b in BellIndex::all(n) {
                let p = compose(n, BellIndex::IDENTITY, b);
                assert_eq!((p.index, p.phase_exp), (b, 0));
            }
        }

        let (a, b) = (BellIndex::new(3, 2, 1), BellIndex::new(3, 2, 2));
        let p = compose(3, a, b);
        assert_eq!(p.index, BellIndex::new(3, 1, 0));
        assert_eq!(p.phase_exp, 2);
        // 3x3 matrix product, entry by entry
        let ua = u_lm(3, a).unwrap().into_array();
        let ub = u_lm(3, b).unwrap().into_array();
        let mut prod = Array2::<C64>::zeros((3, 3));
        for r in 0..3 {
            for c in 0..3 {
                for k in 0..3 {
                    prod[[r, c]] += ua[[r, k]] * ub[[k, c]];
                }
            }
        }
        let target = u_lm(3, BellIndex::new(3, 1, 0))
            .unwrap()
            .into_array()
            .mapv(|v| v * omega_pow(3, 2));
        assert!(close(&prod, &target, 1e-14));
    }

    #[test]
    fn singlet_vector_for_qubits() {
        let v = bell_vector(2, BellIndex::IDENTITY).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let expected = [h, 0.0, 0.0, h];
        for (x, e) in v.iter().zip(expected) {
            assert!((x - C64::new(e, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn shifted_bell_vector() {
        let v = bell_vector(3, BellIndex::new(3, 1, 0)).unwrap();
        let s = 1.0 / 3f64.sqrt();
        // |1>|0̄> + |2>|1̄> + |0>|2̄>
        for (idx, val) in v.iter().enumerate() {
            let expected = if [3, 7, 2].contains(&idx) { s } else { 0.0 };
            assert!(
                (val - C64::new(expected, 0.0)).norm() < 1e-15,
                "index {idx}"
            );
        }
    }

    #[test]
    fn conjugate_embedding_qubit() {
        let v0 = conjugate_embedding(2, 0, DEFAULT_MAX_EMBEDDING_DIM).unwrap();
        assert_eq!(v0.to_vec(), vec![C64::zero(), C64::one()]);
        let v1 = conjugate_embedding(2, 1, DEFAULT_MAX_EMBEDDING_DIM).unwrap();
        assert_eq!(v1.to_vec(), vec![-C64::one(), C64::zero()]);
    }

    #[test]
    fn conjugate_embedding_is_orthonormal() {
        for n in 2..=4 {
            let vs: Vec<_> = (0..n)
                .map(|j| conjugate_embedding(n, j, DEFAULT_MAX_EMBEDDING_DIM).unwrap())
                .collect();
            for i in 0..n {
                for j in 0..n {
                    // plain sum over ε-tensor entries
                    let ip: C64 = vs[i]
                        .iter()
                        .zip(vs[j].iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - C64::new(target, 0.0)).norm() < 1e-14);
                }
            }
        }
        assert_eq!(
            conjugate_embedding(5, 0, DEFAULT_MAX_EMBEDDING_DIM),
            Err(Error::DimensionTooLarge { n: 5, max: 4 })
        );
    }

    #[test]
    fn swap_identity_holds() {
        for n in 2..=4 {
            let r = swap_identity_residual(n, DEFAULT_MAX_EMBEDDING_DIM).unwrap();
            assert!(r < 1e-12, "n = {n}: residual {r:e}");
        }
    }

    #[test]
    fn singlet_invariance() {
        for n in 2..=5 {
            for a in BellIndex::all(n) {
                assert!(singlet_invariance_residual(n, a).unwrap() < 1e-13);
            }
        }
    }

    #[test]
    fn unitarity_and_bell_gram() {
        for n in 2..=5 {
            for a in BellIndex::all(n) {
                assert!(u_lm(n, a).unwrap().unitarity_defect() < 1e-12);
            }
            let vs: Vec<_> = BellIndex::all(n)
                .map(|a| bell_vector(n, a).unwrap())
                .collect();
            for (i, vi) in vs.iter().enumerate() {
                for (j, vj) in vs.iter().enumerate() {
                    let ip: C64 = vi.iter().zip(vj.iter()).map(|(a, b)| a.conj() * b).sum();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - C64::new(target, 0.0)).norm() < 1e-13);
                }
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn compose_matches_matrix_product(n in 2usize..6, la in 0i64..6, ma in 0i64..6, lb in 0i64..6, mb in 0i64..6) {
                let (a, b) = (BellIndex::new(n, la, ma), BellIndex::new(n, lb, mb));
                let p = compose(n, a, b);
                let lhs = u_lm(n, a).unwrap().dot(&u_lm(n, b).unwrap()).into_array();
                let rhs = u_lm(n, p.index).unwrap().into_array().mapv(|v| v * p.phase(n));
                prop_assert!(close(&lhs, &rhs, 1e-13));
            }

            #[test]
            fn index_arithmetic_is_modular(n in 2usize..9, l in -40i64..40, m in -40i64..40) {
                let a = BellIndex::new(n, l, m);
                prop_assert!(a.l < n && a.m < n);
                prop_assert!(a.add(a.neg(n), n).is_identity());
                prop_assert_eq!(BellIndex::from_linear(n, a.linear(n)), a);
            }
        }
    }
}
