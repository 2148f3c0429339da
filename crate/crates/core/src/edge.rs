//! Edge states of an open chain of `L` adjoint sites without boundary spins,
//! and the block density matrix rebuilt from them.
//!
//! `|p,q>` chains singlets through sites `1 … L-1` and closes on site `L` with
//! `P_{L L̄} (U_{p,q} U_{c_1} ⋯ U_{c_{L-1}} ⊗ I)|Φ_{0,0}>_{L L̄}`. The pair
//! `(L, L̄)` is written in the bulk labeling of [`crate::vbs`]: since
//! `|Φ_{l,m}>_{L L̄} = ω^{-lm} |Φ_{-l,m}>_{L̄ L}`, a closure index `s` becomes the
//! bulk label `-s` with an extra phase `ω^{-s_l s_m}`.

use ndarray::{Array1, Array2};
use num_traits::Zero;

use crate::closed_form::{self, BlockSpectrum};
use crate::oracle::DensityMatrix;
use crate::vbs::{adjoint_configs, adjoint_position, phase_fold, PureState, SiteKind};
use crate::weyl::{check_dim, omega_pow, BellIndex};
use crate::{Error, Result, C64};

/// Edge label `(p, q) ∈ Z_n × Z_n`.
pub type EdgeLabel = BellIndex;

fn check_size(n: usize, len: usize, budget: usize, what: &'static str) -> Result<usize> {
    check_dim(n)?;
    if len == 0 {
        return Err(Error::InvalidBlock(
            "edge states need at least one site".into(),
        ));
    }
    let k = (n * n - 1) as u128;
    let dim = (0..len)
        .try_fold(1u128, |acc, _| acc.checked_mul(k))
        .unwrap_or(u128::MAX);
    if dim > budget as u128 {
        return Err(Error::BudgetExceeded {
            what,
            required: dim,
            budget,
        });
    }
    Ok(dim as usize)
}

/// `λ_{-p,-q}(L)`: the weight of `|p,q>` in the block density matrix.
pub fn edge_weight(n: usize, len: usize, label: EdgeLabel) -> Result<f64> {
    let spec = closed_form::lambda_open(n, len)?;
    Ok(if label.neg(n).is_identity() {
        spec.singlet()
    } else {
        spec.adjoint()
    })
}

/// `|p,q>` with `C_{p,q} = 1`.
pub fn edge_state_unnormalized(
    n: usize,
    len: usize,
    label: EdgeLabel,
    budget: usize,
) -> Result<PureState> {
    let dim = check_size(n, len, budget, "edge state")?;
    let mut amps = Array1::<C64>::zeros(dim);
    for mut cfg in adjoint_configs(n, len - 1) {
        let mut string = Vec::with_capacity(len);
        string.push(label);
        string.extend_from_slice(&cfg);
        let closure = phase_fold(n, &string);
        let s = closure.index;
        if s.is_identity() {
            // removed by the adjoint projector on (L, L̄)
            continue;
        }
        let relabel = (n - (s.l * s.m) % n) % n;
        cfg.push(s.neg(n));
        amps[adjoint_position(n, &cfg)] = omega_pow(n, closure.phase_exp + relabel);
    }
    PureState::from_parts(n, vec![SiteKind::Adjoint; len], amps)
}

/// Normalized `|p,q>`, scaled by `C_{p,q} = ((n²-1)^L λ_{-p,-q}(L))^{-1/2}`.
///
/// For `L = 1` the state `|0,0>` is projected out entirely and is rejected.
pub fn edge_state(n: usize, len: usize, label: EdgeLabel, budget: usize) -> Result<PureState> {
    let weight = edge_weight(n, len, label)?;
    if weight == 0.0 {
        return Err(Error::NullEdgeState {
            p: label.l,
            q: label.m,
            len,
        });
    }
    let raw = edge_state_unnormalized(n, len, label, budget)?;
    let c = 1.0 / (((n * n - 1) as f64).powi(len as i32) * weight).sqrt();
    let amps = raw.amplitudes().mapv(|a| a * c);
    PureState::from_parts(n, raw.sites().to_vec(), amps)
}

/// The non-vanishing normalized edge states of a block of length `L`.
#[derive(Clone, Debug)]
pub struct EdgeBasis {
    pub n: usize,
    pub block_len: usize,
    pub states: Vec<(EdgeLabel, PureState)>,
}

impl EdgeBasis {
    pub fn build(n: usize, len: usize, budget: usize) -> Result<Self> {
        let mut states = Vec::with_capacity(n * n);
        for label in BellIndex::all(n) {
            match edge_state(n, len, label, budget) {
                Ok(s) => states.push((label, s)),
                Err(Error::NullEdgeState { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        Ok(EdgeBasis {
            n,
            block_len: len,
            states,
        })
    }

    /// Largest `|<a|b> - δ_ab|` over the basis.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, (_, a)) in self.states.iter().enumerate() {
            for (j, (_, b)) in self.states.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.inner(b) - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// `<p,q|ρ|p,q>` for every state in the basis.
    pub fn projections(&self, rho: &DensityMatrix) -> Vec<(EdgeLabel, f64)> {
        self.states
            .iter()
            .map(|(label, s)| {
                (
                    *label,
                    rho.expectation(s.amplitudes().as_slice().unwrap()).re,
                )
            })
            .collect()
    }

    /// `Σ w(p,q) |p,q><p,q|`.
    pub fn weighted_sum(&self, weight: impl Fn(EdgeLabel) -> f64) -> Array2<C64> {
        let dim = self.states.first().map_or(0, |(_, s)| s.amplitudes().len());
        let mut out = Array2::<C64>::zeros((dim, dim));
        for (label, s) in &self.states {
            let w = weight(*label);
            let v = s.amplitudes();
            let support: Vec<usize> = (0..dim).filter(|&i| !v[i].is_zero()).collect();
            for &r in &support {
                for &c in &support {
                    out[[r, c]] += v[r] * v[c].conj() * w;
                }
            }
        }
        out
    }
}

/// Gram matrix of the unnormalized edge states, rows and columns in the
/// linear order of `(p, q)`.
pub fn edge_gram(n: usize, len: usize, budget: usize) -> Result<Array2<C64>> {
    let states: Vec<PureState> = BellIndex::all(n)
        .map(|label| edge_state_unnormalized(n, len, label, budget))
        .collect::<Result<_>>()?;
    let d = n * n;
    Ok(Array2::from_shape_fn((d, d), |(r, c)| {
        states[r].inner(&states[c])
    }))
}

/// `ρ_L = Σ_{(p,q)} λ_{-p,-q}(L) |p,q><p,q|`.
pub fn reconstruct_rho(n: usize, len: usize, matrix_budget: usize) -> Result<DensityMatrix> {
    check_size(n, len, matrix_budget, "dense density matrix")?;
    let basis = EdgeBasis::build(n, len, matrix_budget)?;
    let rho = basis.weighted_sum(|label| edge_weight(n, len, label).unwrap_or(0.0));
    DensityMatrix::new(vec![n * n - 1; len], rho)
}

/// Frobenius distance between `ρ_L` and the uniform edge projector
/// `(1/n²) Σ |p,q><p,q|`. At `L = 1` the sum runs over the `n²-1` surviving
/// states only.
pub fn projector_limit_residual(n: usize, len: usize, matrix_budget: usize) -> Result<f64> {
    check_size(n, len, matrix_budget, "dense density matrix")?;
    let basis = EdgeBasis::build(n, len, matrix_budget)?;
    let rho = reconstruct_rho(n, len, matrix_budget)?;
    let uniform = basis.weighted_sum(|_| 1.0 / (n * n) as f64);
    Ok(rho.frobenius_distance(&uniform))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{reduced_density, schmidt_spectrum};
    use crate::vbs::{open_vbs_state, periodic_vbs_state, ChainSpec};
    use crate::{DEFAULT_AMPLITUDE_BUDGET as AMPS, DEFAULT_MATRIX_BUDGET as MAT};

    #[test]
    fn single_site_edge_states() {
        // |0,0> is projected out, the three others are single adjoint labels
        assert!(matches!(
            edge_state(2, 1, BellIndex::IDENTITY, AMPS),
            Err(Error::NullEdgeState { p: 0, q: 0, len: 1 })
        ));
        let raw = edge_state_unnormalized(2, 1, BellIndex::IDENTITY, AMPS).unwrap();
        assert_eq!(raw.norm(), 0.0);
        let basis = EdgeBasis::build(2, 1, AMPS).unwrap();
        assert_eq!(basis.states.len(), 3);
        assert!(basis.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn normalization_constants() {
        for label in BellIndex::all(2) {
            let s = edge_state(2, 2, label, AMPS).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-11);
        }
        let basis = EdgeBasis::build(2, 3, AMPS).unwrap();
        assert_eq!(basis.states.len(), 4);
        assert!(basis.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn gram_diagonal() {
        let g = edge_gram(2, 2, AMPS).unwrap();
        // 9·λ_singlet(2) = 3, 9·λ_adjoint(2) = 2
        assert!((g[[0, 0]].re - 3.0).abs() < 1e-12);
        for i in 1..4 {
            assert!((g[[i, i]].re - 2.0).abs() < 1e-12);
        }
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert!(g[[r, c]].norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gram_uses_negated_label() {
        let (n, len) = (3, 2);
        let g = edge_gram(n, len, AMPS).unwrap();
        let k = (n * n - 1) as f64;
        for label in BellIndex::all(n) {
            let i = label.linear(n);
            let want = k.powi(len as i32) * edge_weight(n, len, label).unwrap();
            assert!((g[[i, i]].re - want).abs() <= 1e-9 * want.max(1.0));
        }
    }

    #[test]
    fn reconstruction_matches_oracle() {
        for (n, len) in [(2, 2), (3, 2), (2, 3)] {
            let spec = ChainSpec::open(n, len + 1).unwrap();
            let state = open_vbs_state(&spec).unwrap();
            let oracle = reduced_density(&state, spec.block(1, len).unwrap(), MAT).unwrap();
            let rebuilt = reconstruct_rho(n, len, MAT).unwrap();
            assert!((rebuilt.trace() - 1.0).abs() < 1e-12);
            assert!(
                rebuilt.frobenius_distance(oracle.matrix()) < 1e-10,
                "n={n} L={len}"
            );
        }
    }

    #[test]
    fn singlet_weight_sits_on_trivial_label() {
        let (n, len) = (2, 3);
        let spec = ChainSpec::open(n, 5).unwrap();
        let state = open_vbs_state(&spec).unwrap();
        let rho = reduced_density(&state, spec.block(2, len).unwrap(), MAT).unwrap();
        let basis = EdgeBasis::build(n, len, MAT).unwrap();
        let open = closed_form::lambda_open(n, len).unwrap();
        for (label, w) in basis.projections(&rho) {
            let want = if label.is_identity() {
                open.singlet
            } else {
                open.adjoint
            };
            assert!((w - want).abs() < 1e-12, "{label}: {w} vs {want}");
        }
    }

    #[test]
    fn periodic_block_is_diagonal_in_edge_basis() {
        let (n, sites, len) = (2, 5, 2);
        let spec = ChainSpec::periodic(n, sites).unwrap();
        let state = periodic_vbs_state(&spec).unwrap();
        let rho = reduced_density(&state, spec.block(1, len).unwrap(), MAT).unwrap();
        let basis = EdgeBasis::build(n, len, MAT).unwrap();
        let ring = closed_form::lambda_periodic(n, sites, len).unwrap();
        let rebuilt = basis.weighted_sum(|l| {
            if l.is_identity() {
                ring.singlet
            } else {
                ring.adjoint
            }
        });
        assert!(rho.frobenius_distance(&rebuilt) < 1e-12);
        let s = schmidt_spectrum(&state, spec.block(1, len).unwrap(), MAT).unwrap();
        assert!((s.eigenvalues()[0] - ring.singlet.max(ring.adjoint)).abs() < 1e-12);
    }

    #[test]
    fn projector_residual_decay() {
        let r2 = projector_limit_residual(2, 2, MAT).unwrap();
        let r4 = projector_limit_residual(2, 4, MAT).unwrap();
        assert!(r2 > 0.0);
        let ratio = r4 / r2;
        assert!(ratio > 1.0 / 18.0 && ratio < 2.0 / 9.0, "ratio {ratio}");
        // eigenvalue arithmetic: |p| sqrt(n²-1) / n
        for len in 2..6 {
            let p = closed_form::p_n(2, len).unwrap().abs();
            let r = projector_limit_residual(2, len, MAT).unwrap();
            assert!((r - p * 3f64.sqrt() / 2.0).abs() < 1e-12, "{len} {r} {p}");
            assert!(r <= 2.0 * p * 3f64.sqrt());
        }
    }

    #[test]
    fn budget_errors() {
        assert!(matches!(
            edge_state_unnormalized(3, 4, BellIndex::IDENTITY, 100),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            reconstruct_rho(3, 3, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
