//! Analytic block spectra and entropies.
//!
//! A block of `L` contiguous adjoint sites has at most `n²` nonzero
//! eigenvalues: one "singlet" value and an `(n²-1)`-fold "adjoint" value,
//!
//! ```text
//! p_n(L)       = (-1/(n²-1))^L
//! λ_singlet(L) = (1 + (n²-1) p_n(L)) / n²
//! λ_adjoint(L) = (1 - p_n(L)) / n²
//! ```
//!
//! and on a ring of `N` sites
//!
//! ```text
//! λ_singlet(N,L) = (1 + (n²-1)p(N-L)) (1 + (n²-1)p(L)) / (n² (1 + (n²-1)p(N)))
//! λ_adjoint(N,L) = (1 - p(N-L)) (1 - p(L)) / (n² (1 + (n²-1)p(N)))
//! ```
//!
//! Both are computed in exact rational arithmetic and converted to `f64`
//! only for entropies.

use std::ops::RangeInclusive;

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::oracle::{self, Alpha, BRANCH_POINT_TOLERANCE};
use crate::weyl::check_dim;
use crate::{Error, Result, C64};

/// Below this gap between the two eigenvalues the branch-point formula is refused.
pub const DEGENERACY_THRESHOLD: f64 = 1e-15;

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

fn adjoint_dim(n: usize) -> i64 {
    (n * n - 1) as i64
}

/// `p_n(L) = (-1/(n²-1))^L`, exactly.
pub fn p_n_exact(n: usize, len: usize) -> BigRational {
    let base = rational(-1, adjoint_dim(n));
    num_traits::pow(base, len)
}

/// `p_n(L)` as a double.
pub fn p_n(n: usize, len: usize) -> Result<f64> {
    check_dim(n)?;
    Ok(to_f64(&p_n_exact(n, len)))
}

/// The two distinct eigenvalues of a block density matrix, exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPair {
    pub singlet: BigRational,
    pub adjoint: BigRational,
}

impl ExactPair {
    pub fn trace(&self, n: usize) -> BigRational {
        &self.singlet + &self.adjoint * BigInt::from(adjoint_dim(n))
    }
}

fn open_exact(n: usize, len: usize) -> ExactPair {
    let nsq = BigInt::from((n * n) as i64);
    let k = BigInt::from(adjoint_dim(n));
    let p = p_n_exact(n, len);
    ExactPair {
        singlet: (BigRational::one() + &p * k) / nsq.clone(),
        adjoint: (BigRational::one() - p) / nsq,
    }
}

fn periodic_exact(n: usize, sites: usize, len: usize) -> ExactPair {
    let nsq = BigInt::from((n * n) as i64);
    let k = BigInt::from(adjoint_dim(n));
    let (p_rest, p_len, p_all) = (
        p_n_exact(n, sites - len),
        p_n_exact(n, len),
        p_n_exact(n, sites),
    );
    let denom = (BigRational::one() + &p_all * k.clone()) * nsq;
    ExactPair {
        singlet: (BigRational::one() + &p_rest * k.clone()) * (BigRational::one() + &p_len * k)
            / denom.clone(),
        adjoint: (BigRational::one() - p_rest) * (BigRational::one() - p_len) / denom,
    }
}

/// Shared behaviour of the open and periodic block spectra.
pub trait BlockSpectrum {
    fn n(&self) -> usize;
    fn singlet(&self) -> f64;
    fn adjoint(&self) -> f64;

    /// All `n²` eigenvalues, descending.
    fn eigenvalues(&self) -> Vec<f64> {
        let mut ev = vec![self.adjoint(); self.n() * self.n() - 1];
        ev.push(self.singlet());
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    fn trace(&self) -> f64 {
        self.singlet() + (self.n() * self.n() - 1) as f64 * self.adjoint()
    }

    /// `-λ_s log λ_s - (n²-1) λ_a log λ_a`.
    fn entropy(&self) -> f64 {
        let k = (self.n() * self.n() - 1) as f64;
        -xlogx(self.singlet()) - k * xlogx(self.adjoint())
    }

    fn renyi(&self, alpha: f64) -> Result<f64> {
        Alpha::Real(alpha).validate()?;
        let k = (self.n() * self.n() - 1) as f64;
        let sum = pow_or_zero(self.singlet(), alpha) + k * pow_or_zero(self.adjoint(), alpha);
        Ok(sum.ln() / (1.0 - alpha))
    }

    fn renyi_complex(&self, alpha: C64) -> Result<C64> {
        Alpha::Complex(alpha).validate()?;
        let sum = power_sum(self.n(), self.singlet(), self.adjoint(), alpha);
        if sum.norm() < BRANCH_POINT_TOLERANCE {
            return Err(Error::BranchPoint(Alpha::Complex(alpha).to_string()));
        }
        Ok(sum.ln() / (1.0 - alpha))
    }

    fn renyi_alpha(&self, alpha: Alpha) -> Result<C64> {
        match alpha {
            Alpha::Real(a) => self.renyi(a).map(|v| C64::new(v, 0.0)),
            Alpha::Complex(z) => self.renyi_complex(z),
        }
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

fn pow_or_zero(x: f64, alpha: f64) -> f64 {
    if x > 0.0 {
        x.powf(alpha)
    } else {
        0.0
    }
}

fn cpow_or_zero(x: f64, alpha: C64) -> C64 {
    if x > 0.0 {
        (alpha * x.ln()).exp()
    } else {
        C64::zero()
    }
}

fn power_sum(n: usize, singlet: f64, adjoint: f64, alpha: C64) -> C64 {
    cpow_or_zero(singlet, alpha) + cpow_or_zero(adjoint, alpha) * (n * n - 1) as f64
}

/// Spectrum of a block of `L` sites in the open chain (independent of `N`
/// and of where the block starts).
#[derive(Clone, Debug, PartialEq)]
pub struct OpenSpectrum {
    pub n: usize,
    pub block_len: usize,
    pub singlet: f64,
    pub adjoint: f64,
}

impl BlockSpectrum for OpenSpectrum {
    fn n(&self) -> usize {
        self.n
    }
    fn singlet(&self) -> f64 {
        self.singlet
    }
    fn adjoint(&self) -> f64 {
        self.adjoint
    }

    /// `2 log n` minus [`entropy_deficit_open`], which stays accurate when the
    /// two eigenvalues are nearly degenerate.
    fn entropy(&self) -> f64 {
        2.0 * (self.n as f64).ln() - open_deficit(self.n, self.block_len)
    }
}

/// Spectrum of a block of `L` sites on a ring of `N` sites.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicSpectrum {
    pub n: usize,
    pub sites: usize,
    pub block_len: usize,
    pub singlet: f64,
    pub adjoint: f64,
}

impl BlockSpectrum for PeriodicSpectrum {
    fn n(&self) -> usize {
        self.n
    }
    fn singlet(&self) -> f64 {
        self.singlet
    }
    fn adjoint(&self) -> f64 {
        self.adjoint
    }
}

fn check_block(len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::InvalidBlock(
            "block length must be at least 1".into(),
        ));
    }
    Ok(())
}

pub fn lambda_open_exact(n: usize, len: usize) -> Result<ExactPair> {
    check_dim(n)?;
    check_block(len)?;
    Ok(open_exact(n, len))
}

pub fn lambda_open(n: usize, len: usize) -> Result<OpenSpectrum> {
    let exact = lambda_open_exact(n, len)?;
    Ok(OpenSpectrum {
        n,
        block_len: len,
        singlet: to_f64(&exact.singlet),
        adjoint: to_f64(&exact.adjoint),
    })
}

pub fn lambda_periodic_exact(n: usize, sites: usize, len: usize) -> Result<ExactPair> {
    check_dim(n)?;
    check_block(len)?;
    if len > sites {
        return Err(Error::InvalidBlock(format!(
            "block of {len} sites does not fit in a ring of {sites}"
        )));
    }
    Ok(periodic_exact(n, sites, len))
}

pub fn lambda_periodic(n: usize, sites: usize, len: usize) -> Result<PeriodicSpectrum> {
    let exact = lambda_periodic_exact(n, sites, len)?;
    Ok(PeriodicSpectrum {
        n,
        sites,
        block_len: len,
        singlet: to_f64(&exact.singlet),
        adjoint: to_f64(&exact.adjoint),
    })
}

/// `𝒩² = (n²-1)^N (1 + (n²-1) p_n(N)) / n²`, the squared norm of the
/// unnormalized periodic state.
pub fn periodic_norm_sq(n: usize, sites: usize) -> f64 {
    let k = BigInt::from(adjoint_dim(n));
    let scale = num_traits::pow(k.clone(), sites);
    let value =
        (BigRational::one() + p_n_exact(n, sites) * k) * scale / BigInt::from((n * n) as i64);
    to_f64(&value)
}

/// `g(y) = (1+y) log(1+y) - y`, by its Taylor series near 0.
fn xlog_excess(y: f64) -> f64 {
    if y == -1.0 {
        return 1.0;
    }
    if y.abs() >= 0.5 {
        return (1.0 + y) * y.ln_1p() - y;
    }
    // Σ_{k≥2} (-1)^k y^k / (k(k-1))
    let mut sum = 0.0;
    let mut power = y * y;
    for k in 2..400 {
        let kf = k as f64;
        let term = power / (kf * (kf - 1.0));
        sum += if k % 2 == 0 { term } else { -term };
        if term.abs() <= 1e-18 * sum.abs() {
            break;
        }
        power *= y;
    }
    sum
}

fn open_deficit(n: usize, len: usize) -> f64 {
    let nsq = (n * n) as f64;
    let k = nsq - 1.0;
    let x = to_f64(&p_n_exact(n, len));
    (xlog_excess(k * x) + k * xlog_excess(-x)) / nsq
}

/// `2 log n - S(ρ_L)` for the open chain, accurate to full relative
/// precision even when it is far below `2 log n · ε`.
pub fn entropy_deficit_open(n: usize, len: usize) -> Result<f64> {
    check_dim(n)?;
    check_block(len)?;
    Ok(open_deficit(n, len))
}

/// `S(ρ_L) = 2 log n - ((1+(n²-1)p)/n²) log(1+(n²-1)p) - (n²-1)((1-p)/n²) log(1-p)`.
pub fn entropy_open(n: usize, len: usize) -> Result<f64> {
    Ok(lambda_open(n, len)?.entropy())
}

pub fn renyi_open(n: usize, len: usize, alpha: Alpha) -> Result<C64> {
    lambda_open(n, len)?.renyi_alpha(alpha)
}

pub fn entropy_periodic(n: usize, sites: usize, len: usize) -> Result<f64> {
    Ok(lambda_periodic(n, sites, len)?.entropy())
}

pub fn renyi_periodic(n: usize, sites: usize, len: usize, alpha: Alpha) -> Result<C64> {
    lambda_periodic(n, sites, len)?.renyi_alpha(alpha)
}

/// A zero of `λ_s^α + (n²-1) λ_a^α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchPoint {
    pub alpha: C64,
    pub m: u32,
    /// Sign in front of `(2m+1)πi`.
    pub sign: i8,
    pub even_block: bool,
}

impl BranchPoint {
    /// Real part positive for even blocks, negative for odd ones.
    pub fn parity_ok(&self) -> bool {
        if self.even_block {
            self.alpha.re > 0.0
        } else {
            self.alpha.re < 0.0
        }
    }
}

/// `α = (±(2m+1)πi + log(n²-1)) / log(λ_s / λ_a)` for each `m` and both signs.
pub fn branch_points(
    n: usize,
    len: usize,
    m_range: RangeInclusive<u32>,
) -> Result<Vec<BranchPoint>> {
    let spec = lambda_open(n, len)?;
    if len == 1 {
        return Err(Error::SingleSiteBranchPoints);
    }
    let gap = (spec.singlet - spec.adjoint).abs();
    if gap < DEGENERACY_THRESHOLD {
        return Err(Error::DegenerateSpectrum(gap));
    }
    let k = (n * n - 1) as f64;
    let log_ratio = log_eigenvalue_ratio(n, len);
    let mut out = Vec::new();
    for m in m_range {
        for sign in [1i8, -1] {
            let numerator = C64::new(
                k.ln(),
                sign as f64 * (2 * m + 1) as f64 * std::f64::consts::PI,
            );
            out.push(BranchPoint {
                alpha: numerator / log_ratio,
                m,
                sign,
                even_block: len.is_multiple_of(2),
            });
        }
    }
    Ok(out)
}

/// `log(λ_s/λ_a) = log(1+(n²-1)p) - log(1-p)`, accurate for tiny `p`.
fn log_eigenvalue_ratio(n: usize, len: usize) -> f64 {
    let k = (n * n - 1) as f64;
    let p = to_f64(&p_n_exact(n, len));
    (k * p).ln_1p() - (-p).ln_1p()
}

/// `|λ_s^α + (n²-1) λ_a^α|` for the open block of length `len`; infinite
/// when the terms overflow a double.
pub fn power_sum_residual(n: usize, len: usize, alpha: C64) -> Result<f64> {
    let spec = lambda_open(n, len)?;
    let r = power_sum(n, spec.singlet, spec.adjoint, alpha).norm();
    Ok(if r.is_nan() { f64::INFINITY } else { r })
}

/// `|λ_s^α + (n²-1) λ_a^α| / (λ_s^{Re α} + (n²-1) λ_a^{Re α})`, evaluated in
/// log space so it stays finite when `|λ^α|` overflows.
pub fn relative_power_sum_residual(n: usize, len: usize, alpha: C64) -> Result<f64> {
    check_dim(n)?;
    check_block(len)?;
    let k = (n * n - 1) as f64;
    let log_ratio = log_eigenvalue_ratio(n, len);
    // factor out λ_a^α: λ_a^α ((λ_s/λ_a)^α + k)
    let inner = (alpha * log_ratio).exp() + k;
    let scale = (alpha.re * log_ratio).exp() + k;
    Ok(inner.norm() / scale)
}

/// The `n² × n²` matrix with zeros on the diagonal and ones elsewhere.
pub fn transfer_matrix(n: usize) -> Result<Array2<f64>> {
    check_dim(n)?;
    let d = n * n;
    Ok(Array2::from_shape_fn((d, d), |(r, c)| {
        if r == c {
            0.0
        } else {
            1.0
        }
    }))
}

/// `U_c[j][k] = ζ^{jk} / n` with `ζ = exp(2πi/n²)`.
pub fn fourier_unitary(n: usize) -> Result<Array2<C64>> {
    check_dim(n)?;
    let d = n * n;
    Ok(Array2::from_shape_fn((d, d), |(j, k)| {
        C64::from_polar(
            1.0 / n as f64,
            2.0 * std::f64::consts::PI * ((j * k) % d) as f64 / d as f64,
        )
    }))
}

/// `U_c† T U_c`: its diagonal (real parts) and the largest off-diagonal modulus.
pub fn transfer_diagonalized(n: usize) -> Result<(Vec<f64>, f64)> {
    let t = transfer_matrix(n)?.mapv(|x| C64::new(x, 0.0));
    let u = fourier_unitary(n)?;
    let uh = u.t().mapv(|z| z.conj());
    let dmat = uh.dot(&t).dot(&u);
    let d = n * n;
    let diag = (0..d).map(|i| dmat[[i, i]].re).collect();
    let off = (0..d)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .filter(|(r, c)| r != c)
        .map(|(r, c)| dmat[[r, c]].norm())
        .fold(0.0, f64::max);
    Ok((diag, off))
}

/// Reads the two-end-spin spectrum off `T^L e_{(0,0)} / (n²-1)^L`.
///
/// Each application of `T` is normalized by `n²-1`, so entries stay bounded.
pub fn two_spin_rdm_transfer(n: usize, len: usize) -> Result<OpenSpectrum> {
    check_block(len)?;
    let t = transfer_matrix(n)?;
    let d = n * n;
    let k = (d - 1) as f64;
    let mut v = vec![0.0; d];
    v[0] = 1.0;
    for _ in 0..len {
        v = (0..d)
            .map(|r| (0..d).map(|c| t[[r, c]] * v[c]).sum::<f64>() / k)
            .collect();
    }
    let adjoint = v[1];
    let spread = v[1..]
        .iter()
        .map(|x| (x - adjoint).abs())
        .fold(0.0, f64::max);
    if spread > 1e-12 {
        return Err(Error::InvalidBlock(format!(
            "adjoint weights are not uniform (spread {spread:e})"
        )));
    }
    Ok(OpenSpectrum {
        n,
        block_len: len,
        singlet: v[0],
        adjoint,
    })
}

/// Eigenvalues of `T` through the Jacobi solver, for cross-checking
/// [`transfer_diagonalized`].
pub fn transfer_spectrum(n: usize) -> Result<Vec<f64>> {
    let t = transfer_matrix(n)?.mapv(|x| C64::new(x, 0.0));
    let mut ev = oracle::hermitian_eigenvalues(&t, oracle::DEFAULT_MAX_SWEEPS)?;
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(ev)
}

/// Converts an entropy in nats to another logarithm base.
pub fn rescale_entropy(nats: f64, base: f64) -> f64 {
    nats / base.ln()
}
