//! Brute-force reference path: partial traces of explicit state vectors,
//! a cyclic Jacobi eigensolver for Hermitian matrices, and entropies of the
//! resulting spectra. Nothing here uses the analytic block spectra.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use ndarray::Array2;
use num_traits::Zero;
use rayon::prelude::*;

use crate::vbs::PureState;
use crate::{Error, Result, C64};

/// Eigenvalues in `[-CLAMP_TOLERANCE, 0)` are set to zero; anything lower is an error.
pub const CLAMP_TOLERANCE: f64 = 1e-12;
/// Positive eigenvalues below this are treated as structural zeros in power sums.
pub const ZERO_EIGENVALUE: f64 = 1e-14;
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
pub const TRACE_TOLERANCE: f64 = 1e-12;
pub const SPECTRUM_SUM_TOLERANCE: f64 = 1e-10;
pub const JACOBI_TOLERANCE: f64 = 1e-13;
pub const DEFAULT_MAX_SWEEPS: usize = 100;
/// Relative tolerance for grouping equal eigenvalues in reports.
pub const MULTIPLICITY_TOLERANCE: f64 = 1e-9;
/// `|Tr ρ^α|` below this signals a branch point.
pub const BRANCH_POINT_TOLERANCE: f64 = 1e-14;

/// Hermitian, unit-trace matrix over the basis of a block of tensor factors.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    matrix: Array2<C64>,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, matrix: Array2<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidBlock(format!(
                "matrix is {}x{}, basis has dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOLERANCE {
            return Err(Error::NotHermitian(dev));
        }
        let trace: f64 = (0..d).map(|i| matrix[[i, i]].re).sum();
        if (trace - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::NotNormalized(trace));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[[i, i]].re).sum()
    }

    pub fn frobenius_distance(&self, other: &Array2<C64>) -> f64 {
        self.matrix
            .iter()
            .zip(other.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<v|ρ|v>`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let d = self.dim();
        let mut acc = C64::zero();
        for r in 0..d {
            if v[r].is_zero() {
                continue;
            }
            let row: C64 = (0..d).map(|c| self.matrix[[r, c]] * v[c]).sum();
            acc += v[r].conj() * row;
        }
        acc
    }
}

fn hermitian_deviation(m: &Array2<C64>) -> f64 {
    let d = m.nrows();
    let mut dev: f64 = 0.0;
    for r in 0..d {
        for c in r..d {
            dev = dev.max((m[[r, c]] - m[[c, r]].conj()).norm());
        }
    }
    dev
}

/// Sorted spectrum of a density matrix with its von Neumann entropy.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    eigenvalues: Vec<f64>,
    entropy: f64,
}

impl SpectrumReport {
    /// Sorts descending, clamps tiny negatives and checks normalization.
    pub fn from_eigenvalues(mut eigenvalues: Vec<f64>) -> Result<Self> {
        for ev in eigenvalues.iter_mut() {
            if *ev < -CLAMP_TOLERANCE {
                return Err(Error::NegativeEigenvalue(*ev));
            }
            if *ev < 0.0 {
                *ev = 0.0;
            }
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let sum: f64 = eigenvalues.iter().sum();
        if (sum - 1.0).abs() > SPECTRUM_SUM_TOLERANCE {
            return Err(Error::NotNormalized(sum));
        }
        let entropy = entropy_of(&eigenvalues);
        Ok(SpectrumReport {
            eigenvalues,
            entropy,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Nonzero part of the spectrum.
    pub fn support(&self) -> &[f64] {
        let k = self
            .eigenvalues
            .iter()
            .take_while(|&&v| v > ZERO_EIGENVALUE)
            .count();
        &self.eigenvalues[..k]
    }

    /// The spectrum truncated or zero-padded to `len` entries.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.eigenvalues.iter().copied().take(len).collect();
        out.resize(len, 0.0);
        out
    }

    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    /// `(value, multiplicity)` groups, descending. Reporting only.
    pub fn multiplicities(&self) -> Vec<(f64, usize)> {
        let mut groups: Vec<(f64, usize)> = Vec::new();
        for &v in &self.eigenvalues {
            match groups.last_mut() {
                Some((head, count))
                    if (*head - v).abs()
                        <= MULTIPLICITY_TOLERANCE
                            * head.abs().max(v.abs()).max(f64::MIN_POSITIVE)
                        || (head.abs() <= ZERO_EIGENVALUE && v.abs() <= ZERO_EIGENVALUE) =>
                {
                    *count += 1
                }
                _ => groups.push((v, 1)),
            }
        }
        groups
    }
}

fn entropy_of(eigenvalues: &[f64]) -> f64 {
    -eigenvalues
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Rényi index, real or complex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Alpha {
    Real(f64),
    Complex(C64),
}

impl Alpha {
    pub fn as_complex(self) -> C64 {
        match self {
            Alpha::Real(a) => C64::new(a, 0.0),
            Alpha::Complex(z) => z,
        }
    }

    /// Rejects `α = 1` and `Re α ≤ 0`.
    pub fn validate(self) -> Result<Self> {
        let z = self.as_complex();
        if z.re == 1.0 && z.im == 0.0 {
            return Err(Error::AlphaIsOne);
        }
        if z.re.is_nan() || z.re <= 0.0 || !z.im.is_finite() {
            return Err(Error::InvalidAlpha(self.to_string()));
        }
        Ok(self)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Real(a) => write!(f, "{a}"),
            Alpha::Complex(z) if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) => {
                write!(f, "{}-{}i", z.re, -z.im)
            }
            Alpha::Complex(z) => write!(f, "{}+{}i", z.re, z.im),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// Accepts `2`, `0.5`, `1.5+2i`, `1.5-2i`, `3i`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidAlpha(s.to_string());
        let s = s.trim();
        let Some(body) = s.strip_suffix('i') else {
            return s.parse::<f64>().map(Alpha::Real).map_err(|_| bad());
        };
        // split at the last sign that is not a leading sign or an exponent sign
        let bytes = body.as_bytes();
        let split = (1..bytes.len()).rev().find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
        });
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            other => other,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.trim_start_matches('+').parse().map_err(|_| bad())?;
        Ok(Alpha::Complex(C64::new(re, im)))
    }
}

/// `-Σ λ log λ` in nats.
pub fn von_neumann(s: &SpectrumReport) -> f64 {
    s.entropy
}

/// `Σ_{λ > 0} λ^α` with principal powers `exp(α log λ)`.
pub fn power_sum(eigenvalues: &[f64], alpha: C64) -> C64 {
    eigenvalues
        .iter()
        .filter(|&&v| v > ZERO_EIGENVALUE)
        .map(|&v| (alpha * v.ln()).exp())
        .sum()
}

/// Real Rényi entropy `(1-α)^{-1} log Σ λ^α`.
pub fn renyi(s: &SpectrumReport, alpha: f64) -> Result<f64> {
    Alpha::Real(alpha).validate()?;
    let sum: f64 = s
        .eigenvalues
        .iter()
        .filter(|&&v| v > ZERO_EIGENVALUE)
        .map(|&v| v.powf(alpha))
        .sum();
    Ok(sum.ln() / (1.0 - alpha))
}

/// Rényi entropy continued to complex `α` (principal logarithm).
pub fn renyi_complex(s: &SpectrumReport, alpha: C64) -> Result<C64> {
    Alpha::Complex(alpha).validate()?;
    let sum = power_sum(&s.eigenvalues, alpha);
    if sum.norm() < BRANCH_POINT_TOLERANCE {
        return Err(Error::BranchPoint(Alpha::Complex(alpha).to_string()));
    }
    Ok(sum.ln() / (1.0 - alpha))
}

/// Real or complex Rényi entropy, returned as a complex number.
pub fn renyi_alpha(s: &SpectrumReport, alpha: Alpha) -> Result<C64> {
    match alpha {
        Alpha::Real(a) => renyi(s, a).map(|v| C64::new(v, 0.0)),
        Alpha::Complex(z) => renyi_complex(s, z),
    }
}

/// Shape of a contiguous cut: left environment, block, right environment.
struct Cut {
    left: usize,
    block: usize,
    right: usize,
    block_dims: Vec<usize>,
}

fn cut(state: &PureState, block: &Range<usize>) -> Result<Cut> {
    let dims = state.dims();
    if block.start >= block.end || block.end > dims.len() {
        return Err(Error::InvalidBlock(format!(
            "block {}..{} is empty or outside {} tensor factors",
            block.start,
            block.end,
            dims.len()
        )));
    }
    Ok(Cut {
        left: dims[..block.start].iter().product(),
        block: dims[block.clone()].iter().product(),
        right: dims[block.end..].iter().product(),
        block_dims: dims[block.clone()].to_vec(),
    })
}

fn check_budget(required: usize, budget: usize) -> Result<()> {
    if required > budget {
        return Err(Error::BudgetExceeded {
            what: "dense density matrix",
            required: required as u128,
            budget,
        });
    }
    Ok(())
}

/// Gram matrix `G[i][j] = Σ_k v_i[k] conj(v_j[k])` of the rows of `slices`.
/// Entries are summed sequentially, so results do not depend on thread count.
fn gram(slices: &[Vec<C64>]) -> Array2<C64> {
    let d = slices.len();
    let rows: Vec<Vec<C64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let vi = &slices[i];
            (0..d)
                .map(|j| {
                    if j < i {
                        return C64::zero();
                    }
                    vi.iter()
                        .zip(slices[j].iter())
                        .map(|(a, b)| a * b.conj())
                        .sum()
                })
                .collect()
        })
        .collect();
    let mut g = Array2::zeros((d, d));
    for i in 0..d {
        for j in i..d {
            g[[i, j]] = rows[i][j];
            g[[j, i]] = rows[i][j].conj();
        }
    }
    g
}

fn block_slices(state: &PureState, c: &Cut) -> Vec<Vec<C64>> {
    let amps = state.amplitudes();
    (0..c.block)
        .map(|k| {
            let mut v = Vec::with_capacity(c.left * c.right);
            for l in 0..c.left {
                let base = (l * c.block + k) * c.right;
                v.extend((0..c.right).map(|r| amps[base + r]));
            }
            v
        })
        .collect()
}

fn environment_slices(state: &PureState, c: &Cut) -> Vec<Vec<C64>> {
    let amps = state.amplitudes();
    let mut out = Vec::with_capacity(c.left * c.right);
    for l in 0..c.left {
        for r in 0..c.right {
            out.push(
                (0..c.block)
                    .map(|k| amps[(l * c.block + k) * c.right + r])
                    .collect(),
            );
        }
    }
    out
}

/// `Tr_{complement} |ψ><ψ|` for the contiguous tensor factors in `block`.
pub fn reduced_density(
    state: &PureState,
    block: Range<usize>,
    matrix_budget: usize,
) -> Result<DensityMatrix> {
    let c = cut(state, &block)?;
    check_budget(c.block, matrix_budget)?;
    let rho = gram(&block_slices(state, &c));
    DensityMatrix::new(c.block_dims, rho)
}

/// Reduced density matrix of everything outside `block`, with the left and
/// right environments fused as `(left, right)`.
pub fn environment_density(
    state: &PureState,
    block: Range<usize>,
    matrix_budget: usize,
) -> Result<DensityMatrix> {
    let c = cut(state, &block)?;
    let env = c.left * c.right;
    check_budget(env, matrix_budget)?;
    let rho = gram(&environment_slices(state, &c));
    DensityMatrix::new(vec![env], rho)
}

/// Schmidt spectrum of the cut `block | complement`, diagonalizing whichever
/// side is smaller. Only the smaller side's eigenvalues are returned; compare
/// zero-padded with [`SpectrumReport::padded`].
pub fn schmidt_spectrum(
    state: &PureState,
    block: Range<usize>,
    matrix_budget: usize,
) -> Result<SpectrumReport> {
    let c = cut(state, &block)?;
    let env = c.left * c.right;
    if c.block.min(env) > matrix_budget {
        return Err(Error::BudgetExceeded {
            what: "Schmidt Gram matrix",
            required: c.block.min(env) as u128,
            budget: matrix_budget,
        });
    }
    let rho = if c.block <= env {
        gram(&block_slices(state, &c))
    } else {
        gram(&environment_slices(state, &c))
    };
    let dim = rho.nrows();
    hermitian_spectrum(&DensityMatrix::new(vec![dim], rho)?)
}

/// Eigenvalues of a density matrix, clamped and sorted descending.
pub fn hermitian_spectrum(m: &DensityMatrix) -> Result<SpectrumReport> {
    let ev = hermitian_eigenvalues(m.matrix(), DEFAULT_MAX_SWEEPS)?;
    SpectrumReport::from_eigenvalues(ev)
}

/// Eigenvalues (unsorted) of a Hermitian matrix by cyclic complex Jacobi
/// rotations, iterated until the off-diagonal Frobenius norm drops below
/// `JACOBI_TOLERANCE · max(1, ‖A‖_F)`.
pub fn hermitian_eigenvalues(a: &Array2<C64>, max_sweeps: usize) -> Result<Vec<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::InvalidBlock(format!(
            "matrix is {}x{}",
            d,
            a.ncols()
        )));
    }
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let dev = hermitian_deviation(a);
    if dev > HERMITIAN_TOLERANCE * scale {
        return Err(Error::NotHermitian(dev));
    }

    let mut m: Vec<C64> = vec![C64::zero(); d * d];
    for r in 0..d {
        for c in 0..d {
            m[r * d + c] = (a[[r, c]] + a[[c, r]].conj()) * 0.5;
        }
    }
    let tol = JACOBI_TOLERANCE * scale;

    for _ in 0..=max_sweeps {
        let off: f64 = (0..d)
            .flat_map(|r| (0..d).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| m[r * d + c].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < tol {
            return Ok((0..d).map(|i| m[i * d + i].re).collect());
        }
        for p in 0..d {
            for q in p + 1..d {
                rotate(&mut m, d, p, q);
            }
        }
    }
    Err(Error::NoConvergence(max_sweeps))
}

/// One Jacobi rotation annihilating `m[p][q]`.
fn rotate(m: &mut [C64], d: usize, p: usize, q: usize) {
    let apq = m[p * d + q];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = m[p * d + p].re;
    let aqq = m[q * d + q].re;
    // phase that makes the pivot real
    let e = (apq / g).conj();
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let (jpp, jpq, jqp, jqq) = (C64::new(c, 0.0), C64::new(s, 0.0), e * (-s), e * c);

    for k in 0..d {
        let akp = m[k * d + p];
        let akq = m[k * d + q];
        m[k * d + p] = akp * jpp + akq * jqp;
        m[k * d + q] = akp * jpq + akq * jqq;
    }
    for k in 0..d {
        let apk = m[p * d + k];
        let aqk = m[q * d + k];
        m[p * d + k] = jpp.conj() * apk + jqp.conj() * aqk;
        m[q * d + k] = jpq.conj() * apk + jqq.conj() * aqk;
    }
    m[p * d + q] = C64::zero();
    m[q * d + p] = C64::zero();
    m[p * d + p].im = 0.0;
    m[q * d + q].im = 0.0;
}
