//! Dense construction of the open and periodic SU(n) VBS states.
//!
//! Each bulk (adjoint) site is labeled directly by a Bell index
//! `(l, m) ≠ (0, 0)`: label `(l, m)` on site `k` stands for `|Φ_{l,-m}>` on the
//! pair `(k̄, k)`. Local index of that label is `l * n + m - 1`. The open chain
//! carries one extra site, the boundary pair `(0, N+1̄)`, labeled by its full
//! Bell index (local index `l * n + m`).
//!
//! Chaining singlets and projecting every bulk pair on the adjoint sector turns
//! the boundary pair into `(U_{c_1} ⋯ U_{c_N} ⊗ I)|Φ_{0,0}>`; the operator
//! string is folded exactly with [`phase_fold`].

use std::ops::Range;

use ndarray::Array1;
use rayon::prelude::*;

use crate::weyl::{check_dim, compose, omega_pow, BellIndex, PhasedIndex};
use crate::{closed_form, Error, Result, C64, DEFAULT_AMPLITUDE_BUDGET};

/// Folds `U_{f_1} U_{f_2} ⋯` left to right into `ω^phase · U_sum`.
pub fn phase_fold(n: usize, factors: &[BellIndex]) -> PhasedIndex {
    factors.iter().fold(PhasedIndex::default(), |acc, &f| {
        let step = compose(n, acc.index, f);
        PhasedIndex {
            index: step.index,
            phase_exp: (acc.phase_exp + step.phase_exp) % n,
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// `N` adjoint sites plus a fundamental spin on the left and a conjugate
    /// spin on the right.
    Open,
    Periodic,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        }
    }
}

/// What a tensor factor of a [`PureState`] represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SiteKind {
    /// Bulk site, `n² - 1` labels.
    Adjoint,
    /// Boundary pair `(0, N+1̄)`, `n²` labels.
    BoundaryPair,
}

impl SiteKind {
    pub fn dim(self, n: usize) -> usize {
        match self {
            SiteKind::Adjoint => n * n - 1,
            SiteKind::BoundaryPair => n * n,
        }
    }
}

/// Chain geometry with its size guard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSpec {
    pub n: usize,
    pub sites: usize,
    pub boundary: Boundary,
    pub amplitude_budget: usize,
}

impl ChainSpec {
    pub fn new(n: usize, sites: usize, boundary: Boundary) -> Result<Self> {
        Self::with_budget(n, sites, boundary, DEFAULT_AMPLITUDE_BUDGET)
    }

    pub fn open(n: usize, sites: usize) -> Result<Self> {
        Self::new(n, sites, Boundary::Open)
    }

    pub fn periodic(n: usize, sites: usize) -> Result<Self> {
        Self::new(n, sites, Boundary::Periodic)
    }

    pub fn with_budget(
        n: usize,
        sites: usize,
        boundary: Boundary,
        amplitude_budget: usize,
    ) -> Result<Self> {
        check_dim(n)?;
        let min_sites = match boundary {
            Boundary::Open => 1,
            Boundary::Periodic => 2,
        };
        if sites < min_sites {
            return Err(Error::InvalidChain(format!(
                "{} chain needs at least {min_sites} sites, got {sites}",
                boundary.as_str()
            )));
        }
        let spec = ChainSpec {
            n,
            sites,
            boundary,
            amplitude_budget,
        };
        let required = spec.amplitude_count();
        if required > amplitude_budget as u128 {
            return Err(Error::BudgetExceeded {
                what: "state construction",
                required,
                budget: amplitude_budget,
            });
        }
        Ok(spec)
    }

    /// `(n²-1)^N · n²` (open) or `(n²-1)^N` (periodic), saturating.
    pub fn amplitude_count(&self) -> u128 {
        let adjoint = (self.n * self.n - 1) as u128;
        let bulk = (0..self.sites).try_fold(1u128, |acc, _| acc.checked_mul(adjoint));
        let total = match self.boundary {
            Boundary::Open => bulk.and_then(|b| b.checked_mul((self.n * self.n) as u128)),
            Boundary::Periodic => bulk,
        };
        total.unwrap_or(u128::MAX)
    }

    /// Tensor-factor positions of bulk sites `first ..= first + len - 1`
    /// (sites are numbered from 1).
    pub fn block(&self, first: usize, len: usize) -> Result<Range<usize>> {
        if len == 0 || first == 0 || first + len - 1 > self.sites {
            return Err(Error::InvalidBlock(format!(
                "sites {first}..{} do not fit in a chain of {} sites",
                first + len.max(1) - 1,
                self.sites
            )));
        }
        Ok(first - 1..first - 1 + len)
    }
}

/// A normalized state vector over a product of labeled tensor factors. The
/// first factor is the slowest index.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    sites: Vec<SiteKind>,
    amplitudes: Array1<C64>,
}

impl PureState {
    pub fn from_parts(n: usize, sites: Vec<SiteKind>, amplitudes: Array1<C64>) -> Result<Self> {
        let dim: usize = sites.iter().map(|s| s.dim(n)).product();
        if dim != amplitudes.len() {
            return Err(Error::InvalidChain(format!(
                "basis has dimension {dim} but {} amplitudes were given",
                amplitudes.len()
            )));
        }
        Ok(PureState {
            n,
            sites,
            amplitudes,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> &[SiteKind] {
        &self.sites
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim(self.n)).collect()
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Splits a flat index into per-site local indices.
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let dims = self.dims();
        let mut out = vec![0; dims.len()];
        for (slot, d) in out.iter_mut().zip(dims.iter()).rev() {
            *slot = idx % d;
            idx /= d;
        }
        out
    }

    /// The Bell index carried by tensor factor `site` at local index `local`.
    pub fn label(&self, site: usize, local: usize) -> BellIndex {
        match self.sites[site] {
            SiteKind::Adjoint => BellIndex::from_linear(self.n, local + 1),
            SiteKind::BoundaryPair => BellIndex::from_linear(self.n, local),
        }
    }
}

/// Odometer over adjoint configurations of `len` sites, site 1 slowest.
pub(crate) fn adjoint_configs(n: usize, len: usize) -> impl Iterator<Item = Vec<BellIndex>> {
    let count = (n * n - 1).pow(len as u32);
    (0..count).map(move |pos| decode(n, len, pos))
}

/// Flat position of an adjoint configuration within `(n²-1)^len`.
pub(crate) fn adjoint_position(n: usize, cfg: &[BellIndex]) -> usize {
    let k = n * n - 1;
    cfg.iter().fold(0, |acc, b| acc * k + b.linear(n) - 1)
}

fn expect(spec: &ChainSpec, boundary: Boundary) -> Result<()> {
    if spec.boundary != boundary {
        return Err(Error::InvalidChain(format!(
            "expected a {} chain, got {}",
            boundary.as_str(),
            spec.boundary.as_str()
        )));
    }
    // re-run the guard in case the spec was assembled by hand
    ChainSpec::with_budget(spec.n, spec.sites, spec.boundary, spec.amplitude_budget).map(|_| ())
}

/// `|G>` for `N` adjoint sites between a fundamental and a conjugate boundary spin.
///
/// Amplitude of `(c_1 … c_N, b)` is `(n²-1)^{-N/2} ω^φ [b = Σ c]` where
/// `U_{c_1} ⋯ U_{c_N} = ω^φ U_{Σc}`.
pub fn open_vbs_state(spec: &ChainSpec) -> Result<PureState> {
    expect(spec, Boundary::Open)?;
    let n = spec.n;
    let nsq = n * n;
    let scale = ((nsq - 1) as f64).powf(-(spec.sites as f64) / 2.0);
    let configs = (nsq - 1).pow(spec.sites as u32);

    let entries: Vec<(usize, C64)> = (0..configs)
        .into_par_iter()
        .map(|pos| {
            let cfg = decode(n, spec.sites, pos);
            let folded = phase_fold(n, &cfg);
            (
                pos * nsq + folded.index.linear(n),
                omega_pow(n, folded.phase_exp) * scale,
            )
        })
        .collect();

    let mut amplitudes = Array1::zeros(configs * nsq);
    for (idx, amp) in entries {
        amplitudes[idx] = amp;
    }
    let mut sites = vec![SiteKind::Adjoint; spec.sites];
    sites.push(SiteKind::BoundaryPair);
    PureState::from_parts(n, sites, amplitudes)
}

/// `|G_p>` on a ring of `N` adjoint sites.
///
/// The closure is carried by site `N`: for a configuration `c_1 … c_{N-1}`
/// whose folded index is `s ≠ (0,0)`, site `N` takes the label `-s`. The state
/// is then supported on configurations with total Bell index `(0,0)`, with
/// amplitude `𝒩^{-1} ω^φ` for `U_{c_1} ⋯ U_{c_N} = ω^φ I`. That amplitude is
/// `𝒩^{-1} Tr(U_{c_1} ⋯ U_{c_N}) / n`, so the state is invariant under cyclic
/// shifts of the sites.
pub fn periodic_vbs_state(spec: &ChainSpec) -> Result<PureState> {
    expect(spec, Boundary::Periodic)?;
    let n = spec.n;
    let nsq = n * n;
    let norm_sq = closed_form::periodic_norm_sq(n, spec.sites);
    let scale = 1.0 / norm_sq.sqrt();
    let head = spec.sites - 1;
    let configs = (nsq - 1).pow(head as u32);

    let entries: Vec<(usize, C64)> = (0..configs)
        .into_par_iter()
        .filter_map(|pos| {
            let mut cfg = decode(n, head, pos);
            let folded = phase_fold(n, &cfg);
            if folded.index.is_identity() {
                return None;
            }
            cfg.push(folded.index.neg(n));
            let closed = phase_fold(n, &cfg);
            debug_assert!(closed.index.is_identity());
            Some((
                adjoint_position(n, &cfg),
                omega_pow(n, closed.phase_exp) * scale,
            ))
        })
        .collect();

    let mut amplitudes = Array1::zeros((nsq - 1).pow(spec.sites as u32));
    for (idx, amp) in entries {
        amplitudes[idx] = amp;
    }
    PureState::from_parts(n, vec![SiteKind::Adjoint; spec.sites], amplitudes)
}

/// Builds the state matching `spec.boundary`.
pub fn vbs_state(spec: &ChainSpec) -> Result<PureState> {
    match spec.boundary {
        Boundary::Open => open_vbs_state(spec),
        Boundary::Periodic => periodic_vbs_state(spec),
    }
}

pub(crate) fn decode(n: usize, len: usize, mut pos: usize) -> Vec<BellIndex> {
    let k = n * n - 1;
    let mut cfg = vec![BellIndex::IDENTITY; len];
    for slot in cfg.iter_mut().rev() {
        *slot = BellIndex::from_linear(n, pos % k + 1);
        pos /= k;
    }
    cfg
}
