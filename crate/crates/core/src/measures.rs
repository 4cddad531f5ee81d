//! Shifted entropy, shifted negativity and the bosonic entropy classifier.
//!
//! Entropies use the natural logarithm.

use crate::fock::{self, DensityMatrix, ParticleKind, PureState};
use crate::spectra;
use crate::{Error, Result};

/// Default absolute tolerance when matching special entropy values.
pub const DEFAULT_VERDICT_TOL: f64 = 1e-7;

/// `S(ρ_r)` of the single-particle reduced state.
pub fn reduced_entropy(state: &PureState) -> Result<f64> {
    spectra::von_neumann_entropy(&fock::single_particle_rdm(state)?)
}

/// `S(ρ_r) − log N`. Meaningful as a measure for fermions only; for bosons
/// it is a raw value to be read through [`classify_boson_entropy`].
pub fn shifted_entropy(state: &PureState) -> Result<f64> {
    Ok(reduced_entropy(state)? - (state.particles() as f64).ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    UncorrelatedConsistent,
    Correlated,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::UncorrelatedConsistent => "uncorrelated-consistent",
            Verdict::Correlated => "correlated",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BosonEntropyVerdict {
    pub verdict: Verdict,
    pub entropy: f64,
    pub matched_partition: Option<Vec<u32>>,
}

/// Entropy `−Σ (n_i/N) log(n_i/N)` that an uncorrelated state with the given
/// occupation pattern would have.
pub fn partition_entropy(partition: &[u32]) -> f64 {
    let n: u32 = partition.iter().sum();
    partition
        .iter()
        .filter(|&&k| k > 0)
        .map(|&k| {
            let p = k as f64 / n as f64;
            -p * p.ln()
        })
        .sum()
}

/// Compare `S(ρ_r)` with the values attainable by uncorrelated bosonic states.
pub fn classify_boson_entropy(state: &PureState, tol: f64) -> Result<BosonEntropyVerdict> {
    if state.kind() != ParticleKind::Boson {
        return Err(Error::Unsupported("entropy classification is for bosons".into()));
    }
    let entropy = reduced_entropy(state)?;
    let n = state.particles();
    let verdict = |verdict, matched_partition| BosonEntropyVerdict {
        verdict,
        entropy,
        matched_partition,
    };
    if entropy > (n as f64).ln() + tol {
        return Ok(verdict(Verdict::Correlated, None));
    }
    let matched = fock::partitions(n as u32, state.modes())
        .into_iter()
        .map(|p| (partition_entropy(&p), p))
        .filter(|(s, _)| (s - entropy).abs() <= tol)
        .min_by(|a, b| (a.0 - entropy).abs().total_cmp(&(b.0 - entropy).abs()));
    Ok(match matched {
        Some((_, p)) if p.len() == 1 => verdict(Verdict::UncorrelatedConsistent, Some(p)),
        Some((_, p)) => verdict(Verdict::Inconclusive, Some(p)),
        None => verdict(Verdict::Correlated, None),
    })
}

/// Negativity value together with the raw trace norm it was derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Negativity {
    pub value: f64,
    pub trace_norm: f64,
}

/// `‖ρ^{T}‖₁` with the transpose taken on the given particle (0-based).
pub fn partial_transpose_trace_norm(rho: &DensityMatrix, particle: usize) -> Result<f64> {
    let fq = rho.to_first_quantized()?;
    let d = match fq.space() {
        fock::Space::FirstQuantized { d, .. } => *d,
        fock::Space::Subspace(_) => unreachable!("lifted above"),
    };
    spectra::trace_norm(&spectra::partial_transpose(fq.matrix(), d, particle)?)
}

fn particles_of(rho: &DensityMatrix) -> usize {
    match rho.space() {
        fock::Space::Subspace(b) => b.particles(),
        fock::Space::FirstQuantized { n, .. } => *n,
    }
}

/// `max(0, ‖ρ^{T₁}‖₁ − N)`.
pub fn shifted_negativity(rho: &DensityMatrix) -> Result<Negativity> {
    let trace_norm = partial_transpose_trace_norm(rho, 0)?;
    let n = particles_of(rho) as f64;
    Ok(Negativity {
        value: (trace_norm - n).max(0.0),
        trace_norm,
    })
}

pub fn shifted_negativity_pure(state: &PureState) -> Result<Negativity> {
    shifted_negativity(&DensityMatrix::from_pure(state))
}

/// `max(0, ‖ρ^{T₁}‖₁ − 1)` for the definition-2 bosonic setting.
pub fn negativity_def2(rho: &DensityMatrix) -> Result<Negativity> {
    if let Some(b) = rho.subspace_basis() {
        if b.kind() != ParticleKind::Boson {
            return Err(Error::Unsupported("definition-2 negativity is for bosons".into()));
        }
    }
    let trace_norm = partial_transpose_trace_norm(rho, 0)?;
    Ok(Negativity {
        value: (trace_norm - 1.0).max(0.0),
        trace_norm,
    })
}

/// Closed-form `‖ρ^{T₁}‖₁ = (Σ_k √n_k)² / N` of an uncorrelated pure state
/// with occupation pattern `occupations`.
pub fn separable_trace_norm_formula(occupations: &[u32]) -> f64 {
    let n: u32 = occupations.iter().sum();
    let s: f64 = occupations.iter().map(|&k| (k as f64).sqrt()).sum();
    s * s / n as f64
}
