//! Optimal witnesses over constrained sets by a cutting-plane scheme.
//!
//! The master problem minimizes `Tr(Wρ)` over the constraint set of the
//! chosen variant intersected with the half-spaces `⟨s_k|W|s_k⟩ ≥ 0` for the
//! current cut states `s_k`. It is solved by ADMM: an exact eigenvalue
//! projection handles the spectral set and a Hildreth dual coordinate ascent
//! projects onto the polyhedron of cuts. A multi-start local search over
//! uncorrelated states supplies new cuts. Every returned witness is mixed
//! with a strictly feasible anchor until the best violation found by the
//! search is removed, so `-Tr(Wρ)` is a lower bound on the quantifier as far
//! as the search is exhaustive.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{self, DensityMatrix, FockBasis, ParticleKind, PureState};
use crate::slater;
use crate::spectra::{self, Spectrum};
use crate::{CMat, CVec, Error, Result, C64, ONE, ZERO};

/// Constraint set defining the quantifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `W ≤ 1` on the subspace.
    GeneralizedRobustness,
    /// `Tr W = D_a`, the subspace dimension.
    RandomRobustness,
    /// `Tr W ≤ 1`.
    RobustnessOfEntanglement,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::GeneralizedRobustness => "rg",
            Variant::RandomRobustness => "rr",
            Variant::RobustnessOfEntanglement => "re",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rg" => Ok(Variant::GeneralizedRobustness),
            "rr" => Ok(Variant::RandomRobustness),
            "re" => Ok(Variant::RobustnessOfEntanglement),
            other => Err(Error::Unsupported(format!("unknown witness variant `{other}`"))),
        }
    }
}

/// Family of uncorrelated pure states the separability oracle ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    /// Products of `N` mutually orthonormal, singly occupied modes.
    OrthonormalModes,
    /// Permanents of orthonormal modes with arbitrary occupation patterns.
    Definition1,
    /// A single mode holding all particles.
    Definition2,
    /// Products of `N` arbitrary, not necessarily orthogonal, modes.
    ProductModes,
}

impl Sampling {
    pub fn as_str(self) -> &'static str {
        match self {
            Sampling::OrthonormalModes => "orthonormal",
            Sampling::Definition1 => "def1",
            Sampling::Definition2 => "def2",
            Sampling::ProductModes => "product",
        }
    }

    /// Fermions always use Slater determinants; bosons default to definition 1.
    pub fn default_for(kind: ParticleKind) -> Sampling {
        match kind {
            ParticleKind::Fermion => Sampling::OrthonormalModes,
            ParticleKind::Boson => Sampling::Definition1,
        }
    }
}

impl std::str::FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orthonormal" => Ok(Sampling::OrthonormalModes),
            "def1" => Ok(Sampling::Definition1),
            "def2" => Ok(Sampling::Definition2),
            "product" => Ok(Sampling::ProductModes),
            other => Err(Error::Unsupported(format!("unknown sampling `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WitnessOptions {
    /// Cap on cuts added by the search (initial cuts excluded).
    pub max_cuts: usize,
    /// The loop stops once the search finds no value below `-tol_cut`.
    pub tol_cut: f64,
    /// It also stops once the repaired witness is within `gap_tol` of the
    /// relaxation bound.
    pub gap_tol: f64,
    /// Multi-start count of the separability search.
    pub seeds: usize,
    pub seed: u64,
    /// Defaults to [`Sampling::default_for`] the particle kind.
    pub sampling: Option<Sampling>,
    /// Violated local minima added per round.
    pub cuts_per_round: usize,
    /// Random members of the sampling family seeded as cuts, per subspace
    /// dimension.
    pub random_cuts_per_dim: usize,
    /// Extra cut states to start from (e.g. the cuts of a previous run).
    pub initial_cuts: Vec<CVec>,
}

impl Default for WitnessOptions {
    fn default() -> Self {
        WitnessOptions {
            max_cuts: 200,
            tol_cut: 1e-6,
            gap_tol: 1e-4,
            seeds: 64,
            seed: 0,
            sampling: None,
            cuts_per_round: 8,
            random_cuts_per_dim: 8,
            initial_cuts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct WitnessResult {
    pub variant: Variant,
    pub sampling: Sampling,
    /// Hermitian matrix over the occupation basis of the subspace.
    pub witness: CMat,
    /// `Tr(Wρ)`.
    pub objective: f64,
    /// Minimum of `⟨s|W|s⟩` over the cut states and a final search.
    pub feasibility_margin: f64,
    /// Lower bound on the objective from the last cut relaxation.
    pub relaxation_bound: f64,
    pub cut_count: usize,
    pub converged: bool,
    /// All cut states, reusable as [`WitnessOptions::initial_cuts`].
    pub cuts: Vec<CVec>,
}

impl WitnessResult {
    /// `max(0, −Tr(Wρ))`.
    pub fn robustness(&self) -> f64 {
        (-self.objective).max(0.0)
    }
}

/// Outcome of the separability search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Smallest `⟨s|W|s⟩` found over normalized uncorrelated `s`.
    pub value: f64,
    pub state: PureState,
    /// Distinct local minima, ascending by value.
    pub minima: Vec<(f64, CVec)>,
}

fn expectation(w: &CMat, v: &CVec) -> f64 {
    let n2 = v.norm_squared();
    if n2 == 0.0 {
        return f64::INFINITY;
    }
    v.dotc(&(w * v)).re / n2
}

/// Occupation patterns explored by a sampling family.
fn patterns(kind: ParticleKind, sampling: Sampling, d: usize, n: usize) -> Vec<Vec<u32>> {
    let ones = || vec![1u32; n];
    match (kind, sampling) {
        (ParticleKind::Fermion, _) => vec![ones()],
        (ParticleKind::Boson, Sampling::OrthonormalModes) if n <= d => vec![ones()],
        (ParticleKind::Boson, Sampling::OrthonormalModes) => Vec::new(),
        (ParticleKind::Boson, Sampling::Definition1) => fock::partitions(n as u32, d),
        (ParticleKind::Boson, Sampling::Definition2) => vec![vec![n as u32]],
        (ParticleKind::Boson, Sampling::ProductModes) => vec![ones()],
    }
}

/// Amplitudes of the (unnormalized) product with `pattern[k]` copies of
/// orbital `k`.
fn pattern_amplitudes(basis: &FockBasis, orbitals: &[CVec], pattern: &[u32]) -> CVec {
    let mut slots: Vec<&[C64]> = Vec::with_capacity(basis.particles());
    for (k, &cnt) in pattern.iter().enumerate() {
        for _ in 0..cnt {
            slots.push(orbitals[k].as_slice());
        }
    }
    fock::product_amplitudes(basis, &slots)
}

/// Occupation basis states that belong to the sampling family.
fn basis_cuts(basis: &FockBasis, sampling: Sampling) -> Vec<CVec> {
    let n = basis.particles() as u32;
    basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, occ)| match (basis.kind(), sampling) {
            (ParticleKind::Fermion, _) => true,
            (_, Sampling::OrthonormalModes) => occ.iter().all(|&k| k <= 1),
            (_, Sampling::Definition2) => occ.contains(&n),
            _ => true,
        })
        .map(|(i, _)| {
            let mut v = CVec::zeros(basis.dim());
            v[i] = ONE;
            v
        })
        .collect()
}

/// Minimize `φ†Mφ / φ†Gφ` over the range of `G`; returns the minimizer.
fn rayleigh_min(m: &CMat, g: &CMat) -> Result<Option<(f64, CVec)>> {
    let gs = spectra::hermitian_eig(g)?;
    let top = gs.eigenvalues.last().copied().unwrap_or(0.0);
    if top <= 1e-300 {
        return Ok(None);
    }
    let keep: Vec<usize> = (0..gs.eigenvalues.len())
        .filter(|&k| gs.eigenvalues[k] > 1e-12 * top)
        .collect();
    let n = g.nrows();
    let half = CMat::from_fn(n, keep.len(), |i, c| {
        gs.eigenvectors[(i, keep[c])] / gs.eigenvalues[keep[c]].sqrt()
    });
    let reduced = half.adjoint() * m * &half;
    let reduced = (&reduced + reduced.adjoint()) * C64::new(0.5, 0.0);
    let rs = spectra::hermitian_eig(&reduced)?;
    let phi = half * rs.eigenvectors.column(0);
    Ok(Some((rs.eigenvalues[0], phi)))
}

/// Block-coordinate descent over single orbitals: each orbital update is an
/// exact generalized eigenproblem because the amplitudes are linear in it.
fn see_saw(
    w: &CMat,
    basis: &FockBasis,
    orbitals: &mut [CVec],
    orthogonal: bool,
) -> Result<(f64, CVec)> {
    let d = basis.modes();
    let n = orbitals.len();
    let ones = vec![1u32; n];
    let mut value = expectation(w, &pattern_amplitudes(basis, orbitals, &ones));
    for _ in 0..200 {
        let before = value;
        for k in 0..n {
            let mut t = CMat::zeros(basis.dim(), d);
            let saved = orbitals[k].clone();
            for l in 0..d {
                let mut e = CVec::zeros(d);
                e[l] = ONE;
                orbitals[k] = e;
                t.set_column(l, &pattern_amplitudes(basis, orbitals, &ones));
            }
            orbitals[k] = saved;
            let p = if orthogonal {
                let others: Vec<CVec> = (0..n).filter(|&j| j != k).map(|j| orbitals[j].clone()).collect();
                complement(&others, d)
            } else {
                CMat::identity(d, d)
            };
            if p.ncols() == 0 {
                continue;
            }
            let tp = &t * &p;
            let m = tp.adjoint() * w * &tp;
            let g = tp.adjoint() * &tp;
            if let Some((val, y)) = rayleigh_min(&m, &g)? {
                if val <= value + 1e-15 {
                    let phi = &p * y;
                    let nrm = phi.norm();
                    orbitals[k] = phi.unscale(nrm);
                    value = val;
                }
            }
        }
        if before - value < 1e-13 {
            break;
        }
    }
    let amps = pattern_amplitudes(basis, orbitals, &ones);
    let nrm = amps.norm();
    Ok((expectation(w, &amps), amps.unscale(nrm)))
}

/// Orthonormal basis of the orthogonal complement of the span of `vecs`.
fn complement(vecs: &[CVec], d: usize) -> CMat {
    let mut accepted: Vec<CVec> = Vec::new();
    for v in vecs {
        let mut x = v.clone();
        for _ in 0..2 {
            for a in &accepted {
                let p = a.dotc(&x);
                x.axpy(-p, a, ONE);
            }
        }
        let nrm = x.norm();
        if nrm > 1e-10 {
            accepted.push(x.unscale(nrm));
        }
    }
    let start = accepted.len();
    for i in 0..d {
        if accepted.len() == d {
            break;
        }
        let mut x = CVec::zeros(d);
        x[i] = ONE;
        for _ in 0..2 {
            for a in &accepted {
                let p = a.dotc(&x);
                x.axpy(-p, a, ONE);
            }
        }
        let nrm = x.norm();
        if nrm > 1e-6 {
            accepted.push(x.unscale(nrm));
        }
    }
    if accepted.len() == start {
        return CMat::zeros(d, 0);
    }
    CMat::from_columns(&accepted[start..])
}

/// Hermitian generators of `u(d)`.
fn generators(d: usize) -> Vec<CMat> {
    let mut out = Vec::with_capacity(d * d);
    for j in 0..d {
        let mut g = CMat::zeros(d, d);
        g[(j, j)] = ONE;
        out.push(g);
        for k in (j + 1)..d {
            let mut g = CMat::zeros(d, d);
            g[(j, k)] = ONE;
            g[(k, j)] = ONE;
            out.push(g);
            let mut g = CMat::zeros(d, d);
            g[(j, k)] = C64::new(0.0, -1.0);
            g[(k, j)] = C64::new(0.0, 1.0);
            out.push(g);
        }
    }
    out
}

/// Finite-difference gradient descent on `U(d)` for a fixed occupation
/// pattern, in the local chart `U exp(iH)`.
struct PatternDescent<'a> {
    w: &'a CMat,
    basis: &'a FockBasis,
    pattern: &'a [u32],
    gens: Vec<CMat>,
    plus: Vec<CMat>,
    minus: Vec<CMat>,
}

const FD_STEP: f64 = 1e-5;

impl<'a> PatternDescent<'a> {
    fn new(w: &'a CMat, basis: &'a FockBasis, pattern: &'a [u32]) -> Result<Self> {
        let gens = generators(basis.modes());
        let mut plus = Vec::with_capacity(gens.len());
        let mut minus = Vec::with_capacity(gens.len());
        for g in &gens {
            plus.push(spectra::unitary_exp(&(g * C64::new(FD_STEP, 0.0)))?);
            minus.push(spectra::unitary_exp(&(g * C64::new(-FD_STEP, 0.0)))?);
        }
        Ok(PatternDescent {
            w,
            basis,
            pattern,
            gens,
            plus,
            minus,
        })
    }

    fn amplitudes(&self, u: &CMat) -> CVec {
        let rows: Vec<CVec> = (0..self.pattern.len())
            .map(|k| u.row(k).transpose().into_owned())
            .collect();
        pattern_amplitudes(self.basis, &rows, self.pattern)
    }

    fn value(&self, u: &CMat) -> f64 {
        expectation(self.w, &self.amplitudes(u))
    }

    fn run(&self, mut u: CMat) -> Result<(f64, CVec)> {
        let mut f = self.value(&u);
        let mut alpha = 1.0;
        for _ in 0..500 {
            let grad: Vec<f64> = (0..self.gens.len())
                .map(|a| {
                    (self.value(&(&u * &self.plus[a])) - self.value(&(&u * &self.minus[a])))
                        / (2.0 * FD_STEP)
                })
                .collect();
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            if g2.sqrt() < 1e-9 {
                break;
            }
            let mut h = CMat::zeros(u.nrows(), u.ncols());
            for (g, gen) in grad.iter().zip(&self.gens) {
                h -= gen * C64::new(*g, 0.0);
            }
            let mut accepted = false;
            while alpha > 1e-12 {
                let cand = &u * spectra::unitary_exp(&(&h * C64::new(alpha, 0.0)))?;
                let fc = self.value(&cand);
                if fc <= f - 1e-4 * alpha * g2 {
                    u = cand;
                    f = fc;
                    accepted = true;
                    alpha *= 2.0;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let amps = self.amplitudes(&u);
        let nrm = amps.norm();
        Ok((f, amps.unscale(nrm)))
    }
}

/// Minimize `⟨s|W|s⟩` over normalized uncorrelated states `s` of the
/// sampling family by multi-start local descent from Haar-random modes.
pub fn separable_violation_search(
    w: &CMat,
    basis: &Arc<FockBasis>,
    sampling: Sampling,
    seeds: usize,
    rng: &mut impl Rng,
) -> Result<SearchResult> {
    if w.nrows() != basis.dim() || w.ncols() != basis.dim() {
        return Err(Error::Dimension(format!(
            "witness is {}x{}, subspace dimension is {}",
            w.nrows(),
            w.ncols(),
            basis.dim()
        )));
    }
    let (d, n) = (basis.modes(), basis.particles());
    let pats = patterns(basis.kind(), sampling, d, n);
    if pats.is_empty() {
        return Err(Error::Unsupported(format!(
            "no {} states for {n} particles in {d} modes",
            sampling.as_str()
        )));
    }
    let mut minima: Vec<(f64, CVec)> = Vec::new();
    for pat in &pats {
        // Slater determinants only depend on the span of the orbitals, so
        // single-orbital updates reach every stationary point; bosonic
        // orthonormal products also change under rotations inside that span
        // and need the descent on the full unitary group.
        let orthogonal = basis.kind() == ParticleKind::Fermion;
        let use_see_saw = orthogonal || sampling == Sampling::ProductModes;
        let descent = if use_see_saw {
            None
        } else {
            Some(PatternDescent::new(w, basis, pat)?)
        };
        for _ in 0..seeds.max(1) {
            let u = fock::random_unitary(d, rng);
            let found = match &descent {
                None => {
                    let mut orbitals: Vec<CVec> = (0..pat.len())
                        .map(|k| u.row(k).transpose().into_owned())
                        .collect();
                    if !orthogonal {
                        // independent Haar vectors rather than rows of one unitary
                        for o in orbitals.iter_mut().skip(1) {
                            *o = fock::random_unitary(d, rng).column(0).into_owned();
                        }
                    }
                    see_saw(w, basis, &mut orbitals, orthogonal)?
                }
                Some(desc) => desc.run(u)?,
            };
            minima.push(found);
        }
    }
    minima.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut distinct: Vec<(f64, CVec)> = Vec::new();
    for (val, v) in minima {
        if distinct.iter().all(|(_, u)| u.dotc(&v).norm_sqr() < 0.999) {
            distinct.push((val, v));
        }
    }
    let (value, best) = distinct[0].clone();
    Ok(SearchResult {
        value,
        state: PureState::raw(basis.clone(), best),
        minima: distinct,
    })
}

/// Smallest `⟨s|W|s⟩` over `samples` random uncorrelated states of the family.
pub fn sampled_margin(
    w: &CMat,
    basis: &Arc<FockBasis>,
    sampling: Sampling,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let pats = patterns(basis.kind(), sampling, basis.modes(), basis.particles());
    if pats.is_empty() {
        return Err(Error::Unsupported("empty sampling family".into()));
    }
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        best = best.min(expectation(w, &random_member(basis, sampling, &pats, rng)));
    }
    Ok(best)
}

/// Normalized random state of the sampling family.
fn random_member(basis: &FockBasis, sampling: Sampling, pats: &[Vec<u32>], rng: &mut impl Rng) -> CVec {
    let d = basis.modes();
    let pat = &pats[rng.random_range(0..pats.len())];
    let orbitals: Vec<CVec> = if sampling == Sampling::ProductModes && basis.kind() == ParticleKind::Boson {
        (0..pat.len())
            .map(|_| fock::random_unitary(d, rng).column(0).into_owned())
            .collect()
    } else {
        let u = fock::random_unitary(d, rng);
        (0..pat.len()).map(|k| u.row(k).transpose().into_owned()).collect()
    };
    let v = pattern_amplitudes(basis, &orbitals, pat);
    let nrm = v.norm();
    v.unscale(nrm)
}

/// Spectral constraint set of a variant.
#[derive(Debug, Clone, Copy)]
struct CapSet {
    variant: Variant,
    dim: usize,
    /// Eigenvalue box `[-bound, bound]` keeping the master problem bounded.
    bound: f64,
}

impl CapSet {
    fn new(variant: Variant, dim: usize) -> Self {
        CapSet {
            variant,
            dim,
            bound: dim as f64,
        }
    }

    fn anchor(&self) -> (CMat, f64) {
        let id = CMat::identity(self.dim, self.dim);
        match self.variant {
            Variant::GeneralizedRobustness | Variant::RandomRobustness => (id, 1.0),
            Variant::RobustnessOfEntanglement => {
                let a = 1.0 / self.dim as f64;
                (id * C64::new(a, 0.0), a)
            }
        }
    }

    fn project_eigenvalues(&self, mu: &[f64]) -> Vec<f64> {
        let b = self.bound;
        let clip = |x: f64| x.clamp(-b, b);
        match self.variant {
            Variant::GeneralizedRobustness => mu.iter().map(|&x| x.clamp(-b, 1.0)).collect(),
            Variant::RandomRobustness => shift_to_sum(mu, self.dim as f64, b),
            Variant::RobustnessOfEntanglement => {
                let clipped: Vec<f64> = mu.iter().map(|&x| clip(x)).collect();
                if clipped.iter().sum::<f64>() <= 1.0 {
                    clipped
                } else {
                    shift_to_sum(mu, 1.0, b)
                }
            }
        }
    }

    fn project(&self, x: &CMat) -> Result<CMat> {
        let spec = spectra::hermitian_eig(x)?;
        let vals = self.project_eigenvalues(&spec.eigenvalues);
        Ok(recompose(&spec, &vals))
    }

    fn violation(&self, w: &CMat) -> Result<f64> {
        let ev = spectra::eigvalsh(w)?;
        let tr: f64 = ev.iter().sum();
        let top = *ev.last().unwrap();
        Ok(match self.variant {
            Variant::GeneralizedRobustness => (top - 1.0).max(0.0),
            Variant::RandomRobustness => (tr - self.dim as f64).abs(),
            Variant::RobustnessOfEntanglement => (tr - 1.0).max(0.0),
        })
    }
}

/// Euclidean projection of `mu` onto `{x : Σx = total, |x_i| ≤ b}`.
fn shift_to_sum(mu: &[f64], total: f64, b: f64) -> Vec<f64> {
    let sum_at = |tau: f64| mu.iter().map(|&x| (x - tau).clamp(-b, b)).sum::<f64>();
    let (mut lo, mut hi) = (
        mu.iter().cloned().fold(f64::INFINITY, f64::min) - b - 1.0,
        mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + b + 1.0,
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    let tau = 0.5 * (lo + hi);
    mu.iter().map(|&x| (x - tau).clamp(-b, b)).collect()
}

fn recompose(spec: &Spectrum, vals: &[f64]) -> CMat {
    let n = vals.len();
    let v = &spec.eigenvectors;
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        for j in 0..n {
            let vj = v[(j, k)].conj() * lam;
            for i in 0..n {
                out[(i, j)] += v[(i, k)] * vj;
            }
        }
    }
    out
}

/// Cut polyhedron with a warm-started Hildreth projection.
struct Cuts {
    states: Vec<CVec>,
    gram: Vec<Vec<f64>>,
    mu: Vec<f64>,
}

impl Cuts {
    fn new() -> Self {
        Cuts {
            states: Vec::new(),
            gram: Vec::new(),
            mu: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.states.len()
    }

    fn add(&mut self, v: CVec) {
        let v = v.unscale(v.norm());
        let row: Vec<f64> = self.states.iter().map(|s| s.dotc(&v).norm_sqr()).collect();
        for (r, g) in self.gram.iter_mut().zip(&row) {
            r.push(*g);
        }
        let mut row = row;
        row.push(1.0);
        self.gram.push(row);
        self.states.push(v);
        self.mu.push(0.0);
    }

    fn values(&self, w: &CMat) -> Vec<f64> {
        self.states.iter().map(|s| s.dotc(&(w * s)).re).collect()
    }

    fn min_value(&self, w: &CMat) -> f64 {
        self.values(w).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Projection of `y` onto `{X : ⟨s_k|X|s_k⟩ ≥ 0}`, warm-started from the
    /// previous multipliers and stopped after `sweeps` passes.
    fn project(&mut self, y: &CMat, sweeps: usize) -> CMat {
        let k = self.len();
        let base = self.values(y);
        let mut g: Vec<f64> = (0..k)
            .map(|i| base[i] + (0..k).map(|j| self.gram[i][j] * self.mu[j]).sum::<f64>())
            .collect();
        for _ in 0..sweeps {
            let mut change: f64 = 0.0;
            for i in 0..k {
                let delta = (-g[i]).max(-self.mu[i]);
                if delta != 0.0 {
                    self.mu[i] += delta;
                    for (j, gj) in g.iter_mut().enumerate() {
                        *gj += delta * self.gram[j][i];
                    }
                    change = change.max(delta.abs());
                }
            }
            if change < 1e-13 {
                break;
            }
        }
        let mut x = y.clone();
        for (s, &m) in self.states.iter().zip(&self.mu) {
            if m > 0.0 {
                x += s * s.adjoint() * C64::new(m, 0.0);
            }
        }
        x
    }
}

/// Hildreth passes per ADMM step. The multipliers carry over between steps,
/// so a few passes suffice.
const ADMM_SWEEPS: usize = 10;

/// ADMM state carried across cutting-plane rounds.
struct Master {
    cap: CapSet,
    cuts: Cuts,
    z: CMat,
    u: CMat,
    beta: f64,
}

impl Master {
    fn new(cap: CapSet) -> Self {
        let dim = cap.dim;
        Master {
            cap,
            cuts: Cuts::new(),
            z: CMat::zeros(dim, dim),
            u: CMat::zeros(dim, dim),
            beta: 1.0,
        }
    }

    /// Approximate minimizer over the spectral set ∩ cut polyhedron.
    fn solve(&mut self, rho: &CMat) -> Result<CMat> {
        let mut w = self.cap.project(&self.z)?;
        for it in 0..1_000 {
            let x = &self.z - &self.u - rho / C64::new(self.beta, 0.0);
            w = self.cap.project(&x)?;
            let z_new = self.cuts.project(&(&w + &self.u), ADMM_SWEEPS);
            let r = spectra::frobenius(&(&w - &z_new));
            let s = self.beta * spectra::frobenius(&(&z_new - &self.z));
            self.u += &w - &z_new;
            self.z = z_new;
            let tol = 1e-7 * (1.0 + spectra::frobenius(&self.z));
            if r < tol && s < tol {
                break;
            }
            if it % 10 == 9 {
                if r > 10.0 * s {
                    self.beta *= 2.0;
                    self.u /= C64::new(2.0, 0.0);
                } else if s > 10.0 * r {
                    self.beta /= 2.0;
                    self.u *= C64::new(2.0, 0.0);
                }
            }
        }
        Ok(w)
    }

    /// Mix `w` with the anchor so that `⟨s|W|s⟩ ≥ 0` given the smallest
    /// known value `worst`.
    fn repair(&self, w: &CMat, worst: f64) -> CMat {
        if worst >= 0.0 {
            return w.clone();
        }
        let (anchor, a) = self.cap.anchor();
        let theta = -worst / (a - worst);
        w * C64::new(1.0 - theta, 0.0) + anchor * C64::new(theta, 0.0)
    }
}

fn subspace(rho: &DensityMatrix) -> Result<Arc<FockBasis>> {
    rho.subspace_basis()
        .cloned()
        .ok_or_else(|| Error::Unsupported("witness optimization needs a state on the occupation basis".into()))
}

fn trace_product(w: &CMat, rho: &CMat) -> f64 {
    // Tr(Wρ) = Σ_ij W_ij ρ_ji
    let n = w.nrows();
    let mut t = ZERO;
    for i in 0..n {
        for j in 0..n {
            t += w[(i, j)] * rho[(j, i)];
        }
    }
    t.re
}

/// Cutting-plane minimization of `Tr(Wρ)` over the variant's witness set.
pub fn optimize_witness(rho: &DensityMatrix, variant: Variant, opts: &WitnessOptions) -> Result<WitnessResult> {
    let basis = subspace(rho)?;
    let sampling = opts.sampling.unwrap_or_else(|| Sampling::default_for(basis.kind()));
    let dim = basis.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cap = CapSet::new(variant, dim);
    let mut master = Master::new(cap);
    for v in basis_cuts(&basis, sampling) {
        master.cuts.add(v);
    }
    let pats = patterns(basis.kind(), sampling, basis.modes(), basis.particles());
    if pats.is_empty() {
        return Err(Error::Unsupported("empty sampling family".into()));
    }
    for _ in 0..opts.random_cuts_per_dim * dim {
        master.cuts.add(random_member(&basis, sampling, &pats, &mut rng));
    }
    for v in &opts.initial_cuts {
        if v.len() == dim && v.norm() > 0.0 {
            master.cuts.add(v.clone());
        }
    }
    let initial = master.cuts.len();
    let r = rho.matrix();

    let mut best: Option<(CMat, f64, f64)> = None;
    let mut bound;
    let mut converged = false;
    loop {
        let w_relaxed = master.solve(r)?;
        let relax_obj = trace_product(&w_relaxed, r);
        bound = relax_obj;
        let w = master.repair(&w_relaxed, master.cuts.min_value(&w_relaxed));
        let search = separable_violation_search(&w, &basis, sampling, opts.seeds, &mut rng)?;
        let feasible = master.repair(&w, search.value);
        let obj = trace_product(&feasible, r);
        let margin = master.cuts.min_value(&feasible).min(search.value.max(0.0));
        if best.as_ref().is_none_or(|b| obj < b.1) {
            best = Some((feasible, obj, margin));
        }
        if search.value >= -opts.tol_cut {
            converged = true;
            break;
        }
        let best_obj = best.as_ref().unwrap().1;
        if best_obj - relax_obj <= opts.gap_tol {
            converged = true;
            break;
        }
        if master.cuts.len() - initial >= opts.max_cuts {
            break;
        }
        for (val, v) in search.minima.iter().take(opts.cuts_per_round) {
            if *val >= -opts.tol_cut || master.cuts.len() - initial >= opts.max_cuts {
                break;
            }
            master.cuts.add(v.clone());
        }
    }
    let (mut witness, mut objective, _) = best.expect("at least one round");
    // final audit of the returned witness
    let audit = separable_violation_search(&witness, &basis, sampling, opts.seeds, &mut rng)?;
    let worst = audit.value.min(master.cuts.min_value(&witness));
    if worst < 0.0 {
        witness = master.repair(&witness, worst);
        objective = trace_product(&witness, r);
    }
    let margin = master
        .cuts
        .min_value(&witness)
        .min(expectation(&witness, audit.state.amps()));
    debug_assert!(cap.violation(&witness).unwrap_or(0.0) < 1e-8);
    Ok(WitnessResult {
        variant,
        sampling,
        witness,
        objective,
        feasibility_margin: margin,
        relaxation_bound: bound,
        cut_count: master.cuts.len() - initial,
        converged,
        cuts: master.cuts.states.clone(),
    })
}

/// Spectral-constraint violation of a witness (0 when satisfied).
pub fn constraint_violation(w: &CMat, variant: Variant) -> Result<f64> {
    CapSet::new(variant, w.nrows()).violation(w)
}

#[derive(Debug, Clone)]
pub struct RobustnessEstimate {
    /// `max(0, −Tr(Wρ))` from the optimized witness.
    pub witness: f64,
    /// Exact value from the mixing line search (pure two-fermion input, four modes).
    pub line_search: Option<f64>,
    pub converged: bool,
}

pub fn robustness_estimate(rho: &DensityMatrix, variant: Variant, opts: &WitnessOptions) -> Result<RobustnessEstimate> {
    let res = optimize_witness(rho, variant, opts)?;
    let basis = subspace(rho)?;
    let line_search = if variant == Variant::GeneralizedRobustness
        && basis.kind() == ParticleKind::Fermion
        && basis.modes() == 4
        && basis.particles() == 2
    {
        pure_vector(rho)
            .map(|v| slater::line_search_robustness(&PureState::raw(basis.clone(), v)))
            .transpose()?
    } else {
        None
    };
    Ok(RobustnessEstimate {
        witness: res.robustness(),
        line_search,
        converged: res.converged,
    })
}

/// The state vector of a rank-one density matrix.
fn pure_vector(rho: &DensityMatrix) -> Option<CVec> {
    let spec = spectra::hermitian_eig(rho.matrix()).ok()?;
    let top = *spec.eigenvalues.last()?;
    if (top - 1.0).abs() > 1e-10 {
        return None;
    }
    Some(spec.eigenvectors.column(spec.eigenvalues.len() - 1).into_owned())
}

/// Two bosons in two modes, one mode doubly occupied and the other
/// superposed with it: `b_0† (b_0† + b_1†)|0⟩`, normalized.
pub fn blind_spot_target() -> PureState {
    let basis = FockBasis::shared(ParticleKind::Boson, 2, 2).expect("valid sector");
    let mut v = CVec::zeros(basis.dim());
    v[basis.index_of(&[2, 0]).unwrap()] = C64::new(std::f64::consts::SQRT_2, 0.0);
    v[basis.index_of(&[1, 1]).unwrap()] = ONE;
    PureState::new(basis, v).expect("nonzero")
}

#[derive(Debug, Clone)]
pub struct BlindSpotReport {
    /// `Tr(Wρ)` for the witness optimized against orthonormal-mode products.
    pub orthonormal_objective: f64,
    /// Its margin over orthonormal-mode products.
    pub orthonormal_margin: f64,
    /// Its margin once all definition-1 patterns are searched.
    pub definition1_margin: f64,
    /// `orthonormal_margin − definition1_margin`.
    pub gap: f64,
    /// The witness re-optimized against definition-1 states.
    pub rerun_objective: f64,
    pub rerun_margin: f64,
}

/// Optimize a generalized-robustness witness for [`blind_spot_target`] with
/// an orthonormal-mode oracle, audit it against the full definition-1
/// family, then re-optimize with the full family.
pub fn blind_spot_demo(seed: u64, seeds: usize) -> Result<BlindSpotReport> {
    let target = DensityMatrix::from_pure(&blind_spot_target());
    let basis = subspace(&target)?;
    let mut opts = WitnessOptions {
        seed,
        seeds,
        sampling: Some(Sampling::OrthonormalModes),
        ..WitnessOptions::default()
    };
    let orth = optimize_witness(&target, Variant::GeneralizedRobustness, &opts)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let def1 = separable_violation_search(&orth.witness, &basis, Sampling::Definition1, seeds, &mut rng)?;
    opts.sampling = Some(Sampling::Definition1);
    let rerun = optimize_witness(&target, Variant::GeneralizedRobustness, &opts)?;
    Ok(BlindSpotReport {
        orthonormal_objective: orth.objective,
        orthonormal_margin: orth.feasibility_margin,
        definition1_margin: def1.value,
        gap: orth.feasibility_margin - def1.value,
        rerun_objective: rerun.objective,
        rerun_margin: rerun.feasibility_margin,
    })
}
