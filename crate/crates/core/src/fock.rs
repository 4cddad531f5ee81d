//! Fixed-N occupation bases, ladder operators and first-quantized embedding.
//!
//! Phase convention: the basis state `|n_1 … n_d⟩` is
//! `(a_1†)^{n_1} ⋯ (a_d†)^{n_d} |0⟩`, mode 0 leftmost, divided by
//! `sqrt(Π n_k!)` for bosons. Every operator phase in the crate derives
//! from this choice. Mode indices are 0-based.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::spectra;
use crate::{CMat, CVec, Error, Result, C64, ONE, ZERO};

/// Default cap on the number of entries of a first-quantized vector.
pub const DEFAULT_EMBED_CAP: usize = 1_000_000;

const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParticleKind {
    Fermion,
    Boson,
}

impl ParticleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParticleKind::Fermion => "fermion",
            ParticleKind::Boson => "boson",
        }
    }

    /// Exchange sign `ε`.
    fn exchange_sign(self) -> f64 {
        match self {
            ParticleKind::Fermion => -1.0,
            ParticleKind::Boson => 1.0,
        }
    }
}

impl fmt::Display for ParticleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParticleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fermion" => Ok(ParticleKind::Fermion),
            "boson" => Ok(ParticleKind::Boson),
            other => Err(Error::Unsupported(format!("unknown particle kind `{other}`"))),
        }
    }
}

/// One occupation-number basis vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationState {
    pub kind: ParticleKind,
    pub occ: Vec<u32>,
}

impl OccupationState {
    pub fn modes(&self) -> usize {
        self.occ.len()
    }

    pub fn particles(&self) -> usize {
        self.occ.iter().map(|&n| n as usize).sum()
    }
}

/// Ordered occupation basis for `n` particles in `d` modes.
#[derive(Debug, Clone)]
pub struct FockBasis {
    kind: ParticleKind,
    d: usize,
    n: usize,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl PartialEq for FockBasis {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.d == other.d && self.n == other.n
    }
}

impl FockBasis {
    pub fn new(kind: ParticleKind, d: usize, n: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Unsupported("mode count must be positive".into()));
        }
        if kind == ParticleKind::Fermion && n > d {
            return Err(Error::InfeasibleBasis { d, n });
        }
        let max_occ = match kind {
            ParticleKind::Fermion => 1,
            ParticleKind::Boson => n as u32,
        };
        let mut states = Vec::new();
        let mut cur = vec![0u32; d];
        fill_lex(&mut cur, 0, n as u32, max_occ, &mut states);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(FockBasis {
            kind,
            d,
            n,
            states,
            index,
        })
    }

    pub fn shared(kind: ParticleKind, d: usize, n: usize) -> Result<Arc<Self>> {
        Self::new(kind, d, n).map(Arc::new)
    }

    pub fn kind(&self) -> ParticleKind {
        self.kind
    }

    pub fn modes(&self) -> usize {
        self.d
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn occupation(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn index_of(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Basis index of a mode multiset (e.g. `[0, 2]` for `a_0† a_2† |0⟩`).
    pub fn index_of_modes(&self, modes: &[usize]) -> Option<usize> {
        let mut occ = vec![0u32; self.d];
        for &m in modes {
            *occ.get_mut(m)? += 1;
        }
        self.index_of(&occ)
    }
}

fn fill_lex(cur: &mut [u32], pos: usize, left: u32, max_occ: u32, out: &mut Vec<Vec<u32>>) {
    let d = cur.len();
    if pos == d - 1 {
        if left <= max_occ {
            cur[pos] = left;
            out.push(cur.to_vec());
        }
        return;
    }
    let remaining_capacity = max_occ as u64 * (d - pos - 1) as u64;
    for v in 0..=left.min(max_occ) {
        if ((left - v) as u64) > remaining_capacity {
            continue;
        }
        cur[pos] = v;
        fill_lex(cur, pos + 1, left - v, max_occ, out);
    }
}

/// Complete, lexicographically ascending occupation basis.
pub fn enumerate_basis(kind: ParticleKind, d: usize, n: usize) -> Result<Vec<OccupationState>> {
    let basis = FockBasis::new(kind, d, n)?;
    Ok(basis
        .states
        .into_iter()
        .map(|occ| OccupationState { kind, occ })
        .collect())
}

/// `a_mode† |occ⟩ = coef |occ'⟩`; `None` when the result vanishes.
pub fn create_on(kind: ParticleKind, occ: &[u32], mode: usize) -> Option<(Vec<u32>, f64)> {
    let mut out = occ.to_vec();
    let coef = match kind {
        ParticleKind::Fermion => {
            if occ[mode] != 0 {
                return None;
            }
            let left: u32 = occ[..mode].iter().sum();
            if left.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }
        ParticleKind::Boson => ((occ[mode] + 1) as f64).sqrt(),
    };
    out[mode] += 1;
    Some((out, coef))
}

/// `a_mode |occ⟩ = coef |occ'⟩`; `None` when the mode is empty.
pub fn annihilate_on(kind: ParticleKind, occ: &[u32], mode: usize) -> Option<(Vec<u32>, f64)> {
    if occ[mode] == 0 {
        return None;
    }
    let mut out = occ.to_vec();
    let coef = match kind {
        ParticleKind::Fermion => {
            let left: u32 = occ[..mode].iter().sum();
            if left.is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }
        ParticleKind::Boson => (occ[mode] as f64).sqrt(),
    };
    out[mode] -= 1;
    Some((out, coef))
}

/// Amplitude vector over a fixed-N occupation basis.
#[derive(Debug, Clone)]
pub struct PureState {
    basis: Arc<FockBasis>,
    amps: CVec,
    renormalized: bool,
}

impl PureState {
    /// Normalizing constructor. Inputs whose norm differs from one by more
    /// than `1e-12` are rescaled and flagged via [`PureState::renormalized`].
    pub fn new(basis: Arc<FockBasis>, amps: CVec) -> Result<Self> {
        if amps.len() != basis.dim() {
            return Err(Error::Dimension(format!(
                "{} amplitudes for a basis of dimension {}",
                amps.len(),
                basis.dim()
            )));
        }
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Unsupported("state has zero or non-finite norm".into()));
        }
        let renormalized = (norm - 1.0).abs() > NORM_TOL;
        let amps = if renormalized {
            amps.unscale(norm)
        } else {
            amps
        };
        Ok(PureState {
            basis,
            amps,
            renormalized,
        })
    }

    /// Unnormalized vector, e.g. the image of a ladder operator.
    pub fn raw(basis: Arc<FockBasis>, amps: CVec) -> Self {
        assert_eq!(amps.len(), basis.dim());
        PureState {
            basis,
            amps,
            renormalized: false,
        }
    }

    pub fn basis_state(basis: Arc<FockBasis>, occ: &[u32]) -> Result<Self> {
        let idx = basis
            .index_of(occ)
            .ok_or_else(|| Error::Dimension(format!("{occ:?} is not in the basis")))?;
        let mut amps = CVec::zeros(basis.dim());
        amps[idx] = ONE;
        Ok(PureState::raw(basis, amps))
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn kind(&self) -> ParticleKind {
        self.basis.kind
    }

    pub fn modes(&self) -> usize {
        self.basis.d
    }

    pub fn particles(&self) -> usize {
        self.basis.n
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    pub fn into_amps(self) -> CVec {
        self.amps
    }

    /// Whether construction had to rescale the input.
    pub fn renormalized(&self) -> bool {
        self.renormalized
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn normalized(&self) -> Result<PureState> {
        PureState::new(self.basis.clone(), self.amps.clone())
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amps.dotc(&other.amps)
    }

    pub fn density(&self) -> CMat {
        &self.amps * self.amps.adjoint()
    }
}

/// Where a density matrix lives.
#[derive(Debug, Clone)]
pub enum Space {
    /// Coordinates over the occupation basis of the (anti)symmetric subspace.
    Subspace(Arc<FockBasis>),
    /// Operator on `(C^d)^{⊗N}`.
    FirstQuantized { d: usize, n: usize },
}

/// Hermitian, unit-trace, positive-semidefinite matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
    space: Space,
}

impl DensityMatrix {
    const TOL: f64 = 1e-10;

    pub fn new(mat: CMat, space: Space) -> Result<Self> {
        let dim = match &space {
            Space::Subspace(b) => b.dim(),
            Space::FirstQuantized { d, n } => d.pow(*n as u32),
        };
        if mat.nrows() != dim || mat.ncols() != dim {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for a space of dimension {dim}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if !spectra::is_hermitian(&mat, Self::TOL) {
            return Err(Error::Unsupported("density matrix is not Hermitian".into()));
        }
        let trace = mat.trace();
        if (trace.re - 1.0).abs() > Self::TOL || trace.im.abs() > Self::TOL {
            return Err(Error::Unsupported(format!("density matrix has trace {trace}")));
        }
        let min = spectra::eigvalsh(&mat)?.first().copied().unwrap_or(0.0);
        if min < -Self::TOL {
            return Err(Error::NotAState { min_eigenvalue: min });
        }
        Ok(DensityMatrix { mat, space })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let s = state.normalized().unwrap_or_else(|_| state.clone());
        DensityMatrix {
            mat: s.density(),
            space: Space::Subspace(state.basis.clone()),
        }
    }

    /// Convex mixture `Σ p_i ρ_i` of states sharing one space.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::Unsupported("empty mixture".into()))?;
        let mut mat = CMat::zeros(first.mat.nrows(), first.mat.ncols());
        for (p, rho) in parts {
            if rho.mat.shape() != mat.shape() {
                return Err(Error::Dimension("mixture of incompatible states".into()));
            }
            mat += &rho.mat * C64::new(*p, 0.0);
        }
        DensityMatrix::new(mat, first.space.clone())
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn subspace_basis(&self) -> Option<&Arc<FockBasis>> {
        match &self.space {
            Space::Subspace(b) => Some(b),
            Space::FirstQuantized { .. } => None,
        }
    }

    /// Lift a subspace state to `(C^d)^{⊗N}`; first-quantized input is
    /// returned unchanged.
    pub fn to_first_quantized(&self) -> Result<DensityMatrix> {
        match &self.space {
            Space::FirstQuantized { .. } => Ok(self.clone()),
            Space::Subspace(b) => {
                let e = embedding_matrix(b, DEFAULT_EMBED_CAP)?;
                Ok(DensityMatrix {
                    mat: &e * &self.mat * e.adjoint(),
                    space: Space::FirstQuantized {
                        d: b.modes(),
                        n: b.particles(),
                    },
                })
            }
        }
    }
}

fn check_mode(basis: &FockBasis, mode: usize) -> Result<()> {
    if mode >= basis.d {
        Err(Error::Dimension(format!(
            "mode {mode} out of range for {} modes",
            basis.d
        )))
    } else {
        Ok(())
    }
}

/// `a_mode† |ψ⟩`, unnormalized, with `N + 1` particles.
pub fn apply_creation(state: &PureState, mode: usize) -> Result<PureState> {
    let b = &state.basis;
    check_mode(b, mode)?;
    let target = FockBasis::shared(b.kind, b.d, b.n + 1)?;
    let mut amps = CVec::zeros(target.dim());
    for (i, occ) in b.states.iter().enumerate() {
        let c = state.amps[i];
        if c == ZERO {
            continue;
        }
        if let Some((occ2, coef)) = create_on(b.kind, occ, mode) {
            let j = target.index_of(&occ2).expect("image lies in the N+1 basis");
            amps[j] += c * coef;
        }
    }
    Ok(PureState::raw(target, amps))
}

/// `a_mode |ψ⟩`, unnormalized, with `N - 1` particles.
pub fn apply_annihilation(state: &PureState, mode: usize) -> Result<PureState> {
    let b = &state.basis;
    check_mode(b, mode)?;
    if b.n == 0 {
        return Err(Error::Unsupported("annihilation on the vacuum sector".into()));
    }
    let target = FockBasis::shared(b.kind, b.d, b.n - 1)?;
    let mut amps = CVec::zeros(target.dim());
    for (i, occ) in b.states.iter().enumerate() {
        let c = state.amps[i];
        if c == ZERO {
            continue;
        }
        if let Some((occ2, coef)) = annihilate_on(b.kind, occ, mode) {
            let j = target.index_of(&occ2).expect("image lies in the N-1 basis");
            amps[j] += c * coef;
        }
    }
    Ok(PureState::raw(target, amps))
}

/// All particle-number sectors `0..=n_max` stacked in one basis; used to
/// check the canonical (anti)commutation relations as matrices.
#[derive(Debug, Clone)]
pub struct TruncatedFockSpace {
    kind: ParticleKind,
    d: usize,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl TruncatedFockSpace {
    /// For fermions `n_max` is clamped to `d`, giving the full Fock space.
    pub fn new(kind: ParticleKind, d: usize, n_max: usize) -> Result<Self> {
        let n_max = match kind {
            ParticleKind::Fermion => n_max.min(d),
            ParticleKind::Boson => n_max,
        };
        let mut states = Vec::new();
        for n in 0..=n_max {
            states.extend(FockBasis::new(kind, d, n)?.states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(TruncatedFockSpace {
            kind,
            d,
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn particles_of(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }

    /// Matrix of `a_mode†` (images beyond the truncation are dropped).
    pub fn creation(&self, mode: usize) -> CMat {
        let dim = self.dim();
        let mut m = CMat::zeros(dim, dim);
        for (i, occ) in self.states.iter().enumerate() {
            if let Some((occ2, coef)) = create_on(self.kind, occ, mode) {
                if let Some(&j) = self.index.get(&occ2) {
                    m[(j, i)] = C64::new(coef, 0.0);
                }
            }
        }
        m
    }

    pub fn annihilation(&self, mode: usize) -> CMat {
        self.creation(mode).adjoint()
    }

    pub fn modes(&self) -> usize {
        self.d
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Sign of the permutation sorting `seq`, or `None` if a value repeats.
fn sort_sign(seq: &[usize]) -> Option<f64> {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in (i + 1)..seq.len() {
            match seq[i].cmp(&seq[j]) {
                std::cmp::Ordering::Greater => inversions += 1,
                std::cmp::Ordering::Equal => return None,
                std::cmp::Ordering::Less => {}
            }
        }
    }
    Some(if inversions.is_multiple_of(2) { 1.0 } else { -1.0 })
}

fn digits(mut idx: usize, d: usize, n: usize, out: &mut [usize]) {
    for k in (0..n).rev() {
        out[k] = idx % d;
        idx /= d;
    }
}

fn check_embed_size(d: usize, n: usize, cap: usize) -> Result<usize> {
    let size = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if size > cap as u128 {
        return Err(Error::DimensionOverflow {
            size: size.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    Ok(size as usize)
}

/// Columns are the first-quantized images of the occupation basis states.
pub fn embedding_matrix(basis: &FockBasis, cap: usize) -> Result<CMat> {
    let (d, n) = (basis.d, basis.n);
    let size = check_embed_size(d, n, cap)?;
    let mut e = CMat::zeros(size, basis.dim());
    let mut tuple = vec![0usize; n];
    let mut occ = vec![0u32; d];
    let nf = factorial(n);
    for t in 0..size {
        digits(t, d, n, &mut tuple);
        occ.iter_mut().for_each(|x| *x = 0);
        for &m in &tuple {
            occ[m] += 1;
        }
        let Some(col) = basis.index_of(&occ) else {
            continue;
        };
        let val = match basis.kind {
            ParticleKind::Fermion => match sort_sign(&tuple) {
                Some(s) => s / nf.sqrt(),
                None => continue,
            },
            ParticleKind::Boson => {
                let prod: f64 = occ.iter().map(|&k| factorial(k as usize)).product();
                (prod / nf).sqrt()
            }
        };
        e[(t, col)] = C64::new(val, 0.0);
    }
    Ok(e)
}

/// First-quantized image of a state in `(C^d)^{⊗N}` (unit norm for
/// normalized input), with the default size cap.
pub fn embed_first_quantized(state: &PureState) -> Result<CVec> {
    embed_first_quantized_capped(state, DEFAULT_EMBED_CAP)
}

pub fn embed_first_quantized_capped(state: &PureState, cap: usize) -> Result<CVec> {
    if state.particles() == 0 {
        return Err(Error::Unsupported("embedding needs at least one particle".into()));
    }
    let e = embedding_matrix(&state.basis, cap)?;
    Ok(e * &state.amps)
}

/// Visit every permutation of `0..n` together with its sign (Heap's algorithm).
fn for_each_permutation(n: usize, mut f: impl FnMut(&[usize], f64)) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    let mut sign = 1.0;
    f(&perm, sign);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            f(&perm, sign);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Projector `S` (bosons) or `A` (fermions) on `(C^d)^{⊗N}`.
pub fn symmetrizer(kind: ParticleKind, d: usize, n: usize) -> Result<CMat> {
    let size = check_embed_size(d, n, DEFAULT_EMBED_CAP)?;
    let mut p = CMat::zeros(size, size);
    let mut tuple = vec![0usize; n];
    let mut permuted = vec![0usize; n];
    let weight = 1.0 / factorial(n);
    let eps = kind.exchange_sign();
    for t in 0..size {
        digits(t, d, n, &mut tuple);
        for_each_permutation(n, |perm, sign| {
            for k in 0..n {
                permuted[k] = tuple[perm[k]];
            }
            let idx = permuted.iter().fold(0, |acc, &x| acc * d + x);
            let s = if eps < 0.0 { sign } else { 1.0 };
            p[(idx, t)] += C64::new(s * weight, 0.0);
        });
    }
    Ok(p)
}

/// `P v` for the (anti)symmetrizer `P` of the given kind.
pub fn symmetrize_vector(v: &CVec, kind: ParticleKind, d: usize, n: usize) -> Result<CVec> {
    check_len(v.len(), d, n)?;
    Ok(symmetrizer(kind, d, n)? * v)
}

/// `P M P` for the (anti)symmetrizer `P` of the given kind.
pub fn symmetrize_matrix(m: &CMat, kind: ParticleKind, d: usize, n: usize) -> Result<CMat> {
    check_len(m.nrows(), d, n)?;
    let p = symmetrizer(kind, d, n)?;
    Ok(&p * m * &p)
}

fn check_len(len: usize, d: usize, n: usize) -> Result<()> {
    if d.checked_pow(n as u32) != Some(len) {
        return Err(Error::Dimension(format!("length {len} is not {d}^{n}")));
    }
    Ok(())
}

/// `G[i, j] = ⟨a_i† a_j⟩` for a pure state.
pub fn one_body_matrix(state: &PureState) -> CMat {
    let b = &state.basis;
    let mut g = CMat::zeros(b.d, b.d);
    for (col, occ) in b.states.iter().enumerate() {
        let c = state.amps[col];
        if c == ZERO {
            continue;
        }
        for j in 0..b.d {
            let Some((mid, cj)) = annihilate_on(b.kind, occ, j) else {
                continue;
            };
            for i in 0..b.d {
                let Some((fin, ci)) = create_on(b.kind, &mid, i) else {
                    continue;
                };
                let row = b.index_of(&fin).expect("number-conserving");
                g[(i, j)] += state.amps[row].conj() * c * (ci * cj);
            }
        }
    }
    g
}

/// `G[i, j] = Tr(a_i† a_j ρ)` for a subspace density matrix.
fn one_body_matrix_mixed(basis: &FockBasis, rho: &CMat) -> CMat {
    let mut g = CMat::zeros(basis.d, basis.d);
    for (col, occ) in basis.states.iter().enumerate() {
        for j in 0..basis.d {
            let Some((mid, cj)) = annihilate_on(basis.kind, occ, j) else {
                continue;
            };
            for i in 0..basis.d {
                let Some((fin, ci)) = create_on(basis.kind, &mid, i) else {
                    continue;
                };
                let row = basis.index_of(&fin).expect("number-conserving");
                // ⟨row| a_i† a_j |col⟩ ρ[col, row]
                g[(i, j)] += rho[(col, row)] * (ci * cj);
            }
        }
    }
    g
}

/// Single-particle reduced state `ρ_r[i, j] = ⟨a_j† a_i⟩ / N` of a pure state.
pub fn single_particle_rdm(state: &PureState) -> Result<CMat> {
    let n = state.particles();
    if n == 0 {
        return Err(Error::Unsupported("reduced state needs N >= 1".into()));
    }
    let s = state.normalized()?;
    Ok(one_body_matrix(&s).transpose().unscale(n as f64))
}

/// Single-particle reduced state of a density matrix on either space.
pub fn single_particle_rdm_mixed(rho: &DensityMatrix) -> Result<CMat> {
    match rho.space() {
        Space::Subspace(b) => {
            if b.n == 0 {
                return Err(Error::Unsupported("reduced state needs N >= 1".into()));
            }
            Ok(one_body_matrix_mixed(b, rho.matrix())
                .transpose()
                .unscale(b.n as f64))
        }
        Space::FirstQuantized { d, .. } => spectra::partial_trace_to_single(rho.matrix(), *d),
    }
}

/// Haar-random unitary (Gram-Schmidt on a complex Ginibre matrix).
pub fn random_unitary(d: usize, rng: &mut impl Rng) -> CMat {
    let mut g = CMat::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    orthonormalize_columns(&mut g);
    g
}

/// Modified Gram-Schmidt in place.
pub(crate) fn orthonormalize_columns(m: &mut CMat) {
    let cols = m.ncols();
    for j in 0..cols {
        for k in 0..j {
            let proj = m.column(k).dotc(&m.column(j));
            let ck = m.column(k).into_owned();
            m.column_mut(j).axpy(-proj, &ck, ONE);
        }
        let norm = m.column(j).norm();
        m.column_mut(j).unscale_mut(norm);
    }
}

/// Complex determinant by Gaussian elimination with partial pivoting.
fn determinant(mut a: Vec<C64>, n: usize) -> C64 {
    let mut det = ONE;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        if a[pivot * n + col] == ZERO {
            return ZERO;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for r in (col + 1)..n {
            let f = a[r * n + col] / p;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] -= f * v;
            }
        }
    }
    det
}

/// Permanent by Ryser's formula.
fn permanent(a: &[C64], n: usize) -> C64 {
    if n == 0 {
        return ONE;
    }
    let mut total = ZERO;
    for subset in 1u32..(1 << n) {
        let mut prod = ONE;
        for r in 0..n {
            let mut row_sum = ZERO;
            for c in 0..n {
                if subset & (1 << c) != 0 {
                    row_sum += a[r * n + c];
                }
            }
            prod *= row_sum;
        }
        let bits = subset.count_ones() as usize;
        if (n - bits).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// Amplitudes of `a_{φ_1}† ⋯ a_{φ_N}† |0⟩` with `a_φ† = Σ_l φ[l] a_l†`.
///
/// `orbitals` holds one `d`-vector per created particle (repeat a vector to
/// occupy a mode several times). No normalization is applied.
pub fn product_amplitudes(basis: &FockBasis, orbitals: &[&[C64]]) -> CVec {
    let n = basis.n;
    assert_eq!(orbitals.len(), n, "one orbital per particle");
    let mut amps = CVec::zeros(basis.dim());
    let mut rows = Vec::with_capacity(n);
    let mut m = vec![ZERO; n * n];
    for (idx, occ) in basis.states.iter().enumerate() {
        rows.clear();
        for (mode, &k) in occ.iter().enumerate() {
            for _ in 0..k {
                rows.push(mode);
            }
        }
        for (r, &mode) in rows.iter().enumerate() {
            for (c, orb) in orbitals.iter().enumerate() {
                m[r * n + c] = orb[mode];
            }
        }
        amps[idx] = match basis.kind {
            ParticleKind::Fermion => determinant(m.clone(), n),
            ParticleKind::Boson => {
                let norm: f64 = occ.iter().map(|&k| factorial(k as usize)).product();
                permanent(&m, n) / norm.sqrt()
            }
        };
    }
    amps
}

/// Uncorrelated pure state built from the rows of `unitary`: row `k` is the
/// mode `a_k† = Σ_l U[k, l] f_l†`, occupied `pattern[k]` times. For
/// fermions every entry of `pattern` must be 1.
pub fn uncorrelated_state(
    basis: &Arc<FockBasis>,
    unitary: &CMat,
    pattern: &[u32],
) -> Result<PureState> {
    let total: u32 = pattern.iter().sum();
    if total as usize != basis.n || pattern.len() > basis.d {
        return Err(Error::Dimension(format!(
            "pattern {pattern:?} does not fit {} particles in {} modes",
            basis.n, basis.d
        )));
    }
    if basis.kind == ParticleKind::Fermion && pattern.iter().any(|&k| k > 1) {
        return Err(Error::Unsupported("fermionic modes hold at most one particle".into()));
    }
    let rows: Vec<Vec<C64>> = (0..pattern.len())
        .map(|k| unitary.row(k).iter().copied().collect())
        .collect();
    let mut orbitals: Vec<&[C64]> = Vec::with_capacity(basis.n);
    for (k, &cnt) in pattern.iter().enumerate() {
        for _ in 0..cnt {
            orbitals.push(&rows[k]);
        }
    }
    let amps = product_amplitudes(basis, &orbitals);
    PureState::new(basis.clone(), amps)
}

/// All partitions of `n` into at most `max_parts` positive parts, each in
/// non-increasing order, sorted lexicographically descending.
pub fn partitions(n: u32, max_parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, max_part: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        if parts == 0 {
            return;
        }
        for p in (1..=left.min(max_part)).rev() {
            cur.push(p);
            rec(left - p, p, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    rec(n, n, max_parts, &mut Vec::new(), &mut out);
    out
}

/// A Haar-random uncorrelated state with a given occupation pattern.
pub fn random_uncorrelated_with_pattern(
    basis: &Arc<FockBasis>,
    pattern: &[u32],
    rng: &mut impl Rng,
) -> Result<PureState> {
    let u = random_unitary(basis.d, rng);
    uncorrelated_state(basis, &u, pattern)
}

/// Random uncorrelated pure state from a seeded generator: a Slater
/// determinant of Haar-random orbitals for fermions, a definition-1 product
/// with a uniformly drawn occupation pattern for bosons.
pub fn random_slater_state_with(
    kind: ParticleKind,
    d: usize,
    n: usize,
    rng: &mut impl Rng,
) -> Result<PureState> {
    let basis = FockBasis::shared(kind, d, n)?;
    let pattern = match kind {
        ParticleKind::Fermion => vec![1u32; n],
        ParticleKind::Boson => {
            let all = partitions(n as u32, d);
            all[rng.random_range(0..all.len())].clone()
        }
    };
    random_uncorrelated_with_pattern(&basis, &pattern, rng)
}

pub fn random_slater_state(kind: ParticleKind, d: usize, n: usize, seed: u64) -> Result<PureState> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_slater_state_with(kind, d, n, &mut rng)
}

/// Haar-random state over the whole occupation basis (generally correlated).
pub fn random_pure_state(basis: &Arc<FockBasis>, rng: &mut impl Rng) -> PureState {
    let amps = CVec::from_fn(basis.dim(), |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    PureState::new(basis.clone(), amps).expect("gaussian vector is nonzero")
}
