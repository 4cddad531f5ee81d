//! Homogeneous spin-conserving lattice models of fermions, their
//! translation-invariant correlators and the circulant reduced states built
//! from them.
//!
//! Modes are sector-major: `mode = sector · L^D + site`, with the flat site
//! index `x + y·L + z·L²`. Sector `s` carries `S_z = −Σ + s`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::fock::{self, DensityMatrix, FockBasis, ParticleKind, PureState};
use crate::measures;
use crate::spectra;
use crate::{CMat, CVec, Error, Result, C64, ZERO};

/// Largest fixed-N basis the exact-diagonalization engine accepts.
pub const DEFAULT_ED_CAP: usize = 2_000;
/// Largest first-quantized dimension `d^N` for the negativity fallback.
pub const DEFAULT_FALLBACK_CAP: usize = 1_024;
/// Eigenvalue gap below which an eigenstate counts as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-8;
/// Largest tolerated site dependence of the correlators.
pub const TRANSLATION_TOL: f64 = 1e-7;
/// Largest tolerated correlator between different spin sectors.
pub const CROSS_SECTOR_TOL: f64 = 1e-9;
/// Largest imaginary part tolerated in a circulant eigenvalue.
pub const IMAGINARY_TOL: f64 = 1e-7;

/// Periodic `L^D` lattice with `2Σ+1` spin sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeSpec {
    dim: usize,
    length: usize,
    sectors: usize,
}

impl LatticeSpec {
    pub fn new(dim: usize, length: usize, sectors: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Unsupported(format!("lattice dimension {dim} (expected 1, 2 or 3)")));
        }
        if length == 0 || sectors == 0 {
            return Err(Error::Unsupported("lattice needs L >= 1 and at least one spin sector".into()));
        }
        Ok(LatticeSpec { dim, length, sectors })
    }

    pub fn spinless(dim: usize, length: usize) -> Result<Self> {
        Self::new(dim, length, 1)
    }

    pub fn spin_half(dim: usize, length: usize) -> Result<Self> {
        Self::new(dim, length, 2)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn sectors(&self) -> usize {
        self.sectors
    }

    /// Spin `Σ`, so that `sectors = 2Σ + 1`.
    pub fn spin(&self) -> f64 {
        (self.sectors as f64 - 1.0) / 2.0
    }

    pub fn sites(&self) -> usize {
        self.length.pow(self.dim as u32)
    }

    pub fn modes(&self) -> usize {
        self.sites() * self.sectors
    }

    pub fn mode(&self, site: usize, sector: usize) -> usize {
        sector * self.sites() + site
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        (0..self.dim)
            .map(|_| {
                let c = rest % self.length;
                rest /= self.length;
                c
            })
            .collect()
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        coords.iter().rev().fold(0, |acc, &c| acc * self.length + c % self.length)
    }

    /// Site reached from `site` by the displacement `delta`, periodically.
    pub fn shift(&self, site: usize, delta: &[i64]) -> usize {
        let l = self.length as i64;
        let moved: Vec<usize> = self
            .coords(site)
            .iter()
            .enumerate()
            .map(|(a, &c)| (c as i64 + delta.get(a).copied().unwrap_or(0)).rem_euclid(l) as usize)
            .collect();
        self.site(&moved)
    }

    /// Flat index of the displacement `to − from`.
    pub fn displacement(&self, from: usize, to: usize) -> usize {
        let (a, b) = (self.coords(from), self.coords(to));
        let d: Vec<usize> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| (y + self.length - x) % self.length)
            .collect();
        self.site(&d)
    }

    /// Particle numbers per sector with `n` split as evenly as possible,
    /// lower sectors first.
    pub fn even_split(&self, n: usize) -> Vec<usize> {
        (0..self.sectors)
            .map(|s| n / self.sectors + usize::from(s < n % self.sectors))
            .collect()
    }
}

/// One hopping term `−(t c†_{i+δ} c_i + h.c.)`, summed over sites and sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Hopping {
    pub displacement: Vec<i64>,
    pub amplitude: C64,
}

/// Site-independent, spin-conserving Hamiltonian
/// `H = −Σ (t_δ c†_{i+δ,σ} c_{iσ} + h.c.) + u Σ_{i, σ<σ'} n_{iσ} n_{iσ'} − μ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub hoppings: Vec<Hopping>,
    pub interaction: f64,
    pub chemical_potential: f64,
}

impl HamiltonianSpec {
    /// Nearest-neighbour hopping `t` along every axis.
    pub fn tight_binding(lattice: &LatticeSpec, t: f64) -> Self {
        Self::twisted(lattice, t, 0.0)
    }

    /// Nearest-neighbour hopping `t·e^{iφ}` along every axis. A nonzero
    /// phase lifts the `k ↔ −k` degeneracy of the plain band.
    pub fn twisted(lattice: &LatticeSpec, t: f64, phase: f64) -> Self {
        let hoppings = (0..lattice.dim())
            .map(|a| {
                let mut delta = vec![0; lattice.dim()];
                delta[a] = 1;
                Hopping {
                    displacement: delta,
                    amplitude: C64::from_polar(t, phase),
                }
            })
            .collect();
        HamiltonianSpec {
            hoppings,
            interaction: 0.0,
            chemical_potential: 0.0,
        }
    }

    pub fn hubbard(lattice: &LatticeSpec, t: f64, u: f64) -> Self {
        HamiltonianSpec {
            interaction: u,
            ..Self::tight_binding(lattice, t)
        }
    }
}

/// Hamiltonian on the full fixed-N fermionic Fock sector of a lattice.
#[derive(Debug, Clone)]
pub struct ManyBodySystem {
    lattice: LatticeSpec,
    basis: Arc<FockBasis>,
    hamiltonian: CMat,
}

/// Dense `H` on the fixed-N sector.
pub fn build_hamiltonian(spec: &HamiltonianSpec, lattice: &LatticeSpec, particles: usize) -> Result<ManyBodySystem> {
    build_hamiltonian_capped(spec, lattice, particles, DEFAULT_ED_CAP)
}

pub fn build_hamiltonian_capped(
    spec: &HamiltonianSpec,
    lattice: &LatticeSpec,
    particles: usize,
    cap: usize,
) -> Result<ManyBodySystem> {
    let basis = FockBasis::shared(ParticleKind::Fermion, lattice.modes(), particles)?;
    if basis.dim() > cap {
        return Err(Error::DimensionOverflow { size: basis.dim(), cap });
    }
    let n = basis.dim();
    let mut h = CMat::zeros(n, n);
    let kind = ParticleKind::Fermion;
    for (col, occ) in basis.states().iter().enumerate() {
        for hop in &spec.hoppings {
            for sector in 0..lattice.sectors() {
                for site in 0..lattice.sites() {
                    let from = lattice.mode(site, sector);
                    let to = lattice.mode(lattice.shift(site, &hop.displacement), sector);
                    // −t c†_to c_from and its conjugate −t* c†_from c_to
                    for (dst, src, amp) in [(to, from, hop.amplitude), (from, to, hop.amplitude.conj())] {
                        let Some((mid, s1)) = fock::annihilate_on(kind, occ, src) else {
                            continue;
                        };
                        let Some((fin, s2)) = fock::create_on(kind, &mid, dst) else {
                            continue;
                        };
                        let row = basis.index_of(&fin).expect("number-conserving");
                        h[(row, col)] -= amp * (s1 * s2);
                    }
                }
            }
        }
        let mut diag = -spec.chemical_potential * particles as f64;
        if spec.interaction != 0.0 {
            for site in 0..lattice.sites() {
                let occ_site: Vec<u32> = (0..lattice.sectors()).map(|s| occ[lattice.mode(site, s)]).collect();
                let k: u32 = occ_site.iter().sum();
                diag += spec.interaction * (k * k.saturating_sub(1) / 2) as f64;
            }
        }
        h[(col, col)] += C64::new(diag, 0.0);
    }
    Ok(ManyBodySystem {
        lattice: *lattice,
        basis,
        hamiltonian: h,
    })
}

/// Inversion parity of a sequence.
fn permutation_sign(seq: &[usize]) -> f64 {
    let mut inversions = 0usize;
    for i in 0..seq.len() {
        for j in (i + 1)..seq.len() {
            if seq[i] > seq[j] {
                inversions += 1;
            }
        }
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Fock-space operator of the single-particle mode permutation `perm`.
fn mode_permutation_operator(basis: &FockBasis, perm: &[usize]) -> CMat {
    let n = basis.dim();
    let mut t = CMat::zeros(n, n);
    for (col, occ) in basis.states().iter().enumerate() {
        let occupied: Vec<usize> = (0..occ.len()).filter(|&m| occ[m] == 1).map(|m| perm[m]).collect();
        let mut target = vec![0u32; occ.len()];
        for &m in &occupied {
            target[m] = 1;
        }
        let row = basis.index_of(&target).expect("permutation preserves N");
        t[(row, col)] = C64::new(permutation_sign(&occupied), 0.0);
    }
    t
}

impl ManyBodySystem {
    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn basis(&self) -> &Arc<FockBasis> {
        &self.basis
    }

    pub fn hamiltonian(&self) -> &CMat {
        &self.hamiltonian
    }

    /// Unit translation along `axis`.
    pub fn translation(&self, axis: usize) -> CMat {
        let l = &self.lattice;
        let mut delta = vec![0i64; l.dim()];
        delta[axis] = 1;
        let mut perm = vec![0; l.modes()];
        for s in 0..l.sectors() {
            for site in 0..l.sites() {
                perm[l.mode(site, s)] = l.mode(l.shift(site, &delta), s);
            }
        }
        mode_permutation_operator(&self.basis, &perm)
    }

    /// Diagonal `S_z` on the occupation basis.
    pub fn sz(&self) -> CMat {
        let l = &self.lattice;
        let vals: Vec<C64> = self
            .basis
            .states()
            .iter()
            .map(|occ| {
                let m: f64 = (0..l.sectors())
                    .map(|s| {
                        let ns: u32 = (0..l.sites()).map(|i| occ[l.mode(i, s)]).sum();
                        (s as f64 - l.spin()) * ns as f64
                    })
                    .sum();
                C64::new(m, 0.0)
            })
            .collect();
        CMat::from_diagonal(&CVec::from_vec(vals))
    }

    /// Frobenius norms of `[H, T_a]` (largest over axes) and `[H, S_z]`.
    pub fn symmetry_residuals(&self) -> (f64, f64) {
        let h = &self.hamiltonian;
        let comm = |a: &CMat| spectra::frobenius(&(h * a - a * h));
        let trans = (0..self.lattice.dim())
            .map(|a| comm(&self.translation(a)))
            .fold(0.0, f64::max);
        (trans, comm(&self.sz()))
    }

    /// Basis indices with the given particle number in every sector.
    pub fn sector_indices(&self, counts: &[usize]) -> Result<Vec<usize>> {
        let l = &self.lattice;
        if counts.len() != l.sectors() || counts.iter().sum::<usize>() != self.basis.particles() {
            return Err(Error::Dimension(format!(
                "sector counts {counts:?} do not split {} particles over {} sectors",
                self.basis.particles(),
                l.sectors()
            )));
        }
        Ok((0..self.basis.dim())
            .filter(|&i| {
                let occ = self.basis.occupation(i);
                (0..l.sectors()).all(|s| {
                    let ns: u32 = (0..l.sites()).map(|site| occ[l.mode(site, s)]).sum();
                    ns as usize == counts[s]
                })
            })
            .collect())
    }

    /// All eigenpairs of the block with the given sector counts, ascending.
    pub fn eigenstates(&self, counts: &[usize]) -> Result<Vec<(f64, PureState)>> {
        let idx = self.sector_indices(counts)?;
        let block = CMat::from_fn(idx.len(), idx.len(), |r, c| self.hamiltonian[(idx[r], idx[c])]);
        let spec = spectra::hermitian_eig(&block)?;
        Ok((0..idx.len())
            .map(|k| {
                let mut v = CVec::zeros(self.basis.dim());
                for (r, &i) in idx.iter().enumerate() {
                    v[i] = spec.eigenvectors[(r, k)];
                }
                (spec.eigenvalues[k], PureState::raw(self.basis.clone(), v))
            })
            .collect())
    }

    /// The `index`-th eigenstate of a sector block (0 = ground state).
    pub fn eigenstate(&self, counts: &[usize], index: usize) -> Result<Eigenstate> {
        let all = self.eigenstates(counts)?;
        if index >= all.len() {
            return Err(Error::Dimension(format!(
                "eigenstate {index} requested, block has {} states",
                all.len()
            )));
        }
        let e = all[index].0;
        let gap = all
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != index)
            .map(|(_, (x, _))| (x - e).abs())
            .fold(f64::INFINITY, f64::min);
        Ok(Eigenstate {
            energy: e,
            gap,
            state: all[index].1.clone(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Eigenstate {
    pub energy: f64,
    /// Distance to the nearest other level of the same block.
    pub gap: f64,
    pub state: PureState,
}

/// Translation-averaged correlators `x_δ = ⟨c†_{k+δ,σ} c_{kσ}⟩` per sector,
/// indexed by the flat displacement `δ_x + δ_y L + δ_z L²`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    dim: usize,
    length: usize,
    particles: usize,
    sectors: Vec<Vec<C64>>,
}

impl CorrelatorTable {
    /// Validates lengths, `x_{−δ} = conj(x_δ)` and `Σ_σ L^D x_0^σ = N`.
    pub fn new(dim: usize, length: usize, particles: usize, sectors: Vec<Vec<C64>>) -> Result<Self> {
        let lattice = LatticeSpec::new(dim, length, sectors.len().max(1))?;
        if sectors.is_empty() {
            return Err(Error::Dimension("correlator table has no sectors".into()));
        }
        if particles == 0 {
            return Err(Error::Unsupported("correlator table needs N >= 1".into()));
        }
        let sites = lattice.sites();
        let mut residue: f64 = 0.0;
        let mut total = 0.0;
        for x in &sectors {
            if x.len() != sites {
                return Err(Error::Dimension(format!(
                    "sector has {} correlators, lattice has {sites} sites",
                    x.len()
                )));
            }
            for delta in 0..sites {
                let minus = lattice.displacement(delta, 0);
                residue = residue.max((x[minus] - x[delta].conj()).norm());
            }
            total += x[0].re * sites as f64;
        }
        let scale = 1.0 + total.abs();
        if residue > 1e-9 * scale {
            return Err(Error::InconsistentTable { residue });
        }
        if (total - particles as f64).abs() > 1e-7 * scale {
            return Err(Error::InconsistentTable {
                residue: (total - particles as f64).abs(),
            });
        }
        Ok(CorrelatorTable {
            dim,
            length,
            particles,
            sectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn values(&self, sector: usize) -> &[C64] {
        &self.sectors[sector]
    }

    /// `N_σ = L^D x_0`.
    pub fn sector_particles(&self, sector: usize) -> f64 {
        self.sectors[sector][0].re * self.lattice().sites() as f64
    }

    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec {
            dim: self.dim,
            length: self.length,
            sectors: self.sectors.len(),
        }
    }
}

/// Correlator table of an eigenstate, with the symmetry residuals observed.
#[derive(Debug, Clone)]
pub struct Correlators {
    pub table: CorrelatorTable,
    /// Largest `|⟨c†_{i+δ}c_i⟩ − x_δ|` over sites.
    pub translation_deviation: f64,
    /// Largest `|⟨c†_{iσ}c_{jσ'}⟩|` with `σ ≠ σ'`.
    pub cross_sector_max: f64,
}

pub fn correlators_from_state(state: &PureState, lattice: &LatticeSpec) -> Result<Correlators> {
    if state.kind() != ParticleKind::Fermion || state.modes() != lattice.modes() {
        return Err(Error::Dimension(format!(
            "expected a fermionic state on {} modes",
            lattice.modes()
        )));
    }
    let s = state.normalized()?;
    // g[(i, j)] = ⟨c_i† c_j⟩
    let g = fock::one_body_matrix(&s);
    let sites = lattice.sites();
    let mut deviation: f64 = 0.0;
    let mut cross: f64 = 0.0;
    let mut sectors = Vec::with_capacity(lattice.sectors());
    for sec in 0..lattice.sectors() {
        let mut x = vec![ZERO; sites];
        let mut samples: Vec<Vec<C64>> = vec![Vec::with_capacity(sites); sites];
        for k in 0..sites {
            for j in 0..sites {
                let delta = lattice.displacement(k, j);
                samples[delta].push(g[(lattice.mode(j, sec), lattice.mode(k, sec))]);
            }
        }
        for (delta, vals) in samples.iter().enumerate() {
            let mean = vals.iter().sum::<C64>() / vals.len() as f64;
            for v in vals {
                deviation = deviation.max((v - mean).norm());
            }
            x[delta] = mean;
        }
        for other in 0..lattice.sectors() {
            if other == sec {
                continue;
            }
            for i in 0..sites {
                for j in 0..sites {
                    cross = cross.max(g[(lattice.mode(i, sec), lattice.mode(j, other))].norm());
                }
            }
        }
        sectors.push(x);
    }
    if deviation > TRANSLATION_TOL {
        return Err(Error::NotTranslationInvariant { deviation });
    }
    if cross > CROSS_SECTOR_TOL {
        return Err(Error::Unsupported(format!(
            "state mixes spin sectors (cross correlator {cross:e})"
        )));
    }
    // remove the Hermiticity noise of the averages
    let lat = *lattice;
    for x in sectors.iter_mut() {
        let sym: Vec<C64> = (0..sites)
            .map(|d| (x[d] + x[lat.displacement(d, 0)].conj()) * 0.5)
            .collect();
        *x = sym;
    }
    let table = CorrelatorTable::new(lattice.dim(), lattice.length(), state.particles(), sectors)?;
    Ok(Correlators {
        table,
        translation_deviation: deviation,
        cross_sector_max: cross,
    })
}

/// Circulant block `ρ^σ(i, j) = x_{j−i} / N` of one sector.
pub fn circulant_rdm(table: &CorrelatorTable, sector: usize) -> CMat {
    let lat = table.lattice();
    let n = table.particles() as f64;
    let x = table.values(sector);
    let sites = lat.sites();
    CMat::from_fn(sites, sites, |i, j| x[lat.displacement(i, j)] / n)
}

/// Block-diagonal single-particle reduced state over all sectors.
pub fn assembled_rdm(table: &CorrelatorTable) -> CMat {
    let lat = table.lattice();
    let sites = lat.sites();
    let mut out = CMat::zeros(lat.modes(), lat.modes());
    for s in 0..lat.sectors() {
        out.view_mut((s * sites, s * sites), (sites, sites))
            .copy_from(&circulant_rdm(table, s));
    }
    out
}

/// Eigenvalues of the circulant block by the D-dimensional DFT of the
/// correlators, `λ_p = Σ_δ x_δ exp(2πi p·δ / L) / N`, in flat order of `p`.
pub fn circulant_eigenvalues(table: &CorrelatorTable, sector: usize) -> Result<Vec<f64>> {
    let lat = table.lattice();
    let l = lat.length() as f64;
    let n = table.particles() as f64;
    let x = table.values(sector);
    let sites = lat.sites();
    let coords: Vec<Vec<usize>> = (0..sites).map(|s| lat.coords(s)).collect();
    let mut out = Vec::with_capacity(sites);
    for p in &coords {
        let mut lam = ZERO;
        for (delta, xd) in x.iter().enumerate() {
            let phase: usize = p.iter().zip(&coords[delta]).map(|(a, b)| a * b).sum();
            lam += xd * C64::from_polar(1.0, 2.0 * PI * phase as f64 / l);
        }
        lam /= n;
        if lam.im.abs() > IMAGINARY_TOL {
            return Err(Error::InconsistentTable { residue: lam.im.abs() });
        }
        out.push(lam.re);
    }
    Ok(out)
}

/// Spectrum of the full reduced state, sector after sector.
pub fn reduced_spectrum(table: &CorrelatorTable) -> Result<Vec<f64>> {
    let mut all = Vec::with_capacity(table.lattice().modes());
    for s in 0..table.sector_count() {
        all.extend(circulant_eigenvalues(table, s)?);
    }
    Ok(all)
}

/// `S(ρ_r) = −Σ_{j,σ} λ_j^σ log λ_j^σ`.
pub fn entropy_from_correlators(table: &CorrelatorTable) -> Result<f64> {
    spectra::entropy_of_spectrum(&reduced_spectrum(table)?)
}

/// Random table satisfying the consistency conditions, for oracle checks.
/// The reduced state it defines need not be positive.
pub fn random_consistent_table(
    lattice: &LatticeSpec,
    particles: usize,
    rng: &mut impl Rng,
) -> Result<CorrelatorTable> {
    let sites = lattice.sites();
    let weights: Vec<f64> = (0..lattice.sectors()).map(|_| rng.random_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    let sectors = weights
        .iter()
        .map(|w| {
            let raw: Vec<C64> = (0..sites)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let mut x: Vec<C64> = (0..sites)
                .map(|d| (raw[d] + raw[lattice.displacement(d, 0)].conj()) * 0.5)
                .collect();
            x[0] = C64::new(particles as f64 * w / wsum / sites as f64, 0.0);
            x
        })
        .collect();
    CorrelatorTable::new(lattice.dim(), lattice.length(), particles, sectors)
}

/// Correlation quantifier chosen for a lattice eigenstate.
#[derive(Debug, Clone, PartialEq)]
pub enum LatticeQuantifier {
    /// Nondegenerate eigenstate: circulant spectrum and entropy.
    Entropy {
        spectrum: Vec<f64>,
        entropy: f64,
        shifted: f64,
    },
    /// Degenerate or non-invariant eigenstate: shifted negativity of the
    /// state as returned by the eigensolver.
    Negativity { value: f64, trace_norm: f64, reason: String },
}

#[derive(Debug, Clone)]
pub struct LatticeAnalysis {
    pub energy: f64,
    pub gap: f64,
    pub correlators: Option<Correlators>,
    pub quantifier: LatticeQuantifier,
}

/// Eigenstate `index` of the given sector block, quantified by the circulant
/// entropy when it is nondegenerate and by the negativity otherwise (if
/// `d^N ≤ fallback_cap`).
pub fn analyze_eigenstate(
    system: &ManyBodySystem,
    counts: &[usize],
    index: usize,
    fallback_cap: usize,
) -> Result<LatticeAnalysis> {
    let eig = system.eigenstate(counts, index)?;
    let attempt = if eig.gap < DEGENERACY_GAP {
        Err(Error::DegenerateEigenstate { index, gap: eig.gap })
    } else {
        correlators_from_state(&eig.state, system.lattice())
    };
    match attempt {
        Ok(corr) => {
            let spectrum = reduced_spectrum(&corr.table)?;
            let entropy = spectra::entropy_of_spectrum(&spectrum)?;
            let shifted = entropy - (system.basis().particles() as f64).ln();
            Ok(LatticeAnalysis {
                energy: eig.energy,
                gap: eig.gap,
                correlators: Some(corr),
                quantifier: LatticeQuantifier::Entropy {
                    spectrum,
                    entropy,
                    shifted,
                },
            })
        }
        Err(err @ (Error::DegenerateEigenstate { .. } | Error::NotTranslationInvariant { .. })) => {
            let size = (system.basis().modes() as f64).powi(system.basis().particles() as i32);
            if size > fallback_cap as f64 {
                return Err(err);
            }
            let neg = measures::shifted_negativity(&DensityMatrix::from_pure(&eig.state))?;
            Ok(LatticeAnalysis {
                energy: eig.energy,
                gap: eig.gap,
                correlators: None,
                quantifier: LatticeQuantifier::Negativity {
                    value: neg.value,
                    trace_norm: neg.trace_norm,
                    reason: err.to_string(),
                },
            })
        }
        Err(e) => Err(e),
    }
}
