//! Two-particle canonical forms, dual states and Slater concurrence.
//!
//! A two-particle state `ψ = ½ Σ_{ij} w_ij a_i† a_j† |0⟩` is described by its
//! coefficient matrix `w`, antisymmetric for fermions and symmetric for
//! bosons. Canonical forms are written `w = Uᵀ Z U`; row `k` of `U` is the
//! new mode `b_k† = Σ_l U[k, l] a_l†`.

use std::sync::Arc;

use crate::fock::{self, DensityMatrix, FockBasis, ParticleKind, PureState, Space};
use crate::spectra;
use crate::{CMat, CVec, Error, Result, C64, ONE};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Canonical two-particle decomposition.
///
/// Fermions: `ψ = Σ_k z_k b_{2k}† b_{2k+1}† |0⟩`.
/// Bosons: `ψ = Σ_k z_k (b_k†)² |0⟩ / √2`.
/// In both cases `Σ z_k² = 1` and `z` is non-increasing.
#[derive(Debug, Clone)]
pub struct SlaterDecomposition {
    pub kind: ParticleKind,
    pub coefficients: Vec<f64>,
    pub mode_unitary: CMat,
}

impl SlaterDecomposition {
    /// The state described by the decomposition, in the original modes.
    pub fn reconstruct(&self) -> Result<PureState> {
        let d = self.mode_unitary.nrows();
        let basis = FockBasis::shared(self.kind, d, 2)?;
        let rows: Vec<Vec<C64>> = (0..d)
            .map(|k| self.mode_unitary.row(k).iter().copied().collect())
            .collect();
        let mut amps = CVec::zeros(basis.dim());
        for (k, &z) in self.coefficients.iter().enumerate() {
            let (p, q, scale) = match self.kind {
                ParticleKind::Fermion => (2 * k, 2 * k + 1, z),
                ParticleKind::Boson => (k, k, z / SQRT2),
            };
            amps += fock::product_amplitudes(&basis, &[&rows[p], &rows[q]]) * C64::new(scale, 0.0);
        }
        Ok(PureState::raw(basis, amps))
    }

    /// Slater rank: number of coefficients above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&z| z > tol).count()
    }
}

fn require_two(state: &PureState, kind: ParticleKind) -> Result<()> {
    if state.kind() != kind || state.particles() != 2 {
        return Err(Error::Unsupported(format!(
            "expected two {kind}s, got {} {}s",
            state.particles(),
            state.kind()
        )));
    }
    Ok(())
}

/// Coefficient matrix `w` of a two-particle state.
pub fn coefficient_matrix(state: &PureState) -> Result<CMat> {
    if state.particles() != 2 {
        return Err(Error::Unsupported("coefficient matrix needs N = 2".into()));
    }
    let b = state.basis();
    let d = b.modes();
    let mut w = CMat::zeros(d, d);
    for (idx, occ) in b.states().iter().enumerate() {
        let c = state.amps()[idx];
        let modes: Vec<usize> = (0..d).flat_map(|m| std::iter::repeat_n(m, occ[m] as usize)).collect();
        let (i, j) = (modes[0], modes[1]);
        match b.kind() {
            ParticleKind::Fermion => {
                w[(i, j)] = c;
                w[(j, i)] = -c;
            }
            ParticleKind::Boson if i == j => w[(i, i)] = c * SQRT2,
            ParticleKind::Boson => {
                w[(i, j)] = c;
                w[(j, i)] = c;
            }
        }
    }
    Ok(w)
}

/// Orthonormal basis (columns) of the complement of orthonormal `vecs` in `C^m`.
fn orthonormal_complement(vecs: &[CVec], m: usize) -> CMat {
    let mut accepted: Vec<CVec> = vecs.to_vec();
    let mut out = Vec::new();
    let mut candidates: Vec<(f64, usize)> = (0..m)
        .map(|i| {
            let overlap: f64 = vecs.iter().map(|v| v[i].norm_sqr()).sum();
            (1.0 - overlap, i)
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (_, i) in candidates {
        if accepted.len() == m {
            break;
        }
        let mut x = CVec::zeros(m);
        x[i] = ONE;
        for _ in 0..2 {
            for a in &accepted {
                let p = a.dotc(&x);
                x.axpy(-p, a, ONE);
            }
        }
        let n = x.norm();
        if n > 1e-6 {
            x.unscale_mut(n);
            accepted.push(x.clone());
            out.push(x);
        }
    }
    if out.is_empty() {
        return CMat::zeros(m, 0);
    }
    CMat::from_columns(&out)
}

/// Top eigenpair of the Hermitian matrix `B B†`.
fn top_left_singular(b: &CMat) -> Result<(f64, CVec)> {
    let spec = spectra::hermitian_eig(&(b * b.adjoint()))?;
    let last = spec.eigenvalues.len() - 1;
    Ok((
        spec.eigenvalues[last].max(0.0),
        spec.eigenvectors.column(last).into_owned(),
    ))
}

/// Canonical form of an antisymmetric matrix: returns `(z, Q)` with
/// `Qᵀ w Q` block diagonal with blocks `z_k [[0, 1], [-1, 0]]`.
fn youla(w: &CMat) -> Result<(Vec<f64>, CMat)> {
    let d = w.nrows();
    let scale = spectra::frobenius(w).max(1e-300);
    let mut p_cur = CMat::identity(d, d);
    let mut b = w.clone();
    let mut cols: Vec<CVec> = Vec::with_capacity(d);
    let mut z = Vec::new();
    while b.nrows() >= 2 {
        let m = b.nrows();
        let (lam, u) = top_left_singular(&b)?;
        let zk = lam.sqrt();
        if zk <= 1e-14 * scale {
            break;
        }
        let e = u.conjugate();
        let f = b.adjoint() * &u / C64::new(zk, 0.0);
        cols.push(&p_cur * &e);
        cols.push(&p_cur * &f);
        z.push(zk);
        let rest = orthonormal_complement(&[e, f], m);
        if rest.ncols() == 0 {
            p_cur = CMat::zeros(d, 0);
            break;
        }
        b = rest.transpose() * &b * &rest;
        p_cur = &p_cur * rest;
    }
    let remaining = p_cur.ncols();
    for k in 0..remaining {
        cols.push(p_cur.column(k).into_owned());
    }
    while z.len() < d / 2 {
        z.push(0.0);
    }
    Ok((z, CMat::from_columns(&cols)))
}

/// Canonical form of a symmetric matrix: returns `(s, Q)` with
/// `Qᵀ w Q = diag(s)`, `s ≥ 0` non-increasing.
fn takagi(w: &CMat) -> Result<(Vec<f64>, CMat)> {
    let d = w.nrows();
    let scale = spectra::frobenius(w).max(1e-300);
    let mut p_cur = CMat::identity(d, d);
    let mut b = w.clone();
    let mut cols: Vec<CVec> = Vec::with_capacity(d);
    let mut s = Vec::new();
    while b.nrows() >= 1 {
        let m = b.nrows();
        let (lam, x) = top_left_singular(&b)?;
        let sk = lam.sqrt();
        if sk <= 1e-14 * scale {
            break;
        }
        // x ↦ B x̄ / s is an antiunitary involution on the top eigenspace;
        // a fixed point v satisfies B v̄ = s v, and e = v̄ is a Takagi vector.
        let image = |y: &CVec| &b * y.conjugate() / C64::new(sk, 0.0);
        let plus = &x + image(&x);
        let ix = &x * C64::new(0.0, 1.0);
        let minus = &ix + image(&ix);
        let v = if plus.norm() >= minus.norm() { plus } else { minus };
        let v = v.unscale(v.norm());
        let e = v.conjugate();
        cols.push(&p_cur * &e);
        s.push(sk);
        let rest = orthonormal_complement(&[e], m);
        if rest.ncols() == 0 {
            p_cur = CMat::zeros(d, 0);
            break;
        }
        b = rest.transpose() * &b * &rest;
        p_cur = &p_cur * rest;
    }
    for k in 0..p_cur.ncols() {
        cols.push(p_cur.column(k).into_owned());
    }
    while s.len() < d {
        s.push(0.0);
    }
    Ok((s, CMat::from_columns(&cols)))
}

/// Slater decomposition of a two-fermion state (any `d ≥ 2`).
pub fn slater_decompose_two_fermion(state: &PureState) -> Result<SlaterDecomposition> {
    require_two(state, ParticleKind::Fermion)?;
    let s = state.normalized()?;
    let w = coefficient_matrix(&s)?;
    let (z, q) = youla(&w)?;
    let (z, q) = sort_pairs(z, q, 2);
    Ok(SlaterDecomposition {
        kind: ParticleKind::Fermion,
        coefficients: z,
        mode_unitary: q.adjoint(),
    })
}

/// Takagi decomposition of a two-boson state.
pub fn takagi_decompose_two_boson(state: &PureState) -> Result<SlaterDecomposition> {
    require_two(state, ParticleKind::Boson)?;
    let s = state.normalized()?;
    let w = coefficient_matrix(&s)?;
    let (sv, q) = takagi(&w)?;
    let z = sv.iter().map(|x| x / SQRT2).collect();
    let (z, q) = sort_pairs(z, q, 1);
    Ok(SlaterDecomposition {
        kind: ParticleKind::Boson,
        coefficients: z,
        mode_unitary: q.adjoint(),
    })
}

/// Reorder coefficient groups (of `width` columns each) by descending value.
fn sort_pairs(z: Vec<f64>, q: CMat, width: usize) -> (Vec<f64>, CMat) {
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    let mut cols = Vec::with_capacity(q.ncols());
    for &k in &order {
        for c in 0..width {
            cols.push(q.column(width * k + c).into_owned());
        }
    }
    for c in (width * z.len())..q.ncols() {
        cols.push(q.column(c).into_owned());
    }
    (order.iter().map(|&k| z[k]).collect(), CMat::from_columns(&cols))
}

/// Sign of the permutation sorting `seq` ascending (entries distinct).
fn permutation_parity(seq: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..seq.len() {
        for j in (i + 1)..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Real orthogonal part `U` of the dual map `ψ ↦ U ψ̄` on the supported
/// spaces: two fermions in four modes (particle-hole map) and two bosons in
/// two modes (spin flip).
pub fn dual_unitary(basis: &FockBasis) -> Result<CMat> {
    let dim = basis.dim();
    let mut u = CMat::zeros(dim, dim);
    match (basis.kind(), basis.modes(), basis.particles()) {
        (ParticleKind::Fermion, 4, 2) => {
            for (col, occ) in basis.states().iter().enumerate() {
                let occupied: Vec<usize> = (0..4).filter(|&m| occ[m] == 1).collect();
                let empty: Vec<usize> = (0..4).filter(|&m| occ[m] == 0).collect();
                let row = basis.index_of_modes(&empty).expect("complement pair");
                let seq = [occupied[0], occupied[1], empty[0], empty[1]];
                u[(row, col)] = C64::new(permutation_parity(&seq), 0.0);
            }
        }
        (ParticleKind::Boson, 2, 2) => {
            // σ_y ⊗ σ_y on the symmetric subspace: |0,2⟩ ↔ −|2,0⟩, |1,1⟩ fixed
            let i02 = basis.index_of(&[0, 2]).unwrap();
            let i11 = basis.index_of(&[1, 1]).unwrap();
            let i20 = basis.index_of(&[2, 0]).unwrap();
            u[(i20, i02)] = -ONE;
            u[(i02, i20)] = -ONE;
            u[(i11, i11)] = ONE;
        }
        (kind, d, n) => {
            return Err(Error::Unsupported(format!(
                "dual state is defined for two fermions in 4 modes or two bosons in 2 modes, got {n} {kind}s in {d} modes"
            )))
        }
    }
    Ok(u)
}

/// `ψ̃ = U ψ̄`.
pub fn dual_pure(state: &PureState) -> Result<PureState> {
    let u = dual_unitary(state.basis())?;
    Ok(PureState::raw(state.basis().clone(), u * state.amps().conjugate()))
}

/// `ρ̃ = U ρ̄ Uᵀ`.
pub fn dual_state(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let basis = subspace_basis(rho)?;
    let u = dual_unitary(&basis)?;
    let mat = &u * rho.matrix().conjugate() * u.transpose();
    DensityMatrix::new(mat, Space::Subspace(basis))
}

fn subspace_basis(rho: &DensityMatrix) -> Result<Arc<FockBasis>> {
    rho.subspace_basis()
        .cloned()
        .ok_or_else(|| Error::Unsupported("expected a state on the occupation basis".into()))
}

/// `|⟨ψ̃|ψ⟩|`.
pub fn slater_concurrence_pure(state: &PureState) -> Result<f64> {
    let s = state.normalized()?;
    let u = dual_unitary(s.basis())?;
    let a = s.amps();
    Ok((a.transpose() * &u * a)[(0, 0)].norm())
}

/// Eigenvalues of `√(ρ ρ̃)`, non-increasing, one per basis state.
///
/// With `ρ = A A†` (A built from the nonzero eigenpairs), these are the
/// singular values of `A† U Ā`, which avoids taking matrix square roots.
pub fn concurrence_spectrum(rho: &DensityMatrix) -> Result<Vec<f64>> {
    let basis = subspace_basis(rho)?;
    let u = dual_unitary(&basis)?;
    let spec = spectra::hermitian_eig(rho.matrix())?;
    let dim = basis.dim();
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..dim)
        .filter(|&k| spec.eigenvalues[k] > 1e-14 * top.max(1e-300))
        .collect();
    let a = CMat::from_fn(dim, keep.len(), |i, c| {
        spec.eigenvectors[(i, keep[c])] * spec.eigenvalues[keep[c]].sqrt()
    });
    let tau = a.adjoint() * &u * a.conjugate();
    let mut lam = spectra::singular_values(&tau);
    lam.resize(dim, 0.0);
    Ok(lam)
}

/// `max(0, λ_1 − Σ_{k>1} λ_k)` over the spectrum of `√(ρ ρ̃)`.
pub fn slater_concurrence_mixed(rho: &DensityMatrix) -> Result<f64> {
    let lam = concurrence_spectrum(rho)?;
    let rest: f64 = lam[1..].iter().sum();
    Ok((lam[0] - rest).max(0.0))
}

/// `(σ_opt, φ_opt)` with `φ_opt` the even mixture of `b_0† b_2† |0⟩` and
/// `b_1† b_3† |0⟩` in the state's own Slater modes and
/// `σ_opt = (ρ + t φ_opt)/(1 + t)`.
pub fn optimal_decomposition(state: &PureState, t: f64) -> Result<(DensityMatrix, DensityMatrix)> {
    require_two(state, ParticleKind::Fermion)?;
    if state.modes() != 4 {
        return Err(Error::Unsupported("optimal decomposition needs four modes".into()));
    }
    if t < 0.0 {
        return Err(Error::Unsupported("mixing weight must be nonnegative".into()));
    }
    let dec = slater_decompose_two_fermion(state)?;
    let basis = state.basis().clone();
    let rows: Vec<Vec<C64>> = (0..4)
        .map(|k| dec.mode_unitary.row(k).iter().copied().collect())
        .collect();
    let s02 = fock::product_amplitudes(&basis, &[&rows[0], &rows[2]]);
    let s13 = fock::product_amplitudes(&basis, &[&rows[1], &rows[3]]);
    let phi = (&s02 * s02.adjoint() + &s13 * s13.adjoint()) * C64::new(0.5, 0.0);
    let rho = DensityMatrix::from_pure(state);
    let sigma = (rho.matrix() + &phi * C64::new(t, 0.0)) / C64::new(1.0 + t, 0.0);
    Ok((
        DensityMatrix::new(sigma, Space::Subspace(basis.clone()))?,
        DensityMatrix::new(phi, Space::Subspace(basis))?,
    ))
}

/// Smallest `t` with vanishing mixed concurrence of `σ_opt(t)`, by bisection.
pub fn line_search_robustness(state: &PureState) -> Result<f64> {
    const ZERO_TOL: f64 = 1e-12;
    let correlated = |t: f64| -> Result<bool> {
        let (sigma, _) = optimal_decomposition(state, t)?;
        Ok(slater_concurrence_mixed(&sigma)? > ZERO_TOL)
    };
    if !correlated(0.0)? {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while correlated(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Unsupported("line search did not bracket".into()));
        }
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if correlated(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}
