//! Dense complex linear algebra used by every measure in the crate.
//!
//! Everything here operates on small dense matrices. The Hermitian
//! eigensolver is a cyclic Jacobi sweep, singular values come from a
//! one-sided (Hestenes) Jacobi iteration, which keeps tiny singular values
//! accurate to working precision in absolute terms.
//!
//! First-quantized operators on `(C^d)^{⊗N}` use the row-major tensor layout:
//! the flat index of `|i_1 i_2 … i_N⟩` is `i_1 d^{N-1} + … + i_N`, so particle
//! 0 is the most significant digit.

use crate::{CMat, Error, Result, C64, ZERO};

/// Off-diagonal tolerance of the Jacobi sweeps, relative to `‖A‖_F`.
const JACOBI_REL_TOL: f64 = 1e-15;
const MAX_SWEEPS: usize = 80;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub eigenvectors: CMat,
}

impl Spectrum {
    /// Rebuild `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = CMat::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for j in 0..n {
                let vj = v[(j, k)].conj() * w;
                for i in 0..n {
                    out[(i, j)] += v[(i, k)] * vj;
                }
            }
        }
        out
    }
}

pub fn is_hermitian(mat: &CMat, tol: f64) -> bool {
    if !mat.is_square() {
        return false;
    }
    let n = mat.nrows();
    for i in 0..n {
        for j in i..n {
            if (mat[(i, j)] - mat[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

fn max_abs(mat: &CMat) -> f64 {
    mat.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

fn check_square(mat: &CMat) -> Result<usize> {
    if mat.is_square() {
        Ok(mat.nrows())
    } else {
        Err(Error::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        })
    }
}

/// The 2x2 unitary `J` that zeroes the `(p, q)` entry of a Hermitian block
/// `[[app, g], [g*, aqq]]` under `J† A J`. Returned as `(jpp, jpq, jqp, jqq)`
/// together with the shift `t|g|` applied to the diagonal.
#[inline]
fn jacobi_rotation(app: f64, aqq: f64, g: C64) -> (C64, C64, C64, C64, f64) {
    let abs_g = g.norm();
    let phase_conj = (g / abs_g).conj();
    let theta = (aqq - app) / (2.0 * abs_g);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    (
        C64::new(c, 0.0),
        C64::new(s, 0.0),
        phase_conj * (-s),
        phase_conj * c,
        t * abs_g,
    )
}

/// Cyclic Jacobi on a row-major Hermitian buffer. Accumulates eigenvectors
/// into `vecs` (row-major, initialised by the caller) when given.
fn jacobi_in_place(a: &mut [C64], n: usize, mut vecs: Option<&mut [C64]>) {
    let frob: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if frob == 0.0 {
        return;
    }
    let target = JACOBI_REL_TOL * frob;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[p * n + q];
                if g.norm() <= 1e-300 {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let (jpp, jpq, jqp, jqq, shift) = jacobi_rotation(app, aqq, g);
                // columns: A <- A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * jpp + akq * jqp;
                    a[k * n + q] = akp * jpq + akq * jqq;
                }
                // rows: A <- J† A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[q * n + k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p] = C64::new(app - shift, 0.0);
                a[q * n + q] = C64::new(aqq + shift, 0.0);
                if let Some(v) = vecs.as_deref_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * jpp + vkq * jqp;
                        v[k * n + q] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
    }
}

fn to_row_major_hermitian(mat: &CMat) -> Vec<C64> {
    let n = mat.nrows();
    let mut a = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            // symmetrize: small anti-Hermitian noise is discarded
            a[i * n + j] = (mat[(i, j)] + mat[(j, i)].conj()) * 0.5;
        }
    }
    a
}

/// Eigenvalues and eigenvectors of a Hermitian matrix, ascending.
///
/// The input is symmetrized first; it must be Hermitian within `1e-8`
/// relative to its largest entry.
pub fn hermitian_eig(mat: &CMat) -> Result<Spectrum> {
    let n = check_square(mat)?;
    check_hermitian_input(mat)?;
    let mut a = to_row_major_hermitian(mat);
    let mut v = vec![ZERO; n * n];
    for i in 0..n {
        v[i * n + i] = C64::new(1.0, 0.0);
    }
    jacobi_in_place(&mut a, n, Some(&mut v));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let eigenvalues = order.iter().map(|&k| a[k * n + k].re).collect();
    let eigenvectors = CMat::from_fn(n, n, |i, c| v[i * n + order[c]]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenvalues only.
pub fn eigvalsh(mat: &CMat) -> Result<Vec<f64>> {
    let n = check_square(mat)?;
    check_hermitian_input(mat)?;
    let mut a = to_row_major_hermitian(mat);
    jacobi_in_place(&mut a, n, None);
    let mut vals: Vec<f64> = (0..n).map(|k| a[k * n + k].re).collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

fn check_hermitian_input(mat: &CMat) -> Result<()> {
    let scale = max_abs(mat).max(1.0);
    if !is_hermitian(mat, 1e-8 * scale) {
        return Err(Error::Unsupported(
            "matrix is not Hermitian within 1e-8".to_string(),
        ));
    }
    Ok(())
}

/// Singular values in descending order (one-sided Jacobi).
pub fn singular_values(mat: &CMat) -> Vec<f64> {
    let (m, n) = mat.shape();
    // column-major copy; nalgebra storage already is column-major
    let mut cols: Vec<C64> = mat.as_slice().to_vec();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (cp, cq) = (p * m, q * m);
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for i in 0..m {
                    let x = cols[cp + i];
                    let y = cols[cq + i];
                    alpha += x.norm_sqr();
                    beta += y.norm_sqr();
                    gamma += x.conj() * y;
                }
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let (jpp, jpq, jqp, jqq, _) = jacobi_rotation(alpha, beta, gamma);
                for i in 0..m {
                    let x = cols[cp + i];
                    let y = cols[cq + i];
                    cols[cp + i] = x * jpp + y * jqp;
                    cols[cq + i] = x * jpq + y * jqq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n)
        .map(|j| cols[j * m..(j + 1) * m].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.truncate(m.min(n));
    sv
}

/// Sum of singular values. Hermitian input uses `Σ|λ_i|`.
pub fn trace_norm(mat: &CMat) -> Result<f64> {
    check_square(mat)?;
    if is_hermitian(mat, 1e-12 * max_abs(mat).max(1.0)) {
        Ok(eigvalsh(mat)?.iter().map(|l| l.abs()).sum())
    } else {
        Ok(singular_values(mat).iter().sum())
    }
}

/// Number of particles `N` with `d^N == dim`.
fn tensor_order(dim: usize, d: usize) -> Result<usize> {
    if d < 2 {
        return if dim == 1 {
            Ok(1)
        } else {
            Err(Error::Dimension(format!("dimension {dim} is not a power of {d}")))
        };
    }
    let mut n = 0;
    let mut p = 1;
    while p < dim {
        p *= d;
        n += 1;
    }
    if p == dim {
        Ok(n)
    } else {
        Err(Error::Dimension(format!("dimension {dim} is not a power of {d}")))
    }
}

/// Transpose the tensor factor of `particle` (0-based) in an operator on
/// `(C^d)^{⊗N}`.
pub fn partial_transpose(rho: &CMat, d: usize, particle: usize) -> Result<CMat> {
    let dim = check_square(rho)?;
    let n = tensor_order(dim, d)?;
    if particle >= n {
        return Err(Error::Dimension(format!(
            "particle {particle} out of range for {n} particles"
        )));
    }
    let stride = d.pow((n - 1 - particle) as u32);
    let digit = |idx: usize| (idx / stride) % d;
    Ok(CMat::from_fn(dim, dim, |r, c| {
        let (dr, dc) = (digit(r), digit(c));
        let r2 = r - dr * stride + dc * stride;
        let c2 = c - dc * stride + dr * stride;
        rho[(r2, c2)]
    }))
}

/// Trace out particles `1..N`, keeping particle 0.
pub fn partial_trace_to_single(rho: &CMat, d: usize) -> Result<CMat> {
    let dim = check_square(rho)?;
    tensor_order(dim, d)?;
    let rest = dim / d;
    Ok(CMat::from_fn(d, d, |i, j| {
        (0..rest).map(|k| rho[(i * rest + k, j * rest + k)]).sum()
    }))
}

/// `-Σ λ ln λ` of a spectrum, clamping eigenvalues in `[-1e-8, 0)` to zero.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lam in eigenvalues {
        if lam < -1e-8 {
            return Err(Error::NotAState { min_eigenvalue: lam });
        }
        if lam > 0.0 {
            s -= lam * lam.ln();
        }
    }
    Ok(s)
}

/// Von Neumann entropy in nats.
pub fn von_neumann_entropy(rho: &CMat) -> Result<f64> {
    entropy_of_spectrum(&eigvalsh(rho)?)
}

/// Principal square root of a positive-semidefinite matrix.
pub fn sqrt_psd(mat: &CMat) -> Result<CMat> {
    let spec = hermitian_eig(mat)?;
    let scale = max_abs(mat).max(1.0);
    if let Some(&min) = spec.eigenvalues.first() {
        if min < -1e-8 * scale {
            return Err(Error::NotAState { min_eigenvalue: min });
        }
    }
    Ok(spec.map(|l| l.max(0.0).sqrt()))
}

/// `exp(iH)` for Hermitian `H`.
pub fn unitary_exp(h: &CMat) -> Result<CMat> {
    let spec = hermitian_eig(h)?;
    let n = spec.eigenvalues.len();
    let v = &spec.eigenvectors;
    let mut out = CMat::zeros(n, n);
    for (k, &lam) in spec.eigenvalues.iter().enumerate() {
        let ph = C64::from_polar(1.0, lam);
        for j in 0..n {
            let vj = v[(j, k)].conj() * ph;
            for i in 0..n {
                out[(i, j)] += v[(i, k)] * vj;
            }
        }
    }
    Ok(out)
}

pub fn frobenius(mat: &CMat) -> f64 {
    mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real Hilbert-Schmidt inner product `Re Tr(A† B)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMat {
        let g = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&g + g.adjoint()) * C64::new(0.5, 0.0)
    }

    fn diag(vals: &[f64]) -> CMat {
        CMat::from_fn(vals.len(), vals.len(), |i, j| {
            if i == j {
                C64::new(vals[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    #[test]
    fn identity_spectrum() {
        let s = hermitian_eig(&CMat::identity(3, 3)).unwrap();
        for l in s.eigenvalues {
            assert!((l - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn diag_sorted_ascending() {
        let s = hermitian_eig(&diag(&[2.0, -1.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 2.0]);
    }

    #[test]
    fn random_hermitian_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 5, 17, 40] {
            let a = random_hermitian(n, &mut rng);
            let s = hermitian_eig(&a).unwrap();
            let trace: f64 = (0..n).map(|i| a[(i, i)].re).sum();
            let sum: f64 = s.eigenvalues.iter().sum();
            assert!((trace - sum).abs() < 1e-10);
            let rec = s.map(|l| l);
            assert!(frobenius(&(&rec - &a)) < 1e-9 * frobenius(&a).max(1.0));
            let v = &s.eigenvectors;
            let unit = v.adjoint() * v - CMat::identity(n, n);
            assert!(frobenius(&unit) < 1e-10);
            for k in 0..n {
                let col = v.column(k).into_owned();
                let resid = &a * &col - &col * C64::new(s.eigenvalues[k], 0.0);
                assert!(resid.norm() < 1e-9 * frobenius(&a).max(1.0));
            }
        }
    }

    #[test]
    fn matches_nalgebra_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_hermitian(9, &mut rng);
        let mut ours = eigvalsh(&a).unwrap();
        let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ours.sort_by(f64::total_cmp);
        theirs.sort_by(f64::total_cmp);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            hermitian_eig(&CMat::zeros(2, 3)),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn trace_norm_examples() {
        assert!((trace_norm(&diag(&[1.0, -1.0])).unwrap() - 2.0).abs() < 1e-14);
        let rho = diag(&[0.25, 0.75]);
        assert!((trace_norm(&rho).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_agree_with_hermitian_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(6, &mut rng);
        let mut from_eig: Vec<f64> = eigvalsh(&a).unwrap().iter().map(|l| l.abs()).collect();
        from_eig.sort_by(|x, y| y.total_cmp(x));
        let sv = singular_values(&a);
        for (x, y) in sv.iter().zip(&from_eig) {
            assert!((x - y).abs() < 1e-12);
        }
        // rectangular, rank one
        let u = CMat::from_fn(4, 1, |i, _| C64::new(i as f64, 1.0));
        let w = CMat::from_fn(1, 3, |_, j| C64::new(1.0, -(j as f64)));
        let sv = singular_values(&(&u * &w));
        assert!((sv[0] - u.norm() * w.norm()).abs() < 1e-12);
        assert!(sv[1].abs() < 1e-14 && sv[2].abs() < 1e-14);
    }

    #[test]
    fn partial_transpose_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_hermitian(3, &mut rng);
        let b = random_hermitian(3, &mut rng);
        let prod = a.kronecker(&b);
        let pt = partial_transpose(&prod, 3, 0).unwrap();
        let expect = a.transpose().kronecker(&b);
        assert!(frobenius(&(&pt - &expect)) < 1e-15);
        let pt2 = partial_transpose(&prod, 3, 1).unwrap();
        assert!(frobenius(&(&pt2 - &a.kronecker(&b.transpose()))) < 1e-15);
        assert_eq!(partial_transpose(&pt, 3, 0).unwrap(), prod);
    }

    #[test]
    fn partial_transpose_three_particles_involution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_hermitian(8, &mut rng);
        for p in 0..3 {
            let twice = partial_transpose(&partial_transpose(&a, 2, p).unwrap(), 2, p).unwrap();
            assert_eq!(twice, a);
        }
        assert!(partial_transpose(&a, 2, 3).is_err());
        assert!(partial_transpose(&a, 3, 0).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = random_hermitian(2, &mut rng);
        let b = CMat::identity(2, 2) * C64::new(0.5, 0.0);
        let red = partial_trace_to_single(&a.kronecker(&b), 2).unwrap();
        assert!(frobenius(&(&red - &a)) < 1e-15);
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(&diag(&[1.0, 0.0])).unwrap().abs() < 1e-15);
        let half = von_neumann_entropy(&diag(&[0.5, 0.5])).unwrap();
        assert!((half - 2f64.ln()).abs() < 1e-14);
        let third = von_neumann_entropy(&diag(&[1.0 / 3.0; 3])).unwrap();
        assert!((third - 3f64.ln()).abs() < 1e-14);
        assert!(matches!(
            von_neumann_entropy(&diag(&[1.1, -0.1])),
            Err(Error::NotAState { .. })
        ));
        // tiny negative noise is clamped
        assert!(von_neumann_entropy(&diag(&[1.0 + 1e-11, -1e-11])).unwrap().abs() < 1e-9);
    }

    #[test]
    fn entropy_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = random_hermitian(4, &mut rng);
        let u = unitary_exp(&h).unwrap();
        let rho = diag(&[0.1, 0.2, 0.3, 0.4]);
        let rot = &u * &rho * u.adjoint();
        let s0 = von_neumann_entropy(&rho).unwrap();
        let s1 = von_neumann_entropy(&rot).unwrap();
        assert!((s0 - s1).abs() < 1e-10);
    }

    #[test]
    fn sqrt_examples() {
        let id = CMat::identity(3, 3);
        assert!(frobenius(&(sqrt_psd(&id).unwrap() - &id)) < 1e-14);
        let r = sqrt_psd(&diag(&[4.0, 9.0])).unwrap();
        assert!(frobenius(&(r - diag(&[2.0, 3.0]))) < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = random_hermitian(5, &mut rng);
        let a = &g * g.adjoint();
        let r = sqrt_psd(&a).unwrap();
        assert!(frobenius(&(&r * &r - &a)) < 1e-8);
    }

    #[test]
    fn unitary_exp_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h = random_hermitian(5, &mut rng);
        let u = unitary_exp(&h).unwrap();
        let e = u.adjoint() * &u - CMat::identity(5, 5);
        assert!(frobenius(&e) < 1e-12);
    }
}
