//! Oracle suite behind the `verify` command. Each check compares a library
//! result against an independent computation and reports the worst
//! deviation seen together with the tolerance it was held to.

use std::f64::consts::FRAC_PI_4;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fock::{self, DensityMatrix, FockBasis, ParticleKind, PureState, TruncatedFockSpace};
use crate::manybody::{self, HamiltonianSpec, LatticeQuantifier, LatticeSpec};
use crate::measures::{self, Verdict};
use crate::witness::{self, Variant, WitnessOptions};
use crate::{slater, spectra, CMat, CVec, Result, C64};

/// Identifiers of the checks, in suite order.
pub const CHECK_IDS: [u32; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Test hook: corrupt the measured value of this check so it must fail.
    pub inject_fault: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    /// Number of individual comparisons made.
    pub cases: usize,
    /// Worst deviation divided by its tolerance (≤ 1 passes).
    pub worst_ratio: f64,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {} {}: {} cases, worst/tol {:.3e}, {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.cases,
            self.worst_ratio,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Running record of comparisons inside one check.
struct Tally {
    cases: usize,
    worst: f64,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            cases: 0,
            worst: 0.0,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Record `|got − want| ≤ tol`.
    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        self.bounded(what, (got - want).abs(), tol);
    }

    /// Record `dev ≤ tol` for a nonnegative deviation.
    fn bounded(&mut self, what: &str, dev: f64, tol: f64) {
        self.cases += 1;
        let ratio = if dev.is_nan() { f64::INFINITY } else { dev / tol };
        self.worst = self.worst.max(ratio);
        if ratio > 1.0 && self.failures.len() < 3 {
            self.failures.push(format!("{what}: deviation {dev:.3e} > {tol:.1e}"));
        }
    }

    fn holds(&mut self, what: &str, ok: bool) {
        self.cases += 1;
        if !ok {
            self.worst = f64::INFINITY;
            if self.failures.len() < 3 {
                self.failures.push(what.to_string());
            }
        }
    }
}

fn fault(opts: &VerifyOptions, id: u32) -> f64 {
    if opts.inject_fault == Some(id) {
        1.0
    } else {
        0.0
    }
}

fn rng_for(opts: &VerifyOptions, id: u32) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(1_000_003).wrapping_add(id as u64))
}

/// Run one check by identifier.
pub fn run_check(id: u32, opts: &VerifyOptions) -> CheckResult {
    let start = Instant::now();
    let (name, outcome): (&'static str, Result<Tally>) = match id {
        1 => ("trace-norm-identity", check_trace_norm_identity(opts)),
        2 => ("shifted-measure-zeros", check_shifted_zeros(opts)),
        3 => ("two-fermion-relation-chain", check_relation_chain(opts)),
        4 => ("optimal-decomposition-spectrum", check_optimal_spectrum(opts)),
        5 => ("two-boson-relations", check_boson_relations(opts)),
        6 => ("boson-entropy-classification", check_classification(opts)),
        7 => ("circulant-spectra", check_circulant(opts)),
        8 => ("boson-witness-blind-spot", check_blind_spot(opts)),
        9 => ("ladder-algebra", check_algebra(opts)),
        _ => ("unknown", Err(crate::Error::Unsupported(format!("no check {id}")))),
    };
    let elapsed = start.elapsed();
    match outcome {
        Ok(t) => {
            let passed = t.worst <= 1.0 && t.failures.is_empty();
            let mut detail = if passed {
                "ok".to_string()
            } else {
                t.failures.join("; ")
            };
            if !t.notes.is_empty() {
                detail = format!("{detail}; {}", t.notes.join("; "));
            }
            CheckResult {
                id,
                name,
                passed,
                cases: t.cases,
                worst_ratio: t.worst,
                detail,
                elapsed,
            }
        }
        Err(e) => CheckResult {
            id,
            name,
            passed: false,
            cases: 0,
            worst_ratio: f64::INFINITY,
            detail: format!("error: {e}"),
            elapsed,
        },
    }
}

/// Run every check in order.
pub fn run_suite(opts: &VerifyOptions) -> Vec<CheckResult> {
    CHECK_IDS.iter().map(|&id| run_check(id, opts)).collect()
}

fn random_pattern(kind: ParticleKind, d: usize, n: usize, rng: &mut impl Rng) -> Vec<u32> {
    match kind {
        ParticleKind::Fermion => vec![1; n],
        ParticleKind::Boson => {
            let all = fock::partitions(n as u32, d);
            all[rng.random_range(0..all.len())].clone()
        }
    }
}

fn random_uncorrelated(kind: ParticleKind, d: usize, n: usize, rng: &mut impl Rng) -> Result<(PureState, Vec<u32>)> {
    let basis = FockBasis::shared(kind, d, n)?;
    let pattern = random_pattern(kind, d, n, rng);
    Ok((fock::random_uncorrelated_with_pattern(&basis, &pattern, rng)?, pattern))
}

fn check_trace_norm_identity(opts: &VerifyOptions) -> Result<Tally> {
    let mut rng = rng_for(opts, 1);
    let mut t = Tally::new();
    for i in 0..520 {
        let kind = if i % 2 == 0 { ParticleKind::Fermion } else { ParticleKind::Boson };
        let n = rng.random_range(2..=3usize);
        let lo = if kind == ParticleKind::Fermion { n.max(2) } else { 2 };
        let d = rng.random_range(lo..=5usize);
        let (state, pattern) = random_uncorrelated(kind, d, n, &mut rng)?;
        let brute = measures::partial_transpose_trace_norm(&DensityMatrix::from_pure(&state), 0)? + fault(opts, 1);
        t.close("trace norm vs closed form", brute, measures::separable_trace_norm_formula(&pattern), 1e-9);
        if kind == ParticleKind::Fermion {
            t.close("fermionic trace norm vs N", brute, n as f64, 1e-10);
        }
    }
    Ok(t)
}

fn check_shifted_zeros(opts: &VerifyOptions) -> Result<Tally> {
    let mut rng = rng_for(opts, 2);
    let mut t = Tally::new();
    for _ in 0..200 {
        let n = rng.random_range(2..=3usize);
        let d = rng.random_range(n.max(2)..=5usize);
        let (s, _) = random_uncorrelated(ParticleKind::Fermion, d, n, &mut rng)?;
        t.bounded("shifted entropy of a Slater determinant", measures::shifted_entropy(&s)?.abs() + fault(opts, 2), 1e-9);
        t.bounded("shifted negativity of a Slater determinant", measures::shifted_negativity_pure(&s)?.value, 1e-9);
    }
    for i in 0..100 {
        let kind = if i % 2 == 0 { ParticleKind::Fermion } else { ParticleKind::Boson };
        let n = rng.random_range(2..=3usize);
        let lo = if kind == ParticleKind::Fermion { n.max(2) } else { 2 };
        let d = rng.random_range(lo..=4usize);
        let parts = rng.random_range(1..=4usize);
        let mut dms = Vec::with_capacity(parts);
        let mut weights = Vec::with_capacity(parts);
        for _ in 0..parts {
            dms.push(DensityMatrix::from_pure(&random_uncorrelated(kind, d, n, &mut rng)?.0));
            weights.push(rng.random_range(0.05..1.0f64));
        }
        let total: f64 = weights.iter().sum();
        let mix: Vec<(f64, &DensityMatrix)> = weights.iter().map(|w| w / total).zip(dms.iter()).collect();
        let rho = DensityMatrix::mixture(&mix)?;
        t.bounded("shifted negativity of an uncorrelated mixture", measures::shifted_negativity(&rho)?.value, 1e-9);
    }
    Ok(t)
}

fn two_fermion_theta(theta: f64) -> Result<PureState> {
    let b = FockBasis::shared(ParticleKind::Fermion, 4, 2)?;
    let mut v = CVec::zeros(b.dim());
    v[b.index_of(&[1, 1, 0, 0]).expect("basis state")] = C64::new(theta.cos(), 0.0);
    v[b.index_of(&[0, 0, 1, 1]).expect("basis state")] = C64::new(theta.sin(), 0.0);
    PureState::new(b, v)
}

/// Witness settings used by the suite: fewer restarts and a looser
/// relaxation gap than the library defaults, well inside the 0.05 budget.
pub fn suite_witness_options(seed: u64) -> WitnessOptions {
    WitnessOptions {
        seed,
        seeds: 8,
        gap_tol: 1e-2,
        ..WitnessOptions::default()
    }
}

fn check_relation_chain(opts: &VerifyOptions) -> Result<Tally> {
    let mut rng = rng_for(opts, 3);
    let mut t = Tally::new();
    let basis = FockBasis::shared(ParticleKind::Fermion, 4, 2)?;
    let mut states = Vec::with_capacity(150);
    for k in 0..50 {
        states.push(two_fermion_theta(FRAC_PI_4 * k as f64 / 49.0)?);
    }
    for _ in 0..100 {
        states.push(fock::random_pure_state(&basis, &mut rng));
    }
    let mut unconverged = 0;
    for (i, s) in states.iter().enumerate() {
        let c = slater::slater_concurrence_pure(s)?;
        let neg = measures::shifted_negativity_pure(s)?.value;
        t.close("concurrence vs negativity/2", c + fault(opts, 3), neg / 2.0, 1e-8);
        let line = slater::line_search_robustness(s)?;
        t.close("line-search robustness vs concurrence", line, c, 1e-6);
        if c > 1e-9 {
            let (at, _) = slater::optimal_decomposition(s, c)?;
            t.bounded("mixed concurrence at t = C", slater::slater_concurrence_mixed(&at)?, 1e-9);
            let (below, _) = slater::optimal_decomposition(s, 0.9 * c)?;
            t.holds(
                "mixed concurrence positive at t = 0.9 C",
                slater::slater_concurrence_mixed(&below)? > 0.0,
            );
        }
        let rho = DensityMatrix::from_pure(s);
        let res = witness::optimize_witness(&rho, Variant::GeneralizedRobustness, &suite_witness_options(opts.seed + i as u64))?;
        if !res.converged {
            unconverged += 1;
        }
        t.close("witness robustness vs concurrence", res.robustness(), c, 0.05);
        t.bounded("witness feasibility margin", (-res.feasibility_margin).max(0.0), 1e-6);
    }
    if unconverged > 0 {
        t.notes.push(format!("{unconverged} witness runs hit the cut cap"));
    }
    Ok(t)
}

fn check_optimal_spectrum(opts: &VerifyOptions) -> Result<Tally> {
    let mut rng = rng_for(opts, 4);
    let mut t = Tally::new();
    let basis = FockBasis::shared(ParticleKind::Fermion, 4, 2)?;
    for _ in 0..50 {
        let s = fock::random_pure_state(&basis, &mut rng);
        let c = slater::slater_concurrence_pure(&s)?;
        for scale in [0.3, 1.0] {
            let tt = scale * c;
            let (sigma, _) = slater::optimal_decomposition(&s, tt)?;
            let got = slater::concurrence_spectrum(&sigma)?;
            let mut want = vec![c, tt / 2.0, tt / 2.0, 0.0, 0.0, 0.0];
            want.sort_by(|a, b| b.total_cmp(a));
            for (g, w) in got.iter().zip(&want) {
                t.close("optimal-decomposition spectrum", *g + fault(opts, 4), w / (1.0 + tt), 1e-8);
            }
        }
    }
    Ok(t)
}

fn check_boson_relations(opts: &VerifyOptions) -> Result<Tally> {
    let mut rng = rng_for(opts, 5);
    let mut t = Tally::new();
    let basis = FockBasis::shared(ParticleKind::Boson, 2, 2)?;
    for _ in 0..100 {
        let s = fock::random_pure_state(&basis, &mut rng);
        let c = slater::slater_concurrence_pure(&s)?;
        let neg = measures::negativity_def2(&DensityMatrix::from_pure(&s))?.value;
        t.close("boson concurrence vs definition-2 negativity", c + fault(opts, 5), neg, 1e-8);
    }
    for _ in 0..100 {
        let n = rng.random_range(2..=3usize);
        let d = rng.random_range(2..=4usize);
        let (s, _) = random_uncorrelated(ParticleKind::Boson, d, n, &mut rng)?;
        t.bounded("shifted negativity of a definition-1 product", measures::shifted_negativity_pure(&s)?.value, 1e-9);
    }
    Ok(t)
}

fn boson_state(d: usize, entries: &[(&[u32], f64)]) -> Result<PureState> {
    let n = entries[0].0.iter().sum::<u32>() as usize;
    let b = FockBasis::shared(ParticleKind::Boson, d, n)?;
    let mut v = CVec::zeros(b.dim());
    for (occ, c) in entries {
        v[b.index_of(occ).expect("basis state")] = C64::new(*c, 0.0);
    }
    PureState::new(b, v)
}

fn check_classification(opts: &VerifyOptions) -> Result<Tally> {
    let mut t = Tally::new();
    let tol = measures::DEFAULT_VERDICT_TOL;
    let cases: [(PureState, Verdict); 3] = [
        (boson_state(2, &[(&[2, 0], 1.0)])?, Verdict::UncorrelatedConsistent),
        (boson_state(2, &[(&[1, 1], 1.0)])?, Verdict::Inconclusive),
        (
            boson_state(3, &[(&[2, 0, 0], 1.0), (&[0, 2, 0], 1.0), (&[0, 0, 2], 1.0)])?,
            Verdict::Correlated,
        ),
    ];
    for (i, (s, want)) in cases.iter().enumerate() {
        let mut got = measures::classify_boson_entropy(s, tol)?.verdict;
        if opts.inject_fault == Some(6) && i == 0 {
            got = Verdict::Correlated;
        }
        t.holds(&format!("verdict {} expected {}", got.as_str(), want.as_str()), got == *want);
    }
    let s = measures::classify_boson_entropy(&cases[2].0, tol)?.entropy;
    t.close("three-mode entropy", s, 3f64.ln(), 1e-12);
    Ok(t)
}

fn check_circulant(opts: &VerifyOptions) -> Result<Tally> {
    let mut rng = rng_for(opts, 7);
    let mut t = Tally::new();
    let shapes: Vec<(usize, usize)> = (2..=6)
        .map(|l| (1, l))
        .chain((2..=4).map(|l| (2, l)))
        .chain((2..=4).map(|l| (3, l)))
        .collect();
    for (dim, length) in shapes {
        let lat = LatticeSpec::new(dim, length, 2)?;
        let table = manybody::random_consistent_table(&lat, 3, &mut rng)?;
        for s in 0..2 {
            let mut fast = manybody::circulant_eigenvalues(&table, s)?;
            fast.sort_by(f64::total_cmp);
            let dense = spectra::eigvalsh(&manybody::circulant_rdm(&table, s))?;
            let dev = fast.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            t.bounded(&format!("DFT vs dense spectrum, D={dim} L={length}"), dev + fault(opts, 7), 1e-9);
        }
    }

    // free fermions on a ring whose hopping phase lifts the k ↔ −k degeneracy
    let lat = LatticeSpec::spinless(1, 4)?;
    let sys = manybody::build_hamiltonian(&HamiltonianSpec::twisted(&lat, 1.0, 0.3), &lat, 2)?;
    let a = manybody::analyze_eigenstate(&sys, &[2], 0, manybody::DEFAULT_FALLBACK_CAP)?;
    match &a.quantifier {
        LatticeQuantifier::Entropy { spectrum, shifted, .. } => {
            let mut sp = spectrum.clone();
            sp.sort_by(|x, y| y.total_cmp(x));
            for (g, w) in sp.iter().zip([0.5, 0.5, 0.0, 0.0]) {
                t.close("free-fermion spectrum", *g, w, 1e-8);
            }
            t.bounded("free-fermion shifted entropy", shifted.abs(), 1e-8);
        }
        LatticeQuantifier::Negativity { .. } => t.holds("free-fermion ground state is nondegenerate", false),
    }

    // site independence and sector separation on exact eigenstates
    for (dim, length) in [(1, 4), (2, 2)] {
        let lat = LatticeSpec::spin_half(dim, length)?;
        let mut spec = HamiltonianSpec::twisted(&lat, 1.0, 0.3);
        spec.interaction = 2.0;
        let sys = manybody::build_hamiltonian(&spec, &lat, 2)?;
        let (tr, sz) = sys.symmetry_residuals();
        t.bounded("[H, T]", tr, 1e-10);
        t.bounded("[H, S_z]", sz, 1e-10);
        let all = sys.eigenstates(&[1, 1])?;
        for k in 0..all.len() {
            let eig = sys.eigenstate(&[1, 1], k)?;
            if eig.gap < manybody::DEGENERACY_GAP {
                continue;
            }
            let corr = manybody::correlators_from_state(&eig.state, &lat)?;
            t.bounded("site independence of correlators", corr.translation_deviation, 1e-9);
            t.bounded("cross-sector correlators", corr.cross_sector_max, 1e-9);
            let direct = fock::single_particle_rdm(&eig.state)?;
            t.bounded(
                "circulant vs direct reduced state",
                spectra::frobenius(&(manybody::assembled_rdm(&corr.table) - &direct)),
                1e-9,
            );
            t.close(
                "entropy from correlators vs direct",
                manybody::entropy_from_correlators(&corr.table)?,
                spectra::von_neumann_entropy(&direct)?,
                1e-8,
            );
        }
    }
    Ok(t)
}

fn check_blind_spot(opts: &VerifyOptions) -> Result<Tally> {
    let mut t = Tally::new();
    let mut best = f64::NEG_INFINITY;
    for k in 0..4 {
        let rep = witness::blind_spot_demo(opts.seed.wrapping_add(k), 16)?;
        let gap = if rep.orthonormal_objective < 0.0 && rep.rerun_margin >= -1e-6 {
            rep.gap - fault(opts, 8)
        } else {
            f64::NEG_INFINITY
        };
        best = best.max(gap);
        if best > 1e-3 {
            t.notes.push(format!(
                "gap {:.3e}, orthonormal objective {:.3e}, rerun objective {:.3e}",
                rep.gap, rep.orthonormal_objective, rep.rerun_objective
            ));
            break;
        }
    }
    t.holds(&format!("blind-spot gap {best:.3e} exceeds 1e-3"), best > 1e-3);
    Ok(t)
}

fn check_algebra(opts: &VerifyOptions) -> Result<Tally> {
    let mut t = Tally::new();
    for d in 1..=5 {
        for (kind, n_max) in [(ParticleKind::Fermion, d), (ParticleKind::Boson, 3)] {
            let space = TruncatedFockSpace::new(kind, d, n_max)?;
            let dim = space.dim();
            let ann: Vec<CMat> = (0..d).map(|m| space.annihilation(m)).collect();
            let cre: Vec<CMat> = (0..d).map(|m| space.creation(m)).collect();
            // columns whose images stay inside the truncation
            let inside: Vec<usize> = (0..dim)
                .filter(|&c| kind == ParticleKind::Fermion || space.particles_of(c) < n_max)
                .collect();
            let sign = if kind == ParticleKind::Fermion { 1.0 } else { -1.0 };
            for i in 0..d {
                for j in 0..d {
                    let mixed = &ann[i] * &cre[j] + &cre[j] * &ann[i] * C64::new(sign, 0.0);
                    let pure = &ann[i] * &ann[j] + &ann[j] * &ann[i] * C64::new(sign, 0.0);
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let mut dev: f64 = 0.0;
                    for &c in &inside {
                        for r in 0..dim {
                            let want = if r == c { delta } else { 0.0 };
                            dev = dev.max((mixed[(r, c)] - want).norm());
                            dev = dev.max(pure[(r, c)].norm());
                        }
                    }
                    t.bounded(&format!("{kind} ladder relations, d={d}"), dev + fault(opts, 9), 1e-12);
                }
            }
        }
    }
    Ok(t)
}
