mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcorr::fock::{DensityMatrix, ParticleKind, PureState};
use qcorr::manybody::{self, HamiltonianSpec, LatticeQuantifier, LatticeSpec};
use qcorr::witness::{self, Sampling, Variant, WitnessOptions};
use qcorr::{io, measures, slater, verify, CMat};

use report::{num, Report};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "qcorr", version, about = "Quantum correlations of indistinguishable particles")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Tolerance: verdict matching for `measure`, cut threshold for `witness`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Also write the results as CSV.
    #[arg(long, global = true, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Show entropies in bits instead of nats.
    #[arg(long, global = true)]
    log2: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Shifted entropy, shifted negativity and the bosonic verdict of a state file.
    Measure {
        state: PathBuf,
        /// Write the parsed, normalized state back out.
        #[arg(long, value_name = "PATH")]
        write_state: Option<PathBuf>,
    },
    /// Optimize an entanglement witness and report the robustness estimate.
    Witness(WitnessArgs),
    /// Circulant reduced-state entropy of a lattice eigenstate or correlator file.
    Manybody(ManybodyArgs),
    /// Two-particle Slater/Takagi decomposition and Slater concurrence.
    Slater { state: PathBuf },
    /// Run the oracle suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct WitnessArgs {
    state: PathBuf,
    #[arg(long, value_enum, default_value_t = VariantArg::Rg)]
    variant: VariantArg,
    #[arg(long, default_value_t = 200)]
    max_cuts: usize,
    /// Multi-start count of the separability search.
    #[arg(long, default_value_t = 64)]
    seeds: usize,
    /// Family of uncorrelated states the witness must respect.
    #[arg(long, value_enum)]
    sampling: Option<SamplingArg>,
    /// Write the witness matrix (`i j re im` per line) to this file.
    #[arg(long, value_name = "PATH")]
    dump_witness: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Rg,
    Rr,
    Re,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Rg => Variant::GeneralizedRobustness,
            VariantArg::Rr => Variant::RandomRobustness,
            VariantArg::Re => Variant::RobustnessOfEntanglement,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SamplingArg {
    Orthonormal,
    Def1,
    Def2,
    Product,
}

impl From<SamplingArg> for Sampling {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Orthonormal => Sampling::OrthonormalModes,
            SamplingArg::Def1 => Sampling::Definition1,
            SamplingArg::Def2 => Sampling::Definition2,
            SamplingArg::Product => Sampling::ProductModes,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    TightBinding,
    Hubbard,
}

#[derive(Args)]
struct ManybodyArgs {
    /// Read a correlator table instead of diagonalizing a model.
    #[arg(long, value_name = "PATH", conflicts_with = "model")]
    correlators: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Model::TightBinding)]
    model: Model,
    /// Spatial dimension.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Sites per axis.
    #[arg(long = "L", default_value_t = 4)]
    length: usize,
    /// Total particle number.
    #[arg(long = "N", default_value_t = 2)]
    particles: usize,
    /// Spin of the particles (0 for spinless).
    #[arg(long, default_value_t = 0.5)]
    spin: f64,
    /// Particles per spin sector, comma separated (default: even split).
    #[arg(long, value_delimiter = ',')]
    sectors: Option<Vec<usize>>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// On-site interaction (hubbard model).
    #[arg(long, default_value_t = 4.0)]
    u: f64,
    /// Phase of the hopping amplitude.
    #[arg(long, default_value_t = 0.0)]
    twist: f64,
    /// Eigenstate index within the sector block (0 = ground state).
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Save the correlator table of the eigenstate.
    #[arg(long, value_name = "PATH")]
    write_correlators: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only these checks (comma separated identifiers).
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<u32>>,
    /// Test hook: corrupt one check so that the suite must fail.
    #[arg(long, hide = true)]
    inject_fault: Option<u32>,
}

enum Failure {
    Input(String),
    NotConverged,
    ChecksFailed,
}

impl From<qcorr::Error> for Failure {
    fn from(e: qcorr::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

struct Ctx {
    log2: bool,
    tol: Option<f64>,
    seed: u64,
}

impl Ctx {
    fn entropy(&self, nats: f64) -> f64 {
        if self.log2 {
            nats / std::f64::consts::LN_2
        } else {
            nats
        }
    }

    fn unit(&self) -> &'static str {
        if self.log2 {
            "bits"
        } else {
            "nats"
        }
    }
}

fn load_state(path: &Path, rep: &mut Report) -> Result<PureState, Failure> {
    let text = std::fs::read_to_string(path)?;
    rep.input_digest = Some(report::digest(text.as_bytes()));
    let state = io::parse_state(&text)?;
    if state.renormalized() {
        rep.warn("input amplitudes were not normalized and have been rescaled");
    }
    Ok(state)
}

fn header(rep: &mut Report, s: &PureState) {
    rep.push("kind", s.kind().as_str());
    rep.push("modes", s.modes().to_string());
    rep.push("particles", s.particles().to_string());
}

fn cmd_measure(ctx: &Ctx, path: &Path, write_state: Option<&Path>, rep: &mut Report) -> Outcome {
    let s = load_state(path, rep)?;
    if let Some(out) = write_state {
        io::write_state(out, &s)?;
    }
    header(rep, &s);
    rep.push("entropy_unit", ctx.unit());
    let entropy = measures::reduced_entropy(&s)?;
    rep.value("entropy", ctx.entropy(entropy));
    rep.value("shifted_entropy", ctx.entropy(measures::shifted_entropy(&s)?));
    let rho = DensityMatrix::from_pure(&s);
    let neg = measures::shifted_negativity(&rho)?;
    match s.kind() {
        ParticleKind::Fermion => {
            rep.push("verdict", "n/a");
            rep.value("negativity", neg.value);
            rep.value("trace_norm", neg.trace_norm);
        }
        ParticleKind::Boson => {
            let tol = ctx.tol.unwrap_or(measures::DEFAULT_VERDICT_TOL);
            let v = measures::classify_boson_entropy(&s, tol)?;
            rep.push("verdict", v.verdict.as_str());
            let part = v
                .matched_partition
                .map(|p| p.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))
                .unwrap_or_else(|| "none".into());
            rep.push("matched_partition", part);
            rep.value("negativity_def1", neg.value);
            rep.value("trace_norm", neg.trace_norm);
            rep.value("negativity_def2", measures::negativity_def2(&rho)?.value);
        }
    }
    let two_body = s.particles() == 2
        && matches!(
            (s.kind(), s.modes()),
            (ParticleKind::Fermion, 4) | (ParticleKind::Boson, 2)
        );
    if two_body {
        rep.value("slater_concurrence", slater::slater_concurrence_pure(&s)?);
    }
    Ok(())
}

fn write_matrix(path: &Path, w: &CMat) -> std::io::Result<()> {
    let mut out = format!("{}\n", w.nrows());
    for i in 0..w.nrows() {
        for j in 0..w.ncols() {
            out.push_str(&format!("{i} {j} {:.17e} {:.17e}\n", w[(i, j)].re, w[(i, j)].im));
        }
    }
    std::fs::write(path, out)
}

fn cmd_witness(ctx: &Ctx, args: &WitnessArgs, rep: &mut Report) -> Outcome {
    let s = load_state(&args.state, rep)?;
    header(rep, &s);
    let variant: Variant = args.variant.into();
    let mut opts = WitnessOptions {
        max_cuts: args.max_cuts,
        seeds: args.seeds,
        seed: ctx.seed,
        sampling: args.sampling.map(Into::into),
        ..WitnessOptions::default()
    };
    if let Some(t) = ctx.tol {
        opts.tol_cut = t;
    }
    let rho = DensityMatrix::from_pure(&s);
    let est = witness::optimize_witness(&rho, variant, &opts)?;
    rep.push("variant", variant.as_str());
    rep.push("sampling", est.sampling.as_str());
    rep.value("objective", est.objective);
    rep.value("robustness", est.robustness());
    rep.value("feasibility_margin", est.feasibility_margin);
    rep.value("relaxation_bound", est.relaxation_bound);
    rep.push("cut_count", est.cut_count.to_string());
    rep.push("converged", est.converged.to_string());
    rep.value("constraint_violation", witness::constraint_violation(&est.witness, variant)?);
    if variant == Variant::GeneralizedRobustness
        && s.kind() == ParticleKind::Fermion
        && s.modes() == 4
        && s.particles() == 2
    {
        rep.value("line_search_robustness", slater::line_search_robustness(&s)?);
    }
    if let Some(p) = &args.dump_witness {
        write_matrix(p, &est.witness)?;
        rep.push("witness_file", p.display().to_string());
    }
    if !est.converged {
        rep.warn(format!(
            "cut cap of {} reached before convergence; the estimate is a lower bound",
            args.max_cuts
        ));
        return Err(Failure::NotConverged);
    }
    Ok(())
}

fn cmd_slater(path: &Path, rep: &mut Report) -> Outcome {
    let s = load_state(path, rep)?;
    header(rep, &s);
    let rho = DensityMatrix::from_pure(&s);
    let dec = match s.kind() {
        ParticleKind::Fermion => slater::slater_decompose_two_fermion(&s)?,
        ParticleKind::Boson => slater::takagi_decompose_two_boson(&s)?,
    };
    let z: Vec<String> = dec.coefficients.iter().map(|&x| num(x)).collect();
    rep.push("coefficients", z.join(" "));
    rep.push("slater_rank", dec.rank(1e-10).to_string());
    match (s.kind(), s.modes()) {
        (ParticleKind::Fermion, 4) => {
            rep.value("slater_concurrence", slater::slater_concurrence_pure(&s)?);
            rep.value("half_negativity", measures::shifted_negativity(&rho)?.value / 2.0);
            rep.value("line_search_robustness", slater::line_search_robustness(&s)?);
        }
        (ParticleKind::Boson, 2) => {
            rep.value("slater_concurrence", slater::slater_concurrence_pure(&s)?);
            rep.value("negativity_def2", measures::negativity_def2(&rho)?.value);
        }
        _ => rep.warn("Slater concurrence needs two fermions in four modes or two bosons in two modes"),
    }
    Ok(())
}

fn report_table(ctx: &Ctx, table: &manybody::CorrelatorTable, rep: &mut Report) -> Outcome {
    let spectrum = manybody::reduced_spectrum(table)?;
    let entropy = qcorr::spectra::entropy_of_spectrum(&spectrum)?;
    let shifted = entropy - (table.particles() as f64).ln();
    rep.push("entropy_unit", ctx.unit());
    rep.value("entropy", ctx.entropy(entropy));
    rep.value("shifted_entropy", ctx.entropy(shifted));
    for (k, lam) in spectrum.iter().enumerate() {
        rep.value(format!("lambda_{k}"), *lam);
    }
    Ok(())
}

fn cmd_manybody(ctx: &Ctx, args: &ManybodyArgs, rep: &mut Report) -> Outcome {
    if let Some(p) = &args.correlators {
        let text = std::fs::read_to_string(p)?;
        rep.input_digest = Some(report::digest(text.as_bytes()));
        let table = io::parse_correlators(&text)?;
        rep.push("source", "correlator file");
        return report_table(ctx, &table, rep);
    }
    let twice = 2.0 * args.spin;
    if args.spin < 0.0 || (twice - twice.round()).abs() > 1e-12 {
        return Err(Failure::Input(format!("spin {} is not a half-integer", args.spin)));
    }
    let lattice = LatticeSpec::new(args.dim, args.length, twice.round() as usize + 1)?;
    let mut spec = HamiltonianSpec::twisted(&lattice, args.t, args.twist);
    if let Model::Hubbard = args.model {
        spec.interaction = args.u;
    }
    let counts = args
        .sectors
        .clone()
        .unwrap_or_else(|| lattice.even_split(args.particles));
    let sys = manybody::build_hamiltonian(&spec, &lattice, args.particles)?;
    let a = manybody::analyze_eigenstate(&sys, &counts, args.index, manybody::DEFAULT_FALLBACK_CAP)?;
    let counts_str: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
    rep.push("sector_counts", counts_str.join(","));
    rep.value("energy", a.energy);
    rep.value("gap", a.gap);
    match a.quantifier {
        LatticeQuantifier::Entropy { .. } => {
            let corr = a.correlators.expect("entropy path carries correlators");
            rep.value("translation_deviation", corr.translation_deviation);
            rep.value("cross_sector_max", corr.cross_sector_max);
            if let Some(p) = &args.write_correlators {
                io::write_correlators(p, &corr.table)?;
            }
            report_table(ctx, &corr.table, rep)?;
        }
        LatticeQuantifier::Negativity {
            value,
            trace_norm,
            reason,
        } => {
            rep.warn(format!("{reason}; reporting the shifted negativity instead"));
            rep.value("negativity", value);
            rep.value("trace_norm", trace_norm);
        }
    }
    Ok(())
}

fn cmd_verify(ctx: &Ctx, args: &VerifyArgs, rep: &mut Report) -> Outcome {
    let opts = verify::VerifyOptions {
        seed: ctx.seed,
        inject_fault: args.inject_fault,
    };
    let ids = args.only.clone().unwrap_or_else(|| verify::CHECK_IDS.to_vec());
    let mut all = true;
    for id in ids {
        let r = verify::run_check(id, &opts);
        println!("{}", r.line());
        all &= r.passed;
        rep.push(format!("check_{}_{}", r.id, r.name), if r.passed { "pass" } else { "fail" });
    }
    if all {
        Ok(())
    } else {
        Err(Failure::ChecksFailed)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ctx = Ctx {
        log2: cli.log2,
        tol: cli.tol,
        seed: cli.seed,
    };
    let name = match &cli.command {
        Command::Measure { .. } => "measure",
        Command::Witness(_) => "witness",
        Command::Manybody(_) => "manybody",
        Command::Slater { .. } => "slater",
        Command::Verify(_) => "verify",
    };
    let echo: Vec<String> = std::iter::once("qcorr".to_string())
        .chain(std::env::args().skip(1))
        .collect();
    let mut rep = Report::new(echo.join(" "));
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Measure { state, write_state } => cmd_measure(&ctx, state, write_state.as_deref(), &mut rep),
        Command::Witness(a) => cmd_witness(&ctx, a, &mut rep),
        Command::Manybody(a) => cmd_manybody(&ctx, a, &mut rep),
        Command::Slater { state } => cmd_slater(state, &mut rep),
        Command::Verify(a) => cmd_verify(&ctx, a, &mut rep),
    };
    rep.elapsed = start.elapsed();
    if let Failure::Input(msg) = match &outcome {
        Err(f) => f,
        Ok(()) => &Failure::ChecksFailed,
    } {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_INPUT);
    }
    rep.print();
    if let Some(p) = &cli.csv {
        if let Err(e) = rep.write_csv(p) {
            eprintln!("error: cannot write {}: {e}", p.display());
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotConverged) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(Failure::ChecksFailed) => {
            eprintln!("{name}: at least one check failed");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(Failure::Input(_)) => unreachable!("handled above"),
    }
}
