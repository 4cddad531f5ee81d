//! Text formats.
//!
//! State file: a header `kind d N`, then one line `n_1 … n_d re im` per
//! nonzero amplitude, occupations in strictly ascending lexicographic order.
//!
//! Correlator file: a header `D L sectors N`, then for every sector `L^D`
//! lines `δ re im` with the flat displacement `δ = δ_x + δ_y L + δ_z L²`.
//!
//! Blank lines and lines starting with `#` are skipped in both.

use std::path::Path;

use crate::fock::{FockBasis, ParticleKind, PureState};
use crate::manybody::{CorrelatorTable, LatticeSpec};
use crate::{CVec, Error, Result, C64, ZERO};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} `{tok}`")))
}

fn no_trailing<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match toks.next() {
        Some(t) => Err(parse_err(line, format!("unexpected trailing field `{t}`"))),
        None => Ok(()),
    }
}

pub fn parse_state(text: &str) -> Result<PureState> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty state file"))?;
    let mut toks = header.split_whitespace();
    let kind: ParticleKind = field(toks.next(), hl, "particle kind")?;
    let d: usize = field(toks.next(), hl, "mode count")?;
    let n: usize = field(toks.next(), hl, "particle number")?;
    no_trailing(toks, hl)?;
    let basis = FockBasis::shared(kind, d, n)?;
    let mut amps = CVec::zeros(basis.dim());
    let mut prev: Option<usize> = None;
    for (ln, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != d + 2 {
            return Err(parse_err(
                ln,
                format!("expected {} occupations and two amplitude fields, found {} fields", d, toks.len()),
            ));
        }
        let occ = toks[..d]
            .iter()
            .map(|t| field::<u32>(Some(t), ln, "occupation"))
            .collect::<Result<Vec<u32>>>()?;
        let re: f64 = field(Some(toks[d]), ln, "real part")?;
        let im: f64 = field(Some(toks[d + 1]), ln, "imaginary part")?;
        if !re.is_finite() || !im.is_finite() {
            return Err(parse_err(ln, "amplitude is not finite"));
        }
        let idx = basis.index_of(&occ).ok_or_else(|| {
            parse_err(
                ln,
                format!("occupation {occ:?} is not a {kind} basis state with N = {n}"),
            )
        })?;
        if prev.is_some_and(|p| idx <= p) {
            return Err(parse_err(ln, "occupations are not in strictly ascending order"));
        }
        amps[idx] = C64::new(re, im);
        prev = Some(idx);
    }
    if amps.iter().all(|a| *a == ZERO) {
        return Err(parse_err(text.lines().count().max(1), "state has no nonzero amplitude"));
    }
    PureState::new(basis, amps)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<PureState> {
    parse_state(&std::fs::read_to_string(path)?)
}

pub fn format_state(state: &PureState) -> String {
    let b = state.basis();
    let mut out = format!("{} {} {}\n", b.kind(), b.modes(), b.particles());
    for (i, a) in state.amps().iter().enumerate() {
        if *a == ZERO {
            continue;
        }
        let occ: Vec<String> = b.occupation(i).iter().map(|k| k.to_string()).collect();
        out.push_str(&format!("{} {:.17e} {:.17e}\n", occ.join(" "), a.re, a.im));
    }
    out
}

pub fn write_state(path: impl AsRef<Path>, state: &PureState) -> Result<()> {
    std::fs::write(path, format_state(state))?;
    Ok(())
}

pub fn parse_correlators(text: &str) -> Result<CorrelatorTable> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty correlator file"))?;
    let mut toks = header.split_whitespace();
    let dim: usize = field(toks.next(), hl, "lattice dimension")?;
    let length: usize = field(toks.next(), hl, "lattice length")?;
    let sectors: usize = field(toks.next(), hl, "sector count")?;
    let n: usize = field(toks.next(), hl, "particle number")?;
    no_trailing(toks, hl)?;
    let lattice = LatticeSpec::new(dim, length, sectors).map_err(|e| parse_err(hl, e.to_string()))?;
    let sites = lattice.sites();
    let mut table = vec![vec![None; sites]; sectors];
    let mut count = 0usize;
    let mut last = hl;
    for (ln, line) in lines {
        last = ln;
        if count == sites * sectors {
            return Err(parse_err(ln, format!("more than {} correlator lines", sites * sectors)));
        }
        let sector = count / sites;
        let mut toks = line.split_whitespace();
        let delta: usize = field(toks.next(), ln, "displacement index")?;
        let re: f64 = field(toks.next(), ln, "real part")?;
        let im: f64 = field(toks.next(), ln, "imaginary part")?;
        no_trailing(toks, ln)?;
        if delta >= sites {
            return Err(parse_err(ln, format!("displacement {delta} outside 0..{sites}")));
        }
        if table[sector][delta].is_some() {
            return Err(parse_err(ln, format!("displacement {delta} repeated in sector {sector}")));
        }
        table[sector][delta] = Some(C64::new(re, im));
        count += 1;
    }
    if count != sites * sectors {
        return Err(parse_err(
            last,
            format!("expected {} correlator lines, found {count}", sites * sectors),
        ));
    }
    let values = table
        .into_iter()
        .map(|s| s.into_iter().map(|v| v.expect("all displacements present")).collect())
        .collect();
    CorrelatorTable::new(dim, length, n, values)
}

pub fn read_correlators(path: impl AsRef<Path>) -> Result<CorrelatorTable> {
    parse_correlators(&std::fs::read_to_string(path)?)
}

pub fn format_correlators(table: &CorrelatorTable) -> String {
    let mut out = format!(
        "{} {} {} {}\n",
        table.dim(),
        table.length(),
        table.sector_count(),
        table.particles()
    );
    for s in 0..table.sector_count() {
        for (d, x) in table.values(s).iter().enumerate() {
            out.push_str(&format!("{d} {:.17e} {:.17e}\n", x.re, x.im));
        }
    }
    out
}

pub fn write_correlators(path: impl AsRef<Path>, table: &CorrelatorTable) -> Result<()> {
    std::fs::write(path, format_correlators(table))?;
    Ok(())
}
