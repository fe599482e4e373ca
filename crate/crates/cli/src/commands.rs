use std::io::{self, Write};
use std::path::PathBuf;

use fwt_core::catalog;
use fwt_core::contextuality::{chsh as chsh_value, enumerate_ns_realizations, ContextualityError};
use fwt_core::format::{
    self, assignment_line, functions_line, nonsignaling_report, parse_system, to_json, FormatError, LoadedSystem,
};
use fwt_core::ks::{complete_triads, ks_search, orthogonal_triads, peres_rays, ColoringRule, KsOutcome};
use fwt_core::system::{count_assignments, Assignment, CountMode};
use fwt_core::{Context, Side};

pub enum Source {
    File(PathBuf),
    Builtin(String),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: String, source: Box<FormatError> },
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Analysis(#[from] ContextualityError),
    #[error("{0}")]
    Input(String),
    #[error("writing output: {0}")]
    Output(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

type Result<T = ()> = std::result::Result<T, CliError>;

fn load(source: &Source) -> Result<LoadedSystem> {
    match source {
        Source::Builtin(id) => Ok(catalog::get(id)?.system),
        Source::File(path) => {
            let shown = path.display().to_string();
            let text =
                std::fs::read_to_string(path).map_err(|source| CliError::Read { path: shown.clone(), source })?;
            parse_system(&text).map_err(|e| CliError::Parse { path: shown, source: Box::new(e) })
        }
    }
}

pub fn analyze(out: &mut impl Write, source: &Source, limit: usize) -> Result {
    let system = load(source)?;
    let report = format::analyze(&system, limit)?;
    out.write_all(to_json(&report).as_bytes())?;
    Ok(())
}

pub fn nonsignaling(out: &mut impl Write, source: &Source) -> Result {
    let system = load(source)?;
    out.write_all(to_json(&nonsignaling_report(&system)).as_bytes())?;
    Ok(())
}

pub fn realizations(out: &mut impl Write, source: &Source, all: bool, count_only: bool, limit: usize) -> Result {
    let system = load(source)?;
    let support = system.support();
    if all {
        let count = count_assignments(&support, CountMode::Alphabet);
        if count_only {
            writeln!(out, "{count}")?;
            return Ok(());
        }
        if count.total > limit.into() {
            return Err(ContextualityError::LimitExceeded { limit }.into());
        }
        for assignment in all_assignments(&support) {
            writeln!(out, "{}", assignment_line(&assignment))?;
        }
        return Ok(());
    }
    let set = enumerate_ns_realizations(&support, limit)?;
    if count_only {
        writeln!(out, "{}", set.len())?;
        return Ok(());
    }
    for r in &set.realizations {
        let f = r.assignment.setting_functions().expect("ns realizations factor");
        writeln!(out, "{}", functions_line(&f))?;
    }
    Ok(())
}

/// Odometer over the full alphabets in canonical context order.
fn all_assignments(shape: &fwt_core::SupportSpec) -> Vec<Assignment> {
    let contexts: Vec<(&Context, &[String], &[String])> = shape
        .contexts()
        .map(|c| {
            let a = shape.alphabet(Side::A, &c.x).unwrap_or_default();
            let b = shape.alphabet(Side::B, &c.y).unwrap_or_default();
            (c, a, b)
        })
        .collect();
    let sizes: Vec<usize> = contexts.iter().map(|(_, a, b)| a.len() * b.len()).collect();
    if sizes.contains(&0) {
        return Vec::new();
    }
    let mut digits = vec![0usize; contexts.len()];
    let mut out = Vec::new();
    loop {
        let values = contexts
            .iter()
            .zip(&digits)
            .map(|((c, a, b), &d)| ((*c).clone(), (a[d / b.len()].clone(), b[d % b.len()].clone())))
            .collect();
        out.push(Assignment { values });
        let mut k = digits.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < sizes[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

pub enum PeresEmit {
    Rays,
    Triads,
    Search(ColoringRule),
}

pub fn peres(out: &mut impl Write, emit: PeresEmit, complete_only: bool) -> Result {
    let rays = peres_rays();
    let triads = if complete_only { complete_triads(&rays) } else { orthogonal_triads(&rays) };
    match emit {
        PeresEmit::Rays => {
            for r in &rays {
                writeln!(out, "{r}")?;
            }
        }
        PeresEmit::Triads => {
            for t in &triads {
                writeln!(out, "{t}")?;
            }
        }
        PeresEmit::Search(rule) => match ks_search(&rays, &triads, rule) {
            KsOutcome::Infeasible(stats) => writeln!(out, "INFEASIBLE {stats}")?,
            KsOutcome::Colorable(coloring, stats) => {
                writeln!(out, "COLORABLE {stats}")?;
                for (r, v) in &coloring.values {
                    writeln!(out, "{r} {v}")?;
                }
            }
        },
    }
    Ok(())
}

pub fn chsh(out: &mut impl Write, source: &Source) -> Result {
    let LoadedSystem::Probabilistic(system) = load(source)? else {
        return Err(CliError::Input("chsh needs a system with pmfs".into()));
    };
    writeln!(out, "{}", chsh_value(&system)?)?;
    Ok(())
}

pub fn catalog(out: &mut impl Write, id: Option<&str>) -> Result {
    match id {
        None => {
            for id in catalog::ids() {
                writeln!(out, "{id}\t{}", catalog::get(id)?.provenance)?;
            }
        }
        Some(id) => out.write_all(format::emit_system(&catalog::get(id)?.system).as_bytes())?,
    }
    Ok(())
}
