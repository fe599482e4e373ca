//! Contextuality decisions for non-signaling compound systems.
//!
//! A non-signaling system is noncontextual exactly when it is a mixture of
//! non-signaling deterministic realizations, i.e. of pairs of per-side setting
//! functions `(f(x), g(y))`. [`classify`] enumerates those realizations inside
//! the system's support, poses the mixture question to the exact feasibility
//! solver, and turns the answer into either a decomposition or a Bell-type
//! witness.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::feasibility::{self, FeasibilityOutcome, FeasibilityProblem};
use crate::system::{
    plus_minus_coding, Assignment, Coding, Context, JointPmf, Label, Rational, Realization, SettingFunctions, Side,
    SignalingWitness, SupportSpec, SystemError, SystemSpec,
};

/// Default cap on the number of enumerated realizations.
pub const DEFAULT_LIMIT: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContextualityError {
    #[error("more than {limit} non-signaling realizations; raise the limit to continue")]
    LimitExceeded { limit: usize },
    #[error("system is signaling: {0}")]
    Signaling(Box<SignalingWitness>),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("expected 2 settings per side with binary alphabets: {0}")]
    WrongShape(String),
}

/// Non-signaling realizations of one system, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NsRealizationSet {
    pub source: String,
    pub realizations: Vec<Realization>,
}

impl NsRealizationSet {
    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }
}

/// Statistics of one realization enumeration.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumerationStats {
    pub nodes: u64,
    pub dead_ends: u64,
}

/// Backtracking with forward checking over settings.
///
/// Variables are the settings that occur in some context; a context whose
/// support is not the full alphabet product is a binary constraint between
/// its two settings. The unassigned setting with the smallest live domain is
/// branched on next. Output is sorted, so it does not depend on search order.
pub fn enumerate_ns_realizations(support: &SupportSpec, limit: usize) -> Result<NsRealizationSet, ContextualityError> {
    enumerate_with_stats(support, limit).map(|(set, _)| set)
}

pub fn enumerate_with_stats(
    support: &SupportSpec,
    limit: usize,
) -> Result<(NsRealizationSet, EnumerationStats), ContextualityError> {
    support.ensure_valid()?;
    let search = SettingSearch::new(support);
    let mut found: Vec<Vec<usize>> = Vec::new();
    let mut stats = EnumerationStats::default();
    let domains: Vec<Vec<usize>> = search.domain_sizes.iter().map(|&n| (0..n).collect()).collect();
    let mut values = vec![usize::MAX; search.domain_sizes.len()];
    search.descend(domains, &mut values, &mut found, limit, &mut stats)?;

    let mut realizations: Vec<Realization> = found
        .iter()
        .map(|vals| {
            let functions = search.functions(support, vals);
            let assignment = functions.to_assignment(support).expect("every used setting is assigned");
            Realization { assignment, ns: true }
        })
        .collect();
    realizations.sort();
    Ok((NsRealizationSet { source: support.name().to_string(), realizations }, stats))
}

struct SettingSearch {
    /// Used A settings followed by used B settings.
    vars: Vec<(Side, Label)>,
    domain_sizes: Vec<usize>,
    /// `(other variable, allowed[this value][other value])` per variable.
    arcs: Vec<Vec<(usize, Vec<Vec<bool>>)>>,
}

impl SettingSearch {
    fn new(support: &SupportSpec) -> SettingSearch {
        let mut vars = Vec::new();
        for side in [Side::A, Side::B] {
            for label in support.used_settings(side) {
                vars.push((side, label));
            }
        }
        let index: BTreeMap<&(Side, Label), usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
        let domain_sizes: Vec<usize> =
            vars.iter().map(|(side, label)| support.alphabet(*side, label).map_or(0, <[String]>::len)).collect();
        let mut arcs: Vec<Vec<(usize, Vec<Vec<bool>>)>> = vec![Vec::new(); vars.len()];
        for (c, allowed) in support.entries() {
            let xi = index[&(Side::A, c.x.clone())];
            let yi = index[&(Side::B, c.y.clone())];
            let (na, nb) = (domain_sizes[xi], domain_sizes[yi]);
            if allowed.len() == na * nb {
                continue;
            }
            let mut xy = vec![vec![false; nb]; na];
            let mut yx = vec![vec![false; na]; nb];
            for &(a, b) in allowed {
                xy[a][b] = true;
                yx[b][a] = true;
            }
            arcs[xi].push((yi, xy));
            arcs[yi].push((xi, yx));
        }
        SettingSearch { vars, domain_sizes, arcs }
    }

    fn descend(
        &self,
        domains: Vec<Vec<usize>>,
        values: &mut Vec<usize>,
        found: &mut Vec<Vec<usize>>,
        limit: usize,
        stats: &mut EnumerationStats,
    ) -> Result<(), ContextualityError> {
        stats.nodes += 1;
        let next = (0..self.vars.len()).filter(|&v| values[v] == usize::MAX).min_by_key(|&v| (domains[v].len(), v));
        let Some(var) = next else {
            if found.len() == limit {
                return Err(ContextualityError::LimitExceeded { limit });
            }
            found.push(values.clone());
            return Ok(());
        };
        for &val in &domains[var] {
            let mut pruned = domains.clone();
            pruned[var] = vec![val];
            let mut wiped = false;
            for (other, allowed) in &self.arcs[var] {
                if values[*other] != usize::MAX {
                    continue;
                }
                pruned[*other].retain(|&w| allowed[val][w]);
                if pruned[*other].is_empty() {
                    wiped = true;
                    break;
                }
            }
            if wiped {
                stats.dead_ends += 1;
                continue;
            }
            values[var] = val;
            self.descend(pruned, values, found, limit, stats)?;
            values[var] = usize::MAX;
        }
        Ok(())
    }

    fn functions(&self, support: &SupportSpec, vals: &[usize]) -> SettingFunctions {
        let mut f = SettingFunctions { a: BTreeMap::new(), b: BTreeMap::new() };
        for ((side, label), &v) in self.vars.iter().zip(vals) {
            let outcome = support.alphabet(*side, label).expect("declared setting")[v].clone();
            match side {
                Side::A => f.a.insert(label.clone(), outcome),
                Side::B => f.b.insert(label.clone(), outcome),
            };
        }
        f
    }
}

/// Probability mixture of non-signaling realizations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub components: Vec<(Realization, Rational)>,
}

impl Decomposition {
    /// The local hidden-variable model: for each value of the hidden
    /// variable, its weight and the setting functions `f(λ, x)`, `g(λ, y)`.
    pub fn hidden_variable_model(&self) -> Vec<(SettingFunctions, Rational)> {
        self.components
            .iter()
            .map(|(r, w)| {
                let f = r.assignment.setting_functions().expect("decomposition components are non-signaling");
                (f, w.clone())
            })
            .collect()
    }

    /// The mixture as a system with the given shape.
    pub fn mixture(&self, shape: &SystemSpec) -> Result<SystemSpec, SystemError> {
        let mut out = shape.map(|_, pmf| JointPmf::zeros(pmf.a_alphabet.clone(), pmf.b_alphabet.clone()));
        let mut acc: BTreeMap<Context, JointPmf> = out.entries().iter().cloned().collect();
        for (r, w) in &self.components {
            for (c, (a, b)) in &r.assignment.values {
                let pmf = acc.get_mut(c).ok_or_else(|| SystemError::ShapeMismatch(format!("unknown context {c}")))?;
                let i = pmf.a_alphabet.iter().position(|l| l == a);
                let j = pmf.b_alphabet.iter().position(|l| l == b);
                let (Some(i), Some(j)) = (i, j) else {
                    return Err(SystemError::ShapeMismatch(format!("outcome ({a},{b}) not in alphabet at {c}")));
                };
                let p = pmf.prob(i, j) + w;
                pmf.set(i, j, p);
            }
        }
        out = out.map(|c, _| acc.remove(c).expect("same contexts"));
        Ok(out)
    }
}

/// Linear functional on system probabilities with an upper bound that holds
/// for every non-signaling deterministic system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BellWitness {
    pub coefficients: BTreeMap<(Context, String, String), Rational>,
    pub bound: Rational,
}

impl BellWitness {
    /// `Σ coefficient · probability` over the system's cells.
    pub fn score_system(&self, system: &SystemSpec) -> Result<Rational, SystemError> {
        let mut total = Rational::zero();
        for ((c, a, b), k) in &self.coefficients {
            let pmf = system.pmf(c)?;
            let p = pmf
                .prob_of(a, b)
                .ok_or_else(|| SystemError::ShapeMismatch(format!("outcome ({a},{b}) not in alphabet at {c}")))?;
            total += k * p;
        }
        Ok(total)
    }

    /// Score of a deterministic assignment, read as a 0/1 pmf.
    pub fn score_assignment(&self, assignment: &Assignment) -> Result<Rational, SystemError> {
        let mut total = Rational::zero();
        for (c, (a, b)) in &assignment.values {
            if let Some(k) = self.coefficients.get(&(c.clone(), a.clone(), b.clone())) {
                total += k;
            }
        }
        if let Some((c, _, _)) = self.coefficients.keys().find(|(c, _, _)| !assignment.values.contains_key(c)) {
            return Err(SystemError::ShapeMismatch(format!("assignment misses context {c}")));
        }
        Ok(total)
    }

    /// Both witness invariants: every listed realization scores at most the
    /// bound and the system scores strictly above it.
    pub fn certifies(&self, system: &SystemSpec, realizations: &[Realization]) -> bool {
        let Ok(score) = self.score_system(system) else {
            return false;
        };
        score > self.bound
            && realizations.iter().all(|r| self.score_assignment(&r.assignment).is_ok_and(|s| s <= self.bound))
    }
}

impl fmt::Display for BellWitness {
    /// `k₁·p(x,y)[a,b] − k₂·p(..)[..] ≤ bound`, unit coefficients elided.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for ((c, a, b), k) in self.coefficients.iter().filter(|(_, k)| !k.is_zero()) {
            let sign = match (first, k.is_negative()) {
                (true, true) => "-",
                (true, false) => "",
                (false, true) => " - ",
                (false, false) => " + ",
            };
            let m = k.abs();
            let m = if m.is_one() { String::new() } else { format!("{m}·") };
            write!(f, "{sign}{m}p{c}[{a},{b}]")?;
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " ≤ {}", self.bound)
    }
}

/// Free-function form of the witness score on a system.
pub fn witness_score(witness: &BellWitness, system: &SystemSpec) -> Result<Rational, SystemError> {
    witness.score_system(system)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Noncontextual(Decomposition),
    Contextual(BellWitness),
    NoNsRealizations,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VerdictKind {
    Noncontextual,
    Contextual,
    NoNsRealizations,
}

impl Verdict {
    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Noncontextual(_) => VerdictKind::Noncontextual,
            Verdict::Contextual(_) => VerdictKind::Contextual,
            Verdict::NoNsRealizations => VerdictKind::NoNsRealizations,
        }
    }
}

impl VerdictKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictKind::Noncontextual => "noncontextual",
            VerdictKind::Contextual => "contextual",
            VerdictKind::NoNsRealizations => "no_ns_realizations",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassifyStats {
    pub realizations: usize,
    pub search_nodes: u64,
    pub lp_rows: usize,
    pub lp_columns: usize,
    pub pivots: usize,
}

/// Decides whether a valid non-signaling system is a mixture of
/// non-signaling deterministic realizations.
///
/// Only realizations inside the system's support can carry weight, so they
/// are the LP columns. An infeasible LP, or an empty column set, yields a
/// witness valid against every non-signaling realization of the full
/// alphabets. `NoNsRealizations` is returned only when even the full
/// alphabets admit none. `limit` caps each enumeration.
pub fn classify(system: &SystemSpec, limit: usize) -> Result<Verdict, ContextualityError> {
    classify_with_stats(system, limit).map(|(v, _)| v)
}

/// Full classification with search and solver statistics.
pub fn classify_with_stats(system: &SystemSpec, limit: usize) -> Result<(Verdict, ClassifyStats), ContextualityError> {
    system.ensure_valid()?;
    system.check_nonsignaling().map_err(ContextualityError::Signaling)?;
    let support = system.support_of();
    let (set, search) = enumerate_with_stats(&support, limit)?;
    let mut stats = ClassifyStats { realizations: set.len(), search_nodes: search.nodes, ..ClassifyStats::default() };
    if set.is_empty() {
        // every non-signaling assignment hits a zero-probability cell
        let verdict = match zero_cell_witness(system, limit)? {
            Some(w) => Verdict::Contextual(w),
            None => Verdict::NoNsRealizations,
        };
        return Ok((verdict, stats));
    }

    let (problem, cells) = mixture_problem(system, &set);
    stats.lp_rows = problem.rows().len();
    stats.lp_columns = problem.columns();
    let (outcome, solve) = feasibility::solve_with_stats(&problem);
    stats.pivots = solve.pivots;
    debug_assert!(feasibility::verify(&problem, &outcome));

    let verdict = match outcome {
        FeasibilityOutcome::Feasible(sol) => Verdict::Noncontextual(Decomposition {
            components: set.realizations.into_iter().zip(sol.p).filter(|(_, w)| w.is_positive()).collect(),
        }),
        FeasibilityOutcome::Infeasible(cert) => {
            Verdict::Contextual(witness_from_certificate(system, &set, &cells, &cert.y))
        }
    };
    Ok((verdict, stats))
}

type Cell = (Context, String, String);

/// One row per `(context, a, b)` cell plus the normalization row (last);
/// one column per realization.
fn mixture_problem(system: &SystemSpec, set: &NsRealizationSet) -> (FeasibilityProblem, Vec<Cell>) {
    let mut cells = Vec::new();
    let mut rhs = Vec::new();
    let mut row_of: BTreeMap<(&Context, usize, usize), usize> = BTreeMap::new();
    for (c, pmf) in system.entries() {
        for (i, j, p) in pmf.cells() {
            row_of.insert((c, i, j), cells.len());
            cells.push((c.clone(), pmf.a_alphabet[i].clone(), pmf.b_alphabet[j].clone()));
            rhs.push(p.clone());
        }
    }
    let n = set.len();
    let mut rows = vec![vec![Rational::zero(); n]; cells.len()];
    for (col, r) in set.realizations.iter().enumerate() {
        for (c, pmf) in system.entries() {
            let (a, b) = &r.assignment.values[c];
            let i = pmf.a_alphabet.iter().position(|l| l == a).expect("outcome in alphabet");
            let j = pmf.b_alphabet.iter().position(|l| l == b).expect("outcome in alphabet");
            rows[row_of[&(c, i, j)]][col] = Rational::one();
        }
    }
    rows.push(vec![Rational::one(); n]);
    rhs.push(Rational::one());
    let problem = FeasibilityProblem::new(n, rows, rhs).expect("consistent dimensions");
    (problem, cells)
}

/// Folds Farkas multipliers into system coordinates.
///
/// With `y` over the cell rows and `y₀` on the normalization row, every
/// column satisfies `score + y₀ ≤ 0` and the system `score + y₀ > 0`. The
/// bound is then tightened to the best realization score. Cells the system
/// gives probability zero get a coefficient low enough that any
/// non-signaling assignment touching one also stays below the bound.
/// Finally the functional is rescaled to coprime integers.
fn witness_from_certificate(
    system: &SystemSpec,
    set: &NsRealizationSet,
    cells: &[Cell],
    y: &[Rational],
) -> BellWitness {
    let mut coefficients: BTreeMap<Cell, Rational> = cells.iter().cloned().zip(y.iter().cloned()).collect();
    let mut witness = BellWitness { coefficients: coefficients.clone(), bound: Rational::zero() };
    let bound = set
        .realizations
        .iter()
        .map(|r| witness.score_assignment(&r.assignment).expect("same shape"))
        .max()
        .expect("non-empty realization set");

    let mut reach = bound.abs() + Rational::one();
    for (c, _) in system.entries() {
        let best = coefficients
            .iter()
            .filter(|((cc, _, _), _)| cc == c)
            .map(|(_, k)| k.abs())
            .max()
            .unwrap_or_else(Rational::zero);
        reach += best;
    }
    for (c, pmf) in system.entries() {
        for (i, j, p) in pmf.cells() {
            if p.is_zero() {
                let key = (c.clone(), pmf.a_alphabet[i].clone(), pmf.b_alphabet[j].clone());
                coefficients.insert(key, -reach.clone());
            }
        }
    }

    let scale = coefficients.values().chain(std::iter::once(&bound)).fold(BigInt::one(), |acc, k| acc.lcm(k.denom()));
    let scale = Rational::from_integer(scale);
    let mut ints: BTreeMap<Cell, Rational> = coefficients.into_iter().map(|(k, v)| (k, v * &scale)).collect();
    let mut bound = bound * &scale;
    let g = ints.values().chain(std::iter::once(&bound)).fold(BigInt::zero(), |acc, k| acc.gcd(k.numer()));
    if !g.is_zero() && !g.is_one() {
        let g = Rational::from_integer(g);
        for v in ints.values_mut() {
            *v /= &g;
        }
        bound /= &g;
    }
    witness.coefficients = ints;
    witness.bound = bound;
    witness
}

/// Coefficient −1 on every zero-probability cell. The system scores 0; the
/// bound is the best score over all non-signaling realizations of the full
/// alphabets, which is negative when none fits inside the support. `None`
/// when the alphabets admit no non-signaling realization at all.
fn zero_cell_witness(system: &SystemSpec, limit: usize) -> Result<Option<BellWitness>, ContextualityError> {
    let mut coefficients = BTreeMap::new();
    for (c, pmf) in system.entries() {
        for (i, j, p) in pmf.cells() {
            if p.is_zero() {
                coefficients
                    .insert((c.clone(), pmf.a_alphabet[i].clone(), pmf.b_alphabet[j].clone()), -Rational::one());
            }
        }
    }
    let mut witness = BellWitness { coefficients, bound: Rational::zero() };
    let all = enumerate_ns_realizations(&SupportSpec::full(system), limit)?;
    let Some(bound) =
        all.realizations.iter().map(|r| witness.score_assignment(&r.assignment).expect("same shape")).max()
    else {
        return Ok(None);
    };
    debug_assert!(bound.is_negative());
    witness.bound = bound;
    Ok(Some(witness))
}

/// True iff the weighted mixture equals the system in every context.
pub fn decomposition_reproduces(system: &SystemSpec, decomposition: &Decomposition) -> bool {
    let weights_ok = decomposition.components.iter().all(|(_, w)| w.is_positive())
        && decomposition.components.iter().fold(Rational::zero(), |acc, (_, w)| acc + w).is_one();
    weights_ok && decomposition.mixture(system).is_ok_and(|m| m.entries() == system.entries())
}

/// Possibilistic classification: only decides whether any non-signaling
/// realization fits the supports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SupportVerdict {
    NoNsRealizations,
    NsRealizations(NsRealizationSet),
}

pub fn classify_support(support: &SupportSpec, limit: usize) -> Result<SupportVerdict, ContextualityError> {
    let set = enumerate_ns_realizations(support, limit)?;
    Ok(if set.is_empty() { SupportVerdict::NoNsRealizations } else { SupportVerdict::NsRealizations(set) })
}

/// The 2×2 binary setting labels `([x1, x2], [y1, y2])`, or a shape error.
fn two_by_two(system: &SystemSpec) -> Result<([Label; 2], [Label; 2]), ContextualityError> {
    let xs = system.used_settings(Side::A);
    let ys = system.used_settings(Side::B);
    if xs.len() != 2 || ys.len() != 2 || system.len() != 4 {
        return Err(ContextualityError::WrongShape(format!(
            "{} A settings, {} B settings, {} contexts",
            xs.len(),
            ys.len(),
            system.len()
        )));
    }
    for (c, pmf) in system.entries() {
        if pmf.a_alphabet.len() != 2 || pmf.b_alphabet.len() != 2 {
            return Err(ContextualityError::WrongShape(format!("context {c} is not binary")));
        }
    }
    Ok(([xs[0].clone(), xs[1].clone()], [ys[0].clone(), ys[1].clone()]))
}

/// Largest CHSH combination `|±c₁₁ ± c₁₂ ± c₂₁ ± c₂₂|` with an odd number of
/// minus signs, where `c_xy` is the product expectation under `coding`.
pub fn chsh_with(system: &SystemSpec, coding: &Coding) -> Result<Rational, ContextualityError> {
    let (xs, ys) = two_by_two(system)?;
    let mut c = Vec::with_capacity(4);
    for x in &xs {
        for y in &ys {
            c.push(system.expectation_product(&Context::new(x.clone(), y.clone()), coding)?);
        }
    }
    let best = (0..4)
        .map(|minus| {
            c.iter().enumerate().fold(Rational::zero(), |acc, (k, v)| if k == minus { acc - v } else { acc + v }).abs()
        })
        .max()
        .expect("four patterns");
    Ok(best)
}

/// CHSH value under the `1 → +1, 0 → −1` coding.
pub fn chsh(system: &SystemSpec) -> Result<Rational, ContextualityError> {
    chsh_with(system, &plus_minus_coding())
}

/// Fine's criterion for 2×2 binary non-signaling systems: noncontextual iff
/// every CHSH combination is at most 2.
pub fn fine_oracle(system: &SystemSpec) -> Result<VerdictKind, ContextualityError> {
    two_by_two(system)?;
    system.check_nonsignaling().map_err(ContextualityError::Signaling)?;
    let two = Rational::from_integer(2.into());
    Ok(if chsh(system)? <= two { VerdictKind::Noncontextual } else { VerdictKind::Contextual })
}
