//! JSON system files and verdict reports.
//!
//! Probabilities are always strings such as `"1/2"` or `"1"`; JSON numbers
//! are rejected. Output is canonical: settings and contexts in canonical
//! order, rationals in lowest terms, only positive pmf entries listed.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::IndexMap;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contextuality::{
    classify_with_stats, enumerate_with_stats, BellWitness, ContextualityError, Decomposition, Verdict,
};
use crate::system::{
    parse_rational, Assignment, Context, JointPmf, Label, Marginal, Rational, Realization, SettingFunctions, Side,
    SignalingWitness, Support, SupportSpec, SystemSpec, Violation,
};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub a_settings: Vec<String>,
    pub b_settings: Vec<String>,
    pub a_alphabet: IndexMap<String, Vec<String>>,
    pub b_alphabet: IndexMap<String, Vec<String>>,
    pub contexts: Vec<ContextEntry>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextEntry {
    pub x: String,
    pub y: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pmf: Option<Vec<PmfEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<Vec<(String, String)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmfEntry {
    pub a: String,
    pub b: String,
    pub p: String,
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0:?} is not a rational of the form \"n\" or \"n/d\"")]
    BadRational(String),
    #[error("setting {side}:{setting} is listed but has no alphabet, or has an alphabet but is not listed")]
    SettingMismatch { side: Side, setting: String },
    #[error("context ({x},{y}) must have exactly one of \"pmf\" and \"support\"")]
    PayloadKind { x: String, y: String },
    #[error("file mixes pmf and support contexts")]
    MixedPayloads,
    #[error("context ({x},{y}) uses undeclared setting")]
    UndeclaredSetting { x: String, y: String },
    #[error("context ({x},{y}): outcome pair ({a},{b}) not in the alphabets")]
    UnknownOutcome { x: String, y: String, a: String, b: String },
    #[error("context ({x},{y}): outcome pair ({a},{b}) listed twice")]
    DuplicateEntry { x: String, y: String, a: String, b: String },
    #[error("invalid system: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// A parsed system file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadedSystem {
    Probabilistic(SystemSpec),
    Possibilistic(SupportSpec),
}

impl LoadedSystem {
    pub fn name(&self) -> &str {
        match self {
            LoadedSystem::Probabilistic(s) => s.name(),
            LoadedSystem::Possibilistic(s) => s.name(),
        }
    }

    pub fn support(&self) -> SupportSpec {
        match self {
            LoadedSystem::Probabilistic(s) => s.support_of(),
            LoadedSystem::Possibilistic(s) => s.clone(),
        }
    }
}

pub fn parse_system(json: &str) -> Result<LoadedSystem, FormatError> {
    let file: SystemFile = serde_json::from_str(json)?;
    from_file(&file)
}

fn rational(s: &str) -> Result<Rational, FormatError> {
    parse_rational(s).ok_or_else(|| FormatError::BadRational(s.to_string()))
}

pub fn from_file(file: &SystemFile) -> Result<LoadedSystem, FormatError> {
    for (side, listed, alphabets) in
        [(Side::A, &file.a_settings, &file.a_alphabet), (Side::B, &file.b_settings, &file.b_alphabet)]
    {
        let listed: BTreeSet<&String> = listed.iter().collect();
        let keyed: BTreeSet<&String> = alphabets.keys().collect();
        if let Some(s) = listed.symmetric_difference(&keyed).next() {
            return Err(FormatError::SettingMismatch { side, setting: (*s).clone() });
        }
    }
    let probabilistic = match file.contexts.first() {
        Some(c) => c.pmf.is_some(),
        None => true,
    };
    let mut pmf_system = SystemSpec::new(file.name.clone());
    let mut support_system = SupportSpec::new(file.name.clone());
    for (label, alphabet) in &file.a_alphabet {
        pmf_system.add_setting(Side::A, label.as_str(), alphabet.clone());
        support_system.add_setting(Side::A, label.as_str(), alphabet.clone());
    }
    for (label, alphabet) in &file.b_alphabet {
        pmf_system.add_setting(Side::B, label.as_str(), alphabet.clone());
        support_system.add_setting(Side::B, label.as_str(), alphabet.clone());
    }

    for entry in &file.contexts {
        let (x, y) = (entry.x.clone(), entry.y.clone());
        let (Some(a_alph), Some(b_alph)) = (file.a_alphabet.get(&entry.x), file.b_alphabet.get(&entry.y)) else {
            return Err(FormatError::UndeclaredSetting { x, y });
        };
        let locate = |a: &String, b: &String| {
            let i = a_alph.iter().position(|l| l == a);
            let j = b_alph.iter().position(|l| l == b);
            match (i, j) {
                (Some(i), Some(j)) => Ok((i, j)),
                _ => Err(FormatError::UnknownOutcome {
                    x: entry.x.clone(),
                    y: entry.y.clone(),
                    a: a.clone(),
                    b: b.clone(),
                }),
            }
        };
        let duplicate = |a: &String, b: &String| FormatError::DuplicateEntry {
            x: entry.x.clone(),
            y: entry.y.clone(),
            a: a.clone(),
            b: b.clone(),
        };
        let context = Context::new(x.as_str(), y.as_str());
        match (&entry.pmf, &entry.support) {
            (Some(entries), None) => {
                if !probabilistic {
                    return Err(FormatError::MixedPayloads);
                }
                let mut pmf = JointPmf::zeros(a_alph.clone(), b_alph.clone());
                let mut seen = BTreeSet::new();
                for e in entries {
                    let (i, j) = locate(&e.a, &e.b)?;
                    if !seen.insert((i, j)) {
                        return Err(duplicate(&e.a, &e.b));
                    }
                    pmf.set(i, j, rational(&e.p)?);
                }
                pmf_system.add_context(context, pmf);
            }
            (None, Some(pairs)) => {
                if probabilistic {
                    return Err(FormatError::MixedPayloads);
                }
                let mut support = Support::new();
                for (a, b) in pairs {
                    if !support.insert(locate(a, b)?) {
                        return Err(duplicate(a, b));
                    }
                }
                support_system.add_context(context, support);
            }
            _ => return Err(FormatError::PayloadKind { x, y }),
        }
    }

    if probabilistic {
        let v = pmf_system.validate();
        if !v.is_empty() {
            return Err(FormatError::Invalid(v));
        }
        Ok(LoadedSystem::Probabilistic(pmf_system))
    } else {
        let v = support_system.validate();
        if !v.is_empty() {
            return Err(FormatError::Invalid(v));
        }
        Ok(LoadedSystem::Possibilistic(support_system))
    }
}

fn header<T>(s: &crate::system::Compound<T>) -> SystemFile {
    let side = |side: Side| -> (Vec<String>, IndexMap<String, Vec<String>>) {
        let alphabets = s.alphabets(side);
        (
            alphabets.keys().map(|l| l.to_string()).collect(),
            alphabets.iter().map(|(l, a)| (l.to_string(), a.clone())).collect(),
        )
    };
    let (a_settings, a_alphabet) = side(Side::A);
    let (b_settings, b_alphabet) = side(Side::B);
    SystemFile { name: s.name().to_string(), a_settings, b_settings, a_alphabet, b_alphabet, contexts: Vec::new() }
}

pub fn system_to_file(s: &SystemSpec) -> SystemFile {
    let mut file = header(s);
    file.contexts = s
        .entries()
        .iter()
        .map(|(c, pmf)| ContextEntry {
            x: c.x.to_string(),
            y: c.y.to_string(),
            pmf: Some(
                pmf.cells()
                    .filter(|(_, _, p)| !p.is_zero())
                    .map(|(i, j, p)| PmfEntry {
                        a: pmf.a_alphabet[i].clone(),
                        b: pmf.b_alphabet[j].clone(),
                        p: p.to_string(),
                    })
                    .collect(),
            ),
            support: None,
        })
        .collect();
    file
}

pub fn support_to_file(s: &SupportSpec) -> SystemFile {
    let mut file = header(s);
    file.contexts = s
        .entries()
        .iter()
        .map(|(c, support)| {
            let a = s.alphabet(Side::A, &c.x).unwrap_or_default();
            let b = s.alphabet(Side::B, &c.y).unwrap_or_default();
            ContextEntry {
                x: c.x.to_string(),
                y: c.y.to_string(),
                pmf: None,
                support: Some(support.iter().map(|&(i, j)| (a[i].clone(), b[j].clone())).collect()),
            }
        })
        .collect();
    file
}

pub fn loaded_to_file(s: &LoadedSystem) -> SystemFile {
    match s {
        LoadedSystem::Probabilistic(s) => system_to_file(s),
        LoadedSystem::Possibilistic(s) => support_to_file(s),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn emit_system(s: &LoadedSystem) -> String {
    to_json(&loaded_to_file(s))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRef {
    pub x: String,
    pub y: String,
}

impl From<&Context> for ContextRef {
    fn from(c: &Context) -> Self {
        ContextRef { x: c.x.to_string(), y: c.y.to_string() }
    }
}

impl From<&ContextRef> for Context {
    fn from(c: &ContextRef) -> Self {
        Context::new(c.x.as_str(), c.y.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalingReport {
    pub side: String,
    pub setting: String,
    pub context1: ContextRef,
    pub context2: ContextRef,
    pub marginal1: IndexMap<String, String>,
    pub marginal2: IndexMap<String, String>,
}

fn marginal_map(m: &Marginal) -> IndexMap<String, String> {
    m.iter().map(|(o, p)| (o.clone(), p.to_string())).collect()
}

impl From<&SignalingWitness> for SignalingReport {
    fn from(w: &SignalingWitness) -> Self {
        SignalingReport {
            side: w.side.to_string(),
            setting: w.setting.to_string(),
            context1: (&w.context1).into(),
            context2: (&w.context2).into(),
            marginal1: marginal_map(&w.marginal1),
            marginal2: marginal_map(&w.marginal2),
        }
    }
}

/// `true`, or the signaling witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonsignalingField {
    Ok(bool),
    Witness(Box<SignalingReport>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonsignalingReport {
    pub system: String,
    pub nonsignaling: NonsignalingField,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub weight: String,
    pub a: IndexMap<String, String>,
    pub b: IndexMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientReport {
    pub x: String,
    pub y: String,
    pub a: String,
    pub b: String,
    pub c: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub bound: String,
    pub coefficients: Vec<CoefficientReport>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub realizations: usize,
    pub search_nodes: u64,
    pub lp_rows: usize,
    pub lp_columns: usize,
    pub pivots: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub system: String,
    pub nonsignaling: NonsignalingField,
    /// `noncontextual`, `contextual`, `no_ns_realizations`, `signaling`, or
    /// `ns_realizations_exist` (support-only input with realizations).
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<Vec<ComponentReport>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessReport>,
    pub stats: StatsReport,
}

pub const SIGNALING: &str = "signaling";
pub const NS_REALIZATIONS_EXIST: &str = "ns_realizations_exist";

fn functions_maps(f: &SettingFunctions) -> (IndexMap<String, String>, IndexMap<String, String>) {
    (
        f.a.iter().map(|(l, v)| (l.to_string(), v.clone())).collect(),
        f.b.iter().map(|(l, v)| (l.to_string(), v.clone())).collect(),
    )
}

pub fn decomposition_report(d: &Decomposition) -> Vec<ComponentReport> {
    d.hidden_variable_model()
        .into_iter()
        .map(|(f, w)| {
            let (a, b) = functions_maps(&f);
            ComponentReport { weight: w.to_string(), a, b }
        })
        .collect()
}

pub fn witness_report(w: &BellWitness) -> WitnessReport {
    WitnessReport {
        bound: w.bound.to_string(),
        coefficients: w
            .coefficients
            .iter()
            .filter(|(_, k)| !k.is_zero())
            .map(|((c, a, b), k)| CoefficientReport {
                x: c.x.to_string(),
                y: c.y.to_string(),
                a: a.clone(),
                b: b.clone(),
                c: k.to_string(),
            })
            .collect(),
    }
}

pub fn nonsignaling_report(system: &LoadedSystem) -> NonsignalingReport {
    let nonsignaling = match system {
        LoadedSystem::Probabilistic(s) => match s.check_nonsignaling() {
            Ok(()) => NonsignalingField::Ok(true),
            Err(w) => NonsignalingField::Witness(Box::new(w.as_ref().into())),
        },
        // supports carry no distributions; nothing can signal
        LoadedSystem::Possibilistic(_) => NonsignalingField::Ok(true),
    };
    NonsignalingReport { system: system.name().to_string(), nonsignaling }
}

/// Runs the full analysis of a loaded system.
pub fn analyze(system: &LoadedSystem, limit: usize) -> Result<VerdictReport, ContextualityError> {
    let name = system.name().to_string();
    match system {
        LoadedSystem::Probabilistic(s) => {
            if let Err(w) = s.check_nonsignaling() {
                return Ok(VerdictReport {
                    system: name,
                    nonsignaling: NonsignalingField::Witness(Box::new(w.as_ref().into())),
                    verdict: SIGNALING.into(),
                    decomposition: None,
                    witness: None,
                    stats: StatsReport::default(),
                });
            }
            let (verdict, st) = classify_with_stats(s, limit)?;
            let stats = StatsReport {
                realizations: st.realizations,
                search_nodes: st.search_nodes,
                lp_rows: st.lp_rows,
                lp_columns: st.lp_columns,
                pivots: st.pivots,
            };
            let mut report = VerdictReport {
                system: name,
                nonsignaling: NonsignalingField::Ok(true),
                verdict: verdict.kind().to_string(),
                decomposition: None,
                witness: None,
                stats,
            };
            match &verdict {
                Verdict::Noncontextual(d) => report.decomposition = Some(decomposition_report(d)),
                Verdict::Contextual(w) => report.witness = Some(witness_report(w)),
                Verdict::NoNsRealizations => {}
            }
            Ok(report)
        }
        LoadedSystem::Possibilistic(s) => {
            let (set, st) = enumerate_with_stats(s, limit)?;
            Ok(VerdictReport {
                system: name,
                nonsignaling: NonsignalingField::Ok(true),
                verdict: if set.is_empty() {
                    crate::contextuality::VerdictKind::NoNsRealizations.to_string()
                } else {
                    NS_REALIZATIONS_EXIST.into()
                },
                decomposition: None,
                witness: None,
                stats: StatsReport { realizations: set.len(), search_nodes: st.nodes, ..StatsReport::default() },
            })
        }
    }
}

fn parse_map(m: &IndexMap<String, String>) -> BTreeMap<Label, String> {
    m.iter().map(|(k, v)| (Label::new(k.as_str()), v.clone())).collect()
}

/// Re-checks a report's decomposition or witness against the system using
/// only what the report states. Returns a description of the first problem.
pub fn verify_report(report: &VerdictReport, system: &LoadedSystem, limit: usize) -> Result<(), String> {
    match report.verdict.as_str() {
        "noncontextual" => {
            let LoadedSystem::Probabilistic(s) = system else {
                return Err("noncontextual verdict needs a probabilistic system".into());
            };
            let comps = report.decomposition.as_ref().ok_or("missing decomposition")?;
            let mut components = Vec::new();
            for c in comps {
                let w = rational(&c.weight).map_err(|e| e.to_string())?;
                let f = SettingFunctions { a: parse_map(&c.a), b: parse_map(&c.b) };
                let assignment = f.to_assignment(s).ok_or("component misses a setting")?;
                if !assignment.is_ns() {
                    return Err("component is signaling".into());
                }
                components.push((Realization { assignment, ns: true }, w));
            }
            let d = Decomposition { components };
            if crate::contextuality::decomposition_reproduces(s, &d) {
                Ok(())
            } else {
                Err("decomposition does not reproduce the system".into())
            }
        }
        "contextual" => {
            let LoadedSystem::Probabilistic(s) = system else {
                return Err("contextual verdict needs a probabilistic system".into());
            };
            let wr = report.witness.as_ref().ok_or("missing witness")?;
            let mut coefficients = BTreeMap::new();
            for c in &wr.coefficients {
                let k = rational(&c.c).map_err(|e| e.to_string())?;
                coefficients.insert((Context::new(c.x.as_str(), c.y.as_str()), c.a.clone(), c.b.clone()), k);
            }
            let w = BellWitness { coefficients, bound: rational(&wr.bound).map_err(|e| e.to_string())? };
            let all = crate::contextuality::enumerate_ns_realizations(&SupportSpec::full(s), limit)
                .map_err(|e| e.to_string())?;
            if w.certifies(s, &all.realizations) {
                Ok(())
            } else {
                Err("witness does not separate the system from the non-signaling realizations".into())
            }
        }
        "no_ns_realizations" => {
            let set =
                crate::contextuality::enumerate_ns_realizations(&system.support(), limit).map_err(|e| e.to_string())?;
            if set.is_empty() {
                Ok(())
            } else {
                Err(format!("found {} non-signaling realizations", set.len()))
            }
        }
        "signaling" => match system {
            LoadedSystem::Probabilistic(s) if s.check_nonsignaling().is_err() => Ok(()),
            _ => Err("system is non-signaling".into()),
        },
        NS_REALIZATIONS_EXIST => Ok(()),
        other => Err(format!("unknown verdict {other:?}")),
    }
}

/// One line per realization: `{"a":{..},"b":{..}}` in canonical order.
pub fn functions_line(f: &SettingFunctions) -> String {
    let (a, b) = functions_maps(f);
    #[derive(Serialize)]
    struct Line {
        a: IndexMap<String, String>,
        b: IndexMap<String, String>,
    }
    serde_json::to_string(&Line { a, b }).expect("serializable")
}

/// One line per assignment: `[{"x":..,"y":..,"a":..,"b":..}, ..]`.
pub fn assignment_line(assignment: &Assignment) -> String {
    let cells: Vec<IndexMap<&str, String>> = assignment
        .values
        .iter()
        .map(|(c, (a, b))| {
            [("x", c.x.to_string()), ("y", c.y.to_string()), ("a", a.clone()), ("b", b.clone())].into_iter().collect()
        })
        .collect();
    serde_json::to_string(&cells).expect("serializable")
}

/// Rational helper for callers that format values.
pub fn rational_string(r: &Rational) -> String {
    if r.is_one() {
        "1".into()
    } else if r.is_negative() && r.denom().is_one() {
        r.numer().to_string()
    } else {
        r.to_string()
    }
}
