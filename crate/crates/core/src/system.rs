//! Bipartite compound systems and their per-context joint distributions.
//!
//! A compound system holds one AB-pair per context `(x, y)`, where `x` is a
//! setting on side A and `y` a setting on side B. Every quantity is an exact
//! rational; there is no floating point anywhere in this module.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Parses `"n"` or `"n/d"` into a rational. Float literals are rejected.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let ok = |t: &str| {
        let digits = t.strip_prefix('-').unwrap_or(t);
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !ok(num) || !ok(den) {
        return None;
    }
    let num = num.parse().ok()?;
    let den: num_bigint::BigInt = den.parse().ok()?;
    if den.is_zero() {
        return None;
    }
    Some(Rational::new(num, den))
}

/// Which party a setting or variable belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => f.write_str("A"),
            Side::B => f.write_str("B"),
        }
    }
}

/// Setting label. Orders numerically when both labels are integers, so that
/// `"2" < "10"`; otherwise lexicographically, with numeric labels first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(s: impl Into<String>) -> Self {
        Label(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn numeric(&self) -> Option<u128> {
        if self.0.is_empty() || !self.0.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        self.0.parse().ok()
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.numeric(), other.numeric()) {
            (Some(a), Some(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

impl From<String> for Label {
    fn from(s: String) -> Self {
        Label(s)
    }
}

/// A pair of settings `(x, y)`. Canonical order is by `x`, then `y`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context {
    pub x: Label,
    pub y: Label,
}

impl Context {
    pub fn new(x: impl Into<Label>, y: impl Into<Label>) -> Self {
        Context { x: x.into(), y: y.into() }
    }

    pub fn setting(&self, side: Side) -> &Label {
        match side {
            Side::A => &self.x,
            Side::B => &self.y,
        }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Joint distribution of one AB-pair, stored densely in row-major order
/// (`a` index major).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointPmf {
    pub a_alphabet: Vec<String>,
    pub b_alphabet: Vec<String>,
    probs: Vec<Rational>,
}

impl JointPmf {
    /// Builds a pmf without checking normalization; see [`SystemSpec::validate`].
    /// Panics if `probs` does not match the alphabet product.
    pub fn new(a_alphabet: Vec<String>, b_alphabet: Vec<String>, probs: Vec<Rational>) -> Self {
        assert_eq!(probs.len(), a_alphabet.len() * b_alphabet.len(), "pmf length must equal the alphabet product");
        JointPmf { a_alphabet, b_alphabet, probs }
    }

    /// All-zero table over the given alphabets.
    pub fn zeros(a_alphabet: Vec<String>, b_alphabet: Vec<String>) -> Self {
        let n = a_alphabet.len() * b_alphabet.len();
        JointPmf::new(a_alphabet, b_alphabet, vec![Rational::zero(); n])
    }

    /// Point mass on `(a, b)`.
    pub fn deterministic(a_alphabet: Vec<String>, b_alphabet: Vec<String>, a: usize, b: usize) -> Self {
        let mut pmf = JointPmf::zeros(a_alphabet, b_alphabet);
        pmf.set(a, b, Rational::one());
        pmf
    }

    pub fn prob(&self, a: usize, b: usize) -> &Rational {
        &self.probs[a * self.b_alphabet.len() + b]
    }

    pub fn set(&mut self, a: usize, b: usize, p: Rational) {
        let nb = self.b_alphabet.len();
        self.probs[a * nb + b] = p;
    }

    /// Probability of the outcome pair given by labels, if both labels exist.
    pub fn prob_of(&self, a: &str, b: &str) -> Option<&Rational> {
        let i = self.a_alphabet.iter().position(|l| l == a)?;
        let j = self.b_alphabet.iter().position(|l| l == b)?;
        Some(self.prob(i, j))
    }

    pub fn probs(&self) -> &[Rational] {
        &self.probs
    }

    pub fn total(&self) -> Rational {
        self.probs.iter().fold(Rational::zero(), |acc, p| acc + p)
    }

    /// Iterates `(a_index, b_index, probability)` in canonical order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        let nb = self.b_alphabet.len();
        self.probs.iter().enumerate().map(move |(k, p)| (k / nb, k % nb, p))
    }

    pub fn marginal(&self, side: Side) -> Marginal {
        match side {
            Side::A => self
                .a_alphabet
                .iter()
                .enumerate()
                .map(|(i, label)| {
                    let p = (0..self.b_alphabet.len()).fold(Rational::zero(), |acc, j| acc + self.prob(i, j));
                    (label.clone(), p)
                })
                .collect(),
            Side::B => self
                .b_alphabet
                .iter()
                .enumerate()
                .map(|(j, label)| {
                    let p = (0..self.a_alphabet.len()).fold(Rational::zero(), |acc, i| acc + self.prob(i, j));
                    (label.clone(), p)
                })
                .collect(),
        }
    }

    /// Cells with strictly positive probability.
    pub fn support(&self) -> Support {
        self.cells().filter(|(_, _, p)| p.is_positive()).map(|(i, j, _)| (i, j)).collect()
    }
}

/// One-sided distribution in alphabet order.
pub type Marginal = Vec<(String, Rational)>;

/// Possible outcome pairs of one context, as alphabet indices `(a, b)`.
pub type Support = BTreeSet<(usize, usize)>;

/// Context payload that knows how many outcome pairs it allows.
pub trait ContextData {
    fn support_size(&self) -> usize;
}

impl ContextData for JointPmf {
    fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| p.is_positive()).count()
    }
}

impl ContextData for Support {
    fn support_size(&self) -> usize {
        self.len()
    }
}

/// A compound system: declared settings with their outcome alphabets and a
/// payload per context. Entries are kept in canonical context order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Compound<T> {
    name: String,
    a_alphabets: BTreeMap<Label, Vec<String>>,
    b_alphabets: BTreeMap<Label, Vec<String>>,
    entries: Vec<(Context, T)>,
}

/// Probabilistic system: one joint pmf per context.
pub type SystemSpec = Compound<JointPmf>;

/// Possibilistic system: one set of possible outcome pairs per context.
pub type SupportSpec = Compound<Support>;

impl<T> Compound<T> {
    pub fn new(name: impl Into<String>) -> Self {
        Compound { name: name.into(), a_alphabets: BTreeMap::new(), b_alphabets: BTreeMap::new(), entries: Vec::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Declares (or redeclares) a setting and its outcome alphabet.
    pub fn add_setting<S: Into<String>>(
        &mut self,
        side: Side,
        label: impl Into<Label>,
        alphabet: impl IntoIterator<Item = S>,
    ) {
        let alphabet = alphabet.into_iter().map(Into::into).collect();
        self.alphabets_mut(side).insert(label.into(), alphabet);
    }

    /// Inserts a context in canonical position. Duplicates are kept so that
    /// `validate` can report them.
    pub fn add_context(&mut self, context: Context, data: T) {
        let pos = self.entries.partition_point(|(c, _)| *c <= context);
        self.entries.insert(pos, (context, data));
    }

    fn alphabets_mut(&mut self, side: Side) -> &mut BTreeMap<Label, Vec<String>> {
        match side {
            Side::A => &mut self.a_alphabets,
            Side::B => &mut self.b_alphabets,
        }
    }

    pub fn alphabets(&self, side: Side) -> &BTreeMap<Label, Vec<String>> {
        match side {
            Side::A => &self.a_alphabets,
            Side::B => &self.b_alphabets,
        }
    }

    pub fn alphabet(&self, side: Side, label: &Label) -> Option<&[String]> {
        self.alphabets(side).get(label).map(Vec::as_slice)
    }

    /// Declared settings of one side in canonical order.
    pub fn settings(&self, side: Side) -> impl Iterator<Item = &Label> {
        self.alphabets(side).keys()
    }

    /// Settings of one side that occur in at least one context.
    pub fn used_settings(&self, side: Side) -> Vec<Label> {
        let used: BTreeSet<&Label> = self.entries.iter().map(|(c, _)| c.setting(side)).collect();
        used.into_iter().cloned().collect()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.entries.iter().map(|(c, _)| c)
    }

    pub fn entries(&self) -> &[(Context, T)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, context: &Context) -> Option<&T> {
        let i = self.entries.binary_search_by(|(c, _)| c.cmp(context)).ok()?;
        Some(&self.entries[i].1)
    }

    /// Same settings, alphabets and context list.
    pub fn same_shape<U>(&self, other: &Compound<U>) -> bool {
        self.a_alphabets == other.a_alphabets
            && self.b_alphabets == other.b_alphabets
            && self.entries.len() == other.entries.len()
            && self.contexts().zip(other.contexts()).all(|(a, b)| a == b)
    }

    /// Rebuilds the compound with a new payload per context.
    pub fn map<U>(&self, mut f: impl FnMut(&Context, &T) -> U) -> Compound<U> {
        Compound {
            name: self.name.clone(),
            a_alphabets: self.a_alphabets.clone(),
            b_alphabets: self.b_alphabets.clone(),
            entries: self.entries.iter().map(|(c, t)| (c.clone(), f(c, t))).collect(),
        }
    }

    /// Violations that do not depend on the payload type.
    fn shape_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.entries.is_empty() {
            out.push(Violation::NoContexts);
        }
        for side in [Side::A, Side::B] {
            for (label, alphabet) in self.alphabets(side) {
                if alphabet.is_empty() {
                    out.push(Violation::EmptyAlphabet { side, setting: label.clone() });
                }
                let distinct: BTreeSet<&String> = alphabet.iter().collect();
                if distinct.len() != alphabet.len() {
                    out.push(Violation::DuplicateOutcome { side, setting: label.clone() });
                }
            }
        }
        for w in self.entries.windows(2) {
            if w[0].0 == w[1].0 {
                out.push(Violation::DuplicateContext(w[0].0.clone()));
            }
        }
        for (c, _) in &self.entries {
            for side in [Side::A, Side::B] {
                if !self.alphabets(side).contains_key(c.setting(side)) {
                    out.push(Violation::UnknownSetting { context: c.clone(), side, setting: c.setting(side).clone() });
                }
            }
        }
        out
    }

    fn declared_alphabets(&self, c: &Context) -> Option<(&[String], &[String])> {
        Some((self.alphabet(Side::A, &c.x)?, self.alphabet(Side::B, &c.y)?))
    }
}

/// An invariant violation found by `validate`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoContexts,
    DuplicateContext(Context),
    EmptyAlphabet { side: Side, setting: Label },
    DuplicateOutcome { side: Side, setting: Label },
    UnknownSetting { context: Context, side: Side, setting: Label },
    AlphabetMismatch { context: Context, side: Side },
    NegativeProbability { context: Context, a: String, b: String, value: Rational },
    BadSum { context: Context, sum: Rational },
    EmptySupport(Context),
    SupportOutOfRange { context: Context, a: usize, b: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoContexts => f.write_str("no contexts"),
            Violation::DuplicateContext(c) => write!(f, "duplicate context {c}"),
            Violation::EmptyAlphabet { side, setting } => {
                write!(f, "setting {side}:{setting} has an empty alphabet")
            }
            Violation::DuplicateOutcome { side, setting } => {
                write!(f, "setting {side}:{setting} repeats an outcome label")
            }
            Violation::UnknownSetting { context, side, setting } => {
                write!(f, "context {context} uses undeclared setting {side}:{setting}")
            }
            Violation::AlphabetMismatch { context, side } => {
                write!(f, "context {context}: {side} alphabet differs from the declared one")
            }
            Violation::NegativeProbability { context, a, b, value } => {
                write!(f, "context {context}: p({a},{b}) = {value} < 0")
            }
            Violation::BadSum { context, sum } => write!(f, "context {context}: sum {sum} ≠ 1"),
            Violation::EmptySupport(c) => write!(f, "context {c}: empty support"),
            Violation::SupportOutOfRange { context, a, b } => {
                write!(f, "context {context}: support pair ({a},{b}) outside the alphabet product")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("unknown context {0}")]
    UnknownContext(Context),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("mixture weights must be non-negative and sum to 1 (got sum {0})")]
    BadWeights(Rational),
    #[error("coding has no value for outcome {0:?}")]
    MissingCode(String),
    #[error("invalid system: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// Evidence that a one-sided marginal depends on the other side's setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalingWitness {
    pub side: Side,
    pub setting: Label,
    pub context1: Context,
    pub context2: Context,
    pub marginal1: Marginal,
    pub marginal2: Marginal,
}

impl fmt::Display for SignalingWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |m: &Marginal| m.iter().map(|(o, p)| format!("{o}:{p}")).collect::<Vec<_>>().join(", ");
        write!(
            f,
            "side {} setting {}: {} {{{}}} vs {} {{{}}}",
            self.side,
            self.setting,
            self.context1,
            show(&self.marginal1),
            self.context2,
            show(&self.marginal2)
        )
    }
}

impl SystemSpec {
    /// Every invariant violation; empty when the system is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.shape_violations();
        for (c, pmf) in &self.entries {
            if let Some((a, b)) = self.declared_alphabets(c) {
                if pmf.a_alphabet != a {
                    out.push(Violation::AlphabetMismatch { context: c.clone(), side: Side::A });
                }
                if pmf.b_alphabet != b {
                    out.push(Violation::AlphabetMismatch { context: c.clone(), side: Side::B });
                }
            }
            for (i, j, p) in pmf.cells() {
                if p.is_negative() {
                    out.push(Violation::NegativeProbability {
                        context: c.clone(),
                        a: pmf.a_alphabet[i].clone(),
                        b: pmf.b_alphabet[j].clone(),
                        value: p.clone(),
                    });
                }
            }
            let sum = pmf.total();
            if !sum.is_one() {
                out.push(Violation::BadSum { context: c.clone(), sum });
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), SystemError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SystemError::Invalid(v))
        }
    }

    pub fn pmf(&self, context: &Context) -> Result<&JointPmf, SystemError> {
        self.get(context).ok_or_else(|| SystemError::UnknownContext(context.clone()))
    }

    /// One-sided marginal of a context, in alphabet order.
    pub fn marginal(&self, context: &Context, side: Side) -> Result<Marginal, SystemError> {
        Ok(self.pmf(context)?.marginal(side))
    }

    /// Compares every context's one-sided marginals with the first context
    /// sharing that setting, scanning contexts in canonical order.
    pub fn check_nonsignaling(&self) -> Result<(), Box<SignalingWitness>> {
        let mut first: BTreeMap<(Side, &Label), (&Context, Marginal)> = BTreeMap::new();
        for (c, pmf) in &self.entries {
            for side in [Side::A, Side::B] {
                let m = pmf.marginal(side);
                match first.get(&(side, c.setting(side))) {
                    Some((c0, m0)) => {
                        if *m0 != m {
                            return Err(Box::new(SignalingWitness {
                                side,
                                setting: c.setting(side).clone(),
                                context1: (*c0).clone(),
                                context2: c.clone(),
                                marginal1: m0.clone(),
                                marginal2: m,
                            }));
                        }
                    }
                    None => {
                        first.insert((side, c.setting(side)), (c, m));
                    }
                }
            }
        }
        Ok(())
    }

    /// Per-context set of outcome pairs with positive probability.
    pub fn support_of(&self) -> SupportSpec {
        self.map(|_, pmf| pmf.support())
    }

    /// `Σ p(a,b)·code(a)·code(b)` for one context.
    pub fn expectation_product(&self, context: &Context, coding: &Coding) -> Result<Rational, SystemError> {
        let pmf = self.pmf(context)?;
        let code = |label: &String| coding.get(label).cloned().ok_or_else(|| SystemError::MissingCode(label.clone()));
        let a_codes = pmf.a_alphabet.iter().map(code).collect::<Result<Vec<_>, _>>()?;
        let b_codes = pmf.b_alphabet.iter().map(code).collect::<Result<Vec<_>, _>>()?;
        Ok(pmf
            .cells()
            .filter(|(_, _, p)| !p.is_zero())
            .fold(Rational::zero(), |acc, (i, j, p)| acc + p * &a_codes[i] * &b_codes[j]))
    }

    /// The deterministic system that realizes `assignment`.
    pub fn from_assignment(shape: &Compound<impl Sized>, assignment: &Assignment) -> Result<SystemSpec, SystemError> {
        let mut out = SystemSpec::new(shape.name.clone());
        out.a_alphabets = shape.a_alphabets.clone();
        out.b_alphabets = shape.b_alphabets.clone();
        for c in shape.contexts() {
            let (a_alph, b_alph) = shape
                .declared_alphabets(c)
                .ok_or_else(|| SystemError::ShapeMismatch(format!("context {c} uses an undeclared setting")))?;
            let (a, b) = assignment
                .values
                .get(c)
                .ok_or_else(|| SystemError::ShapeMismatch(format!("assignment misses context {c}")))?;
            let i = a_alph.iter().position(|l| l == a);
            let j = b_alph.iter().position(|l| l == b);
            let (Some(i), Some(j)) = (i, j) else {
                return Err(SystemError::ShapeMismatch(format!("outcome ({a},{b}) not in alphabet at {c}")));
            };
            out.entries.push((c.clone(), JointPmf::deterministic(a_alph.to_vec(), b_alph.to_vec(), i, j)));
        }
        Ok(out)
    }
}

impl SupportSpec {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.shape_violations();
        for (c, support) in &self.entries {
            if support.is_empty() {
                out.push(Violation::EmptySupport(c.clone()));
            }
            if let Some((a, b)) = self.declared_alphabets(c) {
                for &(i, j) in support {
                    if i >= a.len() || j >= b.len() {
                        out.push(Violation::SupportOutOfRange { context: c.clone(), a: i, b: j });
                    }
                }
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<(), SystemError> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(SystemError::Invalid(v))
        }
    }

    /// Every context allows every outcome pair of its alphabets.
    pub fn full(shape: &Compound<impl Sized>) -> SupportSpec {
        let mut out = shape.map(|_, _| Support::new());
        for (c, s) in out.entries.iter_mut() {
            let na = shape.a_alphabets.get(&c.x).map_or(0, Vec::len);
            let nb = shape.b_alphabets.get(&c.y).map_or(0, Vec::len);
            *s = (0..na).flat_map(|i| (0..nb).map(move |j| (i, j))).collect();
        }
        out
    }
}

/// Numeric value attached to outcome labels for product expectations.
pub type Coding = BTreeMap<String, Rational>;

/// `"0" → 0`, `"1" → 1`.
pub fn zero_one_coding() -> Coding {
    [("0", 0), ("1", 1)].into_iter().map(|(k, v)| (k.to_string(), Rational::from_integer(v.into()))).collect()
}

/// `"1" → +1`, `"0" → −1`.
pub fn plus_minus_coding() -> Coding {
    [("0", -1), ("1", 1)].into_iter().map(|(k, v)| (k.to_string(), Rational::from_integer(v.into()))).collect()
}

/// One outcome pair per context, by outcome label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Assignment {
    pub values: BTreeMap<Context, (String, String)>,
}

impl Assignment {
    /// True iff the A value depends only on `x` and the B value only on `y`.
    pub fn is_ns(&self) -> bool {
        self.setting_functions().is_some()
    }

    /// Factors the assignment as `(f(x), g(y))` when possible.
    pub fn setting_functions(&self) -> Option<SettingFunctions> {
        let mut a: BTreeMap<Label, String> = BTreeMap::new();
        let mut b: BTreeMap<Label, String> = BTreeMap::new();
        for (c, (va, vb)) in &self.values {
            if a.entry(c.x.clone()).or_insert_with(|| va.clone()) != va {
                return None;
            }
            if b.entry(c.y.clone()).or_insert_with(|| vb.clone()) != vb {
                return None;
            }
        }
        Some(SettingFunctions { a, b })
    }
}

/// Free-function form of [`Assignment::is_ns`].
pub fn is_ns_assignment(assignment: &Assignment) -> bool {
    assignment.is_ns()
}

/// A pair of per-side functions `x ↦ f(x)`, `y ↦ g(y)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SettingFunctions {
    pub a: BTreeMap<Label, String>,
    pub b: BTreeMap<Label, String>,
}

impl SettingFunctions {
    /// Reads off `(f(x), g(y))` at every context of `shape`.
    pub fn to_assignment<T>(&self, shape: &Compound<T>) -> Option<Assignment> {
        let values = shape
            .contexts()
            .map(|c| Some((c.clone(), (self.a.get(&c.x)?.clone(), self.b.get(&c.y)?.clone()))))
            .collect::<Option<BTreeMap<_, _>>>()?;
        Some(Assignment { values })
    }
}

/// A support-respecting assignment together with its non-signaling flag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Realization {
    pub assignment: Assignment,
    pub ns: bool,
}

impl Realization {
    /// Wraps an assignment, checking it lies in the given supports.
    pub fn new(support: &SupportSpec, assignment: Assignment) -> Option<Realization> {
        for (c, s) in support.entries() {
            let (a, b) = assignment.values.get(c)?;
            let i = support.alphabet(Side::A, &c.x)?.iter().position(|l| l == a)?;
            let j = support.alphabet(Side::B, &c.y)?.iter().position(|l| l == b)?;
            if !s.contains(&(i, j)) {
                return None;
            }
        }
        let ns = assignment.is_ns();
        Some(Realization { assignment, ns })
    }
}

/// Counting mode for [`count_assignments`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMode {
    /// Full alphabet product per context.
    Alphabet,
    /// Support size per context.
    Support,
}

/// Number of assignments, kept in `base^exponent` form when every context
/// contributes the same factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentCount {
    pub total: BigUint,
    pub power: Option<(u64, u64)>,
}

impl fmt::Display for AssignmentCount {
    /// `4^4 = 256` for small totals, `6^1320` when the expansion is long.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.power {
            Some((base, exp)) => {
                let digits = self.total.to_string();
                if digits.len() <= 30 {
                    write!(f, "{base}^{exp} = {digits}")
                } else {
                    write!(f, "{base}^{exp}")
                }
            }
            None => write!(f, "{}", self.total),
        }
    }
}

pub fn count_assignments<T: ContextData>(compound: &Compound<T>, mode: CountMode) -> AssignmentCount {
    let factors: Vec<u64> = compound
        .entries()
        .iter()
        .map(|(c, data)| match mode {
            CountMode::Alphabet => {
                let na = compound.alphabet(Side::A, &c.x).map_or(0, <[String]>::len);
                let nb = compound.alphabet(Side::B, &c.y).map_or(0, <[String]>::len);
                (na * nb) as u64
            }
            CountMode::Support => data.support_size() as u64,
        })
        .collect();
    let total = factors.iter().fold(BigUint::one(), |acc, &k| acc * k);
    let power = match factors.first() {
        Some(&base) if factors.iter().all(|&k| k == base) => Some((base, factors.len() as u64)),
        _ => None,
    };
    AssignmentCount { total, power }
}

fn check_weights<'a>(weights: impl Iterator<Item = &'a Rational>) -> Result<(), SystemError> {
    let mut sum = Rational::zero();
    let mut negative = false;
    for w in weights {
        negative |= w.is_negative();
        sum += w;
    }
    if negative || !sum.is_one() {
        return Err(SystemError::BadWeights(sum));
    }
    Ok(())
}

/// Context-wise convex combination with context-independent weights.
pub fn mix(components: &[(&SystemSpec, Rational)]) -> Result<SystemSpec, SystemError> {
    let (first, _) = components.first().ok_or_else(|| SystemError::ShapeMismatch("empty mixture".into()))?;
    if let Some((s, _)) = components.iter().find(|(s, _)| !first.same_shape(*s)) {
        return Err(SystemError::ShapeMismatch(format!(
            "{} and {} differ in contexts or alphabets",
            first.name(),
            s.name()
        )));
    }
    let rule: BTreeMap<Context, Vec<(&SystemSpec, Rational)>> =
        first.contexts().map(|c| (c.clone(), components.to_vec())).collect();
    let mut out = mix_context_dependent(&rule)?;
    if components.len() == 1 {
        out.set_name(first.name());
    }
    Ok(out)
}

/// Each context's pmf is the combination prescribed for that context.
/// All referenced systems must share one shape, and the rule must cover
/// exactly the contexts of that shape.
pub fn mix_context_dependent(
    rule: &BTreeMap<Context, Vec<(&SystemSpec, Rational)>>,
) -> Result<SystemSpec, SystemError> {
    let shape = rule
        .values()
        .flat_map(|v| v.iter())
        .map(|(s, _)| *s)
        .next()
        .ok_or_else(|| SystemError::ShapeMismatch("empty mixture rule".into()))?;
    for (s, _) in rule.values().flat_map(|v| v.iter()) {
        if !shape.same_shape(*s) {
            return Err(SystemError::ShapeMismatch(format!(
                "{} and {} differ in contexts or alphabets",
                shape.name(),
                s.name()
            )));
        }
    }
    if rule.len() != shape.len() || !shape.contexts().all(|c| rule.contains_key(c)) {
        return Err(SystemError::ShapeMismatch("rule must cover every context exactly once".into()));
    }
    let mut names: Vec<&str> = Vec::new();
    for (s, _) in rule.values().flat_map(|v| v.iter()) {
        if !names.contains(&s.name()) {
            names.push(s.name());
        }
    }
    let mut out = shape.map(|_, pmf| JointPmf::zeros(pmf.a_alphabet.clone(), pmf.b_alphabet.clone()));
    out.set_name(format!("mix({})", names.join(",")));
    for (c, acc) in out.entries.iter_mut() {
        let parts = &rule[c];
        check_weights(parts.iter().map(|(_, w)| w))?;
        for (s, w) in parts {
            if w.is_zero() {
                continue;
            }
            let pmf = s.pmf(c)?;
            for (slot, p) in acc.probs.iter_mut().zip(pmf.probs()) {
                *slot += w * p;
            }
        }
    }
    Ok(out)
}

/// Converts a small integer ratio into a rational.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(num.into(), den.into())
}

/// Lossy decimal view, for display only.
pub fn approx(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits() -> Vec<String> {
        vec!["0".into(), "1".into()]
    }

    /// 2×2 scenario with binary outcomes, every context deterministic per `table`
    /// (rows (1,1),(1,2),(2,1),(2,2)).
    fn det_2x2(name: &str, table: [(usize, usize); 4]) -> SystemSpec {
        let mut s = SystemSpec::new(name);
        for l in ["1", "2"] {
            s.add_setting(Side::A, l, bits());
            s.add_setting(Side::B, l, bits());
        }
        let ctxs = [("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")];
        for ((x, y), (a, b)) in ctxs.into_iter().zip(table) {
            s.add_context(Context::new(x, y), JointPmf::deterministic(bits(), bits(), a, b));
        }
        s
    }

    fn d_eprb() -> SystemSpec {
        det_2x2("d_eprb", [(1, 0), (1, 1), (0, 0), (0, 1)])
    }

    fn d_prime() -> SystemSpec {
        det_2x2("d_prime_eprb", [(1, 0), (0, 1), (0, 1), (0, 1)])
    }

    fn single(pmf: JointPmf) -> SystemSpec {
        let mut s = SystemSpec::new("single");
        s.add_setting(Side::A, "1", pmf.a_alphabet.clone());
        s.add_setting(Side::B, "1", pmf.b_alphabet.clone());
        s.add_context(Context::new("1", "1"), pmf);
        s
    }

    #[test]
    fn labels_sort_numerically() {
        let mut v: Vec<Label> = ["10", "2", "b", "1", "a"].into_iter().map(Label::from).collect();
        v.sort();
        let got: Vec<&str> = v.iter().map(Label::as_str).collect();
        assert_eq!(got, ["1", "2", "10", "a", "b"]);
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("2/4"), Some(ratio(1, 2)));
        assert_eq!(parse_rational("-3"), Some(ratio(-3, 1)));
        assert_eq!(parse_rational(" 1 / 3 "), Some(ratio(1, 3)));
        assert_eq!(parse_rational("0.5"), None);
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("1e3"), None);
        assert_eq!(parse_rational(""), None);
    }

    #[test]
    fn validate_cases() {
        assert!(d_eprb().validate().is_empty());

        let bad = single(JointPmf::new(bits(), vec!["0".into()], vec![ratio(1, 2), ratio(1, 3)]));
        let v = bad.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].to_string(), "context (1,1): sum 5/6 ≠ 1");

        let empty = SystemSpec::new("empty");
        assert_eq!(empty.validate(), vec![Violation::NoContexts]);
        assert_eq!(Violation::NoContexts.to_string(), "no contexts");

        let mut dup = d_eprb();
        dup.add_context(Context::new("1", "1"), JointPmf::deterministic(bits(), bits(), 0, 0));
        assert!(dup.validate().contains(&Violation::DuplicateContext(Context::new("1", "1"))));

        let neg = single(JointPmf::new(bits(), vec!["0".into()], vec![ratio(3, 2), ratio(-1, 2)]));
        assert!(matches!(neg.validate()[0], Violation::NegativeProbability { .. }));

        let mut mismatch = SystemSpec::new("m");
        mismatch.add_setting(Side::A, "1", bits());
        mismatch.add_setting(Side::B, "1", vec!["u", "v"]);
        mismatch.add_context(Context::new("1", "1"), JointPmf::deterministic(bits(), bits(), 0, 0));
        assert_eq!(
            mismatch.validate(),
            vec![Violation::AlphabetMismatch { context: Context::new("1", "1"), side: Side::B }]
        );

        let mut unknown = SystemSpec::new("u");
        unknown.add_setting(Side::A, "1", bits());
        unknown.add_context(Context::new("1", "7"), JointPmf::deterministic(bits(), bits(), 0, 0));
        assert!(matches!(unknown.validate()[0], Violation::UnknownSetting { side: Side::B, .. }));
    }

    #[test]
    fn marginal_cases() {
        let s = d_eprb();
        let m = s.marginal(&Context::new("1", "1"), Side::B).unwrap();
        assert_eq!(m, vec![("0".to_string(), ratio(1, 1)), ("1".to_string(), ratio(0, 1))]);
        assert!(matches!(s.marginal(&Context::new("3", "1"), Side::A), Err(SystemError::UnknownContext(_))));
    }

    #[test]
    fn nonsignaling_cases() {
        assert!(d_eprb().check_nonsignaling().is_ok());
        let w = d_prime().check_nonsignaling().unwrap_err();
        assert_eq!(w.side, Side::A);
        assert_eq!(w.setting, Label::from("1"));
        assert_eq!(w.context1, Context::new("1", "1"));
        assert_eq!(w.context2, Context::new("1", "2"));
        assert_eq!(w.marginal1[1].1, ratio(1, 1));
        assert_eq!(w.marginal2[0].1, ratio(1, 1));

        let one = single(JointPmf::deterministic(bits(), bits(), 1, 0));
        assert!(one.check_nonsignaling().is_ok());
    }

    #[test]
    fn support_cases() {
        let det = d_eprb().support_of();
        assert!(det.entries().iter().all(|(_, s)| s.len() == 1));

        let uniform = single(JointPmf::new(bits(), bits(), vec![ratio(1, 4); 4]));
        assert_eq!(uniform.support_of().entries()[0].1.len(), 4);

        // value order (1,1) (1,0) (0,1) (0,0) with probabilities 1/2 1/2 0 0
        let mut pmf = JointPmf::zeros(bits(), bits());
        pmf.set(1, 1, ratio(1, 2));
        pmf.set(1, 0, ratio(1, 2));
        let s = single(pmf).support_of();
        let expected: Support = [(1, 1), (1, 0)].into_iter().collect();
        assert_eq!(s.entries()[0].1, expected);
    }

    fn assignment_of(s: &SystemSpec) -> Assignment {
        Assignment {
            values: s
                .entries()
                .iter()
                .map(|(c, pmf)| {
                    let (i, j, _) = pmf.cells().find(|(_, _, p)| p.is_one()).unwrap();
                    (c.clone(), (pmf.a_alphabet[i].clone(), pmf.b_alphabet[j].clone()))
                })
                .collect(),
        }
    }

    #[test]
    fn ns_assignment_cases() {
        assert!(is_ns_assignment(&assignment_of(&d_eprb())));
        assert!(!is_ns_assignment(&assignment_of(&d_prime())));
        let one = single(JointPmf::deterministic(bits(), bits(), 0, 1));
        assert!(is_ns_assignment(&assignment_of(&one)));
    }

    #[test]
    fn count_cases() {
        let c = count_assignments(&d_eprb(), CountMode::Alphabet);
        assert_eq!(c.total, BigUint::from(256u32));
        assert_eq!(c.power, Some((4, 4)));
        assert_eq!(c.to_string(), "4^4 = 256");
        let c = count_assignments(&d_eprb(), CountMode::Support);
        assert_eq!(c.total, BigUint::one());
    }

    #[test]
    fn mix_cases() {
        let s = d_eprb();
        let same = mix(&[(&s, ratio(1, 1))]).unwrap();
        assert_eq!(same, s);

        let d1 = det_2x2("d1", [(1, 1); 4]);
        let d2 = det_2x2("d2", [(0, 0); 4]);
        let m = mix(&[(&d1, ratio(1, 2)), (&d2, ratio(1, 2))]).unwrap();
        for (_, pmf) in m.entries() {
            assert_eq!(*pmf.prob(1, 1), ratio(1, 2));
            assert_eq!(*pmf.prob(0, 0), ratio(1, 2));
            assert!(pmf.prob(0, 1).is_zero() && pmf.prob(1, 0).is_zero());
        }

        assert!(matches!(mix(&[(&d1, ratio(1, 2)), (&d2, ratio(1, 3))]), Err(SystemError::BadWeights(_))));
        let other = single(JointPmf::deterministic(bits(), bits(), 0, 0));
        assert!(matches!(mix(&[(&d1, ratio(1, 2)), (&other, ratio(1, 2))]), Err(SystemError::ShapeMismatch(_))));
    }

    #[test]
    fn context_dependent_rule_can_signal() {
        let d1 = det_2x2("d1", [(1, 1); 4]);
        let d2 = det_2x2("d2", [(0, 0); 4]);
        let rule: BTreeMap<_, _> = d1
            .contexts()
            .map(|c| {
                let pick = if *c == Context::new("1", "1") { &d1 } else { &d2 };
                (c.clone(), vec![(pick, ratio(1, 1))])
            })
            .collect();
        let m = mix_context_dependent(&rule).unwrap();
        assert!(m.entries().iter().all(|(_, p)| p.support_size() == 1));
        let w = m.check_nonsignaling().unwrap_err();
        assert_eq!((w.side, w.setting.as_str()), (Side::A, "1"));
        assert_eq!(w.marginal1, vec![("0".into(), ratio(0, 1)), ("1".into(), ratio(1, 1))]);
        assert_eq!(w.marginal2, vec![("0".into(), ratio(1, 1)), ("1".into(), ratio(0, 1))]);
    }

    #[test]
    fn expectation_cases() {
        let d1 = det_2x2("d1", [(1, 1); 4]);
        let e = d1.expectation_product(&Context::new("1", "1"), &zero_one_coding()).unwrap();
        assert_eq!(e, ratio(1, 1));
        let partial: Coding = [("1".to_string(), ratio(1, 1))].into_iter().collect();
        assert!(matches!(d1.expectation_product(&Context::new("1", "1"), &partial), Err(SystemError::MissingCode(_))));
    }

    /// Brute force: does some (f, g) reproduce the assignment?
    fn factors_by_search(values: &BTreeMap<Context, (String, String)>) -> bool {
        let xs: BTreeSet<&Label> = values.keys().map(|c| &c.x).collect();
        let ys: BTreeSet<&Label> = values.keys().map(|c| &c.y).collect();
        let xs: Vec<_> = xs.into_iter().collect();
        let ys: Vec<_> = ys.into_iter().collect();
        let total = 1usize << (xs.len() + ys.len());
        (0..total).any(|code| {
            let f = |x: &Label| {
                let k = xs.iter().position(|v| *v == x).unwrap();
                ((code >> k) & 1).to_string()
            };
            let g = |y: &Label| {
                let k = ys.iter().position(|v| *v == y).unwrap();
                ((code >> (xs.len() + k)) & 1).to_string()
            };
            values.iter().all(|(c, (a, b))| f(&c.x) == *a && g(&c.y) == *b)
        })
    }

    fn product_pmf(pa: &[u32], pb: &[u32]) -> JointPmf {
        let sa: u32 = pa.iter().sum();
        let sb: u32 = pb.iter().sum();
        let labels = |n: usize| (0..n).map(|i| i.to_string()).collect::<Vec<_>>();
        let probs = pa.iter().flat_map(|&a| pb.iter().map(move |&b| ratio((a * b) as i64, (sa * sb) as i64))).collect();
        JointPmf::new(labels(pa.len()), labels(pb.len()), probs)
    }

    proptest! {
        #[test]
        fn ns_flag_matches_brute_force(nx in 1usize..4, ny in 1usize..4, bits_seed in any::<u64>()) {
            let mut values = BTreeMap::new();
            let mut k = 0;
            for x in 0..nx {
                for y in 0..ny {
                    let a = ((bits_seed >> (2 * k)) & 1).to_string();
                    let b = ((bits_seed >> (2 * k + 1)) & 1).to_string();
                    values.insert(Context::new(x.to_string(), y.to_string()), (a, b));
                    k += 1;
                }
            }
            let assignment = Assignment { values };
            prop_assert_eq!(assignment.is_ns(), factors_by_search(&assignment.values));
        }

        #[test]
        fn product_marginal_recovers_factor(
            pa in proptest::collection::vec(1u32..6, 1..4),
            pb in proptest::collection::vec(1u32..6, 1..4),
        ) {
            let pmf = product_pmf(&pa, &pb);
            let sa: u32 = pa.iter().sum();
            let s = single(pmf);
            let m = s.marginal(&Context::new("1", "1"), Side::A).unwrap();
            let total = m.iter().fold(Rational::zero(), |acc, (_, p)| acc + p);
            prop_assert!(total.is_one());
            for ((_, p), &w) in m.iter().zip(&pa) {
                prop_assert_eq!(p.clone(), ratio(w as i64, sa as i64));
            }
        }

        #[test]
        fn support_count_bounded_by_alphabet(weights in proptest::collection::vec(0u32..3, 9)) {
            prop_assume!(weights.iter().any(|&w| w > 0));
            let total: u32 = weights.iter().sum();
            let labels: Vec<String> = (0..3).map(|i| i.to_string()).collect();
            let probs = weights.iter().map(|&w| ratio(w as i64, total as i64)).collect();
            let s = single(JointPmf::new(labels.clone(), labels, probs));
            let by_support = count_assignments(&s, CountMode::Support).total;
            let by_alphabet = count_assignments(&s, CountMode::Alphabet).total;
            prop_assert!(by_support <= by_alphabet);
            prop_assert_eq!(by_support == by_alphabet, weights.iter().all(|&w| w > 0));
        }
    }
}
