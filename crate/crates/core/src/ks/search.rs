use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ray::{Ray, Triad};

/// Which value must appear exactly once in every triad.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ColoringRule {
    ExactlyOneZero,
    ExactlyOneOne,
}

impl ColoringRule {
    fn marked(self) -> u8 {
        match self {
            ColoringRule::ExactlyOneZero => 0,
            ColoringRule::ExactlyOneOne => 1,
        }
    }

    pub fn complement(self) -> ColoringRule {
        match self {
            ColoringRule::ExactlyOneZero => ColoringRule::ExactlyOneOne,
            ColoringRule::ExactlyOneOne => ColoringRule::ExactlyOneZero,
        }
    }
}

/// 0/1 value per ray.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Coloring {
    pub values: BTreeMap<Ray, u8>,
}

impl Coloring {
    pub fn satisfies(&self, triads: &[Triad], rule: ColoringRule) -> bool {
        triads.iter().all(|t| {
            let marked = t.rays().iter().filter(|r| self.values.get(*r) == Some(&rule.marked())).count();
            marked == 1 && t.rays().iter().all(|r| self.values.contains_key(r))
        })
    }

    /// `v ↦ 1 − v`, which swaps the two rules.
    pub fn complement(&self) -> Coloring {
        Coloring { values: self.values.iter().map(|(r, v)| (r.clone(), 1 - v)).collect() }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes: u64,
    pub backtracks: u64,
    pub propagations: u64,
}

impl fmt::Display for SearchStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "nodes={} backtracks={} propagations={}", self.nodes, self.backtracks, self.propagations)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KsOutcome {
    Colorable(Coloring, SearchStats),
    Infeasible(SearchStats),
}

impl KsOutcome {
    pub fn is_colorable(&self) -> bool {
        matches!(self, KsOutcome::Colorable(..))
    }

    pub fn stats(&self) -> SearchStats {
        match self {
            KsOutcome::Colorable(_, s) | KsOutcome::Infeasible(s) => *s,
        }
    }
}

/// Complete backtracking search for a coloring in which every triad holds
/// the rule's marked value exactly once.
///
/// Variables are the given rays together with every ray of the triads.
/// After each decision, triads are propagated to a fixpoint (a triad with its
/// marked value forces the rest unmarked; a triad with two unmarked rays
/// forces the third). Branching picks the ray touching the most partially
/// decided triads, then the one in most triads. Single-threaded, so the
/// statistics are reproducible.
pub fn ks_search(rays: &[Ray], triads: &[Triad], rule: ColoringRule) -> KsOutcome {
    let mut s = Solver::new(rays, triads, rule, false);
    s.descend();
    match s.first.take() {
        Some(values) => KsOutcome::Colorable(s.coloring(&values), s.stats),
        None => KsOutcome::Infeasible(s.stats),
    }
}

/// Number of colorings satisfying the rule, by exhausting the search tree.
pub fn count_colorings(rays: &[Ray], triads: &[Triad], rule: ColoringRule) -> (u64, SearchStats) {
    let mut s = Solver::new(rays, triads, rule, true);
    s.descend();
    (s.count, s.stats)
}

const UNSET: u8 = u8::MAX;

struct Solver {
    vars: Vec<Ray>,
    triads: Vec<[usize; 3]>,
    member: Vec<Vec<usize>>,
    marked: u8,
    values: Vec<u8>,
    trail: Vec<usize>,
    count_all: bool,
    count: u64,
    first: Option<Vec<u8>>,
    stats: SearchStats,
}

impl Solver {
    fn new(rays: &[Ray], triads: &[Triad], rule: ColoringRule, count_all: bool) -> Solver {
        let all: BTreeSet<&Ray> = rays.iter().chain(triads.iter().flat_map(|t| t.rays().iter())).collect();
        let vars: Vec<Ray> = all.into_iter().cloned().collect();
        let index: BTreeMap<&Ray, usize> = vars.iter().enumerate().map(|(i, r)| (r, i)).collect();
        let triads: Vec<[usize; 3]> = triads.iter().map(|t| t.rays().each_ref().map(|r| index[r])).collect();
        let mut member = vec![Vec::new(); vars.len()];
        for (k, t) in triads.iter().enumerate() {
            for &v in t {
                member[v].push(k);
            }
        }
        let n = vars.len();
        Solver {
            vars,
            triads,
            member,
            marked: rule.marked(),
            values: vec![UNSET; n],
            trail: Vec::new(),
            count_all,
            count: 0,
            first: None,
            stats: SearchStats::default(),
        }
    }

    fn coloring(&self, values: &[u8]) -> Coloring {
        Coloring { values: self.vars.iter().cloned().zip(values.iter().copied()).collect() }
    }

    fn assign(&mut self, var: usize, value: u8) {
        self.values[var] = value;
        self.trail.push(var);
    }

    fn undo_to(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().expect("trail above mark");
            self.values[v] = UNSET;
        }
    }

    /// Unit propagation from `start`; false on a violated triad.
    fn propagate(&mut self, start: usize) -> bool {
        let mut queue = vec![start];
        while let Some(v) = queue.pop() {
            for k in 0..self.member[v].len() {
                let t = self.triads[self.member[v][k]];
                let marked = t.iter().filter(|&&r| self.values[r] == self.marked).count();
                let open: Vec<usize> = t.iter().copied().filter(|&r| self.values[r] == UNSET).collect();
                match (marked, open.len()) {
                    (m, _) if m > 1 => return false,
                    (0, 0) => return false,
                    (1, _) => {
                        for r in open {
                            self.assign(r, 1 - self.marked);
                            self.stats.propagations += 1;
                            queue.push(r);
                        }
                    }
                    (0, 1) => {
                        self.assign(open[0], self.marked);
                        self.stats.propagations += 1;
                        queue.push(open[0]);
                    }
                    _ => {}
                }
            }
        }
        true
    }

    fn pick(&self) -> Option<usize> {
        (0..self.vars.len()).filter(|&v| self.values[v] == UNSET).max_by_key(|&v| {
            let touched =
                self.member[v].iter().filter(|&&k| self.triads[k].iter().any(|&r| self.values[r] != UNSET)).count();
            (touched, self.member[v].len(), std::cmp::Reverse(v))
        })
    }

    /// Returns true when the search should stop.
    fn descend(&mut self) -> bool {
        self.stats.nodes += 1;
        let Some(var) = self.pick() else {
            self.count += 1;
            if self.first.is_none() {
                self.first = Some(self.values.clone());
            }
            return !self.count_all;
        };
        for value in [self.marked, 1 - self.marked] {
            let mark = self.trail.len();
            self.assign(var, value);
            if self.propagate(var) {
                if self.descend() {
                    return true;
                }
            } else {
                self.stats.backtracks += 1;
            }
            self.undo_to(mark);
        }
        false
    }
}
