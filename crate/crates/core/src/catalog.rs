//! Built-in systems. Tables live in `data/*.json` in the system file format
//! and are embedded at compile time.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::format::{parse_system, LoadedSystem};
use crate::ks::build_ksp_support;
use crate::system::{mix_context_dependent, ratio, Context, JointPmf, Rational, SystemSpec};

/// Stable public ids, in listing order.
pub const IDS: [&str; 9] =
    ["d_eprb", "d_prime_eprb", "d1", "d2", "d3", "d4", "conspiracy", "eprb_shape", "ksp_support"];

const D_EPRB: &str = include_str!("../data/d_eprb.json");
const D_PRIME_EPRB: &str = include_str!("../data/d_prime_eprb.json");
const D1: &str = include_str!("../data/d1.json");
const D2: &str = include_str!("../data/d2.json");
const D3: &str = include_str!("../data/d3.json");
const D4: &str = include_str!("../data/d4.json");
const EPRB_SHAPE: &str = include_str!("../data/eprb_shape.json");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedSystem {
    pub id: &'static str,
    pub system: LoadedSystem,
    pub provenance: &'static str,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CatalogError {
    #[error("unknown builtin {0:?}; known: {known}", known = IDS.join(", "))]
    UnknownId(String),
    #[error("q = {0} is outside [0, 1]")]
    WeightOutOfRange(Rational),
    #[error("p1 = {0} is outside [0, 1]")]
    ComponentOutOfRange(Rational),
    #[error("p2 = {p2} is outside [0, 1]")]
    Infeasible { p2: Rational },
    #[error("q = 1 requires p1 = p")]
    DegenerateWeight,
}

fn embedded(json: &str) -> LoadedSystem {
    parse_system(json).expect("embedded catalog data is valid")
}

fn probabilistic(json: &str) -> SystemSpec {
    match embedded(json) {
        LoadedSystem::Probabilistic(s) => s,
        LoadedSystem::Possibilistic(_) => unreachable!("embedded table has pmfs"),
    }
}

pub fn ids() -> &'static [&'static str] {
    &IDS
}

pub fn get(id: &str) -> Result<NamedSystem, CatalogError> {
    let (id, system, provenance) = match id {
        "d_eprb" => ("d_eprb", embedded(D_EPRB), "deterministic EPRB system, non-signaling table"),
        "d_prime_eprb" => ("d_prime_eprb", embedded(D_PRIME_EPRB), "deterministic EPRB system, signaling table"),
        "d1" => ("d1", embedded(D1), "conspiracy ingredient D1: every outcome 1"),
        "d2" => ("d2", embedded(D2), "conspiracy ingredient D2: every outcome 0"),
        "d3" => ("d3", embedded(D3), "conspiracy ingredient D3: A = x - 1, B = y - 1"),
        "d4" => ("d4", embedded(D4), "conspiracy ingredient D4: A = 2 - x, B = 0"),
        "conspiracy" => (
            "conspiracy",
            LoadedSystem::Probabilistic(conspiracy_system()),
            "setting-dependent mixture of D1..D4 yielding a PR box",
        ),
        "eprb_shape" => ("eprb_shape", embedded(EPRB_SHAPE), "2 x 2 binary EPRB scenario, full support"),
        "ksp_support" => (
            "ksp_support",
            LoadedSystem::Possibilistic(build_ksp_support()),
            "Peres triads against Peres rays, outcome-matching support",
        ),
        other => return Err(CatalogError::UnknownId(other.to_string())),
    };
    Ok(NamedSystem { id, system, provenance })
}

/// D1..D4 in order.
pub fn conspiracy_ingredients() -> [SystemSpec; 4] {
    [D1, D2, D3, D4].map(probabilistic)
}

/// D1/D2 with equal weight when `y = 1`, D3/D4 with equal weight when `y = 2`.
pub fn conspiracy_system() -> SystemSpec {
    let [d1, d2, d3, d4] = conspiracy_ingredients();
    let half = ratio(1, 2);
    let rule: BTreeMap<Context, Vec<(&SystemSpec, Rational)>> = d1
        .contexts()
        .map(|c| {
            let pair = if c.y.as_str() == "1" { [&d1, &d2] } else { [&d3, &d4] };
            (c.clone(), pair.iter().map(|s| (*s, half.clone())).collect())
        })
        .collect();
    let mut s = mix_context_dependent(&rule).expect("ingredients share a shape");
    s.set_name("conspiracy");
    s
}

/// A pair `(X, Y)` taking `(1,1)` with probability `p` and `(1,0)` otherwise,
/// written as `q·x_pmf + (1 − q)·y_pmf`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairMixture {
    pub x_pmf: JointPmf,
    pub y_pmf: JointPmf,
    pub q: Rational,
}

fn pair_pmf(p: &Rational) -> JointPmf {
    // a alphabet {1}, b alphabet {0, 1}
    JointPmf::new(vec!["1".into()], vec!["0".into(), "1".into()], vec![Rational::one() - p, p.clone()])
}

fn in_unit(r: &Rational) -> bool {
    !(r < &Rational::zero() || r > &Rational::one())
}

impl PairMixture {
    /// Probability of `(1,1)` under the first and second components.
    pub fn p1(&self) -> &Rational {
        self.x_pmf.prob(0, 1)
    }

    pub fn p2(&self) -> &Rational {
        self.y_pmf.prob(0, 1)
    }

    /// `q·p₁ + (1 − q)·p₂`.
    pub fn mixed(&self) -> JointPmf {
        let q = &self.q;
        let probs =
            self.x_pmf.probs().iter().zip(self.y_pmf.probs()).map(|(a, b)| q * a + (Rational::one() - q) * b).collect();
        JointPmf::new(self.x_pmf.a_alphabet.clone(), self.x_pmf.b_alphabet.clone(), probs)
    }

    pub fn is_deterministic(&self) -> bool {
        [self.p1(), self.p2()].iter().all(|p| p.is_zero() || p.is_one())
    }
}

/// Solves `q·p₁ + (1 − q)·p₂ = p` for `p₂`. With `q = 1` the second
/// component carries no weight, so `p₁ = p` is required and `p₂` is set to `p`.
pub fn pair_as_mixture(p: &Rational, q: &Rational, p1: &Rational) -> Result<PairMixture, CatalogError> {
    if !in_unit(q) {
        return Err(CatalogError::WeightOutOfRange(q.clone()));
    }
    if !in_unit(p1) {
        return Err(CatalogError::ComponentOutOfRange(p1.clone()));
    }
    let p2 = if q.is_one() {
        if p1 != p {
            return Err(CatalogError::DegenerateWeight);
        }
        p.clone()
    } else {
        (p - q * p1) / (Rational::one() - q)
    };
    if !in_unit(&p2) {
        return Err(CatalogError::Infeasible { p2 });
    }
    Ok(PairMixture { x_pmf: pair_pmf(p1), y_pmf: pair_pmf(&p2), q: q.clone() })
}
