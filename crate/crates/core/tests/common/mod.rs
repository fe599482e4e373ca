//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use fwt_core::system::{mix, Compound, SettingFunctions};
use fwt_core::{ratio, Context, JointPmf, Label, Rational, Side, SystemSpec};
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as TestRng;

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

pub fn bits() -> Vec<String> {
    vec!["0".into(), "1".into()]
}

/// Rational in `[0, 1]` with denominator at most `max_den`.
pub fn unit_rational(rng: &mut impl Rng, max_den: i64) -> Rational {
    let d = rng.gen_range(1..=max_den);
    ratio(rng.gen_range(0..=d), d)
}

/// `k` positive weights summing to one.
pub fn weights(rng: &mut impl Rng, k: usize) -> Vec<Rational> {
    let raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=12)).collect();
    let total: i64 = raw.iter().sum();
    raw.into_iter().map(|w| ratio(w, total)).collect()
}

/// Up to `max_settings` settings per side, alphabets of 2..=`max_alphabet`
/// outcomes, and a random nonempty set of contexts.
pub fn shape(rng: &mut impl Rng, max_settings: usize, max_alphabet: usize) -> Compound<()> {
    let mut s = Compound::new("shape");
    let na = rng.gen_range(1..=max_settings);
    let nb = rng.gen_range(1..=max_settings);
    for (side, n) in [(Side::A, na), (Side::B, nb)] {
        for l in 1..=n {
            let k = rng.gen_range(2..=max_alphabet);
            s.add_setting(side, l.to_string(), (0..k).map(|o| o.to_string()));
        }
    }
    let mut grid: Vec<(usize, usize)> = (1..=na).flat_map(|x| (1..=nb).map(move |y| (x, y))).collect();
    grid.shuffle(rng);
    let keep = rng.gen_range(1..=grid.len());
    for (x, y) in grid.into_iter().take(keep) {
        s.add_context(Context::new(x.to_string(), y.to_string()), ());
    }
    s
}

/// Uniformly random setting functions over a shape's alphabets.
pub fn functions<T>(rng: &mut impl Rng, shape: &Compound<T>) -> SettingFunctions {
    let pick = |rng: &mut dyn rand::RngCore, side: Side| -> BTreeMap<Label, String> {
        shape.alphabets(side).iter().map(|(l, alph)| (l.clone(), alph[rng.gen_range(0..alph.len())].clone())).collect()
    };
    let a = pick(rng, Side::A);
    let b = pick(rng, Side::B);
    SettingFunctions { a, b }
}

pub fn deterministic<T>(shape: &Compound<T>, f: &SettingFunctions) -> SystemSpec {
    let assignment = f.to_assignment(shape).expect("functions cover the shape");
    SystemSpec::from_assignment(shape, &assignment).expect("assignment fits the shape")
}

/// Context-independent mixture of 1..=`max_parts` random non-signaling
/// deterministic systems on a random shape.
pub fn ns_mixture(rng: &mut impl Rng, max_settings: usize, max_alphabet: usize, max_parts: usize) -> SystemSpec {
    let sh = shape(rng, max_settings, max_alphabet);
    let k = rng.gen_range(1..=max_parts);
    let parts: Vec<SystemSpec> = (0..k).map(|_| deterministic(&sh, &functions(rng, &sh))).collect();
    let w = weights(rng, k);
    let pairs: Vec<(&SystemSpec, Rational)> = parts.iter().zip(w).collect();
    mix(&pairs).expect("same shape")
}

pub fn shape_2x2() -> Compound<()> {
    let mut s = Compound::new("2x2");
    for l in ["1", "2"] {
        s.add_setting(Side::A, l, bits());
        s.add_setting(Side::B, l, bits());
    }
    for x in ["1", "2"] {
        for y in ["1", "2"] {
            s.add_context(Context::new(x, y), ());
        }
    }
    s
}

/// Random non-signaling binary 2×2 system: random marginals `P(A_x = 1)`,
/// `P(B_y = 1)` and a random feasible `P(1,1)` per context.
pub fn ns_2x2(rng: &mut impl Rng, max_den: i64) -> SystemSpec {
    let pa = [unit_rational(rng, max_den), unit_rational(rng, max_den)];
    let pb = [unit_rational(rng, max_den), unit_rational(rng, max_den)];
    let one = Rational::one();
    let mut s = shape_2x2().map(|c, _| {
        let a = &pa[c.x.as_str().parse::<usize>().unwrap() - 1];
        let b = &pb[c.y.as_str().parse::<usize>().unwrap() - 1];
        let lo = (a + b - &one).max(Rational::zero());
        let hi = a.clone().min(b.clone());
        let t = unit_rational(rng, max_den);
        let p11 = &lo + (&hi - &lo) * t;
        let p10 = a - &p11;
        let p01 = b - &p11;
        let p00 = &one - &p11 - &p10 - &p01;
        JointPmf::new(bits(), bits(), vec![p00, p01, p10, p11])
    });
    s.set_name("random_ns_2x2");
    s
}

/// Random nonnegative mixture of the PR box and white noise, which covers
/// the contextual region more densely than [`ns_2x2`].
pub fn pr_noise(rng: &mut impl Rng, max_den: i64) -> SystemSpec {
    let v = unit_rational(rng, max_den);
    let quarter = ratio(1, 4);
    let half = ratio(1, 2);
    let mut s = shape_2x2().map(|c, _| {
        let anti = c.x.as_str() == "2" && c.y.as_str() == "2";
        let same = &v * &half + (Rational::one() - &v) * &quarter;
        let diff = (Rational::one() - &v) * &quarter;
        let (eq, ne) = if anti { (diff, same) } else { (same, diff) };
        JointPmf::new(bits(), bits(), vec![eq.clone(), ne.clone(), ne, eq])
    });
    s.set_name("pr_noise");
    s
}

/// Random small integer matrix and right-hand side.
pub fn int_problem(rng: &mut impl Rng, max_rows: usize, max_cols: usize) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let m = rng.gen_range(1..=max_rows);
    let n = rng.gen_range(1..=max_cols);
    let rows = (0..m).map(|_| (0..n).map(|_| Rational::from_integer(rng.gen_range(-3..=3).into())).collect()).collect();
    let rhs = (0..m).map(|_| Rational::from_integer(rng.gen_range(-4..=4).into())).collect();
    (rows, rhs)
}
