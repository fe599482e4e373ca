//! Peres' Kochen-Specker geometry over ℤ[√2] and the compound system built
//! from it.
//!
//! Alice's settings are the 40 triads, with outcomes `011`, `101`, `110`
//! (exactly one zero, digits in ascending ray order inside the triad). Bob's
//! settings are the 33 Peres rays with outcomes `0`/`1`. When Bob's ray is in
//! Alice's triad, Bob's outcome equals Alice's digit for that ray.

mod ray;
mod search;
mod zr2;

use std::collections::BTreeMap;

pub use ray::{
    collinear, complete_triads, cross, dot, orthogonal, orthogonal_triads, peres_rays, triad_degrees, Ray, Triad,
};
pub use search::{count_colorings, ks_search, Coloring, ColoringRule, KsOutcome, SearchStats};
pub use zr2::Zr2;

use crate::system::{Label, SettingFunctions, Side, Support, SupportSpec};

/// Alice's outcome labels; character `k` is the value of the triad's `k`-th ray.
pub const TRIAD_PATTERNS: [&str; 3] = ["011", "101", "110"];

fn digit(pattern: &str, k: usize) -> u8 {
    pattern.as_bytes()[k] - b'0'
}

/// Possibilistic system with one A-setting per triad (labels `1..`) and one
/// B-setting per ray of `bob_rays` (labels `1..`), both in the given order.
pub fn ksp_support(name: &str, triads: &[Triad], bob_rays: &[Ray]) -> SupportSpec {
    let mut s = SupportSpec::new(name);
    for x in 1..=triads.len() {
        s.add_setting(Side::A, x.to_string(), TRIAD_PATTERNS);
    }
    for y in 1..=bob_rays.len() {
        s.add_setting(Side::B, y.to_string(), ["0", "1"]);
    }
    for (xi, t) in triads.iter().enumerate() {
        for (yi, r) in bob_rays.iter().enumerate() {
            let support: Support = match t.position(r) {
                Some(k) => TRIAD_PATTERNS.iter().enumerate().map(|(a, p)| (a, digit(p, k) as usize)).collect(),
                None => (0..3).flat_map(|a| (0..2).map(move |b| (a, b))).collect(),
            };
            s.add_context(crate::system::Context::new((xi + 1).to_string(), (yi + 1).to_string()), support);
        }
    }
    s
}

/// The 40 × 33 Kochen-Specker-Peres support system.
pub fn build_ksp_support() -> SupportSpec {
    let rays = peres_rays();
    let triads = orthogonal_triads(&rays);
    ksp_support("ksp_support", &triads, &rays)
}

/// Setting functions induced by a coloring: each triad reads its pattern,
/// each Bob ray reads its value. `None` if some triad has no valid pattern.
pub fn coloring_to_functions(coloring: &Coloring, triads: &[Triad], bob_rays: &[Ray]) -> Option<SettingFunctions> {
    let mut a = BTreeMap::new();
    for (xi, t) in triads.iter().enumerate() {
        let digits: String =
            t.rays().iter().map(|r| coloring.values.get(r).map(|v| char::from(b'0' + v))).collect::<Option<_>>()?;
        if !TRIAD_PATTERNS.contains(&digits.as_str()) {
            return None;
        }
        a.insert(Label::new((xi + 1).to_string()), digits);
    }
    let mut b = BTreeMap::new();
    for (yi, r) in bob_rays.iter().enumerate() {
        let v = coloring.values.get(r)?;
        b.insert(Label::new((yi + 1).to_string()), v.to_string());
    }
    Some(SettingFunctions { a, b })
}

/// Coloring read off Alice's patterns. `None` if two triads disagree on a
/// shared ray or Bob's value differs from the triad digit.
pub fn functions_to_coloring(functions: &SettingFunctions, triads: &[Triad], bob_rays: &[Ray]) -> Option<Coloring> {
    let mut values: BTreeMap<Ray, u8> = BTreeMap::new();
    for (xi, t) in triads.iter().enumerate() {
        let pattern = functions.a.get(&Label::new((xi + 1).to_string()))?;
        for (k, r) in t.rays().iter().enumerate() {
            let v = digit(pattern, k);
            if *values.entry(r.clone()).or_insert(v) != v {
                return None;
            }
        }
    }
    for (yi, r) in bob_rays.iter().enumerate() {
        let v: u8 = functions.b.get(&Label::new((yi + 1).to_string()))?.parse().ok()?;
        if *values.entry(r.clone()).or_insert(v) != v {
            return None;
        }
    }
    Some(Coloring { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contextuality::{enumerate_ns_realizations, DEFAULT_LIMIT};
    use crate::system::{count_assignments, Context, CountMode};
    use num_bigint::BigUint;

    #[test]
    fn ksp_support_shape() {
        let s = build_ksp_support();
        assert_eq!(s.len(), 1320);
        assert!(s.validate().is_empty());
        let rays = peres_rays();
        let triads = orthogonal_triads(&rays);
        let (xi, t) = triads.iter().enumerate().find(|(_, t)| t.contains(&rays[0])).unwrap();
        let ctx = Context::new((xi + 1).to_string(), "1");
        assert_eq!(s.get(&ctx).unwrap().len(), 3);
        let k = t.position(&rays[0]).unwrap();
        for &(a, b) in s.get(&ctx).unwrap() {
            assert_eq!(b as u8, digit(TRIAD_PATTERNS[a], k));
        }
        let c = count_assignments(&s, CountMode::Alphabet);
        assert_eq!(c.power, Some((6, 1320)));
        assert_eq!(c.total, BigUint::from(6u32).pow(1320));
        assert_eq!(c.to_string(), "6^1320");
    }

    #[test]
    fn ksp_has_no_ns_realizations() {
        let set = enumerate_ns_realizations(&build_ksp_support(), DEFAULT_LIMIT).unwrap();
        assert!(set.is_empty());
    }

    /// Two coordinate frames sharing the z axis: colorable, so the NS
    /// realizations and colorings must correspond one to one.
    #[test]
    fn realizations_match_colorings_on_small_frame() {
        let r = |v: [(i64, i64); 3]| Ray::from_ints(v).unwrap();
        let z = r([(0, 0), (0, 0), (1, 0)]);
        let t1 = Triad::new(r([(1, 0), (0, 0), (0, 0)]), r([(0, 0), (1, 0), (0, 0)]), z.clone()).unwrap();
        let t2 = Triad::new(r([(1, 0), (1, 0), (0, 0)]), r([(1, 0), (-1, 0), (0, 0)]), z).unwrap();
        let triads = vec![t1, t2];
        let mut bob: Vec<Ray> = triads.iter().flat_map(|t| t.rays().iter().cloned()).collect();
        bob.sort();
        bob.dedup();
        let support = ksp_support("frames", &triads, &bob);
        let set = enumerate_ns_realizations(&support, DEFAULT_LIMIT).unwrap();
        let (n, _) = count_colorings(&bob, &triads, ColoringRule::ExactlyOneZero);
        assert_eq!(set.len() as u64, n);
        assert_eq!(n, 5); // z = 0 forces the rest to 1, or z = 1 and 2 × 2 choices
        for real in &set.realizations {
            let f = real.assignment.setting_functions().unwrap();
            let coloring = functions_to_coloring(&f, &triads, &bob).unwrap();
            assert!(coloring.satisfies(&triads, ColoringRule::ExactlyOneZero));
            assert_eq!(coloring_to_functions(&coloring, &triads, &bob).unwrap(), f);
        }
        let KsOutcome::Colorable(c, _) = ks_search(&bob, &triads, ColoringRule::ExactlyOneZero) else {
            panic!("frames are colorable");
        };
        let f = coloring_to_functions(&c, &triads, &bob).unwrap();
        let a = f.to_assignment(&support).unwrap();
        assert!(crate::system::Realization::new(&support, a).is_some_and(|r| r.ns));
    }
}
