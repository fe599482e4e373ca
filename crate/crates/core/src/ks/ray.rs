use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::zr2::{Qr2, Zr2};

/// A direction in ℤ[√2]³, stored in canonical form so that two rays are
/// equal exactly when they are collinear.
///
/// Canonical form: divide by the first nonzero coordinate (in ℚ(√2)), clear
/// denominators, remove the integer content, then divide by √2 if every
/// coordinate allows it. The first nonzero coordinate ends up positive.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ray {
    coords: [Zr2; 3],
}

impl Ray {
    /// `None` for the zero vector.
    pub fn new(coords: [Zr2; 3]) -> Option<Ray> {
        canonical(&coords).map(|coords| Ray { coords })
    }

    pub fn from_ints(v: [(i64, i64); 3]) -> Option<Ray> {
        Ray::new(v.map(|(a, b)| Zr2::new(a, b)))
    }

    pub fn coords(&self) -> &[Zr2; 3] {
        &self.coords
    }

    pub fn scaled(&self, k: &Zr2) -> Option<Ray> {
        Ray::new(self.coords.clone().map(|c| &c * k))
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x, y, z] = &self.coords;
        write!(f, "({x}, {y}, {z})")
    }
}

fn canonical(v: &[Zr2; 3]) -> Option<[Zr2; 3]> {
    let lead = v.iter().find(|c| !c.is_zero())?;
    let inv = Qr2::from_ring(lead).recip()?;
    let w: Vec<Qr2> = v.iter().map(|c| Qr2::from_ring(c).mul(&inv)).collect();

    let lcm = w.iter().flat_map(|q| [q.a.denom(), q.b.denom()]).fold(BigInt::one(), |acc, d| acc.lcm(d));
    let mut ints: Vec<Zr2> =
        w.iter().map(|q| Zr2::new((&q.a * &lcm).to_integer(), (&q.b * &lcm).to_integer())).collect();

    let content = ints.iter().flat_map(|z| [&z.a, &z.b]).fold(BigInt::zero(), |acc, k| acc.gcd(k));
    if !content.is_one() {
        ints = ints.into_iter().map(|z| Zr2::new(&z.a / &content, &z.b / &content)).collect();
    }
    if let Some(halved) = ints.iter().map(Zr2::div_sqrt2).collect::<Option<Vec<_>>>() {
        ints = halved;
    }
    debug_assert!(ints.iter().find(|c| !c.is_zero()).is_some_and(|c| c.signum().is_gt()));
    Some([ints[0].clone(), ints[1].clone(), ints[2].clone()])
}

/// Exact inner product in ℤ[√2].
pub fn dot(u: &Ray, v: &Ray) -> Zr2 {
    dot_coords(u.coords(), v.coords())
}

fn dot_coords(u: &[Zr2; 3], v: &[Zr2; 3]) -> Zr2 {
    u.iter().zip(v).fold(Zr2::default(), |acc, (a, b)| &acc + &(a * b))
}

/// The ray orthogonal to two non-collinear rays.
pub fn cross(u: &Ray, v: &Ray) -> Option<Ray> {
    let [a1, a2, a3] = u.coords();
    let [b1, b2, b3] = v.coords();
    Ray::new([&(a2 * b3) - &(a3 * b2), &(a3 * b1) - &(a1 * b3), &(a1 * b2) - &(a2 * b1)])
}

pub fn orthogonal(u: &Ray, v: &Ray) -> bool {
    dot(u, v).is_zero()
}

/// Three mutually orthogonal rays, in ascending ray order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triad {
    rays: [Ray; 3],
}

impl Triad {
    /// `None` unless the three rays are pairwise orthogonal.
    pub fn new(r1: Ray, r2: Ray, r3: Ray) -> Option<Triad> {
        if !(orthogonal(&r1, &r2) && orthogonal(&r1, &r3) && orthogonal(&r2, &r3)) {
            return None;
        }
        let mut rays = [r1, r2, r3];
        rays.sort();
        Some(Triad { rays })
    }

    pub fn rays(&self) -> &[Ray; 3] {
        &self.rays
    }

    pub fn position(&self, ray: &Ray) -> Option<usize> {
        self.rays.iter().position(|r| r == ray)
    }

    pub fn contains(&self, ray: &Ray) -> bool {
        self.position(ray).is_some()
    }
}

impl fmt::Display for Triad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.rays;
        write!(f, "{a} {b} {c}")
    }
}

/// The 33 rays of Peres' Kochen-Specker set: the canonical orbits of
/// `(0,0,1)`, `(0,1,1)`, `(0,1,√2)` and `(1,1,√2)` under coordinate
/// permutations and sign changes, sorted.
pub fn peres_rays() -> Vec<Ray> {
    let families: [[(i64, i64); 3]; 4] =
        [[(0, 0), (0, 0), (1, 0)], [(0, 0), (1, 0), (1, 0)], [(0, 0), (1, 0), (0, 1)], [(1, 0), (1, 0), (0, 1)]];
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut out = BTreeSet::new();
    for base in families {
        let base = base.map(|(a, b)| Zr2::new(a, b));
        for perm in PERMS {
            for signs in 0..8u8 {
                let v: [Zr2; 3] = std::array::from_fn(|k| {
                    let c = base[perm[k]].clone();
                    if signs >> k & 1 == 1 {
                        -c
                    } else {
                        c
                    }
                });
                out.insert(Ray::new(v).expect("nonzero"));
            }
        }
    }
    assert_eq!(out.len(), 33, "Peres orbit families must give 33 rays");
    out.into_iter().collect()
}

/// Every triple of the given rays that is mutually orthogonal.
pub fn complete_triads(rays: &[Ray]) -> Vec<Triad> {
    let mut out = Vec::new();
    for i in 0..rays.len() {
        for j in i + 1..rays.len() {
            if !orthogonal(&rays[i], &rays[j]) {
                continue;
            }
            for k in j + 1..rays.len() {
                if orthogonal(&rays[i], &rays[k]) && orthogonal(&rays[j], &rays[k]) {
                    out.extend(Triad::new(rays[i].clone(), rays[j].clone(), rays[k].clone()));
                }
            }
        }
    }
    out.sort();
    out
}

/// The orthogonal triads used for the Kochen-Specker argument: every
/// complete triad of `rays`, plus every orthogonal pair of `rays` that lies
/// in no complete triad, completed by the ray orthogonal to both (which is
/// then not itself one of `rays`).
///
/// On the 33 Peres rays this gives 16 complete triads and 24 completed
/// pairs, 40 in all.
pub fn orthogonal_triads(rays: &[Ray]) -> Vec<Triad> {
    let mut out = complete_triads(rays);
    let covered: BTreeSet<(&Ray, &Ray)> = out
        .iter()
        .flat_map(|t| {
            let [a, b, c] = t.rays();
            [(a, b), (a, c), (b, c)]
        })
        .collect();
    let mut extra = Vec::new();
    for i in 0..rays.len() {
        for j in i + 1..rays.len() {
            let (u, v) = if rays[i] < rays[j] { (&rays[i], &rays[j]) } else { (&rays[j], &rays[i]) };
            if orthogonal(u, v) && !covered.contains(&(u, v)) {
                let w = cross(u, v).expect("orthogonal rays are not collinear");
                extra.extend(Triad::new(u.clone(), v.clone(), w));
            }
        }
    }
    out.extend(extra);
    out.sort();
    out.dedup();
    out
}

/// Number of triads each ray belongs to.
pub fn triad_degrees(triads: &[Triad]) -> BTreeMap<&Ray, usize> {
    let mut deg = BTreeMap::new();
    for t in triads {
        for r in t.rays() {
            *deg.entry(r).or_insert(0) += 1;
        }
    }
    deg
}

/// Whether two vectors are collinear, by vanishing of the cross product.
pub fn collinear(u: &[Zr2; 3], v: &[Zr2; 3]) -> bool {
    let [a1, a2, a3] = u;
    let [b1, b2, b3] = v;
    (&(a2 * b3) - &(a3 * b2)).is_zero() && (&(a3 * b1) - &(a1 * b3)).is_zero() && (&(a1 * b2) - &(a2 * b1)).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ray(v: [(i64, i64); 3]) -> Ray {
        Ray::from_ints(v).unwrap()
    }

    #[test]
    fn dot_examples() {
        assert!(dot(&ray([(1, 0), (0, 0), (0, 0)]), &ray([(0, 0), (1, 0), (0, 1)])).is_zero());
        assert!(dot(&ray([(0, 0), (1, 0), (1, 0)]), &ray([(0, 0), (1, 0), (-1, 0)])).is_zero());
        let v = [(1, 0), (1, 0), (0, 1)].map(|(a, b)| Zr2::new(a, b));
        assert_eq!(dot_coords(&v, &v), Zr2::int(4));
    }

    #[test]
    fn sqrt2_multiples_collapse() {
        let a = ray([(0, 1), (0, 1), (0, 0)]);
        let b = ray([(1, 0), (1, 0), (0, 0)]);
        assert_eq!(a, b);
        assert_eq!(ray([(0, 1), (1, 0), (0, 0)]).coords()[0], Zr2::sqrt2());
        assert_eq!(Ray::from_ints([(0, 0); 3]), None);
    }

    #[test]
    fn peres_set_shape() {
        let rays = peres_rays();
        assert_eq!(rays.len(), 33);
        for i in 0..rays.len() {
            for j in i + 1..rays.len() {
                assert!(!collinear(rays[i].coords(), rays[j].coords()), "{} ~ {}", rays[i], rays[j]);
            }
        }
        assert!(rays.contains(&ray([(1, 0), (1, 0), (0, 0)])));
        assert!(!rays.contains(&ray([(1, 0), (1, 0), (1, 0)])));
        assert!(!rays.contains(&ray([(0, 1), (0, 1), (1, 0)])));
    }

    #[test]
    fn peres_triads() {
        let rays = peres_rays();
        let complete = complete_triads(&rays);
        assert_eq!(complete.len(), 16);
        let triads = orthogonal_triads(&rays);
        assert_eq!(triads.len(), 40);
        let coordinate =
            Triad::new(ray([(1, 0), (0, 0), (0, 0)]), ray([(0, 0), (1, 0), (0, 0)]), ray([(0, 0), (0, 0), (1, 0)]))
                .unwrap();
        assert!(triads.contains(&coordinate));
        for t in &triads {
            let [a, b, c] = t.rays();
            assert!(orthogonal(a, b) && orthogonal(a, c) && orthogonal(b, c));
        }
        let deg = triad_degrees(&triads);
        assert!(rays.iter().all(|r| deg.get(r).copied().unwrap_or(0) >= 1));
        // the 24 completing rays are new and each used once
        let outside: Vec<_> = deg.keys().filter(|r| !rays.contains(r)).collect();
        assert_eq!(outside.len(), 24);
        assert!(outside.iter().all(|r| deg[*r] == 1));
    }

    fn coords() -> impl Strategy<Value = [Zr2; 3]> {
        proptest::array::uniform3((-4i64..5, -4i64..5).prop_map(|(a, b)| Zr2::new(a, b)))
    }

    proptest! {
        #[test]
        fn canonical_is_idempotent_and_scale_free(v in coords(), which in 0usize..4) {
            let Some(r) = Ray::new(v.clone()) else { return Ok(()); };
            prop_assert_eq!(Ray::new(r.coords().clone()).unwrap(), r.clone());
            let lambda = [Zr2::int(-1), Zr2::sqrt2(), Zr2::int(2), Zr2::new(1, 1)][which].clone();
            prop_assert_eq!(r.scaled(&lambda).unwrap(), r.clone());
            prop_assert!(collinear(&v, r.coords()));
            let lead = r.coords().iter().find(|c| !c.is_zero()).unwrap();
            prop_assert!(lead.signum().is_gt());
        }

        #[test]
        fn dot_is_symmetric_bilinear(u in coords(), v in coords(), w in coords(), k in (-3i64..4, -3i64..4)) {
            let k = Zr2::new(k.0, k.1);
            prop_assert_eq!(dot_coords(&u, &v), dot_coords(&v, &u));
            let sum: [Zr2; 3] = std::array::from_fn(|i| &u[i] + &w[i]);
            prop_assert_eq!(dot_coords(&sum, &v), &dot_coords(&u, &v) + &dot_coords(&w, &v));
            let scaled: [Zr2; 3] = std::array::from_fn(|i| &u[i] * &k);
            prop_assert_eq!(dot_coords(&scaled, &v), &k * &dot_coords(&u, &v));
        }
    }
}
