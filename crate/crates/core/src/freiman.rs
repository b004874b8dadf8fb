//! Freiman homomorphisms and isomorphisms of order 2 on finite subsets of
//! `Z`, a search for minimal-diameter isomorphic images, and the norm
//! invariance of convolutions under such remappings.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::C64;

/// Sorted, distinct integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet {
    elements: Vec<i64>,
}

impl IndexSet {
    pub fn new(mut elements: Vec<i64>) -> Result<Self> {
        elements.sort_unstable();
        if elements.windows(2).any(|w| w[0] == w[1]) {
            return invalid("index set elements must be distinct");
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[i64] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains_zero(&self) -> bool {
        self.elements.binary_search(&0).is_ok()
    }

    pub fn contains(&self, a: i64) -> bool {
        self.elements.binary_search(&a).is_ok()
    }

    pub fn diameter(&self) -> i64 {
        match (self.elements.first(), self.elements.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }

    /// `|A + A|`.
    pub fn sumset_size(&self) -> usize {
        sumset_size(&self.elements)
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.elements.clone();
        v.extend_from_slice(&other.elements);
        v.sort_unstable();
        v.dedup();
        IndexSet { elements: v }
    }
}

fn sumset_size(a: &[i64]) -> usize {
    let mut sums: Vec<i64> = Vec::with_capacity(a.len() * (a.len() + 1) / 2);
    for i in 0..a.len() {
        for j in i..a.len() {
            sums.push(a[i] + a[j]);
        }
    }
    sums.sort_unstable();
    sums.dedup();
    sums.len()
}

/// A map given by paired source and image lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreimanMap {
    pub source: Vec<i64>,
    pub image: Vec<i64>,
}

impl FreimanMap {
    pub fn new(source: Vec<i64>, image: Vec<i64>) -> Result<Self> {
        if source.len() != image.len() {
            return Err(Error::DimensionMismatch {
                expected: source.len(),
                got: image.len(),
            });
        }
        let mut s = source.clone();
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return invalid("map source has repeated points");
        }
        Ok(Self { source, image })
    }

    pub fn identity(a: &IndexSet) -> Self {
        Self {
            source: a.elements.clone(),
            image: a.elements.clone(),
        }
    }

    /// `a ↦ p a + q`.
    pub fn affine(a: &IndexSet, p: i64, q: i64) -> Self {
        Self {
            source: a.elements.clone(),
            image: a.elements.iter().map(|v| p * v + q).collect(),
        }
    }

    pub fn get(&self, a: i64) -> Option<i64> {
        self.source.iter().position(|s| *s == a).map(|i| self.image[i])
    }

    /// `self` followed by `b ↦ p b + q`.
    pub fn then_affine(&self, p: i64, q: i64) -> Self {
        Self {
            source: self.source.clone(),
            image: self.image.iter().map(|v| p * v + q).collect(),
        }
    }

    fn images_on(&self, a: &IndexSet) -> Result<Vec<i64>> {
        a.elements
            .iter()
            .map(|&v| {
                self.get(v)
                    .ok_or_else(|| Error::InvalidArgument(format!("map is undefined at {v}")))
            })
            .collect()
    }
}

/// Coincidence pattern check over all pairs of pairs. `forward` asks
/// `a1 + a2 = a1' + a2' ⇒ φ(a1) + φ(a2) = φ(a1') + φ(a2')`; `backward` asks
/// the converse.
fn pattern_agrees(src: &[i64], img: &[i64], forward: bool, backward: bool) -> bool {
    let m = src.len();
    let pairs: Vec<(i64, i64)> = (0..m)
        .flat_map(|i| (i..m).map(move |j| (i, j)))
        .map(|(i, j)| (src[i] + src[j], img[i] + img[j]))
        .collect();
    for p in 0..pairs.len() {
        for q in p + 1..pairs.len() {
            let s = pairs[p].0 == pairs[q].0;
            let t = pairs[p].1 == pairs[q].1;
            if (forward && s && !t) || (backward && t && !s) {
                return false;
            }
        }
    }
    true
}

pub fn is_freiman_homomorphism(a: &IndexSet, phi: &FreimanMap) -> Result<bool> {
    let img = phi.images_on(a)?;
    Ok(pattern_agrees(&a.elements, &img, true, false))
}

pub fn is_freiman_isomorphism(a: &IndexSet, phi: &FreimanMap) -> Result<bool> {
    let img = phi.images_on(a)?;
    Ok(pattern_agrees(&a.elements, &img, true, true))
}

/// `d!² (3/2)^{d-1} 2^{m-2} + (3^{d-1} - 1)/2`.
pub fn grynkiewicz_bound(m: usize, d: usize) -> f64 {
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    let d = d as f64;
    let m = m as f64;
    fact * fact * 1.5f64.powf(d - 1.0) * 2f64.powf(m - 2.0) + (3f64.powf(d - 1.0) - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemapResult {
    pub map: FreimanMap,
    pub diameter: i64,
    pub verified_isomorphism: bool,
    pub search_exhaustive: bool,
    /// Candidate image sets enumerated.
    pub candidates: u64,
}

impl RemapResult {
    pub fn image_set(&self) -> IndexSet {
        IndexSet::new(self.map.image.clone()).expect("isomorphic images are injective")
    }
}

fn binomial_u64(n: i64, k: i64) -> u64 {
    if k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
        if r > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    r as u64
}

/// Backtracking search for a bijection `A → B` that is a Freiman
/// isomorphism; `A` is tried in increasing order and `B` candidates in
/// increasing order, so order-preserving maps come first.
fn find_bijection(a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
    let m = a.len();
    let mut img = vec![0i64; m];
    let mut used = vec![false; m];
    fn consistent(a: &[i64], img: &[i64], k: usize) -> bool {
        // every quadruple involving index k and earlier indices
        for i in 0..=k {
            let s = a[k] + a[i];
            let t = img[k] + img[i];
            for p in 0..=k {
                for q in p..=k {
                    if (p, q) == (i.min(k), i.max(k)) {
                        continue;
                    }
                    let s2 = a[p] + a[q];
                    let t2 = img[p] + img[q];
                    if (s == s2) != (t == t2) {
                        return false;
                    }
                }
            }
        }
        true
    }
    fn go(a: &[i64], b: &[i64], img: &mut [i64], used: &mut [bool], k: usize) -> bool {
        if k == a.len() {
            return true;
        }
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            img[k] = b[j];
            if consistent(a, img, k) {
                used[j] = true;
                if go(a, b, img, used, k + 1) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    if go(a, b, &mut img, &mut used, 0) {
        Some(img)
    } else {
        None
    }
}

/// Inner elements of normalized candidate images `{0 < ... < d}` whose
/// second element is `second`.
fn candidates_with_second(m: usize, d: i64, second: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let inner = m - 3;
    // choose `inner` values from (second, d)
    let pool: Vec<i64> = (second + 1..d).collect();
    let mut idx: Vec<usize> = (0..inner).collect();
    if inner > pool.len() {
        return out;
    }
    loop {
        let mut set = vec![0, second];
        set.extend(idx.iter().map(|&i| pool[i]));
        set.push(d);
        out.push(set);
        let mut i = inner;
        while i > 0 && idx[i - 1] == i - 1 + pool.len() - inner {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..inner {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Smallest-diameter Freiman-isomorphic image of `A`. Diameters are scanned
/// upward from `|A| - 1`; candidate images are normalized to start at 0 and,
/// by reflection, to satisfy `b_1 <= d - b_{m-2}`; `|B + B| = |A + A|` is
/// checked before the bijection search. When the next diameter would push
/// the number of enumerated candidates past `budget`, the translate of `A`
/// itself is returned with `search_exhaustive = false`.
pub fn min_diameter_isomorphic_image(a: &IndexSet, budget: u64) -> Result<RemapResult> {
    let m = a.len();
    if m == 0 {
        return invalid("index set is empty");
    }
    let min = a.elements[0];
    let shifted: Vec<i64> = a.elements.iter().map(|v| v - min).collect();
    let fallback = |candidates: u64, exhaustive: bool| RemapResult {
        map: FreimanMap {
            source: a.elements.clone(),
            image: shifted.clone(),
        },
        diameter: a.diameter(),
        verified_isomorphism: true,
        search_exhaustive: exhaustive,
        candidates,
    };
    if m <= 2 {
        let image: Vec<i64> = (0..m as i64).collect();
        return Ok(RemapResult {
            map: FreimanMap {
                source: a.elements.clone(),
                image,
            },
            diameter: m as i64 - 1,
            verified_isomorphism: true,
            search_exhaustive: true,
            candidates: 1,
        });
    }
    let target = a.sumset_size();
    let mut used: u64 = 0;
    for d in (m as i64 - 1)..a.diameter() {
        let count = binomial_u64(d - 1, m as i64 - 2);
        if used.saturating_add(count) > budget {
            return Ok(fallback(used, false));
        }
        used += count;
        let found = (1..d).collect::<Vec<i64>>().into_par_iter().find_map_first(|second| {
            candidates_with_second(m, d, second).into_iter().find_map(|b| {
                if m >= 3 && b[1] > d - b[m - 2] {
                    return None;
                }
                if sumset_size(&b) != target {
                    return None;
                }
                find_bijection(&a.elements, &b)
            })
        });
        if let Some(image) = found {
            let map = FreimanMap {
                source: a.elements.clone(),
                image,
            };
            let verified = is_freiman_isomorphism(a, &map)?;
            return Ok(RemapResult {
                map,
                diameter: d,
                verified_isomorphism: verified,
                search_exhaustive: true,
                candidates: used,
            });
        }
    }
    Ok(fallback(used, true))
}

/// A finitely supported vector on `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntSignal {
    pub support: Vec<i64>,
    pub values: Vec<C64>,
}

impl IntSignal {
    pub fn new(support: Vec<i64>, values: Vec<C64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                got: values.len(),
            });
        }
        IndexSet::new(support.clone())?;
        Ok(Self { support, values })
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn support_set(&self) -> IndexSet {
        IndexSet::new(self.support.clone()).expect("validated on construction")
    }

    fn remapped(&self, phi: &FreimanMap) -> Result<Self> {
        let support = self
            .support
            .iter()
            .map(|&v| {
                phi.get(v)
                    .ok_or_else(|| Error::InvalidArgument(format!("map is undefined at {v}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            support,
            values: self.values.clone(),
        })
    }
}

/// `‖x * y‖` for the convolution on `Z`.
pub fn convolution_norm(x: &IntSignal, y: &IntSignal) -> f64 {
    let mut acc: HashMap<i64, C64> = HashMap::new();
    for (i, a) in x.support.iter().zip(&x.values) {
        for (j, b) in y.support.iter().zip(&y.values) {
            *acc.entry(i + j).or_default() += a * b;
        }
    }
    let mut keys: Vec<i64> = acc.keys().copied().collect();
    keys.sort_unstable();
    keys.iter().map(|k| acc[k].norm_sqr()).sum::<f64>().sqrt()
}

/// `|‖x * y‖ - ‖x̃ * ỹ‖|` where `x̃, ỹ` carry the values of `x, y` on the
/// remapped supports. The map must be defined on `supp x ∪ supp y`.
pub fn remapped_convolution_norm_check(x: &IntSignal, y: &IntSignal, phi: &FreimanMap) -> Result<f64> {
    let xt = x.remapped(phi)?;
    let yt = y.remapped(phi)?;
    Ok((convolution_norm(x, y) - convolution_norm(&xt, &yt)).abs())
}

/// As [`remapped_convolution_norm_check`], requiring a verified isomorphism
/// on `supp x ∪ supp y`.
pub fn remapped_convolution_norm_check_verified(x: &IntSignal, y: &IntSignal, result: &RemapResult) -> Result<f64> {
    let a = x.support_set().union(&y.support_set());
    if !result.verified_isomorphism || !is_freiman_isomorphism(&a, &result.map)? {
        return invalid("remap is not a verified isomorphism on the joint support");
    }
    remapped_convolution_norm_check(x, y, &result.map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, seeded};
    use proptest::prelude::*;

    fn set(v: &[i64]) -> IndexSet {
        IndexSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn index_set_basics() {
        let a = set(&[10, 0, 1]);
        assert_eq!(a.elements(), &[0, 1, 10]);
        assert!(a.contains_zero());
        assert_eq!(a.diameter(), 10);
        assert_eq!(a.sumset_size(), 6);
        assert!(IndexSet::new(vec![1, 1]).is_err());
    }

    #[test]
    fn collapsing_map_is_homomorphism_only() {
        let a = set(&[0, 1, 10]);
        let phi = FreimanMap::new(vec![0, 1, 10], vec![0, 1, 2]).unwrap();
        assert!(is_freiman_homomorphism(&a, &phi).unwrap());
        assert!(!is_freiman_isomorphism(&a, &phi).unwrap());
        let good = FreimanMap::new(vec![0, 1, 10], vec![0, 1, 3]).unwrap();
        assert!(is_freiman_isomorphism(&a, &good).unwrap());
        assert!(is_freiman_isomorphism(&a, &FreimanMap::identity(&a)).unwrap());
        assert!(is_freiman_isomorphism(&a, &FreimanMap::affine(&a, -3, 7)).unwrap());
        let partial = FreimanMap::new(vec![0, 1], vec![0, 1]).unwrap();
        assert!(is_freiman_homomorphism(&a, &partial).is_err());
    }

    #[test]
    fn bound_values() {
        assert_eq!(grynkiewicz_bound(3, 1), 2.0);
        assert_eq!(grynkiewicz_bound(4, 2), 25.0);
        for d in 1..5 {
            for m in 2..10 {
                assert!(grynkiewicz_bound(m + 1, d) > grynkiewicz_bound(m, d));
            }
        }
    }

    #[test]
    fn compresses_sidon_triple() {
        let r = min_diameter_isomorphic_image(&set(&[0, 1, 10]), 1 << 20).unwrap();
        assert_eq!(r.diameter, 3);
        assert_eq!(r.map.image, vec![0, 1, 3]);
        assert!(r.verified_isomorphism && r.search_exhaustive);
        let r = min_diameter_isomorphic_image(&set(&[0, 1, 2]), 1 << 20).unwrap();
        assert_eq!(r.diameter, 2);
        assert_eq!(r.map.image, vec![0, 1, 2]);
    }

    #[test]
    fn exhaustive_oracle_agrees_on_small_sets() {
        // brute force over all images inside [0, diam] and all bijections
        fn oracle(a: &IndexSet) -> i64 {
            let m = a.len();
            let d_max = a.diameter();
            for d in (m as i64 - 1)..=d_max {
                let pool: Vec<usize> = (0..=d as usize).collect();
                for b in crate::rnmp::combinations(&pool, m) {
                    let b: Vec<i64> = b.iter().map(|&v| v as i64).collect();
                    if b[0] != 0 || *b.last().unwrap() != d {
                        continue;
                    }
                    let mut perm: Vec<usize> = (0..m).collect();
                    loop {
                        let img: Vec<i64> = perm.iter().map(|&i| b[i]).collect();
                        let phi = FreimanMap::new(a.elements().to_vec(), img).unwrap();
                        if is_freiman_isomorphism(a, &phi).unwrap() {
                            return d;
                        }
                        // next permutation
                        let Some(i) = (0..m - 1).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
                        let j = (i + 1..m).rev().find(|&j| perm[j] > perm[i]).unwrap();
                        perm.swap(i, j);
                        perm[i + 1..].reverse();
                    }
                }
            }
            d_max
        }
        for a in [vec![0, 1, 10], vec![0, 2, 3, 9], vec![-4, 0, 5, 6], vec![0, 1, 5, 12, 13]] {
            let a = set(&a);
            let r = min_diameter_isomorphic_image(&a, u64::MAX).unwrap();
            assert_eq!(r.diameter, oracle(&a), "{:?}", a);
            assert!(r.diameter <= a.diameter());
        }
    }

    #[test]
    fn tiny_budget_falls_back_to_translate() {
        let a = set(&[0, 1, 5, 12, 13]);
        let r = min_diameter_isomorphic_image(&a, 0).unwrap();
        assert!(!r.search_exhaustive);
        assert_eq!(r.diameter, 13);
        assert!(is_freiman_isomorphism(&a, &r.map).unwrap());
    }

    #[test]
    fn norm_invariance_and_counterexample() {
        let x = IntSignal::new(vec![0, 1], vec![C64::new(1.0, 0.0); 2]).unwrap();
        let y = IntSignal::new(vec![1, 10], vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]).unwrap();
        let a = x.support_set().union(&y.support_set());
        let r = min_diameter_isomorphic_image(&a, 1 << 20).unwrap();
        assert!(remapped_convolution_norm_check_verified(&x, &y, &r).unwrap() <= 1e-12);
        let bad = FreimanMap::new(vec![0, 1, 10], vec![0, 1, 2]).unwrap();
        assert!((convolution_norm(&x, &y) - 2.0).abs() < 1e-15);
        let res = remapped_convolution_norm_check(&x, &y, &bad).unwrap();
        assert!((res - (2.0 - 2f64.sqrt())).abs() < 1e-12);
        let forged = RemapResult {
            map: bad,
            diameter: 2,
            verified_isomorphism: true,
            search_exhaustive: false,
            candidates: 0,
        };
        assert!(remapped_convolution_norm_check_verified(&x, &y, &forged).is_err());
    }

    proptest! {
        #[test]
        fn isomorphism_is_affine_invariant(
            raw in proptest::collection::btree_set(-15i64..15, 2..6),
            p in prop_oneof![-3i64..=-1, 1i64..=3],
            q in -20i64..20,
        ) {
            let a = IndexSet::new(raw.into_iter().collect()).unwrap();
            let r = min_diameter_isomorphic_image(&a, 1 << 22).unwrap();
            prop_assert!(r.diameter <= a.diameter());
            prop_assert!(r.verified_isomorphism);
            prop_assert!(is_freiman_isomorphism(&a, &r.map.then_affine(p, q)).unwrap());
            let collapse = FreimanMap::new(a.elements().to_vec(), vec![0; a.len()]).unwrap();
            prop_assert!(is_freiman_homomorphism(&a, &collapse).unwrap());
            prop_assert_eq!(
                is_freiman_isomorphism(&a, &collapse).unwrap(),
                false
            );
        }

        #[test]
        fn verified_remaps_preserve_norms(
            i in proptest::collection::btree_set(-10i64..10, 1..4),
            j in proptest::collection::btree_set(-10i64..10, 1..4),
            seed in 0u64..1000,
        ) {
            let mut rng = seeded(seed);
            let i: Vec<i64> = i.into_iter().collect();
            let j: Vec<i64> = j.into_iter().collect();
            let x = IntSignal::new(i.clone(), i.iter().map(|_| complex_gaussian(&mut rng, 1.0)).collect()).unwrap();
            let y = IntSignal::new(j.clone(), j.iter().map(|_| complex_gaussian(&mut rng, 1.0)).collect()).unwrap();
            let a = x.support_set().union(&y.support_set());
            let r = min_diameter_isomorphic_image(&a, 1 << 22).unwrap();
            let res = remapped_convolution_norm_check_verified(&x, &y, &r).unwrap();
            prop_assert!(res <= 1e-10 * x.norm() * y.norm());
        }
    }
}
