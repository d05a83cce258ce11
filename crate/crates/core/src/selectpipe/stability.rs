//! Agreement between repeated feature selections.

use serde::Serialize;

use crate::error::{Error, Result};

fn sorted_unique(s: &[usize]) -> Vec<usize> {
    let mut v = s.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Consistency index of two selections of equal size `k` out of `m`
/// features: `(r − k²/m) / (k − k²/m)` with `r = |A ∩ B|`.
pub fn kuncheva_pair(a: &[usize], b: &[usize], m: usize) -> Result<f64> {
    let (a, b) = (sorted_unique(a), sorted_unique(b));
    if a.len() != b.len() {
        return Err(Error::UndefinedStability(format!(
            "consistency index needs equal sizes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let k = a.len();
    if k == 0 || k >= m {
        return Err(Error::UndefinedStability(format!("consistency index undefined for k = {k}, m = {m}")));
    }
    if a.iter().chain(&b).any(|&p| p >= m) {
        return Err(Error::InvalidInput(format!("feature index out of range for m = {m}")));
    }
    let (k, m) = (k as f64, m as f64);
    let r = intersection_size(&a, &b) as f64;
    let chance = k * k / m;
    Ok((r - chance) / (k - chance))
}

/// Average pairwise consistency index over all pairs of `sets`.
pub fn kuncheva_index(sets: &[Vec<usize>], m: usize) -> Result<f64> {
    if sets.len() < 2 {
        return Err(Error::InvalidInput("stability needs at least two selections".into()));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            total += kuncheva_pair(&sets[i], &sets[j], m)?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Pearson correlation of the indicator vectors of `a` and `b` over `m`
/// features, `(m·r − k_a·k_b) / √(k_a(m − k_a)·k_b(m − k_b))`. It equals
/// [`kuncheva_pair`] when the sizes agree and is undefined when either set is
/// empty or complete.
pub fn phi_pair(a: &[usize], b: &[usize], m: usize) -> Option<f64> {
    let (a, b) = (sorted_unique(a), sorted_unique(b));
    let (ka, kb) = (a.len(), b.len());
    if ka == 0 || kb == 0 || ka >= m || kb >= m {
        return None;
    }
    let r = intersection_size(&a, &b) as f64;
    let (ka, kb, m) = (ka as f64, kb as f64, m as f64);
    Some(((m * r - ka * kb) / (ka * (m - ka) * kb * (m - kb)).sqrt()).clamp(-1.0, 1.0))
}

/// `|A ∩ B| / |A ∪ B|`, taken as 0 when both are empty.
pub fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let (a, b) = (sorted_unique(a), sorted_unique(b));
    let inter = intersection_size(&a, &b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Stability of selections made on different folds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stability {
    /// Average pairwise Jaccard index.
    pub jaccard: f64,
    /// Average consistency index, when every selection has the same size
    /// strictly between 0 and `m`.
    pub kuncheva: Option<f64>,
    /// Average pairwise [`phi_pair`], with undefined pairs counted as 0
    /// (chance agreement).
    pub consistency: f64,
    /// Every selection was empty; `jaccard` is then reported as 0.
    pub all_empty: bool,
}

pub fn stability_across_folds(sets: &[Vec<usize>], m: usize) -> Result<Stability> {
    if sets.len() < 2 {
        return Err(Error::InvalidInput("stability needs at least two selections".into()));
    }
    let (mut jac, mut phi) = (0.0, 0.0);
    let mut pairs = 0usize;
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            jac += jaccard(&sets[i], &sets[j]);
            phi += phi_pair(&sets[i], &sets[j], m).unwrap_or(0.0);
            pairs += 1;
        }
    }
    Ok(Stability {
        jaccard: jac / pairs as f64,
        consistency: phi / pairs as f64,
        kuncheva: kuncheva_index(sets, m).ok(),
        all_empty: sets.iter().all(Vec::is_empty),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn consistency_examples() {
        assert_eq!(kuncheva_pair(&[1, 4, 2], &[2, 1, 4], 10).unwrap(), 1.0);
        assert!((kuncheva_pair(&[0, 1], &[1, 2], 8).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(kuncheva_pair(&[0, 1, 2], &[3, 4, 5], 6).unwrap(), -1.0);
        assert!(kuncheva_pair(&[], &[], 5).is_err());
        assert!(kuncheva_pair(&[0, 1], &[0, 1], 2).is_err());
        assert!(kuncheva_pair(&[0], &[0, 1], 5).is_err());
    }

    #[test]
    fn jaccard_examples() {
        assert_eq!(jaccard(&[1, 2], &[1, 2]), 1.0);
        assert_eq!(jaccard(&[1], &[2]), 0.0);
        assert!((jaccard(&[1, 2], &[2, 3]) - 1.0 / 3.0).abs() < 1e-15);
        let s = stability_across_folds(&[vec![], vec![]], 4).unwrap();
        assert!(s.all_empty && s.jaccard == 0.0 && s.kuncheva.is_none());
        let s = stability_across_folds(&[vec![0, 1], vec![1, 2]], 8).unwrap();
        assert!((s.kuncheva.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(stability_across_folds(&[vec![0]], 4).is_err());
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_pair(&[0, 1], &[], 4), None);
        assert_eq!(phi_pair(&[0, 1, 2, 3], &[0], 4), None);
        // r = 1, k_a = 1, k_b = 2, m = 4: (4 − 2)/√(1·3·2·2)
        let v = phi_pair(&[0], &[0, 1], 4).unwrap();
        assert!((v - 2.0 / 12f64.sqrt()).abs() < 1e-15);
        let s = stability_across_folds(&[vec![0, 1], vec![0, 1], vec![]], 5).unwrap();
        assert!((s.consistency - 1.0 / 3.0).abs() < 1e-15);
    }

    fn subset(m: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::btree_set(0..m, 0..m).prop_map(|s| s.into_iter().collect())
    }

    proptest! {
        #[test]
        fn jaccard_symmetric_and_bounded(a in subset(20), b in subset(20)) {
            let j = jaccard(&a, &b);
            prop_assert_eq!(j, jaccard(&b, &a));
            prop_assert!((0.0..=1.0).contains(&j));
        }

        #[test]
        fn consistency_symmetric_and_bounded(k in 1usize..15, seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let m = 16;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (0..m).collect();
            all.shuffle(&mut rng);
            let a = all[..k].to_vec();
            all.shuffle(&mut rng);
            let b = all[..k].to_vec();
            let v = kuncheva_pair(&a, &b, m).unwrap();
            prop_assert_eq!(v, kuncheva_pair(&b, &a, m).unwrap());
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
            let mut rev = a.clone();
            rev.reverse();
            prop_assert_eq!(kuncheva_pair(&rev, &b, m).unwrap(), v);
            prop_assert!((phi_pair(&a, &b, m).unwrap() - v).abs() < 1e-12);
        }

        #[test]
        fn phi_symmetric_and_bounded(a in subset(20), b in subset(20)) {
            let v = phi_pair(&a, &b, 20);
            prop_assert_eq!(v, phi_pair(&b, &a, 20));
            if let Some(v) = v {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }
}
