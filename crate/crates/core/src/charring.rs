//! Formal characters: Kostant partition function, Verma characters, Weyl
//! characters, Euler characteristics and truncated comparison.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rootdata::{RootDatum, RootVec, Weight};
use crate::weyl::BruhatPoset;

/// Finitely supported (or depth-truncated) map weight -> multiplicity.
/// Multiplicities are signed so Euler characteristics fit the same type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormalCharacter {
    pub label: crate::rootdata::TypeLabel,
    pub top: Weight,
    /// Weights mu with ht(top - mu) <= depth are trusted.
    pub depth: i64,
    pub mult: BTreeMap<Weight, i64>,
}

impl FormalCharacter {
    pub fn new(rd: &RootDatum, top: Weight, depth: i64) -> Self {
        FormalCharacter {
            label: rd.label,
            top,
            depth,
            mult: BTreeMap::new(),
        }
    }

    pub fn add_mult(&mut self, mu: Weight, m: i64) {
        if m == 0 {
            return;
        }
        let entry = self.mult.entry(mu).or_insert(0);
        *entry += m;
        if *entry == 0 {
            self.mult.remove_entry_zero();
        }
    }

    pub fn mult_at(&self, mu: &Weight) -> i64 {
        self.mult.get(mu).copied().unwrap_or(0)
    }

    pub fn total_dimension(&self) -> i64 {
        self.mult.values().sum()
    }

    /// CSV rows (weight coords..., multiplicity).
    pub fn csv_rows(&self) -> Vec<String> {
        self.mult
            .iter()
            .map(|(w, m)| format!("{},{}", w.key(), m))
            .collect()
    }
}

// small helper so add_mult can drop zero entries without borrowing issues
trait RemoveZero {
    fn remove_entry_zero(&mut self);
}
impl RemoveZero for BTreeMap<Weight, i64> {
    fn remove_entry_zero(&mut self) {
        self.retain(|_, v| *v != 0);
    }
}

/// Number of ways to write beta as a nonnegative integer combination of
/// positive roots.
pub fn kostant_partition(rd: &RootDatum, beta: &RootVec, depth: i64) -> Result<u64> {
    if !beta.is_nonnegative() {
        return Err(Error::Domain(format!(
            "kostant_partition needs nonnegative root coordinates, got {:?}",
            beta.0
        )));
    }
    if beta.height() > depth {
        return Err(Error::Domain(format!(
            "height {} exceeds depth {}",
            beta.height(),
            depth
        )));
    }
    let roots = rd.positive_roots();
    let mut memo: HashMap<(usize, Vec<i64>), u64> = HashMap::new();
    Ok(count_partitions(&roots, roots.len(), &beta.0, &mut memo))
}

fn count_partitions(
    roots: &[RootVec],
    avail: usize,
    beta: &[i64],
    memo: &mut HashMap<(usize, Vec<i64>), u64>,
) -> u64 {
    if beta.iter().all(|&c| c == 0) {
        return 1;
    }
    if avail == 0 {
        return 0;
    }
    let key = (avail, beta.to_vec());
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let root = &roots[avail - 1].0;
    let mut total = 0u64;
    let mut rest = beta.to_vec();
    loop {
        total += count_partitions(roots, avail - 1, &rest, memo);
        if rest.iter().zip(root).any(|(r, c)| r < c) {
            break;
        }
        for (r, c) in rest.iter_mut().zip(root) {
            *r -= c;
        }
    }
    memo.insert(key, total);
    total
}

/// ch M(lambda) down to the given depth.
pub fn verma_character(rd: &RootDatum, lam: &Weight, depth: i64) -> FormalCharacter {
    let mut ch = FormalCharacter::new(rd, lam.clone(), depth);
    for beta in root_cone(rd, depth) {
        let p = kostant_partition(rd, &beta, depth).expect("cone stays in bounds");
        if p > 0 {
            ch.add_mult(lam.sub(&rd.root_to_fund(&beta)), p as i64);
        }
    }
    ch
}

/// All beta >= 0 in root coordinates with ht(beta) <= depth.
pub fn root_cone(rd: &RootDatum, depth: i64) -> Vec<RootVec> {
    let mut out = Vec::new();
    match rd.rank {
        1 => {
            for a in 0..=depth {
                out.push(RootVec(vec![a]));
            }
        }
        2 => {
            for a in 0..=depth {
                for b in 0..=(depth - a) {
                    out.push(RootVec(vec![a, b]));
                }
            }
        }
        _ => unreachable!("rank <= 2"),
    }
    out
}

/// Sum over the Weyl group of (-1)^l(w) ch M(w . lambda), truncated at depth
/// below lambda.
pub fn euler_characteristic(
    rd: &RootDatum,
    poset: &BruhatPoset,
    lam: &Weight,
    depth: i64,
) -> FormalCharacter {
    let mut ch = FormalCharacter::new(rd, lam.clone(), depth);
    for w in &poset.elements {
        let top = w.dot(rd, lam);
        let sign = if w.length() % 2 == 0 { 1 } else { -1 };
        // Depth of the w-summand relative to its own top, reaching down to
        // the window floor of lambda.
        let gap = rd
            .height_below(lam, &top)
            .expect("dot orbit stays in the root-lattice coset");
        if gap > depth {
            continue;
        }
        let sub = verma_character(rd, &top, depth - gap);
        for (mu, m) in sub.mult {
            ch.add_mult(mu, sign * m);
        }
    }
    ch
}

/// Character of the simple module in characteristic zero (equivalently the
/// Weyl character), computed from the alternating sum at sufficient depth.
pub fn weyl_character(rd: &RootDatum, poset: &BruhatPoset, lam: &Weight) -> Result<FormalCharacter> {
    if !lam.is_dominant() {
        return Err(Error::Domain(format!("{lam} is not dominant")));
    }
    let w0 = poset.longest_element();
    let span = rd.height_below(lam, &w0.act(lam))?;
    let mut ch = euler_characteristic(rd, poset, lam, span);
    ch.mult.retain(|_, v| *v != 0);
    let expected = rd.weyl_dimension(lam);
    if ch.total_dimension() != expected {
        return Err(Error::Inconsistency(format!(
            "weyl character of {lam} has dimension {} but the dimension formula gives {expected}",
            ch.total_dimension()
        )));
    }
    Ok(ch)
}

/// True iff the multiplicities agree on every weight within `depth` of both
/// tops. Comparing beyond a character's stored depth fails loudly.
pub fn char_equal_truncated(a: &FormalCharacter, b: &FormalCharacter, depth: i64) -> Result<bool> {
    if a.label != b.label {
        return Err(Error::DomainMismatch(
            "characters live over different root data".into(),
        ));
    }
    if depth > a.depth || depth > b.depth {
        return Err(Error::Domain(format!(
            "comparison depth {depth} exceeds stored depths {} and {}",
            a.depth, b.depth
        )));
    }
    if a.top != b.top {
        return Ok(false);
    }
    let rd = crate::rootdata::build_root_datum(a.label);
    let mut keys: Vec<&Weight> = a.mult.keys().chain(b.mult.keys()).collect();
    keys.sort();
    keys.dedup();
    for mu in keys {
        match rd.fund_to_root(&a.top.sub(mu)) {
            Ok(beta) if beta.height() <= depth => {
                if a.mult_at(mu) != b.mult_at(mu) {
                    return Ok(false);
                }
            }
            // Outside the shared window (or not in the root-lattice coset):
            // not part of the comparison.
            _ => {}
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::{build_root_datum, TypeLabel};
    use crate::weyl::enumerate_weyl;

    /// Brute-force oracle: enumerate all multisets of positive roots.
    fn kostant_brute(rd: &RootDatum, beta: &RootVec) -> u64 {
        let roots = rd.positive_roots();
        fn rec(roots: &[RootVec], idx: usize, rest: &Vec<i64>) -> u64 {
            if rest.iter().all(|&c| c == 0) {
                return 1;
            }
            if idx == roots.len() {
                return 0;
            }
            let mut total = 0;
            let mut cur = rest.clone();
            loop {
                total += rec(roots, idx + 1, &cur);
                if cur.iter().zip(&roots[idx].0).any(|(r, c)| r < c) {
                    break;
                }
                for (r, c) in cur.iter_mut().zip(&roots[idx].0) {
                    *r -= c;
                }
            }
            total
        }
        rec(&roots, 0, &beta.0)
    }

    #[test]
    fn kostant_a1_is_always_one() {
        let rd = build_root_datum(TypeLabel::A1);
        for n in 0..8 {
            assert_eq!(kostant_partition(&rd, &RootVec(vec![n]), 10).unwrap(), 1);
        }
        assert!(kostant_partition(&rd, &RootVec(vec![-1]), 10).is_err());
    }

    #[test]
    fn kostant_a2_examples_and_oracle() {
        let rd = build_root_datum(TypeLabel::A2);
        assert_eq!(kostant_partition(&rd, &RootVec(vec![0, 0]), 6).unwrap(), 1);
        assert_eq!(kostant_partition(&rd, &RootVec(vec![1, 1]), 6).unwrap(), 2);
        for a in 0..=6 {
            for b in 0..=(6 - a) {
                let beta = RootVec(vec![a, b]);
                assert_eq!(
                    kostant_partition(&rd, &beta, 6).unwrap(),
                    kostant_brute(&rd, &beta),
                    "beta = {beta:?}"
                );
            }
        }
    }

    #[test]
    fn kostant_b2_oracle() {
        let rd = build_root_datum(TypeLabel::B2);
        for a in 0..=6 {
            for b in 0..=(6 - a) {
                let beta = RootVec(vec![a, b]);
                assert_eq!(
                    kostant_partition(&rd, &beta, 6).unwrap(),
                    kostant_brute(&rd, &beta),
                    "beta = {beta:?}"
                );
            }
        }
    }

    #[test]
    fn verma_character_a1() {
        let rd = build_root_datum(TypeLabel::A1);
        let ch = verma_character(&rd, &Weight(vec![0]), 5);
        for n in 0..=5 {
            assert_eq!(ch.mult_at(&Weight(vec![-2 * n])), 1);
        }
        assert_eq!(ch.mult.len(), 6);
    }

    #[test]
    fn verma_character_a2_depth_two() {
        let rd = build_root_datum(TypeLabel::A2);
        let ch = verma_character(&rd, &Weight(vec![0, 0]), 2);
        assert_eq!(ch.mult_at(&Weight(vec![0, 0])), 1);
        assert_eq!(ch.mult_at(&Weight(vec![-2, 1])), 1); // -alpha1
        assert_eq!(ch.mult_at(&Weight(vec![1, -2])), 1); // -alpha2
        assert_eq!(ch.mult_at(&Weight(vec![-1, -1])), 2); // -alpha1-alpha2
        assert_eq!(ch.mult_at(&Weight(vec![-4, 2])), 1); // -2alpha1
        assert_eq!(ch.mult_at(&Weight(vec![2, -4])), 1); // -2alpha2
        assert_eq!(ch.total_dimension(), 7);
    }

    /// Independent oracle: multiply the geometric series for each positive
    /// root as truncated power series in the root cone.
    fn verma_by_series(rd: &RootDatum, lam: &Weight, depth: i64) -> FormalCharacter {
        let mut coeffs: BTreeMap<Vec<i64>, i64> = BTreeMap::new();
        coeffs.insert(vec![0; rd.rank], 1);
        for root in rd.positive_roots() {
            let mut next: BTreeMap<Vec<i64>, i64> = BTreeMap::new();
            for (beta, m) in &coeffs {
                let mut k = 0i64;
                loop {
                    let shifted: Vec<i64> =
                        beta.iter().zip(&root.0).map(|(b, r)| b + k * r).collect();
                    if shifted.iter().sum::<i64>() > depth {
                        break;
                    }
                    *next.entry(shifted).or_insert(0) += m;
                    k += 1;
                }
            }
            coeffs = next;
        }
        let mut ch = FormalCharacter::new(rd, lam.clone(), depth);
        for (beta, m) in coeffs {
            ch.add_mult(lam.sub(&rd.root_to_fund(&RootVec(beta))), m);
        }
        ch
    }

    #[test]
    fn verma_character_matches_series_oracle() {
        for label in [TypeLabel::A1, TypeLabel::A2, TypeLabel::B2] {
            let rd = build_root_datum(label);
            let lam = Weight(vec![1; rd.rank]);
            let a = verma_character(&rd, &lam, 6);
            let b = verma_by_series(&rd, &lam, 6);
            assert_eq!(a, b, "{label}");
        }
    }

    #[test]
    fn weyl_character_a1() {
        let rd = build_root_datum(TypeLabel::A1);
        let poset = enumerate_weyl(&rd);
        let ch = weyl_character(&rd, &poset, &Weight(vec![2])).unwrap();
        assert_eq!(ch.mult_at(&Weight(vec![2])), 1);
        assert_eq!(ch.mult_at(&Weight(vec![0])), 1);
        assert_eq!(ch.mult_at(&Weight(vec![-2])), 1);
        assert_eq!(ch.total_dimension(), 3);

        let triv = weyl_character(&rd, &poset, &Weight(vec![0])).unwrap();
        assert_eq!(triv.mult.len(), 1);
        assert!(weyl_character(&rd, &poset, &Weight(vec![-2])).is_err());
    }

    #[test]
    fn weyl_character_is_w_invariant() {
        for label in [TypeLabel::A2, TypeLabel::B2] {
            let rd = build_root_datum(label);
            let poset = enumerate_weyl(&rd);
            for lam in [Weight(vec![1, 0]), Weight(vec![1, 1])] {
                let ch = weyl_character(&rd, &poset, &lam).unwrap();
                for w in &poset.elements {
                    for (mu, m) in &ch.mult {
                        assert_eq!(ch.mult_at(&w.act(mu)), *m, "{label} {lam} {}", w.name());
                    }
                }
            }
        }
    }

    #[test]
    fn euler_equals_weyl_on_window() {
        let rd = build_root_datum(TypeLabel::A2);
        let poset = enumerate_weyl(&rd);
        let lam = Weight(vec![1, 1]);
        let euler = euler_characteristic(&rd, &poset, &lam, 8);
        let weyl = weyl_character(&rd, &poset, &lam).unwrap();
        assert_eq!(weyl.total_dimension(), 8);
        for (mu, m) in &euler.mult {
            assert_eq!(weyl.mult_at(mu), *m, "at {mu}");
        }
        for (mu, m) in &weyl.mult {
            assert_eq!(euler.mult_at(mu), *m, "at {mu}");
        }
    }

    #[test]
    fn char_equal_truncated_examples() {
        let rd = build_root_datum(TypeLabel::A1);
        let a = verma_character(&rd, &Weight(vec![0]), 5);
        let b = verma_character(&rd, &Weight(vec![0]), 5);
        let c = verma_character(&rd, &Weight(vec![-2]), 5);
        assert!(char_equal_truncated(&a, &b, 5).unwrap());
        assert!(!char_equal_truncated(&a, &c, 5).unwrap());
        assert!(char_equal_truncated(&a, &b, 6).is_err());
    }
}
