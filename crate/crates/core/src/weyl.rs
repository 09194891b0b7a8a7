//! Weyl group elements, lengths, canonical reduced words, Bruhat order and
//! the truncation chains used by the complex assembly.
//!
//! Element identity is by action matrix; words are non-unique. One reduced
//! word for the longest element is fixed per root datum and every canonical
//! word is a subword of it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rootdata::{RootDatum, TypeLabel, Weight};

/// Action matrix on fundamental coordinates, rows indexed by output coord.
pub type WeylMatrix = Vec<Vec<i64>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeylElement {
    /// Canonical reduced word (subword of the fixed w0 word), simple indices.
    pub word: Vec<usize>,
    #[serde(skip)]
    pub matrix: WeylMatrix,
}

impl WeylElement {
    pub fn length(&self) -> usize {
        self.word.len()
    }

    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }

    /// Linear action on a weight.
    pub fn act(&self, mu: &Weight) -> Weight {
        let n = mu.0.len();
        let mut out = vec![0i64; n];
        for (i, row) in self.matrix.iter().enumerate() {
            for j in 0..n {
                out[i] += row[j] * mu.0[j];
            }
        }
        Weight(out)
    }

    /// Dot action w . lambda = w(lambda + rho) - rho.
    pub fn dot(&self, rd: &RootDatum, lam: &Weight) -> Weight {
        let rho = rd.rho();
        self.act(&lam.add(&rho)).sub(&rho)
    }

    pub fn name(&self) -> String {
        if self.word.is_empty() {
            "e".to_string()
        } else {
            self.word
                .iter()
                .map(|i| format!("s{}", i + 1))
                .collect::<String>()
        }
    }
}

fn identity_matrix(rank: usize) -> WeylMatrix {
    (0..rank)
        .map(|i| (0..rank).map(|j| i64::from(i == j)).collect())
        .collect()
}

fn reflection_matrix(rd: &RootDatum, i: usize) -> WeylMatrix {
    // s_i(mu)_j = mu_j - a_{ij} mu_i
    let mut m = identity_matrix(rd.rank);
    for j in 0..rd.rank {
        m[j][i] -= rd.cartan[i][j];
    }
    m
}

fn mat_mul(a: &WeylMatrix, b: &WeylMatrix) -> WeylMatrix {
    let n = a.len();
    let mut out = identity_matrix(n);
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..n).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn word_matrix(rd: &RootDatum, word: &[usize]) -> WeylMatrix {
    // w = s_{i1} ... s_{ik} acts with the rightmost reflection first.
    let mut m = identity_matrix(rd.rank);
    for &i in word {
        m = mat_mul(&m, &reflection_matrix(rd, i));
    }
    m
}

/// The fixed reduced word for w0; all canonical words are its subwords.
pub fn w0_word(label: TypeLabel) -> Vec<usize> {
    match label {
        TypeLabel::A1 => vec![0],
        TypeLabel::A2 => vec![0, 1, 0],
        TypeLabel::B2 => vec![0, 1, 0, 1],
    }
}

/// Alternative reduced word for w0, used by the convention-independence
/// checks (A2: s2 s1 s2).
pub fn w0_word_alt(label: TypeLabel) -> Vec<usize> {
    match label {
        TypeLabel::A1 => vec![0],
        TypeLabel::A2 => vec![1, 0, 1],
        TypeLabel::B2 => vec![1, 0, 1, 0],
    }
}

#[derive(Debug, Clone)]
pub struct BruhatPoset {
    pub rd: RootDatum,
    /// Sorted by (length, canonical word).
    pub elements: Vec<WeylElement>,
    /// Ordered cover pairs (index of w, index of w') with l(w') = l(w) + 1.
    pub covers: Vec<(usize, usize)>,
    /// leq[a][b] <=> elements[a] <= elements[b] (subword criterion).
    leq: Vec<Vec<bool>>,
}

/// Enumerate the Weyl group with canonical reduced words derived from the
/// fixed w0 word, and compute the cover relations.
pub fn enumerate_weyl(rd: &RootDatum) -> BruhatPoset {
    enumerate_weyl_with_word(rd, &w0_word(rd.label))
}

/// Same, but with an explicit w0 word (must be reduced and evaluate to w0).
pub fn enumerate_weyl_with_word(rd: &RootDatum, w0: &[usize]) -> BruhatPoset {
    // Every element of W is realized by some subword of a reduced w0 word.
    let mut elements: Vec<WeylElement> = Vec::new();
    let n = w0.len();
    for mask in 0..(1u32 << n) {
        let word: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0).map(|k| w0[k]).collect();
        let matrix = word_matrix(rd, &word);
        match elements.iter_mut().find(|e| e.matrix == matrix) {
            Some(existing) => {
                let better = word.len() < existing.word.len()
                    || (word.len() == existing.word.len() && word < existing.word);
                if better {
                    existing.word = word;
                }
            }
            None => elements.push(WeylElement { word, matrix }),
        }
    }
    elements.sort_by_key(|e| (e.length(), e.word.clone()));

    let leq: Vec<Vec<bool>> = elements
        .iter()
        .map(|a| elements.iter().map(|b| subword_leq(rd, a, b)).collect())
        .collect();
    let mut covers = Vec::new();
    for (i, a) in elements.iter().enumerate() {
        for (j, b) in elements.iter().enumerate() {
            if b.length() == a.length() + 1 && leq[i][j] {
                covers.push((i, j));
            }
        }
    }
    BruhatPoset {
        rd: rd.clone(),
        elements,
        covers,
        leq,
    }
}

/// Subword criterion: some subword of the canonical word of w2 of length
/// l(w1) evaluates to w1.
fn subword_leq(rd: &RootDatum, w1: &WeylElement, w2: &WeylElement) -> bool {
    if w1.length() > w2.length() {
        return false;
    }
    let word = &w2.word;
    let n = word.len();
    for mask in 0..(1u32 << n) {
        if (mask.count_ones() as usize) != w1.length() {
            continue;
        }
        let sub: Vec<usize> = (0..n).filter(|&k| mask & (1 << k) != 0).map(|k| word[k]).collect();
        if word_matrix(rd, &sub) == w1.matrix {
            return true;
        }
    }
    false
}

impl BruhatPoset {
    pub fn rank(&self) -> usize {
        self.rd.rank
    }

    pub fn identity(&self) -> &WeylElement {
        &self.elements[0]
    }

    pub fn index_of(&self, w: &WeylElement) -> Result<usize> {
        self.elements
            .iter()
            .position(|e| e.matrix == w.matrix)
            .ok_or_else(|| Error::DomainMismatch(format!("{} is not in this poset", w.name())))
    }

    pub fn by_word(&self, word: &[usize]) -> Result<&WeylElement> {
        let m = word_matrix(&self.rd, word);
        self.elements
            .iter()
            .find(|e| e.matrix == m)
            .ok_or_else(|| Error::DomainMismatch("word outside poset".into()))
    }

    pub fn longest_element(&self) -> &WeylElement {
        self.elements
            .iter()
            .max_by_key(|e| e.length())
            .expect("nonempty group")
    }

    pub fn bruhat_leq(&self, w1: &WeylElement, w2: &WeylElement) -> Result<bool> {
        Ok(self.leq[self.index_of(w1)?][self.index_of(w2)?])
    }

    /// Right multiplication by one simple reflection.
    pub fn mul_simple(&self, w: &WeylElement, i: usize) -> &WeylElement {
        let m = mat_mul(&w.matrix, &reflection_matrix(&self.rd, i));
        self.elements
            .iter()
            .find(|e| e.matrix == m)
            .expect("group closed under generators")
    }

    pub fn product(&self, a: &WeylElement, b: &WeylElement) -> &WeylElement {
        let m = mat_mul(&a.matrix, &b.matrix);
        self.elements
            .iter()
            .find(|e| e.matrix == m)
            .expect("group closed under products")
    }

    pub fn inverse(&self, w: &WeylElement) -> &WeylElement {
        let mut word = w.word.clone();
        word.reverse();
        let m = word_matrix(&self.rd, &word);
        self.elements
            .iter()
            .find(|e| e.matrix == m)
            .expect("group closed under inverses")
    }

    /// Lengths histogram, i.e. the Poincare polynomial coefficients.
    pub fn length_counts(&self) -> Vec<usize> {
        let max = self.longest_element().length();
        let mut counts = vec![0usize; max + 1];
        for e in &self.elements {
            counts[e.length()] += 1;
        }
        counts
    }

    /// Elements of a given length, as indices.
    pub fn level(&self, len: usize) -> Vec<usize> {
        (0..self.elements.len())
            .filter(|&i| self.elements[i].length() == len)
            .collect()
    }

    /// v_0 = w, v_1, ..., v_{l(w)} = e obtained by truncating the canonical
    /// reduced word from the right.
    pub fn chain_to_identity(&self, w: &WeylElement) -> Vec<WeylElement> {
        let mut chain = Vec::with_capacity(w.length() + 1);
        for k in (0..=w.length()).rev() {
            let prefix = &w.word[..k];
            let matrix = word_matrix(&self.rd, prefix);
            let elem = self
                .elements
                .iter()
                .find(|e| e.matrix == matrix)
                .expect("prefix stays in the group");
            chain.push(elem.clone());
        }
        chain
    }

    /// JSON shape {elements: [words], covers: [[i, j]]}.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "elements": self.elements.iter().map(|e| e.word.clone()).collect::<Vec<_>>(),
            "covers": self.covers,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::build_root_datum;

    fn posets() -> Vec<BruhatPoset> {
        [TypeLabel::A1, TypeLabel::A2, TypeLabel::B2]
            .into_iter()
            .map(|l| enumerate_weyl(&build_root_datum(l)))
            .collect()
    }

    #[test]
    fn group_sizes_and_length_counts() {
        let p = posets();
        assert_eq!(p[0].elements.len(), 2);
        assert_eq!(p[0].length_counts(), vec![1, 1]);
        assert_eq!(p[1].elements.len(), 6);
        assert_eq!(p[1].length_counts(), vec![1, 2, 2, 1]);
        assert_eq!(p[2].elements.len(), 8);
        assert_eq!(p[2].length_counts(), vec![1, 2, 2, 2, 1]);
        assert_eq!(p[2].longest_element().length(), 4);
    }

    #[test]
    fn longest_element_involution_and_antidominance() {
        for poset in posets() {
            let w0 = poset.longest_element();
            assert!(poset.product(w0, w0).is_identity());
            let rho = poset.rd.rho();
            let image = w0.act(&rho);
            assert!(image.0.iter().all(|&c| c <= -1), "{image}");
        }
    }

    #[test]
    fn a2_longest_element_is_s1s2s1() {
        let poset = enumerate_weyl(&build_root_datum(TypeLabel::A2));
        assert_eq!(poset.longest_element().word, vec![0, 1, 0]);
        assert_eq!(poset.longest_element().length(), 3);
    }

    /// Independent Bruhat-order oracle via the lifting property.
    fn bruhat_leq_lifting(poset: &BruhatPoset, u: &WeylElement, v: &WeylElement) -> bool {
        if u.is_identity() {
            return true;
        }
        if u.length() > v.length() {
            return false;
        }
        let i = *v.word.last().expect("v != e here");
        let vs = poset.mul_simple(v, i);
        debug_assert!(vs.length() + 1 == v.length());
        let us = poset.mul_simple(u, i);
        if us.length() < u.length() {
            bruhat_leq_lifting(poset, us, vs)
        } else {
            bruhat_leq_lifting(poset, u, vs)
        }
    }

    #[test]
    fn subword_order_matches_lifting_oracle_on_all_pairs() {
        for poset in posets() {
            for a in &poset.elements {
                for b in &poset.elements {
                    assert_eq!(
                        poset.bruhat_leq(a, b).unwrap(),
                        bruhat_leq_lifting(&poset, a, b),
                        "{} vs {}",
                        a.name(),
                        b.name()
                    );
                }
            }
        }
    }

    #[test]
    fn subword_order_matches_cover_closure() {
        for poset in posets() {
            let n = poset.elements.len();
            let mut closure = vec![vec![false; n]; n];
            for i in 0..n {
                closure[i][i] = true;
            }
            for &(i, j) in &poset.covers {
                closure[i][j] = true;
            }
            loop {
                let mut changed = false;
                for i in 0..n {
                    for j in 0..n {
                        if !closure[i][j] {
                            let reach = (0..n).any(|k| closure[i][k] && closure[k][j]);
                            if reach {
                                closure[i][j] = true;
                                changed = true;
                            }
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            for (i, a) in poset.elements.iter().enumerate() {
                for (j, b) in poset.elements.iter().enumerate() {
                    assert_eq!(poset.bruhat_leq(a, b).unwrap(), closure[i][j]);
                }
            }
        }
    }

    #[test]
    fn a2_bruhat_examples() {
        let poset = enumerate_weyl(&build_root_datum(TypeLabel::A2));
        let s1 = poset.by_word(&[0]).unwrap().clone();
        let s2 = poset.by_word(&[1]).unwrap().clone();
        let s1s2 = poset.by_word(&[0, 1]).unwrap().clone();
        assert!(poset.bruhat_leq(&s1, &s1s2).unwrap());
        assert!(!poset.bruhat_leq(&s1, &s2).unwrap());
        for e in &poset.elements {
            assert!(poset.bruhat_leq(poset.identity(), e).unwrap());
        }
    }

    #[test]
    fn chains_truncate_the_canonical_word() {
        let poset = enumerate_weyl(&build_root_datum(TypeLabel::A2));
        let w0 = poset.longest_element().clone();
        let chain = poset.chain_to_identity(&w0);
        let names: Vec<String> = chain.iter().map(|w| w.name()).collect();
        assert_eq!(names, vec!["s1s2s1", "s1s2", "s1", "e"]);
        for pair in chain.windows(2) {
            assert_eq!(pair[0].length(), pair[1].length() + 1);
            // consecutive entries differ by one right multiplication
            let i = pair[0].word[pair[0].length() - 1];
            assert_eq!(poset.mul_simple(&pair[1], i).matrix, pair[0].matrix);
        }
        let e = poset.identity().clone();
        assert_eq!(poset.chain_to_identity(&e).len(), 1);
    }

    #[test]
    fn dot_action_examples() {
        let a1 = build_root_datum(TypeLabel::A1);
        let pa1 = enumerate_weyl(&a1);
        let s = pa1.by_word(&[0]).unwrap();
        assert_eq!(pa1.identity().dot(&a1, &Weight(vec![0])), Weight(vec![0]));
        assert_eq!(s.dot(&a1, &Weight(vec![0])), Weight(vec![-2]));
        assert_eq!(s.dot(&a1, &Weight(vec![-1])), Weight(vec![-1]));

        let a2 = build_root_datum(TypeLabel::A2);
        let pa2 = enumerate_weyl(&a2);
        let s1 = pa2.by_word(&[0]).unwrap();
        assert_eq!(s1.dot(&a2, &Weight(vec![0, 0])), Weight(vec![-2, 1]));
    }

    #[test]
    fn dot_action_respects_composition_and_inverse() {
        for poset in posets() {
            let rd = &poset.rd;
            let lam = Weight((0..rd.rank as i64).map(|k| k + 1).collect());
            for a in &poset.elements {
                let inv = poset.inverse(a);
                assert_eq!(a.dot(rd, &inv.dot(rd, &lam)), lam);
                for b in &poset.elements {
                    let ab = poset.product(a, b);
                    assert_eq!(a.dot(rd, &b.dot(rd, &lam)), ab.dot(rd, &lam));
                }
            }
        }
    }

    #[test]
    fn poset_serialization_shape() {
        let poset = enumerate_weyl(&build_root_datum(TypeLabel::A1));
        let json = poset.to_json();
        assert_eq!(json["elements"].as_array().unwrap().len(), 2);
        assert_eq!(json["covers"].as_array().unwrap().len(), 1);
    }
}
