//! Chevalley bases for the supported types, realized by fixed integer
//! matrices (sl2 in gl2, sl3 in gl3, the B2 system as sp4 in gl4). All
//! structure constants, the transpose antiautomorphism and the adjoint
//! action of Weyl-group lifts are computed exactly from these matrices, so
//! the sign conventions are pinned once and audited by tests.

use std::collections::HashMap;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{IntMat, Mat};
use crate::rootdata::{build_root_datum, RootDatum, RootVec, TypeLabel, Weight};
use crate::scalar::Rationals;
use crate::weyl::{w0_word, WeylElement};

/// One generator of the Lie algebra: a positive/negative root vector
/// (indexed into the convex root order) or a simple coroot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gen {
    /// f_{beta_k}, k indexing `Chevalley::pos_roots`.
    F(usize),
    /// h_i, simple coroot.
    H(usize),
    /// e_{beta_k}.
    E(usize),
}

impl Gen {
    pub fn is_cartan(&self) -> bool {
        matches!(self, Gen::H(_))
    }
}

/// A bracket value: integer combination of generators.
pub type BracketValue = Vec<(Gen, i64)>;

#[derive(Debug)]
pub struct Chevalley {
    pub rd: RootDatum,
    /// Positive roots in the convex order induced by the canonical w0 word:
    /// beta_k = s_{i1}...s_{i_{k-1}}(alpha_{i_k}).
    pub pos_roots: Vec<RootVec>,
    /// Index into pos_roots for each simple root.
    pub simple_idx: Vec<usize>,
    /// Faithful integer matrix realization per generator.
    mats: HashMap<Gen, IntMat>,
    /// [a, b] expanded on the basis.
    brackets: HashMap<(Gen, Gen), BracketValue>,
    dim: usize,
}

fn commutator(a: &IntMat, b: &IntMat) -> IntMat {
    let ab = a.mul(b);
    let ba = b.mul(a);
    IntMat::from_fn(a.rows, a.cols, |r, c| ab.at(r, c) - ba.at(r, c))
}

fn elementary(n: usize, i: usize, j: usize) -> IntMat {
    IntMat::from_fn(n, n, |r, c| {
        if (r, c) == (i, j) {
            BigInt::one()
        } else {
            BigInt::zero()
        }
    })
}

fn mat_add(a: &IntMat, b: &IntMat) -> IntMat {
    IntMat::from_fn(a.rows, a.cols, |r, c| a.at(r, c) + b.at(r, c))
}

fn mat_sub(a: &IntMat, b: &IntMat) -> IntMat {
    IntMat::from_fn(a.rows, a.cols, |r, c| a.at(r, c) - b.at(r, c))
}

/// Convex order of the positive roots for a reduced word of w0.
pub fn convex_order(rd: &RootDatum, word: &[usize]) -> Vec<RootVec> {
    let mut out = Vec::with_capacity(word.len());
    for k in 0..word.len() {
        // beta_k = s_{i1}...s_{i_{k-1}}(alpha_{i_k}) computed in root coords.
        let mut beta = RootVec({
            let mut v = vec![0i64; rd.rank];
            v[word[k]] = 1;
            v
        });
        for &i in word[..k].iter().rev() {
            let fund = rd.root_to_fund(&beta);
            let mut coords = beta.0.clone();
            coords[i] -= fund.0[i];
            beta = RootVec(coords);
        }
        out.push(beta);
    }
    out
}

impl Chevalley {
    /// Build the pinned realization for a label with the canonical w0 word.
    pub fn new(label: TypeLabel) -> Arc<Chevalley> {
        Self::with_word(label, &w0_word(label))
    }

    /// Same Lie algebra, positive roots listed in the convex order of an
    /// alternative reduced word (used by convention-independence checks).
    pub fn with_word(label: TypeLabel, word: &[usize]) -> Arc<Chevalley> {
        let rd = build_root_datum(label);
        let pos_roots = convex_order(&rd, word);
        let (dim, raw_e, raw_f, raw_h): (usize, Vec<(RootVec, IntMat)>, Vec<(RootVec, IntMat)>, Vec<IntMat>) =
            match label {
                TypeLabel::A1 => {
                    let e = elementary(2, 0, 1);
                    let f = elementary(2, 1, 0);
                    let h = mat_sub(&elementary(2, 0, 0), &elementary(2, 1, 1));
                    (
                        2,
                        vec![(RootVec(vec![1]), e)],
                        vec![(RootVec(vec![1]), f)],
                        vec![h],
                    )
                }
                TypeLabel::A2 => {
                    let e1 = elementary(3, 0, 1);
                    let e2 = elementary(3, 1, 2);
                    let e12 = elementary(3, 0, 2);
                    let f1 = elementary(3, 1, 0);
                    let f2 = elementary(3, 2, 1);
                    let f12 = elementary(3, 2, 0);
                    let h1 = mat_sub(&elementary(3, 0, 0), &elementary(3, 1, 1));
                    let h2 = mat_sub(&elementary(3, 1, 1), &elementary(3, 2, 2));
                    (
                        3,
                        vec![
                            (RootVec(vec![1, 0]), e1),
                            (RootVec(vec![0, 1]), e2),
                            (RootVec(vec![1, 1]), e12),
                        ],
                        vec![
                            (RootVec(vec![1, 0]), f1),
                            (RootVec(vec![0, 1]), f2),
                            (RootVec(vec![1, 1]), f12),
                        ],
                        vec![h1, h2],
                    )
                }
                TypeLabel::B2 => {
                    // sp4 preserving the form with antidiagonal (1, 1, -1, -1);
                    // alpha1 = eps1 - eps2 (short), alpha2 = 2 eps2 (long).
                    let e_a1 = mat_sub(&elementary(4, 0, 1), &elementary(4, 2, 3));
                    let f_a1 = mat_sub(&elementary(4, 1, 0), &elementary(4, 3, 2));
                    let e_a2 = elementary(4, 1, 2);
                    let f_a2 = elementary(4, 2, 1);
                    let e_short = mat_add(&elementary(4, 0, 2), &elementary(4, 1, 3)); // eps1+eps2
                    let f_short = mat_add(&elementary(4, 2, 0), &elementary(4, 3, 1));
                    let e_long = elementary(4, 0, 3); // 2 eps1
                    let f_long = elementary(4, 3, 0);
                    let h1 = {
                        let a = mat_sub(&elementary(4, 0, 0), &elementary(4, 1, 1));
                        let b = mat_sub(&elementary(4, 2, 2), &elementary(4, 3, 3));
                        mat_add(&a, &b)
                    };
                    let h2 = mat_sub(&elementary(4, 1, 1), &elementary(4, 2, 2));
                    (
                        4,
                        vec![
                            (RootVec(vec![1, 0]), e_a1),
                            (RootVec(vec![0, 1]), e_a2),
                            (RootVec(vec![1, 1]), e_short),
                            (RootVec(vec![2, 1]), e_long),
                        ],
                        vec![
                            (RootVec(vec![1, 0]), f_a1),
                            (RootVec(vec![0, 1]), f_a2),
                            (RootVec(vec![1, 1]), f_short),
                            (RootVec(vec![2, 1]), f_long),
                        ],
                        vec![h1, h2],
                    )
                }
            };

        let mut mats: HashMap<Gen, IntMat> = HashMap::new();
        for (k, beta) in pos_roots.iter().enumerate() {
            let e = raw_e
                .iter()
                .find(|(b, _)| b == beta)
                .expect("convex order enumerates the positive roots")
                .1
                .clone();
            let f = raw_f.iter().find(|(b, _)| b == beta).unwrap().1.clone();
            mats.insert(Gen::E(k), e);
            mats.insert(Gen::F(k), f);
        }
        for (i, h) in raw_h.into_iter().enumerate() {
            mats.insert(Gen::H(i), h);
        }

        let simple_idx = (0..rd.rank)
            .map(|i| {
                let mut v = vec![0i64; rd.rank];
                v[i] = 1;
                pos_roots
                    .iter()
                    .position(|b| b.0 == v)
                    .expect("simple roots appear in the convex order")
            })
            .collect();

        let mut chev = Chevalley {
            rd,
            pos_roots,
            simple_idx,
            mats,
            brackets: HashMap::new(),
            dim,
        };
        chev.fill_brackets();
        Arc::new(chev)
    }

    pub fn label(&self) -> TypeLabel {
        self.rd.label
    }

    pub fn rank(&self) -> usize {
        self.rd.rank
    }

    pub fn num_pos_roots(&self) -> usize {
        self.pos_roots.len()
    }

    pub fn all_gens(&self) -> Vec<Gen> {
        let mut out: Vec<Gen> = (0..self.num_pos_roots()).map(Gen::F).collect();
        out.extend((0..self.rank()).map(Gen::H));
        out.extend((0..self.num_pos_roots()).map(Gen::E));
        out
    }

    pub fn matrix(&self, g: Gen) -> &IntMat {
        &self.mats[&g]
    }

    /// Ambient weight (in fundamental coordinates) added by the generator.
    pub fn gen_weight(&self, g: Gen) -> Weight {
        match g {
            Gen::E(k) => self.rd.root_to_fund(&self.pos_roots[k]),
            Gen::F(k) => self.rd.root_to_fund(&self.pos_roots[k]).scale(-1),
            Gen::H(_) => Weight::zero(self.rank()),
        }
    }

    pub fn bracket(&self, a: Gen, b: Gen) -> &BracketValue {
        &self.brackets[&(a, b)]
    }

    /// Transpose antiautomorphism: e_beta <-> f_beta, Cartan fixed. In the
    /// pinned realizations this is literally matrix transposition.
    pub fn tau(&self, g: Gen) -> Gen {
        match g {
            Gen::E(k) => Gen::F(k),
            Gen::F(k) => Gen::E(k),
            Gen::H(i) => Gen::H(i),
        }
    }

    fn fill_brackets(&mut self) {
        let gens = self.all_gens();
        for &a in &gens {
            for &b in &gens {
                let m = commutator(self.matrix(a), self.matrix(b));
                let val = self
                    .decompose(&m)
                    .expect("g closed under brackets with integer constants");
                self.brackets.insert((a, b), val);
            }
        }
    }

    /// Expand an element of the matrix Lie algebra on the Chevalley basis
    /// with integer coefficients.
    pub fn decompose(&self, m: &IntMat) -> Result<BracketValue> {
        let gens = self.all_gens();
        let n2 = self.dim * self.dim;
        let basis = Mat::from_fn(Rationals, n2, gens.len(), |entry, col| {
            let gm = self.matrix(gens[col]);
            BigRational::from_integer(gm.data[entry].clone())
        });
        let target = Mat::from_fn(Rationals, n2, 1, |entry, _| {
            BigRational::from_integer(m.data[entry].clone())
        });
        let sol = basis
            .solve(&target)
            .ok_or_else(|| Error::Inconsistency("matrix not in the Lie algebra span".into()))?;
        let mut out = Vec::new();
        for (i, &g) in gens.iter().enumerate() {
            let v = sol.at(i, 0);
            if v.is_zero() {
                continue;
            }
            let int = crate::scalar::rat_to_bigint(v)?;
            let small: i64 = int
                .try_into()
                .map_err(|_| Error::Inconsistency("oversized structure constant".into()))?;
            out.push((g, small));
        }
        Ok(out)
    }

    /// The standard lift n_i = exp(e_i) exp(-f_i) exp(e_i) as an integer
    /// matrix of the realization.
    pub fn simple_lift(&self, i: usize) -> IntMat {
        let e = self.matrix(Gen::E(self.simple_idx[i]));
        let f = self.matrix(Gen::F(self.simple_idx[i]));
        let exp = |m: &IntMat, sign: i64| -> IntMat {
            // Nilpotent exponential with exact rational arithmetic.
            let mut acc = Mat::identity(Rationals, self.dim);
            let mut term = Mat::identity(Rationals, self.dim);
            let rat = Mat::from_fn(Rationals, self.dim, self.dim, |r, c| {
                BigRational::from_integer(m.at(r, c) * BigInt::from(sign))
            });
            for k in 1..=self.dim {
                term = term.mul(&rat);
                let kfact = BigRational::from_integer(crate::scalar::factorial(k as u32));
                let scaled = term.scale(&kfact.recip());
                acc = acc.add(&scaled);
            }
            IntMat::from_rational(&acc).expect("integer exponential of a Chevalley nilpotent")
        };
        let a = exp(e, 1);
        let b = exp(f, -1);
        a.mul(&b).mul(&a)
    }

    /// Lift of an arbitrary Weyl element along its canonical word.
    pub fn lift(&self, w: &WeylElement) -> IntMat {
        let mut m = IntMat::identity(self.dim);
        for &i in &w.word {
            m = m.mul(&self.simple_lift(i));
        }
        m
    }

    /// Adjoint action of a lift on a generator: Ad_n(g) = n g n^{-1},
    /// expanded on the basis (a signed generator for root vectors).
    pub fn adjoint(&self, lift: &IntMat, g: Gen) -> Result<BracketValue> {
        let inv = self.invert_unimodular(lift)?;
        let conj = lift.mul(self.matrix(g)).mul(&inv);
        self.decompose(&conj)
    }

    fn invert_unimodular(&self, m: &IntMat) -> Result<IntMat> {
        let rat = m.to_rational();
        let inv = rat
            .solve(&Mat::identity(Rationals, self.dim))
            .ok_or_else(|| Error::Inconsistency("lift not invertible".into()))?;
        IntMat::from_rational(&inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_labels() -> Vec<TypeLabel> {
        vec![TypeLabel::A1, TypeLabel::A2, TypeLabel::B2]
    }

    #[test]
    fn bracket_tables_close_with_integer_constants() {
        for label in all_labels() {
            let ch = Chevalley::new(label);
            for a in ch.all_gens() {
                for b in ch.all_gens() {
                    // fill_brackets already decomposed; spot check antisymmetry.
                    let ab = ch.bracket(a, b).clone();
                    let ba = ch.bracket(b, a).clone();
                    let mut neg: Vec<(Gen, i64)> = ba.into_iter().map(|(g, c)| (g, -c)).collect();
                    neg.sort();
                    let mut ab_sorted = ab;
                    ab_sorted.sort();
                    assert_eq!(ab_sorted, neg);
                }
            }
        }
    }

    #[test]
    fn sl2_triples_and_pairings() {
        for label in all_labels() {
            let ch = Chevalley::new(label);
            for (k, beta) in ch.pos_roots.iter().enumerate() {
                let h_beta = ch.bracket(Gen::E(k), Gen::F(k)).clone();
                assert!(!h_beta.is_empty(), "{label} root {beta:?}");
                assert!(h_beta.iter().all(|(g, _)| g.is_cartan()));
                // [h_beta, e_beta] = 2 e_beta
                let e = ch.matrix(Gen::E(k)).clone();
                let mut hb = IntMat::zeros(e.rows, e.cols);
                for (g, c) in &h_beta {
                    let gm = ch.matrix(*g);
                    hb = IntMat::from_fn(e.rows, e.cols, |r, cc| {
                        hb.at(r, cc) + gm.at(r, cc) * BigInt::from(*c)
                    });
                }
                let lhs = commutator(&hb, &e);
                let two_e = IntMat::from_fn(e.rows, e.cols, |r, c| e.at(r, c) * BigInt::from(2));
                assert_eq!(lhs, two_e, "{label} root {beta:?}");
            }
        }
    }

    #[test]
    fn cartan_acts_by_the_stated_weights() {
        for label in all_labels() {
            let ch = Chevalley::new(label);
            for k in 0..ch.num_pos_roots() {
                let fund = ch.rd.root_to_fund(&ch.pos_roots[k]);
                for i in 0..ch.rank() {
                    let br = ch.bracket(Gen::H(i), Gen::E(k)).clone();
                    let expected = fund.0[i];
                    if expected == 0 {
                        assert!(br.is_empty());
                    } else {
                        assert_eq!(br, vec![(Gen::E(k), expected)]);
                    }
                }
            }
        }
    }

    #[test]
    fn structure_constants_have_chevalley_magnitudes() {
        // |N_{alpha,beta}| = p + 1 where p is the largest k with
        // beta - k alpha a root.
        for label in all_labels() {
            let ch = Chevalley::new(label);
            let roots = &ch.pos_roots;
            for (a, alpha) in roots.iter().enumerate() {
                for (b, beta) in roots.iter().enumerate() {
                    if a == b {
                        continue;
                    }
                    let br = ch.bracket(Gen::E(a), Gen::E(b)).clone();
                    let sum = alpha.add(beta);
                    match roots.iter().position(|r| *r == sum) {
                        Some(k) => {
                            let mut p = 0i64;
                            loop {
                                let down = RootVec(
                                    beta.0
                                        .iter()
                                        .zip(&alpha.0)
                                        .map(|(x, y)| x - (p + 1) * y)
                                        .collect(),
                                );
                                let down_neg = RootVec(down.0.iter().map(|x| -x).collect());
                                if roots.iter().any(|r| *r == down || *r == down_neg) {
                                    p += 1;
                                } else {
                                    break;
                                }
                            }
                            assert_eq!(br.len(), 1);
                            assert_eq!(br[0].0, Gen::E(k));
                            assert_eq!(br[0].1.abs(), p + 1, "{label} {alpha:?}+{beta:?}");
                        }
                        None => assert!(br.is_empty(), "{label} {alpha:?}+{beta:?}"),
                    }
                }
            }
        }
    }

    #[test]
    fn tau_is_matrix_transpose() {
        for label in all_labels() {
            let ch = Chevalley::new(label);
            for g in ch.all_gens() {
                assert_eq!(ch.matrix(g).transpose(), *ch.matrix(ch.tau(g)));
            }
        }
    }

    #[test]
    fn adjoint_of_simple_lift_permutes_root_vectors_up_to_sign() {
        for label in all_labels() {
            let ch = Chevalley::new(label);
            let poset = crate::weyl::enumerate_weyl(&ch.rd);
            for i in 0..ch.rank() {
                let lift = ch.simple_lift(i);
                let s_i = poset.by_word(&[i]).unwrap();
                for k in 0..ch.num_pos_roots() {
                    let image = ch.adjoint(&lift, Gen::E(k)).unwrap();
                    assert_eq!(image.len(), 1, "{label}");
                    let (g, c) = image[0];
                    assert_eq!(c.abs(), 1, "{label}: lift must preserve the lattice");
                    // the image root is s_i(beta_k)
                    let beta_fund = ch.rd.root_to_fund(&ch.pos_roots[k]);
                    let target = s_i.act(&beta_fund);
                    let observed = match g {
                        Gen::E(m) => ch.rd.root_to_fund(&ch.pos_roots[m]),
                        Gen::F(m) => ch.rd.root_to_fund(&ch.pos_roots[m]).scale(-1),
                        Gen::H(_) => panic!("root vector maps to a root vector"),
                    };
                    assert_eq!(observed, target, "{label} s{} on root {k}", i + 1);
                }
            }
        }
    }

    #[test]
    fn convex_orders_differ_between_the_two_w0_words() {
        let rd = build_root_datum(TypeLabel::A2);
        let a = convex_order(&rd, &crate::weyl::w0_word(TypeLabel::A2));
        let b = convex_order(&rd, &crate::weyl::w0_word_alt(TypeLabel::A2));
        assert_eq!(a[0], RootVec(vec![1, 0]));
        assert_eq!(a[1], RootVec(vec![1, 1]));
        assert_eq!(a[2], RootVec(vec![0, 1]));
        assert_eq!(b[0], RootVec(vec![0, 1]));
        assert_eq!(b[2], RootVec(vec![1, 0]));
    }
}
