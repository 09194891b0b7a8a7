//! Root data of finite type at rank <= 2: weights, roots, rho and the basic
//! coordinate conversions.
//!
//! Weights are stored in fundamental-weight coordinates, so the j-th
//! coordinate of a weight mu is the pairing <mu, alpha_j^vee>. Simple root
//! alpha_i is row i of the Cartan matrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Supported type labels. The list is closed on purpose: every acceptance
/// computation lives at rank <= 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TypeLabel {
    A1,
    A2,
    B2,
}

impl TypeLabel {
    pub fn parse(s: &str) -> Result<TypeLabel> {
        match s {
            "A1" | "a1" => Ok(TypeLabel::A1),
            "A2" | "a2" => Ok(TypeLabel::A2),
            "B2" | "b2" => Ok(TypeLabel::B2),
            other => Err(Error::UnsupportedType(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TypeLabel::A1 => "A1",
            TypeLabel::A2 => "A2",
            TypeLabel::B2 => "B2",
        }
    }
}

impl fmt::Display for TypeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A weight in fundamental-weight coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weight(pub Vec<i64>);

impl Weight {
    pub fn zero(rank: usize) -> Weight {
        Weight(vec![0; rank])
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &Weight) -> Weight {
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Weight) -> Weight {
        Weight(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: i64) -> Weight {
        Weight(self.0.iter().map(|a| a * k).collect())
    }

    pub fn is_dominant(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    /// Compact "1,-2" form used in CSV rows and JSON map keys.
    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse(s: &str) -> Result<Weight> {
        let coords: std::result::Result<Vec<i64>, _> =
            s.split(',').map(|t| t.trim().parse::<i64>()).collect();
        coords
            .map(Weight)
            .map_err(|e| Error::Domain(format!("bad weight '{s}': {e}")))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.key())
    }
}

/// An element of the root lattice in simple-root coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RootVec(pub Vec<i64>);

impl RootVec {
    pub fn zero(rank: usize) -> RootVec {
        RootVec(vec![0; rank])
    }

    /// Height: the sum of simple-root coordinates.
    pub fn height(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&c| c >= 0)
    }

    pub fn add(&self, other: &RootVec) -> RootVec {
        RootVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &RootVec) -> RootVec {
        RootVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }
}

/// Cartan matrix, simple roots and the pairing data for one of the supported
/// labels. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootDatum {
    pub label: TypeLabel,
    /// cartan[i][j] = <alpha_i, alpha_j^vee>.
    pub cartan: Vec<Vec<i64>>,
    #[serde(skip)]
    pub rank: usize,
    /// Row i is alpha_i in fundamental coordinates (equals cartan row i).
    #[serde(skip)]
    pub simple_roots: Vec<Weight>,
    /// d_i = (alpha_i, alpha_i)/2 normalized so short roots have d = 1.
    #[serde(skip)]
    pub sym: Vec<i64>,
}

/// Standard Cartan matrix and simple-root table for the label.
pub fn build_root_datum(label: TypeLabel) -> RootDatum {
    let cartan: Vec<Vec<i64>> = match label {
        TypeLabel::A1 => vec![vec![2]],
        TypeLabel::A2 => vec![vec![2, -1], vec![-1, 2]],
        TypeLabel::B2 => vec![vec![2, -1], vec![-2, 2]],
    };
    let rank = cartan.len();
    let simple_roots = cartan.iter().map(|row| Weight(row.clone())).collect();
    // d_j a_{ij} must be symmetric; alpha_1 is the short root of B2.
    let sym = match label {
        TypeLabel::A1 => vec![1],
        TypeLabel::A2 => vec![1, 1],
        TypeLabel::B2 => vec![1, 2],
    };
    RootDatum {
        label,
        cartan,
        rank,
        simple_roots,
        sym,
    }
}

pub fn build_root_datum_from_str(label: &str) -> Result<RootDatum> {
    Ok(build_root_datum(TypeLabel::parse(label)?))
}

impl RootDatum {
    pub fn rho(&self) -> Weight {
        Weight(vec![1; self.rank])
    }

    /// Fundamental coordinates of a root-lattice element.
    pub fn root_to_fund(&self, beta: &RootVec) -> Weight {
        let mut out = vec![0i64; self.rank];
        for (i, &c) in beta.0.iter().enumerate() {
            for j in 0..self.rank {
                out[j] += c * self.cartan[i][j];
            }
        }
        Weight(out)
    }

    /// Inverse of `root_to_fund`; errors when the weight is not in the root
    /// lattice.
    pub fn fund_to_root(&self, mu: &Weight) -> Result<RootVec> {
        // Solve beta * cartan = mu exactly; rank <= 2 so Cramer suffices.
        match self.rank {
            1 => {
                let m = mu.0[0];
                if m % 2 != 0 {
                    return Err(Error::Domain(format!(
                        "weight {mu} is not in the A1 root lattice"
                    )));
                }
                Ok(RootVec(vec![m / 2]))
            }
            2 => {
                // beta0 * c00 + beta1 * c10 = mu0, beta0 * c01 + beta1 * c11 = mu1
                let c = &self.cartan;
                let det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
                debug_assert!(det != 0);
                let num0 = mu.0[0] * c[1][1] - mu.0[1] * c[1][0];
                let num1 = mu.0[1] * c[0][0] - mu.0[0] * c[0][1];
                if num0 % det != 0 || num1 % det != 0 {
                    return Err(Error::Domain(format!(
                        "weight {mu} is not in the {} root lattice",
                        self.label
                    )));
                }
                Ok(RootVec(vec![num0 / det, num1 / det]))
            }
            _ => Err(Error::Unsupported("rank > 2".into())),
        }
    }

    /// Height of lambda - mu when the difference lies in the root lattice.
    pub fn height_below(&self, top: &Weight, mu: &Weight) -> Result<i64> {
        Ok(self.fund_to_root(&top.sub(mu))?.height())
    }

    /// All positive roots, in root coordinates, produced by the reflection
    /// closure of the simple roots. Sorted by (height, coords).
    pub fn positive_roots(&self) -> Vec<RootVec> {
        let mut found: Vec<RootVec> = Vec::new();
        let mut queue: Vec<RootVec> = (0..self.rank)
            .map(|i| {
                let mut v = vec![0i64; self.rank];
                v[i] = 1;
                RootVec(v)
            })
            .collect();
        while let Some(beta) = queue.pop() {
            if found.contains(&beta) {
                continue;
            }
            found.push(beta.clone());
            let fund = self.root_to_fund(&beta);
            for i in 0..self.rank {
                // s_i(beta) = beta - <beta, alpha_i^vee> alpha_i in root coords.
                let mut refl = beta.0.clone();
                refl[i] -= fund.0[i];
                let refl = RootVec(refl);
                if refl.is_nonnegative() && !found.contains(&refl) {
                    queue.push(refl);
                }
            }
        }
        found.sort_by_key(|b| (b.height(), b.0.clone()));
        found
    }

    /// Pairing <mu, beta^vee> for a (not necessarily simple) root beta given
    /// in root coordinates.
    pub fn pair_coroot(&self, mu: &Weight, beta: &RootVec) -> i64 {
        // (mu, beta) = sum_j mu_j beta_j d_j ; (beta,beta) = sum beta_i beta_j d_j a_{ij}
        let inner: i64 = (0..self.rank).map(|j| mu.0[j] * beta.0[j] * self.sym[j]).sum();
        let mut norm = 0i64;
        for i in 0..self.rank {
            for j in 0..self.rank {
                norm += beta.0[i] * beta.0[j] * self.sym[j] * self.cartan[i][j];
            }
        }
        debug_assert!(norm > 0 && (2 * inner) % norm == 0);
        2 * inner / norm
    }

    /// Dot-regular dominant test: <lambda + rho, beta^vee> > 0 for every
    /// positive root beta.
    pub fn is_regular_dominant(&self, lam: &Weight) -> bool {
        let shifted = lam.add(&self.rho());
        self.positive_roots()
            .iter()
            .all(|beta| self.pair_coroot(&shifted, beta) > 0)
    }

    /// Simple reflection on fundamental coordinates.
    pub fn simple_reflection(&self, i: usize, mu: &Weight) -> Weight {
        let mut out = mu.0.clone();
        let c = mu.0[i];
        for j in 0..self.rank {
            out[j] -= c * self.cartan[i][j];
        }
        Weight(out)
    }

    /// Weyl dimension formula evaluated at a dominant weight.
    pub fn weyl_dimension(&self, lam: &Weight) -> i64 {
        let rho = self.rho();
        let shifted = lam.add(&rho);
        let mut num = 1i64;
        let mut den = 1i64;
        for beta in self.positive_roots() {
            num *= self.pair_coroot(&shifted, &beta);
            den *= self.pair_coroot(&rho, &beta);
        }
        debug_assert!(num % den == 0);
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_cartans() {
        assert_eq!(build_root_datum(TypeLabel::A1).cartan, vec![vec![2]]);
        assert_eq!(
            build_root_datum(TypeLabel::A2).cartan,
            vec![vec![2, -1], vec![-1, 2]]
        );
        assert_eq!(
            build_root_datum(TypeLabel::B2).cartan,
            vec![vec![2, -1], vec![-2, 2]]
        );
        assert!(build_root_datum_from_str("A3").is_err());
    }

    /// Brute-force closure oracle: saturate the candidate set under root
    /// addition chains instead of reflections.
    fn root_string_closure(rd: &RootDatum) -> Vec<RootVec> {
        let mut roots: Vec<RootVec> = (0..rd.rank)
            .map(|i| {
                let mut v = vec![0i64; rd.rank];
                v[i] = 1;
                RootVec(v)
            })
            .collect();
        // A vector is a root iff it appears in some root string; at rank 2 it
        // is enough to add simple roots while the reflection test passes.
        let mut changed = true;
        while changed {
            changed = false;
            let snapshot = roots.clone();
            for beta in &snapshot {
                for i in 0..rd.rank {
                    let mut cand = beta.0.clone();
                    cand[i] += 1;
                    let cand = RootVec(cand);
                    if roots.contains(&cand) {
                        continue;
                    }
                    // beta + alpha_i is a root iff <beta, alpha_i^vee> < p+1
                    // where p is the largest k with beta - k alpha_i a root.
                    let mut p = 0i64;
                    loop {
                        let mut down = beta.0.clone();
                        down[i] -= p + 1;
                        let down = RootVec(down);
                        if down.is_nonnegative() && roots.contains(&down) {
                            p += 1;
                        } else {
                            break;
                        }
                    }
                    let pairing = rd.root_to_fund(beta).0[i];
                    if pairing - p < 0 {
                        roots.push(cand);
                        changed = true;
                    }
                }
            }
        }
        roots.sort_by_key(|b| (b.height(), b.0.clone()));
        roots
    }

    #[test]
    fn positive_root_counts_match_closure_oracle() {
        for (label, count) in [(TypeLabel::A1, 1), (TypeLabel::A2, 3), (TypeLabel::B2, 4)] {
            let rd = build_root_datum(label);
            let roots = rd.positive_roots();
            assert_eq!(roots.len(), count, "{label}");
            assert_eq!(roots, root_string_closure(&rd), "{label}");
        }
    }

    #[test]
    fn a2_positive_roots_are_the_expected_three() {
        let rd = build_root_datum(TypeLabel::A2);
        let roots = rd.positive_roots();
        assert!(roots.contains(&RootVec(vec![1, 0])));
        assert!(roots.contains(&RootVec(vec![0, 1])));
        assert!(roots.contains(&RootVec(vec![1, 1])));
    }

    #[test]
    fn sum_of_positive_roots_is_two_rho() {
        for label in [TypeLabel::A1, TypeLabel::A2, TypeLabel::B2] {
            let rd = build_root_datum(label);
            let mut total = RootVec::zero(rd.rank);
            for beta in rd.positive_roots() {
                total = total.add(&beta);
            }
            assert_eq!(rd.root_to_fund(&total), rd.rho().scale(2), "{label}");
        }
    }

    #[test]
    fn regular_dominant_examples() {
        let a1 = build_root_datum(TypeLabel::A1);
        assert!(a1.is_regular_dominant(&Weight(vec![2])));
        assert!(!a1.is_regular_dominant(&Weight(vec![-1])));
        let a2 = build_root_datum(TypeLabel::A2);
        assert!(a2.is_regular_dominant(&Weight(vec![1, 0])));
        assert!(a2.is_regular_dominant(&Weight(vec![0, 0])));
        assert!(!a2.is_regular_dominant(&Weight(vec![-1, 0])));
    }

    #[test]
    fn weyl_dimensions() {
        let a1 = build_root_datum(TypeLabel::A1);
        assert_eq!(a1.weyl_dimension(&Weight(vec![2])), 3);
        let a2 = build_root_datum(TypeLabel::A2);
        assert_eq!(a2.weyl_dimension(&Weight(vec![1, 0])), 3);
        assert_eq!(a2.weyl_dimension(&Weight(vec![1, 1])), 8);
        let b2 = build_root_datum(TypeLabel::B2);
        assert_eq!(b2.weyl_dimension(&Weight(vec![0, 0])), 1);
    }
}
