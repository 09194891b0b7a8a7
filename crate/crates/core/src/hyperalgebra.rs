//! The Kostant integral form of U(g) at rank <= 2, computed through an exact
//! rational PBW straightening engine.
//!
//! Internally every element is a rational combination of ordered monomials
//! in the Chevalley generators (ordinary powers). Divided powers enter
//! through explicit factorial normalizations, and integrality of the
//! divided-power structure constants is asserted rather than assumed: a
//! denominator surviving a product of integral elements is a bug.
//!
//! Slots may be marked "localized", allowing negative exponents of the
//! corresponding negative root vector. Crossing a localized power uses the
//! finite adjoint series
//!     f^{-1} u = sum_k (-1)^k ad_f^k(u) f^{-k-1},
//!     u f^{-1} = sum_k f^{-k-1} ad_f^k(u),
//! which terminate because ad_f is locally nilpotent.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::Serialize;

use crate::chevalley::{Chevalley, Gen};
use crate::error::{Error, Result};
use crate::rootdata::Weight;
use crate::scalar::{factorial, rat_is_integer, rat_to_bigint, FieldKind};

/// Exponent vector aligned with the engine's slot order. Negative exponents
/// are only ever stored at localized slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono(pub Vec<i32>);

impl Mono {
    pub fn unit(n: usize) -> Mono {
        Mono(vec![0; n])
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn first_slot(&self) -> Option<usize> {
        self.0.iter().position(|&e| e != 0)
    }

    fn last_slot(&self) -> Option<usize> {
        self.0.iter().rposition(|&e| e != 0)
    }
}

/// Rational combination of normal-ordered monomials.
pub type Elem = BTreeMap<Mono, BigRational>;

pub fn elem_zero() -> Elem {
    BTreeMap::new()
}

pub fn elem_unit(n: usize) -> Elem {
    let mut e = elem_zero();
    e.insert(Mono::unit(n), BigRational::one());
    e
}

pub fn elem_add_assign(a: &mut Elem, b: &Elem) {
    for (m, c) in b {
        let entry = a.entry(m.clone()).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            a.remove(m);
        }
    }
}

pub fn elem_scale(a: &Elem, k: &BigRational) -> Elem {
    if k.is_zero() {
        return elem_zero();
    }
    a.iter().map(|(m, c)| (m.clone(), c * k)).collect()
}

/// PBW straightening engine for one slot order over one Chevalley basis.
pub struct Engine {
    pub chev: Arc<Chevalley>,
    /// Normal form lists generators in this order, left to right.
    pub slots: Vec<Gen>,
    pub localized: Vec<bool>,
    slot_of: HashMap<Gen, usize>,
    memo_left: RefCell<HashMap<(usize, i32, Mono), Elem>>,
    memo_right: RefCell<HashMap<(Mono, usize, i32), Elem>>,
}

/// Standard order: negative root vectors in convex order, then the Cartan,
/// then positive root vectors in convex order.
pub fn standard_slots(chev: &Chevalley) -> Vec<Gen> {
    let mut slots: Vec<Gen> = (0..chev.num_pos_roots()).map(Gen::F).collect();
    slots.extend((0..chev.rank()).map(Gen::H));
    slots.extend((0..chev.num_pos_roots()).map(Gen::E));
    slots
}

impl Engine {
    pub fn new(chev: Arc<Chevalley>) -> Engine {
        let slots = standard_slots(&chev);
        let localized = vec![false; slots.len()];
        Engine::with_slots(chev, slots, localized)
    }

    pub fn with_slots(chev: Arc<Chevalley>, slots: Vec<Gen>, localized: Vec<bool>) -> Engine {
        assert_eq!(slots.len(), localized.len());
        for (k, g) in slots.iter().enumerate() {
            if localized[k] {
                assert!(matches!(g, Gen::F(_)), "only negative root vectors localize");
            }
        }
        let slot_of = slots.iter().enumerate().map(|(k, g)| (*g, k)).collect();
        Engine {
            chev,
            slots,
            localized,
            slot_of,
            memo_left: RefCell::new(HashMap::new()),
            memo_right: RefCell::new(HashMap::new()),
        }
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_of(&self, g: Gen) -> usize {
        self.slot_of[&g]
    }

    pub fn unit(&self) -> Elem {
        elem_unit(self.n_slots())
    }

    pub fn gen_elem(&self, g: Gen) -> Elem {
        let mut m = Mono::unit(self.n_slots());
        m.0[self.slot_of(g)] = 1;
        let mut e = elem_zero();
        e.insert(m, BigRational::one());
        e
    }

    /// Ambient weight added by a monomial.
    pub fn mono_weight(&self, m: &Mono) -> Weight {
        let mut w = Weight::zero(self.chev.rank());
        for (k, &e) in m.0.iter().enumerate() {
            if e != 0 {
                w = w.add(&self.chev.gen_weight(self.slots[k]).scale(e as i64));
            }
        }
        w
    }

    /// gen(slots[s])^{step} * m, normal ordered. `step` is +1, or -1 at a
    /// localized slot.
    pub fn mul_gen_left(&self, s: usize, step: i32, m: &Mono) -> Elem {
        debug_assert!(step == 1 || (step == -1 && self.localized[s]));
        if let Some(hit) = self.memo_left.borrow().get(&(s, step, m.clone())) {
            return hit.clone();
        }
        let result = self.mul_gen_left_inner(s, step, m);
        self.memo_left
            .borrow_mut()
            .insert((s, step, m.clone()), result.clone());
        result
    }

    fn mul_gen_left_inner(&self, s: usize, step: i32, m: &Mono) -> Elem {
        let first = match m.first_slot() {
            None => {
                let mut out = m.clone();
                out.0[s] = step;
                let mut e = elem_zero();
                e.insert(out, BigRational::one());
                return e;
            }
            Some(f) => f,
        };
        if s <= first {
            let mut out = m.clone();
            out.0[s] += step;
            let mut e = elem_zero();
            e.insert(out, BigRational::one());
            return e;
        }
        // Peel the head generator.
        let head_exp = m.0[first];
        let mut rest = m.clone();
        let x = self.slots[s];
        let y = self.slots[first];
        if head_exp > 0 {
            rest.0[first] -= 1;
            if step == 1 {
                // x y rest = y (x rest) + [x, y] rest
                let xr = self.mul_gen_left(s, 1, &rest);
                let mut acc = self.mul_slot_left_elem(first, 1, &xr);
                for (z, c) in self.chev.bracket(x, y) {
                    let term = self.mul_gen_left(self.slot_of(*z), 1, &rest);
                    elem_add_assign(&mut acc, &elem_scale(&term, &rat_int(*c)));
                }
                acc
            } else {
                // f^{-1} (y rest) = sum_k (-1)^k ad_f^k(y) (f^{-k-1} rest)
                let f_gen = x;
                let mut acc = elem_zero();
                let mut ad_terms: Vec<(Gen, BigRational)> =
                    vec![(y, BigRational::one())];
                let mut k = 0usize;
                loop {
                    let mut tail = rest.clone();
                    // f^{-k-1} rest, built by repeated localized prepends
                    let mut tail_elem = {
                        let mut e = elem_zero();
                        e.insert(tail.clone(), BigRational::one());
                        e
                    };
                    for _ in 0..=k {
                        tail_elem = self.mul_slot_left_elem_signed(s, -1, &tail_elem);
                    }
                    let sign = if k % 2 == 0 {
                        BigRational::one()
                    } else {
                        -BigRational::one()
                    };
                    for (z, c) in &ad_terms {
                        let zs = self.slot_of(*z);
                        let mut part = elem_zero();
                        for (mm, cc) in &tail_elem {
                            let t = self.mul_gen_left(zs, 1, mm);
                            elem_add_assign(&mut part, &elem_scale(&t, cc));
                        }
                        elem_add_assign(&mut acc, &elem_scale(&part, &(c * &sign)));
                    }
                    // advance ad_f
                    let next = self.ad_once(f_gen, &ad_terms);
                    if next.is_empty() {
                        break;
                    }
                    ad_terms = next;
                    k += 1;
                    tail.0[first] += 0; // no-op, keeps borrowck simple
                    if k > 64 {
                        panic!("adjoint series failed to terminate");
                    }
                }
                acc
            }
        } else {
            // Head is a localized inverse power: peel one f_loc^{-1}.
            rest.0[first] += 1;
            let f_gen = y;
            if step == 1 {
                // x f^{-1} rest = sum_k f^{-k-1} ad_f^k(x) rest
                let mut acc = elem_zero();
                let mut ad_terms: Vec<(Gen, BigRational)> = vec![(x, BigRational::one())];
                let mut k = 0usize;
                loop {
                    let mut inner = elem_zero();
                    for (z, c) in &ad_terms {
                        let t = self.mul_gen_left(self.slot_of(*z), 1, &rest);
                        elem_add_assign(&mut inner, &elem_scale(&t, c));
                    }
                    for _ in 0..=k {
                        inner = self.mul_slot_left_elem_signed(first, -1, &inner);
                    }
                    elem_add_assign(&mut acc, &inner);
                    let next = self.ad_once(f_gen, &ad_terms);
                    if next.is_empty() {
                        break;
                    }
                    ad_terms = next;
                    k += 1;
                    if k > 64 {
                        panic!("adjoint series failed to terminate");
                    }
                }
                acc
            } else {
                // Both localized inverses; supported only when they commute.
                let br = self.chev.bracket(x, f_gen);
                assert!(
                    br.is_empty(),
                    "localized generators must commute ({x:?}, {f_gen:?})"
                );
                let inner = self.mul_gen_left(s, -1, &rest);
                self.mul_slot_left_elem_signed(first, -1, &inner)
            }
        }
    }

    fn ad_once(&self, f: Gen, terms: &[(Gen, BigRational)]) -> Vec<(Gen, BigRational)> {
        let mut acc: BTreeMap<Gen, BigRational> = BTreeMap::new();
        for (z, c) in terms {
            for (w, k) in self.chev.bracket(f, *z) {
                let entry = acc.entry(*w).or_insert_with(BigRational::zero);
                *entry += c * rat_int(*k);
            }
        }
        acc.retain(|_, v| !v.is_zero());
        acc.into_iter().collect()
    }

    fn mul_slot_left_elem(&self, s: usize, step: i32, e: &Elem) -> Elem {
        self.mul_slot_left_elem_signed(s, step, e)
    }

    fn mul_slot_left_elem_signed(&self, s: usize, step: i32, e: &Elem) -> Elem {
        let mut acc = elem_zero();
        for (m, c) in e {
            let t = self.mul_gen_left(s, step, m);
            elem_add_assign(&mut acc, &elem_scale(&t, c));
        }
        acc
    }

    /// m * gen(slots[s])^{step}, normal ordered.
    pub fn mul_gen_right(&self, m: &Mono, s: usize, step: i32) -> Elem {
        debug_assert!(step == 1 || (step == -1 && self.localized[s]));
        if let Some(hit) = self.memo_right.borrow().get(&(m.clone(), s, step)) {
            return hit.clone();
        }
        let result = self.mul_gen_right_inner(m, s, step);
        self.memo_right
            .borrow_mut()
            .insert((m.clone(), s, step), result.clone());
        result
    }

    fn mul_gen_right_inner(&self, m: &Mono, s: usize, step: i32) -> Elem {
        let last = match m.last_slot() {
            None => {
                let mut out = m.clone();
                out.0[s] = step;
                let mut e = elem_zero();
                e.insert(out, BigRational::one());
                return e;
            }
            Some(l) => l,
        };
        if s >= last {
            let mut out = m.clone();
            out.0[s] += step;
            let mut e = elem_zero();
            e.insert(out, BigRational::one());
            return e;
        }
        let tail_exp = m.0[last];
        let mut rest = m.clone();
        let x = self.slots[s];
        let y = self.slots[last];
        if tail_exp > 0 {
            rest.0[last] -= 1;
            if step == 1 {
                // rest y x = (rest x) y + rest [y, x]
                let rx = self.mul_gen_right(&rest, s, 1);
                let mut acc = self.mul_elem_gen_right(&rx, last, 1);
                for (z, c) in self.chev.bracket(y, x) {
                    let term = self.mul_gen_right(&rest, self.slot_of(*z), 1);
                    elem_add_assign(&mut acc, &elem_scale(&term, &rat_int(*c)));
                }
                acc
            } else {
                // rest y f^{-1} = sum_k (rest f^{-k-1}) ad_f^k(y)
                let f_gen = x;
                let mut acc = elem_zero();
                let mut ad_terms: Vec<(Gen, BigRational)> = vec![(y, BigRational::one())];
                let mut k = 0usize;
                loop {
                    let mut inner = {
                        let mut e = elem_zero();
                        e.insert(rest.clone(), BigRational::one());
                        e
                    };
                    for _ in 0..=k {
                        inner = self.mul_elem_gen_right(&inner, s, -1);
                    }
                    let mut part = elem_zero();
                    for (z, c) in &ad_terms {
                        let t = self.mul_elem_gen_right(&inner, self.slot_of(*z), 1);
                        elem_add_assign(&mut part, &elem_scale(&t, c));
                    }
                    elem_add_assign(&mut acc, &part);
                    let next = self.ad_once(f_gen, &ad_terms);
                    if next.is_empty() {
                        break;
                    }
                    ad_terms = next;
                    k += 1;
                    if k > 64 {
                        panic!("adjoint series failed to terminate");
                    }
                }
                acc
            }
        } else {
            // Tail is f_loc^{-1}.
            rest.0[last] += 1;
            let f_gen = y;
            if step == 1 {
                // rest f^{-1} x = sum_k (-1)^k (rest ad_f^k(x)) f^{-k-1}
                let mut acc = elem_zero();
                let mut ad_terms: Vec<(Gen, BigRational)> = vec![(x, BigRational::one())];
                let mut k = 0usize;
                loop {
                    let sign = if k % 2 == 0 {
                        BigRational::one()
                    } else {
                        -BigRational::one()
                    };
                    let mut inner = elem_zero();
                    for (z, c) in &ad_terms {
                        let t = self.mul_gen_right(&rest, self.slot_of(*z), 1);
                        elem_add_assign(&mut inner, &elem_scale(&t, &(c * &sign)));
                    }
                    for _ in 0..=k {
                        inner = self.mul_elem_gen_right(&inner, last, -1);
                    }
                    elem_add_assign(&mut acc, &inner);
                    let next = self.ad_once(f_gen, &ad_terms);
                    if next.is_empty() {
                        break;
                    }
                    ad_terms = next;
                    k += 1;
                    if k > 64 {
                        panic!("adjoint series failed to terminate");
                    }
                }
                acc
            } else {
                let br = self.chev.bracket(x, f_gen);
                assert!(br.is_empty(), "localized generators must commute");
                let inner = self.mul_gen_right(&rest, s, -1);
                self.mul_elem_gen_right(&inner, last, -1)
            }
        }
    }

    pub fn mul_elem_gen_right(&self, e: &Elem, s: usize, step: i32) -> Elem {
        let mut acc = elem_zero();
        for (m, c) in e {
            let t = self.mul_gen_right(m, s, step);
            elem_add_assign(&mut acc, &elem_scale(&t, c));
        }
        acc
    }

    pub fn mul_elem_gen_left(&self, s: usize, step: i32, e: &Elem) -> Elem {
        self.mul_slot_left_elem_signed(s, step, e)
    }

    /// Full product a * b.
    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        let mut acc = elem_zero();
        for (mb, cb) in b {
            // a * mb: feed mb's generators left to right.
            let mut cur = elem_scale(a, cb);
            for (slot, &exp) in mb.0.iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                let step = if exp > 0 { 1 } else { -1 };
                for _ in 0..exp.abs() {
                    cur = self.mul_elem_gen_right(&cur, slot, step);
                }
            }
            elem_add_assign(&mut acc, &cur);
        }
        acc
    }

    /// x^n * m with the ordinary power (no divided normalization).
    pub fn pow_left(&self, g: Gen, n: u32, m: &Mono) -> Elem {
        let s = self.slot_of(g);
        let mut cur = {
            let mut e = elem_zero();
            e.insert(m.clone(), BigRational::one());
            e
        };
        for _ in 0..n {
            cur = self.mul_slot_left_elem(s, 1, &cur);
        }
        cur
    }

    /// Least m with ad_x^m(y) = 0.
    pub fn adjoint_nilpotency_degree(&self, x: Gen, y: &Elem, bound: u32) -> Result<u32> {
        let xe = self.gen_elem(x);
        let mut cur = y.clone();
        let mut m = 0u32;
        while !cur.is_empty() {
            if m >= bound {
                return Err(Error::TruncationBound(format!(
                    "ad^{bound} still nonzero"
                )));
            }
            let left = self.mul(&xe, &cur);
            let mut right = self.mul(&cur, &xe);
            for v in right.values_mut() {
                *v = -&*v;
            }
            let mut next = left;
            elem_add_assign(&mut next, &right);
            cur = next;
            m += 1;
        }
        Ok(m)
    }
}

fn rat_int(c: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(c))
}

// --- Kostant divided-power basis -----------------------------------------

/// Monomial of the Kostant Z-form: divided powers of the negative root
/// vectors, Cartan binomials, divided powers of the positive root vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PBWMonomial {
    pub f: Vec<u32>,
    pub h: Vec<u32>,
    pub e: Vec<u32>,
}

impl PBWMonomial {
    pub fn one(chev: &Chevalley) -> PBWMonomial {
        PBWMonomial {
            f: vec![0; chev.num_pos_roots()],
            h: vec![0; chev.rank()],
            e: vec![0; chev.num_pos_roots()],
        }
    }

    /// Height used by the truncation bound: root heights weight the divided
    /// powers, Cartan binomial degrees count once each.
    pub fn height(&self, chev: &Chevalley) -> i64 {
        let mut total = 0i64;
        for (k, &a) in self.f.iter().enumerate() {
            total += a as i64 * chev.pos_roots[k].height();
        }
        for (k, &b) in self.e.iter().enumerate() {
            total += b as i64 * chev.pos_roots[k].height();
        }
        total += self.h.iter().map(|&c| c as i64).sum::<i64>();
        total
    }
}

/// Element of the hyperalgebra in the divided-power basis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AlgebraElement {
    pub terms: BTreeMap<PBWMonomial, BigRational>,
}

impl AlgebraElement {
    pub fn generator(chev: &Chevalley, g: Gen, power: u32) -> AlgebraElement {
        let mut mono = PBWMonomial::one(chev);
        match g {
            Gen::F(k) => mono.f[k] = power,
            Gen::H(i) => mono.h[i] = power,
            Gen::E(k) => mono.e[k] = power,
        }
        let mut terms = BTreeMap::new();
        terms.insert(mono, BigRational::one());
        AlgebraElement { terms }
    }

    pub fn scale(&self, k: &BigRational) -> AlgebraElement {
        AlgebraElement {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c * k))
                .collect(),
        }
    }

    pub fn is_integral(&self) -> bool {
        self.terms.values().all(rat_is_integer)
    }

    pub fn max_height(&self, chev: &Chevalley) -> i64 {
        self.terms
            .keys()
            .map(|m| m.height(chev))
            .max()
            .unwrap_or(0)
    }

    /// JSON form: a list of {f, h, e, coeff} with exact coefficient strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.terms
                .iter()
                .map(|(m, c)| {
                    serde_json::json!({
                        "f": m.f, "h": m.h, "e": m.e, "coeff": c.to_string(),
                    })
                })
                .collect(),
        )
    }
}

/// Coefficients of binomial(X; c) = X (X-1) ... (X-c+1) / c! as a polynomial
/// in X (index = power of X).
fn binomial_poly(c: u32) -> Vec<BigRational> {
    let mut coeffs = vec![BigRational::one()];
    for j in 0..c as i64 {
        // multiply by (X - j)
        let mut next = vec![BigRational::zero(); coeffs.len() + 1];
        for (k, a) in coeffs.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * rat_int(j);
        }
        coeffs = next;
    }
    let cf = BigRational::from_integer(factorial(c));
    coeffs.into_iter().map(|a| a / &cf).collect()
}

/// Stirling numbers of the second kind, S(n, k).
fn stirling2(n: u32, k: u32) -> BigInt {
    if n == 0 && k == 0 {
        return BigInt::one();
    }
    if k == 0 || k > n {
        return BigInt::zero();
    }
    // S(n, k) = k S(n-1, k) + S(n-1, k-1)
    let mut row = vec![BigInt::zero(); (n + 1) as usize];
    row[0] = BigInt::one();
    for _ in 1..=n {
        let mut next = vec![BigInt::zero(); (n + 1) as usize];
        for j in 1..=(n as usize) {
            next[j] = BigInt::from(j as u64) * &row[j] + &row[j - 1];
        }
        row = next;
        row[0] = BigInt::zero();
    }
    row[k as usize].clone()
}

/// Convert a divided-power element to the engine's ordinary basis.
pub fn divided_to_ordinary(engine: &Engine, x: &AlgebraElement) -> Elem {
    let chev = &engine.chev;
    let mut out = elem_zero();
    for (mono, coeff) in &x.terms {
        // Expand the Cartan binomials into powers of H.
        // Start with the pure F/E skeleton and the factorial normalizations.
        let mut skeleton = Mono::unit(engine.n_slots());
        let mut norm = coeff.clone();
        for (k, &a) in mono.f.iter().enumerate() {
            skeleton.0[engine.slot_of(Gen::F(k))] = a as i32;
            norm /= BigRational::from_integer(factorial(a));
        }
        for (k, &b) in mono.e.iter().enumerate() {
            skeleton.0[engine.slot_of(Gen::E(k))] = b as i32;
            norm /= BigRational::from_integer(factorial(b));
        }
        // Multiply in the H-binomial expansions.
        let mut parts: Vec<(Vec<i32>, BigRational)> = vec![(vec![0; chev.rank()], norm)];
        for (i, &c) in mono.h.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let poly = binomial_poly(c);
            let mut next = Vec::new();
            for (hexps, pc) in &parts {
                for (pow, a) in poly.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    let mut he = hexps.clone();
                    he[i] += pow as i32;
                    next.push((he, pc * a));
                }
            }
            parts = next;
        }
        for (hexps, pc) in parts {
            let mut m = skeleton.clone();
            for (i, &p) in hexps.iter().enumerate() {
                m.0[engine.slot_of(Gen::H(i))] = p;
            }
            let entry = out.entry(m).or_insert_with(BigRational::zero);
            *entry += pc;
            if entry.is_zero() {
                out.remove(&{
                    let mut mm = skeleton.clone();
                    for (i, &p) in hexps.iter().enumerate() {
                        mm.0[engine.slot_of(Gen::H(i))] = p;
                    }
                    mm
                });
            }
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// Convert an ordinary-basis element back to the divided-power basis.
pub fn ordinary_to_divided(engine: &Engine, x: &Elem) -> AlgebraElement {
    let chev = &engine.chev;
    let mut out: BTreeMap<PBWMonomial, BigRational> = BTreeMap::new();
    for (mono, coeff) in x {
        // factor: F and E parts pick up factorials, H powers expand in the
        // binomial basis via Stirling numbers.
        let mut base = PBWMonomial::one(chev);
        let mut norm = coeff.clone();
        let mut hexps = vec![0u32; chev.rank()];
        for (slot, &e) in mono.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            match engine.slots[slot] {
                Gen::F(k) => {
                    assert!(e > 0, "divided basis cannot hold localized powers");
                    base.f[k] = e as u32;
                    norm *= BigRational::from_integer(factorial(e as u32));
                }
                Gen::E(k) => {
                    base.e[k] = e as u32;
                    norm *= BigRational::from_integer(factorial(e as u32));
                }
                Gen::H(i) => hexps[i] = e as u32,
            }
        }
        // H^n = sum_c S(n, c) c! binom(H; c), independently per Cartan slot.
        let mut parts: Vec<(Vec<u32>, BigRational)> = vec![(vec![0; chev.rank()], norm)];
        for (i, &n) in hexps.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let mut next = Vec::new();
            for (hs, pc) in &parts {
                for c in 0..=n {
                    let s = stirling2(n, c);
                    if s.is_zero() {
                        continue;
                    }
                    let factor = BigRational::from_integer(s * factorial(c));
                    let mut h2 = hs.clone();
                    h2[i] = c;
                    next.push((h2, pc * factor));
                }
            }
            parts = next;
        }
        for (hs, pc) in parts {
            let mut m = base.clone();
            m.h = hs;
            let entry = out.entry(m).or_insert_with(BigRational::zero);
            *entry += pc;
        }
    }
    out.retain(|_, v| !v.is_zero());
    AlgebraElement { terms: out }
}

/// Product in the divided-power basis with PBW normal form and the height
/// guard of the truncation bound.
pub fn divided_product(
    engine: &Engine,
    x: &AlgebraElement,
    y: &AlgebraElement,
    bound: i64,
) -> Result<AlgebraElement> {
    let chev = &engine.chev;
    let h = x.max_height(chev) + y.max_height(chev);
    if h > bound {
        return Err(Error::TruncationBound(format!(
            "product height {h} exceeds bound {bound}"
        )));
    }
    let a = divided_to_ordinary(engine, x);
    let b = divided_to_ordinary(engine, y);
    let prod = engine.mul(&a, &b);
    let result = ordinary_to_divided(engine, &prod);
    if x.is_integral() && y.is_integral() && !result.is_integral() {
        return Err(Error::Inconsistency(
            "divided-power product of integral elements has a denominator".into(),
        ));
    }
    Ok(result)
}

/// Reduce integer coefficients into the requested field of scalars.
pub fn specialize(x: &AlgebraElement, kind: FieldKind) -> Result<AlgebraElement> {
    if !x.is_integral() {
        return Err(Error::Domain(
            "specialize needs integer coefficients".into(),
        ));
    }
    match kind {
        FieldKind::Q => Ok(x.clone()),
        FieldKind::Fp(p) => {
            let p_big = BigInt::from(p);
            let mut terms = BTreeMap::new();
            for (m, c) in &x.terms {
                let mut r = rat_to_bigint(c)? % &p_big;
                if r.is_negative() {
                    r += &p_big;
                }
                if !r.is_zero() {
                    terms.insert(m.clone(), BigRational::from_integer(r));
                }
            }
            Ok(AlgebraElement { terms })
        }
    }
}

/// Least m with ad_x^m(y) = 0 for a single Chevalley generator x.
pub fn adjoint_nilpotency_degree(
    engine: &Engine,
    x: Gen,
    y: &AlgebraElement,
    bound: u32,
) -> Result<u32> {
    let ye = divided_to_ordinary(engine, y);
    engine.adjoint_nilpotency_degree(x, &ye, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootdata::TypeLabel;
    use crate::scalar::binomial_int;

    fn sl2_engine() -> Engine {
        Engine::new(Chevalley::new(TypeLabel::A1))
    }

    fn gen1(engine: &Engine, g: Gen, n: u32) -> AlgebraElement {
        AlgebraElement::generator(&engine.chev, g, n)
    }

    #[test]
    fn sl2_ef_commutation() {
        let e = sl2_engine();
        // E F = F E + H
        let ef = e.mul(&e.gen_elem(Gen::E(0)), &e.gen_elem(Gen::F(0)));
        let mut expected = e.mul(&e.gen_elem(Gen::F(0)), &e.gen_elem(Gen::E(0)));
        elem_add_assign(&mut expected, &e.gen_elem(Gen::H(0)));
        assert_eq!(ef, expected);
    }

    #[test]
    fn divided_power_product_rule() {
        let e = sl2_engine();
        // F^(1) F^(1) = 2 F^(2)
        let f1 = gen1(&e, Gen::F(0), 1);
        let prod = divided_product(&e, &f1, &f1, 10).unwrap();
        let mut expect = PBWMonomial::one(&e.chev);
        expect.f[0] = 2;
        assert_eq!(prod.terms.len(), 1);
        assert_eq!(prod.terms[&expect], rat_int(2));
    }

    #[test]
    fn kostant_commutation_formula_sl2() {
        // E^(a) F^(b) = sum_j F^(b-j) binom(H - a - b + 2j; j) E^(a-j)
        let e = sl2_engine();
        for a in 1..=4u32 {
            for b in 1..=4u32 {
                let lhs = divided_product(
                    &e,
                    &gen1(&e, Gen::E(0), a),
                    &gen1(&e, Gen::F(0), b),
                    40,
                )
                .unwrap();
                let lhs_ord = divided_to_ordinary(&e, &lhs);
                let mut rhs_ord = elem_zero();
                for j in 0..=a.min(b) {
                    // binom(H + 2j - a - b; j) as a polynomial in H
                    let shift = 2 * j as i64 - a as i64 - b as i64;
                    let mut pieces = vec![(0u32, BigRational::one())];
                    // product_{t=0}^{j-1} (H + shift - t) / j!
                    let mut poly = vec![BigRational::one()];
                    for t in 0..j as i64 {
                        let mut next = vec![BigRational::zero(); poly.len() + 1];
                        for (k, cc) in poly.iter().enumerate() {
                            next[k + 1] += cc;
                            next[k] += cc * rat_int(shift - t);
                        }
                        poly = next;
                    }
                    let jf = BigRational::from_integer(factorial(j));
                    pieces.clear();
                    for (k, cc) in poly.iter().enumerate() {
                        pieces.push((k as u32, cc / &jf));
                    }
                    for (hpow, coeff) in pieces {
                        if coeff.is_zero() {
                            continue;
                        }
                        let mut mono = Mono::unit(e.n_slots());
                        mono.0[e.slot_of(Gen::F(0))] = (b - j) as i32;
                        mono.0[e.slot_of(Gen::H(0))] = hpow as i32;
                        mono.0[e.slot_of(Gen::E(0))] = (a - j) as i32;
                        let norm = coeff
                            / BigRational::from_integer(factorial(b - j))
                            / BigRational::from_integer(factorial(a - j));
                        let entry = rhs_ord.entry(mono).or_insert_with(BigRational::zero);
                        *entry += norm;
                    }
                }
                rhs_ord.retain(|_, v| !v.is_zero());
                assert_eq!(lhs_ord, rhs_ord, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn integrality_of_divided_products() {
        for label in [TypeLabel::A1, TypeLabel::A2, TypeLabel::B2] {
            let e = Engine::new(Chevalley::new(label));
            let gens: Vec<AlgebraElement> = e
                .chev
                .all_gens()
                .into_iter()
                .flat_map(|g| (1..=3).map(move |n| (g, n)))
                .map(|(g, n)| AlgebraElement::generator(&e.chev, g, n))
                .collect();
            for x in &gens {
                for y in &gens {
                    let p = divided_product(&e, x, y, 60).unwrap();
                    assert!(p.is_integral(), "{label}: {x:?} * {y:?}");
                }
            }
        }
    }

    #[test]
    fn associativity_on_random_monomial_triples() {
        // Deterministic pseudo-random triples over A2 and B2.
        for label in [TypeLabel::A2, TypeLabel::B2] {
            let e = Engine::new(Chevalley::new(label));
            let gens = e.chev.all_gens();
            let mut seed = 0x9e3779b97f4a7c15u64;
            let mut next = || {
                seed ^= seed << 13;
                seed ^= seed >> 7;
                seed ^= seed << 17;
                seed as usize
            };
            for _ in 0..12 {
                let pick = |n: &mut dyn FnMut() -> usize| {
                    let g = gens[n() % gens.len()];
                    let p = (n() % 2 + 1) as u32;
                    AlgebraElement::generator(&e.chev, g, p)
                };
                let x = pick(&mut next);
                let y = pick(&mut next);
                let z = pick(&mut next);
                let xy_z = divided_product(&e, &divided_product(&e, &x, &y, 60).unwrap(), &z, 60)
                    .unwrap();
                let x_yz = divided_product(&e, &x, &divided_product(&e, &y, &z, 60).unwrap(), 60)
                    .unwrap();
                assert_eq!(xy_z, x_yz, "{label}");
            }
        }
    }

    #[test]
    fn specialization_examples() {
        let e = sl2_engine();
        // 2 F^(2) over F_2 is zero
        let f2 = gen1(&e, Gen::F(0), 2).scale(&rat_int(2));
        let spec = specialize(&f2, FieldKind::Fp(2)).unwrap();
        assert!(spec.terms.is_empty());
        // p F^(p) over F_p is zero while F^(p) is not
        let f3 = gen1(&e, Gen::F(0), 3);
        let spec3 = specialize(&f3.scale(&rat_int(3)), FieldKind::Fp(3)).unwrap();
        assert!(spec3.terms.is_empty());
        let kept = specialize(&f3, FieldKind::Fp(3)).unwrap();
        assert_eq!(kept.terms.len(), 1);
        // identity over Q
        let e3 = gen1(&e, Gen::E(0), 1).scale(&rat_int(3));
        assert_eq!(specialize(&e3, FieldKind::Q).unwrap(), e3);
    }

    #[test]
    fn adjoint_nilpotency_sl2() {
        let e = sl2_engine();
        let deg = |x: Gen, y: Gen| {
            adjoint_nilpotency_degree(&e, x, &gen1(&e, y, 1), 16).unwrap()
        };
        assert_eq!(deg(Gen::F(0), Gen::E(0)), 3);
        assert_eq!(deg(Gen::F(0), Gen::F(0)), 1);
        assert_eq!(deg(Gen::F(0), Gen::H(0)), 2);
    }

    #[test]
    fn localized_crossing_matches_sl2_formula() {
        // In U(sl2)_(F): E F^{-1} = F^{-1} E - F^{-2} (H + 2).
        let chev = Chevalley::new(TypeLabel::A1);
        let slots = standard_slots(&chev);
        let localized = vec![true, false, false];
        let e = Engine::with_slots(chev, slots, localized);
        let mut fm1 = Mono::unit(3);
        fm1.0[0] = -1;
        let lhs = e.mul_gen_left(e.slot_of(Gen::E(0)), 1, &fm1);

        let mut expected = elem_zero();
        let mut m1 = Mono::unit(3);
        m1.0[0] = -1;
        m1.0[2] = 1; // F^{-1} E
        expected.insert(m1, BigRational::one());
        let mut m2 = Mono::unit(3);
        m2.0[0] = -2;
        m2.0[1] = 1; // -F^{-2} H
        expected.insert(m2, -BigRational::one());
        let mut m3 = Mono::unit(3);
        m3.0[0] = -2; // -2 F^{-2}
        expected.insert(m3, rat_int(-2));
        assert_eq!(lhs, expected);
    }

    #[test]
    fn localized_left_and_right_series_agree_with_direct_products() {
        // (E * F^{-1}) * F = E  and  F * (F^{-1} * E) = E in the localization.
        let chev = Chevalley::new(TypeLabel::A1);
        let slots = standard_slots(&chev);
        let e = Engine::with_slots(chev, slots, vec![true, false, false]);
        let ee = e.gen_elem(Gen::E(0));
        let finv = {
            let mut m = Mono::unit(3);
            m.0[0] = -1;
            let mut el = elem_zero();
            el.insert(m, BigRational::one());
            el
        };
        let ef_inv = e.mul(&ee, &finv);
        let back = e.mul(&ef_inv, &e.gen_elem(Gen::F(0)));
        assert_eq!(back, ee);
        let finv_e = e.mul(&finv, &ee);
        let back2 = e.mul(&e.gen_elem(Gen::F(0)), &finv_e);
        assert_eq!(back2, ee);
    }

    #[test]
    fn verma_action_via_engine_matches_closed_form() {
        // E^(a) F^(b) v = binom(lam + a - b, a) F^(b-a) v on a Verma of
        // highest weight lam.
        let e = sl2_engine();
        for lam in [-2i64, 0, 1, 4] {
            for a in 1..=3u32 {
                for b in a..=5u32 {
                    let prod = divided_product(
                        &e,
                        &gen1(&e, Gen::E(0), a),
                        &gen1(&e, Gen::F(0), b),
                        40,
                    )
                    .unwrap();
                    // apply to the highest weight vector: keep e-part 0 terms,
                    // evaluate binomial(H; c) at lam.
                    let mut got = BigRational::zero();
                    for (m, c) in &prod.terms {
                        if m.e.iter().any(|&x| x != 0) {
                            continue;
                        }
                        if m.f[0] != b - a {
                            continue;
                        }
                        let hval = BigRational::from_integer(binomial_int(lam, m.h[0]));
                        got += c * hval;
                    }
                    let expect =
                        BigRational::from_integer(binomial_int(lam + a as i64 - b as i64, a));
                    assert_eq!(got, expect, "lam={lam} a={a} b={b}");
                }
            }
        }
    }
}
