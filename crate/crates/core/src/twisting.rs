//! Semiregular modules and twisting functors. The length-one twist of a
//! Verma module is computed exactly inside the localization of U(g) at the
//! corresponding negative root vector: the quotient M_(f)/M realizes
//! S_w ⊗_{U(g)} M, and the grading twist is the adjoint action of the
//! standard Weyl-group lift. All integral structure is asserted before
//! specializing to a prime field.

use std::collections::HashMap;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};

use crate::chevalley::{Chevalley, Gen};
use crate::error::{Error, Result};
use crate::hyperalgebra::{elem_scale, elem_zero, Elem, Engine, Mono};
use crate::linalg::{IntMat, Mat};
use crate::modules::{GenPow, ModuleKind, TruncatedModule};
use crate::rootdata::{RootVec, TypeLabel, Weight};
use crate::scalar::{factorial, rat_to_bigint, Field};
use crate::weyl::{w0_word, w0_word_alt, WeylElement};

/// Reduced w0 word whose convex order starts with alpha_i, so that Verma
/// monomials are free over k[f_i] with the localized slot first.
fn word_starting_with(label: TypeLabel, i: usize) -> Result<Vec<usize>> {
    let a = w0_word(label);
    if a.first() == Some(&i) {
        return Ok(a);
    }
    let b = w0_word_alt(label);
    if b.first() == Some(&i) {
        return Ok(b);
    }
    Err(Error::Unsupported(format!(
        "no fixed reduced word of w0 starts with s{}",
        i + 1
    )))
}

/// Which length-one twists are supported for a label.
pub fn supported_simple_twists(label: TypeLabel) -> Vec<usize> {
    match label {
        TypeLabel::A1 => vec![0],
        TypeLabel::A2 => vec![0, 1],
        TypeLabel::B2 => vec![],
    }
}

/// Build Θ_{s_i}(M(mu)) on the window of depth `depth` below its top
/// s_i . mu. The basis is u_{m, rest} = m! f_i^{-m-1} (rest divided
/// monomial) v, and the action of g is the localized normal form of
/// Ad_{n_i}(g) applied to the basis, with everything integral by the
/// divided-power normalization.
pub fn twisted_verma<K: Field>(
    canonical: &Arc<Chevalley>,
    i: usize,
    mu: &Weight,
    depth: i64,
    field: &K,
) -> Result<TruncatedModule<K>> {
    let label = canonical.label();
    if !supported_simple_twists(label).contains(&i) {
        return Err(Error::Unsupported(format!(
            "twist s{} is not supported for {}",
            i + 1,
            label
        )));
    }
    let word = word_starting_with(label, i)?;
    let chev = Chevalley::with_word(label, &word);
    let rd = &chev.rd;
    let n_pos = chev.num_pos_roots();
    // localized slot = F(0) in the alternative convex order
    debug_assert_eq!(chev.pos_roots[0], {
        let mut v = vec![0i64; rd.rank];
        v[i] = 1;
        RootVec(v)
    });
    let slots = crate::hyperalgebra::standard_slots(&chev);
    let mut localized = vec![false; slots.len()];
    localized[0] = true;
    let engine = Engine::with_slots(chev.clone(), slots, localized);

    let top = rd.simple_reflection(i, &mu.add(&rd.rho())).sub(&rd.rho());
    let alpha_i = rd.root_to_fund(&chev.pos_roots[0]);

    // Enumerate the basis: (m, rest exponents over the other convex roots).
    // Post-twist weight: s_i(mu + (m+1) alpha_i - wt(rest)).
    let mut weights: Vec<Weight> = Vec::new();
    let mut basis: Vec<Vec<(u32, Vec<u32>)>> = Vec::new();
    let mut index: HashMap<Weight, usize> = HashMap::new();
    let mut rest_stack: Vec<Vec<u32>> = vec![vec![0; n_pos - 1]];
    // generate all rest-exponent vectors of bounded height
    {
        let mut all = Vec::new();
        fn gen_rest(
            chev: &Chevalley,
            k: usize,
            cur: &mut Vec<u32>,
            ht_left: i64,
            all: &mut Vec<Vec<u32>>,
        ) {
            if k == cur.len() {
                all.push(cur.clone());
                return;
            }
            let root_ht = chev.pos_roots[k + 1].height();
            let mut a = 0u32;
            while (a as i64) * root_ht <= ht_left {
                cur[k] = a;
                gen_rest(chev, k + 1, cur, ht_left - a as i64 * root_ht, all);
                a += 1;
            }
            cur[k] = 0;
        }
        let mut cur = vec![0u32; n_pos - 1];
        gen_rest(&chev, 0, &mut cur, 2 * depth, &mut all);
        rest_stack = all;
    }
    for m in 0..=(depth as u32) {
        for rest in &rest_stack {
            let mut wt_pre = mu.add(&alpha_i.scale(m as i64 + 1));
            for (k, &a) in rest.iter().enumerate() {
                let beta = rd.root_to_fund(&chev.pos_roots[k + 1]);
                wt_pre = wt_pre.sub(&beta.scale(a as i64));
            }
            let wt_post = rd.simple_reflection(i, &wt_pre);
            let gap = match rd.fund_to_root(&top.sub(&wt_post)) {
                Ok(b) if b.is_nonnegative() && b.height() <= depth => b.height(),
                _ => continue,
            };
            let _ = gap;
            let idx = *index.entry(wt_post.clone()).or_insert_with(|| {
                weights.push(wt_post.clone());
                basis.push(Vec::new());
                weights.len() - 1
            });
            basis[idx].push((m, rest.clone()));
        }
    }
    for b in &mut basis {
        b.sort();
    }
    let dims: Vec<usize> = basis.iter().map(|b| b.len()).collect();

    // Adjoint relabeling through the standard lift of s_i.
    let lift = chev.simple_lift(i);
    let mut adjoint: HashMap<Gen, (Gen, i64)> = HashMap::new();
    for g in chev.all_gens() {
        let image = chev.adjoint(&lift, g)?;
        if g.is_cartan() {
            continue; // Cartan part never stored as a matrix
        }
        if image.len() != 1 || image[0].1.abs() != 1 {
            return Err(Error::Inconsistency(
                "lift does not permute root vectors up to sign".into(),
            ));
        }
        adjoint.insert(g, image[0]);
    }

    // Assemble integer matrices.
    let mut mats: HashMap<(GenPow, usize), IntMat> = HashMap::new();
    let mu_eval: Vec<i64> = mu.0.clone();
    for root in 0..n_pos {
        let ht = chev.pos_roots[root].height();
        let cap = (depth / ht).max(0) as u32;
        for pow in 1..=cap {
            for &raise in &[false, true] {
                let g = GenPow { raise, root, pow };
                let (g_ad, sign) = adjoint[&g.gen()];
                let step = rd
                    .root_to_fund(&chev.pos_roots[root])
                    .scale(pow as i64);
                for (src_idx, src_wt) in weights.iter().enumerate() {
                    let target = if raise {
                        src_wt.add(&step)
                    } else {
                        src_wt.sub(&step)
                    };
                    let Some(&tgt_idx) = index.get(&target) else {
                        continue;
                    };
                    let mut m = IntMat::zeros(dims[tgt_idx], dims[src_idx]);
                    for (col, (mm, rest)) in basis[src_idx].iter().enumerate() {
                        let image = twisted_action_column(
                            &engine, &chev, &mu_eval, g_ad, sign, g.pow, *mm, rest,
                        )?;
                        for ((m2, rest2), coeff) in image {
                            if let Some(row) = basis[tgt_idx]
                                .iter()
                                .position(|b| b.0 == m2 && b.1 == rest2)
                            {
                                m.set(row, col, coeff);
                            }
                            // terms outside the window are dropped: they sit
                            // strictly below the stored depth
                        }
                    }
                    mats.insert((g, src_idx), m);
                }
            }
        }
    }

    // Reindex the root numbering to the canonical convex order.
    let remap: Vec<usize> = (0..n_pos)
        .map(|k| {
            canonical
                .pos_roots
                .iter()
                .position(|r| *r == chev.pos_roots[k])
                .expect("same positive roots")
        })
        .collect();
    let mut final_mats = HashMap::new();
    for ((g, idx), m) in mats {
        let g2 = GenPow {
            raise: g.raise,
            root: remap[g.root],
            pow: g.pow,
        };
        final_mats.insert((g2, idx), m.to_field(field));
    }

    let index2: HashMap<Weight, usize> = weights
        .iter()
        .enumerate()
        .map(|(k, w)| (w.clone(), k))
        .collect();
    Ok(TruncatedModule::from_parts(
        canonical.clone(),
        field.clone(),
        top,
        depth,
        weights,
        index2,
        dims,
        final_mats,
        None,
        ModuleKind::Twisted,
    ))
}

/// One column of the twisted action: Ad-image generator to the divided
/// power `pow`, applied to m! f^{-m-1} (rest divided) v, reduced mod M and
/// expressed in the twisted basis. Integrality is asserted.
#[allow(clippy::too_many_arguments)]
fn twisted_action_column(
    engine: &Engine,
    chev: &Arc<Chevalley>,
    mu_eval: &[i64],
    g_ad: Gen,
    sign: i64,
    pow: u32,
    m: u32,
    rest: &[u32],
) -> Result<Vec<((u32, Vec<u32>), BigInt)>> {
    let n_slots = engine.n_slots();
    let mut mono = Mono::unit(n_slots);
    mono.0[0] = -(m as i32) - 1;
    let mut norm = BigRational::from_integer(factorial(m));
    for (k, &a) in rest.iter().enumerate() {
        mono.0[engine.slot_of(Gen::F(k + 1))] = a as i32;
        norm /= BigRational::from_integer(factorial(a));
    }
    norm /= BigRational::from_integer(factorial(pow));
    if sign < 0 && pow % 2 == 1 {
        norm = -norm;
    }
    let raw = engine.pow_left(g_ad, pow, &mono);
    let raw = elem_scale(&raw, &norm);

    let mut out: HashMap<(u32, Vec<u32>), BigRational> = HashMap::new();
    'terms: for (t, c) in &raw {
        // F_loc exponent >= 0: the term lies in M and dies in the quotient.
        if t.0[0] >= 0 {
            continue;
        }
        let m2 = (-t.0[0] - 1) as u32;
        let mut coeff = c.clone();
        let mut rest2 = vec![0u32; rest.len()];
        for (slot, &e) in t.0.iter().enumerate() {
            if slot == 0 || e == 0 {
                continue;
            }
            match engine.slots[slot] {
                Gen::E(_) => continue 'terms,
                Gen::H(idx) => {
                    let base = BigRational::from_integer(BigInt::from(mu_eval[idx]));
                    for _ in 0..e {
                        coeff *= &base;
                    }
                }
                Gen::F(k) => {
                    rest2[k - 1] = e as u32;
                    coeff *= BigRational::from_integer(factorial(e as u32));
                }
            }
        }
        coeff /= BigRational::from_integer(factorial(m2));
        let entry = out.entry((m2, rest2)).or_insert_with(BigRational::zero);
        *entry += coeff;
    }
    let mut result = Vec::new();
    for (key, c) in out {
        if c.is_zero() {
            continue;
        }
        let int = rat_to_bigint(&c).map_err(|_| {
            Error::Inconsistency(format!(
                "non-integral twisted action coefficient {c} for {g_ad:?}^{pow}"
            ))
        })?;
        result.push((key, int));
    }
    Ok(result)
}

/// Θ_w applied to a Verma module. Supported: w = e (identity) and the
/// simple reflections listed by `supported_simple_twists`.
pub fn twist_module<K: Field>(
    canonical: &Arc<Chevalley>,
    w: &WeylElement,
    m: &TruncatedModule<K>,
    depth: i64,
) -> Result<TruncatedModule<K>> {
    if m.kind != ModuleKind::Verma {
        return Err(Error::Unsupported(
            "twist_module expects a Verma module on the window".into(),
        ));
    }
    match w.length() {
        0 => Ok(m.clone()),
        1 => twisted_verma(canonical, w.word[0], &m.top, depth, &m.field),
        _ => Err(Error::Unsupported(format!(
            "twists of length {} are outside the supported range",
            w.length()
        ))),
    }
}

/// Contragredient quasi-Verma module: Θ_w applied to the antidominant Verma
/// M(w0 . lambda). Character equals ch M(w w0 . lambda) on the window.
pub fn quasi_verma<K: Field>(
    canonical: &Arc<Chevalley>,
    poset: &crate::weyl::BruhatPoset,
    w: &WeylElement,
    lam: &Weight,
    depth: i64,
    field: &K,
) -> Result<TruncatedModule<K>> {
    if !canonical.rd.is_regular_dominant(lam) {
        return Err(Error::Domain(format!("{lam} is not regular dominant")));
    }
    let w0 = poset.longest_element();
    let bottom = w0.dot(&canonical.rd, lam);
    match w.length() {
        0 => crate::modules::verma(canonical, &bottom, depth, field),
        1 => twisted_verma(canonical, w.word[0], &bottom, depth, field),
        _ => Err(Error::Unsupported(format!(
            "quasi-Verma twists of length {} are outside the supported range",
            w.length()
        ))),
    }
}

/// The product expansion e^{-1} u = sum_{k} (-1)^k ad_e^k(u) e^{-k-1} in
/// the localization, returned with the number of nonzero terms.
pub struct LocalizedSeries {
    /// Normal-form monomial expansion of e^{-1} u.
    pub product: Elem,
    /// Normal form of the commutator [e^{-1}, u] = e^{-1} u - u e^{-1}.
    pub commutator: Elem,
    /// Number of terms in the adjoint series, i.e. the nilpotency degree.
    pub series_len: u32,
}

/// Compute e^{-1} u for a simple negative root generator e = f_i and a
/// single generator u, in the localized engine of the label.
pub fn localized_commutator(
    canonical: &Arc<Chevalley>,
    i: usize,
    u: Gen,
    bound: u32,
) -> Result<LocalizedSeries> {
    let loc = canonical.simple_idx[i];
    // Slot order with the localized root last, so that e^{-1} u genuinely
    // expands into the adjoint series with one monomial per term.
    let mut slots: Vec<Gen> = Vec::new();
    for k in 0..canonical.num_pos_roots() {
        if k != loc {
            slots.push(Gen::F(k));
        }
    }
    slots.extend((0..canonical.rank()).map(Gen::H));
    slots.extend((0..canonical.num_pos_roots()).map(Gen::E));
    slots.push(Gen::F(loc));
    let mut localized = vec![false; slots.len()];
    let last = localized.len() - 1;
    localized[last] = true;
    let engine = Engine::with_slots(canonical.clone(), slots, localized);

    let series_len =
        engine.adjoint_nilpotency_degree(Gen::F(loc), &engine.gen_elem(u), bound)?;
    let mut finv = Mono::unit(engine.n_slots());
    finv.0[last] = -1;
    let mut finv_elem = elem_zero();
    finv_elem.insert(finv, BigRational::one());
    let product = engine.mul(&finv_elem, &engine.gen_elem(u));
    let mut commutator = product.clone();
    let right = engine.mul(&engine.gen_elem(u), &finv_elem);
    for (mono, c) in right {
        let entry = commutator.entry(mono).or_insert_with(BigRational::zero);
        *entry -= c;
    }
    commutator.retain(|_, v| !v.is_zero());
    Ok(LocalizedSeries {
        product,
        commutator,
        series_len,
    })
}

// --- Semiregular windows ---------------------------------------------------

/// The negative roots spanning n_w^- = n^- ∩ w(n^+), as canonical indices.
pub fn nilpotent_radical_of_twist(
    canonical: &Arc<Chevalley>,
    poset: &crate::weyl::BruhatPoset,
    w: &WeylElement,
) -> Vec<usize> {
    let rd = &canonical.rd;
    let w_inv = poset.inverse(w);
    let mut out = Vec::new();
    for (k, beta) in canonical.pos_roots.iter().enumerate() {
        let image = w_inv.act(&rd.root_to_fund(beta));
        // beta in n_w^- iff w^{-1}(beta) is negative
        let neg = rd
            .fund_to_root(&image.scale(-1))
            .map(|b| b.is_nonnegative() && b.height() > 0)
            .unwrap_or(false);
        if neg {
            out.push(k);
        }
    }
    out
}

/// Window model of the semiregular bimodule S_{n_w^-}: basis elements are
/// (U-part monomial without the localized roots) ⊗ delta_(m), realized as
/// cosets u * prod_k m_k! f_k^{-m_k-1} in the multi-localization. Left and
/// right actions are exact localized products reduced mod the sub-polynomial
/// parts.
pub struct SemiregularWindow<K: Field> {
    pub chev: Arc<Chevalley>,
    pub field: K,
    pub loc_roots: Vec<usize>,
    pub engine: Arc<Engine>,
    /// basis monomials in engine slots; localized exponents are negative.
    pub basis: Vec<Mono>,
    pub index: HashMap<Mono, usize>,
    /// caps used to build the window
    pub u_height_cap: i64,
    pub dual_cap: u32,
    pub h_cap: u32,
}

impl<K: Field> SemiregularWindow<K> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The ambient (adjoint) weight of a basis element.
    pub fn ad_weight(&self, idx: usize) -> Weight {
        self.engine.mono_weight(&self.basis[idx])
    }

    /// Dual degree vector (the delta index).
    pub fn dual_degree(&self, idx: usize) -> Vec<u32> {
        let mono = &self.basis[idx];
        self.loc_roots
            .iter()
            .map(|&k| {
                let slot = self.engine.slot_of(Gen::F(k));
                (-mono.0[slot] - 1) as u32
            })
            .collect()
    }

    fn normalization(&self, mono: &Mono) -> BigRational {
        // basis element = (prod m_k!) * u-part with divided normalization:
        // every nonnegative F/E exponent a contributes 1/a!.
        let mut norm = BigRational::one();
        for (slot, &e) in mono.0.iter().enumerate() {
            let g = self.engine.slots[slot];
            match g {
                Gen::F(_) | Gen::E(_) => {
                    if e > 0 {
                        norm /= BigRational::from_integer(factorial(e as u32));
                    } else if e < 0 {
                        norm *= BigRational::from_integer(factorial((-e - 1) as u32));
                    }
                }
                Gen::H(_) => {}
            }
        }
        norm
    }

    /// Express a normalized localized element in the window basis; terms
    /// with any localized exponent >= 0 die; terms outside the window error.
    fn reduce(&self, elem: &Elem) -> Result<Vec<(usize, K::Elem)>> {
        let mut acc: HashMap<usize, BigRational> = HashMap::new();
        't: for (mono, c) in elem {
            for &k in &self.loc_roots {
                if mono.0[self.engine.slot_of(Gen::F(k))] >= 0 {
                    continue 't;
                }
            }
            let idx = self.index.get(mono).copied().ok_or_else(|| {
                Error::TruncationBound(format!("semiregular window overflow at {mono:?}"))
            })?;
            // convert ordinary coefficient to the divided-normalized basis
            let conv = self.normalization(mono).recip();
            *acc.entry(idx).or_insert_with(BigRational::zero) += c * conv;
        }
        let mut out = Vec::new();
        for (idx, c) in acc {
            if c.is_zero() {
                continue;
            }
            let int = rat_to_bigint(&c).map_err(|_| {
                Error::Inconsistency(format!("non-integral semiregular coefficient {c}"))
            })?;
            out.push((idx, self.field.from_bigint(&int)));
        }
        out.sort_by_key(|(i, _)| *i);
        Ok(out)
    }

    /// Left action of a divided generator power.
    pub fn act_left(&self, g: Gen, pow: u32, idx: usize) -> Result<Vec<(usize, K::Elem)>> {
        let mono = &self.basis[idx];
        let norm = self.normalization(mono) / BigRational::from_integer(factorial(pow));
        let raw = self.engine.pow_left(g, pow, mono);
        self.reduce(&elem_scale(&raw, &norm))
    }

    /// Right action of a divided generator power.
    pub fn act_right(&self, idx: usize, g: Gen, pow: u32) -> Result<Vec<(usize, K::Elem)>> {
        let mono = &self.basis[idx];
        let norm = self.normalization(mono) / BigRational::from_integer(factorial(pow));
        let mut cur = elem_zero();
        cur.insert(mono.clone(), norm);
        for _ in 0..pow {
            cur = self.engine.mul_elem_gen_right(&cur, self.engine.slot_of(g), 1);
        }
        self.reduce(&cur)
    }
}

/// Build the semiregular window for w with ℓ(w) <= 2 (the localized roots
/// must commute).
pub fn build_semiregular<K: Field>(
    canonical: &Arc<Chevalley>,
    poset: &crate::weyl::BruhatPoset,
    w: &WeylElement,
    u_height_cap: i64,
    dual_cap: u32,
    h_cap: u32,
    field: &K,
) -> Result<SemiregularWindow<K>> {
    let loc_roots = nilpotent_radical_of_twist(canonical, poset, w);
    if loc_roots.len() != w.length() {
        return Err(Error::Inconsistency(
            "|n_w| must equal the length of w".into(),
        ));
    }
    if loc_roots.len() > 2 {
        return Err(Error::Unsupported(
            "semiregular windows support length <= 2".into(),
        ));
    }
    for &a in &loc_roots {
        for &b in &loc_roots {
            if a != b && !canonical.bracket(Gen::F(a), Gen::F(b)).is_empty() {
                return Err(Error::Unsupported(
                    "localized roots must commute in the filtration".into(),
                ));
            }
        }
    }
    // Slot order: non-localized F's, H's, E's, then the localized roots.
    let mut slots: Vec<Gen> = Vec::new();
    for k in 0..canonical.num_pos_roots() {
        if !loc_roots.contains(&k) {
            slots.push(Gen::F(k));
        }
    }
    slots.extend((0..canonical.rank()).map(Gen::H));
    slots.extend((0..canonical.num_pos_roots()).map(Gen::E));
    for &k in &loc_roots {
        slots.push(Gen::F(k));
    }
    let localized: Vec<bool> = slots
        .iter()
        .enumerate()
        .map(|(pos, _)| pos >= slots.len() - loc_roots.len())
        .collect();
    let engine = Arc::new(Engine::with_slots(canonical.clone(), slots, localized));

    // Enumerate the basis within the caps.
    let mut basis = Vec::new();
    let n_slots = engine.n_slots();
    fn gen_monos(
        engine: &Engine,
        chev: &Chevalley,
        slot: usize,
        cur: &mut Mono,
        u_height_left: i64,
        dual_cap: u32,
        h_cap: u32,
        out: &mut Vec<Mono>,
    ) {
        if slot == engine.n_slots() {
            out.push(cur.clone());
            return;
        }
        let g = engine.slots[slot];
        let localized = engine.localized[slot];
        match (g, localized) {
            (Gen::F(_), true) => {
                for m in 0..=dual_cap {
                    cur.0[slot] = -(m as i32) - 1;
                    gen_monos(engine, chev, slot + 1, cur, u_height_left, dual_cap, h_cap, out);
                }
                cur.0[slot] = 0;
            }
            (Gen::H(_), _) => {
                for b in 0..=h_cap {
                    cur.0[slot] = b as i32;
                    gen_monos(engine, chev, slot + 1, cur, u_height_left, dual_cap, h_cap, out);
                }
                cur.0[slot] = 0;
            }
            (Gen::F(k), false) | (Gen::E(k), false) => {
                let ht = chev.pos_roots[k].height();
                let mut a = 0i64;
                while a * ht <= u_height_left {
                    cur.0[slot] = a as i32;
                    gen_monos(
                        engine,
                        chev,
                        slot + 1,
                        cur,
                        u_height_left - a * ht,
                        dual_cap,
                        h_cap,
                        out,
                    );
                    a += 1;
                }
                cur.0[slot] = 0;
            }
            (Gen::E(_), true) => unreachable!("positive roots never localize"),
        }
    }
    let mut cur = Mono::unit(n_slots);
    gen_monos(
        &engine,
        canonical,
        0,
        &mut cur,
        u_height_cap,
        dual_cap,
        h_cap,
        &mut basis,
    );
    basis.sort();
    let index = basis
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i))
        .collect();
    Ok(SemiregularWindow {
        chev: canonical.clone(),
        field: field.clone(),
        loc_roots,
        engine,
        basis,
        index,
        u_height_cap,
        dual_cap,
        h_cap,
    })
}

/// The Lemma-style dual-bracket action of a positive generator on a ⊗ f:
/// a e ⊗ f + a ⊗ [e, f], with [e, f](u) = f(pi([u, e])) through the PBW
/// projection onto the localized part. Exposed for the formula-level
/// examples; the genuine bimodule right action is `act_right`.
pub fn lemma_act_formula<K: Field>(
    s: &SemiregularWindow<K>,
    e_root: usize,
    idx: usize,
) -> Result<Vec<(usize, K::Elem)>> {
    let engine = &s.engine;
    let mono = &s.basis[idx];
    let field = s.field.clone();
    let mut out: HashMap<usize, K::Elem> = HashMap::new();

    // Term 1: a e ⊗ f — append e to the U-part of the monomial.
    let mut split_u = mono.clone();
    for &k in &s.loc_roots {
        split_u.0[engine.slot_of(Gen::F(k))] = 0;
    }
    let norm_u = s.normalization(&split_u);
    let raw = {
        let mut start = elem_zero();
        start.insert(split_u.clone(), norm_u);
        engine.mul_elem_gen_right(&start, engine.slot_of(Gen::E(e_root)), 1)
    };
    for (m, c) in &raw {
        // reattach the dual part
        let mut whole = m.clone();
        let mut ok = true;
        for &k in &s.loc_roots {
            let slot = engine.slot_of(Gen::F(k));
            if whole.0[slot] != 0 {
                ok = false; // e-multiplication stays in the U-part here
                break;
            }
            whole.0[slot] = mono.0[slot];
        }
        if !ok {
            continue;
        }
        let conv = s.normalization(&whole).recip();
        let coeff = rat_to_bigint(&(c * conv))?;
        if let Some(&i2) = s.index.get(&whole) {
            let e = out.entry(i2).or_insert_with(|| field.zero());
            *e = field.add(e, &field.from_bigint(&coeff));
        }
    }

    // Term 2: a ⊗ [e, f] with [e, f](u) = f(pi([u, e])). For the dual basis
    // delta_m this pairs against the localized part of [F^(m'), e].
    // Evaluate by brute force over the dual degrees in the window.
    let d = s.dual_degree(idx);
    for cand in 0..s.basis.len() {
        // candidate a ⊗ delta_{m'} with the same U-part
        let mut cu = s.basis[cand].clone();
        let mut mu = mono.clone();
        for &k in &s.loc_roots {
            cu.0[engine.slot_of(Gen::F(k))] = 0;
            mu.0[engine.slot_of(Gen::F(k))] = 0;
        }
        if cu != mu {
            continue;
        }
        let dprime = s.dual_degree(cand);
        // [e, delta_d](F^(d')) = delta_d(pi(F^(d') e - e F^(d')))
        let mut arg = Mono::unit(engine.n_slots());
        for (j, &k) in s.loc_roots.iter().enumerate() {
            arg.0[engine.slot_of(Gen::F(k))] = dprime[j] as i32;
        }
        let norm = {
            let mut n = BigRational::one();
            for &dj in &dprime {
                n /= BigRational::from_integer(factorial(dj));
            }
            n
        };
        let left = engine.mul_elem_gen_right(
            &{
                let mut st = elem_zero();
                st.insert(arg.clone(), norm.clone());
                st
            },
            engine.slot_of(Gen::E(e_root)),
            1,
        );
        let right = engine.mul_gen_left(engine.slot_of(Gen::E(e_root)), 1, &arg);
        let mut commutator = left;
        for (m, c) in elem_scale(&right, &norm) {
            let entry = commutator.entry(m).or_insert_with(BigRational::zero);
            *entry -= c;
        }
        // pi: keep only pure localized-part monomials, pair against delta_d.
        let mut pairing = BigRational::zero();
        for (m, c) in &commutator {
            let mut pure = true;
            let mut exps = vec![0u32; s.loc_roots.len()];
            for (slot, &e) in m.0.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                match engine.slots[slot] {
                    Gen::F(k) if s.loc_roots.contains(&k) => {
                        let j = s.loc_roots.iter().position(|&x| x == k).unwrap();
                        if e < 0 {
                            pure = false;
                            break;
                        }
                        exps[j] = e as u32;
                    }
                    _ => {
                        pure = false;
                        break;
                    }
                }
            }
            if pure && exps == d {
                // delta_d eats the divided monomial: multiply by d! to match
                // the divided normalization of the dual basis
                let mut conv = c.clone();
                for &dj in &d {
                    conv *= BigRational::from_integer(factorial(dj));
                }
                pairing += conv;
            }
        }
        if !pairing.is_zero() {
            let coeff = rat_to_bigint(&pairing)?;
            let e = out.entry(cand).or_insert_with(|| field.zero());
            *e = field.add(e, &field.from_bigint(&coeff));
        }
    }

    let mut result: Vec<(usize, K::Elem)> = out
        .into_iter()
        .filter(|(_, c)| !field.is_zero(c))
        .collect();
    result.sort_by_key(|(i, _)| *i);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charring::{char_equal_truncated, verma_character};
    use crate::modules::{contragredient, find_isomorphism, verma};
    use crate::rootdata::build_root_datum;
    use crate::scalar::{PrimeField, Rationals};
    use crate::weyl::enumerate_weyl;

    #[test]
    fn sl2_twist_collapses_to_contragredient_verma() {
        let chev = Chevalley::new(TypeLabel::A1);
        for lam in [0i64, 2, 4] {
            let s_dot = Weight(vec![-lam - 2]);
            let theta = twisted_verma(&chev, 0, &s_dot, 8, &Rationals).unwrap();
            assert_eq!(theta.top, Weight(vec![lam]));
            let dm = contragredient(&verma(&chev, &Weight(vec![lam]), 8, &Rationals).unwrap());
            let iso = find_isomorphism(&theta, &dm, 0);
            assert!(iso.is_some(), "lambda = {lam}");
        }
    }

    #[test]
    fn twist_preserves_verma_character() {
        // ch Θ_{s_i}(M(s_i . lambda)) = ch M(lambda) over Q and F_p
        let rd = build_root_datum(TypeLabel::A2);
        let poset = enumerate_weyl(&rd);
        let chev = Chevalley::new(TypeLabel::A2);
        for lam in [Weight(vec![0, 0]), Weight(vec![1, 1])] {
            for i in 0..2usize {
                let si = poset.by_word(&[i]).unwrap();
                let mu = si.dot(&rd, &lam);
                let theta = twisted_verma(&chev, i, &mu, 6, &Rationals).unwrap();
                let expected = verma_character(&rd, &lam, 6);
                assert!(
                    char_equal_truncated(&theta.character(), &expected, 6).unwrap(),
                    "i={i} lam={lam}"
                );
                for p in [2u64, 3, 5] {
                    let f = PrimeField::new(p).unwrap();
                    let tp = twisted_verma(&chev, i, &mu, 6, &f).unwrap();
                    assert!(
                        char_equal_truncated(&tp.character(), &expected, 6).unwrap(),
                        "i={i} lam={lam} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn twisted_module_satisfies_relations() {
        let chev = Chevalley::new(TypeLabel::A2);
        let rd = build_root_datum(TypeLabel::A2);
        let poset = enumerate_weyl(&rd);
        let s1 = poset.by_word(&[0]).unwrap();
        let mu = s1.dot(&rd, &Weight(vec![1, 1]));
        let theta = twisted_verma(&chev, 0, &mu, 5, &Rationals).unwrap();
        crate::modules::audit_relations(&theta, 2).unwrap();
        let f2 = PrimeField::new(2).unwrap();
        let theta2 = twisted_verma(&chev, 0, &mu, 5, &f2).unwrap();
        crate::modules::audit_relations(&theta2, 2).unwrap();
    }

    #[test]
    fn theta_e_is_identity_and_quasi_verma_tops() {
        let chev = Chevalley::new(TypeLabel::A1);
        let rd = build_root_datum(TypeLabel::A1);
        let poset = enumerate_weyl(&rd);
        let m = verma(&chev, &Weight(vec![-4]), 6, &Rationals).unwrap();
        let e = poset.identity().clone();
        let t = twist_module(&chev, &e, &m, 6).unwrap();
        assert_eq!(t.character(), m.character());

        // quasi-Verma tops: D~M(w w0 . lambda)
        let s = poset.by_word(&[0]).unwrap();
        let q = quasi_verma(&chev, &poset, s, &Weight(vec![2]), 8, &Rationals).unwrap();
        assert_eq!(q.top, Weight(vec![2]));
        let qe = quasi_verma(&chev, &poset, &e, &Weight(vec![2]), 8, &Rationals).unwrap();
        assert_eq!(qe.top, Weight(vec![-4]));
    }

    #[test]
    fn localized_commutator_examples() {
        let chev = Chevalley::new(TypeLabel::A1);
        // u = E: series length 3
        let s = localized_commutator(&chev, 0, Gen::E(0), 16).unwrap();
        assert_eq!(s.series_len, 3);
        assert_eq!(s.product.len(), 3);
        // u = F: [F^{-1}, F] = 0
        let sf = localized_commutator(&chev, 0, Gen::F(0), 16).unwrap();
        assert!(sf.commutator.is_empty());
        // u = H: product has 2 terms
        let sh = localized_commutator(&chev, 0, Gen::H(0), 16).unwrap();
        assert_eq!(sh.series_len, 2);
        assert_eq!(sh.product.len(), 2);
    }

    #[test]
    fn semiregular_window_sl2() {
        let chev = Chevalley::new(TypeLabel::A1);
        let rd = build_root_datum(TypeLabel::A1);
        let poset = enumerate_weyl(&rd);
        let s = poset.by_word(&[0]).unwrap();
        let win = build_semiregular(&chev, &poset, s, 3, 3, 2, &Rationals).unwrap();
        assert_eq!(win.loc_roots, vec![0]);
        // dim = (#E exps) * (#H exps) * (#dual degrees) = 4 * 3 * 4
        assert_eq!(win.dim(), 48);

        // w = e: the window has no dual part; S_e = U(g)
        let e = poset.identity().clone();
        let wine = build_semiregular(&chev, &poset, &e, 2, 0, 1, &Rationals).unwrap();
        assert!(wine.loc_roots.is_empty());
        // basis = monomials F^a H^b E^c with height caps
        assert!(wine.dim() > 0);
    }

    #[test]
    fn semiregular_left_right_actions_commute() {
        let chev = Chevalley::new(TypeLabel::A1);
        let rd = build_root_datum(TypeLabel::A1);
        let poset = enumerate_weyl(&rd);
        let s = poset.by_word(&[0]).unwrap();
        let win = build_semiregular(&chev, &poset, s, 4, 4, 3, &Rationals).unwrap();
        // pick interior elements where all four compositions stay in-window
        let mut checked = 0;
        for idx in 0..win.dim() {
            let inner = |v: &Vec<(usize, num::BigRational)>| -> Option<Vec<(usize, num::BigRational)>> {
                let mut acc: HashMap<usize, num::BigRational> = HashMap::new();
                for (i, c) in v {
                    for (j, d) in win.act_right(*i, Gen::E(0), 1).ok()? {
                        *acc.entry(j).or_insert_with(num::BigRational::zero) += c * d;
                    }
                }
                let mut out: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                out.sort_by_key(|(i, _)| *i);
                Some(out)
            };
            let left_then_right = win
                .act_left(Gen::F(0), 1, idx)
                .ok()
                .and_then(|v| inner(&v));
            let right_first = win.act_right(idx, Gen::E(0), 1).ok().and_then(|v| {
                let mut acc: HashMap<usize, num::BigRational> = HashMap::new();
                for (i, c) in v {
                    for (j, d) in win.act_left(Gen::F(0), 1, i).ok()? {
                        *acc.entry(j).or_insert_with(num::BigRational::zero) += &c * d;
                    }
                }
                let mut out: Vec<_> = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
                out.sort_by_key(|(i, _)| *i);
                Some(out)
            });
            if let (Some(a), Some(b)) = (left_then_right, right_first) {
                assert_eq!(a, b, "at basis {idx}");
                checked += 1;
            }
        }
        assert!(checked > 10, "enough interior elements checked");
    }

    #[test]
    fn semiregular_right_action_satisfies_sl2_relation() {
        // (x E) F - (x F) E = x (EF - FE) = x H as right operators
        let chev = Chevalley::new(TypeLabel::A1);
        let rd = build_root_datum(TypeLabel::A1);
        let poset = enumerate_weyl(&rd);
        let s = poset.by_word(&[0]).unwrap();
        let win = build_semiregular(&chev, &poset, s, 4, 4, 3, &Rationals).unwrap();
        let mut checked = 0;
        for idx in 0..win.dim() {
            let compose = |first: Gen, second: Gen| -> Option<HashMap<usize, num::BigRational>> {
                let mut acc: HashMap<usize, num::BigRational> = HashMap::new();
                for (i, c) in win.act_right(idx, first, 1).ok()? {
                    for (j, d) in win.act_right(i, second, 1).ok()? {
                        *acc.entry(j).or_insert_with(num::BigRational::zero) += &c * d;
                    }
                }
                acc.retain(|_, v| !v.is_zero());
                Some(acc)
            };
            let ef = compose(Gen::E(0), Gen::F(0));
            let fe = compose(Gen::F(0), Gen::E(0));
            let h: Option<HashMap<usize, num::BigRational>> = win
                .act_right(idx, Gen::H(0), 1)
                .ok()
                .map(|v| v.into_iter().collect());
            if let (Some(ef), Some(fe), Some(h)) = (ef, fe, h) {
                let mut diff = ef;
                for (k, v) in fe {
                    *diff.entry(k).or_insert_with(num::BigRational::zero) -= v;
                }
                diff.retain(|_, v| !v.is_zero());
                assert_eq!(diff, h, "at {idx}");
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn lemma_act_formula_examples() {
        let chev = Chevalley::new(TypeLabel::A1);
        let rd = build_root_datum(TypeLabel::A1);
        let poset = enumerate_weyl(&rd);
        let s = poset.by_word(&[0]).unwrap();
        let win = build_semiregular(&chev, &poset, s, 3, 3, 2, &Rationals).unwrap();
        // 1 ⊗ delta_0: the unit U-part with dual degree 0
        let mut unit = Mono::unit(win.engine.n_slots());
        unit.0[win.engine.slot_of(Gen::F(0))] = -1;
        let idx = win.index[&unit];
        // E . (1 ⊗ delta_0) = E ⊗ delta_0 per the bracket-dual formula
        let image = lemma_act_formula(&win, 0, idx).unwrap();
        let mut e_mono = Mono::unit(win.engine.n_slots());
        e_mono.0[win.engine.slot_of(Gen::E(0))] = 1;
        e_mono.0[win.engine.slot_of(Gen::F(0))] = -1;
        let expected_idx = win.index[&e_mono];
        assert_eq!(image, vec![(expected_idx, num::BigRational::one())]);
        // the n^- dual action kills delta_0: F . delta_0 pairs with nothing
        let f_action = win.act_right(idx, Gen::F(0), 1).unwrap();
        assert!(f_action.is_empty());
    }
}
