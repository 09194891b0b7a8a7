#[test]
fn dbg_a2_cousin() {
    use quasibgg_core::*;
    use quasibgg_core::chevalley::Chevalley;
    use quasibgg_core::bgg::*;
    let chev = Chevalley::new(TypeLabel::A2);
    let poset = enumerate_weyl(&chev.rd);
    let lam = Weight(vec![1, 1]);
    for p in [2u64, 3] {
        let t0 = std::time::Instant::now();
        let c = assemble_cousin(&chev, &poset, &lam, 8, p).unwrap();
        let report = verify_complex(&c, 3).unwrap();
        eprintln!("p={p}: {:?} passed={} h0={} d2={} higher={} terms_ok={}",
            t0.elapsed(), report.passed(), report.h0_dimension, report.d2_ok,
            report.higher_cohomology_vanishes, term_characters_match_verma(&c));
        for f in report.failures.iter().take(8) { eprintln!("  FAIL: {f}"); }
        assert!(report.passed());
        assert_eq!(report.h0_dimension, 8);
    }
}
