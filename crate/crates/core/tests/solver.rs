//! Tests against an external solver. Each one returns early, with a note on
//! stderr, when no solver can be found.

use isext_core::candidate::{emit_term, parse_functions};
use isext_core::corpus::{self, random_ddg};
use isext_core::smt::{self, brute_check, literal, SolverSession, SolverVerdict};
use isext_core::subsume::{
    minimize_set, spot_check, subsume, BruteOracle, SmtOracle, SubsumeConfig, SubsumeVerdict, Witness,
};
use isext_core::{clone_and_combine, cluster_to_function, max_miso, ArchConstraints, CandidateInstruction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solver() -> Option<SolverSession> {
    let s = SolverSession::discover(60_000);
    if s.is_none() {
        eprintln!("no solver found; set ISEXT_SMT_CMD to run these tests");
    }
    s
}

fn sample_functions(width: u32) -> Vec<CandidateInstruction> {
    let mut fs: Vec<CandidateInstruction> = corpus::raycast()
        .into_iter()
        .chain(corpus::magma_ci())
        .map(|f| f.at_width(width).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(width as u64);
    for i in 0..10 {
        let g = random_ddg(&mut rng, 12, width);
        let ac = ArchConstraints::new(4).unwrap();
        let cg = clone_and_combine(&max_miso(&g, &ac), &ac).graph;
        for (j, c) in cg.clusters().filter(|c| !c.is_singleton()).enumerate() {
            fs.push(cluster_to_function(&g, c, format!("r{i}_{j}")).unwrap());
        }
    }
    fs
}

#[test]
fn emitted_terms_match_evaluation() {
    let Some(sess) = solver() else { return };
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for width in [8, 32] {
        for f in sample_functions(width) {
            let mut eqs = Vec::new();
            for _ in 0..100 {
                let x: Vec<u64> = (0..f.arity()).map(|_| rng.gen::<u64>() & f.body().mask()).collect();
                let args: Vec<String> = x.iter().map(|&v| literal(v, width)).collect();
                let term = emit_term(&f, &args).unwrap();
                eqs.push(format!("(= {term} {})", literal(f.eval(&x).unwrap(), width)));
            }
            let v = smt::check(&sess, &[], &[format!("(not (and {}))", eqs.join(" "))], &[]).unwrap();
            assert_eq!(v, SolverVerdict::Unsat, "{} at width {width}", f.name());
        }
    }
}

#[test]
fn solver_and_enumeration_agree_on_small_queries() {
    let Some(sess) = solver() else { return };
    let decls = vec![("a".to_string(), 4), ("b".to_string(), 4)];
    let wanted = vec!["a".to_string(), "b".to_string()];
    let cases: [(&str, &dyn Fn(&[u64]) -> bool); 5] = [
        ("(= (bvmul a b) #x6)", &|v| (v[0] * v[1]) & 15 == 6),
        ("(and (= (bvadd a b) #x0) (bvult a #x1))", &|v| (v[0] + v[1]) & 15 == 0 && v[0] < 1),
        ("(= (bvor a b) (bvand a (bvnot a)))", &|v| v[0] | v[1] == 0),
        ("(bvult (bvadd a b) a)", &|v| (v[0] + v[1]) & 15 < v[0]),
        ("(and (bvult a b) (bvult b a))", &|v| v[0] < v[1] && v[1] < v[0]),
    ];
    for (assertion, pred) in cases {
        let by_solver = smt::check(&sess, &decls, &[assertion.to_string()], &wanted).unwrap();
        let by_enum = brute_check(&decls, &[pred], &wanted).unwrap();
        assert_eq!(by_solver.is_sat(), by_enum.is_sat(), "{assertion}");
        if let SolverVerdict::Sat(m) = by_solver {
            assert!(pred(&[m["a"], m["b"]]), "{assertion}");
        }
    }
}

#[test]
fn ci19_covers_ci34_at_full_width() {
    let Some(sess) = solver() else { return };
    let fs = corpus::magma_ci();
    let out = subsume(&fs[0], &fs[1], &SmtOracle::new(sess), &SubsumeConfig::default()).unwrap();
    let w = out.verdict.witness().expect("ci19 subsumes ci34");
    let expected = Witness::parse("x1 x2 0x0 x3", 3).unwrap();
    assert!(spot_check(&fs[0], &fs[1], w, 100_000, 3).is_none());
    assert!(spot_check(&fs[0], &fs[1], &expected, 100_000, 3).is_none());
}

#[test]
fn ray_casting_set_shrinks_to_two() {
    let Some(sess) = solver() else { return };
    let fs = corpus::raycast();
    let out = minimize_set(&fs, &SmtOracle::new(sess.clone()), &SubsumeConfig::default()).unwrap();
    let kept: Vec<&str> = out.kept.iter().map(|f| f.name()).collect();
    assert_eq!(kept, ["f3madd", "fdot"]);
    assert_eq!(out.factor(), 2.5);
    assert_eq!(out.inconclusive().count(), 0);
    for r in &out.removed {
        let f = fs.iter().find(|f| f.name() == r.by).unwrap();
        let g = fs.iter().find(|f| f.name() == r.g).unwrap();
        assert!(spot_check(f, g, &r.witness, 100_000, 11).is_none(), "{} = {}({})", r.g, r.by, r.witness);
        let v = isext_core::subsume::verify(f, g, &r.witness, &sess).unwrap();
        assert_eq!(v, isext_core::subsume::VerifyResult::Valid);
    }
}

#[test]
fn solver_and_enumeration_reach_the_same_verdicts() {
    let Some(sess) = solver() else { return };
    let fs = parse_functions(
        "width 4\n\
         function mad\ninput a\ninput b\ninput c\nt = mul a b\nr = add t c\noutput r\n\
         function inc\ninput a\nk = const 1\nr = add a k\noutput r\n\
         function dbl\ninput a\nr = add a a\noutput r\n\
         function msk\ninput a\ninput b\nr = and a b\noutput r\n\
         function rot\ninput a\ninput b\nr = rotl a b\noutput r\n",
        None,
    )
    .unwrap();
    let smt_oracle = SmtOracle::new(sess);
    let cfg = SubsumeConfig::default();
    for f in &fs {
        for g in &fs {
            let a = subsume(f, g, &smt_oracle, &cfg).unwrap().verdict;
            let b = subsume(f, g, &BruteOracle, &cfg).unwrap().verdict;
            assert!(!matches!(a, SubsumeVerdict::Inconclusive(_)));
            assert_eq!(a.label(), b.label(), "{} over {}", f.name(), g.name());
        }
    }
}
