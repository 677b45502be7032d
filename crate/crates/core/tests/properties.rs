use proptest::prelude::*;

use mtconvex::classes::{check_with, Predicate, Probe, WitnessKind};
use mtconvex::expr::{BinOp, Func};
use mtconvex::falsify::{falsify_with, refine_witness};
use mtconvex::quad::{self, integrate_fn, Weight};
use mtconvex::report::{emit_report, Format, Record};
use mtconvex::theorems::{self, ProductTerms, ReportStatus, TheoremReport};
use mtconvex::{
    amgm_gap, check_convexity, check_mt_membership, function, mt_coefficients, Execution, Expr,
    FunctionSpec, Interval, SamplePlan, SearchBudget,
};
use statrs::function::beta::beta;

const TOL: f64 = 1e-10;

fn small_plan() -> SamplePlan {
    SamplePlan::new(16, 256, 0, 1e-6).unwrap()
}

// ---------- strategies ----------

fn arb_const() -> impl Strategy<Value = f64> {
    prop_oneof![
        (0u32..100).prop_map(f64::from),
        0.0..10.0f64,
        (1e-8..1e8f64),
    ]
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        arb_const().prop_map(Expr::Const),
        Just(Expr::Var),
        Just(Expr::Pi),
        Just(Expr::E),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        prop_oneof![
            inner.clone().prop_map(|e| -e),
            (proptest::sample::select(Func::ALL.to_vec()), inner.clone())
                .prop_map(|(f, e)| Expr::call(f, e)),
            (op, inner.clone(), inner).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
        ]
    })
}

/// `p (x - c)^2 + q` or a sum of scaled exponentials over `[a, b]`;
/// nonnegative and convex by construction.
fn arb_convex() -> impl Strategy<Value = FunctionSpec> {
    let domain = (-3.0..3.0f64, 0.1..3.0f64);
    let quadratic = (0.05..3.0f64, -4.0..4.0f64, 0.0..2.0f64)
        .prop_map(|(p, c, q)| format!("{p:?}*(x - ({c:?}))^2 + {q:?}"));
    let exps = proptest::collection::vec((0.1..2.0f64, -2.0..2.0f64), 1..4).prop_map(|terms| {
        terms
            .iter()
            .map(|(s, k)| format!("{s:?}*exp(({k:?})*x)"))
            .collect::<Vec<_>>()
            .join(" + ")
    });
    (prop_oneof![quadratic, exps], domain)
        .prop_map(|(src, (a, w))| function(&src, a, a + w).unwrap())
}

fn arb_polynomial() -> impl Strategy<Value = String> {
    proptest::collection::vec(-3.0..3.0f64, 1..5).prop_map(|cs| {
        cs.iter()
            .enumerate()
            .map(|(k, c)| format!("({c:?})*x^{k}"))
            .collect::<Vec<_>>()
            .join(" + ")
    })
}

fn rel_close(a: f64, b: f64, rtol: f64) -> bool {
    (a - b).abs() <= rtol * (1.0 + a.abs().max(b.abs()))
}

// ---------- expr ----------

proptest! {
    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let printed = e.to_string();
        let parsed = Expr::parse(&printed).unwrap();
        prop_assert_eq!(&parsed, &e, "printed as {}", printed);
        prop_assert_eq!(Expr::parse(&parsed.to_string()).unwrap(), parsed);
    }

    #[test]
    fn batch_matches_pointwise(e in arb_expr(), xs in proptest::collection::vec(-5.0..5.0f64, 0..64)) {
        let batch = e.eval_batch(&xs);
        prop_assert_eq!(batch.len(), xs.len());
        for (x, b) in xs.iter().zip(batch) {
            prop_assert_eq!(b.map(f64::to_bits), e.eval(*x).map(f64::to_bits));
        }
    }

    #[test]
    fn eval_is_deterministic(e in arb_expr(), x in -5.0..5.0f64) {
        prop_assert_eq!(e.eval(x).map(f64::to_bits), e.eval(x).map(f64::to_bits));
    }
}

// ---------- classes ----------

proptest! {
    #[test]
    fn coefficient_algebra(t in 1e-9..1.0 - 1e-9f64) {
        let c = mt_coefficients(t).unwrap();
        let ulp = 0.25 * f64::EPSILON;
        prop_assert!((c.lam * c.mu - 0.25).abs() <= 4.0 * ulp);
        prop_assert!(c.sum() >= 1.0);
        prop_assert!(c.lam >= t && c.mu >= 1.0 - t);
        let closed = 1.0 / (2.0 * (t * (1.0 - t)).sqrt());
        prop_assert!(rel_close(c.sum(), closed, 1e-14));
    }

    #[test]
    fn amgm_gap_nonnegative(x in 0.0..1e6f64, y in 0.0..1e6f64) {
        let gap = amgm_gap(x, y).unwrap();
        prop_assert!(gap >= 0.0);
        prop_assert_eq!(amgm_gap(x, x).unwrap(), 0.0);
        // 0.5 (sqrt x - sqrt y)^2 = (x + y)/2 - sqrt(xy)
        prop_assert!((gap - (0.5 * (x + y) - (x * y).sqrt())).abs() <= 1e-9 * (1.0 + x + y));
    }

    #[test]
    fn mt_margin_symmetric(f in arb_convex(), u in 0.0..1.0f64, v in 0.0..1.0f64, t in 0.01..0.99f64) {
        let d = f.domain();
        let (x, y) = (d.a() + u * d.width(), d.a() + v * d.width());
        let pred = Predicate::Mt(&f);
        let p = pred.probe(x, y, Some(t)).unwrap();
        let q = pred.probe(y, x, Some(1.0 - t)).unwrap();
        prop_assert!(rel_close(p.lhs, q.lhs, 1e-12));
        prop_assert!(rel_close(p.rhs, q.rhs, 1e-12));
        prop_assert!(rel_close(p.violation, q.violation, 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn convex_nonnegative_implies_mt(f in arb_convex()) {
        let plan = small_plan();
        prop_assert!(check_convexity(&f, &plan).holds());
        prop_assert!(check_mt_membership(&f, &plan).holds());
    }

    /// Re-evaluates each verdict witness from the class definition itself.
    #[test]
    fn witnesses_recheck(p in 0.1..0.9f64, c in 0.0..1.0f64, seed in 0u64..1000) {
        let plan = small_plan().with_seed(seed);
        let power = function(&format!("x^{p:?}"), 0.0, 1.0).unwrap();
        let cap = function(&format!("1 - (x - {c:?})^2"), 0.0, 1.0).unwrap();
        for pred in [Predicate::Mt(&power), Predicate::Convex(&cap), Predicate::Midpoint(&cap)] {
            let v = check_with(pred, &plan, Execution::default()).unwrap();
            let w = v.witness.expect("out-of-class function must fail");
            prop_assert_eq!(w.kind, WitnessKind::Inequality);
            let f = |x: f64| pred.f().eval(x).unwrap();
            let direct = match (pred, w.t) {
                (Predicate::Mt(_), Some(t)) => {
                    let lam = t.sqrt() / (2.0 * (1.0 - t).sqrt());
                    let mu = (1.0 - t).sqrt() / (2.0 * t.sqrt());
                    f(t * w.x + (1.0 - t) * w.y) - (lam * f(w.x) + mu * f(w.y))
                }
                (Predicate::Convex(_), Some(t)) => {
                    f(t * w.x + (1.0 - t) * w.y) - (t * f(w.x) + (1.0 - t) * f(w.y))
                }
                (Predicate::Midpoint(_), None) => f(0.5 * (w.x + w.y)) - 0.5 * (f(w.x) + f(w.y)),
                other => panic!("unexpected witness shape {other:?}"),
            };
            prop_assert!(direct >= 0.99 * w.margin, "{:?}: direct {direct} vs {}", pred.class(), w.margin);
        }
    }
}

// ---------- quad ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integration_is_linear(
        fp in arb_polynomial(), gp in arb_polynomial(),
        alpha in -3.0..3.0f64, beta_ in -3.0..3.0f64,
        a in -2.0..2.0f64, w in 0.1..3.0f64,
    ) {
        let b = a + w;
        let f = function(&fp, a, b).unwrap();
        let g = function(&gp, a, b).unwrap();
        let h = function(&format!("({alpha:?})*({fp}) + ({beta_:?})*({gp})"), a, b).unwrap();
        let (qf, qg, qh) = (quad::integrate(&f, TOL).unwrap(), quad::integrate(&g, TOL).unwrap(), quad::integrate(&h, TOL).unwrap());
        let combined = alpha * qf.value + beta_ * qg.value;
        let band = alpha.abs() * qf.abs_error_estimate + beta_.abs() * qg.abs_error_estimate + qh.abs_error_estimate;
        prop_assert!((qh.value - combined).abs() <= band + 1e-12 * (1.0 + combined.abs()));
    }

    #[test]
    fn weights_positive_and_related(a in -10.0..10.0f64, w in 1e-3..10.0f64, s in 0.0..=1.0f64) {
        let d = Interval::new(a, a + w).unwrap();
        let x = d.a() + s * d.width();
        let (tau, mu) = (Weight::Tau.eval(d, x), Weight::Mu.eval(d, x));
        prop_assert!(tau >= 0.0 && mu >= 0.0);
        prop_assert!((tau * tau - mu).abs() <= 4.0 * f64::EPSILON * mu.max(f64::MIN_POSITIVE));
        prop_assert_eq!(Weight::Tau.eval(d, d.a()), 0.0);
        prop_assert_eq!(Weight::Tau.eval(d, d.b()), 0.0);
        prop_assert_eq!(Weight::Mu.eval(d, d.a()), 0.0);
        prop_assert_eq!(Weight::Mu.eval(d, d.b()), 0.0);
    }

    #[test]
    fn monomial_moments(n in 0i32..8, a in -2.0..2.0f64, w in 0.1..3.0f64) {
        let b = a + w;
        let f = function(&format!("x^{n}"), a, b).unwrap();
        let exact = (b.powi(n + 1) - a.powi(n + 1)) / f64::from(n + 1);
        let q = quad::integrate(&f, TOL).unwrap();
        prop_assert!(!q.converged || q.abs_error_estimate <= TOL);
        prop_assert!((q.value - exact).abs() <= q.abs_error_estimate.max(1e-12 * (1.0 + exact.abs())));
    }

    /// Weighted moments on [0, 1] are Beta values.
    #[test]
    fn weighted_moments_match_beta(k in 0i32..8) {
        let f = function(&format!("x^{k}"), 0.0, 1.0).unwrap();
        let kf = f64::from(k);
        let mu = quad::integrate_weighted(&f, Weight::Mu, TOL).unwrap();
        prop_assert!((mu.value - beta(kf + 2.0, 2.0)).abs() <= 1e-12);
        let tau = quad::integrate_weighted(&f, Weight::Tau, TOL).unwrap();
        prop_assert!((tau.value - beta(kf + 1.5, 1.5)).abs() <= 1e-12);
        let st = quad::integrate_weighted(&f, Weight::SqrtTOneMinusT, TOL).unwrap();
        prop_assert!((st.value - beta(kf + 1.5, 1.5)).abs() <= 1e-12);
    }

    #[test]
    fn substitution_identity(p in arb_polynomial(), a in -3.0..3.0f64, w in 0.1..3.0f64) {
        let f = function(&p, a, a + w).unwrap();
        prop_assert!(quad::tau_substitution_check(&f, TOL).unwrap() <= 10.0 * TOL);
    }
}

#[test]
fn fixed_moments() {
    let unit = |s: &str| function(s, 0.0, 1.0).unwrap();
    for (src, want) in [
        ("x^2", 1.0 / 3.0),
        ("x*(1-x)", 1.0 / 6.0),
        ("(1-x)^2", 1.0 / 3.0),
    ] {
        let got = quad::integrate(&unit(src), TOL).unwrap().value;
        assert!((got - want).abs() <= 1e-12, "{src}: {got}");
    }
}

// ---------- theorems ----------

fn single_reports(f: &FunctionSpec) -> Vec<TheoremReport> {
    vec![
        theorems::verify_hadamard_left(f, TOL).unwrap(),
        theorems::verify_tau_bound(f, TOL).unwrap(),
        theorems::verify_midpoint_pi(f).unwrap(),
    ]
}

fn scaled(f: &FunctionSpec, c: f64) -> FunctionSpec {
    let d = f.domain();
    function(&format!("({c:?})*({})", f.expr()), d.a(), d.b()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mt_inequalities_hold(f in arb_convex()) {
        prop_assume!(check_mt_membership(&f, &small_plan()).holds());
        for r in single_reports(&f) {
            prop_assert_eq!(r.status, ReportStatus::Satisfied, "{:?}", r);
        }
    }

    #[test]
    fn product_mu_holds_and_is_symmetric(f in arb_convex(), g in arb_convex()) {
        let d = f.domain();
        let g = function(&g.expr().to_string(), d.a(), d.b()).unwrap();
        let fg = theorems::verify_product_mu(&f, &g, TOL).unwrap();
        let gf = theorems::verify_product_mu(&g, &f, TOL).unwrap();
        prop_assert_eq!(fg.status, ReportStatus::Satisfied);
        let band = fg.lhs_error + gf.lhs_error + 1e-14 * (1.0 + fg.lhs.abs());
        prop_assert!((fg.lhs - gf.lhs).abs() <= band);
        prop_assert!((fg.rhs - gf.rhs).abs() <= 1e-14 * (1.0 + fg.rhs.abs()));
        prop_assert!((fg.margin - gf.margin).abs() <= band + 1e-14 * (1.0 + fg.rhs.abs()));
    }

    #[test]
    fn reports_scale_with_f(f in arb_convex(), c in 0.01..100.0f64) {
        let cf = scaled(&f, c);
        for (r, s) in single_reports(&f).into_iter().zip(single_reports(&cf)) {
            let band = |r: &TheoremReport| r.lhs_error + r.rhs_error;
            let tol = c * band(&r) + band(&s) + 1e-13 * (1.0 + s.rhs.abs());
            prop_assert!((s.lhs - c * r.lhs).abs() <= tol);
            prop_assert!((s.rhs - c * r.rhs).abs() <= tol);
            prop_assert!((s.margin - c * r.margin).abs() <= 2.0 * tol);
            prop_assert_eq!(s.status, r.status);
        }
    }

    #[test]
    fn reports_translation_invariant(f in arb_convex(), g in arb_convex(), s in -5.0..5.0f64) {
        let d = f.domain();
        let g = function(&g.expr().to_string(), d.a(), d.b()).unwrap();
        let shift = |h: &FunctionSpec| {
            let src = h
                .expr()
                .to_string()
                .replace("exp", "EXP")
                .replace('x', &format!("(x - ({s:?}))"))
                .replace("EXP", "exp");
            function(&src, d.a() + s, d.b() + s).unwrap()
        };
        let (fs, gs) = (shift(&f), shift(&g));
        let before = [
            single_reports(&f),
            vec![theorems::verify_product_mu(&f, &g, TOL).unwrap()],
        ].concat();
        let after = [
            single_reports(&fs),
            vec![theorems::verify_product_mu(&fs, &gs, TOL).unwrap()],
        ].concat();
        for (r, t) in before.iter().zip(&after) {
            prop_assert!(rel_close(r.lhs, t.lhs, 1e-9), "{:?} vs {:?}", r, t);
            prop_assert!(rel_close(r.rhs, t.rhs, 1e-9), "{:?} vs {:?}", r, t);
            prop_assert_eq!(r.status, t.status);
        }
    }

    /// The x-form `(1/(b-a)) int mu f g dx` equals the t-form
    /// `int_0^1 t(1-t) f(ta + (1-t)b) g(ta + (1-t)b) dt`.
    #[test]
    fn product_mu_t_form(f in arb_convex(), g in arb_convex()) {
        let d = f.domain();
        let g = function(&g.expr().to_string(), d.a(), d.b()).unwrap();
        let r = theorems::verify_product_mu(&f, &g, TOL).unwrap();
        let t_form = integrate_fn(
            |t| {
                let x = t * d.a() + (1.0 - t) * d.b();
                Some(t * (1.0 - t) * f.eval(x)? * g.eval(x)?)
            },
            0.0,
            1.0,
            TOL,
        ).unwrap();
        prop_assert!((r.lhs - t_form.value).abs() <= r.lhs_error + t_form.abs_error_estimate + 1e-13 * (1.0 + r.lhs.abs()));
    }

    /// `M/8 >= M/12 + N/24` exactly when `M >= N`; and `M + N = (f(a)+f(b))(g(a)+g(b))`.
    #[test]
    fn endpoint_product_terms(fa in 0.0..10.0f64, fb in 0.0..10.0f64, ga in 0.0..10.0f64, gb in 0.0..10.0f64) {
        let line = |p: f64, q: f64| function(&format!("{p:?} + ({:?})*x", q - p), 0.0, 1.0).unwrap();
        let (f, g) = (line(fa, fb), line(ga, gb));
        let pt = ProductTerms::new(&f, &g);
        let scale = 1.0 + pt.m.abs() + pt.n.abs();
        prop_assert!((pt.m + pt.n - (f.at_a() + f.at_b()) * (g.at_a() + g.at_b())).abs() <= 1e-12 * scale);
        let gap = pt.m / 8.0 - (pt.m / 12.0 + pt.n / 24.0);
        if (pt.m - pt.n).abs() > 1e-9 * scale {
            prop_assert_eq!(gap >= 0.0, pt.m >= pt.n);
        }
    }
}

// ---------- falsify ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn falsify_deterministic_and_sound(p in 0.1..0.9f64, seed in 0u64..10_000) {
        let f = function(&format!("x^{p:?}"), 0.0, 1.0).unwrap();
        let pred = Predicate::Mt(&f);
        let budget = SearchBudget::new(200, 3, seed).unwrap();
        let first = falsify_with(pred, &budget, 1e-6, Execution::Parallel).unwrap();
        let again = falsify_with(pred, &budget, 1e-6, Execution::Parallel).unwrap();
        let seq = falsify_with(pred, &budget, 1e-6, Execution::Sequential).unwrap();
        prop_assert_eq!(first, again);
        prop_assert_eq!(first, seq);
        let w = first.witness.expect("x^p with p < 1 is not MT");
        let probe: Probe = pred.probe(w.x, w.y, w.t).unwrap();
        prop_assert!(probe.is_violation());
        prop_assert_eq!(probe.violation, w.margin);
    }

    #[test]
    fn refinement_never_decreases(p in 0.1..0.9f64, x in 0.0..0.5f64, y in 0.5..1.0f64, t in 0.05..0.95f64, iters in 0usize..6) {
        let f = function(&format!("x^{p:?}"), 0.0, 1.0).unwrap();
        let pred = Predicate::Mt(&f);
        let probe = pred.probe(x, y, Some(t)).unwrap();
        prop_assume!(probe.is_violation());
        let w = probe.into();
        let refined = refine_witness(pred, &w, iters).unwrap();
        prop_assert!(refined.margin >= w.margin);
    }
}

// ---------- report ----------

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO,
        -1e3..1e3f64,
    ]
}

proptest! {
    #[test]
    fn machine_output_round_trips(lhs in finite(), rhs in finite(), le in 0.0..1e-6f64, seed in any::<u64>()) {
        let side = |value, error| theorems::Side { value, error, evaluations: 1, converged: true };
        let report = TheoremReport::new(theorems::TheoremId::TauBound, side(lhs, le), side(rhs, 0.0));
        let rec = Record::Theorem { report: report.clone(), subject: "f".into(), seed };
        let out = emit_report(&[rec], Format::Machine);
        let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
        let row = &doc[0];
        for (key, want) in [
            ("lhs", report.lhs),
            ("rhs", report.rhs),
            ("margin", report.margin),
            ("lhs_error", report.lhs_error),
            ("rhs_error", report.rhs_error),
        ] {
            match row[key].as_f64() {
                Some(got) => prop_assert_eq!(got.to_bits(), want.to_bits(), "{}", key),
                None => prop_assert!(!want.is_finite() && row[key].is_string(), "{}", key),
            }
        }
        prop_assert_eq!(row["seed"].as_u64(), Some(seed));
    }
}
