use kropina_core::autodiff::{fd_partial, FdConfig, Jet, MultiIndex, Var};
use kropina_core::expr::{eval_expr, parse, BinOp, ConstEnv, Coord, Expr, ExprError, UnaryFn};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..50).prop_map(|n| Expr::num(f64::from(n) / 4.0)),
        Just(Expr::Var(Coord::X1)),
        Just(Expr::Var(Coord::X2)),
        (0u8..3).prop_map(Expr::Const),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 40, 2, |inner| {
        let f = prop_oneof![
            Just(UnaryFn::Neg),
            Just(UnaryFn::Sin),
            Just(UnaryFn::Cos),
            Just(UnaryFn::Exp),
            Just(UnaryFn::Ln),
            Just(UnaryFn::Sqrt),
            Just(UnaryFn::Cbrt),
            Just(UnaryFn::Abs),
        ];
        let op = prop_oneof![
            Just(BinOp::Add),
            Just(BinOp::Sub),
            Just(BinOp::Mul),
            Just(BinOp::Div),
            Just(BinOp::Pow),
        ];
        prop_oneof![
            (f, inner.clone()).prop_map(|(f, e)| Expr::unary(f, e)),
            (op, inner.clone(), inner).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
        ]
    })
}

/// Smooth expressions without domain restrictions near the sample region.
fn smooth() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (1u32..8).prop_map(|n| Expr::num(f64::from(n) / 4.0)),
        Just(Expr::Var(Coord::X1)),
        Just(Expr::Var(Coord::X2)),
    ];
    leaf.prop_recursive(4, 20, 2, |inner| {
        let f = prop_oneof![Just(UnaryFn::Sin), Just(UnaryFn::Cos), Just(UnaryFn::Neg)];
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul)];
        prop_oneof![
            (f, inner.clone()).prop_map(|(f, e)| Expr::unary(f, e)),
            (op, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::binary(op, a, b)),
            inner.prop_map(|e| Expr::unary(UnaryFn::Exp, Expr::unary(UnaryFn::Sin, e))),
        ]
    })
}

fn env() -> ConstEnv {
    ConstEnv::from_values(&[0.5, -1.25, 2.0])
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(e in expr()) {
        let text = e.to_string();
        let back = parse(&text).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
        prop_assert_eq!(back.to_string(), text);
    }

    #[test]
    fn jet_value_matches_scalar_evaluation(e in expr(), x1 in -2.0f64..2.0, x2 in -2.0f64..2.0) {
        let env = env();
        let scalar = e.eval_scalar(&env, x1, x2);
        let jet = eval_expr(&e, &env, &Jet::variable(x1, Var::X1, 0).unwrap(), &Jet::variable(x2, Var::X2, 0).unwrap());
        match (scalar, jet) {
            (Ok(s), Ok(j)) if s.is_finite() => {
                let v = j.value();
                prop_assert!((v - s).abs() <= 1e-12 * s.abs().max(1.0), "{} vs {}", v, s);
            }
            (Ok(_), _) | (Err(_), Err(_)) => {}
            (Err(e1), Ok(j)) => prop_assert!(!j.value().is_finite(), "scalar failed with {e1} but jet gave {:?}", j.value()),
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences(e in smooth(), x1 in -1.0f64..1.0, x2 in -1.0f64..1.0) {
        let env = env();
        let order = 2;
        let jet = eval_expr(&e, &env, &Jet::variable(x1, Var::X1, order).unwrap(), &Jet::variable(x2, Var::X2, order).unwrap()).unwrap();
        let f = |p: [f64; 4]| e.eval_scalar(&env, p[0], p[1]);
        for idx in [[1, 0, 0, 0], [0, 1, 0, 0], [2, 0, 0, 0], [1, 1, 0, 0], [0, 2, 0, 0]] {
            let idx = MultiIndex::new(idx);
            let fd = fd_partial(f, [x1, x2, 0.0, 0.0], &idx, FdConfig::default()).unwrap();
            let j = jet.partial(&idx).unwrap();
            prop_assert!((j - fd).abs() / j.abs().max(1.0) < 1e-5, "{} {:?}: {} vs {}", e, idx, j, fd);
        }
    }
}

#[test]
fn parse_errors_carry_offsets() {
    match parse("x1 + y") {
        Err(ExprError::UnknownIdentifier { name, offset }) => {
            assert_eq!(name, "y");
            assert_eq!(offset, 5);
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse("(x1"), Err(ExprError::SyntaxError { .. })));
    assert!(matches!(parse("sin x1"), Err(ExprError::SyntaxError { .. })));
}

#[test]
fn unbound_constant_reported() {
    let e = parse("k4 * x1").unwrap();
    let r = e.eval_scalar(&ConstEnv::new(), 1.0, 1.0);
    assert!(matches!(r, Err(ExprError::UnboundConstant(_))), "{r:?}");
}
