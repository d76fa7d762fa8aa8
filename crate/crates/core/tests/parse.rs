use std::f64::consts::PI;

use neon_core::expr::{parse, Expr, Op, ParseError};

#[test]
fn parses_nested() {
    let e = parse("(add x0 (mul 2 x1))").unwrap();
    assert_eq!(e.canonical_string(), "(add x0 (mul 2 x1))");
    assert_eq!(parse("  pi ").unwrap(), Expr::constant(PI));
    assert_eq!(parse("-1.5").unwrap(), Expr::constant(-1.5));
    assert_eq!(parse("x12").unwrap(), Expr::var(12));
}

#[test]
fn reports_errors() {
    assert_eq!(parse("(add x0"), Err(ParseError::UnexpectedEnd));
    assert_eq!(parse("(add x0 x1 x2)"), Err(ParseError::Arity { op: Op::Add, expected: 2, found: 3 }));
    let err = parse("(tanh x0)").unwrap_err();
    assert_eq!(err.unknown_symbol(), Some("tanh"));
    assert!(matches!(parse("x0 x1"), Err(ParseError::Trailing { offset: 3 })));
    assert!(matches!(parse("(sin y)"), Err(ParseError::UnknownSymbol { .. })));
    assert!(matches!(parse(")"), Err(ParseError::UnexpectedToken { .. })));
}
