use neon_core::data::DataMatrix;
use neon_core::expr::{parse, Expr, ExprError, Op};

fn x(i: usize) -> Expr {
    Expr::var(i)
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

#[test]
fn eval_basic_arithmetic() {
    let e = Expr::binary(Op::Add, x(0), c(2.0));
    let m = DataMatrix::from_rows(1, &[vec![3.0]]);
    assert_eq!(e.eval(&m).unwrap(), vec![5.0]);

    let s = Expr::unary(Op::Sin, c(0.0));
    let m = DataMatrix::from_rows(2, &[vec![1.0, 2.0], vec![-4.0, 0.5]]);
    assert_eq!(s.eval(&m).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn eval_propagates_non_finite() {
    let m = DataMatrix::from_rows(1, &[vec![1.0]]);
    let e = Expr::binary(Op::Div, c(1.0), c(0.0));
    assert_eq!(e.eval(&m).unwrap(), vec![f64::INFINITY]);
    let e = Expr::unary(Op::Log, Expr::binary(Op::Sub, c(0.0), x(0)));
    assert!(e.eval(&m).unwrap()[0].is_nan());
    let e = Expr::unary(Op::Sqrt, c(-1.0));
    assert!(e.eval(&m).unwrap()[0].is_nan());
}

#[test]
fn eval_rejects_out_of_range_variable() {
    let m = DataMatrix::from_rows(2, &[vec![1.0, 2.0]]);
    let e = Expr::binary(Op::Add, x(0), x(2));
    assert_eq!(e.eval(&m), Err(ExprError::VariableOutOfRange { index: 2, arity: 2 }));
}

#[test]
fn height_and_size() {
    assert_eq!((x(0).height(), x(0).size()), (0, 1));
    let e = Expr::binary(Op::Add, x(0), Expr::binary(Op::Mul, x(0), x(1)));
    assert_eq!((e.height(), e.size()), (2, 5));
    let mut chain = x(0);
    for _ in 0..13 {
        chain = Expr::unary(Op::Sin, chain);
    }
    assert_eq!(chain.height(), 13);
}

#[test]
fn subtrees_by_height() {
    let e = Expr::binary(Op::Add, x(0), x(1));
    assert_eq!(e.subtrees_of_height(0), vec![1, 2]);
    let e = Expr::binary(Op::Add, x(0), Expr::binary(Op::Mul, x(0), x(1)));
    assert_eq!(e.subtrees_of_height(1), vec![2]);
    assert_eq!(e.subtree(2).unwrap().canonical_string(), "(mul x0 x1)");
    assert_eq!(e.subtrees_of_height(2), vec![0]);
    assert!(e.subtrees_of_height(3).is_empty());
}

#[test]
fn replace_subtree_cases() {
    let e = Expr::binary(Op::Add, x(0), x(1));
    let sq = Expr::binary(Op::Mul, x(0), x(0));
    let out = e.replace_subtree(2, &sq).unwrap();
    assert_eq!(out.canonical_string(), "(add x0 (mul x0 x0))");
    assert_eq!(e.canonical_string(), "(add x0 x1)");
    assert_eq!(e.replace_subtree(0, &sq).unwrap(), sq);
    assert_eq!(out.size(), e.size() - 1 + sq.size());
    assert_eq!(e.replace_subtree(3, &sq), Err(ExprError::StaleNode { index: 3, size: 3 }));
}

#[test]
fn canonical_forms() {
    assert_eq!(x(0).canonical_string(), "x0");
    assert_eq!(Expr::binary(Op::Add, x(0), c(2.0)).canonical_string(), "(add x0 2)");
    assert_eq!(c(core::f64::consts::PI).canonical_string(), "pi");
    let e = Expr::binary(Op::Mul, x(1), Expr::binary(Op::Sub, x(0), c(1.0)));
    let f = Expr::binary(Op::Mul, Expr::binary(Op::Sub, x(0), c(1.0)), x(1));
    assert_ne!(e.canonical_string(), f.canonical_string());
    assert_eq!(e.normalized_string(), f.normalized_string());
    // sub is not commutative
    let g = Expr::binary(Op::Sub, x(1), x(0));
    let h = Expr::binary(Op::Sub, x(0), x(1));
    assert_ne!(g.normalized_string(), h.normalized_string());
}

#[test]
fn preorder_matches_subtree_lookup() {
    let e = parse("(add (sin x0) (mul (cube x1) 3))").unwrap();
    for (k, node) in e.preorder().into_iter().enumerate() {
        assert_eq!(e.subtree(k).unwrap(), node);
    }
    assert_eq!(e.node_depths(), vec![0, 1, 2, 1, 2, 3, 2]);
}

#[test]
#[should_panic(expected = "takes 2 argument(s)")]
fn apply_asserts_arity() {
    let _ = Expr::apply(Op::Add, vec![x(0)]);
}
