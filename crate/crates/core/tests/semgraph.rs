use neon_core::data::{DataMatrix, SrTask};
use neon_core::expr::{parse, Dsl, Expr, Op};
use neon_core::semgraph::{GraphError, SemGraph, ValueKind, DEFAULT_NODE_BUDGET};

fn task1(xs: &[f64]) -> SrTask {
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    SrTask::new("t", DataMatrix::from_rows(1, &rows), vec![0.0; xs.len()], None)
}

#[test]
fn add_x0_x0_graph() {
    let t = task1(&[1.0, 2.0]);
    let g = SemGraph::from_tree(&parse("(add x0 x0)").unwrap(), &t).unwrap();
    assert_eq!(g.values().len(), 2);
    assert_eq!(g.apps().len(), 1);
    assert_eq!(g.values().iter().filter(|v| v.kind == ValueKind::Variable).count(), 1);
    assert_eq!(g.value(g.roots()[0]).values(), &[2.0, 4.0]);
}

#[test]
fn single_variable_graph() {
    let t = task1(&[1.0, 2.0]);
    let g = SemGraph::from_tree(&Expr::var(0), &t).unwrap();
    assert_eq!(g.values().len(), 1);
    assert!(g.apps().is_empty());
}

#[test]
fn equal_semantics_share_a_value_node() {
    let t = task1(&[1.0, 2.0, -3.5]);
    let a = parse("(mul 2 x0)").unwrap();
    let b = parse("(add x0 x0)").unwrap();
    let g = SemGraph::from_trees(&[a, b], &t).unwrap();
    assert_eq!(g.roots()[0], g.roots()[1]);
    assert_eq!(g.apps().len(), 2);
    let shared = g.value(g.roots()[0]);
    assert_eq!(shared.derivations.len(), 2);
    // both derivations have 3 nodes; the first one wins
    assert_eq!(shared.min_tree.canonical_string(), "(mul 2 x0)");
}

#[test]
fn expansion_of_a_lone_variable() {
    let t = task1(&[0.5, 1.5, -2.0]);
    let mut g = SemGraph::from_tree(&Expr::var(0), &t).unwrap();
    let dsl = Dsl::standard();
    let stats = g.expand(&dsl, &dsl.terminals(1), DEFAULT_NODE_BUDGET).unwrap();
    // ordered tuples: 4 * (6^2 - 5^2) binary + 7 unary
    assert_eq!(stats.ordered_tuples, 51);
    // add and mul collapse to 6 unordered pairs each; sub and div keep 11
    assert_eq!(stats.new_applications, 6 + 6 + 11 + 11 + 7);
    assert_eq!(g.front().len(), stats.new_applications);
    assert!(g.apps().iter().all(|a| a.is_expansion));
}

#[test]
fn identity_expansion_links_to_existing_value() {
    let t = task1(&[0.5, 1.5, -2.0]);
    let mut g = SemGraph::from_tree(&Expr::var(0), &t).unwrap();
    let dsl = Dsl::standard();
    g.expand(&dsl, &dsl.terminals(1), DEFAULT_NODE_BUDGET).unwrap();
    let x0 = g.roots()[0];
    let plus_zero = g
        .front()
        .iter()
        .map(|&a| g.app(a))
        .find(|a| a.op == Op::Add && g.candidate_tree(a.id).normalized_string() == "(add 0 x0)")
        .unwrap();
    assert_eq!(plus_zero.result, x0);
}

#[test]
fn expansion_budget_is_enforced_without_mutation() {
    let t = task1(&[0.5, 1.5]);
    let mut g = SemGraph::from_tree(&parse("(add x0 (sin x0))").unwrap(), &t).unwrap();
    let dsl = Dsl::standard();
    let need = g.expansion_size(&dsl, &dsl.terminals(1));
    let before = (g.values().len(), g.apps().len());
    assert_eq!(
        g.expand(&dsl, &dsl.terminals(1), need - 1),
        Err(GraphError::BudgetExceeded { budget: need - 1, required: need })
    );
    assert_eq!((g.values().len(), g.apps().len()), before);
    assert_eq!(g.expand(&dsl, &dsl.terminals(1), need).unwrap().new_applications, need);
}

#[test]
fn existing_applications_are_not_recreated() {
    let t = SrTask::new("t", DataMatrix::from_rows(2, &[vec![1.0, 2.0], vec![3.0, -1.0]]), vec![0.0, 0.0], None);
    let mut g = SemGraph::from_trees(&[Expr::var(0), Expr::var(1), parse("(add x1 x0)").unwrap()], &t).unwrap();
    let dsl = Dsl { ops: vec![Op::Add], constants: vec![] };
    g.expand(&dsl, &dsl.terminals(2), 100).unwrap();
    // pool {x0, x1, x0+x1}: 6 unordered pairs, minus the existing add(x0, x1)
    assert_eq!(g.front().len(), 5);
}

#[test]
fn candidate_tree_and_front_flags() {
    let t = task1(&[1.0, 2.0]);
    let mut g = SemGraph::from_tree(&Expr::var(0), &t).unwrap();
    let dsl = Dsl { ops: vec![Op::Add], constants: vec![2.0] };
    g.expand(&dsl, &dsl.terminals(1), 100).unwrap();
    let trees: Vec<String> = g.front().iter().map(|&a| g.candidate_tree(a).canonical_string()).collect();
    assert_eq!(trees, vec!["(add x0 x0)", "(add x0 2)"]);
    let before = g.front().to_vec();
    g.expand(&dsl, &dsl.terminals(1), 100).unwrap();
    for a in g.apps() {
        assert_eq!(a.is_expansion, g.front().contains(&a.id));
        assert!(!(before.contains(&a.id) && a.is_expansion));
    }
}

#[test]
fn reinstantiate_recomputes_values_and_keeps_structure() {
    let t = task1(&[1.0, 2.0]);
    let mut g = SemGraph::from_tree(&parse("(mul (sin x0) 3)").unwrap(), &t).unwrap();
    let dsl = Dsl::standard();
    g.expand(&dsl, &dsl.terminals(1), DEFAULT_NODE_BUDGET).unwrap();
    let shape = (g.values().len(), g.apps().len(), g.front().to_vec());
    let t2 = task1(&[0.25, -1.0, 4.0]);
    g.reinstantiate(&t2);
    assert_eq!((g.values().len(), g.apps().len(), g.front().to_vec()), shape);
    for v in g.values() {
        assert_eq!(v.values().len(), 3);
        let expect = v.min_tree.eval(&t2.inputs).unwrap();
        for (a, b) in v.values().iter().zip(&expect) {
            assert!(a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}

#[test]
fn dump_lists_every_node() {
    let t = task1(&[1.0, 2.0]);
    let g = SemGraph::from_tree(&parse("(add x0 1)").unwrap(), &t).unwrap();
    let d = g.dump();
    assert_eq!(d.lines().count(), g.values().len() + g.apps().len());
    assert!(d.contains("app 0 add 0 1 -> 2"));
    assert!(d.starts_with("value 0 variable [1 2]"));
}
