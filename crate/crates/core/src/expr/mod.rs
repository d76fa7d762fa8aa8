//! Expression trees over the symbolic-regression instruction set.
//!
//! Heights follow the convention that a leaf has height 0. Node references
//! are preorder indices: the root is 0, its first child 1, and so on.

mod op;
mod parse;
mod random;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use op::{Dsl, Op, Terminal};
pub use parse::{parse, ParseError};
pub use random::{random_tree_full, random_tree_grow, random_leaf, sample_subtree_height_biased};

use crate::data::DataMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("variable x{index} is out of range for {arity} input column(s)")]
    VariableOutOfRange { index: usize, arity: usize },
    #[error("node {index} does not exist in a tree of {size} node(s)")]
    StaleNode { index: usize, size: usize },
}

/// A program: an operator applied to argument subtrees, or a terminal.
///
/// Trees built through [`Expr::apply`] or the parser always have operator
/// arity matching the child count.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Leaf(Terminal),
    Apply(Op, Vec<Expr>),
}

impl Expr {
    pub fn var(i: usize) -> Expr {
        Expr::Leaf(Terminal::Var(i))
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Leaf(Terminal::Const(c))
    }

    /// Panics when `children.len()` differs from the operator's arity.
    pub fn apply(op: Op, children: Vec<Expr>) -> Expr {
        assert_eq!(
            children.len(),
            op.arity(),
            "{op} takes {} argument(s), got {}",
            op.arity(),
            children.len()
        );
        Expr::Apply(op, children)
    }

    pub fn unary(op: Op, a: Expr) -> Expr {
        Expr::apply(op, alloc::vec![a])
    }

    pub fn binary(op: Op, a: Expr, b: Expr) -> Expr {
        Expr::apply(op, alloc::vec![a, b])
    }

    pub fn children(&self) -> &[Expr] {
        match self {
            Expr::Leaf(_) => &[],
            Expr::Apply(_, c) => c,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Expr::Leaf(_))
    }

    pub fn height(&self) -> usize {
        match self {
            Expr::Leaf(_) => 0,
            Expr::Apply(_, c) => 1 + c.iter().map(Expr::height).max().unwrap_or(0),
        }
    }

    /// Node count, operators and terminals alike.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(Expr::size).sum::<usize>()
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Leaf(Terminal::Var(i)) => Some(*i),
            Expr::Leaf(Terminal::Const(_)) => None,
            Expr::Apply(_, c) => c.iter().filter_map(Expr::max_var).max(),
        }
    }

    pub fn has_var(&self) -> bool {
        self.max_var().is_some()
    }

    pub fn check_arity(&self, arity: usize) -> Result<(), ExprError> {
        match self.max_var() {
            Some(index) if index >= arity => Err(ExprError::VariableOutOfRange { index, arity }),
            _ => Ok(()),
        }
    }

    /// Evaluates the tree on every row of `inputs`.
    ///
    /// Non-finite intermediate values are propagated, never masked.
    pub fn eval(&self, inputs: &DataMatrix) -> Result<Vec<f64>, ExprError> {
        self.check_arity(inputs.cols())?;
        Ok(self.eval_unchecked(inputs))
    }

    fn eval_unchecked(&self, inputs: &DataMatrix) -> Vec<f64> {
        match self {
            Expr::Leaf(Terminal::Var(i)) => inputs.column(*i).to_vec(),
            Expr::Leaf(Terminal::Const(c)) => alloc::vec![*c; inputs.rows()],
            Expr::Apply(op, c) => match c.as_slice() {
                [a] => {
                    let mut v = a.eval_unchecked(inputs);
                    for x in v.iter_mut() {
                        *x = op.apply1(*x);
                    }
                    v
                }
                [a, b] => {
                    let mut v = a.eval_unchecked(inputs);
                    let w = b.eval_unchecked(inputs);
                    for (x, y) in v.iter_mut().zip(w) {
                        *x = op.apply2(*x, y);
                    }
                    v
                }
                _ => unreachable!("arity invariant"),
            },
        }
    }

    /// Evaluates the tree on a single input row.
    pub fn eval_row(&self, row: &[f64]) -> f64 {
        match self {
            Expr::Leaf(Terminal::Var(i)) => row[*i],
            Expr::Leaf(Terminal::Const(c)) => *c,
            Expr::Apply(op, c) => match c.as_slice() {
                [a] => op.apply1(a.eval_row(row)),
                [a, b] => op.apply2(a.eval_row(row), b.eval_row(row)),
                _ => unreachable!("arity invariant"),
            },
        }
    }

    /// Subtrees in preorder; index `k` of the result is node `k`.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::with_capacity(self.size());
        let mut stack = alloc::vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            stack.extend(e.children().iter().rev());
        }
        out
    }

    /// Height of every node, in preorder.
    pub fn node_heights(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut Vec<usize>) -> usize {
            let slot = out.len();
            out.push(0);
            let h = e.children().iter().map(|c| walk(c, out) + 1).max().unwrap_or(0);
            out[slot] = h;
            h
        }
        let mut out = Vec::with_capacity(self.size());
        walk(self, &mut out);
        out
    }

    /// Depth of every node (root = 0), in preorder.
    pub fn node_depths(&self) -> Vec<usize> {
        fn walk(e: &Expr, depth: usize, out: &mut Vec<usize>) {
            out.push(depth);
            for c in e.children() {
                walk(c, depth + 1, out);
            }
        }
        let mut out = Vec::with_capacity(self.size());
        walk(self, 0, &mut out);
        out
    }

    /// Preorder indices of all subtrees whose height is exactly `h`.
    pub fn subtrees_of_height(&self, h: usize) -> Vec<usize> {
        self.node_heights()
            .into_iter()
            .enumerate()
            .filter_map(|(k, nh)| (nh == h).then_some(k))
            .collect()
    }

    pub fn subtree(&self, at: usize) -> Result<&Expr, ExprError> {
        let mut idx = at;
        let mut cur = self;
        'descend: loop {
            if idx == 0 {
                return Ok(cur);
            }
            idx -= 1;
            for c in cur.children() {
                let s = c.size();
                if idx < s {
                    cur = c;
                    continue 'descend;
                }
                idx -= s;
            }
            return Err(ExprError::StaleNode { index: at, size: self.size() });
        }
    }

    /// Returns a copy of `self` with the subtree at preorder index `at`
    /// replaced by `with`. `self` is left untouched.
    pub fn replace_subtree(&self, at: usize, with: &Expr) -> Result<Expr, ExprError> {
        let size = self.size();
        if at >= size {
            return Err(ExprError::StaleNode { index: at, size });
        }
        fn rebuild(e: &Expr, idx: usize, with: &Expr) -> Expr {
            if idx == 0 {
                return with.clone();
            }
            let Expr::Apply(op, children) = e else { unreachable!("index checked against size") };
            let mut rest = idx - 1;
            let mut out = Vec::with_capacity(children.len());
            let mut placed = false;
            for c in children {
                let s = c.size();
                if !placed && rest < s {
                    out.push(rebuild(c, rest, with));
                    placed = true;
                } else {
                    if !placed {
                        rest -= s;
                    }
                    out.push(c.clone());
                }
            }
            Expr::Apply(*op, out)
        }
        Ok(rebuild(self, at, with))
    }

    /// Prefix s-expression, e.g. `(add x0 (mul 2 x1))`.
    pub fn canonical_string(&self) -> String {
        alloc::format!("{self}")
    }

    /// Like [`Expr::canonical_string`], but the operands of commutative
    /// operators are sorted, so `(add x1 x0)` and `(add x0 x1)` coincide.
    pub fn normalized_string(&self) -> String {
        match self {
            Expr::Leaf(t) => alloc::format!("{t}"),
            Expr::Apply(op, c) => {
                let mut parts: Vec<String> = c.iter().map(Expr::normalized_string).collect();
                if op.is_commutative() {
                    parts.sort();
                }
                let mut s = String::from("(");
                s.push_str(op.symbol());
                for p in parts {
                    s.push(' ');
                    s.push_str(&p);
                }
                s.push(')');
                s
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Leaf(t) => write!(f, "{t}"),
            Expr::Apply(op, c) => {
                write!(f, "({op}")?;
                for child in c {
                    write!(f, " {child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl core::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <String as serde::Deserialize>::deserialize(deserializer)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}
