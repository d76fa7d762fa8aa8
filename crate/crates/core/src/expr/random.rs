use alloc::vec::Vec;

use rand::Rng;

use super::{Dsl, Expr, Terminal};

/// Draws a terminal: a variable or a constant with equal probability, then
/// uniformly within the chosen kind.
pub fn random_leaf<R: Rng + ?Sized>(dsl: &Dsl, arity: usize, rng: &mut R) -> Expr {
    let use_var = match (arity > 0, !dsl.constants.is_empty()) {
        (true, true) => rng.random_bool(0.5),
        (true, false) => true,
        (false, true) => false,
        (false, false) => panic!("no terminals available"),
    };
    if use_var {
        Expr::Leaf(Terminal::Var(rng.random_range(0..arity)))
    } else {
        Expr::Leaf(Terminal::Const(dsl.constants[rng.random_range(0..dsl.constants.len())]))
    }
}

fn random_node<R: Rng + ?Sized>(dsl: &Dsl, arity: usize, depth: usize, max_height: usize, full: bool, rng: &mut R) -> Expr {
    let n_terms = arity + dsl.constants.len();
    let stop = depth >= max_height
        || dsl.ops.is_empty()
        || (!full && rng.random_range(0..n_terms + dsl.ops.len()) < n_terms);
    if stop {
        return random_leaf(dsl, arity, rng);
    }
    let op = dsl.ops[rng.random_range(0..dsl.ops.len())];
    let children: Vec<Expr> = (0..op.arity())
        .map(|_| random_node(dsl, arity, depth + 1, max_height, full, rng))
        .collect();
    Expr::apply(op, children)
}

/// The "grow" method: at every depth below `max_height` a terminal is chosen
/// with probability `|terminals| / (|terminals| + |operators|)`; at depth
/// `max_height` only terminals are placed. The result has height at most
/// `max_height`.
pub fn random_tree_grow<R: Rng + ?Sized>(dsl: &Dsl, arity: usize, max_height: usize, rng: &mut R) -> Expr {
    random_node(dsl, arity, 0, max_height, false, rng)
}

/// The "full" method: operators everywhere above `height`, terminals at it.
pub fn random_tree_full<R: Rng + ?Sized>(dsl: &Dsl, arity: usize, height: usize, rng: &mut R) -> Expr {
    random_node(dsl, arity, 0, height, true, rng)
}

/// Picks a subtree, preferring tall ones: a height `h` in `1..=height(tree)`
/// is drawn with probability proportional to `h`, then one subtree of that
/// height uniformly. A bare terminal yields the root.
///
/// Returns the preorder index of the chosen subtree.
pub fn sample_subtree_height_biased<R: Rng + ?Sized>(tree: &Expr, rng: &mut R) -> usize {
    let heights = tree.node_heights();
    let hp = heights[0];
    if hp == 0 {
        return 0;
    }
    sample_at_height(&heights, pick_height(hp, rng), rng)
}

pub(crate) fn pick_height<R: Rng + ?Sized>(hp: usize, rng: &mut R) -> usize {
    let total = hp * (hp + 1) / 2;
    let mut r = rng.random_range(0..total);
    for h in 1..=hp {
        if r < h {
            return h;
        }
        r -= h;
    }
    unreachable!()
}

pub(crate) fn sample_at_height<R: Rng + ?Sized>(heights: &[usize], h: usize, rng: &mut R) -> usize {
    let candidates: Vec<usize> = heights
        .iter()
        .enumerate()
        .filter_map(|(k, &nh)| (nh == h).then_some(k))
        .collect();
    candidates[rng.random_range(0..candidates.len())]
}
