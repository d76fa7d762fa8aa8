//! Semantic graph of application and value nodes.
//!
//! A subtree is parsed bottom-up into value nodes (variables, constants and
//! the results of operator applications) and application nodes (one
//! operator applied to concrete argument value nodes). Value nodes whose
//! fingerprints coincide are merged, so the graph never holds two nodes
//! with the same semantics. [`SemGraph::expand`] adds one layer of
//! applications over all available arguments; the new application nodes
//! form the *front*.

mod fingerprint;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

pub use fingerprint::{probe_inputs, value_fingerprint, Fingerprint, PROBE_ROWS, REL_TOL};

use crate::data::{DataMatrix, SrTask};
use crate::expr::{Dsl, Expr, Op, Terminal};

/// Default cap on application nodes created by one expansion.
pub const DEFAULT_NODE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("expansion needs {required} application nodes, over the budget of {budget}")]
    BudgetExceeded { budget: usize, required: usize },
    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValueId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AppId(pub u32);

impl ValueId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl AppId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    Variable,
    Value,
}

/// How a value node can be obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Derivation {
    Terminal(Terminal),
    Application(AppId),
}

#[derive(Clone, Debug)]
pub struct ValueNode {
    pub id: ValueId,
    pub kind: ValueKind,
    /// Task rows followed by the fingerprint probe rows.
    values: Vec<f64>,
    n_task: usize,
    pub fingerprint: Fingerprint,
    /// Every known way of producing this value; the first one created the node.
    pub derivations: Vec<Derivation>,
    /// Smallest known tree producing this value (earliest wins ties).
    pub min_tree: Expr,
    /// Whether the node existed before the most recent expansion.
    pub in_source: bool,
}

impl ValueNode {
    /// Values on the task's examples.
    pub fn values(&self) -> &[f64] {
        &self.values[..self.n_task]
    }

    pub fn probe_values(&self) -> &[f64] {
        &self.values[self.n_task..]
    }
}

#[derive(Clone, Debug)]
pub struct ApplicationNode {
    pub id: AppId,
    pub op: Op,
    pub args: Vec<ValueId>,
    pub result: ValueId,
    /// Set exactly on the nodes created by the most recent expansion.
    pub is_expansion: bool,
}

type AppKey = (Op, u32, u32);

fn app_key(op: Op, args: &[ValueId]) -> AppKey {
    match *args {
        [a] => (op, a.0, u32::MAX),
        [a, b] if op.is_commutative() && b < a => (op, b.0, a.0),
        [a, b] => (op, a.0, b.0),
        _ => unreachable!("arity invariant"),
    }
}

/// Counters describing one expansion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExpansionStats {
    /// Operator/ordered-argument tuples with at least one source argument,
    /// before collapsing commutative orders or skipping existing nodes.
    pub ordered_tuples: usize,
    /// Application nodes created (the front size).
    pub new_applications: usize,
    pub new_values: usize,
}

/// One argument available to an expansion: an existing value node or a
/// terminal that is not yet represented in the graph.
#[derive(Clone, Debug)]
enum PoolEntry {
    Existing { id: ValueId, source: bool },
    Fresh { terminal: Terminal, values: Vec<f64>, fingerprint: Fingerprint },
}

impl PoolEntry {
    fn source(&self) -> bool {
        matches!(self, PoolEntry::Existing { source: true, .. })
    }
}

struct ExpansionPlan {
    pool: Vec<PoolEntry>,
    candidates: Vec<(Op, [usize; 2])>,
    ordered_tuples: usize,
}

#[derive(Clone, Debug)]
pub struct SemGraph {
    /// Task rows stacked over the probe rows.
    inputs: DataMatrix,
    n_task: usize,
    values: Vec<ValueNode>,
    apps: Vec<ApplicationNode>,
    by_fingerprint: BTreeMap<Fingerprint, ValueId>,
    by_key: BTreeMap<AppKey, AppId>,
    roots: Vec<ValueId>,
    front: Vec<AppId>,
}

impl SemGraph {
    /// An empty graph over the task's examples.
    pub fn new(task: &SrTask) -> Self {
        let inputs = task.inputs.vstack(&probe_inputs(task.arity()));
        SemGraph {
            inputs,
            n_task: task.len(),
            values: Vec::new(),
            apps: Vec::new(),
            by_fingerprint: BTreeMap::new(),
            by_key: BTreeMap::new(),
            roots: Vec::new(),
            front: Vec::new(),
        }
    }

    /// Builds the graph of a single subtree `s`.
    pub fn from_tree(s: &Expr, task: &SrTask) -> Result<Self, GraphError> {
        Self::from_trees(core::slice::from_ref(s), task)
    }

    /// Builds one graph holding several subtrees; their value nodes are shared.
    pub fn from_trees(trees: &[Expr], task: &SrTask) -> Result<Self, GraphError> {
        let mut g = SemGraph::new(task);
        for t in trees {
            g.add_tree(t)?;
        }
        Ok(g)
    }

    pub fn n_examples(&self) -> usize {
        self.n_task
    }

    pub fn arity(&self) -> usize {
        self.inputs.cols()
    }

    pub fn values(&self) -> &[ValueNode] {
        &self.values
    }

    pub fn apps(&self) -> &[ApplicationNode] {
        &self.apps
    }

    pub fn value(&self, id: ValueId) -> &ValueNode {
        &self.values[id.index()]
    }

    pub fn app(&self, id: AppId) -> &ApplicationNode {
        &self.apps[id.index()]
    }

    /// Value nodes of the trees passed to [`SemGraph::add_tree`], in order.
    pub fn roots(&self) -> &[ValueId] {
        &self.roots
    }

    /// Application nodes created by the most recent expansion.
    pub fn front(&self) -> &[AppId] {
        &self.front
    }

    /// Operators with at least one application node, in [`Op::ALL`] order.
    pub fn used_ops(&self) -> Vec<Op> {
        let mut used = [false; Op::COUNT];
        for a in &self.apps {
            used[a.op.index()] = true;
        }
        Op::ALL.iter().copied().filter(|op| used[op.index()]).collect()
    }

    fn terminal_values(&self, t: Terminal) -> Vec<f64> {
        match t {
            Terminal::Var(i) => self.inputs.column(i).to_vec(),
            Terminal::Const(c) => alloc::vec![c; self.inputs.rows()],
        }
    }

    fn fingerprint_of(&self, values: &[f64]) -> Fingerprint {
        value_fingerprint(&values[..self.n_task], &values[self.n_task..])
    }

    /// Returns the node with this fingerprint, or creates one.
    fn intern(&mut self, values: Vec<f64>, fingerprint: Fingerprint, kind: ValueKind, derivation: Derivation, tree: Expr) -> (ValueId, bool) {
        if let Some(&id) = self.by_fingerprint.get(&fingerprint) {
            let node = &mut self.values[id.index()];
            node.derivations.push(derivation);
            if kind == ValueKind::Variable {
                node.kind = ValueKind::Variable;
            }
            if tree.size() < node.min_tree.size() {
                node.min_tree = tree;
            }
            return (id, false);
        }
        let id = ValueId(self.values.len() as u32);
        self.values.push(ValueNode {
            id,
            kind,
            values,
            n_task: self.n_task,
            fingerprint,
            derivations: alloc::vec![derivation],
            min_tree: tree,
            in_source: true,
        });
        self.by_fingerprint.insert(fingerprint, id);
        (id, true)
    }

    fn intern_terminal(&mut self, t: Terminal) -> ValueId {
        let values = self.terminal_values(t);
        let fp = self.fingerprint_of(&values);
        let kind = if t.is_var() { ValueKind::Variable } else { ValueKind::Value };
        self.intern(values, fp, kind, Derivation::Terminal(t), Expr::Leaf(t)).0
    }

    fn apply_values(&self, op: Op, args: &[ValueId]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.inputs.rows()];
        let slices: Vec<&[f64]> = args.iter().map(|a| self.values[a.index()].values.as_slice()).collect();
        op.apply_slices(&slices, &mut out);
        out
    }

    /// Adds an application node (or finds the existing one) and interns its result.
    fn add_application(&mut self, op: Op, args: Vec<ValueId>, is_expansion: bool) -> (AppId, bool) {
        let key = app_key(op, &args);
        if let Some(&id) = self.by_key.get(&key) {
            return (id, false);
        }
        let values = self.apply_values(op, &args);
        let fp = self.fingerprint_of(&values);
        let id = AppId(self.apps.len() as u32);
        let tree = Expr::apply(op, args.iter().map(|a| self.values[a.index()].min_tree.clone()).collect());
        let (result, created) = self.intern(values, fp, ValueKind::Value, Derivation::Application(id), tree);
        if created {
            self.values[result.index()].in_source = !is_expansion;
        }
        self.apps.push(ApplicationNode { id, op, args, result, is_expansion });
        self.by_key.insert(key, id);
        (id, true)
    }

    /// Parses `tree` bottom-up into the graph and records its root value node.
    pub fn add_tree(&mut self, tree: &Expr) -> Result<ValueId, GraphError> {
        tree.check_arity(self.arity())?;
        let root = self.add_tree_unchecked(tree);
        self.roots.push(root);
        Ok(root)
    }

    fn add_tree_unchecked(&mut self, tree: &Expr) -> ValueId {
        match tree {
            Expr::Leaf(t) => self.intern_terminal(*t),
            Expr::Apply(op, children) => {
                let args: Vec<ValueId> = children.iter().map(|c| self.add_tree_unchecked(c)).collect();
                let (app, _) = self.add_application(*op, args, false);
                self.apps[app.index()].result
            }
        }
    }

    fn plan_expansion(&self, dsl: &Dsl, terminals: &[Terminal]) -> ExpansionPlan {
        let mut pool: Vec<PoolEntry> = self
            .values
            .iter()
            .map(|v| PoolEntry::Existing { id: v.id, source: true })
            .collect();
        let mut fresh_fps: Vec<Fingerprint> = Vec::new();
        for &t in terminals {
            let values = self.terminal_values(t);
            let fp = self.fingerprint_of(&values);
            if self.by_fingerprint.contains_key(&fp) || fresh_fps.contains(&fp) {
                continue;
            }
            fresh_fps.push(fp);
            pool.push(PoolEntry::Fresh { terminal: t, values, fingerprint: fp });
        }

        let p = pool.len();
        let q = pool.iter().filter(|e| e.source()).count();
        let mut ordered_tuples = 0;
        let mut candidates = Vec::new();
        let existing = |op: Op, idx: &[usize]| -> bool {
            let ids: Option<Vec<ValueId>> = idx
                .iter()
                .map(|&k| match pool[k] {
                    PoolEntry::Existing { id, .. } => Some(id),
                    PoolEntry::Fresh { .. } => None,
                })
                .collect();
            ids.is_some_and(|ids| self.by_key.contains_key(&app_key(op, &ids)))
        };
        for &op in &dsl.ops {
            if op.arity() == 1 {
                ordered_tuples += q;
                for a in 0..p {
                    if pool[a].source() && !existing(op, &[a]) {
                        candidates.push((op, [a, usize::MAX]));
                    }
                }
            } else {
                ordered_tuples += p * p - (p - q) * (p - q);
                for a in 0..p {
                    let start = if op.is_commutative() { a } else { 0 };
                    for b in start..p {
                        if (pool[a].source() || pool[b].source()) && !existing(op, &[a, b]) {
                            candidates.push((op, [a, b]));
                        }
                    }
                }
            }
        }
        ExpansionPlan { pool, candidates, ordered_tuples }
    }

    /// Number of application nodes [`SemGraph::expand`] would create.
    pub fn expansion_size(&self, dsl: &Dsl, terminals: &[Terminal]) -> usize {
        self.plan_expansion(dsl, terminals).candidates.len()
    }

    /// Adds one layer of application nodes: every operator of `dsl` applied
    /// to every argument tuple drawn from the graph's value nodes and
    /// `terminals`, where at least one argument is a value node already in
    /// the graph. Commutative operators get each unordered pair once, and
    /// tuples already present as application nodes are skipped.
    ///
    /// Results are fingerprint-deduplicated against all value nodes. Returns
    /// the new front; nothing is modified when the budget would be exceeded.
    pub fn expand(&mut self, dsl: &Dsl, terminals: &[Terminal], budget: usize) -> Result<ExpansionStats, GraphError> {
        let plan = self.plan_expansion(dsl, terminals);
        if plan.candidates.len() > budget {
            return Err(GraphError::BudgetExceeded { budget, required: plan.candidates.len() });
        }
        for v in &mut self.values {
            v.in_source = true;
        }
        for a in &mut self.apps {
            a.is_expansion = false;
        }
        let values_before = self.values.len();
        let ids: Vec<ValueId> = plan
            .pool
            .into_iter()
            .map(|entry| match entry {
                PoolEntry::Existing { id, .. } => id,
                PoolEntry::Fresh { terminal, values, fingerprint } => {
                    let kind = if terminal.is_var() { ValueKind::Variable } else { ValueKind::Value };
                    let (id, _) = self.intern(values, fingerprint, kind, Derivation::Terminal(terminal), Expr::Leaf(terminal));
                    self.values[id.index()].in_source = false;
                    id
                }
            })
            .collect();
        let mut front = Vec::with_capacity(plan.candidates.len());
        for (op, idx) in plan.candidates {
            let args: Vec<ValueId> = idx[..op.arity()].iter().map(|&k| ids[k]).collect();
            let (id, created) = self.add_application(op, args, true);
            debug_assert!(created);
            front.push(id);
        }
        let stats = ExpansionStats {
            ordered_tuples: plan.ordered_tuples,
            new_applications: front.len(),
            new_values: self.values.len() - values_before,
        };
        self.front = front;
        Ok(stats)
    }

    /// The program an application node represents: its operator over the
    /// smallest known tree of each argument.
    pub fn candidate_tree(&self, app: AppId) -> Expr {
        let a = &self.apps[app.index()];
        Expr::apply(a.op, a.args.iter().map(|v| self.values[v.index()].min_tree.clone()).collect())
    }

    /// Recomputes every value vector for new examples of the same arity.
    ///
    /// Node identities, fingerprints and the front are kept: the structure
    /// stays as it was decided on the original examples.
    pub fn reinstantiate(&mut self, task: &SrTask) {
        assert_eq!(task.arity(), self.arity(), "reinstantiation cannot change arity");
        self.inputs = task.inputs.vstack(&probe_inputs(task.arity()));
        self.n_task = task.len();
        for k in 0..self.values.len() {
            let values = match self.values[k].derivations[0] {
                Derivation::Terminal(t) => self.terminal_values(t),
                Derivation::Application(a) => {
                    let app = &self.apps[a.index()];
                    self.apply_values(app.op, &app.args)
                }
            };
            let node = &mut self.values[k];
            node.values = values;
            node.n_task = self.n_task;
        }
    }

    /// Line-oriented listing of all nodes, for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in &self.values {
            let kind = match v.kind {
                ValueKind::Variable => "variable",
                ValueKind::Value => "value",
            };
            let _ = write!(out, "value {} {kind} [", v.id.0);
            for (k, x) in v.values().iter().take(4).enumerate() {
                if k > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x}");
            }
            let fp = alloc::format!("{}", v.fingerprint);
            let _ = writeln!(out, "] {}", &fp[..12]);
        }
        for a in &self.apps {
            let _ = write!(out, "app {} {}", a.id.0, a.op);
            for arg in &a.args {
                let _ = write!(out, " {}", arg.0);
            }
            let _ = writeln!(out, " -> {}{}", a.result.0, if a.is_expansion { " *" } else { "" });
        }
        out
    }
}
