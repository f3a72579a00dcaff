//! Expression trees over the protected function set `{+, -, *, /, log, sqrt}`
//! with feature terminals only, stored as a flat prefix-order node list so a
//! subtree is always a contiguous slice.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{Dataset, FeatureMask, FeatureSimilarity};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default initialization depth ramp.
pub const INIT_DEPTH: (usize, usize) = (2, 6);
/// Maximum depth of subtrees grown by mutation.
pub const MUTATION_DEPTH: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    Add,
    Sub,
    Mul,
    Div,
    Log,
    Sqrt,
    Var(usize),
}

impl Node {
    pub const FUNCTIONS: [Node; 6] = [Node::Add, Node::Sub, Node::Mul, Node::Div, Node::Log, Node::Sqrt];

    pub fn arity(self) -> usize {
        match self {
            Node::Add | Node::Sub | Node::Mul | Node::Div => 2,
            Node::Log | Node::Sqrt => 1,
            Node::Var(_) => 0,
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Node::Var(_))
    }

    fn symbol(self) -> &'static str {
        match self {
            Node::Add => "+",
            Node::Sub => "-",
            Node::Mul => "*",
            Node::Div => "/",
            Node::Log => "log",
            Node::Sqrt => "sqrt",
            Node::Var(_) => "x",
        }
    }

    fn from_symbol(s: &str) -> Option<Node> {
        Some(match s {
            "+" => Node::Add,
            "-" => Node::Sub,
            "*" => Node::Mul,
            "/" => Node::Div,
            "log" => Node::Log,
            "sqrt" => Node::Sqrt,
            _ => return None,
        })
    }
}

/// Applies a function node with protection: `x / 0 = x`, `log y = y` for
/// `y <= 0`, `sqrt y = y` for `y < 0`. Overflow saturates to the largest
/// finite magnitude.
#[inline]
pub fn apply<T: Scalar>(op: Node, a: T, b: T) -> T {
    let v = match op {
        Node::Add => a + b,
        Node::Sub => a - b,
        Node::Mul => a * b,
        Node::Div => {
            if b == T::zero() {
                a
            } else {
                a / b
            }
        }
        Node::Log => {
            if a <= T::zero() {
                a
            } else {
                a.ln()
            }
        }
        Node::Sqrt => {
            if a < T::zero() {
                a
            } else {
                a.sqrt()
            }
        }
        Node::Var(_) => unreachable!("terminals are not applied"),
    };
    v.saturate()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeMetrics {
    pub node_count: usize,
    /// Edges on the longest root-to-leaf path; a lone terminal has depth 0.
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExpressionTree {
    nodes: Vec<Node>,
}

impl ExpressionTree {
    pub fn terminal(feature: usize) -> Self {
        Self {
            nodes: vec![Node::Var(feature)],
        }
    }

    /// Wraps a prefix-order node list, checking that every node has its children.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        let mut open = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if open == 0 {
                return Err(Error::Expression(format!("trailing nodes after position {i}")));
            }
            open = open - 1 + n.arity();
        }
        if open != 0 || nodes.is_empty() {
            return Err(Error::Expression("incomplete tree".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Exclusive end of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    pub fn subtree(&self, start: usize) -> &[Node] {
        &self.nodes[start..self.subtree_end(start)]
    }

    pub fn depth(&self) -> usize {
        // walk the prefix list keeping the depth of each pending child slot
        let mut pending = vec![0usize];
        let mut max = 0;
        for n in &self.nodes {
            let d = pending.pop().expect("valid prefix tree");
            max = max.max(d);
            for _ in 0..n.arity() {
                pending.push(d + 1);
            }
        }
        max
    }

    pub fn metrics(&self) -> TreeMetrics {
        TreeMetrics {
            node_count: self.len(),
            depth: self.depth(),
        }
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Var(f) => Some(*f),
            _ => None,
        })
    }

    /// True when every terminal is allowed by `mask`.
    pub fn respects(&self, mask: &FeatureMask) -> bool {
        self.features().all(|f| mask.contains(f))
    }

    pub fn eval<T: Scalar>(&self, row: &[T]) -> T {
        let mut stack = Vec::with_capacity(self.nodes.len());
        self.eval_with(row, &mut stack)
    }

    /// Evaluates with a caller-provided scratch stack.
    pub fn eval_with<T: Scalar>(&self, row: &[T], stack: &mut Vec<T>) -> T {
        stack.clear();
        for n in self.nodes.iter().rev() {
            let v = match *n {
                Node::Var(f) => row[f],
                op if op.arity() == 1 => {
                    let a = stack.pop().expect("valid prefix tree");
                    apply(op, a, T::zero())
                }
                op => {
                    let a = stack.pop().expect("valid prefix tree");
                    let b = stack.pop().expect("valid prefix tree");
                    apply(op, a, b)
                }
            };
            stack.push(v);
        }
        stack.pop().expect("valid prefix tree")
    }

    /// Outputs on the listed dataset rows, in order.
    pub fn eval_rows<T: Scalar>(&self, ds: &Dataset<T>, rows: &[usize]) -> Vec<T> {
        let mut stack = Vec::with_capacity(self.nodes.len());
        rows.iter().map(|&i| self.eval_with(ds.row(i), &mut stack)).collect()
    }

    fn with_subtree(&self, at: usize, replacement: &[Node]) -> ExpressionTree {
        let end = self.subtree_end(at);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - at) + replacement.len());
        nodes.extend_from_slice(&self.nodes[..at]);
        nodes.extend_from_slice(replacement);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExpressionTree { nodes }
    }

    fn write_prefix(&self, at: usize, f: &mut fmt::Formatter<'_>) -> std::result::Result<usize, fmt::Error> {
        match self.nodes[at] {
            Node::Var(j) => {
                write!(f, "x{j}")?;
                Ok(at + 1)
            }
            op => {
                write!(f, "({}", op.symbol())?;
                let mut next = at + 1;
                for _ in 0..op.arity() {
                    f.write_str(" ")?;
                    next = self.write_prefix(next, f)?;
                }
                f.write_str(")")?;
                Ok(next)
            }
        }
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prefix(0, f).map(|_| ())
    }
}

impl FromStr for ExpressionTree {
    type Err = Error;

    /// Parses prefix notation such as `(/ (+ x0 x1) (sqrt x2))`.
    fn from_str(s: &str) -> Result<Self> {
        let spaced = s.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut nodes = Vec::new();
        let mut pos = 0;
        parse_expr(&tokens, &mut pos, &mut nodes)?;
        if pos != tokens.len() {
            return Err(Error::Expression(format!("unexpected '{}'", tokens[pos])));
        }
        ExpressionTree::from_nodes(nodes)
    }
}

fn parse_expr(tokens: &[&str], pos: &mut usize, out: &mut Vec<Node>) -> Result<()> {
    let tok = *tokens
        .get(*pos)
        .ok_or_else(|| Error::Expression("unexpected end of input".into()))?;
    *pos += 1;
    if tok == "(" {
        let sym = tokens
            .get(*pos)
            .ok_or_else(|| Error::Expression("unexpected end of input".into()))?;
        let op = Node::from_symbol(sym).ok_or_else(|| Error::Expression(format!("unknown operator '{sym}'")))?;
        *pos += 1;
        out.push(op);
        for _ in 0..op.arity() {
            parse_expr(tokens, pos, out)?;
        }
        if tokens.get(*pos) != Some(&")") {
            return Err(Error::Expression(format!("'{sym}' takes {} operands", op.arity())));
        }
        *pos += 1;
        Ok(())
    } else if let Some(idx) = tok.strip_prefix('x') {
        let f = idx
            .parse()
            .map_err(|_| Error::Expression(format!("bad terminal '{tok}'")))?;
        out.push(Node::Var(f));
        Ok(())
    } else {
        Err(Error::Expression(format!("unexpected '{tok}'")))
    }
}

impl Serialize for ExpressionTree {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ExpressionTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn random_terminal<R: Rng + ?Sized>(mask: &FeatureMask, rng: &mut R) -> Node {
    Node::Var(mask.features()[rng.gen_range(0..mask.len())])
}

fn random_function<R: Rng + ?Sized>(rng: &mut R) -> Node {
    Node::FUNCTIONS[rng.gen_range(0..Node::FUNCTIONS.len())]
}

fn build<R: Rng + ?Sized>(mask: &FeatureMask, depth: usize, max: usize, full: bool, rng: &mut R, out: &mut Vec<Node>) {
    let node = if depth >= max {
        random_terminal(mask, rng)
    } else if full || depth == 0 {
        random_function(rng)
    } else {
        // grow: pick uniformly from the whole primitive set
        let n_term = mask.len();
        if rng.gen_range(0..n_term + Node::FUNCTIONS.len()) < n_term {
            random_terminal(mask, rng)
        } else {
            random_function(rng)
        }
    };
    out.push(node);
    for _ in 0..node.arity() {
        build(mask, depth + 1, max, full, rng, out);
    }
}

/// Full method: function nodes down to `depth`, terminals at exactly `depth`.
pub fn full<R: Rng + ?Sized>(mask: &FeatureMask, depth: usize, rng: &mut R) -> ExpressionTree {
    let mut nodes = Vec::new();
    build(mask, 0, depth, true, rng, &mut nodes);
    ExpressionTree { nodes }
}

/// Grow method: a function at the root (when `max_depth > 0`), then
/// uniform choice over functions and allowed terminals until `max_depth`.
pub fn grow<R: Rng + ?Sized>(mask: &FeatureMask, max_depth: usize, rng: &mut R) -> ExpressionTree {
    let mut nodes = Vec::new();
    build(mask, 0, max_depth, false, rng, &mut nodes);
    ExpressionTree { nodes }
}

/// Grow or full with equal probability, target depth uniform in `[min_depth, max_depth]`.
pub fn ramped_half_and_half<R: Rng + ?Sized>(
    mask: &FeatureMask,
    (min_depth, max_depth): (usize, usize),
    rng: &mut R,
) -> ExpressionTree {
    let depth = rng.gen_range(min_depth..=max_depth.max(min_depth));
    if rng.gen_bool(0.5) {
        grow(mask, depth, rng)
    } else {
        full(mask, depth, rng)
    }
}

/// Swaps the subtree of `p1` rooted at `cp1` with the subtree of `p2` rooted at `cp2`.
pub fn crossover_at(
    p1: &ExpressionTree,
    cp1: usize,
    p2: &ExpressionTree,
    cp2: usize,
) -> (ExpressionTree, ExpressionTree) {
    (p1.with_subtree(cp1, p2.subtree(cp2)), p2.with_subtree(cp2, p1.subtree(cp1)))
}

/// Standard subtree crossover, crossover points uniform over all nodes.
pub fn subtree_crossover<R: Rng + ?Sized>(
    p1: &ExpressionTree,
    p2: &ExpressionTree,
    rng: &mut R,
) -> (ExpressionTree, ExpressionTree) {
    let cp1 = rng.gen_range(0..p1.len());
    let cp2 = rng.gen_range(0..p2.len());
    crossover_at(p1, cp1, p2, cp2)
}

/// Replaces every terminal in `span` that `mask` forbids with its most
/// similar allowed feature. Returns the number of replacements.
pub fn fix_terminals<T: Scalar>(
    tree: &mut ExpressionTree,
    span: Range<usize>,
    mask: &FeatureMask,
    sim: &FeatureSimilarity<T>,
) -> usize {
    let mut repairs = 0;
    for node in &mut tree.nodes[span] {
        if let Node::Var(f) = *node {
            if !mask.contains(f) {
                *node = Node::Var(sim.most_similar(f, mask));
                repairs += 1;
            }
        }
    }
    repairs
}

/// Offspring of a feature-protected crossover.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossoverOutcome {
    /// Root from the first parent, restricted to the first parent's mask.
    pub first: ExpressionTree,
    /// Root from the second parent, restricted to the second parent's mask.
    pub second: ExpressionTree,
    /// Terminals rewritten to restore mask closure.
    pub repairs: usize,
}

/// Subtree crossover at the given points followed by terminal repair of each
/// received branch against the receiving parent's mask.
pub fn e_crossover_at<T: Scalar>(
    (p1, mask1): (&ExpressionTree, &FeatureMask),
    cp1: usize,
    (p2, mask2): (&ExpressionTree, &FeatureMask),
    cp2: usize,
    sim: &FeatureSimilarity<T>,
) -> CrossoverOutcome {
    let len1 = p1.subtree_end(cp1) - cp1;
    let len2 = p2.subtree_end(cp2) - cp2;
    let (mut first, mut second) = crossover_at(p1, cp1, p2, cp2);
    let mut repairs = fix_terminals(&mut first, cp1..cp1 + len2, mask1, sim);
    repairs += fix_terminals(&mut second, cp2..cp2 + len1, mask2, sim);
    CrossoverOutcome { first, second, repairs }
}

pub fn e_crossover<T: Scalar, R: Rng + ?Sized>(
    parent1: (&ExpressionTree, &FeatureMask),
    parent2: (&ExpressionTree, &FeatureMask),
    sim: &FeatureSimilarity<T>,
    rng: &mut R,
) -> CrossoverOutcome {
    let cp1 = rng.gen_range(0..parent1.0.len());
    let cp2 = rng.gen_range(0..parent2.0.len());
    e_crossover_at(parent1, cp1, parent2, cp2, sim)
}

/// Replaces a uniformly chosen node with a grow subtree of depth at most
/// `max_depth` built from `mask`. With a full mask this is standard subtree
/// mutation.
pub fn e_mutation<R: Rng + ?Sized>(
    parent: &ExpressionTree,
    mask: &FeatureMask,
    max_depth: usize,
    rng: &mut R,
) -> ExpressionTree {
    let at = rng.gen_range(0..parent.len());
    let branch = grow(mask, max_depth, rng);
    parent.with_subtree(at, &branch.nodes)
}
