//! Binary expression trees over lane-feature terminals.
//!
//! Trees are stored as a flat prefix-order node list, so every subtree is a
//! contiguous slice. Depth counts edges: a lone leaf has depth 0.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::features::{FEATURE_LEN, LANES_PER_MOVEMENT};

/// Evaluation results are clamped to this magnitude.
pub const EVAL_CLAMP: f64 = 1e18;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
    /// Protected division: a zero divisor yields 1.
    Div,
}

impl Op {
    pub const ALL: [Op; 4] = [Op::Add, Op::Sub, Op::Mul, Op::Div];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
            Op::Div => "/",
        }
    }

    fn from_symbol(s: &str) -> Option<Op> {
        match s {
            "+" => Some(Op::Add),
            "-" | "−" => Some(Op::Sub),
            "*" | "×" => Some(Op::Mul),
            "/" | "÷" => Some(Op::Div),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        let r = match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => {
                if b == 0.0 {
                    1.0
                } else {
                    a / b
                }
            }
        };
        sanitize(r)
    }
}

/// Maps NaN to 0 and clamps to `±EVAL_CLAMP`.
#[inline]
pub fn sanitize(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(-EVAL_CLAMP, EVAL_CLAMP)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Op(Op),
    /// Terminal index into the feature vector.
    Var(u8),
    /// Ephemeral constant, fixed once created.
    Const(f64),
}

impl Node {
    pub fn arity(&self) -> usize {
        match self {
            Node::Op(_) => 2,
            _ => 0,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.arity() == 0
    }
}

/// Display name of terminal `idx`.
///
/// Indices 0..8 are `W0..W3, C0..C3` of one movement; indices 8..16 (used by
/// the asymmetric representation) are the second movement's `W4..W7, C4..C7`.
pub fn terminal_name(idx: u8) -> String {
    let idx = idx as usize;
    let tm = idx / FEATURE_LEN;
    let within = idx % FEATURE_LEN;
    let prefix = if within < LANES_PER_MOVEMENT { 'W' } else { 'C' };
    format!("{prefix}{}", tm * LANES_PER_MOVEMENT + within % LANES_PER_MOVEMENT)
}

/// Inverse of [`terminal_name`].
pub fn parse_terminal(name: &str) -> Option<u8> {
    let mut chars = name.chars();
    let block = match chars.next()? {
        'W' => 0,
        'C' => 1,
        _ => return None,
    };
    let rest = chars.as_str();
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || (rest.len() > 1 && rest.starts_with('0')) {
        return None;
    }
    let n: usize = rest.parse().ok()?;
    let idx = (n / LANES_PER_MOVEMENT) * FEATURE_LEN + block * LANES_PER_MOVEMENT + n % LANES_PER_MOVEMENT;
    u8::try_from(idx).ok()
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected token {0:?} at offset {1}")]
    UnexpectedToken(String, usize),
    #[error("unknown operator {0:?}")]
    UnknownOperator(String),
    #[error("unknown terminal {0:?}")]
    UnknownTerminal(String),
    #[error("trailing input after tree at offset {0}")]
    Trailing(usize),
    #[error("malformed node list")]
    Malformed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprTree {
    nodes: Vec<Node>,
}

impl ExprTree {
    /// Wraps a prefix-order node list, checking that it forms exactly one tree.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<ExprTree, ParseError> {
        let mut need = 1usize;
        for (i, n) in nodes.iter().enumerate() {
            if need == 0 {
                return Err(ParseError::Trailing(i));
            }
            need = need - 1 + n.arity();
        }
        if need != 0 || nodes.is_empty() {
            return Err(ParseError::Malformed);
        }
        if nodes.iter().any(|n| matches!(n, Node::Const(c) if !c.is_finite())) {
            return Err(ParseError::Malformed);
        }
        Ok(ExprTree { nodes })
    }

    pub fn leaf(node: Node) -> ExprTree {
        assert!(node.is_leaf());
        ExprTree { nodes: vec![node] }
    }

    pub fn var(idx: u8) -> ExprTree {
        ExprTree::leaf(Node::Var(idx))
    }

    pub fn constant(c: f64) -> ExprTree {
        ExprTree::leaf(Node::Const(c))
    }

    pub fn binary(op: Op, left: ExprTree, right: ExprTree) -> ExprTree {
        let mut nodes = Vec::with_capacity(1 + left.len() + right.len());
        nodes.push(Node::Op(op));
        nodes.extend(left.nodes);
        nodes.extend(right.nodes);
        ExprTree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Node count.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// One past the last node of the subtree rooted at `i`.
    pub fn subtree_end(&self, i: usize) -> usize {
        let mut need = 1usize;
        let mut j = i;
        while need > 0 {
            need = need - 1 + self.nodes[j].arity();
            j += 1;
        }
        j
    }

    /// Depth of every node (root = 0).
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depths = Vec::with_capacity(self.nodes.len());
        let mut stack: Vec<usize> = Vec::new();
        for n in &self.nodes {
            let d = stack.pop().unwrap_or(0);
            depths.push(d);
            for _ in 0..n.arity() {
                stack.push(d + 1);
            }
        }
        depths
    }

    pub fn depth(&self) -> usize {
        self.node_depths().into_iter().max().unwrap_or(0)
    }

    /// Highest terminal index used, if any.
    pub fn max_var(&self) -> Option<u8> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Var(v) => Some(*v),
                _ => None,
            })
            .max()
    }

    /// Evaluates the tree on `features`. Total: finite inputs always give a
    /// finite output. Panics if a terminal indexes past `features`.
    pub fn eval(&self, features: &[f64]) -> f64 {
        let mut pos = 0;
        self.eval_at(&mut pos, features)
    }

    fn eval_at(&self, pos: &mut usize, features: &[f64]) -> f64 {
        let node = self.nodes[*pos];
        *pos += 1;
        match node {
            Node::Var(v) => sanitize(features[v as usize]),
            Node::Const(c) => c,
            Node::Op(op) => {
                let a = self.eval_at(pos, features);
                let b = self.eval_at(pos, features);
                op.apply(a, b)
            }
        }
    }

    /// Leaf occurrences per terminal index; constants are not counted.
    pub fn terminal_frequencies(&self) -> BTreeMap<u8, usize> {
        let mut out = BTreeMap::new();
        for n in &self.nodes {
            if let Node::Var(v) = n {
                *out.entry(*v).or_insert(0) += 1;
            }
        }
        out
    }

    /// Prefix S-expression, e.g. `(+ (* 0.900 W0) (* 0.100 C0))`.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        let mut pos = 0;
        self.write_at(&mut pos, &mut out);
        out
    }

    fn write_at(&self, pos: &mut usize, out: &mut String) {
        let node = self.nodes[*pos];
        *pos += 1;
        match node {
            Node::Var(v) => out.push_str(&terminal_name(v)),
            Node::Const(c) => out.push_str(&format_constant(c)),
            Node::Op(op) => {
                out.push('(');
                out.push_str(op.symbol());
                out.push(' ');
                self.write_at(pos, out);
                out.push(' ');
                self.write_at(pos, out);
                out.push(')');
            }
        }
    }

    pub fn parse(text: &str) -> Result<ExprTree, ParseError> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let mut nodes = Vec::new();
        parse_node(&tokens, &mut pos, &mut nodes)?;
        if let Some(t) = tokens.get(pos) {
            return Err(ParseError::Trailing(t.1));
        }
        ExprTree::from_nodes(nodes)
    }

    /// Replaces the subtree rooted at `at` with `sub`.
    pub fn replace_subtree(&self, at: usize, sub: &[Node]) -> ExprTree {
        let end = self.subtree_end(at);
        let mut nodes = Vec::with_capacity(self.nodes.len() - (end - at) + sub.len());
        nodes.extend_from_slice(&self.nodes[..at]);
        nodes.extend_from_slice(sub);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExprTree { nodes }
    }

    pub fn subtree(&self, at: usize) -> &[Node] {
        &self.nodes[at..self.subtree_end(at)]
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_sexpr())
    }
}

/// Three decimals when that is exact, otherwise the shortest round-trip form.
pub fn format_constant(c: f64) -> String {
    let short = format!("{c:.3}");
    if short.parse::<f64>().ok() == Some(c) {
        short
    } else {
        format!("{c:?}")
    }
}

fn tokenize(text: &str) -> Vec<(&str, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((&text[s..i], s));
            }
            if !ch.is_whitespace() {
                out.push((&text[i..i + 1], i));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((&text[s..], s));
    }
    out
}

fn parse_node(tokens: &[(&str, usize)], pos: &mut usize, nodes: &mut Vec<Node>) -> Result<(), ParseError> {
    let &(tok, off) = tokens.get(*pos).ok_or(ParseError::UnexpectedEnd)?;
    *pos += 1;
    match tok {
        "(" => {
            let &(sym, _) = tokens.get(*pos).ok_or(ParseError::UnexpectedEnd)?;
            *pos += 1;
            let op = Op::from_symbol(sym).ok_or_else(|| ParseError::UnknownOperator(sym.to_string()))?;
            nodes.push(Node::Op(op));
            parse_node(tokens, pos, nodes)?;
            parse_node(tokens, pos, nodes)?;
            match tokens.get(*pos) {
                Some(&(")", _)) => {
                    *pos += 1;
                    Ok(())
                }
                Some(&(t, o)) => Err(ParseError::UnexpectedToken(t.to_string(), o)),
                None => Err(ParseError::UnexpectedEnd),
            }
        }
        ")" => Err(ParseError::UnexpectedToken(tok.to_string(), off)),
        leaf => {
            if let Some(v) = parse_terminal(leaf) {
                nodes.push(Node::Var(v));
                Ok(())
            } else if let Ok(c) = leaf.parse::<f64>() {
                if !c.is_finite() {
                    return Err(ParseError::UnknownTerminal(leaf.to_string()));
                }
                nodes.push(Node::Const(c));
                Ok(())
            } else {
                Err(ParseError::UnknownTerminal(leaf.to_string()))
            }
        }
    }
}

/// Random tree construction over `n_vars` feature terminals plus the
/// ephemeral constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeGen {
    pub n_vars: u8,
}

impl TreeGen {
    pub fn new(n_vars: u8) -> TreeGen {
        assert!(n_vars > 0);
        TreeGen { n_vars }
    }

    fn terminal_count(&self) -> usize {
        self.n_vars as usize + 1
    }

    /// Uniform over the feature terminals and the ephemeral constant; a
    /// constant is drawn from [-1, 1] in steps of 0.001.
    pub fn random_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> Node {
        let k = rng.random_range(0..self.terminal_count());
        if k < self.n_vars as usize {
            Node::Var(k as u8)
        } else {
            Node::Const(rng.random_range(-1000i32..=1000) as f64 / 1000.0)
        }
    }

    pub fn random_op<R: Rng + ?Sized>(&self, rng: &mut R) -> Node {
        Node::Op(Op::ALL[rng.random_range(0..Op::ALL.len())])
    }

    /// Every leaf at exactly `depth`.
    pub fn full<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> ExprTree {
        let mut nodes = Vec::new();
        self.build(0, depth, depth, 0.0, rng, &mut nodes);
        ExprTree { nodes }
    }

    /// Leaves anywhere in `[min_depth, max_depth]`; below `min_depth` only
    /// operators are placed.
    pub fn grow<R: Rng + ?Sized>(&self, min_depth: usize, max_depth: usize, rng: &mut R) -> ExprTree {
        let p_leaf = self.terminal_count() as f64 / (self.terminal_count() + Op::ALL.len()) as f64;
        let mut nodes = Vec::new();
        self.build(0, min_depth.min(max_depth), max_depth, p_leaf, rng, &mut nodes);
        ExprTree { nodes }
    }

    fn build<R: Rng + ?Sized>(
        &self,
        depth: usize,
        min_depth: usize,
        max_depth: usize,
        p_leaf: f64,
        rng: &mut R,
        out: &mut Vec<Node>,
    ) {
        let leaf = depth >= max_depth || (depth >= min_depth && rng.random::<f64>() < p_leaf);
        if leaf {
            out.push(self.random_terminal(rng));
        } else {
            out.push(self.random_op(rng));
            self.build(depth + 1, min_depth, max_depth, p_leaf, rng, out);
            self.build(depth + 1, min_depth, max_depth, p_leaf, rng, out);
        }
    }

    /// Ramped half-and-half: depths cycle through `[min_depth, max_depth]`
    /// and, within each depth, trees alternate between full and grow.
    pub fn ramped_half_and_half<R: Rng + ?Sized>(
        &self,
        count: usize,
        min_depth: usize,
        max_depth: usize,
        rng: &mut R,
    ) -> Vec<ExprTree> {
        let buckets = max_depth - min_depth + 1;
        (0..count)
            .map(|i| {
                let depth = min_depth + i % buckets;
                if (i / buckets).is_multiple_of(2) {
                    self.full(depth, rng)
                } else {
                    self.grow(min_depth, depth, rng)
                }
            })
            .collect()
    }
}

/// Probability of picking an operator node as a crossover point.
pub const CROSSOVER_INTERNAL_BIAS: f64 = 0.9;
pub const CROSSOVER_ATTEMPTS: usize = 10;

/// Swaps the subtree at `i` in `a` with the subtree at `j` in `b`. Returns
/// `None` if either child would exceed `max_depth`.
pub fn crossover_at(a: &ExprTree, i: usize, b: &ExprTree, j: usize, max_depth: usize) -> Option<(ExprTree, ExprTree)> {
    let first = a.replace_subtree(i, b.subtree(j));
    let second = b.replace_subtree(j, a.subtree(i));
    (first.depth() <= max_depth && second.depth() <= max_depth).then_some((first, second))
}

fn pick_crossover_point<R: Rng + ?Sized>(tree: &ExprTree, rng: &mut R) -> usize {
    let (internal, leaves): (Vec<usize>, Vec<usize>) = (0..tree.len()).partition(|&i| !tree.nodes[i].is_leaf());
    let pool = if !internal.is_empty() && rng.random::<f64>() < CROSSOVER_INTERNAL_BIAS {
        internal
    } else {
        leaves
    };
    pool[rng.random_range(0..pool.len())]
}

/// One-point subtree crossover; after [`CROSSOVER_ATTEMPTS`] depth
/// violations the parents are returned unchanged.
pub fn crossover<R: Rng + ?Sized>(a: &ExprTree, b: &ExprTree, max_depth: usize, rng: &mut R) -> (ExprTree, ExprTree) {
    for _ in 0..CROSSOVER_ATTEMPTS {
        let i = pick_crossover_point(a, rng);
        let j = pick_crossover_point(b, rng);
        if let Some(children) = crossover_at(a, i, b, j, max_depth) {
            return children;
        }
    }
    (a.clone(), b.clone())
}

/// Replaces a uniformly chosen node with a grown subtree that keeps the
/// result within `max_depth`.
pub fn mutate<R: Rng + ?Sized>(tree: &ExprTree, gen: &TreeGen, max_depth: usize, rng: &mut R) -> ExprTree {
    let at = rng.random_range(0..tree.len());
    let budget = max_depth.saturating_sub(tree.node_depths()[at]);
    let sub = gen.grow(0, budget, rng);
    tree.replace_subtree(at, sub.nodes())
}
