//! Binary-tree computation schemas.
//!
//! A schema is a binary tree of node ids `(level, index)`: the root is
//! `(0, 0)` and the children of `(i, j)` are `(i+1, 2j)` and `(i+1, 2j+1)`.
//! Every internal node carries a (possibly non-commutative) binary operator;
//! its value is the operator applied to the values of its two children in
//! left/right order. Sources — the K operands of the computed function — sit
//! wherever the tree shape puts them, not necessarily all at the deepest
//! level. Trees are built either fully balanced (`build_complete`) or parsed
//! from a parenthesised expression such as `((y1*y2)+y3)*y4`.
//!
//! Payloads carry both an `i64` value (wrapping arithmetic) and a fully
//! parenthesised evaluation trace, so any mis-ordered combination of an
//! asymmetric operator is detectable by exact string or value comparison.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Position of a node in the binary tree: root is `(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchemaNodeId {
    pub level: u32,
    pub index: u32,
}

impl SchemaNodeId {
    pub const ROOT: SchemaNodeId = SchemaNodeId { level: 0, index: 0 };

    pub fn new(level: u32, index: u32) -> Self {
        SchemaNodeId { level, index }
    }

    /// The other child of this node's parent; `None` at the root.
    pub fn sibling(self) -> Option<SchemaNodeId> {
        if self.level == 0 {
            None
        } else {
            Some(SchemaNodeId::new(self.level, self.index ^ 1))
        }
    }

    pub fn parent(self) -> Option<SchemaNodeId> {
        if self.level == 0 {
            None
        } else {
            Some(SchemaNodeId::new(self.level - 1, self.index / 2))
        }
    }

    pub fn left_child(self) -> SchemaNodeId {
        SchemaNodeId::new(self.level + 1, 2 * self.index)
    }

    pub fn right_child(self) -> SchemaNodeId {
        SchemaNodeId::new(self.level + 1, 2 * self.index + 1)
    }

    /// Left operand slot = even index.
    pub fn is_left_child(self) -> bool {
        self.index % 2 == 0
    }
}

impl fmt::Display for SchemaNodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.level, self.index)
    }
}

impl FromStr for SchemaNodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("expected 'level,index', got '{s}'"))?;
        let level = a.trim().parse().map_err(|e| format!("bad level: {e}"))?;
        let index = b.trim().parse().map_err(|e| format!("bad index: {e}"))?;
        Ok(SchemaNodeId { level, index })
    }
}

/// Binary operator attached to an internal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    /// wrapping addition (commutative)
    Add,
    /// wrapping multiplication (commutative)
    Mul,
    /// order-sensitive hash combiner; detects swapped operands by value
    Append,
}

impl Operator {
    pub fn apply(self, left: i64, right: i64) -> i64 {
        match self {
            Operator::Add => left.wrapping_add(right),
            Operator::Mul => left.wrapping_mul(right),
            Operator::Append => append_hash(left, right),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Operator::Add => '+',
            Operator::Mul => '*',
            Operator::Append => '#',
        }
    }

    pub fn from_symbol(c: char) -> Option<Operator> {
        match c {
            '+' => Some(Operator::Add),
            '*' => Some(Operator::Mul),
            '#' => Some(Operator::Append),
            _ => None,
        }
    }

    /// Tag name used in configs.
    pub fn from_tag(tag: &str) -> Option<Operator> {
        match tag {
            "add" => Some(Operator::Add),
            "mul" => Some(Operator::Mul),
            "append" => Some(Operator::Append),
            _ => None,
        }
    }
}

/// Asymmetric 64-bit mixing of an ordered pair.
fn append_hash(left: i64, right: i64) -> i64 {
    let a = (left as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(31);
    let b = (right as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F).rotate_left(27);
    (a.wrapping_mul(5).wrapping_add(b) ^ (a >> 29).wrapping_add(0x165667B19E3779F9)) as i64
}

/// Value plus fully parenthesised evaluation trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub trace: String,
    pub value: i64,
}

impl Payload {
    pub fn atom(name: &str, value: i64) -> Payload {
        Payload {
            trace: name.to_string(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemaNode {
    /// Operand `k` (1-based) with its display name.
    Source { operand: usize, name: String },
    Internal { op: Operator },
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("source count must be a power of two >= 2, got {0}")]
    BadSourceCount(usize),
    #[error("expression error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("operand name '{0}' appears more than once")]
    DuplicateOperand(String),
    #[error("({0}) is not a node of this schema")]
    UnknownNode(SchemaNodeId),
    #[error("({0}) and ({1}) are not siblings")]
    NotSiblings(SchemaNodeId, SchemaNodeId),
    #[error("round mismatch: {0} vs {1}")]
    RoundMismatch(u64, u64),
    #[error("operator override targets non-internal node ({0})")]
    BadOverride(SchemaNodeId),
    #[error("operand vector has length {got}, schema has {expected} sources")]
    WrongOperandCount { expected: usize, got: usize },
}

/// Immutable binary-tree schema.
#[derive(Debug, Clone)]
pub struct SchemaTree {
    nodes: BTreeMap<SchemaNodeId, SchemaNode>,
    /// operand k (1-based) lives at `operand_ids[k-1]`
    operand_ids: Vec<SchemaNodeId>,
    /// operand indices covered by the subtree under each node, ascending
    leaf_sets: BTreeMap<SchemaNodeId, Vec<usize>>,
    height: u32,
    leaf_count: usize,
}

impl SchemaTree {
    /// Balanced tree over `k = 2^r >= 2` operands named `x1..xk`.
    ///
    /// `default_op` fills every internal node; `overrides` replaces the
    /// operator at the given internal ids.
    pub fn build_complete(
        k: usize,
        default_op: Operator,
        overrides: &[(SchemaNodeId, Operator)],
    ) -> Result<SchemaTree, SchemaError> {
        if k < 2 || !k.is_power_of_two() {
            return Err(SchemaError::BadSourceCount(k));
        }
        let height = k.trailing_zeros();
        let mut nodes = BTreeMap::new();
        for level in 0..height {
            for index in 0..(1u32 << level) {
                nodes.insert(
                    SchemaNodeId::new(level, index),
                    SchemaNode::Internal { op: default_op },
                );
            }
        }
        for index in 0..k as u32 {
            let operand = index as usize + 1;
            nodes.insert(
                SchemaNodeId::new(height, index),
                SchemaNode::Source {
                    operand,
                    name: format!("x{operand}"),
                },
            );
        }
        for &(id, op) in overrides {
            match nodes.get_mut(&id) {
                Some(SchemaNode::Internal { op: slot }) => *slot = op,
                _ => return Err(SchemaError::BadOverride(id)),
            }
        }
        Ok(Self::assemble(nodes))
    }

    /// Parse a fully parenthesised binary expression into a schema.
    ///
    /// Grammar: `expr := term (op term)? ; term := atom | '(' expr ')'` with
    /// operators `+`, `*`, `#` and alphanumeric atom names. Each binary
    /// application must be parenthesised except the outermost, so operand
    /// association is always explicit. A bare atom yields the one-node
    /// identity schema (K = 1). Operand indices follow left-to-right order
    /// of first appearance.
    pub fn build_from_expression(expr: &str) -> Result<SchemaTree, SchemaError> {
        let ast = parse_expression(expr)?;
        let mut nodes = BTreeMap::new();
        let mut names_in_order = Vec::new();
        collect_atoms(&ast, &mut names_in_order);
        {
            let mut seen = std::collections::BTreeSet::new();
            for name in &names_in_order {
                if !seen.insert(name.clone()) {
                    return Err(SchemaError::DuplicateOperand(name.clone()));
                }
            }
        }
        let index_of = |name: &str| names_in_order.iter().position(|n| n == name).unwrap() + 1;
        place(&ast, SchemaNodeId::ROOT, &mut nodes, &index_of);
        Ok(Self::assemble(nodes))
    }

    fn assemble(nodes: BTreeMap<SchemaNodeId, SchemaNode>) -> SchemaTree {
        let height = nodes.keys().map(|id| id.level).max().unwrap_or(0);
        let leaf_count = nodes.keys().filter(|id| id.level == height).count();
        let mut operands: Vec<(usize, SchemaNodeId)> = nodes
            .iter()
            .filter_map(|(id, node)| match node {
                SchemaNode::Source { operand, .. } => Some((*operand, *id)),
                SchemaNode::Internal { .. } => None,
            })
            .collect();
        operands.sort_unstable();
        let operand_ids: Vec<SchemaNodeId> = operands.into_iter().map(|(_, id)| id).collect();
        let mut leaf_sets: BTreeMap<SchemaNodeId, Vec<usize>> = BTreeMap::new();
        // deepest-first traversal so children are resolved before parents
        for (&id, node) in nodes.iter().rev() {
            match node {
                SchemaNode::Source { operand, .. } => {
                    leaf_sets.insert(id, vec![*operand]);
                }
                SchemaNode::Internal { .. } => {
                    let mut set = leaf_sets
                        .get(&id.left_child())
                        .expect("child resolved first")
                        .clone();
                    set.extend_from_slice(&leaf_sets[&id.right_child()]);
                    set.sort_unstable();
                    leaf_sets.insert(id, set);
                }
            }
        }
        SchemaTree {
            nodes,
            operand_ids,
            leaf_sets,
            height,
            leaf_count,
        }
    }

    pub fn k(&self) -> usize {
        self.operand_ids.len()
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of nodes at the deepest level.
    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn node(&self, id: SchemaNodeId) -> Option<&SchemaNode> {
        self.nodes.get(&id)
    }

    pub fn contains(&self, id: SchemaNodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    /// Schema position of operand `k` (1-based).
    pub fn operand_id(&self, k: usize) -> SchemaNodeId {
        self.operand_ids[k - 1]
    }

    pub fn operand_ids(&self) -> &[SchemaNodeId] {
        &self.operand_ids
    }

    pub fn operand_name(&self, k: usize) -> &str {
        match &self.nodes[&self.operand_ids[k - 1]] {
            SchemaNode::Source { name, .. } => name,
            SchemaNode::Internal { .. } => unreachable!("operand ids point at sources"),
        }
    }

    /// Internal node ids in (level, index) order.
    pub fn internal_ids(&self) -> Vec<SchemaNodeId> {
        self.nodes
            .iter()
            .filter_map(|(id, node)| match node {
                SchemaNode::Internal { .. } => Some(*id),
                SchemaNode::Source { .. } => None,
            })
            .collect()
    }

    pub fn is_source(&self, id: SchemaNodeId) -> bool {
        matches!(self.nodes.get(&id), Some(SchemaNode::Source { .. }))
    }

    /// Operand indices computed by the subtree under `id`, ascending.
    pub fn leaf_set(&self, id: SchemaNodeId) -> &[usize] {
        &self.leaf_sets[&id]
    }

    pub fn ids(&self) -> impl Iterator<Item = SchemaNodeId> + '_ {
        self.nodes.keys().copied()
    }

    /// Combine sibling payloads of equal round into the parent payload.
    ///
    /// Arguments may be given in either order; orientation is fixed by the
    /// ids (even index = left operand).
    pub fn combine(
        &self,
        a: (SchemaNodeId, &Payload, u64),
        b: (SchemaNodeId, &Payload, u64),
    ) -> Result<(SchemaNodeId, Payload), SchemaError> {
        let (id_a, pay_a, round_a) = a;
        let (id_b, pay_b, round_b) = b;
        for id in [id_a, id_b] {
            if !self.contains(id) {
                return Err(SchemaError::UnknownNode(id));
            }
        }
        if id_a.sibling() != Some(id_b) {
            return Err(SchemaError::NotSiblings(id_a, id_b));
        }
        if round_a != round_b {
            return Err(SchemaError::RoundMismatch(round_a, round_b));
        }
        let (left, right) = if id_a.is_left_child() {
            (pay_a, pay_b)
        } else {
            (pay_b, pay_a)
        };
        let parent = id_a.parent().expect("non-root checked by sibling()");
        let op = match &self.nodes[&parent] {
            SchemaNode::Internal { op } => *op,
            SchemaNode::Source { .. } => unreachable!("parent of two nodes is internal"),
        };
        Ok((
            parent,
            Payload {
                trace: format!("({}{}{})", left.trace, op.symbol(), right.trace),
                value: op.apply(left.value, right.value),
            },
        ))
    }

    /// Ground-truth root payload for one round of operand values
    /// (`values[k-1]` is operand k).
    pub fn reference_evaluate(&self, values: &[i64]) -> Result<Payload, SchemaError> {
        if values.len() != self.k() {
            return Err(SchemaError::WrongOperandCount {
                expected: self.k(),
                got: values.len(),
            });
        }
        Ok(self.eval_at(SchemaNodeId::ROOT, values))
    }

    fn eval_at(&self, id: SchemaNodeId, values: &[i64]) -> Payload {
        match &self.nodes[&id] {
            SchemaNode::Source { operand, name } => Payload::atom(name, values[*operand - 1]),
            SchemaNode::Internal { op } => {
                let l = self.eval_at(id.left_child(), values);
                let r = self.eval_at(id.right_child(), values);
                Payload {
                    trace: format!("({}{}{})", l.trace, op.symbol(), r.trace),
                    value: op.apply(l.value, r.value),
                }
            }
        }
    }

    /// Structural sanity: parent/child closure and height bounds
    /// `log2(K) <= h <= K-1` (for K >= 2).
    pub fn validate(&self) -> Result<(), String> {
        for (&id, node) in &self.nodes {
            let lc = self.contains(id.left_child());
            let rc = self.contains(id.right_child());
            match node {
                SchemaNode::Internal { .. } if !(lc && rc) => {
                    return Err(format!("internal node ({id}) lacks a child"));
                }
                SchemaNode::Source { .. } if lc || rc => {
                    return Err(format!("source node ({id}) has children"));
                }
                _ => {}
            }
            if id != SchemaNodeId::ROOT && !self.contains(id.parent().expect("non-root")) {
                return Err(format!("orphan node ({id})"));
            }
        }
        let k = self.k();
        if k == 0 {
            return Err("schema has no sources".into());
        }
        if k >= 2 {
            let h = self.height;
            let lo = (usize::BITS - (k - 1).leading_zeros()) as u32; // ceil(log2 k)
            if h < lo || h as usize > k - 1 {
                return Err(format!("height {h} outside [log2({k}), {k}-1]"));
            }
        }
        Ok(())
    }
}

// ---- expression parsing ----

enum Ast {
    Atom(String),
    Bin(Operator, Box<Ast>, Box<Ast>),
}

fn collect_atoms(ast: &Ast, out: &mut Vec<String>) {
    match ast {
        Ast::Atom(name) => out.push(name.clone()),
        Ast::Bin(_, l, r) => {
            collect_atoms(l, out);
            collect_atoms(r, out);
        }
    }
}

fn place(
    ast: &Ast,
    id: SchemaNodeId,
    nodes: &mut BTreeMap<SchemaNodeId, SchemaNode>,
    index_of: &dyn Fn(&str) -> usize,
) {
    match ast {
        Ast::Atom(name) => {
            nodes.insert(
                id,
                SchemaNode::Source {
                    operand: index_of(name),
                    name: name.clone(),
                },
            );
        }
        Ast::Bin(op, l, r) => {
            nodes.insert(id, SchemaNode::Internal { op: *op });
            place(l, id.left_child(), nodes, index_of);
            place(r, id.right_child(), nodes, index_of);
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

fn parse_expression(expr: &str) -> Result<Ast, SchemaError> {
    let mut p = Parser {
        src: expr.as_bytes(),
        pos: 0,
    };
    let ast = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input (missing parentheses?)"));
    }
    Ok(ast)
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> SchemaError {
        SchemaError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Ast, SchemaError> {
        let left = self.term()?;
        match self.peek() {
            Some(c) if Operator::from_symbol(c as char).is_some() => {
                let op = Operator::from_symbol(c as char).expect("checked");
                self.pos += 1;
                let right = self.term()?;
                // a second operator at the same depth would be ambiguous;
                // expr() callers reject any trailing operator
                Ok(Ast::Bin(op, Box::new(left), Box::new(right)))
            }
            _ => Ok(left),
        }
    }

    fn term(&mut self) -> Result<Ast, SchemaError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                match self.peek() {
                    Some(b')') => {
                        self.pos += 1;
                        Ok(inner)
                    }
                    Some(c) if Operator::from_symbol(c as char).is_some() => {
                        Err(self.err("ambiguous chain; parenthesise each binary application"))
                    }
                    _ => Err(self.err("expected ')'")),
                }
            }
            Some(c) if (c as char).is_ascii_alphanumeric() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && ((self.src[self.pos] as char).is_ascii_alphanumeric()
                        || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii checked")
                    .to_string();
                if name.as_bytes()[0].is_ascii_digit() {
                    self.pos = start;
                    return Err(self.err("operand names must not start with a digit"));
                }
                Ok(Ast::Atom(name))
            }
            Some(_) => Err(self.err("expected operand or '('")),
            None => Err(self.err("unexpected end of expression")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_id_arithmetic() {
        let id = SchemaNodeId::new(2, 3);
        assert_eq!(id.parent(), Some(SchemaNodeId::new(1, 1)));
        assert_eq!(id.sibling(), Some(SchemaNodeId::new(2, 2)));
        assert!(!id.is_left_child());
        assert_eq!(SchemaNodeId::ROOT.parent(), None);
        assert_eq!(SchemaNodeId::ROOT.sibling(), None);
        assert_eq!("1,1".parse::<SchemaNodeId>().unwrap(), SchemaNodeId::new(1, 1));
        assert!("1".parse::<SchemaNodeId>().is_err());
    }

    #[test]
    fn complete_k4_shape() {
        let t = SchemaTree::build_complete(4, Operator::Add, &[]).unwrap();
        t.validate().unwrap();
        assert_eq!(t.k(), 4);
        assert_eq!(t.height(), 2);
        assert_eq!(t.leaf_count(), 4);
        assert_eq!(
            t.operand_ids(),
            &[
                SchemaNodeId::new(2, 0),
                SchemaNodeId::new(2, 1),
                SchemaNodeId::new(2, 2),
                SchemaNodeId::new(2, 3)
            ]
        );
        assert_eq!(t.leaf_set(SchemaNodeId::new(1, 1)), &[3, 4]);
        assert_eq!(t.leaf_set(SchemaNodeId::ROOT), &[1, 2, 3, 4]);
        assert!(SchemaTree::build_complete(3, Operator::Add, &[]).is_err());
        assert!(SchemaTree::build_complete(1, Operator::Add, &[]).is_err());
    }

    #[test]
    fn complete_with_operator_overrides() {
        // product-of-sums vs the default: root add, level-1 mul
        let t = SchemaTree::build_complete(
            4,
            Operator::Mul,
            &[(SchemaNodeId::ROOT, Operator::Add)],
        )
        .unwrap();
        let p = t.reference_evaluate(&[2, 3, 5, 7]).unwrap();
        assert_eq!(p.value, 2 * 3 + 5 * 7);
        assert_eq!(p.trace, "((x1*x2)+(x3*x4))");
        let bad = SchemaTree::build_complete(
            4,
            Operator::Mul,
            &[(SchemaNodeId::new(2, 0), Operator::Add)],
        );
        assert!(matches!(bad, Err(SchemaError::BadOverride(_))));
    }

    #[test]
    fn uneven_expression_tree_shape() {
        // sources may sit at internal levels: y3 at (2,1), y4 at (1,1)
        let t = SchemaTree::build_from_expression("((y1*y2)+y3)*y4").unwrap();
        t.validate().unwrap();
        assert_eq!(t.k(), 4);
        assert_eq!(t.height(), 3);
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(
            t.operand_ids(),
            &[
                SchemaNodeId::new(3, 0),
                SchemaNodeId::new(3, 1),
                SchemaNodeId::new(2, 1),
                SchemaNodeId::new(1, 1)
            ]
        );
        assert_eq!(t.operand_name(3), "y3");
        assert_eq!(t.leaf_set(SchemaNodeId::new(1, 0)), &[1, 2, 3]);
        let p = t.reference_evaluate(&[2, 3, 5, 7]).unwrap();
        assert_eq!(p.value, ((2 * 3) + 5) * 7);
        assert_eq!(p.trace, "(((y1*y2)+y3)*y4)");
    }

    #[test]
    fn identity_expression() {
        let t = SchemaTree::build_from_expression("x1").unwrap();
        assert_eq!(t.k(), 1);
        assert_eq!(t.height(), 0);
        assert!(t.is_source(SchemaNodeId::ROOT));
        let p = t.reference_evaluate(&[42]).unwrap();
        assert_eq!((p.value, p.trace.as_str()), (42, "x1"));
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            SchemaTree::build_from_expression("a+b+c"),
            Err(SchemaError::Parse { .. })
        ));
        assert!(matches!(
            SchemaTree::build_from_expression("(a+b"),
            Err(SchemaError::Parse { .. })
        ));
        assert!(matches!(
            SchemaTree::build_from_expression("a++b"),
            Err(SchemaError::Parse { .. })
        ));
        assert!(matches!(
            SchemaTree::build_from_expression("a+a"),
            Err(SchemaError::DuplicateOperand(_))
        ));
        assert!(matches!(
            SchemaTree::build_from_expression("1a+b"),
            Err(SchemaError::Parse { .. })
        ));
        assert!(matches!(
            SchemaTree::build_from_expression(""),
            Err(SchemaError::Parse { .. })
        ));
    }

    #[test]
    fn combine_fixes_orientation_from_ids() {
        let t = SchemaTree::build_complete(2, Operator::Append, &[]).unwrap();
        let l = (SchemaNodeId::new(1, 0), &Payload::atom("x1", 5), 9u64);
        let r = (SchemaNodeId::new(1, 1), &Payload::atom("x2", 6), 9u64);
        let (pid, fwd) = t.combine(l, r).unwrap();
        let (_, rev) = t.combine(r, l).unwrap();
        assert_eq!(pid, SchemaNodeId::ROOT);
        assert_eq!(fwd, rev);
        assert_eq!(fwd.trace, "(x1#x2)");
        // the operator itself is order-sensitive
        assert_ne!(
            Operator::Append.apply(5, 6),
            Operator::Append.apply(6, 5)
        );
    }

    #[test]
    fn combine_rejects_bad_pairs() {
        let t = SchemaTree::build_complete(4, Operator::Add, &[]).unwrap();
        let p = Payload::atom("x1", 1);
        let a = (SchemaNodeId::new(2, 0), &p, 1u64);
        let cousin = (SchemaNodeId::new(2, 2), &p, 1u64);
        assert!(matches!(
            t.combine(a, cousin),
            Err(SchemaError::NotSiblings(_, _))
        ));
        let stale = (SchemaNodeId::new(2, 1), &p, 2u64);
        assert!(matches!(
            t.combine(a, stale),
            Err(SchemaError::RoundMismatch(1, 2))
        ));
        let foreign = (SchemaNodeId::new(9, 0), &p, 1u64);
        assert!(matches!(
            t.combine(a, foreign),
            Err(SchemaError::UnknownNode(_))
        ));
    }

    #[test]
    fn wrong_operand_count_rejected() {
        let t = SchemaTree::build_complete(4, Operator::Add, &[]).unwrap();
        assert!(matches!(
            t.reference_evaluate(&[1, 2, 3]),
            Err(SchemaError::WrongOperandCount {
                expected: 4,
                got: 3
            })
        ));
    }

    /// Combine payloads in an arbitrary feasible order; the root payload must
    /// match the straight recursive evaluation regardless of order.
    pub(super) fn scrambled_combine(t: &SchemaTree, values: &[i64], shuffle_seed: u64) -> Payload {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed);
        let mut pool: Vec<(SchemaNodeId, Payload)> = (1..=t.k())
            .map(|k| {
                (
                    t.operand_id(k),
                    Payload::atom(t.operand_name(k), values[k - 1]),
                )
            })
            .collect();
        while pool.len() > 1 {
            let mut pairs: Vec<(usize, usize)> = Vec::new();
            for i in 0..pool.len() {
                for j in (i + 1)..pool.len() {
                    if pool[i].0.sibling() == Some(pool[j].0) {
                        pairs.push((i, j));
                    }
                }
            }
            let &(i, j) = pairs.choose(&mut rng).expect("some pair is combinable");
            let (id_j, pay_j) = pool.swap_remove(j);
            let (id_i, pay_i) = pool.swap_remove(i);
            let (pid, parent) = t
                .combine((id_i, &pay_i, 0), (id_j, &pay_j, 0))
                .expect("siblings combine");
            pool.push((pid, parent));
        }
        pool.pop().expect("root remains").1
    }

    #[test]
    fn combine_order_independence_on_fixed_trees() {
        let trees = [
            SchemaTree::build_complete(8, Operator::Append, &[]).unwrap(),
            SchemaTree::build_from_expression("((y1*y2)+y3)*y4").unwrap(),
            SchemaTree::build_from_expression("(a#(b#(c#d)))#e").unwrap(),
        ];
        for t in &trees {
            let values: Vec<i64> = (1..=t.k() as i64).map(|v| v * 31 + 7).collect();
            let reference = t.reference_evaluate(&values).unwrap();
            for seed in 0..20 {
                assert_eq!(scrambled_combine(t, &values, seed), reference);
            }
        }
    }
}
