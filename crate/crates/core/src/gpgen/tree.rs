//! Expression trees: typed structure, text form, and random generation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::primitives::{Agg, Op1, Op2, Ty};
use super::GpError;
use crate::rng::RandomStream;

/// Range from which constant leaves are sampled.
pub const CONST_RANGE: (f64, f64) = (-10.0, 10.0);

/// One node of an expression. Constants carry their sampled value; `Rand`
/// draws fresh uniform[0,1) at every evaluated point.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Rand,
    X,
    Index,
    Unary(Op1, Box<Node>),
    Binary(Op2, Box<Node>, Box<Node>),
    Reduce(Agg, Box<Node>),
    Cum(Box<Node>),
}

impl Node {
    /// Output category. Elementwise operators promote to vector when any
    /// argument is a vector.
    pub fn ty(&self) -> Ty {
        match self {
            Node::Const(_) | Node::Rand => Ty::Scalar,
            Node::X | Node::Index => Ty::Vector,
            Node::Unary(_, c) => c.ty(),
            Node::Binary(_, a, b) => {
                if a.ty() == Ty::Vector || b.ty() == Ty::Vector {
                    Ty::Vector
                } else {
                    Ty::Scalar
                }
            }
            Node::Reduce(_, _) => Ty::Scalar,
            Node::Cum(_) => Ty::Vector,
        }
    }

    fn children(&self) -> Vec<&Node> {
        match self {
            Node::Const(_) | Node::Rand | Node::X | Node::Index => vec![],
            Node::Unary(_, c) | Node::Reduce(_, c) | Node::Cum(c) => vec![c],
            Node::Binary(_, a, b) => vec![a, b],
        }
    }

    /// Edge count of the longest root-to-leaf path; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        self.children().iter().map(|c| 1 + c.depth()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Verifies the one structural constraint the broadcast rules impose:
    /// reductions and running sums need vector arguments.
    pub fn check_types(&self) -> Result<(), GpError> {
        match self {
            Node::Reduce(op, c) if c.ty() != Ty::Vector => {
                Err(GpError::Type(format!("{} applied to a scalar", op.name())))
            }
            Node::Cum(c) if c.ty() != Ty::Vector => {
                Err(GpError::Type("cum applied to a scalar".into()))
            }
            _ => self.children().into_iter().try_for_each(Node::check_types),
        }
    }

    /// Output category and depth of every node, in preorder.
    pub fn node_info(&self) -> Vec<(Ty, usize)> {
        fn walk(node: &Node, depth: usize, out: &mut Vec<(Ty, usize)>) {
            out.push((node.ty(), depth));
            for c in node.children() {
                walk(c, depth + 1, out);
            }
        }
        let mut out = Vec::with_capacity(self.size());
        walk(self, 0, &mut out);
        out
    }

    /// The subtree rooted at preorder position `index`.
    pub fn subtree(&self, index: usize) -> &Node {
        fn walk<'a>(node: &'a Node, counter: &mut usize, target: usize) -> Option<&'a Node> {
            if *counter == target {
                return Some(node);
            }
            *counter += 1;
            node.children().into_iter().find_map(|c| walk(c, counter, target))
        }
        let mut counter = 0;
        walk(self, &mut counter, index).expect("preorder index out of range")
    }

    /// Replaces the subtree at preorder position `index`.
    pub fn replace(&mut self, index: usize, replacement: Node) {
        fn walk(node: &mut Node, counter: &mut usize, target: usize, new: &mut Option<Node>) {
            if *counter == target {
                *node = new.take().expect("preorder index visited twice");
                return;
            }
            *counter += 1;
            let children: Vec<&mut Node> = match node {
                Node::Const(_) | Node::Rand | Node::X | Node::Index => vec![],
                Node::Unary(_, c) | Node::Reduce(_, c) | Node::Cum(c) => vec![c],
                Node::Binary(_, a, b) => vec![a, b],
            };
            for c in children {
                if new.is_none() {
                    return;
                }
                walk(c, counter, target, new);
            }
        }
        let mut counter = 0;
        let mut slot = Some(replacement);
        walk(self, &mut counter, index, &mut slot);
        assert!(slot.is_none(), "preorder index out of range");
    }

    pub fn contains_rand(&self) -> bool {
        matches!(self, Node::Rand)
            || self.children().into_iter().any(Node::contains_rand)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(v) => write!(f, "a={v:?}"),
            Node::Rand => write!(f, "rand"),
            Node::X => write!(f, "x"),
            Node::Index => write!(f, "index"),
            Node::Unary(op, c) => write!(f, "{}({c})", op.name()),
            Node::Binary(op, a, b) => write!(f, "{}({a}, {b})", op.name()),
            Node::Reduce(op, c) => write!(f, "{}({c})", op.name()),
            Node::Cum(c) => write!(f, "cum({c})"),
        }
    }
}

/// A complete generated expression: type-correct with a scalar root, so the
/// compiled function maps a point to one objective value. Depth limits are
/// enforced by the evolutionary operators, not here, so hand-written shallow
/// expressions remain usable.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionTree {
    root: Node,
}

impl ExpressionTree {
    pub fn new(root: Node) -> Result<Self, GpError> {
        root.check_types()?;
        if root.ty() != Ty::Scalar {
            return Err(GpError::Type("root must be scalar-valued".into()));
        }
        Ok(ExpressionTree { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn contains_rand(&self) -> bool {
        self.root.contains_rand()
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

impl FromStr for ExpressionTree {
    type Err = GpError;

    fn from_str(s: &str) -> Result<Self, GpError> {
        let mut p = Parser { text: s.as_bytes(), pos: 0 };
        let root = p.expression()?;
        p.skip_spaces();
        if p.pos != p.text.len() {
            return Err(GpError::Parse(format!("trailing input at byte {}", p.pos)));
        }
        ExpressionTree::new(root)
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_spaces(&mut self) {
        while self.text.get(self.pos) == Some(&b' ') {
            self.pos += 1;
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), GpError> {
        if self.text.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(GpError::Parse(format!(
                "expected '{}' at byte {}",
                byte as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<&str, GpError> {
        let start = self.pos;
        while self.text.get(self.pos).is_some_and(u8::is_ascii_lowercase) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(GpError::Parse(format!("expected a name at byte {start}")));
        }
        Ok(std::str::from_utf8(&self.text[start..self.pos]).expect("ascii range"))
    }

    fn number(&mut self) -> Result<f64, GpError> {
        let start = self.pos;
        while self
            .text
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
        {
            self.pos += 1;
        }
        let span = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii range");
        span.parse::<f64>()
            .map_err(|_| GpError::Parse(format!("bad constant '{span}' at byte {start}")))
    }

    fn expression(&mut self) -> Result<Node, GpError> {
        self.skip_spaces();
        let at = self.pos;
        let name = self.ident()?.to_owned();
        if name == "a" {
            self.expect(b'=')?;
            return Ok(Node::Const(self.number()?));
        }
        match name.as_str() {
            "rand" => return Ok(Node::Rand),
            "x" => return Ok(Node::X),
            "index" => return Ok(Node::Index),
            _ => {}
        }
        if let Some(op) = Op1::ALL.iter().find(|o| o.name() == name) {
            self.expect(b'(')?;
            let c = self.expression()?;
            self.expect(b')')?;
            return Ok(Node::Unary(*op, Box::new(c)));
        }
        if let Some(op) = Op2::ALL.iter().find(|o| o.name() == name) {
            self.expect(b'(')?;
            let a = self.expression()?;
            self.expect(b',')?;
            let b = self.expression()?;
            self.expect(b')')?;
            return Ok(Node::Binary(*op, Box::new(a), Box::new(b)));
        }
        if let Some(op) = Agg::ALL.iter().find(|o| o.name() == name) {
            self.expect(b'(')?;
            let c = self.expression()?;
            self.expect(b')')?;
            return Ok(Node::Reduce(*op, Box::new(c)));
        }
        if name == "cum" {
            self.expect(b'(')?;
            let c = self.expression()?;
            self.expect(b')')?;
            return Ok(Node::Cum(Box::new(c)));
        }
        Err(GpError::Parse(format!("unknown primitive '{name}' at byte {at}")))
    }
}

/// Non-terminal choices available for each required output category:
/// scalar = 4 binary + 11 unary + 4 reductions, vector = 4 binary + 11
/// unary + cum. Used to weight the grow rule's terminal probability the way
/// a catalog-proportional draw would.
fn terminal_ratio(required: Ty, include_rand: bool) -> f64 {
    let terminals = match (required, include_rand) {
        (Ty::Scalar, true) => 2.0,
        (Ty::Scalar, false) => 1.0,
        (Ty::Vector, _) => 2.0,
    };
    let internals = match required {
        Ty::Scalar => 19.0,
        Ty::Vector => 16.0,
    };
    terminals / (terminals + internals)
}

fn random_terminal(rng: &mut RandomStream, required: Ty, include_rand: bool) -> Node {
    match required {
        Ty::Scalar => {
            if include_rand && rng.gen::<bool>() {
                Node::Rand
            } else {
                Node::Const(rng.gen_range(CONST_RANGE.0..=CONST_RANGE.1))
            }
        }
        Ty::Vector => {
            if rng.gen::<bool>() {
                Node::X
            } else {
                Node::Index
            }
        }
    }
}

/// Grows one node. `full` keeps every branch internal until the target
/// depth; otherwise terminals become available from `min_depth` on, at the
/// catalog-proportional rate.
pub(crate) fn random_subtree(
    rng: &mut RandomStream,
    required: Ty,
    depth: usize,
    target: usize,
    full: bool,
    min_depth: usize,
    include_rand: bool,
) -> Node {
    let at_limit = depth >= target;
    let may_terminate = !full && depth >= min_depth;
    if at_limit || (may_terminate && rng.gen::<f64>() < terminal_ratio(required, include_rand)) {
        return random_terminal(rng, required, include_rand);
    }
    let choice = match required {
        Ty::Scalar => rng.gen_range(0..19usize),
        Ty::Vector => rng.gen_range(0..16usize),
    };
    let child = |rng: &mut RandomStream, ty| {
        Box::new(random_subtree(rng, ty, depth + 1, target, full, min_depth, include_rand))
    };
    match (required, choice) {
        // Binary elementwise: a scalar result needs scalar arguments; a
        // vector result needs at least one vector argument.
        (Ty::Scalar, 0..=3) => {
            let op = Op2::ALL[choice];
            let a = child(rng, Ty::Scalar);
            let b = child(rng, Ty::Scalar);
            Node::Binary(op, a, b)
        }
        (Ty::Vector, 0..=3) => {
            let op = Op2::ALL[choice];
            let (ta, tb) = match rng.gen_range(0..3u8) {
                0 => (Ty::Vector, Ty::Vector),
                1 => (Ty::Vector, Ty::Scalar),
                _ => (Ty::Scalar, Ty::Vector),
            };
            let a = child(rng, ta);
            let b = child(rng, tb);
            Node::Binary(op, a, b)
        }
        (_, 4..=14) => {
            let op = Op1::ALL[choice - 4];
            Node::Unary(op, child(rng, required))
        }
        (Ty::Scalar, 15..=18) => {
            let op = Agg::ALL[choice - 15];
            Node::Reduce(op, child(rng, Ty::Vector))
        }
        (Ty::Vector, 15) => Node::Cum(child(rng, Ty::Vector)),
        _ => unreachable!("choice out of range"),
    }
}

/// Ramped half-and-half initialization: per individual, a target depth
/// uniform in `[min_depth, max_depth]` and a coin flip between the full rule
/// and the grow rule.
pub fn init_half_and_half(
    n_pop: usize,
    min_depth: usize,
    max_depth: usize,
    include_rand: bool,
    rng: &mut RandomStream,
) -> Result<Vec<ExpressionTree>, GpError> {
    if min_depth < 3 || min_depth > max_depth {
        return Err(GpError::InvalidParams(format!(
            "depth window [{min_depth}, {max_depth}] out of order or below 3"
        )));
    }
    (0..n_pop)
        .map(|_| {
            let target = rng.gen_range(min_depth..=max_depth);
            let full = rng.gen::<bool>();
            let root =
                random_subtree(rng, Ty::Scalar, 0, target, full, min_depth, include_rand);
            ExpressionTree::new(root)
        })
        .collect()
}
