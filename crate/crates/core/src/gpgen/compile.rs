//! Stack-machine compilation of expression trees.
//!
//! Trees are flattened once into postfix instructions and then evaluated per
//! design point, which keeps the per-point cost to a linear instruction walk
//! instead of a pointer chase.

use rand::Rng;

use super::primitives::{Agg, Op1, Op2};
use super::tree::{ExpressionTree, Node};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Instr {
    Push(f64),
    Rand,
    X,
    Index,
    Un(Op1),
    Bin(Op2),
    Red(Agg),
    Cum,
}

/// Scalars stay unlifted until an operator forces a broadcast.
#[derive(Debug, Clone)]
enum Val {
    S(f64),
    V(Vec<f64>),
}

/// A compiled expression, evaluated point by point. `rand` instructions draw
/// from the stream in instruction order, so identical streams give identical
/// outputs.
#[derive(Debug, Clone)]
pub struct CompiledProgram {
    code: Vec<Instr>,
}

impl CompiledProgram {
    pub fn new(tree: &ExpressionTree) -> Self {
        let mut code = Vec::with_capacity(tree.size());
        flatten(tree.root(), &mut code);
        CompiledProgram { code }
    }

    /// Value of the expression at one point.
    pub fn eval_point(&self, x: &[f64], rng: &mut RandomStream) -> f64 {
        let mut stack: Vec<Val> = Vec::with_capacity(8);
        for instr in &self.code {
            match instr {
                Instr::Push(c) => stack.push(Val::S(*c)),
                Instr::Rand => stack.push(Val::S(rng.gen::<f64>())),
                Instr::X => stack.push(Val::V(x.to_vec())),
                Instr::Index => {
                    stack.push(Val::V((1..=x.len()).map(|i| i as f64).collect()))
                }
                Instr::Un(op) => {
                    let v = stack.pop().expect("unary argument");
                    stack.push(match v {
                        Val::S(s) => Val::S(op.apply(s)),
                        Val::V(mut v) => {
                            for e in &mut v {
                                *e = op.apply(*e);
                            }
                            Val::V(v)
                        }
                    });
                }
                Instr::Bin(op) => {
                    let b = stack.pop().expect("right argument");
                    let a = stack.pop().expect("left argument");
                    stack.push(broadcast(*op, a, b));
                }
                Instr::Red(op) => {
                    let Val::V(v) = stack.pop().expect("reduction argument") else {
                        unreachable!("type checker admits only vector reductions")
                    };
                    stack.push(Val::S(op.apply(&v)));
                }
                Instr::Cum => {
                    let Val::V(mut v) = stack.pop().expect("cum argument") else {
                        unreachable!("type checker admits only vector running sums")
                    };
                    let mut acc = 0.0;
                    for e in &mut v {
                        acc += *e;
                        *e = acc;
                    }
                    stack.push(Val::V(v));
                }
            }
        }
        let Some(Val::S(out)) = stack.pop() else {
            unreachable!("scalar root invariant")
        };
        debug_assert!(stack.is_empty());
        out
    }
}

fn broadcast(op: Op2, a: Val, b: Val) -> Val {
    match (a, b) {
        (Val::S(a), Val::S(b)) => Val::S(op.apply(a, b)),
        (Val::V(mut a), Val::S(b)) => {
            for e in &mut a {
                *e = op.apply(*e, b);
            }
            Val::V(a)
        }
        (Val::S(a), Val::V(mut b)) => {
            for e in &mut b {
                *e = op.apply(a, *e);
            }
            Val::V(b)
        }
        (Val::V(mut a), Val::V(b)) => {
            for (e, r) in a.iter_mut().zip(&b) {
                *e = op.apply(*e, *r);
            }
            Val::V(a)
        }
    }
}

fn flatten(node: &Node, code: &mut Vec<Instr>) {
    match node {
        Node::Const(v) => code.push(Instr::Push(*v)),
        Node::Rand => code.push(Instr::Rand),
        Node::X => code.push(Instr::X),
        Node::Index => code.push(Instr::Index),
        Node::Unary(op, c) => {
            flatten(c, code);
            code.push(Instr::Un(*op));
        }
        Node::Binary(op, a, b) => {
            flatten(a, code);
            flatten(b, code);
            code.push(Instr::Bin(*op));
        }
        Node::Reduce(op, c) => {
            flatten(c, code);
            code.push(Instr::Red(*op));
        }
        Node::Cum(c) => {
            flatten(c, code);
            code.push(Instr::Cum);
        }
    }
}

/// Evaluates the expression at every row of `x`, drawing `rand` values from
/// `rng` in row order.
pub fn compile_and_evaluate(
    tree: &ExpressionTree,
    x: &[Vec<f64>],
    rng: &mut RandomStream,
) -> Vec<f64> {
    let prog = CompiledProgram::new(tree);
    x.iter().map(|row| prog.eval_point(row, rng)).collect()
}
