//! Cross-checks the stack-machine evaluator against a plain recursive
//! interpreter written from the operator definitions, over hand-built
//! expressions covering every deterministic primitive.

use proptest::prelude::*;
use proxyforge::gpgen::{
    compile_and_evaluate, init_half_and_half, Agg, ExpressionTree, Node, Op1, Op2,
};
use proxyforge::rng::labeled_stream;

/// Reference semantics, recomputed independently of the compiler: scalars
/// lift to vectors on demand, elementwise operators map, reductions fold.
#[derive(Debug, Clone)]
enum RefVal {
    S(f64),
    V(Vec<f64>),
}

impl RefVal {
    fn as_vec(&self, d: usize) -> Vec<f64> {
        match self {
            RefVal::S(s) => vec![*s; d],
            RefVal::V(v) => v.clone(),
        }
    }

    fn scalar(&self) -> f64 {
        match self {
            RefVal::S(s) => *s,
            RefVal::V(_) => panic!("expected a scalar"),
        }
    }
}

fn ref_unary(op: Op1, v: f64) -> f64 {
    match op {
        Op1::Neg => -v,
        Op1::Rec => {
            if v.abs() > 1e-9 {
                v.recip()
            } else {
                1.0
            }
        }
        Op1::MulTen => v * 10.0,
        Op1::Square => v.powi(2),
        Op1::Abs => v.abs(),
        Op1::Sqrt => v.abs().sqrt(),
        Op1::Exp => f64::min(v, 50.0).exp(),
        Op1::Ln => {
            if v.abs() < 1e-12 {
                0.0
            } else {
                v.abs().ln()
            }
        }
        Op1::Sin => (2.0 * std::f64::consts::PI * v).sin(),
        Op1::Cos => (2.0 * std::f64::consts::PI * v).cos(),
        Op1::Round => v.ceil(),
    }
}

fn ref_binary(op: Op2, a: f64, b: f64) -> f64 {
    match op {
        Op2::Add => a + b,
        Op2::Sub => a - b,
        Op2::Mul => a * b,
        Op2::Div => {
            if b.abs() > 1e-9 {
                a / b
            } else {
                1.0
            }
        }
    }
}

fn interpret(node: &Node, x: &[f64]) -> RefVal {
    let d = x.len();
    match node {
        Node::Const(c) => RefVal::S(*c),
        Node::Rand => panic!("oracle trees are deterministic"),
        Node::X => RefVal::V(x.to_vec()),
        Node::Index => RefVal::V((1..=d).map(|i| i as f64).collect()),
        Node::Unary(op, c) => match interpret(c, x) {
            RefVal::S(s) => RefVal::S(ref_unary(*op, s)),
            RefVal::V(v) => RefVal::V(v.into_iter().map(|e| ref_unary(*op, e)).collect()),
        },
        Node::Binary(op, l, r) => {
            let lv = interpret(l, x);
            let rv = interpret(r, x);
            match (&lv, &rv) {
                (RefVal::S(a), RefVal::S(b)) => RefVal::S(ref_binary(*op, *a, *b)),
                _ => {
                    let a = lv.as_vec(d);
                    let b = rv.as_vec(d);
                    RefVal::V(
                        a.into_iter().zip(b).map(|(ea, eb)| ref_binary(*op, ea, eb)).collect(),
                    )
                }
            }
        }
        Node::Reduce(op, c) => {
            let v = match interpret(c, x) {
                RefVal::V(v) => v,
                RefVal::S(_) => panic!("reduction of a scalar"),
            };
            RefVal::S(match op {
                Agg::Sum => v.iter().sum(),
                Agg::Mean => v.iter().sum::<f64>() / v.len() as f64,
                Agg::Prod => v.iter().product(),
                Agg::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        }
        Node::Cum(c) => {
            let v = match interpret(c, x) {
                RefVal::V(v) => v,
                RefVal::S(_) => panic!("running sum of a scalar"),
            };
            let sums = v
                .iter()
                .scan(0.0, |acc, e| {
                    *acc += e;
                    Some(*acc)
                })
                .collect();
            RefVal::V(sums)
        }
    }
}

const HAND_TREES: [&str; 20] = [
    "sum(x)",
    "mean(square(x))",
    "max(cum(index))",
    "prod(add(x, a=1.0))",
    "sum(sub(mul(x, x), div(a=1.0, x)))",
    "abs(sum(neg(x)))",
    "sqrt(sum(square(sub(x, a=0.5))))",
    "exp(neg(mean(abs(x))))",
    "ln(sum(exp(x)))",
    "sin(mean(x))",
    "cos(sum(div(x, index)))",
    "round(mul(a=3.3, max(x)))",
    "sum(mul(sin(x), cos(x)))",
    "mean(cum(mul(x, index)))",
    "sub(max(x), mean(x))",
    "sum(rec(add(square(x), a=1.0)))",
    "multen(mean(sqrt(x)))",
    "div(sum(square(x)), max(abs(x)))",
    "add(sum(square(x)), mul(a=2.5, max(x)))",
    "prod(round(add(mul(x, a=0.3), index)))",
];

#[test]
fn compiled_programs_match_the_recursive_interpreter() {
    let points: [[f64; 4]; 6] = [
        [0.0, 1.0, -2.0, 0.5],
        [1e-10, -1e-10, 2.0, -3.0],
        [0.25, -0.25, 1.5, -1.5],
        [3.0, 2.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        [-2.5, 1.75, -0.125, 2.25],
    ];
    let rows: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    for text in HAND_TREES {
        let tree: ExpressionTree = text.parse().unwrap();
        let mut rng = labeled_stream(0, "oracle", 0);
        let compiled = compile_and_evaluate(&tree, &rows, &mut rng);
        for (row, got) in rows.iter().zip(&compiled) {
            let want = interpret(tree.root(), row).scalar();
            assert!(
                (got - want).abs() <= 1e-12,
                "{text} at {row:?}: compiled {got} vs reference {want}"
            );
        }
    }
}

#[test]
fn hand_trees_cover_every_deterministic_primitive() {
    let joined = HAND_TREES.join(" ");
    for name in [
        "a=", "index", "x", "add", "sub", "mul", "div", "neg", "rec", "multen", "square", "abs",
        "sqrt", "exp", "ln", "sin", "cos", "round", "sum", "mean", "cum", "prod", "max",
    ] {
        assert!(joined.contains(name), "no hand tree exercises {name}");
    }
}

fn random_tree(seed: u64) -> ExpressionTree {
    let mut rng = labeled_stream(seed, "oracle-gen", 0);
    init_half_and_half(1, 3, 9, true, &mut rng).unwrap().pop().unwrap()
}

proptest! {
    #[test]
    fn text_form_round_trips(seed in any::<u64>()) {
        let tree = random_tree(seed);
        let text = tree.to_string();
        let parsed: ExpressionTree = text.parse().unwrap();
        prop_assert_eq!(&parsed, &tree);
        prop_assert_eq!(parsed.to_string(), text);
    }

    #[test]
    fn generated_trees_are_typed_and_bounded(seed in any::<u64>()) {
        let tree = random_tree(seed);
        prop_assert!(tree.root().check_types().is_ok());
        prop_assert!(tree.depth() >= 3 && tree.depth() <= 9);
    }

    #[test]
    fn deterministic_trees_evaluate_identically_twice(seed in any::<u64>()) {
        let tree = random_tree(seed);
        if tree.contains_rand() {
            return Ok(());
        }
        let rows = vec![vec![0.5, -1.5, 2.0], vec![0.0, 0.0, 0.0]];
        let a = compile_and_evaluate(&tree, &rows, &mut labeled_stream(1, "oracle-a", 0));
        let b = compile_and_evaluate(&tree, &rows, &mut labeled_stream(2, "oracle-b", 0));
        // Bitwise, so non-finite outcomes also count as equal.
        let same = a.iter().zip(&b).all(|(l, r)| l.to_bits() == r.to_bits());
        prop_assert!(same, "{:?} vs {:?}", a, b);
    }
}
