//! The primitive catalog for generated expressions: two constants, two
//! variables, and twenty operators with protected arithmetic.

use std::f64::consts::TAU;

/// Value category under the two-type broadcast system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Scalar,
    Vector,
}

/// What a primitive slot accepts. No primitive requires a scalar argument;
/// elementwise operators take either category and broadcast.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Any,
    Vector,
}

/// How a primitive's output category is determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Out {
    Scalar,
    Vector,
    /// Vector when any argument is a vector, otherwise scalar.
    Promote,
}

/// Elementwise unary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op1 {
    Neg,
    Rec,
    MulTen,
    Square,
    Abs,
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
    Round,
}

/// Denominators smaller than this in magnitude divide to one instead.
pub const DIV_GUARD: f64 = 1e-9;
/// Logarithm arguments smaller than this in magnitude map to zero.
pub const LN_GUARD: f64 = 1e-12;
/// Exponent cap for `exp`, keeping outputs finite.
pub const EXP_CAP: f64 = 50.0;

impl Op1 {
    pub const ALL: [Op1; 11] = [
        Op1::Neg,
        Op1::Rec,
        Op1::MulTen,
        Op1::Square,
        Op1::Abs,
        Op1::Sqrt,
        Op1::Exp,
        Op1::Ln,
        Op1::Sin,
        Op1::Cos,
        Op1::Round,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op1::Neg => "neg",
            Op1::Rec => "rec",
            Op1::MulTen => "multen",
            Op1::Square => "square",
            Op1::Abs => "abs",
            Op1::Sqrt => "sqrt",
            Op1::Exp => "exp",
            Op1::Ln => "ln",
            Op1::Sin => "sin",
            Op1::Cos => "cos",
            Op1::Round => "round",
        }
    }

    pub fn apply(self, v: f64) -> f64 {
        match self {
            Op1::Neg => -v,
            Op1::Rec => {
                if v.abs() > DIV_GUARD {
                    1.0 / v
                } else {
                    1.0
                }
            }
            Op1::MulTen => 10.0 * v,
            Op1::Square => v * v,
            Op1::Abs => v.abs(),
            Op1::Sqrt => v.abs().sqrt(),
            Op1::Exp => v.min(EXP_CAP).exp(),
            Op1::Ln => {
                let a = v.abs();
                if a < LN_GUARD {
                    0.0
                } else {
                    a.ln()
                }
            }
            Op1::Sin => (TAU * v).sin(),
            Op1::Cos => (TAU * v).cos(),
            Op1::Round => v.ceil(),
        }
    }
}

/// Elementwise binary operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op2 {
    Add,
    Sub,
    Mul,
    Div,
}

impl Op2 {
    pub const ALL: [Op2; 4] = [Op2::Add, Op2::Sub, Op2::Mul, Op2::Div];

    pub fn name(self) -> &'static str {
        match self {
            Op2::Add => "add",
            Op2::Sub => "sub",
            Op2::Mul => "mul",
            Op2::Div => "div",
        }
    }

    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            Op2::Add => a + b,
            Op2::Sub => a - b,
            Op2::Mul => a * b,
            Op2::Div => {
                if b.abs() > DIV_GUARD {
                    a / b
                } else {
                    1.0
                }
            }
        }
    }
}

/// Vector reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agg {
    Sum,
    Mean,
    Prod,
    Max,
}

impl Agg {
    pub const ALL: [Agg; 4] = [Agg::Sum, Agg::Mean, Agg::Prod, Agg::Max];

    pub fn name(self) -> &'static str {
        match self {
            Agg::Sum => "sum",
            Agg::Mean => "mean",
            Agg::Prod => "prod",
            Agg::Max => "max",
        }
    }

    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            Agg::Sum => v.iter().sum(),
            Agg::Mean => v.iter().sum::<f64>() / v.len() as f64,
            Agg::Prod => v.iter().product(),
            Agg::Max => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// One catalog entry.
#[derive(Debug, Clone, Copy)]
pub struct PrimitiveInfo {
    pub name: &'static str,
    pub arity: u8,
    pub inputs: &'static [Slot],
    pub output: Out,
}

const fn leaf(name: &'static str, output: Out) -> PrimitiveInfo {
    PrimitiveInfo { name, arity: 0, inputs: &[], output }
}

const fn elementwise1(name: &'static str) -> PrimitiveInfo {
    PrimitiveInfo { name, arity: 1, inputs: &[Slot::Any], output: Out::Promote }
}

const fn elementwise2(name: &'static str) -> PrimitiveInfo {
    PrimitiveInfo { name, arity: 2, inputs: &[Slot::Any, Slot::Any], output: Out::Promote }
}

const fn vector_op(name: &'static str, output: Out) -> PrimitiveInfo {
    PrimitiveInfo { name, arity: 1, inputs: &[Slot::Vector], output }
}

/// The full catalog. Everything a tree may contain appears here and nothing
/// else does.
pub const PRIMITIVES: [PrimitiveInfo; 24] = [
    leaf("a", Out::Scalar),
    leaf("rand", Out::Scalar),
    leaf("index", Out::Vector),
    leaf("x", Out::Vector),
    elementwise2("add"),
    elementwise2("sub"),
    elementwise2("mul"),
    elementwise2("div"),
    elementwise1("neg"),
    elementwise1("rec"),
    elementwise1("multen"),
    elementwise1("square"),
    elementwise1("abs"),
    elementwise1("sqrt"),
    elementwise1("exp"),
    elementwise1("ln"),
    elementwise1("sin"),
    elementwise1("cos"),
    elementwise1("round"),
    vector_op("sum", Out::Scalar),
    vector_op("mean", Out::Scalar),
    vector_op("cum", Out::Vector),
    vector_op("prod", Out::Scalar),
    vector_op("max", Out::Scalar),
];
