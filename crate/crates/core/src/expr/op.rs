use core::f64::consts::PI;
use core::fmt;

use serde::{Deserialize, Serialize};

/// One instruction of the symbolic-regression instruction set.
///
/// Every operator is total over `f64`: domain errors produce NaN or an
/// infinity, which then propagates through enclosing expressions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Square,
    Cube,
    Sin,
    Cos,
    Log,
    Exp,
}

impl Op {
    pub const COUNT: usize = 11;

    /// All operators, in feature-index order.
    pub const ALL: [Op; Op::COUNT] = [
        Op::Add,
        Op::Sub,
        Op::Mul,
        Op::Div,
        Op::Sqrt,
        Op::Square,
        Op::Cube,
        Op::Sin,
        Op::Cos,
        Op::Log,
        Op::Exp,
    ];

    pub fn arity(self) -> usize {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div => 2,
            _ => 1,
        }
    }

    /// Position of the operator in [`Op::ALL`]; used for one-hot encodings.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_commutative(self) -> bool {
        matches!(self, Op::Add | Op::Mul)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Div => "div",
            Op::Sqrt => "sqrt",
            Op::Square => "square",
            Op::Cube => "cube",
            Op::Sin => "sin",
            Op::Cos => "cos",
            Op::Log => "log",
            Op::Exp => "exp",
        }
    }

    pub fn from_symbol(symbol: &str) -> Option<Op> {
        Op::ALL.iter().copied().find(|op| op.symbol() == symbol)
    }

    #[inline]
    pub fn apply1(self, a: f64) -> f64 {
        match self {
            Op::Sqrt => libm::sqrt(a),
            Op::Square => a * a,
            Op::Cube => a * a * a,
            Op::Sin => libm::sin(a),
            Op::Cos => libm::cos(a),
            Op::Log => libm::log(a),
            Op::Exp => libm::exp(a),
            _ => panic!("{} is binary", self.symbol()),
        }
    }

    #[inline]
    pub fn apply2(self, a: f64, b: f64) -> f64 {
        match self {
            Op::Add => a + b,
            Op::Sub => a - b,
            Op::Mul => a * b,
            Op::Div => a / b,
            _ => panic!("{} is unary", self.symbol()),
        }
    }

    /// Elementwise application over argument vectors of equal length.
    pub fn apply_slices(self, args: &[&[f64]], out: &mut [f64]) {
        debug_assert_eq!(args.len(), self.arity());
        match args {
            [a] => {
                for (o, &x) in out.iter_mut().zip(a.iter()) {
                    *o = self.apply1(x);
                }
            }
            [a, b] => {
                for ((o, &x), &y) in out.iter_mut().zip(a.iter()).zip(b.iter()) {
                    *o = self.apply2(x, y);
                }
            }
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A leaf of an expression tree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Terminal {
    /// Input variable, 0-based column index.
    Var(usize),
    Const(f64),
}

impl Terminal {
    pub fn is_var(&self) -> bool {
        matches!(self, Terminal::Var(_))
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Terminal::Var(i) => write!(f, "x{i}"),
            Terminal::Const(c) if c == PI => f.write_str("pi"),
            Terminal::Const(c) => write!(f, "{c}"),
        }
    }
}

/// The instruction set and constant pool available to program generation.
#[derive(Clone, Debug, PartialEq)]
pub struct Dsl {
    pub ops: alloc::vec::Vec<Op>,
    pub constants: alloc::vec::Vec<f64>,
}

impl Dsl {
    /// All eleven operators with the constants 0, 1, 2, 3 and pi.
    pub fn standard() -> Self {
        Dsl {
            ops: Op::ALL.to_vec(),
            constants: alloc::vec![0.0, 1.0, 2.0, 3.0, PI],
        }
    }

    /// Terminal set for a task of the given arity: every variable, then every constant.
    pub fn terminals(&self, arity: usize) -> alloc::vec::Vec<Terminal> {
        (0..arity)
            .map(Terminal::Var)
            .chain(self.constants.iter().map(|&c| Terminal::Const(c)))
            .collect()
    }
}

impl Default for Dsl {
    fn default() -> Self {
        Dsl::standard()
    }
}
