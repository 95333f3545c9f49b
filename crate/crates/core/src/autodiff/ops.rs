use std::rc::Rc;

use super::tape::Var;
use super::tensor::{broadcast_index, broadcast_shape, sum_to_shape, Tensor};
use crate::error::{Error, Result};

/// Floor applied to `|x|` in [`Var::abs`], keeping kinks such as the
/// broken-stick nonlinearity differentiable.
pub const ABS_FLOOR: f64 = 1e-30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    /// Elementwise minimum; ties route the gradient to the first argument.
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryOp {
    Neg,
    /// `max(|x|, ABS_FLOOR)`.
    Abs,
    Log,
    Log1p,
    Exp,
    Powf(f64),
    Tanh,
    Sigmoid,
    Sin,
    Cos,
    /// Half-wave rectification, gradient 0 at 0.
    Relu,
    /// `max(x, c)`; ties take the constant branch.
    MaxScalar(f64),
    Scale(f64),
    Offset(f64),
}

impl UnaryOp {
    fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "neg",
            UnaryOp::Abs => "abs",
            UnaryOp::Log => "log",
            UnaryOp::Log1p => "log1p",
            UnaryOp::Exp => "exp",
            UnaryOp::Powf(_) => "pow",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sigmoid => "sigmoid",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Relu => "relu",
            UnaryOp::MaxScalar(_) => "max_scalar",
            UnaryOp::Scale(_) => "scale",
            UnaryOp::Offset(_) => "offset",
        }
    }

    fn check_domain(self, x: f64) -> Result<()> {
        let bad = match self {
            UnaryOp::Log => x <= 0.0,
            UnaryOp::Log1p => x <= -1.0,
            UnaryOp::Powf(p) => x < 0.0 && p.fract() != 0.0,
            _ => false,
        };
        if bad {
            return Err(Error::Domain(format!("{} of {}", self.name(), x)));
        }
        Ok(())
    }

    fn eval(self, x: f64) -> f64 {
        match self {
            UnaryOp::Neg => -x,
            UnaryOp::Abs => x.abs().max(ABS_FLOOR),
            UnaryOp::Log => x.ln(),
            UnaryOp::Log1p => x.ln_1p(),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Powf(p) => x.powf(p),
            UnaryOp::Tanh => x.tanh(),
            UnaryOp::Sigmoid => sigmoid(x),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Relu => x.max(0.0),
            UnaryOp::MaxScalar(c) => {
                if x > c {
                    x
                } else {
                    c
                }
            }
            UnaryOp::Scale(s) => x * s,
            UnaryOp::Offset(c) => x + c,
        }
    }

    /// Local derivative given input `x` and output `y`.
    fn deriv(self, x: f64, y: f64) -> f64 {
        match self {
            UnaryOp::Neg => -1.0,
            UnaryOp::Abs => {
                if x.abs() > ABS_FLOOR {
                    x.signum()
                } else {
                    0.0
                }
            }
            UnaryOp::Log => 1.0 / x,
            UnaryOp::Log1p => 1.0 / (1.0 + x),
            UnaryOp::Exp => y,
            UnaryOp::Powf(p) => {
                if x == 0.0 && p < 1.0 {
                    0.0
                } else {
                    p * x.powf(p - 1.0)
                }
            }
            UnaryOp::Tanh => 1.0 - y * y,
            UnaryOp::Sigmoid => y * (1.0 - y),
            UnaryOp::Sin => x.cos(),
            UnaryOp::Cos => -x.sin(),
            UnaryOp::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            UnaryOp::MaxScalar(c) => {
                if x > c {
                    1.0
                } else {
                    0.0
                }
            }
            UnaryOp::Scale(s) => s,
            UnaryOp::Offset(_) => 1.0,
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'t> Var<'t> {
    pub fn unary(self, op: UnaryOp) -> Result<Var<'t>> {
        let x = self.value();
        for &v in x.data() {
            op.check_domain(v)?;
        }
        let y = Rc::new(x.map(|v| op.eval(v)));
        let out = (*y).clone();
        self.tape.record(
            op.name(),
            &[self],
            out,
            Box::new(move |g| {
                let data = g
                    .data()
                    .iter()
                    .zip(x.data().iter().zip(y.data()))
                    .map(|(g, (&xv, &yv))| g * op.deriv(xv, yv))
                    .collect();
                vec![Some(Tensor::new(g.shape().to_vec(), data).unwrap())]
            }),
        )
    }

    pub fn binary(self, other: Var<'t>, op: BinaryOp) -> Result<Var<'t>> {
        let a = self.value();
        let b = other.value();
        let shape = broadcast_shape(a.shape(), b.shape())?;
        let ia = broadcast_index(a.shape(), &shape);
        let ib = broadcast_index(b.shape(), &shape);
        let (ad, bd) = (a.data(), b.data());
        let mut out = Vec::with_capacity(ia.len());
        for (&i, &j) in ia.iter().zip(&ib) {
            let (x, y) = (ad[i], bd[j]);
            out.push(match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => {
                    if y == 0.0 {
                        return Err(Error::Domain("division by zero".into()));
                    }
                    x / y
                }
                BinaryOp::Min => {
                    if x <= y {
                        x
                    } else {
                        y
                    }
                }
            });
        }
        let name = match op {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
            BinaryOp::Min => "min",
        };
        let value = Tensor::new(shape.clone(), out)?;
        let need_a = self.requires_grad();
        let need_b = other.requires_grad();
        self.tape.record(
            name,
            &[self, other],
            value,
            Box::new(move |g| {
                let (ad, bd) = (a.data(), b.data());
                let n = g.len();
                let mut ga = if need_a { Some(vec![0.0; n]) } else { None };
                let mut gb = if need_b { Some(vec![0.0; n]) } else { None };
                for k in 0..n {
                    let (x, y, gv) = (ad[ia[k]], bd[ib[k]], g.data()[k]);
                    let (da, db) = match op {
                        BinaryOp::Add => (1.0, 1.0),
                        BinaryOp::Sub => (1.0, -1.0),
                        BinaryOp::Mul => (y, x),
                        BinaryOp::Div => (1.0 / y, -x / (y * y)),
                        BinaryOp::Min => {
                            if x <= y {
                                (1.0, 0.0)
                            } else {
                                (0.0, 1.0)
                            }
                        }
                    };
                    if let Some(ga) = ga.as_mut() {
                        ga[k] = gv * da;
                    }
                    if let Some(gb) = gb.as_mut() {
                        gb[k] = gv * db;
                    }
                }
                let reduce = |v: Option<Vec<f64>>, target: &[usize]| {
                    v.map(|v| sum_to_shape(&Tensor::new(shape.clone(), v).unwrap(), target))
                };
                vec![reduce(ga, a.shape()), reduce(gb, b.shape())]
            }),
        )
    }

    pub fn add(self, o: Var<'t>) -> Result<Var<'t>> {
        self.binary(o, BinaryOp::Add)
    }

    pub fn sub(self, o: Var<'t>) -> Result<Var<'t>> {
        self.binary(o, BinaryOp::Sub)
    }

    pub fn mul(self, o: Var<'t>) -> Result<Var<'t>> {
        self.binary(o, BinaryOp::Mul)
    }

    pub fn div(self, o: Var<'t>) -> Result<Var<'t>> {
        self.binary(o, BinaryOp::Div)
    }

    pub fn minimum(self, o: Var<'t>) -> Result<Var<'t>> {
        self.binary(o, BinaryOp::Min)
    }

    pub fn neg(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Neg)
    }

    pub fn abs(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Abs)
    }

    pub fn log(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Log)
    }

    pub fn log1p(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Log1p)
    }

    pub fn exp(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Exp)
    }

    pub fn powf(self, p: f64) -> Result<Var<'t>> {
        self.unary(UnaryOp::Powf(p))
    }

    pub fn tanh(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Tanh)
    }

    pub fn sigmoid(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Sigmoid)
    }

    pub fn sin(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Sin)
    }

    pub fn cos(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Cos)
    }

    pub fn relu(self) -> Result<Var<'t>> {
        self.unary(UnaryOp::Relu)
    }

    pub fn max_scalar(self, c: f64) -> Result<Var<'t>> {
        self.unary(UnaryOp::MaxScalar(c))
    }

    pub fn scale(self, s: f64) -> Result<Var<'t>> {
        self.unary(UnaryOp::Scale(s))
    }

    pub fn offset(self, c: f64) -> Result<Var<'t>> {
        self.unary(UnaryOp::Offset(c))
    }

    /// Elementwise power with a constant, broadcastable exponent tensor.
    pub fn pow_const(self, exponent: &Tensor) -> Result<Var<'t>> {
        let x = self.value();
        let shape = x.shape().to_vec();
        if broadcast_shape(exponent.shape(), &shape)? != shape {
            return Err(Error::Shape(format!(
                "exponent {:?} does not broadcast to {:?}",
                exponent.shape(),
                shape
            )));
        }
        let ie = broadcast_index(exponent.shape(), &shape);
        let e: Vec<f64> = ie.iter().map(|&i| exponent.data()[i]).collect();
        let mut out = Vec::with_capacity(e.len());
        for (&xv, &p) in x.data().iter().zip(&e) {
            UnaryOp::Powf(p).check_domain(xv)?;
            out.push(xv.powf(p));
        }
        let value = Tensor::new(shape, out)?;
        self.tape.record(
            "pow",
            &[self],
            value,
            Box::new(move |g| {
                let data = g
                    .data()
                    .iter()
                    .zip(x.data().iter().zip(&e))
                    .map(|(g, (&xv, &p))| g * UnaryOp::Powf(p).deriv(xv, 0.0))
                    .collect();
                vec![Some(Tensor::new(g.shape().to_vec(), data).unwrap())]
            }),
        )
    }

    pub fn reshape(self, shape: &[usize]) -> Result<Var<'t>> {
        let x = self.value();
        let old = x.shape().to_vec();
        let value = (*x).clone().reshape(shape.to_vec())?;
        self.tape.record(
            "reshape",
            &[self],
            value,
            Box::new(move |g| vec![Some(g.clone().reshape(old.clone()).unwrap())]),
        )
    }

    /// Transpose of a 2-D tensor.
    pub fn transpose(self) -> Result<Var<'t>> {
        let x = self.value();
        let (r, c) = dims2(x.shape(), "transpose")?;
        let value = Tensor::new(vec![c, r], transpose_data(x.data(), r, c))?;
        self.tape.record(
            "transpose",
            &[self],
            value,
            Box::new(move |g| {
                vec![Some(
                    Tensor::new(vec![r, c], transpose_data(g.data(), c, r)).unwrap(),
                )]
            }),
        )
    }

    /// Matrix product of `[m, k]` and `[k, n]`.
    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        let a = self.value();
        let b = other.value();
        let (m, k) = dims2(a.shape(), "matmul")?;
        let (k2, n) = dims2(b.shape(), "matmul")?;
        if k != k2 {
            return Err(Error::Shape(format!("matmul {:?} x {:?}", a.shape(), b.shape())));
        }
        let value = Tensor::new(vec![m, n], matmul_data(a.data(), b.data(), m, k, n))?;
        let need_a = self.requires_grad();
        let need_b = other.requires_grad();
        self.tape.record(
            "matmul",
            &[self, other],
            value,
            Box::new(move |g| {
                // dA = G Bᵀ, dB = Aᵀ G
                let ga = need_a.then(|| {
                    let bt = transpose_data(b.data(), k, n);
                    Tensor::new(vec![m, k], matmul_data(g.data(), &bt, m, n, k)).unwrap()
                });
                let gb = need_b.then(|| {
                    let at = transpose_data(a.data(), m, k);
                    Tensor::new(vec![k, n], matmul_data(&at, g.data(), k, m, n)).unwrap()
                });
                vec![ga, gb]
            }),
        )
    }
}

fn dims2(shape: &[usize], op: &str) -> Result<(usize, usize)> {
    match shape {
        [r, c] => Ok((*r, *c)),
        _ => Err(Error::Shape(format!("{op} needs a 2-D tensor, got {shape:?}"))),
    }
}

pub(crate) fn transpose_data(x: &[f64], r: usize, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; r * c];
    for i in 0..r {
        for j in 0..c {
            out[j * r + i] = x[i * c + j];
        }
    }
    out
}

pub(crate) fn matmul_data(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            for (o, &bv) in row.iter_mut().zip(&b[p * n..(p + 1) * n]) {
                *o += av * bv;
            }
        }
    }
    out
}
