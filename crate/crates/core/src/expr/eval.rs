use super::{BinOp, Expr, Func};
use crate::error::{GeoError, Result};
use crate::jet::{Jet, MAX_ORDER};

impl Expr {
    /// Evaluate with one jet per variable index. All inputs must share the
    /// same variable count; constants are lifted to `(nvars, order)`.
    pub fn eval_jets(&self, inputs: &[Jet], nvars: usize, order: usize) -> Result<Jet> {
        let out = match self {
            Expr::Num(x) => Jet::constant(*x, nvars, order),
            Expr::Var { index, name } => {
                inputs
                    .get(*index)
                    .cloned()
                    .ok_or_else(|| GeoError::Domain {
                        subexpr: name.clone(),
                        detail: format!("variable index {index} has no value"),
                    })?
            }
            Expr::Neg(a) => -a.eval_jets(inputs, nvars, order)?,
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval_jets(inputs, nvars, order)?;
                match op {
                    BinOp::Add => &a + &rhs.eval_jets(inputs, nvars, order)?,
                    BinOp::Sub => &a - &rhs.eval_jets(inputs, nvars, order)?,
                    BinOp::Mul => &a * &rhs.eval_jets(inputs, nvars, order)?,
                    BinOp::Div => {
                        let b = rhs.eval_jets(inputs, nvars, order)?;
                        if b.value() == 0.0 {
                            return Err(GeoError::DivisionByZero {
                                subexpr: self.to_string(),
                            });
                        }
                        a.div_jet(&b)
                    }
                    BinOp::Pow => self.power(a, rhs, inputs, nvars, order)?,
                }
            }
            Expr::Call { func, args } => {
                if *func == Func::Pow {
                    let a = args[0].eval_jets(inputs, nvars, order)?;
                    self.power(a, &args[1], inputs, nvars, order)?
                } else {
                    let a = args[0].eval_jets(inputs, nvars, order)?;
                    self.unary_call(*func, a)?
                }
            }
        };
        if !out.value().is_finite() {
            return Err(self.domain("result is not finite"));
        }
        Ok(out)
    }

    fn domain(&self, detail: &str) -> GeoError {
        GeoError::Domain {
            subexpr: self.to_string(),
            detail: detail.into(),
        }
    }

    fn power(
        &self,
        base: Jet,
        exponent: &Expr,
        inputs: &[Jet],
        nvars: usize,
        order: usize,
    ) -> Result<Jet> {
        let e = exponent.eval_jets(inputs, nvars, order)?;
        let x = base.value();
        if exponent.is_constant() {
            let p = e.value();
            if p.fract() == 0.0 && p.abs() <= 64.0 {
                let k = p.abs() as u32;
                if p >= 0.0 {
                    return Ok(base.powi(k));
                }
                if x == 0.0 {
                    return Err(GeoError::DivisionByZero {
                        subexpr: self.to_string(),
                    });
                }
                return Ok(base.powi(k).recip());
            }
            if x > 0.0 {
                return Ok(base.powf(p));
            }
            if x == 0.0 && base.order() == 0 && p > 0.0 {
                return Ok(base.powf(p));
            }
            return Err(self.domain("non-integer power of a non-positive base"));
        }
        if x <= 0.0 {
            return Err(self.domain("variable exponent needs a positive base"));
        }
        Ok((&e * &base.ln()).exp())
    }

    fn unary_call(&self, func: Func, a: Jet) -> Result<Jet> {
        let x = a.value();
        let differentiating = a.order() > 0;
        Ok(match func {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => {
                if x.cos() == 0.0 {
                    return Err(self.domain("tan pole"));
                }
                a.tan()
            }
            Func::Sinh => a.sinh(),
            Func::Cosh => a.cosh(),
            Func::Tanh => a.tanh(),
            Func::Asinh => a.asinh(),
            Func::Atanh => {
                if x.abs() >= 1.0 {
                    return Err(self.domain("atanh needs |x| < 1"));
                }
                a.atanh()
            }
            Func::Atan => a.atan(),
            Func::Sqrt => {
                if x < 0.0 || (x == 0.0 && differentiating) {
                    return Err(self.domain("sqrt of a non-positive value"));
                }
                a.sqrt()
            }
            Func::Exp => a.exp(),
            Func::Log => {
                if x <= 0.0 {
                    return Err(self.domain("log of a non-positive value"));
                }
                a.ln()
            }
            Func::Abs => {
                if x == 0.0 && differentiating {
                    return Err(self.domain("abs is not differentiable at 0"));
                }
                a.abs()
            }
            Func::Pow => unreachable!("pow handled separately"),
        })
    }

    /// Plain value at a point.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        Ok(eval_jet(self, point, 0)?.value())
    }
}

/// Taylor jet of `expr` at `point`, with the point's coordinates as the
/// independent variables.
pub fn eval_jet(expr: &Expr, point: &[f64], order: usize) -> Result<Jet> {
    if order > MAX_ORDER {
        return Err(GeoError::OrderTooHigh { requested: order });
    }
    let vars = Jet::variables(point, order);
    expr.eval_jets(&vars, point.len(), order)
}
