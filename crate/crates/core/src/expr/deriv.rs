use super::{BinOp, Expr, Node, UnaryFn, Var};

pub(super) fn derivative(e: &Expr, var: Var) -> Expr {
    match &e.node {
        Node::Const(_) => c(0.0),
        Node::Var(v) => c(if *v == var { 1.0 } else { 0.0 }),
        Node::Unary(f, a) => {
            let da = derivative(a, var);
            let a = (**a).clone();
            match f {
                UnaryFn::Neg => neg(da),
                UnaryFn::Sin => mul(un(UnaryFn::Cos, a), da),
                UnaryFn::Cos => neg(mul(un(UnaryFn::Sin, a), da)),
                UnaryFn::Exp => mul(un(UnaryFn::Exp, a), da),
                UnaryFn::Ln => div(da, a),
                UnaryFn::Sqrt => div(da, mul(c(2.0), un(UnaryFn::Sqrt, a))),
                UnaryFn::Abs => mul(div(a.clone(), un(UnaryFn::Abs, a)), da),
            }
        }
        Node::Binary(op, a, b) => {
            let da = derivative(a, var);
            let db = derivative(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b.clone()), mul(a, db)),
                BinOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), pow(b, c(2.0))),
                BinOp::Pow => {
                    if !depends_on(&b, var) {
                        let lowered = sub(b.clone(), c(1.0));
                        mul(mul(b, pow(a, lowered)), da)
                    } else if !depends_on(&a, var) {
                        mul(mul(pow(a.clone(), b), un(UnaryFn::Ln, a)), db)
                    } else {
                        // d(a^b) = a^b (b' ln a + b a'/a)
                        let whole = pow(a.clone(), b.clone());
                        let inner = add(mul(db, un(UnaryFn::Ln, a.clone())), div(mul(b, da), a));
                        mul(whole, inner)
                    }
                }
            }
        }
    }
}

fn depends_on(e: &Expr, var: Var) -> bool {
    e.variables().contains(&var)
}

fn c(v: f64) -> Expr {
    Expr::constant(v)
}

fn as_const(e: &Expr) -> Option<f64> {
    match e.node {
        Node::Const(v) => Some(v),
        _ => None,
    }
}

fn un(f: UnaryFn, a: Expr) -> Expr {
    Expr::unary(f, a)
}

fn neg(a: Expr) -> Expr {
    match as_const(&a) {
        Some(v) => c(-v),
        None => un(UnaryFn::Neg, a),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::binary(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => c(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => c(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr::binary(BinOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_const(&a), as_const(&b)) {
        (Some(0.0), _) => c(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::binary(BinOp::Div, a, b),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match as_const(&b) {
        Some(1.0) => a,
        Some(0.0) => c(1.0),
        _ => Expr::binary(BinOp::Pow, a, b),
    }
}
