//! Closed-form scalar expressions and their Taylor-jet evaluation.

mod ast;
mod jet;
mod parser;

pub use ast::{eval_jet, BinOp, Env, EvalError, Expr, Func, Var, MAX_COORDS};
pub use jet::{Jet, Scalar, MAX_ORDER};
pub use parser::{parse, parse_in, ParseError};

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn jet_of(src: &str, t: f64, order: usize) -> Vec<f64> {
        let e = parse(src).unwrap();
        eval_jet(&e, &Env::with_t(Jet::variable(t, order)), order)
            .unwrap()
            .into_coeffs()
    }

    #[test]
    fn taylor_coefficients_of_basic_curves() {
        let c = jet_of("cos(t)", 0.0, 4);
        for (a, b) in c.iter().zip([1.0, 0.0, -0.5, 0.0, 1.0 / 24.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert_eq!(jet_of("t", 3.0, 2), vec![3.0, 1.0, 0.0]);
        let s = jet_of("sin(t)", 0.0, 3);
        for (a, b) in s.iter().zip([0.0, 1.0, 0.0, -1.0 / 6.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn constant_expression_is_padded_to_order() {
        assert_eq!(jet_of("2*3", 0.0, 3), vec![6.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let e = parse("1 + log(t - 2)").unwrap();
        let err = eval_jet(&e, &Env::with_t(Jet::variable(1.0, 1)), 1).unwrap_err();
        match err {
            EvalError::Domain { expr, .. } => assert_eq!(expr, "log(t-2)"),
            other => panic!("unexpected {other:?}"),
        }
        let e = parse("sqrt(t)").unwrap();
        assert!(e.eval(&Env::with_t(-1.0)).is_err());
        let e = parse("1/(t-1)").unwrap();
        assert!(matches!(
            e.eval(&Env::with_t(1.0)),
            Err(EvalError::Domain { .. })
        ));
        let e = parse("x1").unwrap();
        assert_eq!(
            e.eval::<f64>(&Env::with_t(1.0)),
            Err(EvalError::Unbound(Var::X(0)))
        );
    }

    #[test]
    fn order_above_five_is_rejected() {
        let e = parse("t").unwrap();
        assert_eq!(
            eval_jet(&e, &Env::with_t(Jet::variable(0.0, 6)), 6),
            Err(EvalError::OrderTooHigh(6))
        );
    }
}
