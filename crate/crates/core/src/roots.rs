//! Scalar root finding: a closed-form cubic solver and a bracketed Newton
//! iteration.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Real roots of `c3 y^3 + c2 y^2 + c1 y + c0 = 0` with `c3 != 0`, ascending.
///
/// Uses Cardano's formula when the discriminant is positive and the
/// trigonometric form when there are three real roots. Every root is
/// refined by two Newton steps on the polynomial.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    debug_assert!(c3 != 0.0);
    let (a, b, c) = (c2 / c3, c1 / c3, c0 / c3);
    // y = t - a/3  =>  t^3 + p t + q = 0
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let mut roots = if disc > 0.0 {
        // one real root; pick the sign that avoids cancellation
        let sq = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * sq).cbrt();
        let t = if u == 0.0 { 0.0 } else { u - p / (3.0 * u) };
        vec![t - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };

    let poly = |y: f64| ((y + a) * y + b) * y + c;
    let slope = |y: f64| (3.0 * y + 2.0 * a) * y + b;
    for y in roots.iter_mut() {
        for _ in 0..2 {
            let d = slope(*y);
            if d != 0.0 {
                let next = *y - poly(*y) / d;
                if next.is_finite() && poly(next).abs() <= poly(*y).abs() {
                    *y = next;
                }
            }
        }
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Positive roots `x` of `a x^-1/2 + b x^-3/2 + c = 0`, found through the
/// cubic `c y^3 + a y^2 + b = 0` with `y = sqrt(x)`.
pub fn cardano_positive_roots(coef_m12: f64, coef_m32: f64, coef_0: f64) -> Result<Vec<f64>> {
    if coef_m12 == 0.0 && coef_m32 == 0.0 && coef_0 == 0.0 {
        return Err(Error::Domain("all coefficients are zero".into()));
    }
    if !(coef_0 > 0.0) {
        return Err(Error::Precondition(format!(
            "constant coefficient must be positive, got {coef_0}"
        )));
    }
    let mut xs: Vec<f64> = cubic_real_roots(coef_0, coef_m12, 0.0, coef_m32)
        .into_iter()
        .filter(|&y| y > 0.0)
        .map(|y| y * y)
        .collect();
    xs.dedup_by(|x, y| (*x - *y).abs() <= 1e-14 * y.abs());
    Ok(xs)
}

/// The unique positive root of `a x^-1/2 + b x^-3/2 + c = 0`, or `None`
/// when there is no positive root or more than one.
pub fn solve_cardano(coef_m32: f64, coef_m12: f64, coef_0: f64) -> Result<Option<f64>> {
    let roots = cardano_positive_roots(coef_m12, coef_m32, coef_0)?;
    Ok(match roots.as_slice() {
        [x] => Some(*x),
        _ => None,
    })
}

const MAX_NEWTON_ITERS: usize = 200;

/// Zero of `f` on `[lo, hi]` by Newton's method safeguarded with bisection.
///
/// Returns `None` when `f` has the same strict sign at both endpoints. The
/// iterate never leaves the bracket. Iteration stops once `|f(x)| <= tol`
/// and the bracket or the Newton step has shrunk to rounding level, or the
/// 200-iteration budget runs out; the returned point is the best one seen.
pub fn newton_root<F, D>(f: F, df: D, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    let eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("f({x}) = {v}")))
        }
    };
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (eval(a)?, eval(b)?);
    if fa == 0.0 {
        return Ok(Some(a));
    }
    if fb == 0.0 {
        return Ok(Some(b));
    }
    if fa.signum() == fb.signum() {
        return Ok(None);
    }
    let a_negative = fa < 0.0;

    let mut x = if fa.abs() < fb.abs() { a } else { b };
    let mut fx = if fa.abs() < fb.abs() { fa } else { fb };
    let mut best = (x, fx.abs());
    for _ in 0..MAX_NEWTON_ITERS {
        let d = df(x);
        let newton = x - fx / d;
        let next = if d.is_finite() && d != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        fx = eval(x)?;
        if fx.abs() < best.1 {
            best = (x, fx.abs());
        }
        if fx == 0.0 {
            return Ok(Some(x));
        }
        if (fx < 0.0) == a_negative {
            a = x;
        } else {
            b = x;
        }
        let rounding = 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE);
        if best.1 <= tol && (step <= rounding || b - a <= rounding) {
            break;
        }
        if b - a <= rounding {
            break;
        }
    }
    Ok(Some(best.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cardano_examples() {
        assert!((solve_cardano(-2.0, 0.0, 2.0).unwrap().unwrap() - 1.0).abs() < 1e-12);
        assert!((solve_cardano(-4.0, -1.0, 1.0).unwrap().unwrap() - 4.0).abs() < 1e-12);
        assert!((solve_cardano(-27.0, 0.0, 1.0).unwrap().unwrap() - 9.0).abs() < 1e-12);
        assert!(solve_cardano(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cardano_no_positive_root() {
        // c y^3 + a y^2 + b with all positive coefficients
        assert_eq!(solve_cardano(1.0, 1.0, 1.0).unwrap(), None);
    }

    #[test]
    fn cardano_two_positive_roots_is_not_unique() {
        // y^3 - 3y^2 + 2 = (y - 1)(y^2 - 2y - 2): positive roots 1 and 1 + sqrt 3
        let roots = cardano_positive_roots(-3.0, 2.0, 1.0).unwrap();
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 1.0).abs() < 1e-12);
        assert!((roots[1] - (1.0 + 3f64.sqrt()).powi(2)).abs() < 1e-10);
        assert_eq!(solve_cardano(2.0, -3.0, 1.0).unwrap(), None);
    }

    #[test]
    fn cubic_three_real_roots() {
        // (y-1)(y-2)(y-3)
        let r = cubic_real_roots(1.0, -6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_examples() {
        let r = newton_root(|x| x * x - 4.0, |x| 2.0 * x, 1.0, 3.0, 1e-12)
            .unwrap()
            .unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let r = newton_root(
            |b: f64| -b.powf(-1.5) + 1.0,
            |b: f64| 1.5 * b.powf(-2.5),
            0.1,
            10.0,
            1e-12,
        )
        .unwrap()
        .unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        assert_eq!(newton_root(|x| x + 5.0, |_| 1.0, 0.0, 1.0, 1e-12).unwrap(), None);
    }

    #[test]
    fn newton_rejects_non_finite() {
        let r = newton_root(
            |x: f64| if x > 0.5 { f64::NAN } else { x - 0.7 },
            |_| 1.0,
            0.0,
            1.0,
            1e-9,
        );
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn newton_stays_in_bracket_with_bad_derivative() {
        // derivative deliberately wrong; bisection must carry it
        let r = newton_root(|x: f64| x.powi(3) - 0.001, |_| 1e-9, -1.0, 1.0, 1e-12)
            .unwrap()
            .unwrap();
        assert!((r - 0.1).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn cardano_matches_constructed_root(y0 in 0.01f64..100.0, a in -50.0f64..50.0, c in 0.01f64..50.0) {
            // choose b so that y0 is a root of c y^3 + a y^2 + b
            let b = -(c * y0.powi(3) + a * y0 * y0);
            prop_assume!(b < 0.0);
            let x = solve_cardano(b, a, c).unwrap().unwrap();
            prop_assert!((x.sqrt() - y0).abs() <= 1e-9 * y0.max(1.0));
        }
    }
}
