//! Scalar root finding: bracketed bisection, Newton polish and the
//! cancellation-free quadratic root.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct Root {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Bisection on `[lo, hi]`. Requires a verified sign change; stops when the
/// bracket is narrower than `xtol` or an exact zero is hit.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            fx: fa,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            fx: fb,
            iterations: 0,
        });
    }
    if !(fa.signum() != fb.signum()) || fa.is_nan() || fb.is_nan() {
        return Err(Error::RootNotBracketed {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(Root {
                x: m,
                fx: fm,
                iterations: it,
            });
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if (b - a).abs() <= xtol {
            break;
        }
    }
    let x = 0.5 * (a + b);
    Ok(Root {
        x,
        fx: f(x),
        iterations: it,
    })
}

/// A few Newton steps from `x`, rejected whenever they leave `[lo, hi]` or
/// fail to reduce |f|.
pub fn newton_polish<F, D>(mut f: F, mut df: D, x: f64, lo: f64, hi: f64, steps: usize) -> Root
where
    F: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let mut best = Root {
        x,
        fx: f(x),
        iterations: 0,
    };
    for i in 0..steps {
        let d = df(best.x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let cand = best.x - best.fx / d;
        if !(cand >= lo && cand <= hi) {
            break;
        }
        let fc = f(cand);
        if !(fc.abs() < best.fx.abs()) {
            break;
        }
        best = Root {
            x: cand,
            fx: fc,
            iterations: i + 1,
        };
        if fc == 0.0 {
            break;
        }
    }
    best
}

/// Number of strict sign changes of `f` on an `n`-interval uniform grid.
pub fn count_sign_changes<F>(mut f: F, lo: f64, hi: f64, n: usize) -> usize
where
    F: FnMut(f64) -> f64,
{
    let mut prev = f(lo).signum();
    let mut changes = 0;
    for i in 1..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let s = f(x).signum();
        if s != prev {
            changes += 1;
        }
        prev = s;
    }
    changes
}

/// Larger root of `a x^2 + b x + c` with `a >= 0`, `c <= 0`, written in the
/// citardauq form `2c / (-b - sqrt(b^2 - 4ac))` so it stays exact as `a -> 0`.
pub fn positive_quadratic_root(a: f64, b: f64, c: f64) -> f64 {
    let disc = b * b - 4.0 * a * c;
    let q = -b - disc.max(0.0).sqrt();
    if q == 0.0 {
        return 0.0;
    }
    2.0 * c / q
}
