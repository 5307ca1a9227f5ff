//! Root refinement on a sign-changing bracket.

use roots::{find_root_brent, SimpleConvergency};

/// Root of `f` in `[a, b]` where `f(a)` and `f(b)` differ in sign (a zero
/// at either end counts). Falls back to bisection if Brent's method does
/// not converge.
pub(crate) fn refine<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let eps = 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let mut conv = SimpleConvergency {
        eps,
        max_iter: 200,
    };
    match find_root_brent(a, b, &mut f, &mut conv) {
        Ok(x) => x.clamp(a.min(b), a.max(b)),
        Err(_) => bisect(f, a, b),
    }
}

fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
